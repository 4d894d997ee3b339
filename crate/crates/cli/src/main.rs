use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use knapsack::groups::Budget;
use knapsack::oracle::compare;
use knapsack::par::Exec;
use knapsack::{solve_exponent, ExponentExpression, Group, GroupDesc, SemilinearSet, SolveCtx};
use serde_json::json;

/// Solve exponent equations over groups described in JSON.
#[derive(Parser)]
#[command(name = "knapsack", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the solution set of an expression as JSON.
    Solve {
        #[command(flatten)]
        input: Input,
        /// Upper limit on refinement length; below the proven bound the run fails unless --fast.
        #[arg(long, alias = "budget")]
        budget_refinement: Option<usize>,
        /// Upper limit on automaton trajectories explored per two-variable subproblem.
        #[arg(long)]
        budget_automata: Option<usize>,
        /// Lower every search limit and accept an incomplete answer.
        #[arg(long)]
        fast: bool,
        /// Pretty-print with this many spaces of indentation.
        #[arg(long)]
        json_indent: Option<usize>,
        /// Run without worker threads.
        #[arg(long)]
        sequential: bool,
    },
    /// Compare a stored solution set with enumeration over `[0, N]^X`.
    Verify {
        #[command(flatten)]
        input: Input,
        /// JSON file holding `{"vars": .., "components": ..}`; extra fields are ignored.
        #[arg(long)]
        result: PathBuf,
        #[arg(long = "box", default_value_t = 12)]
        box_bound: u64,
        #[arg(long)]
        json_indent: Option<usize>,
    },
}

#[derive(Args)]
struct Input {
    /// Group description file.
    #[arg(long)]
    group: PathBuf,
    /// Expression such as `(a b)^x c (a')^y`.
    #[arg(long)]
    expr: String,
}

/// Exit status for a failed verification.
const VERIFY_FAILED: u8 = 3;

enum Failure {
    Input(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Budget(_) => 2,
        }
    }
}

fn load(input: &Input) -> Result<(std::sync::Arc<dyn Group>, ExponentExpression), Failure> {
    let text = read(&input.group)?;
    let desc = GroupDesc::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", input.group.display())))?;
    let g = desc.build().map_err(|e| Failure::Input(format!("{}: {e}", input.group.display())))?;
    let e = ExponentExpression::parse_with_alphabet(&input.expr, &g.generators())
        .map_err(|e| Failure::Input(format!("expression: {e}")))?;
    for l in e.head.iter().chain(e.factors.iter().flat_map(|f| f.period.iter().chain(&f.tail))) {
        if g.gen_elem(&l.name).is_none() {
            return Err(Failure::Input(format!("expression: unknown generator `{}`", l.name)));
        }
    }
    Ok((g, e))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn render(v: &serde_json::Value, indent: Option<usize>) -> String {
    match indent {
        None => v.to_string(),
        Some(n) => {
            let pad = vec![b' '; n];
            let fmt = serde_json::ser::PrettyFormatter::with_indent(&pad);
            let mut out = Vec::new();
            let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
            serde::Serialize::serialize(v, &mut ser).expect("JSON value serializes");
            String::from_utf8(out).expect("serde_json writes UTF-8")
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Solve { input, budget_refinement, budget_automata, fast, json_indent, sequential } => {
            let (g, e) = load(&input)?;
            let mut budget = if fast { Budget::fast() } else { Budget::default() };
            if fast {
                eprintln!("warning: --fast lowers search limits; the result may miss solutions");
            }
            budget.refinement = budget_refinement;
            if let Some(a) = budget_automata {
                budget.automata_cap = a;
            }
            let exec = if sequential { Exec::Sequential } else { Exec::Parallel };
            let ctx = SolveCtx::new(budget, exec);
            let mut set = solve_exponent(g.as_ref(), &e, &ctx).map_err(|err| {
                if err.is_budget() {
                    Failure::Budget(err.to_string())
                } else {
                    Failure::Input(err.to_string())
                }
            })?;
            set.components.sort();
            let out = json!({
                "vars": set.vars,
                "components": set.components,
                "diagnostics": ctx.diag.report(),
            });
            println!("{}", render(&out, json_indent));
            Ok(0)
        }
        Cmd::Verify { input, result, box_bound, json_indent } => {
            let (g, e) = load(&input)?;
            let text = read(&result)?;
            let set: SemilinearSet =
                serde_json::from_str(&text).map_err(|err| Failure::Input(format!("{}: {err}", result.display())))?;
            let set = SemilinearSet::from_components(set.vars, set.components)
                .map_err(|err| Failure::Input(format!("{}: {err}", result.display())))?;
            let report = compare(g.as_ref(), &e, &set, box_bound, Exec::Parallel)
                .map_err(|err| Failure::Input(err.to_string()))?;
            let mut out = serde_json::to_value(&report).expect("report serializes");
            out["pass"] = json!(report.pass());
            println!("{}", render(&out, json_indent));
            Ok(if report.pass() { 0 } else { VERIFY_FAILED })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            match &f {
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Budget(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
