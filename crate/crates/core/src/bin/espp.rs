use clap::{Parser, Subcommand, ValueEnum};
use espp::criteria::{certify_unsolvable, InstanceRef};
use espp::families::{self, FamilyParams};
use espp::fluid::{self, FluidProblem, TransferPlan};
use espp::instance::{EsppInstance, IncompleteInstance};
use espp::json::{InstanceJson, JsonInt};
use espp::oracle::{self, Verdict};
use espp::rational::{format_rational, parse_rational, Rational};
use espp::rounding::{LinearFamily, LinearSetup, Outcome};
use espp::scanner;
use espp::slack::{slack, slack_at, SlackRange};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::{json, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Tools for the equal sum partition problem.
#[derive(Parser)]
#[command(name = "espp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Slack of a complete or incomplete instance, with the value at every block end.
    Slack {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Checks the instance invariants.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Solves the fluid relaxation of an instance, or a fluid problem given directly.
    SolveFluid {
        #[arg(long, conflicts_with = "problem", required_unless_present = "problem")]
        instance: Option<PathBuf>,
        #[arg(long)]
        problem: Option<PathBuf>,
    },
    /// Checks a transfer plan against a fluid problem.
    VerifyPlan {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Runs the unsolvability criteria.
    CheckCriteria {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Emits certified members of the unsolvable family for ratio `a`.
    GenFamily {
        #[arg(long)]
        a: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Samples the feasibility regions of the family inequalities.
    RegionGrid {
        #[arg(long)]
        a: String,
        #[arg(long, default_value_t = 100)]
        resolution: u32,
        /// `lo,hi` window for u; defaults to `[0, a - a^2/4]`.
        #[arg(long)]
        u_range: Option<String>,
        /// `lo,hi` window for v; defaults to `[0, 1]`.
        #[arg(long)]
        v_range: Option<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Randomized rounding for a linear family.
    SolveLinear {
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<String>,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = espp::rounding::DEFAULT_RETRIES)]
        retries: u32,
    },
    /// Exact backtracking on one instance, or a solvability table.
    Brute {
        #[arg(long, required_unless_present = "table_n_max")]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = oracle::DEFAULT_BUDGET)]
        budget: u64,
        /// Builds the table of all valid instances up to this `n`.
        #[arg(long, conflicts_with = "instance")]
        table_n_max: Option<u64>,
        #[arg(long)]
        k_max: Option<u64>,
        /// Line-delimited JSON cache for table entries.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Exhaustive Criterion 3 search.
    Scan {
        #[arg(long)]
        n_max: u64,
        #[arg(long, default_value_t = 1)]
        shards: usize,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Writes one hit per line with its exact report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// `Usage` exits with 1, `Failure` with 2.
enum Fail {
    Usage(String),
    Failure(Value),
}

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail::Usage(e.to_string())
    }
}

type Res = Result<Value, Fail>;

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))
}

enum Loaded {
    Complete(EsppInstance),
    Incomplete(IncompleteInstance),
}

impl Loaded {
    fn as_ref(&self) -> InstanceRef<'_> {
        match self {
            Loaded::Complete(i) => InstanceRef::Complete(i),
            Loaded::Incomplete(i) => InstanceRef::Incomplete(i),
        }
    }
}

/// A composition summing to `n` is complete; anything shorter is a prefix.
fn load_instance(path: &Path) -> Result<Loaded, Fail> {
    let raw: InstanceJson = serde_json::from_str(&read(path)?)?;
    let comp = raw.composition()?;
    let (n, k) = (raw.n.0, raw.k.0);
    if comp.total() == n {
        Ok(Loaded::Complete(EsppInstance::new(n, k, comp)?))
    } else {
        Ok(Loaded::Incomplete(IncompleteInstance::new(n, k, comp)?))
    }
}

fn int(x: &BigInt) -> Value {
    serde_json::to_value(JsonInt(x.clone())).expect("integer")
}

fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn cmd_slack(path: &Path) -> Res {
    let inst = load_instance(path)?;
    let (n, k, comp, range) = match &inst {
        Loaded::Complete(i) => (i.n(), i.k(), i.composition(), SlackRange::Complete),
        Loaded::Incomplete(i) => (i.n(), i.k(), i.prefix(), SlackRange::Prefix),
    };
    let min = slack(n, k, comp, range)?;
    let ends: Vec<Value> = comp
        .block_ends()
        .into_iter()
        .filter_map(|(j, _)| slack_at(n, k, comp, &j, range).ok().map(|v| json!({"j": int(&j), "slack": int(&v)})))
        .collect();
    Ok(json!({
        "slack": min.as_ref().map(|m| int(&m.value)),
        "index": min.as_ref().map(|m| int(&m.index)),
        "block_ends": ends,
    }))
}

fn cmd_validate(path: &Path) -> Res {
    let inst = load_instance(path)?;
    let (kind, target) = match &inst {
        Loaded::Complete(i) => ("complete", i.target()),
        Loaded::Incomplete(i) => ("incomplete", i.target()),
    };
    Ok(json!({"valid": true, "kind": kind, "target": int(target)}))
}

fn plan_json(sol: &fluid::FluidSolution) -> Value {
    json!({"solvable": true, "plan": to_value(&sol.plan), "structure": to_value(&sol.structure)})
}

fn cmd_solve_fluid(instance: Option<PathBuf>, problem: Option<PathBuf>) -> Res {
    let pi: FluidProblem = match (instance, problem) {
        (Some(p), _) => match load_instance(&p)? {
            Loaded::Complete(i) => FluidProblem::from_espp(&i)?,
            Loaded::Incomplete(_) => return Err(Fail::Usage("solve-fluid needs a complete instance".into())),
        },
        (None, Some(p)) => serde_json::from_str(&read(&p)?)?,
        (None, None) => return Err(Fail::Usage("give --instance or --problem".into())),
    };
    pi.validate()?;
    match fluid::solve(&pi) {
        Ok(sol) => Ok(plan_json(&sol)),
        Err(fluid::FluidError::SlackViolated { index, value }) => {
            Ok(json!({"solvable": false, "index": index, "frac_slack": value}))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_verify_plan(problem: &Path, plan: &Path) -> Res {
    let pi: FluidProblem = serde_json::from_str(&read(problem)?)?;
    pi.validate()?;
    let plan: TransferPlan = serde_json::from_str(&read(plan)?)?;
    let ok = fluid::verify_plan(&pi, &plan);
    let out = json!({"valid": ok});
    if ok {
        Ok(out)
    } else {
        Err(Fail::Failure(out))
    }
}

fn cmd_check_criteria(path: &Path) -> Res {
    let inst = load_instance(path)?;
    Ok(match certify_unsolvable(inst.as_ref()) {
        Some(report) => json!({"unsolvable": true, "report": to_value(&report)}),
        None => json!({"unsolvable": null}),
    })
}

fn family_row(params: &FamilyParams, k: &BigInt, inst: &IncompleteInstance, report: &espp::criteria::CriterionReport) -> Value {
    json!({
        "a": format_rational(&params.a),
        "k": int(k),
        "instance": to_value(InstanceJson::new(inst.n(), inst.k(), inst.prefix())),
        "report": to_value(report),
    })
}

fn cmd_gen_family(a: &str, count: usize, format: Format) -> Res {
    let a = parse_rational(a)?;
    let Some(params) = families::family_params(&a)? else {
        return Ok(json!({"feasible": false, "a": format_rational(&a)}));
    };
    let members = families::generate(&params, count);
    if members.len() < count {
        return Err(Fail::Failure(json!({"feasible": true, "emitted": members.len(), "requested": count})));
    }
    match format {
        Format::Json => Ok(json!({
            "feasible": true,
            "d": params.d,
            "u": format_rational(&params.u),
            "v": format_rational(&params.v),
            "p": params.p,
            "k0": int(&params.k0),
            "modulus": int(&params.modulus),
            "instances": members.iter().map(|(k, i, r)| family_row(&params, k, i, r)).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let mut out = String::from("n,k,blocks\n");
            for (k, inst, _) in &members {
                out.push_str(&format!("{},{},\"{}\"\n", inst.n(), k, inst.prefix()));
            }
            Ok(Value::String(out))
        }
    }
}

fn parse_window(text: Option<String>) -> Result<Option<(Rational, Rational)>, Fail> {
    let Some(text) = text else { return Ok(None) };
    let (lo, hi) = text.split_once(',').ok_or_else(|| Fail::Usage(format!("expected lo,hi, got {text}")))?;
    Ok(Some((parse_rational(lo.trim())?, parse_rational(hi.trim())?)))
}

fn cmd_region_grid(a: &str, resolution: u32, u: Option<String>, v: Option<String>, format: Format) -> Res {
    let a = parse_rational(a)?;
    let d = families::choose_d(&a)?;
    let (u1, _) = families::corner_point(&a, d);
    let zero = Rational::from_integer(0.into());
    let (ulo, uhi) = parse_window(u)?.unwrap_or((zero.clone(), u1));
    let (vlo, vhi) = parse_window(v)?.unwrap_or((zero, Rational::from_integer(1.into())));
    let grid = families::region_grid_window(&a, (&ulo, &uhi), (&vlo, &vhi), resolution)?;
    match format {
        Format::Json => Ok(to_value(grid)),
        Format::Csv => {
            let mut out = String::from("u,v,in_S1,in_S2\n");
            for g in grid {
                out.push_str(&format!("{},{},{},{}\n", g.u, g.v, g.in_s1, g.in_s2));
            }
            Ok(Value::String(out))
        }
    }
}

fn cmd_solve_linear(alphas: &[String], n: u64, seed: u64, retries: u32) -> Res {
    let alphas = alphas.iter().map(|a| parse_rational(a.trim())).collect::<Result<Vec<_>, _>>()?;
    let family = LinearFamily::new(alphas)?;
    let setup = LinearSetup::new(&family, n)?;
    let run = setup.run(seed, retries);
    let out = json!({
        "outcome": to_value(run.outcome),
        "partition": run.partition.as_ref().map(|p| to_value(&p.sets)),
        "iter1": run.iter1,
        "iter2": run.iter2,
        "attempts": run.attempts,
        "seed": run.seed,
    });
    match run.outcome {
        Outcome::Solved => Ok(out),
        Outcome::Failure => Err(Fail::Failure(out)),
    }
}

fn cmd_brute(instance: Option<PathBuf>, budget: u64, table: Option<u64>, k_max: Option<u64>, cache: Option<PathBuf>) -> Res {
    if let Some(n_max) = table {
        let k_max = k_max.unwrap_or(n_max);
        let cached: Vec<oracle::TableEntry> = match &cache {
            Some(p) if p.exists() => read(p)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect::<Result<_, _>>()?,
            _ => vec![],
        };
        let entries = if cached.iter().any(|e| e.n == n_max) || (n_max == 0 && !cached.is_empty()) {
            cached.into_iter().filter(|e| e.n <= n_max && e.k <= k_max).collect()
        } else {
            oracle::exhaustive_solvability_table(n_max, k_max, budget)
        };
        if let Some(p) = &cache {
            let mut text = String::new();
            for e in &entries {
                text.push_str(&serde_json::to_string(e)?);
                text.push('\n');
            }
            fs::write(p, text)?;
        }
        let undecided = entries.iter().filter(|e| e.solvable.is_none()).count();
        let out = json!({
            "instances": entries.len(),
            "solvable": entries.iter().filter(|e| e.solvable == Some(true)).count(),
            "unsolvable": entries.iter().filter(|e| e.solvable == Some(false)).count(),
            "undecided": undecided,
        });
        return if undecided == 0 { Ok(out) } else { Err(Fail::Failure(out)) };
    }
    let path = instance.ok_or_else(|| Fail::Usage("give --instance or --table-n-max".into()))?;
    let inst = match load_instance(&path)? {
        Loaded::Complete(i) => i,
        Loaded::Incomplete(_) => return Err(Fail::Usage("brute needs a complete instance".into())),
    };
    let (verdict, stats) = oracle::brute_solve(&inst, budget);
    let out = json!({"result": to_value(&verdict), "stats": to_value(&stats)});
    match verdict {
        Verdict::BudgetExceeded => Err(Fail::Failure(out)),
        _ => Ok(out),
    }
}

fn cmd_scan(n_max: u64, shards: usize, checkpoint: Option<PathBuf>, out: Option<PathBuf>) -> Res {
    let result = scanner::scan_checkpointed(n_max, shards, checkpoint.as_deref(), None)?;
    scanner::revalidate_all(&result.hits)?;
    if let Some(p) = out {
        let mut text = String::new();
        for h in &result.hits {
            let report = h.revalidate().expect("revalidated above");
            let line = json!({
                "instance": to_value(InstanceJson::new(&BigInt::from(h.n), &BigInt::from(h.k), &h.composition())),
                "blocks": h.blocks,
                "report": to_value(&report),
            });
            text.push_str(&line.to_string());
            text.push('\n');
        }
        fs::write(p, text)?;
    }
    Ok(to_value(&result.summary))
}

fn run(cli: Cli) -> Res {
    match cli.command {
        Command::Slack { instance } => cmd_slack(&instance),
        Command::Validate { instance } => cmd_validate(&instance),
        Command::SolveFluid { instance, problem } => cmd_solve_fluid(instance, problem),
        Command::VerifyPlan { problem, plan } => cmd_verify_plan(&problem, &plan),
        Command::CheckCriteria { instance } => cmd_check_criteria(&instance),
        Command::GenFamily { a, count, format } => cmd_gen_family(&a, count, format),
        Command::RegionGrid { a, resolution, u_range, v_range, format } => {
            cmd_region_grid(&a, resolution, u_range, v_range, format)
        }
        Command::SolveLinear { alphas, n, seed, retries } => cmd_solve_linear(&alphas, n, seed, retries),
        Command::Brute { instance, budget, table_n_max, k_max, cache } => {
            cmd_brute(instance, budget, table_n_max, k_max, cache)
        }
        Command::Scan { n_max, shards, checkpoint, out } => cmd_scan(n_max, shards, checkpoint, out),
    }
}

fn print(v: &Value) {
    let mut stdout = std::io::stdout().lock();
    let _ = match v {
        Value::String(s) => write!(stdout, "{s}"),
        other => writeln!(stdout, "{other}"),
    };
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(v) => {
            print(&v);
            ExitCode::SUCCESS
        }
        Err(Fail::Failure(v)) => {
            print(&v);
            ExitCode::from(2)
        }
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
