//! `synpor`: verify `.ctp` programs, generate benchmark families and run
//! benchmark grids.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use synpor::explorer::{explore, Config, ExplorationReport, Mode, Verdict};
use synpor::formula::Solver;
use synpor::frontend::{render, Family, SourceText};
use synpor::model::Program;
use synpor::por::{PersistentSetEntry, ProcessOrder};

#[derive(Parser, Debug)]
#[command(name = "synpor", version, about = "Safety verification of concurrent transition systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the `property always` invariant of a program.
    Verify(VerifyArgs),
    /// Print a benchmark family instance in `.ctp` syntax.
    Gen(GenArgs),
    /// Run families x sizes x modes and write a CSV table.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct SearchFlags {
    /// Per-run wall-clock limit in seconds.
    #[arg(long, value_name = "S")]
    timeout: Option<f64>,
    /// Elimination steps allowed per solver query.
    #[arg(long, value_name = "N")]
    solver_budget: Option<u64>,
    /// Process priority: `default`, `reverse` or a comma-separated list of
    /// process names.
    #[arg(long, value_name = "SPEC")]
    seed_order: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    file: PathBuf,
    #[arg(long, default_value = "pdpor-si")]
    mode: Mode,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    /// Print the persistent set computed at each visited program point.
    #[arg(long)]
    dump_persistent: bool,
    #[command(flatten)]
    search: SearchFlags,
}

#[derive(Args, Debug)]
struct GenArgs {
    family: Family,
    n: usize,
    /// Output file (default: standard output).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated families.
    #[arg(long, default_value = "pc,phil,sum")]
    families: String,
    /// Comma-separated sizes.
    #[arg(long, default_value = "2,3")]
    sizes: String,
    /// Comma-separated modes.
    #[arg(long, default_value = "exhaustive,por,si,por-si,pdpor-si")]
    modes: String,
    /// Output file (default: standard output).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Per-cell wall-clock limit in seconds.
    #[arg(long, default_value_t = 600.0, value_name = "S")]
    timeout: f64,
    #[arg(long, value_name = "N")]
    solver_budget: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => verify(&a),
        Command::Gen(a) => gen(&a).map(|()| ExitCode::SUCCESS),
        Command::Bench(a) => bench(&a).map(|()| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {}", describe(&e));
        ExitCode::from(2)
    })
}

/// The error chain on one line, leaving out causes that an outer message
/// already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("invalid timeout {s}"))
}

fn config(p: &Program, mode: Mode, flags: &SearchFlags) -> Result<Config> {
    let mut cfg = Config::new(mode);
    if let Some(b) = flags.solver_budget {
        cfg.solver = Solver::with_budget(b);
    }
    cfg.timeout = flags.timeout.map(seconds).transpose()?;
    if let Some(spec) = &flags.seed_order {
        cfg.order = Some(ProcessOrder::parse(spec, p)?);
    }
    Ok(cfg)
}

fn exit_code(v: Verdict) -> ExitCode {
    match v {
        Verdict::Safe => ExitCode::SUCCESS,
        Verdict::Unsafe => ExitCode::from(1),
        Verdict::ResourceLimit => ExitCode::from(2),
    }
}

fn write_persistent(out: &mut dyn Write, entries: &[PersistentSetEntry]) -> std::io::Result<()> {
    for e in entries {
        let set: Vec<String> = e.set.iter().map(|t| t.to_string()).collect();
        writeln!(out, "{} -> {{{}}} if {}", e.loc, set.join(", "), e.psi_trace)?;
    }
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<ExitCode> {
    let src = SourceText::read(&a.file)?;
    let p = src.parse().with_context(|| src.name.clone())?;
    let run = explore(&p, &config(&p, a.mode, &a.search)?);
    if a.dump_persistent {
        if a.json {
            write_persistent(&mut std::io::stderr(), &run.persistent)?;
        } else {
            write_persistent(&mut std::io::stdout(), &run.persistent)?;
        }
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&run.report)?);
    } else {
        println!("{} [{}]", src.name, a.mode);
        println!("{}", run.report);
    }
    Ok(exit_code(run.report.verdict))
}

fn gen(a: &GenArgs) -> Result<()> {
    let text = render(&a.family.generate(a.n)?);
    match &a.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn list<T>(s: &str, what: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let items = s
        .split(',')
        .map(str::trim)
        .filter(|i| !i.is_empty())
        .map(|i| i.parse::<T>().with_context(|| format!("bad {what} `{i}`")))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        bail!("empty {what} list");
    }
    Ok(items)
}

fn row(family: Family, n: usize, mode: Mode, r: &ExplorationReport) -> [String; 8] {
    let count = |c: u64| {
        if r.verdict == Verdict::ResourceLimit {
            "-".to_string()
        } else {
            c.to_string()
        }
    };
    [
        family.name().to_string(),
        n.to_string(),
        mode.name().to_string(),
        r.verdict.to_string(),
        count(r.states_visited),
        count(r.states_subsumed),
        count(r.traces_completed),
        count(r.time_ms),
    ]
}

fn bench(a: &BenchArgs) -> Result<()> {
    let families: Vec<Family> = list(&a.families, "family")?;
    let sizes: Vec<usize> = list(&a.sizes, "size")?;
    let modes: Vec<Mode> = list(&a.modes, "mode")?;
    let sink: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["family", "n", "mode", "verdict", "states", "subsumed", "traces", "time_ms"])?;
    for &family in &families {
        for &n in &sizes {
            let p = family.generate(n)?;
            for &mode in &modes {
                let mut cfg = Config::new(mode);
                cfg.timeout = Some(seconds(a.timeout)?);
                if let Some(b) = a.solver_budget {
                    cfg.solver = Solver::with_budget(b);
                }
                let r = explore(&p, &cfg).report;
                w.write_record(row(family, n, mode, &r))?;
                w.flush()?;
            }
        }
    }
    Ok(())
}
