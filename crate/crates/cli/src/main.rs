//! `rta`: check, run and explore scenarios of runtime-assured systems.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rta_core::dsl::scenario::ScenarioConfig;
use rta_core::engine::{SystemSpec, Trace};
use rta_core::harness::{audit, AuditReport, Experiment};
use rta_core::model::Value;
use rta_core::DslError;

#[derive(Parser)]
#[command(name = "rta", version, about = "Runtime assurance for robotics programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and elaborate, then print the well-formedness report.
    Check(Common),
    /// Run one schedule, write the trace and audit it.
    Run {
        #[command(flatten)]
        common: Common,
        /// Run id to execute (environment index times schedules plus schedule index).
        #[arg(long, default_value_t = 0)]
        id: u64,
    },
    /// Run and audit every schedule the policy allows.
    Explore(Common),
    /// Write the safe and safer grid masks of every grid-backed module.
    Precompute(Common),
    /// Audit an existing trace against the scenario.
    Report {
        #[command(flatten)]
        common: Common,
        /// Trace in JSON-lines form, as written by `run`.
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Det,
    Random,
    Exhaustive,
}

#[derive(Args)]
struct Common {
    /// Scenario file; without one the system is empty.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, value_enum)]
    schedule: Option<Schedule>,
    /// Largest number of reordered choice points per run.
    #[arg(long)]
    bound: Option<usize>,
    /// Runs drawn by the random schedule.
    #[arg(long)]
    runs: Option<u64>,
    /// Run modules whose well-formedness could not be established.
    #[arg(long)]
    allow_unverified: bool,
}

/// Outcome of a command that completed.
enum Verdict {
    Clean,
    Violation,
}

struct Loaded {
    config: ScenarioConfig,
    spec: SystemSpec,
    out: PathBuf,
}

impl Common {
    fn config(&self) -> Result<(ScenarioConfig, PathBuf)> {
        let (mut c, base) = match &self.scenario {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (ScenarioConfig::parse(&text).with_context(|| p.display().to_string())?, base)
            }
            None => (ScenarioConfig::default(), PathBuf::from(".")),
        };
        let mut set = |k: &str, v: String| c.set(k, &v).map_err(anyhow::Error::msg);
        if let Some(s) = self.seed {
            set("seed", s.to_string())?;
        }
        if let Some(h) = self.horizon {
            set("horizon", h.to_string())?;
        }
        if let Some(r) = self.runs {
            set("runs", r.to_string())?;
        }
        if let Some(s) = self.schedule {
            let name = match s {
                Schedule::Det => "det",
                Schedule::Random => "random",
                Schedule::Exhaustive => "exhaustive",
            };
            set("schedule", name.to_string())?;
        }
        if let Some(b) = self.bound {
            set("bound", b.to_string())?;
        }
        if self.allow_unverified {
            c.allow_unverified = true;
        }
        Ok((c, base))
    }

    fn load(&self) -> Result<std::result::Result<Loaded, DslError>> {
        let (config, base) = self.config()?;
        let out = self.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("rta-out"));
        match config.load(&base) {
            Ok((_, spec)) => Ok(Ok(Loaded { config, spec, out })),
            Err(e @ DslError::Wellformedness { .. }) => Ok(Err(e)),
            Err(e) => Err(e.into()),
        }
    }
}

/// Prints a rejected module's report; anything else is an error.
fn rejected(e: DslError) -> Result<Verdict> {
    if let DslError::Wellformedness { module, report } = &e {
        println!("module {module} is not well formed\n{report}");
        eprintln!("error: {e}");
        return Ok(Verdict::Violation);
    }
    Err(e.into())
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// One row per numeric topic write: `time,node,topic,v0,v1,...`.
fn states_csv(trace: &Trace) -> String {
    let mut out = String::from("time,node,topic,values\n");
    for e in &trace.events {
        for (topic, v) in e.writes.iter() {
            let xs = match v {
                Value::Scalar(x) => vec![*x],
                Value::Vector(xs) => xs.clone(),
                _ => continue,
            };
            let node = e.node.as_deref().unwrap_or("env");
            let vals: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{},{node},{topic},{}", e.time, vals.join(",")).unwrap();
        }
    }
    out
}

fn print_witness(report: &AuditReport, trace_path: &Path, id: u64) {
    if let Some(i) = report.first_violation.or(report.first_unsafe) {
        println!("violation at event {i} (run id {id}); witness trace: {}", trace_path.display());
    }
}

fn verdict(report: &AuditReport) -> Verdict {
    if report.is_clean() {
        Verdict::Clean
    } else {
        Verdict::Violation
    }
}

fn check(common: &Common) -> Result<Verdict> {
    let loaded = match common.load()? {
        Ok(l) => l,
        Err(e) => return rejected(e),
    };
    let spec = &loaded.spec;
    println!("nodes {}  modules {}  horizon {}", spec.nodes.len(), spec.modules.len(), spec.horizon);
    let mut ok = true;
    for report in spec.reports.values() {
        print!("{}", report.render());
        ok &= report.overall();
    }
    Ok(if ok { Verdict::Clean } else { Verdict::Violation })
}

fn run(common: &Common, id: u64) -> Result<Verdict> {
    let Loaded { config, spec, out } = match common.load()? {
        Ok(l) => l,
        Err(e) => return rejected(e),
    };
    let exp = Experiment::new(&spec, config.policy())
        .with_envs(vec![config.env_script()])
        .with_faults(config.faults.clone());
    let trace = if spec.is_empty() { Trace::default() } else { exp.replay(id)? };
    let report = audit(&trace, &spec)?;
    let trace_path = out.join("trace.jsonl");
    write(&trace_path, &trace.to_jsonl())?;
    write(&out.join("states.csv"), &states_csv(&trace))?;
    let text = format!("run id {id}\ndigest {}\n{}", trace.digest(), report.render());
    write(&out.join("report.txt"), &text)?;
    print!("{text}");
    print_witness(&report, &trace_path, id);
    Ok(verdict(&report))
}

fn explore(common: &Common) -> Result<Verdict> {
    let Loaded { config, spec, out } = match common.load()? {
        Ok(l) => l,
        Err(e) => return rejected(e),
    };
    if spec.is_empty() {
        println!("empty system: nothing to explore");
        return Ok(Verdict::Clean);
    }
    let exp = Experiment::new(&spec, config.policy())
        .with_envs(vec![config.env_script()])
        .with_faults(config.faults.clone());
    let result = exp.explore()?;
    let text = result.render();
    write(&out.join("explore.txt"), &text)?;
    print!("{text}");
    let Some(first) = result.failing().next() else { return Ok(Verdict::Clean) };
    let trace = exp.replay_verified(first.id, &first.digest)?;
    let path = out.join(format!("witness_{}.jsonl", first.id));
    write(&path, &trace.to_jsonl())?;
    print_witness(&first.report, &path, first.id);
    Ok(Verdict::Violation)
}

fn precompute(common: &Common) -> Result<Verdict> {
    let Loaded { spec, out, .. } = match common.load()? {
        Ok(l) => l,
        Err(e) => return rejected(e),
    };
    let mut wrote = 0;
    for m in &spec.modules {
        let Some(model) = &m.grid_model else { continue };
        let grid = &model.oracle.grid;
        let Some(safer) = model.shrunk(2 * m.delta) else {
            bail!("module {}: no cached region for 2Δ", m.name);
        };
        for (kind, mask) in [("safe", &model.safe), ("safer", safer)] {
            let path = out.join(format!("{}_{kind}.mask", m.name));
            write(&path, &mask.to_text(grid))?;
            println!("{}  {} of {} cells", path.display(), mask.count(), grid.len());
            wrote += 1;
        }
    }
    if wrote == 0 {
        println!("no grid-backed modules");
    }
    Ok(Verdict::Clean)
}

fn report(common: &Common, trace: &Path) -> Result<Verdict> {
    let Loaded { spec, .. } = match common.load()? {
        Ok(l) => l,
        Err(e) => return rejected(e),
    };
    let text = fs::read_to_string(trace).with_context(|| format!("reading {}", trace.display()))?;
    let trace_data = Trace::from_jsonl(&text).with_context(|| format!("parsing {}", trace.display()))?;
    let report = audit(&trace_data, &spec)?;
    print!("digest {}\n{}", trace_data.digest(), report.render());
    if let Some(i) = report.first_violation.or(report.first_unsafe) {
        println!("violation at event {i}");
    }
    Ok(verdict(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(c) => check(c),
        Command::Run { common, id } => run(common, *id),
        Command::Explore(c) => explore(c),
        Command::Precompute(c) => precompute(c),
        Command::Report { common, trace } => report(common, trace),
    };
    match result {
        Ok(Verdict::Clean) => ExitCode::SUCCESS,
        Ok(Verdict::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
