//! `hearthguard` — run scenarios, host the broker, solve positions, compute
//! statistics and replay frame logs.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use hearthguard::analytics::{
    pearson, read_column, read_columns, spearman, t_test, t_test_from_summary, write_metrics_csv, GroupSummary,
    SampleVector, TVariant,
};
use hearthguard::conductor::{read_frame_log, replay_all, run_suite, write_frame_log, ModePolicy, RunOptions};
use hearthguard::fuzzy::{FuzzyVariable, RuleBase};
use hearthguard::habitat::{bundled, load_suite, load_suite_file, Suite};
use hearthguard::locator::{solve_position, AnchorSet, RangeSet};
use hearthguard::meshbus::{Broker, Bus};

/// Environment variable naming a membership-parameter file.
const CONFIG_ENV: &str = "HEARTHGUARD_CONFIG";

#[derive(Parser)]
#[command(name = "hearthguard", version, about = "Assistive smart-home runtime")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario suite (file path or bundled name: table6, fig9, modeswitch).
    Run(RunArgs),
    /// Host the message broker.
    Broker(BrokerArgs),
    /// Solve a position from anchor ranges.
    Solve(SolveArgs),
    /// Correlation or t statistics from a CSV.
    Stats(StatsArgs),
    /// Re-run the conductor over a frame log and compare its output.
    Replay { log: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    scenario: String,
    #[arg(long, default_value = "adaptive")]
    mode: ModePolicy,
    /// Overrides every run's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Metrics CSV path; standard output when omitted.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Frame log (JSON lines) for `replay`.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Also expose the run's bus over TCP.
    #[arg(long)]
    tcp: Option<String>,
    /// Also expose the run's bus over WebSocket.
    #[arg(long)]
    ws: Option<String>,
    /// Scenario seconds per wall-clock second (for watching a run live).
    #[arg(long)]
    pace: Option<f64>,
}

#[derive(Args)]
struct BrokerArgs {
    #[arg(long, default_value = "127.0.0.1:1883")]
    tcp: String,
    #[arg(long, default_value = "127.0.0.1:8080")]
    ws: String,
}

#[derive(Args)]
struct SolveArgs {
    /// JSON anchor set: `{"anchors": [{"id", "position": {x, y, z}}], "room", "tagHeight"}`.
    #[arg(long)]
    anchors: Option<PathBuf>,
    /// Comma-separated ranges in anchor order, metres.
    #[arg(long, value_delimiter = ',', required = true)]
    ranges: Vec<f64>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("test").required(true).args(["pearson", "spearman", "ttest", "summary"])))]
struct StatsArgs {
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["COL_A", "COL_B"], requires = "csv")]
    pearson: Option<Vec<String>>,
    #[arg(long, num_args = 2, value_names = ["COL_A", "COL_B"], requires = "csv")]
    spearman: Option<Vec<String>>,
    /// Two-sample t-test between two columns (blank cells skipped).
    #[arg(long, num_args = 2, value_names = ["COL_A", "COL_B"], requires = "csv")]
    ttest: Option<Vec<String>>,
    /// Two-sample t-test from `n,mean,sd` summaries.
    #[arg(long, num_args = 2, value_names = ["N,MEAN,SD", "N,MEAN,SD"])]
    summary: Option<Vec<String>>,
    /// Pooled-variance t instead of Welch.
    #[arg(long)]
    pooled: bool,
}

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Broker(a) => broker(a),
        Command::Solve(a) => solve(a),
        Command::Stats(a) => stats(a),
        Command::Replay { log } => replay(&log),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hearthguard: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_scenario(arg: &str) -> Result<Suite> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(text) = bundled(arg) {
            return Ok(load_suite(text)?);
        }
    }
    Ok(load_suite_file(path)?)
}

/// Default rules with membership overrides from `HEARTHGUARD_CONFIG`, if set.
/// The file holds a JSON array of variables or `{"variables": [...]}`.
fn rule_base() -> Result<RuleBase> {
    let base = RuleBase::bundled_default();
    let Some(path) = std::env::var_os(CONFIG_ENV) else { return Ok(base) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", Path::new(&path).display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let vars = value.get("variables").cloned().unwrap_or(value);
    let vars: Vec<FuzzyVariable> = serde_json::from_value(vars)?;
    Ok(base.with_variable_overrides(vars)?)
}

fn run(a: RunArgs) -> Result<ExitCode> {
    let suite = load_scenario(&a.scenario)?;
    let mut opts = RunOptions {
        policy: a.mode,
        rules: rule_base()?,
        record_frames: a.frames.is_some(),
        seed: a.seed,
        pace: a.pace,
        bus: None,
    };
    let mut servers = Vec::new();
    if a.tcp.is_some() || a.ws.is_some() {
        let bus = Bus::new(Broker::default()).shared();
        if let Some(addr) = &a.tcp {
            servers.push(hearthguard_net::serve_tcp(addr, bus.clone())?);
        }
        if let Some(addr) = &a.ws {
            servers.push(hearthguard_net::serve_websocket(addr, bus.clone())?);
        }
        for s in &servers {
            eprintln!("listening on {}", s.local_addr());
        }
        opts.bus = Some(bus);
    }
    let outcomes = run_suite(&suite, &opts)?;
    let rows: Vec<_> = outcomes.iter().map(|o| o.row.clone()).collect();
    match &a.metrics {
        Some(p) => write_metrics_csv(&rows, BufWriter::new(create(p)?))?,
        None => write_metrics_csv(&rows, std::io::stdout().lock())?,
    }
    if let Some(p) = &a.frames {
        let lines: Vec<_> = outcomes.into_iter().flat_map(|o| o.frames).collect();
        write_frame_log(&lines, BufWriter::new(create(p)?))?;
    }
    drop(servers);
    Ok(ExitCode::SUCCESS)
}

fn create(p: &Path) -> Result<File> {
    File::create(p).map_err(|e| format!("{}: {e}", p.display()).into())
}

fn broker(a: BrokerArgs) -> Result<ExitCode> {
    let bus = Bus::new(Broker::default()).shared();
    let tcp = hearthguard_net::serve_tcp(&a.tcp, bus.clone())?;
    let ws = hearthguard_net::serve_websocket(&a.ws, bus)?;
    println!("tcp {}", tcp.local_addr());
    println!("ws {}", ws.local_addr());
    std::io::stdout().flush()?;
    loop {
        std::thread::sleep(Duration::from_secs(3600));
    }
}

fn solve(a: SolveArgs) -> Result<ExitCode> {
    let anchors = match &a.anchors {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let set: AnchorSet = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?;
            set.validate()?;
            set
        }
        None => AnchorSet::default_room(),
    };
    if a.ranges.len() != anchors.anchors.len() {
        return Err(format!("{} ranges for {} anchors", a.ranges.len(), anchors.anchors.len()).into());
    }
    let fix = solve_position(&RangeSet::from_values(&anchors, &a.ranges, 0.0), &anchors, None)?;
    let p = fix.position;
    println!("x={:.9} y={:.9} z={:.9} residual={:.9e} iterations={}", p.x, p.y, p.z, fix.residual_norm, fix.iterations);
    Ok(ExitCode::SUCCESS)
}

fn parse_summary(s: &str) -> Result<GroupSummary> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, mean, sd] = parts.as_slice() else {
        return Err(format!("summary {s:?} is not n,mean,sd").into());
    };
    Ok(GroupSummary { n: n.parse()?, mean: mean.parse()?, sd: sd.parse()? })
}

fn stats(a: StatsArgs) -> Result<ExitCode> {
    let variant = if a.pooled { TVariant::Pooled } else { TVariant::Welch };
    let open = || -> Result<BufReader<File>> {
        let p = a.csv.as_ref().ok_or("--csv is required")?;
        Ok(BufReader::new(File::open(p).map_err(|e| format!("{}: {e}", p.display()))?))
    };
    if let Some(cols) = a.pearson.as_ref().or(a.spearman.as_ref()) {
        let (x, y) = read_columns(open()?, &cols[0], &cols[1])?;
        let (x, y) = (SampleVector::new(x)?, SampleVector::new(y)?);
        if a.pearson.is_some() {
            println!("pearson r={:.12} n={}", pearson(&x, &y)?, x.len());
        } else {
            println!("spearman rho={:.12} n={}", spearman(&x, &y)?, x.len());
        }
        return Ok(ExitCode::SUCCESS);
    }
    let t = if let Some(cols) = &a.ttest {
        let x = SampleVector::new(read_column(open()?, &cols[0])?)?;
        let y = SampleVector::new(read_column(open()?, &cols[1])?)?;
        t_test(&x, &y, variant)?
    } else {
        let s = a.summary.as_ref().expect("clap group requires one test");
        t_test_from_summary(&parse_summary(&s[0])?, &parse_summary(&s[1])?, variant)?
    };
    println!("t={:.12} df={:.6} p={:.6e}", t.t, t.df, t.p_value());
    Ok(ExitCode::SUCCESS)
}

fn replay(path: &Path) -> Result<ExitCode> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let lines = read_frame_log(BufReader::new(file))?;
    let mut faithful = true;
    for r in replay_all(&lines)? {
        println!("{} frames={} divergences={}", r.scenario, r.frames_compared, r.divergences.len());
        if let Some(d) = r.divergences.first() {
            faithful = false;
            println!("  first at #{} t={}: expected {} got {}", d.index, d.t, show(&d.expected), show(&d.actual));
        }
    }
    Ok(if faithful { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn show(f: &Option<hearthguard::meshbus::Frame>) -> String {
    f.as_ref().map_or_else(|| "nothing".into(), |f| serde_json::to_string(f).unwrap_or_default())
}
