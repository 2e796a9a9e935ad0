use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use gaitspeed::detect::DetectionParams;
use gaitspeed::eval::{
    bland_altman, best_baseline, linear_fit, load_exclusions, parameter_sweep, pipeline_speeds, success_summary,
    threshold_search, write_csv, write_json, EvalWalk, PairedMeasurement,
};
use gaitspeed::gateway::{spawn, AppState};
use gaitspeed::session::{
    load_trials, AntennaAssignment, AntennaMap, AntennaRole, ServiceConfig, TrialFilter, MAX_CLINICAL_SPEED, MIN_CLINICAL_SPEED,
};
use gaitspeed::sim::{
    generate_corpus, generate_walk, load_corpus, replay, Capture, CorpusSpec, FalsePeak, ReplayOptions, WalkProfile,
    DEFAULT_ENDPOINT, DEFAULT_EPC, ENDPOINT_ENV,
};

#[derive(Parser)]
#[command(name = "gaitspeed", version, about = "Gait-speed measurement from dual-antenna RFID read streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ingestion gateway and session engine.
    Serve(ServeArgs),
    /// Simulate one walk and write it as a capture file.
    GenWalk(GenWalkArgs),
    /// Generate a seeded corpus of walks with a manifest.
    GenCorpus(GenCorpusArgs),
    /// Send a capture to a running gateway with its recorded timing.
    Replay(ReplayArgs),
    /// Mean error and success over a grid of window sizes and thresholds.
    Sweep(SweepArgs),
    /// Exhaustive fixed-threshold baseline search.
    BaselineSearch(BaselineArgs),
    /// MAE and Bland-Altman agreement between two methods.
    Agree(AgreeArgs),
    /// Outcome counts per tag from a trial log.
    Summary(SummaryArgs),
    /// Least-squares line with a 95% band of the mean response.
    Fit(FitArgs),
}

#[derive(Args)]
struct ServeArgs {
    /// Service configuration (TOML). Defaults are used when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides `server.bind`.
    #[arg(long)]
    bind: Option<String>,
    /// Also append every accepted batch to this capture file.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, default_value_t = 14)]
    w1: usize,
    #[arg(long, default_value_t = 14)]
    w2: usize,
    #[arg(long, default_value_t = 1.0)]
    tau1: f64,
    #[arg(long, default_value_t = 1.0)]
    tau2: f64,
    /// Antenna separation in meters.
    #[arg(long, default_value_t = 4.0)]
    distance: f64,
}

impl DetectArgs {
    fn params(&self) -> DetectionParams {
        DetectionParams {
            w1: self.w1,
            w2: self.w2,
            tau1: self.tau1,
            tau2: self.tau2,
            distance_m: self.distance,
        }
    }
}

fn parse_false_peak(s: &str) -> Result<FalsePeak, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [time_s, duration_s, peak_dbm] => Ok(FalsePeak {
            time_s,
            duration_s,
            peak_dbm,
        }),
        _ => Err("expected TIME_S:DURATION_S:PEAK_DBM".into()),
    }
}

#[derive(Args)]
struct GenWalkArgs {
    /// Output capture file.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    #[arg(long, default_value_t = 0.6)]
    lateral_offset: f64,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    start_x: f64,
    #[arg(long, default_value_t = 30.0)]
    sample_rate: f64,
    #[arg(long, default_value_t = 0.15)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_corr: f64,
    /// Entry-side excursion before the walk, TIME_S:DURATION_S:PEAK_DBM.
    #[arg(long = "false-peak", value_parser = parse_false_peak, allow_hyphen_values = true)]
    false_peaks: Vec<FalsePeak>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gain_offset: f64,
    #[arg(long, default_value_t = 0.5)]
    rssi_step: f64,
    #[arg(long, default_value_t = -65.0, allow_hyphen_values = true)]
    floor: f64,
    #[arg(long, default_value_t = -45.0, allow_hyphen_values = true)]
    p0: f64,
    #[arg(long, default_value_t = 1.0)]
    d0: f64,
    #[arg(long, default_value_t = 2.0)]
    path_exponent: f64,
    #[arg(long, default_value_t = 0.8)]
    d_sat: f64,
    #[arg(long, default_value_t = 70.0)]
    beamwidth: f64,
    #[arg(long, default_value_t = 20.0)]
    max_attenuation: f64,
    #[arg(long, default_value = DEFAULT_EPC)]
    epc: String,
    #[arg(long, default_value_t = 1)]
    entry_port: u16,
    #[arg(long, default_value_t = 2)]
    exit_port: u16,
    #[command(flatten)]
    detect: DetectArgs,
}

impl GenWalkArgs {
    fn profile(&self) -> WalkProfile {
        let mut p = WalkProfile {
            speed_mps: self.speed,
            lateral_offset_m: self.lateral_offset,
            start_x_m: self.start_x,
            sample_rate_hz: self.sample_rate,
            noise_sigma_dbm: self.noise_sigma,
            noise_corr_s: self.noise_corr,
            false_peaks: self.false_peaks.clone(),
            seed: self.seed,
            gain_offset_db: self.gain_offset,
            rssi_step_dbm: self.rssi_step,
            floor_dbm: self.floor,
            ..Default::default()
        };
        p.path.p0_dbm = self.p0;
        p.path.d0_m = self.d0;
        p.path.exponent = self.path_exponent;
        p.path.d_sat_m = self.d_sat;
        p.pattern.beamwidth_deg = self.beamwidth;
        p.pattern.max_attenuation_db = self.max_attenuation;
        p
    }
}

#[derive(Args)]
struct GenCorpusArgs {
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
    /// Corpus spec as JSON; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Use the clinic-day mix with injected walk-backs and runs.
    #[arg(long)]
    clinic: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    speed_min: Option<f64>,
    #[arg(long)]
    speed_max: Option<f64>,
    #[arg(long)]
    backwards_fraction: Option<f64>,
    #[arg(long)]
    running_fraction: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

#[derive(Args)]
struct ReplayArgs {
    capture: PathBuf,
    /// Full URL of the read endpoint.
    #[arg(long, env = ENDPOINT_ENV, default_value = DEFAULT_ENDPOINT)]
    endpoint: String,
    #[arg(long, default_value_t = 100)]
    batch_ms: u64,
    /// Multiplier on recorded gaps; 0 sends as fast as possible.
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
    /// Shift every timestamp by this many microseconds.
    #[arg(long, default_value_t = 0)]
    offset_us: u64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
}

#[derive(Args)]
struct WalkInputs {
    /// Corpus directories or capture files with ground truth.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    entry_port: u16,
    #[arg(long, default_value_t = 2)]
    exit_port: u16,
    /// Antenna separation; defaults to the value stored with the walks.
    #[arg(long)]
    distance: Option<f64>,
}

struct LoadedWalks {
    walks: Vec<EvalWalk>,
    distance_m: f64,
    antennas: AntennaMap,
}

impl WalkInputs {
    fn load(&self) -> Result<LoadedWalks> {
        let mut walks = Vec::new();
        let mut stored = None;
        for path in &self.inputs {
            if path.is_dir() {
                let corpus = load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))?;
                stored.get_or_insert(corpus.manifest.spec.distance_m);
                walks.extend(EvalWalk::from_corpus(&corpus)?);
            } else {
                let capture = Capture::load(path).with_context(|| format!("loading {}", path.display()))?;
                if let Some(d) = capture.header.distance_m {
                    stored.get_or_insert(d);
                }
                walks.push(EvalWalk::from_capture(&capture).with_context(|| path.display().to_string())?);
            }
        }
        if walks.is_empty() {
            bail!("no walks with a reference speed in the inputs");
        }
        Ok(LoadedWalks {
            walks,
            distance_m: self.distance.or(stored).unwrap_or(4.0),
            antennas: antenna_map(self.entry_port, self.exit_port),
        })
    }
}

fn antenna_map(entry: u16, exit: u16) -> AntennaMap {
    AntennaMap::from_assignments(&[
        AntennaAssignment {
            port: entry,
            role: AntennaRole::Entry,
        },
        AntennaAssignment {
            port: exit,
            role: AntennaRole::Exit,
        },
    ])
}

fn parse_range(s: &str) -> Result<Vec<usize>, String> {
    match s.split_once('-') {
        Some((a, b)) => {
            let (a, b) = (a.parse::<usize>(), b.parse::<usize>());
            match (a, b) {
                (Ok(a), Ok(b)) if a <= b => Ok((a..=b).collect()),
                _ => Err(format!("bad range {s:?}")),
            }
        }
        None => s
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string()))
            .collect(),
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    inputs: WalkInputs,
    /// Window sizes, `LO-HI` or a comma list.
    #[arg(long, default_value = "5-20")]
    w: String,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    tau: Vec<f64>,
    /// Plot data: one CSV row per (w, tau) cell.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    inputs: WalkInputs,
    #[arg(long, default_value_t = -70.0, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// Minimum fraction of walks measured for the reported best threshold.
    #[arg(long, default_value_t = 0.5)]
    min_success: f64,
    /// Also score the proposed detector with these parameters.
    #[arg(long, default_value_t = 14)]
    compare_w: usize,
    #[arg(long, default_value_t = 1.0)]
    compare_tau: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AgreeArgs {
    /// CSV with `vTestMps,vRefMps[,label]` columns.
    #[arg(long, conflicts_with = "walks")]
    pairs: Option<PathBuf>,
    /// Run the online pipeline on these corpora or captures against ground truth.
    #[arg(long, num_args = 1..)]
    walks: Vec<PathBuf>,
    #[command(flatten)]
    detect: DetectArgs,
    /// Plot data: per-pair mean and difference.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SummaryArgs {
    /// Trial log (JSON lines).
    log: PathBuf,
    /// JSON array of operator-excluded trials.
    #[arg(long)]
    exclusions: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with `x,y` columns.
    points: PathBuf,
    /// Drop points whose y lies outside the clinical speed range.
    #[arg(long)]
    clinical_filter: bool,
    #[arg(long, default_value_t = 50)]
    band_steps: usize,
    /// Plot data: the fitted line and band.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(serde::Deserialize)]
struct Point {
    x: f64,
    y: f64,
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    rdr.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

async fn serve(args: ServeArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig::default(),
    };
    if let Some(b) = args.bind {
        config.server.bind = b;
    }
    let state = AppState::from_config(&config, args.record.as_deref())?;
    let listener = tokio::net::TcpListener::bind(&config.server.bind)
        .await
        .with_context(|| format!("binding {}", config.server.bind))?;
    let server = spawn(state, listener).await?;
    tracing::info!(addr = %server.addr, "gateway listening");
    tokio::signal::ctrl_c().await?;
    tracing::info!("shutting down");
    server.state.engine.flush().await;
    server.stop().await?;
    Ok(())
}

fn gen_walk(args: GenWalkArgs) -> Result<()> {
    let profile = args.profile();
    let params = args.detect.params();
    let walk = generate_walk(&profile, &params)?;
    if walk.short_entry {
        tracing::warn!("entry trace is shorter than the entry window");
    }
    let capture = Capture::from_walk(
        &walk,
        Some(&profile),
        &args.epc,
        params.distance_m,
        (args.entry_port, args.exit_port),
    );
    capture.save(&args.out)?;
    println!(
        "{}: {} entry + {} exit reads, true speed {:.4} m/s",
        args.out.display(),
        walk.trace1.len(),
        walk.trace2.len(),
        walk.truth.true_speed_mps
    );
    Ok(())
}

fn gen_corpus(args: GenCorpusArgs) -> Result<()> {
    let mut spec = match (&args.spec, args.clinic) {
        (Some(p), _) => serde_json::from_str(&std::fs::read_to_string(p)?).context("parsing corpus spec")?,
        (None, true) => CorpusSpec::clinic(100, 7),
        (None, false) => CorpusSpec::default(),
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(v) = args.speed_min {
        spec.speed_range.0 = v;
    }
    if let Some(v) = args.speed_max {
        spec.speed_range.1 = v;
    }
    if let Some(v) = args.backwards_fraction {
        spec.backwards_fraction = v;
    }
    if let Some(v) = args.running_fraction {
        spec.running_fraction = v;
    }
    if let Some(v) = args.noise_sigma {
        spec.base.noise_sigma_dbm = v;
    }
    let manifest = generate_corpus(&spec, &args.out)?;
    println!("{}: {} walks", args.out.display(), manifest.walks.len());
    Ok(())
}

async fn replay_cmd(args: ReplayArgs) -> Result<()> {
    let capture = Capture::load(&args.capture)?;
    let reads: Vec<_> = capture.shifted_reads(args.offset_us).collect();
    let opts = ReplayOptions {
        endpoint: args.endpoint,
        batch_window_us: args.batch_ms * 1000,
        time_scale: args.time_scale,
        retries: args.retries,
        ..Default::default()
    };
    let report = replay(&reads, &opts).await;
    println!("{}", serde_json::to_string(&report)?);
    if let Some(reason) = report.aborted {
        bail!("replay aborted: {reason}");
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let w = args.inputs.load()?;
    let ws = parse_range(&args.w).map_err(anyhow::Error::msg)?;
    let cells = parameter_sweep(&w.walks, &ws, &args.tau, w.distance_m, &w.antennas)?;
    println!("{:>4} {:>5} {:>10} {:>9} {:>9}", "w", "tau", "error_pct", "mae_mps", "success");
    for c in &cells {
        println!(
            "{:>4} {:>5.1} {:>10} {:>9} {:>4}/{:<4}",
            c.w,
            c.tau,
            opt(c.mean_error_pct, 2),
            opt(c.mae_mps, 4),
            c.successes,
            c.n
        );
    }
    if let Some(p) = &args.csv {
        write_csv(p, &cells)?;
    }
    if let Some(p) = &args.json {
        write_json(p, &cells)?;
    }
    Ok(())
}

fn baseline_search(args: BaselineArgs) -> Result<()> {
    let w = args.inputs.load()?;
    let rows = threshold_search(&w.walks, args.from, args.to, args.step, w.distance_m, &w.antennas)?;
    println!("{:>9} {:>9} {:>10} {:>9}", "thr_dbm", "mae_mps", "error_pct", "success");
    for r in &rows {
        println!(
            "{:>9.1} {:>9} {:>10} {:>4}/{:<4}",
            r.threshold_dbm,
            opt(r.mae_mps, 4),
            opt(r.mean_error_pct, 2),
            r.success_count,
            r.n
        );
    }
    let params = DetectionParams::symmetric(args.compare_w, args.compare_tau, w.distance_m);
    let proposed = gaitspeed::eval::score(&w.walks, &pipeline_speeds(&w.walks, &params, &w.antennas));
    match best_baseline(&rows, args.min_success) {
        Some(b) => println!(
            "best baseline {:.1} dBm: mae {} success {}/{}",
            b.threshold_dbm,
            opt(b.mae_mps, 4),
            b.success_count,
            b.n
        ),
        None => println!("no threshold measured {:.0}% of walks", args.min_success * 100.0),
    }
    println!(
        "proposed w={} tau={}: mae {} success {}/{}",
        args.compare_w,
        args.compare_tau,
        opt(proposed.mae_mps, 4),
        proposed.successes,
        proposed.n
    );
    if let Some(p) = &args.csv {
        write_csv(p, &rows)?;
    }
    if let Some(p) = &args.json {
        write_json(p, &rows)?;
    }
    Ok(())
}

fn agree(args: AgreeArgs) -> Result<()> {
    let pairs: Vec<PairedMeasurement> = if let Some(p) = &args.pairs {
        read_csv(p)?
    } else if !args.walks.is_empty() {
        let inputs = WalkInputs {
            inputs: args.walks.clone(),
            entry_port: 1,
            exit_port: 2,
            distance: Some(args.detect.distance),
        };
        let w = inputs.load()?;
        let params = args.detect.params();
        let speeds = pipeline_speeds(&w.walks, &params, &w.antennas);
        let mut pairs = Vec::new();
        let mut missed = 0;
        for (walk, s) in w.walks.iter().zip(speeds) {
            match s.filter(|v| *v > 0.0) {
                Some(v) => pairs.push(PairedMeasurement::new(v, walk.reference_speed_mps)),
                None => missed += 1,
            }
        }
        if missed > 0 {
            println!("{missed} walks without a measurement were left out");
        }
        pairs
    } else {
        bail!("give --pairs or --walks");
    };
    let ba = bland_altman(&pairs)?;
    let r = &ba.report;
    println!("n        {}", r.n);
    println!("mae      {:.4} m/s", r.mae_mps);
    println!("error    {:.2} %", r.mean_error_pct);
    println!("bias     {:.4} m/s", r.bias_mps);
    println!("sd       {:.4} m/s", r.sd_mps);
    println!("loa      [{:.4}, {:.4}] m/s", r.loa_low_mps, r.loa_high_mps);
    if let Some(p) = &args.csv {
        write_csv(p, &ba.points)?;
    }
    if let Some(p) = &args.json {
        write_json(p, &ba)?;
    }
    Ok(())
}

fn summary(args: SummaryArgs) -> Result<()> {
    let report = load_trials(&args.log, &TrialFilter::default())?;
    if report.skipped_lines > 0 {
        eprintln!("skipped {} unreadable lines", report.skipped_lines);
    }
    let exclusions = match &args.exclusions {
        Some(p) => load_exclusions(p)?,
        None => Vec::new(),
    };
    let s = success_summary(&report.trials, &exclusions);
    print!("{}", s.to_table());
    if let Some(p) = &args.json {
        write_json(p, &s)?;
    }
    Ok(())
}

fn fit(args: FitArgs) -> Result<()> {
    let all: Vec<Point> = read_csv(&args.points)?;
    let total = all.len();
    let points: Vec<(f64, f64)> = all
        .iter()
        .filter(|p| !args.clinical_filter || (MIN_CLINICAL_SPEED..=MAX_CLINICAL_SPEED).contains(&p.y))
        .map(|p| (p.x, p.y))
        .collect();
    if args.clinical_filter {
        println!("removed {} of {} points outside the clinical range", total - points.len(), total);
    }
    let f = linear_fit(&points)?;
    let (lo, hi) = f.slope_ci();
    println!("n          {}", f.n);
    println!("slope      {:.6}  95% CI [{:.6}, {:.6}]", f.slope, lo, hi);
    println!("intercept  {:.6}", f.intercept);
    println!("r_squared  {:.4}", f.r_squared);
    let xmin = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if let Some(p) = &args.csv {
        write_csv(p, &f.band(xmin, xmax, args.band_steps))?;
    }
    if let Some(p) = &args.json {
        write_json(p, &f)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve(a) => tokio::runtime::Runtime::new()?.block_on(serve(a)),
        Command::Replay(a) => tokio::runtime::Runtime::new()?.block_on(replay_cmd(a)),
        Command::GenWalk(a) => gen_walk(a),
        Command::GenCorpus(a) => gen_corpus(a),
        Command::Sweep(a) => sweep(a),
        Command::BaselineSearch(a) => baseline_search(a),
        Command::Agree(a) => agree(a),
        Command::Summary(a) => summary(a),
        Command::Fit(a) => fit(a),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
