use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use axisbench::benchkit::{self, emit_report, evaluate_pair, find_pair, suite_registry, BenchError, BenchmarkPair};
use axisbench::config::{load_config, load_config_file, ConfigError, EnvConfig};
use axisbench::env::{BatchEnv, Env, EnvError, NeumaierSum, Policy, PolicySpec};
use axisbench::renderer::write_raw;
use axisbench::rng::RngKey;
use axisbench::theory::verify_random;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const EASY: &str = include_str!("../../../configs/easy.yaml");
const HARD: &str = include_str!("../../../configs/hard.yaml");

#[derive(Parser)]
#[command(name = "axisbench", version, about = "Platformer environment with factorized visual axes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Step a batch of environments under a scripted policy and print metrics.
    Run(RunArgs),
    /// Write frames from a seeded random-action rollout.
    Render(RenderArgs),
    /// Measure steps per second over a sweep of batch sizes.
    BenchThroughput(BenchArgs),
    /// Evaluate benchmark pairs and write a gap report.
    Suite(SuiteArgs),
    /// Check induced-state-policy equivalences on random tabular POMDPs.
    VerifyTheory(TheoryArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file, or `easy` / `hard`. Defaults when omitted.
    #[arg(long)]
    config: Option<String>,
    #[arg(long, default_value_t = 1)]
    envs: usize,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyName::Random)]
    policy: PolicyName,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyName {
    Random,
    Right,
    Idle,
}

impl PolicyName {
    fn spec(self) -> PolicySpec {
        match self {
            PolicyName::Random => PolicySpec::Random,
            PolicyName::Right => PolicySpec::Right,
            PolicyName::Idle => PolicySpec::Idle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameFormat {
    Png,
    Raw,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    config: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    frames: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FrameFormat::Png)]
    format: FrameFormat,
}

#[derive(Args)]
struct BenchArgs {
    /// `easy`, `hard`, or a config file.
    #[arg(long, default_value = "easy")]
    config: String,
    /// Sweep n_envs = 2^0 ..= 2^P.
    #[arg(long, default_value_t = 8)]
    max_envs_pow: u32,
    /// Environment steps timed per repetition (after a 10% warmup).
    #[arg(long, default_value_t = 20_000)]
    steps_per_point: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for throughput.csv and throughput.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("which").required(true).args(["pair", "all"]))]
struct SuiteArgs {
    /// `suite/id` or `suite-id`, e.g. `filters/4`.
    #[arg(long)]
    pair: Option<String>,
    #[arg(long)]
    all: bool,
    /// Directory of JSON policy specs, one checkpoint per file in name order.
    /// Without it, the idle, right and random policies serve as checkpoints.
    #[arg(long)]
    policy_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    /// Override the episode length on both sides of every pair.
    #[arg(long)]
    episode_length: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Write certificates as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Runtime(e.to_string()),
            ConfigError::UnknownAxis(_) => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::Config(c) => c.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::UnknownPair(_) | BenchError::UnknownSuite(_) | BenchError::Empty(_) => {
                CliError::Usage(e.to_string())
            }
            BenchError::Config(c) => c.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn resolve_config(name: Option<&str>) -> Result<EnvConfig, CliError> {
    Ok(match name {
        None => EnvConfig::default(),
        Some("easy") => load_config(EASY)?,
        Some("hard") => load_config(HARD)?,
        Some(path) => load_config_file(path)?,
    })
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    if a.envs == 0 {
        return Err(CliError::Usage("--envs must be at least 1".into()));
    }
    let cfg = resolve_config(a.config.as_deref())?;
    let env = Env::new(&cfg)?;
    let root = RngKey::from_seed(a.seed);
    let keys: Vec<RngKey> = (0..a.envs as u64).map(|i| root.child(i)).collect();
    let spec = a.policy.spec();
    let mut policies: Vec<Box<dyn Policy>> =
        (0..a.envs as u64).map(|i| spec.instantiate(root.fold_in(1).child(i))).collect();
    let mut batch = BatchEnv::new(env, &keys, true);

    let mut totals: Vec<NeumaierSum> = (0..a.envs).map(|_| NeumaierSum::default()).collect();
    let mut episode_returns = Vec::new();
    let mut finished = Vec::new();
    let mut running: Vec<NeumaierSum> = (0..a.envs).map(|_| NeumaierSum::default()).collect();
    let mut last = Vec::new();
    for _ in 0..a.steps {
        let actions: Vec<i64> = policies.iter_mut().enumerate().map(|(i, p)| p.act(&batch.frame(i))).collect();
        last.clear();
        for (i, tr) in batch.step(&actions)?.into_iter().enumerate() {
            let tr = tr?;
            totals[i].add(tr.reward);
            running[i].add(tr.reward);
            if tr.truncated {
                episode_returns.push(running[i].value());
                running[i] = NeumaierSum::default();
                finished.push(tr.info);
            }
            last.push(tr.info);
        }
    }
    let n = a.envs as f64;
    let mean = |v: Vec<f64>| if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) };
    let summary = json!({
        "envs": a.envs,
        "steps": a.steps,
        "policy": format!("{:?}", spec),
        "seed": a.seed,
        "return": totals.iter().map(NeumaierSum::value).sum::<f64>() / n,
        "episodes_completed": finished.len(),
        "episode_return": mean(episode_returns),
        "success_rate": mean(finished.iter().map(|i| i.success as u8 as f64).collect()),
        "distance": mean(last.iter().map(|i| i.distance).collect()),
        "progress": mean(last.iter().map(|i| i.progress).collect()),
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

fn cmd_render(a: RenderArgs) -> Result<(), CliError> {
    if a.frames == 0 {
        return Err(CliError::Usage("--frames must be at least 1".into()));
    }
    let cfg = resolve_config(a.config.as_deref())?;
    let env = Env::new(&cfg)?;
    let root = RngKey::from_seed(a.seed);
    let mut actions = PolicySpec::Random.instantiate(root.fold_in(1));
    let (mut frame, mut s) = env.reset(root.child(0));
    let mut frames = Vec::with_capacity(a.frames);
    for t in 0..a.frames {
        if t > 0 {
            let act = actions.act(&frame);
            let (n, r) = env.step(&s, act)?;
            s = if r.truncated { env.reset_state(n.keys.next_episode()) } else { n };
            frame = env.observe(&s);
        }
        frames.push(frame.clone());
    }
    std::fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    match a.format {
        FrameFormat::Png => {
            for (i, f) in frames.iter().enumerate() {
                let p = a.out.join(format!("frame_{i:05}.png"));
                f.save_png(&p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
            }
        }
        FrameFormat::Raw => {
            let p = a.out.join("frames.raw");
            let file = std::fs::File::create(&p).map_err(io_err(&p))?;
            write_raw(std::io::BufWriter::new(file), &frames).map_err(io_err(&p))?;
        }
    }
    println!("wrote {} frame(s) to {}", frames.len(), a.out.display());
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let label = match a.config.as_str() {
        "easy" | "hard" => a.config.clone(),
        p => Path::new(p).file_stem().map_or("custom".into(), |s| s.to_string_lossy().into_owned()),
    };
    if a.steps_per_point == 0 {
        return Err(CliError::Usage("--steps-per-point must be at least 1".into()));
    }
    let cfg = resolve_config(Some(&a.config))?;
    let env = Env::new(&cfg)?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let note = format!("{threads} hardware thread(s)");
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut csv = String::from("n_envs,steps_per_second,wall_seconds,config_label\n");
    for p in 0..=a.max_envs_pow {
        let n = 1usize << p;
        let bytes = n * env.frame_len();
        if Vec::<u8>::new().try_reserve_exact(bytes * 2).is_err() {
            skipped.push(json!({"n_envs": n, "reason": format!("cannot allocate {bytes} observation bytes")}));
            continue;
        }
        let mut batch = BatchEnv::from_seed(env.clone(), n, a.seed, true);
        let iters = a.steps_per_point.div_ceil(n);
        let mut s = RngKey::from_seed(a.seed).fold_in(p as u64).stream();
        let acts: Vec<Vec<i64>> = (0..iters).map(|_| (0..n).map(|_| s.below(8) as i64).collect()).collect();
        for a in acts.iter().take(iters.div_ceil(10)) {
            batch.step(a)?;
        }
        let mut walls = Vec::new();
        for _ in 0..3 {
            let t0 = Instant::now();
            for a in &acts {
                batch.step(a)?;
            }
            walls.push(t0.elapsed().as_secs_f64());
        }
        let wall = median(walls);
        let sps = (iters * n) as f64 / wall;
        csv.push_str(&format!("{n},{sps:.1},{wall:.6},{label}\n"));
        rows.push(json!({
            "n_envs": n, "steps_per_second": sps, "wall_seconds": wall, "config_label": label, "hardware_note": note,
        }));
    }
    print!("{csv}");
    for s in &skipped {
        eprintln!("skipped: {s}");
    }
    if let Some(dir) = a.out {
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let p = dir.join("throughput.csv");
        std::fs::write(&p, &csv).map_err(io_err(&p))?;
        let p = dir.join("throughput.json");
        let doc = json!({"schema_version": 1, "rows": rows, "skipped": skipped});
        std::fs::write(&p, serde_json::to_string_pretty(&doc).expect("serializes")).map_err(io_err(&p))?;
    }
    Ok(())
}

fn load_checkpoints(dir: &Path) -> Result<Vec<PolicySpec>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!("{}: no .json policy specs", dir.display())));
    }
    files
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn cmd_suite(a: SuiteArgs) -> Result<(), CliError> {
    if a.seeds == 0 || a.episodes == 0 {
        return Err(CliError::Usage("--seeds and --episodes must be at least 1".into()));
    }
    let mut pairs: Vec<BenchmarkPair> = if a.all {
        suite_registry()
    } else {
        let name = a.pair.as_deref().unwrap_or_default().replace('/', "-");
        vec![find_pair(&name)?]
    };
    if let Some(len) = a.episode_length {
        for p in &mut pairs {
            p.train.episode_length = len;
            p.eval.episode_length = len;
            p.train.validate()?;
            p.eval.validate()?;
        }
    }
    let specs = match &a.policy_dir {
        Some(dir) => load_checkpoints(dir)?,
        None => vec![PolicySpec::Idle, PolicySpec::Right, PolicySpec::Random],
    };
    let factories: Vec<Box<dyn Fn(RngKey) -> Box<dyn Policy> + Sync>> = specs
        .into_iter()
        .map(|s| Box::new(move |k: RngKey| s.instantiate(k)) as Box<dyn Fn(RngKey) -> Box<dyn Policy> + Sync>)
        .collect();
    let checkpoints: Vec<benchkit::Checkpoint<'_>> = factories.iter().map(|f| f.as_ref()).collect();
    let root = RngKey::from_seed(a.seed);
    let seeds: Vec<RngKey> = (0..a.seeds as u64).map(|i| root.child(i)).collect();
    let mut results = Vec::with_capacity(pairs.len());
    for p in &pairs {
        log::info!("evaluating {}", p.name());
        results.push(evaluate_pair(p, &checkpoints, &seeds, a.episodes)?);
    }
    let report = emit_report(&results);
    print!("{}", report.table());
    if let Some(out) = a.out {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        std::fs::write(&out, report.to_json()).map_err(io_err(&out))?;
    }
    Ok(())
}

fn cmd_theory(a: TheoryArgs) -> Result<(), CliError> {
    if a.instances == 0 {
        return Err(CliError::Usage("--instances must be at least 1".into()));
    }
    if !(a.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let t0 = Instant::now();
    let certs = verify_random(a.instances, a.seed, a.tol);
    let failed: Vec<_> = certs.iter().filter(|c| !c.passed).collect();
    let worst = certs.iter().map(|c| c.worst().1).fold(0.0, f64::max);
    if let Some(out) = &a.out {
        std::fs::write(out, serde_json::to_string_pretty(&certs).expect("serializes")).map_err(io_err(out))?;
    }
    println!(
        "{}/{} instances pass at tol {:e}; worst deviation {worst:e}; {:.2?}",
        certs.len() - failed.len(),
        certs.len(),
        a.tol,
        t0.elapsed()
    );
    match failed.first() {
        None => Ok(()),
        Some(c) => {
            let (check, dev) = c.worst();
            Err(CliError::Runtime(format!(
                "{} instance(s) failed; first: seed {} ({check} deviates by {dev:e})",
                failed.len(),
                c.seed
            )))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Render(a) => cmd_render(a),
        Command::BenchThroughput(a) => cmd_bench(a),
        Command::Suite(a) => cmd_suite(a),
        Command::VerifyTheory(a) => cmd_theory(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
