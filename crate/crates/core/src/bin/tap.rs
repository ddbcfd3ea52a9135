use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tap_core::datasets::{generate, load_dataset, write_atomic, write_dataset, DatasetKind, GenConfig};
use tap_core::geom::Mode;
use tap_core::instance::{validate_instance, validate_solution, ProblemInstance};
use tap_core::placement::Strategy;
use tap_core::policy::{run_episode, Choice, Policy};
use tap_core::render::write_svgs;
use tap_core::solvers::{solve_greedy, solve_random};
use tap_core::training::{evaluate, train_from_config, Method, TrainConfig};
use tap_core::{Result, TapError};

#[derive(Parser)]
#[command(name = "tap", version, about = "Transport-and-pack solver, trainer and dataset generator")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "TAP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset directory.
    Gen(GenArgs),
    /// Solve one instance and print or write the solution.
    Solve(SolveArgs),
    /// Train a policy from a JSON config.
    Train(TrainArgs),
    /// Evaluate a method on a dataset.
    Eval(EvalArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "rand")]
    mode: DatasetKind,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 7)]
    init_width: u32,
    #[arg(long, default_value_t = 5)]
    target_width: u32,
    /// 2 or 3.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    dims: u8,
    #[arg(long, default_value_t = 1)]
    containers: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "greedy")]
    method: Method,
    /// Policy checkpoint for `--method net`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "lb")]
    placement: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solve through the rolling window (engaged automatically when needed).
    #[arg(long)]
    rolling: bool,
    /// Directory for SVG frames.
    #[arg(long)]
    render: Option<PathBuf>,
    /// Solution file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "greedy")]
    method: Method,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "lb")]
    placement: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    rolling: bool,
    /// Metrics file (`.json` for JSON, CSV otherwise); stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_instance(path: &Path) -> Result<ProblemInstance> {
    let inst = ProblemInstance::from_json(&std::fs::read_to_string(path)?)?;
    let errs = validate_instance(&inst);
    if !errs.is_empty() {
        return Err(TapError::Validation(errs));
    }
    Ok(inst)
}

fn load_model(path: Option<&PathBuf>) -> Result<Policy> {
    let path = path.ok_or_else(|| TapError::Validation(vec!["--method net needs --model".into()]))?;
    Policy::load(path)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let mode = if a.dims == 3 { Mode::Three } else { Mode::Two };
    let mut cfg = GenConfig::new(a.mode, mode);
    cfg.n = a.n;
    cfg.count = a.count;
    cfg.seed = a.seed;
    cfg.init_width = a.init_width;
    cfg.target_width = a.target_width;
    cfg.container_count = a.containers;
    if mode == Mode::Three {
        cfg.init_depth = a.init_width;
        cfg.target_depth = a.target_width;
    }
    let items = generate(&cfg)?;
    let m = write_dataset(&a.out, &cfg, &items)?;
    log::info!("wrote {} instances to {} (checksum {})", m.count, a.out.display(), m.checksum);
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let sol = match a.method {
        Method::Greedy => solve_greedy(&inst, a.placement)?,
        Method::Random => solve_random(&inst, a.placement, &mut ChaCha8Rng::seed_from_u64(a.seed))?,
        Method::Net => {
            let policy = load_model(a.model.as_ref())?;
            let mut rolling = a.rolling;
            if !rolling && inst.len() > policy.config.capacity {
                log::warn!("{} boxes exceed the model capacity {}; using rolling mode", inst.len(), policy.config.capacity);
                rolling = true;
            }
            run_episode(&policy, &inst, a.placement, Choice::Argmax, rolling)?.solution
        }
    };
    let errs = validate_solution(&inst, &sol);
    if !errs.is_empty() {
        return Err(TapError::Validation(errs));
    }
    let r = &sol.reward.aggregate;
    log::info!("C {:.4} P {:.4} S {:.4} R {:.4}", r.compactness, r.pyramidality, r.stability, r.reward);
    if let Some(dir) = &a.render {
        write_svgs(dir, &inst, Some(&sol))?;
    }
    emit(a.out.as_ref(), &(sol.to_json() + "\n"))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let cfg: TrainConfig = serde_json::from_str(&std::fs::read_to_string(&a.config)?)?;
    let out = train_from_config(&cfg)?;
    let best = &out.curve[out.best_epoch - 1].metrics;
    log::info!("best epoch {} (R {:.4})", out.best_epoch, best.r);
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let data = load_dataset(&a.dataset)?;
    let policy = match a.method {
        Method::Net => Some(load_model(a.model.as_ref())?),
        _ => None,
    };
    let rep = evaluate(a.method, policy.as_ref(), &data.instances, a.placement, a.seed, a.rolling)?;
    let json = a.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let text = if json {
        serde_json::to_string_pretty(&serde_json::json!({ "metrics": rep.metrics, "t_ms": rep.t_ms }))? + "\n"
    } else {
        rep.csv()
    };
    emit(a.out.as_ref(), &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    let res = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Eval(a) => cmd_eval(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
