use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uav_swarm::harness::dataset::generate_offline_dataset;
use uav_swarm::harness::sweep::{
    aggregate, run_sweep, write_aggregate_csv, write_runs_csv, write_samples_csv, write_sweep, RunRow, SweepSpec,
};
use uav_swarm::harness::{run_episode_with, stream_rng, Event, PolicyKind, RunOptions, ScenarioConfig, SimEnvironment, Stream};
use uav_swarm::rl::{
    load_checkpoint, load_dataset, offline_pretrain, online_train, save_checkpoint, save_dataset, QNetwork,
};
use uav_swarm::{Error, Result};

#[derive(Parser)]
#[command(name = "uavsim", version, about = "Decentralized UAV swarm simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario (or, for `sweep`, experiment) TOML file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// pheromone | bscap | concov | dqn | random
    #[arg(long)]
    policy: Option<PolicyKind>,
    /// Q-network checkpoint file
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its sample trace, summary and event log
    Simulate(Common),
    /// Run an experiment grid and write per-run and aggregate CSVs
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Overrides the seed count of the experiment file
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Roll out epsilon-greedy BS-CAP and write an offline transition file
    GenDataset {
        #[command(flatten)]
        common: Common,
        /// Number of episodes (overrides the config)
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Offline pre-training on a transition file
    Pretrain {
        #[command(flatten)]
        common: Common,
        /// Transition file; generated from the config when omitted
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Online training with a shared replay memory
    Train {
        #[command(flatten)]
        common: Common,
        /// Number of episodes (overrides the config)
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Evaluate a policy over several seeds
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
}

fn scenario(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(p) = common.policy {
        cfg.policy = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn network(common: &Common) -> Result<Option<QNetwork>> {
    common.checkpoint.as_deref().map(load_checkpoint).transpose()
}

fn out_dir(common: &Common) -> Result<&Path> {
    std::fs::create_dir_all(&common.out)?;
    Ok(&common.out)
}

fn write_events(events: &[Event], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["time", "kind", "uav", "slot", "cell_x", "cell_y"])?;
    for e in events {
        match e {
            Event::Decision { time, uav, slot, cell } => w.write_record([
                format!("{time:.1}"),
                "decision".into(),
                uav.to_string(),
                slot.to_string(),
                cell.x.to_string(),
                cell.y.to_string(),
            ])?,
            Event::Failure { time, uav } => w.write_record([
                format!("{time:.1}"),
                "failure".into(),
                uav.to_string(),
                String::new(),
                String::new(),
                String::new(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

fn simulate(common: &Common) -> Result<()> {
    let cfg = scenario(common)?;
    let net = network(common)?;
    let trace = run_episode_with(&cfg, RunOptions { net: net.as_ref(), ..Default::default() })?;
    let dir = out_dir(common)?;
    write_samples_csv(&trace.samples, File::create(dir.join("samples.csv"))?)?;
    write_events(&trace.events, &dir.join("events.csv"))?;
    let row = RunRow {
        scenario: 0,
        policy: cfg.policy,
        params: cfg.params_label(),
        n_uavs: cfg.n_uavs,
        speed_mps: cfg.speed_mps,
        failure_pct: cfg.failure_pct,
        seed: cfg.seed,
        outcome: Ok(trace.summary),
    };
    write_runs_csv(std::slice::from_ref(&row), File::create(dir.join("summary.csv"))?)?;
    let s = trace.summary;
    println!(
        "coverage {:.2}%  Tc {}  F {}  NCC {:.3}  AND {:.3}  Tbs {:.2}%  G {:.2}",
        s.coverage_end,
        s.tc.map_or("censored".into(), |t| format!("{t:.0} s")),
        s.fairness.map_or("n/a".into(), |f| format!("{f:.3}")),
        s.ncc,
        s.and,
        s.tbs,
        s.giant
    );
    Ok(())
}

fn sweep(common: &Common, seeds: Option<u64>) -> Result<()> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Error::config("sweep needs --config <experiment file>"))?;
    let mut spec = SweepSpec::load(path)?;
    if let Some(n) = seeds {
        spec.seeds = n;
    }
    if let Some(s) = common.seed {
        spec.base_seed = s;
    }
    if let Some(p) = common.policy {
        spec.grid.policy = vec![p];
    }
    let net = network(common)?;
    let result = run_sweep(&spec, net.as_ref())?;
    write_sweep(&result, out_dir(common)?)?;
    let failed: usize = result.aggregates.iter().map(|a| a.failed_runs).sum();
    println!("{} runs, {} scenarios, {} failed", result.runs.len(), result.aggregates.len(), failed);
    Ok(())
}

fn gen_dataset(common: &Common, seeds: Option<u64>) -> Result<PathBuf> {
    let cfg = scenario(common)?;
    let episodes = seeds.map_or(cfg.dataset.episodes, |s| s as usize);
    let data = generate_offline_dataset(&cfg, episodes, cfg.dataset.epsilon)?;
    let path = out_dir(common)?.join("dataset.bin");
    save_dataset(&data, &path)?;
    println!("{} transitions from {episodes} episodes -> {}", data.len(), path.display());
    Ok(path)
}

fn pretrain(common: &Common, dataset: Option<&Path>) -> Result<()> {
    let cfg = scenario(common)?;
    let data = match dataset {
        Some(p) => load_dataset(p)?,
        None => generate_offline_dataset(&cfg, cfg.dataset.episodes, cfg.dataset.epsilon)?,
    };
    let init = match network(common)? {
        Some(n) => n,
        None => QNetwork::standard(&mut stream_rng(cfg.seed, Stream::Init)),
    };
    let mut rng = stream_rng(cfg.seed, Stream::Training);
    let report = offline_pretrain(init, &data, &cfg.offline, &mut rng)?;
    let dir = out_dir(common)?;
    save_checkpoint(&report.net, &dir.join("pretrained.qnet"))?;
    let mut w = csv::Writer::from_writer(File::create(dir.join("losses.csv"))?);
    w.write_record(["epoch", "loss"])?;
    for (i, l) in report.epoch_losses.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{l:.9}")])?;
    }
    w.flush()?;
    println!(
        "{} transitions, loss {:.6} -> {:.6}",
        data.len(),
        report.epoch_losses.first().copied().unwrap_or(f64::NAN),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn train(common: &Common, seeds: Option<u64>) -> Result<()> {
    let mut cfg = scenario(common)?;
    if let Some(n) = seeds {
        cfg.online.episodes = n as usize;
    }
    let init = match network(common)? {
        Some(n) => n,
        None => QNetwork::standard(&mut stream_rng(cfg.seed, Stream::Init)),
    };
    let hyper = cfg.online;
    let mut env = SimEnvironment { config: cfg.clone() };
    let report = online_train(&mut env, init, &hyper, stream_rng(cfg.seed, Stream::Training))?;
    let dir = out_dir(common)?;
    save_checkpoint(&report.net, &dir.join("trained.qnet"))?;
    let mut w = csv::Writer::from_writer(File::create(dir.join("episodes.csv"))?);
    w.write_record(["episode", "epsilon", "total_reward", "legs"])?;
    for (i, e) in report.episodes.iter().enumerate() {
        w.write_record([
            i.to_string(),
            format!("{:.6}", hyper.epsilon(i)),
            format!("{:.6}", e.total_reward),
            e.transitions.to_string(),
        ])?;
    }
    w.flush()?;
    println!("{} episodes, {} gradient steps", report.episodes.len(), report.gradient_steps);
    Ok(())
}

fn eval(common: &Common, seeds: u64) -> Result<()> {
    let mut cfg = scenario(common)?;
    cfg.record_events = false;
    let net = network(common)?;
    if cfg.policy == PolicyKind::Dqn && net.is_none() {
        return Err(Error::config("eval of the dqn policy needs --checkpoint"));
    }
    let spec = SweepSpec {
        seeds,
        base_seed: cfg.seed,
        scenario: cfg,
        grid: Default::default(),
    };
    let result = run_sweep(&spec, net.as_ref())?;
    let dir = out_dir(common)?;
    write_sweep(&result, dir)?;
    let rows: Vec<&RunRow> = result.runs.iter().collect();
    if let Some(a) = aggregate(&rows) {
        write_aggregate_csv(std::slice::from_ref(&a), std::io::stdout())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => simulate(&c),
        Command::Sweep { common, seeds } => sweep(&common, seeds),
        Command::GenDataset { common, seeds } => gen_dataset(&common, seeds).map(|_| ()),
        Command::Pretrain { common, dataset } => pretrain(&common, dataset.as_deref()),
        Command::Train { common, seeds } => train(&common, seeds),
        Command::Eval { common, seeds } => eval(&common, seeds),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
