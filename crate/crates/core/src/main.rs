use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use latency_risk::licom::write_heatmap;
use latency_risk::scenario::{
    perceived_risk_trace, report_stem, risk_map_sweep, run_batch, run_paired, run_trial, trial_seed, write_batch,
    ScenarioConfig, ScenarioKind, SweepGrid,
};
use latency_risk::session::{serve, ServeOptions};
use latency_risk::vqa::OperatorMode;
use latency_risk::{Error, Result};

#[derive(Parser)]
#[command(name = "latency-risk", version, about = "Latency-aware shared-autonomy driving simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON scenario configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// merge, right-turn or left-turn.
    #[arg(long)]
    scenario: Option<ScenarioKind>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut config = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::for_kind(self.scenario.unwrap_or(ScenarioKind::Merge)),
        };
        if let (Some(kind), Some(_)) = (self.scenario, &self.config) {
            config.kind = kind;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and print its result as JSON.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: Option<OperatorMode>,
        #[arg(long)]
        latency_ms: Option<f64>,
        /// Trial index under the master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Paired baseline and latency-aware batches per latency.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated latencies in milliseconds.
        #[arg(long, value_delimiter = ',', default_value = "200,300,400")]
        latencies: Vec<f64>,
        /// Run only this policy instead of both.
        #[arg(long)]
        policy: Option<OperatorMode>,
        #[arg(long)]
        master_seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Ground-truth and perceived risk over time as CSV.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "100,200,300,400")]
        latencies: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Risk-map heatmaps for a range of latencies.
    Licom {
        #[command(flatten)]
        common: Common,
        /// Comma-separated latencies in seconds.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1.0,1.5,2.0,2.5")]
        taus: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scene time of the snapshot, seconds.
        #[arg(long, default_value_t = 4.5)]
        time: f64,
        #[arg(long, default_value_t = 1.0)]
        resolution: f64,
        #[arg(long, default_value_t = 8)]
        px_per_cell: u32,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Serve one live session to an operator console.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: String,
        /// Simulation speed relative to wall-clock time (0.25 to 1).
        #[arg(long, default_value_t = 1.0)]
        pace: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON-lines session log.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Seconds to wait for a console before giving up.
        #[arg(long)]
        hold_timeout: Option<f64>,
    },
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn file_stem(config: &ScenarioConfig, what: &str, seed: u64) -> String {
    format!("{}-{what}-{}-s{seed}", config.kind, config.digest())
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "never".to_string(), |t| format!("{t:.2} s"))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, policy, latency_ms, seed, out_dir } => {
            let mut config = common.load()?;
            if let Some(p) = policy {
                config.policy = p;
            }
            if let Some(ms) = latency_ms {
                config = config.with_latency(ms / 1000.0);
            }
            config.validate()?;
            let result = run_trial(&config, trial_seed(config.master_seed, seed))?;
            let text = serde_json::to_string_pretty(&result)?;
            match out_dir {
                Some(dir) => {
                    create_dir(&dir)?;
                    let path = dir.join(format!("{}.json", file_stem(&config, "trial", seed)));
                    std::fs::write(&path, text)?;
                    println!(
                        "{} {} collided={} outcome={:?} -> {}",
                        config.kind,
                        config.policy.name(),
                        result.collided,
                        result.outcome,
                        path.display()
                    );
                }
                None => println!("{text}"),
            }
        }
        Command::Batch { common, trials, latencies, policy, master_seed, out_dir } => {
            let mut base = common.load()?;
            if let Some(n) = trials {
                base.trials = n;
            }
            if let Some(s) = master_seed {
                base.master_seed = s;
            }
            println!("scenario,latency_ms,method,collision_rate,collisions,reduction");
            for ms in latencies {
                let config = base.clone().with_latency(ms / 1000.0);
                match policy {
                    Some(p) => {
                        let report = run_batch(&config.with_policy(p))?;
                        write_batch(&out_dir, &report)?;
                        println!(
                            "{},{ms},{},{:.4},{},",
                            report.kind,
                            p.name(),
                            report.collision_rate,
                            report.collision_count
                        );
                    }
                    None => {
                        let paired = run_paired(&config)?;
                        for r in [&paired.baseline, &paired.latency_aware] {
                            write_batch(&out_dir, r)?;
                        }
                        let summary = out_dir.join(format!("{}.paired.json", report_stem(&paired.baseline)));
                        std::fs::write(
                            &summary,
                            serde_json::to_vec_pretty(&serde_json::json!({
                                "baseline": paired.baseline.collision_count,
                                "latency_aware": paired.latency_aware.collision_count,
                                "reduction": paired.reduction,
                            }))?,
                        )?;
                        println!(
                            "{},{ms},baseline,{:.4},{},",
                            config.kind, paired.baseline.collision_rate, paired.baseline.collision_count
                        );
                        println!(
                            "{},{ms},latency-aware,{:.4},{},{}",
                            config.kind,
                            paired.latency_aware.collision_rate,
                            paired.latency_aware.collision_count,
                            paired.reduction
                        );
                    }
                }
            }
        }
        Command::Trace { common, latencies, seed, out_dir } => {
            let config = common.load()?;
            let secs: Vec<f64> = latencies.iter().map(|ms| ms / 1000.0).collect();
            let trace = perceived_risk_trace(&config, trial_seed(config.master_seed, seed), &secs)?;
            create_dir(&out_dir)?;
            let path = out_dir.join(format!("{}.csv", file_stem(&config, "trace", seed)));
            trace.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
            println!("ground truth crosses lambda at {}", fmt_time(trace.ground_truth_crossing()));
            for l in &secs {
                println!(
                    "latency {:.0} ms: baseline {}, latency-aware {}",
                    l * 1000.0,
                    fmt_time(trace.baseline_crossing(*l)),
                    fmt_time(trace.latency_aware_crossing(*l))
                );
            }
            println!("{}", path.display());
        }
        Command::Licom { common, taus, seed, time, resolution, px_per_cell, out_dir } => {
            let config = common.load()?;
            let grid = SweepGrid { resolution, ..SweepGrid::default() };
            let maps = risk_map_sweep(&config, trial_seed(config.master_seed, seed), time, &taus, &grid)?;
            create_dir(&out_dir)?;
            let lambda = config.safety.lambda;
            for (tau, map) in taus.iter().zip(&maps) {
                let stem = file_stem(&config, &format!("licom-t{time:.2}-tau{tau:.2}"), seed);
                let png = out_dir.join(format!("{stem}.png"));
                write_heatmap(map, lambda, px_per_cell, &png)?;
                std::fs::write(out_dir.join(format!("{stem}.licm")), map.to_wire())?;
                println!("tau {tau:.2} s: {} unsafe cells -> {}", map.unsafe_count(lambda), png.display());
            }
        }
        Command::Serve { common, bind, pace, seed, log, hold_timeout } => {
            let config = common.load()?;
            if !(0.25..=1.0).contains(&pace) {
                return Err(Error::InvalidInput(format!("pace must be within 0.25 to 1, got {pace}")));
            }
            let options = ServeOptions {
                pace,
                seed: trial_seed(config.master_seed, seed),
                log_path: log,
                hold_timeout: hold_timeout.map(Duration::from_secs_f64),
                ..ServeOptions::default()
            };
            eprintln!("waiting for a console on {bind}");
            let outcome = serve(bind.as_str(), &config, &options)?;
            println!("{}", serde_json::to_string_pretty(&latency_risk::session::SessionResult::from(&outcome.result))?);
            eprintln!("frames sent {}, dropped {}", outcome.frames_sent, outcome.frames_dropped);
        }
    }
    Ok(())
}
