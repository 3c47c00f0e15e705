//! `idmf`: end-to-end car-following trajectory prediction pipeline.
//!
//! Subcommands: simulate | noise | train | eval | sweep | calibrate | plot.
//! Every run is driven by an explicit seed and echoes its resolved
//! configuration, so rerunning a command with the same inputs reproduces
//! its outputs byte for byte.

mod config;
mod datasets;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use idmf_core::calibrate::{calibrate_idm, validate_fde, ParamBounds};
use idmf_core::csv_io::{DatasetManifest, SplitCounts};
use idmf_core::idm::{closed_loop_rollout, IntegrationConfig};
use idmf_core::scenario::{build_dataset, GenerationConfig};
use idmf_core::trajectory::Trajectory;
use idmf_eval::{
    evaluate_idm_baseline, evaluate_model, render_loss_curves, render_trajectory_overlay, sweep,
    MetricReport, SweepContext, SweepModel, SweepSpec,
};
use idmf_nn::net::{FollowerNet, NetConfig};
use idmf_nn::trainer::{train, TrainConfig, TrainRecord};

use config::{Overrides, RunConfig};
use datasets::{
    make_noisy_dataset, read_pair_dataset, split_from_manifest, write_pair_dataset, NoisyDataset,
};

#[derive(Parser)]
#[command(
    name = "idmf",
    about = "Model-informed car-following trajectory prediction pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all randomness in this command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// IDM parameter preset: sumo | ngsim-wang2021 | ngsim-yang2022.
    #[arg(long, global = true)]
    idm_preset: Option<String>,
    /// Desk preset: hidden 32, 30 epochs, truncated splits.
    #[arg(long, global = true)]
    desk: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a clean leader/follower pair dataset.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of scenarios.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Window, split, and add GPS noise to a simulated dataset.
    Noise {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory produced by `simulate`.
        #[arg(long)]
        data: PathBuf,
        /// Noise level: none | small | middle | big.
        #[arg(long)]
        level: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the network on a noisy dataset.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory produced by `noise`.
        #[arg(long)]
        data: PathBuf,
        /// Data-term weight in [0, 1].
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint and the IDM baseline on the test split.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate every (mu, noise level) cell.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory produced by `simulate`.
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated mu values; 1.0 and 0.0 select the pure
        /// learning / pure IDM baselines.
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<f64>>,
        /// Comma-separated noise levels.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<String>>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate IDM parameters on a clean pair dataset.
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        data: PathBuf,
        /// Objective-evaluation budget.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render loss curves and/or trajectory overlays as SVG.
    Plot {
        #[command(flatten)]
        common: CommonArgs,
        /// train_record.csv from `train`.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Noisy dataset for trajectory overlays.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Checkpoints to overlay (repeatable).
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        /// Test-split window index to plot.
        #[arg(long, default_value_t = 0)]
        window: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("IDMF_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One machine-parseable line on stderr.
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}

fn resolve(common: &CommonArgs, extra: Overrides) -> Result<RunConfig> {
    let overrides = Overrides {
        seed: common.seed.or(extra.seed),
        idm_preset: common.idm_preset.clone().or(extra.idm_preset),
        desk: common.desk || extra.desk,
        ..extra
    };
    RunConfig::resolve(common.config.as_deref(), &overrides)
}

fn net_config(cfg: &RunConfig, horizon: usize) -> NetConfig {
    NetConfig {
        hidden: cfg.hidden,
        layers: cfg.layers,
        horizon,
    }
}

fn train_config(cfg: &RunConfig) -> TrainConfig {
    TrainConfig {
        mu: cfg.mu,
        learning_rate: cfg.learning_rate,
        weight_decay: cfg.weight_decay,
        batch_size: cfg.batch_size,
        max_epochs: cfg.epochs,
        grad_clip_norm: cfg.grad_clip_norm,
        seed: cfg.seed,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, n, out } => {
            let cfg = resolve(
                &common,
                Overrides {
                    n_scenarios: n,
                    ..Overrides::default()
                },
            )?;
            let idm = cfg.idm_params().expect("validated preset");
            let gen = GenerationConfig {
                duration: cfg.duration,
                dt: cfg.dt,
                gap_threshold: cfg.gap_threshold,
                ..GenerationConfig::default()
            };
            let (pairs, scenarios) = build_dataset(cfg.n_scenarios, &idm, &gen, cfg.seed)?;
            let split = {
                let windows = idmf_core::pipeline::window_pairs(
                    &pairs,
                    cfg.window_len,
                    cfg.stride,
                    cfg.gap_threshold,
                )?;
                idmf_core::pipeline::split_dataset(windows, cfg.split_ratios, cfg.seed)?
            };
            let counts = split.counts();
            let manifest = DatasetManifest {
                dt: cfg.dt,
                window_len: cfg.window_len,
                gap_threshold: cfg.gap_threshold,
                seed: cfg.seed,
                split_ratios: cfg.split_ratios,
                window_counts: SplitCounts {
                    train: counts.0,
                    validation: counts.1,
                    test: counts.2,
                },
            };
            write_pair_dataset(&out, &pairs, &manifest, &scenarios)?;
            cfg.echo(&out)?;
            println!(
                "simulated {} pairs -> {} windows (train {}, val {}, test {}) in {}",
                pairs.len(),
                split.total(),
                counts.0,
                counts.1,
                counts.2,
                out.display()
            );
            Ok(())
        }
        Command::Noise {
            common,
            data,
            level,
            out,
        } => {
            let cfg = resolve(
                &common,
                Overrides {
                    noise_level: level,
                    ..Overrides::default()
                },
            )?;
            let (pairs, manifest) = read_pair_dataset(&data)?;
            let dataset = make_noisy_dataset(&pairs, &manifest, &cfg)?;
            dataset.save(&out)?;
            cfg.echo(&out)?;
            let c = dataset.counts();
            println!(
                "noised {} windows at level '{}' (train {}, val {}, test {}) in {}",
                c.train + c.validation + c.test,
                dataset.level,
                c.train,
                c.validation,
                c.test,
                out.display()
            );
            Ok(())
        }
        Command::Train {
            common,
            data,
            mu,
            hidden,
            epochs,
            out,
        } => {
            let cfg = resolve(
                &common,
                Overrides {
                    mu,
                    hidden,
                    epochs,
                    ..Overrides::default()
                },
            )?;
            let mut dataset = NoisyDataset::load(&data)?;
            if cfg.desk {
                dataset.truncate_for_desk(cfg.desk_train_windows);
            }
            let idm = cfg.idm_params().expect("validated preset");
            let net = FollowerNet::init(net_config(&cfg, dataset.window_len), cfg.seed)?;
            let tc = train_config(&cfg);
            let (best, record) = train(&net, &dataset.splits, &idm, &tc)?;
            std::fs::create_dir_all(&out)?;
            best.save_checkpoint(out.join("checkpoint.bin"))?;
            std::fs::write(out.join("train_record.csv"), record.to_csv())?;
            cfg.echo(&out)?;
            println!(
                "trained mu={} for {} epochs: best val {:.4} m at epoch {} -> {}",
                tc.mu,
                record.train_loss.len(),
                record.val_loss[record.best_epoch],
                record.best_epoch + 1,
                out.display()
            );
            Ok(())
        }
        Command::Eval {
            common,
            data,
            checkpoint,
            out,
        } => {
            let cfg = resolve(&common, Overrides::default())?;
            let mut dataset = NoisyDataset::load(&data)?;
            if cfg.desk {
                dataset.truncate_for_desk(cfg.desk_train_windows);
            }
            let idm = cfg.idm_params().expect("validated preset");
            let net = FollowerNet::load_checkpoint(&checkpoint)?;
            let mu = None; // the checkpoint does not record its training mu
            let mut report = MetricReport::default();
            report.rows.push(evaluate_model(
                &net,
                &dataset.splits.test,
                "learning-or-hybrid",
                mu,
                &dataset.level,
            )?);
            report
                .rows
                .push(evaluate_idm_baseline(&dataset.splits.test, &idm, &dataset.level)?);
            report.save(&out)?;
            cfg.echo(&out)?;
            for row in &report.rows {
                println!(
                    "{} @ {}: rmse {:.4} m, fde {:.4} m over {} windows ({} excluded)",
                    row.model, row.noise_level, row.rmse, row.fde, row.windows, row.excluded
                );
            }
            Ok(())
        }
        Command::Sweep {
            common,
            data,
            mu,
            levels,
            epochs,
            out,
        } => {
            let cfg = resolve(
                &common,
                Overrides {
                    sweep_mu: mu,
                    sweep_levels: levels,
                    epochs,
                    ..Overrides::default()
                },
            )?;
            let (pairs, manifest) = read_pair_dataset(&data)?;
            let mut split = split_from_manifest(&pairs, &manifest)?;
            if cfg.desk {
                split.train.truncate(cfg.desk_train_windows);
                split.validation.truncate(cfg.desk_train_windows * 2 / 5);
                split.test.truncate(cfg.desk_train_windows * 3 / 5);
            }
            let spec = SweepSpec {
                models: cfg.sweep_mu.iter().map(|&m| SweepModel::from_mu(m)).collect(),
                noise_levels: cfg.sweep_levels.clone(),
                data_seed: cfg.seed,
            };
            let ctx = SweepContext {
                net: net_config(&cfg, manifest.window_len),
                train: train_config(&cfg),
                idm: cfg.idm_params().expect("validated preset"),
                channels: Default::default(),
            };
            let report = sweep(&spec, &split, &ctx);
            report.save(&out)?;
            cfg.echo(&out)?;
            print!("{}", report.to_csv());
            Ok(())
        }
        Command::Calibrate {
            common,
            data,
            budget,
            out,
        } => {
            let cfg = resolve(
                &common,
                Overrides {
                    calib_budget: budget,
                    ..Overrides::default()
                },
            )?;
            let (pairs, _) = read_pair_dataset(&data)?;
            let (params, fde) = calibrate_idm(&pairs, &ParamBounds::default(), cfg.calib_budget)?;
            let outcome = validate_fde(&pairs, &params)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(
                out.join("idm_params.json"),
                serde_json::to_string_pretty(&serde_json::json!({
                    "params": params,
                    "mean_fde_m": outcome.mean_fde,
                    "pairs_evaluated": outcome.pairs_evaluated,
                    "collapsed": outcome.collapsed,
                }))?,
            )?;
            cfg.echo(&out)?;
            println!(
                "calibrated {:?} with mean FDE {:.4} m over {} pairs -> {}",
                params,
                fde,
                outcome.pairs_evaluated,
                out.display()
            );
            Ok(())
        }
        Command::Plot {
            common,
            record,
            data,
            checkpoints,
            window,
            out,
        } => {
            let cfg = resolve(&common, Overrides::default())?;
            std::fs::create_dir_all(&out)?;
            let mut produced = Vec::new();
            if let Some(record_path) = record {
                let rec = load_record(&record_path)?;
                let path = out.join("loss_curves.svg");
                render_loss_curves(&rec, &path)?;
                produced.push(path);
            }
            if let Some(data_dir) = data {
                let dataset = NoisyDataset::load(&data_dir)?;
                let ex = dataset
                    .splits
                    .test
                    .get(window)
                    .with_context(|| format!("test split has no window {window}"))?;
                let idm = cfg.idm_params().expect("validated preset");
                let mut series: Vec<(String, Vec<f64>)> = vec![
                    ("leader (truth)".into(), ex.clean.leader_positions.clone()),
                    ("follower (truth)".into(), ex.clean.follower_positions.clone()),
                ];
                let leader = Trajectory::new(
                    "lead",
                    ex.noisy.dt,
                    ex.noisy.leader_positions.clone(),
                    Some(ex.noisy.leader_velocities.clone()),
                )?;
                if let Ok(rollout) = closed_loop_rollout(
                    &leader,
                    ex.noisy.follower_positions[0],
                    ex.noisy.follower_initial_velocity,
                    &idm,
                    &IntegrationConfig::with_dt(ex.noisy.dt),
                ) {
                    series.push(("model-based IDM".into(), rollout.positions));
                }
                for path in &checkpoints {
                    let net = FollowerNet::load_checkpoint(path)?;
                    if net.config.horizon != ex.noisy.len() {
                        bail!(
                            "checkpoint horizon {} does not match dataset horizon {}",
                            net.config.horizon,
                            ex.noisy.len()
                        );
                    }
                    let label = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "checkpoint".into());
                    series.push((label, net.predict(&ex.noisy)));
                }
                let path = out.join("trajectory.svg");
                render_trajectory_overlay(&series, ex.noisy.dt, &path)?;
                produced.push(path);
            }
            if produced.is_empty() {
                bail!("nothing to plot: pass --record and/or --data");
            }
            cfg.echo(&out)?;
            for p in &produced {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn load_record(path: &PathBuf) -> Result<TrainRecord> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("loading {}", path.display()))?;
    let mut train_loss = Vec::new();
    let mut val_loss = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != "epoch,train_loss,val_loss" {
                bail!("unexpected train-record header '{line}'");
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            bail!("bad train-record row at line {}", i + 1);
        }
        train_loss.push(cells[1].parse::<f64>().with_context(|| format!("line {}", i + 1))?);
        val_loss.push(cells[2].parse::<f64>().with_context(|| format!("line {}", i + 1))?);
    }
    if train_loss.is_empty() {
        bail!("empty train record {}", path.display());
    }
    let best_epoch = val_loss
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite losses"))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(TrainRecord {
        train_loss,
        val_loss,
        wall_time_s: Vec::new(),
        best_epoch,
    })
}
