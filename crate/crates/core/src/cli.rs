//! Command-line front end.
//!
//! Exit codes: 0 on success (including `--help`), 1 for usage or input
//! validation errors, 2 for failures while running.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::checkpoint;
use crate::config::RunConfig;
use crate::graph::{parse_dataset_spec, parse_graph_spec, wl1_indistinguishable, GraphDataset, Task};
use crate::jepa::{collapse_experiment, collapse_metrics, prepare_dataset, train_observed, CollapseConfig, TrainConfig};
use crate::partition::{edge_cut, expand_one_hop, partition, PartitionMethod};
use crate::posenc::{patch_pe, rwse_nodes, PeKind};
use crate::probe::{cross_validate, ProbeConfig, ProbeTargets};

#[derive(Parser, Debug)]
#[command(name = "graph-jepa", version, about = "Self-supervised graph embeddings with latent target prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split a graph into balanced parts and report the edge cut.
    Partition {
        /// `csl:n:skip` or a JSONL file (first graph is used).
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long, default_value = "metis")]
        method: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also list the one-hop expanded patches.
        #[arg(long)]
        expand: bool,
    },
    /// Random-walk return probabilities per node, or per patch with `--p`.
    Posenc {
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 15)]
        k: usize,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value = "node")]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Self-supervised training from a flat config file.
    Pretrain {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
        /// Overrides `dataset` from the config.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Linear probe on frozen embeddings of a checkpoint.
    Probe {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: String,
        #[arg(long, value_enum, default_value_t = TaskArg::Cls)]
        task: TaskArg,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// 1-WL color refinement on two graphs.
    WlTest {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
    },
    /// Moving-average versus shared-weights training on toy graphs.
    CollapseExperiment {
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 50)]
        graphs: usize,
        #[arg(long, default_value_t = 32)]
        d: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Cls,
    Reg,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Metadata written next to every checkpoint.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(Failure::Invalid(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            1
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            2
        }
    }
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    writeln!(out, "{text}").map_err(runtime)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Partition { graph, p, method, seed, expand } => {
            let g = parse_graph_spec(&graph).map_err(invalid)?;
            let method: PartitionMethod = method.parse().map_err(invalid)?;
            let ps = partition(&g, p, method, seed).map_err(invalid)?;
            let mut report = json!({
                "method": method.to_string(),
                "p": p,
                "assignment": ps.assignment(),
                "part_sizes": ps.part_sizes(),
                "edge_cut": edge_cut(&g, &ps),
            });
            if expand {
                let ex = expand_one_hop(&g, &ps).map_err(runtime)?;
                report["expanded"] = ex.patches().iter().map(|s| json!(s.node_ids)).collect();
            }
            emit(out, &report)
        }
        Command::Posenc { graph, k, p, kind, seed } => {
            let g = parse_graph_spec(&graph).map_err(invalid)?;
            let kind: PeKind = kind.parse().map_err(invalid)?;
            let rows = match p {
                None => rwse_nodes(&g, k).map_err(invalid)?.per_node.to_rows(),
                Some(p) => {
                    let ps = partition(&g, p, PartitionMethod::Multilevel, seed).map_err(invalid)?;
                    let ex = expand_one_hop(&g, &ps).map_err(runtime)?;
                    patch_pe(&g, &ex, kind, k).map_err(invalid)?.per_patch.to_rows()
                }
            };
            emit(out, &json!({ "k": k, "rows": rows }))
        }
        Command::Pretrain { config, out: ckpt, log, dataset, seed } => pretrain(&config, &ckpt, log.as_deref(), dataset, seed, out),
        Command::Probe { checkpoint: path, dataset, task, folds, runs, seed, report } => {
            let ck = checkpoint::load(&path).map_err(invalid)?;
            let train_cfg = ck.train.clone().unwrap_or_else(|| TrainConfig {
                k: ck.model.config.pe_dim,
                d: ck.model.config.dim,
                ..TrainConfig::default()
            });
            let ds = parse_dataset_spec(&dataset, seed).map_err(invalid)?;
            check_task(&ds, task)?;
            let cfg = ProbeConfig { folds, runs, seed, ..ProbeConfig::default() };
            let rep = cross_validate(&ds, &ck.model, &train_cfg, &cfg).map_err(runtime)?;
            if let Some(path) = report {
                std::fs::write(&path, serde_json::to_string_pretty(&rep).map_err(runtime)?).map_err(runtime)?;
            }
            let metric = match task {
                TaskArg::Cls => "accuracy",
                TaskArg::Reg => "mse",
            };
            writeln!(out, "{metric}: {:.4} ± {:.4}", rep.mean, rep.std).map_err(runtime)?;
            if let Some(b) = rep.majority_baseline {
                writeln!(out, "majority baseline: {b:.4}").map_err(runtime)?;
            }
            if let Some(mae) = rep.mae_mean {
                writeln!(out, "mae: {mae:.4}").map_err(runtime)?;
            }
            Ok(())
        }
        Command::WlTest { a, b, rounds } => {
            let (ga, gb) = (parse_graph_spec(&a).map_err(invalid)?, parse_graph_spec(&b).map_err(invalid)?);
            let same = wl1_indistinguishable(&ga, &gb, rounds);
            writeln!(out, "1-WL: {}", if same { "indistinguishable" } else { "distinguishable" }).map_err(runtime)
        }
        Command::CollapseExperiment { seeds, steps, graphs, d, report } => {
            let base = CollapseConfig::default();
            let cfg = CollapseConfig {
                seeds: (0..seeds).collect(),
                steps,
                graphs,
                train: TrainConfig { d, ..base.train.clone() },
                ..base
            };
            let rep = collapse_experiment(&cfg).map_err(runtime)?;
            for r in &rep.runs {
                let (a, b) = (r.ema_final(), r.shared_final());
                writeln!(
                    out,
                    "seed {}: ema std {:.4e} rank {:.2} | shared std {:.4e} rank {:.2}",
                    r.seed, a.embedding_std, a.effective_rank, b.embedding_std, b.effective_rank
                )
                .map_err(runtime)?;
            }
            let n = rep.runs.len();
            writeln!(
                out,
                "ema std >= 1e-2: {}/{n}; shared below ema: {}/{n}",
                rep.ema_alive(1e-2),
                rep.shared_below_ema()
            )
            .map_err(runtime)?;
            if let Some(path) = report {
                std::fs::write(&path, serde_json::to_string_pretty(&rep).map_err(runtime)?).map_err(runtime)?;
            }
            Ok(())
        }
    }
}

fn check_task(ds: &GraphDataset, task: TaskArg) -> Result<(), Failure> {
    match (task, ds.task) {
        (TaskArg::Cls, Task::Classification { .. }) | (TaskArg::Reg, Task::Regression { .. }) => {
            crate::probe::probe_targets(ds).map(|_: ProbeTargets| ()).map_err(invalid)
        }
        _ => Err(invalid(format!("dataset '{}' does not match task {task:?}", ds.name))),
    }
}

fn pretrain(
    config: &Path,
    ckpt: &Path,
    log: Option<&Path>,
    dataset: Option<String>,
    seed: Option<u64>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let started = unix_now();
    let mut run_cfg = RunConfig::load(config).map_err(|e| invalid(format!("{}: {e}", config.display())))?;
    if let Some(d) = dataset {
        run_cfg.dataset = Some(d);
    }
    if let Some(s) = seed {
        run_cfg.train.seed = s;
    }
    let spec = run_cfg.dataset.clone().ok_or_else(|| invalid("no dataset given in config or --dataset"))?;
    let manifest = manifest_path(ckpt);
    if manifest.exists() {
        return Err(invalid(format!("{} already exists; refusing to overwrite a previous run", manifest.display())));
    }
    let cfg = run_cfg.train.clone();
    let ds = parse_dataset_spec(&spec, cfg.seed).map_err(invalid)?;
    let prepared = prepare_dataset(&ds, &cfg).map_err(invalid)?;
    let mut log_file = match log {
        Some(p) => Some(File::create(p).map_err(invalid)?),
        None => None,
    };
    let mut sink_error = None;
    let result = train_observed(&ds, &cfg, |row, model| {
        let metrics = collapse_metrics(model, &prepared);
        let line = match metrics {
            Ok(m) => json!({
                "epoch": row.epoch, "loss": row.loss, "steps": row.steps, "tau": row.tau,
                "target_std": row.target_std, "alpha_std": row.alpha_std, "clamped": row.clamped,
                "embedding_std": m.embedding_std, "psi_std": m.psi_std, "effective_rank": m.effective_rank,
            }),
            Err(e) => json!({ "epoch": row.epoch, "loss": row.loss, "metrics_error": e.to_string() }),
        };
        if let Some(f) = log_file.as_mut() {
            if let Err(e) = writeln!(f, "{line}") {
                sink_error.get_or_insert(e);
            }
        }
    })
    .map_err(runtime)?;
    if let Some(e) = sink_error {
        return Err(runtime(e));
    }
    checkpoint::save(&result.model, Some(&cfg), ckpt).map_err(runtime)?;
    let mut outputs = vec![ckpt.display().to_string()];
    if let Some(p) = log {
        outputs.push(p.display().to_string());
    }
    let record = RunManifest {
        command: "pretrain".into(),
        version: format!("v{}", env!("CARGO_PKG_VERSION")),
        seed: cfg.seed,
        config: json!({ "dataset": spec, "train": cfg }),
        started_unix: started,
        finished_unix: unix_now(),
        outputs,
    };
    let mut f = OpenOptions::new().write(true).create_new(true).open(&manifest).map_err(runtime)?;
    f.write_all(serde_json::to_string_pretty(&record).map_err(runtime)?.as_bytes()).map_err(runtime)?;
    if let Some(last) = result.log.last() {
        writeln!(out, "trained {} epochs, final loss {:.6}", last.epoch + 1, last.loss).map_err(runtime)?;
    }
    writeln!(out, "checkpoint: {}", ckpt.display()).map_err(runtime)?;
    Ok(())
}
