//! Command-line front end. Every command returns the text it prints so the
//! same code path is testable in-process.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use minerec_core::corpus::{build_corpus_from, cross_validate_all, read_corpus, train_bundle, write_corpus, GeneratorConfig};
use minerec_core::event_log::parse_xes_file;
use minerec_core::features::DEFAULT_PRUNE_THRESHOLD;
use minerec_core::learner::{FitParams, ModelBundle};
use minerec_core::recommender::{evaluate_ground_truth, WeightVector};
use serde::Deserialize;

use crate::api::{self, to_json_line};
use crate::server::{self, AppState, ServiceConfig, DEFAULT_UPLOAD_CAP};
use crate::store::Store;

#[derive(Debug, Parser)]
#[command(name = "minerec", version, about = "Recommend, run and explain process-discovery algorithms for an event log")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct WeightArgs {
    #[arg(long, default_value_t = 25.0)]
    pub fitness: f64,
    #[arg(long, default_value_t = 25.0)]
    pub precision: f64,
    #[arg(long, default_value_t = 25.0)]
    pub generalization: f64,
    #[arg(long, default_value_t = 25.0)]
    pub simplicity: f64,
}

impl WeightArgs {
    fn weights(self) -> anyhow::Result<WeightVector> {
        Ok(WeightVector::new(self.fitness, self.precision, self.generalization, self.simplicity)?)
    }
}

#[derive(Debug, Args, Clone)]
pub struct FitArgs {
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    #[arg(long, default_value_t = 4)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 3)]
    pub min_samples_leaf: usize,
    #[arg(long, default_value_t = 1.0)]
    pub subsample: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pearson |r| above which a feature column is dropped.
    #[arg(long, default_value_t = DEFAULT_PRUNE_THRESHOLD)]
    pub prune_threshold: f64,
}

impl FitArgs {
    fn params(&self) -> FitParams {
        FitParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            min_samples_leaf: self.min_samples_leaf,
            subsample: self.subsample,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank the portfolio for a log using a trained bundle.
    Recommend {
        log: PathBuf,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Mine a Petri net.
    Discover {
        log: PathBuf,
        #[arg(long)]
        algorithm: String,
        /// Algorithm parameter as name=value; repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        /// Also write the net as GraphViz DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print the feature vector of a log.
    Features { log: PathBuf },
    /// Shapley attribution of one prediction.
    Explain {
        log: PathBuf,
        #[arg(long)]
        algorithm: String,
        #[arg(long)]
        measure: String,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Run every algorithm and measure the nets (no models involved).
    Evaluate {
        log: PathBuf,
        #[command(flatten)]
        weights: WeightArgs,
    },
    /// Generate and label a training corpus.
    GenerateCorpus {
        /// JSON generator config, or a list of them.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Extra XES logs to label alongside the generated ones.
        #[arg(long)]
        ingest: Vec<PathBuf>,
    },
    /// Fit the 24 regressors on a corpus directory.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// k-fold cross-validation of every regressor.
    Cv {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        cv_seed: u64,
        /// Write the full per-fold report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value_t = DEFAULT_UPLOAD_CAP)]
        upload_cap: usize,
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.to_owned(), v))
}

fn read_bytes(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn ingest_file(path: &Path) -> anyhow::Result<(String, minerec_core::EventLog, minerec_core::FeatureVector)> {
    api::ingest(&read_bytes(path)?).map_err(|e| anyhow!(e))
}

fn load_bundle(path: &Path) -> anyhow::Result<ModelBundle> {
    ModelBundle::load(path).with_context(|| format!("loading bundle {}", path.display()))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    One(GeneratorConfig),
    Many(Vec<GeneratorConfig>),
}

/// Executes a non-serving command and returns its stdout.
pub fn run(command: Command) -> anyhow::Result<String> {
    match command {
        Command::Recommend { log, weights, bundle } => {
            let (_, _, features) = ingest_file(&log)?;
            let rec = api::recommendation(&features, &weights.weights()?, &load_bundle(&bundle)?)?;
            Ok(to_json_line(&rec))
        }
        Command::Discover { log, algorithm, params, dot } => {
            let (id, log, _) = ingest_file(&log)?;
            let resp = api::discover_response(&id, &log, &algorithm, params.into_iter().collect::<BTreeMap<_, _>>())?;
            if let Some(path) = dot {
                fs::write(&path, &resp.dot).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(to_json_line(&resp))
        }
        Command::Features { log } => {
            let (_, _, features) = ingest_file(&log)?;
            Ok(to_json_line(&api::features_response(&features)))
        }
        Command::Explain {
            log,
            algorithm,
            measure,
            bundle,
        } => {
            let (_, _, features) = ingest_file(&log)?;
            Ok(to_json_line(&api::explanation_response(&features, &algorithm, &measure, &load_bundle(&bundle)?)?))
        }
        Command::Evaluate { log, weights } => {
            let (id, log, _) = ingest_file(&log)?;
            let mut rec = evaluate_ground_truth(&log, &weights.weights()?)?;
            rec.log_id = id;
            Ok(to_json_line(&rec))
        }
        Command::GenerateCorpus { config, out, ingest } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let configs = match serde_json::from_str::<ConfigFile>(&text).context("parsing generator config")? {
                ConfigFile::One(c) => vec![c],
                ConfigFile::Many(v) => v,
            };
            let mut external = Vec::new();
            for path in &ingest {
                let stem = path
                    .file_name()
                    .and_then(|s| s.to_str())
                    .map(|s| s.trim_end_matches(".gz").trim_end_matches(".xes"))
                    .unwrap_or("log");
                let log = parse_xes_file(path).with_context(|| format!("parsing {}", path.display()))?;
                external.push((format!("ext_{stem}"), log));
            }
            let corpus = build_corpus_from(&configs, external)?;
            write_corpus(&corpus, &out)?;
            Ok(to_json_line(&corpus.provenance))
        }
        Command::Train { corpus, out, fit } => {
            let data = read_corpus(&corpus)?;
            let bundle = train_bundle(&data, &fit.params(), fit.prune_threshold)?;
            bundle.save(&out)?;
            Ok(to_json_line(&serde_json::json!({
                "bundle_version": bundle.bundle_version,
                "n_logs": data.features.len(),
                "retained_features": bundle.feature_schema.len(),
            })))
        }
        Command::Cv {
            corpus,
            k,
            cv_seed,
            report,
            fit,
        } => {
            let data = read_corpus(&corpus)?;
            let reports = cross_validate_all(&data, &fit.params(), fit.prune_threshold, k, cv_seed)?;
            if let Some(path) = report {
                let json: Vec<_> = reports
                    .iter()
                    .map(|(a, m, r)| serde_json::json!({ "algorithm": a, "measure": m, "report": r }))
                    .collect();
                fs::write(&path, serde_json::to_string_pretty(&json)?)?;
            }
            let mut s = String::from("algorithm,measure,mae,baseline_mae,rmse,r2,beats_baseline\n");
            for (a, m, r) in &reports {
                s.push_str(&format!(
                    "{a},{m},{:.6},{:.6},{:.6},{:.4},{}\n",
                    r.mean_mae,
                    r.mean_baseline_mae,
                    r.mean_rmse,
                    r.mean_r2,
                    r.beats_baseline()
                ));
            }
            Ok(s)
        }
        Command::Serve { .. } => bail!("serve runs through run_serve"),
    }
}

pub async fn run_serve(command: Command) -> anyhow::Result<()> {
    let Command::Serve {
        host,
        port,
        data_dir,
        bundle,
        upload_cap,
        static_dir,
    } = command
    else {
        bail!("not a serve command");
    };
    let addr: SocketAddr = format!("{host}:{port}").parse().context("listen address")?;
    let state = AppState::new(Store::open(&data_dir)?, load_bundle(&bundle)?);
    let config = ServiceConfig {
        data_dir,
        upload_cap,
        static_dir,
    };
    server::serve(addr, state, config).await
}
