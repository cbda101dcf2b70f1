use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{playout, random_tree, CorpusError, GeneratorConfig};
use crate::discovery::{discover, AlgorithmId, DiscoveryParams};
use crate::event_log::{write_xes_gz, EventLog};
use crate::features::{self, extract, FeatureVector, CATALOG_VERSION};
use crate::learner::{cross_validate, fit, CvReport, FitParams, ModelBundle, ModelEntry, TrainingDataset};
use crate::quality::{evaluate_all, MeasureId};

/// One labeled log: features plus measured quality (or the failure
/// message) for every algorithm.
#[derive(Debug, Clone)]
pub struct CorpusLog {
    pub log_id: String,
    pub log: EventLog,
    pub features: FeatureVector,
    pub quality: BTreeMap<AlgorithmId, Result<[f64; 4], String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generators: Vec<GeneratorConfig>,
    pub ingested: Vec<String>,
    pub catalog_version: String,
    pub n_logs: usize,
    pub failed_cells: usize,
}

#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    pub logs: Vec<CorpusLog>,
    pub provenance: Provenance,
}

/// Row of `labels.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub log_id: String,
    pub algorithm: AlgorithmId,
    pub measure: MeasureId,
    pub value: f64,
    pub failed: bool,
}

/// What training needs from a persisted corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCorpus {
    pub features: Vec<FeatureVector>,
    pub labels: Vec<LabelRow>,
}

/// Runs every algorithm with default parameters and measures its net.
pub fn label_log(log_id: impl Into<String>, log: EventLog) -> CorpusLog {
    let log_id = log_id.into();
    let features = extract(&log).with_log_id(log_id.clone());
    let quality = AlgorithmId::ALL
        .into_iter()
        .map(|a| {
            let r = discover(a, &log, &DiscoveryParams::default())
                .map_err(|e| e.to_string())
                .and_then(|net| evaluate_all(&log, &net).map_err(|e| e.to_string()))
                .map(|q| q.values());
            (a, r)
        })
        .collect();
    CorpusLog {
        log_id,
        log,
        features,
        quality,
    }
}

/// Generates, plays out and labels `config.n_logs` logs. Output is a pure
/// function of the config.
pub fn build_corpus(config: &GeneratorConfig) -> Result<LabeledCorpus, CorpusError> {
    build_corpus_from(std::slice::from_ref(config), Vec::new())
}

/// Logs of every config in order (ids `log_00000`, `log_00001`, ...), then
/// the ingested logs under their given ids. Failed cells are flagged, not
/// fatal.
pub fn build_corpus_from(configs: &[GeneratorConfig], ingested: Vec<(String, EventLog)>) -> Result<LabeledCorpus, CorpusError> {
    if configs.is_empty() && ingested.is_empty() {
        return Err(CorpusError::InvalidConfig("no generator config and no ingested log".into()));
    }
    let mut jobs: Vec<(&GeneratorConfig, u64, u64, usize)> = Vec::new();
    for config in configs {
        config.validate()?;
        let mut master = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.n_logs {
            jobs.push((
                config,
                master.gen(),
                master.gen(),
                master.gen_range(config.n_traces[0]..=config.n_traces[1]),
            ));
        }
    }
    let mut ids: std::collections::BTreeSet<String> = (0..jobs.len()).map(|i| format!("log_{i:05}")).collect();
    for (id, _) in &ingested {
        if !ids.insert(id.clone()) {
            return Err(CorpusError::Data(format!("duplicate log id {id}")));
        }
    }
    let ingested_ids: Vec<String> = ingested.iter().map(|(id, _)| id.clone()).collect();
    let mut logs: Vec<CorpusLog> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(config, tree_seed, play_seed, n))| {
            let tree = random_tree(config, tree_seed);
            let log = playout(&tree, n, config.noise, play_seed);
            label_log(format!("log_{i:05}"), log)
        })
        .collect();
    logs.extend(ingested.into_par_iter().map(|(id, log)| label_log(id, log)).collect::<Vec<_>>());
    let failed_cells = logs.iter().map(|l| l.quality.values().filter(|r| r.is_err()).count()).sum();
    Ok(LabeledCorpus {
        provenance: Provenance {
            generators: configs.to_vec(),
            ingested: ingested_ids,
            catalog_version: CATALOG_VERSION.to_owned(),
            n_logs: logs.len(),
            failed_cells,
        },
        logs,
    })
}

impl LabeledCorpus {
    pub fn label_rows(&self) -> Vec<LabelRow> {
        let mut rows = Vec::new();
        for l in &self.logs {
            for (&algorithm, r) in &l.quality {
                for measure in MeasureId::ALL {
                    rows.push(LabelRow {
                        log_id: l.log_id.clone(),
                        algorithm,
                        measure,
                        value: r.as_ref().map_or(0.0, |v| v[measure.index()]),
                        failed: r.is_err(),
                    });
                }
            }
        }
        rows
    }

    pub fn loaded(&self) -> LoadedCorpus {
        LoadedCorpus {
            features: self.logs.iter().map(|l| l.features.clone()).collect(),
            labels: self.label_rows(),
        }
    }
}

fn io(e: impl std::fmt::Display) -> CorpusError {
    CorpusError::Io(e.to_string())
}

/// Writes `logs/<id>.xes.gz`, `features.csv`, `labels.csv` and
/// `provenance.json` under `dir`.
pub fn write_corpus(corpus: &LabeledCorpus, dir: &Path) -> Result<(), CorpusError> {
    let logs_dir = dir.join("logs");
    fs::create_dir_all(&logs_dir).map_err(io)?;
    for l in &corpus.logs {
        let f = fs::File::create(logs_dir.join(format!("{}.xes.gz", l.log_id))).map_err(io)?;
        write_xes_gz(&l.log, BufWriter::new(f)).map_err(io)?;
    }
    let loaded = corpus.loaded();
    features::write_csv(&loaded.features, fs::File::create(dir.join("features.csv")).map_err(io)?).map_err(io)?;
    let mut w = csv::Writer::from_path(dir.join("labels.csv")).map_err(io)?;
    for r in &loaded.labels {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(io)?;
    let prov = serde_json::to_string_pretty(&corpus.provenance).map_err(io)?;
    fs::write(dir.join("provenance.json"), prov).map_err(io)
}

pub fn read_corpus(dir: &Path) -> Result<LoadedCorpus, CorpusError> {
    let features = features::read_csv(fs::File::open(dir.join("features.csv")).map_err(io)?).map_err(io)?;
    let mut r = csv::Reader::from_path(dir.join("labels.csv")).map_err(io)?;
    let labels = r.deserialize().collect::<Result<Vec<LabelRow>, _>>().map_err(io)?;
    Ok(LoadedCorpus { features, labels })
}

impl LoadedCorpus {
    /// Non-failed rows for one regressor, in feature-file order.
    pub fn dataset(&self, algorithm: AlgorithmId, measure: MeasureId) -> Result<TrainingDataset, CorpusError> {
        let by_id: BTreeMap<&str, &LabelRow> = self
            .labels
            .iter()
            .filter(|r| r.algorithm == algorithm && r.measure == measure && !r.failed)
            .map(|r| (r.log_id.as_str(), r))
            .collect();
        let (rows, y): (Vec<FeatureVector>, Vec<f64>) = self
            .features
            .iter()
            .filter_map(|f| by_id.get(f.log_id.as_str()).map(|r| (f.clone(), r.value)))
            .unzip();
        TrainingDataset::from_features(&rows, y).map_err(|e| CorpusError::Data(e.to_string()))
    }

    /// Retained columns after the correlation filter over all logs.
    pub fn schema(&self, threshold: f64) -> Result<Vec<usize>, CorpusError> {
        features::prune_redundant(&self.features, threshold).map_err(|e| CorpusError::Data(e.to_string()))
    }
}

/// Fits all 24 regressors on a shared pruned schema.
pub fn train_bundle(corpus: &LoadedCorpus, params: &FitParams, prune_threshold: f64) -> Result<ModelBundle, CorpusError> {
    let schema = corpus.schema(prune_threshold)?;
    let cells: Vec<(AlgorithmId, MeasureId)> = AlgorithmId::ALL
        .into_iter()
        .flat_map(|a| MeasureId::ALL.into_iter().map(move |m| (a, m)))
        .collect();
    let models = cells
        .par_iter()
        .map(|&(algorithm, measure)| {
            let data = corpus.dataset(algorithm, measure)?;
            let model = fit(&data, &schema, params).map_err(|e| CorpusError::Data(format!("{algorithm}/{measure}: {e}")))?;
            Ok(ModelEntry { algorithm, measure, model })
        })
        .collect::<Result<Vec<_>, CorpusError>>()?;
    ModelBundle::new(models, schema).map_err(|e| CorpusError::Data(e.to_string()))
}

/// k-fold cross-validation of every regressor with the same seed.
pub fn cross_validate_all(
    corpus: &LoadedCorpus,
    params: &FitParams,
    prune_threshold: f64,
    k: usize,
    seed: u64,
) -> Result<Vec<(AlgorithmId, MeasureId, CvReport)>, CorpusError> {
    let schema = corpus.schema(prune_threshold)?;
    let cells: Vec<(AlgorithmId, MeasureId)> = AlgorithmId::ALL
        .into_iter()
        .flat_map(|a| MeasureId::ALL.into_iter().map(move |m| (a, m)))
        .collect();
    cells
        .par_iter()
        .map(|&(a, m)| {
            let data = corpus.dataset(a, m)?;
            let rep = cross_validate(&data, &schema, k, params, seed).map_err(|e| CorpusError::Data(format!("{a}/{m}: {e}")))?;
            Ok((a, m, rep))
        })
        .collect()
}
