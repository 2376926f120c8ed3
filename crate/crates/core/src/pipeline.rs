//! The five pipeline stages behind the `probebench` subcommands.
//!
//! Outputs land under the configured `out_dir`:
//!
//! | stage        | output                                   |
//! |--------------|------------------------------------------|
//! | `features`   | `features.tsv`                           |
//! | `baseline`   | `baseline/random.emb`                    |
//! | `probe`      | `probe_results.tsv`                      |
//! | `report`     | `reports/*.tsv`                          |
//! | `downstream` | `downstream_results.tsv`, `downstream_layer_weights.tsv` |
//!
//! Every stage is deterministic given the config and its inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use thiserror::Error;

use crate::alignment::{parse_textgrid, Alignment};
use crate::audio::{extract_audio_features, AudioClip};
use crate::config::ExperimentConfig;
use crate::downstream::{train_downstream, DownstreamError, DownstreamResult, LayerMode};
use crate::embedding::{
    generate_random_baseline, read_embedding_file, write_embedding_file, EmbeddingError, EmbeddingSet, Manifest,
};
use crate::fluency::{compute_fluency_features, detect_silences};
use crate::probe::{train_classifier_probe, train_probe, ProbeError, ProbeRunResult};
use crate::pronunciation::extract_pronunciation_features;
use crate::report::{best_layer, build_profiles, emit_reports, ReportError};
use crate::results::{config_hash, natural_cmp, read_rows, write_rows, ResultRow, ResultsError, RowAppender};
use crate::table::{group_features, FeatureGroup, FeatureKind, FeatureRow, FeatureSpec, FeatureTable, TableError};
use crate::text::{extract_text_features, read_annotations, AnnotatedTranscript, ComplexityLexicon, TextError};

pub const DEFAULT_BASELINE_DIM: usize = 768;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Results(#[from] ResultsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("{model}/{layer}: {source}")]
    IdMismatch {
        model: String,
        layer: String,
        source: ProbeError,
    },
    #[error("downstream {mode}: {source}")]
    Downstream {
        mode: &'static str,
        source: DownstreamError,
    },
    #[error("no probe results for model '{model}' under the current config; run `probe` first")]
    MissingProbeResults { model: String },
    #[error("{0} is not configured")]
    NotConfigured(&'static str),
    #[error("'{path}' not found; run `{stage}` first")]
    MissingStage { path: String, stage: &'static str },
    #[error("model '{0}' is not in the manifest")]
    UnknownModel(String),
    #[error("labels line {line}: {reason}")]
    Labels { line: usize, reason: String },
    #[error("'{path}': {reason}")]
    Io { path: String, reason: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path, e: impl ToString) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn stems(dir: &Path, ext: &str) -> Result<Vec<String>, PipelineError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.extension().is_some_and(|x| x.eq_ignore_ascii_case(ext)) {
            if let Some(s) = path.file_stem() {
                out.push(s.to_string_lossy().into_owned());
            }
        }
    }
    Ok(out)
}

struct Corpus {
    groups: Vec<FeatureGroup>,
    audio_dir: Option<PathBuf>,
    alignment_dir: Option<PathBuf>,
    transcripts: HashMap<String, AnnotatedTranscript>,
    text_failures: HashMap<String, String>,
    lexicon: ComplexityLexicon,
}

impl Corpus {
    fn open(cfg: &ExperimentConfig) -> Result<(Self, Vec<String>), PipelineError> {
        let groups = cfg.groups().map_err(|e| PipelineError::Io {
            path: "config".into(),
            reason: e.to_string(),
        })?;
        let mut ids = BTreeSet::new();
        let audio_dir = groups
            .contains(&FeatureGroup::Audio)
            .then(|| cfg.corpus.audio_dir.clone())
            .flatten();
        if let Some(dir) = &audio_dir {
            ids.extend(stems(dir, "wav")?);
        }
        let wants_alignment =
            groups.contains(&FeatureGroup::Fluency) || groups.contains(&FeatureGroup::Pronunciation);
        let alignment_dir = wants_alignment.then(|| cfg.corpus.alignment_dir.clone()).flatten();
        if let Some(dir) = &alignment_dir {
            ids.extend(stems(dir, "TextGrid")?);
        }
        let mut transcripts = HashMap::new();
        let mut text_failures = HashMap::new();
        if groups.contains(&FeatureGroup::Text) {
            let path = cfg.corpus.annotations.as_ref().ok_or(PipelineError::NotConfigured("corpus.annotations"))?;
            let file = read_annotations(path)?;
            for t in file.transcripts {
                ids.insert(t.id.clone());
                transcripts.insert(t.id.clone(), t);
            }
            for (id, reason) in file.failures {
                ids.insert(id.clone());
                text_failures.insert(id, reason);
            }
        }
        let lexicon = match &cfg.corpus.complexity_lexicon {
            Some(p) => ComplexityLexicon::load(p)?,
            None => ComplexityLexicon::default(),
        };
        let mut ids: Vec<String> = ids.into_iter().collect();
        ids.sort_by(|a, b| natural_cmp(a, b));
        Ok((
            Self {
                groups,
                audio_dir,
                alignment_dir,
                transcripts,
                text_failures,
                lexicon,
            },
            ids,
        ))
    }

    fn row(&self, id: &str, cfg: &ExperimentConfig) -> FeatureRow {
        let mut values = Vec::new();
        let mut notes: Vec<String> = Vec::new();
        let mut put = |group: FeatureGroup, got: Result<Vec<(&str, Option<f64>)>, String>| {
            let names: Vec<&str> = group_features(group).map(|s| s.name).collect();
            match got {
                Ok(v) => {
                    debug_assert_eq!(v.iter().map(|p| p.0).collect::<Vec<_>>(), names);
                    values.extend(v.into_iter().map(|(_, x)| x));
                }
                Err(reason) => {
                    log::warn!("{id}: {}: {reason}", group.name());
                    notes.push(format!("{}: {reason}", group.name()));
                    values.extend(names.iter().map(|_| None));
                }
            }
        };
        let alignment: Option<Result<Alignment, String>> = self.alignment_dir.as_ref().map(|dir| {
            let path = dir.join(format!("{id}.TextGrid"));
            if path.exists() {
                parse_textgrid(&path).map_err(|e| e.to_string())
            } else {
                Err(format!("no alignment {}", path.display()))
            }
        });
        for &group in &self.groups {
            let got = match group {
                FeatureGroup::Audio => self.audio(id, cfg),
                FeatureGroup::Fluency => match &alignment {
                    Some(Ok(a)) => compute_fluency_features(a, &detect_silences(a, &cfg.silence_config()))
                        .map(|f| f.values().to_vec())
                        .map_err(|e| e.to_string()),
                    Some(Err(e)) => Err(e.clone()),
                    None => Err("no alignment directory".into()),
                },
                FeatureGroup::Pronunciation => match &alignment {
                    Some(Ok(a)) => extract_pronunciation_features(a)
                        .map(|f| f.values().to_vec())
                        .map_err(|e| e.to_string()),
                    Some(Err(e)) => Err(e.clone()),
                    None => Err("no alignment directory".into()),
                },
                FeatureGroup::Text => self.text(id, cfg),
            };
            put(group, got);
        }
        FeatureRow {
            id: id.to_string(),
            values,
            status: notes.join("; "),
        }
    }

    fn audio(&self, id: &str, cfg: &ExperimentConfig) -> Result<Vec<(&'static str, Option<f64>)>, String> {
        let dir = self.audio_dir.as_ref().ok_or("no audio directory")?;
        let path = dir.join(format!("{id}.wav"));
        if !path.exists() {
            return Err(format!("no audio {}", path.display()));
        }
        let clip = AudioClip::from_wav(&path, id).map_err(|e| e.to_string())?;
        extract_audio_features(&clip, &cfg.audio_config())
            .map(|f| f.values().to_vec())
            .map_err(|e| e.to_string())
    }

    fn text(&self, id: &str, cfg: &ExperimentConfig) -> Result<Vec<(&'static str, Option<f64>)>, String> {
        if let Some(reason) = self.text_failures.get(id) {
            return Err(format!("annotation failed: {reason}"));
        }
        let t = self.transcripts.get(id).ok_or("no annotation")?;
        extract_text_features(t, &self.lexicon, &cfg.semantic_config())
            .map(|f| f.values())
            .map_err(|e| e.to_string())
    }
}

/// Computes the feature table without writing it.
pub fn extract_features(cfg: &ExperimentConfig) -> Result<FeatureTable, PipelineError> {
    let (corpus, ids) = Corpus::open(cfg)?;
    let columns = corpus
        .groups
        .iter()
        .flat_map(|&g| group_features(g).map(|s| s.name.to_string()))
        .collect();
    let rows: Vec<FeatureRow> = pool(cfg.jobs)?.install(|| ids.par_iter().map(|id| corpus.row(id, cfg)).collect());
    let mut table = FeatureTable::new(columns);
    for r in rows {
        table.push(r)?;
    }
    Ok(table)
}

pub fn cmd_features(cfg: &ExperimentConfig) -> Result<PathBuf, PipelineError> {
    let table = extract_features(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let path = cfg.features_path();
    table.write(&path)?;
    log::info!("wrote {} rows to {}", table.len(), path.display());
    Ok(path)
}

fn load_table(cfg: &ExperimentConfig) -> Result<FeatureTable, PipelineError> {
    let path = cfg.features_path();
    if !path.exists() {
        return Err(PipelineError::MissingStage {
            path: path.display().to_string(),
            stage: "features",
        });
    }
    Ok(FeatureTable::read(&path)?)
}

fn load_manifest(cfg: &ExperimentConfig) -> Result<Manifest, PipelineError> {
    let path = cfg.embeddings.manifest.as_ref().ok_or(PipelineError::NotConfigured("embeddings.manifest"))?;
    Ok(Manifest::load(path)?)
}

/// Builds the random baseline over the feature table's ids. The width is
/// `embeddings.baseline_dim`, else the first manifest entry's width.
pub fn baseline_set(cfg: &ExperimentConfig, ids: &[String]) -> Result<EmbeddingSet, PipelineError> {
    let dim = match (cfg.embeddings.baseline_dim, &cfg.embeddings.manifest) {
        (Some(d), _) => d,
        (None, Some(_)) => match load_manifest(cfg)?.entries.first() {
            Some(e) => e.load()?.dim(),
            None => DEFAULT_BASELINE_DIM,
        },
        (None, None) => DEFAULT_BASELINE_DIM,
    };
    Ok(generate_random_baseline(ids, dim, cfg.seed)?)
}

pub fn cmd_baseline(cfg: &ExperimentConfig) -> Result<PathBuf, PipelineError> {
    let table = load_table(cfg)?;
    let set = baseline_set(cfg, &table.ids())?;
    let path = cfg.baseline_path();
    ensure_dir(path.parent().expect("baseline path has a parent"))?;
    write_embedding_file(&set, &path)?;
    log::info!("wrote {}x{} random baseline to {}", set.len(), set.dim(), path.display());
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSummary {
    pub path: PathBuf,
    pub trained: usize,
    pub resumed: usize,
    /// `(feature, model, layer, reason)` for jobs that could not run.
    pub failed: Vec<(String, String, String, String)>,
}

fn run_job(set: &EmbeddingSet, spec: &FeatureSpec, table: &FeatureTable, cfg: &ExperimentConfig) -> Result<ProbeRunResult, ProbeError> {
    let column = table.column(spec.name).expect("column checked");
    let probe_cfg = cfg.probe_config();
    match spec.kind {
        FeatureKind::Regression => train_probe(set, &column, spec.name, &probe_cfg),
        FeatureKind::Classification => {
            let labels: Vec<(String, Option<usize>)> = column
                .into_iter()
                .map(|(id, v)| (id, v.filter(|x| *x >= 0.0 && x.fract() == 0.0).map(|x| x as usize)))
                .collect();
            train_classifier_probe(set, &labels, spec.name, &probe_cfg)
        }
    }
}

/// Sweeps every configured feature over every manifest layer plus the
/// random baseline. Rows already present under the current config hash are
/// kept and not retrained.
pub fn cmd_probe(cfg: &ExperimentConfig) -> Result<ProbeSummary, PipelineError> {
    let table = load_table(cfg)?;
    let manifest = load_manifest(cfg)?;
    let pool = pool(cfg.jobs)?;
    let loaded: Vec<Result<EmbeddingSet, EmbeddingError>> =
        pool.install(|| manifest.entries.par_iter().map(|e| e.load()).collect());
    let mut sets = loaded.into_iter().collect::<Result<Vec<_>, _>>()?;

    let table_ids = table.ids();
    let wanted: HashSet<&String> = table_ids.iter().collect();
    for s in &sets {
        let have: HashSet<&String> = s.ids().iter().collect();
        if have != wanted {
            let mut only_in_embeddings: Vec<String> = have.difference(&wanted).map(|s| s.to_string()).collect();
            let mut only_in_targets: Vec<String> = wanted.difference(&have).map(|s| s.to_string()).collect();
            only_in_embeddings.sort();
            only_in_targets.sort();
            return Err(PipelineError::IdMismatch {
                model: s.model().to_string(),
                layer: s.layer().to_string(),
                source: ProbeError::IdMismatch {
                    only_in_embeddings,
                    only_in_targets,
                },
            });
        }
    }
    let baseline = baseline_set(cfg, &table_ids)?;
    let baseline_path = cfg.baseline_path();
    if read_embedding_file(&baseline_path).ok().as_ref() != Some(&baseline) {
        ensure_dir(baseline_path.parent().expect("baseline path has a parent"))?;
        write_embedding_file(&baseline, &baseline_path)?;
    }
    sets.push(baseline);

    let features: Vec<&FeatureSpec> = cfg
        .probe_features()
        .into_iter()
        .filter(|s| {
            let present = table.column_index(s.name).is_some();
            if !present {
                log::warn!("feature '{}' is not in the feature table; skipping", s.name);
            }
            present
        })
        .collect();
    let hash = probe_hash(cfg, &table);
    let path = cfg.results_path();
    ensure_dir(&cfg.out_dir)?;
    let existing = read_rows(&path)?;
    let done: HashSet<_> = existing.iter().filter(|r| r.config_hash == hash).map(|r| r.key()).collect();

    let mut jobs = Vec::new();
    let mut resumed = 0;
    for spec in &features {
        for set in &sets {
            let key = crate::results::RowKey {
                feature: spec.name.to_string(),
                model: set.model().to_string(),
                layer: set.layer().to_string(),
                config_hash: hash.clone(),
            };
            if done.contains(&key) {
                resumed += 1;
            } else {
                jobs.push((*spec, set));
            }
        }
    }
    log::info!("{} probe jobs to run, {} already done", jobs.len(), resumed);

    let appender = Mutex::new(RowAppender::open(&path)?);
    let outcomes: Vec<Result<(), (String, String, String, String)>> = pool.install(|| {
        jobs.par_iter()
            .map(|(spec, set)| {
                let fail = |reason: String| (spec.name.to_string(), set.model().to_string(), set.layer().to_string(), reason);
                match run_job(set, spec, &table, cfg) {
                    Ok(r) => {
                        let row = ResultRow::from_probe(&r, &hash);
                        log::debug!("{} {} {}: {} {}", r.feature, r.model, r.layer, row.metric, row.value);
                        appender
                            .lock()
                            .expect("appender lock")
                            .append(&row)
                            .map_err(|e| fail(e.to_string()))
                    }
                    Err(e) => {
                        log::warn!("{} on {}/{}: {e}", spec.name, set.model(), set.layer());
                        Err(fail(e.to_string()))
                    }
                }
            })
            .collect()
    });
    drop(appender);
    let trained = outcomes.iter().filter(|o| o.is_ok()).count();
    let failed = outcomes.into_iter().filter_map(Result::err).collect();
    let rows = read_rows(&path)?;
    write_rows(&path, &rows)?;
    Ok(ProbeSummary {
        path,
        trained,
        resumed,
        failed,
    })
}

/// Hash identifying a probe sweep: the probe config together with the
/// feature table it was trained against.
pub fn probe_hash(cfg: &ExperimentConfig, table: &FeatureTable) -> String {
    #[derive(serde::Serialize)]
    struct Key {
        probe: crate::probe::ProbeConfig,
        features: String,
    }
    config_hash(&Key {
        probe: cfg.probe_config(),
        features: config_hash(&table.to_tsv()),
    })
}

/// Probe rows produced under the current probe config and feature table.
pub fn current_rows(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, PipelineError> {
    let hash = probe_hash(cfg, &load_table(cfg)?);
    Ok(read_rows(&cfg.results_path())?
        .into_iter()
        .filter(|r| r.config_hash == hash)
        .collect())
}

pub fn cmd_report(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let rows = current_rows(cfg)?;
    if rows.is_empty() {
        return Err(PipelineError::MissingStage {
            path: cfg.results_path().display().to_string(),
            stage: "probe",
        });
    }
    Ok(emit_reports(&rows, &cfg.reports_dir(), cfg.embeddings.reference_model.as_deref())?)
}

/// Reads `id<TAB>label` lines; `#` starts a comment line.
pub fn read_labels(path: &Path) -> Result<Vec<(String, String)>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: &str| PipelineError::Labels {
            line: i + 1,
            reason: reason.to_string(),
        };
        let (id, label) = line.split_once('\t').ok_or_else(|| err("expected id<TAB>label"))?;
        if id.is_empty() || label.is_empty() || label.contains('\t') {
            return Err(err("expected id<TAB>label"));
        }
        if !seen.insert(id.to_string()) {
            return Err(err("duplicate id"));
        }
        out.push((id.to_string(), label.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DownstreamRun {
    pub mode: LayerMode,
    /// Layer used, or the averaged layers.
    pub layers: Vec<String>,
    pub result: DownstreamResult,
}

impl DownstreamRun {
    pub fn layer_label(&self) -> String {
        match self.mode {
            LayerMode::Best | LayerMode::Last => format!("{}:{}", self.mode.name(), self.layers[0]),
            _ => self.mode.name().to_string(),
        }
    }
}

pub fn run_downstream(cfg: &ExperimentConfig) -> Result<Vec<DownstreamRun>, PipelineError> {
    let manifest = load_manifest(cfg)?;
    let model = match &cfg.downstream.model {
        Some(m) => m.clone(),
        None => manifest
            .models()
            .first()
            .map(|m| m.to_string())
            .ok_or(PipelineError::NotConfigured("a manifest model"))?,
    };
    let entries: Vec<_> = manifest.layers_of(&model).cloned().collect();
    if entries.is_empty() {
        return Err(PipelineError::UnknownModel(model));
    }
    let labels_path = cfg.downstream.labels.as_ref().ok_or(PipelineError::NotConfigured("downstream.labels"))?;
    let labels = read_labels(labels_path)?;
    let classes: BTreeMap<&str, usize> = labels
        .iter()
        .map(|(_, l)| l.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let y: Vec<usize> = labels.iter().map(|(_, l)| classes[l.as_str()]).collect();

    let train_cfg = cfg.downstream_config();
    let mut modes = Vec::new();
    for &mode in &train_cfg.layer_modes {
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    let best = if modes.contains(&LayerMode::Best) {
        let rows = match current_rows(cfg) {
            Err(PipelineError::MissingStage { .. }) => Vec::new(),
            other => other?,
        };
        let profiles = build_profiles(&rows, "mse")?;
        let layer = best_layer(&profiles, &model, &cfg.downstream.best_layer_features)
            .ok_or_else(|| PipelineError::MissingProbeResults { model: model.clone() })?;
        Some(layer)
    } else {
        None
    };

    let pool = pool(cfg.jobs)?;
    let loaded: Vec<Result<EmbeddingSet, EmbeddingError>> =
        pool.install(|| entries.par_iter().map(|e| e.load()).collect());
    let sets = loaded.into_iter().collect::<Result<Vec<_>, _>>()?;
    // rows[layer][sample]
    let mut per_layer: Vec<Vec<Vec<f64>>> = Vec::with_capacity(sets.len());
    for set in &sets {
        let index = set.index();
        let missing: Vec<String> = labels
            .iter()
            .filter(|(id, _)| !index.contains_key(id.as_str()))
            .map(|(id, _)| id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(PipelineError::IdMismatch {
                model: set.model().to_string(),
                layer: set.layer().to_string(),
                source: ProbeError::IdMismatch {
                    only_in_embeddings: Vec::new(),
                    only_in_targets: missing,
                },
            });
        }
        per_layer.push(
            labels
                .iter()
                .map(|(id, _)| set.row(index[id.as_str()]).iter().map(|&v| v as f64).collect())
                .collect(),
        );
    }
    let layer_names: Vec<String> = sets.iter().map(|s| s.layer().to_string()).collect();
    let n = labels.len();
    let single = |l: usize| -> Vec<Vec<Vec<f64>>> { (0..n).map(|i| vec![per_layer[l][i].clone()]).collect() };

    let runs: Vec<Result<DownstreamRun, PipelineError>> = pool.install(|| {
        modes
            .par_iter()
            .map(|&mode| {
                let (samples, layers, learn) = match mode {
                    LayerMode::Best => {
                        let name = best.clone().expect("best layer resolved");
                        let l = layer_names
                            .iter()
                            .position(|x| *x == name)
                            .ok_or_else(|| PipelineError::MissingProbeResults { model: model.clone() })?;
                        (single(l), vec![name], false)
                    }
                    LayerMode::Last => (single(sets.len() - 1), vec![layer_names[sets.len() - 1].clone()], false),
                    LayerMode::UniformAverage => {
                        let samples = (0..n)
                            .map(|i| {
                                let dim = per_layer[0][i].len();
                                let mut avg = vec![0.0; dim];
                                for layer in &per_layer {
                                    for (a, v) in avg.iter_mut().zip(&layer[i]) {
                                        *a += v;
                                    }
                                }
                                avg.iter_mut().for_each(|a| *a /= per_layer.len() as f64);
                                vec![avg]
                            })
                            .collect();
                        (samples, layer_names.clone(), false)
                    }
                    LayerMode::WeightedAverage => {
                        let samples = (0..n).map(|i| per_layer.iter().map(|l| l[i].clone()).collect()).collect();
                        (samples, layer_names.clone(), true)
                    }
                };
                let result = train_downstream(&samples, &y, &train_cfg, learn)
                    .map_err(|source| PipelineError::Downstream { mode: mode.name(), source })?;
                Ok(DownstreamRun { mode, layers, result })
            })
            .collect()
    });
    runs.into_iter().collect()
}

pub fn cmd_downstream(cfg: &ExperimentConfig) -> Result<PathBuf, PipelineError> {
    let runs = run_downstream(cfg)?;
    let manifest = load_manifest(cfg)?;
    let model = cfg
        .downstream
        .model
        .clone()
        .or_else(|| manifest.models().first().map(|m| m.to_string()))
        .unwrap_or_default();
    let train_cfg = cfg.downstream_config();
    let hash = config_hash(&train_cfg);
    let rows: Vec<ResultRow> = runs
        .iter()
        .map(|r| ResultRow {
            feature: cfg.downstream.task.clone(),
            model: model.clone(),
            layer: r.layer_label(),
            metric: "accuracy".into(),
            value: r.result.accuracy,
            n_train: r.result.n_train,
            n_val: r.result.n_test,
            seed: train_cfg.seed,
            config_hash: hash.clone(),
            epochs: r.result.epochs,
            best_epoch: r.result.epochs,
            baseline: r.result.majority_baseline,
            target_min: None,
            target_max: None,
        })
        .collect();
    ensure_dir(&cfg.out_dir)?;
    let path = cfg.downstream_path();
    write_rows(&path, &rows)?;

    let mut weights = String::from("mode\tlayer\tweight\n");
    for r in &runs {
        if let Some(w) = &r.result.layer_weights {
            for (layer, w) in r.layers.iter().zip(w) {
                let _ = writeln!(weights, "{}\t{layer}\t{w}", r.mode.name());
            }
        }
    }
    let wpath = cfg.out_dir.join("downstream_layer_weights.tsv");
    std::fs::write(&wpath, weights).map_err(|e| io_err(&wpath, e))?;
    Ok(path)
}

/// Runs every stage in order. Downstream runs only when labels are set.
pub fn run_all(cfg: &ExperimentConfig) -> Result<(), PipelineError> {
    cmd_features(cfg)?;
    cmd_baseline(cfg)?;
    let summary = cmd_probe(cfg)?;
    log::info!("{} probes trained, {} failed", summary.trained, summary.failed.len());
    cmd_report(cfg)?;
    if cfg.downstream.labels.is_some() {
        cmd_downstream(cfg)?;
    }
    Ok(())
}
