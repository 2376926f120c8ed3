//! Experiment configuration, read from TOML.
//!
//! Relative paths are resolved against the directory holding the config
//! file. The top-level `seed` drives the random baseline, probe splits and
//! downstream runs alike.
//!
//! ```toml
//! seed = 0
//! out_dir = "out"
//!
//! [corpus]
//! audio_dir = "audio"              # <id>.wav
//! alignment_dir = "alignments"     # <id>.TextGrid
//! annotations = "annotations.jsonl"
//! complexity_lexicon = "complexity.tsv"
//!
//! [features]
//! groups = ["audio", "fluency", "pronunciation", "text"]
//! probe = []                       # empty: every probed feature of the groups
//!
//! [embeddings]
//! manifest = "embeddings/manifest.tsv"
//! reference_model = "text"
//!
//! [probe]
//! hidden_dim = 128
//!
//! [downstream]
//! task = "speaker"
//! labels = "speakers.tsv"          # id<TAB>label
//! model = "speech"
//!
//! [downstream.training]
//! epochs = 50
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioConfig, FrameConfig, PitchConfig};
use crate::downstream::DownstreamConfig;
use crate::fluency::{SilenceConfig, SILENCE_THRESHOLD_S};
use crate::probe::ProbeConfig;
use crate::table::{feature_spec, group_features, FeatureGroup, FeatureSpec};
use crate::text::SemanticConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("'{path}': {reason}")]
    Io { path: String, reason: String },
    #[error("'{path}': {reason}")]
    Parse { path: String, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{what} '{path}' does not exist")]
    MissingPath { what: String, path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub corpus: CorpusConfig,
    pub features: FeatureConfig,
    pub audio: AudioSection,
    pub embeddings: EmbeddingsConfig,
    pub probe: ProbeConfig,
    pub downstream: DownstreamSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            jobs: 0,
            corpus: CorpusConfig::default(),
            features: FeatureConfig::default(),
            audio: AudioSection::default(),
            embeddings: EmbeddingsConfig::default(),
            probe: ProbeConfig::default(),
            downstream: DownstreamSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub audio_dir: Option<PathBuf>,
    pub alignment_dir: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub complexity_lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub groups: Vec<String>,
    pub probe: Vec<String>,
    pub silence_threshold_s: f64,
    pub include_edge_silences: bool,
    pub aux_as_verb: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            groups: FeatureGroup::ALL.iter().map(|g| g.name().to_string()).collect(),
            probe: Vec::new(),
            silence_threshold_s: SILENCE_THRESHOLD_S,
            include_edge_silences: true,
            aux_as_verb: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioSection {
    pub window_s: f64,
    pub hop_s: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    pub pitch_frame_s: f64,
    pub pitch_hop_s: f64,
    pub voicing_threshold: f64,
}

impl Default for AudioSection {
    fn default() -> Self {
        let f = FrameConfig::default();
        let p = PitchConfig::default();
        Self {
            window_s: f.window_s,
            hop_s: f.hop_s,
            f0_min: p.f0_min,
            f0_max: p.f0_max,
            pitch_frame_s: p.frame_s,
            pitch_hop_s: p.hop_s,
            voicing_threshold: p.voicing_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingsConfig {
    pub manifest: Option<PathBuf>,
    /// Model whose losses anchor the relative-to-reference report.
    pub reference_model: Option<String>,
    /// Random-baseline width; defaults to the first manifest entry's width.
    pub baseline_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownstreamSection {
    pub task: String,
    pub labels: Option<PathBuf>,
    /// Defaults to the first model in the manifest.
    pub model: Option<String>,
    /// Probe features whose profiles choose the best layer; empty uses all.
    pub best_layer_features: Vec<String>,
    pub training: DownstreamConfig,
}

impl Default for DownstreamSection {
    fn default() -> Self {
        Self {
            task: "speaker".into(),
            labels: None,
            model: None,
            best_layer_features: Vec::new(),
            training: DownstreamConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reads, resolves and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Makes every relative path absolute with respect to `base`.
    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        for p in [
            &mut self.corpus.audio_dir,
            &mut self.corpus.alignment_dir,
            &mut self.corpus.annotations,
            &mut self.corpus.complexity_lexicon,
            &mut self.embeddings.manifest,
            &mut self.downstream.labels,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let groups = self.groups()?;
        let need = |what: &str, p: &Option<PathBuf>| -> Result<(), ConfigError> {
            match p {
                None => Err(ConfigError::Invalid(format!("{what} is required by the selected feature groups"))),
                Some(_) => Ok(()),
            }
        };
        if groups.contains(&FeatureGroup::Audio) {
            need("corpus.audio_dir", &self.corpus.audio_dir)?;
        }
        if groups.contains(&FeatureGroup::Fluency) || groups.contains(&FeatureGroup::Pronunciation) {
            need("corpus.alignment_dir", &self.corpus.alignment_dir)?;
        }
        if groups.contains(&FeatureGroup::Text) {
            need("corpus.annotations", &self.corpus.annotations)?;
        }
        let paths = [
            ("corpus.audio_dir", &self.corpus.audio_dir),
            ("corpus.alignment_dir", &self.corpus.alignment_dir),
            ("corpus.annotations", &self.corpus.annotations),
            ("corpus.complexity_lexicon", &self.corpus.complexity_lexicon),
            ("embeddings.manifest", &self.embeddings.manifest),
            ("downstream.labels", &self.downstream.labels),
        ];
        for (what, p) in paths {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(ConfigError::MissingPath {
                        what: what.into(),
                        path: p.display().to_string(),
                    });
                }
            }
        }
        for name in self.features.probe.iter().chain(&self.downstream.best_layer_features) {
            if feature_spec(name).is_none() {
                return Err(ConfigError::Invalid(format!("unknown feature '{name}'")));
            }
        }
        if !(self.features.silence_threshold_s > 0.0) {
            return Err(ConfigError::Invalid("features.silence_threshold_s must be positive".into()));
        }
        if self.embeddings.baseline_dim == Some(0) {
            return Err(ConfigError::Invalid("embeddings.baseline_dim must be positive".into()));
        }
        self.probe_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("probe: {e}")))?;
        self.downstream_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("downstream: {e}")))?;
        Ok(())
    }

    pub fn groups(&self) -> Result<Vec<FeatureGroup>, ConfigError> {
        let mut out = Vec::new();
        for g in &self.features.groups {
            let group = FeatureGroup::parse(g)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown feature group '{g}'")))?;
            if !out.contains(&group) {
                out.push(group);
            }
        }
        out.sort_by_key(|g| FeatureGroup::ALL.iter().position(|x| x == g));
        Ok(out)
    }

    /// Features to probe, in registry order.
    pub fn probe_features(&self) -> Vec<&'static FeatureSpec> {
        let groups = self.groups().unwrap_or_default();
        groups
            .into_iter()
            .flat_map(group_features)
            .filter(|s| {
                if self.features.probe.is_empty() {
                    s.probed
                } else {
                    self.features.probe.iter().any(|p| p == s.name)
                }
            })
            .collect()
    }

    pub fn probe_config(&self) -> ProbeConfig {
        ProbeConfig {
            seed: self.seed,
            ..self.probe.clone()
        }
    }

    pub fn downstream_config(&self) -> DownstreamConfig {
        DownstreamConfig {
            seed: self.seed,
            ..self.downstream.training.clone()
        }
    }

    pub fn audio_config(&self) -> AudioConfig {
        let a = &self.audio;
        AudioConfig {
            frames: FrameConfig {
                window_s: a.window_s,
                hop_s: a.hop_s,
            },
            pitch: PitchConfig {
                f0_min: a.f0_min,
                f0_max: a.f0_max,
                frame_s: a.pitch_frame_s,
                hop_s: a.pitch_hop_s,
                voicing_threshold: a.voicing_threshold,
            },
        }
    }

    pub fn silence_config(&self) -> SilenceConfig {
        SilenceConfig {
            threshold_s: self.features.silence_threshold_s,
            include_edges: self.features.include_edge_silences,
        }
    }

    pub fn semantic_config(&self) -> SemanticConfig {
        SemanticConfig {
            aux_as_verb: self.features.aux_as_verb,
        }
    }

    pub fn features_path(&self) -> PathBuf {
        self.out_dir.join("features.tsv")
    }

    pub fn baseline_path(&self) -> PathBuf {
        self.out_dir.join("baseline").join("random.emb")
    }

    pub fn results_path(&self) -> PathBuf {
        self.out_dir.join("probe_results.tsv")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.out_dir.join("reports")
    }

    pub fn downstream_path(&self) -> PathBuf {
        self.out_dir.join("downstream_results.tsv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_resolution() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("audio")).unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(
            &path,
            "seed = 7\n[corpus]\naudio_dir = \"audio\"\n[features]\ngroups = [\"audio\"]\n[probe]\nhidden_dim = 16\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.corpus.audio_dir.as_deref(), Some(dir.path().join("audio").as_path()));
        assert_eq!(cfg.out_dir, dir.path().join("out"));
        assert_eq!(cfg.probe_config().seed, 7);
        assert_eq!(cfg.probe_config().hidden_dim, 16);
        assert_eq!(cfg.downstream_config().seed, 7);
        assert_eq!(cfg.probe_features().len(), 9);
    }

    #[test]
    fn rejects_bad_configs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        let load = |text: &str| {
            std::fs::write(&path, text).unwrap();
            ExperimentConfig::load(&path)
        };
        assert!(matches!(load("[features]\ngroups = [\"audio\"]\n"), Err(ConfigError::Invalid(_))));
        assert!(matches!(
            load("[corpus]\naudio_dir = \"nope\"\n[features]\ngroups = [\"audio\"]\n"),
            Err(ConfigError::MissingPath { .. })
        ));
        assert!(matches!(load("[features]\ngroups = [\"vision\"]\n"), Err(ConfigError::Invalid(_))));
        assert!(matches!(
            load("[features]\ngroups = []\nprobe = [\"shoe_size\"]\n"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(load("bogus = 1\n"), Err(ConfigError::Parse { .. })));
        assert!(matches!(
            load("[features]\ngroups = []\n[probe]\ndropout = 1.5\n"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn explicit_probe_list() {
        let cfg = ExperimentConfig {
            features: FeatureConfig {
                groups: vec!["text".into(), "audio".into()],
                probe: vec!["tense".into(), "mean_pitch".into(), "vowelRawPVI".into()],
                ..FeatureConfig::default()
            },
            ..ExperimentConfig::default()
        };
        let names: Vec<_> = cfg.probe_features().iter().map(|s| s.name).collect();
        assert_eq!(names, ["mean_pitch", "tense"]);
    }
}
