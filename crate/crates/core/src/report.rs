//! Layer profiles, relative-loss metrics and report files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::embedding::RANDOM_MODEL;
use crate::results::{natural_cmp, ResultRow};

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("minimum loss is zero")]
    ZeroMinLoss,
    #[error("random-baseline loss is zero")]
    ZeroRandomLoss,
    #[error("reference loss is zero")]
    ZeroReference,
    #[error("profile for {feature}/{model} has no losses")]
    EmptyProfile { feature: String, model: String },
    #[error("invalid loss {value} for {feature}/{model}/{layer}")]
    InvalidLoss {
        feature: String,
        model: String,
        layer: String,
        value: f64,
    },
    #[error("no results to report")]
    NoResults,
    #[error("'{path}': {reason}")]
    Io { path: String, reason: String },
}

/// `(l_i - min) * 100 / min` for each loss.
pub fn relative_to_min(losses: &[f64]) -> Result<Vec<f64>, ReportError> {
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(ReportError::ZeroMinLoss);
    }
    Ok(losses.iter().map(|&l| (l - min) * 100.0 / min).collect())
}

pub fn relative_to_random(loss: f64, random_loss: f64) -> Result<f64, ReportError> {
    if !(random_loss > 0.0) {
        return Err(ReportError::ZeroRandomLoss);
    }
    Ok(loss * 100.0 / random_loss)
}

/// Signed; negative when the model beats the reference.
pub fn relative_to_reference(model_loss: f64, ref_loss: f64) -> Result<f64, ReportError> {
    if !(ref_loss > 0.0) {
        return Err(ReportError::ZeroReference);
    }
    Ok((model_loss - ref_loss) * 100.0 / ref_loss)
}

/// Per-layer losses of one model on one feature. Layers the input lacks are
/// `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerProfile {
    pub feature: String,
    pub model: String,
    pub layers: Vec<String>,
    pub losses: Vec<Option<f64>>,
}

impl LayerProfile {
    pub fn new(
        feature: impl Into<String>,
        model: impl Into<String>,
        layers: Vec<String>,
        losses: Vec<Option<f64>>,
    ) -> Result<Self, ReportError> {
        let (feature, model) = (feature.into(), model.into());
        assert_eq!(layers.len(), losses.len(), "one loss slot per layer");
        for (layer, l) in layers.iter().zip(&losses) {
            if let Some(v) = *l {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(ReportError::InvalidLoss {
                        feature,
                        model,
                        layer: layer.clone(),
                        value: v,
                    });
                }
            }
        }
        if losses.iter().all(Option::is_none) {
            return Err(ReportError::EmptyProfile { feature, model });
        }
        Ok(Self {
            feature,
            model,
            layers,
            losses,
        })
    }

    /// Index of the lowest loss; ties go to the earliest layer.
    pub fn min_index(&self) -> usize {
        let mut best: Option<(usize, f64)> = None;
        for (i, l) in self.losses.iter().enumerate() {
            if let Some(v) = *l {
                if best.is_none_or(|(_, b)| v < b) {
                    best = Some((i, v));
                }
            }
        }
        best.expect("profile has a loss").0
    }

    pub fn min_layer(&self) -> &str {
        &self.layers[self.min_index()]
    }

    pub fn min_loss(&self) -> f64 {
        self.losses[self.min_index()].expect("min index holds a loss")
    }

    /// Loss at the last layer that has one.
    pub fn end(&self) -> (usize, f64) {
        self.losses
            .iter()
            .enumerate()
            .rev()
            .find_map(|(i, l)| l.map(|v| (i, v)))
            .expect("profile has a loss")
    }

    pub fn relative_to_min(&self) -> Result<Vec<Option<f64>>, ReportError> {
        let min = self.min_loss();
        if min <= 0.0 {
            return Err(ReportError::ZeroMinLoss);
        }
        Ok(self.losses.iter().map(|l| l.map(|v| (v - min) * 100.0 / min)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub better: Better,
    /// `(worse - better) * 100 / worse`.
    pub pct: f64,
}

impl Gap {
    pub fn between(a: f64, b: f64) -> Self {
        let (better, worse, lower) = match a.partial_cmp(&b) {
            Some(std::cmp::Ordering::Less) => (Better::A, b, a),
            Some(std::cmp::Ordering::Greater) => (Better::B, a, b),
            _ => return Self { better: Better::Tie, pct: 0.0 },
        };
        Self {
            better,
            pct: (worse - lower) * 100.0 / worse,
        }
    }

    /// Positive when A is better.
    pub fn signed_for_a(&self) -> f64 {
        match self.better {
            Better::A => self.pct,
            Better::B => -self.pct,
            Better::Tie => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub feature: String,
    pub model_a: String,
    pub model_b: String,
    pub best_layer_a: String,
    pub best_layer_b: String,
    pub best_loss_a: f64,
    pub best_loss_b: f64,
    pub best: Gap,
    pub end_loss_a: f64,
    pub end_loss_b: f64,
    pub end: Gap,
}

/// Compares two models on one feature at each model's best layer and at
/// their final layers.
pub fn compare_models(a: &LayerProfile, b: &LayerProfile) -> ModelComparison {
    let (end_a, end_b) = (a.end().1, b.end().1);
    ModelComparison {
        feature: a.feature.clone(),
        model_a: a.model.clone(),
        model_b: b.model.clone(),
        best_layer_a: a.min_layer().to_string(),
        best_layer_b: b.min_layer().to_string(),
        best_loss_a: a.min_loss(),
        best_loss_b: b.min_loss(),
        best: Gap::between(a.min_loss(), b.min_loss()),
        end_loss_a: end_a,
        end_loss_b: end_b,
        end: Gap::between(end_a, end_b),
    }
}

/// Layer profiles for every (feature, model) pair of `metric` rows,
/// excluding the random baseline. A model's layer axis is the union of its
/// layers across features, in natural order.
pub fn build_profiles(rows: &[ResultRow], metric: &str) -> Result<Vec<LayerProfile>, ReportError> {
    let rows: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.metric == metric && r.model != RANDOM_MODEL)
        .collect();
    let mut layers_of: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut losses: BTreeMap<(&str, &str), BTreeMap<&str, f64>> = BTreeMap::new();
    for r in &rows {
        layers_of.entry(&r.model).or_default().insert(&r.layer);
        losses
            .entry((&r.feature, &r.model))
            .or_default()
            .entry(&r.layer)
            .or_insert(r.value);
    }
    let mut out = Vec::new();
    for ((feature, model), by_layer) in losses {
        let mut layers: Vec<&str> = layers_of[model].iter().copied().collect();
        layers.sort_by(|a, b| natural_cmp(a, b));
        let values = layers.iter().map(|l| by_layer.get(l).copied()).collect();
        out.push(LayerProfile::new(
            feature,
            model,
            layers.into_iter().map(String::from).collect(),
            values,
        )?);
    }
    Ok(out)
}

/// Random-baseline loss per feature.
pub fn random_losses(rows: &[ResultRow], metric: &str) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == metric && r.model == RANDOM_MODEL) {
        out.entry(r.feature.clone()).or_insert(r.value);
    }
    out
}

/// Layer with the lowest mean relative-to-min loss across `features`
/// (all features when empty). Ties go to the earliest layer.
pub fn best_layer(profiles: &[LayerProfile], model: &str, features: &[String]) -> Option<String> {
    let chosen: Vec<&LayerProfile> = profiles
        .iter()
        .filter(|p| p.model == model && (features.is_empty() || features.contains(&p.feature)))
        .collect();
    let layers = &chosen.first()?.layers;
    let mut sums = vec![(0.0, 0usize); layers.len()];
    for p in &chosen {
        let Ok(rel) = p.relative_to_min() else {
            continue;
        };
        for (s, r) in sums.iter_mut().zip(rel) {
            if let Some(v) = r {
                s.0 += v;
                s.1 += 1;
            }
        }
    }
    let means: Vec<f64> = sums
        .iter()
        .map(|&(s, n)| if n == 0 { f64::NAN } else { s / n as f64 })
        .collect();
    crate::stats::argmin(&means).map(|i| layers[i].clone())
}

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

pub fn layer_profiles_tsv(profiles: &[LayerProfile]) -> Result<String, ReportError> {
    let mut out = String::from("feature\tmodel\tlayer\tloss\trelative_to_min_pct\tis_best\n");
    for p in profiles {
        let rel = p.relative_to_min()?;
        let best = p.min_index();
        for (i, layer) in p.layers.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                p.feature,
                p.model,
                layer,
                na(p.losses[i]),
                na(rel[i]),
                u8::from(i == best)
            );
        }
    }
    Ok(out)
}

/// Stacked-area chart data for one model: one row per feature and layer.
pub fn chart_tsv(profiles: &[LayerProfile], model: &str) -> Result<String, ReportError> {
    let mut out = String::from("feature\tlayer\trelative_pct\n");
    for p in profiles.iter().filter(|p| p.model == model) {
        for (layer, r) in p.layers.iter().zip(p.relative_to_min()?) {
            let _ = writeln!(out, "{}\t{}\t{}", p.feature, layer, na(r));
        }
    }
    Ok(out)
}

pub fn relative_to_random_tsv(profiles: &[LayerProfile], random: &BTreeMap<String, f64>) -> String {
    let mut out = String::from("feature\tmodel\tlayer\tloss\trandom_loss\trelative_to_random_pct\n");
    for p in profiles {
        let Some(&rl) = random.get(&p.feature) else {
            continue;
        };
        for (layer, l) in p.layers.iter().zip(&p.losses) {
            let rel = l.and_then(|v| relative_to_random(v, rl).ok());
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", p.feature, p.model, layer, na(*l), rl, na(rel));
        }
    }
    out
}

const COMPARISON_HEADER: &str = "\
# gap_pct = (worse_loss - better_loss) * 100 / worse_loss, at each model's best layer and at the final layers.
# advantage_a_pct is gap_pct signed positive when model_a has the lower loss.
# Rows with feature '*mean*' average advantage_a_pct arithmetically over features.
feature\tmodel_a\tmodel_b\tbest_layer_a\tbest_loss_a\tbest_layer_b\tbest_loss_b\tbest_gap_pct\tbest_better\tbest_advantage_a_pct\tend_loss_a\tend_loss_b\tend_gap_pct\tend_better\tend_advantage_a_pct
";

fn better_name<'a>(c: &'a ModelComparison, g: &Gap) -> &'a str {
    match g.better {
        Better::A => &c.model_a,
        Better::B => &c.model_b,
        Better::Tie => "tie",
    }
}

/// Comparison of every ordered pair of models over their shared features.
pub fn model_comparison_tsv(profiles: &[LayerProfile]) -> String {
    let models: BTreeSet<&str> = profiles.iter().map(|p| p.model.as_str()).collect();
    let mut out = String::from(COMPARISON_HEADER);
    for &a in &models {
        for &b in &models {
            if a == b {
                continue;
            }
            let mut best_sum = 0.0;
            let mut end_sum = 0.0;
            let mut n = 0;
            for pa in profiles.iter().filter(|p| p.model == a) {
                let Some(pb) = profiles.iter().find(|p| p.model == b && p.feature == pa.feature) else {
                    continue;
                };
                let c = compare_models(pa, pb);
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    c.feature,
                    a,
                    b,
                    c.best_layer_a,
                    c.best_loss_a,
                    c.best_layer_b,
                    c.best_loss_b,
                    c.best.pct,
                    better_name(&c, &c.best),
                    c.best.signed_for_a(),
                    c.end_loss_a,
                    c.end_loss_b,
                    c.end.pct,
                    better_name(&c, &c.end),
                    c.end.signed_for_a(),
                );
                best_sum += c.best.signed_for_a();
                end_sum += c.end.signed_for_a();
                n += 1;
            }
            if n > 0 {
                let _ = writeln!(
                    out,
                    "*mean*\t{a}\t{b}\tNA\tNA\tNA\tNA\tNA\tNA\t{}\tNA\tNA\tNA\tNA\t{}",
                    best_sum / n as f64,
                    end_sum / n as f64
                );
            }
        }
    }
    out
}

/// Each model's per-layer loss against the reference model's loss at the
/// same layer name.
pub fn relative_to_reference_tsv(profiles: &[LayerProfile], reference: &str) -> String {
    let mut out = String::from("feature\tmodel\tlayer\tloss\treference_loss\trelative_to_reference_pct\n");
    for p in profiles.iter().filter(|p| p.model != reference) {
        let Some(r) = profiles.iter().find(|q| q.model == reference && q.feature == p.feature) else {
            continue;
        };
        for (layer, l) in p.layers.iter().zip(&p.losses) {
            let rl = r
                .layers
                .iter()
                .position(|x| x == layer)
                .and_then(|i| r.losses[i]);
            let rel = match (l, rl) {
                (Some(v), Some(rv)) => relative_to_reference(*v, rv).ok(),
                _ => None,
            };
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", p.feature, p.model, layer, na(*l), na(rl), na(rel));
        }
    }
    out
}

/// Classification accuracies with the best (highest) layer marked.
pub fn accuracy_tsv(rows: &[ResultRow]) -> String {
    let mut groups: BTreeMap<(&str, &str), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == "accuracy") {
        groups.entry((&r.feature, &r.model)).or_default().push(r);
    }
    let mut out = String::from("feature\tmodel\tlayer\taccuracy\tmajority_baseline\tis_best\n");
    for ((feature, model), mut rs) in groups {
        rs.sort_by(|a, b| natural_cmp(&a.layer, &b.layer));
        let neg: Vec<f64> = rs.iter().map(|r| -r.value).collect();
        let best = crate::stats::argmin(&neg);
        for (i, r) in rs.iter().enumerate() {
            let _ = writeln!(
                out,
                "{feature}\t{model}\t{}\t{}\t{}\t{}",
                r.layer,
                r.value,
                r.baseline,
                u8::from(Some(i) == best)
            );
        }
    }
    out
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes every report into `dir` and returns the paths written.
pub fn emit_reports(rows: &[ResultRow], dir: &Path, reference: Option<&str>) -> Result<Vec<PathBuf>, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::NoResults);
    }
    std::fs::create_dir_all(dir).map_err(|e| ReportError::Io {
        path: dir.display().to_string(),
        reason: e.to_string(),
    })?;
    let profiles = build_profiles(rows, "mse")?;
    let random = random_losses(rows, "mse");
    let mut files: Vec<(String, String)> = vec![
        ("layer_profiles.tsv".into(), layer_profiles_tsv(&profiles)?),
        ("relative_to_random.tsv".into(), relative_to_random_tsv(&profiles, &random)),
        ("model_comparison.tsv".into(), model_comparison_tsv(&profiles)),
    ];
    let models: BTreeSet<&str> = profiles.iter().map(|p| p.model.as_str()).collect();
    for m in models {
        files.push((format!("chart_{}.tsv", sanitize(m)), chart_tsv(&profiles, m)?));
    }
    if let Some(r) = reference {
        files.push(("relative_to_reference.tsv".into(), relative_to_reference_tsv(&profiles, r)));
    }
    if rows.iter().any(|r| r.metric == "accuracy") {
        files.push(("accuracy.tsv".into(), accuracy_tsv(rows)));
    }
    let mut written = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| ReportError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(model: &str, losses: &[f64]) -> LayerProfile {
        LayerProfile::new(
            "f",
            model,
            (1..=losses.len()).map(|i| format!("layer{i}")).collect(),
            losses.iter().map(|&l| Some(l)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn relative_to_min_examples() {
        let r = relative_to_min(&[0.001, 0.002, 0.003]).unwrap();
        for (got, want) in r.iter().zip([0.0, 100.0, 200.0]) {
            assert!((got - want).abs() < 1e-9);
        }
        assert_eq!(relative_to_min(&[0.5; 4]).unwrap(), vec![0.0; 4]);
        assert_eq!(relative_to_min(&[0.0, 1.0]), Err(ReportError::ZeroMinLoss));
    }

    #[test]
    fn random_and_reference_examples() {
        assert_eq!(relative_to_random(0.005, 0.01).unwrap(), 50.0);
        assert_eq!(relative_to_random(0.01, 0.01).unwrap(), 100.0);
        assert_eq!(relative_to_random(0.0, 0.01).unwrap(), 0.0);
        assert_eq!(relative_to_random(1.0, 0.0), Err(ReportError::ZeroRandomLoss));
        assert_eq!(relative_to_reference(0.5, 1.0).unwrap(), -50.0);
        assert!((relative_to_reference(1.1, 1.0).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(relative_to_reference(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(relative_to_reference(1.0, 0.0), Err(ReportError::ZeroReference));
    }

    #[test]
    fn compare_examples() {
        let c = compare_models(&profile("a", &[0.9, 0.8]), &profile("b", &[1.0, 1.2]));
        assert_eq!(c.best.better, Better::A);
        assert!((c.best.pct - 20.0).abs() < 1e-12);
        assert!((c.end.pct - (1.2 - 0.8) * 100.0 / 1.2).abs() < 1e-12);
        let tie = compare_models(&profile("a", &[1.0]), &profile("b", &[1.0]));
        assert_eq!(tie.best, Gap { better: Better::Tie, pct: 0.0 });
    }

    #[test]
    fn ties_go_to_earliest_layer() {
        let p = profile("a", &[0.3, 0.1, 0.1, 0.2]);
        assert_eq!(p.min_layer(), "layer2");
        assert_eq!(p.end(), (3, 0.2));
    }

    #[test]
    fn missing_layers_are_gaps() {
        let p = LayerProfile::new(
            "f",
            "m",
            vec!["layer1".into(), "layer2".into(), "layer3".into()],
            vec![Some(0.2), None, Some(0.1)],
        )
        .unwrap();
        let chart = chart_tsv(&[p], "m").unwrap();
        assert_eq!(chart, "feature\tlayer\trelative_pct\nf\tlayer1\t100\nf\tlayer2\tNA\nf\tlayer3\t0\n");
        assert!(LayerProfile::new("f", "m", vec!["l".into()], vec![None]).is_err());
        assert!(LayerProfile::new("f", "m", vec!["l".into()], vec![Some(-1.0)]).is_err());
    }

    #[test]
    fn comparison_lists_both_orderings() {
        let text = model_comparison_tsv(&[profile("a", &[0.8]), profile("b", &[1.0])]);
        assert!(text.starts_with("# gap_pct"));
        let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("f\t")).collect();
        assert_eq!(rows.len(), 2);
        let cols = |r: &str| r.split('\t').map(String::from).collect::<Vec<_>>();
        let (ab, ba) = (cols(rows[0]), cols(rows[1]));
        assert_eq!((&ab[1][..], &ab[2][..], &ab[8][..]), ("a", "b", "a"));
        assert_eq!((&ba[1][..], &ba[2][..], &ba[8][..]), ("b", "a", "a"));
        let num = |s: &str| s.parse::<f64>().unwrap();
        assert!((num(&ab[7]) - 20.0).abs() < 1e-9 && (num(&ab[9]) - 20.0).abs() < 1e-9);
        assert!((num(&ba[9]) + 20.0).abs() < 1e-9);
    }

    #[test]
    fn best_layer_averages_relative_losses() {
        let mut p1 = profile("m", &[0.1, 0.2, 0.4]);
        let mut p2 = profile("m", &[0.4, 0.2, 0.2]);
        p1.feature = "x".into();
        p2.feature = "y".into();
        // relative: x [0, 100, 300], y [100, 0, 0] -> means [50, 50, 150]
        assert_eq!(best_layer(&[p1.clone(), p2.clone()], "m", &[]), Some("layer1".into()));
        assert_eq!(best_layer(&[p1, p2], "m", &["y".into()]), Some("layer2".into()));
    }
}
