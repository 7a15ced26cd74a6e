//! Relational data selection: rank external utterances by similarity to a target speaker.
//!
//! * `DC1` scores an utterance by its raw PLDA score against the target.
//! * `DC2` squashes the score with a temperature sigmoid and divides by `sigma_n^alpha`,
//!   where `sigma_n` is the speaker's embedding divergence over the pool.
//! * `DC3` additionally multiplies the divergence base by the utterance's distance to
//!   its speaker mean.
//!
//! Denominator bases are floored at `epsilon` before exponentiation, so singleton
//! speakers and utterances sitting on their speaker mean keep finite scores.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::embeddings::{Embedding, EmbeddingPool, PoolError, UtteranceRecord};
use crate::parallel;
use crate::plda::{PldaError, PldaModel};

#[derive(Debug, thiserror::Error)]
pub enum SelectionError {
    #[error("invalid selection config: {0}")]
    Config(String),
    #[error("pool is empty after excluding speakers")]
    EmptyPool,
    #[error("target dimension {found} does not match pool dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("{0}")]
    Pool(#[from] PoolError),
    #[error("scoring {speaker}/{utterance}: {source}")]
    Plda {
        speaker: String,
        utterance: String,
        #[source]
        source: PldaError,
    },
    #[error("target: {0}")]
    Target(PldaError),
    #[error("histogram needs at least one score and one bin")]
    EmptyHistogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Dc1,
    Dc2,
    Dc3,
}

impl std::str::FromStr for Criterion {
    type Err = SelectionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dc1" => Ok(Self::Dc1),
            "dc2" => Ok(Self::Dc2),
            "dc3" => Ok(Self::Dc3),
            other => Err(SelectionError::Config(format!("unknown criterion {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub criterion: Criterion,
    pub k: usize,
    pub alpha: f64,
    pub sigmoid_c: f64,
    pub epsilon: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            criterion: Criterion::Dc3,
            k: 85,
            alpha: 0.1,
            sigmoid_c: 0.5,
            epsilon: 1e-6,
        }
    }
}

impl SelectionConfig {
    pub fn with_criterion(criterion: Criterion) -> Self {
        Self {
            criterion,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SelectionError> {
        if self.k < 1 {
            return Err(SelectionError::Config("k must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(SelectionError::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.sigmoid_c.is_finite() && self.sigmoid_c > 0.0) {
            return Err(SelectionError::Config(format!("sigmoid_c must be > 0, got {}", self.sigmoid_c)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(SelectionError::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Temperature sigmoid `1 / (1 + c * exp(-x))`, evaluated without overflow.
pub fn sigmoid_score(plda_raw: f64, c: f64) -> f64 {
    if plda_raw >= 0.0 {
        1.0 / (1.0 + c * (-plda_raw).exp())
    } else {
        let t = plda_raw.exp();
        t / (t + c)
    }
}

/// Score components of a single utterance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreParts {
    pub plda_raw: f64,
    pub plda_sigmoid: f64,
    pub sigma_n: f64,
    pub utt_distance: f64,
    pub final_score: f64,
}

pub fn score_utterance(cfg: &SelectionConfig, plda_raw: f64, sigma_n: f64, utt_distance: f64) -> ScoreParts {
    let plda_sigmoid = sigmoid_score(plda_raw, cfg.sigmoid_c);
    let final_score = match cfg.criterion {
        Criterion::Dc1 => plda_raw,
        Criterion::Dc2 => plda_sigmoid / sigma_n.max(cfg.epsilon).powf(cfg.alpha),
        Criterion::Dc3 => plda_sigmoid / (sigma_n * utt_distance).max(cfg.epsilon).powf(cfg.alpha),
    };
    ScoreParts {
        plda_raw,
        plda_sigmoid,
        sigma_n,
        utt_distance,
        final_score,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredUtterance {
    pub speaker_id: String,
    pub utterance_id: String,
    pub plda_raw: f64,
    pub plda_sigmoid: f64,
    pub sigma_n: f64,
    pub utt_distance: f64,
    pub final_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl ScoredUtterance {
    fn from_parts(record: &UtteranceRecord, parts: ScoreParts) -> Self {
        Self {
            speaker_id: record.speaker_id.clone(),
            utterance_id: record.utterance_id.clone(),
            plda_raw: parts.plda_raw,
            plda_sigmoid: parts.plda_sigmoid,
            sigma_n: parts.sigma_n,
            utt_distance: parts.utt_distance,
            final_score: parts.final_score,
            tag: record.tag.clone(),
        }
    }

    /// Recomputes sigmoid and final score from the stored raw components.
    pub fn rescored(&self, cfg: &SelectionConfig) -> Self {
        let p = score_utterance(cfg, self.plda_raw, self.sigma_n, self.utt_distance);
        Self {
            plda_sigmoid: p.plda_sigmoid,
            final_score: p.final_score,
            ..self.clone()
        }
    }

    fn key(&self) -> (&str, &str) {
        (&self.speaker_id, &self.utterance_id)
    }
}

/// Descending final score, then ascending speaker id, then ascending utterance id.
pub fn ranking_order(a: &ScoredUtterance, b: &ScoredUtterance) -> Ordering {
    b.final_score
        .total_cmp(&a.final_score)
        .then_with(|| a.speaker_id.cmp(&b.speaker_id))
        .then_with(|| a.utterance_id.cmp(&b.utterance_id))
}

pub fn rank(mut items: Vec<ScoredUtterance>) -> Vec<ScoredUtterance> {
    items.sort_by(ranking_order);
    items
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub num_speakers: usize,
    /// Speakers contributing exactly one selected utterance.
    pub num_suspected: usize,
    pub utterance_overlap_pct: Option<f64>,
    pub speaker_overlap_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub ranked: Vec<ScoredUtterance>,
    pub selected: Vec<ScoredUtterance>,
    pub stats: SelectionStats,
    pub threshold_score: f64,
}

impl SelectionReport {
    /// Cuts an already ranked list at `k`.
    pub fn from_ranked(ranked: Vec<ScoredUtterance>, k: usize, reference: Option<&[ScoredUtterance]>) -> Self {
        let selected: Vec<_> = ranked.iter().take(k).cloned().collect();
        let threshold_score = selected.last().map_or(f64::NAN, |s| s.final_score);
        let stats = selection_stats(&selected, reference);
        Self {
            ranked,
            selected,
            stats,
            threshold_score,
        }
    }
}

/// Scores every non-excluded pool utterance against `target` and keeps the top `cfg.k`.
///
/// Speaker means and divergences are taken over all of a speaker's pool utterances
/// before any exclusion or selection.
pub fn rank_pool(
    pool: &EmbeddingPool,
    model: &PldaModel,
    target: &Embedding,
    cfg: &SelectionConfig,
    exclude_speakers: &HashSet<String>,
) -> Result<SelectionReport, SelectionError> {
    cfg.validate()?;
    if target.dim() != pool.dimension() {
        return Err(SelectionError::Dimension {
            expected: pool.dimension(),
            found: target.dim(),
        });
    }
    let candidates: Vec<&UtteranceRecord> = pool
        .records()
        .iter()
        .filter(|r| !exclude_speakers.contains(&r.speaker_id))
        .collect();
    if candidates.is_empty() {
        return Err(SelectionError::EmptyPool);
    }
    let stats = pool.all_speaker_stats();
    let enroll = model.prepare(target).map_err(SelectionError::Target)?;

    let scored = parallel::map_slice(&candidates, |rec| {
        let speaker = &stats[&rec.speaker_id];
        let test = model.prepare(&rec.embedding).map_err(|source| SelectionError::Plda {
            speaker: rec.speaker_id.clone(),
            utterance: rec.utterance_id.clone(),
            source,
        })?;
        let raw = model.score(&enroll, &test).map_err(|source| SelectionError::Plda {
            speaker: rec.speaker_id.clone(),
            utterance: rec.utterance_id.clone(),
            source,
        })?;
        let dist = rec.embedding.distance(&speaker.mean);
        Ok(ScoredUtterance::from_parts(
            rec,
            score_utterance(cfg, raw, speaker.divergence, dist),
        ))
    });
    let scored = scored.into_iter().collect::<Result<Vec<_>, SelectionError>>()?;
    Ok(SelectionReport::from_ranked(rank(scored), cfg.k, None))
}

/// Table-style statistics of a selection, optionally against a reference selection.
pub fn selection_stats(selected: &[ScoredUtterance], reference: Option<&[ScoredUtterance]>) -> SelectionStats {
    let mut per_speaker: BTreeMap<&str, usize> = BTreeMap::new();
    for s in selected {
        *per_speaker.entry(&s.speaker_id).or_default() += 1;
    }
    let num_speakers = per_speaker.len();
    let num_suspected = per_speaker.values().filter(|&&n| n == 1).count();

    let (utterance_overlap_pct, speaker_overlap_pct) = match reference {
        None => (None, None),
        Some(reference) => {
            let ref_utts: BTreeSet<(&str, &str)> = reference.iter().map(ScoredUtterance::key).collect();
            let sel_utts: BTreeSet<(&str, &str)> = selected.iter().map(ScoredUtterance::key).collect();
            let ref_spk: BTreeSet<&str> = reference.iter().map(|s| s.speaker_id.as_str()).collect();
            let utt = overlap_pct(sel_utts.intersection(&ref_utts).count(), ref_utts.len());
            let spk = overlap_pct(
                ref_spk.iter().filter(|s| per_speaker.contains_key(*s)).count(),
                ref_spk.len(),
            );
            (Some(utt), Some(spk))
        }
    };
    SelectionStats {
        num_speakers,
        num_suspected,
        utterance_overlap_pct,
        speaker_overlap_pct,
    }
}

fn overlap_pct(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * hits as f64 / total as f64
    }
}

/// Utterance ids for an adaptation set: the selected utterances followed by the targets.
pub fn adaptation_list(selected: &[ScoredUtterance], targets: &[UtteranceRecord]) -> Vec<String> {
    selected
        .iter()
        .map(|s| s.utterance_id.clone())
        .chain(targets.iter().map(|t| t.utterance_id.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramGrouping {
    #[default]
    None,
    SpeakerGenderTag,
}

impl std::str::FromStr for HistogramGrouping {
    type Err = SelectionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "speaker_gender_tag" | "tag" | "gender" => Ok(Self::SpeakerGenderTag),
            other => Err(SelectionError::Config(format!("unknown grouping {other:?}"))),
        }
    }
}

/// Equal-width histogram of raw PLDA scores, shared edges across groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    /// `bins + 1` edges from min to max.
    pub edges: Vec<f64>,
    /// Group name and per-bin counts, groups in ascending name order.
    pub groups: Vec<(String, Vec<usize>)>,
}

impl ScoreHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,bin,lower,upper,count\n");
        for (name, counts) in &self.groups {
            for (i, c) in counts.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{},{}", name, i, self.edges[i], self.edges[i + 1], c);
            }
        }
        out
    }
}

pub fn score_histogram(
    ranked: &[ScoredUtterance],
    bins: usize,
    group_by: HistogramGrouping,
) -> Result<ScoreHistogram, SelectionError> {
    if ranked.is_empty() || bins == 0 {
        return Err(SelectionError::EmptyHistogram);
    }
    let (lo, hi) = ranked
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.plda_raw), hi.max(s.plda_raw)));
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let bin_of = |v: f64| -> usize {
        if width <= 0.0 {
            return 0;
        }
        let mut b = (((v - lo) / width).floor() as usize).min(bins - 1);
        // settle rounding at the edges against the stored edge values
        while b > 0 && v < edges[b] {
            b -= 1;
        }
        while b + 1 < bins && v >= edges[b + 1] {
            b += 1;
        }
        b
    };
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for s in ranked {
        let name = match group_by {
            HistogramGrouping::None => "all".to_owned(),
            HistogramGrouping::SpeakerGenderTag => s.tag.clone().unwrap_or_else(|| "untagged".to_owned()),
        };
        groups.entry(name).or_insert_with(|| vec![0; bins])[bin_of(s.plda_raw)] += 1;
    }
    Ok(ScoreHistogram {
        edges,
        groups: groups.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn su(s: &str, u: &str, score: f64) -> ScoredUtterance {
        ScoredUtterance {
            speaker_id: s.into(),
            utterance_id: u.into(),
            plda_raw: score,
            plda_sigmoid: sigmoid_score(score, 0.5),
            sigma_n: 1.0,
            utt_distance: 1.0,
            final_score: score,
            tag: None,
        }
    }

    #[test]
    fn sigmoid_anchors() {
        assert_eq!(sigmoid_score(0.0, 0.5), 2.0 / 3.0);
        assert_eq!(sigmoid_score(1000.0, 0.5), 1.0);
        assert_eq!(sigmoid_score(-1000.0, 0.5), 0.0);
        assert!((sigmoid_score(2f64.ln(), 0.5) - 0.8).abs() < 1e-15);
        assert!((sigmoid_score(0.5f64.ln(), 0.5) - 0.5).abs() < 1e-15);
        assert!(sigmoid_score(f64::INFINITY, 0.5) == 1.0);
        assert!(sigmoid_score(f64::NEG_INFINITY, 0.5) == 0.0);
    }

    #[test]
    fn criterion_formulas() {
        let dc2 = SelectionConfig::with_criterion(Criterion::Dc2);
        let p = score_utterance(&dc2, 0.7, 1.0, 5.0);
        assert_eq!(p.final_score, p.plda_sigmoid);
        let dc3 = SelectionConfig {
            alpha: 0.0,
            ..SelectionConfig::with_criterion(Criterion::Dc3)
        };
        let p = score_utterance(&dc3, -2.0, 7.0, 0.01);
        assert_eq!(p.final_score, p.plda_sigmoid);
        let p = score_utterance(&dc2, 0.0, 10f64.exp(), 1.0);
        let expected = (2.0 / 3.0) / 1f64.exp();
        assert!((p.final_score - expected).abs() < 1e-15);
        assert!((p.final_score - 0.245_252_960_8).abs() < 1e-10);
        let dc1 = SelectionConfig::with_criterion(Criterion::Dc1);
        assert_eq!(score_utterance(&dc1, -3.5, 0.0, 0.0).final_score, -3.5);
    }

    #[test]
    fn zero_divergence_is_floored() {
        let cfg = SelectionConfig::with_criterion(Criterion::Dc3);
        let p = score_utterance(&cfg, 1.0, 0.0, 0.0);
        assert!(p.final_score.is_finite());
        assert!((p.final_score - p.plda_sigmoid / 1e-6f64.powf(0.1)).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SelectionConfig::default().validate().is_ok());
        for bad in [
            SelectionConfig { k: 0, ..Default::default() },
            SelectionConfig { alpha: -0.1, ..Default::default() },
            SelectionConfig { sigmoid_c: 0.0, ..Default::default() },
            SelectionConfig { epsilon: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert_eq!("DC2".parse::<Criterion>().unwrap(), Criterion::Dc2);
        assert!("dc4".parse::<Criterion>().is_err());
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let ranked = rank(vec![su("b", "1", 1.0), su("a", "2", 1.0), su("a", "1", 1.0), su("c", "0", 2.0)]);
        let keys: Vec<_> = ranked.iter().map(|s| (s.speaker_id.as_str(), s.utterance_id.as_str())).collect();
        assert_eq!(keys, vec![("c", "0"), ("a", "1"), ("a", "2"), ("b", "1")]);
    }

    #[test]
    fn stats_by_definition() {
        let sel = vec![su("s1", "u1", 3.0), su("s1", "u2", 2.0), su("s2", "u3", 1.0)];
        let st = selection_stats(&sel, None);
        assert_eq!((st.num_speakers, st.num_suspected), (2, 1));
        assert_eq!(st.utterance_overlap_pct, None);
        let st = selection_stats(&sel, Some(&sel));
        assert_eq!(st.utterance_overlap_pct, Some(100.0));
        assert_eq!(st.speaker_overlap_pct, Some(100.0));
        let other = vec![su("s9", "u9", 1.0)];
        let st = selection_stats(&sel, Some(&other));
        assert_eq!(st.utterance_overlap_pct, Some(0.0));
        assert_eq!(st.speaker_overlap_pct, Some(0.0));
    }

    #[test]
    fn histogram_small_cases() {
        let h = score_histogram(&[su("a", "1", 0.3)], 1, HistogramGrouping::None).unwrap();
        assert_eq!(h.groups, vec![("all".to_owned(), vec![1])]);
        let items: Vec<_> = (0..4).map(|i| su("a", &i.to_string(), i as f64)).collect();
        let h = score_histogram(&items, 2, HistogramGrouping::None).unwrap();
        assert_eq!(h.groups[0].1, vec![2, 2]);
        assert!(h.to_csv().starts_with("group,bin,lower,upper,count\nall,0,0,1.5,2\n"));
        assert!(score_histogram(&[], 3, HistogramGrouping::None).is_err());
        assert!(score_histogram(&items, 0, HistogramGrouping::None).is_err());
    }

    #[test]
    fn histogram_groups_by_tag() {
        let mut items: Vec<_> = (0..6).map(|i| su("a", &i.to_string(), i as f64)).collect();
        for (i, it) in items.iter_mut().enumerate() {
            it.tag = Some(if i % 2 == 0 { "female" } else { "male" }.into());
        }
        let h = score_histogram(&items, 3, HistogramGrouping::SpeakerGenderTag).unwrap();
        assert_eq!(h.groups.len(), 2);
        assert_eq!(h.groups[0].0, "female");
        assert_eq!(h.groups[0].1.iter().sum::<usize>(), 3);
    }

    #[test]
    fn adaptation_list_appends_targets() {
        let sel = vec![su("s", "a", 1.0)];
        let t = UtteranceRecord::new("tgt", "t1", Embedding::new(vec![1.0]).unwrap());
        assert_eq!(adaptation_list(&sel, &[t]), vec!["a", "t1"]);
    }
}
