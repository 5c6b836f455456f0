// SPDX-License-Identifier: Apache-2.0

//! Context scores, the combined context-aware score, score histograms and
//! reports.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ann::{predict, NetworkWeights};
use crate::context::ContextVector;
use crate::rulecheck::{Violation, ViolationDb};

pub const BIN_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("score {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("{violations} violations but {vectors} context vectors")]
    LengthMismatch { violations: usize, vectors: usize },
    #[error("hotspot id {0} is not a violation id")]
    UnknownHotspot(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    #[default]
    Geomean,
    Min,
    Product,
}

impl std::str::FromStr for CombineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geomean" => Ok(Self::Geomean),
            "min" => Ok(Self::Min),
            "product" => Ok(Self::Product),
            other => Err(format!("unknown combine mode {other:?} (geomean, min, product)")),
        }
    }
}

/// Complement of the network's hotspot probability.
pub fn context_score(weightage: f64) -> f64 {
    1.0 - weightage
}

/// Merges the conventional score with the context score. Every mode is
/// monotone in both arguments and maps a zero in either to zero.
pub fn combine(dfm_score: f64, context_score: f64, mode: CombineMode) -> Result<f64, ScoringError> {
    for s in [dfm_score, context_score] {
        if !(0.0..=1.0).contains(&s) {
            return Err(ScoringError::OutOfRange(s));
        }
    }
    let v = match mode {
        CombineMode::Geomean => (dfm_score * context_score).sqrt(),
        CombineMode::Min => dfm_score.min(context_score),
        CombineMode::Product => dfm_score * context_score,
    };
    Ok(v.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredViolation {
    pub violation: Violation,
    pub context_weightage: f64,
    pub context_score: f64,
    pub optimized_score: f64,
}

pub fn score_all(
    db: &ViolationDb,
    vectors: &[ContextVector],
    w: &NetworkWeights,
    mode: CombineMode,
) -> Result<Vec<ScoredViolation>, ScoringError> {
    if db.violations.len() != vectors.len() {
        return Err(ScoringError::LengthMismatch {
            violations: db.violations.len(),
            vectors: vectors.len(),
        });
    }
    db.violations
        .iter()
        .zip(vectors)
        .map(|(v, ctx)| {
            let weightage = predict(w, ctx);
            let cs = context_score(weightage);
            Ok(ScoredViolation {
                violation: v.clone(),
                context_weightage: weightage,
                context_score: cs,
                optimized_score: combine(v.dfm_score, cs, mode)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Conventional,
    Optimized,
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreKind::Conventional => "conventional",
            ScoreKind::Optimized => "optimized",
        })
    }
}

impl ScoreKind {
    pub fn of(self, s: &ScoredViolation) -> f64 {
        match self {
            ScoreKind::Conventional => s.violation.dfm_score,
            ScoreKind::Optimized => s.optimized_score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub kind: ScoreKind,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub hotspot_ids: Vec<usize>,
    /// Bins holding at least one hotspot.
    pub hotspot_bins: Vec<usize>,
    /// Share of all violations that sit in a hotspot bin.
    pub hotspot_bin_mass: f64,
}

impl BinReport {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| (e[0] + e[1]) / 2.0).collect()
    }
}

pub fn bin_edges() -> Vec<f64> {
    (0..=BIN_COUNT).map(|i| i as f64 / BIN_COUNT as f64).collect()
}

/// Decile bin of a score in [0, 1]; the top bin is closed at 1.0.
pub fn bin_index(score: f64, edges: &[f64]) -> usize {
    edges[1..BIN_COUNT].iter().filter(|&&e| score >= e).count()
}

pub fn bin_scores(
    scored: &[ScoredViolation],
    which: ScoreKind,
    hotspot_ids: &BTreeSet<usize>,
) -> Result<BinReport, ScoringError> {
    let edges = bin_edges();
    let mut counts = vec![0usize; BIN_COUNT];
    let mut hot = BTreeSet::new();
    let mut seen = BTreeSet::new();
    for s in scored {
        let b = bin_index(which.of(s), &edges);
        counts[b] += 1;
        if hotspot_ids.contains(&s.violation.id) {
            hot.insert(b);
            seen.insert(s.violation.id);
        }
    }
    if let Some(&missing) = hotspot_ids.difference(&seen).next() {
        return Err(ScoringError::UnknownHotspot(missing));
    }
    let total = scored.len();
    let in_hot: usize = hot.iter().map(|&b| counts[b]).sum();
    Ok(BinReport {
        kind: which,
        bin_edges: edges,
        counts,
        hotspot_ids: hotspot_ids.iter().copied().collect(),
        hotspot_bins: hot.into_iter().collect(),
        hotspot_bin_mass: if total == 0 { 0.0 } else { in_hot as f64 / total as f64 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: usize,
    pub dfm_score: f64,
    pub context_weightage: f64,
    pub context_score: f64,
    pub optimized_score: f64,
    pub hotspot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub violations: usize,
    pub hotspots: usize,
    pub rows: Vec<ReportRow>,
    pub conventional: BinReport,
    pub optimized: BinReport,
}

pub fn emit_report(
    scored: &[ScoredViolation],
    bins_conventional: &BinReport,
    bins_optimized: &BinReport,
) -> Report {
    let hot: BTreeSet<usize> = bins_conventional.hotspot_ids.iter().copied().collect();
    let rows = scored
        .iter()
        .map(|s| ReportRow {
            id: s.violation.id,
            dfm_score: s.violation.dfm_score,
            context_weightage: s.context_weightage,
            context_score: s.context_score,
            optimized_score: s.optimized_score,
            hotspot: hot.contains(&s.violation.id),
        })
        .collect();
    Report {
        violations: scored.len(),
        hotspots: hot.len(),
        rows,
        conventional: bins_conventional.clone(),
        optimized: bins_optimized.clone(),
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain two-column `midpoint count` table for one histogram.
    pub fn plot_data(&self, which: ScoreKind) -> String {
        let bins = match which {
            ScoreKind::Conventional => &self.conventional,
            ScoreKind::Optimized => &self.optimized,
        };
        let mut out = format!("# {which} score histogram: bin_midpoint count\n");
        for (m, c) in bins.midpoints().iter().zip(&bins.counts) {
            writeln!(out, "{m:.2} {c}").unwrap();
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "violations: {}  hotspots: {}",
            self.violations, self.hotspots
        )
        .unwrap();
        writeln!(out).unwrap();
        writeln!(out, "{:<12}{:>14}{:>14}", "bin", "conventional", "optimized").unwrap();
        let edges = &self.conventional.bin_edges;
        for b in 0..BIN_COUNT {
            let mark = |r: &BinReport| if r.hotspot_bins.contains(&b) { "*" } else { " " };
            writeln!(
                out,
                "[{:.1}, {:.1}{:<3}{:>13}{}{:>13}{}",
                edges[b],
                edges[b + 1],
                if b + 1 == BIN_COUNT { "]" } else { ")" },
                self.conventional.counts[b],
                mark(&self.conventional),
                self.optimized.counts[b],
                mark(&self.optimized),
            )
            .unwrap();
        }
        writeln!(
            out,
            "hotspot bin mass: conventional {:.2}%  optimized {:.2}%   (* = bin holds a hotspot)",
            100.0 * self.conventional.hotspot_bin_mass,
            100.0 * self.optimized.hotspot_bin_mass
        )
        .unwrap();
        writeln!(out).unwrap();
        writeln!(
            out,
            "{:>6} {:>9} {:>10} {:>9} {:>10} {:>7}",
            "id", "dfm", "weightage", "context", "optimized", "hotspot"
        )
        .unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{:>6} {:>9.4} {:>10.4} {:>9.4} {:>10.4} {:>7}",
                r.id,
                r.dfm_score,
                r.context_weightage,
                r.context_score,
                r.optimized_score,
                if r.hotspot { "yes" } else { "" }
            )
            .unwrap();
        }
        out
    }
}

/// Line-delimited scored database, one record per violation.
pub fn save_scored(design_name: &str, scored: &[ScoredViolation]) -> String {
    let mut out = format!("scoreddb version=1 design={design_name} violations={}\n", scored.len());
    for s in scored {
        let v = &s.violation;
        let [a, b, c, d] = v.marker.coords();
        writeln!(
            out,
            "scored id={} marker={a},{b},{c},{d} side={} enc={} dfm_score={} context_weightage={} context_score={} optimized_score={}",
            v.id, v.failing_side, v.measured_enc, v.dfm_score, s.context_weightage, s.context_score, s.optimized_score
        )
        .unwrap();
    }
    out
}
