// SPDX-License-Identifier: Apache-2.0

//! Synthetic via/metal designs, the geometric lithography proxy, hotspot
//! marker overlay and training-set assembly.
//!
//! Every tile is a via on a horizontal metal wire with a parallel wire
//! above and below. All tile geometry is laid out in units of the rule's
//! recommended enclosure `u`, with the via at `[0, 4u] x [0, 4u]`:
//!
//! ```text
//!   upper wire   y in [6u, 7u],  x in [-8u, 12u]
//!   host metal   y in [-u, 5u],  x in [-7u, 11u]   (one side pulled in on violations)
//!   lower wire   y in [-3u, -2u], x in [-8u, 12u]
//! ```
//!
//! Clean contexts break at most one neighbor (a single line-end gap or a
//! jog, 2 to 4 convex corners near the via). Hotspot contexts cut the
//! upper wire twice and jog the lower wire (10 convex corners).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{context_window, extract_context, ContextConfig, ContextError, ContextVector};
use crate::geometry::{Layout, Point, Polygon, Rect};
use crate::rulecheck::{EnclosureRule, Side, ViolationDb};

/// Convex foreign corners above which the proxy calls a hotspot.
pub const HOTSPOT_CORNER_THRESHOLD: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("placement pitch {pitch} too small, tiles need at least {min}")]
    InfeasiblePitch { pitch: i64, min: i64 },
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error("labels do not line up with the violation database: {0}")]
    LabelMismatch(String),
    #[error("hotspot file line {line}: {message}")]
    MarkerFormat { line: usize, message: String },
}

/// Distribution of the failing-side enclosure on planted violations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EnclosureProfile {
    /// Uniform over `[drc_min, dfm_rec)`.
    #[default]
    Uniform,
    /// `enc` with probability `share`, otherwise uniform.
    Dominant { enc: i64, share: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub seed: u64,
    pub n_vias: usize,
    pub violation_fraction: f64,
    pub hotspot_context_fraction: f64,
    pub rule: EnclosureRule,
    pub placement_pitch: i64,
    #[serde(default)]
    pub profile: EnclosureProfile,
}

impl GenParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidParams(m));
        self.rule
            .validate()
            .map_err(|e| SynthError::InvalidParams(e.to_string()))?;
        if self.n_vias == 0 {
            return bad("n_vias must be positive".into());
        }
        for (name, f) in [
            ("violation_fraction", self.violation_fraction),
            ("hotspot_context_fraction", self.hotspot_context_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("{name} must lie in [0, 1], got {f}"));
            }
        }
        if let EnclosureProfile::Dominant { enc, share } = self.profile {
            if !(self.rule.drc_min..self.rule.dfm_rec).contains(&enc) {
                return bad(format!("dominant enclosure {enc} outside [drc_min, dfm_rec)"));
            }
            if !(0.0..=1.0).contains(&share) {
                return bad(format!("dominant share must lie in [0, 1], got {share}"));
            }
        }
        let min = min_pitch(&self.rule);
        if self.placement_pitch < min {
            return Err(SynthError::InfeasiblePitch {
                pitch: self.placement_pitch,
                min,
            });
        }
        Ok(())
    }
}

/// Smallest pitch at which tiles neither overlap nor reach into a
/// neighbor's default context window.
pub fn min_pitch(rule: &EnclosureRule) -> i64 {
    21 * rule.dfm_rec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborPattern {
    /// Both neighbor wires run straight through.
    Straight,
    /// Upper wire has one line-end gap above the via.
    Gap,
    /// Lower wire jogs below the via.
    Jog,
    /// Two upper gaps plus the lower jog.
    Hotspot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedVia {
    pub via: Rect,
    pub is_violation: bool,
    pub bad_context: bool,
    /// Failing side and its enclosure, for violations.
    pub failing: Option<(Side, i64)>,
    pub pattern: NeighborPattern,
}

fn rect(a: i64, b: i64, c: i64, d: i64) -> Rect {
    Rect::new(a, b, c, d).expect("tile geometry is non-degenerate")
}

fn place_tile(
    layout: &mut Layout,
    rule: &EnclosureRule,
    origin: Point,
    failing: Option<(Side, i64)>,
    pattern: NeighborPattern,
) -> PlantedVia {
    let u = rule.dfm_rec;
    let (ox, oy) = (origin.x, origin.y);
    let at = |r: Rect| r.translate(ox, oy);
    let metal_layer = rule.metal_layer.as_str();

    let via = at(rect(0, 0, 4 * u, 4 * u));
    let (mut x0, mut y0, mut x1, mut y1) = (-7 * u, -u, 11 * u, 5 * u);
    match failing {
        Some((Side::Left, e)) => x0 = -e,
        Some((Side::Right, e)) => x1 = 4 * u + e,
        Some((Side::Bottom, e)) => y0 = -e,
        Some((Side::Top, e)) => y1 = 4 * u + e,
        None => {}
    }
    let mut add = |r: Rect| layout.add_rect(metal_layer, at(r)).expect("layer name validated");
    add(rect(x0, y0, x1, y1));

    // upper neighbor
    let upper_cuts: &[(i64, i64)] = match pattern {
        NeighborPattern::Gap => &[(u, 3 * u)],
        NeighborPattern::Hotspot => &[(-2 * u, -u), (5 * u, 6 * u)],
        _ => &[],
    };
    let mut start = -8 * u;
    for &(a, b) in upper_cuts {
        add(rect(start, 6 * u, a, 7 * u));
        start = b;
    }
    add(rect(start, 6 * u, 12 * u, 7 * u));

    // lower neighbor
    if matches!(pattern, NeighborPattern::Jog | NeighborPattern::Hotspot) {
        let jog = Polygon::new(
            [
                (-8 * u, -3 * u),
                (2 * u, -3 * u),
                (2 * u, -4 * u),
                (12 * u, -4 * u),
                (12 * u, -3 * u),
                (3 * u, -3 * u),
                (3 * u, -2 * u),
                (-8 * u, -2 * u),
            ]
            .iter()
            .map(|&(x, y)| Point::new(x + ox, y + oy))
            .collect(),
        )
        .expect("jog outline is a valid polygon");
        layout.add_polygon(metal_layer, jog).expect("layer name validated");
    } else {
        add(rect(-8 * u, -3 * u, 12 * u, -2 * u));
    }

    layout.add_rect(&rule.via_layer, via).expect("layer name validated");
    PlantedVia {
        via,
        is_violation: failing.is_some(),
        bad_context: pattern == NeighborPattern::Hotspot,
        failing,
        pattern,
    }
}

fn empty_design(name: String, rule: &EnclosureRule) -> Layout {
    let mut layout = Layout::new(name);
    layout.add_layer(&rule.metal_layer).expect("validated rule");
    layout.add_layer(&rule.via_layer).expect("validated rule");
    layout
}

/// Places `n_vias` tiles on a square grid. Exactly
/// `round(n_vias * violation_fraction)` tiles are violations and
/// `round(violations * hotspot_context_fraction)` of those get hotspot
/// neighbors; the rest get a random clean pattern.
pub fn generate_layout(params: &GenParams) -> Result<(Layout, Vec<PlantedVia>), SynthError> {
    params.validate()?;
    let rule = &params.rule;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let n = params.n_vias;
    let n_viol = (n as f64 * params.violation_fraction).round() as usize;
    let n_bad = (n_viol as f64 * params.hotspot_context_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut role = vec![(false, false); n];
    for (rank, &tile) in order.iter().enumerate() {
        role[tile] = (rank < n_viol, rank < n_bad);
    }

    let cols = (n as f64).sqrt().ceil() as usize;
    let mut layout = empty_design(format!("synth_{}", params.seed), rule);
    let mut planted = Vec::with_capacity(n);
    for (k, &(is_violation, bad)) in role.iter().enumerate() {
        let origin = Point::new(
            (k % cols) as i64 * params.placement_pitch,
            (k / cols) as i64 * params.placement_pitch,
        );
        let failing = is_violation.then(|| {
            let enc = match params.profile {
                EnclosureProfile::Dominant { enc, share } if rng.gen::<f64>() < share => enc,
                _ => rng.gen_range(rule.drc_min..rule.dfm_rec),
            };
            (*Side::ALL.choose(&mut rng).expect("four sides"), enc)
        });
        let pattern = if bad {
            NeighborPattern::Hotspot
        } else {
            *[NeighborPattern::Straight, NeighborPattern::Gap, NeighborPattern::Jog]
                .choose(&mut rng)
                .expect("non-empty")
        };
        planted.push(place_tile(&mut layout, rule, origin, failing, pattern));
    }
    Ok((layout, planted))
}

/// Two violations with the same failing enclosure, one in a hotspot
/// context and one in a straight-wire context.
pub fn paired_fixture(rule: &EnclosureRule, enc: i64) -> Result<(Layout, [PlantedVia; 2]), SynthError> {
    rule.validate().map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    if !(rule.drc_min..rule.dfm_rec).contains(&enc) {
        return Err(SynthError::InvalidParams(format!(
            "enclosure {enc} is not a DFM violation"
        )));
    }
    let mut layout = empty_design("paired".into(), rule);
    let pitch = min_pitch(rule) + rule.dfm_rec;
    let bad = place_tile(
        &mut layout,
        rule,
        Point::new(0, 0),
        Some((Side::Top, enc)),
        NeighborPattern::Hotspot,
    );
    let good = place_tile(
        &mut layout,
        rule,
        Point::new(pitch, 0),
        Some((Side::Top, enc)),
        NeighborPattern::Straight,
    );
    Ok((layout, [bad, good]))
}

/// Convex corners of polygons that do not contain `marker`, strictly
/// inside the context window.
pub fn foreign_convex_corners(layout: &Layout, marker: &Rect, config: &ContextConfig) -> Result<usize, SynthError> {
    let window = context_window(marker, config.halo)?;
    let mut layers: Vec<&str> = config.layers.iter().map(String::as_str).collect();
    layers.sort_unstable();
    layers.dedup();
    let mut count = 0;
    for layer in layers {
        for poly in layout.layer(layer) {
            if !poly.bbox().overlaps(&window) || poly.contains_rect(marker) {
                continue;
            }
            count += (0..poly.len())
                .filter(|&i| poly.is_convex(i) && window.contains_point_strict(poly.vertices()[i]))
                .count();
        }
    }
    Ok(count)
}

/// Stand-in for lithography simulation: a violation is a hotspot when
/// more than `threshold` foreign convex corners crowd its window.
pub fn litho_oracle_with(
    layout: &Layout,
    marker: &Rect,
    config: &ContextConfig,
    threshold: usize,
) -> Result<bool, SynthError> {
    Ok(foreign_convex_corners(layout, marker, config)? > threshold)
}

pub fn litho_oracle(layout: &Layout, marker: &Rect, config: &ContextConfig) -> Result<bool, SynthError> {
    litho_oracle_with(layout, marker, config, HOTSPOT_CORNER_THRESHOLD)
}

/// Proxy labels for every violation in `db`.
pub fn proxy_labels(
    layout: &Layout,
    db: &ViolationDb,
    config: &ContextConfig,
    threshold: usize,
) -> Result<Vec<(usize, bool)>, SynthError> {
    db.violations
        .iter()
        .map(|v| Ok((v.id, litho_oracle_with(layout, &v.marker, config, threshold)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HotspotMarkerSet {
    pub markers: Vec<Rect>,
}

impl HotspotMarkerSet {
    /// Markers of the violations labeled as hotspots.
    pub fn from_labels(db: &ViolationDb, labels: &[(usize, bool)]) -> Self {
        let by_id: BTreeMap<usize, Rect> = db.violations.iter().map(|v| (v.id, v.marker)).collect();
        Self {
            markers: labels
                .iter()
                .filter(|(_, hot)| *hot)
                .filter_map(|(id, _)| by_id.get(id).copied())
                .collect(),
        }
    }

    pub fn parse(document: &str) -> Result<Self, SynthError> {
        let mut markers = Vec::new();
        for (i, raw) in document.lines().enumerate() {
            let line = i + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let err = |message: String| SynthError::MarkerFormat { line, message };
            let fields: Vec<&str> = text.split_whitespace().collect();
            if fields.len() != 5 || fields[0] != "hotspot" {
                return Err(err("expected `hotspot <lo.x> <lo.y> <hi.x> <hi.y>`".into()));
            }
            let c = fields[1..]
                .iter()
                .map(|f| f.parse::<i64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(e.to_string()))?;
            markers.push(Rect::new(c[0], c[1], c[2], c[3]).map_err(|e| err(e.to_string()))?);
        }
        Ok(Self { markers })
    }

    pub fn write(&self) -> String {
        self.markers
            .iter()
            .map(|m| {
                let [a, b, c, d] = m.coords();
                format!("hotspot {a} {b} {c} {d}\n")
            })
            .collect()
    }
}

/// Label 1 when the violation marker touches any hotspot marker,
/// boundaries included.
pub fn overlay_labels(db: &ViolationDb, hotspots: &HotspotMarkerSet) -> Vec<(usize, bool)> {
    db.violations
        .iter()
        .map(|v| (v.id, hotspots.markers.iter().any(|h| h.touches(&v.marker))))
        .collect()
}

pub fn build_training_set(
    layout: &Layout,
    db: &ViolationDb,
    labels: &[(usize, bool)],
    config: &ContextConfig,
) -> Result<Vec<ContextVector>, SynthError> {
    if labels.len() != db.violations.len() {
        return Err(SynthError::LabelMismatch(format!(
            "{} labels for {} violations",
            labels.len(),
            db.violations.len()
        )));
    }
    db.violations
        .iter()
        .zip(labels)
        .map(|(v, &(id, label))| {
            if id != v.id {
                return Err(SynthError::LabelMismatch(format!(
                    "label for id {id} where id {} was expected",
                    v.id
                )));
            }
            let mut ctx = extract_context(layout, &v.marker, config)?;
            ctx.label = Some(label);
            Ok(ctx)
        })
        .collect()
}
