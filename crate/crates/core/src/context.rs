// SPDX-License-Identifier: Apache-2.0

//! Eight-region context metrics around a violation marker, and the digit
//! string encoding used by training-set files.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Layout, Rect};
use crate::rulecheck::EnclosureRule;

pub const REGION_COUNT: usize = 8;

/// Default saturation; keeps every region value a single digit.
pub const DEFAULT_CAP: u32 = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("invalid context config: {0}")]
    InvalidConfig(String),
    #[error("halo must be positive, got {0}")]
    NonPositiveHalo(i64),
    #[error("core {core} is not strictly inside window {window}")]
    CoreNotInside { core: Rect, window: Rect },
    #[error("non-digit character {0:?}")]
    NonDigit(char),
    #[error("expected {expected} digits, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("region value {0} does not fit in one digit")]
    ValueTooLarge(u32),
    #[error("label must be 0 or 1, got {0:?}")]
    BadLabel(String),
    #[error("training-set line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: Box<ContextError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Polygon vertices strictly inside the region.
    #[default]
    VertexCount,
    /// Distinct polygons overlapping the region.
    PolygonCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextConfig {
    pub halo: i64,
    #[serde(default)]
    pub metric: Metric,
    pub layers: Vec<String>,
    #[serde(default = "default_cap")]
    pub cap: u32,
}

fn default_cap() -> u32 {
    DEFAULT_CAP
}

impl ContextConfig {
    /// Vertex-count context on the rule's metal layer with a halo of
    /// five recommended enclosures.
    pub fn for_rule(rule: &EnclosureRule) -> Self {
        Self {
            halo: 5 * rule.dfm_rec,
            metric: Metric::VertexCount,
            layers: vec![rule.metal_layer.clone()],
            cap: DEFAULT_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), ContextError> {
        if self.halo <= 0 {
            return Err(ContextError::NonPositiveHalo(self.halo));
        }
        if self.cap < 1 {
            return Err(ContextError::InvalidConfig("cap must be at least 1".into()));
        }
        if self.layers.iter().any(|l| l.is_empty()) {
            return Err(ContextError::InvalidConfig("empty layer name".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ContextVector {
    /// R_1..R_8 in fixed region order.
    pub r: [u32; REGION_COUNT],
    /// `Some(true)` for a hotspot (bad context), `Some(false)` for clean.
    pub label: Option<bool>,
}

impl ContextVector {
    pub fn new(r: [u32; REGION_COUNT]) -> Self {
        Self { r, label: None }
    }

    pub fn labeled(r: [u32; REGION_COUNT], label: bool) -> Self {
        Self { r, label: Some(label) }
    }

    pub fn sum(&self) -> u32 {
        self.r.iter().sum()
    }

    /// The vector seen after mirroring about a vertical axis.
    pub fn mirrored(&self) -> Self {
        let r = self.r;
        Self {
            r: [r[2], r[1], r[0], r[4], r[3], r[7], r[6], r[5]],
            label: self.label,
        }
    }
}

impl fmt::Display for ContextVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.r)?;
        if let Some(l) = self.label {
            write!(f, " -> {}", u8::from(l))?;
        }
        Ok(())
    }
}

pub fn context_window(marker: &Rect, halo: i64) -> Result<Rect, ContextError> {
    if halo <= 0 {
        return Err(ContextError::NonPositiveHalo(halo));
    }
    Ok(marker.expand(halo).expect("positive halo only grows the rect"))
}

/// The 3x3 grid induced by `core` inside `window`, minus the center cell,
/// ordered top-left, top-center, top-right, middle-left, middle-right,
/// bottom-left, bottom-center, bottom-right.
pub fn partition_regions(window: &Rect, core: &Rect) -> Result<[Rect; REGION_COUNT], ContextError> {
    if !window.strictly_contains_rect(core) {
        return Err(ContextError::CoreNotInside {
            core: *core,
            window: *window,
        });
    }
    let xs = [window.lo().x, core.lo().x, core.hi().x, window.hi().x];
    let ys = [window.lo().y, core.lo().y, core.hi().y, window.hi().y];
    let cell = |col: usize, row: usize| {
        Rect::new(xs[col], ys[row], xs[col + 1], ys[row + 1]).expect("strict containment gives positive cells")
    };
    Ok([
        cell(0, 2),
        cell(1, 2),
        cell(2, 2),
        cell(0, 1),
        cell(2, 1),
        cell(0, 0),
        cell(1, 0),
        cell(2, 0),
    ])
}

pub fn extract_context(
    layout: &Layout,
    marker: &Rect,
    config: &ContextConfig,
) -> Result<ContextVector, ContextError> {
    config.validate()?;
    let window = context_window(marker, config.halo)?;
    let regions = partition_regions(&window, marker)?;
    let layers: BTreeSet<&str> = config.layers.iter().map(String::as_str).collect();

    let mut counts = [0u32; REGION_COUNT];
    for layer in layers {
        for poly in layout.layer(layer) {
            if !poly.bbox().overlaps(&window) {
                continue;
            }
            match config.metric {
                Metric::VertexCount => {
                    for &v in poly.vertices() {
                        if let Some(k) = regions.iter().position(|r| r.contains_point_strict(v)) {
                            counts[k] += 1;
                        }
                    }
                }
                Metric::PolygonCount => {
                    for (k, region) in regions.iter().enumerate() {
                        if poly.overlaps_rect(region) {
                            counts[k] += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(ContextVector::new(counts.map(|c| c.min(config.cap))))
}

/// Eight region digits, plus the label as a ninth digit when requested
/// and present.
pub fn encode_digits(v: &ContextVector, with_label: bool) -> Result<String, ContextError> {
    let mut s = String::with_capacity(REGION_COUNT + 1);
    for &x in &v.r {
        let d = char::from_digit(x, 10).ok_or(ContextError::ValueTooLarge(x))?;
        s.push(d);
    }
    if with_label {
        if let Some(l) = v.label {
            s.push(if l { '1' } else { '0' });
        }
    }
    Ok(s)
}

pub fn decode_digits(text: &str, with_label: bool) -> Result<ContextVector, ContextError> {
    let digits = text
        .chars()
        .map(|c| c.to_digit(10).ok_or(ContextError::NonDigit(c)))
        .collect::<Result<Vec<u32>, _>>()?;
    let expected = REGION_COUNT + usize::from(with_label);
    if digits.len() != expected {
        return Err(ContextError::WrongLength {
            expected,
            got: digits.len(),
        });
    }
    let mut r = [0u32; REGION_COUNT];
    r.copy_from_slice(&digits[..REGION_COUNT]);
    let label = if with_label {
        Some(parse_label(&digits[REGION_COUNT].to_string())?)
    } else {
        None
    };
    Ok(ContextVector { r, label })
}

fn parse_label(s: &str) -> Result<bool, ContextError> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(ContextError::BadLabel(s.to_string())),
    }
}

/// One record per line: `<8 digits> <label>` or `<8 digits>`.
pub fn write_training_set(vectors: &[ContextVector]) -> Result<String, ContextError> {
    let mut out = String::new();
    for v in vectors {
        out.push_str(&encode_digits(v, false)?);
        if let Some(l) = v.label {
            out.push(' ');
            out.push(if l { '1' } else { '0' });
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_training_set(document: &str) -> Result<Vec<ContextVector>, ContextError> {
    let mut out = Vec::new();
    for (i, raw) in document.lines().enumerate() {
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let wrap = |e: ContextError| ContextError::Line {
            line: i + 1,
            source: Box::new(e),
        };
        let mut fields = text.split_whitespace();
        let digits = fields.next().unwrap_or_default();
        let mut v = decode_digits(digits, false).map_err(wrap)?;
        if let Some(label) = fields.next() {
            v.label = Some(parse_label(label).map_err(wrap)?);
        }
        if let Some(extra) = fields.next() {
            return Err(wrap(ContextError::BadLabel(extra.to_string())));
        }
        out.push(v);
    }
    Ok(out)
}
