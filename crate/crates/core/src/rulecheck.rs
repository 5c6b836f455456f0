// SPDX-License-Identifier: Apache-2.0

//! Metal-via enclosure checking and the conventional, context-free DFM score.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Layout, Polygon, Rect};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("layer {0:?} not present in layout")]
    MissingLayer(String),
    #[error("via {index} on layer {layer:?} is not a rectangle")]
    NonRectangularVia { layer: String, index: usize },
    #[error("via {0} is not contained in the metal polygon")]
    NotContained(Rect),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DbFormatError {
    #[error("line {line}: unknown field {field:?}")]
    UnknownField { line: usize, field: String },
    #[error("line {line}: missing field {field:?}")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: bad value for {field:?}: {value:?}")]
    BadValue {
        line: usize,
        field: String,
        value: String,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnclosureRule {
    pub via_layer: String,
    pub metal_layer: String,
    /// Hard minimum enclosure; anything below is a DRC error.
    pub drc_min: i64,
    /// Recommended enclosure; anything below is a DFM violation.
    pub dfm_rec: i64,
}

impl EnclosureRule {
    pub fn new(
        via_layer: impl Into<String>,
        metal_layer: impl Into<String>,
        drc_min: i64,
        dfm_rec: i64,
    ) -> Result<Self, RuleError> {
        let rule = Self {
            via_layer: via_layer.into(),
            metal_layer: metal_layer.into(),
            drc_min,
            dfm_rec,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        if !(0 <= self.drc_min && self.drc_min < self.dfm_rec) {
            return Err(RuleError::InvalidRule(format!(
                "need 0 <= drc_min < dfm_rec, got drc_min={} dfm_rec={}",
                self.drc_min, self.dfm_rec
            )));
        }
        for name in [&self.via_layer, &self.metal_layer] {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(RuleError::InvalidRule(format!("bad layer name {name:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Side::ALL.into_iter().find(|side| side.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideEnclosure {
    pub left: i64,
    pub right: i64,
    pub bottom: i64,
    pub top: i64,
}

impl SideEnclosure {
    pub fn get(&self, side: Side) -> i64 {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }

    /// Smallest enclosure and its side; ties go to the earlier of
    /// left, right, bottom, top.
    pub fn min(&self) -> (Side, i64) {
        let mut best = (Side::Left, self.left);
        for side in [Side::Right, Side::Bottom, Side::Top] {
            if self.get(side) < best.1 {
                best = (side, self.get(side));
            }
        }
        best
    }
}

/// Per-side distance from `via` to the boundary of `metal`, measured
/// outward over the full extent of each via side.
pub fn measure_enclosure(via: &Rect, metal: &Polygon) -> Result<SideEnclosure, RuleError> {
    if !metal.contains_rect(via) {
        return Err(RuleError::NotContained(*via));
    }
    let (lo, hi) = (via.lo(), via.hi());
    let vs = metal.vertices();
    let n = vs.len();
    let mut enc = SideEnclosure {
        left: i64::MAX,
        right: i64::MAX,
        bottom: i64::MAX,
        top: i64::MAX,
    };
    for i in 0..n {
        let (a, b) = (vs[i], vs[(i + 1) % n]);
        if a.x == b.x {
            // only edges overlapping the side's open span can bound it
            let (y0, y1) = (a.y.min(b.y), a.y.max(b.y));
            if y0 < hi.y && lo.y < y1 {
                if a.x <= lo.x {
                    enc.left = enc.left.min(lo.x - a.x);
                }
                if a.x >= hi.x {
                    enc.right = enc.right.min(a.x - hi.x);
                }
            }
        } else {
            let (x0, x1) = (a.x.min(b.x), a.x.max(b.x));
            if x0 < hi.x && lo.x < x1 {
                if a.y <= lo.y {
                    enc.bottom = enc.bottom.min(lo.y - a.y);
                }
                if a.y >= hi.y {
                    enc.top = enc.top.min(a.y - hi.y);
                }
            }
        }
    }
    Ok(enc)
}

/// Linear ramp from `drc_min` (score 0) to `dfm_rec` (score 1), clamped.
pub fn base_dfm_score(measured_enc: f64, rule: &EnclosureRule) -> f64 {
    let span = (rule.dfm_rec - rule.drc_min) as f64;
    ((measured_enc - rule.drc_min as f64) / span).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub id: usize,
    pub marker: Rect,
    pub failing_side: Side,
    pub measured_enc: i64,
    pub dfm_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DrcErrorKind {
    /// No metal polygon overlaps the via.
    NoMetal,
    /// The via overlaps metal but is not contained in any single polygon.
    CrossesMetalBoundary,
    BelowDrcMin { measured_enc: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrcError {
    pub marker: Rect,
    #[serde(flatten)]
    pub kind: DrcErrorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationDb {
    pub design_name: String,
    pub rule: EnclosureRule,
    pub violations: Vec<Violation>,
    #[serde(default)]
    pub drc_errors: Vec<DrcError>,
}

impl ViolationDb {
    pub fn new(design_name: impl Into<String>, rule: EnclosureRule) -> Self {
        Self {
            design_name: design_name.into(),
            rule,
            violations: Vec::new(),
            drc_errors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_enclosure(layout: &Layout, rule: &EnclosureRule) -> Result<ViolationDb, RuleError> {
    check_enclosure_with(layout, rule, |enc, rule| base_dfm_score(enc as f64, rule))
}

/// Enclosure check with a caller-supplied conventional scoring function.
pub fn check_enclosure_with<F>(
    layout: &Layout,
    rule: &EnclosureRule,
    score: F,
) -> Result<ViolationDb, RuleError>
where
    F: Fn(i64, &EnclosureRule) -> f64,
{
    rule.validate()?;
    for layer in [&rule.via_layer, &rule.metal_layer] {
        if !layout.has_layer(layer) {
            return Err(RuleError::MissingLayer(layer.clone()));
        }
    }
    let mut vias = layout
        .layer(&rule.via_layer)
        .iter()
        .enumerate()
        .map(|(index, p)| {
            p.as_rect().ok_or_else(|| RuleError::NonRectangularVia {
                layer: rule.via_layer.clone(),
                index,
            })
        })
        .collect::<Result<Vec<Rect>, _>>()?;
    vias.sort();

    let metals = layout.layer(&rule.metal_layer);
    let mut db = ViolationDb::new(layout.name.clone(), rule.clone());
    for via in vias {
        let best = metals
            .iter()
            .filter(|m| m.bbox().contains_rect(&via))
            .filter_map(|m| measure_enclosure(&via, m).ok())
            .map(|e| e.min())
            .max_by_key(|&(_, enc)| enc);
        match best {
            Some((_, enc)) if enc >= rule.dfm_rec => {}
            Some((_, enc)) if enc < rule.drc_min => db.drc_errors.push(DrcError {
                marker: via,
                kind: DrcErrorKind::BelowDrcMin { measured_enc: enc },
            }),
            Some((side, enc)) => {
                let id = db.violations.len();
                db.violations.push(Violation {
                    id,
                    marker: via,
                    failing_side: side,
                    measured_enc: enc,
                    dfm_score: score(enc, rule),
                });
            }
            None => {
                let kind = if metals.iter().any(|m| m.overlaps_rect(&via)) {
                    DrcErrorKind::CrossesMetalBoundary
                } else {
                    DrcErrorKind::NoMetal
                };
                db.drc_errors.push(DrcError { marker: via, kind });
            }
        }
    }
    Ok(db)
}

fn fmt_rect(r: &Rect) -> String {
    let [a, b, c, d] = r.coords();
    format!("{a},{b},{c},{d}")
}

/// Line-delimited form: a header line, then one `violation` record per
/// line followed by `drc` records.
pub fn save_db(db: &ViolationDb) -> String {
    use std::fmt::Write;
    let r = &db.rule;
    let mut out = format!(
        "dfmdb version=1 design={} via_layer={} metal_layer={} drc_min={} dfm_rec={} violations={} drc_errors={}\n",
        db.design_name,
        r.via_layer,
        r.metal_layer,
        r.drc_min,
        r.dfm_rec,
        db.violations.len(),
        db.drc_errors.len()
    );
    for v in &db.violations {
        writeln!(
            out,
            "violation id={} marker={} side={} enc={} score={}",
            v.id,
            fmt_rect(&v.marker),
            v.failing_side,
            v.measured_enc,
            v.dfm_score
        )
        .unwrap();
    }
    for e in &db.drc_errors {
        let kind = match e.kind {
            DrcErrorKind::NoMetal => "kind=no_metal".to_string(),
            DrcErrorKind::CrossesMetalBoundary => "kind=crosses_metal_boundary".to_string(),
            DrcErrorKind::BelowDrcMin { measured_enc } => {
                format!("kind=below_drc_min enc={measured_enc}")
            }
        };
        writeln!(out, "drc marker={} {kind}", fmt_rect(&e.marker)).unwrap();
    }
    out
}

struct Record<'a> {
    line: usize,
    fields: BTreeMap<&'a str, &'a str>,
}

impl<'a> Record<'a> {
    fn parse(line: usize, text: &'a str, allowed: &[&str]) -> Result<Self, DbFormatError> {
        let mut fields = BTreeMap::new();
        for tok in text.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| DbFormatError::Schema {
                line,
                message: format!("expected key=value, got {tok:?}"),
            })?;
            if !allowed.contains(&k) {
                return Err(DbFormatError::UnknownField {
                    line,
                    field: k.to_string(),
                });
            }
            if fields.insert(k, v).is_some() {
                return Err(DbFormatError::Schema {
                    line,
                    message: format!("duplicate field {k:?}"),
                });
            }
        }
        Ok(Self { line, fields })
    }

    fn raw(&self, field: &'static str) -> Result<&'a str, DbFormatError> {
        self.fields
            .get(field)
            .copied()
            .ok_or(DbFormatError::MissingField {
                line: self.line,
                field,
            })
    }

    fn get<T: FromStr>(&self, field: &'static str) -> Result<T, DbFormatError> {
        let v = self.raw(field)?;
        v.parse().map_err(|_| self.bad(field, v))
    }

    fn bad(&self, field: &str, value: &str) -> DbFormatError {
        DbFormatError::BadValue {
            line: self.line,
            field: field.to_string(),
            value: value.to_string(),
        }
    }

    fn rect(&self, field: &'static str) -> Result<Rect, DbFormatError> {
        let v = self.raw(field)?;
        let c: Vec<i64> = v
            .split(',')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| self.bad(field, v))?;
        if c.len() != 4 {
            return Err(self.bad(field, v));
        }
        Rect::new(c[0], c[1], c[2], c[3]).map_err(|_| self.bad(field, v))
    }
}

pub fn load_db(document: &str) -> Result<ViolationDb, DbFormatError> {
    let mut lines = document
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, htext) = lines.next().ok_or(DbFormatError::Schema {
        line: 0,
        message: "empty document".into(),
    })?;
    let rest = htext.strip_prefix("dfmdb ").ok_or(DbFormatError::Schema {
        line: hline,
        message: "expected `dfmdb` header".into(),
    })?;
    let header = Record::parse(
        hline,
        rest,
        &[
            "version",
            "design",
            "via_layer",
            "metal_layer",
            "drc_min",
            "dfm_rec",
            "violations",
            "drc_errors",
        ],
    )?;
    let version: u32 = header.get("version")?;
    if version != 1 {
        return Err(header.bad("version", &version.to_string()));
    }
    let rule = EnclosureRule {
        via_layer: header.get("via_layer")?,
        metal_layer: header.get("metal_layer")?,
        drc_min: header.get("drc_min")?,
        dfm_rec: header.get("dfm_rec")?,
    };
    rule.validate().map_err(|e| DbFormatError::Schema {
        line: hline,
        message: e.to_string(),
    })?;
    let mut db = ViolationDb::new(header.get::<String>("design")?, rule);
    let n_viol: usize = header.get("violations")?;
    let n_drc: usize = header.get("drc_errors")?;

    for (line, text) in lines {
        let (kind, rest) = text.split_once(' ').unwrap_or((text, ""));
        match kind {
            "violation" => {
                let rec = Record::parse(line, rest, &["id", "marker", "side", "enc", "score"])?;
                let id: usize = rec.get("id")?;
                if id != db.violations.len() {
                    return Err(DbFormatError::Schema {
                        line,
                        message: format!("ids must be dense from 0, got {id}"),
                    });
                }
                let measured_enc: i64 = rec.get("enc")?;
                let dfm_score: f64 = rec.get("score")?;
                if !(db.rule.drc_min..db.rule.dfm_rec).contains(&measured_enc) {
                    return Err(rec.bad("enc", &measured_enc.to_string()));
                }
                if !(0.0..=1.0).contains(&dfm_score) {
                    return Err(rec.bad("score", &dfm_score.to_string()));
                }
                db.violations.push(Violation {
                    id,
                    marker: rec.rect("marker")?,
                    failing_side: rec.get("side")?,
                    measured_enc,
                    dfm_score,
                });
            }
            "drc" => {
                let rec = Record::parse(line, rest, &["marker", "kind", "enc"])?;
                let kind = match rec.raw("kind")? {
                    "no_metal" => DrcErrorKind::NoMetal,
                    "crosses_metal_boundary" => DrcErrorKind::CrossesMetalBoundary,
                    "below_drc_min" => DrcErrorKind::BelowDrcMin {
                        measured_enc: rec.get("enc")?,
                    },
                    other => return Err(rec.bad("kind", other)),
                };
                db.drc_errors.push(DrcError {
                    marker: rec.rect("marker")?,
                    kind,
                });
            }
            other => {
                return Err(DbFormatError::Schema {
                    line,
                    message: format!("unknown record type {other:?}"),
                })
            }
        }
    }
    if db.violations.len() != n_viol || db.drc_errors.len() != n_drc {
        return Err(DbFormatError::Schema {
            line: hline,
            message: format!(
                "header announces {n_viol} violations / {n_drc} drc errors, found {} / {}",
                db.violations.len(),
                db.drc_errors.len()
            ),
        });
    }
    Ok(db)
}

/// Structured single-document form of the database.
pub fn db_to_json(db: &ViolationDb) -> String {
    serde_json::to_string_pretty(db).expect("database serializes")
}

pub fn db_from_json(document: &str) -> Result<ViolationDb, DbFormatError> {
    serde_json::from_str(document).map_err(|e| DbFormatError::Json(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parse_layout;

    fn rect(a: i64, b: i64, c: i64, d: i64) -> Rect {
        Rect::new(a, b, c, d).unwrap()
    }

    fn rule() -> EnclosureRule {
        EnclosureRule::new("VIA", "METAL", 5, 10).unwrap()
    }

    #[test]
    fn enclosure_examples() {
        let via = rect(20, 20, 60, 60);
        let e = measure_enclosure(&via, &rect(0, 0, 80, 65).to_polygon()).unwrap();
        assert_eq!(
            e,
            SideEnclosure {
                left: 20,
                right: 20,
                bottom: 20,
                top: 5
            }
        );
        assert_eq!(e.min(), (Side::Top, 5));
        let same = measure_enclosure(&via, &via.to_polygon()).unwrap();
        assert_eq!(same.min(), (Side::Left, 0));
        assert_eq!(same.right + same.top + same.bottom, 0);
        let uniform = measure_enclosure(&via, &via.expand(7).unwrap().to_polygon()).unwrap();
        assert_eq!([uniform.left, uniform.right, uniform.bottom, uniform.top], [7; 4]);
        assert!(matches!(
            measure_enclosure(&via, &rect(30, 0, 80, 80).to_polygon()),
            Err(RuleError::NotContained(_))
        ));
    }

    #[test]
    fn enclosure_ignores_corner_only_contact() {
        // metal narrows above the via's top edge: the left side still sees 20
        let metal = crate::geometry::Polygon::new(vec![
            crate::geometry::Point::new(0, 0),
            crate::geometry::Point::new(80, 0),
            crate::geometry::Point::new(80, 100),
            crate::geometry::Point::new(30, 100),
            crate::geometry::Point::new(30, 60),
            crate::geometry::Point::new(0, 60),
        ])
        .unwrap();
        let via = rect(40, 20, 60, 60);
        let e = measure_enclosure(&via, &metal).unwrap();
        assert_eq!(e.left, 40);
        assert_eq!(e.top, 40);
        let via = rect(20, 20, 50, 50);
        let e = measure_enclosure(&via, &metal).unwrap();
        assert_eq!((e.left, e.top), (20, 10));
    }

    #[test]
    fn score_ramp() {
        let r = rule();
        assert_eq!(base_dfm_score(10.0, &r), 1.0);
        assert_eq!(base_dfm_score(5.0, &r), 0.0);
        assert_eq!(base_dfm_score(7.5, &r), 0.5);
        assert_eq!(base_dfm_score(2.0, &r), 0.0);
        assert_eq!(base_dfm_score(50.0, &r), 1.0);
    }

    #[test]
    fn rule_validation() {
        assert!(EnclosureRule::new("V", "M", 10, 10).is_err());
        assert!(EnclosureRule::new("V", "M", -1, 10).is_err());
        assert!(EnclosureRule::new("", "M", 0, 10).is_err());
    }

    #[test]
    fn check_classifies_vias() {
        let doc = "layout t
layer METAL
rect 0 0 100 100
rect 200 0 300 100
rect 400 0 500 100
rect 600 0 700 100
layer VIA
rect 40 40 60 60
rect 193 40 207 60
rect 903 40 907 60
rect 407 40 460 60
rect 603 40 650 60
";
        let layout = parse_layout(doc).unwrap();
        let db = check_enclosure(&layout, &rule()).unwrap();
        assert_eq!(db.violations.len(), 1);
        let v = &db.violations[0];
        assert_eq!((v.id, v.failing_side, v.measured_enc), (0, Side::Left, 7));
        assert!((v.dfm_score - 0.4).abs() < 1e-12);
        let kinds: Vec<_> = db.drc_errors.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![
                DrcErrorKind::CrossesMetalBoundary,
                DrcErrorKind::BelowDrcMin { measured_enc: 3 },
                DrcErrorKind::NoMetal,
            ]
        );
    }

    #[test]
    fn check_requires_layers() {
        let layout = parse_layout("layout t\nlayer METAL\n").unwrap();
        assert_eq!(
            check_enclosure(&layout, &rule()),
            Err(RuleError::MissingLayer("VIA".into()))
        );
    }

    #[test]
    fn clean_design_is_empty() {
        let layout =
            parse_layout("layout t\nlayer METAL\nrect 0 0 100 100\nlayer VIA\nrect 40 40 60 60\n")
                .unwrap();
        let db = check_enclosure(&layout, &rule()).unwrap();
        assert!(db.is_empty() && db.drc_errors.is_empty());
    }

    #[test]
    fn db_text_format() {
        let empty = ViolationDb::new("d", rule());
        let doc = save_db(&empty);
        assert_eq!(doc.lines().count(), 1);
        assert_eq!(load_db(&doc).unwrap(), empty);

        let bad = doc.replace("drc_errors=0", "drc_errors=0 colour=red");
        match load_db(&bad) {
            Err(DbFormatError::UnknownField { field, .. }) => assert_eq!(field, "colour"),
            other => panic!("expected unknown field error, got {other:?}"),
        }
        let bad = format!("{doc}violation id=0 marker=0,0,1,1 side=left enc=6 score=0.2 flavor=x\n");
        assert!(load_db(&bad).unwrap_err().to_string().contains("flavor"));
    }

    #[test]
    fn db_json_round_trip() {
        let mut db = ViolationDb::new("d", rule());
        db.violations.push(Violation {
            id: 0,
            marker: rect(0, 0, 4, 4),
            failing_side: Side::Top,
            measured_enc: 6,
            dfm_score: 0.2,
        });
        db.drc_errors.push(DrcError {
            marker: rect(9, 9, 12, 12),
            kind: DrcErrorKind::BelowDrcMin { measured_enc: 1 },
        });
        assert_eq!(db_from_json(&db_to_json(&db)).unwrap(), db);
        assert_eq!(load_db(&save_db(&db)).unwrap(), db);
    }
}
