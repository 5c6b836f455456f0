// SPDX-License-Identifier: Apache-2.0

//! Random shape generators, independent oracles and the invariant
//! properties shared by the property tests and the acceptance harness.

#![allow(dead_code)]

use std::collections::BTreeSet;

use ctxdfm::ann::{self, NetworkWeights, HIDDEN, INPUTS, SYNAPSES};
use ctxdfm::context::{self, ContextConfig, ContextVector, Metric, REGION_COUNT};
use ctxdfm::geometry::{self, Layout, Point, Polygon, Rect};
use ctxdfm::rulecheck::{self, EnclosureRule, Side, Violation, ViolationDb};
use ctxdfm::scoring::{self, CombineMode, ScoreKind, ScoredViolation};
use ctxdfm::synth::HotspotMarkerSet;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Columns `[xs[i], xs[i+1]) x [bot[i], top[i])` whose union is a simple
/// rectilinear polygon; adjacent columns overlap vertically.
pub struct Columns {
    pub xs: Vec<i64>,
    pub bot: Vec<i64>,
    pub top: Vec<i64>,
}

impl Columns {
    pub fn random(rng: &mut impl Rng, x0: i64, y0: i64) -> Self {
        let k = rng.gen_range(1..=5);
        let mut xs = vec![x0];
        for _ in 0..k {
            let last = *xs.last().unwrap();
            xs.push(last + rng.gen_range(1..=20));
        }
        let mut bot = Vec::with_capacity(k);
        let mut top = Vec::with_capacity(k);
        for i in 0..k {
            let mut b = y0 + rng.gen_range(-20..=10);
            let mut t = b + rng.gen_range(1..=40);
            if i > 0 {
                // keep a positive vertical overlap with the previous column
                b = b.min(top[i - 1] - 1);
                t = t.max(bot[i - 1] + 1);
            }
            bot.push(b);
            top.push(t);
        }
        // merge equal neighbors so the outline has no collinear vertices
        let mut c = Columns {
            xs: vec![xs[0]],
            bot: vec![],
            top: vec![],
        };
        for i in 0..k {
            if i > 0 && bot[i] == bot[i - 1] && top[i] == top[i - 1] {
                *c.xs.last_mut().unwrap() = xs[i + 1];
            } else {
                c.xs.push(xs[i + 1]);
                c.bot.push(bot[i]);
                c.top.push(top[i]);
            }
        }
        c
    }

    pub fn outline(&self) -> Vec<Point> {
        let k = self.bot.len();
        let (xs, bot, top) = (&self.xs, &self.bot, &self.top);
        let mut v = vec![Point::new(xs[0], bot[0])];
        for i in 0..k - 1 {
            if bot[i + 1] != bot[i] {
                v.push(Point::new(xs[i + 1], bot[i]));
                v.push(Point::new(xs[i + 1], bot[i + 1]));
            }
        }
        v.push(Point::new(xs[k], bot[k - 1]));
        v.push(Point::new(xs[k], top[k - 1]));
        for i in (1..k).rev() {
            if top[i - 1] != top[i] {
                v.push(Point::new(xs[i], top[i]));
                v.push(Point::new(xs[i], top[i - 1]));
            }
        }
        v.push(Point::new(xs[0], top[0]));
        v
    }
}

fn transpose(p: Point) -> Point {
    Point::new(p.y, p.x)
}

pub fn random_polygon(rng: &mut impl Rng, x0: i64, y0: i64) -> Polygon {
    let cols = Columns::random(rng, x0, y0);
    let mut v = cols.outline();
    if rng.gen_bool(0.5) {
        v = v.into_iter().map(transpose).collect();
    }
    Polygon::new(v).expect("column outline is a valid polygon")
}

/// A metal polygon and a via rectangle contained in it.
pub fn random_via_in_metal(rng: &mut impl Rng) -> (Rect, Polygon) {
    let (x0, y0) = (rng.gen_range(-30..=30), rng.gen_range(-30..=30));
    let cols = Columns::random(rng, x0, y0);
    let k = cols.bot.len();
    let i = rng.gen_range(0..k);
    let mut j = i;
    let (mut lo, mut hi) = (cols.bot[i], cols.top[i]);
    while j + 1 < k && rng.gen_bool(0.5) {
        let (l, h) = (lo.max(cols.bot[j + 1]), hi.min(cols.top[j + 1]));
        if l >= h {
            break;
        }
        j += 1;
        (lo, hi) = (l, h);
    }
    let (xa, xb) = (cols.xs[i], cols.xs[j + 1]);
    let lx = rng.gen_range(xa..xb);
    let hx = rng.gen_range(lx + 1..=xb);
    let ly = rng.gen_range(lo..hi);
    let hy = rng.gen_range(ly + 1..=hi);
    let mut via = Rect::new(lx, ly, hx, hy).unwrap();
    let mut v = cols.outline();
    if rng.gen_bool(0.5) {
        v = v.into_iter().map(transpose).collect();
        via = Rect::new(ly, lx, hy, hx).unwrap();
    }
    (via, Polygon::new(v).expect("column outline is a valid polygon"))
}

pub fn random_layout(rng: &mut impl Rng) -> Layout {
    let mut layout = Layout::new(format!("design_{}", rng.gen_range(0..1000)));
    let names = ["METAL", "VIA", "M2", "poly_1"];
    let count = rng.gen_range(0..=3);
    let chosen: Vec<&str> = names.choose_multiple(rng, count).copied().collect();
    for name in chosen {
        layout.add_layer(name).unwrap();
        for _ in 0..rng.gen_range(0..6) {
            let (x0, y0) = (rng.gen_range(-120..=120), rng.gen_range(-120..=120));
            let p = random_polygon(rng, x0, y0);
            layout.add_polygon(name, p).unwrap();
        }
    }
    layout
}

pub fn random_rect(rng: &mut impl Rng, span: i64, max_side: i64) -> Rect {
    let lx = rng.gen_range(-span..=span);
    let ly = rng.gen_range(-span..=span);
    Rect::new(
        lx,
        ly,
        lx + rng.gen_range(1..=max_side),
        ly + rng.gen_range(1..=max_side),
    )
    .unwrap()
}

/// Is the center of unit cell `(x, y)` inside the polygon? Ray casting on
/// doubled coordinates, so centers never sit on an edge.
pub fn cell_inside(vertices: &[Point], x: i64, y: i64) -> bool {
    let (px, py) = (2 * x + 1, 2 * y + 1);
    let n = vertices.len();
    let mut crossings = 0;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        if a.x != b.x {
            continue;
        }
        let (y0, y1) = (2 * a.y.min(b.y), 2 * a.y.max(b.y));
        if y0 < py && py < y1 && 2 * a.x > px {
            crossings += 1;
        }
    }
    crossings % 2 == 1
}

/// Enclosure per side (left, right, bottom, top) by walking outward one
/// nanometer cell at a time along every row or column of the via.
pub fn grid_enclosure(via: &Rect, metal: &Polygon) -> [i64; 4] {
    let v = metal.vertices();
    let [lx, ly, hx, hy] = via.coords();
    let walk = |start: i64, step: i64, cell: &dyn Fn(i64) -> bool| {
        let mut k = 0;
        while cell(start + step * k) {
            k += 1;
        }
        k
    };
    let rows = ly..hy;
    let cols = lx..hx;
    let left = rows.clone().map(|y| walk(lx - 1, -1, &|x| cell_inside(v, x, y))).min().unwrap();
    let right = rows.map(|y| walk(hx, 1, &|x| cell_inside(v, x, y))).min().unwrap();
    let bottom = cols.clone().map(|x| walk(ly - 1, -1, &|y| cell_inside(v, x, y))).min().unwrap();
    let top = cols.map(|x| walk(hy, 1, &|y| cell_inside(v, x, y))).min().unwrap();
    [left, right, bottom, top]
}

/// Smallest enclosure, ties going to the first side in left, right,
/// bottom, top order.
pub fn grid_min(enc: [i64; 4]) -> (Side, i64) {
    let sides = [Side::Left, Side::Right, Side::Bottom, Side::Top];
    let mut best = (sides[0], enc[0]);
    for k in 1..4 {
        if enc[k] < best.1 {
            best = (sides[k], enc[k]);
        }
    }
    best
}

/// Cell-count area of `poly` inside `window` by scanning every unit cell.
pub fn scanline_area(poly: &Polygon, window: &Rect) -> i128 {
    let [lx, ly, hx, hy] = window.coords();
    let mut area = 0;
    for y in ly..hy {
        for x in lx..hx {
            if cell_inside(poly.vertices(), x, y) {
                area += 1;
            }
        }
    }
    area
}

pub fn halved_sq_loss(w: &NetworkWeights, input: &[f64; INPUTS], target: f64) -> f64 {
    let out = ann::forward(w, input).t_out;
    0.5 * (out - target) * (out - target)
}

/// Largest relative gap between backprop and central differences over all
/// 36 weights; gaps under `floor` in absolute terms count as zero.
pub fn gradient_gap(w: &NetworkWeights, input: &[f64; INPUTS], target: f64, h: f64, floor: f64) -> f64 {
    let step = ann::backprop(w, &ann::forward(w, input), target);
    let mut analytic = [0.0; SYNAPSES];
    for i in 0..INPUTS {
        for j in 0..HIDDEN {
            analytic[i * HIDDEN + j] = step.grad_w_ih[i][j];
        }
    }
    for j in 0..HIDDEN {
        analytic[INPUTS * HIDDEN + j] = step.grad_w_ho[j];
    }
    let base = w.flat();
    let mut worst: f64 = 0.0;
    for k in 0..SYNAPSES {
        let mut plus = base;
        let mut minus = base;
        plus[k] += h;
        minus[k] -= h;
        let lp = halved_sq_loss(&NetworkWeights::from_flat(&plus, w.scaling), input, target);
        let lm = halved_sq_loss(&NetworkWeights::from_flat(&minus, w.scaling), input, target);
        // backprop reports the descent direction
        let numeric = -(lp - lm) / (2.0 * h);
        let diff = (analytic[k] - numeric).abs();
        if diff <= floor {
            continue;
        }
        let scale = analytic[k].abs().max(numeric.abs());
        worst = worst.max(diff / scale);
    }
    worst
}

pub fn random_weights(rng: &mut impl Rng, r: f64) -> NetworkWeights {
    let mut flat = [0.0; SYNAPSES];
    for x in &mut flat {
        *x = rng.gen_range(-r..r);
    }
    NetworkWeights::from_flat(&flat, ann::InputScaling::Normalized { cap: 9 })
}

pub fn random_db(rng: &mut impl Rng) -> ViolationDb {
    let rule = EnclosureRule::new("VIA", "METAL", rng.gen_range(0..5), rng.gen_range(5..20)).unwrap();
    let mut db = ViolationDb::new(format!("d{}", rng.gen_range(0..100)), rule.clone());
    for id in 0..rng.gen_range(0..8) {
        let enc = rng.gen_range(rule.drc_min..rule.dfm_rec);
        db.violations.push(Violation {
            id,
            marker: random_rect(rng, 1000, 30),
            failing_side: *[Side::Left, Side::Right, Side::Bottom, Side::Top].choose(rng).unwrap(),
            measured_enc: enc,
            dfm_score: rulecheck::base_dfm_score(enc as f64, &rule),
        });
    }
    for _ in 0..rng.gen_range(0..3) {
        let kind = match rng.gen_range(0..3) {
            0 => rulecheck::DrcErrorKind::NoMetal,
            1 => rulecheck::DrcErrorKind::CrossesMetalBoundary,
            _ => rulecheck::DrcErrorKind::BelowDrcMin {
                measured_enc: rng.gen_range(0..=rule.drc_min),
            },
        };
        db.drc_errors.push(rulecheck::DrcError {
            marker: random_rect(rng, 1000, 30),
            kind,
        });
    }
    db
}

pub fn random_vector(rng: &mut impl Rng, labeled: bool) -> ContextVector {
    let mut r = [0u32; REGION_COUNT];
    for x in &mut r {
        *x = rng.gen_range(0..=9);
    }
    if labeled {
        ContextVector::labeled(r, rng.gen_bool(0.5))
    } else {
        ContextVector::new(r)
    }
}

fn metal_context(rng: &mut impl Rng) -> ContextConfig {
    ContextConfig {
        halo: rng.gen_range(5..=60),
        metric: if rng.gen_bool(0.5) {
            Metric::VertexCount
        } else {
            Metric::PolygonCount
        },
        layers: vec!["METAL".into()],
        cap: rng.gen_range(1..=9),
    }
}

fn metal_scene(rng: &mut impl Rng) -> (Layout, Rect) {
    let mut layout = Layout::new("scene");
    layout.add_layer("METAL").unwrap();
    for _ in 0..rng.gen_range(0..10) {
        let (x0, y0) = (rng.gen_range(-80..=60), rng.gen_range(-80..=60));
        let p = random_polygon(rng, x0, y0);
        layout.add_polygon("METAL", p).unwrap();
    }
    (layout, random_rect(rng, 30, 20))
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

pub type PropResult = Result<(), TestCaseError>;

pub fn prop_complement_identity(weightage: f64) -> PropResult {
    let cs = scoring::context_score(weightage);
    check(cs == 1.0 - weightage, || format!("{weightage} -> {cs}"))
}

pub fn prop_scored_complement(seed: u64) -> PropResult {
    let mut rng = rng(seed);
    let db = random_db(&mut rng);
    let w = random_weights(&mut rng, 3.0);
    let vectors: Vec<_> = db.violations.iter().map(|_| random_vector(&mut rng, false)).collect();
    let scored = scoring::score_all(&db, &vectors, &w, CombineMode::Geomean).unwrap();
    for s in &scored {
        check(s.context_score == 1.0 - s.context_weightage, || format!("{s:?}"))?;
    }
    Ok(())
}

pub const MODES: [CombineMode; 3] = [CombineMode::Geomean, CombineMode::Min, CombineMode::Product];

pub fn prop_combine_monotone(a: f64, b: f64, c: f64) -> PropResult {
    let (lo, hi) = (a.min(b), a.max(b));
    for mode in MODES {
        let f = |x, y| scoring::combine(x, y, mode).unwrap();
        check(f(lo, c) <= f(hi, c), || format!("{mode:?} not monotone in dfm at {lo},{hi},{c}"))?;
        check(f(c, lo) <= f(c, hi), || format!("{mode:?} not monotone in context at {c},{lo},{hi}"))?;
        let v = f(a, c);
        check((0.0..=1.0).contains(&v), || format!("{mode:?} out of range: {v}"))?;
    }
    Ok(())
}

pub fn prop_combine_idempotent(s: f64) -> PropResult {
    for mode in [CombineMode::Geomean, CombineMode::Min] {
        let v = scoring::combine(s, s, mode).unwrap();
        check(v == s, || format!("{mode:?}({s}, {s}) = {v}"))?;
    }
    Ok(())
}

pub fn prop_translation_invariance(seed: u64, dx: i64, dy: i64) -> PropResult {
    let mut rng = rng(seed);
    let (layout, marker) = metal_scene(&mut rng);
    let cfg = metal_context(&mut rng);
    let a = context::extract_context(&layout, &marker, &cfg).unwrap();
    let b = context::extract_context(&layout.translate(dx, dy), &marker.translate(dx, dy), &cfg).unwrap();
    check(a == b, || format!("{a} vs {b} after ({dx}, {dy})"))
}

pub fn prop_mirror_permutation(seed: u64) -> PropResult {
    let mut rng = rng(seed);
    let (layout, marker) = metal_scene(&mut rng);
    let cfg = metal_context(&mut rng);
    let a = context::extract_context(&layout, &marker, &cfg).unwrap();
    let b = context::extract_context(&layout.mirror_x(), &marker.mirror_x(), &cfg).unwrap();
    let r = a.r;
    let expected = [r[2], r[1], r[0], r[4], r[3], r[7], r[6], r[5]];
    check(b.r == expected, || format!("{a} mirrored to {b}"))?;
    check(a.mirrored() == b, || "mirrored() disagrees".into())
}

pub fn prop_partition_tiling(seed: u64) -> PropResult {
    let mut rng = rng(seed);
    let window = random_rect(&mut rng, 50, 40);
    let [wx0, wy0, wx1, wy1] = window.coords();
    if wx1 - wx0 < 3 || wy1 - wy0 < 3 {
        return Ok(());
    }
    let cx0 = rng.gen_range(wx0 + 1..wx1 - 1);
    let cx1 = rng.gen_range(cx0 + 1..wx1);
    let cy0 = rng.gen_range(wy0 + 1..wy1 - 1);
    let cy1 = rng.gen_range(cy0 + 1..wy1);
    let core = Rect::new(cx0, cy0, cx1, cy1).unwrap();
    let regions = context::partition_regions(&window, &core).unwrap();
    let mut pieces: Vec<Rect> = regions.to_vec();
    pieces.push(core);
    let total: i128 = pieces.iter().map(Rect::area).sum();
    check(total == window.area(), || format!("areas sum to {total}, window {}", window.area()))?;
    for (i, a) in pieces.iter().enumerate() {
        check(window.contains_rect(a), || format!("{a:?} leaves the window"))?;
        for b in &pieces[i + 1..] {
            check(!a.overlaps(b), || format!("{a:?} overlaps {b:?}"))?;
        }
    }
    // fixed order: rows top to bottom, columns left to right
    let centers: Vec<(i64, i64)> = regions
        .iter()
        .map(|r| (r.lo().x + r.hi().x, r.lo().y + r.hi().y))
        .collect();
    let (cx, cy) = (cx0 + cx1, cy0 + cy1);
    let expect = [
        (-1, 1),
        (0, 1),
        (1, 1),
        (-1, 0),
        (1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
    ];
    for (k, &(ex, ey)) in expect.iter().enumerate() {
        let (x, y) = centers[k];
        check(
            (x - cx).signum() == ex && (y - cy).signum() == ey,
            || format!("region {k} out of place"),
        )?;
    }
    Ok(())
}

pub fn prop_histogram_conservation(seed: u64) -> PropResult {
    let mut rng = rng(seed);
    let n = rng.gen_range(0..200);
    let scored: Vec<ScoredViolation> = (0..n)
        .map(|id| {
            let snap = |x: f64, rng: &mut ChaCha8Rng| if rng.gen_bool(0.2) { (x * 10.0).round() / 10.0 } else { x };
            let dfm = snap(rng.gen_range(0.0..=1.0), &mut rng);
            let w = rng.gen_range(0.0..=1.0);
            let cs = scoring::context_score(w);
            ScoredViolation {
                violation: Violation {
                    id,
                    marker: Rect::new(0, 0, 1, 1).unwrap(),
                    failing_side: Side::Top,
                    measured_enc: 0,
                    dfm_score: dfm,
                },
                context_weightage: w,
                context_score: cs,
                optimized_score: scoring::combine(dfm, cs, CombineMode::Geomean).unwrap(),
            }
        })
        .collect();
    let hot: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.05)).collect();
    for kind in [ScoreKind::Conventional, ScoreKind::Optimized] {
        let report = scoring::bin_scores(&scored, kind, &hot).unwrap();
        check(report.counts.iter().sum::<usize>() == n, || format!("{:?}", report.counts))?;
        let in_bins: usize = report.hotspot_bins.iter().map(|&b| report.counts[b]).sum();
        check(in_bins >= hot.len(), || "hotspot bins hold fewer than the hotspots".into())?;
    }
    Ok(())
}

pub fn prop_digits_round_trip(seed: u64) -> PropResult {
    let mut rng = rng(seed);
    let labeled = random_vector(&mut rng, true);
    let text = context::encode_digits(&labeled, true).unwrap();
    check(context::decode_digits(&text, true).unwrap() == labeled, || text.clone())?;
    let plain = ContextVector::new(labeled.r);
    let text = context::encode_digits(&plain, false).unwrap();
    check(context::decode_digits(&text, false).unwrap() == plain, || text.clone())?;
    let set: Vec<ContextVector> = (0..rng.gen_range(0..20)).map(|_| random_vector(&mut rng, true)).collect();
    let doc = context::write_training_set(&set).unwrap();
    check(context::parse_training_set(&doc).unwrap() == set, || doc.clone())
}

pub fn prop_layout_round_trip(seed: u64) -> PropResult {
    let layout = random_layout(&mut rng(seed));
    let doc = geometry::write_layout(&layout);
    let back = geometry::parse_layout(&doc).map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(back == layout, || doc.clone())
}

pub fn prop_db_round_trip(seed: u64) -> PropResult {
    let db = random_db(&mut rng(seed));
    let text = rulecheck::save_db(&db);
    let back = rulecheck::load_db(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(back == db, || text.clone())?;
    for (a, b) in back.violations.iter().zip(&db.violations) {
        check(a.dfm_score.to_bits() == b.dfm_score.to_bits(), || "score bits differ".into())?;
    }
    let json = rulecheck::db_to_json(&db);
    let back = rulecheck::db_from_json(&json).map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(back == db, || json.clone())
}

pub fn prop_weights_round_trip(seed: u64) -> PropResult {
    let mut rng = rng(seed);
    let mut w = random_weights(&mut rng, 50.0);
    if rng.gen_bool(0.3) {
        w.scaling = ann::InputScaling::Raw;
    }
    let back = ann::load_weights(&ann::save_weights(&w)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(back.flat().map(f64::to_bits) == w.flat().map(f64::to_bits), || "weights differ".into())?;
    check(back.scaling == w.scaling, || "scaling differs".into())
}

pub fn prop_markers_round_trip(seed: u64) -> PropResult {
    let mut rng = rng(seed);
    let set = HotspotMarkerSet {
        markers: (0..rng.gen_range(0..10)).map(|_| random_rect(&mut rng, 5000, 50)).collect(),
    };
    let back = HotspotMarkerSet::parse(&set.write()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(back == set, || set.write())
}

pub fn unit_interval() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
}
