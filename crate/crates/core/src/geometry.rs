// SPDX-License-Identifier: Apache-2.0

//! Layout data model: integer-nanometer points, rectangles, rectilinear
//! polygons, the textual layout format, and window queries.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("degenerate rectangle ({lo_x},{lo_y})-({hi_x},{hi_y})")]
    DegenerateRect {
        lo_x: i64,
        lo_y: i64,
        hi_x: i64,
        hi_y: i64,
    },
    #[error("polygon needs at least 4 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("repeated consecutive vertex at index {0}")]
    RepeatedVertex(usize),
    #[error("edge {0} breaks the horizontal/vertical alternation")]
    NotRectilinear(usize),
    #[error("edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("invalid layer name {0:?}")]
    InvalidLayerName(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: shape {index}: {source}")]
    Shape {
        line: usize,
        index: usize,
        source: GeometryError,
    },
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn translate(self, dx: i64, dy: i64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Axis-aligned rectangle with strictly positive width and height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct Rect {
    lo: Point,
    hi: Point,
}

impl TryFrom<[i64; 4]> for Rect {
    type Error = GeometryError;

    fn try_from(c: [i64; 4]) -> Result<Self, Self::Error> {
        Rect::new(c[0], c[1], c[2], c[3])
    }
}

impl From<Rect> for [i64; 4] {
    fn from(r: Rect) -> Self {
        r.coords()
    }
}

impl Rect {
    pub fn new(lo_x: i64, lo_y: i64, hi_x: i64, hi_y: i64) -> Result<Self, GeometryError> {
        if lo_x >= hi_x || lo_y >= hi_y {
            return Err(GeometryError::DegenerateRect {
                lo_x,
                lo_y,
                hi_x,
                hi_y,
            });
        }
        Ok(Self {
            lo: Point::new(lo_x, lo_y),
            hi: Point::new(hi_x, hi_y),
        })
    }

    pub fn from_corners(lo: Point, hi: Point) -> Result<Self, GeometryError> {
        Self::new(lo.x, lo.y, hi.x, hi.y)
    }

    pub fn lo(&self) -> Point {
        self.lo
    }

    pub fn hi(&self) -> Point {
        self.hi
    }

    pub fn coords(&self) -> [i64; 4] {
        [self.lo.x, self.lo.y, self.hi.x, self.hi.y]
    }

    pub fn width(&self) -> i64 {
        self.hi.x - self.lo.x
    }

    pub fn height(&self) -> i64 {
        self.hi.y - self.lo.y
    }

    pub fn area(&self) -> i128 {
        self.width() as i128 * self.height() as i128
    }

    /// Grows the rectangle by `d` on every side. Fails if a negative `d`
    /// collapses it.
    pub fn expand(&self, d: i64) -> Result<Self, GeometryError> {
        Self::new(self.lo.x - d, self.lo.y - d, self.hi.x + d, self.hi.y + d)
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Self {
        Self {
            lo: self.lo.translate(dx, dy),
            hi: self.hi.translate(dx, dy),
        }
    }

    /// Mirror about the vertical axis x = 0.
    pub fn mirror_x(&self) -> Self {
        Self {
            lo: Point::new(-self.hi.x, self.lo.y),
            hi: Point::new(-self.lo.x, self.hi.y),
        }
    }

    /// Positive-area intersection; shared edges or corners yield `None`.
    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        Rect::new(
            self.lo.x.max(other.lo.x),
            self.lo.y.max(other.lo.y),
            self.hi.x.min(other.hi.x),
            self.hi.y.min(other.hi.y),
        )
        .ok()
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.lo.x < other.hi.x
            && other.lo.x < self.hi.x
            && self.lo.y < other.hi.y
            && other.lo.y < self.hi.y
    }

    /// Closed-set intersection: touching edges or corners count.
    pub fn touches(&self, other: &Rect) -> bool {
        self.lo.x <= other.hi.x
            && other.lo.x <= self.hi.x
            && self.lo.y <= other.hi.y
            && other.lo.y <= self.hi.y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.lo.x <= other.lo.x
            && self.lo.y <= other.lo.y
            && other.hi.x <= self.hi.x
            && other.hi.y <= self.hi.y
    }

    /// `other` lies inside with a positive gap on every side.
    pub fn strictly_contains_rect(&self, other: &Rect) -> bool {
        self.lo.x < other.lo.x
            && self.lo.y < other.lo.y
            && other.hi.x < self.hi.x
            && other.hi.y < self.hi.y
    }

    pub fn contains_point_strict(&self, p: Point) -> bool {
        self.lo.x < p.x && p.x < self.hi.x && self.lo.y < p.y && p.y < self.hi.y
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon {
            vertices: vec![
                self.lo,
                Point::new(self.hi.x, self.lo.y),
                self.hi,
                Point::new(self.lo.x, self.hi.y),
            ],
        }
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}, {}, {}]",
            self.lo.x, self.lo.y, self.hi.x, self.hi.y
        )
    }
}

/// Simple rectilinear polygon. Vertices are stored counter-clockwise,
/// starting at the smallest vertex in (x, y) order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = GeometryError;

    fn try_from(v: Vec<Point>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

fn signed_area2(vertices: &[Point]) -> i128 {
    let n = vertices.len();
    (0..n)
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            a.x as i128 * b.y as i128 - b.x as i128 * a.y as i128
        })
        .sum()
}

fn segments_touch(a0: Point, a1: Point, b0: Point, b1: Point) -> bool {
    // Axis-aligned segments coincide with their bounding boxes.
    a0.x.min(a1.x) <= b0.x.max(b1.x)
        && b0.x.min(b1.x) <= a0.x.max(a1.x)
        && a0.y.min(a1.y) <= b0.y.max(b1.y)
        && b0.y.min(b1.y) <= a0.y.max(a1.y)
}

impl Polygon {
    /// Validates and normalizes a vertex ring.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 4 {
            return Err(GeometryError::TooFewVertices(n));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(GeometryError::RepeatedVertex(i));
            }
        }
        if !n.is_multiple_of(2) {
            return Err(GeometryError::NotRectilinear(n - 1));
        }
        let horizontal = |i: usize| vertices[i].y == vertices[(i + 1) % n].y;
        let vertical = |i: usize| vertices[i].x == vertices[(i + 1) % n].x;
        let first_h = horizontal(0);
        for i in 0..n {
            let want_h = (i % 2 == 0) == first_h;
            let ok = if want_h { horizontal(i) } else { vertical(i) };
            if !ok {
                return Err(GeometryError::NotRectilinear(i));
            }
        }
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_touch(
                    vertices[i],
                    vertices[(i + 1) % n],
                    vertices[j],
                    vertices[(j + 1) % n],
                ) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        if signed_area2(&vertices) < 0 {
            vertices.reverse();
        }
        let start = vertices
            .iter()
            .enumerate()
            .min_by_key(|(_, p)| **p)
            .map(|(i, _)| i)
            .unwrap_or(0);
        vertices.rotate_left(start);
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn bbox(&self) -> Rect {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices[1..] {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        Rect { lo, hi }
    }

    pub fn area(&self) -> i128 {
        signed_area2(&self.vertices) / 2
    }

    pub fn as_rect(&self) -> Option<Rect> {
        (self.vertices.len() == 4).then(|| self.bbox())
    }

    pub fn is_rect(&self) -> bool {
        self.vertices.len() == 4
    }

    /// Whether vertex `i` is a convex (outward) corner.
    pub fn is_convex(&self, i: usize) -> bool {
        let n = self.vertices.len();
        let prev = self.vertices[(i + n - 1) % n];
        let cur = self.vertices[i];
        let next = self.vertices[(i + 1) % n];
        let cross = (cur.x - prev.x) as i128 * (next.y - cur.y) as i128
            - (cur.y - prev.y) as i128 * (next.x - cur.x) as i128;
        cross > 0
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| p.translate(dx, dy)).collect(),
        }
    }

    /// Mirror about the vertical axis x = 0.
    pub fn mirror_x(&self) -> Self {
        let v = self
            .vertices
            .iter()
            .map(|p| Point::new(-p.x, p.y))
            .collect();
        Self::new(v).expect("mirroring preserves polygon validity")
    }

    /// Even-odd test on doubled coordinates; the caller guarantees the
    /// point is not on the boundary.
    fn contains_doubled(&self, x2: i64, y2: i64) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if a.x != b.x {
                continue;
            }
            let (ylo, yhi) = (2 * a.y.min(b.y), 2 * a.y.max(b.y));
            if 2 * a.x > x2 && ylo < y2 && y2 < yhi {
                inside = !inside;
            }
        }
        inside
    }

    /// Whether the unit square `[x, x+1] x [y, y+1]` lies inside.
    pub fn covers_unit_cell(&self, x: i64, y: i64) -> bool {
        self.contains_doubled(2 * x + 1, 2 * y + 1)
    }

    fn cells_in(&self, window: &Rect) -> Option<CellGrid> {
        let bbox = self.bbox();
        let clip = bbox.intersection(window)?;
        let mut xs: Vec<i64> = self
            .vertices
            .iter()
            .map(|p| p.x)
            .filter(|&x| clip.lo.x < x && x < clip.hi.x)
            .chain([clip.lo.x, clip.hi.x])
            .collect();
        let mut ys: Vec<i64> = self
            .vertices
            .iter()
            .map(|p| p.y)
            .filter(|&y| clip.lo.y < y && y < clip.hi.y)
            .chain([clip.lo.y, clip.hi.y])
            .collect();
        xs.sort_unstable();
        xs.dedup();
        ys.sort_unstable();
        ys.dedup();
        let (nx, ny) = (xs.len() - 1, ys.len() - 1);
        let mut filled = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                filled[j * nx + i] = self.contains_doubled(xs[i] + xs[i + 1], ys[j] + ys[j + 1]);
            }
        }
        Some(CellGrid { xs, ys, filled })
    }

    /// Area of the intersection with `window`.
    pub fn intersection_area(&self, window: &Rect) -> i128 {
        if let Some(r) = self.as_rect() {
            return r.intersection(window).map_or(0, |r| r.area());
        }
        self.cells_in(window).map_or(0, |g| g.area())
    }

    /// Positive-area overlap with `window`; boundary contact alone does not count.
    pub fn overlaps_rect(&self, window: &Rect) -> bool {
        if !self.bbox().overlaps(window) {
            return false;
        }
        if self.is_rect() {
            return true;
        }
        self.cells_in(window).is_some_and(|g| g.filled.iter().any(|&f| f))
    }

    /// Closed containment of `r` in this polygon.
    pub fn contains_rect(&self, r: &Rect) -> bool {
        self.bbox().contains_rect(r) && self.intersection_area(r) == r.area()
    }

    /// Rectilinear intersection with `window`, one polygon per connected piece.
    pub fn clip(&self, window: &Rect) -> Vec<Polygon> {
        if let Some(r) = self.as_rect() {
            return r.intersection(window).map(|r| r.to_polygon()).into_iter().collect();
        }
        match self.cells_in(window) {
            Some(g) => g.trace(),
            None => Vec::new(),
        }
    }
}

struct CellGrid {
    xs: Vec<i64>,
    ys: Vec<i64>,
    filled: Vec<bool>,
}

impl CellGrid {
    fn nx(&self) -> usize {
        self.xs.len() - 1
    }

    fn ny(&self) -> usize {
        self.ys.len() - 1
    }

    fn at(&self, i: isize, j: isize) -> bool {
        if i < 0 || j < 0 || i as usize >= self.nx() || j as usize >= self.ny() {
            return false;
        }
        self.filled[j as usize * self.nx() + i as usize]
    }

    fn area(&self) -> i128 {
        let nx = self.nx();
        let mut total = 0i128;
        for (k, &f) in self.filled.iter().enumerate() {
            if f {
                let (i, j) = (k % nx, k / nx);
                total += (self.xs[i + 1] - self.xs[i]) as i128 * (self.ys[j + 1] - self.ys[j]) as i128;
            }
        }
        total
    }

    /// Walks the boundary of every 4-connected group of filled cells,
    /// interior on the left.
    fn trace(&self) -> Vec<Polygon> {
        type Node = (usize, usize);
        let mut out_edges: BTreeMap<Node, Vec<Node>> = BTreeMap::new();
        let (nx, ny) = (self.nx() as isize, self.ny() as isize);
        for j in 0..ny {
            for i in 0..nx {
                if !self.at(i, j) {
                    continue;
                }
                let (iu, ju) = (i as usize, j as usize);
                if !self.at(i, j - 1) {
                    out_edges.entry((iu, ju)).or_default().push((iu + 1, ju));
                }
                if !self.at(i + 1, j) {
                    out_edges.entry((iu + 1, ju)).or_default().push((iu + 1, ju + 1));
                }
                if !self.at(i, j + 1) {
                    out_edges.entry((iu + 1, ju + 1)).or_default().push((iu, ju + 1));
                }
                if !self.at(i - 1, j) {
                    out_edges.entry((iu, ju + 1)).or_default().push((iu, ju));
                }
            }
        }

        let dir = |a: Node, b: Node| -> (isize, isize) {
            (
                (b.0 as isize - a.0 as isize).signum(),
                (b.1 as isize - a.1 as isize).signum(),
            )
        };

        let mut polygons = Vec::new();
        while let Some((&start, _)) = out_edges.iter().find(|(_, v)| !v.is_empty()) {
            let mut ring: Vec<Node> = vec![start];
            let mut cur = start;
            let mut heading: Option<(isize, isize)> = None;
            loop {
                let choices = out_edges.get_mut(&cur).expect("boundary is closed");
                let pick = match heading {
                    None => 0,
                    Some(h) => {
                        // Prefer left turn, then straight, then right.
                        let rank = |d: (isize, isize)| {
                            let cross = h.0 * d.1 - h.1 * d.0;
                            if cross > 0 {
                                0
                            } else if cross == 0 {
                                1
                            } else {
                                2
                            }
                        };
                        (0..choices.len())
                            .min_by_key(|&k| rank(dir(cur, choices[k])))
                            .expect("boundary is closed")
                    }
                };
                let next = choices.swap_remove(pick);
                heading = Some(dir(cur, next));
                if next == start {
                    break;
                }
                ring.push(next);
                cur = next;
            }
            // Drop collinear vertices.
            let n = ring.len();
            let corners: Vec<Point> = (0..n)
                .filter(|&k| {
                    let prev = ring[(k + n - 1) % n];
                    let next = ring[(k + 1) % n];
                    dir(prev, ring[k]) != dir(ring[k], next)
                })
                .map(|k| Point::new(self.xs[ring[k].0], self.ys[ring[k].1]))
                .collect();
            debug_assert!(signed_area2(&corners) > 0, "clip result has a hole");
            polygons.push(Polygon::new(corners).expect("traced boundary is a valid polygon"));
        }
        polygons
    }
}

/// A flat, layered design.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Layout {
    pub name: String,
    layers: BTreeMap<String, Vec<Polygon>>,
}

fn check_name(name: &str) -> Result<(), GeometryError> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == '#') {
        return Err(GeometryError::InvalidLayerName(name.to_string()));
    }
    Ok(())
}

impl Layout {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            layers: BTreeMap::new(),
        }
    }

    pub fn add_layer(&mut self, layer: &str) -> Result<(), GeometryError> {
        check_name(layer)?;
        self.layers.entry(layer.to_string()).or_default();
        Ok(())
    }

    pub fn add_polygon(&mut self, layer: &str, polygon: Polygon) -> Result<(), GeometryError> {
        check_name(layer)?;
        self.layers.entry(layer.to_string()).or_default().push(polygon);
        Ok(())
    }

    pub fn add_rect(&mut self, layer: &str, rect: Rect) -> Result<(), GeometryError> {
        self.add_polygon(layer, rect.to_polygon())
    }

    /// Polygons on `layer`, empty if the layer is absent.
    pub fn layer(&self, layer: &str) -> &[Polygon] {
        self.layers.get(layer).map_or(&[], Vec::as_slice)
    }

    pub fn has_layer(&self, layer: &str) -> bool {
        self.layers.contains_key(layer)
    }

    pub fn layers(&self) -> impl Iterator<Item = (&str, &[Polygon])> {
        self.layers.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn polygon_count(&self) -> usize {
        self.layers.values().map(Vec::len).sum()
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Self {
        self.map_polygons(|p| p.translate(dx, dy))
    }

    pub fn mirror_x(&self) -> Self {
        self.map_polygons(Polygon::mirror_x)
    }

    fn map_polygons(&self, f: impl Fn(&Polygon) -> Polygon) -> Self {
        Self {
            name: self.name.clone(),
            layers: self
                .layers
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(&f).collect()))
                .collect(),
        }
    }

    pub fn query_window(&self, layer: &str, window: &Rect, clip: bool) -> Vec<Polygon> {
        query_window(self, layer, window, clip)
    }
}

/// Polygons on `layer` that overlap `window` with positive area, optionally
/// clipped to it. Sorted by lower-left bounding corner, then vertex list.
pub fn query_window(layout: &Layout, layer: &str, window: &Rect, clip: bool) -> Vec<Polygon> {
    let mut hits: Vec<Polygon> = Vec::new();
    for poly in layout.layer(layer) {
        if clip {
            hits.extend(poly.clip(window));
        } else if poly.overlaps_rect(window) {
            hits.push(poly.clone());
        }
    }
    sort_polygons(&mut hits);
    hits
}

pub(crate) fn sort_polygons(polys: &mut [Polygon]) {
    polys.sort_by(|a, b| {
        (a.bbox().lo, a.vertices()).cmp(&(b.bbox().lo, b.vertices()))
    });
}

fn parse_coords(line: usize, fields: &[&str]) -> Result<Vec<i64>, ParseError> {
    fields
        .iter()
        .map(|f| {
            f.parse::<i64>()
                .map_err(|_| syntax(line, format!("invalid coordinate {f:?}")))
        })
        .collect()
}

/// Parses the textual layout format (`layout`, `layer`, `rect`, `poly`
/// statements, `#` comments).
pub fn parse_layout(document: &str) -> Result<Layout, ParseError> {
    let mut layout: Option<Layout> = None;
    let mut current: Option<String> = None;
    let mut shape_index = 0usize;

    for (idx, raw) in document.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let (keyword, args) = (fields[0], &fields[1..]);
        if keyword != "layout" && layout.is_none() {
            return Err(syntax(line, "expected `layout <name>` header first"));
        }
        match keyword {
            "layout" => {
                if layout.is_some() {
                    return Err(syntax(line, "duplicate layout header"));
                }
                let [name] = args else {
                    return Err(syntax(line, "expected `layout <name>`"));
                };
                layout = Some(Layout::new(*name));
            }
            "layer" => {
                let [name] = args else {
                    return Err(syntax(line, "expected `layer <name>`"));
                };
                let l = layout.as_mut().expect("header checked above");
                if l.has_layer(name) {
                    return Err(syntax(line, format!("duplicate layer {name:?}")));
                }
                l.add_layer(name).map_err(|e| syntax(line, e.to_string()))?;
                current = Some(name.to_string());
            }
            "rect" | "poly" => {
                let Some(layer) = current.as_deref() else {
                    return Err(syntax(line, "shape outside of a layer"));
                };
                let c = parse_coords(line, args)?;
                let shape = if keyword == "rect" {
                    if c.len() != 4 {
                        return Err(syntax(line, "rect takes 4 coordinates"));
                    }
                    Rect::new(c[0], c[1], c[2], c[3]).map(|r| r.to_polygon())
                } else {
                    if c.len() < 8 || c.len() % 2 != 0 {
                        return Err(syntax(line, "poly takes an even count of at least 8 coordinates"));
                    }
                    Polygon::new(c.chunks(2).map(|p| Point::new(p[0], p[1])).collect())
                };
                let polygon = shape.map_err(|source| ParseError::Shape {
                    line,
                    index: shape_index,
                    source,
                })?;
                shape_index += 1;
                layout
                    .as_mut()
                    .expect("header checked above")
                    .add_polygon(layer, polygon)
                    .map_err(|e| syntax(line, e.to_string()))?;
            }
            other => return Err(syntax(line, format!("unknown statement {other:?}"))),
        }
    }
    layout.ok_or_else(|| syntax(0, "missing `layout <name>` header"))
}

pub fn write_layout(layout: &Layout) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "layout {}", layout.name).unwrap();
    for (name, polys) in layout.layers() {
        writeln!(out, "layer {name}").unwrap();
        for p in polys {
            match p.as_rect() {
                Some(r) => {
                    let [a, b, c, d] = r.coords();
                    writeln!(out, "rect {a} {b} {c} {d}").unwrap();
                }
                None => {
                    out.push_str("poly");
                    for v in p.vertices() {
                        write!(out, " {} {}", v.x, v.y).unwrap();
                    }
                    out.push('\n');
                }
            }
        }
    }
    out
}
