//! Axis arrangements of atomic currents and the metric graph realizing their
//! dual.
//!
//! Axes meeting a window about the basepoint are cut into pieces by their
//! crossings. Faces of the arrangement, axis pieces and crossing points are
//! the classes of points at zero dual distance. The arrangement is computed
//! in the Klein model, where axes are straight chords.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use petgraph::algo::{dijkstra, is_cyclic_undirected};
use petgraph::graph::{NodeIndex, UnGraph};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::currents::{AtomicCurrent, GeodesicCurrent};
use crate::error::{Error, Result};
use crate::group::ProximityIndex;
use crate::hyperbolic::{Geodesic, Isometry, PlanePoint, Segment};

type K2 = [f64; 2];

fn sub(a: K2, b: K2) -> K2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: K2, b: K2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: K2, b: K2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn lerp(a: K2, b: K2, t: f64) -> K2 {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// An axis translate meeting the window.
#[derive(Clone, Debug)]
pub struct ArrangedAxis {
    pub geodesic: Geodesic,
    pub component: usize,
    pub weight: f64,
    /// Chord endpoints in the Klein disk centred at the window centre.
    ends: [K2; 2],
    /// Chord parameters where the axis enters and leaves the window.
    clip: [f64; 2],
}

impl ArrangedAxis {
    fn at(&self, t: f64) -> K2 {
        lerp(self.ends[0], self.ends[1], t)
    }

    fn param(&self, p: K2) -> f64 {
        let d = sub(self.ends[1], self.ends[0]);
        dot(sub(p, self.ends[0]), d) / dot(d, d)
    }

    fn side(&self, p: K2) -> f64 {
        cross(sub(self.ends[1], self.ends[0]), sub(p, self.ends[0]))
    }
}

/// Point where two or more axes cross inside the window.
#[derive(Clone, Debug)]
pub struct ArrangedCrossing {
    pub point: PlanePoint,
    pub axes: Vec<usize>,
    klein: K2,
}

#[derive(Clone, Debug)]
pub struct Arrangement {
    pub center: PlanePoint,
    pub radius: f64,
    pub axes: Vec<ArrangedAxis>,
    pub crossings: Vec<ArrangedCrossing>,
    pub labels: Vec<String>,
    /// Moves the centre to `i`.
    to_origin: Isometry,
}

impl Arrangement {
    fn klein(&self, p: &PlanePoint) -> K2 {
        self.to_origin.apply(p).to_klein()
    }

    fn point(&self, k: K2) -> PlanePoint {
        let p = PlanePoint::from_klein(k).expect("inside the window");
        self.to_origin.inverse().apply(&p)
    }

    fn window_klein_radius(&self) -> f64 {
        self.radius.tanh()
    }

    /// Sides of all axes at `p`, one bit per axis.
    fn face_key(&self, p: K2) -> Vec<u64> {
        let mut key = vec![0u64; self.axes.len().div_ceil(64)];
        for (k, ax) in self.axes.iter().enumerate() {
            if ax.side(p) > 0.0 {
                key[k / 64] |= 1 << (k % 64);
            }
        }
        key
    }

    /// Keys of the faces around a point lying on the axes `on`.
    fn keys_around(&self, p: K2, on: &[usize]) -> Vec<Vec<u64>> {
        let base = self.face_key(p);
        (0..1usize << on.len())
            .map(|mask| {
                let mut key = base.clone();
                for (bit, &k) in on.iter().enumerate() {
                    let word = &mut key[k / 64];
                    if mask >> bit & 1 == 1 {
                        *word |= 1 << (k % 64);
                    } else {
                        *word &= !(1 << (k % 64));
                    }
                }
                key
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }
}

/// Isometry taking `c` to `i`.
fn centering(c: &PlanePoint) -> Isometry {
    let s = c.y().sqrt();
    Isometry::new(1.0 / s, -c.x() / s, 0.0, s).expect("unit determinant")
}

/// All axis translates meeting the hyperbolic disk of radius `r_w` about the
/// basepoint, and their crossings inside it.
pub fn build_arrangement(mu: &AtomicCurrent, r_w: f64) -> Result<Arrangement> {
    if !(r_w > 0.0) || !r_w.is_finite() {
        return Err(Error::Config("window radius must be positive".into()));
    }
    let center = mu.presentation().basepoint();
    let to_origin = centering(&center);
    let rho = r_w.tanh();
    let mut axes = Vec::new();
    for (idx, comp) in mu.components().iter().enumerate() {
        for ax in mu.orbit(idx, r_w)?.within(r_w) {
            let ends = ax.axis.endpoints().map(|e| {
                let z = to_origin.apply_boundary(&e).to_unit();
                [z.re, z.im]
            });
            let d = sub(ends[1], ends[0]);
            let a = dot(d, d);
            let b = 2.0 * dot(ends[0], d);
            let c = 1.0 - rho * rho;
            let disc = b * b - 4.0 * a * c;
            // Tangent axes meet the window in a single point.
            if disc <= 1e-18 {
                continue;
            }
            let sq = disc.sqrt();
            axes.push(ArrangedAxis {
                geodesic: ax.axis,
                component: idx,
                weight: comp.weight,
                ends,
                clip: [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)],
            });
        }
    }
    let mut crossings: Vec<ArrangedCrossing> = Vec::new();
    let mut index = ProximityIndex::<2>::new(1e-9);
    let inv = to_origin.inverse();
    for k in 0..axes.len() {
        for l in k + 1..axes.len() {
            let (p, q) = (&axes[k], &axes[l]);
            let d1 = sub(p.ends[1], p.ends[0]);
            let d2 = sub(q.ends[1], q.ends[0]);
            let den = cross(d1, d2);
            if den.abs() < 1e-14 {
                continue;
            }
            let w = sub(q.ends[0], p.ends[0]);
            let s = cross(w, d2) / den;
            let t = cross(w, d1) / den;
            if !(s > p.clip[0] && s < p.clip[1] && t > q.clip[0] && t < q.clip[1]) {
                continue;
            }
            let x = p.at(s);
            if dot(x, x) >= rho * rho {
                continue;
            }
            match index.find(&x, |_| true) {
                Some(id) => {
                    for a in [k, l] {
                        if !crossings[id].axes.contains(&a) {
                            crossings[id].axes.push(a);
                        }
                    }
                }
                None => {
                    index.insert(x, crossings.len());
                    let point = inv.apply(&PlanePoint::from_klein(x)?);
                    crossings.push(ArrangedCrossing {
                        point,
                        axes: vec![k, l],
                        klein: x,
                    });
                }
            }
        }
    }
    for c in &mut crossings {
        c.axes.sort_unstable();
    }
    Ok(Arrangement {
        center,
        radius: r_w,
        axes,
        crossings,
        labels: mu.components().iter().map(|c| c.label.clone()).collect(),
        to_origin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    Region,
    AxisSegment,
    AxisRayOrLine,
    CrossingPoint,
}

/// A set of points of the plane at dual distance zero from each other.
#[derive(Clone, Debug)]
pub struct DualClass {
    pub id: usize,
    pub kind: ClassKind,
    pub representative: PlanePoint,
    /// The class touches the window boundary.
    pub truncated: bool,
    /// Axes containing the class; empty for regions.
    pub axes: Vec<usize>,
    /// Classes of lower dimension in its closure.
    pub boundary: Vec<usize>,
    /// Klein points whose open convex hull lies in the class.
    hull: Vec<K2>,
    from_origin: Isometry,
    key: Option<Vec<u64>>,
}

impl DualClass {
    /// Random point of the class.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> PlanePoint {
        let k = match self.kind {
            ClassKind::CrossingPoint => self.hull[0],
            ClassKind::AxisSegment | ClassKind::AxisRayOrLine => lerp(self.hull[0], self.hull[1], rng.gen_range(0.02..0.98)),
            ClassKind::Region => {
                let w: Vec<f64> = self.hull.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
                let total: f64 = w.iter().sum();
                let mut p = [0.0, 0.0];
                for (h, wi) in self.hull.iter().zip(&w) {
                    p[0] += h[0] * wi / total;
                    p[1] += h[1] * wi / total;
                }
                p
            }
        };
        self.from_origin
            .apply(&PlanePoint::from_klein(k).expect("inside the window"))
    }
}

#[derive(Default)]
struct FaceData {
    hull: Vec<K2>,
    boundary: Vec<usize>,
    truncated: bool,
}

/// Faces, axis pieces and crossing points of the arrangement. Ids are
/// assigned in that order.
pub fn quotient_classes(a: &Arrangement) -> Vec<DualClass> {
    let from_origin = a.to_origin.inverse();
    let rho = a.window_klein_radius();
    if a.axes.is_empty() {
        let hull = (0..8)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 8.0;
                [0.9 * rho * t.cos(), 0.9 * rho * t.sin()]
            })
            .collect();
        return vec![DualClass {
            id: 0,
            kind: ClassKind::Region,
            representative: a.center,
            truncated: true,
            axes: Vec::new(),
            boundary: Vec::new(),
            hull,
            from_origin,
            key: Some(Vec::new()),
        }];
    }

    // Vertices along each axis: window entry, crossings, window exit.
    #[derive(Clone, Copy)]
    enum Vertex {
        Clip(K2),
        Crossing(usize),
    }
    let mut along: Vec<Vec<(f64, Vertex)>> = a
        .axes
        .iter()
        .map(|ax| vec![(ax.clip[0], Vertex::Clip(ax.at(ax.clip[0]))), (ax.clip[1], Vertex::Clip(ax.at(ax.clip[1])))])
        .collect();
    for (c, x) in a.crossings.iter().enumerate() {
        for &k in &x.axes {
            along[k].push((a.axes[k].param(x.klein), Vertex::Crossing(c)));
        }
    }
    for list in &mut along {
        list.sort_by(|p, q| p.0.total_cmp(&q.0));
    }
    let klein_of = |v: &Vertex| match v {
        Vertex::Clip(p) => *p,
        Vertex::Crossing(c) => a.crossings[*c].klein,
    };

    struct Piece {
        axis: usize,
        ends: [K2; 2],
        crossings: Vec<usize>,
        truncated: bool,
    }
    let mut pieces = Vec::new();
    for (k, list) in along.iter().enumerate() {
        for w in list.windows(2) {
            let crossings: Vec<usize> = w
                .iter()
                .filter_map(|(_, v)| match v {
                    Vertex::Crossing(c) => Some(*c),
                    Vertex::Clip(_) => None,
                })
                .collect();
            pieces.push(Piece {
                axis: k,
                ends: [klein_of(&w[0].1), klein_of(&w[1].1)],
                truncated: crossings.len() < 2,
                crossings,
            });
        }
    }

    let mut faces: BTreeMap<Vec<u64>, FaceData> = BTreeMap::new();
    for p in &pieces {
        let mid = lerp(p.ends[0], p.ends[1], 0.5);
        for key in a.keys_around(mid, &[p.axis]) {
            faces.entry(key).or_default();
        }
    }
    // Window boundary: arcs between consecutive exit points.
    let mut exits: Vec<(f64, K2, usize)> = Vec::new();
    for (k, ax) in a.axes.iter().enumerate() {
        for t in ax.clip {
            let p = ax.at(t);
            exits.push((p[1].atan2(p[0]), p, k));
        }
    }
    exits.sort_by(|x, y| x.0.total_cmp(&y.0));
    for (i, &(t0, p0, k)) in exits.iter().enumerate() {
        let t1 = if i + 1 < exits.len() {
            exits[i + 1].0
        } else {
            exits[0].0 + std::f64::consts::TAU
        };
        let m = 0.5 * (t0 + t1);
        let q = [rho * m.cos(), rho * m.sin()];
        if let Some(f) = faces.get_mut(&a.face_key(q)) {
            f.hull.push(q);
            f.truncated = true;
        }
        for key in a.keys_around(p0, &[k]) {
            if let Some(f) = faces.get_mut(&key) {
                f.hull.push(p0);
                f.truncated = true;
            }
        }
    }

    let n_faces = faces.len();
    let piece_id = |j: usize| n_faces + j;
    let crossing_id = |c: usize| n_faces + pieces.len() + c;
    for (j, p) in pieces.iter().enumerate() {
        let mid = lerp(p.ends[0], p.ends[1], 0.5);
        for key in a.keys_around(mid, &[p.axis]) {
            if let Some(f) = faces.get_mut(&key) {
                f.boundary.push(piece_id(j));
            }
        }
    }
    for (c, x) in a.crossings.iter().enumerate() {
        for key in a.keys_around(x.klein, &x.axes) {
            if let Some(f) = faces.get_mut(&key) {
                f.hull.push(x.klein);
                f.boundary.push(crossing_id(c));
            }
        }
    }

    let mut classes = Vec::with_capacity(n_faces + pieces.len() + a.crossings.len());
    for (id, (key, f)) in faces.into_iter().enumerate() {
        let n = f.hull.len() as f64;
        let centroid = f
            .hull
            .iter()
            .fold([0.0, 0.0], |s, h| [s[0] + h[0] / n, s[1] + h[1] / n]);
        let mut boundary = f.boundary;
        boundary.sort_unstable();
        boundary.dedup();
        classes.push(DualClass {
            id,
            kind: ClassKind::Region,
            representative: a.point(centroid),
            truncated: f.truncated,
            axes: Vec::new(),
            boundary,
            hull: f.hull,
            from_origin,
            key: Some(key),
        });
    }
    for (j, p) in pieces.iter().enumerate() {
        let on_crossings = p.crossings.len();
        let kind = if on_crossings == 2 {
            ClassKind::AxisSegment
        } else {
            ClassKind::AxisRayOrLine
        };
        classes.push(DualClass {
            id: piece_id(j),
            kind,
            representative: a.point(lerp(p.ends[0], p.ends[1], 0.5)),
            truncated: p.truncated,
            axes: vec![p.axis],
            boundary: p.crossings.iter().map(|&c| crossing_id(c)).collect(),
            hull: p.ends.to_vec(),
            from_origin,
            key: None,
        });
    }
    for (c, x) in a.crossings.iter().enumerate() {
        classes.push(DualClass {
            id: crossing_id(c),
            kind: ClassKind::CrossingPoint,
            representative: x.point,
            truncated: false,
            axes: x.axes.clone(),
            boundary: Vec::new(),
            hull: vec![x.klein],
            from_origin,
            key: None,
        });
    }
    classes
}

/// A segment from `p` to `q` meets the support only at one of its endpoints
/// and crosses no atom in its interior.
pub fn adjacent_by_segment(mu: &GeodesicCurrent, p: &PlanePoint, q: &PlanePoint) -> Result<bool> {
    let prof = mu.crossing_profile(&Segment::closed(*p, *q))?;
    Ok(prof.interior == 0.0 && (prof.at_a == 0.0 || prof.at_b == 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualEdge {
    pub a: usize,
    pub b: usize,
    #[serde(rename = "len")]
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct DualGraph {
    pub nodes: Vec<DualClass>,
    pub edges: Vec<DualEdge>,
    /// Incident pairs dropped by the segment predicate.
    pub rejected: usize,
    graph: UnGraph<usize, f64>,
}

/// Joins each class to the classes in its closure that pass the adjacency
/// predicate; edge lengths are dual distances of representatives.
pub fn build_dual_graph(classes: Vec<DualClass>, mu: &GeodesicCurrent) -> Result<DualGraph> {
    let pairs: Vec<(usize, usize)> = classes
        .iter()
        .flat_map(|c| c.boundary.iter().map(move |&b| (c.id.min(b), c.id.max(b))))
        .collect();
    let checked = pairs
        .par_iter()
        .map(|&(x, y)| -> Result<Option<DualEdge>> {
            let (p, q) = (&classes[x].representative, &classes[y].representative);
            if !adjacent_by_segment(mu, p, q)? {
                return Ok(None);
            }
            let length = crate::dual::dual_distance(mu, p, q)?;
            Ok(Some(DualEdge { a: x, b: y, length }))
        })
        .collect::<Result<Vec<_>>>()?;
    let rejected = checked.iter().filter(|e| e.is_none()).count();
    let mut edges: Vec<DualEdge> = checked.into_iter().flatten().collect();
    edges.sort_by_key(|e| (e.a, e.b));
    edges.dedup_by(|e, f| e.a == f.a && e.b == f.b);
    let mut graph = UnGraph::with_capacity(classes.len(), edges.len());
    for c in &classes {
        graph.add_node(c.id);
    }
    for e in &edges {
        graph.add_edge(NodeIndex::new(e.a), NodeIndex::new(e.b), e.length);
    }
    Ok(DualGraph {
        nodes: classes,
        edges,
        rejected,
        graph,
    })
}

impl DualGraph {
    pub fn graph_distance(&self, n1: usize, n2: usize) -> Result<f64> {
        for n in [n1, n2] {
            if n >= self.nodes.len() {
                return Err(Error::NodeNotFound(n));
            }
        }
        if n1 == n2 {
            return Ok(0.0);
        }
        let dist = dijkstra(&self.graph, NodeIndex::new(n1), Some(NodeIndex::new(n2)), |e| *e.weight());
        dist.get(&NodeIndex::new(n2)).copied().ok_or(Error::Disconnected(n1, n2))
    }

    /// Region containing `p`, when `p` is in the window and off every axis.
    pub fn region_of(&self, a: &Arrangement, p: &PlanePoint) -> Option<usize> {
        let k = a.klein(p);
        let rho = a.window_klein_radius();
        if dot(k, k) >= rho * rho || a.axes.iter().any(|ax| ax.side(k).abs() < 1e-12) {
            return None;
        }
        let key = a.face_key(k);
        self.nodes
            .iter()
            .find(|c| c.key.as_ref() == Some(&key))
            .map(|c| c.id)
    }

    /// No cycles among the selected classes.
    pub fn is_forest(&self, include_truncated: bool) -> bool {
        let keep: Vec<bool> = self.nodes.iter().map(|c| include_truncated || !c.truncated).collect();
        let g = self.graph.filter_map(
            |i, w| keep[i.index()].then_some(*w),
            |_, w| Some(*w),
        );
        !is_cyclic_undirected(&g)
    }

    pub fn is_connected(&self) -> bool {
        petgraph::algo::connected_components(&self.graph) <= 1
    }

    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .map(|c| {
                json!({
                    "id": c.id,
                    "kind": c.kind,
                    "truncated": c.truncated,
                    "point": c.representative,
                })
            })
            .collect();
        json!({ "nodes": nodes, "edges": self.edges })
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const SIZE: f64 = 600.0;
const SCALE: f64 = 280.0;

fn screen(w: [f64; 2]) -> (f64, f64) {
    (SIZE / 2.0 + SCALE * w[0], SIZE / 2.0 - SCALE * w[1])
}

/// Disk-model picture of the arrangement with an optional graph overlay.
pub fn render_svg(a: &Arrangement, g: Option<&DualGraph>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let (cx, cy) = screen([0.0, 0.0]);
    let _ = writeln!(
        s,
        r#"<circle cx="{cx:.6}" cy="{cy:.6}" r="{SCALE:.6}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for ax in &a.axes {
        let [p, q] = ax.geodesic.endpoints().map(|e| a.to_origin.apply_boundary(&e).angle());
        let mut delta = (q - p).rem_euclid(std::f64::consts::TAU);
        let (mut t1, mut t2) = (p, q);
        if delta > std::f64::consts::PI {
            std::mem::swap(&mut t1, &mut t2);
            delta = std::f64::consts::TAU - delta;
        }
        let (x1, y1) = screen([t1.cos(), t1.sin()]);
        let (x2, y2) = screen([t2.cos(), t2.sin()]);
        let color = PALETTE[ax.component % PALETTE.len()];
        if (delta - std::f64::consts::PI).abs() < 1e-9 {
            let _ = writeln!(
                s,
                r#"<path d="M {x1:.6} {y1:.6} L {x2:.6} {y2:.6}" fill="none" stroke="{color}" stroke-width="1"/>"#
            );
        } else {
            let r = SCALE * (delta / 2.0).tan();
            let _ = writeln!(
                s,
                r#"<path d="M {x1:.6} {y1:.6} A {r:.6} {r:.6} 0 0 0 {x2:.6} {y2:.6}" fill="none" stroke="{color}" stroke-width="1"/>"#
            );
        }
    }
    let disk = |p: &PlanePoint| {
        let w = a.to_origin.apply(p).to_disk();
        screen([w.re, w.im])
    };
    for c in &a.crossings {
        let (x, y) = disk(&c.point);
        let _ = writeln!(s, r#"<circle cx="{x:.6}" cy="{y:.6}" r="2.000000" fill="black"/>"#);
    }
    if let Some(g) = g {
        for e in &g.edges {
            let (x1, y1) = disk(&g.nodes[e.a].representative);
            let (x2, y2) = disk(&g.nodes[e.b].representative);
            let _ = writeln!(
                s,
                r#"<line x1="{x1:.6}" y1="{y1:.6}" x2="{x2:.6}" y2="{y2:.6}" stroke="gray" stroke-width="0.5"/>"#
            );
        }
        for c in &g.nodes {
            let (x, y) = disk(&c.representative);
            let fill = match c.kind {
                ClassKind::Region => "orange",
                ClassKind::AxisSegment | ClassKind::AxisRayOrLine => "green",
                ClassKind::CrossingPoint => "purple",
            };
            let _ = writeln!(s, r#"<circle cx="{x:.6}" cy="{y:.6}" r="1.500000" fill="{fill}"/>"#);
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(a: &Arrangement, g: Option<&DualGraph>, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(a, g))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::dual_distance;
    use crate::group::{AxisOrbit, SurfacePresentation};
    use crate::hyperbolic::hyp_distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn torus() -> Arc<SurfacePresentation> {
        Arc::new(SurfacePresentation::preset("punctured_torus").unwrap())
    }

    fn genus2() -> Arc<SurfacePresentation> {
        Arc::new(SurfacePresentation::preset("genus2_octagon").unwrap())
    }

    fn setup(p: Arc<SurfacePresentation>, words: &[(&str, f64)], r: f64) -> (GeodesicCurrent, Arrangement, DualGraph) {
        let mu = AtomicCurrent::from_words(p, words).unwrap();
        let arr = build_arrangement(&mu, r).unwrap();
        let cur = GeodesicCurrent::Atomic(mu);
        let g = build_dual_graph(quotient_classes(&arr), &cur).unwrap();
        (cur, arr, g)
    }

    #[test]
    fn single_curve_arrangement() {
        let p = torus();
        let (_, arr, g) = setup(p.clone(), &[("a", 1.0)], 2.5);
        assert!(arr.crossings.is_empty());
        let rep = p.parse_element("a").unwrap();
        let oracle = AxisOrbit::build(&p, &rep, 4.0).unwrap();
        let expected = oracle.axes.iter().filter(|x| x.distance < 2.5).count();
        assert_eq!(arr.axes.len(), expected);
        assert!(g.nodes.iter().all(|c| matches!(c.kind, ClassKind::Region | ClassKind::AxisRayOrLine)));
        assert_eq!(
            g.nodes.iter().filter(|c| c.kind == ClassKind::Region).count(),
            arr.axes.len() + 1
        );
        assert!(g.is_forest(true));
        assert!(g.is_connected());
    }

    #[test]
    fn crossing_pair_arrangement() {
        let p = torus();
        let (cur, arr, g) = setup(p.clone(), &[("a", 1.0), ("b", 1.0)], 3.0);
        // Oracle: pairwise linking with the intersection inside the window.
        let all: Vec<Geodesic> = ["a", "b"]
            .iter()
            .flat_map(|w| {
                AxisOrbit::build(&p, &p.parse_element(w).unwrap(), 3.0)
                    .unwrap()
                    .axes
                    .into_iter()
                    .map(|x| x.axis)
            })
            .collect();
        let mut oracle = 0;
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if all[i].links(&all[j]) {
                    let x = all[i].intersection(&all[j]).unwrap();
                    if hyp_distance(&x, &p.basepoint()) < 3.0 {
                        oracle += 1;
                    }
                }
            }
        }
        let pairs: usize = arr.crossings.iter().map(|c| c.axes.len() * (c.axes.len() - 1) / 2).sum();
        assert_eq!(pairs, oracle);
        for c in &arr.crossings {
            for &k in &c.axes {
                assert!(arr.axes[k].geodesic.distance_to(&c.point) < 1e-9);
            }
        }
        assert!(g.nodes.iter().any(|c| c.kind == ClassKind::AxisSegment));
        assert!(g.nodes.iter().any(|c| c.kind == ClassKind::CrossingPoint));
        assert_eq!(g.rejected, 0);
        for e in &g.edges {
            let d = dual_distance(&cur, &g.nodes[e.a].representative, &g.nodes[e.b].representative).unwrap();
            assert!((d - e.length).abs() <= 1e-9);
            assert!(e.length > 0.0);
        }
        // Regions of a crossing pair close up triangles with their corner
        // crossings. On the punctured torus every region is an unbounded
        // polygon around a cusp, so only truncated classes see them.
        assert!(!g.is_forest(true));
        assert!(g.nodes.iter().filter(|c| c.kind == ClassKind::Region).all(|c| c.truncated));
    }

    #[test]
    fn classes_have_zero_diameter() {
        let (cur, _, g) = setup(torus(), &[("a", 1.0), ("b", 2.0)], 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for c in &g.nodes {
            for _ in 0..20 {
                let (x, y) = (c.sample(&mut rng), c.sample(&mut rng));
                assert!(dual_distance(&cur, &x, &y).unwrap() <= 1e-10, "{:?}", c.kind);
            }
        }
    }

    #[test]
    fn region_to_axis_edge_is_half_weight() {
        let (_, _, g) = setup(torus(), &[("a", 3.0)], 2.0);
        for e in &g.edges {
            assert_eq!(e.length, 1.5);
        }
    }

    #[test]
    fn graph_distance_matches_dual_distance() {
        let (cur, arr, g) = setup(torus(), &[("a", 1.0), ("b", 1.0)], 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let regions: Vec<&DualClass> = g.nodes.iter().filter(|c| c.kind == ClassKind::Region).collect();
        let mut checked = 0;
        while checked < 40 {
            let c1 = regions[rng.gen_range(0..regions.len())];
            let c2 = regions[rng.gen_range(0..regions.len())];
            let (x, y) = (c1.sample(&mut rng), c2.sample(&mut rng));
            assert_eq!(g.region_of(&arr, &x), Some(c1.id));
            let d = dual_distance(&cur, &x, &y).unwrap();
            assert!((g.graph_distance(c1.id, c2.id).unwrap() - d).abs() <= 1e-9);
            checked += 1;
        }
        assert!(matches!(g.graph_distance(0, 100_000), Err(Error::NodeNotFound(_))));
    }

    #[test]
    fn simple_multicurve_is_a_tree() {
        let (_, arr, g) = setup(genus2(), &[("a", 1.0), ("c", 1.0), ("abAB", 2.0)], 2.5);
        assert!(arr.crossings.is_empty());
        assert!(g.is_forest(true));
        assert!(g.is_forest(false));
        assert!(g.is_connected());
    }

    #[test]
    fn tree_translation_equals_intersection() {
        let p = torus();
        let (_, arr, g) = setup(p.clone(), &[("a", 1.0)], 3.5);
        let b = p.parse_element("b").unwrap();
        let ax = b.axis().unwrap();
        let x = ax.point_at(&ax.foot(), 0.2);
        let bx = b.apply(&x);
        let (r1, r2) = (g.region_of(&arr, &x).unwrap(), g.region_of(&arr, &bx).unwrap());
        assert_eq!(g.graph_distance(r1, r2).unwrap(), 1.0);
    }

    #[test]
    fn empty_current() {
        let mu = AtomicCurrent::empty(torus());
        let arr = build_arrangement(&mu, 2.0).unwrap();
        assert!(arr.is_empty());
        let g = build_dual_graph(quotient_classes(&arr), &GeodesicCurrent::Atomic(mu)).unwrap();
        assert_eq!(g.nodes.len(), 1);
        assert!(g.edges.is_empty());
        let svg = render_svg(&arr, None);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<path"));
    }

    #[test]
    fn svg_is_deterministic() {
        let (_, arr, g) = setup(torus(), &[("a", 1.0), ("b", 1.0)], 2.0);
        let s1 = render_svg(&arr, Some(&g));
        let (_, arr2, g2) = setup(torus(), &[("a", 1.0), ("b", 1.0)], 2.0);
        assert_eq!(s1, render_svg(&arr2, Some(&g2)));
        assert!(s1.contains("#1f77b4") && s1.contains("#d62728"));
        assert_eq!(s1.matches("<path").count(), arr.axes.len());
        let json = g.to_json();
        assert_eq!(json["nodes"].as_array().unwrap().len(), g.nodes.len());
        assert_eq!(json["edges"].as_array().unwrap().len(), g.edges.len());
    }
}
