//! The dual pseudo-metric of a current, translation lengths and the
//! hyperbolicity constant.

use std::f64::consts::{LN_2, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::currents::{apply_stepwise, cyclic_root, AtomicCurrent, GeodesicCurrent, LiouvilleCurrent};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::hyperbolic::{
    crosses, hyp_distance, mdot, BoundaryPoint, Crossing, Geodesic, GeodesicBox, Lorentz, PlanePoint, Segment,
};

/// Tolerance for two points to represent the same point of the dual.
pub const SAME_POINT_TOL: f64 = 1e-10;

/// `½(μ(G[p,q)) + μ(G(p,q]))`.
pub fn dual_distance(mu: &GeodesicCurrent, p: &PlanePoint, q: &PlanePoint) -> Result<f64> {
    if p == q || hyp_distance(p, q) == 0.0 {
        return Ok(0.0);
    }
    Ok(mu.crossing_profile(&Segment::closed(*p, *q))?.half_open_mean())
}

pub fn same_point(mu: &GeodesicCurrent, p: &PlanePoint, q: &PlanePoint) -> Result<bool> {
    Ok(dual_distance(mu, p, q)? <= SAME_POINT_TOL)
}

/// A point of the dual space, represented by a point of the plane.
#[derive(Clone, Copy, Debug)]
pub struct DualPoint<'a> {
    pub representative: PlanePoint,
    pub current: &'a GeodesicCurrent,
}

impl DualPoint<'_> {
    pub fn distance(&self, other: &DualPoint<'_>) -> Result<f64> {
        dual_distance(self.current, &self.representative, &other.representative)
    }

    pub fn same_as(&self, other: &DualPoint<'_>) -> Result<bool> {
        same_point(self.current, &self.representative, &other.representative)
    }
}

/// `d_μ(x, g·x)` for a point `x` on the axis of `g`.
pub fn translation_length(mu: &GeodesicCurrent, g: &GroupElement) -> Result<f64> {
    let pres = mu.presentation();
    let (root, k) = cyclic_root(pres, g);
    if k > 1 {
        return Ok(k as f64 * translation_length(mu, &root)?);
    }
    let axis = g.axis()?;
    let len = g.translation_length()?;
    let x = axis.point_at(&axis.project(&pres.basepoint()), std::f64::consts::FRAC_1_PI * len);
    let gx = apply_stepwise(pres, g, &x);
    dual_distance(mu, &x, &gx)
}

#[derive(Clone, Debug, Serialize)]
pub struct FourPointReport {
    pub quadruple: [PlanePoint; 4],
    /// `d(p,q)+d(r,s)`, `d(p,r)+d(q,s)`, `d(q,r)+d(p,s)`.
    pub sums: [f64; 3],
    pub defect: f64,
}

pub fn four_point_defect(mu: &GeodesicCurrent, quad: &[PlanePoint; 4]) -> Result<FourPointReport> {
    let d = |i: usize, j: usize| dual_distance(mu, &quad[i], &quad[j]);
    let sums = [d(0, 1)? + d(2, 3)?, d(0, 2)? + d(1, 3)?, d(1, 2)? + d(0, 3)?];
    let mut sorted = sums;
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(FourPointReport {
        quadruple: *quad,
        sums,
        defect: (sorted[0] - sorted[1]).max(0.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMethod {
    BoxGrid,
    AtomCombinatorial,
    DoubleTransversal,
}

/// A lower bound on `δ_μ` with the box realizing it.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaCertificate {
    #[serde(serialize_with = "serialize_box")]
    pub best_box: GeodesicBox,
    /// `min{μ(B), μ(B⊥)}` at `best_box`, counted within the truncation radius
    /// for atomic currents.
    pub value: f64,
    pub truncation_radius: Option<f64>,
    pub method: DeltaMethod,
    /// Quadruple near the box corners and its 4-point defect.
    pub witness: Option<FourPointReport>,
}

fn serialize_box<S: serde::Serializer>(b: &GeodesicBox, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let [a, bb, c, d] = b.corners();
    let mut st = s.serialize_struct("Box", 2)?;
    st.serialize_field("angles", &[a.angle(), bb.angle(), c.angle(), d.angle()])?;
    st.serialize_field(
        "flags",
        &[b.i.include_start, b.i.include_end, b.j.include_start, b.j.include_end],
    )?;
    st.end()
}

/// Parameters of the box search.
#[derive(Clone, Copy, Debug)]
pub struct DeltaSearch {
    /// Atoms meeting this ball about the basepoint are enumerated.
    pub radius: f64,
    /// Grid points per angle for the Liouville search.
    pub grid: usize,
    /// Distance from the basepoint of the witness quadruple.
    pub witness_distance: f64,
}

impl Default for DeltaSearch {
    fn default() -> Self {
        Self {
            radius: 3.0,
            grid: 12,
            witness_distance: 16.0,
        }
    }
}

pub fn delta_lower_bound_boxes(mu: &GeodesicCurrent, search: &DeltaSearch) -> Result<DeltaCertificate> {
    if !(search.radius > 0.0) {
        return Err(Error::Config("truncation radius must be positive".into()));
    }
    match mu.parts() {
        (Some(a), None) => delta_atomic(mu, a, search),
        (None, Some(l)) => delta_liouville(mu, l, search),
        _ => Err(Error::Unsupported(
            "delta search for sums of atomic and Liouville currents".into(),
        )),
    }
}

/// Certificates for increasing truncation radii.
pub fn delta_convergence(mu: &GeodesicCurrent, radii: &[f64], search: &DeltaSearch) -> Result<Vec<DeltaCertificate>> {
    radii
        .iter()
        .map(|&r| delta_lower_bound_boxes(mu, &DeltaSearch { radius: r, ..*search }))
        .collect()
}

fn box_min(mu: &GeodesicCurrent, b: &GeodesicBox) -> Result<f64> {
    Ok(mu.box_measure(b)?.min(mu.box_measure(&b.opposite())?))
}

fn liouville_min(angles: [f64; 4]) -> f64 {
    let chord = |x: f64, y: f64| ((x - y) / 2.0).sin().abs();
    let [a, b, c, d] = angles;
    let m1 = (chord(a, c) * chord(b, d) / (chord(a, d) * chord(b, c))).ln();
    let m2 = (chord(b, d) * chord(c, a) / (chord(b, a) * chord(c, d))).ln();
    m1.min(m2)
}

fn delta_liouville(mu: &GeodesicCurrent, l: &LiouvilleCurrent, search: &DeltaSearch) -> Result<DeltaCertificate> {
    let g = search.grid.max(4);
    let step = TAU / g as f64;
    // The first corner is fixed at angle 0; the rest range over the grid.
    let mut best = (f64::NEG_INFINITY, [0.0, 1.0, 2.0, 3.0]);
    for i in 1..g {
        for j in i + 1..g {
            for k in j + 1..g {
                let angles = [0.0, i as f64 * step, j as f64 * step, k as f64 * step];
                let v = liouville_min(angles);
                if v > best.0 {
                    best = (v, angles);
                }
            }
        }
    }
    // Coordinate ascent with shrinking steps.
    let (mut value, mut angles) = best;
    let mut h = step / 2.0;
    while h > 1e-12 {
        let mut improved = false;
        for idx in 1..4 {
            for sgn in [-1.0, 1.0] {
                let mut cand = angles;
                cand[idx] += sgn * h;
                if !(cand[0] < cand[1] && cand[1] < cand[2] && cand[2] < cand[3] && cand[3] < TAU) {
                    continue;
                }
                let v = liouville_min(cand);
                if v > value {
                    value = v;
                    angles = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    let [a, b, c, d] = angles;
    let best_box = GeodesicBox::half_open_from_angles(a, b, c, d)?;
    let value = box_min(mu, &best_box)?;
    let witness = Some(box_witness(mu, &best_box, value, &[search.witness_distance])?);
    let _ = l;
    Ok(DeltaCertificate {
        best_box,
        value,
        truncation_radius: None,
        method: DeltaMethod::BoxGrid,
        witness,
    })
}

/// Sums of weights over index rectangles of a symmetric matrix.
struct PrefixTable {
    n: usize,
    p: Vec<f64>,
}

impl PrefixTable {
    fn new(n: usize, w: &[f64]) -> Self {
        let m = n + 1;
        let mut p = vec![0.0; m * m];
        for r in 0..n {
            for c in 0..n {
                p[(r + 1) * m + c + 1] = w[r * n + c] + p[r * m + c + 1] + p[(r + 1) * m + c] - p[r * m + c];
            }
        }
        Self { n, p }
    }

    /// Sum over rows `r0..r1` and columns `c0..c1`, half-open.
    fn rect(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
        if r0 >= r1 || c0 >= c1 {
            return 0.0;
        }
        let m = self.n + 1;
        self.p[r1 * m + c1] - self.p[r0 * m + c1] - self.p[r1 * m + c0] + self.p[r0 * m + c0]
    }
}

fn delta_atomic(mu: &GeodesicCurrent, a: &AtomicCurrent, search: &DeltaSearch) -> Result<DeltaCertificate> {
    let r = search.radius;
    let mut atoms: Vec<(f64, f64, f64)> = Vec::new();
    for (idx, comp) in a.components().iter().enumerate() {
        for ax in a.orbit(idx, r)?.within(r) {
            let [p, q] = ax.axis.endpoints();
            atoms.push((p.angle(), q.angle(), comp.weight));
        }
    }
    let mut angles: Vec<f64> = atoms.iter().flat_map(|&(p, q, _)| [p, q]).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    let n = angles.len();
    let fallback = || -> Result<DeltaCertificate> {
        let best_box = GeodesicBox::half_open_from_angles(0.0, 1.0, 2.0, 3.0)?;
        Ok(DeltaCertificate {
            value: box_min(mu, &best_box)?,
            best_box,
            truncation_radius: Some(r),
            method: DeltaMethod::AtomCombinatorial,
            witness: None,
        })
    };
    if n < 4 {
        return fallback();
    }
    let index = |t: f64| -> usize {
        let k = angles.partition_point(|&x| x < t - 1e-12);
        k.min(n - 1)
    };
    let mut w = vec![0.0; n * n];
    for &(p, q, wt) in &atoms {
        let (i, j) = (index(p), index(q));
        w[i * n + j] += wt;
        w[j * n + i] += wt;
    }
    let table = PrefixTable::new(n, &w);
    // Corner k sits in the gap after endpoint k. Endpoints strictly between
    // corners i < j have indices i+1..=j.
    let arc = |i: usize, j: usize| (i + 1, j + 1);
    let measure = |i: usize, j: usize, k: usize, l: usize| -> (f64, f64) {
        let (r0, r1) = arc(i, j);
        let (c0, c1) = arc(k, l);
        let m = table.rect(r0, r1, c0, c1);
        let (r0, r1) = arc(j, k);
        let mp = table.rect(r0, r1, l + 1, n) + table.rect(r0, r1, 0, i + 1);
        (m, mp)
    };
    let gap_mid = |k: usize| {
        if k + 1 < n {
            0.5 * (angles[k] + angles[k + 1])
        } else {
            0.5 * (angles[n - 1] + angles[0] + TAU)
        }
    };
    let gap = |c: [usize; 4]| (gap_mid(c[2]) - gap_mid(c[1])).min(gap_mid(c[0]) + TAU - gap_mid(c[3]));
    // Ties go to the box with the wider complementary arcs.
    let better = |x: &(f64, f64, [usize; 4]), y: &(f64, f64, [usize; 4])| {
        y.0 > x.0 + 1e-12 || ((y.0 - x.0).abs() <= 1e-12 && (y.1 > x.1 || (y.1 == x.1 && y.2 < x.2)))
    };
    let none = (-1.0, 0.0, [0, 1, 2, 3]);
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = none;
            for j in i + 1..n {
                for k in j + 1..n.saturating_sub(1) {
                    // μ(B) grows with l while μ(B⊥) shrinks.
                    let (mut lo, mut hi) = (k + 1, n - 1);
                    while lo < hi {
                        let mid = (lo + hi) / 2;
                        let (m, mp) = measure(i, j, k, mid);
                        if m >= mp {
                            hi = mid;
                        } else {
                            lo = mid + 1;
                        }
                    }
                    for l in [lo.saturating_sub(1).max(k + 1), lo] {
                        let (m, mp) = measure(i, j, k, l);
                        let v = m.min(mp);
                        if v + 1e-12 < best.0 {
                            continue;
                        }
                        let cand = (v, gap([i, j, k, l]), [i, j, k, l]);
                        if better(&best, &cand) {
                            best = cand;
                        }
                    }
                }
            }
            best
        })
        .reduce(|| none, |x, y| if better(&x, &y) { y } else { x });
    let [i, j, k, l] = best.2;
    let best_box = GeodesicBox::half_open_from_angles(gap_mid(i), gap_mid(j), gap_mid(k), gap_mid(l))?;
    // Counts over the enumerated atoms only: a lower bound for the box.
    let value = best.0.max(0.0);
    let witness = if value > 0.0 {
        Some(box_witness(mu, &best_box, value, &[4.0, 6.0, 8.0, 10.0, 12.0, search.witness_distance])?)
    } else {
        None
    };
    Ok(DeltaCertificate {
        best_box,
        value,
        truncation_radius: Some(r),
        method: DeltaMethod::AtomCombinatorial,
        witness,
    })
}

/// Point at distance `t` from `p` along the ray toward the ideal point `z`.
pub fn point_toward_ideal(p: &PlanePoint, z: &BoundaryPoint, t: f64) -> PlanePoint {
    let x = p.to_hyperboloid();
    let nz = z.to_null();
    let k = -mdot(&nz, &x);
    let u: Lorentz = [nz[0] / k - x[0], nz[1] / k - x[1], nz[2] / k - x[2]];
    let (c, s) = (t.cosh(), t.sinh());
    PlanePoint::from_timelike(&[c * x[0] + s * u[0], c * x[1] + s * u[1], c * x[2] + s * u[2]]).unwrap_or(*p)
}

/// Quadruple on the rays from `o` toward the box corners.
pub fn corner_quadruple(o: &PlanePoint, b: &GeodesicBox, t: f64) -> [PlanePoint; 4] {
    b.corners().map(|z| point_toward_ideal(o, &z, t))
}

fn box_witness(mu: &GeodesicCurrent, b: &GeodesicBox, value: f64, distances: &[f64]) -> Result<FourPointReport> {
    let o = PlanePoint::i();
    let mut best: Option<FourPointReport> = None;
    for &t in distances {
        // Far points may lie deep in a cusp, beyond what the orbit cap allows.
        let rep = match four_point_defect(mu, &corner_quadruple(&o, b, t)) {
            Ok(rep) => rep,
            Err(Error::BallTooLarge { .. }) if best.is_some() => break,
            Err(e) => return Err(e),
        };
        let done = rep.defect >= 2.0 * value - 1e-9;
        if best.as_ref().is_none_or(|x| rep.defect > x.defect) {
            best = Some(rep);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one distance"))
}

/// The quadrilateral `x, y, z, w` is embedded and convex: both diagonals cross
/// in their interiors.
pub fn convex_position(q: &[PlanePoint; 4]) -> bool {
    let check = || -> Result<bool> {
        let d1 = Segment::closed(q[0], q[2]);
        let d2 = Segment::closed(q[1], q[3]);
        if d1.is_singleton() || d2.is_singleton() {
            return Ok(false);
        }
        Ok(crosses(&d1.line()?, &d2)? == Crossing::Interior && crosses(&d2.line()?, &d1)? == Crossing::Interior)
    };
    check().unwrap_or(false)
}

/// `½ min{μ(G⁺)+μ(G⁻), μ(G⊥⁺)+μ(G⊥⁻)}` for one convex quadrilateral.
pub fn double_transversal_value(mu: &GeodesicCurrent, q: &[PlanePoint; 4]) -> Result<f64> {
    if !convex_position(q) {
        return Err(Error::NotConvexPosition);
    }
    let d = |i: usize, j: usize| dual_distance(mu, &q[i], &q[j]);
    let diag = d(0, 2)? + d(1, 3)?;
    let g = diag - d(3, 2)? - d(0, 1)?;
    let gp = diag - d(1, 2)? - d(0, 3)?;
    Ok(0.5 * g.min(gp).max(0.0))
}

/// Supremum of the double-transversal value over the quadrilaterals.
pub fn delta_via_double_transversals(mu: &GeodesicCurrent, quads: &[[PlanePoint; 4]]) -> Result<f64> {
    let values = quads
        .par_iter()
        .map(|q| double_transversal_value(mu, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Unit tangent at `x` in direction `phi`, measured from the positive real
/// direction.
fn ray_tangent(x: &PlanePoint, phi: f64) -> Lorentz {
    let (px, py) = (x.x(), x.y());
    let y2 = py * py;
    let dx = [px / py, px / py, -1.0 / py];
    let dy = [
        (y2 - px * px - 1.0) / (2.0 * y2),
        (y2 - px * px + 1.0) / (2.0 * y2),
        px / y2,
    ];
    let (c, s) = (phi.cos(), phi.sin());
    [0, 1, 2].map(|k| py * (c * dx[k] + s * dy[k]))
}

/// Point at distance `t` from `x` in direction `phi`.
pub fn ray_point(x: &PlanePoint, phi: f64, t: f64) -> PlanePoint {
    let v = x.to_hyperboloid();
    let u = ray_tangent(x, phi);
    let (c, s) = (t.cosh(), t.sinh());
    PlanePoint::from_timelike(&[c * v[0] + s * u[0], c * v[1] + s * u[1], c * v[2] + s * u[2]]).unwrap_or(*x)
}

/// Direction at `x` of the geodesic toward `q`.
pub fn direction_toward(x: &PlanePoint, q: &PlanePoint) -> f64 {
    let v = x.to_hyperboloid();
    let w = q.to_hyperboloid();
    let e1 = ray_tangent(x, 0.0);
    let e2 = ray_tangent(x, std::f64::consts::FRAC_PI_2);
    let k = -mdot(&v, &w);
    let u = [w[0] - k * v[0], w[1] - k * v[1], w[2] - k * v[2]];
    mdot(&u, &e2).atan2(mdot(&u, &e1))
}

pub fn uniform_directions(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * (k as f64 + 0.25) / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FillingProbe {
    /// Every sampled ray leaves the `d_μ`-ball within this hyperbolic radius.
    BoundedWithin(f64),
    /// Along this direction `d_μ` stays at most `r` out to `reached`.
    EscapeWitness { direction: f64, reached: f64 },
}

/// Marches along rays from `x` until `d_μ` exceeds `r`.
pub fn filling_ball_probe(
    mu: &GeodesicCurrent,
    x: &PlanePoint,
    r: f64,
    directions: &[f64],
    max_radius: f64,
) -> Result<FillingProbe> {
    const STEP: f64 = 0.25;
    let exits = directions
        .par_iter()
        .map(|&phi| -> Result<Option<f64>> {
            let d = |t: f64| dual_distance(mu, x, &ray_point(x, phi, t));
            let mut lo = 0.0;
            let mut hi = None;
            let mut t = STEP;
            while t <= max_radius + 1e-12 {
                if d(t)? > r {
                    hi = Some(t);
                    break;
                }
                lo = t;
                t += STEP;
            }
            let Some(mut hi) = hi else {
                return Ok(None);
            };
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if d(mid)? > r {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(Some(hi))
        })
        .collect::<Result<Vec<_>>>()?;
    for (phi, e) in directions.iter().zip(&exits) {
        if e.is_none() {
            return Ok(FillingProbe::EscapeWitness {
                direction: *phi,
                reached: max_radius,
            });
        }
    }
    Ok(FillingProbe::BoundedWithin(exits.into_iter().flatten().fold(0.0, f64::max)))
}

/// Geodesic along which `d_μ` vanishes: the axis of `g` when `ℓ_μ(g) = 0`.
pub fn collapsed_axis(mu: &GeodesicCurrent, g: &GroupElement) -> Result<Option<Geodesic>> {
    (translation_length(mu, g)? <= SAME_POINT_TOL).then(|| g.axis()).transpose()
}

/// `log 2`, the hyperbolicity constant of the Liouville dual.
pub const LIOUVILLE_DELTA: f64 = LN_2;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::SurfacePresentation;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn torus() -> Arc<SurfacePresentation> {
        Arc::new(SurfacePresentation::preset("punctured_torus").unwrap())
    }

    fn pt(x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x, y).unwrap()
    }

    #[test]
    fn liouville_distance_examples() {
        let l = GeodesicCurrent::liouville(torus(), 1.0).unwrap();
        assert_abs_diff_eq!(dual_distance(&l, &pt(0.0, 1.0), &pt(0.0, 2.0)).unwrap(), LN_2, epsilon = 1e-14);
        assert_eq!(dual_distance(&l, &pt(0.3, 1.0), &pt(0.3, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn atomic_distance_examples() {
        let p = torus();
        let mu = GeodesicCurrent::atomic(p.clone(), &[("a", 2.5)]).unwrap();
        let ax = p.parse_element("a").unwrap().axis().unwrap();
        let foot = ax.foot();
        let phi = direction_toward(&foot, &ax.point_at(&foot, 1.0)) + std::f64::consts::FRAC_PI_2;
        let (p1, p2) = (ray_point(&foot, phi, 0.1), ray_point(&foot, phi, -0.1));
        assert_eq!(dual_distance(&mu, &p1, &p2).unwrap(), 2.5);
        assert_eq!(dual_distance(&mu, &foot, &p1).unwrap(), 1.25);
        assert!(same_point(&mu, &foot, &ax.point_at(&foot, 0.7)).unwrap());
    }

    #[test]
    fn ray_helpers_are_consistent() {
        let x = pt(0.4, 0.7);
        for phi in [0.0, 1.0, 2.5, -2.0] {
            let q = ray_point(&x, phi, 1.3);
            assert_abs_diff_eq!(hyp_distance(&x, &q), 1.3, epsilon = 1e-12);
            let back = direction_toward(&x, &q);
            assert_abs_diff_eq!((back - phi).sin(), 0.0, epsilon = 1e-12);
            assert!((back - phi).cos() > 0.0);
        }
        let z = BoundaryPoint::from_real(2.0);
        let q = point_toward_ideal(&x, &z, 3.0);
        assert_abs_diff_eq!(hyp_distance(&x, &q), 3.0, epsilon = 1e-12);
        let g = Geodesic::through(&x, &q).unwrap();
        assert!(g.endpoints().iter().any(|e| e.coincides(&z)));
    }

    #[test]
    fn translation_length_examples() {
        let p = torus();
        let b = GeodesicCurrent::atomic(p.clone(), &[("b", 1.0)]).unwrap();
        assert_eq!(translation_length(&b, &p.parse_element("a").unwrap()).unwrap(), 1.0);
        assert_eq!(translation_length(&b, &p.parse_element("b").unwrap()).unwrap(), 0.0);
        let l = GeodesicCurrent::liouville(p.clone(), 1.0).unwrap();
        for w in ["a", "ab", "aB", "aab"] {
            let g = p.parse_element(w).unwrap();
            assert_abs_diff_eq!(
                translation_length(&l, &g).unwrap(),
                g.translation_length().unwrap(),
                epsilon = 1e-9
            );
        }
        assert!(matches!(
            translation_length(&l, &p.parse_element("abAB").unwrap()),
            Err(Error::NotHyperbolic { .. })
        ));
    }

    #[test]
    fn four_point_examples() {
        let l = GeodesicCurrent::liouville(torus(), 1.0).unwrap();
        let x = pt(0.1, 0.9);
        assert_eq!(four_point_defect(&l, &[x; 4]).unwrap().defect, 0.0);
        let b = GeodesicBox::half_open_from_angles(0.0, 1.5, 3.0, 4.5).unwrap();
        let rep = four_point_defect(&l, &corner_quadruple(&PlanePoint::i(), &b, 10.0)).unwrap();
        assert!(rep.defect <= 2.0 * LN_2 + 1e-6);
    }

    #[test]
    fn liouville_delta_is_log_two() {
        let l = GeodesicCurrent::liouville(torus(), 1.0).unwrap();
        for grid in [4, 8, 16] {
            let cert = delta_lower_bound_boxes(&l, &DeltaSearch { grid, ..Default::default() }).unwrap();
            assert_abs_diff_eq!(cert.value, LN_2, epsilon = 1e-6);
            let w = cert.witness.unwrap();
            assert!(w.defect >= 2.0 * cert.value - 1e-3, "{}", w.defect);
        }
        let l2 = GeodesicCurrent::liouville(torus(), 3.0).unwrap();
        let cert = delta_lower_bound_boxes(&l2, &DeltaSearch::default()).unwrap();
        assert_abs_diff_eq!(cert.value, 3.0 * LN_2, epsilon = 1e-6);
    }

    #[test]
    fn simple_curve_delta_is_zero() {
        let p = torus();
        let a = GeodesicCurrent::atomic(p.clone(), &[("a", 1.0)]).unwrap();
        let cert = delta_lower_bound_boxes(&a, &DeltaSearch { radius: 3.0, ..Default::default() }).unwrap();
        assert_eq!(cert.value, 0.0);
    }

    #[test]
    fn crossing_pair_delta_is_positive() {
        let p = torus();
        let ab = GeodesicCurrent::atomic(p.clone(), &[("a", 1.0), ("b", 1.0)]).unwrap();
        let cert = delta_lower_bound_boxes(&ab, &DeltaSearch { radius: 2.5, ..Default::default() }).unwrap();
        assert!(cert.value > 0.0);
        let recomputed = box_min(&ab, &cert.best_box).unwrap();
        assert!(cert.value <= recomputed + 1e-9);
        let w = cert.witness.unwrap();
        assert!(w.defect >= 2.0 * cert.value - 1e-3, "{} vs {}", w.defect, cert.value);
        // Brute force over all corner choices at a small radius.
        let small = delta_lower_bound_boxes(&ab, &DeltaSearch { radius: 1.2, ..Default::default() }).unwrap();
        let atoms = ab.as_atomic().unwrap();
        let mut ends = Vec::new();
        for (idx, _) in atoms.components().iter().enumerate() {
            for ax in atoms.orbit(idx, 1.2).unwrap().within(1.2) {
                ends.extend(ax.axis.endpoints().map(|e| e.angle()));
            }
        }
        ends.sort_by(f64::total_cmp);
        let n = ends.len();
        let mids: Vec<f64> = (0..n)
            .map(|k| if k + 1 < n { 0.5 * (ends[k] + ends[k + 1]) } else { 0.5 * (ends[n - 1] + ends[0] + TAU) })
            .collect();
        let mut brute: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for l in k + 1..n {
                        let b = GeodesicBox::half_open_from_angles(mids[i], mids[j], mids[k], mids[l]).unwrap();
                        let mut m = [0.0, 0.0];
                        for (idx, comp) in atoms.components().iter().enumerate() {
                            for ax in atoms.orbit(idx, 1.2).unwrap().within(1.2) {
                                if b.contains(&ax.axis) {
                                    m[0] += comp.weight;
                                }
                                if b.opposite().contains(&ax.axis) {
                                    m[1] += comp.weight;
                                }
                            }
                        }
                        brute = brute.max(m[0].min(m[1]));
                    }
                }
            }
        }
        assert!(small.value >= brute);
    }

    #[test]
    fn double_transversals_examples() {
        let l = GeodesicCurrent::liouville(torus(), 1.0).unwrap();
        let q = std::f64::consts::FRAC_PI_2;
        let b = GeodesicBox::half_open_from_angles(0.3, 0.3 + q, 0.3 + 2.0 * q, 0.3 + 3.0 * q).unwrap();
        let quads: Vec<_> = [4.0, 8.0, 14.0]
            .iter()
            .map(|&t| corner_quadruple(&PlanePoint::i(), &b, t))
            .collect();
        let v = delta_via_double_transversals(&l, &quads).unwrap();
        let boxes = delta_lower_bound_boxes(&l, &DeltaSearch::default()).unwrap();
        assert!((v - boxes.value).abs() < 2e-3, "{v}");
        let a = GeodesicCurrent::atomic(torus(), &[("a", 1.0)]).unwrap();
        assert_eq!(delta_via_double_transversals(&a, &quads).unwrap(), 0.0);
        let line = [pt(0.0, 1.0), pt(0.0, 2.0), pt(0.0, 3.0), pt(1.0, 1.0)];
        assert!(matches!(
            delta_via_double_transversals(&l, &[line]),
            Err(Error::NotConvexPosition)
        ));
    }

    #[test]
    fn filling_probe_examples() {
        let p = torus();
        let a = GeodesicCurrent::atomic(p.clone(), &[("a", 1.0)]).unwrap();
        let ax = p.parse_element("a").unwrap().axis().unwrap();
        let x = ax.foot();
        let along = direction_toward(&x, &ax.point_at(&x, 1.0));
        let probe = filling_ball_probe(&a, &x, 0.5, &[along], 8.0).unwrap();
        assert!(matches!(probe, FillingProbe::EscapeWitness { .. }));

        let l = GeodesicCurrent::liouville(p.clone(), 2.0).unwrap();
        let probe = filling_ball_probe(&l, &pt(0.2, 1.1), 3.0, &uniform_directions(6), 10.0).unwrap();
        match probe {
            FillingProbe::BoundedWithin(r) => assert_abs_diff_eq!(r, 1.5, epsilon = 1e-8),
            other => panic!("{other:?}"),
        }

        let ab = GeodesicCurrent::atomic(p, &[("a", 1.0), ("b", 1.0)]).unwrap();
        let probe = filling_ball_probe(&ab, &pt(0.2, 1.1), 0.75, &uniform_directions(8), 10.0).unwrap();
        assert!(matches!(probe, FillingProbe::BoundedWithin(r) if r < 5.0));
    }

    #[test]
    fn collapsed_axis_for_own_curve() {
        let p = torus();
        let a = GeodesicCurrent::atomic(p.clone(), &[("a", 1.0)]).unwrap();
        assert!(collapsed_axis(&a, &p.parse_element("a").unwrap()).unwrap().is_some());
        assert!(collapsed_axis(&a, &p.parse_element("b").unwrap()).unwrap().is_none());
    }

    fn arb_point() -> impl Strategy<Value = PlanePoint> {
        (-2.0f64..2.0, -1.5f64..1.5).prop_map(|(x, ly)| pt(x, ly.exp()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn metric_axioms(p in arb_point(), q in arb_point(), r in arb_point()) {
            let pres = torus();
            for mu in [
                GeodesicCurrent::atomic(pres.clone(), &[("a", 1.0), ("b", 0.5), ("ab", 2.0)]).unwrap(),
                GeodesicCurrent::liouville(pres.clone(), 1.5).unwrap(),
            ] {
                let pq = dual_distance(&mu, &p, &q).unwrap();
                prop_assert_eq!(pq, dual_distance(&mu, &q, &p).unwrap());
                let qr = dual_distance(&mu, &q, &r).unwrap();
                let pr = dual_distance(&mu, &p, &r).unwrap();
                prop_assert!(pr <= pq + qr + 1e-9);
            }
        }

        #[test]
        fn straightness(p in arb_point(), q in arb_point(), t in 0.0f64..1.0) {
            let pres = torus();
            let mu = GeodesicCurrent::atomic(pres.clone(), &[("a", 1.0), ("aB", 1.5)]).unwrap();
            let m = point_toward(&p, &q, t * hyp_distance(&p, &q));
            let whole = dual_distance(&mu, &p, &q).unwrap();
            let parts = dual_distance(&mu, &p, &m).unwrap() + dual_distance(&mu, &m, &q).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-9);
        }

        #[test]
        fn equivariance(p in arb_point(), q in arb_point(), word in proptest::sample::select(vec!["a", "b", "aB", "ABa"])) {
            let pres = torus();
            let mu = GeodesicCurrent::atomic(pres.clone(), &[("a", 1.0), ("b", 2.0)]).unwrap();
            let g = pres.parse_element(word).unwrap();
            let d0 = dual_distance(&mu, &p, &q).unwrap();
            let d1 = dual_distance(&mu, &g.apply(&p), &g.apply(&q)).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-9);
        }

        #[test]
        fn scaling(p in arb_point(), q in arb_point(), c in 0.1f64..5.0) {
            let pres = torus();
            let mu = GeodesicCurrent::atomic(pres.clone(), &[("a", 1.0), ("b", 2.0)]).unwrap();
            let d0 = dual_distance(&mu, &p, &q).unwrap();
            let d1 = dual_distance(&mu.scaled(c).unwrap(), &p, &q).unwrap();
            prop_assert!((c * d0 - d1).abs() <= 1e-9);
        }
    }

    use crate::hyperbolic::point_toward;

    #[test]
    fn homogeneity_of_translation_length() {
        let p = torus();
        let mu = GeodesicCurrent::atomic(p.clone(), &[("a", 1.0), ("b", 1.0)]).unwrap();
        let l = GeodesicCurrent::liouville(p.clone(), 1.0).unwrap();
        for w in ["a", "ab", "aB"] {
            let g = p.parse_element(w).unwrap();
            let (t1, s1) = (translation_length(&mu, &g).unwrap(), translation_length(&l, &g).unwrap());
            for n in 2..=5u32 {
                let gn = p.element(g.word.pow(n));
                assert_eq!(translation_length(&mu, &gn).unwrap(), n as f64 * t1);
                assert_abs_diff_eq!(translation_length(&l, &gn).unwrap(), n as f64 * s1, epsilon = 1e-8);
            }
        }
    }
}
