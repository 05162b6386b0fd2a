//! Points, boundary points, isometries, geodesics, segments and boxes of the
//! hyperbolic plane.
//!
//! Matrices act on the upper half-plane. Boundary points are stored as angles
//! on the unit circle through the Cayley map `z -> (z - i)/(z + i)`, so that
//! counter-clockwise order on the circle is increasing order on the real line.
//! Incidence predicates are evaluated on the hyperboloid model.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{det2, wrap_angle};

/// Classification tolerance on `|tr| - 2`.
pub const TAU_TRACE: f64 = 1e-9;
/// A point within this distance of a geodesic lies on it.
pub const TAU_ON: f64 = 1e-10;
/// Boundary points closer than this are identified.
pub const TAU_SEP: f64 = 1e-9;

const LOAD_DET_TOL: f64 = 1e-8;

/// Vector in Minkowski space `R^{2,1}` with form `-x0 y0 + x1 y1 + x2 y2`.
pub type Lorentz = [f64; 3];

pub fn mdot(u: &Lorentz, v: &Lorentz) -> f64 {
    -u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// Minkowski cross product: orthogonal to `u` and `v` for the Minkowski form.
pub fn mcross(u: &Lorentz, v: &Lorentz) -> Lorentz {
    [
        -det2(u[1], u[2], v[1], v[2]),
        det2(u[2], u[0], v[2], v[0]),
        det2(u[0], u[1], v[0], v[1]),
    ]
}

/// Point of the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanePoint {
    z: Complex64,
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::NotInPlane);
        }
        Ok(Self {
            z: Complex64::new(x, y),
        })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    /// The basepoint `i`.
    pub fn i() -> Self {
        Self {
            z: Complex64::new(0.0, 1.0),
        }
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn x(&self) -> f64 {
        self.z.re
    }

    pub fn y(&self) -> f64 {
        self.z.im
    }

    pub fn to_hyperboloid(&self) -> Lorentz {
        let (x, y) = (self.z.re, self.z.im);
        let r2 = x * x + y * y;
        [(r2 + 1.0) / (2.0 * y), (r2 - 1.0) / (2.0 * y), -x / y]
    }

    /// Inverse of [`PlanePoint::to_hyperboloid`] for a point of the upper sheet.
    pub fn from_hyperboloid(v: &Lorentz) -> Result<Self> {
        if !(v[0] > 0.0) || !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NotInPlane);
        }
        // x0 - x1 = 1/y, computed without cancellation when x1 > 0.
        let y = if v[1] > 0.0 {
            (v[0] + v[1]) / (1.0 + v[2] * v[2])
        } else {
            1.0 / (v[0] - v[1])
        };
        Self::new(-v[2] * y, y)
    }

    /// Point on the ray of a future timelike vector.
    pub fn from_timelike(v: &Lorentz) -> Result<Self> {
        let n = -mdot(v, v);
        if !(n > 0.0) {
            return Err(Error::NotInPlane);
        }
        let s = v[0].signum() / n.sqrt();
        Self::from_hyperboloid(&[v[0] * s, v[1] * s, v[2] * s])
    }

    /// Coordinates in the Klein disk, with `i` at the origin.
    pub fn to_klein(&self) -> [f64; 2] {
        let v = self.to_hyperboloid();
        [v[1] / v[0], v[2] / v[0]]
    }

    pub fn from_klein(k: [f64; 2]) -> Result<Self> {
        let r2 = k[0] * k[0] + k[1] * k[1];
        if !(r2 < 1.0) {
            return Err(Error::NotInPlane);
        }
        Self::from_timelike(&[1.0, k[0], k[1]])
    }

    /// Coordinates in the Poincaré disk, with `i` at the origin.
    pub fn to_disk(&self) -> Complex64 {
        let i = Complex64::i();
        (self.z - i) / (self.z + i)
    }

    pub fn from_disk(w: Complex64) -> Result<Self> {
        if !(w.norm_sqr() < 1.0) {
            return Err(Error::NotInPlane);
        }
        let s = 1.0 / (1.0 - w.norm_sqr());
        Self::from_hyperboloid(&[(1.0 + w.norm_sqr()) * s, 2.0 * w.re * s, 2.0 * w.im * s])
    }
}

impl serde::Serialize for PlanePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x(), self.y()].serialize(s)
    }
}

impl fmt::Display for PlanePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.z.re, self.z.im)
    }
}

/// Point of the circle at infinity, stored by its angle in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct BoundaryPoint {
    theta: f64,
}

impl BoundaryPoint {
    pub fn from_angle(theta: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
        }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_angle(2.0 * (1.0f64).atan2(-x))
    }

    pub fn infinity() -> Self {
        Self { theta: 0.0 }
    }

    pub fn angle(&self) -> f64 {
        self.theta
    }

    /// Extended-real coordinate; `None` stands for `∞`.
    pub fn to_real(&self) -> Option<f64> {
        if self.theta == 0.0 {
            None
        } else {
            let h = self.theta / 2.0;
            Some(-h.cos() / h.sin())
        }
    }

    pub fn to_null(&self) -> Lorentz {
        [1.0, self.theta.cos(), self.theta.sin()]
    }

    pub fn to_unit(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }

    /// Counter-clockwise angle from `self` to `other`, in `[0, 2π)`.
    pub fn ccw_to(&self, other: &BoundaryPoint) -> f64 {
        wrap_angle(other.theta - self.theta)
    }

    /// Length of the shorter arc between the points.
    pub fn separation(&self, other: &BoundaryPoint) -> f64 {
        let d = self.ccw_to(other);
        d.min(TAU - d)
    }

    pub fn coincides(&self, other: &BoundaryPoint) -> bool {
        self.separation(other) <= TAU_SEP
    }
}

/// Kind of an isometry by trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Element of PSL(2, R), stored with unit determinant and the first
/// non-negligible entry positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    m: [f64; 4],
}

impl Isometry {
    /// Validates the determinant, then renormalizes.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = det2(a, b, c, d);
        if !det.is_finite() || (det - 1.0).abs() > LOAD_DET_TOL {
            return Err(Error::InvalidMatrix { det });
        }
        Ok(Self::normalized([a, b, c, d]))
    }

    pub fn identity() -> Self {
        Self {
            m: [1.0, 0.0, 0.0, 1.0],
        }
    }

    fn normalized(m: [f64; 4]) -> Self {
        let det = det2(m[0], m[1], m[2], m[3]);
        let s = 1.0 / det.sqrt();
        let mut m = m.map(|x| x * s);
        let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if let Some(first) = m.iter().find(|x| x.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                m = m.map(|x| -x);
            }
        }
        Self { m }
    }

    pub fn entries(&self) -> [f64; 4] {
        self.m
    }

    pub fn det(&self) -> f64 {
        det2(self.m[0], self.m[1], self.m[2], self.m[3])
    }

    pub fn trace(&self) -> f64 {
        self.m[0] + self.m[3]
    }

    pub fn inverse(&self) -> Self {
        let [a, b, c, d] = self.m;
        Self::normalized([d, -b, -c, a])
    }

    pub fn classify(&self) -> Classification {
        let [a, b, c, d] = self.m;
        let dev = (a - 1.0).abs().max(b.abs()).max(c.abs()).max((d - 1.0).abs());
        if dev <= TAU_TRACE {
            return Classification::Identity;
        }
        let t = self.trace().abs();
        if t > 2.0 + TAU_TRACE {
            Classification::Hyperbolic
        } else if t >= 2.0 - TAU_TRACE {
            Classification::Parabolic
        } else {
            Classification::Elliptic
        }
    }

    /// Max-entry distance from `±I`.
    pub fn distance_from_identity(&self) -> f64 {
        let [a, b, c, d] = self.m;
        let plus = (a - 1.0).abs().max(b.abs()).max(c.abs()).max((d - 1.0).abs());
        let minus = (a + 1.0).abs().max(b.abs()).max(c.abs()).max((d + 1.0).abs());
        plus.min(minus)
    }

    pub fn apply(&self, p: &PlanePoint) -> PlanePoint {
        let [a, b, c, d] = self.m;
        let (x, y) = (p.x(), p.y());
        let cx_d = c * x + d;
        let den = cx_d * cx_d + c * c * y * y;
        let re = ((a * x + b) * cx_d + a * c * y * y) / den;
        let im = y / den;
        PlanePoint {
            z: Complex64::new(re, im),
        }
    }

    /// Disk-model coefficients `(α, β)` with `w -> (αw + β)/(conj(β) w + conj(α))`.
    fn disk_coefficients(&self) -> (Complex64, Complex64) {
        let [a, b, c, d] = self.m;
        (
            Complex64::new(a + d, b - c) / 2.0,
            Complex64::new(a - d, -(b + c)) / 2.0,
        )
    }

    pub fn apply_boundary(&self, p: &BoundaryPoint) -> BoundaryPoint {
        let (alpha, beta) = self.disk_coefficients();
        let w = p.to_unit();
        let img = (alpha * w + beta) / (beta.conj() * w + alpha.conj());
        BoundaryPoint::from_angle(img.arg())
    }

    pub fn apply_geodesic(&self, g: &Geodesic) -> Geodesic {
        let [p, q] = g.endpoints();
        Geodesic::new_unchecked(self.apply_boundary(&p), self.apply_boundary(&q))
    }

    pub fn apply_segment(&self, s: &Segment) -> Segment {
        Segment {
            a: self.apply(&s.a),
            b: self.apply(&s.b),
            include_a: s.include_a,
            include_b: s.include_b,
        }
    }

    pub fn apply_interval(&self, i: &BoundaryInterval) -> BoundaryInterval {
        BoundaryInterval {
            start: self.apply_boundary(&i.start),
            end: self.apply_boundary(&i.end),
            include_start: i.include_start,
            include_end: i.include_end,
        }
    }

    pub fn apply_box(&self, b: &GeodesicBox) -> GeodesicBox {
        GeodesicBox {
            i: self.apply_interval(&b.i),
            j: self.apply_interval(&b.j),
        }
    }

    /// Hyperbolic distance from `p` to its image.
    pub fn displacement(&self, p: &PlanePoint) -> f64 {
        hyp_distance(p, &self.apply(p))
    }

    /// Fixed points on the boundary as `(repelling, attracting)`.
    pub fn fixed_points(&self) -> Result<(BoundaryPoint, BoundaryPoint)> {
        if self.classify() != Classification::Hyperbolic {
            return Err(Error::NotHyperbolic {
                trace: self.trace().abs(),
            });
        }
        let [a, b, c, d] = self.m;
        let (alpha, beta) = self.disk_coefficients();
        let t = a + d;
        let s = ((t - 2.0) * (t + 2.0)).sqrt();
        let bc = beta.conj();
        let w1 = Complex64::new(s, b - c) / (2.0 * bc);
        let w2 = Complex64::new(-s, b - c) / (2.0 * bc);
        let p1 = BoundaryPoint::from_angle(w1.arg());
        let p2 = BoundaryPoint::from_angle(w2.arg());
        let grow1 = (bc * w1.unscale(w1.norm()) + alpha.conj()).norm();
        let grow2 = (bc * w2.unscale(w2.norm()) + alpha.conj()).norm();
        if grow1 > grow2 {
            Ok((p2, p1))
        } else {
            Ok((p1, p2))
        }
    }

    pub fn axis(&self) -> Result<Geodesic> {
        let (r, a) = self.fixed_points()?;
        Ok(Geodesic::new_unchecked(r, a))
    }
}

impl Mul for Isometry {
    type Output = Isometry;

    fn mul(self, rhs: Isometry) -> Isometry {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = rhs.m;
        Isometry::normalized([
            a.mul_add(e, b * g),
            a.mul_add(f, b * h),
            c.mul_add(e, d * g),
            c.mul_add(f, d * h),
        ])
    }
}

impl fmt::Display for Isometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.m;
        write!(f, "[[{a}, {b}], [{c}, {d}]]")
    }
}

/// `2 acosh(|tr g| / 2)`.
pub fn trace_translation_length(g: &Isometry) -> Result<f64> {
    if g.classify() != Classification::Hyperbolic {
        return Err(Error::NotHyperbolic {
            trace: g.trace().abs(),
        });
    }
    Ok(2.0 * (g.trace().abs() / 2.0).acosh())
}

pub fn hyp_distance(p: &PlanePoint, q: &PlanePoint) -> f64 {
    let chord = (p.z - q.z).norm();
    2.0 * (chord / (2.0 * (p.y() * q.y()).sqrt())).asinh()
}

/// Distance between points of the hyperboloid.
pub fn hyperboloid_distance(p: &Lorentz, q: &Lorentz) -> f64 {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    let n = mdot(&d, &d).max(0.0);
    2.0 * (n.sqrt() / 2.0).asinh()
}

/// Unordered pair of distinct boundary points, stored with increasing angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geodesic {
    ends: [BoundaryPoint; 2],
    normal: Lorentz,
}

impl Geodesic {
    pub fn new(p: BoundaryPoint, q: BoundaryPoint) -> Result<Self> {
        if p.coincides(&q) {
            return Err(Error::DegenerateGeodesic);
        }
        Ok(Self::new_unchecked(p, q))
    }

    fn new_unchecked(p: BoundaryPoint, q: BoundaryPoint) -> Self {
        let (p, q) = if p.theta <= q.theta { (p, q) } else { (q, p) };
        let half = (q.theta - p.theta) / 2.0;
        let mid = (q.theta + p.theta) / 2.0;
        let s = half.sin();
        let normal = [half.cos() / s, mid.cos() / s, mid.sin() / s];
        Self { ends: [p, q], normal }
    }

    /// Geodesic with the given unit spacelike normal.
    pub fn from_normal(n: &Lorentz) -> Result<Self> {
        let r = n[1].hypot(n[2]);
        if !(r > 0.0) {
            return Err(Error::DegenerateGeodesic);
        }
        let phi = n[2].atan2(n[1]);
        let half = mdot(n, n).max(0.0).sqrt().atan2(n[0]);
        Self::new(
            BoundaryPoint::from_angle(phi - half),
            BoundaryPoint::from_angle(phi + half),
        )
    }

    /// The geodesic through two distinct points.
    pub fn through(p: &PlanePoint, q: &PlanePoint) -> Result<Self> {
        let n = mcross(&p.to_hyperboloid(), &q.to_hyperboloid());
        let len2 = mdot(&n, &n);
        if !(len2 > 0.0) {
            return Err(Error::DegenerateGeodesic);
        }
        let s = len2.sqrt();
        Self::from_normal(&[n[0] / s, n[1] / s, n[2] / s])
    }

    pub fn from_reals(x: Option<f64>, y: Option<f64>) -> Result<Self> {
        let f = |v: Option<f64>| v.map_or(BoundaryPoint::infinity(), BoundaryPoint::from_real);
        Self::new(f(x), f(y))
    }

    pub fn endpoints(&self) -> [BoundaryPoint; 2] {
        self.ends
    }

    pub fn normal(&self) -> Lorentz {
        self.normal
    }

    /// Signed `sinh` of the distance from `p`; the sign tells the side.
    pub fn side(&self, p: &PlanePoint) -> f64 {
        mdot(&self.normal, &p.to_hyperboloid())
    }

    pub fn side_of_hyperboloid(&self, v: &Lorentz) -> f64 {
        mdot(&self.normal, v)
    }

    pub fn distance_to(&self, p: &PlanePoint) -> f64 {
        self.side(p).abs().asinh()
    }

    /// Distance from the basepoint `i`.
    pub fn distance_from_origin(&self) -> f64 {
        self.normal[0].abs().asinh()
    }

    pub fn contains_point(&self, p: &PlanePoint) -> bool {
        self.side(p).abs() <= TAU_ON
    }

    /// Same endpoint pair up to `TAU_SEP`.
    pub fn same_as(&self, other: &Geodesic) -> bool {
        (self.ends[0].coincides(&other.ends[0]) && self.ends[1].coincides(&other.ends[1]))
            || (self.ends[0].coincides(&other.ends[1]) && self.ends[1].coincides(&other.ends[0]))
    }

    /// Endpoint pairs separate each other strictly.
    pub fn links(&self, other: &Geodesic) -> bool {
        let [p, q] = self.ends;
        let span = p.ccw_to(&q);
        let inside = |x: &BoundaryPoint| {
            let o = p.ccw_to(x);
            o > TAU_SEP && o < span - TAU_SEP
        };
        let outside = |x: &BoundaryPoint| {
            let o = p.ccw_to(x);
            o > span + TAU_SEP && o < TAU - TAU_SEP
        };
        let [r, s] = other.ends;
        (inside(&r) && outside(&s)) || (inside(&s) && outside(&r))
    }

    /// Intersection point with a linked geodesic.
    pub fn intersection(&self, other: &Geodesic) -> Option<PlanePoint> {
        if !self.links(other) {
            return None;
        }
        let x = mcross(&self.normal, &other.normal);
        PlanePoint::from_timelike(&x).ok()
    }

    /// Orthogonal projection of `p`.
    pub fn project(&self, p: &PlanePoint) -> PlanePoint {
        let v = p.to_hyperboloid();
        let s = mdot(&self.normal, &v);
        let n = self.normal;
        let k = 1.0 / (1.0 + s * s).sqrt();
        let q = [(v[0] - s * n[0]) * k, (v[1] - s * n[1]) * k, (v[2] - s * n[2]) * k];
        PlanePoint::from_hyperboloid(&q).unwrap_or(*p)
    }

    /// Foot of the perpendicular from the basepoint.
    pub fn foot(&self) -> PlanePoint {
        self.project(&PlanePoint::i())
    }

    /// Point at signed distance `t` from `base` along the geodesic, `base`
    /// being a point on it; positive `t` moves toward the larger-angle end.
    pub fn point_at(&self, base: &PlanePoint, t: f64) -> PlanePoint {
        let v = base.to_hyperboloid();
        let u = self.tangent_at(&v);
        let (c, s) = (t.cosh(), t.sinh());
        let p = [c * v[0] + s * u[0], c * v[1] + s * u[1], c * v[2] + s * u[2]];
        PlanePoint::from_hyperboloid(&p).unwrap_or(*base)
    }

    fn tangent_at(&self, v: &Lorentz) -> Lorentz {
        let u = mcross(&self.normal, v);
        let n = mdot(&u, &u).sqrt();
        let mut u = [u[0] / n, u[1] / n, u[2] / n];
        let end = self.ends[1].to_null();
        if mdot(&u, &end) < 0.0 {
            u = u.map(|x| -x);
        }
        u
    }
}

/// Geodesic segment between two points with endpoint inclusion flags.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: PlanePoint,
    pub b: PlanePoint,
    pub include_a: bool,
    pub include_b: bool,
}

impl Segment {
    pub fn new(a: PlanePoint, b: PlanePoint, include_a: bool, include_b: bool) -> Result<Self> {
        if a == b && !(include_a && include_b) {
            return Err(Error::DegenerateSegment);
        }
        Ok(Self {
            a,
            b,
            include_a,
            include_b,
        })
    }

    pub fn closed(a: PlanePoint, b: PlanePoint) -> Self {
        Self {
            a,
            b,
            include_a: true,
            include_b: true,
        }
    }

    /// `[a, b)`.
    pub fn half_open(a: PlanePoint, b: PlanePoint) -> Self {
        Self {
            a,
            b,
            include_a: true,
            include_b: false,
        }
    }

    /// `(a, b]`.
    pub fn half_open_end(a: PlanePoint, b: PlanePoint) -> Self {
        Self {
            a,
            b,
            include_a: false,
            include_b: true,
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.a == self.b
    }

    pub fn length(&self) -> f64 {
        hyp_distance(&self.a, &self.b)
    }

    pub fn reversed(&self) -> Self {
        Self {
            a: self.b,
            b: self.a,
            include_a: self.include_b,
            include_b: self.include_a,
        }
    }

    pub fn line(&self) -> Result<Geodesic> {
        Geodesic::through(&self.a, &self.b)
    }

    /// Point at distance `t` from `a` toward `b`.
    pub fn point_at(&self, t: f64) -> PlanePoint {
        point_toward(&self.a, &self.b, t)
    }

    pub fn midpoint(&self) -> PlanePoint {
        self.point_at(self.length() / 2.0)
    }
}

/// Point at distance `t` from `p` on the ray toward `q`.
pub fn point_toward(p: &PlanePoint, q: &PlanePoint, t: f64) -> PlanePoint {
    let d = hyp_distance(p, q);
    if d == 0.0 {
        return *p;
    }
    let u = p.to_hyperboloid();
    let v = q.to_hyperboloid();
    let ch = d.cosh();
    let sh = d.sinh();
    let tan = [
        (v[0] - ch * u[0]) / sh,
        (v[1] - ch * u[1]) / sh,
        (v[2] - ch * u[2]) / sh,
    ];
    let (c, s) = (t.cosh(), t.sinh());
    let w = [
        c * u[0] + s * tan[0],
        c * u[1] + s * tan[1],
        c * u[2] + s * tan[2],
    ];
    PlanePoint::from_hyperboloid(&w).unwrap_or(*p)
}

/// How a geodesic meets a segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Crossing {
    Interior,
    AtA,
    AtB,
    None,
}

/// Classifies the transverse intersection of `g` with the closed segment
/// underlying `s`. A geodesic containing the segment does not cross it.
pub fn crosses(g: &Geodesic, s: &Segment) -> Result<Crossing> {
    if s.is_singleton() {
        return Err(Error::DegenerateSegment);
    }
    Ok(classify_sides(
        g.side(&s.a),
        g.side(&s.b),
    ))
}

pub(crate) fn classify_sides(sa: f64, sb: f64) -> Crossing {
    let on_a = sa.abs() <= TAU_ON;
    let on_b = sb.abs() <= TAU_ON;
    match (on_a, on_b) {
        (true, true) => Crossing::None,
        (true, false) => Crossing::AtA,
        (false, true) => Crossing::AtB,
        (false, false) if (sa < 0.0) != (sb < 0.0) => Crossing::Interior,
        _ => Crossing::None,
    }
}

/// Counter-clockwise arc of the boundary from `start` to `end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryInterval {
    pub start: BoundaryPoint,
    pub end: BoundaryPoint,
    pub include_start: bool,
    pub include_end: bool,
}

impl BoundaryInterval {
    pub fn new(start: BoundaryPoint, end: BoundaryPoint, include_start: bool, include_end: bool) -> Self {
        Self {
            start,
            end,
            include_start,
            include_end,
        }
    }

    pub fn closed(start: BoundaryPoint, end: BoundaryPoint) -> Self {
        Self::new(start, end, true, true)
    }

    pub fn half_open(start: BoundaryPoint, end: BoundaryPoint) -> Self {
        Self::new(start, end, true, false)
    }

    /// Counter-clockwise length, zero for a singleton.
    pub fn length(&self) -> f64 {
        if self.start.coincides(&self.end) {
            0.0
        } else {
            self.start.ccw_to(&self.end)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.length() == 0.0 && !(self.include_start && self.include_end)
    }

    pub fn contains(&self, p: &BoundaryPoint) -> bool {
        let len = self.length();
        if p.coincides(&self.start) {
            return self.include_start && (len > 0.0 || self.include_end);
        }
        if p.coincides(&self.end) {
            return self.include_end && (len > 0.0 || self.include_start);
        }
        len > 0.0 && self.start.ccw_to(p) < len
    }

    pub fn closure(&self) -> Self {
        Self::closed(self.start, self.end)
    }

    pub fn midpoint(&self) -> BoundaryPoint {
        BoundaryPoint::from_angle(self.start.angle() + self.length() / 2.0)
    }
}

/// Geodesics with one endpoint in `i` and the other in `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicBox {
    pub i: BoundaryInterval,
    pub j: BoundaryInterval,
}

impl GeodesicBox {
    /// Checks that `i = I_{a,b}` and `j = I_{c,d}` have corners in
    /// counter-clockwise order and are disjoint as sets.
    pub fn new(i: BoundaryInterval, j: BoundaryInterval) -> Result<Self> {
        let a = i.start;
        let ob = if i.start.coincides(&i.end) { 0.0 } else { a.ccw_to(&i.end) };
        let mut oc = if j.start.coincides(&a) { 0.0 } else { a.ccw_to(&j.start) };
        if oc == 0.0 && ob > 0.0 {
            oc = TAU;
        }
        let mut od = if j.end.coincides(&a) { TAU } else { a.ccw_to(&j.end) };
        if j.start.coincides(&j.end) {
            od = oc;
        }
        if !(ob <= oc + TAU_SEP && oc <= od + TAU_SEP && od <= TAU + TAU_SEP) {
            return Err(Error::InvalidBox("corners are not in counter-clockwise order".into()));
        }
        let bad_bc = i.end.coincides(&j.start) && i.include_end && j.include_start;
        let bad_da = j.end.coincides(&i.start) && j.include_end && i.include_start;
        if (bad_bc && !i.is_empty() && !j.is_empty()) || (bad_da && !i.is_empty() && !j.is_empty()) {
            return Err(Error::InvalidBox("intervals overlap".into()));
        }
        Ok(Self { i, j })
    }

    /// Box from corner angles with `I = [a, b)` and `J = [c, d)`.
    pub fn half_open_from_angles(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let p = |t| BoundaryPoint::from_angle(t);
        Self::new(
            BoundaryInterval::half_open(p(a), p(b)),
            BoundaryInterval::half_open(p(c), p(d)),
        )
    }

    pub fn closed_from_angles(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let p = |t| BoundaryPoint::from_angle(t);
        Self::new(
            BoundaryInterval::closed(p(a), p(b)),
            BoundaryInterval::closed(p(c), p(d)),
        )
    }

    /// Corners `a, b, c, d`.
    pub fn corners(&self) -> [BoundaryPoint; 4] {
        [self.i.start, self.i.end, self.j.start, self.j.end]
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty() || self.j.is_empty()
    }

    /// Closures of the two intervals are disjoint.
    pub fn is_compact(&self) -> bool {
        !self.i.end.coincides(&self.j.start) && !self.j.end.coincides(&self.i.start)
    }

    pub fn contains(&self, g: &Geodesic) -> bool {
        let [p, q] = g.endpoints();
        (self.i.contains(&p) && self.j.contains(&q)) || (self.i.contains(&q) && self.j.contains(&p))
    }

    /// `I_{d,a} × I_{b,c}` with complementary flags.
    pub fn opposite(&self) -> Self {
        let [a, b, c, d] = self.corners();
        Self {
            i: BoundaryInterval::new(d, a, !self.j.include_end, !self.i.include_start),
            j: BoundaryInterval::new(b, c, !self.i.include_end, !self.j.include_start),
        }
    }

    /// Smallest angular gap between the two closed intervals.
    pub fn min_gap(&self) -> f64 {
        let [a, b, c, d] = self.corners();
        b.ccw_to(&c).min(d.ccw_to(&a))
    }
}

/// `|log(|a-c||b-d| / (|a-d||b-c|))|`, evaluated with chord lengths on the
/// circle.
pub fn cross_ratio_log(a: &BoundaryPoint, b: &BoundaryPoint, c: &BoundaryPoint, d: &BoundaryPoint) -> Result<f64> {
    let pts = [a, b, c, d];
    for x in 0..4 {
        for y in x + 1..4 {
            if pts[x].coincides(pts[y]) {
                return Err(Error::CoincidentPoints);
            }
        }
    }
    let chord = |p: &BoundaryPoint, q: &BoundaryPoint| (p.ccw_to(q) / 2.0).sin().abs().ln();
    Ok((chord(a, c) + chord(b, d) - chord(a, d) - chord(b, c)).abs())
}
