//! Atomic and Liouville geodesic currents and their measures.

use std::sync::{Arc, RwLock};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::group::{AxisOrbit, GroupElement, SurfacePresentation};
use crate::hyperbolic::{
    classify_sides, cross_ratio_log, hyp_distance, point_toward, BoundaryInterval, BoundaryPoint,
    Crossing, Geodesic, GeodesicBox, PlanePoint, Segment, TAU_ON,
};
use crate::numeric::CompensatedSum;

/// Longest piece a segment is cut into before counting crossings.
const PIECE: f64 = 2.0;
/// Segments closer than this to the basepoint are not translated first.
const DIRECT: f64 = 3.0;
const MIN_WINDOW: f64 = 3.0;
const SLACK: f64 = 1e-9;

/// Weighted crossings of a segment: in its interior, at `a`, at `b`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CrossingProfile {
    pub interior: f64,
    pub at_a: f64,
    pub at_b: f64,
}

impl CrossingProfile {
    /// Measure of the transversal with the segment's inclusion flags.
    pub fn measure(&self, include_a: bool, include_b: bool) -> f64 {
        let mut s = CompensatedSum::new();
        s.add(self.interior);
        if include_a {
            s.add(self.at_a);
        }
        if include_b {
            s.add(self.at_b);
        }
        s.value()
    }

    /// `½(μ(G[a,b)) + μ(G(a,b]))`.
    pub fn half_open_mean(&self) -> f64 {
        let mut s = CompensatedSum::new();
        s.add(self.interior);
        s.add(0.5 * self.at_a);
        s.add(0.5 * self.at_b);
        s.value()
    }

    fn add(&mut self, other: &CrossingProfile) {
        self.interior += other.interior;
        self.at_a += other.at_a;
        self.at_b += other.at_b;
    }
}

/// Crossing counts of one component.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CrossingCounts {
    pub interior: u64,
    pub at_a: u64,
    pub at_b: u64,
}

#[derive(Debug)]
struct OrbitCache {
    orbit: RwLock<Option<Arc<AxisOrbit>>>,
}

impl OrbitCache {
    fn new() -> Self {
        Self {
            orbit: RwLock::new(None),
        }
    }

    fn covering(&self, pres: &SurfacePresentation, rep: &GroupElement, r: f64) -> Result<Arc<AxisOrbit>> {
        if let Some(o) = self.orbit.read().expect("orbit cache poisoned").as_ref() {
            if o.window >= r {
                return Ok(o.clone());
            }
        }
        let mut guard = self.orbit.write().expect("orbit cache poisoned");
        if let Some(o) = guard.as_ref() {
            if o.window >= r {
                return Ok(o.clone());
            }
        }
        let old = guard.as_ref().map_or(0.0, |o| o.window);
        let window = r.max(1.25 * old).max(MIN_WINDOW);
        let orbit = Arc::new(AxisOrbit::build(pres, rep, window)?);
        *guard = Some(orbit.clone());
        Ok(orbit)
    }
}

/// A primitive conjugacy class with positive weight.
#[derive(Clone, Debug)]
pub struct Component {
    pub rep: GroupElement,
    pub weight: f64,
    pub label: String,
    cache: Arc<OrbitCache>,
}

impl Component {
    pub fn axis(&self) -> Geodesic {
        self.rep.axis().expect("components are hyperbolic")
    }
}

/// Weighted multi-curve: a sum of Dirac masses on axis orbits.
#[derive(Clone, Debug)]
pub struct AtomicCurrent {
    pres: Arc<SurfacePresentation>,
    components: Vec<Component>,
}

impl AtomicCurrent {
    /// Each class is replaced by its primitive root, the power going into the
    /// weight.
    pub fn new(pres: Arc<SurfacePresentation>, parts: Vec<(GroupElement, f64)>) -> Result<Self> {
        let mut components: Vec<Component> = Vec::new();
        for (g, w) in parts {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidWeight(w));
            }
            if !g.is_hyperbolic() {
                return Err(Error::NotHyperbolic {
                    trace: g.matrix.trace().abs(),
                });
            }
            let (root, k) = pres.primitive_root(&g)?;
            let label = pres.format_word(&root.word);
            if let Some(c) = components.iter().find(|c| c.rep.word == root.word) {
                return Err(Error::DuplicateComponent(c.label.clone(), pres.format_word(&g.word)));
            }
            components.push(Component {
                rep: root,
                weight: w * k as f64,
                label,
                cache: Arc::new(OrbitCache::new()),
            });
        }
        Ok(Self { pres, components })
    }

    pub fn from_words(pres: Arc<SurfacePresentation>, parts: &[(&str, f64)]) -> Result<Self> {
        let parts = parts
            .iter()
            .map(|(w, x)| Ok((pres.parse_element(w)?, *x)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pres, parts)
    }

    pub fn empty(pres: Arc<SurfacePresentation>) -> Self {
        Self {
            pres,
            components: Vec::new(),
        }
    }

    pub fn presentation(&self) -> &Arc<SurfacePresentation> {
        &self.pres
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidWeight(c));
        }
        let mut out = self.clone();
        for comp in &mut out.components {
            comp.weight *= c;
        }
        Ok(out)
    }

    /// Sum of two atomic currents, merging equal classes.
    pub fn plus(&self, other: &AtomicCurrent) -> Result<Self> {
        check_same(&self.pres, &other.pres)?;
        let mut out = self.clone();
        for c in &other.components {
            match out.components.iter_mut().find(|d| d.rep.word == c.rep.word) {
                Some(d) => d.weight += c.weight,
                None => out.components.push(c.clone()),
            }
        }
        Ok(out)
    }

    /// The same current restricted to one component.
    pub fn component_current(&self, idx: usize) -> Self {
        Self {
            pres: self.pres.clone(),
            components: vec![self.components[idx].clone()],
        }
    }

    /// Translates of the axis of component `idx` within `r` of the basepoint.
    pub fn orbit(&self, idx: usize, r: f64) -> Result<Arc<AxisOrbit>> {
        let c = &self.components[idx];
        c.cache.covering(&self.pres, &c.rep, r)
    }

    /// Per-component crossing counts of the closed segment.
    pub fn segment_counts(&self, s: &Segment) -> Result<Vec<CrossingCounts>> {
        if s.is_singleton() {
            return Err(Error::DegenerateSegment);
        }
        let len = s.length();
        if len <= PIECE {
            return self.piece_counts(s);
        }
        let n = (len / PIECE).ceil() as usize;
        // Split points at generic fractions so that they avoid the atoms.
        let cuts: Vec<f64> = (1..n)
            .map(|k| len * (k as f64 + 0.0137 * (k as f64 * 0.618_033_988_7).fract()) / n as f64)
            .collect();
        let mut points = vec![s.a];
        points.extend(cuts.iter().map(|&t| point_toward(&s.a, &s.b, t)));
        points.push(s.b);
        let mut total = vec![CrossingCounts::default(); self.components.len()];
        for k in 0..n {
            let piece = Segment::closed(points[k], points[k + 1]);
            let counts = self.piece_counts(&piece)?;
            for (t, c) in total.iter_mut().zip(counts) {
                t.interior += c.interior;
                if k == 0 {
                    t.at_a += c.at_a;
                } else {
                    t.interior += c.at_a;
                }
                if k == n - 1 {
                    t.at_b += c.at_b;
                }
            }
        }
        Ok(total)
    }

    fn piece_counts(&self, s: &Segment) -> Result<Vec<CrossingCounts>> {
        let o = self.pres.basepoint();
        let mut seg = *s;
        if hyp_distance(&o, &s.a).max(hyp_distance(&o, &s.b)) > DIRECT {
            let (h, _) = self.pres.reduce_point(&s.midpoint());
            seg = h.matrix.apply_segment(s);
        }
        let r = hyp_distance(&o, &seg.a).max(hyp_distance(&o, &seg.b)) + SLACK;
        let (va, vb) = (seg.a.to_hyperboloid(), seg.b.to_hyperboloid());
        (0..self.components.len())
            .map(|idx| {
                let orbit = self.orbit(idx, r)?;
                let mut c = CrossingCounts::default();
                for ax in orbit.within(r) {
                    match classify_sides(ax.axis.side_of_hyperboloid(&va), ax.axis.side_of_hyperboloid(&vb)) {
                        Crossing::Interior => c.interior += 1,
                        Crossing::AtA => c.at_a += 1,
                        Crossing::AtB => c.at_b += 1,
                        Crossing::None => {}
                    }
                }
                Ok(c)
            })
            .collect()
    }

    pub fn crossing_profile(&self, s: &Segment) -> Result<CrossingProfile> {
        let counts = self.segment_counts(s)?;
        let mut acc = [CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()];
        for (c, comp) in counts.iter().zip(&self.components) {
            acc[0].add(c.interior as f64 * comp.weight);
            acc[1].add(c.at_a as f64 * comp.weight);
            acc[2].add(c.at_b as f64 * comp.weight);
        }
        Ok(CrossingProfile {
            interior: acc[0].value(),
            at_a: acc[1].value(),
            at_b: acc[2].value(),
        })
    }

    /// Total weight of the atoms contained in the box.
    pub fn box_measure(&self, b: &GeodesicBox) -> Result<f64> {
        if b.is_empty() || self.components.is_empty() {
            return Ok(0.0);
        }
        if !b.is_compact() {
            return Err(Error::NonCompactBox);
        }
        let [a, bb, c, d] = b.corners();
        let diag1 = Geodesic::new(a, c)?;
        let diag2 = Geodesic::new(bb, d)?;
        let mut bx = *b;
        if let Some(m) = diag1.intersection(&diag2) {
            let (h, _) = self.pres.reduce_point(&m);
            bx = h.matrix.apply_box(b);
        }
        // Geodesics of a compact box come within this distance of i.
        let gap = bx.min_gap();
        let reach = (1.0 / (gap / 2.0).tan()).asinh();
        let o = self.pres.basepoint();
        let r = reach + hyp_distance(&o, &PlanePoint::i()) + SLACK;
        let mut sum = CompensatedSum::new();
        for (idx, comp) in self.components.iter().enumerate() {
            let orbit = self.orbit(idx, r)?;
            let n = orbit.within(r).filter(|ax| bx.contains(&ax.axis)).count();
            sum.add(n as f64 * comp.weight);
        }
        Ok(sum.value())
    }

    /// Weight of atoms with one endpoint at `z` and the other in `arc`.
    pub fn pencil_measure(&self, z: &BoundaryPoint, arc: &BoundaryInterval) -> Result<f64> {
        if arc.closure().contains(z) {
            return Err(Error::InvalidBox("pencil point lies in the arc".into()));
        }
        if arc.is_empty() || self.components.is_empty() {
            return Ok(0.0);
        }
        let sep = z.separation(&arc.start).min(z.separation(&arc.end));
        let reach = (1.0 / (sep / 2.0).tan()).asinh();
        let o = self.pres.basepoint();
        let r = reach + hyp_distance(&o, &PlanePoint::i()) + SLACK;
        let mut sum = CompensatedSum::new();
        for (idx, comp) in self.components.iter().enumerate() {
            let orbit = self.orbit(idx, r)?;
            let n = orbit
                .within(r)
                .filter(|ax| {
                    let [p, q] = ax.axis.endpoints();
                    (p.coincides(z) && arc.contains(&q)) || (q.coincides(z) && arc.contains(&p))
                })
                .count();
            sum.add(n as f64 * comp.weight);
        }
        Ok(sum.value())
    }

    /// Mass of the atom at `g`.
    pub fn has_atom(&self, g: &Geodesic) -> Result<f64> {
        let (h, _) = self.pres.reduce_point(&g.project(&self.pres.basepoint()));
        let g2 = h.matrix.apply_geodesic(g);
        let r = g2.distance_to(&self.pres.basepoint()) + SLACK;
        let mut sum = CompensatedSum::new();
        for (idx, comp) in self.components.iter().enumerate() {
            let orbit = self.orbit(idx, r)?;
            if orbit.within(r + 1e-6).any(|ax| ax.axis.same_as(&g2)) {
                sum.add(comp.weight);
            }
        }
        Ok(sum.value())
    }

    /// Total weight of the atoms through `x`, the measure of `G[x]`.
    pub fn point_measure(&self, x: &PlanePoint) -> Result<f64> {
        let (_, y) = self.pres.reduce_point(x);
        let r = hyp_distance(&self.pres.basepoint(), &y) + TAU_ON + SLACK;
        let mut sum = CompensatedSum::new();
        for (idx, comp) in self.components.iter().enumerate() {
            let orbit = self.orbit(idx, r)?;
            let n = orbit.within(r).filter(|ax| ax.axis.contains_point(&y)).count();
            sum.add(n as f64 * comp.weight);
        }
        Ok(sum.value())
    }

    /// Translates of component `idx` crossing the half-open fundamental
    /// segment `[x, g·x)` of `axis(g)`.
    pub fn crossings_with_class(&self, g: &GroupElement) -> Result<Vec<u64>> {
        let (root, k) = cyclic_root(&self.pres, g);
        if k > 1 {
            return Ok(self.crossings_with_class(&root)?.into_iter().map(|n| n * k as u64).collect());
        }
        let seg = fundamental_segment(&self.pres, g)?;
        Ok(self
            .segment_counts(&seg)?
            .into_iter()
            .map(|c| c.interior + c.at_a)
            .collect())
    }

    /// `i(μ, c)` for the weight-one current on the class of `g`.
    pub fn intersection_with_class(&self, g: &GroupElement) -> Result<f64> {
        let counts = self.crossings_with_class(g)?;
        Ok(counts
            .iter()
            .zip(&self.components)
            .map(|(&n, c)| n as f64 * c.weight)
            .collect::<CompensatedSum>()
            .value())
    }
}

/// `[x, g·x)` with `x` at a generic offset along the axis of `g`.
pub fn fundamental_segment(pres: &SurfacePresentation, g: &GroupElement) -> Result<Segment> {
    let axis = g.axis()?;
    let len = g.translation_length()?;
    let foot = axis.project(&pres.basepoint());
    let x = axis.point_at(&foot, std::f64::consts::FRAC_1_PI * len);
    let gx = apply_stepwise(pres, g, &x);
    Ok(Segment::half_open(x, gx))
}

/// Word-level root `h` and power `k` with `g` conjugate to `h^k`. The
/// half-open segments `[h^j x, h^(j+1) x)` tile `[x, g x)` and are translates
/// of each other, so powers are measured on the root; the far end of a long
/// segment running along an atom drifts off it in floating point.
pub fn cyclic_root(pres: &SurfacePresentation, g: &GroupElement) -> (GroupElement, u32) {
    let (root, k) = g.word.canonical_cyclic().root();
    if k > 1 {
        (pres.element(root), k)
    } else {
        (g.clone(), 1)
    }
}

/// `g·p` computed one letter at a time.
pub fn apply_stepwise(pres: &SurfacePresentation, g: &GroupElement, p: &PlanePoint) -> PlanePoint {
    g.word
        .letters()
        .iter()
        .rev()
        .fold(*p, |q, &l| pres.letter_matrix(l).apply(&q))
}

fn check_same(a: &Arc<SurfacePresentation>, b: &Arc<SurfacePresentation>) -> Result<()> {
    if Arc::ptr_eq(a, b) || (a.name() == b.name() && a.generators() == b.generators()) {
        Ok(())
    } else {
        Err(Error::PresentationMismatch)
    }
}

/// Current whose box measure is the log cross-ratio, times `scale`.
#[derive(Clone, Debug)]
pub struct LiouvilleCurrent {
    pres: Arc<SurfacePresentation>,
    pub scale: f64,
}

impl LiouvilleCurrent {
    pub fn new(pres: Arc<SurfacePresentation>, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidWeight(scale));
        }
        Ok(Self { pres, scale })
    }

    pub fn presentation(&self) -> &Arc<SurfacePresentation> {
        &self.pres
    }

    pub fn box_measure(&self, b: &GeodesicBox) -> Result<f64> {
        if b.is_empty() || b.i.length() == 0.0 || b.j.length() == 0.0 {
            return Ok(0.0);
        }
        if !b.is_compact() {
            return Err(Error::NonCompactBox);
        }
        let [a, bb, c, d] = b.corners();
        Ok(self.scale * cross_ratio_log(&a, &bb, &c, &d)?)
    }

    /// Crofton: the measure of a transversal is its length.
    pub fn transversal_measure(&self, s: &Segment) -> Result<f64> {
        if s.is_singleton() {
            return Err(Error::DegenerateSegment);
        }
        Ok(self.scale * s.length())
    }

    pub fn intersection_with_class(&self, g: &GroupElement) -> Result<f64> {
        Ok(self.scale * g.translation_length()?)
    }
}

/// Atomic, Liouville, or a finite sum of both.
#[derive(Clone, Debug)]
pub enum GeodesicCurrent {
    Atomic(AtomicCurrent),
    Liouville(LiouvilleCurrent),
    Sum(Vec<GeodesicCurrent>),
}

#[derive(Debug, Deserialize)]
struct ComponentSpec {
    word: String,
    #[serde(default = "one")]
    weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
struct CurrentSpec {
    kind: String,
    #[serde(default)]
    components: Vec<ComponentSpec>,
    #[serde(default)]
    scale: Option<f64>,
    #[serde(default)]
    parts: Vec<CurrentSpec>,
}

impl GeodesicCurrent {
    pub fn liouville(pres: Arc<SurfacePresentation>, scale: f64) -> Result<Self> {
        Ok(Self::Liouville(LiouvilleCurrent::new(pres, scale)?))
    }

    pub fn atomic(pres: Arc<SurfacePresentation>, parts: &[(&str, f64)]) -> Result<Self> {
        Ok(Self::Atomic(AtomicCurrent::from_words(pres, parts)?))
    }

    /// Reads `{kind: atomic|liouville|sum, components: [{word, weight}], scale, parts}`.
    pub fn from_json_str(text: &str, pres: Arc<SurfacePresentation>) -> Result<Self> {
        let spec: CurrentSpec = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_spec(&spec, &pres)
    }

    pub fn from_path(path: &std::path::Path, pres: Arc<SurfacePresentation>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
            _ => Error::Io(e),
        })?;
        Self::from_json_str(&text, pres)
    }

    fn from_spec(spec: &CurrentSpec, pres: &Arc<SurfacePresentation>) -> Result<Self> {
        match spec.kind.as_str() {
            "atomic" => {
                let parts = spec
                    .components
                    .iter()
                    .map(|c| Ok((pres.parse_element(&c.word)?, c.weight)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::Atomic(AtomicCurrent::new(pres.clone(), parts)?))
            }
            "liouville" => Self::liouville(pres.clone(), spec.scale.unwrap_or(1.0)),
            "sum" => {
                let parts = spec
                    .parts
                    .iter()
                    .map(|p| Self::from_spec(p, pres))
                    .collect::<Result<Vec<_>>>()?;
                Self::sum(parts)
            }
            "lamination" | "measured_lamination" => Err(Error::Unsupported(
                "non-discrete measured laminations cannot be represented".into(),
            )),
            other => Err(Error::Config(format!("unknown current kind {other:?}"))),
        }
    }

    /// Flattened sum; atomic parts are merged, Liouville scales added.
    pub fn sum(parts: Vec<GeodesicCurrent>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Config("empty sum".into()));
        }
        let mut atomic: Option<AtomicCurrent> = None;
        let mut liouville: Option<LiouvilleCurrent> = None;
        let mut stack = parts;
        while let Some(p) = stack.pop() {
            match p {
                GeodesicCurrent::Atomic(a) => {
                    atomic = Some(match atomic {
                        Some(b) => a.plus(&b)?,
                        None => a,
                    })
                }
                GeodesicCurrent::Liouville(l) => {
                    liouville = Some(match liouville {
                        Some(m) => {
                            check_same(&l.pres, &m.pres)?;
                            LiouvilleCurrent::new(l.pres.clone(), l.scale + m.scale)?
                        }
                        None => l,
                    })
                }
                GeodesicCurrent::Sum(v) => stack.extend(v),
            }
        }
        if let (Some(a), Some(l)) = (&atomic, &liouville) {
            check_same(&a.pres, &l.pres)?;
        }
        Ok(match (atomic, liouville) {
            (Some(a), None) => GeodesicCurrent::Atomic(a),
            (None, Some(l)) => GeodesicCurrent::Liouville(l),
            (Some(a), Some(l)) => GeodesicCurrent::Sum(vec![GeodesicCurrent::Atomic(a), GeodesicCurrent::Liouville(l)]),
            (None, None) => unreachable!("nonempty sum"),
        })
    }

    pub fn plus(&self, other: &GeodesicCurrent) -> Result<Self> {
        Self::sum(vec![self.clone(), other.clone()])
    }

    pub fn presentation(&self) -> &Arc<SurfacePresentation> {
        match self {
            GeodesicCurrent::Atomic(a) => a.presentation(),
            GeodesicCurrent::Liouville(l) => l.presentation(),
            GeodesicCurrent::Sum(v) => v[0].presentation(),
        }
    }

    /// Atomic and Liouville summands.
    pub fn parts(&self) -> (Option<&AtomicCurrent>, Option<&LiouvilleCurrent>) {
        match self {
            GeodesicCurrent::Atomic(a) => (Some(a), None),
            GeodesicCurrent::Liouville(l) => (None, Some(l)),
            GeodesicCurrent::Sum(v) => {
                let mut out = (None, None);
                for p in v {
                    let (a, l) = p.parts();
                    out.0 = out.0.or(a);
                    out.1 = out.1.or(l);
                }
                out
            }
        }
    }

    pub fn as_atomic(&self) -> Option<&AtomicCurrent> {
        match self.parts() {
            (Some(a), None) => Some(a),
            _ => None,
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        match self {
            GeodesicCurrent::Atomic(a) => Ok(GeodesicCurrent::Atomic(a.scaled(c)?)),
            GeodesicCurrent::Liouville(l) => Self::liouville(l.pres.clone(), l.scale * c),
            GeodesicCurrent::Sum(v) => Ok(GeodesicCurrent::Sum(
                v.iter().map(|p| p.scaled(c)).collect::<Result<_>>()?,
            )),
        }
    }

    fn fold(&self, f: &dyn Fn(&GeodesicCurrent) -> Result<f64>) -> Result<f64> {
        match self {
            GeodesicCurrent::Sum(v) => {
                let mut s = CompensatedSum::new();
                for p in v {
                    s.add(p.fold(f)?);
                }
                Ok(s.value())
            }
            leaf => f(leaf),
        }
    }

    pub fn box_measure(&self, b: &GeodesicBox) -> Result<f64> {
        self.fold(&|c| match c {
            GeodesicCurrent::Atomic(a) => a.box_measure(b),
            GeodesicCurrent::Liouville(l) => l.box_measure(b),
            GeodesicCurrent::Sum(_) => unreachable!(),
        })
    }

    pub fn crossing_profile(&self, s: &Segment) -> Result<CrossingProfile> {
        match self {
            GeodesicCurrent::Atomic(a) => a.crossing_profile(s),
            GeodesicCurrent::Liouville(l) => Ok(CrossingProfile {
                interior: l.transversal_measure(s)?,
                at_a: 0.0,
                at_b: 0.0,
            }),
            GeodesicCurrent::Sum(v) => {
                let mut out = CrossingProfile::default();
                for p in v {
                    out.add(&p.crossing_profile(s)?);
                }
                Ok(out)
            }
        }
    }

    pub fn transversal_measure(&self, s: &Segment) -> Result<f64> {
        Ok(self.crossing_profile(s)?.measure(s.include_a, s.include_b))
    }

    pub fn pencil_measure(&self, z: &BoundaryPoint, arc: &BoundaryInterval) -> Result<f64> {
        self.fold(&|c| match c {
            GeodesicCurrent::Atomic(a) => a.pencil_measure(z, arc),
            _ => Ok(0.0),
        })
    }

    pub fn has_atom(&self, g: &Geodesic) -> Result<f64> {
        self.fold(&|c| match c {
            GeodesicCurrent::Atomic(a) => a.has_atom(g),
            _ => Ok(0.0),
        })
    }

    /// `μ(G[x])`.
    pub fn point_measure(&self, x: &PlanePoint) -> Result<f64> {
        self.fold(&|c| match c {
            GeodesicCurrent::Atomic(a) => a.point_measure(x),
            _ => Ok(0.0),
        })
    }

    /// `i(μ, c)` for the weight-one current on the class of `g`.
    pub fn intersection_with_class(&self, g: &GroupElement) -> Result<f64> {
        self.fold(&|c| match c {
            GeodesicCurrent::Atomic(a) => a.intersection_with_class(g),
            GeodesicCurrent::Liouville(l) => l.intersection_with_class(g),
            GeodesicCurrent::Sum(_) => unreachable!(),
        })
    }
}

/// `Σ w₁ w₂ N(c₁, c₂)` over component pairs.
pub fn intersection_number(mu: &AtomicCurrent, nu: &AtomicCurrent) -> Result<f64> {
    check_same(&mu.pres, &nu.pres)?;
    let mut s = CompensatedSum::new();
    for c1 in &mu.components {
        let counts = nu.crossings_with_class(&c1.rep)?;
        for (n, c2) in counts.iter().zip(&nu.components) {
            s.add(c1.weight * c2.weight * *n as f64);
        }
    }
    Ok(s.value())
}

/// `i(L, c) = scale · ℓ(c)`.
pub fn intersection_with_length(mu: &LiouvilleCurrent, c: &GroupElement) -> Result<f64> {
    mu.intersection_with_class(c)
}

/// Smallest `i(μ, c)` over classes up to a word bound: an upper bound on the
/// systole.
#[derive(Clone, Debug)]
pub struct SystoleEstimate {
    pub value: f64,
    pub argmin: GroupElement,
    pub word_bound: usize,
    pub classes_scanned: usize,
    /// The minimum is attained by a class shorter than the bound.
    pub attained_below_bound: bool,
}

pub fn systole_estimate(mu: &GeodesicCurrent, word_bound: usize) -> Result<SystoleEstimate> {
    if word_bound == 0 {
        return Err(Error::Config("word bound must be at least 1".into()));
    }
    let pres = mu.presentation();
    let mut best: Option<(f64, GroupElement)> = None;
    let mut scanned = 0;
    for c in pres.classes_up_to(word_bound) {
        if !c.is_hyperbolic() {
            continue;
        }
        scanned += 1;
        let v = mu.intersection_with_class(&c)?;
        if best.as_ref().is_none_or(|(b, _)| v < *b - 1e-12) {
            best = Some((v, c));
        }
    }
    let (value, argmin) = best.ok_or_else(|| Error::Config("no hyperbolic class within bound".into()))?;
    let attained_below_bound = argmin.word.len() < word_bound;
    Ok(SystoleEstimate {
        value,
        argmin,
        word_bound,
        classes_scanned: scanned,
        attained_below_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::GeodesicBox;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn torus() -> Arc<SurfacePresentation> {
        Arc::new(SurfacePresentation::preset("punctured_torus").unwrap())
    }

    fn genus2() -> Arc<SurfacePresentation> {
        Arc::new(SurfacePresentation::preset("genus2_octagon").unwrap())
    }

    fn pt(x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x, y).unwrap()
    }

    /// Other endpoint of the geodesic from boundary angle `alpha` through `x`.
    fn through_point(alpha: f64, x: &PlanePoint) -> f64 {
        let xd = x.to_disk();
        let m = |w: Complex64| (w - xd) / (Complex64::new(1.0, 0.0) - xd.conj() * w);
        let minv = |w: Complex64| (w + xd) / (Complex64::new(1.0, 0.0) + xd.conj() * w);
        let e = Complex64::from_polar(1.0, alpha);
        minv(-m(e)).arg()
    }

    /// Liouville mass of geodesics crossing `[x, y]`: for each endpoint
    /// `alpha` the crossing partners form the arc between the geodesics from
    /// `alpha` through `x` and through `y`, and the inner integral of
    /// `dβ / (4 sin²((β − α)/2))` is `-½ cot((β − α)/2)`.
    fn crofton_quadrature(x: &PlanePoint, y: &PlanePoint, n: usize) -> f64 {
        let h = TAU / n as f64;
        let f = |alpha: f64| {
            let bx = (through_point(alpha, x) - alpha).rem_euclid(TAU);
            let by = (through_point(alpha, y) - alpha).rem_euclid(TAU);
            let prim = |u: f64| -0.5 / (u / 2.0).tan();
            (prim(bx) - prim(by)).abs()
        };
        let mut s = 0.0;
        for k in 0..n {
            let a = k as f64 * h + 0.5 * h;
            s += f(a);
        }
        // Ordered pairs count each geodesic twice.
        0.5 * s * h
    }

    #[test]
    fn crofton_matches_quadrature() {
        for (x, y) in [(pt(0.0, 1.0), pt(0.0, 2.0)), (pt(0.3, 0.5), pt(-1.0, 1.7)), (pt(2.0, 3.0), pt(2.5, 0.2))] {
            let q = crofton_quadrature(&x, &y, 200_000);
            assert!((q - hyp_distance(&x, &y)).abs() < 1e-6, "{q} vs {}", hyp_distance(&x, &y));
        }
    }

    #[test]
    fn liouville_box_matches_quadrature() {
        // Double integral of the density over the box, inner integral exact.
        let (a, b, c, d) = (0.2, 1.1, 2.5, 4.0);
        let n = 100_000;
        let h = (b - a) / n as f64;
        let prim = |u: f64| -0.5 / (u / 2.0).tan();
        let mut s = 0.0;
        for k in 0..n {
            let alpha = a + (k as f64 + 0.5) * h;
            s += (prim(d - alpha) - prim(c - alpha)).abs();
        }
        let quad = s * h;
        let l = LiouvilleCurrent::new(torus(), 1.0).unwrap();
        let bx = GeodesicBox::half_open_from_angles(a, b, c, d).unwrap();
        assert!((l.box_measure(&bx).unwrap() - quad).abs() < 1e-8);
    }

    #[test]
    fn liouville_examples() {
        let l = GeodesicCurrent::liouville(torus(), 1.0).unwrap();
        let r = |x: f64| BoundaryPoint::from_real(x);
        let bx = GeodesicBox::new(
            BoundaryInterval::half_open(r(-1.0), r(0.0)),
            BoundaryInterval::half_open(r(1.0), BoundaryPoint::infinity()),
        )
        .unwrap();
        assert_abs_diff_eq!(l.box_measure(&bx).unwrap(), 2f64.ln(), epsilon = 1e-14);
        let s = Segment::half_open(pt(0.0, 1.0), pt(0.0, 2.0));
        assert_abs_diff_eq!(l.transversal_measure(&s).unwrap(), 2f64.ln(), epsilon = 1e-14);
        let arc = BoundaryInterval::closed(r(1.0), r(2.0));
        assert_eq!(l.pencil_measure(&r(0.0), &arc).unwrap(), 0.0);
        assert_eq!(l.has_atom(&Geodesic::from_reals(Some(0.0), None).unwrap()).unwrap(), 0.0);
        let g = torus().parse_element("ab").unwrap();
        let lc = LiouvilleCurrent::new(torus(), 2.0).unwrap();
        assert_abs_diff_eq!(
            intersection_with_length(&lc, &g).unwrap(),
            2.0 * g.translation_length().unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn intersection_with_length_examples() {
        let p = torus();
        let l1 = LiouvilleCurrent::new(p.clone(), 1.0).unwrap();
        let l2 = LiouvilleCurrent::new(p.clone(), 2.0).unwrap();
        // [[2,1],[1,1/2]] style: any element with trace 2.5 has length log 4.
        let g = p.parse_element("a").unwrap();
        let t = g.matrix.trace().abs();
        assert_abs_diff_eq!(intersection_with_length(&l1, &g).unwrap(), 2.0 * (t / 2.0).acosh(), epsilon = 1e-14);
        assert_abs_diff_eq!(
            intersection_with_length(&l2, &g).unwrap(),
            2.0 * intersection_with_length(&l1, &g).unwrap(),
            epsilon = 1e-14
        );
        let g2 = p.parse_element("aa").unwrap();
        assert_abs_diff_eq!(
            intersection_with_length(&l1, &g2).unwrap(),
            2.0 * intersection_with_length(&l1, &g).unwrap(),
            epsilon = 1e-12
        );
        let parabolic = p.parse_element("abAB").unwrap();
        assert!(matches!(intersection_with_length(&l1, &parabolic), Err(Error::NotHyperbolic { .. })));
    }

    #[test]
    fn atomic_transversal_examples() {
        let p = torus();
        let a = AtomicCurrent::from_words(p.clone(), &[("a", 2.0)]).unwrap();
        let ax = a.components()[0].axis();
        let foot = ax.foot();
        let n = ax.normal();
        let v = foot.to_hyperboloid();
        let off = |s: f64| {
            let (c, sh) = (s.cosh(), s.sinh());
            PlanePoint::from_hyperboloid(&[c * v[0] + sh * n[0], c * v[1] + sh * n[1], c * v[2] + sh * n[2]]).unwrap()
        };
        let s = Segment::new(off(-0.2), off(0.2), false, false).unwrap();
        let mu = GeodesicCurrent::Atomic(a.clone());
        assert_eq!(mu.transversal_measure(&s).unwrap(), 2.0);
        assert_eq!(mu.transversal_measure(&Segment::closed(off(-0.2), off(0.2))).unwrap(), 2.0);
        // Endpoint on the axis.
        let e = Segment::new(foot, off(0.2), false, true).unwrap();
        assert_eq!(mu.transversal_measure(&e).unwrap(), 0.0);
        let e = Segment::new(foot, off(0.2), true, false).unwrap();
        assert_eq!(mu.transversal_measure(&e).unwrap(), 2.0);
        assert!(matches!(
            mu.transversal_measure(&Segment::closed(foot, foot)),
            Err(Error::DegenerateSegment)
        ));
    }

    #[test]
    fn atomic_box_examples() {
        let p = torus();
        let a = AtomicCurrent::from_words(p.clone(), &[("a", 3.0)]).unwrap();
        let ax = a.components()[0].axis();
        let [e1, e2] = ax.endpoints();
        let w = 1e-3;
        let bx = GeodesicBox::closed_from_angles(e1.angle() - w, e1.angle() + w, e2.angle() - w, e2.angle() + w).unwrap();
        // Oracle: translates of the axis inside the box found by brute force.
        let orbit = AxisOrbit::build(&p, &a.components()[0].rep, 12.0).unwrap();
        let oracle = orbit.axes.iter().filter(|x| bx.contains(&x.axis)).count();
        assert_eq!(oracle, 1);
        assert_eq!(a.box_measure(&bx).unwrap(), 3.0);
        let empty = GeodesicBox::new(
            BoundaryInterval::half_open(e1, e1),
            BoundaryInterval::closed(e2, BoundaryPoint::from_angle(e2.angle() + 0.5)),
        )
        .unwrap();
        assert_eq!(a.box_measure(&empty).unwrap(), 0.0);
        let touching = GeodesicBox::new(
            BoundaryInterval::half_open(BoundaryPoint::from_angle(0.0), BoundaryPoint::from_angle(1.0)),
            BoundaryInterval::half_open(BoundaryPoint::from_angle(1.0), BoundaryPoint::from_angle(2.0)),
        )
        .unwrap();
        assert!(matches!(a.box_measure(&touching), Err(Error::NonCompactBox)));
    }

    #[test]
    fn atomic_box_measure_against_brute_force() {
        let p = genus2();
        let mu = AtomicCurrent::from_words(p.clone(), &[("a", 1.0), ("b", 2.0)]).unwrap();
        let orbits: Vec<_> = mu
            .components()
            .iter()
            .map(|c| AxisOrbit::build(&p, &c.rep, 5.0).unwrap())
            .collect();
        let boxes = [(0.1, 0.9, 2.0, 3.5), (1.0, 2.5, 3.0, 5.5), (4.0, 4.4, 5.0, 6.0)];
        for (a, b, c, d) in boxes {
            let bx = GeodesicBox::half_open_from_angles(a, b, c, d).unwrap();
            let brute: f64 = orbits
                .iter()
                .zip(mu.components())
                .map(|(o, comp)| o.axes.iter().filter(|x| bx.contains(&x.axis)).count() as f64 * comp.weight)
                .sum();
            assert_eq!(mu.box_measure(&bx).unwrap(), brute);
        }
    }

    #[test]
    fn pencil_and_atom_examples() {
        let p = torus();
        let a = AtomicCurrent::from_words(p.clone(), &[("a", 3.0)]).unwrap();
        let g = p.parse_element("a").unwrap();
        let (rep, att) = g.matrix.fixed_points().unwrap();
        let arc = BoundaryInterval::closed(
            BoundaryPoint::from_angle(rep.angle() - 0.01),
            BoundaryPoint::from_angle(rep.angle() + 0.01),
        );
        assert_eq!(a.pencil_measure(&att, &arc).unwrap(), 3.0);
        let z = BoundaryPoint::from_angle(att.angle() + 0.123456);
        assert_eq!(a.pencil_measure(&z, &arc).unwrap(), 0.0);

        let ax = g.axis().unwrap();
        assert_eq!(a.has_atom(&ax).unwrap(), 3.0);
        let h = p.parse_element("bAb").unwrap();
        assert_eq!(a.has_atom(&h.matrix.apply_geodesic(&ax)).unwrap(), 3.0);
        let other = p.parse_element("b").unwrap().axis().unwrap();
        assert_eq!(a.has_atom(&other).unwrap(), 0.0);
    }

    #[test]
    fn point_measure_zero_off_atoms() {
        let p = torus();
        let mu = GeodesicCurrent::atomic(p.clone(), &[("a", 1.0), ("b", 2.0)]).unwrap();
        assert_eq!(mu.point_measure(&pt(0.123, 0.77)).unwrap(), 0.0);
        let ax = p.parse_element("a").unwrap().axis().unwrap();
        assert_eq!(mu.point_measure(&ax.point_at(&ax.foot(), 0.4)).unwrap(), 1.0);
        // The axes of a and b cross at i.
        assert_eq!(mu.point_measure(&PlanePoint::i()).unwrap(), 3.0);
        let l = GeodesicCurrent::liouville(p, 1.0).unwrap();
        assert_eq!(l.point_measure(&PlanePoint::i()).unwrap(), 0.0);
    }

    #[test]
    fn intersection_number_examples() {
        let p = torus();
        let a = AtomicCurrent::from_words(p.clone(), &[("a", 1.0)]).unwrap();
        let b = AtomicCurrent::from_words(p.clone(), &[("b", 1.0)]).unwrap();
        assert_eq!(intersection_number(&a, &b).unwrap(), 1.0);
        assert_eq!(intersection_number(&b, &a).unwrap(), 1.0);
        assert_eq!(intersection_number(&a, &a).unwrap(), 0.0);
        for n in 2..=4 {
            let an = AtomicCurrent::from_words(p.clone(), &[(&"a".repeat(n), 1.0)]).unwrap();
            assert_eq!(intersection_number(&an, &b).unwrap(), n as f64);
        }
        let ab = AtomicCurrent::from_words(p.clone(), &[("ab", 1.0)]).unwrap();
        let abb = AtomicCurrent::from_words(p.clone(), &[("aB", 1.0)]).unwrap();
        assert_eq!(intersection_number(&ab, &abb).unwrap(), 2.0);
        assert_eq!(intersection_number(&ab, &a).unwrap(), 1.0);
    }

    #[test]
    fn genus2_intersections() {
        let p = genus2();
        let cur = |w: &str| AtomicCurrent::from_words(p.clone(), &[(w, 1.0)]).unwrap();
        assert_eq!(intersection_number(&cur("a"), &cur("b")).unwrap(), 1.0);
        assert_eq!(intersection_number(&cur("a"), &cur("c")).unwrap(), 0.0);
        assert_eq!(intersection_number(&cur("a"), &cur("a")).unwrap(), 0.0);
        // The commutator of a and b is a simple separating curve.
        let s = cur("abAB");
        assert_eq!(intersection_number(&s, &s).unwrap(), 0.0);
        for w in ["a", "b", "c", "d"] {
            assert_eq!(intersection_number(&s, &cur(w)).unwrap(), 0.0, "{w}");
        }
        assert!(intersection_number(&s, &cur("bc")).unwrap() > 0.0);
    }

    #[test]
    fn systole_examples() {
        let p = torus();
        let a = GeodesicCurrent::atomic(p.clone(), &[("a", 1.0)]).unwrap();
        let est = systole_estimate(&a, 2).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(p.format_word(&est.argmin.word), "a");
        let l = GeodesicCurrent::liouville(p.clone(), 1.0).unwrap();
        let est = systole_estimate(&l, 3).unwrap();
        let oracle = p
            .classes_up_to(3)
            .iter()
            .filter(|c| c.is_hyperbolic())
            .map(|c| c.translation_length().unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(est.value, oracle, epsilon = 1e-12);
        let ab = GeodesicCurrent::atomic(p.clone(), &[("a", 1.0), ("b", 1.0)]).unwrap();
        let est = systole_estimate(&ab, 2).unwrap();
        assert!(est.value >= 1.0);
    }

    #[test]
    fn component_validation() {
        let p = torus();
        assert!(matches!(AtomicCurrent::from_words(p.clone(), &[("a", 0.0)]), Err(Error::InvalidWeight(_))));
        assert!(matches!(
            AtomicCurrent::from_words(p.clone(), &[("a", 1.0), ("bAB", 1.0)]),
            Err(Error::DuplicateComponent(..))
        ));
        let sq = AtomicCurrent::from_words(p.clone(), &[("abab", 1.5)]).unwrap();
        assert_eq!(sq.components()[0].weight, 3.0);
        assert_eq!(sq.components()[0].label, "ab");
        let spec = r#"{"kind": "lamination"}"#;
        assert!(matches!(GeodesicCurrent::from_json_str(spec, p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn current_spec_parsing() {
        let p = torus();
        let text = r#"{"kind": "sum", "parts": [
            {"kind": "atomic", "components": [{"word": "a", "weight": 2}]},
            {"kind": "liouville", "scale": 0.5},
            {"kind": "sum", "parts": [{"kind": "atomic", "components": [{"word": "b"}]}]}
        ]}"#;
        let mu = GeodesicCurrent::from_json_str(text, p).unwrap();
        let (a, l) = mu.parts();
        assert_eq!(a.unwrap().components().len(), 2);
        assert_eq!(l.unwrap().scale, 0.5);
    }

    fn arb_point() -> impl Strategy<Value = PlanePoint> {
        (-1.5f64..1.5, -1.0f64..1.0).prop_map(|(x, ly)| pt(x, ly.exp()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn box_measure_is_invariant(
            a in 0.0f64..TAU, d1 in 0.1f64..1.4, d2 in 0.1f64..1.4, d3 in 0.1f64..1.4,
            word in proptest::sample::select(vec!["a", "B", "ab", "bA", "aab"]),
        ) {
            let p = torus();
            let mu = GeodesicCurrent::atomic(p.clone(), &[("a", 1.0), ("b", 1.0)]).unwrap();
            let l = GeodesicCurrent::liouville(p.clone(), 1.0).unwrap();
            let bx = GeodesicBox::half_open_from_angles(a, a + d1, a + d1 + d2, a + d1 + d2 + d3).unwrap();
            let g = p.parse_element(word).unwrap();
            let moved = g.matrix.apply_box(&bx);
            prop_assume!(moved.min_gap() > 1e-3);
            prop_assert!((mu.box_measure(&bx).unwrap() - mu.box_measure(&moved).unwrap()).abs() <= 1e-9);
            prop_assert!((l.box_measure(&bx).unwrap() - l.box_measure(&moved).unwrap()).abs() <= 1e-9);
        }

        #[test]
        fn liouville_box_relation(
            a in 0.0f64..TAU, d1 in 0.01f64..2.0, d2 in 0.01f64..2.0, d3 in 0.01f64..2.0,
        ) {
            let l = GeodesicCurrent::liouville(torus(), 1.0).unwrap();
            let bx = GeodesicBox::half_open_from_angles(a, a + d1, a + d1 + d2, a + d1 + d2 + d3).unwrap();
            let m1 = l.box_measure(&bx).unwrap();
            let m2 = l.box_measure(&bx.opposite()).unwrap();
            prop_assert!(((-m1).exp() + (-m2).exp() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn transversal_is_additive(p in arb_point(), q in arb_point(), t in 0.05f64..0.95) {
            let pres = torus();
            let mu = GeodesicCurrent::atomic(pres.clone(), &[("a", 1.0), ("b", 2.0), ("aB", 0.5)]).unwrap();
            let len = hyp_distance(&p, &q);
            prop_assume!(len > 1e-3);
            let m = point_toward(&p, &q, t * len);
            prop_assume!(mu.point_measure(&m).unwrap() == 0.0);
            let whole = mu.transversal_measure(&Segment::half_open(p, q)).unwrap();
            let parts = mu.transversal_measure(&Segment::half_open(p, m)).unwrap()
                + mu.transversal_measure(&Segment::half_open(m, q)).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-9);
        }

        #[test]
        fn intersection_is_bilinear(w1 in 0.1f64..3.0, w2 in 0.1f64..3.0) {
            let p = torus();
            let mu = AtomicCurrent::from_words(p.clone(), &[("a", w1), ("ab", w2)]).unwrap();
            let nu = AtomicCurrent::from_words(p.clone(), &[("b", w2), ("aB", w1)]).unwrap();
            let i1 = intersection_number(&mu, &nu).unwrap();
            let i2 = intersection_number(&nu, &mu).unwrap();
            prop_assert!((i1 - i2).abs() <= 1e-9);
            let doubled = intersection_number(&mu.scaled(2.0).unwrap(), &nu).unwrap();
            prop_assert!((doubled - 2.0 * i1).abs() <= 1e-9);
        }
    }

    #[test]
    fn long_segment_split_matches_direct_count() {
        let p = torus();
        let mu = AtomicCurrent::from_words(p.clone(), &[("a", 1.0), ("b", 1.0)]).unwrap();
        let s = Segment::half_open(pt(-0.9, 0.35), pt(1.3, 0.6));
        assert!(s.length() > PIECE);
        let orbit_a = AxisOrbit::build(&p, &mu.components()[0].rep, 8.0).unwrap();
        let orbit_b = AxisOrbit::build(&p, &mu.components()[1].rep, 8.0).unwrap();
        let brute = orbit_a
            .axes
            .iter()
            .chain(&orbit_b.axes)
            .filter(|x| crate::hyperbolic::crosses(&x.axis, &s).unwrap() != Crossing::None)
            .count();
        let counts = mu.segment_counts(&s).unwrap();
        let total: u64 = counts.iter().map(|c| c.interior + c.at_a + c.at_b).sum();
        assert_eq!(total as usize, brute);
    }
}
