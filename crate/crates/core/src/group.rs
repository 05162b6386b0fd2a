//! Fuchsian group presentations, words, orbit balls and axis orbits.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::hyperbolic::{
    hyp_distance, trace_translation_length, Classification, Geodesic, Isometry, PlanePoint,
};

/// Default cap on the number of elements in an orbit ball.
pub const DEFAULT_BALL_CAP: usize = 2_000_000;

const RELATOR_TOL: f64 = 1e-8;

/// A generator or its inverse. Letters order as `a < A < b < B < ...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: u8,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: u8, inverse: bool) -> Self {
        Self { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Self {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }
}

/// Freely reduced word in the generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self(out)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn concat(&self, other: &Word) -> Self {
        Self::from_letters(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn pow(&self, n: u32) -> Self {
        Self::from_letters((0..n).flat_map(|_| self.0.iter().copied()))
    }

    /// Strips letters that cancel cyclically.
    pub fn cyclically_reduced(&self) -> Self {
        let w = &self.0;
        let (mut i, mut j) = (0, w.len());
        while j - i >= 2 && w[i] == w[j - 1].inv() {
            i += 1;
            j -= 1;
        }
        Self(w[i..j].to_vec())
    }

    /// Least rotation of the cyclic word and of its inverse.
    pub fn canonical_cyclic(&self) -> Self {
        let w = self.cyclically_reduced();
        if w.is_empty() {
            return w;
        }
        let inv = w.inverse();
        let n = w.len();
        let mut best = w.0.clone();
        for base in [&w.0, &inv.0] {
            for r in 0..n {
                let cand: Vec<Letter> = base[r..].iter().chain(base[..r].iter()).copied().collect();
                if cand < best {
                    best = cand;
                }
            }
        }
        Self(best)
    }

    /// Shortest `u` with `self = u^k`, together with `k`.
    pub fn root(&self) -> (Word, u32) {
        let n = self.len();
        for p in 1..=n {
            if n.is_multiple_of(p) && (p..n).all(|i| self.0[i] == self.0[i - p]) {
                return (Word(self.0[..p].to_vec()), (n / p) as u32);
            }
        }
        (self.clone(), 1)
    }
}

/// Group element: a reduced word with its cached matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub word: Word,
    pub matrix: Isometry,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self {
            word: Word::identity(),
            matrix: Isometry::identity(),
        }
    }

    pub fn apply(&self, p: &PlanePoint) -> PlanePoint {
        self.matrix.apply(p)
    }

    pub fn translation_length(&self) -> Result<f64> {
        trace_translation_length(&self.matrix)
    }

    pub fn axis(&self) -> Result<Geodesic> {
        self.matrix.axis()
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.matrix.classify() == Classification::Hyperbolic
    }
}

#[derive(Debug, Deserialize)]
struct PresentationConfig {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    generators: Vec<[f64; 4]>,
    #[serde(default)]
    relators: Vec<String>,
    #[serde(default)]
    basepoint: Option<[f64; 2]>,
}

/// Generators, relators and a basepoint of a Fuchsian group.
#[derive(Clone, Debug)]
pub struct SurfacePresentation {
    name: String,
    labels: Vec<char>,
    generators: Vec<Isometry>,
    relators: Vec<Word>,
    basepoint: PlanePoint,
    margin: f64,
    cap: usize,
}

impl SurfacePresentation {
    pub fn new(
        name: &str,
        labels: Vec<char>,
        generators: Vec<Isometry>,
        relators: Vec<Word>,
        basepoint: PlanePoint,
    ) -> Result<Self> {
        if labels.len() != generators.len() || generators.is_empty() {
            return Err(Error::Config("labels and generators differ in length".into()));
        }
        for (l, g) in labels.iter().zip(&generators) {
            if !l.is_ascii_lowercase() {
                return Err(Error::Config(format!("label {l:?} is not a lowercase letter")));
            }
            if g.classify() != Classification::Hyperbolic {
                return Err(Error::NonHyperbolicGenerator {
                    label: l.to_string(),
                    trace: g.trace().abs(),
                });
            }
        }
        let margin = generators
            .iter()
            .map(|g| g.displacement(&basepoint))
            .fold(0.0, f64::max);
        let pres = Self {
            name: name.to_string(),
            labels,
            generators,
            relators,
            basepoint,
            margin,
            cap: DEFAULT_BALL_CAP,
        };
        for r in &pres.relators {
            let dev = pres.evaluate(r).distance_from_identity();
            if dev > RELATOR_TOL {
                return Err(Error::RelatorViolation {
                    relator: pres.format_word(r),
                    deviation: dev,
                });
            }
        }
        Ok(pres)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: PresentationConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let labels: Vec<char> = match cfg.labels {
            Some(ls) => ls
                .iter()
                .map(|s| {
                    let mut cs = s.chars();
                    match (cs.next(), cs.next()) {
                        (Some(c), None) => Ok(c),
                        _ => Err(Error::Config(format!("label {s:?} must be one letter"))),
                    }
                })
                .collect::<Result<_>>()?,
            None => (0..cfg.generators.len())
                .map(|i| (b'a' + i as u8) as char)
                .collect(),
        };
        let generators = cfg
            .generators
            .iter()
            .map(|m| Isometry::new(m[0], m[1], m[2], m[3]))
            .collect::<Result<Vec<_>>>()?;
        let basepoint = match cfg.basepoint {
            Some([x, y]) => PlanePoint::new(x, y)?,
            None => PlanePoint::i(),
        };
        let mut pres = Self::new(
            cfg.name.as_deref().unwrap_or("custom"),
            labels,
            generators,
            Vec::new(),
            basepoint,
        )?;
        let relators = cfg
            .relators
            .iter()
            .map(|r| pres.parse_word(r))
            .collect::<Result<Vec<_>>>()?;
        pres = Self::new(&pres.name, pres.labels, pres.generators, relators, pres.basepoint)?;
        Ok(pres)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
            _ => Error::Io(e),
        })?;
        Self::from_json_str(&text)
    }

    /// Shipped presets: `punctured_torus` and `genus2_octagon`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "punctured_torus" => Self::from_json_str(include_str!("../data/presets/punctured_torus.json")),
            "genus2_octagon" => Self::from_json_str(include_str!("../data/presets/genus2_octagon.json")),
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn labels(&self) -> &[char] {
        &self.labels
    }

    pub fn generators(&self) -> &[Isometry] {
        &self.generators
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn basepoint(&self) -> PlanePoint {
        self.basepoint
    }

    /// Largest displacement of the basepoint by a generator.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// A free group here stands for a punctured surface.
    pub fn is_cusped(&self) -> bool {
        self.relators.is_empty()
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.rank() as u8)
            .flat_map(|g| [Letter::new(g, false), Letter::new(g, true)])
            .collect()
    }

    pub fn letter_matrix(&self, l: Letter) -> Isometry {
        let g = self.generators[l.generator as usize];
        if l.inverse {
            g.inverse()
        } else {
            g
        }
    }

    pub fn evaluate(&self, w: &Word) -> Isometry {
        w.letters()
            .iter()
            .fold(Isometry::identity(), |acc, &l| acc * self.letter_matrix(l))
    }

    pub fn element(&self, w: Word) -> GroupElement {
        let matrix = self.evaluate(&w);
        GroupElement { word: w, matrix }
    }

    /// Parses words like `aBAb`, `a^3 b^-1` or `1`.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let bad = || Error::ParseWord(text.to_string());
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        if chars == ['1'] {
            return Ok(Word::identity());
        }
        let mut letters = Vec::new();
        let mut k = 0;
        while k < chars.len() {
            let c = chars[k];
            let lower = c.to_ascii_lowercase();
            let g = self
                .labels
                .iter()
                .position(|&l| l == lower)
                .ok_or_else(|| Error::UnknownGenerator(c.to_string()))?;
            let mut letter = Letter::new(g as u8, c.is_ascii_uppercase());
            k += 1;
            let mut power: i64 = 1;
            if k < chars.len() && chars[k] == '^' {
                k += 1;
                let start = k;
                if k < chars.len() && chars[k] == '-' {
                    k += 1;
                }
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                let s: String = chars[start..k].iter().collect();
                power = s.parse().map_err(|_| bad())?;
            }
            if power < 0 {
                letter = letter.inv();
            }
            for _ in 0..power.unsigned_abs() {
                letters.push(letter);
            }
        }
        Ok(Word::from_letters(letters))
    }

    pub fn parse_element(&self, text: &str) -> Result<GroupElement> {
        Ok(self.element(self.parse_word(text)?))
    }

    pub fn format_word(&self, w: &Word) -> String {
        if w.is_empty() {
            return "1".to_string();
        }
        w.letters()
            .iter()
            .map(|l| {
                let c = self.labels[l.generator as usize];
                if l.inverse {
                    c.to_ascii_uppercase()
                } else {
                    c
                }
            })
            .collect()
    }

    /// Canonical representative of the conjugacy class, identifying a
    /// class with its inverse.
    pub fn cyclic_reduce(&self, g: &GroupElement) -> GroupElement {
        self.element(g.word.canonical_cyclic())
    }

    /// All group elements moving the basepoint at most `r`.
    pub fn enumerate_ball(&self, r: f64) -> Result<OrbitBall> {
        self.enumerate_ball_with_margin(r, self.margin)
    }

    /// Breadth-first search over reduced words, pruning prefixes whose
    /// displacement exceeds `r + margin`.
    pub fn enumerate_ball_with_margin(&self, r: f64, margin: f64) -> Result<OrbitBall> {
        let o = self.basepoint;
        let letters = self.letters();
        let mut seen = ProximityIndex::<2>::new(1e-6);
        let root = Node {
            element: GroupElement::identity(),
            point: o,
            disp: 0.0,
        };
        seen.insert(key_of(&o), 0);
        let mut elements = vec![(root.element.clone(), 0.0)];
        let mut frontier = vec![root];
        let limit = r + margin;
        while !frontier.is_empty() {
            let children: Vec<Node> = frontier
                .par_iter()
                .flat_map_iter(|node| {
                    let last = node.element.word.letters().last().copied();
                    letters
                        .iter()
                        .filter(move |l| Some(l.inv()) != last)
                        .filter_map(|&l| {
                            let m = self.letter_matrix(l);
                            let matrix = node.element.matrix * m;
                            let point = matrix.apply(&o);
                            let disp = hyp_distance(&o, &point);
                            (disp <= limit).then(|| {
                                let mut letters = node.element.word.letters().to_vec();
                                letters.push(l);
                                Node {
                                    element: GroupElement {
                                        word: Word(letters),
                                        matrix,
                                    },
                                    point,
                                    disp,
                                }
                            })
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            let mut next = Vec::new();
            for child in children {
                let key = key_of(&child.point);
                if seen
                    .find(&key, |_| true)
                    .is_some()
                {
                    continue;
                }
                seen.insert(key, elements.len());
                if child.disp <= r {
                    elements.push((child.element.clone(), child.disp));
                    if elements.len() > self.cap {
                        return Err(Error::BallTooLarge { cap: self.cap });
                    }
                }
                next.push(child);
            }
            frontier = next;
        }
        elements.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.word.cmp(&b.0.word)));
        Ok(OrbitBall {
            radius: r,
            elements: elements.into_iter().map(|(e, _)| e).collect(),
            complete: true,
        })
    }

    /// Greedily applies generators to bring `p` close to the basepoint.
    /// Returns `h` with `h·p` the reduced point.
    pub fn reduce_point(&self, p: &PlanePoint) -> (GroupElement, PlanePoint) {
        let o = self.basepoint;
        let letters = self.letters();
        let mut h = GroupElement::identity();
        let mut q = *p;
        let mut d = hyp_distance(&o, &q);
        loop {
            let best = letters
                .iter()
                .map(|&l| {
                    let m = self.letter_matrix(l);
                    let q2 = m.apply(&q);
                    (l, m, q2, hyp_distance(&o, &q2))
                })
                .min_by(|a, b| a.3.total_cmp(&b.3));
            match best {
                Some((l, m, q2, d2)) if d2 < d - 1e-12 => {
                    h = GroupElement {
                        word: Word::from_letters(std::iter::once(l).chain(h.word.letters().iter().copied())),
                        matrix: m * h.matrix,
                    };
                    q = q2;
                    d = d2;
                }
                _ => return (h, q),
            }
        }
    }

    /// Translates `h·axis(rep)` crossing `s`, one per coset of `<rep>`.
    pub fn axes_meeting_segment(
        &self,
        rep: &GroupElement,
        s: &crate::hyperbolic::Segment,
    ) -> Result<Vec<(GroupElement, Geodesic, crate::hyperbolic::Crossing)>> {
        let o = self.basepoint;
        let window = hyp_distance(&o, &s.a).max(hyp_distance(&o, &s.b));
        let orbit = AxisOrbit::build(self, rep, window)?;
        let mut out = Vec::new();
        for ax in &orbit.axes {
            let c = crate::hyperbolic::crosses(&ax.axis, s)?;
            if c != crate::hyperbolic::Crossing::None {
                let h = &ax.conjugator;
                let conj = self.element(h.word.concat(&rep.word).concat(&h.word.inverse()));
                out.push((conj, ax.axis, c));
            }
        }
        Ok(out)
    }

    /// Canonical conjugacy-class words of length at most `bound`.
    pub fn classes_up_to(&self, bound: usize) -> Vec<GroupElement> {
        let letters = self.letters();
        let mut out: Vec<Word> = Vec::new();
        let mut layer = vec![Word::identity()];
        for _ in 0..bound {
            let mut next = Vec::new();
            for w in &layer {
                for &l in &letters {
                    if w.letters().last() == Some(&l.inv()) {
                        continue;
                    }
                    let mut v = w.letters().to_vec();
                    v.push(l);
                    let v = Word(v);
                    out.push(v.canonical_cyclic());
                    next.push(v);
                }
            }
            layer = next;
        }
        out.retain(|w| !w.is_empty());
        out.sort();
        out.dedup();
        out.sort_by_key(|w| w.len());
        out.into_iter().map(|w| self.element(w)).collect()
    }

    /// Primitive element `r` and power `k` with `g` conjugate to `r^k`.
    pub fn primitive_root(&self, g: &GroupElement) -> Result<(GroupElement, u32)> {
        let c = g.word.canonical_cyclic();
        let (root, k) = c.root();
        let root = self.element(root);
        let len = root.translation_length()?;
        let ax = root.axis()?;
        let budget = 2.0 * ax.distance_to(&self.basepoint) + len + 1e-6;
        // Geometric check for roots hidden by the relators.
        if self.relators.is_empty() || budget > 9.0 {
            return Ok((root, k));
        }
        let ball = self.enumerate_ball(budget)?;
        let mut best = (root.clone(), 1u32);
        for h in &ball.elements {
            if !h.is_hyperbolic() {
                continue;
            }
            let l = h.translation_length()?;
            if l < len - 1e-9 && h.axis()?.same_as(&ax) {
                let ratio = len / l;
                let m = ratio.round();
                if (ratio - m).abs() < 1e-6 && m as u32 > best.1 {
                    best = (h.clone(), m as u32);
                }
            }
        }
        if best.1 > 1 {
            Ok((self.cyclic_reduce(&best.0), k * best.1))
        } else {
            Ok((root, k))
        }
    }
}

struct Node {
    element: GroupElement,
    point: PlanePoint,
    disp: f64,
}

fn key_of(p: &PlanePoint) -> [f64; 2] {
    let v = p.to_hyperboloid();
    [v[1], v[2]]
}

/// Elements of the group moving the basepoint at most `radius`.
#[derive(Clone, Debug)]
pub struct OrbitBall {
    pub radius: f64,
    pub elements: Vec<GroupElement>,
    pub complete: bool,
}

impl OrbitBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Bucketed lookup of nearby keys; each key is checked against the cells it
/// could round into.
#[derive(Clone, Debug)]
pub(crate) struct ProximityIndex<const N: usize> {
    quantum: f64,
    cells: HashMap<[i64; N], Vec<([f64; N], usize)>>,
}

impl<const N: usize> ProximityIndex<N> {
    pub(crate) fn new(quantum: f64) -> Self {
        Self {
            quantum,
            cells: HashMap::new(),
        }
    }

    fn cell(&self, key: &[f64; N]) -> [i64; N] {
        key.map(|x| (x / self.quantum).floor() as i64)
    }

    /// First stored id whose key lies within one quantum and passes `accept`.
    pub(crate) fn find(&self, key: &[f64; N], accept: impl Fn(usize) -> bool) -> Option<usize> {
        let base = self.cell(key);
        for mask in 0..(1usize << N) {
            let mut c = base;
            for (d, cd) in c.iter_mut().enumerate() {
                if mask >> d & 1 == 1 {
                    let frac = key[d] / self.quantum - base[d] as f64;
                    *cd += if frac < 0.5 { -1 } else { 1 };
                }
            }
            if let Some(list) = self.cells.get(&c) {
                for (k, id) in list {
                    let close = k.iter().zip(key).all(|(a, b)| (a - b).abs() <= self.quantum);
                    if close && accept(*id) {
                        return Some(*id);
                    }
                }
            }
        }
        None
    }

    pub(crate) fn insert(&mut self, key: [f64; N], id: usize) {
        let c = self.cell(&key);
        self.cells.entry(c).or_default().push((key, id));
    }
}

/// Symmetric key of an unordered endpoint pair.
pub(crate) fn geodesic_key(g: &Geodesic) -> [f64; 4] {
    let [p, q] = g.endpoints();
    let (z1, z2) = (p.to_unit(), q.to_unit());
    let s = z1 + z2;
    let m = z1 * z2;
    [s.re, s.im, m.re, m.im]
}

/// A translate `h·axis(rep)` with its distance from the basepoint.
#[derive(Clone, Debug)]
pub struct OrbitAxis {
    pub axis: Geodesic,
    pub conjugator: GroupElement,
    pub distance: f64,
}

/// All translates of the axis of `rep` within `window` of the basepoint,
/// sorted by distance.
#[derive(Clone, Debug)]
pub struct AxisOrbit {
    pub rep: GroupElement,
    pub window: f64,
    pub axes: Vec<OrbitAxis>,
}

impl AxisOrbit {
    /// Every translate within `window` of `o` carries a point of the orbit of
    /// the foot of `o` on the axis within `ℓ/2` of its own foot, so a ball
    /// of radius `window + d(o, axis) + ℓ/2` sees all of them.
    pub fn build(pres: &SurfacePresentation, rep: &GroupElement, window: f64) -> Result<Self> {
        let axis = rep.axis()?;
        let len = rep.translation_length()?;
        let o = pres.basepoint();
        let radius = window + axis.distance_to(&o) + len / 2.0 + 1e-9;
        let ball = pres.enumerate_ball(radius)?;
        let mut index = ProximityIndex::<4>::new(1e-7);
        let mut axes: Vec<OrbitAxis> = Vec::new();
        for h in &ball.elements {
            let g = h.matrix.apply_geodesic(&axis);
            let distance = g.distance_to(&o);
            if distance > window {
                continue;
            }
            let key = geodesic_key(&g);
            if index.find(&key, |id| axes[id].axis.same_as(&g)).is_some() {
                continue;
            }
            index.insert(key, axes.len());
            axes.push(OrbitAxis {
                axis: g,
                conjugator: h.clone(),
                distance,
            });
        }
        axes.sort_by(|a, b| a.distance.total_cmp(&b.distance));
        Ok(Self {
            rep: rep.clone(),
            window,
            axes,
        })
    }

    pub fn within(&self, r: f64) -> impl Iterator<Item = &OrbitAxis> {
        self.axes.iter().take_while(move |a| a.distance <= r)
    }
}

impl fmt::Display for SurfacePresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (rank {})", self.name, self.rank())
    }
}
