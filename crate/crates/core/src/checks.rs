//! Verification of declared decompositions, chain distances, hyperbolicity
//! bounds, Gromov-Hausdorff relations and fixed points of the action.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::currents::{AtomicCurrent, GeodesicCurrent};
use crate::dual::{delta_lower_bound_boxes, dual_distance, translation_length, DeltaSearch, SAME_POINT_TOL};
use crate::error::{Error, Result};
use crate::group::{GroupElement, SurfacePresentation};
use crate::hyperbolic::{crosses, hyp_distance, Crossing, PlanePoint, Segment};

/// Shipped fixture files by name.
pub fn fixture(name: &str) -> Option<&'static str> {
    Some(match name {
        "genus2_decomposition" => include_str!("../data/fixtures/genus2_decomposition.json"),
        "genus2_two_piece" => include_str!("../data/fixtures/genus2_two_piece.json"),
        "genus2_multicurve" => include_str!("../data/fixtures/genus2_multicurve.json"),
        "torus_crossing_pair" => include_str!("../data/fixtures/torus_crossing_pair.json"),
        _ => return None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PieceType {
    /// Filling in its subsurface.
    #[serde(rename = "1")]
    Filling,
    /// A measured lamination.
    #[serde(rename = "3")]
    Lamination,
}

/// A declared splitting of a current into subcurrents and special curves.
#[derive(Clone, Debug)]
pub struct DecompositionSpec {
    pub subcurrents: Vec<(GeodesicCurrent, PieceType)>,
    pub special_curves: Vec<(GroupElement, f64)>,
}

#[derive(Deserialize)]
struct SubcurrentFile {
    #[serde(rename = "type")]
    kind: u8,
    current: serde_json::Value,
}

#[derive(Deserialize)]
struct SpecialFile {
    word: String,
    weight: f64,
}

#[derive(Deserialize)]
struct DecompositionFile {
    #[serde(default)]
    presentation: Option<String>,
    subcurrents: Vec<SubcurrentFile>,
    #[serde(default)]
    special_curves: Vec<SpecialFile>,
}

impl DecompositionSpec {
    /// Reads `{presentation, subcurrents: [{type, current}], special_curves: [{word, weight}]}`.
    pub fn from_json_str(text: &str, pres: Arc<SurfacePresentation>) -> Result<Self> {
        let file: DecompositionFile = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(name) = &file.presentation {
            if name != pres.name() {
                return Err(Error::PresentationMismatch);
            }
        }
        let subcurrents = file
            .subcurrents
            .iter()
            .map(|s| {
                let kind = match s.kind {
                    1 => PieceType::Filling,
                    3 => PieceType::Lamination,
                    k => return Err(Error::Config(format!("subcurrent type {k} is not 1 or 3"))),
                };
                Ok((GeodesicCurrent::from_json_str(&s.current.to_string(), pres.clone())?, kind))
            })
            .collect::<Result<Vec<_>>>()?;
        let special_curves = file
            .special_curves
            .iter()
            .map(|s| {
                if !(s.weight >= 0.0) || !s.weight.is_finite() {
                    return Err(Error::InvalidWeight(s.weight));
                }
                Ok((pres.parse_element(&s.word)?, s.weight))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            subcurrents,
            special_curves,
        })
    }

    pub fn from_path(path: &Path, pres: Arc<SurfacePresentation>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
            _ => Error::Io(e),
        })?;
        Self::from_json_str(&text, pres)
    }

    /// Atomic current on the special curves of positive weight.
    pub fn special_current(&self, pres: &Arc<SurfacePresentation>) -> Result<Option<AtomicCurrent>> {
        let parts: Vec<_> = self
            .special_curves
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(g, w)| (g.clone(), *w))
            .collect();
        if parts.is_empty() {
            return Ok(None);
        }
        Ok(Some(AtomicCurrent::new(pres.clone(), parts)?))
    }

    /// The sum of subcurrents and weighted special curves.
    pub fn total(&self) -> Result<GeodesicCurrent> {
        let pres = self
            .subcurrents
            .first()
            .map(|(c, _)| c.presentation().clone())
            .ok_or_else(|| Error::Config("decomposition without subcurrents".into()))?;
        let mut parts: Vec<GeodesicCurrent> = self.subcurrents.iter().map(|(c, _)| c.clone()).collect();
        if let Some(s) = self.special_current(&pres)? {
            parts.push(GeodesicCurrent::Atomic(s));
        }
        GeodesicCurrent::sum(parts)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecialViolation {
    pub curve: String,
    pub witness: String,
    /// `i(c, s)` for the witness `c`, or `i(s, s)` when the curve is not simple.
    pub crossing: f64,
    /// `i(μ, c)` (or `i(μ, s)` for the curve itself).
    pub mu_intersection: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecialCurveReport {
    pub word_bound: usize,
    pub classes_checked: usize,
    pub violations: Vec<SpecialViolation>,
    pub passed: bool,
}

/// For each special `s`: `s` is simple, `i(μ, s) = 0`, and every class up to
/// the word bound crossing `s` has positive intersection with `μ`.
pub fn verify_special_curves(mu: &GeodesicCurrent, d: &DecompositionSpec, word_bound: usize) -> Result<SpecialCurveReport> {
    let pres = mu.presentation().clone();
    let classes: Vec<GroupElement> = pres
        .classes_up_to(word_bound)
        .into_iter()
        .filter(|c| c.is_hyperbolic())
        .collect();
    let mut violations = Vec::new();
    for (s, _) in &d.special_curves {
        let label = pres.format_word(&s.word);
        let single = AtomicCurrent::new(pres.clone(), vec![(s.clone(), 1.0)])?;
        let self_int = single.intersection_with_class(s)?;
        let mu_s = mu.intersection_with_class(s)?;
        if self_int > 0.0 || mu_s > 1e-12 {
            violations.push(SpecialViolation {
                curve: label.clone(),
                witness: label.clone(),
                crossing: self_int,
                mu_intersection: mu_s,
            });
        }
        let found: Vec<Option<SpecialViolation>> = classes
            .par_iter()
            .map(|c| -> Result<Option<SpecialViolation>> {
                let ics = single.intersection_with_class(c)?;
                if ics == 0.0 {
                    return Ok(None);
                }
                let imu = mu.intersection_with_class(c)?;
                Ok((imu <= 1e-12).then(|| SpecialViolation {
                    curve: label.clone(),
                    witness: pres.format_word(&c.word),
                    crossing: ics,
                    mu_intersection: imu,
                }))
            })
            .collect::<Result<_>>()?;
        violations.extend(found.into_iter().flatten());
    }
    Ok(SpecialCurveReport {
        word_bound,
        classes_checked: classes.len(),
        passed: violations.is_empty(),
        violations,
    })
}

/// One sampled pair and its chain through the special lifts.
#[derive(Clone, Debug, Serialize)]
pub struct ChainCheck {
    pub x: PlanePoint,
    pub y: PlanePoint,
    /// Points where `[x, y]` meets special lifts, in order.
    pub links: Vec<PlanePoint>,
    pub direct: f64,
    pub chain: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub samples: usize,
    pub max_deviation: f64,
    pub failures: Vec<ChainCheck>,
    pub passed: bool,
}

/// Crossing points of `[x, y]` with lifts of the special curves, ordered from
/// `x`.
pub fn special_crossings(special: &AtomicCurrent, x: &PlanePoint, y: &PlanePoint) -> Result<Vec<PlanePoint>> {
    let o = special.presentation().basepoint();
    let r = hyp_distance(&o, x).max(hyp_distance(&o, y)) + 1e-9;
    let seg = Segment::closed(*x, *y);
    let mut out = Vec::new();
    for idx in 0..special.components().len() {
        for ax in special.orbit(idx, r)?.within(r) {
            if crosses(&ax.axis, &seg)? == Crossing::Interior {
                let line = seg.line()?;
                if let Some(p) = ax.axis.intersection(&line) {
                    out.push(p);
                }
            }
        }
    }
    out.sort_by(|p, q| hyp_distance(x, p).total_cmp(&hyp_distance(x, q)));
    Ok(out)
}

fn chain_sum(parts: &[GeodesicCurrent], chain: &[PlanePoint]) -> Result<f64> {
    let mut s = crate::numeric::CompensatedSum::new();
    for w in chain.windows(2) {
        for p in parts {
            s.add(dual_distance(p, &w[0], &w[1])?);
        }
    }
    Ok(s.value())
}

/// Compares `d_μ(x, y)` with the sum over the straight chain through the
/// special lifts separating `x` from `y`, for sampled pairs separated by at
/// least one lift.
pub fn verify_chain_distance(
    mu: &GeodesicCurrent,
    d: &DecompositionSpec,
    samples: usize,
    sample_radius: f64,
    seed: u64,
) -> Result<ChainReport> {
    let pres = mu.presentation().clone();
    let special = d
        .special_current(&pres)?
        .ok_or_else(|| Error::Config("chain check needs a special curve of positive weight".into()))?;
    let mut parts: Vec<GeodesicCurrent> = d.subcurrents.iter().map(|(c, _)| c.clone()).collect();
    parts.push(GeodesicCurrent::Atomic(special.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    let mut attempts = 0;
    while pairs.len() < samples {
        attempts += 1;
        if attempts > 200 * samples.max(1) {
            return Err(Error::Config("too few pairs separated by a special lift".into()));
        }
        let x = random_point(&mut rng, &pres.basepoint(), sample_radius);
        let y = random_point(&mut rng, &pres.basepoint(), sample_radius);
        let links = special_crossings(&special, &x, &y)?;
        if !links.is_empty() {
            pairs.push((x, y, links));
        }
    }
    let checks = pairs
        .into_par_iter()
        .map(|(x, y, links)| -> Result<ChainCheck> {
            let mut chain = vec![x];
            chain.extend(links.iter().copied());
            chain.push(y);
            Ok(ChainCheck {
                direct: dual_distance(mu, &x, &y)?,
                chain: chain_sum(&parts, &chain)?,
                x,
                y,
                links,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = checks.iter().map(|c| (c.direct - c.chain).abs()).fold(0.0, f64::max);
    let failures: Vec<ChainCheck> = checks.into_iter().filter(|c| (c.direct - c.chain).abs() > 1e-9).collect();
    Ok(ChainReport {
        samples,
        max_deviation,
        passed: failures.is_empty(),
        failures,
    })
}

/// Uniform in the hyperbolic ball of radius `r` about `o`.
pub fn random_point<R: Rng>(rng: &mut R, o: &PlanePoint, r: f64) -> PlanePoint {
    let u: f64 = rng.gen();
    // Area of a ball of radius t is proportional to cosh t - 1.
    let t = (1.0 + u * (r.cosh() - 1.0)).acosh();
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    crate::dual::ray_point(o, phi, t)
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceIntersectionReport {
    pub pairs_checked: usize,
    pub max_distance: f64,
    pub witness: Option<(PlanePoint, PlanePoint)>,
    pub passed: bool,
}

/// Points on a special lift are at dual distance zero from each other.
pub fn verify_piece_intersection(mu: &GeodesicCurrent, d: &DecompositionSpec, pairs: usize, seed: u64) -> Result<PieceIntersectionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_distance: f64 = 0.0;
    let mut witness = None;
    let mut checked = 0;
    for (s, _) in &d.special_curves {
        let axis = s.axis()?;
        let foot = axis.foot();
        for _ in 0..pairs {
            let x = axis.point_at(&foot, rng.gen_range(-2.0..2.0));
            let y = axis.point_at(&foot, rng.gen_range(-2.0..2.0));
            let dist = dual_distance(mu, &x, &y)?;
            checked += 1;
            if dist > max_distance {
                max_distance = dist;
                witness = Some((x, y));
            }
        }
    }
    Ok(PieceIntersectionReport {
        pairs_checked: checked,
        max_distance,
        passed: max_distance <= SAME_POINT_TOL,
        witness: witness.filter(|_| max_distance > SAME_POINT_TOL),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaDecompositionReport {
    pub truncation_radius: f64,
    pub delta_mu: f64,
    pub delta_pieces: Vec<f64>,
    /// `max δ_ν ≤ δ_μ`.
    pub lower_holds: bool,
    /// `δ_μ ≤ Σ δ_ν`.
    pub upper_holds: bool,
    pub passed: bool,
}

/// Both sides of `max δ_ν ≤ δ_μ ≤ Σ δ_ν`, on lower bounds from the same
/// search at the same truncation radius.
pub fn verify_delta_decomposition(mu: &GeodesicCurrent, d: &DecompositionSpec, search: &DeltaSearch) -> Result<DeltaDecompositionReport> {
    let delta_mu = delta_lower_bound_boxes(mu, search)?.value;
    let delta_pieces = d
        .subcurrents
        .iter()
        .map(|(c, _)| Ok(delta_lower_bound_boxes(c, search)?.value))
        .collect::<Result<Vec<_>>>()?;
    let max = delta_pieces.iter().copied().fold(0.0, f64::max);
    let sum: f64 = delta_pieces.iter().sum();
    let lower_holds = max <= delta_mu + 1e-9;
    let upper_holds = delta_mu <= sum + 1e-9;
    Ok(DeltaDecompositionReport {
        truncation_radius: search.radius,
        delta_mu,
        delta_pieces,
        lower_holds,
        upper_holds,
        passed: lower_holds && upper_holds,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonRelationReport {
    pub k: Vec<PlanePoint>,
    pub p: Vec<String>,
    pub epsilon: f64,
    pub worst_distortion: f64,
    pub equivariance_ok: bool,
    pub passed: bool,
}

/// The identity relation on representatives of `K` and of its translates by
/// `P`, measured between the two duals.
pub fn gh_epsilon_related(
    mu: &GeodesicCurrent,
    mu2: &GeodesicCurrent,
    k: &[PlanePoint],
    p: &[GroupElement],
    epsilon: f64,
) -> Result<EpsilonRelationReport> {
    let pres = mu.presentation();
    if pres.name() != mu2.presentation().name() {
        return Err(Error::PresentationMismatch);
    }
    let pairs: Vec<(usize, usize)> = (0..k.len()).flat_map(|i| (i + 1..k.len()).map(move |j| (i, j))).collect();
    let distortion = |pts: &[PlanePoint]| -> Result<f64> {
        let ds = pairs
            .par_iter()
            .map(|&(i, j)| Ok((dual_distance(mu, &pts[i], &pts[j])? - dual_distance(mu2, &pts[i], &pts[j])?).abs()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(ds.into_iter().fold(0.0, f64::max))
    };
    let worst_distortion = distortion(k)?;
    let mut equivariance_ok = true;
    for g in p {
        let moved: Vec<PlanePoint> = k.iter().map(|x| g.apply(x)).collect();
        for &(i, j) in &pairs {
            for c in [mu, mu2] {
                let before = dual_distance(c, &k[i], &k[j])?;
                let after = dual_distance(c, &moved[i], &moved[j])?;
                if (before - after).abs() > 1e-9 {
                    equivariance_ok = false;
                }
            }
        }
    }
    Ok(EpsilonRelationReport {
        k: k.to_vec(),
        p: p.iter().map(|g| pres.format_word(&g.word)).collect(),
        epsilon,
        worst_distortion,
        equivariance_ok,
        passed: worst_distortion < epsilon && equivariance_ok,
    })
}

/// A point `x` on the axis of `g` with `d_μ(x, g·x) = 0`, if one is found.
pub fn fixed_point_probe(mu: &GeodesicCurrent, g: &GroupElement, samples: usize) -> Result<Option<PlanePoint>> {
    let (g, _) = crate::currents::cyclic_root(mu.presentation(), g);
    let g = &g;
    let axis = g.axis()?;
    let len = g.translation_length()?;
    let foot = axis.project(&mu.presentation().basepoint());
    for k in 0..samples.max(1) {
        let x = axis.point_at(&foot, len * (k as f64 + 0.37) / samples.max(1) as f64);
        let gx = crate::currents::apply_stepwise(mu.presentation(), g, &x);
        if dual_distance(mu, &x, &gx)? <= SAME_POINT_TOL {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// `fixed_point_probe` agrees with `translation_length` vanishing.
pub fn fixed_point_consistent(mu: &GeodesicCurrent, g: &GroupElement, samples: usize) -> Result<bool> {
    let witness = fixed_point_probe(mu, g, samples)?;
    Ok(witness.is_some() == (translation_length(mu, g)? <= SAME_POINT_TOL))
}

#[derive(Clone, Debug, Serialize)]
pub struct CoboundednessReport {
    /// Largest `d_μ` from the basepoint to a translated sample.
    pub max_radius: f64,
    /// Largest hyperbolic distance from the basepoint to a translated sample.
    pub max_hyperbolic_radius: f64,
    pub within_guess: bool,
}

/// Moves each sample near the basepoint and measures how far it is in the
/// dual.
pub fn coboundedness_probe(mu: &GeodesicCurrent, points: &[PlanePoint], base_radius_guess: f64) -> Result<CoboundednessReport> {
    if points.is_empty() {
        return Err(Error::Config("no sample points".into()));
    }
    let pres = mu.presentation();
    let o = pres.basepoint();
    let radii = points
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let (_, q) = pres.reduce_point(p);
            Ok((dual_distance(mu, &o, &q)?, hyp_distance(&o, &q)))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_radius = radii.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_hyperbolic_radius = radii.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(CoboundednessReport {
        max_radius,
        max_hyperbolic_radius,
        within_guess: max_hyperbolic_radius <= base_radius_guess,
    })
}
