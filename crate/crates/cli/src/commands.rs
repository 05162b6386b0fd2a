use std::path::Path;

use geodual::checks::{
    self, gh_epsilon_related, random_point, verify_chain_distance, verify_delta_decomposition, verify_piece_intersection,
    verify_special_curves, DecompositionSpec,
};
use geodual::currents::GeodesicCurrent;
use geodual::dual::{
    delta_convergence, dual_distance, four_point_defect, translation_length, DeltaSearch, LIOUVILLE_DELTA,
};
use geodual::graph::{build_arrangement, build_dual_graph, quotient_classes, write_svg};
use geodual::hyperbolic::{hyp_distance, PlanePoint};
use geodual::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{load_current, parse_point, Context};

type Outcome = (Value, Value, bool);

pub fn distance(ctx: &Context, current: Option<&str>, from: &str, to: &str) -> Result<Outcome> {
    let mu = load_current(current, &ctx.pres)?;
    let (p, q) = (parse_point(from)?, parse_point(to)?);
    let d = dual_distance(&mu, &p, &q)?;
    Ok((
        json!({"from": p, "to": q}),
        json!({"distance": d, "hyperbolic_distance": hyp_distance(&p, &q)}),
        true,
    ))
}

pub fn length_spectrum(ctx: &Context, current: Option<&str>, word_bound: usize, max_power: u32) -> Result<Outcome> {
    let mu = load_current(current, &ctx.pres)?;
    let pres = &ctx.pres;
    let mut rows = Vec::new();
    let mut passed = true;
    for c in pres.classes_up_to(word_bound).into_iter().filter(|c| c.is_hyperbolic()) {
        let length = translation_length(&mu, &c)?;
        let intersection = mu.intersection_with_class(&c)?;
        let agree = (length - intersection).abs() <= 1e-9 * intersection.abs().max(1.0);
        passed &= agree;
        rows.push(json!({
            "class": pres.format_word(&c.word),
            "length": length,
            "intersection": intersection,
            "agree": agree,
        }));
    }
    let mut powers = Vec::new();
    for l in pres.letters().into_iter().filter(|l| !l.inverse) {
        let w = geodual::group::Word::from_letters([l]);
        let g = pres.element(w.clone());
        let base = translation_length(&mu, &g)?;
        for n in 2..=max_power {
            let gn = pres.element(w.pow(n));
            let length = translation_length(&mu, &gn)?;
            let agree = (length - n as f64 * base).abs() <= 1e-9 * length.abs().max(1.0);
            passed &= agree;
            powers.push(json!({
                "class": pres.format_word(&gn.word),
                "power": n,
                "length": length,
                "expected": n as f64 * base,
                "agree": agree,
            }));
        }
    }
    Ok((
        json!({"word_bound": word_bound, "max_power": max_power}),
        json!({"classes": rows, "powers": powers}),
        passed,
    ))
}

pub fn delta(ctx: &Context, current: Option<&str>, radii: &[f64], grid: usize) -> Result<Outcome> {
    let mu = load_current(current, &ctx.pres)?;
    if radii.is_empty() {
        return Err(Error::Config("at least one radius is needed".into()));
    }
    let search = DeltaSearch {
        grid,
        ..Default::default()
    };
    let table = delta_convergence(&mu, radii, &search)?;
    let best = table.last().cloned();
    Ok((
        json!({"radii": radii, "grid": grid}),
        json!({"certificate": best, "convergence": table}),
        true,
    ))
}

pub fn dual_graph(ctx: &Context, current: Option<&str>, radius: f64, svg: Option<&Path>) -> Result<Outcome> {
    let mu = load_current(current, &ctx.pres)?;
    let atomic = mu
        .as_atomic()
        .ok_or_else(|| Error::Unsupported("dual graphs of non-atomic currents".into()))?;
    let arrangement = build_arrangement(atomic, radius)?;
    let graph = build_dual_graph(quotient_classes(&arrangement), &mu)?;
    if let Some(path) = svg {
        write_svg(&arrangement, Some(&graph), path)?;
    }
    Ok((
        json!({"radius": radius}),
        json!({
            "graph": graph.to_json(),
            "forest": graph.is_forest(true),
            "forest_without_truncated": graph.is_forest(false),
            "connected": graph.is_connected(),
        }),
        true,
    ))
}

pub struct VerifyParams {
    pub decomposition: Option<String>,
    pub samples: usize,
    pub radius: f64,
    pub word_bound: usize,
    pub epsilon: f64,
}

fn decomposition_text(spec: &str) -> Result<String> {
    match checks::fixture(spec) {
        Some(t) => Ok(t.to_string()),
        None => std::fs::read_to_string(spec).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(spec.to_string()),
            _ => Error::Io(e),
        }),
    }
}

/// Presentation named in a decomposition file, if any.
pub fn decomposition_presentation(spec: &str) -> Result<Option<String>> {
    let v: Value = serde_json::from_str(&decomposition_text(spec)?).map_err(|e| Error::Config(e.to_string()))?;
    Ok(v.get("presentation").and_then(Value::as_str).map(str::to_string))
}

fn suite(name: &str, passed: bool, detail: Value) -> Value {
    json!({"suite": name, "status": if passed { "pass" } else { "fail" }, "detail": detail})
}

fn skipped(name: &str, reason: &str) -> Value {
    json!({"suite": name, "status": "skipped", "detail": reason})
}

fn max_abs(mut it: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    it.try_fold(0.0_f64, |m, v| Ok(m.max(v?.abs())))
}

pub fn verify(ctx: &Context, current: Option<&str>, params: &VerifyParams) -> Result<Outcome> {
    let pres = &ctx.pres;
    let decomposition = match &params.decomposition {
        Some(spec) => Some(DecompositionSpec::from_json_str(&decomposition_text(spec)?, pres.clone())?),
        None => None,
    };
    let mu = match &decomposition {
        Some(d) => d.total()?,
        None => load_current(current, pres)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let o = pres.basepoint();
    let pts: Vec<PlanePoint> = (0..params.samples.max(3))
        .map(|_| random_point(&mut rng, &o, params.radius))
        .collect();
    let n = pts.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = dual_distance(&mu, &pts[i], &pts[j])?;
        }
    }
    let mut suites = Vec::new();

    let mut sym = 0.0_f64;
    let mut tri = 0.0_f64;
    let mut diag = 0.0_f64;
    for i in 0..n {
        diag = diag.max(dist[i][i]);
        for j in 0..n {
            sym = sym.max((dist[i][j] - dist[j][i]).abs());
            for k in 0..n {
                tri = tri.max(dist[i][k] - dist[i][j] - dist[j][k]);
            }
        }
    }
    suites.push(suite(
        "metric_axioms",
        diag == 0.0 && sym <= 1e-12 && tri <= 1e-9,
        json!({"diagonal": diag, "asymmetry": sym, "triangle_excess": tri.max(0.0)}),
    ));

    let gens: Vec<_> = pres
        .letters()
        .into_iter()
        .map(|l| pres.element(geodual::group::Word::from_letters([l])))
        .collect();
    let inv = max_abs(gens.iter().flat_map(|g| {
        (0..n.min(12)).map(move |i| (i, (i + 1) % n)).map(|(i, j)| {
            let (gp, gq) = (g.apply(&pts[i]), g.apply(&pts[j]));
            Ok(dual_distance(&mu, &gp, &gq)? - dist[i][j])
        })
    }))?;
    suites.push(suite("invariance", inv <= 1e-9, json!({"max_deviation": inv})));

    match mu.parts() {
        (None, Some(l)) => {
            let mut dev = 0.0_f64;
            for i in 0..n {
                for j in 0..n {
                    dev = dev.max((dist[i][j] - l.scale * hyp_distance(&pts[i], &pts[j])).abs());
                }
            }
            suites.push(suite("crofton", dev <= 1e-9, json!({"max_deviation": dev, "scale": l.scale})));
            let bound = 2.0 * l.scale * LIOUVILLE_DELTA + 1e-6;
            let mut worst = 0.0_f64;
            for q in pts.chunks_exact(4) {
                worst = worst.max(four_point_defect(&mu, &[q[0], q[1], q[2], q[3]])?.defect);
            }
            suites.push(suite("four_point", worst <= bound, json!({"max_defect": worst, "bound": bound})));
        }
        (Some(a), None) => {
            suites.push(skipped("crofton", "current is not a multiple of the Liouville current"));
            let comps = a.components().len();
            if comps >= 2 {
                let singles: Vec<GeodesicCurrent> = (0..comps)
                    .map(|k| GeodesicCurrent::Atomic(a.component_current(k)))
                    .collect();
                let mut dev = 0.0_f64;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let mut s = 0.0;
                        for c in &singles {
                            s += dual_distance(c, &pts[i], &pts[j])?;
                        }
                        dev = dev.max((dist[i][j] - s).abs());
                    }
                }
                suites.push(suite("sum_of_components", dev <= 1e-12 * (1.0 + comps as f64), json!({"max_deviation": dev})));
            } else {
                suites.push(skipped("sum_of_components", "fewer than two components"));
            }
            suites.push(skipped("four_point", "no closed form for the constant"));
        }
        _ => {
            suites.push(skipped("crofton", "mixed current"));
            suites.push(skipped("four_point", "mixed current"));
        }
    }

    let k: Vec<PlanePoint> = pts.iter().take(10).copied().collect();
    let h = 1e-2;
    let scaled = mu.scaled(1.0 + h)?;
    let gh = gh_epsilon_related(&mu, &scaled, &k, &gens, params.epsilon.max(f64::MIN_POSITIVE))?;
    let max_d = k
        .iter()
        .enumerate()
        .flat_map(|(i, _)| (0..k.len()).map(move |j| (i, j)))
        .map(|(i, j)| dist[i][j])
        .fold(0.0, f64::max);
    let linear = (gh.worst_distortion - h * max_d).abs() <= 1e-9 * (1.0 + max_d);
    suites.push(suite(
        "gh_scaling",
        linear && gh.equivariance_ok,
        json!({"h": h, "worst_distortion": gh.worst_distortion, "expected": h * max_d, "within_epsilon": gh.passed}),
    ));

    if let Some(d) = &decomposition {
        let special = verify_special_curves(&mu, d, params.word_bound)?;
        suites.push(suite("special_curves", special.passed, serde_json::to_value(&special).unwrap()));
        if d.special_curves.iter().any(|(_, w)| *w > 0.0) {
            let chain = verify_chain_distance(&mu, d, params.samples, params.radius + 1.0, ctx.seed)?;
            suites.push(suite("chain_distance", chain.passed, serde_json::to_value(&chain).unwrap()));
        } else {
            suites.push(skipped("chain_distance", "no special curve of positive weight"));
        }
        let pieces = verify_piece_intersection(&mu, d, params.samples, ctx.seed)?;
        suites.push(suite("piece_intersection", pieces.passed, serde_json::to_value(&pieces).unwrap()));
        let search = DeltaSearch {
            radius: 1.6,
            ..Default::default()
        };
        let dd = verify_delta_decomposition(&mu, d, &search)?;
        suites.push(suite("delta_decomposition", dd.passed, serde_json::to_value(&dd).unwrap()));
    }

    let passed = suites.iter().all(|s| s["status"] != "fail");
    Ok((
        json!({
            "samples": n,
            "sample_radius": params.radius,
            "word_bound": params.word_bound,
            "epsilon": params.epsilon,
            "decomposition": params.decomposition,
        }),
        json!({"suites": suites}),
        passed,
    ))
}
