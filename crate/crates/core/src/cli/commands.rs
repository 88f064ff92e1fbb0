//! Command bodies. Each takes a resolved config and returns the numbers to report.

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{
    weights, CircuitDemoConfig, MultiConfig, NogoConfig, OpticsConfig, SuperposeTwoConfig,
    SweepConfig,
};
use super::{CliError, Report};
use crate::circuits::{
    circuit_from_specs, controlled_circuit, extract_result, parse_bits, prepare_encoded,
    run_subroutine_superposition, sample_shots, QubitRegister, ShotSummary,
};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};
use crate::nogo::{self, SearchOptions};
use crate::protocols::{self, choi_distance, ProtocolSpec};
use crate::qstate::{
    coherent_truncated, haar_random, random_with_overlap, state_overlap, OverlapSpec, PureState,
    SeededRng,
};
use crate::rules::{self, Weights};

/// Tolerance for the self-checks that turn into exit code 4.
const CHECK_TOL: f64 = 1e-10;
const FORMULA_TOL: f64 = 1e-8;
const LAMBDA_TOL: f64 = 1e-9;
/// Largest data register for which circuit-demo also runs the full protocol.
const PIPELINE_MAX_QUBITS: usize = 3;

fn cplx(z: C64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|r| Value::Array(m.row(r).iter().map(|&z| cplx(z)).collect()))
            .collect(),
    )
}

fn vector_json(v: &CVector) -> Value {
    Value::Array(v.entries().iter().map(|&z| cplx(z)).collect())
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn shots_json(s: &Option<ShotSummary>) -> Value {
    s.as_ref().map_or(Value::Null, |s| {
        serde_json::to_value(s).expect("shot summary serializes")
    })
}

fn sampled(prob: f64, shots: u64, rng: &mut SeededRng) -> Result<Option<ShotSummary>> {
    if shots == 0 {
        return Ok(None);
    }
    sample_shots(prob, shots, rng).map(Some)
}

fn failures(checks: Vec<(bool, String)>) -> Option<String> {
    let failed: Vec<String> = checks.into_iter().filter(|c| !c.0).map(|c| c.1).collect();
    (!failed.is_empty()).then(|| failed.join("; "))
}

struct TwoTrial {
    probability: f64,
    formula: f64,
    fidelity: f64,
    shots: Option<ShotSummary>,
}

fn two_trial(cfg: &SuperposeTwoConfig, w: &Weights, seed: u64, trial: usize) -> Result<TwoTrial> {
    let mut rng = SeededRng::new(seed, trial as u64);
    let chi = haar_random(cfg.dim, &mut rng);
    let psi = random_with_overlap(&chi, OverlapSpec::new(cfg.c1)?, &mut rng)?;
    let phi = random_with_overlap(&chi, OverlapSpec::new(cfg.c2)?, &mut rng)?;
    let spec = ProtocolSpec::two_state(chi.clone(), cfg.c1, cfg.c2)?;
    let out = protocols::run_two(&spec, &w.as_state(), &psi, &phi)?;
    let (target, _) = rules::superpose_two(&chi, &psi, &phi, w)?;
    Ok(TwoTrial {
        probability: out.probability,
        formula: protocols::success_probability_two(w, cfg.c1, cfg.c2, &chi, &psi, &phi)?,
        fidelity: out.fidelity_with(&target)?,
        shots: sampled(out.probability, cfg.shots, &mut rng)?,
    })
}

pub(crate) fn superpose_two(cfg: &SuperposeTwoConfig) -> std::result::Result<Report, CliError> {
    let w = weights(&[cfg.alpha, cfg.beta])?;
    let seed = cfg.seed.expect("validated");
    let trials: Vec<TwoTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| two_trial(cfg, &w, seed, t))
        .collect::<Result<_>>()?;
    let max_fidelity_error = trials.iter().map(|t| 1.0 - t.fidelity).fold(0.0, f64::max);
    let max_delta = trials
        .iter()
        .map(|t| (t.probability - t.formula).abs())
        .fold(0.0, f64::max);
    let mean = trials.iter().map(|t| t.probability).sum::<f64>() / trials.len() as f64;
    let flagged = trials
        .iter()
        .filter(|t| t.shots.as_ref().is_some_and(|s| s.flagged))
        .count();
    let results = json!({
        "weights": w.coeffs().iter().map(|&z| cplx(z)).collect::<Vec<_>>(),
        "trials": trials.iter().enumerate().map(|(i, t)| json!({
            "trial": i,
            "probability": t.probability,
            "formula_probability": t.formula,
            "fidelity": t.fidelity,
            "shots": shots_json(&t.shots),
        })).collect::<Vec<_>>(),
        "summary": {
            "max_fidelity_error": max_fidelity_error,
            "max_probability_delta": max_delta,
            "mean_probability": mean,
            "flagged_shot_runs": flagged,
        },
    });
    Ok(Report {
        results,
        csv_header: ["trial", "probability", "formula_probability", "fidelity"]
            .map(String::from)
            .to_vec(),
        csv_rows: trials
            .iter()
            .enumerate()
            .map(|(i, t)| {
                vec![
                    i.to_string(),
                    fmt(t.probability),
                    fmt(t.formula),
                    fmt(t.fidelity),
                ]
            })
            .collect(),
        failed_check: failures(vec![
            (
                max_fidelity_error <= CHECK_TOL,
                format!("fidelity error {max_fidelity_error:e} exceeds {CHECK_TOL:e}"),
            ),
            (
                max_delta <= CHECK_TOL,
                format!("probability delta {max_delta:e} exceeds {CHECK_TOL:e}"),
            ),
        ]),
    })
}

struct SweepPoint {
    c1: f64,
    c2: f64,
    angle: f64,
    w: Weights,
    lambda_max: f64,
    lambda_numeric: f64,
    inequality: bool,
    p: f64,
    p_tilde: f64,
    dominates: bool,
}

fn sweep_point(
    cfg: &SweepConfig,
    index: usize,
    c1: f64,
    c2: f64,
    angle: f64,
) -> Result<SweepPoint> {
    let w = Weights::normalized(vec![
        c(angle.cos(), 0.0),
        C64::from_polar(angle.sin(), cfg.phase),
    ])?;
    let mut rng = SeededRng::new(cfg.seed.expect("validated"), index as u64);
    let chi = haar_random(cfg.dim, &mut rng);
    let psi = random_with_overlap(&chi, OverlapSpec::new(c1)?, &mut rng)?;
    let phi = random_with_overlap(&chi, OverlapSpec::new(c2)?, &mut rng)?;
    let report = protocols::compare_protocols(&chi, &w, c1, c2, &[(psi, phi)])?;
    let mix =
        protocols::chi_contracted_swap_mix(&chi, w.alpha() / c1.sqrt(), w.beta() / c2.sqrt())?;
    let lambda_numeric =
        linalg::hermitian_max_eigenvalue(&mix.matmul(&mix.dagger()).symmetrized())?;
    let (p, p_tilde) = report.probabilities[0];
    Ok(SweepPoint {
        c1,
        c2,
        angle,
        w,
        lambda_max: report.lambda_max,
        lambda_numeric,
        inequality: report.inequality_holds,
        p,
        p_tilde,
        dominates: report.tilde_dominates,
    })
}

pub(crate) fn sweep(cfg: &SweepConfig) -> std::result::Result<Report, CliError> {
    let mut grid = Vec::new();
    for &c1 in &cfg.c1_values {
        for &c2 in &cfg.c2_values {
            for &t in &cfg.angles {
                grid.push((c1, c2, t));
            }
        }
    }
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(c1, c2, t))| sweep_point(cfg, i, c1, c2, t))
        .collect::<Result<_>>()?;
    let worst_lambda = points
        .iter()
        .map(|p| (p.lambda_max - p.lambda_numeric).abs())
        .fold(0.0, f64::max);
    let all_dominate = points.iter().all(|p| p.dominates);
    let all_inequality = points.iter().all(|p| p.inequality);
    let rows: Vec<Value> = points
        .iter()
        .map(|p| {
            json!({
                "c1": p.c1,
                "c2": p.c2,
                "angle": p.angle,
                "alpha": cplx(p.w.alpha()),
                "beta": cplx(p.w.beta()),
                "lambda_max": p.lambda_max,
                "lambda_max_numeric": p.lambda_numeric,
                "inequality_holds": p.inequality,
                "p_succ": p.p,
                "p_tilde": p.p_tilde,
                "dominates": p.dominates,
            })
        })
        .collect();
    let header = [
        "c1",
        "c2",
        "angle",
        "alpha_re",
        "alpha_im",
        "beta_re",
        "beta_im",
        "lambda_max",
        "lambda_max_numeric",
        "inequality_holds",
        "p_succ",
        "p_tilde",
        "dominates",
    ];
    let csv_rows = points
        .iter()
        .map(|p| {
            vec![
                fmt(p.c1),
                fmt(p.c2),
                fmt(p.angle),
                fmt(p.w.alpha().re),
                fmt(p.w.alpha().im),
                fmt(p.w.beta().re),
                fmt(p.w.beta().im),
                fmt(p.lambda_max),
                fmt(p.lambda_numeric),
                p.inequality.to_string(),
                fmt(p.p),
                fmt(p.p_tilde),
                p.dominates.to_string(),
            ]
        })
        .collect();
    Ok(Report {
        results: json!({
            "points": rows,
            "summary": {
                "count": points.len(),
                "all_dominate": all_dominate,
                "all_inequality_holds": all_inequality,
                "max_lambda_discrepancy": worst_lambda,
            },
        }),
        csv_header: header.map(String::from).to_vec(),
        csv_rows,
        failed_check: failures(vec![
            (
                all_dominate,
                "fixed-coefficient protocol fell below the two-state one".into(),
            ),
            (all_inequality, "1/c1 + 1/c2 fell below lambda_max".into()),
            (
                worst_lambda <= LAMBDA_TOL,
                format!("lambda_max formula off by {worst_lambda:e}"),
            ),
        ]),
    })
}

struct MultiTrial {
    probability: f64,
    fidelity: f64,
    /// `(|Δp|, 1 − fidelity)` against the two-state protocol, for `d = 2`.
    two_state: Option<(f64, f64)>,
    shots: Option<ShotSummary>,
}

fn multi_trial(cfg: &MultiConfig, w: &Weights, seed: u64, trial: usize) -> Result<MultiTrial> {
    let mut rng = SeededRng::new(seed, trial as u64);
    let chi = haar_random(cfg.dim, &mut rng);
    let states: Vec<PureState> = cfg
        .overlaps
        .iter()
        .map(|&x| random_with_overlap(&chi, OverlapSpec::new(x)?, &mut rng))
        .collect::<Result<_>>()?;
    let spec = ProtocolSpec::multi_d(chi.clone(), &cfg.overlaps)?;
    let nu = w.as_state();
    let out = protocols::run_multi(&spec, &nu, &states)?;
    let (target, _) = rules::superpose_multi(&chi, &states, w)?;
    let two_state = if cfg.d == 2 {
        let two = ProtocolSpec::two_state(chi.clone(), cfg.overlaps[0], cfg.overlaps[1])?;
        let other = protocols::run_two(&two, &nu, &states[0], &states[1])?;
        let f = crate::qstate::fidelity(&target, other.state()?)?;
        let g = out.fidelity_with(&target)?;
        Some(((out.probability - other.probability).abs(), (f - g).abs()))
    } else {
        None
    };
    Ok(MultiTrial {
        probability: out.probability,
        fidelity: out.fidelity_with(&target)?,
        two_state,
        shots: sampled(out.probability, cfg.shots, &mut rng)?,
    })
}

pub(crate) fn multi(cfg: &MultiConfig) -> std::result::Result<Report, CliError> {
    let w = weights(&cfg.weights)?;
    let seed = cfg.seed.expect("validated");
    let trials: Vec<MultiTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| multi_trial(cfg, &w, seed, t))
        .collect::<Result<_>>()?;
    let max_fidelity_error = trials.iter().map(|t| 1.0 - t.fidelity).fold(0.0, f64::max);
    let mut checks = vec![(
        max_fidelity_error <= CHECK_TOL,
        format!("fidelity error {max_fidelity_error:e} exceeds {CHECK_TOL:e}"),
    )];
    let mut summary = json!({ "max_fidelity_error": max_fidelity_error });
    if cfg.d == 2 {
        let delta = trials
            .iter()
            .filter_map(|t| t.two_state)
            .map(|(dp, df)| dp.max(df))
            .fold(0.0, f64::max);
        let chi = haar_random(cfg.dim, &mut SeededRng::new(seed, cfg.trials as u64));
        let spec_d = ProtocolSpec::multi_d(chi.clone(), &cfg.overlaps)?;
        let spec_2 = ProtocolSpec::two_state(chi, cfg.overlaps[0], cfg.overlaps[1])?;
        let choi = choi_distance(
            &protocols::build_lambda_sup_d(&spec_d)?,
            &protocols::build_lambda_sup(&spec_2)?,
        )?;
        summary["two_state_delta"] = json!(delta);
        summary["choi_distance"] = json!(choi);
        checks.push((
            delta <= CHECK_TOL,
            format!("two-state cross-check off by {delta:e}"),
        ));
        checks.push((
            choi <= CHECK_TOL,
            format!("Choi distance {choi:e} exceeds {CHECK_TOL:e}"),
        ));
    }
    let results = json!({
        "weights": w.coeffs().iter().map(|&z| cplx(z)).collect::<Vec<_>>(),
        "trials": trials.iter().enumerate().map(|(i, t)| json!({
            "trial": i,
            "probability": t.probability,
            "fidelity": t.fidelity,
            "shots": shots_json(&t.shots),
        })).collect::<Vec<_>>(),
        "summary": summary,
    });
    Ok(Report {
        results,
        csv_header: ["trial", "probability", "fidelity"]
            .map(String::from)
            .to_vec(),
        csv_rows: trials
            .iter()
            .enumerate()
            .map(|(i, t)| vec![i.to_string(), fmt(t.probability), fmt(t.fidelity)])
            .collect(),
        failed_check: failures(checks),
    })
}

/// Runs the encoded inputs through the general two-state protocol.
fn pipeline(
    u: &crate::circuits::Circuit,
    v: &crate::circuits::Circuit,
    x: &[bool],
    y: &[bool],
) -> Result<(f64, PureState)> {
    let n = x.len();
    let cu = controlled_circuit(&u.embedded(1, n + 1)?, 0)?;
    let cv = controlled_circuit(&v.embedded(1, n + 1)?, 0)?;
    let psi = cu.apply(&prepare_encoded(x)?)?.to_pure();
    let phi = cv.apply(&prepare_encoded(y)?)?.to_pure();
    let chi = QubitRegister::zeros(n + 1)?.to_pure();
    let spec = ProtocolSpec::two_state(chi, 0.5, 0.5)?;
    let out = protocols::run_two(&spec, &Weights::balanced(2).as_state(), &psi, &phi)?;
    let p = out.probability;
    let rho = out.state()?.matrix();
    let k = (0..rho.rows())
        .max_by(|&a, &b| rho[(a, a)].re.total_cmp(&rho[(b, b)].re))
        .expect("nonempty");
    let col = rho.column(k).scale(c(1.0 / rho[(k, k)].re.sqrt(), 0.0));
    Ok((p, PureState::from_unnormalized(col)?))
}

pub(crate) fn circuit_demo(cfg: &CircuitDemoConfig) -> std::result::Result<Report, CliError> {
    let x = parse_bits(&cfg.x)?;
    let y = parse_bits(&cfg.y)?;
    if x.len() != y.len() {
        return Err(
            Error::ShapeError(format!("x has {} bits but y has {}", x.len(), y.len())).into(),
        );
    }
    let n = x.len();
    let u = circuit_from_specs(n, &cfg.u)?;
    let v = circuit_from_specs(n, &cfg.v)?;
    let out = run_subroutine_superposition(&u, &v, &x, &y)?;
    let ux = u.apply(&QubitRegister::basis(&x)?)?;
    let vy = v.apply(&QubitRegister::basis(&y)?)?;
    let overlap = ux.state().inner(vy.state());
    let formula = 0.375 + overlap.re / 8.0;
    let (data, weight) = extract_result(&out.register)?;
    let sum = ux.state() + vy.state();
    let fidelity = if sum.norm() > 1e-12 {
        data.state()
            .normalized()
            .inner(&sum.normalized())
            .norm_sqr()
    } else {
        0.0
    };
    let pipeline = if n <= PIPELINE_MAX_QUBITS {
        let (p, state) = pipeline(&u, &v, &x, &y)?;
        let f = state_overlap(&state, &out.register.to_pure());
        Some((p, f))
    } else {
        None
    };
    let shots = match cfg.shots {
        0 => None,
        s => Some(sample_shots(
            out.probability,
            s,
            &mut SeededRng::new(cfg.seed.expect("validated"), 0),
        )?),
    };
    let delta = (out.probability - formula).abs();
    let mut checks = vec![
        (
            delta <= CHECK_TOL,
            format!("probability off the closed form by {delta:e}"),
        ),
        (
            fidelity >= 1.0 - CHECK_TOL,
            format!("extracted state fidelity {fidelity}"),
        ),
    ];
    if let Some((p, f)) = pipeline {
        checks.push((
            (p - out.probability).abs() <= CHECK_TOL && f >= 1.0 - CHECK_TOL,
            format!("protocol pipeline disagrees (p = {p}, fidelity {f})"),
        ));
    }
    let combined = out.probability * weight;
    let results = json!({
        "data_qubits": n,
        "probability": out.probability,
        "formula_probability": formula,
        "extraction_probability": weight,
        "combined_probability": combined,
        "fidelity": fidelity,
        "output_state": vector_json(out.register.state()),
        "pipeline": pipeline.map_or(Value::Null, |(p, f)| json!({"probability": p, "fidelity": f})),
        "shots": shots_json(&shots),
    });
    Ok(Report {
        results,
        csv_header: [
            "probability",
            "formula_probability",
            "extraction_probability",
            "combined_probability",
            "fidelity",
        ]
        .map(String::from)
        .to_vec(),
        csv_rows: vec![vec![
            fmt(out.probability),
            fmt(formula),
            fmt(weight),
            fmt(combined),
            fmt(fidelity),
        ]],
        failed_check: failures(checks),
    })
}

/// Smallest worst-residual the default search must stay above.
const NOGO_FLOOR: f64 = 0.01;

pub(crate) fn nogo(cfg: &NogoConfig) -> std::result::Result<Report, CliError> {
    let w = weights(&[cfg.alpha, cfg.beta])?;
    let sample = nogo::random_pairs(cfg.pairs, nogo::CANONICAL_SEED);
    let opts = SearchOptions {
        restarts: cfg.restarts,
        max_evals: cfg.max_evals,
        ..SearchOptions::default()
    };
    let found = nogo::search_min(&w, &sample, &opts, cfg.seed.expect("validated"))?;
    let mut results = json!({
        "weights": w.coeffs().iter().map(|&z| cplx(z)).collect::<Vec<_>>(),
        "best_matrix": matrix_json(found.best.matrix()),
        "best_residual": found.best_residual,
        "trace": found.trace,
    });
    let mut csv_rows: Vec<Vec<String>> = found
        .trace
        .iter()
        .enumerate()
        .map(|(i, r)| vec![i.to_string(), fmt(*r)])
        .collect();
    csv_rows.push(vec!["best".into(), fmt(found.best_residual)]);
    if cfg.forced_form {
        let states: Vec<PureState> = sample
            .iter()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect();
        let form = nogo::forced_form_solve(&states)?;
        let mut counterexamples = Vec::new();
        for m in form.basis() {
            if m.max_abs() < 1e-12 {
                continue;
            }
            let (psi, phi, r) = nogo::find_counterexample(m, &w)?;
            counterexamples.push(json!({
                "candidate": matrix_json(m),
                "psi": vector_json(psi.vector()),
                "phi": vector_json(phi.vector()),
                "residual": r,
            }));
        }
        results["forced_form"] = json!({
            "dimension": form.dimension(),
            "constraint_rank": form.rank(),
            "basis": form.basis().iter().map(matrix_json).collect::<Vec<_>>(),
            "counterexamples": counterexamples,
        });
    }
    let asserted = cfg.asserts_floor()?;
    results["floor_asserted"] = json!(asserted);
    let failed_check = (asserted && found.best_residual <= NOGO_FLOOR).then(|| {
        format!(
            "best worst-residual {} is not above {NOGO_FLOOR}",
            found.best_residual
        )
    });
    Ok(Report {
        results,
        csv_header: ["restart", "worst_residual"].map(String::from).to_vec(),
        csv_rows,
        failed_check,
    })
}

pub(crate) fn optics_demo(cfg: &OpticsConfig) -> std::result::Result<Report, CliError> {
    let w = weights(&[cfg.alpha, cfg.beta])?;
    let psi = coherent_truncated(cfg.amplitude1.value(), cfg.cutoff)?;
    let phi = coherent_truncated(cfg.amplitude2.value(), cfg.cutoff)?;
    let chi = PureState::basis(cfg.cutoff, 0);
    let c1 = state_overlap(&chi, &psi);
    let c2 = state_overlap(&chi, &phi);
    let spec = ProtocolSpec::two_state(chi.clone(), c1, c2)?;
    let out = protocols::run_two(&spec, &w.as_state(), &psi, &phi)?;
    let formula = protocols::success_probability_two(&w, c1, c2, &chi, &psi, &phi)?;
    let (target, _) = rules::superpose_two(&chi, &psi, &phi, &w)?;
    let fidelity = out.fidelity_with(&target)?;
    let rho = out.state()?.matrix();
    let k = (0..rho.rows())
        .max_by(|&a, &b| rho[(a, a)].re.total_cmp(&rho[(b, b)].re))
        .expect("nonempty");
    let amps = rho.column(k).scale(c(1.0 / rho[(k, k)].re.sqrt(), 0.0));
    let delta = (out.probability - formula).abs();
    let results = json!({
        "vacuum_overlaps": [c1, c2],
        "probability": out.probability,
        "formula_probability": formula,
        "fidelity": fidelity,
        "amplitudes": vector_json(&amps),
    });
    Ok(Report {
        results,
        csv_header: ["n", "amplitude_re", "amplitude_im"]
            .map(String::from)
            .to_vec(),
        csv_rows: amps
            .entries()
            .iter()
            .enumerate()
            .map(|(n, z)| vec![n.to_string(), fmt(z.re), fmt(z.im)])
            .collect(),
        failed_check: failures(vec![
            (
                delta <= FORMULA_TOL,
                format!("probability off the closed form by {delta:e}"),
            ),
            (
                fidelity >= 1.0 - CHECK_TOL,
                format!("output fidelity {fidelity}"),
            ),
        ]),
    })
}
