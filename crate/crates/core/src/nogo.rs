//! Numerical evidence that no nonzero linear map superposes arbitrary qubit
//! pairs.
//!
//! A candidate is a `2 × 4` matrix `V` acting on `|ψ⟩|φ⟩` in the basis
//! `|00⟩, |01⟩, |10⟩, |11⟩`. It would implement a universal superposition if
//! `V|ψ⟩|φ⟩` were always proportional to `α|ψ⟩ + βe^{iθ}|φ⟩` for some phase
//! `θ`. [`residual`] measures the failure for one pair, [`search_min`] tries
//! to drive the worst failure over a fixed sample to zero, and the forced-form
//! routines reproduce the algebraic argument for why it cannot.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};
use crate::qstate::{haar_random, PureState, SeededRng};
use crate::rules::Weights;

const THETA_GRID: usize = 720;
const REFINE_ROUNDS: usize = 3;
const REFINE_POINTS: usize = 33;
/// Outputs shorter than this count as the permitted zero output.
pub const ZERO_OUTPUT_TOL: f64 = 1e-12;
pub const FORCED_FORM_TOL: f64 = 1e-10;
/// Seed of the fixed pair sample the search is scored on.
pub const CANONICAL_SEED: u64 = 20_160_915;
pub const CANONICAL_PAIRS: usize = 200;
/// Smallest residual accepted as a counterexample.
pub const COUNTEREXAMPLE_MIN: f64 = 1e-3;
const SCAN_SIDE: usize = 100;

/// A `2 × 4` candidate operator.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateV {
    matrix: CMatrix,
    normalized: bool,
}

impl CandidateV {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (2, 4) {
            return Err(Error::ShapeError(format!(
                "candidate must be 2×4, got {:?}",
                matrix.shape()
            )));
        }
        let normalized = (matrix.frobenius_norm() - 1.0).abs() < 1e-12;
        Ok(CandidateV { matrix, normalized })
    }

    /// Rescales to unit Frobenius norm.
    pub fn unit(matrix: CMatrix) -> Result<Self> {
        let n = matrix.frobenius_norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero candidate".into(),
            ));
        }
        Self::new(matrix.scale_real(1.0 / n))
    }

    /// Real and imaginary parts of the 8 entries in row-major order.
    pub fn from_params(p: &[f64; 16]) -> Result<Self> {
        let data = (0..8).map(|k| c(p[2 * k], p[2 * k + 1])).collect();
        Self::unit(CMatrix::from_vec(2, 4, data)?)
    }

    pub fn params(&self) -> [f64; 16] {
        let mut p = [0.0; 16];
        for (k, z) in self.matrix.data().iter().enumerate() {
            p[2 * k] = z.re;
            p[2 * k + 1] = z.im;
        }
        p
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `V(ψ ⊗ φ)`
    pub fn apply(&self, psi: &PureState, phi: &PureState) -> CVector {
        let (p, q) = (psi.vector(), phi.vector());
        let prod = [p[0] * q[0], p[0] * q[1], p[1] * q[0], p[1] * q[1]];
        CVector::new(
            (0..2)
                .map(|r| {
                    self.matrix
                        .row(r)
                        .iter()
                        .zip(&prod)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect(),
        )
    }
}

fn unit_circle() -> &'static [C64] {
    static TABLE: OnceLock<Vec<C64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..THETA_GRID)
            .map(|k| C64::from_polar(1.0, TAU * k as f64 / THETA_GRID as f64))
            .collect()
    })
}

/// Squared overlap between `û` and `t(θ)/‖t(θ)‖`, written as
/// `(p + Re(q e^{iθ})) / (s + Re(r e^{iθ}))`.
struct RayFit {
    p: f64,
    q: C64,
    s: f64,
    r: C64,
}

impl RayFit {
    fn at(&self, z: C64) -> Option<f64> {
        let den = self.s + (self.r * z).re;
        if den < 1e-20 {
            return None;
        }
        Some((self.p + (self.q * z).re) / den)
    }

    /// Zeros of the derivative. With `N = p + a cos θ + b sin θ` and
    /// `D = s + c cos θ + d sin θ`, `N'D − ND' = 0` reduces to
    /// `(pc − as) sin θ + (bs − pd) cos θ + (bc − ad) = 0`.
    fn stationary_angles(&self) -> Vec<f64> {
        let (a, b) = (self.q.re, -self.q.im);
        let (c, d) = (self.r.re, -self.r.im);
        let x = self.p * c - a * self.s;
        let y = b * self.s - self.p * d;
        let k = b * c - a * d;
        let amp = x.hypot(y);
        if amp < 1e-300 {
            return Vec::new();
        }
        // x sin θ + y cos θ = amp · sin(θ + φ₀)
        let phase = y.atan2(x);
        let base = (-k / amp).clamp(-1.0, 1.0).asin();
        vec![base - phase, PI - base - phase]
    }
}

fn check_qubit(s: &PureState) -> Result<()> {
    if s.dim() != 2 {
        return Err(Error::ShapeError(format!(
            "the search works on qubits, got dimension {}",
            s.dim()
        )));
    }
    Ok(())
}

/// Ray distance `min_θ √(1 − |⟨û, t̂(θ)⟩|²)` between `u = V(ψ⊗φ)` and the
/// family `t(θ) = αψ + βe^{iθ}φ`; zero when `u` vanishes.
///
/// The minimum is taken over a 720-point grid, then three rounds of a
/// 33-point scan around the best point, each round narrowing the window
/// sixteenfold. The exact stationary points of the overlap are checked last,
/// which makes the result independent of where the grid happens to fall.
pub fn residual(v: &CandidateV, psi: &PureState, phi: &PureState, w: &Weights) -> Result<f64> {
    check_qubit(psi)?;
    check_qubit(phi)?;
    w.require_len(2)?;
    Ok(residual_unchecked(v, psi, phi, w.alpha(), w.beta()))
}

fn residual_unchecked(
    v: &CandidateV,
    psi: &PureState,
    phi: &PureState,
    alpha: C64,
    beta: C64,
) -> f64 {
    let u = v.apply(psi, phi);
    let un = u.norm();
    if un < ZERO_OUTPUT_TOL {
        return 0.0;
    }
    let a = alpha * u.inner(psi.vector()) / un;
    let b = beta * u.inner(phi.vector()) / un;
    let fit = RayFit {
        p: a.norm_sqr() + b.norm_sqr(),
        q: 2.0 * a.conj() * b,
        s: alpha.norm_sqr() * psi.vector().norm_sqr() + beta.norm_sqr() * phi.vector().norm_sqr(),
        r: 2.0 * alpha.conj() * beta * psi.inner(phi),
    };
    let mut best = f64::NEG_INFINITY;
    let mut best_theta = 0.0;
    for (k, &z) in unit_circle().iter().enumerate() {
        if let Some(f) = fit.at(z) {
            if f > best {
                best = f;
                best_theta = TAU * k as f64 / THETA_GRID as f64;
            }
        }
    }
    if best == f64::NEG_INFINITY {
        // t(θ) vanishes everywhere on the grid; nothing to compare against.
        return 1.0;
    }
    let mut half = TAU / THETA_GRID as f64;
    for _ in 0..REFINE_ROUNDS {
        let center = best_theta;
        for j in 0..REFINE_POINTS {
            let theta = center - half + 2.0 * half * j as f64 / (REFINE_POINTS - 1) as f64;
            if let Some(f) = fit.at(C64::from_polar(1.0, theta)) {
                if f > best {
                    best = f;
                    best_theta = theta;
                }
            }
        }
        half /= 16.0;
    }
    for theta in fit.stationary_angles() {
        if let Some(f) = fit.at(C64::from_polar(1.0, theta)) {
            best = best.max(f);
        }
    }
    (1.0 - best.min(1.0)).max(0.0).sqrt()
}

/// Worst and mean residual over a sample of pairs.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub worst_pair: (PureState, PureState),
    pub worst_residual: f64,
    pub mean_residual: f64,
}

pub fn max_residual(
    v: &CandidateV,
    sample: &[(PureState, PureState)],
    w: &Weights,
) -> Result<ResidualReport> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("residual sample is empty".into()));
    }
    let mut worst = (0, f64::NEG_INFINITY);
    let mut total = 0.0;
    for (i, (psi, phi)) in sample.iter().enumerate() {
        let r = residual(v, psi, phi, w)?;
        total += r;
        if r > worst.1 {
            worst = (i, r);
        }
    }
    Ok(ResidualReport {
        worst_pair: sample[worst.0].clone(),
        worst_residual: worst.1,
        mean_residual: total / sample.len() as f64,
    })
}

/// Haar-random qubit pairs from a seeded stream.
pub fn random_pairs(count: usize, seed: u64) -> Vec<(PureState, PureState)> {
    let mut rng = SeededRng::new(seed, 0);
    (0..count)
        .map(|_| (haar_random(2, &mut rng), haar_random(2, &mut rng)))
        .collect()
}

/// The fixed 200-pair sample used to score candidates.
pub fn canonical_sample() -> Vec<(PureState, PureState)> {
    random_pairs(CANONICAL_PAIRS, CANONICAL_SEED)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOptions {
    pub restarts: usize,
    /// Objective evaluations allowed per restart.
    pub max_evals: usize,
    pub initial_step: f64,
    pub final_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            restarts: 20,
            max_evals: 20_000,
            initial_step: 1.0,
            final_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best: CandidateV,
    pub best_residual: f64,
    /// Best worst-residual reached by each restart, in restart order.
    pub trace: Vec<f64>,
}

/// Worst residual over the sample, abandoning the scan as soon as it reaches
/// `cutoff`. Pairs are visited starting from `order[0]`, so putting the
/// previous worst pair first makes rejections cheap.
fn worst_bounded(
    v: &CandidateV,
    sample: &[(PureState, PureState)],
    alpha: C64,
    beta: C64,
    order: &[usize],
    cutoff: f64,
) -> (f64, usize) {
    let mut worst = (0.0, order[0]);
    for &i in order {
        let (psi, phi) = &sample[i];
        let r = residual_unchecked(v, psi, phi, alpha, beta);
        if r > worst.0 {
            worst = (r, i);
            if r >= cutoff {
                break;
            }
        }
    }
    worst
}

fn promote(order: &mut [usize], idx: usize) {
    if let Some(pos) = order.iter().position(|&i| i == idx) {
        order[..=pos].rotate_right(1);
    }
}

fn pattern_search(
    sample: &[(PureState, PureState)],
    alpha: C64,
    beta: C64,
    opts: &SearchOptions,
    rng: &mut SeededRng,
) -> (CandidateV, f64) {
    let mut x = [0.0; 16];
    for p in x.iter_mut() {
        *p = rng.gaussian_complex().re;
    }
    let mut cand = CandidateV::from_params(&x).unwrap_or_else(|_| {
        CandidateV::unit(CMatrix::from_fn(2, 4, |r, s| {
            c((r == 0 && s == 0) as u8 as f64, 0.0)
        }))
        .expect("nonzero")
    });
    x = cand.params();
    let mut order: Vec<usize> = (0..sample.len()).collect();
    let (mut fx, worst) = worst_bounded(&cand, sample, alpha, beta, &order, f64::INFINITY);
    promote(&mut order, worst);
    let mut evals = 1;
    let mut step = opts.initial_step;
    while step >= opts.final_step && evals < opts.max_evals {
        let mut improved = false;
        'coords: for i in 0..16 {
            for sign in [1.0, -1.0] {
                if evals >= opts.max_evals {
                    break 'coords;
                }
                let mut y = x;
                y[i] += sign * step;
                let Ok(trial) = CandidateV::from_params(&y) else {
                    continue;
                };
                evals += 1;
                let (fy, worst) = worst_bounded(&trial, sample, alpha, beta, &order, fx);
                promote(&mut order, worst);
                if fy < fx {
                    fx = fy;
                    x = trial.params();
                    cand = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    (cand, fx)
}

/// Minimizes the worst residual over `sample` across unit-norm candidates.
///
/// Each restart draws a Gaussian starting point from its own stream of
/// `seed` and runs a coordinate pattern search on the 16 real parameters.
/// The best restart wins, ties going to the lowest index.
pub fn search_min(
    w: &Weights,
    sample: &[(PureState, PureState)],
    opts: &SearchOptions,
    seed: u64,
) -> Result<SearchResult> {
    w.require_len(2)?;
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    if sample.is_empty() {
        return Err(Error::InvalidArgument("residual sample is empty".into()));
    }
    for (psi, phi) in sample {
        check_qubit(psi)?;
        check_qubit(phi)?;
    }
    let (alpha, beta) = (w.alpha(), w.beta());
    let runs: Vec<(CandidateV, f64)> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = SeededRng::new(seed, k as u64);
            pattern_search(sample, alpha, beta, opts, &mut rng)
        })
        .collect();
    let trace: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let (best, best_residual) = runs
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("at least one restart");
    Ok(SearchResult {
        best,
        best_residual,
        trace,
    })
}

/// Solution space of the linear constraints `⟨ψ⊥|V|ψψ⟩ = 0`.
#[derive(Clone, Debug)]
pub struct ForcedForm {
    /// Frobenius-orthonormal basis of `2 × 4` matrices.
    basis: Vec<CMatrix>,
    rank: usize,
}

impl ForcedForm {
    /// Complex dimension of the solution space.
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// Rank of the constraint system.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Orthogonal projection of `v` onto the solution space.
    pub fn project(&self, v: &CMatrix) -> Result<CMatrix> {
        if v.shape() != (2, 4) {
            return Err(Error::ShapeError(format!(
                "candidate must be 2×4, got {:?}",
                v.shape()
            )));
        }
        let mut out = CMatrix::zeros(2, 4);
        for b in &self.basis {
            let coeff: C64 = b
                .data()
                .iter()
                .zip(v.data())
                .map(|(x, y)| x.conj() * y)
                .sum();
            out = &out + &b.scale(coeff);
        }
        Ok(out)
    }

    pub fn contains(&self, v: &CMatrix, tol: f64) -> Result<bool> {
        Ok(self.project(v)?.max_abs_diff(v) <= tol)
    }
}

/// Row of the constraint `⟨ψ⊥|V|ψψ⟩ = 0` in the unknowns `V₀₀ … V₁₃`, with
/// `ψ⊥ = (−ψ̄₁, ψ̄₀)`.
pub fn constraint_row(psi: &PureState) -> [C64; 8] {
    let (p0, p1) = (psi.amplitude(0), psi.amplitude(1));
    let prod = [p0 * p0, p0 * p1, p1 * p0, p1 * p1];
    let mut row = [C64::new(0.0, 0.0); 8];
    for k in 0..4 {
        row[k] = -p1 * prod[k];
        row[4 + k] = p0 * prod[k];
    }
    row
}

/// Solves the `ψ = φ` condition on a sample of qubit states.
///
/// The system has rank 4 for any sample with at least four pairwise
/// non-parallel states, leaving the four-parameter family
/// `[[f+g, b, c, 0], [0, f, g, b+c]]`.
pub fn forced_form_solve(sample: &[PureState]) -> Result<ForcedForm> {
    for s in sample {
        check_qubit(s)?;
    }
    let rows: Vec<[C64; 8]> = sample.iter().map(constraint_row).collect();
    let gram = CMatrix::from_fn(8, 8, |i, j| rows.iter().map(|r| r[i].conj() * r[j]).sum());
    let (vals, vecs) = linalg::hermitian_eigen(&gram.symmetrized())?;
    let scale = vals.first().copied().unwrap_or(0.0).max(1e-300);
    let rank = vals.iter().filter(|&&v| v > 1e-10 * scale).count();
    if rank < 4 {
        return Err(Error::InsufficientSample { rank, needed: 4 });
    }
    let basis = (rank..8)
        .map(|k| CMatrix::from_fn(2, 4, |r, s| vecs[(4 * r + s, k)]))
        .collect();
    Ok(ForcedForm { basis, rank })
}

/// `[[f+g, b, c, 0], [0, f, g, b+c]]` from `χ₁ = (ḡ, b̄)`, `χ₂ = (f̄, c̄)`.
pub fn forced_form_from_chi(chi1: &CVector, chi2: &CVector) -> Result<CMatrix> {
    if chi1.dim() != 2 || chi2.dim() != 2 {
        return Err(Error::ShapeError("χ₁ and χ₂ must be qubit vectors".into()));
    }
    let (g, b) = (chi1[0].conj(), chi1[1].conj());
    let (f, cc) = (chi2[0].conj(), chi2[1].conj());
    let z = C64::new(0.0, 0.0);
    CMatrix::from_rows(&[vec![f + g, b, cc, z], vec![z, f, g, b + cc]])
}

/// Recovers `χ₁, χ₂` with `V(ψ⊗φ) = ⟨χ₁|φ⟩ψ + ⟨χ₂|ψ⟩φ`.
pub fn decompose_chi(v: &CMatrix) -> Result<(CVector, CVector)> {
    if v.shape() != (2, 4) {
        return Err(Error::ShapeError(format!(
            "candidate must be 2×4, got {:?}",
            v.shape()
        )));
    }
    let (b, cc, f, g) = (v[(0, 1)], v[(0, 2)], v[(1, 1)], v[(1, 2)]);
    let deviation = [
        (v[(0, 0)] - f - g).norm(),
        v[(0, 3)].norm(),
        v[(1, 0)].norm(),
        (v[(1, 3)] - b - cc).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if deviation > FORCED_FORM_TOL {
        return Err(Error::NotInForcedForm(deviation));
    }
    Ok((
        CVector::new(vec![g.conj(), b.conj()]),
        CVector::new(vec![f.conj(), cc.conj()]),
    ))
}

/// Unit qubit vector orthogonal to `v`, or `|0⟩` when `v` vanishes.
fn perpendicular(v: &CVector) -> PureState {
    let raw = CVector::new(vec![-v[1].conj(), v[0].conj()]);
    PureState::from_unnormalized(raw).unwrap_or_else(|_| PureState::basis(2, 0))
}

fn bloch_grid() -> impl Iterator<Item = PureState> {
    (0..SCAN_SIDE).flat_map(|i| {
        let theta = PI * (i as f64 + 0.5) / SCAN_SIDE as f64;
        (0..SCAN_SIDE).map(move |j| {
            let ph = TAU * j as f64 / SCAN_SIDE as f64;
            PureState::new(CVector::new(vec![
                c((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), ph),
            ]))
            .expect("unit vector")
        })
    })
}

/// A pair on which a forced-form `V` visibly fails, following the proof:
/// with `ψ ⊥ χ₂` the output is `⟨χ₁|φ⟩ψ`, which cannot track
/// `αψ + βe^{iθ}φ` as `φ` varies. When `χ₁` vanishes the roles swap.
///
/// Returns the pair with the largest residual over a 10⁴-point Bloch scan.
pub fn find_counterexample(v: &CMatrix, w: &Weights) -> Result<(PureState, PureState, f64)> {
    w.require_len(2)?;
    let (chi1, chi2) = decompose_chi(v)?;
    let cand = CandidateV::new(v.clone())?;
    let scan_phi = chi1.norm() >= 1e-6 || chi2.norm() < 1e-6;
    let fixed = if scan_phi {
        perpendicular(&chi2)
    } else {
        perpendicular(&chi1)
    };
    let mut best: Option<(PureState, PureState, f64)> = None;
    for other in bloch_grid() {
        let (psi, phi) = if scan_phi {
            (fixed.clone(), other)
        } else {
            (other, fixed.clone())
        };
        let r = residual_unchecked(&cand, &psi, &phi, w.alpha(), w.beta());
        if best.as_ref().is_none_or(|b| r > b.2) {
            best = Some((psi, phi, r));
        }
    }
    match best {
        Some(found) if found.2 >= COUNTEREXAMPLE_MIN => Ok(found),
        _ => Err(Error::NoCounterexampleFound(SCAN_SIDE * SCAN_SIDE)),
    }
}
