//! Reference superposition rules anchored by a referential state `χ`.
//!
//! These are the oracles the protocols must reproduce. Each rule fixes the
//! relative phases of the input representatives through their overlaps with
//! `χ`, so the output projector depends only on the input projectors.

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, C64};
use crate::qstate::{self, DensityOperator, PureState};

/// Inputs whose overlap `tr(P_χ P_ψ)` falls below this are rejected.
pub const ZERO_OVERLAP_TOL: f64 = 1e-12;
/// Superpositions whose pre-normalization norm falls below this are rejected.
pub const DEGENERATE_TOL: f64 = 1e-10;
pub const WEIGHT_TOL: f64 = 1e-12;

/// Superposition coefficients with `Σ|αᵢ|² = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights(Vec<C64>);

impl Weights {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty()
            || coeffs
                .iter()
                .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidWeights("coefficients must be finite".into()));
        }
        let total: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidWeights(format!(
                "squared moduli sum to {total}, expected 1"
            )));
        }
        Ok(Weights(coeffs))
    }

    /// Rescales arbitrary nonzero coefficients onto the unit sphere.
    pub fn normalized(coeffs: Vec<C64>) -> Result<Self> {
        let total: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidWeights("coefficients are all zero".into()));
        }
        Self::new(coeffs.into_iter().map(|z| z / total).collect())
    }

    pub fn pair(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(vec![alpha, beta])
    }

    /// `α = β = 1/√2`
    pub fn balanced(d: usize) -> Self {
        let a = 1.0 / (d as f64).sqrt();
        Weights(vec![c(a, 0.0); d])
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn alpha(&self) -> C64 {
        self.0[0]
    }

    pub fn beta(&self) -> C64 {
        self.0[1]
    }

    /// Protocols need every coefficient nonzero.
    pub fn require_nonzero(&self) -> Result<()> {
        if self.0.iter().any(|z| z.norm() < 1e-300) {
            return Err(Error::InvalidWeights(
                "every coefficient must be nonzero".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn require_len(&self, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::InvalidWeights(format!(
                "expected {n} coefficients, got {}",
                self.0.len()
            )));
        }
        Ok(())
    }

    /// `|ν⟩ = Σ αᵢ |i⟩`
    pub fn as_state(&self) -> PureState {
        PureState::new(CVector::new(self.0.clone())).expect("weights are normalized")
    }
}

fn check_dims(chi: &PureState, states: &[&PureState]) -> Result<()> {
    if let Some(s) = states.iter().find(|s| s.dim() != chi.dim()) {
        return Err(Error::ShapeError(format!(
            "state of dimension {} against referential dimension {}",
            s.dim(),
            chi.dim()
        )));
    }
    Ok(())
}

/// `⟨χ|ψ⟩` after the zero-overlap guard.
fn anchored_overlap(chi: &PureState, psi: &PureState) -> Result<C64> {
    let z = chi.inner(psi);
    if z.norm_sqr() < ZERO_OVERLAP_TOL {
        return Err(Error::ZeroOverlap(z.norm_sqr()));
    }
    Ok(z)
}

/// Closed-form norm `𝒩_Ψ = √(1 + 2 Re(ᾱβ tr(P_χP_ψP_φ) / (|⟨χ|φ⟩||⟨χ|ψ⟩|)))`.
pub fn superposition_norm(
    chi: &PureState,
    psi: &PureState,
    phi: &PureState,
    w: &Weights,
) -> Result<f64> {
    w.require_len(2)?;
    check_dims(chi, &[psi, phi])?;
    let cp = anchored_overlap(chi, psi)?;
    let cf = anchored_overlap(chi, phi)?;
    // tr(P_χ P_ψ P_φ) = ⟨χ|ψ⟩⟨ψ|φ⟩⟨φ|χ⟩
    let triple = cp * psi.inner(phi) * cf.conj();
    let cross = w.alpha().conj() * w.beta() * triple / (cp.norm() * cf.norm());
    let sq = 1.0 + 2.0 * cross.re;
    Ok(sq.max(0.0).sqrt())
}

/// Two-state rule: `α ⟨χ|φ⟩/|⟨χ|φ⟩| |ψ⟩ + β ⟨χ|ψ⟩/|⟨χ|ψ⟩| |φ⟩`, normalized.
///
/// Returns the normalized state and its pre-normalization norm `𝒩_Ψ`.
pub fn superpose_two(
    chi: &PureState,
    psi: &PureState,
    phi: &PureState,
    w: &Weights,
) -> Result<(PureState, f64)> {
    w.require_len(2)?;
    check_dims(chi, &[psi, phi])?;
    let cp = anchored_overlap(chi, psi)?;
    let cf = anchored_overlap(chi, phi)?;
    let a = w.alpha() * cf / cf.norm();
    let b = w.beta() * cp / cp.norm();
    let raw = &psi.vector().scale(a) + &phi.vector().scale(b);
    let norm = superposition_norm(chi, psi, phi, w)?;
    if norm < DEGENERATE_TOL || raw.norm() < DEGENERATE_TOL {
        return Err(Error::DegenerateSuperposition(norm.min(raw.norm())));
    }
    Ok((PureState::from_unnormalized(raw)?, norm))
}

fn rank_one_check(p: &DensityOperator) -> Result<()> {
    let m = p.matrix();
    let dev = m.matmul(m).max_abs_diff(m);
    if dev > 1e-8 || (p.trace() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "expected a rank-one projector (idempotency deviation {dev:e})"
        )));
    }
    Ok(())
}

/// Two-state rule evaluated from projectors only:
/// `|α|²P_ψ + |β|²P_φ + (αβ̄ P_ψP_χP_φ / √(tr(P_ψP_χ) tr(P_φP_χ)) + h.c.)`.
///
/// The result is `𝒩_Ψ² P_Ψ`, so it is returned as a plain operator rather
/// than a density operator.
pub fn superpose_two_projector(
    chi: &DensityOperator,
    p_psi: &DensityOperator,
    p_phi: &DensityOperator,
    w: &Weights,
) -> Result<CMatrix> {
    w.require_len(2)?;
    superpose_multi_projector(chi, &[p_psi.clone(), p_phi.clone()], w)
}

/// d-state rule: `Σᵢ αᵢ (∏_{k≠i}⟨χ|ψ_k⟩ / ∏_{k≠i}|⟨χ|ψ_k⟩|) |ψᵢ⟩`, normalized.
pub fn superpose_multi(
    chi: &PureState,
    states: &[PureState],
    w: &Weights,
) -> Result<(PureState, f64)> {
    if states.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two states to superpose".into(),
        ));
    }
    w.require_len(states.len())?;
    check_dims(chi, &states.iter().collect::<Vec<_>>())?;
    let phases: Vec<C64> = states
        .iter()
        .map(|s| anchored_overlap(chi, s).map(|z| z / z.norm()))
        .collect::<Result<_>>()?;
    let mut raw = CVector::zeros(chi.dim());
    for (i, (s, alpha)) in states.iter().zip(w.coeffs()).enumerate() {
        let factor: C64 = phases
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, z)| *z)
            .product();
        raw = &raw + &s.vector().scale(alpha * factor);
    }
    let norm = raw.norm();
    if norm < DEGENERATE_TOL {
        return Err(Error::DegenerateSuperposition(norm));
    }
    Ok((PureState::from_unnormalized(raw)?, norm))
}

/// d-state rule from projectors only:
/// `Σ|αᵢ|²Pᵢ + Σ_{i≠j} αᵢᾱⱼ PᵢM_{ij}Pⱼ / (√∏_{k≠i}cₖ √∏_{l≠j}c_l)` with
/// `M_{ij} = P_χ ∏_{k≠i,j}(P_χP_kP_χ)` and the empty product taken as the identity.
///
/// Returns `𝒩² P_Ψ`.
pub fn superpose_multi_projector(
    chi: &DensityOperator,
    projectors: &[DensityOperator],
    w: &Weights,
) -> Result<CMatrix> {
    let d = projectors.len();
    if d < 2 {
        return Err(Error::InvalidArgument(
            "need at least two states to superpose".into(),
        ));
    }
    w.require_len(d)?;
    rank_one_check(chi)?;
    for p in projectors {
        if p.dim() != chi.dim() {
            return Err(Error::ShapeError(format!(
                "projector of dimension {} against referential dimension {}",
                p.dim(),
                chi.dim()
            )));
        }
        rank_one_check(p)?;
    }
    let overlaps: Vec<f64> = projectors
        .iter()
        .map(|p| qstate::overlap(chi, p))
        .collect::<Result<_>>()?;
    if let Some(&bad) = overlaps.iter().find(|&&o| o < ZERO_OVERLAP_TOL) {
        return Err(Error::ZeroOverlap(bad));
    }
    let pchi = chi.matrix();
    let sandwiched: Vec<CMatrix> = projectors
        .iter()
        .map(|p| pchi.matmul(p.matrix()).matmul(pchi))
        .collect();

    let n = chi.dim();
    let mut out = CMatrix::zeros(n, n);
    let alphas = w.coeffs();
    for i in 0..d {
        out = &out + &projectors[i].matrix().scale_real(alphas[i].norm_sqr());
    }
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let mut m = pchi.clone();
            for k in (0..d).filter(|&k| k != i && k != j) {
                m = m.matmul(&sandwiched[k]);
            }
            let denom_i: f64 = (0..d).filter(|&k| k != i).map(|k| overlaps[k]).product();
            let denom_j: f64 = (0..d).filter(|&k| k != j).map(|k| overlaps[k]).product();
            let coeff = alphas[i] * alphas[j].conj() / (denom_i.sqrt() * denom_j.sqrt());
            let term = projectors[i]
                .matrix()
                .matmul(&m)
                .matmul(projectors[j].matrix())
                .scale(coeff);
            out = &out + &term;
        }
    }
    let tr = out.trace().re;
    if tr.max(0.0).sqrt() < DEGENERATE_TOL {
        return Err(Error::DegenerateSuperposition(tr.max(0.0).sqrt()));
    }
    Ok(out)
}

/// Alternative rule `Σᵢ αᵢ ⟨ψᵢ|χ⟩/|⟨ψᵢ|χ⟩| |ψᵢ⟩`, normalized.
pub fn superpose_alternative(
    chi: &PureState,
    states: &[PureState],
    w: &Weights,
) -> Result<PureState> {
    if states.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two states to superpose".into(),
        ));
    }
    w.require_len(states.len())?;
    check_dims(chi, &states.iter().collect::<Vec<_>>())?;
    let mut raw = CVector::zeros(chi.dim());
    for (s, alpha) in states.iter().zip(w.coeffs()) {
        let z = anchored_overlap(chi, s)?.conj();
        raw = &raw + &s.vector().scale(alpha * z / z.norm());
    }
    let norm = raw.norm();
    if norm < DEGENERATE_TOL {
        return Err(Error::DegenerateSuperposition(norm));
    }
    PureState::from_unnormalized(raw)
}

/// Fidelity `|⟨Ψ_d|Ψ'_d⟩|²` between the d-state rule and the alternative rule.
pub fn rule_gap(chi: &PureState, states: &[PureState], w: &Weights) -> Result<f64> {
    let (main, _) = superpose_multi(chi, states, w)?;
    let alt = superpose_alternative(chi, states, w)?;
    Ok(qstate::state_overlap(&main, &alt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{haar_random, projector, SeededRng};
    use rand::Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, TAU};

    fn ket(amps: &[(f64, f64)]) -> PureState {
        PureState::from_amplitudes(&amps.iter().map(|&(r, i)| c(r, i)).collect::<Vec<_>>()).unwrap()
    }

    fn proj_diff(a: &PureState, b: &PureState) -> f64 {
        projector(a).matrix().max_abs_diff(projector(b).matrix())
    }

    #[test]
    fn collinear_inputs_return_chi() {
        let mut rng = SeededRng::new(1, 0);
        let chi = haar_random(3, &mut rng);
        let (out, norm) = superpose_two(
            &chi,
            &chi.rephased(0.3),
            &chi.rephased(1.1),
            &Weights::balanced(2),
        )
        .unwrap();
        assert!(proj_diff(&out, &chi) < 1e-12);
        assert!((norm - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn plus_minus_anchored_at_zero() {
        let chi = PureState::basis(2, 0);
        let plus = ket(&[(1., 0.), (1., 0.)]);
        let minus = ket(&[(1., 0.), (-1., 0.)]);
        let (out, norm) = superpose_two(&chi, &plus, &minus, &Weights::balanced(2)).unwrap();
        assert!(proj_diff(&out, &chi) < 1e-12);
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn opposite_weights_on_equal_inputs_degenerate() {
        let mut rng = SeededRng::new(2, 0);
        let chi = haar_random(2, &mut rng);
        let psi = haar_random(2, &mut rng);
        let w = Weights::pair(c(FRAC_1_SQRT_2, 0.), c(-FRAC_1_SQRT_2, 0.)).unwrap();
        assert!(matches!(
            superpose_two(&chi, &psi, &psi, &w),
            Err(Error::DegenerateSuperposition(_))
        ));
    }

    #[test]
    fn zero_overlap_is_rejected() {
        let chi = PureState::basis(2, 0);
        let one = PureState::basis(2, 1);
        let plus = ket(&[(1., 0.), (1., 0.)]);
        assert!(matches!(
            superpose_two(&chi, &one, &plus, &Weights::balanced(2)),
            Err(Error::ZeroOverlap(_))
        ));
    }

    #[test]
    fn closed_form_norm_matches_vector_norm() {
        let mut rng = SeededRng::new(3, 0);
        for _ in 0..100 {
            let chi = haar_random(3, &mut rng);
            let psi = haar_random(3, &mut rng);
            let phi = haar_random(3, &mut rng);
            let w =
                Weights::normalized(vec![rng.gaussian_complex(), rng.gaussian_complex()]).unwrap();
            let cp = chi.inner(&psi);
            let cf = chi.inner(&phi);
            let raw = &psi.vector().scale(w.alpha() * cf / cf.norm())
                + &phi.vector().scale(w.beta() * cp / cp.norm());
            let norm = superposition_norm(&chi, &psi, &phi, &w).unwrap();
            assert!((norm - raw.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn projector_form_examples() {
        let mut rng = SeededRng::new(4, 0);
        let chi = haar_random(2, &mut rng);
        let pchi = projector(&chi);
        let out = superpose_two_projector(&pchi, &pchi, &pchi, &Weights::balanced(2)).unwrap();
        assert!(out.max_abs_diff(&pchi.matrix().scale_real(2.0)) < 1e-12);

        for _ in 0..50 {
            let chi = haar_random(2, &mut rng);
            let psi = haar_random(2, &mut rng);
            let phi = haar_random(2, &mut rng);
            let w =
                Weights::normalized(vec![rng.gaussian_complex(), rng.gaussian_complex()]).unwrap();
            let (state, norm) = superpose_two(&chi, &psi, &phi, &w).unwrap();
            let oracle = projector(&state).matrix().scale_real(norm * norm);
            let got =
                superpose_two_projector(&projector(&chi), &projector(&psi), &projector(&phi), &w)
                    .unwrap();
            assert!(got.max_abs_diff(&oracle) < 1e-10);

            let swapped = Weights::pair(w.beta(), w.alpha()).unwrap();
            let got_swapped = superpose_two_projector(
                &projector(&chi),
                &projector(&phi),
                &projector(&psi),
                &swapped,
            )
            .unwrap();
            assert!(got.max_abs_diff(&got_swapped) < 1e-12);
        }
    }

    #[test]
    fn multi_examples() {
        let mut rng = SeededRng::new(5, 0);
        let chi = haar_random(3, &mut rng);
        let w = Weights::normalized(vec![c(1., 0.), c(0., 2.), c(-1., 1.)]).unwrap();
        let states = vec![chi.rephased(0.2), chi.rephased(2.0), chi.rephased(-1.0)];
        let (out, norm) = superpose_multi(&chi, &states, &w).unwrap();
        assert!(proj_diff(&out, &chi) < 1e-12);
        let sum: C64 = w.coeffs().iter().sum();
        assert!((norm - sum.norm()).abs() < 1e-12);

        let pchi = projector(&chi);
        let all_chi = vec![pchi.clone(), pchi.clone(), pchi.clone()];
        let got = superpose_multi_projector(&pchi, &all_chi, &Weights::balanced(3)).unwrap();
        assert!(got.max_abs_diff(&pchi.matrix().scale_real(3.0)) < 1e-12);
    }

    #[test]
    fn multi_with_two_states_reduces_to_two_state_rule() {
        let mut rng = SeededRng::new(6, 0);
        for _ in 0..100 {
            let chi = haar_random(3, &mut rng);
            let psi = haar_random(3, &mut rng);
            let phi = haar_random(3, &mut rng);
            let w =
                Weights::normalized(vec![rng.gaussian_complex(), rng.gaussian_complex()]).unwrap();
            let (a, na) = superpose_two(&chi, &psi, &phi, &w).unwrap();
            let (b, nb) = superpose_multi(&chi, &[psi.clone(), phi.clone()], &w).unwrap();
            assert!(proj_diff(&a, &b) < 1e-12);
            assert!((na - nb).abs() < 1e-12);
        }
    }

    #[test]
    fn multi_projector_matches_representatives_for_qutrits() {
        let mut rng = SeededRng::new(7, 0);
        for _ in 0..50 {
            let chi = haar_random(3, &mut rng);
            let states: Vec<PureState> = (0..3).map(|_| haar_random(3, &mut rng)).collect();
            let w = Weights::normalized((0..3).map(|_| rng.gaussian_complex()).collect()).unwrap();
            let (state, norm) = superpose_multi(&chi, &states, &w).unwrap();
            let oracle = projector(&state).matrix().scale_real(norm * norm);
            let projs: Vec<DensityOperator> = states.iter().map(projector).collect();
            let got = superpose_multi_projector(&projector(&chi), &projs, &w).unwrap();
            assert!(got.max_abs_diff(&oracle) < 1e-10);
        }
    }

    #[test]
    fn alternative_rule_examples() {
        let mut rng = SeededRng::new(8, 0);
        let chi = haar_random(3, &mut rng);
        let states = vec![chi.rephased(0.4), chi.rephased(1.4)];
        let alt = superpose_alternative(&chi, &states, &Weights::balanced(2)).unwrap();
        assert!(proj_diff(&alt, &chi) < 1e-12);

        // Real positive overlaps: both rules collapse to αψ + βφ.
        let chi = PureState::basis(2, 0);
        let psi = ket(&[(0.8, 0.), (0.0, 0.6)]);
        let phi = ket(&[(0.6, 0.), (-0.3, 0.5)]);
        let w = Weights::normalized(vec![c(0.3, 0.2), c(-0.5, 0.7)]).unwrap();
        let alt = superpose_alternative(&chi, &[psi.clone(), phi.clone()], &w).unwrap();
        let (main, _) = superpose_two(&chi, &psi, &phi, &w).unwrap();
        assert!(proj_diff(&alt, &main) < 1e-12);

        for _ in 0..20 {
            let chi = haar_random(3, &mut rng);
            let states: Vec<PureState> = (0..3).map(|_| haar_random(3, &mut rng)).collect();
            let gap = rule_gap(&chi, &states, &Weights::balanced(3)).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&gap));
        }
    }

    #[test]
    fn rules_are_gauge_invariant() {
        let mut rng = SeededRng::new(9, 0);
        for _ in 0..100 {
            let chi = haar_random(3, &mut rng);
            let states: Vec<PureState> = (0..3).map(|_| haar_random(3, &mut rng)).collect();
            let w = Weights::normalized((0..3).map(|_| rng.gaussian_complex()).collect()).unwrap();
            let mut ph = || rng.random_range(0.0..TAU);
            let chi2 = chi.rephased(ph());
            let states2: Vec<PureState> = states.iter().map(|s| s.rephased(ph())).collect();

            let (a, _) = superpose_multi(&chi, &states, &w).unwrap();
            let (b, _) = superpose_multi(&chi2, &states2, &w).unwrap();
            assert!(proj_diff(&a, &b) < 1e-12);

            let w2 = Weights::pair(w.coeffs()[0], w.coeffs()[1])
                .or_else(|_| Weights::normalized(w.coeffs()[..2].to_vec()))
                .unwrap();
            let (a, _) = superpose_two(&chi, &states[0], &states[1], &w2).unwrap();
            let (b, _) = superpose_two(&chi2, &states2[0], &states2[1], &w2).unwrap();
            assert!(proj_diff(&a, &b) < 1e-12);

            let a = superpose_alternative(&chi, &states, &w).unwrap();
            let b = superpose_alternative(&chi2, &states2, &w).unwrap();
            assert!(proj_diff(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn weight_grid_gives_distinct_superpositions() {
        let mut rng = SeededRng::new(10, 0);
        let chi = haar_random(2, &mut rng);
        let psi = haar_random(2, &mut rng);
        let phi = haar_random(2, &mut rng);
        let mut outs = Vec::new();
        for t in 1..6 {
            let theta = t as f64 * std::f64::consts::FRAC_PI_2 / 6.0;
            for p in 0..8 {
                let phase = p as f64 * TAU / 8.0;
                let w =
                    Weights::pair(c(theta.cos(), 0.), C64::from_polar(theta.sin(), phase)).unwrap();
                outs.push(superpose_two(&chi, &psi, &phi, &w).unwrap().0);
            }
        }
        for i in 0..outs.len() {
            for j in (i + 1)..outs.len() {
                assert!(qstate::state_overlap(&outs[i], &outs[j]) < 1.0 - 1e-6);
            }
        }
    }
}
