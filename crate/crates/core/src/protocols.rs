//! Completely positive maps with explicit Kraus families, and the probabilistic
//! superposition protocols built from them.
//!
//! Every protocol here has the same shape: a conditional permutation of the
//! copies of `H`, a projection of all but one copy onto `|χ⟩`, a projection of
//! the control register onto an auxiliary vector `|μ⟩`, and a partial trace.
//! The trace over the control and discarded copies is unrolled into the Kraus
//! family `{(⟨e_i| ⊗ I ⊗ ⟨e_j| ⊗ …) V₃V₂V₁}`.

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, EIGEN_MAX_DIM};
use crate::qstate::{self, DensityOperator, OverlapSpec, PureState, IMPOSSIBLE_TOL};
use crate::rules::{self, Weights};

/// Tolerance on `λ_max(Σ K†K) ≤ 1`.
pub const TRACE_TOL: f64 = 1e-10;
/// Allowed gap between declared and actual input overlaps.
pub const OVERLAP_MATCH_TOL: f64 = 1e-8;

const POWER_MAX_ITERS: usize = 2000;

/// A CP map `ρ ↦ Σ K ρ K†` with `Σ K†K ≤ I`.
#[derive(Clone, Debug)]
pub struct KrausMap {
    in_dim: usize,
    out_dim: usize,
    ops: Vec<CMatrix>,
}

impl KrausMap {
    /// Builds the map after checking shapes and that it is trace non-increasing.
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let map = Self::unchecked(ops)?;
        let top = map.max_effect_eigenvalue()?;
        if top > 1.0 + TRACE_TOL {
            return Err(Error::NotTraceNonincreasing(top));
        }
        Ok(map)
    }

    fn unchecked(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::ShapeError("a Kraus map needs at least one operator".into()))?;
        let (out_dim, in_dim) = first.shape();
        if out_dim == 0 || in_dim == 0 {
            return Err(Error::ShapeError("Kraus operators must be nonempty".into()));
        }
        if let Some(bad) = ops.iter().find(|k| k.shape() != (out_dim, in_dim)) {
            return Err(Error::ShapeError(format!(
                "Kraus operator of shape {:?} in a family of shape {:?}",
                bad.shape(),
                (out_dim, in_dim)
            )));
        }
        Ok(KrausMap {
            in_dim,
            out_dim,
            ops,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// `Σ K†K`
    pub fn effect(&self) -> Result<CMatrix> {
        linalg::check_entries("effect operator", self.in_dim.checked_mul(self.in_dim))?;
        let mut e = CMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.ops {
            e = &e + &k.dagger().matmul(k);
        }
        Ok(e)
    }

    /// Largest eigenvalue of `Σ K†K`.
    ///
    /// Dense Jacobi when the input space is small enough, otherwise power
    /// iteration through matrix-vector products.
    pub fn max_effect_eigenvalue(&self) -> Result<f64> {
        if self.in_dim <= EIGEN_MAX_DIM {
            return linalg::hermitian_max_eigenvalue(&self.effect()?.symmetrized());
        }
        let ops: Vec<&CMatrix> = self.ops.iter().filter(|k| k.max_abs() > 0.0).collect();
        if ops.is_empty() {
            return Ok(0.0);
        }
        let apply_effect = |v: &CVector| {
            let mut acc = CVector::zeros(self.in_dim);
            for k in &ops {
                acc = &acc + &k.apply_dagger(&k.apply(v));
            }
            acc
        };
        let mut v = CVector::new(
            (0..self.in_dim)
                .map(|i| {
                    c(
                        1.0 + (i as f64 * 0.618).sin() * 0.1,
                        (i as f64 * 0.377).cos() * 0.1,
                    )
                })
                .collect(),
        )
        .normalized();
        let mut lambda = 0.0;
        for _ in 0..POWER_MAX_ITERS {
            let w = apply_effect(&v);
            let next = v.inner(&w).re;
            let n = w.norm();
            if n == 0.0 {
                return Ok(0.0);
            }
            v = w.scale(c(1.0 / n, 0.0));
            if (next - lambda).abs() <= 1e-15 * next.abs().max(1.0) {
                return Ok(next);
            }
            lambda = next;
        }
        Ok(lambda)
    }

    /// Unnormalized image `Σ K ρ K†`.
    pub fn image(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.shape() != (self.in_dim, self.in_dim) {
            return Err(Error::ShapeError(format!(
                "map expects a {0}×{0} input, got {1:?}",
                self.in_dim,
                rho.shape()
            )));
        }
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.ops {
            out = &out + &k.matmul(rho).matmul(&k.dagger());
        }
        Ok(out)
    }

    /// Applies the map to a density operator and postselects on it having acted.
    pub fn apply(&self, rho: &DensityOperator) -> Result<ProtocolOutcome> {
        let out = self.image(rho.matrix())?;
        ProtocolOutcome::from_image(out)
    }

    /// Same as [`KrausMap::apply`] on `|ψ⟩⟨ψ|`, without forming the input matrix.
    pub fn apply_pure(&self, psi: &PureState) -> Result<ProtocolOutcome> {
        if psi.dim() != self.in_dim {
            return Err(Error::ShapeError(format!(
                "map expects input dimension {}, got {}",
                self.in_dim,
                psi.dim()
            )));
        }
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.ops {
            let w = k.apply(psi.vector());
            out = &out + &w.outer(&w);
        }
        ProtocolOutcome::from_image(out)
    }

    /// Choi operator `Σ vec(K) vec(K)† / in_dim`, with `vec` stacking rows
    /// (output index major).
    pub fn choi(&self) -> Result<CMatrix> {
        let n = self.out_dim * self.in_dim;
        linalg::check_entries("Choi operator", n.checked_mul(n))?;
        let mut out = CMatrix::zeros(n, n);
        for k in &self.ops {
            let v = CVector::new(k.data().to_vec());
            out = &out + &v.outer(&v);
        }
        Ok(out.scale_real(1.0 / self.in_dim as f64))
    }
}

/// Entrywise distance between the Choi operators of two maps.
pub fn choi_distance(a: &KrausMap, b: &KrausMap) -> Result<f64> {
    if (a.in_dim, a.out_dim) != (b.in_dim, b.out_dim) {
        return Err(Error::ShapeError(format!(
            "maps {}→{} and {}→{} are not comparable",
            a.in_dim, a.out_dim, b.in_dim, b.out_dim
        )));
    }
    Ok(a.choi()?.max_abs_diff(&b.choi()?))
}

/// Result of running a map: the success probability and the postselected state.
#[derive(Clone, Debug)]
pub struct ProtocolOutcome {
    pub probability: f64,
    state: Option<DensityOperator>,
}

impl ProtocolOutcome {
    fn from_image(out: CMatrix) -> Result<Self> {
        let p = out.trace().re;
        if p < IMPOSSIBLE_TOL {
            return Ok(ProtocolOutcome {
                probability: p.max(0.0),
                state: None,
            });
        }
        let state = DensityOperator::normalized(out.symmetrized())?;
        Ok(ProtocolOutcome {
            probability: p,
            state: Some(state),
        })
    }

    pub(crate) fn from_parts(probability: f64, state: Option<DensityOperator>) -> Self {
        ProtocolOutcome { probability, state }
    }

    /// The postselected state, or `OutcomeImpossible` when the probability vanishes.
    pub fn state(&self) -> Result<&DensityOperator> {
        self.state
            .as_ref()
            .ok_or(Error::OutcomeImpossible(self.probability))
    }

    pub fn is_possible(&self) -> bool {
        self.state.is_some()
    }

    /// `⟨ψ|ρ|ψ⟩` for the postselected state.
    pub fn fidelity_with(&self, target: &PureState) -> Result<f64> {
        qstate::fidelity(target, self.state()?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    /// Works for any weights carried by the control qubit.
    TwoState,
    /// Weights fixed at construction, no control register.
    FixedCoeff { weights: Weights },
    /// d inputs and a d-level control register.
    MultiD,
}

/// Referential state, declared input overlaps and protocol variant.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSpec {
    pub chi: PureState,
    pub overlaps: Vec<OverlapSpec>,
    pub variant: Variant,
}

impl ProtocolSpec {
    pub fn new(chi: PureState, overlaps: Vec<OverlapSpec>, variant: Variant) -> Result<Self> {
        if chi.dim() < 2 {
            return Err(Error::ShapeError(
                "protocols need a state space of dimension at least 2".into(),
            ));
        }
        match &variant {
            Variant::TwoState if overlaps.len() != 2 => {
                return Err(Error::InvalidArgument(format!(
                    "two-state protocol needs 2 overlaps, got {}",
                    overlaps.len()
                )))
            }
            Variant::FixedCoeff { weights } => {
                if overlaps.len() != 2 {
                    return Err(Error::InvalidArgument(format!(
                        "fixed-coefficient protocol needs 2 overlaps, got {}",
                        overlaps.len()
                    )));
                }
                weights.require_len(2)?;
            }
            Variant::MultiD if overlaps.len() < 2 => {
                return Err(Error::InvalidArgument(format!(
                    "d-state protocol needs d ≥ 2 overlaps, got {}",
                    overlaps.len()
                )))
            }
            _ => {}
        }
        Ok(ProtocolSpec {
            chi,
            overlaps,
            variant,
        })
    }

    pub fn two_state(chi: PureState, c1: f64, c2: f64) -> Result<Self> {
        Self::new(
            chi,
            vec![OverlapSpec::new(c1)?, OverlapSpec::new(c2)?],
            Variant::TwoState,
        )
    }

    pub fn fixed_coeff(chi: PureState, c1: f64, c2: f64, weights: Weights) -> Result<Self> {
        Self::new(
            chi,
            vec![OverlapSpec::new(c1)?, OverlapSpec::new(c2)?],
            Variant::FixedCoeff { weights },
        )
    }

    pub fn multi_d(chi: PureState, overlaps: &[f64]) -> Result<Self> {
        let overlaps = overlaps
            .iter()
            .map(|&x| OverlapSpec::new(x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(chi, overlaps, Variant::MultiD)
    }

    pub fn overlap_values(&self) -> Vec<f64> {
        self.overlaps.iter().map(|o| o.value()).collect()
    }

    pub fn dim(&self) -> usize {
        self.chi.dim()
    }

    /// Checks that `tr(P_χ P_ψᵢ) = scale · cᵢ` for each input.
    fn check_inputs(&self, states: &[&PureState], scale: f64) -> Result<()> {
        if states.len() != self.overlaps.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} input states, got {}",
                self.overlaps.len(),
                states.len()
            )));
        }
        for (s, o) in states.iter().zip(&self.overlaps) {
            if s.dim() != self.dim() {
                return Err(Error::ShapeError(format!(
                    "input of dimension {} against referential dimension {}",
                    s.dim(),
                    self.dim()
                )));
            }
            let expected = scale * o.value();
            let actual = qstate::state_overlap(&self.chi, s);
            if (actual - expected).abs() > OVERLAP_MATCH_TOL {
                return Err(Error::OverlapMismatch { expected, actual });
            }
        }
        Ok(())
    }
}

/// `μ ∝ Σᵢ (∏_{k≠i} √c_k)⁻¹ |i⟩`; for two inputs this is `∝ √c₁|0⟩ + √c₂|1⟩`.
pub fn auxiliary_vector(overlaps: &[f64]) -> CVector {
    let raw: Vec<f64> = (0..overlaps.len())
        .map(|i| {
            let prod: f64 = overlaps
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, &x)| x)
                .product();
            1.0 / prod.sqrt()
        })
        .collect();
    CVector::from_real(&raw).normalized()
}

/// Expands `K_base` into the family `{μᵢ χ_{j₂}⋯χ_{j_d} K_base}` obtained by
/// tracing out the control register and the copies projected onto `|χ⟩`.
fn unroll_trace(k_base: &CMatrix, mu: &CVector, chi: &CVector, discarded: usize) -> Vec<CMatrix> {
    let mut coeffs: Vec<C64> = mu.entries().to_vec();
    for _ in 0..discarded {
        coeffs = coeffs
            .iter()
            .flat_map(|a| chi.entries().iter().map(move |b| a * b))
            .collect();
    }
    coeffs.into_iter().map(|z| k_base.scale(z)).collect()
}

fn two_overlaps(spec: &ProtocolSpec) -> (f64, f64) {
    (spec.overlaps[0].value(), spec.overlaps[1].value())
}

/// Two-state protocol on `ℂ² ⊗ H ⊗ H → H`.
///
/// `K_base = (⟨μ| ⊗ I ⊗ ⟨χ|)(|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ 𝕊)`, assembled blockwise:
/// the `|0⟩` block is `μ̄₀ (I ⊗ ⟨χ|)` and the `|1⟩` block is `μ̄₁ (⟨χ| ⊗ I)`.
pub fn build_lambda_sup(spec: &ProtocolSpec) -> Result<KrausMap> {
    if spec.variant != Variant::TwoState {
        return Err(Error::InvalidArgument(
            "build_lambda_sup needs the two-state variant".into(),
        ));
    }
    let n = spec.dim();
    let (c1, c2) = two_overlaps(spec);
    let mu = auxiliary_vector(&[c1, c2]);
    let in_dim = 2 * n * n;
    linalg::check_entries("Kraus operator", n.checked_mul(in_dim))?;
    let chi = spec.chi.vector();
    let (m0, m1) = (mu[0].conj(), mu[1].conj());
    let k_base = CMatrix::from_fn(n, in_dim, |a, col| {
        let (block, rest) = (col / (n * n), col % (n * n));
        let (x, y) = (rest / n, rest % n);
        if block == 0 {
            if x == a {
                m0 * chi[y].conj()
            } else {
                C64::new(0.0, 0.0)
            }
        } else if y == a {
            m1 * chi[x].conj()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    KrausMap::new(unroll_trace(&k_base, &mu, chi, 1))
}

/// Dense `V₃V₂V₁` for the two-state protocol, built from explicit tensor products.
pub fn lambda_sup_composed(spec: &ProtocolSpec) -> Result<CMatrix> {
    let n = spec.dim();
    let (c1, c2) = two_overlaps(spec);
    let mu = auxiliary_vector(&[c1, c2]);
    let chi = spec.chi.vector();
    let p0 = CVector::basis(2, 0).outer(&CVector::basis(2, 0));
    let p1 = CVector::basis(2, 1).outer(&CVector::basis(2, 1));
    let id_n = CMatrix::identity(n);
    let id_nn = CMatrix::identity(n * n);
    let v1 = &linalg::kron(&p0, &id_nn)? + &linalg::kron(&p1, &linalg::swap_matrix(n))?;
    let v2 = linalg::kron_all(&[&CMatrix::identity(2), &id_n, &chi.outer(chi)])?;
    let v3 = linalg::kron(&mu.outer(&mu), &id_nn)?;
    Ok(v3.matmul(&v2).matmul(&v1))
}

/// `c₁c₂/(c₁+c₂) · 𝒩_Ψ²`
pub fn success_probability_two(
    w: &Weights,
    c1: f64,
    c2: f64,
    chi: &PureState,
    psi: &PureState,
    phi: &PureState,
) -> Result<f64> {
    let c1 = OverlapSpec::new(c1)?.value();
    let c2 = OverlapSpec::new(c2)?.value();
    let norm = rules::superposition_norm(chi, psi, phi, w)?;
    Ok(c1 * c2 / (c1 + c2) * norm * norm)
}

fn control_state(nu: &PureState, d: usize) -> Result<()> {
    if nu.dim() != d {
        return Err(Error::ShapeError(format!(
            "control register has dimension {}, expected {d}",
            nu.dim()
        )));
    }
    Ok(())
}

/// Runs the two-state protocol on `P_ν ⊗ P_ψ ⊗ P_φ`.
pub fn run_two(
    spec: &ProtocolSpec,
    nu: &PureState,
    psi: &PureState,
    phi: &PureState,
) -> Result<ProtocolOutcome> {
    run_two_scaled(spec, 1.0, nu, psi, phi)
}

/// Runs the two-state protocol on inputs whose overlaps are `λc₁, λc₂`.
pub fn run_two_scaled(
    spec: &ProtocolSpec,
    lambda: f64,
    nu: &PureState,
    psi: &PureState,
    phi: &PureState,
) -> Result<ProtocolOutcome> {
    let (c1, c2) = two_overlaps(spec);
    if !(lambda > 0.0 && lambda * c1.max(c2) <= 1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "overlap scale {lambda} outside (0, 1/max(c1, c2)]"
        )));
    }
    control_state(nu, 2)?;
    spec.check_inputs(&[psi, phi], lambda)?;
    let map = build_lambda_sup(spec)?;
    map.apply_pure(&nu.tensor(psi).tensor(phi))
}

/// `max{|α/√c₁ + β/√c₂|², |α|²/c₁ + |β|²/c₂}`, the top eigenvalue of `W†W` for
/// `W = (I ⊗ ⟨χ|)(α/√c₁ I⊗I + β/√c₂ 𝕊)`.
pub fn lambda_max_formula(w: &Weights, c1: f64, c2: f64) -> f64 {
    let (a, b) = (w.alpha(), w.beta());
    let (s1, s2) = (c1.sqrt(), c2.sqrt());
    let sum = (a / s1 + b / s2).norm_sqr();
    let diag = a.norm_sqr() / c1 + b.norm_sqr() / c2;
    sum.max(diag)
}

/// `(I ⊗ ⟨χ|)(a I⊗I + b 𝕊)` as an `n × n²` matrix.
pub fn chi_contracted_swap_mix(chi: &PureState, a: C64, b: C64) -> Result<CMatrix> {
    let n = chi.dim();
    linalg::check_entries("Kraus operator", n.checked_mul(n * n))?;
    let chi = chi.vector();
    Ok(CMatrix::from_fn(n, n * n, |r, col| {
        let (x, y) = (col / n, col % n);
        let mut z = C64::new(0.0, 0.0);
        if x == r {
            z += a * chi[y].conj();
        }
        if y == r {
            z += b * chi[x].conj();
        }
        z
    }))
}

/// Fixed-coefficient protocol `ρ ↦ s_max W ρ W†` on `H ⊗ H → H`.
///
/// `W(ψ⊗φ)` must equal `α ⟨χ|φ⟩/|⟨χ|φ⟩| ψ + β ⟨χ|ψ⟩/|⟨χ|ψ⟩| φ`, which fixes
/// `W = (I ⊗ ⟨χ|)(α/√c₂ I⊗I + β/√c₁ 𝕊)`. Its top eigenvalue is therefore
/// `lambda_max_formula(w, c₂, c₁)`; `s_max` is taken from a numeric eigensolve.
pub fn build_lambda_tilde(chi: &PureState, w: &Weights, c1: f64, c2: f64) -> Result<KrausMap> {
    w.require_len(2)?;
    w.require_nonzero()?;
    let c1 = OverlapSpec::new(c1)?.value();
    let c2 = OverlapSpec::new(c2)?.value();
    if chi.dim() < 2 {
        return Err(Error::ShapeError(
            "protocols need a state space of dimension at least 2".into(),
        ));
    }
    let raw = chi_contracted_swap_mix(chi, w.alpha() / c2.sqrt(), w.beta() / c1.sqrt())?;
    // W W† shares its nonzero spectrum with W†W and is only n × n.
    let top = linalg::hermitian_max_eigenvalue(&raw.matmul(&raw.dagger()).symmetrized())?;
    KrausMap::new(vec![raw.scale_real(1.0 / top.sqrt())])
}

/// `𝒩_Ψ² / λ_max`: success probability of the fixed-coefficient protocol.
pub fn success_probability_tilde(
    w: &Weights,
    c1: f64,
    c2: f64,
    chi: &PureState,
    psi: &PureState,
    phi: &PureState,
) -> Result<f64> {
    let norm = rules::superposition_norm(chi, psi, phi, w)?;
    Ok(norm * norm / lambda_max_formula(w, c2, c1))
}

/// Runs the fixed-coefficient protocol on `P_ψ ⊗ P_φ`.
pub fn run_fixed(spec: &ProtocolSpec, psi: &PureState, phi: &PureState) -> Result<ProtocolOutcome> {
    let Variant::FixedCoeff { weights } = &spec.variant else {
        return Err(Error::InvalidArgument(
            "run_fixed needs the fixed-coefficient variant".into(),
        ));
    };
    spec.check_inputs(&[psi, phi], 1.0)?;
    let (c1, c2) = two_overlaps(spec);
    let map = build_lambda_tilde(&spec.chi, weights, c1, c2)?;
    map.apply_pure(&psi.tensor(phi))
}

/// Side-by-side success probabilities of the two-state and fixed-coefficient protocols.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub lambda_max: f64,
    /// `1/c₁ + 1/c₂ ≥ λ_max`
    pub inequality_holds: bool,
    /// `(P_succ, P̃_succ)` per sample.
    pub probabilities: Vec<(f64, f64)>,
    pub tilde_dominates: bool,
}

/// Runs both protocols on every `(ψ, φ)` pair; each pair must match the overlaps.
pub fn compare_protocols(
    chi: &PureState,
    w: &Weights,
    c1: f64,
    c2: f64,
    samples: &[(PureState, PureState)],
) -> Result<ComparisonReport> {
    let lambda_max = lambda_max_formula(w, c1, c2);
    let inequality_holds = 1.0 / c1 + 1.0 / c2 >= lambda_max - 1e-12;
    let spec = ProtocolSpec::two_state(chi.clone(), c1, c2)?;
    let sup = build_lambda_sup(&spec)?;
    let tilde = build_lambda_tilde(chi, w, c1, c2)?;
    let nu = w.as_state();
    let mut probabilities = Vec::with_capacity(samples.len());
    for (psi, phi) in samples {
        spec.check_inputs(&[psi, phi], 1.0)?;
        let p = sup.apply_pure(&nu.tensor(psi).tensor(phi))?.probability;
        let pt = tilde.apply_pure(&psi.tensor(phi))?.probability;
        probabilities.push((p, pt));
    }
    let tilde_dominates = probabilities.iter().all(|&(p, pt)| pt >= p - 1e-12);
    Ok(ComparisonReport {
        lambda_max,
        inequality_holds,
        probabilities,
        tilde_dominates,
    })
}

/// d-state protocol on `ℂ^d ⊗ H^{⊗d} → H`, keeping the first copy of `H`.
///
/// `V₁ = Σᵢ |i⟩⟨i| ⊗ 𝕊_{1,i}` permutes basis vectors, so each column of
/// `K_base = (⟨μ| ⊗ I ⊗ ⟨χ|^{⊗(d-1)}) V₁` has a single nonzero entry:
/// column `(i, x₁…x_d)` holds `μ̄ᵢ ∏_{k≠i} χ̄_{x_k}` in row `xᵢ`.
pub fn build_lambda_sup_d(spec: &ProtocolSpec) -> Result<KrausMap> {
    if spec.variant != Variant::MultiD {
        return Err(Error::InvalidArgument(
            "build_lambda_sup_d needs the d-state variant".into(),
        ));
    }
    let n = spec.dim();
    let overlaps = spec.overlap_values();
    let d = overlaps.len();
    let copies =
        u32::try_from(d)
            .ok()
            .and_then(|d| n.checked_pow(d))
            .ok_or(Error::DimensionTooLarge {
                what: "d-state input space",
                requested: usize::MAX,
                cap: linalg::max_entries(),
            })?;
    let in_dim = linalg::check_entries("d-state input space", d.checked_mul(copies))?;
    linalg::check_entries("Kraus operator", n.checked_mul(in_dim))?;
    let n_ops = d
        .checked_mul(n.pow(d as u32 - 1))
        .and_then(|k| k.checked_mul(n * in_dim));
    linalg::check_entries("Kraus family", n_ops)?;

    let mu = auxiliary_vector(&overlaps);
    let chi = spec.chi.vector();
    let mut k_base = CMatrix::zeros(n, in_dim);
    let mut digits = vec![0usize; d];
    for col in 0..in_dim {
        let i = col / copies;
        let mut rest = col % copies;
        for slot in (0..d).rev() {
            digits[slot] = rest % n;
            rest /= n;
        }
        let mut z = mu[i].conj();
        for (k, &x) in digits.iter().enumerate() {
            if k != i {
                z *= chi[x].conj();
            }
        }
        k_base[(digits[i], col)] = z;
    }
    KrausMap::new(unroll_trace(&k_base, &mu, chi, d - 1))
}

/// Runs the d-state protocol on `P_ν ⊗ P_ψ₁ ⊗ … ⊗ P_ψ_d`.
pub fn run_multi(
    spec: &ProtocolSpec,
    nu: &PureState,
    states: &[PureState],
) -> Result<ProtocolOutcome> {
    control_state(nu, spec.overlaps.len())?;
    spec.check_inputs(&states.iter().collect::<Vec<_>>(), 1.0)?;
    let map = build_lambda_sup_d(spec)?;
    let input = states.iter().fold(nu.clone(), |acc, s| acc.tensor(s));
    map.apply_pure(&input)
}
