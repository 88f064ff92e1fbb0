//! Pure states, density operators and seeded samplers for protocol inputs.
//!
//! States are only ever compared through projectors or fidelities; two
//! [`PureState`]s that differ by a global phase describe the same physical state.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, EIGEN_MAX_DIM};

pub const NORM_TOL: f64 = 1e-12;
pub const DENSITY_TOL: f64 = 1e-10;
/// Below this trace an outcome is treated as impossible.
pub const IMPOSSIBLE_TOL: f64 = 1e-14;

/// A normalized vector representative of a pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    vec: CVector,
}

impl PureState {
    pub fn new(vec: CVector) -> Result<Self> {
        let norm = vec.norm();
        if vec.dim() == 0 || !vec.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState { vec })
    }

    /// Normalizes `vec`; fails only for a zero or non-finite vector.
    pub fn from_unnormalized(vec: CVector) -> Result<Self> {
        let norm = vec.norm();
        if vec.dim() == 0 || !norm.is_finite() || norm < 1e-300 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState {
            vec: vec.scale(c(1.0 / norm, 0.0)),
        })
    }

    pub fn from_amplitudes(amps: &[C64]) -> Result<Self> {
        Self::from_unnormalized(CVector::new(amps.to_vec()))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        PureState {
            vec: CVector::basis(dim, k),
        }
    }

    pub fn dim(&self) -> usize {
        self.vec.dim()
    }

    pub fn vector(&self) -> &CVector {
        &self.vec
    }

    pub fn amplitude(&self, k: usize) -> C64 {
        self.vec[k]
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> C64 {
        self.vec.inner(&other.vec)
    }

    /// The same state with representative multiplied by `e^{iθ}`.
    pub fn rephased(&self, theta: f64) -> PureState {
        PureState {
            vec: self.vec.scale(C64::from_polar(1.0, theta)),
        }
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            vec: self.vec.kron(&other.vec),
        }
    }
}

/// Hermitian positive semidefinite operator with trace in `(0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    mat: CMatrix,
}

impl DensityOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::ShapeError(format!(
                "density operator must be square, got {:?}",
                mat.shape()
            )));
        }
        let deviation = mat.hermitian_deviation();
        if deviation > DENSITY_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = mat.trace().re;
        if !(tr > 0.0 && tr <= 1.0 + DENSITY_TOL) {
            return Err(Error::InvalidArgument(format!(
                "density operator trace {tr} outside (0, 1]"
            )));
        }
        let mat = mat.symmetrized();
        if mat.rows() <= EIGEN_MAX_DIM {
            let (vals, _) = linalg::hermitian_eigen(&mat)?;
            if let Some(&min) = vals.last() {
                if min < -DENSITY_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "density operator has negative eigenvalue {min}"
                    )));
                }
            }
        }
        Ok(DensityOperator { mat })
    }

    /// Rescales a positive operator to unit trace.
    pub fn normalized(mat: CMatrix) -> Result<Self> {
        let tr = mat.trace().re;
        if tr.is_nan() || tr.abs() < IMPOSSIBLE_TOL {
            return Err(Error::OutcomeImpossible(tr));
        }
        Self::new(mat.scale_real(1.0 / tr))
    }

    /// Wraps an operator known to satisfy the invariants by construction.
    pub(crate) fn trusted(mat: CMatrix) -> Self {
        DensityOperator { mat }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Tensor product of density operators.
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator {
            mat: linalg::kron(&self.mat, &other.mat)?,
        })
    }
}

/// Declared overlap `tr(P_χ P_ψ)` of an input with the referential state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapSpec(f64);

impl OverlapSpec {
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 && c <= 1.0 {
            Ok(OverlapSpec(c))
        } else {
            Err(Error::InvalidOverlap(c))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Reproducible random source: identical `(seed, stream)` pairs give identical draws.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Sibling generator on another stream of the same seed.
    pub fn with_stream(&self, stream: u64) -> SeededRng {
        SeededRng::new(self.seed, stream)
    }

    pub fn gaussian_complex(&mut self) -> C64 {
        let re: f64 = self.inner.sample(StandardNormal);
        let im: f64 = self.inner.sample(StandardNormal);
        c(re, im)
    }

    pub fn phase(&mut self) -> C64 {
        C64::from_polar(1.0, self.inner.random_range(0.0..std::f64::consts::TAU))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// `P_ψ = |ψ⟩⟨ψ|`
pub fn projector(s: &PureState) -> DensityOperator {
    DensityOperator::trusted(s.vec.outer(&s.vec))
}

/// `tr(A B)`
pub fn overlap(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeError(format!(
            "overlap of operators of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let n = a.dim();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a.mat[(i, j)] * b.mat[(j, i)];
        }
    }
    Ok(acc.re)
}

/// `|⟨a|b⟩|²`
pub fn state_overlap(a: &PureState, b: &PureState) -> f64 {
    a.inner(b).norm_sqr()
}

/// Haar-random pure state: a normalized complex Gaussian vector.
pub fn haar_random(dim: usize, rng: &mut SeededRng) -> PureState {
    assert!(dim >= 1, "dimension must be positive");
    loop {
        let v = CVector::new((0..dim).map(|_| rng.gaussian_complex()).collect());
        if v.norm() > 1e-150 {
            return PureState::from_unnormalized(v).expect("nonzero vector");
        }
    }
}

/// Haar-random unitary via Gram-Schmidt on a complex Gaussian matrix.
pub fn haar_unitary(dim: usize, rng: &mut SeededRng) -> CMatrix {
    let mut cols: Vec<CVector> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = CVector::new((0..dim).map(|_| rng.gaussian_complex()).collect());
        for _ in 0..2 {
            for q in &cols {
                let proj = q.inner(&v);
                v = &v - &q.scale(proj);
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v.scale(c(1.0 / n, 0.0)));
        }
    }
    CMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Random state with `tr(P_χ P_ψ) = c`: `√c e^{iθ₁}|χ⟩ + √(1-c) e^{iθ₂}|ψ⊥⟩`
/// with `|ψ⊥⟩` Haar-random in the orthogonal complement of `|χ⟩`.
pub fn random_with_overlap(
    chi: &PureState,
    c_spec: OverlapSpec,
    rng: &mut SeededRng,
) -> Result<PureState> {
    let dim = chi.dim();
    if dim < 2 {
        return Err(Error::ShapeError(
            "prescribed overlaps need dimension at least 2".into(),
        ));
    }
    let cv = c_spec.value();
    let perp = random_perpendicular(chi, rng);
    let a = rng.phase() * cv.sqrt();
    let b = rng.phase() * (1.0 - cv).max(0.0).sqrt();
    let v = &chi.vec.scale(a) + &perp.scale(b);
    PureState::from_unnormalized(v)
}

/// Haar-random unit vector orthogonal to `chi`.
pub fn random_perpendicular(chi: &PureState, rng: &mut SeededRng) -> CVector {
    loop {
        let mut v = CVector::new((0..chi.dim()).map(|_| rng.gaussian_complex()).collect());
        for _ in 0..2 {
            let proj = chi.vec.inner(&v);
            v = &v - &chi.vec.scale(proj);
        }
        let n = v.norm();
        if n > 1e-8 {
            return v.scale(c(1.0 / n, 0.0));
        }
    }
}

/// Coherent state `e^{-|a|²/2} Σ aⁿ/√n! |n⟩` truncated to `cutoff` number states and renormalized.
pub fn coherent_truncated(amplitude: C64, cutoff: usize) -> Result<PureState> {
    if cutoff == 0 {
        return Err(Error::CutoffTooSmall {
            cutoff,
            captured: 0.0,
        });
    }
    let mut amps = Vec::with_capacity(cutoff);
    let mut term = C64::new((-amplitude.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..cutoff {
        amps.push(term);
        term = term * amplitude / ((n + 1) as f64).sqrt();
    }
    let v = CVector::new(amps);
    let captured = v.norm_sqr();
    if captured < 1.0 - 1e-8 {
        return Err(Error::CutoffTooSmall { cutoff, captured });
    }
    PureState::from_unnormalized(v)
}

/// `⟨ψ|ρ|ψ⟩ / tr ρ`
pub fn fidelity(pure: &PureState, rho: &DensityOperator) -> Result<f64> {
    if pure.dim() != rho.dim() {
        return Err(Error::ShapeError(format!(
            "fidelity of a {}-dimensional state with a {}-dimensional operator",
            pure.dim(),
            rho.dim()
        )));
    }
    let tr = rho.trace();
    if tr < IMPOSSIBLE_TOL {
        return Err(Error::OutcomeImpossible(tr));
    }
    let v = rho.mat.apply(&pure.vec);
    Ok(pure.vec.inner(&v).re / tr)
}
