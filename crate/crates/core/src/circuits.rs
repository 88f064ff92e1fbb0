//! Dense statevector simulation of qubit circuits, and the encoding that turns
//! two classical computations into inputs for the two-state protocol.
//!
//! Qubit 0 is the most significant bit of a basis index. In an encoded
//! register qubit 0 is the ancilla and qubits `1..=N` hold the data.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};
use crate::protocols::ProtocolOutcome;
use crate::qstate::{projector, PureState, SeededRng, IMPOSSIBLE_TOL, NORM_TOL};

pub const UNITARY_TOL: f64 = 1e-10;
pub const MAX_DATA_QUBITS: usize = 10;

/// Normalized state of `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitRegister {
    n: usize,
    state: CVector,
}

impl QubitRegister {
    pub fn new(n: usize, state: CVector) -> Result<Self> {
        let dim = register_dim(n)?;
        if state.dim() != dim {
            return Err(Error::ShapeError(format!(
                "{n} qubits need {dim} amplitudes, got {}",
                state.dim()
            )));
        }
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(QubitRegister { n, state })
    }

    /// Computational basis state `|b₀ b₁ … b_{n-1}⟩`.
    pub fn basis(bits: &[bool]) -> Result<Self> {
        let n = bits.len();
        let dim = register_dim(n)?;
        Ok(QubitRegister {
            n,
            state: CVector::basis(dim, bits_to_index(bits)),
        })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::basis(&vec![false; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn state(&self) -> &CVector {
        &self.state
    }

    pub fn to_pure(&self) -> PureState {
        PureState::new(self.state.clone()).expect("register is normalized")
    }
}

fn register_dim(n: usize) -> Result<usize> {
    let dim = u32::try_from(n).ok().and_then(|n| 1usize.checked_shl(n));
    linalg::check_entries("qubit register", dim)
}

fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// Parses a string of `0`/`1` characters.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    if s.is_empty() {
        return Err(Error::InvalidArgument("bitstring must be nonempty".into()));
    }
    s.chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::InvalidArgument(format!(
                "bitstring may only contain 0 and 1, found {other:?}"
            ))),
        })
        .collect()
}

/// A unitary acting on an ordered list of qubits; `targets[0]` is the most
/// significant bit of the matrix index.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    matrix: CMatrix,
    targets: Vec<usize>,
}

impl Gate {
    pub fn new(matrix: CMatrix, targets: Vec<usize>) -> Result<Self> {
        let k = targets.len();
        let size = u32::try_from(k).ok().and_then(|k| 1usize.checked_shl(k));
        if k == 0 || size != Some(matrix.rows()) || !matrix.is_square() {
            return Err(Error::ShapeError(format!(
                "a gate on {k} qubits needs a {0}×{0} matrix, got {1:?}",
                size.unwrap_or(0),
                matrix.shape()
            )));
        }
        let mut seen = targets.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != k {
            return Err(Error::IndexClash(format!("repeated target in {targets:?}")));
        }
        let dev = matrix.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Gate { matrix, targets })
    }

    pub fn x(target: usize) -> Self {
        let m = CMatrix::from_rows(&[vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]])
            .expect("2×2");
        Gate {
            matrix: m,
            targets: vec![target],
        }
    }

    pub fn h(target: usize) -> Self {
        let s = FRAC_1_SQRT_2;
        let m = CMatrix::from_rows(&[vec![c(s, 0.), c(s, 0.)], vec![c(s, 0.), c(-s, 0.)]])
            .expect("2×2");
        Gate {
            matrix: m,
            targets: vec![target],
        }
    }

    pub fn cx(control: usize, target: usize) -> Result<Self> {
        controlled(&Self::x(target), control)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    fn shifted(&self, offset: usize) -> Gate {
        Gate {
            matrix: self.matrix.clone(),
            targets: self.targets.iter().map(|t| t + offset).collect(),
        }
    }

    fn apply_in_place(&self, n: usize, amps: &mut [C64]) {
        let k = self.targets.len();
        let masks: Vec<usize> = self.targets.iter().map(|&t| 1 << (n - 1 - t)).collect();
        let all: usize = masks.iter().sum();
        let local = 1usize << k;
        let offsets: Vec<usize> = (0..local)
            .map(|j| {
                (0..k)
                    .filter(|&b| j & (1 << (k - 1 - b)) != 0)
                    .map(|b| masks[b])
                    .sum()
            })
            .collect();
        let mut buf = vec![C64::new(0.0, 0.0); local];
        for base in (0..amps.len()).filter(|i| i & all == 0) {
            for (j, off) in offsets.iter().enumerate() {
                buf[j] = amps[base + off];
            }
            for (r, off) in offsets.iter().enumerate() {
                amps[base + off] = self
                    .matrix
                    .row(r)
                    .iter()
                    .zip(&buf)
                    .map(|(m, v)| m * v)
                    .sum();
            }
        }
    }
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U` with the control as the leading target.
pub fn controlled(g: &Gate, control: usize) -> Result<Gate> {
    if g.targets.contains(&control) {
        return Err(Error::IndexClash(format!(
            "control {control} is also a target of {:?}",
            g.targets
        )));
    }
    let d = g.matrix.rows();
    let m = CMatrix::from_fn(2 * d, 2 * d, |r, s| match (r < d, s < d) {
        (true, true) if r == s => c(1.0, 0.0),
        (false, false) => g.matrix[(r - d, s - d)],
        _ => c(0.0, 0.0),
    });
    let mut targets = vec![control];
    targets.extend_from_slice(&g.targets);
    Ok(Gate { matrix: m, targets })
}

/// Gates applied in order to `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        register_dim(n)?;
        if let Some(g) = gates.iter().find(|g| g.targets.iter().any(|&t| t >= n)) {
            return Err(Error::ShapeError(format!(
                "gate targets {:?} outside a {n}-qubit circuit",
                g.targets
            )));
        }
        Ok(Circuit { n, gates })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn apply(&self, reg: &QubitRegister) -> Result<QubitRegister> {
        if reg.n != self.n {
            return Err(Error::ShapeError(format!(
                "{}-qubit circuit applied to {} qubits",
                self.n, reg.n
            )));
        }
        let mut amps = reg.state.clone().into_entries();
        for g in &self.gates {
            g.apply_in_place(self.n, &mut amps);
        }
        Ok(QubitRegister {
            n: self.n,
            state: CVector::new(amps),
        })
    }

    /// Dense `2ⁿ × 2ⁿ` matrix of the whole circuit.
    pub fn unitary(&self) -> Result<CMatrix> {
        let dim = 1usize << self.n;
        linalg::check_entries("circuit unitary", dim.checked_mul(dim))?;
        let mut out = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut amps = CVector::basis(dim, col).into_entries();
            for g in &self.gates {
                g.apply_in_place(self.n, &mut amps);
            }
            for (row, a) in amps.into_iter().enumerate() {
                out[(row, col)] = a;
            }
        }
        Ok(out)
    }

    /// The same gates on qubits `offset..offset + n` of a `width`-qubit register.
    pub fn embedded(&self, offset: usize, width: usize) -> Result<Circuit> {
        if offset + self.n > width {
            return Err(Error::ShapeError(format!(
                "cannot place {} qubits at offset {offset} in {width}",
                self.n
            )));
        }
        Circuit::new(
            width,
            self.gates.iter().map(|g| g.shifted(offset)).collect(),
        )
    }
}

/// Lifts every gate to its controlled version; the total is the controlled total.
pub fn controlled_circuit(circ: &Circuit, control: usize) -> Result<Circuit> {
    let gates = circ
        .gates
        .iter()
        .map(|g| controlled(g, control))
        .collect::<Result<Vec<_>>>()?;
    Circuit::new(circ.n.max(control + 1), gates)
}

/// `(|0⟩|0…0⟩ + |1⟩|x⟩)/√2` with the ancilla first.
pub fn prepare_encoded(x: &[bool]) -> Result<QubitRegister> {
    check_data_width(x.len())?;
    let n = x.len() + 1;
    let dim = register_dim(n)?;
    let mut state = CVector::zeros(dim);
    state[0] += c(FRAC_1_SQRT_2, 0.0);
    state[(1 << x.len()) + bits_to_index(x)] += c(FRAC_1_SQRT_2, 0.0);
    QubitRegister::new(n, state)
}

fn check_data_width(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "need at least one data qubit".into(),
        ));
    }
    if n > MAX_DATA_QUBITS {
        return Err(Error::DimensionTooLarge {
            what: "data qubits",
            requested: n,
            cap: MAX_DATA_QUBITS,
        });
    }
    Ok(())
}

/// Outcome of superposing two subroutine results, kept as a register.
#[derive(Clone, Debug)]
pub struct SubroutineOutcome {
    pub probability: f64,
    pub register: QubitRegister,
}

impl From<SubroutineOutcome> for ProtocolOutcome {
    fn from(o: SubroutineOutcome) -> Self {
        let rho = projector(&o.register.to_pure());
        ProtocolOutcome::from_parts(o.probability, Some(rho))
    }
}

/// Superposes `U|x⟩` and `V|y⟩` through the encoded inputs with
/// `α = β = √c₁ = √c₂ = 1/√2`: the unnormalized output is
/// `|0⟩^{⊗N+1} + ½|1⟩(U|x⟩ + V|y⟩)` and `P = ¼‖·‖²`.
pub fn run_subroutine_superposition(
    u: &Circuit,
    v: &Circuit,
    x: &[bool],
    y: &[bool],
) -> Result<SubroutineOutcome> {
    let n = x.len();
    if y.len() != n || u.n != n || v.n != n {
        return Err(Error::ShapeError(format!(
            "widths differ: U on {}, V on {}, x has {}, y has {}",
            u.n,
            v.n,
            n,
            y.len()
        )));
    }
    check_data_width(n)?;
    let ux = u.apply(&QubitRegister::basis(x)?)?;
    let vy = v.apply(&QubitRegister::basis(y)?)?;
    let sum = &ux.state + &vy.state;
    let mut raw = CVector::zeros(2 << n);
    raw[0] = c(1.0, 0.0);
    for (i, a) in sum.entries().iter().enumerate() {
        raw[(1 << n) + i] += a * 0.5;
    }
    let probability = 0.25 * raw.norm_sqr();
    let register = QubitRegister::new(n + 1, raw.normalized())?;
    Ok(SubroutineOutcome {
        probability,
        register,
    })
}

/// Postselects the ancilla on `|1⟩`; returns the data register and the branch weight.
pub fn extract_result(psi: &QubitRegister) -> Result<(QubitRegister, f64)> {
    if psi.n < 2 {
        return Err(Error::ShapeError(
            "need an ancilla and at least one data qubit".into(),
        ));
    }
    let half = 1usize << (psi.n - 1);
    let branch = CVector::new(psi.state.entries()[half..].to_vec());
    let weight = branch.norm_sqr();
    if weight < IMPOSSIBLE_TOL {
        return Err(Error::OutcomeImpossible(weight));
    }
    let reg = QubitRegister::new(psi.n - 1, branch.normalized())?;
    Ok((reg, weight))
}

/// Empirical Bernoulli frequency over a number of shots.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShotSummary {
    pub shots: u64,
    pub successes: u64,
    pub frequency: f64,
    /// `√(p(1-p)/shots)`
    pub sigma: f64,
    /// Set when `|frequency − p| > 3σ`.
    pub flagged: bool,
}

pub fn sample_shots(prob: f64, shots: u64, rng: &mut SeededRng) -> Result<ShotSummary> {
    if !(-1e-12..=1.0 + 1e-12).contains(&prob) {
        return Err(Error::InvalidArgument(format!(
            "probability {prob} outside [0, 1]"
        )));
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("need at least one shot".into()));
    }
    let p = prob.clamp(0.0, 1.0);
    let successes = (0..shots).filter(|_| rng.random::<f64>() < p).count() as u64;
    let frequency = successes as f64 / shots as f64;
    let sigma = (p * (1.0 - p) / shots as f64).sqrt();
    Ok(ShotSummary {
        shots,
        successes,
        frequency,
        sigma,
        flagged: (frequency - p).abs() > 3.0 * sigma,
    })
}

/// Gate description as read from JSON: `{"name": "x"|"h"|"cx"|"u", "targets": [...], "matrix": [[[re, im], ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub name: String,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

impl GateSpec {
    pub fn to_gate(&self) -> Result<Gate> {
        let arity = |k: usize| {
            if self.targets.len() == k {
                Ok(())
            } else {
                Err(Error::ShapeError(format!(
                    "gate {:?} takes {k} target(s), got {}",
                    self.name,
                    self.targets.len()
                )))
            }
        };
        let no_matrix = || {
            if self.matrix.is_some() {
                Err(Error::InvalidArgument(format!(
                    "gate {:?} does not take a matrix",
                    self.name
                )))
            } else {
                Ok(())
            }
        };
        match self.name.as_str() {
            "x" => {
                arity(1)?;
                no_matrix()?;
                Ok(Gate::x(self.targets[0]))
            }
            "h" => {
                arity(1)?;
                no_matrix()?;
                Ok(Gate::h(self.targets[0]))
            }
            "cx" => {
                arity(2)?;
                no_matrix()?;
                Gate::cx(self.targets[0], self.targets[1])
            }
            "u" => {
                let rows = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("gate \"u\" needs a matrix".into()))?;
                let rows: Vec<Vec<C64>> = rows
                    .iter()
                    .map(|r| r.iter().map(|&[re, im]| c(re, im)).collect())
                    .collect();
                Gate::new(CMatrix::from_rows(&rows)?, self.targets.clone())
            }
            other => Err(Error::InvalidArgument(format!(
                "unknown gate {other:?}; expected x, h, cx or u"
            ))),
        }
    }
}

/// Builds an `n`-qubit circuit from gate descriptions.
pub fn circuit_from_specs(n: usize, specs: &[GateSpec]) -> Result<Circuit> {
    let gates = specs
        .iter()
        .map(GateSpec::to_gate)
        .collect::<Result<Vec<_>>>()?;
    Circuit::new(n, gates)
}
