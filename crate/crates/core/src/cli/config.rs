//! Command parameters: clap flag sets, and the resolved configs they merge into.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CliError;
use crate::circuits::GateSpec;
use crate::linalg::{c, C64};
use crate::qstate::OverlapSpec;
use crate::rules::Weights;

/// Complex number written `re,im` on the command line and `[re, im]` in JSON.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cplx(pub [f64; 2]);

impl Cplx {
    pub fn value(self) -> C64 {
        c(self.0[0], self.0[1])
    }
}

impl From<C64> for Cplx {
    fn from(z: C64) -> Self {
        Cplx([z.re, z.im])
    }
}

impl FromStr for Cplx {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let num = |p: &str| {
            p.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("expected a complex number `re,im`, got {s:?}"))
        };
        match parts.as_slice() {
            [re] => Ok(Cplx([num(re)?, 0.0])),
            [re, im] => Ok(Cplx([num(re)?, num(im)?])),
            _ => Err(format!("expected a complex number `re,im`, got {s:?}")),
        }
    }
}

fn balanced() -> Cplx {
    Cplx([FRAC_1_SQRT_2, 0.0])
}

fn from_file<T: DeserializeOwned + Default>(file: Option<Value>) -> Result<T, CliError> {
    match file {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string())),
    }
}

fn require_seed(seed: Option<u64>, why: &str) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Config(format!("--seed is required {why}")))
}

fn positive(name: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        return Err(CliError::Config(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn overlap(x: f64) -> Result<f64, CliError> {
    Ok(OverlapSpec::new(x)?.value())
}

/// Rescales the given coefficients to unit norm.
pub(crate) fn weights(coeffs: &[Cplx]) -> Result<Weights, CliError> {
    Ok(Weights::normalized(
        coeffs.iter().map(|z| z.value()).collect(),
    )?)
}

macro_rules! override_with {
    ($cfg:ident, $args:ident, [$($field:ident),*]) => {
        $(if let Some(v) = &$args.$field {
            $cfg.$field = v.clone();
        })*
    };
}

#[derive(Debug, Args)]
pub struct SuperposeTwoArgs {
    /// Dimension of the state space.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// Weight of the first state, `re,im` (weights are renormalized).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<Cplx>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<Cplx>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Monte Carlo shots per trial (0 disables sampling).
    #[arg(long)]
    pub shots: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuperposeTwoConfig {
    pub dim: usize,
    pub c1: f64,
    pub c2: f64,
    pub alpha: Cplx,
    pub beta: Cplx,
    pub seed: Option<u64>,
    pub trials: usize,
    pub shots: u64,
}

impl Default for SuperposeTwoConfig {
    fn default() -> Self {
        SuperposeTwoConfig {
            dim: 2,
            c1: 0.5,
            c2: 0.5,
            alpha: balanced(),
            beta: balanced(),
            seed: None,
            trials: 100,
            shots: 0,
        }
    }
}

impl SuperposeTwoConfig {
    pub(crate) fn resolve(args: &SuperposeTwoArgs, file: Option<Value>) -> Result<Self, CliError> {
        let mut cfg: Self = from_file(file)?;
        let seed = args.seed.map(Some);
        override_with!(cfg, args, [dim, c1, c2, alpha, beta, trials, shots]);
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.dim < 2 {
            return Err(CliError::Config("dim must be at least 2".into()));
        }
        overlap(self.c1)?;
        overlap(self.c2)?;
        weights(&[self.alpha, self.beta])?;
        positive("trials", self.trials)?;
        require_seed(self.seed, "to sample input states")?;
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated overlaps for the first input.
    #[arg(long, value_delimiter = ',')]
    pub c1_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub c2_values: Option<Vec<f64>>,
    /// Comma-separated weight angles t, giving α = cos t, β = sin t · e^{i·phase}.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub angles: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub phase: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub dim: usize,
    pub c1_values: Vec<f64>,
    pub c2_values: Vec<f64>,
    pub angles: Vec<f64>,
    pub phase: f64,
    pub seed: Option<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let grid = vec![0.1, 0.3, 0.5, 0.7, 0.9];
        SweepConfig {
            dim: 2,
            c1_values: grid.clone(),
            c2_values: grid,
            angles: vec![FRAC_PI_4],
            phase: 0.0,
            seed: None,
        }
    }
}

impl SweepConfig {
    pub(crate) fn resolve(args: &SweepArgs, file: Option<Value>) -> Result<Self, CliError> {
        let mut cfg: Self = from_file(file)?;
        override_with!(cfg, args, [dim, c1_values, c2_values, angles, phase]);
        if args.seed.is_some() {
            cfg.seed = args.seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.dim < 2 {
            return Err(CliError::Config("dim must be at least 2".into()));
        }
        if self.c1_values.is_empty() || self.c2_values.is_empty() || self.angles.is_empty() {
            return Err(CliError::Config("the sweep grid is empty".into()));
        }
        for &x in self.c1_values.iter().chain(&self.c2_values) {
            overlap(x)?;
        }
        for &t in &self.angles {
            if !(t.is_finite() && t.sin().abs() > 1e-12 && t.cos().abs() > 1e-12) {
                return Err(CliError::Config(format!(
                    "angle {t} gives a vanishing weight"
                )));
            }
        }
        if !self.phase.is_finite() {
            return Err(CliError::Config("phase must be finite".into()));
        }
        require_seed(self.seed, "to sample input states")?;
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct MultiArgs {
    /// Number of states to superpose.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated overlaps, one per state (default 0.5 each).
    #[arg(long, value_delimiter = ',')]
    pub overlaps: Option<Vec<f64>>,
    /// Weight `re,im` for the next state; repeat once per state (default equal weights).
    #[arg(long = "weight", allow_hyphen_values = true)]
    pub weights: Option<Vec<Cplx>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub shots: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiConfig {
    pub d: usize,
    pub dim: usize,
    pub overlaps: Vec<f64>,
    pub weights: Vec<Cplx>,
    pub seed: Option<u64>,
    pub trials: usize,
    pub shots: u64,
}

impl Default for MultiConfig {
    fn default() -> Self {
        MultiConfig {
            d: 3,
            dim: 2,
            overlaps: Vec::new(),
            weights: Vec::new(),
            seed: None,
            trials: 10,
            shots: 0,
        }
    }
}

impl MultiConfig {
    pub(crate) fn resolve(args: &MultiArgs, file: Option<Value>) -> Result<Self, CliError> {
        let mut cfg: Self = from_file(file)?;
        override_with!(cfg, args, [d, dim, overlaps, weights, trials, shots]);
        if args.seed.is_some() {
            cfg.seed = args.seed;
        }
        if cfg.d < 2 {
            return Err(CliError::Config(format!(
                "d must be at least 2, got {}",
                cfg.d
            )));
        }
        if cfg.overlaps.is_empty() {
            cfg.overlaps = vec![0.5; cfg.d];
        }
        if cfg.weights.is_empty() {
            cfg.weights = vec![Cplx([1.0 / (cfg.d as f64).sqrt(), 0.0]); cfg.d];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.dim < 2 {
            return Err(CliError::Config("dim must be at least 2".into()));
        }
        if self.overlaps.len() != self.d || self.weights.len() != self.d {
            return Err(CliError::Config(format!(
                "need {} overlaps and {} weights, got {} and {}",
                self.d,
                self.d,
                self.overlaps.len(),
                self.weights.len()
            )));
        }
        for &x in &self.overlaps {
            overlap(x)?;
        }
        weights(&self.weights)?;
        positive("trials", self.trials)?;
        require_seed(self.seed, "to sample input states")?;
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct CircuitDemoArgs {
    /// Classical input of the first computation, e.g. `101`.
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    /// JSON file with the gate list of the first circuit (default: no gates).
    #[arg(long)]
    pub u: Option<PathBuf>,
    #[arg(long)]
    pub v: Option<PathBuf>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitDemoConfig {
    pub x: String,
    pub y: String,
    pub u: Vec<GateSpec>,
    pub v: Vec<GateSpec>,
    pub shots: u64,
    pub seed: Option<u64>,
}

impl Default for CircuitDemoConfig {
    fn default() -> Self {
        CircuitDemoConfig {
            x: "1".into(),
            y: "1".into(),
            u: Vec::new(),
            v: Vec::new(),
            shots: 0,
            seed: None,
        }
    }
}

fn read_gates(path: &Path) -> Result<Vec<GateSpec>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl CircuitDemoConfig {
    pub(crate) fn resolve(args: &CircuitDemoArgs, file: Option<Value>) -> Result<Self, CliError> {
        let mut cfg: Self = from_file(file)?;
        override_with!(cfg, args, [x, y, shots]);
        if let Some(p) = &args.u {
            cfg.u = read_gates(p)?;
        }
        if let Some(p) = &args.v {
            cfg.v = read_gates(p)?;
        }
        if args.seed.is_some() {
            cfg.seed = args.seed;
        }
        if cfg.shots > 0 {
            require_seed(cfg.seed, "when --shots is set")?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct NogoArgs {
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Number of random qubit pairs each candidate is scored on.
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<Cplx>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<Cplx>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Objective evaluations allowed per restart.
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Also solve for the forced algebraic form and exhibit counterexamples.
    #[arg(long)]
    pub forced_form: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NogoConfig {
    pub restarts: usize,
    pub pairs: usize,
    pub alpha: Cplx,
    pub beta: Cplx,
    pub seed: Option<u64>,
    pub max_evals: usize,
    pub forced_form: bool,
}

impl Default for NogoConfig {
    fn default() -> Self {
        NogoConfig {
            restarts: 20,
            pairs: 200,
            alpha: balanced(),
            beta: balanced(),
            seed: None,
            max_evals: crate::nogo::SearchOptions::default().max_evals,
            forced_form: false,
        }
    }
}

impl NogoConfig {
    pub(crate) fn resolve(args: &NogoArgs, file: Option<Value>) -> Result<Self, CliError> {
        let mut cfg: Self = from_file(file)?;
        override_with!(cfg, args, [restarts, pairs, alpha, beta, max_evals]);
        if args.seed.is_some() {
            cfg.seed = args.seed;
        }
        if args.forced_form {
            cfg.forced_form = true;
        }
        positive("restarts", cfg.restarts)?;
        positive("max_evals", cfg.max_evals)?;
        if cfg.pairs < 10 {
            return Err(CliError::Config(format!(
                "pairs must be at least 10, got {}",
                cfg.pairs
            )));
        }
        weights(&[cfg.alpha, cfg.beta])?;
        require_seed(cfg.seed, "to seed the restarts")?;
        Ok(cfg)
    }

    /// Whether this run uses the settings the 0.01 floor is asserted for.
    pub(crate) fn asserts_floor(&self) -> Result<bool, CliError> {
        let w = weights(&[self.alpha, self.beta])?;
        let balanced = (w.alpha() - w.beta()).norm() < 1e-9 && w.alpha().im.abs() < 1e-12;
        Ok(balanced && self.restarts >= 20 && self.pairs == crate::nogo::CANONICAL_PAIRS)
    }
}

#[derive(Debug, Args)]
pub struct OpticsArgs {
    /// Coherent amplitude of the first state, `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude1: Option<Cplx>,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude2: Option<Cplx>,
    /// Number of Fock states kept.
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<Cplx>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<Cplx>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsConfig {
    pub amplitude1: Cplx,
    pub amplitude2: Cplx,
    pub cutoff: usize,
    pub alpha: Cplx,
    pub beta: Cplx,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        OpticsConfig {
            amplitude1: Cplx([1.0, 0.0]),
            amplitude2: Cplx([-1.0, 0.0]),
            cutoff: 30,
            alpha: balanced(),
            beta: balanced(),
        }
    }
}

impl OpticsConfig {
    pub(crate) fn resolve(args: &OpticsArgs, file: Option<Value>) -> Result<Self, CliError> {
        let mut cfg: Self = from_file(file)?;
        override_with!(cfg, args, [amplitude1, amplitude2, cutoff, alpha, beta]);
        if cfg.cutoff < 2 {
            return Err(CliError::Config("cutoff must be at least 2".into()));
        }
        weights(&[cfg.alpha, cfg.beta])?;
        Ok(cfg)
    }
}
