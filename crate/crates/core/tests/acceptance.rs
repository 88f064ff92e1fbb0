//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit on any failure.
//!
//! Every expected value is recomputed here from plain complex vectors, so the
//! checks do not lean on the library's own formulas.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use supstate::circuits::{
    controlled_circuit, prepare_encoded, run_subroutine_superposition, sample_shots, Circuit, Gate,
    QubitRegister,
};
use supstate::linalg::{self, c, CMatrix, C64};
use supstate::nogo::{self, SearchOptions};
use supstate::protocols::{self, ProtocolSpec};
use supstate::qstate::{
    haar_random, haar_unitary, projector, random_with_overlap, OverlapSpec, PureState, SeededRng,
};
use supstate::rules::{self, Weights};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

fn unit_phase(z: C64) -> C64 {
    z / z.norm()
}

fn amps(s: &PureState) -> Vec<C64> {
    s.vector().entries().to_vec()
}

/// `⟨t|ρ|t⟩ / ‖t‖²`
fn fidelity_oracle(target: &[C64], rho: &CMatrix) -> f64 {
    let n = target.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += target[i].conj() * rho[(i, j)] * target[j];
        }
    }
    acc.re / norm_sqr(target)
}

/// `Σᵢ αᵢ ∏_{k≠i} (⟨χ|ψ_k⟩/|⟨χ|ψ_k⟩|) ψᵢ`, unnormalized.
fn rule_oracle(chi: &[C64], states: &[Vec<C64>], w: &[C64]) -> Vec<C64> {
    let phases: Vec<C64> = states.iter().map(|s| unit_phase(inner(chi, s))).collect();
    let mut out = vec![C64::new(0.0, 0.0); chi.len()];
    for (i, s) in states.iter().enumerate() {
        let mut coeff = w[i];
        for (k, ph) in phases.iter().enumerate() {
            if k != i {
                coeff *= ph;
            }
        }
        for (o, a) in out.iter_mut().zip(s) {
            *o += coeff * a;
        }
    }
    out
}

fn random_weights(d: usize, rng: &mut SeededRng) -> Weights {
    loop {
        let raw: Vec<C64> = (0..d).map(|_| rng.gaussian_complex()).collect();
        if raw.iter().all(|z| z.norm() > 0.05) {
            return Weights::normalized(raw).unwrap();
        }
    }
}

fn sample_inputs(dim: usize, cs: &[f64], rng: &mut SeededRng) -> (PureState, Vec<PureState>) {
    let chi = haar_random(dim, rng);
    let states = cs
        .iter()
        .map(|&x| random_with_overlap(&chi, OverlapSpec::new(x).unwrap(), rng).unwrap())
        .collect();
    (chi, states)
}

fn protocol_correctness() -> Outcome {
    let cs = [0.2, 0.5, 0.9];
    let mut rng = SeededRng::new(101, 0);
    let (mut worst_f, mut worst_p) = (0.0f64, 0.0f64);
    for i in 0..1000 {
        let dim = 2 + i % 3;
        let (c1, c2) = (cs[(i / 3) % 3], cs[(i / 9) % 3]);
        let (chi, st) = sample_inputs(dim, &[c1, c2], &mut rng);
        let w = random_weights(2, &mut rng);
        let spec = ProtocolSpec::two_state(chi.clone(), c1, c2).unwrap();
        let out =
            protocols::run_two(&spec, &w.as_state(), &st[0], &st[1]).map_err(|e| e.to_string())?;
        let target = rule_oracle(&amps(&chi), &[amps(&st[0]), amps(&st[1])], w.coeffs());
        let f = fidelity_oracle(&target, out.state().unwrap().matrix());
        let p = c1 * c2 / (c1 + c2) * norm_sqr(&target);
        worst_f = worst_f.max(1.0 - f);
        worst_p = worst_p.max((out.probability - p).abs());
    }
    ensure(worst_f <= 1e-10, || format!("fidelity error {worst_f:e}"))?;
    ensure(worst_p <= 1e-10, || {
        format!("probability error {worst_p:e}")
    })?;
    Ok(format!(
        "1000 instances, max 1-F = {worst_f:.1e}, max |dP| = {worst_p:.1e}"
    ))
}

fn tightness() -> Outcome {
    let cs = [0.2, 0.5, 0.9];
    let mut rng = SeededRng::new(102, 0);
    let mut worst = 0.0f64;
    let mut count = 0;
    for dim in [2, 3] {
        for &c1 in &cs {
            for &c2 in &cs {
                let chi = haar_random(dim, &mut rng);
                let spec = ProtocolSpec::two_state(chi, c1, c2).unwrap();
                let m = protocols::lambda_sup_composed(&spec).unwrap();
                let top =
                    linalg::hermitian_max_eigenvalue(&m.dagger().matmul(&m).symmetrized()).unwrap();
                worst = worst.max((top - 1.0).abs());
                count += 1;
            }
        }
    }
    ensure(worst <= 1e-10, || format!("|lambda_max - 1| = {worst:e}"))?;
    Ok(format!(
        "{count} (c1, c2, dim) settings, max |lambda_max - 1| = {worst:.1e}"
    ))
}

fn lambda_scaling() -> Outcome {
    let mut rng = SeededRng::new(103, 0);
    let (mut worst_p, mut worst_f) = (0.0f64, 0.0f64);
    for trial in 0..60 {
        let dim = 2 + trial % 3;
        let (c1, c2) = ([0.3, 0.6, 0.9][trial % 3], [0.5, 0.8, 1.0][(trial / 3) % 3]);
        for lambda in [0.25, 0.5, 0.75] {
            let (chi, st) = sample_inputs(dim, &[lambda * c1, lambda * c2], &mut rng);
            let w = random_weights(2, &mut rng);
            let spec = ProtocolSpec::two_state(chi.clone(), c1, c2).unwrap();
            let out = protocols::run_two_scaled(&spec, lambda, &w.as_state(), &st[0], &st[1])
                .map_err(|e| e.to_string())?;
            let target = rule_oracle(&amps(&chi), &[amps(&st[0]), amps(&st[1])], w.coeffs());
            let p_succ = c1 * c2 / (c1 + c2) * norm_sqr(&target);
            worst_p = worst_p.max((out.probability - lambda * p_succ).abs());
            worst_f = worst_f.max(1.0 - fidelity_oracle(&target, out.state().unwrap().matrix()));
        }
    }
    ensure(worst_p <= 1e-10, || {
        format!("|P - lambda P_succ| = {worst_p:e}")
    })?;
    ensure(worst_f <= 1e-10, || format!("fidelity error {worst_f:e}"))?;
    Ok(format!(
        "180 runs, max |dP| = {worst_p:.1e}, max 1-F = {worst_f:.1e}"
    ))
}

/// `(I ⊗ ⟨χ|)(a I⊗I + b 𝕊)` assembled from explicit factors.
fn literal_w(chi: &[C64], a: C64, b: C64) -> CMatrix {
    let n = chi.len();
    let contract = CMatrix::from_fn(n, n * n, |r, col| {
        if col / n == r {
            chi[col % n].conj()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let mix = CMatrix::from_fn(n * n, n * n, |row, col| {
        let (x, y) = (col / n, col % n);
        let mut z = C64::new(0.0, 0.0);
        if row == col {
            z += a;
        }
        if row == y * n + x {
            z += b;
        }
        z
    });
    contract.matmul(&mix)
}

fn fixed_coefficient() -> Outcome {
    let grid: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut rng = SeededRng::new(104, 0);
    let mut worst = 0.0f64;
    let mut dominated = 0;
    let mut points = 0;
    for &c1 in &grid {
        for &c2 in &grid {
            for k in 0..8 {
                let t = (k as f64 + 0.5) * PI / 16.0;
                let w = Weights::pair(
                    c(t.cos(), 0.0),
                    C64::from_polar(t.sin(), k as f64 * PI / 4.0),
                )
                .unwrap();
                let (chi, st) = sample_inputs(3, &[c1, c2], &mut rng);
                let wm = literal_w(&amps(&chi), w.alpha() / c1.sqrt(), w.beta() / c2.sqrt());
                let numeric =
                    linalg::hermitian_max_eigenvalue(&wm.dagger().matmul(&wm).symmetrized())
                        .unwrap();
                worst = worst.max((protocols::lambda_max_formula(&w, c1, c2) - numeric).abs());
                let pair = [(st[0].clone(), st[1].clone())];
                let report = protocols::compare_protocols(&chi, &w, c1, c2, &pair).unwrap();
                let (p, pt) = report.probabilities[0];
                if pt >= p - 1e-12 && report.inequality_holds {
                    dominated += 1;
                }
                points += 1;
            }
        }
    }
    let h = FRAC_1_SQRT_2;
    let spot =
        protocols::lambda_max_formula(&Weights::pair(c(h, 0.0), c(h, 0.0)).unwrap(), 0.5, 0.5);
    ensure(worst <= 1e-9, || {
        format!("formula vs eigensolver {worst:e}")
    })?;
    ensure(dominated == points, || {
        format!("dominance on {dominated}/{points} points")
    })?;
    ensure((spot - 4.0).abs() <= 1e-12, || format!("spot value {spot}"))?;
    Ok(format!(
        "{points} grid points, max |formula - numeric| = {worst:.1e}, dominance everywhere, spot = {spot}"
    ))
}

fn d_state() -> Outcome {
    let mut rng = SeededRng::new(105, 0);
    let mut worst_choi = 0.0f64;
    for dim in [2, 3] {
        for (c1, c2) in [(0.2, 0.9), (0.5, 0.5), (0.9, 0.3)] {
            let chi = haar_random(dim, &mut rng);
            let d = ProtocolSpec::multi_d(chi.clone(), &[c1, c2]).unwrap();
            let two = ProtocolSpec::two_state(chi, c1, c2).unwrap();
            let dist = protocols::choi_distance(
                &protocols::build_lambda_sup_d(&d).unwrap(),
                &protocols::build_lambda_sup(&two).unwrap(),
            )
            .unwrap();
            worst_choi = worst_choi.max(dist);
        }
    }
    let mut worst_f = 0.0f64;
    for _ in 0..20 {
        let cs: Vec<f64> = (0..3)
            .map(|_| 0.1 + 0.9 * rng.gaussian_complex().norm().min(1.0))
            .collect();
        let (chi, st) = sample_inputs(3, &cs, &mut rng);
        let w = random_weights(3, &mut rng);
        let spec = ProtocolSpec::multi_d(chi.clone(), &cs).unwrap();
        let out = protocols::run_multi(&spec, &w.as_state(), &st).map_err(|e| e.to_string())?;
        let target = rule_oracle(
            &amps(&chi),
            &st.iter().map(amps).collect::<Vec<_>>(),
            w.coeffs(),
        );
        worst_f = worst_f.max(1.0 - fidelity_oracle(&target, out.state().unwrap().matrix()));
    }
    ensure(worst_choi <= 1e-10, || {
        format!("Choi distance {worst_choi:e}")
    })?;
    ensure(worst_f <= 1e-10, || {
        format!("qutrit fidelity error {worst_f:e}")
    })?;
    Ok(format!(
        "max Choi distance = {worst_choi:.1e}, 20 qutrit triples with max 1-F = {worst_f:.1e}"
    ))
}

fn random_circuit(n: usize, depth: usize, rng: &mut SeededRng) -> Circuit {
    let mut gates = Vec::new();
    for k in 0..depth {
        let t = k % n;
        gates.push(Gate::new(haar_unitary(2, rng), vec![t]).unwrap());
        if n > 1 {
            gates.push(Gate::cx(t, (t + 1) % n).unwrap());
        }
    }
    Circuit::new(n, gates).unwrap()
}

fn basis_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| 2 * acc + b as usize)
}

/// `1/4 (1 + 1/4 ‖U|x⟩ + V|y⟩‖²)` from the circuits' unitaries.
fn encoding_oracle(u: &Circuit, v: &Circuit, x: &[bool], y: &[bool]) -> f64 {
    let ux = u.unitary().unwrap().column(basis_index(x));
    let vy = v.unitary().unwrap().column(basis_index(y));
    let sum: Vec<C64> = ux
        .entries()
        .iter()
        .zip(vy.entries())
        .map(|(a, b)| a + b)
        .collect();
    0.25 * (1.0 + 0.25 * norm_sqr(&sum))
}

fn circuit_encoding() -> Outcome {
    let mut rng = SeededRng::new(106, 0);
    let mut worst = 0.0f64;
    let mut min_p = f64::INFINITY;
    let mut worst_pipe = 0.0f64;
    for n in 1..=3 {
        for _ in 0..10 {
            let bits = |rng: &mut SeededRng| -> Vec<bool> {
                (0..n).map(|_| rng.gaussian_complex().re > 0.0).collect()
            };
            let (x, y) = (bits(&mut rng), bits(&mut rng));
            let u = random_circuit(n, 4, &mut rng);
            let v = random_circuit(n, 4, &mut rng);

            let same = run_subroutine_superposition(&u, &u, &x, &x)
                .unwrap()
                .probability;
            worst = worst.max((same - 0.5).abs());
            worst = worst.max((same - encoding_oracle(&u, &u, &x, &x)).abs());

            let mut flipped = x.clone();
            flipped[0] = !flipped[0];
            let id = Circuit::identity(n).unwrap();
            let orth = run_subroutine_superposition(&id, &id, &x, &flipped)
                .unwrap()
                .probability;
            worst = worst.max((orth - 0.375).abs());

            let out = run_subroutine_superposition(&u, &v, &x, &y).unwrap();
            worst = worst.max((out.probability - encoding_oracle(&u, &v, &x, &y)).abs());
            min_p = min_p.min(out.probability);

            let cu = controlled_circuit(&u.embedded(1, n + 1).unwrap(), 0).unwrap();
            let cv = controlled_circuit(&v.embedded(1, n + 1).unwrap(), 0).unwrap();
            let psi = cu.apply(&prepare_encoded(&x).unwrap()).unwrap().to_pure();
            let phi = cv.apply(&prepare_encoded(&y).unwrap()).unwrap().to_pure();
            let chi = QubitRegister::zeros(n + 1).unwrap().to_pure();
            let spec = ProtocolSpec::two_state(chi, 0.5, 0.5).unwrap();
            let via =
                protocols::run_two(&spec, &Weights::balanced(2).as_state(), &psi, &phi).unwrap();
            let f = fidelity_oracle(
                out.register.state().entries(),
                via.state().unwrap().matrix(),
            );
            worst_pipe = worst_pipe
                .max(1.0 - f)
                .max((via.probability - out.probability).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("probability error {worst:e}"))?;
    ensure(min_p >= 0.25 - 1e-10, || {
        format!("probability {min_p} below 1/4")
    })?;
    ensure(worst_pipe <= 1e-10, || {
        format!("pipeline mismatch {worst_pipe:e}")
    })?;
    Ok(format!(
        "30 circuit pairs, max |dP| = {worst:.1e}, min P = {min_p:.4}, pipeline mismatch {worst_pipe:.1e}"
    ))
}

/// `min_θ √(1 − |⟨û, t̂(θ)⟩|²)` by brute force over θ.
fn residual_oracle(m: &CMatrix, psi: &[C64], phi: &[C64], w: &Weights) -> f64 {
    let prod = [
        psi[0] * phi[0],
        psi[0] * phi[1],
        psi[1] * phi[0],
        psi[1] * phi[1],
    ];
    let u: Vec<C64> = (0..2)
        .map(|r| (0..4).map(|k| m[(r, k)] * prod[k]).sum())
        .collect();
    let mut best = f64::INFINITY;
    for k in 0..20_000 {
        let e = C64::from_polar(1.0, TAU * k as f64 / 20_000.0);
        let t: Vec<C64> = (0..2)
            .map(|i| w.alpha() * psi[i] + w.beta() * e * phi[i])
            .collect();
        let ov = inner(&u, &t).norm_sqr() / (norm_sqr(&u) * norm_sqr(&t));
        best = best.min((1.0 - ov).max(0.0).sqrt());
    }
    best
}

fn random_forced_form(rng: &mut SeededRng) -> CMatrix {
    let [f, g, b, cc] = [(); 4].map(|_| rng.gaussian_complex());
    let z = C64::new(0.0, 0.0);
    CMatrix::from_rows(&[vec![f + g, b, cc, z], vec![z, f, g, b + cc]]).unwrap()
}

fn no_go() -> Outcome {
    let w = Weights::balanced(2);
    let sample = nogo::canonical_sample();
    let found =
        nogo::search_min(&w, &sample, &SearchOptions::default(), 1).map_err(|e| e.to_string())?;
    ensure(found.trace.len() == 20, || "expected 20 restarts".into())?;
    ensure(found.best_residual > 0.01, || {
        format!(
            "minimized worst residual {} not above 0.01",
            found.best_residual
        )
    })?;

    let states: Vec<PureState> = sample
        .iter()
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect();
    let form = nogo::forced_form_solve(&states).map_err(|e| e.to_string())?;
    ensure(form.dimension() == 4, || {
        format!("solution space has dimension {}", form.dimension())
    })?;
    for m in form.basis() {
        let pattern = [
            (m[(0, 0)] - m[(1, 1)] - m[(1, 2)]).norm(),
            m[(0, 3)].norm(),
            m[(1, 0)].norm(),
            (m[(1, 3)] - m[(0, 1)] - m[(0, 2)]).norm(),
        ];
        let dev = pattern.iter().cloned().fold(0.0, f64::max);
        ensure(dev <= 1e-10, || {
            format!("basis element off the forced pattern by {dev:e}")
        })?;
    }

    let mut rng = SeededRng::new(107, 0);
    let mut worst_identity = 0.0f64;
    for _ in 0..100 {
        let m = random_forced_form(&mut rng);
        let (chi1, chi2) = nogo::decompose_chi(&m).map_err(|e| e.to_string())?;
        let psi = amps(&haar_random(2, &mut rng));
        let phi = amps(&haar_random(2, &mut rng));
        let prod = [
            psi[0] * phi[0],
            psi[0] * phi[1],
            psi[1] * phi[0],
            psi[1] * phi[1],
        ];
        let a = inner(chi1.entries(), &phi);
        let b = inner(chi2.entries(), &psi);
        for r in 0..2 {
            let lhs: C64 = (0..4).map(|k| m[(r, k)] * prod[k]).sum();
            worst_identity = worst_identity.max((lhs - a * psi[r] - b * phi[r]).norm());
        }
    }
    ensure(worst_identity <= 1e-10, || {
        format!("decomposition identity off by {worst_identity:e}")
    })?;

    let mut weakest = f64::INFINITY;
    for k in 0..50 {
        let m = random_forced_form(&mut rng);
        let w_k = if k % 2 == 0 {
            w.clone()
        } else {
            random_weights(2, &mut rng)
        };
        let (psi, phi, r) = nogo::find_counterexample(&m, &w_k).map_err(|e| e.to_string())?;
        let check = residual_oracle(&m, &amps(&psi), &amps(&phi), &w_k);
        ensure(check >= 1e-3 && (check - r).abs() < 1e-6, || {
            format!("counterexample residual {r} vs recomputed {check}")
        })?;
        weakest = weakest.min(check);
    }
    Ok(format!(
        "floor {:.4}, forced form dim 4, identity error {worst_identity:.1e}, 50 counterexamples (weakest {weakest:.3})",
        found.best_residual
    ))
}

fn monte_carlo() -> Outcome {
    let mut worst = 0.0f64;
    for cfg in 0..10u64 {
        let mut rng = SeededRng::new(108, cfg);
        let dim = 2 + (cfg as usize) % 3;
        let cs = [0.2 + 0.07 * cfg as f64, 0.9 - 0.05 * cfg as f64];
        let (chi, st) = sample_inputs(dim, &cs, &mut rng);
        let w = random_weights(2, &mut rng);
        let spec = ProtocolSpec::two_state(chi, cs[0], cs[1]).unwrap();
        let p = protocols::run_two(&spec, &w.as_state(), &st[0], &st[1])
            .unwrap()
            .probability;
        let s = sample_shots(p, 100_000, &mut rng).unwrap();
        let sigma = (p * (1.0 - p) / 1e5).sqrt();
        let z = (s.successes as f64 / 1e5 - p).abs() / sigma;
        ensure(z <= 3.0, || {
            format!("configuration {cfg}: {z:.2} sigma off")
        })?;
        worst = worst.max(z);
    }
    Ok(format!(
        "10 configurations at 1e5 shots, largest deviation {worst:.2} sigma"
    ))
}

fn rephase_all(states: &[PureState], rng: &mut SeededRng) -> Vec<PureState> {
    states
        .iter()
        .map(|s| s.rephased(TAU * rng.gaussian_complex().re))
        .collect()
}

fn gauge_invariance() -> Outcome {
    let mut rng = SeededRng::new(109, 0);
    let mut worst = [0.0f64; 8];
    for trial in 0..100 {
        let dim = 2 + trial % 3;
        let (chi, st) = sample_inputs(dim, &[0.3, 0.7, 0.5], &mut rng);
        let w2 = random_weights(2, &mut rng);
        let w3 = random_weights(3, &mut rng);
        let chi_b = chi.rephased(TAU * rng.gaussian_complex().re);
        let st_b = rephase_all(&st, &mut rng);
        let proj = |s: &PureState| projector(s);

        let pair = |c: &PureState, s: &[PureState]| -> Vec<CMatrix> {
            let (out, _) = rules::superpose_two(c, &s[0], &s[1], &w2).unwrap();
            let (multi, _) = rules::superpose_multi(c, s, &w3).unwrap();
            let alt = rules::superpose_alternative(c, s, &w3).unwrap();
            let spec2 = ProtocolSpec::two_state(c.clone(), 0.3, 0.7).unwrap();
            let spec3 = ProtocolSpec::multi_d(c.clone(), &[0.3, 0.7, 0.5]).unwrap();
            let fixed = ProtocolSpec::fixed_coeff(c.clone(), 0.3, 0.7, w2.clone()).unwrap();
            vec![
                rules::superpose_two_projector(&proj(c), &proj(&s[0]), &proj(&s[1]), &w2).unwrap(),
                rules::superpose_multi_projector(
                    &proj(c),
                    &s.iter().map(proj).collect::<Vec<_>>(),
                    &w3,
                )
                .unwrap(),
                projector(&out).into_matrix(),
                projector(&multi).into_matrix(),
                projector(&alt).into_matrix(),
                protocols::run_two(&spec2, &w2.as_state(), &s[0], &s[1])
                    .unwrap()
                    .state()
                    .unwrap()
                    .matrix()
                    .clone(),
                protocols::run_multi(&spec3, &w3.as_state(), s)
                    .unwrap()
                    .state()
                    .unwrap()
                    .matrix()
                    .clone(),
                protocols::run_fixed(&fixed, &s[0], &s[1])
                    .unwrap()
                    .state()
                    .unwrap()
                    .matrix()
                    .clone(),
            ]
        };
        let a = pair(&chi, &st);
        let b = pair(&chi_b, &st_b);
        for (k, (x, y)) in a.iter().zip(&b).enumerate() {
            worst[k] = worst[k].max(x.max_abs_diff(y));
        }
    }
    let overall = worst.iter().cloned().fold(0.0, f64::max);
    ensure(overall <= 1e-12, || {
        format!("per-rule deviations {worst:?}")
    })?;
    Ok(format!(
        "100 trials x 8 projector-valued results, max deviation {overall:.1e}"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "AC1 two-state protocol matches the rule and probability formula",
            protocol_correctness,
        ),
        ("AC2 composed operator has unit top eigenvalue", tightness),
        (
            "AC3 probability scales linearly with overlap factor",
            lambda_scaling,
        ),
        (
            "AC4 fixed-coefficient eigenvalue formula and dominance",
            fixed_coefficient,
        ),
        ("AC5 d-state protocol", d_state),
        ("AC6 circuit encoding", circuit_encoding),
        ("AC7 no-go evidence", no_go),
        ("AC8 Monte Carlo shot frequencies", monte_carlo),
        ("AC9 gauge invariance", gauge_invariance),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
