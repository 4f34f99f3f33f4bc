//! Qubit protocol toolbox: Bell-measurement teleportation, two-pair
//! entanglement purification with a gate/measurement noise model, the
//! three-qubit repetition code, quantum Hamming-bound arithmetic, and a
//! classical watched-repetition Monte Carlo benchmark.

use num_traits::{FromPrimitive, Num};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::entanglement::{antisymmetric_weight, werner_project, werner_qubit};
use crate::error::{QopError, Result};
use crate::qstate::{
    hermitize, partial_trace, CMatrix, CVector, DensityOp, HilbertSpec, Ket, OpKind, Operator, C64,
};
use crate::qubit::{bell, bloch_ket, identity2, sigma_x, sigma_y, sigma_z, BellKind};

// ---------------------------------------------------------------------------
// Closed-form purification map (generic so exact-rational tests can run it)
// ---------------------------------------------------------------------------

/// One round of two-pair purification on isotropic pairs of fidelity `f`:
/// returns (f′, p_success) with
///
/// f′ = (f² + (1−f)²/9) / (f² + ⅔f(1−f) + 5(1−f)²/9),
///
/// the denominator being the success probability. Generic over any exact or
/// floating scalar that supports field arithmetic.
pub fn purify_map<T>(f: T) -> (T, T)
where
    T: Clone + Num + FromPrimitive,
{
    let one = T::one();
    let two = T::from_u8(2).expect("small integer");
    let three = T::from_u8(3).expect("small integer");
    let five = T::from_u8(5).expect("small integer");
    let nine = T::from_u8(9).expect("small integer");
    let g = one - f.clone();
    let f2 = f.clone() * f.clone();
    let g2 = g.clone() * g.clone();
    let numerator = f2.clone() + g2.clone() / nine.clone();
    let p_success = f2 + two * f * g / three + five * g2 / nine;
    (numerator / p_success.clone(), p_success)
}

/// `purify_map` specialized to `f64`.
pub fn purify_map_f64(f: f64) -> (f64, f64) {
    purify_map(f)
}

// ---------------------------------------------------------------------------
// Teleportation
// ---------------------------------------------------------------------------

/// The local correction Bob applies for each Bell-measurement outcome when
/// the shared resource is the singlet: identity for the singlet outcome,
/// σ_z / σ_x / σ_z·σ_x for the three triplet outcomes.
pub fn correction_for(kind: BellKind) -> CMatrix {
    match kind {
        BellKind::PsiMinus => identity2(),
        BellKind::PsiPlus => sigma_z(),
        BellKind::PhiMinus => sigma_x(),
        BellKind::PhiPlus => sigma_z() * sigma_x(),
    }
}

/// One Bell-measurement branch of a teleportation run.
#[derive(Clone, Debug)]
pub struct TeleportOutcome {
    pub kind: BellKind,
    pub probability: f64,
    /// Bob's conditional state before his correction.
    pub bob_raw: DensityOp,
    /// Bob's conditional state after the standard correction.
    pub bob_corrected: DensityOp,
    /// Overlap of the corrected state with the input.
    pub fidelity: f64,
}

/// Full record of a teleportation over all four measurement branches.
#[derive(Clone, Debug)]
pub struct TeleportRecord {
    pub outcomes: Vec<TeleportOutcome>,
    /// Σₖ pₖ·Fₖ for this particular input state.
    pub average_fidelity: f64,
}

/// Teleports a single-qubit pure state through a two-qubit resource state
/// (qubit 2 is Alice's half, qubit 3 is Bob's), branching over all four Bell
/// outcomes of Alice's measurement on qubits 1–2.
pub fn teleport(input: &Ket, resource: &DensityOp) -> Result<TeleportRecord> {
    if input.spec().total_dim() != 2 {
        return Err(QopError::DimMismatch("teleportation input must be one qubit".into()));
    }
    if resource.spec().dims() != [2, 2] {
        return Err(QopError::DimMismatch("teleportation resource must be a qubit pair".into()));
    }
    let joint = DensityOp::tensor(&[&input.to_density(), resource])?;
    let spec3 = joint.spec().clone();
    let qubit_spec = input.spec().clone();

    let mut outcomes = Vec::with_capacity(4);
    let mut average_fidelity = 0.0;
    for kind in BellKind::ALL {
        let b = bell(kind)?;
        let proj4 = b.amp() * b.amp().adjoint();
        let proj = Operator::embed(&spec3, &[0, 1], &proj4, OpKind::General)?;
        let selected = proj.mat() * joint.mat() * proj.mat();
        let probability = selected.trace().re;
        let (bob_raw, bob_corrected, fidelity) = if probability > 1e-15 {
            let normalized = DensityOp::trusted(spec3.clone(), hermitize(&selected.scale(1.0 / probability)))?;
            let bob_raw = partial_trace(&normalized, &[2])?;
            let corr = Operator::unitary(qubit_spec.clone(), correction_for(kind))?;
            let bob_corrected = corr.conjugate(&bob_raw)?;
            let fidelity = bob_corrected.expectation_with(input)?;
            (bob_raw, bob_corrected, fidelity)
        } else {
            // Degenerate branch: report the flat state with zero weight.
            let flat = DensityOp::trusted(qubit_spec.clone(), CMatrix::identity(2, 2).scale(0.5))?;
            (flat.clone(), flat, 0.0)
        };
        average_fidelity += probability * fidelity;
        outcomes.push(TeleportOutcome { kind, probability, bob_raw, bob_corrected, fidelity });
    }
    Ok(TeleportRecord { outcomes, average_fidelity })
}

/// The six Bloch-axis eigenstates (±x, ±y, ±z) — a projective 2-design, so
/// averaging any fidelity over them reproduces the Haar average.
pub fn pauli_eigenstates() -> Result<Vec<Ket>> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let angles = [
        (0.0, 0.0),
        (PI, 0.0),
        (FRAC_PI_2, 0.0),
        (FRAC_PI_2, PI),
        (FRAC_PI_2, FRAC_PI_2),
        (FRAC_PI_2, 3.0 * FRAC_PI_2),
    ];
    angles.iter().map(|&(theta, phi)| bloch_ket(theta, phi)).collect()
}

/// Input-averaged teleportation fidelity of a resource state, computed
/// exactly by averaging over the six Bloch-axis eigenstates. For an
/// isotropic resource of fidelity F this equals (2F + 1)/3.
pub fn average_teleport_fidelity(resource: &DensityOp) -> Result<f64> {
    let states = pauli_eigenstates()?;
    let mut acc = 0.0;
    for psi in &states {
        acc += teleport(psi, resource)?.average_fidelity;
    }
    Ok(acc / states.len() as f64)
}

// ---------------------------------------------------------------------------
// Two-pair purification (simulated on the four-qubit space)
// ---------------------------------------------------------------------------

/// Imperfection model for the purification circuit: `p_gate` is the weight
/// of a full two-qubit depolarization after each of the two CNOTs (applied
/// to the qubit pair the gate touched); `p_meas` is the probability that a
/// measured qubit's classical readout is reported flipped.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PurifyNoise {
    pub p_gate: f64,
    pub p_meas: f64,
}

impl PurifyNoise {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_gate) || !(0.0..=0.5).contains(&self.p_meas) {
            return Err(QopError::Domain(format!(
                "noise out of range: p_gate = {}, p_meas = {}",
                self.p_gate, self.p_meas
            )));
        }
        Ok(())
    }
}

/// Outcome of one simulated purification round.
#[derive(Clone, Debug)]
pub struct PurifyStepResult {
    /// Isotropic fidelity of the twirled survivor pair.
    pub f_out: f64,
    /// Probability that the two readouts agree and the pair is kept.
    pub p_success: f64,
    /// The kept pair before twirling.
    pub survivor: DensityOp,
    /// The kept pair after the exact isotropic twirl.
    pub survivor_twirled: DensityOp,
}

/// Full two-qubit depolarization with weight `p` on the `targets` pair:
/// ρ → (1−p)ρ + p·(flat pair ⊗ untouched rest), realized as the uniform
/// average over the 16 embedded two-qubit Pauli conjugations.
fn depolarize_pair(rho: &DensityOp, targets: [usize; 2], p: f64) -> Result<DensityOp> {
    if p == 0.0 {
        return Ok(rho.clone());
    }
    let paulis = [identity2(), sigma_x(), sigma_y(), sigma_z()];
    let d = rho.spec().total_dim();
    let mut acc = CMatrix::zeros(d, d);
    for pa in &paulis {
        for pb in &paulis {
            let sub = pa.kronecker(pb);
            let op = Operator::embed(rho.spec(), &targets, &sub, OpKind::Unitary)?;
            acc += op.mat() * rho.mat() * op.mat().adjoint();
        }
    }
    let mat = rho.mat().scale(1.0 - p) + acc.scale(p / 16.0);
    DensityOp::trusted(rho.spec().clone(), hermitize(&mat))
}

/// Projector onto computational outcome `bit` of qubit `target`.
fn z_projector(spec: &HilbertSpec, target: usize, bit: usize) -> Result<Operator> {
    let mut sub = CMatrix::zeros(2, 2);
    sub[(bit, bit)] = C64::new(1.0, 0.0);
    Operator::embed(spec, &[target], &sub, OpKind::General)
}

/// One purification round simulated on the full (A₁B₁A₂B₂) four-qubit
/// space: unilateral σ_y rotations, bilateral CNOTs (pair 1 controls,
/// pair 2 targets), z-measurement of pair 2 keeping equal readouts, σ_y
/// undone on the survivor, exact isotropic twirl at the end.
pub fn purify_step_simulated(pair: &DensityOp, noise: &PurifyNoise) -> Result<PurifyStepResult> {
    noise.validate()?;
    if pair.spec().dims() != [2, 2] {
        return Err(QopError::DimMismatch("purification input must be a qubit pair".into()));
    }
    // Subsystem order: [A1, B1, A2, B2].
    let joint = DensityOp::tensor(&[pair, pair])?;
    let spec = joint.spec().clone();

    // Unilateral σ_y on Alice's half of each pair.
    let rot = Operator::embed(&spec, &[0], &sigma_y(), OpKind::Unitary)?
        .compose(&Operator::embed(&spec, &[2], &sigma_y(), OpKind::Unitary)?)?;
    let mut rho = rot.conjugate(&joint)?;

    // Alice's CNOT (control A1, target A2), then her gate noise.
    let cnot_a = crate::qubit::cnot(&spec, 0, 2)?;
    rho = cnot_a.conjugate(&rho)?;
    rho = depolarize_pair(&rho, [0, 2], noise.p_gate)?;

    // Bob's CNOT (control B1, target B2), then his gate noise.
    let cnot_b = crate::qubit::cnot(&spec, 1, 3)?;
    rho = cnot_b.conjugate(&rho)?;
    rho = depolarize_pair(&rho, [1, 3], noise.p_gate)?;

    // Measure A2 and B2; keep the branches whose *reported* readouts agree.
    let pm = noise.p_meas;
    let w_equal = (1.0 - pm) * (1.0 - pm) + pm * pm;
    let w_mixed = 2.0 * pm * (1.0 - pm);
    let d = spec.total_dim();
    let mut kept = CMatrix::zeros(d, d);
    for a in 0..2usize {
        for b in 0..2usize {
            let pa = z_projector(&spec, 2, a)?;
            let pb = z_projector(&spec, 3, b)?;
            let proj = pa.compose(&pb)?;
            let branch = proj.mat() * rho.mat() * proj.mat().adjoint();
            let weight = if a == b { w_equal } else { w_mixed };
            kept += branch.scale(weight);
        }
    }
    let p_success = kept.trace().re;
    if p_success < 1e-14 {
        return Err(QopError::Numerics("purification branch has vanishing probability".into()));
    }
    let kept = DensityOp::trusted(spec.clone(), hermitize(&kept.scale(1.0 / p_success)))?;
    let survivor = partial_trace(&kept, &[0, 1])?;

    // Undo the unilateral rotation on the surviving pair.
    let undo = Operator::embed(survivor.spec(), &[0], &sigma_y(), OpKind::Unitary)?;
    let survivor = undo.dagger().conjugate(&survivor)?;

    let survivor_twirled = werner_project(&survivor)?;
    let f_out = antisymmetric_weight(&survivor_twirled)?;
    Ok(PurifyStepResult { f_out, p_success, survivor, survivor_twirled })
}

/// The effective one-parameter purification map under a given noise model:
/// isotropic input of fidelity `f` → (f′, p_success).
pub fn purify_map_noisy(f: f64, noise: &PurifyNoise) -> Result<(f64, f64)> {
    if noise.p_gate == 0.0 && noise.p_meas == 0.0 {
        return Ok(purify_map_f64(f));
    }
    let step = purify_step_simulated(&werner_qubit(f)?, noise)?;
    Ok((step.f_out, step.p_success))
}

/// Iterates the simulated round `rounds` times from an isotropic pair of
/// fidelity `f0`, twirling between rounds; returns each round's result.
pub fn purification_curve(
    f0: f64,
    rounds: usize,
    noise: &PurifyNoise,
) -> Result<Vec<PurifyStepResult>> {
    let mut pair = werner_qubit(f0)?;
    let mut out = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let step = purify_step_simulated(&pair, noise)?;
        pair = step.survivor_twirled.clone();
        out.push(step);
    }
    Ok(out)
}

fn bisect_root(mut lo: f64, mut hi: f64, tol: f64, g: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut glo = g(lo)?;
    let ghi = g(hi)?;
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() {
        return Err(QopError::Numerics("bisection bracket does not change sign".into()));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fixed points of the purification map on [½, 1]: the unstable lower
/// threshold and the stable upper limit. Without noise these are exactly
/// (½, 1); with noise both move inward and are located by scanning for sign
/// changes of f′(f) − f and bisecting to `tol`.
pub fn purify_fixed_points(noise: &PurifyNoise, tol: f64) -> Result<(f64, f64)> {
    noise.validate()?;
    let g = |f: f64| -> Result<f64> { Ok(purify_map_noisy(f, noise)?.0 - f) };
    if noise.p_gate == 0.0 && noise.p_meas == 0.0 {
        return Ok((0.5, 1.0));
    }
    let n_grid = 200;
    let lo_edge = 0.5;
    let hi_edge = 1.0;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev_f = lo_edge;
    let mut prev_g = g(prev_f)?;
    for i in 1..=n_grid {
        let f = lo_edge + (hi_edge - lo_edge) * i as f64 / n_grid as f64;
        let gf = g(f)?;
        if prev_g == 0.0 {
            roots.push(prev_f);
        } else if prev_g.signum() != gf.signum() {
            roots.push(bisect_root(prev_f, f, tol, &g)?);
        }
        prev_f = f;
        prev_g = gf;
    }
    if prev_g == 0.0 {
        roots.push(prev_f);
    }
    if roots.len() < 2 {
        return Err(QopError::Numerics(format!(
            "purification map has no interior fixed-point pair at this noise level ({} roots found)",
            roots.len()
        )));
    }
    Ok((roots[0], *roots.last().unwrap()))
}

// ---------------------------------------------------------------------------
// Three-qubit repetition code
// ---------------------------------------------------------------------------

/// Encodes α|0⟩ + β|1⟩ into the three-qubit repetition code
/// α|000⟩ + β|111⟩.
pub fn qec3_encode(logical: &Ket) -> Result<Ket> {
    if logical.spec().total_dim() != 2 {
        return Err(QopError::DimMismatch("logical input must be one qubit".into()));
    }
    let spec = HilbertSpec::qubits(3)?;
    let mut amp = CVector::zeros(8);
    amp[0] = logical.amp()[0];
    amp[7] = logical.amp()[1];
    Ket::new(spec, amp)
}

/// One branch of a syndrome measurement: which subspace fired, with what
/// probability, and the state after the conditional bit-flip recovery.
#[derive(Clone, Debug)]
pub struct SyndromeBranch {
    /// 0 = no error flagged; 1–3 = flip detected on that qubit (1-based).
    pub syndrome: usize,
    pub probability: f64,
    pub state: Ket,
}

/// Measures the code's four syndrome subspaces — span{|000⟩,|111⟩} and the
/// three single-flip images — and applies the matching σ_x recovery in each
/// branch. Returns every branch with non-negligible probability.
pub fn qec3_recover(state: &Ket) -> Result<Vec<SyndromeBranch>> {
    if state.spec().dims() != [2, 2, 2] {
        return Err(QopError::DimMismatch("recovery expects three qubits".into()));
    }
    // Basis-index pairs for each syndrome subspace (MSB-first labels).
    let subspaces: [(usize, [usize; 2]); 4] =
        [(0, [0b000, 0b111]), (1, [0b100, 0b011]), (2, [0b010, 0b101]), (3, [0b001, 0b110])];
    let mut branches = Vec::new();
    for (syndrome, idx) in subspaces {
        let mut amp = CVector::zeros(8);
        let mut weight = 0.0;
        for &i in &idx {
            amp[i] = state.amp()[i];
            weight += state.amp()[i].norm_sqr();
        }
        if weight < 1e-15 {
            continue;
        }
        let spec = state.spec().clone();
        let projected = Ket::normalized(spec.clone(), amp)?;
        let recovered = if syndrome == 0 {
            projected
        } else {
            let fix = Operator::embed(&spec, &[syndrome - 1], &sigma_x(), OpKind::Unitary)?;
            fix.apply(&projected)?
        };
        branches.push(SyndromeBranch { syndrome, probability: weight, state: recovered });
    }
    Ok(branches)
}

/// Deterministic recovery: requires a single syndrome branch to carry all
/// the weight (as after an exact zero- or one-qubit flip).
pub fn qec3_correct(state: &Ket) -> Result<Ket> {
    let branches = qec3_recover(state)?;
    let top = branches
        .iter()
        .max_by(|a, b| a.probability.partial_cmp(&b.probability).unwrap())
        .ok_or_else(|| QopError::Numerics("state has no weight in any syndrome subspace".into()))?;
    if top.probability < 1.0 - 1e-12 {
        return Err(QopError::Domain(format!(
            "syndrome is not deterministic (top branch probability {:.6})",
            top.probability
        )));
    }
    Ok(top.state.clone())
}

// ---------------------------------------------------------------------------
// Quantum Hamming bound
// ---------------------------------------------------------------------------

fn binomial_u128(n: u32, l: u32) -> Option<u128> {
    if l > n {
        return Some(0);
    }
    let l = l.min(n - l);
    let mut acc: u128 = 1;
    for i in 0..l {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

/// Whether n physical qubits can hold k logical qubits with all t-qubit
/// error patterns distinguishable: 2^k · Σ_{l≤t} 3^l · C(n,l) ≤ 2^n.
pub fn quantum_hamming_bound_holds(n: u32, k: u32, t: u32) -> Result<bool> {
    if n >= 120 || k >= 120 {
        return Err(QopError::Domain("bound arithmetic limited to n, k < 120".into()));
    }
    let mut syndromes: u128 = 0;
    for l in 0..=t.min(n) {
        let pow3 = 3u128
            .checked_pow(l)
            .ok_or_else(|| QopError::Numerics("3^l overflow".into()))?;
        let c = binomial_u128(n, l)
            .ok_or_else(|| QopError::Numerics("binomial overflow".into()))?;
        syndromes = syndromes
            .checked_add(pow3.checked_mul(c).ok_or_else(|| QopError::Numerics("term overflow".into()))?)
            .ok_or_else(|| QopError::Numerics("sum overflow".into()))?;
    }
    let lhs = (1u128 << k)
        .checked_mul(syndromes)
        .ok_or_else(|| QopError::Numerics("lhs overflow".into()))?;
    Ok(lhs <= (1u128 << n))
}

/// Smallest n satisfying the quantum Hamming bound for (k, t). Both counts
/// must be at least 1.
pub fn quantum_hamming_min_n(k: u32, t: u32) -> Result<u32> {
    if k == 0 || t == 0 {
        return Err(QopError::Domain("need at least one logical qubit and one correctable error".into()));
    }
    for n in 1..120 {
        if quantum_hamming_bound_holds(n, k, t)? {
            return Ok(n);
        }
    }
    Err(QopError::Domain(format!("no n < 120 satisfies the bound for k = {k}, t = {t}")))
}

// ---------------------------------------------------------------------------
// Classical watched-repetition benchmark
// ---------------------------------------------------------------------------

/// Result of the classical three-bit repetition Monte Carlo.
#[derive(Clone, Copy, Debug)]
pub struct RepetitionMcResult {
    /// Fraction of trials whose majority still equals the initial value.
    pub survival: f64,
    /// Binomial standard error of `survival`.
    pub std_err: f64,
    /// Exact closed form: the majority value flips per interval with
    /// probability r = 3q² − 2q³ (q = 1 − e^(−γt/N)), so the survival
    /// probability after N intervals is (1 + (1 − 2r)^N)/2.
    pub exact: f64,
    /// Small-flip lower bound (1 − 3(γt/N)²)^N.
    pub bound: f64,
}

/// Simulates three classical bits decaying with total exposure `gamma_t`,
/// majority-corrected at each of `n_intervals` equally spaced checks.
pub fn classical_repetition_mc(
    gamma_t: f64,
    n_intervals: usize,
    trials: usize,
    seed: u64,
) -> Result<RepetitionMcResult> {
    if gamma_t < 0.0 || n_intervals == 0 || trials == 0 {
        return Err(QopError::Domain("need gamma_t ≥ 0, n_intervals ≥ 1, trials ≥ 1".into()));
    }
    let q = 1.0 - (-gamma_t / n_intervals as f64).exp();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut survived = 0usize;
    for _ in 0..trials {
        // Bits start aligned with the stored value (true) and are reset to
        // the majority after every interval.
        let mut value = true;
        for _ in 0..n_intervals {
            let mut ones = 0u8;
            for _ in 0..3 {
                let bit = if rng.gen::<f64>() < q { !value } else { value };
                if bit {
                    ones += 1;
                }
            }
            value = ones >= 2;
        }
        if value {
            survived += 1;
        }
    }
    let survival = survived as f64 / trials as f64;
    let std_err = (survival * (1.0 - survival) / trials as f64).sqrt();
    let r = 3.0 * q * q - 2.0 * q * q * q;
    let exact = 0.5 * (1.0 + (1.0 - 2.0 * r).powi(n_intervals as i32));
    let x = gamma_t / n_intervals as f64;
    let bound = (1.0 - 3.0 * x * x).powi(n_intervals as i32);
    Ok(RepetitionMcResult { survival, std_err, exact, bound })
}
