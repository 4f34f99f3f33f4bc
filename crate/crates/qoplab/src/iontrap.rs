//! Trapped-ion gate physics: carrier and sideband pulses on three-level
//! ions sharing a quantized center-of-mass phonon mode, the three-pulse
//! two-ion conditional phase gate, a full-Hamiltonian error check for the
//! resolved-sideband approximation, and the pushed-ion conditional phase
//! for microtrap arrays.
//!
//! Internal levels are indexed g = 0, r₀ = 1 (the computational excited
//! state), r₁ = 2 (auxiliary). The phonon mode sits last in the subsystem
//! list. Pulse unitaries are built by exact exponentiation of their
//! generators, so they are deterministic; the time-dependent integration in
//! [`full_hamiltonian_check`] is the independent route that quantifies what
//! those exponentials leave out.

use crate::error::{QopError, Result};
use crate::ode::{integrate_adaptive, AdaptiveOpts};
use crate::pulse::PulseProfile;
use crate::qstate::{
    evolution_operator, hermitize, CMatrix, CVector, HilbertSpec, Ket, OpKind, Operator, C64,
};

/// Internal level labels.
pub const LEVEL_G: usize = 0;
pub const LEVEL_R0: usize = 1;
pub const LEVEL_R1: usize = 2;
const INTERNAL_DIM: usize = 3;

pub use crate::consts::{COULOMB_E2, HBAR};

/// Annihilation operator on a `dim`-level truncated oscillator.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// |to⟩⟨from| on the three-level internal space.
fn level_flip(to: usize, from: usize) -> CMatrix {
    let mut m = CMatrix::zeros(INTERNAL_DIM, INTERNAL_DIM);
    m[(to, from)] = C64::new(1.0, 0.0);
    m
}

/// Frequencies of the two collective modes of a two-ion linear trap, in
/// units of the trap frequency ν: center of mass at ν, stretch at √3·ν.
pub fn two_ion_mode_frequencies(nu: f64) -> (f64, f64) {
    (nu, 3.0_f64.sqrt() * nu)
}

/// Free motional Hamiltonian ν·a†a ⊗ 1 + √3ν·1 ⊗ b†b of the two collective
/// modes (each truncated to the given dimension). The gate analysis below
/// uses only the center-of-mass mode, but the two-mode generator is
/// constructible for completeness.
pub fn two_ion_motional_hamiltonian(nu: f64, dim_cm: usize, dim_stretch: usize) -> Result<Operator> {
    let spec = HilbertSpec::new(&[dim_cm, dim_stretch])?;
    let a = annihilation(dim_cm);
    let b = annihilation(dim_stretch);
    let num_cm = a.adjoint() * &a;
    let num_st = b.adjoint() * &b;
    let (f_cm, f_st) = two_ion_mode_frequencies(nu);
    let mat = num_cm.kronecker(&CMatrix::identity(dim_stretch, dim_stretch)).scale(f_cm)
        + CMatrix::identity(dim_cm, dim_cm).kronecker(&num_st).scale(f_st);
    Operator::hermitian(spec, mat)
}

/// A register of three-level ions sharing one truncated center-of-mass
/// phonon mode (the last subsystem).
#[derive(Clone, Debug)]
pub struct IonRegister {
    n_ions: usize,
    phonon_dim: usize,
    spec: HilbertSpec,
}

impl IonRegister {
    /// `phonon_dim` ≥ 4 so that leakage against the truncation edge is
    /// observable before it corrupts the gate subspace (n ≤ 1).
    pub fn new(n_ions: usize, phonon_dim: usize) -> Result<Self> {
        if n_ions == 0 {
            return Err(QopError::Domain("register needs at least one ion".into()));
        }
        if phonon_dim < 4 {
            return Err(QopError::Domain("phonon truncation must be at least 4".into()));
        }
        let mut dims = vec![INTERNAL_DIM; n_ions];
        dims.push(phonon_dim);
        Ok(Self { n_ions, phonon_dim, spec: HilbertSpec::new(&dims)? })
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn phonon_dim(&self) -> usize {
        self.phonon_dim
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    fn phonon_slot(&self) -> usize {
        self.n_ions
    }

    fn check_ion(&self, j: usize) -> Result<()> {
        if j >= self.n_ions {
            return Err(QopError::BadSubsystem(format!(
                "ion index {j} out of range (register holds {})",
                self.n_ions
            )));
        }
        Ok(())
    }

    /// Basis ket |levels…⟩|phonon⟩.
    pub fn basis_ket(&self, levels: &[usize], phonon: usize) -> Result<Ket> {
        if levels.len() != self.n_ions {
            return Err(QopError::DimMismatch(format!(
                "{} level labels for {} ions",
                levels.len(),
                self.n_ions
            )));
        }
        if levels.iter().any(|&l| l >= INTERNAL_DIM) || phonon >= self.phonon_dim {
            return Err(QopError::BadSubsystem("basis label out of range".into()));
        }
        let mut labels = levels.to_vec();
        labels.push(phonon);
        Ket::basis(self.spec.clone(), &labels)
    }

    /// Resonant kπ carrier rotation on ion `j`:
    /// exp[−ik(π/2)(|r₀⟩⟨g|e^(−iφ) + h.c.)]. With φ = 0 this sends
    /// |g⟩ → cos(kπ/2)|g⟩ − i·sin(kπ/2)|r₀⟩.
    pub fn carrier_rotation(&self, j: usize, k: f64, phi: f64) -> Result<Operator> {
        self.check_ion(j)?;
        let raise = level_flip(LEVEL_R0, LEVEL_G) * C64::from_polar(1.0, -phi);
        let gen = &raise + raise.adjoint();
        let h = Operator::embed(&self.spec, &[j], &gen, OpKind::Hermitian)?;
        evolution_operator(&h, k * std::f64::consts::FRAC_PI_2)
    }

    /// kπ pulse on the lower motional sideband of ion `j`, driving the
    /// g ↔ r_q transition (q selects the excited level by polarization):
    /// exp[−ik(π/2)(|r_q⟩⟨g|·a·e^(−iφ) + h.c.)]. Keeps |g⟩|0⟩ unaltered and
    /// rotates the {|g⟩|1⟩, |r_q⟩|0⟩} block by kπ/2.
    pub fn sideband_pulse(&self, j: usize, k: f64, q: usize, phi: f64) -> Result<Operator> {
        self.check_ion(j)?;
        if q > 1 {
            return Err(QopError::Domain("polarization selector q must be 0 or 1".into()));
        }
        let excited = if q == 0 { LEVEL_R0 } else { LEVEL_R1 };
        let flip = level_flip(excited, LEVEL_G);
        let raise = flip.kronecker(&annihilation(self.phonon_dim)) * C64::from_polar(1.0, -phi);
        let gen = &raise + raise.adjoint();
        let h = Operator::embed(&self.spec, &[j, self.phonon_slot()], &gen, OpKind::Hermitian)?;
        evolution_operator(&h, k * std::f64::consts::FRAC_PI_2)
    }

    /// Physical duration of a kπ sideband pulse at Rabi frequency Ω and
    /// Lamb–Dicke parameter η: the coupling is reduced to ηΩ/√N because the
    /// center-of-mass mode carries the whole register's mass.
    pub fn sideband_duration(&self, k: f64, omega: f64, eta: f64) -> Result<f64> {
        if omega <= 0.0 || eta <= 0.0 {
            return Err(QopError::Domain("Ω and η must be positive".into()));
        }
        Ok(k * std::f64::consts::PI * (self.n_ions as f64).sqrt() / (omega * eta))
    }

    /// Three-pulse conditional phase gate between ions `m` and `n`:
    /// a π sideband pulse on m (q = 0), a 2π sideband pulse on n through
    /// the auxiliary level (q = 1), and the π pulse on m again. Flips the
    /// sign of |r₀⟩_m|r₀⟩_n only, and returns the phonon mode to wherever
    /// it started (the bus is borrowed, not consumed).
    pub fn cz_gate(&self, m: usize, n: usize) -> Result<Operator> {
        if m == n {
            return Err(QopError::BadSubsystem("gate needs two distinct ions".into()));
        }
        let u_m = self.sideband_pulse(m, 1.0, 0, 0.0)?;
        let u_n = self.sideband_pulse(n, 2.0, 1, 0.0)?;
        u_m.compose(&u_n)?.compose(&u_m)
    }

    /// Applies the conditional phase gate to a state, enforcing the
    /// phonon-vacuum precondition and re-checking truncation leakage.
    pub fn cz_apply(&self, m: usize, n: usize, psi: &Ket) -> Result<Ket> {
        let vacuum_weight: f64 = self.phonon_population(psi, 0);
        if (vacuum_weight - 1.0).abs() > 1e-9 {
            return Err(QopError::Domain(format!(
                "gate precondition: phonon mode must be in vacuum (found population {vacuum_weight:.6})"
            )));
        }
        let out = self.cz_gate(m, n)?.apply(psi)?;
        let leak = self.phonon_population(&out, self.phonon_dim - 1);
        if leak > 1e-8 {
            return Err(QopError::Numerics(format!(
                "phonon truncation leakage {leak:.2e} above threshold"
            )));
        }
        Ok(out)
    }

    /// Population of phonon level `n` (summed over internal states).
    /// The phonon mode is the least significant subsystem, so its label is
    /// the flattened index modulo the truncation dimension.
    pub fn phonon_population(&self, psi: &Ket, n: usize) -> f64 {
        let mut acc = 0.0;
        for idx in 0..self.spec.total_dim() {
            if idx % self.phonon_dim == n {
                acc += psi.amp()[idx].norm_sqr();
            }
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Full-Hamiltonian validation of the resolved-sideband approximation
// ---------------------------------------------------------------------------

/// Laser geometry: selects the carrier/sideband weights of the first-order
/// position expansion. A travelling wave keeps the full carrier (weight 1,
/// sideband weight iη); a standing wave at phase φ₁ has carrier sin(φ₁) and
/// sidebands η·cos(φ₁) — at a node (φ₁ = 0) the carrier vanishes, which is
/// why that configuration is the default for gate operation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WaveKind {
    Travelling,
    StandingAtNode,
    Standing { phi1: f64 },
}

impl WaveKind {
    /// (carrier weight α₀, sideband weight α_c).
    fn coefficients(&self, eta: f64) -> (f64, C64) {
        match self {
            WaveKind::Travelling => (1.0, C64::new(0.0, eta)),
            WaveKind::StandingAtNode => (0.0, C64::new(eta, 0.0)),
            WaveKind::Standing { phi1 } => (phi1.sin(), C64::new(eta * phi1.cos(), 0.0)),
        }
    }
}

/// Parameters for [`full_hamiltonian_check`]. `eta` is the effective
/// Lamb–Dicke parameter actually coupling this ion to the mode (for an
/// N-ion register divide the bare η by √N first).
#[derive(Clone, Copy, Debug)]
pub struct FullCheckParams {
    pub omega_over_nu: f64,
    pub eta: f64,
    /// Pulse area multiplier (k = 1 is a π pulse).
    pub k: f64,
    pub wave: WaveKind,
    pub phonon_dim: usize,
    pub rtol: f64,
}

impl FullCheckParams {
    pub fn new(omega_over_nu: f64, eta: f64) -> Self {
        Self {
            omega_over_nu,
            eta,
            k: 1.0,
            wave: WaveKind::StandingAtNode,
            phonon_dim: 12,
            rtol: 1e-9,
        }
    }
}

/// What the full time-dependent integration found relative to the ideal
/// exponentiated sideband pulse.
#[derive(Clone, Copy, Debug)]
pub struct GateErrorReport {
    /// 1 − |tr(P·U_ideal†·U_full·P)|/3 over the gate block
    /// {|g,0⟩, |g,1⟩, |r,0⟩}: insensitive to global phase and quadratic in
    /// the residual couplings.
    pub infidelity: f64,
    /// Worst trace-norm distance √(1 − |⟨ψ_ideal|ψ_full⟩|²) over the three
    /// block basis states: linear in the residual amplitudes.
    pub trace_distance: f64,
    /// Largest top-phonon-level population reached, a truncation monitor.
    pub leakage_top: f64,
    /// (ηΩ/ν)², the validity ratio the approximation needs to be small.
    pub validity_ratio: f64,
    /// Pulse duration in units of 1/ν.
    pub nu_t: f64,
    /// Whether νt is an integer number of 2π periods (first-order residual
    /// terms then average away; non-commensurate pulses carry an extra
    /// linear-order error).
    pub commensurate: bool,
}

/// Integrates the lowest-order Lamb–Dicke Hamiltonian — carrier and *both*
/// sidebands retained, in the interaction picture of the lower-sideband
/// tuning — over one kπ pulse, and compares against the ideal exponentiated
/// pulse on the gate block. Works on a two-level (g, r_q) ⊗ phonon space;
/// the remaining internal level is dark for a fixed polarization.
pub fn full_hamiltonian_check(p: &FullCheckParams) -> Result<GateErrorReport> {
    if p.omega_over_nu <= 0.0 {
        return Err(QopError::Domain(
            "need Ω > 0 (the Ω → 0 limit is the ideal pulse itself)".into(),
        ));
    }
    if p.eta <= 0.0 || p.eta >= 1.0 {
        return Err(QopError::Domain("Lamb–Dicke parameter must sit in (0, 1)".into()));
    }
    if p.phonon_dim < 6 {
        return Err(QopError::Domain("full check needs phonon truncation ≥ 6".into()));
    }
    let (alpha0, alpha_c) = p.wave.coefficients(p.eta);
    let coupling = alpha_c.norm();
    if coupling == 0.0 {
        return Err(QopError::Domain("sideband coupling vanishes for this geometry".into()));
    }

    // Units: ν = 1. Time for a kπ pulse at effective Rabi frequency |α_c|Ω.
    let omega = p.omega_over_nu;
    let t_pulse = p.k * std::f64::consts::PI / (coupling * omega);
    let periods = t_pulse / (2.0 * std::f64::consts::PI);
    let commensurate = (periods - periods.round()).abs() < 1e-9;

    let d_ph = p.phonon_dim;
    let dim = 2 * d_ph;
    let a = annihilation(d_ph);
    let mut s_plus = CMatrix::zeros(2, 2);
    s_plus[(1, 0)] = C64::new(1.0, 0.0);
    let id_ph = CMatrix::identity(d_ph, d_ph);

    let carrier_up = s_plus.kronecker(&id_ph);
    let carrier_dn = carrier_up.adjoint();
    let jc_up = s_plus.kronecker(&a);
    let ajc_up = s_plus.kronecker(&a.adjoint());
    let ajc_dn = ajc_up.adjoint();

    // Static resonant piece (Ω/2)(α_c σ₊a + h.c.).
    let static_jc = &jc_up * (alpha_c * C64::from(omega / 2.0))
        + jc_up.adjoint() * (alpha_c.conj() * C64::from(omega / 2.0));

    let half_carrier = C64::from(omega * alpha0 / 2.0);
    let half_side = alpha_c * C64::from(omega / 2.0);
    let minus_i = C64::new(0.0, -1.0);

    let mut rhs = |t: f64, y: &CVector| -> CVector {
        let mut v = &static_jc * y;
        if alpha0 != 0.0 {
            let e_up = C64::from_polar(1.0, t);
            v += (&carrier_up * y) * (half_carrier * e_up);
            v += (&carrier_dn * y) * (half_carrier * e_up.conj());
        }
        let e2 = C64::from_polar(1.0, 2.0 * t);
        v += (&ajc_up * y) * (half_side * e2);
        v += (&ajc_dn * y) * (half_side.conj() * e2.conj());
        v * minus_i
    };

    // Ideal pulse: exp[−ik(π/2)(phase·σ₊a + h.c.)] with the same coupling
    // phase as the static term.
    let phase = alpha_c / C64::from(coupling);
    let gen_raise = &jc_up * phase;
    let gen = &gen_raise + gen_raise.adjoint();
    let spec2 = HilbertSpec::new(&[2, d_ph])?;
    let h_id = Operator::hermitian(spec2, hermitize(&gen))?;
    let u_ideal = evolution_operator(&h_id, p.k * std::f64::consts::FRAC_PI_2)?;

    // The gate block: |g,0⟩, |g,1⟩, |r,0⟩ (internal most significant).
    let block = [0usize, 1, d_ph];
    let opts = AdaptiveOpts { rtol: p.rtol, atol: 1e-12, h_init: None, max_steps: 200_000_000 };
    let mut trace_acc = C64::new(0.0, 0.0);
    let mut worst_distance: f64 = 0.0;
    let mut worst_leak: f64 = 0.0;
    for &idx in &block {
        let mut y0 = CVector::zeros(dim);
        y0[idx] = C64::new(1.0, 0.0);
        let y_full = integrate_adaptive(&mut rhs, 0.0, t_pulse, &y0, &opts)?;
        let y_id = u_ideal.mat() * &y0;
        let overlap = y_id.dotc(&y_full);
        trace_acc += overlap;
        worst_distance = worst_distance.max((1.0 - overlap.norm_sqr()).max(0.0).sqrt());
        let mut leak = 0.0;
        for internal in 0..2 {
            leak += y_full[internal * d_ph + (d_ph - 1)].norm_sqr();
        }
        worst_leak = worst_leak.max(leak);
    }
    let infidelity = (1.0 - trace_acc.norm() / 3.0).max(0.0);
    Ok(GateErrorReport {
        infidelity,
        trace_distance: worst_distance,
        leakage_top: worst_leak,
        validity_ratio: (p.eta * omega).powi(2),
        nu_t: t_pulse,
        commensurate,
    })
}

// ---------------------------------------------------------------------------
// Pushed-ion conditional phase (microtrap arrays)
// ---------------------------------------------------------------------------

/// Phases accumulated by the four internal branches of two pushed ions, in
/// units of (e²/4πε₀d)·(1/ħ) unless produced by the SI adapter.
#[derive(Clone, Copy, Debug)]
pub struct PushgateResult {
    /// Branch phases in order [00, 01, 10, 11] (ε₁ε₂).
    pub branch_phases: [f64; 4],
    /// φ = φ₁₁ − φ₀₁ − φ₁₀ + φ₀₀: what survives after single-particle
    /// phases are absorbed into local frames.
    pub conditional_phase: f64,
    /// Smallest inter-ion separation encountered, in units of d.
    pub min_separation_over_d: f64,
    /// Largest |displacement|/d, the small-push expansion parameter.
    pub max_displacement_over_d: f64,
}

/// Integrates the Coulomb interaction phase of two ions a distance `d`
/// apart whose state-dependent displacements follow `x1` and `x2` (same
/// length unit as `d`; shared time window). Branch ε makes ion i follow
/// ε·x̄_i(t); the branch phase is −∫dt/(separation/d) in dimensionless
/// units. Kinetic single-particle phases are deliberately excluded — they
/// are local and drop out of the conditional phase anyway.
pub fn pushgate_phase(d: f64, x1: &PulseProfile, x2: &PulseProfile) -> Result<PushgateResult> {
    if d <= 0.0 {
        return Err(QopError::Domain("trap separation must be positive".into()));
    }
    let same_window = (x1.t_start() - x2.t_start()).abs() < 1e-12 * x1.dt()
        && (x1.t_end() - x2.t_end()).abs() < 1e-12 * x1.dt();
    if !same_window {
        return Err(QopError::DimMismatch("displacement profiles must share a time window".into()));
    }
    let times = x1.times();
    let branches = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)];
    let mut integrands: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); 4];
    let mut min_sep = f64::INFINITY;
    let mut max_disp: f64 = 0.0;
    for &t in &times {
        let u1 = x1.value(t) / d;
        let u2 = x2.value(t) / d;
        max_disp = max_disp.max(u1.abs()).max(u2.abs());
        for (b, &(e1, e2)) in branches.iter().enumerate() {
            let sep = 1.0 + e2 * u2 - e1 * u1;
            if sep < 1e-6 {
                return Err(QopError::Domain(format!(
                    "ion trajectories collide (separation {sep:.3e}·d at t = {t:.6})"
                )));
            }
            min_sep = min_sep.min(sep);
            integrands[b].push(1.0 / sep);
        }
    }
    let mut branch_phases = [0.0; 4];
    for (b, integ) in integrands.iter().enumerate() {
        branch_phases[b] = -crate::ode::simpson_integral(integ, x1.dt())?;
    }
    let conditional_phase =
        branch_phases[3] - branch_phases[1] - branch_phases[2] + branch_phases[0];
    Ok(PushgateResult {
        branch_phases,
        conditional_phase,
        min_separation_over_d: min_sep,
        max_displacement_over_d: max_disp,
    })
}

/// SI adapter: `d_m` in meters, profiles in meters over seconds. Multiplies
/// the dimensionless result by e²/(4πε₀·d·ħ) so the phases come out in
/// radians.
pub fn pushgate_phase_si(d_m: f64, x1: &PulseProfile, x2: &PulseProfile) -> Result<PushgateResult> {
    let dimless = pushgate_phase(d_m, x1, x2)?;
    let scale = COULOMB_E2 / (d_m * HBAR);
    let mut branch_phases = dimless.branch_phases;
    for b in &mut branch_phases {
        *b *= scale;
    }
    Ok(PushgateResult {
        branch_phases,
        conditional_phase: dimless.conditional_phase * scale,
        ..dimless
    })
}
