//! Continuous-variable networking between light pulses and atomic ensembles.
//!
//! A strong off-resonant pulse passing through a spin-polarized ensemble
//! couples one canonical quadrature pair of the light (Stokes components) to
//! one canonical pair of the collective spin. Everything in this module is
//! Gaussian, so states are tracked exactly by their first and second moments
//! in the quadrature ordering (X₁, P₁, X₂, P₂, …) with vacuum variance 1/2
//! (commutator convention [X, P] = i).
//!
//! The module provides three layers:
//!
//! * a small covariance-matrix engine ([`GaussianState`]) whose protocol
//!   steps — probe passes, loss channels, quarter-turn spin rotations,
//!   homodyne conditioning and classical feed-forward — are affine updates
//!   of (means, covariance);
//! * the single-pass interaction ([`pass_through`]) that entangles a probe
//!   pulse with one ensemble, including the spontaneous-emission noise
//!   fractions carried by [`PassParams`];
//! * two protocols built from sequential probe passes: entangling a pair of
//!   distant ensembles by measuring joint quadratures ([`bell_measure_epr`])
//!   and teleporting an unknown collective-spin state between ensembles
//!   ([`teleport_cv`]), each paired with its closed-form prediction so the
//!   covariance engine doubles as a brute-force cross-check.

use nalgebra::{DMatrix, DVector};

use crate::error::{QopError, Result};

/// Variance of a single canonical quadrature in vacuum ([X, P] = i).
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Best average fidelity a classical measure-and-resend strategy can reach
/// for arbitrary coherent input states.
pub const CLASSICAL_FIDELITY_BOUND: f64 = 0.5;

/// Default ratio between the strong-pass and weak-pass couplings used by
/// [`teleport_cv`] when the caller does not fix the strong coupling.
pub const DEFAULT_STRONG_COUPLING_RATIO: f64 = 100.0;

/// Tolerance for the uncertainty-relation check on covariance matrices.
const UNCERTAINTY_TOL: f64 = 1e-9;

/// Below this measured-quadrature variance, homodyne conditioning is treated
/// as conditioning on an already-pinned observable and rejected.
const SINGULAR_VARIANCE_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Gaussian state engine
// ---------------------------------------------------------------------------

/// A Gaussian state of `n` bosonic modes, stored as the mean vector
/// (X₁, P₁, …, Xₙ, Pₙ) and the symmetric covariance matrix of the same
/// quadrature ordering. Vacuum has zero means and covariance I/2.
#[derive(Clone, Debug)]
pub struct GaussianState {
    means: DVector<f64>,
    cov: DMatrix<f64>,
}

/// The antisymmetric form encoding the canonical commutators: block-diagonal
/// with [[0, 1], [-1, 0]] for each mode, so [R_i, R_j] = i Ω_ij.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let n = 2 * modes;
    DMatrix::from_fn(n, n, |i, j| {
        if i / 2 != j / 2 {
            0.0
        } else if i % 2 == 0 && j == i + 1 {
            1.0
        } else if i % 2 == 1 && j + 1 == i {
            -1.0
        } else {
            0.0
        }
    })
}

impl GaussianState {
    /// Builds a state from moments, enforcing that the covariance is
    /// symmetric, positive semidefinite and obeys the uncertainty relation
    /// (every symplectic eigenvalue at least 1/2).
    pub fn new(means: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = means.len();
        if n == 0 || n % 2 != 0 {
            return Err(QopError::Domain(format!(
                "mean vector must hold an (X, P) pair per mode; got length {n}"
            )));
        }
        if cov.nrows() != n || cov.ncols() != n {
            return Err(QopError::DimMismatch(format!(
                "covariance is {}×{} but the mean vector has length {n}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if !means.iter().all(|x| x.is_finite()) || !cov.iter().all(|x| x.is_finite()) {
            return Err(QopError::Domain("moments must be finite".into()));
        }
        let scale = 1.0 + cov.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut asym = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                asym = asym.max((cov[(i, j)] - cov[(j, i)]).abs());
            }
        }
        if asym > UNCERTAINTY_TOL * scale {
            return Err(QopError::Domain(format!(
                "covariance is not symmetric: max |Σ - Σᵀ| entry = {asym:.3e}"
            )));
        }
        let covt = cov.transpose();
        let state = Self {
            means,
            cov: (cov + covt) * 0.5,
        };
        state.validate()?;
        Ok(state)
    }

    /// Vacuum in every mode: zero means, covariance I/2.
    pub fn vacuum(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(QopError::Domain("a state needs at least one mode".into()));
        }
        let n = 2 * modes;
        Ok(Self {
            means: DVector::zeros(n),
            cov: DMatrix::identity(n, n) * VACUUM_VARIANCE,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.means.len() / 2
    }

    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Mean of the linear combination c·R of quadratures.
    pub fn mean_of(&self, coeffs: &[f64]) -> Result<f64> {
        let c = self.coeff_vector(coeffs)?;
        Ok(c.dot(&self.means))
    }

    /// Variance of the linear combination c·R of quadratures.
    pub fn variance_of(&self, coeffs: &[f64]) -> Result<f64> {
        let c = self.coeff_vector(coeffs)?;
        Ok(c.dot(&(&self.cov * &c)))
    }

    fn coeff_vector(&self, coeffs: &[f64]) -> Result<DVector<f64>> {
        if coeffs.len() != self.means.len() {
            return Err(QopError::DimMismatch(format!(
                "coefficient vector has length {} but the state has {} quadratures",
                coeffs.len(),
                self.means.len()
            )));
        }
        Ok(DVector::from_column_slice(coeffs))
    }

    /// Symplectic eigenvalues of the covariance matrix, ascending. A physical
    /// state has all of them at least 1/2; vacuum sits exactly at 1/2.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let omega = symplectic_form(self.num_modes());
        let a = &omega * &self.cov;
        let mut nus: Vec<f64> = a.complex_eigenvalues().iter().map(|l| l.norm()).collect();
        nus.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalue norms are finite"));
        nus
    }

    /// Checks positivity of the covariance and the uncertainty relation.
    /// Intermediate protocol states with a homodyne-pinned quadrature are
    /// deliberately *not* run through this check (a pinned quadrature drives
    /// one symplectic eigenvalue to zero until the probe mode is dropped).
    pub fn validate(&self) -> Result<()> {
        let min_eig = self
            .cov
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x));
        let scale = 1.0 + self.cov.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if min_eig < -UNCERTAINTY_TOL * scale {
            return Err(QopError::NotPositive { min_eig });
        }
        let nus = self.symplectic_eigenvalues();
        let nu_min = nus.first().copied().unwrap_or(0.0);
        if nu_min < VACUUM_VARIANCE - UNCERTAINTY_TOL * scale {
            return Err(QopError::Domain(format!(
                "uncertainty relation violated: min symplectic eigenvalue {nu_min:.6e} < 1/2"
            )));
        }
        Ok(())
    }

    /// Shifts the mean of one mode by (dx, dp); covariance is untouched.
    pub fn displace(&mut self, mode: usize, dx: f64, dp: f64) -> Result<()> {
        self.check_mode(mode)?;
        if !dx.is_finite() || !dp.is_finite() {
            return Err(QopError::Domain("displacement must be finite".into()));
        }
        self.means[2 * mode] += dx;
        self.means[2 * mode + 1] += dp;
        Ok(())
    }

    /// Appends one fresh vacuum mode at the end of the register.
    pub fn append_vacuum_mode(&self) -> Self {
        let n = self.means.len();
        let mut means = DVector::zeros(n + 2);
        means.rows_mut(0, n).copy_from(&self.means);
        let mut cov = DMatrix::zeros(n + 2, n + 2);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        cov[(n, n)] = VACUUM_VARIANCE;
        cov[(n + 1, n + 1)] = VACUUM_VARIANCE;
        Self { means, cov }
    }

    /// Reduced state of the listed modes, in the order given.
    pub fn marginal(&self, modes: &[usize]) -> Result<Self> {
        if modes.is_empty() {
            return Err(QopError::Domain("marginal needs at least one mode".into()));
        }
        let mut seen = vec![false; self.num_modes()];
        let mut quads = Vec::with_capacity(2 * modes.len());
        for &m in modes {
            self.check_mode(m)?;
            if seen[m] {
                return Err(QopError::BadSubsystem(format!("mode {m} listed twice")));
            }
            seen[m] = true;
            quads.push(2 * m);
            quads.push(2 * m + 1);
        }
        let means = DVector::from_fn(quads.len(), |i, _| self.means[quads[i]]);
        let cov = DMatrix::from_fn(quads.len(), quads.len(), |i, j| self.cov[(quads[i], quads[j])]);
        Ok(Self { means, cov })
    }

    /// Traces out one mode (marginal over the rest).
    pub fn drop_mode(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if self.num_modes() == 1 {
            return Err(QopError::Domain("cannot drop the only mode".into()));
        }
        let keep: Vec<usize> = (0..self.num_modes()).filter(|&m| m != mode).collect();
        self.marginal(&keep)
    }

    /// Applies the affine update R → T·R (+ Gaussian noise on the covariance).
    fn apply_linear(&mut self, map: &DMatrix<f64>, noise: Option<&DMatrix<f64>>) {
        self.means = map * &self.means;
        let mut cov = map * &self.cov * map.transpose();
        if let Some(n) = noise {
            cov += n;
        }
        let covt = cov.transpose();
        self.cov = (cov + covt) * 0.5;
    }

    /// One probe pass: the light mode's quadratures pick up the atomic P, the
    /// atomic X picks up the light P, and the loss fractions in `params`
    /// admix fresh vacuum.
    pub fn apply_interaction(&mut self, light: usize, atoms: usize, params: &PassParams) -> Result<()> {
        self.check_mode(light)?;
        self.check_mode(atoms)?;
        if light == atoms {
            return Err(QopError::BadSubsystem(
                "probe and ensemble must be distinct modes".into(),
            ));
        }
        let map = embed_pair(self.num_modes(), light, atoms, &pass_matrix(params), true);
        let noise = embed_pair(self.num_modes(), light, atoms, &pass_noise_matrix(params), false);
        self.apply_linear(&map, Some(&noise));
        Ok(())
    }

    /// Pure-loss (beam-splitter) channel on one mode: amplitudes scale by
    /// √(1−η) and a fraction η of vacuum enters.
    pub fn loss_channel(&mut self, mode: usize, eta: f64) -> Result<()> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(QopError::Domain(format!(
                "loss fraction must lie in [0, 1]; got {eta}"
            )));
        }
        if eta == 0.0 {
            return Ok(());
        }
        let n = self.means.len();
        let t = (1.0 - eta).sqrt();
        let mut map = DMatrix::identity(n, n);
        map[(2 * mode, 2 * mode)] = t;
        map[(2 * mode + 1, 2 * mode + 1)] = t;
        let mut noise = DMatrix::zeros(n, n);
        noise[(2 * mode, 2 * mode)] = eta * VACUUM_VARIANCE;
        noise[(2 * mode + 1, 2 * mode + 1)] = eta * VACUUM_VARIANCE;
        self.apply_linear(&map, Some(&noise));
        Ok(())
    }

    /// Adds `gain` times the source quadrature onto the target quadrature —
    /// the covariance-level description of measuring the source and feeding
    /// the record forward as a displacement, averaged over outcomes.
    pub fn feedforward(&mut self, target_quad: usize, gain: f64, source_quad: usize) -> Result<()> {
        let n = self.means.len();
        if target_quad >= n || source_quad >= n {
            return Err(QopError::BadSubsystem(format!(
                "quadrature index out of range (have {n} quadratures)"
            )));
        }
        if target_quad == source_quad {
            return Err(QopError::BadSubsystem(
                "feed-forward source and target must differ".into(),
            ));
        }
        if !gain.is_finite() {
            return Err(QopError::Domain("feed-forward gain must be finite".into()));
        }
        let mut map = DMatrix::identity(n, n);
        map[(target_quad, source_quad)] = gain;
        self.apply_linear(&map, None);
        Ok(())
    }

    /// Quarter turn of one mode's quadratures: X → −P, P → X.
    pub fn rotate_quarter_plus(&mut self, mode: usize) -> Result<()> {
        self.rotate_mode(mode, [[0.0, -1.0], [1.0, 0.0]])
    }

    /// Quarter turn in the opposite sense: X → P, P → −X.
    pub fn rotate_quarter_minus(&mut self, mode: usize) -> Result<()> {
        self.rotate_mode(mode, [[0.0, 1.0], [-1.0, 0.0]])
    }

    fn rotate_mode(&mut self, mode: usize, block: [[f64; 2]; 2]) -> Result<()> {
        self.check_mode(mode)?;
        let n = self.means.len();
        let mut map = DMatrix::identity(n, n);
        for i in 0..2 {
            for j in 0..2 {
                map[(2 * mode + i, 2 * mode + j)] = block[i][j];
            }
        }
        self.apply_linear(&map, None);
        Ok(())
    }

    /// Conditions the state on a homodyne measurement of the observable c·R
    /// returning `outcome`. Fails if that observable is already pinned
    /// (vanishing variance), since the Gaussian update would divide by zero.
    pub fn condition_on_quadrature(&self, coeffs: &[f64], outcome: f64) -> Result<Self> {
        if !outcome.is_finite() {
            return Err(QopError::Domain("measurement outcome must be finite".into()));
        }
        let c = self.coeff_vector(coeffs)?;
        let sc = &self.cov * &c;
        let var_m = c.dot(&sc);
        if !var_m.is_finite() || var_m <= SINGULAR_VARIANCE_TOL {
            return Err(QopError::Numerics(format!(
                "singular measurement variance {var_m:.3e}: the observable is already pinned"
            )));
        }
        let shift = (outcome - c.dot(&self.means)) / var_m;
        let means = &self.means + &sc * shift;
        let cov = &self.cov - (&sc * sc.transpose()) / var_m;
        let covt = cov.transpose();
        Ok(Self {
            means,
            cov: (cov + covt) * 0.5,
        })
    }

    /// Conditions on the mean outcome — the deterministic representative of
    /// the outcome ensemble (conditional covariance is outcome-independent).
    pub fn condition_on_mean(&self, coeffs: &[f64]) -> Result<Self> {
        let mean = self.mean_of(coeffs)?;
        self.condition_on_quadrature(coeffs, mean)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            return Err(QopError::BadSubsystem(format!(
                "mode {mode} out of range for a {}-mode state",
                self.num_modes()
            )));
        }
        Ok(())
    }
}

/// Embeds a 4×4 map (or noise block) acting on the quadrature quartet
/// (light X, light P, atom X, atom P) into the full register.
fn embed_pair(
    total_modes: usize,
    light: usize,
    atoms: usize,
    block: &DMatrix<f64>,
    identity_base: bool,
) -> DMatrix<f64> {
    let n = 2 * total_modes;
    let idx = [2 * light, 2 * light + 1, 2 * atoms, 2 * atoms + 1];
    let mut full = if identity_base {
        DMatrix::identity(n, n)
    } else {
        DMatrix::zeros(n, n)
    };
    for (i, &ri) in idx.iter().enumerate() {
        for (j, &cj) in idx.iter().enumerate() {
            full[(ri, cj)] = block[(i, j)];
        }
    }
    full
}

// ---------------------------------------------------------------------------
// The single probe pass
// ---------------------------------------------------------------------------

/// Parameters of one dispersive probe pass: the accumulated interaction
/// strength `kappa_c` and the spontaneous-emission loss fractions picked up
/// by the light (`epsilon_p`) and the atoms (`epsilon_a`).
#[derive(Clone, Copy, Debug)]
pub struct PassParams {
    kappa_c: f64,
    epsilon_p: f64,
    epsilon_a: f64,
}

impl PassParams {
    pub fn new(kappa_c: f64, epsilon_p: f64, epsilon_a: f64) -> Result<Self> {
        if !kappa_c.is_finite() || kappa_c < 0.0 {
            return Err(QopError::Domain(format!(
                "interaction parameter must be finite and non-negative; got {kappa_c}"
            )));
        }
        for (name, eps) in [("light", epsilon_p), ("atom", epsilon_a)] {
            if !(0.0..1.0).contains(&eps) {
                return Err(QopError::Domain(format!(
                    "{name} loss fraction must lie in [0, 1); got {eps}"
                )));
            }
        }
        Ok(Self {
            kappa_c,
            epsilon_p,
            epsilon_a,
        })
    }

    /// A pass with no spontaneous-emission noise.
    pub fn lossless(kappa_c: f64) -> Result<Self> {
        Self::new(kappa_c, 0.0, 0.0)
    }

    pub fn kappa_c(&self) -> f64 {
        self.kappa_c
    }

    pub fn epsilon_p(&self) -> f64 {
        self.epsilon_p
    }

    pub fn epsilon_a(&self) -> f64 {
        self.epsilon_a
    }
}

/// The 4×4 linear map of one probe pass on (light X, light P, atom X, atom P):
///
/// ```text
/// X_light' = √(1−ε_p) (X_light − κ_c P_atom)
/// P_light' = √(1−ε_p)  P_light
/// X_atom'  = √(1−ε_a) (X_atom − κ_c P_light)
/// P_atom'  = √(1−ε_a)  P_atom
/// ```
///
/// with the matching fraction of fresh vacuum supplied by
/// [`pass_noise_matrix`], so canonical commutators are preserved exactly.
pub fn pass_matrix(params: &PassParams) -> DMatrix<f64> {
    let sp = (1.0 - params.epsilon_p).sqrt();
    let sa = (1.0 - params.epsilon_a).sqrt();
    let k = params.kappa_c;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            sp, 0.0, 0.0, -sp * k, //
            0.0, sp, 0.0, 0.0, //
            0.0, -sa * k, sa, 0.0, //
            0.0, 0.0, 0.0, sa,
        ],
    )
}

/// Covariance added by the vacuum admixture of one probe pass.
pub fn pass_noise_matrix(params: &PassParams) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(&[
        params.epsilon_p * VACUUM_VARIANCE,
        params.epsilon_p * VACUUM_VARIANCE,
        params.epsilon_a * VACUUM_VARIANCE,
        params.epsilon_a * VACUUM_VARIANCE,
    ]))
}

/// Sends a two-mode state (mode 0 = light, mode 1 = atoms) through one probe
/// pass.
pub fn pass_through(state: &GaussianState, params: &PassParams) -> Result<GaussianState> {
    if state.num_modes() != 2 {
        return Err(QopError::DimMismatch(format!(
            "pass_through expects a (light, atoms) pair; got {} modes",
            state.num_modes()
        )));
    }
    let mut out = state.clone();
    out.apply_interaction(0, 1, params)?;
    Ok(out)
}

/// Interaction parameter of a single pass through an ensemble of number
/// density `rho_n` and length `l_a`, probed at wavelength `lambda0` with
/// detuning `delta` from a line of half-width `gamma_s` (the two rates may be
/// given in any common unit):
///
/// κ_c = 3 ρ_n λ₀² L_a γ_s / (8 π² Δ).
pub fn kappa_c(rho_n: f64, lambda0: f64, l_a: f64, gamma_s: f64, delta: f64) -> Result<f64> {
    for (name, v) in [
        ("number density", rho_n),
        ("wavelength", lambda0),
        ("sample length", l_a),
        ("line half-width", gamma_s),
        ("detuning", delta),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(QopError::Domain(format!(
                "{name} must be finite and positive; got {v}"
            )));
        }
    }
    Ok(3.0 * rho_n * lambda0 * lambda0 * l_a * gamma_s / (8.0 * std::f64::consts::PI.powi(2) * delta))
}

/// Spontaneous-emission loss fraction implied by an interaction parameter:
/// the collectively enhanced signal-to-noise ratio of a free-space ensemble
/// is 3 ρ_n L_a / k₀², and ε = κ_c² divided by that ratio.
pub fn pass_loss_estimate(kappa_c: f64, rho_n: f64, l_a: f64, lambda0: f64) -> Result<f64> {
    for (name, v) in [
        ("interaction parameter", kappa_c),
        ("number density", rho_n),
        ("sample length", l_a),
        ("wavelength", lambda0),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(QopError::Domain(format!(
                "{name} must be finite and positive; got {v}"
            )));
        }
    }
    let k0 = 2.0 * std::f64::consts::PI / lambda0;
    let snr = 3.0 * rho_n * l_a / (k0 * k0);
    Ok(kappa_c * kappa_c / snr)
}

// ---------------------------------------------------------------------------
// Probe rounds shared by the protocols
// ---------------------------------------------------------------------------

/// What to do with the homodyne record of a probe round.
enum ProbeReadout {
    /// Bayesian update on the record (resource preparation).
    Condition,
    /// Classical feed-forward of the record onto a target quadrature,
    /// averaged over outcomes.
    Feedforward { target_quad: usize, gain: f64 },
}

/// One full probe round: a fresh pulse passes through the `first` ensemble,
/// suffers `transmission_loss` on the way to the `second` ensemble, passes
/// through it, suffers `detector_loss`, and finally its X quadrature is read
/// out and consumed per `readout`. The probe mode is then dropped.
fn run_probe_round(
    state: &GaussianState,
    first: usize,
    second: usize,
    params: &PassParams,
    transmission_loss: f64,
    detector_loss: f64,
    readout: ProbeReadout,
) -> Result<GaussianState> {
    let mut s = state.append_vacuum_mode();
    let light = s.num_modes() - 1;
    s.apply_interaction(light, first, params)?;
    s.loss_channel(light, transmission_loss)?;
    s.apply_interaction(light, second, params)?;
    s.loss_channel(light, detector_loss)?;
    match readout {
        ProbeReadout::Condition => {
            let mut c = vec![0.0; 2 * s.num_modes()];
            c[2 * light] = 1.0;
            s = s.condition_on_mean(&c)?;
        }
        ProbeReadout::Feedforward { target_quad, gain } => {
            s.feedforward(target_quad, gain, 2 * light)?;
        }
    }
    s.drop_mode(light)
}

// ---------------------------------------------------------------------------
// Entanglement generation by sequential probe measurement
// ---------------------------------------------------------------------------

/// Squeezing of the joint ensemble quadratures produced by one measured probe
/// pass of strength κ_c: r = ½ ln(1 + 2 κ_c²).
pub fn squeezing_parameter(kappa_c: f64) -> f64 {
    0.5 * (2.0 * kappa_c * kappa_c).ln_1p()
}

/// Result of [`bell_measure_epr`]: the conditional two-ensemble state and the
/// squeezing extracted from it alongside the closed-form prediction.
#[derive(Clone, Debug)]
pub struct EprReport {
    /// Conditional state of the two ensembles after all probe rounds.
    pub state: GaussianState,
    /// Var(X₁ − X₂) of the final state.
    pub var_x_minus: f64,
    /// Var(P₁ + P₂) of the final state.
    pub var_p_plus: f64,
    /// Squeezing inferred from the simulated joint variances,
    /// r = −¼ ln[Var(X₁−X₂)·Var(P₁+P₂)] relative to the vacuum pair.
    pub r_oracle: f64,
    /// Closed-form squeezing ½ ln(1 + 2 κ_c²) for a noise-free pass.
    pub r_analytic: f64,
}

/// Entangles two vacuum ensembles by repeated collective probe measurement.
///
/// Each round sends a fresh pulse through both ensembles and reads out its X
/// quadrature, which carries κ_c times the joint spin quadrature the pulse
/// accumulated; Gaussian conditioning on the record squeezes that joint
/// observable. With `with_rotation` the spins are turned a quarter turn
/// between rounds (first ensemble X → −P, P → X; second ensemble X → P,
/// P → −X), so two rounds pin the complementary pair Var(X₁ − X₂) =
/// Var(P₁ + P₂) = e^{−2r} in units of the vacuum pair variance.
pub fn bell_measure_epr(params: &PassParams, rounds: u32, with_rotation: bool) -> Result<EprReport> {
    if rounds == 0 {
        return Err(QopError::Domain("at least one probe round is required".into()));
    }
    let mut state = GaussianState::vacuum(2)?;
    for round in 0..rounds {
        state = run_probe_round(&state, 0, 1, params, 0.0, 0.0, ProbeReadout::Condition)?;
        if with_rotation && round + 1 < rounds {
            state.rotate_quarter_plus(0)?;
            state.rotate_quarter_minus(1)?;
        }
    }
    let var_x_minus = state.variance_of(&[1.0, 0.0, -1.0, 0.0])?;
    let var_p_plus = state.variance_of(&[0.0, 1.0, 0.0, 1.0])?;
    let pair = 2.0 * VACUUM_VARIANCE;
    let r_oracle = -0.25 * ((var_x_minus * var_p_plus) / (pair * pair)).ln();
    Ok(EprReport {
        state,
        var_x_minus,
        var_p_plus,
        r_oracle,
        r_analytic: squeezing_parameter(params.kappa_c()),
    })
}

// ---------------------------------------------------------------------------
// Teleportation of a collective-spin state
// ---------------------------------------------------------------------------

/// Channel imperfections of the teleportation protocol: homodyne detector
/// inefficiency `eta_d` and light transmission loss `eta_t` between the first
/// ensemble and whichever ensemble the pulse visits second.
#[derive(Clone, Copy, Debug)]
pub struct TeleportLosses {
    eta_d: f64,
    eta_t: f64,
}

impl TeleportLosses {
    pub fn new(eta_d: f64, eta_t: f64) -> Result<Self> {
        for (name, eta) in [("detector", eta_d), ("transmission", eta_t)] {
            if !(0.0..1.0).contains(&eta) {
                return Err(QopError::Domain(format!(
                    "{name} loss must lie in [0, 1); got {eta}"
                )));
            }
        }
        Ok(Self { eta_d, eta_t })
    }

    pub fn lossless() -> Self {
        Self {
            eta_d: 0.0,
            eta_t: 0.0,
        }
    }

    pub fn eta_d(&self) -> f64 {
        self.eta_d
    }

    pub fn eta_t(&self) -> f64 {
        self.eta_t
    }
}

/// Folds the spontaneous-emission fractions of a probe pass into the channel
/// description: light loss compounds with the transmission loss and atomic
/// noise with the detector inefficiency.
pub fn fold_pass_losses(params: &PassParams, losses: &TeleportLosses) -> TeleportLosses {
    TeleportLosses {
        eta_t: 1.0 - (1.0 - losses.eta_t) * (1.0 - params.epsilon_p()),
        eta_d: 1.0 - (1.0 - losses.eta_d) * (1.0 - params.epsilon_a()),
    }
}

/// Closed-form coherent-state teleportation fidelity when both probe rounds
/// of each stage use the same coupling and there is no transmission loss:
/// F = 1 / (1 + 1/(1 + 2κ²) + 1/(2κ²)), with detector inefficiency folded in
/// as κ² → κ²(1 − η_d).
pub fn teleport_fidelity_ideal(kappa_c: f64, eta_d: f64) -> Result<f64> {
    if !kappa_c.is_finite() || kappa_c <= 0.0 {
        return Err(QopError::Domain(format!(
            "interaction parameter must be positive; got {kappa_c}"
        )));
    }
    if !(0.0..1.0).contains(&eta_d) {
        return Err(QopError::Domain(format!(
            "detector loss must lie in [0, 1); got {eta_d}"
        )));
    }
    let k2 = kappa_c * kappa_c * (1.0 - eta_d);
    Ok(1.0 / (1.0 + 1.0 / (1.0 + 2.0 * k2) + 1.0 / (2.0 * k2)))
}

/// Closed-form fidelity of the loss-hardened configuration (strong coupling
/// in the rounds that are later rotated away, weak coupling κ_c2 in the
/// rounds that matter): F ≈ 2 / (2 + 1/κ_c2² + κ_c2² η_t). Detector
/// inefficiency rescales the measurement-noise term, κ_c2² → κ_c2²(1 − η_d);
/// the κ_c2² η_t term stems from vacuum entering through the lossy link, not
/// from detection, and is left untouched.
pub fn teleport_fidelity_lossy(kappa_c2: f64, eta_t: f64, eta_d: f64) -> Result<f64> {
    if !kappa_c2.is_finite() || kappa_c2 <= 0.0 {
        return Err(QopError::Domain(format!(
            "interaction parameter must be positive; got {kappa_c2}"
        )));
    }
    for (name, eta) in [("transmission", eta_t), ("detector", eta_d)] {
        if !(0.0..1.0).contains(&eta) {
            return Err(QopError::Domain(format!(
                "{name} loss must lie in [0, 1); got {eta}"
            )));
        }
    }
    let k2 = kappa_c2 * kappa_c2;
    Ok(2.0 / (2.0 + 1.0 / (k2 * (1.0 - eta_d)) + k2 * eta_t))
}

/// Upper bound of the lossy fidelity over the weak coupling:
/// F ≤ 1 / (1 + √η_t), reached at the optimal κ_c2.
pub fn teleport_bound(eta_t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta_t) {
        return Err(QopError::Domain(format!(
            "transmission loss must lie in [0, 1); got {eta_t}"
        )));
    }
    Ok(1.0 / (1.0 + eta_t.sqrt()))
}

/// Weak coupling that maximizes the lossy fidelity: κ_c2 = η_t^{−1/4}.
pub fn optimal_kappa_c2(eta_t: f64) -> Result<f64> {
    if !eta_t.is_finite() || eta_t <= 0.0 || eta_t >= 1.0 {
        return Err(QopError::Domain(format!(
            "transmission loss must lie in (0, 1) for an optimum; got {eta_t}"
        )));
    }
    Ok(eta_t.powf(-0.25))
}

/// Whether a fidelity strictly beats the best classical strategy for
/// arbitrary coherent inputs (the boundary itself does not count).
pub fn classical_benchmark(fidelity: f64) -> bool {
    fidelity > CLASSICAL_FIDELITY_BOUND
}

/// Outcome of one teleportation run: the simulated (covariance-oracle)
/// fidelity next to the closed-form prediction, plus diagnostics.
#[derive(Clone, Debug)]
pub struct TeleportReport {
    pub kappa_c1: f64,
    pub kappa_c2: f64,
    pub eta_d: f64,
    pub eta_t: f64,
    pub input_mean: (f64, f64),
    /// Mean of the receiving ensemble after the protocol; unit feed-forward
    /// gain makes it track the input mean exactly.
    pub output_mean: (f64, f64),
    /// Quadrature noise added on top of the input's own vacuum variance.
    pub added_noise_x: f64,
    pub added_noise_p: f64,
    /// Closed-form fidelity (ideal form without transmission loss, the
    /// loss-hardened form otherwise).
    pub f_analytic: f64,
    /// Fidelity of the full covariance simulation.
    pub f_oracle: f64,
    /// 1/(1 + √η_t): ceiling of the closed-form fidelity over κ_c2.
    pub fidelity_bound: f64,
    /// Optimal weak coupling η_t^{−1/4} (absent without transmission loss).
    pub kappa_c2_opt: Option<f64>,
    pub beats_classical: bool,
}

/// Teleports an unknown coherent collective-spin state from a sender ensemble
/// onto a distant receiver, using only coherent probe pulses and homodyne
/// detection.
///
/// The receiver pair is first entangled by two measured probe rounds (strong
/// coupling `kappa_c1` first, weak `kappa_c2` second, quarter-turn rotations
/// in between); the records are consumed by Bayesian conditioning. The sender
/// is then read out jointly with the first ensemble by two more rounds in the
/// reversed coupling order, and those records are fed forward onto the
/// receiver with unit gain in the rotated frame. `kappa_c1 = None` defaults
/// to [`DEFAULT_STRONG_COUPLING_RATIO`] × `kappa_c2`; passing
/// `Some(kappa_c2)` reproduces the symmetric configuration of the ideal
/// closed form.
pub fn teleport_cv(
    input_mean: (f64, f64),
    losses: &TeleportLosses,
    kappa_c1: Option<f64>,
    kappa_c2: f64,
) -> Result<TeleportReport> {
    if !kappa_c2.is_finite() || kappa_c2 <= 0.0 {
        return Err(QopError::Domain(format!(
            "weak coupling must be positive; got {kappa_c2}"
        )));
    }
    let k1 = kappa_c1.unwrap_or(DEFAULT_STRONG_COUPLING_RATIO * kappa_c2);
    if !k1.is_finite() || k1 <= 0.0 {
        return Err(QopError::Domain(format!(
            "strong coupling must be positive; got {k1}"
        )));
    }
    if !input_mean.0.is_finite() || !input_mean.1.is_finite() {
        return Err(QopError::Domain("input mean must be finite".into()));
    }
    let eta_d = losses.eta_d();
    let eta_t = losses.eta_t();
    let strong = PassParams::lossless(k1)?;
    let weak = PassParams::lossless(kappa_c2)?;

    // Mode 0: relay ensemble (visited first by every pulse).
    // Mode 1: receiver. Mode 2: sender, holding the input state.
    let mut s = GaussianState::vacuum(3)?;
    s.displace(2, input_mean.0, input_mean.1)?;

    // Entangling stage between relay and receiver. The strong round pins the
    // first joint quadrature; after the quarter turns the weak round pins the
    // complementary one. Strong-round back-action lands on quadratures that
    // the rotations move out of harm's way.
    s = run_probe_round(&s, 0, 1, &strong, eta_t, eta_d, ProbeReadout::Condition)?;
    s.rotate_quarter_plus(0)?;
    s.rotate_quarter_minus(1)?;
    s = run_probe_round(&s, 0, 1, &weak, eta_t, eta_d, ProbeReadout::Condition)?;

    // Joint read-out of relay and sender, coupling order reversed. Records
    // displace the receiver with unit gain in the rotated frame; detector
    // inefficiency rescales the record, so the gain compensates √(1 − η_d).
    let gain_norm = (1.0 - eta_d).sqrt();
    s = run_probe_round(
        &s,
        0,
        2,
        &weak,
        eta_t,
        eta_d,
        ProbeReadout::Feedforward {
            target_quad: 3,
            gain: -1.0 / (kappa_c2 * gain_norm),
        },
    )?;
    s.rotate_quarter_plus(0)?;
    s.rotate_quarter_minus(2)?;
    s = run_probe_round(
        &s,
        0,
        2,
        &strong,
        eta_t,
        eta_d,
        ProbeReadout::Feedforward {
            target_quad: 2,
            gain: 1.0 / (k1 * gain_norm),
        },
    )?;

    let out = s.marginal(&[1])?;
    let f_oracle = fidelity_to_coherent(&out, input_mean)?;
    let f_analytic = if eta_t == 0.0 {
        teleport_fidelity_ideal(kappa_c2, eta_d)?
    } else {
        teleport_fidelity_lossy(kappa_c2, eta_t, eta_d)?
    };
    Ok(TeleportReport {
        kappa_c1: k1,
        kappa_c2,
        eta_d,
        eta_t,
        input_mean,
        output_mean: (out.means()[0], out.means()[1]),
        added_noise_x: out.cov()[(0, 0)] - VACUUM_VARIANCE,
        added_noise_p: out.cov()[(1, 1)] - VACUUM_VARIANCE,
        f_analytic,
        f_oracle,
        fidelity_bound: teleport_bound(eta_t)?,
        kappa_c2_opt: if eta_t > 0.0 {
            Some(optimal_kappa_c2(eta_t)?)
        } else {
            None
        },
        beats_classical: classical_benchmark(f_oracle),
    })
}

/// Overlap fidelity ⟨α|ρ|α⟩ between a single-mode Gaussian state and the
/// coherent state of the given mean.
pub fn fidelity_to_coherent(state: &GaussianState, mean: (f64, f64)) -> Result<f64> {
    if state.num_modes() != 1 {
        return Err(QopError::DimMismatch(format!(
            "coherent-state fidelity needs a single mode; got {}",
            state.num_modes()
        )));
    }
    let a00 = state.cov[(0, 0)] + VACUUM_VARIANCE;
    let a01 = state.cov[(0, 1)];
    let a11 = state.cov[(1, 1)] + VACUUM_VARIANCE;
    let det = a00 * a11 - a01 * a01;
    if !(det.is_finite() && det > 0.0) {
        return Err(QopError::Numerics(format!(
            "degenerate covariance in fidelity evaluation (det = {det:.3e})"
        )));
    }
    let dx = state.means[0] - mean.0;
    let dp = state.means[1] - mean.1;
    let quad = (a11 * dx * dx - 2.0 * a01 * dx * dp + a00 * dp * dp) / det;
    Ok((-0.5 * quad).exp() / det.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    #[test]
    fn vacuum_state_is_a_minimal_uncertainty_state() {
        let v = GaussianState::vacuum(3).unwrap();
        v.validate().unwrap();
        assert_eq!(v.num_modes(), 3);
        assert!(v.means().iter().all(|&x| x == 0.0));
        for nu in v.symplectic_eigenvalues() {
            assert!((nu - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn state_construction_rejects_malformed_inputs() {
        // Odd number of quadratures.
        assert!(GaussianState::new(DVector::zeros(3), DMatrix::identity(3, 3)).is_err());
        // Dimension mismatch.
        assert!(GaussianState::new(DVector::zeros(2), DMatrix::identity(4, 4)).is_err());
        // Asymmetric covariance.
        let mut cov = DMatrix::identity(2, 2) * 0.5;
        cov[(0, 1)] = 0.3;
        assert!(GaussianState::new(DVector::zeros(2), cov).is_err());
        // Sub-vacuum uncertainty in both quadratures at once.
        assert!(GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2) * 0.25).is_err());
        // Non-finite entries.
        let mut bad = DMatrix::identity(2, 2) * 0.5;
        bad[(0, 0)] = f64::NAN;
        assert!(GaussianState::new(DVector::zeros(2), bad).is_err());
        // A legitimately squeezed covariance is accepted.
        let sq = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.05, 5.0]));
        GaussianState::new(DVector::zeros(2), sq).unwrap();
    }

    #[test]
    fn interaction_parameter_matches_the_printed_formula() {
        // Rubidium-like numbers: density 5×10¹⁸ m⁻³, 2 cm sample, 0.8 μm
        // light, detuning 300 natural linewidths (each linewidth = 2γ_s).
        let k = kappa_c(5e18, 0.8e-6, 0.02, 1.0, 600.0).unwrap();
        assert!((4.0..6.5).contains(&k), "κ_c = {k}");
        assert!((k - 4.05285).abs() < 1e-4);
        // Linear in 1/Δ: doubling the detuning halves the coupling.
        let half = kappa_c(5e18, 0.8e-6, 0.02, 1.0, 1200.0).unwrap();
        assert!((half - 0.5 * k).abs() < 1e-12 * k);
        // The same design point keeps spontaneous-emission loss below 1%.
        let eps = pass_loss_estimate(k, 5e18, 0.02, 0.8e-6).unwrap();
        assert!(eps < 0.01, "ε = {eps}");
        assert!((eps - 3.3775e-3).abs() < 1e-6, "ε = {eps}");
        // Bad inputs are rejected.
        assert!(kappa_c(0.0, 0.8e-6, 0.02, 1.0, 600.0).is_err());
        assert!(pass_loss_estimate(k, 5e18, 0.02, -1.0).is_err());
    }

    #[test]
    fn lossless_pass_is_symplectic() {
        let omega = symplectic_form(2);
        for kappa in [0.3, 1.0, 5.0] {
            let m = pass_matrix(&PassParams::lossless(kappa).unwrap());
            assert!((m.determinant() - 1.0).abs() < 1e-10);
            let defect = &m * &omega * m.transpose() - &omega;
            assert!(max_abs(&defect) < 1e-10);
        }
    }

    #[test]
    fn lossy_pass_preserves_commutators_with_noise_ancillas() {
        // The pass admixes fresh vacuum with weights √ε; together with the
        // √(1−ε) system weights the canonical form is preserved exactly:
        // M Ω Mᵀ + B Ω Bᵀ = Ω with B the noise-coupling block.
        let params = PassParams::new(2.0, 0.3, 0.1).unwrap();
        let m = pass_matrix(&params);
        let b = DMatrix::from_diagonal(&DVector::from_column_slice(&[
            params.epsilon_p().sqrt(),
            params.epsilon_p().sqrt(),
            params.epsilon_a().sqrt(),
            params.epsilon_a().sqrt(),
        ]));
        let omega = symplectic_form(2);
        let defect = &m * &omega * m.transpose() + &b * &omega * b.transpose() - &omega;
        assert!(max_abs(&defect) < 1e-12);
    }

    #[test]
    fn pass_is_the_identity_at_zero_coupling() {
        let mut input = GaussianState::vacuum(2).unwrap();
        input.displace(0, 1.0, -2.0).unwrap();
        input.displace(1, 0.3, 0.7).unwrap();
        let out = pass_through(&input, &PassParams::lossless(0.0).unwrap()).unwrap();
        assert!((out.means() - input.means()).amax() < 1e-15);
        assert!(max_abs(&(out.cov() - input.cov())) < 1e-15);
    }

    #[test]
    fn unit_coupling_on_vacuum_doubles_the_kicked_variances() {
        let out = pass_through(
            &GaussianState::vacuum(2).unwrap(),
            &PassParams::lossless(1.0).unwrap(),
        )
        .unwrap();
        // X picks up κ P of the partner: 1/2 + κ²·1/2 = 1 at κ = 1.
        assert!((out.cov()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((out.cov()[(2, 2)] - 1.0).abs() < 1e-12);
        // The P quadratures are untouched.
        assert!((out.cov()[(1, 1)] - 0.5).abs() < 1e-12);
        assert!((out.cov()[(3, 3)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pass_rejects_wrong_shapes_and_saturated_loss() {
        let single = GaussianState::vacuum(1).unwrap();
        let params = PassParams::lossless(1.0).unwrap();
        assert!(pass_through(&single, &params).is_err());
        assert!(PassParams::new(1.0, 1.0, 0.0).is_err());
        assert!(PassParams::new(1.0, -0.1, 0.0).is_err());
        assert!(PassParams::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn epr_squeezing_matches_the_closed_form() {
        for kappa in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let params = PassParams::lossless(kappa).unwrap();
            let report = bell_measure_epr(&params, 2, true).unwrap();
            assert!(
                (report.r_oracle - report.r_analytic).abs() < 1e-9,
                "κ = {kappa}: oracle {} vs analytic {}",
                report.r_oracle,
                report.r_analytic
            );
        }
        let strong = bell_measure_epr(&PassParams::lossless(5.0).unwrap(), 2, true).unwrap();
        assert!((strong.r_analytic - 1.9659128).abs() < 1e-6);
        assert!((strong.r_oracle - 1.96591).abs() < 1e-4);
    }

    #[test]
    fn epr_pair_variances_squeeze_equally() {
        let report = bell_measure_epr(&PassParams::lossless(1.0).unwrap(), 2, true).unwrap();
        // Both joint observables end at 1/(1 + 2κ²) of the vacuum pair.
        assert!((report.var_x_minus - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.var_p_plus - 1.0 / 3.0).abs() < 1e-12);
        report.state.validate().unwrap();

        let idle = bell_measure_epr(&PassParams::lossless(0.0).unwrap(), 2, true).unwrap();
        assert!((idle.r_oracle).abs() < 1e-12);
        assert!((idle.var_x_minus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn epr_without_rotation_squeezes_one_combination_twice() {
        let report = bell_measure_epr(&PassParams::lossless(1.0).unwrap(), 2, false).unwrap();
        // Round one takes Var(P₁+P₂) from 1 to 1/3; measuring the same
        // observable again applies v → v/(1 + 2κ²v): (1/3)/(5/3) = 1/5.
        assert!((report.var_p_plus - 0.2).abs() < 1e-12);
        // The complementary pair is never addressed.
        assert!((report.var_x_minus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pass_noise_degrades_the_generated_squeezing() {
        let clean = bell_measure_epr(&PassParams::lossless(5.0).unwrap(), 2, true).unwrap();
        let noisy =
            bell_measure_epr(&PassParams::new(5.0, 0.0034, 0.0034).unwrap(), 2, true).unwrap();
        assert!(noisy.r_oracle < clean.r_oracle);
        noisy.state.validate().unwrap();
    }

    #[test]
    fn conditioning_on_a_pinned_quadrature_errors() {
        let v = GaussianState::vacuum(1).unwrap();
        let pinned = v.condition_on_quadrature(&[1.0, 0.0], 0.0).unwrap();
        assert!(pinned.cov()[(0, 0)].abs() < 1e-15);
        match pinned.condition_on_quadrature(&[1.0, 0.0], 0.0) {
            Err(QopError::Numerics(msg)) => assert!(msg.contains("singular")),
            other => panic!("expected a singular-variance error, got {other:?}"),
        }
    }

    #[test]
    fn teleportation_reproduces_the_ideal_fidelity() {
        let report = teleport_cv(
            (0.7, -1.1),
            &TeleportLosses::lossless(),
            Some(5.0),
            5.0,
        )
        .unwrap();
        assert!((report.f_analytic - 2550.0 / 2651.0).abs() < 1e-12);
        assert!((report.f_analytic - 0.96190).abs() < 1e-4);
        // The covariance oracle lands on the closed form exactly in the
        // symmetric lossless configuration.
        assert!(
            (report.f_oracle - report.f_analytic).abs() < 1e-9,
            "oracle {} vs analytic {}",
            report.f_oracle,
            report.f_analytic
        );
        assert!((report.output_mean.0 - 0.7).abs() < 1e-10);
        assert!((report.output_mean.1 + 1.1).abs() < 1e-10);
        assert!(report.beats_classical);

        // The fidelity approaches one as the coupling grows.
        assert!(teleport_fidelity_ideal(1e4, 0.0).unwrap() > 0.999999);
    }

    #[test]
    fn teleportation_with_transmission_loss_meets_the_bound() {
        let eta_t = 0.2;
        let k2 = optimal_kappa_c2(eta_t).unwrap();
        assert!((k2 - 1.4953488).abs() < 1e-7);
        let losses = TeleportLosses::new(0.0, eta_t).unwrap();
        let report = teleport_cv((0.0, 0.0), &losses, None, k2).unwrap();
        assert!((report.f_analytic - 0.69098301).abs() < 1e-7);
        // At the optimal weak coupling the closed form touches its ceiling.
        let bound = teleport_bound(eta_t).unwrap();
        assert!(report.f_analytic <= bound + 1e-12);
        assert!((report.f_analytic - bound).abs() < 1e-9);
        // The full simulation agrees with the closed form to a few 1e-6;
        // the budget below leaves room for platform rounding differences.
        assert!(
            (report.f_oracle - report.f_analytic).abs() < 1e-4,
            "oracle {} vs analytic {}",
            report.f_oracle,
            report.f_analytic
        );
        assert_eq!(report.kappa_c1, DEFAULT_STRONG_COUPLING_RATIO * k2);
        assert!((report.kappa_c2_opt.unwrap() - k2).abs() < 1e-12);
        assert!(report.beats_classical);
    }

    #[test]
    fn oracle_matches_the_closed_form_across_couplings() {
        for kappa in [1.0, 2.0, 5.0] {
            let report = teleport_cv(
                (0.0, 0.0),
                &TeleportLosses::lossless(),
                Some(kappa),
                kappa,
            )
            .unwrap();
            assert!(
                (report.f_oracle - report.f_analytic).abs() < 1e-9,
                "κ = {kappa}: oracle {} vs analytic {}",
                report.f_oracle,
                report.f_analytic
            );
        }
    }

    #[test]
    fn fidelity_is_independent_of_the_input_mean() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let losses = TeleportLosses::new(0.0, 0.2).unwrap();
        let k2 = optimal_kappa_c2(0.2).unwrap();
        let mut fidelities = Vec::new();
        for _ in 0..5 {
            let mean = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let report = teleport_cv(mean, &losses, None, k2).unwrap();
            assert!((report.output_mean.0 - mean.0).abs() < 1e-9);
            assert!((report.output_mean.1 - mean.1).abs() < 1e-9);
            fidelities.push(report.f_oracle);
        }
        let spread = fidelities.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - fidelities.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-9, "fidelity spread {spread}");
    }

    #[test]
    fn fidelity_is_monotone_in_coupling_and_loss() {
        let mut last = 0.0;
        for kappa in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let f = teleport_fidelity_ideal(kappa, 0.0).unwrap();
            assert!(f > last, "κ = {kappa}");
            last = f;
        }
        let mut last_lossy = 1.0;
        for eta_t in [0.05, 0.1, 0.2, 0.4] {
            let k2 = optimal_kappa_c2(eta_t).unwrap();
            let f = teleport_fidelity_lossy(k2, eta_t, 0.0).unwrap();
            assert!(f < last_lossy, "η_t = {eta_t}");
            last_lossy = f;
            let losses = TeleportLosses::new(0.0, eta_t).unwrap();
            let oracle = teleport_cv((0.0, 0.0), &losses, None, k2).unwrap().f_oracle;
            assert!((oracle - f).abs() < 1e-3);
        }
    }

    #[test]
    fn detector_inefficiency_rescales_the_coupling() {
        let eta_d = 0.1;
        let losses = TeleportLosses::new(eta_d, 0.0).unwrap();
        let report = teleport_cv((0.4, 0.9), &losses, Some(5.0), 5.0).unwrap();
        // κ² → κ²(1 − η_d) in the ideal closed form.
        let k2 = 25.0 * (1.0 - eta_d);
        let expected = 1.0 / (1.0 + 1.0 / (1.0 + 2.0 * k2) + 1.0 / (2.0 * k2));
        assert!((report.f_analytic - expected).abs() < 1e-12);
        assert!((report.f_oracle - report.f_analytic).abs() < 1e-9);
        // The penalty is the small η_d/κ² correction.
        let clean = teleport_fidelity_ideal(5.0, 0.0).unwrap();
        assert!(clean - report.f_analytic < 0.01);
        assert!(clean > report.f_analytic);
        // Means still track exactly: the gain compensates the record scaling.
        assert!((report.output_mean.0 - 0.4).abs() < 1e-9);
        assert!((report.output_mean.1 - 0.9).abs() < 1e-9);
    }

    #[test]
    fn classical_benchmark_excludes_the_boundary() {
        assert!(classical_benchmark(0.69));
        assert!(classical_benchmark(0.96));
        assert!(!classical_benchmark(0.5));
        assert!(!classical_benchmark(0.49));
    }

    #[test]
    fn optimal_coupling_follows_the_quarter_root_law() {
        let k = optimal_kappa_c2(0.2).unwrap();
        assert!((k - 0.2_f64.powf(-0.25)).abs() < 1e-12);
        assert!(optimal_kappa_c2(0.05).unwrap() > optimal_kappa_c2(0.2).unwrap());
        assert!(optimal_kappa_c2(0.0).is_err());
        assert!(optimal_kappa_c2(1.0).is_err());
    }

    #[test]
    fn pass_noise_folds_into_the_channel_losses() {
        let params = PassParams::new(1.0, 0.01, 0.02).unwrap();
        let base = TeleportLosses::new(0.1, 0.2).unwrap();
        let folded = fold_pass_losses(&params, &base);
        assert!((folded.eta_t() - (1.0 - 0.8 * 0.99)).abs() < 1e-12);
        assert!((folded.eta_d() - (1.0 - 0.9 * 0.98)).abs() < 1e-12);
    }

    #[test]
    fn marginals_and_displacements_behave() {
        let mut s = GaussianState::vacuum(2).unwrap();
        s.displace(1, 1.5, -0.5).unwrap();
        let kept = s.marginal(&[1]).unwrap();
        assert_eq!(kept.num_modes(), 1);
        assert!((kept.means()[0] - 1.5).abs() < 1e-15);
        assert!((kept.means()[1] + 0.5).abs() < 1e-15);
        assert!((kept.cov()[(0, 0)] - 0.5).abs() < 1e-15);
        let dropped = s.drop_mode(0).unwrap();
        assert!((dropped.means()[0] - 1.5).abs() < 1e-15);
        assert!(s.marginal(&[0, 0]).is_err());
        assert!(s.marginal(&[2]).is_err());
        assert!(GaussianState::vacuum(1).unwrap().drop_mode(0).is_err());
    }

    #[test]
    fn teleport_rejects_invalid_configurations() {
        let losses = TeleportLosses::lossless();
        assert!(teleport_cv((0.0, 0.0), &losses, None, 0.0).is_err());
        assert!(teleport_cv((0.0, 0.0), &losses, Some(-1.0), 1.0).is_err());
        assert!(teleport_cv((f64::NAN, 0.0), &losses, None, 1.0).is_err());
        assert!(TeleportLosses::new(1.0, 0.0).is_err());
        assert!(TeleportLosses::new(0.0, -0.1).is_err());
        assert!(bell_measure_epr(&PassParams::lossless(1.0).unwrap(), 0, true).is_err());
    }
}
