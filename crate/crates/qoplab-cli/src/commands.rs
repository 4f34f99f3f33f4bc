//! One runner per subcommand. Every runner reads its parameters through the
//! merged [`Params`] view (flags over config file over defaults), drives the
//! library, and returns a JSON results block plus — for the sweep commands —
//! the CSV curve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use qoplab::acceptance;
use qoplab::cavity::{
    propagate, receiver_pulse_from_dark_state_with, sigmoid_pulse, symmetric_emitter_pulse,
    NodeCouplings, TransferState,
};
use qoplab::cv;
use qoplab::cv::{PassParams, TeleportLosses};
use qoplab::entanglement::werner_qubit;
use qoplab::iontrap::{
    full_hamiltonian_check, pushgate_phase, FullCheckParams, IonRegister, LEVEL_G, LEVEL_R0,
};
use qoplab::memory::{impedance_match, read_out, write_map, ModeShape};
use qoplab::neutral::{
    collision_gate_table, collisional_phase, conditional_phase, entangling_power,
    local_product_deviation, rydberg_gate_sim, CollisionConfig, RydbergConfig, RydbergGateParams,
};
use qoplab::protocols::{
    average_teleport_fidelity, classical_repetition_mc, purification_curve, purify_fixed_points,
    purify_map_f64, qec3_correct, qec3_encode, quantum_hamming_min_n, teleport, PurifyNoise,
};
use qoplab::pulse::PulseProfile;
use qoplab::qstate::{partial_trace, OpKind};
use qoplab::qubit::{bloch_ket, sigma_x, BellKind};
use qoplab::repeater::{
    chain_analysis, direct_log10_t_ratio, monte_carlo_chain, optimize_segment_length, snr,
    RepeaterParams, SnrConfig, SnrInputs,
};
use qoplab::{Operator, C64};

use crate::output::Curve;
use crate::params::Params;
use crate::CliError;

pub struct CommandOutput {
    pub results: Value,
    pub curve: Option<Curve>,
    /// Number of failed acceptance gates; nonzero turns into exit code 1.
    pub gate_failures: usize,
}

impl CommandOutput {
    fn new(results: Value) -> Self {
        Self { results, curve: None, gate_failures: 0 }
    }

    fn with_curve(results: Value, curve: Curve) -> Self {
        Self { results, curve: Some(curve), gate_failures: 0 }
    }
}

fn require_unit_interval(name: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Config(format!("--{name} must lie in [0, 1]; got {v}")))
    }
}

// ---------------------------------------------------------------------------
// purify
// ---------------------------------------------------------------------------

pub const PURIFY_KEYS: &[&str] = &["f0", "rounds", "p-gate", "p-meas"];

pub fn purify(p: &Params) -> Result<CommandOutput, CliError> {
    let f0 = p.f64("f0", 0.75)?;
    require_unit_interval("f0", f0)?;
    let rounds = p.usize("rounds", 1)?;
    let p_gate = p.f64("p-gate", 0.0)?;
    let p_meas = p.f64("p-meas", 0.0)?;
    require_unit_interval("p-gate", p_gate)?;
    require_unit_interval("p-meas", p_meas)?;

    let noise = PurifyNoise { p_gate, p_meas };
    let (map_f, map_p) = purify_map_f64(f0);
    let steps = purification_curve(f0, rounds, &noise)?;

    let mut trajectory = Vec::new();
    let mut f_in = f0;
    for (i, step) in steps.iter().enumerate() {
        trajectory.push(json!({
            "round": i + 1,
            "f_in": f_in,
            "f_out": step.f_out,
            "p_success": step.p_success,
        }));
        f_in = step.f_out;
    }

    let fixed_points = match purify_fixed_points(&noise, 1e-10) {
        Ok((lower, upper)) => json!({ "lower": lower, "upper": upper }),
        Err(_) => Value::Null,
    };

    let results = json!({
        "map": { "f_next": map_f, "p_success": map_p },
        "trajectory": trajectory,
        "f_final": f_in,
        "fixed_points": fixed_points,
    });

    // One analytic-map step over the full input range, for plotting the
    // staircase construction.
    let rows: Vec<Vec<f64>> = (50..=100)
        .map(|i| {
            let f = i as f64 / 100.0;
            let (f_next, _) = purify_map_f64(f);
            vec![f, f_next]
        })
        .collect();
    Ok(CommandOutput::with_curve(results, Curve { header: &["f", "f_next"], rows }))
}

// ---------------------------------------------------------------------------
// teleport
// ---------------------------------------------------------------------------

pub const TELEPORT_KEYS: &[&str] = &["fidelity", "theta", "phi", "samples"];

fn bell_kind_name(kind: BellKind) -> &'static str {
    match kind {
        BellKind::PhiPlus => "phi-plus",
        BellKind::PhiMinus => "phi-minus",
        BellKind::PsiPlus => "psi-plus",
        BellKind::PsiMinus => "psi-minus",
    }
}

pub fn run_teleport(p: &Params, seed: u64) -> Result<CommandOutput, CliError> {
    let fidelity = p.f64("fidelity", 1.0)?;
    require_unit_interval("fidelity", fidelity)?;
    let theta = p.f64("theta", std::f64::consts::FRAC_PI_3)?;
    let phi = p.f64("phi", std::f64::consts::FRAC_PI_4)?;
    let samples = p.usize("samples", 0)?;

    let resource = werner_qubit(fidelity)?;
    let input = bloch_ket(theta, phi)?;
    let record = teleport(&input, &resource)?;

    let branches: Vec<Value> = record
        .outcomes
        .iter()
        .map(|o| {
            json!({
                "kind": bell_kind_name(o.kind),
                "probability": o.probability,
                "fidelity": o.fidelity,
            })
        })
        .collect();

    let mut results = json!({
        "resource_fidelity": fidelity,
        "input": { "theta": theta, "phi": phi },
        "branches": branches,
        "average_fidelity": record.average_fidelity,
        "werner_average": average_teleport_fidelity(&resource)?,
        "werner_formula": (2.0 * fidelity + 1.0) / 3.0,
    });

    if samples > 0 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut worst_branch = f64::INFINITY;
        let mut worst_prob_dev = 0.0_f64;
        let mut mean_avg = 0.0;
        for _ in 0..samples {
            let u: f64 = rng.gen();
            let theta_s = (1.0 - 2.0 * u).acos();
            let phi_s = rng.gen::<f64>() * std::f64::consts::TAU;
            let rec = teleport(&bloch_ket(theta_s, phi_s)?, &resource)?;
            for o in &rec.outcomes {
                worst_branch = worst_branch.min(o.fidelity);
                worst_prob_dev = worst_prob_dev.max((o.probability - 0.25).abs());
            }
            mean_avg += rec.average_fidelity;
        }
        results["sampling"] = json!({
            "count": samples,
            "worst_branch_fidelity": worst_branch,
            "max_probability_deviation": worst_prob_dev,
            "mean_average_fidelity": mean_avg / samples as f64,
        });
    }

    Ok(CommandOutput::new(results))
}

// ---------------------------------------------------------------------------
// qec
// ---------------------------------------------------------------------------

pub const QEC_KEYS: &[&str] = &["gamma-t", "intervals", "trials", "k", "t"];

pub fn qec(p: &Params, seed: u64) -> Result<CommandOutput, CliError> {
    let gamma_t = p.f64("gamma-t", 1.0)?;
    let intervals = p.usize("intervals", 10)?;
    let trials = p.usize("trials", 100_000)?;
    let k = p.u32("k", 1)?;
    let t = p.u32("t", 1)?;

    // Exhaustive single bit-flip recovery on the three-qubit code.
    let logical = bloch_ket(1.1, 0.4)?;
    let encoded = qec3_encode(&logical)?;
    let mut corrected = 0;
    let mut worst_overlap = f64::INFINITY;
    for j in 0..3 {
        let flip = Operator::embed(encoded.spec(), &[j], &sigma_x(), OpKind::Unitary)?;
        let fixed = qec3_correct(&flip.apply(&encoded)?)?;
        let overlap = fixed.overlap(&encoded)?;
        worst_overlap = worst_overlap.min(overlap);
        if overlap > 1.0 - 1e-12 {
            corrected += 1;
        }
    }

    let min_n = quantum_hamming_min_n(k, t)?;
    let mc = classical_repetition_mc(gamma_t, intervals, trials, seed)?;

    let results = json!({
        "three_qubit": {
            "single_flips_corrected": corrected,
            "worst_recovery_overlap": worst_overlap,
        },
        "hamming": { "k": k, "t": t, "min_n": min_n },
        "classical_mc": {
            "gamma_t": gamma_t,
            "intervals": intervals,
            "trials": trials,
            "survival": mc.survival,
            "std_err": mc.std_err,
            "exact": mc.exact,
            "bound": mc.bound,
            "meets_bound_floor": mc.survival >= mc.bound - 3.0 * mc.std_err,
        },
    });
    Ok(CommandOutput::new(results))
}

// ---------------------------------------------------------------------------
// iontrap-gate
// ---------------------------------------------------------------------------

pub const IONTRAP_KEYS: &[&str] = &["omega-over-nu", "eta", "k", "phonon-dim"];

pub fn iontrap_gate(p: &Params) -> Result<CommandOutput, CliError> {
    let omega_over_nu = p.f64("omega-over-nu", 0.05)?;
    let eta = p.f64("eta", 0.1)?;
    let k = p.f64("k", 1.0)?;
    let phonon_dim = p.usize("phonon-dim", 12)?;

    // Ideal three-pulse sequence: the four-row sign table and the phonon bus.
    let reg = IonRegister::new(2, 6)?;
    let table = [
        ("gg", [LEVEL_G, LEVEL_G], 1.0),
        ("gr", [LEVEL_G, LEVEL_R0], 1.0),
        ("rg", [LEVEL_R0, LEVEL_G], 1.0),
        ("rr", [LEVEL_R0, LEVEL_R0], -1.0),
    ];
    let mut rows = Vec::new();
    let mut worst_amp = 0.0_f64;
    let mut worst_phonon = 0.0_f64;
    for (label, levels, sign) in table {
        let input = reg.basis_ket(&levels, 0)?;
        let out = reg.cz_apply(0, 1, &input)?;
        let amp = input.inner(&out)?;
        worst_amp = worst_amp.max((amp.re - sign).abs()).max(amp.im.abs());
        let phonon = partial_trace(&out.to_density(), &[2])?;
        let mut vac = phonon.mat().clone();
        vac.fill(C64::new(0.0, 0.0));
        vac[(0, 0)] = C64::new(1.0, 0.0);
        worst_phonon = worst_phonon.max((phonon.mat() - vac).norm());
        rows.push(json!({
            "branch": label,
            "amplitude_re": amp.re,
            "amplitude_im": amp.im,
            "expected": sign,
        }));
    }

    let mut fc = FullCheckParams::new(omega_over_nu, eta);
    fc.k = k;
    fc.phonon_dim = phonon_dim;
    let report = full_hamiltonian_check(&fc)?;

    let results = json!({
        "sign_table": rows,
        "worst_amplitude_deviation": worst_amp,
        "worst_phonon_residual": worst_phonon,
        "full_hamiltonian": {
            "omega_over_nu": omega_over_nu,
            "eta": eta,
            "infidelity": report.infidelity,
            "trace_distance": report.trace_distance,
            "leakage_top": report.leakage_top,
            "validity_ratio": report.validity_ratio,
            "nu_t": report.nu_t,
            "commensurate": report.commensurate,
        },
    });
    Ok(CommandOutput::new(results))
}

// ---------------------------------------------------------------------------
// pushgate
// ---------------------------------------------------------------------------

pub const PUSHGATE_KEYS: &[&str] = &["d", "amplitude", "tau", "points"];

pub fn pushgate(p: &Params) -> Result<CommandOutput, CliError> {
    let d = p.f64("d", 10.0)?;
    let amplitude = p.f64("amplitude", 1.0)?;
    let tau = p.f64("tau", 10.0)?;
    let points = p.usize("points", 2001)?;

    // State-dependent kicks toward each other, returning to rest: a sin²
    // envelope keeps the trajectories smooth and closed.
    let envelope = move |t: f64| (std::f64::consts::PI * t / tau).sin().powi(2);
    let x1 = PulseProfile::from_fn(0.0, tau, points, |t| amplitude * envelope(t))?;
    let x2 = PulseProfile::from_fn(0.0, tau, points, |t| -amplitude * envelope(t))?;
    let res = pushgate_phase(d, &x1, &x2)?;

    let results = json!({
        "branch_phases": {
            "00": res.branch_phases[0],
            "01": res.branch_phases[1],
            "10": res.branch_phases[2],
            "11": res.branch_phases[3],
        },
        "conditional_phase": res.conditional_phase,
        "min_separation_over_d": res.min_separation_over_d,
        "max_displacement_over_d": res.max_displacement_over_d,
    });
    Ok(CommandOutput::new(results))
}

// ---------------------------------------------------------------------------
// neutral-gate
// ---------------------------------------------------------------------------

pub const NEUTRAL_KEYS: &[&str] = &["a-s", "mass", "a0", "nu", "tau", "points", "separation"];

pub fn neutral_gate(p: &Params) -> Result<CommandOutput, CliError> {
    let a_s = p.f64("a-s", 0.01)?;
    let mass = p.f64("mass", 1.0)?;
    let a0 = p.f64("a0", 1.0)?;
    let nu = p.f64("nu", 1.0)?;
    let tau = p.f64("tau", 2.5)?;
    let points = p.usize("points", 501)?;
    let separation = p.f64("separation", 0.0)?;

    // Hold the state-selected wells at a fixed separation for time tau.
    let x_a = PulseProfile::from_fn(0.0, tau, points, |_| 0.0)?;
    let x_b = PulseProfile::from_fn(0.0, tau, points, |_| separation)?;
    let cfg = CollisionConfig { a_s, mass, a0, nu, x_a, x_b };
    let phase = collisional_phase(&cfg)?;

    // Single-particle kinematic phases cancel out of the conditional phase,
    // so the gate table is driven by the interaction phase alone.
    let table = collision_gate_table(0.0, 0.0, phase.phase);
    let results = json!({
        "phase": phase.phase,
        "phase_closed_form": phase.phase_closed_form,
        "max_energy_shift": phase.max_energy_shift,
        "adiabaticity_ratio": phase.adiabaticity_ratio,
        "adiabatic": phase.adiabatic,
        "conditional_phase": conditional_phase(&table),
        "entangling_power": entangling_power(&table),
        "local_product_deviation": local_product_deviation(&table),
    });
    Ok(CommandOutput::new(results))
}

// ---------------------------------------------------------------------------
// rydberg
// ---------------------------------------------------------------------------

pub const RYDBERG_KEYS: &[&str] =
    &["u", "omega1", "omega2", "gamma", "delta1", "delta2", "n", "distance-um"];

pub fn rydberg(p: &Params) -> Result<CommandOutput, CliError> {
    let omega1 = p.f64("omega1", 1.0)?;
    let omega2 = p.f64("omega2", 1.0)?;
    let gamma = p.f64("gamma", 0.0)?;
    let delta1 = p.f64("delta1", 0.0)?;
    let delta2 = p.f64("delta2", 0.0)?;

    let n_opt = p.opt_u32("n")?;
    let r_opt = p.opt_f64("distance-um")?;
    let u_explicit = p.opt_f64("u")?;

    let (u, si) = match (n_opt, r_opt) {
        (Some(n), Some(r_um)) => {
            if u_explicit.is_some() {
                return Err(CliError::Config(
                    "give either --u directly or (--n, --distance-um), not both".into(),
                ));
            }
            let cfg = RydbergConfig { n, r_dist: r_um * 1e-6, omega1, omega2, gamma };
            let u = cfg.u_freq()?;
            let si = json!({
                "n": n,
                "distance_um": r_um,
                "u_rad_per_s": u,
                "dipole_force_newtons": cfg.dipole_force()?,
            });
            (u, Some(si))
        }
        (None, None) => (p.f64("u", -100.0)?, None),
        _ => {
            return Err(CliError::Config(
                "--n and --distance-um must be given together".into(),
            ))
        }
    };

    let params = RydbergGateParams { u, omega1, omega2, gamma, delta1, delta2 };
    let r = rydberg_gate_sim(&params)?;

    let labels = ["gg", "ge", "eg", "ee"];
    let named = |vals: [f64; 4]| -> Value {
        let mut map = serde_json::Map::new();
        for (label, v) in labels.iter().zip(vals) {
            map.insert(label.to_string(), json!(v));
        }
        Value::Object(map)
    };

    let mut results = json!({
        "u": u,
        "branch_phases": named(r.branch_phases),
        "branch_loss": named(r.branch_loss),
        "branch_leakage": named(r.branch_leakage),
        "max_rr_population": r.max_rr_population,
        "phi_tilde_estimate": r.phi_tilde_estimate,
        "gate_duration": r.gate_duration,
        "regime_ratio": r.regime_ratio,
        "in_blockade_regime": r.in_blockade_regime,
    });
    if let Some(si) = si {
        results["si"] = si;
    }
    Ok(CommandOutput::new(results))
}

// ---------------------------------------------------------------------------
// cavity-transfer
// ---------------------------------------------------------------------------

pub const CAVITY_KEYS: &[&str] =
    &["kappa", "t-half", "points", "seed-amplitude", "g-cap", "pulse"];

pub fn cavity_transfer(p: &Params) -> Result<CommandOutput, CliError> {
    let kappa = p.f64("kappa", 1.0)?;
    let t_half = p.f64("t-half", 20.0)?;
    let points = p.usize("points", 40_001)?;
    let epsilon = p.f64("seed-amplitude", 1e-6)?;
    let g_cap = p.f64("g-cap", 20.0 * kappa)?;
    let pulse = p.string("pulse", "sigmoid")?;

    let g1 = match pulse.as_str() {
        "sigmoid" => sigmoid_pulse(kappa / 2.0, 1.0 / kappa, -t_half, t_half, points)?,
        "symmetric" => symmetric_emitter_pulse(kappa, t_half, points)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown pulse \"{other}\" (expected sigmoid or symmetric)"
            )))
        }
    };
    let rec = receiver_pulse_from_dark_state_with(&g1, kappa, epsilon, g_cap)?;
    let couplings = NodeCouplings::new(g1.clone(), rec.g2.clone(), kappa)?;
    let record = propagate(&couplings, &TransferState::excitation_start())?;

    let final_norm = record.final_state.norm_sqr();
    let bookkeeping = (record.jump_probability + final_norm - 1.0).abs();

    let results = json!({
        "transfer_fidelity": record.transfer_fidelity(),
        "jump_probability": record.jump_probability,
        "max_dark_residual": record.max_dark_residual,
        "bookkeeping_residual": bookkeeping,
        "peak_g2": rec.peak_g2,
        "final_populations": {
            "alpha1": record.final_state.alpha1.norm_sqr(),
            "alpha2": record.final_state.alpha2.norm_sqr(),
            "beta1": record.final_state.beta1.norm_sqr(),
            "beta2": record.final_state.beta2.norm_sqr(),
        },
    });

    // The couplings drive real amplitudes from a real start, so the real
    // parts carry the whole trajectory.
    let rows: Vec<Vec<f64>> = record
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let s = &record.states[i];
            vec![
                t,
                g1.value(t),
                rec.g2.value(t),
                s.alpha1.re,
                s.alpha2.re,
                s.beta1.re,
                s.beta2.re,
                record.jump_density[i],
            ]
        })
        .collect();
    let curve = Curve {
        header: &["t", "g1", "g2", "alpha1", "alpha2", "beta1", "beta2", "jump_density"],
        rows,
    };
    Ok(CommandOutput::with_curve(results, curve))
}

// ---------------------------------------------------------------------------
// repeater
// ---------------------------------------------------------------------------

pub const REPEATER_KEYS: &[&str] = &[
    "eta-s",
    "L",
    "n",
    "l0",
    "p-c",
    "eta-p-prime",
    "eta-a",
    "p-dc",
    "t-delta",
    "optimize-L0",
    "trials",
];

pub fn repeater(p: &Params, seed: u64) -> Result<CommandOutput, CliError> {
    let eta_s = p.f64("eta-s", 2.0 / 3.0)?;
    let l = p.f64("L", 100.0)?;
    let n = p.u32("n", 4)?;
    let l0 = p.f64("l0", l / 2.0_f64.powi(n as i32))?;
    let p_c = p.f64("p-c", 0.5)?;
    let eta_p_prime = p.f64("eta-p-prime", 1.0)?;
    let eta_a = p.f64("eta-a", 1.0)?;
    let p_dc = p.f64("p-dc", 0.0)?;
    let t_delta = p.f64("t-delta", 1.0)?;
    let optimize = p.bool("optimize-L0", false)?;
    let trials = p.usize("trials", 0)?;

    let params = RepeaterParams {
        p_c,
        t_delta,
        eta_p_prime,
        l_att: 1.0,
        l0,
        eta_s,
        eta_a,
        p_dc,
        n,
    };
    let chain = chain_analysis(&params)?;

    let mut results = json!({
        "chain": {
            "p_list": chain.p_list,
            "c_n": chain.c_n,
            "delta_f_n": chain.delta_f_n,
            "p_a": chain.p_a,
            "t0": chain.t0,
            "t_n_over_t0": chain.t_n / chain.t0,
            "t_tot": chain.t_tot,
            "t_tot_over_tcon_log10": chain.log10_t_ratio_exact,
            "t_tot_over_tcon_log10_approx": chain.log10_t_ratio_approx,
            "approx_minus_exact": chain.approx_minus_exact,
        },
        "direct_log10": direct_log10_t_ratio(l),
        "optimum": Value::Null,
        "mc": Value::Null,
    });

    if optimize {
        let opt = optimize_segment_length(eta_s, l)?;
        results["optimum"] = json!({
            "l0_opt_over_latt": opt.l0_opt_over_latt,
            "log10_t_ratio": opt.log10_t_ratio,
            "fitted_power": opt.fitted_power,
        });
    }

    if trials > 0 {
        let mc = monte_carlo_chain(&params, trials, seed)?;
        results["mc"] = json!({
            "trials": mc.trials,
            "mean_rounds": mc.mean_rounds,
            "mean_total_time": mc.mean_total_time,
            "closed_form_rounds": mc.closed_form_rounds,
            "ratio_to_closed_form": mc.ratio_to_closed_form,
            "p_gen": mc.p_gen,
            "p_swaps": mc.p_swaps,
            "gen_attempts": mc.gen_attempts,
            "gen_successes": mc.gen_successes,
            "swap_attempts": mc.swap_attempts,
            "swap_successes": mc.swap_successes,
        });
    }

    // Scaling sweep: total-time decades for the optimized chain against the
    // direct-transmission baseline, out to 100 attenuation lengths.
    let mut rows = Vec::new();
    for step in 1..=10 {
        let l_i = 10.0 * step as f64;
        let opt = optimize_segment_length(eta_s, l_i)?;
        rows.push(vec![l_i, opt.log10_t_ratio, direct_log10_t_ratio(l_i)]);
    }
    let curve = Curve {
        header: &["l_over_latt", "log10_t_repeater", "log10_t_direct"],
        rows,
    };
    Ok(CommandOutput::with_curve(results, curve))
}

// ---------------------------------------------------------------------------
// memory
// ---------------------------------------------------------------------------

pub const MEMORY_KEYS: &[&str] =
    &["kappa0", "shape", "rate", "duration", "points", "floor", "round-trip"];

fn build_shape(
    name: &str,
    rate: f64,
    duration: f64,
    points: usize,
) -> Result<PulseProfile, CliError> {
    if !(duration > 0.0) {
        return Err(CliError::Config("--duration must be positive".into()));
    }
    let mid = duration / 2.0;
    let profile = match name {
        "falling-exp" => PulseProfile::from_fn(0.0, duration, points, |t| (-rate * t).exp()),
        "rising-exp" => {
            PulseProfile::from_fn(0.0, duration, points, |t| (rate * (t - duration)).exp())
        }
        "gaussian" => {
            PulseProfile::from_fn(0.0, duration, points, |t| (-(rate * (t - mid)).powi(2)).exp())
        }
        "sech" => PulseProfile::from_fn(0.0, duration, points, |t| 1.0 / (rate * (t - mid)).cosh()),
        "sine2" => PulseProfile::from_fn(0.0, duration, points, |t| {
            (std::f64::consts::PI * t / duration).sin().powi(2)
        }),
        other => {
            return Err(CliError::Config(format!(
                "unknown shape \"{other}\" (expected falling-exp, rising-exp, gaussian, sech, or sine2)"
            )))
        }
    };
    profile.map_err(CliError::from)
}

pub fn memory(p: &Params) -> Result<CommandOutput, CliError> {
    let kappa0 = p.f64("kappa0", 1.0)?;
    let shape_name = p.string("shape", "falling-exp")?;
    let rate = p.f64("rate", 0.5)?;
    let duration = p.f64("duration", 20.0)?;
    let points = p.usize("points", 4001)?;
    let floor = p.f64("floor", 1e-8)?;
    let round_trip = p.bool("round-trip", false)?;

    let raw = build_shape(&shape_name, rate, duration, points)?;
    let f_in = ModeShape::with_floor(raw.clone(), floor)?;
    let schedule = impedance_match(&f_in, kappa0)?;
    let write = write_map(&f_in, &schedule)?;

    let mut results = json!({
        "mapping_inefficiency": write.mapping_inefficiency,
        "survival_amplitude": write.survival_amplitude,
        "absorption_amplitude": write.absorption_amplitude,
        "kernel_energy": write.kernel_energy,
        "max_proportionality_defect": write.max_proportionality_defect,
        "total_exposure": schedule.total_exposure(),
        "round_trip": Value::Null,
    });

    if round_trip {
        // Store the time reverse of the requested shape, then release into
        // the requested shape itself.
        let write_shape = ModeShape::with_floor(raw.reversed(), floor)?;
        let w_sched = impedance_match(&write_shape, kappa0)?;
        let w_map = write_map(&write_shape, &w_sched)?;
        let read = read_out(&f_in, kappa0)?;
        let through = w_map.absorption_amplitude * read.release_amplitude;
        results["round_trip"] = json!({
            "write_inefficiency": w_map.mapping_inefficiency,
            "read_inefficiency": read.schedule.mapping_inefficiency,
            "release_amplitude": read.release_amplitude,
            "vacuum_amplitude": read.vacuum_amplitude,
            "through_amplitude": through,
            "through_probability": through * through,
        });
    }

    let shape_profile = f_in.profile();
    let rows: Vec<Vec<f64>> = shape_profile
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            vec![
                t,
                shape_profile.samples()[i],
                schedule.kappa_prime.samples()[i],
                write.kernel.samples()[i],
            ]
        })
        .collect();
    let curve = Curve { header: &["t", "f_in", "kappa_prime", "kernel"], rows };
    Ok(CommandOutput::with_curve(results, curve))
}

// ---------------------------------------------------------------------------
// cv-teleport
// ---------------------------------------------------------------------------

pub const CV_KEYS: &[&str] = &[
    "kappa-c",
    "kappa-c1",
    "eta-t",
    "eta-d",
    "input-x",
    "input-p",
    "rounds",
    "rho-n",
    "lambda0",
    "l-a",
    "gamma-s",
    "delta",
];

pub fn cv_teleport(p: &Params) -> Result<CommandOutput, CliError> {
    let si_values = [
        p.opt_f64("rho-n")?,
        p.opt_f64("lambda0")?,
        p.opt_f64("l-a")?,
        p.opt_f64("gamma-s")?,
        p.opt_f64("delta")?,
    ];
    let si_given = si_values.iter().filter(|v| v.is_some()).count();

    let (kappa_c, si) = if si_given == 5 {
        if p.opt_f64("kappa-c")?.is_some() {
            return Err(CliError::Config(
                "give either --kappa-c or the five coupling inputs (--rho-n, --lambda0, --l-a, --gamma-s, --delta), not both".into(),
            ));
        }
        let [rho_n, lambda0, l_a, gamma_s, delta] = si_values.map(|v| v.unwrap());
        let kc = cv::kappa_c(rho_n, lambda0, l_a, gamma_s, delta)?;
        let eps = cv::pass_loss_estimate(kc, rho_n, l_a, lambda0)?;
        (kc, Some(json!({ "kappa_c_from_inputs": kc, "pass_loss_estimate": eps })))
    } else if si_given > 0 {
        return Err(CliError::Config(
            "the coupling inputs --rho-n, --lambda0, --l-a, --gamma-s, --delta must be given together".into(),
        ));
    } else {
        (p.f64("kappa-c", 5.0)?, None)
    };

    let eta_t = p.f64("eta-t", 0.0)?;
    let eta_d = p.f64("eta-d", 0.0)?;
    let input = (p.f64("input-x", 0.0)?, p.f64("input-p", 0.0)?);
    let rounds = p.u32("rounds", 2)?;
    // The lossless closed form describes matched readout and entangling
    // passes, so without transmission loss the readout defaults to the same
    // coupling; with loss it defaults to the strong-readout regime the
    // loss-hardened form assumes.
    let kappa_c1 = match p.opt_f64("kappa-c1")? {
        Some(k1) => Some(k1),
        None if eta_t == 0.0 => Some(kappa_c),
        None => None,
    };

    let losses = TeleportLosses::new(eta_d, eta_t)?;
    let report = cv::teleport_cv(input, &losses, kappa_c1, kappa_c)?;
    let epr = cv::bell_measure_epr(&PassParams::lossless(kappa_c)?, rounds, true)?;

    let mut results = json!({
        "kappa_c": kappa_c,
        "r": epr.r_analytic,
        "r_oracle": epr.r_oracle,
        "var_x_minus": epr.var_x_minus,
        "var_p_plus": epr.var_p_plus,
        "f_analytic": report.f_analytic,
        "f_oracle": report.f_oracle,
        "eta_t": eta_t,
        "eta_d": eta_d,
        "kappa_c1": report.kappa_c1,
        "kappa_c2": report.kappa_c2,
        "kappa_c2_opt": report.kappa_c2_opt,
        "fidelity_bound": report.fidelity_bound,
        "beats_classical": cv::classical_benchmark(report.f_oracle),
        "input_mean": [report.input_mean.0, report.input_mean.1],
        "output_mean": [report.output_mean.0, report.output_mean.1],
        "added_noise_x": report.added_noise_x,
        "added_noise_p": report.added_noise_p,
    });
    if let Some(si) = si {
        results["si"] = si;
    }
    Ok(CommandOutput::new(results))
}

// ---------------------------------------------------------------------------
// snr
// ---------------------------------------------------------------------------

pub const SNR_KEYS: &[&str] =
    &["config", "n-a", "g", "kappa", "gamma-s", "rho-n", "l-a", "k-s"];

pub fn run_snr(p: &Params) -> Result<CommandOutput, CliError> {
    let config_name = p.string("config", "free-space")?;
    let config = match config_name.as_str() {
        "cavity-write" => SnrConfig::CavityWrite,
        "cavity-read" => SnrConfig::CavityRead,
        "free-space" => SnrConfig::FreeSpace,
        other => {
            return Err(CliError::Config(format!(
                "unknown config \"{other}\" (expected cavity-write, cavity-read, or free-space)"
            )))
        }
    };
    let inputs = SnrInputs {
        n_a: p.f64("n-a", 1000.0)?,
        g: p.f64("g", 1.0)?,
        kappa: p.f64("kappa", 10.0)?,
        gamma_s: p.f64("gamma-s", 1.0)?,
        rho_n: p.f64("rho-n", 5e18)?,
        l_a: p.f64("l-a", 0.02)?,
        k_s: p.f64("k-s", 2.0 * std::f64::consts::PI / 0.8e-6)?,
    };
    let value = snr(config, &inputs)?;
    Ok(CommandOutput::new(json!({ "config": config_name, "snr": value })))
}

// ---------------------------------------------------------------------------
// acceptance
// ---------------------------------------------------------------------------

pub const ACCEPTANCE_KEYS: &[&str] = &[];

pub fn run_acceptance() -> Result<CommandOutput, CliError> {
    let reports = acceptance::run_all();
    let mut failures = 0;
    for report in &reports {
        eprintln!("{}", report.line());
        if !report.passed() {
            failures += 1;
        }
    }

    let gates: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "number": r.number,
                "name": r.name,
                "passed": r.passed(),
                "elapsed_s": r.elapsed_s,
                "budget_s": r.budget_s,
                "checks": r.checks.iter().map(|c| json!({
                    "label": c.label,
                    "passed": c.passed,
                    "detail": c.detail,
                })).collect::<Vec<Value>>(),
            })
        })
        .collect();

    Ok(CommandOutput {
        results: json!({ "passed": failures == 0, "gates": gates }),
        curve: None,
        gate_failures: failures,
    })
}
