//! `qoplab` — one binary, thirteen subcommands, each producing a run record
//! that embeds the fully resolved configuration and the RNG seed, so any
//! record can be replayed exactly. Results go to stdout by default, to a
//! file (written atomically) with `--output`, and to
//! `$QOPLAB_OUT_DIR/<command>.<ext>` when only that variable is set.
//!
//! Exit codes: 0 success; 1 acceptance-gate failure; 2 invalid
//! configuration; 3 computation error; 4 I/O failure.

mod commands;
mod output;
mod params;

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use commands::CommandOutput;
use output::{emit_curve, resolve_target, run_record, write_payload};
use params::Params;

#[derive(Debug)]
pub enum CliError {
    /// Bad flag values, malformed config files, unknown keys, or an
    /// unsupported command/format combination.
    Config(String),
    /// The library rejected the physics inputs or a computation failed.
    Module(qoplab::QopError),
    /// The payload could not be written.
    Io(String),
    /// Acceptance gates failed; the record was still written.
    Gate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Gate(_) => 1,
            CliError::Config(_) => 2,
            CliError::Module(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Module(e) => write!(f, "computation failed: {e}"),
            CliError::Io(msg) => write!(f, "i/o failure: {msg}"),
            CliError::Gate(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<qoplab::QopError> for CliError {
    fn from(e: qoplab::QopError) -> Self {
        CliError::Module(e)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "qoplab",
    version,
    about = "Numerical laboratory for entanglement purification, teleportation, \
             gate physics, repeater scaling, and light-matter interfaces"
)]
struct Cli {
    /// RNG seed for the stochastic commands; recorded in every run record.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path; "-" streams to stdout. Default: stdout, or
    /// $QOPLAB_OUT_DIR/<command>.<ext> when that variable is set.
    #[arg(long, global = true)]
    output: Option<String>,

    /// json: full run record. csv: the command's curve (purify, repeater,
    /// memory, cavity-transfer only).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// JSON file of parameter defaults (flat object keyed by long flag
    /// names); command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Entanglement purification: the analytic map and noisy-circuit rounds.
    Purify(PurifyArgs),
    /// Qubit teleportation over a Werner-state resource.
    Teleport(TeleportArgs),
    /// Error correction: three-qubit recovery, code-size bound, checkpointed
    /// classical storage.
    Qec(QecArgs),
    /// Trapped-ion conditional phase gate and its error scaling.
    IontrapGate(IontrapArgs),
    /// State-dependent Coulomb push gate between two trapped ions.
    Pushgate(PushgateArgs),
    /// Cold-collision phase gate between neutral atoms in movable wells.
    NeutralGate(NeutralArgs),
    /// Dipole-blockade phase gate between two Rydberg-addressed atoms.
    Rydberg(RydbergArgs),
    /// Photon-mediated excitation transfer between two cavity nodes.
    CavityTransfer(CavityArgs),
    /// Ensemble repeater chain: scaling analysis and Monte Carlo timing.
    Repeater(RepeaterArgs),
    /// Light storage in an atomic ensemble behind a tunable coupling.
    Memory(MemoryArgs),
    /// Continuous-variable teleportation through probe-light passes.
    CvTeleport(CvArgs),
    /// Signal-to-noise figures for ensemble readout.
    Snr(SnrArgs),
    /// Run every acceptance gate; one PASS/FAIL line per gate on stderr.
    Acceptance,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Purify(_) => "purify",
            Cmd::Teleport(_) => "teleport",
            Cmd::Qec(_) => "qec",
            Cmd::IontrapGate(_) => "iontrap-gate",
            Cmd::Pushgate(_) => "pushgate",
            Cmd::NeutralGate(_) => "neutral-gate",
            Cmd::Rydberg(_) => "rydberg",
            Cmd::CavityTransfer(_) => "cavity-transfer",
            Cmd::Repeater(_) => "repeater",
            Cmd::Memory(_) => "memory",
            Cmd::CvTeleport(_) => "cv-teleport",
            Cmd::Snr(_) => "snr",
            Cmd::Acceptance => "acceptance",
        }
    }

    fn has_curve(&self) -> bool {
        matches!(
            self,
            Cmd::Purify(_) | Cmd::Repeater(_) | Cmd::Memory(_) | Cmd::CavityTransfer(_)
        )
    }
}

#[derive(Args)]
struct PurifyArgs {
    /// Initial pair fidelity.
    #[arg(long)]
    f0: Option<f64>,
    /// Number of purification rounds to simulate.
    #[arg(long)]
    rounds: Option<u64>,
    /// Depolarization probability of each two-pair gate block.
    #[arg(long)]
    p_gate: Option<f64>,
    /// Readout error probability of each measurement.
    #[arg(long)]
    p_meas: Option<f64>,
}

#[derive(Args)]
struct TeleportArgs {
    /// Fidelity of the Werner resource pair.
    #[arg(long)]
    fidelity: Option<f64>,
    /// Polar angle of the input qubit.
    #[arg(long)]
    theta: Option<f64>,
    /// Azimuthal angle of the input qubit.
    #[arg(long)]
    phi: Option<f64>,
    /// Extra random input states to sample (seeded).
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args)]
struct QecArgs {
    /// Total decay exposure γt of the storage window.
    #[arg(long)]
    gamma_t: Option<f64>,
    /// Number of correction checkpoints splitting the window.
    #[arg(long)]
    intervals: Option<u64>,
    /// Monte Carlo trials for the checkpointed-storage estimate.
    #[arg(long)]
    trials: Option<u64>,
    /// Logical qubits for the code-size bound.
    #[arg(long)]
    k: Option<u64>,
    /// Correctable errors for the code-size bound.
    #[arg(long)]
    t: Option<u64>,
}

#[derive(Args)]
struct IontrapArgs {
    /// Drive strength over trap frequency for the error-law check.
    #[arg(long)]
    omega_over_nu: Option<f64>,
    /// Lamb-Dicke parameter.
    #[arg(long)]
    eta: Option<f64>,
    /// Pulse-area multiplier (k = 1 is a pi pulse).
    #[arg(long)]
    k: Option<f64>,
    /// Phonon-space truncation for the full-Hamiltonian integration.
    #[arg(long)]
    phonon_dim: Option<u64>,
}

#[derive(Args)]
struct PushgateArgs {
    /// Rest separation of the two traps.
    #[arg(long)]
    d: Option<f64>,
    /// Peak state-dependent displacement toward the partner ion.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Duration of the push (sin^2 envelope, closed trajectory).
    #[arg(long)]
    tau: Option<f64>,
    /// Samples along the trajectory.
    #[arg(long)]
    points: Option<u64>,
}

#[derive(Args)]
struct NeutralArgs {
    /// s-wave scattering length.
    #[arg(long)]
    a_s: Option<f64>,
    /// Atomic mass.
    #[arg(long)]
    mass: Option<f64>,
    /// Ground-state width of each well.
    #[arg(long)]
    a0: Option<f64>,
    /// Trap frequency (gauges adiabaticity).
    #[arg(long)]
    nu: Option<f64>,
    /// Hold time at the working separation.
    #[arg(long)]
    tau: Option<f64>,
    /// Samples along the hold.
    #[arg(long)]
    points: Option<u64>,
    /// Distance between the state-selected wells during the hold.
    #[arg(long)]
    separation: Option<f64>,
}

#[derive(Args)]
struct RydbergArgs {
    /// Dipole-dipole shift of the doubly excited state (drive units).
    #[arg(long)]
    u: Option<f64>,
    /// Rabi frequency on atom 1.
    #[arg(long)]
    omega1: Option<f64>,
    /// Rabi frequency on atom 2.
    #[arg(long)]
    omega2: Option<f64>,
    /// Excited-state loss rate.
    #[arg(long)]
    gamma: Option<f64>,
    /// Detuning on atom 1.
    #[arg(long)]
    delta1: Option<f64>,
    /// Detuning on atom 2.
    #[arg(long)]
    delta2: Option<f64>,
    /// Principal quantum number; computes the shift from first principles
    /// together with --distance-um (then omegas are in rad/s).
    #[arg(long)]
    n: Option<u64>,
    /// Interatomic distance in micrometers (with --n).
    #[arg(long)]
    distance_um: Option<f64>,
}

#[derive(Args)]
struct CavityArgs {
    /// Cavity decay rate of both nodes.
    #[arg(long)]
    kappa: Option<f64>,
    /// Half-width of the transfer window.
    #[arg(long)]
    t_half: Option<f64>,
    /// Grid points across the window.
    #[arg(long)]
    points: Option<u64>,
    /// Seed amplitude regularizing the dark-state receiver construction.
    #[arg(long)]
    seed_amplitude: Option<f64>,
    /// Cap on the receiver coupling magnitude.
    #[arg(long)]
    g_cap: Option<f64>,
    /// Emitter pulse family: sigmoid or symmetric.
    #[arg(long)]
    pulse: Option<String>,
}

#[derive(Args)]
struct RepeaterArgs {
    /// Entanglement-swap efficiency.
    #[arg(long)]
    eta_s: Option<f64>,
    /// Total chain length in attenuation lengths.
    #[arg(long = "L")]
    l: Option<f64>,
    /// Nesting depth (the chain spans 2^n segments).
    #[arg(long)]
    n: Option<u64>,
    /// Segment length in attenuation lengths (default: L/2^n).
    #[arg(long)]
    l0: Option<f64>,
    /// Generation-attempt success prefactor per segment.
    #[arg(long)]
    p_c: Option<f64>,
    /// Detector efficiency inside the swap stations.
    #[arg(long)]
    eta_p_prime: Option<f64>,
    /// Detector efficiency at the application stage.
    #[arg(long)]
    eta_a: Option<f64>,
    /// Dark-count probability per application window.
    #[arg(long)]
    p_dc: Option<f64>,
    /// Duration of one generation attempt.
    #[arg(long)]
    t_delta: Option<f64>,
    /// Also optimize the segment length at fixed total length.
    #[arg(long = "optimize-L0", num_args = 0..=1, default_missing_value = "true")]
    optimize_l0: Option<bool>,
    /// Monte Carlo trials for the timing estimate (0 = skip).
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args)]
struct MemoryArgs {
    /// Peak coupling rate the schedule is matched against.
    #[arg(long)]
    kappa0: Option<f64>,
    /// Input mode shape: falling-exp, rising-exp, gaussian, sech, or sine2.
    #[arg(long)]
    shape: Option<String>,
    /// Shape rate parameter (decay rate or inverse width).
    #[arg(long)]
    rate: Option<f64>,
    /// Window length.
    #[arg(long)]
    duration: Option<f64>,
    /// Samples across the window.
    #[arg(long)]
    points: Option<u64>,
    /// Floor applied to compact-support shapes before matching.
    #[arg(long)]
    floor: Option<f64>,
    /// Also store the time-reversed shape and release into the shape itself.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    round_trip: Option<bool>,
}

#[derive(Args)]
struct CvArgs {
    /// Probe coupling per pass (sets both the resource squeezing and the
    /// Bell-measurement strength).
    #[arg(long)]
    kappa_c: Option<f64>,
    /// Strong coupling of the sender's readout pass (default: 100x the weak
    /// coupling).
    #[arg(long)]
    kappa_c1: Option<f64>,
    /// Transmission loss of the link.
    #[arg(long)]
    eta_t: Option<f64>,
    /// Detector loss at the probe measurements.
    #[arg(long)]
    eta_d: Option<f64>,
    /// Input position mean.
    #[arg(long)]
    input_x: Option<f64>,
    /// Input momentum mean.
    #[arg(long)]
    input_p: Option<f64>,
    /// Probe rounds for the resource-squeezing report.
    #[arg(long)]
    rounds: Option<u64>,
    /// Atomic number density (per cubic meter); with the other four coupling
    /// inputs this computes kappa-c from first principles.
    #[arg(long)]
    rho_n: Option<f64>,
    /// Probe wavelength in meters.
    #[arg(long)]
    lambda0: Option<f64>,
    /// Ensemble length in meters.
    #[arg(long)]
    l_a: Option<f64>,
    /// Spontaneous-emission rate of the probe transition.
    #[arg(long)]
    gamma_s: Option<f64>,
    /// Probe detuning, in the same unit as --gamma-s.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct SnrArgs {
    /// Readout configuration: cavity-write, cavity-read, or free-space.
    #[arg(long)]
    config: Option<String>,
    /// Atom number (cavity configurations).
    #[arg(long)]
    n_a: Option<f64>,
    /// Single-atom cavity coupling.
    #[arg(long)]
    g: Option<f64>,
    /// Cavity decay rate.
    #[arg(long)]
    kappa: Option<f64>,
    /// Spontaneous-emission rate.
    #[arg(long)]
    gamma_s: Option<f64>,
    /// Number density of the free-space ensemble (per cubic meter).
    #[arg(long)]
    rho_n: Option<f64>,
    /// Length of the free-space ensemble in meters.
    #[arg(long)]
    l_a: Option<f64>,
    /// Signal wave number (per meter).
    #[arg(long)]
    k_s: Option<f64>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_map = match &cli.config {
        Some(path) => params::load_config_file(path)?,
        None => Map::new(),
    };
    let seed = resolve_seed(cli.seed, &file_map)?;
    let output = resolve_output(cli.output, &file_map);
    let format = resolve_format(cli.format, &file_map)?;

    let name = cli.command.name();
    if format == Format::Csv && !cli.command.has_curve() {
        return Err(CliError::Config(format!(
            "no CSV curve is defined for \"{name}\"; use --format json"
        )));
    }

    let started = Instant::now();
    let (echo, out) = dispatch(&cli.command, &file_map, seed)?;
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    let (payload, ext) = match format {
        Format::Json => {
            let record = run_record(name, echo, seed, out.results, wall_time_ms);
            let mut text = serde_json::to_string_pretty(&record)
                .map_err(|e| CliError::Io(format!("cannot serialize the run record: {e}")))?;
            text.push('\n');
            (text, "json")
        }
        Format::Csv => {
            let curve = out.curve.as_ref().expect("curve support was checked above");
            (emit_curve(curve)?, "csv")
        }
    };

    let target = resolve_target(output.as_deref(), name, ext);
    write_payload(&target, &payload)?;

    if out.gate_failures > 0 {
        return Err(CliError::Gate(format!(
            "{} acceptance gate(s) failed",
            out.gate_failures
        )));
    }
    Ok(())
}

fn resolve_seed(cli: Option<u64>, file: &Map<String, Value>) -> Result<u64, CliError> {
    if let Some(seed) = cli {
        return Ok(seed);
    }
    match file.get("seed") {
        Some(v) => v
            .as_u64()
            .ok_or_else(|| CliError::Config("\"seed\" must be a non-negative integer".into())),
        None => Ok(0),
    }
}

fn resolve_output(cli: Option<String>, file: &Map<String, Value>) -> Option<String> {
    cli.or_else(|| file.get("output").and_then(|v| v.as_str()).map(str::to_string))
}

fn resolve_format(cli: Option<Format>, file: &Map<String, Value>) -> Result<Format, CliError> {
    if let Some(fmt) = cli {
        return Ok(fmt);
    }
    match file.get("format") {
        Some(v) => match v.as_str() {
            Some("json") => Ok(Format::Json),
            Some("csv") => Ok(Format::Csv),
            _ => Err(CliError::Config("\"format\" must be \"json\" or \"csv\"".into())),
        },
        None => Ok(Format::Json),
    }
}

fn dispatch(
    cmd: &Cmd,
    file: &Map<String, Value>,
    seed: u64,
) -> Result<(Map<String, Value>, CommandOutput), CliError> {
    match cmd {
        Cmd::Purify(a) => {
            let mut p = Params::new(file, commands::PURIFY_KEYS)?;
            p.set_f64("f0", a.f0)?;
            p.set_u64("rounds", a.rounds);
            p.set_f64("p-gate", a.p_gate)?;
            p.set_f64("p-meas", a.p_meas)?;
            let out = commands::purify(&p)?;
            Ok((p.echo(), out))
        }
        Cmd::Teleport(a) => {
            let mut p = Params::new(file, commands::TELEPORT_KEYS)?;
            p.set_f64("fidelity", a.fidelity)?;
            p.set_f64("theta", a.theta)?;
            p.set_f64("phi", a.phi)?;
            p.set_u64("samples", a.samples);
            let out = commands::run_teleport(&p, seed)?;
            Ok((p.echo(), out))
        }
        Cmd::Qec(a) => {
            let mut p = Params::new(file, commands::QEC_KEYS)?;
            p.set_f64("gamma-t", a.gamma_t)?;
            p.set_u64("intervals", a.intervals);
            p.set_u64("trials", a.trials);
            p.set_u64("k", a.k);
            p.set_u64("t", a.t);
            let out = commands::qec(&p, seed)?;
            Ok((p.echo(), out))
        }
        Cmd::IontrapGate(a) => {
            let mut p = Params::new(file, commands::IONTRAP_KEYS)?;
            p.set_f64("omega-over-nu", a.omega_over_nu)?;
            p.set_f64("eta", a.eta)?;
            p.set_f64("k", a.k)?;
            p.set_u64("phonon-dim", a.phonon_dim);
            let out = commands::iontrap_gate(&p)?;
            Ok((p.echo(), out))
        }
        Cmd::Pushgate(a) => {
            let mut p = Params::new(file, commands::PUSHGATE_KEYS)?;
            p.set_f64("d", a.d)?;
            p.set_f64("amplitude", a.amplitude)?;
            p.set_f64("tau", a.tau)?;
            p.set_u64("points", a.points);
            let out = commands::pushgate(&p)?;
            Ok((p.echo(), out))
        }
        Cmd::NeutralGate(a) => {
            let mut p = Params::new(file, commands::NEUTRAL_KEYS)?;
            p.set_f64("a-s", a.a_s)?;
            p.set_f64("mass", a.mass)?;
            p.set_f64("a0", a.a0)?;
            p.set_f64("nu", a.nu)?;
            p.set_f64("tau", a.tau)?;
            p.set_u64("points", a.points);
            p.set_f64("separation", a.separation)?;
            let out = commands::neutral_gate(&p)?;
            Ok((p.echo(), out))
        }
        Cmd::Rydberg(a) => {
            let mut p = Params::new(file, commands::RYDBERG_KEYS)?;
            p.set_f64("u", a.u)?;
            p.set_f64("omega1", a.omega1)?;
            p.set_f64("omega2", a.omega2)?;
            p.set_f64("gamma", a.gamma)?;
            p.set_f64("delta1", a.delta1)?;
            p.set_f64("delta2", a.delta2)?;
            p.set_u64("n", a.n);
            p.set_f64("distance-um", a.distance_um)?;
            let out = commands::rydberg(&p)?;
            Ok((p.echo(), out))
        }
        Cmd::CavityTransfer(a) => {
            let mut p = Params::new(file, commands::CAVITY_KEYS)?;
            p.set_f64("kappa", a.kappa)?;
            p.set_f64("t-half", a.t_half)?;
            p.set_u64("points", a.points);
            p.set_f64("seed-amplitude", a.seed_amplitude)?;
            p.set_f64("g-cap", a.g_cap)?;
            p.set_string("pulse", a.pulse.as_deref());
            let out = commands::cavity_transfer(&p)?;
            Ok((p.echo(), out))
        }
        Cmd::Repeater(a) => {
            let mut p = Params::new(file, commands::REPEATER_KEYS)?;
            p.set_f64("eta-s", a.eta_s)?;
            p.set_f64("L", a.l)?;
            p.set_u64("n", a.n);
            p.set_f64("l0", a.l0)?;
            p.set_f64("p-c", a.p_c)?;
            p.set_f64("eta-p-prime", a.eta_p_prime)?;
            p.set_f64("eta-a", a.eta_a)?;
            p.set_f64("p-dc", a.p_dc)?;
            p.set_f64("t-delta", a.t_delta)?;
            p.set_bool("optimize-L0", a.optimize_l0);
            p.set_u64("trials", a.trials);
            let out = commands::repeater(&p, seed)?;
            Ok((p.echo(), out))
        }
        Cmd::Memory(a) => {
            let mut p = Params::new(file, commands::MEMORY_KEYS)?;
            p.set_f64("kappa0", a.kappa0)?;
            p.set_string("shape", a.shape.as_deref());
            p.set_f64("rate", a.rate)?;
            p.set_f64("duration", a.duration)?;
            p.set_u64("points", a.points);
            p.set_f64("floor", a.floor)?;
            p.set_bool("round-trip", a.round_trip);
            let out = commands::memory(&p)?;
            Ok((p.echo(), out))
        }
        Cmd::CvTeleport(a) => {
            let mut p = Params::new(file, commands::CV_KEYS)?;
            p.set_f64("kappa-c", a.kappa_c)?;
            p.set_f64("kappa-c1", a.kappa_c1)?;
            p.set_f64("eta-t", a.eta_t)?;
            p.set_f64("eta-d", a.eta_d)?;
            p.set_f64("input-x", a.input_x)?;
            p.set_f64("input-p", a.input_p)?;
            p.set_u64("rounds", a.rounds);
            p.set_f64("rho-n", a.rho_n)?;
            p.set_f64("lambda0", a.lambda0)?;
            p.set_f64("l-a", a.l_a)?;
            p.set_f64("gamma-s", a.gamma_s)?;
            p.set_f64("delta", a.delta)?;
            let out = commands::cv_teleport(&p)?;
            Ok((p.echo(), out))
        }
        Cmd::Snr(a) => {
            let mut p = Params::new(file, commands::SNR_KEYS)?;
            p.set_string("config", a.config.as_deref());
            p.set_f64("n-a", a.n_a)?;
            p.set_f64("g", a.g)?;
            p.set_f64("kappa", a.kappa)?;
            p.set_f64("gamma-s", a.gamma_s)?;
            p.set_f64("rho-n", a.rho_n)?;
            p.set_f64("l-a", a.l_a)?;
            p.set_f64("k-s", a.k_s)?;
            let out = commands::run_snr(&p)?;
            Ok((p.echo(), out))
        }
        Cmd::Acceptance => {
            let p = Params::new(file, commands::ACCEPTANCE_KEYS)?;
            let out = commands::run_acceptance()?;
            Ok((p.echo(), out))
        }
    }
}
