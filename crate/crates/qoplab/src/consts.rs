//! Physical constants (SI) shared by the gate-physics modules.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Coulomb coupling e²/(4πε₀), J·m.
pub const COULOMB_E2: f64 = 2.307_077_552e-28;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
