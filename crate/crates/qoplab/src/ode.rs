//! Small numerical toolkit used by the continuous-dynamics modules: an
//! adaptive Dormand–Prince 5(4) integrator and a fixed-step RK4 for complex
//! state vectors, plus composite-Simpson quadrature on uniform grids.
//!
//! Exact matrix-exponential evolution (see [`crate::qstate::evolve`]) stays
//! the reference for time-independent generators; these integrators exist
//! for explicitly time-dependent ones and serve as the independent route in
//! cross-validation tests.

use crate::error::{QopError, Result};
use crate::qstate::{CVector, C64};

/// Controls for the adaptive integrator.
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveOpts {
    pub rtol: f64,
    pub atol: f64,
    /// Initial trial step; `None` picks (t1 − t0)/1000.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for AdaptiveOpts {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, h_init: None, max_steps: 50_000_000 }
    }
}

// Dormand–Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] =
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B5: [f64; 6] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

fn weighted_sum(y: &CVector, h: f64, terms: &[(f64, &CVector)]) -> CVector {
    let mut out = y.clone();
    for (w, k) in terms {
        out.axpy(C64::from(h * w), k, C64::new(1.0, 0.0));
    }
    out
}

/// Integrates dy/dt = f(t, y) from `t0` to `t1` with adaptive step control,
/// invoking `observer` after every accepted step (including the initial
/// state). Integration backwards in time (t1 < t0) is supported.
pub fn integrate_adaptive_observed<F, O>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y0: &CVector,
    opts: &AdaptiveOpts,
    observer: &mut O,
) -> Result<CVector>
where
    F: FnMut(f64, &CVector) -> CVector,
    O: FnMut(f64, &CVector),
{
    if !t0.is_finite() || !t1.is_finite() {
        return Err(QopError::Domain("integration bounds must be finite".into()));
    }
    let span = t1 - t0;
    if span == 0.0 {
        observer(t0, y0);
        return Ok(y0.clone());
    }
    let dir = span.signum();
    let mut h = opts.h_init.unwrap_or(span.abs() / 1000.0).abs() * dir;
    let mut t = t0;
    let mut y = y0.clone();
    observer(t, &y);

    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(QopError::Numerics(format!(
                "adaptive integrator exceeded {} steps (t = {t:.6})",
                opts.max_steps
            )));
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let k1 = f(t, &y);
        let k2 = f(t + C[0] * h, &weighted_sum(&y, h, &[(A2[0], &k1)]));
        let k3 = f(t + C[1] * h, &weighted_sum(&y, h, &[(A3[0], &k1), (A3[1], &k2)]));
        let k4 =
            f(t + C[2] * h, &weighted_sum(&y, h, &[(A4[0], &k1), (A4[1], &k2), (A4[2], &k3)]));
        let k5 = f(
            t + C[3] * h,
            &weighted_sum(&y, h, &[(A5[0], &k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]),
        );
        let k6 = f(
            t + C[4] * h,
            &weighted_sum(
                &y,
                h,
                &[(A6[0], &k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)],
            ),
        );
        let y5 = weighted_sum(
            &y,
            h,
            &[(B5[0], &k1), (B5[1], &k2), (B5[2], &k3), (B5[3], &k4), (B5[4], &k5), (B5[5], &k6)],
        );
        let k7 = f(t + h, &y5);
        let y4 = weighted_sum(
            &y,
            h,
            &[
                (B4[0], &k1),
                (B4[1], &k2),
                (B4[2], &k3),
                (B4[3], &k4),
                (B4[4], &k5),
                (B4[5], &k6),
                (B4[6], &k7),
            ],
        );

        let mut err_ratio: f64 = 0.0;
        for i in 0..y.len() {
            let e = (y5[i] - y4[i]).norm();
            let scale = opts.atol + opts.rtol * y[i].norm().max(y5[i].norm());
            if scale > 0.0 {
                err_ratio = err_ratio.max(e / scale);
            }
        }

        if err_ratio <= 1.0 {
            t += h;
            y = y5;
            observer(t, &y);
            let grow = if err_ratio > 0.0 { 0.9 * err_ratio.powf(-0.2) } else { 5.0 };
            h *= grow.clamp(0.2, 5.0);
        } else {
            h *= (0.9 * err_ratio.powf(-0.2)).clamp(0.1, 0.9);
            if h.abs() < span.abs() * 1e-14 {
                return Err(QopError::Numerics("adaptive step size underflow".into()));
            }
        }
    }
    Ok(y)
}

/// [`integrate_adaptive_observed`] without the observer.
pub fn integrate_adaptive<F>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y0: &CVector,
    opts: &AdaptiveOpts,
) -> Result<CVector>
where
    F: FnMut(f64, &CVector) -> CVector,
{
    integrate_adaptive_observed(f, t0, t1, y0, opts, &mut |_, _| {})
}

/// Classic fixed-step fourth-order Runge–Kutta over `n_steps` equal steps,
/// invoking `observer` at every grid point (including the initial state).
pub fn rk4_fixed_observed<F, O>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y0: &CVector,
    n_steps: usize,
    observer: &mut O,
) -> Result<CVector>
where
    F: FnMut(f64, &CVector) -> CVector,
    O: FnMut(f64, &CVector),
{
    if n_steps == 0 {
        return Err(QopError::Domain("rk4 needs at least one step".into()));
    }
    let h = (t1 - t0) / n_steps as f64;
    let mut y = y0.clone();
    observer(t0, &y);
    for i in 0..n_steps {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &weighted_sum(&y, 0.5 * h, &[(1.0, &k1)]));
        let k3 = f(t + 0.5 * h, &weighted_sum(&y, 0.5 * h, &[(1.0, &k2)]));
        let k4 = f(t + h, &weighted_sum(&y, h, &[(1.0, &k3)]));
        y = weighted_sum(
            &y,
            h / 6.0,
            &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)],
        );
        observer(t0 + (i + 1) as f64 * h, &y);
    }
    Ok(y)
}

/// [`rk4_fixed_observed`] without the observer.
pub fn rk4_fixed<F>(f: &mut F, t0: f64, t1: f64, y0: &CVector, n_steps: usize) -> Result<CVector>
where
    F: FnMut(f64, &CVector) -> CVector,
{
    rk4_fixed_observed(f, t0, t1, y0, n_steps, &mut |_, _| {})
}

/// Composite-Simpson integral of uniformly spaced samples (spacing `dt`).
/// An odd final interval is handled with the three-point end correction, so
/// any length ≥ 2 keeps fourth-order accuracy.
pub fn simpson_integral(samples: &[f64], dt: f64) -> Result<f64> {
    let cum = simpson_cumulative(samples, dt)?;
    Ok(*cum.last().unwrap())
}

/// Cumulative integral at every grid point (first entry 0). Even prefixes
/// use composite Simpson; odd prefixes add the quadratic end-interval rule
/// ∫ = dt/12·(−f₋₂ + 8f₋₁ + 5f₀), keeping all entries fourth-order.
pub fn simpson_cumulative(samples: &[f64], dt: f64) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(QopError::Domain("quadrature needs at least two samples".into()));
    }
    if !(dt > 0.0) {
        return Err(QopError::Domain("sample spacing must be positive".into()));
    }
    let n = samples.len();
    let mut out = vec![0.0; n];
    // Trapezoid seed for index 1, upgraded below if a third point exists.
    out[1] = 0.5 * dt * (samples[0] + samples[1]);
    if n > 2 {
        out[1] = dt / 12.0 * (5.0 * samples[0] + 8.0 * samples[1] - samples[2]);
    }
    for i in 2..n {
        // Simpson over the last two intervals, anchored two points back.
        let simpson_pair = dt / 3.0 * (samples[i - 2] + 4.0 * samples[i - 1] + samples[i]);
        out[i] = out[i - 2] + simpson_pair;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{evolve, hermitize, CMatrix, HilbertSpec, Ket, Operator};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn exponential_decay_to_machine_tolerance() {
        let y0 = CVector::from_element(1, C64::new(1.0, 0.0));
        let y = integrate_adaptive(
            &mut |_, y: &CVector| -y.clone(),
            0.0,
            1.0,
            &y0,
            &AdaptiveOpts::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(y[0].re, (-1.0f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(y[0].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_rotation_preserves_norm_and_angle() {
        let omega = 2.7;
        let y0 = CVector::from_element(1, C64::new(1.0, 0.0));
        let y = integrate_adaptive(
            &mut |_, y: &CVector| y * C64::new(0.0, omega),
            0.0,
            2.0,
            &y0,
            &AdaptiveOpts::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(y[0].norm(), 1.0, epsilon = 5e-9);
        assert_abs_diff_eq!(y[0].arg(), (omega * 2.0).rem_euclid(2.0 * std::f64::consts::PI) - 2.0 * std::f64::consts::PI, epsilon = 5e-9);
    }

    #[test]
    fn two_level_drive_reproduces_rabi_flopping() {
        // dψ/dt = −iH ψ with H = (Ω/2)σ_x: P₁(t) = sin²(Ωt/2).
        let omega = 1.3;
        let h = crate::qubit::sigma_x().scale(omega / 2.0);
        let mut y0 = CVector::zeros(2);
        y0[0] = C64::new(1.0, 0.0);
        let t1 = 1.9;
        let y = integrate_adaptive(
            &mut |_, y: &CVector| {
                let hy = &h * y;
                hy * C64::new(0.0, -1.0)
            },
            0.0,
            t1,
            &y0,
            &AdaptiveOpts::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(y[1].norm_sqr(), (omega * t1 / 2.0).sin().powi(2), epsilon = 1e-9);
    }

    #[test]
    fn adaptive_and_matrix_exponential_agree_on_random_hamiltonian() {
        let spec = HilbertSpec::new(&[4]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let raw = CMatrix::from_fn(4, 4, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let h = Operator::hermitian(spec.clone(), hermitize(&raw)).unwrap();
        let mut amp = CVector::zeros(4);
        amp[0] = C64::new(1.0, 0.0);
        let psi0 = Ket::new(spec, amp.clone()).unwrap();
        let exact = evolve(&h, 1.0, &psi0).unwrap();
        let numeric = integrate_adaptive(
            &mut |_, y: &CVector| {
                let hy = h.mat() * y;
                hy * C64::new(0.0, -1.0)
            },
            0.0,
            1.0,
            &amp,
            &AdaptiveOpts::default(),
        )
        .unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(numeric[i].re, exact.amp()[i].re, epsilon = 1e-9);
            assert_abs_diff_eq!(numeric[i].im, exact.amp()[i].im, epsilon = 1e-9);
        }
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let mut f = |_: f64, y: &CVector| y * C64::new(0.3, 0.4);
        let y0 = CVector::from_element(1, C64::new(0.8, -0.1));
        let fwd = integrate_adaptive(&mut f, 0.0, 1.5, &y0, &AdaptiveOpts::default()).unwrap();
        let back = integrate_adaptive(&mut f, 1.5, 0.0, &fwd, &AdaptiveOpts::default()).unwrap();
        assert_abs_diff_eq!(back[0].re, y0[0].re, epsilon = 1e-9);
        assert_abs_diff_eq!(back[0].im, y0[0].im, epsilon = 1e-9);
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let mut f = |t: f64, y: &CVector| y * C64::from(t.cos());
        let y0 = CVector::from_element(1, C64::new(1.0, 0.0));
        // y(t) = exp(sin t).
        let exact = (1.0f64.sin()).exp();
        let coarse = (rk4_fixed(&mut f, 0.0, 1.0, &y0, 50).unwrap()[0].re - exact).abs();
        let fine = (rk4_fixed(&mut f, 0.0, 1.0, &y0, 100).unwrap()[0].re - exact).abs();
        assert!(fine < coarse / 12.0, "coarse {coarse:.3e}, fine {fine:.3e}");
    }

    #[test]
    fn simpson_matches_antiderivative_on_every_grid_point() {
        let n = 201;
        let dt = std::f64::consts::PI / (n as f64 - 1.0);
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 * dt).sin()).collect();
        let cum = simpson_cumulative(&samples, dt).unwrap();
        for (i, &c) in cum.iter().enumerate() {
            let exact = 1.0 - (i as f64 * dt).cos();
            assert_abs_diff_eq!(c, exact, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(simpson_integral(&samples, dt).unwrap(), 2.0, epsilon = 1e-9);
        // Odd sample count exercises the end-correction path too.
        let samples_even: Vec<f64> = (0..200).map(|i| (i as f64 * dt).sin()).collect();
        let cum_even = simpson_cumulative(&samples_even, dt).unwrap();
        let t_last = 199.0 * dt;
        assert_abs_diff_eq!(*cum_even.last().unwrap(), 1.0 - t_last.cos(), epsilon = 1e-8);
    }

    #[test]
    fn observer_sees_monotone_time_grid() {
        let mut times = Vec::new();
        let y0 = CVector::from_element(1, C64::new(1.0, 0.0));
        integrate_adaptive_observed(
            &mut |_, y: &CVector| -y.clone(),
            0.0,
            1.0,
            &y0,
            &AdaptiveOpts::default(),
            &mut |t, _| times.push(t),
        )
        .unwrap();
        assert_eq!(times[0], 0.0);
        assert_eq!(*times.last().unwrap(), 1.0);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }
}
