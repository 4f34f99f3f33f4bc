//! Entanglement analysis: Schmidt decomposition, entropy of entanglement,
//! the partial-transpose test, canonical entangled states, the isotropic
//! two-sided (U⊗U) twirl, and the Werner family it projects onto.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{QopError, Result};
use crate::qstate::{
    hermitian_eig, hermitize, partial_transpose, svd_complex, CMatrix, CVector, DensityOp,
    HilbertSpec, Ket, Operator, C64, POSITIVITY_TOL,
};
use crate::qubit::{bell, BellKind};

/// Schmidt form of a bipartite pure state: |ψ⟩ = Σₖ dₖ |aₖ⟩|bₖ⟩ with the
/// coefficients sorted descending. Ties are broken deterministically by
/// lexicographic order of the A-side amplitudes (phase-fixed so each basis
/// vector's largest-magnitude entry is real positive).
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub basis_a: Vec<Ket>,
    pub basis_b: Vec<Ket>,
}

impl SchmidtDecomposition {
    /// Number of coefficients above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    /// Rebuilds Σₖ dₖ |aₖ⟩|bₖ⟩ for reconstruction checks.
    pub fn reconstruct(&self) -> Result<Ket> {
        let mut amp: Option<CVector> = None;
        for (k, &d) in self.coefficients.iter().enumerate() {
            let term = self.basis_a[k].amp().kronecker(self.basis_b[k].amp()) * C64::from(d);
            amp = Some(match amp {
                None => term,
                Some(acc) => acc + term,
            });
        }
        let amp = amp.ok_or_else(|| QopError::Numerics("empty decomposition".into()))?;
        let spec = HilbertSpec::with_cap(
            &[self.basis_a[0].spec().total_dim(), self.basis_b[0].spec().total_dim()],
            self.basis_a[0].spec().cap().max(amp.len()),
        )?;
        Ket::normalized(spec, amp)
    }
}

fn require_bipartite(spec: &HilbertSpec) -> Result<(usize, usize)> {
    if spec.n_subsystems() != 2 {
        return Err(QopError::BadSubsystem(format!(
            "need exactly 2 factors, got {} (regroup first)",
            spec.n_subsystems()
        )));
    }
    Ok((spec.dims()[0], spec.dims()[1]))
}

/// Schmidt decomposition of a bipartite pure state via SVD of the
/// coefficient matrix M[a,b] = ⟨a,b|ψ⟩.
pub fn schmidt(psi: &Ket) -> Result<SchmidtDecomposition> {
    let (da, db) = require_bipartite(psi.spec())?;
    let mut m = CMatrix::zeros(da, db);
    for a in 0..da {
        for b in 0..db {
            m[(a, b)] = psi.amp()[a * db + b];
        }
    }
    let (u, s, v_t) = svd_complex(&m)?;
    let k = da.min(db);

    // Phase-fix each Schmidt pair: rotate so the largest-|·| entry of the
    // A-side vector is real positive, absorbing the phase into the B side.
    let mut cols: Vec<(f64, Vec<C64>, Vec<C64>)> = Vec::with_capacity(k);
    for j in 0..k {
        let mut a_vec: Vec<C64> = (0..da).map(|i| u[(i, j)]).collect();
        let mut b_vec: Vec<C64> = (0..db).map(|i| v_t[(j, i)]).collect();
        let (best, _) = a_vec
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.norm().partial_cmp(&y.1.norm()).unwrap())
            .unwrap();
        let mag = a_vec[best].norm();
        if mag > 0.0 {
            let phase = a_vec[best] / C64::from(mag);
            let inv = phase.conj();
            for z in &mut a_vec {
                *z *= inv;
            }
            for z in &mut b_vec {
                *z *= phase;
            }
        }
        cols.push((s[j], a_vec, b_vec));
    }
    // Descending by coefficient, lexicographic A-side amplitudes on ties.
    cols.sort_by(|x, y| {
        y.0.partial_cmp(&x.0).unwrap().then_with(|| {
            for (za, zb) in x.1.iter().zip(&y.1) {
                match za
                    .re
                    .partial_cmp(&zb.re)
                    .unwrap()
                    .then(za.im.partial_cmp(&zb.im).unwrap())
                {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            std::cmp::Ordering::Equal
        })
    });

    let spec_a = HilbertSpec::new(&[da])?;
    let spec_b = HilbertSpec::new(&[db])?;
    let mut coefficients = Vec::with_capacity(k);
    let mut basis_a = Vec::with_capacity(k);
    let mut basis_b = Vec::with_capacity(k);
    for (c, a_vec, b_vec) in cols {
        coefficients.push(c);
        basis_a.push(Ket::normalized(spec_a.clone(), CVector::from_vec(a_vec))?);
        basis_b.push(Ket::normalized(spec_b.clone(), CVector::from_vec(b_vec))?);
    }
    Ok(SchmidtDecomposition { coefficients, basis_a, basis_b })
}

/// Entropy of entanglement E(ψ) = −Σₖ dₖ² log₂ dₖ² of a bipartite pure state.
pub fn entanglement_entropy(psi: &Ket) -> Result<f64> {
    let dec = schmidt(psi)?;
    let mut e = 0.0;
    for &d in &dec.coefficients {
        let p = d * d;
        if p > 0.0 {
            e -= p * p.log2();
        }
    }
    Ok(e)
}

/// Outcome of the partial-transpose test.
///
/// A negative partial transpose certifies entanglement in any dimension.
/// A positive one certifies separability only when d_A·d_B ≤ 6; above that
/// the test is inconclusive and we say so rather than guessing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PptVerdict {
    Entangled,
    Separable,
    PptUndecided,
}

impl PptVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            PptVerdict::Entangled => "entangled",
            PptVerdict::Separable => "separable",
            PptVerdict::PptUndecided => "ppt_undecided",
        }
    }
}

/// Partial-transpose entanglement test on a bipartite density operator.
pub fn is_entangled_ppt(rho: &DensityOp) -> Result<PptVerdict> {
    let (da, db) = require_bipartite(rho.spec())?;
    let pt = partial_transpose(rho, 1)?;
    let (eigs, _) = hermitian_eig(pt.mat())?;
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < POSITIVITY_TOL {
        Ok(PptVerdict::Entangled)
    } else if da * db <= 6 {
        Ok(PptVerdict::Separable)
    } else {
        Ok(PptVerdict::PptUndecided)
    }
}

/// ⟨Φ|ρ|Φ⟩.
pub fn fidelity(rho: &DensityOp, target: &Ket) -> Result<f64> {
    rho.expectation_with(target)
}

/// Three-qubit GHZ state (|000⟩ − |111⟩)/√2.
pub fn ghz() -> Result<Ket> {
    let spec = HilbertSpec::qubits(3)?;
    let mut amp = CVector::zeros(8);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    amp[0] = C64::new(r, 0.0);
    amp[7] = C64::new(-r, 0.0);
    Ket::new(spec, amp)
}

/// Three-qubit W state (|100⟩ + |010⟩ + |001⟩)/√3.
pub fn w_state() -> Result<Ket> {
    let spec = HilbertSpec::qubits(3)?;
    let mut amp = CVector::zeros(8);
    let r = 1.0 / 3.0_f64.sqrt();
    amp[4] = C64::new(r, 0.0);
    amp[2] = C64::new(r, 0.0);
    amp[1] = C64::new(r, 0.0);
    Ket::new(spec, amp)
}

/// Parameters of a d⊗d Werner state: `fidelity` is the weight on the
/// antisymmetric subspace, tr(P₋ ρ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WernerParams {
    pub fidelity: f64,
    pub local_dim: usize,
}

/// Exchange (swap) operator π|a,b⟩ = |b,a⟩ on a d⊗d space.
pub fn swap_operator(d: usize) -> Result<Operator> {
    let spec = HilbertSpec::new(&[d, d])?;
    let n = d * d;
    let mut mat = CMatrix::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            mat[(b * d + a, a * d + b)] = C64::new(1.0, 0.0);
        }
    }
    Operator::unitary(spec, mat)
}

/// Projectors (P₊, P₋) = ((1 ± π)/2) onto the symmetric/antisymmetric
/// subspaces of d⊗d.
pub fn symmetry_projectors(d: usize) -> Result<(CMatrix, CMatrix)> {
    let swap = swap_operator(d)?;
    let n = d * d;
    let id = CMatrix::identity(n, n);
    let p_sym = (&id + swap.mat()).scale(0.5);
    let p_asym = (&id - swap.mat()).scale(0.5);
    Ok((p_sym, p_asym))
}

/// d⊗d Werner state ρ_F = F·P₋/d₋ + (1−F)·P₊/d₊ with d± = d(d±1)/2.
pub fn werner_general(f: f64, d: usize) -> Result<DensityOp> {
    if !(0.0..=1.0).contains(&f) {
        return Err(QopError::Domain(format!("Werner fidelity {f} outside [0, 1]")));
    }
    if d < 2 {
        return Err(QopError::Domain("Werner states need local dimension ≥ 2".into()));
    }
    let (p_sym, p_asym) = symmetry_projectors(d)?;
    let d_sym = (d * (d + 1) / 2) as f64;
    let d_asym = (d * (d - 1) / 2) as f64;
    let mat = p_asym.scale(f / d_asym) + p_sym.scale((1.0 - f) / d_sym);
    DensityOp::new(HilbertSpec::new(&[d, d])?, mat)
}

/// Two-qubit Werner state F·|Ψ⁻⟩⟨Ψ⁻| + (1−F)/3·(the other three Bell
/// projectors). Identical to [`werner_general`] at d = 2.
pub fn werner_qubit(f: f64) -> Result<DensityOp> {
    werner_general(f, 2)
}

/// Weight on the antisymmetric subspace, tr(P₋ ρ) — the Werner fidelity
/// parameter. For two qubits this equals ⟨Ψ⁻|ρ|Ψ⁻⟩.
pub fn antisymmetric_weight(rho: &DensityOp) -> Result<f64> {
    let (da, db) = require_bipartite(rho.spec())?;
    if da != db {
        return Err(QopError::DimMismatch("Werner analysis needs equal local dimensions".into()));
    }
    let (_, p_asym) = symmetry_projectors(da)?;
    let prod = &p_asym * rho.mat();
    Ok(prod.trace().re)
}

/// Haar-random d×d unitary: QR of a complex Ginibre matrix with the R-diagonal
/// phase fix that makes the distribution exactly invariant.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let mut g = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            g[(i, j)] = C64::new(re, im) / C64::from(std::f64::consts::SQRT_2);
        }
    }
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let mag = rjj.norm();
        let phase = if mag > 0.0 { rjj / C64::from(mag) } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Monte-Carlo two-sided twirl: averages (U⊗U) ρ (U⊗U)† over `samples` Haar
/// unitaries drawn from a seeded generator. Converges to the Werner-family
/// projection of ρ at the usual 1/√samples rate.
pub fn twirl(rho: &DensityOp, samples: usize, seed: u64) -> Result<DensityOp> {
    let (da, db) = require_bipartite(rho.spec())?;
    if da != db {
        return Err(QopError::DimMismatch("twirl needs equal local dimensions".into()));
    }
    if samples == 0 {
        return Err(QopError::Domain("twirl needs at least one sample".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = da * db;
    let mut acc = CMatrix::zeros(n, n);
    for _ in 0..samples {
        let u = haar_unitary(da, &mut rng);
        let uu = u.kronecker(&u);
        acc += &uu * rho.mat() * uu.adjoint();
    }
    acc /= C64::from(samples as f64);
    DensityOp::trusted(rho.spec().clone(), hermitize(&acc))
}

/// Exact two-sided twirl: the analytic projection of ρ onto the Werner
/// family, tr(P₋ρ)·P₋/d₋ + tr(P₊ρ)·P₊/d₊.
pub fn werner_project(rho: &DensityOp) -> Result<DensityOp> {
    let (da, db) = require_bipartite(rho.spec())?;
    if da != db {
        return Err(QopError::DimMismatch("twirl needs equal local dimensions".into()));
    }
    let (p_sym, p_asym) = symmetry_projectors(da)?;
    let wa = (&p_asym * rho.mat()).trace().re;
    let ws = (&p_sym * rho.mat()).trace().re;
    let d_sym = (da * (da + 1) / 2) as f64;
    let d_asym = (da * (da - 1) / 2) as f64;
    let mat = p_asym.scale(wa / d_asym) + p_sym.scale(ws / d_sym);
    DensityOp::trusted(rho.spec().clone(), hermitize(&mat))
}

/// A named state for the command-line surface: pure or mixed.
#[derive(Clone, Debug)]
pub enum MadeState {
    Pure(Ket),
    Mixed(DensityOp),
}

/// Builds a named state. Accepted names: `psi_minus`, `psi_plus`,
/// `phi_minus`, `phi_plus`, `ghz`, `w`, `werner:<F>`.
pub fn make_state(name: &str) -> Result<MadeState> {
    let lower = name.to_ascii_lowercase();
    match lower.as_str() {
        "psi_minus" => Ok(MadeState::Pure(bell(BellKind::PsiMinus)?)),
        "psi_plus" => Ok(MadeState::Pure(bell(BellKind::PsiPlus)?)),
        "phi_minus" => Ok(MadeState::Pure(bell(BellKind::PhiMinus)?)),
        "phi_plus" => Ok(MadeState::Pure(bell(BellKind::PhiPlus)?)),
        "ghz" => Ok(MadeState::Pure(ghz()?)),
        "w" => Ok(MadeState::Pure(w_state()?)),
        _ => {
            if let Some(rest) = lower.strip_prefix("werner:") {
                let f: f64 = rest
                    .parse()
                    .map_err(|_| QopError::Domain(format!("bad Werner fidelity `{rest}`")))?;
                Ok(MadeState::Mixed(werner_qubit(f)?))
            } else {
                Err(QopError::Domain(format!("unknown state name `{name}`")))
            }
        }
    }
}

/// Max-|entry| distance between two density operators (cheap comparison
/// metric for twirl convergence studies).
pub fn max_entry_distance(a: &DensityOp, b: &DensityOp) -> f64 {
    let mut dev: f64 = 0.0;
    let (ma, mb): (&DMatrix<C64>, &DMatrix<C64>) = (a.mat(), b.mat());
    for i in 0..ma.nrows() {
        for j in 0..ma.ncols() {
            dev = dev.max((ma[(i, j)] - mb[(i, j)]).norm());
        }
    }
    dev
}
