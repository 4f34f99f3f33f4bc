//! Dense state engine for composite finite-dimensional quantum systems.
//!
//! Everything is stored as dense complex vectors/matrices over an explicit
//! tensor-factor layout. Flattened indices are **most significant first**:
//! for subsystem labels (i₀, i₁, …) the linear index is Σₖ iₖ·strideₖ with
//! strideₖ = ∏_{j>k} d_j, i.e. `kron(A, B)` puts `A` on subsystem 0.
//!
//! Unitary evolution is done exactly through the Hermitian eigendecomposition
//! of the generator — there is no time-stepping in this module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{QopError, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default limit on the total dimension of a composite space.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Norm tolerance for state vectors.
pub const KET_NORM_TOL: f64 = 1e-12;
/// Tolerance below which a density-operator eigenvalue counts as negative.
pub const POSITIVITY_TOL: f64 = -1e-10;
/// Entry-wise tolerance for Hermiticity / unitarity / trace validation.
pub const MATRIX_TOL: f64 = 1e-10;

/// Ordered list of subsystem dimensions defining a composite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpec {
    dims: Vec<usize>,
    cap: usize,
}

impl HilbertSpec {
    /// Composite space with the default total-dimension cap.
    pub fn new(dims: &[usize]) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_DIM_CAP)
    }

    /// Composite space with an explicit total-dimension cap.
    pub fn with_cap(dims: &[usize], cap: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(QopError::DimMismatch("empty dimension list".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(QopError::DimMismatch("zero-dimensional factor".into()));
        }
        let mut total: usize = 1;
        for &d in dims {
            total = total
                .checked_mul(d)
                .ok_or(QopError::DimCap { total: usize::MAX, cap })?;
            if total > cap {
                return Err(QopError::DimCap { total, cap });
            }
        }
        Ok(Self { dims: dims.to_vec(), cap })
    }

    /// n qubits.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(&vec![2; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// strideₖ = ∏_{j>k} d_j (most significant factor first).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    /// Linear index of a basis state given one label per subsystem.
    pub fn index_of(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.dims.len() {
            return Err(QopError::DimMismatch(format!(
                "{} labels for {} subsystems",
                labels.len(),
                self.dims.len()
            )));
        }
        let strides = self.strides();
        let mut idx = 0;
        for (k, (&l, &d)) in labels.iter().zip(&self.dims).enumerate() {
            if l >= d {
                return Err(QopError::BadSubsystem(format!(
                    "label {l} out of range for subsystem {k} of dimension {d}"
                )));
            }
            idx += l * strides[k];
        }
        Ok(idx)
    }

    /// Per-subsystem labels of a linear index.
    pub fn labels_of(&self, index: usize) -> Vec<usize> {
        let strides = self.strides();
        self.dims
            .iter()
            .zip(&strides)
            .map(|(&d, &s)| (index / s) % d)
            .collect()
    }

    /// Two-factor view [d₀⋯d_{split−1}, d_split⋯] of the same space.
    /// Flattened indices are unchanged by regrouping.
    pub fn bipartition(&self, split_at: usize) -> Result<Self> {
        if split_at == 0 || split_at >= self.dims.len() {
            return Err(QopError::BadSubsystem(format!(
                "split at {split_at} does not cut {} factors in two",
                self.dims.len()
            )));
        }
        let d_a: usize = self.dims[..split_at].iter().product();
        let d_b: usize = self.dims[split_at..].iter().product();
        Self::with_cap(&[d_a, d_b], self.cap)
    }
}

/// Offset tables splitting every full-space index uniquely into
/// `chosen_offsets[a] + complement_offsets[b]`.
///
/// `a` enumerates labels of the chosen subsystems **in the order given**
/// (most significant first); `b` enumerates the remaining subsystems in their
/// original order. Used by partial trace, operator embedding, and friends.
fn split_offsets(spec: &HilbertSpec, chosen: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = spec.n_subsystems();
    let mut seen = vec![false; n];
    for &c in chosen {
        if c >= n {
            return Err(QopError::BadSubsystem(format!(
                "subsystem {c} out of range ({n} subsystems)"
            )));
        }
        if seen[c] {
            return Err(QopError::BadSubsystem(format!("subsystem {c} listed twice")));
        }
        seen[c] = true;
    }
    let strides = spec.strides();
    let dims = spec.dims();

    let enumerate = |subs: &[usize]| -> Vec<usize> {
        let total: usize = subs.iter().map(|&k| dims[k]).product();
        let mut out = Vec::with_capacity(total);
        for mut a in 0..total {
            let mut offset = 0;
            // Decompose `a` most-significant-first over the listed factors.
            for (pos, &k) in subs.iter().enumerate() {
                let tail: usize = subs[pos + 1..].iter().map(|&j| dims[j]).product();
                let label = a / tail;
                a %= tail;
                offset += label * strides[k];
            }
            out.push(offset);
        }
        out
    };

    let complement: Vec<usize> = (0..n).filter(|k| !seen[*k]).collect();
    Ok((enumerate(chosen), enumerate(&complement)))
}

/// Pure state: unit-norm complex amplitude vector over a `HilbertSpec`.
#[derive(Clone, Debug)]
pub struct Ket {
    spec: HilbertSpec,
    amp: CVector,
}

impl Ket {
    /// Wraps amplitudes that are already normalized (within 1e-12).
    pub fn new(spec: HilbertSpec, amp: CVector) -> Result<Self> {
        if amp.len() != spec.total_dim() {
            return Err(QopError::DimMismatch(format!(
                "amplitude length {} vs total dimension {}",
                amp.len(),
                spec.total_dim()
            )));
        }
        let norm = amp.norm();
        if (norm - 1.0).abs() > KET_NORM_TOL {
            return Err(QopError::NotNormalized { norm });
        }
        Ok(Self { spec, amp })
    }

    /// Normalizes the amplitudes (errors on the zero vector).
    pub fn normalized(spec: HilbertSpec, amp: CVector) -> Result<Self> {
        if amp.len() != spec.total_dim() {
            return Err(QopError::DimMismatch(format!(
                "amplitude length {} vs total dimension {}",
                amp.len(),
                spec.total_dim()
            )));
        }
        let norm = amp.norm();
        if norm == 0.0 {
            return Err(QopError::NotNormalized { norm });
        }
        Ok(Self { spec, amp: amp / C64::from(norm) })
    }

    /// Computational basis state |l₀ l₁ …⟩.
    pub fn basis(spec: HilbertSpec, labels: &[usize]) -> Result<Self> {
        let idx = spec.index_of(labels)?;
        let mut amp = CVector::zeros(spec.total_dim());
        amp[idx] = C64::new(1.0, 0.0);
        Ok(Self { spec, amp })
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn amp(&self) -> &CVector {
        &self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.norm()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.spec.total_dim() != other.spec.total_dim() {
            return Err(QopError::DimMismatch("inner product of different spaces".into()));
        }
        Ok(self.amp.dotc(&other.amp))
    }

    /// |⟨self|other⟩|².
    pub fn overlap(&self, other: &Ket) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Kronecker product of several kets (first factor most significant).
    pub fn tensor(parts: &[&Ket]) -> Result<Ket> {
        if parts.is_empty() {
            return Err(QopError::DimMismatch("tensor of zero kets".into()));
        }
        let mut dims = Vec::new();
        for p in parts {
            dims.extend_from_slice(p.spec.dims());
        }
        let spec = HilbertSpec::with_cap(&dims, parts[0].spec.cap)?;
        let mut amp = parts[0].amp.clone();
        for p in &parts[1..] {
            amp = amp.kronecker(&p.amp);
        }
        Ket::new(spec, amp)
    }

    /// |ψ⟩⟨ψ|.
    pub fn to_density(&self) -> DensityOp {
        let mat = &self.amp * self.amp.adjoint();
        DensityOp { spec: self.spec.clone(), mat }
    }

    /// Same amplitudes re-declared as the bipartite space [A|B] split after
    /// `split_at` factors.
    pub fn regroup(&self, split_at: usize) -> Result<Ket> {
        Ok(Ket { spec: self.spec.bipartition(split_at)?, amp: self.amp.clone() })
    }
}

/// Mixed state: Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug)]
pub struct DensityOp {
    spec: HilbertSpec,
    mat: CMatrix,
}

impl DensityOp {
    /// Full validation: Hermitian (1e-10 entry-wise), unit trace (1e-10),
    /// eigenvalues ≥ −1e-10.
    pub fn new(spec: HilbertSpec, mat: CMatrix) -> Result<Self> {
        let rho = Self::trusted(spec, mat)?;
        rho.validate_positivity()?;
        Ok(rho)
    }

    /// Validation without the O(d³) positivity check; used internally by
    /// operations that preserve positivity exactly.
    pub(crate) fn trusted(spec: HilbertSpec, mat: CMatrix) -> Result<Self> {
        let d = spec.total_dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(QopError::DimMismatch(format!(
                "matrix {}×{} vs total dimension {}",
                mat.nrows(),
                mat.ncols(),
                d
            )));
        }
        let dev = hermiticity_deviation(&mat);
        if dev > MATRIX_TOL {
            return Err(QopError::NotHermitian { dev });
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > MATRIX_TOL || trace.im.abs() > MATRIX_TOL {
            return Err(QopError::BadTrace { trace: trace.re });
        }
        Ok(Self { spec, mat })
    }

    /// Checks the spectrum against the positivity tolerance.
    pub fn validate_positivity(&self) -> Result<()> {
        let (eigs, _) = hermitian_eig(&self.mat)?;
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < POSITIVITY_TOL {
            return Err(QopError::NotPositive { min_eig });
        }
        Ok(())
    }

    /// Convex mixture Σ pᵢ ρᵢ (weights must sum to 1 within 1e-10).
    pub fn mixture(parts: &[(f64, &DensityOp)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(QopError::DimMismatch("mixture of zero states".into()));
        }
        let spec = parts[0].1.spec.clone();
        let d = spec.total_dim();
        let mut mat = CMatrix::zeros(d, d);
        let mut wsum = 0.0;
        for (w, rho) in parts {
            if *w < -MATRIX_TOL {
                return Err(QopError::Domain(format!("negative mixture weight {w}")));
            }
            if rho.spec.total_dim() != d {
                return Err(QopError::DimMismatch("mixture over different spaces".into()));
            }
            mat += rho.mat.scale(*w);
            wsum += w;
        }
        if (wsum - 1.0).abs() > MATRIX_TOL {
            return Err(QopError::BadTrace { trace: wsum });
        }
        Self::trusted(spec, mat)
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// tr(ρ²).
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn expectation_with(&self, psi: &Ket) -> Result<f64> {
        if psi.spec.total_dim() != self.spec.total_dim() {
            return Err(QopError::DimMismatch("expectation over different spaces".into()));
        }
        let v = &self.mat * &psi.amp;
        Ok(psi.amp.dotc(&v).re)
    }

    /// Kronecker product of density operators.
    pub fn tensor(parts: &[&DensityOp]) -> Result<DensityOp> {
        if parts.is_empty() {
            return Err(QopError::DimMismatch("tensor of zero states".into()));
        }
        let mut dims = Vec::new();
        for p in parts {
            dims.extend_from_slice(p.spec.dims());
        }
        let spec = HilbertSpec::with_cap(&dims, parts[0].spec.cap)?;
        let mut mat = parts[0].mat.clone();
        for p in &parts[1..] {
            mat = mat.kronecker(&p.mat);
        }
        Self::trusted(spec, mat)
    }

    /// Same matrix re-declared over a regrouped two-factor spec.
    pub fn regroup(&self, split_at: usize) -> Result<DensityOp> {
        Ok(DensityOp { spec: self.spec.bipartition(split_at)?, mat: self.mat.clone() })
    }
}

/// How an operator claims to behave; validated on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Hermitian,
    Unitary,
    General,
}

/// Matrix acting on a composite space, tagged with a validated kind.
#[derive(Clone, Debug)]
pub struct Operator {
    spec: HilbertSpec,
    mat: CMatrix,
    kind: OpKind,
}

impl Operator {
    pub fn hermitian(spec: HilbertSpec, mat: CMatrix) -> Result<Self> {
        check_square(&spec, &mat)?;
        let dev = hermiticity_deviation(&mat);
        if dev > MATRIX_TOL {
            return Err(QopError::NotHermitian { dev });
        }
        Ok(Self { spec, mat, kind: OpKind::Hermitian })
    }

    pub fn unitary(spec: HilbertSpec, mat: CMatrix) -> Result<Self> {
        check_square(&spec, &mat)?;
        let d = mat.nrows();
        let gram = mat.adjoint() * &mat;
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                dev = dev.max((gram[(i, j)] - expect).norm());
            }
        }
        if dev > MATRIX_TOL {
            return Err(QopError::NotUnitary { dev });
        }
        Ok(Self { spec, mat, kind: OpKind::Unitary })
    }

    pub fn general(spec: HilbertSpec, mat: CMatrix) -> Result<Self> {
        check_square(&spec, &mat)?;
        Ok(Self { spec, mat, kind: OpKind::General })
    }

    pub fn identity(spec: HilbertSpec) -> Self {
        let d = spec.total_dim();
        Self { spec, mat: CMatrix::identity(d, d), kind: OpKind::Unitary }
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn dagger(&self) -> Operator {
        Operator { spec: self.spec.clone(), mat: self.mat.adjoint(), kind: self.kind }
    }

    /// Operator product self ∘ other (apply `other` first).
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        if self.spec.total_dim() != other.spec.total_dim() {
            return Err(QopError::DimMismatch("composition over different spaces".into()));
        }
        let kind = match (self.kind, other.kind) {
            (OpKind::Unitary, OpKind::Unitary) => OpKind::Unitary,
            _ => OpKind::General,
        };
        Ok(Operator { spec: self.spec.clone(), mat: &self.mat * &other.mat, kind })
    }

    /// Kronecker product of operators (first factor most significant).
    pub fn tensor(parts: &[&Operator]) -> Result<Operator> {
        if parts.is_empty() {
            return Err(QopError::DimMismatch("tensor of zero operators".into()));
        }
        let mut dims = Vec::new();
        for p in parts {
            dims.extend_from_slice(p.spec.dims());
        }
        let spec = HilbertSpec::with_cap(&dims, parts[0].spec.cap)?;
        let mut mat = parts[0].mat.clone();
        let mut kind = parts[0].kind;
        for p in &parts[1..] {
            mat = mat.kronecker(&p.mat);
            kind = match (kind, p.kind) {
                (OpKind::Unitary, OpKind::Unitary) => OpKind::Unitary,
                (OpKind::Hermitian, OpKind::Hermitian) => OpKind::Hermitian,
                _ => OpKind::General,
            };
        }
        Ok(Operator { spec, mat, kind })
    }

    /// U|ψ⟩ for a unitary operator (rounding scrubbed by renormalizing).
    /// Non-unitary maps must go through [`Operator::apply_raw`].
    pub fn apply(&self, psi: &Ket) -> Result<Ket> {
        if psi.spec.total_dim() != self.spec.total_dim() {
            return Err(QopError::DimMismatch("operator/state dimension mismatch".into()));
        }
        if self.kind != OpKind::Unitary {
            return Err(QopError::Domain(
                "apply requires a unitary operator; use apply_raw for general maps".into(),
            ));
        }
        Ket::normalized(psi.spec.clone(), &self.mat * &psi.amp)
    }

    /// Raw image M·ψ without normalization (for non-unitary maps).
    pub fn apply_raw(&self, psi: &Ket) -> Result<CVector> {
        if psi.spec.total_dim() != self.spec.total_dim() {
            return Err(QopError::DimMismatch("operator/state dimension mismatch".into()));
        }
        Ok(&self.mat * &psi.amp)
    }

    /// U ρ U† (requires a unitary tag).
    pub fn conjugate(&self, rho: &DensityOp) -> Result<DensityOp> {
        if rho.spec.total_dim() != self.spec.total_dim() {
            return Err(QopError::DimMismatch("operator/state dimension mismatch".into()));
        }
        if self.kind != OpKind::Unitary {
            return Err(QopError::Domain("conjugation requires a unitary operator".into()));
        }
        let mat = &self.mat * &rho.mat * self.mat.adjoint();
        DensityOp::trusted(rho.spec.clone(), hermitize(&mat))
    }

    /// ⟨ψ|M|ψ⟩.
    pub fn expectation(&self, psi: &Ket) -> Result<C64> {
        let v = self.apply_raw(psi)?;
        Ok(psi.amp.dotc(&v))
    }

    /// Embeds an operator acting on the `targets` factors (in the order
    /// listed, most significant first) into the full space, identity
    /// elsewhere.
    pub fn embed(spec: &HilbertSpec, targets: &[usize], sub: &CMatrix, kind: OpKind) -> Result<Operator> {
        let d_sub: usize = targets.iter().map(|&k| spec.dims()[k]).product();
        if sub.nrows() != d_sub || sub.ncols() != d_sub {
            return Err(QopError::DimMismatch(format!(
                "sub-operator is {}×{}, targets span dimension {}",
                sub.nrows(),
                sub.ncols(),
                d_sub
            )));
        }
        let (sub_off, env_off) = split_offsets(spec, targets)?;
        let d = spec.total_dim();
        let mut mat = CMatrix::zeros(d, d);
        for (sr, &ro) in sub_off.iter().enumerate() {
            for (sc, &co) in sub_off.iter().enumerate() {
                let v = sub[(sr, sc)];
                if v != C64::new(0.0, 0.0) {
                    for &e in &env_off {
                        mat[(ro + e, co + e)] = v;
                    }
                }
            }
        }
        match kind {
            OpKind::Hermitian => Operator::hermitian(spec.clone(), mat),
            OpKind::Unitary => Operator::unitary(spec.clone(), mat),
            OpKind::General => Operator::general(spec.clone(), mat),
        }
    }
}

fn check_square(spec: &HilbertSpec, mat: &CMatrix) -> Result<()> {
    let d = spec.total_dim();
    if mat.nrows() != d || mat.ncols() != d {
        return Err(QopError::DimMismatch(format!(
            "matrix {}×{} vs total dimension {}",
            mat.nrows(),
            mat.ncols(),
            d
        )));
    }
    Ok(())
}

fn hermiticity_deviation(mat: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..mat.nrows() {
        for j in i..mat.ncols() {
            dev = dev.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    dev
}

/// (M + M†)/2 — scrubs rounding off a mathematically Hermitian result.
pub fn hermitize(mat: &CMatrix) -> CMatrix {
    (mat + mat.adjoint()).scale(0.5)
}

/// Traces out every subsystem not listed in `keep` (strictly increasing);
/// the kept subsystems keep their relative order.
pub fn partial_trace(rho: &DensityOp, keep: &[usize]) -> Result<DensityOp> {
    if keep.is_empty() {
        return Err(QopError::BadSubsystem("must keep at least one subsystem".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QopError::BadSubsystem("keep list must be strictly increasing".into()));
    }
    let (keep_off, trace_off) = split_offsets(rho.spec(), keep)?;
    let kept_dims: Vec<usize> = keep.iter().map(|&k| rho.spec().dims()[k]).collect();
    let spec = HilbertSpec::with_cap(&kept_dims, rho.spec().cap())?;
    let dk = keep_off.len();
    let mut mat = CMatrix::zeros(dk, dk);
    for (a, &ra) in keep_off.iter().enumerate() {
        for (b, &rb) in keep_off.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &trace_off {
                acc += rho.mat()[(ra + t, rb + t)];
            }
            mat[(a, b)] = acc;
        }
    }
    DensityOp::trusted(spec, hermitize(&mat))
}

/// Transposes the indices of one subsystem; the result is Hermitian but in
/// general not positive (that is the point of the test).
pub fn partial_transpose(rho: &DensityOp, subsystem: usize) -> Result<Operator> {
    let spec = rho.spec();
    if subsystem >= spec.n_subsystems() {
        return Err(QopError::BadSubsystem(format!(
            "subsystem {subsystem} out of range ({} subsystems)",
            spec.n_subsystems()
        )));
    }
    let d = spec.total_dim();
    let ds = spec.dims()[subsystem];
    let stride = spec.strides()[subsystem];
    let mut mat = CMatrix::zeros(d, d);
    for row in 0..d {
        let i_s = (row / stride) % ds;
        for col in 0..d {
            let j_s = (col / stride) % ds;
            let new_row = row - i_s * stride + j_s * stride;
            let new_col = col - j_s * stride + i_s * stride;
            mat[(new_row, new_col)] = rho.mat()[(row, col)];
        }
    }
    Operator::hermitian(spec.clone(), hermitize(&mat))
}

/// exp(−iHt)|ψ⟩ computed exactly through the eigendecomposition of H.
pub fn evolve(h: &Operator, t: f64, psi: &Ket) -> Result<Ket> {
    if h.kind() != OpKind::Hermitian {
        return Err(QopError::Domain("evolution generator must be Hermitian".into()));
    }
    if psi.spec().total_dim() != h.spec().total_dim() {
        return Err(QopError::DimMismatch("generator/state dimension mismatch".into()));
    }
    let (eigs, vecs) = hermitian_eig(h.mat())?;
    let mut coeffs = vecs.adjoint() * psi.amp();
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= C64::from_polar(1.0, -eigs[k] * t);
    }
    Ket::normalized(psi.spec().clone(), &vecs * coeffs)
}

/// The unitary exp(−iHt) itself.
pub fn evolution_operator(h: &Operator, t: f64) -> Result<Operator> {
    if h.kind() != OpKind::Hermitian {
        return Err(QopError::Domain("evolution generator must be Hermitian".into()));
    }
    let (eigs, vecs) = hermitian_eig(h.mat())?;
    let d = eigs.len();
    let mut phases = CMatrix::zeros(d, d);
    for k in 0..d {
        phases[(k, k)] = C64::from_polar(1.0, -eigs[k] * t);
    }
    let mat = &vecs * phases * vecs.adjoint();
    Operator::unitary(h.spec().clone(), mat)
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending, matching
/// eigenvector columns.
pub fn hermitian_eig(mat: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let dev = hermiticity_deviation(mat);
    if dev > MATRIX_TOL {
        return Err(QopError::NotHermitian { dev });
    }
    let se = nalgebra::SymmetricEigen::new(hermitize(mat));
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let eigs: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok((eigs, vecs))
}

/// Complex SVD M = U·diag(σ)·Vᴴ with σ sorted descending.
/// Returns (U, σ, Vᴴ).
pub fn svd_complex(mat: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let svd = nalgebra::SVD::new(mat.clone(), true, true);
    let u = svd.u.ok_or_else(|| QopError::Numerics("SVD did not return U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| QopError::Numerics("SVD did not return Vᴴ".into()))?;
    let s = svd.singular_values;
    // nalgebra sorts descending already; enforce it anyway.
    let n = s.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&k| s[k]).collect();
    let mut u_s = CMatrix::zeros(u.nrows(), n);
    let mut v_t_s = CMatrix::zeros(n, v_t.ncols());
    for (dst, &src) in order.iter().enumerate() {
        u_s.set_column(dst, &u.column(src));
        v_t_s.set_row(dst, &v_t.row(src));
    }
    Ok((u_s, sorted, v_t_s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn strides_are_most_significant_first() {
        let spec = HilbertSpec::new(&[2, 3, 4]).unwrap();
        assert_eq!(spec.strides(), vec![12, 4, 1]);
        assert_eq!(spec.index_of(&[1, 2, 3]).unwrap(), 12 + 8 + 3);
        assert_eq!(spec.labels_of(23), vec![1, 2, 3]);
    }

    #[test]
    fn dim_cap_is_enforced() {
        assert!(HilbertSpec::new(&[2; 12]).is_ok());
        assert!(matches!(
            HilbertSpec::new(&[2; 13]),
            Err(QopError::DimCap { total: 8192, cap: 4096 })
        ));
        assert!(HilbertSpec::with_cap(&[2; 13], 8192).is_ok());
    }

    #[test]
    fn kron_convention_matches_index_arithmetic() {
        // |1⟩⊗|0⟩ must land on index 1·stride₀ = 2 in a 2⊗2 space.
        let q = HilbertSpec::qubits(1).unwrap();
        let one = Ket::basis(q.clone(), &[1]).unwrap();
        let zero = Ket::basis(q, &[0]).unwrap();
        let prod = Ket::tensor(&[&one, &zero]).unwrap();
        assert_eq!(prod.amp()[2], c(1.0, 0.0));
        assert_eq!(prod.spec().dims(), &[2, 2]);
    }

    #[test]
    fn evolve_pauli_x_half_period_flips_with_phase() {
        // exp(−i σₓ π/2)|0⟩ = −i|1⟩.
        let spec = HilbertSpec::qubits(1).unwrap();
        let h = Operator::hermitian(spec.clone(), qubit::sigma_x()).unwrap();
        let psi0 = Ket::basis(spec, &[0]).unwrap();
        let out = evolve(&h, std::f64::consts::FRAC_PI_2, &psi0).unwrap();
        assert_abs_diff_eq!((out.amp()[1] - c(0.0, -1.0)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amp()[0].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn evolve_sigma_z_convention_gives_plus_phase_on_zero() {
        // σ_z|0⟩ = −|0⟩ here, so exp(−i(σ_z/2)π)|0⟩ = e^{iπ/2}|0⟩ = i|0⟩.
        let spec = HilbertSpec::qubits(1).unwrap();
        let h = Operator::hermitian(spec.clone(), qubit::sigma_z().scale(0.5)).unwrap();
        let psi0 = Ket::basis(spec, &[0]).unwrap();
        let out = evolve(&h, std::f64::consts::PI, &psi0).unwrap();
        assert_abs_diff_eq!((out.amp()[0] - c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn evolve_round_trip_is_identity() {
        let spec = HilbertSpec::new(&[3]).unwrap();
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = c(0.3, 0.4);
        m[(1, 0)] = c(0.3, -0.4);
        m[(1, 2)] = c(-0.2, 0.1);
        m[(2, 1)] = c(-0.2, -0.1);
        m[(0, 0)] = c(0.7, 0.0);
        m[(2, 2)] = c(-1.1, 0.0);
        let h = Operator::hermitian(spec.clone(), m).unwrap();
        let psi = Ket::normalized(spec, CVector::from_vec(vec![c(1.0, 0.5), c(0.0, -0.3), c(0.2, 0.0)]))
            .unwrap();
        let there = evolve(&h, 1.37, &psi).unwrap();
        let back = evolve(&h, -1.37, &there).unwrap();
        assert_abs_diff_eq!((back.amp() - psi.amp()).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(there.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_pair_is_maximally_mixed() {
        let bell = qubit::bell(qubit::BellKind::PsiMinus).unwrap();
        let rho = bell.to_density();
        let a = partial_trace(&rho, &[0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert_abs_diff_eq!(a.mat()[(i, j)].re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(a.mat()[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_of_product_recovers_factors() {
        let spec2 = HilbertSpec::new(&[2]).unwrap();
        let spec3 = HilbertSpec::new(&[3]).unwrap();
        let a = Ket::normalized(spec2, CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)])).unwrap();
        let b = Ket::normalized(spec3, CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)]))
            .unwrap();
        let joint = Ket::tensor(&[&a, &b]).unwrap().to_density();
        let ra = partial_trace(&joint, &[0]).unwrap();
        let rb = partial_trace(&joint, &[1]).unwrap();
        let expect_a = a.to_density();
        let expect_b = b.to_density();
        assert_abs_diff_eq!((ra.mat() - expect_a.mat()).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((rb.mat() - expect_b.mat()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_transpose_of_singlet_has_minus_half_eigenvalue() {
        let bell = qubit::bell(qubit::BellKind::PsiMinus).unwrap();
        let pt = partial_transpose(&bell.to_density(), 1).unwrap();
        let (eigs, _) = hermitian_eig(pt.mat()).unwrap();
        assert_abs_diff_eq!(eigs[0], -0.5, epsilon = 1e-12);
        // Double transpose restores the original matrix. The intermediate is
        // Hermitian with unit trace (just not positive), so `trusted` accepts it.
        let rho = bell.to_density();
        let pt_op = partial_transpose(&rho, 1).unwrap();
        let intermediate = DensityOp::trusted(rho.spec().clone(), pt_op.mat().clone()).unwrap();
        let ptpt = partial_transpose(&intermediate, 1).unwrap();
        assert_abs_diff_eq!((ptpt.mat() - rho.mat()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn embed_places_single_qubit_gate_correctly() {
        let spec = HilbertSpec::qubits(2).unwrap();
        let x1 = Operator::embed(&spec, &[1], &qubit::sigma_x(), OpKind::Unitary).unwrap();
        let s00 = Ket::basis(spec.clone(), &[0, 0]).unwrap();
        let out = x1.apply(&s00).unwrap();
        let expect = Ket::basis(spec, &[0, 1]).unwrap();
        assert_abs_diff_eq!(out.overlap(&expect).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hermitian_eig_reconstructs_and_sorts() {
        let spec = HilbertSpec::new(&[4]).unwrap();
        let mut m = CMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = c((i * j) as f64 * 0.1, (i as f64 - j as f64) * 0.05);
            }
        }
        let m = hermitize(&m);
        let _ = spec;
        let (eigs, vecs) = hermitian_eig(&m).unwrap();
        assert!(eigs.windows(2).all(|w| w[0] <= w[1]));
        let mut lam = CMatrix::zeros(4, 4);
        for k in 0..4 {
            lam[(k, k)] = c(eigs[k], 0.0);
        }
        let rec = &vecs * lam * vecs.adjoint();
        assert_abs_diff_eq!((rec - m).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn svd_reconstructs_with_descending_values() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = c(1.0, 2.0);
        m[(0, 2)] = c(0.5, -0.5);
        m[(1, 1)] = c(-1.0, 0.25);
        m[(2, 0)] = c(0.0, 1.5);
        let (u, s, v_t) = svd_complex(&m).unwrap();
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let mut sig = CMatrix::zeros(3, 3);
        for k in 0..3 {
            sig[(k, k)] = c(s[k], 0.0);
        }
        let rec = u * sig * v_t;
        assert_abs_diff_eq!((rec - m).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_constructions_error() {
        let spec = HilbertSpec::qubits(1).unwrap();
        let bad = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(Ket::new(spec.clone(), bad), Err(QopError::NotNormalized { .. })));

        let mut nh = CMatrix::zeros(2, 2);
        nh[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(
            Operator::hermitian(spec.clone(), nh.clone()),
            Err(QopError::NotHermitian { .. })
        ));
        assert!(matches!(Operator::unitary(spec.clone(), nh), Err(QopError::NotUnitary { .. })));

        // |1⟩⟨1| − small negative weight on |0⟩⟨0| fails positivity.
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(-1e-6, 0.0);
        m[(1, 1)] = c(1.0 + 1e-6, 0.0);
        assert!(matches!(DensityOp::new(spec, m), Err(QopError::NotPositive { .. })));
    }
}
