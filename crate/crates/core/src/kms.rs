//! Superoperators, the σ-KMS inner product and detailed-balance diagnostics.
//!
//! Superoperators are stored as matrices acting on row-major vectorized
//! operators, `v(|i⟩⟨j|) = |i⟩⊗|j⟩` (see [`crate::parent::vectorize`]).
//! Everything here builds matrices by applying maps to the operator basis
//! `|k⟩⟨l|` one column at a time; the closed-form Kronecker expressions live in
//! the parent-Hamiltonian module and serve as an independent cross-check.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::LocalOperator;
use crate::numerics::{self, DenseMatrix, HermitianEig, I};
use crate::parent::{devectorize, vectorize};

/// Relative threshold below which an eigenvalue of 𝔥 counts as zero.
pub const KERNEL_TOL: f64 = 1e-9;
/// Default detailed-balance tolerance.
pub const DB_TOL: f64 = 1e-8;
/// Smallest admissible eigenvalue of a normalized σ.
pub const SIGMA_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Heisenberg,
    Schrodinger,
}

impl Picture {
    pub fn flip(self) -> Self {
        match self {
            Picture::Heisenberg => Picture::Schrodinger,
            Picture::Schrodinger => Picture::Heisenberg,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub mat: DenseMatrix,
    pub picture: Picture,
    pub n: usize,
}

impl Superoperator {
    pub fn op_dim(n: usize) -> usize {
        1usize << n
    }

    pub fn zero(n: usize, picture: Picture) -> Self {
        let d = 1usize << (2 * n);
        Self { mat: DenseMatrix::zeros(d, d), picture, n }
    }

    pub fn identity(n: usize, picture: Picture) -> Self {
        Self { mat: numerics::identity(1usize << (2 * n)), picture, n }
    }

    pub fn from_matrix(mat: DenseMatrix, picture: Picture, n: usize) -> Result<Self> {
        let d = 1usize << (2 * n);
        if mat.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "superoperator of shape {:?} on {n} qubits",
                mat.shape()
            )));
        }
        Ok(Self { mat, picture, n })
    }

    /// Builds the matrix of `f` by applying it to every basis operator |k⟩⟨l|.
    pub fn from_map(n: usize, picture: Picture, f: impl Fn(&DenseMatrix) -> DenseMatrix) -> Self {
        let d = 1usize << n;
        let mut mat = DenseMatrix::zeros(d * d, d * d);
        let mut basis = DenseMatrix::zeros(d, d);
        for k in 0..d {
            for l in 0..d {
                basis[(k, l)] = numerics::ONE;
                let col = vectorize(&f(&basis));
                mat.set_column(k * d + l, &col);
                basis[(k, l)] = numerics::ZERO;
            }
        }
        Self { mat, picture, n }
    }

    pub fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        devectorize(&(&self.mat * vectorize(x))).expect("superoperator dimension is a square")
    }

    /// Hilbert–Schmidt adjoint; flips the picture tag.
    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint(), picture: self.picture.flip(), n: self.n }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Result<Self> {
        if self.n != other.n || self.picture != other.picture {
            return Err(Error::DimensionMismatch("composing incompatible superoperators".into()));
        }
        Ok(Self { mat: &self.mat * &other.mat, picture: self.picture, n: self.n })
    }

    pub fn add(&self, other: &Superoperator) -> Result<Self> {
        if self.n != other.n || self.picture != other.picture {
            return Err(Error::DimensionMismatch("adding incompatible superoperators".into()));
        }
        Ok(Self { mat: &self.mat + &other.mat, picture: self.picture, n: self.n })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mat: self.mat.scale(s), picture: self.picture, n: self.n }
    }
}

/// One local Lindbladian: jumps plus an optional coherent part G, acting as
/// X ↦ i[G, X] + Σ_j L_j† X L_j − ½{L_j†L_j, X} in the Heisenberg picture.
#[derive(Debug, Clone)]
pub struct LindbladTerm {
    pub jumps: Vec<LocalOperator>,
    pub coherent: Option<LocalOperator>,
    /// Qubits the term may act on; contains every jump and coherent support.
    pub support: Vec<usize>,
}

impl LindbladTerm {
    pub fn new(jumps: Vec<LocalOperator>, coherent: Option<LocalOperator>) -> Self {
        let mut support: Vec<usize> = jumps
            .iter()
            .chain(coherent.iter())
            .flat_map(|o| o.sites.iter().cloned())
            .collect();
        support.sort_unstable();
        support.dedup();
        Self { jumps, coherent, support }
    }

    pub fn embedded(&self, n: usize) -> Result<(Vec<DenseMatrix>, Option<DenseMatrix>)> {
        let jumps = self.jumps.iter().map(|j| j.embed(n)).collect::<Result<Vec<_>>>()?;
        let coherent = self.coherent.as_ref().map(|g| g.embed(n)).transpose()?;
        Ok((jumps, coherent))
    }

    /// Multiplies every jump by √s and G by s, which scales the generator by s.
    pub fn rescaled(&self, s: f64) -> Self {
        let root = numerics::real(s.sqrt());
        let jumps = self
            .jumps
            .iter()
            .map(|j| LocalOperator { op: &j.op * root, sites: j.sites.clone() })
            .collect();
        let coherent = self
            .coherent
            .as_ref()
            .map(|g| LocalOperator { op: g.op.scale(s), sites: g.sites.clone() });
        Self { jumps, coherent, support: self.support.clone() }
    }
}

/// Heisenberg-picture action of a single term on `x`.
pub fn apply_term(jumps: &[DenseMatrix], coherent: Option<&DenseMatrix>, x: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(x.nrows(), x.ncols());
    if let Some(g) = coherent {
        out += (g * x - x * g) * I;
    }
    for l in jumps {
        let ld = l.adjoint();
        let k = &ld * l;
        out += &ld * x * l - (&k * x + x * &k).scale(0.5);
    }
    out
}

pub fn term_superoperator(term: &LindbladTerm, n: usize) -> Result<Superoperator> {
    if term.support.iter().any(|&s| s >= n) {
        return Err(Error::SupportOutOfRange { support: term.support.clone(), n });
    }
    let (jumps, coherent) = term.embedded(n)?;
    Ok(Superoperator::from_map(n, Picture::Heisenberg, |x| apply_term(&jumps, coherent.as_ref(), x)))
}

/// Heisenberg-picture generator Σ_m L_m.
pub fn lindblad_superoperator(terms: &[LindbladTerm], n: usize) -> Result<Superoperator> {
    let mut total = Superoperator::zero(n, Picture::Heisenberg);
    for t in terms {
        total = total.add(&term_superoperator(t, n)?)?;
    }
    Ok(total)
}

/// ‖L†(σ)‖₁ for a Heisenberg generator L.
pub fn stationarity_residual(l: &Superoperator, sigma: &DenseMatrix) -> Result<f64> {
    let s = if l.picture == Picture::Heisenberg { l.adjoint() } else { l.clone() };
    let out = s.apply(sigma);
    numerics::schatten1_distance(&out, &DenseMatrix::zeros(out.nrows(), out.ncols()))
}

/// A full-rank state with cached fractional powers.
#[derive(Debug, Clone)]
pub struct KmsForm {
    pub n: usize,
    pub sigma: DenseMatrix,
    pub sqrt_sigma: DenseMatrix,
    pub inv_sqrt_sigma: DenseMatrix,
    pub quarter: DenseMatrix,
    pub inv_quarter: DenseMatrix,
    pub sigma_min: f64,
}

impl KmsForm {
    /// Normalizes `sigma` to unit trace and caches σ^{±1/2}, σ^{±1/4}.
    pub fn new(sigma: &DenseMatrix) -> Result<Self> {
        let d = sigma.nrows();
        if !d.is_power_of_two() || !sigma.is_square() {
            return Err(Error::DimensionMismatch(format!("state of shape {:?}", sigma.shape())));
        }
        let eig = numerics::eigh(sigma)?;
        let tr: f64 = eig.eigenvalues.iter().sum();
        let sigma_min = eig.eigenvalues[0] / tr;
        if !(sigma_min > SIGMA_FLOOR) {
            return Err(Error::SingularSigma { min_eig: sigma_min });
        }
        let pow = |p: f64| eig.map(|x| (x / tr).powf(p));
        Ok(Self {
            n: d.trailing_zeros() as usize,
            sigma: pow(1.0),
            sqrt_sigma: pow(0.5),
            inv_sqrt_sigma: pow(-0.5),
            quarter: pow(0.25),
            inv_quarter: pow(-0.25),
            sigma_min,
        })
    }

    /// Gibbs state ∝ e^{−βH} of a Hermitian matrix.
    pub fn gibbs(h: &DenseMatrix, beta: f64) -> Result<Self> {
        Self::new(&gibbs_state(h, beta)?)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// Γ_σ^{1/2}: X ↦ σ^{1/4} X σ^{1/4}.
    pub fn gamma_half(&self) -> Superoperator {
        Superoperator::from_map(self.n, Picture::Heisenberg, |x| &self.quarter * x * &self.quarter)
    }

    /// Γ_σ^{−1/2}: X ↦ σ^{−1/4} X σ^{−1/4}.
    pub fn gamma_half_inv(&self) -> Superoperator {
        Superoperator::from_map(self.n, Picture::Heisenberg, |x| &self.inv_quarter * x * &self.inv_quarter)
    }
}

/// Normalized e^{−βH}, computed from the spectrum shifted by the ground energy.
pub fn gibbs_state(h: &DenseMatrix, beta: f64) -> Result<DenseMatrix> {
    let eig = numerics::eigh(h)?;
    gibbs_from_eig(&eig, beta)
}

pub fn gibbs_from_eig(eig: &HermitianEig, beta: f64) -> Result<DenseMatrix> {
    let e0 = eig.eigenvalues[0];
    let z: f64 = eig.eigenvalues.iter().map(|&e| (-beta * (e - e0)).exp()).sum();
    Ok(eig.map(|e| (-beta * (e - e0)).exp() / z))
}

/// Tr[X† √σ Y √σ].
pub fn kms_inner_product(x: &DenseMatrix, y: &DenseMatrix, kms: &KmsForm) -> Result<Complex64> {
    let d = kms.dim();
    if x.shape() != (d, d) || y.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "{:?}, {:?} against a {d}-dimensional state",
            x.shape(),
            y.shape()
        )));
    }
    Ok((x.adjoint() * &kms.sqrt_sigma * y * &kms.sqrt_sigma).trace())
}

pub fn kms_norm(x: &DenseMatrix, kms: &KmsForm) -> Result<f64> {
    Ok(kms_inner_product(x, x, kms)?.re.max(0.0).sqrt())
}

fn check_heisenberg(l: &Superoperator, kms: &KmsForm) -> Result<()> {
    if l.picture != Picture::Heisenberg {
        return Err(Error::BadInputs("coherent form needs a Heisenberg-picture generator".into()));
    }
    if l.n != kms.n {
        return Err(Error::DimensionMismatch(format!("{}-qubit map, {}-qubit state", l.n, kms.n)));
    }
    Ok(())
}

/// 𝔥 = Γ_σ^{1/2} L Γ_σ^{−1/2}.
pub fn coherent_form(l: &Superoperator, kms: &KmsForm) -> Result<Superoperator> {
    check_heisenberg(l, kms)?;
    let mat = kms.gamma_half().mat * &l.mat * kms.gamma_half_inv().mat;
    Ok(Superoperator { mat, picture: Picture::Heisenberg, n: l.n })
}

/// ‖𝔥 − 𝔥†‖ / max(1, ‖𝔥‖), spectral norms.
pub fn db_residual(l: &Superoperator, kms: &KmsForm) -> Result<f64> {
    let h = coherent_form(l, kms)?;
    Ok(relative_asymmetry(&h.mat))
}

fn relative_asymmetry(h: &DenseMatrix) -> f64 {
    numerics::op_norm(&(h - h.adjoint())) / numerics::op_norm(h).max(1.0)
}

/// Hermitian part of 𝔥 after checking detailed balance.
fn balanced_form(l: &Superoperator, kms: &KmsForm, tol: f64) -> Result<(DenseMatrix, f64, f64)> {
    let h = coherent_form(l, kms)?.mat;
    let residual = relative_asymmetry(&h);
    if residual > tol {
        return Err(Error::NotDetailedBalanced { residual, tol });
    }
    let herm = numerics::frobenius(&(&h - h.adjoint()));
    Ok(((&h + h.adjoint()).scale(0.5), residual, herm))
}

#[derive(Debug, Clone)]
pub struct StationaryChannel {
    /// P_m in the Heisenberg picture.
    pub channel: Superoperator,
    /// Π₀, the kernel projector of 𝔥_m (Hermitian).
    pub kernel_projector: DenseMatrix,
    pub kernel_dim: usize,
}

/// P_m = lim_{t→∞} e^{t L_m} = Γ^{−1/2} Π₀ Γ^{1/2}.
pub fn stationary_channel(lm: &Superoperator, kms: &KmsForm, tol: f64) -> Result<StationaryChannel> {
    let (h, _, _) = balanced_form(lm, kms, tol)?;
    let eig = numerics::eigh(&h)?;
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let top = *eig.eigenvalues.last().expect("nonempty spectrum");
    if top > tol * scale {
        return Err(Error::PositiveEigenvalue { value: top });
    }
    let cut = KERNEL_TOL * scale;
    let kernel_dim = eig.eigenvalues.iter().filter(|x| x.abs() <= cut).count();
    let kernel_projector = eig.projector(|x| x.abs() <= cut);
    let mat = kms.gamma_half_inv().mat * &kernel_projector * kms.gamma_half().mat;
    Ok(StationaryChannel {
        channel: Superoperator { mat, picture: Picture::Heisenberg, n: lm.n },
        kernel_projector,
        kernel_dim,
    })
}

#[derive(Debug, Clone)]
pub struct CptpReport {
    pub min_choi_eigenvalue: f64,
    /// ‖Tr_out J − I‖_F for the Schrödinger-picture Choi matrix J.
    pub trace_preservation_residual: f64,
    pub completely_positive: bool,
    pub trace_preserving: bool,
}

impl CptpReport {
    pub fn is_cptp(&self) -> bool {
        self.completely_positive && self.trace_preserving
    }
}

/// Choi matrix J = Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|) of the Schrödinger-picture map.
pub fn choi_matrix(p: &Superoperator) -> DenseMatrix {
    let s = if p.picture == Picture::Heisenberg { p.adjoint() } else { p.clone() };
    let d = Superoperator::op_dim(p.n);
    DenseMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, a) = (r / d, r % d);
        let (j, b) = (c / d, c % d);
        s.mat[(a * d + b, i * d + j)]
    })
}

pub fn cptp_check(p: &Superoperator, tol: f64) -> Result<CptpReport> {
    let d = Superoperator::op_dim(p.n);
    let choi = choi_matrix(p);
    let herm = (&choi + choi.adjoint()).scale(0.5);
    let min_choi_eigenvalue = numerics::eigvalsh(&herm)?[0];
    let reduced = numerics::partial_trace(&choi, &[0], &[d, d])?;
    let trace_preservation_residual = numerics::frobenius(&(reduced - numerics::identity(d)));
    let choi_asym = numerics::frobenius(&(&choi - choi.adjoint()));
    Ok(CptpReport {
        min_choi_eigenvalue,
        trace_preservation_residual,
        completely_positive: min_choi_eigenvalue >= -tol && choi_asym <= tol.max(1e-12) * (d as f64),
        trace_preserving: trace_preservation_residual <= tol,
    })
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Eigenvalues of 𝔥, descending.
    pub eigenvalues: Vec<f64>,
    /// λ₁ − λ₂.
    pub gap: f64,
    pub kernel_dim: usize,
    pub db_residual: f64,
    /// ‖𝔥 − 𝔥†‖_F.
    pub hermiticity_residual: f64,
    /// Diagnostic ε_φ of the detectability lemma, when computed.
    pub dl_residual_energy: Option<f64>,
}

impl SpectralReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, db_residual: f64, hermiticity_residual: f64) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let scale = eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let kernel_dim = eigenvalues.iter().filter(|x| x.abs() <= KERNEL_TOL * scale).count();
        let gap = if eigenvalues.len() > 1 && kernel_dim <= 1 { (eigenvalues[0] - eigenvalues[1]).max(0.0) } else { 0.0 };
        Self { eigenvalues, gap, kernel_dim, db_residual, hermiticity_residual, dl_residual_energy: None }
    }

    pub fn is_irreducible(&self) -> bool {
        self.kernel_dim == 1
    }
}

pub fn spectral_report(l: &Superoperator, kms: &KmsForm, tol: f64) -> Result<SpectralReport> {
    let (h, residual, herm) = balanced_form(l, kms, tol)?;
    let eigenvalues = numerics::eigvalsh(&h)?;
    let report = SpectralReport::from_eigenvalues(eigenvalues, residual, herm);
    if report.kernel_dim > 1 {
        log::warn!("generator is reducible: kernel dimension {}", report.kernel_dim);
    }
    Ok(report)
}
