//! Parent Hamiltonians of detailed-balanced Lindbladians on the doubled space.
//!
//! The doubled register puts the row index of an operator on qubits `0..n`
//! and the column index on qubits `n..2n`.

use crate::error::{Error, Result};
use crate::exec;
use crate::hamiltonian::{self, LocalHamiltonian, LocalOperator};
use crate::kms::{self, KmsForm, LindbladTerm, DB_TOL};
use crate::numerics::{self, DenseMatrix, StateVector, I};

/// Tolerance for positivity of −H^a and for locality of parent terms.
pub const PARENT_TOL: f64 = 1e-9;

/// Row-major vectorization, `v(X)[i·d + j] = X_ij`, so `v(|a⟩⟨b|) = |a⟩⊗|b⟩`.
pub fn vectorize(x: &DenseMatrix) -> StateVector {
    let d = x.ncols();
    StateVector::from_fn(x.nrows() * d, |k, _| x[(k / d, k % d)])
}

pub fn devectorize(v: &StateVector) -> Result<DenseMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::DimensionMismatch(format!("vector of length {} is not a square", v.len())));
    }
    Ok(DenseMatrix::from_fn(d, d, |i, j| v[i * d + j]))
}

/// Matrix of X ↦ A X B† on vectorized operators.
pub fn sandwich(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    numerics::kron(a, &numerics::conj(b))
}

/// Vectorized Heisenberg generator of one term:
/// iG⊗I − iI⊗Gᵀ + Σ L†⊗Lᵀ − ½L†L⊗I − ½I⊗LᵀL*.
pub fn vectorized_term(jumps: &[DenseMatrix], coherent: Option<&DenseMatrix>) -> DenseMatrix {
    let d = jumps.first().or(coherent).map(|m| m.nrows()).unwrap_or(1);
    let id = numerics::identity(d);
    let mut out = DenseMatrix::zeros(d * d, d * d);
    if let Some(g) = coherent {
        out += (numerics::kron(g, &id) - numerics::kron(&id, &g.transpose())) * I;
    }
    for l in jumps {
        let ld = l.adjoint();
        let lt = l.transpose();
        out += numerics::kron(&ld, &lt)
            - numerics::kron(&(&ld * l), &id).scale(0.5)
            - numerics::kron(&id, &(&lt * numerics::conj(l))).scale(0.5);
    }
    out
}

/// Sites of the doubled register holding `sites` in both halves.
pub fn doubled_sites(sites: &[usize], n: usize) -> Vec<usize> {
    sites.iter().cloned().chain(sites.iter().map(|s| s + n)).collect()
}

#[derive(Debug, Clone)]
pub struct ParentTerm {
    /// H^a restricted to its doubled support (qubits of the 2n register).
    pub local: LocalOperator,
    /// H^a on the whole doubled register.
    pub embedded: DenseMatrix,
    /// ‖H^a‖.
    pub norm: f64,
    /// ‖embed(local) − embedded‖_F.
    pub locality_residual: f64,
    /// ‖H^a − H^a†‖_F before symmetrizing.
    pub asymmetry: f64,
}

#[derive(Debug, Clone)]
pub struct ParentHamiltonian {
    pub n: usize,
    pub full: DenseMatrix,
    pub terms: Vec<ParentTerm>,
    /// v(√σ).
    pub ground: StateVector,
    pub kms: KmsForm,
    /// ‖full − v𝔥v⁻¹‖_F against the basis-action coherent form.
    pub cross_check: f64,
}

pub fn build_parent(terms: &[LindbladTerm], kms: &KmsForm) -> Result<ParentHamiltonian> {
    let n = kms.n;
    let conj_q = sandwich(&kms.quarter, &kms.quarter);
    let conj_qi = sandwich(&kms.inv_quarter, &kms.inv_quarter);
    let built = exec::try_map(terms, |t| {
        let (jumps, coherent) = t.embedded(n)?;
        let raw = &conj_q * vectorized_term(&jumps, coherent.as_ref()) * &conj_qi;
        let norm = numerics::op_norm(&raw).max(f64::MIN_POSITIVE);
        let residual = numerics::op_norm(&(&raw - raw.adjoint())) / norm.max(1.0);
        if residual > DB_TOL {
            return Err(Error::NotDetailedBalanced { residual, tol: DB_TOL });
        }
        let asymmetry = numerics::frobenius(&(&raw - raw.adjoint()));
        let embedded = (&raw + raw.adjoint()).scale(0.5);
        let support = doubled_sites(&t.support, n);
        let (local, locality_residual) = hamiltonian::restrict(&embedded, &support, 2 * n)?;
        let norm = numerics::op_norm(&embedded);
        Ok(ParentTerm { local, embedded, norm, locality_residual, asymmetry })
    })?;
    let dim = 1usize << (2 * n);
    let mut full = DenseMatrix::zeros(dim, dim);
    for t in &built {
        full += &t.embedded;
    }
    let l = kms::lindblad_superoperator(terms, n)?;
    let coherent = kms::coherent_form(&l, kms)?;
    let cross_check = numerics::frobenius(&(&full - &coherent.mat));
    Ok(ParentHamiltonian { n, full, terms: built, ground: vectorize(&kms.sqrt_sigma), kms: kms.clone(), cross_check })
}

impl ParentHamiltonian {
    /// −H^a / max(1, ‖H^a‖) on the doubled register, after checking −H^a ⪰ 0.
    pub fn frustration_free_hamiltonian(&self) -> Result<LocalHamiltonian> {
        let mut out = Vec::with_capacity(self.terms.len());
        for (a, t) in self.terms.iter().enumerate() {
            let neg = -&t.local.op;
            let eig = numerics::eigvalsh(&neg)?;
            if eig[0] < -PARENT_TOL * t.norm.max(1.0) {
                return Err(Error::PositivityFailure { term: a, max_eig: -eig[0] });
            }
            let op = neg.scale(1.0 / t.norm.max(1.0));
            let local = if t.locality_residual <= PARENT_TOL {
                LocalOperator::new(op, t.local.sites.clone())?
            } else {
                LocalOperator::new(-&t.embedded / numerics::real(t.norm.max(1.0)), (0..2 * self.n).collect())?
            };
            out.push(local);
        }
        LocalHamiltonian::new(2 * self.n, out)
    }
}

/// v(√σ_β) for σ_β ∝ e^{−βH}.
pub fn purified_gibbs(h: &LocalHamiltonian, beta: f64) -> Result<StateVector> {
    purified_gibbs_matrix(&hamiltonian::assemble(h)?, beta)
}

pub fn purified_gibbs_matrix(h: &DenseMatrix, beta: f64) -> Result<StateVector> {
    if !(beta >= 0.0) {
        return Err(Error::BadParams(format!("beta must be nonnegative, got {beta}")));
    }
    let eig = numerics::eigh(h)?;
    let sigma = kms::gibbs_from_eig(&eig, beta)?;
    let root = numerics::psd_power(&sigma, 0.5, 0.0)?;
    let v = vectorize(&root);
    let norm = v.norm();
    Ok(v / numerics::real(norm))
}

#[derive(Debug, Clone)]
pub struct ParentReport {
    /// ‖H^a v(√σ)‖ per term.
    pub frustration_residuals: Vec<f64>,
    pub max_frustration: f64,
    /// Largest ‖H^a − H^a†‖_F before symmetrization.
    pub hermiticity_residual: f64,
    /// Per-term locality residuals; `None` when H does not commute.
    pub locality_residuals: Option<Vec<f64>>,
    /// Largest number of other parent terms overlapping a given one.
    pub degree: usize,
    pub cross_check: f64,
    /// Largest eigenvalue of the full parent.
    pub top_eigenvalue: f64,
}

pub fn verify_parent(ph: &ParentHamiltonian, h: &LocalHamiltonian) -> Result<ParentReport> {
    let frustration_residuals: Vec<f64> = ph.terms.iter().map(|t| (&t.embedded * &ph.ground).norm()).collect();
    let max_frustration = frustration_residuals.iter().cloned().fold(0.0, f64::max);
    let hermiticity_residual = ph.terms.iter().map(|t| t.asymmetry).fold(0.0, f64::max);
    let locality_residuals = if h.is_commuting(1e-10)? {
        Some(ph.terms.iter().map(|t| t.locality_residual).collect())
    } else {
        log::warn!("Hamiltonian does not commute; parent locality not checked");
        None
    };
    let degree = (0..ph.terms.len())
        .map(|i| (0..ph.terms.len()).filter(|&j| j != i && ph.terms[i].local.overlaps(&ph.terms[j].local)).count())
        .max()
        .unwrap_or(0);
    let top_eigenvalue = *numerics::eigvalsh(&ph.full)?.last().expect("nonempty");
    Ok(ParentReport {
        frustration_residuals,
        max_frustration,
        hermiticity_residual,
        locality_residuals,
        degree,
        cross_check: ph.cross_check,
        top_eigenvalue,
    })
}
