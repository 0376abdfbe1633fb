//! Thermal Lindbladians built from coupling operators by exact Bohr-frequency
//! sums.
//!
//! Convention: `A_ω = Σ_{E−E'=ω} Π_{E'} A Π_E`, so `A_ω` lowers the energy by
//! `ω` and `e^{iHt} A_ω e^{−iHt} = e^{−iωt} A_ω`. A time-domain filter
//! `f(t) = (1/2π)∫ f̂(ω) e^{−itω} dω` then contributes `f̂(−ω)` to `A_ω`.
//!
//! With this convention σ ∝ e^{−βH} is detailed balanced when
//! `ŵ(ω) e^{−βω/2} = conj ŵ(−ω)` and the coherent part uses
//! `tanh(βω/4)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{self, LocalHamiltonian, LocalOperator};
use crate::kms::{self, KmsForm, LindbladTerm};
use crate::numerics::{self, paulis, DenseMatrix, ZERO};

/// Relative Bohr clustering tolerance (times max(1, ‖H‖)).
pub const CLUSTER_TOL: f64 = 1e-9;
/// Largest residual accepted when restricting a jump to its dressed support.
pub const RESTRICT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BohrDecomposition {
    /// Distinct frequencies, ascending.
    pub frequencies: Vec<f64>,
    /// `components[i]` is `A_{frequencies[i]}`; zero blocks are dropped.
    pub components: Vec<DenseMatrix>,
}

impl BohrDecomposition {
    pub fn component(&self, omega: f64, tol: f64) -> Option<&DenseMatrix> {
        self.frequencies.iter().position(|&w| (w - omega).abs() <= tol).map(|i| &self.components[i])
    }

    pub fn sum(&self, weight: impl Fn(f64) -> Complex64, dim: usize) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(dim, dim);
        for (&w, a) in self.frequencies.iter().zip(&self.components) {
            let c = weight(w);
            if c != ZERO {
                out += a * c;
            }
        }
        out
    }
}

fn cluster(sorted: &[f64], tol: f64) -> Vec<(f64, Vec<usize>)> {
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            let members: Vec<usize> = (start..i).collect();
            let mean = members.iter().map(|&k| sorted[k]).sum::<f64>() / members.len() as f64;
            out.push((mean, members));
            start = i;
        }
    }
    out
}

pub fn bohr_decompose(a: &DenseMatrix, h: &DenseMatrix, cluster_tol: f64) -> Result<BohrDecomposition> {
    if a.shape() != h.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} against {:?}", a.shape(), h.shape())));
    }
    let eig = numerics::eigh(h)?;
    let d = h.nrows();
    let mut level = vec![0.0; d];
    for (e, members) in cluster(&eig.eigenvalues, cluster_tol) {
        for k in members {
            level[k] = e;
        }
    }
    let v = &eig.eigenvectors;
    let rotated = v.adjoint() * a * v;
    // Entry (r, c) sends level c to level r, lowering the energy by E_c − E_r.
    let mut entries: Vec<(f64, usize, usize)> = Vec::new();
    for r in 0..d {
        for c in 0..d {
            if rotated[(r, c)] != ZERO {
                entries.push((level[c] - level[r], r, c));
            }
        }
    }
    entries.sort_by(|x, y| x.0.total_cmp(&y.0));
    let omegas: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let scale = numerics::frobenius(a).max(f64::MIN_POSITIVE);
    let mut frequencies = Vec::new();
    let mut components = Vec::new();
    for (w, members) in cluster(&omegas, cluster_tol) {
        let mut block = DenseMatrix::zeros(d, d);
        for k in members {
            let (_, r, c) = entries[k];
            block[(r, c)] = rotated[(r, c)];
        }
        if numerics::frobenius(&block) <= 1e-15 * scale {
            continue;
        }
        frequencies.push(w);
        components.push(v * block * v.adjoint());
    }
    Ok(BohrDecomposition { frequencies, components })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// X on every site.
    X,
    /// X and Z on every site, as separate couplings.
    Xz,
}

impl FromStr for CouplingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(CouplingKind::X),
            "xz" => Ok(CouplingKind::Xz),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for CouplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingKind::X => "x",
            CouplingKind::Xz => "xz",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CouplingSet {
    pub couplings: Vec<LocalOperator>,
}

impl CouplingSet {
    pub fn new(couplings: Vec<LocalOperator>) -> Result<Self> {
        for a in &couplings {
            let r = numerics::hermiticity_residual(&a.op);
            if r > 1e-12 * numerics::frobenius(&a.op).max(1.0) {
                return Err(Error::NotHermitian { residual: r, tol: 1e-12 });
            }
        }
        Ok(Self { couplings })
    }

    pub fn single_site(kind: CouplingKind, n: usize) -> Self {
        let mut couplings = Vec::new();
        for i in 0..n {
            couplings.push(LocalOperator { op: paulis::x(), sites: vec![i] });
            if kind == CouplingKind::Xz {
                couplings.push(LocalOperator { op: paulis::z(), sites: vec![i] });
            }
        }
        Self { couplings }
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// ŵ(ω) = q(−ω) e^{β·x·ω}, the literal filter with exponent x.
    PaperF,
    /// ŵ(ω) = (1 + e^{−βω})^{−1/2}.
    DaviesKms,
    /// ŵ(ω) = q(ω) read from the table.
    Custom,
}

impl FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_f" => Ok(WeightKind::PaperF),
            "davies_kms" => Ok(WeightKind::DaviesKms),
            "custom" => Ok(WeightKind::Custom),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightKind::PaperF => "paper_f",
            WeightKind::DaviesKms => "davies_kms",
            WeightKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile {
    pub kind: WeightKind,
    pub beta: f64,
    pub weight_exponent: f64,
    pub tanh_scale: f64,
    /// Multiplies the tanh argument by β as well.
    pub tanh_beta_scaled: bool,
    /// κ support half-width; `None` means 2‖H‖.
    pub kappa_cutoff: Option<f64>,
    /// Piecewise-linear table (ω, q(ω)), ascending in ω. Empty means q ≡ 1.
    pub q: Vec<(f64, Complex64)>,
    /// Rescale each term so that ‖𝔥_m‖ ≤ 1.
    pub normalize: bool,
}

impl WeightProfile {
    pub fn davies_kms(beta: f64) -> Self {
        Self {
            kind: WeightKind::DaviesKms,
            beta,
            weight_exponent: 1.0,
            tanh_scale: 0.25,
            tanh_beta_scaled: true,
            kappa_cutoff: None,
            q: Vec::new(),
            normalize: false,
        }
    }

    pub fn paper_f(beta: f64) -> Self {
        Self { kind: WeightKind::PaperF, tanh_beta_scaled: false, ..Self::davies_kms(beta) }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::BadParams(format!("beta must be finite and nonnegative, got {}", self.beta)));
        }
        if !self.weight_exponent.is_finite() || !self.tanh_scale.is_finite() {
            return Err(Error::BadParams("weight exponent and tanh scale must be finite".into()));
        }
        if let Some(k) = self.kappa_cutoff {
            if !(k >= 0.0) {
                return Err(Error::BadParams(format!("kappa cutoff must be nonnegative, got {k}")));
            }
        }
        if self.kind == WeightKind::Custom && self.q.is_empty() {
            return Err(Error::BadParams("custom weights need a q table".into()));
        }
        if self.q.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::BadParams("q table frequencies must be strictly increasing".into()));
        }
        for &(w, v) in &self.q {
            let mirror = self.q_at(-w);
            if (mirror - v.conj()).norm() > 1e-12 * v.norm().max(1.0) {
                return Err(Error::BadParams(format!("q({w}) is not the conjugate of q({})", -w)));
            }
        }
        Ok(())
    }

    /// Table lookup with linear interpolation and constant extrapolation.
    pub fn q_at(&self, omega: f64) -> Complex64 {
        let t = &self.q;
        match t.len() {
            0 => numerics::ONE,
            1 => t[0].1,
            _ => {
                if omega <= t[0].0 {
                    return t[0].1;
                }
                if omega >= t[t.len() - 1].0 {
                    return t[t.len() - 1].1;
                }
                let k = t.partition_point(|e| e.0 <= omega);
                let (w0, v0) = t[k - 1];
                let (w1, v1) = t[k];
                let s = (omega - w0) / (w1 - w0);
                v0 * (1.0 - s) + v1 * s
            }
        }
    }

    /// Weight of the component `A_ω` in the jump operator.
    pub fn jump_weight(&self, omega: f64) -> Complex64 {
        match self.kind {
            WeightKind::DaviesKms => numerics::real(glauber(self.beta * omega)),
            WeightKind::PaperF => self.q_at(-omega) * (self.beta * self.weight_exponent * omega).exp(),
            WeightKind::Custom => self.q_at(omega),
        }
    }

    pub fn effective_tanh_scale(&self) -> f64 {
        if self.tanh_beta_scaled {
            self.tanh_scale * self.beta
        } else {
            self.tanh_scale
        }
    }

    pub fn kappa(&self, omega: f64, norm_h: f64) -> f64 {
        let cut = self.kappa_cutoff.unwrap_or(2.0 * norm_h);
        if omega.abs() <= cut * (1.0 + 1e-12) {
            1.0
        } else {
            0.0
        }
    }

    /// Coefficient of `(L†L)_ν` in G, i.e. ĝ(−ν).
    pub fn coherent_weight(&self, nu: f64, norm_h: f64) -> Complex64 {
        let s = self.effective_tanh_scale();
        Complex64::new(0.0, -0.5 * (s * nu).tanh() * self.kappa(nu, norm_h))
    }
}

/// (1 + e^{−x})^{−1/2}, evaluated without overflow.
fn glauber(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp()).sqrt()
    } else {
        (x / 2.0).exp() / (1.0 + x.exp()).sqrt()
    }
}

fn cluster_tol(h: &DenseMatrix) -> (f64, f64) {
    let norm = numerics::op_norm(h);
    (norm, CLUSTER_TOL * norm.max(1.0))
}

/// L = Σ_ω ŵ(ω) A_ω on the full register.
pub fn build_jump(a: &LocalOperator, h: &DenseMatrix, w: &WeightProfile) -> Result<DenseMatrix> {
    let n = h.nrows().trailing_zeros() as usize;
    let full = a.embed(n)?;
    let (_, tol) = cluster_tol(h);
    let bohr = bohr_decompose(&full, h, tol)?;
    Ok(bohr.sum(|om| w.jump_weight(om), h.nrows()))
}

/// G = Σ_ν ĝ(−ν) (L†L)_ν.
pub fn build_coherent(l: &DenseMatrix, h: &DenseMatrix, w: &WeightProfile) -> Result<DenseMatrix> {
    let k = l.adjoint() * l;
    let (norm_h, tol) = cluster_tol(h);
    let bohr = bohr_decompose(&k, h, tol)?;
    let g = bohr.sum(|nu| w.coherent_weight(nu, norm_h), h.nrows());
    let cut = w.kappa_cutoff.unwrap_or(2.0 * norm_h);
    let has_nonzero = bohr.frequencies.iter().any(|&nu| nu.abs() > tol);
    if has_nonzero && bohr.frequencies.iter().all(|&nu| nu.abs() <= tol || nu.abs() > cut) {
        log::warn!("kappa cutoff {cut} excludes every nonzero Bohr frequency; coherent term vanishes");
    }
    // Hermitian by construction; remove rounding asymmetry.
    Ok((&g + g.adjoint()).scale(0.5))
}

/// supp(A) together with every Hamiltonian term touching it.
pub fn dressed_support(a: &LocalOperator, h: &LocalHamiltonian) -> Vec<usize> {
    if !h.is_commuting(1e-10).unwrap_or(false) {
        log::warn!("dressed support is only meaningful for commuting Hamiltonians");
    }
    let mut out = a.sites.clone();
    for t in &h.terms {
        if t.overlaps(a) {
            out.extend(t.sites.iter().cloned());
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// One Lindblad term per coupling. For commuting H the jump and coherent
/// operators are stored on their dressed supports.
pub fn build_model(h: &LocalHamiltonian, couplings: &CouplingSet, w: &WeightProfile) -> Result<Vec<LindbladTerm>> {
    w.validate()?;
    let n = h.n;
    for a in &couplings.couplings {
        if a.sites.iter().any(|&s| s >= n) {
            return Err(Error::SupportOutOfRange { support: a.sites.clone(), n });
        }
    }
    let hfull = hamiltonian::assemble(h)?;
    let commuting = h.is_commuting(1e-10)?;
    let all_sites: Vec<usize> = (0..n).collect();
    let mut terms = Vec::with_capacity(couplings.len());
    for a in &couplings.couplings {
        let l = build_jump(a, &hfull, w)?;
        let g = build_coherent(&l, &hfull, w)?;
        let support = if commuting { dressed_support(a, h) } else { all_sites.clone() };
        let (lj, lres) = hamiltonian::restrict(&l, &support, n)?;
        let (gj, gres) = hamiltonian::restrict(&g, &support, n)?;
        let (lj, gj) = if lres.max(gres) <= RESTRICT_TOL {
            (lj, gj)
        } else {
            log::warn!("jump does not factor on its dressed support (residual {:.3e})", lres.max(gres));
            (LocalOperator::new(l, all_sites.clone())?, LocalOperator::new(g, all_sites.clone())?)
        };
        let coherent = (numerics::frobenius(&gj.op) > 0.0).then_some(gj);
        terms.push(LindbladTerm::new(vec![lj], coherent));
    }
    if w.normalize {
        let kms = KmsForm::gibbs(&hfull, w.beta)?;
        terms = normalize_terms(terms, &kms, n)?;
    }
    Ok(terms)
}

/// Divides each term by max(1, ‖𝔥_m‖).
pub fn normalize_terms(terms: Vec<LindbladTerm>, kms: &KmsForm, n: usize) -> Result<Vec<LindbladTerm>> {
    terms
        .into_iter()
        .map(|t| {
            let h = kms::coherent_form(&kms::term_superoperator(&t, n)?, kms)?;
            let norm = numerics::op_norm(&h.mat);
            Ok(if norm > 1.0 { t.rescaled(1.0 / norm) } else { t })
        })
        .collect()
}

/// Terms plus the Gibbs state they should fix.
#[derive(Debug, Clone)]
pub struct ThermalModel {
    pub n: usize,
    pub beta: f64,
    pub terms: Vec<LindbladTerm>,
    pub kms: KmsForm,
    pub hamiltonian: DenseMatrix,
}

pub fn thermal_model(h: &LocalHamiltonian, couplings: &CouplingSet, w: &WeightProfile) -> Result<ThermalModel> {
    let terms = build_model(h, couplings, w)?;
    let hamiltonian = hamiltonian::assemble(h)?;
    let kms = KmsForm::gibbs(&hamiltonian, w.beta)?;
    Ok(ThermalModel { n: h.n, beta: w.beta, terms, kms, hamiltonian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_instance, InstanceKind};
    use crate::kms::{db_residual, lindblad_superoperator, stationarity_residual};
    use crate::numerics::{real, ONE};
    use approx::assert_abs_diff_eq;

    fn ket_bra(r: usize, c: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(2, 2);
        m[(r, c)] = ONE;
        m
    }

    fn single_z() -> LocalHamiltonian {
        LocalHamiltonian::new(1, vec![LocalOperator::new(paulis::z(), vec![0]).unwrap()]).unwrap()
    }

    #[test]
    fn bohr_of_x_under_z() {
        let b = bohr_decompose(&paulis::x(), &paulis::z(), 1e-9).unwrap();
        assert_eq!(b.frequencies.len(), 2);
        assert_abs_diff_eq!(b.frequencies[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.frequencies[1], 2.0, epsilon = 1e-12);
        assert!(numerics::frobenius(&(b.component(2.0, 1e-9).unwrap() - ket_bra(1, 0))) < 1e-12);
        assert!(numerics::frobenius(&(b.component(-2.0, 1e-9).unwrap() - ket_bra(0, 1))) < 1e-12);
    }

    #[test]
    fn bohr_trivial_cases() {
        let b = bohr_decompose(&paulis::z(), &paulis::z(), 1e-9).unwrap();
        assert_eq!(b.frequencies, vec![0.0]);
        assert!(numerics::frobenius(&(&b.components[0] - paulis::z())) < 1e-12);
        let b = bohr_decompose(&DenseMatrix::zeros(2, 2), &paulis::z(), 1e-9).unwrap();
        assert!(b.frequencies.is_empty());
    }

    #[test]
    fn bohr_merges_degenerate_levels() {
        let h = build_instance(InstanceKind::ZzChain, 3, 0).unwrap();
        let hf = hamiltonian::assemble(&h).unwrap();
        let a = LocalOperator::new(paulis::x(), vec![1]).unwrap().embed(3).unwrap();
        let b = bohr_decompose(&a, &hf, 1e-9).unwrap();
        // Flipping the middle spin changes the energy by −2, 0 or +2.
        assert_eq!(b.frequencies.len(), 3);
        assert!(numerics::frobenius(&(b.sum(|_| ONE, 8) - a)) < 1e-12);
    }

    #[test]
    fn davies_jump_entries() {
        let w = WeightProfile::davies_kms(1.0);
        let a = LocalOperator::new(paulis::x(), vec![0]).unwrap();
        let l = build_jump(&a, &paulis::z(), &w).unwrap();
        // Lowering |0⟩ → |1⟩ (ω = 2) and raising (ω = −2).
        let down = 1.0 / (1.0 + (-2.0f64).exp()).sqrt();
        let up = 1.0 / (1.0 + 2.0f64.exp()).sqrt();
        assert_abs_diff_eq!(l[(1, 0)].re, down, epsilon = 1e-14);
        assert_abs_diff_eq!(l[(0, 1)].re, up, epsilon = 1e-14);
        assert_abs_diff_eq!(l[(0, 0)].norm() + l[(1, 1)].norm(), 0.0, epsilon = 1e-14);
        // Rate ratio e^{βω}, amplitude ratio e^{β}.
        assert_abs_diff_eq!(down / up, 1.0f64.exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(down * down + up * up, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn unit_weights_at_infinite_temperature_return_the_coupling() {
        let w = WeightProfile::paper_f(0.0);
        let a = LocalOperator::new(paulis::x(), vec![0]).unwrap();
        let l = build_jump(&a, &paulis::z(), &w).unwrap();
        assert!(numerics::frobenius(&(l - paulis::x())) < 1e-14);
        let zero = LocalOperator::new(DenseMatrix::zeros(2, 2), vec![0]).unwrap();
        let l = build_jump(&zero, &paulis::z(), &w).unwrap();
        assert_eq!(numerics::frobenius(&l), 0.0);
    }

    #[test]
    fn coherent_term_vanishes_for_eigenoperator_jumps() {
        let w = WeightProfile::davies_kms(1.0);
        let a = LocalOperator::new(paulis::x(), vec![0]).unwrap();
        let l = build_jump(&a, &paulis::z(), &w).unwrap();
        let g = build_coherent(&l, &paulis::z(), &w).unwrap();
        assert!(numerics::frobenius(&g) < 1e-15);
    }

    #[test]
    fn coherent_term_with_kappa_excluding_everything() {
        // Non-commuting H so that L†L has off-diagonal Bohr components.
        let h = paulis::z() + paulis::x().scale(0.3);
        let mut w = WeightProfile::davies_kms(1.0);
        let a = LocalOperator::new(paulis::x(), vec![0]).unwrap();
        let l = build_jump(&a, &h, &w).unwrap();
        assert!(numerics::frobenius(&build_coherent(&l, &h, &w).unwrap()) > 1e-6);
        w.kappa_cutoff = Some(1e-6);
        assert!(numerics::frobenius(&build_coherent(&l, &h, &w).unwrap()) < 1e-15);
    }

    #[test]
    fn single_qubit_fixed_point() {
        let h = single_z();
        let model = thermal_model(&h, &CouplingSet::single_site(CouplingKind::X, 1), &WeightProfile::davies_kms(1.0)).unwrap();
        let l = lindblad_superoperator(&model.terms, 1).unwrap();
        let z = (-1.0f64).exp() + 1.0f64.exp();
        let expected = DenseMatrix::from_row_slice(2, 2, &[real((-1.0f64).exp() / z), ZERO, ZERO, real(1.0f64.exp() / z)]);
        assert!(numerics::frobenius(&(&model.kms.sigma - &expected)) < 1e-14);
        assert!(stationarity_residual(&l, &expected).unwrap() < 1e-14);
        assert!(db_residual(&l, &model.kms).unwrap() < 1e-12);
    }

    #[test]
    fn infinite_temperature_fixes_the_maximally_mixed_state() {
        let h = build_instance(InstanceKind::ZzChain, 2, 0).unwrap();
        let model = thermal_model(&h, &CouplingSet::single_site(CouplingKind::X, 2), &WeightProfile::davies_kms(0.0)).unwrap();
        let l = lindblad_superoperator(&model.terms, 2).unwrap();
        let mixed = numerics::identity(4).scale(0.25);
        assert!(stationarity_residual(&l, &mixed).unwrap() < 1e-14);
    }

    #[test]
    fn zz_chain_terms_are_each_detailed_balanced() {
        let h = build_instance(InstanceKind::ZzChain, 3, 0).unwrap();
        let model = thermal_model(&h, &CouplingSet::single_site(CouplingKind::X, 3), &WeightProfile::davies_kms(0.5)).unwrap();
        assert_eq!(model.terms.len(), 3);
        for t in &model.terms {
            let lm = kms::term_superoperator(t, 3).unwrap();
            assert!(db_residual(&lm, &model.kms).unwrap() <= 1e-8);
        }
        assert_eq!(model.terms[0].support, vec![0, 1]);
        assert_eq!(model.terms[1].support, vec![0, 1, 2]);
    }

    #[test]
    fn literal_filter_breaks_detailed_balance_but_quarter_exponent_restores_it() {
        let h = build_instance(InstanceKind::ZzChain, 2, 0).unwrap();
        let couplings = CouplingSet::single_site(CouplingKind::X, 2);
        let literal = thermal_model(&h, &couplings, &WeightProfile::paper_f(0.5)).unwrap();
        let l = lindblad_superoperator(&literal.terms, 2).unwrap();
        assert!(db_residual(&l, &literal.kms).unwrap() > 1e-3);
        let quarter = WeightProfile { weight_exponent: 0.25, ..WeightProfile::paper_f(0.5) };
        let m = thermal_model(&h, &couplings, &quarter).unwrap();
        let l = lindblad_superoperator(&m.terms, 2).unwrap();
        assert!(db_residual(&l, &m.kms).unwrap() <= 1e-10);
    }

    #[test]
    fn tanh_scaling_matters_for_noncommuting_couplings() {
        // Transverse-field chain: L†L does not commute with H, so G ≠ 0.
        let zz = numerics::kron(&paulis::z(), &paulis::z());
        let terms = vec![
            LocalOperator::new(zz, vec![0, 1]).unwrap(),
            LocalOperator::new(paulis::x().scale(0.7), vec![0]).unwrap(),
            LocalOperator::new(paulis::x().scale(0.4), vec![1]).unwrap(),
        ];
        let h = LocalHamiltonian::new(2, terms).unwrap();
        let couplings = CouplingSet::single_site(CouplingKind::Xz, 2);
        let beta = 2.0;
        let scaled = thermal_model(&h, &couplings, &WeightProfile::davies_kms(beta)).unwrap();
        assert!(scaled.terms.iter().any(|t| t.coherent.is_some()));
        let l = lindblad_superoperator(&scaled.terms, 2).unwrap();
        assert!(db_residual(&l, &scaled.kms).unwrap() <= 1e-9);
        let literal = WeightProfile { tanh_beta_scaled: false, ..WeightProfile::davies_kms(beta) };
        let m = thermal_model(&h, &couplings, &literal).unwrap();
        let l = lindblad_superoperator(&m.terms, 2).unwrap();
        assert!(db_residual(&l, &m.kms).unwrap() > 1e-4);
        // At β = 1 the two readings coincide.
        let lit1 = WeightProfile { tanh_beta_scaled: false, ..WeightProfile::davies_kms(1.0) };
        let m = thermal_model(&h, &couplings, &lit1).unwrap();
        let l = lindblad_superoperator(&m.terms, 2).unwrap();
        assert!(db_residual(&l, &m.kms).unwrap() <= 1e-9);
    }

    #[test]
    fn dressed_support_examples() {
        let h = build_instance(InstanceKind::ZzChain, 4, 0).unwrap();
        let a1 = LocalOperator::new(paulis::x(), vec![1]).unwrap();
        assert_eq!(dressed_support(&a1, &h), vec![0, 1, 2]);
        let a0 = LocalOperator::new(paulis::x(), vec![0]).unwrap();
        assert_eq!(dressed_support(&a0, &h), vec![0, 1]);
        let field = build_instance(InstanceKind::FieldChain, 3, 0).unwrap();
        assert_eq!(dressed_support(&a1, &field), vec![1]);
    }

    #[test]
    fn q_table_validation_and_interpolation() {
        let mut w = WeightProfile::paper_f(1.0);
        w.q = vec![(-1.0, real(0.5)), (0.0, real(1.0)), (1.0, real(0.5))];
        w.validate().unwrap();
        assert_abs_diff_eq!(w.q_at(0.5).re, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(w.q_at(7.0).re, 0.5, epsilon = 1e-15);
        w.q = vec![(-1.0, real(0.5)), (1.0, real(0.25))];
        assert!(matches!(w.validate(), Err(Error::BadParams(_))));
        let custom = WeightProfile { kind: WeightKind::Custom, ..WeightProfile::paper_f(1.0) };
        assert!(custom.validate().is_err());
    }

    #[test]
    fn normalization_bounds_each_term() {
        let h = build_instance(InstanceKind::ZzChain, 2, 0).unwrap();
        let w = WeightProfile { weight_exponent: 0.25, normalize: true, ..WeightProfile::paper_f(2.0) };
        let m = thermal_model(&h, &CouplingSet::single_site(CouplingKind::X, 2), &w).unwrap();
        for t in &m.terms {
            let hm = kms::coherent_form(&kms::term_superoperator(t, 2).unwrap(), &m.kms).unwrap();
            assert!(numerics::op_norm(&hm.mat) <= 1.0 + 1e-12);
        }
    }
}
