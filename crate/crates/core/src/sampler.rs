//! Gibbs sampling by repeated application of the product of local stationary
//! channels, Φ = P₁P₂⋯P_M.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::exec;
use crate::kms::{self, KmsForm, LindbladTerm, Picture, SpectralReport, Superoperator, DB_TOL};
use crate::numerics::{self, random, DenseMatrix};
use crate::parent::vectorize;

/// Commutator norm above which two local projectors count as non-commuting.
pub const COMMUTE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorOrder {
    Index,
    /// Seeded random permutation.
    Seeded(u64),
}

impl FromStr for FactorOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "index" {
            return Ok(FactorOrder::Index);
        }
        s.strip_prefix("seed:")
            .and_then(|v| v.parse().ok())
            .map(FactorOrder::Seeded)
            .ok_or_else(|| Error::BadParams(format!("order must be `index` or `seed:N`, got `{s}`")))
    }
}

impl fmt::Display for FactorOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorOrder::Index => f.write_str("index"),
            FactorOrder::Seeded(s) => write!(f, "seed:{s}"),
        }
    }
}

impl FactorOrder {
    pub fn permutation(self, m: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..m).collect();
        if let FactorOrder::Seeded(seed) = self {
            p.shuffle(&mut random::rng(seed));
        }
        p
    }
}

#[derive(Debug, Clone)]
pub struct DlChannel {
    /// Heisenberg-picture P_m, already in application order.
    pub factors: Vec<Superoperator>,
    /// Kernel projectors Π₀ of 𝔥_m in the same order.
    pub kernel_projectors: Vec<DenseMatrix>,
    /// `order[i]` is the term index of `factors[i]`.
    pub order: Vec<usize>,
    pub order_spec: FactorOrder,
    /// Φ = factors[0] ∘ factors[1] ∘ ⋯ (Heisenberg).
    pub composite: Superoperator,
    /// Spectral data of L = Σ_m L_m.
    pub generator: SpectralReport,
    /// Largest number of other factors a factor fails to commute with.
    pub g: usize,
    pub n: usize,
}

impl DlChannel {
    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    /// Φ† in the Schrödinger picture.
    pub fn adjoint(&self) -> Superoperator {
        self.composite.adjoint()
    }

    /// 1/(gap/g² + 1), the per-step contraction of ‖·‖²_σ. With g = 0 the
    /// factors commute and Φ is the projection onto ker L.
    pub fn contraction_factor(&self) -> f64 {
        contraction_factor(self.generator.gap, self.g)
    }

    /// (gap/g² + 1)^{−k/2} / √σ_min.
    pub fn bound(&self, k: usize, sigma_min: f64) -> f64 {
        if k == 0 {
            return 1.0 / sigma_min.sqrt();
        }
        self.contraction_factor().powf(k as f64 / 2.0) / sigma_min.sqrt()
    }
}

fn contraction_factor(gap: f64, g: usize) -> f64 {
    if g == 0 {
        if gap > 0.0 { 0.0 } else { 1.0 }
    } else {
        1.0 / (gap / (g * g) as f64 + 1.0)
    }
}

/// Largest number of projectors any projector fails to commute with.
pub fn noncommutation_degree(projectors: &[DenseMatrix], tol: f64) -> usize {
    let m = projectors.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let clash = exec::map(&pairs, |&(i, j)| {
        let (a, b) = (&projectors[i], &projectors[j]);
        numerics::frobenius(&(a * b - b * a)) > tol
    });
    let mut count = vec![0usize; m];
    for (&(i, j), &c) in pairs.iter().zip(&clash) {
        if c {
            count[i] += 1;
            count[j] += 1;
        }
    }
    count.into_iter().max().unwrap_or(0)
}

/// Largest number of other terms whose supports intersect a given term.
pub fn support_overlap_degree(terms: &[LindbladTerm]) -> usize {
    (0..terms.len())
        .map(|i| {
            (0..terms.len())
                .filter(|&j| j != i && terms[i].support.iter().any(|s| terms[j].support.contains(s)))
                .count()
        })
        .max()
        .unwrap_or(0)
}

pub fn compose_dl_channel(terms: &[LindbladTerm], kms: &KmsForm, order: FactorOrder) -> Result<DlChannel> {
    let n = kms.n;
    if terms.is_empty() {
        return Err(Error::BadInputs("no Lindblad terms".into()));
    }
    let per_term = exec::try_map(terms, |t| {
        let lm = kms::term_superoperator(t, n)?;
        let sc = kms::stationary_channel(&lm, kms, DB_TOL)?;
        Ok::<_, Error>((lm, sc))
    })?;
    let mut total = Superoperator::zero(n, Picture::Heisenberg);
    for (lm, _) in &per_term {
        total = total.add(lm)?;
    }
    let generator = kms::spectral_report(&total, kms, DB_TOL)?;
    let perm = order.permutation(terms.len());
    let factors: Vec<Superoperator> = perm.iter().map(|&i| per_term[i].1.channel.clone()).collect();
    let kernel_projectors: Vec<DenseMatrix> = perm.iter().map(|&i| per_term[i].1.kernel_projector.clone()).collect();
    let mut composite = Superoperator::identity(n, Picture::Heisenberg);
    for f in &factors {
        composite = composite.compose(f)?;
    }
    let g = noncommutation_degree(&kernel_projectors, COMMUTE_TOL);
    Ok(DlChannel { factors, kernel_projectors, order: perm, order_spec: order, composite, generator, g, n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingRecord {
    pub k: usize,
    pub trace_distance: f64,
    pub bound: f64,
    pub channel_applications: usize,
}

#[derive(Debug, Clone)]
pub struct MixingTrace {
    pub records: Vec<MixingRecord>,
    pub sigma_min: f64,
    pub gap: f64,
    pub g: usize,
}

impl MixingTrace {
    /// Largest d_k − bound_k over the trace.
    pub fn worst_excess(&self) -> f64 {
        self.records.iter().map(|r| r.trace_distance - r.bound).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn total_applications(&self) -> usize {
        self.records.last().map(|r| r.channel_applications).unwrap_or(0)
    }
}

pub fn check_state(rho: &DenseMatrix, dim: usize) -> Result<()> {
    if rho.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!("state of shape {:?}, expected {dim}", rho.shape())));
    }
    let herm = numerics::hermiticity_residual(rho);
    let tr = rho.trace();
    if herm > 1e-10 || (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(Error::BadInputs("initial state must be Hermitian with unit trace".into()));
    }
    let min = numerics::eigvalsh(&(rho + rho.adjoint()).scale(0.5))?[0];
    if min < -1e-10 {
        return Err(Error::BadInputs(format!("initial state has negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// ρ_k = (Φ†)^k(ρ₀) for k = 0..=k_max, applying one factor at a time.
pub fn iterate(ch: &DlChannel, rho0: &DenseMatrix, kms: &KmsForm, k_max: usize) -> Result<MixingTrace> {
    check_state(rho0, kms.dim())?;
    let adjoints: Vec<DenseMatrix> = ch.factors.iter().map(|f| f.mat.adjoint()).collect();
    let target = vectorize(&kms.sigma);
    let mut v = vectorize(rho0);
    let mut applications = 0usize;
    let mut records = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let rho = crate::parent::devectorize(&v)?;
        let sigma = crate::parent::devectorize(&target)?;
        records.push(MixingRecord {
            k,
            trace_distance: numerics::schatten1_distance(&rho, &sigma)?,
            bound: ch.bound(k, kms.sigma_min),
            channel_applications: applications,
        });
        if k == k_max {
            break;
        }
        // Φ† = P_M† ⋯ P_1†: P_1† acts first.
        for a in &adjoints {
            v = a * v;
            applications += 1;
        }
    }
    Ok(MixingTrace { records, sigma_min: kms.sigma_min, gap: ch.generator.gap, g: ch.g })
}

#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub trials: usize,
    /// Trials whose centered observable vanished.
    pub vacuous: usize,
    /// max ‖Φ(X)‖²_σ (gap/g²+1) / ‖X‖²_σ.
    pub max_ratio: f64,
    /// max |Tr[σ Φ(X)]|.
    pub max_trace: f64,
    /// max ⟨φ|φ⟩(ε_φ/g² + 1) in the KMS frame, the detectability-lemma quantity.
    pub max_dl_ratio: f64,
    /// ε_φ of the worst trial.
    pub dl_residual_energy: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ContractionSample {
    pub ratio: f64,
    pub trace: f64,
    pub dl_ratio: f64,
    pub eps_phi: f64,
    pub vacuous: bool,
}

/// Contraction data for one observable, after centering.
pub fn contraction_sample(ch: &DlChannel, kms: &KmsForm, x: &DenseMatrix) -> Result<ContractionSample> {
    let d = kms.dim();
    let mean = (&kms.sigma * x).trace();
    let xt = x - numerics::identity(d) * mean;
    let before = kms::kms_norm(&xt, kms)?.powi(2);
    let scale = kms::kms_norm(x, kms)?.powi(2).max(1e-300);
    if before <= 1e-24 * scale {
        return Ok(ContractionSample { ratio: 0.0, trace: 0.0, dl_ratio: 0.0, eps_phi: 0.0, vacuous: true });
    }
    let out = ch.composite.apply(&xt);
    let after = kms::kms_norm(&out, kms)?.powi(2);
    let trace = (&kms.sigma * &out).trace().norm();
    let factor = ch.contraction_factor();
    let ratio = if factor == 0.0 {
        if after <= 1e-20 * before { 0.0 } else { f64::INFINITY }
    } else {
        after / (before * factor)
    };

    // Same step in the KMS frame: ψ = Γ^{1/2} v(X̃), φ = Π₀¹⋯Π₀^M ψ.
    let psi = vectorize(&(&kms.quarter * &xt * &kms.quarter));
    let psi = &psi / numerics::real(psi.norm());
    let mut phi = psi.clone();
    for p in ch.kernel_projectors.iter().rev() {
        phi = p * phi;
    }
    let norm_sq = phi.norm_squared();
    let (eps_phi, dl_ratio) = if norm_sq <= 1e-24 {
        (0.0, 0.0)
    } else {
        let energy: f64 = ch
            .kernel_projectors
            .iter()
            .map(|p| {
                let q = &phi - p * &phi;
                q.norm_squared()
            })
            .sum::<f64>()
            / norm_sq;
        let g2 = (ch.g * ch.g) as f64;
        let r = if ch.g == 0 { norm_sq } else { norm_sq * (energy / g2 + 1.0) };
        (energy, r)
    };
    Ok(ContractionSample { ratio, trace, dl_ratio, eps_phi, vacuous: false })
}

/// Seeded random Hermitian observables, one independent stream per trial.
pub fn contraction_check(ch: &DlChannel, kms: &KmsForm, trials: usize, seed: u64) -> Result<ContractionReport> {
    let d = kms.dim();
    let samples = exec::map_range(trials, |t| {
        let mut rng = random::stream_rng(seed, t as u64);
        let x = random::hermitian(d, &mut rng);
        contraction_sample(ch, kms, &x)
    });
    let mut report = ContractionReport {
        trials,
        vacuous: 0,
        max_ratio: 0.0,
        max_trace: 0.0,
        max_dl_ratio: 0.0,
        dl_residual_energy: 0.0,
    };
    for s in samples {
        let s = s?;
        if s.vacuous {
            report.vacuous += 1;
            continue;
        }
        report.max_ratio = report.max_ratio.max(s.ratio);
        report.max_trace = report.max_trace.max(s.trace);
        if s.dl_ratio >= report.max_dl_ratio {
            report.max_dl_ratio = s.dl_ratio;
            report.dl_residual_energy = s.eps_phi;
        }
    }
    Ok(report)
}

/// Spectrum of H_L = Σ_m (I − P_m) in KMS form, reported as eigenvalues of
/// −H_L so that `gap` is γ and `kernel_dim` counts zero modes.
pub fn superop_hamiltonian(ch: &DlChannel) -> Result<SpectralReport> {
    let dim = ch.composite.mat.nrows();
    let mut hl = DenseMatrix::zeros(dim, dim);
    for p in &ch.kernel_projectors {
        hl += numerics::identity(dim) - p;
    }
    let herm = numerics::frobenius(&(&hl - hl.adjoint()));
    let eig = numerics::eigvalsh(&(&hl + hl.adjoint()).scale(0.5))?;
    let report = SpectralReport::from_eigenvalues(eig.into_iter().map(|x| -x).collect(), 0.0, herm);
    if report.kernel_dim > 1 {
        log::warn!("H_L has a {}-dimensional kernel", report.kernel_dim);
    }
    Ok(report)
}
