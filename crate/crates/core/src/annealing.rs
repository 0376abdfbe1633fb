//! Purified Gibbs state preparation along an inverse-temperature path.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec;
use crate::hamiltonian::{self, LocalHamiltonian};
use crate::jumps::{self, CouplingSet, WeightProfile};
use crate::kms::{self, DB_TOL};
use crate::numerics::{self, DenseMatrix, StateVector};
use crate::parent;
use crate::projector;

/// Degree constant of the boosting polynomial, l = ⌈c_b ln(1/ε)/b⌉.
pub const C_B: f64 = 2.5;
/// Largest β‖H‖ handled in double precision.
pub const MAX_BETA_NORM: f64 = 40.0;
const GRID: usize = 4001;

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub beta_final: f64,
    pub k: usize,
    pub alpha: f64,
    pub betas: Vec<f64>,
}

pub fn make_schedule(beta: f64, norm_h: f64, alpha: f64) -> Result<Schedule> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::BadAlpha(alpha));
    }
    if !(beta >= 0.0) || !beta.is_finite() || !(norm_h >= 0.0) {
        return Err(Error::BadParams(format!("need beta >= 0 and norm >= 0, got {beta}, {norm_h}")));
    }
    if beta * norm_h > MAX_BETA_NORM {
        return Err(Error::BadParams(format!("beta*|H| = {} exceeds {MAX_BETA_NORM}", beta * norm_h)));
    }
    let k = ((alpha * beta * norm_h).ceil() as usize).max(1);
    let betas = (0..=k).map(|j| if j == k { beta } else { beta * j as f64 / k as f64 }).collect();
    Ok(Schedule { beta_final: beta, k, alpha, betas })
}

/// |⟨v(√σ_β)|v(√σ_{β+δβ})⟩|.
pub fn overlap(h: &LocalHamiltonian, beta: f64, dbeta: f64) -> Result<f64> {
    overlap_matrix(&hamiltonian::assemble(h)?, beta, dbeta)
}

pub fn overlap_matrix(h: &DenseMatrix, beta: f64, dbeta: f64) -> Result<f64> {
    if !(dbeta >= 0.0) {
        return Err(Error::BadParams(format!("dbeta must be nonnegative, got {dbeta}")));
    }
    let a = parent::purified_gibbs_matrix(h, beta)?;
    let b = parent::purified_gibbs_matrix(h, beta + dbeta)?;
    Ok(numerics::inner(&a, &b).norm().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// Per-step transition error ε = δ/(4K).
    pub eps: f64,
    /// Projector accuracy μ = (δ/(16√3 l K))².
    pub mu: f64,
    /// Odd transition degree.
    pub l: usize,
}

impl Budget {
    /// 4l√(3μ) + ε.
    pub fn transition_bound(&self) -> f64 {
        4.0 * self.l as f64 * (3.0 * self.mu).sqrt() + self.eps
    }
}

pub fn error_budget(k: usize, b: f64, delta: f64) -> Result<Budget> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::BadInputs(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(b > 0.0 && b <= 1.0) {
        return Err(Error::BadInputs(format!("overlap floor must lie in (0, 1], got {b}")));
    }
    if k == 0 {
        return Err(Error::BadInputs("schedule needs at least one step".into()));
    }
    let kf = k as f64;
    let eps = delta / (4.0 * kf);
    let mut l = (C_B * (4.0 * kf / delta).ln() / b).ceil().max(1.0) as usize;
    if l % 2 == 0 {
        l += 1;
    }
    let mu = (delta / (16.0 * 3f64.sqrt() * l as f64 * kf)).powi(2);
    Ok(Budget { eps, mu, l })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Oracle,
    Polynomial,
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(BackendKind::Oracle),
            "polynomial" => Ok(BackendKind::Polynomial),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Oracle => "oracle",
            BackendKind::Polynomial => "polynomial",
        })
    }
}

/// Odd polynomial close to sign(x) on [b, 1], as Chebyshev coefficients.
#[derive(Debug, Clone)]
pub struct BoostPoly {
    pub coeffs: Vec<f64>,
    pub b: f64,
    pub eps: f64,
}

impl BoostPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let t = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = t;
        }
        x * b1 - b2 + self.coeffs[0]
    }

    /// max |p| on [−1, 1] and min p on [b, 1], sampled.
    pub fn grid_check(&self) -> (f64, f64) {
        let mut max_abs: f64 = 0.0;
        let mut min_top = f64::INFINITY;
        for i in 0..GRID {
            let x = -1.0 + 2.0 * i as f64 / (GRID - 1) as f64;
            max_abs = max_abs.max(self.eval(x).abs());
            let y = self.b + (1.0 - self.b) * i as f64 / (GRID - 1) as f64;
            min_top = min_top.min(self.eval(y));
        }
        (max_abs, min_top)
    }

    pub fn is_valid(&self) -> bool {
        let (max_abs, min_top) = self.grid_check();
        max_abs <= 1.0 && min_top >= 1.0 - self.eps
    }
}

/// Chebyshev interpolant of (1 − ε/4)·erf(kx), k = √ln(2/ε)/b, with even
/// coefficients dropped.
fn boost_interpolant(degree: usize, b: f64, eps: f64) -> BoostPoly {
    let k = (2.0 / eps).ln().sqrt() / b;
    let amp = 1.0 - eps / 4.0;
    let nodes = degree + 1;
    let samples: Vec<(f64, f64)> = (0..nodes)
        .map(|j| {
            let theta = std::f64::consts::PI * (j as f64 + 0.5) / nodes as f64;
            (theta, amp * libm::erf(k * theta.cos()))
        })
        .collect();
    let coeffs = (0..=degree)
        .map(|m| {
            if m % 2 == 0 {
                return 0.0;
            }
            2.0 / nodes as f64 * samples.iter().map(|&(t, f)| f * (m as f64 * t).cos()).sum::<f64>()
        })
        .collect();
    BoostPoly { coeffs, b, eps }
}

/// Odd boosting polynomial of the given degree, raised by 2 until the grid
/// check passes.
pub fn boost_poly(degree: usize, b: f64, eps: f64) -> Result<BoostPoly> {
    if !(b > 0.0 && b <= 1.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadInputs(format!("boost needs b in (0,1] and eps in (0,1), got {b}, {eps}")));
    }
    let mut d = if degree % 2 == 0 { degree + 1 } else { degree };
    let cap = d + 200;
    while d <= cap {
        let p = boost_interpolant(d, b, eps);
        if p.is_valid() {
            if d != degree {
                log::warn!("boost polynomial degree raised from {degree} to {d}");
            }
            return Ok(p);
        }
        d += 2;
    }
    Err(Error::NoConvergence("boost polynomial"))
}

#[derive(Debug, Clone)]
pub struct TransitionBackend {
    pub kind: BackendKind,
    pub b: f64,
    pub budget: Budget,
    /// Built once for the polynomial backend.
    pub poly: Option<BoostPoly>,
}

impl TransitionBackend {
    pub fn new(kind: BackendKind, b: f64, budget: Budget) -> Result<Self> {
        let poly = match kind {
            BackendKind::Polynomial => Some(boost_poly(budget.l, b, budget.eps)?),
            BackendKind::Oracle => None,
        };
        Ok(Self { kind, b, budget, poly })
    }

    pub fn degree(&self) -> usize {
        self.poly.as_ref().map(|p| p.degree()).unwrap_or(self.budget.l)
    }
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub op: DenseMatrix,
    pub s1: f64,
    pub s2: f64,
}

/// Boosts the dominant singular value of P_b·P_a to (nearly) 1.
pub fn transition(pa: &DenseMatrix, pb: &DenseMatrix, backend: &TransitionBackend) -> Result<Transition> {
    let svd = numerics::singular_value_decompose(&(pb * pa))?;
    let s1 = svd.s[0];
    let s2 = svd.s.get(1).copied().unwrap_or(0.0);
    if s1 < backend.b / 2.0 {
        return Err(Error::OverlapTooSmall { value: s1, floor: backend.b });
    }
    if s2 >= s1 / 10.0 {
        return Err(Error::RankAmbiguous { first: s1, second: s2 });
    }
    let op = match &backend.poly {
        None => svd.leading_block(1),
        Some(p) => svd.transform(|s| p.eval(s)),
    };
    Ok(Transition { op, s1, s2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorMode {
    Exact,
    DlQsvt,
}

impl FromStr for ProjectorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ProjectorMode::Exact),
            "dl_qsvt" => Ok(ProjectorMode::DlQsvt),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for ProjectorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectorMode::Exact => "exact",
            ProjectorMode::DlQsvt => "dl_qsvt",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealStep {
    pub j: usize,
    pub beta: f64,
    /// |⟨ψ_{β_{j−1}}|ψ_{β_j}⟩|.
    pub overlap: f64,
    /// 4l√(3μ) + ε for this step (μ = 0 with exact projectors).
    pub transition_error_bound: f64,
    /// ‖Õ_j − |ψ_{β_j}⟩⟨ψ_{β_{j−1}}|‖.
    pub transition_error: f64,
    pub cumulative_queries: usize,
}

#[derive(Debug, Clone)]
pub struct AnnealingRun {
    pub schedule: Schedule,
    pub mode: ProjectorMode,
    pub backend: BackendKind,
    pub delta: f64,
    pub b: f64,
    pub budget: Budget,
    /// Projector degree ℓ (0 with exact projectors).
    pub projector_degree: usize,
    /// Smallest certified γ* over the path (dl_qsvt only).
    pub gamma_star_min: Option<f64>,
    /// Smallest gap(L_{β_j}) over the path.
    pub generator_gap_min: f64,
    /// Number of parent terms M.
    pub num_terms: usize,
    pub transition_degree: usize,
    pub steps: Vec<AnnealStep>,
    pub final_fidelity: f64,
    /// ‖∏Õ ψ₀ − ψ_β‖.
    pub state_error: f64,
    pub success_probability: f64,
    pub total_queries: usize,
    pub warnings: Vec<String>,
    pub final_state: StateVector,
}

struct PathPoint {
    projector: DenseMatrix,
    queries: usize,
    gap: f64,
}

pub fn run_annealing(
    h: &LocalHamiltonian,
    couplings: &CouplingSet,
    w: &WeightProfile,
    sched: &Schedule,
    delta: f64,
    mode: ProjectorMode,
    backend: BackendKind,
) -> Result<AnnealingRun> {
    let hfull = hamiltonian::assemble(h)?;
    let norm_h = numerics::op_norm(&hfull);
    if sched.beta_final * norm_h > MAX_BETA_NORM {
        return Err(Error::BadParams(format!("beta*|H| = {} exceeds {MAX_BETA_NORM}", sched.beta_final * norm_h)));
    }
    let k = sched.k;
    let states = exec::try_map(&sched.betas, |&b| parent::purified_gibbs_matrix(&hfull, b))?;
    let overlaps: Vec<f64> = (0..k).map(|j| numerics::inner(&states[j], &states[j + 1]).norm().min(1.0)).collect();
    let b = overlaps.iter().cloned().fold(1.0, f64::min);
    let budget = error_budget(k, b, delta)?;
    let mut warnings = Vec::new();

    // Per-β generators: irreducibility, gaps, and (dl_qsvt) parent DL operators.
    let prepared = exec::try_map(&sched.betas, |&beta| {
        let model = jumps::thermal_model(h, couplings, &w.with_beta(beta))?;
        let l = kms::lindblad_superoperator(&model.terms, h.n)?;
        let report = kms::spectral_report(&l, &model.kms, DB_TOL)?;
        let dl = match mode {
            ProjectorMode::Exact => None,
            ProjectorMode::DlQsvt => {
                if report.kernel_dim > 1 {
                    return Err(Error::Irreducibility { beta, kernel_dim: report.kernel_dim });
                }
                let ph = parent::build_parent(&model.terms, &model.kms)?;
                let ffh = ph.frustration_free_hamiltonian()?;
                let dl = projector::dl_operator(&ffh)?;
                let sg = projector::singular_gap(&dl, &ffh)?;
                if sg.rank != 1 {
                    return Err(Error::Irreducibility { beta, kernel_dim: sg.rank });
                }
                Some((dl, sg.certified))
            }
        };
        Ok::<_, Error>((beta, report, dl))
    })?;
    for (beta, report, _) in &prepared {
        if report.kernel_dim > 1 {
            warnings.push(format!("generator at beta={beta} has a {}-dimensional kernel", report.kernel_dim));
        }
    }
    let generator_gap_min = prepared.iter().map(|p| p.1.gap).fold(f64::INFINITY, f64::min);

    let (points, projector_degree, gamma_star_min, num_terms) = match mode {
        ProjectorMode::Exact => {
            let pts = states
                .iter()
                .map(|s| PathPoint { projector: numerics::outer(s, s), queries: 0, gap: 0.0 })
                .collect::<Vec<_>>();
            (pts, 0, None, 0)
        }
        ProjectorMode::DlQsvt => {
            let gmin = prepared.iter().map(|p| p.2.as_ref().expect("dl built").1).fold(f64::INFINITY, f64::min);
            let mut ell = projector::degree_for_error(gmin, budget.mu)?;
            if ell % 2 == 0 {
                ell += 1;
            }
            let pts = exec::try_map(&prepared, |(_, _, dl)| {
                let (dl, gs) = dl.as_ref().expect("dl built");
                let poly = projector::chebyshev_poly(*gs, ell)?;
                let (projector, queries) = projector::projector_by_queries(dl, &poly)?;
                Ok::<_, Error>(PathPoint { projector, queries, gap: *gs })
            })?;
            let m = prepared[0].2.as_ref().expect("dl built").0.num_factors();
            (pts, ell, Some(gmin), m)
        }
    };
    if let Some(g) = gamma_star_min {
        log::debug!("dl_qsvt path: gamma_star_min={g:.4e}, ell={projector_degree}, first gap={:.4e}", points[0].gap);
    }

    let tb = TransitionBackend::new(backend, b, budget)?;
    let mu_eff = if mode == ProjectorMode::Exact { 0.0 } else { budget.mu };
    let step_bound = 4.0 * tb.degree() as f64 * (3.0 * mu_eff).sqrt() + budget.eps;
    let mut psi = states[0].clone();
    let mut steps = Vec::with_capacity(k);
    let mut total = 0usize;
    for j in 0..k {
        let t = transition(&points[j].projector, &points[j + 1].projector, &tb)?;
        let ideal = numerics::outer(&states[j + 1], &states[j]);
        let transition_error = numerics::op_norm(&(&t.op - ideal));
        psi = &t.op * psi;
        total += points[j + 1].queries + tb.degree();
        steps.push(AnnealStep {
            j: j + 1,
            beta: sched.betas[j + 1],
            overlap: overlaps[j],
            transition_error_bound: step_bound,
            transition_error,
            cumulative_queries: total,
        });
    }
    let target = &states[k];
    let success_probability = psi.norm_squared();
    let state_error = (&psi - target).norm();
    let final_state = &psi / numerics::real(success_probability.sqrt().max(f64::MIN_POSITIVE));
    let final_fidelity = numerics::inner(&final_state, target).norm();
    Ok(AnnealingRun {
        schedule: sched.clone(),
        mode,
        backend,
        delta,
        b,
        budget,
        projector_degree,
        gamma_star_min,
        generator_gap_min,
        num_terms,
        transition_degree: tb.degree(),
        steps,
        final_fidelity,
        state_error,
        success_probability,
        total_queries: total,
        warnings,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_instance, InstanceKind, LocalOperator};
    use crate::jumps::CouplingKind;
    use crate::numerics::paulis;
    use approx::assert_abs_diff_eq;

    #[test]
    fn schedule_examples() {
        let s = make_schedule(1.0, 3.0, 2.0).unwrap();
        assert_eq!(s.k, 6);
        assert_eq!(s.betas.len(), 7);
        assert_abs_diff_eq!(s.betas[1], 1.0 / 6.0, epsilon = 1e-15);
        assert_eq!(s.betas[6], 1.0);
        assert!(s.betas.windows(2).all(|w| w[0] < w[1]));
        let z = make_schedule(0.0, 3.0, 2.0).unwrap();
        assert_eq!(z.k, 1);
        assert!(matches!(make_schedule(1.0, 3.0, 1.0), Err(Error::BadAlpha(_))));
        assert!(make_schedule(20.0, 3.0, 2.0).is_err());
    }

    #[test]
    fn overlap_examples() {
        let h = LocalHamiltonian::new(1, vec![LocalOperator::new(paulis::z(), vec![0]).unwrap()]).unwrap();
        assert_abs_diff_eq!(overlap(&h, 0.7, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        let expected = 0.05f64.cosh() / 0.1f64.cosh().sqrt();
        assert_abs_diff_eq!(overlap(&h, 0.0, 0.1).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn budget_examples() {
        let b = error_budget(1, 1.0, 0.4).unwrap();
        assert_abs_diff_eq!(b.eps, 0.1, epsilon = 1e-15);
        assert_eq!(b.l % 2, 1);
        let b2 = error_budget(2, 1.0, 0.4).unwrap();
        assert_eq!(b2.eps, b.eps / 2.0);
        for k in [1usize, 3, 10, 50] {
            for bb in [0.2, 0.6, 1.0] {
                for d in [0.01, 0.05, 0.3] {
                    let bud = error_budget(k, bb, d).unwrap();
                    assert!(bud.transition_bound() <= d / (2.0 * k as f64) * (1.0 + 1e-12));
                }
            }
        }
        assert!(matches!(error_budget(1, 1.0, 1.5), Err(Error::BadInputs(_))));
        assert!(matches!(error_budget(1, 0.0, 0.1), Err(Error::BadInputs(_))));
    }

    #[test]
    fn boost_polynomial_meets_contract_at_budget_degree() {
        for eps in [1e-1, 1e-3, 1e-6] {
            for b in [0.05, 0.3, 0.9, 1.0] {
                let l = {
                    let raw = (C_B * (1.0f64 / eps).ln() / b).ceil() as usize;
                    if raw % 2 == 0 { raw + 1 } else { raw }
                };
                let p = boost_interpolant(l, b, eps);
                assert!(p.is_valid(), "b={b} eps={eps} l={l}");
                assert!(p.coeffs.iter().step_by(2).all(|&c| c == 0.0));
                assert_abs_diff_eq!(p.eval(-0.37), -p.eval(0.37), epsilon = 1e-14);
            }
        }
    }

    fn rank1(v: &StateVector) -> DenseMatrix {
        numerics::outer(v, v)
    }

    #[test]
    fn transition_fixed_point_and_rotation() {
        let budget = error_budget(1, 0.8, 0.1).unwrap();
        let zero = numerics::basis_state(2, 0);
        for kind in [BackendKind::Oracle, BackendKind::Polynomial] {
            let tb = TransitionBackend::new(kind, 0.8, budget).unwrap();
            let t = transition(&rank1(&zero), &rank1(&zero), &tb).unwrap();
            assert!(numerics::op_norm(&(t.op - rank1(&zero))) <= budget.eps + 1e-12);
        }
        let theta = std::f64::consts::PI / 6.0;
        let psi_b = StateVector::from_vec(vec![numerics::real(theta.cos()), numerics::real(theta.sin())]);
        let ideal = numerics::outer(&psi_b, &zero);
        let oracle = transition(&rank1(&zero), &rank1(&psi_b), &TransitionBackend::new(BackendKind::Oracle, 0.8, budget).unwrap()).unwrap();
        assert!(numerics::op_norm(&(&oracle.op - &ideal)) < 1e-12);
        let poly = transition(&rank1(&zero), &rank1(&psi_b), &TransitionBackend::new(BackendKind::Polynomial, 0.8, budget).unwrap()).unwrap();
        assert!(numerics::op_norm(&(&poly.op - &ideal)) <= budget.eps + 1e-9);
        assert!(numerics::op_norm(&(&poly.op - &oracle.op)) <= budget.eps + 1e-9);
        assert!(numerics::op_norm(&poly.op) <= 1.0 + 1e-12);
    }

    #[test]
    fn transition_errors() {
        let budget = error_budget(1, 0.9, 0.1).unwrap();
        let tb = TransitionBackend::new(BackendKind::Oracle, 0.9, budget).unwrap();
        let zero = rank1(&numerics::basis_state(2, 0));
        let one = rank1(&numerics::basis_state(2, 1));
        assert!(matches!(transition(&zero, &one, &tb), Err(Error::OverlapTooSmall { .. })));
        let id = numerics::identity(2);
        assert!(matches!(transition(&id, &id, &tb), Err(Error::RankAmbiguous { .. })));
    }

    fn zz2() -> LocalHamiltonian {
        build_instance(InstanceKind::ZzChain, 2, 0).unwrap()
    }

    #[test]
    fn infinite_temperature_run_is_trivial() {
        let h = zz2();
        let sched = make_schedule(0.0, 1.0, 2.0).unwrap();
        let run = run_annealing(
            &h,
            &CouplingSet::single_site(CouplingKind::Xz, 2),
            &WeightProfile::davies_kms(0.0),
            &sched,
            0.05,
            ProjectorMode::Exact,
            BackendKind::Polynomial,
        )
        .unwrap();
        assert_abs_diff_eq!(run.final_fidelity, 1.0, epsilon = 1e-12);
        let omega = parent::vectorize(&numerics::identity(4).scale(0.5));
        assert!((run.final_state - omega).norm() < 1e-12);
    }

    #[test]
    fn exact_projector_run_meets_error_budget() {
        let h = zz2();
        let norm = numerics::op_norm(&hamiltonian::assemble(&h).unwrap());
        let sched = make_schedule(1.0, norm, 2.0).unwrap();
        let delta = 0.05;
        let run = run_annealing(
            &h,
            &CouplingSet::single_site(CouplingKind::Xz, 2),
            &WeightProfile::davies_kms(1.0),
            &sched,
            delta,
            ProjectorMode::Exact,
            BackendKind::Polynomial,
        )
        .unwrap();
        assert!(run.final_fidelity >= 1.0 - delta);
        assert!(run.success_probability >= (1.0 - delta / 2.0).powi(2) - 1e-9);
        assert!(run.state_error <= delta / 2.0 + 1e-9);
        for s in &run.steps {
            assert!(s.transition_error <= delta / (2.0 * sched.k as f64) + 1e-12);
        }
        assert_eq!(run.total_queries, sched.k * run.transition_degree);
    }

    #[test]
    fn dl_qsvt_run_tallies_queries() {
        let h = zz2();
        let norm = numerics::op_norm(&hamiltonian::assemble(&h).unwrap());
        let sched = make_schedule(1.0, norm, 2.0).unwrap();
        let delta = 0.05;
        let run = run_annealing(
            &h,
            &CouplingSet::single_site(CouplingKind::Xz, 2),
            &WeightProfile::davies_kms(1.0),
            &sched,
            delta,
            ProjectorMode::DlQsvt,
            BackendKind::Polynomial,
        )
        .unwrap();
        assert!(run.final_fidelity >= 1.0 - delta - 0.01, "{}", run.final_fidelity);
        let per_step = run.projector_degree * run.num_terms + run.transition_degree;
        assert_eq!(run.total_queries, sched.k * per_step);
    }

    #[test]
    fn reducible_path_is_refused_in_dl_mode() {
        let h = zz2();
        let sched = make_schedule(0.5, 1.0, 2.0).unwrap();
        let err = run_annealing(
            &h,
            &CouplingSet::single_site(CouplingKind::X, 2),
            &WeightProfile::davies_kms(0.5),
            &sched,
            0.1,
            ProjectorMode::DlQsvt,
            BackendKind::Oracle,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Irreducibility { .. }));
    }
}
