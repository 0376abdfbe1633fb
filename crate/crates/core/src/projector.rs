//! Ground-space projection for frustration-free Hamiltonians: the product of
//! local ground projectors followed by a Chebyshev singular-value transform.

use crate::error::{Error, Result};
use crate::exec;
use crate::hamiltonian::{self, LocalHamiltonian, LocalOperator};
use crate::numerics::{self, random, DenseMatrix, Svd};
use crate::sampler::{noncommutation_degree, COMMUTE_TOL};

/// Singular values within this distance of 1 count toward the ground rank.
pub const RANK_TOL: f64 = 1e-8;
/// Relative eigenvalue tolerance for local ground projectors.
pub const LOCAL_GROUND_TOL: f64 = 1e-9;
/// Largest degree scanned when searching for a minimal ℓ.
pub const MAX_DEGREE: usize = 100_000;

#[derive(Debug, Clone)]
pub struct DlOperator {
    /// Embedded local ground projectors, in product order.
    pub factors: Vec<DenseMatrix>,
    pub composite: DenseMatrix,
    pub svd: Svd,
    /// Number of singular values equal to 1 within [`RANK_TOL`].
    pub rank: usize,
}

impl DlOperator {
    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn from_projectors(factors: Vec<DenseMatrix>) -> Result<Self> {
        let dim = factors.first().map(|f| f.nrows()).ok_or_else(|| Error::BadInputs("no factors".into()))?;
        let mut composite = numerics::identity(dim);
        for f in &factors {
            composite = composite * f;
        }
        let svd = numerics::singular_value_decompose(&composite)?;
        let rank = svd.s.iter().filter(|&&s| s >= 1.0 - RANK_TOL).count();
        Ok(Self { factors, composite, svd, rank })
    }

    /// U₁V₁† from the top singular block.
    pub fn ground_projector(&self) -> DenseMatrix {
        self.svd.leading_block(self.rank)
    }
}

/// Projector onto the lowest eigenspace of a local term, on its own sites.
pub fn local_ground_projector(t: &LocalOperator) -> Result<LocalOperator> {
    let eig = numerics::eigh(&t.op)?;
    let e0 = eig.eigenvalues[0];
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let p = eig.projector(|x| x - e0 <= LOCAL_GROUND_TOL * scale);
    LocalOperator::new(p, t.sites.clone())
}

pub fn dl_operator(h: &LocalHamiltonian) -> Result<DlOperator> {
    let factors = exec::try_map(&h.terms, |t| local_ground_projector(t)?.embed(h.n))?;
    DlOperator::from_projectors(factors)
}

#[derive(Debug, Clone)]
pub struct SingularGap {
    /// 1 − 1/√(γ/g² + 1).
    pub certified: f64,
    /// 1 − s_{r+1}.
    pub empirical: f64,
    pub rank: usize,
    /// Spectral gap of H above its ground energy.
    pub gamma: f64,
    pub g: usize,
    pub s_next: f64,
    /// 1/√(γ/g² + 1).
    pub s_bound: f64,
}

pub fn certified_gamma_star(gamma: f64, g: usize) -> f64 {
    if g == 0 {
        1.0
    } else {
        1.0 - 1.0 / (gamma / (g * g) as f64 + 1.0).sqrt()
    }
}

pub fn singular_gap(dl: &DlOperator, h: &LocalHamiltonian) -> Result<SingularGap> {
    let gs = hamiltonian::ground_space(h, hamiltonian::GROUND_TOL)?;
    let scale = numerics::frobenius(&hamiltonian::assemble(h)?).max(1.0);
    if gs.ground_energy.abs() > hamiltonian::GROUND_TOL * scale || !gs.is_frustration_free(hamiltonian::GROUND_TOL * scale) {
        return Err(Error::FrustrationDetected { residual: gs.frustration_residual.max(gs.ground_energy.abs()) });
    }
    if gs.degenerate_gap {
        return Err(Error::DegenerateGap { gap: gs.gap, tol: hamiltonian::GROUND_TOL });
    }
    if gs.dimension != dl.rank {
        log::warn!("ground space has dimension {} but DL(H) has {} unit singular values", gs.dimension, dl.rank);
    }
    let g = noncommutation_degree(&dl.factors, COMMUTE_TOL);
    let s_bound = if g == 0 { 0.0 } else { 1.0 / (gs.gap / (g * g) as f64 + 1.0).sqrt() };
    let s_next = dl.svd.s.get(gs.dimension).copied().unwrap_or(0.0);
    Ok(SingularGap {
        certified: certified_gamma_star(gs.gap, g),
        empirical: 1.0 - s_next,
        rank: gs.dimension,
        gamma: gs.gap,
        g,
        s_next,
        s_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorPoly {
    pub degree: usize,
    pub gamma_star: f64,
}

/// ln|T_ℓ(y)| and the sign of T_ℓ(y).
fn ln_chebyshev(l: usize, y: f64) -> (f64, f64) {
    let lf = l as f64;
    if y.abs() <= 1.0 {
        let t = (lf * y.acos()).cos();
        (t.abs().ln(), t.signum())
    } else {
        let u = y.abs().acosh();
        let ln = lf * u + ((1.0 + (-2.0 * lf * u).exp()) / 2.0).ln();
        let sign = if y < 0.0 && l % 2 == 1 { -1.0 } else { 1.0 };
        (ln, sign)
    }
}

impl ProjectorPoly {
    /// p(x) = T_ℓ(x/(1−γ*)) / T_ℓ(1/(1−γ*)); at γ* = 1 this is the limit x^ℓ.
    pub fn eval(&self, x: f64) -> f64 {
        if self.gamma_star >= 1.0 {
            return x.powi(self.degree as i32);
        }
        let a = 1.0 - self.gamma_star;
        let (num, sign) = ln_chebyshev(self.degree, x / a);
        if sign == 0.0 {
            return 0.0;
        }
        let (den, _) = ln_chebyshev(self.degree, 1.0 / a);
        sign * (num - den).exp()
    }

    pub fn is_odd(&self) -> bool {
        self.degree % 2 == 1
    }

    /// 2e^{−ℓ√γ*}.
    pub fn bound(&self) -> f64 {
        2.0 * (-(self.degree as f64) * self.gamma_star.sqrt()).exp()
    }
}

pub fn chebyshev_poly(gamma_star: f64, degree: usize) -> Result<ProjectorPoly> {
    if !(gamma_star > 0.0 && gamma_star <= 1.0) {
        return Err(Error::BadGamma(gamma_star));
    }
    if degree == 0 {
        return Err(Error::BadParams("polynomial degree must be at least 1".into()));
    }
    Ok(ProjectorPoly { degree, gamma_star })
}

#[derive(Debug, Clone)]
pub struct ProjectorResult {
    pub approx: DenseMatrix,
    pub exact: DenseMatrix,
    pub error: f64,
    pub bound: f64,
    pub degree: usize,
    pub odd: bool,
    /// ℓ·M local projector applications.
    pub queries: usize,
    pub ancilla_estimate: usize,
}

fn singular_transform(svd: &Svd, poly: &ProjectorPoly) -> DenseMatrix {
    if poly.is_odd() {
        svd.transform(|s| poly.eval(s))
    } else {
        right_side(svd).transform(|s| poly.eval(s))
    }
}

fn right_side(svd: &Svd) -> Svd {
    Svd { u: svd.v.clone(), s: svd.s.clone(), v: svd.v.clone() }
}

/// Large-ℓ limit of the transform: U₁V₁† for odd ℓ, V₁V₁† for even ℓ. Both
/// equal P_H when DL(H) comes from a frustration-free H.
fn parity_limit(dl: &DlOperator, odd: bool) -> DenseMatrix {
    if odd {
        dl.ground_projector()
    } else {
        right_side(&dl.svd).leading_block(dl.rank)
    }
}

/// ⌈log₂ M⌉ + 1.
pub fn ancilla_estimate(m: usize) -> usize {
    (m.max(1) as f64).log2().ceil() as usize + 1
}

/// Odd ℓ gives U p(S) V†, even ℓ gives V p(S) V†.
pub fn approximate_projector(dl: &DlOperator, poly: &ProjectorPoly) -> Result<ProjectorResult> {
    let approx = singular_transform(&dl.svd, poly);
    let exact = parity_limit(dl, poly.is_odd());
    let error = numerics::op_norm(&(&approx - &exact));
    Ok(ProjectorResult {
        approx,
        exact,
        error,
        bound: poly.bound(),
        degree: poly.degree,
        odd: poly.is_odd(),
        queries: poly.degree * dl.num_factors(),
        ancilla_estimate: ancilla_estimate(dl.num_factors()),
    })
}

/// Same transform built by the three-term recurrence, touching DL(H) only
/// through products with its factors. Returns the matrix and the number of
/// factor applications. Odd degree gives U p(S) V†, even degree V p(S) V†.
pub fn projector_by_queries(dl: &DlOperator, poly: &ProjectorPoly) -> Result<(DenseMatrix, usize)> {
    let dim = dl.composite.nrows();
    let mut count = 0usize;
    let forward = |x: &DenseMatrix, count: &mut usize| {
        let mut out = x.clone();
        for f in dl.factors.iter().rev() {
            out = f * out;
            *count += 1;
        }
        out
    };
    let backward = |x: &DenseMatrix, count: &mut usize| {
        let mut out = x.clone();
        for f in &dl.factors {
            out = f * out;
            *count += 1;
        }
        out
    };
    let a = if poly.gamma_star >= 1.0 { None } else { Some(1.0 - poly.gamma_star) };
    let inv = a.map(|a| 1.0 / a).unwrap_or(1.0);
    // Q_0 = I (as V T_0 V†), Q_1 = A/a.
    let mut prev = numerics::identity(dim);
    let mut cur = forward(&prev, &mut count).scale(inv);
    for k in 1..poly.degree {
        let step = if k % 2 == 1 { backward(&cur, &mut count) } else { forward(&cur, &mut count) };
        let next = match a {
            Some(_) => step.scale(2.0 * inv) - &prev,
            None => step,
        };
        prev = cur;
        cur = next;
    }
    let norm = match a {
        Some(a) => {
            let (ln, _) = ln_chebyshev(poly.degree, 1.0 / a);
            ln.exp()
        }
        None => 1.0,
    };
    Ok((cur.scale(1.0 / norm), count))
}

/// Smallest ℓ ≥ 1 with 2e^{−ℓ√γ*} ≤ ε.
pub fn degree_for_error(gamma_star: f64, eps: f64) -> Result<usize> {
    if !(gamma_star > 0.0 && gamma_star <= 1.0) {
        return Err(Error::BadGamma(gamma_star));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::BadEps(eps));
    }
    let l = ((2.0 / eps).ln() / gamma_star.sqrt()).ceil();
    Ok((l.max(1.0)) as usize)
}

/// A singular spectrum with a planted gap, for scaling studies.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub gamma_star: f64,
    pub dl: DlOperator,
}

/// Rotated diagonal operator with singular values {1, 1−γ*, spread below}.
pub fn planted_instance(gamma_star: f64, dim: usize, seed: u64) -> Result<PlantedInstance> {
    if !(gamma_star > 0.0 && gamma_star < 1.0) {
        return Err(Error::BadGamma(gamma_star));
    }
    if dim < 3 {
        return Err(Error::BadParams("planted instances need dimension at least 3".into()));
    }
    let mut rng = random::rng(seed);
    let top = 1.0 - gamma_star;
    let s: Vec<f64> = (0..dim)
        .map(|j| match j {
            0 => 1.0,
            1 => top,
            _ => top * (dim - j) as f64 / (dim - 1) as f64,
        })
        .collect();
    let u = random::unitary(dim, &mut rng);
    let v = random::unitary(dim, &mut rng);
    let d = DenseMatrix::from_fn(dim, dim, |i, j| if i == j { numerics::real(s[i]) } else { numerics::ZERO });
    let m = &u * d * v.adjoint();
    let svd = numerics::singular_value_decompose(&m)?;
    let rank = svd.s.iter().filter(|&&x| x >= 1.0 - RANK_TOL).count();
    let dl = DlOperator { factors: vec![m.clone()], composite: m, svd, rank };
    Ok(PlantedInstance { gamma_star, dl })
}

/// Smallest ℓ whose transform reaches error ≤ ε.
pub fn minimal_degree(dl: &DlOperator, gamma_star: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::BadEps(eps));
    }
    let limits = [parity_limit(dl, false), parity_limit(dl, true)];
    for l in 1..=MAX_DEGREE {
        let poly = chebyshev_poly(gamma_star, l)?;
        let err = numerics::op_norm(&(singular_transform(&dl.svd, &poly) - &limits[l % 2]));
        if err <= eps {
            return Ok(l);
        }
    }
    Err(Error::NoConvergence("minimal degree search"))
}

#[derive(Debug, Clone)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// (γ*, minimal ℓ) per instance.
    pub points: Vec<(f64, usize)>,
}

/// Least-squares slope of ln ℓ_min against ln(1/γ*).
pub fn speedup_slope(instances: &[PlantedInstance], eps: f64) -> Result<SlopeFit> {
    if instances.len() < 4 {
        return Err(Error::InsufficientSpread(format!("{} instances, need at least 4", instances.len())));
    }
    let (lo, hi) = instances
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), i| (lo.min(i.gamma_star), hi.max(i.gamma_star)));
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::InsufficientSpread(format!("gamma_star spans [{lo}, {hi}], less than a decade")));
    }
    let degrees = exec::try_map(instances, |i| minimal_degree(&i.dl, i.gamma_star, eps))?;
    let xs: Vec<f64> = instances.iter().map(|i| (1.0 / i.gamma_star).ln()).collect();
    let ys: Vec<f64> = degrees.iter().map(|&l| (l as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        points: instances.iter().map(|i| i.gamma_star).zip(degrees).collect(),
    })
}
