//! Closed-form cost estimates.
//!
//! Both expressions are evaluated literally with user-chosen leading
//! constants. Logarithms are clamped below at 1 so that tiny arguments do not
//! make a factor vanish or turn negative; the clamp is applied the same way in
//! every factor. The gate-synthesis exponent `c` is only carried through.

use serde::Serialize;

use crate::error::{CliError, Result};

pub const DEFAULT_SK_EXPONENT: f64 = 1.44;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateInputs {
    /// Number of local terms.
    pub m: usize,
    /// Non-commutation degree.
    pub g: usize,
    /// Spectral gap of the generator.
    pub gap: f64,
    pub sigma_min: f64,
    pub eps: f64,
    pub beta: f64,
    pub norm_h: f64,
    pub delta: f64,
    /// Smallest generator gap along the annealing path.
    pub path_gap: f64,
    /// Spacing constant of the schedule.
    pub alpha: f64,
    pub sk_exponent: f64,
    pub mix_constant: f64,
    pub anneal_constant: f64,
}

impl EstimateInputs {
    /// Inputs for a single-term toy problem; used by the docs and tests.
    pub fn toy() -> Self {
        Self {
            m: 1,
            g: 0,
            gap: 1.0,
            sigma_min: 0.5,
            eps: 0.1,
            beta: 1.0,
            norm_h: 1.0,
            delta: 0.1,
            path_gap: 1.0,
            alpha: 2.0,
            sk_exponent: DEFAULT_SK_EXPONENT,
            mix_constant: 1.0,
            anneal_constant: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormulaValue {
    /// Everything except the gate-synthesis log factor.
    pub prefactor: f64,
    /// log^c(·), reported apart so the polynomial part can be compared.
    pub log_factor: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceEstimate {
    pub inputs: EstimateInputs,
    /// Number of channel rounds implied by the mixing bound (constant `mix_constant`).
    pub k_formula: f64,
    /// Gate count of the cyclic sampler.
    pub cyclic: FormulaValue,
    /// K = max(1, ⌈αβ‖H‖⌉).
    pub schedule_steps: usize,
    /// Gate count of the annealing preparation.
    pub anneal: FormulaValue,
    /// ⌈log₂ M⌉ + 1.
    pub ancilla: usize,
}

/// max(1, ln x).
pub fn clamped_ln(x: f64) -> f64 {
    if x > std::f64::consts::E {
        x.ln()
    } else {
        1.0
    }
}

fn check(inputs: &EstimateInputs) -> Result<()> {
    let i = inputs;
    let bad = |m: &str| Err(CliError::BadInputs(m.to_string()));
    if i.m == 0 {
        return bad("M must be at least 1");
    }
    if !(i.gap > 0.0 && i.gap.is_finite()) || !(i.path_gap > 0.0 && i.path_gap.is_finite()) {
        return bad("gaps must be positive");
    }
    if !(i.sigma_min > 0.0 && i.sigma_min <= 1.0) {
        return bad("sigma_min must lie in (0, 1]");
    }
    if !(i.eps > 0.0 && i.eps < 1.0) || !(i.delta > 0.0 && i.delta < 1.0) {
        return bad("eps and delta must lie in (0, 1)");
    }
    if !(i.beta >= 0.0 && i.beta.is_finite()) || !(i.norm_h >= 0.0 && i.norm_h.is_finite()) {
        return bad("beta and |H| must be finite and nonnegative");
    }
    if !(i.alpha > 1.0) {
        return bad("alpha must exceed 1");
    }
    if !(i.sk_exponent >= 0.0) || !(i.mix_constant > 0.0) || !(i.anneal_constant > 0.0) {
        return bad("constants must be positive");
    }
    Ok(())
}

pub fn resource_estimate(inputs: &EstimateInputs) -> Result<ResourceEstimate> {
    check(inputs)?;
    let i = inputs;
    let m = i.m as f64;
    let g2 = (i.g * i.g) as f64;
    let c = i.sk_exponent;

    let mix_log = clamped_ln(1.0 / (i.sigma_min * i.eps));
    let k_formula = i.mix_constant * g2 / i.gap * mix_log;
    let prefactor = i.mix_constant * m * g2 / i.gap * mix_log;
    let log_factor = clamped_ln(k_formula * m / i.eps).powf(c);
    let cyclic = FormulaValue { prefactor, log_factor, value: prefactor * log_factor };

    let bh = i.beta * i.norm_h;
    let root = i.path_gap.sqrt();
    let prefactor = i.anneal_constant * m * bh / root * clamped_ln(bh / i.delta).powi(2);
    let log_factor = clamped_ln(m / root * bh / i.delta).powf(c);
    let anneal = FormulaValue { prefactor, log_factor, value: prefactor * log_factor };

    Ok(ResourceEstimate {
        inputs: *i,
        k_formula,
        cyclic,
        schedule_steps: ((i.alpha * bh).ceil() as usize).max(1),
        anneal,
        ancilla: dlgibbs::projector::ancilla_estimate(i.m),
    })
}

/// Largest decrease of an estimate along a grid that should be nondecreasing.
/// Returns the worst (previous − next) over consecutive points; ≤ 0 means monotone.
pub fn monotonicity_defect<F>(grid: &[f64], f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let vals = grid.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    Ok(vals.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max))
}

/// Grid checks of monotonicity in M, 1/gap and ln(1/ε) around `base`.
/// Returns (name, defect) pairs.
pub fn monotonicity_report(base: &EstimateInputs) -> Result<Vec<(&'static str, f64)>> {
    let ms = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    let inv_gaps = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let log_eps = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let with = |f: &dyn Fn(&mut EstimateInputs)| {
        let mut i = *base;
        f(&mut i);
        resource_estimate(&i)
    };
    Ok(vec![
        ("cyclic_in_m", monotonicity_defect(&ms, |x| Ok(with(&|i| i.m = x as usize)?.cyclic.value))?),
        ("anneal_in_m", monotonicity_defect(&ms, |x| Ok(with(&|i| i.m = x as usize)?.anneal.value))?),
        ("cyclic_in_inverse_gap", monotonicity_defect(&inv_gaps, |x| Ok(with(&|i| i.gap = 1.0 / x)?.cyclic.value))?),
        ("anneal_in_inverse_gap", monotonicity_defect(&inv_gaps, |x| Ok(with(&|i| i.path_gap = 1.0 / x)?.anneal.value))?),
        ("cyclic_in_log_inverse_eps", monotonicity_defect(&log_eps, |x| Ok(with(&|i| i.eps = (-x).exp())?.cyclic.value))?),
    ])
}
