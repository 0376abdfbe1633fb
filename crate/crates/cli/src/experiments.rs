//! The six experiments. Each one computes its tables and a JSON result block,
//! recording every bound it checks; nothing touches the filesystem until
//! [`Report::write`].

use std::path::{Path, PathBuf};

use dlgibbs::annealing;
use dlgibbs::hamiltonian::{self, LocalHamiltonian};
use dlgibbs::jumps::{self, CouplingSet, ThermalModel};
use dlgibbs::kms::{self, DB_TOL};
use dlgibbs::numerics::{self, random, DenseMatrix};
use dlgibbs::sampler::{self, DlChannel};
use dlgibbs::{exec, parent, projector, Error as CoreError};
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{InModule, Result};
use crate::estimate::{self, EstimateInputs, DEFAULT_SK_EXPONENT};
use crate::output::{int, num, write_atomic, Checks, Csv, Violation, ARTIFACT_VERSION, TOOL_VERSION};

/// Tolerances of the asserted bounds.
pub mod tol {
    pub const DB: f64 = 1e-8;
    pub const STATIONARITY: f64 = 1e-9;
    pub const MIXING: f64 = 1e-8;
    pub const CONTRACTION: f64 = 1e-8;
    pub const CENTERED_TRACE: f64 = 1e-10;
    pub const GAP_ORDER: f64 = 1e-8;
    pub const UNIT_SINGULAR: f64 = 1e-10;
    pub const SINGULAR_GAP: f64 = 1e-9;
    pub const GROUND_BLOCK: f64 = 1e-9;
    pub const PROJECTOR: f64 = 1e-9;
    pub const FRUSTRATION: f64 = 1e-9;
    pub const SPECTRUM: f64 = 1e-9;
    pub const PURIFICATION: f64 = 1e-10;
    pub const LOCALITY: f64 = 1e-9;
    pub const TRANSITION: f64 = 1e-9;
    pub const SLOPE_PROJECTOR: (f64, f64) = (0.4, 0.6);
    pub const SLOPE_OVERLAP: (f64, f64) = (1.8, 2.2);
}

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
const DEFAULT_ALPHA: f64 = 2.0;
const DEFAULT_DELTA: f64 = 0.05;
const DEFAULT_PLANTED_DIM: usize = 16;
const DEFAULT_PLANTED_EPS: f64 = 1e-6;
const DEFAULT_ESTIMATE_K_MAX: usize = 10_000;

#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: Experiment,
    pub config_hash: String,
    pub config_toml: String,
    /// The first table is the primary artifact.
    pub tables: Vec<Csv>,
    pub results: Value,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// 0 when every asserted bound held, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            2
        }
    }

    pub fn summary(&self) -> Value {
        json!({
            "schema_version": SUMMARY_SCHEMA_VERSION,
            "tool_version": TOOL_VERSION,
            "artifact_version": ARTIFACT_VERSION,
            "experiment": self.experiment.name(),
            "config_sha256": self.config_hash,
            "config": self.config_toml,
            "results": self.results,
            "violations": self.violations,
            "warnings": self.warnings,
            "passed": self.passed(),
        })
    }

    pub fn csv_text(&self, index: usize) -> String {
        self.tables[index].render(&self.config_hash)
    }

    /// File name of each table, primary first.
    pub fn file_names(&self, cfg: &ExperimentConfig) -> (Vec<String>, String) {
        let mut names: Vec<String> = self.tables.iter().map(|t| format!("{}.csv", t.name)).collect();
        if let (Some(first), Some(custom)) = (names.first_mut(), cfg.output.csv.as_ref()) {
            *first = custom.clone();
        }
        let summary = cfg.output.summary.clone().unwrap_or_else(|| format!("{}_summary.json", self.experiment.name()));
        (names, summary)
    }

    /// Writes every table and the summary under `dir`, each atomically.
    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
        let (names, summary) = self.file_names(cfg);
        let mut written = Vec::new();
        for (i, name) in names.iter().enumerate() {
            let path = dir.join(name);
            write_atomic(&path, &self.csv_text(i))?;
            written.push(path);
        }
        let path = dir.join(summary);
        let text = serde_json::to_string_pretty(&self.summary()).map_err(|e| crate::error::CliError::Serialize(e.to_string()))?;
        write_atomic(&path, &(text + "\n"))?;
        written.push(path);
        Ok(written)
    }
}

struct Outcome {
    tables: Vec<Csv>,
    results: Value,
    checks: Checks,
    warnings: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { tables: Vec::new(), results: Value::Null, checks: Checks::default(), warnings: Vec::new() }
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

/// Runs the experiment named in `cfg`. With `strict`, warnings (reducible
/// generators, adjusted degrees, unchecked locality) count as violations.
pub fn execute(cfg: &ExperimentConfig, strict: bool) -> Result<Report> {
    let mut out = Outcome::new();
    match cfg.experiment {
        Experiment::Mix => mix(cfg, &mut out)?,
        Experiment::Project => project(cfg, &mut out)?,
        Experiment::Parent => parent_experiment(cfg, &mut out)?,
        Experiment::Anneal => anneal(cfg, &mut out)?,
        Experiment::Overlap => overlap(cfg, &mut out)?,
        Experiment::Estimate => estimate_experiment(cfg, &mut out)?,
    }
    let mut violations = out.checks.violations;
    if strict {
        violations.extend(out.warnings.iter().map(|w| Violation { check: format!("warning: {w}"), value: 1.0, limit: 0.0 }));
    }
    for v in &violations {
        log::error!("violated {}: {:e} against {:e}", v.check, v.value, v.limit);
    }
    Ok(Report {
        experiment: cfg.experiment,
        config_hash: cfg.hash()?,
        config_toml: cfg.to_toml()?,
        tables: out.tables,
        results: out.results,
        violations,
        warnings: out.warnings,
    })
}

fn instance(cfg: &ExperimentConfig) -> Result<LocalHamiltonian> {
    hamiltonian::build_instance(cfg.instance_kind()?, cfg.model.n, cfg.seed()).in_module("hamiltonian")
}

fn instance_id(cfg: &ExperimentConfig) -> String {
    format!("{}-n{}-s{}", cfg.model.kind, cfg.model.n, cfg.seed())
}

fn couplings(cfg: &ExperimentConfig) -> Result<CouplingSet> {
    Ok(CouplingSet::single_site(cfg.couplings()?, cfg.model.n))
}

fn model(cfg: &ExperimentConfig, h: &LocalHamiltonian) -> Result<ThermalModel> {
    jumps::thermal_model(h, &couplings(cfg)?, &cfg.weights()?).in_module("jumps")
}

fn channel(cfg: &ExperimentConfig, m: &ThermalModel) -> Result<DlChannel> {
    sampler::compose_dl_channel(&m.terms, &m.kms, cfg.order()?).in_module("sampler")
}

fn ground_state(dim: usize) -> DenseMatrix {
    let mut rho = DenseMatrix::zeros(dim, dim);
    rho[(0, 0)] = numerics::ONE;
    rho
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

/// Least-squares slope of y against x.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn mix(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let k_max = cfg.run.k_max.unwrap_or(0);
    let h = instance(cfg)?;
    let m = model(cfg, &h)?;
    let ch = channel(cfg, &m)?;
    let n_terms = ch.num_factors();
    if !ch.generator.is_irreducible() {
        out.warn(format!("generator kernel has dimension {}; the mixing bound is vacuous", ch.generator.kernel_dim));
    }
    let l = kms::lindblad_superoperator(&m.terms, h.n).in_module("kms")?;
    let stationarity = kms::stationarity_residual(&l, &m.kms.sigma).in_module("kms")?;
    out.checks.at_most("db_residual", ch.generator.db_residual, tol::DB);
    out.checks.at_most("stationarity", stationarity, tol::STATIONARITY);

    let hl = sampler::superop_hamiltonian(&ch).in_module("sampler")?;
    out.checks.at_least("gap_ordering", hl.gap - ch.generator.gap, -tol::GAP_ORDER);

    let dim = m.kms.dim();
    let extra = cfg.run.random_states.unwrap_or(0);
    let states: Vec<DenseMatrix> = std::iter::once(ground_state(dim))
        .chain((1..=extra).map(|i| random::density_matrix(dim, &mut random::stream_rng(cfg.seed(), i as u64))))
        .collect();
    let traces = exec::try_map(&states, |rho| sampler::iterate(&ch, rho, &m.kms, k_max)).in_module("sampler")?;
    let mut state_results = Vec::new();
    for (i, tr) in traces.iter().enumerate() {
        let name = if i == 0 { "mix".to_string() } else { format!("mix_state{i}") };
        let mut t = Csv::new(name, &["k", "trace_distance", "bound", "channel_applications"]);
        for r in &tr.records {
            t.push(vec![int(r.k), num(r.trace_distance), num(r.bound), int(r.channel_applications)]);
            out.checks.at_most(format!("mixing_bound[state={i},k={}]", r.k), r.trace_distance - r.bound, tol::MIXING);
            out.checks.equal(format!("channel_applications[state={i},k={}]", r.k), r.channel_applications, r.k * n_terms);
        }
        out.tables.push(t);
        state_results.push(json!({
            "state": i,
            "worst_excess": tr.worst_excess(),
            "final_trace_distance": tr.records.last().map(|r| r.trace_distance),
            "channel_applications": tr.total_applications(),
        }));
    }

    let trials = cfg.run.trials.unwrap_or(0);
    let contraction = if trials > 0 {
        let rep = sampler::contraction_check(&ch, &m.kms, trials, cfg.seed()).in_module("sampler")?;
        out.checks.at_most("contraction_ratio", rep.max_ratio, 1.0 + tol::CONTRACTION);
        out.checks.at_most("centered_trace", rep.max_trace, tol::CENTERED_TRACE);
        json!({
            "trials": rep.trials,
            "vacuous": rep.vacuous,
            "max_ratio": rep.max_ratio,
            "max_trace": rep.max_trace,
            "max_dl_ratio": rep.max_dl_ratio,
        })
    } else {
        Value::Null
    };

    out.results = json!({
        "instance_id": instance_id(cfg),
        "beta": m.beta,
        "couplings": cfg.couplings()?.to_string(),
        "order": ch.order_spec.to_string(),
        "M": n_terms,
        "g": ch.g,
        "gap": ch.generator.gap,
        "gap_superoperator_hamiltonian": hl.gap,
        "kernel_dim": ch.generator.kernel_dim,
        "sigma_min": m.kms.sigma_min,
        "contraction_factor": ch.contraction_factor(),
        "db_residual": ch.generator.db_residual,
        "stationarity_residual": stationarity,
        "k_max": k_max,
        "states": state_results,
        "contraction": contraction,
    });
    Ok(())
}

fn project(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let h = instance(cfg)?;
    let dl = projector::dl_operator(&h).in_module("projector")?;
    let sg = projector::singular_gap(&dl, &h).in_module("projector")?;
    let gs = hamiltonian::ground_space(&h, hamiltonian::GROUND_TOL).in_module("hamiltonian")?;
    let m = dl.num_factors();

    let unit_defect = max_of(dl.svd.s[..sg.rank].iter().map(|s| (s - 1.0).abs()));
    out.checks.at_most("unit_singular_values", unit_defect, tol::UNIT_SINGULAR);
    out.checks.at_most("singular_gap", sg.s_next - sg.s_bound, tol::SINGULAR_GAP);
    let block = numerics::op_norm(&(dl.ground_projector() - &gs.projector));
    out.checks.at_most("ground_block", block, tol::GROUND_BLOCK);
    if dl.rank != sg.rank {
        out.warn(format!("ground space dimension {} but {} unit singular values", sg.rank, dl.rank));
    }

    let lo = cfg.run.ell_min.unwrap_or(1);
    let hi = cfg.run.ell_max.unwrap_or(lo);
    let ells: Vec<usize> = (lo..=hi).collect();
    let rows = exec::try_map(&ells, |&l| {
        let poly = projector::chebyshev_poly(sg.certified, l)?;
        let res = projector::approximate_projector(&dl, &poly)?;
        let (rec, queries) = projector::projector_by_queries(&dl, &poly)?;
        let error = numerics::op_norm(&(&res.approx - &gs.projector));
        let agreement = numerics::op_norm(&(rec - &res.approx));
        Ok::<_, CoreError>((l, error, res.bound, queries, agreement))
    })
    .in_module("projector")?;

    let id = instance_id(cfg);
    let mut t = Csv::new("project", &["instance_id", "gamma", "g", "gamma_star", "ell", "error", "bound", "queries"]);
    for &(l, error, bound, queries, _) in &rows {
        t.push(vec![id.clone(), num(sg.gamma), int(sg.g), num(sg.certified), int(l), num(error), num(bound), int(queries)]);
        out.checks.at_most(format!("projector_error[ell={l}]"), error - bound, tol::PROJECTOR);
        out.checks.equal(format!("projector_queries[ell={l}]"), queries, l * m);
    }
    out.tables.push(t);

    let planted = match &cfg.run.planted_gammas {
        Some(gammas) => {
            let dim = cfg.run.planted_dim.unwrap_or(DEFAULT_PLANTED_DIM);
            let eps = cfg.run.eps.unwrap_or(DEFAULT_PLANTED_EPS);
            let instances = gammas
                .iter()
                .enumerate()
                .map(|(i, &g)| projector::planted_instance(g, dim, cfg.seed().wrapping_add(i as u64)))
                .collect::<dlgibbs::Result<Vec<_>>>()
                .in_module("projector")?;
            let fit = projector::speedup_slope(&instances, eps).in_module("projector")?;
            let mut pt = Csv::new("project_planted", &["gamma_star", "ell_min"]);
            for &(g, l) in &fit.points {
                pt.push(vec![num(g), int(l)]);
            }
            out.tables.push(pt);
            out.checks.at_least("planted_slope_low", fit.slope, tol::SLOPE_PROJECTOR.0);
            out.checks.at_most("planted_slope_high", fit.slope, tol::SLOPE_PROJECTOR.1);
            json!({ "dim": dim, "eps": eps, "slope": fit.slope, "intercept": fit.intercept })
        }
        None => Value::Null,
    };

    out.results = json!({
        "instance_id": id,
        "M": m,
        "rank": sg.rank,
        "gamma": sg.gamma,
        "g": sg.g,
        "gamma_star_certified": sg.certified,
        "gamma_star_empirical": sg.empirical,
        "s_next": sg.s_next,
        "s_bound": sg.s_bound,
        "unit_singular_defect": unit_defect,
        "ground_block_error": block,
        "max_recurrence_disagreement": max_of(rows.iter().map(|r| r.4)),
        "ancilla_estimate": projector::ancilla_estimate(m),
        "planted": planted,
    });
    Ok(())
}

fn parent_experiment(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let h = instance(cfg)?;
    let m = model(cfg, &h)?;
    let ph = parent::build_parent(&m.terms, &m.kms).in_module("parent")?;
    let rep = parent::verify_parent(&ph, &h).in_module("parent")?;

    let l = kms::lindblad_superoperator(&m.terms, h.n).in_module("kms")?;
    let coherent = kms::coherent_form(&l, &m.kms).in_module("kms")?;
    let parent_spec = numerics::eigvalsh(&ph.full).in_module("numerics")?;
    let coherent_spec = numerics::eigvalsh(&(&coherent.mat + coherent.mat.adjoint()).scale(0.5)).in_module("numerics")?;
    let spectrum_difference = max_of(parent_spec.iter().zip(&coherent_spec).map(|(a, b)| (a - b).abs()));

    let psi = parent::purified_gibbs(&h, m.beta).in_module("parent")?;
    let keep: Vec<usize> = (0..h.n).collect();
    let reduced = numerics::partial_trace(&numerics::outer(&psi, &psi), &keep, &vec![2; 2 * h.n]).in_module("numerics")?;
    let purification_error = numerics::frobenius(&(reduced - &m.kms.sigma));

    out.checks.at_most("frustration", rep.max_frustration, tol::FRUSTRATION);
    out.checks.at_most("spectrum", spectrum_difference, tol::SPECTRUM);
    out.checks.at_most("cross_check", rep.cross_check, tol::SPECTRUM);
    out.checks.at_most("purification", purification_error, tol::PURIFICATION);
    match &rep.locality_residuals {
        Some(res) => {
            for (a, r) in res.iter().enumerate() {
                out.checks.at_most(format!("locality[term={a}]"), *r, tol::LOCALITY);
            }
        }
        None => out.warn("Hamiltonian does not commute; parent locality not checked".into()),
    }
    match ph.frustration_free_hamiltonian() {
        Ok(_) => {}
        Err(CoreError::PositivityFailure { term, max_eig }) => {
            out.checks.at_most(format!("term_sign[term={term}]"), max_eig, 0.0);
        }
        Err(e) => return Err(crate::error::CliError::Core { module: "parent", source: e }),
    }

    let mut t = Csv::new(
        "parent",
        &["term", "sites", "norm", "frustration_residual", "locality_residual", "asymmetry"],
    );
    for (a, term) in ph.terms.iter().enumerate() {
        let sites: Vec<String> = term.local.sites.iter().map(|s| s.to_string()).collect();
        t.push(vec![
            int(a),
            sites.join(" "),
            num(term.norm),
            num(rep.frustration_residuals[a]),
            num(term.locality_residual),
            num(term.asymmetry),
        ]);
    }
    out.tables.push(t);

    let top = parent_spec.last().copied().unwrap_or(0.0);
    let second = parent_spec.iter().rev().nth(1).copied().unwrap_or(top);
    out.results = json!({
        "instance_id": instance_id(cfg),
        "beta": m.beta,
        "M": ph.terms.len(),
        "degree": rep.degree,
        "top_eigenvalue": top,
        "gap": top - second,
        "max_frustration": rep.max_frustration,
        "spectrum_difference": spectrum_difference,
        "cross_check": rep.cross_check,
        "purification_error": purification_error,
        "hermiticity_residual": rep.hermiticity_residual,
        "max_locality_residual": rep.locality_residuals.as_ref().map(|r| max_of(r.iter().copied())),
    });
    Ok(())
}

fn anneal(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let h = instance(cfg)?;
    let hfull = hamiltonian::assemble(&h).in_module("hamiltonian")?;
    let norm_h = numerics::op_norm(&hfull);
    let delta = cfg.run.delta.unwrap_or(DEFAULT_DELTA);
    let alpha = cfg.run.alpha.unwrap_or(DEFAULT_ALPHA);
    let sched = annealing::make_schedule(cfg.beta(), norm_h, alpha).in_module("annealing")?;
    let run = annealing::run_annealing(&h, &couplings(cfg)?, &cfg.weights()?, &sched, delta, cfg.mode()?, cfg.backend()?)
        .in_module("annealing")?;
    for w in &run.warnings {
        out.warn(w.clone());
    }

    let mut t = Csv::new("anneal", &["j", "beta_j", "overlap", "transition_error_bound", "cumulative_queries"]);
    for s in &run.steps {
        t.push(vec![int(s.j), num(s.beta), num(s.overlap), num(s.transition_error_bound), int(s.cumulative_queries)]);
        out.checks.at_most(format!("transition_error[j={}]", s.j), s.transition_error - s.transition_error_bound, tol::TRANSITION);
    }
    out.tables.push(t);

    let k = sched.k;
    let expected = k * (run.projector_degree * run.num_terms + run.transition_degree);
    out.checks.equal("query_tally", run.total_queries, expected);
    out.checks.at_least("final_fidelity", run.final_fidelity, 1.0 - delta);
    out.checks.at_least("success_probability", run.success_probability, 1.0 - delta);
    out.checks.at_most("state_error", run.state_error, delta / 2.0);

    out.results = json!({
        "instance_id": instance_id(cfg),
        "beta": cfg.beta(),
        "norm_h": norm_h,
        "mode": run.mode.to_string(),
        "backend": run.backend.to_string(),
        "K": k,
        "alpha": alpha,
        "delta": delta,
        "overlap_floor": run.b,
        "budgets": {
            "eps": run.budget.eps,
            "mu": run.budget.mu,
            "l": run.budget.l,
            "transition_bound": run.budget.transition_bound(),
        },
        "projector_degree": run.projector_degree,
        "transition_degree": run.transition_degree,
        "M": run.num_terms,
        "gamma_star_min": run.gamma_star_min,
        "generator_gap_min": run.generator_gap_min,
        "max_transition_error": max_of(run.steps.iter().map(|s| s.transition_error)),
        "final_fidelity": run.final_fidelity,
        "success_probability": run.success_probability,
        "state_error": run.state_error,
        "total_queries": run.total_queries,
        "expected_queries": expected,
    });
    Ok(())
}

fn overlap(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let h = instance(cfg)?;
    let hfull = hamiltonian::assemble(&h).in_module("hamiltonian")?;
    let beta = cfg.beta();
    let dbetas = cfg.run.dbetas.clone().unwrap_or_default();
    let overlaps = exec::try_map(&dbetas, |&d| annealing::overlap_matrix(&hfull, beta, d)).in_module("annealing")?;
    let mut t = Csv::new("overlap", &["dbeta", "overlap", "infidelity"]);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&d, &o) in dbetas.iter().zip(&overlaps) {
        let inf = 1.0 - o * o;
        t.push(vec![num(d), num(o), num(inf)]);
        if inf > 0.0 {
            xs.push(d.ln());
            ys.push(inf.ln());
        }
    }
    out.tables.push(t);
    let slope = (xs.len() >= 2).then(|| fit_slope(&xs, &ys));
    match slope {
        Some(s) if dbetas.len() >= 3 => {
            out.checks.at_least("overlap_slope_low", s, tol::SLOPE_OVERLAP.0);
            out.checks.at_most("overlap_slope_high", s, tol::SLOPE_OVERLAP.1);
        }
        _ => out.warn("fewer than three usable points; slope not checked".into()),
    }
    out.results = json!({
        "instance_id": instance_id(cfg),
        "beta": beta,
        "norm_h": numerics::op_norm(&hfull),
        "slope": slope,
    });
    Ok(())
}

fn estimate_experiment(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let h = instance(cfg)?;
    let m = model(cfg, &h)?;
    let ch = channel(cfg, &m)?;
    let norm_h = numerics::op_norm(&m.hamiltonian);
    let beta = cfg.beta();
    let eps = cfg.run.eps.unwrap_or(0.1);
    let delta = cfg.run.delta.unwrap_or(DEFAULT_DELTA);
    let alpha = cfg.run.alpha.unwrap_or(DEFAULT_ALPHA);
    let sched = annealing::make_schedule(beta, norm_h, alpha).in_module("annealing")?;
    let couplings = couplings(cfg)?;
    let w = cfg.weights()?;
    let path_gaps = exec::try_map(&sched.betas, |&b| {
        let mb = jumps::thermal_model(&h, &couplings, &w.with_beta(b))?;
        let l = kms::lindblad_superoperator(&mb.terms, h.n)?;
        Ok::<_, CoreError>(kms::spectral_report(&l, &mb.kms, DB_TOL)?.gap)
    })
    .in_module("kms")?;
    let path_gap = path_gaps.iter().cloned().fold(f64::INFINITY, f64::min);

    let inputs = EstimateInputs {
        m: ch.num_factors(),
        g: ch.g,
        gap: ch.generator.gap,
        sigma_min: m.kms.sigma_min,
        eps,
        beta,
        norm_h,
        delta,
        path_gap,
        alpha,
        sk_exponent: cfg.run.sk_exponent.unwrap_or(DEFAULT_SK_EXPONENT),
        mix_constant: cfg.run.mix_constant.unwrap_or(1.0),
        anneal_constant: cfg.run.anneal_constant.unwrap_or(1.0),
    };
    let est = estimate::resource_estimate(&inputs)?;
    for (name, defect) in estimate::monotonicity_report(&inputs)? {
        out.checks.at_most(format!("monotone_{name}"), defect, 0.0);
    }

    // Actual tally: rounds until the certified bound reaches ε.
    let cap = cfg.run.k_max.unwrap_or(DEFAULT_ESTIMATE_K_MAX);
    let mut k = 0;
    while ch.bound(k, m.kms.sigma_min) > eps && k < cap {
        k += 1;
    }
    if ch.bound(k, m.kms.sigma_min) > eps {
        out.warn(format!("mixing bound does not reach eps within {cap} rounds"));
    }
    let tr = sampler::iterate(&ch, &ground_state(m.kms.dim()), &m.kms, k).in_module("sampler")?;
    let applications = tr.total_applications();
    out.checks.equal("channel_applications", applications, k * inputs.m);
    let final_distance = tr.records.last().map(|r| r.trace_distance).unwrap_or(f64::NAN);
    out.checks.at_most("mixing_bound", final_distance - ch.bound(k, m.kms.sigma_min), tol::MIXING);

    let mode = cfg.mode()?;
    let run = annealing::run_annealing(&h, &couplings, &w, &sched, delta, mode, cfg.backend()?).in_module("annealing")?;
    let expected = sched.k * (run.projector_degree * run.num_terms + run.transition_degree);
    out.checks.equal("anneal_query_tally", run.total_queries, expected);

    let mut t = Csv::new("estimate", &["quantity", "formula_prefactor", "log_factor", "formula_value", "actual_tally"]);
    t.push(vec!["cyclic".into(), num(est.cyclic.prefactor), num(est.cyclic.log_factor), num(est.cyclic.value), int(applications)]);
    t.push(vec!["anneal".into(), num(est.anneal.prefactor), num(est.anneal.log_factor), num(est.anneal.value), int(run.total_queries)]);
    out.tables.push(t);

    out.results = json!({
        "instance_id": instance_id(cfg),
        "estimate": est,
        "actual": {
            "mixing_rounds": k,
            "channel_applications": applications,
            "final_trace_distance": final_distance,
            "anneal_mode": mode.to_string(),
            "anneal_queries": run.total_queries,
            "anneal_fidelity": run.final_fidelity,
        },
    });
    Ok(())
}
