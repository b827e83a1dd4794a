//! One function per experiment; each returns a table, a result record and checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use qtrans_core::algebra::{spectral_norm, FockConfig, Layout, OperatorMatrix, StateVector};
use qtrans_core::dynamics::{
    evolve, heisenberg_fk, so3_propagator, complete_sector_indices, Propagator, TimeGrid,
};
use qtrans_core::model::{
    build_h0, build_h2, build_h3, build_h4, build_h4prime, derive_model_params, DerivedParams,
    Drive, EffectiveParams, ModelParams, QubitSector,
};
use qtrans_core::protocols::{
    degenerate_transfer, driven_jc_ground_state, effective_vs_full_sweep, fock_input,
    nondegenerate_transfer, prepare_coherent, prepare_coherent_reverse, SweepKind, SweepOptions,
    TransferOptions, TransferReport, ValidationReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ParamSource, RunConfig};
use crate::output::{Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Derive,
    Fig2,
    TransferDegenerate,
    TransferNondegenerate,
    Coherent,
    Validate,
    Sweep,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Derive => "derive",
            Experiment::Fig2 => "fig2",
            Experiment::TransferDegenerate => "transfer-degenerate",
            Experiment::TransferNondegenerate => "transfer-nondegenerate",
            Experiment::Coherent => "coherent",
            Experiment::Validate => "validate",
            Experiment::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= bound,
            value,
            bound,
        }
    }

    /// Passes when `value < bound`.
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: value < bound,
            value,
            bound,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub choices: BTreeMap<String, Value>,
    pub derived: Value,
    pub result: Value,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Io(e.to_string()))
}

struct Resolved {
    model: ModelParams,
    eff: EffectiveParams,
    derived: Option<DerivedParams>,
}

fn resolve(cfg: &RunConfig) -> Result<Resolved, CliError> {
    match cfg.param_source()? {
        ParamSource::Device { device, n_g } => {
            let d = derive_model_params(&device, n_g, cfg.strategy())?;
            Ok(Resolved {
                model: d.model,
                eff: d.effective,
                derived: Some(d),
            })
        }
        ParamSource::Model(p) => Ok(Resolved {
            model: p,
            eff: EffectiveParams::new(&p, cfg.strategy())?,
            derived: None,
        }),
    }
}

fn derived_value(r: &Resolved) -> Result<Value, CliError> {
    match &r.derived {
        Some(d) => to_value(d),
        None => Ok(json!({ "model": to_value(&r.model)?, "effective": to_value(&r.eff)? })),
    }
}

fn fock(cfg: &RunConfig, default: usize) -> Result<FockConfig, CliError> {
    Ok(FockConfig::new(
        cfg.n_a.unwrap_or(default),
        cfg.n_b.unwrap_or(default),
        cfg.leakage_tol(),
    )?)
}

fn grid(cfg: &RunConfig, t_end_default: f64, n_default: usize) -> Result<TimeGrid, CliError> {
    Ok(TimeGrid::uniform(
        cfg.t_start.unwrap_or(0.0),
        cfg.t_end.unwrap_or(t_end_default),
        cfg.n_points.unwrap_or(n_default),
    )?)
}

pub fn run_experiment(exp: Experiment, cfg: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    match exp {
        Experiment::Derive => derive(cfg),
        Experiment::Fig2 => fig2(cfg),
        Experiment::TransferDegenerate => transfer_degenerate(cfg),
        Experiment::TransferNondegenerate => transfer_nondegenerate(cfg),
        Experiment::Coherent => coherent(cfg),
        Experiment::Validate => sweep(cfg, Some(seed)),
        Experiment::Sweep => sweep(cfg, None),
    }
}

fn derive(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let r = resolve(cfg)?;
    let d = r
        .derived
        .as_ref()
        .ok_or_else(|| CliError::Config("derive needs device fields".into()))?;
    let mut table = Table::new(["name", "value", "formula"]);
    for q in &d.quantities {
        table.push(vec![q.name.into(), q.value.into(), q.formula.into()]);
    }
    let finite = d.quantities.iter().filter(|q| !q.value.is_finite()).count();
    Ok(Outcome {
        table,
        choices: BTreeMap::from([("lambda_strategy".into(), json!(cfg.strategy().name()))]),
        derived: derived_value(&r)?,
        result: json!({ "warnings": d.warnings }),
        checks: vec![Check::at_most("derived_values_finite", finite as f64, 0.0)],
    })
}

/// |K(−t)|² columns over δt for each β.
pub fn fig2_table(betas: &[f64], delta: f64, grid: &TimeGrid) -> Table {
    let mut cols = vec!["delta_t".to_string()];
    cols.extend(betas.iter().map(|b| format!("beta_{b}")));
    let mut table = Table::new(cols);
    for &t in grid.times() {
        let mut row = vec![Cell::Float(delta * t)];
        for &b in betas {
            row.push(heisenberg_fk(b, delta, 0.0, -t).k.norm_sqr().into());
        }
        table.push(row);
    }
    table
}

fn fig2(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let betas = cfg.fig2_betas();
    if betas.is_empty() {
        return Err(CliError::Config("`betas` must not be empty".into()));
    }
    let delta = cfg.delta.unwrap_or(1.0);
    if !(delta != 0.0 && delta.is_finite()) {
        return Err(CliError::Config("`delta` must be finite and nonzero".into()));
    }
    let g = grid(cfg, 2.0 * PI / delta.abs(), 401)?;
    let table = fig2_table(&betas, delta, &g);
    let mut checks = Vec::new();
    let mut maxima = Vec::new();
    for (j, &b) in betas.iter().enumerate() {
        let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
        for row in &table.rows {
            if let (Cell::Float(x), Cell::Float(v)) = (&row[0], &row[j + 1]) {
                if *v > best {
                    best = *v;
                    at = *x;
                }
            }
        }
        let want = (2.0 * b).sin().powi(2);
        checks.push(Check::at_most(format!("beta_{b}_peak_equals_sin2_2beta"), (best - want).abs(), 1e-12));
        if b == PI / 4.0 {
            checks.push(Check::at_most("quarter_pi_peak_is_one", (best - 1.0).abs(), 0.0));
            checks.push(Check::at_most("quarter_pi_peak_at_pi", (at - PI).abs(), 0.0));
        }
        maxima.push(json!({ "beta": b, "max": best, "delta_t": at, "expected": want }));
    }
    if g.t_start() == 0.0 {
        let first = table.rows[0][1..]
            .iter()
            .map(|c| if let Cell::Float(v) = c { v.abs() } else { 0.0 })
            .fold(0.0, f64::max);
        checks.push(Check::at_most("zero_at_origin", first, 0.0));
    }
    Ok(Outcome {
        table,
        choices: BTreeMap::from([
            ("betas".into(), json!(betas)),
            ("delta".into(), json!(delta)),
        ]),
        derived: json!({}),
        result: json!({ "maxima": maxima }),
        checks,
    })
}

fn series_table(rep: &TransferReport) -> Table {
    let mut table = Table::new(["time", "analytic", "full", "ground_probability", "effective"]);
    for s in &rep.series {
        table.push(vec![
            s.time.into(),
            s.analytic.into(),
            s.full.into(),
            s.ground_probability.into(),
            s.effective.into(),
        ]);
    }
    table
}

fn transfer_checks(rep: &TransferReport) -> Vec<Check> {
    let over = [rep.full.fidelity, rep.effective.fidelity, rep.analytic.fidelity]
        .iter()
        .chain(rep.series.iter().flat_map(|s| [s.analytic, s.full, s.effective].into_iter().collect::<Vec<_>>()).collect::<Vec<_>>().iter())
        .fold(0.0f64, |m, f| m.max(f - 1.0).max(-f));
    vec![
        Check::at_most("fidelities_in_unit_interval", over, 1e-12),
        Check::at_most("leakage_flagged", if rep.leakage_flagged { 1.0 } else { 0.0 }, 0.0),
    ]
}

fn without_series(rep: &TransferReport) -> TransferReport {
    let mut r = rep.clone();
    r.series.clear();
    r
}

fn transfer_degenerate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let r = resolve(cfg)?;
    let fc = fock(cfg, 10)?;
    let n = cfg.n.unwrap_or(1);
    let t_star = qtrans_core::dynamics::transfer_time(r.eff.stark_shift, 0);
    let g = grid(cfg, 2.0 * t_star, 401)?;
    let rep = degenerate_transfer(&r.model, &fock_input(n), &fc, Some(&g), &TransferOptions::default())?;
    let mut checks = transfer_checks(&rep);
    checks.push(Check::at_most(
        "effective_matches_analytic",
        (rep.effective.fidelity - rep.analytic.fidelity).abs(),
        1e-9,
    ));
    Ok(Outcome {
        table: series_table(&rep),
        choices: BTreeMap::from([
            ("n".into(), json!(n)),
            ("cutoffs".into(), json!([fc.n_a, fc.n_b])),
            ("transfer_time".into(), json!(rep.analytic.time)),
            ("transfer_time_printed".into(), json!(rep.transfer_time_printed)),
        ]),
        derived: derived_value(&r)?,
        result: to_value(&without_series(&rep))?,
        checks,
    })
}

fn transfer_nondegenerate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let r = resolve(cfg)?;
    let fc = fock(cfg, 10)?;
    let gt = r.eff.so3_for_sector(QubitSector::Ground).gamma_tilde();
    let g = grid(cfg, 2.0 * PI / gt, 401)?;
    let rep = nondegenerate_transfer(&r.model, &fc, cfg.strategy(), Some(&g), &TransferOptions::default())?;
    let mut checks = transfer_checks(&rep);
    let proj = rep.projection.expect("non-degenerate report carries a projection");
    checks.push(Check::at_most(
        "effective_conditional_fidelity",
        1.0 - proj.effective_conditional_fidelity,
        1e-12,
    ));
    checks.push(Check::at_most(
        "effective_matches_analytic",
        (rep.effective.fidelity - rep.analytic.fidelity).abs(),
        1e-9,
    ));
    Ok(Outcome {
        table: series_table(&rep),
        choices: BTreeMap::from([
            ("lambda_strategy".into(), json!(cfg.strategy().name())),
            ("qubit_sector".into(), json!("ground")),
            ("cutoffs".into(), json!([fc.n_a, fc.n_b])),
        ]),
        derived: derived_value(&r)?,
        result: to_value(&without_series(&rep))?,
        checks,
    })
}

fn coherent(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let r = resolve(cfg)?;
    let n_b = cfg.n_b.unwrap_or(25);
    let n_a = cfg.n_a.unwrap_or(25);
    let tol = cfg.leakage_tol();
    let drive = Drive {
        mu: cfg.mu.unwrap_or(1.0),
        phi: cfg.phi.unwrap_or(0.0),
    };
    let g = grid(cfg, 2.0 * PI / r.eff.shifted_omega_b.abs(), 101)?;
    let rep = prepare_coherent(&r.eff, &drive, n_b, &g, tol)?;
    let reverse = prepare_coherent_reverse(&r.eff, &drive, n_a, &g, tol)?;
    let jc = driven_jc_ground_state(&r.model, drive.xi(), n_b, tol)?;

    let mut table = Table::new(["time", "z_re", "z_im", "fidelity", "mean", "variance", "fano"]);
    for i in 0..rep.times.len() {
        table.push(vec![
            rep.times[i].into(),
            rep.z[i].re.into(),
            rep.z[i].im.into(),
            rep.fidelity[i].into(),
            rep.mean[i].into(),
            rep.variance[i].into(),
            rep.fano[i].into(),
        ]);
    }
    let checks = vec![
        Check::at_most("coherent_fidelity", rep.max_infidelity, 1e-10),
        Check::at_most("poisson_statistics", rep.max_fano_deviation, 1e-6),
        Check::at_most("revival", rep.revival_amplitude, 1e-12),
        Check::at_most("norm_conservation", rep.max_norm_error, 1e-10),
        Check::at_most("energy_conservation", rep.max_energy_drift, 1e-10),
        Check::at_most("reverse_coherent_fidelity", reverse.max_infidelity, 1e-10),
        Check::at_most("leakage_flagged", (rep.leakage_flagged || reverse.leakage_flagged) as u8 as f64, 0.0),
        Check::at_most("jc_fixed_point_converged", if jc.converged { 0.0 } else { 1.0 }, 0.0),
    ];
    let summary = |c: &qtrans_core::protocols::CoherentReport| {
        json!({
            "mode": c.mode,
            "extrapolated": c.extrapolated,
            "frequency": c.frequency,
            "coupling": c.coupling,
            "cutoff": c.cutoff,
            "max_infidelity": c.max_infidelity,
            "max_fano_deviation": c.max_fano_deviation,
            "max_norm_error": c.max_norm_error,
            "max_energy_drift": c.max_energy_drift,
            "leakage_flagged": c.leakage_flagged,
            "revival_amplitude": c.revival_amplitude,
            "revival_vacuum_fidelity": c.revival_vacuum_fidelity,
        })
    };
    Ok(Outcome {
        table,
        choices: BTreeMap::from([
            ("mu".into(), json!(drive.mu)),
            ("phi".into(), json!(drive.phi)),
            ("lambda_strategy".into(), json!(cfg.strategy().name())),
            ("cutoff_b".into(), json!(n_b)),
            ("cutoff_a_reverse".into(), json!(n_a)),
        ]),
        derived: derived_value(&r)?,
        result: json!({
            "namr": summary(&rep),
            "tlr_reverse": summary(&reverse),
            "jc_ground_state": to_value(&jc)?,
        }),
        checks,
    })
}

fn sweep_table(v: &ValidationReport) -> Table {
    let mut table = Table::new([
        "ratio",
        "error",
        "peak_time_relative_error",
        "analytic_fidelity",
        "analytic_time",
        "full_fidelity",
        "full_time",
        "ground_probability",
        "effective_fidelity",
    ]);
    for (i, rep) in v.reports.iter().enumerate() {
        table.push(vec![
            v.ratios[i].into(),
            v.errors[i].into(),
            v.peak_time_errors[i].into(),
            rep.analytic.fidelity.into(),
            rep.analytic.time.into(),
            rep.full.fidelity.into(),
            rep.full.time.into(),
            rep.full.ground_probability.into(),
            rep.effective.fidelity.into(),
        ]);
    }
    table
}

fn sweep(cfg: &RunConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    let r = resolve(cfg)?;
    let fc = fock(cfg, 10)?;
    let ratios = cfg.ratios.clone().unwrap_or_else(|| vec![8.0, 16.0, 32.0, 64.0]);
    let opts = SweepOptions {
        kind: cfg.sweep_kind.unwrap_or(SweepKind::Degenerate),
        n: cfg.n.unwrap_or(1),
        strategy: cfg.strategy(),
        ..SweepOptions::default()
    };
    let v = effective_vs_full_sweep(&r.model, &ratios, &fc, &opts)?;
    let mut checks = vec![Check::below("error_decreases_with_ratio", v.spearman, 0.0)];
    let leak = v.reports.iter().filter(|r| r.leakage_flagged).count();
    checks.push(Check::at_most("leakage_flagged", leak as f64, 0.0));
    let mut result = json!({
        "kind": v.kind,
        "strategy": v.strategy,
        "fit": v.fit,
        "peak_time_fit": v.peak_time_fit,
        "spearman": v.spearman,
        "peak_time_spearman": v.peak_time_spearman,
        "doubling": v.doubling,
    });
    if let Some(seed) = seed {
        let (inv_checks, inv) = invariants(&r, &fc, seed)?;
        checks.extend(inv_checks);
        result["invariants"] = inv;
    }
    Ok(Outcome {
        table: sweep_table(&v),
        choices: BTreeMap::from([
            ("ratios".into(), json!(ratios)),
            ("sweep_kind".into(), to_value(&opts.kind)?),
            ("n".into(), json!(opts.n)),
            ("lambda_strategy".into(), json!(opts.strategy.name())),
            ("cutoffs".into(), json!([fc.n_a, fc.n_b])),
        ]),
        derived: derived_value(&r)?,
        result,
        checks,
    })
}

/// Seeded invariant checks: complementarity, Hermiticity, conservation laws
/// and the SO(3) factorization.
fn invariants(r: &Resolved, fc: &FockConfig, seed: u64) -> Result<(Vec<Check>, Value), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_fk: f64 = 0.0;
    for _ in 0..1000 {
        let f = heisenberg_fk(
            rng.random_range(-PI..PI),
            rng.random_range(-2.0..2.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-100.0..100.0),
        );
        worst_fk = worst_fk
            .max((f.f1.norm_sqr() + f.k.norm_sqr() - 1.0).abs())
            .max((f.f2.norm_sqr() + f.k.norm_sqr() - 1.0).abs());
    }

    let mut hermitian: f64 = 0.0;
    let h2 = build_h2(&r.model, fc)?;
    for h in [build_h0(&r.model, fc)?, h2.clone(), build_h4(&r.eff, fc)?, build_h4prime(&r.eff, fc.n_a, fc.n_b)?] {
        hermitian = hermitian.max(h.hermitian_deviation());
    }
    if r.eff.require_large_detuning(1.0).is_ok() {
        hermitian = hermitian.max(build_h3(&r.eff, fc)?.hermitian_deviation());
    }

    let psi0 = StateVector::tripartite(fc, 0, 1, 0)?;
    let span = rng.random_range(10.0..1000.0);
    let run = evolve(&h2, &psi0, &TimeGrid::uniform(0.0, span, 64)?, fc.leakage_tol)?;

    let (n_a, n_b) = (fc.n_a.min(8), fc.n_b.min(8));
    let h4p = build_h4prime(&r.eff, n_a, n_b)?;
    let prop = Propagator::new(&h4p, Layout::TwoMode { n_a, n_b })?;
    let idx = complete_sector_indices(n_a, n_b);
    let mut so3: f64 = 0.0;
    for _ in 0..10 {
        let t = rng.random_range(0.0..200.0);
        let u = so3_propagator(&r.eff.so3(), n_a, n_b, t)?;
        let diff = OperatorMatrix::new(u.entries() - prop.unitary(t))?;
        so3 = so3.max(spectral_norm(&diff.restrict(&idx)));
    }
    let checks = vec![
        Check::at_most("complementarity", worst_fk, 1e-14),
        Check::at_most("hermiticity", hermitian, 1e-12),
        Check::at_most("norm_conservation", run.max_norm_error(), 1e-10),
        Check::at_most("energy_conservation", run.max_energy_drift(), 1e-10),
        Check::at_most("so3_factorization", so3, 1e-10),
    ];
    let summary = json!({
        "seed": seed,
        "complementarity_max_deviation": worst_fk,
        "hermitian_max_deviation": hermitian,
        "norm_max_error": run.max_norm_error(),
        "energy_max_drift": run.max_energy_drift(),
        "so3_max_deviation": so3,
        "ground_sector_gamma": to_value(&r.eff.so3_for_sector(QubitSector::Ground))?,
    });
    Ok((checks, summary))
}
