//! Degenerate swap and non-degenerate projective transfer, each checked
//! against the full three-body Hamiltonian.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::measure::{projective_measure, Subsystem};
use super::search::{find_peak, Peak};
use crate::algebra::{FockConfig, Layout, StateVector};
use crate::dynamics::{
    heisenberg_fk_eff, transfer_phase_map, transfer_target, transfer_time, transfer_time_printed,
    OverlapSeries, Propagator, TimeGrid, Trajectory,
};
use crate::error::{Error, Result};
use crate::model::{
    build_h2, build_h3, build_h4prime_sector, EffectiveParams, LambdaStrategy, ModelParams,
    QubitSector, DEFAULT_PERTURBATIVE_RATIO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Degenerate,
    NonDegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityPeak {
    pub time: f64,
    pub fidelity: f64,
    /// Weight of the qubit ground sector at `time` (full model only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_probability: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionSummary {
    /// sin²β of the qubit-ground sector.
    pub analytic_success_probability: f64,
    /// sin²β built from the two-boson coefficients as printed (qubit-excited sector).
    pub printed_sector_success_probability: f64,
    pub effective_success_probability: f64,
    pub effective_conditional_fidelity: f64,
    /// Joint probability of qubit in |g⟩ and NAMR in |0⟩ at the full-model peak.
    pub full_success_probability: f64,
    pub full_conditional_fidelity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub time: f64,
    pub analytic: f64,
    pub full: f64,
    pub ground_probability: f64,
    pub effective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub protocol: Protocol,
    pub effective_model: &'static str,
    /// |Δ|/G for the degenerate case, |Λ|/max(|λ_a|, |λ_b|) otherwise.
    pub detuning_ratio: f64,
    pub analytic: FidelityPeak,
    /// Conditional (qubit-ground) peak of the full Hamiltonian.
    pub full: FidelityPeak,
    pub full_at_analytic_time: FidelityPeak,
    pub effective: FidelityPeak,
    /// |analytic − full|
    pub error: f64,
    /// |t_full − t_analytic| / t_analytic
    pub peak_time_relative_error: f64,
    /// Transfer time without the factor π, reported alongside `analytic.time`.
    pub transfer_time_printed: f64,
    pub max_leakage: f64,
    pub leakage_flagged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferOptions {
    /// Minimum |Δ|/G (degenerate) or |Λ|/max|λ| (non-degenerate).
    pub detuning_threshold: f64,
    /// Peak search window as multiples of the analytic transfer time.
    pub window: (f64, f64),
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self {
            detuning_threshold: DEFAULT_PERTURBATIVE_RATIO,
            window: (0.5, 1.5),
        }
    }
}

/// Time-dependent weight of a set of basis states along a trajectory.
struct SectorWeight(Vec<OverlapSeries>);

impl SectorWeight {
    fn new(traj: &Trajectory, indices: &[usize]) -> Self {
        Self(traj.amplitudes_of(indices))
    }

    fn at(&self, t: f64) -> f64 {
        self.0.iter().map(|s| s.at(t).norm_sqr()).sum()
    }
}

fn coarse_step(traj: &Trajectory, lo: f64, hi: f64) -> f64 {
    let spread = traj.energy_spread();
    let resolve = if spread > 0.0 {
        2.0 * PI / (16.0 * spread)
    } else {
        f64::INFINITY
    };
    resolve.min((hi - lo) / 64.0)
}

fn ground_sector_indices(cfg: &FockConfig, n_max: usize) -> Vec<usize> {
    (0..cfg.modes_dim())
        .filter(|&k| k / cfg.n_b + k % cfg.n_b <= n_max)
        .collect()
}

fn embed_ground(cfg: &FockConfig, modes: &DVector<C64>) -> DVector<C64> {
    let mut v = DVector::zeros(cfg.dim());
    v.rows_mut(0, cfg.modes_dim()).copy_from(modes);
    v
}

/// Normalized input amplitudes Σ c_n |n_a, 0_b⟩.
pub fn fock_input(n: usize) -> Vec<C64> {
    let mut c = vec![C64::new(0.0, 0.0); n + 1];
    c[n] = C64::new(1.0, 0.0);
    c
}

/// Swap Σ c_n|n_a, 0_b⟩ → W Σ c_n|0_a, n_b⟩ with ω_a = ω_b, qubit starting in |g⟩.
///
/// The analytic prediction uses the Heisenberg solution of the dispersive model;
/// the full model is H2 on `cfg` with fidelity conditioned on the qubit ground
/// sector.
pub fn degenerate_transfer(
    p: &ModelParams,
    input: &[C64],
    cfg: &FockConfig,
    grid: Option<&TimeGrid>,
    opts: &TransferOptions,
) -> Result<TransferReport> {
    p.validate()?;
    let scale = p.omega_a.abs().max(p.omega_b.abs());
    if (p.omega_a - p.omega_b).abs() > 1e-12 * scale {
        return Err(Error::Precondition(format!(
            "degenerate transfer needs omega_a = omega_b, got {} and {}",
            p.omega_a, p.omega_b
        )));
    }
    if input.is_empty() {
        return Err(Error::Precondition("empty input state".into()));
    }
    let eff = EffectiveParams::new(p, LambdaStrategy::MeanDetuning)?;
    eff.require_large_detuning(opts.detuning_threshold)?;
    let n_max = input.len() - 1;
    if n_max >= cfg.n_a.min(cfg.n_b) {
        return Err(Error::CutoffTooSmall {
            cutoff: cfg.n_a.min(cfg.n_b),
            reason: format!("input reaches Fock level {n_max}"),
        });
    }
    let norm = input.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let c: Vec<C64> = input.iter().map(|x| x / norm).collect();

    let t_star = transfer_time(eff.stark_shift, 0);
    let phases = transfer_phase_map(&eff, t_star, n_max);
    let target = embed_ground(cfg, transfer_target(&c, &phases, cfg.n_a, cfg.n_b)?.amplitudes());
    let mut start = DVector::zeros(cfg.dim());
    for (n, cn) in c.iter().enumerate() {
        start[cfg.index(0, n, 0)] = *cn;
    }
    let psi0 = StateVector::new(cfg.layout(), start)?;

    let weights: Vec<f64> = c.iter().map(|x| x.norm_sqr()).collect();
    let analytic = |t: f64| {
        let k = heisenberg_fk_eff(&eff, -t).k.conj();
        let s: C64 = (0..=n_max)
            .map(|n| weights[n] * phases[n].conj() * k.powu(n as u32))
            .sum();
        s.norm_sqr()
    };

    let ground = ground_sector_indices(cfg, n_max);
    let full_traj = Propagator::new(&build_h2(p, cfg)?, cfg.layout())?.trajectory(&psi0)?;
    let eff_traj = Propagator::new(&build_h3(&eff, cfg)?, cfg.layout())?.trajectory(&psi0)?;
    let full_ov = full_traj.overlap_with(&target)?;
    let full_g = SectorWeight::new(&full_traj, &ground);
    let eff_ov = eff_traj.overlap_with(&target)?;
    let eff_g = SectorWeight::new(&eff_traj, &ground);
    let full_f = |t: f64| full_ov.at(t).norm_sqr() / full_g.at(t);
    let eff_f = |t: f64| eff_ov.at(t).norm_sqr() / eff_g.at(t);

    let (lo, hi) = (opts.window.0 * t_star, opts.window.1 * t_star);
    let full_peak = find_peak(full_f, lo, hi, coarse_step(&full_traj, lo, hi));
    let eff_peak = find_peak(eff_f, lo, hi, coarse_step(&eff_traj, lo, hi));
    let analytic_value = analytic(t_star);

    let leak = full_traj.state_at(full_peak.time).top_level_population();
    let series = grid
        .map(|g| {
            g.times()
                .iter()
                .map(|&t| SeriesPoint {
                    time: t,
                    analytic: analytic(t),
                    full: full_f(t),
                    ground_probability: full_g.at(t),
                    effective: eff_f(t),
                })
                .collect()
        })
        .unwrap_or_default();

    Ok(TransferReport {
        protocol: Protocol::Degenerate,
        effective_model: "h3",
        detuning_ratio: eff.detuning_ratio(),
        analytic: FidelityPeak {
            time: t_star,
            fidelity: analytic_value,
            ground_probability: None,
        },
        full: with_ground(full_peak, full_g.at(full_peak.time)),
        full_at_analytic_time: FidelityPeak {
            time: t_star,
            fidelity: full_f(t_star),
            ground_probability: Some(full_g.at(t_star)),
        },
        effective: with_ground(eff_peak, eff_g.at(eff_peak.time)),
        error: (analytic_value - full_peak.value).abs(),
        peak_time_relative_error: (full_peak.time - t_star).abs() / t_star,
        transfer_time_printed: transfer_time_printed(eff.stark_shift, 0),
        max_leakage: leak,
        leakage_flagged: leak > cfg.leakage_tol,
        projection: None,
        series,
    })
}

fn with_ground(p: Peak, g: f64) -> FidelityPeak {
    FidelityPeak {
        time: p.time,
        fidelity: p.value,
        ground_probability: Some(g),
    }
}

/// |0_a, 1_b⟩ → cos-sin superposition of |0_a, 1_b⟩ and |1_a, 0_b⟩, followed by a
/// projection of the NAMR onto |0_b⟩.
///
/// The analytic and effective predictions use the two-boson coefficients of the
/// qubit-ground sector, where the qubit starts.
pub fn nondegenerate_transfer(
    p: &ModelParams,
    cfg: &FockConfig,
    strategy: LambdaStrategy,
    grid: Option<&TimeGrid>,
    opts: &TransferOptions,
) -> Result<TransferReport> {
    p.validate()?;
    if p.omega_a == p.omega_b {
        return Err(Error::Precondition(
            "non-degenerate transfer needs omega_a != omega_b".into(),
        ));
    }
    let eff = EffectiveParams::new(p, strategy)?;
    eff.check_perturbative(opts.detuning_threshold)?;
    let co = eff.so3_for_sector(QubitSector::Ground);
    let gt = co.gamma_tilde();
    if gt == 0.0 {
        return Err(Error::Precondition("two-boson rotation rate vanishes".into()));
    }
    let beta = co.angle();
    let t_a = PI / gt;
    let analytic_value = beta.sin().powi(2);
    let printed_value = eff.so3().angle().sin().powi(2);
    let analytic = |t: f64| crate::dynamics::transfer_probability(beta, gt, t);

    let (n_a, n_b) = (cfg.n_a, cfg.n_b);
    let two_mode = Layout::TwoMode { n_a, n_b };
    let h4 = build_h4prime_sector(&eff, QubitSector::Ground, n_a, n_b)?;
    let eff_prop = Propagator::new(&h4, two_mode)?;
    let eff_start = StateVector::two_mode(n_a, n_b, 0, 1)?;
    let eff_traj = eff_prop.trajectory(&eff_start)?;
    let eff_amp = eff_traj.amplitudes_of(&[n_b]).remove(0);
    let eff_f = |t: f64| eff_amp.at(t).norm_sqr();

    let psi0 = StateVector::tripartite(cfg, 0, 0, 1)?;
    let full_traj = Propagator::new(&build_h2(p, cfg)?, cfg.layout())?.trajectory(&psi0)?;
    let full_amp = full_traj.amplitudes_of(&[cfg.index(0, 1, 0)]).remove(0);
    let full_g = SectorWeight::new(&full_traj, &ground_sector_indices(cfg, 1));
    let full_f = |t: f64| full_amp.at(t).norm_sqr() / full_g.at(t);

    let (lo, hi) = (opts.window.0 * t_a, opts.window.1 * t_a);
    let full_peak = find_peak(full_f, lo, hi, coarse_step(&full_traj, lo, hi));
    let eff_peak = find_peak(eff_f, lo, hi, coarse_step(&eff_traj, lo, hi));

    let one_a = StateVector::two_mode(n_a, n_b, 1, 0)?;
    let (eff_post, eff_prob) =
        projective_measure(&eff_traj.state_at(eff_peak.time), Subsystem::ModeB, 0)?;
    let full_state = full_traj.state_at(full_peak.time);
    let (qubit_post, p_g) = projective_measure(&full_state, Subsystem::Qubit, 0)?;
    let (full_post, p_b) = projective_measure(&qubit_post, Subsystem::ModeB, 0)?;
    let g_one_a = StateVector::tripartite(cfg, 0, 1, 0)?;

    let leak = full_state.top_level_population();
    let series = grid
        .map(|g| {
            g.times()
                .iter()
                .map(|&t| SeriesPoint {
                    time: t,
                    analytic: analytic(t),
                    full: full_f(t),
                    ground_probability: full_g.at(t),
                    effective: eff_f(t),
                })
                .collect()
        })
        .unwrap_or_default();

    Ok(TransferReport {
        protocol: Protocol::NonDegenerate,
        effective_model: "h4prime_ground",
        detuning_ratio: eff.perturbative_ratio(),
        analytic: FidelityPeak {
            time: t_a,
            fidelity: analytic_value,
            ground_probability: None,
        },
        full: with_ground(full_peak, full_g.at(full_peak.time)),
        full_at_analytic_time: FidelityPeak {
            time: t_a,
            fidelity: full_f(t_a),
            ground_probability: Some(full_g.at(t_a)),
        },
        effective: FidelityPeak {
            time: eff_peak.time,
            fidelity: eff_peak.value,
            ground_probability: None,
        },
        error: (analytic_value - full_peak.value).abs(),
        peak_time_relative_error: (full_peak.time - t_a).abs() / t_a,
        transfer_time_printed: 1.0 / gt,
        max_leakage: leak,
        leakage_flagged: leak > cfg.leakage_tol,
        projection: Some(ProjectionSummary {
            analytic_success_probability: analytic_value,
            printed_sector_success_probability: printed_value,
            effective_success_probability: eff_prob,
            effective_conditional_fidelity: eff_post.fidelity(&one_a)?,
            full_success_probability: p_g * p_b,
            full_conditional_fidelity: full_post.fidelity(&g_one_a)?,
        }),
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn degenerate_params(ratio: f64, beta: f64) -> ModelParams {
        let g = 0.05;
        ModelParams::new(1.0, 1.0, 1.0 + ratio * g, g * beta.sin(), g * beta.cos()).unwrap()
    }

    #[test]
    fn vacuum_is_invariant() {
        let cfg = FockConfig::with_cutoffs(4, 4).unwrap();
        let r = degenerate_transfer(
            &degenerate_params(20.0, FRAC_PI_4),
            &fock_input(0),
            &cfg,
            None,
            &TransferOptions::default(),
        )
        .unwrap();
        assert!((r.full.fidelity - 1.0).abs() < 1e-12);
        assert!((r.analytic.fidelity - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_quantum_swap_at_large_detuning() {
        let cfg = FockConfig::with_cutoffs(5, 5).unwrap();
        let r = degenerate_transfer(
            &degenerate_params(20.0, FRAC_PI_4),
            &fock_input(1),
            &cfg,
            None,
            &TransferOptions::default(),
        )
        .unwrap();
        assert!((r.analytic.fidelity - 1.0).abs() < 1e-14);
        assert!(r.full.fidelity >= 0.99, "{r:?}");
        assert!(r.effective.fidelity > 1.0 - 1e-10);
        assert!(r.full.fidelity <= 1.0 + 1e-12);
        assert!(r.peak_time_relative_error < 0.05);
    }

    #[test]
    fn sub_unity_peak_for_sixth_pi() {
        let cfg = FockConfig::with_cutoffs(4, 4).unwrap();
        let r = degenerate_transfer(
            &degenerate_params(20.0, PI / 6.0),
            &fock_input(1),
            &cfg,
            None,
            &TransferOptions::default(),
        )
        .unwrap();
        assert!((r.analytic.fidelity - 0.75).abs() < 1e-14);
        assert!((r.effective.fidelity - 0.75).abs() < 1e-9);
    }

    #[test]
    fn superposition_swap_with_phase_map() {
        let cfg = FockConfig::with_cutoffs(5, 5).unwrap();
        let input = [C64::new(0.6, 0.0), C64::new(0.0, 0.48), C64::new(0.64, 0.0)];
        let r = degenerate_transfer(
            &degenerate_params(20.0, FRAC_PI_4),
            &input,
            &cfg,
            None,
            &TransferOptions::default(),
        )
        .unwrap();
        assert!((r.analytic.fidelity - 1.0).abs() < 1e-13);
        assert!(r.effective.fidelity > 1.0 - 1e-9, "{r:#?}");
    }

    #[test]
    fn degenerate_preconditions() {
        let cfg = FockConfig::with_cutoffs(4, 4).unwrap();
        let mut p = degenerate_params(20.0, FRAC_PI_4);
        p.omega_b = 1.1;
        assert!(matches!(
            degenerate_transfer(&p, &fock_input(1), &cfg, None, &TransferOptions::default()),
            Err(Error::Precondition(_))
        ));
        let p = degenerate_params(3.0, FRAC_PI_4);
        assert!(matches!(
            degenerate_transfer(&p, &fock_input(1), &cfg, None, &TransferOptions::default()),
            Err(Error::LargeDetuningViolated { .. })
        ));
        let p = degenerate_params(20.0, FRAC_PI_4);
        assert!(matches!(
            degenerate_transfer(&p, &fock_input(4), &cfg, None, &TransferOptions::default()),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn nondegenerate_projection_is_exact() {
        let cfg = FockConfig::with_cutoffs(4, 4).unwrap();
        let p = ModelParams::new(1.0, 1.02, 2.0, 0.05, 0.05).unwrap();
        let grid = TimeGrid::uniform(0.0, 100.0, 5).unwrap();
        let r = nondegenerate_transfer(
            &p,
            &cfg,
            LambdaStrategy::MeanDetuning,
            Some(&grid),
            &TransferOptions::default(),
        )
        .unwrap();
        let proj = r.projection.unwrap();
        assert!((proj.effective_conditional_fidelity - 1.0).abs() < 1e-12);
        assert!((r.effective.fidelity - r.analytic.fidelity).abs() < 1e-10);
        assert!((proj.full_conditional_fidelity - 1.0).abs() < 1e-12);
        assert!(r.error < 0.02, "{r:?}");
        assert_eq!(r.series.len(), 5);
    }

    #[test]
    fn nondegenerate_rejects_degenerate_modes() {
        let cfg = FockConfig::with_cutoffs(3, 3).unwrap();
        let p = ModelParams::new(1.0, 1.0, 2.0, 0.05, 0.05).unwrap();
        assert!(nondegenerate_transfer(&p, &cfg, LambdaStrategy::AsWritten, None, &TransferOptions::default()).is_err());
    }
}
