//! Effective-versus-full comparison across detuning ratios.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::search::{fit_power_law, spearman, PowerLawFit};
use super::transfer::{
    degenerate_transfer, fock_input, nondegenerate_transfer, TransferOptions, TransferReport,
};
use crate::algebra::FockConfig;
use crate::error::{Error, Result};
use crate::model::{EffectiveParams, LambdaStrategy, ModelParams, QubitSector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Degenerate,
    NonDegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub kind: SweepKind,
    /// Fock number moved in the degenerate sweep.
    pub n: usize,
    pub strategy: LambdaStrategy,
    pub window: (f64, f64),
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            kind: SweepKind::Degenerate,
            n: 1,
            strategy: LambdaStrategy::MeanDetuning,
            window: TransferOptions::default().window,
        }
    }
}

/// Smallest detuning ratio a sweep accepts.
pub const MIN_SWEEP_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingFactor {
    pub from: f64,
    pub to: f64,
    /// error(from) / error(to)
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub kind: SweepKind,
    pub strategy: LambdaStrategy,
    pub ratios: Vec<f64>,
    pub errors: Vec<f64>,
    pub peak_time_errors: Vec<f64>,
    pub fit: Option<PowerLawFit>,
    pub peak_time_fit: Option<PowerLawFit>,
    /// Rank correlation of error against ratio.
    pub spearman: f64,
    pub peak_time_spearman: f64,
    pub doubling: Vec<DoublingFactor>,
    pub reports: Vec<TransferReport>,
}

/// Parameters of the sweep point at detuning ratio `ratio`.
///
/// Degenerate: ω_b = ω_a and ε = ω_a + ratio·G, so β and G stay fixed.
/// Non-degenerate: |Λ| = ratio·max(|λ_a|, |λ_b|); ω_b is chosen so that the
/// qubit-ground rotation angle equals that of `base`, and ε follows from the
/// strategy's inverse.
pub fn sweep_point(base: &ModelParams, ratio: f64, opts: &SweepOptions) -> Result<ModelParams> {
    match opts.kind {
        SweepKind::Degenerate => ModelParams::new(
            base.omega_a,
            base.omega_a,
            base.omega_a + ratio * base.coupling(),
            base.lambda_a,
            base.lambda_b,
        ),
        SweepKind::NonDegenerate => {
            let base_eff = EffectiveParams::new(base, opts.strategy)?;
            let angle = base_eff.so3_for_sector(QubitSector::Ground).angle();
            let (la, lb) = (base.lambda_a, base.lambda_b);
            let lambda = ratio * la.abs().max(lb.abs()) * base_eff.lambda.signum();
            let gamma_2 = -2.0 * la * lb / lambda;
            let omega_b = if gamma_2 == 0.0 {
                base.omega_b
            } else {
                let gamma_3 = if angle.cos().abs() < 1e-12 {
                    0.0
                } else {
                    gamma_2 / angle.tan()
                };
                base.omega_a - (la * la - lb * lb) / lambda - gamma_3
            };
            let epsilon = opts
                .strategy
                .epsilon_for(lambda, base.omega_a, omega_b, base.coupling())?;
            ModelParams::new(base.omega_a, omega_b, epsilon, la, lb)
        }
    }
}

/// Peak-fidelity error between the full and effective descriptions for each
/// ratio, with a log–log power-law fit and rank correlations.
pub fn effective_vs_full_sweep(
    base: &ModelParams,
    ratios: &[f64],
    cfg: &FockConfig,
    opts: &SweepOptions,
) -> Result<ValidationReport> {
    if ratios.is_empty() {
        return Err(Error::Precondition("empty ratio list".into()));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r >= MIN_SWEEP_RATIO)) {
        return Err(Error::Precondition(format!(
            "detuning ratios must be at least {MIN_SWEEP_RATIO}, got {r}"
        )));
    }
    if ratios.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("ratios must be strictly increasing".into()));
    }
    let topts = TransferOptions {
        detuning_threshold: MIN_SWEEP_RATIO,
        window: opts.window,
    };
    let reports: Vec<TransferReport> = ratios
        .par_iter()
        .map(|&r| {
            let p = sweep_point(base, r, opts)?;
            match opts.kind {
                SweepKind::Degenerate => degenerate_transfer(&p, &fock_input(opts.n), cfg, None, &topts),
                SweepKind::NonDegenerate => nondegenerate_transfer(&p, cfg, opts.strategy, None, &topts),
            }
        })
        .collect::<Result<_>>()?;

    let errors: Vec<f64> = reports.iter().map(|r| r.error).collect();
    let peak_time_errors: Vec<f64> = reports.iter().map(|r| r.peak_time_relative_error).collect();
    let mut doubling = Vec::new();
    for i in 0..ratios.len() {
        for j in i + 1..ratios.len() {
            if (ratios[j] - 2.0 * ratios[i]).abs() <= 1e-12 * ratios[j] {
                doubling.push(DoublingFactor {
                    from: ratios[i],
                    to: ratios[j],
                    factor: errors[i] / errors[j],
                });
            }
        }
    }
    Ok(ValidationReport {
        kind: opts.kind,
        strategy: opts.strategy,
        ratios: ratios.to_vec(),
        fit: fit_power_law(ratios, &errors),
        peak_time_fit: fit_power_law(ratios, &peak_time_errors),
        spearman: spearman(ratios, &errors),
        peak_time_spearman: spearman(ratios, &peak_time_errors),
        errors,
        peak_time_errors,
        doubling,
        reports,
    })
}
