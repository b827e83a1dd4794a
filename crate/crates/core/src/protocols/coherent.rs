//! Coherent-state preparation by a classical drive and the driven
//! Jaynes–Cummings ground state.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::algebra::{coherent_state_vector, occupation_moments, Layout, StateVector, I};
use crate::dynamics::{driven_amplitude, evolve, Propagator, TimeGrid};
use crate::error::{Error, Result};
use crate::model::{build_hc, driven_oscillator, Drive, EffectiveParams, ModelParams};

/// Coherent amplitudes with |z|² above this enter the Fano-factor check.
pub const FANO_MIN_OCCUPATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexValue {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexValue> for C64 {
    fn from(z: ComplexValue) -> Self {
        C64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherentReport {
    /// "b" for the NAMR driven through the qubit, "a" for the mirrored TLR output.
    pub mode: &'static str,
    /// True when the protocol has no closed form of its own and mirrors the NAMR case.
    pub extrapolated: bool,
    pub frequency: f64,
    pub coupling: f64,
    pub drive: Drive,
    pub cutoff: usize,
    pub times: Vec<f64>,
    pub z: Vec<ComplexValue>,
    pub fidelity: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Variance/mean where |z|² exceeds [`FANO_MIN_OCCUPATION`].
    pub fano: Vec<Option<f64>>,
    pub norms: Vec<f64>,
    pub leakage: Vec<f64>,
    pub leakage_flagged: bool,
    pub max_infidelity: f64,
    pub max_fano_deviation: f64,
    pub max_norm_error: f64,
    pub max_energy_drift: f64,
    /// |z(2π/Ω)|
    pub revival_amplitude: f64,
    /// |⟨0|ψ(2π/Ω)⟩|²
    pub revival_vacuum_fidelity: f64,
}

#[allow(clippy::too_many_arguments)]
fn prepare_driven(
    mode: &'static str,
    extrapolated: bool,
    frequency: f64,
    coupling: f64,
    drive: &Drive,
    n: usize,
    grid: &TimeGrid,
    leakage_tol: f64,
) -> Result<CoherentReport> {
    let xi = drive.xi();
    let z_max = C64::new((coupling * drive.mu / frequency).abs(), 0.0);
    // the largest amplitude along the orbit must fit the cutoff
    coherent_state_vector(z_max, n, leakage_tol)?;

    let h = driven_oscillator(frequency, coupling, drive, n)?;
    let layout = Layout::Mode { n };
    let vacuum = StateVector::basis(layout, 0)?;
    let run = evolve(&h, &vacuum, grid, leakage_tol)?;

    let mut rep = CoherentReport {
        mode,
        extrapolated,
        frequency,
        coupling,
        drive: *drive,
        cutoff: n,
        times: run.times.clone(),
        z: Vec::with_capacity(grid.len()),
        fidelity: Vec::with_capacity(grid.len()),
        mean: Vec::with_capacity(grid.len()),
        variance: Vec::with_capacity(grid.len()),
        fano: Vec::with_capacity(grid.len()),
        norms: run.norms.clone(),
        leakage: run.leakage.clone(),
        leakage_flagged: run.leakage_flagged,
        max_infidelity: 0.0,
        max_fano_deviation: 0.0,
        max_norm_error: run.max_norm_error(),
        max_energy_drift: run.max_energy_drift(),
        revival_amplitude: 0.0,
        revival_vacuum_fidelity: 0.0,
    };
    for (psi, &t) in run.states.iter().zip(&run.times) {
        let z = driven_amplitude(frequency, coupling, xi, t)?;
        let want = coherent_state_vector(z, n, leakage_tol)?;
        let f = want.state.fidelity(psi)?;
        let (mean, var) = occupation_moments(psi);
        let fano = (z.norm_sqr() > FANO_MIN_OCCUPATION).then(|| var / mean);
        rep.max_infidelity = rep.max_infidelity.max(1.0 - f);
        if let Some(q) = fano {
            rep.max_fano_deviation = rep.max_fano_deviation.max((q - 1.0).abs());
        }
        rep.z.push(z.into());
        rep.fidelity.push(f);
        rep.mean.push(mean);
        rep.variance.push(var);
        rep.fano.push(fano);
    }
    let t_rev = 2.0 * PI / frequency.abs();
    rep.revival_amplitude = driven_amplitude(frequency, coupling, xi, t_rev)?.norm();
    let back = Propagator::new(&h, layout)?.evolve_state(&vacuum, t_rev)?;
    rep.revival_vacuum_fidelity = back.fidelity(&vacuum)?;
    Ok(rep)
}

/// Drive the NAMR from |0⟩ with H_e and compare with the coherent state |z(t)⟩.
pub fn prepare_coherent(
    eff: &EffectiveParams,
    drive: &Drive,
    n_b: usize,
    grid: &TimeGrid,
    leakage_tol: f64,
) -> Result<CoherentReport> {
    prepare_driven("b", false, eff.shifted_omega_b, eff.gamma_2, drive, n_b, grid, leakage_tol)
}

/// Mirror of [`prepare_coherent`] with the roles of the two resonators exchanged:
/// the TLR at Ω_a = ω_a + λ_a²/Λ is driven by a classical NAMR oscillation.
pub fn prepare_coherent_reverse(
    eff: &EffectiveParams,
    drive: &Drive,
    n_a: usize,
    grid: &TimeGrid,
    leakage_tol: f64,
) -> Result<CoherentReport> {
    let p = &eff.model;
    let frequency = p.omega_a + p.lambda_a * p.lambda_a / eff.lambda;
    prepare_driven("a", true, frequency, eff.gamma_2, drive, n_a, grid, leakage_tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub name: &'static str,
    pub value: ComplexValue,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JcGroundReport {
    pub xi: ComplexValue,
    pub cutoff: usize,
    pub ground_energy: f64,
    pub qubit_ground_weight: f64,
    pub qubit_excited_weight: f64,
    /// Displacement maximizing |⟨α, g|ψ_0⟩|².
    pub alpha_star: ComplexValue,
    pub overlap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// iλ_aξ, −iλ_aξ/λ_b and the second-order estimate iλ_aλ_bξ/((ε − ω_b)(ω_b − λ_b²/(ε − ω_b))).
    pub candidates: Vec<Candidate>,
    /// Candidates within 1% of α* (relative to the larger magnitude).
    pub matches: Vec<&'static str>,
}

/// Unnormalized truncated coherent amplitudes e^{−|α|²/2} αᵐ/√m!.
fn coherent_amps(alpha: C64, n: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    v[0] = c;
    for m in 1..n {
        c = c * alpha / (m as f64).sqrt();
        v[m] = c;
    }
    v
}

/// Ground state of H_c and the best coherent-product approximation |α⟩⊗|g⟩.
///
/// α* is the fixed point of α = ⟨α|b|φ⟩/⟨α|φ⟩ with φ = ⟨g|ψ_0⟩, the stationarity
/// condition of |⟨α|φ⟩|². It is compared with iλ_aξ, −iλ_aξ/λ_b and the
/// perturbative iλ_aλ_bξ/(ε ω̃_b), ω̃_b = ω_b − λ_b²/(ε − ω_b).
pub fn driven_jc_ground_state(p: &ModelParams, xi: C64, n_b: usize, leakage_tol: f64) -> Result<JcGroundReport> {
    let h = build_hc(p, xi, n_b)?;
    let eig = h.entries().clone().symmetric_eigen();
    let k0 = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("non-empty spectrum");
    let gs = eig.eigenvectors.column(k0).into_owned();
    let phi = gs.rows(0, n_b).into_owned();
    let w_g = phi.norm_squared();
    let w_e = gs.rows(n_b, n_b).norm_squared();
    if w_g < 1e-12 {
        return Err(Error::Precondition("ground state has no weight on |g>".into()));
    }
    let b_phi = DVector::from_fn(n_b, |m, _| {
        if m + 1 < n_b {
            phi[m + 1] * ((m + 1) as f64).sqrt()
        } else {
            C64::new(0.0, 0.0)
        }
    });

    let mut alpha = phi.dotc(&b_phi) / w_g;
    let mut omega = 1.0;
    let mut last_step = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=2000 {
        iterations = it;
        let c = coherent_amps(alpha, n_b);
        let den = c.dotc(&phi);
        if den.norm() == 0.0 {
            break;
        }
        let target = c.dotc(&b_phi) / den;
        let step = (target - alpha).norm();
        if step <= 1e-14 * (1.0 + alpha.norm()) {
            alpha = target;
            converged = true;
            break;
        }
        if step > last_step {
            omega = (omega * 0.5_f64).max(1e-3);
        }
        last_step = step;
        alpha += (target - alpha) * omega;
    }

    let c = coherent_amps(alpha, n_b);
    let kept = c.norm_squared();
    if 1.0 - kept > leakage_tol {
        return Err(Error::CutoffTooSmall {
            cutoff: n_b,
            reason: format!("|alpha*| = {:.3} leaves weight {:.2e} above the cutoff", alpha.norm(), 1.0 - kept),
        });
    }
    let overlap = c.dotc(&phi).norm_sqr() / kept;

    let mut candidates = vec![Candidate {
        name: "i_lambda_a_xi",
        value: (I * p.lambda_a * xi).into(),
        distance: 0.0,
    }];
    if p.lambda_b != 0.0 {
        candidates.push(Candidate {
            name: "minus_i_lambda_a_xi_over_lambda_b",
            value: (-I * p.lambda_a * xi / p.lambda_b).into(),
            distance: 0.0,
        });
    }
    let d = p.epsilon - p.omega_b;
    if d.abs() > 1e-9 * p.epsilon {
        let om = p.omega_b - p.lambda_b * p.lambda_b / d;
        if om != 0.0 {
            candidates.push(Candidate {
                name: "second_order",
                value: (I * p.lambda_a * p.lambda_b * xi / (p.epsilon * om)).into(),
                distance: 0.0,
            });
        }
    }
    let mut matches = Vec::new();
    for cand in &mut candidates {
        let v: C64 = cand.value.into();
        cand.distance = (v - alpha).norm();
        let scale = v.norm().max(alpha.norm());
        if cand.distance <= 1e-2 * scale || (scale == 0.0 && cand.distance == 0.0) {
            matches.push(cand.name);
        }
    }

    Ok(JcGroundReport {
        xi: xi.into(),
        cutoff: n_b,
        ground_energy: eig.eigenvalues[k0],
        qubit_ground_weight: w_g,
        qubit_excited_weight: w_e,
        alpha_star: alpha.into(),
        overlap,
        iterations,
        converged,
        candidates,
        matches,
    })
}
