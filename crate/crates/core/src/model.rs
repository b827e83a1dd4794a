//! Device-to-model parameter mapping and every Hamiltonian of the transducer.
//!
//! Model-level quantities are angular frequencies with ħ = 1. Device
//! quantities are SI and converted exactly once, in [`derive_model_params`].

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    annihilation_op, commutator, embed2, embed_qubit_mode, number_op, sigma_plus, sigma_z, FockConfig, JordanSchwinger, ModeOperators, OperatorMatrix, I,
};
use crate::error::{Error, Result};

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const VACUUM_PERMEABILITY: f64 = 4.0 * PI * 1e-7;

/// Ratio |Λ| / max(|λ_a|, |λ_b|) required before second-order elimination is trusted.
pub const DEFAULT_PERTURBATIVE_RATIO: f64 = 10.0;

/// Raw device description. SI units except `e_j`, which is an angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub e_j: f64,
    pub c_j: f64,
    pub c_g: f64,
    pub c_0: f64,
    pub v_g: f64,
    pub v: f64,
    /// NAMR–CPB distance.
    pub d: f64,
    /// NAMR mass.
    pub m: f64,
    pub omega_b: f64,
    /// SQUID loop area.
    pub s: f64,
    /// TLR–SQUID distance.
    pub r: f64,
    /// TLR length.
    pub length: f64,
    /// Inductance per unit length.
    pub l: f64,
    /// Capacitance per unit length.
    pub c: f64,
    /// TLR mode index.
    pub k: u32,
    pub phi_c: f64,
    pub phi_0: f64,
}

impl DeviceParams {
    pub fn validate(&self) -> Result<Vec<String>> {
        let positive: [(&'static str, f64); 11] = [
            ("c_j", self.c_j),
            ("c_g", self.c_g),
            ("c_0", self.c_0),
            ("d", self.d),
            ("m", self.m),
            ("omega_b", self.omega_b),
            ("s", self.s),
            ("r", self.r),
            ("length", self.length),
            ("l", self.l),
            ("c", self.c),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {x}")));
            }
        }
        for (name, x) in [
            ("e_j", self.e_j),
            ("v_g", self.v_g),
            ("v", self.v),
            ("phi_c", self.phi_c),
        ] {
            if !x.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if !(self.phi_0 > 0.0 && self.phi_0.is_finite()) {
            return Err(Error::param("phi_0", "must be positive"));
        }
        if self.k == 0 {
            return Err(Error::param("k", "mode index starts at 1"));
        }
        let mut warnings = Vec::new();
        let ratio = (self.c_0 + self.c_g) / self.c_j;
        if ratio > 0.1 {
            warnings.push(format!(
                "(c_0 + c_g) / c_j = {ratio:.3} exceeds 0.1; small-junction approximation is questionable"
            ));
        }
        Ok(warnings)
    }

    pub fn total_capacitance(&self) -> f64 {
        self.c_j + self.c_g + self.c_0
    }

    pub fn gate_charge(&self) -> f64 {
        (self.c_g * self.v_g + self.c_0 * self.v) / (2.0 * ELEMENTARY_CHARGE)
    }

    /// Geometry factor S μ₀ L / (2π r) of the quantized flux.
    pub fn flux_geometry_factor(&self) -> f64 {
        self.s * VACUUM_PERMEABILITY * self.length / (2.0 * PI * self.r)
    }

    pub fn phase_velocity(&self) -> f64 {
        1.0 / (self.l * self.c).sqrt()
    }

    /// Flux amplitude φ_k of TLR mode `k`, evaluated literally in SI numbers.
    pub fn flux_amplitude(&self) -> f64 {
        let kpi = self.k as f64 * PI;
        (2.0 * self.c / (kpi.powi(3) * self.phase_velocity())).sqrt() * self.flux_geometry_factor()
    }

    /// Frequency of the half-wave TLR mode `k`.
    pub fn tlr_mode_frequency(&self) -> f64 {
        self.k as f64 * PI * self.phase_velocity() / self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub epsilon: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    #[serde(default)]
    pub theta: f64,
}

impl ModelParams {
    pub fn new(omega_a: f64, omega_b: f64, epsilon: f64, lambda_a: f64, lambda_b: f64) -> Result<Self> {
        let p = Self {
            omega_a,
            omega_b,
            epsilon,
            lambda_a,
            lambda_b,
            theta: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("lambda_a", self.lambda_a),
            ("lambda_b", self.lambda_b),
            ("theta", self.theta),
        ] {
            if !x.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// G = √(λ_a² + λ_b²)
    pub fn coupling(&self) -> f64 {
        self.lambda_a.hypot(self.lambda_b)
    }

    /// Δ = ε − ω_a
    pub fn detuning(&self) -> f64 {
        self.epsilon - self.omega_a
    }
}

/// How the single detuning Λ of the non-degenerate elimination is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaStrategy {
    /// Λ = ε + (λ_a² + λ_b²)/Λ − ω_a − ω_b, root nearest ε − ω_a − ω_b.
    #[default]
    AsWritten,
    /// Λ = ε − (ω_a + ω_b)/2.
    MeanDetuning,
    /// Reserved.
    PerMode,
}

impl LambdaStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            LambdaStrategy::AsWritten => "as_written",
            LambdaStrategy::MeanDetuning => "mean_detuning",
            LambdaStrategy::PerMode => "per_mode",
        }
    }

    pub fn resolve(&self, p: &ModelParams) -> Result<f64> {
        let lambda = match self {
            LambdaStrategy::AsWritten => {
                let c = p.epsilon - p.omega_a - p.omega_b;
                let g2 = p.lambda_a.powi(2) + p.lambda_b.powi(2);
                // Λ² − cΛ − G² = 0
                let disc = c * c + 4.0 * g2;
                if disc < 0.0 || !disc.is_finite() {
                    return Err(Error::NoLambdaRoot {
                        strategy: self.name(),
                    });
                }
                let root = disc.sqrt();
                // stable form of the root with the sign of c
                if c >= 0.0 {
                    0.5 * (c + root)
                } else {
                    0.5 * (c - root)
                }
            }
            LambdaStrategy::MeanDetuning => p.epsilon - 0.5 * (p.omega_a + p.omega_b),
            LambdaStrategy::PerMode => {
                return Err(Error::UnsupportedStrategy {
                    strategy: self.name(),
                })
            }
        };
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::ZeroLambda {
                strategy: self.name(),
            });
        }
        Ok(lambda)
    }

    /// Qubit gap ε that makes this strategy return `lambda`.
    pub fn epsilon_for(&self, lambda: f64, omega_a: f64, omega_b: f64, g: f64) -> Result<f64> {
        match self {
            LambdaStrategy::AsWritten => Ok(lambda - g * g / lambda + omega_a + omega_b),
            LambdaStrategy::MeanDetuning => Ok(lambda + 0.5 * (omega_a + omega_b)),
            LambdaStrategy::PerMode => Err(Error::UnsupportedStrategy {
                strategy: self.name(),
            }),
        }
    }
}

/// Qubit sector used when eliminating the qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitSector {
    /// σ_z = −1
    Ground,
    /// σ_z = +1
    Excited,
}

impl QubitSector {
    pub fn sign(&self) -> f64 {
        match self {
            QubitSector::Ground => -1.0,
            QubitSector::Excited => 1.0,
        }
    }
}

/// Coefficients of Γ₀N̂ + Γ₂Ĵ_y + Γ₃Ĵ_z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct So3Coefficients {
    pub gamma_0: f64,
    pub gamma_2: f64,
    pub gamma_3: f64,
}

impl So3Coefficients {
    pub fn gamma_tilde(&self) -> f64 {
        self.gamma_2.hypot(self.gamma_3)
    }

    /// Rotation angle with tan β = Γ₂/Γ₃, cos β = Γ₃/Γ̃.
    pub fn angle(&self) -> f64 {
        self.gamma_2.atan2(self.gamma_3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub model: ModelParams,
    pub strategy: LambdaStrategy,
    /// G
    pub coupling: f64,
    /// Δ = ε − ω_a
    pub detuning: f64,
    /// δ = G²/Δ, signed like Δ; NaN when Δ = 0.
    pub stark_shift: f64,
    /// β = atan2(λ_a, λ_b), so that G·A = λ_b b + iλ_a a.
    pub beta: f64,
    /// Θ = ω_a − δ/2
    pub carrier: f64,
    /// Λ
    pub lambda: f64,
    /// Ω = ε + G²/Λ
    pub shifted_gap: f64,
    pub gamma_0: f64,
    pub gamma_2: f64,
    pub gamma_3: f64,
    pub gamma_tilde: f64,
    /// Ω_b = ω_b + λ_b²/Λ
    pub shifted_omega_b: f64,
}

impl EffectiveParams {
    pub fn new(p: &ModelParams, strategy: LambdaStrategy) -> Result<Self> {
        p.validate()?;
        let lambda = strategy.resolve(p)?;
        Ok(Self::with_lambda(p, strategy, lambda))
    }

    fn with_lambda(p: &ModelParams, strategy: LambdaStrategy, lambda: f64) -> Self {
        let g = p.coupling();
        let detuning = p.detuning();
        let stark_shift = if detuning == 0.0 {
            f64::NAN
        } else {
            g * g / detuning
        };
        let so3 = so3_for(p, lambda, QubitSector::Excited);
        Self {
            model: *p,
            strategy,
            coupling: g,
            detuning,
            stark_shift,
            beta: p.lambda_a.atan2(p.lambda_b),
            carrier: p.omega_a - 0.5 * stark_shift,
            lambda,
            shifted_gap: p.epsilon + g * g / lambda,
            gamma_0: so3.gamma_0,
            gamma_2: so3.gamma_2,
            gamma_3: so3.gamma_3,
            gamma_tilde: so3.gamma_tilde(),
            shifted_omega_b: p.omega_b + p.lambda_b * p.lambda_b / lambda,
        }
    }

    /// Γ coefficients as they appear in the two-boson Hamiltonian (σ_z = +1 sector).
    pub fn so3(&self) -> So3Coefficients {
        So3Coefficients {
            gamma_0: self.gamma_0,
            gamma_2: self.gamma_2,
            gamma_3: self.gamma_3,
        }
    }

    /// Γ coefficients of H4 restricted to the given qubit sector.
    pub fn so3_for_sector(&self, sector: QubitSector) -> So3Coefficients {
        so3_for(&self.model, self.lambda, sector)
    }

    /// |Λ| / max(|λ_a|, |λ_b|)
    pub fn perturbative_ratio(&self) -> f64 {
        self.lambda.abs() / self.model.lambda_a.abs().max(self.model.lambda_b.abs())
    }

    pub fn check_perturbative(&self, threshold: f64) -> Result<()> {
        let ratio = self.perturbative_ratio();
        if ratio < threshold {
            return Err(Error::NonPerturbative { ratio, threshold });
        }
        Ok(())
    }

    /// min(|λ_a|, |λ_b|) / |Λ|: large values mean the printed inequality
    /// "λ_a, λ_b ≫ Λ" holds. Reported only, never enforced.
    pub fn printed_condition_ratio(&self) -> f64 {
        self.model.lambda_a.abs().min(self.model.lambda_b.abs()) / self.lambda.abs()
    }

    /// |Δ| / G
    pub fn detuning_ratio(&self) -> f64 {
        self.detuning.abs() / self.coupling
    }

    pub fn require_large_detuning(&self, threshold: f64) -> Result<()> {
        let bound = threshold * self.coupling;
        if !(self.detuning.abs() > bound) {
            return Err(Error::LargeDetuningViolated {
                detuning: self.detuning.abs(),
                threshold,
                bound,
            });
        }
        Ok(())
    }
}

fn so3_for(p: &ModelParams, lambda: f64, sector: QubitSector) -> So3Coefficients {
    let l = lambda * sector.sign();
    let (la2, lb2) = (p.lambda_a * p.lambda_a, p.lambda_b * p.lambda_b);
    So3Coefficients {
        gamma_0: 0.5 * (p.omega_a + p.omega_b) + (la2 + lb2) / (2.0 * l),
        gamma_2: 2.0 * p.lambda_a * p.lambda_b / l,
        gamma_3: p.omega_a - p.omega_b + (la2 - lb2) / l,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantity {
    pub name: &'static str,
    pub value: f64,
    pub formula: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParams {
    pub model: ModelParams,
    pub effective: EffectiveParams,
    pub quantities: Vec<DerivedQuantity>,
    pub warnings: Vec<String>,
}

/// Map device parameters to (ω_a, ω_b, ε, λ_a, λ_b, θ) and the effective set.
///
/// `n_g` overrides the gate charge computed from the gate and NAMR voltages.
/// The flux bias is evaluated at the classical operating point Φ_x = Φ_c.
pub fn derive_model_params(
    dev: &DeviceParams,
    n_g: Option<f64>,
    strategy: LambdaStrategy,
) -> Result<DerivedParams> {
    let mut warnings = dev.validate()?;
    let n_g = n_g.unwrap_or_else(|| dev.gate_charge());
    if !n_g.is_finite() {
        return Err(Error::param("n_g", "must be finite"));
    }

    let c_t = dev.total_capacitance();
    let e_c = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * c_t) / HBAR;
    let omega = 4.0 * e_c * (2.0 * n_g - 1.0);
    let x_zpf = (HBAR / (2.0 * dev.m * dev.omega_b)).sqrt();
    let lambda_namr = ELEMENTARY_CHARGE * dev.c_0 * dev.v * x_zpf / (c_t * dev.d * HBAR);

    let nu = dev.phase_velocity();
    let omega_a = dev.tlr_mode_frequency();
    let geometry = dev.flux_geometry_factor();
    let phi_a = dev.flux_amplitude();

    let mut cos_x = (PI * dev.phi_c / dev.phi_0).cos();
    if cos_x.abs() < 1e-15 {
        cos_x = 0.0;
    }
    let josephson = dev.e_j * cos_x;
    let epsilon = omega.hypot(josephson);
    if !(epsilon > 1e-12 * dev.e_j.abs().max(omega.abs())) {
        return Err(Error::DegenerateQubit);
    }
    let theta = if omega == 0.0 {
        0.5 * PI * josephson.signum()
    } else {
        (josephson / omega).atan()
    };
    let lambda_prime =
        -(dev.e_j * PI * phi_a / (2.0 * dev.phi_0)) * (PI * dev.phi_c / (2.0 * dev.phi_0)).sin();

    let model = ModelParams {
        omega_a,
        omega_b: dev.omega_b,
        epsilon,
        lambda_a: lambda_prime * theta.cos(),
        lambda_b: lambda_namr * theta.sin(),
        theta,
    };
    let effective = EffectiveParams::new(&model, strategy)?;
    if effective.perturbative_ratio() < DEFAULT_PERTURBATIVE_RATIO {
        warnings.push(format!(
            "|Lambda| / max|lambda| = {:.3} is below {DEFAULT_PERTURBATIVE_RATIO}; second-order elimination unreliable",
            effective.perturbative_ratio()
        ));
    }

    let q = |name, value, formula| DerivedQuantity {
        name,
        value,
        formula,
    };
    let quantities = vec![
        q("c_t", c_t, "C_T = C_J + C_g + C_0"),
        q("n_g", n_g, "n_g = (C_g V_g + C_0 V) / (2e)"),
        q("e_c", e_c, "E_C = e^2 / (2 C_T hbar)"),
        q("omega", omega, "omega = 4 E_C (2 n_g - 1)"),
        q("lambda", lambda_namr, "lambda = e C_0 V / (C_T d sqrt(2 m omega_b)), hbar restored"),
        q("nu", nu, "nu = 1 / sqrt(l c)"),
        q("omega_a", omega_a, "omega_a = k pi nu / L"),
        q("flux_geometry", geometry, "S mu_0 L / (2 pi r)"),
        q("phi_a", phi_a, "phi_k = sqrt(2 c / ((k pi)^3 nu)) * S mu_0 L / (2 pi r)"),
        q("lambda_prime", lambda_prime, "lambda' = -(E_J pi phi_a / (2 Phi_0)) sin(pi Phi_c / (2 Phi_0))"),
        q("theta", theta, "theta = atan((E_J / omega) cos(pi Phi_x / Phi_0))"),
        q("epsilon", epsilon, "epsilon = sqrt(omega^2 + E_J^2 cos^2(pi Phi_x / Phi_0))"),
        q("lambda_a", model.lambda_a, "lambda_a = lambda' cos(theta)"),
        q("lambda_b", model.lambda_b, "lambda_b = lambda sin(theta)"),
        q("g", effective.coupling, "G = sqrt(lambda_a^2 + lambda_b^2)"),
        q("detuning", effective.detuning, "Delta = epsilon - omega_a"),
        q("stark_shift", effective.stark_shift, "delta = G^2 / Delta"),
        q("beta", effective.beta, "beta = atan(lambda_a / lambda_b)"),
        q("carrier", effective.carrier, "Theta = omega_a - delta / 2"),
        q("lambda_detuning", effective.lambda, "Lambda (strategy dependent)"),
        q("shifted_gap", effective.shifted_gap, "Omega = epsilon + (lambda_a^2 + lambda_b^2) / Lambda"),
        q("gamma_0", effective.gamma_0, "Gamma_0 = (omega_a + omega_b)/2 + (lambda_a^2 + lambda_b^2)/(2 Lambda)"),
        q("gamma_2", effective.gamma_2, "Gamma_2 = 2 lambda_a lambda_b / Lambda"),
        q("gamma_3", effective.gamma_3, "Gamma_3 = omega_a - omega_b + (lambda_a^2 - lambda_b^2) / Lambda"),
        q("gamma_tilde", effective.gamma_tilde, "Gamma~ = sqrt(Gamma_2^2 + Gamma_3^2)"),
        q("shifted_omega_b", effective.shifted_omega_b, "Omega_b = omega_b + lambda_b^2 / Lambda"),
    ];

    Ok(DerivedParams {
        model,
        effective,
        quantities,
        warnings,
    })
}

/// H0 = ω_a a†a + ω_b b†b + (ε/2) σ_z
pub fn build_h0(p: &ModelParams, cfg: &FockConfig) -> Result<OperatorMatrix> {
    let ops = ModeOperators::new(cfg)?;
    Ok(bare(&ops, p))
}

fn bare(ops: &ModeOperators, p: &ModelParams) -> OperatorMatrix {
    &(&ops.num_a.scale_re(p.omega_a) + &ops.num_b.scale_re(p.omega_b))
        + &ops.sigma_z.scale_re(0.5 * p.epsilon)
}

/// H2 = H0 + λ_b(bσ_+ + σ_−b†) + iλ_a(aσ_+ − a†σ_−)
pub fn build_h2(p: &ModelParams, cfg: &FockConfig) -> Result<OperatorMatrix> {
    p.validate()?;
    let ops = ModeOperators::new(cfg)?;
    let b_part = &(&ops.b * &ops.sigma_plus) + &(&ops.sigma_minus * &ops.b.adjoint());
    let a_part = &(&ops.a * &ops.sigma_plus) - &(&ops.a.adjoint() * &ops.sigma_minus);
    let h = &(&bare(&ops, p) + &b_part.scale_re(p.lambda_b)) + &a_part.scale(I * p.lambda_a);
    Ok(h.hermitian_part())
}

/// Normal modes A = b cos β + i a sin β and B = b sin β − i a cos β on the
/// tripartite space.
pub fn normal_modes(eff: &EffectiveParams, cfg: &FockConfig) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let ops = ModeOperators::new(cfg)?;
    Ok(normal_modes_from(&ops, eff.beta))
}

fn normal_modes_from(ops: &ModeOperators, beta: f64) -> (OperatorMatrix, OperatorMatrix) {
    let (s, c) = beta.sin_cos();
    let a_mode = &ops.b.scale_re(c) + &ops.a.scale(I * s);
    let b_mode = &ops.b.scale_re(s) - &ops.a.scale(I * c);
    (a_mode, b_mode)
}

/// Dispersive Hamiltonian of the degenerate case, as produced by the second-order
/// Fröhlich–Nakajima expansion of H2:
///
/// H3 = ω_a(A†A + B†B) + (ε/2 + δ/2)σ_z + δ A†A σ_z + δ/2
///
/// With the qubit in |g⟩ the A mode sits δ below the B mode, consistent with the
/// Heisenberg solution F_k, K and its carrier Θ = ω_a − δ/2.
pub fn build_h3(eff: &EffectiveParams, cfg: &FockConfig) -> Result<OperatorMatrix> {
    eff.require_large_detuning(1.0)?;
    let ops = ModeOperators::new(cfg)?;
    let (a_mode, b_mode) = normal_modes_from(&ops, eff.beta);
    let na = &a_mode.adjoint() * &a_mode;
    let nb = &b_mode.adjoint() * &b_mode;
    let d = eff.stark_shift;
    let h = &(&(&na + &nb).scale_re(eff.model.omega_a)
        + &ops.sigma_z.scale_re(0.5 * eff.model.epsilon + 0.5 * d))
        + &(&(&na * &ops.sigma_z).scale_re(d) + &ops.identity.scale_re(0.5 * d));
    Ok(h.hermitian_part())
}

/// H3 with the sign convention as it is usually printed:
/// ω_a(A†A + B†B) + (ε/2 − δ)σ_z − δA†Aσ_z.
///
/// Its Stark-shift terms carry the opposite sign to [`build_h3`]; occupation
/// dynamics are identical, phases are not.
pub fn build_h3_printed(eff: &EffectiveParams, cfg: &FockConfig) -> Result<OperatorMatrix> {
    eff.require_large_detuning(1.0)?;
    let ops = ModeOperators::new(cfg)?;
    let (a_mode, b_mode) = normal_modes_from(&ops, eff.beta);
    let na = &a_mode.adjoint() * &a_mode;
    let nb = &b_mode.adjoint() * &b_mode;
    let d = eff.stark_shift;
    let h = &(&(&na + &nb).scale_re(eff.model.omega_a)
        + &ops.sigma_z.scale_re(0.5 * eff.model.epsilon - d))
        - &(&na * &ops.sigma_z).scale_re(d);
    Ok(h.hermitian_part())
}

/// H4 = ω_a a†a + ω_b b†b + (Ω/2)σ_z + (λ_a²/Λ a†a + λ_b²/Λ b†b)σ_z
///      + i(λ_aλ_b/Λ)(ab† − a†b)σ_z
pub fn build_h4(eff: &EffectiveParams, cfg: &FockConfig) -> Result<OperatorMatrix> {
    let ops = ModeOperators::new(cfg)?;
    let p = &eff.model;
    let l = eff.lambda;
    let free = &ops.num_a.scale_re(p.omega_a) + &ops.num_b.scale_re(p.omega_b);
    let stark = &ops.num_a.scale_re(p.lambda_a * p.lambda_a / l)
        + &ops.num_b.scale_re(p.lambda_b * p.lambda_b / l);
    let exchange = (&(&ops.a * &ops.b.adjoint()) - &(&ops.a.adjoint() * &ops.b))
        .scale(I * (p.lambda_a * p.lambda_b / l));
    let h = &(&free + &ops.sigma_z.scale_re(0.5 * eff.shifted_gap))
        + &(&(&stark + &exchange) * &ops.sigma_z);
    Ok(h.hermitian_part())
}

/// Γ₀N̂ + Γ₂Ĵ_y + Γ₃Ĵ_z on the two-boson space.
pub fn build_so3_hamiltonian(coeffs: &So3Coefficients, js: &JordanSchwinger) -> OperatorMatrix {
    let h = &(&js.n.scale_re(coeffs.gamma_0) + &js.jy.scale_re(coeffs.gamma_2))
        + &js.jz.scale_re(coeffs.gamma_3);
    h.hermitian_part()
}

/// H'4 with the printed coefficients (equal to H4 on the σ_z = +1 sector, minus Ω/2).
pub fn build_h4prime(eff: &EffectiveParams, n_a: usize, n_b: usize) -> Result<OperatorMatrix> {
    let js = crate::algebra::jordan_schwinger(n_a, n_b)?;
    Ok(build_so3_hamiltonian(&eff.so3(), &js))
}

/// H'4 for the qubit frozen in `sector`.
pub fn build_h4prime_sector(
    eff: &EffectiveParams,
    sector: QubitSector,
    n_a: usize,
    n_b: usize,
) -> Result<OperatorMatrix> {
    let js = crate::algebra::jordan_schwinger(n_a, n_b)?;
    Ok(build_so3_hamiltonian(&eff.so3_for_sector(sector), &js))
}

/// Classical drive ξ = μ e^{−iφ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub mu: f64,
    pub phi: f64,
}

impl Drive {
    pub fn xi(&self) -> C64 {
        C64::from_polar(self.mu, -self.phi)
    }

    pub fn from_xi(xi: C64) -> Self {
        Self {
            mu: xi.norm(),
            phi: -xi.arg(),
        }
    }
}

/// Ω b†b + i(Γ/2)μ(e^{−iφ} b† − b e^{iφ}) on a single mode.
pub fn driven_oscillator(frequency: f64, gamma: f64, drive: &Drive, n: usize) -> Result<OperatorMatrix> {
    let b = annihilation_op(n)?;
    let xi = drive.xi();
    let drive_term =
        (&b.adjoint().scale(xi) - &b.scale(xi.conj())).scale(I * (0.5 * gamma));
    Ok((&number_op(n)?.scale_re(frequency) + &drive_term).hermitian_part())
}

/// Semiclassical NAMR Hamiltonian H_e = Ω_b b†b + i(Γ₂/2)μ(e^{−iφ}b† − be^{iφ}).
pub fn build_he(eff: &EffectiveParams, drive: &Drive, n_b: usize) -> Result<OperatorMatrix> {
    driven_oscillator(eff.shifted_omega_b, eff.gamma_2, drive, n_b)
}

/// True when the peak coherent amplitude |Γ|μ/|Ω| exceeds √n / 3.
pub fn drive_leakage_risk(gamma: f64, mu: f64, frequency: f64, n: usize) -> bool {
    (gamma * mu / frequency).abs() > (n as f64).sqrt() / 3.0
}

/// Driven Jaynes–Cummings Hamiltonian on qubit ⊗ b:
/// H_c = (ε/2)σ_z + ω_b b†b + [(λ_b b + iλ_a ξ)σ_+ + h.c.]
pub fn build_hc(p: &ModelParams, xi: C64, n_b: usize) -> Result<OperatorMatrix> {
    p.validate()?;
    let b = embed_qubit_mode(None, Some(&annihilation_op(n_b)?), n_b)?;
    let num = embed_qubit_mode(None, Some(&number_op(n_b)?), n_b)?;
    let sz = embed_qubit_mode(Some(&sigma_z()), None, n_b)?;
    let sp = embed_qubit_mode(Some(&sigma_plus()), None, n_b)?;
    let id = OperatorMatrix::identity(2 * n_b);
    let field = &b.scale_re(p.lambda_b) + &id.scale(I * p.lambda_a * xi);
    let coupling = &field * &sp;
    let h = &(&sz.scale_re(0.5 * p.epsilon) + &num.scale_re(p.omega_b))
        + &(&coupling + &coupling.adjoint());
    Ok(h.hermitian_part())
}

/// S = G(Aσ_+ − A†σ_−)/Δ, anti-Hermitian.
pub fn fn_generator_s(eff: &EffectiveParams, cfg: &FockConfig) -> Result<OperatorMatrix> {
    if eff.detuning == 0.0 {
        return Err(Error::LargeDetuningViolated {
            detuning: 0.0,
            threshold: 0.0,
            bound: 0.0,
        });
    }
    let ops = ModeOperators::new(cfg)?;
    let (a_mode, _) = normal_modes_from(&ops, eff.beta);
    let s = &(&a_mode * &ops.sigma_plus) - &(&a_mode.adjoint() * &ops.sigma_minus);
    Ok(s.scale_re(eff.coupling / eff.detuning))
}

/// W = −i(λ_a/Λ)(aσ_+ + a†σ_−) − (λ_b/Λ)(bσ_+ − b†σ_−), anti-Hermitian.
pub fn fn_generator_w(eff: &EffectiveParams, cfg: &FockConfig) -> Result<OperatorMatrix> {
    generator_w_with_lambda(&eff.model, eff.lambda, cfg)
}

pub fn generator_w_with_lambda(p: &ModelParams, lambda: f64, cfg: &FockConfig) -> Result<OperatorMatrix> {
    if lambda == 0.0 {
        return Err(Error::ZeroLambda { strategy: "explicit" });
    }
    let ops = ModeOperators::new(cfg)?;
    let a_part = &(&ops.a * &ops.sigma_plus) + &(&ops.a.adjoint() * &ops.sigma_minus);
    let b_part = &(&ops.b * &ops.sigma_plus) - &(&ops.b.adjoint() * &ops.sigma_minus);
    Ok(&a_part.scale(-I * (p.lambda_a / lambda)) - &b_part.scale_re(p.lambda_b / lambda))
}

/// Second-order expansion of e^{−X} H e^{X}: H + [H, X] + ½[[H, X], X].
pub fn conjugate_second_order(h: &OperatorMatrix, x: &OperatorMatrix) -> Result<OperatorMatrix> {
    let c1 = commutator(h, x)?;
    let c2 = commutator(&c1, x)?;
    Ok(&(h + &c1) + &c2.scale_re(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// ‖H2 − H0 + [H0, W]‖ on the interior subspace (largest singular value).
    pub absolute: f64,
    /// ‖H2 − H0‖ on the same subspace.
    pub reference: f64,
    pub relative: f64,
    /// Λ values that cancel the a- and b-mode couplings individually (ε − ω_a, ε − ω_b).
    pub cancelling_lambda_a: f64,
    pub cancelling_lambda_b: f64,
}

/// Norm of H2 − H0 + [H0, W] on the interior subspace (top Fock level of each
/// mode excluded).
pub fn first_order_residual(
    h2: &OperatorMatrix,
    h0: &OperatorMatrix,
    w: &OperatorMatrix,
    p: &ModelParams,
    cfg: &FockConfig,
) -> Result<ResidualReport> {
    for m in [h0, w] {
        if m.dim() != h2.dim() {
            return Err(Error::DimensionMismatch {
                expected: h2.dim(),
                found: m.dim(),
            });
        }
    }
    let idx = cfg.interior_indices(1);
    let coupling = h2 - h0;
    let res = &coupling + &commutator(h0, w)?;
    let absolute = crate::algebra::spectral_norm(&res.restrict(&idx));
    let reference = crate::algebra::spectral_norm(&coupling.restrict(&idx));
    Ok(ResidualReport {
        absolute,
        reference,
        relative: if reference > 0.0 { absolute / reference } else { 0.0 },
        cancelling_lambda_a: p.epsilon - p.omega_a,
        cancelling_lambda_b: p.epsilon - p.omega_b,
    })
}

/// Two-boson operator restricted from a tripartite one on the given qubit sector.
pub fn sector_block(op: &OperatorMatrix, sector: QubitSector, cfg: &FockConfig) -> Result<OperatorMatrix> {
    if op.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            found: op.dim(),
        });
    }
    let q = match sector {
        QubitSector::Ground => 0,
        QubitSector::Excited => 1,
    };
    let idx: Vec<usize> = (0..cfg.modes_dim()).map(|k| q * cfg.modes_dim() + k).collect();
    OperatorMatrix::new(op.restrict(&idx))
}

/// Two-boson operators a and b (a ⊗ I, I ⊗ b).
pub fn two_mode_ladders(n_a: usize, n_b: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    Ok((
        embed2(Some(&annihilation_op(n_a)?), None, n_a, n_b)?,
        embed2(None, Some(&annihilation_op(n_b)?), n_a, n_b)?,
    ))
}
