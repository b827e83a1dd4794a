//! Strict flat JSON run configuration.

use std::f64::consts::PI;
use std::path::Path;

use qtrans_core::model::{DeviceParams, LambdaStrategy, ModelParams};
use qtrans_core::protocols::SweepKind;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Every key is optional except `schema_version`; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,

    pub e_j: Option<f64>,
    pub c_j: Option<f64>,
    pub c_g: Option<f64>,
    pub c_0: Option<f64>,
    pub v_g: Option<f64>,
    pub v: Option<f64>,
    pub d: Option<f64>,
    pub m: Option<f64>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub length: Option<f64>,
    pub l: Option<f64>,
    pub c: Option<f64>,
    pub k: Option<u32>,
    pub phi_c: Option<f64>,
    pub phi_0: Option<f64>,
    pub n_g: Option<f64>,

    pub omega_a: Option<f64>,
    pub omega_b: Option<f64>,
    pub epsilon: Option<f64>,
    pub lambda_a: Option<f64>,
    pub lambda_b: Option<f64>,
    pub theta: Option<f64>,
    pub lambda_strategy: Option<LambdaStrategy>,

    pub n_a: Option<usize>,
    pub n_b: Option<usize>,
    pub leakage_tol: Option<f64>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub n_points: Option<usize>,

    pub betas: Option<Vec<f64>>,
    pub delta: Option<f64>,

    pub n: Option<usize>,
    pub ratios: Option<Vec<f64>>,
    pub sweep_kind: Option<SweepKind>,
    pub mu: Option<f64>,
    pub phi: Option<f64>,
}

/// Where the model parameters come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Device { device: DeviceParams, n_g: Option<f64> },
    Model(ModelParams),
}

const DEVICE_ONLY: [&str; 17] = [
    "e_j", "c_j", "c_g", "c_0", "v_g", "v", "d", "m", "s", "r", "length", "l", "c", "k", "phi_c",
    "phi_0", "n_g",
];

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok((Self::from_slice(&bytes)?, bytes))
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_slice(bytes).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    fn device_fields_present(&self) -> Vec<&'static str> {
        let present = [
            self.e_j.is_some(),
            self.c_j.is_some(),
            self.c_g.is_some(),
            self.c_0.is_some(),
            self.v_g.is_some(),
            self.v.is_some(),
            self.d.is_some(),
            self.m.is_some(),
            self.s.is_some(),
            self.r.is_some(),
            self.length.is_some(),
            self.l.is_some(),
            self.c.is_some(),
            self.k.is_some(),
            self.phi_c.is_some(),
            self.phi_0.is_some(),
            self.n_g.is_some(),
        ];
        DEVICE_ONLY
            .iter()
            .zip(present)
            .filter(|(_, p)| *p)
            .map(|(n, _)| *n)
            .collect()
    }

    pub fn strategy(&self) -> LambdaStrategy {
        self.lambda_strategy.unwrap_or_default()
    }

    pub fn param_source(&self) -> Result<ParamSource, CliError> {
        let missing = |name: &str| CliError::Config(format!("missing field `{name}`"));
        if !self.device_fields_present().is_empty() {
            for (name, v) in [
                ("omega_a", self.omega_a),
                ("epsilon", self.epsilon),
                ("lambda_a", self.lambda_a),
                ("lambda_b", self.lambda_b),
                ("theta", self.theta),
            ] {
                if v.is_some() {
                    return Err(CliError::Config(format!(
                        "`{name}` is derived from device fields and cannot be given alongside them"
                    )));
                }
            }
            let req = |name: &'static str, v: Option<f64>| v.ok_or_else(|| missing(name));
            let device = DeviceParams {
                e_j: req("e_j", self.e_j)?,
                c_j: req("c_j", self.c_j)?,
                c_g: req("c_g", self.c_g)?,
                c_0: req("c_0", self.c_0)?,
                v_g: req("v_g", self.v_g)?,
                v: req("v", self.v)?,
                d: req("d", self.d)?,
                m: req("m", self.m)?,
                omega_b: req("omega_b", self.omega_b)?,
                s: req("s", self.s)?,
                r: req("r", self.r)?,
                length: req("length", self.length)?,
                l: req("l", self.l)?,
                c: req("c", self.c)?,
                k: self.k.ok_or_else(|| missing("k"))?,
                phi_c: req("phi_c", self.phi_c)?,
                phi_0: req("phi_0", self.phi_0)?,
            };
            return Ok(ParamSource::Device {
                device,
                n_g: self.n_g,
            });
        }
        let req = |name: &'static str, v: Option<f64>| v.ok_or_else(|| missing(name));
        let mut p = ModelParams::new(
            req("omega_a", self.omega_a)?,
            req("omega_b", self.omega_b)?,
            req("epsilon", self.epsilon)?,
            req("lambda_a", self.lambda_a)?,
            req("lambda_b", self.lambda_b)?,
        )?;
        p.theta = self.theta.unwrap_or(0.0);
        Ok(ParamSource::Model(p))
    }

    pub fn leakage_tol(&self) -> f64 {
        self.leakage_tol.unwrap_or(qtrans_core::algebra::FockConfig::DEFAULT_LEAKAGE_TOL)
    }

    pub fn fig2_betas(&self) -> Vec<f64> {
        self.betas
            .clone()
            .unwrap_or_else(|| vec![PI / 4.0, PI / 6.0, PI / 12.0])
    }
}
