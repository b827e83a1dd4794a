//! Projective measurements on one subsystem.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Layout, StateVector};
use crate::error::{Error, Result};

/// Probabilities at or below this are treated as an impossible outcome.
pub const ZERO_PROBABILITY: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    Qubit,
    /// TLR
    ModeA,
    /// NAMR
    ModeB,
}

impl Subsystem {
    fn label(&self) -> &'static str {
        match self {
            Subsystem::Qubit => "qubit",
            Subsystem::ModeA => "mode a",
            Subsystem::ModeB => "mode b",
        }
    }
}

/// Digit of basis index `k` that belongs to `sys`, with that digit's range.
fn digit(layout: Layout, sys: Subsystem, k: usize) -> Result<(usize, usize)> {
    let unsupported = || {
        Err(Error::Precondition(format!(
            "{} is not part of layout {layout:?}",
            sys.label()
        )))
    };
    match (layout, sys) {
        (Layout::Tripartite { n_a, n_b }, Subsystem::Qubit) => Ok((k / (n_a * n_b), 2)),
        (Layout::Tripartite { n_a, n_b }, Subsystem::ModeA) => Ok(((k / n_b) % n_a, n_a)),
        (Layout::Tripartite { n_b, .. }, Subsystem::ModeB) => Ok((k % n_b, n_b)),
        (Layout::TwoMode { n_a, n_b }, Subsystem::ModeA) => Ok((k / n_b, n_a)),
        (Layout::TwoMode { n_b, .. }, Subsystem::ModeB) => Ok((k % n_b, n_b)),
        (Layout::QubitMode { n }, Subsystem::Qubit) => Ok((k / n, 2)),
        (Layout::QubitMode { n }, Subsystem::ModeB) => Ok((k % n, n)),
        (Layout::Mode { n }, Subsystem::ModeA | Subsystem::ModeB) => Ok((k, n)),
        _ => unsupported(),
    }
}

/// Born probability of `outcome` on `sys` and the renormalized post-measurement
/// state, which keeps the layout of `psi`.
pub fn projective_measure(psi: &StateVector, sys: Subsystem, outcome: usize) -> Result<(StateVector, f64)> {
    let layout = psi.layout();
    let (_, range) = digit(layout, sys, 0)?;
    if outcome >= range {
        return Err(Error::OutcomeOutOfRange {
            subsystem: sys.label(),
            outcome,
            cutoff: range,
        });
    }
    let mut amps = DVector::<C64>::zeros(psi.dim());
    for (k, c) in psi.amplitudes().iter().enumerate() {
        if digit(layout, sys, k)?.0 == outcome {
            amps[k] = *c;
        }
    }
    let prob = amps.norm_squared();
    if prob <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbability {
            subsystem: sys.label(),
            outcome,
        });
    }
    Ok((StateVector::normalized(layout, amps)?, prob))
}

/// Born probabilities of every outcome on `sys`.
pub fn outcome_distribution(psi: &StateVector, sys: Subsystem) -> Result<Vec<f64>> {
    let (_, range) = digit(psi.layout(), sys, 0)?;
    let mut p = vec![0.0; range];
    for (k, c) in psi.amplitudes().iter().enumerate() {
        p[digit(psi.layout(), sys, k)?.0] += c.norm_sqr();
    }
    Ok(p)
}
