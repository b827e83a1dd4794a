//! Exact propagation on truncated spaces and closed-form time dependence.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    jordan_schwinger, JordanSchwinger, Layout, OperatorMatrix, StateVector, I, ONE,
};
use crate::error::{Error, Result};
use crate::model::{EffectiveParams, So3Coefficients};

/// Eigencomponents with |⟨v_j|ψ⟩| below this are dropped from a [`Trajectory`].
pub const PRUNE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// t_i = t_start + (t_end − t_start)·i/(n − 1)
    pub fn uniform(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if !(t_end > t_start) {
            return Err(Error::InvalidGrid(format!(
                "t_end ({t_end}) must exceed t_start ({t_start})"
            )));
        }
        if n_points < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n_points}")));
        }
        let span = t_end - t_start;
        let last = (n_points - 1) as f64;
        let times = (0..n_points)
            .map(|i| {
                if i == n_points - 1 {
                    t_end
                } else {
                    t_start + span * (i as f64 / last)
                }
            })
            .collect();
        Ok(Self { times })
    }

    /// Arbitrary strictly increasing sample times.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("times must be finite".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("times must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }
}

/// Spectral decomposition H = V diag(E) V†, reused for every time.
#[derive(Debug, Clone)]
pub struct Propagator {
    layout: Layout,
    energies: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl Propagator {
    pub fn new(h: &OperatorMatrix, layout: Layout) -> Result<Self> {
        if h.dim() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: h.dim(),
            });
        }
        if !h.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: h.hermitian_deviation(),
            });
        }
        let eig = h.entries().clone().symmetric_eigen();
        Ok(Self {
            layout,
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    /// e^{−iHt} as a dense matrix.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (j, &e) in self.energies.iter().enumerate() {
            let phase = C64::from_polar(1.0, -e * t);
            for x in scaled.column_mut(j).iter_mut() {
                *x *= phase;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn evolve_state(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        Ok(self.trajectory_with_tol(psi, 0.0)?.state_at(t))
    }

    pub fn trajectory(&self, psi: &StateVector) -> Result<Trajectory> {
        self.trajectory_with_tol(psi, PRUNE_TOL)
    }

    fn trajectory_with_tol(&self, psi: &StateVector, tol: f64) -> Result<Trajectory> {
        if psi.layout() != self.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                found: psi.dim(),
            });
        }
        let coeffs = self.vectors.adjoint() * psi.amplitudes();
        let keep: Vec<usize> = (0..coeffs.len())
            .filter(|&j| tol == 0.0 || coeffs[j].norm() > tol)
            .collect();
        let vectors = DMatrix::from_fn(self.vectors.nrows(), keep.len(), |i, k| {
            self.vectors[(i, keep[k])]
        });
        Ok(Trajectory {
            layout: self.layout,
            energies: keep.iter().map(|&j| self.energies[j]).collect(),
            coeffs: keep.iter().map(|&j| coeffs[j]).collect(),
            vectors,
        })
    }
}

/// ψ(t) = Σ_j c_j e^{−iE_j t} v_j over the populated eigenvectors of one initial state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    layout: Layout,
    energies: Vec<f64>,
    coeffs: Vec<C64>,
    vectors: DMatrix<C64>,
}

impl Trajectory {
    fn phased(&self, t: f64) -> DVector<C64> {
        DVector::from_iterator(
            self.coeffs.len(),
            self.coeffs
                .iter()
                .zip(&self.energies)
                .map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
        )
    }

    pub fn state_at(&self, t: f64) -> StateVector {
        StateVector::from_unitary_image(self.layout, &self.vectors * self.phased(t))
    }

    /// Populated eigen-energies.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// max E − min E over the populated eigenvectors.
    pub fn energy_spread(&self) -> f64 {
        let lo = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }

    /// Precomputed ⟨target|ψ(t)⟩ as a sum of phases.
    pub fn overlap_with(&self, target: &DVector<C64>) -> Result<OverlapSeries> {
        if target.len() != self.layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dim(),
                found: target.len(),
            });
        }
        let proj = self.vectors.adjoint() * target;
        Ok(OverlapSeries {
            energies: self.energies.clone(),
            weights: proj
                .iter()
                .zip(&self.coeffs)
                .map(|(p, c)| p.conj() * c)
                .collect(),
        })
    }

    /// Precomputed ⟨k|ψ(t)⟩ for several basis indices at once.
    pub fn amplitudes_of(&self, indices: &[usize]) -> Vec<OverlapSeries> {
        indices
            .iter()
            .map(|&k| OverlapSeries {
                energies: self.energies.clone(),
                weights: self
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| self.vectors[(k, j)] * c)
                    .collect(),
            })
            .collect()
    }
}

/// f(t) = Σ_j w_j e^{−iE_j t}
#[derive(Debug, Clone)]
pub struct OverlapSeries {
    energies: Vec<f64>,
    weights: Vec<C64>,
}

impl OverlapSeries {
    pub fn at(&self, t: f64) -> C64 {
        self.weights
            .iter()
            .zip(&self.energies)
            .map(|(w, &e)| w * C64::from_polar(1.0, -e * t))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub norms: Vec<f64>,
    /// ⟨ψ(t)|H|ψ(t)⟩ evaluated directly with H.
    pub energies: Vec<f64>,
    /// Largest top-Fock-level population over the boson modes.
    pub leakage: Vec<f64>,
    pub leakage_tol: f64,
    pub leakage_flagged: bool,
}

impl EvolutionResult {
    pub fn max_norm_error(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, n| m.max((n - 1.0).abs()))
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().fold(0.0, |m, e| m.max((e - e0).abs()))
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().copied().fold(0.0, f64::max)
    }
}

/// ψ(t) = V e^{−iEt} V†ψ0 on every grid time.
pub fn evolve(
    h: &OperatorMatrix,
    psi0: &StateVector,
    grid: &TimeGrid,
    leakage_tol: f64,
) -> Result<EvolutionResult> {
    let prop = Propagator::new(h, psi0.layout())?;
    evolve_with(&prop, h, psi0, grid, leakage_tol)
}

pub fn evolve_with(
    prop: &Propagator,
    h: &OperatorMatrix,
    psi0: &StateVector,
    grid: &TimeGrid,
    leakage_tol: f64,
) -> Result<EvolutionResult> {
    let traj = prop.trajectory_with_tol(psi0, 0.0)?;
    let n = grid.len();
    let mut out = EvolutionResult {
        times: grid.times().to_vec(),
        states: Vec::with_capacity(n),
        norms: Vec::with_capacity(n),
        energies: Vec::with_capacity(n),
        leakage: Vec::with_capacity(n),
        leakage_tol,
        leakage_flagged: false,
    };
    for &t in grid.times() {
        let psi = traj.state_at(t);
        out.norms.push(psi.norm());
        out.energies.push(h.expectation(&psi)?.re);
        let leak = psi.top_level_population();
        out.leakage.push(leak);
        if leak > leakage_tol {
            out.leakage_flagged = true;
        }
        out.states.push(psi);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkTriple {
    pub f1: C64,
    pub f2: C64,
    pub k: C64,
}

/// F_k(t) = [cos(δt/2) + i(−1)^k cos 2β sin(δt/2)] e^{−iΘt}, K(t) = sin 2β sin(δt/2) e^{−iΘt}
pub fn heisenberg_fk(beta: f64, delta: f64, theta: f64, t: f64) -> FkTriple {
    let (s, c) = (0.5 * delta * t).sin_cos();
    let (s2b, c2b) = (2.0 * beta).sin_cos();
    let carrier = C64::from_polar(1.0, -theta * t);
    FkTriple {
        f1: C64::new(c, -c2b * s) * carrier,
        f2: C64::new(c, c2b * s) * carrier,
        k: carrier * (s2b * s),
    }
}

pub fn heisenberg_fk_eff(eff: &EffectiveParams, t: f64) -> FkTriple {
    heisenberg_fk(eff.beta, eff.stark_shift, eff.carrier, t)
}

/// n-th perfect-transfer time (2m+1)π/|δ|.
pub fn transfer_time(delta: f64, m: u32) -> f64 {
    (2 * m + 1) as f64 * std::f64::consts::PI / delta.abs()
}

/// The same time without the factor π, (2m+1)/|δ|.
pub fn transfer_time_printed(delta: f64, m: u32) -> f64 {
    (2 * m + 1) as f64 / delta.abs()
}

fn factorials_sqrt(n: usize) -> Vec<f64> {
    let mut out = vec![1.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] * (k as f64).sqrt();
    }
    out
}

/// (1/√n!)[a†F_1*(−t) + b†K*(−t)]ⁿ|0⟩ on the two-boson space, expanded binomially.
pub fn case1_state(n: usize, t: f64, eff: &EffectiveParams, n_a: usize, n_b: usize) -> Result<StateVector> {
    let fk = heisenberg_fk_eff(eff, -t);
    two_mode_binomial(n, fk.f1.conj(), fk.k.conj(), n_a, n_b)
}

/// (1/√n!)(u a† + v b†)ⁿ|0⟩ = Σ_j √C(n,j) u^j v^{n−j} |j, n−j⟩
pub fn two_mode_binomial(n: usize, u: C64, v: C64, n_a: usize, n_b: usize) -> Result<StateVector> {
    if n >= n_a.min(n_b) {
        return Err(Error::CutoffTooSmall {
            cutoff: n_a.min(n_b),
            reason: format!("need more than {n} levels per mode"),
        });
    }
    let sf = factorials_sqrt(n);
    let mut amps = DVector::zeros(n_a * n_b);
    for j in 0..=n {
        let binom_sqrt = sf[n] / (sf[j] * sf[n - j]);
        amps[j * n_b + (n - j)] = u.powu(j as u32) * v.powu((n - j) as u32) * binom_sqrt;
    }
    StateVector::normalized(Layout::TwoMode { n_a, n_b }, amps)
}

/// Phase (K*(−t))ⁿ acquired by |n_a, 0_b⟩ → |0_a, n_b⟩ for n = 0..n_max.
pub fn transfer_phase_map(eff: &EffectiveParams, t: f64, n_max: usize) -> Vec<C64> {
    let k = heisenberg_fk_eff(eff, -t).k.conj();
    let unit = if k.norm() > 0.0 { k / k.norm() } else { ONE };
    (0..=n_max).map(|n| unit.powu(n as u32)).collect()
}

/// Target of the degenerate transfer: W Σ c_n |0_a, n_b⟩ given Σ c_n |n_a, 0_b⟩.
pub fn transfer_target(coeffs: &[C64], phases: &[C64], n_a: usize, n_b: usize) -> Result<StateVector> {
    if coeffs.len() > n_b || coeffs.len() > phases.len() {
        return Err(Error::CutoffTooSmall {
            cutoff: n_b,
            reason: format!("{} input amplitudes", coeffs.len()),
        });
    }
    let mut amps = DVector::zeros(n_a * n_b);
    for (n, c) in coeffs.iter().enumerate() {
        amps[n] = c * phases[n];
    }
    StateVector::normalized(Layout::TwoMode { n_a, n_b }, amps)
}

/// P(t) = sin²β sin²(Γ̃t/2)
pub fn transfer_probability(beta: f64, gamma_tilde: f64, t: f64) -> f64 {
    let (c01, c10) = nondegenerate_amplitudes(beta, gamma_tilde, t);
    debug_assert!((c01.norm_sqr() + c10.norm_sqr() - 1.0).abs() < 1e-12);
    c10.norm_sqr()
}

/// (c_01, c_10) with c_01 = cos(Γ̃t/2) + i cos β sin(Γ̃t/2), c_10 = −sin β sin(Γ̃t/2).
/// The common factor e^{−iΓ₀t} is omitted.
pub fn nondegenerate_amplitudes(beta: f64, gamma_tilde: f64, t: f64) -> (C64, C64) {
    let (s, c) = (0.5 * gamma_tilde * t).sin_cos();
    (C64::new(c, beta.cos() * s), C64::new(-beta.sin() * s, 0.0))
}

/// z(t) = −i(Γξ/2Ω)(1 − e^{−iΩt}) for a driven oscillator of frequency Ω.
pub fn driven_amplitude(frequency: f64, gamma: f64, xi: C64, t: f64) -> Result<C64> {
    if frequency == 0.0 {
        return Err(Error::param("frequency", "driven oscillator frequency must be nonzero"));
    }
    Ok(-I * (gamma * xi / (2.0 * frequency)) * (ONE - C64::from_polar(1.0, -frequency * t)))
}

/// Coherent amplitude of the NAMR under H_e.
pub fn coherent_amplitude(eff: &EffectiveParams, xi: C64, t: f64) -> Result<C64> {
    driven_amplitude(eff.shifted_omega_b, eff.gamma_2, xi, t)
}

fn exp_diag(m: &DMatrix<C64>, diag: impl Iterator<Item = C64>) -> DMatrix<C64> {
    let d: Vec<C64> = diag.collect();
    let mut out = m.clone();
    for (j, p) in d.iter().enumerate() {
        for x in out.column_mut(j).iter_mut() {
            *x *= p;
        }
    }
    out
}

/// Û(t) = e^{−iΓ₀N̂t} e^{iβĴ_x} e^{−iΓ̃Ĵ_z t} e^{−iβĴ_x}, tan β = Γ₂/Γ₃.
///
/// The rotation e^{iβĴ_x} is exponentiated directly. On a truncated space the
/// result equals e^{−iH'₄t} only on complete excitation sectors.
pub fn so3_propagator(coeffs: &So3Coefficients, n_a: usize, n_b: usize, t: f64) -> Result<OperatorMatrix> {
    let js = jordan_schwinger(n_a, n_b)?;
    Ok(so3_propagator_with(coeffs, &js, t))
}

pub fn so3_propagator_with(coeffs: &So3Coefficients, js: &JordanSchwinger, t: f64) -> OperatorMatrix {
    let dim = js.n.dim();
    let n_diag: Vec<f64> = (0..dim).map(|k| js.n.entries()[(k, k)].re).collect();
    let z_diag: Vec<f64> = (0..dim).map(|k| js.jz.entries()[(k, k)].re).collect();
    let g = coeffs.gamma_tilde();
    let number_phase = n_diag
        .iter()
        .map(|&n| C64::from_polar(1.0, -coeffs.gamma_0 * n * t));
    if g == 0.0 {
        let d: Vec<C64> = number_phase.collect();
        return OperatorMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(d)))
            .expect("square by construction");
    }
    let rot = (js.jx.entries() * (I * coeffs.angle())).exp();
    let rotated = exp_diag(&rot, z_diag.iter().map(|&z| C64::from_polar(1.0, -g * z * t)));
    let inner = rotated * rot.adjoint();
    let mut u = inner;
    for (i, p) in number_phase.enumerate() {
        for x in u.row_mut(i).iter_mut() {
            *x *= p;
        }
    }
    OperatorMatrix::new(u).expect("square by construction")
}

/// Two-mode indices of the excitation sectors N ≤ min(n_a, n_b) − 1, which the
/// truncation leaves complete.
pub fn complete_sector_indices(n_a: usize, n_b: usize) -> Vec<usize> {
    crate::algebra::two_mode_bounded_indices(n_a, n_b, n_a.min(n_b) - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{annihilation_op, number_op, FockConfig, ModeOperators};
    use crate::model::{build_h3, build_h4prime, LambdaStrategy, ModelParams};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn mode_state(n: usize, k: usize) -> StateVector {
        StateVector::basis(Layout::Mode { n }, k).unwrap()
    }

    #[test]
    fn uniform_grid_endpoints() {
        let g = TimeGrid::uniform(0.0, 2.0 * PI, 401).unwrap();
        assert_eq!(g.len(), 401);
        assert_eq!(g.times()[200], PI);
        assert_eq!(g.t_end(), 2.0 * PI);
        assert!(TimeGrid::uniform(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::uniform(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::from_times(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn zero_hamiltonian_is_static() {
        let psi = StateVector::normalized(
            Layout::Mode { n: 3 },
            DVector::from_vec(vec![ONE, I, ONE]),
        )
        .unwrap();
        let h = OperatorMatrix::zeros(3);
        let r = evolve(&h, &psi, &TimeGrid::uniform(0.0, 5.0, 7).unwrap(), 1.0).unwrap();
        for s in &r.states {
            assert!((s.amplitudes() - psi.amplitudes()).norm() < 1e-15);
        }
    }

    #[test]
    fn number_state_acquires_global_phase() {
        let n = 4;
        let h = number_op(n).unwrap().scale_re(1.3);
        let psi = mode_state(n, 1);
        let r = evolve(&h, &psi, &TimeGrid::uniform(0.0, 10.0, 11).unwrap(), 1.0).unwrap();
        for (s, &t) in r.states.iter().zip(&r.times) {
            let want = C64::from_polar(1.0, -1.3 * t);
            assert!((s.amplitudes()[1] - want).norm() < 1e-13);
            assert!((s.fidelity(&psi).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = annihilation_op(3).unwrap();
        let psi = mode_state(3, 0);
        let err = evolve(&a, &psi, &TimeGrid::uniform(0.0, 1.0, 2).unwrap(), 1.0).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn leakage_is_flagged() {
        let n = 4;
        let a = annihilation_op(n).unwrap();
        let h = (&a + &a.adjoint()).scale_re(1.0);
        let r = evolve(&h, &mode_state(n, 0), &TimeGrid::uniform(0.0, 3.0, 10).unwrap(), 1e-6).unwrap();
        assert!(r.leakage_flagged);
        assert!(r.max_norm_error() < 1e-12);
        assert!(r.max_energy_drift() < 1e-12);
    }

    #[test]
    fn unitary_matches_state_evolution() {
        let n = 5;
        let a = annihilation_op(n).unwrap();
        let h = &number_op(n).unwrap() + &(&a + &a.adjoint()).scale_re(0.3);
        let prop = Propagator::new(&h, Layout::Mode { n }).unwrap();
        let u = prop.unitary(0.7);
        let uu = &u * u.adjoint();
        assert!((uu - DMatrix::<C64>::identity(n, n)).norm() < 1e-13);
        let psi = mode_state(n, 2);
        let s = prop.evolve_state(&psi, 0.7).unwrap();
        assert!((&u * psi.amplitudes() - s.amplitudes()).norm() < 1e-13);
    }

    #[test]
    fn fk_at_origin_and_quarter_pi() {
        let f = heisenberg_fk(0.3, 0.1, 1.0, 0.0);
        assert_eq!((f.f1, f.f2, f.k), (ONE, ONE, C64::new(0.0, 0.0)));
        let f = heisenberg_fk(FRAC_PI_4, 0.1, 1.0, PI / 0.1);
        assert!((f.k.norm() - 1.0).abs() < 1e-15);
        assert!(f.f1.norm() < 1e-15 && f.f2.norm() < 1e-15);
    }

    #[test]
    fn transfer_times() {
        assert_eq!(transfer_time(-0.5, 0), 2.0 * PI);
        assert_eq!(transfer_time_printed(0.5, 1), 6.0);
    }

    proptest! {
        #[test]
        fn fk_complementarity(beta in -4.0f64..4.0, delta in -3.0f64..3.0, theta in -5.0f64..5.0, t in -100.0f64..100.0) {
            let f = heisenberg_fk(beta, delta, theta, t);
            prop_assert!((f.f1.norm_sqr() + f.k.norm_sqr() - 1.0).abs() < 1e-14);
            prop_assert!((f.f2.norm_sqr() + f.k.norm_sqr() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn nondegenerate_amplitudes_normalized(beta in -4.0f64..4.0, g in 0.0f64..3.0, t in -50.0f64..50.0) {
            let (c01, c10) = nondegenerate_amplitudes(beta, g, t);
            prop_assert!((c01.norm_sqr() + c10.norm_sqr() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn driven_amplitude_is_bounded(g in 0.01f64..1.0, om in 0.1f64..3.0, mu in 0.0f64..5.0, phi in 0.0f64..6.3, t in 0.0f64..50.0) {
            let xi = C64::from_polar(mu, -phi);
            let z = driven_amplitude(om, g, xi, t).unwrap();
            prop_assert!(z.norm() <= g * mu / om * (1.0 + 1e-12));
        }
    }

    fn sample_eff(la: f64, lb: f64) -> EffectiveParams {
        let p = ModelParams::new(1.0, 1.0, 2.0, la, lb).unwrap();
        EffectiveParams::new(&p, LambdaStrategy::MeanDetuning).unwrap()
    }

    #[test]
    fn case1_vacuum_and_swap() {
        let eff = sample_eff(0.05, 0.05);
        let v = case1_state(0, 3.0, &eff, 4, 4).unwrap();
        assert!((v.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
        let t = transfer_time(eff.stark_shift, 0);
        let s = case1_state(1, t, &eff, 4, 4).unwrap();
        let target = StateVector::two_mode(4, 4, 0, 1).unwrap();
        assert!((s.fidelity(&target).unwrap() - 1.0).abs() < 1e-14);
        assert!(case1_state(4, 1.0, &eff, 4, 4).is_err());
    }

    #[test]
    fn case1_two_quanta_occupation() {
        let eff = sample_eff(0.03, 0.05);
        let t = 17.0;
        let s = case1_state(2, t, &eff, 5, 5).unwrap();
        let mut occ_a = 0.0;
        for (k, c) in s.amplitudes().iter().enumerate() {
            occ_a += (k / 5) as f64 * c.norm_sqr();
        }
        let f = heisenberg_fk_eff(&eff, -t);
        assert!((occ_a - 2.0 * f.f1.norm_sqr()).abs() < 1e-13);
    }

    /// Project a tripartite state onto |g⟩ and return the two-mode amplitudes.
    fn ground_block(psi: &StateVector, cfg: &FockConfig) -> DVector<C64> {
        DVector::from_iterator(cfg.modes_dim(), psi.amplitudes().iter().take(cfg.modes_dim()).copied())
    }

    #[test]
    fn h3_evolution_matches_heisenberg_solution() {
        let cfg = FockConfig::with_cutoffs(4, 4).unwrap();
        let eff = sample_eff(0.03, 0.05);
        let h3 = build_h3(&eff, &cfg).unwrap();
        let psi0 = StateVector::tripartite(&cfg, 0, 1, 0).unwrap();
        let grid = TimeGrid::uniform(0.0, 2.0 * transfer_time(eff.stark_shift, 0), 41).unwrap();
        let r = evolve(&h3, &psi0, &grid, 1e-6).unwrap();
        for (s, &t) in r.states.iter().zip(&r.times) {
            let f = heisenberg_fk_eff(&eff, -t);
            let g = ground_block(s, &cfg);
            assert!((g[cfg.index(0, 1, 0)].norm_sqr() - f.f1.norm_sqr()).abs() < 1e-9);
            assert!((g[cfg.index(0, 0, 1)].norm_sqr() - f.k.norm_sqr()).abs() < 1e-9);
        }
    }

    #[test]
    fn h3_reproduces_case1_including_phases() {
        let cfg = FockConfig::with_cutoffs(5, 5).unwrap();
        let eff = sample_eff(0.04, 0.03);
        let h3 = build_h3(&eff, &cfg).unwrap();
        let prop = Propagator::new(&h3, cfg.layout()).unwrap();
        // superposition of |0⟩, |1⟩, |2⟩ in mode a checks the relative phases
        let mut amps = DVector::zeros(cfg.dim());
        let c = [C64::new(0.6, 0.0), C64::new(0.0, 0.48), C64::new(0.64, 0.0)];
        for (n, cn) in c.iter().enumerate() {
            amps[cfg.index(0, n, 0)] = *cn;
        }
        let psi0 = StateVector::normalized(cfg.layout(), amps).unwrap();
        let t = 23.0;
        let s = prop.evolve_state(&psi0, t).unwrap();
        let mut want = DVector::<C64>::zeros(cfg.modes_dim());
        for (n, cn) in c.iter().enumerate() {
            want += case1_state(n, t, &eff, 5, 5).unwrap().amplitudes() * *cn;
        }
        let got = ground_block(&s, &cfg);
        // global phase of |g,0,0⟩ is e^{iεt/2}
        let phase = C64::from_polar(1.0, 0.5 * eff.model.epsilon * t);
        assert!((got - want * phase).norm() < 1e-12);
    }

    #[test]
    fn transfer_target_carries_phase_map() {
        let eff = sample_eff(0.04, 0.04);
        let t = transfer_time(eff.stark_shift, 0);
        let c = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let target = transfer_target(&c, &transfer_phase_map(&eff, t, 1), 5, 5).unwrap();
        let mut want = DVector::<C64>::zeros(25);
        for (n, cn) in c.iter().enumerate() {
            want += case1_state(n, t, &eff, 5, 5).unwrap().amplitudes() * *cn;
        }
        assert!((target.amplitudes() - want).norm() < 1e-13);
    }

    #[test]
    fn nondegenerate_amplitudes_match_so3_evolution() {
        let p = ModelParams::new(1.0, 1.2, 3.0, 0.08, 0.05).unwrap();
        let eff = EffectiveParams::new(&p, LambdaStrategy::AsWritten).unwrap();
        let h = build_h4prime(&eff, 3, 3).unwrap();
        let psi0 = StateVector::two_mode(3, 3, 0, 1).unwrap();
        let prop = Propagator::new(&h, psi0.layout()).unwrap();
        let co = eff.so3();
        for &t in &[0.0, 3.0, 11.0, 40.0] {
            let s = prop.evolve_state(&psi0, t).unwrap();
            let (c01, c10) = nondegenerate_amplitudes(co.angle(), co.gamma_tilde(), t);
            let phase = C64::from_polar(1.0, -co.gamma_0 * t);
            assert!((s.amplitudes()[1] - c01 * phase).norm() < 1e-12);
            assert!((s.amplitudes()[3] - c10 * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn transfer_probability_extremes() {
        assert_eq!(transfer_probability(0.4, 1.0, 0.0), 0.0);
        let p = transfer_probability(0.4, 2.0, PI / 2.0);
        assert!((p - 0.4f64.sin().powi(2)).abs() < 1e-15);
        assert!((transfer_probability(PI / 2.0, 2.0, PI / 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coherent_amplitude_revival() {
        let eff = sample_eff(0.05, 0.04);
        let xi = C64::new(2.0, -1.0);
        assert_eq!(coherent_amplitude(&eff, xi, 0.0).unwrap(), C64::new(0.0, 0.0));
        let om = eff.shifted_omega_b;
        let zmax = coherent_amplitude(&eff, xi, PI / om).unwrap();
        assert!((zmax.norm() - eff.gamma_2.abs() * xi.norm() / om).abs() < 1e-15);
        assert!(coherent_amplitude(&eff, xi, 2.0 * PI / om).unwrap().norm() < 1e-15);
        assert!(driven_amplitude(0.0, 1.0, xi, 1.0).is_err());
    }

    #[test]
    fn so3_propagator_identity_and_diagonal() {
        let co = So3Coefficients {
            gamma_0: 1.1,
            gamma_2: 0.0,
            gamma_3: 0.2,
        };
        let u = so3_propagator(&co, 4, 4, 0.0).unwrap();
        assert!((&u - &OperatorMatrix::identity(16)).max_abs_entry() < 1e-14);
        let u = so3_propagator(&co, 4, 4, 2.5).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                if i != j {
                    assert!(u.entries()[(i, j)].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn so3_propagator_matches_direct_exponential() {
        let p = ModelParams::new(1.0, 1.3, 3.0, 0.07, 0.05).unwrap();
        let eff = EffectiveParams::new(&p, LambdaStrategy::MeanDetuning).unwrap();
        let (n_a, n_b) = (6, 6);
        let h = build_h4prime(&eff, n_a, n_b).unwrap();
        let prop = Propagator::new(&h, Layout::TwoMode { n_a, n_b }).unwrap();
        let idx = complete_sector_indices(n_a, n_b);
        let t = 37.0;
        let u = so3_propagator(&eff.so3(), n_a, n_b, t).unwrap();
        let direct = OperatorMatrix::new(prop.unitary(t)).unwrap();
        let diff = &u - &direct;
        assert!(crate::algebra::spectral_norm(&diff.restrict(&idx)) < 1e-10);
    }

    #[test]
    fn excitation_number_commutes_with_h3() {
        let cfg = FockConfig::with_cutoffs(3, 3).unwrap();
        let eff = sample_eff(0.05, 0.02);
        let h3 = build_h3(&eff, &cfg).unwrap();
        let n = ModeOperators::new(&cfg).unwrap().excitation_number();
        assert!(crate::algebra::commutator(&h3, &n).unwrap().max_abs_entry() < 1e-14);
    }
}
