//! Operators and states on the truncated space qubit ⊗ Fock(a) ⊗ Fock(b).
//!
//! Basis layout is qubit-major: `index = q * (n_a * n_b) + i_a * n_b + i_b`,
//! with `q = 0` the dressed ground state |g⟩ and `q = 1` the excited state |e⟩.
//! All ladder operators are built at the declared cutoff without padding, so
//! identities such as `[a, a†] = 1` only hold away from the top Fock level.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entrywise tolerance for the Hermiticity flag.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on ‖ψ‖₂ − 1 accepted by [`StateVector::new`].
pub const NORM_TOL: f64 = 1e-10;

pub(crate) const I: C64 = C64::new(0.0, 1.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
#[cfg(test)]
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    pub n_a: usize,
    pub n_b: usize,
    pub leakage_tol: f64,
}

impl FockConfig {
    pub const DEFAULT_LEAKAGE_TOL: f64 = 1e-6;

    pub fn new(n_a: usize, n_b: usize, leakage_tol: f64) -> Result<Self> {
        check_cutoff(n_a)?;
        check_cutoff(n_b)?;
        if !(leakage_tol > 0.0 && leakage_tol < 1.0) {
            return Err(Error::InvalidLeakageTolerance(leakage_tol));
        }
        Ok(Self {
            n_a,
            n_b,
            leakage_tol,
        })
    }

    pub fn with_cutoffs(n_a: usize, n_b: usize) -> Result<Self> {
        Self::new(n_a, n_b, Self::DEFAULT_LEAKAGE_TOL)
    }

    /// Dimension of the full tripartite space.
    pub fn dim(&self) -> usize {
        2 * self.n_a * self.n_b
    }

    /// Dimension of the two-boson space Fock(a) ⊗ Fock(b).
    pub fn modes_dim(&self) -> usize {
        self.n_a * self.n_b
    }

    pub fn index(&self, q: usize, i_a: usize, i_b: usize) -> usize {
        debug_assert!(q < 2 && i_a < self.n_a && i_b < self.n_b);
        q * self.n_a * self.n_b + i_a * self.n_b + i_b
    }

    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let block = self.n_a * self.n_b;
        let q = index / block;
        let rest = index % block;
        (q, rest / self.n_b, rest % self.n_b)
    }

    pub fn layout(&self) -> Layout {
        Layout::Tripartite {
            n_a: self.n_a,
            n_b: self.n_b,
        }
    }

    pub fn modes_layout(&self) -> Layout {
        Layout::TwoMode {
            n_a: self.n_a,
            n_b: self.n_b,
        }
    }

    /// Tripartite indices whose boson occupations sit at least `margin`
    /// levels below either cutoff.
    pub fn interior_indices(&self, margin: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&k| {
                let (_, ia, ib) = self.coords(k);
                ia + margin < self.n_a && ib + margin < self.n_b
            })
            .collect()
    }

    /// Tripartite indices with boson excitation `i_a + i_b <= n_max`.
    pub fn excitation_bounded_indices(&self, n_max: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&k| {
                let (_, ia, ib) = self.coords(k);
                ia + ib <= n_max
            })
            .collect()
    }
}

fn check_cutoff(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidCutoff(n))
    } else {
        Ok(())
    }
}

/// Which Hilbert space a vector lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// qubit ⊗ a ⊗ b
    Tripartite { n_a: usize, n_b: usize },
    /// a ⊗ b
    TwoMode { n_a: usize, n_b: usize },
    /// one boson mode
    Mode { n: usize },
    /// qubit ⊗ b
    QubitMode { n: usize },
}

impl Layout {
    pub fn dim(&self) -> usize {
        match *self {
            Layout::Tripartite { n_a, n_b } => 2 * n_a * n_b,
            Layout::TwoMode { n_a, n_b } => n_a * n_b,
            Layout::Mode { n } => n,
            Layout::QubitMode { n } => 2 * n,
        }
    }

    /// Largest population on the top retained Fock level of any boson mode.
    pub fn top_level_population(&self, amps: &DVector<C64>) -> f64 {
        let mut top_a = 0.0;
        let mut top_b = 0.0;
        for (k, c) in amps.iter().enumerate() {
            let p = c.norm_sqr();
            match *self {
                Layout::Tripartite { n_a, n_b } | Layout::TwoMode { n_a, n_b } => {
                    let rest = k % (n_a * n_b);
                    if rest / n_b == n_a - 1 {
                        top_a += p;
                    }
                    if rest % n_b == n_b - 1 {
                        top_b += p;
                    }
                }
                Layout::Mode { n } | Layout::QubitMode { n } => {
                    if k % n == n - 1 {
                        top_b += p;
                    }
                }
            }
        }
        f64::max(top_a, top_b)
    }
}

/// Dense complex square matrix with a cached Hermiticity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        Ok(Self::from_square(entries))
    }

    fn from_square(entries: DMatrix<C64>) -> Self {
        let hermitian = hermitian_deviation(&entries) < HERMITIAN_TOL;
        Self { entries, hermitian }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_square(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_square(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self::from_square(DMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.entries)
    }

    /// Largest entrywise |M + M†|; zero for anti-Hermitian matrices.
    pub fn anti_hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.entries[(i, j)] + self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_square(&self.entries * c)
    }

    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::from_square(self.entries.kronecker(&other.entries))
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(&self.entries * v)
    }

    /// Compression `P M P` onto the listed basis indices.
    pub fn restrict(&self, indices: &[usize]) -> DMatrix<C64> {
        DMatrix::from_fn(indices.len(), indices.len(), |i, j| {
            self.entries[(indices[i], indices[j])]
        })
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.entries)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn expectation(&self, psi: &StateVector) -> Result<C64> {
        let hv = self.apply(psi.amplitudes())?;
        Ok(psi.amplitudes().dotc(&hv))
    }

    /// Hermitian part `(M + M†)/2`, used to strip rounding asymmetry.
    pub fn hermitian_part(&self) -> Self {
        Self::from_square((&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0))
    }
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |a: f64, &b| a.max(b))
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn assert_same_dim(a: &OperatorMatrix, b: &OperatorMatrix) {
    assert_eq!(a.dim(), b.dim(), "operator dimension mismatch");
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        assert_same_dim(self, rhs);
        OperatorMatrix::from_square(&self.entries + &rhs.entries)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        assert_same_dim(self, rhs);
        OperatorMatrix::from_square(&self.entries - &rhs.entries)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        assert_same_dim(self, rhs);
        OperatorMatrix::from_square(&self.entries * &rhs.entries)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        OperatorMatrix {
            entries: -&self.entries,
            hermitian: self.hermitian,
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for OperatorMatrix {
            type Output = OperatorMatrix;
            fn $m(self, rhs: Self) -> OperatorMatrix { (&self).$m(&rhs) }
        }
        impl $tr<&OperatorMatrix> for OperatorMatrix {
            type Output = OperatorMatrix;
            fn $m(self, rhs: &OperatorMatrix) -> OperatorMatrix { (&self).$m(rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

/// Normalized amplitude vector tagged with its basis layout.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: Layout,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(layout: Layout, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn normalized(layout: Layout, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            layout,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// Trusted constructor for the output of unitary maps; norm is tracked by the caller.
    pub(crate) fn from_unitary_image(layout: Layout, amplitudes: DVector<C64>) -> Self {
        debug_assert_eq!(layout.dim(), amplitudes.len());
        Self { layout, amplitudes }
    }

    pub fn basis(layout: Layout, index: usize) -> Result<Self> {
        let dim = layout.dim();
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        Ok(Self {
            layout,
            amplitudes: v,
        })
    }

    /// |q, i_a, i_b⟩ on the tripartite space.
    pub fn tripartite(cfg: &FockConfig, q: usize, i_a: usize, i_b: usize) -> Result<Self> {
        if q > 1 || i_a >= cfg.n_a || i_b >= cfg.n_b {
            return Err(Error::Precondition(format!(
                "basis label ({q}, {i_a}, {i_b}) outside cutoffs ({}, {})",
                cfg.n_a, cfg.n_b
            )));
        }
        Self::basis(cfg.layout(), cfg.index(q, i_a, i_b))
    }

    /// |i_a, i_b⟩ on the two-boson space.
    pub fn two_mode(n_a: usize, n_b: usize, i_a: usize, i_b: usize) -> Result<Self> {
        if i_a >= n_a || i_b >= n_b {
            return Err(Error::Precondition(format!(
                "Fock label ({i_a}, {i_b}) outside cutoffs ({n_a}, {n_b})"
            )));
        }
        Self::basis(Layout::TwoMode { n_a, n_b }, i_a * n_b + i_b)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Squared overlap |⟨self|other⟩|².
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn top_level_population(&self) -> f64 {
        self.layout.top_level_population(&self.amplitudes)
    }
}

pub fn annihilation_op(n: usize) -> Result<OperatorMatrix> {
    check_cutoff(n)?;
    let mut m = DMatrix::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    Ok(OperatorMatrix::from_square(m))
}

pub fn creation_op(n: usize) -> Result<OperatorMatrix> {
    Ok(annihilation_op(n)?.adjoint())
}

pub fn number_op(n: usize) -> Result<OperatorMatrix> {
    check_cutoff(n)?;
    Ok(OperatorMatrix::from_diagonal(
        &(0..n).map(|k| k as f64).collect::<Vec<_>>(),
    ))
}

/// σ_z = |e⟩⟨e| − |g⟩⟨g| in the (g, e) ordering.
pub fn sigma_z() -> OperatorMatrix {
    OperatorMatrix::from_diagonal(&[-1.0, 1.0])
}

/// σ_+ = |e⟩⟨g|.
pub fn sigma_plus() -> OperatorMatrix {
    let mut m = DMatrix::zeros(2, 2);
    m[(1, 0)] = ONE;
    OperatorMatrix::from_square(m)
}

/// σ_- = |g⟩⟨e|.
pub fn sigma_minus() -> OperatorMatrix {
    sigma_plus().adjoint()
}

pub fn sigma_x() -> OperatorMatrix {
    &sigma_plus() + &sigma_minus()
}

pub fn sigma_y() -> OperatorMatrix {
    (&sigma_plus() - &sigma_minus()).scale(-I)
}

/// Projector |e⟩⟨e|.
pub fn excited_projector() -> OperatorMatrix {
    OperatorMatrix::from_diagonal(&[0.0, 1.0])
}

fn factor_or_identity(op: Option<&OperatorMatrix>, dim: usize) -> Result<OperatorMatrix> {
    match op {
        None => Ok(OperatorMatrix::identity(dim)),
        Some(m) if m.dim() == dim => Ok(m.clone()),
        Some(m) => Err(Error::DimensionMismatch {
            expected: dim,
            found: m.dim(),
        }),
    }
}

/// Kronecker product qubit ⊗ a ⊗ b; `None` stands for the identity factor.
pub fn embed3(
    op_q: Option<&OperatorMatrix>,
    op_a: Option<&OperatorMatrix>,
    op_b: Option<&OperatorMatrix>,
    cfg: &FockConfig,
) -> Result<OperatorMatrix> {
    let q = factor_or_identity(op_q, 2)?;
    let a = factor_or_identity(op_a, cfg.n_a)?;
    let b = factor_or_identity(op_b, cfg.n_b)?;
    Ok(q.kron(&a).kron(&b))
}

/// Kronecker product a ⊗ b on the two-boson space.
pub fn embed2(
    op_a: Option<&OperatorMatrix>,
    op_b: Option<&OperatorMatrix>,
    n_a: usize,
    n_b: usize,
) -> Result<OperatorMatrix> {
    let a = factor_or_identity(op_a, n_a)?;
    let b = factor_or_identity(op_b, n_b)?;
    Ok(a.kron(&b))
}

/// Kronecker product qubit ⊗ b.
pub fn embed_qubit_mode(
    op_q: Option<&OperatorMatrix>,
    op_b: Option<&OperatorMatrix>,
    n: usize,
) -> Result<OperatorMatrix> {
    let q = factor_or_identity(op_q, 2)?;
    let b = factor_or_identity(op_b, n)?;
    Ok(q.kron(&b))
}

pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(&(a * b) - &(b * a))
}

/// Frequently used operators embedded in the tripartite space.
#[derive(Debug, Clone)]
pub struct ModeOperators {
    pub a: OperatorMatrix,
    pub b: OperatorMatrix,
    pub num_a: OperatorMatrix,
    pub num_b: OperatorMatrix,
    pub sigma_z: OperatorMatrix,
    pub sigma_plus: OperatorMatrix,
    pub sigma_minus: OperatorMatrix,
    pub excited: OperatorMatrix,
    pub identity: OperatorMatrix,
}

impl ModeOperators {
    pub fn new(cfg: &FockConfig) -> Result<Self> {
        let a = annihilation_op(cfg.n_a)?;
        let b = annihilation_op(cfg.n_b)?;
        Ok(Self {
            a: embed3(None, Some(&a), None, cfg)?,
            b: embed3(None, None, Some(&b), cfg)?,
            num_a: embed3(None, Some(&number_op(cfg.n_a)?), None, cfg)?,
            num_b: embed3(None, None, Some(&number_op(cfg.n_b)?), cfg)?,
            sigma_z: embed3(Some(&sigma_z()), None, None, cfg)?,
            sigma_plus: embed3(Some(&sigma_plus()), None, None, cfg)?,
            sigma_minus: embed3(Some(&sigma_minus()), None, None, cfg)?,
            excited: embed3(Some(&excited_projector()), None, None, cfg)?,
            identity: OperatorMatrix::identity(cfg.dim()),
        })
    }

    /// a†a + b†b + σ_+σ_-
    pub fn excitation_number(&self) -> OperatorMatrix {
        &(&self.num_a + &self.num_b) + &self.excited
    }
}

/// Two-boson angular-momentum operators and the total number operator.
#[derive(Debug, Clone)]
pub struct JordanSchwinger {
    pub jx: OperatorMatrix,
    pub jy: OperatorMatrix,
    pub jz: OperatorMatrix,
    pub n: OperatorMatrix,
}

pub fn jordan_schwinger(n_a: usize, n_b: usize) -> Result<JordanSchwinger> {
    let a1 = annihilation_op(n_a)?;
    let b1 = annihilation_op(n_b)?;
    let a = embed2(Some(&a1), None, n_a, n_b)?;
    let b = embed2(None, Some(&b1), n_a, n_b)?;
    let num_a = embed2(Some(&number_op(n_a)?), None, n_a, n_b)?;
    let num_b = embed2(None, Some(&number_op(n_b)?), n_a, n_b)?;
    let bd_a = &b.adjoint() * &a;
    let ad_b = &a.adjoint() * &b;
    let half = C64::new(0.5, 0.0);
    Ok(JordanSchwinger {
        jx: (&bd_a + &ad_b).scale(half),
        jy: (&bd_a - &ad_b).scale(I * half),
        jz: (&num_a - &num_b).scale(half),
        n: &num_a + &num_b,
    })
}

/// Two-mode basis indices with `i_a + i_b <= n_max`.
pub fn two_mode_bounded_indices(n_a: usize, n_b: usize, n_max: usize) -> Vec<usize> {
    (0..n_a * n_b)
        .filter(|&k| k / n_b + k % n_b <= n_max)
        .collect()
}

#[derive(Debug, Clone)]
pub struct CoherentState {
    pub state: StateVector,
    /// 1 − Σ|c_m|² before renormalization.
    pub truncated_weight: f64,
}

/// Coherent state |z⟩ truncated to `n` levels and renormalized.
pub fn coherent_state_vector(z: C64, n: usize, leakage_tol: f64) -> Result<CoherentState> {
    check_cutoff(n)?;
    let mut amps = DVector::zeros(n);
    let mut c = C64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
    amps[0] = c;
    for m in 1..n {
        c = c * z / (m as f64).sqrt();
        amps[m] = c;
    }
    let kept = amps.norm_squared();
    let truncated_weight = (1.0 - kept).max(0.0);
    if truncated_weight > leakage_tol {
        return Err(Error::Leakage {
            weight: truncated_weight,
            tol: leakage_tol,
        });
    }
    Ok(CoherentState {
        state: StateVector::normalized(Layout::Mode { n }, amps)?,
        truncated_weight,
    })
}

/// Mean and variance of the occupation number of a single-mode state.
pub fn occupation_moments(psi: &StateVector) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (k, c) in psi.amplitudes().iter().enumerate() {
        let p = c.norm_sqr();
        mean += k as f64 * p;
        second += (k * k) as f64 * p;
    }
    (mean, second - mean * mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn annihilation_ladder_action() {
        let a = annihilation_op(4).unwrap();
        let mut vac = DVector::zeros(4);
        vac[0] = ONE;
        assert!(a.apply(&vac).unwrap().norm() == 0.0);
        let mut two = DVector::zeros(4);
        two[2] = ONE;
        let out = a.apply(&two).unwrap();
        assert!(close(out[1], C64::new(2f64.sqrt(), 0.0), 1e-15));
        assert!(out[0].norm() + out[2].norm() + out[3].norm() == 0.0);
    }

    #[test]
    fn number_operator_spectrum() {
        let a = annihilation_op(4).unwrap();
        let n = &a.adjoint() * &a;
        for k in 0..4 {
            assert!(close(n.entries()[(k, k)], C64::new(k as f64, 0.0), 1e-15));
        }
        assert!(n.is_hermitian());
    }

    #[test]
    fn rejects_small_cutoff() {
        assert_eq!(annihilation_op(1), Err(Error::InvalidCutoff(1)));
        assert!(FockConfig::with_cutoffs(1, 4).is_err());
        assert!(FockConfig::new(3, 4, 0.0).is_err());
        assert!(FockConfig::new(3, 4, 1.0).is_err());
    }

    #[test]
    fn canonical_commutation_below_cutoff() {
        let n = 6;
        let a = annihilation_op(n).unwrap();
        let c = commutator(&a, &a.adjoint()).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i != j { ZERO } else if i < n - 1 { ONE } else { C64::new(-(n as f64 - 1.0), 0.0) };
                assert!(close(c.entries()[(i, j)], want, 1e-14), "({i},{j})");
            }
        }
        // boundary row carries −(n−1)
        assert!(close(c.entries()[(n - 1, n - 1)], C64::new(-(n as f64 - 1.0), 0.0), 1e-14));
    }

    #[test]
    fn pauli_algebra() {
        let c = commutator(&sigma_z(), &sigma_x()).unwrap();
        let want = sigma_y().scale(C64::new(0.0, 2.0));
        assert!((&c - &want).max_abs_entry() < 1e-15);
        let h = sigma_x();
        assert_eq!(commutator(&h, &h).unwrap().max_abs_entry(), 0.0);
    }

    #[test]
    fn embed3_layout() {
        let cfg = FockConfig::with_cutoffs(3, 4).unwrap();
        let sz = embed3(Some(&sigma_z()), None, None, &cfg).unwrap();
        let g00 = StateVector::tripartite(&cfg, 0, 0, 0).unwrap();
        let out = sz.apply(g00.amplitudes()).unwrap();
        assert!(close(out[0], -ONE, 0.0));
        let id = embed3(None, None, None, &cfg).unwrap();
        assert_eq!(id, OperatorMatrix::identity(24));

        let a = embed3(None, Some(&annihilation_op(3).unwrap()), None, &cfg).unwrap();
        let b = embed3(None, None, Some(&annihilation_op(4).unwrap()), &cfg).unwrap();
        assert_eq!(commutator(&a, &b).unwrap().max_abs_entry(), 0.0);
        assert_eq!(commutator(&a, &b.adjoint()).unwrap().max_abs_entry(), 0.0);

        // a lowers the middle index of the layout
        let s = StateVector::tripartite(&cfg, 1, 2, 3).unwrap();
        let out = a.apply(s.amplitudes()).unwrap();
        assert!(close(out[cfg.index(1, 1, 3)], C64::new(2f64.sqrt(), 0.0), 1e-15));
    }

    #[test]
    fn embed_dimension_mismatch() {
        let cfg = FockConfig::with_cutoffs(3, 4).unwrap();
        let a = annihilation_op(5).unwrap();
        assert!(matches!(
            embed3(None, Some(&a), None, &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(commutator(&a, &sigma_x()).is_err());
    }

    #[test]
    fn basis_layout_round_trip() {
        let cfg = FockConfig::with_cutoffs(5, 3).unwrap();
        for k in 0..cfg.dim() {
            let (q, ia, ib) = cfg.coords(k);
            assert_eq!(cfg.index(q, ia, ib), k);
        }
    }

    #[test]
    fn jordan_schwinger_single_excitation() {
        let js = jordan_schwinger(4, 4).unwrap();
        let s = StateVector::two_mode(4, 4, 1, 0).unwrap();
        let out = js.jz.apply(s.amplitudes()).unwrap();
        assert!(close(out[4], C64::new(0.5, 0.0), 1e-15));
        assert!((out.norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn number_commutes_with_jy_jz() {
        let js = jordan_schwinger(6, 5).unwrap();
        assert!(commutator(&js.n, &js.jy).unwrap().max_abs_entry() < 1e-14);
        assert!(commutator(&js.n, &js.jz).unwrap().max_abs_entry() < 1e-14);
        assert!(commutator(&js.n, &js.jx).unwrap().max_abs_entry() < 1e-14);
    }

    #[test]
    fn so3_algebra_on_bounded_subspace() {
        let (na, nb) = (7, 7);
        let js = jordan_schwinger(na, nb).unwrap();
        let idx = two_mode_bounded_indices(na, nb, na.min(nb) - 2);
        let check = |x: &OperatorMatrix, y: &OperatorMatrix, z: &OperatorMatrix| {
            let c = commutator(x, y).unwrap();
            let d = &c - &z.scale(I);
            d.restrict(&idx).iter().fold(0.0f64, |m, v| m.max(v.norm()))
        };
        assert!(check(&js.jz, &js.jx, &js.jy) < 1e-12);
        assert!(check(&js.jy, &js.jz, &js.jx) < 1e-12);
        assert!(check(&js.jx, &js.jy, &js.jz) < 1e-12);
        // the identity breaks on the incomplete top sectors
        let full = &commutator(&js.jx, &js.jy).unwrap() - &js.jz.scale(I);
        assert!(full.max_abs_entry() > 1e-3);
    }

    #[test]
    fn coherent_vacuum_and_moments() {
        let vac = coherent_state_vector(ZERO, 6, 1e-6).unwrap();
        assert_eq!(vac.state.amplitudes()[0], ONE);
        assert_eq!(vac.truncated_weight, 0.0);

        let cs = coherent_state_vector(ONE, 20, 1e-6).unwrap();
        let (mean, var) = occupation_moments(&cs.state);
        assert!((mean - 1.0).abs() < 1e-9, "{mean}");
        assert!((var - 1.0).abs() < 1e-9, "{var}");
    }

    #[test]
    fn coherent_leakage_error() {
        let err = coherent_state_vector(C64::new(3.0, 0.0), 5, 1e-6).unwrap_err();
        assert!(matches!(err, Error::Leakage { .. }));
    }

    #[test]
    fn state_vector_rejects_unnormalized() {
        let v = DVector::from_element(3, ONE);
        assert!(matches!(
            StateVector::new(Layout::Mode { n: 3 }, v.clone()),
            Err(Error::NotNormalized { .. })
        ));
        let s = StateVector::normalized(Layout::Mode { n: 3 }, v).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn top_level_population_tripartite() {
        let cfg = FockConfig::with_cutoffs(3, 4).unwrap();
        let s = StateVector::tripartite(&cfg, 1, 2, 0).unwrap();
        assert_eq!(s.top_level_population(), 1.0);
        let s = StateVector::tripartite(&cfg, 0, 1, 1).unwrap();
        assert_eq!(s.top_level_population(), 0.0);
    }
}
