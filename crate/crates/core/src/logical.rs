//! Logical qubit states and density matrices for the post-selected outputs.
//!
//! The computational basis is ordered |0..0⟩ … |1..1⟩ with the first qubit as
//! the most significant bit. Logical |1⟩ is horizontal polarization and |0⟩
//! vertical, matching the control-photon convention used throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermiticity / trace tolerance for density matrices.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Eigenvalues may undershoot zero by at most this much.
pub const PSD_TOL: f64 = 1e-9;
/// Norm tolerance for pure logical states.
pub const STATE_NORM_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A single-qubit amplitude pair (coefficients of |0⟩ = V and |1⟩ = H).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Qubit {
    pub c0: Complex64,
    pub c1: Complex64,
}

impl Qubit {
    pub fn new(c0: Complex64, c1: Complex64) -> Result<Self> {
        let norm = c0.norm_sqr() + c1.norm_sqr();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::InvalidParameter {
                name: "qubit norm²",
                value: norm,
                range: "1 ± 1e-10",
            });
        }
        Ok(Self { c0, c1 })
    }

    /// Coefficients given in the polarization order (H, V).
    pub fn from_hv(h: Complex64, v: Complex64) -> Result<Self> {
        Self::new(v, h)
    }

    pub fn zero() -> Self {
        Self { c0: c(1.0, 0.0), c1: c(0.0, 0.0) }
    }

    pub fn one() -> Self {
        Self { c0: c(0.0, 0.0), c1: c(1.0, 0.0) }
    }

    /// V polarization ≡ logical |0⟩.
    pub fn v() -> Self {
        Self::zero()
    }

    /// H polarization ≡ logical |1⟩.
    pub fn h() -> Self {
        Self::one()
    }

    /// Diagonal (|H⟩ + |V⟩)/√2 = (|0⟩ + |1⟩)/√2.
    pub fn d() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { c0: c(s, 0.0), c1: c(s, 0.0) }
    }

    /// Anti-diagonal (|H⟩ − |V⟩)/√2.
    pub fn a() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { c0: c(-s, 0.0), c1: c(s, 0.0) }
    }

    /// Right circular (|H⟩ + i|V⟩)/√2.
    pub fn r() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { c0: c(0.0, s), c1: c(s, 0.0) }
    }

    /// Left circular (|H⟩ − i|V⟩)/√2.
    pub fn l() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { c0: c(0.0, -s), c1: c(s, 0.0) }
    }

    /// (|H⟩ + e^{iφ}|V⟩)/√2, the equatorial family used by the nonlocality
    /// measurement settings.
    pub fn equatorial(phi: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            c0: Complex64::from_polar(s, phi),
            c1: c(s, 0.0),
        }
    }

    pub fn inner(&self, other: &Qubit) -> Complex64 {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }

    pub fn orthogonal(&self) -> Qubit {
        Qubit {
            c0: -self.c1.conj(),
            c1: self.c0.conj(),
        }
    }

    pub fn as_vector(&self) -> DVector<Complex64> {
        DVector::from_vec(vec![self.c0, self.c1])
    }
}

/// Pure n-qubit state.
#[derive(Clone, Debug)]
pub struct LogicalState {
    n_qubits: usize,
    amps: DVector<Complex64>,
}

impl LogicalState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || dim & (dim - 1) != 0 {
            return Err(Error::DimensionMismatch { expected: 8, got: dim });
        }
        let n_qubits = dim.trailing_zeros() as usize;
        Ok(Self {
            n_qubits,
            amps: DVector::from_vec(amps),
        })
    }

    /// Basis ket |index⟩.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut amps = vec![c(0.0, 0.0); dim];
        amps[index] = c(1.0, 0.0);
        Self {
            n_qubits,
            amps: DVector::from_vec(amps),
        }
    }

    /// Tensor product of single-qubit states, first qubit most significant.
    pub fn product(qubits: &[Qubit]) -> Self {
        let mut amps = DVector::from_vec(vec![c(1.0, 0.0)]);
        for q in qubits {
            amps = amps.kronecker(&q.as_vector());
        }
        Self {
            n_qubits: qubits.len(),
            amps,
        }
    }

    /// Equal superposition (|a⟩ + e^{iφ}|b⟩)/√2 of two basis kets.
    pub fn two_term(n_qubits: usize, a: usize, b: usize, phase: f64) -> Self {
        let dim = 1usize << n_qubits;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![c(0.0, 0.0); dim];
        amps[a] = c(s, 0.0);
        amps[b] = Complex64::from_polar(s, phase);
        Self {
            n_qubits,
            amps: DVector::from_vec(amps),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self {
            n_qubits: self.n_qubits,
            amps: self.amps.clone() / c(n, 0.0),
        }
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    /// |⟨self|other⟩|².
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Either a pure conditional state or a density matrix, depending on whether
/// any mixedness survived post-selection.
#[derive(Clone, Debug)]
pub enum LogicalOutput {
    Pure(LogicalState),
    Mixed(DensityMatrix),
}

impl LogicalOutput {
    pub fn density_matrix(&self) -> DensityMatrix {
        match self {
            LogicalOutput::Pure(s) => DensityMatrix::from_pure(s),
            LogicalOutput::Mixed(m) => m.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&LogicalState> {
        match self {
            LogicalOutput::Pure(s) => Some(s),
            LogicalOutput::Mixed(_) => None,
        }
    }
}

/// 2^n x 2^n complex Hermitian positive-semidefinite unit-trace matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n_qubits: usize,
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            mat: DMatrix::identity(dim, dim) / c(dim as f64, 0.0),
        }
    }

    pub fn from_matrix(mat: DMatrix<Complex64>) -> Result<Self> {
        let dim = mat.nrows();
        if mat.ncols() != dim || dim == 0 || dim & (dim - 1) != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mat.ncols(),
            });
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            mat,
        })
    }

    pub fn from_pure(state: &LogicalState) -> Self {
        let v = state.amplitudes();
        Self {
            n_qubits: state.n_qubits(),
            mat: v * v.adjoint(),
        }
    }

    /// ρ for the single-qubit mixture m|0⟩⟨0| + (1−m)/2 · I.
    pub fn qubit_mixture(m: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::InvalidParameter {
                name: "m",
                value: m,
                range: "[0, 1]",
            });
        }
        let mut mat = DMatrix::zeros(2, 2);
        mat[(0, 0)] = c((1.0 + m) / 2.0, 0.0);
        mat[(1, 1)] = c((1.0 - m) / 2.0, 0.0);
        Ok(Self { n_qubits: 1, mat })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub(crate) fn add_outer_product(&mut self, amps: &[Complex64]) {
        let v = DVector::from_vec(amps.to_vec());
        self.mat += v.clone() * v.adjoint();
    }

    pub(crate) fn add_scaled_pure(&mut self, w: f64, state: &LogicalState) {
        let v = state.amplitudes();
        self.mat += (v * v.adjoint()) * c(w, 0.0);
    }

    pub(crate) fn add_scaled(&mut self, w: f64, other: &DensityMatrix) {
        self.mat += &other.mat * c(w, 0.0);
    }

    /// Weighted classical mixture Σ wᵢ ρᵢ.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let n = parts
            .first()
            .map(|(_, m)| m.n_qubits)
            .ok_or(Error::InvalidCounts("empty mixture".into()))?;
        let mut out = Self::zeros(n);
        for (w, m) in parts {
            if m.n_qubits != n {
                return Err(Error::DimensionMismatch {
                    expected: 1 << n,
                    got: m.dim(),
                });
            }
            out.add_scaled(*w, m);
        }
        Ok(out)
    }

    /// ⟨target|ρ|target⟩, clipped to [0, 1].
    pub fn fidelity_to(&self, target: &LogicalState) -> Result<f64> {
        if target.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: target.dim(),
            });
        }
        let v = target.amplitudes();
        let f = (v.adjoint() * &self.mat * v)[(0, 0)];
        Ok(f.re.clamp(0.0, 1.0))
    }

    /// Tr[ρ²].
    pub fn purity(&self) -> f64 {
        let sq = &self.mat * &self.mat;
        sq.trace().re
    }

    /// Expectation value Tr[ρ A] of a Hermitian observable.
    pub fn expectation(&self, observable: &DMatrix<Complex64>) -> f64 {
        (&self.mat * observable).trace().re
    }

    /// Hermitian eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.mat.clone().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    /// Spectral decomposition as (weight, pure state) pairs, zero weights
    /// clipped away.
    pub fn eigen_decomposition(&self) -> Vec<(f64, LogicalState)> {
        let eig = self.mat.clone().symmetric_eigen();
        let mut parts = Vec::new();
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > 1e-12 {
                let col = eig.eigenvectors.column(i).iter().copied().collect();
                parts.push((
                    lambda,
                    LogicalState::new(col).expect("eigenvector length is a power of two"),
                ));
            }
        }
        parts
    }

    /// Conjugates ρ by a diagonal ±1 matrix given per-basis-state signs.
    pub fn conjugate_by_signs(&self, signs: &[f64]) -> Self {
        let dim = self.dim();
        let mut mat = self.mat.clone();
        for i in 0..dim {
            for j in 0..dim {
                mat[(i, j)] *= c(signs[i] * signs[j], 0.0);
            }
        }
        Self {
            n_qubits: self.n_qubits,
            mat,
        }
    }

    /// Checks Hermiticity, unit trace and positive semidefiniteness.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let mut herm_dev: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                herm_dev = herm_dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        if herm_dev > HERMITICITY_TOL {
            return Err(Error::Encoding(format!(
                "density matrix not Hermitian: deviation {herm_dev:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > HERMITICITY_TOL || tr.im.abs() > HERMITICITY_TOL {
            return Err(Error::Encoding(format!(
                "density matrix trace {tr} is not 1"
            )));
        }
        let min_eig = self
            .eigenvalues()
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -PSD_TOL {
            return Err(Error::Encoding(format!(
                "density matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }
}
