use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Unitarity tolerance for element matrices.
pub const UNITARITY_TOL: f64 = 1e-10;

/// A unitary acting on a subset of modes through a k x k mode-coupling
/// matrix. Column `i` of the matrix is the image of input mode `modes[i]`
/// under creation-operator rewriting `a†_i -> Σ_j U_ji a†_j`.
#[derive(Clone, Debug)]
pub struct ElementTransform {
    modes: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl ElementTransform {
    /// Validates mode indices (distinct) and the matrix (square of the right
    /// size, unitary within [`UNITARITY_TOL`]).
    pub fn new(modes: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let k = modes.len();
        if matrix.nrows() != k || matrix.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::RegistryConflict(format!(
                    "transform lists mode {m} twice"
                )));
            }
        }
        let max_dev = unitarity_deviation(&matrix);
        if max_dev > UNITARITY_TOL {
            return Err(Error::NonUnitary {
                max_dev,
                tol: UNITARITY_TOL,
            });
        }
        Ok(Self { modes, matrix })
    }

    /// A 1-mode phase element multiplying the amplitude of `mode` by `e^{iθ}`.
    pub fn mode_phase(mode: usize, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            modes: vec![mode],
            matrix: DMatrix::from_element(1, 1, phase),
        }
    }

    /// A permutation with optional per-entry phases, given as a list of
    /// `(from, to, phase)` triples. Every listed mode must appear exactly once
    /// as a source and once as a destination.
    pub fn routing(entries: &[(usize, usize, Complex64)]) -> Result<Self> {
        let mut modes: Vec<usize> = entries.iter().map(|e| e.0).collect();
        modes.sort_unstable();
        let k = modes.len();
        let pos = |m: usize| modes.binary_search(&m).ok();
        let mut matrix = DMatrix::zeros(k, k);
        for &(from, to, phase) in entries {
            let i = pos(from).ok_or_else(|| Error::UnknownMode(from.to_string()))?;
            let j = pos(to).ok_or_else(|| {
                Error::RegistryConflict(format!("routing target {to} is not a routed mode"))
            })?;
            matrix[(j, i)] = phase;
        }
        Self::new(modes, matrix)
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// The inverse element (conjugate transpose of the coupling matrix).
    pub fn dagger(&self) -> Self {
        Self {
            modes: self.modes.clone(),
            matrix: self.matrix.adjoint(),
        }
    }
}

/// Max-abs deviation of `U† U` from the identity.
pub fn unitarity_deviation(matrix: &DMatrix<Complex64>) -> f64 {
    let gram = matrix.adjoint() * matrix;
    let mut max_dev: f64 = 0.0;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let expect = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            max_dev = max_dev.max((gram[(i, j)] - expect).norm());
        }
    }
    max_dev
}
