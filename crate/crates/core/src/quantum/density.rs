use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{QuantumError, QuantumState, EQ_TOL, MAX_QUBITS, PSD_TOL};

/// Dense density matrix on `num_qubits` qubits, same qubit ordering as [`QuantumState`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// `|psi><psi|`.
    pub fn from_pure(state: &QuantumState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            num_qubits: state.num_qubits(),
            entries: &v * v.adjoint(),
        }
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self, QuantumError> {
        if num_qubits > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(num_qubits));
        }
        let dim = 1 << num_qubits;
        Ok(Self {
            num_qubits,
            entries: DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        })
    }

    /// Wrap a matrix, checking trace, Hermiticity and positivity.
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self, QuantumError> {
        let dim = entries.nrows();
        if dim != entries.ncols() {
            return Err(QuantumError::DimensionMismatch(dim, entries.ncols()));
        }
        if dim == 0 || !dim.is_power_of_two() {
            return Err(QuantumError::BadDimension(dim));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(num_qubits));
        }
        let rho = Self {
            num_qubits,
            entries,
        };
        rho.validate()?;
        Ok(rho)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|r| (0..d).all(|c| (self.entries[(r, c)] - self.entries[(c, r)].conj()).norm() <= tol))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    /// Check the density-matrix invariants: unit trace, Hermitian, PSD.
    pub fn validate(&self) -> Result<(), QuantumError> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > EQ_TOL || tr.im.abs() > EQ_TOL {
            return Err(QuantumError::InvalidDensityMatrix(format!(
                "trace {tr} is not 1"
            )));
        }
        if !self.is_hermitian(EQ_TOL) {
            return Err(QuantumError::InvalidDensityMatrix("not Hermitian".into()));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(QuantumError::InvalidDensityMatrix(format!(
                "smallest eigenvalue {min} is negative"
            )));
        }
        Ok(())
    }

    /// Single-qubit depolarizing channel
    /// `rho -> (1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z)` on `qubit`.
    pub fn depolarize(&self, qubit: usize, p: f64) -> Result<DensityMatrix, QuantumError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QuantumError::ProbabilityOutOfRange(p));
        }
        if qubit >= self.num_qubits {
            return Err(QuantumError::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        let mask = 1usize << (self.num_qubits - 1 - qubit);
        let keep = 1.0 - 2.0 * p / 3.0;
        let flip = 2.0 * p / 3.0;
        let coherence = 1.0 - 4.0 * p / 3.0;
        let d = self.dim();
        let src = &self.entries;
        let out = DMatrix::from_fn(d, d, |r, c| {
            if (r ^ c) & mask == 0 {
                // qubit block diagonal: populations mix with the flipped block
                src[(r, c)] * keep + src[(r ^ mask, c ^ mask)] * flip
            } else {
                src[(r, c)] * coherence
            }
        });
        Ok(DensityMatrix {
            num_qubits: self.num_qubits,
            entries: out,
        })
    }

    /// Leading eigenvector, if the matrix is a pure state.
    fn pure_vector(&self) -> Option<nalgebra::DVector<Complex64>> {
        if (self.purity() - 1.0).abs() > EQ_TOL {
            return None;
        }
        let eig = self.entries.clone().symmetric_eigen();
        let (idx, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        Some(eig.eigenvectors.column(idx).into_owned())
    }

    /// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
    ///
    /// When either argument is pure the overlap `<psi|rho|psi>` is used.
    pub fn fidelity(rho: &DensityMatrix, rho0: &DensityMatrix) -> Result<f64, QuantumError> {
        if rho.dim() != rho0.dim() {
            return Err(QuantumError::DimensionMismatch(rho.dim(), rho0.dim()));
        }
        rho.validate()?;
        rho0.validate()?;
        let f = if let Some(psi) = rho0.pure_vector() {
            (psi.adjoint() * &rho.entries * &psi)[(0, 0)].re
        } else if let Some(psi) = rho.pure_vector() {
            (psi.adjoint() * &rho0.entries * &psi)[(0, 0)].re
        } else {
            Self::uhlmann(rho, rho0)
        };
        Ok(f.clamp(0.0, 1.0))
    }

    /// General trace formula, without the pure-state shortcut.
    pub fn uhlmann(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
        let sqrt_rho = psd_sqrt(&rho.entries);
        let inner = &sqrt_rho * &sigma.entries * &sqrt_rho;
        let inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = inner.symmetric_eigen().eigenvalues;
        // round-off eigenvalues would otherwise contribute sqrt(1e-16) each
        let floor = eig.iter().fold(0.0f64, |a, &l| a.max(l)) * 1e-12;
        let tr: f64 = eig.iter().filter(|&&l| l > floor).map(|&l| l.sqrt()).sum();
        tr * tr
    }
}

fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = m.clone().symmetric_eigen();
    let roots = eig
        .eigenvalues
        .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}
