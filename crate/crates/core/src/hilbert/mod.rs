//! Truncated cavity Fock space tensored with the symmetric Dicke sector.
//!
//! Composite index ordering is photon-major: `k = n * (N + 1) + (m + j)`
//! with `j = N / 2`. The spin label `m + j` is the number of excited atoms
//! and is what every function here calls the *excitation index*.
//!
//! Operators are always stored sparse (CSR). States are stored dense. There
//! is no switchover threshold between the two.

mod matrix_market;
mod oracle;
mod sparse;

pub use matrix_market::{read_matrix_market, write_matrix_market};
pub use oracle::{brute_force_embed, BruteForceOperators};
pub use sparse::SparseMatrix;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Hilbert space layout: `n_atoms` spins in the `j = N/2` sector and a cavity
/// truncated at `fock_cutoff` photons (inclusive).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    n_atoms: usize,
    fock_cutoff: usize,
}

impl BasisSpec {
    pub fn new(n_atoms: usize, fock_cutoff: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::invalid("n_atoms must be at least 1"));
        }
        Ok(Self { n_atoms, fock_cutoff })
    }

    /// Cutoff heuristic `max(6, ceil(3 * expected photons))`.
    pub fn with_expected_photons(n_atoms: usize, expected_photons: f64) -> Result<Self> {
        let guess = (3.0 * expected_photons.max(0.0)).ceil() as usize;
        Self::new(n_atoms, guess.max(6))
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    pub fn spin_dim(&self) -> usize {
        self.n_atoms + 1
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.fock_dim() * self.spin_dim()
    }

    /// Composite index of `|n, j, m = -j + excitations>`.
    pub fn index(&self, photons: usize, excitations: usize) -> usize {
        assert!(photons <= self.fock_cutoff && excitations <= self.n_atoms);
        photons * self.spin_dim() + excitations
    }

    /// Inverse of [`BasisSpec::index`]: `(photons, excitations)`.
    pub fn decompose(&self, index: usize) -> (usize, usize) {
        assert!(index < self.dim());
        (index / self.spin_dim(), index % self.spin_dim())
    }

    /// `m` quantum number for an excitation index.
    pub fn m(&self, excitations: usize) -> f64 {
        excitations as f64 - self.j()
    }

    pub(crate) fn ensure_same(&self, other: &BasisSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::BasisMismatch {
                expected: *self,
                found: *other,
            })
        }
    }
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} n_max={}", self.n_atoms, self.fock_cutoff)
    }
}

/// A sparse operator on a [`BasisSpec`].
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    basis: BasisSpec,
    matrix: SparseMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(basis: BasisSpec, matrix: SparseMatrix, hermitian: bool) -> Self {
        assert_eq!(basis.dim(), matrix.dim(), "operator storage must match the basis dimension");
        Self {
            basis,
            matrix,
            hermitian,
        }
    }

    pub fn zeros(basis: BasisSpec) -> Self {
        Self::new(basis, SparseMatrix::zeros(basis.dim()), true)
    }

    pub fn identity(basis: BasisSpec) -> Self {
        Self::new(basis, SparseMatrix::identity(basis.dim()), true)
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> SparseMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    /// Max entrywise |M - M^dagger| relative to max |M|.
    pub fn relative_hermiticity_defect(&self) -> f64 {
        let scale = self.matrix.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            self.matrix.hermiticity_defect() / scale
        }
    }

    /// Checks the flag against the stored entries at `1e-12` relative.
    pub fn check_hermitian(&self) -> Result<()> {
        let defect = self.relative_hermiticity_defect();
        if defect <= 1e-12 {
            Ok(())
        } else {
            Err(Error::NotHermitian { defect })
        }
    }

    pub fn dagger(&self) -> Self {
        Self::new(self.basis, self.matrix.adjoint(), self.hermitian)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.basis, self.matrix.scale(s), self.hermitian && s.im == 0.0)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self::new(self.basis, self.matrix.scale_real(s), self.hermitian)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        let ab = self * other;
        let ba = other * self;
        &ab - &ba
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix.get(row, col)
    }

    /// `<bra| O |ket>` between two composite basis labels `(photons, excitations)`.
    pub fn element(&self, bra: (usize, usize), ket: (usize, usize)) -> C64 {
        self.matrix
            .get(self.basis.index(bra.0, bra.1), self.basis.index(ket.0, ket.1))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.to_dense()
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        DVector::from_vec(self.matrix.mul_vec(v.as_slice()))
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.basis, rhs.basis, "operator basis mismatch");
        OperatorMatrix::new(self.basis, &self.matrix + &rhs.matrix, self.hermitian && rhs.hermitian)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.basis, rhs.basis, "operator basis mismatch");
        OperatorMatrix::new(self.basis, &self.matrix - &rhs.matrix, self.hermitian && rhs.hermitian)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.basis, rhs.basis, "operator basis mismatch");
        OperatorMatrix::new(self.basis, &self.matrix * &rhs.matrix, false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinOp {
    Jx,
    Jy,
    Jz,
    Jplus,
    Jminus,
    JplusSquared,
    JminusSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhotonOp {
    Annihilate,
    Create,
    Number,
}

/// `sqrt(j(j+1) - m(m+1))` written in excitation-index form.
fn ladder_up(n_atoms: usize, excitations: usize) -> f64 {
    (((n_atoms - excitations) * (excitations + 1)) as f64).sqrt()
}

/// Collective spin operator tensored with the identity on the cavity.
pub fn collective_spin(basis: BasisSpec, which: SpinOp) -> OperatorMatrix {
    let n = basis.n_atoms();
    let one = C64::new(1.0, 0.0);
    // single-sector matrix as (row, col, value) in excitation indices
    let raise: Vec<(usize, usize, C64)> = (0..n).map(|k| (k + 1, k, one * ladder_up(n, k))).collect();
    let lower: Vec<(usize, usize, C64)> = raise.iter().map(|&(r, c, v)| (c, r, v)).collect();
    let sector: Vec<(usize, usize, C64)> = match which {
        SpinOp::Jz => (0..=n).map(|k| (k, k, one * basis.m(k))).collect(),
        SpinOp::Jplus => raise,
        SpinOp::Jminus => lower,
        SpinOp::Jx => raise
            .iter()
            .chain(lower.iter())
            .map(|&(r, c, v)| (r, c, v * 0.5))
            .collect(),
        SpinOp::Jy => {
            // (J+ - J-) / 2i
            let up = raise.iter().map(|&(r, c, v)| (r, c, v * C64::new(0.0, -0.5)));
            let down = lower.iter().map(|&(r, c, v)| (r, c, v * C64::new(0.0, 0.5)));
            up.chain(down).collect()
        }
        SpinOp::JplusSquared => (0..n.saturating_sub(1))
            .map(|k| (k + 2, k, one * ladder_up(n, k) * ladder_up(n, k + 1)))
            .collect(),
        SpinOp::JminusSquared => (0..n.saturating_sub(1))
            .map(|k| (k, k + 2, one * ladder_up(n, k) * ladder_up(n, k + 1)))
            .collect(),
    };
    let hermitian = matches!(which, SpinOp::Jx | SpinOp::Jy | SpinOp::Jz);
    let triplets = (0..basis.fock_dim()).flat_map(|photons| {
        sector
            .iter()
            .map(move |&(r, c, v)| (basis.index(photons, r), basis.index(photons, c), v))
    });
    OperatorMatrix::new(basis, SparseMatrix::from_triplets(basis.dim(), triplets), hermitian)
}

/// Truncated cavity operator tensored with the identity on the spins.
pub fn photon(basis: BasisSpec, which: PhotonOp) -> OperatorMatrix {
    let one = C64::new(1.0, 0.0);
    let cutoff = basis.fock_cutoff();
    let fock: Vec<(usize, usize, C64)> = match which {
        PhotonOp::Annihilate => (1..=cutoff).map(|n| (n - 1, n, one * (n as f64).sqrt())).collect(),
        PhotonOp::Create => (1..=cutoff).map(|n| (n, n - 1, one * (n as f64).sqrt())).collect(),
        PhotonOp::Number => (0..=cutoff).map(|n| (n, n, one * n as f64)).collect(),
    };
    let triplets = fock.iter().flat_map(|&(r, c, v)| {
        (0..basis.spin_dim()).map(move |k| (basis.index(r, k), basis.index(c, k), v))
    });
    OperatorMatrix::new(
        basis,
        SparseMatrix::from_triplets(basis.dim(), triplets),
        which == PhotonOp::Number,
    )
}

/// `a + a^dagger`.
pub fn photon_quadrature(basis: BasisSpec) -> OperatorMatrix {
    let a = photon(basis, PhotonOp::Annihilate);
    let ad = photon(basis, PhotonOp::Create);
    let mut x = &a + &ad;
    x.hermitian = true;
    x
}

/// `exp(i pi (a^dagger a + Jz + j))`, i.e. `(-1)^(n + excitations)`.
pub fn parity(basis: BasisSpec) -> OperatorMatrix {
    let diag: Vec<C64> = (0..basis.dim())
        .map(|i| {
            let (n, k) = basis.decompose(i);
            C64::new(if (n + k) % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        })
        .collect();
    OperatorMatrix::new(basis, SparseMatrix::from_diagonal(&diag), true)
}

/// Projector onto a fixed photon number.
pub fn photon_projector(basis: BasisSpec, photons: usize) -> OperatorMatrix {
    let triplets = (0..basis.spin_dim()).map(|k| {
        let i = basis.index(photons, k);
        (i, i, C64::new(1.0, 0.0))
    });
    OperatorMatrix::new(basis, SparseMatrix::from_triplets(basis.dim(), triplets), true)
}

#[derive(Clone, Debug)]
pub enum StateData {
    Pure(DVector<C64>),
    Density(DMatrix<C64>),
}

/// A pure state or density matrix on a [`BasisSpec`].
#[derive(Clone, Debug)]
pub struct QuantumState {
    basis: BasisSpec,
    data: StateData,
}

impl QuantumState {
    pub fn pure(basis: BasisSpec, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::invalid(format!(
                "state vector has length {} but basis dimension is {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        Ok(Self {
            basis,
            data: StateData::Pure(amplitudes),
        })
    }

    pub fn pure_normalized(basis: BasisSpec, amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite state vector"));
        }
        Self::pure(basis, amplitudes.unscale(norm))
    }

    pub fn density(basis: BasisSpec, rho: DMatrix<C64>) -> Result<Self> {
        if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
            return Err(Error::invalid(format!(
                "density matrix is {}x{} but basis dimension is {}",
                rho.nrows(),
                rho.ncols(),
                basis.dim()
            )));
        }
        Ok(Self {
            basis,
            data: StateData::Density(rho),
        })
    }

    /// `|n, j, -j + excitations>`.
    pub fn basis_state(basis: BasisSpec, photons: usize, excitations: usize) -> Self {
        let mut v = DVector::zeros(basis.dim());
        v[basis.index(photons, excitations)] = C64::new(1.0, 0.0);
        Self {
            basis,
            data: StateData::Pure(v),
        }
    }

    /// Normalized superposition of `(photons, excitations, amplitude)` terms.
    pub fn superposition(basis: BasisSpec, terms: &[(usize, usize, C64)]) -> Result<Self> {
        let mut v = DVector::zeros(basis.dim());
        for &(n, k, amp) in terms {
            if n > basis.fock_cutoff() || k > basis.n_atoms() {
                return Err(Error::invalid(format!("label |{n}, {k}> outside basis {basis}")));
            }
            v[basis.index(n, k)] += amp;
        }
        Self::pure_normalized(basis, v)
    }

    /// Collective ground state `|0, j, -j>`.
    pub fn ground(basis: BasisSpec) -> Self {
        Self::basis_state(basis, 0, 0)
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn as_pure(&self) -> Option<&DVector<C64>> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn as_density(&self) -> Option<&DMatrix<C64>> {
        match &self.data {
            StateData::Density(m) => Some(m),
            StateData::Pure(_) => None,
        }
    }

    pub fn to_density(&self) -> Self {
        match &self.data {
            StateData::Pure(v) => Self {
                basis: self.basis,
                data: StateData::Density(v * v.adjoint()),
            },
            StateData::Density(_) => self.clone(),
        }
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Density(m) => m.clone(),
        }
    }

    /// `||psi||^2` for pure states, `Tr rho` for density matrices.
    pub fn trace(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm_squared(),
            StateData::Density(m) => m.trace().re,
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        match &self.data {
            StateData::Pure(_) => 0.0,
            StateData::Density(m) => dense_max_abs(&(m - m.adjoint())),
        }
    }

    /// Population of the `n = fock_cutoff` photon shell.
    pub fn top_fock_population(&self) -> f64 {
        self.photon_distribution()[self.basis.fock_cutoff()]
    }

    pub fn photon_distribution(&self) -> Vec<f64> {
        let b = self.basis;
        let mut p = vec![0.0; b.fock_dim()];
        for i in 0..b.dim() {
            let (n, _) = b.decompose(i);
            p[n] += match &self.data {
                StateData::Pure(v) => v[i].norm_sqr(),
                StateData::Density(m) => m[(i, i)].re,
            };
        }
        p
    }

    /// Spin-sector reduced density matrix (cavity traced out).
    pub fn reduced_spin(&self) -> DMatrix<C64> {
        let b = self.basis;
        let s = b.spin_dim();
        let rho = self.density_matrix();
        let mut red = DMatrix::zeros(s, s);
        for n in 0..b.fock_dim() {
            for r in 0..s {
                for c in 0..s {
                    red[(r, c)] += rho[(b.index(n, r), b.index(n, c))];
                }
            }
        }
        red
    }

    /// Smallest eigenvalue of the density matrix (0 for pure states).
    pub fn min_eigenvalue(&self) -> f64 {
        match &self.data {
            StateData::Pure(_) => 0.0,
            StateData::Density(m) => {
                let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
                herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Entrywise max modulus of a dense complex matrix.
pub fn dense_max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Warns when the top Fock shell carries more than `1e-6` population.
pub fn check_fock_leakage(state: &QuantumState) -> Option<f64> {
    let p = state.top_fock_population();
    if p > 1e-6 {
        log::warn!(
            "Fock cutoff leakage: population {p:.3e} in |n = {}> exceeds 1e-6; raise fock_cutoff",
            state.basis().fock_cutoff()
        );
        Some(p)
    } else {
        None
    }
}
