//! Brute-force tensor-product construction for up to three qubits.
//!
//! Used only to cross-check the Dicke-sector operators: the full
//! `2^N (n_max + 1)` space is built explicitly from Pauli matrices and the
//! symmetric sector is reached through an isometry whose columns are the
//! normalized Dicke states.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::BasisSpec;
use crate::error::{Error, Result};

pub struct BruteForceOperators {
    pub n_atoms: usize,
    pub fock_cutoff: usize,
    pub jx: DMatrix<C64>,
    pub jy: DMatrix<C64>,
    pub jz: DMatrix<C64>,
    pub jplus: DMatrix<C64>,
    pub jminus: DMatrix<C64>,
    pub a: DMatrix<C64>,
    pub adag: DMatrix<C64>,
    /// Columns are the Dicke basis vectors `|n, j, m>` written in the qubit basis,
    /// ordered like [`BasisSpec::index`].
    pub isometry: DMatrix<C64>,
}

impl BruteForceOperators {
    pub fn full_dim(&self) -> usize {
        (1 << self.n_atoms) * (self.fock_cutoff + 1)
    }

    /// `V^dagger O V`: restriction of a full-space operator to the symmetric sector.
    pub fn project(&self, op: &DMatrix<C64>) -> DMatrix<C64> {
        self.isometry.adjoint() * op * &self.isometry
    }

    /// Projector onto the symmetric sector inside the full space.
    pub fn symmetric_projector(&self) -> DMatrix<C64> {
        &self.isometry * self.isometry.adjoint()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Builds the qubit-basis operators for `n_atoms <= 3`.
///
/// Full-space index is `n * 2^N + bits`, where bit `i` set means atom `i` is excited.
pub fn brute_force_embed(n_atoms: usize, fock_cutoff: usize) -> Result<BruteForceOperators> {
    if !(1..=3).contains(&n_atoms) {
        return Err(Error::invalid(format!(
            "brute-force embedding supports 1 to 3 atoms, got {n_atoms}"
        )));
    }
    let qubits = 1usize << n_atoms;
    let fock = fock_cutoff + 1;
    let dim = qubits * fock;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);

    let mut jplus = DMatrix::from_element(dim, dim, zero);
    let mut jz = DMatrix::from_element(dim, dim, zero);
    let mut a = DMatrix::from_element(dim, dim, zero);
    for n in 0..fock {
        for bits in 0..qubits {
            let col = n * qubits + bits;
            for atom in 0..n_atoms {
                let mask = 1 << atom;
                // sigma_z / 2 on each atom
                jz[(col, col)] += one * if bits & mask != 0 { 0.5 } else { -0.5 };
                if bits & mask == 0 {
                    jplus[(n * qubits + (bits | mask), col)] += one;
                }
            }
            if n > 0 {
                a[((n - 1) * qubits + bits, col)] = one * (n as f64).sqrt();
            }
        }
    }
    let jminus = jplus.adjoint();
    let jx = (&jplus + &jminus) * C64::new(0.5, 0.0);
    let jy = (&jplus - &jminus) * C64::new(0.0, -0.5);
    let adag = a.adjoint();

    let basis = BasisSpec::new(n_atoms, fock_cutoff)?;
    let mut isometry = DMatrix::from_element(dim, basis.dim(), zero);
    for n in 0..fock {
        for k in 0..=n_atoms {
            let weight = one / binomial(n_atoms, k).sqrt();
            for bits in (0..qubits).filter(|b: &usize| b.count_ones() as usize == k) {
                isometry[(n * qubits + bits, basis.index(n, k))] = weight;
            }
        }
    }

    Ok(BruteForceOperators {
        n_atoms,
        fock_cutoff,
        jx,
        jy,
        jz,
        jplus,
        jminus,
        a,
        adag,
        isometry,
    })
}
