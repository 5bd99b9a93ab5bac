use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::IntegrationStats;
use crate::error::Result;
use crate::hilbert::{BasisSpec, QuantumState, StateData};

/// Magic bytes opening a raw-state dump.
pub const DUMP_MAGIC: &[u8; 8] = b"DKSQTRJ1";

/// Expectation values recorded at one sample instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub photon_number: f64,
    /// `<Jz> + j`.
    pub spin_excitation: f64,
    /// Squeezing in the configured mode, NaN when the mean spin vanishes.
    pub xi2: f64,
    pub xi2_general: f64,
    pub trace: f64,
    pub hermiticity_defect: f64,
    pub top_fock_population: f64,
    /// `<H>` for conservative runs, NaN otherwise.
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub sample: usize,
    pub t: f64,
    pub state: QuantumState,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub basis: BasisSpec,
    pub records: Vec<ObservableRecord>,
    pub snapshots: Vec<Snapshot>,
    pub stats: IntegrationStats,
    /// Largest top-shell population seen, when it exceeded the leakage threshold.
    pub leakage: Option<f64>,
    pub final_min_eigenvalue: Option<f64>,
}

impl Trajectory {
    pub(crate) fn new(basis: BasisSpec) -> Self {
        Self {
            basis,
            records: Vec::new(),
            snapshots: Vec::new(),
            stats: IntegrationStats::default(),
            leakage: None,
            final_min_eigenvalue: None,
        }
    }

    pub(crate) fn push(&mut self, rec: ObservableRecord, sample: usize, stride: usize, state: QuantumState) {
        if stride > 0 && sample.is_multiple_of(stride) {
            self.snapshots.push(Snapshot { sample, t: rec.t, state });
        }
        self.records.push(rec);
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&ObservableRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn max_trace_error(&self) -> f64 {
        self.records.iter().map(|r| (r.trace - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_defect(&self) -> f64 {
        self.records.iter().map(|r| r.hermiticity_defect).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,photon_number,spin_excitation,xi2")?;
        for r in &self.records {
            writeln!(
                w,
                "{:.15e},{:.15e},{:.15e},{:.15e}",
                r.t, r.photon_number, r.spin_excitation, r.xi2
            )?;
        }
        Ok(())
    }

    /// Raw snapshot dump, little endian throughout:
    ///
    /// ```text
    /// magic      8 bytes  "DKSQTRJ1"
    /// n_atoms    u64
    /// fock_cut   u64
    /// dim        u64
    /// count      u64      number of snapshots
    /// per snapshot:
    ///   sample   u64
    ///   t        f64
    ///   kind     u8       0 = state vector (dim entries), 1 = density matrix (dim*dim, column major)
    ///   data     (re f64, im f64) pairs
    /// ```
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        for v in [
            self.basis.n_atoms() as u64,
            self.basis.fock_cutoff() as u64,
            self.basis.dim() as u64,
            self.snapshots.len() as u64,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for s in &self.snapshots {
            w.write_all(&(s.sample as u64).to_le_bytes())?;
            w.write_all(&s.t.to_le_bytes())?;
            let (kind, data): (u8, &[C64]) = match s.state.data() {
                StateData::Pure(v) => (0, v.as_slice()),
                StateData::Density(m) => (1, m.as_slice()),
            };
            w.write_all(&[kind])?;
            for z in data {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }
}
