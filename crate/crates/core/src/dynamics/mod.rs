//! Closed and open time evolution on the Fock x Dicke space.
//!
//! Density matrices are integrated in the form `rho' = K + K^dag + sum_k L_k rho L_k^dag`
//! with `K = -i H_nh rho` and `H_nh = H(t) - (i/2) sum_k L_k^dag L_k`, which is
//! algebraically the Lindblad equation and keeps `rho` Hermitian by construction.

mod integrator;
mod trajectory;

pub use integrator::{integrate, IntegrationStats, Tolerances};
pub use trajectory::{ObservableRecord, Snapshot, Trajectory, DUMP_MAGIC};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    check_fock_leakage, collective_spin, photon, photon_quadrature, BasisSpec, OperatorMatrix, PhotonOp,
    QuantumState, SparseMatrix, SpinOp, StateData,
};
use crate::models::{exchange_rate, DissipationParams, DriveSpec, HamiltonianKind, SystemParams};
use crate::observables::{expectation, SpinObservables, SqueezingMode};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub n_samples: usize,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, n_samples: usize) -> Result<Self> {
        let g = Self { start, stop, n_samples };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stop > self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::invalid(format!(
                "time grid must be strictly increasing (start = {}, stop = {})",
                self.start, self.stop
            )));
        }
        if self.n_samples < 2 {
            return Err(Error::invalid("time grid needs at least two samples"));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        crate::spectrum::linspace(self.start, self.stop, self.n_samples)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionOptions {
    /// `None` picks [`Tolerances::pure_default`] or [`Tolerances::default`] by path.
    pub tolerances: Option<Tolerances>,
    /// Keep the full state every `snapshot_stride` samples; 0 keeps observables only.
    pub snapshot_stride: usize,
    /// Mode used for the `xi2` column.
    pub squeezing_mode: SqueezingMode,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self {
            tolerances: None,
            snapshot_stride: 1,
            squeezing_mode: SqueezingMode::XyPlane,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionProblem {
    pub hamiltonian: HamiltonianKind,
    pub params: SystemParams,
    pub basis: BasisSpec,
    pub dissipation: DissipationParams,
    pub drive: DriveSpec,
    pub initial: QuantumState,
    pub times: TimeGrid,
    pub options: EvolutionOptions,
}

impl EvolutionProblem {
    fn validate(&self) -> Result<()> {
        self.basis.ensure_same(&self.initial.basis())?;
        self.params.validate()?;
        self.dissipation.validate()?;
        self.drive.validate()?;
        self.times.validate()?;
        match &self.options.tolerances {
            Some(t) => t.validate(),
            None => Ok(()),
        }
    }
}

/// Superpositions `cos(phi)|0, j, -j> + sin(phi)|1, j, -j>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinglePhotonInit {
    pub varphi: f64,
}

impl SinglePhotonInit {
    pub fn new(varphi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&varphi) {
            return Err(Error::invalid(format!("varphi must lie in [0, pi/2], got {varphi}")));
        }
        Ok(Self { varphi })
    }

    pub fn state(&self, basis: BasisSpec) -> Result<QuantumState> {
        if basis.fock_cutoff() < 1 {
            return Err(Error::invalid("single-photon states need fock_cutoff >= 1"));
        }
        QuantumState::superposition(
            basis,
            &[
                (0, 0, C64::new(self.varphi.cos(), 0.0)),
                (1, 0, C64::new(self.varphi.sin(), 0.0)),
            ],
        )
    }
}

#[derive(Clone, Debug)]
pub struct AnalyticSample {
    pub state: QuantumState,
    pub photon_number: f64,
    pub spin_excitation: f64,
}

/// Closed-form resonant evolution under the effective interaction,
/// `cos(phi)|0,-j> + sin(phi) cos(W t)|1,-j> - i sin(phi) sin(W t)|0,-j+2>`
/// with the signed exchange rate `W = g_eff sqrt(2N(N-1))`.
pub fn analytic_single_photon(
    p: &SystemParams,
    init: SinglePhotonInit,
    basis: BasisSpec,
    t: f64,
) -> Result<AnalyticSample> {
    let w = exchange_rate(p)?;
    if basis.n_atoms() != p.n_atoms || basis.fock_cutoff() < 1 {
        return Err(Error::invalid(format!(
            "analytic single-photon path needs N = {} and fock_cutoff >= 1, got {basis}",
            p.n_atoms
        )));
    }
    let (c, s) = (init.varphi.cos(), init.varphi.sin());
    let mut v = DVector::zeros(basis.dim());
    v[basis.index(0, 0)] = C64::new(c, 0.0);
    v[basis.index(1, 0)] = C64::new(s * (w * t).cos(), 0.0);
    v[basis.index(0, 2)] = C64::new(0.0, -s * (w * t).sin());
    Ok(AnalyticSample {
        state: QuantumState::pure(basis, v)?,
        photon_number: (s * (w * t).cos()).powi(2),
        spin_excitation: 2.0 * (s * (w * t).sin()).powi(2),
    })
}

/// `L` operators with their rates folded in: `sqrt(kappa) a`, `sqrt(gamma / N) J-`.
pub fn collapse_operators(basis: BasisSpec, d: &DissipationParams) -> Vec<SparseMatrix> {
    let mut ops = Vec::new();
    if d.kappa > 0.0 {
        ops.push(photon(basis, PhotonOp::Annihilate).matrix().scale_real(d.kappa.sqrt()));
    }
    if d.gamma > 0.0 {
        let rate = d.gamma / basis.n_atoms() as f64;
        ops.push(collective_spin(basis, SpinOp::Jminus).matrix().scale_real(rate.sqrt()));
    }
    ops
}

/// Right-hand side of the master equation with cached operators.
pub struct LindbladGenerator<D: Fn(f64) -> f64> {
    dim: usize,
    h_nh: SparseMatrix,
    drive_op: Option<SparseMatrix>,
    drive: D,
    jumps: Vec<SparseMatrix>,
    k: Vec<C64>,
    m: Vec<C64>,
    mt: Vec<C64>,
}

impl<D: Fn(f64) -> f64> LindbladGenerator<D> {
    /// `h0` is the static Hamiltonian, `drive_op` is multiplied by `drive(t)`.
    pub fn new(h0: &SparseMatrix, drive_op: Option<SparseMatrix>, drive: D, jumps: Vec<SparseMatrix>) -> Self {
        let dim = h0.dim();
        let mut h_nh = h0.clone();
        for l in &jumps {
            let ll = l.adjoint().matmul(l);
            h_nh = h_nh.axpy(C64::new(0.0, -0.5), &ll);
        }
        Self {
            dim,
            h_nh,
            drive_op,
            drive,
            jumps,
            k: vec![C64::new(0.0, 0.0); dim * dim],
            m: vec![C64::new(0.0, 0.0); dim * dim],
            mt: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = d rho / dt` for column-major `rho`.
    pub fn apply(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let minus_i = C64::new(0.0, -1.0);
        self.h_nh.mul_columns_into(minus_i, rho, &mut self.k, false);
        if let Some(x) = &self.drive_op {
            let f = (self.drive)(t);
            if f != 0.0 {
                x.mul_columns_into(minus_i * f, rho, &mut self.k, true);
            }
        }
        for j in 0..d {
            for i in 0..d {
                out[i + j * d] = self.k[i + j * d] + self.k[j + i * d].conj();
            }
        }
        for l in &self.jumps {
            l.mul_columns_into(C64::new(1.0, 0.0), rho, &mut self.m, false);
            for j in 0..d {
                for i in 0..d {
                    self.mt[i + j * d] = self.m[j + i * d].conj();
                }
            }
            l.mul_columns_into(C64::new(1.0, 0.0), &self.mt, out, true);
        }
    }
}

/// Integrates a density matrix under a generic Lindblad generator, calling
/// `observe(i, t, rho)` at each sample time.
pub fn integrate_density<D, O>(
    gen: &mut LindbladGenerator<D>,
    rho0: &DMatrix<C64>,
    times: &[f64],
    tol: &Tolerances,
    observe: O,
) -> Result<(DMatrix<C64>, IntegrationStats)>
where
    D: Fn(f64) -> f64,
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    let d = gen.dim();
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(Error::invalid("initial density matrix does not match the generator dimension"));
    }
    let t0 = times.first().copied().unwrap_or(0.0);
    let (y, stats) = integrate(
        |t, y, dy| gen.apply(t, y, dy),
        t0,
        rho0.as_slice().to_vec(),
        times,
        tol,
        observe,
    )?;
    Ok((DMatrix::from_vec(d, d, y), stats))
}

/// Per-sample observables with cached operators.
struct Recorder {
    basis: BasisSpec,
    number: OperatorMatrix,
    jz: OperatorMatrix,
    spin: SpinObservables,
    mode: SqueezingMode,
    hamiltonian: Option<OperatorMatrix>,
}

impl Recorder {
    fn new(basis: BasisSpec, mode: SqueezingMode, hamiltonian: Option<OperatorMatrix>) -> Self {
        Self {
            basis,
            number: photon(basis, PhotonOp::Number),
            jz: collective_spin(basis, SpinOp::Jz),
            spin: SpinObservables::new(basis),
            mode,
            hamiltonian,
        }
    }

    fn record(&self, t: f64, state: &QuantumState) -> Result<ObservableRecord> {
        let j = self.basis.j();
        let moments = self.spin.moments(state)?;
        let xi = |mode| {
            crate::observables::squeezing_from_moments(&moments, self.basis.n_atoms(), mode)
                .map(|r| r.xi2)
                .unwrap_or(f64::NAN)
        };
        let energy = match &self.hamiltonian {
            Some(h) => expectation(state, h)?.re,
            None => f64::NAN,
        };
        Ok(ObservableRecord {
            t,
            photon_number: expectation(state, &self.number)?.re,
            spin_excitation: expectation(state, &self.jz)?.re + j,
            xi2: xi(self.mode),
            xi2_general: xi(SqueezingMode::General),
            trace: state.trace(),
            hermiticity_defect: state.hermiticity_defect(),
            top_fock_population: state.top_fock_population(),
            energy,
        })
    }
}

fn finish(mut traj: Trajectory, final_state: &QuantumState) -> Trajectory {
    traj.leakage = check_fock_leakage(final_state);
    let worst = traj.records.iter().map(|r| r.top_fock_population).fold(0.0, f64::max);
    if traj.leakage.is_none() && worst > 1e-6 {
        log::warn!("Fock cutoff leakage: population {worst:.3e} in the top shell during the run");
        traj.leakage = Some(worst);
    }
    traj
}

/// Schrodinger evolution of a pure state; drives enter through `H(t)`.
pub fn evolve_pure(prob: &EvolutionProblem) -> Result<Trajectory> {
    prob.validate()?;
    if !prob.dissipation.is_lossless() {
        return Err(Error::invalid("evolve_pure requires zero dissipation; use evolve_lindblad"));
    }
    let psi0 = prob
        .initial
        .as_pure()
        .ok_or_else(|| Error::invalid("evolve_pure requires a pure initial state"))?;
    let h0 = prob.hamiltonian.build(&prob.params, prob.basis)?;
    let x = photon_quadrature(prob.basis);
    let drive = prob.drive;
    let has_drive = !drive.is_none();
    let recorder = Recorder::new(prob.basis, prob.options.squeezing_mode, drive.is_none().then(|| h0.clone()));
    let times = prob.times.times();
    let stride = prob.options.snapshot_stride;
    let mut traj = Trajectory::new(prob.basis);
    let minus_i = C64::new(0.0, -1.0);
    let mut scratch = vec![C64::new(0.0, 0.0); prob.basis.dim()];
    let (psi, stats) = integrate(
        |t, y, dy| {
            h0.matrix().mul_vec_into(y, dy);
            if has_drive {
                let f = drive.amplitude_at(t);
                if f != 0.0 {
                    x.matrix().mul_vec_into(y, &mut scratch);
                    for (a, b) in dy.iter_mut().zip(&scratch) {
                        *a += b * f;
                    }
                }
            }
            dy.iter_mut().for_each(|v| *v *= minus_i);
        },
        prob.times.start,
        psi0.as_slice().to_vec(),
        &times,
        &prob.options.tolerances.unwrap_or_else(Tolerances::pure_default),
        |i, t, y| {
            let state = QuantumState::pure(prob.basis, DVector::from_column_slice(y))?;
            traj.push(recorder.record(t, &state)?, i, stride, state);
            Ok(())
        },
    )?;
    traj.stats = stats;
    let final_state = QuantumState::pure(prob.basis, DVector::from_vec(psi))?;
    Ok(finish(traj, &final_state))
}

/// Lindblad evolution with cavity decay `kappa D[a]` and collective decay `(gamma/N) D[J-]`.
pub fn evolve_lindblad(prob: &EvolutionProblem) -> Result<Trajectory> {
    prob.validate()?;
    let rho0 = prob.initial.density_matrix();
    let h0 = prob.hamiltonian.build(&prob.params, prob.basis)?;
    let drive = prob.drive;
    let drive_op = (!drive.is_none()).then(|| photon_quadrature(prob.basis).into_matrix());
    let jumps = collapse_operators(prob.basis, &prob.dissipation);
    let conservative = drive.is_none() && jumps.is_empty();
    let mut gen = LindbladGenerator::new(h0.matrix(), drive_op, move |t| drive.amplitude_at(t), jumps);
    let recorder = Recorder::new(prob.basis, prob.options.squeezing_mode, conservative.then(|| h0.clone()));
    let times = prob.times.times();
    let stride = prob.options.snapshot_stride;
    let d = prob.basis.dim();
    let mut traj = Trajectory::new(prob.basis);
    let tol = prob.options.tolerances.unwrap_or_default();
    let (rho, stats) = integrate_density(&mut gen, &rho0, &times, &tol, |i, t, y| {
        let state = QuantumState::density(prob.basis, DMatrix::from_column_slice(d, d, y))?;
        traj.push(recorder.record(t, &state)?, i, stride, state);
        Ok(())
    })?;
    traj.stats = stats;
    let final_state = QuantumState::density(prob.basis, rho)?;
    traj.final_min_eigenvalue = Some(final_state.min_eigenvalue());
    Ok(finish(traj, &final_state))
}

/// Long continuous-wave run; the drive must be [`DriveSpec::ContinuousWave`].
pub fn cw_drive_run(prob: &EvolutionProblem) -> Result<Trajectory> {
    if !matches!(prob.drive, DriveSpec::ContinuousWave { .. }) {
        return Err(Error::invalid("cw_drive_run needs a continuous-wave drive"));
    }
    evolve_lindblad(prob)
}

/// Matches [`StateData`] for callers that only need the raw storage.
pub fn state_storage(state: &QuantumState) -> &[C64] {
    match state.data() {
        StateData::Pure(v) => v.as_slice(),
        StateData::Density(m) => m.as_slice(),
    }
}
