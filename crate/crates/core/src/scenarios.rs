//! Ready-made physical setups shared by the CLI and the test suites.
//!
//! Dynamics with the full model run in the rotated frame, where the bare labels
//! `(photons, excitations)` refer to the spin eigenbasis and so match the
//! states used by the effective model.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    analytic_single_photon, evolve_lindblad, evolve_pure, EvolutionOptions, EvolutionProblem, SinglePhotonInit,
    TimeGrid, Trajectory,
};
use crate::error::{Error, Result};
use crate::hilbert::BasisSpec;
use crate::models::{exchange_rate, DissipationParams, DriveSpec, HamiltonianKind, SystemParams};
use crate::observables::{squeezing_from_moments, xi2_along, SpinObservables, SqueezingMode};
use crate::spectrum::{anchored_pair, default_grid, eigenspectrum, find_avoided_crossing, scan_cavity_frequency};

/// Dispersively shifted one-photon/two-atom resonance of the rotated model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    /// Cavity frequency at the minimum gap.
    pub omega_c: f64,
    pub gap: f64,
    /// Mean transition energy of the hybridized pair above the ground state.
    pub transition: f64,
}

/// Locates the crossing between the levels anchored to `|1, -j>` and `|0, -j+2>`.
pub fn find_resonance(p: &SystemParams, basis: BasisSpec) -> Result<Resonance> {
    let kind = HamiltonianKind::Rotated;
    let n_levels = 6.min(basis.dim());
    let pair = anchored_pair(&p.with_omega_c(2.0 * p.omega_q()), basis, kind, n_levels, (1, 0), (0, 2))?;
    let scan = scan_cavity_frequency(p, basis, kind, &default_grid(p.omega_q()), pair.1 + 1)?;
    let report = find_avoided_crossing(&scan, pair)?;
    let h = kind.build(&p.with_omega_c(report.location), basis)?;
    let e = eigenspectrum(&h, pair.1 + 1)?.values;
    Ok(Resonance {
        omega_c: report.location,
        gap: report.gap,
        transition: 0.5 * (e[pair.0] + e[pair.1]) - e[0],
    })
}

/// One row of the closed-form single-photon evolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinglePhotonRow {
    pub t: f64,
    pub photon_number: f64,
    pub spin_excitation: f64,
    /// Squeezing along the fixed Bloch angle.
    pub xi2: f64,
    /// Squeezing minimized over the xy-plane.
    pub xi2_min: f64,
}

/// Analytic single-photon exchange on `[0, t_stop]`; `xi2` is evaluated at `bloch_angle`.
pub fn single_photon_analytic(
    p: &SystemParams,
    init: SinglePhotonInit,
    bloch_angle: f64,
    t_stop: f64,
    n_samples: usize,
) -> Result<Vec<SinglePhotonRow>> {
    let basis = BasisSpec::new(p.n_atoms, 1)?;
    let obs = SpinObservables::new(basis);
    TimeGrid::new(0.0, t_stop, n_samples)?
        .times()
        .into_iter()
        .map(|t| {
            let s = analytic_single_photon(p, init, basis, t)?;
            let m = obs.moments(&s.state)?;
            Ok(SinglePhotonRow {
                t,
                photon_number: s.photon_number,
                spin_excitation: s.spin_excitation,
                xi2: xi2_along(&m, p.n_atoms, bloch_angle)?,
                xi2_min: squeezing_from_moments(&m, p.n_atoms, SqueezingMode::XyPlane)?.xi2,
            })
        })
        .collect()
}

/// Time at which the analytic exchange completes, `pi / (2 |Omega|)`.
pub fn full_transfer_time(p: &SystemParams) -> Result<f64> {
    Ok(std::f64::consts::FRAC_PI_2 / exchange_rate(p)?.abs())
}

#[derive(Clone, Debug)]
pub struct FullVsEffective {
    pub resonance: Resonance,
    pub trajectory: Trajectory,
    pub analytic: Vec<SinglePhotonRow>,
    /// Max deviation over the window divided by the analytic peak, for
    /// photon number, spin excitation and `xi2` (plane-minimized).
    pub relative_deviation: [f64; 3],
}

/// Evolves `cos(phi)|0,-j> + sin(phi)|1,-j>` under the full model at its
/// numerically located resonance for one exchange period `pi / |Omega|`, and
/// compares with the effective-model closed form.
pub fn full_vs_effective(
    p: &SystemParams,
    init: SinglePhotonInit,
    fock_cutoff: usize,
    n_samples: usize,
) -> Result<FullVsEffective> {
    let basis = BasisSpec::new(p.n_atoms, fock_cutoff)?;
    let resonance = find_resonance(p, basis)?;
    let period = 2.0 * full_transfer_time(p)?;
    let prob = EvolutionProblem {
        hamiltonian: HamiltonianKind::Rotated,
        params: p.with_omega_c(resonance.omega_c),
        basis,
        dissipation: DissipationParams::none(),
        drive: DriveSpec::None,
        initial: init.state(basis)?,
        times: TimeGrid::new(0.0, period, n_samples)?,
        options: EvolutionOptions {
            snapshot_stride: 0,
            squeezing_mode: SqueezingMode::XyPlane,
            ..EvolutionOptions::default()
        },
    };
    let trajectory = evolve_pure(&prob)?;
    let analytic = single_photon_analytic(p, init, std::f64::consts::FRAC_PI_4, period, n_samples)?;
    let dev = |f: &dyn Fn(usize) -> (f64, f64)| {
        let (mut worst, mut peak) = (0.0f64, 0.0f64);
        for i in 0..n_samples {
            let (num, ana) = f(i);
            worst = worst.max((num - ana).abs());
            peak = peak.max(ana.abs());
        }
        worst / peak
    };
    let r = &trajectory.records;
    let relative_deviation = [
        dev(&|i| (r[i].photon_number, analytic[i].photon_number)),
        dev(&|i| (r[i].spin_excitation, analytic[i].spin_excitation)),
        dev(&|i| (r[i].xi2, analytic[i].xi2_min)),
    ];
    Ok(FullVsEffective {
        resonance,
        trajectory,
        analytic,
        relative_deviation,
    })
}

/// Driven, lossy setup from the ground state at the located resonance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivenSetup {
    pub params: SystemParams,
    pub dissipation: DissipationParams,
    pub fock_cutoff: usize,
    pub t_stop: f64,
    pub n_samples: usize,
}

#[derive(Clone, Debug)]
pub struct DrivenRun {
    pub resonance: Resonance,
    pub drive: DriveSpec,
    pub trajectory: Trajectory,
}

/// Drive applied at the located resonance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveShape {
    /// Gaussian pulse of the given area; `sigma` and `t0` default to `20/omega_q` and `5 sigma`.
    Pulse {
        area: f64,
        sigma: Option<f64>,
        t0: Option<f64>,
    },
    Continuous { amplitude: f64 },
}

/// Runs `setup` from the ground state with the drive tuned to the hybridized pair.
pub fn run_driven(setup: &DrivenSetup, shape: DriveShape, options: EvolutionOptions) -> Result<DrivenRun> {
    let basis = BasisSpec::new(setup.params.n_atoms, setup.fock_cutoff)?;
    let resonance = find_resonance(&setup.params, basis)?;
    let w = resonance.transition;
    let drive = match shape {
        DriveShape::Pulse { area, sigma, t0 } => {
            let mut d = DriveSpec::default_pulse(area, w, setup.params.omega_q());
            if let DriveSpec::GaussianPulse { sigma: s, t0: c, .. } = &mut d {
                *s = sigma.unwrap_or(*s);
                *c = t0.unwrap_or(5.0 * *s);
            }
            d
        }
        DriveShape::Continuous { amplitude } => DriveSpec::ContinuousWave { amplitude, omega_d: w },
    };
    drive.validate()?;
    let prob = EvolutionProblem {
        hamiltonian: HamiltonianKind::Rotated,
        params: setup.params.with_omega_c(resonance.omega_c),
        basis,
        dissipation: setup.dissipation,
        drive,
        initial: crate::hilbert::QuantumState::ground(basis),
        times: TimeGrid::new(0.0, setup.t_stop, setup.n_samples)?,
        options,
    };
    let trajectory = match shape {
        DriveShape::Continuous { .. } => crate::dynamics::cw_drive_run(&prob)?,
        DriveShape::Pulse { .. } => evolve_lindblad(&prob)?,
    };
    Ok(DrivenRun {
        resonance,
        drive,
        trajectory,
    })
}

fn observables_only() -> EvolutionOptions {
    EvolutionOptions {
        snapshot_stride: 0,
        ..EvolutionOptions::default()
    }
}

/// Gaussian pulse of area `area` (default width), resonant with the hybridized pair.
pub fn pulse_drive(setup: &DrivenSetup, area: f64) -> Result<DrivenRun> {
    let shape = DriveShape::Pulse {
        area,
        sigma: None,
        t0: None,
    };
    run_driven(setup, shape, observables_only())
}

/// Continuous drive of amplitude `amplitude`, resonant with the hybridized pair.
pub fn cw_drive(setup: &DrivenSetup, amplitude: f64) -> Result<DrivenRun> {
    run_driven(setup, DriveShape::Continuous { amplitude }, observables_only())
}

/// Pearson correlation of two equally long series.
pub fn correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("correlation needs two series of equal length >= 2"));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// `cos(phi)|0,-j> + sin(phi)|1,-j>` as amplitudes, for callers building their own problems.
pub fn single_photon_amplitudes(varphi: f64) -> [C64; 2] {
    [C64::new(varphi.cos(), 0.0), C64::new(varphi.sin(), 0.0)]
}
