//! Config-driven scenario runs behind the `simulate` binary.
//!
//! Every run writes its payload files, a `run.json` summary, the resolved
//! config and a `manifest.json` into the output directory. Payloads are
//! byte-identical for identical configs; only the manifest's wall time varies.
//!
//! CSV layouts (UTF-8, LF, `{:.15e}` floats):
//!
//! | scenario             | file                    | columns |
//! |----------------------|-------------------------|---------|
//! | `spectrum_scan`      | `spectrum.csv`          | `scan_value,E1..Ek` |
//! | `crossing_vs_N`      | `splitting.csv`         | `n_atoms,location,numeric_half_gap,analytic_half_gap,relative_deviation` |
//! | `single_photon`      | `trajectory.csv`        | `t,photon_number,spin_excitation,xi2,xi2_min,modes_differ` |
//! | `single_photon`      | `full_model.csv`        | `t,photon_number,spin_excitation,xi2` |
//! | `pulse_drive`/`cw_drive` | `trajectory.csv`    | `t,photon_number,spin_excitation,xi2` |
//! | `meanfield_protocol` | `protocol_<i>.csv`      | `t,t_chi_n,xi2,xi2_analytic,a_abs_norm` |
//! | `stationary`         | `stationary.csv`        | `drive_amplitude,two_a_over_kappa,a_abs,n_b,xi2,xi2_db,max_growth_rate` |
//!
//! `modes_differ` is 1 where the fixed-angle and plane-minimized squeezing
//! differ by more than 1%.

pub mod config;
mod figures;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::dynamics::{EvolutionOptions, SinglePhotonInit, Tolerances};
use crate::error::{Error, Result};
use crate::hilbert::BasisSpec;
use crate::meanfield::{
    bosonization_valid, bosonize, compare_protocol_scaling, run_two_step_protocol, stationary_state, BosonicParams,
};
use crate::models::{exchange_rate, DissipationParams};
use crate::observables::to_decibels;
use crate::scenarios::{full_vs_effective, run_driven, single_photon_analytic, DriveShape, DrivenSetup};
use crate::spectrum::{anchored_pair, find_avoided_crossing, half_splitting_vs_n, linspace, scan_cavity_frequency};

pub use config::{ExperimentConfig, Scenario, Settings};
pub use figures::emit_figure_data;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "DICKE_SQUEEZE_THREADS";

/// Largest state-vector dimension a config may request.
const MAX_PURE_DIM: usize = 2_000_000;
/// Largest dimension for density-matrix runs (`dim^2` complex entries).
const MAX_DENSITY_DIM: usize = 3000;

#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Run a named spin-squeezing scenario from a TOML config")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bundled parameter set filling the physical groups the file leaves out.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest levels versus cavity frequency.
    #[command(name = "spectrum_scan")]
    SpectrumScan(RunArgs),
    /// Half-splitting of the first crossing versus atom number.
    #[command(name = "crossing_vs_N", alias = "crossing_vs_n")]
    CrossingVsN(RunArgs),
    /// Closed-form single-photon exchange, optionally against the full model.
    #[command(name = "single_photon")]
    SinglePhoton(RunArgs),
    /// Gaussian pulse on the lossy full model.
    #[command(name = "pulse_drive")]
    PulseDrive(RunArgs),
    /// Continuous drive on the lossy full model.
    #[command(name = "cw_drive")]
    CwDrive(RunArgs),
    /// Two-step mean-field protocol for several drive amplitudes.
    #[command(name = "meanfield_protocol")]
    MeanfieldProtocol(RunArgs),
    /// Stationary squeezing versus drive amplitude.
    #[command(name = "stationary")]
    Stationary(RunArgs),
    /// Scaling estimates against the reference protocol.
    #[command(name = "compare_scaling")]
    CompareScaling(RunArgs),
}

impl Command {
    pub fn split(&self) -> (Scenario, &RunArgs) {
        match self {
            Command::SpectrumScan(a) => (Scenario::SpectrumScan, a),
            Command::CrossingVsN(a) => (Scenario::CrossingVsN, a),
            Command::SinglePhoton(a) => (Scenario::SinglePhoton, a),
            Command::PulseDrive(a) => (Scenario::PulseDrive, a),
            Command::CwDrive(a) => (Scenario::CwDrive, a),
            Command::MeanfieldProtocol(a) => (Scenario::MeanfieldProtocol, a),
            Command::Stationary(a) => (Scenario::Stationary, a),
            Command::CompareScaling(a) => (Scenario::CompareScaling, a),
        }
    }
}

/// Process exit status for a finished run.
pub fn exit_code(result: &Result<RunReport>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(e) if e.is_validation() => 1,
        Err(_) => 2,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub library_version: String,
    pub config_sha256: String,
    pub resolved_config_sha256: String,
    pub preset: Option<String>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects payload files written by one run.
pub(crate) struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Config {
            location: "output.dir".into(),
            message: format!("cannot create `{}`: {e}", dir.display()),
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub(crate) fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::Config {
            location: "output.dir".into(),
            message: format!("cannot write `{}`: {e}", path.display()),
        })?;
        self.files.retain(|f| f.file != name);
        self.files.push(OutputFile {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

fn csv_row(out: &mut Vec<u8>, values: &[f64]) {
    let cols: Vec<String> = values.iter().map(|v| format!("{v:.15e}")).collect();
    out.extend_from_slice(cols.join(",").as_bytes());
    out.push(b'\n');
}

fn numerical(scenario: Scenario) -> impl Fn(Error) -> Error {
    move |e| {
        if e.is_validation() {
            e
        } else {
            Error::Scenario {
                scenario: scenario.name().to_string(),
                source: Box::new(e),
            }
        }
    }
}

fn check_dim(basis: BasisSpec, density: bool) -> Result<()> {
    let limit = if density { MAX_DENSITY_DIM } else { MAX_PURE_DIM };
    let dim = (basis.n_atoms() as u128 + 1) * (basis.fock_cutoff() as u128 + 1);
    if dim > limit as u128 {
        return Err(Error::invalid(format!(
            "space of {} atoms with Fock cutoff {} has dimension {dim}, above the limit {limit}",
            basis.n_atoms(),
            basis.fock_cutoff()
        )));
    }
    Ok(())
}

/// Reads `args.config`, runs the scenario and writes all artifacts.
pub fn run_from_args(scenario: Scenario, args: &RunArgs) -> Result<RunReport> {
    let raw = fs::read(&args.config).map_err(|e| Error::Config {
        location: args.config.display().to_string(),
        message: e.to_string(),
    })?;
    let text = String::from_utf8(raw.clone()).map_err(|_| Error::Config {
        location: args.config.display().to_string(),
        message: "config is not valid UTF-8".into(),
    })?;
    let config = ExperimentConfig::parse(scenario, &text, args.preset.as_deref())?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(scenario.name()));
    run(&config, &raw, args.preset.as_deref(), &out_dir)
}

/// Runs a parsed config into `out_dir`.
pub fn run(config: &ExperimentConfig, raw_config: &[u8], preset: Option<&str>, out_dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let mut out = Outputs::create(out_dir)?;
    let resolved = toml::to_string(&config.resolved).map_err(|e| Error::Config {
        location: "config".into(),
        message: e.to_string(),
    })?;
    out.write("config.resolved.toml", resolved.as_bytes())?;
    log::info!("running {} into {}", config.scenario, out_dir.display());
    execute(config, &mut out).map_err(numerical(config.scenario))?;
    if config.output.figure_data {
        for (name, bytes) in emit_figure_data(config.scenario, out_dir)? {
            out.write(&name, &bytes)?;
        }
    }
    let manifest = Manifest {
        scenario: config.scenario.name().to_string(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(raw_config),
        resolved_config_sha256: sha256_hex(resolved.as_bytes()),
        preset: preset.map(str::to_string),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs: out.files.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::File::create(out_dir.join("manifest.json"))
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| Error::Config {
            location: "output.dir".into(),
            message: e.to_string(),
        })?;
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        manifest,
    })
}

fn execute(config: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    match &config.settings {
        Settings::SpectrumScan(sys, num) => {
            let p = sys.params()?;
            let basis = BasisSpec::new(p.n_atoms, num.fock_cutoff)?;
            check_dim(basis, false)?;
            if !(num.scan_min > 0.0 && num.scan_max > num.scan_min && num.scan_points >= 3) {
                return Err(Error::invalid("scan needs 0 < scan_min < scan_max and at least 3 points"));
            }
            let kind = num.hamiltonian.kind();
            let grid = linspace(num.scan_min * sys.omega_q, num.scan_max * sys.omega_q, num.scan_points);
            let scan = scan_cavity_frequency(&p, basis, kind, &grid, num.n_levels)?;
            let mut csv = Vec::new();
            scan.write_csv(&mut csv)?;
            out.write("spectrum.csv", &csv)?;
            let crossing = anchored_pair(&p, basis, kind, num.n_levels, (1, 0), (0, 2))
                .and_then(|pair| find_avoided_crossing(&scan, pair));
            let crossing = match crossing {
                Ok(c) => json!(c),
                Err(e) => {
                    log::warn!("first crossing not located: {e}");
                    json!({ "error": e.to_string() })
                }
            };
            out.write_json("crossing.json", &crossing)?;
            out.write_json("run.json", &json!({ "omega_q": sys.omega_q, "n_levels": num.n_levels }))
        }
        Settings::CrossingVsN(sys, num) => {
            let first = *sys.n_atoms.first().ok_or_else(|| Error::invalid("system.n_atoms must list at least one value"))?;
            if sys.n_atoms.iter().any(|&n| n < 2) {
                return Err(Error::invalid("the two-atom crossing needs n_atoms >= 2"));
            }
            for &n in &sys.n_atoms {
                check_dim(BasisSpec::new(n, num.fock_cutoff)?, false)?;
            }
            let p = config::SystemGroup {
                n_atoms: first,
                omega_q: sys.omega_q,
                theta: sys.theta,
                g: sys.g,
            }
            .params()?;
            let rows = half_splitting_vs_n(&p, &sys.n_atoms, num.fock_cutoff, num.hamiltonian.kind())?;
            let mut csv = b"n_atoms,location,numeric_half_gap,analytic_half_gap,relative_deviation\n".to_vec();
            for r in &rows {
                csv.extend_from_slice(format!("{},", r.n_atoms).as_bytes());
                csv_row(&mut csv, &[r.location, r.numeric_half_gap, r.analytic_half_gap, r.relative_deviation]);
            }
            out.write("splitting.csv", &csv)?;
            out.write_json("run.json", &json!({ "omega_q": sys.omega_q }))
        }
        Settings::SinglePhoton(sys, sp, num) => {
            let p = sys.params()?;
            let init = SinglePhotonInit::new(sp.varphi)?;
            let omega = exchange_rate(&p)?;
            if !(num.periods > 0.0) || num.n_samples < 2 {
                return Err(Error::invalid("single_photon needs periods > 0 and n_samples >= 2"));
            }
            let t_stop = num.periods * std::f64::consts::PI / omega.abs();
            let rows = single_photon_analytic(&p, init, sp.bloch_angle, t_stop, num.n_samples)?;
            let mut csv = b"t,photon_number,spin_excitation,xi2,xi2_min,modes_differ\n".to_vec();
            let mut flagged = 0usize;
            for r in &rows {
                let differ = (r.xi2 - r.xi2_min).abs() > 0.01 * r.xi2_min.abs();
                flagged += differ as usize;
                let cols: Vec<String> = [r.t, r.photon_number, r.spin_excitation, r.xi2, r.xi2_min]
                    .iter()
                    .map(|v| format!("{v:.15e}"))
                    .collect();
                csv.extend_from_slice(format!("{},{}\n", cols.join(","), differ as u8).as_bytes());
            }
            if flagged > 0 {
                log::warn!("fixed-angle and plane-minimized squeezing differ by more than 1% at {flagged} samples");
            }
            out.write("trajectory.csv", &csv)?;
            let mut summary = json!({
                "exchange_rate": omega,
                "t_stop": t_stop,
                "bloch_angle": sp.bloch_angle,
                "samples_where_modes_differ": flagged,
            });
            if let Some(cutoff) = num.full_model_cutoff {
                check_dim(BasisSpec::new(p.n_atoms, cutoff)?, false)?;
                let cmp = full_vs_effective(&p, init, cutoff, num.n_samples)?;
                let mut csv = Vec::new();
                cmp.trajectory.write_csv(&mut csv)?;
                out.write("full_model.csv", &csv)?;
                summary["full_model"] = json!({
                    "resonance": cmp.resonance,
                    "relative_deviation": {
                        "photon_number": cmp.relative_deviation[0],
                        "spin_excitation": cmp.relative_deviation[1],
                        "xi2": cmp.relative_deviation[2],
                    },
                    "leakage": cmp.trajectory.leakage,
                    "stats": cmp.trajectory.stats,
                });
            }
            out.write_json("run.json", &summary)
        }
        Settings::PulseDrive(sys, diss, pulse, num) => driven(
            config,
            out,
            sys,
            diss,
            num,
            DriveShape::Pulse {
                area: pulse.area,
                sigma: pulse.sigma,
                t0: pulse.t0,
            },
        ),
        Settings::CwDrive(sys, diss, cw, num) => {
            driven(config, out, sys, diss, num, DriveShape::Continuous { amplitude: cw.amplitude })
        }
        Settings::MeanfieldProtocol(group, num) => {
            let tol = config::tolerances(Tolerances::default(), num.rtol, num.atol)?;
            if group.drive_amplitudes.is_empty() {
                return Err(Error::invalid("bosonic.drive_amplitudes must not be empty"));
            }
            let mut runs = Vec::new();
            for (i, &amp) in group.drive_amplitudes.iter().enumerate() {
                let bp = BosonicParams::new(group.coupling, group.kappa, group.gamma, amp)?;
                let chi_n = bp.chi_n();
                if !(chi_n > 0.0) {
                    return Err(Error::invalid(format!("drive amplitude {amp} gives no squeezing rate (chi N = {chi_n})")));
                }
                let run = run_two_step_protocol(&bp, num.t_stop_chi_n / chi_n, num.n_samples, &tol)?;
                let mut csv = b"t,t_chi_n,xi2,xi2_analytic,a_abs_norm\n".to_vec();
                for (k, &t) in run.trajectory.times.iter().enumerate() {
                    let a = run.trajectory.states[k].a_mean.norm() / bp.sqrt_n_ph();
                    csv_row(&mut csv, &[t, t * chi_n, run.xi2[k], run.analytic[k], a]);
                }
                out.write(&format!("protocol_{i}.csv"), &csv)?;
                runs.push(json!({
                    "file": format!("protocol_{i}.csv"),
                    "drive_amplitude": amp,
                    "two_a_over_kappa": 2.0 * amp / group.kappa,
                    "chi_n": chi_n,
                    "floor": run.floor,
                    "floor_db": to_decibels(run.floor)?,
                    "min_xi2": run.min_xi2,
                    "t_min": run.t_min,
                    "validity": run.validity,
                    "stats": run.trajectory.stats,
                }));
            }
            out.write_json("run.json", &json!({ "runs": runs }))
        }
        Settings::Stationary(group, num) => {
            if !(group.drive_min > 0.0 && group.drive_max > group.drive_min) || num.points < 2 {
                return Err(Error::invalid("stationary scan needs 0 < drive_min < drive_max and points >= 2"));
            }
            let base = BosonicParams::new(group.coupling, group.kappa, group.gamma, group.drive_min)?;
            let logs = linspace(group.drive_min.ln(), group.drive_max.ln(), num.points);
            let mut csv = b"drive_amplitude,two_a_over_kappa,a_abs,n_b,xi2,xi2_db,max_growth_rate\n".to_vec();
            for l in logs {
                let amp = l.exp();
                let s = stationary_state(&base.with_drive(amp))?;
                csv_row(
                    &mut csv,
                    &[amp, 2.0 * amp / group.kappa, s.a_mean.norm(), s.n_b, s.xi2, to_decibels(s.xi2)?, s.max_growth_rate],
                );
            }
            out.write("stationary.csv", &csv)?;
            out.write_json("run.json", &json!({ "kappa": group.kappa, "points": num.points }))
        }
        Settings::CompareScaling(sys, diss, drive) => {
            let p = sys.params()?;
            let d = DissipationParams::new(diss.kappa, diss.gamma)?;
            if !(drive.n_photons > 0.0) {
                return Err(Error::invalid("drive.n_photons must be positive"));
            }
            let bp = bosonize(&p, &d, 0.5 * d.kappa * drive.n_photons.sqrt())?;
            let cmp = compare_protocol_scaling(&bp, &p)?;
            // spin-mode occupation of a minimum-uncertainty state squeezed to the floor
            let f = cmp.protocol_floor;
            let bosonic_ok = bosonization_valid(p.n_atoms as f64, 0.25 * (1.0 / f + f - 2.0));
            out.write_json("comparison.json", &json!({ "bosonic": bp, "comparison": cmp, "bosonic_map_valid": bosonic_ok }))?;
            out.write_json("run.json", &json!({}))
        }
    }
}

fn driven(
    config: &ExperimentConfig,
    out: &mut Outputs,
    sys: &config::SystemGroup,
    diss: &config::DissipationGroup,
    num: &config::DrivenNumerics,
    shape: DriveShape,
) -> Result<()> {
    let params = sys.params()?;
    let basis = BasisSpec::new(params.n_atoms, num.fock_cutoff)?;
    check_dim(basis, true)?;
    if !(num.t_stop > 0.0) || num.n_samples < 2 {
        return Err(Error::invalid("numerics.t_stop must be positive and n_samples >= 2"));
    }
    let setup = DrivenSetup {
        params,
        dissipation: DissipationParams::new(diss.kappa, diss.gamma)?,
        fock_cutoff: num.fock_cutoff,
        t_stop: num.t_stop,
        n_samples: num.n_samples,
    };
    let options = EvolutionOptions {
        tolerances: Some(config::tolerances(Tolerances::default(), num.rtol, num.atol)?),
        snapshot_stride: if config.output.states_binary { num.snapshot_stride.max(1) } else { 0 },
        ..EvolutionOptions::default()
    };
    let run = run_driven(&setup, shape, options)?;
    let t = &run.trajectory;
    let mut csv = Vec::new();
    t.write_csv(&mut csv)?;
    out.write("trajectory.csv", &csv)?;
    if config.output.states_binary {
        let mut bin = Vec::new();
        t.write_binary(&mut bin)?;
        out.write("states.bin", &bin)?;
    }
    out.write_json(
        "run.json",
        &json!({
            "resonance": run.resonance,
            "drive": run.drive,
            "gamma": diss.gamma,
            "omega_q": sys.omega_q,
            "leakage": t.leakage,
            "max_trace_error": t.max_trace_error(),
            "max_hermiticity_defect": t.max_hermiticity_defect(),
            "final_min_eigenvalue": t.final_min_eigenvalue,
            "stats": t.stats,
        }),
    )
}
