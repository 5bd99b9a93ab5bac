//! Experiment configuration files.
//!
//! The grammar is TOML. A file has an optional top-level `scenario = "<name>"`
//! and a set of tables (groups). Each scenario accepts a fixed set of groups and
//! keys; anything else is rejected before any computation starts, and all
//! missing required keys are reported together. Physical parameters have no
//! defaults. Numerics and output settings do.
//!
//! | group            | keys                                                        |
//! |------------------|-------------------------------------------------------------|
//! | `[system]`       | `n_atoms`, `omega_q`, `theta`, `g`                          |
//! | `[dissipation]`  | `kappa`, `gamma`                                            |
//! | `[drive]`        | `area`, `sigma`, `t0` (pulse); `amplitude` (cw); `n_photons` |
//! | `[bosonic]`      | `coupling`, `kappa`, `gamma`, `drive_amplitudes`, `drive_min`, `drive_max` |
//! | `[single_photon]`| `varphi`, `bloch_angle`                                     |
//! | `[numerics]`     | scenario-dependent, see [`Scenario::schema`]                |
//! | `[output]`       | `dir`, `states_binary`, `figure_data`                       |
//!
//! For `crossing_vs_N`, `system.n_atoms` is an array of atom numbers.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::dynamics::Tolerances;
use crate::error::{Error, Result};
use crate::models::{effective_coupling, preset, HamiltonianKind, Preset, SystemParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SpectrumScan,
    #[serde(rename = "crossing_vs_N", alias = "crossing_vs_n")]
    CrossingVsN,
    SinglePhoton,
    PulseDrive,
    CwDrive,
    MeanfieldProtocol,
    Stationary,
    CompareScaling,
}

/// Allowed keys of one group; `required` keys have no default.
#[derive(Clone, Copy, Debug)]
pub struct GroupSchema {
    pub name: &'static str,
    pub required: &'static [&'static str],
    pub optional: &'static [&'static str],
}

const fn group(name: &'static str, required: &'static [&'static str], optional: &'static [&'static str]) -> GroupSchema {
    GroupSchema {
        name,
        required,
        optional,
    }
}

const SYSTEM: GroupSchema = group("system", &["n_atoms", "omega_q", "theta", "g"], &[]);
const DISSIPATION: GroupSchema = group("dissipation", &["kappa", "gamma"], &[]);
const TOL: [&str; 2] = ["rtol", "atol"];
const OUTPUT: GroupSchema = group("output", &[], &["dir", "states_binary", "figure_data"]);

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::SpectrumScan,
        Scenario::CrossingVsN,
        Scenario::SinglePhoton,
        Scenario::PulseDrive,
        Scenario::CwDrive,
        Scenario::MeanfieldProtocol,
        Scenario::Stationary,
        Scenario::CompareScaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SpectrumScan => "spectrum_scan",
            Scenario::CrossingVsN => "crossing_vs_N",
            Scenario::SinglePhoton => "single_photon",
            Scenario::PulseDrive => "pulse_drive",
            Scenario::CwDrive => "cw_drive",
            Scenario::MeanfieldProtocol => "meanfield_protocol",
            Scenario::Stationary => "stationary",
            Scenario::CompareScaling => "compare_scaling",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name || s.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Config {
                location: "scenario".into(),
                message: format!(
                    "unknown scenario `{name}`; expected one of {}",
                    Self::ALL.map(|s| s.name()).join(", ")
                ),
            })
    }

    /// Groups accepted by this scenario. Groups without required keys may be omitted.
    pub fn schema(self) -> Vec<GroupSchema> {
        let driven_numerics = group(
            "numerics",
            &["t_stop"],
            &["fock_cutoff", "n_samples", "snapshot_stride", TOL[0], TOL[1]],
        );
        match self {
            Scenario::SpectrumScan => vec![
                SYSTEM,
                group(
                    "numerics",
                    &[],
                    &["fock_cutoff", "n_levels", "scan_min", "scan_max", "scan_points", "hamiltonian"],
                ),
                OUTPUT,
            ],
            Scenario::CrossingVsN => vec![
                SYSTEM,
                group("numerics", &[], &["fock_cutoff", "hamiltonian"]),
                OUTPUT,
            ],
            Scenario::SinglePhoton => vec![
                SYSTEM,
                group("single_photon", &["varphi"], &["bloch_angle"]),
                group("numerics", &[], &["n_samples", "periods", "full_model_cutoff"]),
                OUTPUT,
            ],
            Scenario::PulseDrive => vec![SYSTEM, DISSIPATION, group("drive", &["area"], &["sigma", "t0"]), driven_numerics, OUTPUT],
            Scenario::CwDrive => vec![SYSTEM, DISSIPATION, group("drive", &["amplitude"], &[]), driven_numerics, OUTPUT],
            Scenario::MeanfieldProtocol => vec![
                group("bosonic", &["coupling", "kappa", "gamma", "drive_amplitudes"], &[]),
                group("numerics", &[], &["t_stop_chi_n", "n_samples", TOL[0], TOL[1]]),
                OUTPUT,
            ],
            Scenario::Stationary => vec![
                group("bosonic", &["coupling", "kappa", "gamma", "drive_min", "drive_max"], &[]),
                group("numerics", &[], &["points"]),
                OUTPUT,
            ],
            Scenario::CompareScaling => vec![SYSTEM, DISSIPATION, group("drive", &["n_photons"], &[]), OUTPUT],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn config_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        location: location.into(),
        message: message.into(),
    }
}

/// Checks `table` against the scenario schema, listing every problem at once.
pub fn validate_table(scenario: Scenario, table: &Table) -> Result<()> {
    let schema = scenario.schema();
    let mut problems = Vec::new();
    let mut missing = Vec::new();
    for (key, value) in table {
        if key == "scenario" {
            match value.as_str().map(Scenario::parse) {
                Some(Ok(s)) if s == scenario => {}
                Some(Ok(s)) => problems.push(format!("`scenario = \"{s}\"` does not match the requested `{scenario}`")),
                _ => problems.push("`scenario` must name a known scenario".to_string()),
            }
            continue;
        }
        let Some(g) = schema.iter().find(|g| g.name == key) else {
            problems.push(format!("unknown key or group `{key}` for scenario `{scenario}`"));
            continue;
        };
        let Some(inner) = value.as_table() else {
            problems.push(format!("`{key}` must be a table"));
            continue;
        };
        for k in inner.keys() {
            if !g.required.contains(&k.as_str()) && !g.optional.contains(&k.as_str()) {
                problems.push(format!("unknown key `{key}.{k}`"));
            }
        }
    }
    for g in &schema {
        let inner = table.get(g.name).and_then(Value::as_table);
        for k in g.required {
            if inner.is_none_or(|t| !t.contains_key(*k)) {
                missing.push(format!("{}.{k}", g.name));
            }
        }
    }
    if !missing.is_empty() {
        problems.push(format!("missing required keys: {}", missing.join(", ")));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(config_error(scenario.name(), problems.join("; ")))
    }
}

/// Fills the physical groups a scenario needs from `preset`; keys already in
/// the file take precedence.
pub fn apply_preset(scenario: Scenario, table: &mut Table, p: &Preset) -> Result<()> {
    let omega_q = 1.0;
    let n_atoms = p.n_atoms.round();
    if !(n_atoms >= 1.0 && n_atoms < i64::MAX as f64) {
        return Err(config_error("--preset", format!("preset `{}` has an invalid atom number", p.name)));
    }
    let g = p.g_over_omega_q * omega_q;
    let sys = SystemParams::from_theta(n_atoms as usize, omega_q, p.theta, g, 2.0 * omega_q)?;
    let coupling = effective_coupling(&sys).abs() * n_atoms;
    let mut groups: Vec<(&str, Vec<(&str, Value)>)> = vec![
        (
            "system",
            vec![
                ("n_atoms", Value::Integer(n_atoms as i64)),
                ("omega_q", Value::Float(omega_q)),
                ("theta", Value::Float(p.theta)),
                ("g", Value::Float(g)),
            ],
        ),
        ("dissipation", vec![("kappa", Value::Float(p.kappa)), ("gamma", Value::Float(p.gamma))]),
        ("drive", vec![("n_photons", Value::Float(p.n_photons))]),
        (
            "bosonic",
            vec![
                ("coupling", Value::Float(coupling)),
                ("kappa", Value::Float(p.kappa)),
                ("gamma", Value::Float(p.gamma)),
            ],
        ),
    ];
    let schema = scenario.schema();
    groups.retain(|(name, _)| schema.iter().any(|g| g.name == *name));
    for (name, entries) in groups {
        let allowed = schema.iter().find(|g| g.name == name).unwrap();
        let entry = table.entry(name).or_insert_with(|| Value::Table(Table::new()));
        let Some(t) = entry.as_table_mut() else {
            return Err(config_error(name, "must be a table"));
        };
        for (k, v) in entries {
            if allowed.required.contains(&k) || allowed.optional.contains(&k) {
                t.entry(k).or_insert(v);
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemGroup {
    pub n_atoms: usize,
    pub omega_q: f64,
    pub theta: f64,
    pub g: f64,
}

impl SystemGroup {
    /// Parameters with `omega_c = 2 omega_q`; scenarios that need the exact
    /// resonance locate it themselves.
    pub fn params(&self) -> Result<SystemParams> {
        if !(self.omega_q > 0.0 && self.omega_q.is_finite()) {
            return Err(Error::invalid(format!("omega_q must be positive, got {}", self.omega_q)));
        }
        SystemParams::from_theta(self.n_atoms, self.omega_q, self.theta, self.g, 2.0 * self.omega_q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemRangeGroup {
    pub n_atoms: Vec<usize>,
    pub omega_q: f64,
    pub theta: f64,
    pub g: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationGroup {
    pub kappa: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputGroup {
    pub dir: Option<PathBuf>,
    /// Write full-state snapshots to `states.bin` (driven scenarios).
    pub states_binary: bool,
    /// Write normalized-axis plot data next to the raw outputs.
    pub figure_data: bool,
}

impl Default for OutputGroup {
    fn default() -> Self {
        Self {
            dir: None,
            states_binary: false,
            figure_data: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianChoice {
    Full,
    Rotated,
}

impl HamiltonianChoice {
    pub fn kind(self) -> HamiltonianKind {
        match self {
            HamiltonianChoice::Full => HamiltonianKind::Full,
            HamiltonianChoice::Rotated => HamiltonianKind::Rotated,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanNumerics {
    pub fock_cutoff: usize,
    pub n_levels: usize,
    /// Scan range in units of `omega_q`.
    pub scan_min: f64,
    pub scan_max: f64,
    pub scan_points: usize,
    pub hamiltonian: HamiltonianChoice,
}

impl Default for ScanNumerics {
    fn default() -> Self {
        Self {
            fock_cutoff: 4,
            n_levels: 8,
            scan_min: 1.7,
            scan_max: 2.3,
            scan_points: 401,
            hamiltonian: HamiltonianChoice::Rotated,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossingNumerics {
    pub fock_cutoff: usize,
    pub hamiltonian: HamiltonianChoice,
}

impl Default for CrossingNumerics {
    fn default() -> Self {
        Self {
            fock_cutoff: 3,
            hamiltonian: HamiltonianChoice::Rotated,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinglePhotonGroup {
    pub varphi: f64,
    #[serde(default = "default_bloch_angle")]
    pub bloch_angle: f64,
}

fn default_bloch_angle() -> f64 {
    FRAC_PI_4
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SinglePhotonNumerics {
    pub n_samples: usize,
    /// Window length in exchange periods `pi / |Omega|`.
    pub periods: f64,
    /// When set, the full model is run at this Fock cutoff for comparison.
    pub full_model_cutoff: Option<usize>,
}

impl Default for SinglePhotonNumerics {
    fn default() -> Self {
        Self {
            n_samples: 201,
            periods: 1.0,
            full_model_cutoff: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivenNumerics {
    pub t_stop: f64,
    #[serde(default = "default_driven_cutoff")]
    pub fock_cutoff: usize,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub snapshot_stride: usize,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

fn default_driven_cutoff() -> usize {
    4
}

fn default_samples() -> usize {
    401
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseGroup {
    pub area: f64,
    pub sigma: Option<f64>,
    pub t0: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CwGroup {
    pub amplitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonNumberGroup {
    pub n_photons: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolGroup {
    pub coupling: f64,
    pub kappa: f64,
    pub gamma: f64,
    /// Drive amplitudes `A` (not `2A`).
    pub drive_amplitudes: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolNumerics {
    /// Window length in units of `1 / (chi N)`, per drive amplitude.
    pub t_stop_chi_n: f64,
    pub n_samples: usize,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

impl Default for ProtocolNumerics {
    fn default() -> Self {
        Self {
            t_stop_chi_n: 10.0,
            n_samples: 401,
            rtol: None,
            atol: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryGroup {
    pub coupling: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub drive_min: f64,
    pub drive_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationaryNumerics {
    /// Log-spaced drive amplitudes between `drive_min` and `drive_max`.
    pub points: usize,
}

impl Default for StationaryNumerics {
    fn default() -> Self {
        Self { points: 61 }
    }
}

pub(crate) fn tolerances(base: Tolerances, rtol: Option<f64>, atol: Option<f64>) -> Result<Tolerances> {
    let t = Tolerances {
        rtol: rtol.unwrap_or(base.rtol),
        atol: atol.unwrap_or(base.atol),
        ..base
    };
    if !(t.rtol > 0.0 && t.atol > 0.0) {
        return Err(config_error("numerics", "rtol and atol must be positive"));
    }
    Ok(t)
}

/// Per-scenario settings after validation.
#[derive(Clone, Debug, PartialEq)]
pub enum Settings {
    SpectrumScan(SystemGroup, ScanNumerics),
    CrossingVsN(SystemRangeGroup, CrossingNumerics),
    SinglePhoton(SystemGroup, SinglePhotonGroup, SinglePhotonNumerics),
    PulseDrive(SystemGroup, DissipationGroup, PulseGroup, DrivenNumerics),
    CwDrive(SystemGroup, DissipationGroup, CwGroup, DrivenNumerics),
    MeanfieldProtocol(ProtocolGroup, ProtocolNumerics),
    Stationary(StationaryGroup, StationaryNumerics),
    CompareScaling(SystemGroup, DissipationGroup, PhotonNumberGroup),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub settings: Settings,
    pub output: OutputGroup,
    /// Table after preset merging, as used for the run.
    pub resolved: Table,
}

fn take<T: DeserializeOwned + Default>(table: &Table, name: &str) -> Result<T> {
    match table.get(name) {
        None => Ok(T::default()),
        Some(_) => need(table, name),
    }
}

fn need<T: DeserializeOwned>(table: &Table, name: &str) -> Result<T> {
    let v = table.get(name).cloned().unwrap_or_else(|| Value::Table(Table::new()));
    v.try_into().map_err(|e: toml::de::Error| config_error(name, e.message().to_string()))
}

impl ExperimentConfig {
    /// Parses `text` for `scenario`, merging `preset_name` first when given.
    pub fn parse(scenario: Scenario, text: &str, preset_name: Option<&str>) -> Result<Self> {
        let mut table: Table = text.parse().map_err(|e: toml::de::Error| {
            let location = e
                .span()
                .map(|s| {
                    let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "config".into());
            config_error(location, e.message().to_string())
        })?;
        if let Some(name) = preset_name {
            apply_preset(scenario, &mut table, &preset(name)?)?;
        }
        validate_table(scenario, &table)?;
        let t = &table;
        let settings = match scenario {
            Scenario::SpectrumScan => Settings::SpectrumScan(need(t, "system")?, take(t, "numerics")?),
            Scenario::CrossingVsN => Settings::CrossingVsN(need(t, "system")?, take(t, "numerics")?),
            Scenario::SinglePhoton => {
                Settings::SinglePhoton(need(t, "system")?, need(t, "single_photon")?, take(t, "numerics")?)
            }
            Scenario::PulseDrive => Settings::PulseDrive(
                need(t, "system")?,
                need(t, "dissipation")?,
                need(t, "drive")?,
                need(t, "numerics")?,
            ),
            Scenario::CwDrive => Settings::CwDrive(
                need(t, "system")?,
                need(t, "dissipation")?,
                need(t, "drive")?,
                need(t, "numerics")?,
            ),
            Scenario::MeanfieldProtocol => Settings::MeanfieldProtocol(need(t, "bosonic")?, take(t, "numerics")?),
            Scenario::Stationary => Settings::Stationary(need(t, "bosonic")?, take(t, "numerics")?),
            Scenario::CompareScaling => {
                Settings::CompareScaling(need(t, "system")?, need(t, "dissipation")?, need(t, "drive")?)
            }
        };
        Ok(Self {
            scenario,
            settings,
            output: take(t, "output")?,
            resolved: table,
        })
    }

    /// Groups present in the resolved config, for diagnostics.
    pub fn groups(&self) -> BTreeSet<String> {
        self.resolved.keys().filter(|k| *k != "scenario").cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCAN: &str = "[system]\nn_atoms = 4\nomega_q = 1.0\ntheta = 0.5\ng = 0.1\n";

    #[test]
    fn empty_config_lists_every_missing_key() {
        let err = ExperimentConfig::parse(Scenario::PulseDrive, "", None).unwrap_err();
        let msg = err.to_string();
        assert!(err.is_validation());
        for key in ["system.n_atoms", "system.g", "dissipation.kappa", "drive.area", "numerics.t_stop"] {
            assert!(msg.contains(key), "{msg}");
        }
    }

    #[test]
    fn unknown_keys_and_groups_are_rejected() {
        let e = ExperimentConfig::parse(Scenario::SpectrumScan, &format!("{SCAN}typo = 1\n"), None).unwrap_err();
        assert!(e.to_string().contains("system.typo"), "{e}");
        let e = ExperimentConfig::parse(Scenario::SpectrumScan, &format!("{SCAN}[bosonic]\nkappa = 1.0\n"), None).unwrap_err();
        assert!(e.to_string().contains("`bosonic`"), "{e}");
        let e = ExperimentConfig::parse(Scenario::SpectrumScan, &format!("scenario = \"stationary\"\n{SCAN}"), None).unwrap_err();
        assert!(e.to_string().contains("does not match"), "{e}");
    }

    #[test]
    fn defaults_fill_numerics_only() {
        let c = ExperimentConfig::parse(Scenario::SpectrumScan, SCAN, None).unwrap();
        let Settings::SpectrumScan(s, n) = c.settings else { panic!() };
        assert_eq!(s.n_atoms, 4);
        assert_eq!(n, ScanNumerics::default());
        assert!(c.output.figure_data);
    }

    #[test]
    fn syntax_and_type_errors_carry_location() {
        let e = ExperimentConfig::parse(Scenario::SpectrumScan, "[system]\nn_atoms = = 3\n", None).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let bad = SCAN.replace("n_atoms = 4", "n_atoms = \"four\"");
        let e = ExperimentConfig::parse(Scenario::SpectrumScan, &bad, None).unwrap_err();
        assert!(e.to_string().contains("system"), "{e}");
    }

    #[test]
    fn preset_fills_physical_groups() {
        let c = ExperimentConfig::parse(Scenario::CompareScaling, "", Some("magnetic-molecule")).unwrap();
        let Settings::CompareScaling(s, d, n) = c.settings else { panic!() };
        assert_eq!(s.n_atoms, 1_000_000_000);
        assert_eq!(d.kappa, 1e-5);
        assert_eq!(n.n_photons, 1e12);
        // file values win over the preset
        let c = ExperimentConfig::parse(Scenario::CompareScaling, "[dissipation]\nkappa = 0.5\n", Some("magnetic-molecule")).unwrap();
        let Settings::CompareScaling(_, d, _) = c.settings else { panic!() };
        assert_eq!(d.kappa, 0.5);
        assert!(ExperimentConfig::parse(Scenario::CompareScaling, "", Some("nope")).unwrap_err().is_validation());
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::parse(s.name()).unwrap(), s);
        }
        assert_eq!(Scenario::parse("crossing_vs_n").unwrap(), Scenario::CrossingVsN);
    }
}
