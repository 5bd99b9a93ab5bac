//! Normalized-axis plot data derived from a finished run's files.
//!
//! | scenario             | file                        | columns |
//! |----------------------|-----------------------------|---------|
//! | `spectrum_scan`      | `levels_normalized.csv`     | `omega_c_over_omega_q,E1..Ek` (levels over `omega_q`) |
//! | `crossing_vs_N`      | `splitting_vs_n.csv`        | unchanged copy of `splitting.csv` |
//! | `single_photon`      | `exchange_normalized.csv`   | `omega_t,photon_number,spin_excitation,xi2` |
//! | `pulse_drive`/`cw_drive` | `trajectory_normalized.csv` | `gamma_t,photon_number,spin_excitation,xi2` (`omega_q t` without losses) |
//! | `meanfield_protocol` | `protocol_normalized.csv`   | `two_a_over_kappa,t_chi_n,xi2,xi2_db,xi2_analytic,xi2_analytic_db` |
//! | `stationary`         | `stationary_normalized.csv` | `two_a_over_kappa,xi2,xi2_db` |

use std::fs;
use std::path::Path;

use serde_json::Value;

use super::config::Scenario;
use crate::error::{Error, Result};
use crate::observables::to_decibels;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingOutput(format!("column `{name}`")))
    }
}

fn read_text(dir: &Path, name: &str) -> Result<String> {
    fs::read_to_string(dir.join(name)).map_err(|_| Error::MissingOutput(dir.join(name).display().to_string()))
}

fn read_csv(dir: &Path, name: &str) -> Result<Table> {
    let text = read_text(dir, name)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MissingOutput(format!("{name} is empty")))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().map_err(|_| Error::MissingOutput(format!("{name}: unparsable cell `{c}`"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(Table { header, rows })
}

fn read_json(dir: &Path, name: &str) -> Result<Value> {
    Ok(serde_json::from_str(&read_text(dir, name)?)?)
}

fn number(v: &Value, path: &[&str]) -> Result<f64> {
    let mut cur = v;
    for p in path {
        cur = &cur[*p];
    }
    cur.as_f64().ok_or_else(|| Error::MissingOutput(format!("run.json field `{}`", path.join("."))))
}

fn render(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut out = header.join(",").into_bytes();
    out.push(b'\n');
    for r in rows {
        let cols: Vec<String> = r.iter().map(|v| format!("{v:.15e}")).collect();
        out.extend_from_slice(cols.join(",").as_bytes());
        out.push(b'\n');
    }
    out
}

fn db(x: f64) -> f64 {
    to_decibels(x).unwrap_or(f64::NAN)
}

/// Builds the plot-data files for `scenario` from the outputs in `dir`.
/// Returns `(file name, contents)` pairs; nothing is written here.
pub fn emit_figure_data(scenario: Scenario, dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let run = read_json(dir, "run.json")?;
    let files = match scenario {
        Scenario::SpectrumScan => {
            let t = read_csv(dir, "spectrum.csv")?;
            let wq = number(&run, &["omega_q"])?;
            let mut header = vec!["omega_c_over_omega_q".to_string()];
            header.extend(t.header[1..].iter().cloned());
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows = t.rows.iter().map(|r| r.iter().map(|v| v / wq).collect());
            vec![("levels_normalized.csv".to_string(), render(&header, rows))]
        }
        Scenario::CrossingVsN => {
            let text = read_text(dir, "splitting.csv")?;
            vec![("splitting_vs_n.csv".to_string(), text.into_bytes())]
        }
        Scenario::SinglePhoton => {
            let t = read_csv(dir, "trajectory.csv")?;
            let w = number(&run, &["exchange_rate"])?.abs();
            let cols = [
                t.column("t")?,
                t.column("photon_number")?,
                t.column("spin_excitation")?,
                t.column("xi2")?,
            ];
            let rows = t.rows.iter().map(|r| vec![w * r[cols[0]], r[cols[1]], r[cols[2]], r[cols[3]]]);
            vec![(
                "exchange_normalized.csv".to_string(),
                render(&["omega_t", "photon_number", "spin_excitation", "xi2"], rows),
            )]
        }
        Scenario::PulseDrive | Scenario::CwDrive => {
            let t = read_csv(dir, "trajectory.csv")?;
            let gamma = number(&run, &["gamma"])?;
            let (scale, axis) = if gamma > 0.0 {
                (gamma, "gamma_t")
            } else {
                (number(&run, &["omega_q"])?, "omega_q_t")
            };
            let rows = t.rows.iter().map(|r| vec![scale * r[0], r[1], r[2], r[3]]);
            vec![(
                "trajectory_normalized.csv".to_string(),
                render(&[axis, "photon_number", "spin_excitation", "xi2"], rows),
            )]
        }
        Scenario::MeanfieldProtocol => {
            let runs = run["runs"]
                .as_array()
                .ok_or_else(|| Error::MissingOutput("run.json field `runs`".into()))?;
            let mut rows = Vec::new();
            for r in runs {
                let file = r["file"].as_str().ok_or_else(|| Error::MissingOutput("run.json field `file`".into()))?;
                let two_a = number(r, &["two_a_over_kappa"])?;
                let t = read_csv(dir, file)?;
                let (tc, x, xa) = (t.column("t_chi_n")?, t.column("xi2")?, t.column("xi2_analytic")?);
                rows.extend(t.rows.iter().map(|row| vec![two_a, row[tc], row[x], db(row[x]), row[xa], db(row[xa])]));
            }
            vec![(
                "protocol_normalized.csv".to_string(),
                render(&["two_a_over_kappa", "t_chi_n", "xi2", "xi2_db", "xi2_analytic", "xi2_analytic_db"], rows),
            )]
        }
        Scenario::Stationary => {
            let t = read_csv(dir, "stationary.csv")?;
            let (a, x) = (t.column("two_a_over_kappa")?, t.column("xi2")?);
            let rows = t.rows.iter().map(|r| vec![r[a], r[x], db(r[x])]);
            vec![(
                "stationary_normalized.csv".to_string(),
                render(&["two_a_over_kappa", "xi2", "xi2_db"], rows),
            )]
        }
        Scenario::CompareScaling => Vec::new(),
    };
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_upstream_outputs_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let e = emit_figure_data(Scenario::Stationary, dir.path()).unwrap_err();
        assert!(matches!(e, Error::MissingOutput(_)));
        fs::write(dir.path().join("run.json"), "{}").unwrap();
        assert!(matches!(emit_figure_data(Scenario::Stationary, dir.path()), Err(Error::MissingOutput(_))));
    }

    #[test]
    fn splitting_table_passes_through() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("run.json"), "{}").unwrap();
        let body = "n_atoms,location\n2,2.000000000000000e0\n";
        fs::write(dir.path().join("splitting.csv"), body).unwrap();
        let out = emit_figure_data(Scenario::CrossingVsN, dir.path()).unwrap();
        assert_eq!(out[0].1, body.as_bytes());
    }

    #[test]
    fn single_photon_axis_is_scaled() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("run.json"), r#"{"exchange_rate": -0.5}"#).unwrap();
        fs::write(
            dir.path().join("trajectory.csv"),
            "t,photon_number,spin_excitation,xi2,xi2_min,modes_differ\n4,0.5,1,0.9,0.8,1\n",
        )
        .unwrap();
        let out = emit_figure_data(Scenario::SinglePhoton, dir.path()).unwrap();
        let text = String::from_utf8(out[0].1.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("2.000000000000000e0,"), "{text}");
    }
}
