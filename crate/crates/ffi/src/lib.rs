//! C ABI for `dicke-squeeze`.
//!
//! Objects are opaque handles created by `dsq_*_new`/`dsq_*_run` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`DsqStatus`]; on failure the message is available from
//! [`dsq_last_error_message`] on the same thread. Output buffers follow one
//! convention: the caller passes a pointer and capacity, the call writes up to
//! the capacity and always reports the full length through `out_len`, returning
//! `DSQ_BUFFER_TOO_SMALL` when it did not fit. Passing a null buffer with zero
//! capacity is a valid way to query the length.
//!
//! Handles are not synchronized; use one handle from one thread at a time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dicke_squeeze::cli::{run, ExperimentConfig, Scenario};
use dicke_squeeze::dynamics::SinglePhotonInit;
use dicke_squeeze::hilbert::BasisSpec;
use dicke_squeeze::meanfield::{analytic_floor, run_two_step_protocol, stationary_state, BosonicParams};
use dicke_squeeze::models::{effective_coupling, exchange_rate, DissipationParams, HamiltonianKind, SystemParams};
use dicke_squeeze::scenarios::{find_resonance, run_driven, single_photon_analytic, DriveShape, DrivenSetup};
use dicke_squeeze::dynamics::{EvolutionOptions, Tolerances};
use dicke_squeeze::spectrum::eigenvalues;
use dicke_squeeze::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DsqStatus {
    DsqOk = 0,
    DsqNullPointer = 1,
    DsqInvalidArgument = 2,
    DsqNumericalFailure = 3,
    DsqIoError = 4,
    DsqBufferTooSmall = 5,
    DsqPanic = 6,
}

/// Hamiltonian used by spectrum queries.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DsqHamiltonian {
    DsqFull = 0,
    DsqRotated = 1,
}

/// Physical parameters of the extended Dicke model.
pub struct DsqSystem {
    params: SystemParams,
}

/// Table of equally long named columns; column 0 is always time.
pub struct DsqSeries {
    names: Vec<CString>,
    columns: Vec<Vec<f64>>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(e: &Error) -> DsqStatus {
    match e {
        Error::Io(_) => DsqStatus::DsqIoError,
        e if e.is_validation() => DsqStatus::DsqInvalidArgument,
        _ => DsqStatus::DsqNumericalFailure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DsqStatus, String)>) -> DsqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DsqStatus::DsqOk
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DsqStatus::DsqPanic
        }
    }
}

fn lib<T>(r: dicke_squeeze::Result<T>) -> Result<T, (DsqStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DsqStatus, String) {
    (DsqStatus::DsqNullPointer, format!("`{what}` is null"))
}

unsafe fn cstr<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DsqStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DsqStatus::DsqInvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (DsqStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Copies `src` into `(buf, cap)` and reports the full length.
unsafe fn copy_slice<T: Copy>(src: &[T], buf: *mut T, cap: usize, out_len: *mut usize) -> Result<(), (DsqStatus, String)> {
    if !out_len.is_null() {
        out_len.write(src.len());
    }
    if buf.is_null() && cap > 0 {
        return Err(null("buffer"));
    }
    let n = src.len().min(cap);
    if n > 0 {
        ptr::copy_nonoverlapping(src.as_ptr(), buf, n);
    }
    if src.len() > cap {
        return Err((
            DsqStatus::DsqBufferTooSmall,
            format!("buffer holds {cap} elements, {} needed", src.len()),
        ));
    }
    Ok(())
}

unsafe fn system<'a>(sys: *const DsqSystem) -> Result<&'a DsqSystem, (DsqStatus, String)> {
    sys.as_ref().ok_or_else(|| null("system"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dsq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message (NUL-terminated) into `buf`.
/// `out_len` receives the message length including the terminator.
///
/// # Safety
/// `buf` must be valid for `cap` bytes or null with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn dsq_last_error_message(buf: *mut c_char, cap: usize, out_len: *mut usize) -> DsqStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().as_bytes_with_nul().to_vec());
    let bytes: Vec<c_char> = msg.iter().map(|&b| b as c_char).collect();
    match copy_slice(&bytes, buf, cap, out_len) {
        Ok(()) => DsqStatus::DsqOk,
        Err((s, _)) => {
            if cap > 0 {
                buf.add(cap - 1).write(0);
            }
            s
        }
    }
}

/// Creates a system with `Delta = omega_q cos(theta)`, `eps = omega_q sin(theta)`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn dsq_system_new(
    n_atoms: usize,
    omega_q: f64,
    theta: f64,
    g: f64,
    omega_c: f64,
    out: *mut *mut DsqSystem,
) -> DsqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(omega_q > 0.0 && omega_q.is_finite()) || !theta.is_finite() {
            return Err((DsqStatus::DsqInvalidArgument, "omega_q must be positive and theta finite".into()));
        }
        let params = lib(SystemParams::from_theta(n_atoms, omega_q, theta, g, omega_c))?;
        out.write(Box::into_raw(Box::new(DsqSystem { params })));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from [`dsq_system_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn dsq_system_free(sys: *mut DsqSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Two-atom effective coupling `g_eff` and collective exchange rate `Omega`.
///
/// # Safety
/// `sys` must be a live handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dsq_system_couplings(sys: *const DsqSystem, g_eff: *mut f64, omega: *mut f64) -> DsqStatus {
    guard(|| {
        let s = system(sys)?;
        write_out(g_eff, effective_coupling(&s.params), "g_eff")?;
        write_out(omega, lib(exchange_rate(&s.params))?, "omega")
    })
}

/// Lowest `n_levels` eigenvalues at the handle's `omega_c`, ascending.
///
/// # Safety
/// `sys` must be a live handle; `buf` valid for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn dsq_spectrum(
    sys: *const DsqSystem,
    fock_cutoff: usize,
    kind: DsqHamiltonian,
    n_levels: usize,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> DsqStatus {
    guard(|| {
        let s = system(sys)?;
        let basis = lib(BasisSpec::new(s.params.n_atoms, fock_cutoff))?;
        let kind = match kind {
            DsqHamiltonian::DsqFull => HamiltonianKind::Full,
            DsqHamiltonian::DsqRotated => HamiltonianKind::Rotated,
        };
        let h = lib(kind.build(&s.params, basis))?;
        let values = lib(eigenvalues(&h, n_levels))?;
        copy_slice(&values, buf, cap, out_len)
    })
}

/// Locates the one-photon/two-atom resonance: minimum-gap `omega_c`, the gap,
/// and the transition energy of the hybridized pair.
///
/// # Safety
/// `sys` must be a live handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dsq_find_resonance(
    sys: *const DsqSystem,
    fock_cutoff: usize,
    omega_c: *mut f64,
    gap: *mut f64,
    transition: *mut f64,
) -> DsqStatus {
    guard(|| {
        let s = system(sys)?;
        let basis = lib(BasisSpec::new(s.params.n_atoms, fock_cutoff))?;
        let r = lib(find_resonance(&s.params, basis))?;
        write_out(omega_c, r.omega_c, "omega_c")?;
        write_out(gap, r.gap, "gap")?;
        write_out(transition, r.transition, "transition")
    })
}

fn series(names: &[&str], columns: Vec<Vec<f64>>) -> *mut DsqSeries {
    let names = names.iter().map(|n| CString::new(*n).unwrap()).collect();
    Box::into_raw(Box::new(DsqSeries { names, columns }))
}

/// Closed-form single-photon exchange from `cos(varphi)|0> + sin(varphi)|1>`.
/// Columns: `t, photon_number, spin_excitation, xi2, xi2_min`.
///
/// # Safety
/// `sys` must be a live handle; `out` a valid pointer receiving an owned series.
#[no_mangle]
pub unsafe extern "C" fn dsq_single_photon(
    sys: *const DsqSystem,
    varphi: f64,
    bloch_angle: f64,
    t_stop: f64,
    n_samples: usize,
    out: *mut *mut DsqSeries,
) -> DsqStatus {
    guard(|| {
        let s = system(sys)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let init = lib(SinglePhotonInit::new(varphi))?;
        let rows = lib(single_photon_analytic(&s.params, init, bloch_angle, t_stop, n_samples))?;
        let cols = vec![
            rows.iter().map(|r| r.t).collect(),
            rows.iter().map(|r| r.photon_number).collect(),
            rows.iter().map(|r| r.spin_excitation).collect(),
            rows.iter().map(|r| r.xi2).collect(),
            rows.iter().map(|r| r.xi2_min).collect(),
        ];
        out.write(series(&["t", "photon_number", "spin_excitation", "xi2", "xi2_min"], cols));
        Ok(())
    })
}

/// Lossy full-model run from the ground state, driven at the located resonance.
/// `continuous != 0` selects a continuous drive of amplitude `strength`;
/// otherwise a Gaussian pulse of area `strength` with the default width.
/// Columns: `t, photon_number, spin_excitation, xi2`.
///
/// # Safety
/// `sys` must be a live handle; `out` a valid pointer receiving an owned series.
#[no_mangle]
pub unsafe extern "C" fn dsq_driven_run(
    sys: *const DsqSystem,
    kappa: f64,
    gamma: f64,
    fock_cutoff: usize,
    continuous: i32,
    strength: f64,
    t_stop: f64,
    n_samples: usize,
    out: *mut *mut DsqSeries,
) -> DsqStatus {
    guard(|| {
        let s = system(sys)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let setup = DrivenSetup {
            params: s.params,
            dissipation: lib(DissipationParams::new(kappa, gamma))?,
            fock_cutoff,
            t_stop,
            n_samples,
        };
        let shape = if continuous != 0 {
            DriveShape::Continuous { amplitude: strength }
        } else {
            DriveShape::Pulse {
                area: strength,
                sigma: None,
                t0: None,
            }
        };
        let options = EvolutionOptions {
            snapshot_stride: 0,
            ..EvolutionOptions::default()
        };
        let run = lib(run_driven(&setup, shape, options))?;
        let r = &run.trajectory.records;
        let cols = vec![
            r.iter().map(|x| x.t).collect(),
            r.iter().map(|x| x.photon_number).collect(),
            r.iter().map(|x| x.spin_excitation).collect(),
            r.iter().map(|x| x.xi2).collect(),
        ];
        out.write(series(&["t", "photon_number", "spin_excitation", "xi2"], cols));
        Ok(())
    })
}

fn bosonic(coupling: f64, kappa: f64, gamma: f64, drive: f64) -> Result<BosonicParams, (DsqStatus, String)> {
    lib(BosonicParams::new(coupling, kappa, gamma, drive))
}

/// Two-step mean-field protocol. Columns: `t, xi2, xi2_analytic`.
///
/// # Safety
/// `out` must be a valid pointer receiving an owned series.
#[no_mangle]
pub unsafe extern "C" fn dsq_meanfield_protocol(
    coupling: f64,
    kappa: f64,
    gamma: f64,
    drive_amplitude: f64,
    t_stop: f64,
    n_samples: usize,
    out: *mut *mut DsqSeries,
) -> DsqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bp = bosonic(coupling, kappa, gamma, drive_amplitude)?;
        let run = lib(run_two_step_protocol(&bp, t_stop, n_samples, &Tolerances::default()))?;
        let cols = vec![run.trajectory.times.clone(), run.xi2, run.analytic];
        out.write(series(&["t", "xi2", "xi2_analytic"], cols));
        Ok(())
    })
}

/// Frozen-field squeezing floor `gamma / (chi N + gamma)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsq_protocol_floor(coupling: f64, kappa: f64, gamma: f64, drive_amplitude: f64, out: *mut f64) -> DsqStatus {
    guard(|| write_out(out, analytic_floor(&bosonic(coupling, kappa, gamma, drive_amplitude)?), "out"))
}

/// Stationary squeezing of the resonant driven bosonic model.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsq_stationary_xi2(coupling: f64, kappa: f64, gamma: f64, drive_amplitude: f64, out: *mut f64) -> DsqStatus {
    guard(|| {
        let s = lib(stationary_state(&bosonic(coupling, kappa, gamma, drive_amplitude)?))?;
        write_out(out, s.xi2, "out")
    })
}

/// # Safety
/// `series` must be null or a handle returned by this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dsq_series_free(series: *mut DsqSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of columns and rows.
///
/// # Safety
/// `series` must be a live handle; outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dsq_series_shape(series: *const DsqSeries, n_columns: *mut usize, n_rows: *mut usize) -> DsqStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        write_out(n_columns, s.columns.len(), "n_columns")?;
        write_out(n_rows, s.columns.first().map_or(0, Vec::len), "n_rows")
    })
}

/// Static name of column `index`, valid while the series lives; null when out of range.
///
/// # Safety
/// `series` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dsq_series_column_name(series: *const DsqSeries, index: usize) -> *const c_char {
    series
        .as_ref()
        .and_then(|s| s.names.get(index))
        .map_or(ptr::null(), |n| n.as_ptr())
}

/// Copies column `index` into `buf`.
///
/// # Safety
/// `series` must be a live handle; `buf` valid for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn dsq_series_column(
    series: *const DsqSeries,
    index: usize,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> DsqStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        let col = s
            .columns
            .get(index)
            .ok_or_else(|| (DsqStatus::DsqInvalidArgument, format!("column {index} out of range")))?;
        copy_slice(col, buf, cap, out_len)
    })
}

/// Runs a named scenario from TOML text into `out_dir`, exactly as the
/// `simulate` binary does. `preset` may be null.
///
/// # Safety
/// String arguments must be NUL-terminated or (for `preset`) null.
#[no_mangle]
pub unsafe extern "C" fn dsq_run_config(
    scenario: *const c_char,
    config_toml: *const c_char,
    preset: *const c_char,
    out_dir: *const c_char,
) -> DsqStatus {
    guard(|| {
        let scenario = lib(Scenario::parse(cstr(scenario, "scenario")?))?;
        let text = cstr(config_toml, "config_toml")?;
        let preset = if preset.is_null() { None } else { Some(cstr(preset, "preset")?) };
        let dir = cstr(out_dir, "out_dir")?;
        let config = lib(ExperimentConfig::parse(scenario, text, preset))?;
        lib(run(&config, text.as_bytes(), preset, Path::new(dir))).map(|_| ())
    })
}
