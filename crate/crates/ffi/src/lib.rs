//! C ABI over the `tddi` library.
//!
//! Objects are opaque handles created by `*_load` / `*_run` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`TddiStatus`]; on failure a message is kept per thread and can be copied
//! out with [`tddi_last_error_message`].
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access implied by the
//! function. Strings are NUL-terminated UTF-8. Handles must come from this
//! library and must not be used after being freed.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tddi::cpf::{direction, margin, run_cpf, CpfOptions};
use tddi::estimator::{TdEquivalent, ZdFormula};
use tddi::netmodel::{BusId, Network};
use tddi::num_complex::Complex64;
use tddi::scenarios::{self, EstimatorMode, FeederChoice, IndexField, ScenarioConfig, ScenarioResult};
use tddi::stability::{self, Classification};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TddiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Bad input data or configuration.
    Config = 3,
    /// Solver or estimator failure.
    Numeric = 4,
    BufferTooSmall = 5,
    /// Not found, e.g. an unmonitored bus or no critical bus.
    NotFound = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TddiClassification {
    TransmissionLimited = 0,
    DistributionLimited = 1,
    Balanced = 2,
}

impl From<Classification> for TddiClassification {
    fn from(c: Classification) -> Self {
        match c {
            Classification::TransmissionLimited => TddiClassification::TransmissionLimited,
            Classification::DistributionLimited => TddiClassification::DistributionLimited,
            Classification::Balanced => TddiClassification::Balanced,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TddiIndexField {
    Vsi = 0,
    Tddi = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TddiEstimator {
    TwoPoint = 0,
    Lsq = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TddiComplex {
    pub re: f64,
    pub im: f64,
}

impl From<TddiComplex> for Complex64 {
    fn from(z: TddiComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Scenario settings. Fill with `tddi_scenario_config_default` first.
/// `feeder` may be null for the plain case.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TddiScenarioConfig {
    pub case_source: *const c_char,
    pub feeder: *const c_char,
    pub attach_bus: u32,
    pub replicas: usize,
    pub step: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub estimator: TddiEstimator,
    pub window: usize,
    pub deadband: f64,
    pub substation_only_zd: bool,
    pub all_replicas: bool,
}

/// Opaque network handle.
pub struct TddiNetwork(Network);

/// Opaque scenario result handle.
pub struct TddiScenarioResult(ScenarioResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: TddiStatus, msg: impl Into<String>) -> TddiStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> TddiStatus) -> TddiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == TddiStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(TddiStatus::Panic, msg)
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, TddiStatus> {
    if p.is_null() {
        return Err(fail(TddiStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(TddiStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn scenario_status(e: &tddi::ScenarioError) -> TddiStatus {
    if e.is_config() {
        TddiStatus::Config
    } else {
        TddiStatus::Numeric
    }
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length in bytes, excluding the terminator. `buf` may be null to query the
/// length.
#[no_mangle]
pub unsafe extern "C" fn tddi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Loads a case by builtin name (`case9`) or file path.
#[no_mangle]
pub unsafe extern "C" fn tddi_network_load(source: *const c_char, out: *mut *mut TddiNetwork) -> TddiStatus {
    guard(|| {
        if out.is_null() {
            return fail(TddiStatus::NullPointer, "out is null");
        }
        let source = match str_arg(source, "source") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match tddi::data::resolve_case(source) {
            Ok(net) => {
                *out = Box::into_raw(Box::new(TddiNetwork(net)));
                TddiStatus::Ok
            }
            Err(e) => fail(TddiStatus::Config, e.to_string()),
        }
    })
}

/// Number of buses, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn tddi_network_bus_count(net: *const TddiNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.bus_count())
}

/// Total base-case active load in MW.
#[no_mangle]
pub unsafe extern "C" fn tddi_network_total_load_mw(net: *const TddiNetwork, out: *mut f64) -> TddiStatus {
    guard(|| {
        let (Some(n), false) = (net.as_ref(), out.is_null()) else {
            return fail(TddiStatus::NullPointer, "null argument");
        };
        *out = n.0.total_base_load().re * n.0.mva_base();
        TddiStatus::Ok
    })
}

/// Loading margin in MW with default continuation settings.
#[no_mangle]
pub unsafe extern "C" fn tddi_network_margin_mw(net: *const TddiNetwork, out: *mut f64) -> TddiStatus {
    guard(|| {
        let (Some(n), false) = (net.as_ref(), out.is_null()) else {
            return fail(TddiStatus::NullPointer, "null argument");
        };
        match run_cpf(&n.0, &direction(&n.0), &CpfOptions::default()) {
            Ok(trace) => {
                *out = margin(&trace);
                TddiStatus::Ok
            }
            Err(e) => fail(TddiStatus::Numeric, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn tddi_network_free(net: *mut TddiNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Defaults: `case9`, no feeder, bus 5, 10 replicas, two-point estimator.
#[no_mangle]
pub extern "C" fn tddi_scenario_config_default() -> TddiScenarioConfig {
    let d = ScenarioConfig::standard();
    TddiScenarioConfig {
        case_source: c"case9".as_ptr(),
        feeder: ptr::null(),
        attach_bus: 5,
        replicas: 10,
        step: d.cpf.step,
        noise_sigma: d.noise_sigma,
        seed: d.seed,
        estimator: TddiEstimator::TwoPoint,
        window: 3,
        deadband: d.deadband,
        substation_only_zd: false,
        all_replicas: false,
    }
}

fn finish_run(cfg: &ScenarioConfig, out: *mut *mut TddiScenarioResult) -> TddiStatus {
    match scenarios::run_scenario(cfg) {
        Ok(r) => {
            unsafe { *out = Box::into_raw(Box::new(TddiScenarioResult(r))) };
            TddiStatus::Ok
        }
        Err(e) => fail(scenario_status(&e), e.to_string()),
    }
}

/// Runs a bundled scenario: `standard`, `fc1` or `fc2`.
#[no_mangle]
pub unsafe extern "C" fn tddi_scenario_run_builtin(name: *const c_char, out: *mut *mut TddiScenarioResult) -> TddiStatus {
    guard(|| {
        if out.is_null() {
            return fail(TddiStatus::NullPointer, "out is null");
        }
        let name = match str_arg(name, "name") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match ScenarioConfig::builtin(name) {
            Some(cfg) => finish_run(&cfg, out),
            None => fail(TddiStatus::InvalidArgument, format!("unknown scenario '{name}'")),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn tddi_scenario_run(
    config: *const TddiScenarioConfig,
    out: *mut *mut TddiScenarioResult,
) -> TddiStatus {
    guard(|| {
        let (Some(c), false) = (config.as_ref(), out.is_null()) else {
            return fail(TddiStatus::NullPointer, "null argument");
        };
        let case = match str_arg(c.case_source, "case_source") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let feeder = if c.feeder.is_null() {
            None
        } else {
            match str_arg(c.feeder, "feeder") {
                Ok(s) => Some(FeederChoice { source: s.to_owned(), attach_bus: BusId(c.attach_bus), replicas: c.replicas }),
                Err(s) => return s,
            }
        };
        let name = feeder.as_ref().map_or("standard".to_owned(), |f| f.source.clone());
        let mut cfg = ScenarioConfig::new(name, case, feeder);
        cfg.cpf.step = c.step;
        cfg.cpf.min_step = cfg.cpf.min_step.min(c.step);
        cfg.noise_sigma = c.noise_sigma;
        cfg.seed = c.seed;
        cfg.estimator = match c.estimator {
            TddiEstimator::TwoPoint => EstimatorMode::TwoPoint,
            TddiEstimator::Lsq => EstimatorMode::Lsq { window: c.window },
        };
        cfg.deadband = c.deadband;
        cfg.zd_formula = if c.substation_only_zd { ZdFormula::SubstationOnly } else { ZdFormula::FeederDrop };
        cfg.monitor_all_replicas = c.all_replicas;
        finish_run(&cfg, out)
    })
}

#[no_mangle]
pub unsafe extern "C" fn tddi_scenario_margin_mw(result: *const TddiScenarioResult, out: *mut f64) -> TddiStatus {
    guard(|| {
        let (Some(r), false) = (result.as_ref(), out.is_null()) else {
            return fail(TddiStatus::NullPointer, "null argument");
        };
        *out = r.0.margin_mw;
        TddiStatus::Ok
    })
}

/// Classification of the critical bus near the nose. `NotFound` when the
/// scenario has no monitored loads.
#[no_mangle]
pub unsafe extern "C" fn tddi_scenario_classification(
    result: *const TddiScenarioResult,
    out: *mut TddiClassification,
) -> TddiStatus {
    guard(|| {
        let (Some(r), false) = (result.as_ref(), out.is_null()) else {
            return fail(TddiStatus::NullPointer, "null argument");
        };
        match r.0.nose_classification {
            Some(c) => {
                *out = c.into();
                TddiStatus::Ok
            }
            None => fail(TddiStatus::NotFound, "scenario has no monitored loads"),
        }
    })
}

/// Bus id of the critical bus and, optionally, its TDDI near the nose.
/// `tddi_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn tddi_scenario_critical_bus(
    result: *const TddiScenarioResult,
    bus_out: *mut u32,
    tddi_out: *mut f64,
) -> TddiStatus {
    guard(|| {
        let (Some(r), false) = (result.as_ref(), bus_out.is_null()) else {
            return fail(TddiStatus::NullPointer, "null argument");
        };
        match (r.0.critical_bus, r.0.nose_tddi) {
            (Some(bus), Some(t)) => {
                *bus_out = bus.0;
                if !tddi_out.is_null() {
                    *tddi_out = t;
                }
                TddiStatus::Ok
            }
            _ => fail(TddiStatus::NotFound, "scenario has no monitored loads"),
        }
    })
}

/// Copies the `(total_load_mw, value)` series of a monitored bus, e.g.
/// `"D3-feeder1"`. `*len` receives the series length. When `capacity` is too
/// small nothing is copied and `BufferTooSmall` is returned; call with
/// `capacity = 0` and null buffers to query the length.
#[no_mangle]
pub unsafe extern "C" fn tddi_scenario_series(
    result: *const TddiScenarioResult,
    bus_name: *const c_char,
    field: TddiIndexField,
    loads_mw: *mut f64,
    values: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> TddiStatus {
    guard(|| {
        let (Some(r), false) = (result.as_ref(), len.is_null()) else {
            return fail(TddiStatus::NullPointer, "null argument");
        };
        let name = match str_arg(bus_name, "bus_name") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let field = match field {
            TddiIndexField::Vsi => IndexField::Vsi,
            TddiIndexField::Tddi => IndexField::Tddi,
        };
        let pts = match scenarios::series(&r.0, name, field) {
            Ok(p) => p,
            Err(e) => return fail(TddiStatus::NotFound, e.to_string()),
        };
        *len = pts.len();
        if capacity < pts.len() {
            return fail(TddiStatus::BufferTooSmall, format!("need {} entries, got {capacity}", pts.len()));
        }
        if pts.is_empty() {
            return TddiStatus::Ok;
        }
        if loads_mw.is_null() || values.is_null() {
            return fail(TddiStatus::NullPointer, "output buffer is null");
        }
        for (k, (mw, v)) in pts.into_iter().enumerate() {
            *loads_mw.add(k) = mw;
            *values.add(k) = v;
        }
        TddiStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn tddi_scenario_free(result: *mut TddiScenarioResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

fn equivalent(z_t: TddiComplex, z_d: TddiComplex, z_l: TddiComplex) -> TdEquivalent {
    TdEquivalent {
        e_th: Complex64::new(1.0, 0.0),
        z_t: z_t.into(),
        z_d: z_d.into(),
        z_l: z_l.into(),
        condition: 1.0,
    }
}

/// `|z_t + z_d| / |z_l|`.
#[no_mangle]
pub unsafe extern "C" fn tddi_vsi(z_t: TddiComplex, z_d: TddiComplex, z_l: TddiComplex, out: *mut f64) -> TddiStatus {
    guard(|| {
        if out.is_null() {
            return fail(TddiStatus::NullPointer, "out is null");
        }
        match stability::vsi(&equivalent(z_t, z_d, z_l)) {
            Ok(v) => {
                *out = v;
                TddiStatus::Ok
            }
            Err(e) => fail(TddiStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// `ln(|z_t| / |z_d|)`.
#[no_mangle]
pub unsafe extern "C" fn tddi_tddi(z_t: TddiComplex, z_d: TddiComplex, out: *mut f64) -> TddiStatus {
    guard(|| {
        if out.is_null() {
            return fail(TddiStatus::NullPointer, "out is null");
        }
        let one = TddiComplex { re: 1.0, im: 0.0 };
        match stability::tddi(&equivalent(z_t, z_d, one)) {
            Ok(v) => {
                *out = v;
                TddiStatus::Ok
            }
            Err(e) => fail(TddiStatus::InvalidArgument, e.to_string()),
        }
    })
}
