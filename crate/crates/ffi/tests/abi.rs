use std::ffi::{c_char, CStr};
use std::ptr;

use tddi_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        tddi_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn run_builtin(name: &CStr) -> *mut TddiScenarioResult {
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { tddi_scenario_run_builtin(name.as_ptr(), &mut r) }, TddiStatus::Ok, "{}", last_error());
    r
}

#[test]
fn network_round_trip() {
    let mut net = ptr::null_mut();
    unsafe {
        assert_eq!(tddi_network_load(c"case9".as_ptr(), &mut net), TddiStatus::Ok);
        assert_eq!(tddi_network_bus_count(net), 9);
        let mut mw = 0.0;
        assert_eq!(tddi_network_total_load_mw(net, &mut mw), TddiStatus::Ok);
        assert!((mw - 315.0).abs() < 1e-9);
        let mut m = 0.0;
        assert_eq!(tddi_network_margin_mw(net, &mut m), TddiStatus::Ok);
        assert!((m - 467.5).abs() < 46.75);
        tddi_network_free(net);
        tddi_network_free(ptr::null_mut());
    }
}

#[test]
fn missing_case_sets_message() {
    let mut net = ptr::null_mut();
    let status = unsafe { tddi_network_load(c"/no/such/file.json".as_ptr(), &mut net) };
    assert_eq!(status, TddiStatus::Config);
    assert!(net.is_null());
    assert!(last_error().contains("/no/such/file.json"));
    let need = unsafe { tddi_last_error_message(ptr::null_mut(), 0) };
    assert!(need > 0);
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        assert_eq!(tddi_network_load(ptr::null(), &mut ptr::null_mut()), TddiStatus::NullPointer);
        assert_eq!(tddi_network_load(c"case9".as_ptr(), ptr::null_mut()), TddiStatus::NullPointer);
        assert_eq!(tddi_scenario_margin_mw(ptr::null(), &mut 0.0), TddiStatus::NullPointer);
        assert_eq!(tddi_network_bus_count(ptr::null()), 0);
    }
}

#[test]
fn fc1_scenario_through_abi() {
    let r = run_builtin(c"fc1");
    unsafe {
        let mut m = 0.0;
        assert_eq!(tddi_scenario_margin_mw(r, &mut m), TddiStatus::Ok);
        assert!((m - 163.0).abs() < 16.3);

        let mut c = TddiClassification::Balanced;
        assert_eq!(tddi_scenario_classification(r, &mut c), TddiStatus::Ok);
        assert_eq!(c, TddiClassification::DistributionLimited);

        let mut bus = 0u32;
        let mut t = 0.0;
        assert_eq!(tddi_scenario_critical_bus(r, &mut bus, &mut t), TddiStatus::Ok);
        assert!(t < 0.0);

        let mut len = 0usize;
        let name = c"D3-feeder1";
        let s = tddi_scenario_series(r, name.as_ptr(), TddiIndexField::Vsi, ptr::null_mut(), ptr::null_mut(), 0, &mut len);
        assert_eq!(s, TddiStatus::BufferTooSmall);
        assert!(len > 2);
        let (mut mw, mut vals) = (vec![0.0; len], vec![0.0; len]);
        let s = tddi_scenario_series(r, name.as_ptr(), TddiIndexField::Vsi, mw.as_mut_ptr(), vals.as_mut_ptr(), len, &mut len);
        assert_eq!(s, TddiStatus::Ok);
        assert!(mw.windows(2).all(|w| w[1] > w[0]));
        assert!(vals.iter().all(|v| *v > 0.0 && *v < 1.5));

        let s = tddi_scenario_series(r, c"Bus 7".as_ptr(), TddiIndexField::Tddi, ptr::null_mut(), ptr::null_mut(), 0, &mut len);
        assert_eq!(s, TddiStatus::NotFound);
        tddi_scenario_free(r);
    }
}

#[test]
fn standard_scenario_has_no_classification() {
    let r = run_builtin(c"standard");
    unsafe {
        let mut c = TddiClassification::Balanced;
        assert_eq!(tddi_scenario_classification(r, &mut c), TddiStatus::NotFound);
        let mut bus = 0;
        assert_eq!(tddi_scenario_critical_bus(r, &mut bus, ptr::null_mut()), TddiStatus::NotFound);
        tddi_scenario_free(r);
    }
}

#[test]
fn configured_scenario_matches_builtin() {
    let mut cfg = tddi_scenario_config_default();
    cfg.feeder = c"fc2".as_ptr();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(tddi_scenario_run(&cfg, &mut r), TddiStatus::Ok, "{}", last_error());
        let b = run_builtin(c"fc2");
        let (mut m1, mut m2) = (0.0, 0.0);
        tddi_scenario_margin_mw(r, &mut m1);
        tddi_scenario_margin_mw(b, &mut m2);
        assert_eq!(m1, m2);
        let mut c = TddiClassification::Balanced;
        tddi_scenario_classification(r, &mut c);
        assert_eq!(c, TddiClassification::TransmissionLimited);
        tddi_scenario_free(r);
        tddi_scenario_free(b);
    }
}

#[test]
fn bad_config_reports_config_status() {
    let mut cfg = tddi_scenario_config_default();
    cfg.feeder = c"fc1".as_ptr();
    cfg.estimator = TddiEstimator::Lsq;
    cfg.window = 1;
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { tddi_scenario_run(&cfg, &mut r) }, TddiStatus::Config);
    assert!(r.is_null());
    assert!(last_error().contains("window"));
    assert_eq!(unsafe { tddi_scenario_run_builtin(c"nope".as_ptr(), &mut r) }, TddiStatus::InvalidArgument);
}

#[test]
fn index_helpers() {
    let c = |re, im| TddiComplex { re, im };
    let mut v = 0.0;
    unsafe {
        assert_eq!(tddi_vsi(c(0.05, 0.1), c(0.05, 0.1), c(0.2, 0.4), &mut v), TddiStatus::Ok);
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(tddi_tddi(c(0.0, 0.2), c(0.1, 0.0), &mut v), TddiStatus::Ok);
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(tddi_tddi(c(0.0, 0.0), c(0.1, 0.0), &mut v), TddiStatus::InvalidArgument);
        assert_eq!(tddi_vsi(c(0.1, 0.0), c(0.1, 0.0), c(0.0, 0.0), &mut v), TddiStatus::InvalidArgument);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/tddi.h");
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c", "-"])
        .arg("-I")
        .arg(&dir)
        .stdin(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut child| {
            use std::io::Write;
            child.stdin.take().unwrap().write_all(b"#include \"tddi.h\"\nint main(void){return 0;}\n")?;
            child.wait_with_output()
        })
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
