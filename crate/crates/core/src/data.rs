//! Bundled case and feeder data.
//!
//! Builtin names resolve to the files under `data/` compiled into the
//! binary, unless `TDDI_DATA_DIR` points at a directory holding
//! replacements with the same file names.

use std::path::{Path, PathBuf};

use crate::error::NetError;
use crate::netmodel::{load_case, BusId, FeederSpec, Network};

pub const DATA_DIR_ENV: &str = "TDDI_DATA_DIR";

const CASE9: &str = include_str!("../data/case9.json");
const FC1: &str = include_str!("../data/fc1.feeder");
const FC2: &str = include_str!("../data/fc2.feeder");
const FC2_HIGH_X: &str = include_str!("../data/fc2-high-x.feeder");

const BUILTIN_CASES: &[(&str, &str, &str)] = &[("case9", "case9.json", CASE9)];
const BUILTIN_FEEDERS: &[(&str, &str, &str)] = &[
    ("fc1", "fc1.feeder", FC1),
    ("fc2", "fc2.feeder", FC2),
    ("fc2-high-x", "fc2-high-x.feeder", FC2_HIGH_X),
];

pub fn case9() -> Network {
    load_case(CASE9).expect("bundled case9 is valid")
}

pub fn fc1(attach_bus: BusId, replicas: usize) -> FeederSpec {
    FeederSpec::from_feeder_file(FC1, attach_bus, replicas).expect("bundled fc1 is valid")
}

pub fn fc2(attach_bus: BusId, replicas: usize) -> FeederSpec {
    FeederSpec::from_feeder_file(FC2, attach_bus, replicas).expect("bundled fc2 is valid")
}

fn read(path: &Path) -> Result<String, NetError> {
    std::fs::read_to_string(path).map_err(|source| NetError::Io { path: path.display().to_string(), source })
}

fn resolve(arg: &str, table: &[(&str, &str, &str)]) -> Result<String, NetError> {
    if let Some((_, file, embedded)) = table.iter().find(|(name, _, _)| *name == arg) {
        return match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => read(&PathBuf::from(dir).join(file)),
            None => Ok((*embedded).to_owned()),
        };
    }
    read(Path::new(arg))
}

/// Loads a case by builtin name (`case9`) or file path.
pub fn resolve_case(arg: &str) -> Result<Network, NetError> {
    load_case(&resolve(arg, BUILTIN_CASES)?)
}

/// Loads a feeder by builtin name (`fc1`, `fc2`, `fc2-high-x`) or file path.
pub fn resolve_feeder(arg: &str, attach_bus: BusId, replicas: usize) -> Result<FeederSpec, NetError> {
    FeederSpec::from_feeder_file(&resolve(arg, BUILTIN_FEEDERS)?, attach_bus, replicas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn feeder_file_values() {
        let f1 = fc1(BusId(5), 10);
        assert_eq!(f1.z_d0_d1, Complex64::new(0.33, 0.78));
        assert_eq!(f1.z_d1_d2, Complex64::new(0.25, 0.59));
        assert_eq!(f1.z_d1_d3, Complex64::new(0.41, 0.98));
        let f2 = fc2(BusId(5), 10);
        assert_eq!(f2.z_d0_d1, Complex64::new(0.132, 0.195));
        let high_x = resolve_feeder("fc2-high-x", BusId(5), 10).unwrap();
        assert_eq!(high_x.z_d0_d1, Complex64::new(0.132, 1.95));
        assert_eq!(high_x.z_d1_d2, f2.z_d1_d2);
        for f in [&f1, &f2, &high_x] {
            assert_eq!(f.load_d2, Complex64::new(0.045, 0.015));
            assert_eq!(f.load_d3, Complex64::new(0.045, 0.015));
            assert!((f.total_load() - Complex64::new(0.9, 0.3)).norm() < 1e-12);
        }
    }

    #[test]
    fn missing_path_is_io_error() {
        assert!(matches!(resolve_case("/nonexistent/case.json"), Err(NetError::Io { .. })));
    }
}
