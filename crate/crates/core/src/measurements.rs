//! Synthetic phasor measurements taken from converged CPF points.
//!
//! Each operating point of a trace stands in for one quasi-steady-state
//! measurement instant: the substation PMU reads the transmission bus
//! voltage, and the feeder micro-PMU reads the load bus voltage and the
//! load current.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cpf::PvTrace;
use crate::error::MeasureError;
use crate::fmt::{csv_row, fmt9};
use crate::netmodel::{BusId, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonitoredLoad {
    pub load_bus: BusId,
    pub substation_bus: BusId,
}

impl MonitoredLoad {
    pub fn validate(&self, net: &Network) -> Result<(), MeasureError> {
        let load = net.bus(self.load_bus).ok_or(MeasureError::UnknownBus(self.load_bus))?;
        net.bus(self.substation_bus).ok_or(MeasureError::UnknownBus(self.substation_bus))?;
        if load.base_load().norm() == 0.0 {
            return Err(MeasureError::NoLoad(self.load_bus));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasorSnapshot {
    pub v_sub: Complex64,
    pub v_dist: Complex64,
    pub i_dist: Complex64,
    pub total_load_mw: f64,
    pub instant: usize,
}

impl PhasorSnapshot {
    /// Load impedance seen at this instant.
    pub fn load_impedance(&self) -> Complex64 {
        self.v_dist / self.i_dist
    }
}

/// One snapshot per upper-branch point, in loading order.
pub fn extract_snapshots(trace: &PvTrace, m: &MonitoredLoad) -> Result<Vec<PhasorSnapshot>, MeasureError> {
    extract(trace, m, trace.upper_branch().len())
}

/// Like [`extract_snapshots`] but includes the points traced past the nose.
pub fn extract_all_snapshots(trace: &PvTrace, m: &MonitoredLoad) -> Result<Vec<PhasorSnapshot>, MeasureError> {
    extract(trace, m, trace.points.len())
}

fn extract(trace: &PvTrace, m: &MonitoredLoad, count: usize) -> Result<Vec<PhasorSnapshot>, MeasureError> {
    let net = &trace.network;
    m.validate(net)?;
    let kl = net.position(m.load_bus).expect("validated");
    let ks = net.position(m.substation_bus).expect("validated");
    let s_base = net.buses()[kl].base_load();
    Ok(trace.points[..count]
        .iter()
        .enumerate()
        .map(|(instant, p)| {
            let v_dist = p.solution.v[kl];
            let s = s_base + trace.direction.load[kl] * p.lambda;
            PhasorSnapshot {
                v_sub: p.solution.v[ks],
                v_dist,
                i_dist: (s / v_dist).conj(),
                total_load_mw: p.total_load_mw,
                instant,
            }
        })
        .collect())
}

/// Adds independent complex Gaussian noise (standard deviation `sigma` on
/// each real and imaginary part) to every phasor.
pub fn add_noise(snapshots: &[PhasorSnapshot], sigma: f64, seed: u64) -> Result<Vec<PhasorSnapshot>, MeasureError> {
    if !(sigma >= 0.0) {
        return Err(MeasureError::NegativeSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(snapshots.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut jitter = |z: Complex64| z + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
    Ok(snapshots
        .iter()
        .map(|s| PhasorSnapshot {
            v_sub: jitter(s.v_sub),
            v_dist: jitter(s.v_dist),
            i_dist: jitter(s.i_dist),
            ..*s
        })
        .collect())
}

pub const SNAPSHOT_CSV_HEADER: &str = "instant,total_load_mw,v_sub_re,v_sub_im,v_dist_re,v_dist_im,i_dist_re,i_dist_im";

pub fn snapshots_csv(snapshots: &[PhasorSnapshot]) -> String {
    let mut out = String::from(SNAPSHOT_CSV_HEADER);
    out.push('\n');
    for s in snapshots {
        out.push_str(&csv_row(&[
            s.instant.to_string(),
            fmt9(s.total_load_mw),
            fmt9(s.v_sub.re),
            fmt9(s.v_sub.im),
            fmt9(s.v_dist.re),
            fmt9(s.v_dist.im),
            fmt9(s.i_dist.re),
            fmt9(s.i_dist.im),
        ]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpf::{direction, run_cpf, CpfOptions, ScalingDirection};
    use crate::data;
    use crate::netmodel::attach_feeders;

    fn fc1_trace() -> PvTrace {
        let net = attach_feeders(&data::case9(), &data::fc1(BusId(5), 10)).unwrap();
        run_cpf(&net, &direction(&net), &CpfOptions::default()).unwrap()
    }

    fn d3(trace: &PvTrace) -> MonitoredLoad {
        MonitoredLoad { load_bus: trace.network.bus_by_name("D3-feeder1").unwrap().id, substation_bus: BusId(5) }
    }

    #[test]
    fn base_point_reproduces_feeder_load() {
        let trace = fc1_trace();
        let m = d3(&trace);
        let snaps = extract_snapshots(&trace, &m).unwrap();
        assert_eq!(snaps.len(), trace.nose_index + 1);
        let s0 = snaps[0];
        let k5 = trace.network.position(BusId(5)).unwrap();
        assert_eq!(s0.v_sub, trace.points[0].solution.v[k5]);
        let s = s0.v_dist * s0.i_dist.conj();
        assert!((s - Complex64::new(0.045, 0.015)).norm() < 1e-12);
        // Ohm's law for the implied load impedance
        assert!((s0.load_impedance() * s0.i_dist - s0.v_dist).norm() < 1e-12);
        assert!(snaps.windows(2).all(|w| w[1].total_load_mw > w[0].total_load_mw));
    }

    #[test]
    fn scaled_current_matches_scaled_load() {
        let trace = fc1_trace();
        let snaps = extract_snapshots(&trace, &d3(&trace)).unwrap();
        let last = snaps.last().unwrap();
        let lambda = trace.points[last.instant].lambda;
        let s = last.v_dist * last.i_dist.conj();
        assert!((s - Complex64::new(0.045, 0.015) * (1.0 + lambda)).norm() < 1e-12);
    }

    #[test]
    fn single_point_trace_gives_single_snapshot() {
        let net = attach_feeders(&data::case9(), &data::fc1(BusId(5), 1)).unwrap();
        let n = net.bus_count();
        let dir = ScalingDirection { load: vec![Complex64::new(0.0, 0.0); n], gen_p: vec![0.0; n] };
        let trace = run_cpf(&net, &dir, &CpfOptions::default()).unwrap();
        let m = MonitoredLoad { load_bus: net.bus_by_name("D2-feeder1").unwrap().id, substation_bus: BusId(5) };
        assert_eq!(extract_snapshots(&trace, &m).unwrap().len(), 1);
    }

    #[test]
    fn unknown_or_unloaded_bus_is_rejected() {
        let trace = fc1_trace();
        let bad = MonitoredLoad { load_bus: BusId(999), substation_bus: BusId(5) };
        assert!(matches!(extract_snapshots(&trace, &bad), Err(MeasureError::UnknownBus(BusId(999)))));
        let d1 = trace.network.bus_by_name("D1-feeder1").unwrap().id;
        let unloaded = MonitoredLoad { load_bus: d1, substation_bus: BusId(5) };
        assert!(matches!(extract_snapshots(&trace, &unloaded), Err(MeasureError::NoLoad(_))));
    }

    #[test]
    fn noise_contract() {
        let trace = fc1_trace();
        let snaps = extract_snapshots(&trace, &d3(&trace)).unwrap();
        assert_eq!(add_noise(&snaps, 0.0, 7).unwrap(), snaps);
        let a = add_noise(&snaps, 1e-4, 7).unwrap();
        let b = add_noise(&snaps, 1e-4, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, snaps);
        assert_ne!(a, add_noise(&snaps, 1e-4, 8).unwrap());
        let max_dev = a.iter().zip(&snaps).map(|(x, y)| (x.v_dist - y.v_dist).norm()).fold(0.0, f64::max);
        assert!(max_dev < 1e-3);
        assert!(matches!(add_noise(&snaps, -1.0, 7), Err(MeasureError::NegativeSigma(_))));
    }

    #[test]
    fn csv_layout() {
        let trace = fc1_trace();
        let snaps = extract_snapshots(&trace, &d3(&trace)).unwrap();
        let csv = snapshots_csv(&snaps[..2]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SNAPSHOT_CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,315.000000,"));
    }
}
