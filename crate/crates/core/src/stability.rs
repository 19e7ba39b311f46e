//! Voltage stability index, transmission-distribution distinguishing index
//! and classification of the limiting subsystem.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::StabilityError;
use crate::estimator::TdEquivalent;
use crate::netmodel::BusId;

pub const DEFAULT_DEADBAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    TransmissionLimited,
    DistributionLimited,
    Balanced,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::TransmissionLimited => "transmission_limited",
            Classification::DistributionLimited => "distribution_limited",
            Classification::Balanced => "balanced",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRecord {
    pub bus: BusId,
    pub total_load_mw: f64,
    pub vsi: f64,
    pub tddi: f64,
    pub classification: Classification,
    pub equivalent: TdEquivalent,
}

/// `|z_t + z_d| / |z_l|`; reaches 1 at maximum power transfer.
pub fn vsi(eq: &TdEquivalent) -> Result<f64, StabilityError> {
    let zl = eq.z_l.norm();
    if zl == 0.0 {
        return Err(StabilityError::ZeroLoadImpedance);
    }
    Ok((eq.z_t + eq.z_d).norm() / zl)
}

/// `ln(|z_t| / |z_d|)`: positive when the transmission side dominates.
pub fn tddi(eq: &TdEquivalent) -> Result<f64, StabilityError> {
    let (zt, zd) = (eq.z_t.norm(), eq.z_d.norm());
    if zt == 0.0 || zd == 0.0 || !zt.is_finite() || !zd.is_finite() {
        return Err(StabilityError::UndefinedIndex { z_t: zt, z_d: zd });
    }
    Ok(zt.ln() - zd.ln())
}

pub fn classify(tddi_value: f64, deadband: f64) -> Classification {
    if tddi_value > deadband {
        Classification::TransmissionLimited
    } else if tddi_value < -deadband {
        Classification::DistributionLimited
    } else {
        Classification::Balanced
    }
}

pub fn record(bus: BusId, total_load_mw: f64, eq: TdEquivalent, deadband: f64) -> Result<StabilityRecord, StabilityError> {
    let vsi = vsi(&eq)?;
    let tddi = tddi(&eq)?;
    Ok(StabilityRecord { bus, total_load_mw, vsi, tddi, classification: classify(tddi, deadband), equivalent: eq })
}

/// Bus with the highest VSI; ties go to the lowest bus id.
pub fn critical_bus(records: &[StabilityRecord]) -> Result<BusId, StabilityError> {
    records
        .iter()
        .min_by(|a, b| b.vsi.total_cmp(&a.vsi).then(a.bus.cmp(&b.bus)))
        .map(|r| r.bus)
        .ok_or(StabilityError::Empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn eq(zt: Complex64, zd: Complex64, zl: Complex64) -> TdEquivalent {
        TdEquivalent { e_th: Complex64::new(1.0, 0.0), z_t: zt, z_d: zd, z_l: zl, condition: 1.0 }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vsi_examples() {
        let e = eq(c(0.05, 0.1), c(0.05, 0.1), c(0.2, 0.4));
        assert!((vsi(&e).unwrap() - 0.5).abs() < 1e-15);
        let m = eq(c(0.1, 0.0), c(0.0, 0.1), c(0.0, 2f64.sqrt() * 0.1));
        assert!((vsi(&m).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(vsi(&eq(ZT, ZT, c(0.0, 0.0))), Err(StabilityError::ZeroLoadImpedance)));
    }

    const ZT: Complex64 = Complex64::new(0.0, 0.1);

    #[test]
    fn tddi_examples() {
        assert_eq!(tddi(&eq(c(0.0, 0.1), c(0.1, 0.0), c(1.0, 0.0))).unwrap(), 0.0);
        let t = tddi(&eq(c(0.0, 0.2), c(0.1, 0.0), c(1.0, 0.0))).unwrap();
        assert!((t - 2f64.ln()).abs() < 1e-15);
        assert!((t - 0.693).abs() < 1e-3);
        assert!(matches!(tddi(&eq(c(0.0, 0.0), ZT, c(1.0, 0.0))), Err(StabilityError::UndefinedIndex { .. })));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(-0.4, 0.05), Classification::DistributionLimited);
        assert_eq!(classify(0.71, 0.05), Classification::TransmissionLimited);
        assert_eq!(classify(0.0, 0.0), Classification::Balanced);
        assert_eq!(classify(0.0, 0.3), Classification::Balanced);
        assert_eq!(classify(0.05, 0.05), Classification::Balanced);
    }

    #[test]
    fn critical_bus_picks_max_vsi_then_lowest_id() {
        let mk = |bus: u32, v: f64| record(BusId(bus), 400.0, eq(c(0.0, v), c(0.0, v), c(1.0, 0.0)), 0.05).unwrap();
        assert_eq!(critical_bus(&[mk(3, 0.2)]).unwrap(), BusId(3));
        assert_eq!(critical_bus(&[mk(3, 0.2), mk(4, 0.3), mk(5, 0.1)]).unwrap(), BusId(4));
        assert_eq!(critical_bus(&[mk(7, 0.3), mk(4, 0.3)]).unwrap(), BusId(4));
        assert!(matches!(critical_bus(&[]), Err(StabilityError::Empty)));
    }
}
