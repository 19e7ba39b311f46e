//! Split Thevenin equivalent estimation.
//!
//! Each monitored load is modelled as a source `e_th` behind a transmission
//! impedance `z_t`, then a distribution impedance `z_d`, feeding `z_l`:
//!
//! ```text
//! e_th = v_sub + i_dist * z_t
//! v_sub = v_dist + i_dist * z_d
//! z_l  = v_dist / i_dist
//! ```
//!
//! One instant gives two complex equations in three unknowns, so at least
//! two instants are needed. Parameters are assumed constant across the
//! instants used.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::EstimateError;
use crate::measurements::PhasorSnapshot;

/// Pairs whose load currents differ by less than this are rejected, p.u.
pub const MIN_CURRENT_CHANGE: f64 = 1e-6;

/// Stacked systems with a larger singular value ratio are rank deficient.
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdEquivalent {
    pub e_th: Complex64,
    pub z_t: Complex64,
    pub z_d: Complex64,
    pub z_l: Complex64,
    /// Largest over smallest singular value of the stacked system.
    pub condition: f64,
}

impl TdEquivalent {
    /// Residuals of the source and feeder equations at one snapshot.
    pub fn residuals(&self, s: &PhasorSnapshot) -> (Complex64, Complex64) {
        let source = self.e_th - (s.v_sub + s.i_dist * self.z_t);
        let feeder = s.v_sub - (s.v_dist + s.i_dist * self.z_d);
        (source, feeder)
    }
}

/// How the two-point estimate computes `z_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZdFormula {
    /// Mean over both instants of `(v_sub - v_dist) / i_dist`.
    #[default]
    FeederDrop,
    /// `((v_sub1 - v_sub2) / i1 + (v_sub2 - v_sub1) / i2) / 2`, which uses
    /// substation voltages only. Kept for comparison; it does not satisfy
    /// the feeder equation.
    SubstationOnly,
}

fn stacked(snaps: &[PhasorSnapshot]) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let n = snaps.len();
    let mut a = DMatrix::from_element(2 * n, 3, zero);
    let mut b = DVector::from_element(2 * n, zero);
    for (k, s) in snaps.iter().enumerate() {
        a[(2 * k, 0)] = -one;
        a[(2 * k, 1)] = s.i_dist;
        b[2 * k] = -s.v_sub;
        a[(2 * k + 1, 2)] = s.i_dist;
        b[2 * k + 1] = s.v_sub - s.v_dist;
    }
    (a, b)
}

fn condition_of(singular: &DVector<f64>) -> f64 {
    let max = singular.max();
    let min = singular.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn mean_load_impedance(snaps: &[PhasorSnapshot]) -> Result<Complex64, EstimateError> {
    let mut sum = Complex64::new(0.0, 0.0);
    for s in snaps {
        if s.i_dist.norm() == 0.0 {
            return Err(EstimateError::ZeroCurrent);
        }
        sum += s.v_dist / s.i_dist;
    }
    Ok(sum / snaps.len() as f64)
}

/// Closed-form estimate from two instants.
pub fn estimate_two_point(s1: &PhasorSnapshot, s2: &PhasorSnapshot) -> Result<TdEquivalent, EstimateError> {
    estimate_two_point_with(s1, s2, ZdFormula::FeederDrop)
}

pub fn estimate_two_point_with(
    s1: &PhasorSnapshot,
    s2: &PhasorSnapshot,
    zd: ZdFormula,
) -> Result<TdEquivalent, EstimateError> {
    let di = s1.i_dist - s2.i_dist;
    if di.norm() < MIN_CURRENT_CHANGE {
        return Err(EstimateError::InsufficientLoadChange { delta: di.norm() });
    }
    let z_l = mean_load_impedance(&[*s1, *s2])?;

    let e_th = (s2.v_sub * s1.i_dist - s1.v_sub * s2.i_dist) / di;
    let z_t = -(s1.v_sub - s2.v_sub) / di;
    let z_d = match zd {
        ZdFormula::FeederDrop => ((s1.v_sub - s1.v_dist) / s1.i_dist + (s2.v_sub - s2.v_dist) / s2.i_dist) / 2.0,
        ZdFormula::SubstationOnly => ((s1.v_sub - s2.v_sub) / s1.i_dist + (s2.v_sub - s1.v_sub) / s2.i_dist) / 2.0,
    };

    let (a, _) = stacked(&[*s1, *s2]);
    let condition = condition_of(&a.singular_values());
    Ok(TdEquivalent { e_th, z_t, z_d, z_l, condition })
}

/// Complex least-squares estimate over two or more instants.
pub fn estimate_lsq(snaps: &[PhasorSnapshot]) -> Result<TdEquivalent, EstimateError> {
    if snaps.len() < 2 {
        return Err(EstimateError::TooFewSnapshots(snaps.len()));
    }
    let spread = snaps.iter().map(|s| (s.i_dist - snaps[0].i_dist).norm()).fold(0.0, f64::max);
    if spread < MIN_CURRENT_CHANGE {
        return Err(EstimateError::InsufficientLoadChange { delta: spread });
    }
    let z_l = mean_load_impedance(snaps)?;

    let (a, b) = stacked(snaps);
    let svd = a.svd(true, true);
    let condition = condition_of(&svd.singular_values);
    if !(condition <= MAX_CONDITION) {
        return Err(EstimateError::RankDeficient { condition });
    }
    let x = svd.solve(&b, 0.0).map_err(|_| EstimateError::RankDeficient { condition })?;
    Ok(TdEquivalent { e_th: x[0], z_t: x[1], z_d: x[2], z_l, condition })
}
