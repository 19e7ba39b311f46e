#![allow(dead_code)]

use num_complex::Complex64;
use tddi::measurements::PhasorSnapshot;
use tddi::netmodel::{Branch, Network};
use tddi::powerflow::PowerFlow;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

/// Source behind z_t, then z_d, feeding z_l, evaluated directly.
pub fn circuit(e: Complex64, zt: Complex64, zd: Complex64, zl: Complex64, instant: usize) -> PhasorSnapshot {
    let i = e / (zt + zd + zl);
    PhasorSnapshot { v_sub: e - i * zt, v_dist: i * zl, i_dist: i, total_load_mw: 0.0, instant }
}

/// Largest relative deviation between the analytic Jacobian and central
/// differences of the calculated power, scaled by the largest entry.
pub fn jacobian_fd_error(pf: &PowerFlow, v: &[Complex64]) -> f64 {
    let j = pf.jacobian(v);
    let x0 = pf.state(v);
    let h = 1e-6;
    let calc = |x: &[f64]| {
        let mut w = v.to_vec();
        pf.apply_state(x, &mut w);
        let s = pf.calc_power(&w);
        let mut f: Vec<f64> = pf.pvpq_positions().iter().map(|&k| s[k].re).collect();
        f.extend(pf.pq_positions().iter().map(|&k| s[k].im));
        f
    };
    let scale = j.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst = 0.0f64;
    for col in 0..x0.len() {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[col] += h;
        xm[col] -= h;
        let (fp, fm) = (calc(&xp), calc(&xm));
        for row in 0..x0.len() {
            let fd = (fp[row] - fm[row]) / (2.0 * h);
            worst = worst.max((fd - j[(row, col)]).abs() / scale);
        }
    }
    worst
}

/// Total series and shunt losses computed branch by branch from `v`.
pub fn branch_losses(net: &Network, v: &[Complex64]) -> Complex64 {
    let mut loss = Complex64::new(0.0, 0.0);
    for br in net.branches() {
        let (i, k) = (net.position(br.from).unwrap(), net.position(br.to).unwrap());
        loss += branch_loss(br, v[i], v[k]);
    }
    loss
}

fn branch_loss(br: &Branch, vi: Complex64, vk: Complex64) -> Complex64 {
    let ys = br.series_admittance();
    let ysh = Complex64::new(0.0, br.b_shunt / 2.0);
    let iik = (vi - vk) * ys + vi * ysh;
    let iki = (vk - vi) * ys + vk * ysh;
    vi * iik.conj() + vk * iki.conj()
}
