//! Newton-Raphson AC power flow in polar coordinates.
//!
//! Unknowns are the angles of every non-slack bus followed by the
//! magnitudes of every pq bus. The residual is scheduled minus calculated
//! power, ordered the same way: P for non-slack buses, then Q for pq buses.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::PfError;
use crate::netmodel::{ybus, BusKind, Network};

/// Scheduled complex injection (generation minus load) per bus position.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSet {
    pub s: Vec<Complex64>,
}

impl InjectionSet {
    /// Base-case injections: generator base outputs minus base loads.
    pub fn base(net: &Network) -> Self {
        let mut s: Vec<Complex64> = net.buses().iter().map(|b| -b.base_load()).collect();
        for gen in net.generators() {
            let k = net.position(gen.bus).expect("validated generator bus");
            s[k] += Complex64::new(gen.base_p, 0.0);
        }
        InjectionSet { s }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfSolution {
    pub v: Vec<Complex64>,
    pub iterations: usize,
    pub max_mismatch: f64,
}

impl PfSolution {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.v.iter().map(|v| v.norm()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfOptions {
    /// Maximum absolute complex power mismatch at convergence, p.u.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Reserved; solving with this set returns [`PfError::QLimitsUnsupported`].
    pub enforce_q_limits: bool,
}

impl Default for PfOptions {
    fn default() -> Self {
        PfOptions { tolerance: 1e-8, max_iterations: 30, enforce_q_limits: false }
    }
}

/// Cached admittance matrix and index sets for repeated solves on one network.
#[derive(Debug, Clone)]
pub struct PowerFlow<'a> {
    net: &'a Network,
    y: DMatrix<Complex64>,
    pvpq: Vec<usize>,
    pq: Vec<usize>,
    is_pq: Vec<bool>,
}

impl<'a> PowerFlow<'a> {
    pub fn new(net: &'a Network) -> Self {
        let pvpq: Vec<usize> = (0..net.bus_count()).filter(|&k| k != net.slack_position()).collect();
        let is_pq: Vec<bool> = net.buses().iter().map(|b| b.kind == BusKind::Pq).collect();
        let pq = (0..net.bus_count()).filter(|&k| is_pq[k]).collect();
        PowerFlow { net, y: ybus(net), pvpq, pq, is_pq }
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn ybus(&self) -> &DMatrix<Complex64> {
        &self.y
    }

    /// Number of unknowns (and residual entries).
    pub fn dim(&self) -> usize {
        self.pvpq.len() + self.pq.len()
    }

    pub fn pq_positions(&self) -> &[usize] {
        &self.pq
    }

    pub fn pvpq_positions(&self) -> &[usize] {
        &self.pvpq
    }

    /// Calculated complex power injection at each bus.
    pub fn calc_power(&self, v: &[Complex64]) -> Vec<Complex64> {
        let vv = DVector::from_column_slice(v);
        let i = &self.y * &vv;
        v.iter().zip(i.iter()).map(|(v, i)| v * i.conj()).collect()
    }

    fn check_dim(&self, n: usize) -> Result<(), PfError> {
        if n != self.net.bus_count() {
            return Err(PfError::Dimension { expected: self.net.bus_count(), got: n });
        }
        Ok(())
    }

    /// Scheduled minus calculated power, in residual order.
    pub fn mismatch(&self, inj: &InjectionSet, v: &[Complex64]) -> Vec<f64> {
        let calc = self.calc_power(v);
        let mut f = Vec::with_capacity(self.dim());
        f.extend(self.pvpq.iter().map(|&k| inj.s[k].re - calc[k].re));
        f.extend(self.pq.iter().map(|&k| inj.s[k].im - calc[k].im));
        f
    }

    /// Largest complex power mismatch over the constrained components.
    pub fn max_complex_mismatch(&self, inj: &InjectionSet, v: &[Complex64]) -> f64 {
        let calc = self.calc_power(v);
        self.pvpq
            .iter()
            .map(|&k| {
                let d = inj.s[k] - calc[k];
                if self.is_pq[k] {
                    d.norm()
                } else {
                    d.re.abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Jacobian of calculated power with respect to the unknowns, i.e. the
    /// negative derivative of [`PowerFlow::mismatch`].
    pub fn jacobian(&self, v: &[Complex64]) -> DMatrix<f64> {
        let n = v.len();
        let vv = DVector::from_column_slice(v);
        let ibus = &self.y * &vv;
        let vnorm: Vec<Complex64> = v.iter().map(|v| v / v.norm()).collect();

        // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
        // dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
        let mut ds_dva = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        let mut ds_dvm = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            for k in 0..n {
                let y = self.y[(i, k)];
                let mut a = -(y * v[k]);
                if i == k {
                    a += ibus[i];
                }
                ds_dva[(i, k)] = Complex64::i() * v[i] * a.conj();
                let mut m = v[i] * (y * vnorm[k]).conj();
                if i == k {
                    m += ibus[i].conj() * vnorm[i];
                }
                ds_dvm[(i, k)] = m;
            }
        }

        let np = self.pvpq.len();
        let dim = self.dim();
        let mut j = DMatrix::zeros(dim, dim);
        for (r, &i) in self.pvpq.iter().enumerate() {
            for (c, &k) in self.pvpq.iter().enumerate() {
                j[(r, c)] = ds_dva[(i, k)].re;
            }
            for (c, &k) in self.pq.iter().enumerate() {
                j[(r, np + c)] = ds_dvm[(i, k)].re;
            }
        }
        for (r, &i) in self.pq.iter().enumerate() {
            for (c, &k) in self.pvpq.iter().enumerate() {
                j[(np + r, c)] = ds_dva[(i, k)].im;
            }
            for (c, &k) in self.pq.iter().enumerate() {
                j[(np + r, np + c)] = ds_dvm[(i, k)].im;
            }
        }
        j
    }

    /// Unknown vector (angles of non-slack, magnitudes of pq) from voltages.
    pub fn state(&self, v: &[Complex64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.pvpq.iter().map(|&k| v[k].arg()).collect();
        x.extend(self.pq.iter().map(|&k| v[k].norm()));
        x
    }

    /// Writes an unknown vector back into `v`, keeping fixed quantities.
    pub fn apply_state(&self, x: &[f64], v: &mut [Complex64]) {
        let np = self.pvpq.len();
        for (c, &k) in self.pvpq.iter().enumerate() {
            v[k] = Complex64::from_polar(v[k].norm(), x[c]);
        }
        for (c, &k) in self.pq.iter().enumerate() {
            v[k] = Complex64::from_polar(x[np + c], v[k].arg());
        }
    }

    /// Flat start: setpoint magnitudes at slack/pv buses, 1.0 at pq, all angles zero.
    pub fn flat_start(&self) -> Vec<Complex64> {
        self.net
            .buses()
            .iter()
            .map(|b| Complex64::new(b.v_setpoint.unwrap_or(1.0), 0.0))
            .collect()
    }

    fn initial(&self, start: Option<&PfSolution>) -> Result<Vec<Complex64>, PfError> {
        let Some(start) = start else {
            return Ok(self.flat_start());
        };
        self.check_dim(start.v.len())?;
        let mut v = start.v.clone();
        for (k, bus) in self.net.buses().iter().enumerate() {
            match bus.kind {
                BusKind::Slack => v[k] = Complex64::new(bus.v_setpoint.unwrap_or(1.0), 0.0),
                BusKind::Pv => v[k] = Complex64::from_polar(bus.v_setpoint.unwrap_or(1.0), v[k].arg()),
                BusKind::Pq => {}
            }
        }
        Ok(v)
    }

    pub fn solve(
        &self,
        inj: &InjectionSet,
        start: Option<&PfSolution>,
        opts: &PfOptions,
    ) -> Result<PfSolution, PfError> {
        if opts.enforce_q_limits {
            return Err(PfError::QLimitsUnsupported);
        }
        self.check_dim(inj.s.len())?;
        let mut v = self.initial(start)?;
        let mut x = self.state(&v);

        let mut iterations = 0;
        loop {
            let worst = self.max_complex_mismatch(inj, &v);
            if !worst.is_finite() {
                return Err(PfError::NonConvergence { iterations, mismatch: worst });
            }
            if worst <= opts.tolerance {
                return Ok(PfSolution { v, iterations, max_mismatch: worst });
            }
            if iterations >= opts.max_iterations {
                return Err(PfError::NonConvergence { iterations, mismatch: worst });
            }
            iterations += 1;

            let f = DVector::from_vec(self.mismatch(inj, &v));
            let j = self.jacobian(&v);
            let dx = j.lu().solve(&f).ok_or(PfError::SingularJacobian(iterations))?;
            for (xi, di) in x.iter_mut().zip(dx.iter()) {
                *xi += di;
            }
            self.apply_state(&x, &mut v);
        }
    }
}

/// Residual of the power-flow equations at voltages `v`.
pub fn mismatch(net: &Network, inj: &InjectionSet, v: &[Complex64]) -> Vec<f64> {
    PowerFlow::new(net).mismatch(inj, v)
}

/// Solves with default options (tolerance 1e-8 p.u., 30 iterations).
pub fn solve_pf(net: &Network, inj: &InjectionSet, start: Option<&PfSolution>) -> Result<PfSolution, PfError> {
    PowerFlow::new(net).solve(inj, start, &PfOptions::default())
}
