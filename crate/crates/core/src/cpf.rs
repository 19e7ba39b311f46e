//! Predictor-corrector continuation power flow.
//!
//! The loading parameter `lambda` scales every load and every non-slack
//! generator proportionally: `load(lambda) = (1 + lambda) * base_load`.
//! Each step solves the augmented system
//!
//! ```text
//! [ F(x, lambda)     ]   = 0,     F = scheduled - calculated power
//! [ y_k - y_k^pred   ]
//! ```
//!
//! where `y = (x, lambda)` and `k` is the continuation parameter. Stepping
//! starts in `lambda`; once a pq voltage magnitude moves faster than
//! `lambda` along the tangent, that voltage takes over, which carries the
//! trace around the nose.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::CpfError;
use crate::netmodel::Network;
use crate::powerflow::{InjectionSet, PfOptions, PfSolution, PowerFlow};

/// Load and generation increments per unit `lambda`, by bus position.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingDirection {
    pub load: Vec<Complex64>,
    pub gen_p: Vec<f64>,
}

impl ScalingDirection {
    pub fn is_zero(&self) -> bool {
        self.load.iter().all(|s| s.norm() == 0.0) && self.gen_p.iter().all(|p| *p == 0.0)
    }

    /// Scheduled injections at loading `lambda`.
    pub fn injection(&self, net: &Network, lambda: f64) -> InjectionSet {
        let mut inj = InjectionSet::base(net);
        for (k, s) in inj.s.iter_mut().enumerate() {
            *s += (Complex64::new(self.gen_p[k], 0.0) - self.load[k]) * lambda;
        }
        inj
    }
}

/// Proportional increase of all loads (constant power factor) and of the
/// active output of every non-slack generator.
pub fn direction(net: &Network) -> ScalingDirection {
    let load = net.buses().iter().map(|b| b.base_load()).collect();
    let mut gen_p = vec![0.0; net.bus_count()];
    for gen in net.generators() {
        let k = net.position(gen.bus).expect("validated generator bus");
        if k != net.slack_position() {
            gen_p[k] += gen.base_p;
        }
    }
    ScalingDirection { load, gen_p }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpfOptions {
    /// Nominal step of the continuation parameter.
    pub step: f64,
    /// Steps are halved on corrector failure down to this size.
    pub min_step: f64,
    /// Corrector tolerance, p.u. power mismatch.
    pub tolerance: f64,
    pub max_corrector_iterations: usize,
    /// Largest accepted change of any bus voltage magnitude between points.
    pub max_dv: f64,
    /// Points traced past the nose before stopping.
    pub lower_points: usize,
    /// Times the nose bracket is re-traced with the step divided by
    /// `refine_factor`.
    pub nose_refinements: usize,
    pub refine_factor: f64,
    pub max_points: usize,
}

impl Default for CpfOptions {
    fn default() -> Self {
        CpfOptions {
            step: 0.02,
            min_step: 1e-4,
            tolerance: 1e-8,
            max_corrector_iterations: 30,
            max_dv: 0.1,
            lower_points: 3,
            nose_refinements: 2,
            refine_factor: 4.0,
            max_points: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub lambda: f64,
    pub solution: PfSolution,
    pub total_load_mw: f64,
}

#[derive(Debug, Clone)]
pub struct PvTrace {
    pub network: Network,
    pub direction: ScalingDirection,
    pub points: Vec<OperatingPoint>,
    pub nose_index: usize,
}

impl PvTrace {
    /// Points from the base case up to and including the nose.
    pub fn upper_branch(&self) -> &[OperatingPoint] {
        &self.points[..=self.nose_index]
    }

    pub fn nose(&self) -> &OperatingPoint {
        &self.points[self.nose_index]
    }
}

/// MW of additional total active load between the base case and the nose.
pub fn margin(trace: &PvTrace) -> f64 {
    trace.nose().total_load_mw - trace.points[0].total_load_mw
}

fn total_load_mw(net: &Network, lambda: f64) -> f64 {
    (1.0 + lambda) * net.total_base_load().re * net.mva_base()
}

/// Which component of `(x, lambda)` is held fixed by the corrector.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Parameter {
    Lambda,
    State(usize),
}

struct Continuation<'a> {
    pf: PowerFlow<'a>,
    dir: &'a ScalingDirection,
    /// dF/dlambda in residual order.
    d_lambda: DVector<f64>,
    /// Residual-order offsets of the pq magnitudes inside the state vector.
    vm_offset: usize,
}

impl<'a> Continuation<'a> {
    fn new(net: &'a Network, dir: &'a ScalingDirection) -> Self {
        let pf = PowerFlow::new(net);
        let inc: Vec<Complex64> = (0..net.bus_count())
            .map(|k| Complex64::new(dir.gen_p[k], 0.0) - dir.load[k])
            .collect();
        let mut d = Vec::with_capacity(pf.dim());
        d.extend(pf.pvpq_positions().iter().map(|&k| inc[k].re));
        d.extend(pf.pq_positions().iter().map(|&k| inc[k].im));
        let vm_offset = pf.pvpq_positions().len();
        Continuation { pf, dir, d_lambda: DVector::from_vec(d), vm_offset }
    }

    fn dim(&self) -> usize {
        self.pf.dim()
    }

    /// Augmented Jacobian of `[F; y_k - c]` with respect to `(x, lambda)`.
    fn augmented(&self, v: &[Complex64], param: Parameter) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(n + 1, n + 1);
        let j = self.pf.jacobian(v);
        a.view_mut((0, 0), (n, n)).copy_from(&(-j));
        a.view_mut((0, n), (n, 1)).copy_from(&self.d_lambda);
        match param {
            Parameter::Lambda => a[(n, n)] = 1.0,
            Parameter::State(i) => a[(n, i)] = 1.0,
        }
        a
    }

    /// Unit tangent scaled so that the entry of `param` equals `sign`.
    fn tangent(&self, v: &[Complex64], param: Parameter, sign: f64) -> Result<DVector<f64>, CpfError> {
        let n = self.dim();
        let a = self.augmented(v, param);
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = sign;
        a.lu().solve(&rhs).ok_or(CpfError::SingularTangent)
    }

    /// Picks the parameter with the largest tangent component among lambda
    /// and the pq magnitudes; returns it with the tangent rescaled to +-1 there.
    fn select(&self, t: &DVector<f64>) -> (Parameter, DVector<f64>) {
        let n = self.dim();
        let mut best = (Parameter::Lambda, t[n].abs());
        for i in self.vm_offset..n {
            if t[i].abs() > best.1 {
                best = (Parameter::State(i), t[i].abs());
            }
        }
        let idx = match best.0 {
            Parameter::Lambda => n,
            Parameter::State(i) => i,
        };
        let scaled = t / t[idx].abs();
        (best.0, scaled)
    }

    fn corrector(
        &self,
        start: &[Complex64],
        mut y: DVector<f64>,
        param: Parameter,
        opts: &CpfOptions,
    ) -> Option<(PfSolution, f64)> {
        let n = self.dim();
        let (idx, target) = match param {
            Parameter::Lambda => (n, y[n]),
            Parameter::State(i) => (i, y[i]),
        };
        let mut v = start.to_vec();
        self.pf.apply_state(&y.as_slice()[..n], &mut v);
        let mut iterations = 0;
        loop {
            let lambda = y[n];
            let inj = self.dir.injection(self.pf.network(), lambda);
            let worst = self.pf.max_complex_mismatch(&inj, &v);
            let pinned = (y[idx] - target).abs();
            if !worst.is_finite() {
                return None;
            }
            if worst <= opts.tolerance && pinned <= 1e-12 {
                let sol = PfSolution { v, iterations, max_mismatch: worst };
                return Some((sol, lambda));
            }
            if iterations >= opts.max_corrector_iterations {
                return None;
            }
            iterations += 1;
            let mut rhs = DVector::zeros(n + 1);
            let f = self.pf.mismatch(&inj, &v);
            for (r, fi) in f.iter().enumerate() {
                rhs[r] = -fi;
            }
            rhs[n] = -(y[idx] - target);
            let dy = self.augmented(&v, param).lu().solve(&rhs)?;
            y += dy;
            self.pf.apply_state(&y.as_slice()[..n], &mut v);
        }
    }
}

fn max_dv(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a.norm() - b.norm()).abs()).fold(0.0, f64::max)
}

/// Traces the PV curve from the base case past the nose.
pub fn run_cpf(net: &Network, dir: &ScalingDirection, opts: &CpfOptions) -> Result<PvTrace, CpfError> {
    let pf_opts = PfOptions { tolerance: opts.tolerance, max_iterations: opts.max_corrector_iterations, ..PfOptions::default() };
    let cont = Continuation::new(net, dir);
    let base = cont
        .pf
        .solve(&dir.injection(net, 0.0), None, &pf_opts)
        .map_err(CpfError::BaseCase)?;

    let mut points = vec![OperatingPoint { lambda: 0.0, solution: base, total_load_mw: total_load_mw(net, 0.0) }];
    if dir.is_zero() {
        return Ok(PvTrace { network: net.clone(), direction: dir.clone(), points, nose_index: 0 });
    }

    let n = cont.dim();
    // parameter and sign in force at each point, for its tangent
    let mut params = vec![(Parameter::Lambda, 1.0)];
    let mut step_cap = opts.step;
    let mut step = step_cap;
    let mut refinements = opts.nose_refinements;
    let mut past_nose = 0;

    while points.len() < opts.max_points && past_nose < opts.lower_points {
        let last = points.last().expect("trace is non-empty");
        let (param, sign) = *params.last().expect("parallel to points");
        let t = cont.tangent(&last.solution.v, param, sign)?;
        let (next_param, t) = cont.select(&t);
        let idx = match next_param {
            Parameter::Lambda => n,
            Parameter::State(i) => i,
        };
        let next_sign = t[idx].signum();

        let mut y0 = DVector::from_vec(cont.pf.state(&last.solution.v));
        y0 = y0.push(last.lambda);

        let accepted = loop {
            let y_pred = &y0 + &t * step;
            match cont.corrector(&last.solution.v, y_pred, next_param, opts) {
                Some((sol, lambda)) if max_dv(&sol.v, &last.solution.v) <= opts.max_dv => break Some((sol, lambda)),
                _ => {
                    step /= 2.0;
                    if step < opts.min_step {
                        break None;
                    }
                }
            }
        };

        let Some((solution, lambda)) = accepted else {
            if points.len() == 1 {
                return Err(CpfError::StepUnderflow { min_step: opts.min_step });
            }
            log::debug!("cpf stopped: step underflow at lambda {}", last.lambda);
            break;
        };

        if lambda < last.lambda {
            if refinements > 0 && points.len() >= 2 {
                // back up past the current maximum and re-bracket with a finer step
                refinements -= 1;
                points.pop();
                params.pop();
                step_cap /= opts.refine_factor;
                step = step_cap;
                continue;
            }
            past_nose += 1;
        }
        if lambda < 0.0 {
            break;
        }
        let total = total_load_mw(net, lambda);
        points.push(OperatingPoint { lambda, solution, total_load_mw: total });
        params.push((next_param, next_sign));
        step = (step * 2.0).min(step_cap);
    }

    let nose_index = points
        .iter()
        .enumerate()
        .fold(0, |best, (k, p)| if p.lambda > points[best].lambda { k } else { best });

    Ok(PvTrace { network: net.clone(), direction: dir.clone(), points, nose_index })
}
