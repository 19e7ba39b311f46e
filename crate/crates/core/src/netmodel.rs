//! Per-unit network data model, case-file I/O and feeder attachment.
//!
//! A [`Network`] is immutable once built: every constructor goes through
//! [`Network::new`], which validates the topology and the bus/generator
//! invariants. Buses are addressed by [`BusId`] externally and by dense
//! position internally (the row/column order of [`ybus`]).

use std::collections::{HashMap, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::NetError;

/// Bus identifier as it appears in case files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    /// Voltage magnitude setpoint; present only for slack and pv buses.
    pub v_setpoint: Option<f64>,
    #[serde(rename = "p_load")]
    pub base_load_p: f64,
    #[serde(rename = "q_load")]
    pub base_load_q: f64,
    pub name: String,
}

impl Bus {
    pub fn base_load(&self) -> Complex64 {
        Complex64::new(self.base_load_p, self.base_load_q)
    }
}

fn unit_tap() -> f64 {
    1.0
}

fn is_unit_tap(tap: &f64) -> bool {
    *tap == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance, split evenly between the two ends.
    #[serde(rename = "b")]
    pub b_shunt: f64,
    #[serde(default = "unit_tap", skip_serializing_if = "is_unit_tap")]
    pub tap: f64,
}

impl Branch {
    pub fn new(from: BusId, to: BusId, z: Complex64, b_shunt: f64) -> Self {
        Branch { from, to, r: z.re, x: z.im, b_shunt, tap: 1.0 }
    }

    pub fn impedance(&self) -> Complex64 {
        Complex64::new(self.r, self.x)
    }

    pub fn series_admittance(&self) -> Complex64 {
        self.impedance().inv()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: BusId,
    #[serde(rename = "p")]
    pub base_p: f64,
    pub v_setpoint: f64,
}

/// On-disk layout of a case file. Field names are normative.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    mva_base: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    mva_base: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    index: HashMap<BusId, usize>,
    slack: usize,
}

impl Network {
    /// Builds a network and checks every structural invariant.
    pub fn new(
        mva_base: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
    ) -> Result<Self, NetError> {
        let invalid = |msg: String| Err(NetError::Validation(msg));

        if !(mva_base > 0.0 && mva_base.is_finite()) {
            return invalid(format!("mva_base must be positive, got {mva_base}"));
        }
        if buses.is_empty() {
            return invalid("network has no buses".into());
        }

        let mut index = HashMap::with_capacity(buses.len());
        for (k, bus) in buses.iter().enumerate() {
            if index.insert(bus.id, k).is_some() {
                return invalid(format!("duplicate bus id {}", bus.id));
            }
            match (bus.kind, bus.v_setpoint) {
                (BusKind::Pq, Some(_)) => {
                    return invalid(format!("pq bus {} must not carry a v_setpoint", bus.id))
                }
                (BusKind::Slack | BusKind::Pv, None) => {
                    return invalid(format!("bus {} needs a v_setpoint", bus.id))
                }
                (BusKind::Slack | BusKind::Pv, Some(v)) if !(v > 0.0 && v.is_finite()) => {
                    return invalid(format!("bus {} v_setpoint must be positive, got {v}", bus.id))
                }
                _ => {}
            }
            if !bus.base_load_p.is_finite() || !bus.base_load_q.is_finite() {
                return invalid(format!("bus {} load is not finite", bus.id));
            }
        }

        let slacks: Vec<usize> = buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Slack)
            .map(|(k, _)| k)
            .collect();
        let slack = match slacks.as_slice() {
            [k] => *k,
            [] => return invalid("network has no slack bus".into()),
            _ => return invalid(format!("network has {} slack buses, expected exactly one", slacks.len())),
        };

        for (k, br) in branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !index.contains_key(&end) {
                    return invalid(format!("branch {k} references unknown bus {end}"));
                }
            }
            if br.from == br.to {
                return invalid(format!("branch {k} is a self-loop on bus {}", br.from));
            }
            if !(br.r >= 0.0) || !br.x.is_finite() || !br.b_shunt.is_finite() {
                return invalid(format!("branch {k} has invalid parameters"));
            }
            if br.r == 0.0 && br.x == 0.0 {
                return invalid(format!("branch {k} has zero impedance"));
            }
            if br.tap != 1.0 {
                return invalid(format!("branch {k} has off-nominal tap {}; only 1.0 is supported", br.tap));
            }
        }

        for (k, gen) in generators.iter().enumerate() {
            let Some(&pos) = index.get(&gen.bus) else {
                return invalid(format!("generator {k} references unknown bus {}", gen.bus));
            };
            let bus = &buses[pos];
            if bus.kind == BusKind::Pq {
                return invalid(format!("generator {k} sits on pq bus {}", gen.bus));
            }
            if !(gen.base_p >= 0.0) {
                return invalid(format!("generator {k} has negative base_p {}", gen.base_p));
            }
            if bus.v_setpoint.is_some_and(|v| (v - gen.v_setpoint).abs() > 1e-12) {
                return invalid(format!(
                    "generator {k} v_setpoint {} disagrees with bus {} setpoint",
                    gen.v_setpoint, gen.bus
                ));
            }
        }

        // connectivity by BFS from the slack
        let mut adj = vec![Vec::new(); buses.len()];
        for br in &branches {
            let (f, t) = (index[&br.from], index[&br.to]);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; buses.len()];
        let mut queue = VecDeque::from([slack]);
        seen[slack] = true;
        while let Some(k) = queue.pop_front() {
            for &n in &adj[k] {
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return invalid(format!("bus {} is not connected to the slack", buses[k].id));
        }

        Ok(Network { mva_base, buses, branches, generators, index, slack })
    }

    pub fn mva_base(&self) -> f64 {
        self.mva_base
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    /// Dense position of a bus id.
    pub fn position(&self, id: BusId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.position(id).map(|k| &self.buses[k])
    }

    pub fn bus_by_name(&self, name: &str) -> Option<&Bus> {
        self.buses.iter().find(|b| b.name == name)
    }

    pub fn slack_position(&self) -> usize {
        self.slack
    }

    pub fn total_base_load(&self) -> Complex64 {
        self.buses.iter().map(Bus::base_load).sum()
    }

    /// Serializes to the JSON case-file format.
    pub fn to_case_string(&self) -> String {
        let file = CaseFile {
            mva_base: self.mva_base,
            buses: self.buses.clone(),
            branches: self.branches.clone(),
            generators: self.generators.clone(),
        };
        serde_json::to_string_pretty(&file).expect("case file serialization cannot fail")
    }
}

/// Parses and validates a JSON case file.
pub fn load_case(source: &str) -> Result<Network, NetError> {
    let file: CaseFile = serde_json::from_str(source).map_err(|e| NetError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Network::new(file.mva_base, file.buses, file.branches, file.generators)
}

/// A distribution feeder template (D0-D1, D1-D2, D1-D3) and how many
/// identical copies hang off the attach bus.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederSpec {
    pub name: String,
    pub attach_bus: BusId,
    pub z_d0_d1: Complex64,
    pub z_d1_d2: Complex64,
    pub z_d1_d3: Complex64,
    pub load_d2: Complex64,
    pub load_d3: Complex64,
    pub replicas: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeederFile {
    #[serde(default)]
    name: Option<String>,
    z_d0_d1: [f64; 2],
    z_d1_d2: [f64; 2],
    z_d1_d3: [f64; 2],
    load_d2: [f64; 2],
    load_d3: [f64; 2],
}

impl FeederSpec {
    /// Parses a `.feeder` file. Complex values are `[re, im]` pairs.
    pub fn from_feeder_file(source: &str, attach_bus: BusId, replicas: usize) -> Result<Self, NetError> {
        let f: FeederFile = serde_json::from_str(source).map_err(|e| NetError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let c = |p: [f64; 2]| Complex64::new(p[0], p[1]);
        Ok(FeederSpec {
            name: f.name.unwrap_or_else(|| "feeder".into()),
            attach_bus,
            z_d0_d1: c(f.z_d0_d1),
            z_d1_d2: c(f.z_d1_d2),
            z_d1_d3: c(f.z_d1_d3),
            load_d2: c(f.load_d2),
            load_d3: c(f.load_d3),
            replicas,
        })
    }

    pub fn total_load(&self) -> Complex64 {
        (self.load_d2 + self.load_d3) * self.replicas as f64
    }
}

/// Name given to distribution bus `k` (1..=3) of feeder replica `n` (1-based).
pub fn feeder_bus_name(k: usize, n: usize) -> String {
    format!("D{k}-feeder{n}")
}

/// Replaces the load at `spec.attach_bus` with `spec.replicas` parallel
/// feeders. New buses get ids above the current maximum, three per replica
/// in D1, D2, D3 order.
pub fn attach_feeders(net: &Network, spec: &FeederSpec) -> Result<Network, NetError> {
    if spec.replicas < 1 {
        return Err(NetError::Validation("feeder replicas must be at least 1".into()));
    }
    let Some(attach) = net.position(spec.attach_bus) else {
        return Err(NetError::UnknownBus(spec.attach_bus));
    };

    let replaced = net.buses[attach].base_load();
    let added = spec.total_load();
    if (replaced - added).norm() > 1e-9 {
        log::warn!(
            "feeder load {added} does not match the replaced load {replaced} at bus {}",
            spec.attach_bus
        );
    }

    let mut buses = net.buses.clone();
    buses[attach].base_load_p = 0.0;
    buses[attach].base_load_q = 0.0;
    let mut branches = net.branches.clone();

    let mut next_id = net.buses.iter().map(|b| b.id.0).max().unwrap_or(0) + 1;
    for n in 1..=spec.replicas {
        let ids = [BusId(next_id), BusId(next_id + 1), BusId(next_id + 2)];
        next_id += 3;
        let loads = [Complex64::new(0.0, 0.0), spec.load_d2, spec.load_d3];
        for (k, (id, load)) in ids.iter().zip(loads).enumerate() {
            buses.push(Bus {
                id: *id,
                kind: BusKind::Pq,
                v_setpoint: None,
                base_load_p: load.re,
                base_load_q: load.im,
                name: feeder_bus_name(k + 1, n),
            });
        }
        branches.push(Branch::new(spec.attach_bus, ids[0], spec.z_d0_d1, 0.0));
        branches.push(Branch::new(ids[0], ids[1], spec.z_d1_d2, 0.0));
        branches.push(Branch::new(ids[0], ids[2], spec.z_d1_d3, 0.0));
    }

    Network::new(net.mva_base, buses, branches, net.generators.clone())
}

/// Dense nodal admittance matrix in bus position order.
pub fn ybus(net: &Network) -> DMatrix<Complex64> {
    let n = net.bus_count();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for br in &net.branches {
        let (f, t) = (net.index[&br.from], net.index[&br.to]);
        let ys = br.series_admittance();
        let half_b = Complex64::new(0.0, br.b_shunt / 2.0);
        y[(f, f)] += ys + half_b;
        y[(t, t)] += ys + half_b;
        y[(f, t)] -= ys;
        y[(t, f)] -= ys;
    }
    y
}
