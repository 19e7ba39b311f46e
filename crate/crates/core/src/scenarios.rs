//! End-to-end pipeline: network, CPF trace, snapshots, estimates, indices.

use crate::cpf::{direction, margin, run_cpf, CpfOptions, PvTrace};
use crate::data;
use crate::error::{EstimateError, ScenarioError};
use crate::estimator::{estimate_lsq, estimate_two_point_with, TdEquivalent, ZdFormula};
use crate::measurements::{add_noise, extract_snapshots, MonitoredLoad, PhasorSnapshot};
use crate::netmodel::{attach_feeders, feeder_bus_name, BusId, Network};
use crate::stability::{classify, critical_bus, record, Classification, StabilityRecord, DEFAULT_DEADBAND};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    TwoPoint,
    Lsq { window: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeederChoice {
    /// Builtin name (`fc1`, `fc2`) or path to a `.feeder` file.
    pub source: String,
    pub attach_bus: BusId,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    /// Builtin name (`case9`) or path to a case file.
    pub case: String,
    pub feeder: Option<FeederChoice>,
    pub cpf: CpfOptions,
    /// Monitor D2/D3 of every replica instead of replica 1 only.
    pub monitor_all_replicas: bool,
    pub noise_sigma: f64,
    pub seed: u64,
    pub estimator: EstimatorMode,
    pub zd_formula: ZdFormula,
    pub deadband: f64,
}

impl ScenarioConfig {
    pub fn new(name: impl Into<String>, case: impl Into<String>, feeder: Option<FeederChoice>) -> Self {
        ScenarioConfig {
            name: name.into(),
            case: case.into(),
            feeder,
            cpf: CpfOptions::default(),
            monitor_all_replicas: false,
            noise_sigma: 0.0,
            seed: 0,
            estimator: EstimatorMode::TwoPoint,
            zd_formula: ZdFormula::FeederDrop,
            deadband: DEFAULT_DEADBAND,
        }
    }

    pub fn standard() -> Self {
        Self::new("standard", "case9", None)
    }

    pub fn fc1() -> Self {
        Self::new("fc1", "case9", Some(FeederChoice { source: "fc1".into(), attach_bus: BusId(5), replicas: 10 }))
    }

    pub fn fc2() -> Self {
        Self::new("fc2", "case9", Some(FeederChoice { source: "fc2".into(), attach_bus: BusId(5), replicas: 10 }))
    }

    /// Builtin scenario by name: `standard`, `fc1` or `fc2`.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "standard" => Some(Self::standard()),
            "fc1" => Some(Self::fc1()),
            "fc2" => Some(Self::fc2()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |message: String| Err(ScenarioError::Config { scenario: self.name.clone(), message });
        if let EstimatorMode::Lsq { window } = self.estimator {
            if window < 2 {
                return bad(format!("lsq window must be at least 2, got {window}"));
            }
        }
        if !(self.deadband >= 0.0) {
            return bad(format!("deadband must be non-negative, got {}", self.deadband));
        }
        if !(self.cpf.step > 0.0) || !(self.cpf.min_step > 0.0) || self.cpf.min_step > self.cpf.step {
            return bad(format!("invalid step settings {} / {}", self.cpf.step, self.cpf.min_step));
        }
        Ok(())
    }
}

/// Stability records for one monitored load, in loading order.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSeries {
    pub load: MonitoredLoad,
    pub name: String,
    /// Trace index of the later snapshot behind each record.
    pub instants: Vec<usize>,
    pub records: Vec<StabilityRecord>,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub name: String,
    pub trace: PvTrace,
    pub series: Vec<LoadSeries>,
    pub margin_mw: f64,
    pub critical_bus: Option<BusId>,
    /// TDDI of the critical bus at the last estimate below the nose.
    pub nose_tddi: Option<f64>,
    pub nose_classification: Option<Classification>,
}

impl ScenarioResult {
    pub fn network(&self) -> &Network {
        &self.trace.network
    }

    pub fn critical_bus_name(&self) -> Option<&str> {
        self.critical_bus.and_then(|id| self.network().bus(id)).map(|b| b.name.as_str())
    }

    pub fn load_series(&self, bus_name: &str) -> Option<&LoadSeries> {
        self.series.iter().find(|s| s.name == bus_name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexField {
    Vsi,
    Tddi,
}

/// Plot-ready `(total_load_mw, value)` pairs for one monitored bus.
pub fn series(result: &ScenarioResult, bus_name: &str, field: IndexField) -> Result<Vec<(f64, f64)>, ScenarioError> {
    let s = result.load_series(bus_name).ok_or_else(|| ScenarioError::Unmonitored(bus_name.to_owned()))?;
    Ok(s.records
        .iter()
        .map(|r| {
            let v = match field {
                IndexField::Vsi => r.vsi,
                IndexField::Tddi => r.tddi,
            };
            (r.total_load_mw, v)
        })
        .collect())
}

/// Builds the scenario network: the case, with feeders attached if configured.
pub fn build_network(cfg: &ScenarioConfig) -> Result<Network, ScenarioError> {
    let wrap = |source| ScenarioError::Network { scenario: cfg.name.clone(), source };
    let base = data::resolve_case(&cfg.case).map_err(wrap)?;
    match &cfg.feeder {
        None => Ok(base),
        Some(f) => {
            let spec = data::resolve_feeder(&f.source, f.attach_bus, f.replicas).map_err(wrap)?;
            attach_feeders(&base, &spec).map_err(wrap)
        }
    }
}

fn monitored_loads(cfg: &ScenarioConfig, net: &Network) -> Vec<(MonitoredLoad, String)> {
    let Some(f) = &cfg.feeder else {
        return Vec::new();
    };
    let replicas = if cfg.monitor_all_replicas { f.replicas } else { 1 };
    let mut out = Vec::new();
    for n in 1..=replicas {
        for k in [2, 3] {
            let name = feeder_bus_name(k, n);
            if let Some(bus) = net.bus_by_name(&name) {
                if bus.base_load().norm() > 0.0 {
                    out.push((MonitoredLoad { load_bus: bus.id, substation_bus: f.attach_bus }, name));
                }
            }
        }
    }
    out
}

fn estimates(cfg: &ScenarioConfig, snaps: &[PhasorSnapshot]) -> Vec<(usize, TdEquivalent)> {
    let mut out = Vec::new();
    let window = match cfg.estimator {
        EstimatorMode::TwoPoint => 2,
        EstimatorMode::Lsq { window } => window,
    };
    for end in window.saturating_sub(1)..snaps.len() {
        let group = &snaps[end + 1 - window..=end];
        let est = match cfg.estimator {
            EstimatorMode::TwoPoint => estimate_two_point_with(&group[0], &group[1], cfg.zd_formula),
            EstimatorMode::Lsq { .. } => estimate_lsq(group),
        };
        match est {
            Ok(eq) => out.push((end, eq)),
            Err(e @ (EstimateError::InsufficientLoadChange { .. } | EstimateError::RankDeficient { .. })) => {
                log::debug!("{}: skipping instant {end}: {e}", cfg.name);
            }
            Err(e) => log::warn!("{}: estimate failed at instant {end}: {e}", cfg.name),
        }
    }
    out
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult, ScenarioError> {
    cfg.validate()?;
    let net = build_network(cfg)?;
    let trace = run_cpf(&net, &direction(&net), &cfg.cpf)
        .map_err(|source| ScenarioError::Cpf { scenario: cfg.name.clone(), source })?;

    let mut all = Vec::new();
    for (idx, (load, name)) in monitored_loads(cfg, &net).into_iter().enumerate() {
        let measure = |source| ScenarioError::Measure { scenario: cfg.name.clone(), source };
        let clean = extract_snapshots(&trace, &load).map_err(measure)?;
        let snaps = add_noise(&clean, cfg.noise_sigma, cfg.seed.wrapping_add(idx as u64)).map_err(measure)?;
        let mut instants = Vec::new();
        let mut records = Vec::new();
        for (end, eq) in estimates(cfg, &snaps) {
            let rec = record(load.load_bus, snaps[end].total_load_mw, eq, cfg.deadband)
                .map_err(|source| ScenarioError::Stability { scenario: cfg.name.clone(), source })?;
            instants.push(end);
            records.push(rec);
        }
        all.push(LoadSeries { load, name, instants, records });
    }

    // latest instant for which every monitored load has an estimate
    let common = all
        .iter()
        .map(|s| s.instants.last().copied())
        .collect::<Option<Vec<_>>>()
        .filter(|v| !v.is_empty())
        .and_then(|lasts| {
            let mut k = *lasts.iter().min().expect("non-empty");
            loop {
                if all.iter().all(|s| s.instants.contains(&k)) {
                    return Some(k);
                }
                k = k.checked_sub(1)?;
            }
        });

    let (critical, nose_tddi, nose_classification) = match common {
        Some(k) => {
            let at_level: Vec<StabilityRecord> = all
                .iter()
                .map(|s| s.records[s.instants.iter().position(|&i| i == k).expect("common instant")].clone())
                .collect();
            let bus = critical_bus(&at_level)
                .map_err(|source| ScenarioError::Stability { scenario: cfg.name.clone(), source })?;
            let rec = at_level.iter().find(|r| r.bus == bus).expect("critical bus is in the set");
            (Some(bus), Some(rec.tddi), Some(classify(rec.tddi, cfg.deadband)))
        }
        None => (None, None, None),
    };

    Ok(ScenarioResult {
        name: cfg.name.clone(),
        margin_mw: margin(&trace),
        trace,
        series: all,
        critical_bus: critical,
        nose_tddi,
        nose_classification,
    })
}
