//! Command-line front end.
//!
//! `run` executes one scenario and writes `trace.csv`, `indices.csv`,
//! `summary.json` and one snapshot CSV per monitored load. `table1` runs the
//! three bundled scenarios and prints the margin table.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cpf::PvTrace;
use crate::estimator::ZdFormula;
use crate::fmt::{csv_row, fmt9};
use crate::measurements::{add_noise, extract_snapshots, snapshots_csv};
use crate::netmodel::BusId;
use crate::scenarios::{run_scenario, EstimatorMode, FeederChoice, ScenarioConfig, ScenarioResult};
use crate::stability::{Classification, DEFAULT_DEADBAND};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const TRACE_CSV_HEADER: &str = "lambda,total_load_mw,bus,v_mag,v_ang_deg";
pub const INDICES_CSV_HEADER: &str = "scenario,bus,total_load_mw,vsi,tddi,z_t_mag,z_d_mag,z_l_mag,e_th_mag,classification";

#[derive(Debug, Parser)]
#[command(name = "tddi", version, about = "Transmission vs. distribution limited voltage stability")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    #[value(name = "two_point")]
    TwoPoint,
    #[value(name = "lsq")]
    Lsq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Standard,
    Fc1,
    Fc2,
}

impl ScenarioArg {
    fn name(self) -> &'static str {
        match self {
            ScenarioArg::Standard => "standard",
            ScenarioArg::Fc1 => "fc1",
            ScenarioArg::Fc2 => "fc2",
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Case file path or builtin name (case9).
    #[arg(long, default_value = "case9")]
    pub case: String,
    /// Feeder file path or builtin name (fc1, fc2).
    #[arg(long)]
    pub feeder: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub replicas: usize,
    #[arg(long = "attach-bus", default_value_t = 5)]
    pub attach_bus: u32,
    /// Continuation step in lambda.
    #[arg(long, default_value_t = 0.02)]
    pub step: f64,
    #[arg(long = "noise-sigma", default_value_t = 0.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::TwoPoint)]
    pub estimator: EstimatorArg,
    /// Snapshots per least-squares estimate.
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_DEADBAND)]
    pub deadband: f64,
    /// Estimate Z_D from substation voltages only instead of the feeder drop.
    #[arg(long = "literal-eq8")]
    pub literal_eq8: bool,
    /// Monitor the loads of every feeder replica, not just the first.
    #[arg(long = "all-replicas")]
    pub all_replicas: bool,
    /// Scenario label written into outputs; defaults to the feeder name or "standard".
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = "tddi-out")]
    pub out: PathBuf,
    /// Print the summary as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, clap::Args)]
pub struct Table1Args {
    /// Run only one scenario.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long, default_value_t = 0.02)]
    pub step: f64,
    #[arg(long, default_value_t = DEFAULT_DEADBAND)]
    pub deadband: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write trace, indices and summary files.
    Run(RunArgs),
    /// Print the loading margin table for the bundled scenarios.
    Table1(Table1Args),
}

/// One summary row; mirrors the scenario result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario: String,
    pub margin_mw: f64,
    pub base_load_mw: f64,
    pub nose_load_mw: f64,
    pub critical_bus: Option<String>,
    pub tddi_at_critical: Option<f64>,
    pub classification: Option<Classification>,
}

impl ReportRow {
    pub fn from_result(r: &ScenarioResult) -> Self {
        ReportRow {
            scenario: r.name.clone(),
            margin_mw: r.margin_mw,
            base_load_mw: r.trace.points[0].total_load_mw,
            nose_load_mw: r.trace.nose().total_load_mw,
            critical_bus: r.critical_bus_name().map(str::to_owned),
            tddi_at_critical: r.nose_tddi,
            classification: r.nose_classification,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    #[serde(flatten)]
    pub row: ReportRow,
    pub nose_v_bus5: Option<f64>,
    pub reference_margin_mw: f64,
    pub reference_comment: &'static str,
}

fn reference_row(name: &str) -> (f64, &'static str) {
    match name {
        "fc1" => (163.0, "Large reduction in margin"),
        "fc2" => (419.0, "Small reduction in margin"),
        _ => (467.5, "-"),
    }
}

pub fn trace_csv(trace: &PvTrace) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for p in &trace.points {
        for (bus, v) in trace.network.buses().iter().zip(&p.solution.v) {
            out.push_str(&csv_row(&[
                fmt9(p.lambda),
                fmt9(p.total_load_mw),
                bus.id.to_string(),
                fmt9(v.norm()),
                fmt9(v.arg().to_degrees()),
            ]));
        }
    }
    out
}

pub fn indices_csv(result: &ScenarioResult) -> String {
    let mut out = String::from(INDICES_CSV_HEADER);
    out.push('\n');
    for s in &result.series {
        for r in &s.records {
            let eq = &r.equivalent;
            out.push_str(&csv_row(&[
                result.name.clone(),
                s.name.clone(),
                fmt9(r.total_load_mw),
                fmt9(r.vsi),
                fmt9(r.tddi),
                fmt9(eq.z_t.norm()),
                fmt9(eq.z_d.norm()),
                fmt9(eq.z_l.norm()),
                fmt9(eq.e_th.norm()),
                r.classification.to_string(),
            ]));
        }
    }
    out
}

/// Writes via a temporary file and rename so readers never see partial output.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

fn run_config(args: &RunArgs) -> ScenarioConfig {
    let feeder = args.feeder.as_ref().map(|f| FeederChoice {
        source: f.clone(),
        attach_bus: BusId(args.attach_bus),
        replicas: args.replicas,
    });
    let name = args.name.clone().unwrap_or_else(|| match &args.feeder {
        Some(f) => Path::new(f).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| f.clone()),
        None => "standard".into(),
    });
    let mut cfg = ScenarioConfig::new(name, args.case.clone(), feeder);
    cfg.cpf.step = args.step;
    cfg.cpf.min_step = cfg.cpf.min_step.min(args.step);
    cfg.noise_sigma = args.noise_sigma;
    cfg.seed = args.seed;
    cfg.estimator = match args.estimator {
        EstimatorArg::TwoPoint => EstimatorMode::TwoPoint,
        EstimatorArg::Lsq => EstimatorMode::Lsq { window: args.window },
    };
    cfg.zd_formula = if args.literal_eq8 { ZdFormula::SubstationOnly } else { ZdFormula::FeederDrop };
    cfg.deadband = args.deadband;
    cfg.monitor_all_replicas = args.all_replicas;
    cfg
}

fn opt_fmt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

fn summary_line(row: &ReportRow) -> String {
    format!(
        "{}  margin {:.1} MW  critical bus {}  TDDI {}  {}",
        row.scenario,
        row.margin_mw,
        row.critical_bus.as_deref().unwrap_or("-"),
        opt_fmt(row.tddi_at_critical, 3),
        row.classification.map(|c| c.as_str()).unwrap_or("-"),
    )
}

fn fail(err: &mut dyn Write, code: i32, msg: impl std::fmt::Display) -> i32 {
    let _ = writeln!(err, "error: {msg}");
    code
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = run_config(args);
    let result = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(err, if e.is_config() { EXIT_CONFIG } else { EXIT_NUMERIC }, e),
    };
    let row = ReportRow::from_result(&result);

    let write_all = || -> std::io::Result<()> {
        std::fs::create_dir_all(&args.out)?;
        write_atomic(&args.out.join("trace.csv"), &trace_csv(&result.trace))?;
        write_atomic(&args.out.join("indices.csv"), &indices_csv(&result))?;
        let summary = serde_json::to_string_pretty(&row).expect("summary serializes");
        write_atomic(&args.out.join("summary.json"), &(summary + "\n"))?;
        for (idx, s) in result.series.iter().enumerate() {
            let snaps = extract_snapshots(&result.trace, &s.load)
                .and_then(|c| add_noise(&c, cfg.noise_sigma, cfg.seed.wrapping_add(idx as u64)))
                .map_err(std::io::Error::other)?;
            write_atomic(&args.out.join(format!("snapshots-{}.csv", s.name)), &snapshots_csv(&snaps))?;
        }
        Ok(())
    };
    if let Err(e) = write_all() {
        return fail(err, EXIT_CONFIG, format!("writing {}: {e}", args.out.display()));
    }

    let text = if args.json {
        serde_json::to_string_pretty(&row).expect("summary serializes")
    } else {
        summary_line(&row)
    };
    let _ = writeln!(out, "{text}");
    EXIT_OK
}

/// Runs the requested bundled scenarios concurrently.
pub fn table1_rows(scenarios: &[&str], step: f64, deadband: f64) -> Result<Vec<Table1Row>, crate::ScenarioError> {
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|name| {
                scope.spawn(move || {
                    let mut cfg = ScenarioConfig::builtin(name).expect("known scenario");
                    cfg.cpf.step = step;
                    cfg.cpf.min_step = cfg.cpf.min_step.min(step);
                    cfg.deadband = deadband;
                    run_scenario(&cfg)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    results
        .into_iter()
        .map(|r| {
            let r = r?;
            let (reference_margin_mw, reference_comment) = reference_row(&r.name);
            let nose_v_bus5 = r.network().position(BusId(5)).map(|k| r.trace.nose().solution.v[k].norm());
            Ok(Table1Row { row: ReportRow::from_result(&r), nose_v_bus5, reference_margin_mw, reference_comment })
        })
        .collect()
}

fn display_name(name: &str) -> &str {
    match name {
        "standard" => "Standard",
        "fc1" => "FC1",
        "fc2" => "FC2",
        other => other,
    }
}

fn cmd_table1(args: &Table1Args, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let all = ["standard", "fc1", "fc2"];
    let names: Vec<&str> = match args.scenario {
        Some(s) => vec![s.name()],
        None => all.to_vec(),
    };
    let rows = match table1_rows(&names, args.step, args.deadband) {
        Ok(r) => r,
        Err(e) => return fail(err, if e.is_config() { EXIT_CONFIG } else { EXIT_NUMERIC }, e),
    };
    if args.json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
        return EXIT_OK;
    }
    let _ = writeln!(
        out,
        "{:<9} {:>11} {:>11} {:>9} {:>13} {:>7}  {:<21} Note",
        "Bus 5", "Margin MW", "Ref MW", "V5 nose", "Critical bus", "TDDI", "Classification"
    );
    for t in &rows {
        let r = &t.row;
        let _ = writeln!(
            out,
            "{:<9} {:>11.1} {:>11.1} {:>9} {:>13} {:>7}  {:<21} {}",
            display_name(&r.scenario),
            r.margin_mw,
            t.reference_margin_mw,
            opt_fmt(t.nose_v_bus5, 3),
            r.critical_bus.as_deref().unwrap_or("-"),
            opt_fmt(r.tddi_at_critical, 3),
            r.classification.map(|c| c.as_str()).unwrap_or("-"),
            t.reference_comment,
        );
    }
    EXIT_OK
}

/// Parses `args` (including the program name) and runs the command.
/// Reports go to `out`, diagnostics to `err`. Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match &cli.command {
        Command::Run(a) => cmd_run(a, out, err),
        Command::Table1(a) => cmd_table1(a, out, err),
    }
}
