//! Front-end operations behind the `v2xmac` binary: scenario expansion,
//! parallel evaluation and CSV output.

pub mod recipes;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use v2xmac_core::coupling::CouplingError;
use v2xmac_core::metrics::EvaluateError;
use v2xmac_core::scenario::ConfigError;
use v2xmac_core::{evaluate, MetricsReport, ScenarioConfig, Technology};
use v2xmac_sim::{run_sim, CsvTraceWriter, SimError, SimReport, Simulation};

pub const SOLVE_SCHEMA: &str = "# schema v2xmac-solve v1";
pub const SIMULATE_SCHEMA: &str = "# schema v2xmac-simulate v1";
pub const COMPARE_SCHEMA: &str = "# schema v2xmac-compare v1";

const COORDINATES: [&str; 9] = ["tech", "N", "Gamma", "T_C", "T_D", "K", "lambda", "P_rk", "AIFSN"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error("{0}")]
    Usage(String),
    #[error("{point}: {source}")]
    NoConvergence { point: String, source: CouplingError },
    #[error("{point}: {source}")]
    Solver { point: String, source: EvaluateError },
    #[error("{point}: {source}")]
    Simulation { point: String, source: SimError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Simulation { source: SimError::Scenario(_) | SimError::InvalidDuration(_), .. } => 2,
            CliError::NoConvergence { .. } => 3,
            _ => 1,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    parse_config(&text, &path.display().to_string())
}

pub fn parse_config(text: &str, origin: &str) -> Result<ScenarioConfig, CliError> {
    ScenarioConfig::parse(text).map_err(|source| CliError::Config { path: origin.to_owned(), source })
}

/// One technology at one scenario point.
#[derive(Debug, Clone)]
pub struct Point {
    pub tech: Technology,
    pub scenario: ScenarioConfig,
}

impl Point {
    /// Coordinates identifying the point in error messages.
    pub fn label(&self) -> String {
        let s = &self.scenario;
        format!(
            "tech={} n={} gamma={} t_c={} t_d={} k={} lambda={} p_rk={} aifsn={}",
            self.tech,
            s.vehicles,
            s.cv2x.gamma,
            s.traffic.cam_interval,
            s.traffic.denm_interval,
            s.traffic.denm_repeats,
            s.traffic.denm_rate,
            s.cv2x.p_keep,
            s.dot11p.aifsn
        )
    }

    fn coordinates(&self, cam_interval: u32) -> Vec<String> {
        let s = &self.scenario;
        vec![
            self.tech.to_string(),
            s.vehicles.to_string(),
            s.cv2x.gamma.to_string(),
            cam_interval.to_string(),
            s.traffic.denm_interval.to_string(),
            s.traffic.denm_repeats.to_string(),
            s.traffic.denm_rate.to_string(),
            s.cv2x.p_keep.to_string(),
            s.dot11p.aifsn.to_string(),
        ]
    }
}

/// Expands sweeps and technologies: scenario points in sweep order, each
/// followed by its technologies (C-V2X first).
pub fn expand(cfg: &ScenarioConfig) -> Result<Vec<Point>, CliError> {
    let points = cfg.points().map_err(|source| CliError::Config { path: "sweep".into(), source })?;
    Ok(points
        .into_iter()
        .flat_map(|scenario| {
            scenario.tech.technologies().into_iter().map(move |tech| Point { tech, scenario: scenario.clone() })
        })
        .collect())
}

fn solve_point(p: &Point) -> Result<MetricsReport, CliError> {
    evaluate(p.tech, &p.scenario).map_err(|source| match source {
        EvaluateError::Coupling(c @ CouplingError::NoFixedPoint { .. }) => {
            CliError::NoConvergence { point: p.label(), source: c }
        }
        other => CliError::Solver { point: p.label(), source: other },
    })
}

/// Solves every point in parallel; results keep the order of `points`.
pub fn solve_points(points: &[Point]) -> Result<Vec<MetricsReport>, CliError> {
    points.par_iter().map(solve_point).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn finish(schema: &str, w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let body = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
    let body = String::from_utf8(body).expect("CSV fields are UTF-8");
    Ok(format!("{schema}\n{body}"))
}

pub fn solve_csv(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let points = expand(cfg)?;
    let reports = solve_points(&points)?;
    let mut w = writer();
    let mut header: Vec<&str> = COORDINATES.to_vec();
    header.extend([
        "theta", "P_qe", "P_t", "P_txo", "P_col", "d_avg_ms", "CU_avg", "iterations", "converged",
    ]);
    w.write_record(&header)?;
    for (p, r) in points.iter().zip(&reports) {
        let mut row = p.coordinates(r.cam_interval);
        row.extend([
            r.theta.to_string(),
            r.p_qe.to_string(),
            r.p_t.to_string(),
            opt(r.p_txo),
            r.p_col.to_string(),
            r.d_avg_ms.to_string(),
            r.cu_avg.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
        ]);
        w.write_record(&row)?;
    }
    finish(SOLVE_SCHEMA, w)
}

/// Simulation settings shared by all points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub seed: u64,
    pub duration_s: f64,
    pub replications: u32,
}

fn simulate_point(p: &Point, s: &SimSettings) -> Result<SimReport, CliError> {
    run_sim(p.tech, &p.scenario, s.seed, s.duration_s, s.replications)
        .map_err(|source| CliError::Simulation { point: p.label(), source })
}

pub fn simulate_csv(cfg: &ScenarioConfig, settings: &SimSettings) -> Result<String, CliError> {
    let points = expand(cfg)?;
    let reports: Vec<SimReport> = points.par_iter().map(|p| simulate_point(p, settings)).collect::<Result<_, _>>()?;
    let mut w = writer();
    let mut header: Vec<&str> = COORDINATES.to_vec();
    header.extend([
        "seed", "replications", "duration_s", "P_col", "P_col_ci95", "d_avg_ms", "d_avg_ci95", "CU_avg", "CU_ci95",
        "generated", "transmissions", "drops", "unreliable",
    ]);
    w.write_record(&header)?;
    for (p, r) in points.iter().zip(&reports) {
        let mut row = p.coordinates(p.scenario.traffic.cam_interval);
        row.extend([
            r.seed.to_string(),
            r.replications.to_string(),
            r.sim_duration_s.to_string(),
            r.p_col_hat.to_string(),
            r.ci95.p_col.to_string(),
            r.d_avg_hat_ms.to_string(),
            r.ci95.d_avg_ms.to_string(),
            r.cu_avg_hat.to_string(),
            r.ci95.cu_avg.to_string(),
            r.generated.to_string(),
            r.transmissions.to_string(),
            r.drops.to_string(),
            r.unreliable.to_string(),
        ]);
        w.write_record(&row)?;
    }
    finish(SIMULATE_SCHEMA, w)
}

/// `(sim − model)/model`; 0 when both agree exactly.
pub fn relative_error(model: f64, sim: f64) -> f64 {
    if model == sim {
        0.0
    } else {
        (sim - model) / model
    }
}

/// One analytic/simulated pair at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub model: MetricsReport,
    pub sim: SimReport,
}

pub fn compare_points(points: &[Point], settings: &SimSettings) -> Result<Vec<Comparison>, CliError> {
    points
        .par_iter()
        .map(|p| Ok(Comparison { model: solve_point(p)?, sim: simulate_point(p, settings)? }))
        .collect()
}

pub fn compare_csv(cfg: &ScenarioConfig, settings: &SimSettings) -> Result<String, CliError> {
    let points = expand(cfg)?;
    let rows = compare_points(&points, settings)?;
    let mut w = writer();
    let mut header: Vec<&str> = COORDINATES.to_vec();
    header.extend(["seed", "replications", "duration_s"]);
    for m in ["P_col", "d_avg_ms", "CU_avg"] {
        header.extend(match m {
            "P_col" => ["P_col_model", "P_col_sim", "P_col_rel_err", "P_col_ci95"],
            "d_avg_ms" => ["d_avg_model_ms", "d_avg_sim_ms", "d_avg_rel_err", "d_avg_ci95"],
            _ => ["CU_avg_model", "CU_avg_sim", "CU_avg_rel_err", "CU_avg_ci95"],
        });
    }
    header.push("unreliable");
    w.write_record(&header)?;
    for (p, c) in points.iter().zip(&rows) {
        let (m, s) = (&c.model, &c.sim);
        let mut row = p.coordinates(m.cam_interval);
        row.extend([s.seed.to_string(), s.replications.to_string(), s.sim_duration_s.to_string()]);
        for (model, sim, ci) in [
            (m.p_col, s.p_col_hat, s.ci95.p_col),
            (m.d_avg_ms, s.d_avg_hat_ms, s.ci95.d_avg_ms),
            (m.cu_avg, s.cu_avg_hat, s.ci95.cu_avg),
        ] {
            row.extend([model.to_string(), sim.to_string(), relative_error(model, sim).to_string(), ci.to_string()]);
        }
        row.push(s.unreliable.to_string());
        w.write_record(&row)?;
    }
    finish(COMPARE_SCHEMA, w)
}

/// Writes the trace of replication 0; the config must describe one point.
pub fn write_trace(cfg: &ScenarioConfig, settings: &SimSettings, path: &Path) -> Result<(), CliError> {
    let points = expand(cfg)?;
    let [p] = points.as_slice() else {
        return Err(CliError::Usage(format!("--trace needs exactly one technology and point, got {}", points.len())));
    };
    let sim = Simulation::new(p.tech, &p.scenario, settings.seed, settings.duration_s)
        .map_err(|source| CliError::Simulation { point: p.label(), source })?;
    let io = |source| CliError::Io { path: path.to_owned(), source };
    let file = fs::File::create(path).map_err(io)?;
    let mut sink = CsvTraceWriter::new(std::io::BufWriter::new(file));
    sim.run_replication(0, Some(&mut sink));
    sink.finish().map_err(io)?;
    Ok(())
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io { path: p.to_owned(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
