//! Command-line front end. Every run writes into one output directory:
//! `config_echo.json` with all defaults applied, plus command-specific CSV and
//! JSON files.
//!
//! Exit codes: 0 success, 2 config or input error, 3 numeric-mode error,
//! 4 divergence.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::distill::{
    ablation_sweep, run_distillation, write_sweep, AlignmentWeights, DistillRun, Optimizer, Scenario, TrainConfig,
    SWEEP_LAMBDA1, SWEEP_LAMBDA2,
};
use crate::error::{Error, Result};
use crate::eventsim::{
    asymmetry_from_stream, integrate_frame, trigger_events, write_events, write_frames, GaussianBlob, MovingBox,
    RgbFrame, Scene, StaticTexture,
};
use crate::numerics::{Mat, Rng};
use crate::ot_align::{
    build_cost_with, exact_ot, round_to_marginals, saot_loss, sinkhorn, spatial_softmax, CostMatrix, CostMetric, ProbabilityGrid,
    ResponseMap, SinkhornConfig, TransportPlan,
};
use crate::temporal_align::TaConfig;
use crate::trackmetrics::{evaluate, read_sequence, write_curves, write_sequence, MetricCurves};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

pub const EPS_SWEEP: [f64; 4] = [1e1, 1e0, 1e-1, 1e-2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub field: Scene,
    pub frame_rate: f64,
    pub exposure_us: u64,
    pub substeps: usize,
    pub threshold_c: f64,
    pub dt_sample_us: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            field: Scene::default(),
            frame_rate: 30.0,
            exposure_us: 10_000,
            substeps: 16,
            threshold_c: 0.2,
            dt_sample_us: 1_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SinkhornSection {
    pub epsilon: f64,
    pub max_iters: usize,
    pub marginal_tol: f64,
    pub log_domain: bool,
    pub metric: CostMetric,
    pub normalized_coords: bool,
    /// Side of the random maps when no maps are given.
    pub grid: usize,
    /// Raw teacher scores, softmaxed before transport.
    pub p: Option<Vec<Vec<f64>>>,
    /// Raw student scores.
    pub q: Option<Vec<Vec<f64>>>,
    /// Two Diracs this many columns apart replace the maps.
    pub dirac: Option<usize>,
    pub eps_sweep: Vec<f64>,
    pub oracle: bool,
}

impl Default for SinkhornSection {
    fn default() -> Self {
        let s = SinkhornConfig::default();
        Self {
            epsilon: s.epsilon,
            max_iters: s.max_iters,
            marginal_tol: s.marginal_tol,
            log_domain: s.log_domain,
            metric: CostMetric::default(),
            normalized_coords: false,
            grid: 8,
            p: None,
            q: None,
            dirac: None,
            eps_sweep: Vec::new(),
            oracle: false,
        }
    }
}

impl SinkhornSection {
    pub fn solver(&self, epsilon: f64) -> SinkhornConfig {
        SinkhornConfig {
            epsilon,
            max_iters: self.max_iters,
            marginal_tol: self.marginal_tol,
            log_domain: self.log_domain,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistillSection {
    pub scenario: Scenario,
    pub sweep: bool,
    pub train: TrainConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub sequence: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scene: SimulateConfig,
    pub sinkhorn: SinkhornSection,
    pub ta: TaConfig,
    pub distill: DistillSection,
    pub metrics: MetricsSection,
}

/// Parses a config document; errors name the offending key path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: e.path().to_string(),
        detail: e.inner().to_string(),
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    parse_config(&text)
}

#[derive(Debug, Parser)]
#[command(name = "asymalign", version, about = "RGB/event asymmetry simulation, temporal and spatial alignment losses, distillation and tracking metrics")]
pub struct Cli {
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Write into a non-empty output directory.
    #[arg(long, global = true)]
    pub force: bool,
    /// JSON experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render RGB frames and an event stream from a scripted scene.
    Simulate(SimulateArgs),
    /// Entropic transport between two maps.
    Sinkhorn(SinkhornArgs),
    /// Teacher-to-student distillation run or λ sweep.
    Distill(DistillArgs),
    /// Tracking metrics for a sequence CSV.
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SceneKind {
    MovingBox,
    GaussianBlob,
    StaticTexture,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Replace the configured scene with this one at its defaults.
    #[arg(long, value_enum)]
    pub scene: Option<SceneKind>,
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SinkhornArgs {
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub marginal_tol: Option<f64>,
    #[arg(long)]
    pub log_domain: bool,
    #[arg(long, value_enum)]
    pub metric: Option<CostMetric>,
    #[arg(long)]
    pub normalized: bool,
    #[arg(long)]
    pub grid: Option<usize>,
    /// CSV of raw teacher scores, one grid row per line.
    #[arg(long)]
    pub p: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<PathBuf>,
    /// Two Diracs `D` columns apart.
    #[arg(long, value_name = "D")]
    pub dirac: Option<usize>,
    /// Solve at ε ∈ {1e1, 1e0, 1e-1, 1e-2}.
    #[arg(long)]
    pub eps_sweep: bool,
    /// Compare against the exact transport cost (n ≤ 64).
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long, value_enum)]
    pub optimizer: Option<Optimizer>,
    /// Run the 6×5 λ grid instead of a single run.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Sequence CSV `frame,pred_x,pred_y,pred_w,pred_h,gt_x,gt_y,gt_w,gt_h,present`.
    pub sequence: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Underflow { .. } | Error::Convergence { .. } | Error::Numeric(_) => EXIT_NUMERIC,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_INPUT,
    }
}

/// Parses arguments, runs, and reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(summary) => {
            // a closed pipe on stdout is not a failure of the run
            let _ = writeln!(std::io::stdout(), "{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            match &e {
                Error::Underflow { .. } => eprintln!("hint: pass --log-domain"),
                Error::Divergence { last_finite: Some(s), .. } => eprintln!("last finite step: {s}"),
                _ => {}
            }
            exit_code(&e)
        }
    }
}

/// Runs one command and returns the text to print.
pub fn run(cli: Cli) -> Result<String> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = Output::new(cli.out, cli.force);
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&mut cfg, a, &out),
        Command::Sinkhorn(a) => cmd_sinkhorn(&mut cfg, a, &out),
        Command::Distill(a) => cmd_distill(&mut cfg, a, &out),
        Command::Metrics(a) => cmd_metrics(&mut cfg, a, &out),
    }
}

struct Output {
    dir: PathBuf,
    force: bool,
}

impl Output {
    fn new(dir: PathBuf, force: bool) -> Self {
        Self { dir, force }
    }

    /// Creates the directory, refusing to reuse a non-empty one without `--force`.
    fn prepare(&self, cfg: &ExperimentConfig) -> Result<()> {
        if self.dir.exists() && fs::read_dir(&self.dir)?.next().is_some() && !self.force {
            return Err(Error::Argument(format!(
                "output directory {} is not empty; pass --force to overwrite",
                self.dir.display()
            )));
        }
        fs::create_dir_all(&self.dir)?;
        self.json("config_echo.json", cfg)
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

fn cmd_simulate(cfg: &mut ExperimentConfig, a: SimulateArgs, out: &Output) -> Result<String> {
    if let Some(kind) = a.scene {
        cfg.scene.field = match kind {
            SceneKind::MovingBox => Scene::MovingBox(MovingBox::default()),
            SceneKind::GaussianBlob => Scene::GaussianBlob(GaussianBlob::default()),
            SceneKind::StaticTexture => Scene::StaticTexture(StaticTexture::default()),
        };
    }
    if let Some(c) = a.threshold {
        cfg.scene.threshold_c = c;
    }
    let sc = &cfg.scene;
    if !(sc.frame_rate > 0.0) || !sc.frame_rate.is_finite() {
        return Err(Error::Argument(format!("frame_rate must be positive, got {}", sc.frame_rate)));
    }
    let dt_rgb = (1e6 / sc.frame_rate) as u64;
    if sc.exposure_us > dt_rgb {
        return Err(Error::Argument(format!("exposure {} us exceeds the frame interval {dt_rgb} us", sc.exposure_us)));
    }
    out.prepare(cfg)?;

    let field = sc.field.as_field();
    let frames = (1..)
        .map(|k| k * dt_rgb)
        .take_while(|&t| t <= field.duration_us())
        .map(|t| integrate_frame(field, t, sc.exposure_us, sc.substeps))
        .collect::<Result<Vec<RgbFrame>>>()?;
    let stream = trigger_events(field, sc.threshold_c, sc.dt_sample_us)?;
    let report = asymmetry_from_stream(&stream, sc.frame_rate, sc.exposure_us, sc.dt_sample_us)?;

    write_events(&stream, out.file("events.csv")?)?;
    write_frames(&frames, out.file("frames.csv")?)?;
    out.json("asymmetry.json", &report)?;
    Ok(serde_json::to_string_pretty(&report)?)
}

fn read_score_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(File::open(path)?));
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let err = |detail: String| Error::Parse {
            file: path.to_path_buf(),
            line: k as u64 + 1,
            detail,
        };
        let rec = rec.map_err(|e| err(e.to_string()))?;
        rows.push(
            rec.iter()
                .map(|v| v.parse::<f64>().map_err(|e| err(format!("`{v}`: {e}"))))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(rows)
}

fn grid_from_rows(rows: &[Vec<f64>], what: &str) -> Result<ProbabilityGrid> {
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if h == 0 || w == 0 || rows.iter().any(|r| r.len() != w) {
        return Err(Error::Shape(format!("map {what} must be a non-empty rectangular grid")));
    }
    let data = rows.iter().flatten().copied().collect();
    Ok(spatial_softmax(&ResponseMap::new(Mat::new(h, w, data)?)?))
}

#[derive(Debug, Serialize)]
struct PlanStats {
    h: usize,
    w: usize,
    epsilon: f64,
    metric: CostMetric,
    log_domain: bool,
    cost: f64,
    /// Cost after projecting the plan onto the exact marginals.
    feasible_cost: f64,
    iterations_run: usize,
    marginal_err: f64,
    converged: bool,
    exact_cost: Option<f64>,
    gap: Option<f64>,
}

fn plan_stats(
    plan: &TransportPlan,
    (p, q): (&ProbabilityGrid, &ProbabilityGrid),
    cost: &CostMatrix,
    epsilon: f64,
    exact: Option<f64>,
) -> Result<PlanStats> {
    let c = saot_loss(plan, cost)?;
    let feasible = round_to_marginals(&plan.plan, p, q)?.dot(&cost.cost)?;
    Ok(PlanStats {
        h: cost.h,
        w: cost.w,
        epsilon,
        metric: cost.metric,
        log_domain: plan.log_domain,
        cost: c,
        feasible_cost: feasible,
        iterations_run: plan.iterations_run,
        marginal_err: plan.marginal_err,
        converged: plan.converged,
        exact_cost: exact,
        gap: exact.map(|e| feasible - e),
    })
}

fn cmd_sinkhorn(cfg: &mut ExperimentConfig, a: SinkhornArgs, out: &Output) -> Result<String> {
    let s = &mut cfg.sinkhorn;
    if let Some(v) = a.epsilon {
        s.epsilon = v;
    }
    if let Some(v) = a.max_iters {
        s.max_iters = v;
    }
    if let Some(v) = a.marginal_tol {
        s.marginal_tol = v;
    }
    if let Some(v) = a.metric {
        s.metric = v;
    }
    if let Some(v) = a.grid {
        s.grid = v;
    }
    if let Some(d) = a.dirac {
        s.dirac = Some(d);
    }
    if let Some(p) = &a.p {
        s.p = Some(read_score_csv(p)?);
    }
    if let Some(q) = &a.q {
        s.q = Some(read_score_csv(q)?);
    }
    s.log_domain |= a.log_domain;
    s.normalized_coords |= a.normalized;
    s.oracle |= a.oracle;
    if a.eps_sweep {
        s.eps_sweep = EPS_SWEEP.to_vec();
    }
    s.solver(s.epsilon).validate()?;
    for &e in &s.eps_sweep {
        s.solver(e).validate()?;
    }

    let (p, q) = match (s.dirac, &s.p, &s.q) {
        (Some(d), _, _) => {
            if d >= s.grid {
                return Err(Error::Argument(format!("dirac distance {d} needs a grid wider than {}", s.grid)));
            }
            (ProbabilityGrid::dirac(s.grid, s.grid, 0)?, ProbabilityGrid::dirac(s.grid, s.grid, d)?)
        }
        (None, Some(p), Some(q)) => (grid_from_rows(p, "p")?, grid_from_rows(q, "q")?),
        (None, None, None) => {
            if s.grid == 0 {
                return Err(Error::Argument("grid must be positive".into()));
            }
            let random = |stream| {
                let mut rng = Rng::derive(cfg.seed, stream);
                ResponseMap::new(Mat::from_fn(s.grid, s.grid, |_, _| rng.normal())).map(|m| spatial_softmax(&m))
            };
            (random(0)?, random(1)?)
        }
        _ => return Err(Error::Argument("give both p and q maps or neither".into())),
    };
    if (p.h(), p.w()) != (q.h(), q.w()) {
        return Err(Error::Shape(format!("p is {}x{} but q is {}x{}", p.h(), p.w(), q.h(), q.w())));
    }
    let cost = build_cost_with(p.h(), p.w(), s.metric, s.normalized_coords);
    let exact = if s.oracle { Some(exact_ot(&p, &q, &cost)?) } else { None };
    out.prepare(cfg)?;
    let s = &cfg.sinkhorn;

    let plan = sinkhorn(&p, &q, &cost, &s.solver(s.epsilon))?;
    let stats = plan_stats(&plan, (&p, &q), &cost, s.epsilon, exact)?;
    out.json("plan_stats.json", &stats)?;

    if !s.eps_sweep.is_empty() {
        let mut w = csv::Writer::from_writer(out.file("sweep.csv")?);
        let mut header = vec!["epsilon", "cost", "feasible_cost", "iterations_run", "marginal_err", "converged"];
        if exact.is_some() {
            header.extend(["exact_cost", "gap"]);
        }
        w.write_record(&header)?;
        for &e in &s.eps_sweep {
            let st = plan_stats(&sinkhorn(&p, &q, &cost, &s.solver(e))?, (&p, &q), &cost, e, exact)?;
            let mut row = vec![
                e.to_string(),
                st.cost.to_string(),
                st.feasible_cost.to_string(),
                st.iterations_run.to_string(),
                st.marginal_err.to_string(),
                st.converged.to_string(),
            ];
            if let (Some(x), Some(g)) = (st.exact_cost, st.gap) {
                row.extend([x.to_string(), g.to_string()]);
            }
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(serde_json::to_string_pretty(&stats)?)
}

fn write_maps(run: &DistillRun, out: &Output) -> Result<()> {
    let maps = [
        ("teacher", spatial_softmax(&run.setup.problem.teacher.response_map)),
        ("student_initial", spatial_softmax(&run.setup.initial_student.response_logits)),
        ("student_final", spatial_softmax(&run.student.response_logits)),
    ];
    let mut w = csv::Writer::from_writer(out.file("response_maps.csv")?);
    w.write_record(["map", "row", "col", "mass"])?;
    for (name, g) in &maps {
        for (i, m) in g.as_slice().iter().enumerate() {
            w.write_record([name.to_string(), (i / g.w()).to_string(), (i % g.w()).to_string(), m.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_distill(cfg: &mut ExperimentConfig, a: DistillArgs, out: &Output) -> Result<String> {
    let d = &mut cfg.distill;
    if let Some(s) = a.scenario {
        d.scenario = s;
    }
    let w = &mut d.train.weights;
    *w = AlignmentWeights::new(a.lambda1.unwrap_or(w.lambda1), a.lambda2.unwrap_or(w.lambda2))?;
    if let Some(s) = a.steps {
        d.train.steps = s;
    }
    if let Some(lr) = a.learning_rate {
        d.train.learning_rate = lr;
    }
    if let Some(o) = a.optimizer {
        d.train.optimizer = o;
    }
    d.sweep |= a.sweep;
    let mut train = d.train.clone();
    train.seed = cfg.seed;
    train.ta = cfg.ta;
    train.validate()?;
    out.prepare(cfg)?;
    let scenario = cfg.distill.scenario;

    if cfg.distill.sweep {
        let rows = ablation_sweep(&train, scenario, &SWEEP_LAMBDA1, &SWEEP_LAMBDA2)?;
        write_sweep(&rows, out.file("ablation.csv")?)?;
        return Ok(format!("{} sweep cells written to {}", rows.len(), out.dir.join("ablation.csv").display()));
    }

    let run = run_distillation(&train, scenario)?;
    run.trace.write_csv(out.file("trace.csv")?)?;
    write_curves(&run.curves, out.file("curves.csv")?)?;
    write_sequence(&run.sequence, out.file("sequence.csv")?)?;
    write_maps(&run, out)?;
    out.json("report.json", &run.report)?;
    Ok(serde_json::to_string_pretty(&run.report)?)
}

#[derive(Debug, Serialize)]
struct MetricsReport {
    frames: usize,
    present_frames: usize,
    sr_auc: f64,
    pr_at_20: f64,
    npr_auc: f64,
}

fn cmd_metrics(cfg: &mut ExperimentConfig, a: MetricsArgs, out: &Output) -> Result<String> {
    if a.sequence.is_some() {
        cfg.metrics.sequence = a.sequence;
    }
    let path = cfg
        .metrics
        .sequence
        .clone()
        .ok_or_else(|| Error::Argument("no sequence CSV given".into()))?;
    let seq = read_sequence(BufReader::new(File::open(&path)?), &path)?;
    let curves: MetricCurves = evaluate(&seq)?;
    out.prepare(cfg)?;
    write_curves(&curves, out.file("curves.csv")?)?;
    let report = MetricsReport {
        frames: seq.frames.len(),
        present_frames: curves.present_frames,
        sr_auc: curves.sr_auc,
        pr_at_20: curves.pr_at_20,
        npr_auc: curves.npr_auc,
    };
    out.json("report.json", &report)?;
    Ok(serde_json::to_string_pretty(&report)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_report_their_path() {
        match parse_config(r#"{"sinkhorn": {"epsilon": 0.1, "epsilom": 2}}"#) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "sinkhorn.epsilom"),
            other => panic!("{other:?}"),
        }
        match parse_config(r#"{"distill": {"train": {"weights": {"lambda3": 1}}}}"#) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "distill.train.weights.lambda3"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
        assert_eq!(parse_config("{}").unwrap(), cfg);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Underflow { iteration: 1, detail: String::new() }), 3);
        assert_eq!(exit_code(&Error::Divergence { step: 2, last_finite: Some(1), detail: String::new() }), 4);
        assert_eq!(exit_code(&Error::Config { path: "x".into(), detail: String::new() }), 2);
    }
}
