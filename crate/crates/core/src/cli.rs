//! Subcommands of the `snowloc` executable and the pipelines behind them.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{
    read_batch, FieldSelector, RunConfig, StartSpec, DEFAULT_TOP_K, DEFAULT_WALKER_STEPS,
};
use crate::diffusion::{
    analytic_stationary, build_transfer, build_weights, evolve_with, monte_carlo_walk, spectrum,
    EvolveOptions, SpectralSummary, Termination, TerminationStatus, WeightedGraph,
    DEFAULT_MAX_STEPS, DEFAULT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::export;
use crate::geometry::{generate_boundary, BoundaryPolygon, DomainKind};
use crate::lattice::{build_mesh, Mesh};
use crate::measures::{combined_field, compute_measures, MeasureTable};
use crate::metrics::{
    select_start, start_report, AsymptoticMetrics, MetricsRecorder, StartReport, WalkMetrics,
};

#[derive(Debug, Parser)]
#[command(
    name = "snowloc",
    version,
    about = "Prefractal domains, confinement measures and random-walk localization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a boundary and lattice mesh and write them as JSON.
    Generate(GenerateArgs),
    /// Per-node distances, entropy and regions, plus summary statistics.
    Measure(MeasureArgs),
    /// Evolve a walker density and record localization metrics.
    Walk(WalkArgs),
    /// Leading eigenvalues of the transfer operator.
    Spectrum(SpectrumArgs),
    /// Render a per-node field as an SVG heatmap.
    Heatmap(HeatmapArgs),
    /// Run a JSON list of walk configurations.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub domain: DomainKind,
    #[arg(long)]
    pub level: u32,
    #[arg(long, default_value_t = 0)]
    pub refine: u32,
    #[arg(long)]
    pub out: PathBuf,
}

/// A mesh file, or the parameters to build one.
#[derive(Debug, Args)]
pub struct MeshSource {
    /// Mesh JSON written by `generate`.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub domain: Option<DomainKind>,
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub refine: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Selector split on relative distance.
    #[arg(long)]
    pub d_threshold: Option<f64>,
    /// Selector split on relative entropy.
    #[arg(long)]
    pub s_threshold: Option<f64>,
    #[arg(long)]
    pub canyon: Option<f64>,
    #[arg(long)]
    pub grotto: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub source: MeshSource,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[command(flatten)]
    pub source: MeshSource,
    /// id:<n>, select:<low_d_low_s|high_d_high_s|high_d_low_s|low_d_high_s> or stationary.
    #[arg(long)]
    pub start: StartSpec,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub steps: u64,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Seed for the Monte-Carlo ensemble.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a density snapshot every this many steps (0: only initial and limit states).
    #[arg(long, default_value_t = crate::config::DEFAULT_STRIDE)]
    pub stride: u64,
    /// Also run this many Monte-Carlo walkers and write walkers.csv.
    #[arg(long)]
    pub walkers: Option<u64>,
    #[arg(long)]
    pub walker_steps: Option<usize>,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: MeshSource,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub source: MeshSource,
    /// d_rat_min, entropy, combined or density@<t>.
    #[arg(long)]
    pub field: FieldSelector,
    /// Walk output directory to read density snapshots from.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// JSON array of run configurations.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => {
            let mut cfg = RunConfig::new(a.domain, a.level, a.refine);
            cfg.command = Some("generate".into());
            cfg.out = Some(a.out.clone());
            run_generate(&cfg, &a.out).map(|_| ())
        }
        Command::Measure(a) => {
            let mut cfg = config_from_source(&a.source)?;
            cfg.command = Some("measure".into());
            apply_thresholds(&mut cfg, &a.thresholds);
            cfg.out = Some(a.out.clone());
            run_measure(&cfg, &a.out).map(|_| ())
        }
        Command::Walk(a) => {
            let mut cfg = config_from_source(&a.source)?;
            cfg.command = Some("walk".into());
            apply_thresholds(&mut cfg, &a.thresholds);
            cfg.start = Some(a.start);
            cfg.max_steps = a.steps;
            cfg.tolerance = a.tol;
            cfg.seed = a.seed;
            cfg.stride = a.stride;
            cfg.walkers = a.walkers;
            cfg.walker_steps = a.walker_steps;
            cfg.out = Some(a.out.clone());
            run_walk(&cfg, &a.out).map(|_| ())
        }
        Command::Spectrum(a) => {
            let mut cfg = config_from_source(&a.source)?;
            cfg.command = Some("spectrum".into());
            cfg.top_k = Some(a.top_k);
            cfg.out = Some(a.out.clone());
            run_spectrum(&cfg, &a.out).map(|_| ())
        }
        Command::Heatmap(a) => {
            let mut cfg = config_from_source(&a.source)?;
            cfg.command = Some("heatmap".into());
            cfg.field = Some(a.field);
            cfg.trajectory = a.trajectory;
            cfg.out = Some(a.out.clone());
            run_heatmap(&cfg, &a.out).map(|_| ())
        }
        Command::Batch(a) => {
            let runs = read_batch(&a.config)?;
            run_batch(&runs, &a.out).map(|_| ())
        }
    }
}

fn config_from_source(src: &MeshSource) -> Result<RunConfig> {
    match (&src.mesh, src.domain, src.level, src.refine) {
        (Some(path), domain, level, refine) => {
            let mesh = Mesh::read_json(path)?;
            let conflict = domain.is_some_and(|d| d != mesh.domain_kind)
                || level.is_some_and(|l| l != mesh.level)
                || refine.is_some_and(|r| r != mesh.refine);
            if conflict {
                return Err(Error::Usage(format!(
                    "--domain/--level/--refine disagree with {}",
                    path.display()
                )));
            }
            let mut cfg = RunConfig::new(mesh.domain_kind, mesh.level, mesh.refine);
            cfg.mesh = Some(path.clone());
            Ok(cfg)
        }
        (None, Some(domain), Some(level), Some(refine)) => {
            Ok(RunConfig::new(domain, level, refine))
        }
        _ => Err(Error::Usage(
            "give either --mesh or all of --domain, --level and --refine".into(),
        )),
    }
}

fn apply_thresholds(cfg: &mut RunConfig, t: &ThresholdArgs) {
    let th = &mut cfg.thresholds;
    th.d_rel = t.d_threshold.unwrap_or(th.d_rel);
    th.s_rel = t.s_threshold.unwrap_or(th.s_rel);
    th.canyon = t.canyon.unwrap_or(th.canyon);
    th.grotto = t.grotto.unwrap_or(th.grotto);
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Boundary, mesh and measures for a configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub polygon: BoundaryPolygon,
    pub mesh: Mesh,
    pub measures: MeasureTable,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let polygon = generate_boundary(cfg.domain, cfg.level)?;
    let mesh = match &cfg.mesh {
        Some(path) => {
            let mesh = Mesh::read_json(path)?;
            if (mesh.domain_kind, mesh.level, mesh.refine) != (cfg.domain, cfg.level, cfg.refine) {
                return Err(Error::Precondition(format!(
                    "{} holds a {} ({}, {}) mesh, configuration asks for {} ({}, {})",
                    path.display(),
                    mesh.domain_kind,
                    mesh.level,
                    mesh.refine,
                    cfg.domain,
                    cfg.level,
                    cfg.refine
                )));
            }
            mesh
        }
        None => build_mesh(&polygon, cfg.refine)?,
    };
    let measures = compute_measures(&polygon, &mesh)?;
    Ok(Prepared {
        polygon,
        mesh,
        measures,
    })
}

/// Writes `mesh.json`, `boundary.json` and `config.json`.
pub fn run_generate(cfg: &RunConfig, out: &Path) -> Result<Mesh> {
    cfg.validate()?;
    let polygon = generate_boundary(cfg.domain, cfg.level)?;
    let mesh = build_mesh(&polygon, cfg.refine)?;
    create_dir(out)?;
    mesh.write_json(&out.join("mesh.json"))?;
    polygon.write_json(&out.join("boundary.json"))?;
    cfg.write_json(&out.join("config.json"))?;
    info!(
        "{} ({}, {}): {} nodes",
        cfg.domain,
        cfg.level,
        cfg.refine,
        mesh.len()
    );
    Ok(mesh)
}

/// Writes `measures.csv`, `summary.csv` and `config.json`.
pub fn run_measure(cfg: &RunConfig, out: &Path) -> Result<Prepared> {
    cfg.validate()?;
    let p = prepare(cfg)?;
    create_dir(out)?;
    export::write_measures(
        &out.join("measures.csv"),
        &p.mesh,
        &p.measures,
        &cfg.thresholds.region(),
    )?;
    export::write_summary(&out.join("summary.csv"), &p.measures)?;
    cfg.write_json(&out.join("config.json"))?;
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkReport {
    pub start: StartReport,
    pub termination: Termination,
    pub asymptotic: AsymptoticMetrics,
    pub trajectory: Vec<WalkMetrics>,
}

fn compact_start(wg: &WeightedGraph, mesh: &Mesh, id: usize) -> Result<usize> {
    if id >= mesh.len() {
        return Err(Error::Lookup {
            id,
            len: mesh.len(),
        });
    }
    wg.compact_index(id).ok_or_else(|| {
        Error::Precondition(format!(
            "node {id} has no walk edges and cannot start a walk"
        ))
    })
}

/// Evolves the configured start density and writes `trajectory.csv`,
/// `metrics.csv`, density snapshots under `snapshots/`, optionally
/// `walkers.csv`, and `config.json`.
pub fn run_walk(cfg: &RunConfig, out: &Path) -> Result<WalkReport> {
    cfg.validate()?;
    let start = cfg.start.ok_or_else(|| {
        Error::Usage("a walk needs a start (id:<n>, select:<selector> or stationary)".into())
    })?;
    let p = prepare(cfg)?;
    let wg = build_weights(&p.mesh, &p.measures)?;
    let op = build_transfer(&wg)?;
    let n = p.mesh.len();

    let (reference, eta0, walker_start) = match start {
        StartSpec::Node(id) => (id, delta(&wg, compact_start(&wg, &p.mesh, id)?), Some(id)),
        StartSpec::Select(sel) => {
            let id = select_start(&p.measures, sel, &cfg.thresholds.selector())?;
            (id, delta(&wg, compact_start(&wg, &p.mesh, id)?), Some(id))
        }
        StartSpec::Stationary => {
            let pi = analytic_stationary(&wg);
            let full = wg.to_mesh_vector(&pi, n);
            let id = (0..n)
                .reduce(|best, i| if full[i] > full[best] { i } else { best })
                .expect("mesh is not empty");
            (id, pi, None)
        }
    };
    if cfg.walkers.is_some() && walker_start.is_none() {
        return Err(Error::Usage("Monte-Carlo walkers need a node start".into()));
    }
    let report = start_report(&p.measures, reference)?;

    let snapshots = out.join("snapshots");
    create_dir(&snapshots)?;
    let snapshot_path = |t: u64| snapshots.join(format!("density_{t}.csv"));

    let walker_steps = cfg
        .walkers
        .map(|_| cfg.walker_steps.unwrap_or(DEFAULT_WALKER_STEPS));
    let mut recorder = MetricsRecorder::new(&p.mesh, &p.measures, reference)?;
    let mut rows: Vec<WalkMetrics> = Vec::new();
    let mut early: Vec<Vec<f64>> = Vec::new();
    let mut failure: Option<Error> = None;
    let opts = EvolveOptions {
        max_steps: cfg.max_steps,
        tolerance: cfg.tolerance,
        stride: 0,
    };
    let (termination, tail) = evolve_with(&op, &eta0, &opts, |t, eta| {
        if failure.is_some() {
            return;
        }
        let full = wg.to_mesh_vector(eta, n);
        match recorder.observe(t, &full) {
            Ok(m) => rows.push(m),
            Err(e) => failure = Some(e),
        }
        if t == 0 || (cfg.stride > 0 && t % cfg.stride == 0) {
            if let Err(e) = export::write_density(&snapshot_path(t), &p.mesh, &full) {
                failure = Some(e);
            }
        }
        if walker_steps.is_some_and(|k| t as usize <= k) {
            early.push(full);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let tail_start = termination.last_step + 1 - tail.len() as u64;
    for (k, eta) in tail.iter().enumerate() {
        let full = wg.to_mesh_vector(eta, n);
        export::write_density(&snapshot_path(tail_start + k as u64), &p.mesh, &full)?;
    }
    info!(
        "walk from node {reference}: {} at t = {}",
        termination.status, termination.t
    );

    let at = |t: u64| rows[t as usize];
    let phases = match termination.status {
        TerminationStatus::FixedPoint => vec![at(termination.t)],
        TerminationStatus::TwoCycle => vec![at(termination.t), at(termination.t + 1)],
        TerminationStatus::MaxSteps => {
            warn!(
                "walk from node {reference} did not settle within {} steps",
                cfg.max_steps
            );
            vec![at(termination.last_step)]
        }
    };
    let asymptotic = AsymptoticMetrics::from_phases(phases);

    if let (Some(walkers), Some(id)) = (cfg.walkers, walker_start) {
        let steps = early.len() - 1;
        let c = wg.compact_index(id).expect("start resolved above");
        let empirical: Vec<Vec<f64>> = monte_carlo_walk(&wg, c, walkers, steps, cfg.seed)?
            .iter()
            .map(|eta| wg.to_mesh_vector(eta, n))
            .collect();
        export::write_walker_comparison(&out.join("walkers.csv"), &early, &empirical, walkers)?;
    }

    export::write_trajectory(&out.join("trajectory.csv"), &rows)?;
    export::write_metrics(&out.join("metrics.csv"), &report, &termination, &asymptotic)?;
    cfg.write_json(&out.join("config.json"))?;
    Ok(WalkReport {
        start: report,
        termination,
        asymptotic,
        trajectory: rows,
    })
}

fn delta(wg: &WeightedGraph, at: usize) -> Vec<f64> {
    let mut eta = vec![0.0; wg.len()];
    eta[at] = 1.0;
    eta
}

/// Writes `spectrum.csv`, `spectrum_info.csv`, `leading_vector.csv` and
/// `config.json`.
pub fn run_spectrum(cfg: &RunConfig, out: &Path) -> Result<SpectralSummary> {
    cfg.validate()?;
    let p = prepare(cfg)?;
    let wg = build_weights(&p.mesh, &p.measures)?;
    let op = build_transfer(&wg)?;
    let k = cfg.top_k.unwrap_or(DEFAULT_TOP_K);
    if k > wg.len() {
        warn!("top-k {k} exceeds the {} walk nodes; clamping", wg.len());
    }
    let summary = spectrum(&op, &analytic_stationary(&wg), k)?;
    create_dir(out)?;
    export::write_spectrum(&out.join("spectrum.csv"), &summary.eigenvalues)?;
    export::write_spectrum_info(&out.join("spectrum_info.csv"), &summary)?;
    export::write_node_vector(
        &out.join("leading_vector.csv"),
        "value",
        &wg.to_mesh_vector(&summary.leading_vector, p.mesh.len()),
    )?;
    cfg.write_json(&out.join("config.json"))?;
    Ok(summary)
}

/// Writes `heatmap.svg` and `config.json`.
pub fn run_heatmap(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let field = cfg
        .field
        .ok_or_else(|| Error::Usage("a heatmap needs a field".into()))?;
    let p = prepare(cfg)?;
    let values = match field {
        FieldSelector::DRatMin => p.measures.d_rat_min(),
        FieldSelector::Entropy => p.measures.entropy(),
        FieldSelector::Combined => combined_field(&p.measures),
        FieldSelector::Density(t) => {
            let dir = cfg.trajectory.as_ref().ok_or_else(|| {
                Error::Usage("density fields need --trajectory <walk output dir>".into())
            })?;
            let path = dir.join("snapshots").join(format!("density_{t}.csv"));
            if !path.is_file() {
                return Err(Error::Range(format!(
                    "no density snapshot for t = {t} in {}",
                    dir.display()
                )));
            }
            export::read_density(&path, p.mesh.len())?
        }
    };
    let label = format!("{} {} L={} R={}", field, cfg.domain, cfg.level, cfg.refine);
    let svg = export::heatmap_svg(&p.mesh, &values, &label)?;
    create_dir(out)?;
    export::write_text(&out.join("heatmap.svg"), &svg)?;
    cfg.write_json(&out.join("config.json"))
}

#[derive(Debug)]
pub struct BatchOutcome {
    pub reports: Vec<Result<WalkReport>>,
}

/// Runs every configuration as a walk into `out/run_NNN`, in parallel, and
/// writes `summary.csv` plus the batch list as `config.json`. Fails with the
/// first run error after the summary is written.
pub fn run_batch(runs: &[RunConfig], out: &Path) -> Result<BatchOutcome> {
    if let Some((i, cmd)) = runs.iter().enumerate().find_map(|(i, r)| {
        r.command
            .as_deref()
            .filter(|c| *c != "walk")
            .map(|c| (i, c))
    }) {
        return Err(Error::Usage(format!(
            "batch entry {i} has command {cmd:?}; batch runs walks only"
        )));
    }
    create_dir(out)?;
    let text = serde_json::to_string_pretty(runs).expect("configs serialize") + "\n";
    export::write_text(&out.join("config.json"), &text)?;
    let reports: Vec<Result<WalkReport>> = runs
        .par_iter()
        .enumerate()
        .map(|(i, run)| {
            let dir = out.join(format!("run_{i:03}"));
            let mut cfg = run.clone();
            cfg.command = Some("walk".into());
            cfg.out = Some(dir.clone());
            run_walk(&cfg, &dir)
        })
        .collect();
    write_batch_summary(&out.join("summary.csv"), runs, &reports)?;
    if let Some(Err(e)) = reports.iter().find(|r| r.is_err()) {
        // Errors are not Clone; rebuild the same message and exit class.
        return Err(match e {
            Error::Numerical(m) => Error::Numerical(format!("batch run failed: {m}")),
            other => Error::Precondition(format!("batch run failed: {other}")),
        });
    }
    Ok(BatchOutcome { reports })
}

fn write_batch_summary(
    path: &Path,
    runs: &[RunConfig],
    reports: &[Result<WalkReport>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let err = |e| Error::csv(path, e);
    w.write_record([
        "run",
        "domain",
        "L",
        "R",
        "start",
        "start_node",
        "d_rel_start",
        "s_rel_start",
        "termination",
        "termination_t",
        "pr",
        "diam",
        "d_ha_rel",
        "s_ha_rel",
        "diam_ha_rel",
        "ha_count",
        "status",
    ])
    .map_err(err)?;
    for (i, (cfg, report)) in runs.iter().zip(reports).enumerate() {
        let mut rec = vec![
            format!("run_{i:03}"),
            cfg.domain.to_string(),
            cfg.level.to_string(),
            cfg.refine.to_string(),
            cfg.start.map(|s| s.to_string()).unwrap_or_default(),
        ];
        match report {
            Ok(r) => {
                let a = &r.asymptotic;
                rec.push(r.start.start.to_string());
                rec.push(export::format_float(r.start.d_rel_start));
                rec.push(export::format_float(r.start.s_rel_start));
                rec.push(r.termination.status.to_string());
                rec.push(r.termination.t.to_string());
                rec.extend(
                    [
                        a.pr,
                        a.diam,
                        a.d_ha_rel,
                        a.s_ha_rel,
                        a.diam_ha_rel,
                        a.ha_count,
                    ]
                    .map(export::format_float),
                );
                rec.push("ok".into());
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), 11));
                rec.push(e.to_string());
            }
        }
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::StartSelector;

    fn small(start: StartSpec) -> RunConfig {
        let mut cfg = RunConfig::new(DomainKind::Triadic, 1, 1);
        cfg.start = Some(start);
        cfg.stride = 10;
        cfg
    }

    #[test]
    fn walk_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_walk(&small(StartSpec::Node(3)), dir.path()).unwrap();
        assert_eq!(report.termination.status, TerminationStatus::FixedPoint);
        assert_eq!(
            report.trajectory.len() as u64,
            report.termination.last_step + 1
        );
        for f in [
            "trajectory.csv",
            "metrics.csv",
            "config.json",
            "snapshots/density_0.csv",
        ] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let t = report.termination.t;
        assert!(dir
            .path()
            .join(format!("snapshots/density_{t}.csv"))
            .is_file());
        let diam: Vec<f64> = report.trajectory.iter().map(|m| m.diam).collect();
        assert!(diam.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn stationary_start_is_fixed_at_zero() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_walk(&small(StartSpec::Stationary), dir.path()).unwrap();
        assert_eq!(report.termination.status, TerminationStatus::FixedPoint);
        assert_eq!(report.termination.t, 0);
        let first = report.trajectory[0];
        let last = *report.trajectory.last().unwrap();
        assert!((first.pr - last.pr).abs() < 1e-9 * first.pr);
        assert_eq!(first.ha_count, last.ha_count);
    }

    #[test]
    fn empty_selection_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(StartSpec::Select(StartSelector::HighDHighS));
        cfg.thresholds.d_rel = 1.0;
        let err = run_walk(&cfg, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Selection { .. }));
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("high_d_high_s"));
    }

    #[test]
    fn density_heatmap_needs_a_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let walk = dir.path().join("walk");
        run_walk(&small(StartSpec::Node(0)), &walk).unwrap();
        let mut cfg = small(StartSpec::Node(0));
        cfg.trajectory = Some(walk);
        cfg.field = Some(FieldSelector::Density(10));
        run_heatmap(&cfg, &dir.path().join("ok")).unwrap();
        cfg.field = Some(FieldSelector::Density(7));
        assert!(matches!(
            run_heatmap(&cfg, &dir.path().join("bad")),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn mesh_source_needs_all_parameters() {
        let src = MeshSource {
            mesh: None,
            domain: Some(DomainKind::Square),
            level: Some(1),
            refine: None,
        };
        assert!(matches!(config_from_source(&src), Err(Error::Usage(_))));
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(run_from_args(["snowloc", "walk", "--bogus"]), 1);
        assert_eq!(run_from_args(["snowloc"]), 1);
        assert_eq!(run_from_args(["snowloc", "--help"]), 0);
    }
}
