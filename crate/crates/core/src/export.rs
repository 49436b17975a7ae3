//! CSV and SVG writers for command outputs.
//!
//! Floats are written with 17 significant digits so every value reads back
//! bit-identically.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::diffusion::{SpectralSummary, Termination};
use crate::error::{Error, Result};
use crate::geometry::DomainKind;
use crate::lattice::Mesh;
use crate::measures::{classify_region, summary_stats, MeasureTable, RegionThresholds};
use crate::metrics::{AsymptoticMetrics, StartReport, WalkMetrics};

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn finish<W: Write>(path: &Path, w: csv::Writer<W>) -> Result<()> {
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

pub const MEASURE_COLUMNS: [&str; 14] = [
    "node_id",
    "x",
    "y",
    "dh_plus",
    "dh_minus",
    "dv_plus",
    "dv_minus",
    "d_min",
    "d_rat",
    "d_rat_min",
    "d_rel",
    "entropy",
    "s_rel",
    "region",
];

pub fn write_measures(
    path: &Path,
    mesh: &Mesh,
    table: &MeasureTable,
    thresholds: &RegionThresholds,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(MEASURE_COLUMNS).map_err(err)?;
    for (node, m) in mesh.nodes.iter().zip(&table.nodes) {
        let mut rec = vec![node.id.to_string()];
        rec.extend(
            [
                node.x,
                node.y,
                m.dd.dh_plus,
                m.dd.dh_minus,
                m.dd.dv_plus,
                m.dd.dv_minus,
                m.d_min,
                m.d_rat,
                m.d_rat_min,
                m.d_rel,
                m.entropy,
                m.s_rel,
            ]
            .into_iter()
            .map(format_float),
        );
        rec.push(classify_region(m, thresholds).to_string());
        w.write_record(&rec).map_err(err)?;
    }
    finish(path, w)
}

/// Eight summary rows for `d_rat_min` and entropy side by side.
pub fn write_summary(path: &Path, table: &MeasureTable) -> Result<()> {
    let d = summary_stats(&table.d_rat_min())?;
    let s = summary_stats(&table.entropy())?;
    let mut w = csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["statistic", "d_rat_min", "entropy"])
        .map_err(err)?;
    for ((label, dv), (_, sv)) in d.rows().into_iter().zip(s.rows()) {
        w.write_record([label.to_string(), format_float(dv), format_float(sv)])
            .map_err(err)?;
    }
    finish(path, w)
}

pub const TRAJECTORY_COLUMNS: [&str; 7] = [
    "t",
    "pr",
    "diam",
    "d_ha_rel",
    "s_ha_rel",
    "diam_ha_rel",
    "ha_count",
];

fn metrics_record(label: String, m: &WalkMetrics) -> Vec<String> {
    let mut rec = vec![label];
    rec.extend([m.pr, m.diam, m.d_ha_rel, m.s_ha_rel, m.diam_ha_rel].map(format_float));
    rec.push(m.ha_count.to_string());
    rec
}

pub fn write_trajectory(path: &Path, rows: &[WalkMetrics]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(TRAJECTORY_COLUMNS).map_err(err)?;
    for m in rows {
        w.write_record(metrics_record(m.t.to_string(), m))
            .map_err(err)?;
    }
    finish(path, w)
}

/// `#`-prefixed start and termination block, then one row per limiting
/// phase and a `mean` row.
pub fn write_metrics(
    path: &Path,
    start: &StartReport,
    termination: &Termination,
    asymptotic: &AsymptoticMetrics,
) -> Result<()> {
    let mut out = create(path)?;
    let header = format!(
        "# start,{}\n# d_rel_start,{}\n# s_rel_start,{}\n# termination,{}\n# termination_t,{}\n# last_step,{}\n",
        start.start,
        format_float(start.d_rel_start),
        format_float(start.s_rel_start),
        termination.status,
        termination.t,
        termination.last_step,
    );
    out.write_all(header.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    let err = |e| Error::csv(path, e);
    w.write_record([
        "phase",
        "t",
        "pr",
        "diam",
        "d_ha_rel",
        "s_ha_rel",
        "diam_ha_rel",
        "ha_count",
    ])
    .map_err(err)?;
    for (k, m) in asymptotic.phases.iter().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(metrics_record(m.t.to_string(), m));
        w.write_record(&rec).map_err(err)?;
    }
    let a = asymptotic;
    let mut rec = vec!["mean".to_string(), String::new()];
    rec.extend(
        [
            a.pr,
            a.diam,
            a.d_ha_rel,
            a.s_ha_rel,
            a.diam_ha_rel,
            a.ha_count,
        ]
        .map(format_float),
    );
    w.write_record(&rec).map_err(err)?;
    finish(path, w)
}

pub fn write_density(path: &Path, mesh: &Mesh, eta: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["node_id", "x", "y", "eta"]).map_err(err)?;
    for (node, &v) in mesh.nodes.iter().zip(eta) {
        w.write_record([
            node.id.to_string(),
            format_float(node.x),
            format_float(node.y),
            format_float(v),
        ])
        .map_err(err)?;
    }
    finish(path, w)
}

/// Reads a density snapshot written by [`write_density`] for an `n`-node mesh.
pub fn read_density(path: &Path, n: usize) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut eta = vec![f64::NAN; n];
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |what: &str| Error::Domain(format!("{}: bad {what} in {rec:?}", path.display()));
        let id: usize = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("node id"))?;
        let v: f64 = rec
            .get(3)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("density"))?;
        *eta.get_mut(id).ok_or(Error::Lookup { id, len: n })? = v;
    }
    if let Some(id) = eta.iter().position(|v| v.is_nan()) {
        return Err(Error::Domain(format!(
            "{}: no density for node {id}",
            path.display()
        )));
    }
    Ok(eta)
}

pub fn write_spectrum(path: &Path, eigenvalues: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["rank", "eigenvalue"]).map_err(err)?;
    for (k, v) in eigenvalues.iter().enumerate() {
        w.write_record([(k + 1).to_string(), format_float(*v)])
            .map_err(err)?;
    }
    finish(path, w)
}

pub fn write_spectrum_info(path: &Path, s: &SpectralSummary) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    let method = serde_json::to_value(s.method).expect("enum serializes");
    let rows = [
        ("node_count", s.node_count.to_string()),
        ("transient_count", s.transient_count.to_string()),
        ("lambda_min", format_float(s.lambda_min)),
        ("spectral_gap", format_float(s.spectral_gap)),
        ("has_minus_one", s.has_minus_one.to_string()),
        ("method", method.as_str().unwrap_or_default().to_string()),
    ];
    w.write_record(["key", "value"]).map_err(err)?;
    for (k, v) in rows {
        w.write_record([k.to_string(), v]).map_err(err)?;
    }
    finish(path, w)
}

pub fn write_node_vector(path: &Path, column: &str, values: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["node_id", column]).map_err(err)?;
    for (id, v) in values.iter().enumerate() {
        w.write_record([id.to_string(), format_float(*v)])
            .map_err(err)?;
    }
    finish(path, w)
}

/// Evolved against empirical Monte-Carlo densities, one row per node and step.
pub fn write_walker_comparison(
    path: &Path,
    evolved: &[Vec<f64>],
    empirical: &[Vec<f64>],
    walkers: u64,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["t", "node_id", "evolve", "empirical", "binomial_sd"])
        .map_err(err)?;
    for (t, (ev, em)) in evolved.iter().zip(empirical).enumerate() {
        for (id, (&p, &q)) in ev.iter().zip(em).enumerate() {
            let sd = (p * (1.0 - p).max(0.0) / walkers as f64).sqrt();
            w.write_record([
                t.to_string(),
                id.to_string(),
                format_float(p),
                format_float(q),
                format_float(sd),
            ])
            .map_err(err)?;
        }
    }
    finish(path, w)
}

const RAMP_LOW: [u8; 3] = [68, 1, 84];
const RAMP_HIGH: [u8; 3] = [253, 231, 37];
const PLOT_SIZE: f64 = 640.0;
const MARGIN: f64 = 20.0;
const LEGEND_HEIGHT: f64 = 70.0;

fn ramp(t: f64) -> String {
    let c: Vec<u8> = RAMP_LOW
        .iter()
        .zip(RAMP_HIGH)
        .map(|(&a, b)| (a as f64 + t * (b as f64 - a as f64)).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// One filled cell per node (squares on the square lattice, hexagons on the
/// triangular one), colored on a linear ramp from the field minimum to its
/// maximum, with a min/max legend underneath.
pub fn heatmap_svg(mesh: &Mesh, values: &[f64], label: &str) -> Result<String> {
    if values.len() != mesh.len() {
        return Err(Error::Precondition(format!(
            "{} values for a {}-node mesh",
            values.len(),
            mesh.len()
        )));
    }
    if mesh.is_empty() {
        return Err(Error::DegenerateMesh("cannot draw an empty mesh".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "field value at node {i} is {}",
            values[i]
        )));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h = mesh.spacing;
    let pad = h;
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for n in &mesh.nodes {
        x0 = x0.min(n.x - pad);
        y0 = y0.min(n.y - pad);
        x1 = x1.max(n.x + pad);
        y1 = y1.max(n.y + pad);
    }
    let scale = PLOT_SIZE / (x1 - x0).max(y1 - y0);
    let plot_w = (x1 - x0) * scale;
    let plot_h = (y1 - y0) * scale;
    let legend_w = plot_w.max(240.0);
    let width = 2.0 * MARGIN + legend_w;
    let height = 2.0 * MARGIN + plot_h + LEGEND_HEIGHT;
    let px = |x: f64| MARGIN + (x - x0) * scale;
    let py = |y: f64| MARGIN + (y1 - y) * scale;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.3}" height="{height:.3}" viewBox="0 0 {width:.3} {height:.3}">"#
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(label));
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );
    let _ = writeln!(svg, r#"<g stroke="none">"#);
    for (n, &v) in mesh.nodes.iter().zip(values) {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
        let fill = ramp(t);
        match mesh.domain_kind {
            DomainKind::Square => {
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
                    px(n.x - h / 2.0),
                    py(n.y + h / 2.0),
                    h * scale,
                    h * scale
                );
            }
            DomainKind::Triadic => {
                let r = h / 3f64.sqrt();
                let pts: Vec<String> = (0..6)
                    .map(|k| {
                        let a =
                            std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::FRAC_PI_3;
                        format!("{:.3},{:.3}", px(n.x + r * a.cos()), py(n.y + r * a.sin()))
                    })
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polygon points="{}" fill="{fill}"/>"#,
                    pts.join(" ")
                );
            }
        }
    }
    let _ = writeln!(svg, "</g>");

    let bar_y = MARGIN + plot_h + 15.0;
    let _ = writeln!(
        svg,
        r#"<defs><linearGradient id="ramp" x1="0" x2="1" y1="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"#,
        ramp(0.0),
        ramp(1.0)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN:.3}" y="{bar_y:.3}" width="{legend_w:.3}" height="16.000" fill="url(#ramp)"/>"#
    );
    let text_y = bar_y + 34.0;
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN:.3}" y="{text_y:.3}" font-family="monospace" font-size="12" text-anchor="start">min {lo:.6e}</text>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{text_y:.3}" font-family="monospace" font-size="12" text-anchor="end">max {hi:.6e}</text>"#,
        MARGIN + legend_w
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{text_y:.3}" font-family="monospace" font-size="12" text-anchor="middle">{}</text>"#,
        MARGIN + legend_w / 2.0,
        escape(label)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
