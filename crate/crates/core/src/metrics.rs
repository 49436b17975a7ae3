//! Localization observables on walker densities.
//!
//! All densities here are indexed by mesh node id.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diffusion::Trajectory;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::lattice::Mesh;
use crate::measures::MeasureTable;

/// Density above which a node counts as visited for DIAM.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// High-amplitude nodes exceed this fraction of the maximum density.
pub const HIGH_AMPLITUDE_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkMetrics {
    pub t: u64,
    pub pr: f64,
    pub diam: f64,
    pub d_ha_rel: f64,
    pub s_ha_rel: f64,
    pub diam_ha_rel: f64,
    pub ha_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub start: usize,
    pub d_rel_start: f64,
    pub s_rel_start: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaMetrics {
    pub d_ha_rel: f64,
    pub s_ha_rel: f64,
    pub diam_ha_rel: f64,
    pub diam_ha: f64,
    pub ha_count: usize,
}

/// `1 / Σ η_i⁴`.
pub fn participation_ratio(eta: &[f64]) -> Result<f64> {
    let s: f64 = eta.iter().map(|v| v.powi(4)).sum();
    if s == 0.0 {
        return Err(Error::Domain(
            "participation ratio of a zero density".into(),
        ));
    }
    Ok(1.0 / s)
}

/// `(Σ|ψ|² vol)² / (Σ|ψ|⁴ vol)` for a field sampled on cells of equal volume.
pub fn participation_volume(psi: &[f64], cell_volume: f64) -> Result<f64> {
    let s2: f64 = psi.iter().map(|v| v * v).sum::<f64>() * cell_volume;
    let s4: f64 = psi.iter().map(|v| v.powi(4)).sum::<f64>() * cell_volume;
    if s4 == 0.0 {
        return Err(Error::Domain("participation volume of a zero field".into()));
    }
    Ok(s2 * s2 / s4)
}

/// Nodes with `|η_i| > 0.75 · max |η|`, ascending. The arg-max is always
/// included, so the set is never empty for a non-empty density.
pub fn high_amplitude_set(eta: &[f64]) -> Vec<usize> {
    let max = eta.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let threshold = HIGH_AMPLITUDE_FRACTION * max;
    let set: Vec<usize> = (0..eta.len())
        .filter(|&i| eta[i].abs() > threshold)
        .collect();
    if set.is_empty() && !eta.is_empty() {
        let arg = (0..eta.len())
            .find(|&i| eta[i].abs() == max)
            .expect("max comes from the slice");
        return vec![arg];
    }
    set
}

/// Largest pairwise distance in a point set, via its convex hull.
pub fn set_diameter(points: &[Point]) -> f64 {
    let hull = convex_hull(points);
    let mut best: f64 = 0.0;
    for (k, a) in hull.iter().enumerate() {
        for b in &hull[k + 1..] {
            best = best.max(a.distance(*b));
        }
    }
    best
}

fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross =
        |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Running DIAM: the furthest distance from the start among nodes whose
/// density has exceeded [`SUPPORT_THRESHOLD`] at any step so far.
#[derive(Debug, Clone)]
pub struct DiamTracker {
    origin: Point,
    current: f64,
}

impl DiamTracker {
    pub fn new(mesh: &Mesh, start: usize) -> Result<Self> {
        Ok(Self {
            origin: mesh.position(start)?,
            current: 0.0,
        })
    }

    pub fn observe(&mut self, mesh: &Mesh, eta: &[f64]) -> f64 {
        for (node, &v) in mesh.nodes.iter().zip(eta) {
            if v > SUPPORT_THRESHOLD {
                self.current = self.current.max(self.origin.distance(node.position()));
            }
        }
        self.current
    }

    pub fn value(&self) -> f64 {
        self.current
    }
}

/// DIAM(t) from a trajectory recorded at stride 1 (mesh-indexed densities).
pub fn diam(trajectory: &Trajectory, mesh: &Mesh, start: usize, t: u64) -> Result<f64> {
    let mut tracker = DiamTracker::new(mesh, start)?;
    for s in 0..=t {
        let eta = trajectory
            .state_at(s)
            .ok_or_else(|| Error::Range(format!("trajectory has no density at t = {s}")))?;
        tracker.observe(mesh, eta);
    }
    Ok(tracker.value())
}

pub fn ha_metrics(eta: &[f64], measures: &MeasureTable, mesh: &Mesh, diam_t: f64) -> HaMetrics {
    let ha = high_amplitude_set(eta);
    let count = ha.len() as f64;
    let mean_d: f64 = ha.iter().map(|&i| measures.nodes[i].d_rat_min).sum::<f64>() / count;
    let mean_s: f64 = ha.iter().map(|&i| measures.nodes[i].entropy).sum::<f64>() / count;
    let points: Vec<Point> = ha.iter().map(|&i| mesh.nodes[i].position()).collect();
    let diam_ha = set_diameter(&points);
    HaMetrics {
        d_ha_rel: mean_d / measures.d_rat_min_max,
        s_ha_rel: if measures.entropy_max > 0.0 {
            mean_s / measures.entropy_max
        } else {
            0.0
        },
        diam_ha_rel: if diam_t > 0.0 { diam_ha / diam_t } else { 0.0 },
        diam_ha,
        ha_count: ha.len(),
    }
}

pub fn start_report(measures: &MeasureTable, start: usize) -> Result<StartReport> {
    let m = measures.get(start)?;
    Ok(StartReport {
        start,
        d_rel_start: m.d_rel,
        s_rel_start: m.s_rel,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSelector {
    LowDLowS,
    HighDHighS,
    HighDLowS,
    LowDHighS,
}

impl StartSelector {
    pub const ALL: [StartSelector; 4] = [
        StartSelector::LowDLowS,
        StartSelector::HighDHighS,
        StartSelector::HighDLowS,
        StartSelector::LowDHighS,
    ];

    fn accepts(self, d_rel: f64, s_rel: f64, th: &SelectorThresholds) -> bool {
        let (high_d, high_s) = match self {
            StartSelector::LowDLowS => (false, false),
            StartSelector::HighDHighS => (true, true),
            StartSelector::HighDLowS => (true, false),
            StartSelector::LowDHighS => (false, true),
        };
        let d_ok = if high_d {
            d_rel > th.d_rel
        } else {
            d_rel < th.d_rel
        };
        let s_ok = if high_s {
            s_rel > th.s_rel
        } else {
            s_rel < th.s_rel
        };
        d_ok && s_ok
    }
}

impl fmt::Display for StartSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StartSelector::LowDLowS => "low_d_low_s",
            StartSelector::HighDHighS => "high_d_high_s",
            StartSelector::HighDLowS => "high_d_low_s",
            StartSelector::LowDHighS => "low_d_high_s",
        })
    }
}

impl std::str::FromStr for StartSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        StartSelector::ALL
            .into_iter()
            .find(|sel| sel.to_string() == s)
            .ok_or_else(|| format!("unknown selector {s:?}"))
    }
}

/// Split points on the relative scales; "high" is strictly above, "low"
/// strictly below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorThresholds {
    pub d_rel: f64,
    pub s_rel: f64,
}

impl Default for SelectorThresholds {
    fn default() -> Self {
        Self {
            d_rel: 0.5,
            s_rel: 0.5,
        }
    }
}

/// Lowest node id satisfying the selector.
pub fn select_start(
    measures: &MeasureTable,
    selector: StartSelector,
    thresholds: &SelectorThresholds,
) -> Result<usize> {
    measures
        .nodes
        .iter()
        .position(|m| selector.accepts(m.d_rel, m.s_rel, thresholds))
        .ok_or_else(|| Error::Selection {
            selector: selector.to_string(),
            d_threshold: thresholds.d_rel,
            s_threshold: thresholds.s_rel,
        })
}

/// Computes [`WalkMetrics`] for successive densities of one walk.
pub struct MetricsRecorder<'a> {
    mesh: &'a Mesh,
    measures: &'a MeasureTable,
    tracker: DiamTracker,
}

impl<'a> MetricsRecorder<'a> {
    pub fn new(mesh: &'a Mesh, measures: &'a MeasureTable, start: usize) -> Result<Self> {
        if measures.len() != mesh.len() {
            return Err(Error::Precondition(format!(
                "measure table has {} rows for a {}-node mesh",
                measures.len(),
                mesh.len()
            )));
        }
        Ok(Self {
            mesh,
            measures,
            tracker: DiamTracker::new(mesh, start)?,
        })
    }

    /// Advances DIAM with `eta` and returns the metrics at step `t`.
    pub fn observe(&mut self, t: u64, eta: &[f64]) -> Result<WalkMetrics> {
        let diam = self.tracker.observe(self.mesh, eta);
        self.evaluate(t, eta, diam)
    }

    /// Metrics of `eta` against a given DIAM, without advancing the tracker.
    pub fn evaluate(&self, t: u64, eta: &[f64], diam: f64) -> Result<WalkMetrics> {
        let pr = participation_ratio(eta)?;
        let ha = ha_metrics(eta, self.measures, self.mesh, diam);
        Ok(WalkMetrics {
            t,
            pr,
            diam,
            d_ha_rel: ha.d_ha_rel,
            s_ha_rel: ha.s_ha_rel,
            diam_ha_rel: ha.diam_ha_rel,
            ha_count: ha.ha_count,
        })
    }

    pub fn diam(&self) -> f64 {
        self.tracker.value()
    }
}

/// Limit values of a walk: one row for a fixed point, two for a 2-cycle,
/// plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticMetrics {
    pub phases: Vec<WalkMetrics>,
    pub pr: f64,
    pub diam: f64,
    pub d_ha_rel: f64,
    pub s_ha_rel: f64,
    pub diam_ha_rel: f64,
    pub ha_count: f64,
}

impl AsymptoticMetrics {
    pub fn from_phases(phases: Vec<WalkMetrics>) -> Self {
        let k = phases.len() as f64;
        let mean = |f: fn(&WalkMetrics) -> f64| phases.iter().map(f).sum::<f64>() / k;
        Self {
            pr: mean(|m| m.pr),
            diam: mean(|m| m.diam),
            d_ha_rel: mean(|m| m.d_ha_rel),
            s_ha_rel: mean(|m| m.s_ha_rel),
            diam_ha_rel: mean(|m| m.diam_ha_rel),
            ha_count: mean(|m| m.ha_count as f64),
            phases,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_square_boundary, DomainKind};
    use crate::lattice::{build_mesh, Node};
    use crate::measures::compute_measures;

    #[test]
    fn participation_ratio_examples() {
        assert_eq!(participation_ratio(&[0.0, 1.0, 0.0]).unwrap(), 1.0);
        let n = 5;
        let uniform = vec![1.0 / n as f64; n];
        assert!((participation_ratio(&uniform).unwrap() - 125.0).abs() < 1e-9);
        assert_eq!(participation_ratio(&[0.5, 0.5]).unwrap(), 8.0);
        assert!(participation_ratio(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn participation_volume_examples() {
        assert!((participation_volume(&[0.3, 0.3, 0.3, 0.0], 0.5).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(participation_volume(&[2.0], 0.25).unwrap(), 0.25);
        assert_eq!(participation_volume(&[1.0, 1.0, 2.0], 1.0).unwrap(), 2.0);
        assert!(participation_volume(&[0.0; 3], 1.0).is_err());
    }

    #[test]
    fn high_amplitude_examples() {
        assert_eq!(high_amplitude_set(&[0.4, 0.35, 0.25]), vec![0, 1]);
        assert_eq!(high_amplitude_set(&[0.25; 4]), vec![0, 1, 2, 3]);
        assert_eq!(high_amplitude_set(&[0.75, 0.25]), vec![0]);
        assert_eq!(high_amplitude_set(&[0.0, 0.0]), vec![0]);
    }

    #[test]
    fn diameter_of_point_sets() {
        assert_eq!(set_diameter(&[]), 0.0);
        assert_eq!(set_diameter(&[Point::new(1.0, 1.0)]), 0.0);
        let pts: Vec<Point> = (0..5)
            .flat_map(|i| (0..3).map(move |j| Point::new(i as f64, j as f64)))
            .collect();
        assert!((set_diameter(&pts) - (16.0f64 + 4.0).sqrt()).abs() < 1e-15);
        let line = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(3.0, 0.0),
        ];
        assert_eq!(set_diameter(&line), 3.0);
    }

    fn path_mesh() -> Mesh {
        Mesh {
            domain_kind: DomainKind::Square,
            level: 0,
            refine: 0,
            spacing: 1.0,
            nodes: (0..3)
                .map(|id| Node {
                    id,
                    x: id as f64,
                    y: 0.0,
                })
                .collect(),
            adjacency: vec![vec![1], vec![0, 2], vec![1]],
        }
    }

    #[test]
    fn diam_on_path() {
        use crate::diffusion::{build_transfer, evolve, EvolveOptions, WeightedGraph};
        let mesh = path_mesh();
        let g = WeightedGraph::from_adjacency(&mesh.adjacency, &[0.0, 0.5, 0.0]).unwrap();
        let t = build_transfer(&g).unwrap();
        let traj = evolve(&t, &[1.0, 0.0, 0.0], &EvolveOptions::default()).unwrap();
        assert_eq!(diam(&traj, &mesh, 0, 0).unwrap(), 0.0);
        assert_eq!(diam(&traj, &mesh, 0, 1).unwrap(), 1.0);
        assert_eq!(diam(&traj, &mesh, 0, 2).unwrap(), 2.0);
        assert!(matches!(diam(&traj, &mesh, 0, 50), Err(Error::Range(_))));
    }

    #[test]
    fn diam_first_step_is_spacing() {
        use crate::diffusion::{build_transfer, build_weights, step, DensityState};
        let poly = generate_square_boundary(1).unwrap();
        let mesh = build_mesh(&poly, 1).unwrap();
        let m = compute_measures(&poly, &mesh).unwrap();
        let g = build_weights(&mesh, &m).unwrap();
        let t = build_transfer(&g).unwrap();
        let start = 10;
        let s0 = DensityState::delta(g.len(), start).unwrap();
        let s1 = step(&t, &s0);
        let mut tracker = DiamTracker::new(&mesh, start).unwrap();
        assert_eq!(tracker.observe(&mesh, &s0.eta), 0.0);
        assert_eq!(tracker.observe(&mesh, &s1.eta), mesh.spacing);
    }

    #[test]
    fn ha_metrics_cases() {
        let poly = generate_square_boundary(1).unwrap();
        let mesh = build_mesh(&poly, 1).unwrap();
        let m = compute_measures(&poly, &mesh).unwrap();
        let n = mesh.len();

        let mut delta = vec![0.0; n];
        delta[5] = 1.0;
        let single = ha_metrics(&delta, &m, &mesh, 0.5);
        assert_eq!(single.ha_count, 1);
        assert_eq!(single.diam_ha_rel, 0.0);
        assert_eq!(single.d_ha_rel, m.nodes[5].d_rel);

        let uniform = vec![1.0 / n as f64; n];
        let all = ha_metrics(&uniform, &m, &mesh, 1.0);
        assert_eq!(all.ha_count, n);
        let mean_over_max = crate::measures::summary_stats(&m.d_rat_min())
            .unwrap()
            .mean_over_max;
        assert!((all.d_ha_rel - mean_over_max).abs() < 1e-12);
        assert_eq!(ha_metrics(&uniform, &m, &mesh, 0.0).diam_ha_rel, 0.0);
    }

    #[test]
    fn start_reports_and_selection() {
        let poly = generate_square_boundary(1).unwrap();
        let mesh = build_mesh(&poly, 1).unwrap();
        let m = compute_measures(&poly, &mesh).unwrap();
        let arg_max = m.nodes.iter().position(|x| x.d_rel == 1.0).unwrap();
        assert_eq!(start_report(&m, arg_max).unwrap().d_rel_start, 1.0);
        let flat = m.nodes.iter().position(|x| x.entropy == 0.0).unwrap();
        assert_eq!(start_report(&m, flat).unwrap().s_rel_start, 0.0);
        assert!(matches!(
            start_report(&m, mesh.len()),
            Err(Error::Lookup { .. })
        ));

        let th = SelectorThresholds::default();
        let id = select_start(&m, StartSelector::LowDLowS, &th).unwrap();
        assert!(m.nodes[id].d_rel < 0.5 && m.nodes[id].s_rel < 0.5);
        assert!(m.nodes[..id]
            .iter()
            .all(|x| !(x.d_rel < 0.5 && x.s_rel < 0.5)));
        let err = select_start(
            &m,
            StartSelector::HighDHighS,
            &SelectorThresholds {
                d_rel: 1.0,
                s_rel: 1.0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Selection { .. }));
    }

    #[test]
    fn selector_names_round_trip() {
        for sel in StartSelector::ALL {
            assert_eq!(sel.to_string().parse::<StartSelector>().unwrap(), sel);
        }
        assert!("sideways".parse::<StartSelector>().is_err());
    }

    #[test]
    fn asymptotic_mean_of_two_phases() {
        let a = WalkMetrics {
            t: 10,
            pr: 20.0,
            diam: 1.0,
            d_ha_rel: 0.1,
            s_ha_rel: 0.6,
            diam_ha_rel: 0.5,
            ha_count: 3,
        };
        let b = WalkMetrics {
            t: 11,
            pr: 30.0,
            d_ha_rel: 0.2,
            s_ha_rel: 0.8,
            diam_ha_rel: 0.3,
            ha_count: 4,
            ..a
        };
        let m = AsymptoticMetrics::from_phases(vec![a, b]);
        assert_eq!(m.pr, 25.0);
        assert!((m.d_ha_rel - 0.15).abs() < 1e-15);
        assert_eq!(m.ha_count, 3.5);
        assert_eq!(m.phases.len(), 2);
    }
}
