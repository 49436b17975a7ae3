//! Per-node confinement measures and position entropy.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AxisRay, BoundaryPolygon, Direction};
use crate::lattice::Mesh;

/// Relative gap (against the domain maximum) under which two neighbor
/// `d_rat_min` values fall into the same entropy class.
pub const CLASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalDistances {
    pub dh_plus: f64,
    pub dh_minus: f64,
    pub dv_plus: f64,
    pub dv_minus: f64,
}

impl DirectionalDistances {
    pub fn min(&self) -> f64 {
        self.dh_plus
            .min(self.dh_minus)
            .min(self.dv_plus)
            .min(self.dv_minus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Grotto,
    Canyon,
    Prairie,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Grotto => "grotto",
            Region::Canyon => "canyon",
            Region::Prairie => "prairie",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionThresholds {
    /// `d_rat` below this is a canyon.
    pub canyon: f64,
    /// Otherwise `d_min` below this (domain units) is a grotto.
    pub grotto: f64,
}

impl Default for RegionThresholds {
    fn default() -> Self {
        Self {
            canyon: 0.25,
            grotto: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeMeasures {
    pub dd: DirectionalDistances,
    pub dh: f64,
    pub dv: f64,
    pub d_min: f64,
    pub d_rat: f64,
    pub d_rat_min: f64,
    pub d_rel: f64,
    pub entropy: f64,
    pub s_rel: f64,
}

impl NodeMeasures {
    fn from_distances(dd: DirectionalDistances) -> Self {
        let dh = dd.dh_plus + dd.dh_minus;
        let dv = dd.dv_plus + dd.dv_minus;
        let d_min = dd.min();
        let d_rat = (dh / dv).min(dv / dh);
        Self {
            dd,
            dh,
            dv,
            d_min,
            d_rat,
            d_rat_min: d_rat * d_min,
            d_rel: 0.0,
            entropy: 0.0,
            s_rel: 0.0,
        }
    }
}

/// Measures for every node of a mesh plus the domain maxima used for the
/// relative fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTable {
    pub nodes: Vec<NodeMeasures>,
    pub d_rat_min_max: f64,
    pub entropy_max: f64,
}

impl MeasureTable {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: usize) -> Result<&NodeMeasures> {
        self.nodes.get(id).ok_or(Error::Lookup {
            id,
            len: self.nodes.len(),
        })
    }

    pub fn d_rat_min(&self) -> Vec<f64> {
        self.nodes.iter().map(|m| m.d_rat_min).collect()
    }

    pub fn entropy(&self) -> Vec<f64> {
        self.nodes.iter().map(|m| m.entropy).collect()
    }

    pub fn d_rel(&self) -> Vec<f64> {
        self.nodes.iter().map(|m| m.d_rel).collect()
    }
}

pub fn directional_distances(
    poly: &BoundaryPolygon,
    mesh: &Mesh,
    id: usize,
) -> Result<DirectionalDistances> {
    let origin = mesh.position(id)?;
    let d = |direction| poly.ray_boundary_distance(AxisRay::new(origin, direction));
    Ok(DirectionalDistances {
        dh_plus: d(Direction::Right)?,
        dh_minus: d(Direction::Left)?,
        dv_plus: d(Direction::Up)?,
        dv_minus: d(Direction::Down)?,
    })
}

/// All geometric measures, the position entropy and both relative fields.
pub fn compute_measures(poly: &BoundaryPolygon, mesh: &Mesh) -> Result<MeasureTable> {
    let mut nodes = (0..mesh.len())
        .into_par_iter()
        .map(|id| directional_distances(poly, mesh, id).map(NodeMeasures::from_distances))
        .collect::<Result<Vec<_>>>()?;

    let d_rat_min: Vec<f64> = nodes.iter().map(|m| m.d_rat_min).collect();
    let d_rat_min_max = d_rat_min.iter().copied().fold(0.0, f64::max);
    let entropy = position_entropy(mesh, &d_rat_min);
    let entropy_max = entropy.iter().copied().fold(0.0, f64::max);

    for (m, s) in nodes.iter_mut().zip(entropy) {
        m.d_rel = m.d_rat_min / d_rat_min_max;
        m.entropy = s;
        m.s_rel = if entropy_max > 0.0 {
            s / entropy_max
        } else {
            0.0
        };
    }
    Ok(MeasureTable {
        nodes,
        d_rat_min_max,
        entropy_max,
    })
}

/// Shannon entropy of the neighbor `d_rat_min` classes at every node.
pub fn position_entropy(mesh: &Mesh, d_rat_min: &[f64]) -> Vec<f64> {
    let domain_max = d_rat_min.iter().copied().fold(0.0, f64::max);
    let gap = CLASS_TOLERANCE * domain_max;
    mesh.adjacency
        .par_iter()
        .map(|nb| {
            let values: Vec<f64> = nb.iter().map(|&j| d_rat_min[j]).collect();
            neighbor_entropy(&values, gap)
        })
        .collect()
}

/// Entropy of the class distribution of `values`, where sorted values closer
/// than `gap` chain into one class. Zero for fewer than two values.
pub fn neighbor_entropy(values: &[f64], gap: f64) -> f64 {
    if values.len() <= 1 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut counts = Vec::new();
    let mut run = 1usize;
    for w in sorted.windows(2) {
        if w[1] - w[0] <= gap {
            run += 1;
        } else {
            counts.push(run);
            run = 1;
        }
    }
    counts.push(run);
    let total = values.len() as f64;
    let s: f64 = counts
        .into_iter()
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    // A single class gives -1·ln 1 = -0.0; report +0.
    s.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub max: f64,
    pub min: f64,
    pub min_over_max: f64,
    pub median: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub median_over_max: f64,
    pub mean_over_max: f64,
}

impl SummaryStats {
    /// Row labels and values in table order.
    pub fn rows(&self) -> [(&'static str, f64); 8] {
        [
            ("maximum", self.max),
            ("minimum", self.min),
            ("minimum/maximum", self.min_over_max),
            ("median", self.median),
            ("mean", self.mean),
            ("standard_deviation", self.std),
            ("median/maximum", self.median_over_max),
            ("mean/maximum", self.mean_over_max),
        ]
    }
}

pub fn summary_stats(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::Domain("summary of an empty sequence".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let max = sorted[n - 1];
    let min = sorted[0];
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    // Rounding can push the mean a hair outside [min, max] for constant data.
    let mean = mean.clamp(min, max);
    let ratio = |v: f64| if max != 0.0 { v / max } else { 0.0 };
    Ok(SummaryStats {
        max,
        min,
        min_over_max: ratio(min),
        median,
        mean,
        std: var.sqrt(),
        median_over_max: ratio(median),
        mean_over_max: ratio(mean),
    })
}

/// `d_rel + s_rel` per node, in [0, 2].
pub fn combined_field(table: &MeasureTable) -> Vec<f64> {
    table.nodes.iter().map(|m| m.d_rel + m.s_rel).collect()
}

pub fn classify_region(nm: &NodeMeasures, thresholds: &RegionThresholds) -> Region {
    if nm.d_rat < thresholds.canyon {
        Region::Canyon
    } else if nm.d_min < thresholds.grotto {
        Region::Grotto
    } else {
        Region::Prairie
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_square_boundary, generate_triadic_boundary};
    use crate::lattice::build_mesh;

    fn with(d_rat: f64, d_min: f64) -> NodeMeasures {
        NodeMeasures {
            d_rat,
            d_min,
            ..NodeMeasures::from_distances(DirectionalDistances {
                dh_plus: 1.0,
                dh_minus: 1.0,
                dv_plus: 1.0,
                dv_minus: 1.0,
            })
        }
    }

    #[test]
    fn unit_square_distances() {
        let poly = generate_square_boundary(0).unwrap();
        let mesh = build_mesh(&poly, 2).unwrap();
        // Node 3 sits at (0.25, 0.5).
        let dd = directional_distances(&poly, &mesh, 3).unwrap();
        assert_eq!(
            dd,
            DirectionalDistances {
                dh_plus: 0.75,
                dh_minus: 0.25,
                dv_plus: 0.5,
                dv_minus: 0.5
            }
        );
        let center = directional_distances(&poly, &mesh, 4).unwrap();
        assert_eq!(center.min(), 0.5);
        assert_eq!(center.dh_plus, center.dv_minus);
        assert!(directional_distances(&poly, &mesh, 99).is_err());
    }

    #[test]
    fn single_node_measures() {
        let poly = generate_square_boundary(0).unwrap();
        let mesh = build_mesh(&poly, 1).unwrap();
        let t = compute_measures(&poly, &mesh).unwrap();
        let m = t.nodes[0];
        assert_eq!((m.d_min, m.d_rat, m.d_rat_min), (0.5, 1.0, 0.5));
        assert_eq!(m.d_rel, 1.0);
        assert_eq!(m.entropy, 0.0);
        assert_eq!(m.s_rel, 0.0);
    }

    #[test]
    fn entropy_of_class_splits() {
        assert_eq!(neighbor_entropy(&[0.1, 0.1, 0.1, 0.1], 1e-12), 0.0);
        let two = neighbor_entropy(&[0.1, 0.2, 0.1, 0.2], 1e-12);
        assert!((two - std::f64::consts::LN_2).abs() < 1e-15);
        let three = neighbor_entropy(&[0.3, 0.1, 0.1, 0.2], 1e-12);
        let expected = -(0.5 * 0.5f64.ln() + 0.25 * 0.25f64.ln() + 0.25 * 0.25f64.ln());
        assert!((three - expected).abs() < 1e-15);
        assert!((three - 1.0397).abs() < 1e-4);
        assert_eq!(neighbor_entropy(&[0.4], 0.0), 0.0);
        assert_eq!(neighbor_entropy(&[], 0.0), 0.0);
    }

    #[test]
    fn class_tolerance_merges_near_values() {
        let s = neighbor_entropy(&[0.25, 0.25 + 1e-13, 0.5, 0.5], 1e-10);
        assert!((s - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn summary_examples() {
        let s = summary_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.max, s.min, s.median, s.mean), (3.0, 1.0, 2.0, 2.0));
        assert!((s.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.min_over_max - 1.0 / 3.0).abs() < 1e-15);
        let s = summary_stats(&[5.0]).unwrap();
        assert_eq!(
            (s.max, s.min, s.median, s.mean, s.std),
            (5.0, 5.0, 5.0, 5.0, 0.0)
        );
        assert_eq!(summary_stats(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        assert!(matches!(summary_stats(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn regions() {
        let t = RegionThresholds::default();
        assert_eq!(classify_region(&with(0.05, 0.2), &t), Region::Canyon);
        assert_eq!(classify_region(&with(0.9, 0.02), &t), Region::Grotto);
        assert_eq!(classify_region(&with(0.9, 0.2), &t), Region::Prairie);
    }

    #[test]
    fn combined_field_is_sum() {
        let poly = generate_triadic_boundary(1).unwrap();
        let mesh = build_mesh(&poly, 1).unwrap();
        let t = compute_measures(&poly, &mesh).unwrap();
        let f = combined_field(&t);
        for (v, m) in f.iter().zip(&t.nodes) {
            assert_eq!(*v, m.d_rel + m.s_rel);
            assert!((0.0..=2.0).contains(v));
        }
        let mut manual = t.clone();
        manual.nodes[0].d_rel = 0.3;
        manual.nodes[0].s_rel = 0.5;
        assert!((combined_field(&manual)[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn relative_fields_reach_one() {
        let poly = generate_square_boundary(1).unwrap();
        let mesh = build_mesh(&poly, 1).unwrap();
        let t = compute_measures(&poly, &mesh).unwrap();
        assert!(t.nodes.iter().any(|m| m.d_rel == 1.0));
        assert!(t.nodes.iter().any(|m| m.s_rel == 1.0));
        assert!(t
            .nodes
            .iter()
            .all(|m| (0.0..=1.0).contains(&m.d_rel) && (0.0..=1.0).contains(&m.s_rel)));
    }
}
