use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::transfer::{renormalize, validate_density, TransferOperator};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_STEPS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub max_steps: u64,
    /// L∞ change below which the iteration is considered stationary.
    pub tolerance: f64,
    /// Keep every `stride`-th density in the trajectory; 0 keeps none.
    pub stride: u64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            tolerance: DEFAULT_TOLERANCE,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationStatus {
    FixedPoint,
    TwoCycle,
    MaxSteps,
}

impl fmt::Display for TerminationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationStatus::FixedPoint => "fixed_point",
            TerminationStatus::TwoCycle => "two_cycle",
            TerminationStatus::MaxSteps => "max_steps",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Termination {
    pub status: TerminationStatus,
    /// First step of the limiting regime: η(t) is the fixed point, or
    /// η(t), η(t+1) are the two cycle states. `max_steps` otherwise.
    pub t: u64,
    /// Last step actually computed.
    pub last_step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// (t, η(t)) at the configured stride, always including t = 0.
    pub snapshots: Vec<(u64, Vec<f64>)>,
    pub termination: Termination,
    /// η(termination.t ..= last_step).
    pub tail: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn state_at(&self, t: u64) -> Option<&[f64]> {
        self.snapshots
            .binary_search_by_key(&t, |(s, _)| *s)
            .ok()
            .map(|k| self.snapshots[k].1.as_slice())
            .or_else(|| {
                let offset = t.checked_sub(self.termination.t)? as usize;
                self.tail.get(offset).map(Vec::as_slice)
            })
    }

    /// The limiting states: one for a fixed point, two for a cycle, the last
    /// computed state when the step budget ran out.
    pub fn limit_states(&self) -> Vec<&[f64]> {
        match self.termination.status {
            TerminationStatus::FixedPoint => vec![&self.tail[0]],
            TerminationStatus::TwoCycle => vec![&self.tail[0], &self.tail[1]],
            TerminationStatus::MaxSteps => vec![self.tail.last().expect("tail is non-empty")],
        }
    }
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Iterates the master equation, handing every computed state to `observer`
/// (including η(0)), until a fixed point, a 2-cycle, or the step budget.
pub fn evolve_with<F>(
    op: &TransferOperator,
    eta0: &[f64],
    opts: &EvolveOptions,
    mut observer: F,
) -> Result<(Termination, Vec<Vec<f64>>)>
where
    F: FnMut(u64, &[f64]),
{
    validate_density(eta0)?;
    let tol = opts.tolerance;
    let mut older: Option<Vec<f64>> = None;
    let mut prev = eta0.to_vec();
    let mut cur = vec![0.0; prev.len()];
    observer(0, &prev);

    for s in 1..=opts.max_steps {
        op.apply_into(&prev, &mut cur);
        renormalize(&mut cur);
        observer(s, &cur);

        let step_change = linf_distance(&cur, &prev);
        if step_change < tol {
            let termination = Termination {
                status: TerminationStatus::FixedPoint,
                t: s - 1,
                last_step: s,
            };
            return Ok((termination, vec![prev, cur]));
        }
        if let Some(o) = &older {
            if linf_distance(&cur, o) < tol && linf_distance(&prev, o) >= tol {
                let termination = Termination {
                    status: TerminationStatus::TwoCycle,
                    t: s - 2,
                    last_step: s,
                };
                return Ok((termination, vec![o.clone(), prev, cur]));
            }
        }
        // Rotate buffers: older <- prev <- cur.
        let recycled = older.replace(std::mem::take(&mut prev));
        prev = std::mem::replace(&mut cur, recycled.unwrap_or_else(|| vec![0.0; eta0.len()]));
    }
    let termination = Termination {
        status: TerminationStatus::MaxSteps,
        t: opts.max_steps,
        last_step: opts.max_steps,
    };
    Ok((termination, vec![prev]))
}

pub fn evolve(op: &TransferOperator, eta0: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    let (termination, tail) = evolve_with(op, eta0, opts, |t, eta| {
        if t == 0 || (opts.stride > 0 && t % opts.stride == 0) {
            snapshots.push((t, eta.to_vec()));
        }
    })?;
    Ok(Trajectory {
        snapshots,
        termination,
        tail,
    })
}
