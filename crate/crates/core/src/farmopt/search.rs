//! Generalized pattern search over a box, maximizing.
//!
//! Each iteration polls `x ± mesh·e_j` for every coordinate `j`, in the order
//! `+e_0, −e_0, +e_1, −e_1, …`. Poll points are projected onto the box. A
//! successful poll moves the incumbent and expands the mesh, an unsuccessful
//! one contracts it. General constraints enter through a penalty on the
//! reported violation.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Objective value and total constraint violation at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Zero when feasible, positive otherwise.
    pub violation: f64,
}

impl Evaluation {
    pub fn feasible(value: f64) -> Self {
        Self { value, violation: 0.0 }
    }

    pub fn is_feasible(&self) -> bool {
        self.violation <= 0.0
    }

    fn score(&self, penalty: f64) -> f64 {
        self.value - penalty * self.violation.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PollOrder {
    /// Evaluate every poll point and move to the best one.
    Complete,
    /// Move to the first improving poll point.
    Opportunistic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub initial_mesh: f64,
    pub tolerance: f64,
    pub max_evaluations: usize,
    pub poll: PollOrder,
    pub penalty: f64,
    pub expansion: f64,
    pub contraction: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            initial_mesh: 0.1,
            tolerance: 1e-5,
            max_evaluations: 10_000,
            poll: PollOrder::Complete,
            penalty: 1e4,
            expansion: 2.0,
            contraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchDiagnostics {
    pub iterations: usize,
    pub evaluations: usize,
    pub final_mesh: f64,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub eval: Evaluation,
    pub diagnostics: SearchDiagnostics,
}

pub fn pattern_search<F>(
    mut objective: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &SearchOptions,
) -> Result<SearchResult>
where
    F: FnMut(&[f64]) -> Evaluation,
{
    let dim = x0.len();
    if lower.len() != dim || upper.len() != dim {
        return Err(Error::InvalidParams("bounds and start point differ in dimension"));
    }
    if !(opts.initial_mesh > 0.0 && opts.tolerance > 0.0 && opts.expansion >= 1.0) {
        return Err(Error::InvalidParams("mesh sizes must be positive"));
    }
    if !(0.0 < opts.contraction && opts.contraction < 1.0) {
        return Err(Error::InvalidParams("contraction must lie in (0, 1)"));
    }
    for j in 0..dim {
        if !(lower[j] <= x0[j] && x0[j] <= upper[j]) {
            return Err(Error::Domain { what: "start point outside bounds", value: x0[j] });
        }
    }

    let mut x: Vec<f64> = x0.to_vec();
    let mut current = objective(&x);
    if !current.value.is_finite() {
        return Err(Error::Domain { what: "objective at start point", value: current.value });
    }
    let max_mesh = (0..dim)
        .map(|j| upper[j] - lower[j])
        .fold(opts.initial_mesh, f64::max);
    let mut diag = SearchDiagnostics {
        evaluations: 1,
        final_mesh: opts.initial_mesh,
        ..SearchDiagnostics::default()
    };
    let mut mesh = opts.initial_mesh;
    let mut trial = x.clone();

    'outer: while mesh >= opts.tolerance {
        if diag.evaluations >= opts.max_evaluations {
            diag.budget_exhausted = true;
            break;
        }
        diag.iterations += 1;
        let mut best: Option<(usize, f64, Evaluation)> = None;
        let incumbent = current.score(opts.penalty);
        'poll: for j in 0..dim {
            for sign in [1.0, -1.0] {
                let moved = (x[j] + sign * mesh).clamp(lower[j], upper[j]);
                if moved == x[j] {
                    continue;
                }
                if diag.evaluations >= opts.max_evaluations {
                    diag.budget_exhausted = true;
                    break 'poll;
                }
                trial.copy_from_slice(&x);
                trial[j] = moved;
                let e = objective(&trial);
                diag.evaluations += 1;
                if !e.value.is_finite() {
                    continue;
                }
                let s = e.score(opts.penalty);
                let beats = match best {
                    Some((_, _, b)) => s > b.score(opts.penalty),
                    None => s > incumbent,
                };
                if beats {
                    best = Some((j, moved, e));
                    if opts.poll == PollOrder::Opportunistic {
                        break 'poll;
                    }
                }
            }
        }
        match best {
            Some((j, moved, e)) => {
                x[j] = moved;
                current = e;
                mesh = (mesh * opts.expansion).min(max_mesh);
            }
            None => {
                if diag.budget_exhausted {
                    break 'outer;
                }
                mesh *= opts.contraction;
            }
        }
    }
    diag.final_mesh = mesh;
    Ok(SearchResult {
        x,
        eval: current,
        diagnostics: diag,
    })
}
