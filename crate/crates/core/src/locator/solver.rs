use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::geometry::{AnchorSet, Position, RangeSet};
use super::{LocatorError, Result};

pub const MAX_ITERATIONS: usize = 100;
/// Convergence when an accepted step is shorter than this, meters.
pub const STEP_TOLERANCE: f64 = 1e-9;

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e12;

/// Solver output for one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Fix {
    pub position: Position,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Height was pinned to the tag wear height instead of being solved.
    pub height_fixed: bool,
    pub outside_room: bool,
    /// Objective value after each accepted step, starting with the initial guess.
    #[serde(skip)]
    pub cost_history: Vec<f64>,
}

/// Damped Gauss-Newton (Levenberg) fit of the tag position to measured ranges,
/// minimising the sum of squared range residuals. With three anchors, or
/// anchors all at one height, z is held at the configured tag height.
pub fn solve_position(ranges: &RangeSet, anchors: &AnchorSet, initial: Option<Position>) -> Result<Fix> {
    let mut pairs = Vec::with_capacity(ranges.ranges.len());
    for r in &ranges.ranges {
        let a = anchors.get(&r.anchor_id).ok_or_else(|| LocatorError::UnknownAnchor(r.anchor_id.clone()))?;
        if !(r.range.is_finite() && r.range >= 0.0) {
            return Err(LocatorError::InvalidParameter(format!("range {} to {}", r.range, r.anchor_id)));
        }
        pairs.push((a.position, r.range));
    }
    if pairs.len() < 3 {
        return Err(LocatorError::InsufficientAnchors(pairs.len()));
    }
    anchors.validate()?;

    let solve_height = anchors.resolves_height() && pairs.len() >= 4;
    let dim = if solve_height { 3 } else { 2 };
    let start = initial.unwrap_or_else(|| {
        let c = anchors.room.center();
        Position::new(c.x, c.y, anchors.tag_height)
    });
    let z_fixed = anchors.tag_height;
    let to_position = |v: &DVector<f64>| Position::new(v[0], v[1], if solve_height { v[2] } else { z_fixed });

    let cost = |p: &Position| -> f64 { pairs.iter().map(|(a, r)| (p.distance(a) - r).powi(2)).sum() };

    let mut x = DVector::from_vec(if solve_height { vec![start.x, start.y, start.z] } else { vec![start.x, start.y] });
    let mut current = cost(&to_position(&x));
    let mut history = vec![current];
    let mut lambda = LAMBDA_INIT;
    let mut converged = current == 0.0;
    let mut iterations = 0;

    while !converged && iterations < MAX_ITERATIONS {
        iterations += 1;
        let p = to_position(&x);
        let mut jac = DMatrix::<f64>::zeros(pairs.len(), dim);
        let mut res = DVector::<f64>::zeros(pairs.len());
        for (i, (a, r)) in pairs.iter().enumerate() {
            let d = p.distance(a);
            res[i] = d - r;
            if d > 0.0 {
                let g = [(p.x - a.x) / d, (p.y - a.y) / d, (p.z - a.z) / d];
                for k in 0..dim {
                    jac[(i, k)] = g[k];
                }
            }
        }
        let jt = jac.transpose();
        let grad = &jt * &res;
        let normal = &jt * &jac;

        loop {
            let damped = &normal + DMatrix::<f64>::identity(dim, dim) * lambda;
            let step = match damped.cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => {
                    lambda *= 10.0;
                    if lambda > LAMBDA_MAX {
                        converged = true;
                        break;
                    }
                    continue;
                }
            };
            let candidate = &x + &step;
            let trial = cost(&to_position(&candidate));
            if trial < current {
                x = candidate;
                current = trial;
                history.push(current);
                lambda = (lambda / 10.0).max(1e-15);
                if step.norm() < STEP_TOLERANCE || current == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                // no descent direction left at machine precision
                converged = true;
                break;
            }
        }
    }

    let position = to_position(&x);
    let fix = Fix {
        position,
        residual_norm: current.sqrt(),
        iterations,
        height_fixed: !solve_height,
        outside_room: !anchors.room.contains(&position),
        cost_history: history,
    };
    if converged {
        Ok(fix)
    } else {
        Err(LocatorError::NonConvergence { best: fix })
    }
}

/// Per-epoch solver records rendered as CSV (`epoch,x,y,z,residual`).
#[derive(Debug, Clone, Default)]
pub struct FixTrace {
    rows: Vec<(u64, Position, f64)>,
}

impl FixTrace {
    pub fn record(&mut self, epoch: u64, fix: &Fix) {
        self.rows.push((epoch, fix.position, fix.residual_norm));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,x,y,z,residual\n");
        for (epoch, p, r) in &self.rows {
            out.push_str(&format!("{epoch},{:.6},{:.6},{:.6},{:.9}\n", p.x, p.y, p.z, r));
        }
        out
    }
}
