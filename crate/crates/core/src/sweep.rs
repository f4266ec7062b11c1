//! Grid evaluation of the effective capacity.
//!
//! Rows come back in grid order: `axis1` varies fastest, so each `axis2`
//! value forms one contiguous series. Points are evaluated independently and
//! a failure at one point is kept in its row.

use crate::capacity::{effective_capacity, CapacityResult};
use crate::config::{ProblemConfig, SweepSpec};
use crate::error::Result;
use crate::par::{self, Execution};

#[derive(Debug, Clone)]
pub struct SweepRow {
    /// One value per axis, in axis order.
    pub coords: Vec<f64>,
    pub outcome: Result<CapacityResult>,
}

impl SweepRow {
    pub fn status(&self) -> &'static str {
        match &self.outcome {
            Ok(r) if r.supremum => "ok-supremum",
            Ok(_) => "ok",
            Err(e) => e.kind(),
        }
    }
}

/// Grid points of `spec` in row order.
pub fn grid_points(spec: &SweepSpec) -> Result<Vec<Vec<f64>>> {
    let grids = spec.grids()?;
    let outer: &[f64] = grids.get(1).map_or(&[f64::NAN], |g| &g[..]);
    let mut points = Vec::with_capacity(grids[0].len() * outer.len());
    for &b in outer {
        for &a in &grids[0] {
            points.push(if grids.len() == 2 { vec![a, b] } else { vec![a] });
        }
    }
    Ok(points)
}

fn evaluate(spec: &SweepSpec, coords: &[f64]) -> Result<CapacityResult> {
    let mut cfg: ProblemConfig = spec.base.clone();
    for (axis, &v) in spec.axes().iter().zip(coords) {
        cfg = cfg.with_axis(axis.name, v)?;
    }
    effective_capacity(&cfg.to_system()?)
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    run_sweep_with(spec, Execution::default())
}

pub fn run_sweep_with(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepRow>> {
    let points = grid_points(spec)?;
    Ok(par::map_with(exec, &points, |coords| SweepRow {
        coords: coords.clone(),
        outcome: evaluate(spec, coords),
    }))
}
