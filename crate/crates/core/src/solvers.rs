//! Projection-type AVI solvers stopped on the natural residual.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::avi::{residual, AviInstance};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm, op_norm_estimate};
use crate::optkernel::{project, ConstraintSelection};
use crate::polyhedra::{union_distance, PolyhedralSet};
use crate::report::{fmt_num, write_csv};
use crate::settings::Tolerances;

const DIVERGENCE_NORM: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// `x⁺ = P_C(x − τ(Mx + q))`
    ProjectedFixedPoint,
    /// `x̄ = P_C(x − τ(Mx + q))`, `x⁺ = P_C(x − τ(Mx̄ + q))`
    Extragradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub step: f64,
    pub max_iters: usize,
    pub stop_residual: f64,
    pub x0: Vec<f64>,
}

impl SolverConfig {
    /// `τ = 0.3 / (1 + ‖M‖)`, start at the origin.
    pub fn for_instance(inst: &AviInstance, method: SolverMethod) -> Self {
        Self {
            method,
            step: default_step(inst),
            max_iters: 10_000,
            stop_residual: 1e-6,
            x0: vec![0.0; inst.n()],
        }
    }

    pub fn validate(&self, n: usize, tol: &Tolerances) -> Result<()> {
        check_dim(n, self.x0.len())?;
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidInput("step must be positive".into()));
        }
        if self.stop_residual < tol.cmp {
            return Err(Error::InvalidInput(format!(
                "stop_residual {} is below the comparison tolerance {}",
                self.stop_residual, tol.cmp
            )));
        }
        Ok(())
    }
}

/// `‖M‖` by 50 power iterations.
pub fn operator_norm(inst: &AviInstance) -> f64 {
    op_norm_estimate(&inst.m_op, 50)
}

pub fn default_step(inst: &AviInstance) -> f64 {
    0.3 / (1.0 + operator_norm(inst))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveOutcome {
    Converged,
    MaxItersExceeded,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateMeta {
    pub iter: usize,
    pub residual: f64,
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub iterates_meta: Vec<IterateMeta>,
    pub final_x: Vec<f64>,
    pub converged: bool,
    pub outcome: SolveOutcome,
    #[serde(skip)]
    pub iterates: Vec<Vec<f64>>,
}

impl SolveTrace {
    pub fn final_residual(&self) -> f64 {
        self.iterates_meta
            .last()
            .map_or(f64::INFINITY, |m| m.residual)
    }

    pub fn best_residual(&self) -> f64 {
        self.iterates_meta
            .iter()
            .map(|m| m.residual)
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV columns `iter,residual,distance`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .iterates_meta
            .iter()
            .map(|m| {
                vec![
                    m.iter.to_string(),
                    fmt_num(m.residual),
                    m.distance.map(fmt_num).unwrap_or_default(),
                ]
            })
            .collect();
        write_csv(path, &["iter", "residual", "distance"], &rows)
    }
}

fn step_from(
    inst: &AviInstance,
    at: &[f64],
    base: &[f64],
    tau: f64,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let f = inst.operator(at);
    let target: Vec<f64> = base.iter().zip(&f).map(|(x, g)| x - tau * g).collect();
    project(&inst.c_set, &target, ConstraintSelection::default(), tol)
}

/// Runs until the residual drops to `stop_residual`, the iteration budget is
/// spent, or `‖x‖` exceeds 1e9. The trace is returned in every case.
pub fn solve(inst: &AviInstance, cfg: &SolverConfig, tol: &Tolerances) -> Result<SolveTrace> {
    cfg.validate(inst.n(), tol)?;
    let mut x = cfg.x0.clone();
    let mut meta = Vec::new();
    let mut iterates = Vec::new();
    let mut outcome = SolveOutcome::MaxItersExceeded;
    for k in 0..=cfg.max_iters {
        let r = residual(inst, &x, tol)?.norm;
        meta.push(IterateMeta {
            iter: k,
            residual: r,
            distance: None,
        });
        iterates.push(x.clone());
        if r <= cfg.stop_residual {
            outcome = SolveOutcome::Converged;
            break;
        }
        if k == cfg.max_iters {
            break;
        }
        x = match cfg.method {
            SolverMethod::ProjectedFixedPoint => step_from(inst, &x, &x, cfg.step, tol)?,
            SolverMethod::Extragradient => {
                let bar = step_from(inst, &x, &x, cfg.step, tol)?;
                step_from(inst, &bar, &x, cfg.step, tol)?
            }
        };
        if !(norm(&x) <= DIVERGENCE_NORM) {
            outcome = SolveOutcome::Diverged;
            break;
        }
    }
    Ok(SolveTrace {
        iterates_meta: meta,
        final_x: x,
        converged: outcome == SolveOutcome::Converged,
        outcome,
        iterates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailViolation {
    pub iter: usize,
    pub residual: f64,
    pub distance: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub c_emp: f64,
    pub epsilon: f64,
    pub factor: f64,
    /// First iterate with residual ≤ ε.
    pub tail_start: Option<usize>,
    pub tail_len: usize,
    pub max_tail_ratio: f64,
    pub violations: Vec<TailViolation>,
    pub pass: bool,
}

/// Fills `d(x_k, C*)` for every stored iterate and checks
/// `d(x_k, C*) ≤ factor · c_emp · ‖R(x_k)‖` from the first iterate with
/// residual ≤ ε onward.
pub fn annotate_distances(
    trace: &SolveTrace,
    solution_pieces: &[PolyhedralSet],
    c_emp: f64,
    epsilon: f64,
    factor: f64,
    tol: &Tolerances,
) -> Result<(SolveTrace, TailReport)> {
    if solution_pieces.is_empty() {
        return Err(Error::NoSolution);
    }
    let mut out = trace.clone();
    for (m, x) in out.iterates_meta.iter_mut().zip(&trace.iterates) {
        m.distance = Some(union_distance(solution_pieces, x, tol)?);
    }
    let tail_start = out.iterates_meta.iter().position(|m| m.residual <= epsilon);
    let mut violations = Vec::new();
    let mut max_ratio: f64 = 0.0;
    let mut tail_len = 0;
    if let Some(start) = tail_start {
        for m in &out.iterates_meta[start..] {
            tail_len += 1;
            let d = m.distance.unwrap_or(0.0);
            let ratio = if m.residual > 0.0 {
                d / m.residual
            } else if d > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            max_ratio = max_ratio.max(ratio);
            if d > factor * c_emp * m.residual {
                violations.push(TailViolation {
                    iter: m.iter,
                    residual: m.residual,
                    distance: d,
                    ratio,
                });
            }
        }
    }
    let report = TailReport {
        c_emp,
        epsilon,
        factor,
        tail_start,
        tail_len,
        max_tail_ratio: max_ratio,
        pass: violations.is_empty(),
        violations,
    };
    Ok((out, report))
}
