//! Dense LP, feasibility and projection kernels.

mod projection;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::polyhedra::PolyhedralSet;
use crate::settings::Tolerances;

pub use projection::{project, ConstraintSelection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `optimize ⟨objective, x⟩` subject to `ineq_lhs·x ≤ ineq_rhs`,
/// `eq_lhs·x = eq_rhs`, with `x` free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub ineq_lhs: Matrix,
    pub ineq_rhs: Vec<f64>,
    pub eq_lhs: Matrix,
    pub eq_rhs: Vec<f64>,
    pub sense: Sense,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        Self {
            objective,
            ineq_lhs: vec![],
            ineq_rhs: vec![],
            eq_lhs: vec![],
            eq_rhs: vec![],
            sense,
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    pub fn with_ineq(mut self, a: Vec<f64>, b: f64) -> Self {
        self.ineq_lhs.push(a);
        self.ineq_rhs.push(b);
        self
    }

    pub fn with_eq(mut self, a: Vec<f64>, b: f64) -> Self {
        self.eq_lhs.push(a);
        self.eq_rhs.push(b);
        self
    }

    /// The same constraints as `set`, with the given objective.
    pub fn over_set(sense: Sense, objective: Vec<f64>, set: &PolyhedralSet) -> Self {
        Self {
            objective,
            ineq_lhs: set.ineq.iter().map(|c| c.a.clone()).collect(),
            ineq_rhs: set.ineq.iter().map(|c| c.b).collect(),
            eq_lhs: set.eq.iter().map(|c| c.a.clone()).collect(),
            eq_rhs: set.eq.iter().map(|c| c.b).collect(),
            sense,
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.ineq_lhs.len() != self.ineq_rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.ineq_lhs.len(),
                got: self.ineq_rhs.len(),
            });
        }
        if self.eq_lhs.len() != self.eq_rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.eq_lhs.len(),
                got: self.eq_rhs.len(),
            });
        }
        for row in self.ineq_lhs.iter().chain(&self.eq_lhs) {
            crate::error::check_dim(n, row.len())?;
        }
        let finite = self
            .objective
            .iter()
            .chain(self.ineq_lhs.iter().flatten())
            .chain(self.eq_lhs.iter().flatten())
            .chain(&self.ineq_rhs)
            .chain(&self.eq_rhs)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite LP data".into()));
        }
        Ok(())
    }

    /// Dual residual `‖±c + Aᵀu + Eᵀw‖∞` of an optimal solve, `None` if the
    /// status carries no multipliers.
    pub fn dual_residual(&self, st: &SolveStatus) -> Option<f64> {
        simplex::dual_residual(self, st)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Outcome of an LP or feasibility solve.
///
/// Multipliers follow one convention for both senses: `dual ≥ 0` on the
/// inequality rows and `eq_dual` free, with `s·c + Aᵀu + Eᵀw = 0` where
/// `s = +1` when minimizing and `−1` when maximizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStatus {
    pub status: LpStatus,
    /// Optimal value; `±∞` for infeasible/unbounded in the sense of the problem.
    #[serde(with = "crate::report::extended")]
    pub value: f64,
    pub point: Option<Vec<f64>>,
    pub dual: Option<Vec<f64>>,
    pub eq_dual: Option<Vec<f64>>,
    #[serde(with = "crate::report::extended")]
    pub dual_value: f64,
}

impl SolveStatus {
    fn infeasible(sense: Sense) -> Self {
        let v = match sense {
            Sense::Minimize => f64::INFINITY,
            Sense::Maximize => f64::NEG_INFINITY,
        };
        Self {
            status: LpStatus::Infeasible,
            value: v,
            point: None,
            dual: None,
            eq_dual: None,
            dual_value: v,
        }
    }

    fn unbounded(sense: Sense) -> Self {
        let v = match sense {
            Sense::Minimize => f64::NEG_INFINITY,
            Sense::Maximize => f64::INFINITY,
        };
        Self {
            status: LpStatus::Unbounded,
            value: v,
            point: None,
            dual: None,
            eq_dual: None,
            dual_value: v,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(lp: &LinearProgram, tol: &Tolerances) -> Result<SolveStatus> {
    simplex::solve(lp, tol)
}

/// Feasibility of `{x : eq_lhs·x = eq_rhs, ineq_lhs·x ≤ ineq_rhs}`. An
/// `Optimal` status carries a witness point.
pub fn solve_feasibility(
    eq_lhs: &[Vec<f64>],
    eq_rhs: &[f64],
    ineq_lhs: &[Vec<f64>],
    ineq_rhs: &[f64],
    n: usize,
    tol: &Tolerances,
) -> Result<SolveStatus> {
    let lp = LinearProgram {
        objective: vec![0.0; n],
        ineq_lhs: ineq_lhs.to_vec(),
        ineq_rhs: ineq_rhs.to_vec(),
        eq_lhs: eq_lhs.to_vec(),
        eq_rhs: eq_rhs.to_vec(),
        sense: Sense::Minimize,
    };
    simplex::solve(&lp, tol)
}

/// Euclidean projection of `target` onto `feasible_set`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpProjectionProblem {
    pub target: Vec<f64>,
    pub feasible_set: PolyhedralSet,
}

pub fn solve_projection_qp(p: &QpProjectionProblem, tol: &Tolerances) -> Result<Vec<f64>> {
    project(
        &p.feasible_set,
        &p.target,
        ConstraintSelection::MostViolated,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn minimize_over_nonnegative_ray() {
        let lp = LinearProgram::minimize(vec![1.0]).with_ineq(vec![-1.0], 0.0);
        let st = solve_lp(&lp, &tol()).unwrap();
        assert_eq!(st.status, LpStatus::Optimal);
        assert!(st.value.abs() < 1e-12);
        assert!(st.point.unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn empty_system_is_infeasible() {
        let lp = LinearProgram::minimize(vec![1.0])
            .with_ineq(vec![1.0], -1.0)
            .with_ineq(vec![-1.0], 0.0);
        assert_eq!(solve_lp(&lp, &tol()).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn simplex_facet_optimum() {
        // oracle: the three vertices of the simplex, objective −x₁−x₂
        let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let best = verts
            .iter()
            .map(|v| -v[0] - v[1])
            .fold(f64::INFINITY, f64::min);
        let lp = LinearProgram::minimize(vec![-1.0, -1.0])
            .with_ineq(vec![1.0, 1.0], 1.0)
            .with_ineq(vec![-1.0, 0.0], 0.0)
            .with_ineq(vec![0.0, -1.0], 0.0);
        let st = solve_lp(&lp, &tol()).unwrap();
        assert!((st.value - best).abs() < 1e-9);
        let x = st.point.clone().unwrap();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-9 && x[0] >= -1e-9 && x[1] >= -1e-9);
        assert!((st.dual_value - st.value).abs() < 1e-9);
        assert!(lp.dual_residual(&st).unwrap() < 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        let lp = LinearProgram::maximize(vec![1.0]).with_ineq(vec![-1.0], 0.0);
        let st = solve_lp(&lp, &tol()).unwrap();
        assert_eq!(st.status, LpStatus::Unbounded);
        assert_eq!(st.value, f64::INFINITY);
    }

    #[test]
    fn maximize_dual_convention() {
        // max x₁ + 2x₂ s.t. x₁ + x₂ ≤ 4, x₂ ≤ 3, x ≥ 0 → (1, 3), value 7
        let lp = LinearProgram::maximize(vec![1.0, 2.0])
            .with_ineq(vec![1.0, 1.0], 4.0)
            .with_ineq(vec![0.0, 1.0], 3.0)
            .with_ineq(vec![-1.0, 0.0], 0.0)
            .with_ineq(vec![0.0, -1.0], 0.0);
        let st = solve_lp(&lp, &tol()).unwrap();
        assert!((st.value - 7.0).abs() < 1e-9);
        assert!((st.dual_value - 7.0).abs() < 1e-9);
        assert!(st.dual.as_ref().unwrap().iter().all(|&u| u >= 0.0));
        assert!(lp.dual_residual(&st).unwrap() < 1e-9);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let lp = LinearProgram::minimize(vec![1.0, 1.0])
            .with_eq(vec![1.0, -1.0], 0.0)
            .with_eq(vec![2.0, -2.0], 0.0)
            .with_ineq(vec![-1.0, 0.0], -1.0);
        let st = solve_lp(&lp, &tol()).unwrap();
        assert!((st.value - 2.0).abs() < 1e-9);
        assert!((st.dual_value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn feasibility_examples() {
        let t = tol();
        let st = solve_feasibility(&[vec![1.0]], &[1.0], &[vec![1.0]], &[2.0], 1, &t).unwrap();
        assert!(st.is_optimal());
        assert!((st.point.unwrap()[0] - 1.0).abs() < 1e-12);
        let st = solve_feasibility(&[vec![1.0]], &[1.0], &[vec![1.0]], &[0.0], 1, &t).unwrap();
        assert_eq!(st.status, LpStatus::Infeasible);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let lp = LinearProgram::minimize(vec![1.0, 0.0]).with_ineq(vec![1.0], 0.0);
        assert!(matches!(
            solve_lp(&lp, &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
