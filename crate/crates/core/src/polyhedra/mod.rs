//! Polyhedral convex sets `{x : Ex = d, ⟨aᵢ, x⟩ ≤ bᵢ}` and their geometry.

mod geometry;
mod vertices;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm, norm_inf, unit};
use crate::optkernel::{solve_feasibility, solve_lp, LinearProgram, LpStatus, Sense};
use crate::settings::Tolerances;

pub use geometry::{distance, hausdorff, nearest_in_union, union_distance, HausdorffDistance};
pub use vertices::{enumerate_vertices, VertexSet};

/// One row `⟨a, x⟩ ≤ b` (or `= b` in the equality list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub a: Vec<f64>,
    pub b: f64,
}

impl Constraint {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Self { a, b }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.a, x) - self.b
    }
}

/// A (generalized) polyhedral convex set in ℝⁿ. Equalities are kept apart
/// from inequalities so lower-dimensional sets stay well conditioned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralSet {
    pub n: usize,
    #[serde(default)]
    pub ineq: Vec<Constraint>,
    #[serde(default)]
    pub eq: Vec<Constraint>,
}

impl PolyhedralSet {
    pub fn new(n: usize, ineq: Vec<Constraint>, eq: Vec<Constraint>) -> Result<Self> {
        let s = Self { n, ineq, eq };
        s.validate()?;
        Ok(s)
    }

    pub fn whole_space(n: usize) -> Self {
        Self {
            n,
            ineq: vec![],
            eq: vec![],
        }
    }

    /// The nonnegative orthant `ℝⁿ₊`, written as `−xᵢ ≤ 0`.
    pub fn orthant(n: usize) -> Self {
        Self {
            n,
            ineq: (0..n)
                .map(|i| Constraint::new(unit(n, i).iter().map(|v| -v).collect(), 0.0))
                .collect(),
            eq: vec![],
        }
    }

    /// The box `lo ≤ x ≤ hi`.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Self {
        let n = lo.len();
        let mut ineq = Vec::with_capacity(2 * n);
        for i in 0..n {
            ineq.push(Constraint::new(unit(n, i), hi[i]));
            ineq.push(Constraint::new(
                unit(n, i).iter().map(|v| -v).collect(),
                -lo[i],
            ));
        }
        Self {
            n,
            ineq,
            eq: vec![],
        }
    }

    /// The singleton `{p}`.
    pub fn point(p: &[f64]) -> Self {
        let n = p.len();
        Self {
            n,
            ineq: vec![],
            eq: (0..n).map(|i| Constraint::new(unit(n, i), p[i])).collect(),
        }
    }

    pub fn with_ineq(mut self, a: Vec<f64>, b: f64) -> Self {
        self.ineq.push(Constraint::new(a, b));
        self
    }

    pub fn with_eq(mut self, a: Vec<f64>, b: f64) -> Self {
        self.eq.push(Constraint::new(a, b));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput(
                "ambient dimension must be positive".into(),
            ));
        }
        for c in self.ineq.iter().chain(&self.eq) {
            check_dim(self.n, c.a.len())?;
            if !c.b.is_finite() || c.a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite constraint data".into()));
            }
        }
        Ok(())
    }

    /// Largest constraint violation at `x` (equalities in absolute value).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let vi = self.ineq.iter().map(|c| c.eval(x)).fold(0.0, f64::max);
        let ve = self.eq.iter().map(|c| c.eval(x).abs()).fold(0.0, f64::max);
        vi.max(ve)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.n, x.len())?;
        Ok(self.max_violation(x) <= tol)
    }

    /// `true` if `d` lies in the recession cone `{d : Ed = 0, Ad ≤ 0}`.
    pub fn recedes_along(&self, d: &[f64], tol: f64) -> bool {
        let s = norm(d).max(1.0);
        self.ineq.iter().all(|c| dot(&c.a, d) <= tol * s)
            && self.eq.iter().all(|c| dot(&c.a, d).abs() <= tol * s)
    }

    pub fn feasible_point(&self, tol: &Tolerances) -> Result<Option<Vec<f64>>> {
        let st = solve_feasibility(
            &self.eq.iter().map(|c| c.a.clone()).collect::<Vec<_>>(),
            &self.eq.iter().map(|c| c.b).collect::<Vec<_>>(),
            &self.ineq.iter().map(|c| c.a.clone()).collect::<Vec<_>>(),
            &self.ineq.iter().map(|c| c.b).collect::<Vec<_>>(),
            self.n,
            tol,
        )?;
        Ok(st.point)
    }

    pub fn is_empty(&self, tol: &Tolerances) -> Result<bool> {
        Ok(self.feasible_point(tol)?.is_none())
    }

    /// Section obtained by fixing the leading coordinates to `values`.
    pub fn fix_leading(&self, values: &[f64]) -> Result<PolyhedralSet> {
        let k = values.len();
        if k >= self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n - 1,
                got: k,
            });
        }
        let cut = |c: &Constraint| Constraint {
            a: c.a[k..].to_vec(),
            b: c.b - dot(&c.a[..k], values),
        };
        Ok(PolyhedralSet {
            n: self.n - k,
            ineq: self.ineq.iter().map(cut).collect(),
            eq: self.eq.iter().map(cut).collect(),
        })
    }

    /// Normalized description: unit normals, opposite inequality pairs merged
    /// into equalities, duplicate rows and trivially true zero rows dropped.
    pub fn canonicalize(&self, tol: f64) -> PolyhedralSet {
        let normalize = |c: &Constraint| -> Option<Constraint> {
            let na = norm(&c.a);
            if na <= tol {
                None
            } else {
                Some(Constraint::new(
                    c.a.iter().map(|v| v / na).collect(),
                    c.b / na,
                ))
            }
        };
        let mut eq: Vec<Constraint> = Vec::new();
        let mut bad: Vec<Constraint> = Vec::new();
        for c in &self.eq {
            match normalize(c) {
                Some(r) => {
                    let dup = eq.iter().any(|e| {
                        (norm_inf(&crate::linalg::sub(&e.a, &r.a)) <= tol
                            && (e.b - r.b).abs() <= tol)
                            || (norm_inf(&crate::linalg::add(&e.a, &r.a)) <= tol
                                && (e.b + r.b).abs() <= tol)
                    });
                    if !dup {
                        eq.push(r);
                    }
                }
                None if c.b.abs() > tol => bad.push(c.clone()),
                None => {}
            }
        }
        let mut ineq: Vec<Constraint> = Vec::new();
        for c in &self.ineq {
            let Some(r) = normalize(c) else {
                if c.b < -tol {
                    bad.push(c.clone());
                }
                continue;
            };
            if let Some(same) = ineq
                .iter_mut()
                .find(|e| norm_inf(&crate::linalg::sub(&e.a, &r.a)) <= tol)
            {
                same.b = same.b.min(r.b);
                continue;
            }
            ineq.push(r);
        }
        // opposite pairs with matching offsets become equalities
        let mut used = vec![false; ineq.len()];
        let mut kept = Vec::new();
        for i in 0..ineq.len() {
            if used[i] {
                continue;
            }
            let partner = (i + 1..ineq.len()).find(|&j| {
                !used[j]
                    && norm_inf(&crate::linalg::add(&ineq[i].a, &ineq[j].a)) <= tol
                    && (ineq[i].b + ineq[j].b).abs() <= tol
            });
            match partner {
                Some(j) => {
                    used[j] = true;
                    let row = ineq[i].clone();
                    let dup = eq.iter().any(|e| {
                        (norm_inf(&crate::linalg::sub(&e.a, &row.a)) <= tol
                            && (e.b - row.b).abs() <= tol)
                            || (norm_inf(&crate::linalg::add(&e.a, &row.a)) <= tol
                                && (e.b + row.b).abs() <= tol)
                    });
                    if !dup {
                        eq.push(row);
                    }
                }
                None => kept.push(ineq[i].clone()),
            }
        }
        let mut out_eq = eq;
        let mut out_ineq = kept;
        for c in bad {
            if self.eq.contains(&c) {
                out_eq.push(c);
            } else {
                out_ineq.push(c);
            }
        }
        PolyhedralSet {
            n: self.n,
            ineq: out_ineq,
            eq: out_eq,
        }
    }

    /// Drops inequalities implied by the remaining rows (one LP per row).
    pub fn remove_redundant(&self, tol: &Tolerances) -> Result<PolyhedralSet> {
        let mut keep: Vec<bool> = vec![true; self.ineq.len()];
        for i in 0..self.ineq.len() {
            let mut lp = LinearProgram::new(Sense::Maximize, self.ineq[i].a.clone());
            for (j, c) in self.ineq.iter().enumerate() {
                if j != i && keep[j] {
                    lp = lp.with_ineq(c.a.clone(), c.b);
                }
            }
            for c in &self.eq {
                lp = lp.with_eq(c.a.clone(), c.b);
            }
            let st = solve_lp(&lp, tol)?;
            let redundant = match st.status {
                LpStatus::Optimal => st.value <= self.ineq[i].b + tol.feas * 10.0,
                // the rest of the system is already empty; keep the row
                LpStatus::Infeasible => false,
                LpStatus::Unbounded => false,
            };
            if redundant {
                keep[i] = false;
            }
        }
        Ok(PolyhedralSet {
            n: self.n,
            ineq: self
                .ineq
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(c, _)| c.clone())
                .collect(),
            eq: self.eq.clone(),
        })
    }
}

/// Membership with tolerance `tol` on every row.
pub fn contains(set: &PolyhedralSet, x: &[f64], tol: f64) -> Result<bool> {
    set.contains(x, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> PolyhedralSet {
        PolyhedralSet::orthant(2).with_ineq(vec![1.0, 1.0], 1.0)
    }

    #[test]
    fn orthant_membership() {
        let s = PolyhedralSet::orthant(2);
        assert!(contains(&s, &[0.0, 0.0], 1e-9).unwrap());
        assert!(!contains(&s, &[-1.0, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn facet_point_is_member() {
        assert!(contains(&triangle(), &[0.5, 0.5], 1e-9).unwrap());
    }

    #[test]
    fn membership_dimension_checked() {
        assert!(matches!(
            contains(&triangle(), &[0.5], 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn canonicalize_merges_pairs() {
        let s = PolyhedralSet::whole_space(2)
            .with_ineq(vec![2.0, 0.0], 2.0)
            .with_ineq(vec![-1.0, 0.0], -1.0)
            .with_ineq(vec![0.0, 1.0], 3.0)
            .with_ineq(vec![0.0, 2.0], 4.0)
            .with_ineq(vec![0.0, 0.0], 1.0);
        let c = s.canonicalize(1e-9);
        assert_eq!(c.eq.len(), 1);
        assert_eq!(c.ineq.len(), 1);
        assert!((c.ineq[0].b - 2.0).abs() < 1e-12);
        assert!(c.contains(&[1.0, 2.0], 1e-9).unwrap());
        assert!(!c.contains(&[1.0, 2.5], 1e-9).unwrap());
    }

    #[test]
    fn canonicalize_keeps_contradictions() {
        let s = PolyhedralSet::whole_space(1).with_ineq(vec![0.0], -1.0);
        let c = s.canonicalize(1e-9);
        assert!(c.is_empty(&Tolerances::default()).unwrap());
    }

    #[test]
    fn redundant_rows_removed() {
        let s = triangle()
            .with_ineq(vec![1.0, 1.0], 5.0)
            .with_ineq(vec![1.0, 0.0], 2.0);
        let r = s.remove_redundant(&Tolerances::default()).unwrap();
        assert_eq!(r.ineq.len(), 3);
    }

    #[test]
    fn section_fixes_leading_coordinates() {
        let s = triangle();
        let sec = s.fix_leading(&[0.25]).unwrap();
        assert_eq!(sec.n, 1);
        assert!(sec.contains(&[0.75], 1e-12).unwrap());
        assert!(!sec.contains(&[0.8], 1e-9).unwrap());
    }

    #[test]
    fn json_shape() {
        let s = PolyhedralSet::orthant(1).with_eq(vec![1.0], 0.5);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["n"], 1);
        assert_eq!(v["ineq"][0]["a"][0], -1.0);
        assert_eq!(v["eq"][0]["b"], 0.5);
        let back: PolyhedralSet =
            serde_json::from_str(r#"{"n": 2, "ineq": [{"a": [1, 1], "b": 1}]}"#).unwrap();
        assert!(back.eq.is_empty());
    }
}
