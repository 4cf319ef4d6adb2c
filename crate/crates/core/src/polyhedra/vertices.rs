//! Exhaustive basis enumeration of vertices and extreme rays.
//!
//! Equalities are eliminated first (`x = x₀ + N t`), then the lineality space
//! of the remaining inequalities is split off, leaving a pointed polyhedron in
//! which every vertex is the solution of a square subsystem and every extreme
//! ray spans the null space of a corank-one subsystem.

use serde::{Deserialize, Serialize};

use super::PolyhedralSet;
use crate::error::{Error, Result};
use crate::linalg::{
    dist, dot, least_norm_solve, mat_vec, norm, norm_inf, scale, solve_square, subspaces,
};
use crate::settings::Settings;

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSet {
    pub vertices: Vec<Vec<f64>>,
    pub is_bounded: bool,
    /// Unit directions generating the recession cone. A lineality direction
    /// `l` appears as the pair `l, −l`.
    pub recession_rays: Vec<Vec<f64>>,
}

/// Calls `f` with every `k`-subset of `0..m` in lexicographic order.
pub(crate) fn for_each_subset(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < m - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn push_unique(list: &mut Vec<Vec<f64>>, v: Vec<f64>, tol: f64) {
    if !list.iter().any(|w| dist(w, &v) <= tol) {
        list.push(v);
    }
}

pub fn enumerate_vertices(set: &PolyhedralSet, settings: &Settings) -> Result<VertexSet> {
    set.validate()?;
    let tol = &settings.tol;
    let n = set.n;
    let e_rows: Vec<Vec<f64>> = set.eq.iter().map(|c| c.a.clone()).collect();
    let d: Vec<f64> = set.eq.iter().map(|c| c.b).collect();

    let (x0, null_e) = if e_rows.is_empty() {
        (vec![0.0; n], crate::linalg::identity(n))
    } else {
        let sub = subspaces(&e_rows, n, RANK_TOL);
        let x0 = least_norm_solve(&e_rows, &d, n, RANK_TOL);
        let resid = crate::linalg::sub(&mat_vec(&e_rows, &x0), &d);
        if norm_inf(&resid) > 10.0 * tol.feas * (1.0 + norm_inf(&d)) {
            return Err(Error::EmptySet);
        }
        (x0, sub.null)
    };
    let k = null_e.len();
    if k > settings.caps.dim_cap {
        return Err(Error::CapExceeded {
            what: "affine dimension",
            value: k,
            cap: settings.caps.dim_cap,
        });
    }
    if set.ineq.len() > settings.caps.row_cap {
        return Err(Error::CapExceeded {
            what: "inequality rows",
            value: set.ineq.len(),
            cap: settings.caps.row_cap,
        });
    }

    // inequalities in t-coordinates
    let mut a_t: Vec<Vec<f64>> = Vec::new();
    let mut b_t: Vec<f64> = Vec::new();
    for c in &set.ineq {
        let row: Vec<f64> = null_e.iter().map(|nj| dot(&c.a, nj)).collect();
        let rhs = c.b - dot(&c.a, &x0);
        let scale_row = norm(&c.a).max(1.0);
        if norm(&row) <= RANK_TOL * scale_row {
            if rhs < -10.0 * tol.feas * (1.0 + c.b.abs()) {
                return Err(Error::EmptySet);
            }
            continue;
        }
        a_t.push(row);
        b_t.push(rhs);
    }

    let split = subspaces(&a_t, k, RANK_TOL);
    let kp = split.rank;
    // x-space images of the pointed coordinates and of the lineality basis
    let lift = |coef: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (cj, nj) in coef.iter().zip(&null_e) {
            crate::linalg::axpy(&mut x, *cj, nj);
        }
        x
    };
    let gens: Vec<Vec<f64>> = split.row.iter().map(|w| lift(w)).collect();
    let lines: Vec<Vec<f64>> = split.null.iter().map(|l| lift(l)).collect();
    let a_s: Vec<Vec<f64>> = a_t
        .iter()
        .map(|r| split.row.iter().map(|w| dot(r, w)).collect())
        .collect();
    let m = a_s.len();
    let feas_slack = |i: usize| 10.0 * tol.feas * (1.0 + b_t[i].abs());
    let to_x = |s: &[f64]| -> Vec<f64> {
        let mut x = x0.clone();
        for (sl, g) in s.iter().zip(&gens) {
            crate::linalg::axpy(&mut x, *sl, g);
        }
        x
    };

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    if kp == 0 {
        if (0..m).all(|i| b_t[i] >= -feas_slack(i)) {
            vertices.push(x0.clone());
        }
    } else {
        for_each_subset(m, kp, |sub| {
            let a: Vec<Vec<f64>> = sub.iter().map(|&i| a_s[i].clone()).collect();
            let b: Vec<f64> = sub.iter().map(|&i| b_t[i]).collect();
            if let Some(s) = solve_square(&a, &b, 1e-10) {
                if (0..m).all(|i| dot(&a_s[i], &s) - b_t[i] <= feas_slack(i)) {
                    push_unique(&mut vertices, to_x(&s), tol.cmp);
                }
            }
        });
    }
    if vertices.is_empty() {
        return Err(Error::EmptySet);
    }

    let mut rays: Vec<Vec<f64>> = Vec::new();
    if kp >= 1 {
        let ray_ok = |dir: &[f64]| {
            let s = norm(dir).max(1e-300);
            (0..m).all(|i| dot(&a_s[i], dir) <= 1e-9 * s)
        };
        for_each_subset(m, kp - 1, |sub| {
            let dir = if kp == 1 {
                Some(vec![1.0])
            } else {
                let a: Vec<Vec<f64>> = sub.iter().map(|&i| a_s[i].clone()).collect();
                let sp = subspaces(&a, kp, RANK_TOL);
                (sp.rank == kp - 1).then(|| sp.null[0].clone())
            };
            if let Some(dir) = dir {
                for sgn in [1.0, -1.0] {
                    let dd = scale(&dir, sgn);
                    if ray_ok(&dd) {
                        let mut x = vec![0.0; n];
                        for (sl, g) in dd.iter().zip(&gens) {
                            crate::linalg::axpy(&mut x, *sl, g);
                        }
                        let nx = norm(&x);
                        if nx > 0.0 {
                            push_unique(&mut rays, scale(&x, 1.0 / nx), 1e-6);
                        }
                    }
                }
            }
        });
    }
    for l in &lines {
        let nl = norm(l);
        push_unique(&mut rays, scale(l, 1.0 / nl), 1e-6);
        push_unique(&mut rays, scale(l, -1.0 / nl), 1e-6);
    }
    Ok(VertexSet {
        is_bounded: rays.is_empty(),
        vertices,
        recession_rays: rays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::PolyhedralSet;

    fn settings() -> Settings {
        Settings::default()
    }

    fn has(list: &[Vec<f64>], v: &[f64]) -> bool {
        list.iter().any(|w| dist(w, v) < 1e-9)
    }

    #[test]
    fn subsets_enumerated_lexicographically() {
        let mut all = vec![];
        for_each_subset(4, 2, |s| all.push(s.to_vec()));
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let mut count = 0;
        for_each_subset(3, 0, |s| {
            assert!(s.is_empty());
            count += 1
        });
        assert_eq!(count, 1);
        let mut count = 0;
        for_each_subset(3, 3, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn unit_square_has_four_vertices() {
        let vs = enumerate_vertices(&PolyhedralSet::boxed(&[0.0, 0.0], &[1.0, 1.0]), &settings())
            .unwrap();
        assert_eq!(vs.vertices.len(), 4);
        assert!(vs.is_bounded);
        for v in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            assert!(has(&vs.vertices, &v));
        }
    }

    #[test]
    fn half_line_has_vertex_and_ray() {
        let vs = enumerate_vertices(&PolyhedralSet::orthant(1), &settings()).unwrap();
        assert_eq!(vs.vertices, vec![vec![0.0]]);
        assert!(!vs.is_bounded);
        assert_eq!(vs.recession_rays.len(), 1);
        assert!((vs.recession_rays[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_vertices_match_brute_force() {
        let set = PolyhedralSet::orthant(2).with_ineq(vec![1.0, 1.0], 1.0);
        // oracle: intersect every pair of the three boundary lines by Cramer's rule
        let rows = [([-1.0, 0.0], 0.0), ([0.0, -1.0], 0.0), ([1.0, 1.0], 1.0)];
        let mut expected: Vec<Vec<f64>> = vec![];
        for i in 0..3 {
            for j in i + 1..3 {
                let (a, b) = (rows[i], rows[j]);
                let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
                let x = (a.1 * b.0[1] - a.0[1] * b.1) / det;
                let y = (a.0[0] * b.1 - a.1 * b.0[0]) / det;
                if rows.iter().all(|r| r.0[0] * x + r.0[1] * y <= r.1 + 1e-12) {
                    expected.push(vec![x, y]);
                }
            }
        }
        let vs = enumerate_vertices(&set, &settings()).unwrap();
        assert_eq!(vs.vertices.len(), expected.len());
        for v in &expected {
            assert!(has(&vs.vertices, v));
        }
    }

    #[test]
    fn equality_constrained_segment() {
        // {x ∈ ℝ³ : x₃ = 2, x₁ + x₂ = 1, x ≥ 0}
        let set = PolyhedralSet::orthant(3)
            .with_eq(vec![0.0, 0.0, 1.0], 2.0)
            .with_eq(vec![1.0, 1.0, 0.0], 1.0);
        let vs = enumerate_vertices(&set, &settings()).unwrap();
        assert_eq!(vs.vertices.len(), 2);
        assert!(has(&vs.vertices, &[1.0, 0.0, 2.0]));
        assert!(has(&vs.vertices, &[0.0, 1.0, 2.0]));
        assert!(vs.is_bounded);
    }

    #[test]
    fn lineality_reported_as_opposite_rays() {
        // a half-plane {x₁ ≥ 0} in ℝ²
        let set = PolyhedralSet::whole_space(2).with_ineq(vec![-1.0, 0.0], 0.0);
        let vs = enumerate_vertices(&set, &settings()).unwrap();
        assert_eq!(vs.vertices.len(), 1);
        assert_eq!(vs.recession_rays.len(), 3);
        assert!(has(&vs.recession_rays, &[1.0, 0.0]));
        assert!(has(&vs.recession_rays, &[0.0, 1.0]));
        assert!(has(&vs.recession_rays, &[0.0, -1.0]));
    }

    #[test]
    fn empty_and_capped_sets() {
        let empty = PolyhedralSet::whole_space(1)
            .with_ineq(vec![1.0], -1.0)
            .with_ineq(vec![-1.0], 0.0);
        assert_eq!(
            enumerate_vertices(&empty, &settings()),
            Err(Error::EmptySet)
        );
        let inconsistent = PolyhedralSet::whole_space(2)
            .with_eq(vec![1.0, 0.0], 0.0)
            .with_eq(vec![1.0, 0.0], 1.0);
        assert_eq!(
            enumerate_vertices(&inconsistent, &settings()),
            Err(Error::EmptySet)
        );
        let big = PolyhedralSet::orthant(11);
        assert!(matches!(
            enumerate_vertices(&big, &settings()),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn singleton_in_high_dimension_is_not_capped() {
        let p: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let vs = enumerate_vertices(&PolyhedralSet::point(&p), &settings()).unwrap();
        assert_eq!(vs.vertices.len(), 1);
        assert!(dist(&vs.vertices[0], &p) < 1e-9);
    }
}
