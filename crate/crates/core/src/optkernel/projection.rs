//! Euclidean projection onto `{x : Ex = d, Ax ≤ b}`.
//!
//! Dual active-set iteration (Goldfarb–Idnani with identity Hessian): start at
//! the unconstrained minimizer `u`, add equalities, then repeatedly add a
//! violated inequality, dropping active inequalities whose multiplier would
//! turn negative. Every iterate stays optimal for the constraints in its
//! active set, so feasibility is reached exactly at the projection.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, decompose_against, dot, norm};
use crate::polyhedra::PolyhedralSet;
use crate::settings::Tolerances;

/// Which violated inequality enters the active set next. Ties go to the
/// lowest index under both rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSelection {
    #[default]
    MostViolated,
    LowestIndex,
}

struct Active {
    normal: Vec<f64>,
    rhs: f64,
    mult: f64,
    /// `None` for equalities (free multiplier).
    ineq: Option<usize>,
}

pub fn project(
    set: &PolyhedralSet,
    u: &[f64],
    selection: ConstraintSelection,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    check_dim(set.n, u.len())?;
    let n = set.n;
    let mut z = u.to_vec();
    let mut active: Vec<Active> = Vec::new();
    let eps_dir = 1e-12;

    // equalities: Gram–Schmidt against the accepted normals; their
    // multipliers are free and never needed
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for c in &set.eq {
        let s = dot(&c.a, &z) - c.b;
        let scale = norm(&c.a).max(1.0);
        let mut dz = c.a.clone();
        for _ in 0..2 {
            for q in &basis {
                let h = dot(q, &dz);
                axpy(&mut dz, -h, q);
            }
        }
        let dz2 = dot(&dz, &dz);
        if dz2 <= eps_dir * eps_dir * scale * scale {
            // dependent on earlier equalities: consistent or contradictory
            if s.abs() <= tol.feas * scale * 10.0 {
                continue;
            }
            return Err(Error::EmptySet);
        }
        axpy(&mut z, -s / dz2, &dz);
        let dn = dz2.sqrt();
        basis.push(dz.iter().map(|v| v / dn).collect());
        active.push(Active {
            normal: c.a.clone(),
            rhs: c.b,
            mult: 0.0,
            ineq: None,
        });
    }

    let max_iters = 50 * (set.ineq.len() + set.eq.len() + n + 10);
    let mut iters = 0;
    loop {
        let in_active = |i: usize, act: &[Active]| act.iter().any(|a| a.ineq == Some(i));
        let mut pick: Option<(usize, f64)> = None;
        for (i, c) in set.ineq.iter().enumerate() {
            let na = norm(&c.a);
            if na == 0.0 {
                if c.b < -tol.feas {
                    return Err(Error::EmptySet);
                }
                continue;
            }
            let viol = (dot(&c.a, &z) - c.b) / na.max(1.0);
            if viol > tol.feas && !in_active(i, &active) {
                let better = match (selection, pick) {
                    (_, None) => true,
                    (ConstraintSelection::MostViolated, Some((_, v))) => viol > v,
                    (ConstraintSelection::LowestIndex, Some(_)) => false,
                };
                if better {
                    pick = Some((i, viol));
                }
            }
        }
        let Some((p, _)) = pick else { break };
        let normal = set.ineq[p].a.clone();
        let rhs = set.ineq[p].b;
        let scale = norm(&normal).max(1.0);
        let mut mult_p = 0.0;
        loop {
            iters += 1;
            if iters > max_iters {
                return Err(Error::NumericalBreakdown(
                    "projection active-set iteration limit".into(),
                ));
            }
            let s = dot(&normal, &z) - rhs;
            let cols: Vec<&[f64]> = active.iter().map(|a| a.normal.as_slice()).collect();
            let (r, dz) = decompose_against(&cols, &normal);
            let dz2 = dot(&dz, &dz);
            let full = if dz2 > eps_dir * eps_dir * scale * scale {
                Some(s.max(0.0) / dz2)
            } else {
                None
            };
            let mut partial: Option<(usize, f64)> = None;
            for (k, (a, ri)) in active.iter().zip(&r).enumerate() {
                if a.ineq.is_some() && *ri > 1e-12 {
                    let t = a.mult.max(0.0) / ri;
                    let replace = match partial {
                        None => true,
                        Some((pk, pt)) => t < pt || (t == pt && a.ineq < active[pk].ineq),
                    };
                    if replace {
                        partial = Some((k, t));
                    }
                }
            }
            match (full, partial) {
                (None, None) => return Err(Error::EmptySet),
                (Some(t1), part) if part.is_none_or(|(_, t2)| t1 <= t2) => {
                    axpy(&mut z, -t1, &dz);
                    for (a, ri) in active.iter_mut().zip(&r) {
                        a.mult -= t1 * ri;
                    }
                    mult_p += t1;
                    active.push(Active {
                        normal,
                        rhs,
                        mult: mult_p,
                        ineq: Some(p),
                    });
                    break;
                }
                (_, Some((k, t2))) => {
                    axpy(&mut z, -t2, &dz);
                    for (a, ri) in active.iter_mut().zip(&r) {
                        a.mult -= t2 * ri;
                    }
                    mult_p += t2;
                    active.remove(k);
                }
                (Some(_), None) => unreachable!(),
            }
        }
    }

    // recompute z on the final active set: z = u − N μ with Nᵀz = b_A
    if !active.is_empty() {
        if let Some(polished) = polish(u, &active) {
            if set.contains(&polished, tol.feas * 10.0).unwrap_or(false) {
                z = polished;
            }
        }
    }
    Ok(z)
}

fn polish(u: &[f64], active: &[Active]) -> Option<Vec<f64>> {
    let k = active.len();
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| dot(&active[i].normal, &active[j].normal))
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = active.iter().map(|a| dot(&a.normal, u) - a.rhs).collect();
    let mu = crate::linalg::solve_square(&gram, &rhs, 1e-12)?;
    let mut z = u.to_vec();
    for (a, m) in active.iter().zip(&mu) {
        axpy(&mut z, -m, &a.normal);
    }
    Some(z)
}
