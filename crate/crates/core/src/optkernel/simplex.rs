//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Free variables are split as `x = x⁺ − x⁻`, inequality rows get slacks and
//! rows without an obvious starting basic variable get artificials. After the
//! tableau terminates the optimal basis is re-solved from the original data to
//! recover an accurate primal point and the dual multipliers.

use super::{LinearProgram, LpStatus, Sense, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{dot, mat_t_vec, norm_inf, solve_square};
use crate::settings::Tolerances;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

struct Tableau {
    /// rows × (cols + 1); the last column is the right-hand side.
    t: Vec<Vec<f64>>,
    /// Reduced costs (cols + 1); the last entry is minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let mut obj = costs.to_vec();
        obj.push(0.0);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = obj[b];
            if cb != 0.0 {
                for (v, tv) in obj.iter_mut().zip(&self.t[r]) {
                    *v -= cb * tv;
                }
            }
        }
        self.obj = obj;
    }

    fn run(&mut self, allowed: &dyn Fn(usize) -> bool, pivots: &mut usize) -> Result<Phase> {
        let rhs = self.cols;
        loop {
            // Bland: lowest-index improving column
            let Some(c) = (0..self.cols).find(|&j| allowed(j) && self.obj[j] < -COST_TOL) else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.t.len() {
                let a = self.t[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.t[r][rhs].max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if (tie && self.basis[r] < self.basis[lr]) || (!tie && ratio < lratio) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Phase::Unbounded);
            };
            self.pivot(r, c);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::NumericalBreakdown(format!(
                    "simplex exceeded {MAX_PIVOTS} pivots"
                )));
            }
        }
    }
}

pub(super) fn solve(lp: &LinearProgram, tol: &Tolerances) -> Result<SolveStatus> {
    lp.validate()?;
    let n = lp.objective.len();
    let mi = lp.ineq_rhs.len();
    let me = lp.eq_rhs.len();
    let rows = mi + me;
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let cost: Vec<f64> = lp.objective.iter().map(|c| sign * c).collect();

    // standard-form rows [x⁺ | x⁻ | slack] with nonnegative right-hand sides
    let n_struct = 2 * n + mi;
    let mut a_std: Vec<Vec<f64>> = Vec::with_capacity(rows);
    let mut b_std: Vec<f64> = Vec::with_capacity(rows);
    let mut row_sign: Vec<f64> = Vec::with_capacity(rows);
    for i in 0..rows {
        let (a, b) = if i < mi {
            (&lp.ineq_lhs[i], lp.ineq_rhs[i])
        } else {
            (&lp.eq_lhs[i - mi], lp.eq_rhs[i - mi])
        };
        let s = if b < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; n_struct];
        for j in 0..n {
            row[j] = s * a[j];
            row[n + j] = -s * a[j];
        }
        if i < mi {
            row[2 * n + i] = s;
        }
        a_std.push(row);
        b_std.push(s * b);
        row_sign.push(s);
    }

    // artificials for rows whose slack cannot start basic
    let mut art_rows = Vec::new();
    for i in 0..rows {
        if !(i < mi && row_sign[i] > 0.0) {
            art_rows.push(i);
        }
    }
    let cols = n_struct + art_rows.len();
    let mut tab = Tableau {
        t: Vec::with_capacity(rows),
        obj: vec![],
        basis: vec![0; rows],
        cols,
    };
    for i in 0..rows {
        let mut row = a_std[i].clone();
        row.resize(cols, 0.0);
        row.push(b_std[i]);
        tab.t.push(row);
    }
    for (k, &i) in art_rows.iter().enumerate() {
        tab.t[i][n_struct + k] = 1.0;
        tab.basis[i] = n_struct + k;
    }
    for i in 0..mi {
        if row_sign[i] > 0.0 {
            tab.basis[i] = 2 * n + i;
        }
    }

    let mut pivots = 0;
    let bmax = norm_inf(&b_std);
    let mut active_rows: Vec<usize> = (0..rows).collect();
    if !art_rows.is_empty() {
        let mut c1 = vec![0.0; cols];
        for c in c1.iter_mut().skip(n_struct) {
            *c = 1.0;
        }
        tab.set_costs(&c1);
        tab.run(&|_| true, &mut pivots)?;
        let infeas = -tab.obj[cols];
        if infeas > 10.0 * tol.feas * (1.0 + bmax) {
            return Ok(SolveStatus::infeasible(lp.sense));
        }
        // drive remaining artificials out of the basis; drop redundant rows
        let mut r = 0;
        while r < tab.t.len() {
            if tab.basis[r] >= n_struct {
                let col = (0..n_struct)
                    .filter(|&j| tab.t[r][j].abs() > PIVOT_TOL)
                    .max_by(|&a, &b| tab.t[r][a].abs().total_cmp(&tab.t[r][b].abs()));
                match col {
                    Some(j) => {
                        tab.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        tab.t.remove(r);
                        tab.basis.remove(r);
                        active_rows.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let mut c2 = vec![0.0; cols];
    for j in 0..n {
        c2[j] = cost[j];
        c2[n + j] = -cost[j];
    }
    tab.set_costs(&c2);
    match tab.run(&|j| j < n_struct, &mut pivots)? {
        Phase::Unbounded => return Ok(SolveStatus::unbounded(lp.sense)),
        Phase::Optimal => {}
    }

    // re-solve the optimal basis from the original data
    let k = active_rows.len();
    let bmat: Vec<Vec<f64>> = (0..k)
        .map(|r| {
            tab.basis
                .iter()
                .map(|&col| a_std[active_rows[r]][col])
                .collect()
        })
        .collect();
    let brhs: Vec<f64> = active_rows.iter().map(|&r| b_std[r]).collect();
    let mut xs = vec![0.0; n_struct];
    let mut y_std = vec![0.0; rows];
    if k > 0 {
        let xb = solve_square(&bmat, &brhs, 1e-13)
            .ok_or_else(|| Error::NumericalBreakdown("singular optimal basis".to_string()))?;
        for (r, &col) in tab.basis.iter().enumerate() {
            xs[col] = xb[r];
        }
        let bt: Vec<Vec<f64>> = (0..k)
            .map(|j| bmat.iter().map(|row| row[j]).collect())
            .collect();
        let cb: Vec<f64> = tab.basis.iter().map(|&col| c2[col]).collect();
        let y = solve_square(&bt, &cb, 1e-13)
            .ok_or_else(|| Error::NumericalBreakdown("singular optimal basis".to_string()))?;
        for (r, &row) in active_rows.iter().enumerate() {
            y_std[row] = y[r];
        }
    }
    let x: Vec<f64> = (0..n).map(|j| xs[j] - xs[n + j]).collect();
    // unflip rows: u = −y′ for inequalities, w = −y′ for equalities
    let u: Vec<f64> = (0..mi)
        .map(|i| (-row_sign[i] * y_std[i]).max(0.0))
        .collect();
    let w: Vec<f64> = (0..me).map(|j| -row_sign[mi + j] * y_std[mi + j]).collect();
    let value = dot(&lp.objective, &x);
    let dual_value = sign * (-dot(&lp.ineq_rhs, &u) - dot(&lp.eq_rhs, &w));
    Ok(SolveStatus {
        status: LpStatus::Optimal,
        value,
        point: Some(x),
        dual: Some(u),
        eq_dual: Some(w),
        dual_value,
    })
}

/// Dual residual `‖sign·c + Aᵀu + Eᵀw‖∞` of an optimal solve.
pub(super) fn dual_residual(lp: &LinearProgram, st: &SolveStatus) -> Option<f64> {
    let (u, w) = (st.dual.as_ref()?, st.eq_dual.as_ref()?);
    let n = lp.objective.len();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let au = mat_t_vec(&lp.ineq_lhs, u, n);
    let ew = mat_t_vec(&lp.eq_lhs, w, n);
    Some(
        (0..n)
            .map(|j| (sign * lp.objective[j] + au[j] + ew[j]).abs())
            .fold(0.0, f64::max),
    )
}
