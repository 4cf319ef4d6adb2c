//! Small dense helpers over row-major `Vec<Vec<f64>>` matrices.
//!
//! Heavier factorizations (SVD, QR) go through nalgebra.

use nalgebra::DMatrix;

pub type Matrix = Vec<Vec<f64>>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += alpha * x`
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, x)).collect()
}

/// `mᵀ y` for a matrix with `ncols` columns.
pub fn mat_t_vec(m: &[Vec<f64>], y: &[f64], ncols: usize) -> Vec<f64> {
    let mut out = vec![0.0; ncols];
    for (row, yi) in m.iter().zip(y) {
        axpy(&mut out, *yi, row);
    }
    out
}

pub fn transpose(m: &[Vec<f64>], ncols: usize) -> Matrix {
    (0..ncols)
        .map(|j| m.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

pub fn to_dmatrix(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Operator 2-norm estimate by power iteration on `mᵀm`.
pub fn op_norm_estimate(m: &[Vec<f64>], iters: usize) -> f64 {
    let n = m.len();
    if n == 0 {
        return 0.0;
    }
    let ncols = m[0].len();
    let mut v = vec![1.0 / (ncols as f64).sqrt(); ncols];
    let mut sigma = 0.0;
    for _ in 0..iters {
        let w = mat_t_vec(m, &mat_vec(m, &v), ncols);
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        sigma = nw.sqrt();
        v = scale(&w, 1.0 / nw);
    }
    // one extra application gives a tighter value than sqrt(‖MᵀMv‖)
    sigma.max(norm(&mat_vec(m, &v)))
}

/// Rank, orthonormal null-space basis and orthonormal row-space basis of a
/// `rows × n` matrix, from an SVD with relative threshold `rel_tol`.
pub struct Subspaces {
    pub rank: usize,
    pub null: Matrix,
    pub row: Matrix,
}

pub fn subspaces(rows: &[Vec<f64>], n: usize, rel_tol: f64) -> Subspaces {
    if n == 0 {
        return Subspaces {
            rank: 0,
            null: vec![],
            row: vec![],
        };
    }
    // pad to at least n rows so that Vᵀ is the full n×n factor
    let k = rows.len().max(n);
    let a = DMatrix::from_fn(k, n, |i, j| if i < rows.len() { rows[i][j] } else { 0.0 });
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thresh = rel_tol * smax.max(1.0);
    let mut null = Vec::new();
    let mut row = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        let v: Vec<f64> = vt.row(i).iter().cloned().collect();
        if *s > thresh {
            row.push(v);
        } else {
            null.push(v);
        }
    }
    Subspaces {
        rank: row.len(),
        null,
        row,
    }
}

/// Minimum-norm least-squares solution of `rows · x = rhs`.
pub fn least_norm_solve(rows: &[Vec<f64>], rhs: &[f64], n: usize, rel_tol: f64) -> Vec<f64> {
    if rows.is_empty() || n == 0 {
        return vec![0.0; n];
    }
    let a = to_dmatrix(rows, n);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thresh = rel_tol * smax.max(1.0);
    let b = nalgebra::DVector::from_column_slice(rhs);
    let x = svd.solve(&b, thresh).expect("both factors were computed");
    x.iter().cloned().collect()
}

/// Solves the square system `a x = b` (row-major `a`) by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot falls below
/// `rel_tol · max|a|`.
pub fn solve_square(a: &[Vec<f64>], b: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(*bi);
            r
        })
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() <= rel_tol * scale {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        for i in col + 1..n {
            let f = m[i][col] / p;
            if f != 0.0 {
                for j in col..=n {
                    m[i][j] -= f * m[col][j];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Some(x)
}

/// Writes `a` as `N r + d` where `N` has the given columns (assumed linearly
/// independent) and `d ⟂ range(N)`. Returns `(r, d)`.
pub fn decompose_against(columns: &[&[f64]], a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let k = columns.len();
    if k == 0 {
        return (vec![], a.to_vec());
    }
    let nm = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
    let qr = nm.qr();
    let q = qr.q();
    let r = qr.r();
    let av = nalgebra::DVector::from_column_slice(a);
    let qta = q.transpose() * &av;
    let kk = r.nrows().min(k);
    // back substitution on the leading kk×k block
    let mut coef = vec![0.0; k];
    for i in (0..kk).rev() {
        let mut s = qta[i];
        for j in i + 1..k {
            s -= r[(i, j)] * coef[j];
        }
        let d = r[(i, i)];
        coef[i] = if d.abs() > 1e-300 { s / d } else { 0.0 };
    }
    let mut resid = a.to_vec();
    for (j, c) in coef.iter().enumerate() {
        axpy(&mut resid, -c, columns[j]);
    }
    (coef, resid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subspaces_of_rank_one_matrix() {
        let s = subspaces(&[vec![1.0, 1.0, 0.0]], 3, 1e-10);
        assert_eq!(s.rank, 1);
        assert_eq!(s.null.len(), 2);
        for v in &s.null {
            assert!(dot(v, &[1.0, 1.0, 0.0]).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_square_detects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_square(&a, &[1.0, 2.0], 1e-12).is_none());
        let a = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        let x = solve_square(&a, &[3.0, 4.0], 1e-12).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn decompose_splits_into_range_and_complement() {
        let c1 = [1.0, 0.0, 0.0];
        let c2 = [1.0, 1.0, 0.0];
        let (r, d) = decompose_against(&[&c1, &c2], &[2.0, 3.0, 5.0]);
        assert!((r[0] + 1.0).abs() < 1e-12 && (r[1] - 3.0).abs() < 1e-12);
        assert!(dist(&d, &[0.0, 0.0, 5.0]) < 1e-12);
    }

    #[test]
    fn op_norm_of_diagonal() {
        let m = vec![vec![3.0, 0.0], vec![0.0, -5.0]];
        assert!((op_norm_estimate(&m, 50) - 5.0).abs() < 1e-9);
    }
}
