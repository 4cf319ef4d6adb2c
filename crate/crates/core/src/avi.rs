//! Affine variational inequalities `⟨Mx̄ + q, x − x̄⟩ ≥ 0 ∀x ∈ C`, the natural
//! residual, and the active-set decomposition of `R⁻¹(y)`.
//!
//! For an active set `I₀` the KKT system of `y = R(x)` reads
//!
//! ```text
//! y − Mx − Σ λᵢ x*ᵢ = q
//! ⟨x*ᵢ, x − y⟩ = αᵢ, λᵢ ≥ 0   (i ∈ I₀)
//! ⟨x*ᵢ, x − y⟩ ≤ αᵢ, λᵢ = 0   (i ∉ I₀)
//! ```
//!
//! Eliminating `λ` amounts to `y − q − Mx ∈ cone{x*ᵢ : i ∈ I₀}`, which is
//! written with the generators `r` of the polar cone as `⟨r, y − q − Mx⟩ ≤ 0`.
//! The generators depend only on `I₀` and are cached.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, mat_t_vec, mat_vec, norm, sub, Matrix};
use crate::optkernel::{project, solve_lp, ConstraintSelection, LinearProgram, LpStatus};
use crate::polyhedra::{enumerate_vertices, Constraint, PolyhedralSet};
use crate::settings::{Settings, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AviRaw")]
pub struct AviInstance {
    #[serde(rename = "M")]
    pub m_op: Matrix,
    pub q: Vec<f64>,
    #[serde(rename = "C")]
    pub c_set: PolyhedralSet,
}

#[derive(Deserialize)]
struct AviRaw {
    #[serde(rename = "M")]
    m_op: Matrix,
    q: Vec<f64>,
    #[serde(rename = "C")]
    c_set: PolyhedralSet,
}

impl TryFrom<AviRaw> for AviInstance {
    type Error = Error;

    fn try_from(raw: AviRaw) -> Result<Self> {
        AviInstance::new(raw.m_op, raw.q, raw.c_set)
    }
}

impl AviInstance {
    /// Checks dimensions, that `C` is given by inequalities only, and that it
    /// is nonempty.
    pub fn new(m_op: Matrix, q: Vec<f64>, c_set: PolyhedralSet) -> Result<Self> {
        let n = q.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty instance".into()));
        }
        check_dim(n, m_op.len())?;
        for row in &m_op {
            check_dim(n, row.len())?;
        }
        check_dim(n, c_set.n)?;
        c_set.validate()?;
        if !c_set.eq.is_empty() {
            return Err(Error::InvalidInput(
                "C must be written with inequality rows only".into(),
            ));
        }
        if m_op.iter().flatten().chain(&q).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite instance data".into()));
        }
        if c_set.is_empty(&Tolerances::default())? {
            return Err(Error::EmptySet);
        }
        Ok(Self { m_op, q, c_set })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// Number of constraints of C.
    pub fn m(&self) -> usize {
        self.c_set.ineq.len()
    }

    /// `Mx + q`
    pub fn operator(&self, x: &[f64]) -> Vec<f64> {
        let mut v = mat_vec(&self.m_op, x);
        for (a, b) in v.iter_mut().zip(&self.q) {
            *a += b;
        }
        v
    }

    /// Diagonal entries when `M` is diagonal.
    fn diagonal(&self) -> Option<Vec<f64>> {
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.m_op[i][j] != 0.0 {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| self.m_op[i][i]).collect())
    }

    /// True when C is exactly `{−xᵢ ≤ 0}` in coordinate order.
    fn is_orthant(&self) -> bool {
        let n = self.n();
        self.m() == n
            && self.c_set.ineq.iter().enumerate().all(|(i, c)| {
                c.b == 0.0
                    && c.a
                        .iter()
                        .enumerate()
                        .all(|(j, &v)| v == if i == j { -1.0 } else { 0.0 })
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualValue {
    pub r: Vec<f64>,
    pub projected_point: Vec<f64>,
    pub norm: f64,
}

pub fn residual(inst: &AviInstance, x: &[f64], tol: &Tolerances) -> Result<ResidualValue> {
    check_dim(inst.n(), x.len())?;
    let target = sub(x, &inst.operator(x));
    let projected_point = project(&inst.c_set, &target, ConstraintSelection::default(), tol)?;
    let r = sub(x, &projected_point);
    Ok(ResidualValue {
        norm: norm(&r),
        r,
        projected_point,
    })
}

/// Approximate solution test: `x ∈ C` within `slack` and
/// `⟨Mx + q, z − x⟩ ≥ −slack` for every `z ∈ C` with `‖z − x‖∞ ≤ 1`.
/// Convexity makes the local test equivalent to the global one at zero slack,
/// while keeping the LP bounded near solutions of unbounded problems.
pub fn is_solution_within(
    inst: &AviInstance,
    x: &[f64],
    slack: f64,
    tol: &Tolerances,
) -> Result<bool> {
    check_dim(inst.n(), x.len())?;
    if inst.c_set.max_violation(x) > slack.max(tol.feas) {
        return Ok(false);
    }
    let f = inst.operator(x);
    let mut lp = LinearProgram::over_set(crate::optkernel::Sense::Minimize, f.clone(), &inst.c_set);
    for (i, &xi) in x.iter().enumerate() {
        let e = crate::linalg::unit(inst.n(), i);
        lp = lp
            .with_ineq(e.clone(), xi + 1.0)
            .with_ineq(e.iter().map(|v| -v).collect(), 1.0 - xi);
    }
    let st = solve_lp(&lp, tol)?;
    Ok(st.status == LpStatus::Optimal && st.value >= dot(&f, x) - slack)
}

/// `x ∈ C` and `min_{z ∈ C} ⟨Mx + q, z⟩ ≥ ⟨Mx + q, x⟩ − tol.cmp`; a problem
/// unbounded below rejects `x`.
pub fn is_solution(inst: &AviInstance, x: &[f64], tol: &Tolerances) -> Result<bool> {
    check_dim(inst.n(), x.len())?;
    if inst.c_set.max_violation(x) > tol.feas {
        return Ok(false);
    }
    let f = inst.operator(x);
    let lp = LinearProgram::over_set(crate::optkernel::Sense::Minimize, f.clone(), &inst.c_set);
    let st = solve_lp(&lp, tol)?;
    Ok(st.status == LpStatus::Optimal && st.value >= dot(&f, x) - tol.cmp)
}

/// The KKT system of one active set, in `(y, x, λ)` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktPiece {
    /// Zero-based indices of the active constraints, increasing.
    pub active: Vec<usize>,
    pub polyhedron_yxl: PolyhedralSet,
}

fn mask_to_active(mask: u64, m: usize) -> Vec<usize> {
    (0..m).filter(|i| mask >> i & 1 == 1).collect()
}

fn active_to_mask(active: &[usize], m: usize) -> Result<u64> {
    let mut mask = 0u64;
    for &i in active {
        if i >= m {
            return Err(Error::InvalidInput(format!(
                "active index {i} out of range"
            )));
        }
        mask |= 1 << i;
    }
    Ok(mask)
}

fn check_active_cap(inst: &AviInstance, settings: &Settings) -> Result<()> {
    let cap = settings.caps.active_set_cap;
    if inst.m() > cap || inst.m() >= 63 {
        return Err(Error::CapExceeded {
            what: "constraints of C",
            value: inst.m(),
            cap,
        });
    }
    Ok(())
}

/// `n` equality rows followed by `3m` inequality rows, three per constraint.
pub fn build_kkt_piece(inst: &AviInstance, active: &[usize]) -> Result<KktPiece> {
    let (n, m) = (inst.n(), inst.m());
    let mask = active_to_mask(active, m)?;
    let dim = 2 * n + m;
    let mut eq = Vec::with_capacity(n);
    for k in 0..n {
        let mut a = vec![0.0; dim];
        a[k] = 1.0;
        for j in 0..n {
            a[n + j] = -inst.m_op[k][j];
        }
        for (i, c) in inst.c_set.ineq.iter().enumerate() {
            a[2 * n + i] = -c.a[k];
        }
        eq.push(Constraint::new(a, inst.q[k]));
    }
    let mut ineq = Vec::with_capacity(3 * m);
    for (i, c) in inst.c_set.ineq.iter().enumerate() {
        let mut row = vec![0.0; dim];
        for j in 0..n {
            row[j] = -c.a[j];
            row[n + j] = c.a[j];
        }
        let mut lam = vec![0.0; dim];
        lam[2 * n + i] = 1.0;
        let neg_lam: Vec<f64> = lam.iter().map(|v| -v).collect();
        if mask >> i & 1 == 1 {
            let neg: Vec<f64> = row.iter().map(|v| -v).collect();
            ineq.push(Constraint::new(row, c.b));
            ineq.push(Constraint::new(neg, -c.b));
        } else {
            ineq.push(Constraint::new(row, c.b));
            ineq.push(Constraint::new(lam, 0.0));
        }
        ineq.push(Constraint::new(neg_lam, 0.0));
    }
    Ok(KktPiece {
        active: mask_to_active(mask, m),
        polyhedron_yxl: PolyhedralSet { n: dim, ineq, eq },
    })
}

/// One polyhedral piece of `R⁻¹(y)` in x-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPiece {
    pub active: Vec<usize>,
    pub set: PolyhedralSet,
}

/// Per-active-set data that does not depend on `y`: the rows `−Mᵀr` and `r`
/// for the generators `r` of the polar cone of `cone{x*ᵢ : i ∈ I₀}`.
pub struct KktDecomposition<'a> {
    inst: &'a AviInstance,
    settings: Settings,
    polar: Vec<OnceLock<Result<Vec<Vec<f64>>>>>,
}

impl<'a> KktDecomposition<'a> {
    pub fn new(inst: &'a AviInstance, settings: &Settings) -> Result<Self> {
        check_active_cap(inst, settings)?;
        let count = 1usize << inst.m();
        Ok(Self {
            inst,
            settings: *settings,
            polar: (0..count).map(|_| OnceLock::new()).collect(),
        })
    }

    fn polar_generators(&self, mask: u64) -> Result<Vec<Vec<f64>>> {
        self.polar[mask as usize]
            .get_or_init(|| {
                let n = self.inst.n();
                let ineq = mask_to_active(mask, self.inst.m())
                    .into_iter()
                    .map(|i| Constraint::new(self.inst.c_set.ineq[i].a.clone(), 0.0))
                    .collect();
                let cone = PolyhedralSet {
                    n,
                    ineq,
                    eq: vec![],
                };
                let mut s = self.settings;
                s.caps.dim_cap = s.caps.dim_cap.max(n);
                Ok(enumerate_vertices(&cone, &s)?.recession_rays)
            })
            .clone()
    }

    /// The `(x, λ)` section of the KKT piece at `y`, restricted to the
    /// multipliers of `I₀`.
    fn section_nonempty(&self, mask: u64, y: &[f64]) -> Result<bool> {
        let piece = build_kkt_piece(self.inst, &mask_to_active(mask, self.inst.m()))?;
        let section = piece.polyhedron_yxl.fix_leading(y)?;
        Ok(!section.is_empty(&self.settings.tol)?)
    }

    /// The x-space piece for `I₀` at `y`, or `None` when its section is
    /// empty.
    pub fn piece(&self, mask: u64, y: &[f64]) -> Result<Option<ResidualPiece>> {
        if !self.section_nonempty(mask, y)? {
            return Ok(None);
        }
        let inst = self.inst;
        let n = inst.n();
        let mut eq = Vec::new();
        let mut ineq = Vec::new();
        for (i, c) in inst.c_set.ineq.iter().enumerate() {
            let row = Constraint::new(c.a.clone(), c.b + dot(&c.a, y));
            if mask >> i & 1 == 1 {
                eq.push(row);
            } else {
                ineq.push(row);
            }
        }
        // ⟨r, y − q − Mx⟩ ≤ 0  ⟺  ⟨−Mᵀr, x⟩ ≤ ⟨r, q − y⟩
        let q_minus_y = sub(&inst.q, y);
        for r in self.polar_generators(mask)? {
            let a: Vec<f64> = mat_t_vec(&inst.m_op, &r, n).iter().map(|v| -v).collect();
            ineq.push(Constraint::new(a, dot(&r, &q_minus_y)));
        }
        let set = PolyhedralSet { n, ineq, eq }.canonicalize(self.settings.tol.feas);
        Ok(Some(ResidualPiece {
            active: mask_to_active(mask, inst.m()),
            set,
        }))
    }

    /// All nonempty pieces at `y`, ordered by active-set mask.
    pub fn pieces(&self, y: &[f64]) -> Result<Vec<ResidualPiece>> {
        check_dim(self.inst.n(), y.len())?;
        let count = 1u64 << self.inst.m();
        let found: Vec<Option<ResidualPiece>> = (0..count)
            .into_par_iter()
            .map(|mask| self.piece(mask, y))
            .collect::<Result<_>>()?;
        Ok(found.into_iter().flatten().collect())
    }
}

/// `R⁻¹(y)` as a union of polyhedra, one per active set with a nonempty
/// KKT section. Overlapping pieces are kept.
pub fn inverse_residual(
    inst: &AviInstance,
    y: &[f64],
    settings: &Settings,
) -> Result<Vec<ResidualPiece>> {
    KktDecomposition::new(inst, settings)?.pieces(y)
}

/// Indices `i` with `⟨x*ᵢ, x − y⟩ = αᵢ` within `tol`.
pub fn active_set_at(inst: &AviInstance, x: &[f64], y: &[f64], tol: f64) -> Vec<usize> {
    let p = sub(x, y);
    inst.c_set
        .ineq
        .iter()
        .enumerate()
        .filter(|(_, c)| c.eval(&p).abs() <= tol)
        .map(|(i, _)| i)
        .collect()
}

/// Closed form for `C = ℝⁿ₊` with `M = diag(μ)`, `μ ≥ 0`: the problem splits
/// into one-dimensional complementarity problems and `C*` is a box.
fn separable_solution_set(inst: &AviInstance) -> Option<Vec<ResidualPiece>> {
    if !inst.is_orthant() {
        return None;
    }
    let mu = inst.diagonal()?;
    if mu.iter().any(|&v| v < 0.0) {
        return None;
    }
    let n = inst.n();
    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    let mut active = Vec::new();
    for i in 0..n {
        let e = crate::linalg::unit(n, i);
        let q = inst.q[i];
        if mu[i] > 0.0 {
            let v = (-q / mu[i]).max(0.0);
            if v == 0.0 {
                active.push(i);
            }
            eq.push(Constraint::new(e, v));
        } else if q > 0.0 {
            active.push(i);
            eq.push(Constraint::new(e, 0.0));
        } else if q == 0.0 {
            ineq.push(Constraint::new(e.iter().map(|v| -v).collect(), 0.0));
        } else {
            return Some(vec![]);
        }
    }
    Some(vec![ResidualPiece {
        active,
        set: PolyhedralSet { n, ineq, eq },
    }])
}

/// `C* = R⁻¹(0)`, with redundant rows removed from each piece.
pub fn enumerate_solution_set(
    inst: &AviInstance,
    settings: &Settings,
) -> Result<Vec<ResidualPiece>> {
    if let Some(p) = separable_solution_set(inst) {
        return Ok(p);
    }
    let pieces = inverse_residual(inst, &vec![0.0; inst.n()], settings)?;
    pieces
        .into_par_iter()
        .map(|p| {
            Ok(ResidualPiece {
                set: p.set.remove_redundant(&settings.tol)?,
                active: p.active,
            })
        })
        .collect()
}

/// Just the sets of a piece list.
pub fn piece_sets(pieces: &[ResidualPiece]) -> Vec<PolyhedralSet> {
    pieces.iter().map(|p| p.set.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;
    use crate::polyhedra::union_distance;

    fn lcp1d() -> AviInstance {
        AviInstance::new(vec![vec![1.0]], vec![-1.0], PolyhedralSet::orthant(1)).unwrap()
    }

    fn ray2d() -> AviInstance {
        AviInstance::new(
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, -1.0],
            PolyhedralSet::orthant(2),
        )
        .unwrap()
    }

    fn zero_interval() -> AviInstance {
        AviInstance::new(
            vec![vec![0.0]],
            vec![0.0],
            PolyhedralSet::boxed(&[0.0], &[1.0]),
        )
        .unwrap()
    }

    fn t() -> Tolerances {
        Tolerances::default()
    }

    fn s() -> Settings {
        Settings::default()
    }

    #[test]
    fn construction_checks() {
        assert!(matches!(
            AviInstance::new(vec![vec![1.0]], vec![0.0, 1.0], PolyhedralSet::orthant(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        let empty = PolyhedralSet::orthant(1).with_ineq(vec![1.0], -1.0);
        assert_eq!(
            AviInstance::new(vec![vec![1.0]], vec![0.0], empty),
            Err(Error::EmptySet)
        );
        let with_eq = PolyhedralSet::whole_space(1).with_eq(vec![1.0], 0.0);
        assert!(AviInstance::new(vec![vec![1.0]], vec![0.0], with_eq).is_err());
    }

    #[test]
    fn residual_examples() {
        let r = residual(&lcp1d(), &[3.0], &t()).unwrap();
        assert!((r.projected_point[0] - 1.0).abs() < 1e-12);
        assert!((r.r[0] - 2.0).abs() < 1e-12 && (r.norm - 2.0).abs() < 1e-12);
        // R(x) = x − 1 everywhere on this instance
        for x in [-2.0, 0.0, 0.5, 7.0] {
            assert!((residual(&lcp1d(), &[x], &t()).unwrap().r[0] - (x - 1.0)).abs() < 1e-12);
        }
        assert!(residual(&lcp1d(), &[1.0], &t()).unwrap().norm < 1e-12);
        let r = residual(&zero_interval(), &[2.5], &t()).unwrap();
        assert!((r.r[0] - 1.5).abs() < 1e-12);
        let r = residual(&ray2d(), &[2.0, 1.5], &t()).unwrap();
        assert!(dist(&r.r, &[0.0, 0.5]) < 1e-12);
    }

    #[test]
    fn solution_test_examples() {
        assert!(is_solution(&lcp1d(), &[1.0], &t()).unwrap());
        assert!(!is_solution(&lcp1d(), &[0.0], &t()).unwrap());
        assert!(is_solution(&ray2d(), &[5.0, 1.0], &t()).unwrap());
        assert!(!is_solution(&ray2d(), &[5.0, 1.1], &t()).unwrap());
        for x in [0.0, 0.3, 1.0] {
            assert!(is_solution(&zero_interval(), &[x], &t()).unwrap());
        }
        assert!(!is_solution(&zero_interval(), &[1.5], &t()).unwrap());
        // unbounded LP below: q pushes to −∞ along a ray of C
        let unb = AviInstance::new(vec![vec![0.0]], vec![-1.0], PolyhedralSet::orthant(1)).unwrap();
        assert!(!is_solution(&unb, &[4.0], &t()).unwrap());
    }

    #[test]
    fn kkt_piece_layout() {
        let p = build_kkt_piece(&lcp1d(), &[]).unwrap();
        assert_eq!(p.polyhedron_yxl.n, 3);
        assert_eq!(p.polyhedron_yxl.eq.len(), 1);
        assert_eq!(p.polyhedron_yxl.ineq.len(), 3);
        // y − x + λ = −1  (x*₁ = −1)
        assert_eq!(p.polyhedron_yxl.eq[0].a, vec![1.0, -1.0, 1.0]);
        assert_eq!(p.polyhedron_yxl.eq[0].b, -1.0);
        // −(x − y) ≤ 0, λ ≤ 0, −λ ≤ 0
        assert_eq!(p.polyhedron_yxl.ineq[0].a, vec![1.0, -1.0, 0.0]);
        assert_eq!(p.polyhedron_yxl.ineq[1].a, vec![0.0, 0.0, 1.0]);
        assert_eq!(p.polyhedron_yxl.ineq[2].a, vec![0.0, 0.0, -1.0]);
        let full = build_kkt_piece(&ray2d(), &[0, 1]).unwrap();
        assert_eq!(full.polyhedron_yxl.ineq.len(), 6);
        assert!(build_kkt_piece(&ray2d(), &[2]).is_err());
    }

    #[test]
    fn kkt_piece_matches_lcp_conditions() {
        // On C = ℝ²₊ at y = 0, a point (0, x, λ) of the piece is feasible iff
        // x ≥ 0, w = Mx + q = λ ≥ 0 and xᵢλᵢ = 0 per the active pattern.
        let inst = ray2d();
        for mask in 0u64..4 {
            let piece = build_kkt_piece(&inst, &mask_to_active(mask, 2)).unwrap();
            for &(x1, x2) in &[(0.0, 1.0), (3.0, 1.0), (0.0, 0.0), (1.0, 2.0)] {
                let x = [x1, x2];
                let w = inst.operator(&x);
                let mut ok = x.iter().all(|&v| v >= 0.0) && w.iter().all(|&v| v >= -1e-12);
                for i in 0..2 {
                    ok &= if mask >> i & 1 == 1 {
                        x[i] == 0.0
                    } else {
                        w[i].abs() < 1e-12
                    };
                }
                let point = [0.0, 0.0, x1, x2, w[0], w[1]];
                let inside = piece.polyhedron_yxl.contains(&point, 1e-9).unwrap();
                assert_eq!(inside, ok, "mask {mask} x {x:?}");
            }
        }
    }

    #[test]
    fn inverse_residual_examples() {
        let inst = lcp1d();
        for (y, x) in [(0.0, 1.0), (0.5, 1.5), (-3.0, -2.0)] {
            let pieces = inverse_residual(&inst, &[y], &s()).unwrap();
            assert!(!pieces.is_empty());
            for p in &pieces {
                let vs = enumerate_vertices(&p.set, &s()).unwrap();
                assert_eq!(vs.vertices.len(), 1);
                assert!((vs.vertices[0][0] - x).abs() < 1e-9);
            }
        }
        let z = inverse_residual(&zero_interval(), &[0.0], &s()).unwrap();
        assert!(union_distance(&piece_sets(&z), &[0.5], &t()).unwrap() < 1e-12);
        assert!(union_distance(&piece_sets(&z), &[1.5], &t()).unwrap() > 0.49);
        // C = ℝ₊, M = 0, q = 1: R(x) = min(x, 1), so y = 5 has no preimage
        let capped =
            AviInstance::new(vec![vec![0.0]], vec![1.0], PolyhedralSet::orthant(1)).unwrap();
        assert!(inverse_residual(&capped, &[5.0], &s()).unwrap().is_empty());
    }

    #[test]
    fn solution_sets() {
        let n = 3;
        let ident = AviInstance::new(
            crate::linalg::identity(n),
            vec![-1.0; n],
            PolyhedralSet::orthant(n),
        )
        .unwrap();
        let sol = enumerate_solution_set(&ident, &s()).unwrap();
        assert_eq!(sol.len(), 1);
        let vs = enumerate_vertices(&sol[0].set, &s()).unwrap();
        assert!(dist(&vs.vertices[0], &[1.0; 3]) < 1e-12);

        let ray = enumerate_solution_set(&ray2d(), &s()).unwrap();
        let sets = piece_sets(&ray);
        for x in [[0.0, 1.0], [7.0, 1.0]] {
            assert!(union_distance(&sets, &x, &t()).unwrap() < 1e-9);
        }
        assert!((union_distance(&sets, &[2.0, 1.5], &t()).unwrap() - 0.5).abs() < 1e-9);

        let zero = AviInstance::new(
            vec![vec![0.0; 2]; 2],
            vec![0.0; 2],
            PolyhedralSet::boxed(&[0.0, 0.0], &[1.0, 2.0]),
        )
        .unwrap();
        let sets = piece_sets(&enumerate_solution_set(&zero, &s()).unwrap());
        assert!(union_distance(&sets, &[1.0, 2.0], &t()).unwrap() < 1e-9);
        assert!((union_distance(&sets, &[1.0, 3.0], &t()).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn separable_path_agrees_with_general_path() {
        let inst = AviInstance::new(
            vec![
                vec![2.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.5],
            ],
            vec![-1.0, 0.0, 3.0],
            PolyhedralSet::orthant(3),
        )
        .unwrap();
        let fast = piece_sets(&separable_solution_set(&inst).unwrap());
        let general = piece_sets(&inverse_residual(&inst, &[0.0; 3], &s()).unwrap());
        for x in [
            [0.5, 0.0, 0.0],
            [0.5, 4.0, 0.0],
            [1.0, 1.0, 1.0],
            [0.5, -1.0, 0.0],
        ] {
            let a = union_distance(&fast, &x, &t()).unwrap();
            let b = union_distance(&general, &x, &t()).unwrap();
            assert!((a - b).abs() < 1e-9, "{x:?}: {a} vs {b}");
        }
        let none =
            AviInstance::new(vec![vec![0.0]], vec![-1.0], PolyhedralSet::orthant(1)).unwrap();
        assert!(enumerate_solution_set(&none, &s()).unwrap().is_empty());
    }

    #[test]
    fn active_set_cap() {
        let mut settings = s();
        settings.caps.active_set_cap = 1;
        assert!(matches!(
            inverse_residual(&ray2d(), &[0.0, 0.0], &settings),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn json_names() {
        let v = serde_json::to_value(lcp1d()).unwrap();
        assert!(v.get("M").is_some() && v.get("C").is_some());
        let back: AviInstance = serde_json::from_value(v).unwrap();
        assert_eq!(back, lcp1d());
        let bad = r#"{"M": [[1.0]], "q": [1.0, 2.0], "C": {"n": 2}}"#;
        assert!(serde_json::from_str::<AviInstance>(bad).is_err());
    }

    #[test]
    fn activity_detection() {
        let inst = ray2d();
        assert_eq!(
            active_set_at(&inst, &[0.0, 1.0], &[0.0, 0.0], 1e-9),
            vec![0]
        );
    }
}
