//! Generalized polyhedral multifunctions
//! `F(x) = {y : A₁x + A₂y = z, ⟨x*ᵢ, x⟩ + ⟨y*ᵢ, y⟩ ≤ bᵢ}`.
//!
//! The norm on the range of `(A₁, A₂)` is ℓ∞ (so its dual is ℓ1), and `γ` is
//! measured in ℓ1. With that choice the value function
//!
//! ```text
//! g(x) = inf_y max{ ‖A₁x + A₂y − z‖∞, maxᵢ(⟨x*ᵢ,x⟩ + ⟨y*ᵢ,y⟩ − bᵢ) }
//! ```
//!
//! and its dual `max_{(λ,γ) ∈ E′} ⟨λ, A₁x − z⟩ + Σγᵢ(⟨x*ᵢ,x⟩ − bᵢ)` are
//! both linear programs, and the minimax equality between them is checkable
//! to solver precision.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, dot, mat_vec, Matrix};
use crate::optkernel::{solve_lp, LinearProgram, LpStatus};
use crate::polyhedra::{hausdorff, Constraint, HausdorffDistance, PolyhedralSet};
use crate::rng::{derive_seed, stream};
use crate::settings::{Settings, Tolerances};

/// One coupled inequality `⟨xstar, x⟩ + ⟨ystar, y⟩ ≤ b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpRow {
    pub xstar: Vec<f64>,
    pub ystar: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GpRaw", into = "GpRaw")]
pub struct GpMultifunction {
    /// Dimension of x.
    pub n: usize,
    /// Dimension of y.
    pub r: usize,
    /// `k × n`
    pub a1: Matrix,
    /// `k × r`
    pub a2: Matrix,
    pub z: Vec<f64>,
    pub rows: Vec<GpRow>,
}

#[derive(Serialize, Deserialize)]
struct GpRaw {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<usize>,
    #[serde(default)]
    a1: Matrix,
    #[serde(default)]
    a2: Matrix,
    #[serde(default)]
    z: Vec<f64>,
    #[serde(default)]
    rows: Vec<GpRow>,
}

impl TryFrom<GpRaw> for GpMultifunction {
    type Error = Error;

    fn try_from(raw: GpRaw) -> Result<Self> {
        let n = raw
            .n
            .or_else(|| raw.a1.first().map(|r| r.len()))
            .or_else(|| raw.rows.first().map(|r| r.xstar.len()))
            .ok_or_else(|| Error::Schema("cannot infer dimension of x".into()))?;
        let r = raw
            .r
            .or_else(|| raw.a2.first().map(|r| r.len()))
            .or_else(|| raw.rows.first().map(|r| r.ystar.len()))
            .ok_or_else(|| Error::Schema("cannot infer dimension of y".into()))?;
        GpMultifunction::new(n, r, raw.a1, raw.a2, raw.z, raw.rows)
    }
}

impl From<GpMultifunction> for GpRaw {
    fn from(f: GpMultifunction) -> Self {
        GpRaw {
            n: Some(f.n),
            r: Some(f.r),
            a1: f.a1,
            a2: f.a2,
            z: f.z,
            rows: f.rows,
        }
    }
}

/// A point `(λ, γ)` of `E′ = {‖λ‖₁ + Σγᵢ ≤ 1, γ ≥ 0, A₂ᵀλ + Σγᵢy*ᵢ = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualMultiplier {
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl GpMultifunction {
    pub fn new(
        n: usize,
        r: usize,
        a1: Matrix,
        a2: Matrix,
        z: Vec<f64>,
        rows: Vec<GpRow>,
    ) -> Result<Self> {
        if n == 0 || r == 0 {
            return Err(Error::InvalidInput("dimensions must be positive".into()));
        }
        check_dim(a1.len(), a2.len())?;
        check_dim(a1.len(), z.len())?;
        for row in &a1 {
            check_dim(n, row.len())?;
        }
        for row in &a2 {
            check_dim(r, row.len())?;
        }
        for row in &rows {
            check_dim(n, row.xstar.len())?;
            check_dim(r, row.ystar.len())?;
        }
        let finite = a1
            .iter()
            .chain(&a2)
            .flatten()
            .chain(&z)
            .chain(
                rows.iter()
                    .flat_map(|w| w.xstar.iter().chain(&w.ystar).chain([&w.b])),
            )
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite multifunction data".into()));
        }
        Ok(Self {
            n,
            r,
            a1,
            a2,
            z,
            rows,
        })
    }

    /// Number of equality rows (dimension of Z).
    pub fn k(&self) -> usize {
        self.z.len()
    }

    /// The graph `{(x, y)}` as a polyhedron in ℝⁿ⁺ʳ.
    pub fn graph(&self) -> PolyhedralSet {
        let eq = (0..self.k())
            .map(|j| {
                let mut a = self.a1[j].clone();
                a.extend_from_slice(&self.a2[j]);
                Constraint::new(a, self.z[j])
            })
            .collect();
        let ineq = self
            .rows
            .iter()
            .map(|w| {
                let mut a = w.xstar.clone();
                a.extend_from_slice(&w.ystar);
                Constraint::new(a, w.b)
            })
            .collect();
        PolyhedralSet {
            n: self.n + self.r,
            ineq,
            eq,
        }
    }
}

/// `F(x)` as a polyhedron in y-space (possibly empty).
pub fn evaluate(f: &GpMultifunction, x: &[f64]) -> Result<PolyhedralSet> {
    check_dim(f.n, x.len())?;
    let a1x = mat_vec(&f.a1, x);
    let eq = (0..f.k())
        .map(|j| Constraint::new(f.a2[j].clone(), f.z[j] - a1x[j]))
        .collect();
    let ineq = f
        .rows
        .iter()
        .map(|w| Constraint::new(w.ystar.clone(), w.b - dot(&w.xstar, x)))
        .collect();
    Ok(PolyhedralSet { n: f.r, ineq, eq })
}

pub fn domain_contains(f: &GpMultifunction, x: &[f64], tol: &Tolerances) -> Result<bool> {
    let sec = evaluate(f, x)?;
    Ok(!sec.is_empty(tol)?)
}

/// A point `(x, y)` of the graph, if any.
pub fn graph_witness(
    f: &GpMultifunction,
    tol: &Tolerances,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let g = f.graph();
    Ok(g.feasible_point(tol)?
        .map(|p| (p[..f.n].to_vec(), p[f.n..].to_vec())))
}

/// `g(x)` with its minimizing `y`. The residual norm term is nonnegative, so
/// `g ≥ 0` and it vanishes exactly on `dom F`.
pub fn g_primal_with_point(
    f: &GpMultifunction,
    x: &[f64],
    tol: &Tolerances,
) -> Result<(f64, Vec<f64>)> {
    check_dim(f.n, x.len())?;
    let r = f.r;
    let mut obj = vec![0.0; r + 1];
    obj[r] = 1.0;
    let mut lp = LinearProgram::minimize(obj);
    let a1x = mat_vec(&f.a1, x);
    for j in 0..f.k() {
        let c = f.z[j] - a1x[j];
        let mut up = f.a2[j].clone();
        up.push(-1.0);
        let mut dn: Vec<f64> = f.a2[j].iter().map(|v| -v).collect();
        dn.push(-1.0);
        lp = lp.with_ineq(up, c).with_ineq(dn, -c);
    }
    if f.k() == 0 {
        // the norm of the zero-dimensional residual is 0, so t ≥ 0
        let mut row = vec![0.0; r + 1];
        row[r] = -1.0;
        lp = lp.with_ineq(row, 0.0);
    }
    for w in &f.rows {
        let mut a = w.ystar.clone();
        a.push(-1.0);
        lp = lp.with_ineq(a, w.b - dot(&w.xstar, x));
    }
    let st = solve_lp(&lp, tol)?;
    match st.status {
        LpStatus::Optimal => {
            let p = st.point.unwrap();
            Ok((st.value, p[..r].to_vec()))
        }
        LpStatus::Unbounded => Ok((f64::NEG_INFINITY, vec![0.0; r])),
        LpStatus::Infeasible => Err(Error::NumericalBreakdown(
            "epigraph LP reported infeasible".into(),
        )),
    }
}

pub fn g_primal(f: &GpMultifunction, x: &[f64], tol: &Tolerances) -> Result<f64> {
    g_primal_with_point(f, x, tol).map(|(v, _)| v)
}

/// `max_{(λ,γ) ∈ E′} ⟨λ, A₁x − z⟩ + Σγᵢ(⟨x*ᵢ,x⟩ − bᵢ)` with its maximizer,
/// solved over `(λ⁺, λ⁻, γ) ≥ 0`.
pub fn g_dual_with_multiplier(
    f: &GpMultifunction,
    x: &[f64],
    tol: &Tolerances,
) -> Result<(f64, DualMultiplier)> {
    check_dim(f.n, x.len())?;
    let k = f.k();
    let p = f.rows.len();
    let nv = 2 * k + p;
    let a1x = mat_vec(&f.a1, x);
    let mut obj = vec![0.0; nv];
    for j in 0..k {
        obj[j] = a1x[j] - f.z[j];
        obj[k + j] = -(a1x[j] - f.z[j]);
    }
    for (i, w) in f.rows.iter().enumerate() {
        obj[2 * k + i] = dot(&w.xstar, x) - w.b;
    }
    let mut lp = LinearProgram::maximize(obj);
    for v in 0..nv {
        let mut row = vec![0.0; nv];
        row[v] = -1.0;
        lp = lp.with_ineq(row, 0.0);
    }
    lp = lp.with_ineq(vec![1.0; nv], 1.0);
    for c in 0..f.r {
        let mut row = vec![0.0; nv];
        for j in 0..k {
            row[j] = f.a2[j][c];
            row[k + j] = -f.a2[j][c];
        }
        for (i, w) in f.rows.iter().enumerate() {
            row[2 * k + i] = w.ystar[c];
        }
        lp = lp.with_eq(row, 0.0);
    }
    let st = solve_lp(&lp, tol)?;
    match st.status {
        LpStatus::Optimal => {
            let v = st.point.unwrap();
            let lambda = (0..k).map(|j| v[j] - v[k + j]).collect();
            let gamma = v[2 * k..].to_vec();
            Ok((st.value, DualMultiplier { lambda, gamma }))
        }
        // only reachable if E′ were empty; (0, 0) always belongs to it
        LpStatus::Infeasible => Ok((
            f64::NEG_INFINITY,
            DualMultiplier {
                lambda: vec![],
                gamma: vec![],
            },
        )),
        LpStatus::Unbounded => Err(Error::NumericalBreakdown(
            "dual LP over a compact set reported unbounded".into(),
        )),
    }
}

pub fn g_dual(f: &GpMultifunction, x: &[f64], tol: &Tolerances) -> Result<f64> {
    g_dual_with_multiplier(f, x, tol).map(|(v, _)| v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxEntry {
    pub x: Vec<f64>,
    #[serde(with = "crate::report::extended")]
    pub g_primal: f64,
    #[serde(with = "crate::report::extended")]
    pub g_dual: f64,
    #[serde(with = "crate::report::extended")]
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    pub entries: Vec<MinimaxEntry>,
    #[serde(with = "crate::report::extended")]
    pub max_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn verify_minimax(
    f: &GpMultifunction,
    xs: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<MinimaxReport> {
    let entries = xs
        .iter()
        .map(|x| {
            let gp = g_primal(f, x, tol)?;
            let gd = g_dual(f, x, tol)?;
            let gap = if gp == f64::NEG_INFINITY && gd == f64::NEG_INFINITY {
                0.0
            } else {
                (gp - gd).abs()
            };
            Ok(MinimaxEntry {
                x: x.clone(),
                g_primal: gp,
                g_dual: gd,
                gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_gap = entries.iter().map(|e| e.gap).fold(0.0, f64::max);
    Ok(MinimaxReport {
        pass: entries.iter().all(|e| e.gap <= tol.cmp),
        entries,
        max_gap,
        tolerance: tol.cmp,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainEntry {
    pub x: Vec<f64>,
    pub member: bool,
    #[serde(with = "crate::report::extended")]
    pub g: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub entries: Vec<DomainEntry>,
    pub members: usize,
    pub mismatches: usize,
    pub pass: bool,
}

/// Checks `x ∈ dom F ⟺ g(x) ≤ tol.cmp` at every point.
pub fn verify_domain_characterization(
    f: &GpMultifunction,
    xs: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<DomainReport> {
    let entries = xs
        .iter()
        .map(|x| {
            let member = domain_contains(f, x, tol)?;
            let g = g_primal(f, x, tol)?;
            Ok(DomainEntry {
                x: x.clone(),
                member,
                g,
                agree: member == (g <= tol.cmp),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mismatches = entries.iter().filter(|e| !e.agree).count();
    Ok(DomainReport {
        members: entries.iter().filter(|e| e.member).count(),
        pass: mismatches == 0,
        mismatches,
        entries,
    })
}

/// Sampling controls for Lipschitz modulus estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSamplerConfig {
    pub num_pairs: usize,
    /// Standard deviations of the Gaussian around the domain witness.
    pub radii: Vec<f64>,
    pub master_seed: u64,
    /// Rejection attempts per pair before it is skipped.
    pub max_attempts: usize,
    /// Local hill-climbing steps around the best pair.
    pub refine_steps: usize,
}

impl Default for LipschitzSamplerConfig {
    fn default() -> Self {
        Self {
            num_pairs: 1000,
            radii: vec![0.1, 1.0, 10.0],
            master_seed: 0,
            max_attempts: 50,
            refine_steps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub c_emp: f64,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub accepted_pairs: usize,
    pub skipped_pairs: usize,
    pub infinite_pairs: usize,
    /// `(pairs processed, running max ratio)` at powers of two and the end.
    pub trace: Vec<(usize, f64)>,
    pub refined_gain: f64,
}

enum PairOutcome {
    Ratio(f64, Vec<f64>, Vec<f64>),
    Infinite,
    Skipped,
}

const HOLDOUT_TAG: u64 = 0x68_6f6c_646f_7574;
const REFINE_TAG: u64 = 0x7265_6669_6e65;

fn domain_sample(
    f: &GpMultifunction,
    center: &[f64],
    radius: f64,
    rng: &mut crate::rng::SplitMix64,
    tol: &Tolerances,
) -> Result<Option<Vec<f64>>> {
    let g = rng.normal_vec(f.n);
    let x: Vec<f64> = center.iter().zip(&g).map(|(c, e)| c + radius * e).collect();
    Ok(domain_contains(f, &x, tol)?.then_some(x))
}

fn pair_ratio(
    f: &GpMultifunction,
    x1: &[f64],
    x2: &[f64],
    settings: &Settings,
) -> Result<Option<f64>> {
    let d = dist(x1, x2);
    if d <= 1e-12 {
        return Ok(Some(0.0));
    }
    let h = hausdorff(&evaluate(f, x1)?, &evaluate(f, x2)?, settings)?;
    Ok(match h {
        HausdorffDistance::Finite { value } => Some(value / d),
        HausdorffDistance::Infinite => None,
    })
}

fn sample_pair(
    f: &GpMultifunction,
    center: &[f64],
    cfg: &LipschitzSamplerConfig,
    seed: u64,
    settings: &Settings,
) -> Result<PairOutcome> {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let tol = &settings.tol;
    for _ in 0..cfg.max_attempts {
        let r1 = cfg.radii[rng.below(cfg.radii.len())];
        let Some(x1) = domain_sample(f, center, r1, &mut rng, tol)? else {
            continue;
        };
        let r2 = cfg.radii[rng.below(cfg.radii.len())];
        let Some(x2) = domain_sample(f, &x1, r2, &mut rng, tol)? else {
            continue;
        };
        return Ok(match pair_ratio(f, &x1, &x2, settings)? {
            Some(ratio) => PairOutcome::Ratio(ratio, x1, x2),
            None => PairOutcome::Infinite,
        });
    }
    Ok(PairOutcome::Skipped)
}

/// Empirical modulus `max h(F(x₁), F(x₂)) / ‖x₁ − x₂‖` over sampled pairs of
/// domain points, followed by local refinement around the best pair.
pub fn estimate_lipschitz_modulus(
    f: &GpMultifunction,
    cfg: &LipschitzSamplerConfig,
    settings: &Settings,
) -> Result<(f64, ModulusReport)> {
    let Some((center, _)) = graph_witness(f, &settings.tol)? else {
        return Err(Error::DegenerateSampler("dom F is empty".into()));
    };
    let outcomes: Vec<PairOutcome> = (0..cfg.num_pairs)
        .into_par_iter()
        .map(|i| {
            sample_pair(
                f,
                &center,
                cfg,
                derive_seed(cfg.master_seed, i as u64),
                settings,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0.0;
    let mut witness: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut trace = Vec::new();
    let (mut accepted, mut skipped, mut infinite) = (0, 0, 0);
    let mut next_mark = 1;
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            PairOutcome::Ratio(r, x1, x2) => {
                accepted += 1;
                if r > best || witness.is_none() {
                    best = r.max(best);
                    witness = Some((x1, x2));
                }
            }
            PairOutcome::Infinite => infinite += 1,
            PairOutcome::Skipped => skipped += 1,
        }
        if i + 1 == next_mark || i + 1 == cfg.num_pairs {
            trace.push((i + 1, best));
            if i + 1 == next_mark {
                next_mark *= 2;
            }
        }
    }
    if accepted == 0 {
        return Err(Error::DegenerateSampler(
            "fewer than 2 domain points found".into(),
        ));
    }
    let sampled = best;
    if let Some((mut x1, mut x2)) = witness.clone() {
        let mut rng = stream(cfg.master_seed, REFINE_TAG);
        let sqrt_n = (f.n as f64).sqrt();
        for step in 0..cfg.refine_steps {
            let span = dist(&x1, &x2).max(1e-6);
            let scale = 0.25 * span * 0.98f64.powi(step as i32) / sqrt_n;
            let g1 = rng.normal_vec(f.n);
            let g2 = rng.normal_vec(f.n);
            let y1: Vec<f64> = x1.iter().zip(&g1).map(|(a, e)| a + scale * e).collect();
            let y2: Vec<f64> = x2.iter().zip(&g2).map(|(a, e)| a + scale * e).collect();
            if !domain_contains(f, &y1, &settings.tol)? || !domain_contains(f, &y2, &settings.tol)?
            {
                continue;
            }
            if let Some(r) = pair_ratio(f, &y1, &y2, settings)? {
                if r > best {
                    best = r;
                    x1 = y1;
                    x2 = y2;
                }
            }
        }
        witness = Some((x1, x2));
    }
    let report = ModulusReport {
        c_emp: best,
        witness,
        accepted_pairs: accepted,
        skipped_pairs: skipped,
        infinite_pairs: infinite,
        trace,
        refined_gain: best - sampled,
    };
    Ok((best, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub c_emp: f64,
    pub factor: f64,
    pub pairs: usize,
    pub max_ratio: f64,
    pub violations: Vec<(Vec<f64>, Vec<f64>, f64)>,
    pub pass: bool,
}

/// Checks `h(F(x₁), F(x₂)) ≤ factor · c · ‖x₁ − x₂‖` on fresh pairs drawn
/// from a seed stream disjoint from the training sample.
pub fn check_lipschitz_holdout(
    f: &GpMultifunction,
    c: f64,
    factor: f64,
    cfg: &LipschitzSamplerConfig,
    settings: &Settings,
) -> Result<HoldoutReport> {
    let Some((center, _)) = graph_witness(f, &settings.tol)? else {
        return Err(Error::DegenerateSampler("dom F is empty".into()));
    };
    let holdout_seed = derive_seed(cfg.master_seed, HOLDOUT_TAG);
    let outcomes: Vec<PairOutcome> = (0..cfg.num_pairs)
        .into_par_iter()
        .map(|i| {
            sample_pair(
                f,
                &center,
                cfg,
                derive_seed(holdout_seed, i as u64),
                settings,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    let mut pairs = 0;
    let mut max_ratio: f64 = 0.0;
    for o in outcomes {
        match o {
            PairOutcome::Ratio(r, x1, x2) => {
                pairs += 1;
                max_ratio = max_ratio.max(r);
                if r > factor * c + 1e-9 {
                    violations.push((x1, x2, r));
                }
            }
            PairOutcome::Infinite => {
                pairs += 1;
                max_ratio = f64::INFINITY;
                violations.push((vec![], vec![], f64::INFINITY));
            }
            PairOutcome::Skipped => {}
        }
    }
    Ok(HoldoutReport {
        c_emp: c,
        factor,
        pairs,
        max_ratio,
        pass: violations.is_empty() && pairs > 0,
        violations,
    })
}

/// Norm of the coupled residual, handy in tests.
pub fn section_residual(f: &GpMultifunction, x: &[f64], y: &[f64]) -> f64 {
    let a1x = mat_vec(&f.a1, x);
    let a2y = mat_vec(&f.a2, y);
    let eq = (0..f.k())
        .map(|j| (a1x[j] + a2y[j] - f.z[j]).abs())
        .fold(0.0, f64::max);
    let ineq = f
        .rows
        .iter()
        .map(|w| dot(&w.xstar, x) + dot(&w.ystar, y) - w.b)
        .fold(f64::NEG_INFINITY, f64::max);
    eq.max(ineq)
}
