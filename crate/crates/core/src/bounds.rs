//! Empirical constants for the upper-Lipschitz property of `R⁻¹` and for the
//! local error bound `d(x, C*) ≤ c‖R(x)‖` on `{x : ‖R(x)‖ ≤ ε}`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::avi::{
    enumerate_solution_set, piece_sets, residual, AviInstance, KktDecomposition, ResidualPiece,
};
use crate::error::{check_dim, Error, Result};
use crate::instgen::TruncationFamily;
use crate::linalg::{dist, norm, scale, sub};
use crate::polyhedra::{
    distance, enumerate_vertices, nearest_in_union, union_distance, PolyhedralSet, VertexSet,
};
use crate::report::{fmt_num, write_csv};
use crate::rng::{derive_seed, SplitMix64};
use crate::settings::{Settings, Tolerances};
use crate::solvers::operator_norm;

/// Largest dimension accepted by the truncation study.
pub const TRUNCATION_DIM_CAP: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: String,
    pub point: Vec<f64>,
    #[serde(with = "crate::report::extended")]
    pub ratio: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSetModulus {
    pub active: Vec<usize>,
    pub c: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: String,
    #[serde(with = "crate::report::extended")]
    pub c_emp: f64,
    #[serde(with = "crate::report::extended")]
    pub epsilon: f64,
    /// Accepted samples.
    pub num_samples: usize,
    pub num_drawn: usize,
    pub worst_ratio_witness: Option<Vec<f64>>,
    pub violations: Vec<Violation>,
    pub ratio_trace: Vec<(usize, f64)>,
    pub stabilized: bool,
    pub per_active_set: Vec<ActiveSetModulus>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl BoundReport {
    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .ratio_trace
            .iter()
            .map(|(n, c)| vec![n.to_string(), fmt_num(*c)])
            .collect();
        write_csv(path, &["samples", "c_emp"], &rows)
    }
}

/// Running maximum recorded at 1, 2, 4, … and at the final count.
fn running_max_trace(ratios: &[f64]) -> Vec<(usize, f64)> {
    let mut trace = Vec::new();
    let mut best: f64 = 0.0;
    let mut mark = 1;
    for (i, &r) in ratios.iter().enumerate() {
        best = best.max(r);
        let k = i + 1;
        if k == mark {
            trace.push((k, best));
            mark *= 2;
        } else if k == ratios.len() {
            trace.push((k, best));
        }
    }
    trace
}

/// Relative change of the running max across the final doubling of samples.
fn final_doubling_change(ratios: &[f64]) -> Option<f64> {
    let n = ratios.len();
    if n < 2 {
        return None;
    }
    let half = ratios[..n.div_ceil(2)].iter().copied().fold(0.0, f64::max);
    let full = ratios.iter().copied().fold(0.0, f64::max);
    if full == 0.0 {
        return Some(0.0);
    }
    Some((full - half) / full)
}

const STABLE_CHANGE: f64 = 0.05;

// ---------------------------------------------------------------------------
// local error bound

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundConfig {
    pub num_samples: usize,
    pub master_seed: u64,
    pub noise_scales: Vec<f64>,
    /// Steps of `x ← x − τR(x)` taken from each sample at fixed distance to
    /// `C*`, which pulls the sample toward slowly contracting directions.
    pub refine_steps: usize,
}

impl Default for ErrorBoundConfig {
    fn default() -> Self {
        Self {
            num_samples: 400,
            master_seed: 0,
            noise_scales: vec![0.01, 0.1, 1.0],
            refine_steps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct SamplePoint {
    x: Vec<f64>,
    r: Vec<f64>,
    residual: f64,
    distance: f64,
}

/// Samples drawn once around `C*`; reports for any ε are filters of these.
#[derive(Debug, Clone)]
pub struct ErrorBoundSamples {
    pub pieces: Vec<ResidualPiece>,
    trajectories: Vec<Vec<SamplePoint>>,
}

fn random_point_of(vs: &VertexSet, rng: &mut SplitMix64) -> Vec<f64> {
    let n = vs.vertices[0].len();
    let w: Vec<f64> = vs
        .vertices
        .iter()
        .map(|_| -(1.0 - rng.uniform()).ln())
        .collect();
    let total: f64 = w.iter().sum();
    let mut x = vec![0.0; n];
    for (v, wi) in vs.vertices.iter().zip(&w) {
        for (a, b) in x.iter_mut().zip(v) {
            *a += b * wi / total;
        }
    }
    for d in &vs.recession_rays {
        let t = rng.uniform_range(0.0, 2.0);
        for (a, b) in x.iter_mut().zip(d) {
            *a += t * b;
        }
    }
    x
}

fn sample_point(
    inst: &AviInstance,
    sets: &[PolyhedralSet],
    x: Vec<f64>,
    tol: &Tolerances,
) -> Result<SamplePoint> {
    let rv = residual(inst, &x, tol)?;
    let distance = union_distance(sets, &x, tol)?;
    Ok(SamplePoint {
        x,
        residual: rv.norm,
        r: rv.r,
        distance,
    })
}

fn sample_trajectory(
    inst: &AviInstance,
    sets: &[PolyhedralSet],
    shapes: &[VertexSet],
    cfg: &ErrorBoundConfig,
    index: usize,
    tau: f64,
    tol: &Tolerances,
) -> Result<Vec<SamplePoint>> {
    let mut rng = SplitMix64::new(derive_seed(cfg.master_seed, index as u64));
    let base = random_point_of(&shapes[rng.below(shapes.len())], &mut rng);
    let sigma = cfg.noise_scales[index % cfg.noise_scales.len()];
    let noise = rng.normal_vec(inst.n());
    let x: Vec<f64> = base
        .iter()
        .zip(&noise)
        .map(|(b, e)| b + sigma * e)
        .collect();
    let first = sample_point(inst, sets, x, tol)?;
    let d0 = first.distance;
    let mut out = vec![first];
    if d0 == 0.0 {
        return Ok(out);
    }
    for _ in 0..cfg.refine_steps {
        let cur = out.last().unwrap();
        let moved: Vec<f64> = cur.x.iter().zip(&cur.r).map(|(a, b)| a - tau * b).collect();
        let (d, _, p) = nearest_in_union(sets, &moved, tol)?;
        if d <= 1e-12 * (1.0 + norm(&p)) {
            break;
        }
        let x: Vec<f64> = p
            .iter()
            .zip(&sub(&moved, &p))
            .map(|(a, b)| a + b * d0 / d)
            .collect();
        out.push(sample_point(inst, sets, x, tol)?);
    }
    Ok(out)
}

impl ErrorBoundSamples {
    pub fn draw(inst: &AviInstance, cfg: &ErrorBoundConfig, settings: &Settings) -> Result<Self> {
        if cfg.noise_scales.is_empty() || cfg.noise_scales.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidInput("noise scales must be positive".into()));
        }
        let pieces = enumerate_solution_set(inst, settings)?;
        if pieces.is_empty() {
            return Err(Error::NoSolution);
        }
        let sets = piece_sets(&pieces);
        let shapes = sets
            .iter()
            .map(|p| enumerate_vertices(p, settings))
            .collect::<Result<Vec<_>>>()?;
        let tau = 1.0 / (1.0 + operator_norm(inst));
        let trajectories = (0..cfg.num_samples)
            .into_par_iter()
            .map(|i| sample_trajectory(inst, &sets, &shapes, cfg, i, tau, &settings.tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pieces,
            trajectories,
        })
    }

    /// The report at radius ε. A sample is accepted when some point of its
    /// trajectory has `10·tol.cmp ≤ ‖R(x)‖ ≤ ε`; its ratio is the largest
    /// `d(x, C*)/‖R(x)‖` over such points.
    pub fn report(&self, epsilon: f64, tol: &Tolerances) -> Result<BoundReport> {
        let floor = 10.0 * tol.cmp;
        let mut ratios = Vec::new();
        let mut witness: Option<(f64, Vec<f64>)> = None;
        for traj in &self.trajectories {
            let best = traj
                .iter()
                .filter(|p| p.residual >= floor && p.residual <= epsilon)
                .map(|p| (p.distance / p.residual, p))
                .max_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((r, p)) = best {
                ratios.push(r);
                if witness.as_ref().is_none_or(|(w, _)| r > *w) {
                    witness = Some((r, p.x.clone()));
                }
            }
        }
        if ratios.is_empty() {
            return Err(Error::DegenerateSampler(format!(
                "no sample with residual in [{floor:e}, {epsilon:e}]"
            )));
        }
        let c_emp = ratios.iter().copied().fold(0.0, f64::max);
        let change = final_doubling_change(&ratios);
        let stabilized = change.is_some_and(|c| c <= STABLE_CHANGE) && c_emp.is_finite();
        let mut violations = Vec::new();
        let mut notes = Vec::new();
        match change {
            Some(c) if !stabilized => violations.push(Violation {
                kind: "unstable_trace".into(),
                point: witness.as_ref().map(|w| w.1.clone()).unwrap_or_default(),
                ratio: c_emp,
                detail: format!("c_emp changed by {:.2}% over the final doubling", 100.0 * c),
            }),
            None => violations.push(Violation {
                kind: "too_few_samples".into(),
                point: vec![],
                ratio: c_emp,
                detail: "at least two accepted samples are needed".into(),
            }),
            _ => {}
        }
        if let Some(c) = change {
            notes.push(format!("final doubling change {:.3}%", 100.0 * c));
        }
        Ok(BoundReport {
            kind: "error_bound".into(),
            c_emp,
            epsilon,
            num_samples: ratios.len(),
            num_drawn: self.trajectories.len(),
            worst_ratio_witness: witness.map(|w| w.1),
            ratio_trace: running_max_trace(&ratios),
            stabilized,
            per_active_set: vec![],
            notes,
            pass: violations.is_empty(),
            violations,
        })
    }
}

/// Samples `x` = (point of `C*`) + Gaussian noise and reports
/// `c_emp = max d(x, C*)/‖R(x)‖` over samples with `‖R(x)‖ ≤ ε`.
pub fn verify_error_bound(
    inst: &AviInstance,
    epsilon: f64,
    num_samples: usize,
    master_seed: u64,
    settings: &Settings,
) -> Result<BoundReport> {
    let cfg = ErrorBoundConfig {
        num_samples,
        master_seed,
        ..Default::default()
    };
    verify_error_bound_with(inst, epsilon, &cfg, settings)
}

pub fn verify_error_bound_with(
    inst: &AviInstance,
    epsilon: f64,
    cfg: &ErrorBoundConfig,
    settings: &Settings,
) -> Result<BoundReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    ErrorBoundSamples::draw(inst, cfg, settings)?.report(epsilon, &settings.tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusPoint {
    pub epsilon: f64,
    #[serde(with = "crate::report::extended")]
    pub c_emp: f64,
    pub accepted: usize,
    pub stabilized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRadius {
    /// Largest tested ε with a stabilized trace.
    pub epsilon: Option<f64>,
    #[serde(with = "crate::report::extended")]
    pub c_emp: f64,
    pub curve: Vec<RadiusPoint>,
    pub report: BoundReport,
}

/// Halving search over `ε ∈ {1, ½, …, 2⁻¹⁰}` on one shared sample.
pub fn find_local_radius(
    inst: &AviInstance,
    cfg: &ErrorBoundConfig,
    settings: &Settings,
) -> Result<LocalRadius> {
    let samples = ErrorBoundSamples::draw(inst, cfg, settings)?;
    let mut curve = Vec::new();
    let mut chosen: Option<BoundReport> = None;
    let mut first: Option<BoundReport> = None;
    for k in 0..=10 {
        let eps = 0.5f64.powi(k);
        match samples.report(eps, &settings.tol) {
            Ok(rep) => {
                curve.push(RadiusPoint {
                    epsilon: eps,
                    c_emp: rep.c_emp,
                    accepted: rep.num_samples,
                    stabilized: rep.stabilized,
                });
                if rep.stabilized && chosen.is_none() {
                    chosen = Some(rep.clone());
                }
                if first.is_none() {
                    first = Some(rep);
                }
            }
            Err(Error::DegenerateSampler(_)) => curve.push(RadiusPoint {
                epsilon: eps,
                c_emp: f64::NAN,
                accepted: 0,
                stabilized: false,
            }),
            Err(e) => return Err(e),
        }
    }
    let report = match chosen.or(first) {
        Some(r) => r,
        None => {
            return Err(Error::DegenerateSampler(
                "no sample passed the residual filter at any radius".into(),
            ))
        }
    };
    Ok(LocalRadius {
        epsilon: report.stabilized.then_some(report.epsilon),
        c_emp: report.c_emp,
        curve,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub n: usize,
    pub epsilon: Option<f64>,
    #[serde(with = "crate::report::extended")]
    pub c_emp: f64,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationTable {
    pub family: TruncationFamily,
    pub rows: Vec<TruncationRow>,
}

impl TruncationTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.epsilon.map(fmt_num).unwrap_or_default(),
                    fmt_num(r.c_emp),
                    r.accepted.to_string(),
                ]
            })
            .collect();
        write_csv(path, &["n", "epsilon", "c_emp", "accepted"], &rows)
    }

    pub fn c_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.c_emp).collect()
    }
}

/// `find_local_radius` on each truncation `M_n, q_n, ℝⁿ₊`.
pub fn truncation_study(
    family: &TruncationFamily,
    dims: &[usize],
    cfg: &ErrorBoundConfig,
    settings: &Settings,
) -> Result<TruncationTable> {
    if let Some(&n) = dims.iter().find(|&&n| n > TRUNCATION_DIM_CAP || n == 0) {
        return Err(Error::CapExceeded {
            what: "truncation dimension",
            value: n,
            cap: TRUNCATION_DIM_CAP,
        });
    }
    let rows = dims
        .iter()
        .map(|&n| {
            let inst = family.instance(n)?;
            let lr = find_local_radius(&inst, cfg, settings)?;
            Ok(TruncationRow {
                n,
                epsilon: lr.epsilon,
                c_emp: lr.c_emp,
                accepted: lr.report.num_samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TruncationTable {
        family: family.clone(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// upper Lipschitz property of R⁻¹

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCheckConfig {
    pub base_point: Vec<f64>,
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    pub master_seed: u64,
}

impl LipschitzCheckConfig {
    pub fn new(base_point: Vec<f64>) -> Self {
        Self {
            base_point,
            radii: vec![0.01, 0.1, 1.0],
            samples_per_radius: 40,
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let increasing = self.radii.windows(2).all(|w| w[0] < w[1]);
        if self.radii.is_empty() || self.radii[0] <= 0.0 || !increasing {
            return Err(Error::InvalidInput(
                "radii must be positive and increasing".into(),
            ));
        }
        Ok(())
    }
}

struct InclusionSample {
    y: Vec<f64>,
    in_domain: bool,
    ratio: f64,
    worst: Option<Vec<f64>>,
    per_active: Vec<(Vec<usize>, f64)>,
    violations: Vec<Violation>,
}

fn inclusion_sample(
    decomposition: &KktDecomposition,
    base: &[ResidualPiece],
    base_sets: &[PolyhedralSet],
    y: Vec<f64>,
    ybar: &[f64],
    settings: &Settings,
) -> Result<InclusionSample> {
    let pieces = decomposition.pieces(&y)?;
    let mut out = InclusionSample {
        in_domain: !pieces.is_empty(),
        ratio: 0.0,
        worst: None,
        per_active: vec![],
        violations: vec![],
        y,
    };
    if pieces.is_empty() {
        return Ok(out);
    }
    let dy = dist(&out.y, ybar);
    if base.is_empty() {
        out.ratio = f64::INFINITY;
        out.violations.push(Violation {
            kind: "preimage_without_base".into(),
            point: out.y.clone(),
            ratio: f64::INFINITY,
            detail: "R⁻¹(y) is nonempty while R⁻¹(ȳ) is empty".into(),
        });
        return Ok(out);
    }
    for piece in &pieces {
        let vs = enumerate_vertices(&piece.set, settings)?;
        let same = base.iter().position(|b| b.active == piece.active);
        let mut c_piece: f64 = 0.0;
        for v in &vs.vertices {
            let (d, _, _) = nearest_in_union(base_sets, v, &settings.tol)?;
            let r = d / dy;
            if r > out.ratio || out.worst.is_none() {
                out.ratio = out.ratio.max(r);
                out.worst = Some(v.clone());
            }
            if let Some(j) = same {
                let (dj, _) = distance(&base[j].set, v, &settings.tol)?;
                c_piece = c_piece.max(dj / dy);
            }
        }
        if same.is_some() {
            out.per_active.push((piece.active.clone(), c_piece));
        }
        for d in &vs.recession_rays {
            if !base_sets
                .iter()
                .any(|b| b.recedes_along(d, settings.tol.opt))
            {
                out.ratio = f64::INFINITY;
                out.violations.push(Violation {
                    kind: "unbounded_ray".into(),
                    point: d.clone(),
                    ratio: f64::INFINITY,
                    detail: format!(
                        "ray of the piece {:?} leaves every base piece",
                        piece.active
                    ),
                });
            }
        }
    }
    Ok(out)
}

/// For `y` sampled around `ȳ`, checks `R⁻¹(y) ⊆ R⁻¹(ȳ) + c‖y − ȳ‖B` on the
/// vertices of every piece of `R⁻¹(y)`; `c_emp` is the largest observed
/// `d(v, R⁻¹(ȳ))/‖y − ȳ‖`.
pub fn verify_upper_lipschitz_inverse(
    inst: &AviInstance,
    cfg: &LipschitzCheckConfig,
    settings: &Settings,
) -> Result<BoundReport> {
    cfg.validate()?;
    check_dim(inst.n(), cfg.base_point.len())?;
    let decomposition = KktDecomposition::new(inst, settings)?;
    let ybar = &cfg.base_point;
    let base = decomposition.pieces(ybar)?;
    let base_sets = piece_sets(&base);
    let per_radius = cfg.samples_per_radius;
    let samples = (0..cfg.radii.len() * per_radius)
        .into_par_iter()
        .map(|i| {
            let r = cfg.radii[i / per_radius];
            let mut rng = SplitMix64::new(derive_seed(cfg.master_seed, i as u64));
            let g = rng.normal_vec(inst.n());
            let y: Vec<f64> = ybar.iter().zip(&g).map(|(a, e)| a + r * e).collect();
            inclusion_sample(&decomposition, &base, &base_sets, y, ybar, settings)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ratios = Vec::new();
    let mut witness: Option<(f64, Vec<f64>)> = None;
    let mut violations = Vec::new();
    let mut per_active: Vec<ActiveSetModulus> = Vec::new();
    for s in samples.iter().filter(|s| s.in_domain) {
        ratios.push(s.ratio);
        if witness.as_ref().is_none_or(|(w, _)| s.ratio > *w) {
            witness = Some((s.ratio, s.worst.clone().unwrap_or_else(|| s.y.clone())));
        }
        violations.extend(s.violations.iter().cloned());
        for (active, c) in &s.per_active {
            match per_active.iter_mut().find(|m| &m.active == active) {
                Some(m) => {
                    m.c = m.c.max(*c);
                    m.samples += 1;
                }
                None => per_active.push(ActiveSetModulus {
                    active: active.clone(),
                    c: *c,
                    samples: 1,
                }),
            }
        }
    }
    per_active.sort_by(|a, b| a.active.cmp(&b.active));
    let mut notes = Vec::new();
    if ratios.is_empty() {
        if !base.is_empty() {
            return Err(Error::DegenerateSampler(
                "every sampled y fell outside dom R⁻¹".into(),
            ));
        }
        notes.push(
            "ȳ lies outside dom R⁻¹ and so does every sampled y: the inclusion holds vacuously on the sampled neighbourhood"
                .into(),
        );
    }
    let outside = samples.len() - ratios.len();
    if outside > 0 {
        notes.push(format!("{outside} sampled y outside dom R⁻¹"));
    }
    let c_emp = ratios.iter().copied().fold(0.0, f64::max);
    let stabilized = final_doubling_change(&ratios).is_none_or(|c| c <= STABLE_CHANGE);
    Ok(BoundReport {
        kind: "upper_lipschitz".into(),
        c_emp,
        epsilon: *cfg.radii.last().unwrap(),
        num_samples: ratios.len(),
        num_drawn: samples.len(),
        worst_ratio_witness: witness.map(|w| w.1),
        ratio_trace: running_max_trace(&ratios),
        stabilized,
        per_active_set: per_active,
        notes,
        pass: violations.is_empty(),
        violations,
    })
}

/// Base points `R(x)` for random `x`, which lie in `dom R⁻¹` by construction.
pub fn domain_base_points(
    inst: &AviInstance,
    count: usize,
    seed: u64,
    spread: f64,
    tol: &Tolerances,
) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .map(|i| {
            let mut rng = SplitMix64::new(derive_seed(seed, i as u64));
            let x = scale(&rng.normal_vec(inst.n()), spread);
            Ok(residual(inst, &x, tol)?.r)
        })
        .collect()
}
