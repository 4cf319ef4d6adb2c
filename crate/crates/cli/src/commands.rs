use avibound::avi::{enumerate_solution_set, inverse_residual, is_solution_within, residual};
use avibound::bounds::{
    find_local_radius, truncation_study, verify_error_bound_with, verify_upper_lipschitz_inverse,
    TruncationTable,
};
use avibound::gpm::{
    check_lipschitz_holdout, estimate_lipschitz_modulus, graph_witness,
    verify_domain_characterization, verify_minimax, DomainReport, HoldoutReport,
    LipschitzSamplerConfig, MinimaxReport, ModulusReport,
};
use avibound::instgen::{
    canned_entry, canned_suite, load, load_instance, materialize, verify_manifest, GeneratorSpec,
    Monotonicity, RandomAviParams, RandomGpmParams, Spectrum,
};
use avibound::optkernel::{project, ConstraintSelection};
use avibound::polyhedra::{distance, enumerate_vertices};
use avibound::rng::{derive_seed, SplitMix64};
use avibound::solvers::{solve, SolveOutcome};
use avibound::{
    AviInstance, BoundReport, CannedEntry, Error, ErrorBoundConfig, GpMultifunction,
    LipschitzCheckConfig, PolyhedralSet, ResidualValue, Result, Settings, SolveTrace, SolverConfig,
    SolverMethod, SuiteInstance, TruncationFamily, VertexSet,
};
use serde::Serialize;

use crate::output::{emit, fmt_scalar, fmt_vec, Verdict};
use crate::{
    Cli, Command, EnumerateArgs, ErrorBoundArgs, GenKind, GenerateArgs, GlobalOpts, LipschitzArgs,
    MethodArg, MonotonicityArg, PointArgs, ProjectArgs, SolveArgs, SpectrumArg, TruncationArgs,
};

const MINIMAX_POINTS: usize = 100;
const MINIMAX_RADII: [f64; 3] = [0.1, 1.0, 10.0];
const MODULUS_TOL: f64 = 0.05;
const CONSTANT_TOL: f64 = 0.01;

/// Runs one subcommand; `Ok(pass)` on completion.
pub fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    match &cli.command {
        Command::Generate(a) => generate(g, a),
        Command::Project(a) => project_cmd(g, a),
        Command::Residual(a) => residual_cmd(g, a),
        Command::Solve(a) => solve_cmd(g, a),
        Command::Enumerate(a) => enumerate_cmd(g, a),
        Command::VerifyErrorBound(a) => error_bound_cmd(g, a),
        Command::VerifyLipschitz(a) => lipschitz_cmd(g, a),
        Command::VerifyMinimax => minimax_cmd(g),
        Command::TruncationStudy(a) => truncation_cmd(g, a),
        Command::Suite => suite_cmd(g),
    }
}

struct Loaded {
    label: String,
    instance: SuiteInstance,
}

fn load_arg(g: &GlobalOpts) -> Result<Loaded> {
    let Some(path) = &g.instance else {
        return Err(Error::InvalidInput("--instance is required".into()));
    };
    let label = path.display().to_string();
    if path.exists() {
        return Ok(Loaded {
            label,
            instance: load_instance(path)?,
        });
    }
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    match canned_entry(stem) {
        Some(e) => Ok(Loaded {
            label,
            instance: e.instance,
        }),
        None => Err(Error::Io(format!("{label}: no such file or canned entry"))),
    }
}

fn load_avi(g: &GlobalOpts) -> Result<(String, AviInstance)> {
    let l = load_arg(g)?;
    match l.instance {
        SuiteInstance::Avi(a) => Ok((l.label, a)),
        SuiteInstance::Gpm(_) => Err(Error::InvalidInput(format!(
            "{} is not an AVI instance",
            l.label
        ))),
    }
}

fn load_gpm(g: &GlobalOpts) -> Result<(String, GpMultifunction)> {
    let l = load_arg(g)?;
    match l.instance {
        SuiteInstance::Gpm(f) => Ok((l.label, f)),
        SuiteInstance::Avi(_) => Err(Error::InvalidInput(format!(
            "{} is not a multifunction instance",
            l.label
        ))),
    }
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct GenerateResult {
    manifest: avibound::InstanceManifest,
    reproducible: bool,
}

fn generate(g: &GlobalOpts, a: &GenerateArgs) -> Result<bool> {
    let spec = match a.kind {
        GenKind::Avi => GeneratorSpec::RandomAvi {
            params: RandomAviParams {
                n: a.n,
                m: a.m,
                monotonicity: match a.monotonicity {
                    MonotonicityArg::StronglyMonotone => Monotonicity::StronglyMonotone,
                    MonotonicityArg::MonotoneSkew => Monotonicity::MonotoneSkew,
                    MonotonicityArg::Indefinite => Monotonicity::Indefinite,
                },
                bounded: a.bounded,
            },
        },
        GenKind::Gpm => GeneratorSpec::RandomGpm {
            params: RandomGpmParams {
                n: a.n,
                r: a.r,
                k: a.k,
                p: a.p,
                box_rows: a.bounded,
            },
        },
        GenKind::Truncation => GeneratorSpec::Truncation {
            family: family(a.spectrum),
            n: a.n,
        },
        GenKind::Canned => GeneratorSpec::Canned {
            entry: a
                .entry
                .clone()
                .ok_or_else(|| Error::InvalidInput("canned generation needs --entry".into()))?,
        },
    };
    let name = a.name.clone().unwrap_or_else(|| match (&a.kind, &a.entry) {
        (GenKind::Canned, Some(e)) => e.clone(),
        (k, _) => format!("{}_{}", format!("{k:?}").to_lowercase(), g.seed),
    });
    let manifest = materialize(&g.out, &name, g.seed, spec)?;
    let reproducible = verify_manifest(&g.out, &manifest)?;
    let verdict = Verdict {
        pass: reproducible,
        summary: format!("wrote {}", g.out.join(&manifest.path).display()),
    };
    let result = GenerateResult {
        manifest,
        reproducible,
    };
    emit(
        &g.out,
        &format!("generate_{name}.json"),
        "generate",
        None,
        &verdict,
        &result,
    )?;
    Ok(verdict.pass)
}

fn family(s: SpectrumArg) -> TruncationFamily {
    TruncationFamily::new(match s {
        SpectrumArg::Harmonic => Spectrum::Harmonic,
        SpectrumArg::Constant => Spectrum::Constant,
    })
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ProjectResult {
    x: Vec<f64>,
    projection: Vec<f64>,
    distance: f64,
    /// `max_{v} ⟨x − P(x), v − P(x)⟩` over the vertices of a bounded set.
    variational_residual: Option<f64>,
}

fn project_cmd(g: &GlobalOpts, a: &ProjectArgs) -> Result<bool> {
    let s = g.settings();
    let (label, set) = match &a.set {
        Some(p) => (p.display().to_string(), load::<PolyhedralSet>(p)?),
        None => {
            let (label, inst) = load_avi(g)?;
            (label, inst.c_set)
        }
    };
    let z = project(&set, &a.x, ConstraintSelection::default(), &s.tol)?;
    let (d, _) = distance(&set, &a.x, &s.tol)?;
    let variational_residual = match enumerate_vertices(&set, &s) {
        Ok(vs) if vs.is_bounded => Some(
            vs.vertices
                .iter()
                .map(|v| {
                    a.x.iter()
                        .zip(&z)
                        .zip(v)
                        .map(|((xi, zi), vi)| (xi - zi) * (vi - zi))
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max),
        ),
        _ => None,
    };
    let feasible = set.max_violation(&z) <= 10.0 * s.tol.feas.max(1e-9);
    let characterized = variational_residual.is_none_or(|r| r <= s.tol.opt);
    let verdict = Verdict {
        pass: feasible && characterized,
        summary: format!("P(x)={}, distance={}", fmt_vec(&z), fmt_scalar(d)),
    };
    let result = ProjectResult {
        x: a.x.clone(),
        projection: z,
        distance: d,
        variational_residual,
    };
    emit(
        &g.out,
        "project.json",
        "project",
        Some(&label),
        &verdict,
        &result,
    )?;
    Ok(verdict.pass)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ResidualResult {
    x: Vec<f64>,
    residual: ResidualValue,
    is_solution: bool,
}

fn residual_cmd(g: &GlobalOpts, a: &PointArgs) -> Result<bool> {
    let s = g.settings();
    let (label, inst) = load_avi(g)?;
    let rv = residual(&inst, &a.x, &s.tol)?;
    let is_solution = is_solution_within(&inst, &a.x, s.tol.cmp, &s.tol)?;
    let verdict = Verdict {
        pass: true,
        summary: format!("r={}, norm={}", fmt_vec(&rv.r), fmt_scalar(rv.norm)),
    };
    let result = ResidualResult {
        x: a.x.clone(),
        residual: rv,
        is_solution,
    };
    emit(
        &g.out,
        "residual.json",
        "residual",
        Some(&label),
        &verdict,
        &result,
    )?;
    Ok(true)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SolveResult {
    config: SolverConfig,
    final_residual: f64,
    iterations: usize,
    trace: SolveTrace,
}

fn solve_cmd(g: &GlobalOpts, a: &SolveArgs) -> Result<bool> {
    let s = g.settings();
    let (label, inst) = load_avi(g)?;
    let method = match a.method {
        MethodArg::FixedPoint => SolverMethod::ProjectedFixedPoint,
        MethodArg::Extragradient => SolverMethod::Extragradient,
    };
    let mut cfg = SolverConfig::for_instance(&inst, method);
    cfg.max_iters = a.max_iters;
    cfg.stop_residual = a.stop.unwrap_or(1e-6f64.max(g.tol));
    if let Some(step) = a.step {
        cfg.step = step;
    }
    if let Some(x0) = &a.x0 {
        cfg.x0 = x0.clone();
    }
    let trace = solve(&inst, &cfg, &s.tol)?;
    trace.write_csv(&g.out.join("solve_trace.csv"))?;
    let iterations = trace.iterates_meta.last().map_or(0, |m| m.iter);
    let final_residual = trace.final_residual();
    let verdict = Verdict {
        pass: trace.outcome == SolveOutcome::Converged,
        summary: format!(
            "{:?} after {iterations} iterations, residual={:.3e}, x={}",
            trace.outcome,
            final_residual,
            fmt_vec(&trace.final_x)
        ),
    };
    let result = SolveResult {
        config: cfg,
        final_residual,
        iterations,
        trace,
    };
    emit(
        &g.out,
        "solve.json",
        "solve",
        Some(&label),
        &verdict,
        &result,
    )?;
    Ok(verdict.pass)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PieceOut {
    active: Vec<usize>,
    set: PolyhedralSet,
    vertices: VertexSet,
}

#[derive(Serialize)]
struct EnumerateResult {
    y: Vec<f64>,
    pieces: Vec<PieceOut>,
    checked_vertices: usize,
    failed_vertices: Vec<Vec<f64>>,
}

fn enumerate_cmd(g: &GlobalOpts, a: &EnumerateArgs) -> Result<bool> {
    let s = g.settings();
    let (label, inst) = load_avi(g)?;
    let (y, pieces) = match &a.y {
        None => (vec![0.0; inst.n()], enumerate_solution_set(&inst, &s)?),
        Some(y) => (y.clone(), inverse_residual(&inst, y, &s)?),
    };
    let solution_set = a.y.is_none();
    let mut out = Vec::with_capacity(pieces.len());
    let mut failed = Vec::new();
    let mut checked = 0;
    for p in pieces {
        let vertices = enumerate_vertices(&p.set, &s)?;
        for v in &vertices.vertices {
            checked += 1;
            let ok = if solution_set {
                is_solution_within(&inst, v, 1e-6, &s.tol)?
            } else {
                let r = residual(&inst, v, &s.tol)?.r;
                r.iter().zip(&y).all(|(ri, yi)| (ri - yi).abs() <= 1e-6)
            };
            if !ok {
                failed.push(v.clone());
            }
        }
        out.push(PieceOut {
            active: p.active,
            set: p.set,
            vertices,
        });
    }
    let what = if solution_set { "C*" } else { "R⁻¹(y)" };
    let verdict = Verdict {
        pass: failed.is_empty(),
        summary: format!(
            "{what}: {} pieces, {checked} vertices checked, {} failed",
            out.len(),
            failed.len()
        ),
    };
    let result = EnumerateResult {
        y,
        pieces: out,
        checked_vertices: checked,
        failed_vertices: failed,
    };
    emit(
        &g.out,
        "enumerate.json",
        "enumerate",
        Some(&label),
        &verdict,
        &result,
    )?;
    Ok(verdict.pass)
}

// ---------------------------------------------------------------------------

fn bound_config(g: &GlobalOpts) -> ErrorBoundConfig {
    ErrorBoundConfig {
        num_samples: g.samples.unwrap_or(400),
        master_seed: g.seed,
        ..Default::default()
    }
}

#[derive(Serialize)]
struct ErrorBoundResult {
    report: BoundReport,
    local_radius: Option<avibound::bounds::LocalRadius>,
}

fn error_bound_report(inst: &AviInstance, g: &GlobalOpts, s: &Settings) -> Result<BoundReport> {
    verify_error_bound_with(inst, g.eps, &bound_config(g), s)
}

fn error_bound_cmd(g: &GlobalOpts, a: &ErrorBoundArgs) -> Result<bool> {
    let s = g.settings();
    let (label, inst) = load_avi(g)?;
    let report = error_bound_report(&inst, g, &s)?;
    report.write_trace_csv(&g.out.join("error_bound_trace.csv"))?;
    let local_radius = if a.local_radius {
        Some(find_local_radius(&inst, &bound_config(g), &s)?)
    } else {
        None
    };
    let mut summary = bound_summary(&report);
    if let Some(lr) = &local_radius {
        summary.push_str(&format!(
            ", local radius {}",
            lr.epsilon.map_or("none".into(), fmt_scalar)
        ));
    }
    let verdict = Verdict {
        pass: report.pass,
        summary,
    };
    let result = ErrorBoundResult {
        report,
        local_radius,
    };
    emit(
        &g.out,
        "error_bound.json",
        "verify-error-bound",
        Some(&label),
        &verdict,
        &result,
    )?;
    Ok(verdict.pass)
}

fn bound_summary(r: &BoundReport) -> String {
    format!(
        "c_emp={:.6} at eps={} over {} samples, stabilized={}, {} violations",
        r.c_emp,
        fmt_scalar(r.epsilon),
        r.num_samples,
        r.stabilized,
        r.violations.len()
    )
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ModulusResult {
    modulus: ModulusReport,
    holdout: HoldoutReport,
}

fn modulus_check(
    f: &GpMultifunction,
    g: &GlobalOpts,
    holdout: usize,
    factor: f64,
    s: &Settings,
) -> Result<ModulusResult> {
    let cfg = LipschitzSamplerConfig {
        num_pairs: g.samples.unwrap_or(1000),
        master_seed: g.seed,
        ..Default::default()
    };
    let (c, modulus) = estimate_lipschitz_modulus(f, &cfg, s)?;
    let hold_cfg = LipschitzSamplerConfig {
        num_pairs: holdout,
        ..cfg
    };
    let holdout = check_lipschitz_holdout(f, c, factor, &hold_cfg, s)?;
    Ok(ModulusResult { modulus, holdout })
}

fn lipschitz_cmd(g: &GlobalOpts, a: &LipschitzArgs) -> Result<bool> {
    let s = g.settings();
    let l = load_arg(g)?;
    match l.instance {
        SuiteInstance::Avi(inst) => {
            let mut cfg =
                LipschitzCheckConfig::new(a.y.clone().unwrap_or_else(|| vec![0.0; inst.n()]));
            cfg.master_seed = g.seed;
            if let Some(k) = g.samples {
                cfg.samples_per_radius = k;
            }
            let report = verify_upper_lipschitz_inverse(&inst, &cfg, &s)?;
            report.write_trace_csv(&g.out.join("upper_lipschitz_trace.csv"))?;
            let verdict = Verdict {
                pass: report.pass,
                summary: bound_summary(&report),
            };
            emit(
                &g.out,
                "upper_lipschitz.json",
                "verify-lipschitz",
                Some(&l.label),
                &verdict,
                &report,
            )?;
            Ok(verdict.pass)
        }
        SuiteInstance::Gpm(f) => {
            let result = modulus_check(&f, g, a.holdout, a.factor, &s)?;
            let verdict = Verdict {
                pass: result.holdout.pass,
                summary: modulus_summary(&result),
            };
            emit(
                &g.out,
                "lipschitz_modulus.json",
                "verify-lipschitz",
                Some(&l.label),
                &verdict,
                &result,
            )?;
            Ok(verdict.pass)
        }
    }
}

fn modulus_summary(r: &ModulusResult) -> String {
    format!(
        "c_emp={:.6} over {} pairs, holdout max ratio {:.6} over {} pairs, {} violations",
        r.modulus.c_emp,
        r.modulus.accepted_pairs,
        r.holdout.max_ratio,
        r.holdout.pairs,
        r.holdout.violations.len()
    )
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct MinimaxResult {
    minimax: MinimaxReport,
    domain: DomainReport,
}

/// Points `x₀ + ρ·N(0, I)` around a domain witness `x₀`, cycling `ρ` over
/// three scales, so that both members and non-members of the domain occur.
fn minimax_points(
    f: &GpMultifunction,
    count: usize,
    seed: u64,
    s: &Settings,
) -> Result<Vec<Vec<f64>>> {
    let center = graph_witness(f, &s.tol)?.map_or_else(|| vec![0.0; f.n], |(x, _)| x);
    Ok((0..count)
        .map(|i| {
            let mut rng = SplitMix64::new(derive_seed(seed, i as u64));
            let rho = MINIMAX_RADII[i % MINIMAX_RADII.len()];
            center.iter().map(|c| c + rho * rng.normal()).collect()
        })
        .collect())
}

fn minimax_cmd(g: &GlobalOpts) -> Result<bool> {
    let s = g.settings();
    let (label, f) = load_gpm(g)?;
    let xs = minimax_points(&f, g.samples.unwrap_or(MINIMAX_POINTS), g.seed, &s)?;
    let result = MinimaxResult {
        minimax: verify_minimax(&f, &xs, &s.tol)?,
        domain: verify_domain_characterization(&f, &xs, &s.tol)?,
    };
    let verdict = Verdict {
        pass: result.minimax.pass && result.domain.pass,
        summary: format!(
            "max gap {:.3e} over {} points, {} in the domain, {} mismatches",
            result.minimax.max_gap,
            xs.len(),
            result.domain.members,
            result.domain.mismatches
        ),
    };
    emit(
        &g.out,
        "minimax.json",
        "verify-minimax",
        Some(&label),
        &verdict,
        &result,
    )?;
    Ok(verdict.pass)
}

// ---------------------------------------------------------------------------

fn truncation_cmd(g: &GlobalOpts, a: &TruncationArgs) -> Result<bool> {
    let s = g.settings();
    let fam = family(a.spectrum);
    let table: TruncationTable = truncation_study(&fam, &a.dims, &bound_config(g), &s)?;
    let tag = format!("{:?}", a.spectrum).to_lowercase();
    table.write_csv(&g.out.join(format!("truncation_{tag}.csv")))?;
    let pass = table
        .rows
        .iter()
        .all(|r| r.epsilon.is_some() && r.c_emp.is_finite());
    let cs: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("n={}: {:.4}", r.n, r.c_emp))
        .collect();
    let verdict = Verdict {
        pass,
        summary: format!("{tag} spectrum c_emp {}", cs.join(", ")),
    };
    emit(
        &g.out,
        &format!("truncation_{tag}.json"),
        "truncation-study",
        None,
        &verdict,
        &table,
    )?;
    Ok(verdict.pass)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SuiteEntryResult {
    ErrorBound {
        report: BoundReport,
        expected_c: Option<f64>,
        known_solutions_ok: bool,
    },
    LipschitzModulus {
        #[serde(flatten)]
        check: ModulusResult,
        expected_modulus: Option<f64>,
    },
}

#[derive(Serialize)]
struct SuiteRow {
    name: String,
    pass: bool,
    summary: String,
    report: String,
}

#[derive(Serialize)]
struct SuiteSummary {
    seed: u64,
    entries: Vec<SuiteRow>,
    passed: usize,
    failed: usize,
}

fn suite_entry(
    e: &CannedEntry,
    g: &GlobalOpts,
    s: &Settings,
) -> Result<(Verdict, SuiteEntryResult)> {
    match &e.instance {
        SuiteInstance::Avi(inst) => {
            let report = error_bound_report(inst, g, s)?;
            let expected_c = e.expected.error_bound_c;
            let in_band = expected_c.is_none_or(|c| (report.c_emp - c).abs() <= CONSTANT_TOL * c);
            let mut known_solutions_ok = true;
            for x in &e.expected.solutions {
                known_solutions_ok &= is_solution_within(inst, x, 1e-6, &s.tol)?;
            }
            let mut summary = bound_summary(&report);
            if let Some(c) = expected_c {
                summary.push_str(&format!(", expected {}", fmt_scalar(c)));
            }
            let verdict = Verdict {
                pass: report.pass && report.stabilized && in_band && known_solutions_ok,
                summary,
            };
            Ok((
                verdict,
                SuiteEntryResult::ErrorBound {
                    report,
                    expected_c,
                    known_solutions_ok,
                },
            ))
        }
        SuiteInstance::Gpm(f) => {
            let check = modulus_check(f, g, 500, 1.05, s)?;
            let expected_modulus = e.expected.lipschitz_modulus;
            let in_band =
                expected_modulus.is_none_or(|c| (check.modulus.c_emp - c).abs() <= MODULUS_TOL * c);
            let mut summary = modulus_summary(&check);
            if let Some(c) = expected_modulus {
                summary.push_str(&format!(", expected {}", fmt_scalar(c)));
            }
            let verdict = Verdict {
                pass: check.holdout.pass && in_band,
                summary,
            };
            Ok((
                verdict,
                SuiteEntryResult::LipschitzModulus {
                    check,
                    expected_modulus,
                },
            ))
        }
    }
}

fn suite_cmd(g: &GlobalOpts) -> Result<bool> {
    let s = g.settings();
    let mut rows = Vec::new();
    for e in canned_suite() {
        let (verdict, result) = suite_entry(&e, g, &s)?;
        let file = format!("{}.json", e.name);
        emit(&g.out, &file, "suite", Some(&e.name), &verdict, &result)?;
        rows.push(SuiteRow {
            name: e.name,
            pass: verdict.pass,
            summary: verdict.summary,
            report: file,
        });
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    let summary = SuiteSummary {
        seed: g.seed,
        failed: rows.len() - passed,
        passed,
        entries: rows,
    };
    let verdict = Verdict {
        pass: summary.failed == 0,
        summary: format!("{passed} of {} canned entries pass", summary.entries.len()),
    };
    emit(
        &g.out,
        "suite_summary.json",
        "suite",
        None,
        &verdict,
        &summary,
    )?;
    Ok(verdict.pass)
}
