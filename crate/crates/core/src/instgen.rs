//! Instance generation, the canned suite, and versioned JSON storage.
//!
//! Every random draw goes through [`SplitMix64`](crate::rng::SplitMix64), so
//! a `(parameters, seed)` pair fixes an instance bit for bit on any platform.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::avi::AviInstance;
use crate::error::{Error, Result};
use crate::gpm::{GpMultifunction, GpRow};
use crate::linalg::{dot, identity, mat_vec, transpose, Matrix};
use crate::polyhedra::{Constraint, PolyhedralSet};
use crate::rng::SplitMix64;

pub const SCHEMA_VERSION: &str = "1";

const MAX_N: usize = 50;
const MAX_M: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spectrum {
    /// `μᵢ = 1/i`
    Harmonic,
    /// `μᵢ = 1`
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QRule {
    /// `qᵢ = −μᵢ`, so the unique solution is `(1, …, 1)`.
    UnitSolution,
}

/// `M_n = diag(μ₁, …, μ_n)`, `q_n` from the q rule, `C_n = ℝⁿ₊`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationFamily {
    pub spectrum: Spectrum,
    pub q_rule: QRule,
}

impl TruncationFamily {
    pub fn new(spectrum: Spectrum) -> Self {
        Self {
            spectrum,
            q_rule: QRule::UnitSolution,
        }
    }

    pub fn mu(&self, n: usize) -> Vec<f64> {
        (1..=n)
            .map(|i| match self.spectrum {
                Spectrum::Harmonic => 1.0 / i as f64,
                Spectrum::Constant => 1.0,
            })
            .collect()
    }

    pub fn instance(&self, n: usize) -> Result<AviInstance> {
        if n == 0 || n > MAX_N {
            return Err(Error::CapExceeded {
                what: "truncation dimension",
                value: n,
                cap: MAX_N,
            });
        }
        let mu = self.mu(n);
        let mut m = vec![vec![0.0; n]; n];
        for (i, &v) in mu.iter().enumerate() {
            m[i][i] = v;
        }
        let q = match self.q_rule {
            QRule::UnitSolution => mu.iter().map(|v| -v).collect(),
        };
        AviInstance::new(m, q, PolyhedralSet::orthant(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    /// `M = AᵀA + I`
    StronglyMonotone,
    /// `M = B − Bᵀ`
    MonotoneSkew,
    /// `M` with independent Gaussian entries
    Indefinite,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomAviParams {
    pub n: usize,
    pub m: usize,
    pub monotonicity: Monotonicity,
    /// Start C with a simplex around the witness so that it is bounded;
    /// needs `m ≥ n + 1`.
    #[serde(default)]
    pub bounded: bool,
}

fn gaussian_matrix(rng: &mut SplitMix64, rows: usize, cols: usize, s: f64) -> Matrix {
    (0..rows)
        .map(|_| rng.normal_vec(cols).into_iter().map(|v| v * s).collect())
        .collect()
}

pub fn generate_random_avi(params: &RandomAviParams, seed: u64) -> Result<AviInstance> {
    let RandomAviParams {
        n,
        m,
        monotonicity,
        bounded,
    } = *params;
    if n == 0 || n > MAX_N {
        return Err(Error::CapExceeded {
            what: "dimension",
            value: n,
            cap: MAX_N,
        });
    }
    if m > MAX_M {
        return Err(Error::CapExceeded {
            what: "constraints of C",
            value: m,
            cap: MAX_M,
        });
    }
    if bounded && m < n + 1 {
        return Err(Error::InvalidInput(format!(
            "a bounded C in dimension {n} needs at least {} rows",
            n + 1
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let s = 1.0 / (n as f64).sqrt();
    let a = gaussian_matrix(&mut rng, n, n, s);
    let m_op = match monotonicity {
        Monotonicity::StronglyMonotone => {
            let at = transpose(&a, n);
            let mut g: Matrix = at.iter().map(|row| mat_vec(&at, row)).collect();
            for (i, row) in g.iter_mut().enumerate() {
                row[i] += 1.0;
            }
            g
        }
        Monotonicity::MonotoneSkew => {
            let at = transpose(&a, n);
            a.iter()
                .zip(&at)
                .map(|(r, c)| r.iter().zip(c).map(|(x, y)| x - y).collect())
                .collect()
        }
        Monotonicity::Indefinite => a,
    };
    let q = rng.normal_vec(n);
    let witness = rng.normal_vec(n);
    let mut ineq = Vec::with_capacity(m);
    if bounded {
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = -1.0;
            let b = dot(&e, &witness) + rng.uniform_range(0.1, 1.0);
            ineq.push(Constraint::new(e, b));
        }
        let ones = vec![s; n];
        let b = dot(&ones, &witness) + rng.uniform_range(0.1, 1.0);
        ineq.push(Constraint::new(ones, b));
    }
    while ineq.len() < m {
        let g = rng.normal_vec(n);
        let nrm = crate::linalg::norm(&g).max(1e-12);
        let a: Vec<f64> = g.iter().map(|v| v / nrm).collect();
        let b = dot(&a, &witness) + rng.uniform_range(0.1, 1.0);
        ineq.push(Constraint::new(a, b));
    }
    AviInstance::new(
        m_op,
        q,
        PolyhedralSet {
            n,
            ineq,
            eq: vec![],
        },
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomGpmParams {
    pub n: usize,
    pub r: usize,
    /// Equality rows.
    pub k: usize,
    /// Coupled inequality rows.
    pub p: usize,
    /// Add `±yⱼ` rows so that every section is bounded.
    #[serde(default)]
    pub box_rows: bool,
}

impl RandomGpmParams {
    /// Sizes drawn from the seed: `n, r ∈ 1..=max_dim`, `k, p ∈ 0..=max_dim`.
    /// With `bounded`, `k ≤ r` keeps `A₂` onto and box rows bound the sections.
    pub fn sample(seed: u64, max_dim: usize, bounded: bool) -> Self {
        let mut rng = SplitMix64::new(seed ^ 0x5e_ed0f_5123);
        let n = 1 + rng.below(max_dim);
        let r = 1 + rng.below(max_dim);
        let k = if bounded {
            rng.below(r)
        } else {
            rng.below(max_dim + 1)
        };
        let p = rng.below(max_dim + 1);
        Self {
            n,
            r,
            k,
            p,
            box_rows: bounded,
        }
    }
}

/// Random data around a witness `(x₀, y₀)` of the graph, so `dom F ≠ ∅`.
pub fn generate_random_gpm(params: &RandomGpmParams, seed: u64) -> Result<GpMultifunction> {
    let RandomGpmParams {
        n,
        r,
        k,
        p,
        box_rows,
    } = *params;
    for (what, v) in [
        ("dimension of x", n),
        ("dimension of y", r),
        ("equality rows", k),
        ("inequality rows", p),
    ] {
        if v > MAX_N {
            return Err(Error::CapExceeded {
                what,
                value: v,
                cap: MAX_N,
            });
        }
    }
    let mut rng = SplitMix64::new(seed);
    let a1 = gaussian_matrix(&mut rng, k, n, 1.0);
    let a2 = gaussian_matrix(&mut rng, k, r, 1.0);
    let x0 = rng.normal_vec(n);
    let y0 = rng.normal_vec(r);
    let z: Vec<f64> = mat_vec(&a1, &x0)
        .iter()
        .zip(mat_vec(&a2, &y0))
        .map(|(a, b)| a + b)
        .collect();
    let mut rows = Vec::new();
    for _ in 0..p {
        let xstar = rng.normal_vec(n);
        let ystar = rng.normal_vec(r);
        let b = dot(&xstar, &x0) + dot(&ystar, &y0) + rng.uniform_range(0.1, 1.0);
        rows.push(GpRow { xstar, ystar, b });
    }
    if box_rows {
        for j in 0..r {
            for sign in [1.0, -1.0] {
                let xstar: Vec<f64> = rng.normal_vec(n).into_iter().map(|v| 0.2 * v).collect();
                let mut ystar = vec![0.0; r];
                ystar[j] = sign;
                let b = dot(&xstar, &x0) + sign * y0[j] + rng.uniform_range(0.5, 2.0);
                rows.push(GpRow { xstar, ystar, b });
            }
        }
    }
    GpMultifunction::new(n, r, a1, a2, z, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SuiteInstance {
    Avi(AviInstance),
    Gpm(GpMultifunction),
}

/// What a suite entry is known to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedProperties {
    /// Exact local error-bound constant, when derivable by hand.
    pub error_bound_c: Option<f64>,
    /// Exact Lipschitz modulus of a multifunction, when derivable by hand.
    pub lipschitz_modulus: Option<f64>,
    /// A few known solutions (AVI entries).
    pub solutions: Vec<Vec<f64>>,
    pub bounded_sections: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CannedEntry {
    pub name: String,
    pub instance: SuiteInstance,
    pub expected: ExpectedProperties,
}

fn avi_entry(
    name: &str,
    m: Matrix,
    q: Vec<f64>,
    c: PolyhedralSet,
    ebc: Option<f64>,
    sols: Vec<Vec<f64>>,
) -> CannedEntry {
    CannedEntry {
        name: name.into(),
        instance: SuiteInstance::Avi(AviInstance::new(m, q, c).expect("canned AVI data is valid")),
        expected: ExpectedProperties {
            error_bound_c: ebc,
            lipschitz_modulus: None,
            solutions: sols,
            bounded_sections: false,
        },
    }
}

fn gpm_entry(name: &str, f: GpMultifunction, modulus: f64) -> CannedEntry {
    CannedEntry {
        name: name.into(),
        instance: SuiteInstance::Gpm(f),
        expected: ExpectedProperties {
            error_bound_c: None,
            lipschitz_modulus: Some(modulus),
            solutions: vec![],
            bounded_sections: true,
        },
    }
}

/// The worked examples: small AVIs with hand-derived solution sets and
/// constants, three multifunctions with known moduli, and the first
/// truncations of both spectra.
pub fn canned_suite() -> Vec<CannedEntry> {
    let mut out = vec![
        avi_entry(
            "lcp1d",
            vec![vec![1.0]],
            vec![-1.0],
            PolyhedralSet::orthant(1),
            Some(1.0),
            vec![vec![1.0]],
        ),
        avi_entry(
            "ray2d",
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, -1.0],
            PolyhedralSet::orthant(2),
            Some(1.0),
            vec![vec![0.0, 1.0], vec![5.0, 1.0]],
        ),
        avi_entry(
            "zero_interval",
            vec![vec![0.0]],
            vec![0.0],
            PolyhedralSet::boxed(&[0.0], &[1.0]),
            Some(1.0),
            vec![vec![0.0], vec![0.5], vec![1.0]],
        ),
        avi_entry(
            "zero_triangle",
            vec![vec![0.0; 2]; 2],
            vec![0.0; 2],
            PolyhedralSet::orthant(2).with_ineq(vec![1.0, 1.0], 1.0),
            Some(1.0),
            vec![vec![0.0, 0.0], vec![0.25, 0.5]],
        ),
        avi_entry(
            "identity_lcp3",
            identity(3),
            vec![-1.0; 3],
            PolyhedralSet::orthant(3),
            Some(1.0),
            vec![vec![1.0; 3]],
        ),
        avi_entry(
            "skew2d",
            vec![vec![0.0, 1.0], vec![-1.0, 0.0]],
            vec![-1.0, 0.0],
            PolyhedralSet::orthant(2),
            None,
            vec![vec![0.0, 1.0], vec![0.0, 3.0]],
        ),
    ];
    for (name, spectrum, c) in [
        ("truncation_harmonic_5", Spectrum::Harmonic, None),
        ("truncation_constant_5", Spectrum::Constant, Some(1.0)),
    ] {
        let inst = TruncationFamily::new(spectrum)
            .instance(5)
            .expect("n = 5 is within caps");
        out.push(CannedEntry {
            name: name.into(),
            instance: SuiteInstance::Avi(inst),
            expected: ExpectedProperties {
                error_bound_c: c,
                lipschitz_modulus: None,
                solutions: vec![vec![1.0; 5]],
                bounded_sections: false,
            },
        });
    }
    let neg_i: Matrix = identity(2)
        .into_iter()
        .map(|r| r.into_iter().map(|v| -v).collect())
        .collect();
    out.push(gpm_entry(
        "gpm_identity",
        GpMultifunction::new(2, 2, neg_i, identity(2), vec![0.0; 2], vec![]).expect("valid"),
        1.0,
    ));
    out.push(gpm_entry(
        "gpm_interval",
        GpMultifunction::new(
            1,
            1,
            vec![],
            vec![],
            vec![],
            vec![
                GpRow {
                    xstar: vec![-1.0],
                    ystar: vec![1.0],
                    b: 0.0,
                },
                GpRow {
                    xstar: vec![-1.0],
                    ystar: vec![-1.0],
                    b: 0.0,
                },
            ],
        )
        .expect("valid"),
        1.0,
    ));
    out.push(gpm_entry(
        "gpm_scaled",
        GpMultifunction::new(1, 1, vec![vec![-2.0]], vec![vec![1.0]], vec![0.0], vec![])
            .expect("valid"),
        2.0,
    ));
    out
}

pub fn canned_entry(name: &str) -> Option<CannedEntry> {
    canned_suite().into_iter().find(|e| e.name == name)
}

// ---------------------------------------------------------------------------
// storage

/// Pretty JSON with a top-level `"schema_version": "1"`.
pub fn to_versioned_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("schema_version".into(), SCHEMA_VERSION.into());
        }
        None => return Err(Error::Schema("top-level value must be an object".into())),
    }
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Schema(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Parses JSON written by [`to_versioned_json`]. A missing version is read as
/// the current one; any other version is rejected.
pub fn from_versioned_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if let Some(obj) = v.as_object_mut() {
        if let Some(ver) = obj.remove("schema_version") {
            if ver.as_str() != Some(SCHEMA_VERSION) {
                return Err(Error::Schema(format!(
                    "unsupported schema_version {ver}, expected \"{SCHEMA_VERSION}\""
                )));
            }
        }
    }
    serde_json::from_value(v).map_err(|e| Error::Schema(e.to_string()))
}

pub fn save<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, to_versioned_json(value)?)?;
    Ok(())
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_versioned_json(&fs::read_to_string(path)?)
}

/// Reads either a tagged suite instance or a bare AVI / multifunction object.
pub fn load_instance(path: &Path) -> Result<SuiteInstance> {
    let text = fs::read_to_string(path)?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
    if v.get("kind").is_some() {
        from_versioned_json(&text)
    } else if v.get("M").is_some() {
        from_versioned_json(&text).map(SuiteInstance::Avi)
    } else {
        from_versioned_json(&text).map(SuiteInstance::Gpm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeneratorSpec {
    RandomAvi { params: RandomAviParams },
    RandomGpm { params: RandomGpmParams },
    Truncation { family: TruncationFamily, n: usize },
    Canned { entry: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceManifest {
    pub name: String,
    pub seed: u64,
    pub generator: GeneratorSpec,
    /// Instance file, relative to the manifest's parent directory's parent.
    pub path: PathBuf,
}

pub fn regenerate(manifest: &InstanceManifest) -> Result<SuiteInstance> {
    match &manifest.generator {
        GeneratorSpec::RandomAvi { params } => {
            generate_random_avi(params, manifest.seed).map(SuiteInstance::Avi)
        }
        GeneratorSpec::RandomGpm { params } => {
            generate_random_gpm(params, manifest.seed).map(SuiteInstance::Gpm)
        }
        GeneratorSpec::Truncation { family, n } => family.instance(*n).map(SuiteInstance::Avi),
        GeneratorSpec::Canned { entry } => canned_entry(entry)
            .map(|e| e.instance)
            .ok_or_else(|| Error::InvalidInput(format!("no canned entry named {entry}"))),
    }
}

/// Writes `instances/<name>.json` and `manifests/<name>.json` under `root`.
pub fn materialize(
    root: &Path,
    name: &str,
    seed: u64,
    generator: GeneratorSpec,
) -> Result<InstanceManifest> {
    let manifest = InstanceManifest {
        name: name.into(),
        seed,
        generator,
        path: PathBuf::from("instances").join(format!("{name}.json")),
    };
    save(&root.join(&manifest.path), &regenerate(&manifest)?)?;
    save(
        &root.join("manifests").join(format!("{name}.json")),
        &manifest,
    )?;
    Ok(manifest)
}

/// True when regenerating from the manifest reproduces the stored instance
/// file byte for byte.
pub fn verify_manifest(root: &Path, manifest: &InstanceManifest) -> Result<bool> {
    let stored = fs::read(root.join(&manifest.path))?;
    let fresh = to_versioned_json(&regenerate(manifest)?)?;
    Ok(stored == fresh.as_bytes())
}
