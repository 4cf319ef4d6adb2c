use serde::{Deserialize, Serialize};

use super::{enumerate_vertices, PolyhedralSet};
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::optkernel::{project, ConstraintSelection};
use crate::settings::{Settings, Tolerances};

/// `(d(x, set), P_set(x))`.
pub fn distance(set: &PolyhedralSet, x: &[f64], tol: &Tolerances) -> Result<(f64, Vec<f64>)> {
    let z = project(set, x, ConstraintSelection::MostViolated, tol)?;
    Ok((dist(x, &z), z))
}

/// Hausdorff distance between two nonempty polyhedra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HausdorffDistance {
    /// Recession cones agree, so the distance is attained over vertices.
    Finite { value: f64 },
    /// Recession cones differ: some direction escapes one set.
    Infinite,
}

impl HausdorffDistance {
    pub fn value(&self) -> f64 {
        match self {
            HausdorffDistance::Finite { value } => *value,
            HausdorffDistance::Infinite => f64::INFINITY,
        }
    }
}

/// Writing `A = conv V + K` and `B = conv W + K` with a common recession
/// cone `K`, `d(v + k, B) ≤ d(v, B)` for `k ∈ K` and `d(·, B)` is convex, so
/// the one-sided suprema are attained at vertices. Different cones give an
/// infinite distance.
pub fn hausdorff(
    a: &PolyhedralSet,
    b: &PolyhedralSet,
    settings: &Settings,
) -> Result<HausdorffDistance> {
    let va = enumerate_vertices(a, settings)?;
    let vb = enumerate_vertices(b, settings)?;
    let same_cone = va.recession_rays.iter().all(|r| b.recedes_along(r, 1e-7))
        && vb.recession_rays.iter().all(|r| a.recedes_along(r, 1e-7));
    if !same_cone {
        return Ok(HausdorffDistance::Infinite);
    }
    let mut h: f64 = 0.0;
    for v in &va.vertices {
        h = h.max(distance(b, v, &settings.tol)?.0);
    }
    for w in &vb.vertices {
        h = h.max(distance(a, w, &settings.tol)?.0);
    }
    Ok(HausdorffDistance::Finite { value: h })
}

/// Distance from `x` to a finite union of polyhedra. Empty pieces are
/// skipped; returns `EmptySet` only if every piece is empty.
pub fn union_distance(pieces: &[PolyhedralSet], x: &[f64], tol: &Tolerances) -> Result<f64> {
    nearest_in_union(pieces, x, tol).map(|(d, _, _)| d)
}

/// `(distance, piece index, nearest point)` for a finite union.
pub fn nearest_in_union(
    pieces: &[PolyhedralSet],
    x: &[f64],
    tol: &Tolerances,
) -> Result<(f64, usize, Vec<f64>)> {
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for (i, p) in pieces.iter().enumerate() {
        match distance(p, x, tol) {
            Ok((d, z)) => {
                if best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
                    best = Some((d, i, z));
                }
            }
            Err(Error::EmptySet) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(Error::EmptySet)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> Settings {
        Settings::default()
    }

    #[test]
    fn distance_examples() {
        let t = Tolerances::default();
        let half = PolyhedralSet::orthant(1);
        let (d, z) = distance(&half, &[-2.0], &t).unwrap();
        assert!((d - 2.0).abs() < 1e-12 && z[0].abs() < 1e-12);
        let (d, z) = distance(&half, &[3.0], &t).unwrap();
        assert!(d == 0.0 && z[0] == 3.0);
        let tri = PolyhedralSet::orthant(2).with_ineq(vec![1.0, 1.0], 1.0);
        let (d, z) = distance(&tri, &[1.0, 1.0], &t).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(dist(&z, &[0.5, 0.5]) < 1e-12);
    }

    #[test]
    fn hausdorff_examples() {
        let sq = PolyhedralSet::boxed(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(hausdorff(&sq, &sq, &s()).unwrap().value(), 0.0);
        let i1 = PolyhedralSet::boxed(&[0.0], &[1.0]);
        let i2 = PolyhedralSet::boxed(&[0.0], &[2.0]);
        assert!((hausdorff(&i1, &i2, &s()).unwrap().value() - 1.0).abs() < 1e-12);
        // oracle: distances between the 4 + 4 shifted corners
        let shifted = PolyhedralSet::boxed(&[1.0, 0.0], &[2.0, 1.0]);
        let c1 = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let c2 = [[1.0, 0.0], [2.0, 0.0], [1.0, 1.0], [2.0, 1.0]];
        let to_box = |p: &[f64; 2], lo: f64| {
            let dx = (lo - p[0]).max(p[0] - (lo + 1.0)).max(0.0);
            let dy = (0.0 - p[1]).max(p[1] - 1.0).max(0.0);
            (dx * dx + dy * dy).sqrt()
        };
        let oracle = c1
            .iter()
            .map(|p| to_box(p, 1.0))
            .chain(c2.iter().map(|p| to_box(p, 0.0)))
            .fold(0.0, f64::max);
        let h = hausdorff(&sq, &shifted, &s()).unwrap().value();
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_of_parallel_rays_is_finite() {
        let r1 = PolyhedralSet::orthant(2).with_eq(vec![0.0, 1.0], 0.0);
        let r2 = PolyhedralSet::orthant(2).with_eq(vec![0.0, 1.0], 1.0);
        let h = hausdorff(&r1, &r2, &s()).unwrap();
        assert!(matches!(h, HausdorffDistance::Finite { .. }));
        assert!((h.value() - 1.0).abs() < 1e-12);
        let seg = PolyhedralSet::boxed(&[0.0, 0.0], &[1.0, 0.0]);
        assert_eq!(
            hausdorff(&r1, &seg, &s()).unwrap(),
            HausdorffDistance::Infinite
        );
    }

    #[test]
    fn union_distance_examples() {
        let t = Tolerances::default();
        let pieces = vec![PolyhedralSet::point(&[0.0]), PolyhedralSet::point(&[2.0])];
        assert!((union_distance(&pieces, &[0.5], &t).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(union_distance(&pieces, &[2.0], &t).unwrap(), 0.0);
        // the ray {(t, 1) : t ≥ 0}
        let ray = vec![PolyhedralSet::orthant(2).with_eq(vec![0.0, 1.0], 1.0)];
        assert!((union_distance(&ray, &[2.0, 1.5], &t).unwrap() - 0.5).abs() < 1e-12);
        let empty = PolyhedralSet::whole_space(1).with_ineq(vec![0.0], -1.0);
        assert_eq!(union_distance(&[empty], &[0.0], &t), Err(Error::EmptySet));
    }
}
