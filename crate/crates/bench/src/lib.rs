//! Seeded fixtures shared by the benchmarks.

use avibound::instgen::{generate_random_avi, Monotonicity, RandomAviParams};
use avibound::rng::SplitMix64;
use avibound::{AviInstance, LinearProgram, PolyhedralSet};

/// `m` random halfspaces `⟨a, x⟩ ≤ ⟨a, x₀⟩ + s` around a point `x₀`, cut to
/// the box `[-5, 5]ⁿ` so that the set is a nonempty polytope.
pub fn random_polytope(n: usize, m: usize, seed: u64) -> PolyhedralSet {
    let mut rng = SplitMix64::new(seed);
    let x0 = rng.normal_vec(n);
    let mut set = PolyhedralSet::boxed(&vec![-5.0; n], &vec![5.0; n]);
    for _ in 0..m {
        let a = rng.normal_vec(n);
        let b =
            a.iter().zip(&x0).map(|(ai, xi)| ai * xi).sum::<f64>() + rng.uniform_range(0.1, 1.0);
        set = set.with_ineq(a, b);
    }
    set
}

pub fn random_lp(n: usize, m: usize, seed: u64) -> LinearProgram {
    let set = random_polytope(n, m, seed);
    let mut rng = SplitMix64::new(seed ^ 0xbe4c);
    LinearProgram::over_set(avibound::Sense::Minimize, rng.normal_vec(n), &set)
}

pub fn random_point(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    SplitMix64::new(seed)
        .normal_vec(n)
        .into_iter()
        .map(|v| scale * v)
        .collect()
}

pub fn monotone_avi(n: usize, m: usize, seed: u64) -> AviInstance {
    let params = RandomAviParams {
        n,
        m,
        monotonicity: Monotonicity::StronglyMonotone,
        bounded: m > n,
    };
    generate_random_avi(&params, seed).expect("sizes are within caps")
}
