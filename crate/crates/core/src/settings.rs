use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Primal feasibility of constraints.
    pub feas: f64,
    /// Optimality: duality gaps, variational inequality residuals.
    pub opt: f64,
    /// Point and value comparisons.
    pub cmp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas: 1e-9,
            opt: 1e-7,
            cmp: 1e-6,
        }
    }
}

/// Size limits for the combinatorial routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    /// Maximum affine dimension for vertex enumeration.
    pub dim_cap: usize,
    /// Maximum number of inequality rows for vertex enumeration.
    pub row_cap: usize,
    /// Maximum number of constraints of C for active-set enumeration.
    pub active_set_cap: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            dim_cap: 10,
            row_cap: 24,
            active_set_cap: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Settings {
    pub tol: Tolerances,
    pub caps: Caps,
}
