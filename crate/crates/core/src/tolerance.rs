//! Numerical thresholds shared across the crate.
//!
//! Rank decisions on recorded data use a threshold relative to the largest
//! singular value of the matrix under test. The default can be overridden
//! with the `DDX_DATA_RTOL` environment variable, read once per process.

use std::sync::OnceLock;

/// Environment variable overriding [`data_rtol`].
pub const DATA_RTOL_ENV: &str = "DDX_DATA_RTOL";

/// Relative singular-value threshold for ranks of data matrices.
pub const DEFAULT_DATA_RTOL: f64 = 1e-9;

/// Relative residual threshold for "vector lies in subspace" on data.
pub const MEMBERSHIP_RTOL: f64 = 1e-8;

/// Residual threshold for subspace inclusion between orthonormal bases.
pub const SUBSPACE_TOL: f64 = 1e-8;

/// Residual threshold for "data is a trajectory of this system".
pub const CONSISTENCY_RTOL: f64 = 1e-8;

/// Relative threshold for the PBH rank test.
pub const PBH_RTOL: f64 = 1e-8;

/// Relative threshold when growing reachable subspaces.
pub const REACH_RTOL: f64 = 1e-9;

/// Eigenvalues with modulus within this band of 1 are treated as marginal.
pub const UNIT_CIRCLE_BAND: f64 = 1e-9;

/// Strictness margin for positive definiteness of synthesis certificates.
pub const LMI_MARGIN: f64 = 1e-7;

static DATA_RTOL: OnceLock<f64> = OnceLock::new();

/// Relative rank threshold for data matrices.
pub fn data_rtol() -> f64 {
    *DATA_RTOL.get_or_init(|| {
        std::env::var(DATA_RTOL_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v > 0.0)
            .unwrap_or(DEFAULT_DATA_RTOL)
    })
}
