//! Numerical diagnosis of when the saddle-point estimates are trustworthy.
//!
//! Three quantities measured at the saddle drive the verdict:
//!
//! * `κ(j)·a(j)` — must be large for the Gaussian window around the
//!   saddle to dominate the contour integral;
//! * `T_j / a(j)` — the frequency scale of transform decay relative to
//!   the tilted standard deviation; small values keep the third-order
//!   corrections negligible;
//! * the nonlattice sup — the largest modulus ratio
//!   `|V̂(κ - iz/T_j)| / V̂(κ)` sampled over a log-spaced grid of `z`;
//!   values near 1 mean mass recurs at some frequency (lattice-like
//!   structure) and the continuum estimate cannot be trusted there.
//!
//! The scan is a sample, not a proof: if the modulus is still rising at
//! the last grid point the sup has not been bracketed, and the check
//! refuses to classify rather than guessing.

use serde::Serialize;

use crate::laplace;
use crate::measure::MeasureSpec;
use crate::saddle::{self, SaddleError, SaddleReport};

/// Log-spaced scan grid: `z` runs from `gamma` to `z_max_mult * gamma`.
#[derive(Debug, Clone, Copy)]
pub struct ZGrid {
    pub z_max_mult: f64,
    pub points: usize,
}

impl Default for ZGrid {
    fn default() -> Self {
        ZGrid { z_max_mult: 1e3, points: 200 }
    }
}

/// Classification thresholds (defaults used throughout the CLI).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Thresholds {
    /// `T_j/a(j)` must fall below this for the tight regime.
    pub tj_over_aj_max: f64,
    /// Sups at or above this mean the frequency scan found near-total
    /// modulus recurrence: no regime is safe.
    pub sup_max: f64,
    /// `κ·a(j)` must exceed this for the tight regime.
    pub kappa_a_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { tj_over_aj_max: 0.2, sup_max: 0.98, kappa_a_min: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// All diagnostics comfortable: the plain estimate carries its full
    /// error bound.
    AOk,
    /// Saddle solved and the scan found genuine decay, but the scales are
    /// not yet in the comfortable range; estimates remain usable with
    /// weaker guarantees.
    BOk,
    /// Modulus recurrence near 1: the estimate's error control fails.
    Suspect,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanPoint {
    pub z: f64,
    /// Frequency `u = z / T_j`.
    pub u: f64,
    /// `|V̂(κ - iu)| / V̂(κ)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub j: u64,
    pub t: f64,
    pub kappa: f64,
    pub a_j: f64,
    pub t_j: f64,
    pub kappa_a: f64,
    pub tj_over_aj: f64,
    pub gamma: f64,
    pub nonlattice_sup: f64,
    /// `z` at which the sup was attained.
    pub sup_at_z: f64,
    pub regime: Regime,
    pub thresholds: Thresholds,
    pub scan: Vec<ScanPoint>,
}

#[derive(Debug)]
pub enum ConditionError {
    /// The modulus was still rising at the last scan point, so the sup
    /// over `z ≥ γ` has not been bracketed.
    ScanInconclusive { z_max: f64, last_ratio: f64 },
    Saddle(SaddleError),
    BadInput(String),
}

impl std::fmt::Display for ConditionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConditionError::ScanInconclusive { z_max, last_ratio } => write!(
                f,
                "modulus ratio still rising at z = {z_max} (ratio {last_ratio}); \
                 sup not bracketed — extend the scan"
            ),
            ConditionError::Saddle(e) => write!(f, "{e}"),
            ConditionError::BadInput(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for ConditionError {}

impl From<SaddleError> for ConditionError {
    fn from(e: SaddleError) -> Self {
        ConditionError::Saddle(e)
    }
}

impl From<laplace::LaplaceError> for ConditionError {
    fn from(e: laplace::LaplaceError) -> Self {
        ConditionError::Saddle(SaddleError::Laplace(e))
    }
}

/// Run the full diagnosis at `(j, t)` with scan start `gamma`.
pub fn check_conditions(
    spec: &MeasureSpec,
    j: u64,
    t: f64,
    gamma: f64,
    grid: Option<ZGrid>,
) -> Result<ConditionReport, ConditionError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(ConditionError::BadInput(format!(
            "gamma must be finite and > 0, got {gamma}"
        )));
    }
    let grid = grid.unwrap_or_default();
    if grid.points < 2 || !(grid.z_max_mult > 1.0) {
        return Err(ConditionError::BadInput(
            "scan grid needs at least 2 points and z_max_mult > 1".into(),
        ));
    }
    let report = saddle::solve_kappa(spec, j, t)?;
    let scan = scan_ratio(spec, &report, gamma, &grid)?;

    let mut sup = f64::NEG_INFINITY;
    let mut sup_at_z = gamma;
    for p in &scan {
        if p.ratio > sup {
            sup = p.ratio;
            sup_at_z = p.z;
        }
    }
    let n = scan.len();
    if n >= 2 && scan[n - 1].ratio > scan[n - 2].ratio * (1.0 + 1e-9) {
        return Err(ConditionError::ScanInconclusive {
            z_max: scan[n - 1].z,
            last_ratio: scan[n - 1].ratio,
        });
    }

    let th = Thresholds::default();
    let tj_over_aj = report.t_j / report.a_j;
    let regime = if sup >= th.sup_max {
        Regime::Suspect
    } else if tj_over_aj < th.tj_over_aj_max && report.kappa_a > th.kappa_a_min {
        Regime::AOk
    } else {
        Regime::BOk
    };

    Ok(ConditionReport {
        j,
        t,
        kappa: report.kappa,
        a_j: report.a_j,
        t_j: report.t_j,
        kappa_a: report.kappa_a,
        tj_over_aj,
        gamma,
        nonlattice_sup: sup,
        sup_at_z,
        regime,
        thresholds: th,
        scan,
    })
}

fn scan_ratio(
    spec: &MeasureSpec,
    report: &SaddleReport,
    gamma: f64,
    grid: &ZGrid,
) -> Result<Vec<ScanPoint>, ConditionError> {
    let n = grid.points;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let z = gamma * grid.z_max_mult.powf(i as f64 / (n - 1) as f64);
        let u = z / report.t_j;
        let c = laplace::laplace_complex(
            spec,
            num_complex::Complex64::new(report.kappa, -u),
        )?;
        let ratio = (c.ln_mod - report.eval.lambda).exp();
        out.push(ScanPoint { z, u, ratio });
    }
    Ok(out)
}

/// Scale ratios for the unit affine family in the `t ≫ j` regime, where
/// `a(j) → t·j^{-1/2}`, `κ(j)a(j) → √j` and `T_j → 7t/j`.
///
/// Returns `(a_j_ratio, kappa_a_ratio, tj_ratio)`, each tending to 1.
pub fn laguerre_case1_rates(j: u64, t: f64) -> Result<(f64, f64, f64), SaddleError> {
    let spec = MeasureSpec::affine(1.0, 1.0).expect("unit affine spec is valid");
    let r = saddle::solve_kappa(&spec, j, t)?;
    let jf = j as f64;
    let a_ratio = r.a_j / (t / jf.sqrt());
    let ka_ratio = r.kappa_a / jf.sqrt();
    let tj_ratio = r.t_j / (7.0 * t / jf);
    Ok((a_ratio, ka_ratio, tj_ratio))
}
