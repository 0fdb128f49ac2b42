//! First-order asymptotic estimates of `V^{*(j)}(t)`.
//!
//! Every estimate is assembled on the log scale, and always in the same
//! order: the exponent `j·λ(κ) + t·κ` first (its two halves routinely
//! reach `10⁵` while their sum is the meaningful scale), then the
//! polynomial prefactors subtracted from it.
//!
//! Two headline formulas share that core and differ only in how the
//! prefactor is grouped:
//!
//! * [`thm_a`] — `exp(jλ(κ) + tκ) / (κ · a(j) · √(2π))`, the form suited
//!   to sweeps where `t/j → ∞` and the saddle `κ(j,t)` drifts to `0`;
//! * [`thm_b`] — the same quantity written
//!   `exp(jλ(κ) + tκ) / (κ √(2πλ″(κ)j))`, the fixed-ratio (`t ≍ j`)
//!   reading where `κ(j)` converges; with `a(j) = (jλ″(κ))^{1/2}` the two
//!   expressions are algebraically identical, so the tags record intent,
//!   not different numbers.
//!
//! On top of these sit the linear-growth corollary (argument `αj + y(j)`
//! with a Gaussian displacement penalty and, for `y ~ c·j^{2/3}`, a
//! third-cumulant correction), the constancy threshold at which the
//! convolution power stops growing (where the estimate converges to an
//! explicit constant), and the polynomial-regime expansion
//! `t^j a^j / j! · exp(-Σ (ι_k/k) j^{k+1}/t^k)` driven by the symbolic
//! coefficients from [`expansion_coeffs`].

use crate::conditions::ConditionReport;
use crate::laplace;
use crate::measure::MeasureSpec;
use crate::saddle::{solve_kappa, solve_theta_star, SaddleError, SaddleReport};
use statrs::function::gamma::ln_gamma;

pub use crate::series::{expansion_coeffs, ExpansionCoefficients, SeriesError};

/// Which formula produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formula {
    ThmA,
    ThmB,
    CorLinGrowthSmallY,
    CorLinGrowthYC23,
    CorCLT,
    LinearExpansion,
}

impl Formula {
    pub fn as_str(&self) -> &'static str {
        match self {
            Formula::ThmA => "thm-a",
            Formula::ThmB => "thm-b",
            Formula::CorLinGrowthSmallY => "cor-lin-growth-small-y",
            Formula::CorLinGrowthYC23 => "cor-lin-growth-y-c-j23",
            Formula::CorCLT => "cor-clt",
            Formula::LinearExpansion => "linear-expansion",
        }
    }
}

/// One asymptotic estimate of `V^{*(j)}(t)` on the log scale.
///
/// `report` carries the saddle data the estimate was assembled from
/// (absent for the expansion formula, which needs no transform); for the
/// growth-corollary branches it is the slope solve at argument `αj`.
/// `diagnostics` is attached by callers that also run the condition
/// checks.  `warning` flags regime abuse that the formulas do not refuse
/// but where the dropped remainder need not be small.
#[derive(Debug, Clone)]
pub struct AsymptoticEstimate {
    pub log_value: f64,
    pub formula: Formula,
    pub report: Option<SaddleReport>,
    pub diagnostics: Option<ConditionReport>,
    pub warning: Option<String>,
}

#[derive(Debug)]
pub enum AsymError {
    Saddle(SaddleError),
    BadInput(String),
}

impl std::fmt::Display for AsymError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AsymError::Saddle(e) => write!(f, "{e}"),
            AsymError::BadInput(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for AsymError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            AsymError::Saddle(e) => Some(e),
            AsymError::BadInput(_) => None,
        }
    }
}

impl From<SaddleError> for AsymError {
    fn from(e: SaddleError) -> Self {
        AsymError::Saddle(e)
    }
}

const LN_2PI: f64 = 1.8378770664093453; // ln(2π)

/// The shared exponent `j·λ(κ) + t·κ`.
fn log_core(report: &SaddleReport) -> f64 {
    report.j as f64 * report.eval.lambda + report.t * report.kappa
}

fn thm_a_log(report: &SaddleReport) -> f64 {
    log_core(report) - report.kappa.ln() - report.a_j.ln() - 0.5 * LN_2PI
}

/// Single arithmetic path for the fixed-ratio prefactor; the growth
/// corollary reuses it verbatim so its `y = 0` branch is bit-identical
/// to [`thm_b`].
fn thm_b_log(report: &SaddleReport) -> f64 {
    let sigma2 = report.eval.lambda2;
    log_core(report)
        - report.kappa.ln()
        - 0.5 * (LN_2PI + sigma2.ln() + (report.j as f64).ln())
}

/// Saddle-point estimate in the drifting-saddle form
/// `exp(jλ(κ)+tκ) / (κ a(j) √(2π))`.
pub fn thm_a(spec: &MeasureSpec, j: u64, t: f64) -> Result<AsymptoticEstimate, AsymError> {
    let report = solve_kappa(spec, j, t)?;
    Ok(AsymptoticEstimate {
        log_value: thm_a_log(&report),
        formula: Formula::ThmA,
        report: Some(report),
        diagnostics: None,
        warning: None,
    })
}

/// Saddle-point estimate in the fixed-ratio form
/// `exp(jλ(κ)+tκ) / (κ √(2πλ″(κ)j))`, with `κ(j)` and `λ″(κ(j))` as the
/// finite-`j` stand-ins for their limits.
pub fn thm_b(spec: &MeasureSpec, j: u64, t: f64) -> Result<AsymptoticEstimate, AsymError> {
    let report = solve_kappa(spec, j, t)?;
    Ok(AsymptoticEstimate {
        log_value: thm_b_log(&report),
        formula: Formula::ThmB,
        report: Some(report),
        diagnostics: None,
        warning: None,
    })
}

/// Which displacement regime the linear-growth estimate assumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthBranch {
    /// `y(j) = o(j^{2/3})`: pure Gaussian displacement penalty.
    SmallY,
    /// `y(j) ~ c·j^{2/3}`: adds the third-cumulant correction
    /// `exp(-c³λ‴(θ)/(6σ⁶))`.
    CJ23 { c: f64 },
}

/// Estimate of `V^{*(j)}(αj + y(j))` for a fixed admissible slope `α`:
/// the fixed-ratio formula at the slope solve `-λ'(θ) = α`, times the
/// Gaussian factor `exp(-y²/(2σ²j))` for the displacement, and for the
/// `c·j^{2/3}` branch the third-cumulant correction on top.
pub fn cor_lin_growth(
    spec: &MeasureSpec,
    alpha: f64,
    y_of_j: &dyn Fn(u64) -> f64,
    j: u64,
    branch: GrowthBranch,
) -> Result<AsymptoticEstimate, AsymError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(AsymError::BadInput(format!(
            "slope alpha must be finite and > 0, got {alpha}"
        )));
    }
    let y = y_of_j(j);
    if !y.is_finite() {
        return Err(AsymError::BadInput(format!("displacement y(j) must be finite, got {y}")));
    }
    let t = alpha * j as f64 + y;
    if !(t > 0.0) {
        return Err(AsymError::BadInput(format!(
            "argument alpha*j + y(j) = {t} must be positive"
        )));
    }
    // θ depends on the slope only; the report records that solve.
    let report = solve_kappa(spec, j, alpha * j as f64)?;
    let sigma2 = report.eval.lambda2;
    let mut shifted = report.clone();
    shifted.t = t;
    let mut log_value = thm_b_log(&shifted) - y * y / (2.0 * sigma2 * j as f64);
    let formula = match branch {
        GrowthBranch::SmallY => Formula::CorLinGrowthSmallY,
        GrowthBranch::CJ23 { c } => {
            if !c.is_finite() {
                return Err(AsymError::BadInput("branch constant c must be finite".into()));
            }
            let lambda3 = report.eval.lambda3;
            log_value -= c.powi(3) * lambda3 / (6.0 * sigma2.powi(3));
            Formula::CorLinGrowthYC23
        }
    };
    Ok(AsymptoticEstimate {
        log_value,
        formula,
        report: Some(report),
        diagnostics: None,
        warning: None,
    })
}

/// The constancy threshold: the argument scale `t(j)` at which
/// `V^{*(j)}` stops growing, and the constant it converges to there.
///
/// `t` solves `-λ'(θ_j) = t/j` with
/// `θ_j = θ* - (log j - y)/(2jθ*σ²)` (the admissible `o(1)` slack is
/// fixed to zero), `limit = (2πσ²)^{-1/2} e^{-y/2}/θ*` with
/// `σ² = λ″(θ*)`, and the estimate is the fixed-ratio formula at
/// `(j, t)`, whose value approaches `limit` as `j → ∞`.
pub fn cor_clt(
    spec: &MeasureSpec,
    y: f64,
    j: u64,
) -> Result<(f64, f64, AsymptoticEstimate), AsymError> {
    if !y.is_finite() {
        return Err(AsymError::BadInput(format!("offset y must be finite, got {y}")));
    }
    if j < 1 {
        return Err(AsymError::BadInput("power j must be >= 1".into()));
    }
    let star = solve_theta_star(spec)?;
    let theta = star.theta;
    let sigma2 = star.sigma2;
    let theta_j = theta - ((j as f64).ln() - y) / (2.0 * j as f64 * theta * sigma2);
    let slope = laplace::neg_slope_at(spec, theta_j)
        .map_err(|e| AsymError::Saddle(SaddleError::Laplace(e)))?;
    let t = j as f64 * slope;
    let mut estimate = thm_b(spec, j, t)?;
    estimate.formula = Formula::CorCLT;
    let limit = (-0.5 * (LN_2PI + sigma2.ln()) - theta.ln() - y / 2.0).exp();
    Ok((t, limit, estimate))
}

/// Polynomial-regime expansion
/// `log V^{*(j)}(t) ≈ j log t + j log a - log j! - Σ_{k≤p} (ι_k/k) j^{k+1}/t^k`.
///
/// Meaningful when `j` grows no faster than `t^{(p+1)/(p+2)}`; that is
/// not enforced, but a warning is attached once `j^{p+2}/t^{p+1}`
/// exceeds `0.1`.
///
/// Panics if `a ≤ 0`, `j < 1`, or `t ≤ 0`.
pub fn linear_expansion_estimate(
    a: f64,
    coeffs: &ExpansionCoefficients,
    j: u64,
    t: f64,
) -> AsymptoticEstimate {
    assert!(a > 0.0 && a.is_finite(), "slope a must be finite and positive");
    assert!(j >= 1, "power j must be >= 1");
    assert!(t > 0.0 && t.is_finite(), "argument t must be finite and positive");
    let jf = j as f64;
    let mut log_value = jf * t.ln() + jf * a.ln() - ln_gamma(jf + 1.0);
    for (k1, iota) in coeffs.iota.iter().enumerate() {
        let k = (k1 + 1) as f64;
        log_value -= iota / k * jf.powi(k1 as i32 + 2) / t.powi(k1 as i32 + 1);
    }
    let p = coeffs.p as f64;
    let regime = ((p + 2.0) * jf.ln() - (p + 1.0) * t.ln()).exp();
    let warning = if regime > 0.1 {
        Some(format!(
            "expansion regime stretched: j^(p+2)/t^(p+1) = {regime:.3e} exceeds 0.1, \
             the dropped remainder need not be small"
        ))
    } else {
        None
    };
    AsymptoticEstimate {
        log_value,
        formula: Formula::LinearExpansion,
        report: None,
        diagnostics: None,
        warning,
    }
}

/// Convenience heuristic for sweeps (non-normative): if every `t/j` in
/// the sweep lies within 10% of the midpoint of their range, the sweep
/// reads as fixed-ratio and [`thm_b`] is suggested; otherwise [`thm_a`].
///
/// Panics on an empty sweep.
pub fn auto_formula(points: &[(u64, f64)]) -> Formula {
    assert!(!points.is_empty(), "empty sweep has no natural formula");
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (j, t) in points {
        let r = t / (*j).max(1) as f64;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let mid = 0.5 * (lo + hi);
    if hi <= 1.1 * mid && lo >= 0.9 * mid {
        Formula::ThmB
    } else {
        Formula::ThmA
    }
}
