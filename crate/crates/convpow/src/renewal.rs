//! Renewal-function asymptotics from moments of the inter-arrival law.
//!
//! For a renewal process with nonnegative inter-arrival times `ξ` of mean
//! `𝔪 = E[ξ]`, the renewal function `U(t) = 1 + Σ_n P{ξ₁+⋯+ξ_n ≤ t}` is
//! unbounded, nondecreasing, and grows like `t/𝔪` plus a bounded remainder,
//! so its convolution powers fall under the linear-growth expansion
//! machinery in [`crate::series`] / [`crate::asymptotics`].  This module
//! provides the moment-level entry points:
//!
//! * [`renewal_betas`] — moments `β_k` of the remainder `U(y) − y/𝔪`,
//!   expressed in closed form through `E[ξ^{k+2}]`;
//! * [`renewal_b_coeffs`] — the correction coefficients `(b₁, b₂, b₃)` of
//!   `U^{*(j)}(t) ≈ (t^j / (𝔪^j j!)) · exp(b₁ j²/t + b₂ j³/t² + b₃ j⁴/t³)`,
//!   equal to `(−ι₁/1, −ι₂/2, −ι₃/3)` for the reverted series with slope
//!   `1/𝔪` (an identity the tests assert numerically);
//! * [`renewal_asymptotic`] — that estimate assembled on the log scale;
//! * [`build_renewal_grid`] — an honest numerical `U` obtained by solving
//!   the discrete renewal equation `u = δ₀ + f ∗ u` cell by cell, for
//!   cross-checking the estimate against grid convolutions.
//!
//! Only raw moments are required for the analytic path; a concrete
//! inter-arrival distribution is optional and used by the grid builder and
//! the declared-vs-empirical moment check.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{linear_expansion_estimate, AsymptoticEstimate};
use crate::lognum::LogNumber;
use crate::measure::{discretize, GridMeasure, MeasureError, MeasureSpec};
use crate::series::{expansion_coeffs, SeriesError};

// ---------------------------------------------------------------------------
// Errors.
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum RenewalError {
    /// An operation needed `E[ξ^needed]` but only `have` moments were given.
    MissingMoment { needed: usize, have: usize },
    /// The discretized inter-arrival law does not carry unit mass on the
    /// grid (tail truncated, or the spec is not a probability law).
    NotProbability { total: f64 },
    /// The declared moment vector cannot come from any nonnegative random
    /// variable (a Hankel-type determinant is negative).
    Inadmissible(String),
    /// A declared moment disagrees with the attached distribution's grid
    /// moment by more than 1%.
    DistMomentMismatch { order: usize, declared: f64, grid: f64 },
    Measure(MeasureError),
    Series(SeriesError),
    BadInput(String),
}

impl fmt::Display for RenewalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenewalError::MissingMoment { needed, have } => {
                write!(f, "needs E[xi^{needed}] but only {have} moments were supplied")
            }
            RenewalError::NotProbability { total } => {
                write!(f, "inter-arrival law has grid mass {total}, expected 1 (±1e-6)")
            }
            RenewalError::Inadmissible(m) => write!(f, "inadmissible moment vector: {m}"),
            RenewalError::DistMomentMismatch { order, declared, grid } => write!(
                f,
                "declared E[xi^{order}] = {declared} but the attached distribution \
                 has grid moment {grid} (>1% apart)"
            ),
            RenewalError::Measure(e) => write!(f, "measure error: {e}"),
            RenewalError::Series(e) => write!(f, "series error: {e}"),
            RenewalError::BadInput(m) => write!(f, "bad input: {m}"),
        }
    }
}

impl std::error::Error for RenewalError {}

impl From<MeasureError> for RenewalError {
    fn from(e: MeasureError) -> Self {
        RenewalError::Measure(e)
    }
}

impl From<SeriesError> for RenewalError {
    fn from(e: SeriesError) -> Self {
        RenewalError::Series(e)
    }
}

// ---------------------------------------------------------------------------
// Input.
// ---------------------------------------------------------------------------

/// Moment description of the inter-arrival law: `moments[k]` is
/// `E[ξ^{k+1}]`, and `dist` optionally names the law itself so grid
/// cross-checks can be run.
///
/// Constructors validate that the moment vector is realizable by a
/// nonnegative random variable, via the determinants of the small Hankel
/// matrices `[[1, m₁], [m₁, m₂]]`, `[[m₁, m₂], [m₂, m₃]]`, and
/// `[[1, m₁, m₂], [m₁, m₂, m₃], [m₂, m₃, m₄]]` (each must be ≥ 0, up to
/// rounding).  Degenerate laws such as `ξ ≡ const` sit exactly on the
/// boundary and are accepted.
#[derive(Debug, Clone)]
pub struct RenewalInput {
    moments: Vec<f64>,
    dist: Option<MeasureSpec>,
}

/// Serialized form: `{"moments": [m1, m2, ...], "dist": {...}}` with the
/// `dist` value a measure-spec object (same grammar as elsewhere in the
/// CLI) or absent.
#[derive(Serialize, Deserialize)]
struct RenewalJson {
    moments: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dist: Option<serde_json::Value>,
}

impl RenewalInput {
    pub fn new(moments: Vec<f64>, dist: Option<MeasureSpec>) -> Result<Self, RenewalError> {
        if moments.is_empty() {
            return Err(RenewalError::BadInput("at least the mean E[xi] is required".into()));
        }
        if moments.iter().any(|m| !m.is_finite() || *m <= 0.0) {
            return Err(RenewalError::BadInput(
                "moments of a nondegenerate nonnegative variable must be finite and positive"
                    .into(),
            ));
        }
        check_admissible(&moments)?;
        Ok(RenewalInput { moments, dist })
    }

    pub fn from_moments(moments: Vec<f64>) -> Result<Self, RenewalError> {
        Self::new(moments, None)
    }

    /// Parse `{"moments": [...], "dist": optional spec object}`.
    pub fn from_json(text: &str) -> Result<Self, RenewalError> {
        let raw: RenewalJson = serde_json::from_str(text)
            .map_err(|e| RenewalError::BadInput(format!("json: {e}")))?;
        let dist = match raw.dist {
            None => None,
            Some(v) => {
                let spec_text = serde_json::to_string(&v)
                    .map_err(|e| RenewalError::BadInput(format!("json: {e}")))?;
                Some(MeasureSpec::from_json(&spec_text)?)
            }
        };
        Self::new(raw.moments, dist)
    }

    pub fn to_json(&self) -> Result<String, RenewalError> {
        let dist = match &self.dist {
            None => None,
            Some(spec) => {
                let text = spec.to_json()?;
                Some(
                    serde_json::from_str(&text)
                        .map_err(|e| RenewalError::BadInput(format!("json: {e}")))?,
                )
            }
        };
        let raw = RenewalJson { moments: self.moments.clone(), dist };
        serde_json::to_string(&raw).map_err(|e| RenewalError::BadInput(format!("json: {e}")))
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    pub fn dist(&self) -> Option<&MeasureSpec> {
        self.dist.as_ref()
    }

    /// `𝔪 = E[ξ]`.
    pub fn mean(&self) -> f64 {
        self.moments[0]
    }

    /// `E[ξ^k]`, 1-based.
    fn moment(&self, k: usize) -> Result<f64, RenewalError> {
        self.moments
            .get(k - 1)
            .copied()
            .ok_or(RenewalError::MissingMoment { needed: k, have: self.moments.len() })
    }

    /// Check the declared moments against the attached distribution,
    /// discretized at step `h` up to `x_max`: every declared `E[ξ^k]` must
    /// match the grid moment `Σ (ih)^k f_i` within 1%.
    pub fn verify_dist(&self, h: f64, x_max: f64) -> Result<(), RenewalError> {
        let dist = self
            .dist
            .as_ref()
            .ok_or_else(|| RenewalError::BadInput("no distribution attached".into()))?;
        let f = discretize(dist, h, x_max)?;
        let masses: Vec<f64> = (0..f.len()).map(|k| f.mass(k).to_f64()).collect();
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(RenewalError::NotProbability { total });
        }
        for (idx, declared) in self.moments.iter().enumerate() {
            let order = idx + 1;
            let grid: f64 = masses
                .iter()
                .enumerate()
                .map(|(i, m)| (i as f64 * h).powi(order as i32) * m)
                .sum();
            if (grid - declared).abs() > 0.01 * declared.abs() {
                return Err(RenewalError::DistMomentMismatch { order, declared: *declared, grid });
            }
        }
        Ok(())
    }
}

/// Reject moment vectors no nonnegative random variable can produce.
///
/// Checks the leading-principal and shifted Hankel determinants that are
/// computable from at most four moments; a strictly negative value (beyond
/// a rounding allowance proportional to the determinant's term sizes)
/// proves non-realizability, while boundary cases (degenerate laws) pass.
fn check_admissible(m: &[f64]) -> Result<(), RenewalError> {
    if m.len() >= 2 {
        let (m1, m2) = (m[0], m[1]);
        let tol = 1e-12 * (m2 + m1 * m1);
        if m2 - m1 * m1 < -tol {
            return Err(RenewalError::Inadmissible(format!(
                "E[xi^2] = {m2} is below E[xi]^2 = {}",
                m1 * m1
            )));
        }
    }
    if m.len() >= 3 {
        let (m1, m2, m3) = (m[0], m[1], m[2]);
        let tol = 1e-12 * (m1 * m3 + m2 * m2);
        if m1 * m3 - m2 * m2 < -tol {
            return Err(RenewalError::Inadmissible(format!(
                "E[xi]·E[xi^3] = {} is below E[xi^2]^2 = {}",
                m1 * m3,
                m2 * m2
            )));
        }
    }
    if m.len() >= 4 {
        let (m1, m2, m3, m4) = (m[0], m[1], m[2], m[3]);
        let det = m2 * m4 - m3 * m3 - m1 * m1 * m4 + 2.0 * m1 * m2 * m3 - m2 * m2 * m2;
        let tol = 1e-12
            * (m2 * m4 + m3 * m3 + m1 * m1 * m4 + 2.0 * (m1 * m2 * m3).abs() + m2 * m2 * m2);
        if det < -tol {
            return Err(RenewalError::Inadmissible(format!(
                "third-order Hankel determinant is negative ({det})"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Moment-level coefficients.
// ---------------------------------------------------------------------------

/// Remainder moments `β_k = ∫ y^k d(U(y) − y/𝔪)` of the renewal function,
/// in closed form through raw moments:
///
/// ```text
/// β₀ = E[ξ²]/(2𝔪²)
/// β₁ = E[ξ³]/(6𝔪²) − (E[ξ²])²/(4𝔪³)
/// β₂ = E[ξ⁴]/(12𝔪²) − E[ξ³]E[ξ²]/(3𝔪³) + (E[ξ²])³/(4𝔪⁴)
/// ```
///
/// `β_k` needs `E[ξ^{k+2}]`, so order `p` needs `p+1` moments.  Orders
/// beyond 3 have no closed form here and are rejected as `BadInput`.
/// Note the homogeneity: replacing `ξ` by `cξ` maps `β_k ↦ c^k β_k`
/// (the defining integrand scales as `y^k`), so `β₀` is scale-free.
pub fn renewal_betas(input: &RenewalInput, p: usize) -> Result<Vec<f64>, RenewalError> {
    if p == 0 || p > 3 {
        return Err(RenewalError::BadInput(format!(
            "remainder moments are available for orders 1..=3, requested {p}"
        )));
    }
    let m1 = input.mean();
    let m2 = input.moment(2)?;
    let mut beta = vec![m2 / (2.0 * m1 * m1)];
    if p >= 2 {
        let m3 = input.moment(3)?;
        beta.push(m3 / (6.0 * m1 * m1) - m2 * m2 / (4.0 * m1.powi(3)));
        if p >= 3 {
            let m4 = input.moment(4)?;
            beta.push(
                m4 / (12.0 * m1 * m1) - m3 * m2 / (3.0 * m1.powi(3))
                    + m2.powi(3) / (4.0 * m1.powi(4)),
            );
        }
    }
    Ok(beta)
}

/// Correction coefficients of the third-order renewal power estimate:
///
/// ```text
/// b₁ = E[ξ²]/(2𝔪)
/// b₂ = −E[ξ³]/(6𝔪)
/// b₃ = (1/24)·(E[ξ⁴]/𝔪 + 2E[ξ²]E[ξ³]/𝔪² − (E[ξ²])³/𝔪³)
/// ```
///
/// These are `(−ι₁/1, −ι₂/2, −ι₃/3)` for the reverted transform series at
/// slope `1/𝔪` with the `β` of [`renewal_betas`]; the closed forms above
/// shortcut the series pipeline and the equality is asserted in tests.
pub fn renewal_b_coeffs(input: &RenewalInput) -> Result<(f64, f64, f64), RenewalError> {
    let m1 = input.mean();
    let m2 = input.moment(2)?;
    let m3 = input.moment(3)?;
    let m4 = input.moment(4)?;
    let b1 = m2 / (2.0 * m1);
    let b2 = -m3 / (6.0 * m1);
    let b3 = (m4 / m1 + 2.0 * m2 * m3 / (m1 * m1) - m2.powi(3) / m1.powi(3)) / 24.0;
    Ok((b1, b2, b3))
}

/// Log-scale estimate of `U^{*(j)}(t)`:
///
/// ```text
/// log U^{*(j)}(t) ≈ j ln t − j ln 𝔪 − ln j! + b₁ j²/t + b₂ j³/t² + b₃ j⁴/t³
/// ```
///
/// assembled through the generic linear-growth expansion with slope `1/𝔪`
/// (so the two paths cannot drift apart).  The estimate is meaningful for
/// `j = o(t^{4/5})`; a warning is attached once `j⁵/t⁴ > 0.1`.
pub fn renewal_asymptotic(
    input: &RenewalInput,
    j: u64,
    t: f64,
) -> Result<AsymptoticEstimate, RenewalError> {
    if j < 1 {
        return Err(RenewalError::BadInput("power j must be >= 1".into()));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(RenewalError::BadInput(format!("argument t = {t} must be finite and positive")));
    }
    let beta = renewal_betas(input, 3)?;
    let slope = 1.0 / input.mean();
    let coeffs = expansion_coeffs(slope, &beta, 3)?;
    Ok(linear_expansion_estimate(slope, &coeffs, j, t))
}

// ---------------------------------------------------------------------------
// Grid renewal function.
// ---------------------------------------------------------------------------

/// Solve the discrete renewal equation on the grid: with `f` the
/// cell-discretized inter-arrival law, the cell masses of `dU` satisfy
///
/// ```text
/// u_k = [k = 0] + (f ∗ u)_k
/// ```
///
/// which resolves forward in `k` since `(f ∗ u)_k` only involves `u_0..u_k`
/// (and any mass `f₀` at the origin contributes the geometric factor
/// `1/(1−f₀)`).  Returns `dU` as a [`GridMeasure`]; its running cumulative
/// is the renewal function, `U(kh)`, starting from `U(0) = 1`.
///
/// The discretized law must carry total mass 1 on the grid to within
/// `1e-6` — a truncated tail shows up here as `NotProbability`, the fix
/// being a larger `x_max`.
pub fn build_renewal_grid(
    dist: &MeasureSpec,
    h: f64,
    x_max: f64,
) -> Result<GridMeasure, RenewalError> {
    let f = discretize(dist, h, x_max)?;
    let fv: Vec<f64> = (0..f.len()).map(|k| f.mass(k).to_f64()).collect();
    let total: f64 = fv.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(RenewalError::NotProbability { total });
    }
    let f0 = fv[0];
    if 1.0 - f0 < 1e-9 {
        return Err(RenewalError::BadInput(
            "inter-arrival law puts essentially all mass at zero".into(),
        ));
    }
    let scale = 1.0 / (1.0 - f0);
    // Sparse support pays off for lattice laws on fine grids; for dense
    // (density-backed) laws this is the plain O(n²) forward solve.
    let support: Vec<(usize, f64)> =
        fv.iter().enumerate().skip(1).filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect();
    let n = fv.len();
    let mut u = vec![0.0f64; n];
    u[0] = scale;
    for k in 1..n {
        let mut acc = 0.0;
        for &(i, fi) in &support {
            if i > k {
                break;
            }
            acc += fi * u[k - i];
        }
        u[k] = acc * scale;
    }
    let masses = u.into_iter().map(LogNumber::from_f64).collect();
    Ok(GridMeasure::from_masses(h, masses, 0.0)?)
}

// ---------------------------------------------------------------------------
// Tests.
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{convolve_power, laguerre_eval};
    use proptest::prelude::*;
    use statrs::function::gamma::ln_gamma;
    use std::sync::Arc;

    fn exp_mean_one() -> RenewalInput {
        // E[xi^k] = k! for the unit-mean exponential.
        RenewalInput::from_moments(vec![1.0, 2.0, 6.0, 24.0]).unwrap()
    }

    fn unit_step() -> RenewalInput {
        // xi ≡ 1: every raw moment is 1.
        RenewalInput::from_moments(vec![1.0, 1.0, 1.0, 1.0]).unwrap()
    }

    fn exp_density_spec() -> MeasureSpec {
        MeasureSpec::density(Arc::new(|x: f64| (-x).exp()), 0.0).unwrap()
    }

    fn unit_lattice_spec() -> MeasureSpec {
        MeasureSpec::lattice(1.0, 1.0, vec![1.0]).unwrap()
    }

    #[test]
    fn betas_deterministic_unit_step() {
        // All moments 1: beta = (1/2, 1/6 - 1/4, 1/12 - 1/3 + 1/4) = (1/2, -1/12, 0).
        let beta = renewal_betas(&unit_step(), 3).unwrap();
        assert!((beta[0] - 0.5).abs() < 1e-15);
        assert!((beta[1] + 1.0 / 12.0).abs() < 1e-15);
        assert!(beta[2].abs() < 1e-15);
        // Lower orders are prefixes.
        assert_eq!(renewal_betas(&unit_step(), 1).unwrap(), beta[..1]);
        assert_eq!(renewal_betas(&unit_step(), 2).unwrap(), beta[..2]);
    }

    #[test]
    fn betas_exponential_mean_one() {
        // U(t) = 1 + t makes the remainder a unit jump at 0: beta = (1, 0, 0).
        let beta = renewal_betas(&exp_mean_one(), 3).unwrap();
        assert!((beta[0] - 1.0).abs() < 1e-14);
        assert!(beta[1].abs() < 1e-14);
        assert!(beta[2].abs() < 1e-14);
    }

    #[test]
    fn betas_scale_covariantly() {
        // xi -> c·xi maps m_k -> c^k m_k and hence beta_k -> c^k beta_k:
        // the defining integrand is y^k, so beta_0 is scale-free, beta_1
        // picks up one power of c, beta_2 two.
        let w = 0.3;
        let (x1, x2) = (0.5f64, 2.0f64);
        let m: Vec<f64> = (1..=4).map(|k| w * x1.powi(k) + (1.0 - w) * x2.powi(k)).collect();
        let c: f64 = 2.5;
        let scaled: Vec<f64> = m.iter().enumerate().map(|(i, v)| c.powi(i as i32 + 1) * v).collect();
        let base = renewal_betas(&RenewalInput::from_moments(m).unwrap(), 3).unwrap();
        let moved = renewal_betas(&RenewalInput::from_moments(scaled).unwrap(), 3).unwrap();
        for (k, (b, s)) in base.iter().zip(&moved).enumerate() {
            let want = c.powi(k as i32) * b;
            assert!(
                (s - want).abs() <= 1e-12 * want.abs().max(1e-3),
                "beta_{k}: scaled {s} vs expected {want}"
            );
        }
    }

    #[test]
    fn b_coeffs_printed_cases() {
        let (b1, b2, b3) = renewal_b_coeffs(&exp_mean_one()).unwrap();
        assert!((b1 - 1.0).abs() < 1e-15);
        assert!((b2 + 1.0).abs() < 1e-15);
        // (1/24)(24 + 2·2·6 - 8) = 40/24 = 5/3.
        assert!((b3 - 5.0 / 3.0).abs() < 1e-15);

        let (b1, b2, b3) = renewal_b_coeffs(&unit_step()).unwrap();
        assert!((b1 - 0.5).abs() < 1e-15);
        assert!((b2 + 1.0 / 6.0).abs() < 1e-15);
        // (1/24)(1 + 2 - 1) = 1/12.
        assert!((b3 - 1.0 / 12.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        // The closed forms for (b1, b2, b3) must agree with the series
        // pipeline beta -> delta -> iota at slope 1/mean, as
        // (-iota_1/1, -iota_2/2, -iota_3/3).  Moment vectors of two-atom
        // laws are admissible by construction and cover the space densely
        // enough to pin all cross terms.
        #[test]
        fn b_coeffs_equal_series_reversion(
            x1 in 0.2f64..1.5,
            gap in 0.5f64..3.0,
            w in 0.05f64..0.95,
        ) {
            let x2 = x1 + gap;
            let m: Vec<f64> = (1..=4)
                .map(|k| w * x1.powi(k) + (1.0 - w) * x2.powi(k))
                .collect();
            let input = RenewalInput::from_moments(m).unwrap();
            let (b1, b2, b3) = renewal_b_coeffs(&input).unwrap();
            let beta = renewal_betas(&input, 3).unwrap();
            let coeffs = expansion_coeffs(1.0 / input.mean(), &beta, 3).unwrap();
            let want = [
                -coeffs.iota[0],
                -coeffs.iota[1] / 2.0,
                -coeffs.iota[2] / 3.0,
            ];
            for (k, (have, want)) in [b1, b2, b3].iter().zip(want).enumerate() {
                prop_assert!(
                    (have - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "b_{}: closed form {} vs reversion {}",
                    k + 1, have, want
                );
            }
        }
    }

    #[test]
    fn asymptotic_exponential_matches_laguerre() {
        // Unit-mean exponential inter-arrivals give U(t) = 1 + t, whose
        // convolution powers evaluate exactly through the degree-j
        // polynomial recurrence oracle.
        let est = renewal_asymptotic(&exp_mean_one(), 50, 5000.0).unwrap();
        let exact = laguerre_eval(50, 5000.0).ln_abs();
        let ratio = (est.log_value - exact).exp();
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
        assert!(est.warning.is_none());
    }

    #[test]
    fn asymptotic_lattice_unit_step_trend() {
        // xi ≡ 1: U(t) = 1 + floor(t), and the j-fold power at integer t
        // counts lattice points in a simplex: U^{*(j)}(K) = C(K + j, j).
        // Pin the closed form against the grid convolution once, small.
        let du = build_renewal_grid(&unit_lattice_spec(), 1.0, 16.0).unwrap();
        let table = convolve_power(&du, 4, 0.0, 16.0).unwrap();
        let grid = table.untilted_value_at(16.0).unwrap().ln_abs();
        let closed = ln_gamma(21.0) - ln_gamma(5.0) - ln_gamma(17.0);
        assert!((grid - closed).abs() < 1e-9, "grid {grid} vs closed {closed}");

        // The estimate is built for smooth (spread-out) laws; on the pure
        // lattice its log deviation along t = j^2 decays like 1/(2j)
        // rather than j^5/t^4, but it does decay.  Empirical trend only.
        let devs: Vec<f64> = [4u64, 8, 16]
            .iter()
            .map(|&j| {
                let t = (j * j) as f64;
                let est = renewal_asymptotic(&unit_step(), j, t).unwrap();
                let exact = ln_gamma(t + j as f64 + 1.0)
                    - ln_gamma(j as f64 + 1.0)
                    - ln_gamma(t + 1.0);
                (est.log_value - exact).abs()
            })
            .collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "not decaying: {devs:?}");
        assert!(devs[2] < 0.04, "final deviation {}", devs[2]);
    }

    #[test]
    fn asymptotic_leading_term_poisson_limit() {
        // As j^2/t -> 0 every correction dies and the estimate settles on
        // t^j/(m^j j!).  The gap is dominated by b1 j^2/t, so it shrinks
        // tenfold per decade of t.
        let input = exp_mean_one();
        let gaps: Vec<f64> = [1e4, 1e5, 1e6]
            .iter()
            .map(|&t| {
                let est = renewal_asymptotic(&input, 5, t).unwrap();
                let poisson = 5.0 * t.ln() - ln_gamma(6.0);
                (est.log_value - poisson).abs()
            })
            .collect();
        assert!(gaps[2] < 1e-4, "gap {}", gaps[2]);
        assert!(gaps[1] < 0.2 * gaps[0] && gaps[2] < 0.2 * gaps[1], "gaps {gaps:?}");
    }

    #[test]
    fn asymptotic_warns_when_power_outruns_argument() {
        let est = renewal_asymptotic(&exp_mean_one(), 50, 50.0).unwrap();
        assert!(est.warning.is_some(), "j^5/t^4 = 50 should warn");
        let est = renewal_asymptotic(&exp_mean_one(), 50, 5000.0).unwrap();
        assert!(est.warning.is_none());
    }

    #[test]
    fn grid_exponential_renewal_is_affine() {
        // The unit-mean exponential renewal function is U(t) = 1 + t; the
        // grid solve should reproduce it to O(h), and halving h should
        // cut the error roughly in half (the bias is the right-edge
        // placement of cell mass, linear in h).
        let err_at = |h: f64| -> f64 {
            let du = build_renewal_grid(&exp_density_spec(), h, 15.0).unwrap();
            let mut worst = 0.0f64;
            for &t in &[1.0, 5.0, 10.0] {
                let k = (t / h).round() as usize;
                let got = du.cumulative(k).to_f64();
                worst = worst.max((got - (1.0 + t)).abs());
            }
            worst
        };
        let coarse = err_at(1e-3);
        let fine = err_at(5e-4);
        assert!(coarse < 2e-3 * 11.0, "coarse error {coarse}");
        assert!(fine < 0.75 * coarse, "no first-order improvement: {coarse} -> {fine}");
    }

    #[test]
    fn grid_unit_lattice_renewal_counts_arrivals() {
        // xi ≡ 1 renews exactly at the integers: dU has a unit atom at
        // every integer and U(t) = 1 + floor(t), exactly, on any grid the
        // lattice embeds in.
        // The atoms come out bit-exact; the running cumulative is summed
        // in the log domain and only rounds in the last ulps.
        let close = |have: f64, want: f64| (have - want).abs() <= 1e-12 * want;
        let du = build_renewal_grid(&unit_lattice_spec(), 1.0, 10.0).unwrap();
        for k in 0..=10 {
            assert_eq!(du.mass(k).to_f64(), 1.0);
            assert!(close(du.cumulative(k).to_f64(), (k + 1) as f64));
        }
        // Same law on a finer grid that still contains the integers.
        let du = build_renewal_grid(&unit_lattice_spec(), 0.5, 10.0).unwrap();
        assert!(close(du.cumulative(4).to_f64(), 3.0)); // U(2) = 3
        assert!(close(du.cumulative(5).to_f64(), 3.0)); // U(2.5) = 3
        assert!(close(du.cumulative(20).to_f64(), 11.0)); // U(10) = 11
    }

    #[test]
    fn grid_uniform_renewal_hits_e_at_one() {
        // For xi ~ uniform(0,1), U(t) = e^t on 0 <= t <= 1, so U(1) = e.
        let uniform =
            MeasureSpec::density(Arc::new(|x: f64| if x <= 1.0 { 1.0 } else { 0.0 }), 0.0)
                .unwrap();
        let value_at_one = |h: f64| -> f64 {
            let du = build_renewal_grid(&uniform, h, 1.0).unwrap();
            du.cumulative((1.0 / h).round() as usize).to_f64()
        };
        let coarse = value_at_one(1e-3);
        let e = std::f64::consts::E;
        assert!((coarse - e).abs() / e < 5e-3, "U(1) = {coarse} vs e = {e}");
        let fine = value_at_one(5e-4);
        assert!(
            (fine - e).abs() < 0.75 * (coarse - e).abs(),
            "no refinement: {coarse} -> {fine} (target {e})"
        );
    }

    #[test]
    fn grid_rejects_truncated_tails() {
        // Cutting the exponential at x_max = 5 leaves mass 1 - e^{-5}.
        let err = build_renewal_grid(&exp_density_spec(), 1e-2, 5.0).unwrap_err();
        match err {
            RenewalError::NotProbability { total } => {
                assert!((total - (1.0 - (-5.0f64).exp())).abs() < 1e-4, "total {total}")
            }
            other => panic!("expected NotProbability, got {other:?}"),
        }
        // A plainly subprobability lattice law fails the same gate.
        let sub = MeasureSpec::lattice(1.0, 1.0, vec![0.4, 0.4]).unwrap();
        assert!(matches!(
            build_renewal_grid(&sub, 1.0, 5.0),
            Err(RenewalError::NotProbability { .. })
        ));
    }

    #[test]
    fn grid_satisfies_renewal_equation() {
        // Residual of u = delta_0 + f*u, with the convolution re-summed
        // here in reverse order so the check does not just replay the
        // builder's own arithmetic.
        for (spec, h, x_max) in [
            (exp_density_spec(), 1e-2, 15.0),
            (unit_lattice_spec(), 0.5, 10.0),
            (
                MeasureSpec::density(Arc::new(|x: f64| if x <= 1.0 { 1.0 } else { 0.0 }), 0.0)
                    .unwrap(),
                2e-3,
                1.0,
            ),
        ] {
            let f = discretize(&spec, h, x_max).unwrap();
            let du = build_renewal_grid(&spec, h, x_max).unwrap();
            let n = du.len();
            let mut worst = 0.0f64;
            for k in 0..n {
                let mut conv = 0.0;
                for i in (0..=k).rev() {
                    conv += f.mass(i).to_f64() * du.mass(k - i).to_f64();
                }
                let delta = if k == 0 { 1.0 } else { 0.0 };
                worst = worst.max((du.mass(k).to_f64() - delta - conv).abs());
            }
            assert!(worst < 1e-10, "renewal residual {worst} at h = {h}");
        }
    }

    #[test]
    fn admissibility_rejects_impossible_moments() {
        // Variance would be negative.
        assert!(matches!(
            RenewalInput::from_moments(vec![1.0, 0.8]),
            Err(RenewalError::Inadmissible(_))
        ));
        // E[xi]E[xi^3] >= E[xi^2]^2 fails.
        assert!(matches!(
            RenewalInput::from_moments(vec![1.0, 2.0, 1.0]),
            Err(RenewalError::Inadmissible(_))
        ));
        // Third-order Hankel determinant negative: det = -19.
        assert!(matches!(
            RenewalInput::from_moments(vec![1.0, 2.0, 6.0, 1.0]),
            Err(RenewalError::Inadmissible(_))
        ));
        // Degenerate boundary cases are fine.
        assert!(RenewalInput::from_moments(vec![1.0, 1.0, 1.0, 1.0]).is_ok());
        assert!(RenewalInput::from_moments(vec![2.0, 4.0, 8.0, 16.0]).is_ok());
        // Nonpositive or nonfinite moments are rejected up front.
        assert!(matches!(
            RenewalInput::from_moments(vec![1.0, -2.0]),
            Err(RenewalError::BadInput(_))
        ));
        assert!(matches!(RenewalInput::from_moments(vec![]), Err(RenewalError::BadInput(_))));
    }

    #[test]
    fn missing_moments_are_reported() {
        let short = RenewalInput::from_moments(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            renewal_b_coeffs(&short),
            Err(RenewalError::MissingMoment { needed: 3, have: 2 })
        ));
        assert!(matches!(
            renewal_asymptotic(&short, 10, 100.0),
            Err(RenewalError::MissingMoment { .. })
        ));
        assert!(matches!(
            renewal_betas(&short, 2),
            Err(RenewalError::MissingMoment { needed: 3, have: 2 })
        ));
        // One moment past what p=1 needs is enough for beta_0.
        assert!(renewal_betas(&short, 1).is_ok());
        // Out-of-range order is a usage error, not a data error.
        assert!(matches!(
            renewal_betas(&exp_mean_one(), 4),
            Err(RenewalError::BadInput(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let input = RenewalInput::from_json(r#"{"moments":[1.0,2.0,6.0,24.0]}"#).unwrap();
        assert_eq!(input.moments(), &[1.0, 2.0, 6.0, 24.0]);
        assert!(input.dist().is_none());

        let text = r#"{"moments":[1,1,1,1],
                       "dist":{"family":"lattice","span":1.0,"offset":1.0,"masses":[1.0]}}"#;
        let input = RenewalInput::from_json(text).unwrap();
        assert!(matches!(input.dist(), Some(MeasureSpec::Lattice { .. })));
        let back = RenewalInput::from_json(&input.to_json().unwrap()).unwrap();
        assert_eq!(back.moments(), input.moments());
        assert_eq!(
            back.dist().unwrap().to_json().unwrap(),
            input.dist().unwrap().to_json().unwrap()
        );

        // Admissibility applies on the JSON path too.
        assert!(matches!(
            RenewalInput::from_json(r#"{"moments":[1.0,0.5]}"#),
            Err(RenewalError::Inadmissible(_))
        ));
        // Unknown families surface as measure errors.
        assert!(matches!(
            RenewalInput::from_json(r#"{"moments":[1.0],"dist":{"family":"nope"}}"#),
            Err(RenewalError::Measure(_))
        ));
    }

    #[test]
    fn declared_moments_checked_against_dist() {
        let good = RenewalInput::new(vec![1.0, 2.0, 6.0, 24.0], Some(exp_density_spec())).unwrap();
        good.verify_dist(5e-3, 15.0).unwrap();

        // Exact on the lattice.
        let lattice = RenewalInput::new(vec![1.0, 1.0, 1.0, 1.0], Some(unit_lattice_spec()))
            .unwrap();
        lattice.verify_dist(1.0, 4.0).unwrap();

        // Admissible but wrong mean: the mismatch is caught at order 1.
        let off = RenewalInput::new(vec![1.1, 2.0, 6.0, 24.0], Some(exp_density_spec())).unwrap();
        match off.verify_dist(5e-3, 15.0) {
            Err(RenewalError::DistMomentMismatch { order: 1, .. }) => {}
            other => panic!("expected order-1 mismatch, got {other:?}"),
        }

        // Without a distribution there is nothing to verify against.
        assert!(matches!(
            exp_mean_one().verify_dist(1e-2, 10.0),
            Err(RenewalError::BadInput(_))
        ));
    }
}
