//! Saddle-point location for convolution-power estimates.
//!
//! The estimate of the `j`-fold power at height `t` is governed by the
//! point `κ = κ(j, t)` where the tilted mean matches the target slope:
//! `-λ'(κ) = t/j`.  Since `-λ'` is a strictly decreasing bijection from
//! the transform's domain interior onto the open interval
//! `(s₋, s₊)` — `s₋` the measure's support infimum, `s₊` the slope limit
//! at the left edge of the domain — the equation has a unique solution
//! exactly when `t/j` falls in that interval, and bisection plus a Newton
//! polish finds it without surprises.
//!
//! The same machinery locates `θ*`, the root of `g(θ) = λ(θ) - θλ'(θ)`
//! (per-step log-cost balance).  `g` is strictly decreasing
//! (`g' = -θλ''`), but it need not cross zero: families whose transform
//! tends to a limit ≥ 1 keep `g > 0` everywhere, and that absence is a
//! property of the measure, not a solver failure — it is reported as
//! `NoRoot` with the scanned range.

use crate::laplace::{self, Domain, LaplaceError, LaplaceEval};
use crate::measure::MeasureSpec;

/// Saddle point and the derived scales used by every estimate.
#[derive(Debug, Clone)]
pub struct SaddleReport {
    pub j: u64,
    pub t: f64,
    /// Solution of `-λ'(κ) = t/j`.
    pub kappa: f64,
    /// Transform evaluation at `κ`.
    pub eval: LaplaceEval,
    /// `a(j) = sqrt(j · λ''(κ))`: the tilted-sum standard deviation.
    pub a_j: f64,
    /// `T_j = |λ'(κ)|³/λ''(κ) + |V̂'''(κ)|/(λ''(κ) V̂(κ))`: the frequency
    /// scale on which the transform modulus decays along `κ + iu`.
    pub t_j: f64,
    /// `κ · a(j)`: large values put the estimate in its comfort zone.
    pub kappa_a: f64,
}

/// Attainable range of `t/j` (open at both ends).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRange {
    pub lo: f64,
    pub hi: f64,
}

/// Root of `g(θ) = λ(θ) - θλ'(θ)` with the variance there.
#[derive(Debug, Clone)]
pub struct ThetaStar {
    pub theta: f64,
    /// `σ² = λ''(θ*)`.
    pub sigma2: f64,
    pub eval: LaplaceEval,
}

#[derive(Debug, Clone)]
pub enum SaddleError {
    /// `t/j` outside the open interval of attainable slopes.
    RatioOutOfRange { ratio: f64, lo: f64, hi: f64 },
    /// Bracketing or iteration failed to converge.
    SolverStall { target: f64, best: f64 },
    /// `g(θ) = λ - θλ'` has no zero: it stays positive over the scanned
    /// range (e.g. transforms with limit ≥ 1 at infinity).
    NoRoot { lo: f64, hi: f64, g_at_hi: f64 },
    BadInput(String),
    Laplace(LaplaceError),
}

impl std::fmt::Display for SaddleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SaddleError::RatioOutOfRange { ratio, lo, hi } => {
                write!(f, "t/j = {ratio} outside attainable slope range ({lo}, {hi})")
            }
            SaddleError::SolverStall { target, best } => {
                write!(f, "saddle solve stalled: target slope {target}, best {best}")
            }
            SaddleError::NoRoot { lo, hi, g_at_hi } => write!(
                f,
                "lambda - theta*lambda' has no root: still {g_at_hi} at theta = {hi} \
                 (scanned from {lo})"
            ),
            SaddleError::BadInput(m) => write!(f, "{m}"),
            SaddleError::Laplace(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SaddleError {}

impl From<LaplaceError> for SaddleError {
    fn from(e: LaplaceError) -> Self {
        SaddleError::Laplace(e)
    }
}

impl From<crate::measure::MeasureError> for SaddleError {
    fn from(e: crate::measure::MeasureError) -> Self {
        SaddleError::Laplace(LaplaceError::Measure(e))
    }
}

/// Open interval of slopes `t/j` for which a saddle exists.
///
/// The lower end is the support infimum (`-λ' → s₋` as `κ → ∞`); the
/// upper end is the slope limit at the domain's left edge — infinite for
/// all families whose transform blows up there, the tilted mean at the
/// boundary for `HeavyExpDensity`, and the plain mean for finite
/// lattice/tabulated data.
pub fn range_bounds(spec: &MeasureSpec) -> Result<RatioRange, SaddleError> {
    let lo = spec.support_infimum()?;
    let hi = match spec {
        MeasureSpec::PowerLaw { .. }
        | MeasureSpec::Affine { .. }
        | MeasureSpec::LogPower { .. }
        | MeasureSpec::SqrtExpDensity
        | MeasureSpec::ShiftedExp { .. }
        | MeasureSpec::Exp { .. } => f64::INFINITY,
        MeasureSpec::HeavyExpDensity { .. } => {
            // Transform converges at the boundary s = 1; the slope limit
            // is the mean of the boundary-tilted law, M1(1)/M0(1).
            boundary_mean_heavy(spec)?
        }
        MeasureSpec::Lattice { .. } | MeasureSpec::Tabulated { .. } => {
            discrete_mean(spec)
        }
        MeasureSpec::Density { .. } => {
            let d = laplace::domain_of(spec)?;
            probe_slope_limit(spec, &d)?
        }
    };
    Ok(RatioRange { lo, hi })
}

fn boundary_mean_heavy(spec: &MeasureSpec) -> Result<f64, SaddleError> {
    // M0 and M1 converge at s = 1 for every α > 0 even though s = 1 is
    // not interior, so evaluate the raw integrals directly.
    let MeasureSpec::HeavyExpDensity { alpha } = spec else { unreachable!() };
    let al = *alpha;
    let m0 = crate::quad::integrate_ln_half_line(
        &|x: f64| -(2.0 + al) * x.ln_1p(),
        1e-12,
        6000,
    )
    .map_err(LaplaceError::from)?;
    let m1 = crate::quad::integrate_ln_half_line(
        &|x: f64| {
            if x == 0.0 {
                f64::NEG_INFINITY
            } else {
                x.ln() - (2.0 + al) * x.ln_1p()
            }
        },
        1e-12,
        6000,
    )
    .map_err(LaplaceError::from)?;
    Ok((m1.ln_abs() - m0.ln_abs()).exp())
}

fn discrete_mean(spec: &MeasureSpec) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    match spec {
        MeasureSpec::Lattice { span, offset, masses } => {
            for (k, m) in masses.iter().enumerate() {
                let x = offset + k as f64 * span;
                num += x * m;
                den += m;
            }
        }
        MeasureSpec::Tabulated { h, values } => {
            if values[0] > 0.0 {
                den += values[0];
            }
            for k in 1..values.len() {
                let d = values[k] - values[k - 1];
                num += k as f64 * h * d;
                den += d;
            }
        }
        _ => unreachable!(),
    }
    num / den
}

fn probe_slope_limit(spec: &MeasureSpec, d: &Domain) -> Result<f64, SaddleError> {
    // Walk toward the domain edge; declare the limit infinite once the
    // slope exceeds a huge threshold, finite when it stabilizes to 1%.
    let scale = d.s0.max(1.0);
    let mut prev = f64::NAN;
    for k in 2..14 {
        let s = d.s0 + scale * 10f64.powi(-k);
        let m = match laplace::neg_slope_at(spec, s) {
            Ok(m) => m,
            Err(_) => break,
        };
        if m > 1e12 {
            return Ok(f64::INFINITY);
        }
        if prev.is_finite() && (m - prev).abs() <= 0.01 * m.abs() {
            return Ok(m);
        }
        prev = m;
    }
    if prev.is_finite() {
        Ok(prev)
    } else {
        Ok(f64::INFINITY)
    }
}

/// Solve `-λ'(s) = target` on the domain interior (strictly monotone).
fn solve_slope(spec: &MeasureSpec, s0: f64, target: f64) -> Result<f64, SaddleError> {
    let slope = |s: f64| laplace::neg_slope_unchecked(spec, s);
    // Upper bracket: -λ' falls below the target for large s.
    let mut hi = if s0 > 0.0 { 2.0 * s0 } else { 1.0 };
    let mut guard = 0;
    while slope(hi)? > target {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(SaddleError::SolverStall { target, best: slope(hi)? });
        }
    }
    // Lower bracket: -λ' rises above the target toward the domain edge.
    let mut lo = s0 + 0.25 * (hi - s0);
    guard = 0;
    while slope(lo)? < target {
        lo = s0 + 0.25 * (lo - s0);
        guard += 1;
        if guard > 300 {
            return Err(SaddleError::SolverStall { target, best: slope(lo)? });
        }
    }
    // Bisection to a tight window, then Newton.
    for _ in 0..70 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..4 {
        let e = laplace::laplace_at_unchecked(spec, s)?;
        let f = -e.lambda1 - target;
        let step = f / e.lambda2;
        let next = s + step;
        if next > lo && next < hi {
            s = next;
        }
        if f.abs() <= 1e-13 * target.abs() {
            break;
        }
    }
    let achieved = slope(s)?;
    if (achieved - target).abs() > 1e-9 * target.abs().max(1e-300) {
        return Err(SaddleError::SolverStall { target, best: achieved });
    }
    Ok(s)
}

/// Locate the saddle `κ(j, t)` and package the derived scales.
pub fn solve_kappa(spec: &MeasureSpec, j: u64, t: f64) -> Result<SaddleReport, SaddleError> {
    if j == 0 {
        return Err(SaddleError::BadInput("j must be >= 1".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(SaddleError::BadInput(format!("t must be finite and > 0, got {t}")));
    }
    let ratio = t / j as f64;
    let range = range_bounds(spec)?;
    if !(ratio > range.lo && ratio < range.hi) {
        return Err(SaddleError::RatioOutOfRange { ratio, lo: range.lo, hi: range.hi });
    }
    let d = laplace::domain_of(spec)?;
    let kappa = solve_slope(spec, d.s0, ratio)?;
    let eval = laplace::laplace_at_unchecked(spec, kappa)?;
    report_from(spec, j, t, kappa, eval)
}

fn report_from(
    _spec: &MeasureSpec,
    j: u64,
    t: f64,
    kappa: f64,
    eval: LaplaceEval,
) -> Result<SaddleReport, SaddleError> {
    let a_j = (j as f64 * eval.lambda2).sqrt();
    let t_j = eval.lambda1.abs().powi(3) / eval.lambda2
        + laplace::vhat3_over_vhat(&eval).abs() / eval.lambda2;
    Ok(SaddleReport { j, t, kappa, eval, a_j, t_j, kappa_a: kappa * a_j })
}

/// Root of `g(θ) = λ(θ) - θλ'(θ)`, if it exists.
pub fn solve_theta_star(spec: &MeasureSpec) -> Result<ThetaStar, SaddleError> {
    let d = laplace::domain_of(spec)?;
    let g_at = |theta: f64| -> Result<f64, SaddleError> {
        let e = laplace::laplace_at_unchecked(spec, theta)?;
        Ok(e.lambda - theta * e.lambda1)
    };
    // g is strictly decreasing; scan a geometric grid for a sign change.
    let start = d.s0 + d.s0.max(1.0) * 1e-6;
    let mut lo = start;
    let mut g_lo = g_at(lo)?;
    if g_lo < 0.0 {
        // Root sits closer to the domain edge than the scan start; walk in.
        let mut guard = 0;
        loop {
            let cand = d.s0 + 0.25 * (lo - d.s0);
            let g = g_at(cand)?;
            if g > 0.0 {
                lo = cand;
                g_lo = g;
                break;
            }
            guard += 1;
            if guard > 200 {
                return Err(SaddleError::SolverStall { target: 0.0, best: g });
            }
            lo = cand;
        }
        return bisect_theta(spec, lo, start, g_lo);
    }
    let mut theta = lo;
    for _ in 0..220 {
        let next = (theta - d.s0).max(1e-6) * 1.5 + d.s0;
        let g = g_at(next)?;
        if g < 0.0 {
            return bisect_theta(spec, theta, next, g_lo);
        }
        theta = next;
        g_lo = g;
        if theta > 1e14 {
            break;
        }
    }
    Err(SaddleError::NoRoot { lo: start, hi: theta, g_at_hi: g_lo })
}

fn bisect_theta(
    spec: &MeasureSpec,
    mut lo: f64,
    mut hi: f64,
    _g_lo: f64,
) -> Result<ThetaStar, SaddleError> {
    let g_at = |theta: f64| -> Result<(f64, LaplaceEval), SaddleError> {
        let e = laplace::laplace_at_unchecked(spec, theta)?;
        Ok((e.lambda - theta * e.lambda1, e))
    };
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (g, _) = g_at(mid)?;
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut theta = 0.5 * (lo + hi);
    for _ in 0..4 {
        let (g, e) = g_at(theta)?;
        // g' = -θλ''.
        let next = theta + g / (theta * e.lambda2);
        if next > lo && next < hi {
            theta = next;
        }
        if g.abs() < 1e-14 * (1.0 + theta) {
            break;
        }
    }
    let (g, eval) = g_at(theta)?;
    if g.abs() > 1e-8 * (1.0 + theta.abs()) {
        return Err(SaddleError::SolverStall { target: 0.0, best: g });
    }
    Ok(ThetaStar { theta, sigma2: eval.lambda2, eval })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn power_law_kappa_closed_form() {
        // -λ' = α/s, so κ = αj/t exactly.
        let spec = MeasureSpec::power_law(1.0, 2.0).unwrap();
        for (j, t) in [(1u64, 0.5), (10, 3.0), (1000, 17.0), (100_000_000, 10_000.0)] {
            let r = solve_kappa(&spec, j, t).unwrap();
            assert!(rel(r.kappa, 2.0 * j as f64 / t) < 1e-12, "j={j} t={t}");
        }
    }

    #[test]
    fn affine_kappa_closed_form() {
        // a/(κ(bκ+a)) = t/j ⇒ κ = (sqrt(a² + 4ab j/t) - a)/(2b).
        let (a, b) = (1.0, 1.0);
        let spec = MeasureSpec::affine(a, b).unwrap();
        for (j, t) in [(1u64, 1.0), (7, 0.9), (400, 1000.0), (1000, 10.0)] {
            let r = solve_kappa(&spec, j, t).unwrap();
            let want = ((a * a + 4.0 * a * b * j as f64 / t).sqrt() - a) / (2.0 * b);
            assert!(rel(r.kappa, want) < 1e-11, "j={j} t={t}: {} vs {want}", r.kappa);
        }
    }

    #[test]
    fn shifted_exp_kappa_and_frequency_scale() {
        // κ = a + j/t; T_j = 7/(κ-a) = 7t/j exactly.
        let spec = MeasureSpec::shifted_exp(1.0).unwrap();
        for (j, t) in [(2u64, 1.0), (50, 12.5), (1000, 40.0)] {
            let r = solve_kappa(&spec, j, t).unwrap();
            assert!(rel(r.kappa, 1.0 + j as f64 / t) < 1e-12);
            assert!(rel(r.t_j, 7.0 * t / j as f64) < 1e-10, "T_j {} vs {}", r.t_j, 7.0 * t / j as f64);
        }
    }

    #[test]
    fn exp_kappa_closed_form() {
        // 1/(κ-a) - 1/κ = t/j ⇒ κ = (a + sqrt(a² + 4aj/t))/2.
        let a = 1.3;
        let spec = MeasureSpec::exp(a).unwrap();
        for (j, t) in [(3u64, 2.0), (120, 6.0)] {
            let r = solve_kappa(&spec, j, t).unwrap();
            let want = 0.5 * (a + (a * a + 4.0 * a * j as f64 / t).sqrt());
            assert!(rel(r.kappa, want) < 1e-11);
        }
    }

    #[test]
    fn proportional_regime_prefactor_identity() {
        // At t = cj the saddle is φ(c) = (sqrt(1+4/c) - 1)/2 for the
        // unit affine family, and λ''(φ) = c²·sqrt(1+4/c), giving
        // λ''^{-1/2} = c^{-3/4}(c+4)^{-1/4}.
        let spec = MeasureSpec::affine(1.0, 1.0).unwrap();
        for c in [0.25, 1.0, 3.0] {
            let j = 500u64;
            let r = solve_kappa(&spec, j, c * j as f64).unwrap();
            let phi = 0.5 * ((1.0 + 4.0 / c).sqrt() - 1.0);
            assert!(rel(r.kappa, phi) < 1e-11, "c={c}");
            let lam2 = c * c * (1.0 + 4.0 / c).sqrt();
            assert!(rel(r.eval.lambda2, lam2) < 1e-10, "c={c}");
            let pref = 1.0 / r.eval.lambda2.sqrt();
            let want = c.powf(-0.75) * (c + 4.0).powf(-0.25);
            assert!(rel(pref, want) < 1e-10, "c={c}");
        }
    }

    #[test]
    fn ratio_range_rejections() {
        // Lattice {0: 1, 1: 1}: slopes must stay inside (0, mean) = (0, 0.5).
        let spec = MeasureSpec::lattice(1.0, 0.0, vec![1.0, 1.0]).unwrap();
        assert_eq!(range_bounds(&spec).unwrap(), RatioRange { lo: 0.0, hi: 0.5 });
        assert!(matches!(
            solve_kappa(&spec, 1, 0.6),
            Err(SaddleError::RatioOutOfRange { .. })
        ));
        // Offset lattice: support infimum 2 bounds the ratio from below.
        let spec = MeasureSpec::lattice(1.0, 2.0, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            solve_kappa(&spec, 10, 19.0),
            Err(SaddleError::RatioOutOfRange { .. })
        ));
    }

    #[test]
    fn heavy_slope_limit_is_boundary_mean() {
        // α = 1: M1(1)/M0(1) = (1/2)/(1/2) = 1; ratios above are refused,
        // ratios below solve and reproduce the slope.
        let spec = MeasureSpec::heavy_exp_density(1.0).unwrap();
        let r = range_bounds(&spec).unwrap();
        assert!(rel(r.hi, 1.0) < 1e-9, "boundary mean {}", r.hi);
        assert!(matches!(
            solve_kappa(&spec, 2, 3.0),
            Err(SaddleError::RatioOutOfRange { .. })
        ));
        let rep = solve_kappa(&spec, 2, 1.0).unwrap();
        assert!(rel(-rep.eval.lambda1, 0.5) < 1e-9);
        assert!(rep.kappa > 1.0);
    }

    #[test]
    fn saddle_report_scales() {
        let spec = MeasureSpec::shifted_exp(1.0).unwrap();
        let r = solve_kappa(&spec, 100, 25.0).unwrap();
        // a(j) = sqrt(j λ'') with λ'' = (t/j)² here.
        assert!(rel(r.a_j, (100.0f64).sqrt() * 0.25) < 1e-10);
        assert!(rel(r.kappa_a, r.kappa * r.a_j) < 1e-15);
    }

    #[test]
    fn theta_star_power_law_closed_form() {
        // g(θ) = ln(bΓ(α+1)) - α ln θ + α has root θ* = e·(bΓ(α+1))^{1/α}.
        for (b, alpha) in [(1.0, 1.0), (2.0, 1.5), (0.5, 3.0)] {
            let spec = MeasureSpec::power_law(b, alpha).unwrap();
            let ts = solve_theta_star(&spec).unwrap();
            let want = std::f64::consts::E
                * (b * statrs::function::gamma::gamma(alpha + 1.0)).powf(1.0 / alpha);
            assert!(rel(ts.theta, want) < 1e-10, "b={b} α={alpha}: {} vs {want}", ts.theta);
        }
    }

    #[test]
    fn theta_star_shifted_exp_frozen() {
        // Root of ln d = 1 + 1/d with d = θ-1, solved by a test-local
        // bisection of the closed-form g; the literal pins the value.
        let g = |theta: f64| -> f64 { -(theta - 1.0f64).ln() + theta / (theta - 1.0) };
        let (mut lo, mut hi) = (2.0, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let spec = MeasureSpec::shifted_exp(1.0).unwrap();
        let ts = solve_theta_star(&spec).unwrap();
        assert!(rel(ts.theta, oracle) < 1e-10, "{} vs oracle {oracle}", ts.theta);
        assert!(rel(ts.theta, 4.591121476668622) < 1e-12, "frozen: {}", ts.theta);
    }

    #[test]
    fn affine_unit_family_has_no_theta_star() {
        // g(θ) = ln(1+1/θ) + 1/(1+θ) > 0 for every θ > 0 (the bound
        // ln(1+x) > x/(1+x/2)·… keeps it above 2/(2θ+1) - margin), so the
        // balance equation has no root and the solver must say so.
        let spec = MeasureSpec::affine(1.0, 1.0).unwrap();
        match solve_theta_star(&spec) {
            Err(SaddleError::NoRoot { g_at_hi, .. }) => assert!(g_at_hi > 0.0),
            other => panic!("expected NoRoot, got {other:?}"),
        }
    }

    #[test]
    fn exp_family_has_no_theta_star() {
        let spec = MeasureSpec::exp(1.0).unwrap();
        assert!(matches!(solve_theta_star(&spec), Err(SaddleError::NoRoot { .. })));
    }

    #[test]
    fn heavy_theta_star_exists() {
        let spec = MeasureSpec::heavy_exp_density(1.0).unwrap();
        let ts = solve_theta_star(&spec).unwrap();
        let e = ts.eval;
        assert!((e.lambda - ts.theta * e.lambda1).abs() < 1e-7, "g at root");
        assert!(ts.sigma2 > 0.0);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let spec = MeasureSpec::power_law(1.0, 1.0).unwrap();
        assert!(matches!(solve_kappa(&spec, 0, 1.0), Err(SaddleError::BadInput(_))));
        assert!(matches!(solve_kappa(&spec, 1, -1.0), Err(SaddleError::BadInput(_))));
        assert!(matches!(solve_kappa(&spec, 1, f64::NAN), Err(SaddleError::BadInput(_))));
    }

    proptest! {
        /// κ(j, t) is strictly decreasing in t (larger slope target ⇒
        /// smaller tilt) and the solved slope reproduces t/j.
        #[test]
        fn kappa_monotone_and_consistent(
            fam in 0usize..4,
            j in 1u64..2000,
            t1 in 0.1f64..50.0,
            bump in 0.05f64..10.0,
        ) {
            let spec = match fam {
                0 => MeasureSpec::power_law(1.0, 1.5).unwrap(),
                1 => MeasureSpec::affine(1.0, 1.0).unwrap(),
                2 => MeasureSpec::shifted_exp(0.3).unwrap(),
                _ => MeasureSpec::exp(0.9).unwrap(),
            };
            let lo = range_bounds(&spec).unwrap().lo;
            prop_assume!(t1 / j as f64 > lo * 1.01 + 1e-6);
            let r1 = solve_kappa(&spec, j, t1).unwrap();
            let r2 = solve_kappa(&spec, j, t1 + bump).unwrap();
            prop_assert!(r2.kappa < r1.kappa);
            prop_assert!(rel(-r1.eval.lambda1, t1 / j as f64) < 1e-8);
        }
    }
}
