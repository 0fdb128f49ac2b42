//! Ground-truth values of `V^{*(j)}(t)`: direct grid convolution with
//! exponential tilting, plus exact closed forms for the families that
//! admit them.
//!
//! The grid path convolves the atom vector of a [`GridMeasure`] with
//! itself `j` times by binary powering (`⌈log₂ j⌉ + popcount − 1`
//! convolutions, each `O(n²)` over the truncated cell range).  Raw
//! convolution powers overflow `f64` almost immediately — `V^{*(j)}(t)`
//! grows like `e^{jλ(κ)+tκ}` — so the kernel works on *tilted* atoms
//! `e^{-κ·kh}·w_k`.  Tilting commutes with convolution:
//!
//! ```text
//! (e^{-κ·} μ)^{*j} at s  =  e^{-κs} · (μ^{*j} at s),
//! ```
//!
//! so the untilted cumulative is recovered exactly as
//! `V^{*(j)}(kh) = Σ_{m ≤ k} e^{+κ·mh} · (tilted j-fold atom at m)` —
//! no normalizing power of `V̂(κ)` is needed because the tilt is applied
//! unnormalized.  That identity is asserted in the tests by comparing
//! tilted and untilted runs of the same power.
//!
//! With `κ` near the saddle `κ(j,t)` the tilted mass concentrates around
//! `t`, which keeps every intermediate array in comfortable `f64` range;
//! each convolution additionally renormalizes by its maximum entry and
//! carries the log of the accumulated scale separately.
//!
//! Truncation at a horizon is exact for queries at or below it: the
//! measures live on `[0, ∞)`, so output cells below the horizon never
//! receive contributions from discarded cells above it.

use crate::lognum::{ln_sum_exp, LogNumber};
use crate::measure::GridMeasure;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    /// A query point lies beyond the table's truncation horizon.
    HorizonTooSmall { t: f64, horizon: f64 },
    /// The grid carries mass at fewer than two points, so no tilt can
    /// steer its mean: the convolution power is a shifted point mass.
    DegenerateGrid,
    BadInput(String),
}

impl std::fmt::Display for OracleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleError::HorizonTooSmall { t, horizon } => write!(
                f,
                "query at t = {t} exceeds the table horizon {horizon}; rebuild with a larger horizon"
            ),
            OracleError::DegenerateGrid => {
                write!(f, "grid measure is concentrated at a single point")
            }
            OracleError::BadInput(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for OracleError {}

// ---------------------------------------------------------------------------
// Scaled nonnegative vectors: values are `vals[k] · e^{ln_scale}`.
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct ScaledVec {
    vals: Vec<f64>,
    ln_scale: f64,
}

impl ScaledVec {
    fn normalize(mut self) -> Self {
        let max = self.vals.iter().cloned().fold(0.0f64, f64::max);
        if max > 0.0 && max.is_finite() {
            for v in &mut self.vals {
                *v /= max;
            }
            self.ln_scale += max.ln();
        }
        self
    }
}

/// Convolve two scaled atom vectors, truncating the output at `cap` cells.
fn conv(a: &ScaledVec, b: &ScaledVec, cap: usize) -> ScaledVec {
    let out_len = (a.vals.len() + b.vals.len() - 1).min(cap);
    let cell = |m: usize| -> f64 {
        let lo = (m + 1).saturating_sub(b.vals.len());
        let hi = m.min(a.vals.len() - 1);
        let mut acc = 0.0;
        for i in lo..=hi {
            acc += a.vals[i] * b.vals[m - i];
        }
        acc
    };
    let vals: Vec<f64> = if out_len >= 256 {
        (0..out_len).into_par_iter().map(cell).collect()
    } else {
        (0..out_len).map(cell).collect()
    };
    ScaledVec { vals, ln_scale: a.ln_scale + b.ln_scale }.normalize()
}

// ---------------------------------------------------------------------------
// Convolution tables.
// ---------------------------------------------------------------------------

/// The `j`-fold convolution power of a grid measure, held tilted.
///
/// `tilted_atoms[k]` is `e^{-tilt·kh}` times the `j`-fold atom at `kh`;
/// `cumulative[k]` is the *untilted* `V^{*(j)}(kh)`, rebuilt from the
/// tilted atoms through the exact inverse weights `e^{+tilt·kh}`.
#[derive(Clone)]
pub struct ConvolutionTable {
    pub base: GridMeasure,
    pub j: u64,
    pub tilt: f64,
    pub tilted_atoms: Vec<LogNumber>,
    pub cumulative: Vec<LogNumber>,
    /// True when some convolution hit the horizon cap, i.e. cells above
    /// the last stored one were discarded.  When false the table ends at
    /// the power's true support end and the final cumulative is total.
    pub truncated: bool,
}

impl ConvolutionTable {
    pub fn h(&self) -> f64 {
        self.base.h()
    }

    /// Largest grid coordinate the table covers.
    pub fn horizon(&self) -> f64 {
        (self.cumulative.len().saturating_sub(1)) as f64 * self.base.h()
    }

    /// `V^{*(j)}(t)`: the untilted cumulative at the largest grid point
    /// `≤ t` (the grid function is right-continuous and flat between
    /// grid points).
    pub fn untilted_value_at(&self, t: f64) -> Result<LogNumber, OracleError> {
        if !t.is_finite() {
            return Err(OracleError::BadInput(format!("query point must be finite, got {t}")));
        }
        if t < 0.0 {
            return Ok(LogNumber::zero());
        }
        let k = ((t / self.base.h()) * (1.0 + 1e-12)).floor() as usize;
        if k >= self.cumulative.len() {
            if self.truncated {
                return Err(OracleError::HorizonTooSmall { t, horizon: self.horizon() });
            }
            // Nothing was discarded: beyond the support end the
            // cumulative is constant at the total mass.
            return Ok(*self.cumulative.last().expect("tables are never empty"));
        }
        Ok(self.cumulative[k])
    }

    /// The untilted `j`-fold atom at cell `k`.
    pub fn untilted_atom(&self, k: usize) -> LogNumber {
        match self.tilted_atoms.get(k) {
            Some(m) => m.scaled_by_exp(self.tilt * k as f64 * self.base.h()),
            None => LogNumber::zero(),
        }
    }

    /// CSV rows `grid_x,log_v_star_j` (natural log of the untilted
    /// cumulative; `-inf` where the cumulative is still zero).
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.cumulative.len() + 1));
        out.push_str("grid_x,log_v_star_j\n");
        let h = self.base.h();
        for (k, c) in self.cumulative.iter().enumerate() {
            out.push_str(&format!("{:.12e},{:.12e}\n", k as f64 * h, c.ln_abs()));
        }
        out
    }
}

/// Default truncation horizon for a target argument `t`: generous
/// multiples of both the target and the tilted standard deviation, so
/// the concentrated mass and its Gaussian shoulder are fully covered.
pub fn default_horizon(t: f64, a_j: f64) -> f64 {
    4.0 * t + 10.0 * a_j
}

/// `j`-fold convolution power of `gm`, tilted by `e^{-kappa·x}` and
/// truncated at `horizon` (values queried at or below the horizon are
/// unaffected by the truncation; see the module notes).
pub fn convolve_power(
    gm: &GridMeasure,
    j: u64,
    kappa: f64,
    horizon: f64,
) -> Result<ConvolutionTable, OracleError> {
    if j < 1 {
        return Err(OracleError::BadInput("power j must be >= 1".into()));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(OracleError::BadInput(format!("tilt must be finite and >= 0, got {kappa}")));
    }
    let h = gm.h();
    if !(horizon >= h && horizon.is_finite()) {
        return Err(OracleError::BadInput(format!(
            "horizon must be finite and >= one grid step, got {horizon}"
        )));
    }
    let cap = ((horizon / h) * (1.0 + 1e-12)).floor() as usize + 1;

    // Tilted base atoms in scaled-f64 form, trimmed to the cap (cells
    // above the cap cannot touch any retained output cell) and rescaled
    // once up front so a strongly tilted base is well-ranged.
    let n_base = gm.len().min(cap);
    let ln_atoms: Vec<f64> = (0..n_base)
        .map(|k| gm.mass(k).ln_abs() - kappa * k as f64 * h)
        .collect();
    let max_ln = ln_atoms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let base = if max_ln.is_finite() {
        ScaledVec { vals: ln_atoms.iter().map(|l| (l - max_ln).exp()).collect(), ln_scale: max_ln }
    } else {
        // No mass at all: powers of the zero measure are zero.
        ScaledVec { vals: vec![0.0; n_base.max(1)], ln_scale: 0.0 }
    };

    // Binary powering, tracking whether any step actually discarded
    // cells (if none did, the table ends at the true support end).
    let mut truncated = gm.len() > cap;
    let mut capped_conv = |a: &ScaledVec, b: &ScaledVec| {
        if a.vals.len() + b.vals.len() - 1 > cap {
            truncated = true;
        }
        conv(a, b, cap)
    };
    let mut result: Option<ScaledVec> = None;
    let mut sq = base;
    let mut e = j;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => sq.clone(),
                Some(r) => capped_conv(&r, &sq),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        sq = capped_conv(&sq, &sq);
    }
    let power = result.expect("j >= 1 always yields a result");

    let tilted_atoms: Vec<LogNumber> = power
        .vals
        .iter()
        .map(|v| LogNumber::from_ln(v.ln() + power.ln_scale))
        .collect();
    let mut cumulative = Vec::with_capacity(tilted_atoms.len());
    let mut acc = LogNumber::zero();
    for (k, m) in tilted_atoms.iter().enumerate() {
        acc += m.scaled_by_exp(kappa * k as f64 * h);
        cumulative.push(acc);
    }
    Ok(ConvolutionTable { base: gm.clone(), j, tilt: kappa, tilted_atoms, cumulative, truncated })
}

// ---------------------------------------------------------------------------
// Exact closed forms.
// ---------------------------------------------------------------------------

/// `V^{*(j)}(t)` for `V(x) = b·x^α`: equals
/// `(bΓ(α+1))^j · t^{jα} / Γ(jα+1)` (the transform is an exact power of
/// `s^{-α}`, and the inversion of `s^{-jα}` is again a pure power).
///
/// Panics if `b ≤ 0`, `α ≤ 0`, `j < 1`, or `t < 0`.
pub fn exact_power_law(b: f64, alpha: f64, j: u64, t: f64) -> LogNumber {
    assert!(b > 0.0 && alpha > 0.0, "power-law parameters must be positive");
    assert!(j >= 1, "power j must be >= 1");
    assert!(t >= 0.0, "argument must be nonnegative");
    if t == 0.0 {
        return LogNumber::zero();
    }
    let ja = j as f64 * alpha;
    let ln = j as f64 * (b.ln() + ln_gamma(alpha + 1.0)) + ja * t.ln() - ln_gamma(ja + 1.0);
    LogNumber::from_ln(ln)
}

/// `V^{*(j)}(t)` for `V(x) = e^{ax} - 1`: equals
/// `∫₀^{at} y^{j-1} e^y dy / (j-1)!`.
///
/// Evaluated on the log scale by an all-positive series for `at ≤ 2j`
/// and by the terminating integration-by-parts form for larger
/// arguments; both target better than `1e-12` relative accuracy.
///
/// Panics if `a ≤ 0`, `j < 1`, or `t < 0`.
pub fn exact_shifted_exp(a: f64, j: u64, t: f64) -> LogNumber {
    assert!(a > 0.0, "rate must be positive");
    assert!(j >= 1, "power j must be >= 1");
    assert!(t >= 0.0, "argument must be nonnegative");
    let x = a * t;
    if x == 0.0 {
        return LogNumber::zero();
    }
    let jf = j as f64;
    if x <= 2.0 * jf {
        // Σ_{n≥0} x^{j+n} / (n! (j+n) (j-1)!): every term positive, so a
        // log-sum-exp over the term ladder loses nothing to cancellation.
        let mut ln_terms = Vec::new();
        let mut ln_t = jf * x.ln() - jf.ln() - ln_gamma(jf);
        let mut peak = ln_t;
        let mut n = 0usize;
        loop {
            ln_terms.push(ln_t);
            peak = peak.max(ln_t);
            let nf = n as f64;
            // t_{n+1}/t_n = x/(n+1) · (j+n)/(j+n+1).
            ln_t += x.ln() - (nf + 1.0).ln() + (jf + nf).ln() - (jf + nf + 1.0).ln();
            n += 1;
            if nf > x && ln_t < peak - 46.0 {
                break;
            }
            assert!(n < 20_000_000, "series for the exponential family failed to terminate");
        }
        LogNumber::from_ln(ln_sum_exp(ln_terms))
    } else {
        // ∫₀^x y^{j-1}e^y dy = (-1)^{j-1}(j-1)! (e^x T_{j-1}(-x) - 1)
        // with T the truncated exponential sum.  For x > 2j consecutive
        // terms of T shrink by at least 2, so the alternating sum keeps
        // most of its leading digits.
        let mut alt = 0.0f64; // Σ (-1)^i ∏_{l=1..i} (j-l)/x, the sum scaled by its last term
        let mut prod = 1.0f64;
        let mut sign = 1.0f64;
        for i in 0..j {
            alt += sign * prod;
            sign = -sign;
            prod *= (jf - 1.0 - i as f64) / x;
            if prod < 1e-22 {
                break;
            }
        }
        let ln_t_abs = (jf - 1.0) * x.ln() - ln_gamma(jf) + alt.ln();
        let big = LogNumber::from_ln(x + ln_t_abs);
        if j % 2 == 1 {
            big - LogNumber::one()
        } else {
            big + LogNumber::one()
        }
    }
}

/// `L_j(-t)` for `t ≥ 0` by the three-term recurrence on the log scale.
/// At negative argument every polynomial value is positive and the
/// recurrence subtracts a strictly smaller term, so `log1p` keeps it
/// stable to near machine precision.
///
/// Panics if `t < 0` or `t` is not finite.
pub fn laguerre_eval(j: u64, t: f64) -> LogNumber {
    assert!(t >= 0.0 && t.is_finite(), "argument -t must have t >= 0 finite");
    if j == 0 {
        return LogNumber::one();
    }
    let mut ln_prev = 0.0f64; // L_0 = 1
    let mut ln_cur = t.ln_1p(); // L_1(-t) = 1 + t
    for n in 1..j {
        let nf = n as f64;
        let a = ln_cur + (2.0 * nf + 1.0 + t).ln();
        let b = ln_prev + nf.ln();
        let ln_next = a + (-((b - a).exp())).ln_1p() - (nf + 1.0).ln();
        ln_prev = ln_cur;
        ln_cur = ln_next;
    }
    LogNumber::from_ln(ln_cur)
}

/// Exact `j`-fold power of `V(t) = a·t + b` (the `Affine{a,b}` family) by
/// reduction to the unit case: `V(t) = b·(1 + (a/b)t)` gives
/// `V^{*(j)}(t) = b^j · L_j(-(a/b)t)` — mass scales per convolution
/// factor, and the time change commutes with convolution.
///
/// Panics on nonpositive `a` or `b`, `t < 0`, or nonfinite `t`.
pub fn exact_affine(a: f64, b: f64, j: u64, t: f64) -> LogNumber {
    assert!(a > 0.0 && a.is_finite(), "slope must be positive");
    assert!(b > 0.0 && b.is_finite(), "mass at zero must be positive");
    laguerre_eval(j, a * t / b).scaled_by_exp(j as f64 * b.ln())
}

// ---------------------------------------------------------------------------
// Tilted moments.
// ---------------------------------------------------------------------------

/// Mean and variance of the *normalized* tilted single-step law
/// `p_k ∝ w_k e^{-s·kh}`, for an arbitrary tilt `s` (callers who want the
/// grid-solved tilt should use [`tilt_moments`]).  `None` when every
/// tilted weight underflows to zero.
pub fn tilted_step_moments(gm: &GridMeasure, s: f64) -> Option<(f64, f64)> {
    let h = gm.h();
    let ln_w: Vec<(f64, f64)> = gm
        .atoms()
        .map(|(k, m)| {
            let x = k as f64 * h;
            (x, m.ln_abs() - s * x)
        })
        .collect();
    let peak = ln_w.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return None;
    }
    let mut total = 0.0;
    let mut m1 = 0.0;
    for (x, l) in &ln_w {
        let w = (l - peak).exp();
        total += w;
        m1 += x * w;
    }
    let mean = m1 / total;
    let mut m2c = 0.0;
    for (x, l) in &ln_w {
        m2c += (x - mean) * (x - mean) * (l - peak).exp();
    }
    Some((mean, m2c / total))
}

/// Mean and variance of the tilted `j`-fold convolution law steered to
/// target `t`: the tilt is solved on the grid itself so that the
/// single-step tilted mean is `t/j`, and the `j`-fold moments follow
/// exactly as `j` times the single-step ones (the tilted power law is
/// the law of a sum of `j` independent tilted steps; the tests verify
/// this identity against an explicitly convolved table).
///
/// Returns `(mean, variance)` for comparison with `t` and `j·λ″(κ)`.
pub fn tilt_moments(gm: &GridMeasure, j: u64, t: f64) -> Result<(f64, f64), OracleError> {
    if j < 1 {
        return Err(OracleError::BadInput("power j must be >= 1".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(OracleError::BadInput(format!("target must be finite and > 0, got {t}")));
    }
    let support: Vec<usize> = gm.atoms().map(|(k, _)| k).collect();
    if support.len() < 2 {
        // A point mass has zero variance under every tilt; the families
        // upstream exclude it because no tilt can move its mean.
        return Err(OracleError::DegenerateGrid);
    }
    let h = gm.h();
    let x_min = support[0] as f64 * h;
    let tau = t / j as f64;
    let mean_at = |s: f64| tilted_step_moments(gm, s).map(|(m, _)| m);
    let m0 = mean_at(0.0)
        .ok_or_else(|| OracleError::BadInput("grid has no positive mass".into()))?;
    if tau >= m0 {
        return Err(OracleError::BadInput(format!(
            "target mean {tau} per step is not below the untilted grid mean {m0}; \
             a nonnegative tilt cannot reach it"
        )));
    }
    if tau <= x_min {
        return Err(OracleError::BadInput(format!(
            "target mean {tau} per step does not exceed the grid support minimum {x_min}"
        )));
    }
    // Bracket: the tilted mean decreases continuously from m0 to x_min.
    let mut hi = 1.0f64;
    let mut guard = 0;
    while mean_at(hi).map(|m| m > tau).unwrap_or(false) {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(OracleError::BadInput(
                "tilt solve failed to bracket the target mean".into(),
            ));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        match mean_at(mid) {
            Some(m) if m > tau => lo = mid,
            Some(_) => hi = mid,
            None => return Err(OracleError::BadInput("tilted grid lost all mass".into())),
        }
    }
    let kappa = 0.5 * (lo + hi);
    let (mean, var) = tilted_step_moments(gm, kappa)
        .ok_or_else(|| OracleError::BadInput("tilted grid lost all mass".into()))?;
    Ok((j as f64 * mean, j as f64 * var))
}
