//! Measure specifications and their grid discretization.
//!
//! A [`MeasureSpec`] names a nondecreasing right-continuous `V : [0, ∞) → [0, ∞)`
//! with `V(x) → ∞` (the induced Lebesgue–Stieltjes measure is what gets
//! convolved).  Seven parametric families cover the closed-form and
//! quadrature test cases; `Lattice`, `Tabulated`, and `Density` admit user
//! data.  For `Lattice` and `Tabulated` the unboundedness of `V` is declared
//! by the caller, not checkable from the finite data: such specs are treated
//! as truncations of an unbounded object, which is enough for every grid
//! computation here (all of them only look at a finite window).
//!
//! [`discretize`] projects a spec onto a step grid: atom `k ≥ 1` carries the
//! mass of the half-open cell `((k-1)h, kh]` (right-continuous convention)
//! and atom `0` carries `V(0)`, so lattice masses land on exact grid
//! positions whenever `h` divides the span and offset, and step functions
//! are reproduced without smearing.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::lognum::LogNumber;
use crate::quad::{self, QuadError};

/// Relative tolerance for per-cell and cumulative density integration.
pub const CELL_QUAD_REL_TOL: f64 = 1e-10;
const CELL_QUAD_MAX_IV: usize = 2000;

#[derive(Debug, Clone)]
pub enum MeasureError {
    /// Parameters violate the family's constraints, or the data does not
    /// describe a nondecreasing `V` with locally finite mass.
    InvalidSpec(String),
    /// `Density` specs carry a closure and cannot round-trip through JSON.
    NotSerializable(&'static str),
    /// Numeric integration of a density failed (diverged or hit NaN).
    Quadrature(QuadError),
    /// JSON parse or encode failure.
    Json(String),
}

impl fmt::Display for MeasureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureError::InvalidSpec(m) => write!(f, "invalid measure spec: {m}"),
            MeasureError::NotSerializable(m) => write!(f, "spec not serializable: {m}"),
            MeasureError::Quadrature(e) => write!(f, "density integration failed: {e}"),
            MeasureError::Json(m) => write!(f, "spec JSON error: {m}"),
        }
    }
}

impl std::error::Error for MeasureError {}

impl From<QuadError> for MeasureError {
    fn from(e: QuadError) -> Self {
        MeasureError::Quadrature(e)
    }
}

/// Callable density for user-supplied absolutely continuous parts.
pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A nondecreasing unbounded `V` on the half-line.
///
/// The built-in families, with `V` and (where stated) its transform in
/// closed form:
///
/// | variant            | `V(x)` for `x ≥ 0`                          |
/// |--------------------|---------------------------------------------|
/// | `PowerLaw{b,α}`    | `b x^α`                                     |
/// | `Affine{a,b}`      | `a x + b` (atom `b` at zero)                |
/// | `LogPower{α}`      | `log^α(x+1)`                                |
/// | `SqrtExpDensity`   | `e^{√x} - 1` (density `½ x^{-1/2} e^{√x}`)  |
/// | `ShiftedExp{a}`    | `e^{ax} - 1`                                |
/// | `Exp{a}`           | `e^{ax}` (atom `1` at zero)                 |
/// | `HeavyExpDensity{α}` | density `(x+1)^{-2-α} e^x` — transform domain starts at 1, endpoint included |
///
/// `Lattice` places masses at `offset + k·span`; `Tabulated` is a step
/// function through values at `k·h`; `Density` wraps a callable
/// `x ↦ dV/dx ≥ 0` plus an optional atom at zero.
#[derive(Clone)]
pub enum MeasureSpec {
    PowerLaw { b: f64, alpha: f64 },
    Affine { a: f64, b: f64 },
    LogPower { alpha: f64 },
    SqrtExpDensity,
    ShiftedExp { a: f64 },
    Exp { a: f64 },
    HeavyExpDensity { alpha: f64 },
    Lattice { span: f64, offset: f64, masses: Vec<f64> },
    Density { f: DensityFn, atom_at_zero: f64 },
    Tabulated { h: f64, values: Vec<f64> },
}

// `fmt::Debug` cannot derive past the closure in `Density`; everything else
// prints its parameters.
impl fmt::Debug for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureSpec::PowerLaw { b, alpha } => {
                write!(f, "PowerLaw {{ b: {b}, alpha: {alpha} }}")
            }
            MeasureSpec::Affine { a, b } => write!(f, "Affine {{ a: {a}, b: {b} }}"),
            MeasureSpec::LogPower { alpha } => write!(f, "LogPower {{ alpha: {alpha} }}"),
            MeasureSpec::SqrtExpDensity => write!(f, "SqrtExpDensity"),
            MeasureSpec::ShiftedExp { a } => write!(f, "ShiftedExp {{ a: {a} }}"),
            MeasureSpec::Exp { a } => write!(f, "Exp {{ a: {a} }}"),
            MeasureSpec::HeavyExpDensity { alpha } => {
                write!(f, "HeavyExpDensity {{ alpha: {alpha} }}")
            }
            MeasureSpec::Lattice { span, offset, masses } => {
                write!(f, "Lattice {{ span: {span}, offset: {offset}, masses: {masses:?} }}")
            }
            MeasureSpec::Density { atom_at_zero, .. } => {
                write!(f, "Density {{ f: <fn>, atom_at_zero: {atom_at_zero} }}")
            }
            MeasureSpec::Tabulated { h, values } => {
                write!(f, "Tabulated {{ h: {h}, values: {values:?} }}")
            }
        }
    }
}

fn require(cond: bool, msg: &str) -> Result<(), MeasureError> {
    if cond {
        Ok(())
    } else {
        Err(MeasureError::InvalidSpec(msg.to_string()))
    }
}

impl MeasureSpec {
    pub fn power_law(b: f64, alpha: f64) -> Result<Self, MeasureError> {
        require(b > 0.0 && b.is_finite(), "power_law needs b > 0")?;
        require(alpha > 0.0 && alpha.is_finite(), "power_law needs alpha > 0")?;
        Ok(MeasureSpec::PowerLaw { b, alpha })
    }

    pub fn affine(a: f64, b: f64) -> Result<Self, MeasureError> {
        require(a > 0.0 && a.is_finite(), "affine needs a > 0")?;
        require(b > 0.0 && b.is_finite(), "affine needs b > 0")?;
        Ok(MeasureSpec::Affine { a, b })
    }

    pub fn log_power(alpha: f64) -> Result<Self, MeasureError> {
        require(alpha > 0.0 && alpha.is_finite(), "log_power needs alpha > 0")?;
        Ok(MeasureSpec::LogPower { alpha })
    }

    pub fn sqrt_exp_density() -> Self {
        MeasureSpec::SqrtExpDensity
    }

    pub fn shifted_exp(a: f64) -> Result<Self, MeasureError> {
        require(a > 0.0 && a.is_finite(), "shifted_exp needs a > 0")?;
        Ok(MeasureSpec::ShiftedExp { a })
    }

    pub fn exp(a: f64) -> Result<Self, MeasureError> {
        require(a > 0.0 && a.is_finite(), "exp needs a > 0")?;
        Ok(MeasureSpec::Exp { a })
    }

    pub fn heavy_exp_density(alpha: f64) -> Result<Self, MeasureError> {
        require(alpha > 0.0 && alpha.is_finite(), "heavy_exp_density needs alpha > 0")?;
        Ok(MeasureSpec::HeavyExpDensity { alpha })
    }

    pub fn lattice(span: f64, offset: f64, masses: Vec<f64>) -> Result<Self, MeasureError> {
        require(span > 0.0 && span.is_finite(), "lattice needs span > 0")?;
        require(offset >= 0.0 && offset.is_finite(), "lattice needs offset >= 0")?;
        require(!masses.is_empty(), "lattice needs at least one mass")?;
        require(
            masses.iter().all(|m| m.is_finite() && *m >= 0.0),
            "lattice masses must be finite and nonnegative",
        )?;
        require(masses.iter().any(|m| *m > 0.0), "lattice needs a positive mass")?;
        Ok(MeasureSpec::Lattice { span, offset, masses })
    }

    pub fn density(f: DensityFn, atom_at_zero: f64) -> Result<Self, MeasureError> {
        require(
            atom_at_zero >= 0.0 && atom_at_zero.is_finite(),
            "density needs atom_at_zero >= 0",
        )?;
        Ok(MeasureSpec::Density { f, atom_at_zero })
    }

    pub fn tabulated(h: f64, values: Vec<f64>) -> Result<Self, MeasureError> {
        require(h > 0.0 && h.is_finite(), "tabulated needs h > 0")?;
        require(values.len() >= 2, "tabulated needs at least two values")?;
        require(
            values.iter().all(|v| v.is_finite() && *v >= 0.0),
            "tabulated values must be finite and nonnegative",
        )?;
        require(
            values.windows(2).all(|w| w[1] >= w[0]),
            "tabulated values must be nondecreasing",
        )?;
        require(*values.last().unwrap() > 0.0, "tabulated V must become positive")?;
        Ok(MeasureSpec::Tabulated { h, values })
    }

    /// `V(x)`; zero for `x < 0`.  Quadrature-backed for `HeavyExpDensity`
    /// and user densities, closed form everywhere else.
    pub fn eval_v(&self, x: f64) -> Result<LogNumber, MeasureError> {
        if x < 0.0 {
            return Ok(LogNumber::zero());
        }
        Ok(match self {
            MeasureSpec::PowerLaw { b, alpha } => {
                if x == 0.0 {
                    LogNumber::zero()
                } else {
                    LogNumber::from_ln(b.ln() + alpha * x.ln())
                }
            }
            MeasureSpec::Affine { a, b } => LogNumber::from_f64(a * x + b),
            MeasureSpec::LogPower { alpha } => {
                if x == 0.0 {
                    LogNumber::zero()
                } else {
                    LogNumber::from_ln(alpha * x.ln_1p().ln())
                }
            }
            MeasureSpec::SqrtExpDensity => {
                // e^{√x} - 1, kept accurate near zero via expm1.
                LogNumber::from_ln(x.sqrt().exp_m1().ln())
            }
            MeasureSpec::ShiftedExp { a } => LogNumber::from_ln((a * x).exp_m1().ln()),
            MeasureSpec::Exp { a } => LogNumber::from_ln(a * x),
            MeasureSpec::HeavyExpDensity { alpha } => {
                let al = *alpha;
                let f_ln = move |u: f64| u - (2.0 + al) * u.ln_1p();
                quad::integrate_ln(&f_ln, 0.0, x, CELL_QUAD_REL_TOL, CELL_QUAD_MAX_IV)?
            }
            MeasureSpec::Lattice { span, offset, masses } => {
                let mut acc = LogNumber::zero();
                for (k, &m) in masses.iter().enumerate() {
                    if offset + k as f64 * span <= x && m > 0.0 {
                        acc += LogNumber::from_f64(m);
                    }
                }
                acc
            }
            MeasureSpec::Density { f, atom_at_zero } => {
                let f = f.clone();
                let f_ln = move |u: f64| {
                    let v = f(u);
                    if v < 0.0 {
                        f64::NAN
                    } else {
                        v.ln()
                    }
                };
                let mut acc = LogNumber::from_f64(*atom_at_zero);
                acc += quad::integrate_ln(&f_ln, 0.0, x, CELL_QUAD_REL_TOL, CELL_QUAD_MAX_IV)?;
                acc
            }
            MeasureSpec::Tabulated { h, values } => {
                let k = ((x / h) * (1.0 + 1e-14)).floor() as usize;
                let k = k.min(values.len() - 1);
                LogNumber::from_f64(values[k])
            }
        })
    }

    /// `inf {x > 0 : V(x) > 0}` — the left edge of the support, which is
    /// also the infimum of `-λ'` over the transform domain.
    pub fn support_infimum(&self) -> Result<f64, MeasureError> {
        Ok(match self {
            MeasureSpec::PowerLaw { .. }
            | MeasureSpec::Affine { .. }
            | MeasureSpec::LogPower { .. }
            | MeasureSpec::SqrtExpDensity
            | MeasureSpec::ShiftedExp { .. }
            | MeasureSpec::Exp { .. }
            | MeasureSpec::HeavyExpDensity { .. } => 0.0,
            MeasureSpec::Lattice { span, offset, masses } => {
                let k = masses
                    .iter()
                    .position(|m| *m > 0.0)
                    .expect("validated: some mass positive");
                offset + k as f64 * span
            }
            MeasureSpec::Tabulated { h, values } => {
                if values[0] > 0.0 {
                    0.0
                } else {
                    let k = values
                        .iter()
                        .position(|v| *v > 0.0)
                        .expect("validated: V becomes positive");
                    k as f64 * h
                }
            }
            MeasureSpec::Density { f, atom_at_zero } => {
                if *atom_at_zero > 0.0 {
                    return Ok(0.0);
                }
                // Numeric probe: find a window with mass, then bisect its
                // left edge.  Honest for densities whose support is an
                // interval; documented as a numeric estimate.
                let mut hi = 1.0;
                let mut grew = 0;
                while self.eval_v(hi)?.is_zero() {
                    hi *= 2.0;
                    grew += 1;
                    if grew > 80 {
                        return Err(MeasureError::InvalidSpec(
                            "density carries no detectable mass".into(),
                        ));
                    }
                }
                let mut lo = 0.0;
                let f = f.clone();
                let f_ln = move |u: f64| {
                    let v = f(u);
                    if v < 0.0 {
                        f64::NAN
                    } else {
                        v.ln()
                    }
                };
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let m = quad::integrate_ln(&f_ln, lo, mid, 1e-6, 200)?;
                    if m.is_zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        })
    }

    /// True when the family needs numeric integration for `V` or its transform.
    pub fn is_quadrature_family(&self) -> bool {
        matches!(
            self,
            MeasureSpec::LogPower { .. }
                | MeasureSpec::SqrtExpDensity
                | MeasureSpec::HeavyExpDensity { .. }
                | MeasureSpec::Density { .. }
        )
    }
}

// ---------------------------------------------------------------------------
// JSON round-trip.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum SpecJson {
    PowerLaw { b: f64, alpha: f64 },
    Affine { a: f64, b: f64 },
    LogPower { alpha: f64 },
    SqrtExpDensity,
    ShiftedExp { a: f64 },
    Exp { a: f64 },
    HeavyExpDensity { alpha: f64 },
    Lattice { span: f64, offset: f64, masses: Vec<f64> },
    Tabulated { h: f64, #[serde(rename = "V")] values: Vec<f64> },
}

impl MeasureSpec {
    /// Parse the JSON form (`{"family": "...", ...}`); field names are part
    /// of the CLI contract.  `Density` has no JSON form.
    pub fn from_json(text: &str) -> Result<Self, MeasureError> {
        let raw: SpecJson =
            serde_json::from_str(text).map_err(|e| MeasureError::Json(e.to_string()))?;
        match raw {
            SpecJson::PowerLaw { b, alpha } => MeasureSpec::power_law(b, alpha),
            SpecJson::Affine { a, b } => MeasureSpec::affine(a, b),
            SpecJson::LogPower { alpha } => MeasureSpec::log_power(alpha),
            SpecJson::SqrtExpDensity => Ok(MeasureSpec::sqrt_exp_density()),
            SpecJson::ShiftedExp { a } => MeasureSpec::shifted_exp(a),
            SpecJson::Exp { a } => MeasureSpec::exp(a),
            SpecJson::HeavyExpDensity { alpha } => MeasureSpec::heavy_exp_density(alpha),
            SpecJson::Lattice { span, offset, masses } => {
                MeasureSpec::lattice(span, offset, masses)
            }
            SpecJson::Tabulated { h, values } => MeasureSpec::tabulated(h, values),
        }
    }

    pub fn to_json(&self) -> Result<String, MeasureError> {
        let raw = match self {
            MeasureSpec::PowerLaw { b, alpha } => SpecJson::PowerLaw { b: *b, alpha: *alpha },
            MeasureSpec::Affine { a, b } => SpecJson::Affine { a: *a, b: *b },
            MeasureSpec::LogPower { alpha } => SpecJson::LogPower { alpha: *alpha },
            MeasureSpec::SqrtExpDensity => SpecJson::SqrtExpDensity,
            MeasureSpec::ShiftedExp { a } => SpecJson::ShiftedExp { a: *a },
            MeasureSpec::Exp { a } => SpecJson::Exp { a: *a },
            MeasureSpec::HeavyExpDensity { alpha } => {
                SpecJson::HeavyExpDensity { alpha: *alpha }
            }
            MeasureSpec::Lattice { span, offset, masses } => SpecJson::Lattice {
                span: *span,
                offset: *offset,
                masses: masses.clone(),
            },
            MeasureSpec::Tabulated { h, values } => {
                SpecJson::Tabulated { h: *h, values: values.clone() }
            }
            MeasureSpec::Density { .. } => {
                return Err(MeasureError::NotSerializable(
                    "density specs wrap a closure; pass tabulated data instead",
                ))
            }
        };
        serde_json::to_string(&raw).map_err(|e| MeasureError::Json(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Grid discretization.
// ---------------------------------------------------------------------------

/// A measure restricted to the grid `{0, h, 2h, ...}`.
///
/// `masses[k]` is the mass assigned to position `k·h`; masses live on the
/// log scale from the start so discretized unbounded tails (e.g. `e^{ax}`
/// increments out to large `x`) never overflow.  `tilt` records the total
/// exponential tilt applied: a grid with `tilt = κ` holds
/// `e^{-κ·kh} · (original mass)` at each `k`.
#[derive(Clone, Debug)]
pub struct GridMeasure {
    h: f64,
    masses: Vec<LogNumber>,
    tilt: f64,
}

impl GridMeasure {
    /// Build from a dense mass vector.  Masses must be nonnegative.
    pub fn from_masses(h: f64, masses: Vec<LogNumber>, tilt: f64) -> Result<Self, MeasureError> {
        require(h > 0.0 && h.is_finite(), "grid step must be positive")?;
        require(!masses.is_empty(), "grid needs at least one cell")?;
        require(
            masses.iter().all(|m| m.sign() >= 0),
            "grid masses must be nonnegative",
        )?;
        Ok(GridMeasure { h, masses, tilt })
    }

    /// Build from sparse `(index, mass)` atoms with strictly increasing indices.
    pub fn from_atoms(
        h: f64,
        atoms: &[(usize, LogNumber)],
        tilt: f64,
    ) -> Result<Self, MeasureError> {
        require(!atoms.is_empty(), "grid needs at least one atom")?;
        require(
            atoms.windows(2).all(|w| w[1].0 > w[0].0),
            "atom indices must be strictly increasing",
        )?;
        let n = atoms.last().unwrap().0;
        let mut masses = vec![LogNumber::zero(); n + 1];
        for &(k, m) in atoms {
            require(m.sign() >= 0, "grid masses must be nonnegative")?;
            masses[k] = m;
        }
        GridMeasure::from_masses(h, masses, tilt)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn tilt(&self) -> f64 {
        self.tilt
    }

    pub fn mass(&self, k: usize) -> LogNumber {
        self.masses.get(k).copied().unwrap_or_else(LogNumber::zero)
    }

    pub fn masses(&self) -> &[LogNumber] {
        &self.masses
    }

    /// Sparse view: the nonzero atoms in increasing index order.
    pub fn atoms(&self) -> impl Iterator<Item = (usize, LogNumber)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(|(k, m)| (k, *m))
    }

    pub fn total_mass(&self) -> LogNumber {
        let mut acc = LogNumber::zero();
        for m in &self.masses {
            acc += *m;
        }
        acc
    }

    /// Apply an additional exponential tilt `e^{-κ·kh}` to every atom.
    /// Exact in the log representation, so tilting by `κ` and then `-κ`
    /// returns the original masses up to one rounding each way.
    pub fn tilted(&self, kappa: f64) -> GridMeasure {
        let masses = self
            .masses
            .iter()
            .enumerate()
            .map(|(k, m)| m.scaled_by_exp(-kappa * k as f64 * self.h))
            .collect();
        GridMeasure { h: self.h, masses, tilt: self.tilt + kappa }
    }

    /// `V(kh)` for the grid measure: cumulative mass through index `k`.
    pub fn cumulative(&self, k: usize) -> LogNumber {
        let mut acc = LogNumber::zero();
        for m in self.masses.iter().take(k + 1) {
            acc += *m;
        }
        acc
    }
}

/// Project `spec` onto the grid `{0, h, ..., floor(x_max/h)·h}`.
///
/// Families with a closed or step-form `V` discretize by exact differences
/// `V(kh) - V((k-1)h)`; density families integrate each cell with the
/// adaptive rule at `1e-10` relative.  A density whose mass near some point
/// is not locally finite (so a cell integral diverges) is rejected as an
/// invalid spec.
pub fn discretize(spec: &MeasureSpec, h: f64, x_max: f64) -> Result<GridMeasure, MeasureError> {
    require(h > 0.0 && h.is_finite(), "discretize needs h > 0")?;
    require(x_max >= h, "discretize needs x_max >= h")?;
    let n = ((x_max / h) * (1.0 + 1e-12)).floor() as usize;
    let mut masses = Vec::with_capacity(n + 1);

    match spec {
        MeasureSpec::HeavyExpDensity { alpha } => {
            let al = *alpha;
            masses.push(LogNumber::zero());
            let f_ln = move |u: f64| u - (2.0 + al) * u.ln_1p();
            for k in 1..=n {
                masses.push(cell_mass(&f_ln, (k - 1) as f64 * h, k as f64 * h)?);
            }
        }
        MeasureSpec::Density { f, atom_at_zero } => {
            let f = f.clone();
            masses.push(LogNumber::from_f64(*atom_at_zero));
            let f_ln = move |u: f64| {
                let v = f(u);
                if v < 0.0 {
                    f64::NAN
                } else {
                    v.ln()
                }
            };
            for k in 1..=n {
                masses.push(cell_mass(&f_ln, (k - 1) as f64 * h, k as f64 * h)?);
            }
        }
        _ => {
            // Closed-form or step V: exact telescoping differences.
            let mut prev = spec.eval_v(0.0)?;
            masses.push(prev);
            for k in 1..=n {
                let cur = spec.eval_v(k as f64 * h)?;
                let diff = cur - prev;
                // Guard the subtraction: V is nondecreasing, so a negative
                // difference can only be rounding noise.
                masses.push(if diff.sign() < 0 { LogNumber::zero() } else { diff });
                prev = cur;
            }
        }
    }
    GridMeasure::from_masses(h, masses, 0.0)
}

fn cell_mass(
    f_ln: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
) -> Result<LogNumber, MeasureError> {
    match quad::integrate_ln(f_ln, a, b, CELL_QUAD_REL_TOL, CELL_QUAD_MAX_IV) {
        Ok(v) => {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(MeasureError::InvalidSpec(format!(
                    "cell ({a}, {b}] has infinite mass"
                )))
            }
        }
        // Divergence shows up either as a stalled estimate or as the
        // integrand overflowing mid-cell; both mean V(h) is not finite.
        Err(e) => Err(MeasureError::InvalidSpec(format!(
            "cell ({a}, {b}] mass is not locally finite: {e}"
        ))),
    }
}
