//! Exact symbolic series for the linear-growth expansion coefficients.
//!
//! Measures of the form `V(x) = a·x + ε(x)` (bounded-variation remainder
//! with moments `β_k = ∫ y^k dε(y)`) have transforms
//! `V̂(s)·s/a = 1 + u(s)` with `u(s) = Σ_k (-1)^k β_k s^{k+1}/(a·k!)`, so
//! `λ(s) = -log s + log a + Σ_k δ_k s^k` where the `δ_k` come from
//! composing `log(1 + u)`.  Inverting the saddle equation
//! `-λ'(ℓ(w)) = 1/w` order by order yields `ℓ(w) = w + Σ_k ι_k w^{k+1}`,
//! and the `ι_k` are what the growth expansion consumes.
//!
//! Orders 1–3 have well-known closed forms; orders 4 and 5 are generated
//! here by the same elimination, performed symbolically over exact
//! rationals in the variables `β₀..β₄` and `1/a` so that the published
//! low-order identities can be asserted as polynomial identities, not
//! just spot-checked at sample points.

use std::collections::BTreeMap;
use std::sync::OnceLock;

/// Highest supported expansion order.
pub const MAX_ORDER: usize = 5;

/// Numeric expansion coefficients at a concrete `(a, β)`.
#[derive(Debug, Clone)]
pub struct ExpansionCoefficients {
    pub p: usize,
    /// `β₀..β_{p-1}` as supplied.
    pub beta: Vec<f64>,
    /// `δ₁..δ_p`.
    pub delta: Vec<f64>,
    /// `ι₁..ι_p`.
    pub iota: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesError {
    UnsupportedOrder(usize),
    BadInput(String),
}

impl std::fmt::Display for SeriesError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeriesError::UnsupportedOrder(p) => {
                write!(f, "expansion order {p} not supported (max {MAX_ORDER})")
            }
            SeriesError::BadInput(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for SeriesError {}

// ---------------------------------------------------------------------------
// Exact rationals.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Frac {
    num: i128,
    den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.abs()
}

impl Frac {
    pub(crate) fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "rational with zero denominator");
        let g = gcd(num, den);
        let (mut n, mut d) = if g == 0 { (0, 1) } else { (num / g, den / g) };
        if d < 0 {
            n = -n;
            d = -d;
        }
        Frac { num: n, den: d }
    }

    fn zero() -> Self {
        Frac { num: 0, den: 1 }
    }

    fn is_zero(&self) -> bool {
        self.num == 0
    }

    fn add(self, o: Frac) -> Frac {
        Frac::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    fn mul(self, o: Frac) -> Frac {
        Frac::new(self.num * o.num, self.den * o.den)
    }

    fn neg(self) -> Frac {
        Frac { num: -self.num, den: self.den }
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

// ---------------------------------------------------------------------------
// Multivariate polynomials in (β₀..β₄, 1/a).
// ---------------------------------------------------------------------------

/// Exponent vector: `[β₀, β₁, β₂, β₃, β₄, a⁻¹]`.
type Expts = [u8; 6];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct Poly {
    terms: BTreeMap<Expts, Frac>,
}

impl Poly {
    pub(crate) fn zero() -> Self {
        Poly::default()
    }

    fn constant(c: Frac) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert([0; 6], c);
        }
        p
    }

    fn monomial(c: Frac, e: Expts) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(e, c);
        }
        p
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_assign(&mut self, o: &Poly) {
        for (e, c) in &o.terms {
            let entry = self.terms.entry(*e).or_insert_with(Frac::zero);
            *entry = entry.add(*c);
            if entry.is_zero() {
                self.terms.remove(e);
            }
        }
    }

    fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        r.add_assign(o);
        r
    }

    fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(e, c)| (*e, c.neg())).collect() }
    }

    fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let mut e = [0u8; 6];
                for i in 0..6 {
                    e[i] = e1[i] + e2[i];
                }
                let c = c1.mul(*c2);
                let entry = r.terms.entry(e).or_insert_with(Frac::zero);
                *entry = entry.add(c);
                if entry.is_zero() {
                    r.terms.remove(&e);
                }
            }
        }
        r
    }

    fn scale(&self, c: Frac) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(e, k)| (*e, k.mul(c))).collect() }
    }

    pub(crate) fn eval(&self, beta: &[f64; 5], ainv: f64) -> f64 {
        let mut total = 0.0;
        for (e, c) in &self.terms {
            let mut term = c.to_f64();
            for (i, b) in beta.iter().enumerate() {
                term *= b.powi(e[i] as i32);
            }
            term *= ainv.powi(e[5] as i32);
            total += term;
        }
        total
    }
}

// ---------------------------------------------------------------------------
// Truncated power series with Poly coefficients (degrees 0..=MAX_ORDER).
// ---------------------------------------------------------------------------

type Series = Vec<Poly>; // index = power of s (or w)

fn series_zero() -> Series {
    (0..=MAX_ORDER).map(|_| Poly::zero()).collect()
}

fn series_mul(a: &Series, b: &Series) -> Series {
    let mut r = series_zero();
    for i in 0..=MAX_ORDER {
        if a[i].is_zero() {
            continue;
        }
        for k in 0..=(MAX_ORDER - i) {
            if b[k].is_zero() {
                continue;
            }
            let prod = a[i].mul(&b[k]);
            r[i + k] = r[i + k].add(&prod);
        }
    }
    r
}

fn series_add_assign(a: &mut Series, b: &Series) {
    for i in 0..=MAX_ORDER {
        a[i] = a[i].add(&b[i]);
    }
}

fn series_scale(a: &Series, c: Frac) -> Series {
    a.iter().map(|p| p.scale(c)).collect()
}

/// The symbolic `δ₁..δ₅` and `ι₁..ι₅`.
pub(crate) fn delta_iota_polys() -> &'static (Vec<Poly>, Vec<Poly>) {
    static TABLE: OnceLock<(Vec<Poly>, Vec<Poly>)> = OnceLock::new();
    TABLE.get_or_init(build_delta_iota)
}

fn build_delta_iota() -> (Vec<Poly>, Vec<Poly>) {
    // u(s): coefficient of s^m is (-1)^{m-1} β_{m-1} / (a (m-1)!).
    let mut u = series_zero();
    let mut fact: i128 = 1;
    for m in 1..=MAX_ORDER {
        if m >= 2 {
            fact *= (m - 1) as i128;
        }
        let sign = if (m - 1) % 2 == 0 { 1 } else { -1 };
        let mut e = [0u8; 6];
        e[m - 1] = 1; // β_{m-1}
        e[5] = 1; // 1/a
        u[m] = Poly::monomial(Frac::new(sign, fact), e);
    }

    // δ: log(1+u) = Σ_m (-1)^{m-1} u^m / m.
    let mut log1p = series_zero();
    let mut upow = u.clone();
    for m in 1..=MAX_ORDER {
        let sign: i128 = if (m - 1) % 2 == 0 { 1 } else { -1 };
        series_add_assign(&mut log1p, &series_scale(&upow, Frac::new(sign, m as i128)));
        if m < MAX_ORDER {
            upow = series_mul(&upow, &u);
        }
    }
    let delta: Vec<Poly> = (1..=MAX_ORDER).map(|k| log1p[k].clone()).collect();

    // ι: impose 1/ℓ(w) - Σ_k k δ_k ℓ(w)^{k-1} = 1/w order by order, with
    // ℓ(w) = w (1 + c(w)), c(w) = Σ_k ι_k w^k.  The w^{k-1} coefficient
    // of the defect is linear in ι_k with unit coefficient, so each order
    // is read off directly.
    let mut c = series_zero(); // c[k] = ι_k
    let mut iota: Vec<Poly> = Vec::with_capacity(MAX_ORDER);
    for k in 1..=MAX_ORDER {
        // A(w) = Σ_{m≥1} (-c)^m, truncated; then (1/ℓ - 1/w) = A/w.
        let negc: Series = c.iter().map(Poly::neg).collect();
        let mut a_ser = series_zero();
        let mut cp = negc.clone();
        for _m in 1..=MAX_ORDER {
            series_add_assign(&mut a_ser, &cp);
            cp = series_mul(&cp, &negc);
        }
        // ℓ as a series: ℓ[1] = 1, ℓ[i] = ι_{i-1}.
        let mut ell = series_zero();
        ell[1] = Poly::constant(Frac::new(1, 1));
        ell[2..=MAX_ORDER].clone_from_slice(&c[1..MAX_ORDER]);
        // B(w) = Σ_k k δ_k ℓ^{k-1}.
        let mut b_ser = series_zero();
        let mut ellpow = series_zero();
        ellpow[0] = Poly::constant(Frac::new(1, 1)); // ℓ⁰
        for kk in 1..=MAX_ORDER {
            series_add_assign(
                &mut b_ser,
                &series_scale(&ellpow, Frac::new(kk as i128, 1))
                    .iter()
                    .map(|p| p.mul(&delta[kk - 1]))
                    .collect(),
            );
            if kk < MAX_ORDER {
                ellpow = series_mul(&ellpow, &ell);
            }
        }
        // Defect coefficient at w^{k-1}: A[k] - B[k-1] - ι_k = 0.
        let ik = a_ser[k].sub(&b_ser[k - 1]);
        c[k] = ik.clone();
        iota.push(ik);
    }
    (delta, iota)
}

/// Numeric `δ` and `ι` for `V(x) = a·x + ε(x)` given the remainder
/// moments `β_k = ∫ y^k dε(y)`, through order `p ≤ 5`.
pub fn expansion_coeffs(
    a: f64,
    beta: &[f64],
    p: usize,
) -> Result<ExpansionCoefficients, SeriesError> {
    if p == 0 {
        return Err(SeriesError::BadInput("order p must be >= 1".into()));
    }
    if p > MAX_ORDER {
        return Err(SeriesError::UnsupportedOrder(p));
    }
    if beta.len() < p {
        return Err(SeriesError::BadInput(format!(
            "need at least {p} remainder moments, got {}",
            beta.len()
        )));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(SeriesError::BadInput(format!("slope a must be finite and > 0, got {a}")));
    }
    let mut b5 = [0.0f64; 5];
    for (i, b) in beta.iter().take(5).enumerate() {
        if !b.is_finite() {
            return Err(SeriesError::BadInput(format!("beta[{i}] is not finite")));
        }
        b5[i] = *b;
    }
    let (dp, ip) = delta_iota_polys();
    let ainv = 1.0 / a;
    let delta: Vec<f64> = dp.iter().take(p).map(|q| q.eval(&b5, ainv)).collect();
    let iota: Vec<f64> = ip.iter().take(p).map(|q| q.eval(&b5, ainv)).collect();
    Ok(ExpansionCoefficients { p, beta: beta[..p].to_vec(), delta, iota })
}
