//! Exponential sums `Σ w(x) e(αψ(x))` and their rational approximations.
//!
//! Phases are carried as `α = a/q + θ`. The rational part of `αψ(x)` is
//! formed exactly modulo `q`; the `θ` part goes through [`crate::dd`].

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::arith::{euler_phi, gcd_i128, gcd_u64};
use crate::dd::{frac_mul, reduce_mod1};
use crate::error::{overflow, Error, Result};
use crate::polycore::{IntPolynomial, Polynomial};
use crate::primetools::PrimeTable;
use crate::sum::{pairwise, try_blocked_sum, BLOCK};

/// Highest degree accepted for a polynomial weight.
pub const MAX_WEIGHT_DEGREE: usize = 32;

/// Default `ε` for bound formulas.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// `e(t) = exp(2πit)`.
#[inline]
pub fn e_of(t: f64) -> Complex64 {
    let (s, c) = (TAU * reduce_mod1(t)).sin_cos();
    Complex64::new(c, s)
}

/// `α = a/q + θ` with `1 ≤ a ≤ q` and `gcd(a, q) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    a: u64,
    q: u64,
    theta: f64,
}

impl Phase {
    /// Reduces `a/q` to lowest terms with `a` in `[1, q]`.
    pub fn new(a: i64, q: u64, theta: f64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Domain("phase denominator must be positive".into()));
        }
        if !theta.is_finite() || theta.abs() >= 1.0 {
            return Err(Error::Domain(format!("|θ| must be below 1, got {theta}")));
        }
        let r = a.rem_euclid(q as i64) as u64;
        let g = gcd_u64(r, q);
        let (a, q) = if r == 0 { (1, 1) } else { (r / g, q / g) };
        Ok(Phase { a, q, theta })
    }

    pub fn rational(a: i64, q: u64) -> Result<Self> {
        Self::new(a, q, 0.0)
    }

    /// Dirichlet approximation of a real `α` with denominator at most `big_q`,
    /// so that `|θ| ≤ 1/(q·(big_q + 1))`.
    pub fn from_real(alpha: f64, big_q: u64) -> Result<Self> {
        let (a, q) = crate::arcs::dirichlet_approx(alpha, big_q)?;
        let theta = reduce_mod1(alpha - a as f64 / q as f64);
        Self::new(a as i64, q, theta)
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `α` as a real number in `[0, 1)`.
    pub fn value(&self) -> f64 {
        (self.a as f64 / self.q as f64 + self.theta).rem_euclid(1.0)
    }

    /// `-α`, i.e. `(q - a)/q - θ`.
    pub fn negate(&self) -> Phase {
        Phase::new((self.q - self.a) as i64, self.q, -self.theta).expect("valid phase")
    }

    /// Fractional phase of `αv`, exact in the rational part.
    #[inline]
    pub fn of(&self, v: i128) -> f64 {
        let s = mul_mod(self.a, v, self.q);
        reduce_mod1(s as f64 / self.q as f64 + frac_mul(self.theta, v))
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}{:+e}", self.a, self.q, self.theta)
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    /// `a/q`, `a/q+θ` or `a/q-θ`, e.g. `1/3+1e-6`.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("bad phase '{s}', expected a/q[+θ]"));
        if s.is_empty() {
            return Err(bad());
        }
        let (frac, theta) = match s[1..].find(['+', '-']).map(|i| i + 1) {
            Some(i) if !s[..i].ends_with(['e', 'E']) => {
                (&s[..i], s[i..].parse::<f64>().map_err(|_| bad())?)
            }
            _ => (&s[..], 0.0),
        };
        let (a, q) = frac.split_once('/').ok_or_else(bad)?;
        Phase::new(a.parse().map_err(|_| bad())?, q.parse().map_err(|_| bad())?, theta)
    }
}

#[inline]
fn mul_mod(a: u64, v: i128, q: u64) -> u64 {
    if q == 1 {
        return 0;
    }
    let vr = v.rem_euclid(q as i128) as u128;
    ((a as u128 % q as u128) * vr % q as u128) as u64
}

/// Summation weight `w(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Unit,
    Poly(Polynomial),
    /// `λ_{b,W}(x)`.
    PrimeWeight { b: i64, w: u64 },
    /// `ψ^Δ(x-1)·λ_{b,W}(x)`.
    DeltaPrime { b: i64, w: u64 },
}

impl Weight {
    fn needs_table(&self) -> bool {
        matches!(self, Weight::PrimeWeight { .. } | Weight::DeltaPrime { .. })
    }

    fn validate(&self, table: Option<&PrimeTable>, n: u64) -> Result<()> {
        if let Weight::Poly(h) = self {
            if h.degree() > MAX_WEIGHT_DEGREE {
                return Err(Error::Domain(format!(
                    "weight degree {} exceeds {MAX_WEIGHT_DEGREE}",
                    h.degree()
                )));
            }
        }
        if let Weight::PrimeWeight { b, w } | Weight::DeltaPrime { b, w } = *self {
            let t = table.ok_or_else(|| Error::Domain("prime weights need a PrimeTable".into()))?;
            let b = crate::primetools::reduce_residue(b, w)?;
            let top = (w as u128) * n as u128 + b as u128;
            if top > t.limit() as u128 {
                return Err(Error::Range(format!("W·N + b = {top} exceeds sieve limit {}", t.limit())));
            }
        }
        Ok(())
    }

    /// `w(x)`; prime weights require `table`.
    pub fn at(&self, psi: &IntPolynomial, x: u64, table: Option<&PrimeTable>) -> Result<f64> {
        match self {
            Weight::Unit => Ok(1.0),
            Weight::Poly(h) => Ok(h.eval(x as i128)? as f64),
            Weight::PrimeWeight { b, w } => {
                let t = table.ok_or_else(|| Error::Domain("prime weights need a PrimeTable".into()))?;
                t.lambda_weight(*b, *w, x)
            }
            Weight::DeltaPrime { b, w } => {
                let t = table.ok_or_else(|| Error::Domain("prime weights need a PrimeTable".into()))?;
                let l = t.lambda_weight(*b, *w, x)?;
                if l == 0.0 {
                    return Ok(0.0);
                }
                Ok(delta_at(psi, x)? as f64 * l)
            }
        }
    }
}

/// `ψ^Δ(x-1) = ψ(x) - ψ(x-1)`.
pub fn delta_at(psi: &IntPolynomial, x: u64) -> Result<i128> {
    let x = x as i128;
    psi.eval(x)?.checked_sub(psi.eval(x - 1)?).ok_or_else(|| overflow("ψ^Δ"))
}

/// Summation strategy chosen for a phase.
pub fn method_for(phase: &Phase) -> &'static str {
    if phase.theta == 0.0 {
        "residue-class"
    } else {
        "direct"
    }
}

/// Accumulates `weight` per residue `s (mod q)` and returns `Σ_s c_s e(s/q)`.
struct ResidueAccumulator {
    q: u64,
    dense: Vec<f64>,
    sparse: BTreeMap<u64, f64>,
}

impl ResidueAccumulator {
    const DENSE_MAX: u64 = 1 << 22;

    fn new(q: u64) -> Self {
        let dense = if q <= Self::DENSE_MAX { vec![0.0; q as usize] } else { Vec::new() };
        ResidueAccumulator { q, dense, sparse: BTreeMap::new() }
    }

    #[inline]
    fn add(&mut self, s: u64, w: f64) {
        if self.q <= Self::DENSE_MAX {
            self.dense[s as usize] += w;
        } else {
            *self.sparse.entry(s).or_insert(0.0) += w;
        }
    }

    fn finish(self) -> Complex64 {
        let q = self.q as f64;
        let terms: Vec<Complex64> = if self.q <= Self::DENSE_MAX {
            self.dense
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(s, &c)| c * e_of(s as f64 / q))
                .collect()
        } else {
            self.sparse.iter().map(|(&s, &c)| c * e_of(s as f64 / q)).collect()
        };
        pairwise(&terms)
    }
}

/// `Σ_{r=1}^q e(aψ(r)/q)`.
pub fn complete_sum(psi: &IntPolynomial, a: i64, q: u64) -> Complex64 {
    restricted_sum_impl(psi, a, q, |_| true)
}

/// `G(a, q)` for every `a` in `0..q`, from one transform of the value
/// distribution `#{r ≤ q : ψ(r) ≡ s}`.
pub fn complete_sums_all(psi: &IntPolynomial, q: u64) -> Vec<Complex64> {
    assert!(q >= 1, "modulus must be positive");
    let mut c = vec![Complex64::new(0.0, 0.0); q as usize];
    for r in 1..=q {
        c[psi.eval_mod(r as i128, q) as usize].re += 1.0;
    }
    rustfft::FftPlanner::new().plan_fft_inverse(q as usize).process(&mut c);
    c
}

/// `Σ_{1≤r≤q, gcd(Wr+b, q)=1} e(aψ(r)/q)`.
pub fn restricted_complete_sum(psi: &IntPolynomial, a: i64, q: u64, b: i64, w: u64) -> Complex64 {
    restricted_sum_impl(psi, a, q, |r| {
        let v = ((w as i128) * r as i128 + b as i128).rem_euclid(q as i128) as u64;
        gcd_u64(v, q) == 1
    })
}

fn restricted_sum_impl(psi: &IntPolynomial, a: i64, q: u64, keep: impl Fn(u64) -> bool) -> Complex64 {
    assert!(q >= 1, "modulus must be positive");
    if q == 1 {
        return if keep(1) { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    let am = a.rem_euclid(q as i64) as u128;
    let mut acc = ResidueAccumulator::new(q);
    for r in 1..=q {
        if keep(r) {
            let s = (am * psi.eval_mod(r as i128, q) as u128 % q as u128) as u64;
            acc.add(s, 1.0);
        }
    }
    acc.finish()
}

/// `Σ_{x=1}^N w(x) e(αψ(x))`.
pub fn weyl_sum(
    psi: &IntPolynomial,
    phase: &Phase,
    n: u64,
    weight: &Weight,
    table: Option<&PrimeTable>,
) -> Result<Complex64> {
    weyl_sum_blocked(psi, phase, n, weight, table, BLOCK)
}

/// [`weyl_sum`] with an explicit block size. Rational phases (`θ = 0`) are
/// summed per residue class and do not depend on `block`.
pub fn weyl_sum_blocked(
    psi: &IntPolynomial,
    phase: &Phase,
    n: u64,
    weight: &Weight,
    table: Option<&PrimeTable>,
    block: usize,
) -> Result<Complex64> {
    weight.validate(table, n)?;
    if n == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if weight.needs_table() && table.is_none() {
        return Err(Error::Domain("prime weights need a PrimeTable".into()));
    }
    if phase.theta == 0.0 {
        let mut acc = ResidueAccumulator::new(phase.q);
        for x in 1..=n {
            let w = weight.at(psi, x, table)?;
            if w != 0.0 {
                let s = mul_mod(phase.a, psi.eval(x as i128)?, phase.q);
                acc.add(s, w);
            }
        }
        return Ok(acc.finish());
    }
    try_blocked_sum(1, n + 1, block, |x| {
        let w = weight.at(psi, x, table)?;
        if w == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(w * e_of(phase.of(psi.eval(x as i128)?)))
    })
}

/// `Σ_{x=1}^M e(θx)` in closed form.
pub fn geometric_sum(theta: f64, m: i128) -> Complex64 {
    if m <= 0 {
        return Complex64::new(0.0, 0.0);
    }
    let t = reduce_mod1(theta);
    if t.abs() < 1e-15 {
        return Complex64::new(m as f64, 0.0);
    }
    let num = e_of(frac_mul(theta, m)) - 1.0;
    let den = e_of(t) - 1.0;
    e_of(t) * num / den
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MajorArcOptions {
    /// Replace the inner sum of a `DeltaPrime` weight by `Σ_{x≤ψ(N)} e(θx)`.
    pub delta_geometric: bool,
    /// Refuse phases with `q` above this cutoff.
    pub max_q: Option<u64>,
}

/// Main term of the major-arc approximation of [`weyl_sum`].
///
/// Unit and polynomial weights give `(1/q)G(a,q)·Σ h(x)e(θψ(x))`; prime
/// weights give `φ(W)/φ(Wq)·G_{b,W}(a,q)·Σ h(x)e(θψ(x))`, where `h` is 1 or
/// `ψ^Δ(x-1)`.
pub fn major_arc_approx(
    psi: &IntPolynomial,
    phase: &Phase,
    n: u64,
    weight: &Weight,
    opts: MajorArcOptions,
) -> Result<Complex64> {
    let (a, q, theta) = (phase.a as i64, phase.q, phase.theta);
    if let Some(cut) = opts.max_q {
        if q > cut {
            return Err(Error::Domain(format!("q = {q} exceeds the major-arc cutoff {cut}")));
        }
    }
    let inner_phase = Phase::new(0, 1, theta)?;
    let inner = |h: &Weight| weyl_sum(psi, &inner_phase, n, h, None);
    match weight {
        Weight::Unit | Weight::Poly(_) => {
            Ok(complete_sum(psi, a, q) / q as f64 * inner(weight)?)
        }
        Weight::PrimeWeight { b, w } | Weight::DeltaPrime { b, w } => {
            let wq = w.checked_mul(q).ok_or_else(|| overflow("Wq"))?;
            let pref = euler_phi(*w) as f64 / euler_phi(wq) as f64;
            let g = restricted_complete_sum(psi, a, q, *b, *w);
            let inner = if matches!(weight, Weight::PrimeWeight { .. }) {
                inner(&Weight::Unit)?
            } else if opts.delta_geometric {
                geometric_sum(theta, psi.eval(n as i128)?)
            } else {
                let h = psi.delta()?.shift(-1)?;
                inner(&Weight::Poly(h))?
            };
            Ok(pref * g * inner)
        }
    }
}

/// Reference value of the Weyl-differencing bound
/// `V(V^{-1/K} + a₁^{1/2K}(log a₁qV)^{(k-1)²/2K}(1/q + 1/V + q/(a₁V^k))^{1/2K})`
/// with `K = 2^{k-1}` and implied constant 1.
pub fn weyl_bound(psi: &IntPolynomial, q: u64, v: f64) -> Result<f64> {
    let a1 = psi.leading().unsigned_abs() as f64;
    if q == 0 || v < 2.0 {
        return Err(Error::Domain("weyl_bound needs q ≥ 1 and V ≥ 2".into()));
    }
    let k = psi.degree() as i32;
    let kk = 2f64.powi(k - 1);
    let q = q as f64;
    let inner = 1.0 / q + 1.0 / v + q / (a1 * v.powi(k));
    let log_pow = ((k - 1) * (k - 1)) as f64 / (2.0 * kk);
    let term = a1.powf(1.0 / (2.0 * kk)) * (a1 * q * v).ln().powf(log_pow) * inner.powf(1.0 / (2.0 * kk));
    Ok(v * (v.powf(-1.0 / kk) + term))
}

/// Reference value of `N^{1+ε}(a₁/q + a₁/N + q/N^k)^{2^{1-k}}`.
pub fn weyl_bound_epsilon(psi: &IntPolynomial, q: u64, n: f64, eps: f64) -> Result<f64> {
    if q == 0 || n < 1.0 {
        return Err(Error::Domain("weyl_bound_epsilon needs q ≥ 1 and N ≥ 1".into()));
    }
    let a1 = psi.leading().unsigned_abs() as f64;
    let k = psi.degree() as i32;
    let q = q as f64;
    let inner = a1 / q + a1 / n + q / n.powi(k);
    Ok(n.powf(1.0 + eps) * inner.powf(2f64.powi(1 - k)))
}

/// Whether `gcd(q, a₁, …, a_k) = 1`.
pub fn is_primitive(psi: &IntPolynomial, q: u64) -> bool {
    gcd_i128(psi.content(), q as i128) == 1
}
