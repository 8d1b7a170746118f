//! Rational approximation, major/minor arc dissection and moments over `T`.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::arith::{gcd_u64, is_prime_trial};
use crate::error::{Error, Result};
use crate::expsum::Weight;
use crate::polycore::IntPolynomial;
use crate::primetools::PrimeTable;
use crate::sum::pairwise_f64;

/// Largest Farey order for which disjointness is checked exhaustively.
const EXACT_SCAN_MAX: u64 = 2000;

/// Continued-fraction convergent `h/k` of a double, with
/// `|kα - h| = resid / den` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Convergent {
    h: u128,
    k: u128,
    resid: u128,
    den: u128,
}

impl Convergent {
    fn distance(&self) -> f64 {
        self.resid as f64 / self.den as f64
    }
}

/// Convergents of `α mod 1`, computed exactly from the binary expansion.
fn convergents(alpha: f64) -> Vec<Convergent> {
    let x = alpha.rem_euclid(1.0);
    if x == 0.0 || x == 1.0 || !x.is_normal() {
        return vec![Convergent { h: 0, k: 1, resid: 0, den: 1 }];
    }
    let bits = x.to_bits();
    let mut m = ((bits & ((1u64 << 52) - 1)) | (1u64 << 52)) as u128;
    let mut e = 1075 - ((bits >> 52) & 0x7ff) as i64;
    while m % 2 == 0 && e > 0 {
        m >>= 1;
        e -= 1;
    }
    if e > 118 {
        // far below 2^-64: only 0/1 is meaningful for any u64 denominator
        let den = 1u128 << 118;
        let resid = ((x * 2f64.powi(118)) as u128).max(1);
        return vec![Convergent { h: 0, k: 1, resid, den }];
    }
    let den = 1u128 << e;
    let mut out = vec![Convergent { h: 0, k: 1, resid: m, den }];
    let (mut r_prev, mut r) = (den, m);
    let (mut h_prev, mut h) = (1u128, 0u128);
    let (mut k_prev, mut k) = (0u128, 1u128);
    while r != 0 {
        let a = r_prev / r;
        let r_next = r_prev % r;
        let h_next = a * h + h_prev;
        let k_next = a * k + k_prev;
        (r_prev, r) = (r, r_next);
        (h_prev, h) = (h, h_next);
        (k_prev, k) = (k, k_next);
        out.push(Convergent { h, k, resid: r, den });
    }
    out
}

fn normalise(h: u128, k: u128) -> (u64, u64) {
    if h == 0 {
        (1, 1)
    } else {
        (h as u64, k as u64)
    }
}

/// Smallest `q ≤ Q` with `|α - a/q| ≤ 1/(q(Q+1))`, with `gcd(a,q) = 1` and
/// `1 ≤ a ≤ q`.
pub fn dirichlet_approx(alpha: f64, big_q: u64) -> Result<(u64, u64)> {
    if big_q == 0 {
        return Err(Error::Domain("Dirichlet parameter Q must be ≥ 1".into()));
    }
    if !alpha.is_finite() {
        return Err(Error::Domain(format!("α = {alpha} is not finite")));
    }
    let q1 = big_q as u128 + 1;
    let convs = convergents(alpha);
    let mut best = convs[0];
    for c in convs.iter().take_while(|c| c.k <= big_q as u128) {
        best = *c;
        if c.resid.checked_mul(q1).is_some_and(|v| v <= c.den) {
            break;
        }
    }
    Ok(normalise(best.h, best.k))
}

/// Nearest-integer distance `‖α - a/q‖` on the torus.
pub fn torus_distance(alpha: f64, a: u64, q: u64) -> f64 {
    let d = (alpha - a as f64 / q as f64).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcKind {
    /// `q ≤ N^ν` and `|αq - a| ≤ N^ν/ψ(N)`.
    PowerNu(f64),
    /// `q ≤ (log N)^{2B}` and `|αq - a| ≤ (log N)^{2B}/ψ(N)`.
    LogPower(f64),
    /// `q ≤ Q` and `|α - a/q| ≤ halfwidth`.
    Fixed { q_max: u64, halfwidth: f64 },
    /// `q ≤ Q` and `|α - a/q| ≤ 1/(2q^t m)`.
    Progression { q_max: u64, t: u32, m: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcClass {
    Major { a: u64, q: u64 },
    Minor { a: u64, q: u64 },
}

impl ArcClass {
    pub fn is_major(&self) -> bool {
        matches!(self, ArcClass::Major { .. })
    }

    pub fn fraction(&self) -> (u64, u64) {
        match *self {
            ArcClass::Major { a, q } | ArcClass::Minor { a, q } => (a, q),
        }
    }
}

/// One major arc `{α : ‖α - a/q‖ ≤ halfwidth}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub a: u64,
    pub q: u64,
    pub halfwidth: f64,
}

impl Arc {
    pub fn measure(&self) -> f64 {
        (2.0 * self.halfwidth).min(1.0)
    }

    pub fn contains(&self, alpha: f64) -> bool {
        torus_distance(alpha, self.a, self.q) <= self.halfwidth
    }
}

/// A major/minor arc dissection for sums of length `N` over `ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcScheme {
    kind: ArcKind,
    n: u64,
    psi_n: f64,
    cutoff: u64,
}

impl ArcScheme {
    /// Validates the parameters and that the major arcs are pairwise disjoint.
    pub fn new(kind: ArcKind, psi: &IntPolynomial, n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("arc schemes need N ≥ 2".into()));
        }
        let psi_n = psi.eval(n as i128)? as f64;
        if psi_n <= 1.0 {
            return Err(Error::Domain(format!("ψ(N) = {psi_n} must exceed 1")));
        }
        let cutoff = match kind {
            ArcKind::PowerNu(nu) => {
                if !(nu > 0.0 && nu < 1.0) {
                    return Err(Error::Domain(format!("ν = {nu} must lie in (0,1)")));
                }
                (n as f64).powf(nu).floor() as u64
            }
            ArcKind::LogPower(b) => {
                if b <= 0.0 {
                    return Err(Error::Domain(format!("B = {b} must be positive")));
                }
                (n as f64).ln().powf(2.0 * b).floor() as u64
            }
            ArcKind::Fixed { q_max, halfwidth } => {
                if q_max == 0 || !(halfwidth > 0.0) {
                    return Err(Error::Domain("Fixed arcs need Q ≥ 1 and halfwidth > 0".into()));
                }
                q_max
            }
            ArcKind::Progression { q_max, m, .. } => {
                if q_max == 0 || m == 0 {
                    return Err(Error::Domain("Progression arcs need Q ≥ 1 and m ≥ 1".into()));
                }
                q_max
            }
        };
        let s = ArcScheme { kind, n, psi_n, cutoff: cutoff.max(1) };
        s.check_disjoint()?;
        Ok(s)
    }

    pub fn kind(&self) -> ArcKind {
        self.kind
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Largest admissible major-arc denominator.
    pub fn cutoff(&self) -> u64 {
        self.cutoff
    }

    /// Half-width of the arc around `a/q`.
    pub fn halfwidth(&self, q: u64) -> f64 {
        match self.kind {
            ArcKind::PowerNu(nu) => (self.n as f64).powf(nu) / (q as f64 * self.psi_n),
            ArcKind::LogPower(b) => (self.n as f64).ln().powf(2.0 * b) / (q as f64 * self.psi_n),
            ArcKind::Fixed { halfwidth, .. } => halfwidth,
            ArcKind::Progression { t, m, .. } => 0.5 / ((q as f64).powi(t as i32) * m as f64),
        }
    }

    fn check_disjoint(&self) -> Result<()> {
        let q_max = self.cutoff;
        let fail = |a: (u64, u64), b: (u64, u64)| {
            Err(Error::Domain(format!(
                "major arcs around {}/{} and {}/{} overlap",
                a.0, a.1, b.0, b.1
            )))
        };
        if q_max > EXACT_SCAN_MAX {
            for q in 1..=q_max {
                if self.halfwidth(q) * 2.0 * q as f64 * q_max as f64 >= 1.0 {
                    return Err(Error::Domain(format!(
                        "cannot certify disjoint major arcs: halfwidth at q = {q} is not below 1/(2qQ)"
                    )));
                }
            }
            return Ok(());
        }
        let farey = farey_sequence(q_max);
        let hw_max = (1..=q_max).map(|q| self.halfwidth(q)).fold(0.0, f64::max);
        for (i, &(a, q)) in farey.iter().enumerate() {
            let x = a as f64 / q as f64;
            let hq = self.halfwidth(q);
            for &(b, s) in &farey[i + 1..] {
                let y = b as f64 / s as f64;
                if y - x >= hq + hw_max {
                    break;
                }
                if q == 1 && s == 1 {
                    continue;
                }
                if y - x <= hq + self.halfwidth(s) {
                    return fail((a, q), (b, s));
                }
            }
        }
        Ok(())
    }

    pub fn classify(&self, alpha: f64) -> Result<ArcClass> {
        match self.kind {
            ArcKind::PowerNu(_) | ArcKind::LogPower(_) => {
                let p = self.cutoff as f64 + frac_cutoff(self);
                let width = p / self.psi_n;
                let hit = convergents(alpha)
                    .into_iter()
                    .find(|c| c.distance() <= width);
                if let Some(c) = hit {
                    if c.k <= self.cutoff as u128 {
                        let (a, q) = normalise(c.h, c.k);
                        return Ok(ArcClass::Major { a, q });
                    }
                }
                let dq = (self.psi_n / p).floor().max(1.0) as u64;
                let (a, q) = dirichlet_approx(alpha, dq)?;
                Ok(ArcClass::Minor { a, q })
            }
            ArcKind::Fixed { .. } | ArcKind::Progression { .. } => {
                let x = alpha.rem_euclid(1.0);
                for q in 1..=self.cutoff {
                    let a = (x * q as f64).round() as u64;
                    let a = if a == 0 { q } else { a.min(q) };
                    if gcd_u64(a, q) != 1 {
                        continue;
                    }
                    if torus_distance(x, a, q) <= self.halfwidth(q) {
                        return Ok(ArcClass::Major { a, q });
                    }
                }
                let (a, q) = dirichlet_approx(alpha, self.cutoff)?;
                Ok(ArcClass::Minor { a, q })
            }
        }
    }

    /// All major arcs, ordered by `q` then `a`.
    pub fn major_arcs(&self) -> Vec<Arc> {
        let mut out = Vec::new();
        for q in 1..=self.cutoff {
            let hw = self.halfwidth(q);
            for a in 1..=q {
                if gcd_u64(a, q) == 1 {
                    out.push(Arc { a, q, halfwidth: hw });
                }
            }
        }
        out
    }
}

/// Fractional part of the real cutoff `N^ν` or `(log N)^{2B}`.
fn frac_cutoff(s: &ArcScheme) -> f64 {
    let p = match s.kind {
        ArcKind::PowerNu(nu) => (s.n as f64).powf(nu),
        ArcKind::LogPower(b) => (s.n as f64).ln().powf(2.0 * b),
        _ => return 0.0,
    };
    p - p.floor()
}

/// Farey fractions of order `n` in `[0, 1]`, as `(a, q)`.
pub fn farey_sequence(n: u64) -> Vec<(u64, u64)> {
    let (mut a, mut b, mut c, mut d) = (0u64, 1u64, 1u64, n);
    let mut out = vec![(0, 1)];
    while c <= n {
        let k = (n + b) / d;
        (a, b, c, d) = (c, d, k * c - a, k * d - b);
        out.push((a, b));
    }
    out
}

/// `f[ψ(x) mod G] += w(x)` for `x = 1..=N`.
fn folded_coefficients(
    psi: &IntPolynomial,
    weight: &Weight,
    n: u64,
    grid: usize,
    table: Option<&PrimeTable>,
) -> Result<Vec<Complex64>> {
    let mut f = vec![Complex64::new(0.0, 0.0); grid];
    for x in 1..=n {
        let w = weight.at(psi, x, table)?;
        if w != 0.0 {
            let s = psi.eval(x as i128)?.rem_euclid(grid as i128) as usize;
            f[s].re += w;
        }
    }
    Ok(f)
}

fn mean_power(values: &[Complex64], rho: f64) -> f64 {
    let powers: Vec<f64> = values.par_iter().map(|z| z.norm().powf(rho)).collect();
    pairwise_f64(&powers) / values.len() as f64
}

/// Trapezoidal value of `∫_T |Σ_{x≤N} w(x)e(αψ(x))|^ρ dα` on `grid` points.
pub fn moment(
    psi: &IntPolynomial,
    weight: &Weight,
    n: u64,
    rho: f64,
    grid: usize,
    table: Option<&PrimeTable>,
) -> Result<f64> {
    if rho < 2.0 || !rho.is_finite() {
        return Err(Error::Domain(format!("moment needs ρ ≥ 2, got {rho}")));
    }
    if grid == 0 {
        return Err(Error::Domain("grid must be positive".into()));
    }
    let mut f = folded_coefficients(psi, weight, n, grid, table)?;
    FftPlanner::new().plan_fft_forward(grid).process(&mut f);
    Ok(mean_power(&f, rho))
}

/// Result of [`moment_cross_checked`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub quadrature: f64,
    pub exact: f64,
}

impl MomentCheck {
    pub fn relative_error(&self) -> f64 {
        (self.quadrature - self.exact).abs() / self.exact.abs().max(f64::MIN_POSITIVE)
    }
}

/// Quadrature moment for even integer `ρ = 2L` together with the exact
/// solution count. The grid must resolve every difference of `L`-fold sums.
pub fn moment_cross_checked(
    psi: &IntPolynomial,
    weight: &Weight,
    n: u64,
    rho: u32,
    grid: usize,
    table: Option<&PrimeTable>,
) -> Result<MomentCheck> {
    if rho < 2 || rho % 2 != 0 {
        return Err(Error::Domain(format!("exact cross-check needs even ρ ≥ 2, got {rho}")));
    }
    let l = (rho / 2) as i128;
    let (lo, hi) = value_range(psi, n)?;
    let need = l * (hi - lo) + 1;
    let psi_n = psi.eval(n as i128)?;
    if (grid as i128) < need || (grid as i128) < 2 * psi_n {
        return Err(Error::Domain(format!(
            "grid {grid} is below the resolution {} needed for an exact even moment",
            need.max(2 * psi_n)
        )));
    }
    let quadrature = moment(psi, weight, n, rho as f64, grid, table)?;
    let exact = even_moment_exact(psi, weight, n, rho / 2, table)?;
    Ok(MomentCheck { quadrature, exact })
}

fn value_range(psi: &IntPolynomial, n: u64) -> Result<(i128, i128)> {
    let mut lo = i128::MAX;
    let mut hi = i128::MIN;
    for x in 1..=n {
        let v = psi.eval(x as i128)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// `Σ_s H(s)²`, `H(s) = Σ_{ψ(x₁)+…+ψ(x_L)=s} w(x₁)⋯w(x_L)`.
pub fn even_moment_exact(
    psi: &IntPolynomial,
    weight: &Weight,
    n: u64,
    l: u32,
    table: Option<&PrimeTable>,
) -> Result<f64> {
    if l == 0 {
        return Err(Error::Domain("L must be ≥ 1".into()));
    }
    let mut base: HashMap<i128, f64> = HashMap::new();
    for x in 1..=n {
        let w = weight.at(psi, x, table)?;
        if w != 0.0 {
            *base.entry(psi.eval(x as i128)?).or_insert(0.0) += w;
        }
    }
    let mut h = base.clone();
    for _ in 1..l {
        let mut next: HashMap<i128, f64> = HashMap::with_capacity(h.len() * 2);
        for (&s, &c) in &h {
            for (&t, &d) in &base {
                *next.entry(s + t).or_insert(0.0) += c * d;
            }
        }
        h = next;
    }
    let mut keys: Vec<i128> = h.keys().copied().collect();
    keys.sort_unstable();
    let squares: Vec<f64> = keys.iter().map(|k| h[k] * h[k]).collect();
    Ok(pairwise_f64(&squares))
}

/// `(1/p) Σ_{r=1}^p |Σ_{z≤N} w(z) e(-rψ(z)/p)|^ρ`.
pub fn discrete_moment(
    psi: &IntPolynomial,
    weight: &Weight,
    n: u64,
    p: u64,
    rho: f64,
    table: Option<&PrimeTable>,
) -> Result<f64> {
    if rho < 2.0 || !rho.is_finite() {
        return Err(Error::Domain(format!("discrete moment needs ρ ≥ 2, got {rho}")));
    }
    if !is_prime_trial(p) {
        return Err(Error::Domain(format!("p = {p} is not prime")));
    }
    let mut prev = 0i128;
    for x in 1..=n {
        let v = psi.eval(x as i128)?;
        if v <= prev {
            return Err(Error::Domain(format!("ψ is not positive and increasing at x = {x}")));
        }
        prev = v;
    }
    if (p as i128) < prev {
        return Err(Error::Domain(format!("p = {p} is below ψ(N) = {prev}")));
    }
    let mut f = folded_coefficients(psi, weight, n, p as usize, table)?;
    FftPlanner::new().plan_fft_forward(p as usize).process(&mut f);
    Ok(mean_power(&f, rho))
}

/// Per-arc share of a moment, from the same grid as [`moment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcContribution {
    pub arc: Arc,
    pub contribution: f64,
}

/// Splits the grid moment among the major arcs of `scheme`; the remainder is
/// the minor-arc share.
pub fn arc_contributions(
    scheme: &ArcScheme,
    psi: &IntPolynomial,
    weight: &Weight,
    n: u64,
    rho: f64,
    grid: usize,
    table: Option<&PrimeTable>,
) -> Result<(Vec<ArcContribution>, f64)> {
    if grid == 0 {
        return Err(Error::Domain("grid must be positive".into()));
    }
    let mut f = folded_coefficients(psi, weight, n, grid, table)?;
    // forward transform gives S(-j/G); reverse index to recover S(j/G)
    FftPlanner::new().plan_fft_forward(grid).process(&mut f);
    let powers: Vec<f64> = (0..grid).map(|j| f[(grid - j) % grid].norm().powf(rho)).collect();
    let g = grid as f64;
    let mut major_total = Vec::new();
    let mut out = Vec::new();
    for arc in scheme.major_arcs() {
        let centre = arc.a as f64 / arc.q as f64;
        let lo = ((centre - arc.halfwidth) * g).ceil() as i64;
        let hi = ((centre + arc.halfwidth) * g).floor() as i64;
        let vals: Vec<f64> =
            (lo..=hi).map(|j| powers[j.rem_euclid(grid as i64) as usize]).collect();
        let c = pairwise_f64(&vals) / g;
        major_total.push(c);
        out.push(ArcContribution { arc, contribution: c });
    }
    let total = pairwise_f64(&powers) / g;
    Ok((out, total - pairwise_f64(&major_total)))
}
