//! Vaughan's identity for `Σ_{X<x≤V} Λ(x)F(x)` and the bilinear sums it
//! produces.
//!
//! With `τ_u = Σ_{d|u, d≤X} μ(d)`,
//!
//! ```text
//! S1 = Σ_{d≤X} μ(d) Σ_{z≤V/d} Σ_{x≤V/dz} Λ(x)F(xdz)
//! S2 = Σ_{d≤X} μ(d) Σ_{z≤V/d} Σ_{x≤min(X,V/dz)} Λ(x)F(xdz)
//! S3 = Σ_{X<u≤V} τ_u Σ_{X<x≤V/u} Λ(x)F(xu)
//! ```
//!
//! and `Σ_{X<x≤V} Λ(x)F(x) = S1 - S2 - S3` exactly.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::{euler_phi, mobius_upto};
use crate::error::{Error, Result};
use crate::expsum::{e_of, weyl_sum, Phase, Weight};
use crate::polycore::IntPolynomial;
use crate::primetools::{reduce_residue, PrimeTable};
use crate::sum::pairwise;
use crate::arcs::{ArcKind, ArcScheme};

/// `⌊V^{2/5}⌋`, computed exactly.
pub fn default_cut(v: u64) -> u64 {
    let mut x = (v as f64).powf(0.4).floor() as u64;
    while (x as u128 + 1).pow(5) <= (v as u128).pow(2) {
        x += 1;
    }
    while x > 1 && (x as u128).pow(5) > (v as u128).pow(2) {
        x -= 1;
    }
    x.max(1)
}

/// `τ_u` for `u = 0..=upto` (index 0 unused).
pub fn tau_table(x: u64, upto: u64) -> Vec<i64> {
    let mu = mobius_upto(x as usize);
    let mut tau = vec![0i64; upto as usize + 1];
    for d in 1..=x.min(upto) as usize {
        if mu[d] == 0 {
            continue;
        }
        for u in (d..=upto as usize).step_by(d) {
            tau[u] += mu[d] as i64;
        }
    }
    tau
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaughanSplit {
    pub v: u64,
    pub x: u64,
    pub s1: Complex64,
    pub s2: Complex64,
    pub s3: Complex64,
    /// `Σ_{X<x≤V} Λ(x)F(x)`.
    pub direct: Complex64,
}

impl VaughanSplit {
    pub fn combined(&self) -> Complex64 {
        self.s1 - self.s2 - self.s3
    }

    pub fn residual(&self) -> f64 {
        (self.direct - self.combined()).norm()
    }
}

/// Precomputed arithmetic for one `(V, X)` pair.
#[derive(Debug, Clone)]
pub struct Vaughan {
    v: u64,
    x: u64,
    lambda: Vec<f64>,
    prime_powers: Vec<u64>,
    mu: Vec<i8>,
    tau: Vec<i64>,
}

impl Vaughan {
    pub fn new(v: u64, x: Option<u64>, table: &PrimeTable) -> Result<Self> {
        if v < 2 {
            return Err(Error::Domain("Vaughan's identity needs V ≥ 2".into()));
        }
        let x = x.unwrap_or_else(|| default_cut(v));
        if x == 0 || x > v {
            return Err(Error::Domain(format!("cut X = {x} must lie in [1, V]")));
        }
        let lambda = table.von_mangoldt_upto(v)?;
        let prime_powers = (2..=v).filter(|&m| lambda[m as usize] != 0.0).collect();
        let mu = mobius_upto(x as usize);
        let tau = tau_table(x, v / x);
        Ok(Vaughan { v, x, lambda, prime_powers, mu, tau })
    }

    pub fn v(&self) -> u64 {
        self.v
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn tau(&self, u: u64) -> i64 {
        self.tau.get(u as usize).copied().unwrap_or_else(|| {
            let mut t = 0;
            for d in 1..=self.x {
                if u % d == 0 {
                    t += self.mu[d as usize] as i64;
                }
            }
            t
        })
    }

    fn check_values(&self, f: &[Complex64]) -> Result<()> {
        if f.len() as u64 <= self.v {
            return Err(Error::Domain(format!(
                "F must be tabulated on 0..={}, got {} values",
                self.v,
                f.len()
            )));
        }
        Ok(())
    }

    /// `Σ_{x ∈ pp, x ≤ top} Λ(x)F(xm)` with `pp` the prime powers.
    fn inner(&self, f: &[Complex64], m: u64, top: u64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &p in &self.prime_powers {
            if p > top {
                break;
            }
            acc += self.lambda[p as usize] * f[(p * m) as usize];
        }
        acc
    }

    /// `Σ_{lo<x≤hi, x ∈ pp} Λ(x)F(xm)`.
    fn inner_range(&self, f: &[Complex64], m: u64, lo: u64, hi: u64) -> Complex64 {
        let start = self.prime_powers.partition_point(|&p| p <= lo);
        let mut acc = Complex64::new(0.0, 0.0);
        for &p in &self.prime_powers[start..] {
            if p > hi {
                break;
            }
            acc += self.lambda[p as usize] * f[(p * m) as usize];
        }
        acc
    }

    /// Decomposes `F` given as values `f[0..=V]` (`f[0]` unused).
    pub fn decompose(&self, f: &[Complex64]) -> Result<VaughanSplit> {
        self.check_values(f)?;
        let (v, x) = (self.v, self.x);
        let per_d: Vec<(Complex64, Complex64)> = (1..=x)
            .into_par_iter()
            .map(|d| {
                let mu = self.mu[d as usize];
                if mu == 0 {
                    return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                }
                let mut s1 = Vec::new();
                let mut s2 = Vec::new();
                for z in 1..=v / d {
                    let top = v / (d * z);
                    s1.push(self.inner(f, d * z, top));
                    s2.push(self.inner(f, d * z, top.min(x)));
                }
                let m = mu as f64;
                (m * pairwise(&s1), m * pairwise(&s2))
            })
            .collect();
        let s1 = pairwise(&per_d.iter().map(|p| p.0).collect::<Vec<_>>());
        let s2 = pairwise(&per_d.iter().map(|p| p.1).collect::<Vec<_>>());
        let s3 = self.s3_band(f, x + 1, v)?;
        let direct = self.inner_range(f, 1, x, v);
        Ok(VaughanSplit { v, x, s1, s2, s3, direct })
    }

    /// `S3(U1, U2) = Σ_{U1≤u≤U2} τ_u Σ_{X<x≤V/u} Λ(x)F(xu)`.
    pub fn s3_band(&self, f: &[Complex64], u1: u64, u2: u64) -> Result<Complex64> {
        self.check_values(f)?;
        if u1 == 0 || u1 > u2 {
            return Err(Error::Domain(format!("band [{u1}, {u2}] is empty or starts at 0")));
        }
        let hi = u2.min(self.v / (self.x + 1).max(1)).min(self.v);
        if u1 > hi {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let terms: Vec<Complex64> = (u1..=hi)
            .into_par_iter()
            .map(|u| {
                let t = self.tau(u);
                if t == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    t as f64 * self.inner_range(f, u, self.x, self.v / u)
                }
            })
            .collect();
        Ok(pairwise(&terms))
    }

    /// `S3` as a sum over half-open dyadic bands `[U, 2U)`, starting at
    /// `U = X + 1` and clipped at `V/X`.
    pub fn dyadic_s3(&self, f: &[Complex64]) -> Result<Vec<((u64, u64), Complex64)>> {
        let top = self.v / self.x;
        let mut out = Vec::new();
        let mut u = self.x + 1;
        while u <= top {
            let hi = (2 * u - 1).min(top);
            out.push(((u, hi), self.s3_band(f, u, hi)?));
            u *= 2;
        }
        Ok(out)
    }
}

/// Tabulates `F` on `0..=V` in parallel.
pub fn tabulate<F>(f: F, v: u64) -> Vec<Complex64>
where
    F: Fn(u64) -> Complex64 + Sync,
{
    (0..=v).into_par_iter().map(|m| if m == 0 { Complex64::new(0.0, 0.0) } else { f(m) }).collect()
}

/// One-shot [`Vaughan::decompose`] for a callback `F`.
pub fn decompose<F>(f: F, v: u64, x: Option<u64>, table: &PrimeTable) -> Result<VaughanSplit>
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let ctx = Vaughan::new(v, x, table)?;
    ctx.decompose(&tabulate(f, v))
}

/// `F(x) = e(αψ((x-b)/W))·1[x ≡ b (mod W)]` on `0..=V`.
pub fn progression_phase_values(
    psi: &IntPolynomial,
    b: i64,
    w: u64,
    phase: &Phase,
    v: u64,
) -> Result<Vec<Complex64>> {
    let br = b.rem_euclid(w as i64) as u64;
    let vals: Result<Vec<Complex64>> = (0..=v)
        .into_par_iter()
        .map(|m| {
            if m == 0 || m % w != br {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let y = (m as i128 - b as i128) / w as i128;
            Ok(e_of(phase.of(psi.eval(y)?)))
        })
        .collect();
    vals
}

/// Value and bound reference of a type-I sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearReport {
    pub value: f64,
    pub bound: f64,
}

/// `Σ_{x≤U, x≡c (W)} |Σ_{y≤V/x, y≡c' (W)} e(αψ((xy-b)/W))|`, with the bound
/// `V(log V)^{-B/(16k²K²)}` evaluated at `A = 1` and `B` just above
/// `32k²(k²+K²)`.
#[allow(clippy::too_many_arguments)]
pub fn bilinear_type_i(
    psi: &IntPolynomial,
    b: i64,
    w: u64,
    phase: &Phase,
    u: u64,
    v: u64,
    c: u64,
    c2: u64,
) -> Result<BilinearReport> {
    if w == 0 || u == 0 || v == 0 {
        return Err(Error::Domain("type-I sums need W, U, V ≥ 1".into()));
    }
    let wi = w as i128;
    if ((c as i128) * (c2 as i128) - b as i128).rem_euclid(wi) != 0 {
        return Err(Error::Domain(format!("c·c' = {c}·{c2} is not ≡ b = {b} (mod {w})")));
    }
    let xs: Vec<u64> = (1..=u).filter(|x| x % w == c % w).collect();
    let inner: Result<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            let mut terms = Vec::new();
            let mut y = if c2 % w == 0 { w } else { c2 % w };
            while y <= v / x {
                let arg = (x as i128 * y as i128 - b as i128) / wi;
                terms.push(e_of(phase.of(psi.eval(arg)?)));
                y += w;
            }
            Ok(pairwise(&terms).norm())
        })
        .collect();
    let value = crate::sum::pairwise_f64(&inner?);
    let k = psi.degree() as f64;
    let kk = 2f64.powf(k - 1.0);
    let big_b = 32.0 * k * k * (k * k + kk * kk) + 1.0;
    let lv = (v as f64).ln().max(1.0);
    let bound = v as f64 * lv.powf(-big_b / (16.0 * k * k * kk * kk));
    Ok(BilinearReport { value, bound })
}

/// `|S3(U1, U2)|` for `F(x) = e(αψ((x-b)/W))·1[x ≡ b (W)]` with the default
/// cut `X = ⌊V^{2/5}⌋`.
#[allow(clippy::too_many_arguments)]
pub fn bilinear_type_ii(
    psi: &IntPolynomial,
    b: i64,
    w: u64,
    phase: &Phase,
    u1: u64,
    u2: u64,
    v: u64,
    table: &PrimeTable,
) -> Result<f64> {
    let ctx = Vaughan::new(v, None, table)?;
    let x = ctx.x();
    if !(x <= u1 && u1 <= u2 && u2 <= 2 * u1) {
        return Err(Error::Domain(format!(
            "type-II band needs X ≤ U1 ≤ U2 ≤ 2U1, got X = {x}, U1 = {u1}, U2 = {u2}"
        )));
    }
    let f = progression_phase_values(psi, b, w, phase, v)?;
    Ok(ctx.s3_band(&f, u1, u2)?.norm())
}

/// Direct prime-weighted Weyl sum against its Vaughan reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorArcReport {
    pub n: u64,
    pub v: u64,
    pub x: u64,
    /// `Σ_{x≤N} λ_{b,W}(x) e(αψ(x))`.
    pub direct: Complex64,
    /// The same sum rebuilt from `S1 - S2 - S3` with prime-power and
    /// small-prime corrections.
    pub reconstructed: Complex64,
    pub residual: f64,
    pub ratio_to_n: f64,
    /// Whether `α` is minor for the `(log N)^{2}` scheme.
    pub is_minor: bool,
    /// `N(log N)^{-B/64k²K²}` with `A = 1`, `B` just above `64k²(k²+K²)`.
    pub bound: f64,
}

/// Compares the direct sum `Σ_{x≤N} λ_{b,W}(x)e(αψ(x))` with the
/// Vaughan-path value.
///
/// The identity counts prime powers `Wy+b ∈ (X, V]`; primes below the cut
/// are added back and higher prime powers subtracted, so the comparison is
/// exact rather than asymptotic.
pub fn verify_minor_arc(
    psi: &IntPolynomial,
    b: i64,
    w: u64,
    phase: &Phase,
    n: u64,
    table: &PrimeTable,
) -> Result<MinorArcReport> {
    let b = reduce_residue(b, w)? as i64;
    let v = w.checked_mul(n).and_then(|t| t.checked_add(b as u64)).ok_or_else(|| {
        Error::Range("V = WN + b overflows".into())
    })?;
    let ctx = Vaughan::new(v, None, table)?;
    let f = progression_phase_values(psi, b, w, phase, v)?;
    let split = ctx.decompose(&f)?;

    let mut corr = Vec::new();
    let bb = b as u64;
    let mut m = bb;
    while m <= v {
        let lam = ctx.lambda[m as usize];
        if lam != 0.0 {
            let y = (m - bb) / w;
            let prime = table.is_prime(m)?;
            let counted = m > ctx.x;
            let wanted = prime && y >= 1;
            match (counted, wanted) {
                (true, false) => corr.push(-lam * f[m as usize]),
                (false, true) => corr.push(lam * f[m as usize]),
                _ => {}
            }
        }
        m += w;
    }
    let target = split.combined() + pairwise(&corr);
    let scale = euler_phi(w) as f64 / w as f64;
    let reconstructed = scale * target;
    let direct = weyl_sum(psi, phase, n, &Weight::PrimeWeight { b, w }, Some(table))?;
    let residual = (direct - reconstructed).norm();

    let is_minor = match ArcScheme::new(ArcKind::LogPower(1.0), psi, n) {
        Ok(s) => !s.classify(phase.value())?.is_major(),
        Err(e) => {
            log::warn!("cannot build the reference arc scheme: {e}");
            false
        }
    };
    if !is_minor {
        log::warn!("α = {phase} is not on the minor arcs for N = {n}");
    }
    let k = psi.degree() as f64;
    let kk = 2f64.powf(k - 1.0);
    let big_b = 64.0 * k * k * (k * k + kk * kk) + 1.0;
    let bound = n as f64 * (n as f64).ln().max(1.0).powf(-big_b / (64.0 * k * k * kk * kk));
    Ok(MinorArcReport {
        n,
        v,
        x: ctx.x,
        direct,
        reconstructed,
        residual,
        ratio_to_n: direct.norm() / n as f64,
        is_minor,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::mobius;

    fn one(_: u64) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn cut_is_exact_floor() {
        assert_eq!(default_cut(1000), 15);
        assert_eq!(default_cut(100_000), 100);
        assert_eq!(default_cut(99_999), 99);
        assert_eq!(default_cut(2), 1);
    }

    #[test]
    fn constant_f_example() {
        let t = PrimeTable::build(100).unwrap();
        let s = decompose(one, 20, Some(3), &t).unwrap();
        let want = 3.0 * 2f64.ln()
            + [3.0f64, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0].iter().map(|p| p.ln()).sum::<f64>();
        assert!((s.direct.re - want).abs() < 1e-12);
        assert!((want - 17.4738).abs() < 1e-4);
        assert!(s.residual() < 1e-12);
        let z = decompose(|_| Complex64::new(0.0, 0.0), 20, Some(3), &t).unwrap();
        assert_eq!((z.s1, z.s2, z.s3, z.direct), (z.direct, z.direct, z.direct, z.direct));
    }

    #[test]
    fn twisted_f_example() {
        let t = PrimeTable::build(100).unwrap();
        let s = decompose(|x| e_of(0.3 * x as f64), 100, Some(6), &t).unwrap();
        assert!(s.residual() <= 1e-7);
    }

    #[test]
    fn tau_properties() {
        for x in [1u64, 2, 7, 30, 1000] {
            let tau = tau_table(x, 10_000);
            assert_eq!(tau[1], 1);
            assert!((2..=x as usize).all(|u| tau[u] == 0), "X = {x}");
        }
        let t = PrimeTable::build(10_000).unwrap();
        let tau = tau_table(40, 10_000);
        for u in 1..=10_000u64 {
            assert!(tau[u as usize].unsigned_abs() as u128 <= t.divisor_k(2, u).unwrap());
            let brute: i64 = (1..=40u64.min(u)).filter(|d| u % d == 0).map(|d| mobius(d) as i64).sum();
            assert_eq!(tau[u as usize], brute);
        }
    }

    #[test]
    fn band_examples() {
        let t = PrimeTable::build(2000).unwrap();
        let ctx = Vaughan::new(2000, None, &t).unwrap();
        let f = tabulate(one, 2000);
        let x = ctx.x();
        assert_eq!(ctx.s3_band(&f, 2, x).unwrap(), Complex64::new(0.0, 0.0));
        let u = x + 3;
        let single = ctx.s3_band(&f, u, u).unwrap();
        let lam = t.von_mangoldt_upto(2000).unwrap();
        let want: f64 = (x + 1..=2000 / u).map(|p| lam[p as usize]).sum::<f64>() * ctx.tau(u) as f64;
        assert!((single.re - want).abs() < 1e-9);
        let brute: f64 = (x + 1..=90u64)
            .map(|u| {
                ctx.tau(u) as f64 * (x + 1..=2000 / u).map(|q| lam[q as usize]).sum::<f64>()
            })
            .sum();
        assert!((ctx.s3_band(&f, x + 1, 90).unwrap().re - brute).abs() < 1e-9);
    }

    #[test]
    fn dyadic_bands_reassemble() {
        let t = PrimeTable::build(30_000).unwrap();
        let ctx = Vaughan::new(30_000, None, &t).unwrap();
        let f = tabulate(|x| e_of(0.61803 * (x * x) as f64 / 7.0), 30_000);
        let bands = ctx.dyadic_s3(&f).unwrap();
        let total: Complex64 = bands.iter().map(|b| b.1).sum();
        let whole = ctx.s3_band(&f, ctx.x() + 1, 30_000).unwrap();
        assert!((total - whole).norm() <= 1e-9 * whole.norm().max(1.0));
        assert_eq!(bands[0].0 .0, ctx.x() + 1);
    }

    #[test]
    fn type_i_examples() {
        let p: IntPolynomial = "x^2".parse().unwrap();
        let r = bilinear_type_i(&p, 0, 1, &Phase::rational(1, 4).unwrap(), 1, 16, 1, 1).unwrap();
        assert!((r.value - 8.0 * 2f64.sqrt()).abs() < 1e-12);
        let r = bilinear_type_i(&p, 0, 1, &Phase::rational(1, 1).unwrap(), 5, 30, 1, 1).unwrap();
        let want: u64 = (1..=5).map(|x| 30 / x).sum();
        assert!((r.value - want as f64).abs() < 1e-12);
        let ph = Phase::rational(1, 3).unwrap();
        let r = bilinear_type_i(&p, 1, 2, &ph, 2, 20, 1, 1).unwrap();
        let y_sum = |x: i128| -> f64 {
            (1..=20 / x).filter(|y| y % 2 == 1).map(|y| e_of(p.eval((x * y - 1) / 2).unwrap() as f64 / 3.0)).sum::<Complex64>().norm()
        };
        assert!((r.value - y_sum(1)).abs() < 1e-10);
        assert!(bilinear_type_i(&p, 1, 2, &ph, 2, 20, 1, 2).is_err());
    }

    #[test]
    fn type_ii_validates_band() {
        let t = PrimeTable::build(5000).unwrap();
        let p: IntPolynomial = "x^2".parse().unwrap();
        let ph = Phase::new(0, 1, 0.3).unwrap();
        let x = default_cut(5000);
        assert!(bilinear_type_ii(&p, 1, 1, &ph, x, 2 * x, 5000, &t).is_ok());
        assert!(bilinear_type_ii(&p, 1, 1, &ph, x, 3 * x, 5000, &t).is_err());
        assert!(bilinear_type_ii(&p, 1, 1, &ph, x - 1, x, 5000, &t).is_err());
    }

    #[test]
    fn minor_arc_report_agrees() {
        let t = PrimeTable::build(100_000).unwrap();
        let p: IntPolynomial = "x^2".parse().unwrap();
        let golden = Phase::new(0, 1, 0.6180339887).unwrap();
        let r = verify_minor_arc(&p, 1, 1, &golden, 10_000, &t).unwrap();
        assert!(r.residual <= 1e-6 * r.direct.norm());
        assert!(r.is_minor);
        let r = verify_minor_arc(&p, 1, 6, &golden, 5000, &t).unwrap();
        assert!(r.residual <= 1e-6 * r.direct.norm());
        let zero = Phase::rational(1, 1).unwrap();
        let r = verify_minor_arc(&p, 1, 1, &zero, 1000, &t).unwrap();
        assert!(!r.is_minor);
        assert!((r.ratio_to_n - 1.0).abs() < 0.1);
        assert!(r.residual < 1e-9 * r.direct.norm());
    }
}
