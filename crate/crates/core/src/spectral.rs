//! Fourier analysis on `Z_N` for the transference step.
//!
//! Conventions: `f̃(r) = Σ_x f(x) e(-xr/N)` and
//! `(f∗g)(x) = Σ_y f(y) g(x-y)`, so that `(f∗g)~ = f̃ g̃`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::arith::{euler_phi, gcd_u64, is_prime_trial, smallest_prime_in};
use crate::error::{Error, Result};
use crate::polycore::IntPolynomial;
use crate::sum::{pairwise, pairwise_f64};

/// Above this many multiply-adds, smoothing switches from direct sums to FFT.
const DIRECT_SMOOTH_MAX: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<Complex64>,
}

impl Signal {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("signals need N ≥ 1".into()));
        }
        Ok(Signal { values })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    /// `δ_x` on `Z_N`.
    pub fn delta(n: usize, x: usize) -> Result<Self> {
        let mut s = Self::zeros(n)?;
        s.values[x % n] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Normalised indicator `1_S/|S|`.
    pub fn uniform_on(n: usize, set: &[usize]) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Domain("uniform measure on an empty set".into()));
        }
        let mut s = Self::zeros(n)?;
        let w = 1.0 / set.len() as f64;
        for &x in set {
            s.values[x % n] = Complex64::new(w, 0.0);
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn mass(&self) -> Complex64 {
        pairwise(&self.values)
    }

    /// `index,re,im` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,re,im\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{i},{:e},{:e}\n", v.re, v.im));
        }
        s
    }
}

pub fn dft(f: &Signal) -> Signal {
    let mut v = f.values.clone();
    FftPlanner::new().plan_fft_forward(v.len()).process(&mut v);
    Signal { values: v }
}

pub fn idft(f: &Signal) -> Signal {
    let mut v = f.values.clone();
    FftPlanner::new().plan_fft_inverse(v.len()).process(&mut v);
    let n = v.len() as f64;
    v.iter_mut().for_each(|z| *z /= n);
    Signal { values: v }
}

fn same_len(f: &Signal, g: &Signal) -> Result<()> {
    if f.len() != g.len() {
        return Err(Error::Domain(format!("signals live on Z_{} and Z_{}", f.len(), g.len())));
    }
    Ok(())
}

pub fn convolve(f: &Signal, g: &Signal) -> Result<Signal> {
    same_len(f, g)?;
    let (ff, gg) = (dft(f), dft(g));
    let prod = ff.values.iter().zip(&gg.values).map(|(a, b)| a * b).collect();
    Ok(idft(&Signal { values: prod }))
}

/// `{r : |ã(r)| ≥ η}`.
pub fn large_spectrum(a: &Signal, eta: f64) -> Vec<usize> {
    spectrum_of_transform(&dft(a), eta)
}

/// [`large_spectrum`] from a precomputed transform.
pub fn spectrum_of_transform(at: &Signal, eta: f64) -> Vec<usize> {
    at.values.iter().enumerate().filter(|(_, z)| z.norm() >= eta).map(|(r, _)| r).collect()
}

/// `{x ∈ Z_N : ‖xr/N‖ ≤ ε for all r ∈ R}`.
pub fn bohr_set(spectrum: &[usize], eps: f64, n: usize) -> Result<Vec<usize>> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("Bohr radius ε = {eps} must lie in (0, 1/2)")));
    }
    if n == 0 {
        return Err(Error::Domain("N must be positive".into()));
    }
    let lim = eps * n as f64;
    let nn = n as u128;
    Ok((0..n)
        .into_par_iter()
        .filter(|&x| {
            spectrum.iter().all(|&r| {
                let m = (x as u128 * r as u128 % nn) as u64;
                (m.min(n as u64 - m) as f64) <= lim
            })
        })
        .collect())
}

/// `a′ = a ∗ β ∗ β` with `β = 1_B/|B|`.
pub fn smooth(a: &Signal, bohr: &[usize]) -> Result<Signal> {
    if bohr.is_empty() {
        return Err(Error::Domain("smoothing needs a nonempty Bohr set".into()));
    }
    let n = a.len();
    if (n as u64).saturating_mul(bohr.len() as u64) <= DIRECT_SMOOTH_MAX {
        let once = average_shifts(&a.values, bohr);
        return Ok(Signal { values: average_shifts(&once, bohr) });
    }
    let beta = Signal::uniform_on(n, bohr)?;
    let bt = dft(&beta);
    let mut at = dft(a);
    for (z, b) in at.values.iter_mut().zip(&bt.values) {
        *z *= b * b;
    }
    let mut out = idft(&at);
    let nonneg_real = a.values.iter().all(|z| z.im == 0.0 && z.re >= 0.0);
    if nonneg_real {
        // transform round-off leaves |negative| parts at the 1e-17 level
        for z in out.values.iter_mut() {
            z.im = 0.0;
            z.re = z.re.max(0.0);
        }
    }
    Ok(out)
}

/// `(f ∗ β)(x) = (1/|B|) Σ_{y ∈ B} f(x - y)`.
fn average_shifts(f: &[Complex64], bohr: &[usize]) -> Vec<Complex64> {
    let n = f.len();
    let inv = 1.0 / bohr.len() as f64;
    (0..n)
        .into_par_iter()
        .map(|x| {
            let terms: Vec<Complex64> = bohr.iter().map(|&y| f[(x + n - y % n) % n]).collect();
            pairwise(&terms) * inv
        })
        .collect()
}

/// `max_x |a′(x)|` and whether it is at most `2/N`.
pub fn linfty_check(a: &Signal) -> (f64, bool) {
    let m = a.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (m, m <= 2.0 / a.len() as f64)
}

/// `Σ_r |ã(r)|^ρ`, for `ρ > 2`.
pub fn restriction_constant(a: &Signal, rho: f64) -> Result<f64> {
    if !(rho > 2.0) {
        return Err(Error::Domain(format!("restriction needs ρ > 2, got {rho}")));
    }
    let at = dft(a);
    let p: Vec<f64> = at.values.iter().map(|z| z.norm().powf(rho)).collect();
    Ok(pairwise_f64(&p))
}

/// `𝒲(w) = Π_{p ≤ w} p`, or `None` on overflow.
pub fn primorial(w: u64) -> Option<u64> {
    (2..=w).filter(|&p| is_prime_trial(p)).try_fold(1u64, |acc, p| acc.checked_mul(p))
}

/// Largest `w` with `𝒲(w)^t ≤ n^{1/4}`.
pub fn default_w(n: u64, t: u32) -> u64 {
    let cap = (n as f64).powf(0.25);
    let mut w = 1;
    loop {
        let next = w + 1;
        match primorial(next).and_then(|m| m.checked_pow(t)) {
            Some(m) if (m as f64) <= cap => w = next,
            _ => return w,
        }
        if next > 64 {
            return w;
        }
    }
}

/// How the W-trick modulus is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WChoice {
    /// Largest `w` with `𝒲(w)^t ≤ n^{1/4}`.
    #[default]
    Default,
    /// Use `𝒲(w)` for this `w`.
    Given(u64),
    /// Use this modulus directly in place of `𝒲(w)`.
    Modulus(u64),
}

/// Output of [`w_trick`].
#[derive(Debug, Clone, PartialEq)]
pub struct WTrick {
    pub w: u64,
    /// The modulus `𝒲` (before raising to `t`).
    pub modulus: u64,
    pub t: u32,
    pub b: u64,
    /// `(x - b)/𝒲^t` over `x ∈ P`, `x ≡ b (𝒲^t)`, ascending.
    pub set: Vec<u64>,
    /// Prime in `(2n/𝒲^t, 4n/𝒲^t]`.
    pub big_n: u64,
    /// `a = 1_A λ_{b,𝒲^t}/N` on `Z_N`.
    pub signal: Signal,
    pub mass: f64,
    /// `δ/8`.
    pub threshold: f64,
}

impl WTrick {
    pub fn mass_ok(&self) -> bool {
        self.mass >= self.threshold
    }
}

/// Passes from a set of primes in `[1, n]` to a normalised signal on `Z_N`.
pub fn w_trick(
    primes: &[u64],
    n: u64,
    psi: &IntPolynomial,
    delta: f64,
    choice: WChoice,
) -> Result<WTrick> {
    if n < 2 {
        return Err(Error::Domain("w_trick needs n ≥ 2".into()));
    }
    if let Some(&p) = primes.iter().find(|&&p| p > n || !is_prime_trial(p)) {
        return Err(Error::Domain(format!("{p} is not a prime in [1, {n}]")));
    }
    let t = psi.lowtrim() as u32;
    let (w, modulus) = match choice {
        WChoice::Default => {
            let w = default_w(n, t);
            (w, primorial(w).unwrap())
        }
        WChoice::Given(w) => {
            (w, primorial(w).ok_or_else(|| Error::Range(format!("𝒲({w}) overflows")))?)
        }
        WChoice::Modulus(m) if m >= 1 => (largest_prime_factor(m), m),
        WChoice::Modulus(_) => return Err(Error::Domain("modulus must be ≥ 1".into())),
    };
    let m = modulus
        .checked_pow(t)
        .ok_or_else(|| Error::Range(format!("𝒲^t = {modulus}^{t} overflows")))?;
    if m > n {
        return Err(Error::Degenerate(format!("𝒲^t = {m} exceeds n = {n}")));
    }

    let mut weight: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
    for &p in primes {
        let r = p % m;
        let r = if r == 0 { m } else { r };
        if gcd_u64(r, m) == 1 {
            *weight.entry(r).or_insert(0.0) += (p as f64).ln();
        }
    }
    let mut best: Option<(u64, f64)> = None;
    for (&r, &s) in &weight {
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((r, s));
        }
    }
    let (b, _) = best.ok_or_else(|| {
        Error::Degenerate("no prime lies in a residue class coprime to 𝒲^t".into())
    })?;

    let set: Vec<u64> = primes
        .iter()
        .filter(|&&p| p >= b && (p - b) % m == 0 && p > b)
        .map(|&p| (p - b) / m)
        .collect();
    let mut set = set;
    set.sort_unstable();
    set.dedup();
    if set.is_empty() {
        return Err(Error::Degenerate(format!("class b = {b} mod {m} has no x ≥ 1")));
    }
    let lo = 2 * n / m;
    let hi = 4 * n / m;
    let big_n = smallest_prime_in(lo, hi)
        .ok_or_else(|| Error::Degenerate(format!("no prime in ({lo}, {hi}]")))?;

    let scale = euler_phi(m) as f64 / m as f64;
    let mut vals = vec![Complex64::new(0.0, 0.0); big_n as usize];
    for &x in &set {
        let v = (m * x + b) as f64;
        vals[x as usize] = Complex64::new(scale * v.ln() / big_n as f64, 0.0);
    }
    let signal = Signal::new(vals)?;
    let mass = signal.mass().re;
    Ok(WTrick { w, modulus, t, b, set, big_n, signal, mass, threshold: delta / 8.0 })
}

fn largest_prime_factor(m: u64) -> u64 {
    crate::arith::factorize(m).last().map(|&(p, _)| p).unwrap_or(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferenceConfig {
    pub eta: f64,
    pub eps: f64,
    pub rho: f64,
    /// Fail when `ε^{|R|} ≥ 2 log log w / w` does not hold.
    pub enforce_guard: bool,
}

impl Default for TransferenceConfig {
    fn default() -> Self {
        TransferenceConfig { eta: 0.2, eps: 0.05, rho: 2.5, enforce_guard: false }
    }
}

impl TransferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::Domain(format!("η = {} must be positive", self.eta)));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::Domain(format!("ε = {} must lie in (0, 1/2)", self.eps)));
        }
        if !(self.rho > 2.0) {
            return Err(Error::Domain(format!("ρ = {} must exceed 2", self.rho)));
        }
        Ok(())
    }
}

/// Summary of one transference run.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub w: u64,
    pub modulus: u64,
    pub t: u32,
    pub b: u64,
    pub big_n: u64,
    pub set_size: usize,
    pub mass: f64,
    pub threshold: f64,
    pub mass_ok: bool,
    pub spectrum_size: usize,
    pub bohr_size: usize,
    pub smoothed_mass: f64,
    pub linfty: f64,
    pub linfty_ok: bool,
    pub restriction: f64,
    /// `ε^{|R|}`.
    pub guard_lhs: f64,
    /// `2 log log w / w`, clamped at 0 where it is negative or undefined.
    pub guard_rhs: f64,
    pub guard_holds: bool,
}

/// Full pipeline: W-trick, large spectrum, Bohr set, smoothing and the
/// restriction sum.
pub fn transfer(
    primes: &[u64],
    n: u64,
    psi: &IntPolynomial,
    delta: f64,
    choice: WChoice,
    cfg: &TransferenceConfig,
) -> Result<(WTrick, Signal, TransferReport)> {
    cfg.validate()?;
    let wt = w_trick(primes, n, psi, delta, choice)?;
    let at = dft(&wt.signal);
    let spec = spectrum_of_transform(&at, cfg.eta);
    let bohr = bohr_set(&spec, cfg.eps, wt.big_n as usize)?;
    let smoothed = smooth(&wt.signal, &bohr)?;
    let (linfty, linfty_ok) = linfty_check(&smoothed);
    let restriction = restriction_constant(&wt.signal, cfg.rho)?;
    let guard_lhs = cfg.eps.powi(spec.len() as i32);
    let wf = wt.w as f64;
    let guard_rhs = if wt.w >= 2 { (2.0 * wf.ln().ln() / wf).max(0.0) } else { 0.0 };
    let guard_holds = guard_lhs >= guard_rhs;
    if !guard_holds {
        if cfg.enforce_guard {
            return Err(Error::Degenerate(format!(
                "ε^|R| = {guard_lhs:e} is below 2 log log w / w = {guard_rhs:e}"
            )));
        }
        log::warn!("transference guard fails: ε^|R| = {guard_lhs:e} < {guard_rhs:e}");
    }
    let report = TransferReport {
        w: wt.w,
        modulus: wt.modulus,
        t: wt.t,
        b: wt.b,
        big_n: wt.big_n,
        set_size: wt.set.len(),
        mass: wt.mass,
        threshold: wt.threshold,
        mass_ok: wt.mass_ok(),
        spectrum_size: spec.len(),
        bohr_size: bohr.len(),
        smoothed_mass: smoothed.mass().re,
        linfty,
        linfty_ok,
        restriction,
        guard_lhs,
        guard_rhs,
        guard_holds,
    };
    Ok((wt, smoothed, report))
}
