//! Triples `x - y = ψ(z)` with `x, y ∈ A` and `Wz + 1` prime.
//!
//! Counting is exact, by brute force over `(z, y)` or by an FFT
//! autocorrelation of `1_A`. The density-increment driver passes to dense
//! subprogressions `b, b + q^t, …` and rescales `ψ ↦ ψ(qx)/q^t`,
//! `W ↦ Wq`; every triple it emits is mapped back and re-verified.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::arith::{euler_phi, is_prime_trial};
use crate::error::{overflow, Error, Result};
use crate::expsum::delta_at;
use crate::polycore::IntPolynomial;
use crate::primetools::PrimeTable;
use crate::sum::pairwise_f64;

/// Default cap on stored sample triples.
pub const DEFAULT_SAMPLE_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CountMethod {
    BruteForce,
    Fft,
    FourierZn,
}

impl CountMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CountMethod::BruteForce => "brute",
            CountMethod::Fft => "fft",
            CountMethod::FourierZn => "fourier-zn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessParams {
    pub psi: String,
    pub w: u64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub count: u64,
    pub weighted_count: Option<f64>,
    /// `(x, y, z)` in increasing `z`, then `y`.
    pub samples: Vec<(u64, u64, u64)>,
    pub method: CountMethod,
    pub params: WitnessParams,
}

/// Sorted, deduplicated set with membership in `[1, n]`.
#[derive(Debug, Clone)]
struct Membership {
    bits: Vec<bool>,
}

impl Membership {
    fn new(a: &[u64], n: u64) -> Result<Self> {
        let mut bits = vec![false; n as usize + 1];
        for &x in a {
            if x == 0 || x > n {
                return Err(Error::Domain(format!("element {x} is outside [1, {n}]")));
            }
            bits[x as usize] = true;
        }
        Ok(Membership { bits })
    }

    #[inline]
    fn has(&self, x: u64) -> bool {
        (x as usize) < self.bits.len() && self.bits[x as usize]
    }

    fn size(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// `z ≥ 1` with `Wz + 1` prime and `ψ(z) ≤ limit`, paired with `ψ(z)`.
fn admissible_z(
    psi: &IntPolynomial,
    w: u64,
    limit: i128,
    table: &PrimeTable,
) -> Result<Vec<(u64, u64)>> {
    if limit < 1 {
        return Ok(Vec::new());
    }
    let m = psi.inverse_max(limit)?;
    let top = (w as u128) * m as u128 + 1;
    if top > table.limit() as u128 {
        return Err(Error::Range(format!(
            "W·M + 1 = {top} exceeds sieve limit {}",
            table.limit()
        )));
    }
    let mut out = Vec::new();
    for z in 1..=m {
        if table.is_prime(w * z + 1)? {
            let d = psi.eval(z as i128)?;
            if d >= 1 {
                out.push((z, d as u64));
            }
        }
    }
    Ok(out)
}

fn brute_counts(mem: &Membership, n: u64, zs: &[(u64, u64)]) -> Vec<u64> {
    zs.par_iter()
        .map(|&(_, d)| (1..=n.saturating_sub(d)).filter(|&y| mem.has(y) && mem.has(y + d)).count() as u64)
        .collect()
}

fn collect_samples(mem: &Membership, n: u64, zs: &[(u64, u64)], cap: usize) -> Vec<(u64, u64, u64)> {
    let mut out = Vec::new();
    'outer: for &(z, d) in zs {
        for y in 1..=n.saturating_sub(d) {
            if out.len() >= cap {
                break 'outer;
            }
            if mem.has(y) && mem.has(y + d) {
                out.push((y + d, y, z));
            }
        }
    }
    out
}

/// `c(d) = |A ∩ (A + d)|` for `0 ≤ d ≤ n`, via a power-of-two cyclic
/// autocorrelation of size `≥ 2n`.
fn autocorrelation(mem: &Membership, n: u64) -> Vec<u64> {
    let size = (2 * n as usize + 2).next_power_of_two();
    let mut f = vec![Complex64::new(0.0, 0.0); size];
    for x in 1..=n as usize {
        if mem.bits[x] {
            f[x].re = 1.0;
        }
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut f);
    for z in f.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut f);
    (0..=n as usize).map(|d| (f[d].re / size as f64).round().max(0.0) as u64).collect()
}

/// `r_{W,ψ}(A)` for `A ⊆ [1, n]`.
pub fn count_witnesses(
    a: &[u64],
    n: u64,
    psi: &IntPolynomial,
    w: u64,
    table: &PrimeTable,
    method: CountMethod,
) -> Result<WitnessReport> {
    count_witnesses_capped(a, n, psi, w, table, method, DEFAULT_SAMPLE_CAP)
}

pub fn count_witnesses_capped(
    a: &[u64],
    n: u64,
    psi: &IntPolynomial,
    w: u64,
    table: &PrimeTable,
    method: CountMethod,
    sample_cap: usize,
) -> Result<WitnessReport> {
    if w == 0 {
        return Err(Error::Domain("W must be positive".into()));
    }
    let mem = Membership::new(a, n)?;
    let zs = admissible_z(psi, w, n as i128 - 1, table)?;
    let count = match method {
        CountMethod::BruteForce => brute_counts(&mem, n, &zs).iter().sum(),
        CountMethod::Fft | CountMethod::FourierZn => {
            let c = autocorrelation(&mem, n);
            zs.iter().map(|&(_, d)| c[d as usize]).sum()
        }
    };
    Ok(WitnessReport {
        count,
        weighted_count: None,
        samples: collect_samples(&mem, n, &zs, sample_cap),
        method,
        params: WitnessParams { psi: psi.to_string(), w, n },
    })
}

/// Exact check of one triple against the original data.
pub fn verify_triple(
    a_sorted: &[u64],
    psi: &IntPolynomial,
    w: u64,
    table: &PrimeTable,
    (x, y, z): (u64, u64, u64),
) -> Result<bool> {
    if z == 0 || a_sorted.binary_search(&x).is_err() || a_sorted.binary_search(&y).is_err() {
        return Ok(false);
    }
    let p = w.checked_mul(z).and_then(|v| v.checked_add(1)).ok_or_else(|| overflow("Wz + 1"))?;
    let prime = if p <= table.limit() { table.is_prime(p)? } else { is_prime_trial(p) };
    Ok(prime && x as i128 - y as i128 == psi.eval(z as i128)?)
}

/// Both evaluations of `Σ_{x-y=ψ(z), z≤M} ψ^Δ(z-1) λ_{1,W}(z)` over pairs
/// from `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedCount {
    pub direct: f64,
    /// `(1/N) Σ_r ã(r) ã(-r) K(r)`.
    pub fourier: f64,
    pub m: u64,
}

impl WeightedCount {
    pub fn relative_gap(&self) -> f64 {
        (self.direct - self.fourier).abs() / self.direct.abs().max(1e-300)
    }
}

pub fn weighted_count(
    a: &[u64],
    psi: &IntPolynomial,
    w: u64,
    big_n: u64,
    table: &PrimeTable,
) -> Result<WeightedCount> {
    if !is_prime_trial(big_n) {
        return Err(Error::Domain(format!("N = {big_n} is not prime")));
    }
    let half = (big_n - 1) / 2;
    let mem = Membership::new(a, half).map_err(|_| {
        Error::Domain(format!("A must lie in [1, {half}] to avoid wraparound in Z_{big_n}"))
    })?;
    let limit = (big_n / 2) as i128 - 1;
    let m = if limit >= 1 { psi.inverse_max(limit)? } else { 0 };
    let top = (w as u128) * m as u128 + 1;
    if top > table.limit() as u128 {
        return Err(Error::Range(format!("W·M + 1 = {top} exceeds sieve limit {}", table.limit())));
    }
    let mut kernel: Vec<(u64, f64)> = Vec::new();
    for z in 1..=m {
        let lam = table.lambda_weight(1, w, z)?;
        if lam != 0.0 {
            let d = psi.eval(z as i128)?;
            kernel.push((d as u64, delta_at(psi, z)? as f64 * lam));
        }
    }
    let direct_terms: Vec<f64> = kernel
        .iter()
        .map(|&(d, k)| {
            let pairs = (1..=half.saturating_sub(d)).filter(|&y| mem.has(y) && mem.has(y + d)).count();
            pairs as f64 * k
        })
        .collect();
    let direct = pairwise_f64(&direct_terms);

    let nn = big_n as usize;
    let mut at = vec![Complex64::new(0.0, 0.0); nn];
    for x in 1..=half as usize {
        if mem.bits[x] {
            at[x].re = 1.0;
        }
    }
    let mut kt = vec![Complex64::new(0.0, 0.0); nn];
    for &(d, k) in &kernel {
        kt[d as usize % nn].re += k;
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nn);
    fft.process(&mut at);
    fft.process(&mut kt);
    let terms: Vec<f64> = (0..nn).map(|r| (at[r] * at[(nn - r) % nn] * kt[r]).re).collect();
    let fourier = pairwise_f64(&terms) / big_n as f64;
    Ok(WeightedCount { direct, fourier, m })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseCaseReport {
    pub report: WitnessReport,
    /// Smallest `|A ∩ (A + ψ(z))|` over `z ≥ 1` with `ψ(z) ≤ n/3`.
    pub min_pairs: u64,
    /// `⌊n/6⌋ - 2`, the per-difference requirement with rounding slack.
    pub required_pairs: i64,
    pub pairs_ok: bool,
    /// `(1/24k) W n^{1+1/k} a₁^{-1/k} / (φ(W) ln n)`.
    pub bound: f64,
    pub bound_ok: bool,
}

/// The case `|A| ≥ ⌈3n/4⌉`, where every difference up to `n/3` is common.
pub fn dense_case_count(
    n: u64,
    a: &[u64],
    psi: &IntPolynomial,
    w: u64,
    table: &PrimeTable,
) -> Result<DenseCaseReport> {
    let mem = Membership::new(a, n)?;
    let need = (3 * n).div_ceil(4) as usize;
    if mem.size() < need {
        return Err(Error::Domain(format!(
            "dense case needs |A| ≥ ⌈3n/4⌉ = {need}, got {}",
            mem.size()
        )));
    }
    let report = count_witnesses(a, n, psi, w, table, CountMethod::Fft)?;
    let c = autocorrelation(&mem, n);
    let third = n as i128 / 3;
    let mut min_pairs = u64::MAX;
    if third >= 1 {
        let zmax = psi.inverse_max(third)?;
        for z in 1..=zmax {
            let d = psi.eval(z as i128)?;
            if d >= 1 && d <= third {
                min_pairs = min_pairs.min(c[d as usize]);
            }
        }
    }
    let required_pairs = (n / 6) as i64 - 2;
    let pairs_ok = min_pairs == u64::MAX || min_pairs as i64 >= required_pairs;
    let k = psi.degree() as f64;
    let a1 = psi.leading().unsigned_abs() as f64;
    let nf = n as f64;
    let bound = w as f64 * nf.powf(1.0 + 1.0 / k) * a1.powf(-1.0 / k)
        / (24.0 * k * euler_phi(w) as f64 * nf.ln());
    let bound_ok = report.count as f64 >= bound;
    Ok(DenseCaseReport {
        report,
        min_pairs: if min_pairs == u64::MAX { 0 } else { min_pairs },
        required_pairs,
        pairs_ok,
        bound,
        bound_ok,
    })
}

/// Increment parameters `ε`, `Q` and the exponent `ρ = k 2^{k+3}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementParameters {
    pub eps: f64,
    pub q: f64,
    pub rho: f64,
    pub log10_eps: f64,
    pub log10_q: f64,
    /// A value was clamped to `[1e-300, 1e300]`.
    pub capped: bool,
    /// `Q > 10^6` or `ε < 10^-12`.
    pub impractical: bool,
}

/// `ε = 4^{-(k+2)ρ} δ^{(ρ+1)/2} C₂^{-1/2} |a|^{-1/2}` and
/// `Q = 4^{(k+1)^4} δ^{-2k(k+2)} C₁^{k(k+2)} |a|^{k(k+2)}`, evaluated in
/// log space.
pub fn epsilon_q(delta: f64, k: u32, t: u32, a_low: i128, c1: f64, c2: f64) -> Result<IncrementParameters> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("δ = {delta} must lie in (0, 1]")));
    }
    if k == 0 || t == 0 || t > k || a_low == 0 || !(c1 > 0.0) || !(c2 > 0.0) {
        return Err(Error::Domain("need k ≥ t ≥ 1, a ≠ 0 and C₁, C₂ > 0".into()));
    }
    let kf = k as f64;
    let rho = kf * 2f64.powi(k as i32 + 3);
    let ln4 = 4f64.ln();
    let la = (a_low.unsigned_abs() as f64).ln();
    let ln_eps = -(kf + 2.0) * rho * ln4 + (rho + 1.0) / 2.0 * delta.ln() - 0.5 * c2.ln() - 0.5 * la;
    let kk2 = kf * (kf + 2.0);
    let ln_q = (kf + 1.0).powi(4) * ln4 - 2.0 * kk2 * delta.ln() + kk2 * c1.ln() + kk2 * la;
    let l10 = std::f64::consts::LN_10;
    let (log10_eps, log10_q) = (ln_eps / l10, ln_q / l10);
    let clamp = |l: f64| 10f64.powf(l.clamp(-300.0, 300.0));
    let capped = log10_eps.abs() > 300.0 || log10_q.abs() > 300.0;
    Ok(IncrementParameters {
        eps: clamp(log10_eps),
        q: clamp(log10_q),
        rho,
        log10_eps,
        log10_q,
        capped,
        impractical: log10_q > 6.0 || log10_eps < -12.0,
    })
}

/// Dense subprogression found by [`increment_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct Increment {
    pub q: u64,
    pub b: u64,
    pub m: u64,
    /// `{1 + (x - b)/q^t : x ∈ A ∩ 𝔸_m(b, q^t)}` ⊆ `[1, m]`.
    pub set: Vec<u64>,
    pub delta_before: f64,
    pub delta_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Increment(Increment),
    NoDenseProgression { m: u64 },
}

/// Looks for `q ≤ Q` with at least `εn` starting points `b ≤ n - mq^t` whose
/// progression `𝔸_m(b, q^t)` meets `A` in `≥ (δ+ε)m` points.
///
/// `m` defaults to `⌊10^{-2} ε Q^{-t} n⌋`. Among qualifying `(q, b)` the
/// densest wins, then the smallest `q`, then the smallest `b`.
pub fn increment_step(
    a: &[u64],
    n: u64,
    t: u32,
    eps: f64,
    q_max: u64,
    m: Option<u64>,
) -> Result<StepOutcome> {
    if !(eps > 0.0) || q_max == 0 {
        return Err(Error::Domain("increment_step needs ε > 0 and Q ≥ 1".into()));
    }
    let mem = Membership::new(a, n)?;
    let delta = mem.size() as f64 / n as f64;
    let qt_max = (q_max as f64).powi(t as i32);
    let m = m.unwrap_or((1e-2 * eps * n as f64 / qt_max).floor() as u64);
    if m == 0 {
        let need = (100.0 * qt_max / eps).ceil();
        return Err(Error::Degenerate(format!(
            "progression length m = 0; n must be at least {need:.0} for ε = {eps}, Q = {q_max}"
        )));
    }
    let threshold = (delta + eps) * m as f64;
    let best = (1..=q_max)
        .into_par_iter()
        .filter_map(|q| {
            let d = q.checked_pow(t)?;
            let span = m.checked_mul(d)?;
            if span >= n {
                return None;
            }
            let last_b = n - span;
            let mut cnt = vec![0u32; last_b as usize + 1];
            let mut best: Option<(u32, u64)> = None;
            let mut dense = 0u64;
            for b in 1..=last_b {
                let c = if b <= d {
                    (0..m).filter(|&i| mem.has(b + i * d)).count() as u32
                } else {
                    let prev = cnt[(b - d) as usize];
                    prev + mem.has(b + (m - 1) * d) as u32 - mem.has(b - d) as u32
                };
                cnt[b as usize] = c;
                if c as f64 >= threshold {
                    dense += 1;
                    if best.is_none_or(|(bc, _)| c > bc) {
                        best = Some((c, b));
                    }
                }
            }
            if (dense as f64) < eps * n as f64 {
                return None;
            }
            best.map(|(c, b)| (c, q, b))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None::<(u32, u64, u64)>, |acc, cand| match acc {
            None => Some(cand),
            Some(cur) => {
                let better = cand.0 > cur.0 || (cand.0 == cur.0 && (cand.1, cand.2) < (cur.1, cur.2));
                Some(if better { cand } else { cur })
            }
        });
    let Some((c, q, b)) = best else {
        return Ok(StepOutcome::NoDenseProgression { m });
    };
    let d = q.pow(t);
    let set: Vec<u64> = (0..m).filter(|&i| mem.has(b + i * d)).map(|i| i + 1).collect();
    debug_assert_eq!(set.len() as u32, c);
    Ok(StepOutcome::Increment(Increment {
        q,
        b,
        m,
        delta_after: c as f64 / m as f64,
        set,
        delta_before: delta,
    }))
}

/// Practical replacement for the proof's `ε(δ)`, `Q(δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    /// `ε = eps_factor · δ`.
    pub eps_factor: f64,
    /// `Q = min(q_cap, ⌈1/δ⌉, Q_max(n))`.
    pub q_cap: u64,
    /// Smallest progression length `m = ⌊n/(4Q^t)⌋` worth recursing into.
    pub min_level: u64,
    pub depth_cap: usize,
    pub sample_cap: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { eps_factor: 0.1, q_cap: 20, min_level: 8, depth_cap: 32, sample_cap: DEFAULT_SAMPLE_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub q: u64,
    pub b: u64,
    pub m: u64,
    pub delta_before: f64,
    pub delta_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terminal {
    /// Triples in original coordinates, counted at recursion depth `depth`.
    Witnesses { depth: usize, report: WitnessReport },
    Exhausted(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementTrace {
    pub steps: Vec<StepRecord>,
    pub terminal: Terminal,
}

/// One recursion level: `x_orig = base + (x - 1)·stride`, `z_orig = z·zmul`.
#[derive(Debug, Clone)]
struct Level {
    set: Vec<u64>,
    n: u64,
    psi: IntPolynomial,
    w: u64,
    base: u64,
    stride: u64,
    zmul: u64,
}

/// Runs the density-increment iteration and returns verified witnesses.
///
/// A level is counted directly once `δ ≥ 3/4`, when no dense progression
/// exists, or when it is too short to split further. A level with no
/// witnesses hands the count back to its parent.
pub fn find_witnesses(
    a: &[u64],
    n: u64,
    psi: &IntPolynomial,
    w: u64,
    table: &PrimeTable,
    schedule: &Schedule,
) -> Result<IncrementTrace> {
    let mut sorted = a.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Membership::new(&sorted, n)?;
    let t = psi.lowtrim() as u32;
    let mut levels = vec![Level { set: sorted.clone(), n, psi: psi.clone(), w, base: 1, stride: 1, zmul: 1 }];
    let mut steps = Vec::new();
    loop {
        let cur = levels.last().unwrap();
        if cur.set.is_empty() {
            break;
        }
        let delta = cur.set.len() as f64 / cur.n as f64;
        if delta >= 0.75 {
            break;
        }
        let q_lim = q_max_for(cur.n, t, schedule.min_level);
        if q_lim == 0 {
            break;
        }
        let q = schedule.q_cap.min((1.0 / delta).ceil() as u64).min(q_lim).max(1);
        let m = cur.n / (4 * q.pow(t));
        let eps = schedule.eps_factor * delta;
        let inc = match increment_step(&cur.set, cur.n, t, eps, q, Some(m))? {
            StepOutcome::NoDenseProgression { .. } => break,
            StepOutcome::Increment(inc) => inc,
        };
        if steps.len() >= schedule.depth_cap {
            return Ok(IncrementTrace { steps, terminal: Terminal::Exhausted("depth".into()) });
        }
        let d = inc.q.pow(t);
        let next = Level {
            set: inc.set.clone(),
            n: inc.m,
            psi: cur.psi.rescale(inc.q)?,
            w: cur.w.checked_mul(inc.q).ok_or_else(|| overflow("W·q"))?,
            base: (inc.b - 1)
                .checked_mul(cur.stride)
                .and_then(|v| v.checked_add(cur.base))
                .ok_or_else(|| overflow("progression base"))?,
            stride: cur.stride.checked_mul(d).ok_or_else(|| overflow("progression stride"))?,
            zmul: cur.zmul.checked_mul(inc.q).ok_or_else(|| overflow("z multiplier"))?,
        };
        steps.push(StepRecord {
            q: inc.q,
            b: inc.b,
            m: inc.m,
            delta_before: inc.delta_before,
            delta_after: inc.delta_after,
        });
        levels.push(next);
    }

    let mut depth = levels.len() - 1;
    let (level, report) = loop {
        let lv = &levels[depth];
        let r = count_witnesses_capped(&lv.set, lv.n, &lv.psi, lv.w, table, CountMethod::Fft, schedule.sample_cap)?;
        if r.count > 0 || depth == 0 {
            break (lv, r);
        }
        depth -= 1;
    };
    let mut samples = Vec::with_capacity(report.samples.len());
    for &(x, y, z) in &report.samples {
        let orig = (
            level.base + (x - 1) * level.stride,
            level.base + (y - 1) * level.stride,
            z * level.zmul,
        );
        if !verify_triple(&sorted, psi, w, table, orig)? {
            return Err(Error::Domain(format!("unwound triple {orig:?} fails verification")));
        }
        samples.push(orig);
    }
    let report = WitnessReport {
        samples,
        params: WitnessParams { psi: psi.to_string(), w, n },
        ..report
    };
    Ok(IncrementTrace { steps, terminal: Terminal::Witnesses { depth, report } })
}

/// Largest `Q` with `⌊n/(4Q^t)⌋ ≥ min_level` (0 if none).
fn q_max_for(n: u64, t: u32, min_level: u64) -> u64 {
    let mut q = 0u64;
    while let Some(p) = (q + 1).checked_pow(t) {
        if n / (4 * p) >= min_level.max(1) {
            q += 1;
        } else {
            break;
        }
        if q > n {
            break;
        }
    }
    q
}
