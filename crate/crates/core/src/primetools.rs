//! Sieve-backed prime queries.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use log::{debug, warn};
use rayon::prelude::*;

use crate::arith::{binomial_u128, euler_phi, factorize, gcd_u64};
use crate::error::{overflow, Error, Result};

const SEGMENT_BITS: u64 = 1 << 20;
const MAGIC: &[u8; 4] = b"ALPS";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Default cap on the bitset size.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

/// Environment variable naming a directory for cached sieves.
pub const CACHE_ENV: &str = "ARCLAB_SIEVE_CACHE";

/// Primality bitset over `0..=limit`.
#[derive(Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    words: Vec<u64>,
}

impl std::fmt::Debug for PrimeTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrimeTable").field("limit", &self.limit).finish()
    }
}

fn words_for(limit: u64) -> u64 {
    limit / 64 + 1
}

impl PrimeTable {
    pub fn build(limit: u64) -> Result<Self> {
        Self::build_with_budget(limit, DEFAULT_MEMORY_BUDGET)
    }

    pub fn build_with_budget(limit: u64, budget_bytes: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::Domain(format!("sieve limit must be ≥ 2, got {limit}")));
        }
        let bytes = words_for(limit).saturating_mul(8);
        if bytes > budget_bytes {
            return Err(Error::Resource(format!(
                "sieve to {limit} needs {bytes} bytes, budget is {budget_bytes}"
            )));
        }
        let root = (limit as f64).sqrt() as u64 + 1;
        let base = simple_sieve(root);
        let mut words = vec![u64::MAX; words_for(limit) as usize];
        let seg_words = (SEGMENT_BITS / 64) as usize;
        words.par_chunks_mut(seg_words).enumerate().for_each(|(s, chunk)| {
            let lo = s as u64 * SEGMENT_BITS;
            let hi = lo + chunk.len() as u64 * 64;
            for &p in &base {
                let start = (p * p).max(lo.div_ceil(p) * p);
                let mut m = start;
                while m < hi {
                    let off = m - lo;
                    chunk[(off / 64) as usize] &= !(1u64 << (off % 64));
                    m += p;
                }
            }
        });
        words[0] &= !0b11;
        let tail = (limit % 64) + 1;
        if tail < 64 {
            *words.last_mut().unwrap() &= (1u64 << tail) - 1;
        }
        debug!("sieved primes up to {limit}");
        Ok(PrimeTable { limit, words })
    }

    /// Loads `dir/primes-{limit}.bin` if present and valid, otherwise sieves
    /// and writes it.
    pub fn build_cached(limit: u64, dir: &Path) -> Result<Self> {
        let path = cache_path(dir, limit);
        if path.exists() {
            match Self::load(&path) {
                Ok(t) if t.limit == limit => return Ok(t),
                Ok(_) => warn!("cache {} has a different limit, rebuilding", path.display()),
                Err(e) => warn!("ignoring unreadable cache {}: {e}", path.display()),
            }
        }
        let t = Self::build(limit)?;
        fs::create_dir_all(dir)?;
        t.save(&path)?;
        Ok(t)
    }

    /// Like [`build`](Self::build), but uses the cache directory from
    /// `ARCLAB_SIEVE_CACHE` when that variable is set.
    pub fn build_env(limit: u64) -> Result<Self> {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) => Self::build_cached(limit, Path::new(&dir)),
            None => Self::build(limit),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(HEADER_LEN + self.words.len() * 8);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&self.limit.to_le_bytes());
        for w in &self.words {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        let mut f = fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < HEADER_LEN || &buf[..4] != MAGIC {
            return Err(Error::Parse(format!("{} is not a sieve cache", path.display())));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported sieve cache version {version}")));
        }
        let limit = u64::from_le_bytes(buf[8..16].try_into().unwrap());
        let n = words_for(limit) as usize;
        if buf.len() != HEADER_LEN + 8 * n {
            return Err(Error::Parse(format!("truncated sieve cache {}", path.display())));
        }
        let words = buf[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(PrimeTable { limit, words })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    #[inline]
    fn bit(&self, n: u64) -> bool {
        (self.words[(n / 64) as usize] >> (n % 64)) & 1 == 1
    }

    fn check(&self, n: u64) -> Result<()> {
        if n > self.limit {
            Err(Error::Range(format!("{n} exceeds sieve limit {}", self.limit)))
        } else {
            Ok(())
        }
    }

    pub fn is_prime(&self, n: u64) -> Result<bool> {
        self.check(n)?;
        Ok(self.bit(n))
    }

    /// Primes in `lo..=hi` in increasing order, clipped to the limit.
    pub fn primes_in(&self, lo: u64, hi: u64) -> impl Iterator<Item = u64> + '_ {
        let hi = hi.min(self.limit);
        let first_word = (lo / 64) as usize;
        let last_word = if hi >= lo { (hi / 64) as usize + 1 } else { first_word };
        self.words[first_word..last_word]
            .iter()
            .enumerate()
            .flat_map(move |(i, &w)| {
                let base = (first_word + i) as u64 * 64;
                BitIter(w).map(move |b| base + b)
            })
            .filter(move |&p| p >= lo && p <= hi)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes_in(0, self.limit)
    }

    /// Number of primes up to `n`.
    pub fn prime_count(&self, n: u64) -> Result<u64> {
        self.check(n)?;
        let full = (n / 64) as usize;
        let mut c: u64 = self.words[..full].iter().map(|w| w.count_ones() as u64).sum();
        let rem = n % 64 + 1;
        let mask = if rem == 64 { u64::MAX } else { (1u64 << rem) - 1 };
        c += (self.words[full] & mask).count_ones() as u64;
        Ok(c)
    }

    /// `{x ∈ [1,N] : Wx + b prime}`, with `b` reduced into `[1, W]`.
    pub fn lambda_membership(&self, b: i64, w: u64, n: u64) -> Result<Vec<u64>> {
        let b = reduce_residue(b, w)?;
        let top = w
            .checked_mul(n)
            .and_then(|v| v.checked_add(b))
            .ok_or_else(|| overflow("Wx + b"))?;
        self.check(top)?;
        if gcd_u64(b, w) != 1 {
            warn!("gcd(b={b}, W={w}) ≠ 1; at most one x can give a prime");
        }
        Ok((1..=n).filter(|&x| self.bit(w * x + b)).collect())
    }

    /// `λ_{b,W}(x) = (φ(W)/W)·ln(Wx+b)` when `Wx+b` is prime, else 0.
    pub fn lambda_weight(&self, b: i64, w: u64, x: u64) -> Result<f64> {
        let b = reduce_residue(b, w)?;
        let v = w.checked_mul(x).and_then(|v| v.checked_add(b)).ok_or_else(|| overflow("Wx + b"))?;
        self.check(v)?;
        if self.bit(v) {
            Ok(euler_phi(w) as f64 / w as f64 * (v as f64).ln())
        } else {
            Ok(0.0)
        }
    }

    /// `Λ(x)`: `ln p` if `x = p^m`, else 0.
    pub fn von_mangoldt(&self, x: u64) -> Result<f64> {
        self.check(x)?;
        if x < 2 {
            return Ok(0.0);
        }
        if self.bit(x) {
            return Ok((x as f64).ln());
        }
        let p = self.smallest_factor(x);
        let mut y = x;
        while y % p == 0 {
            y /= p;
        }
        Ok(if y == 1 { (p as f64).ln() } else { 0.0 })
    }

    fn smallest_factor(&self, x: u64) -> u64 {
        for p in self.primes() {
            if p * p > x {
                break;
            }
            if x % p == 0 {
                return p;
            }
        }
        x
    }

    /// `Λ(0..=n)` in one pass over prime powers.
    pub fn von_mangoldt_upto(&self, n: u64) -> Result<Vec<f64>> {
        self.check(n)?;
        let mut out = vec![0.0; n as usize + 1];
        for p in self.primes_in(2, n) {
            let lp = (p as f64).ln();
            let mut pk = p;
            loop {
                out[pk as usize] = lp;
                match pk.checked_mul(p) {
                    Some(v) if v <= n => pk = v,
                    _ => break,
                }
            }
        }
        Ok(out)
    }

    /// `ψ(y) = Σ_{x ≤ y} Λ(x)`.
    pub fn chebyshev_psi(&self, y: u64) -> Result<f64> {
        let lam = self.von_mangoldt_upto(y)?;
        Ok(crate::sum::pairwise_f64(&lam))
    }

    /// `Σ_{p ≤ y, p ≡ b (q)} ln p − y/φ(q)`.
    pub fn sw_discrepancy(&self, q: u64, b: i64, y: u64) -> Result<f64> {
        if q == 0 {
            return Err(Error::Domain("modulus must be positive".into()));
        }
        let br = b.rem_euclid(q as i64) as u64;
        if gcd_u64(br, q) != 1 {
            return Err(Error::Domain(format!("gcd(b={b}, q={q}) ≠ 1")));
        }
        self.check(y)?;
        let logs: Vec<f64> =
            self.primes_in(2, y).filter(|p| p % q == br).map(|p| (p as f64).ln()).collect();
        Ok(crate::sum::pairwise_f64(&logs) - y as f64 / euler_phi(q) as f64)
    }

    /// Number of ordered `k`-tuples of positive integers with product `x`.
    pub fn divisor_k(&self, k: u32, x: u64) -> Result<u128> {
        if k == 0 || x == 0 {
            return Err(Error::Domain("divisor_k needs k ≥ 1 and x ≥ 1".into()));
        }
        self.check(x)?;
        let mut acc: u128 = 1;
        for (_, e) in factorize(x) {
            let c = binomial_u128(e as u64 + k as u64 - 1, k as u64 - 1)?;
            acc = acc.checked_mul(c).ok_or_else(|| overflow("d_k(x)"))?;
        }
        Ok(acc)
    }
}

/// Reduces `b` into `[1, W]`, warning when it moved.
pub fn reduce_residue(b: i64, w: u64) -> Result<u64> {
    if w == 0 {
        return Err(Error::Domain("W must be positive".into()));
    }
    let r = b.rem_euclid(w as i64) as u64;
    let r = if r == 0 { w } else { r };
    if b < 1 || b as u64 > w {
        warn!("b = {b} outside [1, {w}], using {r}");
    }
    Ok(r)
}

pub fn cache_path(dir: &Path, limit: u64) -> PathBuf {
    dir.join(format!("primes-{limit}.bin"))
}

fn simple_sieve(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut comp = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !comp[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                comp[j] = true;
                j += i;
            }
        }
    }
    out
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        if self.0 == 0 {
            return None;
        }
        let t = self.0.trailing_zeros() as u64;
        self.0 &= self.0 - 1;
        Some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_prime_trial;

    #[test]
    fn small_tables() {
        let t = PrimeTable::build(10).unwrap();
        assert_eq!(t.primes().collect::<Vec<_>>(), vec![2, 3, 5, 7]);
        let t = PrimeTable::build(2).unwrap();
        assert_eq!(t.primes().collect::<Vec<_>>(), vec![2]);
        assert_eq!(PrimeTable::build(100).unwrap().prime_count(100).unwrap(), 25);
        assert!(PrimeTable::build(1).is_err());
    }

    #[test]
    fn matches_trial_division_across_segments() {
        let limit = 3 * SEGMENT_BITS + 77;
        let t = PrimeTable::build(limit).unwrap();
        for n in (0..=10_000u64).chain(limit - 5000..=limit) {
            assert_eq!(t.is_prime(n).unwrap(), is_prime_trial(n), "n = {n}");
        }
        assert!(t.is_prime(limit + 1).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            PrimeTable::build_with_budget(1 << 20, 1024),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = PrimeTable::build_cached(5000, dir.path()).unwrap();
        assert!(cache_path(dir.path(), 5000).exists());
        let b = PrimeTable::build_cached(5000, dir.path()).unwrap();
        assert_eq!(a, b);
        let bytes = fs::read(cache_path(dir.path(), 5000)).unwrap();
        assert_eq!(&bytes[..4], MAGIC);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 5000);
    }

    #[test]
    fn lambda_examples() {
        let t = PrimeTable::build(100).unwrap();
        assert_eq!(t.lambda_membership(1, 1, 10).unwrap(), vec![1, 2, 4, 6, 10]);
        assert_eq!(t.lambda_membership(1, 2, 5).unwrap(), vec![1, 2, 3, 5]);
        assert!(t.lambda_membership(2, 2, 10).unwrap().is_empty());
        assert!(matches!(t.lambda_membership(1, 1, 100), Err(Error::Range(_))));
        assert!((t.lambda_weight(1, 2, 1).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert_eq!(t.lambda_weight(1, 2, 4).unwrap(), 0.0);
        assert!((t.lambda_weight(1, 1, 1).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn von_mangoldt_examples() {
        let t = PrimeTable::build(1000).unwrap();
        assert_eq!(t.von_mangoldt(8).unwrap(), 2f64.ln());
        assert_eq!(t.von_mangoldt(6).unwrap(), 0.0);
        assert_eq!(t.von_mangoldt(7).unwrap(), 7f64.ln());
        let bulk = t.von_mangoldt_upto(1000).unwrap();
        for x in 1..=1000 {
            assert_eq!(bulk[x as usize], t.von_mangoldt(x).unwrap());
        }
    }

    #[test]
    fn sw_examples() {
        let t = PrimeTable::build(100).unwrap();
        let lp = |ps: &[u64]| ps.iter().map(|&p| (p as f64).ln()).sum::<f64>();
        let d = t.sw_discrepancy(1, 1, 10).unwrap();
        assert!((d - (lp(&[2, 3, 5, 7]) - 10.0)).abs() < 1e-12);
        let d = t.sw_discrepancy(4, 1, 20).unwrap();
        assert!((d - (lp(&[5, 13, 17]) - 10.0)).abs() < 1e-12);
        let d = t.sw_discrepancy(2, 1, 3).unwrap();
        assert!((d - (3f64.ln() - 3.0)).abs() < 1e-12);
        assert!(matches!(t.sw_discrepancy(4, 2, 20), Err(Error::Domain(_))));
    }

    #[test]
    fn divisor_examples() {
        let t = PrimeTable::build(10_000).unwrap();
        assert_eq!(t.divisor_k(2, 12).unwrap(), 6);
        assert_eq!(t.divisor_k(1, 9973).unwrap(), 1);
        assert_eq!(t.divisor_k(3, 4).unwrap(), 6);
        for x in 1..=10_000u64 {
            let brute = (1..=x).filter(|d| x % d == 0).count() as u128;
            assert_eq!(t.divisor_k(2, x).unwrap(), brute);
        }
    }

    #[test]
    fn reduce_residue_wraps() {
        assert_eq!(reduce_residue(0, 6).unwrap(), 6);
        assert_eq!(reduce_residue(-1, 6).unwrap(), 5);
        assert_eq!(reduce_residue(13, 6).unwrap(), 1);
    }
}
