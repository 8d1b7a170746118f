//! Elementary arithmetic functions used across the crate.

use crate::error::{overflow, Result};

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

pub fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a as i128
}

pub fn lcm_i128(a: i128, b: i128) -> Result<i128> {
    if a == 0 || b == 0 {
        return Ok(0);
    }
    let g = gcd_i128(a, b);
    (a.abs() / g).checked_mul(b.abs()).ok_or_else(|| overflow("lcm"))
}

/// Trial-division factorisation, ascending primes with multiplicities.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for p in [2u64, 3] {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    let mut p = 5u64;
    let mut step = 2;
    while p.saturating_mul(p) <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += step;
        step = 6 - step;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let f = factorize(n);
    f.len() == 1 && f[0].1 == 1
}

pub fn euler_phi(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

pub fn mobius(n: u64) -> i8 {
    if n == 0 {
        return 0;
    }
    let mut sign = 1i8;
    for (_, e) in factorize(n) {
        if e > 1 {
            return 0;
        }
        sign = -sign;
    }
    sign
}

/// Möbius function on `0..=n` by a linear sieve (`μ(0)` is set to 0).
pub fn mobius_upto(n: usize) -> Vec<i8> {
    let mut mu = vec![0i8; n + 1];
    if n == 0 {
        return mu;
    }
    mu[1] = 1;
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > n {
                break;
            }
            composite[ip] = true;
            if i % p == 0 {
                mu[ip] = 0;
                break;
            }
            mu[ip] = -mu[i];
        }
    }
    mu
}

pub fn binomial_u128(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or_else(|| overflow("binomial coefficient"))?
            / (i as u128 + 1);
    }
    Ok(acc)
}

/// Smallest prime in the half-open interval `(lo, hi]`, by trial division.
pub fn smallest_prime_in(lo: u64, hi: u64) -> Option<u64> {
    (lo.saturating_add(1)..=hi).find(|&x| is_prime_trial(x))
}
