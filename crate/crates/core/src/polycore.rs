//! Integer polynomials with zero constant term.
//!
//! `IntPolynomial` stores its coefficients highest degree first, matching the
//! usual `a₁x^k + a₂x^{k-1} + … + a_k x` indexing: `coeffs()[i]` multiplies
//! `x^{k-i}`, so `a_{k-i+1}` multiplies `x^i`. All evaluation is exact in
//! 128-bit arithmetic and overflow is reported as [`Error::Range`].

use std::fmt;
use std::str::FromStr;

use crate::arith::{gcd_i128, lcm_i128};
use crate::error::{overflow, Error, Result};

/// General integer polynomial, coefficients in ascending degree order.
///
/// Used for differences `ψ^Δ` and polynomial weights, which may carry a
/// constant term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    coeffs: Vec<i128>,
}

impl Polynomial {
    pub fn from_ascending(mut coeffs: Vec<i128>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn constant(c: i128) -> Self {
        Self::from_ascending(vec![c])
    }

    /// Coefficients with `ascending()[i]` multiplying `x^i`.
    pub fn ascending(&self) -> &[i128] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: i128) -> Result<i128> {
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc
                .checked_mul(x)
                .and_then(|v| v.checked_add(c))
                .ok_or_else(|| overflow("polynomial value"))?;
        }
        Ok(acc)
    }

    /// `p(x + c)` by repeated synthetic division.
    pub fn shift(&self, c: i128) -> Result<Polynomial> {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let t = a[j + 1].checked_mul(c).ok_or_else(|| overflow("shift"))?;
                a[j] = a[j].checked_add(t).ok_or_else(|| overflow("shift"))?;
            }
        }
        Ok(Polynomial::from_ascending(a))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, self.coeffs.iter().enumerate().rev().map(|(i, &c)| (c, i)), 'x')
    }
}

fn write_terms<I: Iterator<Item = (i128, usize)>>(
    f: &mut fmt::Formatter<'_>,
    terms: I,
    var: char,
) -> fmt::Result {
    let mut first = true;
    for (c, e) in terms {
        if c == 0 {
            continue;
        }
        let mag = c.unsigned_abs();
        if first {
            if c < 0 {
                write!(f, "-")?;
            }
        } else if c < 0 {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        first = false;
        match (mag, e) {
            (m, 0) => write!(f, "{m}")?,
            (1, 1) => write!(f, "{var}")?,
            (1, e) => write!(f, "{var}^{e}")?,
            (m, 1) => write!(f, "{m}{var}")?,
            (m, e) => write!(f, "{m}{var}^{e}")?,
        }
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

/// `ψ(x) = a₁x^k + … + a_{k-t+1}x^t` with integer coefficients and no
/// constant term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPolynomial {
    coeffs: Vec<i128>,
    lowtrim: usize,
}

impl IntPolynomial {
    /// Builds from coefficients `[a₁, …, a_k]` (highest degree first, constant
    /// term omitted). Leading zeros are dropped; the zero polynomial is
    /// rejected.
    pub fn new(coeffs: Vec<i128>) -> Result<Self> {
        let start = coeffs.iter().position(|&c| c != 0).ok_or_else(|| {
            Error::Domain("the zero polynomial is not a valid ψ".into())
        })?;
        let coeffs = coeffs[start..].to_vec();
        let k = coeffs.len();
        let last_nonzero = coeffs.iter().rposition(|&c| c != 0).unwrap();
        // coeffs[i] multiplies x^{k-i}
        let lowtrim = k - last_nonzero;
        Ok(IntPolynomial { coeffs, lowtrim })
    }

    /// Monomial `c·x^e`.
    pub fn monomial(c: i128, e: usize) -> Result<Self> {
        if e == 0 {
            return Err(Error::Domain("ψ must have zero constant term".into()));
        }
        let mut v = vec![0i128; e];
        v[0] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    /// Degree `k`.
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Exponent `t` of the lowest nonzero monomial.
    pub fn lowtrim(&self) -> usize {
        self.lowtrim
    }

    /// Leading coefficient `a₁`.
    pub fn leading(&self) -> i128 {
        self.coeffs[0]
    }

    /// Lowest nonzero coefficient `a_{k-t+1}`.
    pub fn lowest_coeff(&self) -> i128 {
        self.coeffs[self.degree() - self.lowtrim]
    }

    /// Coefficient of `x^i` (zero outside `1..=k`).
    pub fn coeff_of_power(&self, i: usize) -> i128 {
        let k = self.degree();
        if i == 0 || i > k {
            0
        } else {
            self.coeffs[k - i]
        }
    }

    /// `gcd(|a₁|, …, |a_k|)`.
    pub fn content(&self) -> i128 {
        self.coeffs.iter().fold(0, |g, &c| gcd_i128(g, c))
    }

    pub fn to_polynomial(&self) -> Polynomial {
        let k = self.degree();
        let mut asc = vec![0i128; k + 1];
        for i in 1..=k {
            asc[i] = self.coeff_of_power(i);
        }
        Polynomial::from_ascending(asc)
    }

    pub fn eval(&self, x: i128) -> Result<i128> {
        let mut acc: i128 = 0;
        for &c in &self.coeffs {
            acc = acc
                .checked_add(c)
                .and_then(|v| v.checked_mul(x))
                .ok_or_else(|| overflow("ψ(x)"))?;
        }
        Ok(acc)
    }

    /// `ψ(x) mod q` in `0..q`, by Horner's rule on reduced residues.
    pub fn eval_mod(&self, x: i128, q: u64) -> u64 {
        if q == 1 {
            return 0;
        }
        let q128 = q as u128;
        let xr = x.rem_euclid(q as i128) as u128;
        let mut acc: u128 = 0;
        for &c in &self.coeffs {
            let cr = c.rem_euclid(q as i128) as u128;
            acc = ((acc + cr) % q128) * xr % q128;
        }
        acc as u64
    }

    /// Forward difference `ψ^Δ(x) = ψ(x+1) - ψ(x)`, degree `k - 1`.
    pub fn delta(&self) -> Result<Polynomial> {
        let p = self.to_polynomial();
        let shifted = p.shift(1)?;
        let asc: Result<Vec<i128>> = shifted
            .ascending()
            .iter()
            .zip(p.ascending().iter().chain(std::iter::repeat(&0)))
            .map(|(&a, &b)| a.checked_sub(b).ok_or_else(|| overflow("ψ^Δ")))
            .collect();
        Ok(Polynomial::from_ascending(asc?))
    }

    /// `ψ_q(x) = ψ(qx) / q^t`, whose coefficients are `a_{k-i+1} q^{i-t}`.
    pub fn rescale(&self, q: u64) -> Result<IntPolynomial> {
        if q == 0 {
            return Err(Error::Domain("rescale requires q ≥ 1".into()));
        }
        let k = self.degree();
        let t = self.lowtrim;
        let q = q as i128;
        let mut out = Vec::with_capacity(k);
        for (idx, &c) in self.coeffs.iter().enumerate() {
            let power = k - idx;
            if c == 0 || power < t {
                out.push(0);
                continue;
            }
            let scale = checked_pow(q, (power - t) as u32)?;
            out.push(c.checked_mul(scale).ok_or_else(|| overflow("rescaled coefficient"))?);
        }
        IntPolynomial::new(out)
    }

    /// Largest `M ≥ 0` with `ψ(M) ≤ n`, for `ψ` strictly increasing on the
    /// positive integers up to `M + 1`.
    pub fn inverse_max(&self, n: i128) -> Result<u64> {
        let first = self.eval(1)?;
        if first > n {
            return Ok(0);
        }
        // exponential search for an upper bracket; overflow means "above n"
        let above = |x: u64| -> bool {
            match self.eval(x as i128) {
                Ok(v) => v > n,
                Err(_) => true,
            }
        };
        let mut lo: u64 = 1;
        let mut hi: u64 = 2;
        while !above(hi) {
            lo = hi;
            hi = hi.checked_mul(2).ok_or_else(|| overflow("inverse_max bracket"))?;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if above(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let m = lo;
        let mut prev = first;
        for x in 1..=m {
            let next = match self.eval(x as i128 + 1) {
                Ok(v) => v,
                Err(_) if x == m => break,
                Err(e) => return Err(e),
            };
            if next <= prev {
                return Err(Error::Domain(format!(
                    "ψ = {self} is not strictly increasing at x = {x}"
                )));
            }
            prev = next;
        }
        Ok(m)
    }

    /// Parses the textual form used by configs and the CLI.
    pub fn parse(s: &str) -> Result<Self> {
        s.parse()
    }
}

pub(crate) fn checked_pow(base: i128, e: u32) -> Result<i128> {
    base.checked_pow(e).ok_or_else(|| overflow("power"))
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.degree();
        write_terms(f, self.coeffs.iter().enumerate().map(|(i, &c)| (c, k - i)), 'x')
    }
}

impl FromStr for IntPolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rp: RationalPolynomial = s.parse()?;
        let mut out = Vec::with_capacity(rp.coeffs.len());
        for c in &rp.coeffs {
            if c.den != 1 {
                return Err(Error::Parse(format!(
                    "coefficient {c} is not an integer; clear denominators first"
                )));
            }
            out.push(c.num);
        }
        IntPolynomial::new(out)
    }
}

/// Reduced fraction with positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub num: i128,
    pub den: i128,
}

impl Ratio {
    pub fn new(num: i128, den: i128) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        let g = gcd_i128(num, den).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Ok(Ratio { num: sign * num / g, den: sign * den / g })
    }

    pub fn integer(n: i128) -> Self {
        Ratio { num: n, den: 1 }
    }

    fn mul(self, o: Ratio) -> Result<Ratio> {
        let num = self.num.checked_mul(o.num).ok_or_else(|| overflow("rational product"))?;
        let den = self.den.checked_mul(o.den).ok_or_else(|| overflow("rational product"))?;
        Ratio::new(num, den)
    }

    fn add(self, o: Ratio) -> Result<Ratio> {
        let l = lcm_i128(self.den, o.den)?;
        let a = self.num.checked_mul(l / self.den).ok_or_else(|| overflow("rational sum"))?;
        let b = o.num.checked_mul(l / o.den).ok_or_else(|| overflow("rational sum"))?;
        Ratio::new(a.checked_add(b).ok_or_else(|| overflow("rational sum"))?, l)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_matches(|c| c == '(' || c == ')');
        let bad = || Error::Parse(format!("bad rational '{s}'"));
        match s.split_once('/') {
            Some((a, b)) => {
                Ratio::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)
            }
            None => Ok(Ratio::integer(s.parse().map_err(|_| bad())?)),
        }
    }
}

/// Polynomial with rational coefficients and zero constant term,
/// highest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPolynomial {
    coeffs: Vec<Ratio>,
}

impl RationalPolynomial {
    pub fn new(coeffs: Vec<Ratio>) -> Result<Self> {
        let start = coeffs
            .iter()
            .position(|c| c.num != 0)
            .ok_or_else(|| Error::Domain("the zero polynomial is not a valid ψ".into()))?;
        Ok(RationalPolynomial { coeffs: coeffs[start..].to_vec() })
    }

    pub fn coeffs(&self) -> &[Ratio] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Exact value at an integer point.
    pub fn eval(&self, x: i128) -> Result<Ratio> {
        let mut acc = Ratio::integer(0);
        for &c in &self.coeffs {
            acc = acc.add(c)?.mul(Ratio::integer(x))?;
        }
        Ok(acc)
    }

    /// Returns `(W, ψ*)` with `W` the lcm of the denominators and
    /// `ψ*(x) = ψ(Wx)`.
    pub fn clear_denominators(&self) -> Result<(u64, IntPolynomial)> {
        let w = self.coeffs.iter().try_fold(1i128, |l, c| lcm_i128(l, c.den))?;
        let k = self.degree();
        let mut out = Vec::with_capacity(k);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let power = (k - idx) as u32;
            let scaled = Ratio::integer(checked_pow(w, power)?).mul(*c)?;
            debug_assert_eq!(scaled.den, 1);
            out.push(scaled.num);
        }
        let w = u64::try_from(w).map_err(|_| overflow("denominator lcm"))?;
        Ok((w, IntPolynomial::new(out)?))
    }
}

impl fmt::Display for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.degree();
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.num == 0 {
                continue;
            }
            let e = k - i;
            let sep = match (first, c.num < 0) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            first = false;
            let mag = Ratio { num: c.num.abs(), den: c.den };
            let mono = if e == 1 { "x".to_string() } else { format!("x^{e}") };
            if mag.num == 1 && mag.den == 1 {
                write!(f, "{sep}{mono}")?;
            } else if mag.den == 1 {
                write!(f, "{sep}{}{mono}", mag.num)?;
            } else {
                write!(f, "{sep}({mag}){mono}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for RationalPolynomial {
    type Err = Error;

    /// Accepts `"2x^3 + x"`-style text (any single-letter variable, optional
    /// `*`, rational coefficients as `p/q`, `(p/q)x^2` or `x^2/q`) or a
    /// coefficient list `["a1", …, "ak"]`, highest degree first.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('[') {
            return parse_list(s);
        }
        parse_terms(s)
    }
}

fn parse_list(s: &str) -> Result<RationalPolynomial> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("unterminated coefficient list '{s}'")))?;
    let coeffs: Result<Vec<Ratio>> = inner
        .split(',')
        .map(|item| item.trim().trim_matches('"').parse::<Ratio>())
        .collect();
    RationalPolynomial::new(coeffs?)
}

fn parse_terms(s: &str) -> Result<RationalPolynomial> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut negative = false;
    let mut depth = 0i32;
    for (i, ch) in compact.chars().enumerate() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            '+' | '-' if depth == 0 && !cur.ends_with('^') => {
                if i > 0 {
                    if cur.is_empty() {
                        return Err(Error::Parse(format!("dangling sign in '{s}'")));
                    }
                    terms.push((negative, std::mem::take(&mut cur)));
                }
                negative = ch == '-';
            }
            _ => cur.push(ch),
        }
    }
    if cur.is_empty() {
        return Err(Error::Parse(format!("dangling sign in '{s}'")));
    }
    terms.push((negative, cur));

    let mut var: Option<char> = None;
    let mut by_power: Vec<(usize, Ratio)> = Vec::new();
    for (neg, t) in terms {
        let (mut c, e) = parse_term(&t, &mut var)?;
        if neg {
            c.num = -c.num;
        }
        by_power.push((e, c));
    }
    let k = by_power.iter().map(|&(e, _)| e).max().unwrap_or(0);
    let mut coeffs = vec![Ratio::integer(0); k + 1];
    for (e, c) in by_power {
        coeffs[k - e] = coeffs[k - e].add(c)?;
    }
    let constant = coeffs.pop().unwrap();
    if constant.num != 0 {
        return Err(Error::Domain(format!("ψ must have zero constant term, got {constant}")));
    }
    RationalPolynomial::new(coeffs)
}

fn parse_term(t: &str, var: &mut Option<char>) -> Result<(Ratio, usize)> {
    let bad = || Error::Parse(format!("cannot parse term '{t}'"));
    let Some(pos) = t.find(|c: char| c.is_ascii_alphabetic()) else {
        return Ok((t.parse()?, 0));
    };
    let v = t[pos..].chars().next().unwrap();
    match var {
        Some(prev) if *prev != v => {
            return Err(Error::Parse(format!("mixed variables '{prev}' and '{v}'")));
        }
        _ => *var = Some(v),
    }
    let prefix = t[..pos].trim_end_matches('*');
    let mut coeff = if prefix.is_empty() { Ratio::integer(1) } else { prefix.parse()? };
    let mut rest = &t[pos + 1..];
    let mut exp = 1usize;
    if let Some(r) = rest.strip_prefix('^') {
        let end = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
        exp = r[..end].parse().map_err(|_| bad())?;
        rest = &r[end..];
    }
    if let Some(r) = rest.strip_prefix('/') {
        let d: i128 = r.parse().map_err(|_| bad())?;
        coeff = coeff.mul(Ratio::new(1, d)?)?;
    } else if let Some(r) = rest.strip_prefix('*') {
        coeff = coeff.mul(r.parse()?)?;
    } else if !rest.is_empty() {
        return Err(bad());
    }
    if exp == 0 {
        return Ok((coeff, 0));
    }
    Ok((coeff, exp))
}
