//! Exact arithmetic kernel.
//!
//! Rationals are `num`'s `BigRational`, which normalizes on construction, so
//! structural equality is value equality. Bernoulli numbers follow the
//! convention `B_1 = -1/2`, the one under which the Hurwitz zeta value at
//! zero is `1/2 - x`.

use std::sync::{OnceLock, RwLock};

use num::bigint::{BigInt, BigUint};
use num::{BigRational, Integer, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("valuation of zero is undefined")]
    ZeroValuation,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("cannot parse {0:?} as an exact rational")]
    Parse(String),
    #[error("modulus must be at least 2, got {0}")]
    BadModulus(String),
    #[error("{value} is not invertible modulo {modulus}")]
    NotInvertible { value: String, modulus: String },
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p/q` or `p` (optional leading sign, base 10, no decimals).
pub fn parse_rational(text: &str) -> Result<Rational, ArithError> {
    let bad = || ArithError::Parse(text.to_string());
    let t = text.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num: BigInt = n.parse().map_err(|_| bad())?;
    let den: BigInt = d.parse().map_err(|_| bad())?;
    if den.is_zero() || d.starts_with('-') || d.starts_with('+') {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Renders as `p/q`, or `p` when the denominator is one.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// An element of `Z/modulus`, always reduced.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Residue {
    value: BigUint,
    modulus: BigUint,
}

impl Residue {
    pub fn new(value: &BigInt, modulus: &BigUint) -> Result<Self, ArithError> {
        if *modulus < BigUint::from(2u8) {
            return Err(ArithError::BadModulus(modulus.to_string()));
        }
        let m = BigInt::from(modulus.clone());
        let v = value.mod_floor(&m).to_biguint().expect("mod_floor is nonnegative");
        Ok(Residue { value: v, modulus: modulus.clone() })
    }

    /// Reduces `p/q` when `q` is a unit modulo `modulus`.
    pub fn from_rational(q: &Rational, modulus: &BigUint) -> Result<Self, ArithError> {
        let m = BigInt::from(modulus.clone());
        let den = Residue::new(q.denom(), modulus)?;
        let inv = den.inverse().map_err(|_| ArithError::NotInvertible {
            value: q.denom().to_string(),
            modulus: m.to_string(),
        })?;
        Ok(Residue::new(q.numer(), modulus)?.mul(&inv))
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn add(&self, other: &Residue) -> Residue {
        assert_eq!(self.modulus, other.modulus, "residues from different rings");
        Residue { value: (&self.value + &other.value) % &self.modulus, modulus: self.modulus.clone() }
    }

    pub fn neg(&self) -> Residue {
        let v = (&self.modulus - &self.value) % &self.modulus;
        Residue { value: v, modulus: self.modulus.clone() }
    }

    pub fn mul(&self, other: &Residue) -> Residue {
        assert_eq!(self.modulus, other.modulus, "residues from different rings");
        Residue { value: (&self.value * &other.value) % &self.modulus, modulus: self.modulus.clone() }
    }

    pub fn pow(&self, e: u64) -> Residue {
        Residue { value: self.value.modpow(&BigUint::from(e), &self.modulus), modulus: self.modulus.clone() }
    }

    pub fn inverse(&self) -> Result<Residue, ArithError> {
        let a = BigInt::from(self.value.clone());
        let m = BigInt::from(self.modulus.clone());
        let g = a.extended_gcd(&m);
        if !g.gcd.is_one() {
            return Err(ArithError::NotInvertible { value: a.to_string(), modulus: m.to_string() });
        }
        Residue::new(&g.x, &self.modulus)
    }
}

fn bernoulli_cache() -> &'static RwLock<Vec<Rational>> {
    static CACHE: OnceLock<RwLock<Vec<Rational>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(vec![Rational::one()]))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `B_n` with `B_1 = -1/2`, from `sum_{j<=n} C(n+1, j) B_j = 0`.
pub fn bernoulli_number(n: usize) -> Rational {
    if let Some(b) = bernoulli_cache().read().expect("bernoulli cache poisoned").get(n) {
        return b.clone();
    }
    let mut cache = bernoulli_cache().write().expect("bernoulli cache poisoned");
    while cache.len() <= n {
        let m = cache.len() as u64;
        let mut acc = Rational::zero();
        for (j, bj) in cache.iter().enumerate() {
            acc += Rational::from_integer(binomial(m + 1, j as u64)) * bj;
        }
        cache.push(-acc / Rational::from_integer(BigInt::from(m + 1)));
    }
    cache[n].clone()
}

/// `B_n(x) = sum_k C(n,k) B_k x^(n-k)`, evaluated by Horner in `x`.
pub fn bernoulli_polynomial(n: usize, x: &Rational) -> Rational {
    let mut acc = Rational::zero();
    for k in 0..=n {
        acc = acc * x + Rational::from_integer(binomial(n as u64, k as u64)) * bernoulli_number(k);
    }
    acc
}

/// Exponent of the prime `l` in `q`; negative when `l` divides the denominator.
pub fn l_valuation(q: &Rational, l: u64) -> Result<i64, ArithError> {
    if q.is_zero() {
        return Err(ArithError::ZeroValuation);
    }
    if !is_prime(l) {
        return Err(ArithError::NotPrime(l));
    }
    let lb = BigInt::from(l);
    let count = |x: &BigInt| {
        let mut x = x.abs();
        let mut v = 0i64;
        while (&x % &lb).is_zero() {
            x /= &lb;
            v += 1;
        }
        v
    };
    Ok(count(q.numer()) - count(q.denom()))
}

/// Residues `1 <= a <= f` prime to `f`; `[1]` for `f = 1`.
pub fn unit_group(f: u64) -> Vec<u64> {
    if f <= 1 {
        return vec![1];
    }
    (1..=f).filter(|&a| gcd(a, f) == 1).collect()
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime divisors in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    prime_factors(n).into_iter().fold(n, |acc, p| acc / p * (p - 1))
}

/// Exponent of `l` in a nonzero integer.
pub fn valuation_u64(mut n: u64, l: u64) -> u32 {
    assert!(n != 0 && l >= 2);
    let mut v = 0;
    while n % l == 0 {
        n /= l;
        v += 1;
    }
    v
}

pub fn pow_mod(base: u64, mut e: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc as u64
}

pub fn inv_mod(a: u64, modulus: u64) -> Option<u64> {
    if modulus == 1 {
        return Some(0);
    }
    let g = (a as i128).extended_gcd(&(modulus as i128));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(modulus as i128) as u64)
}

/// Order of `a` in `(Z/n)^x`; `a` must be a unit.
pub fn multiplicative_order(a: u64, n: u64) -> u64 {
    if n == 1 {
        return 1;
    }
    assert_eq!(gcd(a % n, n), 1, "{a} is not a unit mod {n}");
    let mut x = a % n;
    let mut k = 1;
    while x != 1 {
        x = (x as u128 * a as u128 % n as u128) as u64;
        k += 1;
    }
    k
}

/// `a^e` as a rational, negative exponents allowed.
pub fn rational_pow(a: &Rational, e: i64) -> Rational {
    if e >= 0 {
        num::pow::pow(a.clone(), e as usize)
    } else {
        num::pow::pow(a.recip(), (-e) as usize)
    }
}

/// Reduces `p/q` modulo `modulus` (which fits in `u64`) when `q` is a unit.
pub fn rational_mod(q: &Rational, modulus: u64) -> Option<u64> {
    if modulus == 1 {
        return Some(0);
    }
    let m = BigInt::from(modulus);
    let num = q.numer().mod_floor(&m).to_u64().expect("reduced below modulus");
    let den = q.denom().mod_floor(&m).to_u64().expect("reduced below modulus");
    let inv = inv_mod(den, modulus)?;
    Some((num as u128 * inv as u128 % modulus as u128) as u64)
}

pub fn is_integral(q: &Rational) -> bool {
    q.denom().is_one()
}
