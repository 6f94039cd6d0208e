//! Exact arithmetic in `Q(zeta_d) = Q[x] / Phi_d(x)`.

use num::{BigInt, One, Zero};

use crate::exact_arith::{euler_phi, Rational};

/// Integer coefficients of `Phi_d`, constant term first.
pub fn cyclotomic_polynomial(d: u64) -> Vec<BigInt> {
    assert!(d >= 1, "Phi_0 is undefined");
    // x^d - 1 divided by Phi_e for every proper divisor e.
    let mut poly = vec![BigInt::zero(); d as usize + 1];
    poly[0] = -BigInt::one();
    poly[d as usize] = BigInt::one();
    for e in (1..d).filter(|e| d % e == 0) {
        poly = divide_monic(&poly, &cyclotomic_polynomial(e));
    }
    poly
}

/// Exact quotient by a monic divisor.
fn divide_monic(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let mut quot = vec![BigInt::zero(); num.len() - dd];
    for i in (0..quot.len()).rev() {
        let c = rem[i + dd].clone();
        if c.is_zero() {
            continue;
        }
        for (j, dj) in den.iter().enumerate() {
            rem[i + j] -= &c * dj;
        }
        quot[i] = c;
    }
    debug_assert!(rem.iter().all(Zero::is_zero), "divisor does not divide");
    quot
}

/// The field `Q(zeta_d)` with elements as coefficient vectors of length `phi(d)`.
#[derive(Debug, Clone)]
pub struct CyclotomicField {
    order: u64,
    minimal_polynomial: Vec<BigInt>,
}

pub type CyclotomicNumber = Vec<Rational>;

impl CyclotomicField {
    pub fn new(order: u64) -> Self {
        CyclotomicField { order, minimal_polynomial: cyclotomic_polynomial(order) }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn degree(&self) -> usize {
        euler_phi(self.order) as usize
    }

    pub fn zero(&self) -> CyclotomicNumber {
        vec![Rational::zero(); self.degree()]
    }

    pub fn from_rational(&self, q: &Rational) -> CyclotomicNumber {
        let mut out = self.zero();
        out[0] = q.clone();
        out
    }

    /// `zeta^k` for any integer `k`.
    pub fn root_power(&self, k: i64) -> CyclotomicNumber {
        let e = k.rem_euclid(self.order as i64) as usize;
        let mut poly = vec![Rational::zero(); e + 1];
        poly[e] = Rational::one();
        self.reduce(poly)
    }

    fn reduce(&self, mut poly: Vec<Rational>) -> CyclotomicNumber {
        let deg = self.degree();
        for i in (deg..poly.len()).rev() {
            let c = std::mem::take(&mut poly[i]);
            if c.is_zero() {
                continue;
            }
            for (j, pj) in self.minimal_polynomial.iter().enumerate().take(deg) {
                poly[i - deg + j] -= &c * Rational::from_integer(pj.clone());
            }
        }
        poly.resize(deg, Rational::zero());
        poly
    }

    pub fn add(&self, a: &CyclotomicNumber, b: &CyclotomicNumber) -> CyclotomicNumber {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    pub fn sub(&self, a: &CyclotomicNumber, b: &CyclotomicNumber) -> CyclotomicNumber {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    pub fn scale(&self, a: &CyclotomicNumber, c: &Rational) -> CyclotomicNumber {
        a.iter().map(|x| x * c).collect()
    }

    pub fn mul(&self, a: &CyclotomicNumber, b: &CyclotomicNumber) -> CyclotomicNumber {
        let mut prod = vec![Rational::zero(); a.len() + b.len()];
        for (i, x) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, y) in b.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        self.reduce(prod)
    }
}
