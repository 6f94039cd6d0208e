//! Group rings `Q[G]` and `(Z/N)[G]` over a finite abelian group.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num::{BigInt, Zero};

use crate::cyclotomic_galois::{GaloisGroup, GroupHom};
use crate::exact_arith::{format_rational, inv_mod, prime_factors, rational_mod, Rational};

/// Element of `Q[G]`, stored densely by group index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupRingElement {
    group: Arc<GaloisGroup>,
    coeffs: Vec<Rational>,
}

impl GroupRingElement {
    pub fn zero(group: Arc<GaloisGroup>) -> Self {
        let coeffs = vec![Rational::zero(); group.order()];
        GroupRingElement { group, coeffs }
    }

    pub fn one(group: Arc<GaloisGroup>) -> Self {
        let id = group.identity();
        Self::basis(group, id, Rational::from_integer(1.into()))
    }

    /// `c * sigma`.
    pub fn basis(group: Arc<GaloisGroup>, sigma: usize, c: Rational) -> Self {
        let mut out = Self::zero(group);
        out.coeffs[sigma] = c;
        out
    }

    pub fn from_coefficients(group: Arc<GaloisGroup>, coeffs: Vec<Rational>) -> Self {
        assert_eq!(coeffs.len(), group.order(), "one coefficient per group element");
        GroupRingElement { group, coeffs }
    }

    pub fn from_integers(group: Arc<GaloisGroup>, coeffs: &[i64]) -> Self {
        Self::from_coefficients(group, coeffs.iter().map(|&c| Rational::from_integer(c.into())).collect())
    }

    pub fn group(&self) -> &Arc<GaloisGroup> {
        &self.group
    }

    pub fn coefficient(&self, sigma: usize) -> &Rational {
        &self.coeffs[sigma]
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn add_term(&mut self, sigma: usize, c: &Rational) {
        self.coeffs[sigma] += c;
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let coeffs = self.coeffs.iter().map(|x| x * c).collect();
        GroupRingElement { group: self.group.clone(), coeffs }
    }

    /// Sum of the coefficients.
    pub fn augmentation(&self) -> Rational {
        self.coeffs.iter().sum()
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Pushforward along a group homomorphism.
    pub fn restrict(&self, hom: &GroupHom) -> Self {
        assert_eq!(**hom.source(), *self.group, "restriction from a different group");
        let mut out = Self::zero(hom.target().clone());
        for (sigma, c) in self.coeffs.iter().enumerate() {
            out.coeffs[hom.apply(sigma)] += c;
        }
        out
    }

    /// Image in `(Z/modulus)[G]`; `None` if a denominator is not a unit.
    pub fn reduce_mod(&self, modulus: u64) -> Option<ModGroupRingElement> {
        let coeffs = self.coeffs.iter().map(|c| rational_mod(c, modulus)).collect::<Option<Vec<_>>>()?;
        Some(ModGroupRingElement { group: self.group.clone(), modulus, coeffs })
    }

    /// `sigma -> sigma^{-1}` extended linearly.
    pub fn involution(&self) -> Self {
        let mut out = Self::zero(self.group.clone());
        for (sigma, c) in self.coeffs.iter().enumerate() {
            out.coeffs[self.group.inv(sigma)] = c.clone();
        }
        out
    }
}

fn same_group(a: &GaloisGroup, b: &GaloisGroup) {
    assert!(a == b, "group ring elements over different groups");
}

impl Add for &GroupRingElement {
    type Output = GroupRingElement;
    fn add(self, rhs: &GroupRingElement) -> GroupRingElement {
        same_group(&self.group, &rhs.group);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        GroupRingElement { group: self.group.clone(), coeffs }
    }
}

impl Sub for &GroupRingElement {
    type Output = GroupRingElement;
    fn sub(self, rhs: &GroupRingElement) -> GroupRingElement {
        same_group(&self.group, &rhs.group);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        GroupRingElement { group: self.group.clone(), coeffs }
    }
}

impl Neg for &GroupRingElement {
    type Output = GroupRingElement;
    fn neg(self) -> GroupRingElement {
        let coeffs = self.coeffs.iter().map(|a| -a).collect();
        GroupRingElement { group: self.group.clone(), coeffs }
    }
}

impl Mul for &GroupRingElement {
    type Output = GroupRingElement;
    fn mul(self, rhs: &GroupRingElement) -> GroupRingElement {
        same_group(&self.group, &rhs.group);
        let mut out = GroupRingElement::zero(self.group.clone());
        for (a, ca) in self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            for (b, cb) in rhs.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
                out.coeffs[self.group.mul(a, b)] += ca * cb;
            }
        }
        out
    }
}

/// Writes `σ1: 2, σ3: 2`, one entry per group element in index order.
impl fmt::Display for GroupRingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(s, c)| format!("{}: {}", self.group.label(s), format_rational(c)))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Element of `(Z/N)[G]`, coefficients in `[0, N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModGroupRingElement {
    group: Arc<GaloisGroup>,
    modulus: u64,
    coeffs: Vec<u64>,
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

impl ModGroupRingElement {
    pub fn zero(group: Arc<GaloisGroup>, modulus: u64) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        let coeffs = vec![0; group.order()];
        ModGroupRingElement { group, modulus, coeffs }
    }

    pub fn one(group: Arc<GaloisGroup>, modulus: u64) -> Self {
        let id = group.identity();
        Self::basis(group, modulus, id, 1)
    }

    pub fn basis(group: Arc<GaloisGroup>, modulus: u64, sigma: usize, c: u64) -> Self {
        let mut out = Self::zero(group, modulus);
        out.coeffs[sigma] = c % modulus;
        out
    }

    pub fn from_coefficients(group: Arc<GaloisGroup>, modulus: u64, coeffs: Vec<u64>) -> Self {
        assert_eq!(coeffs.len(), group.order(), "one coefficient per group element");
        let coeffs = coeffs.into_iter().map(|c| c % modulus).collect();
        ModGroupRingElement { group, modulus, coeffs }
    }

    /// Reduction of signed integer coefficients.
    pub fn from_signed(group: Arc<GaloisGroup>, modulus: u64, coeffs: &[i64]) -> Self {
        let m = modulus as i64;
        let coeffs = coeffs.iter().map(|&c| c.rem_euclid(m) as u64).collect();
        Self::from_coefficients(group, modulus, coeffs)
    }

    pub fn group(&self) -> &Arc<GaloisGroup> {
        &self.group
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coefficient(&self, sigma: usize) -> u64 {
        self.coeffs[sigma]
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one(self.group.clone(), self.modulus)
    }

    pub fn scale(&self, c: u64) -> Self {
        let coeffs = self.coeffs.iter().map(|&x| mulmod(x, c % self.modulus, self.modulus)).collect();
        ModGroupRingElement { group: self.group.clone(), modulus: self.modulus, coeffs }
    }

    /// Image under reduction to a divisor of the modulus.
    pub fn reduce(&self, modulus: u64) -> Self {
        assert_eq!(self.modulus % modulus, 0, "can only reduce to a divisor");
        Self::from_coefficients(self.group.clone(), modulus, self.coeffs.clone())
    }

    pub fn restrict(&self, hom: &GroupHom) -> Self {
        assert_eq!(**hom.source(), *self.group, "restriction from a different group");
        let mut out = Self::zero(hom.target().clone(), self.modulus);
        for (sigma, &c) in self.coeffs.iter().enumerate() {
            let t = hom.apply(sigma);
            out.coeffs[t] = (out.coeffs[t] + c) % self.modulus;
        }
        out
    }

    /// Some preimage under `hom: H -> G`; acts on `H`-modules on which
    /// `ker hom` is trivial exactly as `self` would.
    pub fn inflate(&self, hom: &GroupHom) -> Self {
        assert_eq!(**hom.target(), *self.group, "inflation to a different group");
        let mut section = vec![None; self.group.order()];
        for h in 0..hom.source().order() {
            section[hom.apply(h)].get_or_insert(h);
        }
        let mut out = Self::zero(hom.source().clone(), self.modulus);
        for (sigma, &c) in self.coeffs.iter().enumerate() {
            let h = section[sigma].expect("inflation needs a surjective homomorphism");
            out.coeffs[h] = c;
        }
        out
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.group.clone(), self.modulus);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Inverse in `(Z/l^K)[G]`: solve modulo `l`, then lift by Newton steps.
    pub fn inverse(&self) -> Option<Self> {
        if self.modulus == 1 {
            return Some(self.clone());
        }
        let primes = prime_factors(self.modulus);
        let [l] = primes[..] else { return None };
        let g = self.group.order();
        // Column s of the matrix is self * s, reduced mod l.
        let mut rows: Vec<Vec<u64>> = vec![vec![0; g + 1]; g];
        for s in 0..g {
            for (a, &c) in self.coeffs.iter().enumerate() {
                rows[self.group.mul(a, s)][s] = (rows[self.group.mul(a, s)][s] + c) % l;
            }
        }
        rows[self.group.identity()][g] = 1;
        let solution = solve_mod_prime(rows, l)?;
        let mut inv = Self::from_coefficients(self.group.clone(), self.modulus, solution);
        let two = Self::one(self.group.clone(), self.modulus).scale(2);
        let mut precision = l;
        while precision < self.modulus {
            inv = &inv * &(&two - &(self * &inv));
            precision = precision.saturating_mul(precision);
        }
        (&inv * self).is_one().then_some(inv)
    }

    /// Signed representatives in `(-N/2, N/2]`.
    pub fn to_rational(&self) -> GroupRingElement {
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let v = if c > self.modulus / 2 { c as i128 - self.modulus as i128 } else { c as i128 };
                Rational::from_integer(BigInt::from(v))
            })
            .collect();
        GroupRingElement::from_coefficients(self.group.clone(), coeffs)
    }
}

/// Gaussian elimination over `F_l` on an augmented square system.
fn solve_mod_prime(mut rows: Vec<Vec<u64>>, l: u64) -> Option<Vec<u64>> {
    let n = rows.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| rows[r][col] % l != 0)?;
        rows.swap(col, pivot);
        let inv = inv_mod(rows[col][col], l)?;
        for x in rows[col].iter_mut() {
            *x = mulmod(*x, inv, l);
        }
        for r in 0..n {
            if r != col && rows[r][col] != 0 {
                let factor = rows[r][col];
                for c in 0..=n {
                    rows[r][c] = (rows[r][c] + l - mulmod(factor, rows[col][c], l)) % l;
                }
            }
        }
    }
    Some(rows.into_iter().map(|r| r[n]).collect())
}

fn same_mod(a: &ModGroupRingElement, b: &ModGroupRingElement) {
    assert!(a.modulus == b.modulus && a.group == b.group, "group ring elements over different rings");
}

impl Add for &ModGroupRingElement {
    type Output = ModGroupRingElement;
    fn add(self, rhs: &ModGroupRingElement) -> ModGroupRingElement {
        same_mod(self, rhs);
        let m = self.modulus;
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| (a + b) % m).collect();
        ModGroupRingElement { group: self.group.clone(), modulus: m, coeffs }
    }
}

impl Sub for &ModGroupRingElement {
    type Output = ModGroupRingElement;
    fn sub(self, rhs: &ModGroupRingElement) -> ModGroupRingElement {
        same_mod(self, rhs);
        let m = self.modulus;
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| (a + m - b) % m).collect();
        ModGroupRingElement { group: self.group.clone(), modulus: m, coeffs }
    }
}

impl Neg for &ModGroupRingElement {
    type Output = ModGroupRingElement;
    fn neg(self) -> ModGroupRingElement {
        let m = self.modulus;
        let coeffs = self.coeffs.iter().map(|a| (m - a) % m).collect();
        ModGroupRingElement { group: self.group.clone(), modulus: m, coeffs }
    }
}

impl Mul for &ModGroupRingElement {
    type Output = ModGroupRingElement;
    fn mul(self, rhs: &ModGroupRingElement) -> ModGroupRingElement {
        same_mod(self, rhs);
        let m = self.modulus;
        let mut coeffs = vec![0u64; self.coeffs.len()];
        for (a, &ca) in self.coeffs.iter().enumerate().filter(|(_, &c)| c != 0) {
            for (b, &cb) in rhs.coeffs.iter().enumerate().filter(|(_, &c)| c != 0) {
                let t = self.group.mul(a, b);
                coeffs[t] = (coeffs[t] + mulmod(ca, cb, m)) % m;
            }
        }
        ModGroupRingElement { group: self.group.clone(), modulus: m, coeffs }
    }
}

impl fmt::Display for ModGroupRingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.coeffs.iter().enumerate().map(|(s, c)| format!("{}: {}", self.group.label(s), c)).collect();
        write!(f, "{} (mod {})", parts.join(", "), self.modulus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::rat;
    use proptest::prelude::*;

    fn z(n: usize) -> Arc<GaloisGroup> {
        Arc::new(GaloisGroup::cyclic_product(&[n]))
    }

    #[test]
    fn multiplication_in_cyclic_group() {
        let g = z(2);
        let a = GroupRingElement::from_integers(g.clone(), &[1, -3]);
        let b = GroupRingElement::from_integers(g.clone(), &[2, 2]);
        assert_eq!(&a * &b, GroupRingElement::from_integers(g, &[-4, -4]));
    }

    #[test]
    fn mod_inverse_examples() {
        let g = z(2);
        let x = ModGroupRingElement::from_signed(g.clone(), 9, &[1, -3]);
        assert_eq!(x.inverse().unwrap(), ModGroupRingElement::from_signed(g.clone(), 9, &[1, 3]));
        let not_unit = ModGroupRingElement::from_signed(g, 9, &[1, 1]);
        assert!(not_unit.inverse().is_none());
    }

    #[test]
    fn display_lists_every_element() {
        let g = z(3);
        let x = GroupRingElement::from_coefficients(g, vec![rat(1, 2), rat(0, 1), rat(-3, 1)]);
        assert_eq!(x.to_string(), "g(0): 1/2, g(1): 0, g(2): -3");
    }

    fn arb_elem(order: usize) -> impl Strategy<Value = Vec<i64>> {
        proptest::collection::vec(-20i64..20, order)
    }

    proptest! {
        #[test]
        fn restriction_is_a_ring_homomorphism(x in arb_elem(6), y in arb_elem(6)) {
            let big = Arc::new(GaloisGroup::cyclic_product(&[6]));
            let small = Arc::new(GaloisGroup::cyclic_product(&[3]));
            let hom = GroupHom::new(big.clone(), small, (0..6).map(|i| i % 3).collect()).unwrap();
            let a = GroupRingElement::from_integers(big.clone(), &x);
            let b = GroupRingElement::from_integers(big, &y);
            prop_assert_eq!((&a * &b).restrict(&hom), &a.restrict(&hom) * &b.restrict(&hom));
            prop_assert_eq!((&a + &b).restrict(&hom), &a.restrict(&hom) + &b.restrict(&hom));
        }

        #[test]
        fn inverses_multiply_to_one(x in arb_elem(4), k in 1u32..5) {
            let g = Arc::new(GaloisGroup::cyclic_product(&[2, 2]));
            let u = ModGroupRingElement::from_signed(g, 3u64.pow(k), &x);
            if let Some(v) = u.inverse() {
                prop_assert!((&u * &v).is_one());
            }
        }

        #[test]
        fn one_minus_nilpotent_is_a_unit(x in arb_elem(5), k in 1u32..4) {
            let g = Arc::new(GaloisGroup::cyclic_product(&[5]));
            let modulus = 5u64.pow(k);
            let y = ModGroupRingElement::from_signed(g.clone(), modulus, &x).scale(5);
            let u = &ModGroupRingElement::one(g, modulus) - &y;
            prop_assert!(u.inverse().is_some());
        }
    }
}
