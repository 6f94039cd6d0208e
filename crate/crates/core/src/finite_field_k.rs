//! Quillen's odd K-groups of finite fields in additive notation: `K_{2m-1}(F_q)`
//! is `Z/(q^m - 1)`, Frobenius multiplies by `q^m`, inclusion multiplies by
//! `(q^{fm} - 1)/(q^m - 1)` and the norm reduces mod `q^m - 1`. Sums of these
//! groups over the primes above `v` become induced Galois modules.

use std::sync::Arc;

use thiserror::Error;

use crate::checks::{Check, Report};
use crate::cyclotomic_galois::GaloisGroup;
use crate::exact_arith::{gcd, is_prime, pow_mod, prime_factors, valuation_u64};
use crate::module_splitting::{FiniteGModule, ModuleError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldKError {
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("degree index must be at least 1")]
    ZeroDegree,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("group order q^m - 1 overflows for q = {q}, m = {m}")]
    Overflow { q: u64, m: u64 },
    #[error("{l} divides the residue characteristic of {q}")]
    PrimeDividesQ { l: u64, q: u64 },
    #[error("Frobenius has order {actual}, residue degree {expected} was claimed")]
    FrobeniusOrder { expected: usize, actual: usize },
    #[error("twisting needs a coefficient module with a cyclotomic character")]
    NoCoefficients,
    #[error("cyclotomic character is not a homomorphism into the units: {0}")]
    BadCharacter(String),
    #[error(transparent)]
    Module(#[from] ModuleError),
}

type Result<T> = std::result::Result<T, FieldKError>;

fn check_prime_power(q: u64) -> Result<()> {
    if q >= 2 && prime_factors(q).len() == 1 {
        Ok(())
    } else {
        Err(FieldKError::NotPrimePower(q))
    }
}

fn power(q: u64, e: u64) -> Result<u64> {
    u32::try_from(e).ok().and_then(|e| q.checked_pow(e)).ok_or(FieldKError::Overflow { q, m: e })
}

/// `|K_{2m-1}(F_q)| = q^m - 1`.
pub fn k_order(q: u64, m: u64) -> Result<u64> {
    check_prime_power(q)?;
    if m == 0 {
        return Err(FieldKError::ZeroDegree);
    }
    Ok(power(q, m)? - 1)
}

/// `K_{2m-1}(F_q)` as `Z/(q^m - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicKGroup {
    q: u64,
    m: u64,
    order: u64,
}

impl CyclicKGroup {
    pub fn new(q: u64, m: u64) -> Result<Self> {
        Ok(CyclicKGroup { q, m, order: k_order(q, m)? })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// Frobenius of a subfield `F_base`: multiplication by `base^m`.
    pub fn frobenius(&self, base: u64, x: u64) -> u64 {
        ((x % self.order) as u128 * pow_mod(base, self.m, self.order) as u128 % self.order as u128) as u64
    }
}

/// `Fr_q` on `K_{2m-1}(F_{q^f})`: `x ↦ q^m·x mod (q^{fm} - 1)`.
pub fn frobenius_action(q: u64, f: u64, m: u64, x: u64) -> Result<u64> {
    let big = k_order(q, f * m)?;
    Ok(((x % big) as u128 * power(q, m)? as u128 % big as u128) as u64)
}

/// `K_{2m-1}(F_q) → K_{2m-1}(F_{q^f})`: `y ↦ y·(q^{fm} - 1)/(q^m - 1)`.
pub fn inclusion_map(q: u64, f: u64, m: u64, y: u64) -> Result<u64> {
    let small = k_order(q, m)?;
    let big = k_order(q, f * m)?;
    Ok(y % small * (big / small))
}

/// Transfer `K_{2m-1}(F_{q^f}) → K_{2m-1}(F_q)`: reduction mod `q^m - 1`.
pub fn norm_map(q: u64, f: u64, m: u64, x: u64) -> Result<u64> {
    let small = k_order(q, m)?;
    let big = k_order(q, f * m)?;
    Ok(x % big % small)
}

/// Dense bitset over `0..len`.
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: u64) -> Self {
        Bits(vec![0; len.div_ceil(64) as usize])
    }

    fn set(&mut self, i: u64) -> bool {
        let (w, b) = ((i / 64) as usize, i % 64);
        let was = self.0[w] >> b & 1 == 1;
        self.0[w] |= 1 << b;
        was
    }

    fn get(&self, i: u64) -> bool {
        self.0[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    fn count(&self) -> u64 {
        self.0.iter().map(|w| u64::from(w.count_ones())).sum()
    }
}

/// Quillen's identities for `F_q ⊂ F_{q^f}` on `K_{2m-1}`, by exhaustive
/// enumeration of `Z/(q^{fm} - 1)`. Every map is stepped incrementally, so
/// the inner loop is additions and comparisons only.
pub fn check_quillen_identities(q: u64, f: u64, m: u64) -> Result<Report> {
    let small = k_order(q, m)?;
    let big = k_order(q, f * m)?;
    let qm = power(q, m)? % big;
    let multiplier = big / small;
    // Σ_{i<f} q^{mi} mod big.
    let orbit_step = (0..f).fold(0u64, |acc, i| (acc + pow_mod(q, m * i, big)) % big);
    let label = format!("q={q} f={f} m={m}");
    let mut report = Report::new();

    let mut image_i = Bits::new(big);
    let injective = (0..small).all(|y| !image_i.set(y * multiplier));
    report.push(Check::from_outcome("inclusion injective", injective, label.clone(), || "collision".into()));

    // Image of Fr - 1: x ↦ (q^m - 1)·x.
    let mut image_fr = Bits::new(big);
    let step = (qm + big - 1) % big;
    let mut y = 0u64;
    for _ in 0..big {
        image_fr.set(y);
        y += step;
        if y >= big {
            y -= big;
        }
    }

    let mut norm_hits = Bits::new(small);
    let (mut fr, mut norm, mut orbit, mut inc_norm) = (0u64, 0u64, 0u64, 0u64);
    let mut bad_fixed = None;
    let mut bad_kernel = None;
    let mut bad_orbit = None;
    for x in 0..big {
        norm_hits.set(norm);
        if bad_fixed.is_none() && (fr == x) != image_i.get(x) {
            bad_fixed = Some(x);
        }
        if bad_kernel.is_none() && (norm == 0) != image_fr.get(x) {
            bad_kernel = Some(x);
        }
        if bad_orbit.is_none() && orbit != inc_norm {
            bad_orbit = Some(x);
        }
        fr += qm;
        if fr >= big {
            fr -= big;
        }
        orbit += orbit_step;
        if orbit >= big {
            orbit -= big;
        }
        norm += 1;
        inc_norm += multiplier;
        if norm == small {
            norm = 0;
            inc_norm = 0;
        }
    }
    let witness = |x: Option<u64>| move || format!("x = {}", x.unwrap());
    report.push(Check::from_outcome(
        "norm surjective",
        norm_hits.count() == small,
        format!("{label}: {} of {small} residues hit", norm_hits.count()),
        || "missing residue".into(),
    ));
    report.push(Check::from_outcome("Frobenius fixed points = image of inclusion", bad_fixed.is_none(), label.clone(), witness(bad_fixed)));
    report.push(Check::from_outcome(
        "ker N = image(Fr - 1) = (q^m - 1)-multiples",
        bad_kernel.is_none(),
        label.clone(),
        witness(bad_kernel),
    ));
    let coinvariants = big / image_fr.count().max(1);
    report.push(Check::from_outcome(
        "coinvariants ≅ Z/(q^m - 1) via N",
        coinvariants == small && image_fr.count() * small == big,
        format!("{label}: |coinvariants| = {coinvariants}"),
        || format!("|image(Fr - 1)| = {}", image_fr.count()),
    ));
    report.push(Check::from_outcome("i∘N = Σ Fr^i", bad_orbit.is_none(), label, witness(bad_orbit)));
    Ok(report)
}

/// Which coefficient group a [`CoeffKGroup`] models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffDegree {
    /// `K_{2m-1}(F_q; Z/l^k) ≅ K_{2m-1}(F_q)/l^k`.
    Odd,
    /// `K_{2m}(F_q; Z/l^k) ≅ K_{2m-1}(F_q)[l^k]`.
    Even,
}

/// Cyclic of order `l^{min(k, v_l(q^m - 1))}`, with generator 1 as the
/// distinguished (Bott-compatible) generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoeffKGroup {
    base: CyclicKGroup,
    l: u64,
    k: u32,
    degree: CoeffDegree,
    order: u64,
}

impl CoeffKGroup {
    pub fn new(base: CyclicKGroup, l: u64, k: u32, degree: CoeffDegree) -> Result<Self> {
        if !is_prime(l) {
            return Err(FieldKError::NotPrime(l));
        }
        let order = l.pow(k.min(valuation_u64(base.order, l)));
        Ok(CoeffKGroup { base, l, k, degree, order })
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn base(&self) -> &CyclicKGroup {
        &self.base
    }

    pub fn degree(&self) -> CoeffDegree {
        self.degree
    }

    pub fn distinguished_generator(&self) -> u64 {
        1 % self.order
    }

    /// Odd degree: the reduction `K_{2m-1} → K_{2m-1}/l^k`.
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.base.order % self.order
    }

    /// Even degree: the embedding of `Z/l^{min}` onto `K_{2m-1}[l^k]`.
    pub fn torsion_embedding(&self, y: u64) -> u64 {
        y % self.order * (self.base.order / self.order)
    }
}

/// `k(v)`: the exact exponent of `l` in `q_v^n - 1`.
pub fn k_of_v(q_v: u64, n: u64, l: u64) -> Result<u32> {
    if !is_prime(l) {
        return Err(FieldKError::NotPrime(l));
    }
    if q_v % l == 0 {
        return Err(FieldKError::PrimeDividesQ { l, q: q_v });
    }
    let mut v = 0u32;
    while let Some(modulus) = l.checked_pow(v + 1).filter(|&p| p < 1 << 62) {
        if pow_mod(q_v, n, modulus) != 1 {
            break;
        }
        v += 1;
    }
    if l != 2 && (q_v - 1) % l == 0 {
        let lifted = valuation_u64(q_v - 1, l) + valuation_u64(n, l);
        assert_eq!(v, lifted, "lifting the exponent for q = {q_v}, n = {n}, l = {l}");
    }
    Ok(v)
}

/// Rank of `K_n(O_F)` for `F` with `r1` real and `r2` complex places.
pub fn borel_rank(n: u64, r1: u64, r2: u64) -> u64 {
    match n {
        0 => 1,
        1 => (r1 + r2).saturating_sub(1),
        n if n % 2 == 0 => 0,
        n if n % 4 == 1 => r1 + r2,
        _ => r2,
    }
}

/// `⊕_{w | v} K_{2m-1}(k_w)` (or its `l`-part, or its `l^k` coefficient
/// version) as a module over `G`, induced from the decomposition group `D`
/// generated by a Frobenius `φ` acting by `q_v^m`, optionally twisted by a
/// power of a cyclotomic character.
#[derive(Debug, Clone)]
pub struct GaloisCyclicModule {
    group: Arc<GaloisGroup>,
    frobenius: usize,
    residue_degree: usize,
    decomposition: Vec<usize>,
    coset_reps: Vec<usize>,
    q_v: u64,
    m: u64,
    l: Option<u64>,
    k: Option<u32>,
    summand_order: u64,
    frobenius_multiplier: u64,
    cyclotomic: Option<Vec<u64>>,
    twist: i64,
}

pub fn induced_module(
    group: Arc<GaloisGroup>,
    frobenius: usize,
    residue_degree: usize,
    q_v: u64,
    m: u64,
    l: Option<u64>,
    k: Option<u32>,
) -> Result<GaloisCyclicModule> {
    let actual = group.element_order(frobenius);
    if actual != residue_degree {
        return Err(FieldKError::FrobeniusOrder { expected: residue_degree, actual });
    }
    check_prime_power(q_v)?;
    if m == 0 {
        return Err(FieldKError::ZeroDegree);
    }
    // The l-part is read off modularly, so large residue fields never overflow.
    let summand_order = match l {
        None => CyclicKGroup::new(power(q_v, residue_degree as u64)?, m)?.order(),
        Some(l) => {
            let v = k_of_v(q_v, m * residue_degree as u64, l)?;
            l.pow(k.map_or(v, |k| k.min(v)))
        }
    };
    let decomposition = group.subgroup_generated(&[frobenius]);
    let mut coset_reps: Vec<usize> = Vec::new();
    for g in 0..group.order() {
        let covered = coset_reps.iter().any(|&r| decomposition.contains(&group.mul(group.inv(r), g)));
        if !covered {
            coset_reps.push(g);
        }
    }
    Ok(GaloisCyclicModule {
        frobenius_multiplier: pow_mod(q_v, m, summand_order.max(1)),
        group,
        frobenius,
        residue_degree,
        decomposition,
        coset_reps,
        q_v,
        m,
        l,
        k,
        summand_order,
        cyclotomic: None,
        twist: 0,
    })
}

impl GaloisCyclicModule {
    /// Attaches `χ(σ)` (one unit per group element), validated as a
    /// homomorphism into `(Z/summand_order)^×`.
    pub fn with_cyclotomic_character(mut self, chi: Vec<u64>) -> Result<Self> {
        let n = self.summand_order;
        if chi.len() != self.group.order() {
            return Err(FieldKError::BadCharacter("one value per group element".into()));
        }
        for a in 0..self.group.order() {
            if gcd(chi[a], n) != 1 && n > 1 {
                return Err(FieldKError::BadCharacter(format!("χ({}) is not a unit", self.group.label(a))));
            }
            for b in 0..self.group.order() {
                if chi[self.group.mul(a, b)] % n != chi[a] % n * (chi[b] % n) % n {
                    return Err(FieldKError::BadCharacter(format!(
                        "χ({}·{}) ≠ χ({})χ({})",
                        self.group.label(a),
                        self.group.label(b),
                        self.group.label(a),
                        self.group.label(b)
                    )));
                }
            }
        }
        self.cyclotomic = Some(chi.iter().map(|c| c % n.max(1)).collect());
        Ok(self)
    }

    pub fn group(&self) -> &Arc<GaloisGroup> {
        &self.group
    }

    pub fn frobenius(&self) -> usize {
        self.frobenius
    }

    pub fn decomposition_group(&self) -> &[usize] {
        &self.decomposition
    }

    pub fn residue_degree(&self) -> usize {
        self.residue_degree
    }

    pub fn summands(&self) -> usize {
        self.coset_reps.len()
    }

    pub fn coset_reps(&self) -> &[usize] {
        &self.coset_reps
    }

    pub fn summand_order(&self) -> u64 {
        self.summand_order
    }

    pub fn twist(&self) -> i64 {
        self.twist
    }

    pub fn q_v(&self) -> u64 {
        self.q_v
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// `(c', i)` with `σ·r_c = r_{c'}·φ^i`.
    pub fn translate(&self, sigma: usize, c: usize) -> (usize, usize) {
        let g = self.group.mul(sigma, self.coset_reps[c]);
        for (c2, &r) in self.coset_reps.iter().enumerate() {
            let d = self.group.mul(self.group.inv(r), g);
            if let Some(i) = (0..self.residue_degree).find(|&i| self.group.pow(self.frobenius, i as i64) == d) {
                return (c2, i);
            }
        }
        unreachable!("coset representatives cover the group")
    }

    fn twist_factor(&self, sigma: usize) -> u64 {
        let n = self.summand_order.max(1);
        match &self.cyclotomic {
            Some(chi) if self.twist != 0 => {
                let unit = chi[sigma];
                let unit = if self.twist < 0 { crate::exact_arith::inv_mod(unit, n).unwrap_or(0) } else { unit };
                pow_mod(unit, self.twist.unsigned_abs(), n)
            }
            _ => 1 % n,
        }
    }

    /// Matrix of `σ` on the summands.
    pub fn action_matrix(&self, sigma: usize) -> Vec<Vec<u64>> {
        let n = self.summand_order.max(1);
        let s = self.summands();
        let chi = self.twist_factor(sigma);
        let mut m = vec![vec![0; s]; s];
        for c in 0..s {
            let (c2, i) = self.translate(sigma, c);
            m[c2][c] = pow_mod(self.frobenius_multiplier, i as u64, n) * chi % n;
        }
        m
    }

    pub fn act(&self, sigma: usize, x: &[u64]) -> Vec<u64> {
        let n = self.summand_order.max(1);
        let m = self.action_matrix(sigma);
        m.iter().map(|row| row.iter().zip(x).fold(0, |acc, (&a, &b)| (acc + a * b) % n)).collect()
    }

    /// `σ(τ x) = (στ) x` for every pair of group generators and every element
    /// (elements are sampled along a stride when there are too many).
    pub fn check_action(&self) -> Check {
        let n = self.summand_order.max(1);
        let s = self.summands() as u32;
        let total = n.checked_pow(s).unwrap_or(u64::MAX);
        let stride = (total / 4096).max(1);
        let gens = self.group.generators();
        let mut checked = 0u64;
        let mut idx = 0u64;
        while idx < total {
            let x: Vec<u64> = (0..s).scan(idx, |rest, _| {
                let digit = *rest % n;
                *rest /= n;
                Some(digit)
            }).collect();
            for &a in &gens {
                for b in 0..self.group.order() {
                    let lhs = self.act(a, &self.act(b, &x));
                    let rhs = self.act(self.group.mul(a, b), &x);
                    if lhs != rhs {
                        return Check::fail(
                            "induced action is a group action",
                            format!("{} then {}", self.group.label(b), self.group.label(a)),
                            format!("x = {x:?}"),
                        );
                    }
                }
            }
            checked += 1;
            idx = idx.saturating_add(stride);
        }
        Check::pass("induced action is a group action", format!("{checked} elements"))
    }

    /// The same module as a [`FiniteGModule`]; needs an `l`-power summand order.
    pub fn to_finite_module(&self) -> Result<FiniteGModule> {
        let l = self.l.ok_or(FieldKError::NoCoefficients)?;
        let orders = if self.summand_order > 1 { vec![self.summand_order; self.summands()] } else { Vec::new() };
        let gens: Vec<(usize, Vec<Vec<u64>>)> = self
            .group
            .generators()
            .into_iter()
            .map(|g| (g, if orders.is_empty() { Vec::new() } else { self.action_matrix(g) }))
            .collect();
        Ok(FiniteGModule::new(l, orders, Arc::clone(&self.group), &gens)?)
    }
}

/// The twisted module `M(j)`: same group, twist exponent raised by `j`.
pub fn bott_twist(module: &GaloisCyclicModule, j: i64) -> Result<GaloisCyclicModule> {
    if module.k.is_none() || module.cyclotomic.is_none() {
        return Err(FieldKError::NoCoefficients);
    }
    let mut out = module.clone();
    out.twist += j;
    Ok(out)
}

/// The identity on the underlying group, viewed as `M → M(j)`, satisfies
/// `σ ⋆_{M(j)} x = χ(σ)^j·(σ ⋆_M x)`; checked on every element and group element.
pub fn check_twist_equivariance(module: &GaloisCyclicModule, j: i64) -> Result<Check> {
    let twisted = bott_twist(module, j)?;
    let n = module.summand_order.max(1);
    let chi = module.cyclotomic.as_ref().expect("checked by bott_twist");
    let total = n.checked_pow(module.summands() as u32).unwrap_or(u64::MAX).min(1 << 16);
    for idx in 0..total {
        let x: Vec<u64> = (0..module.summands()).scan(idx, |rest, _| {
            let digit = *rest % n;
            *rest /= n;
            Some(digit)
        }).collect();
        for sigma in 0..module.group.order() {
            let unit = if j < 0 { crate::exact_arith::inv_mod(chi[sigma], n).unwrap_or(0) } else { chi[sigma] };
            let factor = pow_mod(unit, j.unsigned_abs(), n);
            let expected: Vec<u64> = module.act(sigma, &x).iter().map(|v| v * factor % n).collect();
            if twisted.act(sigma, &x) != expected {
                return Ok(Check::fail(
                    format!("twist by {j} is equivariant"),
                    module.group.label(sigma).to_string(),
                    format!("x = {x:?}"),
                ));
            }
        }
    }
    Ok(Check::pass(format!("twist by {j} is equivariant"), format!("{total} elements")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn orders() {
        assert_eq!(k_order(4, 1).unwrap(), 3);
        assert_eq!(k_order(2, 2).unwrap(), 3);
        assert_eq!(k_order(3, 2).unwrap(), 8);
        assert_eq!(k_order(6, 1), Err(FieldKError::NotPrimePower(6)));
        assert_eq!(k_order(3, 0), Err(FieldKError::ZeroDegree));
    }

    #[test]
    fn maps_over_z8() {
        assert_eq!(frobenius_action(3, 2, 1, 0).unwrap(), 0);
        assert_eq!(frobenius_action(3, 2, 1, 1).unwrap(), 3);
        assert_eq!(inclusion_map(3, 2, 1, 1).unwrap(), 4);
        assert_eq!(inclusion_map(3, 2, 1, 0).unwrap(), 0);
        assert_eq!(norm_map(3, 2, 1, 1).unwrap(), 1);
        assert_eq!(norm_map(3, 2, 1, 0).unwrap(), 0);
        // Brute force over Z/8.
        let kernel: Vec<u64> = (0..8).filter(|&x| norm_map(3, 2, 1, x).unwrap() == 0).collect();
        assert_eq!(kernel, vec![0, 2, 4, 6]);
        let fixed: Vec<u64> = (0..8).filter(|&x| frobenius_action(3, 2, 1, x).unwrap() == x).collect();
        let image: Vec<u64> = (0..2).map(|y| inclusion_map(3, 2, 1, y).unwrap()).collect();
        assert_eq!(fixed, image);
        for x in 0..8 {
            let orbit = (x + frobenius_action(3, 2, 1, x).unwrap()) % 8;
            assert_eq!(orbit, inclusion_map(3, 2, 1, norm_map(3, 2, 1, x).unwrap()).unwrap());
        }
    }

    #[test]
    fn quillen_examples() {
        for (q, f, m) in [(3, 2, 1), (2, 2, 2), (5, 2, 1), (4, 3, 2)] {
            let report = check_quillen_identities(q, f, m).unwrap();
            assert!(report.ok(), "{q} {f} {m}: {:?}", report.failures().collect::<Vec<_>>());
            assert_eq!(report.checks.len(), 6);
        }
    }

    #[test]
    fn coefficient_groups() {
        let base = CyclicKGroup::new(7, 1).unwrap();
        let odd = CoeffKGroup::new(base, 3, 2, CoeffDegree::Odd).unwrap();
        assert_eq!(odd.order(), 3);
        assert_eq!(odd.reduce(5), 2);
        let base = CyclicKGroup::new(19, 1).unwrap();
        let even = CoeffKGroup::new(base, 3, 1, CoeffDegree::Even).unwrap();
        assert_eq!(even.order(), 3);
        assert_eq!(even.torsion_embedding(1), 6);
        assert_eq!(even.torsion_embedding(1) * 3 % 18, 0);
        assert_eq!(even.distinguished_generator(), 1);
    }

    #[test]
    fn k_of_v_examples() {
        assert_eq!(k_of_v(7, 1, 3).unwrap(), 1);
        assert_eq!(k_of_v(7, 3, 3).unwrap(), 2);
        assert_eq!(k_of_v(4, 1, 3).unwrap(), 1);
        assert_eq!(k_of_v(9, 1, 3), Err(FieldKError::PrimeDividesQ { l: 3, q: 9 }));
        assert_eq!(k_of_v(5, 2, 3).unwrap(), 1);
        assert_eq!(k_of_v(2, 3, 3).unwrap(), 0);
    }

    #[test]
    fn borel_table() {
        for (r1, r2) in [(1, 0), (2, 1), (0, 3)] {
            assert_eq!(borel_rank(0, r1, r2), 1);
            assert_eq!(borel_rank(1, r1, r2), r1 + r2 - 1);
            for n in [2, 4, 6] {
                assert_eq!(borel_rank(n, r1, r2), 0);
            }
            assert_eq!(borel_rank(5, r1, r2), r1 + r2);
            assert_eq!(borel_rank(3, r1, r2), r2);
            assert_eq!(borel_rank(7, r1, r2), r2);
        }
    }

    #[test]
    fn induced_examples() {
        let trivial = Arc::new(GaloisGroup::cyclic_product(&[]));
        let plain = induced_module(trivial, 0, 1, 7, 1, None, None).unwrap();
        assert_eq!(plain.summands(), 1);
        assert_eq!(plain.summand_order(), 6);
        assert_eq!(plain.act(0, &[5]), vec![5]);

        let c2 = Arc::new(GaloisGroup::cyclic_product(&[2]));
        let split = induced_module(Arc::clone(&c2), 0, 1, 7, 1, Some(3), None).unwrap();
        assert_eq!(split.summands(), 2);
        assert_eq!(split.act(1, &[1, 2]), vec![2, 1]);
        assert!(split.check_action().passed());
        assert!(split.to_finite_module().is_ok());

        let inert = induced_module(Arc::clone(&c2), 1, 2, 2, 1, Some(3), None).unwrap();
        assert_eq!(inert.summands(), 1);
        // k_w = F_4, K_1 = Z/3, Frobenius acts by 2.
        assert_eq!(inert.summand_order(), 3);
        assert_eq!(inert.act(1, &[1]), vec![2]);
        assert!(inert.check_action().passed());
        assert_eq!(
            induced_module(c2, 1, 1, 2, 1, None, None).unwrap_err(),
            FieldKError::FrobeniusOrder { expected: 1, actual: 2 }
        );
    }

    fn twisted_example() -> GaloisCyclicModule {
        // G = (Z/9)^x ≅ Z/6 with σ_2 as generator; χ(σ_2^i) = 2^i mod 9.
        let g = Arc::new(GaloisGroup::cyclic_product(&[6]));
        let chi: Vec<u64> = (0..6).map(|i| pow_mod(2, i, 9)).collect();
        // Frobenius σ_2^3 of order 2, q_v = 19 (19 ≡ 1 mod 9): three summands of Z/9.
        let frob = g.pow(1, 3);
        induced_module(g, frob, 2, 19, 1, Some(3), Some(2)).unwrap().with_cyclotomic_character(chi).unwrap()
    }

    #[test]
    fn twists() {
        let m = twisted_example();
        assert_eq!(m.summands(), 3);
        assert_eq!(m.summand_order(), 9);
        let t0 = bott_twist(&m, 0).unwrap();
        assert_eq!(t0.action_matrix(1), m.action_matrix(1));
        let round = bott_twist(&bott_twist(&m, 1).unwrap(), -1).unwrap();
        for s in 0..6 {
            assert_eq!(round.action_matrix(s), m.action_matrix(s));
        }
        assert!(check_twist_equivariance(&m, 1).unwrap().passed());
        assert!(check_twist_equivariance(&m, -2).unwrap().passed());
        assert!(bott_twist(&m, 3).unwrap().check_action().passed());
        assert!(bott_twist(&m, -1).unwrap().to_finite_module().is_ok());
        let plain = induced_module(Arc::new(GaloisGroup::cyclic_product(&[])), 0, 1, 7, 1, None, None).unwrap();
        assert_eq!(bott_twist(&plain, 1).unwrap_err(), FieldKError::NoCoefficients);
    }

    proptest! {
        #[test]
        fn image_times_kernel(q in prop::sample::select(vec![2u64, 3, 4, 5, 7, 8, 9]), f in 2u64..4, m in 1u64..3) {
            let big = k_order(q, f * m).unwrap();
            let small = k_order(q, m).unwrap();
            let image = (0..small).map(|y| inclusion_map(q, f, m, y).unwrap()).collect::<std::collections::BTreeSet<_>>().len() as u64;
            let kernel = (0..big.min(1 << 16)).filter(|&x| norm_map(q, f, m, x).unwrap() == 0).count() as u64;
            if big <= 1 << 16 {
                prop_assert_eq!(image * kernel, big);
            }
            prop_assert_eq!(image, small);
        }

        #[test]
        fn twists_compose_additively(a in -3i64..4, b in -3i64..4) {
            let m = twisted_example();
            let two_step = bott_twist(&bott_twist(&m, a).unwrap(), b).unwrap();
            let one_step = bott_twist(&m, a + b).unwrap();
            for s in 0..6 {
                prop_assert_eq!(two_step.action_matrix(s), one_step.action_matrix(s));
            }
            prop_assert_eq!(two_step.summand_order(), m.summand_order());
        }
    }
}
