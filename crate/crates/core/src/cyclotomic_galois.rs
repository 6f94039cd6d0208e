//! Abelian extensions of `Q` and finite abelian Galois groups.
//!
//! A field is a pair `(f, H)` with `H <= (Z/f)^x`; it stands for the fixed
//! field of `H` inside `Q(mu_f)`. Every field also carries its normal form at
//! the conductor, and group elements are labelled `σr` with `r` the least
//! positive residue of the coset modulo the conductor. Two fields compare
//! equal exactly when their normal forms agree.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::exact_arith::{euler_phi, gcd, is_prime, lcm, multiplicative_order, unit_group};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GaloisError {
    #[error("{a} is not coprime to the modulus {modulus}")]
    NotCoprime { a: u64, modulus: u64 },
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("field with conductor {small} is not a subfield of the field with conductor {big}")]
    NotSubfield { small: u64, big: u64 },
    #[error("field does not contain the {0}-th roots of unity")]
    MissingRootsOfUnity(u64),
    #[error("group axiom violated: {0}")]
    Axiom(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
}

/// Finite abelian group given by explicit tables; elements are indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisGroup {
    labels: Vec<String>,
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
    identity: usize,
}

impl GaloisGroup {
    /// Validates closure, identity, inverses, associativity and commutativity.
    pub fn from_tables(
        labels: Vec<String>,
        mul: Vec<Vec<usize>>,
        inv: Vec<usize>,
        identity: usize,
    ) -> Result<Self, GaloisError> {
        let n = labels.len();
        let ax = |m: String| Err(GaloisError::Axiom(m));
        if n == 0 {
            return ax("empty group".into());
        }
        if identity >= n || mul.len() != n || inv.len() != n || mul.iter().any(|r| r.len() != n) {
            return ax("table shape does not match the label list".into());
        }
        if mul.iter().flatten().any(|&c| c >= n) || inv.iter().any(|&c| c >= n) {
            return ax("table entry outside the group".into());
        }
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != n {
            return ax("duplicate labels".into());
        }
        for a in 0..n {
            if mul[identity][a] != a || mul[a][identity] != a {
                return ax(format!("{} is not a two-sided identity at {}", labels[identity], labels[a]));
            }
            if mul[a][inv[a]] != identity {
                return ax(format!("{} is not the inverse of {}", labels[inv[a]], labels[a]));
            }
            for b in 0..n {
                if mul[a][b] != mul[b][a] {
                    return ax(format!("{}·{} != {}·{}", labels[a], labels[b], labels[b], labels[a]));
                }
                for c in 0..n {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return ax(format!(
                            "({}·{})·{} != {}·({}·{})",
                            labels[a], labels[b], labels[c], labels[a], labels[b], labels[c]
                        ));
                    }
                }
            }
        }
        Ok(GaloisGroup { labels, mul, inv, identity })
    }

    /// `Z/n_1 x ... x Z/n_r`, elements labelled by exponent tuples.
    pub fn cyclic_product(orders: &[usize]) -> Self {
        let n: usize = orders.iter().product();
        let digits = |mut i: usize| {
            orders
                .iter()
                .map(|&o| {
                    let d = i % o;
                    i /= o;
                    d
                })
                .collect::<Vec<_>>()
        };
        let index = |ds: &[usize]| ds.iter().zip(orders).rev().fold(0, |acc, (&d, &o)| acc * o + d);
        let labels = (0..n)
            .map(|i| {
                let ds = digits(i);
                format!("g({})", ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","))
            })
            .collect();
        let mul = (0..n)
            .map(|a| {
                let da = digits(a);
                (0..n)
                    .map(|b| {
                        let db = digits(b);
                        let s: Vec<usize> = da.iter().zip(&db).zip(orders).map(|((x, y), o)| (x + y) % o).collect();
                        index(&s)
                    })
                    .collect()
            })
            .collect();
        let inv = (0..n)
            .map(|a| {
                let s: Vec<usize> = digits(a).iter().zip(orders).map(|(x, o)| (o - x) % o).collect();
                index(&s)
            })
            .collect();
        GaloisGroup { labels, mul, inv, identity: 0 }
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn pow(&self, a: usize, e: i64) -> usize {
        let base = if e < 0 { self.inv[a] } else { a };
        let mut acc = self.identity;
        for _ in 0..e.unsigned_abs() {
            acc = self.mul[acc][base];
        }
        acc
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != self.identity {
            x = self.mul[x][a];
            k += 1;
        }
        k
    }

    pub fn exponent(&self) -> usize {
        (0..self.order()).map(|a| self.element_order(a)).fold(1, num::integer::lcm)
    }

    /// Sorted elements of the subgroup generated by `gens`.
    pub fn subgroup_generated(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order()];
        seen[self.identity] = true;
        let mut stack = vec![self.identity];
        while let Some(x) = stack.pop() {
            for &g in gens {
                let y = self.mul[x][g];
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        (0..self.order()).filter(|&i| seen[i]).collect()
    }

    /// Greedy generating set of the subgroup with the given elements.
    pub fn subgroup_generators(&self, elems: &[usize]) -> Vec<usize> {
        let mut sorted = elems.to_vec();
        sorted.sort_unstable();
        let mut gens = Vec::new();
        let mut span = vec![self.identity];
        for &a in &sorted {
            if span.len() == sorted.len() {
                break;
            }
            if span.binary_search(&a).is_err() {
                gens.push(a);
                span = self.subgroup_generated(&gens);
            }
        }
        gens
    }

    /// A small generating set, chosen greedily in index order.
    pub fn generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = vec![self.identity];
        for a in 0..self.order() {
            if span.len() == self.order() {
                break;
            }
            if span.binary_search(&a).is_err() {
                gens.push(a);
                span = self.subgroup_generated(&gens);
            }
        }
        gens
    }
}

/// Homomorphism between two groups, stored as an image table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupHom {
    source: Arc<GaloisGroup>,
    target: Arc<GaloisGroup>,
    images: Vec<usize>,
}

impl GroupHom {
    pub fn new(source: Arc<GaloisGroup>, target: Arc<GaloisGroup>, images: Vec<usize>) -> Result<Self, GaloisError> {
        if images.len() != source.order() || images.iter().any(|&i| i >= target.order()) {
            return Err(GaloisError::Axiom("image table has the wrong shape".into()));
        }
        for a in 0..source.order() {
            for b in 0..source.order() {
                if images[source.mul(a, b)] != target.mul(images[a], images[b]) {
                    return Err(GaloisError::Axiom(format!(
                        "not multiplicative at ({}, {})",
                        source.label(a),
                        source.label(b)
                    )));
                }
            }
        }
        Ok(GroupHom { source, target, images })
    }

    pub fn identity_on(group: Arc<GaloisGroup>) -> Self {
        let images = (0..group.order()).collect();
        GroupHom { source: group.clone(), target: group, images }
    }

    pub fn apply(&self, a: usize) -> usize {
        self.images[a]
    }

    pub fn source(&self) -> &Arc<GaloisGroup> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GaloisGroup> {
        &self.target
    }

    pub fn is_surjective(&self) -> bool {
        let hit: BTreeSet<usize> = self.images.iter().copied().collect();
        hit.len() == self.target.order()
    }

    pub fn kernel(&self) -> Vec<usize> {
        (0..self.source.order()).filter(|&a| self.images[a] == self.target.identity()).collect()
    }

    pub fn compose(&self, after: &GroupHom) -> GroupHom {
        assert_eq!(*self.target, *after.source, "composing homomorphisms with mismatched groups");
        let images = self.images.iter().map(|&i| after.images[i]).collect();
        GroupHom { source: self.source.clone(), target: after.target.clone(), images }
    }
}

/// Abelian number field `Q(mu_f)^H`.
#[derive(Debug, Clone)]
pub struct AbelianFieldQ {
    modulus: u64,
    subgroup: Vec<u64>,
    conductor: u64,
    reduced_subgroup: Vec<u64>,
    class_of: Vec<usize>,
    reps: Vec<u64>,
    group: Arc<GaloisGroup>,
}

impl PartialEq for AbelianFieldQ {
    fn eq(&self, other: &Self) -> bool {
        self.conductor == other.conductor && self.reduced_subgroup == other.reduced_subgroup
    }
}

impl Eq for AbelianFieldQ {}

impl fmt::Display for AbelianFieldQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(mu_{})^H, conductor {}, degree {}", self.modulus, self.conductor, self.degree())
    }
}

const NOT_A_UNIT: usize = usize::MAX;

/// Closure of `gens` in `(Z/f)^x`, sorted.
fn closure(f: u64, gens: &[u64]) -> Vec<u64> {
    let mut seen = BTreeSet::from([1 % f.max(1)]);
    let mut stack = vec![1 % f.max(1)];
    while let Some(x) = stack.pop() {
        for &g in gens {
            let y = (x as u128 * (g % f) as u128 % f as u128) as u64;
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    if f == 1 {
        return vec![1];
    }
    seen.into_iter().collect()
}

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n % d == 0).collect()
}

fn residue_mod(a: u64, m: u64) -> u64 {
    if m == 1 {
        1
    } else {
        a % m
    }
}

impl AbelianFieldQ {
    /// `make_field`: the fixed field of the subgroup generated by `generators`.
    pub fn new(modulus: u64, generators: &[u64]) -> Result<Self, GaloisError> {
        if modulus == 0 {
            return Err(GaloisError::ZeroModulus);
        }
        for &g in generators {
            if gcd(g % modulus, modulus) != 1 && modulus > 1 {
                return Err(GaloisError::NotCoprime { a: g, modulus });
            }
        }
        Ok(Self::from_subgroup(modulus, closure(modulus, generators)))
    }

    pub fn rationals() -> Self {
        Self::from_subgroup(1, vec![1])
    }

    pub fn cyclotomic(f: u64) -> Result<Self, GaloisError> {
        Self::new(f, &[])
    }

    fn from_subgroup(modulus: u64, subgroup: Vec<u64>) -> Self {
        let units = unit_group(modulus);
        let in_h = |a: u64| subgroup.binary_search(&residue_mod(a, modulus)).is_ok();
        let conductor = divisors(modulus)
            .into_iter()
            .find(|&d| units.iter().filter(|&&a| residue_mod(a, d) == 1 % d.max(2) || d == 1).all(|&a| in_h(a)))
            .expect("the modulus itself always qualifies");
        let reduced: BTreeSet<u64> = subgroup.iter().map(|&h| residue_mod(h, conductor)).collect();
        let reduced_subgroup: Vec<u64> = reduced.into_iter().collect();

        let mut class_of = vec![NOT_A_UNIT; conductor as usize + 1];
        let mut reps = Vec::new();
        for a in unit_group(conductor) {
            if class_of[a as usize] != NOT_A_UNIT {
                continue;
            }
            let idx = reps.len();
            reps.push(a);
            for &h in &reduced_subgroup {
                let b = residue_mod(a * h, conductor);
                class_of[b as usize] = idx;
            }
        }
        if conductor == 1 {
            class_of[0] = 0;
        }
        let g = reps.len();
        let mul = (0..g)
            .map(|i| (0..g).map(|j| class_of[residue_mod(reps[i] * reps[j], conductor) as usize]).collect())
            .collect::<Vec<Vec<usize>>>();
        let inv = (0..g)
            .map(|i| (0..g).find(|&j| mul[i][j] == 0).expect("finite group has inverses"))
            .collect();
        let labels = reps.iter().map(|r| format!("σ{r}")).collect();
        let group = Arc::new(GaloisGroup { labels, mul, inv, identity: 0 });
        AbelianFieldQ { modulus, subgroup, conductor, reduced_subgroup, class_of, reps, group }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// The closure of the given subgroup modulo `modulus`.
    pub fn subgroup(&self) -> &[u64] {
        &self.subgroup
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    /// The same field re-expressed at its conductor.
    pub fn normalized(&self) -> AbelianFieldQ {
        Self::from_subgroup(self.conductor, self.reduced_subgroup.clone())
    }

    pub fn group(&self) -> &Arc<GaloisGroup> {
        &self.group
    }

    pub fn degree(&self) -> usize {
        self.group.order()
    }

    /// Least positive residue modulo the conductor representing `elem`.
    pub fn representative(&self, elem: usize) -> u64 {
        self.reps[elem]
    }

    /// The coset of `a`; `a` must be prime to the defining modulus.
    pub fn artin_symbol(&self, a: u64) -> Result<usize, GaloisError> {
        if self.modulus > 1 && gcd(a % self.modulus, self.modulus) != 1 {
            return Err(GaloisError::NotCoprime { a, modulus: self.modulus });
        }
        Ok(self.class_of[residue_mod(a, self.conductor) as usize])
    }

    /// Coset of any integer prime to the conductor.
    pub fn element_of_residue(&self, a: u64) -> Result<usize, GaloisError> {
        if self.conductor > 1 && gcd(a % self.conductor, self.conductor) != 1 {
            return Err(GaloisError::NotCoprime { a, modulus: self.conductor });
        }
        Ok(self.class_of[residue_mod(a, self.conductor) as usize])
    }

    /// Frobenius at a prime not dividing the conductor.
    pub fn frobenius(&self, p: u64) -> Result<usize, GaloisError> {
        self.element_of_residue(p)
    }

    /// Whether `a` (mod conductor) lies in the defining subgroup.
    fn in_reduced_subgroup(&self, a: u64) -> bool {
        self.reduced_subgroup.binary_search(&residue_mod(a, self.conductor)).is_ok()
    }

    /// Image of the defining subgroup, lifted to `lcm(conductor, m)`, inside `(Z/m)^x`.
    fn subgroup_image_mod(&self, m: u64) -> Vec<u64> {
        let big = lcm(self.conductor, m);
        let mut out = BTreeSet::new();
        for a in unit_group(big) {
            if self.in_reduced_subgroup(a) {
                out.insert(residue_mod(a, m));
            }
        }
        out.into_iter().collect()
    }

    /// Exponent of `Gal(F(mu_m)/F)`.
    pub fn exponent_over(&self, m: u64) -> u64 {
        if m <= 2 {
            return 1;
        }
        self.subgroup_image_mod(m).into_iter().map(|a| multiplicative_order(a, m)).fold(1, lcm)
    }

    /// Largest `m` with `Gal(F(mu_m)/F)` of exponent dividing `n`.
    ///
    /// Prime by prime: the exponent over `p^j` never decreases in `j`, so the
    /// search stops at the first failure. A prime `p` can only contribute
    /// when `p - 1 <= n` or `p` divides the conductor; both are covered by
    /// scanning `p <= 2 n phi(f) + 2`. For `p` prime to the conductor the
    /// image is all of `(Z/p^j)^x`, whose exponent is the Carmichael value.
    pub fn w_n(&self, n: u64) -> u64 {
        assert!(n >= 1, "w_n needs n >= 1");
        let bound = 2 * n * euler_phi(self.conductor) + 2;
        let mut w = 1u64;
        for p in (2..=bound).filter(|&p| is_prime(p)) {
            let exponent = |pj: u64| {
                if self.conductor % p != 0 {
                    carmichael_prime_power(p, pj)
                } else {
                    self.exponent_over(pj)
                }
            };
            let mut pj = p;
            while n % exponent(pj) == 0 {
                w *= p;
                pj *= p;
            }
        }
        w
    }

    /// `chi(sigma) mod m` for every group element; needs `mu_m` inside `F`.
    pub fn cyclotomic_character(&self, m: u64) -> Result<Vec<u64>, GaloisError> {
        let mut table = vec![None; self.degree()];
        let big = lcm(self.conductor, m);
        for a in unit_group(big) {
            let cls = self.class_of[residue_mod(a, self.conductor) as usize];
            let v = a % m;
            match table[cls] {
                None => table[cls] = Some(v),
                Some(prev) if prev != v => return Err(GaloisError::MissingRootsOfUnity(m)),
                Some(_) => {}
            }
        }
        Ok(table.into_iter().map(|v| v.expect("every class has a unit lift")).collect())
    }

    /// `F(mu_{l^k})`, realized at modulus `lcm(f, l^k)`.
    pub fn adjoin_roots_of_unity(&self, l: u64, k: u32) -> Result<TowerLevel, GaloisError> {
        if !is_prime(l) {
            return Err(GaloisError::NotPrime(l));
        }
        let lk = l.pow(k);
        let big = lcm(self.modulus, lk);
        let subgroup: Vec<u64> = unit_group(big)
            .into_iter()
            .filter(|&a| {
                self.subgroup.binary_search(&residue_mod(a, self.modulus)).is_ok() && residue_mod(a, lk) == 1 % lk.max(2)
            })
            .collect();
        let field = if k == 0 { self.clone() } else { Self::from_subgroup(big, subgroup) };
        let conductor = field.conductor();
        Ok(TowerLevel { base: self.clone(), l, k, field, conductor })
    }

    /// Compositum with `Q(mu_m)`.
    pub fn compositum_cyclotomic(&self, m: u64) -> AbelianFieldQ {
        let big = lcm(self.modulus, m);
        let subgroup = unit_group(big)
            .into_iter()
            .filter(|&a| self.subgroup.binary_search(&residue_mod(a, self.modulus)).is_ok() && residue_mod(a, m) == 1 % m.max(2))
            .collect();
        Self::from_subgroup(big, subgroup)
    }

    /// Restriction `G(self/Q) -> G(sub/Q)`.
    pub fn restriction_to(&self, sub: &AbelianFieldQ) -> Result<GroupHom, GaloisError> {
        restriction_map(self, sub)
    }
}

/// `F(mu_{l^k})` together with its conductor.
#[derive(Debug, Clone)]
pub struct TowerLevel {
    pub base: AbelianFieldQ,
    pub l: u64,
    pub k: u32,
    pub field: AbelianFieldQ,
    pub conductor: u64,
}

/// Restriction from `E` onto a subfield `F`, as a map on coset labels.
pub fn restriction_map(big: &AbelianFieldQ, small: &AbelianFieldQ) -> Result<GroupHom, GaloisError> {
    let not_sub = || GaloisError::NotSubfield { small: small.conductor, big: big.conductor };
    if big.conductor % small.conductor != 0 {
        return Err(not_sub());
    }
    if big.reduced_subgroup.iter().any(|&h| !small.in_reduced_subgroup(h)) {
        return Err(not_sub());
    }
    let images = (0..big.degree())
        .map(|e| small.class_of[residue_mod(big.reps[e], small.conductor) as usize])
        .collect();
    Ok(GroupHom { source: big.group.clone(), target: small.group.clone(), images })
}

/// Exponent of `(Z/p^j)^x`, given `p` and `pj = p^j`.
fn carmichael_prime_power(p: u64, pj: u64) -> u64 {
    let phi = pj / p * (p - 1);
    if p == 2 && pj >= 8 {
        phi / 2
    } else {
        phi
    }
}

/// Largest `m <= bound` with `Gal(F(mu_m)/F)` of exponent dividing `n`.
pub fn w_n_brute_force(field: &AbelianFieldQ, n: u64, bound: u64) -> u64 {
    (1..=bound).filter(|&m| n % field.exponent_over(m) == 0).max().unwrap_or(1)
}
