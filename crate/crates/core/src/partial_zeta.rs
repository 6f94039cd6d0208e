//! Partial zeta values at non-positive integers.
//!
//! Over `Q` the value at `s = -n` of the partial zeta function of the class
//! of `a` modulo `f` is `-f^n B_{n+1}(a/f) / (n+1)`, with `a` taken in
//! `[1, f]`. Classes are those of the narrow ray class group, that is
//! `(Z/f)^x` with positive representatives. Other base fields enter as
//! tables in the text format parsed by [`PartialZetaTable::from_document`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use num::{BigInt, One, Zero};
use thiserror::Error;

use crate::cyclotomic_galois::{AbelianFieldQ, GaloisError, GaloisGroup};
use crate::exact_arith::{
    bernoulli_polynomial, format_rational, gcd, inv_mod, parse_rational, rat, unit_group, Rational,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZetaError {
    #[error("{a} is not coprime to {f}")]
    NotCoprime { a: u64, f: u64 },
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("line {line}: malformed ({reason})")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate {key}")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: unknown class label {label}")]
    UnknownLabel { line: usize, label: String },
    #[error("missing {0}")]
    Missing(String),
    #[error("ingested group: {0}")]
    GroupAxiom(#[from] GaloisError),
    #[error("operation needs a table over Q with known modulus")]
    NotRational,
}

/// `zeta_f(a, -n)` over `Q`.
pub fn zeta_q(f: u64, a: u64, n: u32) -> Result<Rational, ZetaError> {
    if f == 0 {
        return Err(ZetaError::ZeroModulus);
    }
    if gcd(a % f, f) != 1 && f > 1 {
        return Err(ZetaError::NotCoprime { a, f });
    }
    let rep = if a % f == 0 { f } else { a % f };
    let x = rat(rep as i64, f as i64);
    let scale = Rational::from_integer(num::pow::pow(BigInt::from(f), n as usize));
    Ok(-scale * bernoulli_polynomial(n as usize + 1, &x) / Rational::from_integer(BigInt::from(n + 1)))
}

/// An auxiliary prime: its ray class and absolute norm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxPrime {
    pub class: usize,
    pub norm: u64,
}

/// Exact partial zeta values over a labelled ray class group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialZetaTable {
    description: String,
    group: Arc<GaloisGroup>,
    entries: BTreeMap<(usize, u32), Rational>,
    w_values: BTreeMap<u32, u64>,
    norms: Vec<u64>,
    primes: BTreeMap<String, AuxPrime>,
    rational_modulus: Option<u64>,
}

fn rational_description(f: u64) -> String {
    format!("Q mod {f}")
}

/// The ray class group mod `f` over `Q`, labelled by least positive residues.
pub fn ray_class_group_q(f: u64) -> GaloisGroup {
    let units = unit_group(f);
    let pos = |x: u64| units.binary_search(&(if f == 1 { 1 } else { (x - 1) % f + 1 })).expect("unit");
    let mul = units.iter().map(|&a| units.iter().map(|&b| pos(a * b)).collect()).collect();
    let inv = units.iter().map(|&a| pos(inv_mod(a, f).map_or(1, |i| if i == 0 { f } else { i }))).collect();
    let labels = units.iter().map(|a| a.to_string()).collect();
    GaloisGroup::from_tables(labels, mul, inv, 0).expect("(Z/f)^x is an abelian group")
}

impl PartialZetaTable {
    /// Closed-form table over `Q` for all `0 <= n <= n_max`.
    pub fn build_q(f: u64, n_max: u32) -> Result<Self, ZetaError> {
        if f == 0 {
            return Err(ZetaError::ZeroModulus);
        }
        let group = Arc::new(ray_class_group_q(f));
        let units = unit_group(f);
        let mut entries = BTreeMap::new();
        for (i, &a) in units.iter().enumerate() {
            for n in 0..=n_max {
                entries.insert((i, n), zeta_q(f, a, n)?);
            }
        }
        let field = AbelianFieldQ::cyclotomic(f)?;
        let w_values = (1..=n_max + 1).map(|n| (n, field.w_n(n as u64))).collect();
        Ok(PartialZetaTable {
            description: rational_description(f),
            group,
            entries,
            w_values,
            norms: units,
            primes: BTreeMap::new(),
            rational_modulus: Some(f),
        })
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn group(&self) -> &Arc<GaloisGroup> {
        &self.group
    }

    /// The modulus `f` when the base field is `Q`.
    pub fn rational_modulus(&self) -> Option<u64> {
        self.rational_modulus
    }

    pub fn value(&self, class: usize, n: u32) -> Option<&Rational> {
        self.entries.get(&(class, n))
    }

    pub fn twists(&self) -> BTreeSet<u32> {
        self.entries.keys().map(|&(_, n)| n).collect()
    }

    /// Supplied (or, over `Q`, computed) `w_n` of the ray class field.
    pub fn w_value(&self, n: u32) -> Option<u64> {
        self.w_values.get(&n).copied()
    }

    pub fn norm(&self, class: usize) -> u64 {
        self.norms[class]
    }

    pub fn aux_prime(&self, label: &str) -> Option<&AuxPrime> {
        self.primes.get(label)
    }

    /// Class of an integer prime to `f`; only for tables over `Q`.
    /// Auxiliary primes in label order.
    pub fn aux_primes(&self) -> impl Iterator<Item = (&str, &AuxPrime)> {
        self.primes.iter().map(|(label, p)| (label.as_str(), p))
    }

    pub fn class_of_integer(&self, a: u64) -> Result<usize, ZetaError> {
        let f = self.rational_modulus.ok_or(ZetaError::NotRational)?;
        if f > 1 && gcd(a % f, f) != 1 {
            return Err(ZetaError::NotCoprime { a, f });
        }
        let rep = if f == 1 { 1 } else if a % f == 0 { f } else { a % f };
        Ok(self.group.index_of(&rep.to_string()).expect("units are labelled by residues"))
    }

    /// Replaces one entry; used for negative controls.
    pub fn with_entry(mut self, class: usize, n: u32, value: Rational) -> Self {
        self.entries.insert((class, n), value);
        self
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(mut self, c: &Rational) -> Self {
        for v in self.entries.values_mut() {
            *v = &*v * c;
        }
        self
    }

    pub fn to_document(&self) -> String {
        let g = &self.group;
        let mut out = String::new();
        let _ = writeln!(out, "description: {}", self.description);
        let _ = writeln!(out, "order: {}", g.order());
        let _ = writeln!(out, "labels: {}", g.labels().join(" "));
        let _ = writeln!(out, "identity: {}", g.label(g.identity()));
        for a in 0..g.order() {
            for b in 0..g.order() {
                let _ = writeln!(out, "{}·{}={}", g.label(a), g.label(b), g.label(g.mul(a, b)));
            }
        }
        for a in 0..g.order() {
            let _ = writeln!(out, "{}^-1={}", g.label(a), g.label(g.inv(a)));
        }
        for a in 0..g.order() {
            let _ = writeln!(out, "norm | {} | {}", g.label(a), self.norms[a]);
        }
        for (n, w) in &self.w_values {
            let _ = writeln!(out, "w | {n} | {w}");
        }
        for (label, p) in &self.primes {
            let _ = writeln!(out, "prime | {label} | {} | {}", g.label(p.class), p.norm);
        }
        for ((a, n), v) in &self.entries {
            let _ = writeln!(out, "{} | {n} | {}", g.label(*a), format_rational(v));
        }
        out
    }

    /// Parses and validates a zeta-table document.
    pub fn from_document(text: &str) -> Result<Self, ZetaError> {
        RawDocument::parse(text)?.validate()
    }
}

#[derive(Default)]
struct RawDocument {
    description: Option<String>,
    order: Option<usize>,
    labels: Option<Vec<String>>,
    identity: Option<(usize, String)>,
    products: Vec<(usize, String, String, String)>,
    inverses: Vec<(usize, String, String)>,
    norms: Vec<(usize, String, u64)>,
    w_values: Vec<(usize, u32, u64)>,
    primes: Vec<(usize, String, String, u64)>,
    entries: Vec<(usize, String, u32, Rational)>,
}

const RESERVED: [&str; 3] = ["w", "norm", "prime"];

impl RawDocument {
    fn parse(text: &str) -> Result<Self, ZetaError> {
        let mut doc = RawDocument::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let bad = |reason: &str| ZetaError::Malformed { line, reason: reason.to_string() };
            let dup = |key: &str| ZetaError::Duplicate { line, key: key.to_string() };
            let int = |s: &str| s.trim().parse::<u64>().map_err(|_| bad(&format!("expected an integer, got {s:?}")));
            if let Some((key, rest)) = content.split_once(':').filter(|(k, _)| !k.contains('|')) {
                let rest = rest.trim();
                match key.trim() {
                    "description" => {
                        if doc.description.replace(rest.to_string()).is_some() {
                            return Err(dup("description"));
                        }
                    }
                    "order" => {
                        if doc.order.replace(int(rest)? as usize).is_some() {
                            return Err(dup("order"));
                        }
                    }
                    "labels" => {
                        let labels: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                        if let Some(r) = labels.iter().find(|l| RESERVED.contains(&l.as_str())) {
                            return Err(bad(&format!("label {r:?} is reserved")));
                        }
                        if doc.labels.replace(labels).is_some() {
                            return Err(dup("labels"));
                        }
                    }
                    "identity" => {
                        if doc.identity.replace((line, rest.to_string())).is_some() {
                            return Err(dup("identity"));
                        }
                    }
                    other => return Err(bad(&format!("unknown header {other:?}"))),
                }
            } else if content.contains('|') {
                let fields: Vec<&str> = content.split('|').map(str::trim).collect();
                match fields[0] {
                    "w" => {
                        let [_, n, w] = fields[..] else { return Err(bad("expected w | n | value")) };
                        doc.w_values.push((line, int(n)? as u32, int(w)?));
                    }
                    "norm" => {
                        let [_, label, norm] = fields[..] else { return Err(bad("expected norm | label | value")) };
                        let norm = int(norm)?;
                        if norm == 0 {
                            return Err(bad("norm must be positive"));
                        }
                        doc.norms.push((line, label.to_string(), norm));
                    }
                    "prime" => {
                        let [_, name, class, norm] = fields[..] else {
                            return Err(bad("expected prime | label | class | norm"));
                        };
                        doc.primes.push((line, name.to_string(), class.to_string(), int(norm)?));
                    }
                    _ => {
                        let [label, n, value] = fields[..] else { return Err(bad("expected label | n | p/q")) };
                        let value = parse_rational(value).map_err(|e| bad(&e.to_string()))?;
                        doc.entries.push((line, label.to_string(), int(n)? as u32, value));
                    }
                }
            } else if let Some((lhs, rhs)) = content.split_once("^-1=") {
                doc.inverses.push((line, lhs.trim().to_string(), rhs.trim().to_string()));
            } else if let Some((lhs, rhs)) = content.split_once('=') {
                let Some((a, b)) = lhs.split_once('·').or_else(|| lhs.split_once('*')) else {
                    return Err(bad("expected a·b=c"));
                };
                doc.products.push((line, a.trim().to_string(), b.trim().to_string(), rhs.trim().to_string()));
            } else {
                return Err(bad("unrecognized line"));
            }
        }
        Ok(doc)
    }

    fn validate(self) -> Result<PartialZetaTable, ZetaError> {
        let missing = |what: &str| ZetaError::Missing(what.to_string());
        let description = self.description.ok_or_else(|| missing("description header"))?;
        let order = self.order.ok_or_else(|| missing("order header"))?;
        let labels = self.labels.ok_or_else(|| missing("labels header"))?;
        let (id_line, identity) = self.identity.ok_or_else(|| missing("identity header"))?;
        if labels.len() != order {
            return Err(ZetaError::Malformed {
                line: 0,
                reason: format!("order {order} but {} labels", labels.len()),
            });
        }
        let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        if index.len() != labels.len() {
            return Err(ZetaError::Duplicate { line: 0, key: "label in labels header".into() });
        }
        let find = |line: usize, label: &str| {
            index.get(label).copied().ok_or_else(|| ZetaError::UnknownLabel { line, label: label.to_string() })
        };
        let identity = find(id_line, &identity)?;

        let mut mul = vec![vec![None; order]; order];
        for (line, a, b, c) in &self.products {
            let (a, b, c) = (find(*line, a)?, find(*line, b)?, find(*line, c)?);
            if mul[a][b].replace(c).is_some() {
                return Err(ZetaError::Duplicate { line: *line, key: format!("product {}·{}", labels[a], labels[b]) });
            }
        }
        let mut mul_full = Vec::with_capacity(order);
        for (a, row) in mul.into_iter().enumerate() {
            let mut full = Vec::with_capacity(order);
            for (b, c) in row.into_iter().enumerate() {
                full.push(c.ok_or_else(|| missing(&format!("product {}·{}", labels[a], labels[b])))?);
            }
            mul_full.push(full);
        }
        let mut inv = vec![None; order];
        for (line, a, b) in &self.inverses {
            let (a, b) = (find(*line, a)?, find(*line, b)?);
            if inv[a].replace(b).is_some() {
                return Err(ZetaError::Duplicate { line: *line, key: format!("inverse of {}", labels[a]) });
            }
        }
        let inv = inv
            .into_iter()
            .enumerate()
            .map(|(a, i)| i.ok_or_else(|| missing(&format!("inverse of {}", labels[a]))))
            .collect::<Result<Vec<_>, _>>()?;
        let group = Arc::new(GaloisGroup::from_tables(labels.clone(), mul_full, inv, identity)?);

        let mut norms = vec![None; order];
        for (line, label, norm) in &self.norms {
            let a = find(*line, label)?;
            if norms[a].replace(*norm).is_some() {
                return Err(ZetaError::Duplicate { line: *line, key: format!("norm of {label}") });
            }
        }
        let norms = norms
            .into_iter()
            .enumerate()
            .map(|(a, v)| v.ok_or_else(|| missing(&format!("norm of {}", labels[a]))))
            .collect::<Result<Vec<_>, _>>()?;

        let mut w_values = BTreeMap::new();
        for (line, n, w) in &self.w_values {
            if w_values.insert(*n, *w).is_some() {
                return Err(ZetaError::Duplicate { line: *line, key: format!("w value for n = {n}") });
            }
        }
        let mut primes = BTreeMap::new();
        for (line, name, class, norm) in &self.primes {
            let class = find(*line, class)?;
            if primes.insert(name.clone(), AuxPrime { class, norm: *norm }).is_some() {
                return Err(ZetaError::Duplicate { line: *line, key: format!("prime {name}") });
            }
        }
        let mut entries = BTreeMap::new();
        for (line, label, n, value) in self.entries {
            let a = find(line, &label)?;
            if entries.insert((a, n), value).is_some() {
                return Err(ZetaError::Duplicate { line, key: format!("entry ({label}, {n})") });
            }
        }
        let twists: BTreeSet<u32> = entries.keys().map(|&(_, n)| n).collect();
        for &n in &twists {
            for (a, label) in labels.iter().enumerate() {
                if !entries.contains_key(&(a, n)) {
                    return Err(missing(&format!("entry ({label}, {n})")));
                }
            }
        }

        let rational_modulus = description
            .strip_prefix("Q mod ")
            .and_then(|f| f.trim().parse::<u64>().ok())
            .filter(|&f| f >= 1 && group.as_ref() == &ray_class_group_q(f));
        Ok(PartialZetaTable { description, group, entries, w_values, norms, primes, rational_modulus })
    }
}

/// Whether `zeta_f(a) - l^n zeta_f(a/l) = sum_{a' = a mod f} zeta_{lf}(a')` at `s = -n`.
///
/// When `l | f` no integer `= a mod f` is divisible by `l`, and the Euler
/// term is absent.
pub fn verify_distribution(
    small: &PartialZetaTable,
    big: &PartialZetaTable,
    l: u64,
    n: u32,
    a: u64,
) -> Result<bool, ZetaError> {
    let f = small.rational_modulus.ok_or(ZetaError::NotRational)?;
    let lf = big.rational_modulus.ok_or(ZetaError::NotRational)?;
    if lf != l * f {
        return Err(ZetaError::Missing(format!("table modulo {} (found {lf})", l * f)));
    }
    let entry = |t: &PartialZetaTable, c: usize| {
        t.value(c, n).cloned().ok_or_else(|| ZetaError::Missing(format!("entry for twist {n}")))
    };
    let mut lhs = entry(small, small.class_of_integer(a)?)?;
    if f % l != 0 {
        let a_over_l = (a as u128 * inv_mod(l % f.max(2), f.max(2)).unwrap_or(1) as u128 % f.max(1) as u128) as u64;
        let euler = Rational::from_integer(num::pow::pow(BigInt::from(l), n as usize));
        lhs -= euler * entry(small, small.class_of_integer(a_over_l)?)?;
    }
    let mut rhs = Rational::zero();
    for a_big in unit_group(lf) {
        if f == 1 || a_big % f == a % f {
            rhs += entry(big, big.class_of_integer(a_big)?)?;
        }
    }
    Ok(lhs == rhs)
}

/// [`verify_distribution`] on freshly built closed-form tables.
pub fn verify_distribution_q(f: u64, l: u64, n: u32, a: u64) -> Result<bool, ZetaError> {
    let small = PartialZetaTable::build_q(f, n)?;
    let big = PartialZetaTable::build_q(l * f, n)?;
    verify_distribution(&small, &big, l, n, a)
}

/// `zeta(-n) = -B_{n+1} / (n+1)`.
pub fn riemann_zeta_negative(n: u32) -> Rational {
    zeta_q(1, 1, n).expect("f = 1 is always valid")
}

/// `prod_{p | f} (1 - p^n)`.
pub fn euler_product_removed(f: u64, n: u32) -> Rational {
    crate::exact_arith::prime_factors(f)
        .into_iter()
        .map(|p| Rational::one() - Rational::from_integer(num::pow::pow(BigInt::from(p), n as usize)))
        .product()
}
