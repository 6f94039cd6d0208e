//! Stickelberger elements `Theta_n(b, f)` and the identities they satisfy.
//!
//! `Delta_{n+1}(a, b, f) = Nb^{n+1} zeta_f(a, -n) - zeta_f(ab, -n)` and
//! `Theta_n(b, f) = sum_a Delta_{n+1}(a, b, f) sigma_a^{-1}`, where `sigma_a`
//! is the image of the ray class of `a` in `G(F/K)`.

pub mod cyclotomic;
pub mod group_ring;

use std::collections::VecDeque;
use std::sync::Arc;

use num::{BigInt, One, Zero};
use thiserror::Error;

use crate::checks::{Check, Report};
use crate::cyclotomic_galois::{restriction_map, AbelianFieldQ, GaloisError, GaloisGroup, GroupHom};
use crate::exact_arith::{
    bernoulli_polynomial, format_rational, gcd, prime_factors, rat, rational_mod, rational_pow, unit_group, Rational,
};
use crate::partial_zeta::{PartialZetaTable, ZetaError};
use cyclotomic::{CyclotomicField, CyclotomicNumber};
pub use group_ring::{GroupRingElement, ModGroupRingElement};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StickError {
    #[error(transparent)]
    Zeta(#[from] ZetaError),
    #[error(transparent)]
    Galois(#[from] GaloisError),
    #[error("no zeta value for class {class} at twist {n}")]
    MissingEntry { class: String, n: u32 },
    #[error("w_{0} is not available for this table")]
    MissingW(u32),
    #[error("field conductor {conductor} does not divide the modulus {modulus}")]
    ConductorMismatch { conductor: u64, modulus: u64 },
    #[error("{0}")]
    NotInvertible(String),
    #[error("operation needs a table over Q")]
    NotRational,
}

/// The auxiliary ideal `b`: its ray class and absolute norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuxiliaryClass {
    pub class: usize,
    pub norm: u64,
}

/// Zeta data, target Galois group and auxiliary ideal for one `Theta_n(b, f)`.
#[derive(Debug, Clone)]
pub struct StickContext {
    table: Arc<PartialZetaTable>,
    restriction: GroupHom,
    b: AuxiliaryClass,
    n: u32,
}

/// Closed-form table over `Q` for twists `0..=n_max`.
pub fn q_table(f: u64, n_max: u32) -> Result<Arc<PartialZetaTable>, StickError> {
    Ok(Arc::new(PartialZetaTable::build_q(f, n_max)?))
}

impl StickContext {
    /// `Theta_n(b, f)` over `G(F/Q)`; the conductor of `F` must divide `f`.
    pub fn over_q(field: &AbelianFieldQ, f: u64, b: u64, n: u32) -> Result<Self, StickError> {
        Self::from_table_q(q_table(f, n)?, field, b, n)
    }

    pub fn from_table_q(
        table: Arc<PartialZetaTable>,
        field: &AbelianFieldQ,
        b: u64,
        n: u32,
    ) -> Result<Self, StickError> {
        let f = table.rational_modulus().ok_or(StickError::NotRational)?;
        if f % field.conductor() != 0 {
            return Err(StickError::ConductorMismatch { conductor: field.conductor(), modulus: f });
        }
        let group = table.group().clone();
        let images = group
            .labels()
            .iter()
            .map(|label| field.element_of_residue(label.parse().expect("classes over Q are residues")))
            .collect::<Result<Vec<_>, _>>()?;
        let restriction = GroupHom::new(group, field.group().clone(), images)?;
        let class = table.class_of_integer(b)?;
        Ok(StickContext { table, restriction, b: AuxiliaryClass { class, norm: b }, n })
    }

    /// Over an ingested table, with `G(F/K)` the ray class group itself.
    pub fn ingested(table: Arc<PartialZetaTable>, b: AuxiliaryClass, n: u32) -> Self {
        let restriction = GroupHom::identity_on(table.group().clone());
        StickContext { table, restriction, b, n }
    }

    pub fn table(&self) -> &Arc<PartialZetaTable> {
        &self.table
    }

    pub fn target(&self) -> &Arc<GaloisGroup> {
        self.restriction.target()
    }

    /// Map from ray classes to `G(F/K)`.
    pub fn restriction(&self) -> &GroupHom {
        &self.restriction
    }

    pub fn b(&self) -> AuxiliaryClass {
        self.b
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn with_twist(&self, n: u32) -> Self {
        StickContext { n, ..self.clone() }
    }

    fn zeta(&self, class: usize, n: u32) -> Result<&Rational, StickError> {
        self.table.value(class, n).ok_or_else(|| StickError::MissingEntry {
            class: self.table.group().label(class).to_string(),
            n,
        })
    }

    /// `Delta_{n+1}(a, b, f)` for a ray class `a`.
    pub fn delta(&self, a: usize, n: u32) -> Result<Rational, StickError> {
        let ab = self.table.group().mul(a, self.b.class);
        let nb = Rational::from_integer(BigInt::from(self.b.norm));
        Ok(rational_pow(&nb, n as i64 + 1) * self.zeta(a, n)? - self.zeta(ab, n)?)
    }

    pub fn theta(&self) -> Result<GroupRingElement, StickError> {
        self.theta_at(self.n)
    }

    pub fn theta_at(&self, n: u32) -> Result<GroupRingElement, StickError> {
        let target = self.target();
        let mut out = GroupRingElement::zero(target.clone());
        for a in 0..self.table.group().order() {
            let sigma = target.inv(self.restriction.apply(a));
            out.add_term(sigma, &self.delta(a, n)?);
        }
        Ok(out)
    }

    /// Image of the class of `b` in `G(F/K)`.
    pub fn b_element(&self) -> usize {
        self.restriction.apply(self.b.class)
    }
}

/// `1 - Nl^n sigma_l^{-1}`.
pub fn euler_factor(group: &Arc<GaloisGroup>, sigma_l: usize, norm_l: u64, n: u32) -> GroupRingElement {
    let scalar = rational_pow(&Rational::from_integer(norm_l.into()), n as i64);
    let one = GroupRingElement::one(group.clone());
    &one - &GroupRingElement::basis(group.clone(), group.inv(sigma_l), scalar)
}

/// [`euler_factor`] for a rational prime `l` prime to the conductor of `F`.
pub fn euler_factor_q(field: &AbelianFieldQ, l: u64, n: u32) -> Result<GroupRingElement, StickError> {
    Ok(euler_factor(field.group(), field.frobenius(l)?, l, n))
}

/// Both sides of `Res Theta_n(b, f') = prod_{l | f', l !| f} (1 - l^n sigma_l^{-1}) Theta_n(b, f)`
/// over `G(Q(mu_f)/Q)`.
pub fn conductor_change_sides(
    big: &Arc<PartialZetaTable>,
    small: &Arc<PartialZetaTable>,
    b: u64,
    n: u32,
) -> Result<(GroupRingElement, GroupRingElement), StickError> {
    let f_big = big.rational_modulus().ok_or(StickError::NotRational)?;
    let f_small = small.rational_modulus().ok_or(StickError::NotRational)?;
    let field_big = AbelianFieldQ::cyclotomic(f_big)?;
    let field_small = AbelianFieldQ::cyclotomic(f_small)?;
    let theta_big = StickContext::from_table_q(big.clone(), &field_big, b, n)?.theta()?;
    let lhs = theta_big.restrict(&restriction_map(&field_big, &field_small)?);
    let mut rhs = StickContext::from_table_q(small.clone(), &field_small, b, n)?.theta()?;
    for l in prime_factors(f_big).into_iter().filter(|l| f_small % l != 0) {
        rhs = &euler_factor_q(&field_small, l, n)? * &rhs;
    }
    Ok((lhs, rhs))
}

pub fn verify_conductor_change(
    big: &Arc<PartialZetaTable>,
    small: &Arc<PartialZetaTable>,
    b: u64,
    n: u32,
) -> Result<Check, StickError> {
    let (lhs, rhs) = conductor_change_sides(big, small, b, n)?;
    let name = format!(
        "conductor change f'={} f={} b={b} n={n}",
        big.rational_modulus().unwrap_or(0),
        small.rational_modulus().unwrap_or(0)
    );
    Ok(Check::from_outcome(name, lhs == rhs, format!("restricted theta = {lhs}"), || {
        format!("restricted {lhs} but Euler-factor side {rhs}")
    }))
}

/// `prod (1 - Nl^n sigma_l^{-1})^{-1}` in `(Z/l^k)[G(F/Q)]`, or 1 when `l | f`.
///
/// With `n >= 1` the term `l^n sigma_l^{-1}` is nilpotent modulo `l^k`, so the
/// geometric series stops after `k` terms.
pub fn gamma_l(field: &AbelianFieldQ, f: u64, l: u64, n: u32, k: u32) -> Result<ModGroupRingElement, StickError> {
    let modulus = l.pow(k);
    let group = field.group().clone();
    if f % l == 0 {
        return Ok(ModGroupRingElement::one(group, modulus));
    }
    if n == 0 {
        return Err(StickError::NotInvertible(format!("1 - sigma_{l}^-1 is not a unit modulo {l}")));
    }
    let sigma_inv = group.inv(field.frobenius(l)?);
    let step = ModGroupRingElement::basis(group.clone(), modulus, sigma_inv, crate::exact_arith::pow_mod(l, n as u64, modulus));
    let mut term = ModGroupRingElement::one(group.clone(), modulus);
    let mut sum = ModGroupRingElement::zero(group, modulus);
    for _ in 0..k {
        sum = &sum + &term;
        term = &term * &step;
    }
    Ok(sum)
}

/// `Theta_n(b, f)` multiplied by the Euler factor at `l` when `l !| f`.
pub fn theta_level0(ctx: &StickContext, l: u64) -> Result<GroupRingElement, StickError> {
    let f = ctx.table().rational_modulus().ok_or(StickError::NotRational)?;
    let theta = ctx.theta()?;
    if f % l == 0 {
        return Ok(theta);
    }
    let sigma_l = ctx.restriction().apply(ctx.table().class_of_integer(l)?);
    Ok(&euler_factor(ctx.target(), sigma_l, l, ctx.n()) * &theta)
}

/// `F_k = F(mu_{l^k})` with the Stickelberger element at its conductor,
/// Euler-corrected at `l` when `l` does not divide that conductor.
pub fn tower_theta(
    base: &AbelianFieldQ,
    b: u64,
    n: u32,
    l: u64,
    k: u32,
) -> Result<(AbelianFieldQ, GroupRingElement), StickError> {
    let level = base.adjoin_roots_of_unity(l, k)?;
    let ctx = StickContext::over_q(&level.field, level.conductor, b, n)?;
    Ok((level.field, theta_level0(&ctx, l)?))
}

/// `Res_{F_{k+1}/F_k} Theta_n(b, f_{k+1}) = Theta_n(b, f_k)`.
pub fn verify_tower_restriction(base: &AbelianFieldQ, b: u64, n: u32, l: u64, k: u32) -> Result<Check, StickError> {
    let (top_field, top) = tower_theta(base, b, n, l, k + 1)?;
    let (bottom_field, bottom) = tower_theta(base, b, n, l, k)?;
    let restricted = top.restrict(&restriction_map(&top_field, &bottom_field)?);
    let name = format!("tower f={} l={l} k={k} b={b} n={n}", base.conductor());
    Ok(Check::from_outcome(name, restricted == bottom, format!("level {k} theta = {bottom}"), || {
        format!("restricted level {} theta {restricted} vs level {k} theta {bottom}", k + 1)
    }))
}

/// Every `Delta_{n+1}(a, b, f)` has denominator supported on primes dividing `Nb`.
pub fn check_integrality(ctx: &StickContext, n: u32) -> Result<Check, StickError> {
    let nb = ctx.b().norm;
    let group = ctx.table().group().clone();
    let mut violations = Vec::new();
    for a in 0..group.order() {
        let d = ctx.delta(a, n)?;
        let mut den = d.denom().clone();
        for p in prime_factors(nb) {
            let bp = BigInt::from(p);
            while (&den % &bp).is_zero() {
                den /= &bp;
            }
        }
        if !den.is_one() {
            violations.push(format!("Delta({}) = {}", group.label(a), format_rational(&d)));
        }
    }
    let name = format!("integrality {} b={nb} n={n}", ctx.table().description());
    let detail = format!("{} classes", group.order());
    Ok(Check::from_outcome(name, violations.is_empty(), detail, || violations.join("; ")))
}

/// Which hypothesis decides whether a congruence is in scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CongruenceGate {
    /// `gcd(Nb, w) = 1` for the congruence modulus `w`.
    Modulus,
    /// Additionally `gcd(Nb, w_{n+1}(F)) = 1`, the integrality hypothesis on `Theta`.
    Integrality,
}

/// Which part of `w` the congruence is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CongruenceScope {
    /// The whole of `w`.
    Full,
    /// The part of `w` supported on primes dividing `f`. At a prime `p !| f`
    /// the values at modulus `f` still carry their Euler factor at `p`, and
    /// the congruence at `p` fails in general (for instance `f = 3`, `b = 7`,
    /// `n = 1` modulo 2).
    ConductorPrimes,
}

/// `Delta_{hi+1}(a) = (Na Nb)^{hi-lo} Delta_{lo+1}(a)` modulo `gcd(w_hi, w_lo)`
/// (`lo >= 1`), or modulo `w_hi` when `lo = 0`.
///
/// `lo = 0` is the displayed form; `lo >= 1` is the form used for the
/// annihilation argument, obtained from two displayed forms and hence only
/// valid modulo both `w` values. Denominators are units modulo `w` under
/// the gate.
pub fn check_congruence(
    ctx: &StickContext,
    n: u32,
    m: u32,
    gate: CongruenceGate,
    scope: CongruenceScope,
) -> Result<Check, StickError> {
    let (hi, lo) = (n.max(m), n.min(m));
    let table = ctx.table();
    let nb = ctx.b().norm;
    let form = if lo == 0 { "displayed" } else { "proof" };
    let scope_label = match scope {
        CongruenceScope::Full => "",
        CongruenceScope::ConductorPrimes => ", conductor primes",
    };
    let name = format!("congruence {} b={nb} n={n} m={m} ({form}{scope_label})", table.description());
    if hi == lo {
        return Ok(Check::pass(name, "n = m, both sides agree"));
    }
    let w_hi = table.w_value(hi).ok_or(StickError::MissingW(hi))?;
    let (mut w, mut w_label) = if lo == 0 {
        (w_hi, format!("w_{hi}"))
    } else {
        let w_lo = table.w_value(lo).ok_or(StickError::MissingW(lo))?;
        (gcd(w_hi, w_lo), format!("gcd(w_{hi}, w_{lo})"))
    };
    if scope == CongruenceScope::ConductorPrimes {
        let f = table.rational_modulus().ok_or(StickError::NotRational)?;
        w = prime_factors(w)
            .into_iter()
            .filter(|p| f % p == 0)
            .map(|p| p.pow(crate::exact_arith::valuation_u64(w, p)))
            .product();
        w_label = format!("{w_label} at primes of f");
    }
    if gcd(nb, w) != 1 {
        return Ok(Check::not_applicable(name, format!("Nb = {nb} shares a factor with {w_label} = {w}")));
    }
    if gate == CongruenceGate::Integrality {
        let w_next = table.w_value(n + 1).ok_or(StickError::MissingW(n + 1))?;
        if gcd(nb, w_next) != 1 {
            return Ok(Check::not_applicable(
                name,
                format!("Nb = {nb} shares a factor with w_{} = {w_next}", n + 1),
            ));
        }
    }
    let group = table.group().clone();
    let mut violations = Vec::new();
    for a in 0..group.order() {
        let factor = rational_pow(
            &Rational::from_integer(BigInt::from(table.norm(a)) * BigInt::from(nb)),
            (hi - lo) as i64,
        );
        let lhs = ctx.delta(a, hi)?;
        let lower = ctx.delta(a, lo)?;
        let rhs = &factor * &lower;
        match rational_mod(&(&lhs - &rhs), w) {
            Some(0) => {}
            residue => violations.push(format!(
                "a={}: Delta_{}={} vs {}·Delta_{}={} differ by {} mod {w}",
                group.label(a),
                hi + 1,
                format_rational(&lhs),
                format_rational(&factor),
                lo + 1,
                format_rational(&lower),
                residue.map_or("a non-unit denominator".to_string(), |r| r.to_string()),
            )),
        }
    }
    let detail = format!("mod {w_label} = {w} over {} classes", group.order());
    Ok(Check::from_outcome(name, violations.is_empty(), detail, || violations.join("; ")))
}

/// All characters of `group` as exponent tables: `chi(g) = zeta_e^{v[g]}` with `e`
/// the group exponent.
pub fn characters(group: &GaloisGroup) -> (u64, Vec<Vec<u64>>) {
    let e = group.exponent() as u64;
    let gens = group.generators();
    let orders: Vec<u64> = gens.iter().map(|&g| group.element_order(g) as u64).collect();
    let mut out = Vec::new();
    let mut choice = vec![0u64; gens.len()];
    loop {
        let steps: Vec<u64> = choice.iter().zip(&orders).map(|(c, o)| c * (e / o)).collect();
        if let Some(values) = extend_character(group, &gens, &steps, e) {
            out.push(values);
        }
        // Odometer over the generator images.
        let mut i = 0;
        while i < choice.len() {
            choice[i] += 1;
            if choice[i] < orders[i] {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == choice.len() {
            break;
        }
    }
    assert_eq!(out.len(), group.order(), "an abelian group has as many characters as elements");
    (e, out)
}

fn extend_character(group: &GaloisGroup, gens: &[usize], steps: &[u64], e: u64) -> Option<Vec<u64>> {
    let mut values: Vec<Option<u64>> = vec![None; group.order()];
    values[group.identity()] = Some(0);
    let mut queue = VecDeque::from([group.identity()]);
    while let Some(x) = queue.pop_front() {
        let vx = values[x].expect("queued elements carry values");
        for (&g, &s) in gens.iter().zip(steps) {
            let y = group.mul(x, g);
            let vy = (vx + s) % e.max(1);
            match values[y] {
                None => {
                    values[y] = Some(vy);
                    queue.push_back(y);
                }
                Some(v) if v != vy => return None,
                Some(_) => {}
            }
        }
    }
    values.into_iter().collect()
}

/// `chi(Theta) = (Nb^{n+1} - chi(b)) L(-n, chi^{-1})` for every character of `G(F/K)`.
///
/// Over `Q` the `L`-value is `-f^n/(n+1) sum_a chi^{-1}(a) B_{n+1}(a/f)`,
/// evaluated from Bernoulli polynomials and not from the table. For ingested
/// tables it is `sum_a chi^{-1}(a) zeta(a, -n)`.
pub fn character_check(ctx: &StickContext) -> Result<Report, StickError> {
    let theta = ctx.theta()?;
    let target = ctx.target().clone();
    let (e, chars) = characters(&target);
    let field = CyclotomicField::new(e.max(1));
    let n = ctx.n();
    let table = ctx.table();
    let rays = table.group().clone();
    let mut report = Report::new();
    for (idx, chi) in chars.iter().enumerate() {
        let zeta = |v: u64| field.root_power(v as i64);
        let zeta_inv = |v: u64| field.root_power(-(v as i64));
        let mut lhs = field.zero();
        for (sigma, c) in theta.coefficients().iter().enumerate() {
            lhs = field.add(&lhs, &field.scale(&zeta(chi[sigma]), c));
        }
        let mut l_value: CyclotomicNumber = field.zero();
        match table.rational_modulus() {
            Some(f) => {
                let scale = -rational_pow(&Rational::from_integer(f.into()), n as i64)
                    / Rational::from_integer(BigInt::from(n + 1));
                for a in unit_group(f) {
                    let class = table.class_of_integer(a)?;
                    let x = rat(a as i64, f as i64);
                    let b_val = bernoulli_polynomial(n as usize + 1, &x) * &scale;
                    let v = chi[ctx.restriction().apply(class)];
                    l_value = field.add(&l_value, &field.scale(&zeta_inv(v), &b_val));
                }
            }
            None => {
                for a in 0..rays.order() {
                    let z = table.value(a, n).ok_or_else(|| StickError::MissingEntry {
                        class: rays.label(a).to_string(),
                        n,
                    })?;
                    let v = chi[ctx.restriction().apply(a)];
                    l_value = field.add(&l_value, &field.scale(&zeta_inv(v), z));
                }
            }
        }
        let nb_pow = rational_pow(&Rational::from_integer(ctx.b().norm.into()), n as i64 + 1);
        let factor = field.sub(&field.from_rational(&nb_pow), &zeta(chi[ctx.b_element()]));
        let rhs = field.mul(&factor, &l_value);
        let name = format!("character #{idx} {} b={} n={n}", table.description(), ctx.b().norm);
        let detail = format!("values in Q(zeta_{e})");
        report.push(Check::from_outcome(name, lhs == rhs, detail, || {
            let show = |v: &CyclotomicNumber| v.iter().map(format_rational).collect::<Vec<_>>().join(",");
            format!("chi = {chi:?}: chi(Theta) = [{}] but (Nb^(n+1) - chi(b)) L = [{}]", show(&lhs), show(&rhs))
        }));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::int;
    use crate::partial_zeta::{euler_product_removed, riemann_zeta_negative};
    use proptest::prelude::*;

    fn cyclo(f: u64) -> AbelianFieldQ {
        AbelianFieldQ::cyclotomic(f).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&c| int(c)).collect()
    }

    #[test]
    fn delta_values() {
        let ctx4 = StickContext::over_q(&cyclo(4), 4, 7, 1).unwrap();
        let one = ctx4.table().class_of_integer(1).unwrap();
        assert_eq!(ctx4.delta(one, 1).unwrap(), int(2));
        assert_eq!(ctx4.delta(one, 0).unwrap(), int(2));
        let ctx12 = StickContext::over_q(&cyclo(12), 12, 7, 1).unwrap();
        assert_eq!(ctx12.delta(ctx12.table().class_of_integer(1).unwrap(), 1).unwrap(), int(-27));
    }

    #[test]
    fn worked_thetas() {
        let qi = cyclo(4);
        let theta4 = StickContext::over_q(&qi, 4, 7, 1).unwrap().theta().unwrap();
        assert_eq!(theta4.coefficients(), &ints(&[2, 2])[..]);
        assert_eq!(theta4.to_string(), "σ1: 2, σ3: 2");
        let q12 = cyclo(12);
        let theta12 = StickContext::over_q(&q12, 12, 7, 1).unwrap().theta().unwrap();
        assert_eq!(theta12.coefficients(), &ints(&[-27, 23, 23, -27])[..]);
        let restricted = theta12.restrict(&restriction_map(&q12, &qi).unwrap());
        let factor = euler_factor_q(&qi, 3, 1).unwrap();
        assert_eq!(restricted.coefficients(), &ints(&[-4, -4])[..]);
        assert_eq!(restricted, &factor * &theta4);
    }

    /// Trivial-character oracle: the augmentation is
    /// `(Nb^{n+1} - 1) zeta(-n) prod_{p | f} (1 - p^n)`.
    #[test]
    fn augmentation_oracle() {
        for f in 2..=60u64 {
            for b in [7u64, 11, 13].into_iter().filter(|&b| gcd(b, f) == 1) {
                let table = q_table(f, 4).unwrap();
                for n in 0..=4 {
                    let theta = StickContext::from_table_q(table.clone(), &cyclo(f), b, n).unwrap().theta().unwrap();
                    let nb = rational_pow(&int(b as i64), n as i64 + 1);
                    let expected = (nb - int(1)) * riemann_zeta_negative(n) * euler_product_removed(f, n);
                    assert_eq!(theta.augmentation(), expected, "f={f} b={b} n={n}");
                }
            }
        }
    }

    #[test]
    fn theta_is_linear_in_the_table() {
        let table = PartialZetaTable::build_q(15, 2).unwrap();
        let c = rat(-7, 3);
        let scaled = Arc::new(table.clone().scaled(&c));
        let base = StickContext::from_table_q(Arc::new(table), &cyclo(15), 7, 2).unwrap().theta().unwrap();
        let theta = StickContext::from_table_q(scaled, &cyclo(15), 7, 2).unwrap().theta().unwrap();
        assert_eq!(theta, base.scale(&c));
    }

    #[test]
    fn theta_over_a_proper_subfield() {
        // Q(i) inside Q(mu_12): the coefficients collect through restriction.
        let theta = StickContext::over_q(&cyclo(4), 12, 7, 1).unwrap().theta().unwrap();
        assert_eq!(theta.coefficients(), &ints(&[-4, -4])[..]);
    }

    #[test]
    fn euler_factors() {
        let qi = cyclo(4);
        assert_eq!(euler_factor_q(&qi, 3, 1).unwrap().coefficients(), &ints(&[1, -3])[..]);
        let q5 = cyclo(5);
        assert!(euler_factor_q(&q5, 11, 0).unwrap().is_zero());
        let q = AbelianFieldQ::rationals();
        assert_eq!(euler_factor_q(&q, 3, 2).unwrap().coefficients(), &ints(&[-8])[..]);
    }

    #[test]
    fn conductor_change_examples() {
        let t12 = q_table(12, 1).unwrap();
        let t4 = q_table(4, 1).unwrap();
        assert!(verify_conductor_change(&t12, &t4, 7, 1).unwrap().passed());
        assert!(verify_conductor_change(&t12, &t12, 7, 1).unwrap().passed());
        for f_big in 2..=40u64 {
            let big = q_table(f_big, 3).unwrap();
            for f_small in (2..=f_big).filter(|d| f_big % d == 0) {
                let small = q_table(f_small, 3).unwrap();
                for b in [7u64, 11, 13].into_iter().filter(|&b| gcd(b, f_big) == 1) {
                    for n in 0..=3 {
                        let check = verify_conductor_change(&big, &small, b, n).unwrap();
                        assert!(check.passed(), "{check}");
                    }
                }
            }
        }
    }

    #[test]
    fn conductor_change_detects_a_corrupted_table() {
        let big = Arc::new(PartialZetaTable::build_q(12, 1).unwrap().with_entry(0, 1, int(5)));
        let small = q_table(4, 1).unwrap();
        assert!(verify_conductor_change(&big, &small, 7, 1).unwrap().failed());
    }

    #[test]
    fn gamma_examples() {
        let qi = cyclo(4);
        let g = gamma_l(&qi, 4, 3, 1, 2).unwrap();
        assert_eq!(g, ModGroupRingElement::from_signed(qi.group().clone(), 9, &[1, 3]));
        assert!(gamma_l(&qi, 12, 3, 1, 3).unwrap().is_one());
        assert!(gamma_l(&qi, 4, 3, 1, 1).unwrap().is_one());
        assert!(gamma_l(&qi, 4, 3, 0, 2).is_err());
    }

    #[test]
    fn gamma_inverts_the_euler_factor() {
        for f in [1u64, 3, 4, 5, 7, 8, 12, 15] {
            let field = cyclo(f);
            for l in [3u64, 5, 7].into_iter().filter(|l| f % l != 0) {
                for n in 1..=3 {
                    for k in 1..=4 {
                        let modulus = l.pow(k);
                        let g = gamma_l(&field, f, l, n, k).unwrap();
                        let e = euler_factor_q(&field, l, n).unwrap().reduce_mod(modulus).unwrap();
                        assert!((&g * &e).is_one(), "f={f} l={l} n={n} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn level_zero_thetas() {
        let qi = cyclo(4);
        let ctx = StickContext::over_q(&qi, 4, 7, 1).unwrap();
        assert_eq!(theta_level0(&ctx, 3).unwrap().coefficients(), &ints(&[-4, -4])[..]);
        assert_eq!(theta_level0(&ctx, 2).unwrap(), ctx.theta().unwrap());
        // Over F = Q the modulus matters: f = 4 gives (1 - 3) 4, f = 1 gives (1 - 3)(-4).
        let q = AbelianFieldQ::rationals();
        let ctx = StickContext::over_q(&q, 4, 7, 1).unwrap();
        assert_eq!(theta_level0(&ctx, 3).unwrap().coefficients(), &ints(&[-8])[..]);
        let ctx = StickContext::over_q(&q, 1, 7, 1).unwrap();
        assert_eq!(theta_level0(&ctx, 3).unwrap().coefficients(), &ints(&[8])[..]);
    }

    #[test]
    fn towers_restrict() {
        let qi = cyclo(4);
        assert!(verify_tower_restriction(&qi, 7, 1, 3, 0).unwrap().passed());
        let q = AbelianFieldQ::rationals();
        for k in 0..=1 {
            assert!(verify_tower_restriction(&q, 7, 1, 5, k).unwrap().passed());
        }
        for (f, l, b) in [(4u64, 3u64, 7u64), (5, 3, 7), (3, 5, 7), (1, 3, 7), (4, 5, 7), (1, 2, 7), (5, 2, 7)] {
            for n in 1..=2 {
                for k in 0..=1 {
                    let check = verify_tower_restriction(&cyclo(f), b, n, l, k).unwrap();
                    assert!(check.passed(), "{check}");
                }
            }
        }
    }

    #[test]
    fn integrality_examples() {
        let ctx = StickContext::over_q(&cyclo(4), 4, 7, 1).unwrap();
        assert!(check_integrality(&ctx, 1).unwrap().passed());
        let ctx = StickContext::over_q(&cyclo(4), 4, 3, 1).unwrap();
        assert_eq!(ctx.delta(0, 1).unwrap(), rat(1, 3));
        assert!(check_integrality(&ctx, 1).unwrap().passed());
        let bad = Arc::new(PartialZetaTable::build_q(4, 1).unwrap().with_entry(0, 1, rat(1, 5)));
        let ctx = StickContext::from_table_q(bad, &cyclo(4), 7, 1).unwrap();
        assert!(check_integrality(&ctx, 1).unwrap().failed());
    }

    #[test]
    fn congruence_examples() {
        use CongruenceGate::*;
        use CongruenceScope::*;
        let table = q_table(4, 2).unwrap();
        let ctx = StickContext::from_table_q(table.clone(), &cyclo(4), 7, 1).unwrap();
        assert!(check_congruence(&ctx, 1, 0, Modulus, Full).unwrap().passed());
        assert!(check_congruence(&ctx, 1, 1, Modulus, Full).unwrap().passed());
        let ctx3 = StickContext::from_table_q(table, &cyclo(4), 3, 1).unwrap();
        let gated = check_congruence(&ctx3, 1, 0, Integrality, Full).unwrap();
        assert_eq!(gated.status, crate::checks::Status::NotApplicable);
        assert!(check_congruence(&ctx3, 1, 0, Modulus, Full).unwrap().passed());
        // Delta_2(1, 7, 3) = 4 and 7 Delta_1(1, 7, 3) = 7 differ modulo 2, with 2 !| 3.
        let ctx = StickContext::over_q(&cyclo(3), 3, 7, 1).unwrap();
        assert!(check_congruence(&ctx, 1, 0, Modulus, Full).unwrap().failed());
        assert!(check_congruence(&ctx, 1, 0, Modulus, ConductorPrimes).unwrap().passed());
    }

    #[test]
    fn congruence_sweep_at_conductor_primes() {
        for f in 2..=40u64 {
            let table = q_table(f, 4).unwrap();
            for b in [7u64, 11, 13].into_iter().filter(|&b| gcd(b, f) == 1) {
                let ctx = StickContext::from_table_q(table.clone(), &cyclo(f), b, 0).unwrap();
                for n in 0..=4 {
                    for m in 0..=4 {
                        let check =
                            check_congruence(&ctx, n, m, CongruenceGate::Modulus, CongruenceScope::ConductorPrimes)
                                .unwrap();
                        assert!(!check.failed(), "{check}");
                    }
                }
            }
        }
    }

    /// Prime-power modulus `f = l^j`: the full and conductor-supported
    /// congruences agree at `l`, and the `l`-part never fails.
    #[test]
    fn congruence_holds_when_every_prime_of_w_divides_f() {
        for f in [2u64, 4, 6, 8, 12, 24, 30, 60] {
            let table = q_table(f, 2).unwrap();
            for b in [7u64, 11, 13].into_iter().filter(|&b| gcd(b, f) == 1) {
                let ctx = StickContext::from_table_q(table.clone(), &cyclo(f), b, 0).unwrap();
                let w = table.w_value(1).unwrap();
                if prime_factors(w).iter().all(|p| f % p == 0) {
                    let check = check_congruence(&ctx, 1, 0, CongruenceGate::Modulus, CongruenceScope::Full).unwrap();
                    assert!(check.passed(), "{check}");
                }
            }
        }
    }

    #[test]
    fn character_counts() {
        for f in 1..=40u64 {
            let field = cyclo(f);
            let (_, chars) = characters(field.group());
            assert_eq!(chars.len(), field.degree());
        }
    }

    #[test]
    fn character_examples() {
        for (f, b, n) in [(4u64, 7u64, 1u32), (5, 7, 1), (12, 7, 2), (15, 11, 3)] {
            let ctx = StickContext::over_q(&cyclo(f), f, b, n).unwrap();
            let report = character_check(&ctx).unwrap();
            assert!(report.ok(), "{:?}", report.failures().collect::<Vec<_>>());
        }
        let bad = Arc::new(PartialZetaTable::build_q(5, 1).unwrap().with_entry(1, 1, int(3)));
        let ctx = StickContext::from_table_q(bad, &cyclo(5), 7, 1).unwrap();
        assert!(!character_check(&ctx).unwrap().ok());
    }

    #[test]
    fn ingested_table_matches_closed_form() {
        let table = PartialZetaTable::build_q(12, 2).unwrap();
        let ingested = PartialZetaTable::from_document(&table.to_document().replace("Q mod 12", "abstract")).unwrap();
        assert_eq!(ingested.rational_modulus(), None);
        let b = AuxiliaryClass { class: ingested.group().index_of("7").unwrap(), norm: 7 };
        let ctx = StickContext::ingested(Arc::new(ingested), b, 2);
        let direct = StickContext::over_q(&cyclo(12), 12, 7, 2).unwrap().theta().unwrap();
        assert_eq!(ctx.theta().unwrap().coefficients(), direct.coefficients());
        assert!(character_check(&ctx).unwrap().ok());
    }

    proptest! {
        #[test]
        fn gamma_is_a_unit_and_inverse(f in 1u64..30, n in 1u32..4, k in 1u32..4) {
            let l = 3u64;
            prop_assume!(f % l != 0);
            let field = cyclo(f);
            let g = gamma_l(&field, f, l, n, k).unwrap();
            let e = euler_factor_q(&field, l, n).unwrap().reduce_mod(l.pow(k)).unwrap();
            prop_assert!((&g * &e).is_one());
        }
    }
}
