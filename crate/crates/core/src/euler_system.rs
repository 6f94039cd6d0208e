//! Euler-system families: one scenario over all layers `F_L = F(μ_L)`, with
//! `L` running over squarefree products of admissible primes, and the norm
//! relations between the elements of neighbouring layers.
//!
//! Every layer shares the auxiliary ideal `b` (`b_L := b`), and the prime above
//! `p` at each layer is the image of the one fixed at the top, so prime and
//! generator choices are compatible under `L | L'` by construction.

use std::sync::Arc;

use crate::checks::{Check, Report};
use crate::cyclotomic_galois::{restriction_map, AbelianFieldQ};
use crate::exact_arith::pow_mod;
use crate::splitting_sim::{
    AssembledLambda, LambdaM, Mutation, Result, Scenario, ScenarioSpec, SimError, SpecialElement,
};
use crate::stickelberger::ModGroupRingElement;

#[derive(Debug)]
pub struct EulerFamily {
    scenario: Scenario,
    primes: Vec<u64>,
}

/// Every squarefree product of `primes`, in increasing order.
pub fn layer_products(primes: &[u64]) -> Vec<u64> {
    let mut layers = vec![1u64];
    for &q in primes {
        let extended: Vec<u64> = layers.iter().map(|&l| l * q).collect();
        layers.extend(extended);
    }
    layers.sort_unstable();
    layers
}

/// The family over the admissible primes of `spec`; with none, the family is
/// the single layer `L = 1`.
pub fn build_family(spec: &ScenarioSpec, seed: u64) -> Result<EulerFamily> {
    spec.validate()?;
    let primes = spec.auxiliary_primes();
    let scenario = Scenario::build(spec, seed, &layer_products(&primes))?;
    Ok(EulerFamily { scenario, primes })
}

impl EulerFamily {
    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn layers(&self) -> &[u64] {
        self.scenario.layers()
    }

    fn spec(&self) -> &ScenarioSpec {
        self.scenario.spec()
    }

    /// `(L, l')` with `L·l'` a layer and `l' ∤ L`.
    pub fn steps(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for &layer in self.layers() {
            for &q in &self.primes {
                if layer % q != 0 && self.layers().contains(&(layer * q)) {
                    out.push((layer, q));
                }
            }
        }
        out
    }

    fn check_step(&self, layer: u64, q: u64) -> Result<u64> {
        let upper = layer * q;
        if layer % q == 0 || !self.layers().contains(&upper) {
            return Err(SimError::Rejected(format!("L·l' = {layer}·{q} is not a layer of the family")));
        }
        Ok(upper)
    }

    /// `Λ_m(ξ_{w(L),k})`.
    pub fn es_element(&self, layer: u64, k: u32) -> Result<LambdaM> {
        let xi = self.scenario.level(layer, k)?.xi().to_vec();
        self.scenario.lambda_m_at(layer, k, &xi)
    }

    /// `λ_{v(L),k}`.
    pub fn es_special(&self, layer: u64, k: u32) -> Result<SpecialElement> {
        let xi = self.scenario.level(layer, k)?.xi().to_vec();
        self.scenario.special_element_at(layer, k, &xi)
    }

    /// `1 - l'^t σ_{l'}^{-1}` over `field`, inflated to the top group.
    fn euler_factor(&self, field: &AbelianFieldQ, q: u64, twist: u32, modulus: u64) -> Result<ModGroupRingElement> {
        let group = field.group();
        let sigma_inv = group.inv(field.frobenius(q)?);
        let scalar = pow_mod(q, twist as u64, modulus);
        let term = if self.spec().mutation == Mutation::WrongEulerSign { scalar } else { (modulus - scalar) % modulus };
        let mut coeffs = vec![0u64; group.order()];
        coeffs[group.identity()] = 1 % modulus;
        coeffs[sigma_inv] = (coeffs[sigma_inv] + term) % modulus;
        let element = ModGroupRingElement::from_coefficients(Arc::clone(group), modulus, coeffs);
        Ok(element.inflate(&restriction_map(self.scenario.top_field(), field)?))
    }

    /// The twists for the Euler factors without and with coefficients.
    fn euler_twists(&self) -> (u32, u32) {
        let (m, n) = (self.spec().m, self.spec().n);
        if self.spec().mutation == Mutation::SwapEulerTwist {
            (n, m)
        } else {
            (m, n)
        }
    }

    /// `Tr(Λ_m(ξ_{L'})) = (1 - l'^m σ_{l'}^{-1})·Λ_m(N ξ_{L'})` at every level.
    pub fn verify_es1(&self, layer: u64, q: u64) -> Result<Report> {
        let upper = self.check_step(layer, q)?;
        let modulus = self.spec().l.pow(self.scenario.top_exponent());
        let mut report = Report::new();
        for k in 0..=self.spec().k_max {
            let (lo, hi) = (self.scenario.level(layer, k)?, self.scenario.level(upper, k)?);
            let lhs = lo.project_middle(&hi.lift_middle(&self.es_element(upper, k)?.value));
            let normed = lo.project_boundary(&hi.lift_boundary(hi.xi()));
            let factor = self.euler_factor(lo.field(), q, self.euler_twists().0, modulus)?;
            let rhs = lo.module().act_ring(&factor, &self.scenario.lambda_m_at(layer, k, &normed)?.value)?;
            report.push(Check::from_outcome(
                format!("norm relation without coefficients (L={layer}, l'={q}, k={k})"),
                lhs == rhs,
                "Tr Λ_m(ξ_L') = (1 - l'^m σ^-1)·Λ_m(N ξ_L')",
                || format!("Tr Λ_m(ξ_{upper}) = {lhs:?}, Euler side = {rhs:?}"),
            ));
        }
        Ok(report)
    }

    /// Reduction, boundary and norm-relation identities for the special
    /// elements, each reported on its own.
    pub fn verify_es2(&self, layer: u64, q: u64, k: u32, k_hi: u32) -> Result<Report> {
        let upper = self.check_step(layer, q)?;
        let mut report = self.scenario.verify_reduction_compat_at(layer, k, k_hi)?;
        report.extend(self.scenario.verify_special_boundary_at(layer, k)?);
        let (lo, hi) = (self.scenario.coefficient_level(layer, k)?, self.scenario.coefficient_level(upper, k)?);
        let lhs = lo.project_middle(&hi.lift_middle(&self.es_special(upper, k)?.value));
        let top_xi = self.scenario.level(upper, k)?;
        let normed = {
            let base = self.scenario.level(layer, k)?;
            base.project_boundary(&top_xi.lift_boundary(top_xi.xi()))
        };
        let primed = self.scenario.special_element_at(layer, k, &normed)?.value;
        let factor = self.euler_factor(lo.layer_field(), q, self.euler_twists().1, self.spec().l.pow(k))?;
        let rhs = lo.module().act_ring(&factor, &primed)?;
        report.push(Check::from_outcome(
            format!("norm relation of special elements (L={layer}, l'={q}, k={k})"),
            lhs == rhs,
            "Tr λ_L' = (1 - l'^n σ^-1)·λ'_L",
            || format!("Tr λ_{upper} = {lhs:?}, Euler side = {rhs:?}"),
        ));
        Ok(report)
    }

    /// Common level at which both layers have stabilized.
    pub fn limit_level(&self, layer: u64, q: u64) -> Result<u32> {
        let upper = self.check_step(layer, q)?;
        Ok(self.scenario.stabilized_level(layer)?.max(self.scenario.stabilized_level(upper)?))
    }

    /// Boundary identity at both layers and the norm relation of the assembled
    /// maps, evaluated on the generator and on unit rescalings of it.
    pub fn verify_es3(&self, layer: u64, q: u64) -> Result<Report> {
        let upper = self.check_step(layer, q)?;
        let k = self.limit_level(layer, q)?;
        let lower_map = self.scenario.assemble_lambda_at(layer, k)?;
        let upper_map = self.scenario.assemble_lambda_at(upper, k)?;
        let mut report = self.scenario.verify_assembled_boundary(&lower_map)?;
        report.extend(self.scenario.verify_assembled_boundary(&upper_map)?);
        report.extend(self.limit_norm_relation(layer, q, &lower_map, &upper_map)?);
        Ok(report)
    }

    fn limit_norm_relation(
        &self,
        layer: u64,
        q: u64,
        lower_map: &AssembledLambda,
        upper_map: &AssembledLambda,
    ) -> Result<Report> {
        let k = lower_map.k;
        let upper = upper_map.layer;
        let (lo, hi) = (self.scenario.coefficient_level(layer, k)?, self.scenario.coefficient_level(upper, k)?);
        let modulus = self.spec().l.pow(k);
        let group = self.scenario.group();
        let factor = self.euler_factor(lo.layer_field(), q, self.euler_twists().1, modulus)?;
        let units = [
            ("1", ModGroupRingElement::one(Arc::clone(group), modulus)),
            ("2", ModGroupRingElement::one(Arc::clone(group), modulus).scale(2)),
            ("σ", ModGroupRingElement::basis(Arc::clone(group), modulus, group.generators()[0], 1)),
        ];
        let mut report = Report::new();
        for (label, unit) in units {
            let x = hi.boundary_module().act_ring(&unit, hi.normed_xi())?;
            let lhs = lo.project_middle(&hi.lift_middle(&upper_map.lambda_boundary.apply(&x)));
            let normed = lo.project_boundary(&hi.lift_boundary(&x));
            let rhs = lo.module().act_ring(&factor, &lower_map.lambda_boundary.apply(&normed))?;
            report.push(Check::from_outcome(
                format!("norm relation of assembled Λ (L={layer}, l'={q}, u={label})"),
                lhs == rhs,
                format!("level {k}: Tr Λ_L'(uξ) = (1 - l'^n σ^-1)·Λ_L(N uξ)"),
                || format!("Tr side = {lhs:?}, Euler side = {rhs:?}"),
            ));
        }
        Ok(report)
    }

    /// The base-layer suite, the element checks at every layer, and all three
    /// norm-relation families at every step `L → L·l'`.
    pub fn run_suite(&self) -> Report {
        let mut report = self.scenario.run_suite();
        let k_max = self.spec().k_max;
        let mut absorb = |name: String, outcome: Result<Report>| match outcome {
            Ok(r) => report.extend(r),
            Err(e) => report.push(Check::fail(name, "error", e.to_string())),
        };
        for &layer in self.layers().iter().filter(|&&l| l != 1) {
            for k in 0..=k_max {
                absorb(format!("element (L={layer}, k={k})"), self.es_element(layer, k).map(|x| x.report));
            }
        }
        for (layer, q) in self.steps() {
            absorb(format!("norm relation without coefficients (L={layer}, l'={q})"), self.verify_es1(layer, q));
            for k in 1..=k_max {
                absorb(
                    format!("special-element relations (L={layer}, l'={q}, k={k})"),
                    self.verify_es2(layer, q, k, k_max),
                );
            }
            absorb(format!("assembled relations (L={layer}, l'={q})"), self.verify_es3(layer, q));
        }
        report
    }
}
