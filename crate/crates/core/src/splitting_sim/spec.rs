//! Scenario documents. A scenario is a TOML table with one key per
//! parameter; unknown keys are rejected so typos surface as diagnostics.
//!
//! ```toml
//! modulus = 4        # F = Q(mu_modulus)^H
//! subgroup = []      # generators of H in (Z/modulus)^x
//! prime = 5          # the rational prime below v
//! l = 3
//! m = 1
//! n = 2
//! b = 7              # norm of the auxiliary ideal
//! k_max = 2
//! mode = "split"     # or "twisted"
//! extra = 2          # log_l bound on the synthetic kernel; 0 for none
//! div = 0            # log_l of the modelled divisible part
//! bound = 13         # family prime bound (Euler-system suite only)
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_arith::{gcd, is_prime};

/// Largest coefficient level accepted; the top field grows like `l^k_max`.
pub const MAX_LEVEL: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `M = A ⊕ B` with `∂` the projection.
    #[default]
    Split,
    /// `M` a non-split extension of `B` by `A`, presented through a cover of `B`.
    Twisted,
}

/// Deliberate defects used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    #[default]
    None,
    /// The transfer into the top coefficient level is doubled.
    CorruptTransfer,
    /// Euler factors use twist `n` where `m` belongs and vice versa.
    SwapEulerTwist,
    /// Euler factors read `1 + N(l')^t σ^{-1}`.
    WrongEulerSign,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub modulus: u64,
    #[serde(default)]
    pub subgroup: Vec<u64>,
    pub prime: u64,
    pub l: u64,
    pub m: u32,
    pub n: u32,
    pub b: u64,
    pub k_max: u32,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub extra: u32,
    #[serde(default)]
    pub div: u32,
    #[serde(default)]
    pub mutation: Mutation,
    /// Auxiliary primes are taken below this bound (Euler-system families).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
    /// Replaces the admissible primes found below `bound`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissible: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{0}")]
    Syntaxless(String),
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> SpecError {
    SpecError::Invalid { key, message: message.into() }
}

impl ScenarioSpec {
    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let spec: ScenarioSpec = toml::from_str(text).map_err(|e| match e.span() {
            Some(span) => {
                let before = &text[..span.start.min(text.len())];
                let line = before.matches('\n').count() + 1;
                let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                SpecError::Syntax { line, column, message: e.message().to_string() }
            }
            None => SpecError::Syntaxless(e.message().to_string()),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario specs serialize")
    }

    /// Hypotheses every scenario needs before any module is built.
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.modulus == 0 {
            return Err(invalid("modulus", "must be positive"));
        }
        if !is_prime(self.l) || self.l == 2 {
            return Err(invalid("l", format!("{} is not an odd prime", self.l)));
        }
        if !is_prime(self.prime) {
            return Err(invalid("prime", format!("{} is not prime", self.prime)));
        }
        if self.prime == self.l {
            return Err(invalid("prime", "must differ from l"));
        }
        if self.modulus % self.prime == 0 {
            return Err(invalid("prime", format!("{} ramifies in Q(mu_{})", self.prime, self.modulus)));
        }
        if self.m == 0 || self.n == 0 {
            return Err(invalid("m", "twists m and n must be at least 1"));
        }
        if self.m > 6 || self.n > 6 {
            return Err(invalid("n", "twists above 6 are out of range"));
        }
        if self.b < 2 || gcd(self.b, self.modulus * self.l) != 1 {
            return Err(invalid("b", format!("{} must be at least 2 and prime to l·modulus", self.b)));
        }
        if self.k_max == 0 || self.k_max > MAX_LEVEL {
            return Err(invalid("k_max", format!("must lie in 1..={MAX_LEVEL}")));
        }
        if self.extra > 8 {
            return Err(invalid("extra", "at most 8"));
        }
        if self.div > self.k_max {
            return Err(invalid("div", "cannot exceed k_max"));
        }
        if let Some(list) = &self.admissible {
            for &q in list {
                if !self.is_admissible(q) {
                    return Err(invalid("admissible", format!("{q} is not a prime prime to f·l·b·p")));
                }
            }
        }
        Ok(())
    }

    /// `q` prime and prime to `f·l·Nb·p`.
    pub fn is_admissible(&self, q: u64) -> bool {
        is_prime(q) && gcd(q, self.modulus * self.l * self.b * self.prime) == 1
    }

    /// Admissible auxiliary primes, from the override or from `bound`.
    pub fn auxiliary_primes(&self) -> Vec<u64> {
        match (&self.admissible, self.bound) {
            (Some(list), _) => {
                let mut list = list.clone();
                list.sort_unstable();
                list.dedup();
                list
            }
            (None, Some(bound)) => (2..=bound).filter(|&q| self.is_admissible(q)).collect(),
            (None, None) => Vec::new(),
        }
    }
}
