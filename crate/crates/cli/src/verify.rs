//! `verify` suites. Each suite expands its ranges into independent cases; a
//! case reruns on its own through the command line it records.

use std::collections::{BTreeMap, BTreeSet};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use stickelberger::checks::Check;
use stickelberger::cyclotomic_galois::AbelianFieldQ;
use stickelberger::exact_arith::{gcd, is_prime, prime_factors, unit_group};
use stickelberger::finite_field_k::check_quillen_identities;
use stickelberger::partial_zeta::verify_distribution_q;
use stickelberger::stickelberger::{
    character_check, check_congruence, check_integrality, q_table, verify_conductor_change,
    verify_tower_restriction, CongruenceGate, CongruenceScope, StickContext,
};

use crate::report::Batch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Restriction of Θ_n(b, f') to Q(μ_f) against the Euler-factor side.
    ConductorChange,
    /// Quillen's identities for F_q ⊂ F_{q^d} on K_{2m-1}.
    Quillen,
    /// Δ_{n+1} ≡ N(ab)^{n-m} Δ_{m+1} modulo w.
    Congruence,
    /// Denominators of Δ supported on primes dividing Nb.
    Integrality,
    /// χ(Θ) against generalized Bernoulli numbers.
    Character,
    /// The distribution relation between moduli f and l·f.
    Distribution,
    /// Restriction along F(μ_{l^{k+1}}) / F(μ_{l^k}).
    Tower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    /// The whole congruence modulus.
    Full,
    /// Only the primes of the modulus dividing f.
    Conductor,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// A single modulus (for conductor-change, the larger one).
    #[arg(long)]
    pub f: Option<u64>,
    /// Smallest modulus of a sweep.
    #[arg(long, default_value_t = 2)]
    pub fmin: u64,
    /// Largest modulus of a sweep.
    #[arg(long, default_value_t = 40)]
    pub fmax: u64,
    /// Restrict conductor-change to one divisor of f.
    #[arg(long)]
    pub divisor: Option<u64>,
    /// Auxiliary norms; values sharing a factor with the modulus are skipped.
    #[arg(long, value_delimiter = ',', default_values_t = [7u64, 11, 13])]
    pub b: Vec<u64>,
    /// Largest twist.
    #[arg(long, default_value_t = 4)]
    pub n: u32,
    /// Smallest twist.
    #[arg(long, default_value_t = 0)]
    pub nmin: u32,
    /// Lower twist of the congruence; 0 is the displayed form.
    #[arg(long, default_value_t = 0)]
    pub m: u32,
    #[arg(long, value_enum, default_value_t = Scope::Full)]
    pub scope: Scope,
    /// Primes l for distribution and tower.
    #[arg(long, value_delimiter = ',', default_values_t = [3u64])]
    pub l: Vec<u64>,
    /// Smallest tower level.
    #[arg(long, default_value_t = 0)]
    pub kmin: u32,
    /// Largest tower level.
    #[arg(long, default_value_t = 1)]
    pub kmax: u32,
    /// Single field size for quillen.
    #[arg(long)]
    pub q: Option<u64>,
    /// Largest prime power q for quillen.
    #[arg(long, default_value_t = 9)]
    pub qmax: u64,
    /// Extension degrees for quillen.
    #[arg(long, value_delimiter = ',', default_values_t = [2u64, 3])]
    pub degree: Vec<u64>,
    /// K-group indices (K_{2m-1}) for quillen.
    #[arg(long = "kdeg", value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    pub kdeg: Vec<u64>,
}

impl VerifyArgs {
    fn moduli(&self, lowest: u64) -> Vec<u64> {
        match self.f {
            Some(f) => vec![f],
            None => (self.fmin.max(lowest)..=self.fmax).collect(),
        }
    }

    fn twists(&self, lowest: u32) -> std::ops::RangeInclusive<u32> {
        self.nmin.max(lowest)..=self.n
    }

    fn norms(&self, f: u64) -> Vec<u64> {
        self.b.iter().copied().filter(|&b| gcd(b, f) == 1).collect()
    }

    fn suite_name(&self) -> String {
        self.suite.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

fn failed(name: String, e: impl std::fmt::Display) -> Check {
    Check::fail(name, "error", e.to_string())
}

fn cyclo(f: u64) -> Result<AbelianFieldQ, String> {
    AbelianFieldQ::cyclotomic(f).map_err(|e| e.to_string())
}

fn is_prime_power(q: u64) -> bool {
    let factors = prime_factors(q);
    factors.len() == 1 && is_prime(factors[0])
}

pub fn run(args: &VerifyArgs) -> Vec<Batch> {
    let suite = args.suite_name();
    let cmd = |tail: String| format!("stickel verify {suite} {tail}");
    match args.suite {
        Suite::ConductorChange => {
            let cases: Vec<(u64, u64, u64, u32)> = args
                .moduli(2)
                .into_iter()
                .flat_map(|big| {
                    let divisors: Vec<u64> = match args.divisor {
                        Some(d) => vec![d],
                        None => (2..=big).filter(|d| big % d == 0).collect(),
                    };
                    divisors.into_iter().map(move |small| (big, small))
                })
                .flat_map(|(big, small)| args.norms(big).into_iter().map(move |b| (big, small, b)))
                .flat_map(|(big, small, b)| args.twists(0).map(move |n| (big, small, b, n)))
                .collect();
            let moduli: BTreeSet<u64> = cases.iter().flat_map(|c| [c.0, c.1]).collect();
            let tables: BTreeMap<u64, _> = moduli
                .into_par_iter()
                .map(|f| (f, q_table(f, args.n).map_err(|e| e.to_string())))
                .collect();
            cases
                .par_iter()
                .map(|&(big, small, b, n)| {
                    let name = format!("conductor change f'={big} f={small} b={b} n={n}");
                    let check = match (&tables[&big], &tables[&small]) {
                        (Ok(tb), Ok(ts)) => verify_conductor_change(tb, ts, b, n).unwrap_or_else(|e| failed(name, e)),
                        (Err(e), _) | (_, Err(e)) => failed(name, e),
                    };
                    Batch::new(cmd(format!("--f {big} --divisor {small} --b {b} --nmin {n} --n {n}")), vec![check])
                })
                .collect()
        }
        Suite::Quillen => {
            let qs: Vec<u64> = match args.q {
                Some(q) => vec![q],
                None => (2..=args.qmax).filter(|&q| is_prime_power(q)).collect(),
            };
            let cases: Vec<(u64, u64, u64)> = qs
                .into_iter()
                .flat_map(|q| args.degree.iter().flat_map(move |&d| args.kdeg.iter().map(move |&m| (q, d, m))))
                .collect();
            cases
                .par_iter()
                .map(|&(q, d, m)| {
                    let checks = match check_quillen_identities(q, d, m) {
                        Ok(report) => report
                            .checks
                            .into_iter()
                            .map(|c| Check { name: format!("quillen q={q} degree={d} m={m}: {}", c.name), ..c })
                            .collect(),
                        Err(e) => vec![failed(format!("quillen q={q} degree={d} m={m}"), e)],
                    };
                    Batch::new(cmd(format!("--q {q} --degree {d} --kdeg {m}")), checks)
                })
                .collect()
        }
        Suite::Congruence => {
            let scope = match args.scope {
                Scope::Full => CongruenceScope::Full,
                Scope::Conductor => CongruenceScope::ConductorPrimes,
            };
            let scope_flag = if args.scope == Scope::Full { "" } else { " --scope conductor" };
            per_modulus(args, 2, |f, b| {
                let ctx = StickContext::from_table_q(
                    q_table(f, args.n.max(args.m) + 1).map_err(|e| e.to_string())?,
                    &cyclo(f)?,
                    b,
                    0,
                )
                .map_err(|e| e.to_string())?;
                let checks = args
                    .twists(1)
                    .map(|n| {
                        check_congruence(&ctx, n, args.m, CongruenceGate::Integrality, scope)
                            .unwrap_or_else(|e| failed(format!("congruence f={f} b={b} n={n}"), e))
                    })
                    .collect();
                Ok((format!("--f {f} --b {b} --nmin {} --n {} --m {}{scope_flag}", args.nmin, args.n, args.m), checks))
            })
            .into_iter()
            .map(|(tail, checks)| Batch::new(cmd(tail), checks))
            .collect()
        }
        Suite::Integrality => per_modulus(args, 2, |f, b| {
            let table = q_table(f, args.n).map_err(|e| e.to_string())?;
            let ctx = StickContext::from_table_q(table, &cyclo(f)?, b, 0).map_err(|e| e.to_string())?;
            let checks = args
                .twists(0)
                .map(|n| check_integrality(&ctx, n).unwrap_or_else(|e| failed(format!("integrality f={f} b={b} n={n}"), e)))
                .collect();
            Ok((format!("--f {f} --b {b} --nmin {} --n {}", args.nmin, args.n), checks))
        })
        .into_iter()
        .map(|(tail, checks)| Batch::new(cmd(tail), checks))
        .collect(),
        Suite::Character => per_modulus(args, 1, |f, b| {
            let field = cyclo(f)?;
            let mut checks = Vec::new();
            for n in args.twists(0) {
                match StickContext::over_q(&field, f, b, n).and_then(|ctx| character_check(&ctx)) {
                    Ok(report) => checks.extend(report.checks),
                    Err(e) => checks.push(failed(format!("character f={f} b={b} n={n}"), e)),
                }
            }
            Ok((format!("--f {f} --b {b} --nmin {} --n {}", args.nmin, args.n), checks))
        })
        .into_iter()
        .map(|(tail, checks)| Batch::new(cmd(tail), checks))
        .collect(),
        Suite::Distribution => {
            let cases: Vec<(u64, u64, u32)> = args
                .moduli(1)
                .into_iter()
                .flat_map(|f| args.l.iter().flat_map(move |&l| args.twists(0).map(move |n| (f, l, n))))
                .collect();
            cases
                .par_iter()
                .map(|&(f, l, n)| {
                    let name = format!("distribution f={f} l={l} n={n}");
                    let mut bad = Vec::new();
                    let units = unit_group(f);
                    for &a in &units {
                        match verify_distribution_q(f, l, n, a) {
                            Ok(true) => {}
                            Ok(false) => bad.push(format!("a={a}")),
                            Err(e) => bad.push(format!("a={a}: {e}")),
                        }
                    }
                    let check = Check::from_outcome(name, bad.is_empty(), format!("{} classes", units.len()), || {
                        format!("relation fails at {}", bad.join(", "))
                    });
                    Batch::new(cmd(format!("--f {f} --l {l} --nmin {n} --n {n}")), vec![check])
                })
                .collect()
        }
        Suite::Tower => {
            let cases: Vec<(u64, u64, u64, u32, u32)> = args
                .moduli(1)
                .into_iter()
                .flat_map(|f| args.l.iter().map(move |&l| (f, l)))
                .flat_map(|(f, l)| args.norms(f * l).into_iter().map(move |b| (f, l, b)))
                .flat_map(|(f, l, b)| args.twists(1).map(move |n| (f, l, b, n)))
                .flat_map(|(f, l, b, n)| (args.kmin..=args.kmax).map(move |k| (f, l, b, n, k)))
                .collect();
            cases
                .par_iter()
                .map(|&(f, l, b, n, k)| {
                    let name = format!("tower f={f} l={l} k={k} b={b} n={n}");
                    let check = cyclo(f)
                        .and_then(|field| verify_tower_restriction(&field, b, n, l, k).map_err(|e| e.to_string()))
                        .unwrap_or_else(|e| failed(name, e));
                    Batch::new(cmd(format!("--f {f} --l {l} --b {b} --nmin {n} --n {n} --kmin {k} --kmax {k}")), vec![check])
                })
                .collect()
        }
    }
}

/// One case per `(f, b)` with `b` prime to `f`.
fn per_modulus(
    args: &VerifyArgs,
    lowest: u64,
    case: impl Fn(u64, u64) -> Result<(String, Vec<Check>), String> + Sync,
) -> Vec<(String, Vec<Check>)> {
    let cases: Vec<(u64, u64)> =
        args.moduli(lowest).into_iter().flat_map(|f| args.norms(f).into_iter().map(move |b| (f, b))).collect();
    cases
        .par_iter()
        .map(|&(f, b)| {
            case(f, b).unwrap_or_else(|e| {
                (format!("--f {f} --b {b}"), vec![Check::fail(format!("f={f} b={b}"), "error", e)])
            })
        })
        .collect()
}
