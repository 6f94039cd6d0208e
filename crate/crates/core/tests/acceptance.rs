//! Acceptance criteria 1–8, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the verdict lines always reach the
//! output. The process exits nonzero when a criterion fails for a reason
//! other than the recorded congruence conflict of criterion 4.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use stickelberger::checks::{Check, Report};
use stickelberger::cyclotomic_galois::{restriction_map, w_n_brute_force, AbelianFieldQ};
use stickelberger::euler_system::build_family;
use stickelberger::exact_arith::gcd;
use stickelberger::finite_field_k::check_quillen_identities;
use stickelberger::module_splitting::{
    check_splitting_pair, derive_gamma, derive_lambda, induced_four_term, random_case, verify_annihilation,
    SplittingPair,
};
use stickelberger::splitting_sim::{generate_scenario, Mode, Mutation, ScenarioSpec, SimError};
use stickelberger::stickelberger::{
    character_check, check_congruence, check_integrality, euler_factor_q, q_table, verify_conductor_change,
    CongruenceGate, CongruenceScope, StickContext,
};

const AUX: [u64; 3] = [7, 11, 13];

enum Verdict {
    Pass(String),
    Fail(String),
    /// A failure matching a documented conflict; reported as FAIL, not fatal.
    KnownFail(String),
}

struct Outcome {
    verdicts: Vec<(String, Verdict)>,
}

impl Outcome {
    fn single(label: &str, v: Verdict) -> Self {
        Outcome { verdicts: vec![(label.to_string(), v)] }
    }
}

fn pass_or_fail(ok: bool, detail: String, witness: impl FnOnce() -> String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; witness: {}", witness()))
    }
}

fn cyclo(f: u64) -> AbelianFieldQ {
    AbelianFieldQ::cyclotomic(f).expect("cyclotomic fields exist for every modulus")
}

fn first_failure(report: &Report) -> String {
    report.failures().next().map_or_else(|| "none".into(), Check::to_string)
}

fn worked_example() -> Outcome {
    let qi = cyclo(4);
    let q12 = cyclo(12);
    let theta4 = StickContext::over_q(&qi, 4, 7, 1).and_then(|c| c.theta());
    let theta12 = StickContext::over_q(&q12, 12, 7, 1).and_then(|c| c.theta());
    let (theta4, theta12) = match (theta4, theta12) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => return Outcome::single("", Verdict::Fail(format!("{:?} / {:?}", a.err(), b.err()))),
    };
    let label = |f: &AbelianFieldQ, c: &[i64]| -> Vec<(String, i64)> {
        f.group().labels().iter().cloned().zip(c.iter().copied()).collect()
    };
    let as_ints = |e: &stickelberger::stickelberger::GroupRingElement| -> Option<Vec<i64>> {
        e.coefficients().iter().map(|c| c.is_integer().then(|| c.to_integer().try_into().ok()).flatten()).collect()
    };
    let got4 = as_ints(&theta4).map(|c| label(&qi, &c));
    let got12 = as_ints(&theta12).map(|c| label(&q12, &c));
    let want4 = label(&qi, &[2, 2]);
    let want12 = label(&q12, &[-27, 23, 23, -27]);
    let restricted = match restriction_map(&q12, &qi) {
        Ok(hom) => theta12.restrict(&hom),
        Err(e) => return Outcome::single("", Verdict::Fail(e.to_string())),
    };
    let euler_side = match euler_factor_q(&qi, 3, 1) {
        Ok(e) => &e * &theta4,
        Err(e) => return Outcome::single("", Verdict::Fail(e.to_string())),
    };
    let restricted_ints = as_ints(&restricted).map(|c| label(&qi, &c));
    let ok = got4.as_ref() == Some(&want4)
        && got12.as_ref() == Some(&want12)
        && restricted == euler_side
        && restricted_ints == Some(label(&qi, &[-4, -4]));
    Outcome::single(
        "",
        pass_or_fail(ok, format!("Θ_1(7,4) = {theta4}; Θ_1(7,12) = {theta12}; restriction = {restricted}"), || {
            format!("(1 − 3σ_3)·Θ_1(7,4) = {euler_side}")
        }),
    )
}

fn conductor_change_sweep() -> Outcome {
    let tables: Vec<_> = (2..=120u64).map(|f| q_table(f, 4).expect("tables build for f ≥ 1")).collect();
    let table = |f: u64| Arc::clone(&tables[(f - 2) as usize]);
    let cases: Vec<(u64, u64, u64, u32)> = (2..=120u64)
        .flat_map(|big| (2..=big).filter(move |d| big % d == 0).map(move |small| (big, small)))
        .flat_map(|(big, small)| AUX.into_iter().filter(move |&b| gcd(b, big) == 1).map(move |b| (big, small, b)))
        .flat_map(|(big, small, b)| (0..=4u32).map(move |n| (big, small, b, n)))
        .collect();
    let results: Vec<Result<Check, String>> = cases
        .par_iter()
        .map(|&(big, small, b, n)| verify_conductor_change(&table(big), &table(small), b, n).map_err(|e| e.to_string()))
        .collect();
    let failures: Vec<String> = results
        .iter()
        .filter_map(|r| match r {
            Ok(c) if c.passed() => None,
            Ok(c) => Some(c.to_string()),
            Err(e) => Some(e.clone()),
        })
        .collect();
    Outcome::single(
        "",
        pass_or_fail(failures.is_empty(), format!("{} instances", cases.len()), || {
            format!("{} failures, first {}", failures.len(), failures[0])
        }),
    )
}

fn character_oracle() -> Outcome {
    let cases: Vec<(u64, u64, u32)> = (1..=40u64)
        .flat_map(|f| AUX.into_iter().filter(move |&b| gcd(b, f) == 1).map(move |b| (f, b)))
        .flat_map(|(f, b)| (0..=4u32).map(move |n| (f, b, n)))
        .collect();
    let reports: Vec<Result<Report, String>> = cases
        .par_iter()
        .map(|&(f, b, n)| {
            StickContext::over_q(&cyclo(f), f, b, n).and_then(|ctx| character_check(&ctx)).map_err(|e| e.to_string())
        })
        .collect();
    let mut characters = 0;
    let mut failures = Vec::new();
    for (case, r) in cases.iter().zip(reports) {
        match r {
            Ok(report) => {
                characters += report.checks.len();
                if !report.ok() {
                    failures.push(format!("{case:?}: {}", first_failure(&report)));
                }
            }
            Err(e) => failures.push(format!("{case:?}: {e}")),
        }
    }
    Outcome::single(
        "",
        pass_or_fail(failures.is_empty(), format!("{} (f, b, n) triples, {characters} characters", cases.len()), || {
            format!("{} failures, first {}", failures.len(), failures[0])
        }),
    )
}

/// Integrality, and the displayed congruence modulo `w_n(Q(μ_f))`. The full
/// congruence is expected to fail exactly at primes of `w_n` not dividing
/// `f`; that outcome is printed as FAIL but is not fatal.
fn deligne_ribet() -> Outcome {
    let cases: Vec<(u64, u64)> =
        (2..=40u64).flat_map(|f| AUX.into_iter().filter(move |&b| gcd(b, f) == 1).map(move |b| (f, b))).collect();
    struct Tally {
        integrality: Vec<Check>,
        full: Vec<Check>,
        conductor: Vec<Check>,
    }
    let tallies: Vec<Result<Tally, String>> = cases
        .par_iter()
        .map(|&(f, b)| {
            let run = || -> Result<Tally, stickelberger::stickelberger::StickError> {
                let ctx = StickContext::from_table_q(q_table(f, 4)?, &cyclo(f), b, 0)?;
                let mut t = Tally { integrality: vec![], full: vec![], conductor: vec![] };
                for n in 0..=4 {
                    t.integrality.push(check_integrality(&ctx, n)?);
                    t.full.push(check_congruence(&ctx, n, 0, CongruenceGate::Modulus, CongruenceScope::Full)?);
                    t.conductor.push(check_congruence(
                        &ctx,
                        n,
                        0,
                        CongruenceGate::Modulus,
                        CongruenceScope::ConductorPrimes,
                    )?);
                }
                Ok(t)
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let mut integrality = (0, Vec::new());
    let mut full = (0, 0, Vec::new());
    let mut conductor = (0, 0, Vec::new());
    for t in tallies {
        let t = match t {
            Ok(t) => t,
            Err(e) => return Outcome::single("", Verdict::Fail(e)),
        };
        for c in t.integrality {
            integrality.0 += 1;
            if !c.passed() {
                integrality.1.push(c.to_string());
            }
        }
        tally(&mut full, t.full);
        tally(&mut conductor, t.conductor);
    }
    let integral = pass_or_fail(integrality.1.is_empty(), format!("{} Δ tables", integrality.0), || {
        integrality.1[0].clone()
    });
    let conductor_verdict = pass_or_fail(
        conductor.2.is_empty(),
        format!("{} congruences hold at the primes of f, {} N/A", conductor.0, conductor.1),
        || conductor.2[0].clone(),
    );
    let full_detail = format!("{} hold, {} N/A, {} fail", full.0, full.1, full.2.len());
    let full_verdict = match (full.2.first(), &conductor_verdict) {
        (None, _) => Verdict::Pass(full_detail),
        // Every failure lies at a prime of w not dividing f: the conflict recorded in the ledger.
        (Some(w), Verdict::Pass(_)) => {
            Verdict::KnownFail(format!("{full_detail}, all at primes of w_n not dividing f; witness: {w}"))
        }
        (Some(w), _) => Verdict::Fail(format!("{full_detail}; witness: {w}")),
    };
    Outcome {
        verdicts: vec![
            ("integrality".into(), integral),
            ("congruence mod w_n(Q(μ_f))".into(), full_verdict),
            ("congruence at primes dividing f".into(), conductor_verdict),
        ],
    }
}

/// `(passed, not applicable, failures)`.
fn tally(slot: &mut (usize, usize, Vec<String>), checks: Vec<Check>) {
    for c in checks {
        if c.passed() {
            slot.0 += 1;
        } else if c.failed() {
            slot.2.push(c.to_string());
        } else {
            slot.1 += 1;
        }
    }
}

fn w_values() -> Outcome {
    let cases = [("w_1(Q)", AbelianFieldQ::rationals(), 1u64, 2u64), ("w_2(Q)", AbelianFieldQ::rationals(), 2, 24), (
        "w_1(Q(i))",
        cyclo(4),
        1,
        4,
    )];
    let mut parts = Vec::new();
    let mut bad = Vec::new();
    for (name, field, n, want) in cases {
        let scanned = field.w_n(n);
        let brute = w_n_brute_force(&field, n, 200);
        parts.push(format!("{name} = {scanned}"));
        if scanned != want || brute != want {
            bad.push(format!("{name}: prime scan {scanned}, search over m ≤ 200 gives {brute}, expected {want}"));
        }
    }
    Outcome::single("", pass_or_fail(bad.is_empty(), parts.join(", "), || bad.join("; ")))
}

fn quillen_suite() -> Outcome {
    let cases: Vec<(u64, u64, u64)> = [2u64, 3, 4, 5, 7, 8, 9]
        .into_iter()
        .flat_map(|q| [2u64, 3].into_iter().flat_map(move |f| [1u64, 2, 3].into_iter().map(move |m| (q, f, m))))
        .collect();
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|&(q, f, m)| match check_quillen_identities(q, f, m) {
            Ok(r) if r.ok() => None,
            Ok(r) => Some(format!("q={q} f={f} m={m}: {}", first_failure(&r))),
            Err(e) => Some(format!("q={q} f={f} m={m}: {e}")),
        })
        .collect();
    Outcome::single(
        "",
        pass_or_fail(failures.is_empty(), format!("{} (q, f, m) triples exhaustively", cases.len()), || {
            failures[0].clone()
        }),
    )
}

fn splitting_suite() -> Outcome {
    let results: Vec<Result<bool, String>> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let case = random_case(seed);
            let err = |e: stickelberger::module_splitting::ModuleError| format!("seed {seed}: {e}");
            let gamma = derive_gamma(&case.seq, &case.scalar, &case.lambda).map_err(err)?;
            let lambda = derive_lambda(&case.seq, &case.scalar, &gamma).map_err(err)?;
            if !lambda.equals(&case.lambda) {
                return Err(format!("seed {seed}: Λ → Γ → Λ does not return the original Λ"));
            }
            let pair = SplittingPair { lambda, gamma, scalar: case.scalar.clone() };
            let report = check_splitting_pair(&case.seq, &pair, seed).map_err(err)?;
            if !report.ok() {
                return Err(format!("seed {seed}: {}", first_failure(&report)));
            }
            let (four, lambda4) = induced_four_term(&case, seed).map_err(err)?;
            if !verify_annihilation(&four, &case.scalar, &lambda4).map_err(err)? {
                return Err(format!("seed {seed}: r does not annihilate D"));
            }
            Ok(case.seq.a().log_order() > 0 && case.seq.c().log_order() > 0 && !case.lambda.is_zero())
        })
        .collect();
    let failures: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let nontrivial = results.iter().filter(|r| matches!(r, Ok(true))).count();
    Outcome::single(
        "",
        pass_or_fail(failures.is_empty(), format!("200 sequences, {nontrivial} with A, C and Λ all nonzero"), || {
            format!("{} failures, first {}", failures.len(), failures[0])
        }),
    )
}

/// Base fields with `l = 3`: `(modulus, prime, b)`. Modulus 3 has `l | f`, so
/// `γ_l = 1` there; the others carry a nontrivial `γ_l`.
const BASES: [(u64, u64, u64); 5] = [(4, 5, 7), (4, 13, 7), (4, 7, 11), (3, 7, 11), (3, 13, 7)];
/// `(m, n)` with `n − m ∈ {−1, 0, 1, 2}`.
const TWISTS: [(u32, u32); 8] = [(2, 1), (1, 1), (1, 2), (1, 3), (3, 2), (2, 2), (2, 3), (2, 4)];

fn scenario_spec(index: usize) -> ScenarioSpec {
    let (modulus, prime, b) = BASES[index % BASES.len()];
    let (m, n) = TWISTS[index % TWISTS.len()];
    ScenarioSpec {
        modulus,
        subgroup: vec![],
        prime,
        l: 3,
        m,
        n,
        b,
        k_max: 2,
        mode: if (index / 2) % 2 == 0 { Mode::Split } else { Mode::Twisted },
        extra: 1 + (index % 3) as u32,
        // For odd n the augmentation of Θ_n is a unit mod 3 at these bases, so a
        // divisible part is only modelled for even n.
        div: u32::from(n % 2 == 0 && index % 3 == 0),
        mutation: Mutation::None,
        bound: None,
        admissible: None,
    }
}

/// An auxiliary prime admissible for `spec`, for a two-layer family.
fn auxiliary_prime(spec: &ScenarioSpec) -> u64 {
    [11u64, 13, 17, 19].into_iter().find(|&q| spec.is_admissible(q)).expect("one of four primes is admissible")
}

/// Smallest `k_max ≥ 2` leaving room above `k(v)` at every layer.
fn fit_levels(spec: &mut ScenarioSpec, k_v: u32) {
    spec.k_max = spec.k_max.max(k_v + 1);
}

struct SimRun {
    checks: usize,
    layers: usize,
    twisted: bool,
    gamma_nontrivial: bool,
    failure: Option<String>,
}

fn run_scenario(index: usize) -> SimRun {
    let mut spec = scenario_spec(index);
    let family = index % 5 == 4;
    if family {
        spec.admissible = Some(vec![auxiliary_prime(&spec)]);
    }
    let seed = 1000 + index as u64;
    let description = format!("#{index} (seed {seed}): {}", spec.to_toml().replace('\n', " "));
    let outcome = (|| -> Result<(Report, usize), SimError> {
        if family {
            let probe = build_family(&spec, seed)?;
            let degrees: Vec<u32> =
                probe.layers().iter().map(|&l| probe.scenario().local_degree(l).map(|d| d.1)).collect::<Result<_, _>>()?;
            let k_v = degrees.into_iter().max().unwrap_or(0);
            fit_levels(&mut spec, k_v);
            let family = build_family(&spec, seed)?;
            Ok((family.run_suite(), family.layers().len()))
        } else {
            let probe = generate_scenario(&spec, seed)?;
            fit_levels(&mut spec, probe.local_degree(1)?.1);
            Ok((generate_scenario(&spec, seed)?.run_suite(), 1))
        }
    })();
    let twisted = spec.mode == Mode::Twisted;
    let gamma_nontrivial = spec.modulus % spec.l != 0;
    match outcome {
        Ok((report, layers)) => SimRun {
            checks: report.checks.len(),
            layers,
            twisted,
            gamma_nontrivial,
            failure: (!report.ok()).then(|| format!("{description}: {}", first_failure(&report))),
        },
        Err(e) => SimRun { checks: 0, layers: 0, twisted, gamma_nontrivial, failure: Some(format!("{description}: {e}")) },
    }
}

/// A mutation must produce at least one FAIL, and every FAIL must carry a
/// witness. Both controls use configurations where the mutated map is
/// nonzero: `p = 5` over `Q(i)` with `(m, n) = (1, 2)` for the transfer, and
/// `p = 13` with `l' = 11` for the Euler factors.
fn mutation_control(mutation: Mutation) -> Verdict {
    let base = ScenarioSpec { mode: Mode::Split, extra: 2, div: 0, mutation, ..scenario_spec(2) };
    let report = if mutation == Mutation::CorruptTransfer {
        generate_scenario(&ScenarioSpec { prime: 5, b: 7, ..base }, 5).map(|s| s.run_suite())
    } else {
        build_family(&ScenarioSpec { prime: 13, b: 7, admissible: Some(vec![11]), ..base }, 1).map(|f| f.run_suite())
    };
    match report {
        Ok(report) => {
            let failures: Vec<&Check> = report.failures().collect();
            let witnessed = failures.iter().all(|c| c.witness.is_some());
            match failures.first() {
                Some(first) if witnessed => {
                    Verdict::Pass(format!("detected by {} checks; first: {first}", failures.len()))
                }
                Some(_) => Verdict::Fail("a failing check carries no witness".into()),
                None => Verdict::Fail(format!("{mutation:?} passed every check")),
            }
        }
        Err(e) => Verdict::Fail(format!("{mutation:?} could not be built: {e}")),
    }
}

fn simulator_suite() -> Outcome {
    let runs: Vec<SimRun> = (0..50).into_par_iter().map(run_scenario).collect();
    let failures: Vec<&String> = runs.iter().filter_map(|r| r.failure.as_ref()).collect();
    let checks: usize = runs.iter().map(|r| r.checks).sum();
    let families = runs.iter().filter(|r| r.layers == 2).count();
    let twisted = runs.iter().filter(|r| r.twisted).count();
    let gamma = runs.iter().filter(|r| r.gamma_nontrivial).count();
    let detail = format!(
        "50 scenarios ({twisted} twisted, {gamma} with γ_l ≠ 1, {families} two-layer families), {checks} checks"
    );
    let main = pass_or_fail(failures.is_empty(), detail, || format!("{} failures, first {}", failures.len(), failures[0]));
    Outcome {
        verdicts: vec![
            ("scenarios".into(), main),
            ("control: corrupted transfer".into(), mutation_control(Mutation::CorruptTransfer)),
            ("control: Euler twist m↔n".into(), mutation_control(Mutation::SwapEulerTwist)),
        ],
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("worked Stickelberger example", Duration::from_secs(1), worked_example),
        ("conductor-change sweep f' ≤ 120", Duration::from_secs(120), conductor_change_sweep),
        ("character oracle f ≤ 40", Duration::MAX, character_oracle),
        ("Deligne–Ribet integrality and congruence", Duration::MAX, deligne_ribet),
        ("w_n values", Duration::from_secs(5), w_values),
        ("Quillen identities", Duration::from_secs(30), quillen_suite),
        ("splitting-pair property suite", Duration::MAX, splitting_suite),
        ("splitting simulator and Euler families", Duration::from_secs(600), simulator_suite),
    ];
    let mut fatal = 0;
    for (i, (title, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over_budget = elapsed > budget;
        for (part, verdict) in outcome.verdicts {
            let name = if part.is_empty() { title.to_string() } else { format!("{title}: {part}") };
            let (status, detail) = match &verdict {
                Verdict::Pass(d) if !over_budget => ("PASS", d.clone()),
                Verdict::Pass(d) => ("FAIL", format!("{d}; exceeded the {budget:?} budget")),
                Verdict::Fail(d) => ("FAIL", d.clone()),
                Verdict::KnownFail(d) => ("FAIL", format!("{d} (recorded conflict, not fatal)")),
            };
            if status == "FAIL" && !matches!(verdict, Verdict::KnownFail(_)) {
                fatal += 1;
            }
            println!("criterion {} {status} [{:.2}s] {name}: {detail}", i + 1, elapsed.as_secs_f64());
        }
    }
    if fatal == 0 {
        println!("acceptance: no unexpected failures");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {fatal} unexpected failures");
        ExitCode::FAILURE
    }
}
