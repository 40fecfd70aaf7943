//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed.

use std::f64::consts::{PI, TAU};
use std::process::Command;
use std::time::Instant;

use qproj_core::circuit;
use qproj_core::costmodel::{self, Stage};
use qproj_core::grover::{self, GameInstance, MeasureOrder, PhaseAverage, Strategy, PRE_MEASURE};
use qproj_core::measure::{self, DensityMatrix, ProjectionOperator};
use qproj_core::qstate::{compare_up_to_global_phase, state_from_terms};
use qproj_core::shor::{self, Discipline};
use qproj_core::{rng_from_seed, Complex64, RegisterLayout};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn phi(r: u64) -> u64 {
    (1..=r).filter(|&j| gcd(j, r) == 1).count() as u64
}

/// `P(c) = Σ_f̄ |(1/N) Σ_{x : f(x) = f̄} e^{2πicx/N}|²` by direct summation.
fn brute_force_distribution(n: usize, f: impl Fn(u64) -> u64) -> Vec<f64> {
    let big_n = 1u64 << n;
    let mut probs = vec![0.0; big_n as usize];
    for (c, slot) in probs.iter_mut().enumerate() {
        for f_bar in 0..big_n {
            let mut amp = Complex64::new(0.0, 0.0);
            for x in (0..big_n).filter(|&x| f(x) == f_bar) {
                amp += Complex64::from_polar(1.0, TAU * (c as u64 * x) as f64 / big_n as f64);
            }
            *slot += (amp / big_n as f64).norm_sqr();
        }
    }
    probs
}

fn dividing_periods(max_n: usize) -> impl Iterator<Item = (usize, u64)> {
    (1..=max_n).flat_map(|n| (0..=n).map(move |e| (n, 1u64 << e)))
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn criterion_1() -> Outcome {
    let layout = RegisterLayout::new([("X", 2), ("F", 1)]).map_err(|e| e.to_string())?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut worst_state = 0.0f64;
    let mut worst_prob = 0.0f64;
    for k in 0..4u64 {
        let expected = state_from_terms(
            &layout,
            &[(vec![("X", k), ("F", 0)], c(h)), (vec![("X", k), ("F", 1)], c(-h))],
        )
        .map_err(|e| e.to_string())?;
        let inst = GameInstance::new(4, k).map_err(|e| e.to_string())?;
        let (pre, t) = grover::run_standard_grover(&inst, &mut rng_from_seed(k)).map_err(|e| e.to_string())?;
        let d = compare_up_to_global_phase(&pre, &expected)
            .map_err(|e| e.to_string())?
            .value;
        let dist = circuit::exact_distribution(&grover::standard_program(&inst).map_err(|e| e.to_string())?, &["X"])
            .map_err(|e| e.to_string())?;
        worst_state = worst_state.max(d);
        worst_prob = worst_prob.max((dist.prob(k) - 1.0).abs());
        ensure(t.answered_x == k, || {
            format!("k={k:02b}: answered {:02b}", t.answered_x)
        })?;
        ensure(t.oracle_queries == 1, || {
            format!("k={k:02b}: {} queries", t.oracle_queries)
        })?;
    }
    ensure(worst_state < 1e-10, || format!("state distance {worst_state:.3e}"))?;
    ensure(worst_prob < 1e-12, || format!("|P(x=k) - 1| = {worst_prob:.3e}"))?;
    Ok(format!(
        "state distance {worst_state:.1e}, |P(x=k) - 1| {worst_prob:.1e}"
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = rng_from_seed(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let phases: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..TAU)).collect();
        for order in [MeasureOrder::KFirst, MeasureOrder::XFirst] {
            let program = grover::extended_program(4, &phases, order).map_err(|e| e.to_string())?;
            let pre = circuit::unitary_state_at(&program, PRE_MEASURE).map_err(|e| e.to_string())?;
            // measurement-order symmetry checked on the state itself, by exact branching
            let seq = measure::sequential_distribution(&pre, &order.registers()).map_err(|e| e.to_string())?;
            let enumerated = circuit::exact_distribution(&program, &["K", "X"]).map_err(|e| e.to_string())?;
            for k in 0..4u64 {
                for x in 0..4u64 {
                    let want = if k == x { 0.25 } else { 0.0 };
                    let (a, b) = order_values(order, k, x);
                    worst = worst.max((seq.prob_of(&[a, b]) - want).abs());
                    worst = worst.max((enumerated.prob_of(&[k, x]) - want).abs());
                }
            }
        }
    }
    ensure(worst < 1e-10, || {
        format!("max deviation from diagonal-uniform {worst:.3e}")
    })?;
    Ok(format!("100 phase draws x 2 orders, max deviation {worst:.1e}"))
}

fn order_values(order: MeasureOrder, k: u64, x: u64) -> (u64, u64) {
    match order {
        MeasureOrder::KFirst => (k, x),
        MeasureOrder::XFirst => (x, k),
    }
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (n, r) in dividing_periods(6) {
        let inst = shor::build_periodic(n, r).map_err(|e| e.to_string())?;
        let dists: Vec<_> = Discipline::ALL
            .iter()
            .map(|&d| shor::exact_x_distribution(&inst, d))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for i in 0..dists.len() {
            for j in i + 1..dists.len() {
                worst = worst.max(dists[i].total_variation(&dists[j]).map_err(|e| e.to_string())?.value);
            }
        }
        let measured = shor::fig1_program(&inst, true).map_err(|e| e.to_string())?;
        let deferred = circuit::defer_measurements(&measured).map_err(|e| e.to_string())?;
        worst = worst.max(
            circuit::equivalent_distributions(&measured, &deferred, &["X"])
                .map_err(|e| e.to_string())?
                .value,
        );
        count += 1;
    }
    ensure(worst < 1e-10, || format!("max TV {worst:.3e}"))?;
    Ok(format!("{count} instances, max TV {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut instances = Vec::new();
    for n in 1..=5usize {
        for r in 1..=1u64 << n {
            instances.push(shor::build_periodic(n, r).map_err(|e| e.to_string())?);
        }
    }
    instances.push(shor::build_modexp(7, 15, 4).map_err(|e| e.to_string())?);
    instances.push(shor::build_modexp(2, 21, 5).map_err(|e| e.to_string())?);
    let mut worst = 0.0f64;
    let mut outcomes = 0;
    for inst in &instances {
        let program = shor::fig1_program(inst, false).map_err(|e| e.to_string())?;
        let t2 = shor::t2_state(inst).map_err(|e| e.to_string())?;
        let dist = measure::outcome_distribution(&t2, "F").map_err(|e| e.to_string())?;
        for f_bar in dist.support(0.0) {
            let back = circuit::backdate_outcome(&program, "F", f_bar).map_err(|e| e.to_string())?;
            let direct = measure::project(&t2, &ProjectionOperator::new("F", f_bar)).map_err(|e| e.to_string())?;
            worst = worst.max(
                compare_up_to_global_phase(&back, &direct)
                    .map_err(|e| e.to_string())?
                    .value,
            );
            outcomes += 1;
        }
    }
    ensure(worst < 1e-10, || format!("max distance {worst:.3e}"))?;
    Ok(format!(
        "{} instances, {outcomes} outcomes, max distance {worst:.1e}",
        instances.len()
    ))
}

fn criterion_5() -> Outcome {
    let inst = shor::build_periodic(3, 4).map_err(|e| e.to_string())?;
    let dist = shor::exact_x_distribution(&inst, Discipline::SkipF).map_err(|e| e.to_string())?;
    for cc in 0..8u64 {
        let want = if cc % 2 == 0 { 0.25 } else { 0.0 };
        ensure((dist.prob(cc) - want).abs() < 1e-12, || {
            format!("n=3 r=4: P({cc}) = {}", dist.prob(cc))
        })?;
    }
    let p34 = shor::single_run_success_probability(&inst).map_err(|e| e.to_string())?;
    ensure((p34 - 0.5).abs() < 1e-12 && phi(4) * 2 == 4, || {
        format!("n=3 r=4 success {p34}")
    })?;

    let mut worst = 0.0f64;
    let mut good = Vec::new();
    for (n, r) in dividing_periods(6).filter(|&(_, r)| r >= 2) {
        let inst = shor::build_periodic(n, r).map_err(|e| e.to_string())?;
        let exact = shor::single_run_success_probability(&inst).map_err(|e| e.to_string())?;
        let law = phi(r) as f64 / r as f64;
        let big_n = 1u64 << n;
        let oracle_dist = brute_force_distribution(n, |x| x % r);
        // c/N in lowest terms has denominator N / gcd(c, N)
        let oracle: f64 = (1..big_n)
            .filter(|&cc| big_n / gcd(cc, big_n) == r)
            .map(|cc| oracle_dist[cc as usize])
            .sum();
        let simulated = shor::exact_x_distribution(&inst, Discipline::SkipF).map_err(|e| e.to_string())?;
        for (a, b) in simulated.probabilities.iter().zip(&oracle_dist) {
            worst = worst.max((a - b).abs());
        }
        worst = worst.max((exact - law).abs()).max((oracle - law).abs());
        if law >= 0.5 {
            good.push(format!("(n={n},r={r})"));
        }
    }
    ensure(worst < 1e-12, || {
        format!("max deviation from phi(r)/r or oracle {worst:.3e}")
    })?;
    Ok(format!(
        "P = phi(r)/r for every r | N, n <= 6 (max deviation {worst:.1e}); phi(r)/r >= 0.5 at {}",
        good.join(" ")
    ))
}

fn criterion_6() -> Outcome {
    let angle: f64 = 0.6;
    let target = DensityMatrix::diagonal(&[angle.sin().powi(2), angle.cos().powi(2)]);
    let m = measure::two_state_mixture(angle);
    let analytic = measure::analytic_density(&m)
        .and_then(|rho| rho.frobenius_distance(&target))
        .map_err(|e| e.to_string())?
        .value;
    let mc = measure::average_density(&m, 100_000, &mut rng_from_seed(6))
        .and_then(|rho| rho.frobenius_distance(&target))
        .map_err(|e| e.to_string())?
        .value;
    ensure(analytic < 1e-10, || format!("two-state analytic {analytic:.3e}"))?;
    ensure(mc < 5e-3, || format!("two-state Monte Carlo {mc:.3e}"))?;
    let mut worst = 0.0f64;
    for n in 1..=5usize {
        for r in 1..=1u64 << n {
            let t2 =
                shor::t2_state(&shor::build_periodic(n, r).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let mix = measure::phased_mixture_from_state(&t2, "F").map_err(|e| e.to_string())?;
            let d = measure::analytic_density(&mix)
                .and_then(|rho| rho.frobenius_distance(&measure::partial_trace(&t2, &["X"])?))
                .map_err(|e| e.to_string())?
                .value;
            worst = worst.max(d);
        }
    }
    ensure(worst < 1e-10, || format!("t2 mixture vs partial trace {worst:.3e}"))?;
    let k_analytic = grover::mixture_equivalence_check(4, PhaseAverage::Analytic)
        .map_err(|e| e.to_string())?
        .value;
    let k_corr = grover::mixture_equivalence_check(4, PhaseAverage::Correlated)
        .map_err(|e| e.to_string())?
        .value;
    ensure(k_analytic < 1e-10 && k_corr > 0.1, || {
        format!("K register {k_analytic:.3e} / {k_corr:.3}")
    })?;
    Ok(format!(
        "analytic {analytic:.1e}, Monte Carlo {mc:.1e} at 1e5, t2 vs partial trace {worst:.1e}"
    ))
}

fn criterion_7() -> Outcome {
    let ns: Vec<usize> = (2..=10).collect();
    let table = costmodel::stage_table(&ns).map_err(|e| e.to_string())?;
    ensure(table.all_passed(), || "growth check failed".into())?;
    let mut last_ratio = 0.0;
    for &n in &ns {
        let row = |s| table.get(n, s).expect("row present");
        ensure(row(Stage::FunctionEvaluation).classical_units == 1 << n, || {
            format!("n={n} classical I")
        })?;
        ensure(row(Stage::Filtration).classical_units == 1 << n, || {
            format!("n={n} classical II")
        })?;
        ensure(row(Stage::Filtration).quantum_units == n as u64, || {
            format!("n={n} quantum II")
        })?;
        let ratio = row(Stage::Filtration).classical_units as f64 / row(Stage::Filtration).quantum_units as f64;
        ensure(ratio > last_ratio, || format!("n={n}: ratio {ratio} not increasing"))?;
        last_ratio = ratio;
        let counts: Vec<u64> = (1..=1u64 << n)
            .map(|r| shor::build_periodic(n, r).map(|i| costmodel::quantum_step_cost(&i, Stage::Filtration)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure(counts.iter().all(|&q| q == n as u64), || {
            format!("n={n}: quantum II depends on r")
        })?;
    }
    Ok("n = 2..10: 2^n classical, n quantum, ratio increasing, independent of r".into())
}

fn criterion_8() -> Outcome {
    for n in [4u64, 16, 64, 256] {
        let side = (n as f64).sqrt() as u64;
        let joint = grover::classical_worst_case(n, Strategy::Joint).map_err(|e| e.to_string())?;
        let alone = grover::classical_worst_case(n, Strategy::Unilateral).map_err(|e| e.to_string())?;
        ensure(joint == side, || format!("n={n}: joint worst case {joint}"))?;
        ensure(alone == n, || format!("n={n}: unilateral worst case {alone}"))?;
        let quantum = qproj_core::gates::grover_iterations(n) as u64;
        ensure(quantum == ((PI / 4.0) * side as f64).floor() as u64, || {
            format!("n={n}: {quantum} iterations")
        })?;
    }
    let t = grover::run_classical_game(&GameInstance::new(4, 0b10).map_err(|e| e.to_string())?, Strategy::Joint)
        .map_err(|e| e.to_string())?;
    ensure(t.announced_row == Some(1), || format!("row {:?}", t.announced_row))?;
    ensure(t.answered_x == 0b10 && t.oracle_queries <= 2, || format!("{t:?}"))?;
    Ok(format!(
        "worst cases sqrt(n) and n for n in {{4,16,64,256}}; drawer 10: row 1 announced, found in {} queries",
        t.oracle_queries
    ))
}

fn criterion_9() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_qproj"))
        .args(["--selftest", "--json", "--seed", "9"])
        .output()
        .map_err(|e| e.to_string())?;
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let names: Vec<String> = report["suites"]
        .as_array()
        .into_iter()
        .flatten()
        .flat_map(|s| s["checks"].as_array().cloned().unwrap_or_default())
        .map(|c| c["name"].as_str().unwrap_or_default().to_string())
        .collect();
    for needed in [
        "projector idempotence and completeness",
        "Born sampling chi-square",
        "filtration support law",
        "unitarity of \"qft\"",
    ] {
        ensure(names.iter().any(|n| n == needed), || {
            format!("suite check {needed:?} missing")
        })?;
    }
    ensure(out.status.success() && report["passed"] == true, || {
        String::from_utf8_lossy(&out.stdout).into_owned()
    })?;
    Ok(format!("{} checks green", names.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 grover n=4 exactness", criterion_1),
        ("2 joint determination", criterion_2),
        ("3 deferred-measurement equivalence", criterion_3),
        ("4 backdating equivalence", criterion_4),
        ("5 period-finding support and success", criterion_5),
        ("6 random-phase representation", criterion_6),
        ("7 cost-model stage table", criterion_7),
        ("8 classical game", criterion_8),
        ("9 property suites under --selftest", criterion_9),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name} [{secs:.2}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} [{secs:.2}s]: {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
