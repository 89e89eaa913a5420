//! End-to-end acceptance checks. Runs as a plain binary (`harness = false`)
//! so every criterion prints exactly one PASS/FAIL line under `cargo test`.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use twoway_core::analysis::bb84_threshold;
use twoway_core::harness::emit::to_json_string;
use twoway_core::harness::{
    exact_round_distribution, run_simulation, sweep, AttackKind, OracleReport, Report, RunConfig,
};
use twoway_core::protocol::{play_lm05, AliceChoice, Lm05Choices};
use twoway_core::qubit::{apply_single, measure, prepare};
use twoway_core::rng::ScriptedDraws;
use twoway_core::{
    binary_entropy, empirical_eve_accuracy, key_rate, mutual_information_ab, Basis, Draws, EncodingOp, EveModel, Probe,
    Protocol, PureState, Qmm, RoundRng, RoundSettings, Unitary2,
};

const N: u64 = 100_000;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn config(protocol: Protocol, attack: AttackKind, f: f64) -> RunConfig {
    RunConfig {
        protocol,
        attack,
        attack_fraction: f,
        rounds: N,
        ..RunConfig::default()
    }
}

fn qmm_invisible_in_message_mode() -> Check {
    let mut details = Vec::new();
    for seed in [1, 2, 0xdead_beef] {
        let start = Instant::now();
        let sim = run_simulation(&RunConfig {
            master_seed: seed,
            ..config(Protocol::Lm05, AttackKind::Qmm, 1.0)
        })
        .map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let q = sim.statistics.qber_mm;
        details.push(format!(
            "seed {seed}: {}/{} errors in {:.2?}",
            q.events, q.trials, elapsed
        ));
        if q.events != 0 || elapsed >= Duration::from_secs(5) {
            return Err(details.join("; "));
        }
    }
    Ok(details.join("; "))
}

fn qmm_control_signature() -> Check {
    let cfg = config(Protocol::Lm05, AttackKind::Qmm, 1.0);
    let sim = run_simulation(&cfg).map_err(|e| e.to_string())?;
    let e = sim.statistics.e_cm.rate;
    let exact = exact_round_distribution(&cfg).e_cm_exact;
    ensure(
        (e - 0.5).abs() <= 0.015 && exact == 0.5,
        format!(
            "e_cm = {e:.4} over {} matched rounds, oracle = {exact}",
            sim.statistics.e_cm.trials
        ),
    )
}

fn key_rate_law() -> Check {
    let grid = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    let table = sweep(&config(Protocol::Lm05, AttackKind::Qmm, 0.0), &grid).map_err(|e| e.to_string())?;
    let rows = table.rows();
    if rows.len() != grid.len() {
        return Err(format!("only {} of {} points succeeded", rows.len(), grid.len()));
    }
    let mut worst: f64 = 0.0;
    for &(f, _, _, r) in &rows {
        worst = worst.max((r - (1.0 - f)).abs());
    }
    // Closed-form pipeline: e_cm = f/2 and qber = 0 must give R = 1 - f.
    let mut closed_worst: f64 = 0.0;
    for &f in &grid {
        let cfg = config(Protocol::Lm05, AttackKind::Qmm, f);
        let exact = exact_round_distribution(&cfg);
        if (exact.e_cm_exact - f / 2.0).abs() > 1e-15 || exact.qber_mm_exact != 0.0 {
            return Err(format!(
                "oracle at f = {f}: e_cm {}, qber {}",
                exact.e_cm_exact, exact.qber_mm_exact
            ));
        }
        let i_ab = mutual_information_ab(exact.qber_mm_exact).map_err(|e| e.to_string())?;
        let i_e = EveModel::Qmm
            .eve_information(exact.e_cm_exact, 0.0)
            .map_err(|e| e.to_string())?;
        closed_worst = closed_worst.max((key_rate(i_ab, i_e) - (1.0 - f)).abs());
        closed_worst = closed_worst.max((OracleReport::for_config(&cfg).key_rate - (1.0 - f)).abs());
    }
    ensure(
        worst <= 0.03 && closed_worst <= 4.0 * f64::EPSILON,
        format!("max |R - (1 - f)| = {worst:.4} sampled, {closed_worst:e} closed form"),
    )
}

fn bb84_threshold_location() -> Check {
    let q = bb84_threshold(0.10, 0.12, 1e-9).map_err(|e| e.to_string())?;
    ensure((q - 0.11).abs() <= 5e-4, format!("zero crossing at qber = {q:.6}"))
}

fn pingpong_qmm_signature() -> Check {
    let cfg = config(Protocol::PingPong, AttackKind::Qmm, 1.0);
    let sim = run_simulation(&cfg).map_err(|e| e.to_string())?;
    let e = sim.statistics.e_cm.rate;
    let exact = exact_round_distribution(&cfg).e_cm_exact;
    ensure(
        (e - 0.5).abs() <= 0.015 && exact == 0.5,
        format!(
            "failure rate = {e:.4} over {} control rounds, oracle = {exact}",
            sim.statistics.e_cm.trials
        ),
    )
}

fn intercept_resend_matches_oracle() -> Check {
    let cfg = config(Protocol::Lm05, AttackKind::InterceptResend, 1.0);
    let exact = exact_round_distribution(&cfg);
    if (exact.e_cm_exact - 0.25).abs() > 1e-12 || (exact.qber_mm_exact - 0.25).abs() > 1e-12 {
        return Err(format!(
            "oracle gives e_cm {}, qber {}",
            exact.e_cm_exact, exact.qber_mm_exact
        ));
    }
    let s = run_simulation(&cfg).map_err(|e| e.to_string())?.statistics;
    let z = |rate: f64, p: f64, n: u64| (rate - p).abs() / (p * (1.0 - p) / n as f64).sqrt();
    let z_cm = z(s.e_cm.rate, exact.e_cm_exact, s.e_cm.trials);
    let z_mm = z(s.qber_mm.rate, exact.qber_mm_exact, s.qber_mm.trials);
    ensure(
        z_cm <= 6.0 && z_mm <= 6.0,
        format!(
            "e_cm = {:.4} ({z_cm:.2} sigma), qber = {:.4} ({z_mm:.2} sigma), oracle 1/4 and 1/4",
            s.e_cm.rate, s.qber_mm.rate
        ),
    )
}

fn no_attack_is_exact() -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    for protocol in Protocol::ALL {
        let s = run_simulation(&config(protocol, AttackKind::None, 0.0))
            .map_err(|e| e.to_string())?
            .statistics;
        ok &= s.e_cm.rate == 0.0 && s.qber_mm.rate == 0.0 && s.key_rate == 1.0 && s.i_ab == 1.0;
        details.push(format!(
            "{protocol}: e_cm {} qber {} R {}",
            s.e_cm.rate, s.qber_mm.rate, s.key_rate
        ));
    }
    ensure(ok, details.join("; "))
}

fn eve_inference_is_deterministic() -> Check {
    let cfg = RunConfig {
        rounds: 20_000,
        record_limit: 20_000,
        ..config(Protocol::Lm05, AttackKind::Qmm, 1.0)
    };
    let sim = run_simulation(&cfg).map_err(|e| e.to_string())?;
    let records = sim.records.ok_or("records not retained")?;
    let accuracy = empirical_eve_accuracy(&records).map_err(|e| e.to_string())?;
    let guesses = sim.tally.eve_guesses;

    // Every preparation and operation, with Born draws at both extremes.
    let attack = Qmm {
        fraction: 1.0,
        pair_probe: Probe::Zero,
    };
    let settings = RoundSettings::new(0.0);
    let mut cases = 0;
    for prep_basis in Basis::ALL {
        for prep_bit in [0, 1] {
            for op_bit in [0, 1] {
                for born in [0.0, 0.5, 0.999_999] {
                    let choices = Lm05Choices {
                        prep_basis,
                        prep_bit,
                        attacked: true,
                        alice: AliceChoice::Encode(EncodingOp::from_bit(op_bit)),
                    };
                    let mut draws = ScriptedDraws::new(vec![born; 16]);
                    let r = play_lm05(&choices, &settings, &attack, &mut draws);
                    if r.eve_inferred_bit != Some(op_bit) || r.bob_outcome != op_bit || r.mm_error != Some(false) {
                        return Err(format!("case {prep_basis:?}/{prep_bit}/op {op_bit}: {r:?}"));
                    }
                }
                cases += 1;
            }
        }
    }
    ensure(
        accuracy == 1.0 && guesses > 0,
        format!("accuracy {accuracy} over {guesses} attacked message rounds; {cases}/8 exhaustive cases exact"),
    )
}

fn parallel_runs_are_identical() -> Check {
    let mut outputs = Vec::new();
    for workers in [1, 4, 8] {
        let cfg = RunConfig {
            workers,
            master_seed: 42,
            ..config(Protocol::Lm05, AttackKind::InterceptResend, 0.3)
        };
        let sim = run_simulation(&cfg).map_err(|e| e.to_string())?;
        outputs.push(to_json_string(&Report::run(sim, true)));
    }
    ensure(
        outputs.windows(2).all(|w| w[0] == w[1]),
        format!("{} bytes of JSON for workers 1, 4, 8", outputs[0].len()),
    )
}

fn numerical_hygiene() -> Check {
    let mut rng = RoundRng::new(2024, 0);
    let mut worst_norm: f64 = 0.0;
    let mut state = PureState::plus();
    for i in 0..1_000_000u64 {
        let u = Unitary2::ry(rng.uniform() * 6.3)
            .compose(&Unitary2::phase(rng.uniform() * 6.3))
            .compose(&Unitary2::NAMED[(i % 5) as usize].1);
        state = apply_single(&u, &state);
        worst_norm = worst_norm.max((state.norm_sqr() - 1.0).abs());
        if i % 1000 == 999 {
            // Occasional measurements keep the trajectory moving across the sphere.
            state = measure(&state, Basis::from_uniform(rng.uniform()), rng.uniform()).1;
        }
    }
    let worst_unitary = Unitary2::NAMED
        .iter()
        .map(|(_, u)| u.unitarity_residual())
        .fold(0.0, f64::max);
    let mut worst_symmetry: f64 = 0.0;
    for k in 0..=10_000 {
        let p = k as f64 / 10_000.0;
        let d = binary_entropy(p).unwrap() - binary_entropy(1.0 - p).unwrap();
        worst_symmetry = worst_symmetry.max(d.abs());
    }
    let prepared_ok = Basis::ALL.iter().all(|&b| {
        [0, 1]
            .iter()
            .all(|&bit| (prepare(b, bit).norm_sqr() - 1.0).abs() < 1e-12)
    });
    ensure(
        worst_norm < 1e-9 && worst_unitary < 1e-9 && worst_symmetry < 1e-12 && prepared_ok,
        format!("norm drift {worst_norm:e}, U^dag U residual {worst_unitary:e}, entropy asymmetry {worst_symmetry:e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("QMM leaves no message-mode errors", qmm_invisible_in_message_mode),
        ("QMM shows a 1/2 control-mode error rate", qmm_control_signature),
        ("key rate follows R = 1 - f", key_rate_law),
        ("BB84 rate vanishes at 11% QBER", bb84_threshold_location),
        ("Ping-Pong QMM control failure rate is 1/2", pingpong_qmm_signature),
        (
            "intercept-resend agrees with the oracle",
            intercept_resend_matches_oracle,
        ),
        ("no attack gives an exact perfect key", no_attack_is_exact),
        ("Eve's QMM inference is exact", eve_inference_is_deterministic),
        ("JSON is identical across worker counts", parallel_runs_are_identical),
        ("numerical hygiene", numerical_hygiene),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>())));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
