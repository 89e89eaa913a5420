use proptest::prelude::*;

use twoway_core::harness::emit::to_json_string;
use twoway_core::harness::{
    eve_model_for, exact_round_distribution, run_simulation, sweep, AttackKind, Report, RunConfig,
};
use twoway_core::qubit::{apply_single, measure, prepare};
use twoway_core::{
    binary_entropy, eve_bound_qmm, key_rate, mutual_information_ab, Basis, Draws, EveModel, Probe, Protocol, PureState,
    RoundRng, Tally, Unitary2,
};

fn config(protocol: Protocol, attack: AttackKind, f: f64, rounds: u64) -> RunConfig {
    RunConfig {
        protocol,
        attack,
        attack_fraction: f,
        rounds,
        ..RunConfig::default()
    }
}

/// `|rate - p|` allowed at six binomial standard deviations.
fn band(p: f64, n: u64) -> f64 {
    6.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12
}

#[test]
fn wilson_interval_covers_the_exact_rate() {
    let template = config(Protocol::Lm05, AttackKind::InterceptResend, 1.0, 10_000);
    let p = exact_round_distribution(&template).e_cm_exact;
    let seeds = 240;
    let covered = (0..seeds)
        .filter(|&seed| {
            let cfg = RunConfig {
                master_seed: seed,
                ..template.clone()
            };
            run_simulation(&cfg).unwrap().statistics.e_cm.contains(p)
        })
        .count();
    let coverage = covered as f64 / seeds as f64;
    // Nominal 95%; six sigma of a 240-run binomial is about 0.08.
    assert!(coverage >= 0.87, "coverage {coverage}");
}

#[test]
fn monte_carlo_agrees_with_oracle() {
    for protocol in Protocol::ALL {
        for attack in AttackKind::ALL {
            for f in [0.5, 1.0] {
                for both_paths in [false, true] {
                    let cfg = RunConfig {
                        ir_both_paths: both_paths,
                        master_seed: 11,
                        ..config(protocol, attack, f, 50_000)
                    };
                    let exact = exact_round_distribution(&cfg);
                    let s = run_simulation(&cfg).unwrap();
                    let st = s.statistics;
                    let label = format!("{protocol}/{attack}/f={f}/both={both_paths}");
                    assert!(
                        (st.e_cm.rate - exact.e_cm_exact).abs() <= band(exact.e_cm_exact, st.e_cm.trials),
                        "{label}: e_cm {} vs {}",
                        st.e_cm.rate,
                        exact.e_cm_exact
                    );
                    assert!(
                        (st.qber_mm.rate - exact.qber_mm_exact).abs() <= band(exact.qber_mm_exact, st.qber_mm.trials),
                        "{label}: qber {} vs {}",
                        st.qber_mm.rate,
                        exact.qber_mm_exact
                    );
                    match (exact.eve_accuracy_exact, st.eve_empirical_accuracy) {
                        (Some(p), Some(a)) => {
                            assert!(
                                (a - p).abs() <= band(p, s.tally.eve_guesses),
                                "{label}: accuracy {a} vs {p}"
                            )
                        }
                        (None, None) => {}
                        other => panic!("{label}: accuracy presence differs: {other:?}"),
                    }
                }
            }
        }
    }
}

#[test]
fn oracle_values_for_intercept_resend() {
    let both = RunConfig {
        ir_both_paths: true,
        ..config(Protocol::Lm05, AttackKind::InterceptResend, 1.0, 1)
    };
    let d = exact_round_distribution(&both);
    assert!((d.eve_accuracy_exact.unwrap() - 0.75).abs() < 1e-12);

    let pp = exact_round_distribution(&config(Protocol::PingPong, AttackKind::InterceptResend, 1.0, 1));
    assert!((pp.qber_mm_exact - 0.5).abs() < 1e-12);

    let bb = exact_round_distribution(&config(Protocol::Bb84, AttackKind::InterceptResend, 1.0, 1));
    assert!((bb.qber_mm_exact - 0.25).abs() < 1e-12);
    assert!((bb.eve_accuracy_exact.unwrap() - 0.75).abs() < 1e-12);

    let none = exact_round_distribution(&config(Protocol::PingPong, AttackKind::None, 0.0, 1));
    assert_eq!(
        (none.e_cm_exact, none.qber_mm_exact, none.eve_accuracy_exact),
        (0.0, 0.0, None)
    );
}

#[test]
fn pingpong_plus_probe_is_an_informed_attack() {
    let cfg = RunConfig {
        pingpong_probe: Probe::Plus,
        ..config(Protocol::PingPong, AttackKind::Qmm, 1.0, 1)
    };
    let d = exact_round_distribution(&cfg);
    assert_eq!(d.eve_accuracy_exact, Some(1.0));
    assert!(matches!(eve_model_for(&cfg), EveModel::BinaryChannel { key_accuracy, .. } if key_accuracy == 1.0));
}

#[test]
fn sweep_rates_fall_as_the_attack_grows() {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let table = sweep(&config(Protocol::Lm05, AttackKind::Qmm, 0.0, 40_000), &grid).unwrap();
    let rows = table.rows();
    assert_eq!(rows.len(), grid.len());
    for w in rows.windows(2) {
        assert!(w[1].1 >= w[0].1 - 0.02, "e_cm not increasing: {w:?}");
        assert!(w[1].3 <= w[0].3 + 0.04, "R not decreasing: {w:?}");
    }
    assert_eq!(rows[0].3, 1.0);
    assert_eq!(rows[4].3, 0.0);
    // Points run under distinct derived seeds.
    let mut seeds: Vec<u64> = table.points.iter().map(|p| p.config.master_seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), grid.len());
}

#[test]
fn mode_and_attack_frequencies_match_their_probabilities() {
    for (c, f) in [(0.25, 0.3), (0.5, 0.8), (0.1, 1.0)] {
        let cfg = RunConfig {
            control_prob: c,
            ..config(Protocol::Lm05, AttackKind::Qmm, f, 50_000)
        };
        let s = run_simulation(&cfg).unwrap().statistics;
        let n = s.rounds_total;
        let cm = s.rounds_cm as f64 / n as f64;
        let att = s.rounds_attacked as f64 / n as f64;
        assert!((cm - c).abs() <= band(c, n), "control fraction {cm} vs {c}");
        assert!((att - f).abs() <= band(f, n), "attack fraction {att} vs {f}");
        assert_eq!(s.rounds_mm + s.rounds_cm, n);
    }
}

#[test]
fn tally_is_order_independent() {
    let cfg = RunConfig {
        record_limit: 5_000,
        ..config(Protocol::Lm05, AttackKind::InterceptResend, 0.6, 5_000)
    };
    let sim = run_simulation(&cfg).unwrap();
    let mut records = sim.records.clone().unwrap();
    assert_eq!(Tally::from_records(&records), sim.tally);
    records.reverse();
    assert_eq!(Tally::from_records(&records), sim.tally);
    // Deterministic shuffle driven by the crate's own stream.
    let mut rng = RoundRng::new(5, 0);
    for i in (1..records.len()).rev() {
        let j = (rng.uniform() * (i + 1) as f64) as usize;
        records.swap(i, j);
    }
    assert_eq!(Tally::from_records(&records), sim.tally);
    let (a, b) = records.split_at(1234);
    let mut merged = Tally::from_records(b);
    merged.merge(&Tally::from_records(a));
    assert_eq!(merged, sim.tally);
}

#[test]
fn key_rate_is_monotone_in_the_error_rates() {
    let mut previous_i_ab = f64::INFINITY;
    let mut previous_r = f64::INFINITY;
    for k in 0..=500 {
        let q = k as f64 / 1000.0;
        let i_ab = mutual_information_ab(q).unwrap();
        assert!(i_ab <= previous_i_ab + 1e-15);
        previous_i_ab = i_ab;
        let (_, i_e) = eve_bound_qmm(q);
        let r = key_rate(1.0, i_e);
        assert!(r <= previous_r);
        assert!((0.0..=1.0).contains(&r));
        previous_r = r;
    }
}

#[test]
fn iy_flips_every_prepared_state() {
    for basis in Basis::ALL {
        for bit in [0, 1] {
            let flipped = apply_single(&Unitary2::I_PAULI_Y, &prepare(basis, bit));
            assert!(flipped.approx_eq_up_to_phase(&prepare(basis, 1 - bit), 1e-12));
            assert!((flipped.probability(basis, 1 - bit) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn born_frequencies_follow_the_amplitudes() {
    let mut rng = RoundRng::new(99, 7);
    let n = 100_000;
    let ones: u32 = (0..n)
        .map(|_| u32::from(measure(&PureState::plus(), Basis::Z, rng.uniform()).0))
        .sum();
    let freq = f64::from(ones) / f64::from(n);
    assert!((freq - 0.5).abs() <= 0.01, "frequency {freq}");
}

#[test]
fn simulation_throughput_is_reasonable() {
    let cfg = config(Protocol::Lm05, AttackKind::Qmm, 0.5, 200_000);
    let start = std::time::Instant::now();
    run_simulation(&cfg).unwrap();
    let rate = 200_000.0 / start.elapsed().as_secs_f64();
    assert!(rate >= 100_000.0, "{rate:.0} rounds/s");
}

#[test]
fn json_reserializes_byte_for_byte() {
    for protocol in Protocol::ALL {
        let cfg = config(protocol, AttackKind::InterceptResend, 0.4, 20_000);
        let text = to_json_string(&Report::run(run_simulation(&cfg).unwrap(), true));
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["schema"], 1);
        let again = serde_json::to_string_pretty(&parsed).unwrap() + "\n";
        assert_eq!(again, text);
    }
}

#[test]
fn reported_rate_is_consistent_with_its_parts() {
    for protocol in Protocol::ALL {
        for attack in AttackKind::ALL {
            let s = run_simulation(&config(protocol, attack, 0.35, 20_000))
                .unwrap()
                .statistics;
            assert_eq!(s.key_rate, (s.i_ab - s.i_e).max(0.0));
            assert_eq!(s.raw_rate, s.i_ab - s.i_e);
            assert_eq!(s.f_hat, (2.0 * s.e_cm.rate).min(1.0));
            assert_eq!(s.aborted, s.qber_mm.rate > 0.5 || s.raw_rate < 0.0);
            if s.qber_mm.rate <= 0.5 {
                assert_eq!(s.i_ab, 1.0 - binary_entropy(s.qber_mm.rate).unwrap());
            }
        }
    }
}

#[test]
fn insufficient_samples_are_reported() {
    let cfg = RunConfig {
        control_prob: 0.0,
        ..config(Protocol::Lm05, AttackKind::None, 0.0, 100)
    };
    assert!(run_simulation(&cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn results_ignore_worker_count(
        seed in any::<u64>(),
        f in 0.0..=1.0f64,
        protocol in prop::sample::select(Protocol::ALL.to_vec()),
        attack in prop::sample::select(AttackKind::ALL.to_vec()),
        workers in 2usize..9,
    ) {
        let base = RunConfig { master_seed: seed, ..config(protocol, attack, f, 3_000) };
        let parallel = RunConfig { workers, ..base.clone() };
        let a = run_simulation(&base).unwrap();
        let b = run_simulation(&parallel).unwrap();
        prop_assert_eq!(a.tally, b.tally);
        prop_assert_eq!(a.records, b.records);
    }

    #[test]
    fn entropy_is_symmetric_and_bounded(p in 0.0..=1.0f64) {
        let h = binary_entropy(p).unwrap();
        prop_assert!((0.0..=1.0 + 1e-15).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - p).unwrap()).abs() < 1e-12);
    }
}
