use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use twoway_core::harness::{exact_round_distribution, run_simulation, AttackKind, RunConfig};
use twoway_core::qubit::{apply_single, measure, swap_gate, Basis, PureState, TwoQubitState, Unitary2};
use twoway_core::Protocol;

fn kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel");
    let s = PureState::plus();
    group.bench_function("apply_iy_then_measure", |b| {
        b.iter(|| measure(&apply_single(&Unitary2::I_PAULI_Y, black_box(&s)), Basis::X, 0.3))
    });
    let joint = TwoQubitState::product(&PureState::plus(), &PureState::zero());
    group.bench_function("swap_and_factor", |b| b.iter(|| swap_gate(black_box(&joint)).factor()));
    group.finish();
}

fn simulation(c: &mut Criterion) {
    const ROUNDS: u64 = 20_000;
    let mut group = c.benchmark_group("simulation");
    group.throughput(Throughput::Elements(ROUNDS));
    group.sample_size(20);
    for (protocol, attack) in [
        (Protocol::Lm05, AttackKind::None),
        (Protocol::Lm05, AttackKind::Qmm),
        (Protocol::Lm05, AttackKind::InterceptResend),
        (Protocol::PingPong, AttackKind::Qmm),
        (Protocol::Bb84, AttackKind::InterceptResend),
    ] {
        let config = RunConfig {
            protocol,
            attack,
            attack_fraction: 0.5,
            rounds: ROUNDS,
            ..RunConfig::default()
        };
        group.bench_with_input(
            BenchmarkId::new(protocol.as_str(), attack.as_str()),
            &config,
            |b, config| b.iter(|| run_simulation(config).unwrap()),
        );
    }
    let parallel = RunConfig {
        attack: AttackKind::Qmm,
        attack_fraction: 1.0,
        rounds: ROUNDS,
        workers: 4,
        ..RunConfig::default()
    };
    group.bench_function("lm05_qmm_4_workers", |b| b.iter(|| run_simulation(&parallel).unwrap()));
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let config = RunConfig {
        attack: AttackKind::InterceptResend,
        attack_fraction: 1.0,
        ir_both_paths: true,
        backward_check: true,
        ..RunConfig::default()
    };
    c.bench_function("oracle/lm05_ir_both_paths", |b| {
        b.iter(|| exact_round_distribution(black_box(&config)))
    });
}

criterion_group!(benches, kernel, simulation, oracle);
criterion_main!(benches);
