mod common;

use common::{corpus_instance, instance};
use temporal_kd::oracle::{oracle_kd, oracle_state, OracleKind};
use temporal_kd::quasiprob::{joint_ops, kd_doubled, kd_left, kd_right, JointKind};
use temporal_kd::random::rng;
use temporal_kd::tomography::{kd_state_recursive, mh_state, pdo, reconstruct_state, correlators, CorrKind, Method, StateKind};
use temporal_kd::measurements::HsBasis;

#[test]
fn distributions_match_the_superoperator_oracle() {
    for seed in 0..40 {
        let inst = corpus_instance(10_000 + seed, 3);
        let p = &inst.process;
        let right = kd_right(p, &inst.bra).unwrap();
        assert!(right.max_diff(&oracle_kd(p, OracleKind::Right(&inst.bra)).unwrap()) < 1e-12, "seed {seed}");
        let left = kd_left(p, &inst.ket).unwrap();
        assert!(left.max_diff(&oracle_kd(p, OracleKind::Left(&inst.ket)).unwrap()) < 1e-12, "seed {seed}");
        let doubled = kd_doubled(p, &inst.ket, &inst.bra).unwrap();
        let oracle = oracle_kd(p, OracleKind::Doubled { ket: &inst.ket, bra: &inst.bra }).unwrap();
        assert!(doubled.max_diff(&oracle) < 1e-12, "seed {seed}");
    }
}

#[test]
fn rectangular_chains_match_the_oracle() {
    let mut r = rng(10_500);
    for dims in [[2, 3, 2], [3, 2, 3], [2, 3, 3]] {
        let inst = instance(&dims, false, &mut r);
        let p = &inst.process;
        let q = kd_doubled(p, &inst.ket, &inst.bra).unwrap();
        let o = oracle_kd(p, OracleKind::Doubled { ket: &inst.ket, bra: &inst.bra }).unwrap();
        assert!(q.max_diff(&o) < 1e-12, "{dims:?}");
    }
}

#[test]
fn joint_operators_reproduce_every_kind() {
    for seed in 0..20 {
        let inst = corpus_instance(11_000 + seed, 2);
        let p = &inst.process;
        let rho = p.rho0().matrix();
        let d0 = p.dims()[0];
        let cases = [
            (JointKind::Right(&inst.bra), kd_right(p, &inst.bra).unwrap()),
            (JointKind::Left(&inst.ket), kd_left(p, &inst.ket).unwrap()),
            (JointKind::Doubled { ket: &inst.ket, bra: &inst.bra }, kd_doubled(p, &inst.ket, &inst.bra).unwrap()),
        ];
        for (kind, q) in cases {
            let ops = joint_ops(p, kind).unwrap();
            assert!(ops.distribution(rho).max_diff(&q) < 1e-12, "seed {seed}");
            assert!(ops.sum().max_diff(&temporal_kd::linops::ComplexMatrix::identity(d0)) < 1e-10);
        }
    }
}

#[test]
fn temporal_states_match_the_oracle() {
    let mut r = rng(12_000);
    let shapes: [&[usize]; 5] = [&[2, 2], &[3, 3], &[2, 2, 2], &[2, 3], &[3, 2, 2]];
    for dims in shapes {
        let inst = instance(dims, false, &mut r);
        let p = &inst.process;
        let right = kd_state_recursive(p).unwrap();
        let agree = |y: &temporal_kd::tomography::TemporalStateOperator, kind: StateKind| {
            let o = oracle_state(p, kind).unwrap();
            assert_eq!(o.kind(), kind);
            assert!(y.matrix().max_diff(o.matrix()) < 1e-10, "{kind:?} on {dims:?}");
        };
        agree(&right, StateKind::KdRight);
        agree(&right.adjoint(), StateKind::KdLeft);
        agree(&mh_state(&right).unwrap(), StateKind::Mh);
        agree(&pdo(p).unwrap(), StateKind::Pdo);
        if dims.len() == 2 {
            let bases: Vec<HsBasis> = dims.iter().map(|&d| HsBasis::new_canonical(d).unwrap()).collect();
            let doubled = reconstruct_state(&correlators(p, &bases, CorrKind::Doubled, Method::ViaDistributions).unwrap(), &bases).unwrap();
            agree(&doubled, StateKind::KdDoubled);
            agree(&mh_state(&doubled).unwrap(), StateKind::MhDoubled);
        }
    }
}
