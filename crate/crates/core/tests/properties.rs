mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use common::{corpus_instance, instance};
use temporal_kd::charfunc::{char_value, CharSetting, ObservableSchedule};
use temporal_kd::linops::ComplexMatrix;
use temporal_kd::measurements::MeasurementSchedule;
use temporal_kd::quasiprob::{
    joint_ops, kd_doubled, kd_right, lvn, marginalize, mh_from_kd, nonclassicality, JointKind, Variant,
};
use temporal_kd::random::{random_hermitian, rng};
use temporal_kd::tomography::{kd_state_recursive, pdo, trace_defect};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distributions_are_normalized(seed in 0u64..1_000_000) {
        let inst = corpus_instance(seed, 3);
        let p = &inst.process;
        let right = kd_right(p, &inst.bra).unwrap();
        prop_assert!(right.normalization_defect() < 1e-10);
        prop_assert!(kd_doubled(p, &inst.ket, &inst.bra).unwrap().normalization_defect() < 1e-10);
        let mh = mh_from_kd(&right).unwrap();
        prop_assert!(mh.values().iter().all(|z| z.im == 0.0));
        let seq = lvn(p, &inst.bra).unwrap();
        prop_assert!(seq.values().iter().all(|z| z.im.abs() < 1e-12 && z.re > -1e-10 && z.re < 1.0 + 1e-10));
        prop_assert!(nonclassicality(&seq, Variant::Linear).abs() < 1e-10);
    }

    #[test]
    fn nonclassicality_is_nonnegative(seed in 0u64..1_000_000) {
        let inst = corpus_instance(seed, 2);
        let q = kd_doubled(&inst.process, &inst.ket, &inst.bra).unwrap();
        prop_assert!(nonclassicality(&q, Variant::Linear) >= -1e-12);
        prop_assert!(nonclassicality(&q, Variant::Log) >= -1e-12);
    }

    #[test]
    fn joint_operators_resolve_identity(seed in 0u64..1_000_000) {
        let inst = corpus_instance(seed, 3);
        let p = &inst.process;
        let ops = joint_ops(p, JointKind::Doubled { ket: &inst.ket, bra: &inst.bra }).unwrap();
        prop_assert!(ops.sum().max_diff(&ComplexMatrix::identity(p.dims()[0])) < 1e-10);
    }

    #[test]
    fn marginals_of_three_time_processes_compose(seed in 0u64..1_000_000) {
        let mut r = rng(seed);
        let inst = instance(&[2, 3, 2], false, &mut r);
        let p = &inst.process;
        let full = kd_right(p, &inst.bra).unwrap();
        let sub = p.subprocess(&[0, 2]).unwrap();
        let steps = inst.bra.steps();
        let s = MeasurementSchedule::new(vec![steps[0].clone(), steps[2].clone()]).unwrap();
        prop_assert!(marginalize(&full, &[0, 2]).unwrap().max_diff(&kd_right(&sub, &s).unwrap()) < 1e-12);
    }

    #[test]
    fn temporal_states_have_unit_trace(seed in 0u64..1_000_000) {
        let inst = corpus_instance(seed, 2);
        let y = kd_state_recursive(&inst.process).unwrap();
        prop_assert!(trace_defect(&y) < 1e-10);
        let j = pdo(&inst.process).unwrap();
        prop_assert!(trace_defect(&j) < 1e-10);
        prop_assert!(j.matrix().hermiticity_defect() < 1e-12);
    }

    #[test]
    fn characteristic_function_is_bounded(seed in 0u64..1_000_000, u in proptest::collection::vec(-10.0f64..10.0, 6)) {
        let mut r = rng(seed);
        let p = instance(&[2, 2, 2], seed % 2 == 0, &mut r).process;
        let a = ObservableSchedule::new((0..3).map(|_| random_hermitian(2, &mut r)).collect()).unwrap();
        let b = ObservableSchedule::new((0..3).map(|_| random_hermitian(2, &mut r)).collect()).unwrap();
        let v = char_value(&p, CharSetting::Right(&b), &u[..3]).unwrap();
        prop_assert!(v.norm() <= 1.0 + 1e-12);
        let w = char_value(&p, CharSetting::Doubled { ket: &a, bra: &b }, &u).unwrap();
        prop_assert!(w.norm() <= 1.0 + 1e-12);
        let conj = char_value(&p, CharSetting::Left(&b), &u[..3]).unwrap();
        prop_assert!((conj - Complex64::new(v.re, -v.im)).norm() < 1e-12);
    }
}
