#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use temporal_kd::channels::{DensityOperator, QuantumChannel};
use temporal_kd::linops::ComplexMatrix;
use temporal_kd::measurements::MeasurementSchedule;
use temporal_kd::quasiprob::MultiTimeProcess;
use temporal_kd::random::{random_basis_measurement, random_process, rng};

/// A seeded process together with one schedule per side.
pub struct Instance {
    pub process: MultiTimeProcess,
    pub ket: MeasurementSchedule,
    pub bra: MeasurementSchedule,
}

pub fn schedule(dims: &[usize], r: &mut ChaCha8Rng) -> MeasurementSchedule {
    MeasurementSchedule::new(dims.iter().map(|&d| random_basis_measurement(d, r)).collect()).unwrap()
}

pub fn instance(dims: &[usize], unitary: bool, r: &mut ChaCha8Rng) -> Instance {
    let process = random_process(dims, unitary, r).unwrap();
    let ket = schedule(dims, r);
    let bra = schedule(dims, r);
    Instance { process, ket, bra }
}

/// Seed `seed`: `d ∈ {2,3}`, `1..=max_steps` steps, alternating unitary and Kraus channels.
pub fn corpus_instance(seed: u64, max_steps: usize) -> Instance {
    let mut r = rng(seed);
    let d = if r.random_bool(0.5) { 2 } else { 3 };
    let steps = r.random_range(1..=max_steps);
    instance(&vec![d; steps + 1], seed % 2 == 0, &mut r)
}

/// `Σ_{kl} E(|k⟩⟨l|) ⊗ |l⟩⟨k|`, output factor first.
pub fn choi(ch: &QuantumChannel) -> ComplexMatrix {
    let (din, dout) = (ch.d_in(), ch.d_out());
    let mut j = ComplexMatrix::zeros(dout * din, dout * din);
    for k in 0..din {
        for l in 0..din {
            let out = ch.apply(&ComplexMatrix::unit(din, k, l)).unwrap();
            for a in 0..dout {
                for b in 0..dout {
                    j[(a * din + l, b * din + k)] += out[(a, b)];
                }
            }
        }
    }
    j
}

pub fn pure(v: &[Complex64]) -> DensityOperator {
    DensityOperator::pure(v).unwrap()
}

pub fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
