//! Temporal state operators: the Born rule on Υ reproduces every quasiprobability.

use temporal_kd::linops::ComplexMatrix;
use temporal_kd::measurements::MeasurementSchedule;
use temporal_kd::quasiprob::kd_right;
use temporal_kd::random::{random_basis_measurement, random_process, rng};
use temporal_kd::tomography::{born_eval_ascending, kd_state_recursive, mh_state, reduce_state, trace_defect};

fn main() -> temporal_kd::Result<()> {
    let mut r = rng(3);
    let process = random_process(&[2, 3, 2], false, &mut r)?;
    let s = MeasurementSchedule::new(process.dims().iter().map(|&d| random_basis_measurement(d, &mut r)).collect())?;

    let y = kd_state_recursive(&process)?;
    println!("right KD state: {}x{}, trace defect {:.1e}", y.matrix().rows(), y.matrix().cols(), trace_defect(&y));

    let q = kd_right(&process, &s)?;
    let mut worst = 0.0f64;
    for (idx, v) in q.entries() {
        let proj: Vec<ComplexMatrix> = idx.iter().enumerate().map(|(k, &b)| s.steps()[k].projector(b).clone()).collect();
        worst = worst.max((born_eval_ascending(&y, &proj, None)? - v).norm());
    }
    println!("Born rule vs right KD, max deviation {worst:.1e}");

    let mh = mh_state(&y)?;
    println!("MH eigenvalues {:.4?}", mh.eigenvalues());
    println!("MH reduced to t0 {:?} equals ρ0: {}", reduce_state(&mh, &[0])?.times(), reduce_state(&mh, &[0])?.matrix().approx_eq(process.rho0().matrix(), 1e-12));
    Ok(())
}
