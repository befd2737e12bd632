//! Weak values as conditional means of a two-time KD distribution.

use temporal_kd::channels::{DensityOperator, QuantumChannel};
use temporal_kd::linops::paulis;
use temporal_kd::measurements::{spectral_measurement, MeasurementSchedule, ProjectiveMeasurement};
use temporal_kd::quasiprob::{conditional_mean, kd_left, weak_value, MultiTimeProcess};

fn main() -> temporal_kd::Result<()> {
    let pre = paulis::ket0();
    let post = paulis::ket_y_plus();
    let a = paulis::x();
    println!("⟨y+|X|0⟩/⟨y+|0⟩ = {}", weak_value(&a, &pre, &post)?);

    // measure X at t0, then the basis containing the postselected state at t1
    let process = MultiTimeProcess::new(DensityOperator::pure(&pre)?, vec![QuantumChannel::identity(2)])?;
    let post_basis = ProjectiveMeasurement::from_basis(&[post.clone(), paulis::ket_y_minus()], &[0.0, 1.0])?;
    let schedule = MeasurementSchedule::new(vec![spectral_measurement(&a, 1e-9)?, post_basis])?;
    let q = kd_left(&process, &schedule)?;
    println!("conditional mean of X given y+ = {}", conditional_mean(&q, 0, 1, 0)?);

    Ok(())
}
