//! Nonclassicality of a two-time process as the channel interpolates
//! between the identity and a full replacement; `weight` is the replacement share.

use temporal_kd::channels::{DensityOperator, QuantumChannel};
use temporal_kd::linops::paulis;
use temporal_kd::measurements::MeasurementSchedule;
use temporal_kd::quasiprob::{kd_right, nonclassicality, MultiTimeProcess, Variant};

fn main() -> temporal_kd::Result<()> {
    let rho = DensityOperator::pure(&paulis::ket0())?;
    let omega = DensityOperator::pure(&paulis::ket1())?;
    let xy = MeasurementSchedule::from_observables(&[paulis::x(), paulis::y()], 1e-9)?;

    println!("{:>6} {:>10} {:>10}", "weight", "linear", "log");
    for step in 0..=5 {
        let lambda = step as f64 / 5.0;
        let ch = QuantumChannel::replacement(&omega, 2).mix(&QuantumChannel::identity(2), lambda)?;
        let q = kd_right(&MultiTimeProcess::new(rho.clone(), vec![ch])?, &xy)?;
        println!(
            "{lambda:>6.2} {:>10.6} {:>10.6}",
            nonclassicality(&q, Variant::Linear),
            nonclassicality(&q, Variant::Log)
        );
    }
    Ok(())
}
