//! Commutator witness: nonclassicality requires non-commuting back-evolved projectors.

use temporal_kd::channels::{DensityOperator, QuantumChannel};
use temporal_kd::linops::paulis;
use temporal_kd::measurements::MeasurementSchedule;
use temporal_kd::quasiprob::{classicality_witness, MultiTimeProcess};

fn main() -> temporal_kd::Result<()> {
    let rho = DensityOperator::pure(&paulis::ket0())?;
    let hadamard = QuantumChannel::unitary(paulis::hadamard())?;
    let cases = [
        ("X then X, identity", QuantumChannel::identity(2), [paulis::x(), paulis::x()]),
        ("X then Y, identity", QuantumChannel::identity(2), [paulis::x(), paulis::y()]),
        ("X then Z, Hadamard", hadamard, [paulis::x(), paulis::z()]),
    ];
    for (label, ch, obs) in cases {
        let p = MultiTimeProcess::new(rho.clone(), vec![ch])?;
        let s = MeasurementSchedule::from_observables(&obs, 1e-9)?;
        let report = classicality_witness(&p, &s)?;
        println!(
            "{label:<20} N = {:.6}  max ‖[·,·]‖ = {:.6}  worst {:?}",
            report.nonclassicality, report.max_commutator_norm, report.worst_pair
        );
    }
    Ok(())
}
