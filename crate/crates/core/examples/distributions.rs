//! Temporal quasiprobabilities of a qubit measured in X and then Y.

use temporal_kd::channels::{DensityOperator, QuantumChannel};
use temporal_kd::linops::paulis;
use temporal_kd::measurements::MeasurementSchedule;
use temporal_kd::quasiprob::{kd_doubled, kd_left, kd_right, lvn, marginalize, mh_from_kd, MultiTimeProcess, QuasiDistribution};

fn show(label: &str, q: &QuasiDistribution) {
    println!("{label} (total {:.3})", q.total());
    for (idx, v) in q.entries() {
        let outcome: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| q.axes()[a].values[i]).collect();
        println!("  {outcome:?} -> {:+.4}{:+.4}i", v.re, v.im);
    }
}

fn main() -> temporal_kd::Result<()> {
    let rho = DensityOperator::pure(&paulis::ket0())?;
    let process = MultiTimeProcess::new(rho, vec![QuantumChannel::identity(2)])?;
    let xy = MeasurementSchedule::from_observables(&[paulis::x(), paulis::y()], 1e-9)?;

    let right = kd_right(&process, &xy)?;
    show("right KD, axes (t0, t1)", &right);
    show("left KD", &kd_left(&process, &xy)?);
    show("Margenau-Hill", &mh_from_kd(&right)?);
    show("sequential projective", &lvn(&process, &xy)?);

    // the t0 marginal of the right KD is the Born distribution of X on ρ
    show("right KD marginal on t0", &marginalize(&right, &[0])?);

    let zz = MeasurementSchedule::from_observables(&[paulis::z(), paulis::z()], 1e-9)?;
    let doubled = kd_doubled(&process, &xy, &zz)?;
    println!("doubled KD has shape {:?}", doubled.shape());
    Ok(())
}
