//! Ancilla interferometer: exact readout and a finite-shot estimate of χ.

use temporal_kd::charfunc::{char_value, circuit_sim, CharSetting, ObservableSchedule, ShotConfig};
use temporal_kd::linops::paulis;
use temporal_kd::random::{random_process, rng};

fn main() -> temporal_kd::Result<()> {
    let process = random_process(&[2, 2], false, &mut rng(5))?;
    let ket = ObservableSchedule::new(vec![paulis::z(), paulis::x()])?;
    let bra = ObservableSchedule::new(vec![paulis::x(), paulis::y()])?;
    let setting = CharSetting::Doubled { ket: &ket, bra: &bra };

    for (stream, point) in [[0.3, -0.7, 1.1, 0.2], [1.0, 0.0, -0.5, 2.0]].iter().enumerate() {
        let shots = ShotConfig { shots: 200_000, seed: 99, stream: stream as u64 };
        let out = circuit_sim(&process, setting, point, Some(shots))?;
        let est = out.estimate.expect("shots requested");
        println!(
            "u = {point:?}: χ = {:+.5}{:+.5}i, circuit {:+.5}{:+.5}i, shots {:+.5}{:+.5}i ± {:.5}",
            char_value(&process, setting, point)?.re,
            char_value(&process, setting, point)?.im,
            out.exact.re,
            out.exact.im,
            est.value.re,
            est.value.im,
            est.std_error
        );
    }
    let cal = temporal_kd::charfunc::calibration();
    println!("readout sign {}, phase sign {}", cal.readout_sign, cal.phase_sign);
    Ok(())
}
