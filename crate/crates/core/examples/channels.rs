//! Channel constructions, CPTP validation, Choi operators and Stinespring dilations.

use temporal_kd::channels::{compose, validate_cptp, DensityOperator, Instrument, QuantumChannel};
use temporal_kd::linops::paulis;
use temporal_kd::measurements::ProjectiveMeasurement;
use temporal_kd::random::{random_channel, random_density, rng};

fn main() -> temporal_kd::Result<()> {
    let mut r = rng(1);
    let outputs = [DensityOperator::pure(&paulis::ket_plus())?, DensityOperator::pure(&paulis::ket_minus())?];
    let channels = [
        ("depolarizing p=0.3", QuantumChannel::depolarizing(2, 0.3)?),
        ("replacement", QuantumChannel::replacement(&random_density(2, &mut r), 2)),
        (
            "measure-replace",
            QuantumChannel::measure_replace(&Instrument::projective(&ProjectiveMeasurement::computational(2)), &outputs)?,
        ),
        ("random Kraus", random_channel(2, 2, &mut r)),
    ];

    let rho = random_density(2, &mut r);
    for (label, ch) in &channels {
        let report = validate_cptp(ch, 1e-12);
        let dilation = ch.stinespring()?;
        let via_env = dilation.reduced_action(rho.matrix())?;
        println!(
            "{label:<20} kraus {} env dim {} report {report:?} dilation deviation {:.1e} Tr J = {:.3}",
            ch.kraus().len(),
            dilation.env_dim,
            via_env.max_diff(&ch.apply(rho.matrix())?),
            ch.jamiolkowski().trace().re
        );
    }

    let both = compose(&channels[0].1, &channels[3].1)?;
    println!("composition keeps trace: {:.1e}", (both.apply(rho.matrix())?.trace().re - 1.0).abs());
    Ok(())
}
