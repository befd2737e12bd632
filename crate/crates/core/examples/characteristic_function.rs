//! Characteristic function sampled on a grid and inverted back to the distribution.

use temporal_kd::charfunc::{char_fn, default_nodes, invert_char, product_grid, CharSetting, ObservableSchedule};
use temporal_kd::quasiprob::kd_right;
use temporal_kd::random::{random_hermitian, random_process, rng};

fn main() -> temporal_kd::Result<()> {
    let mut r = rng(21);
    let process = random_process(&[2, 3], false, &mut r)?;
    let obs = ObservableSchedule::new(vec![random_hermitian(2, &mut r), random_hermitian(3, &mut r)])?;

    let spectra = obs.spectra()?;
    let grid = product_grid(&spectra.iter().map(|s| default_nodes(s)).collect::<Vec<_>>());
    let samples = char_fn(&process, CharSetting::Right(&obs), &grid)?;
    for (u, v) in samples.grid.iter().zip(&samples.values).take(4) {
        println!("χ({u:.3?}) = {:+.5}{:+.5}i", v.re, v.im);
    }

    let recovered = invert_char(&samples, &spectra)?;
    let direct = kd_right(&process, &obs.schedule()?)?;
    println!("{} grid points, inversion deviation {:.1e}", grid.len(), recovered.max_diff(&direct));
    Ok(())
}
