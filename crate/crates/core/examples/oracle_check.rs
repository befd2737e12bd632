//! Cross-checks the fast distribution and state constructions against the
//! superoperator oracle on random processes.

use temporal_kd::measurements::MeasurementSchedule;
use temporal_kd::oracle::{oracle_kd, oracle_state, OracleKind};
use temporal_kd::quasiprob::{kd_doubled, kd_right};
use temporal_kd::random::{random_basis_measurement, random_process, rng};
use temporal_kd::tomography::{kd_state_recursive, pdo, StateKind};

fn main() -> temporal_kd::Result<()> {
    for seed in 0..5u64 {
        let mut r = rng(seed);
        let dims = if seed % 2 == 0 { vec![2, 2, 2] } else { vec![3, 2] };
        // unitary steps need equal dimensions
        let p = random_process(&dims, seed % 4 == 0, &mut r)?;
        let mut schedule = || MeasurementSchedule::new(dims.iter().map(|&d| random_basis_measurement(d, &mut r)).collect());
        let (ket, bra) = (schedule()?, schedule()?);

        let right = kd_right(&p, &bra)?.max_diff(&oracle_kd(&p, OracleKind::Right(&bra))?);
        let doubled = kd_doubled(&p, &ket, &bra)?.max_diff(&oracle_kd(&p, OracleKind::Doubled { ket: &ket, bra: &bra })?);
        let state = kd_state_recursive(&p)?.matrix().max_diff(oracle_state(&p, StateKind::KdRight)?.matrix());
        let pdo_dev = pdo(&p)?.matrix().max_diff(oracle_state(&p, StateKind::Pdo)?.matrix());
        println!("dims {dims:?}: right {right:.1e} doubled {doubled:.1e} KD state {state:.1e} PDO {pdo_dev:.1e}");
    }
    Ok(())
}
