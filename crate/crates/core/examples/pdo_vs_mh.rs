//! The pseudo-density operator matches the Margenau-Hill state for two times
//! and departs from it once a third time is added.

use temporal_kd::random::{random_process, rng};
use temporal_kd::tomography::{kd_state_recursive, mh_state, pdo};

fn main() -> temporal_kd::Result<()> {
    for dims in [vec![2, 2], vec![2, 2, 2]] {
        let p = random_process(&dims, false, &mut rng(7203))?;
        let a = pdo(&p)?;
        let b = mh_state(&kd_state_recursive(&p)?)?;
        let gap = (a.matrix() - b.matrix()).frobenius_norm();
        let negative = a.eigenvalues().into_iter().filter(|&e| e < -1e-12).count();
        println!("{} times: ‖PDO − MH‖_F = {gap:.6}, negative PDO eigenvalues {negative}", dims.len());
    }
    Ok(())
}
