//! Phase-matching angle and Δk coefficients of 1 mm BBO pumped at 405 nm.

use biphoton::dispersion::{dispersion_data_at, phase_matching_angle, CrystalParams, SellmeierSet};

fn main() -> biphoton::Result<()> {
    let bbo = SellmeierSet::bbo();
    let theta = phase_matching_angle(&bbo, 0.405)?;
    println!("theta* = {:.4} deg", theta.to_degrees());

    let crystal = CrystalParams::phase_matched(1000.0, bbo, 0.405)?;
    let d = dispersion_data_at(&crystal, 0.405, 0.81, 0.81)?;
    println!("rho_p = {:.4} mrad, rho_s = {:.4} mrad", d.rho_p * 1e3, d.rho_s * 1e3);
    println!("D_s = {:.5} fs/um, D_i = {:.5} fs/um", d.d_s, d.d_i);
    Ok(())
}
