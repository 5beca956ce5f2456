//! Closed-form Gaussian algebra against brute-force quadrature for one
//! configuration.

use biphoton::gaussian::{gaussian_mass, reduce_pure_state};
use biphoton::model::{assemble_quadratic_form, EfficiencyDomain, FilterMask, SourceConfig};
use biphoton::observables::Subsystem;
use biphoton::oracle::{oracle_mass_in, oracle_purity, PurityMode, QuadratureSpec};

fn main() -> biphoton::Result<()> {
    let a = assemble_quadratic_form(&SourceConfig::baseline(), FilterMask::Both)?;
    let spec = QuadratureSpec::default();

    let coords = EfficiencyDomain::Spatial.coords();
    let closed = gaussian_mass(&a.restrict(coords))?;
    let grid = oracle_mass_in(&a, coords, &spec)?;
    println!("spatial mass   closed {closed:.6e}  grid {grid:.6e}");

    for s in Subsystem::ALL {
        let closed = reduce_pure_state(&a, s.coords())?.purity()?;
        let grid = oracle_purity(&a, s.coords(), &spec, PurityMode::Closed)?;
        println!("{:>16}  closed {closed:.6}  grid {grid:.6}", format!("{s:?}"));
    }
    Ok(())
}
