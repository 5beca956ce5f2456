//! Purities, heralding efficiencies and PEFs of the baseline source, and how
//! the heralding asymmetry fades as the pump waist grows.

use biphoton::model::SourceConfig;
use biphoton::observables::observables_report;

fn main() -> biphoton::Result<()> {
    let r = observables_report(&SourceConfig::baseline())?;
    for (name, v) in r.fields() {
        println!("{name:>20} = {v:.4}");
    }

    println!("\n  w_p [um]   eta_s    eta_i");
    for w_p in [10.0, 25.0, 50.0, 100.0, 200.0] {
        let r = observables_report(&SourceConfig::baseline().with_pump_waist(w_p))?;
        println!("{w_p:>10.0}  {:.4}  {:.4}", r.eta_s, r.eta_i);
    }
    Ok(())
}
