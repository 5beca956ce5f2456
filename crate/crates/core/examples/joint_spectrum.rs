//! Tilt of the unfiltered joint spectra and the effect of each filter on
//! the detected mass.

use biphoton::model::{FilterMask, SourceConfig};
use biphoton::observables::{joint_spectrum_slice, SliceDomain, SliceRequest};

fn main() -> biphoton::Result<()> {
    let cfg = SourceConfig::baseline();
    for domain in [SliceDomain::Spectral, SliceDomain::Spatial] {
        let req = SliceRequest { domain, range: None, points: 151 };
        println!("{domain:?}");
        for mask in [FilterMask::None, FilterMask::Both, FilterMask::SignalOnly, FilterMask::IdlerOnly] {
            let g = joint_spectrum_slice(&cfg, mask, &req)?;
            println!(
                "  {:>10}: mass {:.4e}, long axis {:.4} deg from -45",
                format!("{mask:?}"),
                g.raw_mass(),
                g.tilt_from_antidiagonal_deg()
            );
        }
    }
    Ok(())
}
