//! Cross-checks of the closed forms against the quadrature oracle on a
//! fixed set of seed configurations.

use crate::dispersion::{
    group_delay_coefficient, index_extraordinary, index_ordinary, index_wavelength_derivative,
    walkoff_angle, Polarization, SellmeierSet, SPEED_OF_LIGHT_UM_PER_FS,
};
use crate::error::Result;
use crate::gaussian::{detection_probability_ratio_in, gaussian_mass, reduce_pure_state};
use crate::model::{assemble_quadratic_form, Coord, EfficiencyDomain, FilterMask, FilterSet, Photon, SourceConfig};
use crate::observables::Subsystem;
use crate::oracle::{oracle_mass_in, oracle_purity, PurityMode, QuadratureSpec};

pub const MASS_TOLERANCE: f64 = 1e-4;
pub const PURITY_TOLERANCE_1D: f64 = 1e-3;
pub const PURITY_TOLERANCE_2D: f64 = 2e-3;
pub const SCHMIDT_TOLERANCE: f64 = 1e-10;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// Absolute or relative deviation, as the tolerance is stated.
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }

    fn relative(name: String, value: f64, reference: f64, tolerance: f64) -> Self {
        let deviation = ((value - reference) / reference).abs();
        Self { name, value, reference, deviation, tolerance }
    }

    fn absolute(name: String, value: f64, reference: f64, tolerance: f64) -> Self {
        let deviation = (value - reference).abs();
        Self { name, value, reference, deviation, tolerance }
    }

    fn failed(name: String, error: &crate::Error) -> Self {
        Self {
            name: format!("{name} ({error})"),
            value: f64::NAN,
            reference: f64::NAN,
            deviation: f64::INFINITY,
            tolerance: 0.0,
        }
    }
}

/// The five seed configurations, with labels.
pub fn seed_configs() -> Vec<(&'static str, SourceConfig)> {
    let base = SourceConfig::baseline();
    let mut asym = FilterSet::symmetric(Some(2.0), 15.0);
    asym.idler_bandwidth_nm = Some(8.0);
    asym.idler_mode_um = 25.0;
    vec![
        ("baseline", base),
        ("narrow-spectral", base.with_filters(FilterSet::symmetric(Some(0.1), 10.0))),
        ("wide-modes", base.with_filters(FilterSet::symmetric(Some(1.0), 100.0))),
        ("wide-pump", base.with_pump_waist(40.0).with_pump_bandwidth(0.5)),
        ("asymmetric", base.with_filters(asym)),
    ]
}

fn push(checks: &mut Vec<Check>, name: String, r: Result<Check>) {
    checks.push(r.unwrap_or_else(|e| Check::failed(name, &e)));
}

/// Closed-form masses, efficiencies and purities of one configuration
/// against the oracle.
pub fn check_config(label: &str, cfg: &SourceConfig, deep: bool) -> Vec<Check> {
    let spec = QuadratureSpec::default();
    let mut checks = Vec::new();
    let masks = [FilterMask::Both, FilterMask::SignalOnly, FilterMask::IdlerOnly];
    let domains = [EfficiencyDomain::Spatial, EfficiencyDomain::Spectral, EfficiencyDomain::Full];

    // Oracle masses per (mask, domain), shared by the mass and η checks.
    let mut grid_mass = Vec::new();
    for mask in masks {
        for domain in domains {
            let name = format!("{label}: mass {mask:?}/{domain:?}");
            let grid = assemble_quadratic_form(cfg, mask)
                .and_then(|a| oracle_mass_in(&a, domain.coords(), &spec));
            let stored = grid.as_ref().ok().copied();
            push(&mut checks, name.clone(), (|| {
                let a = assemble_quadratic_form(cfg, mask)?;
                let closed = gaussian_mass(&a.restrict(domain.coords()))?;
                Ok(Check::relative(name, closed, grid?, MASS_TOLERANCE))
            })());
            grid_mass.push(((mask, domain), stored));
        }
    }
    let lookup = |mask: FilterMask, domain: EfficiencyDomain| -> Result<f64> {
        let (_, m) = grid_mass.iter().find(|(k, _)| *k == (mask, domain)).expect("all masks computed");
        m.ok_or_else(|| crate::Error::InvalidGrid("oracle mass failed, see the mass check".into()))
    };

    for heralding in [Photon::Signal, Photon::Idler] {
        for domain in domains {
            let name = format!("{label}: eta {heralding:?}/{domain:?}");
            push(&mut checks, name.clone(), (|| {
                let both = assemble_quadratic_form(cfg, FilterMask::Both)?;
                let herald = assemble_quadratic_form(cfg, FilterMask::only(heralding))?;
                let closed = detection_probability_ratio_in(&both, &herald, domain.coords())?;
                let grid = lookup(FilterMask::Both, domain)? / lookup(FilterMask::only(heralding), domain)?;
                Ok(Check::relative(name, closed, grid, MASS_TOLERANCE))
            })());
        }
    }

    for s in Subsystem::ALL {
        let keep = s.coords();
        let tol = if keep.len() == 1 { PURITY_TOLERANCE_1D } else { PURITY_TOLERANCE_2D };
        let mut modes = vec![PurityMode::Closed];
        if deep && keep.len() == 1 {
            modes.push(PurityMode::Deep);
        }
        for mode in modes {
            let name = format!("{label}: purity {s:?} ({mode:?} grid)");
            push(&mut checks, name.clone(), (|| {
                let a = assemble_quadratic_form(cfg, FilterMask::Both)?;
                let closed = reduce_pure_state(&a, keep)?.purity()?;
                let grid = oracle_purity(&a, keep, &spec, mode)?;
                Ok(Check::absolute(name, closed, grid, tol))
            })());
        }
    }

    let name = format!("{label}: Schmidt symmetry");
    push(&mut checks, name.clone(), (|| {
        let a = assemble_quadratic_form(cfg, FilterMask::Both)?;
        let signal = reduce_pure_state(&a, &[Coord::QsX, Coord::QsY, Coord::OmegaS])?.purity()?;
        let idler = reduce_pure_state(&a, &[Coord::QiX, Coord::QiY, Coord::OmegaI])?.purity()?;
        Ok(Check::absolute(name, signal, idler, SCHMIDT_TOLERANCE))
    })());
    checks
}

fn central_difference(f: impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Analytic dispersion derivatives against central differences on a
/// 50-point grid over the validity window and θ ∈ (0.05, 1.5).
pub fn check_derivatives(s: &SellmeierSet) -> Vec<Check> {
    let (lo, hi) = s.window_um;
    // 1e-4 um steps leave ~1e-6 truncation error near the UV pole.
    let dl = 1e-5;
    let dt = 1e-5;
    let mut worst: Vec<(f64, String)> = ["dn_o/dlambda", "dn_e/dlambda", "walk-off"]
        .iter()
        .map(|w| (0.0, w.to_string()))
        .collect();
    let mut errors = Vec::new();
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let l = (lo + 2.0 * dl) + (hi - lo - 4.0 * dl) * t;
        let theta = 0.05 + 1.45 * t;
        let mut record = |slot: usize, what: &str, analytic: Result<f64>, numeric: Result<f64>| {
            match (analytic, numeric) {
                (Ok(a), Ok(n)) => {
                    let dev = ((a - n) / n).abs();
                    if dev > worst[slot].0 {
                        worst[slot] = (dev, format!("{what} at lambda={l:.4} um, theta={theta:.4}"));
                    }
                }
                (Err(e), _) | (_, Err(e)) => errors.push(Check::failed(what.to_string(), &e)),
            }
        };
        record(
            0,
            "dn_o/dlambda",
            index_wavelength_derivative(s, l, Polarization::Ordinary, 0.0),
            central_difference(|x| index_ordinary(s, x), l, dl),
        );
        record(
            1,
            "dn_e/dlambda",
            index_wavelength_derivative(s, l, Polarization::Extraordinary, theta),
            central_difference(|x| index_extraordinary(s, x, theta), l, dl),
        );
        record(
            2,
            "walk-off",
            walkoff_angle(s, l, theta),
            central_difference(|x| index_extraordinary(s, l, x), theta, dt)
                .and_then(|d| Ok(-d / index_extraordinary(s, l, theta)?)),
        );
    }
    let mut checks: Vec<Check> = worst
        .into_iter()
        .map(|(dev, where_)| Check {
            name: format!("derivative {where_}"),
            value: dev,
            reference: 0.0,
            deviation: dev,
            tolerance: DERIVATIVE_TOLERANCE,
        })
        .collect();
    // Group delay of a dispersionless medium is exactly n/c.
    let flat = SellmeierSet::isotropic_constant(1.5, (0.3, 1.5));
    match group_delay_coefficient(&flat, 0.81, Polarization::Ordinary, 0.0) {
        Ok(g) => checks.push(Check::relative(
            "group delay of a constant index".into(),
            g,
            1.5 / SPEED_OF_LIGHT_UM_PER_FS,
            1e-15,
        )),
        Err(e) => errors.push(Check::failed("group delay of a constant index".into(), &e)),
    }
    checks.extend(errors);
    checks
}

/// Every check of a `validate` run.
pub fn run_validation(deep: bool) -> Vec<Check> {
    let mut checks = check_derivatives(&SellmeierSet::bbo());
    for (label, cfg) in seed_configs() {
        checks.extend(check_config(label, &cfg, deep));
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_agree() {
        for c in check_derivatives(&SellmeierSet::bbo()) {
            assert!(c.passed(), "{c:?}");
        }
    }
}
