//! Birefringent dispersion of a negative uniaxial crystal.
//!
//! Everything here works in micrometers, femtoseconds and radians. Indices
//! come from a four-term Sellmeier form
//!
//! ```text
//! n²(λ) = A + B / (λ² − C) − D·λ²
//! ```
//!
//! and every derivative (walk-off, group index) is taken analytically from
//! that closed form. Finite differences only appear in the tests.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Speed of light in micrometers per femtosecond.
pub const SPEED_OF_LIGHT_UM_PER_FS: f64 = 0.299_792_458;

/// Coefficients of `n²(λ) = a + b/(λ² − c) − d·λ²`, λ in micrometers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SellmeierTerms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SellmeierTerms {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Dispersionless medium with index `n`.
    pub fn constant(n: f64) -> Self {
        Self::new(n * n, 0.0, 0.0, 0.0)
    }

    fn index_squared(&self, wavelength_um: f64) -> f64 {
        let l2 = wavelength_um * wavelength_um;
        self.a + self.b / (l2 - self.c) - self.d * l2
    }

    fn index(&self, wavelength_um: f64) -> f64 {
        self.index_squared(wavelength_um).sqrt()
    }

    /// dn/dλ in 1/μm.
    fn index_derivative(&self, wavelength_um: f64) -> f64 {
        let l = wavelength_um;
        let denom = l * l - self.c;
        let dn2 = -2.0 * self.b * l / (denom * denom) - 2.0 * self.d * l;
        dn2 / (2.0 * self.index(l))
    }
}

/// Ordinary and principal extraordinary Sellmeier terms with their
/// validity window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SellmeierSet {
    pub ordinary: SellmeierTerms,
    pub extraordinary: SellmeierTerms,
    /// Validity window (λ_min, λ_max) in micrometers.
    pub window_um: (f64, f64),
}

impl SellmeierSet {
    /// Builds a set after checking that both indices are real and above one
    /// across the whole window.
    pub fn new(
        ordinary: SellmeierTerms,
        extraordinary: SellmeierTerms,
        window_um: (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = window_um;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            return Err(Error::InvalidConfig(format!(
                "Sellmeier window [{lo}, {hi}] um is not a positive interval"
            )));
        }
        for (name, terms) in [("ordinary", &ordinary), ("extraordinary", &extraordinary)] {
            let coeffs = [terms.a, terms.b, terms.c, terms.d];
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} Sellmeier coefficients must be finite"
                )));
            }
            // λ² − C must stay positive, so the pole sits below the window.
            if terms.b != 0.0 && lo * lo - terms.c <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} Sellmeier pole lies inside the window"
                )));
            }
            const SAMPLES: usize = 257;
            for k in 0..SAMPLES {
                let l = lo + (hi - lo) * k as f64 / (SAMPLES - 1) as f64;
                let n2 = terms.index_squared(l);
                if !(n2 > 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "{name} index squared {n2} <= 1 at {l} um"
                    )));
                }
            }
        }
        Ok(Self {
            ordinary,
            extraordinary,
            window_um,
        })
    }

    /// β-barium borate, λ in μm, valid over 0.22–1.06 μm.
    pub fn bbo() -> Self {
        Self {
            ordinary: SellmeierTerms::new(2.7405, 0.0184, 0.0179, 0.0155),
            extraordinary: SellmeierTerms::new(2.3730, 0.0128, 0.0156, 0.0044),
            window_um: (0.22, 1.06),
        }
    }

    /// A medium without birefringence or dispersion.
    pub fn isotropic_constant(n: f64, window_um: (f64, f64)) -> Self {
        Self {
            ordinary: SellmeierTerms::constant(n),
            extraordinary: SellmeierTerms::constant(n),
            window_um,
        }
    }

    fn check(&self, wavelength_um: f64) -> Result<()> {
        let (lo, hi) = self.window_um;
        if wavelength_um >= lo && wavelength_um <= hi {
            Ok(())
        } else {
            Err(Error::OutOfValidityWindow {
                wavelength_um,
                min_um: lo,
                max_um: hi,
            })
        }
    }
}

impl Default for SellmeierSet {
    fn default() -> Self {
        Self::bbo()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Ordinary,
    Extraordinary,
}

/// Ordinary index n_o(λ).
pub fn index_ordinary(s: &SellmeierSet, wavelength_um: f64) -> Result<f64> {
    s.check(wavelength_um)?;
    Ok(s.ordinary.index(wavelength_um))
}

/// Extraordinary index for a wavevector at `theta` from the optic axis.
pub fn index_extraordinary(s: &SellmeierSet, wavelength_um: f64, theta: f64) -> Result<f64> {
    s.check(wavelength_um)?;
    Ok(extraordinary_unchecked(s, wavelength_um, theta))
}

fn extraordinary_unchecked(s: &SellmeierSet, l: f64, theta: f64) -> f64 {
    let no2 = s.ordinary.index_squared(l);
    let ne2 = s.extraordinary.index_squared(l);
    let (sin, cos) = theta.sin_cos();
    (cos * cos / no2 + sin * sin / ne2).powf(-0.5)
}

pub fn refractive_index(
    s: &SellmeierSet,
    wavelength_um: f64,
    pol: Polarization,
    theta: f64,
) -> Result<f64> {
    match pol {
        Polarization::Ordinary => index_ordinary(s, wavelength_um),
        Polarization::Extraordinary => index_extraordinary(s, wavelength_um, theta),
    }
}

/// Walk-off angle ρ = −(1/n_e)·∂n_e/∂θ of an extraordinary wave.
///
/// From 1/n_e² = cos²θ/n_o² + sin²θ/n̄_e² one gets
/// ρ = ½·n_e²·sin2θ·(1/n̄_e² − 1/n_o²), which is positive when n̄_e < n_o.
pub fn walkoff_angle(s: &SellmeierSet, wavelength_um: f64, theta: f64) -> Result<f64> {
    s.check(wavelength_um)?;
    let no2 = s.ordinary.index_squared(wavelength_um);
    let ne2 = s.extraordinary.index_squared(wavelength_um);
    let n = extraordinary_unchecked(s, wavelength_um, theta);
    Ok(0.5 * n * n * (2.0 * theta).sin() * (1.0 / ne2 - 1.0 / no2))
}

/// ∂n/∂λ along a given polarization, analytic.
pub fn index_wavelength_derivative(
    s: &SellmeierSet,
    wavelength_um: f64,
    pol: Polarization,
    theta: f64,
) -> Result<f64> {
    s.check(wavelength_um)?;
    let l = wavelength_um;
    Ok(match pol {
        Polarization::Ordinary => s.ordinary.index_derivative(l),
        Polarization::Extraordinary => {
            let no = s.ordinary.index(l);
            let ne = s.extraordinary.index(l);
            let n = extraordinary_unchecked(s, l, theta);
            let (sin, cos) = theta.sin_cos();
            n.powi(3)
                * (cos * cos * s.ordinary.index_derivative(l) / no.powi(3)
                    + sin * sin * s.extraordinary.index_derivative(l) / ne.powi(3))
        }
    })
}

/// Inverse group velocity N_g/c in fs/μm, with N_g = n − λ·dn/dλ.
pub fn group_delay_coefficient(
    s: &SellmeierSet,
    wavelength_um: f64,
    pol: Polarization,
    theta: f64,
) -> Result<f64> {
    let n = refractive_index(s, wavelength_um, pol, theta)?;
    let dn = index_wavelength_derivative(s, wavelength_um, pol, theta)?;
    Ok((n - wavelength_um * dn) / SPEED_OF_LIGHT_UM_PER_FS)
}

/// One down-converted wave: central wavelength and polarization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wave {
    pub wavelength_um: f64,
    pub polarization: Polarization,
}

impl Wave {
    pub fn new(wavelength_um: f64, polarization: Polarization) -> Self {
        Self {
            wavelength_um,
            polarization,
        }
    }
}

/// Collinear mismatch n_p/λ_p − n_s/λ_s − n_i/λ_i in 1/μm for an
/// extraordinary pump. The longitudinal Δk is 2π times this.
pub fn collinear_mismatch(
    s: &SellmeierSet,
    theta: f64,
    pump_um: f64,
    signal: Wave,
    idler: Wave,
) -> Result<f64> {
    let np = index_extraordinary(s, pump_um, theta)?;
    let ns = refractive_index(s, signal.wavelength_um, signal.polarization, theta)?;
    let ni = refractive_index(s, idler.wavelength_um, idler.polarization, theta)?;
    Ok(np / pump_um - ns / signal.wavelength_um - ni / idler.wavelength_um)
}

/// Longitudinal phase mismatch Δk = k_p − k_s − k_i in rad/μm.
pub fn longitudinal_mismatch(
    s: &SellmeierSet,
    theta: f64,
    pump_um: f64,
    signal: Wave,
    idler: Wave,
) -> Result<f64> {
    Ok(2.0 * PI * collinear_mismatch(s, theta, pump_um, signal, idler)?)
}

/// Degenerate type-II waves for a pump at `pump_um`: extraordinary signal and
/// ordinary idler, both at twice the pump wavelength.
pub fn degenerate_type_ii(pump_um: f64) -> (Wave, Wave) {
    (
        Wave::new(2.0 * pump_um, Polarization::Extraordinary),
        Wave::new(2.0 * pump_um, Polarization::Ordinary),
    )
}

/// Target residual for the phase-matching root, 1/μm.
pub const PHASE_MATCHING_TOLERANCE: f64 = 1e-12;

/// Collinear degenerate type-II phase-matching angle.
pub fn phase_matching_angle(s: &SellmeierSet, pump_um: f64) -> Result<f64> {
    let (signal, idler) = degenerate_type_ii(pump_um);
    phase_matching_angle_for(s, pump_um, signal, idler)
}

/// Bisection for the angle where `collinear_mismatch` vanishes on [0, π/2].
pub fn phase_matching_angle_for(
    s: &SellmeierSet,
    pump_um: f64,
    signal: Wave,
    idler: Wave,
) -> Result<f64> {
    let f = |theta: f64| collinear_mismatch(s, theta, pump_um, signal, idler);
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoPhaseMatching { pump_um });
    }
    let lo_sign = f_lo.signum();
    let mut best = (f64::INFINITY, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.abs() < best.0 {
            best = (fm.abs(), mid);
        }
        if fm == 0.0 || mid == lo || mid == hi {
            break;
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 < PHASE_MATCHING_TOLERANCE {
        Ok(best.1)
    } else {
        Err(Error::NoPhaseMatching { pump_um })
    }
}

/// Length, cut and Sellmeier data of the nonlinear crystal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystalParams {
    pub length_um: f64,
    /// Angle between the wavevector and the optic axis.
    pub theta_rad: f64,
    pub sellmeier: SellmeierSet,
    /// Gaussian fit exponent for sinc(x) ≈ exp(−γx²).
    pub sinc_gamma: f64,
}

/// Width match of exp(−γx²) to sinc(x) at 1/e² of the maximum.
pub const DEFAULT_SINC_GAMMA: f64 = 0.193;

impl CrystalParams {
    pub fn new(length_um: f64, theta_rad: f64, sellmeier: SellmeierSet, sinc_gamma: f64) -> Result<Self> {
        if !(length_um > 0.0 && length_um.is_finite()) {
            return Err(Error::NonPositiveInput {
                what: "crystal length",
                value: length_um,
            });
        }
        if !(theta_rad > 0.0 && theta_rad < FRAC_PI_2) {
            return Err(Error::InvalidConfig(format!(
                "crystal angle {theta_rad} rad outside (0, pi/2)"
            )));
        }
        if !(sinc_gamma > 0.0 && sinc_gamma.is_finite()) {
            return Err(Error::NonPositiveInput {
                what: "sinc gamma",
                value: sinc_gamma,
            });
        }
        Ok(Self {
            length_um,
            theta_rad,
            sellmeier,
            sinc_gamma,
        })
    }

    /// Crystal cut for degenerate collinear type-II at `pump_um`.
    pub fn phase_matched(length_um: f64, sellmeier: SellmeierSet, pump_um: f64) -> Result<Self> {
        let theta = phase_matching_angle(&sellmeier, pump_um)?;
        Self::new(length_um, theta, sellmeier, DEFAULT_SINC_GAMMA)
    }
}

/// First-order coefficients of Δk ≈ (ρ_p − ρ_s)q_s^x + ρ_p q_i^x + D_sΩ_s − D_iΩ_i.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionData {
    /// Pump walk-off, rad.
    pub rho_p: f64,
    /// Signal walk-off, rad.
    pub rho_s: f64,
    /// Signal minus pump inverse group velocity, fs/μm.
    pub d_s: f64,
    /// Idler minus pump inverse group velocity, fs/μm.
    pub d_i: f64,
}

impl DispersionData {
    pub fn new(rho_p: f64, rho_s: f64, d_s: f64, d_i: f64) -> Result<Self> {
        let all_finite = [rho_p, rho_s, d_s, d_i].iter().all(|v| v.is_finite());
        let angles_ok = rho_p.abs() < FRAC_PI_2 && rho_s.abs() < FRAC_PI_2;
        if !all_finite || !angles_ok {
            return Err(Error::InvalidConfig(format!(
                "dispersion data must be finite with |rho| < pi/2: \
                 rho_p={rho_p}, rho_s={rho_s}, d_s={d_s}, d_i={d_i}"
            )));
        }
        Ok(Self { rho_p, rho_s, d_s, d_i })
    }
}

/// Δk coefficients for the degenerate configuration (signal = idler = 2λ_p).
pub fn dispersion_data(c: &CrystalParams, pump_um: f64) -> Result<DispersionData> {
    dispersion_data_at(c, pump_um, 2.0 * pump_um, 2.0 * pump_um)
}

/// Δk coefficients for arbitrary central signal and idler wavelengths.
pub fn dispersion_data_at(
    c: &CrystalParams,
    pump_um: f64,
    signal_um: f64,
    idler_um: f64,
) -> Result<DispersionData> {
    use Polarization::{Extraordinary, Ordinary};
    let s = &c.sellmeier;
    let theta = c.theta_rad;
    let pump_delay = group_delay_coefficient(s, pump_um, Extraordinary, theta)?;
    let data = DispersionData {
        rho_p: walkoff_angle(s, pump_um, theta)?,
        rho_s: walkoff_angle(s, signal_um, theta)?,
        d_s: group_delay_coefficient(s, signal_um, Extraordinary, theta)? - pump_delay,
        d_i: group_delay_coefficient(s, idler_um, Ordinary, theta)? - pump_delay,
    };
    DispersionData::new(data.rho_p, data.rho_s, data.d_s, data.d_i)
}

/// Longitudinal Δk (rad/μm) of the crystal's type-II assignment at the given
/// central wavelengths.
pub fn phase_mismatch_at_centers(
    c: &CrystalParams,
    pump_um: f64,
    signal_um: f64,
    idler_um: f64,
) -> Result<f64> {
    longitudinal_mismatch(
        &c.sellmeier,
        c.theta_rad,
        pump_um,
        Wave::new(signal_um, Polarization::Extraordinary),
        Wave::new(idler_um, Polarization::Ordinary),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Direct evaluation of the BBO Sellmeier expressions, worked by hand:
    //   n_o(0.405)  = sqrt(2.7405 + 0.0184/(0.164025-0.0179) - 0.0155*0.164025) = 1.69230
    //   n_o(0.810)  = sqrt(2.7405 + 0.0184/(0.6561-0.0179)   - 0.0155*0.6561)   = 1.66107
    //   n̄_e(0.405) = sqrt(2.3730 + 0.0128/(0.164025-0.0156) - 0.0044*0.164025) = 1.56797
    #[test]
    fn bbo_indices_match_hand_evaluation() {
        let s = SellmeierSet::bbo();
        assert!((index_ordinary(&s, 0.405).unwrap() - 1.6923).abs() < 5e-4);
        assert!((index_ordinary(&s, 0.810).unwrap() - 1.6611).abs() < 5e-4);
        let ne = index_extraordinary(&s, 0.405, FRAC_PI_2).unwrap();
        assert!((ne - 1.5680).abs() < 5e-4);
    }

    #[test]
    fn constant_set_gives_sqrt_a() {
        let s = SellmeierSet::isotropic_constant(1.5, (0.3, 1.0));
        for l in [0.3, 0.55, 1.0] {
            assert_relative_eq!(index_ordinary(&s, l).unwrap(), 1.5, epsilon = 1e-15);
            assert_relative_eq!(
                group_delay_coefficient(&s, l, Polarization::Ordinary, 0.3).unwrap(),
                1.5 / SPEED_OF_LIGHT_UM_PER_FS,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn on_axis_extraordinary_is_ordinary() {
        let s = SellmeierSet::bbo();
        for l in [0.25, 0.405, 0.81, 1.0] {
            assert_relative_eq!(
                index_extraordinary(&s, l, 0.0).unwrap(),
                index_ordinary(&s, l).unwrap(),
                max_relative = 1e-15
            );
            assert_relative_eq!(
                group_delay_coefficient(&s, l, Polarization::Extraordinary, 0.0).unwrap(),
                group_delay_coefficient(&s, l, Polarization::Ordinary, 0.0).unwrap(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn extraordinary_index_decreases_with_angle() {
        let s = SellmeierSet::bbo();
        let mut prev = f64::INFINITY;
        for k in 0..=90 {
            let theta = FRAC_PI_2 * k as f64 / 90.0;
            let n = index_extraordinary(&s, 0.405, theta).unwrap();
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn walkoff_vanishes_at_ends() {
        let s = SellmeierSet::bbo();
        assert!(walkoff_angle(&s, 0.405, 0.0).unwrap().abs() < 1e-9);
        assert!(walkoff_angle(&s, 0.405, FRAC_PI_2).unwrap().abs() < 1e-9);
    }

    #[test]
    fn out_of_window_is_rejected() {
        let s = SellmeierSet::bbo();
        assert!(matches!(
            index_ordinary(&s, 2.0),
            Err(Error::OutOfValidityWindow { .. })
        ));
        assert!(matches!(
            walkoff_angle(&s, 0.1, 0.5),
            Err(Error::OutOfValidityWindow { .. })
        ));
    }

    #[test]
    fn isotropic_medium_cannot_phase_match() {
        let s = SellmeierSet::new(
            SellmeierTerms::new(2.7405, 0.0184, 0.0179, 0.0155),
            SellmeierTerms::new(2.7405, 0.0184, 0.0179, 0.0155),
            (0.22, 1.06),
        )
        .unwrap();
        assert!(matches!(
            phase_matching_angle(&s, 0.405),
            Err(Error::NoPhaseMatching { .. })
        ));
    }

    #[test]
    fn relabeled_polarizations_give_same_angle() {
        let s = SellmeierSet::bbo();
        let theta = phase_matching_angle(&s, 0.405).unwrap();
        let swapped = phase_matching_angle_for(
            &s,
            0.405,
            Wave::new(0.81, Polarization::Ordinary),
            Wave::new(0.81, Polarization::Extraordinary),
        )
        .unwrap();
        assert_relative_eq!(theta, swapped, max_relative = 1e-11);
    }

    #[test]
    fn isotropic_dispersionless_crystal_has_no_walkoff_or_delay() {
        let s = SellmeierSet::isotropic_constant(1.6, (0.22, 1.06));
        let c = CrystalParams::new(1000.0, 0.7, s, DEFAULT_SINC_GAMMA).unwrap();
        let d = dispersion_data(&c, 0.405).unwrap();
        assert_eq!(d.rho_p, 0.0);
        assert_eq!(d.rho_s, 0.0);
        assert_eq!(d.d_s, 0.0);
        assert_eq!(d.d_i, 0.0);
    }

    #[test]
    fn invalid_sellmeier_sets_are_rejected() {
        let pole_inside = SellmeierSet::new(
            SellmeierTerms::new(2.7, 0.02, 0.1, 0.0),
            SellmeierTerms::new(2.4, 0.01, 0.01, 0.0),
            (0.22, 1.0),
        );
        assert!(pole_inside.is_err());
        let sub_unity = SellmeierSet::new(
            SellmeierTerms::new(0.9, 0.0, 0.0, 0.0),
            SellmeierTerms::new(2.4, 0.0, 0.0, 0.0),
            (0.3, 1.0),
        );
        assert!(sub_unity.is_err());
    }
}
