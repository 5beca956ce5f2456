//! The filtered biphoton as a real quadratic form.
//!
//! Under Gaussian pump and filter profiles, the sinc ≈ exp(−γx²) fit and a
//! first-order Δk, the mode function becomes φ ∝ exp(xᵀAx) with
//! x = (q_s^x, q_s^y, q_i^x, q_i^y, Ω_s, Ω_i). Transverse wavevectors are in
//! rad/μm and detunings in rad/fs.
//!
//! The phase factor exp(iΔkL/2) is left out of A. Δk is linear in x, so the
//! factor splits into exp(i·k_s·x_s)·exp(i·k_i·x_i), a product of
//! single-photon linear phases. It cancels in |φ|², in every filtered mass,
//! and in Tr(ρ²) of any reduced state: conjugating a kernel ρ(a, a′) by a
//! local phase e^{i k·a} leaves Tr(ρ²) unchanged. A can therefore stay real
//! symmetric.

use nalgebra::{DMatrix, Matrix6, Vector6};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dispersion::{
    dispersion_data_at, phase_mismatch_at_centers, CrystalParams, DispersionData, SellmeierSet,
    SPEED_OF_LIGHT_UM_PER_FS,
};
use crate::error::{Error, Result};

/// Coordinates of the six-dimensional biphoton space, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Coord {
    QsX,
    QsY,
    QiX,
    QiY,
    OmegaS,
    OmegaI,
}

impl Coord {
    pub const ALL: [Coord; 6] = [
        Coord::QsX,
        Coord::QsY,
        Coord::QiX,
        Coord::QiY,
        Coord::OmegaS,
        Coord::OmegaI,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Coord::QsX => "q_s^x",
            Coord::QsY => "q_s^y",
            Coord::QiX => "q_i^x",
            Coord::QiY => "q_i^y",
            Coord::OmegaS => "Omega_s",
            Coord::OmegaI => "Omega_i",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Coord::OmegaS | Coord::OmegaI => "rad/fs",
            _ => "rad/um",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Photon {
    Signal,
    Idler,
}

impl Photon {
    pub fn partner(self) -> Photon {
        match self {
            Photon::Signal => Photon::Idler,
            Photon::Idler => Photon::Signal,
        }
    }
}

/// Which arms' filters enter the quadratic form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMask {
    Both,
    #[serde(rename = "signal")]
    SignalOnly,
    #[serde(rename = "idler")]
    IdlerOnly,
    None,
}

impl FilterMask {
    pub fn only(photon: Photon) -> Self {
        match photon {
            Photon::Signal => FilterMask::SignalOnly,
            Photon::Idler => FilterMask::IdlerOnly,
        }
    }

    fn filters(self, photon: Photon) -> bool {
        matches!(
            (self, photon),
            (FilterMask::Both, _)
                | (FilterMask::SignalOnly, Photon::Signal)
                | (FilterMask::IdlerOnly, Photon::Idler)
        )
    }
}

/// Degrees of freedom over which detection probabilities are integrated.
///
/// `Spatial` integrates the spatial joint spectrum (all detunings at zero),
/// `Spectral` the spectral joint spectrum (all transverse wavevectors at
/// zero), `Full` the whole six-dimensional |φ|².
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EfficiencyDomain {
    #[default]
    Spatial,
    Spectral,
    Full,
}

impl EfficiencyDomain {
    pub fn coords(self) -> &'static [Coord] {
        match self {
            EfficiencyDomain::Spatial => &[Coord::QsX, Coord::QsY, Coord::QiX, Coord::QiY],
            EfficiencyDomain::Spectral => &[Coord::OmegaS, Coord::OmegaI],
            EfficiencyDomain::Full => &Coord::ALL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpParams {
    pub wavelength_um: f64,
    /// Beam waist; zero means a plane-wave pump in the transverse plane.
    pub waist_um: f64,
    /// Gaussian σ of the pump spectrum in wavelength. May be infinite.
    pub bandwidth_nm: f64,
}

impl PumpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_um > 0.0 && self.wavelength_um.is_finite()) {
            return Err(Error::NonPositiveInput {
                what: "pump wavelength",
                value: self.wavelength_um,
            });
        }
        if !(self.waist_um >= 0.0 && self.waist_um.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "pump waist must be finite and >= 0, got {}",
                self.waist_um
            )));
        }
        if !(self.bandwidth_nm > 0.0) {
            return Err(Error::NonPositiveInput {
                what: "pump bandwidth",
                value: self.bandwidth_nm,
            });
        }
        Ok(())
    }
}

/// Spectral (σ) and spatial (collecting mode) filters of both arms.
///
/// A `None` bandwidth means no spectral filter; a zero mode means no spatial
/// filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSet {
    pub signal_bandwidth_nm: Option<f64>,
    pub idler_bandwidth_nm: Option<f64>,
    pub signal_mode_um: f64,
    pub idler_mode_um: f64,
}

impl FilterSet {
    pub fn symmetric(bandwidth_nm: Option<f64>, mode_um: f64) -> Self {
        Self {
            signal_bandwidth_nm: bandwidth_nm,
            idler_bandwidth_nm: bandwidth_nm,
            signal_mode_um: mode_um,
            idler_mode_um: mode_um,
        }
    }

    pub fn unfiltered() -> Self {
        Self::symmetric(None, 0.0)
    }

    pub fn bandwidth_nm(&self, photon: Photon) -> Option<f64> {
        match photon {
            Photon::Signal => self.signal_bandwidth_nm,
            Photon::Idler => self.idler_bandwidth_nm,
        }
    }

    pub fn mode_um(&self, photon: Photon) -> f64 {
        match photon {
            Photon::Signal => self.signal_mode_um,
            Photon::Idler => self.idler_mode_um,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for sigma in [self.signal_bandwidth_nm, self.idler_bandwidth_nm].into_iter().flatten() {
            if !(sigma > 0.0) {
                return Err(Error::NonPositiveInput {
                    what: "filter bandwidth",
                    value: sigma,
                });
            }
        }
        for w in [self.signal_mode_um, self.idler_mode_um] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "collecting mode must be finite and >= 0, got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// Full physical description of one filtered source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub pump: PumpParams,
    pub crystal: CrystalParams,
    pub dispersion: DispersionData,
    pub filters: FilterSet,
    pub signal_wavelength_um: f64,
    pub idler_wavelength_um: f64,
    /// Domain used for heralding efficiencies in reports.
    pub efficiency_domain: EfficiencyDomain,
}

/// Energy conservation tolerance on 1/λ_s + 1/λ_i − 1/λ_p, in 1/μm.
pub const ENERGY_CONSERVATION_TOLERANCE: f64 = 1e-9;

impl SourceConfig {
    /// Degenerate source with dispersion derived from the crystal's
    /// Sellmeier data.
    pub fn new(pump: PumpParams, crystal: CrystalParams, filters: FilterSet) -> Result<Self> {
        let centre = 2.0 * pump.wavelength_um;
        let dispersion = dispersion_data_at(&crystal, pump.wavelength_um, centre, centre)?;
        let cfg = Self {
            pump,
            crystal,
            dispersion,
            filters,
            signal_wavelength_um: centre,
            idler_wavelength_um: centre,
            efficiency_domain: EfficiencyDomain::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 1 mm BBO cut for degenerate type-II at 405 nm, σ_p = 1 nm,
    /// w_p = 10 μm, with 5 nm spectral filters and 10 μm collecting modes.
    pub fn baseline() -> Self {
        let pump = PumpParams {
            wavelength_um: 0.405,
            waist_um: 10.0,
            bandwidth_nm: 1.0,
        };
        let crystal = CrystalParams::phase_matched(1000.0, SellmeierSet::bbo(), pump.wavelength_um)
            .expect("BBO phase-matches at 405 nm");
        Self::new(pump, crystal, FilterSet::symmetric(Some(5.0), 10.0))
            .expect("baseline configuration is valid")
    }

    pub fn with_filters(mut self, filters: FilterSet) -> Self {
        self.filters = filters;
        self
    }

    pub fn with_pump_waist(mut self, waist_um: f64) -> Self {
        self.pump.waist_um = waist_um;
        self
    }

    pub fn with_pump_bandwidth(mut self, bandwidth_nm: f64) -> Self {
        self.pump.bandwidth_nm = bandwidth_nm;
        self
    }

    pub fn with_dispersion(mut self, dispersion: DispersionData) -> Self {
        self.dispersion = dispersion;
        self
    }

    pub fn with_efficiency_domain(mut self, domain: EfficiencyDomain) -> Self {
        self.efficiency_domain = domain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.pump.validate()?;
        self.filters.validate()?;
        let c = &self.crystal;
        CrystalParams::new(c.length_um, c.theta_rad, c.sellmeier, c.sinc_gamma)?;
        DispersionData::new(
            self.dispersion.rho_p,
            self.dispersion.rho_s,
            self.dispersion.d_s,
            self.dispersion.d_i,
        )?;
        for (what, l) in [
            ("signal wavelength", self.signal_wavelength_um),
            ("idler wavelength", self.idler_wavelength_um),
        ] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::NonPositiveInput { what, value: l });
            }
        }
        let residual = self.energy_mismatch();
        if residual.abs() > ENERGY_CONSERVATION_TOLERANCE {
            return Err(Error::InvalidConfig(format!(
                "central wavelengths violate energy conservation by {residual:e} 1/um"
            )));
        }
        Ok(())
    }

    /// 1/λ_s + 1/λ_i − 1/λ_p in 1/μm.
    pub fn energy_mismatch(&self) -> f64 {
        1.0 / self.signal_wavelength_um + 1.0 / self.idler_wavelength_um
            - 1.0 / self.pump.wavelength_um
    }

    /// Longitudinal Δk at the central wavelengths (rad/μm). Zero for a
    /// phase-matched degenerate source; only reported otherwise.
    pub fn phase_matching_residual(&self) -> Result<f64> {
        phase_mismatch_at_centers(
            &self.crystal,
            self.pump.wavelength_um,
            self.signal_wavelength_um,
            self.idler_wavelength_um,
        )
    }

    pub fn central_wavelength_um(&self, photon: Photon) -> f64 {
        match photon {
            Photon::Signal => self.signal_wavelength_um,
            Photon::Idler => self.idler_wavelength_um,
        }
    }
}

/// Gaussian σ in wavelength (nm) to angular frequency (rad/fs) around
/// `center_um`, through the first-order Jacobian |dω/dλ| = 2πc/λ².
pub fn bandwidth_to_angular(sigma_nm: f64, center_um: f64) -> Result<f64> {
    if !(sigma_nm > 0.0) {
        return Err(Error::NonPositiveInput {
            what: "bandwidth",
            value: sigma_nm,
        });
    }
    if !(center_um > 0.0) {
        return Err(Error::NonPositiveInput {
            what: "central wavelength",
            value: center_um,
        });
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT_UM_PER_FS * (sigma_nm * 1e-3) / (center_um * center_um))
}

fn inverse_square(sigma: f64) -> f64 {
    // σ = ∞ is an absent filter: no confinement.
    if sigma.is_infinite() {
        0.0
    } else {
        1.0 / (sigma * sigma)
    }
}

/// The 6×6 real symmetric matrix A of φ ∝ exp(xᵀAx).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticForm {
    matrix: Matrix6<f64>,
}

impl QuadraticForm {
    /// Wraps a matrix, symmetrizing it exactly.
    pub fn from_matrix(m: Matrix6<f64>) -> Self {
        let matrix = (m + m.transpose()) * 0.5;
        Self { matrix }
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.matrix
    }

    pub fn entry(&self, row: Coord, col: Coord) -> f64 {
        self.matrix[(row.index(), col.index())]
    }

    /// Sub-matrix on the given coordinates, in the given order.
    pub fn restrict(&self, coords: &[Coord]) -> DMatrix<f64> {
        DMatrix::from_fn(coords.len(), coords.len(), |r, c| {
            self.matrix[(coords[r].index(), coords[c].index())]
        })
    }

    /// xᵀAx.
    pub fn exponent(&self, x: &Vector6<f64>) -> f64 {
        (x.transpose() * self.matrix * x)[(0, 0)]
    }

    /// |φ(x)|² / |N|² = exp(2xᵀAx).
    pub fn mode_function_value(&self, x: &Vector6<f64>) -> f64 {
        (2.0 * self.exponent(x)).exp()
    }

    /// Phase-matching direction b with Δk = b·x.
    pub fn phase_matching_vector(d: &DispersionData) -> Vector6<f64> {
        Vector6::new(d.rho_p - d.rho_s, 0.0, d.rho_p, 0.0, d.d_s, -d.d_i)
    }
}

/// Assembles A for a source with the given arms filtered:
///
/// ```text
/// A = −¼ [ w_p²(u_x u_xᵀ + u_y u_yᵀ) + σ_p⁻² u_Ω u_Ωᵀ
///          + w_s²(e₁e₁ᵀ + e₂e₂ᵀ) + w_i²(e₃e₃ᵀ + e₄e₄ᵀ)
///          + σ_s⁻² e₅e₅ᵀ + σ_i⁻² e₆e₆ᵀ + γL² b bᵀ ]
/// ```
///
/// with u_x = e₁+e₃, u_y = e₂+e₄, u_Ω = e₅+e₆ and all σ in rad/fs.
pub fn assemble_quadratic_form(cfg: &SourceConfig, mask: FilterMask) -> Result<QuadraticForm> {
    cfg.validate()?;
    let d = &cfg.dispersion;
    let mut m = Matrix6::<f64>::zeros();

    let add_outer = |m: &mut Matrix6<f64>, u: &Vector6<f64>, weight: f64| {
        if weight != 0.0 {
            *m += u * u.transpose() * weight;
        }
    };
    let unit = |c: Coord| {
        let mut e = Vector6::zeros();
        e[c.index()] = 1.0;
        e
    };

    let wp2 = cfg.pump.waist_um * cfg.pump.waist_um;
    add_outer(&mut m, &(unit(Coord::QsX) + unit(Coord::QiX)), wp2);
    add_outer(&mut m, &(unit(Coord::QsY) + unit(Coord::QiY)), wp2);
    let pump_sigma = bandwidth_to_angular(cfg.pump.bandwidth_nm, cfg.pump.wavelength_um)?;
    add_outer(
        &mut m,
        &(unit(Coord::OmegaS) + unit(Coord::OmegaI)),
        inverse_square(pump_sigma),
    );

    for photon in [Photon::Signal, Photon::Idler] {
        if !mask.filters(photon) {
            continue;
        }
        let (qx, qy, omega) = match photon {
            Photon::Signal => (Coord::QsX, Coord::QsY, Coord::OmegaS),
            Photon::Idler => (Coord::QiX, Coord::QiY, Coord::OmegaI),
        };
        let w = cfg.filters.mode_um(photon);
        add_outer(&mut m, &unit(qx), w * w);
        add_outer(&mut m, &unit(qy), w * w);
        if let Some(sigma_nm) = cfg.filters.bandwidth_nm(photon) {
            let sigma = bandwidth_to_angular(sigma_nm, cfg.central_wavelength_um(photon))?;
            add_outer(&mut m, &unit(omega), inverse_square(sigma));
        }
    }

    let gamma = cfg.crystal.sinc_gamma;
    let length = cfg.crystal.length_um;
    add_outer(
        &mut m,
        &QuadraticForm::phase_matching_vector(d),
        gamma * length * length,
    );

    Ok(QuadraticForm::from_matrix(m * -0.25))
}

/// |φ(x)|²/|N|² for a form, the exported name of the evaluation.
pub fn mode_function_value(q: &QuadraticForm, x: &Vector6<f64>) -> f64 {
    q.mode_function_value(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    #[test]
    fn bandwidth_conversion() {
        let v = bandwidth_to_angular(1.0, 0.405).unwrap();
        assert!((v - 1.14839e-2).abs() < 1e-6, "{v}");
        let doubled = bandwidth_to_angular(2.0, 0.405).unwrap();
        assert!((doubled - 2.0 * v).abs() < 1e-15);
        assert!(bandwidth_to_angular(1e-12, 0.405).unwrap() < 1e-13);
        assert!(matches!(
            bandwidth_to_angular(0.0, 0.405),
            Err(Error::NonPositiveInput { .. })
        ));
        assert!(bandwidth_to_angular(1.0, -0.4).is_err());
    }

    #[test]
    fn unfiltered_plane_wave_cw_pump_leaves_rank_one() {
        let mut cfg = SourceConfig::baseline();
        cfg.pump.waist_um = 0.0;
        cfg.pump.bandwidth_nm = f64::INFINITY;
        let a = assemble_quadratic_form(&cfg, FilterMask::None).unwrap();
        let b = QuadraticForm::phase_matching_vector(&cfg.dispersion);
        let gl2 = cfg.crystal.sinc_gamma * cfg.crystal.length_um.powi(2);
        let expected = b * b.transpose() * (-0.25 * gl2);
        assert!((a.matrix() - expected).abs().max() < 1e-9);
        let eig = SymmetricEigen::new(*a.matrix());
        let scale = eig.eigenvalues.abs().max();
        let rank = eig.eigenvalues.iter().filter(|v| v.abs() > 1e-12 * scale).count();
        assert_eq!(rank, 1);
    }

    #[test]
    fn baseline_form_is_negative_definite() {
        let a = assemble_quadratic_form(&SourceConfig::baseline(), FilterMask::Both).unwrap();
        assert!((-a.matrix()).cholesky().is_some());
    }

    #[test]
    fn symmetric_and_walkoff_plane_only() {
        let a = assemble_quadratic_form(&SourceConfig::baseline(), FilterMask::Both).unwrap();
        assert_eq!(*a.matrix(), a.matrix().transpose());
        for y in [Coord::QsY, Coord::QiY] {
            for other in [Coord::QsX, Coord::QiX, Coord::OmegaS, Coord::OmegaI] {
                assert_eq!(a.entry(y, other), 0.0);
                assert_eq!(a.entry(other, y), 0.0);
            }
        }
    }

    #[test]
    fn signal_only_mask_drops_idler_filter_terms() {
        let cfg = SourceConfig::baseline();
        let both = assemble_quadratic_form(&cfg, FilterMask::Both).unwrap();
        let signal = assemble_quadratic_form(&cfg, FilterMask::SignalOnly).unwrap();
        let diff = both.matrix() - signal.matrix();
        for r in 0..6 {
            for c in 0..6 {
                let touched = r == c && [2, 3, 5].contains(&r);
                if !touched {
                    assert_eq!(diff[(r, c)], 0.0, "entry ({r},{c})");
                } else {
                    assert!(diff[(r, c)] < 0.0);
                }
            }
        }
    }

    #[test]
    fn mode_function_peak_and_antidiagonal() {
        let cfg = SourceConfig::baseline();
        let a = assemble_quadratic_form(&cfg, FilterMask::Both).unwrap();
        assert_eq!(mode_function_value(&a, &Vector6::zeros()), 1.0);
        let x = Vector6::new(1e-3, -2e-3, 0.0, 0.0, 0.0, 0.0);
        assert!(mode_function_value(&a, &x) < 1.0);

        // On x = (0,0,0,0,Ω,−Ω) the pump-bandwidth term vanishes, leaving
        // 2xᵀAx = −½[σ_s⁻² + σ_i⁻² + γL²(D_s + D_i)²]Ω².
        let omega = 5.0 * bandwidth_to_angular(1.0, 0.405).unwrap();
        let x = Vector6::new(0.0, 0.0, 0.0, 0.0, omega, -omega);
        let sig = bandwidth_to_angular(5.0, 0.81).unwrap();
        let d = cfg.dispersion;
        let gl2 = 0.193 * 1000.0 * 1000.0;
        let by_hand = (-0.5
            * (2.0 / (sig * sig) + gl2 * (d.d_s + d.d_i) * (d.d_s + d.d_i))
            * omega
            * omega)
            .exp();
        let got = mode_function_value(&a, &x);
        assert!((got - by_hand).abs() <= 1e-12 * by_hand.max(1e-300), "{got} vs {by_hand}");
    }

    #[test]
    fn energy_conservation_is_enforced() {
        let mut cfg = SourceConfig::baseline();
        cfg.signal_wavelength_um = 0.8;
        assert!(cfg.validate().is_err());
        cfg.idler_wavelength_um = 1.0 / (1.0 / 0.405 - 1.0 / 0.8);
        assert!(cfg.validate().is_ok());
        assert!(cfg.phase_matching_residual().unwrap().abs() > 0.0);
    }
}
