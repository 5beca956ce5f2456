//! Physical observables: purities, heralding efficiencies, PEFs and
//! joint-spectrum slices.
//!
//! Heralding efficiencies read the detection probabilities as masses of the
//! bare |φ|² with filters applied explicitly, so η = P_c / P_herald is a
//! ratio of two filtered Gaussian masses. The mass can be taken over the
//! spatial joint spectrum, the spectral joint spectrum or all six
//! coordinates (see [`EfficiencyDomain`]).

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{detection_probability_ratio_in, reduce_pure_state};
use crate::model::{assemble_quadratic_form, Coord, EfficiencyDomain, FilterMask, Photon, SourceConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    SpatialSignal,
    SpatialIdler,
    SpectralSignal,
    SpectralIdler,
}

impl Subsystem {
    pub const ALL: [Subsystem; 4] = [
        Subsystem::SpatialSignal,
        Subsystem::SpatialIdler,
        Subsystem::SpectralSignal,
        Subsystem::SpectralIdler,
    ];

    pub fn coords(self) -> &'static [Coord] {
        match self {
            Subsystem::SpatialSignal => &[Coord::QsX, Coord::QsY],
            Subsystem::SpatialIdler => &[Coord::QiX, Coord::QiY],
            Subsystem::SpectralSignal => &[Coord::OmegaS],
            Subsystem::SpectralIdler => &[Coord::OmegaI],
        }
    }

    pub fn spectral(photon: Photon) -> Self {
        match photon {
            Photon::Signal => Subsystem::SpectralSignal,
            Photon::Idler => Subsystem::SpectralIdler,
        }
    }

    pub fn spatial(photon: Photon) -> Self {
        match photon {
            Photon::Signal => Subsystem::SpatialSignal,
            Photon::Idler => Subsystem::SpatialIdler,
        }
    }
}

/// Purity of one photon's spatial or spectral state, both arms filtered.
pub fn subsystem_purity(cfg: &SourceConfig, s: Subsystem) -> Result<f64> {
    let a = assemble_quadratic_form(cfg, FilterMask::Both)?;
    reduce_pure_state(&a, s.coords())?.purity()
}

/// η for the given heralding photon over the configured domain.
pub fn heralding_efficiency(cfg: &SourceConfig, heralding: Photon) -> Result<f64> {
    heralding_efficiency_in(cfg, heralding, cfg.efficiency_domain)
}

/// η = P_c / P_herald, where P_c applies both arms' filters and P_herald
/// only the heralding arm's.
pub fn heralding_efficiency_in(
    cfg: &SourceConfig,
    heralding: Photon,
    domain: EfficiencyDomain,
) -> Result<f64> {
    let both = assemble_quadratic_form(cfg, FilterMask::Both)?;
    let herald = assemble_quadratic_form(cfg, FilterMask::only(heralding))?;
    detection_probability_ratio_in(&both, &herald, domain.coords())
}

/// Spectral purity of the heralded photon times the heralding efficiency
/// of its partner.
pub fn pef(cfg: &SourceConfig, heralded: Photon) -> Result<f64> {
    let purity = subsystem_purity(cfg, Subsystem::spectral(heralded))?;
    let eta = heralding_efficiency(cfg, heralded.partner())?;
    Ok(purity * eta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservablesReport {
    pub config: SourceConfig,
    pub p_qs: f64,
    pub p_qi: f64,
    pub p_omega_s: f64,
    pub p_omega_i: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    /// P_Ωs · η_i.
    pub pef_signal_heralded: f64,
    /// P_Ωi · η_s.
    pub pef_idler_heralded: f64,
}

impl ObservablesReport {
    /// Column names (with units) and values, in output order.
    pub fn fields(&self) -> [(&'static str, f64); 8] {
        [
            ("p_qs", self.p_qs),
            ("p_qi", self.p_qi),
            ("p_omega_s", self.p_omega_s),
            ("p_omega_i", self.p_omega_i),
            ("eta_s", self.eta_s),
            ("eta_i", self.eta_i),
            ("pef_signal_heralded", self.pef_signal_heralded),
            ("pef_idler_heralded", self.pef_idler_heralded),
        ]
    }
}

pub fn observables_report(cfg: &SourceConfig) -> Result<ObservablesReport> {
    let both = assemble_quadratic_form(cfg, FilterMask::Both)?;
    let purity = |s: Subsystem| reduce_pure_state(&both, s.coords())?.purity();
    let coords = cfg.efficiency_domain.coords();
    let eta = |heralding: Photon| {
        let herald = assemble_quadratic_form(cfg, FilterMask::only(heralding))?;
        detection_probability_ratio_in(&both, &herald, coords)
    };
    let p_omega_s = purity(Subsystem::SpectralSignal)?;
    let p_omega_i = purity(Subsystem::SpectralIdler)?;
    let eta_s = eta(Photon::Signal)?;
    let eta_i = eta(Photon::Idler)?;
    Ok(ObservablesReport {
        config: *cfg,
        p_qs: purity(Subsystem::SpatialSignal)?,
        p_qi: purity(Subsystem::SpatialIdler)?,
        p_omega_s,
        p_omega_i,
        eta_s,
        eta_i,
        pef_signal_heralded: p_omega_s * eta_i,
        pef_idler_heralded: p_omega_i * eta_s,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceDomain {
    /// Ω_s × Ω_i with every transverse wavevector at zero.
    Spectral,
    /// q_s^x × q_i^x with the y components and detunings at zero.
    Spatial,
}

impl SliceDomain {
    pub fn axes(self) -> [Coord; 2] {
        match self {
            SliceDomain::Spectral => [Coord::OmegaS, Coord::OmegaI],
            SliceDomain::Spatial => [Coord::QsX, Coord::QiX],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceRequest {
    pub domain: SliceDomain,
    /// Half-width of both axes, in the axis unit. `None` picks four
    /// standard deviations of the wider marginal.
    pub range: Option<f64>,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceGrid {
    pub domain: SliceDomain,
    pub mask: FilterMask,
    pub axes: [Coord; 2],
    /// Sample positions along the first axis (rows).
    pub x: Vec<f64>,
    /// Sample positions along the second axis (columns).
    pub y: Vec<f64>,
    /// values[i][j] at (x[i], y[j]), scaled to unit maximum.
    pub values: Vec<Vec<f64>>,
    /// Unscaled maximum of exp(2xᵀAx) on the grid.
    pub raw_max: f64,
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { nodes[i] - nodes[i - 1] } else { 0.0 };
            let right = if i + 1 < n { nodes[i + 1] - nodes[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

impl SliceGrid {
    /// Trapezoid integral of the normalized values.
    pub fn mass(&self) -> f64 {
        let wx = trapezoid_weights(&self.x);
        let wy = trapezoid_weights(&self.y);
        let mut total = 0.0;
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                total += wx[i] * wy[j] * v;
            }
        }
        total
    }

    /// Trapezoid integral of exp(2xᵀAx) itself, comparable across masks.
    pub fn raw_mass(&self) -> f64 {
        self.mass() * self.raw_max
    }

    /// Second moments [[Σxx, Σxy], [Σxy, Σyy]] of the slice as a density.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let wx = trapezoid_weights(&self.x);
        let wy = trapezoid_weights(&self.y);
        let (mut m0, mut mx, mut my) = (0.0, 0.0, 0.0);
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let w = wx[i] * wy[j] * v;
                m0 += w;
                mx += w * self.x[i];
                my += w * self.y[j];
            }
        }
        let (cx, cy) = (mx / m0, my / m0);
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let w = wx[i] * wy[j] * v;
                let (dx, dy) = (self.x[i] - cx, self.y[j] - cy);
                sxx += w * dx * dx;
                sxy += w * dx * dy;
                syy += w * dy * dy;
            }
        }
        [[sxx / m0, sxy / m0], [sxy / m0, syy / m0]]
    }

    /// Direction of the ellipse's long axis, in degrees within [0, 180).
    pub fn principal_axis_deg(&self) -> f64 {
        let c = self.covariance();
        let m = DMatrix::from_row_slice(2, 2, &[c[0][0], c[0][1], c[1][0], c[1][1]]);
        let eig = SymmetricEigen::new(m);
        let k = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
        let v = eig.eigenvectors.column(k);
        v[1].atan2(v[0]).to_degrees().rem_euclid(180.0)
    }

    /// Angle between the long axis and the −45° anti-diagonal, in [0, 90].
    pub fn tilt_from_antidiagonal_deg(&self) -> f64 {
        let d = (self.principal_axis_deg() - 135.0).rem_euclid(180.0);
        d.min(180.0 - d)
    }

    /// Angles of the two regression lines (the ellipse's vertical and
    /// horizontal tangent points) from the coordinate axes, in degrees.
    /// Both vanish for an ellipse aligned with the axes.
    pub fn tangent_angles_deg(&self) -> [f64; 2] {
        let c = self.covariance();
        [
            (c[0][1].abs() / c[0][0]).atan().to_degrees(),
            (c[0][1].abs() / c[1][1]).atan().to_degrees(),
        ]
    }
}

/// Samples |φ|² on a 2-D slice through the origin, other coordinates zero.
pub fn joint_spectrum_slice(
    cfg: &SourceConfig,
    mask: FilterMask,
    req: &SliceRequest,
) -> Result<SliceGrid> {
    if req.points < 2 {
        return Err(Error::InvalidGrid(format!(
            "slice needs at least 2 points per axis, got {}",
            req.points
        )));
    }
    let a = assemble_quadratic_form(cfg, mask)?;
    let axes = req.domain.axes();
    let block = a.restrict(&axes);
    let range = match req.range {
        Some(r) if r > 0.0 && r.is_finite() => r,
        Some(r) => return Err(Error::InvalidGrid(format!("slice range must be positive and finite, got {r}"))),
        None => auto_range(&block, &axes)?,
    };
    let nodes: Vec<f64> = (0..req.points)
        .map(|k| -range + 2.0 * range * k as f64 / (req.points - 1) as f64)
        .collect();
    let raw: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&u| {
            nodes
                .iter()
                .map(|&v| {
                    let e = block[(0, 0)] * u * u + 2.0 * block[(0, 1)] * u * v + block[(1, 1)] * v * v;
                    (2.0 * e).exp()
                })
                .collect()
        })
        .collect();
    let raw_max = raw.iter().flatten().cloned().fold(0.0, f64::max);
    if !(raw_max > 0.0) {
        return Err(Error::InvalidGrid("slice underflows everywhere".into()));
    }
    let values = raw
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / raw_max).collect())
        .collect();
    Ok(SliceGrid {
        domain: req.domain,
        mask,
        axes,
        x: nodes.clone(),
        y: nodes,
        values,
        raw_max,
    })
}

fn auto_range(block: &DMatrix<f64>, axes: &[Coord; 2]) -> Result<f64> {
    let cov = (block * -4.0).try_inverse().filter(|c| c[(0, 0)] > 0.0 && c[(1, 1)] > 0.0);
    match cov {
        Some(c) => Ok(4.0 * c[(0, 0)].max(c[(1, 1)]).sqrt()),
        None => Err(Error::Unnormalizable {
            context: "slice".into(),
            direction: crate::gaussian::unconfined_direction(block, axes),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FilterSet;

    #[test]
    fn baseline_efficiencies_and_asymmetry() {
        let cfg = SourceConfig::baseline();
        let eta_s = heralding_efficiency(&cfg, Photon::Signal).unwrap();
        let eta_i = heralding_efficiency(&cfg, Photon::Idler).unwrap();
        assert!((eta_s - 0.5525).abs() < 1e-3, "{eta_s}");
        assert!((eta_i - 0.3888).abs() < 1e-3, "{eta_i}");
    }

    #[test]
    fn report_pefs_are_products() {
        let r = observables_report(&SourceConfig::baseline()).unwrap();
        assert_eq!(r.pef_signal_heralded, r.p_omega_s * r.eta_i);
        assert_eq!(r.pef_idler_heralded, r.p_omega_i * r.eta_s);
        for (name, v) in r.fields() {
            assert!((0.0..=1.0).contains(&v), "{name} = {v}");
        }
    }

    #[test]
    fn missing_heralding_mode_is_unnormalizable() {
        let mut filters = FilterSet::symmetric(Some(5.0), 10.0);
        filters.signal_mode_um = 0.0;
        let cfg = SourceConfig::baseline().with_filters(filters);
        let err = heralding_efficiency(&cfg, Photon::Signal).unwrap_err();
        assert!(err.is_unnormalizable(), "{err}");
    }

    #[test]
    fn slice_peak_is_at_origin() {
        let req = SliceRequest { domain: SliceDomain::Spectral, range: None, points: 21 };
        let g = joint_spectrum_slice(&SourceConfig::baseline(), FilterMask::Both, &req).unwrap();
        assert_eq!(g.values[10][10], 1.0);
        assert!(g.values.iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
        let bad = SliceRequest { points: 1, ..req };
        assert!(matches!(
            joint_spectrum_slice(&SourceConfig::baseline(), FilterMask::Both, &bad),
            Err(Error::InvalidGrid(_))
        ));
    }
}
