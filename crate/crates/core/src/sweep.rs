//! Parameter sweeps over configuration documents.

use rayon::prelude::*;

use crate::config::{Observable, SliceSpec, SweepSpec};
use crate::error::Result;
use crate::model::{assemble_quadratic_form, FilterMask, Photon, SourceConfig};
use crate::gaussian::{detection_probability_ratio_in, reduce_pure_state};
use crate::observables::{joint_spectrum_slice, SliceGrid, Subsystem};

/// One grid point. A point whose evaluation failed carries the error name
/// and no values.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub axis_values: Vec<f64>,
    pub values: Vec<f64>,
    pub error: Option<String>,
}

fn evaluate(cfg: &SourceConfig, wanted: &[Observable]) -> Result<Vec<f64>> {
    let both = assemble_quadratic_form(cfg, FilterMask::Both)?;
    let purity = |s: Subsystem| reduce_pure_state(&both, s.coords())?.purity();
    let eta = |heralding: Photon| {
        let herald = assemble_quadratic_form(cfg, FilterMask::only(heralding))?;
        detection_probability_ratio_in(&both, &herald, cfg.efficiency_domain.coords())
    };
    wanted
        .iter()
        .map(|o| match o {
            Observable::PQs => purity(Subsystem::SpatialSignal),
            Observable::PQi => purity(Subsystem::SpatialIdler),
            Observable::POmegaS => purity(Subsystem::SpectralSignal),
            Observable::POmegaI => purity(Subsystem::SpectralIdler),
            Observable::EtaS => eta(Photon::Signal),
            Observable::EtaI => eta(Photon::Idler),
            Observable::PefSignalHeralded => Ok(purity(Subsystem::SpectralSignal)? * eta(Photon::Idler)?),
            Observable::PefIdlerHeralded => Ok(purity(Subsystem::SpectralIdler)? * eta(Photon::Signal)?),
        })
        .collect()
}

/// Axis values of every grid point, row-major (first axis outermost).
pub fn grid_points(spec: &SweepSpec) -> Vec<Vec<f64>> {
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for axis in &spec.axes {
        let values = axis.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Evaluates every grid point. Points run in parallel; the output order is
/// the grid order.
pub fn run_sweep(spec: &SweepSpec) -> Vec<ReportRow> {
    grid_points(spec)
        .into_par_iter()
        .map(|axis_values| {
            match spec.config_at(&axis_values).and_then(|cfg| evaluate(&cfg, &spec.observables)) {
                Ok(values) => ReportRow { axis_values, values, error: None },
                Err(e) => ReportRow {
                    axis_values,
                    values: Vec::new(),
                    error: Some(e.name().to_string()),
                },
            }
        })
        .collect()
}

/// Evaluates every panel of a slice figure.
pub fn run_slices(spec: &SliceSpec) -> Result<Vec<SliceGrid>> {
    let cfg = spec.base.to_source_config()?;
    spec.panels
        .iter()
        .map(|p| joint_spectrum_slice(&cfg, p.mask, &p.request()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_sweep;

    #[test]
    fn collapsed_axis_gives_identical_rows() {
        let spec = parse_sweep(
            r#"{"axes":[{"paths":["/pump/waist_um"],"start":20,"stop":20,"count":2}]}"#,
        )
        .unwrap();
        let rows = run_sweep(&spec);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], rows[1]);
        assert_eq!(rows[0].values.len(), 8);
    }

    #[test]
    fn degenerate_points_are_recorded() {
        let spec = parse_sweep(
            r#"{"axes":[{"paths":["/filters/signal_mode_um"],"start":0,"stop":10,"count":2}],
                "observables":["eta_s"]}"#,
        )
        .unwrap();
        let rows = run_sweep(&spec);
        assert_eq!(rows[0].error.as_deref(), Some("Unnormalizable"));
        assert!(rows[0].values.is_empty());
        assert!(rows[1].error.is_none());
    }

    #[test]
    fn row_major_order() {
        let spec = parse_sweep(
            r#"{"axes":[{"paths":["/filters/signal_mode_um"],"start":5,"stop":10,"count":2},
                        {"paths":["/filters/idler_mode_um"],"start":1,"stop":3,"count":3}],
                "observables":["p_qs"]}"#,
        )
        .unwrap();
        let pts: Vec<Vec<f64>> = run_sweep(&spec).into_iter().map(|r| r.axis_values).collect();
        assert_eq!(pts[1], vec![5.0, 2.0]);
        assert_eq!(pts[3], vec![10.0, 1.0]);
    }
}
