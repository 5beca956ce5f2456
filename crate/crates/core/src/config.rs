//! JSON configuration documents.
//!
//! Field names carry their units (`*_um`, `*_nm`, `*_mm`, `*_deg`). Every
//! field has a default, so `{}` is the 1 mm BBO, 405 nm baseline. Unknown
//! keys and type mismatches are schema errors; non-positive magnitudes are
//! unit errors. Both carry the JSON pointer of the offending field.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dispersion::{
    dispersion_data_at, phase_matching_angle, CrystalParams, DispersionData, SellmeierSet,
    SellmeierTerms, DEFAULT_SINC_GAMMA,
};
use crate::error::{Error, Result};
use crate::model::{EfficiencyDomain, FilterSet, PumpParams, SourceConfig};
use crate::observables::{SliceDomain, SliceRequest};
use crate::model::FilterMask;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpDoc {
    pub wavelength_um: f64,
    pub waist_um: f64,
    pub bandwidth_nm: f64,
}

impl Default for PumpDoc {
    fn default() -> Self {
        Self {
            wavelength_um: 0.405,
            waist_um: 10.0,
            bandwidth_nm: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermsDoc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<SellmeierTerms> for TermsDoc {
    fn from(t: SellmeierTerms) -> Self {
        Self { a: t.a, b: t.b, c: t.c, d: t.d }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierDoc {
    pub ordinary: TermsDoc,
    pub extraordinary: TermsDoc,
    pub window_um: [f64; 2],
}

impl Default for SellmeierDoc {
    fn default() -> Self {
        Self::from(SellmeierSet::bbo())
    }
}

impl From<SellmeierSet> for SellmeierDoc {
    fn from(s: SellmeierSet) -> Self {
        Self {
            ordinary: s.ordinary.into(),
            extraordinary: s.extraordinary.into(),
            window_um: [s.window_um.0, s.window_um.1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrystalDoc {
    pub length_mm: f64,
    /// Propagation angle from the optic axis; null solves for phase matching.
    pub theta_deg: Option<f64>,
    pub sinc_gamma: f64,
    pub sellmeier: SellmeierDoc,
}

impl Default for CrystalDoc {
    fn default() -> Self {
        Self {
            length_mm: 1.0,
            theta_deg: None,
            sinc_gamma: DEFAULT_SINC_GAMMA,
            sellmeier: SellmeierDoc::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionDoc {
    pub rho_p_rad: f64,
    pub rho_s_rad: f64,
    pub d_s_fs_per_um: f64,
    pub d_i_fs_per_um: f64,
}

impl From<DispersionData> for DispersionDoc {
    fn from(d: DispersionData) -> Self {
        Self {
            rho_p_rad: d.rho_p,
            rho_s_rad: d.rho_s,
            d_s_fs_per_um: d.d_s,
            d_i_fs_per_um: d.d_i,
        }
    }
}

fn default_filter_bandwidth() -> Option<f64> {
    Some(5.0)
}

/// Filters; a null bandwidth means no spectral filter, a zero mode no
/// spatial filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiltersDoc {
    #[serde(default = "default_filter_bandwidth")]
    pub signal_bandwidth_nm: Option<f64>,
    #[serde(default = "default_filter_bandwidth")]
    pub idler_bandwidth_nm: Option<f64>,
    pub signal_mode_um: f64,
    pub idler_mode_um: f64,
}

impl Default for FiltersDoc {
    fn default() -> Self {
        Self {
            signal_bandwidth_nm: default_filter_bandwidth(),
            idler_bandwidth_nm: default_filter_bandwidth(),
            signal_mode_um: 10.0,
            idler_mode_um: 10.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigDoc {
    pub pump: PumpDoc,
    pub crystal: CrystalDoc,
    /// Δk coefficients; null derives them from the Sellmeier data.
    pub dispersion: Option<DispersionDoc>,
    pub filters: FiltersDoc,
    /// Central wavelengths; null means degenerate (2λ_p).
    pub signal_wavelength_um: Option<f64>,
    pub idler_wavelength_um: Option<f64>,
    pub efficiency_domain: EfficiencyDomain,
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Deserializes with schema errors located by JSON pointer.
fn from_value<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| Error::Schema {
        pointer: format!("{prefix}{}", pointer_of(e.path())),
        message: e.inner().to_string(),
    })
}

fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Schema {
        pointer: String::new(),
        message: format!("invalid JSON: {e}"),
    })
}

fn unit_error(pointer: &str, message: String) -> Error {
    Error::Unit {
        pointer: pointer.to_string(),
        message,
    }
}

fn positive(pointer: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(unit_error(pointer, format!("must be positive, got {v}")))
    }
}

fn non_negative(pointer: &str, v: f64) -> Result<()> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(unit_error(pointer, format!("must be non-negative, got {v}")))
    }
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_json(parse_value(text)?, "")
    }

    /// Parses a document embedded at `prefix` in a larger file.
    pub fn from_json(value: Value, prefix: &str) -> Result<Self> {
        let doc: Self = from_value(value, prefix)?;
        doc.check_units(prefix)?;
        Ok(doc)
    }

    fn check_units(&self, prefix: &str) -> Result<()> {
        let p = |s: &str| format!("{prefix}{s}");
        positive(&p("/pump/wavelength_um"), self.pump.wavelength_um)?;
        non_negative(&p("/pump/waist_um"), self.pump.waist_um)?;
        positive(&p("/pump/bandwidth_nm"), self.pump.bandwidth_nm)?;
        positive(&p("/crystal/length_mm"), self.crystal.length_mm)?;
        if let Some(theta) = self.crystal.theta_deg {
            if !(theta > 0.0 && theta < 90.0) {
                return Err(unit_error(
                    &p("/crystal/theta_deg"),
                    format!("must lie in (0, 90) degrees, got {theta}"),
                ));
            }
        }
        positive(&p("/crystal/sinc_gamma"), self.crystal.sinc_gamma)?;
        let [lo, hi] = self.crystal.sellmeier.window_um;
        positive(&p("/crystal/sellmeier/window_um/0"), lo)?;
        if !(hi > lo) {
            return Err(unit_error(
                &p("/crystal/sellmeier/window_um/1"),
                format!("must exceed the lower bound {lo}, got {hi}"),
            ));
        }
        if let Some(s) = self.filters.signal_bandwidth_nm {
            positive(&p("/filters/signal_bandwidth_nm"), s)?;
        }
        if let Some(s) = self.filters.idler_bandwidth_nm {
            positive(&p("/filters/idler_bandwidth_nm"), s)?;
        }
        non_negative(&p("/filters/signal_mode_um"), self.filters.signal_mode_um)?;
        non_negative(&p("/filters/idler_mode_um"), self.filters.idler_mode_um)?;
        if let Some(l) = self.signal_wavelength_um {
            positive(&p("/signal_wavelength_um"), l)?;
        }
        if let Some(l) = self.idler_wavelength_um {
            positive(&p("/idler_wavelength_um"), l)?;
        }
        Ok(())
    }

    pub fn to_source_config(&self) -> Result<SourceConfig> {
        let s = &self.crystal.sellmeier;
        let term = |t: &TermsDoc| SellmeierTerms::new(t.a, t.b, t.c, t.d);
        let sellmeier = SellmeierSet::new(
            term(&s.ordinary),
            term(&s.extraordinary),
            (s.window_um[0], s.window_um[1]),
        )?;
        let pump = PumpParams {
            wavelength_um: self.pump.wavelength_um,
            waist_um: self.pump.waist_um,
            bandwidth_nm: self.pump.bandwidth_nm,
        };
        let theta = match self.crystal.theta_deg {
            Some(deg) => deg.to_radians(),
            None => phase_matching_angle(&sellmeier, pump.wavelength_um)?,
        };
        let crystal = CrystalParams::new(
            self.crystal.length_mm * 1e3,
            theta,
            sellmeier,
            self.crystal.sinc_gamma,
        )?;
        let signal = self.signal_wavelength_um.unwrap_or(2.0 * pump.wavelength_um);
        let idler = self.idler_wavelength_um.unwrap_or(2.0 * pump.wavelength_um);
        let dispersion = match &self.dispersion {
            Some(d) => DispersionData::new(d.rho_p_rad, d.rho_s_rad, d.d_s_fs_per_um, d.d_i_fs_per_um)?,
            None => dispersion_data_at(&crystal, pump.wavelength_um, signal, idler)?,
        };
        let filters = FilterSet {
            signal_bandwidth_nm: self.filters.signal_bandwidth_nm,
            idler_bandwidth_nm: self.filters.idler_bandwidth_nm,
            signal_mode_um: self.filters.signal_mode_um,
            idler_mode_um: self.filters.idler_mode_um,
        };
        let cfg = SourceConfig {
            pump,
            crystal,
            dispersion,
            filters,
            signal_wavelength_um: signal,
            idler_wavelength_um: idler,
            efficiency_domain: self.efficiency_domain,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fully resolved document for a source: angle, wavelengths and
    /// dispersion written out, so it parses back to the same source.
    pub fn resolved(cfg: &SourceConfig) -> Self {
        let c = &cfg.crystal;
        Self {
            pump: PumpDoc {
                wavelength_um: cfg.pump.wavelength_um,
                waist_um: cfg.pump.waist_um,
                bandwidth_nm: cfg.pump.bandwidth_nm,
            },
            crystal: CrystalDoc {
                length_mm: c.length_um * 1e-3,
                // Degrees do not survive the round trip bit for bit, so a
                // phase-matched cut is written as null and solved again.
                theta_deg: match phase_matching_angle(&c.sellmeier, cfg.pump.wavelength_um) {
                    Ok(t) if t == c.theta_rad => None,
                    _ => Some(c.theta_rad.to_degrees()),
                },
                sinc_gamma: c.sinc_gamma,
                sellmeier: c.sellmeier.into(),
            },
            dispersion: Some(cfg.dispersion.into()),
            filters: FiltersDoc {
                signal_bandwidth_nm: cfg.filters.signal_bandwidth_nm,
                idler_bandwidth_nm: cfg.filters.idler_bandwidth_nm,
                signal_mode_um: cfg.filters.signal_mode_um,
                idler_mode_um: cfg.filters.idler_mode_um,
            },
            signal_wavelength_um: Some(cfg.signal_wavelength_um),
            idler_wavelength_um: Some(cfg.idler_wavelength_um),
            efficiency_domain: cfg.efficiency_domain,
        }
    }
}

/// Parses a source configuration document.
pub fn parse_config(text: &str) -> Result<SourceConfig> {
    ConfigDoc::parse(text)?.to_source_config()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// Observables a sweep can record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    PQs,
    PQi,
    POmegaS,
    POmegaI,
    EtaS,
    EtaI,
    PefSignalHeralded,
    PefIdlerHeralded,
}

impl Observable {
    pub const ALL: [Observable; 8] = [
        Observable::PQs,
        Observable::PQi,
        Observable::POmegaS,
        Observable::POmegaI,
        Observable::EtaS,
        Observable::EtaI,
        Observable::PefSignalHeralded,
        Observable::PefIdlerHeralded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::PQs => "p_qs",
            Observable::PQi => "p_qi",
            Observable::POmegaS => "p_omega_s",
            Observable::POmegaI => "p_omega_i",
            Observable::EtaS => "eta_s",
            Observable::EtaI => "eta_i",
            Observable::PefSignalHeralded => "pef_signal_heralded",
            Observable::PefIdlerHeralded => "pef_idler_heralded",
        }
    }
}

/// One sweep axis. Every path in `paths` takes the same value, which links
/// parameters such as the two collecting modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub paths: Vec<String>,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|k| {
                if k == 0 {
                    return self.start;
                }
                if k == n - 1 {
                    return self.stop;
                }
                let t = k as f64 / (n - 1) as f64;
                match self.scale {
                    Scale::Linear => self.start + (self.stop - self.start) * t,
                    Scale::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

fn default_observables() -> Vec<Observable> {
    Observable::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    base: Value,
    axes: Vec<AxisSpec>,
    #[serde(default = "default_observables")]
    observables: Vec<Observable>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub title: Option<String>,
    pub base: ConfigDoc,
    pub axes: Vec<AxisSpec>,
    pub observables: Vec<Observable>,
}

impl SweepSpec {
    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Base document as JSON with every default filled in.
    pub fn base_value(&self) -> Value {
        serde_json::to_value(&self.base).expect("config documents serialize")
    }

    fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::Schema {
                pointer: "/axes".into(),
                message: format!("expected 1 or 2 axes, got {}", self.axes.len()),
            });
        }
        if self.observables.is_empty() {
            return Err(Error::Schema {
                pointer: "/observables".into(),
                message: "at least one observable is required".into(),
            });
        }
        let base = self.base_value();
        let mut seen: Vec<&str> = Vec::new();
        for (i, axis) in self.axes.iter().enumerate() {
            let at = |field: &str| format!("/axes/{i}/{field}");
            if axis.count < 2 {
                return Err(Error::Schema {
                    pointer: at("count"),
                    message: format!("count must be at least 2, got {}", axis.count),
                });
            }
            if !axis.start.is_finite() || !axis.stop.is_finite() {
                return Err(Error::Schema {
                    pointer: at("start"),
                    message: "axis bounds must be finite".into(),
                });
            }
            if axis.scale == Scale::Log && !(axis.start > 0.0 && axis.stop > 0.0) {
                return Err(unit_error(&at("start"), "log axes need positive bounds".into()));
            }
            if axis.paths.is_empty() {
                return Err(Error::Schema {
                    pointer: at("paths"),
                    message: "an axis needs at least one parameter path".into(),
                });
            }
            for (j, path) in axis.paths.iter().enumerate() {
                let numeric = matches!(base.pointer(path), Some(Value::Number(_) | Value::Null));
                if !path.starts_with('/') || !numeric {
                    return Err(Error::Schema {
                        pointer: format!("/axes/{i}/paths/{j}"),
                        message: format!("{path:?} does not name a numeric configuration field"),
                    });
                }
                if seen.contains(&path.as_str()) {
                    return Err(Error::Schema {
                        pointer: format!("/axes/{i}/paths/{j}"),
                        message: format!("{path:?} appears more than once"),
                    });
                }
                seen.push(path);
            }
        }
        Ok(())
    }

    /// Configuration at one grid point, given one value per axis.
    pub fn config_at(&self, values: &[f64]) -> Result<SourceConfig> {
        let mut doc = self.base_value();
        for (axis, &v) in self.axes.iter().zip(values) {
            for path in &axis.paths {
                let slot = doc.pointer_mut(path).expect("paths were validated");
                *slot = serde_json::json!(v);
            }
        }
        ConfigDoc::from_json(doc, "")?.to_source_config()
    }
}

/// One panel of a slice figure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelSpec {
    pub domain: SliceDomain,
    pub mask: FilterMask,
    /// Half-width of both axes (rad/fs or rad/um); null picks one.
    #[serde(default)]
    pub range: Option<f64>,
    pub points: usize,
}

impl PanelSpec {
    pub fn request(&self) -> SliceRequest {
        SliceRequest {
            domain: self.domain,
            range: self.range,
            points: self.points,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlicesDoc {
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    base: Value,
    panels: Vec<PanelSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceSpec {
    pub title: Option<String>,
    pub base: ConfigDoc,
    pub panels: Vec<PanelSpec>,
}

/// A figure specification: a parameter sweep or a set of slices.
#[derive(Clone, Debug, PartialEq)]
pub enum FigureSpec {
    Sweep(SweepSpec),
    Slices(SliceSpec),
}

fn base_doc(value: Value) -> Result<ConfigDoc> {
    let value = if value.is_null() { Value::Object(Default::default()) } else { value };
    ConfigDoc::from_json(value, "/base")
}

/// Parses a figure specification. `"kind"` selects `"sweep"` (default) or
/// `"slices"`.
pub fn parse_spec(text: &str) -> Result<FigureSpec> {
    let mut value = parse_value(text)?;
    let kind = match value.as_object_mut().map(|o| o.remove("kind")) {
        None => {
            return Err(Error::Schema {
                pointer: String::new(),
                message: "a specification must be a JSON object".into(),
            })
        }
        Some(None) => "sweep".to_string(),
        Some(Some(Value::String(s))) => s,
        Some(Some(other)) => {
            return Err(Error::Schema {
                pointer: "/kind".into(),
                message: format!("expected a string, got {other}"),
            })
        }
    };
    match kind.as_str() {
        "sweep" => {
            let doc: SweepDoc = from_value(value, "")?;
            let spec = SweepSpec {
                title: doc.title,
                base: base_doc(doc.base)?,
                axes: doc.axes,
                observables: doc.observables,
            };
            spec.validate()?;
            Ok(FigureSpec::Sweep(spec))
        }
        "slices" => {
            let doc: SlicesDoc = from_value(value, "")?;
            if doc.panels.is_empty() {
                return Err(Error::Schema {
                    pointer: "/panels".into(),
                    message: "at least one panel is required".into(),
                });
            }
            Ok(FigureSpec::Slices(SliceSpec {
                title: doc.title,
                base: base_doc(doc.base)?,
                panels: doc.panels,
            }))
        }
        other => Err(Error::Schema {
            pointer: "/kind".into(),
            message: format!("unknown specification kind {other:?}"),
        }),
    }
}

/// Parses a sweep specification, rejecting slice figures.
pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    match parse_spec(text)? {
        FigureSpec::Sweep(s) => Ok(s),
        FigureSpec::Slices(_) => Err(Error::Schema {
            pointer: "/kind".into(),
            message: "expected a sweep specification".into(),
        }),
    }
}
