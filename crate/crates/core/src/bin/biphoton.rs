use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use biphoton::config::{parse_config, parse_spec, FigureSpec};
use biphoton::dispersion::{phase_matching_angle, phase_mismatch_at_centers, CrystalParams, SellmeierSet};
use biphoton::emit::{emit_report, emit_rows, emit_slice, emit_slices, Format};
use biphoton::model::{FilterMask, SourceConfig};
use biphoton::observables::{joint_spectrum_slice, observables_report, SliceDomain, SliceRequest};
use biphoton::sweep::{run_slices, run_sweep};
use biphoton::validate::run_validation;
use biphoton::Error;

const VALIDATION_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "biphoton", version, about = "Filtered type-II SPDC heralded-photon calculator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degenerate type-II phase-matching angle for a pump wavelength.
    PmAngle {
        #[arg(long, default_value_t = 405.0)]
        pump_nm: f64,
    },
    /// Walk-off angles and group-delay differences of a configuration.
    Coeffs {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Purities, heralding efficiencies and PEFs of a configuration.
    Report {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Joint spectrum on a 2-D slice through the origin.
    Slice {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "spectral")]
        domain: DomainArg,
        #[arg(long, value_enum, default_value = "both")]
        mask: MaskArg,
        /// Half-width of both axes (rad/fs or rad/um); chosen automatically if absent.
        #[arg(long)]
        range: Option<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Runs a sweep or slice-figure specification.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Cross-checks closed forms against quadrature on the seed configurations.
    Validate {
        /// Also compute spectral kernels by direct quadrature.
        #[arg(long)]
        deep: bool,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum DomainArg {
    Spectral,
    Spatial,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MaskArg {
    Both,
    Signal,
    Idler,
    None,
}

fn load_config(path: Option<&Path>) -> Result<SourceConfig, Error> {
    match path {
        Some(p) => parse_config(&std::fs::read_to_string(p)?),
        None => parse_config("{}"),
    }
}

/// Output sink: a file (relative paths resolved against $BIPHOTON_OUT when
/// set) or stdout.
fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    let Some(path) = out else {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    };
    let path = match std::env::var_os("BIPHOTON_OUT") {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    eprintln!("writing {}", path.display());
    Ok(Box::new(BufWriter::new(File::create(path)?)))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::PmAngle { pump_nm } => {
            if !(pump_nm > 0.0 && pump_nm.is_finite()) {
                return Err(Error::Unit {
                    pointer: "--pump-nm".into(),
                    message: format!("must be positive, got {pump_nm}"),
                });
            }
            let pump_um = pump_nm * 1e-3;
            let sellmeier = SellmeierSet::bbo();
            let theta = phase_matching_angle(&sellmeier, pump_um)?;
            let crystal = CrystalParams::phase_matched(1000.0, sellmeier, pump_um)?;
            let residual = phase_mismatch_at_centers(&crystal, pump_um, 2.0 * pump_um, 2.0 * pump_um)?;
            println!("theta_deg = {}", theta.to_degrees());
            println!("delta_k_rad_per_um = {residual:e}");
        }
        Command::Coeffs { config } => {
            let cfg = load_config(config.as_deref())?;
            let d = cfg.dispersion;
            println!("theta_deg = {}", cfg.crystal.theta_rad.to_degrees());
            println!("rho_p_rad = {}", d.rho_p);
            println!("rho_s_rad = {}", d.rho_s);
            println!("d_s_fs_per_um = {}", d.d_s);
            println!("d_i_fs_per_um = {}", d.d_i);
            println!("phase_mismatch_rad_per_um = {:e}", cfg.phase_matching_residual()?);
        }
        Command::Report { config, out, format } => {
            let cfg = load_config(config.as_deref())?;
            let report = observables_report(&cfg)?;
            emit_report(&report, format, open_out(out.as_deref())?)?;
        }
        Command::Slice { config, domain, mask, range, points, out, format } => {
            let cfg = load_config(config.as_deref())?;
            let domain = match domain {
                DomainArg::Spectral => SliceDomain::Spectral,
                DomainArg::Spatial => SliceDomain::Spatial,
            };
            let mask = match mask {
                MaskArg::Both => FilterMask::Both,
                MaskArg::Signal => FilterMask::SignalOnly,
                MaskArg::Idler => FilterMask::IdlerOnly,
                MaskArg::None => FilterMask::None,
            };
            let grid = joint_spectrum_slice(&cfg, mask, &SliceRequest { domain, range, points })?;
            eprintln!(
                "principal axis {:.2} deg ({:.2} deg from -45), trapezoid mass {:e}",
                grid.principal_axis_deg(),
                grid.tilt_from_antidiagonal_deg(),
                grid.raw_mass()
            );
            emit_slice(&grid, format, open_out(out.as_deref())?)?;
        }
        Command::Sweep { spec, out, format } => {
            let started = Instant::now();
            match parse_spec(&std::fs::read_to_string(&spec)?)? {
                FigureSpec::Sweep(s) => {
                    let rows = run_sweep(&s);
                    let failed = rows.iter().filter(|r| r.error.is_some()).count();
                    emit_rows(&s, &rows, format, open_out(out.as_deref())?)?;
                    eprintln!("{} points ({failed} unnormalizable) in {:.2?}", rows.len(), started.elapsed());
                }
                FigureSpec::Slices(s) => {
                    let grids = run_slices(&s)?;
                    emit_slices(&grids, s.title.as_deref(), format, open_out(out.as_deref())?)?;
                    eprintln!("{} panels in {:.2?}", grids.len(), started.elapsed());
                }
            }
        }
        Command::Validate { deep } => {
            let started = Instant::now();
            let checks = run_validation(deep);
            let mut failures = 0;
            for c in &checks {
                let status = if c.passed() { "ok  " } else { "FAIL" };
                if !c.passed() {
                    failures += 1;
                }
                println!("{status} {} (deviation {:.3e}, tolerance {:.0e})", c.name, c.deviation, c.tolerance);
            }
            println!("{} checks, {failures} failed, {:.2?}", checks.len(), started.elapsed());
            if failures > 0 {
                return Ok(ExitCode::from(VALIDATION_FAILURE));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {} ({})", e, e.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
