//! Command implementations. Each writes its artifacts into the output
//! directory and returns the lines to print.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cyldtn::dispersion::{locate_eigenvalues, trace_band, Eigenfunction, FieldPoint};
use cyldtn::harmonics::Angles;
use cyldtn::model::torus_center;
use cyldtn::oracles::{box_discretization, box_eigs, radial_bound_states, RadialProblem};
use cyldtn::transport::{build_packet, transport_record, velocity_fit, PacketOptions};
use cyldtn::validation::Suite;
use cyldtn::{Band, Discretization, DispersionSolver};
use thiserror::Error;

use crate::cache::{band_csv, read_cache, write_cache, BandCache, CacheError};
use crate::config::{config_hash, ConfigError, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Dispersion,
    Eigenfunction,
    Transport,
    OracleCompare,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}; run `cyldtn dispersion --config {1}` first")]
    NoCache(CacheError, String),
    #[error("{0}")]
    Cache(CacheError),
    #[error(transparent)]
    Numerics(#[from] cyldtn::Error),
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::NoCache(..) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Printed lines and whether every check passed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub passed: bool,
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    /// Path of the config file, quoted in hints.
    pub config_path: &'a str,
    pub out: &'a Path,
}

fn write(path: PathBuf, text: &str) -> CliResult<PathBuf> {
    std::fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

pub fn run(cmd: Command, ctx: &Context) -> CliResult<Outcome> {
    std::fs::create_dir_all(ctx.out).map_err(|source| CliError::Io { path: ctx.out.to_path_buf(), source })?;
    match cmd {
        Command::Validate => validate(ctx),
        Command::Dispersion => dispersion(ctx).map(|(o, _)| o),
        Command::Eigenfunction => eigenfunction(ctx),
        Command::Transport => transport(ctx),
        Command::OracleCompare => oracle_compare(ctx),
    }
}

fn validate(ctx: &Context) -> CliResult<Outcome> {
    let wg = &ctx.config.waveguide;
    let suite = Suite::new(wg.radius, wg.trunc);
    let reports = suite.run_all();
    let mut lines = vec![format!("reference suite at R = {}, truncation ({}, {}, {})", wg.radius, wg.trunc.n_r, wg.trunc.q, wg.trunc.j)];
    lines.extend(reports.iter().map(|r| r.line()));
    let stated = suite.free_identity_as_stated();
    lines.push(format!("note: {} (not counted)", stated.line()));
    let failed = reports.iter().filter(|r| !r.passed).count();
    lines.push(format!("{} of {} criteria passed", reports.len() - failed, reports.len()));
    Ok(Outcome { lines, passed: failed == 0 })
}

fn solver(ctx: &Context) -> CliResult<DispersionSolver> {
    Ok(DispersionSolver::new(ctx.config.waveguide.clone())?)
}

/// Scan the seed window, trace every eigenvalue found there, write CSVs and the cache.
pub fn dispersion(ctx: &Context) -> CliResult<(Outcome, Vec<Band>)> {
    let scan = &ctx.config.scan;
    let window = scan.window.ok_or_else(|| {
        ConfigError::Constraint { key: "e_min".into(), msg: "dispersion needs an energy window: set e_min and e_max in [scan]".into() }
    })?;
    let solver = solver(ctx)?;
    let seeds = locate_eigenvalues(&solver, scan.seed_k, window, scan.grid)?;
    let mut bands = Vec::with_capacity(seeds.len());
    for seed in &seeds {
        bands.push(trace_band(&solver, &scan.k_grid, seed)?);
    }
    let hash = config_hash(&ctx.config.waveguide);
    let mut lines = vec![format!(
        "{} eigenvalue(s) in [{}, {}] at k = {}",
        seeds.len(),
        window.0,
        window.1,
        scan.seed_k
    )];
    for (i, band) in bands.iter().enumerate() {
        let path = write(ctx.out.join(format!("band_{i}.csv")), &band_csv(band))?;
        lines.push(format!(
            "band {i}: {} points on [{}, {}], stops {:?} / {:?} -> {}",
            band.points.len(),
            band.interval.0,
            band.interval.1,
            band.stop_low,
            band.stop_high,
            path.display()
        ));
    }
    let cache = BandCache::new(hash, ctx.config.waveguide.n, &bands);
    let path = write_cache(ctx.out, &cache).map_err(CliError::Cache)?;
    lines.push(format!("band cache -> {}", path.display()));
    Ok((Outcome { lines, passed: true }, bands))
}

fn cached_bands(ctx: &Context) -> CliResult<Vec<Band>> {
    let hash = config_hash(&ctx.config.waveguide);
    read_cache(ctx.out, &hash).map_err(|e| match e {
        CacheError::Missing(_) | CacheError::Stale { .. } => CliError::NoCache(e, ctx.config_path.to_string()),
        other => CliError::Cache(other),
    })
}

fn pick<'b>(bands: &'b [Band], index: usize, key: &str) -> CliResult<&'b Band> {
    bands.get(index).ok_or_else(|| {
        ConfigError::Constraint { key: key.into(), msg: format!("band {index} requested but the cache holds {}", bands.len()) }.into()
    })
}

fn eigenfunction(ctx: &Context) -> CliResult<Outcome> {
    let scan = &ctx.config.scan;
    let bands = cached_bands(ctx)?;
    let band = pick(&bands, scan.band, "band")?;
    let point = band.points.get(scan.point).ok_or_else(|| ConfigError::Constraint {
        key: "point".into(),
        msg: format!("point {} requested but band {} has {}", scan.point, scan.band, band.points.len()),
    })?;
    let ef = Eigenfunction::new(&solver(ctx)?, point, 0)?;
    let n = ctx.config.waveguide.n;
    let mut csv = String::from(if n == 2 { "r,theta,y,re,im\n" } else { "r,theta,phi,y,re,im\n" });
    let phis: &[f64] = if n == 2 { &[0.0] } else { &scan.sample_phi };
    for &r in &scan.sample_r {
        for &theta in &scan.sample_theta {
            for &phi in phis {
                for &y in &scan.sample_y {
                    let angles = if n == 2 { Angles::Circle { theta } } else { Angles::Sphere { theta, phi } };
                    let v = ef.value(&FieldPoint { r, angles, y })?;
                    if n == 2 {
                        let _ = writeln!(csv, "{r:?},{theta:?},{y:?},{:?},{:?}", v.re, v.im);
                    } else {
                        let _ = writeln!(csv, "{r:?},{theta:?},{phi:?},{y:?},{:?},{:?}", v.re, v.im);
                    }
                }
            }
        }
    }
    let samples = write(ctx.out.join("eigenfunction.csv"), &csv)?;
    let boundary = write(ctx.out.join("eigenfunction_boundary.json"), &point.kernel[0].to_json())?;
    Ok(Outcome {
        lines: vec![
            format!("band {} point {}: k = {}, lambda = {}, multiplicity {}", scan.band, scan.point, point.k, point.lambda, point.multiplicity),
            format!("interior/exterior derivative mismatch {:.3e}", ef.derivative_mismatch()?),
            format!("samples -> {}", samples.display()),
            format!("boundary data -> {}", boundary.display()),
        ],
        passed: true,
    })
}

fn transport(ctx: &Context) -> CliResult<Outcome> {
    let tc = &ctx.config.transport;
    let envelope = tc.envelope.ok_or_else(|| ConfigError::Constraint {
        key: "center".into(),
        msg: "transport needs an envelope: set center (and width) or point_k in [transport]".into(),
    })?;
    let bands = cached_bands(ctx)?;
    let band = pick(&bands, tc.band, "band")?;
    let mut packet = build_packet(&solver(ctx)?, band, envelope, PacketOptions::default())?;
    let rec = transport_record(&mut packet, &tc.times)?;
    let path = write(ctx.out.join("transport.csv"), &rec.to_csv())?;
    let mut lines = vec![format!("{} times, {} cells -> {}", rec.times.len(), packet.cells, path.display())];
    match velocity_fit(&rec, &packet) {
        Ok(fit) => lines.push(format!(
            "v_y = {:.9} (band average {:.9}), v_x = {:.3e}, <X> drift {:.3e}",
            fit.v_y, fit.v_expected, fit.v_x, fit.x_drift
        )),
        Err(e) => lines.push(format!("no velocity fit: {e}")),
    }
    Ok(Outcome { lines, passed: true })
}

/// Radial oracle for a single y-independent term, box diagonalization otherwise.
enum Oracle {
    Radial(Vec<f64>),
    Box(Discretization),
}

fn oracle_compare(ctx: &Context) -> CliResult<Outcome> {
    let mut lines = Vec::new();
    let bands = match cached_bands(ctx) {
        Ok(b) => b,
        Err(CliError::NoCache(..)) => {
            let (o, b) = dispersion(ctx)?;
            lines.extend(o.lines);
            b
        }
        Err(e) => return Err(e),
    };
    let wg = &ctx.config.waveguide;
    let pot = &wg.potential;
    let oracle = match pot.terms.as_slice() {
        [term] if pot.is_y_independent() => {
            let strength = term.coeffs.get(&0).map_or(0.0, |c| c.re);
            let mut mus = Vec::new();
            for l in 0..=wg.trunc.l_max {
                mus.extend(radial_bound_states(&RadialProblem::new(wg.n, l, term.profile.clone(), strength), 4));
            }
            Oracle::Radial(mus)
        }
        _ => Oracle::Box(box_discretization(&Discretization::from_truncation(&wg.trunc), 12.0, 28)),
    };
    let mut csv = String::from("band,k,lambda,oracle,abs_diff\n");
    let mut worst = 0.0f64;
    for (b, band) in bands.iter().enumerate() {
        for p in &band.points {
            let candidates: Vec<f64> = match &oracle {
                Oracle::Radial(mus) => {
                    let jc = torus_center(p.k);
                    let jm = wg.trunc.j_max as i32;
                    (jc - jm..=jc + jm)
                        .flat_map(|j| mus.iter().map(move |mu| mu + (p.k + 2.0 * PI * j as f64).powi(2)))
                        .collect()
                }
                Oracle::Box(disc) => box_eigs(wg.n, pot, p.k, 12.0, disc, 8)?,
            };
            let nearest = candidates
                .iter()
                .copied()
                .min_by(|a, c| (a - p.lambda).abs().total_cmp(&(c - p.lambda).abs()))
                .unwrap_or(f64::NAN);
            let diff = (nearest - p.lambda).abs();
            worst = worst.max(diff);
            let _ = writeln!(csv, "{b},{:?},{:?},{nearest:?},{diff:?}", p.k, p.lambda);
        }
    }
    let path = write(ctx.out.join("oracle_compare.csv"), &csv)?;
    let kind = match oracle {
        Oracle::Radial(_) => "radial ODE",
        Oracle::Box(_) => "box L = 12",
    };
    lines.push(format!("{kind} oracle, largest |lambda - oracle| = {worst:.3e} -> {}", path.display()));
    Ok(Outcome { lines, passed: true })
}
