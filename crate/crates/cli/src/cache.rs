//! Band cache (JSON) and band CSV export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cyldtn::dispersion::{band_gradient, StopReason};
use cyldtn::{Band, BandPoint, BoundaryData, ModeIndex, C64};
use serde::{Deserialize, Serialize};

/// Kernel coefficient row: `[j, q, re, im]` for n = 2, `[j, l, m, re, im]` for n = 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelRow {
    Circle(i32, i32, f64, f64),
    Sphere(i32, u32, i32, f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedPoint {
    /// Index of the band this point belongs to.
    pub band: usize,
    pub k: f64,
    pub lambda: f64,
    pub sigma_min: f64,
    pub multiplicity: usize,
    /// First kernel vector.
    pub kernel: Vec<KernelRow>,
    /// Remaining kernel vectors of a degenerate point.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernel_extra: Vec<Vec<KernelRow>>,
    pub norm: f64,
    pub residual: f64,
    pub radius: f64,
    pub radius_shifted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceInfo {
    pub interval: (f64, f64),
    pub stop_low: StopReason,
    pub stop_high: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCache {
    pub config_hash: String,
    pub n: usize,
    pub bands: Vec<CachedPoint>,
    pub traces: Vec<TraceInfo>,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("no band cache at {0}")]
    Missing(PathBuf),
    #[error("band cache {path} was written for configuration {found}, expected {expected}")]
    Stale { path: PathBuf, found: String, expected: String },
    #[error("band cache {path} is unreadable: {msg}")]
    Corrupt { path: PathBuf, msg: String },
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn rows(n: usize, f: &BoundaryData) -> Vec<KernelRow> {
    f.basis
        .iter()
        .zip(&f.coefficients)
        .map(|(b, c)| if n == 2 { KernelRow::Circle(b.j, b.m, c.re, c.im) } else { KernelRow::Sphere(b.j, b.l, b.m, c.re, c.im) })
        .collect()
}

fn boundary(n: usize, rows: &[KernelRow]) -> Result<BoundaryData, String> {
    let mut basis = Vec::with_capacity(rows.len());
    let mut coefficients = Vec::with_capacity(rows.len());
    for r in rows {
        let (mode, c) = match (*r, n) {
            (KernelRow::Circle(j, q, re, im), 2) => (ModeIndex::new(j, q.unsigned_abs(), q), C64::new(re, im)),
            (KernelRow::Sphere(j, l, m, re, im), 3) => (ModeIndex::new(j, l, m), C64::new(re, im)),
            _ => return Err(format!("kernel row {r:?} does not match n = {n}")),
        };
        basis.push(mode);
        coefficients.push(c);
    }
    if !basis.windows(2).all(|w| w[0] < w[1]) {
        return Err("kernel basis is not strictly ordered".into());
    }
    BoundaryData::new(basis, coefficients).map_err(|e| e.to_string())
}

impl BandCache {
    pub fn new(config_hash: String, n: usize, bands: &[Band]) -> Self {
        let mut points = Vec::new();
        let mut traces = Vec::new();
        for (i, band) in bands.iter().enumerate() {
            traces.push(TraceInfo { interval: band.interval, stop_low: band.stop_low, stop_high: band.stop_high });
            for p in &band.points {
                let mut kernels = p.kernel.iter().map(|f| rows(n, f));
                points.push(CachedPoint {
                    band: i,
                    k: p.k,
                    lambda: p.lambda,
                    sigma_min: p.sigma_min,
                    multiplicity: p.multiplicity,
                    kernel: kernels.next().unwrap_or_default(),
                    kernel_extra: kernels.collect(),
                    norm: p.norm,
                    residual: p.residual,
                    radius: p.radius,
                    radius_shifted: p.radius_shifted,
                });
            }
        }
        Self { config_hash, n, bands: points, traces }
    }

    pub fn to_bands(&self) -> Result<Vec<Band>, String> {
        let mut out: Vec<Band> = self
            .traces
            .iter()
            .map(|t| Band { points: Vec::new(), interval: t.interval, stop_low: t.stop_low, stop_high: t.stop_high, gradient: Vec::new() })
            .collect();
        for p in &self.bands {
            let band = out.get_mut(p.band).ok_or_else(|| format!("point at k = {} names missing band {}", p.k, p.band))?;
            let mut kernel = Vec::new();
            if !p.kernel.is_empty() {
                kernel.push(boundary(self.n, &p.kernel)?);
            }
            for extra in &p.kernel_extra {
                kernel.push(boundary(self.n, extra)?);
            }
            band.points.push(BandPoint {
                k: p.k,
                lambda: p.lambda,
                sigma_min: p.sigma_min,
                norm: p.norm,
                residual: p.residual,
                multiplicity: p.multiplicity,
                radius: p.radius,
                radius_shifted: p.radius_shifted,
                kernel,
            });
        }
        for band in &mut out {
            if band.points.len() >= 3 {
                band.gradient = band_gradient(band).map_err(|e| e.to_string())?;
            }
        }
        Ok(out)
    }
}

pub fn cache_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("band-cache-{}.json", &hash[..16]))
}

pub fn write_cache(dir: &Path, cache: &BandCache) -> Result<PathBuf, CacheError> {
    let path = cache_path(dir, &cache.config_hash);
    let text = serde_json::to_string(cache).expect("band cache serializes");
    std::fs::write(&path, text).map_err(|source| CacheError::Io { path: path.clone(), source })?;
    Ok(path)
}

pub fn read_cache(dir: &Path, hash: &str) -> Result<Vec<Band>, CacheError> {
    let path = cache_path(dir, hash);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(CacheError::Missing(path)),
        Err(source) => return Err(CacheError::Io { path, source }),
    };
    let cache: BandCache =
        serde_json::from_str(&text).map_err(|e| CacheError::Corrupt { path: path.clone(), msg: e.to_string() })?;
    if cache.config_hash != hash {
        return Err(CacheError::Stale { path, found: cache.config_hash, expected: hash.to_string() });
    }
    cache.to_bands().map_err(|msg| CacheError::Corrupt { path, msg })
}

/// CSV with header `k,lambda,sigma_min,multiplicity,dlambda_dk`.
pub fn band_csv(band: &Band) -> String {
    let mut out = String::from("k,lambda,sigma_min,multiplicity,dlambda_dk\n");
    for (i, p) in band.points.iter().enumerate() {
        let _ = write!(out, "{:?},{:?},{:?},{},", p.k, p.lambda, p.sigma_min, p.multiplicity);
        match band.gradient.get(i) {
            Some(g) => {
                let _ = writeln!(out, "{:?}", g.dlambda_dk);
            }
            None => out.push_str("nan\n"),
        }
    }
    out
}
