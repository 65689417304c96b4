//! Run configuration: flat `key = value` text in sections.
//!
//! ```text
//! [geometry]
//! n = 2
//! radius = 1.5
//!
//! [potential]          # repeatable; each section is one separable term
//! profile = step       # step | gaussian
//! radii = 1
//! values = -10
//! coeffs = 0:1         # w:re or w:re:im
//!
//! [truncation]
//! n_r = 40
//! q = 10
//! j = 4
//!
//! [scan]
//! k_min = 0.1
//! k_max = 3.0
//! k_points = 20
//! e_min = -7.5
//! e_max = -5
//!
//! [transport]
//! center = 0.8
//! width = 0.15
//! times = 0, 100, 200
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use cyldtn::{C64, Envelope, PotentialSpec, RadialProfile, SeparableTerm, Truncation, WaveguideConfig};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: `{key}`: {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error("`{key}`: {msg}")]
    Constraint { key: String, msg: String },
}

impl ConfigError {
    fn constraint(key: &str, msg: impl Into<String>) -> Self {
        ConfigError::Constraint { key: key.to_string(), msg: msg.into() }
    }
}

pub type ConfigResult<T> = Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub k_grid: Vec<f64>,
    /// Quasimomentum at which the energy window is scanned for seeds.
    pub seed_k: f64,
    pub window: Option<(f64, f64)>,
    /// Energy samples per scan.
    pub grid: usize,
    /// Band and point exported by `eigenfunction`.
    pub band: usize,
    pub point: usize,
    pub sample_r: Vec<f64>,
    pub sample_theta: Vec<f64>,
    pub sample_phi: Vec<f64>,
    pub sample_y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportConfig {
    pub band: usize,
    pub envelope: Option<Envelope>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub waveguide: WaveguideConfig,
    pub scan: ScanConfig,
    pub transport: TransportConfig,
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Keys of one section occurrence.
struct Section {
    name: String,
    line: usize,
    keys: BTreeMap<String, Entry>,
}

const SECTIONS: [&str; 5] = ["geometry", "potential", "truncation", "scan", "transport"];

fn split_sections(text: &str) -> ConfigResult<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, msg: format!("unterminated section header `{s}`") })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::Syntax { line, msg: format!("unknown section `[{name}]`") });
            }
            if name != "potential" && out.iter().any(|sec| sec.name == name) {
                return Err(ConfigError::Syntax { line, msg: format!("section `[{name}]` appears twice") });
            }
            out.push(Section { name: name.to_string(), line, keys: BTreeMap::new() });
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, msg: format!("expected `key = value`, got `{s}`") })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
            return Err(ConfigError::Syntax { line, msg: format!("invalid key `{key}`") });
        }
        if value.is_empty() {
            return Err(ConfigError::Value { line, key: key.into(), msg: "missing value".into() });
        }
        let sec = out
            .last_mut()
            .ok_or_else(|| ConfigError::Syntax { line, msg: format!("`{key}` appears before any section header") })?;
        if let Some(prev) = sec.keys.get(key) {
            return Err(ConfigError::Value {
                line,
                key: key.into(),
                msg: format!("duplicate key (first set on line {})", prev.line),
            });
        }
        sec.keys.insert(key.to_string(), Entry { line, value: value.to_string(), used: false });
    }
    Ok(out)
}

impl Section {
    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.keys.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> ConfigResult<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::Value { line, key: key.into(), msg: format!("expected {what}, got `{v}`") }),
        }
    }

    fn float(&mut self, key: &str) -> ConfigResult<Option<f64>> {
        let v: Option<f64> = self.parsed(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(ConfigError::constraint(key, "must be finite")),
            _ => Ok(v),
        }
    }

    fn int(&mut self, key: &str) -> ConfigResult<Option<usize>> {
        self.parsed(key, "a non-negative integer")
    }

    fn list(&mut self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        let Some((line, v)) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| ConfigError::Value {
                    line,
                    key: key.into(),
                    msg: format!("expected a comma list of finite numbers, got `{s}`"),
                })
            })
            .collect::<ConfigResult<Vec<f64>>>()
            .map(Some)
    }

    fn finish(self) -> ConfigResult<()> {
        match self.keys.into_iter().find(|(_, e)| !e.used) {
            Some((key, e)) => Err(ConfigError::Value {
                line: e.line,
                key,
                msg: format!("unknown key in section [{}]", self.name),
            }),
            None => Ok(()),
        }
    }
}

fn take(sections: &mut Vec<Section>, name: &str) -> Section {
    match sections.iter().position(|s| s.name == name) {
        Some(i) => sections.remove(i),
        None => Section { name: name.to_string(), line: 0, keys: BTreeMap::new() },
    }
}

fn potential_term(mut sec: Section) -> ConfigResult<SeparableTerm> {
    let kind = sec.raw("profile").map(|(_, v)| v).unwrap_or_else(|| "step".into());
    let profile = match kind.as_str() {
        "step" => {
            let values = sec
                .list("values")?
                .ok_or_else(|| ConfigError::constraint("values", format!("required for the step profile of [potential] on line {}", sec.line)))?;
            let radii = sec.list("radii")?.unwrap_or_else(|| vec![1.0]);
            if radii.len() != values.len() {
                return Err(ConfigError::constraint("radii", "needs one entry per step value"));
            }
            RadialProfile::Step { radii, values }
        }
        "gaussian" => {
            let amplitude = sec.float("amplitude")?.ok_or_else(|| ConfigError::constraint("amplitude", "required for the gaussian profile"))?;
            let width = sec.float("width")?.ok_or_else(|| ConfigError::constraint("width", "required for the gaussian profile"))?;
            RadialProfile::Gaussian { amplitude, width }
        }
        other => return Err(ConfigError::constraint("profile", format!("must be `step` or `gaussian`, got `{other}`"))),
    };
    let coeffs = match sec.raw("coeffs") {
        None => vec![(0, C64::new(1.0, 0.0))],
        Some((line, v)) => v
            .split(',')
            .map(|item| parse_coeff(item.trim()).ok_or_else(|| ConfigError::Value {
                line,
                key: "coeffs".into(),
                msg: format!("expected `w:re` or `w:re:im`, got `{}`", item.trim()),
            }))
            .collect::<ConfigResult<Vec<_>>>()?,
    };
    let mut map = BTreeMap::new();
    for (w, c) in coeffs {
        if map.insert(w, c).is_some() {
            return Err(ConfigError::constraint("coeffs", format!("frequency {w} listed twice")));
        }
    }
    sec.finish()?;
    Ok(SeparableTerm { profile, coeffs: map })
}

fn parse_coeff(s: &str) -> Option<(i32, C64)> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let w = parts.first()?.parse().ok()?;
    let re: f64 = parts.get(1)?.parse().ok()?;
    let im: f64 = match parts.get(2) {
        Some(p) => p.parse().ok()?,
        None => 0.0,
    };
    if parts.len() > 3 || !re.is_finite() || !im.is_finite() {
        return None;
    }
    Some((w, C64::new(re, im)))
}

fn positive_count(sec: &mut Section, key: &str, default: usize) -> ConfigResult<usize> {
    let v = sec.int(key)?.unwrap_or(default);
    if v == 0 {
        return Err(ConfigError::constraint(key, "must be at least 1"));
    }
    Ok(v)
}

fn k_grid(sec: &mut Section) -> ConfigResult<Vec<f64>> {
    let explicit = sec.list("k")?;
    let (lo, hi, count) = (sec.float("k_min")?, sec.float("k_max")?, sec.int("k_points")?);
    let grid = match explicit {
        Some(ks) => {
            if lo.is_some() || hi.is_some() || count.is_some() {
                return Err(ConfigError::constraint("k", "give either `k` or `k_min`/`k_max`/`k_points`, not both"));
            }
            ks
        }
        None => {
            let (lo, hi, count) = (lo.unwrap_or(0.1), hi.unwrap_or(3.0), count.unwrap_or(20));
            if count < 3 {
                return Err(ConfigError::constraint("k_points", "must be at least 3"));
            }
            if !(hi > lo) {
                return Err(ConfigError::constraint("k_max", "must exceed k_min"));
            }
            (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
        }
    };
    if !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(ConfigError::constraint("k", "must be strictly increasing"));
    }
    Ok(grid)
}

fn scan_config(mut sec: Section) -> ConfigResult<ScanConfig> {
    let k_grid = k_grid(&mut sec)?;
    let seed_k = sec.float("seed_k")?.unwrap_or(k_grid[0]);
    let window = match (sec.float("e_min")?, sec.float("e_max")?) {
        (Some(a), Some(b)) if b > a => Some((a, b)),
        (Some(_), Some(_)) => return Err(ConfigError::constraint("e_max", "must exceed e_min")),
        (None, None) => None,
        (Some(_), None) => return Err(ConfigError::constraint("e_max", "required together with e_min")),
        (None, Some(_)) => return Err(ConfigError::constraint("e_min", "required together with e_max")),
    };
    let grid = positive_count(&mut sec, "grid", 16)?;
    if grid < 3 {
        return Err(ConfigError::constraint("grid", "must be at least 3"));
    }
    let band = sec.int("band")?.unwrap_or(0);
    let point = sec.int("point")?.unwrap_or(0);
    let sample_r = sec.list("sample_r")?.unwrap_or_else(|| (0..=12).map(|i| 0.25 * i as f64).collect());
    if sample_r.iter().any(|&r| r < 0.0) {
        return Err(ConfigError::constraint("sample_r", "radii must be non-negative"));
    }
    let sample_theta = sec.list("sample_theta")?.unwrap_or_else(|| vec![0.0]);
    let sample_phi = sec.list("sample_phi")?.unwrap_or_else(|| vec![0.0]);
    let sample_y = sec.list("sample_y")?.unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75]);
    sec.finish()?;
    Ok(ScanConfig { k_grid, seed_k, window, grid, band, point, sample_r, sample_theta, sample_phi, sample_y })
}

fn transport_config(mut sec: Section) -> ConfigResult<TransportConfig> {
    let band = sec.int("band")?.unwrap_or(0);
    let center = sec.float("center")?;
    let width = sec.float("width")?;
    let point_k = sec.float("point_k")?;
    let envelope = match (center, point_k) {
        (Some(_), Some(_)) => return Err(ConfigError::constraint("point_k", "conflicts with `center`")),
        (Some(center), None) => {
            let width = width.unwrap_or(0.15);
            if !(width > 0.0) {
                return Err(ConfigError::constraint("width", "must be positive"));
            }
            Some(Envelope::Gaussian { center, width })
        }
        (None, Some(k)) => {
            if width.is_some() {
                return Err(ConfigError::constraint("width", "only applies to a Gaussian envelope"));
            }
            Some(Envelope::Point { k })
        }
        (None, None) => {
            if width.is_some() {
                return Err(ConfigError::constraint("center", "required when `width` is given"));
            }
            None
        }
    };
    let explicit = sec.list("times")?;
    let (t_max, t_steps) = (sec.float("t_max")?, sec.int("t_steps")?);
    let times = match explicit {
        Some(ts) => {
            if t_max.is_some() || t_steps.is_some() {
                return Err(ConfigError::constraint("times", "give either `times` or `t_max`/`t_steps`, not both"));
            }
            ts
        }
        None => {
            let (t_max, steps) = (t_max.unwrap_or(1000.0), t_steps.unwrap_or(10));
            if !(t_max > 0.0) || steps == 0 {
                return Err(ConfigError::constraint("t_max", "needs t_max > 0 and t_steps >= 1"));
            }
            (0..=steps).map(|i| t_max * i as f64 / steps as f64).collect()
        }
    };
    if times.iter().any(|&t| t < 0.0) || !times.windows(2).all(|w| w[1] > w[0]) {
        return Err(ConfigError::constraint("times", "must be non-negative and strictly increasing"));
    }
    sec.finish()?;
    Ok(TransportConfig { band, envelope, times })
}

pub fn parse_config(text: &str) -> ConfigResult<RunConfig> {
    let mut sections = split_sections(text)?;

    let mut geo = take(&mut sections, "geometry");
    let n = geo.int("n")?.unwrap_or(2);
    if n != 2 && n != 3 {
        return Err(ConfigError::constraint("n", format!("must be 2 or 3, got {n}")));
    }
    let radius = geo.float("radius")?.unwrap_or(1.5);
    if !(radius > 1.0) {
        return Err(ConfigError::constraint("radius", format!("must satisfy R > 1, got {radius}")));
    }
    geo.finish()?;

    let mut tr = take(&mut sections, "truncation");
    let n_r = positive_count(&mut tr, "n_r", 40)?;
    if n_r < 8 {
        return Err(ConfigError::constraint("n_r", "must be at least 8"));
    }
    let q = positive_count(&mut tr, "q", 10)? as u32;
    let j = positive_count(&mut tr, "j", 4)? as u32;
    let mut trunc = Truncation::new(n_r, q, j);
    let l_max = tr.int("l_max")?.map_or(trunc.l_max, |v| v as u32);
    let j_max = tr.int("j_max")?.map_or(trunc.j_max, |v| v as u32);
    if l_max + 2 > q {
        return Err(ConfigError::constraint("l_max", format!("must satisfy l_max <= q - 2 = {}", q as i64 - 2)));
    }
    if j_max > j {
        return Err(ConfigError::constraint("j_max", format!("must satisfy j_max <= j = {j}")));
    }
    trunc = trunc.with_limits(l_max, j_max);
    tr.finish()?;

    let scan = scan_config(take(&mut sections, "scan"))?;
    let transport = transport_config(take(&mut sections, "transport"))?;

    let mut terms = Vec::new();
    for sec in sections.into_iter().filter(|s| s.name == "potential") {
        terms.push(potential_term(sec)?);
    }
    let potential = PotentialSpec { terms };
    potential.validate().map_err(|e| ConfigError::constraint("potential", e.to_string()))?;

    let waveguide = WaveguideConfig::new(n, radius, potential).with_truncation(trunc);
    waveguide.validate().map_err(|e| ConfigError::constraint("truncation", e.to_string()))?;
    Ok(RunConfig { waveguide, scan, transport })
}

/// Canonical text of the geometry, potential and truncation.
pub fn canonical(cfg: &WaveguideConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[geometry]\nn={}\nradius={:?}", cfg.n, cfg.radius);
    for term in &cfg.potential.terms {
        s.push_str("[potential]\n");
        match &term.profile {
            RadialProfile::Step { radii, values } => {
                let _ = writeln!(s, "profile=step\nradii={radii:?}\nvalues={values:?}");
            }
            RadialProfile::Gaussian { amplitude, width } => {
                let _ = writeln!(s, "profile=gaussian\namplitude={amplitude:?}\nwidth={width:?}");
            }
        }
        let coeffs: Vec<String> = term.coeffs.iter().map(|(w, c)| format!("{w}:{:?}:{:?}", c.re, c.im)).collect();
        let _ = writeln!(s, "coeffs={}", coeffs.join(","));
    }
    let t = &cfg.trunc;
    let _ = writeln!(s, "[truncation]\nn_r={}\nq={}\nj={}\nl_max={}\nj_max={}", t.n_r, t.q, t.j, t.l_max, t.j_max);
    s
}

/// SHA-256 of the canonical text, hex encoded.
pub fn config_hash(cfg: &WaveguideConfig) -> String {
    Sha256::digest(canonical(cfg).as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[geometry]\nn = 2\n\n[potential]\nvalues = -10\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.waveguide.radius, 1.5);
        assert_eq!(c.waveguide.trunc, Truncation::new(40, 10, 4));
        assert_eq!(c.waveguide.potential, PotentialSpec::well(10.0));
        assert_eq!(c.scan.k_grid.len(), 20);
        assert_eq!(c.scan.window, None);
        assert_eq!(c.transport.times.len(), 11);
    }

    #[test]
    fn radius_constraint_names_key() {
        let err = parse_config("[geometry]\nradius = 0.9\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`radius`") && msg.contains("R > 1"), "{msg}");
    }

    #[test]
    fn duplicate_key_rejected_with_line() {
        let err = parse_config("[geometry]\nn = 2\nn = 3\n").unwrap_err();
        assert_eq!(err, ConfigError::Value { line: 3, key: "n".into(), msg: "duplicate key (first set on line 2)".into() });
    }

    #[test]
    fn unknown_key_and_section_rejected() {
        assert!(matches!(parse_config("[geometry]\nheight = 2\n"), Err(ConfigError::Value { line: 2, .. })));
        assert!(matches!(parse_config("[mesh]\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(parse_config("n = 2\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(parse_config("[geometry]\nn 2\n"), Err(ConfigError::Syntax { line: 2, .. })));
        assert!(matches!(parse_config("[geometry]\n[geometry]\n"), Err(ConfigError::Syntax { line: 2, .. })));
    }

    #[test]
    fn bad_number_reports_line() {
        let err = parse_config("# c\n[truncation]\nq = ten\n").unwrap_err();
        assert!(matches!(err, ConfigError::Value { line: 3, ref key, .. } if key == "q"));
    }

    #[test]
    fn coupled_potential_terms() {
        let text = "[potential]\nvalues = 1\ncoeffs = -1:-1, 0:-8, 1:-1\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.waveguide.potential, PotentialSpec::coupled_well(-8.0, -1.0));
        let err = parse_config("[potential]\nvalues = 1\ncoeffs = 1:1:1\n").unwrap_err();
        assert!(err.to_string().contains("potential"), "{err}");
    }

    #[test]
    fn repeated_potential_sections_add_terms() {
        let text = "[potential]\nvalues = -4\n[potential]\nprofile = gaussian\namplitude = -2\nwidth = 0.3\ncoeffs = -2:0.5, 2:0.5\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.waveguide.potential.terms.len(), 2);
        assert_eq!(c.waveguide.potential.terms[1].profile, RadialProfile::Gaussian { amplitude: -2.0, width: 0.3 });
    }

    #[test]
    fn explicit_lists() {
        let text = "[scan]\nk = 0.1, 0.2, 0.4\ne_min = -7\ne_max = -5\n[transport]\ncenter = 0.8\ntimes = 0, 10, 20\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.scan.k_grid, vec![0.1, 0.2, 0.4]);
        assert_eq!(c.scan.seed_k, 0.1);
        assert_eq!(c.scan.window, Some((-7.0, -5.0)));
        assert_eq!(c.transport.envelope, Some(Envelope::Gaussian { center: 0.8, width: 0.15 }));
        assert_eq!(c.transport.times, vec![0.0, 10.0, 20.0]);
        assert!(parse_config("[scan]\nk = 0.1, 0.2\nk_min = 0\n").is_err());
        assert!(parse_config("[scan]\nk = 0.2, 0.1\n").is_err());
        assert!(parse_config("[scan]\ne_min = -7\n").is_err());
        assert!(parse_config("[transport]\ncenter = 1\npoint_k = 1\n").is_err());
    }

    #[test]
    fn hash_ignores_scan_and_transport() {
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config(&format!("{MINIMAL}[scan]\nk_points = 5\n[transport]\ncenter = 1\n")).unwrap();
        let c = parse_config(&format!("{MINIMAL}[geometry]\n")).err();
        assert!(c.is_some());
        assert_eq!(config_hash(&a.waveguide), config_hash(&b.waveguide));
        let d = parse_config("[geometry]\nradius = 1.8\n[potential]\nvalues = -10\n").unwrap();
        assert_ne!(config_hash(&a.waveguide), config_hash(&d.waveguide));
        assert_eq!(config_hash(&a.waveguide).len(), 64);
    }

    #[test]
    fn truncation_limits_checked() {
        assert!(parse_config("[truncation]\nq = 6\nl_max = 5\n").is_err());
        assert!(parse_config("[truncation]\nj = 2\nj_max = 3\n").is_err());
        assert!(parse_config("[truncation]\nn_r = 0\n").is_err());
        let c = parse_config("[truncation]\nn_r = 24\nq = 6\nj = 2\n").unwrap();
        assert_eq!(c.waveguide.trunc, Truncation::new(24, 6, 2));
    }
}
