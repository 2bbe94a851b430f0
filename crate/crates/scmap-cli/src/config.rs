//! Flat key = value configuration with one section per experiment kind.
//!
//! ```text
//! [trajectory]
//! steps = 1000
//! kappa0 = 1e-4
//! ```
//!
//! Values given on the command line via `--set key=value` override the file;
//! the file overrides the built-in defaults (which reproduce the reference
//! experiments).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Trajectory,
    Escape,
    Horn,
    Circles,
    Spo,
    Nform,
}

impl Kind {
    pub const ALL: [Kind; 6] =
        [Kind::Trajectory, Kind::Escape, Kind::Horn, Kind::Circles, Kind::Spo, Kind::Nform];

    pub fn section(&self) -> &'static str {
        match self {
            Kind::Trajectory => "trajectory",
            Kind::Escape => "escape",
            Kind::Horn => "horn",
            Kind::Circles => "circles",
            Kind::Spo => "spo",
            Kind::Nform => "nform",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.section())
    }
}

/// Raw section → key → value storage.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            if section.is_empty() {
                bail!("line {}: key outside any [section]", lineno + 1);
            }
            cfg.sections
                .entry(section.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }

    /// Keys present in `section` that the experiment does not know.
    pub fn unknown_keys(&self, section: &str, known: &[&str]) -> Vec<String> {
        self.sections
            .get(section)
            .map(|s| {
                s.keys().filter(|k| !known.contains(&k.as_str())).cloned().collect::<Vec<_>>()
            })
            .unwrap_or_default()
    }
}

fn get_f64(raw: &RawConfig, section: &str, key: &str, default: f64) -> Result<f64> {
    match raw.get(section, key) {
        None => Ok(default),
        Some(v) => v.parse().with_context(|| format!("[{section}] {key} = {v}: not a number")),
    }
}

fn get_u64(raw: &RawConfig, section: &str, key: &str, default: u64) -> Result<u64> {
    match raw.get(section, key) {
        None => Ok(default),
        Some(v) => v.parse().with_context(|| format!("[{section}] {key} = {v}: not an integer")),
    }
}

fn get_usize(raw: &RawConfig, section: &str, key: &str, default: usize) -> Result<usize> {
    Ok(get_u64(raw, section, key, default as u64)? as usize)
}

fn get_list(raw: &RawConfig, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
    match raw.get(section, key) {
        None => Ok(default.to_vec()),
        Some(v) => v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .with_context(|| format!("[{section}] {key}: `{s}` is not a number"))
            })
            .collect(),
    }
}

fn get_str(raw: &RawConfig, section: &str, key: &str, default: &str) -> String {
    raw.get(section, key).unwrap_or(default).to_string()
}

#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub nx: usize,
    pub ny: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub gamma: f64,
    pub kappa0: f64,
    pub theta0: f64,
    pub omega: f64,
    pub steps: u64,
    pub snapshots: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct EscapeConfig {
    pub kappa_bar: Vec<f64>,
    pub delta_kappa: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub y_max: f64,
    pub ell: u32,
    pub max_iters: u64,
    /// Permit cells whose κ₁ = κ̄ − Δκ/2 goes negative (off by default).
    pub allow_negative: bool,
}

#[derive(Debug, Clone)]
pub struct HornConfig {
    pub kappa1: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub y_max: f64,
    pub ell: u32,
    pub max_iters: u64,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct CirclesConfig {
    pub kappa1: f64,
    pub kappa2: f64,
    pub omega: f64,
    pub max_modes: usize,
    pub tol: f64,
    pub witness_iters: u64,
}

#[derive(Debug, Clone)]
pub struct SpoConfig {
    pub p: i64,
    pub q: usize,
    pub alpha: f64,
    pub theta0: f64,
    pub kappa0_min: f64,
    pub kappa0_max: f64,
    pub kappa0_step: f64,
    /// "elliptic", "hyperbolic" or "both".
    pub branch: String,
    pub nform_order: usize,
}

#[derive(Debug, Clone)]
pub struct NformConfig {
    pub p: i64,
    pub q: i64,
    pub order: usize,
}

#[derive(Debug, Clone)]
pub enum ExperimentConfig {
    Trajectory(TrajectoryConfig),
    Escape(EscapeConfig),
    Horn(HornConfig),
    Circles(CirclesConfig),
    Spo(SpoConfig),
    Nform(NformConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> Kind {
        match self {
            Self::Trajectory(_) => Kind::Trajectory,
            Self::Escape(_) => Kind::Escape,
            Self::Horn(_) => Kind::Horn,
            Self::Circles(_) => Kind::Circles,
            Self::Spo(_) => Kind::Spo,
            Self::Nform(_) => Kind::Nform,
        }
    }

    /// Echo every effective parameter as `key = value` lines.
    pub fn echo(&self) -> Vec<(String, String)> {
        fn push(v: &mut Vec<(String, String)>, k: &str, val: impl fmt::Display) {
            v.push((k.to_string(), val.to_string()));
        }
        let mut out = Vec::new();
        match self {
            Self::Trajectory(c) => {
                push(&mut out, "nx", c.nx);
                push(&mut out, "ny", c.ny);
                push(&mut out, "x_lo", c.x_lo);
                push(&mut out, "x_hi", c.x_hi);
                push(&mut out, "y_lo", c.y_lo);
                push(&mut out, "y_hi", c.y_hi);
                push(&mut out, "gamma", c.gamma);
                push(&mut out, "kappa0", c.kappa0);
                push(&mut out, "theta0", c.theta0);
                push(&mut out, "omega", c.omega);
                push(&mut out, "steps", c.steps);
                let snaps: Vec<String> = c.snapshots.iter().map(u64::to_string).collect();
                push(&mut out, "snapshots", snaps.join(","));
            }
            Self::Escape(c) => {
                let fmt_list =
                    |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
                push(&mut out, "kappa_bar", fmt_list(&c.kappa_bar));
                push(&mut out, "delta_kappa", fmt_list(&c.delta_kappa));
                push(&mut out, "nx", c.nx);
                push(&mut out, "ny", c.ny);
                push(&mut out, "y_max", c.y_max);
                push(&mut out, "ell", c.ell);
                push(&mut out, "max_iters", c.max_iters);
                push(&mut out, "allow_negative", c.allow_negative);
            }
            Self::Horn(c) => {
                let list = c.kappa1.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
                push(&mut out, "kappa1", list);
                push(&mut out, "nx", c.nx);
                push(&mut out, "ny", c.ny);
                push(&mut out, "y_max", c.y_max);
                push(&mut out, "ell", c.ell);
                push(&mut out, "max_iters", c.max_iters);
                push(&mut out, "tol", c.tol);
            }
            Self::Circles(c) => {
                push(&mut out, "kappa1", c.kappa1);
                push(&mut out, "kappa2", c.kappa2);
                push(&mut out, "omega", c.omega);
                push(&mut out, "max_modes", c.max_modes);
                push(&mut out, "tol", c.tol);
                push(&mut out, "witness_iters", c.witness_iters);
            }
            Self::Spo(c) => {
                push(&mut out, "p", c.p);
                push(&mut out, "q", c.q);
                push(&mut out, "alpha", c.alpha);
                push(&mut out, "theta0", c.theta0);
                push(&mut out, "kappa0_min", c.kappa0_min);
                push(&mut out, "kappa0_max", c.kappa0_max);
                push(&mut out, "kappa0_step", c.kappa0_step);
                push(&mut out, "branch", &c.branch);
                push(&mut out, "nform_order", c.nform_order);
            }
            Self::Nform(c) => {
                push(&mut out, "p", c.p);
                push(&mut out, "q", c.q);
                push(&mut out, "order", c.order);
            }
        }
        out
    }
}

const TRAJECTORY_KEYS: [&str; 12] = [
    "nx", "ny", "x_lo", "x_hi", "y_lo", "y_hi", "gamma", "kappa0", "theta0", "omega", "steps",
    "snapshots",
];
const ESCAPE_KEYS: [&str; 8] =
    ["kappa_bar", "delta_kappa", "nx", "ny", "y_max", "ell", "max_iters", "allow_negative"];
const HORN_KEYS: [&str; 7] = ["kappa1", "nx", "ny", "y_max", "ell", "max_iters", "tol"];
const CIRCLES_KEYS: [&str; 6] = ["kappa1", "kappa2", "omega", "max_modes", "tol", "witness_iters"];
const SPO_KEYS: [&str; 9] = [
    "p", "q", "alpha", "theta0", "kappa0_min", "kappa0_max", "kappa0_step", "branch",
    "nform_order",
];
const NFORM_KEYS: [&str; 3] = ["p", "q", "order"];

/// Build the effective configuration of one experiment kind from the raw
/// sections, falling back to the built-in reference defaults.
pub fn build(kind: Kind, raw: &RawConfig) -> Result<ExperimentConfig> {
    let s = kind.section();
    Ok(match kind {
        Kind::Trajectory => ExperimentConfig::Trajectory(TrajectoryConfig {
            nx: get_usize(raw, s, "nx", 160)?,
            ny: get_usize(raw, s, "ny", 84)?,
            x_lo: get_f64(raw, s, "x_lo", 0.0)?,
            x_hi: get_f64(raw, s, "x_hi", 2.0 * PI)?,
            y_lo: get_f64(raw, s, "y_lo", -0.3)?,
            y_hi: get_f64(raw, s, "y_hi", 0.3)?,
            gamma: get_f64(raw, s, "gamma", 3e-6)?,
            kappa0: get_f64(raw, s, "kappa0", 1e-4)?,
            theta0: get_f64(raw, s, "theta0", 0.0)?,
            omega: get_f64(raw, s, "omega", 0.0)?,
            steps: get_u64(raw, s, "steps", 1000)?,
            snapshots: match raw.get(s, "snapshots") {
                None => vec![2, 6, 12, 20, 66],
                Some(v) => v
                    .split(',')
                    .map(|t| t.trim().parse::<u64>().map_err(|e| anyhow!("snapshots: {e}")))
                    .collect::<Result<_>>()?,
            },
        }),
        Kind::Escape => ExperimentConfig::Escape(EscapeConfig {
            kappa_bar: get_list(raw, s, "kappa_bar", &[0.6, 0.8, 1.0])?,
            delta_kappa: get_list(
                raw,
                s,
                "delta_kappa",
                &[0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4],
            )?,
            nx: get_usize(raw, s, "nx", 100)?,
            ny: get_usize(raw, s, "ny", 100)?,
            y_max: get_f64(raw, s, "y_max", PI / 5.0)?,
            ell: get_u64(raw, s, "ell", 1)? as u32,
            max_iters: get_u64(raw, s, "max_iters", 100_000)?,
            allow_negative: matches!(raw.get(s, "allow_negative"), Some("true") | Some("1")),
        }),
        Kind::Horn => ExperimentConfig::Horn(HornConfig {
            kappa1: get_list(raw, s, "kappa1", &[0.0, 0.2, 0.4, 0.6, 0.8, 0.9])?,
            nx: get_usize(raw, s, "nx", 100)?,
            ny: get_usize(raw, s, "ny", 100)?,
            y_max: get_f64(raw, s, "y_max", 3.0 * PI / 5.0)?,
            ell: get_u64(raw, s, "ell", 1)? as u32,
            max_iters: get_u64(raw, s, "max_iters", 500_000)?,
            tol: get_f64(raw, s, "tol", 1e-3)?,
        }),
        Kind::Circles => ExperimentConfig::Circles(CirclesConfig {
            kappa1: get_f64(raw, s, "kappa1", 0.7)?,
            kappa2: get_f64(raw, s, "kappa2", 0.8)?,
            omega: get_f64(raw, s, "omega", scmap::circles::golden_mean_omega())?,
            max_modes: get_usize(raw, s, "max_modes", 256)?,
            tol: get_f64(raw, s, "tol", 1e-10)?,
            witness_iters: get_u64(raw, s, "witness_iters", 1_000_000)?,
        }),
        Kind::Spo => ExperimentConfig::Spo(SpoConfig {
            p: get_u64(raw, s, "p", 1)? as i64,
            q: get_usize(raw, s, "q", 3)?,
            alpha: get_f64(raw, s, "alpha", 0.01)?,
            theta0: get_f64(raw, s, "theta0", 0.0)?,
            kappa0_min: get_f64(raw, s, "kappa0_min", 0.02)?,
            kappa0_max: get_f64(raw, s, "kappa0_max", 0.3)?,
            kappa0_step: get_f64(raw, s, "kappa0_step", 0.01)?,
            branch: get_str(raw, s, "branch", "both"),
            nform_order: get_usize(raw, s, "nform_order", 5)?,
        }),
        Kind::Nform => ExperimentConfig::Nform(NformConfig {
            p: get_u64(raw, s, "p", 1)? as i64,
            q: get_u64(raw, s, "q", 3)? as i64,
            order: get_usize(raw, s, "order", 6)?,
        }),
    })
}

/// Validate one experiment configuration against the module preconditions.
/// Returns human-readable violations; empty means the config is runnable.
pub fn validate(cfg: &ExperimentConfig, raw: &RawConfig) -> Vec<String> {
    let mut v = Vec::new();
    let known: &[&str] = match cfg.kind() {
        Kind::Trajectory => &TRAJECTORY_KEYS,
        Kind::Escape => &ESCAPE_KEYS,
        Kind::Horn => &HORN_KEYS,
        Kind::Circles => &CIRCLES_KEYS,
        Kind::Spo => &SPO_KEYS,
        Kind::Nform => &NFORM_KEYS,
    };
    for key in raw.unknown_keys(cfg.kind().section(), known) {
        v.push(format!("[{}] unknown key `{key}`", cfg.kind()));
    }
    match cfg {
        ExperimentConfig::Trajectory(c) => {
            if c.nx == 0 || c.ny == 0 {
                v.push("trajectory: grid counts must be at least 1".into());
            }
            if !(c.x_lo < c.x_hi) || !(c.y_lo < c.y_hi) {
                v.push("trajectory: grid ranges must satisfy lo < hi".into());
            }
            if c.steps == 0 {
                v.push("trajectory: steps must be at least 1".into());
            }
            if !(c.kappa0 > 0.0) {
                v.push("trajectory: kappa0 must be positive (phase update divides by κ)".into());
            }
        }
        ExperimentConfig::Escape(c) => {
            if c.kappa_bar.is_empty() || c.delta_kappa.is_empty() {
                v.push("escape: parameter lists must be nonempty".into());
            }
            if c.delta_kappa.iter().any(|&d| d < 0.0) {
                v.push("escape: delta_kappa entries must be nonnegative".into());
            }
            if c.nx == 0 || c.ny == 0 {
                v.push("escape: grid counts must be at least 1".into());
            }
            if !(c.y_max > 0.0) {
                v.push("escape: y_max must be positive".into());
            }
            if c.ell == 0 {
                v.push("escape: ell must be at least 1".into());
            }
            if c.max_iters == 0 {
                v.push("escape: max_iters must be at least 1".into());
            }
            if !c.allow_negative {
                for &kbar in &c.kappa_bar {
                    for &dk in &c.delta_kappa {
                        if kbar - dk / 2.0 < 0.0 {
                            v.push(format!(
                                "escape: cell (κ̄ = {kbar}, Δκ = {dk}) reaches negative κ₁; \
                                 set allow_negative = true to permit it"
                            ));
                        }
                    }
                }
            }
        }
        ExperimentConfig::Horn(c) => {
            if c.kappa1.is_empty() {
                v.push("horn: kappa1 list must be nonempty".into());
            }
            if c.kappa1.iter().any(|&k| !(0.0..=0.975).contains(&k)) {
                v.push("horn: kappa1 values must lie in [0, κ_c]".into());
            }
            if c.nx == 0 || c.ny == 0 {
                v.push("horn: grid counts must be at least 1".into());
            }
            if c.ell == 0 {
                v.push("horn: ell must be at least 1".into());
            }
            if c.max_iters == 0 {
                v.push("horn: max_iters must be at least 1".into());
            }
            if !(c.tol > 0.0) {
                v.push("horn: tol must be positive".into());
            }
        }
        ExperimentConfig::Circles(c) => {
            if !(c.kappa1 >= 0.0 && c.kappa2 >= 0.0) {
                v.push("circles: perturbations must be nonnegative".into());
            }
            if c.max_modes == 0 {
                v.push("circles: max_modes must be at least 1".into());
            }
            if !(c.tol > 0.0) {
                v.push("circles: tol must be positive".into());
            }
        }
        ExperimentConfig::Spo(c) => {
            if c.q == 0 {
                v.push("spo: q must be at least 1".into());
            }
            if !(c.kappa0_min > 0.0 && c.kappa0_max >= c.kappa0_min) {
                v.push("spo: need 0 < kappa0_min ≤ kappa0_max".into());
            }
            if !(c.kappa0_step > 0.0) {
                v.push("spo: kappa0_step must be positive".into());
            }
            if !matches!(c.branch.as_str(), "elliptic" | "hyperbolic" | "both") {
                v.push(format!("spo: branch `{}` is not elliptic|hyperbolic|both", c.branch));
            }
            if c.nform_order > scmap::nform::MAX_ORDER {
                v.push(format!("spo: nform_order exceeds {}", scmap::nform::MAX_ORDER));
            }
        }
        ExperimentConfig::Nform(c) => {
            if !matches!(c.q, 2 | 3 | 4 | 6) {
                v.push("nform: q must be one of 2, 3, 4, 6".into());
            }
            if (c.order as i64) < c.q {
                v.push("nform: order must be at least q (first resonance)".into());
            }
            if c.order > scmap::nform::MAX_ORDER {
                v.push(format!("nform: order exceeds {}", scmap::nform::MAX_ORDER));
            }
            if c.p <= 0 {
                v.push("nform: p must be positive".into());
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_clean() {
        let raw = RawConfig::default();
        for kind in Kind::ALL {
            let cfg = build(kind, &raw).unwrap();
            let violations = validate(&cfg, &raw);
            assert!(violations.is_empty(), "{kind}: {violations:?}");
        }
    }

    #[test]
    fn bad_values_are_reported() {
        let mut raw = RawConfig::default();
        raw.set("spo", "q", "0");
        let cfg = build(Kind::Spo, &raw).unwrap();
        assert!(!validate(&cfg, &raw).is_empty());

        let mut raw = RawConfig::default();
        raw.set("escape", "max_iters", "0");
        let cfg = build(Kind::Escape, &raw).unwrap();
        assert!(validate(&cfg, &raw).iter().any(|v| v.contains("max_iters")));
    }

    #[test]
    fn negative_kappa_cells_need_the_explicit_flag() {
        let mut raw = RawConfig::default();
        raw.set("escape", "kappa_bar", "0.1");
        raw.set("escape", "delta_kappa", "0.3");
        let cfg = build(Kind::Escape, &raw).unwrap();
        assert!(validate(&cfg, &raw).iter().any(|v| v.contains("negative")));

        raw.set("escape", "allow_negative", "true");
        let cfg = build(Kind::Escape, &raw).unwrap();
        assert!(validate(&cfg, &raw).is_empty());
    }

    #[test]
    fn file_overrides_defaults_and_unknown_keys_flag() {
        let raw = RawConfig::parse("[trajectory]\nsteps = 7\nbogus = 1\n").unwrap();
        let cfg = build(Kind::Trajectory, &raw).unwrap();
        match &cfg {
            ExperimentConfig::Trajectory(t) => assert_eq!(t.steps, 7),
            _ => unreachable!(),
        }
        assert!(validate(&cfg, &raw).iter().any(|v| v.contains("bogus")));
    }
}
