//! Flat `section.key = value` experiment configuration.
//!
//! Every key has a schema entry with a default. Values are normalized when
//! parsed, so `to_text` followed by `parse` reproduces the same config and
//! the config hash does not depend on formatting.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use fockspace::Cplx;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("{key}: {reason} (got `{value}`)")]
    Invalid { key: String, value: String, reason: String },
}

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    lo_open: bool,
    hi: f64,
}

const ANY: Range = Range { lo: f64::NEG_INFINITY, lo_open: false, hi: f64::INFINITY };
const POSITIVE: Range = Range { lo: 0.0, lo_open: true, hi: f64::INFINITY };
const NONNEG: Range = Range { lo: 0.0, lo_open: false, hi: f64::INFINITY };
const AT_LEAST_ONE: Range = Range { lo: 1.0, lo_open: false, hi: f64::INFINITY };

impl Range {
    fn check(&self, x: f64) -> Result<(), String> {
        if !x.is_finite() {
            return Err("must be finite".into());
        }
        let below = if self.lo_open { x <= self.lo } else { x < self.lo };
        if below || x > self.hi {
            let open = if self.lo_open { "(" } else { "[" };
            let hi = if self.hi.is_finite() { format!("{}]", self.hi) } else { "∞)".into() };
            return Err(format!("must lie in {open}{}, {hi}", self.lo));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Real(Range),
    /// A real or `inf`.
    RealOrInf(Range),
    Count(usize, usize),
    Choice(&'static [&'static str]),
    /// Comma-separated list drawn from a fixed vocabulary.
    Choices(&'static [&'static str]),
    Point,
    Reals(Range),
    Points,
    /// `re_lo, re_hi, im_lo, im_hi`.
    Window,
    /// `re, im, mass; …`.
    Atoms,
    /// `t, h; …`.
    Knots,
}

pub const FAMILIES: &[&str] = &["holo-poly", "conj-linear", "conj-gaussian", "bump", "step", "mixed"];

struct Entry {
    key: &'static str,
    kind: Kind,
    default: &'static str,
}

const fn e(key: &'static str, kind: Kind, default: &'static str) -> Entry {
    Entry { key, kind, default }
}

const SCHEMA: &[Entry] = &[
    e("weight.kind", Kind::Choice(&["gaussian", "perturbed"]), "gaussian"),
    e("weight.alpha", Kind::Real(POSITIVE), "1"),
    e("weight.amplitude", Kind::Real(NONNEG), "0.05"),
    e("weight.m", Kind::Real(POSITIVE), "0.9"),
    e("weight.M", Kind::Real(POSITIVE), "1.1"),
    e("weight.tol", Kind::Real(NONNEG), "1e-9"),
    e("basis.degree", Kind::Count(0, 150), "20"),
    e("basis.margin", Kind::Count(0, 100), "10"),
    e("quad.plane_order", Kind::Count(0, 600), "0"),
    e("quad.ball_order", Kind::Count(2, 200), "24"),
    e("quad.r_cut", Kind::Real(NONNEG), "0"),
    e("lattice.w1", Kind::Point, "1,0"),
    e("lattice.r", Kind::Real(POSITIVE), "1"),
    e("lattice.K", Kind::Count(1, 16), "1"),
    e("lattice.window", Kind::Window, "-8,8,-8,8"),
    e("lattice.cap", Kind::Count(1, 50_000_000), "2000000"),
    e("symbol.family", Kind::Choice(FAMILIES), "conj-linear"),
    e("symbol.radius", Kind::Real(POSITIVE), "1"),
    e("symbol.beta", Kind::Real(POSITIVE), "1"),
    e("symbol.coeffs", Kind::Points, "1,0;0,1"),
    e("functional.q", Kind::Real(AT_LEAST_ONE), "2"),
    e("functional.r", Kind::Real(POSITIVE), "1"),
    e("functional.d", Kind::Count(0, 30), "6"),
    e("functional.s", Kind::RealOrInf(AT_LEAST_ONE), "inf"),
    e("functional.shells", Kind::Reals(NONNEG), "1,2,3,4"),
    e("functional.per_shell", Kind::Count(1, 10_000), "16"),
    e("probe.radius", Kind::Real(NONNEG), "2"),
    e("probe.count", Kind::Count(1, 100_000), "25"),
    e("dbar.rho0", Kind::Real(POSITIVE), "0.5"),
    e("dbar.panel_points", Kind::Count(2, 64), "10"),
    e("dbar.efolds", Kind::Real(POSITIVE), "40"),
    e("dbar.refine", Kind::Real(POSITIVE), "1"),
    e("dbar.p", Kind::Real(AT_LEAST_ONE), "2"),
    e("approx.t", Kind::Reals(POSITIVE), "2,3,4"),
    e("approx.lattice_r", Kind::Real(POSITIVE), "0.5"),
    e("approx.angular", Kind::Count(8, 4096), "192"),
    e("gauge.family", Kind::Choice(&["power", "exp-minus-one", "custom-grid"]), "power"),
    e("gauge.p", Kind::Reals(POSITIVE), "1,2,4"),
    e("gauge.grid", Kind::Knots, "0,0;1,1;2,4"),
    e("gauge.c", Kind::Reals(POSITIVE), "0.5,1,2"),
    e("measure.kind", Kind::Choice(&["lebesgue", "gaussian", "atomic"]), "gaussian"),
    e("measure.beta", Kind::Real(POSITIVE), "1"),
    e("measure.atoms", Kind::Atoms, "0,0,1"),
    e("report.symbols", Kind::Choices(FAMILIES), "conj-linear,conj-gaussian,bump,mixed"),
];

fn entry(key: &str) -> Option<&'static Entry> {
    SCHEMA.iter().find(|e| e.key == key)
}

fn num(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", s.trim()))
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

fn pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected `re,im`".into());
    }
    Ok((num(parts[0])?, num(parts[1])?))
}

/// Parses `raw` for `kind` and returns its canonical text.
fn normalize(kind: Kind, raw: &str) -> Result<String, String> {
    let raw = raw.trim();
    let list = |sep: char| -> Vec<&str> { raw.split(sep).map(str::trim).filter(|s| !s.is_empty()).collect() };
    match kind {
        Kind::Real(r) => {
            let x = num(raw)?;
            r.check(x)?;
            Ok(fmt_num(x))
        }
        Kind::RealOrInf(r) => {
            if raw.eq_ignore_ascii_case("inf") {
                return Ok("inf".into());
            }
            let x = num(raw)?;
            r.check(x)?;
            Ok(fmt_num(x))
        }
        Kind::Count(lo, hi) => {
            let n: usize = raw.parse().map_err(|_| "must be a nonnegative integer".to_string())?;
            if n < lo || n > hi {
                return Err(format!("must lie in [{lo}, {hi}]"));
            }
            Ok(n.to_string())
        }
        Kind::Choice(options) => {
            if options.contains(&raw) {
                Ok(raw.to_string())
            } else {
                Err(format!("must be one of {}", options.join(", ")))
            }
        }
        Kind::Choices(options) => {
            let items = list(',');
            if items.is_empty() {
                return Err("must name at least one entry".into());
            }
            for it in &items {
                if !options.contains(it) {
                    return Err(format!("`{it}` is not one of {}", options.join(", ")));
                }
            }
            Ok(items.join(","))
        }
        Kind::Point => {
            let (a, b) = pair(raw)?;
            ANY.check(a)?;
            ANY.check(b)?;
            Ok(format!("{},{}", fmt_num(a), fmt_num(b)))
        }
        Kind::Reals(r) => {
            let items = list(',');
            if items.is_empty() {
                return Err("must list at least one value".into());
            }
            let xs = items.iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?;
            for x in &xs {
                r.check(*x)?;
            }
            Ok(xs.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(","))
        }
        Kind::Points => {
            let items = list(';');
            if items.is_empty() {
                return Err("must list at least one point".into());
            }
            let ps = items.iter().map(|s| pair(s)).collect::<Result<Vec<_>, _>>()?;
            for (a, b) in &ps {
                ANY.check(*a)?;
                ANY.check(*b)?;
            }
            Ok(ps.iter().map(|(a, b)| format!("{},{}", fmt_num(*a), fmt_num(*b))).collect::<Vec<_>>().join(";"))
        }
        Kind::Window => {
            let xs = list(',').iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?;
            if xs.len() != 4 {
                return Err("expected `re_lo,re_hi,im_lo,im_hi`".into());
            }
            for x in &xs {
                ANY.check(*x)?;
            }
            if !(xs[1] > xs[0] && xs[3] > xs[2]) {
                return Err("needs re_lo < re_hi and im_lo < im_hi".into());
            }
            Ok(xs.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(","))
        }
        Kind::Atoms => {
            let mut out = Vec::new();
            for item in list(';') {
                let xs = item.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
                if xs.len() != 3 {
                    return Err("atoms are `re,im,mass`".into());
                }
                ANY.check(xs[0])?;
                ANY.check(xs[1])?;
                POSITIVE.check(xs[2]).map_err(|e| format!("mass {e}"))?;
                out.push(xs.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(","));
            }
            if out.is_empty() {
                return Err("must list at least one atom".into());
            }
            Ok(out.join(";"))
        }
        Kind::Knots => {
            let ps = list(';').iter().map(|s| pair(s)).collect::<Result<Vec<_>, _>>()?;
            if ps.len() < 2 {
                return Err("needs at least two `t,h` knots".into());
            }
            for (t, h) in &ps {
                NONNEG.check(*t)?;
                NONNEG.check(*h)?;
            }
            Ok(ps.iter().map(|(a, b)| format!("{},{}", fmt_num(*a), fmt_num(*b))).collect::<Vec<_>>().join(";"))
        }
    }
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            values: SCHEMA
                .iter()
                .map(|e| (e.key, normalize(e.kind, e.default).expect("schema default is valid")))
                .collect(),
        }
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl ExperimentConfig {
    /// Parses config text over the defaults. Blank lines and `#` comments
    /// are ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: i + 1, text: line.to_string() });
            };
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.check_consistency()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides.
    pub fn with_overrides<S: AsRef<str>>(mut self, overrides: &[S]) -> Result<Self, ConfigError> {
        for o in overrides {
            let o = o.as_ref();
            let Some((k, v)) = o.split_once('=') else {
                return Err(ConfigError::Syntax { line: 0, text: o.to_string() });
            };
            self.set(k.trim(), v.trim())?;
        }
        self.check_consistency()?;
        Ok(self)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let e = entry(key).ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
        let v = normalize(e.kind, value).map_err(|reason| ConfigError::Invalid {
            key: key.to_string(),
            value: value.to_string(),
            reason,
        })?;
        self.values.insert(e.key, v);
        Ok(())
    }

    fn check_consistency(&self) -> Result<(), ConfigError> {
        if self.text("weight.kind") == "perturbed" && self.real("weight.m") > self.real("weight.M") {
            return Err(ConfigError::Invalid {
                key: "weight.m".into(),
                value: self.values["weight.m"].clone(),
                reason: "must not exceed weight.M".into(),
            });
        }
        let shells = self.reals("functional.shells");
        if shells.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ConfigError::Invalid {
                key: "functional.shells".into(),
                value: self.values["functional.shells"].clone(),
                reason: "must be strictly increasing".into(),
            });
        }
        let knots = self.pairs("gauge.grid");
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(ConfigError::Invalid {
                key: "gauge.grid".into(),
                value: self.values["gauge.grid"].clone(),
                reason: "knot abscissae must increase".into(),
            });
        }
        Ok(())
    }

    /// Canonical text: every key in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical text and seed.
    pub fn hash(&self, seed: u64) -> String {
        let mut h = Sha256::new();
        h.update(self.to_text().as_bytes());
        h.update(format!("seed = {seed}\n").as_bytes());
        hex::encode(h.finalize())[..16].to_string()
    }

    fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("config key `{key}` is not in the schema"))
    }

    pub fn text(&self, key: &str) -> &str {
        self.raw(key)
    }

    pub fn real(&self, key: &str) -> f64 {
        self.raw(key).parse().expect("validated real")
    }

    /// `None` for `inf`.
    pub fn real_or_inf(&self, key: &str) -> Option<f64> {
        match self.raw(key) {
            "inf" => None,
            v => Some(v.parse().expect("validated real")),
        }
    }

    pub fn count(&self, key: &str) -> usize {
        self.raw(key).parse().expect("validated count")
    }

    pub fn reals(&self, key: &str) -> Vec<f64> {
        self.raw(key).split(',').map(|s| s.parse().expect("validated real")).collect()
    }

    pub fn list(&self, key: &str) -> Vec<&str> {
        self.raw(key).split(',').collect()
    }

    pub fn point(&self, key: &str) -> Cplx<f64> {
        let (a, b) = pair(self.raw(key)).expect("validated point");
        Cplx::new(a, b)
    }

    pub fn points(&self, key: &str) -> Vec<Cplx<f64>> {
        self.pairs(key).into_iter().map(|(a, b)| Cplx::new(a, b)).collect()
    }

    pub fn pairs(&self, key: &str) -> Vec<(f64, f64)> {
        self.raw(key).split(';').map(|s| pair(s).expect("validated pair")).collect()
    }

    pub fn triples(&self, key: &str) -> Vec<[f64; 3]> {
        self.raw(key)
            .split(';')
            .map(|s| {
                let v: Vec<f64> = s.split(',').map(|x| x.parse().expect("validated real")).collect();
                [v[0], v[1], v[2]]
            })
            .collect()
    }

    pub fn window(&self, key: &str) -> [f64; 4] {
        let v = self.reals(key);
        [v[0], v[1], v[2], v[3]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn normalization_is_idempotent() {
        for e in SCHEMA {
            let once = normalize(e.kind, e.default).unwrap();
            assert_eq!(normalize(e.kind, &once).unwrap(), once, "{}", e.key);
        }
        let cfg = ExperimentConfig::parse("weight.tol = 1e-9
").unwrap();
        assert_eq!(cfg.hash(0), ExperimentConfig::default().hash(0));
    }

    #[test]
    fn values_are_normalized() {
        let a = ExperimentConfig::parse("functional.q = 2.0\nlattice.w1 = 1.0, 0.0\n").unwrap();
        let b = ExperimentConfig::parse("functional.q=2 # same\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(7), b.hash(7));
        assert_ne!(a.hash(7), a.hash(8));
    }

    #[test]
    fn invalid_q_names_the_field() {
        let err = ExperimentConfig::parse("functional.q = 0.5").unwrap_err();
        assert!(err.to_string().starts_with("functional.q:"), "{err}");
    }

    #[test]
    fn unknown_key_and_syntax() {
        assert_eq!(
            ExperimentConfig::parse("nope = 1").unwrap_err(),
            ConfigError::UnknownKey("nope".into())
        );
        assert!(matches!(ExperimentConfig::parse("just words"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(ExperimentConfig::parse("symbol.family = wobble").is_err());
        assert!(ExperimentConfig::parse("functional.shells = 2,1").is_err());
    }

    #[test]
    fn overrides_apply_last() {
        let cfg = ExperimentConfig::parse("basis.degree = 12").unwrap();
        let cfg = cfg.with_overrides(&["basis.degree=30"]).unwrap();
        assert_eq!(cfg.count("basis.degree"), 30);
        assert!(cfg.clone().with_overrides(&["basis.degree"]).is_err());
    }

    #[test]
    fn typed_accessors() {
        let cfg = ExperimentConfig::parse("measure.atoms = 0,0,1; 1,2,0.5\nfunctional.s = 4").unwrap();
        assert_eq!(cfg.triples("measure.atoms"), vec![[0.0, 0.0, 1.0], [1.0, 2.0, 0.5]]);
        assert_eq!(cfg.real_or_inf("functional.s"), Some(4.0));
        assert_eq!(ExperimentConfig::default().real_or_inf("functional.s"), None);
        assert_eq!(cfg.window("lattice.window"), [-8.0, 8.0, -8.0, 8.0]);
    }
}
