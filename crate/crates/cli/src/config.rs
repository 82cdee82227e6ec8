//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;

use anyhow::{anyhow, bail, Context, Result};
use sam_core::mle::EpsSchedule;
use sam_core::model::ParameterBox;

/// Parses INI-style text: one `key = value` per line, `#` or `;` comments,
/// blank lines ignored. Section headers are not supported.
pub fn parse_ini(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`", i + 1);
        };
        let key = k.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            bail!("line {}: invalid key `{key}`", i + 1);
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Raw configuration: later assignments override earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

const KNOWN: &[&str] = &[
    "model", "box", "theta0", "v0", "n", "dt", "data", "N", "ladder", "seed", "bank_seed", "start",
    "eps_scale", "eps_floor", "max_evals", "initial_scale", "euler_k", "replicates", "ref_N", "n_list",
    "n_rule", "coord", "grid_points", "surface_points", "v", "w", "t", "checks", "scale", "cache",
    "experiment", "threads", "out",
];

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_ini(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KNOWN.contains(&key) {
            bail!("unknown configuration key `{key}`");
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| anyhow!("override `{pair}` is not key=value"))?;
        self.set(k.trim(), v.trim())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.raw(key).map_or(Ok(default), |v| v.parse().with_context(|| format!("`{key}` is not a number: {v}")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.raw(key).map_or(Ok(default), |v| v.parse().with_context(|| format!("`{key}` is not a count: {v}")))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        self.raw(key).map_or(Ok(default), |v| v.parse().with_context(|| format!("`{key}` is not an integer: {v}")))
    }

    pub fn vec_f64(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key).map(|v| parse_list(v).with_context(|| format!("`{key}`"))).transpose()
    }

    pub fn vec_usize(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse::<usize>().with_context(|| format!("`{key}` entry `{s}`")))
                    .collect()
            })
            .transpose()
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_or("seed", 1)
    }

    pub fn model_name(&self) -> &str {
        self.str_or("model", "logistic")
    }

    /// The parameter box; defaults to the standard logistic benchmark box.
    pub fn bounds(&self) -> Result<ParameterBox> {
        let text = match (self.raw("box"), self.model_name()) {
            (Some(b), _) => b,
            (None, "logistic") => "0.03,0.18 850,1200 0.09,0.12",
            (None, "bm-drift") => "-5,5",
            (None, other) => bail!("no default box for model `{other}`"),
        };
        Ok(ParameterBox::parse(text)?)
    }

    pub fn theta0(&self) -> Result<Vec<f64>> {
        match (self.vec_f64("theta0")?, self.model_name()) {
            (Some(t), _) => Ok(t),
            (None, "logistic") => Ok(vec![0.1, 1000.0, 0.1]),
            (None, "bm-drift") => Ok(vec![0.5]),
            (None, other) => bail!("no default theta0 for model `{other}`"),
        }
    }

    pub fn start(&self) -> Result<Vec<f64>> {
        match (self.vec_f64("start")?, self.model_name()) {
            (Some(t), _) => Ok(t),
            (None, "logistic") => Ok(vec![0.05, 1150.0, 0.115]),
            (None, _) => Ok(self.bounds()?.center()),
        }
    }

    pub fn eps_schedule(&self) -> Result<EpsSchedule> {
        let d = EpsSchedule::default();
        Ok(EpsSchedule { scale: self.f64_or("eps_scale", d.scale)?, floor: self.f64_or("eps_floor", d.floor)? })
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| s.trim().parse::<f64>().with_context(|| format!("entry `{s}`"))).collect()
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let mut c = RunConfig::from_text("# run\nmodel = logistic\n\n; note\nn = 10\nn=20\n").unwrap();
        assert_eq!(c.usize_or("n", 0).unwrap(), 20);
        c.set_pair("seed=9").unwrap();
        assert_eq!(c.seed().unwrap(), 9);
        assert!(c.set_pair("nope").is_err());
        assert!(c.set("colour", "red").is_err());
        assert_eq!(c.bounds().unwrap().dim(), 3);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_ini("just words").is_err());
        assert!(parse_ini(" = 3").is_err());
        assert!(parse_ini("[section]").is_err());
        assert!(RunConfig::from_text("n = x").unwrap().usize_or("n", 1).is_err());
    }

    #[test]
    fn display_roundtrips() {
        let c = RunConfig::from_text("v0 = 700\nmodel = bm-drift\ntheta0 = 0.2\n").unwrap();
        assert_eq!(RunConfig::from_text(&c.to_string()).unwrap(), c);
        assert_eq!(c.theta0().unwrap(), vec![0.2]);
    }

    proptest::proptest! {
        #[test]
        fn display_reparses(pairs in proptest::collection::vec((0..KNOWN.len(), "[a-z0-9.,:_ -]{0,20}"), 0..10)) {
            let mut c = RunConfig::default();
            for (k, v) in &pairs {
                c.set(KNOWN[*k], v.trim()).unwrap();
            }
            proptest::prop_assert_eq!(RunConfig::from_text(&c.to_string()).unwrap(), c);
        }

        #[test]
        fn parser_never_panics(text in "[a-z=#;\\[\\] \n0-9]{0,120}") {
            let _ = parse_ini(&text);
        }
    }
}
