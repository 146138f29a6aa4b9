use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::modes::{RangeMethod, XI_MAX, XI_MIN};
use crate::quadrature::QuadratureSpec;
use crate::spectral::MAX_TRUNCATION;

use super::CliError;

pub const MAX_INDEX: usize = 512;
pub const CACHE_ENV: &str = "NPTORUS_CACHE";

/// Everything a subcommand needs. Built from defaults, then a key=value
/// file, then command-line overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub xi: Vec<f64>,
    pub k_max: usize,
    pub l_max: usize,
    pub l_trunc: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub jobs: usize,
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub method: RangeMethod,
    /// Fixed toroidal indices whose `l` scans the asymptotics command certifies.
    pub scan_ks: Vec<i64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = QuadratureSpec::default();
        RunConfig {
            xi: vec![0.5],
            k_max: 8,
            l_max: 8,
            l_trunc: 48,
            rel_tol: spec.rel_tol,
            abs_tol: spec.abs_tol,
            jobs: 1,
            out_dir: PathBuf::from("out"),
            cache_dir: None,
            method: RangeMethod::Spectral,
            scan_ks: vec![0, 3, 12],
        }
    }
}

/// Values given on the command line; `None` leaves the file or default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub xi: Vec<f64>,
    pub k_max: Option<usize>,
    pub l_max: Option<usize>,
    pub l_trunc: Option<usize>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub jobs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub method: Option<RangeMethod>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            if entries.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key {}", n + 1, k.trim())));
            }
        }
        let mut c = RunConfig::default();
        for (k, v) in &entries {
            match k.as_str() {
                "xi" => c.xi = parse_list(k, v)?,
                "k_max" => c.k_max = parse(k, v)?,
                "l_max" => c.l_max = parse(k, v)?,
                "L" => c.l_trunc = parse(k, v)?,
                "rel_tol" => c.rel_tol = parse(k, v)?,
                "abs_tol" => c.abs_tol = parse(k, v)?,
                "jobs" => c.jobs = parse(k, v)?,
                "out_dir" => c.out_dir = PathBuf::from(v),
                "cache_dir" => c.cache_dir = Some(PathBuf::from(v)),
                "method" => c.method = parse(k, v)?,
                "scan_ks" => c.scan_ks = parse_list(k, v)?,
                other => return Err(CliError::Config(format!("unknown key {other:?}"))),
            }
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Apply command-line values, then the cache environment variable, then validate.
    pub fn resolve(mut self, o: Overrides, env_cache: Option<PathBuf>) -> Result<Self, CliError> {
        if !o.xi.is_empty() {
            self.xi = o.xi;
        }
        self.k_max = o.k_max.unwrap_or(self.k_max);
        self.l_max = o.l_max.unwrap_or(self.l_max);
        self.l_trunc = o.l_trunc.unwrap_or(self.l_trunc);
        self.rel_tol = o.rel_tol.unwrap_or(self.rel_tol);
        self.abs_tol = o.abs_tol.unwrap_or(self.abs_tol);
        self.jobs = o.jobs.unwrap_or(self.jobs);
        self.out_dir = o.out_dir.unwrap_or(self.out_dir);
        self.cache_dir = o.cache_dir.or(self.cache_dir);
        self.method = o.method.unwrap_or(self.method);
        if let Some(dir) = env_cache {
            self.cache_dir = Some(dir);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.xi.is_empty() {
            return Err(CliError::Config("no xi given".into()));
        }
        for &xi in &self.xi {
            if !(XI_MIN..=XI_MAX).contains(&xi) {
                return Err(CliError::Config(format!("xi = {xi} outside [{XI_MIN}, {XI_MAX}]")));
            }
        }
        if self.k_max > MAX_INDEX || self.l_max > MAX_INDEX {
            return Err(CliError::Config(format!("k_max and l_max must be at most {MAX_INDEX}")));
        }
        if self.l_trunc == 0 || self.l_trunc > MAX_TRUNCATION {
            return Err(CliError::Config(format!("L must lie in 1..={MAX_TRUNCATION}")));
        }
        if self.jobs == 0 {
            return Err(CliError::Config("jobs must be positive".into()));
        }
        self.spec()?;
        Ok(())
    }

    pub fn spec(&self) -> Result<QuadratureSpec, CliError> {
        QuadratureSpec::with_tolerances(self.rel_tol, self.abs_tol).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out_dir.join("cache"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let text = "# sweep\nxi = 0.3, 0.5\nk_max=12\nL = 64\nmethod = all\n";
        let c = RunConfig::from_text(text).unwrap();
        assert_eq!(c.xi, vec![0.3, 0.5]);
        assert_eq!((c.k_max, c.l_trunc, c.method), (12, 64, RangeMethod::All));
        let o = Overrides {
            k_max: Some(4),
            xi: vec![0.7],
            ..Default::default()
        };
        let r = c.resolve(o, None).unwrap();
        assert_eq!((r.k_max, r.xi.clone(), r.l_max), (4, vec![0.7], 8));
        assert_eq!(r.cache_dir(), PathBuf::from("out/cache"));
    }

    #[test]
    fn env_cache_wins() {
        let o = Overrides {
            cache_dir: Some("a".into()),
            ..Default::default()
        };
        let r = RunConfig::default().resolve(o, Some("b".into())).unwrap();
        assert_eq!(r.cache_dir(), PathBuf::from("b"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_text("xi 0.5").is_err());
        assert!(RunConfig::from_text("colour = red").is_err());
        assert!(RunConfig::from_text("k_max = 3\nk_max = 4").is_err());
        assert!(RunConfig::from_text("method = fast").is_err());
        let bad = |o: Overrides| RunConfig::default().resolve(o, None).is_err();
        assert!(bad(Overrides { xi: vec![1.2], ..Default::default() }));
        assert!(bad(Overrides { k_max: Some(513), ..Default::default() }));
        assert!(bad(Overrides { l_trunc: Some(257), ..Default::default() }));
        assert!(bad(Overrides { jobs: Some(0), ..Default::default() }));
        assert!(bad(Overrides { rel_tol: Some(-1.0), ..Default::default() }));
    }
}
