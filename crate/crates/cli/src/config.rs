//! Spec and experiment configuration: presets named on the command line or
//! key/value records in a TOML file, with flags taking precedence.

use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::One;

use assemblies::backend::Backend;
use assemblies::{AssemblySpec, Rat};

/// A configuration error destined for exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type CResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

/// Parse "p/q", "p", or a TOML-style float (converted exactly from its
/// binary representation).
pub fn parse_rational(s: &str) -> CResult<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("bad rational numerator in {s:?}")))?;
        let q: i64 = q
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("bad rational denominator in {s:?}")))?;
        if q == 0 {
            return err(format!("zero denominator in {s:?}"));
        }
        return Ok(Rat::new(BigInt::from(p), BigInt::from(q)));
    }
    if let Ok(p) = s.parse::<i64>() {
        return Ok(Rat::from_integer(BigInt::from(p)));
    }
    if let Ok(f) = s.parse::<f64>() {
        if let Some(r) = Rat::from_float(f) {
            return Ok(r);
        }
    }
    err(format!("cannot parse rational {s:?}"))
}

fn value_to_rational(v: &toml::Value, key: &str) -> CResult<Rat> {
    match v {
        toml::Value::Integer(i) => Ok(Rat::from_integer(BigInt::from(*i))),
        toml::Value::Float(f) => Rat::from_float(*f)
            .ok_or_else(|| ConfigError(format!("non-finite float for key {key}"))),
        toml::Value::String(s) => parse_rational(s),
        _ => err(format!("key {key} must be a number or a \"p/q\" string")),
    }
}

/// Raw configuration collected from a file; every field optional so flags
/// can fill the gaps.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    pub spec: Option<String>,
    pub theta: Option<Rat>,
    pub u: Option<Rat>,
    pub n: Option<usize>,
    pub n_max: Option<usize>,
    pub seed: Option<u64>,
    pub backend: Option<Backend>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub m_table: Option<Vec<BigInt>>,
    pub w_table: Option<Vec<Rat>>,
}

/// Loads a key/value config. Unknown keys, duplicate keys (rejected by the
/// TOML parser with a line-anchored message) and malformed values all fail.
pub fn load_config(path: &Path) -> CResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let mut cfg = FileConfig::default();
    for (key, value) in &table {
        match key.as_str() {
            "spec" => {
                cfg.spec = Some(
                    value
                        .as_str()
                        .ok_or_else(|| ConfigError("spec must be a string".into()))?
                        .to_string(),
                )
            }
            "theta" => cfg.theta = Some(value_to_rational(value, key)?),
            "u" => cfg.u = Some(value_to_rational(value, key)?),
            "n" => cfg.n = Some(read_usize(value, key)?),
            "n_max" => cfg.n_max = Some(read_usize(value, key)?),
            "seed" => {
                cfg.seed = Some(
                    value
                        .as_integer()
                        .and_then(|v| u64::try_from(v).ok())
                        .ok_or_else(|| ConfigError("seed must be a nonnegative integer".into()))?,
                )
            }
            "backend" => {
                cfg.backend = Some(parse_backend(
                    value
                        .as_str()
                        .ok_or_else(|| ConfigError("backend must be a string".into()))?,
                )?)
            }
            "out" => cfg.out = Some(PathBuf::from(read_str(value, key)?)),
            "svg" => cfg.svg = Some(PathBuf::from(read_str(value, key)?)),
            "m" => {
                let arr = value
                    .as_array()
                    .ok_or_else(|| ConfigError("m must be an array of integers".into()))?;
                let mut m = Vec::with_capacity(arr.len());
                for v in arr {
                    let i = v
                        .as_integer()
                        .ok_or_else(|| ConfigError("m entries must be integers".into()))?;
                    m.push(BigInt::from(i));
                }
                cfg.m_table = Some(m);
            }
            "w" => {
                let arr = value
                    .as_array()
                    .ok_or_else(|| ConfigError("w must be an array".into()))?;
                let mut w = Vec::with_capacity(arr.len());
                for v in arr {
                    w.push(value_to_rational(v, "w")?);
                }
                cfg.w_table = Some(w);
            }
            other => return err(format!("unknown config key {other:?}")),
        }
    }
    Ok(cfg)
}

fn read_usize(v: &toml::Value, key: &str) -> CResult<usize> {
    v.as_integer()
        .and_then(|i| usize::try_from(i).ok())
        .filter(|&i| i > 0)
        .ok_or_else(|| ConfigError(format!("{key} must be a positive integer")))
}

fn read_str(v: &toml::Value, key: &str) -> CResult<String> {
    Ok(v.as_str()
        .ok_or_else(|| ConfigError(format!("{key} must be a string")))?
        .to_string())
}

pub fn parse_backend(s: &str) -> CResult<Backend> {
    match s {
        "exact" => Ok(Backend::Exact),
        "float" => Ok(Backend::Float),
        other => err(format!("backend must be exact or float, got {other:?}")),
    }
}

/// Builds the assembly family for a given capacity. `spec` accepts
/// permutations | set-partitions | ewens (theta from its own field) |
/// ewens:<rational> | explicit (tables required).
pub fn build_spec(
    name: &str,
    theta: Option<&Rat>,
    u: Option<&Rat>,
    m_table: Option<&[BigInt]>,
    w_table: Option<&[Rat]>,
    n_cap: usize,
) -> CResult<AssemblySpec> {
    let (base, inline) = match name.split_once(':') {
        Some((b, p)) => (b, Some(p)),
        None => (name, None),
    };
    let spec = match base {
        "permutations" => AssemblySpec::permutations(n_cap),
        "set-partitions" => AssemblySpec::set_partitions(n_cap),
        "ewens" => {
            let theta = match (inline, theta) {
                (Some(p), _) => parse_rational(p)?,
                (None, Some(t)) => t.clone(),
                (None, None) => return err("ewens needs a theta (use --theta or ewens:<theta>)"),
            };
            AssemblySpec::ewens(theta, n_cap).map_err(|e| ConfigError(e.to_string()))?
        }
        "explicit" => {
            let m = m_table.ok_or_else(|| ConfigError("explicit spec needs an m table".into()))?;
            let w = w_table.ok_or_else(|| ConfigError("explicit spec needs a w table".into()))?;
            let n_max = m.len().min(w.len());
            if n_max < n_cap {
                return err(format!(
                    "explicit tables cover sizes up to {n_max}, but n = {n_cap} requested"
                ));
            }
            AssemblySpec::explicit(
                "explicit",
                m.to_vec(),
                w.to_vec(),
                u.cloned().unwrap_or_else(Rat::one),
                n_max,
            )
            .map_err(|e| ConfigError(e.to_string()))?
        }
        other => return err(format!("unknown spec preset {other:?}")),
    };
    match u {
        Some(scale) if base != "explicit" => spec
            .with_scale(scale.clone())
            .map_err(|e| ConfigError(e.to_string())),
        _ => Ok(spec),
    }
}
