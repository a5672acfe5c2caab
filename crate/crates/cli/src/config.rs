//! Flat key=value run configuration. Unknown keys are rejected so typos
//! fail loudly before any computation.

use std::collections::BTreeMap;
use std::path::Path;

use lqgv_core::{Error, Result};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub torus: bool,
    pub flat_field: bool,
    pub t_min: Option<f64>,
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub expected_points: Option<f64>,
    pub lambdas: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub tol: f64,
    pub experiment: Option<String>,
    pub rho: f64,
    pub walks: usize,
    pub max_steps: usize,
    pub dt: Option<f64>,
    pub outline: bool,
    /// Raw text, re-serialized into the output directory.
    pub raw: String,
}

const KEYS: &[&str] = &[
    "n",
    "topology",
    "field",
    "t_min",
    "alpha",
    "lambda",
    "expected_points",
    "lambdas",
    "replicates",
    "seed",
    "tol",
    "experiment",
    "rho",
    "walks",
    "max_steps",
    "dt",
    "outline",
];

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: {v:?}")))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let raw = std::fs::read_to_string(path)?;
        Self::from_str(&raw)
    }

    pub fn from_str(raw: &str) -> Result<RunConfig> {
        let mut kv = BTreeMap::new();
        for (lineno, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key=value", lineno + 1)));
            };
            let k = k.trim();
            let v = v.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("unknown key {k:?}")));
            }
            if kv.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("duplicate key {k:?}")));
            }
        }
        let get = |k: &str| kv.get(k).map(|s| s.as_str());
        let n: usize = match get("n") {
            Some(v) => parse("n", v)?,
            None => return Err(Error::Config("missing required key n".into())),
        };
        let torus = match get("topology").unwrap_or("plane") {
            "plane" => false,
            "torus" => true,
            other => return Err(Error::Config(format!("bad topology {other:?}"))),
        };
        let flat_field = match get("field").unwrap_or("wn") {
            "wn" => false,
            "flat" => true,
            other => return Err(Error::Config(format!("bad field {other:?}"))),
        };
        let t_min = get("t_min").map(|v| parse("t_min", v)).transpose()?;
        if let Some(t) = t_min {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("t_min out of (0, 1]: {t}")));
            }
        }
        let alpha = get("alpha").map(|v| parse("alpha", v)).transpose()?.unwrap_or(0.0);
        let lambda = get("lambda").map(|v| parse("lambda", v)).transpose()?;
        let expected_points = get("expected_points")
            .map(|v| parse("expected_points", v))
            .transpose()?;
        let lambdas = match get("lambdas") {
            None => Vec::new(),
            Some(v) => v
                .split(',')
                .map(|x| parse("lambdas", x.trim()))
                .collect::<Result<Vec<f64>>>()?,
        };
        let replicates = get("replicates")
            .map(|v| parse("replicates", v))
            .transpose()?
            .unwrap_or(100);
        let seed = get("seed").map(|v| parse("seed", v)).transpose()?.unwrap_or(0);
        let tol = get("tol").map(|v| parse("tol", v)).transpose()?.unwrap_or(1e-10);
        let experiment = get("experiment").map(|s| s.to_string());
        let rho = get("rho").map(|v| parse("rho", v)).transpose()?.unwrap_or(0.25);
        let walks = get("walks").map(|v| parse("walks", v)).transpose()?.unwrap_or(0);
        let max_steps = get("max_steps")
            .map(|v| parse("max_steps", v))
            .transpose()?
            .unwrap_or(1_000_000);
        let dt = get("dt").map(|v| parse("dt", v)).transpose()?;
        let outline = get("outline")
            .map(|v| parse::<bool>("outline", v))
            .transpose()?
            .unwrap_or(false);
        if n < 8 {
            return Err(Error::Config(format!("n = {n} too small")));
        }
        if rho <= 0.0 || rho >= 0.5 {
            return Err(Error::Config(format!("rho out of (0, 0.5): {rho}")));
        }
        Ok(RunConfig {
            n,
            torus,
            flat_field,
            t_min,
            alpha,
            lambda,
            expected_points,
            lambdas,
            replicates,
            seed,
            tol,
            experiment,
            rho,
            walks,
            max_steps,
            dt,
            outline,
            raw: raw.to_string(),
        })
    }

    pub fn t_min_or_default(&self) -> f64 {
        self.t_min.unwrap_or(4.0 / (self.n - 1) as f64)
    }

    pub fn ensemble(&self) -> lqgv_core::verify::Ensemble {
        use lqgv_core::verify::Ensemble;
        let count = self.expected_points.unwrap_or(40.0);
        let mut e = if self.flat_field {
            Ensemble::flat(self.n, self.torus, count)
        } else {
            Ensemble {
                n: self.n,
                torus: self.torus,
                flat: false,
                t_min: self.t_min_or_default(),
                lambda: Ensemble::lqg_lambda(self.n, self.t_min_or_default(), count),
            }
        };
        if let Some(l) = self.lambda {
            e.lambda = l;
        }
        e
    }
}
