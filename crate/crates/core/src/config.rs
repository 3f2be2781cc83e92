//! Declarative run configuration (TOML).
//!
//! Complex numbers appear everywhere as `[re, im]` pairs; matrices are flat
//! row-major lists of pairs with the dimension declared separately. The seed
//! is mandatory: no run draws ambient randomness.

use serde::{Deserialize, Serialize};

use crate::error::{LckError, Result};
use crate::linalg::{c, CMatrix, HermitianForm};
use crate::shell::ShellSpec;
use crate::tol::ToleranceProfile;

pub const STANDARD_CHECKS: &[&str] = &[
    "psh",
    "automorphy",
    "power_identity",
    "dtheta",
    "lck_identity",
    "pullback",
    "vaisman",
];

/// Checks that only run behind `slow = true`.
pub const SLOW_CHECKS: &[&str] = &["lee_parallel"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellType {
    Sphere,
    Ellipsoid,
    /// Sphere when admissible, Lyapunov ellipsoid fallback otherwise.
    Lyapunov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellConfig {
    #[serde(rename = "type")]
    pub shell_type: ShellType,
    /// Ellipsoid matrix, row-major [re, im] pairs (ellipsoid type only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaConfig {
    Fixed(f64),
    Keyword(String),
}

impl LambdaConfig {
    pub fn is_auto(&self) -> bool {
        matches!(self, LambdaConfig::Keyword(k) if k == "auto")
    }

    pub fn as_str(&self) -> String {
        match self {
            LambdaConfig::Fixed(v) => format!("{v}"),
            LambdaConfig::Keyword(k) => k.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub count: usize,
    pub t_range: [f64; 2],
    pub seed: u64,
}

fn default_lambda_bracket() -> [f64; 2] {
    [0.25, 48.0]
}

fn default_checks() -> Vec<String> {
    STANDARD_CHECKS.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    /// Row-major n*n complex entries as [re, im] pairs.
    pub matrix: Vec<[f64; 2]>,
    pub shell: ShellConfig,
    pub lambda: LambdaConfig,
    pub sampling: SamplingConfig,
    /// Bisection bracket used when lambda = "auto".
    #[serde(default = "default_lambda_bracket")]
    pub lambda_bracket: [f64; 2],
    #[serde(default)]
    pub tolerances: ToleranceProfile,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    #[serde(default)]
    pub slow: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| LckError::InvalidConfig(format!("TOML parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=8).contains(&self.n) {
            return Err(LckError::InvalidConfig(format!(
                "n must lie in [2, 8], got {}",
                self.n
            )));
        }
        if self.matrix.len() != self.n * self.n {
            return Err(LckError::InvalidConfig(format!(
                "matrix must have n^2 = {} entries, got {}",
                self.n * self.n,
                self.matrix.len()
            )));
        }
        if !(1..=1_000_000).contains(&self.sampling.count) {
            return Err(LckError::InvalidConfig(format!(
                "sampling.count must lie in [1, 10^6], got {}",
                self.sampling.count
            )));
        }
        let [t_min, t_max] = self.sampling.t_range;
        if !t_min.is_finite() || !t_max.is_finite() || t_min > t_max {
            return Err(LckError::InvalidConfig(format!(
                "invalid t_range [{t_min}, {t_max}]"
            )));
        }
        match &self.lambda {
            LambdaConfig::Fixed(v) if !(*v > 0.0) || !v.is_finite() => {
                return Err(LckError::InvalidConfig(format!(
                    "lambda must be positive, got {v}"
                )));
            }
            LambdaConfig::Keyword(k) if k != "auto" => {
                return Err(LckError::InvalidConfig(format!(
                    "lambda must be a positive number or \"auto\", got {k:?}"
                )));
            }
            _ => {}
        }
        let [lo, hi] = self.lambda_bracket;
        if !(lo > 0.0) || !(hi > lo) {
            return Err(LckError::InvalidConfig(format!(
                "invalid lambda_bracket [{lo}, {hi}]"
            )));
        }
        match self.shell.shell_type {
            ShellType::Ellipsoid => match &self.shell.p {
                None => {
                    return Err(LckError::InvalidConfig(
                        "shell.type = \"ellipsoid\" requires shell.p".into(),
                    ));
                }
                Some(p) if p.len() != self.n * self.n => {
                    return Err(LckError::InvalidConfig(format!(
                        "shell.p must have n^2 = {} entries, got {}",
                        self.n * self.n,
                        p.len()
                    )));
                }
                _ => {}
            },
            _ => {
                if self.shell.p.is_some() {
                    return Err(LckError::InvalidConfig(
                        "shell.p is only valid with shell.type = \"ellipsoid\"".into(),
                    ));
                }
            }
        }
        let known: Vec<&str> = STANDARD_CHECKS.iter().chain(SLOW_CHECKS).copied().collect();
        for name in &self.checks {
            if !known.contains(&name.as_str()) {
                return Err(LckError::InvalidConfig(format!(
                    "unknown check {name:?}; known checks: {known:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn matrix_a(&self) -> CMatrix {
        pairs_to_matrix(self.n, &self.matrix)
    }

    /// The configured shell, for sphere and ellipsoid types. The lyapunov
    /// type is resolved by the pipeline, which needs the flow.
    pub fn explicit_shell(&self, tol: &ToleranceProfile) -> Result<Option<ShellSpec>> {
        match self.shell.shell_type {
            ShellType::Sphere => Ok(Some(ShellSpec::sphere(self.n))),
            ShellType::Ellipsoid => {
                let p = self.shell.p.as_ref().expect("validated");
                let form = HermitianForm::new(pairs_to_matrix(self.n, p), tol)?;
                Ok(Some(ShellSpec::ellipsoid(form)?))
            }
            ShellType::Lyapunov => Ok(None),
        }
    }
}

pub fn pairs_to_matrix(n: usize, pairs: &[[f64; 2]]) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        let [re, im] = pairs[i * n + j];
        c(re, im)
    })
}

pub fn matrix_to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}
