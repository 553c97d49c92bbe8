//! Command arguments and their validation.

use std::fmt;
use std::fs;

use clap::Args;
use talenti_core::{ConvexIntegrand, Dimension};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<talenti_core::Error> for ConfigError {
    fn from(e: talenti_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ConfigError>;

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// `linear`, `power:p`, `poly:c@e,...` or `table:<file>` (rows `s, j'(s)`).
pub fn integrand(spec: &str) -> Result<ConvexIntegrand> {
    let j = if let Some(path) = spec.strip_prefix("table:") {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("cannot read {path}: {e}")))?;
        ConvexIntegrand::tabulated(&text)?
    } else {
        ConvexIntegrand::parse(spec)?
    };
    j.validate()?;
    Ok(j)
}

pub fn dimension(n: usize) -> Result<Dimension> {
    if !(1..=8).contains(&n) {
        return Err(bad(format!("--n {n} outside 1..=8")));
    }
    Ok(Dimension::new(n)?)
}

/// Volume `m` of `B_*`, `0 < m < |B_1|`.
pub fn volume(m: f64, n: Dimension) -> Result<f64> {
    n.checked_radius(m)?;
    Ok(m)
}

fn positive_list(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(bad(format!("--{name} needs at least one value")));
    }
    if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(bad(format!("--{name} value {x} is not positive")));
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct SharpnessArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long)]
    pub m: f64,
    /// Norm exponent, a number >= 1 or `inf`.
    #[arg(long, conflicts_with = "j")]
    pub p: Option<String>,
    /// Integrand for J(E) = int j(u_E) instead of a norm.
    #[arg(long)]
    pub j: Option<String>,
    /// Comma separated asymmetries delta = |A_delta Δ B_*|.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub deltas: Vec<f64>,
}

impl SharpnessArgs {
    pub fn validate(&self) -> Result<(Dimension, f64)> {
        let n = dimension(self.n)?;
        let m = volume(self.m, n)?;
        positive_list("deltas", &self.deltas)?;
        Ok((n, m))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long)]
    pub m: f64,
    #[arg(long, default_value = "power:2")]
    pub j: String,
    /// Highest degree k.
    #[arg(long = "K", default_value_t = 8)]
    pub kmax: usize,
}

impl SpectrumArgs {
    pub fn validate(&self) -> Result<(Dimension, f64, ConvexIntegrand)> {
        let n = dimension(self.n)?;
        let m = volume(self.m, n)?;
        if !(1..=64).contains(&self.kmax) {
            return Err(bad(format!("--K {} outside 1..=64", self.kmax)));
        }
        Ok((n, m, integrand(&self.j)?))
    }
}

#[derive(Debug, Clone, Args)]
pub struct FugledeArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long)]
    pub m: f64,
    #[arg(long, default_value = "power:2", conflicts_with = "linf")]
    pub j: String,
    /// Perturb the sup norm instead of int j(u).
    #[arg(long)]
    pub linf: bool,
    /// Degrees k of the perturbations g = Y_k.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub modes: Vec<usize>,
    /// Decreasing finite-difference steps.
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.01,0.005")]
    pub steps: Vec<f64>,
    /// Amplitudes for the deficit-versus-asymmetry slope.
    #[arg(long, value_delimiter = ',', default_value = "0.08,0.04,0.02,0.01")]
    pub deficit_steps: Vec<f64>,
}

impl FugledeArgs {
    pub fn validate(&self) -> Result<(Dimension, f64, Option<ConvexIntegrand>)> {
        let n = dimension(self.n)?;
        let m = volume(self.m, n)?;
        positive_list("steps", &self.steps)?;
        positive_list("deficit-steps", &self.deficit_steps)?;
        if self.steps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("--steps must be decreasing"));
        }
        if self.modes.is_empty() || self.modes.contains(&0) {
            return Err(bad("--modes needs degrees k >= 1"));
        }
        if n.n() > 3 {
            return Err(bad("star-domain fields are available for n <= 3"));
        }
        let j = if self.linf { None } else { Some(integrand(&self.j)?) };
        Ok((n, m, j))
    }
}

#[derive(Debug, Clone, Args)]
pub struct TalentiArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Fixed dimension; by default trials cycle through n = 1, 2, 3.
    #[arg(long)]
    pub n: Option<usize>,
    /// Bathtub volume as a fraction of |B_1|.
    #[arg(long, default_value_t = 0.5)]
    pub m_frac: f64,
    /// Maximal number of pieces of the random densities.
    #[arg(long, default_value_t = 6)]
    pub pieces: usize,
}

impl TalentiArgs {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(bad("--trials must be positive"));
        }
        if let Some(n) = self.n {
            dimension(n)?;
        }
        if !(self.m_frac > 0.0 && self.m_frac < 1.0) {
            return Err(bad(format!("--m-frac {} outside (0, 1)", self.m_frac)));
        }
        if self.pieces == 0 {
            return Err(bad("--pieces must be positive"));
        }
        Ok(())
    }
}
