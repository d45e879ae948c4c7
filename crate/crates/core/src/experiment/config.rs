//! Experiment configuration (TOML).
//!
//! Unknown keys anywhere are rejected. Every scenario-dependent value is
//! optional and falls back to the scenario's defaults.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gaussian::GaussianBelief;
use crate::iukf::SigmaStarAveraging;
use crate::linalg::min_eigenvalue;
use crate::rkhs::{DictionaryPolicy, KernelSpec, NormBounds, ObservationMoments, RkhsSettings};
use crate::scenarios::{build_linear_oracle, build_scenario, InverseStart, RkhsDefaults, Scenario, SCENARIO_NAMES};

/// Field-level configuration error.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalSpec {
    pub diag: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySpec {
    /// Multiple of the identity.
    pub identity: f64,
}

/// A matrix given as rows, `{ diag = [...] }`, or `{ identity = s }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixValue {
    Rows(Vec<Vec<f64>>),
    Diagonal(DiagonalSpec),
    Identity(IdentitySpec),
}

impl MatrixValue {
    fn to_matrix(&self, n: usize, field: &str) -> Result<DMatrix<f64>, ConfigError> {
        let m = match self {
            MatrixValue::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(ConfigError::new(field, format!("expected a {n}x{n} matrix")));
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
            MatrixValue::Diagonal(d) => {
                if d.diag.len() != n {
                    return Err(ConfigError::new(field, format!("expected {n} diagonal entries")));
                }
                DMatrix::from_diagonal(&DVector::from_column_slice(&d.diag))
            }
            MatrixValue::Identity(s) => DMatrix::identity(n, n) * s.identity,
        };
        if m.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::new(field, "entries must be finite"));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForwardKind {
    Ukf,
    RkhsUkf,
}

impl ForwardKind {
    pub fn label(self) -> &'static str {
        match self {
            ForwardKind::Ukf => "ukf",
            ForwardKind::RkhsUkf => "rkhs-ukf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InverseKind {
    /// Inverse UKF assuming a forward UKF with the scenario model.
    Iukf,
    /// Inverse RKHS-UKF learning the attacker's estimate dynamics.
    RkhsUkf,
}

impl InverseKind {
    pub fn label(self) -> &'static str {
        match self {
            InverseKind::Iukf => "iukf",
            InverseKind::RkhsUkf => "irkhs-ukf",
        }
    }
}

fn default_forward_filters() -> Vec<ForwardKind> {
    vec![ForwardKind::Ukf]
}

fn default_inverse_filters() -> Vec<InverseKind> {
    vec![InverseKind::Iukf]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardConfig {
    /// Attacker filters that are simulated as the true forward filter.
    #[serde(default = "default_forward_filters")]
    pub filters: Vec<ForwardKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            filters: default_forward_filters(),
            kappa: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseConfig {
    /// Defender filters, each run against every forward filter.
    #[serde(default = "default_inverse_filters")]
    pub filters: Vec<InverseKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_forward_kappa: Option<f64>,
    #[serde(default)]
    pub averaging: SigmaStarAveraging,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            filters: default_inverse_filters(),
            kappa_bar: None,
            assumed_forward_kappa: None,
            averaging: SigmaStarAveraging::Uniform,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_cov: Option<MatrixValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_cov: Option<MatrixValue>,
    /// Fixed inverse start; excludes `inverse_spread`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_mean: Option<Vec<f64>>,
    /// Covariance of the random offset of the inverse start from `x̂₀`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_spread: Option<MatrixValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_cov: Option<MatrixValue>,
    /// Inverse filter's initial surrogate of the attacker's covariance; defaults to `inverse_cov`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_star: Option<MatrixValue>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<MatrixValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<MatrixValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_eps: Option<MatrixValue>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RkhsFilterConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<DictionaryPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_fill: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<ObservationMoments>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_bar: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RkhsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<RkhsFilterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<RkhsFilterConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    pub n_x: usize,
    pub n_y: usize,
    pub n_a: usize,
    /// Seed of the random system matrices (independent of the noise seed).
    pub system_seed: u64,
}

fn default_state_norm() -> f64 {
    1e6
}

fn default_cov_trace() -> f64 {
    1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceConfig {
    #[serde(default = "default_state_norm")]
    pub state_norm: f64,
    #[serde(default = "default_cov_trace")]
    pub cov_trace: f64,
    /// Abort the experiment on the first divergent or failed filter step.
    #[serde(default)]
    pub strict: bool,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self {
            state_norm: default_state_norm(),
            cov_trace: default_cov_trace(),
            strict: false,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Compute RCRLB traces.
    #[serde(default = "default_true")]
    pub rcrlb: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { rcrlb: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default)]
    pub forward: ForwardConfig,
    #[serde(default)]
    pub inverse: InverseConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub rkhs: RkhsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearConfig>,
    #[serde(default)]
    pub divergence: DivergenceConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

/// Parses TOML text into a configuration (syntax and schema only).
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let span = e.span().map(|s| format!(" at byte {}", s.start)).unwrap_or_default();
        ConfigError::new("config", format!("{}{span}", e.message()))
    })
}

impl ExperimentConfig {
    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Resolves scenario defaults and checks every field.
    pub fn resolve(&self) -> Result<ExperimentPlan, ConfigError> {
        let mut scenario = match (self.scenario.as_str(), &self.linear) {
            ("linear", Some(l)) => {
                for (name, v) in [("linear.n_x", l.n_x), ("linear.n_y", l.n_y), ("linear.n_a", l.n_a)] {
                    if !(1..=crate::scenarios::MAX_LINEAR_DIM).contains(&v) {
                        return Err(ConfigError::new(name, "must lie in 1..=6"));
                    }
                }
                build_linear_oracle(l.n_x, l.n_y, l.n_a, l.system_seed).scenario
            }
            (_, Some(_)) => return Err(ConfigError::new("linear", "only valid with scenario = \"linear\"")),
            (name, None) => build_scenario(name, 0).ok_or_else(|| {
                ConfigError::new("scenario", format!("unknown scenario {name:?}; expected one of {SCENARIO_NAMES:?}"))
            })?,
        };
        let dims = scenario.model.dims;
        let n = dims.n_x;

        let horizon = self.horizon.unwrap_or(scenario.defaults.horizon);
        if horizon < 1 {
            return Err(ConfigError::new("horizon", "must be at least 1"));
        }
        let runs = self.runs.unwrap_or(scenario.defaults.runs);
        if runs < 1 {
            return Err(ConfigError::new("runs", "must be at least 1"));
        }
        if self.forward.filters.is_empty() {
            return Err(ConfigError::new("forward.filters", "must name at least one filter"));
        }
        if has_duplicates(&self.forward.filters) {
            return Err(ConfigError::new("forward.filters", "duplicate entries"));
        }
        if has_duplicates(&self.inverse.filters) {
            return Err(ConfigError::new("inverse.filters", "duplicate entries"));
        }

        let forward_kappa = self.forward.kappa.unwrap_or(scenario.defaults.forward_kappa);
        check_kappa("forward.kappa", n, forward_kappa)?;
        let kappa_bar = self.inverse.kappa_bar.unwrap_or(scenario.defaults.inverse_kappa_bar);
        check_kappa("inverse.kappa_bar", n + dims.n_y, kappa_bar)?;
        let assumed = self
            .inverse
            .assumed_forward_kappa
            .unwrap_or(scenario.defaults.assumed_forward_kappa);
        check_kappa("inverse.assumed_forward_kappa", n, assumed)?;

        // noise overrides
        if let Some(q) = &self.noise.q {
            scenario.model.noise.q = psd("noise.q", q.to_matrix(n, "noise.q")?, false)?;
        }
        if let Some(r) = &self.noise.r {
            scenario.model.noise.r = psd("noise.r", r.to_matrix(dims.n_y, "noise.r")?, true)?;
        }
        if let Some(s) = &self.noise.sigma_eps {
            scenario.model.noise.sigma_eps = psd("noise.sigma_eps", s.to_matrix(dims.n_a, "noise.sigma_eps")?, true)?;
        }

        // initial conditions
        let init = &mut scenario.defaults.initial;
        let ic = &self.initial;
        if let Some(m) = &ic.truth_mean {
            init.truth.mean = vector("initial.truth_mean", m, n)?;
        }
        if let Some(c) = &ic.truth_cov {
            init.truth.cov = psd("initial.truth_cov", c.to_matrix(n, "initial.truth_cov")?, false)?;
        }
        if let Some(m) = &ic.forward_mean {
            init.forward.mean = vector("initial.forward_mean", m, n)?;
        }
        if let Some(c) = &ic.forward_cov {
            init.forward.cov = psd("initial.forward_cov", c.to_matrix(n, "initial.forward_cov")?, false)?;
        }
        match (&ic.inverse_mean, &ic.inverse_spread) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(
                    "initial.inverse_mean",
                    "give either inverse_mean or inverse_spread, not both",
                ))
            }
            (Some(m), None) => init.inverse_mean = InverseStart::Fixed(vector("initial.inverse_mean", m, n)?),
            (None, Some(s)) => {
                init.inverse_mean = InverseStart::AroundForward(psd(
                    "initial.inverse_spread",
                    s.to_matrix(n, "initial.inverse_spread")?,
                    false,
                )?)
            }
            (None, None) => {}
        }
        if let Some(c) = &ic.inverse_cov {
            init.inverse_cov = psd("initial.inverse_cov", c.to_matrix(n, "initial.inverse_cov")?, false)?;
        }
        let sigma_star0 = match &ic.sigma_star {
            Some(m) => Some(psd("initial.sigma_star", m.to_matrix(n, "initial.sigma_star")?, false)?),
            None => None,
        };
        GaussianBelief::new(init.forward.mean.clone(), init.forward.cov.clone())
            .map_err(|e| ConfigError::new("initial.forward_cov", e.to_string()))?;

        // kernel filters
        let uses_rkhs =
            self.forward.filters.contains(&ForwardKind::RkhsUkf) || self.inverse.filters.contains(&InverseKind::RkhsUkf);
        let base = scenario.defaults.rkhs.clone().unwrap_or_else(|| RkhsDefaults {
            forward: generic_rkhs_settings(),
            inverse: generic_rkhs_settings(),
        });
        let rkhs = RkhsDefaults {
            forward: apply_rkhs("rkhs.forward", base.forward, self.rkhs.forward.as_ref(), n)?,
            inverse: apply_rkhs("rkhs.inverse", base.inverse, self.rkhs.inverse.as_ref(), n)?,
        };

        let d = &self.divergence;
        if !(d.state_norm > 0.0 && d.cov_trace > 0.0) {
            return Err(ConfigError::new("divergence", "thresholds must be positive"));
        }

        Ok(ExperimentPlan {
            config: self.clone(),
            config_hash: self.hash(),
            scenario,
            horizon,
            runs,
            seed: self.seed,
            forward_filters: self.forward.filters.clone(),
            inverse_filters: self.inverse.filters.clone(),
            forward_kappa,
            kappa_bar,
            assumed_forward_kappa: assumed,
            averaging: self.inverse.averaging,
            sigma_star0,
            rkhs: uses_rkhs.then_some(rkhs),
            divergence: d.clone(),
            rcrlb: self.metrics.rcrlb,
        })
    }
}

/// Kernel-filter settings for scenarios without published ones.
pub fn generic_rkhs_settings() -> RkhsSettings {
    RkhsSettings {
        kappa: 1.0,
        kernel: KernelSpec { sigma2: 1.0 },
        policy: DictionaryPolicy::SlidingWindow { window: 15 },
        bounds: NormBounds::default(),
        init_fill: 1.0,
        moments: ObservationMoments::default(),
    }
}

fn apply_rkhs(
    field: &str,
    mut s: RkhsSettings,
    over: Option<&RkhsFilterConfig>,
    n_x: usize,
) -> Result<RkhsSettings, ConfigError> {
    if let Some(o) = over {
        if let Some(k) = o.kappa {
            s.kappa = k;
        }
        if let Some(w) = o.sigma2 {
            s.kernel = KernelSpec::new(w).map_err(|e| ConfigError::new(format!("{field}.sigma2"), e.to_string()))?;
        }
        if let Some(p) = o.dictionary {
            s.policy = p;
        }
        if let Some(f) = o.init_fill {
            s.init_fill = f;
        }
        if let Some(m) = o.moments {
            s.moments = m;
        }
        if let Some(a) = o.a_bar {
            s.bounds.a_bar = a;
        }
        if let Some(b) = o.b_bar {
            s.bounds.b_bar = b;
        }
    }
    check_kappa(&format!("{field}.kappa"), 2 * n_x, s.kappa)?;
    match s.policy {
        DictionaryPolicy::SlidingWindow { window } if window == 0 => {
            return Err(ConfigError::new(format!("{field}.dictionary.window"), "must be at least 1"))
        }
        DictionaryPolicy::Ald { nu } if !(nu >= 0.0 && nu.is_finite()) => {
            return Err(ConfigError::new(format!("{field}.dictionary.nu"), "must be finite and nonnegative"))
        }
        _ => {}
    }
    if !(s.bounds.a_bar > 0.0 && s.bounds.b_bar > 0.0) {
        return Err(ConfigError::new(format!("{field}.a_bar"), "norm caps must be positive"));
    }
    Ok(s)
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, a)| items[..i].contains(a))
}

fn check_kappa(field: &str, n: usize, kappa: f64) -> Result<(), ConfigError> {
    if kappa.is_finite() && n as f64 + kappa > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("n + kappa must be positive (n = {n}, kappa = {kappa})")))
    }
}

fn vector(field: &str, v: &[f64], n: usize) -> Result<DVector<f64>, ConfigError> {
    if v.len() != n {
        return Err(ConfigError::new(field, format!("expected {n} entries, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ConfigError::new(field, "entries must be finite"));
    }
    Ok(DVector::from_column_slice(v))
}

fn psd(field: &str, m: DMatrix<f64>, strict: bool) -> Result<DMatrix<f64>, ConfigError> {
    if !crate::linalg::is_symmetric(&m, 1e-9) {
        return Err(ConfigError::new(field, "must be symmetric"));
    }
    let min = if m.nrows() == 0 { 0.0 } else { min_eigenvalue(&m) };
    if strict && min <= 0.0 {
        return Err(ConfigError::new(field, "must be positive definite"));
    }
    if min < -1e-9 * (1.0 + m.norm()) {
        return Err(ConfigError::new(field, "must be positive semidefinite"));
    }
    Ok(m)
}

/// A validated, fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub scenario: Scenario,
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    pub forward_filters: Vec<ForwardKind>,
    pub inverse_filters: Vec<InverseKind>,
    pub forward_kappa: f64,
    pub kappa_bar: f64,
    pub assumed_forward_kappa: f64,
    pub averaging: SigmaStarAveraging,
    /// Overrides the inverse filter's `Σ*₀`.
    pub sigma_star0: Option<DMatrix<f64>>,
    pub rkhs: Option<RkhsDefaults>,
    pub divergence: DivergenceConfig,
    pub rcrlb: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse_config_str("scenario = \"fm-demodulator\"\nseed = 1\n").unwrap();
        let p = c.resolve().unwrap();
        assert_eq!(p.runs, 500);
        assert_eq!(p.horizon, 100);
        assert_eq!(p.assumed_forward_kappa, 2.0);
        assert!(p.rkhs.is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = parse_config_str("scenario = \"lorenz\"\nseed = 1\nhorizn = 4\n").unwrap_err();
        assert!(e.message.contains("horizn"), "{e}");
        let e = parse_config_str("scenario = \"lorenz\"\nseed = 1\n[forward]\nkapa = 1\n").unwrap_err();
        assert!(e.message.contains("kapa"), "{e}");
    }

    #[test]
    fn field_level_errors() {
        let bad = |extra: &str| {
            parse_config_str(&format!("scenario = \"fm-demodulator\"\nseed = 1\n{extra}"))
                .unwrap()
                .resolve()
                .unwrap_err()
        };
        assert_eq!(bad("runs = 0").field, "runs");
        assert_eq!(bad("[forward]\nkappa = -2.0").field, "forward.kappa");
        assert_eq!(bad("[initial]\ntruth_mean = [1.0]").field, "initial.truth_mean");
        assert_eq!(bad("[noise]\nr = { diag = [1.0, 0.0] }").field, "noise.r");
        assert_eq!(bad("[initial]\ninverse_cov = [[1.0, 2.0], [0.0, 1.0]]").field, "initial.inverse_cov");
        let e = parse_config_str("scenario = \"mars\"\nseed = 1\n").unwrap().resolve().unwrap_err();
        assert_eq!(e.field, "scenario");
    }

    #[test]
    fn matrix_forms() {
        let c = parse_config_str(
            "scenario = \"fm-demodulator\"\nseed = 1\n[initial]\nforward_cov = { identity = 2.0 }\ninverse_cov = { diag = [1.0, 3.0] }\ntruth_cov = [[1.0, 0.5], [0.5, 1.0]]\n",
        )
        .unwrap();
        let p = c.resolve().unwrap();
        assert_eq!(p.scenario.defaults.initial.forward.cov, DMatrix::identity(2, 2) * 2.0);
        assert_eq!(p.scenario.defaults.initial.inverse_cov[(1, 1)], 3.0);
        assert_eq!(p.scenario.defaults.initial.truth.cov[(0, 1)], 0.5);
    }

    #[test]
    fn echo_round_trips() {
        let text = "scenario = \"lorenz\"\nseed = 9\nruns = 3\n[forward]\nfilters = [\"rkhs-ukf\", \"ukf\"]\n[inverse]\nfilters = [\"iukf\", \"rkhs-ukf\"]\n[rkhs.forward]\ndictionary = { kind = \"ald\", nu = 0.1 }\n";
        let c = parse_config_str(text).unwrap();
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(serde_json::from_value::<ExperimentConfig>(json).unwrap(), c);
        assert_eq!(parse_config_str(&toml::to_string(&c).unwrap()).unwrap(), c);
        assert_eq!(c.hash(), parse_config_str(text).unwrap().hash());
    }
}
