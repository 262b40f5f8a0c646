//! Scenario configuration. Every field has a default so the resolved
//! configuration can be echoed into reports.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use ddenf::linsys::{design_linear, design_linear_unverified, verify_spectrum, DelayLinearOperator, SpectrumSpec};
use ddenf::polyring::{Monomial, Poly, VariableSpace, VectorPoly};
use ddenf::realizer::Sampler;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Optional frequency count; checked against `omegas` when given.
    #[serde(default)]
    pub p: Option<usize>,
    pub omegas: Vec<f64>,
    #[serde(default)]
    pub includes_zero: bool,
    pub r: f64,
}

/// Either design positions or an explicit list of `[theta, b]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum LinearConfig {
    Positions(Vec<f64>),
    Terms(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauConfig {
    Explicit(Vec<f64>),
    Keyword(String),
}

impl Default for TauConfig {
    fn default() -> Self {
        TauConfig::Keyword("scan".into())
    }
}

/// One coefficient of a vector (radial) polynomial.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialTerm {
    pub component: usize,
    pub exponents: Vec<u32>,
    pub value: f64,
}

/// One coefficient of a scalar delayed polynomial.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayedTerm {
    pub exponents: Vec<u32>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_sampler")]
    pub sampler: Sampler,
}

fn default_samples() -> usize {
    1000
}

fn default_sampler() -> Sampler {
    Sampler::Random
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { samples: default_samples(), sampler: default_sampler() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "yes")]
    pub forward_check: bool,
    #[serde(default = "yes")]
    pub oracle: bool,
    /// Parameter vectors at which the realized model is simulated.
    #[serde(default)]
    pub simulate_mu: Vec<Vec<f64>>,
    /// Relative amplitude tolerance of the simulation check.
    #[serde(default = "default_sim_tol")]
    pub simulate_rel_tol: f64,
}

fn default_sim_tol() -> f64 {
    0.1
}

fn yes() -> bool {
    true
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { forward_check: true, oracle: true, simulate_mu: vec![], simulate_rel_tol: default_sim_tol() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// One run per parameter vector; empty means a single run without parameters.
    #[serde(default)]
    pub mu: Vec<Vec<f64>>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Step; `null` selects `min(0.01, r / 100)`.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Amplitude of the cosine initial history at the first frequency.
    #[serde(default = "default_history")]
    pub history_amplitude: f64,
    #[serde(default = "default_discard")]
    pub discard_fraction: f64,
}

fn default_t_end() -> f64 {
    1000.0
}

fn default_history() -> f64 {
    0.05
}

fn default_discard() -> f64 {
    0.5
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            mu: vec![],
            t_end: default_t_end(),
            dt: None,
            history_amplitude: default_history(),
            discard_fraction: default_discard(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictConfig {
    pub tau: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    201
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub linear: Option<LinearConfig>,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub params: usize,
    #[serde(default)]
    pub target: Vec<RadialTerm>,
    #[serde(default)]
    pub pinned: BTreeMap<usize, Vec<DelayedTerm>>,
    #[serde(default)]
    pub tau: TauConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    /// Delays of an explicit model (`reduce`, `simulate`).
    #[serde(default)]
    pub delays: Vec<f64>,
    /// Explicit nonlinearity over `(v, mu)`.
    #[serde(default)]
    pub nonlinearity: Vec<DelayedTerm>,
    /// Number of delays for `dims` (defaults to `d`).
    #[serde(default)]
    pub dims_delays: Option<usize>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub restrict: Option<RestrictConfig>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_order() -> usize {
    3
}

impl ScenarioConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self =
            serde_json::from_str(&text).with_context(|| format!("config schema error in {}", path.display()))?;
        cfg.spectrum.p.get_or_insert(cfg.spectrum.omegas.len());
        Ok(cfg)
    }

    pub fn spectrum(&self) -> Result<SpectrumSpec> {
        let s = &self.spectrum;
        if let Some(p) = s.p {
            if p != s.omegas.len() {
                bail!("spectrum.p = {p} but {} frequencies given", s.omegas.len());
            }
        }
        SpectrumSpec::new(s.omegas.clone(), s.includes_zero, s.r).map_err(|e| ddenf::Error::from(e).into())
    }

    /// Designed or explicit operator, always spectrum-verified.
    pub fn operator(&self, spec: &SpectrumSpec) -> Result<DelayLinearOperator> {
        let Some(lin) = &self.linear else { bail!("config needs a `linear` section") };
        let op = match lin {
            LinearConfig::Positions(pos) => design_linear(spec, pos).map_err(ddenf::Error::from)?,
            LinearConfig::Terms(t) => {
                let op = DelayLinearOperator::new(t.iter().map(|x| (x[0], x[1])).collect()).map_err(ddenf::Error::from)?;
                verify_spectrum(&op, spec, None).map_err(ddenf::Error::from)?;
                op
            }
        };
        Ok(op)
    }

    /// Operator without the strip check, for reporting a failed design.
    pub fn operator_unverified(&self, spec: &SpectrumSpec) -> Result<DelayLinearOperator> {
        let Some(lin) = &self.linear else { bail!("config needs a `linear` section") };
        Ok(match lin {
            LinearConfig::Positions(pos) => design_linear_unverified(spec, pos).map_err(ddenf::Error::from)?,
            LinearConfig::Terms(t) => {
                DelayLinearOperator::new(t.iter().map(|x| (x[0], x[1])).collect()).map_err(ddenf::Error::from)?
            }
        })
    }

    pub fn target(&self, spec: &SpectrumSpec) -> Result<VectorPoly> {
        let rs = spec.radial_space(self.params);
        let mut v = VectorPoly::zero_field(rs);
        for t in &self.target {
            if t.component >= rs.state_dim() || t.exponents.len() != rs.nvars() {
                bail!("target term {:?} does not fit {rs}", t);
            }
            v.components[t.component].add_term(Monomial(t.exponents.clone()), Complex64::new(t.value, 0.0));
        }
        Ok(v)
    }

    pub fn delayed_poly(terms: &[DelayedTerm], space: VariableSpace) -> Result<Poly> {
        let mut p = Poly::zero(space);
        for t in terms {
            if t.exponents.len() != space.nvars() {
                bail!("term {:?} does not fit {space}", t);
            }
            p.add_term(Monomial(t.exponents.clone()), Complex64::new(t.value, 0.0));
        }
        Ok(p)
    }

    pub fn pinned(&self, space: VariableSpace) -> Result<BTreeMap<usize, Poly>> {
        self.pinned.iter().map(|(&j, t)| Ok((j, Self::delayed_poly(t, space)?))).collect()
    }
}
