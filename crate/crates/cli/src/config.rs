//! Experiment configuration files (JSON, unknown keys rejected).

use crate::builtins::{self, Builtin};
use crate::error::CliError;
use serde::Deserialize;
use spsim_core::generator::{IntrinsicGenerator, TestFunction};
use spsim_core::law::{probe_grid, SwitchingLaw};
use spsim_core::switching::{Clock, JumpTimeMethod, SpConfig};
use spsim_core::{ItoLevyCoefficients, LevyTriplet};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub switching: Option<SwitchingConfig>,
    pub run: RunConfig,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Levy {
        #[serde(default)]
        drift: Option<Vec<f64>>,
        #[serde(default)]
        covariance: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        jumps: Option<Builtin>,
        #[serde(default)]
        dim: Option<usize>,
    },
    ItoLevy {
        b: Builtin,
        sigma: Builtin,
        #[serde(default)]
        a: Option<Builtin>,
        #[serde(default)]
        marks: Option<Builtin>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchingConfig {
    pub rate: Builtin,
    #[serde(default)]
    pub rate_bound: Option<f64>,
    pub kernel: Builtin,
    #[serde(default)]
    pub time_dependent: Option<bool>,
    #[serde(default)]
    pub quadrature_order: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Inversion,
    Thinning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Homogeneous,
    Inhomogeneous,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub n_paths: usize,
    pub max_step: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Spacing of the trajectory output grid; defaults to `horizon / 100`.
    #[serde(default)]
    pub output_step: Option<f64>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub s0: Option<f64>,
    #[serde(default)]
    pub max_jumps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub z: Option<f64>,
    #[serde(default)]
    pub scheme_constant: Option<f64>,
    #[serde(default)]
    pub g: Option<Builtin>,
    #[serde(default)]
    pub kolmogorov: Option<KolmogorovConfig>,
    #[serde(default)]
    pub conditional_law: Option<ConditionalLawConfig>,
    #[serde(default)]
    pub stationary: Option<StationaryConfig>,
    #[serde(default)]
    pub chapman_kolmogorov: Option<ChapmanKolmogorovConfig>,
    #[serde(default)]
    pub feynman_kac: Option<FeynmanKacConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KolmogorovConfig {
    pub t: f64,
    #[serde(default)]
    pub n_paths: Option<usize>,
    #[serde(default)]
    pub s_points: Option<usize>,
    #[serde(default)]
    pub g: Option<Builtin>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalLawConfig {
    pub t: f64,
    #[serde(default)]
    pub n_outer: Option<usize>,
    #[serde(default)]
    pub n_inner: Option<usize>,
    #[serde(default)]
    pub inner_max_step: Option<f64>,
    #[serde(default)]
    pub g: Option<Builtin>,
    /// Closed-form value of `E g(t, X_t)` to compare against as well.
    #[serde(default)]
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub t_long: f64,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub n_paths: Option<usize>,
    /// Two horizons for the paired self-consistency check.
    #[serde(default)]
    pub compare_at: Option<[f64; 2]>,
    #[serde(default)]
    pub final_segment_cap: Option<f64>,
    #[serde(default)]
    pub g: Option<Builtin>,
    /// Known value of the limit to compare against as well.
    #[serde(default)]
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChapmanKolmogorovConfig {
    pub t1: f64,
    pub t2: f64,
    #[serde(default)]
    pub n_paths: Option<usize>,
    #[serde(default)]
    pub g: Option<Builtin>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeynmanKacConfig {
    pub t: f64,
    pub x_grid: Vec<f64>,
    #[serde(default)]
    pub n_paths: Option<usize>,
    pub pide: PideConfig,
    #[serde(default)]
    pub h: Option<Builtin>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PideConfig {
    pub n_x: usize,
    pub dt: f64,
    #[serde(default)]
    pub theta: Option<f64>,
    /// Domain `[x_min, x_max]`; defaults to the x grid range plus padding.
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    #[serde(default)]
    pub padding: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn dim(&self) -> usize {
        self.run.x0.len()
    }

    pub fn verify_section(&self) -> Result<&VerifyConfig, CliError> {
        self.verify.as_ref().ok_or_else(|| CliError::Config("missing 'verify' section".into()))
    }
}

/// The intrinsic model built from a configuration.
pub enum Model {
    Levy(LevyTriplet),
    Ito(ItoLevyCoefficients),
}

impl Model {
    pub fn as_generator(&self) -> &dyn IntrinsicGenerator {
        match self {
            Model::Levy(m) => m,
            Model::Ito(m) => m,
        }
    }
}

/// Everything a command needs, validated.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: Model,
    pub law: SwitchingLaw,
    pub sp: SpConfig,
}

fn finite_positive(what: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} must be a positive number, got {v}")))
    }
}

impl Experiment {
    /// Builds and validates model, law and run settings; nothing is
    /// simulated.
    pub fn build(config: ExperimentConfig) -> Result<Self, CliError> {
        let run = &config.run;
        let dim = config.dim();
        if dim == 0 {
            return Err(CliError::Config("run.x0 must not be empty".into()));
        }
        finite_positive("run.horizon", run.horizon)?;
        finite_positive("run.max_step", run.max_step)?;
        if run.n_paths == 0 {
            return Err(CliError::Config("run.n_paths must be > 0".into()));
        }
        if let Some(s) = run.output_step {
            finite_positive("run.output_step", s)?;
        }
        let model = build_model(&config.model, dim)?;
        let time_dependent_model = matches!(model, Model::Ito(_));
        let law = build_law(config.switching.as_ref(), dim)?;
        let inhomogeneous = run.mode == Mode::Inhomogeneous;
        if law.is_time_dependent() && !inhomogeneous {
            return Err(CliError::Validation("a time-dependent switching law needs run.mode = \"inhomogeneous\"".into()));
        }
        if run.s0.is_some() && !inhomogeneous {
            return Err(CliError::Config("run.s0 is only used with run.mode = \"inhomogeneous\"".into()));
        }
        if inhomogeneous && !time_dependent_model {
            return Err(CliError::Validation("inhomogeneous mode needs an ito_levy model".into()));
        }
        let probe = probe_grid(dim, run.s0.unwrap_or(0.0) + run.horizon, law.is_time_dependent());
        let probe: Vec<(f64, Vec<f64>)> = if inhomogeneous {
            let s0 = run.s0.unwrap_or(0.0);
            probe_grid(dim, run.horizon, true).into_iter().map(|(t, x)| (s0 + t, x)).collect()
        } else {
            probe
        };
        law.validate_on_probe(&probe).map_err(CliError::validation)?;
        let mut sp = SpConfig::new(run.horizon, run.max_step).with_method(match run.method {
            Method::Inversion => JumpTimeMethod::Inversion,
            Method::Thinning => JumpTimeMethod::Thinning,
        });
        if let Some(m) = run.max_jumps {
            sp = sp.with_max_jumps(m);
        }
        if inhomogeneous {
            sp = sp.with_clock(Clock::Inhomogeneous { s0: run.s0.unwrap_or(0.0) });
        }
        Ok(Self { config, model, law, sp })
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    /// The test function of a verify subsection, falling back to `verify.g`.
    pub fn test_function(&self, own: Option<&Builtin>, horizon: f64) -> Result<TestFunction, CliError> {
        let verify = self.config.verify_section()?;
        let b = own
            .or(verify.g.as_ref())
            .ok_or_else(|| CliError::Config("no test function: set verify.g or the section's own g".into()))?;
        let g = builtins::test_function(b, self.dim())?;
        let probe: Vec<(f64, Vec<f64>)> = g.default_probe(horizon);
        g.validate(&probe).map_err(CliError::validation)?;
        Ok(g)
    }
}

fn build_model(m: &ModelConfig, dim: usize) -> Result<Model, CliError> {
    match m {
        ModelConfig::Levy { drift, covariance, jumps, dim: declared } => {
            if let Some(d) = declared {
                if *d != dim {
                    return Err(CliError::Config(format!("model.dim = {d} but run.x0 has {dim} entries")));
                }
            }
            let drift = drift.clone().unwrap_or_else(|| vec![0.0; dim]);
            let cov = covariance.clone().unwrap_or_else(|| vec![vec![0.0; dim]; dim]);
            if drift.len() != dim || cov.len() != dim || cov.iter().any(|r| r.len() != dim) {
                return Err(CliError::Config(format!("drift/covariance must match dimension {dim}")));
            }
            let jumps = match jumps {
                Some(b) => builtins::jump_measure(b)?,
                None => spsim_core::JumpMeasure::none(),
            };
            if let Some(jd) = jumps.dim() {
                if jd != dim {
                    return Err(CliError::Config(format!("jump measure is {jd}-dimensional, state is {dim}")));
                }
            }
            Ok(Model::Levy(LevyTriplet::new(drift, cov, jumps).map_err(CliError::validation)?))
        }
        ModelConfig::ItoLevy { b, sigma, a, marks } => {
            if dim != 1 {
                return Err(CliError::Config("ito_levy models are one-dimensional".into()));
            }
            let amplitude = match a {
                Some(a) => builtins::amplitude(a)?,
                None => builtins::amplitude(&Builtin::new("none", &[]))?,
            };
            let marks = match marks {
                Some(m) => builtins::jump_measure(m)?,
                None => spsim_core::JumpMeasure::none(),
            };
            Ok(Model::Ito(
                ItoLevyCoefficients::new(builtins::coefficient(b)?, builtins::coefficient(sigma)?, amplitude, marks)
                    .map_err(CliError::validation)?,
            ))
        }
    }
}

fn build_law(s: Option<&SwitchingConfig>, dim: usize) -> Result<SwitchingLaw, CliError> {
    let Some(s) = s else {
        return Ok(SwitchingLaw::none());
    };
    let spec = builtins::rate(&s.rate)?;
    if let Some(flag) = s.time_dependent {
        if flag != spec.time_dependent {
            return Err(CliError::Config(format!(
                "switching.time_dependent = {flag} contradicts rate '{}'",
                s.rate.name
            )));
        }
    }
    let kernel = builtins::kernel(&s.kernel, dim)?;
    if spec.zero {
        return Ok(SwitchingLaw::none());
    }
    let bound = s
        .rate_bound
        .ok_or_else(|| CliError::Config("switching.rate_bound is required for a non-zero rate".into()))?;
    let rate = spec.rate.clone();
    let law = if spec.time_dependent {
        SwitchingLaw::inhomogeneous(move |t, x| rate(t, x), bound, kernel)
    } else {
        SwitchingLaw::homogeneous(move |x| rate(0.0, x), bound, kernel)
    }
    .map_err(CliError::validation)?;
    Ok(match s.quadrature_order {
        Some(q) if q == 0 => return Err(CliError::Config("switching.quadrature_order must be > 0".into())),
        Some(q) => law.with_quadrature_order(q),
        None => law,
    })
}
