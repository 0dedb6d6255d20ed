//! Scenario files: one TOML table per scenario, flat keys inside.
//!
//! ```toml
//! [a1]
//! model = "A"
//! gamma = 1.0
//! delta = 1.0
//! t_final = 2.0
//! sweep_epsilon_visc = [1e-2, 5e-3]
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Deserialize;
use sqglab::models::{InitialDataSpec, InitialKind, ModelParams, Perturbation, RhsForm};
use sqglab::operators::VelocityKind;
use sqglab::timestepper::{DtPolicy, RunConfig, Scheme};
use sqglab::verification::CHECK_NAMES;
use sqglab::Grid;

pub const DEFAULT_POINTS: usize = 1024;
pub const DEFAULT_LENGTH: f64 = 32.0 * PI;
pub const DEFAULT_CFL: f64 = 0.5;

/// Scenarios available through `--scenario` without a config file.
pub const BUILTIN: &str = r#"
[a1]
model = "A"
gamma = 1.0
delta = 1.0
t_final = 2.0
initial = "bump"
checks = ["min_max", "energy", "mass_identity"]

[zero]
model = "A"
gamma = 1.0
t_final = 1.0
initial = "zero"

[blowup]
model = "A"
gamma = 1.0
delta = 0.0
nu = 0.0
t_final = 100.0
n_points = 256
initial = "gaussian"
"#;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("scenario `{scenario}`: {message}")]
    Invalid { scenario: String, message: String },
}

fn invalid(scenario: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        scenario: scenario.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
enum Model {
    A,
    B,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Form {
    Advective,
    Divergence,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SchemeName {
    Rk2,
    Rk4,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum Initial {
    Bump,
    Gaussian,
    Trig,
    SlowDecay,
    Zero,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    model: Option<Model>,
    gamma: Option<f64>,
    t_final: Option<f64>,
    delta: Option<f64>,
    alpha: Option<f64>,
    nu: Option<f64>,
    epsilon_visc: Option<f64>,
    critical_coupling: Option<bool>,
    form: Option<Form>,
    nonlinear: Option<bool>,

    n_points: Option<usize>,
    length: Option<f64>,
    dt: Option<f64>,
    cfl: Option<f64>,
    scheme: Option<SchemeName>,
    record_every: Option<usize>,
    weight_beta: Option<f64>,
    checks: Option<Vec<String>>,
    fatal_checks: Option<bool>,
    output: Option<String>,

    initial: Option<Initial>,
    base: Option<f64>,
    amplitude: Option<f64>,
    mode: Option<u32>,
    center: Option<f64>,
    width: Option<f64>,
    height: Option<f64>,
    seed: Option<u64>,
    degree: Option<f64>,
    target_a0: Option<f64>,
    eta: Option<f64>,
    mollify: Option<f64>,
    window: Option<f64>,
    perturbation: Option<f64>,

    sweep_epsilon_visc: Option<Vec<f64>>,
    sweep_n_points: Option<Vec<usize>>,
    sweep_dt: Option<Vec<f64>>,
    sweep_delta: Option<Vec<f64>>,
    sweep_gamma: Option<Vec<f64>>,
    sweep_alpha: Option<Vec<f64>>,
}

/// One fully validated run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub run: RunConfig,
    /// Checks reported in the verdict file, in order.
    pub checks: Vec<String>,
    /// Explicit output prefix from the config, if any.
    pub output: Option<String>,
}

/// Parse a scenario document. `seed` overrides every `seed` key.
pub fn parse_config(text: &str, seed: Option<u64>) -> Result<Vec<Scenario>, ConfigError> {
    let raw: BTreeMap<String, RawScenario> =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))?;
    if raw.is_empty() {
        return Err(ConfigError::Parse("config defines no scenarios".into()));
    }
    let mut out = Vec::new();
    for (name, r) in &raw {
        out.extend(expand(name, r, seed)?);
    }
    Ok(out)
}

/// Sweep lists become the cartesian product of single runs named
/// `<scenario>_<key>=<value>...`.
fn expand(name: &str, r: &RawScenario, seed: Option<u64>) -> Result<Vec<Scenario>, ConfigError> {
    let mut variants = vec![(name.to_string(), r.clone())];
    macro_rules! sweep {
        ($list:ident, $field:ident, $label:literal) => {
            if let Some(values) = &r.$list {
                if values.is_empty() {
                    return Err(invalid(name, concat!("`", stringify!($list), "` must not be empty")));
                }
                if r.$field.is_some() {
                    return Err(invalid(
                        name,
                        concat!("`", stringify!($field), "` and `", stringify!($list), "` are exclusive"),
                    ));
                }
                variants = variants
                    .into_iter()
                    .flat_map(|(n, v)| {
                        values.iter().map(move |x| {
                            let mut v = v.clone();
                            v.$field = Some(*x);
                            (format!("{n}_{}={x}", $label), v)
                        })
                    })
                    .collect();
            }
        };
    }
    sweep!(sweep_epsilon_visc, epsilon_visc, "eps");
    sweep!(sweep_n_points, n_points, "n");
    sweep!(sweep_dt, dt, "dt");
    sweep!(sweep_delta, delta, "delta");
    sweep!(sweep_gamma, gamma, "gamma");
    sweep!(sweep_alpha, alpha, "alpha");
    let multiple = variants.len() > 1;
    variants
        .into_iter()
        .map(|(n, v)| {
            let mut s = build(&n, &v, seed)?;
            if multiple {
                s.output = s.output.map(|o| format!("{o}_{}", &n[name.len() + 1..]));
            }
            Ok(s)
        })
        .collect()
}

fn build(name: &str, r: &RawScenario, seed: Option<u64>) -> Result<Scenario, ConfigError> {
    let err = |e: sqglab::Error| invalid(name, e.to_string());
    let model = r.model.ok_or_else(|| invalid(name, "missing key `model`"))?;
    let gamma = r.gamma.ok_or_else(|| invalid(name, "missing key `gamma`"))?;
    let t_final = r.t_final.ok_or_else(|| invalid(name, "missing key `t_final`"))?;

    let mut params = match model {
        Model::A => {
            if r.alpha.is_some() {
                return Err(invalid(name, "key `alpha` only applies to model B"));
            }
            ModelParams::model_a(gamma, r.delta.unwrap_or(1.0))
        }
        Model::B => {
            let alpha = r.alpha.unwrap_or(0.5 - 0.25 * gamma);
            ModelParams {
                delta: r.delta.unwrap_or(0.0),
                ..ModelParams::model_b(gamma, alpha)
            }
        }
    };
    params.nu = r.nu.unwrap_or(1.0);
    params.epsilon_visc = r.epsilon_visc.unwrap_or(0.0);
    params.critical_coupling = r.critical_coupling.unwrap_or(false);
    params.nonlinear = r.nonlinear.unwrap_or(true);
    params.form = match r.form.unwrap_or(Form::Advective) {
        Form::Advective => RhsForm::Advective,
        Form::Divergence => RhsForm::Divergence,
    };
    if params.critical_coupling && params.velocity == VelocityKind::HilbertTransform {
        return Err(invalid(name, "`critical_coupling` requires model B"));
    }
    params.validate().map_err(err)?;

    let grid = Grid::new(r.n_points.unwrap_or(DEFAULT_POINTS), r.length.unwrap_or(DEFAULT_LENGTH)).map_err(err)?;
    let dt_policy = match (r.dt, r.cfl) {
        (Some(_), Some(_)) => return Err(invalid(name, "keys `dt` and `cfl` are exclusive")),
        (Some(dt), None) => DtPolicy::Fixed(dt),
        (None, Some(c)) => DtPolicy::Cfl(c),
        (None, None) => DtPolicy::Cfl(DEFAULT_CFL),
    };
    let initial = initial_data(name, r, seed)?;

    let mut run = RunConfig::new(grid, params, initial, t_final, dt_policy);
    if let Some(k) = r.record_every {
        run.record_every = k;
    }
    if let Some(b) = r.weight_beta {
        run.weight_beta = b;
    }
    run.scheme = match r.scheme.unwrap_or(SchemeName::Rk2) {
        SchemeName::Rk2 => Scheme::IfRk2,
        SchemeName::Rk4 => Scheme::IfRk4,
    };
    let checks = r
        .checks
        .clone()
        .unwrap_or_else(|| CHECK_NAMES.iter().map(|s| s.to_string()).collect());
    run.checks = checks.clone();
    run.fatal_checks = r.fatal_checks.unwrap_or(false);
    run.validate().map_err(err)?;
    Ok(Scenario {
        name: name.to_string(),
        run,
        checks,
        output: r.output.clone(),
    })
}

fn initial_data(name: &str, r: &RawScenario, seed: Option<u64>) -> Result<InitialDataSpec, ConfigError> {
    let kind = r.initial.unwrap_or(Initial::Bump);
    let given: [(&str, bool); 10] = [
        ("base", r.base.is_some()),
        ("amplitude", r.amplitude.is_some()),
        ("mode", r.mode.is_some()),
        ("center", r.center.is_some()),
        ("width", r.width.is_some()),
        ("height", r.height.is_some()),
        ("seed", r.seed.is_some()),
        ("degree", r.degree.is_some()),
        ("target_a0", r.target_a0.is_some()),
        ("eta", r.eta.is_some()),
    ];
    let allowed: &[&str] = match kind {
        Initial::Bump => &["base", "amplitude", "mode"],
        Initial::Gaussian => &["center", "width", "height"],
        Initial::Trig => &["seed", "degree", "target_a0"],
        Initial::SlowDecay => &["eta"],
        Initial::Zero => &[],
    };
    // the seed also drives the perturbation
    let perturbed = r.perturbation.is_some();
    for (key, set) in given {
        if set && !allowed.contains(&key) && !(key == "seed" && perturbed) {
            return Err(invalid(name, format!("key `{key}` does not apply to this `initial` kind")));
        }
    }
    let seed = seed.or(r.seed).unwrap_or(0);
    let kind = match kind {
        Initial::Bump => InitialKind::PositiveBump {
            base: r.base.unwrap_or(2.0),
            amplitude: r.amplitude.unwrap_or(1.0),
            mode: r.mode.unwrap_or(1),
        },
        Initial::Gaussian => InitialKind::Gaussian {
            center: r.center.unwrap_or(0.0),
            width: r.width.unwrap_or(1.0),
            height: r.height.unwrap_or(1.0),
        },
        Initial::Trig => InitialKind::TrigPolynomial {
            seed,
            degree: r.degree.unwrap_or(4.0),
            target_a0: r.target_a0.unwrap_or(0.2),
        },
        Initial::SlowDecay => InitialKind::SlowDecay { eta: r.eta.unwrap_or(0.3) },
        Initial::Zero => InitialKind::TrigPolynomial { seed: 0, degree: 1.0, target_a0: 0.0 },
    };
    let mut spec = InitialDataSpec::new(kind);
    spec.mollify = r.mollify;
    spec.window = r.window;
    spec.perturbation = r.perturbation.map(|amplitude| Perturbation {
        amplitude,
        seed: seed.wrapping_add(1),
    });
    spec.validate().map_err(|e| invalid(name, e.to_string()))?;
    Ok(spec)
}
