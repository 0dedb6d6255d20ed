//! Right-hand sides of the transport family
//! `θ_t + u θ_x + δ u_x θ + ν Λ^γ θ = ε θ_xx` and the initial-data library.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_param, Error, Result};
use crate::operators::{mollify, symbols, wiener_window, VelocityKind};
use crate::spectral::{dealias_in_place, multiply_in_place, Field, Grid};

/// How the transport terms are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhsForm {
    /// `-u θ_x - δ u_x θ`
    #[default]
    Advective,
    /// `-(u θ)_x + (1 - δ) u_x θ`
    Divergence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub gamma: f64,
    pub delta: f64,
    pub nu: f64,
    pub epsilon_visc: f64,
    pub velocity: VelocityKind,
    /// Require `α = 1/2 - γ/4` for the Bessel velocity.
    pub critical_coupling: bool,
    pub form: RhsForm,
    /// Drop the transport terms, leaving the linear flow.
    pub nonlinear: bool,
}

const COUPLING_TOL: f64 = 1e-12;

impl ModelParams {
    /// Hilbert-transform velocity, `ν = 1`, no viscosity.
    pub fn model_a(gamma: f64, delta: f64) -> ModelParams {
        ModelParams {
            gamma,
            delta,
            nu: 1.0,
            epsilon_visc: 0.0,
            velocity: VelocityKind::HilbertTransform,
            critical_coupling: false,
            form: RhsForm::Advective,
            nonlinear: true,
        }
    }

    /// Bessel-potential velocity with `δ = 0`.
    pub fn model_b(gamma: f64, alpha: f64) -> ModelParams {
        ModelParams {
            velocity: VelocityKind::BesselPotential { alpha },
            delta: 0.0,
            ..ModelParams::model_a(gamma, 0.0)
        }
    }

    pub fn is_model_a(&self) -> bool {
        self.velocity == VelocityKind::HilbertTransform
    }

    pub fn validate(&self) -> Result<()> {
        check_param("gamma", self.gamma, self.gamma > 0.0 && self.gamma <= 2.0, "0 < gamma <= 2")?;
        check_param("delta", self.delta, true, "finite")?;
        check_param("nu", self.nu, self.nu >= 0.0, "nu >= 0")?;
        check_param("epsilon_visc", self.epsilon_visc, self.epsilon_visc >= 0.0, "epsilon_visc >= 0")?;
        self.velocity.validate()?;
        if self.critical_coupling {
            match self.velocity {
                VelocityKind::BesselPotential { alpha }
                    if (alpha - (0.5 - 0.25 * self.gamma)).abs() < COUPLING_TOL => {}
                VelocityKind::BesselPotential { alpha } => {
                    return Err(Error::Parameter {
                        name: "alpha",
                        value: alpha,
                        expected: "alpha = 1/2 - gamma/4 under critical coupling",
                    })
                }
                VelocityKind::HilbertTransform => {
                    return Err(Error::Config(
                        "critical coupling requires the Bessel-potential velocity".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Decay rate `ν|k|^γ + εk²` of the linear part at wavenumber `k`.
    pub fn linear_rate(&self, k: f64) -> f64 {
        self.nu * symbols::abs_pow(k, self.gamma) + self.epsilon_visc * k * k
    }
}

pub fn velocity_field(theta: &Field, v: VelocityKind) -> Field {
    crate::operators::filter(theta, |k| v.symbol(k))
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Transport terms in coefficient space, dealiased. `theta` is the nodal
/// image of `coeffs`.
pub(crate) fn nonlinear_coeffs(
    grid: &Grid,
    coeffs: &[Complex64],
    p: &ModelParams,
) -> Vec<Complex64> {
    if !p.nonlinear {
        return vec![zero(); coeffs.len()];
    }
    let vel = p.velocity;
    let theta = grid.synthesize(coeffs);
    let spectral = |sym: &dyn Fn(f64) -> Complex64| {
        let mut c = coeffs.to_vec();
        multiply_in_place(grid, &mut c, sym);
        grid.synthesize(&c)
    };
    let u = spectral(&|k| vel.symbol(k));
    let ux = spectral(&|k| symbols::derivative(k) * vel.symbol(k));
    let mut out = match p.form {
        RhsForm::Advective => {
            let tx = spectral(&symbols::derivative);
            let w: Vec<f64> = (0..theta.len())
                .map(|i| -u[i] * tx[i] - p.delta * ux[i] * theta[i])
                .collect();
            grid.analyze(&w)
        }
        RhsForm::Divergence => {
            let flux: Vec<f64> = u.iter().zip(&theta).map(|(a, b)| a * b).collect();
            let src: Vec<f64> = ux.iter().zip(&theta).map(|(a, b)| a * b).collect();
            let mut f = grid.analyze(&flux);
            dealias_in_place(grid, &mut f);
            multiply_in_place(grid, &mut f, symbols::derivative);
            let s = grid.analyze(&src);
            f.iter().zip(&s).map(|(a, b)| -a + (1.0 - p.delta) * b).collect()
        }
    };
    dealias_in_place(grid, &mut out);
    out
}

/// `-u θ_x - δ u_x θ - ν Λ^γ θ + ε θ_xx` at time `t` (used only to stamp a
/// blow-up error).
pub fn rhs(theta: &Field, p: &ModelParams, t: f64) -> Result<Field> {
    p.validate()?;
    if !theta.is_finite() {
        return Err(Error::BlowUp { time: t });
    }
    let grid = theta.grid();
    let c = grid.analyze(theta.values());
    debug_assert!(
        !p.is_model_a() || hilbert_consistency(grid, &c) < 1e-11 * (1.0 + theta.max_abs() * grid.k_max())
    );
    let mut out = nonlinear_coeffs(grid, &c, p);
    for ((o, z), &k) in out.iter_mut().zip(&c).zip(grid.wavenumbers()) {
        *o -= z * p.linear_rate(k);
    }
    let values = grid.synthesize(&out);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp { time: t });
    }
    Ok(Field::from_raw(grid.clone(), values))
}

/// `max |∂_x(Hθ) - Λθ|` with the two sides computed independently.
fn hilbert_consistency(grid: &Grid, c: &[Complex64]) -> f64 {
    let mut u = c.to_vec();
    multiply_in_place(grid, &mut u, |k| symbols::derivative(k) * symbols::hilbert(k));
    let mut l = c.to_vec();
    multiply_in_place(grid, &mut l, |k| symbols::fractional(k, 1.0));
    let (a, b) = (grid.synthesize(&u), grid.synthesize(&l));
    a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    /// `base + amplitude cos(2π m x / L)`
    PositiveBump { base: f64, amplitude: f64, mode: u32 },
    /// `height exp(-((x - center)/width)^2)`
    Gaussian { center: f64, width: f64, height: f64 },
    /// Random zero-mean polynomial over `0 < |k| <= degree`, rescaled so that
    /// its `A^0` norm is `target_a0`.
    TrigPolynomial { seed: u64, degree: f64, target_a0: f64 },
    /// `(1 + x^2)^{-eta/2}`, periodically truncated.
    SlowDecay { eta: f64 },
}

/// Additive perturbation of unit `L^2` size scaled by `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub amplitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataSpec {
    pub kind: InitialKind,
    pub mollify: Option<f64>,
    pub window: Option<f64>,
    pub perturbation: Option<Perturbation>,
}

impl InitialDataSpec {
    pub fn new(kind: InitialKind) -> InitialDataSpec {
        InitialDataSpec {
            kind,
            mollify: None,
            window: None,
            perturbation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            InitialKind::PositiveBump { base, amplitude, .. } => {
                check_param("amplitude", amplitude, true, "finite")?;
                check_param("base", base, base > amplitude.abs(), "base > |amplitude|")?;
            }
            InitialKind::Gaussian { center, width, height } => {
                check_param("center", center, true, "finite")?;
                check_param("width", width, width > 0.0, "width > 0")?;
                check_param("height", height, true, "finite")?;
            }
            InitialKind::TrigPolynomial { degree, target_a0, .. } => {
                check_param("degree", degree, degree > 0.0, "degree > 0")?;
                check_param("target_a0", target_a0, target_a0 >= 0.0, "target_a0 >= 0")?;
            }
            InitialKind::SlowDecay { eta } => check_param("eta", eta, eta > 0.0, "eta > 0")?,
        }
        if let Some(e) = self.mollify {
            check_param("mollify", e, e >= 0.0, "mollify >= 0")?;
        }
        if let Some(e) = self.window {
            check_param("window", e, e >= 0.0, "window >= 0")?;
        }
        if let Some(p) = self.perturbation {
            check_param("perturbation", p.amplitude, true, "finite")?;
        }
        Ok(())
    }
}

/// Random smooth zero-mean coefficients on `0 < |k| <= kmax`, restricted to
/// dealiased modes.
fn random_coeffs(grid: &Grid, seed: u64, kmax: f64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_points();
    let mut c = vec![zero(); n];
    // draw in mode order so the same seed gives the same field on any N
    for j in 1..(n / 2) as i64 {
        let slot = grid.slot(j).expect("interior mode");
        let k = grid.wavenumbers()[slot];
        if k > kmax {
            break;
        }
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        if !grid.is_resolved(slot) {
            continue;
        }
        let z = Complex64::new(re, im) / (1.0 + k * k);
        c[slot] = z;
        c[grid.slot(-j).expect("interior mode")] = z.conj();
    }
    c
}

pub fn make_initial_data(spec: &InitialDataSpec, grid: &Arc<Grid>) -> Result<Field> {
    spec.validate()?;
    let mut f = match spec.kind {
        InitialKind::PositiveBump { base, amplitude, mode } => {
            let k = 2.0 * PI * mode as f64 / grid.length();
            Field::from_fn(grid, |x| base + amplitude * (k * x).cos())
        }
        InitialKind::Gaussian { center, width, height } => {
            Field::from_fn(grid, |x| height * (-((x - center) / width).powi(2)).exp())
        }
        InitialKind::SlowDecay { eta } => Field::from_fn(grid, |x| (1.0 + x * x).powf(-0.5 * eta)),
        InitialKind::TrigPolynomial { seed, degree, target_a0 } => {
            let c = random_coeffs(grid, seed, degree);
            let a0: f64 = c.iter().map(|z| z.norm()).sum();
            if a0 == 0.0 {
                return Err(Error::InitialData(format!(
                    "no resolved modes with 0 < |k| <= {degree}; cannot rescale"
                )));
            }
            let scaled: Vec<Complex64> = c.iter().map(|z| z * (target_a0 / a0)).collect();
            Field::from_raw(grid.clone(), grid.synthesize(&scaled))
        }
    };
    if let Some(e) = spec.mollify {
        f = mollify(&f, e)?;
    }
    if let Some(e) = spec.window {
        f = wiener_window(&f, e)?;
    }
    if let Some(p) = spec.perturbation {
        let c = random_coeffs(grid, p.seed, grid.k_max());
        let norm = (grid.length() * c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        let bump = grid.synthesize(&c);
        let scale = p.amplitude / norm;
        f = f.zip_with(&Field::from_raw(grid.clone(), bump), |a, b| a + scale * b)?;
    }
    Ok(f)
}
