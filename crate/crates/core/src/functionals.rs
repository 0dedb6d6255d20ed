//! Norms, weights, identities and inequality ingredients evaluated on a
//! single field.
//!
//! Spectral norms follow the series convention of [`crate::spectral`]:
//! `||f||_{L^2}^2 = L * sum_j |c_j|^2`, `||f||_{A^0} = sum_j |c_j|` and
//! `||f||_{Ȧ^a} = sum_j |k_j|^a |c_j|`. With that normalization the Wiener
//! algebra inequality `||fg||_{A^0} <= ||f||_{A^0} ||g||_{A^0}` carries no
//! constant.

use num_complex::Complex64;

use crate::error::{check_param, Result};
use crate::littlewood::shell_index;
use crate::operators::{derivative, filter, lambda_pow, product, symbols};
use crate::spectral::{dealias_in_place, embed_coeffs, refine, Field, Grid};

/// Parameter of the weight `w(x) = (1 + x^2)^{-beta/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    beta: f64,
}

impl WeightParams {
    pub fn new(beta: f64) -> Result<WeightParams> {
        check_param("beta", beta, beta > 0.0 && beta < 1.0, "0 < beta < 1")?;
        Ok(WeightParams { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eval(&self, x: f64) -> f64 {
        (1.0 + x * x).powf(-0.5 * self.beta)
    }
}

/// Riemann-sum `L^p` norm; `p = f64::INFINITY` gives the nodal maximum.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    check_param("p", if p.is_infinite() { 1.0 } else { p }, p >= 1.0, "p >= 1")?;
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let dx = f.grid().dx();
    if p == 1.0 {
        return Ok(dx * f.values().iter().map(|v| v.abs()).sum::<f64>());
    }
    if p == 2.0 {
        return Ok((dx * f.values().iter().map(|v| v * v).sum::<f64>()).sqrt());
    }
    Ok((dx * f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p))
}

/// `L * sum_j |k_j|^{2s} |c_j|^2`.
pub(crate) fn spectral_energy(grid: &Grid, coeffs: &[Complex64], s: f64) -> f64 {
    grid.length()
        * coeffs
            .iter()
            .zip(grid.wavenumbers())
            .map(|(c, &k)| symbols::abs_pow(k, 2.0 * s) * c.norm_sqr())
            .sum::<f64>()
}

/// `sum_j |k_j|^a |c_j|`.
pub(crate) fn wiener_sum(grid: &Grid, coeffs: &[Complex64], alpha: f64) -> f64 {
    coeffs
        .iter()
        .zip(grid.wavenumbers())
        .map(|(c, &k)| symbols::abs_pow(k, alpha) * c.norm())
        .sum()
}

/// Homogeneous `Ḣ^s` seminorm `||Λ^s f||_{L^2}`.
pub fn sobolev_seminorm(f: &Field, s: f64) -> Result<f64> {
    check_param("s", s, s >= 0.0, "s >= 0")?;
    let grid = f.grid();
    Ok(spectral_energy(grid, &grid.analyze(f.values()), s).sqrt())
}

/// Discrete Wiener norm: `Ȧ^a` when `homogeneous`, `A^a = A^0 + Ȧ^a` otherwise.
/// Both coincide with `A^0` at `a = 0`.
pub fn wiener_norm(f: &Field, alpha: f64, homogeneous: bool) -> Result<f64> {
    check_param("alpha", alpha, alpha >= 0.0, "alpha >= 0")?;
    let grid = f.grid();
    let c = grid.analyze(f.values());
    let dot = wiener_sum(grid, &c, alpha);
    if homogeneous || alpha == 0.0 {
        Ok(dot)
    } else {
        Ok(wiener_sum(grid, &c, 0.0) + dot)
    }
}

pub fn weight_field(w: &WeightParams, grid: &std::sync::Arc<Grid>) -> Field {
    Field::from_fn(grid, |x| w.eval(x))
}

/// `(dx * sum f^2 w)^{1/2}`.
pub fn weighted_l2(f: &Field, weight: &Field) -> f64 {
    let dx = f.grid().dx();
    (dx * f
        .values()
        .iter()
        .zip(weight.values())
        .map(|(v, w)| v * v * w)
        .sum::<f64>())
    .sqrt()
}

/// Weighted Sobolev norm for `s` in `{0, 1/2, 1, 3/2, 2}`:
/// `(||f||^2_{L^2(w)} + ||D^s f||^2_{L^2(w)})^{1/2}`, where `D^s` is the
/// classical derivative for integer `s` and `Λ^{1/2}` composed with it for
/// half-integer `s`.
pub fn weighted_sobolev_norm(f: &Field, s: f64, w: &WeightParams) -> Result<f64> {
    let weight = weight_field(w, f.grid());
    let base = weighted_l2(f, &weight);
    let top = if s == 0.0 {
        return Ok(base);
    } else if s == 0.5 {
        lambda_pow(f, 0.5)
    } else if s == 1.0 {
        derivative(f)
    } else if s == 1.5 {
        lambda_pow(&derivative(f), 0.5)
    } else if s == 2.0 {
        derivative(&derivative(f))
    } else {
        return Err(crate::Error::Parameter {
            name: "s",
            value: s,
            expected: "one of 0, 0.5, 1, 1.5, 2",
        });
    };
    Ok((base * base + weighted_l2(&top, &weight).powi(2)).sqrt())
}

/// `max |H(f_x H f_x) - ((Λf)^2 - f_x^2)/2|` with dealiased products.
pub fn hilbert_identity_residual(f: &Field) -> f64 {
    let grid = f.grid();
    let fx = derivative(f);
    let hfx = filter(&fx, symbols::hilbert);
    let lam = lambda_pow(f, 1.0);
    let left = filter(&product(&fx, &hfx).expect("same grid"), symbols::hilbert);
    let right_raw: Vec<f64> = lam
        .values()
        .iter()
        .zip(fx.values())
        .map(|(l, d)| 0.5 * (l * l - d * d))
        .collect();
    let mut c = grid.analyze(&right_raw);
    dealias_in_place(grid, &mut c);
    let right = grid.synthesize(&c);
    left.values()
        .iter()
        .zip(&right)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

const DENSE_FACTOR: usize = 4;

/// `min_x [f Λ^a f - Λ^a(f^2)/2]` evaluated on a 4x refined grid where both
/// sides are exact values of the underlying trigonometric polynomials.
pub fn cordoba_gap(f: &Field, alpha: f64) -> Result<f64> {
    check_param("alpha", alpha, alpha > 0.0 && alpha <= 2.0, "0 < alpha <= 2")?;
    let fine = refine(f, DENSE_FACTOR)?;
    let lf = lambda_pow(&fine, alpha);
    let sq = fine.map(|v| v * v);
    let lsq = lambda_pow(&sq, alpha);
    Ok(fine
        .values()
        .iter()
        .zip(lf.values())
        .zip(lsq.values())
        .map(|((v, l), q)| v * l - 0.5 * q)
        .fold(f64::INFINITY, f64::min))
}

/// `min_x [f^2 Λf - Λ(f^3)/3]` on the 4x refined grid (meaningful for `f >= 0`).
pub fn cordoba_cubic_gap(f: &Field) -> Result<f64> {
    let fine = refine(f, DENSE_FACTOR)?;
    let lf = lambda_pow(&fine, 1.0);
    let cube = fine.map(|v| v * v * v);
    let lcube = lambda_pow(&cube, 1.0);
    Ok(fine
        .values()
        .iter()
        .zip(lf.values())
        .zip(lcube.values())
        .map(|((v, l), q)| v * v * l - q / 3.0)
        .fold(f64::INFINITY, f64::min))
}

/// `[Λ^{1/2}, ψ] f = Λ^{1/2}(ψ f) - ψ Λ^{1/2} f`, products dealiased.
pub fn commutator_half(psi: &Field, f: &Field) -> Result<Field> {
    let first = lambda_pow(&product(psi, f)?, 0.5);
    let second = product(psi, &lambda_pow(f, 0.5))?;
    first.sub(&second)
}

/// Sharp dyadic `(sum_j 2^{2js} ||Δ_j f||^2)^{1/2}` over all shells.
pub fn littlewood_paley_seminorm(f: &Field, s: f64) -> Result<f64> {
    check_param("s", s, s.abs() < 2.0, "|s| < 2")?;
    let grid = f.grid();
    let c = grid.analyze(f.values());
    let sum: f64 = c
        .iter()
        .zip(grid.wavenumbers())
        .filter_map(|(z, &k)| shell_index(k).map(|j| 2f64.powf(2.0 * s * j as f64) * z.norm_sqr()))
        .sum();
    Ok((grid.length() * sum).sqrt())
}

/// Minimum and maximum of the trigonometric polynomial represented by `f`.
///
/// Candidates come from a 4x refined grid and are polished by Newton's
/// method on the derivative, so the result tracks the continuous extrema
/// rather than the nodal ones.
pub fn extrema(f: &Field) -> (f64, f64) {
    let grid = f.grid();
    let coeffs = grid.analyze(f.values());
    if coeffs.iter().skip(1).all(|c| c.norm() == 0.0) {
        let c0 = coeffs[0].re;
        return (c0, c0);
    }
    let poly = TrigPoly::new(grid, &coeffs);
    let fine_grid = match Grid::new(grid.n_points() * DENSE_FACTOR, grid.length()) {
        Ok(g) => g,
        Err(_) => return (f.min(), f.max()),
    };
    let fine = fine_grid.synthesize(&embed_coeffs(grid, &coeffs, &fine_grid));
    let h = fine_grid.dx();
    let nodes = fine_grid.nodes();

    let polish = |sign: f64| -> f64 {
        let n = fine.len();
        let mut cands: Vec<usize> = (0..n)
            .filter(|&i| {
                let v = sign * fine[i];
                v >= sign * fine[(i + n - 1) % n] && v >= sign * fine[(i + 1) % n]
            })
            .collect();
        cands.sort_by(|&a, &b| (sign * fine[b]).total_cmp(&(sign * fine[a])));
        cands.truncate(3);
        let mut best = cands.iter().map(|&i| sign * fine[i]).fold(f64::NEG_INFINITY, f64::max);
        for &i in &cands {
            let mut x = nodes[i];
            for _ in 0..30 {
                let (_, d1, d2) = poly.eval(x);
                if d2 == 0.0 {
                    break;
                }
                let step = (d1 / d2).clamp(-h, h);
                x -= step;
                if step.abs() < 1e-15 * (1.0 + x.abs()) {
                    break;
                }
            }
            best = best.max(sign * poly.eval(x).0);
        }
        sign * best
    };
    (polish(-1.0), polish(1.0))
}

/// Evaluates a real trigonometric polynomial and its first two derivatives.
struct TrigPoly {
    k0: f64,
    /// (mode, coefficient); the Nyquist entry stands for a cosine term
    terms: Vec<(i64, Complex64)>,
    nyquist: Option<(f64, f64)>,
}

impl TrigPoly {
    fn new(grid: &Grid, coeffs: &[Complex64]) -> TrigPoly {
        let nyq = grid.nyquist_slot();
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|&(slot, c)| slot != nyq && grid.mode(slot) >= 0 && c.norm() > 0.0)
            .map(|(slot, &c)| (grid.mode(slot), c))
            .collect();
        TrigPoly {
            k0: 2.0 * std::f64::consts::PI / grid.length(),
            terms,
            nyquist: Some((grid.wavenumbers()[nyq], coeffs[nyq].re)).filter(|t| t.1 != 0.0),
        }
    }

    /// `(p, p', p'')` at `x`; positive modes are doubled to account for
    /// their conjugate partners.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let base = Complex64::from_polar(1.0, self.k0 * x);
        let mut p = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        let mut z = Complex64::new(1.0, 0.0);
        let mut last = 0;
        for &(j, c) in &self.terms {
            while last < j {
                z *= base;
                last += 1;
            }
            // exact phase refresh every 64 modes keeps rounding in check
            if j % 64 == 0 {
                z = Complex64::from_polar(1.0, self.k0 * j as f64 * x);
            }
            let k = self.k0 * j as f64;
            let v = c * z;
            let w = if j == 0 { 1.0 } else { 2.0 };
            p += w * v.re;
            d1 += w * (-k * v.im);
            d2 += w * (-k * k * v.re);
        }
        if let Some((k, a)) = self.nyquist {
            p += a * (k * x).cos();
            d1 -= a * k * (k * x).sin();
            d2 -= a * k * k * (k * x).cos();
        }
        (p, d1, d2)
    }
}

/// Per-record snapshot of the tracked norms and running integrals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub min_val: f64,
    pub max_val: f64,
    /// `∫θ`
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// `||Λ^{1/2}θ||`
    pub sobolev_half: f64,
    /// `||θ_x||`
    pub sobolev_one: f64,
    /// `||Λ^{γ/2}θ||`
    pub lambda_gamma_half: f64,
    /// `||u_x||`
    pub ux_l2: f64,
    /// `∫ (ν||Λ^{(γ+1)/2}θ||² + ε||Λ^{1/2}θ_x||²) ds`
    pub sobolev_dissipation_running: f64,
    /// `∫ (ν||Λ^{γ/2}θ||² + ε||θ_x||²) ds`
    pub l2_dissipation_running: f64,
    /// `∫ ||Λ^{1/2}θ||² ds`
    pub half_dissipation_running: f64,
    pub a0: f64,
    pub a1_dot: f64,
    pub a1: f64,
    /// `∫ ||θ_x||_{A^1} ds`
    pub a1_dissipation_running: f64,
    pub w_l2: f64,
    pub w_h_half: f64,
    pub w_h1: f64,
    pub hilbert_identity_residual: f64,
    pub cordoba_min_gap: f64,
}

impl DiagnosticsRecord {
    /// Column order of the series CSV.
    pub const COLUMNS: [&'static str; 23] = [
        "t",
        "min_val",
        "max_val",
        "mass",
        "l1",
        "l2",
        "linf",
        "sobolev_half",
        "sobolev_one",
        "lambda_gamma_half",
        "ux_l2",
        "sobolev_dissipation_running",
        "l2_dissipation_running",
        "half_dissipation_running",
        "a0",
        "a1_dot",
        "a1",
        "a1_dissipation_running",
        "w_l2",
        "w_h_half",
        "w_h1",
        "hilbert_identity_residual",
        "cordoba_min_gap",
    ];

    pub fn to_row(&self) -> [f64; 23] {
        [
            self.t,
            self.min_val,
            self.max_val,
            self.mass,
            self.l1,
            self.l2,
            self.linf,
            self.sobolev_half,
            self.sobolev_one,
            self.lambda_gamma_half,
            self.ux_l2,
            self.sobolev_dissipation_running,
            self.l2_dissipation_running,
            self.half_dissipation_running,
            self.a0,
            self.a1_dot,
            self.a1,
            self.a1_dissipation_running,
            self.w_l2,
            self.w_h_half,
            self.w_h1,
            self.hilbert_identity_residual,
            self.cordoba_min_gap,
        ]
    }

    pub fn from_row(r: &[f64; 23]) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t: r[0],
            min_val: r[1],
            max_val: r[2],
            mass: r[3],
            l1: r[4],
            l2: r[5],
            linf: r[6],
            sobolev_half: r[7],
            sobolev_one: r[8],
            lambda_gamma_half: r[9],
            ux_l2: r[10],
            sobolev_dissipation_running: r[11],
            l2_dissipation_running: r[12],
            half_dissipation_running: r[13],
            a0: r[14],
            a1_dot: r[15],
            a1: r[16],
            a1_dissipation_running: r[17],
            w_l2: r[18],
            w_h_half: r[19],
            w_h1: r[20],
            hilbert_identity_residual: r[21],
            cordoba_min_gap: r[22],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_row().iter().all(|v| v.is_finite())
    }
}

/// Running dissipation integrals carried between records.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningIntegrals {
    pub l2_dissipation: f64,
    pub sobolev_dissipation: f64,
    pub half_dissipation: f64,
    pub a1_dissipation: f64,
}

/// Integrands of [`RunningIntegrals`] at one instant, from spectral data.
pub(crate) fn dissipation_rates(
    grid: &Grid,
    coeffs: &[Complex64],
    params: &crate::models::ModelParams,
) -> RunningIntegrals {
    combine_rates(params, |s| spectral_energy(grid, coeffs, s), |a| wiener_sum(grid, coeffs, a))
}

/// Time derivatives of the [`dissipation_rates`] along `d/dt c = cdot`.
pub(crate) fn dissipation_rate_derivatives(
    grid: &Grid,
    coeffs: &[Complex64],
    cdot: &[Complex64],
    params: &crate::models::ModelParams,
) -> RunningIntegrals {
    let inner = |w: &dyn Fn(f64, &Complex64) -> f64| -> f64 {
        coeffs
            .iter()
            .zip(cdot)
            .zip(grid.wavenumbers())
            .map(|((c, d), &k)| w(k, c) * (c.conj() * d).re)
            .sum()
    };
    combine_rates(
        params,
        |s| 2.0 * grid.length() * inner(&|k, _| symbols::abs_pow(k, 2.0 * s)),
        |a| {
            inner(&|k, c| {
                let m = c.norm();
                if m > 0.0 {
                    symbols::abs_pow(k, a) / m
                } else {
                    0.0
                }
            })
        },
    )
}

fn combine_rates(
    params: &crate::models::ModelParams,
    energy: impl Fn(f64) -> f64,
    wiener: impl Fn(f64) -> f64,
) -> RunningIntegrals {
    let g = params.gamma;
    let (nu, eps) = (params.nu, params.epsilon_visc);
    RunningIntegrals {
        l2_dissipation: nu * energy(0.5 * g) + eps * energy(1.0),
        sobolev_dissipation: nu * energy(0.5 * (g + 1.0)) + eps * energy(1.5),
        half_dissipation: energy(0.5),
        a1_dissipation: wiener(1.0) + wiener(2.0),
    }
}

/// Evaluate every tracked quantity of `theta` at time `t`.
pub fn compute_record(
    theta: &Field,
    params: &crate::models::ModelParams,
    weight: &WeightParams,
    t: f64,
    running: &RunningIntegrals,
) -> DiagnosticsRecord {
    let grid = theta.grid();
    let c = grid.analyze(theta.values());
    let (min_val, max_val) = extrema(theta);
    let w = weight_field(weight, grid);
    let w_l2 = weighted_l2(theta, &w);
    let half = lambda_pow(theta, 0.5);
    let dx = derivative(theta);
    let vel = params.velocity;
    let ux_energy = grid.length()
        * c.iter()
            .zip(grid.wavenumbers())
            .map(|(z, &k)| (k * vel.symbol(k).norm()).powi(2) * z.norm_sqr())
            .sum::<f64>();
    let a0 = wiener_sum(grid, &c, 0.0);
    let a1_dot = wiener_sum(grid, &c, 1.0);
    DiagnosticsRecord {
        t,
        min_val,
        max_val,
        mass: grid.length() * c[0].re,
        l1: lp_norm(theta, 1.0).unwrap_or(f64::NAN),
        l2: spectral_energy(grid, &c, 0.0).sqrt(),
        linf: min_val.abs().max(max_val.abs()),
        sobolev_half: spectral_energy(grid, &c, 0.5).sqrt(),
        sobolev_one: spectral_energy(grid, &c, 1.0).sqrt(),
        lambda_gamma_half: spectral_energy(grid, &c, 0.5 * params.gamma).sqrt(),
        ux_l2: ux_energy.sqrt(),
        sobolev_dissipation_running: running.sobolev_dissipation,
        l2_dissipation_running: running.l2_dissipation,
        half_dissipation_running: running.half_dissipation,
        a0,
        a1_dot,
        a1: a0 + a1_dot,
        a1_dissipation_running: running.a1_dissipation,
        w_l2,
        w_h_half: (w_l2 * w_l2 + weighted_l2(&half, &w).powi(2)).sqrt(),
        w_h1: (w_l2 * w_l2 + weighted_l2(&dx, &w).powi(2)).sqrt(),
        hilbert_identity_residual: hilbert_identity_residual(theta),
        cordoba_min_gap: cordoba_gap(theta, params.gamma).unwrap_or(f64::NAN),
    }
}
