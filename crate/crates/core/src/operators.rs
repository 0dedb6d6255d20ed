//! Nonlocal operators as Fourier multipliers, the smoothing maps used to
//! regularize data, and a quadrature oracle for the critical operator Λ.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_param, Result};
use crate::spectral::{dealias_in_place, multiply_in_place, Field};

/// Law relating the velocity `u` to the transported scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityKind {
    /// `u = H(theta)`.
    HilbertTransform,
    /// `u = (1 - d_xx)^{-alpha} theta`.
    BesselPotential { alpha: f64 },
}

impl VelocityKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VelocityKind::HilbertTransform => Ok(()),
            VelocityKind::BesselPotential { alpha } => {
                check_param("alpha", alpha, alpha >= 0.0, "alpha >= 0")
            }
        }
    }

    pub fn symbol(&self, k: f64) -> Complex64 {
        match *self {
            VelocityKind::HilbertTransform => symbols::hilbert(k),
            VelocityKind::BesselPotential { alpha } => symbols::bessel(k, alpha),
        }
    }
}

/// Fourier symbols of the operators in this module.
pub mod symbols {
    use num_complex::Complex64;

    pub fn hilbert(k: f64) -> Complex64 {
        if k > 0.0 {
            Complex64::new(0.0, -1.0)
        } else if k < 0.0 {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn derivative(k: f64) -> Complex64 {
        Complex64::new(0.0, k)
    }

    /// `|k|^gamma`, with `0^gamma = 0` for every `gamma > 0`.
    pub fn fractional(k: f64, gamma: f64) -> Complex64 {
        Complex64::new(abs_pow(k, gamma), 0.0)
    }

    pub fn bessel(k: f64, alpha: f64) -> Complex64 {
        Complex64::new((1.0 + k * k).powf(-alpha), 0.0)
    }

    pub fn heat(k: f64, tau: f64) -> Complex64 {
        Complex64::new((-tau * k * k).exp(), 0.0)
    }

    pub fn abs_pow(k: f64, s: f64) -> f64 {
        if k == 0.0 {
            if s == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            k.abs().powf(s)
        }
    }
}

/// Apply a Hermitian symbol to a real field.
pub fn filter(f: &Field, symbol: impl Fn(f64) -> Complex64) -> Field {
    let grid = f.grid();
    let mut c = grid.analyze(f.values());
    multiply_in_place(grid, &mut c, symbol);
    Field::from_raw(grid.clone(), grid.synthesize(&c))
}

/// Pointwise product with the 2/3 rule applied to the result.
pub fn product(f: &Field, g: &Field) -> Result<Field> {
    let raw = f.mul(g)?;
    let grid = f.grid();
    let mut c = grid.analyze(raw.values());
    dealias_in_place(grid, &mut c);
    Ok(Field::from_raw(grid.clone(), grid.synthesize(&c)))
}

pub fn hilbert(f: &Field) -> Field {
    filter(f, symbols::hilbert)
}

pub fn derivative(f: &Field) -> Field {
    filter(f, symbols::derivative)
}

/// `Λ^gamma f` for `gamma` in `(0, 2]`.
pub fn fractional_laplacian(f: &Field, gamma: f64) -> Result<Field> {
    check_param("gamma", gamma, gamma > 0.0 && gamma <= 2.0, "0 < gamma <= 2")?;
    Ok(filter(f, |k| symbols::fractional(k, gamma)))
}

/// `Λ^s f` for any `s >= 0`; internal counterpart of
/// [`fractional_laplacian`] without the dissipation-order range check.
pub(crate) fn lambda_pow(f: &Field, s: f64) -> Field {
    filter(f, |k| symbols::fractional(k, s))
}

pub fn bessel_potential(f: &Field, alpha: f64) -> Result<Field> {
    check_param("alpha", alpha, alpha >= 0.0, "alpha >= 0")?;
    Ok(filter(f, |k| symbols::bessel(k, alpha)))
}

/// `exp(tau d_xx) f`.
pub fn heat_semigroup(f: &Field, tau: f64) -> Result<Field> {
    check_param("tau", tau, tau >= 0.0, "tau >= 0")?;
    Ok(filter(f, |k| symbols::heat(k, tau)))
}

/// Convolution with the Gaussian mollifier of width `eps`
/// (the heat flow run for `tau = eps^2 / 2`).
pub fn mollify(f: &Field, eps: f64) -> Result<Field> {
    check_param("eps", eps, eps > 0.0, "eps > 0")?;
    heat_semigroup(f, 0.5 * eps * eps)
}

/// `g_eps * exp(eps d_xx) f` with `g_eps(x) = exp(-eps x^2)` on the cell.
pub fn wiener_window(f: &Field, eps: f64) -> Result<Field> {
    check_param("eps", eps, eps > 0.0, "eps > 0")?;
    let smooth = heat_semigroup(f, eps)?;
    let window = Field::from_fn(f.grid(), |x| (-eps * x * x).exp());
    smooth.mul(&window)
}

/// `Λf` (`gamma = 1`) by direct quadrature of the periodized singular kernel.
///
/// On a cell of length `L` the kernel `1/(pi |z|^2)` periodizes to
/// `(1/L^2) / sin^2(pi z / L)`. Pairing `z` with `-z` removes the principal
/// value, and the remaining smooth periodic integrand is summed with the
/// midpoint rule on the odd node offsets `z = (2m+1) dx`, which uses nodal
/// values only and never touches the diagonal. The rule is exact for
/// trigonometric polynomials of degree `<= N/2`; content above `N/4` is
/// reported as under-resolved.
pub fn lambda_quadrature_oracle(f: &Field) -> Result<Field> {
    const LIMIT: usize = 1024;
    let grid = f.grid();
    let n = grid.n_points();
    check_param(
        "n_points",
        n as f64,
        n <= LIMIT,
        "n_points <= 1024 for the quadrature oracle",
    )?;
    warn_if_unresolved(f);

    let weight: Vec<f64> = (0..n / 2)
        .map(|m| {
            let s = (PI * (2 * m + 1) as f64 / n as f64).sin();
            1.0 / (s * s)
        })
        .collect();
    let scale = PI * grid.dx() / (grid.length() * grid.length());
    let v = f.values();
    let out = (0..n)
        .map(|i| {
            let sum: f64 = weight
                .iter()
                .enumerate()
                .map(|(m, &w)| {
                    let off = 2 * m + 1;
                    let plus = v[(i + off) % n];
                    let minus = v[(i + n - off) % n];
                    (2.0 * v[i] - plus - minus) * w
                })
                .sum();
            scale * sum
        })
        .collect();
    Field::new(grid.clone(), out)
}

fn warn_if_unresolved(f: &Field) {
    let grid = f.grid();
    let n = grid.n_points();
    let c = grid.analyze(f.values());
    let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let high: f64 = c
        .iter()
        .enumerate()
        .filter(|(slot, _)| 4 * grid.mode(*slot).unsigned_abs() as usize > n)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    if total > 0.0 && high > 1e-20 * total {
        log::warn!(
            "quadrature oracle: {:.3e} of the energy lies above |j| = N/4; accuracy not guaranteed",
            high / total
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn grid_2pi(n: usize) -> Arc<Grid> {
        Grid::new(n, 2.0 * PI).unwrap()
    }

    fn assert_close(a: &Field, b: &Field, tol: f64) {
        let err = a.sub(b).unwrap().max_abs();
        assert!(err < tol, "max error {err:e} >= {tol:e}");
    }

    /// Random real trigonometric polynomial with modes `1..=degree`.
    fn random_trig(grid: &Arc<Grid>, degree: usize, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(f64, f64, f64)> = (1..=degree)
            .map(|j| (j as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mean = rng.gen_range(-1.0..1.0);
        let k0 = 2.0 * PI / grid.length();
        Field::from_fn(grid, |x| {
            mean + terms
                .iter()
                .map(|&(j, a, b)| a * (j * k0 * x).cos() + b * (j * k0 * x).sin())
                .sum::<f64>()
        })
    }

    #[test]
    fn hilbert_examples() {
        let g = grid_2pi(64);
        assert_close(
            &hilbert(&Field::from_fn(&g, f64::sin)),
            &Field::from_fn(&g, |x| -x.cos()),
            1e-13,
        );
        assert!(hilbert(&Field::constant(&g, 5.0)).max_abs() < 1e-14);
        let f = random_trig(&g, 10, 1);
        let twice = hilbert(&hilbert(&f));
        let expect = f.map(|v| -v).add(&Field::constant(&g, f.mean())).unwrap();
        assert_close(&twice, &expect, 1e-12);
    }

    #[test]
    fn fractional_laplacian_examples() {
        let g = grid_2pi(64);
        let out = fractional_laplacian(&Field::from_fn(&g, |x| (3.0 * x).cos()), 1.0).unwrap();
        assert_close(&out, &Field::from_fn(&g, |x| 3.0 * (3.0 * x).cos()), 1e-12);
        let out = fractional_laplacian(&Field::from_fn(&g, |x| (2.0 * x).cos()), 0.5).unwrap();
        assert_close(&out, &Field::from_fn(&g, |x| 2f64.sqrt() * (2.0 * x).cos()), 1e-12);

        let f = random_trig(&g, 12, 2);
        let lam = fractional_laplacian(&f, 1.0).unwrap();
        assert_close(&lam, &hilbert(&derivative(&f)), 1e-11);

        for bad in [0.0, -0.5, 2.5, f64::NAN] {
            assert!(fractional_laplacian(&f, bad).is_err());
        }
    }

    #[test]
    fn bessel_examples() {
        let g = grid_2pi(64);
        let f = random_trig(&g, 6, 3);
        assert_close(&bessel_potential(&f, 0.0).unwrap(), &f, 1e-14);
        let out = bessel_potential(&Field::from_fn(&g, f64::cos), 0.25).unwrap();
        assert_close(&out, &Field::from_fn(&g, |x| 0.840896415253714 * x.cos()), 1e-12);
        let out = bessel_potential(&Field::constant(&g, 2.0), 0.5).unwrap();
        assert_close(&out, &Field::constant(&g, 2.0), 1e-14);
        assert!(bessel_potential(&f, -0.1).is_err());
    }

    #[test]
    fn derivative_examples() {
        let g = grid_2pi(64);
        assert_close(
            &derivative(&Field::from_fn(&g, f64::cos)),
            &Field::from_fn(&g, |x| -x.sin()),
            1e-13,
        );
        assert!(derivative(&Field::constant(&g, 4.0)).max_abs() < 1e-14);
        // (cos x + sin 2x)^2 differentiated by hand
        let f = Field::from_fn(&g, |x| (x.cos() + (2.0 * x).sin()).powi(2));
        let df = Field::from_fn(&g, |x| {
            2.0 * (x.cos() + (2.0 * x).sin()) * (-x.sin() + 2.0 * (2.0 * x).cos())
        });
        assert_close(&derivative(&f), &df, 1e-12);
    }

    #[test]
    fn heat_examples() {
        let g = grid_2pi(64);
        let f = random_trig(&g, 8, 4);
        assert_close(&heat_semigroup(&f, 0.0).unwrap(), &f, 1e-14);
        let out = heat_semigroup(&Field::from_fn(&g, f64::cos), 1.0).unwrap();
        assert_close(&out, &Field::from_fn(&g, |x| (-1f64).exp() * x.cos()), 1e-13);
        let composed = heat_semigroup(&heat_semigroup(&f, 0.3).unwrap(), 0.2).unwrap();
        assert_close(&composed, &heat_semigroup(&f, 0.5).unwrap(), 1e-12);
        assert!(heat_semigroup(&f, -1.0).is_err());
    }

    #[test]
    fn mollifier_examples() {
        let g = Grid::new(512, 20.0).unwrap();
        let c = mollify(&Field::constant(&g, 1.5), 0.1).unwrap();
        assert_close(&c, &Field::constant(&g, 1.5), 1e-13);

        let bump = Field::from_fn(&g, |x| (-x * x).exp());
        let m = mollify(&bump, 0.1).unwrap();
        assert!(m.min() >= -1e-12);
        assert!((m.mean() - bump.mean()).abs() < 1e-12);
        assert!(mollify(&bump, 0.0).is_err());
    }

    #[test]
    fn mollifier_converges_at_least_first_order() {
        let g = Grid::new(512, 20.0).unwrap();
        let f = Field::from_fn(&g, |x| (-x * x).exp() * (3.0 * x).cos());
        let err = |eps: f64| {
            let d = mollify(&f, eps).unwrap().sub(&f).unwrap();
            (d.values().iter().map(|v| v * v).sum::<f64>() * g.dx()).sqrt()
        };
        let errs: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&e| err(e)).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.0, "observed order {order}");
        }
    }

    #[test]
    fn wiener_window_examples() {
        let g = Grid::new(256, 32.0 * PI).unwrap();
        assert!(wiener_window(&Field::zeros(&g), 0.01).unwrap().max_abs() == 0.0);
        let out = wiener_window(&Field::constant(&g, 1.0), 0.01).unwrap();
        assert_close(&out, &Field::from_fn(&g, |x| (-0.01 * x * x).exp()), 1e-13);
    }

    #[test]
    fn quadrature_oracle_examples() {
        let g = grid_2pi(128);
        let out = lambda_quadrature_oracle(&Field::from_fn(&g, f64::cos)).unwrap();
        assert_close(&out, &Field::from_fn(&g, f64::cos), 1e-6);
        let out = lambda_quadrature_oracle(&Field::constant(&g, 7.0)).unwrap();
        assert!(out.max_abs() < 1e-8);

        let f = random_trig(&g, 32, 5);
        let oracle = lambda_quadrature_oracle(&f).unwrap();
        let spectral = fractional_laplacian(&f, 1.0).unwrap();
        let diff = oracle.sub(&spectral).unwrap();
        let rel = (diff.values().iter().map(|v| v * v).sum::<f64>()
            / spectral.values().iter().map(|v| v * v).sum::<f64>())
        .sqrt();
        assert!(rel < 1e-6, "relative gap {rel:e}");

        let too_big = Grid::new(2048, 1.0).unwrap();
        assert!(lambda_quadrature_oracle(&Field::zeros(&too_big)).is_err());
    }

    #[test]
    fn dealiased_product_drops_high_modes() {
        let g = grid_2pi(32);
        // cos(6x)^2 = 1/2 + cos(12x)/2, and 12 > 32/3
        let f = Field::from_fn(&g, |x| (6.0 * x).cos());
        let p = product(&f, &f).unwrap();
        assert_close(&p, &Field::constant(&g, 0.5), 1e-14);
    }
}
