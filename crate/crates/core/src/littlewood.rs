//! Sharp-cutoff dyadic decomposition.
//!
//! Shell `j` collects the wavenumbers with `2^{j-1} < |k| <= 2^j`. For a
//! cutoff index `K` the low-pass part holds `|k| <= 2^{K-1}`, so
//! `f = low_pass + sum_{j >= K} block_j` holds exactly.

use std::collections::BTreeMap;

use crate::error::{check_param, Result};
use crate::functionals::lp_norm;
use crate::operators::lambda_pow;
use crate::spectral::{Field, Grid};

const SNAP: f64 = 1e-12;
/// Bound asserted on every Bernstein ratio.
pub const BERNSTEIN_BOUND: f64 = 4.0;

/// Dyadic shell containing `|k|`; `None` for the zero mode.
pub fn shell_index(k: f64) -> Option<i32> {
    let a = k.abs();
    if a == 0.0 {
        return None;
    }
    let l = a.log2();
    let r = l.round();
    // values within rounding of a power of two belong to the shell they cap
    if (l - r).abs() < SNAP {
        Some(r as i32)
    } else {
        Some(l.ceil() as i32)
    }
}

#[derive(Debug, Clone)]
pub struct DyadicBlocks {
    pub cutoff: i32,
    pub low_pass: Field,
    pub blocks: BTreeMap<i32, Field>,
}

impl DyadicBlocks {
    pub fn reconstruct(&self) -> Field {
        let mut out = self.low_pass.clone();
        for b in self.blocks.values() {
            out = out.add(b).expect("blocks share the grid");
        }
        out
    }
}

fn project(f: &Field, keep: impl Fn(f64) -> bool) -> Field {
    let grid = f.grid();
    let mut c = grid.analyze(f.values());
    for (z, &k) in c.iter_mut().zip(grid.wavenumbers()) {
        if !keep(k) {
            *z = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    Field::from_raw(grid.clone(), grid.synthesize(&c))
}

fn top_shell(grid: &Grid) -> i32 {
    shell_index(grid.k_max()).expect("k_max > 0")
}

pub fn decompose(f: &Field, cutoff: i32) -> Result<DyadicBlocks> {
    let grid = f.grid();
    let scale = 2f64.powi(cutoff);
    check_param(
        "cutoff",
        cutoff as f64,
        scale <= grid.k_max() * (1.0 + SNAP),
        "2^K <= k_max",
    )?;
    let low_pass = project(f, |k| k == 0.0 || shell_index(k).unwrap() < cutoff);
    let blocks = (cutoff..=top_shell(grid))
        .map(|j| (j, project(f, |k| shell_index(k) == Some(j))))
        .collect();
    Ok(DyadicBlocks {
        cutoff,
        low_pass,
        blocks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellRatios {
    pub shell: i32,
    /// `||Λ^s Δ_j f||_p / (2^{js} ||Δ_j f||_p)`
    pub derivative_ratio: f64,
    /// `||Δ_j f||_q / (2^{j(1/p - 1/q)} ||Δ_j f||_p)`
    pub embedding_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct BernsteinReport {
    pub shells: Vec<ShellRatios>,
    pub max_derivative_ratio: f64,
    pub max_embedding_ratio: f64,
}

impl BernsteinReport {
    pub fn within_bound(&self) -> bool {
        self.max_derivative_ratio <= BERNSTEIN_BOUND && self.max_embedding_ratio <= BERNSTEIN_BOUND
    }
}

pub fn bernstein_check(blocks: &DyadicBlocks, s: f64, p: f64, q: f64) -> Result<BernsteinReport> {
    let finite = |r: f64| if r.is_infinite() { f64::MAX } else { r };
    check_param("p", finite(p), p >= 1.0, "p >= 1")?;
    check_param("q", finite(q), q >= p, "q >= p")?;
    check_param("s", s, s >= 0.0, "s >= 0")?;
    let inv = |r: f64| if r.is_infinite() { 0.0 } else { 1.0 / r };
    let scale = blocks.low_pass.max_abs().max(
        blocks
            .blocks
            .values()
            .map(Field::max_abs)
            .fold(0.0, f64::max),
    );
    let mut shells = Vec::new();
    for (&j, block) in &blocks.blocks {
        if block.max_abs() <= 1e-13 * scale || block.max_abs() == 0.0 {
            continue;
        }
        let norm_p = lp_norm(block, p)?;
        let derivative_ratio = lp_norm(&lambda_pow(block, s), p)? / (2f64.powf(j as f64 * s) * norm_p);
        let embedding_ratio =
            lp_norm(block, q)? / (2f64.powf(j as f64 * (inv(p) - inv(q))) * norm_p);
        shells.push(ShellRatios {
            shell: j,
            derivative_ratio,
            embedding_ratio,
        });
    }
    Ok(BernsteinReport {
        max_derivative_ratio: shells.iter().map(|r| r.derivative_ratio).fold(0.0, f64::max),
        max_embedding_ratio: shells.iter().map(|r| r.embedding_ratio).fold(0.0, f64::max),
        shells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::lp_norm;
    use std::f64::consts::PI;

    #[test]
    fn shell_boundaries() {
        assert_eq!(shell_index(0.0), None);
        assert_eq!(shell_index(4.0), Some(2));
        assert_eq!(shell_index(4.000000000000001), Some(2));
        assert_eq!(shell_index(4.1), Some(3));
        assert_eq!(shell_index(-3.0), Some(2));
        assert_eq!(shell_index(1.0 / 16.0), Some(-4));
    }

    #[test]
    fn single_mode_lands_in_one_block() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, |x| (4.0 * x).cos());
        let d = decompose(&f, 0).unwrap();
        let nonzero: Vec<i32> = d
            .blocks
            .iter()
            .filter(|(_, b)| b.max_abs() > 1e-12)
            .map(|(&j, _)| j)
            .collect();
        assert_eq!(nonzero, vec![2]);
        assert!(d.low_pass.max_abs() < 1e-13);
    }

    #[test]
    fn constant_is_all_low_pass() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let d = decompose(&Field::constant(&g, 2.5), 1).unwrap();
        assert!(d.blocks.values().all(|b| b.max_abs() < 1e-13));
        assert!(d.low_pass.sub(&Field::constant(&g, 2.5)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn cutoff_out_of_range() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        // k_max = 32
        assert!(decompose(&Field::zeros(&g), 5).is_ok());
        assert!(decompose(&Field::zeros(&g), 6).is_err());
    }

    #[test]
    fn bernstein_single_mode_ratio_is_one() {
        let g = Grid::new(128, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, |x| (8.0 * x).sin());
        let d = decompose(&f, 0).unwrap();
        let r = bernstein_check(&d, 1.0, 2.0, f64::INFINITY).unwrap();
        assert_eq!(r.shells.len(), 1);
        assert!((r.shells[0].derivative_ratio - 1.0).abs() < 1e-12);
        assert!(r.within_bound());
    }

    #[test]
    fn bernstein_skips_empty_blocks() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let d = decompose(&Field::constant(&g, 1.0), 0).unwrap();
        let r = bernstein_check(&d, 0.5, 2.0, 4.0).unwrap();
        assert!(r.shells.is_empty());
        assert!(bernstein_check(&d, 0.5, 2.0, 1.0).is_err());
    }

    #[test]
    fn orthogonality_of_sharp_blocks() {
        let g = Grid::new(128, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, |x| (x.sin() * 3.0).exp());
        let d = decompose(&f, -1).unwrap();
        let total = lp_norm(&f, 2.0).unwrap().powi(2);
        let parts: f64 = d
            .blocks
            .values()
            .chain(std::iter::once(&d.low_pass))
            .map(|b| lp_norm(b, 2.0).unwrap().powi(2))
            .sum();
        assert!((total - parts).abs() < 1e-10 * total);
    }
}
