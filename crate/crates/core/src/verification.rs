//! A-priori inequalities turned into verdicts over a [`TimeSeries`].
//!
//! Every check first tests its hypotheses (sign of the data, range of `δ`,
//! smallness, value of `γ`). When they fail the verdict is returned with
//! `applicable = false` and is not asserted.
//!
//! Margins are positive when the inequality is satisfied; a verdict holds
//! when `worst_margin >= -tolerance`.

use crate::functionals::{lp_norm, DiagnosticsRecord};
use crate::models::ModelParams;
use crate::operators::VelocityKind;
use crate::spectral::{Field, Grid};
use crate::timestepper::TimeSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateVerdict {
    pub name: String,
    pub holds: bool,
    pub worst_margin: f64,
    pub tolerance: f64,
    pub applicable: bool,
}

impl EstimateVerdict {
    fn judged(name: &str, worst_margin: f64, tolerance: f64) -> EstimateVerdict {
        EstimateVerdict {
            name: name.to_string(),
            holds: worst_margin >= -tolerance,
            worst_margin,
            tolerance,
            applicable: true,
        }
    }

    fn not_applicable(name: &str, tolerance: f64) -> EstimateVerdict {
        EstimateVerdict {
            name: name.to_string(),
            holds: false,
            worst_margin: 0.0,
            tolerance,
            applicable: false,
        }
    }

    /// Applicable and violated.
    pub fn failed(&self) -> bool {
        self.applicable && !self.holds
    }
}

pub const MIN_MAX: &str = "min_max";
pub const ENERGY: &str = "energy";
pub const MASS_IDENTITY: &str = "mass_identity";
pub const WIENER_MONOTONE: &str = "wiener_monotone";
pub const WIENER_DECAY: &str = "wiener_decay";
pub const WEIGHTED_GROWTH: &str = "weighted_growth";
pub const CRITICAL_COUPLING: &str = "critical_coupling";
pub const HALF_NORM_SMALL_DATA: &str = "half_norm_small_data";

/// Checks that can be evaluated from a single series.
pub const CHECK_NAMES: [&str; 8] = [
    MIN_MAX,
    ENERGY,
    MASS_IDENTITY,
    WIENER_MONOTONE,
    WIENER_DECAY,
    WEIGHTED_GROWTH,
    CRITICAL_COUPLING,
    HALF_NORM_SMALL_DATA,
];

pub const MIN_MAX_TOL: f64 = 1e-6;
pub const ENERGY_TOL: f64 = 1e-4;
pub const MASS_TOL: f64 = 1e-6;
pub const WIENER_MONOTONE_TOL: f64 = 1e-6;
pub const WIENER_DECAY_TOL: f64 = 1e-3;
pub const GROWTH_TOL: f64 = 1e-3;
pub const COUPLING_TOL: f64 = 1e-9;
pub const HALF_NORM_TOL: f64 = 1e-4;
/// Fraction of the run used to calibrate growth rates.
pub const CALIBRATION_FRACTION: f64 = 0.1;
/// Allowed ratio between late and calibrated growth rates.
pub const SLOPE_FACTOR: f64 = 2.0;

const GAMMA_EXACT: f64 = 1e-12;

/// Evaluate a named check with its default tolerance.
pub fn evaluate(name: &str, r: &[DiagnosticsRecord], p: &ModelParams) -> Result<EstimateVerdict> {
    Ok(match name {
        MIN_MAX => check_min_max(r, p),
        ENERGY => check_energy(r, p),
        MASS_IDENTITY => check_mass_identity(r, p, MASS_TOL),
        WIENER_MONOTONE => check_wiener_monotone(r, p),
        WIENER_DECAY => check_wiener_decay(r, p, WIENER_DECAY_TOL),
        WEIGHTED_GROWTH => check_weighted_growth(r, p),
        CRITICAL_COUPLING => check_critical_coupling(r, p),
        HALF_NORM_SMALL_DATA => check_half_norm_small_data(r, p),
        other => return Err(Error::Config(format!("unknown check `{other}`"))),
    })
}

pub fn evaluate_all(r: &[DiagnosticsRecord], p: &ModelParams) -> Vec<EstimateVerdict> {
    CHECK_NAMES
        .iter()
        .map(|n| evaluate(n, r, p).expect("known name"))
        .collect()
}

/// `θ_0 >= 0`, read from the continuous minimum in the first record.
fn nonnegative(r: &[DiagnosticsRecord]) -> bool {
    r[0].min_val >= 0.0
}

fn is_gamma_one(p: &ModelParams) -> bool {
    (p.gamma - 1.0).abs() < GAMMA_EXACT
}

fn bessel_alpha(p: &ModelParams) -> Option<f64> {
    match p.velocity {
        VelocityKind::BesselPotential { alpha } => Some(alpha),
        VelocityKind::HilbertTransform => None,
    }
}

/// Minimum/maximum principle.
///
/// Model A (`δ >= 0`, `θ_0 >= 0`): `min θ >= min(0, min θ_0)` and the maximum
/// never increases from one record to the next. Model B (`δ = 0`):
/// `||θ||_∞` never increases. The tolerance is `1e-6 ||θ_0||_∞`.
pub fn check_min_max(r: &[DiagnosticsRecord], p: &ModelParams) -> EstimateVerdict {
    let scale = r[0].linf;
    let tol = MIN_MAX_TOL * scale;
    if p.is_model_a() {
        if p.delta < 0.0 || !nonnegative(r) {
            return EstimateVerdict::not_applicable(MIN_MAX, tol);
        }
        let floor = r[0].min_val.min(0.0);
        let worst = later(r, |i, rec| {
            (rec.min_val - floor)
                .min(r[i - 1].max_val - rec.max_val)
                .min(r[0].max_val - rec.max_val)
        });
        EstimateVerdict::judged(MIN_MAX, worst, tol)
    } else {
        if p.delta != 0.0 {
            return EstimateVerdict::not_applicable(MIN_MAX, tol);
        }
        let worst = later(r, |i, rec| (r[i - 1].linf - rec.linf).min(r[0].linf - rec.linf));
        EstimateVerdict::judged(MIN_MAX, worst, tol)
    }
}

/// Smallest margin over the records after the first; 0 when there are none.
fn later(r: &[DiagnosticsRecord], margin: impl Fn(usize, &DiagnosticsRecord) -> f64) -> f64 {
    let worst = r
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, rec)| margin(i, rec))
        .fold(f64::INFINITY, f64::min);
    if worst.is_finite() || worst.is_nan() {
        worst
    } else {
        0.0
    }
}

fn h_half_energy(r: &DiagnosticsRecord) -> f64 {
    r.l2 * r.l2 + r.sobolev_half * r.sobolev_half
}

/// Relative slack `(E_0 - E(t) - 2D(t)) / E_0` of the `H^{1/2}` energy
/// inequality at every record, where `E = ||θ||² + ||Λ^{1/2}θ||²` and `D`
/// is the running dissipation (viscous part included).
pub fn energy_margins(r: &[DiagnosticsRecord]) -> Vec<f64> {
    let e0 = h_half_energy(&r[0]);
    r.iter()
        .map(|x| {
            let slack = e0 - h_half_energy(x) - 2.0 * (x.l2_dissipation_running + x.sobolev_dissipation_running);
            if e0 > 0.0 {
                slack / e0
            } else {
                slack
            }
        })
        .collect()
}

/// `H^{1/2}` energy inequality; model A, `δ >= 1/2`, `θ_0 >= 0`.
pub fn check_energy(r: &[DiagnosticsRecord], p: &ModelParams) -> EstimateVerdict {
    if !p.is_model_a() || p.delta < 0.5 || !nonnegative(r) {
        return EstimateVerdict::not_applicable(ENERGY, ENERGY_TOL);
    }
    let m = energy_margins(r);
    let worst = later(r, |i, _| m[i]);
    EstimateVerdict::judged(ENERGY, worst, ENERGY_TOL)
}

/// `max_t |∫θ(t) - ∫θ_0 - (1 - δ) ∫_0^t ||Λ^{1/2}θ||² ds|`.
pub fn mass_identity_residual(r: &[DiagnosticsRecord], p: &ModelParams) -> f64 {
    let d = p.delta;
    r.iter()
        .map(|rec| (rec.mass - r[0].mass - (1.0 - d) * rec.half_dissipation_running).abs())
        .fold(0.0, f64::max)
}

/// Discrete mass identity; model A, `θ_0 >= 0`, no viscosity. Absolute
/// tolerance.
pub fn check_mass_identity(r: &[DiagnosticsRecord], p: &ModelParams, tol: f64) -> EstimateVerdict {
    if !p.is_model_a() || p.epsilon_visc != 0.0 || !nonnegative(r) {
        return EstimateVerdict::not_applicable(MASS_IDENTITY, tol);
    }
    EstimateVerdict::judged(MASS_IDENTITY, -mass_identity_residual(r, p), tol)
}

/// Prefactor `ν - 2(1 + |δ|) ||θ_0||_{A^0}` of the Wiener decay inequality
/// when its hypotheses hold (`γ = 1`, positive prefactor, model B only with
/// `δ = 0`).
pub fn wiener_prefactor(r: &[DiagnosticsRecord], p: &ModelParams) -> Option<f64> {
    if !is_gamma_one(p) || p.nu <= 0.0 {
        return None;
    }
    if !p.is_model_a() && p.delta != 0.0 {
        return None;
    }
    let a0 = r[0].a0;
    let pref = p.nu - 2.0 * (1.0 + p.delta.abs()) * a0;
    (pref > 0.0).then_some(pref)
}

/// `||θ||_{A^1}` nonincreasing from record to record, relative to its
/// initial value.
pub fn check_wiener_monotone(r: &[DiagnosticsRecord], p: &ModelParams) -> EstimateVerdict {
    if wiener_prefactor(r, p).is_none() {
        return EstimateVerdict::not_applicable(WIENER_MONOTONE, WIENER_MONOTONE_TOL);
    }
    let scale = if r[0].a1 > 0.0 { r[0].a1 } else { 1.0 };
    let worst = later(r, |i, x| (r[i - 1].a1 - x.a1) / scale);
    EstimateVerdict::judged(WIENER_MONOTONE, worst, WIENER_MONOTONE_TOL)
}

/// `||θ||_{A^1} + P ∫ ||θ_x||_{A^1} ds <= ||θ_0||_{A^1}` with `P` from
/// [`wiener_prefactor`]; margin relative to `||θ_0||_{A^1}`.
pub fn check_wiener_decay(r: &[DiagnosticsRecord], p: &ModelParams, tol: f64) -> EstimateVerdict {
    let Some(pref) = wiener_prefactor(r, p) else {
        return EstimateVerdict::not_applicable(WIENER_DECAY, tol);
    };
    let a10 = r[0].a1;
    let scale = if a10 > 0.0 { a10 } else { 1.0 };
    let worst = later(r, |_, x| (a10 - x.a1 - pref * x.a1_dissipation_running) / scale);
    EstimateVerdict::judged(WIENER_DECAY, worst, tol)
}

/// Record-to-record slopes of `ln N(t)` as `(t_end, slope)`.
fn log_slopes(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (t[1], (v[1].ln() - v[0].ln()) / (t[1] - t[0])))
        .collect()
}

/// Weighted norm monitored by [`check_weighted_growth`]:
/// `||θ||²_{H^{1/2}(w)}` for model A, `||θ||²_{H^1(w)}` for model B.
pub fn weighted_quantity(p: &ModelParams, r: &DiagnosticsRecord) -> f64 {
    if p.is_model_a() {
        r.w_h_half * r.w_h_half
    } else {
        r.w_h1 * r.w_h1
    }
}

/// Largest log-slope of the weighted norm over the calibration window.
/// `None` when the norm vanishes or fewer than two records exist.
pub fn measured_growth_rate(r: &[DiagnosticsRecord], p: &ModelParams) -> Option<f64> {
    let (cal, _) = split_slopes(r, p)?;
    Some(cal.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max))
}

type Slopes = Vec<(f64, f64)>;

fn split_slopes(r: &[DiagnosticsRecord], p: &ModelParams) -> Option<(Slopes, Slopes)> {
    let vals: Vec<f64> = r.iter().map(|x| weighted_quantity(p, x)).collect();
    if r.len() < 2 || vals.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let times: Vec<f64> = r.iter().map(|x| x.t).collect();
    let horizon = CALIBRATION_FRACTION * (times[times.len() - 1] - times[0]);
    let slopes = log_slopes(&times, &vals);
    let n_cal = slopes.iter().take_while(|s| s.0 <= times[0] + horizon * (1.0 + 1e-12)).count().max(1);
    let (a, b) = slopes.split_at(n_cal);
    Some((a.to_vec(), b.to_vec()))
}

fn weighted_growth_applicable(r: &[DiagnosticsRecord], p: &ModelParams) -> bool {
    if !is_gamma_one(p) {
        return false;
    }
    match bessel_alpha(p) {
        None => {
            p.delta >= 0.0
                && nonnegative(r)
                && r[0].linf < 1.0 / (100.0 * (1.0 + p.delta))
        }
        Some(alpha) => (alpha - 0.25).abs() < GAMMA_EXACT && p.delta == 0.0,
    }
}

/// Slope stability of the weighted norm: after the calibration window no
/// log-slope may exceed `2 max(Ĉ, 0) + tol`, where `Ĉ` is the largest
/// calibration slope.
pub fn check_weighted_growth(r: &[DiagnosticsRecord], p: &ModelParams) -> EstimateVerdict {
    if !weighted_growth_applicable(r, p) {
        return EstimateVerdict::not_applicable(WEIGHTED_GROWTH, GROWTH_TOL);
    }
    let Some((cal, rest)) = split_slopes(r, p) else {
        return EstimateVerdict::judged(WEIGHTED_GROWTH, 0.0, GROWTH_TOL);
    };
    let c_hat = cal.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let worst = rest
        .iter()
        .map(|s| SLOPE_FACTOR * c_hat - s.1)
        .fold(f64::INFINITY, f64::min);
    EstimateVerdict::judged(WEIGHTED_GROWTH, if worst.is_finite() { worst } else { 0.0 }, GROWTH_TOL)
}

/// `min_k [max(1, |k|^{γ/2}) - |k|(1 + k²)^{-α}]` over the grid with
/// `α = 1/2 - γ/4`; nonnegative exactly when every mode is dominated.
pub fn critical_coupling_modewise(grid: &Grid, gamma: f64) -> f64 {
    let alpha = 0.5 - 0.25 * gamma;
    grid.wavenumbers()
        .iter()
        .map(|&k| {
            let a = k.abs();
            1f64.max(a.powf(0.5 * gamma)) - a * (1.0 + k * k).powf(-alpha)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `||u_x|| <= C (||θ|| + ||Λ^{γ/2}θ||)` with `C` measured at `t = 0`:
/// the ratio must stay within `2 C_0` and never exceed the exact bound 1.
pub fn check_critical_coupling(r: &[DiagnosticsRecord], p: &ModelParams) -> EstimateVerdict {
    if !p.critical_coupling || bessel_alpha(p).is_none() {
        return EstimateVerdict::not_applicable(CRITICAL_COUPLING, COUPLING_TOL);
    }
    let ratios: Vec<Option<f64>> = r
        .iter()
        .map(|x| {
            let den = x.l2 + x.lambda_gamma_half;
            (den > 0.0).then(|| x.ux_l2 / den)
        })
        .collect();
    let Some(c0) = ratios[0] else {
        return EstimateVerdict::judged(CRITICAL_COUPLING, 0.0, COUPLING_TOL);
    };
    let worst = ratios
        .iter()
        .flatten()
        .map(|&q| (SLOPE_FACTOR * c0 - q).min(1.0 - q))
        .fold(f64::INFINITY, f64::min);
    EstimateVerdict::judged(CRITICAL_COUPLING, worst, COUPLING_TOL)
}

/// `||Λ^{1/2}θ(t)||² <= ||Λ^{1/2}θ_0||²` for model A with `γ = 1`, `δ = 1`,
/// `0 <= θ_0 < 1/2`.
pub fn check_half_norm_small_data(r: &[DiagnosticsRecord], p: &ModelParams) -> EstimateVerdict {
    let ok = p.is_model_a()
        && is_gamma_one(p)
        && p.delta == 1.0
        && nonnegative(r)
        && r[0].linf < 0.5;
    if !ok {
        return EstimateVerdict::not_applicable(HALF_NORM_SMALL_DATA, HALF_NORM_TOL);
    }
    let h0 = r[0].sobolev_half.powi(2);
    let scale = if h0 > 0.0 { h0 } else { 1.0 };
    let worst = later(r, |_, x| (h0 - x.sobolev_half.powi(2)) / scale);
    EstimateVerdict::judged(HALF_NORM_SMALL_DATA, worst, HALF_NORM_TOL)
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// `||θ_{ε_i} - θ_{ε_{i+1}}||_{L^2}` at the final time.
    pub gaps: Vec<f64>,
    /// `ln(g_{i}/g_{i+1}) / ln(ε_i/ε_{i+1})`, smallest over consecutive pairs.
    pub order: f64,
    pub verdict: EstimateVerdict,
}

pub const REGULARIZATION_ORDER: f64 = 0.9;

/// Terminal states of an `ε` sweep (decreasing `ε`): gaps must shrink and
/// the empirical order must reach 0.9.
pub fn regularization_convergence(eps: &[f64], terminal: &[Field]) -> Result<ConvergenceReport> {
    if eps.len() != terminal.len() || eps.len() < 3 {
        return Err(Error::Config("need at least three matching viscosities and states".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::Config("viscosities must be positive and strictly decreasing".into()));
    }
    let gaps = terminal
        .windows(2)
        .map(|w| lp_norm(&w[0].sub(&w[1])?, 2.0))
        .collect::<Result<Vec<f64>>>()?;
    let order = (0..gaps.len() - 1)
        .map(|i| {
            let r = (eps[i] / eps[i + 1]).ln();
            (gaps[i] / gaps[i + 1]).ln() / r
        })
        .fold(f64::INFINITY, f64::min);
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let margin = if decreasing {
        order - REGULARIZATION_ORDER
    } else {
        gaps.windows(2).map(|w| (w[0] - w[1]) / w[0]).fold(f64::INFINITY, f64::min)
    };
    Ok(ConvergenceReport {
        verdict: EstimateVerdict {
            name: "regularization_convergence".into(),
            holds: decreasing && order >= REGULARIZATION_ORDER,
            worst_margin: margin,
            tolerance: 0.0,
            applicable: true,
        },
        gaps,
        order,
    })
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// `||θ_1 - θ_2||_{L^2}` at the snapshot times.
    pub differences: Vec<f64>,
    pub times: Vec<f64>,
    /// `J(t) = ∫ (||θ_{1x}||² + ||θ_{2x}||²) ds` at the snapshot times.
    pub gradient_integral: Vec<f64>,
    /// Calibrated Grönwall constant: `max 2 ln(d/η) / J` over the first 10%.
    pub c_hat: f64,
    /// Observed exponential rate `max ln(d/η) / t`.
    pub k_rate: f64,
    pub verdict: EstimateVerdict,
}

pub const DETERMINISM_TOL: f64 = 1e-12;

/// Paired runs with identical parameters from data `η` apart in `L²`.
///
/// The difference must stay below `η exp(2 max(Ĉ, 0) J(t) / 2)`, the
/// Grönwall envelope with the calibrated constant doubled; margins are in
/// log units. With `η = 0` the runs must coincide to `1e-12`. Both series
/// need snapshots at the same times.
pub fn two_run_stability(run1: &TimeSeries, run2: &TimeSeries) -> Result<StabilityReport> {
    if run1.snapshots.len() != run2.snapshots.len()
        || run1.snapshots.is_empty()
        || run1.records.len() != run1.snapshots.len()
        || run2.records.len() != run2.snapshots.len()
    {
        return Err(Error::Config("stability check needs matching snapshots in both runs".into()));
    }
    let mut differences = Vec::new();
    let mut times = Vec::new();
    for ((t1, f1), (t2, f2)) in run1.snapshots.iter().zip(&run2.snapshots) {
        if (t1 - t2).abs() > 1e-12 * (1.0 + t1.abs()) {
            return Err(Error::Config(format!("snapshot times differ: {t1} vs {t2}")));
        }
        differences.push(lp_norm(&f1.sub(f2)?, 2.0)?);
        times.push(*t1);
    }
    let mut gradient_integral = vec![0.0];
    for i in 1..times.len() {
        let g = |k: usize| run1.records[k].sobolev_one.powi(2) + run2.records[k].sobolev_one.powi(2);
        let prev = gradient_integral[i - 1];
        gradient_integral.push(prev + 0.5 * (times[i] - times[i - 1]) * (g(i) + g(i - 1)));
    }
    let eta = differences[0];
    let name = "two_run_stability";
    if eta == 0.0 {
        let worst = differences.iter().fold(0.0, |m: f64, &d| m.max(d));
        return Ok(StabilityReport {
            verdict: EstimateVerdict {
                name: name.into(),
                holds: worst <= DETERMINISM_TOL,
                worst_margin: DETERMINISM_TOL - worst,
                tolerance: 0.0,
                applicable: true,
            },
            differences,
            times,
            gradient_integral,
            c_hat: 0.0,
            k_rate: 0.0,
        });
    }
    let horizon = times[0] + CALIBRATION_FRACTION * (times[times.len() - 1] - times[0]);
    let c_hat = (1..times.len())
        .filter(|&i| times[i] <= horizon * (1.0 + 1e-12) || i == 1)
        .filter(|&i| gradient_integral[i] > 0.0)
        .map(|i| 2.0 * (differences[i] / eta).ln() / gradient_integral[i])
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let worst = (1..times.len())
        .map(|i| SLOPE_FACTOR * c_hat * gradient_integral[i] / 2.0 - (differences[i] / eta).ln())
        .fold(f64::INFINITY, f64::min);
    let worst = if worst.is_finite() { worst } else { 0.0 };
    let k_rate = (1..times.len())
        .map(|i| (differences[i] / eta).ln() / (times[i] - times[0]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        verdict: EstimateVerdict::judged(name, worst, GROWTH_TOL),
        differences,
        times,
        gradient_integral,
        c_hat,
        k_rate,
    })
}

/// `(d_1/η_1) / (d_2/η_2)` for terminal differences `d_i` at sizes `η_i`;
/// 1 for exactly linear response.
pub fn linear_response_ratio(d1: f64, eta1: f64, d2: f64, eta2: f64) -> f64 {
    (d1 / eta1) / (d2 / eta2)
}
