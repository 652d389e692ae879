//! Prior over convex functions driven by a Dirichlet process.
//!
//! A draw consists of a gradient scale `gamma_plus` and a random
//! distribution function `F` on `[0,1]` sampled by stick breaking; the
//! induced convex function has subgradient `gamma_plus * (2 F(x) - 1)`, so
//! its minimizer is the median of `F`. The marginal law of the minimizer
//! (`MarginalNu`) follows from `F(t) ~ Beta(alpha*t, alpha*(1-t))` and is
//! evaluated through the regularized incomplete beta function. The module
//! also carries the numerical verifiers for the density envelope of that
//! law and for the process's defining marginals and self-similarity.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::special::regularized_incomplete_beta;
use crate::stats::{ks_one_sample_windowed, ks_two_sample, KsResult};
use crate::{Error, GradientOracle, Result};

/// Lower bound on the density of the minimizer's marginal law:
/// `(1/3) * 2^(-alpha - 2)`.
pub fn nu_density_lower(alpha: f64) -> f64 {
    2f64.powf(-alpha - 2.0) / 3.0
}

/// Upper bound on the density of the minimizer's marginal law:
/// `(3 + 2/e) * alpha + 14`.
pub fn nu_density_upper(alpha: f64) -> f64 {
    (3.0 + 2.0 * (-1.0f64).exp()) * alpha + 14.0
}

/// One stick-breaking draw in break order: weight `k` is
/// `V_k * prod_{j<k} (1 - V_j)` with `V_k ~ Beta(1, alpha)`, and locations
/// are i.i.d. uniform on the base interval.
#[derive(Debug, Clone)]
pub struct StickDraw {
    pub weights: Vec<f64>,
    pub locations: Vec<f64>,
    pub residual: f64,
}

/// Stick breaking over `[base_lo, base_hi]` until the unbroken mass drops
/// below `truncation`.
pub fn sample_sticks<R: Rng + ?Sized>(
    concentration: f64,
    truncation: f64,
    base: (f64, f64),
    rng: &mut R,
) -> Result<StickDraw> {
    if !(concentration > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "concentration must be positive, got {concentration}"
        )));
    }
    if !(truncation > 0.0 && truncation <= 1e-6) {
        return Err(Error::InvalidConfig(format!(
            "truncation must lie in (0, 1e-6], got {truncation}"
        )));
    }
    let mut weights = Vec::new();
    let mut locations = Vec::new();
    let mut remaining = 1.0f64;
    // Beta(1, alpha) by inverse transform: V = 1 - U^(1/alpha)
    while remaining >= truncation {
        let u: f64 = rng.gen();
        let v = 1.0 - u.powf(1.0 / concentration);
        let w = v * remaining;
        weights.push(w);
        locations.push(base.0 + (base.1 - base.0) * rng.gen::<f64>());
        remaining *= 1.0 - v;
        if weights.len() > 4_000_000 {
            return Err(Error::Numerical(
                "stick breaking failed to reach the truncation tolerance".to_string(),
            ));
        }
    }
    Ok(StickDraw {
        weights,
        locations,
        residual: remaining,
    })
}

/// A truth drawn from the prior: gradient scale, truncated atoms of `F`
/// sorted by location, and the minimizer (the median of `F`).
#[derive(Debug, Clone, serde::Serialize)]
pub struct DpFunctionSample {
    pub gamma_plus: f64,
    /// `(location, weight)` pairs sorted by location
    pub atoms: Vec<(f64, f64)>,
    pub residual_mass: f64,
    pub concentration: f64,
    pub minimizer: f64,
}

/// Draws a truth from the prior: `gamma_plus ~ Unif(0, 1]`, atoms by stick
/// breaking, minimizer at the weighted median of the atoms.
///
/// The rare draw whose median is ambiguous at the truncation resolution
/// (cumulative weight passes 1/2 within `truncation` of the median atom)
/// is discarded and redrawn, keeping the minimizer exact.
pub fn sample_stick_breaking<R: Rng + ?Sized>(
    concentration: f64,
    truncation: f64,
    rng: &mut R,
) -> Result<DpFunctionSample> {
    for _ in 0..64 {
        let gamma_plus = 1.0 - rng.gen::<f64>();
        let draw = sample_sticks(concentration, truncation, (0.0, 1.0), rng)?;
        let mut atoms: Vec<(f64, f64)> = draw
            .locations
            .iter()
            .copied()
            .zip(draw.weights.iter().copied())
            .collect();
        atoms.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut cum = 0.0f64;
        let mut minimizer = None;
        let mut ambiguous = false;
        for &(loc, w) in &atoms {
            let before = cum;
            cum += w;
            if cum >= 0.5 {
                // unsampled mass below `truncation` must not be able to move
                // the median to an earlier atom
                ambiguous = before >= 0.5 - draw.residual;
                minimizer = Some(loc);
                break;
            }
        }
        let minimizer = minimizer.expect("total mass exceeds 1/2");
        if ambiguous {
            continue;
        }
        return Ok(DpFunctionSample {
            gamma_plus,
            atoms,
            residual_mass: draw.residual,
            concentration,
            minimizer,
        });
    }
    Err(Error::Numerical(
        "could not draw an unambiguous median at the truncation resolution".to_string(),
    ))
}

impl DpFunctionSample {
    /// `F(x)`: total weight of atoms at locations `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let end = self.atoms.partition_point(|&(loc, _)| loc <= x);
        self.atoms[..end].iter().map(|&(_, w)| w).sum()
    }

    /// Subgradient of the induced convex function:
    /// `gamma_plus * (2 F(q) - 1)`, always in `[-gamma_plus, gamma_plus]`.
    pub fn gradient(&self, q: f64) -> f64 {
        self.gamma_plus * (2.0 * self.cdf(q) - 1.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum::<f64>() + self.residual_mass
    }
}

impl GradientOracle for DpFunctionSample {
    fn gradient(&mut self, q: f64) -> f64 {
        DpFunctionSample::gradient(self, q)
    }
}

/// Marginal law of the minimizer, exposed as a CDF/quantile pair built on
/// the regularized incomplete beta function.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MarginalNu {
    pub concentration: f64,
    pub cdf_tolerance: f64,
}

impl MarginalNu {
    pub fn new(concentration: f64) -> Result<Self> {
        if !(concentration > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "concentration must be positive, got {concentration}"
            )));
        }
        Ok(Self {
            concentration,
            cdf_tolerance: 1e-9,
        })
    }

    /// `P(minimizer <= t) = 1 - I_{1/2}(alpha*t, alpha*(1-t))`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::DomainQuery(t));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if t == 1.0 {
            return Ok(1.0);
        }
        let a = self.concentration * t;
        let b = self.concentration * (1.0 - t);
        Ok(1.0 - regularized_incomplete_beta(a, b, 0.5)?)
    }

    /// Monotone root finding: returns `t` with `|cdf(t) - p| <= cdf_tolerance`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::DomainQuery(p));
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        if p == 1.0 {
            return Ok(1.0);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let c = self.cdf(mid)?;
            if (c - p).abs() <= self.cdf_tolerance && hi - lo <= 1e-12 {
                return Ok(mid);
            }
            if c < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                return Ok(0.5 * (lo + hi));
            }
        }
        Err(Error::Numerical(format!(
            "quantile iteration cap exceeded for p={p}, alpha={}",
            self.concentration
        )))
    }
}

/// One grid point of the density-envelope verification.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DensityPoint {
    pub t: f64,
    pub derivative: f64,
    pub pass: bool,
}

/// Report of the density-envelope verification.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DensityBoundsReport {
    pub check: String,
    pub alpha: f64,
    pub fd_step: f64,
    pub tolerance: f64,
    pub bound_lower: f64,
    pub bound_upper: f64,
    pub min_derivative: f64,
    pub max_derivative: f64,
    pub points: Vec<DensityPoint>,
    pub pass: bool,
}

/// Central finite differences of the minimizer law's CDF checked against
/// the analytic envelope `[lower - tol, upper + tol]`, where the tolerance
/// covers the finite-difference truncation and the CDF accuracy.
pub fn verify_density_bounds(alpha: f64, grid: &[f64], fd_step: f64) -> Result<DensityBoundsReport> {
    if !(fd_step > 0.0 && fd_step < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step must lie in (0, 0.5), got {fd_step}"
        )));
    }
    let nu = MarginalNu::new(alpha)?;
    let tolerance = 1e-3 + 2.0 * 1e-10 / fd_step;
    let lower = nu_density_lower(alpha);
    let upper = nu_density_upper(alpha);
    let mut points = Vec::with_capacity(grid.len());
    let mut min_d = f64::INFINITY;
    let mut max_d = f64::NEG_INFINITY;
    for &t in grid {
        if t - fd_step <= 0.0 || t + fd_step >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "grid point {t} too close to the boundary for step {fd_step}"
            )));
        }
        let d = (nu.cdf(t + fd_step)? - nu.cdf(t - fd_step)?) / (2.0 * fd_step);
        min_d = min_d.min(d);
        max_d = max_d.max(d);
        points.push(DensityPoint {
            t,
            derivative: d,
            pass: d >= lower - tolerance && d <= upper + tolerance,
        });
    }
    let pass = points.iter().all(|p| p.pass);
    Ok(DensityBoundsReport {
        check: "density-bounds".to_string(),
        alpha,
        fd_step,
        tolerance,
        bound_lower: lower,
        bound_upper: upper,
        min_derivative: min_d,
        max_derivative: max_d,
        points,
        pass,
    })
}

/// One statistic of the process-property report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckStatistic {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
}

/// Report of the marginal and self-similarity checks.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DpMarginalsReport {
    pub check: String,
    pub alpha: f64,
    pub partition: Vec<f64>,
    pub trials: u64,
    pub significance: f64,
    pub statistics: Vec<CheckStatistic>,
    pub pass: bool,
}

/// The truncated sampler cannot distinguish values closer than its residual
/// mass, so distribution checks compare CDFs no finer than this floor.
const KS_RESOLUTION_FLOOR: f64 = 1e-6;

/// Verifies two defining properties of the sampler against `trials` draws:
///
/// * marginals: `F(t) ~ Beta(alpha*t, alpha*(1-t))` at every cut point, by
///   a one-sample KS test (restricted to `[floor, 1-floor]` to respect the
///   truncation resolution);
/// * self-similarity: composing a Dirichlet split over the partition cells
///   with independent scaled draws inside each cell matches direct draws,
///   by two-sample KS tests at the held-out cell midpoints.
///
/// Significance is Bonferroni-corrected across all statistics.
pub fn check_dp_marginals<R: Rng + ?Sized>(
    alpha: f64,
    cuts: &[f64],
    trials: u64,
    rng: &mut R,
) -> Result<DpMarginalsReport> {
    if cuts.is_empty() || cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "partition cuts must be strictly increasing and nonempty".to_string(),
        ));
    }
    if cuts[0] <= 0.0 || *cuts.last().unwrap() >= 1.0 {
        return Err(Error::InvalidConfig(
            "partition cuts must lie strictly inside (0,1)".to_string(),
        ));
    }
    if trials < 10_000 {
        return Err(Error::InvalidConfig(format!(
            "marginal checks need at least 10^4 trials, got {trials}"
        )));
    }
    let truncation = 1e-12;
    let significance = 1e-3;

    // direct draws, evaluated at every cut and at the held-out midpoints
    let mut cells = Vec::with_capacity(cuts.len() + 1);
    let mut edges = alloc::vec![0.0];
    edges.extend_from_slice(cuts);
    edges.push(1.0);
    for w in edges.windows(2) {
        cells.push((w[0], w[1]));
    }
    let held_out: Vec<f64> = cells.iter().map(|&(a, b)| 0.5 * (a + b)).collect();

    let mut direct_at_cut: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(trials as usize); cuts.len()];
    let mut direct_at_mid: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(trials as usize); held_out.len()];
    for _ in 0..trials {
        let draw = sample_sticks(alpha, truncation, (0.0, 1.0), rng)?;
        let mut atoms: Vec<(f64, f64)> = draw
            .locations
            .iter()
            .copied()
            .zip(draw.weights.iter().copied())
            .collect();
        atoms.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let cdf_at = |x: f64| -> f64 {
            let end = atoms.partition_point(|&(loc, _)| loc <= x);
            atoms[..end].iter().map(|&(_, w)| w).sum()
        };
        for (i, &t) in cuts.iter().enumerate() {
            direct_at_cut[i].push(cdf_at(t));
        }
        for (i, &t) in held_out.iter().enumerate() {
            direct_at_mid[i].push(cdf_at(t));
        }
    }

    // composite route: Dirichlet masses over the cells, then independent
    // scaled draws inside each cell, evaluated at the held-out points
    let mut composite_at_mid: Vec<Vec<f64>> =
        alloc::vec![Vec::with_capacity(trials as usize); held_out.len()];
    for _ in 0..trials {
        let mut masses = Vec::with_capacity(cells.len());
        let mut total = 0.0;
        for &(a, b) in &cells {
            let shape = alpha * (b - a);
            let g = Gamma::new(shape, 1.0)
                .map_err(|e| Error::Numerical(format!("gamma sampler: {e}")))?
                .sample(rng);
            masses.push(g);
            total += g;
        }
        if total <= 0.0 {
            return Err(Error::Numerical("degenerate Dirichlet draw".to_string()));
        }
        for m in &mut masses {
            *m /= total;
        }
        let mut below = 0.0;
        for (i, &(a, b)) in cells.iter().enumerate() {
            let inner = sample_sticks(alpha * (b - a), truncation, (a, b), rng)?;
            let t = held_out[i];
            let inner_cdf: f64 = inner
                .locations
                .iter()
                .zip(&inner.weights)
                .filter(|&(&loc, _)| loc <= t)
                .map(|(_, &w)| w)
                .sum();
            composite_at_mid[i].push(below + masses[i] * inner_cdf);
            below += masses[i];
        }
    }

    let mut statistics = Vec::new();
    let m_tests = (cuts.len() + held_out.len()) as f64;
    let threshold = significance / m_tests;
    for (i, &t) in cuts.iter().enumerate() {
        let a = alpha * t;
        let b = alpha * (1.0 - t);
        let ks: KsResult = ks_one_sample_windowed(
            &mut direct_at_cut[i],
            |x| regularized_incomplete_beta(a, b, x.clamp(0.0, 1.0)).unwrap_or(f64::NAN),
            KS_RESOLUTION_FLOOR,
            1.0 - KS_RESOLUTION_FLOOR,
        );
        statistics.push(CheckStatistic {
            name: format!("marginal-beta@{t}"),
            statistic: ks.statistic,
            p_value: ks.p_value,
            pass: ks.p_value > threshold,
        });
    }
    for (i, &t) in held_out.iter().enumerate() {
        let ks = ks_two_sample(&mut direct_at_mid[i], &mut composite_at_mid[i]);
        statistics.push(CheckStatistic {
            name: format!("self-similarity@{t}"),
            statistic: ks.statistic,
            p_value: ks.p_value,
            pass: ks.p_value > threshold,
        });
    }
    let pass = statistics.iter().all(|s| s.pass);
    Ok(DpMarginalsReport {
        check: "dp-marginals".to_string(),
        alpha,
        partition: cuts.to_vec(),
        trials,
        significance,
        statistics,
        pass,
    })
}
