//! Prior-aware private querying strategy in four phases.
//!
//! Phase 1 bisects the prior mass of the minimizer law down to an interval
//! `I` whose mass sits in `[2*delta*L*H, 4*delta*L*H]`, where `H` bounds
//! that law's density from above. Phase 2 splits `I` into `L` cells of
//! equal prior mass and learns which cell holds the truth. Phase 3 queries
//! every cell's conditional median and keeps the same side in all cells,
//! which makes the kept cells at least `delta` apart while leaving the
//! side independent of the truth cell. Phase 4 plants one decoy per
//! off-truth cell (drawn from the prior restricted to the cell) and runs a
//! plain bisection in every cell, simulating the off-truth responses, so
//! that the emitted stream is a deterministic function of the `L`
//! candidates and the truth's index stays uniform among them.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

use crate::dp_prior::{nu_density_lower, nu_density_upper, MarginalNu};
use crate::transcript::{Phase, QueryTranscript};
use crate::{halving_count, Error, GradientOracle, Result};

/// Parameters of the prior-aware strategy.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BayesConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub privacy_level: u32,
    /// concentration of the function prior
    pub concentration: f64,
}

impl BayesConfig {
    pub fn new(epsilon: f64, delta: f64, privacy_level: u32, concentration: f64) -> Self {
        Self {
            epsilon,
            delta,
            privacy_level,
            concentration,
        }
    }

    /// Checks the strategy's regime `2*epsilon <= delta < 1/(2*L*H_alpha)`.
    pub fn validate(&self) -> Result<()> {
        if !(self.concentration > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "concentration must be positive, got {}",
                self.concentration
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.privacy_level < 1 {
            return Err(Error::InvalidConfig(
                "privacy level must be at least 1".into(),
            ));
        }
        if 2.0 * self.epsilon > self.delta {
            return Err(Error::InvalidConfig(format!(
                "2*epsilon <= delta violated: 2*{} > {}",
                self.epsilon, self.delta
            )));
        }
        let h_upper = nu_density_upper(self.concentration);
        if self.delta >= 1.0 / (2.0 * self.privacy_level as f64 * h_upper) {
            return Err(Error::InvalidConfig(format!(
                "delta >= 1/(2*L*H_alpha): {} >= {}",
                self.delta,
                1.0 / (2.0 * self.privacy_level as f64 * h_upper)
            )));
        }
        Ok(())
    }

    /// Phase-1 stopping threshold on the prior mass.
    pub fn mass_threshold(&self) -> f64 {
        4.0 * self.delta * self.privacy_level as f64 * nu_density_upper(self.concentration)
    }

    /// Hard per-run cap on the query count:
    /// `L*ceil(log2(delta/eps)) + c2*L + log2(1/(delta*L)) + 3L` with
    /// `c2 = log2(16*H_alpha/h_alpha)`.
    pub fn count_bound(&self) -> f64 {
        let l = self.privacy_level as f64;
        let h = nu_density_lower(self.concentration);
        let hh = nu_density_upper(self.concentration);
        let c2 = (16.0 * hh / h).log2();
        l * (self.delta / self.epsilon).log2().ceil() + c2 * l + (1.0 / (self.delta * l)).log2()
            + 3.0 * l
    }
}

/// An interval carried together with its prior-mass coordinates, so that
/// conditional quantiles reduce to rescaling.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MassCell {
    /// location interval
    pub x: (f64, f64),
    /// prior mass of `[0, x)` at the two endpoints
    pub u: (f64, f64),
}

impl MassCell {
    pub fn width(&self) -> f64 {
        self.x.1 - self.x.0
    }

    pub fn mass(&self) -> f64 {
        self.u.1 - self.u.0
    }
}

/// Everything the strategy derived on the way: the localized interval, the
/// equal-mass cut points, the truth cell, the per-cell medians, the kept
/// halves, and the planted candidates (the truth slot holds the final
/// estimate).
#[derive(Debug, Clone, serde::Serialize)]
pub struct PhasePlan {
    pub interval: MassCell,
    pub cut_points: Vec<f64>,
    pub cut_masses: Vec<f64>,
    pub truth_cell: usize,
    pub medians: Vec<f64>,
    pub left_half: bool,
    pub kept_cells: Vec<MassCell>,
    pub decoys: Vec<f64>,
}

type Segment = Vec<(f64, f64)>;

/// Phase 1: query the conditional median of the minimizer law until the
/// hosting interval's mass drops into `[threshold/2, threshold]`.
pub fn phase1_localize<O: GradientOracle>(
    cfg: &BayesConfig,
    nu: &MarginalNu,
    oracle: &mut O,
) -> Result<(MassCell, Segment)> {
    cfg.validate()?;
    let threshold = cfg.mass_threshold();
    let mut cell = MassCell {
        x: (0.0, 1.0),
        u: (0.0, 1.0),
    };
    let mut seg = Segment::new();
    while cell.mass() > threshold {
        let um = 0.5 * (cell.u.0 + cell.u.1);
        let q = nu.quantile(um)?;
        let r = oracle.gradient(q);
        seg.push((q, r));
        if r <= 0.0 {
            cell.u.0 = um;
            cell.x.0 = q;
        } else {
            cell.u.1 = um;
            cell.x.1 = q;
        }
    }
    Ok((cell, seg))
}

/// Phase 2: cut the interval into `L` cells of equal prior mass, query the
/// inner cut points, and identify the cell holding the truth.
pub fn phase2_partition<O: GradientOracle>(
    nu: &MarginalNu,
    interval: &MassCell,
    privacy_level: u32,
    oracle: &mut O,
) -> Result<(Vec<f64>, Vec<f64>, usize, Segment)> {
    let l = privacy_level as usize;
    let du = interval.mass();
    let mut cut_masses = Vec::with_capacity(l + 1);
    let mut cut_points = Vec::with_capacity(l + 1);
    for j in 0..=l {
        let u = interval.u.0 + du * j as f64 / l as f64;
        cut_masses.push(u);
        if j == 0 {
            cut_points.push(interval.x.0);
        } else if j == l {
            cut_points.push(interval.x.1);
        } else {
            cut_points.push(nu.quantile(u)?);
        }
    }
    let mut seg = Segment::new();
    let mut truth_cell = l - 1;
    let mut found = false;
    for j in 1..l {
        let q = cut_points[j];
        let r = oracle.gradient(q);
        seg.push((q, r));
        if !found && r > 0.0 {
            truth_cell = j - 1;
            found = true;
        }
    }
    Ok((cut_points, cut_masses, truth_cell, seg))
}

/// Phase 3: query every cell's conditional median; the response at the
/// truth cell's median picks the kept side, applied uniformly to all cells.
pub fn phase3_medians<O: GradientOracle>(
    nu: &MarginalNu,
    cut_points: &[f64],
    cut_masses: &[f64],
    truth_cell: usize,
    oracle: &mut O,
) -> Result<(Vec<f64>, bool, Vec<MassCell>, Segment)> {
    let l = cut_points.len() - 1;
    let mut medians = Vec::with_capacity(l);
    let mut median_masses = Vec::with_capacity(l);
    for j in 0..l {
        let um = 0.5 * (cut_masses[j] + cut_masses[j + 1]);
        median_masses.push(um);
        medians.push(nu.quantile(um)?);
    }
    let mut seg = Segment::new();
    let mut truth_response = 0.0;
    for (j, &m) in medians.iter().enumerate() {
        let r = oracle.gradient(m);
        seg.push((m, r));
        if j == truth_cell {
            truth_response = r;
        }
    }
    let left_half = truth_response > 0.0;
    let kept: Vec<MassCell> = (0..l)
        .map(|j| {
            if left_half {
                MassCell {
                    x: (cut_points[j], medians[j]),
                    u: (cut_masses[j], median_masses[j]),
                }
            } else {
                MassCell {
                    x: (medians[j], cut_points[j + 1]),
                    u: (median_masses[j], cut_masses[j + 1]),
                }
            }
        })
        .collect();
    Ok((medians, left_half, kept, seg))
}

/// Phase 4: draw one decoy per off-truth cell from the prior restricted to
/// the cell, then bisect every cell down to `epsilon`, feeding real
/// responses in the truth cell and simulated sign responses elsewhere.
pub fn phase4_decoy_search<O: GradientOracle, R: Rng + ?Sized>(
    nu: &MarginalNu,
    kept_cells: &[MassCell],
    truth_cell: usize,
    epsilon: f64,
    oracle: &mut O,
    rng: &mut R,
) -> Result<(Vec<f64>, f64, Segment)> {
    let l = kept_cells.len();
    let mut decoys = alloc::vec![f64::NAN; l];
    for (j, cell) in kept_cells.iter().enumerate() {
        if j == truth_cell {
            continue;
        }
        let u = cell.u.0 + cell.mass() * rng.gen::<f64>();
        decoys[j] = nu.quantile(u)?;
    }
    let mut seg = Segment::new();
    let mut estimate = f64::NAN;
    for (j, cell) in kept_cells.iter().enumerate() {
        let (mut lo, mut hi) = cell.x;
        while hi - lo > epsilon {
            let q = 0.5 * (lo + hi);
            let r = if j == truth_cell {
                oracle.gradient(q)
            } else if decoys[j] >= q {
                -1.0
            } else {
                1.0
            };
            seg.push((q, r));
            if r <= 0.0 {
                lo = q;
            } else {
                hi = q;
            }
        }
        if j == truth_cell {
            estimate = 0.5 * (lo + hi);
        }
    }
    decoys[truth_cell] = estimate;
    Ok((decoys, estimate, seg))
}

/// Outcome of one full run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BayesOutcome {
    pub transcript: QueryTranscript,
    pub estimate: f64,
    pub plan: PhasePlan,
}

/// Runs the four phases against `oracle` under the minimizer law `nu`.
pub fn run_bayes<O: GradientOracle, R: Rng + ?Sized>(
    cfg: &BayesConfig,
    nu: &MarginalNu,
    oracle: &mut O,
    rng: &mut R,
    seed: u64,
) -> Result<BayesOutcome> {
    let mut transcript = QueryTranscript::new(seed);
    let (interval, seg1) = phase1_localize(cfg, nu, oracle)?;
    for (q, r) in seg1 {
        transcript.push(q, r, Phase::P1);
    }
    let (cut_points, cut_masses, truth_cell, seg2) =
        phase2_partition(nu, &interval, cfg.privacy_level, oracle)?;
    for (q, r) in seg2 {
        transcript.push(q, r, Phase::P2);
    }
    let (medians, left_half, kept_cells, seg3) =
        phase3_medians(nu, &cut_points, &cut_masses, truth_cell, oracle)?;
    for (q, r) in seg3 {
        transcript.push(q, r, Phase::P3);
    }
    let (decoys, estimate, seg4) =
        phase4_decoy_search(nu, &kept_cells, truth_cell, cfg.epsilon, oracle, rng)?;
    for (q, r) in seg4 {
        transcript.push(q, r, Phase::P4);
    }
    Ok(BayesOutcome {
        transcript,
        estimate,
        plan: PhasePlan {
            interval,
            cut_points,
            cut_masses,
            truth_cell,
            medians,
            left_half,
            kept_cells,
            decoys,
        },
    })
}

/// The query sequence as the deterministic function of the planted
/// candidates: every phase-1/4 direction is recomputed from the candidates
/// alone. Replaying the run's own decoys reproduces its query stream.
pub fn replay_queries(cfg: &BayesConfig, nu: &MarginalNu, decoys: &[f64]) -> Result<Vec<f64>> {
    cfg.validate()?;
    if decoys.len() != cfg.privacy_level as usize {
        return Err(Error::InvalidConfig(format!(
            "expected {} candidates, got {}",
            cfg.privacy_level,
            decoys.len()
        )));
    }
    let probe = decoys[0];
    let threshold = cfg.mass_threshold();
    let mut queries = Vec::new();
    let mut cell = MassCell {
        x: (0.0, 1.0),
        u: (0.0, 1.0),
    };
    while cell.mass() > threshold {
        let um = 0.5 * (cell.u.0 + cell.u.1);
        let q = nu.quantile(um)?;
        queries.push(q);
        if probe >= q {
            cell.u.0 = um;
            cell.x.0 = q;
        } else {
            cell.u.1 = um;
            cell.x.1 = q;
        }
    }
    let l = cfg.privacy_level as usize;
    let du = cell.mass();
    let mut cut_points = Vec::with_capacity(l + 1);
    let mut cut_masses = Vec::with_capacity(l + 1);
    for j in 0..=l {
        let u = cell.u.0 + du * j as f64 / l as f64;
        cut_masses.push(u);
        cut_points.push(match j {
            0 => cell.x.0,
            j if j == l => cell.x.1,
            _ => nu.quantile(u)?,
        });
    }
    queries.extend(cut_points[1..l].iter().copied());
    let mut medians = Vec::with_capacity(l);
    let mut median_masses = Vec::with_capacity(l);
    for j in 0..l {
        let um = 0.5 * (cut_masses[j] + cut_masses[j + 1]);
        median_masses.push(um);
        let m = nu.quantile(um)?;
        medians.push(m);
        queries.push(m);
    }
    let left_half = probe < medians[cell_index_of(probe, &cut_points)];
    for j in 0..l {
        let (mut lo, mut hi) = if left_half {
            (cut_points[j], medians[j])
        } else {
            (medians[j], cut_points[j + 1])
        };
        while hi - lo > cfg.epsilon {
            let q = 0.5 * (lo + hi);
            queries.push(q);
            if decoys[j] >= q {
                lo = q;
            } else {
                hi = q;
            }
        }
    }
    Ok(queries)
}

/// Cell index of `value` among the cut points.
fn cell_index_of(value: f64, cut_points: &[f64]) -> usize {
    let idx = cut_points.partition_point(|&c| c <= value);
    idx.saturating_sub(1).min(cut_points.len() - 2)
}

/// Candidate estimates recovered from the query-only view by an adversary
/// who knows the configuration and the prior: it re-derives the phase
/// boundaries, decodes the directions from the later query locations, and
/// returns one localized estimate per kept cell (each within `epsilon` of
/// that cell's candidate).
pub fn reconstruct_candidates(
    cfg: &BayesConfig,
    nu: &MarginalNu,
    queries: &[f64],
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let l = cfg.privacy_level as usize;
    let threshold = cfg.mass_threshold();
    let k = halving_count(1.0, threshold) as usize;
    if queries.len() < k + (l - 1) + l {
        return Err(Error::Numerical(
            "query stream too short for the strategy's phase structure".into(),
        ));
    }
    let nearest = |target: f64, a: f64, b: f64| (target - a).abs() <= (target - b).abs();

    // phase 1: decode each direction from the next observed location
    let mut cell = MassCell {
        x: (0.0, 1.0),
        u: (0.0, 1.0),
    };
    for i in 0..k {
        let um = 0.5 * (cell.u.0 + cell.u.1);
        let q = nu.quantile(um)?;
        if (queries[i] - q).abs() > 1e-6 {
            return Err(Error::Numerical(format!(
                "phase-1 query {} deviates from the strategy's location {q}",
                queries[i]
            )));
        }
        let left = MassCell {
            x: (cell.x.0, q),
            u: (cell.u.0, um),
        };
        let right = MassCell {
            x: (q, cell.x.1),
            u: (um, cell.u.1),
        };
        let next_under = |c: &MassCell| -> Result<f64> {
            if i + 1 < k {
                nu.quantile(0.5 * (c.u.0 + c.u.1))
            } else if l >= 2 {
                nu.quantile(c.u.0 + c.mass() / l as f64)
            } else {
                nu.quantile(0.5 * (c.u.0 + c.u.1))
            }
        };
        let next_obs = queries[i + 1];
        cell = if nearest(next_obs, next_under(&right)?, next_under(&left)?) {
            right
        } else {
            left
        };
    }

    // phases 2 and 3 have data-independent locations given the interval
    let du = cell.mass();
    let mut cut_points = Vec::with_capacity(l + 1);
    let mut cut_masses = Vec::with_capacity(l + 1);
    for j in 0..=l {
        let u = cell.u.0 + du * j as f64 / l as f64;
        cut_masses.push(u);
        cut_points.push(match j {
            0 => cell.x.0,
            j if j == l => cell.x.1,
            _ => nu.quantile(u)?,
        });
    }
    let mut medians = Vec::with_capacity(l);
    let mut median_masses = Vec::with_capacity(l);
    for j in 0..l {
        let um = 0.5 * (cut_masses[j] + cut_masses[j + 1]);
        median_masses.push(um);
        medians.push(nu.quantile(um)?);
    }
    let mut idx = k + (l - 1) + l;

    // side of the kept halves, decoded from the first in-cell bisection query
    let cells_for = |left: bool| -> Vec<MassCell> {
        (0..l)
            .map(|j| {
                if left {
                    MassCell {
                        x: (cut_points[j], medians[j]),
                        u: (cut_masses[j], median_masses[j]),
                    }
                } else {
                    MassCell {
                        x: (medians[j], cut_points[j + 1]),
                        u: (median_masses[j], cut_masses[j + 1]),
                    }
                }
            })
            .collect()
    };
    let first_probe = |cells: &[MassCell]| -> Option<f64> {
        cells
            .iter()
            .find(|c| halving_count(c.width(), cfg.epsilon) >= 1)
            .map(|c| 0.5 * (c.x.0 + c.x.1))
    };
    let left_cells = cells_for(true);
    let right_cells = cells_for(false);
    let left_half = match (first_probe(&left_cells), first_probe(&right_cells)) {
        (Some(a), Some(b)) if idx < queries.len() => nearest(queries[idx], a, b),
        (Some(_), None) => true,
        (None, Some(_)) => false,
        _ => true,
    };
    let cells = if left_half { left_cells } else { right_cells };

    // per-cell bisection traces: directions decoded from the next location,
    // the last query localizes the candidate to within epsilon
    let mut candidates = Vec::with_capacity(l);
    for c in &cells {
        let steps = halving_count(c.width(), cfg.epsilon);
        if steps == 0 {
            candidates.push(0.5 * (c.x.0 + c.x.1));
            continue;
        }
        let (mut lo, mut hi) = c.x;
        let mut last = f64::NAN;
        for t in 0..steps {
            let q = 0.5 * (lo + hi);
            if idx >= queries.len() || (queries[idx] - q).abs() > 1e-6 {
                return Err(Error::Numerical(
                    "phase-4 trace deviates from the strategy's locations".into(),
                ));
            }
            last = q;
            idx += 1;
            if t + 1 < steps {
                let next_left = 0.5 * (lo + q);
                let next_right = 0.5 * (q + hi);
                if nearest(queries[idx], next_right, next_left) {
                    lo = q;
                } else {
                    hi = q;
                }
            }
        }
        candidates.push(last);
    }
    if idx != queries.len() {
        return Err(Error::Numerical(
            "query stream does not match the strategy's phase structure".into(),
        ));
    }
    Ok(candidates)
}

/// The reconstruction adversary: recovers the candidates from the view and
/// picks one uniformly.
pub fn reconstruction_adversary<R: Rng + ?Sized>(
    cfg: &BayesConfig,
    nu: &MarginalNu,
    view: &crate::transcript::AdversaryView<'_>,
    rng: &mut R,
) -> Result<f64> {
    let candidates = reconstruct_candidates(cfg, nu, view.queries)?;
    Ok(candidates[rng.gen_range(0..candidates.len())])
}
