//! Fixed-truth private querying strategy.
//!
//! The learner plants `L` guesses (pairs of queries `eps` apart) whose
//! locations do not depend on which of the planted candidates holds the
//! minimizer, so an eavesdropper watching the query stream cannot single
//! one out. Two regimes:
//!
//! * `delta <= 2^-L`: all guesses ride the bisection path (midpoints), and
//!   the terminal bisection resolves the last interval of length `2^-L`.
//! * `delta > 2^-L`: a guess at 0, `K` bisection guesses, and the remaining
//!   `L-K-1` guesses on an even grid over the localized interval, where `K`
//!   solves `2^-K/(L-K) in [delta, 2*delta]`; the terminal bisection
//!   resolves one grid cell.
//!
//! Once any guess verifies, every later decision pretends the responses
//! pointed right, and the terminal phase is padded with trivial queries at
//! 1 so that the emitted sequence is identical for every planted truth.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec::Vec;

use crate::transcript::{Phase, QueryTranscript};
use crate::{halving_count, Error, GradientOracle, Result};

/// Parameters of the fixed-truth strategy.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MinimaxConfig {
    /// learner accuracy: the estimate lands within `epsilon/2` of the truth
    pub epsilon: f64,
    /// adversary accuracy the strategy defends against
    pub delta: f64,
    /// privacy level: the adversary should succeed with rate at most `1/L`
    pub privacy_level: u32,
}

impl MinimaxConfig {
    pub fn new(epsilon: f64, delta: f64, privacy_level: u32) -> Self {
        Self {
            epsilon,
            delta,
            privacy_level,
        }
    }

    /// Checks the strategy's regime `2*epsilon <= delta <= 1/L`.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.privacy_level < 1 || self.privacy_level > 40 {
            return Err(Error::InvalidConfig(format!(
                "privacy level must be in [1, 40], got {}",
                self.privacy_level
            )));
        }
        if 2.0 * self.epsilon > self.delta {
            return Err(Error::InvalidConfig(format!(
                "2*epsilon <= delta violated: 2*{} > {}",
                self.epsilon, self.delta
            )));
        }
        if self.delta > 1.0 / self.privacy_level as f64 {
            return Err(Error::InvalidConfig(format!(
                "delta <= 1/L violated: {} > 1/{}",
                self.delta, self.privacy_level
            )));
        }
        Ok(())
    }

    /// True when `delta > 2^-L`, which switches the strategy to the grid
    /// regime.
    pub fn hybrid(&self) -> bool {
        self.delta > 0.5f64.powi(self.privacy_level as i32)
    }

    /// Total queries the strategy emits, including trivial ones.
    pub fn emitted_query_count(&self) -> Result<u64> {
        let l = self.privacy_level as u64;
        if self.hybrid() {
            let k = solve_grid_level(self.delta, self.privacy_level)? as u64;
            let cell = grid_cell_width(self.privacy_level, k as u32);
            Ok(2 + 2 * k + 2 * (l - k - 1) + halving_count(cell, self.epsilon))
        } else {
            let base = 0.5f64.powi(self.privacy_level as i32);
            Ok(2 * l + halving_count(base, self.epsilon))
        }
    }

    /// Queries counted toward the complexity (the trivial query at 0 in the
    /// grid regime is excluded).
    pub fn reported_query_count(&self) -> Result<u64> {
        Ok(self.emitted_query_count()? - if self.hybrid() { 1 } else { 0 })
    }
}

/// Smallest `K` in `{0, ..., L-1}` with `2^-K/(L-K)` in `[delta, 2*delta]`.
/// Such a `K` always exists when `2^-L < delta <= 1/L`.
pub fn solve_grid_level(delta: f64, privacy_level: u32) -> Result<u32> {
    if delta <= 0.5f64.powi(privacy_level as i32) {
        return Err(Error::Infeasible(format!(
            "grid level needs delta > 2^-L, got delta={delta}, L={privacy_level}"
        )));
    }
    for k in 0..privacy_level {
        let cell = grid_cell_width(privacy_level, k);
        if cell >= delta && cell <= 2.0 * delta {
            return Ok(k);
        }
    }
    Err(Error::Infeasible(format!(
        "no grid level in [delta, 2*delta] for delta={delta}, L={privacy_level}"
    )))
}

fn grid_cell_width(privacy_level: u32, k: u32) -> f64 {
    0.5f64.powi(k as i32) / (privacy_level - k) as f64
}

/// Default per-run query budget: generous enough for every legitimate run,
/// small enough to flag a non-terminating strategy quickly.
pub fn default_query_budget(epsilon: f64, privacy_level: u32) -> u64 {
    10 * (halving_count(1.0, epsilon) + 2 * privacy_level as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stage {
    TrivialZero,
    ZeroProbe,
    GuessAnchor(u32),
    GuessProbe(u32),
    GridAnchor(u32),
    GridProbe(u32),
    Bisect,
    Fill,
}

/// Resumable state machine for the fixed-truth strategy. One query at a
/// time: [`MinimaxSearch::next_query`] yields the next location,
/// [`MinimaxSearch::observe`] feeds the response back. The separable
/// multidimensional runner drives several machines in lockstep.
#[derive(Debug, Clone)]
pub struct MinimaxSearch {
    cfg: MinimaxConfig,
    hybrid: bool,
    grid_level: u32,
    bisect_guesses: u32,
    stage: Stage,
    /// the strategy's working interval, updated only by guess anchors and
    /// following the pretend-right rule after a verified guess
    interval: (f64, f64),
    /// grid geometry, set when the grid phase starts
    grid_base: (f64, f64),
    grid_width: f64,
    /// grid cell known to hold the minimizer (no-correct runs)
    cell: (f64, f64),
    cell_cut: bool,
    /// terminal bisection interval
    bisect: (f64, f64),
    /// verified guess, as the interval it certifies
    correct: Option<(f64, f64)>,
    last_anchor: (f64, f64),
    emitted: u64,
    target: u64,
    transcript: QueryTranscript,
}

impl MinimaxSearch {
    pub fn new(cfg: MinimaxConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let hybrid = cfg.hybrid();
        let grid_level = if hybrid {
            solve_grid_level(cfg.delta, cfg.privacy_level)?
        } else {
            0
        };
        let bisect_guesses = if hybrid { grid_level } else { cfg.privacy_level };
        let stage = if hybrid {
            Stage::TrivialZero
        } else {
            Stage::GuessAnchor(0)
        };
        Ok(Self {
            cfg,
            hybrid,
            grid_level,
            bisect_guesses,
            stage,
            interval: (0.0, 1.0),
            grid_base: (0.0, 1.0),
            grid_width: 1.0,
            cell: (0.0, 1.0),
            cell_cut: false,
            bisect: (0.0, 1.0),
            correct: None,
            last_anchor: (0.0, 0.0),
            emitted: 0,
            target: cfg.emitted_query_count()?,
            transcript: QueryTranscript::new(seed),
        })
    }

    pub fn config(&self) -> &MinimaxConfig {
        &self.cfg
    }

    /// Location and tag of the next query, or `None` once the run is over.
    pub fn next_query(&self) -> Option<(f64, Phase)> {
        match self.stage {
            Stage::TrivialZero => Some((0.0, Phase::Fill)),
            Stage::ZeroProbe => Some((self.cfg.epsilon, Phase::Guess)),
            Stage::GuessAnchor(_) => {
                Some((0.5 * (self.interval.0 + self.interval.1), Phase::Guess))
            }
            Stage::GuessProbe(_) => Some((self.last_anchor.0 + self.cfg.epsilon, Phase::Guess)),
            Stage::GridAnchor(i) => {
                Some((self.grid_base.0 + i as f64 * self.grid_width, Phase::Grid))
            }
            Stage::GridProbe(_) => Some((self.last_anchor.0 + self.cfg.epsilon, Phase::Grid)),
            Stage::Bisect => Some((0.5 * (self.bisect.0 + self.bisect.1), Phase::Bisect)),
            Stage::Fill => {
                if self.emitted < self.target {
                    Some((1.0, Phase::Fill))
                } else {
                    None
                }
            }
        }
    }

    /// Feeds back the oracle's response to the query just emitted.
    pub fn observe(&mut self, query: f64, response: f64) {
        let phase = match self.stage {
            Stage::TrivialZero | Stage::Fill => Phase::Fill,
            Stage::ZeroProbe | Stage::GuessAnchor(_) | Stage::GuessProbe(_) => Phase::Guess,
            Stage::GridAnchor(_) | Stage::GridProbe(_) => Phase::Grid,
            Stage::Bisect => Phase::Bisect,
        };
        self.transcript.push(query, response, phase);
        self.emitted += 1;
        debug_assert!(self.emitted <= self.target, "overran the planned length");
        match self.stage {
            Stage::TrivialZero => {
                self.last_anchor = (query, response);
                self.stage = Stage::ZeroProbe;
            }
            Stage::ZeroProbe => {
                if self.last_anchor.1 <= 0.0 && response > 0.0 {
                    self.correct = Some((self.last_anchor.0, query));
                }
                // pretending right after a correct guess keeps the interval
                // at [0, 1] here, same as the honest update for the anchor 0
                self.advance_after_guess(0);
            }
            Stage::GuessAnchor(i) => {
                self.last_anchor = (query, response);
                self.stage = Stage::GuessProbe(i);
            }
            Stage::GuessProbe(i) => {
                let (q, r_anchor) = self.last_anchor;
                if self.correct.is_none() && r_anchor <= 0.0 && response > 0.0 {
                    self.correct = Some((q, query));
                }
                let go_right = self.correct.is_some() || r_anchor <= 0.0;
                self.interval = if go_right {
                    (q, self.interval.1)
                } else {
                    (self.interval.0, q)
                };
                self.advance_after_guess(i + 1);
            }
            Stage::GridAnchor(i) => {
                self.last_anchor = (query, response);
                if self.correct.is_none() {
                    if response <= 0.0 {
                        self.cell.0 = query;
                    } else if !self.cell_cut {
                        self.cell.1 = query;
                        self.cell_cut = true;
                    }
                }
                self.stage = Stage::GridProbe(i);
            }
            Stage::GridProbe(i) => {
                let (q, r_anchor) = self.last_anchor;
                if self.correct.is_none() && r_anchor <= 0.0 && response > 0.0 {
                    self.correct = Some((q, query));
                }
                if i < self.grid_count() {
                    self.stage = Stage::GridAnchor(i + 1);
                } else {
                    self.enter_terminal(self.cell);
                }
            }
            Stage::Bisect => {
                if response <= 0.0 {
                    self.bisect.0 = query;
                } else {
                    self.bisect.1 = query;
                }
                if self.bisect.1 - self.bisect.0 <= self.cfg.epsilon {
                    self.stage = Stage::Fill;
                }
            }
            Stage::Fill => {}
        }
    }

    fn grid_count(&self) -> u32 {
        self.cfg.privacy_level - self.grid_level - 1
    }

    fn advance_after_guess(&mut self, next: u32) {
        if next < self.bisect_guesses {
            self.stage = Stage::GuessAnchor(next);
            return;
        }
        if self.hybrid {
            self.grid_base = self.interval;
            self.grid_width =
                (self.interval.1 - self.interval.0) / (self.cfg.privacy_level - self.grid_level) as f64;
            self.cell = self.interval;
            self.cell_cut = false;
            if self.grid_count() >= 1 {
                self.stage = Stage::GridAnchor(1);
            } else {
                self.enter_terminal(self.cell);
            }
        } else {
            self.enter_terminal(self.interval);
        }
    }

    fn enter_terminal(&mut self, interval: (f64, f64)) {
        if self.correct.is_some() || interval.1 - interval.0 <= self.cfg.epsilon {
            self.bisect = interval;
            self.stage = Stage::Fill;
        } else {
            self.bisect = interval;
            self.stage = Stage::Bisect;
        }
    }

    /// Midpoint of the certified interval: the verified guess when one
    /// exists, otherwise the terminal bisection interval.
    pub fn estimate(&self) -> f64 {
        match self.correct {
            Some((lo, hi)) => 0.5 * (lo + hi),
            None => 0.5 * (self.bisect.0 + self.bisect.1),
        }
    }

    pub fn is_done(&self) -> bool {
        self.stage == Stage::Fill && self.emitted >= self.target
    }

    pub fn transcript(&self) -> &QueryTranscript {
        &self.transcript
    }

    pub fn into_transcript(self) -> QueryTranscript {
        self.transcript
    }
}

/// Runs the strategy to completion against `oracle`.
///
/// Returns the transcript and the estimate; the estimate is within
/// `epsilon/2` of the minimizer for every function in the piecewise-linear
/// family. `seed` is recorded for provenance; the strategy itself is
/// deterministic.
pub fn run_minimax<O: GradientOracle>(
    cfg: &MinimaxConfig,
    oracle: &mut O,
    seed: u64,
) -> Result<(QueryTranscript, f64)> {
    let mut search = MinimaxSearch::new(*cfg, seed)?;
    let budget = default_query_budget(cfg.epsilon, cfg.privacy_level);
    let mut steps = 0u64;
    while let Some((q, _)) = search.next_query() {
        if steps >= budget {
            return Err(Error::BudgetExceeded(budget));
        }
        let r = oracle.gradient(q);
        search.observe(q, r);
        steps += 1;
    }
    let estimate = search.estimate();
    Ok((search.into_transcript(), estimate))
}

/// The `L` planted candidate intervals of length `epsilon`: truths whose
/// minimizer lies in any of them produce byte-identical query sequences
/// under [`run_minimax`]. Intervals are returned in increasing order with
/// pairwise left-endpoint gaps of at least `delta`.
pub fn extract_planted_candidates(cfg: &MinimaxConfig) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let eps = cfg.epsilon;
    let mut out = Vec::new();
    if cfg.hybrid() {
        let k = solve_grid_level(cfg.delta, cfg.privacy_level)?;
        out.push((0.0, eps));
        // bisection-path anchors, same float recurrence as the machine
        let mut lo = 0.0f64;
        for _ in 0..k {
            let anchor = 0.5 * (lo + 1.0);
            out.push((anchor, anchor + eps));
            lo = anchor;
        }
        let width = (1.0 - lo) / (cfg.privacy_level - k) as f64;
        for i in 1..(cfg.privacy_level - k) {
            let anchor = lo + i as f64 * width;
            out.push((anchor, anchor + eps));
        }
    } else {
        let mut lo = 0.0f64;
        for _ in 0..cfg.privacy_level {
            let anchor = 0.5 * (lo + 1.0);
            out.push((anchor, anchor + eps));
            lo = anchor;
        }
    }
    Ok(out)
}
