//! Convex functions on `[0,1]` with first-order oracles, plus the resisting
//! oracle that adaptively constructs worst-case functions against a learner.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::{Error, GradientOracle, Result};

/// Which subgradient to serve at a breakpoint, where the subdifferential is
/// the full interval between the adjacent slopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubgradientRule {
    /// Midpoint of the one-sided slopes (keeps responses symmetric).
    #[default]
    Midpoint,
    Left,
    Right,
}

/// A convex piecewise-linear function on `[0,1]` with a unique minimizer,
/// stored as breakpoints and one slope per segment.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PiecewiseLinearConvex {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
}

impl PiecewiseLinearConvex {
    /// Validates and builds the function.
    ///
    /// Requirements: breakpoints strictly increasing from 0 to 1, one slope
    /// per segment, slopes nondecreasing, and no zero slope (a flat segment
    /// would make the minimizer non-unique).
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidConfig(
                "need at least two breakpoints".to_string(),
            ));
        }
        if slopes.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidConfig(format!(
                "{} segments require {} slopes, got {}",
                breakpoints.len() - 1,
                breakpoints.len() - 1,
                slopes.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidConfig(
                "breakpoints must start at 0 and end at 1".to_string(),
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig(
                "breakpoints must be strictly increasing".to_string(),
            ));
        }
        if slopes.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("slopes must be finite".to_string()));
        }
        if slopes.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig(
                "slopes must be nondecreasing (convexity)".to_string(),
            ));
        }
        if slopes.iter().any(|&s| s == 0.0) {
            return Err(Error::InvalidConfig(
                "zero slope would make the minimizer non-unique".to_string(),
            ));
        }
        Ok(Self {
            breakpoints,
            slopes,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// The unique minimizer: the breakpoint where the slopes cross zero, or
    /// the relevant endpoint when every slope has one sign.
    pub fn minimizer(&self) -> f64 {
        if self.slopes[0] > 0.0 {
            return 0.0;
        }
        if *self.slopes.last().unwrap() < 0.0 {
            return 1.0;
        }
        let first_pos = self.slopes.iter().position(|&s| s > 0.0).unwrap();
        self.breakpoints[first_pos]
    }

    /// Subgradient at `q` under the given breakpoint rule.
    pub fn subgradient_with(&self, q: f64, rule: SubgradientRule) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::DomainQuery(q));
        }
        // exact breakpoint hit
        if let Ok(i) = self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&q).unwrap())
        {
            if i == 0 {
                return Ok(self.slopes[0]);
            }
            if i == self.breakpoints.len() - 1 {
                return Ok(*self.slopes.last().unwrap());
            }
            return Ok(match rule {
                SubgradientRule::Left => self.slopes[i - 1],
                SubgradientRule::Right => self.slopes[i],
                SubgradientRule::Midpoint => 0.5 * (self.slopes[i - 1] + self.slopes[i]),
            });
        }
        let seg = self.breakpoints.partition_point(|&b| b < q) - 1;
        Ok(self.slopes[seg])
    }
}

/// Subgradient of `f` at `q`, serving the midpoint of the one-sided slopes
/// at breakpoints.
pub fn eval_subgradient(f: &PiecewiseLinearConvex, q: f64) -> Result<f64> {
    f.subgradient_with(q, SubgradientRule::Midpoint)
}

impl GradientOracle for PiecewiseLinearConvex {
    fn gradient(&mut self, q: f64) -> f64 {
        eval_subgradient(self, q).expect("learner query inside [0,1]")
    }
}

/// The V-shaped function with slopes `(-base_slope, +base_slope)` breaking
/// at `minimizer`. The witness family for planting minimizers anywhere in
/// the open interval.
pub fn make_sandwich_function(minimizer: f64, base_slope: f64) -> Result<PiecewiseLinearConvex> {
    if !(minimizer > 0.0 && minimizer < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "sandwich minimizer must satisfy 0 < m < 1, got {minimizer}"
        )));
    }
    if !(base_slope > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sandwich base slope must be positive, got {base_slope}"
        )));
    }
    PiecewiseLinearConvex::new(
        alloc::vec![0.0, minimizer, 1.0],
        alloc::vec![-base_slope, base_slope],
    )
}

/// Adaptive oracle defending a host interval: every answer stays consistent
/// with some convex function whose minimizer lies in the current active
/// interval, and that interval shrinks by at most half per in-interval
/// query. Any strategy therefore needs at least `ceil(log2(|host|/eps))`
/// queries inside the host to pin the minimizer down to `eps`.
#[derive(Debug, Clone)]
pub struct ResistingOracle {
    host: (f64, f64),
    active: (f64, f64),
    /// issued (query, gradient) pairs, sorted by query
    answered: Vec<(f64, f64)>,
}

impl ResistingOracle {
    pub fn new(host_lo: f64, host_hi: f64) -> Result<Self> {
        if !(0.0 <= host_lo && host_lo < host_hi && host_hi <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "host interval [{host_lo}, {host_hi}] must be a nonempty subinterval of [0,1]"
            )));
        }
        Ok(Self {
            host: (host_lo, host_hi),
            active: (host_lo, host_hi),
            answered: Vec::new(),
        })
    }

    pub fn active_interval(&self) -> (f64, f64) {
        self.active
    }

    pub fn host_interval(&self) -> (f64, f64) {
        self.host
    }

    pub fn answered(&self) -> &[(f64, f64)] {
        &self.answered
    }

    /// Values of the nearest answered neighbors of `q`, with synthetic
    /// sentinels -1 below 0 and +1 above 1 keeping everything in [-1, 1].
    fn neighbor_values(&self, q: f64) -> (f64, f64) {
        let idx = self.answered.partition_point(|&(x, _)| x < q);
        let left = if idx == 0 { -1.0 } else { self.answered[idx - 1].1 };
        let right = if idx == self.answered.len() {
            1.0
        } else {
            self.answered[idx].1
        };
        (left, right)
    }

    fn record(&mut self, q: f64, value: f64) -> f64 {
        let idx = self.answered.partition_point(|&(x, _)| x < q);
        self.answered.insert(idx, (q, value));
        value
    }

    /// Answers the query, shrinking the active interval when the query lands
    /// inside it. The new active interval is the larger of the two sides
    /// (ties keep the right half), and the response sign points into it.
    pub fn respond(&mut self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::DomainQuery(q));
        }
        // repeated query: a function answers consistently
        if let Some(&(_, v)) = self
            .answered
            .iter()
            .find(|&&(x, _)| x == q)
        {
            return Ok(v);
        }
        let (lo, hi) = self.active;
        let (v_left, v_right) = self.neighbor_values(q);
        let value = if q > lo && q < hi {
            let keep_right = hi - q >= q - lo;
            if keep_right {
                self.active = (q, hi);
                0.5 * (v_left + 0.0) // negative: minimizer is to the right
            } else {
                self.active = (lo, q);
                0.5 * (0.0 + v_right) // positive: minimizer is to the left
            }
        } else if q <= lo {
            0.5 * (v_left + v_right.min(0.0))
        } else {
            0.5 * (v_left.max(0.0) + v_right)
        };
        Ok(self.record(q, value))
    }

    /// A concrete convex function consistent with every issued answer and
    /// minimized at the midpoint of the active interval. This is the
    /// constructive witness that the answer history is always realizable.
    pub fn witness_function(&self) -> Result<PiecewiseLinearConvex> {
        let mid = 0.5 * (self.active.0 + self.active.1);
        // nodes strictly left/right of the kink
        let left_nodes: Vec<(f64, f64)> = self
            .answered
            .iter()
            .copied()
            .filter(|&(q, _)| q < mid)
            .collect();
        let right_nodes: Vec<(f64, f64)> = self
            .answered
            .iter()
            .copied()
            .filter(|&(q, _)| q > mid)
            .collect();

        let mut breaks = alloc::vec![0.0];
        let mut slopes = Vec::new();
        // one segment per left node, split at midpoints between nodes
        for (i, &(q, v)) in left_nodes.iter().enumerate() {
            slopes.push(v);
            let next = if i + 1 < left_nodes.len() {
                0.5 * (q + left_nodes[i + 1].0)
            } else {
                0.5 * (q + mid)
            };
            breaks.push(next);
        }
        // approach segments on both sides of the kink
        let last_neg = left_nodes.last().map(|&(_, v)| v).unwrap_or(-1.0);
        let first_pos = right_nodes.first().map(|&(_, v)| v).unwrap_or(1.0);
        slopes.push(0.5 * last_neg);
        breaks.push(mid);
        slopes.push(0.5 * first_pos);
        if let Some(&(q0, _)) = right_nodes.first() {
            breaks.push(0.5 * (mid + q0));
            for (i, &(q, v)) in right_nodes.iter().enumerate() {
                slopes.push(v);
                if i + 1 < right_nodes.len() {
                    breaks.push(0.5 * (q + right_nodes[i + 1].0));
                }
            }
        }
        breaks.push(1.0);
        PiecewiseLinearConvex::new(breaks, slopes)
    }
}

impl GradientOracle for ResistingOracle {
    fn gradient(&mut self, q: f64) -> f64 {
        self.respond(q).expect("learner query inside [0,1]")
    }
}

/// Result of one bisection run.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionRun {
    pub estimate: f64,
    pub interval: (f64, f64),
    pub queries: Vec<f64>,
}

/// Plain bisection on `[lo, hi]` down to accuracy `eps`, steering right on
/// responses `<= 0` (the minimizer is at or right of the query).
pub fn bisection_learner<O: GradientOracle>(
    oracle: &mut O,
    lo: f64,
    hi: f64,
    eps: f64,
) -> BisectionRun {
    let (mut lo, mut hi) = (lo, hi);
    let mut queries = Vec::new();
    while hi - lo > eps {
        let q = 0.5 * (lo + hi);
        queries.push(q);
        if oracle.gradient(q) <= 0.0 {
            lo = q;
        } else {
            hi = q;
        }
    }
    BisectionRun {
        estimate: 0.5 * (lo + hi),
        interval: (lo, hi),
        queries,
    }
}

/// Outcome of running the bisection learner against the resisting oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistingRun {
    /// queries that landed inside the host interval (closed)
    pub host_queries: u64,
    pub total_queries: u64,
    pub estimate: f64,
}

/// Runs the module's bisection learner on `[0,1]` against a resisting
/// oracle defending `host`, and counts the queries that land in the host
/// interval. For any `|host| > eps` the count is at least
/// `ceil(log2(|host|/eps))`.
pub fn resisting_count(host: (f64, f64), eps: f64, budget: u64) -> Result<ResistingRun> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "accuracy must be positive, got {eps}"
        )));
    }
    let mut oracle = ResistingOracle::new(host.0, host.1)?;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut total = 0u64;
    let mut in_host = 0u64;
    while hi - lo > eps {
        if total >= budget {
            return Err(Error::BudgetExceeded(budget));
        }
        let q = 0.5 * (lo + hi);
        total += 1;
        if q >= host.0 && q <= host.1 {
            in_host += 1;
        }
        if oracle.respond(q)? <= 0.0 {
            lo = q;
        } else {
            hi = q;
        }
    }
    Ok(ResistingRun {
        host_queries: in_host,
        total_queries: total,
        estimate: 0.5 * (lo + hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halving_count;
    use proptest::prelude::*;
    use rand::Rng;

    fn abs_fn(m: f64) -> PiecewiseLinearConvex {
        make_sandwich_function(m, 1.0).unwrap()
    }

    #[test]
    fn subgradient_of_v_function() {
        let f = abs_fn(0.3);
        assert_eq!(eval_subgradient(&f, 0.5).unwrap(), 1.0);
        assert_eq!(eval_subgradient(&f, 0.3).unwrap(), 0.0);
        assert_eq!(eval_subgradient(&f, 0.1).unwrap(), -1.0);
        assert_eq!(f.subgradient_with(0.3, SubgradientRule::Left).unwrap(), -1.0);
        assert_eq!(f.subgradient_with(0.3, SubgradientRule::Right).unwrap(), 1.0);
        assert!(eval_subgradient(&f, 1.5).is_err());
        assert!(eval_subgradient(&f, -0.1).is_err());
    }

    #[test]
    fn sandwich_construction() {
        let f = make_sandwich_function(0.3, 1.0).unwrap();
        assert_eq!(f.breakpoints(), &[0.0, 0.3, 1.0]);
        assert_eq!(f.slopes(), &[-1.0, 1.0]);
        assert_eq!(f.minimizer(), 0.3);
        let g = make_sandwich_function(0.5, 2.0).unwrap();
        assert_eq!(g.slopes(), &[-2.0, 2.0]);
        assert_eq!(g.minimizer(), 0.5);
        assert!(make_sandwich_function(0.0, 1.0).is_err());
        assert!(make_sandwich_function(1.0, 1.0).is_err());
        assert!(make_sandwich_function(0.5, 0.0).is_err());
    }

    #[test]
    fn rejects_flat_and_nonconvex() {
        assert!(PiecewiseLinearConvex::new(alloc::vec![0.0, 0.5, 1.0], alloc::vec![1.0, -1.0]).is_err());
        assert!(PiecewiseLinearConvex::new(alloc::vec![0.0, 0.5, 1.0], alloc::vec![-1.0, 0.0]).is_err());
        assert!(PiecewiseLinearConvex::new(alloc::vec![0.0, 0.5, 0.5, 1.0], alloc::vec![-1.0, 1.0, 2.0]).is_err());
        assert!(PiecewiseLinearConvex::new(alloc::vec![0.1, 1.0], alloc::vec![1.0]).is_err());
    }

    #[test]
    fn boundary_minimizers() {
        let inc = PiecewiseLinearConvex::new(alloc::vec![0.0, 0.4, 1.0], alloc::vec![1.0, 2.0]).unwrap();
        assert_eq!(inc.minimizer(), 0.0);
        let dec = PiecewiseLinearConvex::new(alloc::vec![0.0, 0.4, 1.0], alloc::vec![-2.0, -1.0]).unwrap();
        assert_eq!(dec.minimizer(), 1.0);
    }

    #[test]
    fn resisting_replay_examples() {
        let mut o = ResistingOracle::new(0.0, 1.0).unwrap();
        // tie at the exact midpoint keeps the right half, answer negative
        let r = o.respond(0.5).unwrap();
        assert!(r < 0.0);
        assert_eq!(o.active_interval(), (0.5, 1.0));
        let r = o.respond(0.75).unwrap();
        assert!(r < 0.0);
        assert_eq!(o.active_interval(), (0.75, 1.0));
        // out-of-interval query to the left: negative, interval unchanged
        let r = o.respond(0.2).unwrap();
        assert!(r < 0.0);
        assert_eq!(o.active_interval(), (0.75, 1.0));
        // repeated query answers identically
        let r2 = o.respond(0.2).unwrap();
        assert_eq!(r, r2);
        // domain error
        assert!(o.respond(1.2).is_err());
    }

    #[test]
    fn resisting_halving_is_bounded() {
        let mut o = ResistingOracle::new(0.0, 1.0).unwrap();
        let mut prev = 1.0;
        let mut rng = crate::trial_rng(7, 0);
        for _ in 0..40 {
            let (lo, hi) = o.active_interval();
            let q = lo + (hi - lo) * rng.gen::<f64>();
            if q <= lo || q >= hi {
                continue;
            }
            o.respond(q).unwrap();
            let (lo2, hi2) = o.active_interval();
            let len = hi2 - lo2;
            assert!(len >= prev / 2.0 - 1e-15, "shrank below half: {len} < {prev}/2");
            prev = len;
        }
    }

    #[test]
    fn resisting_count_meets_lower_bound() {
        let eps = 2f64.powi(-6);
        let run = resisting_count((0.0, 1.0), eps, 1000).unwrap();
        assert!(run.host_queries >= 6, "{}", run.host_queries);
        let run = resisting_count((0.0, 0.5), eps, 1000).unwrap();
        assert!(run.host_queries >= 5, "{}", run.host_queries);
        // nothing to resolve when the accuracy already covers the host
        let run = resisting_count((0.4, 0.45), 0.1, 1000).unwrap();
        assert!(run.host_queries >= 0);
    }

    #[test]
    fn resisting_count_budget() {
        assert_eq!(
            resisting_count((0.0, 1.0), 2f64.powi(-20), 5),
            Err(Error::BudgetExceeded(5))
        );
    }

    #[test]
    fn witness_realizes_answers() {
        let mut o = ResistingOracle::new(0.2, 0.9).unwrap();
        let mut rng = crate::trial_rng(11, 0);
        for _ in 0..25 {
            let q = rng.gen::<f64>();
            o.respond(q).unwrap();
        }
        let f = o.witness_function().unwrap();
        let (lo, hi) = o.active_interval();
        let m = f.minimizer();
        assert!(m >= lo && m <= hi, "minimizer {m} outside ({lo}, {hi})");
        for &(q, v) in o.answered() {
            let got = eval_subgradient(&f, q).unwrap();
            assert_eq!(got, v, "witness disagrees at {q}");
        }
    }

    proptest! {
        #[test]
        fn subgradient_monotone(m in 0.01f64..0.99, s in 0.1f64..3.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let f = make_sandwich_function(m, s).unwrap();
            let (x, y) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(eval_subgradient(&f, x).unwrap() <= eval_subgradient(&f, y).unwrap());
        }

        #[test]
        fn subgradient_signs_around_minimizer(m in 0.05f64..0.95, q in 0.0f64..1.0) {
            let f = make_sandwich_function(m, 1.0).unwrap();
            let g = eval_subgradient(&f, q).unwrap();
            if q < m {
                prop_assert!(g < 0.0);
            } else if q > m {
                prop_assert!(g > 0.0);
            }
        }

        #[test]
        fn resisting_realizable_after_random_sequences(seed in 0u64..500) {
            let mut o = ResistingOracle::new(0.1, 0.8).unwrap();
            let mut rng = crate::trial_rng(777, seed);
            for _ in 0..15 {
                let q: f64 = rng.gen();
                o.respond(q).unwrap();
            }
            let f = o.witness_function().unwrap();
            let (lo, hi) = o.active_interval();
            prop_assert!(f.minimizer() >= lo && f.minimizer() <= hi);
            for &(q, v) in o.answered() {
                prop_assert_eq!(eval_subgradient(&f, q).unwrap(), v);
            }
            // sign rule relative to the active interval
            for &(q, v) in o.answered() {
                if q <= lo {
                    prop_assert!(v < 0.0);
                } else if q >= hi {
                    prop_assert!(v > 0.0);
                }
            }
        }

        #[test]
        fn resisting_count_randomized_configs(seed in 0u64..100) {
            let mut rng = crate::trial_rng(4242, seed);
            let lo: f64 = rng.gen::<f64>() * 0.4;
            let len = 0.15 + rng.gen::<f64>() * (0.99 - 0.4 - 0.15);
            let hi = (lo + len).min(1.0);
            let k = rng.gen_range(4u32..11);
            let eps = (hi - lo) * 2f64.powi(-(k as i32)) * (0.7 + 0.6 * rng.gen::<f64>());
            let need = halving_count(hi - lo, eps);
            let run = resisting_count((lo, hi), eps, 10_000).unwrap();
            prop_assert!(
                run.host_queries >= need,
                "forced only {} in-host queries, need {}",
                run.host_queries,
                need
            );
        }
    }
}
