//! Separable multidimensional extension: the one-dimensional private
//! strategy runs along each coordinate in parallel over vector queries,
//! with accuracy and privacy measured in the max norm and a per-axis
//! privacy budget of `L^(1/d)`.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::adversary::covering_number_1d;
use crate::convex_fn::PiecewiseLinearConvex;
use crate::learner_minimax::{MinimaxConfig, MinimaxSearch};
use crate::transcript::{Phase, QueryTranscript};
use crate::{Error, Result};

/// Oracle returning the whole gradient vector for a vector query.
pub trait VectorGradientOracle {
    fn gradient(&mut self, q: &[f64]) -> Vec<f64>;
}

/// A sum of one-dimensional convex functions, one per coordinate; its
/// gradient is the vector of per-coordinate subgradients.
#[derive(Debug, Clone)]
pub struct SeparableFunction {
    pub coordinates: Vec<PiecewiseLinearConvex>,
}

impl SeparableFunction {
    pub fn minimizer(&self) -> Vec<f64> {
        self.coordinates.iter().map(|f| f.minimizer()).collect()
    }
}

impl VectorGradientOracle for SeparableFunction {
    fn gradient(&mut self, q: &[f64]) -> Vec<f64> {
        assert_eq!(q.len(), self.coordinates.len());
        self.coordinates
            .iter()
            .zip(q)
            .map(|(f, &qi)| {
                crate::convex_fn::eval_subgradient(f, qi).expect("query inside [0,1]")
            })
            .collect()
    }
}

/// Adapter for closures.
pub struct FnVectorOracle<F>(pub F);

impl<F: FnMut(&[f64]) -> Vec<f64>> VectorGradientOracle for FnVectorOracle<F> {
    fn gradient(&mut self, q: &[f64]) -> Vec<f64> {
        (self.0)(q)
    }
}

/// Parameters of the separable strategy. The total privacy level must be a
/// perfect `dims`-th power so that each axis gets an integer budget.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MultidimConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub privacy_level: u32,
    pub dims: u32,
}

impl MultidimConfig {
    /// The integer `d`-th root of the privacy level, or an error when none
    /// exists.
    pub fn per_axis_level(&self) -> Result<u32> {
        if self.dims == 0 {
            return Err(Error::InvalidConfig("dims must be at least 1".to_string()));
        }
        for r in 1..=self.privacy_level {
            let mut pow = 1u64;
            for _ in 0..self.dims {
                pow = pow.saturating_mul(r as u64);
            }
            if pow == self.privacy_level as u64 {
                return Ok(r);
            }
            if pow > self.privacy_level as u64 {
                break;
            }
        }
        Err(Error::InvalidConfig(format!(
            "privacy level {} is not a perfect power of dims {}",
            self.privacy_level, self.dims
        )))
    }

    pub fn per_axis_config(&self) -> Result<MinimaxConfig> {
        let axis = MinimaxConfig::new(self.epsilon, self.delta, self.per_axis_level()?);
        axis.validate()?;
        Ok(axis)
    }
}

/// Transcript of a separable run: the vector query stream plus each axis's
/// one-dimensional transcript (whose projection it is).
#[derive(Debug, Clone, serde::Serialize)]
pub struct VectorTranscript {
    pub queries: Vec<Vec<f64>>,
    pub phases: Vec<Phase>,
    pub per_axis: Vec<QueryTranscript>,
    pub seed: u64,
}

impl VectorTranscript {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Runs one one-dimensional strategy per coordinate in lockstep: the `j`-th
/// vector query packs the `j`-th query of every axis, axes that finish
/// early are padded with trivial queries at 1, and each axis's decisions
/// consume only its own response component.
pub fn run_minimax_separable<O: VectorGradientOracle>(
    cfg: &MultidimConfig,
    oracle: &mut O,
    seed: u64,
) -> Result<(VectorTranscript, Vec<f64>)> {
    let axis_cfg = cfg.per_axis_config()?;
    let mut machines: Vec<MinimaxSearch> = (0..cfg.dims)
        .map(|i| MinimaxSearch::new(axis_cfg, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let mut queries = Vec::new();
    let mut phases = Vec::new();
    loop {
        let next: Vec<Option<(f64, Phase)>> = machines.iter().map(|m| m.next_query()).collect();
        if next.iter().all(|n| n.is_none()) {
            break;
        }
        let q: Vec<f64> = next.iter().map(|n| n.map_or(1.0, |(q, _)| q)).collect();
        let phase = next
            .iter()
            .flatten()
            .map(|&(_, p)| p)
            .next()
            .unwrap_or(Phase::Fill);
        let r = oracle.gradient(&q);
        if r.len() != cfg.dims as usize {
            return Err(Error::Numerical(format!(
                "oracle returned {} components for {} dims",
                r.len(),
                cfg.dims
            )));
        }
        for (i, m) in machines.iter_mut().enumerate() {
            if next[i].is_some() {
                m.observe(q[i], r[i]);
            }
        }
        queries.push(q);
        phases.push(phase);
    }
    let estimate: Vec<f64> = machines.iter().map(|m| m.estimate()).collect();
    let per_axis: Vec<QueryTranscript> = machines.into_iter().map(|m| m.into_transcript()).collect();
    Ok((
        VectorTranscript {
            queries,
            phases,
            per_axis,
            seed,
        },
        estimate,
    ))
}

/// Covering number of a product candidate set in the max norm: the product
/// of the per-axis one-dimensional covering numbers.
pub fn covering_number_product(axes: &[Vec<f64>], radius: f64) -> usize {
    axes.iter()
        .map(|axis| covering_number_1d(axis, radius))
        .product()
}
