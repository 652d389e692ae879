//! Monte Carlo audit harness: measures accuracy, adversary success against
//! the `1/L` privacy target, and query counts against the theoretical
//! bounds, producing machine-readable reports that are byte-reproducible
//! from `(config, seed)`.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::Rng;

use crate::adversary::{covering_set_adversary, guess_pair_adversary, proportional_sampling};
use crate::convex_fn::make_sandwich_function;
use crate::dp_prior::{nu_density_upper, sample_stick_breaking, MarginalNu};
use crate::learner_bayes::{reconstruction_adversary, run_bayes, BayesConfig};
use crate::learner_minimax::{extract_planted_candidates, run_minimax, MinimaxConfig};
use crate::stats::{binomial_se, chi_square_uniform, mean_and_se, wilson_interval, WilsonInterval};
use crate::{trial_rng, Error, Result};

const WILSON_Z: f64 = 1.959_963_984_540_054; // 95% two-sided

/// Which setting a report audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditSetting {
    Minimax,
    Bayes,
}

/// Adversaries audited against the fixed-truth strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimaxAdversary {
    GuessPair,
    CoveringSet,
    Proportional,
}

impl MinimaxAdversary {
    fn name(&self) -> &'static str {
        match self {
            Self::GuessPair => "guess-pair",
            Self::CoveringSet => "covering-set",
            Self::Proportional => "proportional",
        }
    }
}

/// Adversaries audited against the prior-aware strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BayesAdversary {
    Proportional,
    Reconstruction,
}

impl BayesAdversary {
    fn name(&self) -> &'static str {
        match self {
            Self::Proportional => "proportional",
            Self::Reconstruction => "reconstruction",
        }
    }
}

/// How the fixed-truth audit draws truths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthSampler {
    /// Uniform over the planted candidate intervals: the witness family on
    /// which the privacy guarantee is tight.
    PlantedCandidates,
    /// Minimizer uniform on (0, 1): exercises accuracy everywhere.
    UniformMinimizer,
}

/// Success tally for one adversary.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AdversaryStats {
    pub successes: u64,
    pub rate: f64,
    pub wilson: WilsonInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CountStats {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TheoryBounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AuditParams {
    pub epsilon: f64,
    pub delta: f64,
    pub privacy_level: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concentration: Option<f64>,
}

/// One audit's full result. `pass` requires perfect accuracy, every
/// adversary's upper Wilson bound at most `1/L` plus the configured slack,
/// and query counts inside the theoretical bounds (plus the
/// setting-specific structural gates).
#[derive(Debug, Clone, serde::Serialize)]
pub struct AuditReport {
    pub setting: AuditSetting,
    pub params: AuditParams,
    pub trials: u64,
    pub seed: u64,
    pub accuracy_rate: f64,
    pub adversary_success: BTreeMap<String, AdversaryStats>,
    pub query_count: CountStats,
    pub theory: TheoryBounds,
    pub privacy_budget: f64,
    pub privacy_slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript_invariance: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_window_queries: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_inequality_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoy_min_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_index_chi2_p: Option<f64>,
    pub pass: bool,
}

/// Displayed bound formulas for the two settings. The lower bound in the
/// prior-drawn setting uses the constructive witness constant `2^-alpha`
/// (the probability that the first stick exceeds half), which is not
/// claimed tight.
pub fn theoretical_bounds(
    setting: AuditSetting,
    epsilon: f64,
    delta: f64,
    privacy_level: u32,
    concentration: Option<f64>,
) -> Result<TheoryBounds> {
    let l = privacy_level as f64;
    match setting {
        AuditSetting::Minimax => {
            let cfg = MinimaxConfig::new(epsilon, delta, privacy_level);
            cfg.validate()?;
            let lower = 2.0 * l + (delta / epsilon).log2() - 2.0;
            let upper = if l >= (1.0 / delta).log2() {
                2.0 * l + (delta / epsilon).log2()
            } else {
                l + (1.0 / epsilon).log2()
            };
            Ok(TheoryBounds { lower, upper })
        }
        AuditSetting::Bayes => {
            let alpha = concentration.ok_or_else(|| {
                Error::InvalidConfig("bayes bounds need a concentration".to_string())
            })?;
            let cfg = BayesConfig::new(epsilon, delta, privacy_level, alpha);
            cfg.validate()?;
            let c1 = 2f64.powf(-alpha);
            let lower = c1 * l * (delta / epsilon).log2();
            let h = crate::dp_prior::nu_density_lower(alpha);
            let hh = nu_density_upper(alpha);
            let c2 = (16.0 * hh / h).log2();
            let upper = l * (delta / epsilon).log2() + c2 * l + (1.0 / (delta * l)).log2();
            Ok(TheoryBounds { lower, upper })
        }
    }
}

fn tally(estimates: &[f64], truth: f64, delta: f64) -> bool {
    estimates.iter().any(|&e| (e - truth).abs() <= delta / 2.0)
}

/// Audits the fixed-truth strategy over `trials` independent runs.
pub fn audit_minimax(
    cfg: &MinimaxConfig,
    trials: u64,
    sampler: TruthSampler,
    adversaries: &[MinimaxAdversary],
    master_seed: u64,
) -> Result<AuditReport> {
    cfg.validate()?;
    if trials < 1_000 {
        return Err(Error::InvalidConfig(format!(
            "audits need at least 10^3 trials, got {trials}"
        )));
    }
    let candidates = extract_planted_candidates(cfg)?;
    let candidate_mids: Vec<f64> = candidates.iter().map(|&(a, b)| 0.5 * (a + b)).collect();
    let mut successes: BTreeMap<String, u64> = adversaries
        .iter()
        .map(|a| (a.name().to_string(), 0))
        .collect();
    let mut accurate = 0u64;
    let mut count_min = u64::MAX;
    let mut count_max = 0u64;
    let mut count_sum = 0u64;
    let mut reference_queries: Option<Vec<f64>> = None;
    let mut invariant = true;
    for t in 0..trials {
        let mut rng = trial_rng(master_seed, t);
        let truth = match sampler {
            TruthSampler::PlantedCandidates => {
                let (lo, hi) = candidates[rng.gen_range(0..candidates.len())];
                let mut u: f64 = rng.gen();
                while u == 0.0 {
                    u = rng.gen();
                }
                lo + (hi - lo) * u
            }
            TruthSampler::UniformMinimizer => {
                let mut u: f64 = rng.gen();
                while u == 0.0 || u == 1.0 {
                    u = rng.gen();
                }
                u
            }
        };
        let mut f = make_sandwich_function(truth, 0.25 + 0.75 * rng.gen::<f64>())?;
        let (transcript, estimate) = run_minimax(cfg, &mut f, master_seed ^ t)?;
        if (estimate - truth).abs() <= cfg.epsilon / 2.0 {
            accurate += 1;
        }
        let n = transcript.reported_query_count();
        count_min = count_min.min(n);
        count_max = count_max.max(n);
        count_sum += n;
        if sampler == TruthSampler::PlantedCandidates {
            match &reference_queries {
                None => reference_queries = Some(transcript.queries.clone()),
                Some(r) => {
                    if r != &transcript.queries {
                        invariant = false;
                    }
                }
            }
        }
        let view = transcript.adversary_view();
        for adv in adversaries {
            let estimate = match adv {
                MinimaxAdversary::GuessPair => guess_pair_adversary(&view, cfg.epsilon, &mut rng)?,
                MinimaxAdversary::CoveringSet => {
                    covering_set_adversary(&candidate_mids, cfg.delta / 2.0, &mut rng)?
                }
                MinimaxAdversary::Proportional => proportional_sampling(&view, &mut rng)?,
            };
            if tally(&[estimate], truth, cfg.delta) {
                *successes.get_mut(adv.name()).unwrap() += 1;
            }
        }
    }
    let theory = theoretical_bounds(
        AuditSetting::Minimax,
        cfg.epsilon,
        cfg.delta,
        cfg.privacy_level,
        None,
    )?;
    let budget = 1.0 / cfg.privacy_level as f64;
    let slack = 4.0 * binomial_se(budget, trials);
    let adversary_success: BTreeMap<String, AdversaryStats> = successes
        .into_iter()
        .map(|(name, s)| {
            (
                name,
                AdversaryStats {
                    successes: s,
                    rate: s as f64 / trials as f64,
                    wilson: wilson_interval(s, trials, WILSON_Z),
                },
            )
        })
        .collect();
    let accuracy_rate = accurate as f64 / trials as f64;
    let privacy_ok = adversary_success
        .values()
        .all(|a| a.wilson.high <= budget + slack);
    let counts_ok = (count_max as f64) <= theory.upper.ceil()
        && (count_min as f64) >= theory.lower - 1e-9;
    let invariance = if sampler == TruthSampler::PlantedCandidates {
        Some(invariant)
    } else {
        None
    };
    let pass = accuracy_rate == 1.0 && privacy_ok && counts_ok && invariance.unwrap_or(true);
    Ok(AuditReport {
        setting: AuditSetting::Minimax,
        params: AuditParams {
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            privacy_level: cfg.privacy_level,
            concentration: None,
        },
        trials,
        seed: master_seed,
        accuracy_rate,
        adversary_success,
        query_count: CountStats {
            min: count_min,
            max: count_max,
            mean: count_sum as f64 / trials as f64,
        },
        theory,
        privacy_budget: budget,
        privacy_slack: slack,
        transcript_invariance: invariance,
        mean_window_queries: None,
        window_inequality_ok: None,
        decoy_min_gap: None,
        truth_index_chi2_p: None,
        pass,
    })
}

/// Audits the prior-aware strategy over `trials` independent draws from
/// the prior.
pub fn audit_bayes(
    cfg: &BayesConfig,
    trials: u64,
    adversaries: &[BayesAdversary],
    master_seed: u64,
) -> Result<AuditReport> {
    cfg.validate()?;
    if trials < 1_000 {
        return Err(Error::InvalidConfig(format!(
            "audits need at least 10^3 trials, got {trials}"
        )));
    }
    let nu = MarginalNu::new(cfg.concentration)?;
    let l = cfg.privacy_level as usize;
    let mut successes: BTreeMap<String, u64> = adversaries
        .iter()
        .map(|a| (a.name().to_string(), 0))
        .collect();
    let mut accurate = 0u64;
    let mut count_min = u64::MAX;
    let mut count_max = 0u64;
    let mut count_sum = 0u64;
    let mut window_counts = Vec::with_capacity(trials as usize);
    let mut truth_cells = alloc::vec![0u64; l];
    let mut min_gap = f64::INFINITY;
    for t in 0..trials {
        let mut rng = trial_rng(master_seed, t);
        let mut truth = sample_stick_breaking(cfg.concentration, 1e-12, &mut rng)?;
        let x_star = truth.minimizer;
        let out = run_bayes(cfg, &nu, &mut truth, &mut rng, master_seed ^ t)?;
        if (out.estimate - x_star).abs() <= cfg.epsilon / 2.0 {
            accurate += 1;
        }
        let n = out.transcript.reported_query_count();
        count_min = count_min.min(n);
        count_max = count_max.max(n);
        count_sum += n;
        let in_window = out
            .transcript
            .queries
            .iter()
            .filter(|&&q| (q - x_star).abs() <= cfg.delta / 2.0)
            .count();
        window_counts.push(in_window as f64);
        truth_cells[out.plan.truth_cell] += 1;
        for i in 0..l {
            for j in 0..i {
                min_gap = min_gap.min((out.plan.decoys[i] - out.plan.decoys[j]).abs());
            }
        }
        let view = out.transcript.adversary_view();
        for adv in adversaries {
            let estimate = match adv {
                BayesAdversary::Proportional => proportional_sampling(&view, &mut rng)?,
                BayesAdversary::Reconstruction => {
                    reconstruction_adversary(cfg, &nu, &view, &mut rng)?
                }
            };
            if tally(&[estimate], x_star, cfg.delta) {
                *successes.get_mut(adv.name()).unwrap() += 1;
            }
        }
    }
    let theory = theoretical_bounds(
        AuditSetting::Bayes,
        cfg.epsilon,
        cfg.delta,
        cfg.privacy_level,
        Some(cfg.concentration),
    )?;
    let budget = 1.0 / cfg.privacy_level as f64;
    let slack = 4.0 * binomial_se(budget, trials);
    let adversary_success: BTreeMap<String, AdversaryStats> = successes
        .into_iter()
        .map(|(name, s)| {
            (
                name,
                AdversaryStats {
                    successes: s,
                    rate: s as f64 / trials as f64,
                    wilson: wilson_interval(s, trials, WILSON_Z),
                },
            )
        })
        .collect();
    let accuracy_rate = accurate as f64 / trials as f64;
    let privacy_ok = adversary_success
        .values()
        .all(|a| a.wilson.high <= budget + slack);
    // the emitted total dominates L times the mean number of queries that
    // land within delta/2 of the truth, up to sampling error
    let (win_mean, win_se) = mean_and_se(&window_counts);
    let mean_count = count_sum as f64 / trials as f64;
    let window_ok =
        mean_count >= cfg.privacy_level as f64 * win_mean - 4.0 * cfg.privacy_level as f64 * win_se;
    let (_, chi2_p) = chi_square_uniform(&truth_cells)?;
    let counts_ok = (count_max as f64) <= cfg.count_bound();
    let separation_ok = min_gap > cfg.delta * (1.0 - 1e-6);
    let pass = accuracy_rate == 1.0
        && privacy_ok
        && counts_ok
        && window_ok
        && separation_ok
        && chi2_p > 1e-3;
    Ok(AuditReport {
        setting: AuditSetting::Bayes,
        params: AuditParams {
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            privacy_level: cfg.privacy_level,
            concentration: Some(cfg.concentration),
        },
        trials,
        seed: master_seed,
        accuracy_rate,
        adversary_success,
        query_count: CountStats {
            min: count_min,
            max: count_max,
            mean: mean_count,
        },
        theory,
        privacy_budget: budget,
        privacy_slack: slack,
        transcript_invariance: None,
        mean_window_queries: Some(win_mean),
        window_inequality_ok: Some(window_ok),
        decoy_min_gap: Some(min_gap),
        truth_index_chi2_p: Some(chi2_p),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_bounds_minimax_examples() {
        let b = theoretical_bounds(AuditSetting::Minimax, 2f64.powi(-10), 2f64.powi(-6), 4, None)
            .unwrap();
        assert_eq!(b.lower, 10.0);
        assert_eq!(b.upper, 14.0); // 4 < log2(1/delta) = 6, so L + log2(1/eps)
        let b = theoretical_bounds(AuditSetting::Minimax, 2f64.powi(-10), 2f64.powi(-3), 4, None)
            .unwrap();
        assert_eq!(b.upper, 15.0); // 4 >= 3, so 2L + log2(delta/eps)
        assert!(theoretical_bounds(AuditSetting::Minimax, 0.3, 0.25, 4, None).is_err());
    }

    #[test]
    fn theory_bounds_bayes_witness_constant() {
        let b = theoretical_bounds(
            AuditSetting::Bayes,
            2f64.powi(-12),
            2f64.powi(-8),
            2,
            Some(1.0),
        )
        .unwrap();
        assert!((b.lower - 4.0).abs() < 1e-12, "{}", b.lower);
        assert!(b.upper > b.lower);
        assert!(
            theoretical_bounds(AuditSetting::Bayes, 2f64.powi(-12), 2f64.powi(-8), 2, None)
                .is_err()
        );
    }

    #[test]
    fn minimax_audit_small_smoke() {
        let cfg = MinimaxConfig::new(2f64.powi(-10), 2f64.powi(-6), 4);
        let report = audit_minimax(
            &cfg,
            1_000,
            TruthSampler::PlantedCandidates,
            &[MinimaxAdversary::GuessPair, MinimaxAdversary::CoveringSet],
            2024,
        )
        .unwrap();
        assert_eq!(report.accuracy_rate, 1.0);
        assert_eq!(report.transcript_invariance, Some(true));
        assert_eq!(report.query_count.min, 14);
        assert_eq!(report.query_count.max, 14);
        assert!(report.pass, "report: {report:?}");
        let gp = &report.adversary_success["guess-pair"];
        assert!((gp.rate - 0.25).abs() < 0.06, "rate {}", gp.rate);
    }

    #[test]
    fn minimax_audit_uniform_accuracy() {
        let cfg = MinimaxConfig::new(2f64.powi(-10), 2f64.powi(-6), 2);
        let report = audit_minimax(
            &cfg,
            1_000,
            TruthSampler::UniformMinimizer,
            &[MinimaxAdversary::Proportional],
            7,
        )
        .unwrap();
        assert_eq!(report.accuracy_rate, 1.0);
        assert_eq!(report.transcript_invariance, None);
    }

    #[test]
    fn bayes_audit_small_smoke() {
        let cfg = BayesConfig::new(2f64.powi(-12), 2f64.powi(-8), 2, 0.5);
        let report = audit_bayes(
            &cfg,
            1_000,
            &[BayesAdversary::Proportional, BayesAdversary::Reconstruction],
            99,
        )
        .unwrap();
        assert_eq!(report.accuracy_rate, 1.0);
        assert!(report.window_inequality_ok.unwrap());
        assert!(report.decoy_min_gap.unwrap() > cfg.delta * (1.0 - 1e-6));
        assert!(report.truth_index_chi2_p.unwrap() > 1e-3);
        assert!(report.pass, "report: {report:?}");
    }

    #[test]
    fn audit_rejects_tiny_trials() {
        let cfg = MinimaxConfig::new(2f64.powi(-10), 2f64.powi(-6), 4);
        assert!(audit_minimax(&cfg, 10, TruthSampler::PlantedCandidates, &[], 1).is_err());
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = MinimaxConfig::new(2f64.powi(-10), 2f64.powi(-6), 2);
        let a = audit_minimax(
            &cfg,
            1_000,
            TruthSampler::PlantedCandidates,
            &[MinimaxAdversary::GuessPair],
            5150,
        )
        .unwrap();
        let b = audit_minimax(
            &cfg,
            1_000,
            TruthSampler::PlantedCandidates,
            &[MinimaxAdversary::GuessPair],
            5150,
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
