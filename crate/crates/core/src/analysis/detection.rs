use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::AttackModel;
use crate::error::{usage, Result};
use crate::protocol::{run_session, Secret, SessionConfig};
use crate::seed::{derive_seed, stream_rng};

const SECRET_STREAM: u64 = u64::MAX - 1;
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEstimate {
    pub attack: String,
    pub n: usize,
    pub l: usize,
    pub trials: usize,
    pub decoys_checked: u64,
    pub decoy_failures: u64,
    pub per_decoy_rate: f64,
    pub session_abort_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl DetectionEstimate {
    /// Binomial standard error of the per-decoy rate.
    pub fn std_error(&self) -> f64 {
        let p = self.per_decoy_rate;
        (p * (1.0 - p) / self.decoys_checked.max(1) as f64).sqrt()
    }
}

/// Wilson score interval at 95% for `successes` out of `total`.
pub fn wilson_interval(successes: u64, total: u64) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    let n = total as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if successes == total { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

/// Secret used for trial sessions: random, derived from the trial seed.
pub fn trial_secret(config: &SessionConfig) -> Result<Secret> {
    Secret::random(config.n, config.len, &mut stream_rng(config.seed, SECRET_STREAM))
}

/// Runs `trials` independent sessions with seeds derived from
/// `(config.seed, trial)` and tallies decoy failures and aborts. The result
/// does not depend on `jobs`.
pub fn estimate_detection(config: &SessionConfig, attack: &AttackModel, trials: usize, jobs: usize) -> Result<DetectionEstimate> {
    if trials == 0 {
        return Err(usage("trials must be at least 1"));
    }
    config.validate()?;
    attack.validate(config.n)?;
    let run = |t: usize| -> Result<(u64, u64, u64)> {
        let mut trial = config.clone();
        trial.seed = derive_seed(config.seed, t as u64);
        trial.record_transcript = false;
        let secret = trial_secret(&trial)?;
        let result = run_session(&trial, &secret, attack)?;
        Ok((result.decoy_errors() as u64, result.decoys_checked() as u64, u64::from(result.outcome.is_abort())))
    };
    let add = |a: (u64, u64, u64), b: (u64, u64, u64)| (a.0 + b.0, a.1 + b.1, a.2 + b.2);
    let (failures, checked, aborts) = if jobs <= 1 {
        (0..trials).map(run).try_fold((0, 0, 0), |acc, r| r.map(|r| add(acc, r)))?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| usage(format!("cannot start {jobs} workers: {e}")))?;
        pool.install(|| (0..trials).into_par_iter().map(run).try_reduce(|| (0, 0, 0), |a, b| Ok(add(a, b))))?
    };
    let rate = if checked == 0 { 0.0 } else { failures as f64 / checked as f64 };
    let (ci_low, ci_high) = wilson_interval(failures, checked);
    Ok(DetectionEstimate {
        attack: attack.label().into(),
        n: config.n,
        l: config.len,
        trials,
        decoys_checked: checked,
        decoy_failures: failures,
        per_decoy_rate: rate,
        session_abort_rate: aborts as f64 / trials as f64,
        ci_low,
        ci_high,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_point() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
    }

    #[test]
    fn honest_rate_is_zero() {
        let config = SessionConfig::new(2, 4, 1);
        let est = estimate_detection(&config, &AttackModel::None, 200, 1).unwrap();
        assert_eq!(est.decoy_failures, 0);
        assert_eq!(est.decoys_checked, 200 * 8);
        assert_eq!(est.session_abort_rate, 0.0);
    }

    #[test]
    fn jobs_do_not_change_result() {
        let config = SessionConfig::new(2, 2, 3);
        let a = estimate_detection(&config, &AttackModel::MeasureResend, 300, 1).unwrap();
        let b = estimate_detection(&config, &AttackModel::MeasureResend, 300, 4).unwrap();
        assert_eq!(a, b);
    }
}
