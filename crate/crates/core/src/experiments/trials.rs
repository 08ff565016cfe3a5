use rayon::prelude::*;
use serde::Serialize;

use crate::algorithms::{run_envy_capped_greedy, run_greedy_lexico, run_random_with, RunOptions};
use crate::error::{Error, Result};
use crate::ids::ClassId;
use crate::instance::Instance;
use crate::matching::{is_nonwasteful, Matching};
use crate::rng::trial_seed;
use crate::valuation::{cef1_check, optimistic_value, usw_opt, value_of_items};

use super::stats::{paired_difference, ratio_of_means, Stat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Algorithm {
    Random,
    GreedyLexico,
    EnvyCappedGreedy { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[derive(Default)]
pub struct TrialConfig {
    /// Build `A_i` and check `V_i*(A_i) <= 2 V_i` on every trial.
    pub audit: bool,
    /// Record `tau` and the class-0 trajectory (two classes only).
    pub track_class0: bool,
    /// Evaluate CEF1 on every trial.
    pub cef1: bool,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}


/// Everything measured on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub values: Vec<usize>,
    /// `V_i*(Y_j)` at `i * k + j`; the diagonal holds `V_i`.
    pub v_star: Vec<usize>,
    pub audit_values: Option<Vec<usize>>,
    pub usw: usize,
    pub nonwasteful: bool,
    pub cef1: Option<bool>,
    pub tau: Option<usize>,
    pub trajectory: Option<Vec<usize>>,
}

impl TrialRecord {
    pub fn audit_pass(&self) -> Option<bool> {
        self.audit_values.as_ref().map(|a| {
            a.iter()
                .zip(&self.values)
                .all(|(&audit, &v)| audit <= 2 * v)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairStat {
    pub envious: ClassId,
    pub envied: ClassId,
    /// `mean(V_i) / mean(V_i*(Y_j))`, absent when the denominator mean is 0.
    pub ratio: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditComparison {
    pub class: ClassId,
    pub other: ClassId,
    /// Paired difference `V_i*(A_i) - V_i*(Y_j)`.
    pub difference: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub instance: String,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub master_seed: u64,
    pub class_values: Vec<Stat>,
    pub usw: Stat,
    pub usw_opt: usize,
    pub usw_ratio: f64,
    pub nonwasteful_rate: f64,
    pub cef1_rate: Option<f64>,
    pub pairs: Vec<PairStat>,
    /// Minimum over pairs of the ratio of means, capped at 1 (1 when no
    /// pair has a positive denominator).
    pub cef_alpha_of_expectations: f64,
    /// Standard error of the minimizing pair's ratio.
    pub cef_alpha_stderr: f64,
    pub audit_pass_rate: Option<f64>,
    pub audit_values: Option<Vec<Stat>>,
    pub audit_comparisons: Option<Vec<AuditComparison>>,
    pub tau: Option<Stat>,
    pub tau_fraction: Option<f64>,
    pub mean_trajectory: Option<Vec<f64>>,
    /// Trajectory never increases and drops by at most 2 per item, in every
    /// trial.
    pub trajectories_monotone: Option<bool>,
}

impl TrialSummary {
    pub fn pair(&self, envious: ClassId, envied: ClassId) -> Option<&PairStat> {
        self.pairs
            .iter()
            .find(|p| p.envious == envious && p.envied == envied)
    }
}

fn run_one(inst: &Instance, algorithm: Algorithm, seed: u64, cfg: &TrialConfig) -> TrialRecord {
    let (matching, audit, tau, trajectory): (Matching, _, _, _) = match algorithm {
        Algorithm::Random => {
            let trace = run_random_with(
                inst,
                seed,
                RunOptions {
                    steps: false,
                    audit: cfg.audit,
                    track_class0: cfg.track_class0,
                },
            );
            (trace.matching, trace.audit, trace.tau, trace.n1_trajectory)
        }
        Algorithm::GreedyLexico => (run_greedy_lexico(inst), None, None, None),
        Algorithm::EnvyCappedGreedy { alpha } => {
            (run_envy_capped_greedy(inst, alpha), None, None, None)
        }
    };
    let k = inst.num_classes();
    let values: Vec<usize> = inst.classes().map(|c| matching.bundle(c).len()).collect();
    let mut v_star = vec![0; k * k];
    for i in inst.classes() {
        for j in inst.classes() {
            v_star[i.0 * k + j.0] = if i == j {
                values[i.0]
            } else {
                value_of_items(inst, i, matching.bundle(j).iter().copied())
            };
        }
    }
    let audit_values = audit.map(|bundles| {
        inst.classes()
            .map(|c| optimistic_value(inst, c, &bundles[c.0]).expect("audit items are valid"))
            .collect()
    });
    TrialRecord {
        usw: matching.size(),
        nonwasteful: is_nonwasteful(inst, &matching),
        cef1: cfg.cef1.then(|| cef1_check(inst, &matching)),
        values,
        v_star,
        audit_values,
        tau,
        trajectory,
    }
}

/// Runs `trials` independent trials; trial `t` uses seed
/// `trial_seed(master_seed, t)`. Records come back in trial order whatever
/// the thread count.
pub fn run_trial_records(
    inst: &Instance,
    algorithm: Algorithm,
    trials: usize,
    master_seed: u64,
    cfg: &TrialConfig,
) -> Result<Vec<TrialRecord>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let work = || {
        (0..trials)
            .into_par_iter()
            .map(|t| run_one(inst, algorithm, trial_seed(master_seed, t as u64), cfg))
            .collect()
    };
    if cfg.threads == 0 {
        Ok(work())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        Ok(pool.install(work))
    }
}

pub fn run_trials(
    inst: &Instance,
    algorithm: Algorithm,
    trials: usize,
    master_seed: u64,
    cfg: &TrialConfig,
) -> Result<TrialSummary> {
    let records = run_trial_records(inst, algorithm, trials, master_seed, cfg)?;
    Ok(summarize(inst, algorithm, master_seed, &records))
}

fn column(records: &[TrialRecord], f: impl Fn(&TrialRecord) -> f64) -> Vec<f64> {
    records.iter().map(f).collect()
}

fn rate(records: &[TrialRecord], f: impl Fn(&TrialRecord) -> bool) -> f64 {
    records.iter().filter(|r| f(r)).count() as f64 / records.len() as f64
}

pub fn summarize(
    inst: &Instance,
    algorithm: Algorithm,
    master_seed: u64,
    records: &[TrialRecord],
) -> TrialSummary {
    let k = inst.num_classes();
    let n = records.len();
    let values: Vec<Vec<f64>> = (0..k)
        .map(|i| column(records, |r| r.values[i] as f64))
        .collect();
    let class_values: Vec<Stat> = values.iter().map(|v| Stat::of(v)).collect();

    let mut pairs = Vec::new();
    let mut alpha = 1.0_f64;
    let mut alpha_se = 0.0;
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            let star = column(records, |r| r.v_star[i * k + j] as f64);
            let ratio = ratio_of_means(&values[i], &star);
            if let Some(r) = ratio {
                if r.mean < alpha {
                    alpha = r.mean;
                    alpha_se = r.stderr;
                }
            }
            pairs.push(PairStat {
                envious: ClassId(i),
                envied: ClassId(j),
                ratio,
            });
        }
    }

    let usw = Stat::of(&column(records, |r| r.usw as f64));
    let opt = usw_opt(inst);
    let audited = records[0].audit_values.is_some();
    let audit_values = audited.then(|| {
        (0..k)
            .map(|i| Stat::of(&column(records, |r| r.audit_values.as_ref().unwrap()[i] as f64)))
            .collect()
    });
    let audit_comparisons = audited.then(|| {
        let mut out = Vec::new();
        for i in 0..k {
            let a = column(records, |r| r.audit_values.as_ref().unwrap()[i] as f64);
            for j in (0..k).filter(|&j| j != i) {
                let y = column(records, |r| r.v_star[i * k + j] as f64);
                out.push(AuditComparison {
                    class: ClassId(i),
                    other: ClassId(j),
                    difference: paired_difference(&a, &y),
                });
            }
        }
        out
    });

    let tracked = records[0].trajectory.is_some();
    let tau = tracked.then(|| Stat::of(&column(records, |r| r.tau.unwrap_or(inst.num_items()) as f64)));
    let class0_size = inst.class_size(ClassId(0)) as f64;
    let mean_trajectory = tracked.then(|| {
        let len = records[0].trajectory.as_ref().unwrap().len();
        let mut acc = vec![0.0; len];
        for r in records {
            for (a, &x) in acc.iter_mut().zip(r.trajectory.as_ref().unwrap()) {
                *a += x as f64;
            }
        }
        acc.iter().map(|a| a / n as f64).collect()
    });
    let trajectories_monotone = tracked.then(|| {
        records.iter().all(|r| {
            r.trajectory
                .as_ref()
                .unwrap()
                .windows(2)
                .all(|w| w[1] <= w[0] && w[0] - w[1] <= 2)
        })
    });

    TrialSummary {
        instance: inst.name().to_string(),
        algorithm,
        trials: n,
        master_seed,
        usw_ratio: if opt == 0 { 1.0 } else { usw.mean / opt as f64 },
        usw,
        usw_opt: opt,
        nonwasteful_rate: rate(records, |r| r.nonwasteful),
        cef1_rate: records[0].cef1.is_some().then(|| rate(records, |r| r.cef1 == Some(true))),
        class_values,
        pairs,
        cef_alpha_of_expectations: alpha,
        cef_alpha_stderr: alpha_se,
        audit_pass_rate: audited.then(|| rate(records, |r| r.audit_pass() == Some(true))),
        audit_values,
        audit_comparisons,
        tau_fraction: tau.map(|t| t.mean / class0_size),
        tau,
        mean_trajectory,
        trajectories_monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_cef_impossibility, make_instance};

    #[test]
    fn single_trial_has_zero_stderr() {
        let inst = gen_cef_impossibility(10).unwrap();
        let s = run_trials(&inst, Algorithm::Random, 1, 3, &TrialConfig::default()).unwrap();
        assert_eq!(s.trials, 1);
        assert!(s.class_values.iter().all(|v| v.stderr == 0.0));
        assert_eq!(s.usw.stderr, 0.0);
    }

    #[test]
    fn same_seed_same_summary_across_thread_counts() {
        let inst = gen_cef_impossibility(20).unwrap();
        let cfg = TrialConfig {
            audit: true,
            track_class0: true,
            cef1: true,
            threads: 1,
        };
        let a = run_trials(&inst, Algorithm::Random, 64, 9, &cfg).unwrap();
        let b = run_trials(&inst, Algorithm::Random, 64, 9, &TrialConfig { threads: 4, ..cfg }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.audit_pass_rate, Some(1.0));
        assert_eq!(a.trajectories_monotone, Some(true));
    }

    #[test]
    fn contested_item_mean_is_one_half() {
        let inst = make_instance(2, vec![0, 1], vec![vec![0, 1]]).unwrap();
        let s = run_trials(&inst, Algorithm::Random, 10_000, 1, &TrialConfig::default()).unwrap();
        let v0 = s.class_values[0];
        assert!((v0.mean - 0.5).abs() <= 3.0 * v0.stderr, "{v0:?}");
    }

    #[test]
    fn deterministic_algorithms_have_no_spread() {
        let inst = gen_cef_impossibility(10).unwrap();
        let s = run_trials(&inst, Algorithm::GreedyLexico, 5, 0, &TrialConfig::default()).unwrap();
        assert_eq!(s.usw.stderr, 0.0);
        assert_eq!(s.nonwasteful_rate, 1.0);
        assert!(run_trials(&inst, Algorithm::Random, 0, 0, &TrialConfig::default()).is_err());
    }
}
