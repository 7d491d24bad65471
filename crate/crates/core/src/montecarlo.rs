//! Monte Carlo estimators: absorption (extinction / survival) probabilities,
//! first-passage times below the critical value, the `T(p)` sweep, and a
//! batch check of almost-sure extinction.
//!
//! Trial `i` of a batch seeded with `s` always uses the stream
//! `sub_seed(s, i)`, so batches can be split, run in parallel and merged
//! without changing any result. Per-trial results are reduced with integer
//! counters, which keeps merges exact.

use std::fmt::Write as _;
use std::ops::{Add, Range};

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::certify::{self, Theorem, Verdict};
use crate::error::{Error, Result};
use crate::maps::MapSpec;
use crate::rds::{sub_seed, Classifier, OutcomeKind, RdsConfig, Simulator, TailTracker, Trap};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
pub const DEFAULT_PROPORTION_TRIALS: u64 = 10_000;
pub const DEFAULT_SWEEP_TRIALS: u64 = 2_000;
pub const DEFAULT_HITTING_CAP: u64 = 1_000;

const SWEEP_TAG: u64 = 0x5357_4545_5000_0001;
const VERIFY_TAG: u64 = 0x5645_5249_4659_0002;

/// A point estimate with its 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_trials: u64,
    /// Undecided trials for proportions, censored trials for hitting times.
    pub n_undecided: u64,
    pub seed: u64,
    pub horizon: u64,
    /// The interval could not be formed (a single observation).
    pub degenerate_ci: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Input("a proportion needs at least one trial".into()));
    }
    if successes > n {
        return Err(Error::Input(format!("{successes} successes out of {n} trials")));
    }
    let nf = n as f64;
    let phat = successes as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (phat + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, phat) };
    let hi = if successes == n { 1.0 } else { (center + half).clamp(phat, 1.0) };
    Ok((lo, hi))
}

fn proportion(successes: u64, n: u64, undecided: u64, seed: u64, horizon: u64) -> Result<EstimateResult> {
    let (ci_low, ci_high) = wilson_interval(successes, n)?;
    Ok(EstimateResult {
        estimate: successes as f64 / n as f64,
        ci_low,
        ci_high,
        n_trials: n,
        n_undecided: undecided,
        seed,
        horizon,
        degenerate_ci: false,
        warning: None,
    })
}

/// Outcome counts of a batch of trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AbsorptionTally {
    pub extinct: u64,
    pub survived: u64,
    pub undecided: u64,
}

impl AbsorptionTally {
    pub fn trials(&self) -> u64 {
        self.extinct + self.survived + self.undecided
    }

    fn one(kind: OutcomeKind) -> Self {
        let mut t = Self::default();
        match kind {
            OutcomeKind::Extinct => t.extinct = 1,
            OutcomeKind::Survived => t.survived = 1,
            OutcomeKind::Undecided => t.undecided = 1,
        }
        t
    }
}

impl Add for AbsorptionTally {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            extinct: self.extinct + o.extinct,
            survived: self.survived + o.survived,
            undecided: self.undecided + o.undecided,
        }
    }
}

/// Classifies one trajectory of `horizon` steps without storing it.
pub fn run_trial(config: &RdsConfig, x0: f64, seed: u64, horizon: u64, classifier: &Classifier) -> Result<OutcomeKind> {
    let mut sim = Simulator::new(config, x0, seed)?;
    let mut tail = TailTracker::new(*classifier);
    tail.push(x0);
    let absorbing_zero = config.perturbation().is_none() && classifier.extinct_below > 0.0;
    for _ in 0..horizon {
        let (_, x) = sim.advance();
        if absorbing_zero && x == 0.0 {
            // 0 is fixed by both maps: the rest of the orbit is all zeros
            tail.push_repeated(0.0, horizon - sim.steps() + 1);
            return Ok(tail.outcome().kind);
        }
        tail.push(x);
    }
    Ok(tail.outcome().kind)
}

/// Outcome counts for trials `trials` of the batch seeded with `seed`.
pub fn absorption_tally(
    config: &RdsConfig,
    x0: f64,
    trials: Range<u64>,
    horizon: u64,
    seed: u64,
    classifier: &Classifier,
) -> Result<AbsorptionTally> {
    config.check_state(x0)?;
    trials
        .into_par_iter()
        .map(|i| run_trial(config, x0, sub_seed(seed, i), horizon, classifier).map(AbsorptionTally::one))
        .try_reduce(AbsorptionTally::default, |a, b| Ok(a + b))
}

/// Finite-horizon schedule: start at `start` steps and double until the
/// undecided fraction drops below `undecided_tolerance` (or reaches zero when
/// the tolerance is 0), never exceeding `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonPolicy {
    pub start: u64,
    pub max: u64,
    pub undecided_tolerance: f64,
}

impl Default for HorizonPolicy {
    fn default() -> Self {
        Self { start: 1_000, max: 1 << 20, undecided_tolerance: 1e-3 }
    }
}

impl HorizonPolicy {
    pub fn fixed(horizon: u64) -> Self {
        Self { start: horizon, max: horizon, undecided_tolerance: 1.0 }
    }

    /// Double until no trial is undecided.
    pub fn until_decided() -> Self {
        Self { undecided_tolerance: 0.0, ..Self::default() }
    }

    fn satisfied(&self, undecided: u64, n: u64) -> bool {
        if self.undecided_tolerance <= 0.0 {
            undecided == 0
        } else {
            (undecided as f64 / n as f64) < self.undecided_tolerance
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorptionEstimate {
    /// Probability of extinction.
    pub p0: EstimateResult,
    /// Probability of eventual residence in the survival trap.
    pub p1: EstimateResult,
    pub tally: AbsorptionTally,
    pub horizon: u64,
    pub classifier: Classifier,
}

/// Extinction and survival probabilities from `x0`, classified with the
/// configuration's default [`Classifier`].
pub fn estimate_absorption(
    config: &RdsConfig,
    x0: f64,
    n_trials: u64,
    policy: HorizonPolicy,
    seed: u64,
) -> Result<AbsorptionEstimate> {
    estimate_absorption_with(config, x0, n_trials, policy, seed, &Classifier::for_config(config))
}

pub fn estimate_absorption_with(
    config: &RdsConfig,
    x0: f64,
    n_trials: u64,
    policy: HorizonPolicy,
    seed: u64,
    classifier: &Classifier,
) -> Result<AbsorptionEstimate> {
    if n_trials == 0 {
        return Err(Error::Input("n_trials must be positive".into()));
    }
    if policy.start == 0 || policy.max < policy.start {
        return Err(Error::Input(format!("invalid horizon policy {policy:?}")));
    }
    let mut horizon = policy.start;
    let tally = loop {
        let tally = absorption_tally(config, x0, 0..n_trials, horizon, seed, classifier)?;
        if policy.satisfied(tally.undecided, n_trials) || horizon >= policy.max {
            break tally;
        }
        horizon = (horizon * 2).min(policy.max);
    };
    let mut p0 = proportion(tally.extinct, n_trials, tally.undecided, seed, horizon)?;
    let mut p1 = proportion(tally.survived, n_trials, tally.undecided, seed, horizon)?;
    if !policy.satisfied(tally.undecided, n_trials) {
        let w = format!("{} trials still undecided at the horizon cap {horizon}", tally.undecided);
        p0.warning = Some(w.clone());
        p1.warning = Some(w);
    }
    Ok(AbsorptionEstimate { p0, p1, tally, horizon, classifier: *classifier })
}

/// Exact integer accumulators of first-passage times.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct HittingTally {
    pub hits: u64,
    pub censored: u64,
    pub sum: u64,
    pub sum_sq: u128,
}

impl Add for HittingTally {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            hits: self.hits + o.hits,
            censored: self.censored + o.censored,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }
}

/// First `n >= 1` with `X_n < threshold`, or `None` if not reached within `cap` steps.
pub fn first_passage(config: &RdsConfig, x0: f64, threshold: f64, cap: u64, seed: u64) -> Result<Option<u64>> {
    let mut sim = Simulator::new(config, x0, seed)?;
    for n in 1..=cap {
        let (_, x) = sim.advance();
        if x < threshold {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

fn check_hitting_inputs(config: &RdsConfig, x0: f64, threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < config.bound()) {
        return Err(Error::Input(format!("threshold {threshold} must lie in (0, {})", config.bound())));
    }
    config.check_state(x0)?;
    if x0 <= threshold {
        return Err(Error::Input(format!("x0 = {x0} must exceed the threshold {threshold}")));
    }
    Ok(())
}

pub fn hitting_tally(
    config: &RdsConfig,
    x0: f64,
    threshold: f64,
    trials: Range<u64>,
    cap: u64,
    seed: u64,
) -> Result<HittingTally> {
    check_hitting_inputs(config, x0, threshold)?;
    trials
        .into_par_iter()
        .map(|i| {
            first_passage(config, x0, threshold, cap, sub_seed(seed, i)).map(|t| match t {
                Some(t) => HittingTally { hits: 1, censored: 0, sum: t, sum_sq: (t as u128) * (t as u128) },
                None => HittingTally { censored: 1, ..Default::default() },
            })
        })
        .try_reduce(HittingTally::default, |a, b| Ok(a + b))
}

/// Mean and Student-t 95% interval of the uncensored hitting times.
pub fn time_estimate(tally: &HittingTally, seed: u64, cap: u64) -> Result<EstimateResult> {
    let n_trials = tally.hits + tally.censored;
    if tally.hits == 0 {
        return Err(Error::EstimateUnavailable { censored: tally.censored });
    }
    let n = tally.hits;
    let mean = tally.sum as f64 / n as f64;
    let (ci_low, ci_high, degenerate) = if n < 2 {
        (mean, mean, true)
    } else {
        // n * sum_sq - sum^2 is exact in integers
        let num = (n as u128) * tally.sum_sq - (tally.sum as u128) * (tally.sum as u128);
        let var = num as f64 / (n as f64 * (n - 1) as f64);
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid dof").inverse_cdf(0.975);
        let half = t * (var / n as f64).sqrt();
        (mean - half, mean + half, false)
    };
    let warning = (tally.censored > 0)
        .then(|| format!("{} of {n_trials} trials censored at {cap} steps and excluded from the mean", tally.censored));
    Ok(EstimateResult {
        estimate: mean,
        ci_low,
        ci_high,
        n_trials,
        n_undecided: tally.censored,
        seed,
        horizon: cap,
        degenerate_ci: degenerate,
        warning,
    })
}

/// Expected number of steps until the state first drops below `threshold`.
/// Trials that reach `cap` are censored: counted in `n_undecided` and left
/// out of the mean.
pub fn estimate_hitting_time(
    config: &RdsConfig,
    x0: f64,
    threshold: f64,
    n_trials: u64,
    cap: u64,
    seed: u64,
) -> Result<EstimateResult> {
    if n_trials == 0 {
        return Err(Error::Input("n_trials must be positive".into()));
    }
    let tally = hitting_tally(config, x0, threshold, 0..n_trials, cap, seed)?;
    time_estimate(&tally, seed, cap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p: f64,
    pub seed: u64,
    pub n_trials: u64,
    pub n_censored: u64,
    pub estimate: Option<EstimateResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub p_grid: Vec<f64>,
    pub threshold: f64,
    pub x0: f64,
    pub cap: u64,
    pub values: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn point(&self, p: f64) -> Option<&SweepPoint> {
        self.values.iter().find(|v| v.p == p)
    }

    /// `p,estimate,ci_low,ci_high,n_trials,n_censored,seed`; unavailable
    /// estimates leave the three numeric columns empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,estimate,ci_low,ci_high,n_trials,n_censored,seed\n");
        for v in &self.values {
            match &v.estimate {
                Some(e) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        v.p, e.estimate, e.ci_low, e.ci_high, v.n_trials, v.n_censored, v.seed
                    );
                }
                None => {
                    let _ = writeln!(out, "{},,,,{},{},{}", v.p, v.n_trials, v.n_censored, v.seed);
                }
            }
        }
        out
    }

    /// True when no grid point produced an estimate.
    pub fn all_unavailable(&self) -> bool {
        self.values.iter().all(|v| v.estimate.is_none())
    }
}

/// `T(p)` over `p_grid` with threshold `min(A_f, A_g)`. The switching
/// probability of `base` is replaced at each grid point; its maps, noise and
/// bound are kept. A failing grid point is recorded and the sweep continues.
pub fn sweep_config(
    base: &RdsConfig,
    p_grid: &[f64],
    x0: f64,
    n_trials: u64,
    cap: u64,
    seed: u64,
) -> Result<SweepResult> {
    if p_grid.is_empty() {
        return Err(Error::Input("empty p grid".into()));
    }
    if p_grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::Input("every grid probability must lie in (0, 1)".into()));
    }
    if p_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("the p grid must be strictly increasing".into()));
    }
    if n_trials == 0 {
        return Err(Error::Input("n_trials must be positive".into()));
    }
    let threshold = base.critical_value();
    check_hitting_inputs(base, x0, threshold)?;
    let values = p_grid
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let point_seed = sub_seed(seed ^ SWEEP_TAG, j as u64);
            let res = base
                .with_p(p)
                .and_then(|cfg| hitting_tally(&cfg, x0, threshold, 0..n_trials, cap, point_seed))
                .and_then(|t| time_estimate(&t, point_seed, cap).map(|e| (t, e)));
            match res {
                Ok((t, e)) => {
                    SweepPoint { p, seed: point_seed, n_trials, n_censored: t.censored, estimate: Some(e), error: None }
                }
                Err(err) => SweepPoint {
                    p,
                    seed: point_seed,
                    n_trials,
                    n_censored: match err {
                        Error::EstimateUnavailable { censored } => censored,
                        _ => 0,
                    },
                    estimate: None,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepResult { p_grid: p_grid.to_vec(), threshold, x0, cap, values })
}

/// `T(p)` for the unperturbed switching system of `f` and `g`.
pub fn sweep_t_of_p(
    f: &MapSpec,
    g: &MapSpec,
    p_grid: &[f64],
    x0: f64,
    n_trials: u64,
    cap: u64,
    seed: u64,
) -> Result<SweepResult> {
    let base = RdsConfig::new(f.clone(), g.clone(), 0.5, None, None)?;
    sweep_config(&base, p_grid, x0, n_trials, cap, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtinctionRow {
    pub x0: f64,
    pub extinct: EstimateResult,
    pub undecided: u64,
    pub horizon: u64,
    /// The interval for the extinct fraction excludes 1.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtinctionReport {
    pub theorem: Theorem,
    pub classifier: Classifier,
    pub rows: Vec<ExtinctionRow>,
}

impl ExtinctionReport {
    pub fn all_extinct(&self) -> bool {
        self.rows.iter().all(|r| !r.flagged && r.undecided == 0 && r.extinct.estimate == 1.0)
    }

    pub fn max_horizon(&self) -> u64 {
        self.rows.iter().map(|r| r.horizon).max().unwrap_or(0)
    }
}

/// Runs `n_trials` trajectories from every `x0` in `x0_grid` and records the
/// fraction classified extinct. The pair must pass the relevant certificate:
/// T3 or T4 for the unperturbed system, T5 (with the configured delta) for
/// the perturbed one, in which case extinction means residence below `inf U`.
/// No survival trap is used, so anything not yet extinct is undecided.
pub fn verify_extinction_theorem(
    config: &RdsConfig,
    x0_grid: &[f64],
    n_trials: u64,
    policy: HorizonPolicy,
    seed: u64,
) -> Result<ExtinctionReport> {
    let (theorem, classifier) = match config.perturbation() {
        None => {
            let theorem = [Theorem::T3, Theorem::T4]
                .into_iter()
                .find(|&t| {
                    certify::certify(t, config.f(), config.g(), None).is_ok_and(|r| r.verdict == Verdict::AllHold)
                })
                .ok_or_else(|| Error::Precondition("neither the T3 nor the T4 hypotheses hold for this pair".into()))?;
            (theorem, Classifier::for_config(config).without_survival())
        }
        Some(pert) => {
            let r = certify::certify(Theorem::T5, config.f(), config.g(), Some(pert.delta))?;
            if r.verdict != Verdict::AllHold {
                return Err(Error::Precondition("the T5 hypotheses do not hold for this pair and delta".into()));
            }
            let u = certify::theorem5_u(config.f(), config.g(), pert.delta, certify::SET_GRID)?;
            let inf_u = u.inf_u.expect("certified nonempty");
            let base = Classifier::for_config(config);
            (Theorem::T5, Classifier { extinct_below: inf_u, ..base }.without_survival())
        }
    };
    let rows = x0_grid
        .iter()
        .enumerate()
        .map(|(j, &x0)| {
            let est = estimate_absorption_with(
                config,
                x0,
                n_trials,
                policy,
                sub_seed(seed ^ VERIFY_TAG, j as u64),
                &classifier,
            )?;
            Ok(ExtinctionRow {
                x0,
                flagged: est.p0.ci_high < 1.0,
                undecided: est.tally.undecided,
                horizon: est.horizon,
                extinct: est.p0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExtinctionReport { theorem, classifier, rows })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TrapEscapeTally {
    pub trials: u64,
    /// Trials that entered the trap at least once.
    pub entered: u64,
    /// Trials that left the trap after having entered it.
    pub escapes: u64,
}

impl Add for TrapEscapeTally {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { trials: self.trials + o.trials, entered: self.entered + o.entered, escapes: self.escapes + o.escapes }
    }
}

/// Counts trajectories that leave `trap` after first entering it. Trial `i`
/// starts from `x0_grid[i % len]`.
pub fn count_trap_escapes(
    config: &RdsConfig,
    trap: Trap,
    x0_grid: &[f64],
    n_trials: u64,
    steps: u64,
    seed: u64,
) -> Result<TrapEscapeTally> {
    if x0_grid.is_empty() {
        return Err(Error::Input("empty x0 grid".into()));
    }
    (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let x0 = x0_grid[(i % x0_grid.len() as u64) as usize];
            let mut sim = Simulator::new(config, x0, sub_seed(seed, i))?;
            let mut inside = trap.contains(x0);
            let mut entered = inside;
            let mut escaped = false;
            for _ in 0..steps {
                let (_, x) = sim.advance();
                let now = trap.contains(x);
                if inside && !now {
                    escaped = true;
                    break;
                }
                inside = now;
                entered |= now;
            }
            Ok(TrapEscapeTally { trials: 1, entered: entered as u64, escapes: escaped as u64 })
        })
        .try_reduce(TrapEscapeTally::default, |a, b| Ok(a + b))
}
