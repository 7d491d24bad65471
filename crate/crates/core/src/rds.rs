//! The two stochastic systems built from a pair of Allee maps:
//!
//! * switching: `X_{n+1} = f(X_n)` with probability `p`, `g(X_n)` otherwise;
//! * perturbed switching: `Y_{n+1} = clamp(h(Y_n) + eps_n, b)` with
//!   `h ∈ {f, g}` chosen the same way and `eps_n` i.i.d. on `(-delta, delta)`.
//!
//! Every trajectory is a pure function of `(config, x0, seed, n_steps)`. Each
//! step draws the coin first and then, for the perturbed model, the noise.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{self, MapFeatures, MapSpec, Monotonicity, TOL_FP};

/// Saturation onto `[0, b]`.
#[inline]
pub fn clamp(x: f64, b: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else if x > b {
        b
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    #[default]
    Uniform,
    /// Symmetric triangular density on `(-delta, delta)`, peaked at 0.
    TruncatedTriangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub delta: f64,
    #[serde(default)]
    pub distribution: NoiseLaw,
}

impl PerturbationSpec {
    pub fn new(delta: f64, distribution: NoiseLaw) -> Result<Self> {
        let spec = Self { delta, distribution };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(delta: f64) -> Result<Self> {
        Self::new(delta, NoiseLaw::Uniform)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::Config(format!("perturbation delta must be positive and finite, got {}", self.delta)));
        }
        Ok(())
    }

    /// One draw from the open interval `(-delta, delta)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u = match self.distribution {
                NoiseLaw::Uniform => 2.0 * rng.random::<f64>() - 1.0,
                NoiseLaw::TruncatedTriangular => rng.random::<f64>() + rng.random::<f64>() - 1.0,
            };
            if u > -1.0 && u < 1.0 {
                return self.delta * u;
            }
        }
    }
}

/// Which of the two maps was applied at a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapChoice {
    F,
    G,
}

impl MapChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            MapChoice::F => "f",
            MapChoice::G => "g",
        }
    }
}

/// A fully specified two-map system: the maps, the switching probability, the
/// optional noise and the common state bound `b`.
#[derive(Debug, Clone)]
pub struct RdsConfig {
    f: MapSpec,
    g: MapSpec,
    p: f64,
    perturbation: Option<PerturbationSpec>,
    b: f64,
    features_f: MapFeatures,
    features_g: MapFeatures,
}

impl RdsConfig {
    /// Builds a system, resolving the common bound when `b` is `None`: for two
    /// unimodal maps `b = max(M_f, M_g)`, otherwise the larger of the maps'
    /// own bounds. Both maps must have two positive fixed points.
    ///
    /// `p` may be 0 or 1, which degenerates to iterating a single map.
    pub fn new(f: MapSpec, g: MapSpec, p: f64, perturbation: Option<PerturbationSpec>, b: Option<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("switching probability p must lie in [0, 1], got {p}")));
        }
        if let Some(pert) = &perturbation {
            pert.validate()?;
        }
        let b = match b {
            Some(b) => b,
            None => {
                let unimodal = maps::monotonicity(&f)? == Monotonicity::Unimodal
                    && maps::monotonicity(&g)? == Monotonicity::Unimodal;
                match (unimodal, maps::find_critical_point(&f)?, maps::find_critical_point(&g)?) {
                    (true, Some(cf), Some(cg)) => cf.peak.max(cg.peak),
                    _ => f.bound().max(g.bound()),
                }
            }
        };
        let f = f.with_bound(b)?;
        let g = g.with_bound(b)?;
        let features_f = maps::features(&f)?;
        let features_g = maps::features(&g)?;
        Ok(Self { f, g, p, perturbation, b, features_f, features_g })
    }

    pub fn f(&self) -> &MapSpec {
        &self.f
    }

    pub fn g(&self) -> &MapSpec {
        &self.g
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn perturbation(&self) -> Option<&PerturbationSpec> {
        self.perturbation.as_ref()
    }

    pub fn bound(&self) -> f64 {
        self.b
    }

    pub fn features_f(&self) -> &MapFeatures {
        &self.features_f
    }

    pub fn features_g(&self) -> &MapFeatures {
        &self.features_g
    }

    /// `min(A_f, A_g)`.
    pub fn critical_value(&self) -> f64 {
        self.features_f.threshold.min(self.features_g.threshold)
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("switching probability p must lie in [0, 1], got {p}")));
        }
        Ok(Self { p, ..self.clone() })
    }

    pub fn with_perturbation(&self, perturbation: Option<PerturbationSpec>) -> Result<Self> {
        if let Some(pert) = &perturbation {
            pert.validate()?;
        }
        Ok(Self { perturbation, ..self.clone() })
    }

    /// One transition. For the unperturbed model pass `eps = 0`; the clamp is
    /// the identity there up to rounding at the maximum.
    #[inline]
    pub fn step(&self, x: f64, choice: MapChoice, eps: f64) -> f64 {
        let h = match choice {
            MapChoice::F => self.f.apply(x),
            MapChoice::G => self.g.apply(x),
        };
        clamp(h + eps, self.b)
    }

    pub(crate) fn check_state(&self, x: f64) -> Result<()> {
        if !(0.0..=self.b).contains(&x) {
            return Err(Error::Domain { x, b: self.b });
        }
        Ok(())
    }
}

/// The random stream of one trajectory: a coin per step, followed by a noise
/// draw when the system is perturbed.
#[derive(Debug, Clone)]
pub struct StepStream {
    rng: ChaCha8Rng,
}

impl StepStream {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    #[inline]
    pub fn draw(&mut self, config: &RdsConfig) -> (MapChoice, f64) {
        let choice = if self.rng.random::<f64>() < config.p { MapChoice::F } else { MapChoice::G };
        let eps = match &config.perturbation {
            Some(pert) => pert.sample(&mut self.rng),
            None => 0.0,
        };
        (choice, eps)
    }
}

/// Incremental trajectory generator. Cloning it snapshots both the state and
/// the RNG, so a run can be paused and resumed.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    config: &'a RdsConfig,
    stream: StepStream,
    state: f64,
    steps: u64,
}

impl<'a> Simulator<'a> {
    pub fn new(config: &'a RdsConfig, x0: f64, seed: u64) -> Result<Self> {
        config.check_state(x0)?;
        Ok(Self { config, stream: StepStream::new(seed), state: x0, steps: 0 })
    }

    #[inline]
    pub fn advance(&mut self) -> (MapChoice, f64) {
        let (choice, eps) = self.stream.draw(self.config);
        self.state = self.config.step(self.state, choice, eps);
        self.steps += 1;
        (choice, self.state)
    }

    pub fn state(&self) -> f64 {
        self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// A half-open/closed interval used as a trapping region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trap {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Trap {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    /// `[0, hi)`.
    pub fn below(hi: f64) -> Self {
        Self { lo: 0.0, hi, lo_closed: true, hi_closed: false }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        let lo_ok = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let hi_ok = if self.hi_closed { x <= self.hi } else { x < self.hi };
        lo_ok && hi_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Extinct,
    Survived,
    Undecided,
}

/// Classification of a finite trajectory, with the index of the first state of
/// the deciding tail (the last index for undecided runs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub step: usize,
}

/// Finite-window surrogate for the asymptotic events: extinct when the last
/// `window` states are below `extinct_below`, survived when they all lie in the
/// survival trap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classifier {
    pub extinct_below: f64,
    pub window: usize,
    pub survival: Option<Trap>,
}

pub const DEFAULT_WINDOW: usize = 50;

impl Classifier {
    /// Defaults: `extinct_below = min(A_f, A_g) / 100`, a 50-step window, and
    /// the survival trap `[min K, max K]` for increasing maps whose thresholds
    /// both lie below both carrying points, `(min A, b]` otherwise.
    pub fn for_features(ff: &MapFeatures, fg: &MapFeatures, b: f64) -> Self {
        let min_a = ff.threshold.min(fg.threshold);
        let max_a = ff.threshold.max(fg.threshold);
        let min_k = ff.carrying.min(fg.carrying);
        let max_k = ff.carrying.max(fg.carrying);
        let increasing =
            ff.monotonicity == Monotonicity::StrictlyIncreasing && fg.monotonicity == Monotonicity::StrictlyIncreasing;
        let survival = if increasing && max_a < min_k {
            Trap::closed(min_k - TOL_FP, max_k + TOL_FP)
        } else {
            Trap { lo: min_a, hi: b, lo_closed: false, hi_closed: true }
        };
        Self { extinct_below: min_a / 100.0, window: DEFAULT_WINDOW, survival: Some(survival) }
    }

    pub fn for_config(config: &RdsConfig) -> Self {
        Self::for_features(config.features_f(), config.features_g(), config.bound())
    }

    pub fn without_survival(mut self) -> Self {
        self.survival = None;
        self
    }
}

/// Streaming version of [`classify_outcome`]: tracks the lengths of the
/// trailing runs inside the extinction and survival regions.
#[derive(Debug, Clone)]
pub struct TailTracker {
    classifier: Classifier,
    extinct_run: usize,
    survival_run: usize,
    len: usize,
}

impl TailTracker {
    pub fn new(classifier: Classifier) -> Self {
        Self { classifier, extinct_run: 0, survival_run: 0, len: 0 }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.len += 1;
        if x < self.classifier.extinct_below {
            self.extinct_run += 1;
        } else {
            self.extinct_run = 0;
        }
        match &self.classifier.survival {
            Some(trap) if trap.contains(x) => self.survival_run += 1,
            _ => self.survival_run = 0,
        }
    }

    /// Equivalent to `count` calls of [`push`](Self::push) with the same state.
    pub fn push_repeated(&mut self, x: f64, count: u64) {
        if count == 0 {
            return;
        }
        let count = count as usize;
        self.len += count;
        if x < self.classifier.extinct_below {
            self.extinct_run += count;
        } else {
            self.extinct_run = 0;
        }
        match &self.classifier.survival {
            Some(trap) if trap.contains(x) => self.survival_run += count,
            _ => self.survival_run = 0,
        }
    }

    pub fn outcome(&self) -> Outcome {
        let w = self.classifier.window;
        if self.len >= w && self.extinct_run >= w {
            Outcome { kind: OutcomeKind::Extinct, step: self.len - self.extinct_run }
        } else if self.len >= w && self.survival_run >= w {
            Outcome { kind: OutcomeKind::Survived, step: self.len - self.survival_run }
        } else {
            Outcome { kind: OutcomeKind::Undecided, step: self.len.saturating_sub(1) }
        }
    }
}

pub fn classify_outcome(states: &[f64], classifier: &Classifier) -> Outcome {
    let mut tracker = TailTracker::new(*classifier);
    for &x in states {
        tracker.push(x);
    }
    tracker.outcome()
}

/// A realized orbit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub x0: f64,
    pub seed: u64,
    pub states: Vec<f64>,
    pub choices: Vec<MapChoice>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn classify(&mut self, classifier: &Classifier) -> Outcome {
        self.outcome = classify_outcome(&self.states, classifier);
        self.outcome
    }

    /// `step,state,choice` rows; `choice` is the map that produced the state
    /// and is empty on the initial row. Numbers use the shortest round-trip
    /// representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(24 * self.states.len() + 20);
        out.push_str("step,state,choice\n");
        for (i, x) in self.states.iter().enumerate() {
            let choice = if i == 0 { "" } else { self.choices[i - 1].as_str() };
            let _ = writeln!(out, "{i},{x},{choice}");
        }
        out
    }
}

/// Runs `n_steps` transitions from `x0` and classifies the result with the
/// configuration's default [`Classifier`].
pub fn simulate(config: &RdsConfig, x0: f64, seed: u64, n_steps: usize) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::Input("n_steps must be at least 1".into()));
    }
    let mut sim = Simulator::new(config, x0, seed)?;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut choices = Vec::with_capacity(n_steps);
    states.push(x0);
    for _ in 0..n_steps {
        let (c, x) = sim.advance();
        choices.push(c);
        states.push(x);
    }
    let outcome = classify_outcome(&states, &Classifier::for_config(config));
    Ok(Trajectory { x0, seed, states, choices, outcome })
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` in a batch seeded with `seed`.
#[inline]
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}
