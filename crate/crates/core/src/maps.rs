//! Allee map families, their derivatives, and landmark extraction (fixed
//! points, critical point, maximum) together with a grid validator for the
//! Allee axioms.
//!
//! Two closed-form families are built in:
//!
//! * [`MapFamily::Sigmoid`]: `f(x) = rho x^2 / (a + x^2)`, strictly increasing.
//! * [`MapFamily::RationalUnimodal`]: `f(x) = G bp x / ((x - T)^2 + bp)`,
//!   increasing up to `sqrt(T^2 + bp)` and decreasing after.
//!
//! Anything else can be supplied as a [`CustomMap`], either a piecewise-linear
//! table or a closure owned by the host program.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric;

/// Absolute tolerance on fixed-point residuals `|f(x) - x|`.
pub const TOL_FP: f64 = 1e-9;
/// Grid size used to bracket the positive roots of `f(x) - x`.
pub const ROOT_GRID: usize = 4096;
/// Bisection stops once a root bracket is narrower than this.
pub const ROOT_TOL: f64 = 1e-12;

type MapFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A map supplied by the host program rather than one of the closed-form
/// families.
#[derive(Clone)]
pub enum CustomMap {
    /// Piecewise-linear interpolation through `(x, y)` knots with strictly
    /// increasing `x`, starting at `x = 0`.
    Table(Vec<[f64; 2]>),
    Closure {
        name: String,
        func: MapFn,
    },
}

impl CustomMap {
    fn apply(&self, x: f64) -> f64 {
        match self {
            CustomMap::Table(points) => interpolate(points, x),
            CustomMap::Closure { func, .. } => func(x),
        }
    }
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CustomMap::Table(points) => f.debug_tuple("Table").field(&points.len()).finish(),
            CustomMap::Closure { name, .. } => f.debug_struct("Closure").field("name", name).finish(),
        }
    }
}

impl PartialEq for CustomMap {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CustomMap::Table(a), CustomMap::Table(b)) => a == b,
            (CustomMap::Closure { func: a, .. }, CustomMap::Closure { func: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

fn interpolate(points: &[[f64; 2]], x: f64) -> f64 {
    let idx = points.partition_point(|p| p[0] <= x);
    if idx == 0 {
        return points[0][1];
    }
    if idx == points.len() {
        return points[points.len() - 1][1];
    }
    let [x0, y0] = points[idx - 1];
    let [x1, y1] = points[idx];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapFamily {
    Sigmoid {
        rho: f64,
        a: f64,
    },
    /// `gain` is `G`, `spread` is `bp`, `center` is `T`.
    RationalUnimodal {
        gain: f64,
        spread: f64,
        center: f64,
    },
    Custom(CustomMap),
}

/// A parametric Allee map on `[0, b]`.
///
/// The bound `b` is optional: when absent the map's natural bound is used
/// (`rho` for the sigmoid family, the maximum `f(B)` for the rational family,
/// the last knot for tables). Two-map systems overwrite it with a common bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    family: MapFamily,
    bound: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be a positive finite number, got {v}")))
    }
}

impl MapSpec {
    /// `f(x) = rho x^2 / (a + x^2)`. Only positivity is checked here; the
    /// two-fixed-point condition `rho > 2 sqrt(a)` is an Allee property and is
    /// reported by [`validate_allee`] / [`find_fixed_points`].
    pub fn sigmoid(rho: f64, a: f64) -> Result<Self> {
        positive("rho", rho)?;
        positive("a", a)?;
        Ok(Self { family: MapFamily::Sigmoid { rho, a }, bound: None })
    }

    /// `f(x) = G bp x / ((x - T)^2 + bp)`.
    pub fn rational_unimodal(gain: f64, spread: f64, center: f64) -> Result<Self> {
        positive("G", gain)?;
        positive("bp", spread)?;
        positive("T", center)?;
        Ok(Self { family: MapFamily::RationalUnimodal { gain, spread, center }, bound: None })
    }

    pub fn tabulated(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config("a tabulated map needs at least two knots".into()));
        }
        if points[0][0] != 0.0 {
            return Err(Error::Config("a tabulated map must start at x = 0".into()));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Config("tabulated knots must be finite".into()));
        }
        if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::Config("tabulated knots must have strictly increasing x".into()));
        }
        Ok(Self { family: MapFamily::Custom(CustomMap::Table(points)), bound: None })
    }

    /// A closure-backed map. Closures carry no natural bound, so `b` is required.
    pub fn closure<F>(name: impl Into<String>, func: F, b: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        positive("b", b)?;
        Ok(Self {
            family: MapFamily::Custom(CustomMap::Closure { name: name.into(), func: Arc::new(func) }),
            bound: Some(b),
        })
    }

    pub fn with_bound(mut self, b: f64) -> Result<Self> {
        positive("b", b)?;
        self.bound = Some(b);
        Ok(self)
    }

    pub fn family(&self) -> &MapFamily {
        &self.family
    }

    pub fn explicit_bound(&self) -> Option<f64> {
        self.bound
    }

    /// The effective upper end of the state interval `[0, b]`.
    pub fn bound(&self) -> f64 {
        if let Some(b) = self.bound {
            return b;
        }
        match &self.family {
            MapFamily::Sigmoid { rho, .. } => *rho,
            MapFamily::RationalUnimodal { .. } => {
                let b = self.closed_form_critical_point().expect("rational family has a critical point");
                self.apply(b)
            }
            MapFamily::Custom(CustomMap::Table(points)) => points[points.len() - 1][0],
            MapFamily::Custom(CustomMap::Closure { .. }) => unreachable!("closure maps always carry a bound"),
        }
    }

    /// Evaluates the map without a domain check.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match &self.family {
            MapFamily::Sigmoid { rho, a } => {
                let x2 = x * x;
                rho * x2 / (a + x2)
            }
            MapFamily::RationalUnimodal { gain, spread, center } => {
                let d = x - center;
                gain * spread * x / (d * d + spread)
            }
            MapFamily::Custom(c) => c.apply(x),
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let b = self.bound();
        if !(0.0..=b).contains(&x) {
            return Err(Error::Domain { x, b });
        }
        Ok(())
    }

    /// `f(x)` for `x` in `[0, b]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.apply(x))
    }

    /// `f'(x)`: closed form for the built-in families, central differences
    /// (one-sided at the domain ends) for custom maps.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.derivative_unchecked(x))
    }

    pub(crate) fn derivative_unchecked(&self, x: f64) -> f64 {
        match &self.family {
            MapFamily::Sigmoid { rho, a } => {
                let den = a + x * x;
                2.0 * rho * a * x / (den * den)
            }
            MapFamily::RationalUnimodal { gain, spread, center } => {
                let d = x - center;
                let den = d * d + spread;
                gain * spread * (center * center + spread - x * x) / (den * den)
            }
            MapFamily::Custom(_) => self.finite_difference(x),
        }
    }

    /// Central difference with step `1e-6 * max(1, |x|)`.
    pub fn finite_difference(&self, x: f64) -> f64 {
        let h = 1e-6 * x.abs().max(1.0);
        let b = self.bound();
        let lo = (x - h).max(0.0);
        let hi = (x + h).min(b);
        (self.apply(hi) - self.apply(lo)) / (hi - lo)
    }

    /// Closed-form positive fixed points `(A, K)` for the built-in families,
    /// `None` for custom maps or when they do not exist as two distinct
    /// positive roots.
    pub fn closed_form_fixed_points(&self) -> Option<(f64, f64)> {
        match self.family {
            MapFamily::Sigmoid { rho, a } => {
                let disc = rho * rho - 4.0 * a;
                (disc > 0.0).then(|| ((rho - disc.sqrt()) / 2.0, (rho + disc.sqrt()) / 2.0))
            }
            MapFamily::RationalUnimodal { gain, spread, center } => {
                let r2 = spread * (gain - 1.0);
                if r2 <= 0.0 {
                    return None;
                }
                let r = r2.sqrt();
                (center - r > 0.0).then_some((center - r, center + r))
            }
            MapFamily::Custom(_) => None,
        }
    }

    /// `sqrt(T^2 + bp)` for the rational family.
    pub fn closed_form_critical_point(&self) -> Option<f64> {
        match self.family {
            MapFamily::RationalUnimodal { spread, center, .. } => Some((center * center + spread).sqrt()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    StrictlyIncreasing,
    Unimodal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoints {
    pub threshold: f64,
    pub carrying: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub location: f64,
    pub peak: f64,
}

/// Landmarks of an Allee map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapFeatures {
    /// Unstable threshold fixed point `A`.
    #[serde(rename = "A")]
    pub threshold: f64,
    /// Upper fixed point `K`.
    #[serde(rename = "K")]
    pub carrying: f64,
    /// Critical point `B` (unimodal maps only).
    #[serde(rename = "B")]
    pub critical: Option<f64>,
    /// Maximum value `M = f(B)` (unimodal maps only).
    #[serde(rename = "M")]
    pub peak: Option<f64>,
    pub monotonicity: Monotonicity,
}

/// Both positive roots of `f(x) = x` by grid bracketing and bisection.
pub fn find_fixed_points(spec: &MapSpec) -> Result<FixedPoints> {
    let b = spec.bound();
    let roots = numeric::grid_roots(|x| spec.apply(x) - x, TOL_FP, b, ROOT_GRID, ROOT_TOL);
    match roots.as_slice() {
        [a, k] if a < k => Ok(FixedPoints { threshold: *a, carrying: *k }),
        [] => Err(Error::NotAnAlleeMap("no positive fixed points (or a tangency) on (0, b]".into())),
        other => {
            Err(Error::NotAnAlleeMap(format!("expected exactly two positive fixed points, found {}", other.len())))
        }
    }
}

const PROFILE_GRID: usize = 4096;

/// Shape of the map on `[0, b]`. Built-in families are classified by family;
/// custom maps by the sign pattern of consecutive differences on a grid.
pub fn monotonicity(spec: &MapSpec) -> Result<Monotonicity> {
    match spec.family() {
        MapFamily::Sigmoid { .. } => Ok(Monotonicity::StrictlyIncreasing),
        MapFamily::RationalUnimodal { .. } => Ok(Monotonicity::Unimodal),
        MapFamily::Custom(_) => {
            let ys: Vec<f64> = numeric::linspace(0.0, spec.bound(), PROFILE_GRID).map(|x| spec.apply(x)).collect();
            let mut peaks = 0;
            let mut rising = true;
            for w in ys.windows(2) {
                let d = w[1] - w[0];
                if d == 0.0 || !d.is_finite() {
                    return Err(Error::NotUnimodal("flat or non-finite segment in the grid profile".into()));
                }
                if rising && d < 0.0 {
                    rising = false;
                    peaks += 1;
                } else if !rising && d > 0.0 {
                    return Err(Error::NotUnimodal("multiple local maxima in the grid profile".into()));
                }
            }
            Ok(if peaks == 0 { Monotonicity::StrictlyIncreasing } else { Monotonicity::Unimodal })
        }
    }
}

/// Critical point and maximum; `None` for strictly increasing maps.
pub fn find_critical_point(spec: &MapSpec) -> Result<Option<CriticalPoint>> {
    match spec.family() {
        MapFamily::Sigmoid { .. } => Ok(None),
        MapFamily::RationalUnimodal { .. } => {
            let location = spec.closed_form_critical_point().expect("rational family");
            Ok(Some(CriticalPoint { location, peak: spec.apply(location) }))
        }
        MapFamily::Custom(_) => {
            if monotonicity(spec)? == Monotonicity::StrictlyIncreasing {
                return Ok(None);
            }
            let b = spec.bound();
            let cell = b / (PROFILE_GRID - 1) as f64;
            let (argmax, _) = numeric::linspace(0.0, b, PROFILE_GRID)
                .map(|x| (x, spec.apply(x)))
                .fold((0.0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
            let lo = (argmax - cell).max(0.0);
            let hi = (argmax + cell).min(b);
            let (location, peak) = numeric::golden_max(|x| spec.apply(x), lo, hi, 1e-12);
            Ok(Some(CriticalPoint { location, peak }))
        }
    }
}

/// Fixed points, critical point and monotonicity class in one record.
pub fn features(spec: &MapSpec) -> Result<MapFeatures> {
    let fp = find_fixed_points(spec)?;
    let mono = monotonicity(spec)?;
    let cp = find_critical_point(spec)?;
    Ok(MapFeatures {
        threshold: fp.threshold,
        carrying: fp.carrying,
        critical: cp.map(|c| c.location),
        peak: cp.map(|c| c.peak),
        monotonicity: mono,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    /// Two positive fixed points `0 < A < K`.
    FixedPoints,
    /// `f(x) < x` on `(0, A) ∪ (K, b]`.
    BelowDiagonalOutside,
    /// `f(x) > x` on `(A, K)`.
    AboveDiagonalInside,
    /// `f([0, b]) ⊂ [0, b]`.
    MapsIntoDomain,
    /// `A < B < K` for unimodal maps.
    PeakBetweenFixedPoints,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::FixedPoints => "two positive fixed points 0 < A < K",
            Axiom::BelowDiagonalOutside => "f(x) < x on (0, A) and (K, b]",
            Axiom::AboveDiagonalInside => "f(x) > x on (A, K)",
            Axiom::MapsIntoDomain => "f maps [0, b] into [0, b]",
            Axiom::PeakBetweenFixedPoints => "critical point B lies in (A, K)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub x: f64,
    pub fx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    /// Grid point with the largest violation, if any.
    pub worst: Option<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub grid_n: usize,
    pub bound: f64,
    pub checks: Vec<AxiomCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Tracks the grid point with the largest positive violation score.
#[derive(Default)]
struct Worst(Option<(f64, Violation)>);

impl Worst {
    fn offer(&mut self, score: f64, x: f64, fx: f64) {
        if self.0.is_none_or(|(s, _)| score > s) {
            self.0 = Some((score, Violation { x, fx }));
        }
    }

    fn into_check(self, axiom: Axiom) -> AxiomCheck {
        AxiomCheck { axiom, passed: self.0.is_none(), worst: self.0.map(|(_, v)| v), note: None }
    }
}

/// Checks the Allee axioms on a uniform grid of `grid_n` points over `[0, b]`.
/// Grid points with `|f(x) - x| <= TOL_FP` are treated as fixed points and
/// excluded from the strict inequalities.
pub fn validate_allee(spec: &MapSpec, grid_n: usize) -> Result<ValidationReport> {
    if grid_n < 1000 {
        return Err(Error::Input(format!("validation grid needs at least 1000 points, got {grid_n}")));
    }
    let b = spec.bound();
    let mut checks = Vec::new();

    let mut into = Worst::default();
    for x in numeric::linspace(0.0, b, grid_n) {
        let fx = spec.apply(x);
        if !fx.is_finite() || fx < -TOL_FP || fx > b + TOL_FP {
            let excess = if fx.is_finite() { (fx - b).max(-fx) } else { f64::INFINITY };
            into.offer(excess, x, fx);
        }
    }
    let into = into.into_check(Axiom::MapsIntoDomain);

    let fp = match find_fixed_points(spec) {
        Ok(fp) => fp,
        Err(e) => {
            checks.push(AxiomCheck {
                axiom: Axiom::FixedPoints,
                passed: false,
                worst: None,
                note: Some(e.to_string()),
            });
            checks.push(into);
            return Ok(ValidationReport { grid_n, bound: b, checks });
        }
    };
    checks.push(AxiomCheck { axiom: Axiom::FixedPoints, passed: true, worst: None, note: None });

    let mut below = Worst::default();
    let mut above = Worst::default();
    for x in numeric::linspace(0.0, b, grid_n).skip(1) {
        let fx = spec.apply(x);
        let gap = fx - x;
        if gap.abs() <= TOL_FP {
            continue;
        }
        let inside = x > fp.threshold && x < fp.carrying;
        if inside && gap < 0.0 {
            above.offer(-gap, x, fx);
        } else if !inside && gap > 0.0 {
            below.offer(gap, x, fx);
        }
    }
    checks.push(below.into_check(Axiom::BelowDiagonalOutside));
    checks.push(above.into_check(Axiom::AboveDiagonalInside));
    checks.push(into);

    if monotonicity(spec)? == Monotonicity::Unimodal {
        if let Some(cp) = find_critical_point(spec)? {
            let ok = fp.threshold < cp.location && cp.location < fp.carrying;
            checks.push(AxiomCheck {
                axiom: Axiom::PeakBetweenFixedPoints,
                passed: ok,
                worst: (!ok).then_some(Violation { x: cp.location, fx: cp.peak }),
                note: None,
            });
        }
    }
    Ok(ValidationReport { grid_n, bound: b, checks })
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum MapSpecRepr {
    Sigmoid {
        rho: f64,
        a: f64,
        #[serde(default)]
        b: Option<f64>,
    },
    RationalUnimodal {
        #[serde(rename = "G")]
        gain: f64,
        bp: f64,
        #[serde(rename = "T")]
        center: f64,
        #[serde(default)]
        b: Option<f64>,
    },
    Custom {
        points: Vec<[f64; 2]>,
        #[serde(default)]
        b: Option<f64>,
    },
}

impl Serialize for MapSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let b = self.bound;
        let repr = match &self.family {
            MapFamily::Sigmoid { rho, a } => MapSpecRepr::Sigmoid { rho: *rho, a: *a, b },
            MapFamily::RationalUnimodal { gain, spread, center } => {
                MapSpecRepr::RationalUnimodal { gain: *gain, bp: *spread, center: *center, b }
            }
            MapFamily::Custom(CustomMap::Table(points)) => MapSpecRepr::Custom { points: points.clone(), b },
            MapFamily::Custom(CustomMap::Closure { name, .. }) => {
                return Err(serde::ser::Error::custom(format!("closure map `{name}` cannot be serialized")));
            }
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MapSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let (spec, b) = match MapSpecRepr::deserialize(deserializer)? {
            MapSpecRepr::Sigmoid { rho, a, b } => (MapSpec::sigmoid(rho, a), b),
            MapSpecRepr::RationalUnimodal { gain, bp, center, b } => (MapSpec::rational_unimodal(gain, bp, center), b),
            MapSpecRepr::Custom { points, b } => (MapSpec::tabulated(points), b),
        };
        let spec = spec.map_err(serde::de::Error::custom)?;
        match b {
            Some(b) => spec.with_bound(b).map_err(serde::de::Error::custom),
            None => Ok(spec),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1_f() -> MapSpec {
        MapSpec::rational_unimodal(1.1, 2.0, 3.0).unwrap()
    }

    #[test]
    fn both_families_fix_zero() {
        assert_eq!(ex1_f().eval(0.0).unwrap(), 0.0);
        assert_eq!(MapSpec::sigmoid(2.5, 1.0).unwrap().eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn threshold_is_a_fixed_point() {
        let a = 3.0 - 0.2f64.sqrt();
        assert!((ex1_f().eval(a).unwrap() - a).abs() < 1e-14);
    }

    #[test]
    fn domain_violations_are_errors() {
        let f = MapSpec::sigmoid(2.5, 1.0).unwrap().with_bound(2.5).unwrap();
        assert!(matches!(f.eval(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(f.eval(2.6), Err(Error::Domain { .. })));
        assert!(matches!(f.derivative(3.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn bad_parameters_are_config_errors() {
        assert!(matches!(MapSpec::sigmoid(-1.0, 1.0), Err(Error::Config(_))));
        assert!(matches!(MapSpec::rational_unimodal(1.1, 0.0, 3.0), Err(Error::Config(_))));
        assert!(matches!(MapSpec::rational_unimodal(1.1, 1.0, f64::NAN), Err(Error::Config(_))));
        assert!(MapSpec::tabulated(vec![[0.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn derivative_vanishes_at_rational_critical_point() {
        let f = ex1_f();
        let b = 11f64.sqrt();
        assert!(f.derivative(b).unwrap().abs() < 1e-15);
    }

    #[test]
    fn sigmoid_fixed_points_closed_form() {
        let f = MapSpec::sigmoid(2.5, 1.0).unwrap().with_bound(2.5).unwrap();
        let fp = find_fixed_points(&f).unwrap();
        assert!((fp.threshold - 0.5).abs() < 1e-12);
        assert!((fp.carrying - 2.0).abs() < 1e-12);
        assert!(find_critical_point(&f).unwrap().is_none());
    }

    #[test]
    fn tangency_is_rejected() {
        // rho = 2 sqrt(a): a double root at x = 1
        let f = MapSpec::sigmoid(2.0, 1.0).unwrap().with_bound(2.0).unwrap();
        assert!(matches!(find_fixed_points(&f), Err(Error::NotAnAlleeMap(_))));
    }

    #[test]
    fn gain_below_one_fails_existence_axiom() {
        let f = MapSpec::rational_unimodal(0.9, 2.0, 3.0).unwrap();
        let report = validate_allee(&f, 4096).unwrap();
        assert!(!report.passed());
        assert_eq!(report.first_failure().unwrap().axiom, Axiom::FixedPoints);
    }

    #[test]
    fn sigmoid_validates_and_sits_above_diagonal_between_fixed_points() {
        let f = MapSpec::sigmoid(2.5, 1.0).unwrap().with_bound(2.5).unwrap();
        let report = validate_allee(&f, 2000).unwrap();
        assert!(report.passed(), "{report:?}");
        for x in numeric::linspace(0.5001, 1.9999, 1000) {
            assert!(f.apply(x) > x);
        }
    }

    #[test]
    fn small_validation_grid_is_rejected() {
        assert!(matches!(validate_allee(&ex1_f(), 10), Err(Error::Input(_))));
    }

    #[test]
    fn non_allee_custom_map_reports_worst_point() {
        // f(x) = 0.5 x has only the zero fixed point
        let f = MapSpec::closure("half", |x| 0.5 * x, 4.0).unwrap();
        let report = validate_allee(&f, 1000).unwrap();
        assert_eq!(report.first_failure().unwrap().axiom, Axiom::FixedPoints);

        // a map leaving the domain
        let g = MapSpec::closure("big", |x| 3.0 * x * x / (1.0 + x * x), 1.5).unwrap();
        let report = validate_allee(&g, 1000).unwrap();
        let into = report.checks.iter().find(|c| c.axiom == Axiom::MapsIntoDomain).unwrap();
        assert!(!into.passed);
        assert_eq!(into.worst.unwrap().x, 1.5);
    }

    #[test]
    fn custom_closure_profile_detection() {
        let inc = MapSpec::closure("sig", |x| 2.5 * x * x / (1.0 + x * x), 2.5).unwrap();
        assert_eq!(monotonicity(&inc).unwrap(), Monotonicity::StrictlyIncreasing);
        assert!(find_critical_point(&inc).unwrap().is_none());

        let uni = MapSpec::closure("rat", |x| 2.2 * x / ((x - 3.0) * (x - 3.0) + 2.0), 3.5).unwrap();
        let cp = find_critical_point(&uni).unwrap().unwrap();
        assert!((cp.location - 11f64.sqrt()).abs() < 1e-6);

        let wavy = MapSpec::closure("wavy", |x: f64| x + 0.5 * (3.0 * x).sin(), 6.0).unwrap();
        assert!(matches!(find_critical_point(&wavy), Err(Error::NotUnimodal(_))));
    }

    #[test]
    fn tabulated_map_interpolates() {
        let t = MapSpec::tabulated(vec![[0.0, 0.0], [1.0, 0.5], [2.0, 3.0], [4.0, 2.0]]).unwrap();
        assert_eq!(t.bound(), 4.0);
        assert_eq!(t.eval(0.5).unwrap(), 0.25);
        assert_eq!(t.eval(3.0).unwrap(), 2.5);
        let fp = find_fixed_points(&t).unwrap();
        // 0.5 + 2.5 (x - 1) = x  ->  x = 4/3 ; 3 - 0.5 (x - 2) = x -> x = 8/3
        assert!((fp.threshold - 4.0 / 3.0).abs() < 1e-11);
        assert!((fp.carrying - 8.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(ex1_f()).unwrap();
        assert_eq!(v, serde_json::json!({"family":"rational_unimodal","G":1.1,"bp":2.0,"T":3.0,"b":null}));
        let back: MapSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, ex1_f());

        let bad = serde_json::json!({"family":"sigmoid","rho":2.5,"a":1.0,"c":3});
        assert!(serde_json::from_value::<MapSpec>(bad).is_err());
        let closure = MapSpec::closure("id", |x| x, 1.0).unwrap();
        assert!(serde_json::to_value(closure).is_err());
    }
}
