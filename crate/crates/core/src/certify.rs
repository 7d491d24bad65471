//! Numeric checks of the hypotheses behind the extinction/survival results for
//! a pair of Allee maps, each backed by an explicit witness or counterexample.
//!
//! Everything here is floating-point grid evidence, not a proof.

use std::fmt;

use serde::{Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::maps::{self, MapFeatures, MapSpec, Monotonicity, TOL_FP};
use crate::numeric;
use crate::rds::MapChoice;

/// Default grid size for set scans.
pub const SET_GRID: usize = 8192;
/// Bisection width used to refine set boundaries.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Safety margin on the strict inequality `|f'| < 1`.
pub const TOL_DERIV: f64 = 1e-6;
/// Default maximal composition length.
pub const DEFAULT_M_MAX: usize = 12;
/// Default grid for the contraction band.
pub const BAND_GRID: usize = 4096;

/// Two maps on a common bound with their landmarks.
#[derive(Debug, Clone)]
struct Pair {
    f: MapSpec,
    g: MapSpec,
    b: f64,
    ff: MapFeatures,
    fg: MapFeatures,
}

impl Pair {
    fn new(f: &MapSpec, g: &MapSpec) -> Result<Self> {
        let b = f.bound().max(g.bound());
        let f = f.clone().with_bound(b)?;
        let g = g.clone().with_bound(b)?;
        let ff = maps::features(&f)?;
        let fg = maps::features(&g)?;
        Ok(Self { f, g, b, ff, fg })
    }

    fn apply(&self, c: MapChoice, x: f64) -> f64 {
        match c {
            MapChoice::F => self.f.apply(x),
            MapChoice::G => self.g.apply(x),
        }
    }

    /// `min(x - f(x), x - g(x))`
    fn descent_gap(&self, x: f64) -> f64 {
        (x - self.f.apply(x)).min(x - self.g.apply(x))
    }

    /// `min(f(x) - x, g(x) - x)`
    fn ascent_gap(&self, x: f64) -> f64 {
        (self.f.apply(x) - x).min(self.g.apply(x) - x)
    }

    fn require(&self, class: Monotonicity, why: &str) -> Result<()> {
        if self.ff.monotonicity != class || self.fg.monotonicity != class {
            return Err(Error::Precondition(format!(
                "{why} requires both maps to be {class:?}, got f: {:?}, g: {:?}",
                self.ff.monotonicity, self.fg.monotonicity
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Landmark {
    Af,
    Ag,
    Kf,
    Kg,
}

impl Landmark {
    fn swapped(self) -> Self {
        match self {
            Landmark::Af => Landmark::Ag,
            Landmark::Ag => Landmark::Af,
            Landmark::Kf => Landmark::Kg,
            Landmark::Kg => Landmark::Kf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingKind {
    AfAgKfKg,
    AgAfKgKf,
    AfKfAgKg,
    AgKgAfKf,
    Other([Landmark; 4]),
}

impl OrderingKind {
    pub fn from_permutation(perm: [Landmark; 4]) -> Self {
        use Landmark::*;
        match perm {
            [Af, Ag, Kf, Kg] => OrderingKind::AfAgKfKg,
            [Ag, Af, Kg, Kf] => OrderingKind::AgAfKgKf,
            [Af, Kf, Ag, Kg] => OrderingKind::AfKfAgKg,
            [Ag, Kg, Af, Kf] => OrderingKind::AgKgAfKf,
            other => OrderingKind::Other(other),
        }
    }

    pub fn permutation(&self) -> [Landmark; 4] {
        use Landmark::*;
        match self {
            OrderingKind::AfAgKfKg => [Af, Ag, Kf, Kg],
            OrderingKind::AgAfKgKf => [Ag, Af, Kg, Kf],
            OrderingKind::AfKfAgKg => [Af, Kf, Ag, Kg],
            OrderingKind::AgKgAfKf => [Ag, Kg, Af, Kf],
            OrderingKind::Other(p) => *p,
        }
    }

    /// The ordering obtained by exchanging the roles of `f` and `g`.
    pub fn swapped(&self) -> Self {
        Self::from_permutation(self.permutation().map(Landmark::swapped))
    }
}

impl fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.permutation() {
            write!(f, "{l:?}")?;
        }
        Ok(())
    }
}

impl Serialize for OrderingKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabeledValue {
    pub label: Landmark,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingClass {
    pub ordering: OrderingKind,
    /// True for the four orderings with a name; false for `Other`.
    pub named: bool,
    pub sorted: [LabeledValue; 4],
    /// Adjacent landmarks equal within `TOL_FP`.
    pub ties: Vec<(Landmark, Landmark)>,
}

/// Sorts `A_f, A_g, K_f, K_g`; equal values keep the order `Af, Ag, Kf, Kg`.
pub fn classify_ordering(ff: &MapFeatures, fg: &MapFeatures) -> OrderingClass {
    let mut sorted = [
        LabeledValue { label: Landmark::Af, value: ff.threshold },
        LabeledValue { label: Landmark::Ag, value: fg.threshold },
        LabeledValue { label: Landmark::Kf, value: ff.carrying },
        LabeledValue { label: Landmark::Kg, value: fg.carrying },
    ];
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    let ordering = OrderingKind::from_permutation(sorted.map(|l| l.label));
    let ties = sorted
        .windows(2)
        .filter(|w| (w[1].value - w[0].value).abs() <= TOL_FP)
        .map(|w| (w[0].label, w[1].label))
        .collect();
    OrderingClass { named: !matches!(ordering, OrderingKind::Other(_)), ordering, sorted, ties }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Grid approximation of `{x in region : pred(x)}` as a list of closed
/// intervals whose endpoints are refined by bisection and always satisfy
/// `pred`. Open region ends are treated as failing.
fn scan_set<P: Fn(f64) -> bool>(pred: P, lo: f64, hi: f64, closed: (bool, bool), grid_n: usize) -> Vec<Interval> {
    if hi <= lo {
        return Vec::new();
    }
    // Grid over the closed region; open ends are skipped but still serve as
    // refinement anchors.
    let pts: Vec<f64> = numeric::linspace(lo, hi, grid_n + 2).collect();
    let admissible = |i: usize| -> bool {
        let end_ok = (i != 0 || closed.0) && (i != pts.len() - 1 || closed.1);
        end_ok && pred(pts[i])
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        if !admissible(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < pts.len() && admissible(i + 1) {
            i += 1;
        }
        let end = i;
        let left =
            if start == 0 { pts[0] } else { numeric::refine_boundary(&pred, pts[start], pts[start - 1], BOUNDARY_TOL) };
        let right = if end == pts.len() - 1 {
            pts[end]
        } else {
            numeric::refine_boundary(&pred, pts[end], pts[end + 1], BOUNDARY_TOL)
        };
        out.push(Interval { lo: left, hi: right });
        i += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub delta: f64,
    pub u1: Vec<Interval>,
    pub u2: Vec<Interval>,
    pub u3: Vec<Interval>,
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub w3: Option<f64>,
    pub z1: Option<f64>,
    pub z2: Option<f64>,
    pub tail_ok: bool,
    pub all_nonempty: bool,
}

fn inf(set: &[Interval]) -> Option<f64> {
    set.first().map(|i| i.lo)
}

fn sup(set: &[Interval]) -> Option<f64> {
    set.last().map(|i| i.hi)
}

/// The δ-gap sets for two strictly increasing maps:
/// `U1 ⊂ (0, A_f)` and `U3 ⊂ (K_g, b)` where both maps sit at least `delta`
/// below the diagonal, `U2 ⊂ (A_g, K_f)` where both sit at least `delta`
/// above it, plus the tail condition on `[0, b]`.
pub fn theorem2_sets(f: &MapSpec, g: &MapSpec, delta: f64, grid_n: usize) -> Result<Theorem2Report> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Input(format!("delta must be positive, got {delta}")));
    }
    let pair = Pair::new(f, g)?;
    pair.require(Monotonicity::StrictlyIncreasing, "the δ-gap sets")?;
    let down = |x: f64| pair.descent_gap(x) >= delta;
    let up = |x: f64| pair.ascent_gap(x) >= delta;

    let u1 = scan_set(down, 0.0, pair.ff.threshold, (false, false), grid_n);
    let u2 = scan_set(up, pair.fg.threshold, pair.ff.carrying, (false, false), grid_n);
    let u3 = scan_set(down, pair.fg.carrying, pair.b, (false, false), grid_n);

    // for every grid x in [0, b] some grid x* >= x satisfies the gap condition
    let mut seen = false;
    let mut tail_ok = true;
    let grid: Vec<f64> = numeric::linspace(0.0, pair.b, grid_n).collect();
    for &x in grid.iter().rev() {
        seen |= down(x);
        tail_ok &= seen;
    }

    let all_nonempty = !u1.is_empty() && !u2.is_empty() && !u3.is_empty();
    Ok(Theorem2Report {
        delta,
        w1: inf(&u1),
        w2: inf(&u2),
        w3: inf(&u3),
        z1: sup(&u1),
        z2: sup(&u2),
        u1,
        u2,
        u3,
        tail_ok,
        all_nonempty,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionReport {
    pub holds: bool,
    pub sup_abs_derivative: f64,
    pub argmax: f64,
    /// `f'(M_f)`, the derivative at the right end of the band.
    pub derivative_at_peak_value: f64,
    pub band: (f64, f64),
    /// Set when `M_f <= B_f`: the band is empty and the check holds vacuously.
    pub vacuous: bool,
}

/// `sup |f'|` over the band `(B_f, M_f)` (critical point to maximum value),
/// from a `margin_grid` scan refined by golden-section search.
pub fn check_contraction_band(f: &MapSpec, margin_grid: usize) -> Result<ContractionReport> {
    let cp = maps::find_critical_point(f)?
        .ok_or_else(|| Error::Precondition("the contraction band needs a unimodal map".into()))?;
    let (lo, hi) = (cp.location, cp.peak);
    if hi <= lo {
        return Ok(ContractionReport {
            holds: true,
            sup_abs_derivative: 0.0,
            argmax: lo,
            derivative_at_peak_value: f.derivative_unchecked(hi),
            band: (lo, hi),
            vacuous: true,
        });
    }
    let abs_d = |x: f64| f.derivative_unchecked(x).abs();
    let n = margin_grid.max(3);
    let cell = (hi - lo) / (n - 1) as f64;
    let (mut argmax, mut sup) = numeric::linspace(lo, hi, n)
        .map(|x| (x, abs_d(x)))
        .fold((lo, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    let (gx, gv) = numeric::golden_max(abs_d, (argmax - cell).max(lo), (argmax + cell).min(hi), 1e-12);
    if gv > sup {
        sup = gv;
        argmax = gx;
    }
    Ok(ContractionReport {
        holds: sup < 1.0 - TOL_DERIV,
        sup_abs_derivative: sup,
        argmax,
        derivative_at_peak_value: f.derivative_unchecked(hi),
        band: (lo, hi),
        vacuous: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionWitness {
    /// `h_1, ..., h_m`; `h_m` is applied to `K_f` first.
    pub sequence: Vec<MapChoice>,
    pub value: f64,
    pub m: usize,
}

impl CompositionWitness {
    pub fn label(&self) -> String {
        self.sequence.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(",")
    }
}

/// Applies `h_1 ∘ ... ∘ h_m` to `x` (innermost `h_m` first).
pub fn compose(f: &MapSpec, g: &MapSpec, sequence: &[MapChoice], x: f64) -> f64 {
    sequence.iter().rev().fold(x, |acc, c| match c {
        MapChoice::F => f.apply(acc),
        MapChoice::G => g.apply(acc),
    })
}

/// Shortest `h_1 ∘ ... ∘ h_m (K_f) < A_f` over `m <= m_max`, ties broken
/// lexicographically with `f < g`.
pub fn search_composition(f: &MapSpec, g: &MapSpec, m_max: usize) -> Result<Option<CompositionWitness>> {
    let pair = Pair::new(f, g)?;
    let (kf, af) = (pair.ff.carrying, pair.ff.threshold);
    for m in 1..=m_max.min(30) {
        for code in 0u32..(1u32 << m) {
            // bit (m - 1 - j) encodes h_{j+1}, so numeric order is lexicographic
            let sequence: Vec<MapChoice> =
                (0..m).map(|j| if code >> (m - 1 - j) & 1 == 0 { MapChoice::F } else { MapChoice::G }).collect();
            let value = sequence.iter().rev().fold(kf, |x, &c| pair.apply(c, x));
            if value < af {
                return Ok(Some(CompositionWitness { sequence, value, m }));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Below,
    Above,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct T4Extra {
    pub holds: bool,
    /// `f(g(A_f))`
    pub value: f64,
    pub threshold_f: f64,
    pub branch: Branch,
}

/// Whether `f(g(A_f)) != A_f` and on which side it lands.
pub fn check_t4_extra(f: &MapSpec, g: &MapSpec) -> Result<T4Extra> {
    // only f needs to be an Allee map here
    let b = f.bound().max(g.bound());
    let f = f.clone().with_bound(b)?;
    let af = maps::find_fixed_points(&f)?.threshold;
    let value = f.apply(g.apply(af));
    let holds = (value - af).abs() > TOL_FP;
    let branch = if !holds {
        Branch::Equal
    } else if value < af {
        Branch::Below
    } else {
        Branch::Above
    };
    Ok(T4Extra { holds, value, threshold_f: af, branch })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem5Report {
    pub delta: f64,
    pub u: Vec<Interval>,
    pub inf_u: Option<f64>,
}

/// `U = {x in [0, min(A_f, A_g)] : min(x - f(x), x - g(x)) >= delta}`.
pub fn theorem5_u(f: &MapSpec, g: &MapSpec, delta: f64, grid_n: usize) -> Result<Theorem5Report> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Input(format!("delta must be positive, got {delta}")));
    }
    let pair = Pair::new(f, g)?;
    let top = pair.ff.threshold.min(pair.fg.threshold);
    let u = scan_set(|x| pair.descent_gap(x) >= delta, 0.0, top, (true, true), grid_n);
    Ok(Theorem5Report { delta, inf_u: inf(&u), u })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Theorem {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl std::str::FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T1" => Ok(Theorem::T1),
            "T2" => Ok(Theorem::T2),
            "T3" => Ok(Theorem::T3),
            "T4" => Ok(Theorem::T4),
            "T5" => Ok(Theorem::T5),
            _ => Err(Error::Input(format!("unknown theorem `{s}` (expected T1..T5)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
    #[serde(flatten)]
    pub evidence: Map<String, Value>,
}

impl Hypothesis {
    fn new(name: &str, holds: bool, evidence: Value) -> Self {
        let evidence = match evidence {
            Value::Object(m) => m,
            Value::Null => Map::new(),
            other => Map::from_iter([("value".to_string(), other)]),
        };
        Self { name: name.to_string(), holds, evidence }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    AllHold,
    SomeFail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub theorem: Theorem,
    pub hypotheses: Vec<Hypothesis>,
    pub verdict: Verdict,
    /// Grid/floating-point evidence, not a rigorous proof.
    pub rigor: &'static str,
}

impl CertificateReport {
    fn new(theorem: Theorem, hypotheses: Vec<Hypothesis>) -> Self {
        let verdict = if hypotheses.iter().all(|h| h.holds) { Verdict::AllHold } else { Verdict::SomeFail };
        Self { theorem, hypotheses, verdict, rigor: "numeric" }
    }

    pub fn hypothesis(&self, name: &str) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.name == name)
    }
}

fn ordering_hypothesis(pair: &Pair) -> Hypothesis {
    let class = classify_ordering(&pair.ff, &pair.fg);
    let holds = class.ordering == OrderingKind::AfAgKfKg && class.ties.is_empty();
    Hypothesis::new("ordering", holds, json!({ "ordering": class.ordering, "ties": class.ties }))
}

fn contraction_hypothesis(pair: &Pair) -> Result<Hypothesis> {
    let r = check_contraction_band(&pair.f, BAND_GRID)?;
    Ok(Hypothesis::new(
        "contraction_band",
        r.holds,
        json!({
            "sup": r.sup_abs_derivative,
            "argmax": r.argmax,
            "derivative_at_peak_value": r.derivative_at_peak_value,
            "vacuous": r.vacuous,
        }),
    ))
}

fn witness_hypothesis(pair: &Pair) -> Result<Hypothesis> {
    let w = search_composition(&pair.f, &pair.g, DEFAULT_M_MAX)?;
    Ok(match w {
        Some(w) => Hypothesis::new(
            "composition_witness",
            true,
            json!({ "witness": w.label(), "value": w.value, "threshold_f": pair.ff.threshold }),
        ),
        None => Hypothesis::new(
            "composition_witness",
            false,
            json!({ "witness": null, "m_max": DEFAULT_M_MAX, "threshold_f": pair.ff.threshold }),
        ),
    })
}

fn threshold_order(pair: &Pair, f_first: bool) -> Hypothesis {
    let (af, ag) = (pair.ff.threshold, pair.fg.threshold);
    let holds = if f_first { ag - af > TOL_FP } else { af - ag > TOL_FP };
    let name = if f_first { "threshold_af_lt_ag" } else { "threshold_ag_lt_af" };
    Hypothesis::new(name, holds, json!({ "A_f": af, "A_g": ag }))
}

fn require_delta(delta: Option<f64>, theorem: Theorem) -> Result<f64> {
    delta.ok_or_else(|| Error::Precondition(format!("{theorem:?} needs a noise half-width delta")))
}

/// Bundles the hypothesis checks of one theorem for the pair `(f, g)`.
pub fn certify(theorem: Theorem, f: &MapSpec, g: &MapSpec, delta: Option<f64>) -> Result<CertificateReport> {
    let pair = Pair::new(f, g)?;
    let mut hyps = Vec::new();
    match theorem {
        Theorem::T1 | Theorem::T2 => {
            pair.require(Monotonicity::StrictlyIncreasing, &format!("{theorem:?}"))?;
            hyps.push(Hypothesis::new("strictly_increasing", true, Value::Null));
            hyps.push(ordering_hypothesis(&pair));
            if theorem == Theorem::T2 {
                let delta = require_delta(delta, theorem)?;
                let r = theorem2_sets(&pair.f, &pair.g, delta, SET_GRID)?;
                hyps.push(Hypothesis::new("u1_nonempty", !r.u1.is_empty(), json!({ "w1": r.w1, "z1": r.z1 })));
                hyps.push(Hypothesis::new("u2_nonempty", !r.u2.is_empty(), json!({ "w2": r.w2, "z2": r.z2 })));
                hyps.push(Hypothesis::new("u3_nonempty", !r.u3.is_empty(), json!({ "w3": r.w3 })));
                hyps.push(Hypothesis::new("tail_condition", r.tail_ok, json!({ "delta": delta })));
            }
        }
        Theorem::T3 | Theorem::T4 | Theorem::T5 => {
            pair.require(Monotonicity::Unimodal, &format!("{theorem:?}"))?;
            match theorem {
                Theorem::T3 => hyps.push(threshold_order(&pair, true)),
                Theorem::T4 => hyps.push(threshold_order(&pair, false)),
                _ => {}
            }
            hyps.push(contraction_hypothesis(&pair)?);
            hyps.push(witness_hypothesis(&pair)?);
            if theorem == Theorem::T4 {
                let t = check_t4_extra(&pair.f, &pair.g)?;
                hyps.push(Hypothesis::new(
                    "fg_threshold_not_fixed",
                    t.holds,
                    json!({ "value": t.value, "A_f": t.threshold_f, "branch": t.branch }),
                ));
            }
            if theorem == Theorem::T5 {
                let delta = require_delta(delta, theorem)?;
                let r = theorem5_u(&pair.f, &pair.g, delta, SET_GRID)?;
                hyps.push(Hypothesis::new(
                    "u_nonempty",
                    r.inf_u.is_some(),
                    json!({ "inf_u": r.inf_u, "delta": delta }),
                ));
            }
        }
    }
    Ok(CertificateReport::new(theorem, hyps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> (MapSpec, MapSpec) {
        (MapSpec::rational_unimodal(1.1, 2.0, 3.0).unwrap(), MapSpec::rational_unimodal(1.3, 1.0, 3.3).unwrap())
    }

    fn ex2() -> (MapSpec, MapSpec) {
        (MapSpec::rational_unimodal(1.1, 1.05, 2.8).unwrap(), MapSpec::rational_unimodal(1.3, 1.0, 2.9).unwrap())
    }

    fn sig_pair() -> (MapSpec, MapSpec) {
        (
            MapSpec::sigmoid(2.5, 1.0).unwrap().with_bound(3.0).unwrap(),
            MapSpec::sigmoid(3.0, 1.5).unwrap().with_bound(3.0).unwrap(),
        )
    }

    #[test]
    fn example_orderings() {
        let (f, g) = ex1();
        let o = classify_ordering(&maps::features(&f).unwrap(), &maps::features(&g).unwrap());
        assert_eq!(o.ordering, OrderingKind::AfAgKfKg);
        assert!(o.ties.is_empty());

        let (f, g) = ex2();
        let o = classify_ordering(&maps::features(&f).unwrap(), &maps::features(&g).unwrap());
        use Landmark::*;
        assert_eq!(o.ordering, OrderingKind::Other([Ag, Af, Kf, Kg]));
        assert!(!o.named);
    }

    #[test]
    fn identical_maps_tie_everywhere() {
        let (f, _) = ex1();
        let ff = maps::features(&f).unwrap();
        let o = classify_ordering(&ff, &ff);
        assert_eq!(o.ties, vec![(Landmark::Af, Landmark::Ag), (Landmark::Kf, Landmark::Kg)]);
    }

    #[test]
    fn tiny_delta_makes_u1_almost_everything_below_threshold() {
        let (f, g) = sig_pair();
        let r = theorem2_sets(&f, &g, 1e-12, SET_GRID).unwrap();
        assert!(r.w1.unwrap() < 1e-3);
        assert!((r.z1.unwrap() - 0.5).abs() < 1e-3);
        assert!(r.all_nonempty);
    }

    #[test]
    fn huge_delta_empties_all_sets() {
        let (f, g) = sig_pair();
        let r = theorem2_sets(&f, &g, 5.0, 2048).unwrap();
        assert!(r.u1.is_empty() && r.u2.is_empty() && r.u3.is_empty());
        assert!(!r.all_nonempty && !r.tail_ok);
    }

    #[test]
    fn theorem2_rejects_unimodal_maps() {
        let (f, g) = ex1();
        assert!(matches!(theorem2_sets(&f, &g, 0.01, 1000), Err(Error::Precondition(_))));
        assert!(theorem2_sets(&sig_pair().0, &sig_pair().1, 0.0, 1000).is_err());
    }

    #[test]
    fn composition_of_identical_maps_never_drops() {
        let (f, _) = ex1();
        assert!(search_composition(&f, &f, 8).unwrap().is_none());
    }

    #[test]
    fn composition_replay() {
        let (f, g) = ex2();
        let w = search_composition(&f, &g, DEFAULT_M_MAX).unwrap().unwrap();
        let kf = maps::find_fixed_points(&f).unwrap().carrying;
        let b = f.bound().max(g.bound());
        let (fb, gb) = (f.with_bound(b).unwrap(), g.with_bound(b).unwrap());
        assert!((compose(&fb, &gb, &w.sequence, kf) - w.value).abs() <= 1e-12);
        assert_eq!(w.label(), "f,g");
    }

    #[test]
    fn t4_extra_fails_for_fixed_composition() {
        let (f, _) = ex2();
        let af = maps::find_fixed_points(&f).unwrap().threshold;
        let ident = MapSpec::closure("identity-like", |x| x, f.bound()).unwrap();
        let r = check_t4_extra(&f, &ident).unwrap();
        assert!(!r.holds);
        assert_eq!(r.branch, Branch::Equal);
        assert!((r.value - af).abs() <= TOL_FP);
    }

    #[test]
    fn t4_extra_for_example1_is_reported() {
        let (f, g) = ex1();
        let r = check_t4_extra(&f, &g).unwrap();
        let af = 3.0 - 0.2f64.sqrt();
        let oracle = f.apply(g.apply(af));
        assert!((r.value - oracle).abs() < 1e-9);
        assert_eq!(r.branch, Branch::Below);
    }

    #[test]
    fn theorem5_degenerate_and_empty() {
        let (f, g) = ex2();
        let r = theorem5_u(&f, &g, 1e-12, SET_GRID).unwrap();
        assert!(r.inf_u.unwrap() < 1e-3);
        let r = theorem5_u(&f, &g, 10.0, SET_GRID).unwrap();
        assert!(r.inf_u.is_none());
    }

    #[test]
    fn certify_class_mismatch() {
        let (f, g) = ex1();
        assert!(matches!(certify(Theorem::T1, &f, &g, None), Err(Error::Precondition(_))));
        let (f, g) = sig_pair();
        assert!(matches!(certify(Theorem::T3, &f, &g, None), Err(Error::Precondition(_))));
        assert!(matches!(certify(Theorem::T2, &f, &g, None), Err(Error::Precondition(_))));
    }

    #[test]
    fn certify_sigmoid_pair() {
        let (f, g) = sig_pair();
        let r = certify(Theorem::T1, &f, &g, None).unwrap();
        assert_eq!(r.verdict, Verdict::AllHold);
        let r = certify(Theorem::T2, &f, &g, Some(0.05)).unwrap();
        assert_eq!(r.verdict, Verdict::AllHold, "{r:?}");
        let r = certify(Theorem::T2, &f, &g, Some(0.2)).unwrap();
        assert_eq!(r.verdict, Verdict::SomeFail);
        assert!(!r.hypothesis("u1_nonempty").unwrap().holds);
    }

    #[test]
    fn report_json_shape() {
        let (f, g) = ex1();
        let r = certify(Theorem::T3, &f, &g, None).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["theorem"], "T3");
        assert_eq!(v["verdict"], "AllHold");
        let band = v["hypotheses"].as_array().unwrap().iter().find(|h| h["name"] == "contraction_band").unwrap();
        assert_eq!(band["holds"], true);
        assert!((band["sup"].as_f64().unwrap() - 0.475).abs() < 5e-4);
    }

    #[test]
    fn theorem_parsing() {
        assert_eq!("t4".parse::<Theorem>().unwrap(), Theorem::T4);
        assert!("T6".parse::<Theorem>().is_err());
    }
}
