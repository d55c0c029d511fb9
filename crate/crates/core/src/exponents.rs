//! Exact arithmetic over Lebesgue exponents.
//!
//! Every exponent is either a rational number `>= 1` or infinity, and all
//! comparisons are done on reciprocals in exact rational arithmetic, so the
//! admissibility identity `1/p + n/(2q) = n/4` is decidable.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn qi(n: usize) -> Rational {
    Rational::from_integer(n as i128)
}

/// A Lebesgue exponent in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtExponent {
    Finite(Rational),
    Infinity,
}

impl ExtExponent {
    pub const INF: ExtExponent = ExtExponent::Infinity;

    pub fn new(value: Rational) -> Result<Self> {
        if value < Rational::one() {
            return Err(Error::InvalidExponent(format!("{value} < 1")));
        }
        Ok(ExtExponent::Finite(value))
    }

    pub fn int(value: i128) -> Self {
        Self::new(Rational::from_integer(value)).expect("integer exponent must be >= 1")
    }

    pub fn ratio(num: i128, den: i128) -> Self {
        Self::new(q(num, den)).expect("rational exponent must be >= 1")
    }

    /// Builds the exponent whose reciprocal is `recip`, which must lie in `[0, 1]`.
    pub fn from_recip(recip: Rational) -> Result<Self> {
        if recip.is_negative() || recip > Rational::one() {
            return Err(Error::InvalidExponent(format!(
                "reciprocal {recip} outside [0, 1]"
            )));
        }
        if recip.is_zero() {
            Ok(ExtExponent::Infinity)
        } else {
            Ok(ExtExponent::Finite(recip.recip()))
        }
    }

    /// `1/e`, with `1/inf = 0`.
    pub fn recip(&self) -> Rational {
        match self {
            ExtExponent::Finite(v) => v.recip(),
            ExtExponent::Infinity => Rational::zero(),
        }
    }

    /// `1/p` as a float (zero for infinity).
    pub fn recip_f64(&self) -> f64 {
        rat_f64(self.recip())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtExponent::Finite(_))
    }

    pub fn finite(&self) -> Option<Rational> {
        match self {
            ExtExponent::Finite(v) => Some(*v),
            ExtExponent::Infinity => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtExponent::Finite(v) => rat_f64(*v),
            ExtExponent::Infinity => f64::INFINITY,
        }
    }

    /// Conjugate exponent: `1/e + 1/e' = 1`.
    pub fn dual(&self) -> Self {
        Self::from_recip(Rational::one() - self.recip()).expect("dual of a valid exponent")
    }
}

pub fn rat_f64(v: Rational) -> f64 {
    v.to_f64().unwrap_or_else(|| {
        *v.numer() as f64 / *v.denom() as f64
    })
}

impl PartialOrd for ExtExponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtExponent {
    fn cmp(&self, other: &Self) -> Ordering {
        other.recip().cmp(&self.recip())
    }
}

impl fmt::Display for ExtExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtExponent::Infinity => write!(f, "inf"),
            ExtExponent::Finite(v) if v.is_integer() => write!(f, "{}", v.numer()),
            ExtExponent::Finite(v) => write!(f, "{}/{}", v.numer(), v.denom()),
        }
    }
}

/// Parses `inf`, integers, fractions `a/b` and finite decimals (exactly).
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::InvalidExponent(format!("cannot parse {text:?}"));
    if let Some((a, b)) = t.split_once('/') {
        let a: i128 = a.trim().parse().map_err(|_| bad())?;
        let b: i128 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(q(a, b));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.trim_start().starts_with('-');
        let int: i128 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let scale = 10i128.pow(frac.len() as u32);
        let frac: i128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let mag = int.abs() * scale + frac;
        return Ok(q(if negative { -mag } else { mag }, scale));
    }
    let v: i128 = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(v))
}

impl FromStr for ExtExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(ExtExponent::Infinity),
            other => ExtExponent::new(parse_rational(other)?),
        }
    }
}

impl Serialize for ExtExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(i64),
            Float(f64),
        }
        let text = match Repr::deserialize(d)? {
            Repr::Text(t) => t,
            Repr::Int(i) => i.to_string(),
            Repr::Float(f) => format!("{f}"),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::DimensionOutOfRange(n))
    } else {
        Ok(())
    }
}

/// An exponent pair `(p, q)` in dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: ExtExponent,
    pub q: ExtExponent,
    pub n: usize,
}

impl ExponentPair {
    pub fn new(p: ExtExponent, q: ExtExponent, n: usize) -> Self {
        Self { p, q, n }
    }

    pub fn is_admissible(&self) -> Result<bool> {
        is_admissible(self.p, self.q, self.n)
    }

    /// `p * (n/2 - n/q)`; equals 2 for every admissible pair with finite `p`.
    pub fn scaling_product(&self) -> Option<Rational> {
        self.p
            .finite()
            .map(|p| p * decay_rate(self.n, self.q))
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

pub fn is_admissible(p: ExtExponent, q: ExtExponent, n: usize) -> Result<bool> {
    check_dim(n)?;
    let half = Rational::new(1, 2);
    if p.recip() > half || q.recip() > half {
        return Ok(false);
    }
    if n == 2 && p == ExtExponent::int(2) && q == ExtExponent::INF {
        return Ok(false);
    }
    Ok(p.recip() + qi(n) * q.recip() / 2 == qi(n) / 4)
}

/// Dispersive decay rate `n/2 - n/q`.
pub fn decay_rate(n: usize, q: ExtExponent) -> Rational {
    qi(n) / 2 - qi(n) * q.recip()
}

pub fn dual(e: ExtExponent) -> ExtExponent {
    e.dual()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

impl fmt::Display for Criticality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Criticality::Subcritical => "subcritical",
            Criticality::Critical => "critical",
            Criticality::Supercritical => "supercritical",
        };
        f.write_str(s)
    }
}

/// The class `L^r_t L^s_x` of potentials, with `rho = 1/r + n/(2s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentialClass {
    pub r: ExtExponent,
    pub s: ExtExponent,
    pub n: usize,
    pub rho: Rational,
    pub criticality: Criticality,
}

pub fn classify_potential(r: ExtExponent, s: ExtExponent, n: usize) -> Result<PotentialClass> {
    check_dim(n)?;
    let rho = r.recip() + qi(n) * s.recip() / 2;
    let criticality = match rho.cmp(&Rational::one()) {
        Ordering::Less => Criticality::Subcritical,
        Ordering::Equal => Criticality::Critical,
        Ordering::Greater => Criticality::Supercritical,
    };
    Ok(PotentialClass { r, s, n, rho, criticality })
}

/// Exponent of `eps` in `||eps^2 V(eps^2 t, eps x)||_{L^r L^s} = eps^k ||V||`.
pub fn scaling_exponent(r: ExtExponent, s: ExtExponent, n: usize) -> Result<Rational> {
    let class = classify_potential(r, s, n)?;
    Ok(Rational::from_integer(2) * (Rational::one() - class.rho))
}

fn require_critical(class: &PotentialClass) -> Result<()> {
    if class.criticality != Criticality::Critical {
        return Err(Error::WrongRegime {
            expected: "critical".into(),
            found: class.criticality.to_string(),
        });
    }
    Ok(())
}

/// Hölder split for `r in [2, inf)`: `1/p0 = 1/2 - 1/r`, `1/q0 = (n+2)/(2n) - 1/s`.
pub fn holder_split_case_a(r: ExtExponent, s: ExtExponent, n: usize) -> Result<ExponentPair> {
    let class = classify_potential(r, s, n)?;
    require_critical(&class)?;
    if !r.is_finite() || r < ExtExponent::int(2) {
        return Err(Error::pre(format!("case A needs r in [2, inf), got r = {r}")));
    }
    let p0 = ExtExponent::from_recip(q(1, 2) - r.recip())?;
    let q0 = ExtExponent::from_recip(qi(n + 2) / (qi(2) * qi(n)) - s.recip())?;
    let pair = ExponentPair::new(p0, q0, n);
    if !pair.is_admissible()? {
        return Err(Error::InadmissiblePair { p: p0.to_string(), q: q0.to_string(), n });
    }
    Ok(pair)
}

/// Case B pairing for `r in [1, 2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualPairing {
    /// `(r', 2s/(s-2))`, admissible.
    pub admissible: ExponentPair,
    /// `(r, 2s/(s+2))`, the componentwise dual.
    pub dual: (ExtExponent, ExtExponent),
}

pub fn dual_pair_case_b(r: ExtExponent, s: ExtExponent, n: usize) -> Result<DualPairing> {
    let class = classify_potential(r, s, n)?;
    require_critical(&class)?;
    if r > ExtExponent::int(2) {
        return Err(Error::pre(format!("case B needs r in [1, 2], got r = {r}")));
    }
    // 1/(2s/(s-2)) = 1/2 - 1/s and 1/(2s/(s+2)) = 1/2 + 1/s
    let half = q(1, 2);
    let adm_q = ExtExponent::from_recip(half - s.recip())?;
    let dual_q = ExtExponent::from_recip(half + s.recip())?;
    let admissible = ExponentPair::new(r.dual(), adm_q, n);
    if !admissible.is_admissible()? {
        return Err(Error::InadmissiblePair {
            p: admissible.p.to_string(),
            q: adm_q.to_string(),
            n,
        });
    }
    Ok(DualPairing { admissible, dual: (r, dual_q) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    GlobalSubcritical,
    GlobalSupercritical,
    Local,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScheduleKind::GlobalSubcritical => "global-subcritical",
            ScheduleKind::GlobalSupercritical => "global-supercritical",
            ScheduleKind::Local => "local",
        };
        f.write_str(s)
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "global-subcritical" | "subcritical" => Ok(ScheduleKind::GlobalSubcritical),
            "global-supercritical" | "supercritical" => Ok(ScheduleKind::GlobalSupercritical),
            "local" => Ok(ScheduleKind::Local),
            other => Err(Error::pre(format!("unknown schedule kind {other:?}"))),
        }
    }
}

/// Exponents `(alpha, beta)` of a rescaling cascade.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub alpha: Rational,
    pub beta: Rational,
    pub kind: ScheduleKind,
}

/// Minimum headroom of `beta` above its threshold.
pub const MIN_HEADROOM: (i128, i128) = (1, 10);
/// Target `|alpha - beta|`; the ratio sequences grow like `k^{|alpha - beta|/p}`.
pub const TARGET_GAP: i128 = 2;
const MAX_HALVINGS: usize = 64;

impl ScheduleParams {
    /// Checks the defining inequalities against the class they were built for.
    pub fn check(&self, class: &PotentialClass) -> Result<()> {
        let r = class
            .r
            .finite()
            .ok_or_else(|| Error::pre("schedules need r < inf"))?;
        let one = Rational::one();
        let (a, b, rho) = (self.alpha, self.beta, class.rho);
        let lhs = (a - b) / r + b * rho;
        let zero = Rational::zero();
        let ok = match self.kind {
            ScheduleKind::GlobalSubcritical => {
                rho < one && a > b && b > (one - rho).recip() && lhs < b - one
            }
            ScheduleKind::GlobalSupercritical => {
                rho > one && a > zero && a < b && b > (rho - one).recip() && lhs > b + one
            }
            ScheduleKind::Local => {
                rho > one && a > one && a < b && b > (rho - one).recip() && lhs > b + one
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::pre(format!(
                "(alpha, beta) = ({a}, {b}) violates the {} inequalities at rho = {rho}",
                self.kind
            )))
        }
    }
}

fn finite_r(class: &PotentialClass) -> Result<Rational> {
    class
        .r
        .finite()
        .ok_or_else(|| Error::pre("parameter selection needs r < inf"))
}

fn wrong_regime(expected: &str, class: &PotentialClass) -> Error {
    Error::WrongRegime {
        expected: expected.into(),
        found: class.criticality.to_string(),
    }
}

fn headroom(r: Rational) -> Rational {
    let min = q(MIN_HEADROOM.0, MIN_HEADROOM.1);
    let wanted = Rational::from_integer(2 * TARGET_GAP) / r;
    wanted.max(min)
}

/// Parameters for the global cascade in the subcritical regime.
///
/// `beta = (1 + h)/(1 - rho)` and `alpha = beta + g`; the gap `g` starts at
/// [`TARGET_GAP`] and is halved until the strict inequality holds exactly.
pub fn global_subcritical_params(
    r: ExtExponent,
    s: ExtExponent,
    n: usize,
) -> Result<ScheduleParams> {
    let class = classify_potential(r, s, n)?;
    if class.criticality != Criticality::Subcritical {
        return Err(wrong_regime("subcritical", &class));
    }
    let rf = finite_r(&class)?;
    let one = Rational::one();
    let h = headroom(rf);
    let beta = (one + h) / (one - class.rho);
    let mut gap = Rational::from_integer(TARGET_GAP);
    for _ in 0..MAX_HALVINGS {
        let params = ScheduleParams {
            alpha: beta + gap,
            beta,
            kind: ScheduleKind::GlobalSubcritical,
        };
        if params.check(&class).is_ok() {
            return Ok(params);
        }
        gap /= 2;
    }
    Err(Error::Convergence("subcritical parameter search exhausted".into()))
}

fn supercritical_params(class: &PotentialClass, kind: ScheduleKind) -> Result<ScheduleParams> {
    if class.criticality != Criticality::Supercritical {
        return Err(wrong_regime("supercritical", class));
    }
    let rf = finite_r(class)?;
    let one = Rational::one();
    let h = headroom(rf);
    let mut gap = Rational::from_integer(TARGET_GAP);
    // raising beta only adds slack to beta (rho - 1) - 1
    let beta = ((one + h) / (class.rho - one)).max(one + h + gap);
    for _ in 0..MAX_HALVINGS {
        let params = ScheduleParams { alpha: beta - gap, beta, kind };
        if params.check(class).is_ok() {
            return Ok(params);
        }
        gap /= 2;
    }
    Err(Error::Convergence("supercritical parameter search exhausted".into()))
}

/// Parameters for the global cascade in the supercritical regime.
pub fn global_supercritical_params(
    r: ExtExponent,
    s: ExtExponent,
    n: usize,
) -> Result<ScheduleParams> {
    let class = classify_potential(r, s, n)?;
    supercritical_params(&class, ScheduleKind::GlobalSupercritical)
}

/// Parameters for the bounded-interval cascade (`beta > alpha > 1`).
pub fn local_params(r: ExtExponent, s: ExtExponent, n: usize) -> Result<ScheduleParams> {
    let class = classify_potential(r, s, n)?;
    supercritical_params(&class, ScheduleKind::Local)
}

pub fn schedule_params(
    kind: ScheduleKind,
    r: ExtExponent,
    s: ExtExponent,
    n: usize,
) -> Result<ScheduleParams> {
    match kind {
        ScheduleKind::GlobalSubcritical => global_subcritical_params(r, s, n),
        ScheduleKind::GlobalSupercritical => global_supercritical_params(r, s, n),
        ScheduleKind::Local => local_params(r, s, n),
    }
}

/// `r (n/s - 2)`: the power of `T` in `||T^{-2} W(X/T)||_{L^s}^r`.
pub fn pseudoconformal_time_exponent(r: ExtExponent, s: ExtExponent, n: usize) -> Rational {
    let r = r.finite().unwrap_or_else(Rational::zero);
    r * (qi(n) * s.recip() - Rational::from_integer(2))
}

/// Whether `(r, s)` admits the pseudoconformal construction:
/// `1/(2r) + n/(2s) > 1`, which is equivalent to `r (n/s - 2) > -1`.
pub fn pseudoconformal_ok(r: ExtExponent, s: ExtExponent, n: usize) -> Result<bool> {
    check_dim(n)?;
    if !r.is_finite() {
        return Err(Error::pre("pseudoconformal construction needs r < inf"));
    }
    let lo = ExtExponent::Finite(qi(n) / 2);
    let hi = ExtExponent::Finite(qi(n));
    if !(s > lo && s < hi) {
        return Err(Error::pre(format!("need s in ]{lo}, {hi}[, got s = {s}")));
    }
    let cond = r.recip() / 2 + qi(n) * s.recip() / 2 > Rational::one();
    let alt = pseudoconformal_time_exponent(r, s, n) > -Rational::one();
    debug_assert_eq!(cond, alt);
    Ok(cond)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> ExtExponent {
        s.parse().unwrap()
    }

    #[test]
    fn admissibility_examples() {
        assert!(is_admissible(e("inf"), e("2"), 3).unwrap());
        assert!(is_admissible(e("2"), e("6"), 3).unwrap());
        assert!(!is_admissible(e("2"), e("inf"), 2).unwrap());
        assert!(is_admissible(e("4"), e("3"), 3).unwrap());
        assert!(!is_admissible(e("1"), e("2"), 3).unwrap());
        assert!(matches!(
            is_admissible(e("2"), e("2"), 1),
            Err(Error::DimensionOutOfRange(1))
        ));
    }

    #[test]
    fn duals() {
        assert_eq!(e("2").dual(), e("2"));
        assert_eq!(e("inf").dual(), e("1"));
        assert_eq!(e("1").dual(), e("inf"));
        assert_eq!(e("6").dual(), e("6/5"));
    }

    #[test]
    fn parsing() {
        assert_eq!(e("1.5"), e("3/2"));
        assert_eq!(e("Infinity"), ExtExponent::INF);
        assert!("0.5".parse::<ExtExponent>().is_err());
        assert!("x".parse::<ExtExponent>().is_err());
        assert_eq!(e("8/3").to_string(), "8/3");
        assert_eq!(e("6").to_string(), "6");
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_potential(e("2"), e("3"), 3).unwrap().criticality, Criticality::Critical);
        assert_eq!(classify_potential(e("4"), e("6"), 3).unwrap().criticality, Criticality::Subcritical);
        for n in 2..6 {
            let s = ExtExponent::Finite(qi(n) / 2);
            assert_eq!(classify_potential(e("inf"), s, n).unwrap().criticality, Criticality::Critical);
        }
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(scaling_exponent(e("2"), e("3"), 3).unwrap(), Rational::zero());
        assert_eq!(scaling_exponent(e("inf"), e("inf"), 3).unwrap(), Rational::from_integer(2));
        assert_eq!(scaling_exponent(e("1"), e("2"), 3).unwrap(), q(-3, 2));
    }

    #[test]
    fn case_a_examples() {
        let p = holder_split_case_a(e("2"), e("3"), 3).unwrap();
        assert_eq!((p.p, p.q), (e("inf"), e("2")));
        let p = holder_split_case_a(e("4"), e("2"), 3).unwrap();
        assert_eq!((p.p, p.q), (e("4"), e("3")));
        let p = holder_split_case_a(e("2"), e("4"), 4).unwrap();
        assert_eq!((p.p, p.q), (e("inf"), e("2")));
        assert!(holder_split_case_a(e("4"), e("6"), 3).is_err());
        assert!(holder_split_case_a(e("3/2"), e("6"), 4).is_err());
    }

    #[test]
    fn case_b_examples() {
        let b = dual_pair_case_b(e("2"), e("3"), 3).unwrap();
        assert_eq!((b.admissible.p, b.admissible.q), (e("2"), e("6")));
        assert_eq!(b.dual, (e("2"), e("6/5")));
        let b = dual_pair_case_b(e("1"), e("inf"), 3).unwrap();
        assert_eq!((b.admissible.p, b.admissible.q), (e("inf"), e("2")));
        assert_eq!(b.dual, (e("1"), e("2")));
        let b = dual_pair_case_b(e("3/2"), e("6"), 4).unwrap();
        assert_eq!((b.admissible.p, b.admissible.q), (e("3"), e("3")));
        assert_eq!(b.dual, (e("3/2"), e("3/2")));
        // n = 2, r = 2 lands on the excluded endpoint
        assert!(dual_pair_case_b(e("2"), e("2"), 2).is_err());
        assert!(dual_pair_case_b(e("4"), e("2"), 3).is_err());
    }

    #[test]
    fn subcritical_params_examples() {
        let class = classify_potential(e("4"), e("6"), 3).unwrap();
        let p = global_subcritical_params(e("4"), e("6"), 3).unwrap();
        p.check(&class).unwrap();
        let lhs = (p.alpha - p.beta) / 4 + p.beta * q(1, 2);
        assert!(lhs < p.beta - 1);

        let class = classify_potential(e("2"), e("4"), 2).unwrap();
        assert_eq!(class.rho, q(3, 4));
        let p = global_subcritical_params(e("2"), e("4"), 2).unwrap();
        assert!(p.beta > Rational::from_integer(4));
        p.check(&class).unwrap();

        let rho_half = classify_potential(e("4"), e("6"), 3).unwrap();
        let bad = ScheduleParams {
            alpha: Rational::from_integer(2),
            beta: Rational::from_integer(2),
            kind: ScheduleKind::GlobalSubcritical,
        };
        assert!(bad.check(&rho_half).is_err());
        assert!(matches!(
            global_subcritical_params(e("2"), e("3"), 3),
            Err(Error::WrongRegime { .. })
        ));
    }

    #[test]
    fn local_params_examples() {
        let class = classify_potential(e("1"), e("2"), 3).unwrap();
        assert_eq!(class.rho, q(7, 4));
        let example = ScheduleParams { alpha: q(7, 5), beta: q(3, 2), kind: ScheduleKind::Local };
        example.check(&class).unwrap();
        let p = local_params(e("1"), e("2"), 3).unwrap();
        p.check(&class).unwrap();
        assert!(p.beta > p.alpha && p.alpha > Rational::one());

        let class = classify_potential(e("1"), e("1"), 2).unwrap();
        assert_eq!(class.rho, Rational::from_integer(2));
        let example = ScheduleParams { alpha: q(3, 2), beta: q(8, 5), kind: ScheduleKind::Local };
        example.check(&class).unwrap();
        local_params(e("1"), e("1"), 2).unwrap().check(&class).unwrap();

        let equal = ScheduleParams { alpha: q(3, 1), beta: q(3, 1), kind: ScheduleKind::Local };
        assert!(equal.check(&class).is_err());
        assert!(local_params(e("4"), e("6"), 3).is_err());
    }

    #[test]
    fn pseudoconformal_examples() {
        assert!(pseudoconformal_ok(e("1"), e("2"), 3).unwrap());
        assert_eq!(pseudoconformal_time_exponent(e("1"), e("2"), 3), q(-1, 2));
        assert!(matches!(pseudoconformal_ok(e("2"), e("3"), 3), Err(Error::Precondition(_))));
        assert!(!pseudoconformal_ok(e("2"), e("3/2"), 2).unwrap());
    }

    #[test]
    fn admissible_scaling_product_is_two() {
        let pair = ExponentPair::new(e("8/3"), e("4"), 3);
        assert!(pair.is_admissible().unwrap());
        assert_eq!(pair.scaling_product(), Some(Rational::from_integer(2)));
        assert_eq!(decay_rate(3, ExtExponent::INF), q(3, 2));
    }
}
