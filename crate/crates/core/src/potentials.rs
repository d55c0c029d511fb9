//! Time-dependent real potentials, their mixed `L^r_t L^s_x` norms, and the
//! greedy partition of an interval into pieces of small norm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{pseudoconformal_ok, rat_f64, ExtExponent, ScheduleKind, ScheduleParams};
use crate::spectral::{lq_norm, resample, resample_mapped, ComplexField, Grid};

const REAL_TOL: f64 = 1e-12;

/// Which one-sided limit to take at a discontinuity in time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Scalar time factor multiplying a static profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulation {
    /// `offset + slope * t`.
    Affine { offset: f64, slope: f64 },
    /// `levels[i]` on `[edges[i], edges[i+1])`, zero outside.
    Steps { edges: Vec<f64>, levels: Vec<f64> },
}

impl Modulation {
    pub fn validate(&self) -> Result<()> {
        match self {
            Modulation::Affine { offset, slope } => {
                if offset.is_finite() && slope.is_finite() {
                    Ok(())
                } else {
                    Err(Error::pre("affine modulation must be finite"))
                }
            }
            Modulation::Steps { edges, levels } => {
                if edges.len() != levels.len() + 1 || levels.is_empty() {
                    return Err(Error::pre("steps need one more edge than levels"));
                }
                if edges.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::pre("step edges must increase strictly"));
                }
                if levels.iter().chain(edges).any(|v| !v.is_finite()) {
                    return Err(Error::pre("step data must be finite"));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, t: f64, side: Side) -> f64 {
        match self {
            Modulation::Affine { offset, slope } => offset + slope * t,
            Modulation::Steps { edges, levels } => match step_index(edges, t, side) {
                Some(i) => levels[i],
                None => 0.0,
            },
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Modulation::Affine { .. } => Vec::new(),
            Modulation::Steps { edges, .. } => edges.clone(),
        }
    }

    fn segment(&self, t: f64) -> Option<u64> {
        match self {
            Modulation::Affine { slope, .. } => (*slope == 0.0).then_some(0),
            Modulation::Steps { edges, .. } => {
                Some(step_index(edges, t, Side::Right).map_or(0, |i| i as u64 + 1))
            }
        }
    }
}

fn step_index(edges: &[f64], t: f64, side: Side) -> Option<usize> {
    let inside = match side {
        Side::Right => t >= edges[0] && t < edges[edges.len() - 1],
        Side::Left => t > edges[0] && t <= edges[edges.len() - 1],
    };
    if !inside {
        return None;
    }
    let i = match side {
        Side::Right => edges.partition_point(|&e| e <= t),
        Side::Left => edges.partition_point(|&e| e < t),
    };
    Some(i - 1)
}

/// One rescaling window `[start, start + length)` with scale `eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub k: usize,
    pub start: f64,
    pub length: f64,
    pub eps: f64,
}

impl Window {
    pub fn end(&self) -> f64 {
        self.start + self.length
    }
}

/// A finite prefix of a rescaling cascade.
///
/// Window `k` has length `length_scale * k^length_power` and scale
/// `k^eps_power`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub params: ScheduleParams,
    pub windows: Vec<Window>,
    pub length_scale: f64,
    pub length_power: f64,
    pub eps_power: f64,
    /// End of the full cascade (infinite for the global kinds).
    pub horizon: f64,
}

/// `zeta(a)` for `a > 1` by partial sums and an Euler-Maclaurin tail.
pub fn zeta(a: f64) -> f64 {
    assert!(a > 1.0);
    let m = 1000usize;
    let mf = m as f64;
    let head: f64 = (1..=m).rev().map(|k| (k as f64).powf(-a)).sum();
    head + mf.powf(1.0 - a) / (a - 1.0) - 0.5 * mf.powf(-a) + a * mf.powf(-a - 1.0) / 12.0
}

impl Schedule {
    /// Builds the first `count` windows. For the local kind `total` fixes the
    /// length of the whole cascade; it defaults to `zeta(alpha)`.
    pub fn build(params: ScheduleParams, count: usize, total: Option<f64>) -> Result<Self> {
        if count == 0 {
            return Err(Error::pre("a schedule needs at least one window"));
        }
        let alpha = rat_f64(params.alpha);
        let beta = rat_f64(params.beta);
        let (length_scale, length_power, eps_power) = match params.kind {
            ScheduleKind::GlobalSubcritical => (1.0, alpha, -beta / 2.0),
            ScheduleKind::GlobalSupercritical => (1.0, -alpha, beta / 2.0),
            ScheduleKind::Local => {
                if alpha <= 1.0 {
                    return Err(Error::pre("local cascade needs alpha > 1"));
                }
                let c = match total {
                    Some(t) if t > 0.0 && t.is_finite() => t / zeta(alpha),
                    Some(t) => return Err(Error::pre(format!("total length {t} must be positive"))),
                    None => 1.0,
                };
                (c, -alpha, beta / 2.0)
            }
        };
        let mut windows = Vec::with_capacity(count);
        let mut start = 0.0;
        for k in 1..=count {
            let kf = k as f64;
            let length = length_scale * kf.powf(length_power);
            let eps = kf.powf(eps_power);
            if params.kind == ScheduleKind::GlobalSupercritical {
                start = kf;
            }
            windows.push(Window { k, start, length, eps });
            start += length;
        }
        let horizon = match params.kind {
            ScheduleKind::Local => length_scale * zeta(alpha),
            _ => f64::INFINITY,
        };
        Ok(Self { kind: params.kind, params, windows, length_scale, length_power, eps_power, horizon })
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// End of the last built window.
    pub fn end(&self) -> f64 {
        self.windows.last().map_or(0.0, Window::end)
    }

    /// Index of the window containing `t`, as a one-sided limit.
    pub fn window_at(&self, t: f64, side: Side) -> Option<usize> {
        let i = match side {
            Side::Right => self.windows.partition_point(|w| w.start <= t),
            Side::Left => self.windows.partition_point(|w| w.start < t),
        };
        if i == 0 {
            return None;
        }
        let w = &self.windows[i - 1];
        let inside = match side {
            Side::Right => t < w.end(),
            Side::Left => t <= w.end(),
        };
        inside.then_some(i - 1)
    }

    /// Exponent `gamma` with `len_k^{1/r} eps_k^{2 - n/s} = c k^gamma`.
    pub fn summand_exponent(&self, r: ExtExponent, s: ExtExponent, n: usize) -> f64 {
        let d = 2.0 - n as f64 * s.recip_f64();
        self.length_power * r.recip_f64() + self.eps_power * d
    }
}

/// A term of a sum potential together with the class it is measured in.
#[derive(Clone, Debug, PartialEq)]
pub struct SumTerm {
    pub potential: PotentialSpec,
    pub r: ExtExponent,
    pub s: ExtExponent,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Zero,
    Static(ComplexField),
    /// `m(t) W(x)`.
    Modulated { profile: ComplexField, modulation: Modulation },
    /// `eps_k^2 W(eps_k x)` on window `k`, zero between windows.
    PatchedRescaled { profile: ComplexField, schedule: Schedule },
    /// `T^{-2} W(X/T)` for `T > 0`.
    Pseudoconformal { profile: ComplexField },
    /// `eps^2 V(eps^2 t, eps x)`.
    Rescaled { inner: Box<PotentialSpec>, eps: f64 },
    Sum(Vec<SumTerm>),
}

fn check_real(profile: &ComplexField) -> Result<()> {
    if profile.is_real(REAL_TOL * profile.max_abs().max(1.0)) {
        Ok(())
    } else {
        Err(Error::pre("potential profiles must be real-valued"))
    }
}

fn real_part(f: ComplexField) -> ComplexField {
    let grid = *f.grid();
    let values = f.into_values().into_iter().map(|v| v.re.into()).collect();
    ComplexField::from_raw(grid, values)
}

impl PotentialSpec {
    pub fn static_profile(profile: ComplexField) -> Result<Self> {
        check_real(&profile)?;
        Ok(Self::Static(real_part(profile)))
    }

    pub fn modulated(profile: ComplexField, modulation: Modulation) -> Result<Self> {
        check_real(&profile)?;
        modulation.validate()?;
        Ok(Self::Modulated { profile: real_part(profile), modulation })
    }

    pub fn patched(profile: ComplexField, schedule: Schedule) -> Result<Self> {
        check_real(&profile)?;
        if schedule.windows.windows(2).any(|w| !(w[1].start >= w[0].end() && w[1].start > w[0].start))
        {
            return Err(Error::pre("schedule windows must be disjoint and ordered"));
        }
        Ok(Self::PatchedRescaled { profile: real_part(profile), schedule })
    }

    pub fn pseudoconformal(profile: ComplexField) -> Result<Self> {
        check_real(&profile)?;
        Ok(Self::Pseudoconformal { profile: real_part(profile) })
    }

    pub fn rescaled(inner: PotentialSpec, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::pre(format!("scale {eps} must be positive")));
        }
        Ok(Self::Rescaled { inner: Box::new(inner), eps })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Rescaled { inner, .. } => inner.is_zero(),
            Self::Sum(terms) => terms.iter().all(|t| t.potential.is_zero()),
            _ => false,
        }
    }

    /// Times in `(a, b)` where the potential may jump.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(&mut out);
        out.retain(|&t| t > a && t < b);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
        out
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Self::Zero | Self::Static(_) | Self::Pseudoconformal { .. } => {}
            Self::Modulated { modulation, .. } => out.extend(modulation.breakpoints()),
            Self::PatchedRescaled { schedule, .. } => {
                for w in &schedule.windows {
                    out.push(w.start);
                    out.push(w.end());
                }
            }
            Self::Rescaled { inner, eps } => {
                let mut sub = Vec::new();
                inner.collect_breakpoints(&mut sub);
                out.extend(sub.into_iter().map(|t| t / (eps * eps)));
            }
            Self::Sum(terms) => terms.iter().for_each(|t| t.potential.collect_breakpoints(out)),
        }
    }

    /// Key that is constant on time intervals where the potential does not
    /// change; `None` when it varies continuously.
    pub fn segment(&self, t: f64) -> Option<u64> {
        match self {
            Self::Zero | Self::Static(_) => Some(0),
            Self::Modulated { modulation, .. } => modulation.segment(t),
            Self::PatchedRescaled { schedule, .. } => {
                Some(schedule.window_at(t, Side::Right).map_or(0, |i| i as u64 + 1))
            }
            Self::Pseudoconformal { .. } => None,
            Self::Rescaled { inner, eps } => inner.segment(eps * eps * t),
            Self::Sum(terms) => {
                let mut key = 0u64;
                for term in terms {
                    let k = term.potential.segment(t)?;
                    key = key.wrapping_mul(1_000_003).wrapping_add(k);
                }
                Some(key)
            }
        }
    }

    pub fn evaluate(&self, t: f64, grid: &Grid) -> Result<ComplexField> {
        self.evaluate_side(t, grid, Side::Right)
    }

    /// Samples `V(t, .)` on `grid`, taking the given one-sided limit in time.
    pub fn evaluate_side(&self, t: f64, grid: &Grid, side: Side) -> Result<ComplexField> {
        Ok(match self {
            Self::Zero => ComplexField::zeros(*grid),
            Self::Static(p) => resample(p, grid),
            Self::Modulated { profile, modulation } => {
                resample(profile, grid).scale_real(modulation.value(t, side))
            }
            Self::PatchedRescaled { profile, schedule } => match schedule.window_at(t, side) {
                Some(i) => {
                    let eps = schedule.windows[i].eps;
                    resample_mapped(profile, grid, |x| eps * x).scale_real(eps * eps)
                }
                None => ComplexField::zeros(*grid),
            },
            Self::Pseudoconformal { profile } => {
                if !(t > 0.0) {
                    return Err(Error::Singularity(t));
                }
                resample_mapped(profile, grid, |x| x / t).scale_real(t.powi(-2))
            }
            Self::Rescaled { inner, eps } => {
                let scaled = grid.scaled(*eps);
                inner
                    .evaluate_side(eps * eps * t, &scaled, side)?
                    .with_grid(*grid)
                    .scale_real(eps * eps)
            }
            Self::Sum(terms) => {
                let mut acc = ComplexField::zeros(*grid);
                for term in terms {
                    acc = acc.add(&term.potential.evaluate_side(t, grid, side)?);
                }
                acc
            }
        })
    }

    /// `||V(t, .)||_{L^s}`.
    ///
    /// Rescaled profiles are measured on their self-similar grid, which makes
    /// the change of variables exact. Only sums are sampled on `grid`.
    pub fn slice_norm(&self, t: f64, s: ExtExponent, grid: &Grid, side: Side) -> Result<f64> {
        self.slice_norm_cached(t, s, grid, side, &mut NormCache::default())
    }

    fn slice_norm_cached(
        &self,
        t: f64,
        s: ExtExponent,
        grid: &Grid,
        side: Side,
        cache: &mut NormCache,
    ) -> Result<f64> {
        let n = grid.dim() as f64;
        let sr = s.recip_f64();
        Ok(match self {
            Self::Zero => 0.0,
            Self::Static(p) => cache.norm(p, s),
            Self::Modulated { profile, modulation } => {
                modulation.value(t, side).abs() * cache.norm(profile, s)
            }
            Self::PatchedRescaled { profile, schedule } => match schedule.window_at(t, side) {
                Some(i) => schedule.windows[i].eps.powf(2.0 - n * sr) * cache.norm(profile, s),
                None => 0.0,
            },
            Self::Pseudoconformal { profile } => {
                if !(t > 0.0) {
                    return Err(Error::Singularity(t));
                }
                t.powf(n * sr - 2.0) * cache.norm(profile, s)
            }
            Self::Rescaled { inner, eps } => {
                let scaled = grid.scaled(*eps);
                eps.powf(2.0 - n * sr)
                    * inner.slice_norm_cached(eps * eps * t, s, &scaled, side, cache)?
            }
            Self::Sum(_) => lq_norm(&self.evaluate_side(t, grid, side)?, s),
        })
    }
}

/// Profile norms keyed by address, so that time sweeps compute each once.
#[derive(Default)]
struct NormCache {
    entries: Vec<(*const ComplexField, ExtExponent, f64)>,
}

impl NormCache {
    fn norm(&mut self, profile: &ComplexField, s: ExtExponent) -> f64 {
        let key = profile as *const ComplexField;
        if let Some(&(_, _, v)) = self.entries.iter().find(|(k, e, _)| *k == key && *e == s) {
            return v;
        }
        let v = lq_norm(profile, s);
        self.entries.push((key, s, v));
        v
    }
}

/// Sample nodes of the composite trapezoid on `[a, b]`, split at the jumps
/// of `v`; each node carries the side from which it is evaluated.
fn quadrature_nodes(v: &PotentialSpec, a: f64, b: f64, dt: f64) -> Vec<Vec<(f64, Side)>> {
    let mut cuts = vec![a];
    cuts.extend(v.breakpoints(a, b));
    cuts.push(b);
    cuts.windows(2)
        .map(|w| {
            let (c, d) = (w[0], w[1]);
            let m = ((d - c) / dt).ceil().max(1.0) as usize;
            (0..=m)
                .map(|i| {
                    let t = if i == m { d } else { c + (d - c) * i as f64 / m as f64 };
                    let side = if i == m { Side::Left } else { Side::Right };
                    (t, side)
                })
                .collect()
        })
        .collect()
}

fn check_norm_args(interval: (f64, f64), dt: f64) -> Result<()> {
    let (a, b) = interval;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::pre(format!("dt = {dt} must be positive")));
    }
    if !(a.is_finite() && b.is_finite() && b >= a) {
        return Err(Error::pre(format!("bad interval [{a}, {b}]")));
    }
    Ok(())
}

/// `||V||_{L^r(I) L^s}` by the composite trapezoid rule in time.
pub fn mixed_norm(
    v: &PotentialSpec,
    r: ExtExponent,
    s: ExtExponent,
    interval: (f64, f64),
    dt: f64,
    grid: &Grid,
) -> Result<f64> {
    check_norm_args(interval, dt)?;
    let (a, b) = interval;
    if b == a || v.is_zero() {
        return Ok(0.0);
    }
    let nodes = quadrature_nodes(v, a, b, dt);
    let mut cache = NormCache::default();
    match r.finite() {
        None => {
            let mut best = 0.0f64;
            for (t, side) in nodes.into_iter().flatten() {
                best = best.max(v.slice_norm_cached(t, s, grid, side, &mut cache)?);
            }
            Ok(best)
        }
        Some(r) => {
            let r = rat_f64(r);
            let mut total = 0.0;
            for piece in nodes {
                let vals = piece
                    .iter()
                    .map(|&(t, side)| Ok(v.slice_norm_cached(t, s, grid, side, &mut cache)?.powf(r)))
                    .collect::<Result<Vec<f64>>>()?;
                for i in 1..piece.len() {
                    total += 0.5 * (piece[i].0 - piece[i - 1].0) * (vals[i] + vals[i - 1]);
                }
            }
            Ok(total.powf(1.0 / r))
        }
    }
}

/// Limit of a series `sum c k^gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SeriesValue {
    /// Partial sum over the built windows plus an integral-test tail bound.
    Convergent { partial: f64, tail: f64 },
    DivergentTail { exponent: f64 },
}

impl SeriesValue {
    pub fn bound(&self) -> Option<f64> {
        match self {
            SeriesValue::Convergent { partial, tail } => Some(partial + tail),
            SeriesValue::DivergentTail { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchedNorm {
    /// `sum_k len_k^{1/r} eps_k^{2 - n/s} ||W||_s` over all windows.
    pub series: SeriesValue,
    pub partial_sums: Vec<f64>,
    /// Exact mixed norm of the potential restricted to the built windows.
    pub window_norm: f64,
    pub summand_exponent: f64,
}

/// Closed-form norm data of a patched potential.
pub fn analytic_patched_norm(
    schedule: &Schedule,
    r: ExtExponent,
    s: ExtExponent,
    n: usize,
    w_snorm: f64,
) -> Result<PatchedNorm> {
    if !(w_snorm >= 0.0 && w_snorm.is_finite()) {
        return Err(Error::pre("profile norm must be finite and nonnegative"));
    }
    if schedule.is_empty() {
        return Err(Error::pre("empty schedule"));
    }
    let d = 2.0 - n as f64 * s.recip_f64();
    let gamma = schedule.summand_exponent(r, s, n);
    let k_last = schedule.len() as f64;
    match r.finite() {
        None => {
            let mut partial_sums = Vec::with_capacity(schedule.len());
            let mut best = 0.0f64;
            for w in &schedule.windows {
                best = best.max(w.eps.powf(d) * w_snorm);
                partial_sums.push(best);
            }
            let series = if gamma <= 0.0 {
                SeriesValue::Convergent { partial: best, tail: 0.0 }
            } else {
                SeriesValue::DivergentTail { exponent: gamma }
            };
            Ok(PatchedNorm { series, partial_sums, window_norm: best, summand_exponent: gamma })
        }
        Some(r) => {
            let r = rat_f64(r);
            let mut partial_sums = Vec::with_capacity(schedule.len());
            let (mut sum, mut pow_sum) = (0.0, 0.0);
            for w in &schedule.windows {
                let slice = w.eps.powf(d) * w_snorm;
                sum += w.length.powf(1.0 / r) * slice;
                pow_sum += w.length * slice.powf(r);
                partial_sums.push(sum);
            }
            let coeff = schedule.length_scale.powf(1.0 / r) * w_snorm;
            let series = if gamma < -1.0 {
                let tail = coeff * k_last.powf(gamma + 1.0) / (-gamma - 1.0);
                SeriesValue::Convergent { partial: sum, tail }
            } else if coeff == 0.0 {
                SeriesValue::Convergent { partial: 0.0, tail: 0.0 }
            } else {
                SeriesValue::DivergentTail { exponent: gamma }
            };
            Ok(PatchedNorm {
                series,
                partial_sums,
                window_norm: pow_sum.powf(1.0 / r),
                summand_exponent: gamma,
            })
        }
    }
}

/// `(int_delta^1 T^{r(n/s - 2)} dT)^{1/r} ||W||_s`.
pub fn analytic_pseudoconformal_norm(
    r: ExtExponent,
    s: ExtExponent,
    n: usize,
    delta: f64,
    w_snorm: f64,
) -> Result<f64> {
    if !pseudoconformal_ok(r, s, n)? {
        return Err(Error::DivergentNorm(format!(
            "(r, s) = ({r}, {s}) gives a non-integrable singularity in dimension {n}"
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::pre(format!("delta = {delta} must lie in [0, 1]")));
    }
    let rf = rat_f64(r.finite().expect("checked finite"));
    let e = rf * (n as f64 * s.recip_f64() - 2.0);
    let integral = if (e + 1.0).abs() < 1e-14 {
        -delta.ln()
    } else {
        (1.0 - delta.powf(e + 1.0)) / (e + 1.0)
    };
    Ok(integral.powf(1.0 / rf) * w_snorm)
}

/// A piece of a partition with its mixed norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub norm: f64,
}

/// Slice boundaries of a partition scan: a uniform grid of step about `dt`
/// merged with the jumps of `v`.
pub fn slice_times(v: &PotentialSpec, interval: (f64, f64), dt: f64) -> Vec<f64> {
    let (a, b) = interval;
    let m = ((b - a) / dt).ceil().max(1.0) as usize;
    let mut ts: Vec<f64> = (0..m).map(|i| a + (b - a) * i as f64 / m as f64).collect();
    ts.extend(v.breakpoints(a, b));
    ts.push(b);
    ts.sort_by(f64::total_cmp);
    let tol = 1e-9 * (b - a) / m as f64;
    ts.dedup_by(|x, y| (*x - *y).abs() <= tol);
    *ts.last_mut().expect("nonempty") = b;
    ts
}

/// Per-slice contributions `int_slice ||V||_s^r dt` (trapezoid), or slice
/// sup norms when `r = inf`.
pub fn slice_weights(
    v: &PotentialSpec,
    r: ExtExponent,
    s: ExtExponent,
    times: &[f64],
    grid: &Grid,
) -> Result<Vec<f64>> {
    let rf = r.finite().map(rat_f64);
    let mut cache = NormCache::default();
    times
        .windows(2)
        .map(|w| {
            let left = v.slice_norm_cached(w[0], s, grid, Side::Right, &mut cache)?;
            let right = v.slice_norm_cached(w[1], s, grid, Side::Left, &mut cache)?;
            Ok(match rf {
                Some(r) => 0.5 * (w[1] - w[0]) * (left.powf(r) + right.powf(r)),
                None => left.max(right),
            })
        })
        .collect()
}

/// Greedy left-to-right partition so that every piece has norm at most `tau`.
pub fn partition_interval(
    v: &PotentialSpec,
    r: ExtExponent,
    s: ExtExponent,
    interval: (f64, f64),
    tau: f64,
    dt: f64,
    grid: &Grid,
) -> Result<Vec<Piece>> {
    check_norm_args(interval, dt)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::pre(format!("tau = {tau} must be positive and finite")));
    }
    let (a, b) = interval;
    if b == a {
        return Err(Error::pre("cannot partition an empty interval"));
    }
    let times = slice_times(v, interval, dt);
    let weights = slice_weights(v, r, s, &times, grid)?;
    let Some(rr) = r.finite().map(rat_f64) else {
        let norm = weights.iter().cloned().fold(0.0, f64::max);
        if norm > tau {
            return Err(Error::CannotPartition { norm, tau });
        }
        return Ok(vec![Piece { start: a, end: b, norm }]);
    };
    let budget = tau.powf(rr) * (1.0 + 1e-12);
    let mut pieces = Vec::new();
    let (mut start, mut acc) = (a, 0.0);
    for (i, &w) in weights.iter().enumerate() {
        if w > budget {
            return Err(Error::UnsplittableSlice { t: times[i], norm: w.powf(1.0 / rr), tau });
        }
        if acc + w > budget {
            pieces.push(Piece { start, end: times[i], norm: acc.powf(1.0 / rr) });
            start = times[i];
            acc = 0.0;
        }
        acc += w;
    }
    pieces.push(Piece { start, end: b, norm: acc.powf(1.0 / rr) });
    Ok(pieces)
}

/// One CSV row of per-window norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowNormRow {
    pub k: usize,
    pub start: f64,
    pub length: f64,
    pub eps: f64,
    pub piece_norm: f64,
}

/// `||V||_{L^r(window_k) L^s}` for every window of a patched potential.
pub fn window_norm_rows(
    schedule: &Schedule,
    r: ExtExponent,
    s: ExtExponent,
    n: usize,
    w_snorm: f64,
) -> Vec<WindowNormRow> {
    let d = 2.0 - n as f64 * s.recip_f64();
    schedule
        .windows
        .iter()
        .map(|w| WindowNormRow {
            k: w.k,
            start: w.start,
            length: w.length,
            eps: w.eps,
            piece_norm: w.length.powf(r.recip_f64()) * w.eps.powf(d) * w_snorm,
        })
        .collect()
}

/// Serializable description of a potential. The profile is a reference
/// resolved by the caller (a snapshot path or a named built-in).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// `zero`, `static`, `patched` or `pseudoconformal`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    pub r: ExtExponent,
    pub s: ExtExponent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{global_subcritical_params, global_supercritical_params, local_params};
    use crate::spectral::gaussian;

    fn e(v: i128) -> ExtExponent {
        ExtExponent::int(v)
    }

    fn constant(grid: Grid, c: f64) -> PotentialSpec {
        PotentialSpec::static_profile(ComplexField::from_real_fn(grid, |_| c)).unwrap()
    }

    #[test]
    fn zero_evaluates_to_zero() {
        let g = Grid::new(2, 4.0, 16).unwrap();
        let z = PotentialSpec::Zero.evaluate(3.7, &g).unwrap();
        assert_eq!(z, ComplexField::zeros(g));
    }

    #[test]
    fn rejects_complex_profiles() {
        let g = Grid::new(1, 4.0, 16).unwrap();
        let f = ComplexField::from_fn(g, |x| num_complex::Complex64::new(0.0, x[0]));
        assert!(PotentialSpec::static_profile(f).is_err());
    }

    #[test]
    fn patched_window_with_unit_scale_is_profile() {
        let g = Grid::new(1, 8.0, 64).unwrap();
        let w = gaussian(g, 1.0);
        let params = global_subcritical_params(e(4), e(6), 3).unwrap();
        let sched = Schedule::build(params, 3, None).unwrap();
        let v = PotentialSpec::patched(w.clone(), sched.clone()).unwrap();
        assert_eq!(v.evaluate(0.5, &g).unwrap(), w);
        // window 2 starts at 1 with eps = 2^{-2}
        let v2 = v.evaluate(1.5, &g).unwrap();
        let eps = sched.windows[1].eps;
        assert!((eps - 0.25).abs() < 1e-15);
        let exact = ComplexField::from_real_fn(g, |x| eps * eps * (-(eps * x[0]).powi(2) / 2.0).exp());
        assert!(v2.sub(&exact).max_abs() < 1e-12);
        assert_eq!(v.evaluate(1e9, &g).unwrap(), ComplexField::zeros(g));
    }

    #[test]
    fn pseudoconformal_at_one_is_profile_and_singular_at_zero() {
        let g = Grid::new(2, 6.0, 32).unwrap();
        let w = gaussian(g, 1.0);
        let v = PotentialSpec::pseudoconformal(w.clone()).unwrap();
        assert_eq!(v.evaluate(1.0, &g).unwrap(), w);
        assert!(matches!(v.evaluate(0.0, &g), Err(Error::Singularity(_))));
        assert!(matches!(v.evaluate(-1.0, &g), Err(Error::Singularity(_))));
    }

    #[test]
    fn schedules_match_their_definitions() {
        let p = global_subcritical_params(e(4), e(6), 3).unwrap();
        let s = Schedule::build(p, 4, None).unwrap();
        let (a, b) = (rat_f64(p.alpha), rat_f64(p.beta));
        let mut t = 0.0;
        for (i, w) in s.windows.iter().enumerate() {
            let k = (i + 1) as f64;
            assert_eq!(w.start, t);
            assert!((w.length - k.powf(a)).abs() < 1e-9 * w.length);
            assert!((w.eps - k.powf(-b / 2.0)).abs() < 1e-15);
            t += w.length;
        }
        let p = global_supercritical_params(e(1), e(2), 3).unwrap();
        let s = Schedule::build(p, 5, None).unwrap();
        for w in &s.windows {
            assert_eq!(w.start, w.k as f64);
            assert!(w.length <= 1.0 && w.eps >= 1.0);
        }
        let p = local_params(e(1), e(2), 3).unwrap();
        let s = Schedule::build(p, 200, Some(1.0)).unwrap();
        assert!((s.horizon - 1.0).abs() < 1e-12);
        assert!(s.end() < 1.0);
        assert!(s.windows.windows(2).all(|w| w[1].start == w[0].end()));
    }

    #[test]
    fn zeta_values() {
        assert!((zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((zeta(4.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-13);
    }

    #[test]
    fn constant_norm_is_separable() {
        let (l, c, t) = (3.0, -1.5, 2.0);
        let g = Grid::new(1, l, 16).unwrap();
        let v = constant(g, c);
        for (r, s) in [(e(1), e(2)), (e(2), e(4)), (e(3), ExtExponent::ratio(3, 2))] {
            let got = mixed_norm(&v, r, s, (0.0, t), 0.1, &g).unwrap();
            let want = c.abs() * (2.0 * l).powf(s.recip_f64()) * t.powf(r.recip_f64());
            assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn sup_norm_of_ramp_is_last_slice() {
        let g = Grid::new(1, 4.0, 32).unwrap();
        let w = gaussian(g, 1.0);
        let v = PotentialSpec::modulated(w.clone(), Modulation::Affine { offset: 1.0, slope: 0.5 })
            .unwrap();
        let got = mixed_norm(&v, ExtExponent::INF, e(2), (0.0, 2.0), 0.01, &g).unwrap();
        assert!((got - 2.0 * lq_norm(&w, e(2))).abs() < 1e-12);
    }

    #[test]
    fn patched_numeric_matches_closed_form() {
        let g = Grid::new(3, 8.0, 16).unwrap();
        let w = gaussian(g, 1.0);
        let (r, s) = (e(4), e(6));
        let params = global_subcritical_params(r, s, 3).unwrap();
        let sched = Schedule::build(params, 3, None).unwrap();
        let v = PotentialSpec::patched(w.clone(), sched.clone()).unwrap();
        let numeric = mixed_norm(&v, r, s, (0.0, sched.end()), 1e-3, &g).unwrap();
        let closed = analytic_patched_norm(&sched, r, s, 3, lq_norm(&w, s)).unwrap();
        assert!((numeric - closed.window_norm).abs() < 1e-3 * closed.window_norm);
    }

    #[test]
    fn analytic_patched_examples() {
        let p = global_subcritical_params(e(4), e(6), 3).unwrap();
        let single = Schedule::build(p, 1, None).unwrap();
        let one = analytic_patched_norm(&single, e(4), e(6), 3, 2.5).unwrap();
        assert_eq!(one.partial_sums, vec![2.5]);
        assert!((one.window_norm - 2.5).abs() < 1e-15);

        let sched = Schedule::build(p, 50, None).unwrap();
        let got = analytic_patched_norm(&sched, e(4), e(6), 3, 1.0).unwrap();
        let (a, b) = (rat_f64(p.alpha), rat_f64(p.beta));
        assert!((got.summand_exponent - (a / 4.0 - 3.0 * b / 4.0)).abs() < 1e-12);
        assert!(matches!(got.series, SeriesValue::Convergent { .. }));

        let p = global_supercritical_params(e(1), e(2), 3).unwrap();
        let sched = Schedule::build(p, 50, None).unwrap();
        let got = analytic_patched_norm(&sched, e(1), e(2), 3, 1.0).unwrap();
        let (a, b) = (rat_f64(p.alpha), rat_f64(p.beta));
        assert!((got.summand_exponent - (-a + b / 4.0)).abs() < 1e-12);
        assert!(matches!(got.series, SeriesValue::Convergent { .. }));
    }

    #[test]
    fn analytic_pseudoconformal_examples() {
        let half = ExtExponent::int(2);
        let v = analytic_pseudoconformal_norm(e(1), half, 3, 0.0, 1.5).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
        assert_eq!(analytic_pseudoconformal_norm(e(1), half, 3, 1.0, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn pseudoconformal_numeric_matches_closed_form() {
        let g = Grid::new(3, 6.0, 16).unwrap();
        let w = gaussian(g, 1.0);
        let v = PotentialSpec::pseudoconformal(w.clone()).unwrap();
        let (r, s) = (e(1), e(2));
        let numeric = mixed_norm(&v, r, s, (0.1, 1.0), 1e-3, &g).unwrap();
        let closed = analytic_pseudoconformal_norm(r, s, 3, 0.1, lq_norm(&w, s)).unwrap();
        assert!((numeric - closed).abs() < 1e-6 * closed, "{numeric} vs {closed}");
    }

    #[test]
    fn partition_of_zero_is_one_piece() {
        let g = Grid::new(1, 4.0, 16).unwrap();
        let p = partition_interval(&PotentialSpec::Zero, e(2), e(2), (0.0, 5.0), 0.1, 0.01, &g)
            .unwrap();
        assert_eq!(p, vec![Piece { start: 0.0, end: 5.0, norm: 0.0 }]);
    }

    #[test]
    fn partition_of_constant_has_closed_form_count() {
        let (l, c) = (2.0, 0.5);
        let g = Grid::new(1, l, 16).unwrap();
        let v = constant(g, c);
        let (r, s) = (e(2), e(2));
        // tau chosen so that the piece length is 0.25 exactly
        let tau_len: f64 = 0.25;
        let tau = tau_len.sqrt() * c * (2.0 * l).sqrt();
        let pieces = partition_interval(&v, r, s, (0.0, 3.0), tau, 0.0125, &g).unwrap();
        assert_eq!(pieces.len(), (3.0 / tau_len).ceil() as usize);
        assert!(pieces.iter().all(|p| p.norm <= tau * (1.0 + 1e-9)));
        assert!(pieces.windows(2).all(|w| w[0].end == w[1].start));
        assert_eq!(pieces[0].start, 0.0);
        assert_eq!(pieces.last().unwrap().end, 3.0);
    }

    #[test]
    fn partition_errors() {
        let g = Grid::new(1, 2.0, 16).unwrap();
        let v = constant(g, 1.0);
        assert!(partition_interval(&v, e(2), e(2), (0.0, 1.0), 0.0, 0.01, &g).is_err());
        assert!(matches!(
            partition_interval(&v, e(2), e(2), (0.0, 1.0), 0.01, 0.1, &g),
            Err(Error::UnsplittableSlice { .. })
        ));
        assert!(matches!(
            partition_interval(&v, ExtExponent::INF, e(2), (0.0, 1.0), 0.1, 0.01, &g),
            Err(Error::CannotPartition { .. })
        ));
    }

    #[test]
    fn steps_are_right_continuous() {
        let m = Modulation::Steps { edges: vec![0.0, 1.0, 2.0], levels: vec![3.0, -1.0] };
        assert_eq!(m.value(1.0, Side::Right), -1.0);
        assert_eq!(m.value(1.0, Side::Left), 3.0);
        assert_eq!(m.value(2.0, Side::Right), 0.0);
        assert_eq!(m.value(2.0, Side::Left), -1.0);
        assert_eq!(m.value(-0.5, Side::Right), 0.0);
    }

    #[test]
    fn window_rows_match_analytic_terms() {
        let p = global_subcritical_params(e(4), e(6), 3).unwrap();
        let s = Schedule::build(p, 5, None).unwrap();
        let rows = window_norm_rows(&s, e(4), e(6), 3, 1.0);
        let a = analytic_patched_norm(&s, e(4), e(6), 3, 1.0).unwrap();
        let mut acc = 0.0;
        for (row, ps) in rows.iter().zip(&a.partial_sums) {
            acc += row.piece_norm;
            assert!((acc - ps).abs() < 1e-12 * ps);
        }
    }
}
