//! Potentials of finite mixed norm whose solutions violate Strichartz bounds.
//!
//! Each window of a cascade carries the rescaled standing wave
//! `u_eps(t, x) = e^{-i eps^2 t} u0(eps x)`, which solves the equation with
//! `V = eps^2 W(eps x)` exactly. Ratio series therefore follow from grid
//! norms of `u0` and the schedule; numerical evolution is used only to
//! cross-check individual windows.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{
    classify_potential, rat_f64, schedule_params, Criticality, ExtExponent, ScheduleKind,
};
use crate::fit::linear_fit;
use crate::groundstate::StandingWave;
use crate::potentials::{
    analytic_patched_norm, analytic_pseudoconformal_norm, PatchedNorm, PotentialSpec, Schedule,
    SeriesValue,
};
use crate::solver::{split_step_evolve, EvolveOptions};
use crate::spectral::{gradient, laplacian, lq_norm, resample_mapped, ComplexField, DomainGuard, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    GlobalSubcritical,
    GlobalSupercritical,
    Local,
    Pseudoconformal,
}

impl From<ScheduleKind> for FamilyKind {
    fn from(k: ScheduleKind) -> Self {
        match k {
            ScheduleKind::GlobalSubcritical => FamilyKind::GlobalSubcritical,
            ScheduleKind::GlobalSupercritical => FamilyKind::GlobalSupercritical,
            ScheduleKind::Local => FamilyKind::Local,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum FamilyNorm {
    Patched(PatchedNorm),
    Pseudoconformal { value: f64 },
}

impl FamilyNorm {
    /// Certified upper bound on the potential norm.
    pub fn bound(&self) -> Option<f64> {
        match self {
            FamilyNorm::Patched(p) => p.series.bound(),
            FamilyNorm::Pseudoconformal { value } => Some(*value),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CounterexampleFamily {
    pub kind: FamilyKind,
    pub potential: PotentialSpec,
    pub wave: StandingWave,
    pub schedule: Option<Schedule>,
    pub r: ExtExponent,
    pub s: ExtExponent,
    pub n: usize,
    pub analytic_potential_norm: FamilyNorm,
    /// Lower end of the time interval `[delta, 1]` (pseudoconformal only).
    pub delta: Option<f64>,
    /// Number of ratio samples for the pseudoconformal family.
    pub samples: usize,
}

/// Builds a rescaling cascade of `count` windows around the standing wave.
pub fn build_family(
    kind: ScheduleKind,
    r: ExtExponent,
    s: ExtExponent,
    wave: &StandingWave,
    count: usize,
    total: Option<f64>,
) -> Result<CounterexampleFamily> {
    let n = wave.profile.grid().dim();
    let params = schedule_params(kind, r, s, n)?;
    let schedule = Schedule::build(params, count, total)?;
    let w_snorm = lq_norm(&wave.potential, s);
    let norm = analytic_patched_norm(&schedule, r, s, n, w_snorm)?;
    if let SeriesValue::DivergentTail { exponent } = norm.series {
        return Err(Error::DivergentNorm(format!(
            "summand exponent {exponent} for (alpha, beta) = ({}, {})",
            params.alpha, params.beta
        )));
    }
    let potential = PotentialSpec::patched(wave.potential.clone(), schedule.clone())?;
    Ok(CounterexampleFamily {
        kind: kind.into(),
        potential,
        wave: wave.clone(),
        schedule: Some(schedule),
        r,
        s,
        n,
        analytic_potential_norm: FamilyNorm::Patched(norm),
        delta: None,
        samples: count,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioSeries {
    pub p: ExtExponent,
    pub q: ExtExponent,
    pub ks: Vec<usize>,
    pub ratios: Vec<f64>,
    pub fitted_slope: Option<f64>,
    pub predicted_slope: f64,
    pub fit_range: (usize, usize),
}

impl RatioSeries {
    /// Relative gap between fitted and predicted slopes.
    pub fn slope_error(&self) -> Option<f64> {
        let f = self.fitted_slope?;
        if self.predicted_slope == 0.0 {
            Some(f.abs())
        } else {
            Some((f - self.predicted_slope).abs() / self.predicted_slope.abs())
        }
    }

    /// `R_K / R_1`.
    pub fn growth(&self) -> f64 {
        self.ratios.last().unwrap_or(&1.0) / self.ratios.first().unwrap_or(&1.0)
    }
}

fn check_pair(p: ExtExponent, q: ExtExponent, n: usize) -> Result<()> {
    if crate::exponents::is_admissible(p, q, n)? {
        Ok(())
    } else {
        Err(Error::InadmissiblePair { p: p.to_string(), q: q.to_string(), n })
    }
}

/// `||u_eps||_q / ||u_eps||_2` with `u_eps = u0(eps x)` measured on the grid
/// scaled by `1/eps`, where its samples coincide with those of `u0`.
fn adapted_norm_ratio(profile: &ComplexField, eps: f64, q: ExtExponent) -> f64 {
    let g = profile.grid().scaled(1.0 / eps);
    let field = profile.clone().with_grid(g);
    lq_norm(&field, q) / lq_norm(&field, ExtExponent::int(2))
}

/// `R_k = ||u||_{L^p(window_k) L^q} / ||u(window start)||_2` for each window.
pub fn ratio_series(
    family: &CounterexampleFamily,
    p: ExtExponent,
    q: ExtExponent,
    fit_range: Option<(usize, usize)>,
) -> Result<RatioSeries> {
    let n = family.n;
    check_pair(p, q, n)?;
    let pr = p.recip_f64();
    let profile = &family.wave.profile;
    let (ks, ratios, predicted): (Vec<usize>, Vec<f64>, f64) = match &family.schedule {
        Some(sched) => {
            let (a, b) = (rat_f64(sched.params.alpha), rat_f64(sched.params.beta));
            let predicted = match sched.kind {
                ScheduleKind::GlobalSubcritical => (a - b) * pr,
                _ => (b - a) * pr,
            };
            let ratios = sched
                .windows
                .iter()
                .map(|w| w.length.powf(pr) * adapted_norm_ratio(profile, w.eps, q))
                .collect();
            (sched.windows.iter().map(|w| w.k).collect(), ratios, predicted)
        }
        None => {
            // sample k covers [1/(k+1), 1], where ∫ T^{-2} dT = k
            let ks: Vec<usize> = (1..=family.samples).collect();
            let ratios = ks
                .iter()
                .map(|&k| (k as f64).powf(pr) * adapted_norm_ratio(profile, 1.0, q))
                .collect();
            (ks, ratios, pr)
        }
    };
    let count = ks.len();
    let (lo, hi) = fit_range.unwrap_or(((count / 5).max(1), count));
    let (lo, hi) = (lo.max(1), hi.min(count));
    let idx: Vec<usize> = (0..count).filter(|&i| ks[i] >= lo && ks[i] <= hi).collect();
    let fitted_slope = (idx.len() >= 2).then(|| {
        let xs: Vec<f64> = idx.iter().map(|&i| (ks[i] as f64).ln()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| ratios[i].ln()).collect();
        linear_fit(&xs, &ys).0
    });
    Ok(RatioSeries { p, q, ks, ratios, fitted_slope, predicted_slope: predicted, fit_range: (lo, hi) })
}

/// CSV row of a ratio series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub k: usize,
    pub start: f64,
    pub length: f64,
    pub eps: f64,
    pub ratio: f64,
}

pub fn ratio_rows(family: &CounterexampleFamily, series: &RatioSeries) -> Vec<RatioRow> {
    match &family.schedule {
        Some(s) => s
            .windows
            .iter()
            .zip(&series.ratios)
            .map(|(w, &ratio)| RatioRow { k: w.k, start: w.start, length: w.length, eps: w.eps, ratio })
            .collect(),
        None => series
            .ks
            .iter()
            .zip(&series.ratios)
            .map(|(&k, &ratio)| {
                let start = 1.0 / (k as f64 + 1.0);
                RatioRow { k, start, length: 1.0 - start, eps: 1.0, ratio }
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowNorm {
    pub p: ExtExponent,
    pub q: ExtExponent,
    pub numeric: f64,
    pub analytic: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowCheck {
    pub k: usize,
    pub start: f64,
    pub length: f64,
    pub eps: f64,
    /// Largest `||u(t) - e^{-i eps^2 (t - T_k)} u(T_k)||_2 / ||u(T_k)||_2`.
    pub phase_error: f64,
    pub norms: Vec<WindowNorm>,
    pub start_energy: f64,
    pub expected_energy: f64,
    pub energy_rel_error: f64,
    pub energy_drift: f64,
}

/// Evolves the rescaled standing wave through windows `ks` on grids scaled
/// by `1/eps_k`, with `dt` given in the window's natural time units.
pub fn window_crosscheck(
    family: &CounterexampleFamily,
    ks: &[usize],
    dt: f64,
    pairs: &[(ExtExponent, ExtExponent)],
) -> Result<Vec<WindowCheck>> {
    let sched = family
        .schedule
        .as_ref()
        .ok_or_else(|| Error::pre("window cross-check needs a windowed family"))?;
    for &(p, q) in pairs {
        check_pair(p, q, family.n)?;
    }
    ks.par_iter()
        .map(|&k| {
            let w = *sched
                .windows
                .get(k.wrapping_sub(1))
                .ok_or_else(|| Error::pre(format!("window {k} not in 1..={}", sched.len())))?;
            let profile = &family.wave.profile;
            let grid = profile.grid().scaled(1.0 / w.eps);
            let phase0 = Complex64::from_polar(1.0, -w.eps * w.eps * w.start);
            let start = profile.clone().with_grid(grid).scale(phase0);
            let guard = DomainGuard::default();
            guard.check(&start)?;
            let opts = EvolveOptions {
                dt: dt / (w.eps * w.eps),
                record_every: 1,
                pairs: pairs.to_vec(),
                guard: Some(guard),
            };
            let rep = split_step_evolve(&start, &family.potential, None, (w.start, w.end()), &opts)?;
            let m0 = start.l2_norm();
            let phase_error = rep
                .trajectory
                .times
                .iter()
                .zip(&rep.trajectory.states)
                .map(|(t, u)| {
                    let rot = Complex64::from_polar(1.0, -w.eps * w.eps * (t - w.start));
                    u.sub(&start.scale(rot)).l2_norm() / m0
                })
                .fold(0.0, f64::max);
            let n = family.n as f64;
            let norms = rep
                .strichartz_ratios
                .iter()
                .map(|sr| {
                    let numeric = sr.value * m0;
                    let analytic = w.length.powf(sr.p.recip_f64())
                        * w.eps.powf(-n * sr.q.recip_f64())
                        * lq_norm(profile, sr.q);
                    WindowNorm {
                        p: sr.p,
                        q: sr.q,
                        numeric,
                        analytic,
                        rel_error: (numeric - analytic).abs() / analytic,
                    }
                })
                .collect();
            let expected = w.eps.powf(-n / 2.0) * profile.l2_norm();
            Ok(WindowCheck {
                k,
                start: w.start,
                length: w.length,
                eps: w.eps,
                phase_error,
                norms,
                start_energy: m0,
                expected_energy: expected,
                energy_rel_error: (m0 - expected).abs() / expected,
                energy_drift: rep.energy_drift,
            })
        })
        .collect()
}

/// Closed-form pseudoconformal solution
/// `U(T, X) = e^{-i|X|^2/(4T)} T^{-n/2} e^{i/T} u0(X/T)` on `T in [delta, 1]`.
#[derive(Clone, Debug)]
pub struct PseudoconformalSampler {
    pub wave: StandingWave,
    pub delta: f64,
    grad: Vec<ComplexField>,
}

/// Builds the pseudoconformal family with potential `T^{-2} W(X/T)`.
pub fn pseudoconformal_build(
    wave: &StandingWave,
    r: ExtExponent,
    s: ExtExponent,
    delta: f64,
    samples: usize,
) -> Result<(CounterexampleFamily, PseudoconformalSampler)> {
    let n = wave.profile.grid().dim();
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::pre(format!("delta = {delta} must lie in (0, 1)")));
    }
    let value = analytic_pseudoconformal_norm(r, s, n, delta, lq_norm(&wave.potential, s))?;
    let potential = PotentialSpec::pseudoconformal(wave.potential.clone())?;
    let family = CounterexampleFamily {
        kind: FamilyKind::Pseudoconformal,
        potential,
        wave: wave.clone(),
        schedule: None,
        r,
        s,
        n,
        analytic_potential_norm: FamilyNorm::Pseudoconformal { value },
        delta: Some(delta),
        samples: samples.max(1),
    };
    let sampler = PseudoconformalSampler { wave: wave.clone(), delta, grad: gradient(&wave.profile) };
    Ok((family, sampler))
}

impl PseudoconformalSampler {
    fn check_time(t: f64) -> Result<()> {
        if t > 0.0 && t.is_finite() {
            Ok(())
        } else {
            Err(Error::Singularity(t))
        }
    }

    fn phase(x2: f64, t: f64, n: usize) -> Complex64 {
        Complex64::from_polar(t.powf(-(n as f64) / 2.0), -x2 / (4.0 * t) + 1.0 / t)
    }

    /// `U(T, .)` on the profile grid scaled by `T`, where `u0(X/T)` needs no
    /// interpolation.
    pub fn sample_adapted(&self, t: f64) -> Result<ComplexField> {
        Self::check_time(t)?;
        let g = self.wave.profile.grid().scaled(t);
        let amp = t.powf(-(g.dim() as f64) / 2.0);
        let r2 = g.radius_squared();
        let values = self
            .wave
            .profile
            .values()
            .iter()
            .zip(&r2)
            .map(|(u, x2)| u * Complex64::from_polar(amp, -x2 / (4.0 * t) + 1.0 / t))
            .collect();
        ComplexField::new(g, values)
    }

    /// `U(T, .)` on an arbitrary grid by band-limited interpolation of `u0`.
    pub fn sample(&self, t: f64, grid: &Grid) -> Result<ComplexField> {
        Self::check_time(t)?;
        let u = resample_mapped(&self.wave.profile, grid, |x| x / t);
        let r2 = grid.radius_squared();
        let n = grid.dim();
        let values = u.values().iter().zip(&r2).map(|(v, x2)| v * Self::phase(*x2, t, n)).collect();
        ComplexField::new(*grid, values)
    }

    /// `∂_T U(T, .)` on `grid`, from the closed form.
    pub fn time_derivative(&self, t: f64, grid: &Grid) -> Result<ComplexField> {
        Self::check_time(t)?;
        let n = grid.dim();
        let u = resample_mapped(&self.wave.profile, grid, |x| x / t);
        let grads: Vec<ComplexField> =
            self.grad.iter().map(|g| resample_mapped(g, grid, |x| x / t)).collect();
        let ax = grid.axis();
        let values = (0..grid.len())
            .map(|i| {
                let idx = grid.unravel(i);
                let mut x2 = 0.0;
                let mut x_dot_grad = Complex64::new(0.0, 0.0);
                for a in 0..n {
                    let x = ax[idx[a]];
                    x2 += x * x;
                    x_dot_grad += grads[a].values()[i] * x;
                }
                let ph = Self::phase(x2, t, n);
                let dphi = x2 / (4.0 * t * t) - 1.0 / (t * t);
                let radial = Complex64::new(-(n as f64) / (2.0 * t), dphi);
                ph * (u.values()[i] * radial - x_dot_grad / (t * t))
            })
            .collect();
        ComplexField::new(*grid, values)
    }

    /// `||i U_T - Δ U + V U||_2 / ||U||_2` with `V = T^{-2} W(X/T)`, using the
    /// spectral Laplacian on `grid`.
    pub fn residual(&self, t: f64, grid: &Grid) -> Result<f64> {
        let u = self.sample(t, grid)?;
        let ut = self.time_derivative(t, grid)?;
        let v = resample_mapped(&self.wave.potential, grid, |x| x / t).scale_real(t.powi(-2));
        let res = ut
            .scale(Complex64::new(0.0, 1.0))
            .sub(&laplacian(&u))
            .add(&v.mul(&u));
        Ok(res.l2_norm() / u.l2_norm())
    }

    /// `||U||_{L^p(delta, 1; L^q)} = (1/delta - 1)^{1/p} ||u0||_q` for an
    /// admissible pair.
    pub fn solution_norm(&self, p: ExtExponent, q: ExtExponent) -> Result<f64> {
        check_pair(p, q, self.wave.profile.grid().dim())?;
        let uq = lq_norm(&self.wave.profile, q);
        Ok(match p.finite() {
            Some(p) => (1.0 / self.delta - 1.0).powf(1.0 / rat_f64(p)) * uq,
            None => {
                let n = self.wave.profile.grid().dim() as f64;
                self.delta.powf(n * q.recip_f64() - n / 2.0) * uq
            }
        })
    }

    /// Trapezoid estimate of the same norm from adapted-grid samples.
    pub fn solution_norm_numeric(&self, p: ExtExponent, q: ExtExponent, dt: f64) -> Result<f64> {
        check_pair(p, q, self.wave.profile.grid().dim())?;
        let m = ((1.0 - self.delta) / dt).ceil().max(1.0) as usize;
        let h = (1.0 - self.delta) / m as f64;
        let vals = (0..=m)
            .into_par_iter()
            .map(|j| {
                // the phase drops out of |U|, so only the modulus is sampled
                let t = self.delta + j as f64 * h;
                let g = self.wave.profile.grid().scaled(t);
                let amp = t.powf(-(g.dim() as f64) / 2.0);
                let modulus = self.wave.profile.values().iter().map(|u| Complex64::new(amp * u.norm(), 0.0));
                Ok(lq_norm(&ComplexField::new(g, modulus.collect())?, q))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(match p.finite() {
            None => vals.iter().cloned().fold(0.0, f64::max),
            Some(p) => {
                let p = rat_f64(p);
                let pw: Vec<f64> = vals.iter().map(|v| v.powf(p)).collect();
                let s: f64 = pw.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
                s.powf(1.0 / p)
            }
        })
    }
}

/// Reflection and translation of the time axis, `T -> anchor - T`; maps the
/// interval `[delta, 1]` to `[anchor - 1, anchor - delta]`.
pub fn reflect_time(t: f64, anchor: f64) -> f64 {
    anchor - t
}

/// Whether the class of `(r, s)` matches the requested cascade.
pub fn regime_matches(kind: ScheduleKind, r: ExtExponent, s: ExtExponent, n: usize) -> Result<bool> {
    let class = classify_potential(r, s, n)?;
    Ok(match kind {
        ScheduleKind::GlobalSubcritical => class.criticality == Criticality::Subcritical,
        _ => class.criticality == Criticality::Supercritical,
    })
}
