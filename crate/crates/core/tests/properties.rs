use num_rational::Ratio;
use num_traits::{One, Zero};
use proptest::prelude::*;

use strz_core::counterexamples::{build_family, ratio_series};
use strz_core::exponents::{
    dual, dual_pair_case_b, global_subcritical_params, global_supercritical_params,
    holder_split_case_a, local_params, pseudoconformal_ok, scaling_exponent,
};
use strz_core::groundstate::{default_standing_wave, gaussian_weight, ground_pair, GroundStateOptions};
use strz_core::potentials::{
    analytic_patched_norm, mixed_norm, partition_interval, Modulation, PotentialSpec, Schedule,
    SeriesValue, SumTerm,
};
use strz_core::solver::{
    duhamel_iterate, solve_global, split_step_evolve, trajectory_norm, DuhamelOptions,
    EvolveOptions,
};
use strz_core::spectral::{free_propagate, gaussian, lq_norm, rescale_field};
use strz_core::{
    classify_potential, is_admissible, Complex64, ComplexField, Criticality, DomainGuard,
    ExtExponent, Grid, Rational, ScheduleKind, Trajectory,
};

fn e(text: &str) -> ExtExponent {
    text.parse().unwrap()
}

fn recip(lo: (i128, i128), hi: (i128, i128)) -> impl Strategy<Value = Rational> {
    (1i128..=32, 0i128..=32).prop_filter_map("out of range", move |(den, num)| {
        let x = Ratio::new(num, den);
        (num <= den && x >= Ratio::new(lo.0, lo.1) && x <= Ratio::new(hi.0, hi.1)).then_some(x)
    })
}

fn exponent(x: Rational) -> ExtExponent {
    ExtExponent::from_recip(x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn holder_split_is_admissible(ri in recip((1, 32), (1, 2)), n in 2usize..=4) {
        let si = (Rational::one() - ri) * Ratio::new(2, n as i128);
        prop_assume!(si <= Rational::one());
        let pair = holder_split_case_a(exponent(ri), exponent(si), n).unwrap();
        prop_assert!(pair.is_admissible().unwrap());
    }

    #[test]
    fn dual_pairing_is_admissible_and_dual(ri in recip((1, 2), (1, 1)), n in 2usize..=4) {
        prop_assume!(!(n == 2 && ri == Ratio::new(1, 2)));
        let si = (Rational::one() - ri) * Ratio::new(2, n as i128);
        let b = dual_pair_case_b(exponent(ri), exponent(si), n).unwrap();
        prop_assert!(b.admissible.is_admissible().unwrap());
        prop_assert_eq!(dual(b.admissible.p), b.dual.0);
        prop_assert_eq!(dual(b.admissible.q), b.dual.1);
    }

    #[test]
    fn admissible_pairs_scale_exactly(qi in recip((0, 1), (1, 2)), n in 2usize..=4) {
        // 1/p = n/4 - n/(2q)
        let pi = Ratio::new(n as i128, 4) - qi * Ratio::new(n as i128, 2);
        prop_assume!(pi > Rational::zero() && pi <= Ratio::new(1, 2));
        let (p, q) = (exponent(pi), exponent(qi));
        prop_assume!(is_admissible(p, q, n).unwrap());
        let pf = p.finite().unwrap();
        let product = pf * (Ratio::new(n as i128, 2) - qi * Ratio::from_integer(n as i128));
        prop_assert_eq!(product, Ratio::from_integer(2));
    }

    #[test]
    fn scaling_vanishes_exactly_at_criticality(
        ri in recip((0, 1), (1, 1)),
        si in recip((0, 1), (1, 1)),
        n in 2usize..=4,
    ) {
        let (r, s) = (exponent(ri), exponent(si));
        let k = scaling_exponent(r, s, n).unwrap();
        let critical = classify_potential(r, s, n).unwrap().criticality == Criticality::Critical;
        prop_assert_eq!(k.is_zero(), critical);
    }

    #[test]
    fn pseudoconformal_formulations_agree(
        ri in recip((1, 32), (1, 1)),
        t in 1i128..64,
        n in 2usize..=3,
    ) {
        // 1/s strictly between 1/n and 2/n
        let si = Ratio::new(1, n as i128) + Ratio::new(t, 64 * n as i128);
        let ok = pseudoconformal_ok(exponent(ri), exponent(si), n).unwrap();
        let r = exponent(ri).finite().unwrap();
        let other = r * (si * Ratio::from_integer(n as i128) - Ratio::from_integer(2)) > -Rational::one();
        prop_assert_eq!(ok, other);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn selectors_satisfy_invariants(
        ri in recip((1, 32), (1, 1)),
        si in recip((0, 1), (1, 1)),
        n in 2usize..=3,
    ) {
        let (r, s) = (exponent(ri), exponent(si));
        let class = classify_potential(r, s, n).unwrap();
        match class.criticality {
            Criticality::Subcritical => {
                global_subcritical_params(r, s, n).unwrap().check(&class).unwrap();
            }
            Criticality::Supercritical => {
                local_params(r, s, n).unwrap().check(&class).unwrap();
                global_supercritical_params(r, s, n).unwrap().check(&class).unwrap();
            }
            Criticality::Critical => {
                prop_assert!(global_subcritical_params(r, s, n).is_err());
                prop_assert!(local_params(r, s, n).is_err());
            }
        }
    }
}

fn random_field(grid: Grid, seed: &[(f64, f64)]) -> ComplexField {
    let values = (0..grid.len())
        .map(|i| {
            let (a, b) = seed[i % seed.len()];
            Complex64::new(a * (i as f64 * 0.37).sin(), b * (i as f64 * 1.3).cos())
        })
        .collect();
    ComplexField::new(grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_propagation_is_unitary(
        seed in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..16),
        t in -10.0f64..10.0,
        dim in 1usize..=2,
    ) {
        let u = random_field(Grid::new(dim, 5.0, 32).unwrap(), &seed);
        prop_assume!(u.l2_norm() > 1e-6);
        let ratio = free_propagate(&u, t).l2_norm() / u.l2_norm();
        prop_assert!((ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_group_law(
        seed in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..16),
        s in -5.0f64..5.0,
        t in -5.0f64..5.0,
    ) {
        let u = random_field(Grid::new(1, 5.0, 64).unwrap(), &seed);
        let two = free_propagate(&free_propagate(&u, s), t);
        let one = free_propagate(&u, s + t);
        prop_assert!(two.sub(&one).l2_norm() <= 1e-12 * u.l2_norm().max(1.0));
    }

    #[test]
    fn rescaling_scales_lebesgue_norms(eps in 0.25f64..4.0, q in prop::sample::select(vec!["2", "4", "3/2"])) {
        let grid = Grid::new(1, 40.0, 2048).unwrap();
        let f = gaussian(grid, 1.0);
        let g = rescale_field(&f, eps, &DomainGuard::default()).unwrap();
        let q = e(q);
        let expected = eps.powf(-q.recip_f64()) * lq_norm(&f, q);
        prop_assert!((lq_norm(&g, q) - expected).abs() <= 1e-6 * expected);
    }

    #[test]
    fn sum_norm_obeys_triangle_inequality(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        slope in -1.0f64..1.0,
        r in prop::sample::select(vec!["1", "2", "inf"]),
        s in prop::sample::select(vec!["1", "2", "inf"]),
    ) {
        let grid = Grid::new(1, 8.0, 32).unwrap();
        let (r, s) = (e(r), e(s));
        let w1 = gaussian_weight(grid, a, 1.0, &[0.0]);
        let w2 = gaussian_weight(grid, b, 0.7, &[1.5]);
        let t1 = PotentialSpec::static_profile(w1).unwrap();
        let t2 = PotentialSpec::modulated(w2, Modulation::Affine { offset: 1.0, slope }).unwrap();
        let sum = PotentialSpec::Sum(vec![
            SumTerm { potential: t1.clone(), r, s },
            SumTerm { potential: t2.clone(), r, s },
        ]);
        let norm = |v: &PotentialSpec| mixed_norm(v, r, s, (0.0, 2.0), 0.05, &grid).unwrap();
        prop_assert!(norm(&sum) <= (norm(&t1) + norm(&t2)) * (1.0 + 1e-12));
    }

    #[test]
    fn partition_tiles_and_respects_tau(
        levels in prop::collection::vec(-3.0f64..3.0, 1..6),
        frac in 0.05f64..1.0,
        r in prop::sample::select(vec!["1", "2", "3"]),
    ) {
        let grid = Grid::new(1, 8.0, 32).unwrap();
        let m = levels.len();
        let edges: Vec<f64> = (0..=m).map(|i| 2.0 * i as f64 / m as f64).collect();
        let v = PotentialSpec::modulated(gaussian(grid, 1.0), Modulation::Steps { edges, levels }).unwrap();
        let (r, s) = (e(r), e("2"));
        let dt = 0.02;
        let total = mixed_norm(&v, r, s, (0.0, 2.0), dt, &grid).unwrap();
        prop_assume!(total > 1e-3);
        let tau = (frac * total).max(total / 50.0);
        let pieces = match partition_interval(&v, r, s, (0.0, 2.0), tau, dt, &grid) {
            Ok(p) => p,
            Err(strz_core::Error::UnsplittableSlice { .. }) => return Ok(()),
            Err(err) => panic!("{err}"),
        };
        prop_assert_eq!(pieces[0].start, 0.0);
        prop_assert_eq!(pieces.last().unwrap().end, 2.0);
        for w in pieces.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
        }
        for p in &pieces {
            prop_assert!(p.start < p.end);
            prop_assert!(mixed_norm(&v, r, s, (p.start, p.end), dt, &grid).unwrap() <= tau * (1.0 + 1e-9));
        }
    }
}

#[test]
fn patched_partial_sums_are_monotone_and_bounded() {
    let cases = [
        (ScheduleKind::GlobalSubcritical, "4", "6", 3usize),
        (ScheduleKind::GlobalSubcritical, "2", "4", 2),
        (ScheduleKind::GlobalSupercritical, "1", "2", 3),
        (ScheduleKind::Local, "1", "2", 3),
        (ScheduleKind::Local, "1", "1", 2),
    ];
    for (kind, r, s, n) in cases {
        let (r, s) = (e(r), e(s));
        let params = strz_core::exponents::schedule_params(kind, r, s, n).unwrap();
        let sched = Schedule::build(params, 300, Some(1.0)).unwrap();
        let norm = analytic_patched_norm(&sched, r, s, n, 1.7).unwrap();
        assert!(norm.partial_sums.windows(2).all(|w| w[1] >= w[0]), "{kind:?}");
        let SeriesValue::Convergent { partial, tail } = norm.series else {
            panic!("{kind:?} diverges");
        };
        assert!((partial - norm.partial_sums.last().unwrap()).abs() < 1e-12);
        // the tail bound dominates the next thousand terms
        let long = Schedule::build(params, 1300, Some(1.0)).unwrap();
        let more = analytic_patched_norm(&long, r, s, n, 1.7).unwrap();
        assert!(more.partial_sums.last().unwrap() <= &(partial + tail), "{kind:?}");
    }
}

#[test]
fn local_cascade_fills_the_interval() {
    let (r, s) = (e("1"), e("2"));
    let params = local_params(r, s, 3).unwrap();
    for total in [0.5, 1.0, 3.0] {
        let sched = Schedule::build(params, 2000, Some(total)).unwrap();
        assert!((sched.horizon - total).abs() < 1e-12);
        assert!(sched.windows.iter().all(|w| w.start >= 0.0 && w.end() <= total + 1e-12));
        let covered: f64 = sched.windows.iter().map(|w| w.length).sum();
        assert!(covered < total && covered > 0.99 * total);
    }
}

#[test]
fn ratio_series_increase_eventually() {
    let wave = default_standing_wave(Grid::new(3, 8.0, 16).unwrap()).unwrap();
    let fams = [
        build_family(ScheduleKind::GlobalSubcritical, e("4"), e("6"), &wave, 200, None).unwrap(),
        build_family(ScheduleKind::GlobalSupercritical, e("1"), e("2"), &wave, 200, None).unwrap(),
        build_family(ScheduleKind::Local, e("1"), e("2"), &wave, 200, None).unwrap(),
    ];
    for fam in &fams {
        for (p, q) in [("2", "6"), ("8/3", "4"), ("4", "3")] {
            let series = ratio_series(fam, e(p), e(q), None).unwrap();
            assert!(series.ratios[9..].windows(2).all(|w| w[1] > w[0]));
            assert!(series.predicted_slope > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn ground_pairs_of_random_mixtures(
        a1 in 0.3f64..3.0,
        a2 in 0.0f64..3.0,
        s1 in 0.6f64..1.5,
        s2 in 0.6f64..1.5,
        c in -2.0f64..2.0,
        dim in 1usize..=2,
    ) {
        let grid = Grid::new(dim, 16.0, if dim == 1 { 256 } else { 128 }).unwrap();
        let mut c1 = [0.0; 2];
        let mut c2 = [0.0; 2];
        c1[0] = c;
        c2[0] = -c;
        let w = gaussian_weight(grid, a1, s1, &c1[..dim]).add(&gaussian_weight(grid, a2, s2, &c2[..dim]));
        let gp = ground_pair(&w, &GroundStateOptions::default()).unwrap();
        prop_assert!((gp.constraint() - 1.0).abs() < 1e-10);
        prop_assert!(gp.residual < 1e-8);
        prop_assert!((gp.mu - gp.variational_energy()).abs() < 1e-8 * gp.mu.max(1.0));
    }

    #[test]
    fn split_step_conserves_mass(amp in -4.0f64..4.0, slope in -2.0f64..2.0, sigma in 0.5f64..2.0) {
        let grid = Grid::new(1, 16.0, 128).unwrap();
        let v = PotentialSpec::modulated(
            gaussian_weight(grid, amp, sigma, &[0.5]),
            Modulation::Affine { offset: 1.0, slope },
        ).unwrap();
        let rep = split_step_evolve(&gaussian(grid, 1.0), &v, None, (0.0, 2.0), &EvolveOptions::new(1e-2)).unwrap();
        prop_assert!(rep.energy_drift < 1e-10);
    }

    #[test]
    fn duhamel_fixed_point_has_small_residual(amp in -1.0f64..1.0) {
        let grid = Grid::new(1, 16.0, 128).unwrap();
        let v = PotentialSpec::static_profile(gaussian_weight(grid, amp, 1.0, &[0.0])).unwrap();
        let opts = DuhamelOptions { dt: 1e-2, ..DuhamelOptions::default() };
        let out = duhamel_iterate(&gaussian(grid, 1.0), None, &v, (0.0, 0.5), &opts).unwrap();
        prop_assert!(out.residual < 1e-9);
    }
}

#[test]
fn contraction_factor_grows_with_amplitude() {
    let grid = Grid::new(1, 16.0, 128).unwrap();
    let u0 = gaussian(grid, 1.0);
    let opts = DuhamelOptions { dt: 1e-2, ..DuhamelOptions::default() };
    let factors: Vec<f64> = (1..=10)
        .map(|i| {
            let amp = 0.2 * i as f64;
            let v = PotentialSpec::static_profile(gaussian_weight(grid, amp, 1.0, &[0.0])).unwrap();
            let out = duhamel_iterate(&u0, None, &v, (0.0, 0.5), &opts).unwrap();
            out.factors.iter().cloned().fold(0.0, f64::max)
        })
        .collect();
    for w in factors.windows(2) {
        assert!(w[1] >= 0.95 * w[0], "{factors:?}");
    }
    assert!(factors[9] > 2.0 * factors[0], "{factors:?}");
}

#[test]
fn single_piece_solve_matches_direct_iteration() {
    let grid = Grid::new(1, 16.0, 128).unwrap();
    let u0 = gaussian(grid, 1.0);
    let v = PotentialSpec::static_profile(gaussian_weight(grid, 0.5, 1.0, &[0.0])).unwrap();
    let opts = DuhamelOptions { dt: 1e-2, ..DuhamelOptions::default() };
    let rep = solve_global(&u0, None, &v, (0.0, 1.0), e("1"), e("inf"), 100.0, &opts, &[]).unwrap();
    assert_eq!(rep.partition.len(), 1);
    let direct = duhamel_iterate(&u0, None, &v, (0.0, 1.0), &opts).unwrap();
    assert_eq!(rep.trajectory.len(), direct.trajectory.len());
    for (a, b) in rep.trajectory.states.iter().zip(&direct.trajectory.states) {
        assert!(a.sub(b).l2_norm() < 1e-12);
    }
}

#[test]
fn time_continuity_is_uniform_in_dt() {
    let grid = Grid::new(1, 16.0, 128).unwrap();
    let u0 = gaussian(grid, 1.0);
    let v = PotentialSpec::static_profile(gaussian_weight(grid, -2.0, 1.0, &[0.0])).unwrap();
    let lag = 0.1;
    let moduli: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&dt| {
            let rep = split_step_evolve(&u0, &v, None, (0.0, 1.0), &EvolveOptions::new(dt)).unwrap();
            let step = (lag / dt).round() as usize;
            let states = &rep.trajectory.states;
            (0..states.len() - step)
                .map(|i| states[i + step].sub(&states[i]).l2_norm())
                .fold(0.0, f64::max)
        })
        .collect();
    for m in &moduli {
        assert!((m - moduli[0]).abs() < 0.05 * moduli[0], "{moduli:?}");
    }
}

#[test]
fn standing_wave_mixed_norms_are_exact() {
    let wave = default_standing_wave(Grid::new(2, 10.0, 32).unwrap()).unwrap();
    let horizon = 3.0;
    let mut traj = Trajectory::default();
    for j in 0..=300 {
        let t = horizon * j as f64 / 300.0;
        traj.push(t, wave.at(t));
    }
    for (p, q) in [("4", "4"), ("inf", "2"), ("8", "8/3")] {
        let (p, q) = (e(p), e(q));
        let expected = horizon.powf(p.recip_f64()) * lq_norm(&wave.profile, q);
        let got = trajectory_norm(&traj, p, q);
        assert!((got - expected).abs() < 1e-12 * expected, "({p},{q}): {got} vs {expected}");
    }
}
