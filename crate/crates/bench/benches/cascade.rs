use criterion::{criterion_group, criterion_main, Criterion};
use strz_core::counterexamples::{build_family, ratio_series};
use strz_core::verify::cascade_wave;
use strz_core::{ExtExponent, ScheduleKind};

fn e(text: &str) -> ExtExponent {
    text.parse().unwrap()
}

fn series(c: &mut Criterion) {
    let wave = cascade_wave().unwrap();
    let mut group = c.benchmark_group("ratio_series");
    group.sample_size(10);
    for (name, kind, r, s) in [
        ("subcritical", ScheduleKind::GlobalSubcritical, "4", "6"),
        ("supercritical", ScheduleKind::GlobalSupercritical, "1", "2"),
        ("local", ScheduleKind::Local, "1", "2"),
    ] {
        let fam = build_family(kind, e(r), e(s), &wave, 200, None).unwrap();
        group.bench_function(name, |b| b.iter(|| ratio_series(&fam, e("2"), e("6"), Some((10, 200))).unwrap()));
    }
    group.finish();
}

fn family(c: &mut Criterion) {
    let wave = cascade_wave().unwrap();
    c.bench_function("build_family_200", |b| {
        b.iter(|| build_family(ScheduleKind::GlobalSubcritical, e("4"), e("6"), &wave, 200, None).unwrap())
    });
}

criterion_group!(benches, series, family);
criterion_main!(benches);
