use octsca_core::bench::BYTES_PER_UPDATE;
use octsca_core::measure::{average_records, csv_line, parse_csv, NullSink, CSV_HEADER};
use octsca_core::snapshot::{decode, encode};
use octsca_core::{
    build_engine, compare_engines, growth_exponent_fit, height_moments, log_growth_fit,
    log_schedule, roughness_sq, run, AnyField, BenchCase, BenchReport, EngineKind, HeightMap,
    LatticeConfig, MeasurementRecord, Simulation, SlopeField, UpdateParams,
};
use proptest::prelude::*;

mod common;
use common::{events, random_heights};

fn synthetic(ts: &[u64], w2: impl Fn(f64) -> f64) -> Vec<MeasurementRecord> {
    ts.iter()
        .map(|&t| MeasurementRecord { t, w2: w2(t as f64), mean_h: 0.0, skewness: None, kurtosis: None })
        .collect()
}

proptest! {
    #[test]
    fn roughness_ignores_shifts_and_translations(ev in events(), shift in -1000i64..1000, dx in 0usize..64, dy in 0usize..8) {
        let h = random_heights(64, 8, &ev);
        let base = roughness_sq(&h);
        prop_assert!(base >= 0.0);
        let shifted = HeightMap::new(64, 8, h.as_slice().iter().map(|v| v + shift).collect()).unwrap();
        prop_assert!((roughness_sq(&shifted) - base).abs() < 1e-9);
        let moved: Vec<i64> = (0..8 * 64)
            .map(|i| h.get((i % 64 + dx) as i64, (i / 64 + dy) as i64))
            .collect();
        prop_assert!((roughness_sq(&HeightMap::new(64, 8, moved).unwrap()) - base).abs() < 1e-9);
    }

    #[test]
    fn planted_exponents_are_recovered(beta in 0.0f64..1.0, c in 0.01f64..100.0) {
        let ts = log_schedule(5000, 10);
        let recs = synthetic(&ts, |t| c * t.powf(2.0 * beta));
        let fit = growth_exponent_fit(&recs, (1, 5000)).unwrap();
        prop_assert!((fit.beta - beta).abs() < 1e-10);
        prop_assert!(fit.r2 > 1.0 - 1e-10);
        prop_assert!(fit.stderr < 1e-8);
    }

    #[test]
    fn schedules_are_strictly_increasing(t_max in 1u64..1_000_000, ppd in 1u32..50) {
        let s = log_schedule(t_max, ppd);
        prop_assert_eq!(s[0], 1);
        prop_assert_eq!(*s.last().unwrap(), t_max);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bandwidth_identity_is_exact(l_exp in 7u32..14, mcs in 1u64..100_000, wall in 1e-3f64..1e3) {
        let case = BenchCase {
            engine: EngineKind::Vec,
            l: 1 << l_exp,
            w: 64,
            params: UpdateParams::auto(0.5, 0.0).unwrap(),
            workers: 1,
            seed: 0,
        };
        let r = BenchReport::from_timing(&case, mcs, wall, 0);
        prop_assert_eq!(r.net_gbps, r.updates_per_ns * BYTES_PER_UPDATE);
        prop_assert_eq!(r.net_gbps, r.updates_per_ns);
        let expected = (case.l * case.l) as f64 * mcs as f64 / (wall * 1e9);
        prop_assert!((r.updates_per_ns - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn snapshots_roundtrip(ev in events(), seed: u64, steps in 0u64..5) {
        let h = random_heights(128, 6, &ev);
        let f = SlopeField::<u64>::pack_from_heights(LatticeConfig::new(128, 6, 64).unwrap(), &h).unwrap();
        let mut sim = Simulation::new(f, UpdateParams::auto(0.5, 0.5).unwrap(), 1, seed).unwrap();
        for _ in 0..steps {
            sim.sweep().unwrap();
        }
        let back = decode(&encode(sim.field(), Some(sim.streams()))).unwrap();
        prop_assert_eq!(back.field, AnyField::W64(sim.field().clone()));
        prop_assert_eq!(back.streams.as_ref(), Some(sim.streams()));
    }
}

#[test]
fn moment_examples() {
    let m = height_moments(&HeightMap::new(2, 2, vec![0, 0, 0, 2]).unwrap());
    assert!((m.m2 - 0.75).abs() < 1e-12);
    assert!((m.m3 - 0.75).abs() < 1e-12);
    assert!((m.skewness.unwrap() - 1.154_700_538_379_251_5).abs() < 1e-12);
    assert_eq!(height_moments(&HeightMap::flat(4, 4)).skewness, Some(0.0));
    assert_eq!(height_moments(&HeightMap::new(2, 2, vec![3; 4]).unwrap()).skewness, None);
}

#[test]
fn log_growth_beats_power_law_on_logarithmic_data() {
    let ts = log_schedule(2000, 10);
    let recs = synthetic(&ts, |t| 0.3 * t.ln() + 0.25);
    let window = (2, 2000);
    let power = growth_exponent_fit(&recs, window).unwrap();
    let log = log_growth_fit(&recs, window).unwrap();
    assert!(power.r2 < log.r2);
    assert!((log.slope - 0.3).abs() < 1e-12);
}

#[test]
fn csv_survives_a_roundtrip() {
    let config = LatticeConfig::square(128, 64).unwrap();
    let mut sim = Simulation::new(SlopeField::<u64>::new_flat(config).unwrap(), UpdateParams::auto(0.5, 0.0).unwrap(), 1, 4).unwrap();
    let recs = run(&mut sim, &log_schedule(50, 5), &mut NullSink).unwrap();
    let mut text = format!("# seed=4\n{CSV_HEADER}\n");
    for r in &recs {
        text.push_str(&csv_line(r));
        text.push('\n');
    }
    let back = parse_csv(&text).unwrap();
    assert_eq!(back.len(), recs.len());
    for (a, b) in back.iter().zip(&recs) {
        assert_eq!(a.t, b.t);
        assert!((a.w2 - b.w2).abs() <= 1e-9 * b.w2.max(1.0));
    }
    assert_eq!(average_records(&[recs.clone(), recs.clone()]), recs);
}

#[test]
fn benchmark_cells_use_the_plain_simulation_path() {
    let cases: Vec<BenchCase> = [EngineKind::Vec, EngineKind::Ref]
        .into_iter()
        .flat_map(|engine| {
            [UpdateParams::auto(0.5, 0.0).unwrap(), UpdateParams::auto(0.95, 0.0).unwrap()]
                .into_iter()
                .map(move |params| BenchCase { engine, l: 1024, w: 64, params, workers: 1, seed: 31 })
        })
        .collect();
    let reports = compare_engines(&cases, 40, 2).unwrap();
    assert_eq!(reports.len(), 4);
    let again = compare_engines(&cases, 40, 1).unwrap();
    for ((r, a), case) in reports.iter().zip(&again).zip(&cases) {
        assert_eq!(r.mcs, 36);
        assert_eq!(r.mcs, a.mcs);
        assert_eq!(r.checksum, a.checksum);
        let mut plain = build_engine(case).unwrap();
        for _ in 0..40 {
            plain.step().unwrap();
        }
        assert_eq!(r.checksum, plain.checksum());
    }
    // both engines reach the same surface from the same seed
    assert_eq!(reports[0].checksum, reports[2].checksum);
    assert_eq!(reports[1].checksum, reports[3].checksum);
    assert!(compare_engines(&[], 40, 1).unwrap().is_empty());
}
