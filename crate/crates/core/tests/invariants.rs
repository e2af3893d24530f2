use dynbin_core::algorithms::{first_fit_bin, AlgorithmSpec, FirstFit, MigOrder};
use dynbin_core::audit::audit_run;
use dynbin_core::engine::{simulate, simulate_with, Label, PackingState, SimOptions, TraceRecord};
use dynbin_core::generators::{gen_basic_lb, gen_delay_lb, gen_tradeoff_lb, gen_uniform, UniformSpec};
use dynbin_core::{Instance, Item, Ratio, ScaledSize};
use proptest::prelude::*;

fn arb_instance(max_items: usize, scale: u64) -> impl Strategy<Value = Instance> {
    prop::collection::vec((0u32..40, 1u64..=scale, 1u32..40), 1..=max_items).prop_map(move |raw| {
        let items = raw
            .into_iter()
            .enumerate()
            .map(|(i, (a, s, d))| Item::new(i as u64, a as f64 / 4.0, ScaledSize::new(s, scale), d as f64 / 4.0))
            .collect();
        Instance::new(items, scale)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concat_adds_volume_and_span(parts in prop::collection::vec(arb_instance(6, 16), 1..4)) {
        let joined = Instance::concat(&parts, 1.0).unwrap();
        let vol: f64 = parts.iter().map(|p| p.vol().unwrap()).sum();
        let span: f64 = parts.iter().map(|p| p.span().unwrap()).sum();
        prop_assert!((joined.vol().unwrap() - vol).abs() <= 1e-9 * vol.max(1.0));
        prop_assert!((joined.span().unwrap() - span).abs() <= 1e-9 * span.max(1.0));
        prop_assert!(joined.is_valid());
    }

    #[test]
    fn first_fit_opens_only_when_nothing_fits(inst in arb_instance(12, 10)) {
        let r = simulate(&inst, &mut FirstFit, &SimOptions::default(), None).unwrap();
        // replay: every placement goes to the earliest open bin with room
        let mut bins: Vec<(u64, u64)> = Vec::new();
        let size_of = |id: u64| inst.items[id as usize].size.num;
        for rec in &r.trace {
            match *rec {
                TraceRecord::Place { item, bin, .. } => {
                    let s = size_of(item);
                    let first = bins.iter().find(|(_, l)| l + s <= 10).map(|(b, _)| *b);
                    match first {
                        Some(b) => prop_assert_eq!(b, bin),
                        None => prop_assert!(bins.iter().all(|(b, _)| *b != bin)),
                    }
                    match bins.iter_mut().find(|(b, _)| *b == bin) {
                        Some(e) => e.1 += s,
                        None => bins.push((bin, s)),
                    }
                }
                TraceRecord::Depart { item, bin, .. } => {
                    let e = bins.iter_mut().find(|(b, _)| *b == bin).unwrap();
                    e.1 -= size_of(item);
                    if e.1 == 0 {
                        bins.retain(|(b, _)| *b != bin);
                    }
                }
                _ => {}
            }
        }
    }

    #[test]
    fn simulation_is_deterministic_and_accounted(inst in arb_instance(20, 16), which in 0usize..4) {
        let spec = [
            AlgorithmSpec::FirstFit,
            AlgorithmSpec::Alg2 { alpha: Ratio::new(1, 4), order: MigOrder::Id },
            AlgorithmSpec::SizeCost { alpha: Ratio::new(1, 10), order: MigOrder::SizeDesc },
            AlgorithmSpec::Delay { c: 4.0 },
        ][which];
        let a = audit_run(&inst, &spec, None, None, true).unwrap();
        let b = audit_run(&inst, &spec, None, None, true).unwrap();
        prop_assert_eq!(&a.result, &b.result);
        for c in &a.checks {
            prop_assert!(c.passed, "{:?}", c);
        }
        let arrivals = a.result.trace.iter().filter(|t| matches!(t, TraceRecord::Arrive { .. })).count();
        let departures = a.result.trace.iter().filter(|t| matches!(t, TraceRecord::Depart { .. })).count();
        prop_assert_eq!(arrivals, departures);
    }

    #[test]
    fn alg2_never_has_two_bad_bins_per_class(inst in arb_instance(30, 64)) {
        let mut p = AlgorithmSpec::Alg2 { alpha: Ratio::new(2, 5), order: MigOrder::Id }.build().unwrap();
        let mut check = |_t: f64, s: &PackingState| -> Result<(), String> {
            let mut seen = std::collections::BTreeMap::new();
            for b in s.bins().filter(|b| b.label == Label::Bad) {
                if b.class == Some(0) || seen.insert(b.class, b.id).is_some() {
                    return Err(format!("bin {} in class {:?}", b.id, b.class));
                }
            }
            Ok(())
        };
        let r = simulate_with(&inst, p.as_mut(), &SimOptions::default(), None, &mut check);
        prop_assert!(r.is_ok(), "{:?}", r.err());
    }
}

#[test]
fn first_fit_helper_respects_filter() {
    let inst = Instance::new(
        vec![
            Item::new(0, 0.0, ScaledSize::new(6, 10), 1.0),
            Item::new(1, 0.0, ScaledSize::new(6, 10), 1.0),
        ],
        10,
    );
    let mut seen = Vec::new();
    let mut probe = |_t: f64, s: &PackingState| -> Result<(), String> {
        seen.push((
            first_fit_bin(s, ScaledSize::new(4, 10), |_| true),
            first_fit_bin(s, ScaledSize::new(4, 10), |b| b.id == 1),
        ));
        Ok(())
    };
    simulate_with(&inst, &mut FirstFit, &SimOptions::default(), None, &mut probe).unwrap();
    assert_eq!(seen[0], (Some(0), Some(1)));
}

#[test]
fn generators_validate_across_seeds() {
    let spec = UniformSpec {
        n: 40,
        max_live: Some(10),
        ..UniformSpec::default()
    };
    for seed in 0..1000 {
        assert!(gen_tradeoff_lb(4, 8, 16.0, seed).unwrap().is_valid());
        assert!(gen_basic_lb(8, 8.0, seed).unwrap().is_valid());
        assert!(gen_uniform(&spec, seed).unwrap().is_valid());
        if seed < 100 {
            assert!(gen_delay_lb(16, seed).unwrap().is_valid());
        }
    }
}

#[test]
fn long_item_frequency_matches_probability() {
    // 32 items per draw, each long with probability 1/4
    let seeds = 2000u64;
    let n = 32.0;
    let p = 0.25;
    let longs: f64 = (0..seeds)
        .map(|s| {
            gen_tradeoff_lb(4, 8, 16.0, s)
                .unwrap()
                .items
                .iter()
                .filter(|i| i.duration == Some(16.0))
                .count() as f64
        })
        .sum();
    let mean = longs / seeds as f64;
    let sigma = (n * p * (1.0 - p) / seeds as f64).sqrt();
    assert!((mean - n * p).abs() <= 3.0 * sigma, "mean {} vs {}", mean, n * p);
}
