mod common;

use std::collections::BTreeSet;

use chrono::{Duration, FixedOffset, TimeZone};
use common::*;
use newsnet::corpus::assign_info_day;
use newsnet::network::{build_network, decompose, degree, Decomposition, DegreeMode, Window};
use newsnet::portfolio::{
    assign_buckets, bucket_sizes, sort_portfolios, ReturnSource, SortInputs, SortSpec, Timing,
};
use newsnet::variables::{lead_return, SignFilter};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn info_day_is_monotone(a in 0i64..400 * 86_400, b in 0i64..400 * 86_400, off in -12i32..12) {
        let tz = FixedOffset::east_opt(off * 3600).unwrap();
        let base = tz.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let t1 = base + Duration::seconds(lo);
        let t2 = base + Duration::seconds(hi);
        prop_assert!(assign_info_day(&t1) <= assign_info_day(&t2));
    }

    #[test]
    fn rows_normalize_and_split(seed in any::<u64>(), n in 2usize..40, m in 0usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names = tickers(n);
        let links = random_linkages(&mut rng, &names, m, 60);
        let (net, _) = build_network(&links, Window::ending(day0() + Duration::days(59), 59), &names);
        for i in 0..n {
            let s = net.row_sum(i);
            prop_assert!(net.row(i).is_empty() || (s - 1.0).abs() < 1e-12);
            prop_assert_eq!(net.weight(&names[i], &names[i]), 0.0);
        }
        let attrs = random_attributes(&mut rng, n);
        let (w, _) = decompose(&net, Decomposition::Within, &attrs);
        let (c, _) = decompose(&net, Decomposition::Cross, &attrs);
        for e in net.edges() {
            let (f, l) = (&names[e.follower], &names[e.lead]);
            let known = attrs.sector[e.follower].is_some() && attrs.sector[e.lead].is_some();
            let parts = w.weight(f, l) + c.weight(f, l);
            let expected = if known { e.weight } else { 0.0 };
            prop_assert_eq!(parts, expected);
        }
        for d in Decomposition::ALL {
            let (part, _) = decompose(&net, d, &attrs);
            for e in part.edges() {
                prop_assert_eq!(e.weight, net.weight(&names[e.follower], &names[e.lead]));
            }
        }
    }

    #[test]
    fn nested_windows_nest(seed in any::<u64>(), short in 1u32..60, extra in 0u32..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names = tickers(15);
        let links = random_linkages(&mut rng, &names, 200, 120);
        let end = day0() + Duration::days(100);
        let (small, _) = build_network(&links, Window::ending(end, short), &names);
        let (large, _) = build_network(&links, Window::ending(end, short + extra), &names);
        for e in small.edges() {
            prop_assert!(large.count(&names[e.follower], &names[e.lead]) >= e.count);
        }
    }

    #[test]
    fn lead_return_identity_linearity_bound(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names = tickers(20);
        let links = random_linkages(&mut rng, &names, 120, 30);
        let (net, _) = build_network(&links, Window::ending(day0() + Duration::days(29), 29), &names);
        let r: Vec<f64> = (0..20).map(|_| rng.random_range(-0.1..0.1)).collect();
        let s: Vec<f64> = (0..20).map(|_| rng.random_range(-0.1..0.1)).collect();
        let get = |v: &Vec<f64>| { let v = v.clone(); move |t: &str| Some(v[t[1..].parse::<usize>().unwrap()]) };
        let lr = lead_return(&net, get(&r), SignFilter::All).values;
        let pos = lead_return(&net, get(&r), SignFilter::Pos).values;
        let neg = lead_return(&net, get(&r), SignFilter::Neg).values;
        let ls = lead_return(&net, get(&s), SignFilter::All).values;
        let combo: Vec<f64> = r.iter().zip(&s).map(|(x, y)| a * x + b * y).collect();
        let lc = lead_return(&net, get(&combo), SignFilter::All).values;
        let max = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..20 {
            prop_assert!((lr[i] - (pos[i] - neg[i])).abs() < 1e-12);
            prop_assert!((lc[i] - (a * lr[i] + b * ls[i])).abs() < 1e-12);
            prop_assert!(lr[i].abs() <= max + 1e-15);
        }
    }

    #[test]
    fn degree_ignores_volume(seed in any::<u64>(), copies in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names = tickers(25);
        let links = random_linkages(&mut rng, &names, 150, 30);
        let many: Vec<_> = links.iter().cycle().take(links.len() * copies).cloned().collect();
        let w = Window::ending(day0() + Duration::days(29), 29);
        let (one, _) = build_network(&links, w, &names);
        let (rep, _) = build_network(&many, w, &names);
        for mode in [DegreeMode::Total, DegreeMode::Lead, DegreeMode::Follower] {
            prop_assert_eq!(degree(&one, mode), degree(&rep, mode));
        }
    }

    #[test]
    fn buckets_partition(values in prop::collection::vec(-5i32..5, 0..80), k in 1usize..8) {
        prop_assume!(values.len() >= k);
        let items: Vec<(String, f64)> = values.iter().enumerate().map(|(i, v)| (format!("F{i:02}"), f64::from(*v))).collect();
        let buckets = assign_buckets(&items, k);
        let sizes: Vec<usize> = buckets.iter().map(Vec::len).collect();
        prop_assert_eq!(sizes, bucket_sizes(items.len(), k));
        let all: BTreeSet<usize> = buckets.iter().flatten().copied().collect();
        prop_assert_eq!(all.len(), items.len());
        for pair in buckets.windows(2) {
            let hi = pair[0].iter().map(|&i| items[i].1).fold(f64::NEG_INFINITY, f64::max);
            let lo = pair[1].iter().map(|&i| items[i].1).fold(f64::INFINITY, f64::min);
            prop_assert!(hi <= lo);
        }
    }

    #[test]
    fn long_short_and_equal_weight_identities(seed in any::<u64>(), k in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names = tickers(23);
        let cal = calendar(15);
        let (returns, prices) = random_market(&mut rng, &names, &cal);
        let mut signal = newsnet::Panel::new();
        let mut resid = newsnet::Panel::new();
        for (t, d, _) in returns.iter() {
            signal.insert(t, d, rng.random_range(-1.0..1.0));
            resid.insert(t, d, rng.random_range(-0.01..0.01));
        }
        let spec = SortSpec { k, timing: Timing::Contemporaneous, ..SortSpec::default() };
        let raw = SortInputs { returns: &returns, source: ReturnSource::Raw, prices: &prices, calendar: &cal };
        let res = sort_portfolios(&signal, &spec, &raw).unwrap();
        prop_assert_eq!(res.periods.len(), 14);
        for p in &res.periods {
            let ls = res.long_short().into_iter().find(|(d, _)| *d == p.period).unwrap().1;
            prop_assert_eq!(ls, p.returns[k - 1] - p.returns[0]);
            for (b, members) in p.buckets.iter().enumerate() {
                let simple: Vec<f64> = members.iter().map(|t| returns.get(t, p.period).unwrap().exp_m1()).collect();
                let mean = simple.iter().sum::<f64>() / simple.len() as f64;
                prop_assert!((p.returns[b] - mean).abs() < 1e-12);
            }
        }
        let alt = SortInputs { source: ReturnSource::Panel(&resid), ..raw };
        let res2 = sort_portfolios(&signal, &spec, &alt).unwrap();
        for (p, q) in res.periods.iter().zip(&res2.periods) {
            prop_assert_eq!(&p.buckets, &q.buckets);
        }
    }
}
