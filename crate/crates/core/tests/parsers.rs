use std::sync::Arc;

use proptest::prelude::*;
use sam_core::data::ObservationSeries;
use sam_core::model::{LogisticGrowthModel, ParameterBox};
use sam_core::sam::cache::{content_hash, decode_banks, encode_banks};
use sam_core::sam::{LikelihoodSurface, Transition};

fn cache_bytes() -> Vec<u8> {
    let b = ParameterBox::new(vec![0.03, 850.0, 0.09], vec![0.18, 1200.0, 0.12]).unwrap();
    let trs = [Transition { from: 900.0, to: 1010.0, dt: 1.0 }];
    let s = LikelihoodSurface::build(Arc::new(LogisticGrowthModel), b.clone(), &trs, 2, 4).unwrap();
    encode_banks(&content_hash(2, "logistic", &b, &trs, 4), s.banks())
}

proptest! {
    #[test]
    fn box_display_roundtrips(pairs in proptest::collection::vec((-1e6f64..1e6, 1e-6f64..1e6), 1..6)) {
        let lower: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let upper: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
        prop_assume!(lower.iter().zip(&upper).all(|(l, u)| l < u));
        let b = ParameterBox::new(lower, upper).unwrap();
        prop_assert_eq!(ParameterBox::parse(&b.to_string()).unwrap(), b);
    }

    #[test]
    fn series_csv_roundtrips(steps in proptest::collection::vec((1e-3f64..10.0, -1e4f64..1e4), 1..40)) {
        let mut times = vec![0.0];
        let mut values = vec![1.0];
        for (dt, v) in &steps {
            times.push(times.last().unwrap() + dt);
            values.push(*v);
        }
        let s = ObservationSeries::new(times, values).unwrap();
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        prop_assert_eq!(ObservationSeries::read_csv(out.as_slice()).unwrap(), s);
    }

    #[test]
    fn series_parser_never_panics(text in "[0-9a-z,.#\\-\n ]{0,200}") {
        let _ = ObservationSeries::from_csv_str(&text);
    }

    #[test]
    fn corrupted_cache_is_rejected_or_exact(pos in 0usize..10_000, byte in any::<u8>(), cut in 0usize..10_000) {
        let good = cache_bytes();
        let mut bad = good.clone();
        let i = pos % bad.len();
        bad[i] = byte;
        if let Ok((hash, banks)) = decode_banks(&bad) {
            prop_assert_eq!(encode_banks(&hash, &banks), bad);
        }
        let truncated = &good[..cut % good.len()];
        prop_assert!(decode_banks(truncated).is_err());
    }
}
