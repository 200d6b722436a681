use boolnet_core::{RealMatrix, ThermometerEncoder};
use proptest::prelude::*;

fn column(values: &[f64]) -> RealMatrix {
    RealMatrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn codes_are_thermometers_and_monotone(
        train in proptest::collection::vec(-100.0f64..100.0, 1..60),
        probes in proptest::collection::vec(-120.0f64..120.0, 2..40),
        levels in 1usize..12,
    ) {
        let enc = ThermometerEncoder::fit(&column(&train), levels).unwrap();
        prop_assert_eq!(enc.output_width(), levels);
        let mut sorted = probes.clone();
        sorted.sort_by(f64::total_cmp);
        let bits = enc.encode(&column(&sorted)).unwrap();
        for r in 0..sorted.len() {
            for t in 1..levels {
                prop_assert!(bits.get(r, t - 1) >= bits.get(r, t), "not a thermometer code");
            }
            if r > 0 {
                for t in 0..levels {
                    prop_assert!(bits.get(r - 1, t) <= bits.get(r, t), "larger value lost a bit");
                }
            }
        }
    }
}

#[test]
fn width_is_features_times_levels() {
    let data = RealMatrix::from_vec(2, 3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    let enc = ThermometerEncoder::fit(&data, 10).unwrap();
    assert_eq!(enc.output_width(), 30);
    assert_eq!(enc.encode(&data).unwrap().cols(), 30);
}

#[test]
fn comparison_is_strict() {
    let enc = ThermometerEncoder::from_thresholds(vec![vec![1.0, 2.0, 3.0]]).unwrap();
    let bits = enc.encode(&column(&[2.5, 2.0, 0.0, 9.0])).unwrap();
    let row = |r: usize| (0..3).map(|t| bits.get(r, t)).collect::<Vec<_>>();
    assert_eq!(row(0), [true, true, false]);
    assert_eq!(row(1), [true, false, false]);
    assert_eq!(row(2), [false, false, false]);
    assert_eq!(row(3), [true, true, true]);
}
