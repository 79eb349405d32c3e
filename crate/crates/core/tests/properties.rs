//! Property tests over randomly generated series and sample sets.

use num_bigint::BigUint;
use proptest::prelude::*;

use runstat::mc::NullSampleSet;
use runstat::partitions::{count_partitions_exact_parts, enumerate_partitions, RunLengthVector};
use runstat::runs::{compute_statistic, decompose_runs, largest_run_weights, run_weight, Side};
use runstat::ObservationSeries;

fn residuals() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![9 => -4.0f64..4.0, 1 => Just(0.0)],
        1..60,
    )
}

proptest! {
    #[test]
    fn sign_flip_swaps_sides(z in residuals()) {
        // ties stay failures under negation, so exclude them here
        let z: Vec<f64> = z.into_iter().map(|v| if v == 0.0 { 0.5 } else { v }).collect();
        let s = ObservationSeries::from_standardized(&z).unwrap();
        let flipped = s.negated();
        let a = compute_statistic(&s, Side::Success).map(|v| v.t_obs);
        let b = compute_statistic(&flipped, Side::Failure).map(|v| v.t_obs);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn run_weights_partition_chi_square(z in residuals()) {
        let s = ObservationSeries::from_standardized(&z).unwrap();
        let d = decompose_runs(&s);
        let total: f64 = Side::BOTH
            .iter()
            .flat_map(|&side| d.runs(side).iter().cloned())
            .map(|r| run_weight(&s, r))
            .sum();
        let chi2 = s.chi_square();
        prop_assert!((total - chi2).abs() <= 1e-9 * chi2.max(1.0));
        for side in Side::BOTH {
            if let Some(v) = compute_statistic(&s, side) {
                prop_assert!(v.t_obs <= chi2 + 1e-12);
                prop_assert_eq!(v.weights.len(), d.runs(side).len());
            }
        }
    }

    #[test]
    fn fast_path_matches_full_statistic(z in residuals()) {
        let s = ObservationSeries::from_standardized(&z).unwrap();
        let fast = largest_run_weights(&z);
        for side in Side::BOTH {
            let full = compute_statistic(&s, side).map(|v| v.t_obs);
            match (full, *fast.get(side)) {
                (None, None) => {}
                (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0)),
                other => prop_assert!(false, "mismatch {:?}", other),
            }
        }
    }

    #[test]
    fn decomposition_reconstructs_signs(z in residuals()) {
        let s = ObservationSeries::from_standardized(&z).unwrap();
        let d = decompose_runs(&s);
        let expected: Vec<Side> = z
            .iter()
            .map(|&v| if v > 0.0 { Side::Success } else { Side::Failure })
            .collect();
        prop_assert_eq!(d.reconstruct_signs(), expected);
        let from_runs = RunLengthVector::from_run_lengths(d.runs(Side::Success).iter().map(|r| r.len()));
        prop_assert_eq!(d.run_lengths(), &from_runs);
        prop_assert_eq!(from_runs.successes(), d.successes());
    }

    #[test]
    fn null_sample_csv_round_trip(
        values in prop::collection::vec(prop_oneof![3 => Just(None), 17 => (0.0f64..80.0).prop_map(Some)], 1..200),
        n in 1usize..500,
        seed in any::<u64>(),
    ) {
        prop_assume!(values.iter().any(Option::is_some));
        let set = NullSampleSet::from_experiments(Side::Failure, n, seed, values.iter().copied()).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let back = NullSampleSet::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, set);
    }

    #[test]
    fn partitions_have_the_requested_shape(r in 1usize..30, m in 1usize..10) {
        let mut count = 0u64;
        let mut previous: Option<Vec<u32>> = None;
        let mut gen = enumerate_partitions(r, m);
        while let Some(parts) = gen.advance() {
            prop_assert_eq!(parts.len(), m);
            prop_assert_eq!(parts.iter().map(|&p| p as usize).sum::<usize>(), r);
            prop_assert!(parts.windows(2).all(|w| w[0] >= w[1]));
            if let Some(prev) = &previous {
                prop_assert!(prev.as_slice() > parts);
            }
            previous = Some(parts.to_vec());
            count += 1;
        }
        prop_assert_eq!(BigUint::from(count), count_partitions_exact_parts(r, m));
    }
}
