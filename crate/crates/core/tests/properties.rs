use nalgebra::DMatrix;
use proptest::prelude::*;

use fdnet::evaluate::{aggregate, risk_from_values, RiskRecord};
use fdnet::grid::GridDesign;
use fdnet::io::{read_dataset, write_dataset};
use fdnet::network::NetworkParams;
use fdnet::rng::{substream, StreamRole};
use fdnet::simulate::{DatasetMeta, FunctionalDataset};
use fdnet::spectrum::{circulant_eigenvalues, dense_eigenvalues};
use fdnet::train::moving_average;

fn widths_strategy() -> impl Strategy<Value = Vec<usize>> {
    (1usize..=3, prop::collection::vec(1usize..=6, 1..=3)).prop_map(|(d, hidden)| {
        let mut w = vec![d];
        w.extend(hidden);
        w.push(1);
        w
    })
}

fn params_strategy() -> impl Strategy<Value = NetworkParams> {
    widths_strategy().prop_flat_map(|w| {
        let len = NetworkParams::zeros(&w).unwrap().len();
        prop::collection::vec(-2.0f64..2.0, len).prop_map(move |v| NetworkParams::from_flat(&w, v).unwrap())
    })
}

proptest! {
    #[test]
    fn projection_is_bounded_and_idempotent(p in params_strategy()) {
        let q = p.project();
        prop_assert!(q.as_slice().iter().all(|v| v.abs() <= 1.0));
        let again = q.project();
        prop_assert_eq!(again.as_slice(), q.as_slice());
    }

    #[test]
    fn thresholding_never_adds_support(p in params_strategy(), t in 0.0f64..1.5) {
        let q = p.hard_threshold(t);
        prop_assert!(q.count_nonzero(0.0) <= p.count_nonzero(0.0));
        prop_assert_eq!(q.count_nonzero(0.0), p.count_nonzero(t));
    }

    #[test]
    fn batch_matches_pointwise(p in params_strategy(), n in 1usize..6) {
        let d = p.input_dim();
        let g = GridDesign::new(&vec![n; d]).unwrap();
        let batch = p.forward_batch(&g).unwrap();
        for (j, v) in batch.iter().enumerate() {
            prop_assert_eq!(*v, p.forward(&g.point_at(j).unwrap()).unwrap());
        }
    }

    #[test]
    fn risk_is_nonnegative_and_zero_on_truth(v in prop::collection::vec(-5.0f64..5.0, 1..40), shift in -1.0f64..1.0) {
        prop_assert_eq!(risk_from_values(&v, &v, None).unwrap(), 0.0);
        let moved: Vec<f64> = v.iter().map(|x| x + shift).collect();
        let r = risk_from_values(&moved, &v, None).unwrap();
        prop_assert!(r >= 0.0 && r.is_finite());
        prop_assert!((r - shift * shift).abs() <= 1e-12);
    }

    #[test]
    fn summary_mean_is_arithmetic(risks in prop::collection::vec(0.0f64..1.0, 1..12)) {
        let records: Vec<RiskRecord> = risks
            .iter()
            .enumerate()
            .map(|(rep, &risk)| RiskRecord { sigma: 1.0, n_points: 9, n: 4, rep, seed: 0, risk, seconds: 0.0 })
            .collect();
        let s = &aggregate(&records)[0];
        let mean = risks.iter().sum::<f64>() / risks.len() as f64;
        prop_assert_eq!(s.reps, risks.len());
        prop_assert!((s.mean_risk - mean).abs() <= 1e-12);
        prop_assert!(s.sd_risk >= 0.0);
    }

    #[test]
    fn symmetric_circulant_matches_dense(half in prop::collection::vec(-1.0f64..1.0, 2..8), odd in any::<bool>()) {
        let h = half.len();
        let n = if odd { 2 * h - 1 } else { 2 * h - 2 };
        let row: Vec<f64> = (0..n).map(|k| half[k.min(n - k)]).collect();
        let m = DMatrix::from_fn(n, n, |i, j| row[(j + n - i) % n]);
        let mut fast = circulant_eigenvalues(&row).unwrap();
        fast.sort_by(|a, b| b.total_cmp(a));
        let dense = dense_eigenvalues(&m);
        for (a, b) in fast.iter().zip(&dense) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn dataset_round_trip(dims in prop::collection::vec(1usize..5, 1..4), n in 1usize..4, seed in any::<u64>()) {
        let g = GridDesign::new(&dims).unwrap();
        let mut rng = substream(seed, 0, StreamRole::Auxiliary);
        let y: Vec<f64> = (0..n * g.len()).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let meta = DatasetMeta { mean_id: "case1".into(), kernel: "zero".into(), noise: "none".into(), seed };
        let data = FunctionalDataset::new(g, n, y, meta).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let back = read_dataset(&buf[..]).unwrap();
        prop_assert_eq!(back.y, data.y);
        prop_assert_eq!(back.n, n);
        prop_assert_eq!(back.meta.seed, seed);
    }

    #[test]
    fn moving_average_stays_in_range(v in prop::collection::vec(-10.0f64..10.0, 1..50), w in 1usize..10) {
        let ma = moving_average(&v, w);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(ma.len(), if v.len() >= w { v.len() - w + 1 } else { 0 });
        prop_assert!(ma.iter().all(|m| *m >= lo - 1e-12 && *m <= hi + 1e-12));
    }
}
