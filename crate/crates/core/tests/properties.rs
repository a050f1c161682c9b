mod common;

use proptest::prelude::*;

use common::{brute_ranks, clip, dot, energy, frobenius_diff};
use sepeval::harness::{read_npy, write_npy, NpyDtype};
use sepeval::linalg::{fir_filter, DEFAULT_CLIP_EPS};
use sepeval::{
    mse_spec, pcc, psd_sqrt, ranks_with_ties, si_decompose, srcc, sym_eigen, AudioClip, PairedSeries, Polarity,
    StftConfig, SymMatrix,
};

fn finite(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    lo..hi
}

fn tied_values(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0i32..15).prop_map(|v| v as f64 * 0.25), n)
}

fn square(max: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max).prop_flat_map(|n| (Just(n), prop::collection::vec(finite(-10.0, 10.0), n * n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ranks_with_ties_match_brute_force(v in tied_values(1..50)) {
        let r = ranks_with_ties(&v);
        prop_assert_eq!(&r, &brute_ranks(&v));
        let n = v.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn correlations_bounded_and_flip_exact(
        (xs, ys) in (3usize..40).prop_flat_map(|n| (tied_values(n..n + 1), prop::collection::vec(finite(-5.0, 5.0), n)))
    ) {
        let hi = PairedSeries::new(xs.clone(), ys.clone(), Polarity::HigherIsBetter).unwrap();
        let lo = PairedSeries::new(xs.clone(), ys.clone(), Polarity::LowerIsBetter).unwrap();
        if let Ok(s) = srcc(&hi) {
            prop_assert!(s.abs() <= 1.0);
            prop_assert_eq!(srcc(&lo).unwrap(), -s);
            let warped: Vec<f64> = ys.iter().map(|y| y.powi(3) + 2.0 * y).collect();
            let t = PairedSeries::new(xs.clone(), warped, Polarity::HigherIsBetter).unwrap();
            prop_assert!((srcc(&t).unwrap() - s).abs() < 1e-12);
        }
        if let Ok(p) = pcc(&hi) {
            prop_assert!(p.abs() <= 1.0);
            prop_assert_eq!(pcc(&lo).unwrap(), -p);
        }
    }

    #[test]
    fn sym_matrix_is_exactly_symmetric((n, v) in square(12)) {
        let a = SymMatrix::new(n, v).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(a.get(i, j).to_bits(), a.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn eigen_decomposition_reconstructs((n, v) in square(16)) {
        let a = SymMatrix::new(n, v).unwrap();
        let eig = sym_eigen(&a).unwrap();
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let back = eig.reconstruct();
        prop_assert!(frobenius_diff(back.as_slice(), a.as_slice()) <= 1e-12 * a.frobenius_norm().max(1.0));
    }

    #[test]
    fn psd_sqrt_is_psd_and_squares_back((n, v) in square(10)) {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| v[i * n + k] * v[j * n + k]).sum();
            }
        }
        let a = SymMatrix::new(n, a).unwrap();
        let s = psd_sqrt(&a, DEFAULT_CLIP_EPS).unwrap();
        prop_assert!(sym_eigen(&s).unwrap().eigenvalues.iter().all(|&l| l >= -1e-9 * a.frobenius_norm().sqrt()));
        let sq = common::dense_mul(s.as_slice(), s.as_slice(), n);
        prop_assert!(frobenius_diff(&sq, a.as_slice()) <= 1e-6 * a.frobenius_norm().max(1.0));
    }

    #[test]
    fn fir_filter_is_linear(
        x in prop::collection::vec(finite(-1.0, 1.0), 64),
        y in prop::collection::vec(finite(-1.0, 1.0), 64),
        b in prop::collection::vec(finite(-1.0, 1.0), 1..8),
        k in finite(-3.0, 3.0),
    ) {
        let mix: Vec<f64> = x.iter().zip(&y).map(|(a, c)| a + k * c).collect();
        let lhs = fir_filter(&mix, &b);
        let fx = fir_filter(&x, &b);
        let fy = fir_filter(&y, &b);
        for i in 0..64 {
            prop_assert!((lhs[i] - (fx[i] + k * fy[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn mse_spec_symmetric_nonnegative(
        a in prop::collection::vec(finite(-1.0, 1.0), 600..1200),
        seed in any::<u64>(),
    ) {
        let mut r = common::rng(seed);
        let b: Vec<f64> = common::gaussian(&mut r, a.len());
        let (ca, cb) = (clip(a, 8000), clip(b, 8000));
        let config = StftConfig::default();
        let ab = mse_spec(&ca, &cb, config).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, mse_spec(&cb, &ca, config).unwrap());
        prop_assert_eq!(mse_spec(&ca, &ca, config).unwrap(), 0.0);
    }

    #[test]
    fn decomposition_invariants(seed in any::<u64>(), k in 2usize..5, target in 0usize..2) {
        let mut r = common::rng(seed);
        let n = 400;
        let refs: Vec<Vec<f64>> = (0..k).map(|_| common::gaussian(&mut r, n)).collect();
        let e = common::gaussian(&mut r, n);
        let clips: Vec<AudioClip> = refs.iter().map(|v| clip(v.clone(), 8000)).collect();
        let views: Vec<&AudioClip> = clips.iter().collect();
        let d = si_decompose(&clip(e.clone(), 8000), &views, target).unwrap();
        let rebuilt: Vec<f64> = (0..n).map(|i| d.s_target[i] + d.e_interf[i] + d.e_artif[i]).collect();
        prop_assert!(frobenius_diff(&rebuilt, &e) <= 1e-9 * energy(&e).sqrt());
        let na = energy(&d.e_artif).sqrt();
        for v in &refs {
            prop_assert!(dot(&d.e_artif, v).abs() <= 1e-6 * na * energy(v).sqrt());
        }
    }

    #[test]
    fn npy_round_trip_is_bit_exact(
        (rows, cols, data) in (1usize..20, 1usize..20).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), r * c))
        })
    ) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.npy");
        write_npy(&p, &[rows, cols], &data, NpyDtype::F64).unwrap();
        let t = read_npy(&p).unwrap();
        prop_assert_eq!(t.shape, vec![rows, cols]);
        prop_assert!(t.data.iter().zip(&data).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
