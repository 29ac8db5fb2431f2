use afbm_core::channel::sample_channel;
use afbm_core::linalg::max_abs_diff;
use afbm_core::transforms::{daft_matrix, ChirpParams};
use afbm_core::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cvec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), len)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Small valid configurations: `(L, N, P, K, filter)`.
fn small_config() -> impl Strategy<Value = ModulationConfig> {
    (1usize..4, 0usize..3, 1usize..3, prop::bool::ANY, prop::bool::ANY).prop_flat_map(|(l4, extra, k, hermite, start)| {
        let l = 4 * l4;
        let n = (l + 2 + 2 * extra).max(8).next_multiple_of(2);
        ((l / 2 + 1)..=(n / 2)).prop_map(move |half_p| {
            let filter = if hermite { FilterFamily::Hermite } else { FilterFamily::Phydyas };
            let mut cfg = ModulationConfig::new(l, k, n, 2 * half_p, filter);
            if start {
                cfg.phase_reference = PhaseReference::WindowStart;
            }
            cfg
        })
    })
}

fn with_payload() -> impl Strategy<Value = (ModulationConfig, Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> {
    small_config().prop_flat_map(|cfg| {
        let (d, m) = (cfg.payload_len(), cfg.frame_len());
        (Just(cfg), cvec(d), cvec(d), cvec(m))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn daft_is_unitary(n in 2usize..40, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0) {
        let w = daft_matrix(&ChirpParams::new(c1, c2, n).unwrap()).unwrap().matrix;
        prop_assert!(w.unitarity_error() < 1e-10);
    }

    #[test]
    fn modulate_is_linear((cfg, x, y, _) in with_payload(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let m = Modem::new(&cfg).unwrap();
        let (a, b) = (Complex64::new(a, 0.5), Complex64::new(-0.25, b));
        let mix: Vec<_> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = m.modulate(&mix).unwrap();
        let rhs: Vec<_> = m.modulate(&x).unwrap().iter().zip(m.modulate(&y).unwrap()).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn matched_demodulate_is_adjoint((cfg, x, _, r) in with_payload()) {
        let m = Modem::new(&cfg).unwrap();
        let lhs = dot(&m.modulate(&x).unwrap(), &r);
        let rhs = dot(&x, &m.matched_demodulate(&r).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn synthesis_is_isometry(cfg in small_config()) {
        let m = Modem::new(&cfg).unwrap();
        prop_assert!(m.synthesis().gram().max_abs_diff(&CMat::identity(cfg.subcarriers)) < 1e-10);
    }

    #[test]
    fn active_gram_diagonal_is_unit(cfg in small_config()) {
        let m = Modem::new(&cfg).unwrap();
        let u = m.orthogonality_gram();
        for i in afbm_core::modem::active_indices(cfg.subcarriers) {
            prop_assert!((u[(i, i)] - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn effective_channels_match_chain((cfg, x, _, _) in with_payload(), seed in any::<u64>()) {
        let m = Modem::new(&cfg).unwrap();
        let profile = ChannelProfile { paths: 2, max_delay: 3, max_doppler: 1.0 };
        let ch = sample_channel(&profile, m.frame_len(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let filtered = m.receive_filter(&ch.apply(&m.modulate(&x).unwrap()).unwrap()).unwrap();
        let ftd = m.effective_channel(&ch, Domain::FilteredTd).unwrap();
        prop_assert!(max_abs_diff(&ftd.matrix.mul_vec(&x), &filtered) < 1e-10);
        let aff = m.effective_channel(&ch, Domain::Affine).unwrap();
        prop_assert!(max_abs_diff(&aff.matrix.mul_vec(&x), &m.to_affine(&filtered).unwrap()) < 1e-10);
    }

    #[test]
    fn channel_matches_dense_and_round_trips(size in 4usize..64, paths in 1usize..4, seed in any::<u64>(), v in cvec(64)) {
        let profile = ChannelProfile { paths, max_delay: 3, max_doppler: 1.5 };
        let ch = sample_channel(&profile, size, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let v = &v[..size];
        prop_assert!(max_abs_diff(&ch.apply(v).unwrap(), &ch.matrix().mul_vec(v)) < 1e-10);
        let back = ChannelRealization::from_csv(&ch.to_csv()).unwrap();
        prop_assert_eq!(back.paths(), ch.paths());
    }

    #[test]
    fn qam_map_demap(bits in prop::collection::vec(0u8..2, 0..64), order in prop::sample::select(vec![4usize, 16, 64])) {
        let c = Constellation::new(order).unwrap();
        let len = bits.len() - bits.len() % c.bits_per_symbol();
        let symbols = c.map(&bits[..len]).unwrap();
        prop_assert_eq!(c.demap(&symbols), bits[..len].to_vec());
        let mean: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
        prop_assert!((mean - 1.0).abs() < 1e-12);
    }
}
