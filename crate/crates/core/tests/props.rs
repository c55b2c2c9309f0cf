//! Property tests for structural invariants.

use std::sync::Arc;

use proptest::prelude::*;

use lowscan::axis::WavenumberAxis;
use lowscan::cube::{cube_load, cube_save, HyperspectralCube};
use lowscan::dsp::{snip_baseline_values, SnipParams};
use lowscan::prep::{trim_spectrum, TrimSpec};
use lowscan::spectrum::Spectrum;
use lowscan::transform::{bridge_invert, minmax_apply, snv};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Saving any finite cube, loading it, and saving again reproduces the
    /// payload byte for byte.
    #[test]
    fn cube_resave_is_byte_identical(
        h in 1usize..4,
        w in 1usize..4,
        l in 2usize..12,
        seed in any::<u32>(),
    ) {
        let axis = Arc::new(WavenumberAxis::make_axis(100.0, 200.0, l).unwrap());
        let mut state = seed as u64 | 1;
        let data: Vec<f64> = (0..h * w * l)
            .map(|_| {
                // xorshift; values span several orders of magnitude
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                ((state % 2_000_003) as f64 - 1_000_001.0) / 997.0
            })
            .collect();
        let cube = HyperspectralCube::new(h, w, axis, data, "p", 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        cube_save(&cube, &a).unwrap();
        let loaded = cube_load(&a).unwrap();
        cube_save(&loaded, &b).unwrap();
        prop_assert_eq!(
            std::fs::read(a.join("data.f32")).unwrap(),
            std::fs::read(b.join("data.f32")).unwrap()
        );
    }

    /// index_of(wavenumber_of(i)) == i on uniform axes.
    #[test]
    fn axis_index_round_trip(
        start in -1000.0f64..3000.0,
        span in 1.0f64..5000.0,
        n in 2usize..2000,
    ) {
        let ax = WavenumberAxis::make_axis(start, start + span, n).unwrap();
        for i in [0, n / 3, n / 2, n - 1] {
            prop_assert_eq!(ax.index_of(ax.wavenumber_of(i).unwrap()).unwrap(), i);
        }
    }

    /// The full normalization stack inverts exactly through the bridge.
    #[test]
    fn normalization_round_trip(values in prop::collection::vec(-10.0f64..10.0, 8..64)) {
        let n = values.len();
        prop_assume!(values.iter().any(|v| (v - values[0]).abs() > 1e-9));
        let axis = Arc::new(WavenumberAxis::make_axis(0.0, (n - 1) as f64, n).unwrap());
        let s = Spectrum::new(values.clone(), axis, 1).unwrap();
        let (sn, _) = snv(&s).unwrap();
        let normed = minmax_apply(&sn, -5.0, 5.0).unwrap();
        let stats = normed.stats().unwrap().clone();
        let back = bridge_invert(&normed, &stats).unwrap();
        for (a, b) in back.values().iter().zip(&values) {
            prop_assert!((a - b).abs() / b.abs().max(1.0) < 1e-9);
        }
    }

    /// More clipping iterations never raise the SNIP baseline.
    #[test]
    fn snip_monotone_in_iterations(
        values in prop::collection::vec(0.0f64..5.0, 32..96),
        m in 2usize..12,
    ) {
        let small = SnipParams { iterations: m - 1, decreasing_window: true, lls_transform: false };
        let large = SnipParams { iterations: m, decreasing_window: true, lls_transform: false };
        let a = snip_baseline_values(&values, small).unwrap();
        let b = snip_baseline_values(&values, large).unwrap();
        for (x, y) in b.iter().zip(&a) {
            prop_assert!(x <= &(y + 1e-12));
        }
    }

    /// Trimming twice equals trimming once.
    #[test]
    fn trim_idempotent(
        n in 32usize..200,
        lo_edge in 0usize..5,
        hi_edge in 0usize..5,
        gap_at in 0.2f64..0.7,
    ) {
        let axis = Arc::new(WavenumberAxis::make_axis(950.0, 4000.0, n).unwrap());
        let s = Spectrum::new((0..n).map(|i| (i as f64).cos()).collect(), axis, 1).unwrap();
        let gap_lo = 950.0 + gap_at * 3050.0;
        let spec = TrimSpec {
            drop_edges: (lo_edge, hi_edge),
            drop_ranges: vec![(gap_lo, gap_lo + 150.0)],
        };
        let once = trim_spectrum(&s, &spec).unwrap();
        let twice = trim_spectrum(&once, &spec).unwrap();
        prop_assert_eq!(once.values(), twice.values());
        prop_assert_eq!(once.axis().to_points(), twice.axis().to_points());
    }
}
