mod common;

use proptest::prelude::*;
use qoz::metrics::{autocorrelation, ssim_with_range};
use qoz::plan::anchor_count;
use qoz::sampler::SampleSpec;
use qoz::{
    compress_with_recon, decode_indices, decompress_bytes, decompress_grid, encode_indices,
    max_abs_error, plan_sampling, sample_blocks, ssim, CodecId, CompressedStream, CompressorConfig,
    DataGrid, DimOrder, ErrorBound, InterpKind, Interpolator, Precision,
};
use rand::Rng;

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        (1usize..300).prop_map(|n| vec![n]),
        (1usize..40, 1usize..40).prop_map(|(a, b)| vec![a, b]),
        (1usize..14, 1usize..14, 1usize..14).prop_map(|(a, b, c)| vec![a, b, c]),
    ]
}

fn interp_strategy() -> impl Strategy<Value = Interpolator> {
    (any::<bool>(), any::<bool>()).prop_map(|(cubic, asc)| {
        Interpolator::new(
            if cubic {
                InterpKind::Cubic
            } else {
                InterpKind::Linear
            },
            if asc {
                DimOrder::Ascending
            } else {
                DimOrder::Descending
            },
        )
    })
}

#[derive(Debug, Clone)]
struct Case {
    grid: DataGrid,
    config: CompressorConfig,
    eb: f64,
}

fn case_strategy() -> impl Strategy<Value = Case> {
    (
        dims_strategy(),
        any::<bool>(),
        any::<u64>(),
        -8i32..3,
        prop::sample::select(vec![2usize, 4, 8, 16, 32, 64]),
        prop::sample::select(vec![1.0, 1.25, 1.5, 1.75, 2.0]),
        prop::sample::select(vec![1.5, 2.0, 3.0, 4.0]),
        prop::collection::vec(interp_strategy(), 1..6),
        0usize..4,
        any::<bool>(),
    )
        .prop_map(
            |(dims, single, seed, eb_exp, stride, alpha, beta, interps, kind, huffman_only)| {
                let mut r = common::rng(seed);
                let scale = 10f64.powi(r.gen_range(-2..8));
                let precision = if single {
                    Precision::Single
                } else {
                    Precision::Double
                };
                let grid = DataGrid::from_fn(&dims, precision, |i| {
                    let s: f64 = i
                        .iter()
                        .enumerate()
                        .map(|(k, &c)| ((k + 1) as f64 * 0.3 * c as f64).sin())
                        .sum();
                    scale
                        * match kind {
                            0 => s,
                            1 => r.gen_range(-1.0..1.0),
                            2 => s + if i[0] % 7 < 3 { 5.0 } else { 0.0 },
                            _ => {
                                if r.gen_ratio(1, 50) {
                                    r.gen_range(-1e3..1e3)
                                } else {
                                    s
                                }
                            }
                        }
                })
                .unwrap();
                let eb = scale * 10f64.powi(eb_exp);
                let mut config = CompressorConfig::fixed(ErrorBound::Absolute(eb), dims.len());
                config.anchor_stride = stride;
                config.alpha = alpha;
                config.beta = beta;
                config.interpolators = interps;
                if huffman_only {
                    config.codec = CodecId::HuffmanOnly;
                }
                Case { grid, config, eb }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bound_holds_and_decoder_matches_encoder(case in case_strategy()) {
        let (stream, recon) = compress_with_recon(&case.grid, &case.config).unwrap();
        let bytes = stream.to_bytes();
        prop_assert_eq!(bytes.len(), stream.byte_len());
        let back = decompress_bytes(&bytes).unwrap();
        prop_assert!(max_abs_error(&case.grid, &back).unwrap() <= case.eb);
        let same_bits = recon.values().iter().zip(back.values()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same_bits);
        for &(i, v) in &stream.unpredictables {
            prop_assert_eq!(back.values()[i as usize].to_bits(), v.to_bits());
        }
        prop_assert_eq!(stream.anchors.len(), anchor_count(case.grid.dims(), case.config.anchor_stride));
    }

    #[test]
    fn recompression_stays_within_bound(case in case_strategy()) {
        let (_, once) = compress_with_recon(&case.grid, &case.config).unwrap();
        let (stream, _) = compress_with_recon(&once, &case.config).unwrap();
        let twice = decompress_grid(&stream).unwrap();
        prop_assert!(max_abs_error(&once, &twice).unwrap() <= case.eb);
    }

    #[test]
    fn stream_bytes_round_trip(case in case_strategy()) {
        let (stream, _) = compress_with_recon(&case.grid, &case.config).unwrap();
        let parsed = CompressedStream::from_bytes(&stream.to_bytes()).unwrap();
        prop_assert_eq!(parsed, stream);
    }

    #[test]
    fn corrupted_streams_never_panic(case in case_strategy(), flips in prop::collection::vec((any::<usize>(), 1u8..=255), 1..4)) {
        let (stream, _) = compress_with_recon(&case.grid, &case.config).unwrap();
        let mut bytes = stream.to_bytes();
        for (at, mask) in flips {
            let n = bytes.len();
            bytes[at % n] ^= mask;
        }
        if let Ok(grid) = decompress_bytes(&bytes) {
            prop_assert!(grid.values().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn index_codec_is_lossless(seq in prop::collection::vec(any::<i32>(), 0..2000), narrow in prop::collection::vec(-4i32..4, 0..5000)) {
        for codec in [CodecId::HuffmanOnly, CodecId::HuffmanLz] {
            prop_assert_eq!(&decode_indices(&encode_indices(&seq, codec), seq.len()).unwrap(), &seq);
            prop_assert_eq!(&decode_indices(&encode_indices(&narrow, codec), narrow.len()).unwrap(), &narrow);
        }
    }

    #[test]
    fn ssim_is_bounded_and_symmetric_with_shared_range(rows in 1usize..30, cols in 1usize..30, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let x = DataGrid::from_fn(&[rows, cols], Precision::Double, |_| r.gen_range(-3.0..3.0)).unwrap();
        let y = DataGrid::from_fn(&[rows, cols], Precision::Double, |_| r.gen_range(-3.0..3.0)).unwrap();
        let range = 6.0;
        let (a, _) = ssim_with_range(&x, &y, range).unwrap();
        let (b, _) = ssim_with_range(&y, &x, range).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!(a.abs() <= 1.0 + 1e-12);
        if rows * cols > 1 {
            prop_assert!((ssim(&x, &x).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sampled_blocks_are_disjoint_and_inside(dims in dims_strategy(), b in 2usize..20, rate in 0.01f64..1.0) {
        let grid = DataGrid::from_fn(&dims, Precision::Single, |i| i.iter().sum::<usize>() as f64).unwrap();
        let Ok(spec) = plan_sampling(&dims, b, rate) else { return Ok(()); };
        let set = sample_blocks(&grid, &spec);
        let mut covered = vec![false; grid.len()];
        for block in &set.blocks {
            let bd = block.grid.dims().to_vec();
            let count: usize = bd.iter().product();
            for flat in 0..count {
                let mut rest = flat;
                let mut idx = vec![0; bd.len()];
                for d in (0..bd.len()).rev() {
                    idx[d] = block.origin[d] + rest % bd[d];
                    rest /= bd[d];
                }
                prop_assert!(idx.iter().zip(&dims).all(|(i, n)| i < n));
                let f = grid.flat_index(&idx);
                prop_assert!(!covered[f], "overlap at {:?}", idx);
                covered[f] = true;
            }
        }
    }

    #[test]
    fn realized_rate_tracks_request_on_large_grids(ndims in 1usize..=3, b in 4usize..64, rate in 0.001f64..0.5, mult in 8usize..40) {
        let stride = plan_sampling(&vec![b * 1000; ndims], b, rate).unwrap().stride;
        let dims = vec![stride * mult + b / 2; ndims];
        let spec = SampleSpec { block_size: b, stride, requested_rate: rate };
        let realized = spec.realized_rate(&dims);
        prop_assert!((realized / rate - 1.0).abs() <= 0.5, "{} vs {}", realized, rate);
    }
}

#[test]
fn iid_errors_are_uncorrelated() {
    let mut r = common::rng(123);
    let e: Vec<f64> = (0..100_000).map(|_| r.gen_range(-1.0..1.0)).collect();
    assert!(autocorrelation(&e, 1).unwrap().abs() < 0.05);
}

#[test]
fn stream_is_stable_across_runs() {
    let grid = common::multiscale(24, 8);
    let config = CompressorConfig::fixed(ErrorBound::Relative(1e-3), 3);
    let a = compress_with_recon(&grid, &config).unwrap().0.to_bytes();
    let b = compress_with_recon(&grid, &config).unwrap().0.to_bytes();
    assert_eq!(a, b);
}
