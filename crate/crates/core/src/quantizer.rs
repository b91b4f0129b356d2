//! Linear-scale quantization of prediction residuals.

use crate::grid::Precision;

/// Default half-width of the bin range (about 2^16 bins in total).
pub const DEFAULT_RADIUS: u32 = 32768;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    pub eb: f64,
    pub radius: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantized {
    Code { index: i32, reconstructed: f64 },
    Unpredictable,
}

impl Quantizer {
    pub fn new(eb: f64) -> Self {
        Quantizer {
            eb,
            radius: DEFAULT_RADIUS,
        }
    }

    pub fn with_radius(eb: f64, radius: u32) -> Self {
        Quantizer { eb, radius }
    }

    /// Quantizes `value` against `prediction`, rounding the reconstruction
    /// to `precision`. Any value whose reconstruction would land outside the
    /// bound (bin overflow or floating-point rounding) is unpredictable.
    #[inline]
    pub fn quantize_at(&self, value: f64, prediction: f64, precision: Precision) -> Quantized {
        let scaled = ((value - prediction) / (2.0 * self.eb)).round();
        if !(scaled.abs() < self.radius as f64) {
            return Quantized::Unpredictable;
        }
        let index = scaled as i32;
        let reconstructed = precision.round(dequantize(index, prediction, self.eb));
        if (value - reconstructed).abs() <= self.eb {
            Quantized::Code {
                index,
                reconstructed,
            }
        } else {
            Quantized::Unpredictable
        }
    }

    #[inline]
    pub fn quantize(&self, value: f64, prediction: f64) -> Quantized {
        self.quantize_at(value, prediction, Precision::Double)
    }
}

/// Quantizes with the default radius.
pub fn quantize(value: f64, prediction: f64, eb: f64) -> Quantized {
    Quantizer::new(eb).quantize(value, prediction)
}

/// Inverse of [`quantize`]: the center of bin `index`.
#[inline]
pub fn dequantize(index: i32, prediction: f64, eb: f64) -> f64 {
    prediction + 2.0 * eb * index as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_bin_center() {
        match quantize(1.04, 1.0, 0.01) {
            Quantized::Code {
                index,
                reconstructed,
            } => {
                assert_eq!(index, 2);
                assert!((reconstructed - 1.04).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rounds_to_nearest_bin() {
        // (1.013 - 1.0) / 0.02 = 0.65 -> 1
        match quantize(1.013, 1.0, 0.01) {
            Quantized::Code {
                index,
                reconstructed,
            } => {
                assert_eq!(index, 1);
                assert!((reconstructed - 1.02).abs() < 1e-12);
                assert!(((1.013 - reconstructed).abs() - 0.007).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overflow_is_unpredictable() {
        assert_eq!(quantize(1e9, 0.0, 1e-6), Quantized::Unpredictable);
        // just inside the range
        let q = Quantizer::with_radius(1.0, 4);
        assert!(matches!(
            q.quantize(6.9, 0.0),
            Quantized::Code { index: 3, .. }
        ));
        assert_eq!(q.quantize(7.1, 0.0), Quantized::Unpredictable);
    }

    #[test]
    fn dequantize_cases() {
        assert!((dequantize(2, 1.0, 0.01) - 1.04).abs() < 1e-15);
        assert_eq!(dequantize(0, 3.25, 0.7), 3.25);
        assert_eq!(dequantize(-1, 0.0, 0.5), -1.0);
    }

    #[test]
    fn single_precision_reconstruction_stays_in_bound() {
        let q = Quantizer::new(1e-7);
        let v = 1.0000001f32 as f64;
        match q.quantize_at(v, 1.0, Precision::Single) {
            Quantized::Code { reconstructed, .. } => {
                assert_eq!(reconstructed, reconstructed as f32 as f64);
                assert!((v - reconstructed).abs() <= 1e-7);
            }
            Quantized::Unpredictable => {}
        }
    }

    proptest! {
        #[test]
        fn reconstruction_respects_bound(
            value in -1e6f64..1e6,
            offset in -1e3f64..1e3,
            eb in 1e-9f64..10.0,
        ) {
            let prediction = value + offset;
            if let Quantized::Code { index, reconstructed } = quantize(value, prediction, eb) {
                prop_assert!((value - reconstructed).abs() <= eb);
                prop_assert_eq!(reconstructed, dequantize(index, prediction, eb));
            }
        }

        #[test]
        fn bound_holds_near_bin_edges(
            prediction in -100.0f64..100.0,
            eb in 1e-6f64..1.0,
            bin in -1000i32..1000,
            ulps in -4i64..4,
        ) {
            // value sits within a few ulps of the boundary between two bins
            let edge = prediction + (2 * bin as i64 + 1) as f64 * eb;
            let value = f64::from_bits((edge.to_bits() as i64 + ulps) as u64);
            match quantize(value, prediction, eb) {
                Quantized::Code { reconstructed, .. } =>
                    prop_assert!((value - reconstructed).abs() <= eb),
                Quantized::Unpredictable => {}
            }
        }
    }
}
