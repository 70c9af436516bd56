//! Iterative radix-2 complex FFT.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Precomputed twiddles and bit-reversal table for one transform size.
#[derive(Debug, Clone)]
pub struct FftPlan<T> {
    size: usize,
    twiddles: Vec<Complex<T>>,
    bitrev: Vec<usize>,
}

impl<T: Scalar> FftPlan<T> {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || !size.is_power_of_two() {
            return Err(Error::Config(format!(
                "FFT size must be a power of two, got {size}"
            )));
        }
        let bits = size.trailing_zeros();
        let bitrev = (0..size)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        // Twiddles computed in f64 so that f32 plans are as accurate as possible.
        let twiddles = (0..size / 2)
            .map(|k| {
                let angle = -2.0 * std::f64::consts::PI * k as f64 / size as f64;
                Complex::new(T::lit(angle.cos()), T::lit(angle.sin()))
            })
            .collect();
        Ok(Self {
            size,
            twiddles,
            bitrev,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// In-place forward transform, `X[k] = sum_n x[n] e^{-2 pi i k n / N}`.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.transform(buf, false);
    }

    /// In-place inverse transform including the `1/N` factor.
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.transform(buf, true);
        let scale = T::one() / T::from_count(self.size);
        for z in buf.iter_mut() {
            *z = *z * scale;
        }
    }

    fn transform(&self, buf: &mut [Complex<T>], inverse: bool) {
        assert_eq!(buf.len(), self.size, "buffer length must equal plan size");
        let n = self.size;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}
