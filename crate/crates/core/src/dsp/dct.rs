use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square orthonormal DCT-II matrix; row `k` holds basis function `k`.
///
/// `M[k][n] = s_k cos(pi (n + 1/2) k / N)` with `s_0 = sqrt(1/N)` and
/// `s_k = sqrt(2/N)` otherwise, so `M * M^T = I`.
pub fn dct_matrix<T: Scalar>(n: usize) -> Result<Array2<T>> {
    if n == 0 {
        return Err(Error::InvalidInput("DCT dimension must be at least 1".into()));
    }
    let nf = n as f64;
    Ok(Array2::from_shape_fn((n, n), |(k, i)| {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        T::lit(scale * (std::f64::consts::PI * (i as f64 + 0.5) * k as f64 / nf).cos())
    }))
}
