use ndarray::{s, Array2, ArrayView2};

use crate::scalar::Scalar;

/// Stacks each frame with its `tau` neighbours on either side, giving
/// `dims * (2 tau + 1)` columns. Out-of-range neighbours repeat the first or
/// last frame.
pub fn splice<T: Scalar>(features: ArrayView2<T>, tau: usize) -> Array2<T> {
    let (n, dims) = features.dim();
    let width = 2 * tau + 1;
    let mut out = Array2::zeros((n, dims * width));
    if n == 0 {
        return out;
    }
    for row in 0..n {
        for j in 0..width {
            let src = (row + j).saturating_sub(tau).min(n - 1);
            out.slice_mut(s![row, j * dims..(j + 1) * dims])
                .assign(&features.row(src));
        }
    }
    out
}
