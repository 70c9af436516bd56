use ndarray::{s, Array2, ArrayView2, Zip};

use super::{HeadLayout, HeadOutputs};
use crate::corpus::Batch;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor on `||X_n||^2` in the normalized terms.
pub const NORM_FLOOR: f64 = 1e-8;

/// Weights of the auxiliary terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.002,
        }
    }
}

/// Objective value and its parts for one batch (or a row-weighted average
/// over batches).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    pub total: f64,
    pub lps_term: f64,
    pub mfcc_term: f64,
    pub ibm_term: f64,
    /// Rows whose target norm was raised to [`NORM_FLOOR`].
    pub floored_rows: usize,
    pub rows: usize,
}

impl LossReport {
    pub fn compose(lps_term: f64, mfcc_term: f64, ibm_term: f64, w: LossWeights) -> f64 {
        lps_term + w.alpha * mfcc_term + w.beta * ibm_term
    }

    /// Row-weighted running average.
    pub fn accumulate(&mut self, other: &LossReport) {
        let (a, b) = (self.rows as f64, other.rows as f64);
        let total = a + b;
        if total == 0.0 {
            return;
        }
        let mix = |x: f64, y: f64| (x * a + y * b) / total;
        self.total = mix(self.total, other.total);
        self.lps_term = mix(self.lps_term, other.lps_term);
        self.mfcc_term = mix(self.mfcc_term, other.mfcc_term);
        self.ibm_term = mix(self.ibm_term, other.ibm_term);
        self.floored_rows += other.floored_rows;
        self.rows += other.rows;
    }
}

fn check_shape<T>(what: &str, est: &ArrayView2<T>, target: &ArrayView2<T>) -> Result<()> {
    if est.dim() != target.dim() {
        return Err(Error::shape(
            format!("{what} target {:?}", target.dim()),
            format!("{:?}", est.dim()),
        ));
    }
    Ok(())
}

/// Mean over rows of `||est - target||^2 / max(||target||^2, floor)` (or the
/// plain squared error when `normalized` is false), with the floored-row count.
fn term<T: Scalar>(est: ArrayView2<T>, target: ArrayView2<T>, normalized: bool) -> (f64, usize) {
    let n = est.nrows();
    if n == 0 {
        return (0.0, 0);
    }
    let mut sum = 0.0;
    let mut floored = 0;
    for (e, t) in est.rows().into_iter().zip(target.rows()) {
        let mut err = 0.0;
        let mut energy = 0.0;
        for (&a, &b) in e.iter().zip(t.iter()) {
            let (a, b) = (a.as_f64(), b.as_f64());
            err += (a - b) * (a - b);
            energy += b * b;
        }
        if normalized {
            if energy < NORM_FLOOR {
                energy = NORM_FLOOR;
                floored += 1;
            }
            sum += err / energy;
        } else {
            sum += err;
        }
    }
    (sum / n as f64, floored)
}

fn paired<'a, T>(
    what: &str,
    est: Option<&'a Array2<T>>,
    target: Option<&'a Array2<T>>,
) -> Result<Option<(ArrayView2<'a, T>, ArrayView2<'a, T>)>> {
    match (est, target) {
        (None, _) => Ok(None),
        (Some(e), Some(t)) => {
            check_shape(what, &e.view(), &t.view())?;
            Ok(Some((e.view(), t.view())))
        }
        (Some(_), None) => Err(Error::Config(format!(
            "network has a {what} head but the batch has no {what} targets"
        ))),
    }
}

/// Normalized LPS error plus `alpha` times normalized MFCC error plus `beta`
/// times the plain IBM squared error, each averaged over the batch.
pub fn loss<T: Scalar>(outputs: &HeadOutputs<T>, batch: &Batch<T>, w: LossWeights) -> Result<LossReport> {
    check_shape("LPS", &outputs.lps.view(), &batch.targets_lps.view())?;
    let (lps_term, mut floored) = term(outputs.lps.view(), batch.targets_lps.view(), true);
    let mfcc_term = match paired("MFCC", outputs.mfcc.as_ref(), batch.targets_mfcc.as_ref())? {
        Some((e, t)) => {
            let (v, f) = term(e, t, true);
            floored += f;
            v
        }
        None => 0.0,
    };
    let ibm_term = match paired("IBM", outputs.ibm.as_ref(), batch.targets_ibm.as_ref())? {
        Some((e, t)) => term(e, t, false).0,
        None => 0.0,
    };
    Ok(LossReport {
        total: LossReport::compose(lps_term, mfcc_term, ibm_term, w),
        lps_term,
        mfcc_term,
        ibm_term,
        floored_rows: floored,
        rows: batch.len(),
    })
}

fn term_gradient<T: Scalar>(
    mut out: ndarray::ArrayViewMut2<T>,
    est: ArrayView2<T>,
    target: ArrayView2<T>,
    weight: f64,
    normalized: bool,
) {
    let n = est.nrows().max(1) as f64;
    for ((mut g, e), t) in out.rows_mut().into_iter().zip(est.rows()).zip(target.rows()) {
        let energy = if normalized {
            t.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().max(NORM_FLOOR)
        } else {
            1.0
        };
        let scale = T::lit(2.0 * weight / (n * energy));
        Zip::from(&mut g)
            .and(&e)
            .and(&t)
            .for_each(|g, &a, &b| *g = (a - b) * scale);
    }
}

/// Derivative of [`loss`]'s total with respect to the raw network output.
pub fn output_gradient<T: Scalar>(
    output: ArrayView2<T>,
    heads: &HeadLayout,
    batch: &Batch<T>,
    w: LossWeights,
) -> Result<Array2<T>> {
    if output.ncols() != heads.total() {
        return Err(Error::shape(format!("{} outputs", heads.total()), output.ncols()));
    }
    let mut grad = Array2::zeros(output.dim());
    let lps = output.slice(s![.., heads.lps_range()]);
    check_shape("LPS", &lps, &batch.targets_lps.view())?;
    term_gradient(
        grad.slice_mut(s![.., heads.lps_range()]),
        lps,
        batch.targets_lps.view(),
        1.0,
        true,
    );
    if heads.mfcc > 0 {
        let t = batch
            .targets_mfcc
            .as_ref()
            .ok_or_else(|| Error::Config("MFCC head without MFCC targets".into()))?;
        let e = output.slice(s![.., heads.mfcc_range()]);
        check_shape("MFCC", &e, &t.view())?;
        term_gradient(grad.slice_mut(s![.., heads.mfcc_range()]), e, t.view(), w.alpha, true);
    }
    if heads.ibm > 0 {
        let t = batch
            .targets_ibm
            .as_ref()
            .ok_or_else(|| Error::Config("IBM head without IBM targets".into()))?;
        let e = output.slice(s![.., heads.ibm_range()]);
        check_shape("IBM", &e, &t.view())?;
        term_gradient(grad.slice_mut(s![.., heads.ibm_range()]), e, t.view(), w.beta, false);
    }
    Ok(grad)
}
