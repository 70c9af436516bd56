//! Inference, mask-driven LPS post-processing, and waveform reconstruction
//! with the noisy phase.

use ndarray::{Array2, ArrayView2, Zip};

use crate::corpus::prepare_inputs;
use crate::dsp::{istft, Spectrogram, StftConfig, Waveform};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureKind, FeatureMatrix};
use crate::nn::Model;
use crate::scalar::Scalar;

/// Largest accepted upper threshold; estimated masks can overshoot 1 slightly.
pub const MAX_GAMMA: f64 = 1.1;

/// Thresholds of the three-branch post-processing rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostProcessConfig {
    /// At or above: keep the noisy LPS.
    pub gamma: f64,
    /// Strictly between `epsilon` and `gamma`: average noisy and estimate.
    pub epsilon: f64,
    pub enabled: bool,
}

impl Default for PostProcessConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            epsilon: 0.6,
            enabled: false,
        }
    }
}

impl PostProcessConfig {
    pub fn enabled(gamma: f64, epsilon: f64) -> Result<Self> {
        let cfg = Self {
            gamma,
            epsilon,
            enabled: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.epsilon && self.epsilon < self.gamma && self.gamma <= MAX_GAMMA) {
            return Err(Error::Config(format!(
                "post-processing needs 0 <= epsilon ({}) < gamma ({}) <= {MAX_GAMMA}",
                self.epsilon, self.gamma
            )));
        }
        Ok(())
    }
}

/// How many T-F units took each branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BranchCounts {
    pub noisy: usize,
    pub average: usize,
    pub estimate: usize,
}

impl BranchCounts {
    pub fn total(&self) -> usize {
        self.noisy + self.average + self.estimate
    }
}

fn check_same<T>(what: &str, a: &ArrayView2<T>, b: &ArrayView2<T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::shape(format!("{:?}", a.dim()), format!("{what} {:?}", b.dim())));
    }
    Ok(())
}

/// Per T-F unit: the noisy LPS where the mask is at least `gamma`, the mean of
/// noisy and estimated LPS where it lies strictly between `epsilon` and
/// `gamma`, and the estimate otherwise. Mask values are compared unclipped.
pub fn post_process<T: Scalar>(
    noisy: ArrayView2<T>,
    estimate: ArrayView2<T>,
    mask: ArrayView2<T>,
    cfg: &PostProcessConfig,
) -> Result<(Array2<T>, BranchCounts)> {
    check_same("estimate", &noisy, &estimate)?;
    check_same("mask", &noisy, &mask)?;
    let gamma = T::lit(cfg.gamma);
    let epsilon = T::lit(cfg.epsilon);
    let half = T::lit(0.5);
    let mut counts = BranchCounts::default();
    let mut out = Array2::zeros(noisy.dim());
    Zip::from(&mut out)
        .and(noisy)
        .and(estimate)
        .and(mask)
        .for_each(|o, &y, &x, &m| {
            *o = if m >= gamma {
                counts.noisy += 1;
                y
            } else if epsilon < m && m < gamma {
                counts.average += 1;
                (y + x) * half
            } else {
                counts.estimate += 1;
                x
            };
        });
    Ok((out, counts))
}

/// [`post_process`] driven by a ground-truth {0, 1} mask, for ceiling analysis.
pub fn oracle_post_process<T: Scalar>(
    noisy: ArrayView2<T>,
    estimate: ArrayView2<T>,
    true_mask: ArrayView2<T>,
    cfg: &PostProcessConfig,
) -> Result<(Array2<T>, BranchCounts)> {
    if true_mask.iter().any(|&v| v != T::zero() && v != T::one()) {
        return Err(Error::InvalidInput("oracle mask must be binary".into()));
    }
    post_process(noisy, estimate, true_mask, cfg)
}

/// Waveform from LPS and phase: magnitudes `exp(lps / 2)`, inverse STFT, then
/// clipping to [-1, 1]. Returns the number of clipped samples.
pub fn reconstruct<T: Scalar>(
    lps: ArrayView2<T>,
    phase: ArrayView2<T>,
    config: StftConfig,
    sample_rate: u32,
    target_len: usize,
) -> Result<(Waveform<T>, usize)> {
    check_same("phase", &lps, &phase)?;
    let half = T::lit(0.5);
    let magnitude = lps.mapv(|x| (x * half).exp());
    let spec = Spectrogram::from_magnitude_phase(magnitude.view(), phase, config, sample_rate)?;
    let mut wave = istft(&spec, target_len)?;
    let mut clipped = 0;
    for s in wave.samples.iter_mut() {
        if *s > T::one() {
            *s = T::one();
            clipped += 1;
        } else if *s < -T::one() {
            *s = -T::one();
            clipped += 1;
        }
    }
    Ok((wave, clipped))
}

/// Network predictions for one noisy utterance, back in the LPS domain.
#[derive(Debug, Clone)]
pub struct EnhancedFeatures<T> {
    pub noisy_spec: Spectrogram<T>,
    pub noisy_lps: FeatureMatrix<T>,
    pub estimated_lps: FeatureMatrix<T>,
    /// Raw IBM head output, when the model has one.
    pub estimated_ibm: Option<FeatureMatrix<T>>,
}

#[derive(Debug, Clone)]
pub struct EnhanceResult<T> {
    pub enhanced: Waveform<T>,
    /// LPS used for synthesis (after post-processing, when enabled).
    pub estimated_lps: FeatureMatrix<T>,
    pub estimated_ibm: Option<FeatureMatrix<T>>,
    pub branch_counts: Option<BranchCounts>,
    pub clipped: usize,
}

impl<T: Scalar> EnhanceResult<T> {
    /// `key=value` diagnostics lines.
    pub fn diagnostics(&self) -> String {
        let mut out = format!(
            "frames={}\nbins={}\nsamples={}\nclipped={}\npost_process={}\n",
            self.estimated_lps.n_frames(),
            self.estimated_lps.dims(),
            self.enhanced.len(),
            self.clipped,
            if self.branch_counts.is_some() { "on" } else { "off" },
        );
        if let Some(c) = self.branch_counts {
            out.push_str(&format!(
                "branch_noisy={}\nbranch_average={}\nbranch_estimate={}\n",
                c.noisy, c.average, c.estimate
            ));
        }
        out
    }
}

/// A loaded model together with the matching feature extractor.
#[derive(Debug, Clone)]
pub struct Enhancer<T> {
    pub model: Model<T>,
    pub extractor: FeatureExtractor<T>,
}

impl<T: Scalar> Enhancer<T> {
    pub fn new(model: Model<T>, extractor: FeatureExtractor<T>) -> Result<Self> {
        model.validate()?;
        if extractor.lps_dims() != model.layout.lps_dims {
            return Err(Error::Config(format!(
                "extractor yields {} LPS bins, model expects {}",
                extractor.lps_dims(),
                model.layout.lps_dims
            )));
        }
        if extractor.mfcc_dims() != model.stats.mfcc.dims() {
            return Err(Error::Config(format!(
                "extractor yields {} MFCC dims, model statistics have {}",
                extractor.mfcc_dims(),
                model.stats.mfcc.dims()
            )));
        }
        Ok(Self { model, extractor })
    }

    pub fn enhance_features(&self, noisy: &Waveform<T>) -> Result<EnhancedFeatures<T>> {
        let spec = self.extractor.analyze(noisy)?;
        let (noisy_lps, noisy_mfcc) = self.extractor.lps_mfcc(&spec)?;
        let layout = self.model.layout;
        let (frames, nat) = prepare_inputs(
            &noisy_lps,
            self.model.variant.mfcc_input().then_some(&noisy_mfcc),
            &self.model.stats,
            layout.noise_aware_frames,
        )?;
        let utt = crate::corpus::PreparedUtterance {
            frames,
            noise_aware: nat,
            target_lps: Array2::zeros((0, 0)),
            target_mfcc: None,
            target_ibm: None,
        };
        let out = self.model.network.forward(utt.input_rows(layout.tau).view())?;
        let lps = self.model.stats.lps.denormalize(out.lps.view())?;
        Ok(EnhancedFeatures {
            noisy_spec: spec,
            noisy_lps,
            estimated_lps: FeatureMatrix::new(lps, FeatureKind::Lps),
            estimated_ibm: out.ibm.map(|m| FeatureMatrix::new(m, FeatureKind::Ibm)),
        })
    }

    fn synthesize(
        &self,
        noisy: &Waveform<T>,
        feats: EnhancedFeatures<T>,
        lps: Array2<T>,
        counts: Option<BranchCounts>,
    ) -> Result<EnhanceResult<T>> {
        let (_, phase) = feats.noisy_spec.magnitude_phase();
        let (enhanced, clipped) = reconstruct(
            lps.view(),
            phase.view(),
            self.extractor.stft,
            noisy.sample_rate,
            noisy.len(),
        )?;
        Ok(EnhanceResult {
            enhanced,
            estimated_lps: FeatureMatrix::new(lps, FeatureKind::Lps),
            estimated_ibm: feats.estimated_ibm,
            branch_counts: counts,
            clipped,
        })
    }

    /// Full enhancement of one utterance. Post-processing requires an IBM head.
    pub fn enhance(&self, noisy: &Waveform<T>, pp: &PostProcessConfig) -> Result<EnhanceResult<T>> {
        if pp.enabled {
            pp.validate()?;
            if !self.model.has_ibm_head() {
                return Err(Error::Config(format!(
                    "post-processing requested but the {} model has no IBM head",
                    self.model.variant
                )));
            }
        }
        let feats = self.enhance_features(noisy)?;
        let (lps, counts) = match (&feats.estimated_ibm, pp.enabled) {
            (Some(mask), true) => {
                let (lps, c) = post_process(
                    feats.noisy_lps.data.view(),
                    feats.estimated_lps.data.view(),
                    mask.data.view(),
                    pp,
                )?;
                (lps, Some(c))
            }
            _ => (feats.estimated_lps.data.clone(), None),
        };
        self.synthesize(noisy, feats, lps, counts)
    }

    /// Enhancement with a ground-truth mask in place of the estimated one.
    pub fn enhance_with_oracle_mask(
        &self,
        noisy: &Waveform<T>,
        true_mask: &FeatureMatrix<T>,
        pp: &PostProcessConfig,
    ) -> Result<EnhanceResult<T>> {
        pp.validate()?;
        true_mask.expect_kind(FeatureKind::Ibm)?;
        let feats = self.enhance_features(noisy)?;
        let (lps, counts) = oracle_post_process(
            feats.noisy_lps.data.view(),
            feats.estimated_lps.data.view(),
            true_mask.data.view(),
            pp,
        )?;
        self.synthesize(noisy, feats, lps, Some(counts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one(m: f64) -> f64 {
        let y = Array2::from_elem((1, 1), 2.0);
        let x = Array2::from_elem((1, 1), 1.0);
        let mask = Array2::from_elem((1, 1), m);
        post_process(y.view(), x.view(), mask.view(), &PostProcessConfig::enabled(0.9, 0.6).unwrap())
            .unwrap()
            .0[[0, 0]]
    }

    #[test]
    fn branch_table() {
        assert_eq!(one(0.95), 2.0);
        assert_eq!(one(0.75), 1.5);
        assert_eq!(one(0.5), 1.0);
        assert_eq!(one(0.9), 2.0);
        assert_eq!(one(0.6), 1.0);
        assert_eq!(one(1.3), 2.0);
        assert_eq!(one(-0.2), 1.0);
    }

    #[test]
    fn f32_boundary_uses_same_precision() {
        let y = Array2::from_elem((1, 1), 2.0f32);
        let x = Array2::from_elem((1, 1), 1.0f32);
        let cfg = PostProcessConfig::enabled(0.9, 0.6).unwrap();
        let at = |m: f32| post_process(y.view(), x.view(), Array2::from_elem((1, 1), m).view(), &cfg).unwrap().0[[0, 0]];
        assert_eq!(at(0.9), 2.0);
        assert_eq!(at(0.6), 1.0);
    }

    #[test]
    fn config_bounds() {
        assert!(PostProcessConfig::enabled(0.6, 0.9).is_err());
        assert!(PostProcessConfig::enabled(0.9, -0.1).is_err());
        assert!(PostProcessConfig::enabled(1.5, 0.6).is_err());
        assert!(PostProcessConfig::enabled(1.05, 0.6).is_ok());
    }

    #[test]
    fn shape_mismatch() {
        let a = Array2::<f64>::zeros((2, 3));
        let b = Array2::<f64>::zeros((3, 2));
        let cfg = PostProcessConfig::enabled(0.9, 0.6).unwrap();
        assert!(post_process(a.view(), a.view(), b.view(), &cfg).is_err());
        assert!(post_process(a.view(), b.view(), a.view(), &cfg).is_err());
        assert!(reconstruct(a.view(), b.view(), StftConfig::default(), 16000, 10).is_err());
    }

    #[test]
    fn oracle_extremes() {
        let y = Array2::from_shape_fn((3, 4), |(i, j)| (i * 4 + j) as f64);
        let x = y.mapv(|v| -v);
        let cfg = PostProcessConfig::enabled(0.9, 0.6).unwrap();
        let ones = Array2::ones((3, 4));
        assert_eq!(oracle_post_process(y.view(), x.view(), ones.view(), &cfg).unwrap().0, y);
        let zeros = Array2::zeros((3, 4));
        assert_eq!(oracle_post_process(y.view(), x.view(), zeros.view(), &cfg).unwrap().0, x);
        let soft = Array2::from_elem((3, 4), 0.5);
        assert!(oracle_post_process(y.view(), x.view(), soft.view(), &cfg).is_err());
    }

    #[test]
    fn oracle_mixed_mask_matches_loop() {
        let y = Array2::from_shape_fn((5, 6), |(i, j)| ((i * 6 + j) as f64).sin());
        let x = Array2::from_shape_fn((5, 6), |(i, j)| ((i * 6 + j) as f64).cos());
        let mask = Array2::from_shape_fn((5, 6), |(i, j)| ((i * 7 + j * 3) % 2) as f64);
        let cfg = PostProcessConfig::enabled(0.9, 0.6).unwrap();
        let (out, counts) = oracle_post_process(y.view(), x.view(), mask.view(), &cfg).unwrap();
        let mut ones = 0;
        for i in 0..5 {
            for j in 0..6 {
                let want = if mask[[i, j]] == 1.0 { ones += 1; y[[i, j]] } else { x[[i, j]] };
                assert_eq!(out[[i, j]], want);
            }
        }
        assert_eq!(counts, BranchCounts { noisy: ones, average: 0, estimate: 30 - ones });
    }

    proptest! {
        #[test]
        fn output_bounded_and_counts_complete(
            vals in proptest::collection::vec((-30.0f64..10.0, -30.0f64..10.0, -0.2f64..1.2), 1..40),
            gamma in 0.7f64..1.0,
        ) {
            let n = vals.len();
            let y = Array2::from_shape_vec((1, n), vals.iter().map(|v| v.0).collect()).unwrap();
            let x = Array2::from_shape_vec((1, n), vals.iter().map(|v| v.1).collect()).unwrap();
            let m = Array2::from_shape_vec((1, n), vals.iter().map(|v| v.2).collect()).unwrap();
            let cfg = PostProcessConfig::enabled(gamma, 0.6).unwrap();
            let (out, counts) = post_process(y.view(), x.view(), m.view(), &cfg).unwrap();
            prop_assert_eq!(counts.total(), n);
            for i in 0..n {
                let (lo, hi) = (y[[0, i]].min(x[[0, i]]), y[[0, i]].max(x[[0, i]]));
                prop_assert!(lo <= out[[0, i]] && out[[0, i]] <= hi);
            }
            // raising gamma never adds first-branch units
            let higher = PostProcessConfig::enabled((gamma + 0.05).min(MAX_GAMMA), 0.6).unwrap();
            let (_, c2) = post_process(y.view(), x.view(), m.view(), &higher).unwrap();
            prop_assert!(c2.noisy <= counts.noisy);
            // second application only moves middle-branch units
            let (twice, _) = post_process(y.view(), out.view(), m.view(), &cfg).unwrap();
            for i in 0..n {
                let mid = 0.6 < m[[0, i]] && m[[0, i]] < gamma;
                if !mid {
                    prop_assert_eq!(twice[[0, i]], out[[0, i]]);
                }
            }
            // binary masks make it exactly idempotent
            let b = m.mapv(|v| if v > 0.5 { 1.0 } else { 0.0 });
            let (once, _) = post_process(y.view(), x.view(), b.view(), &cfg).unwrap();
            let (again, _) = post_process(y.view(), once.view(), b.view(), &cfg).unwrap();
            prop_assert_eq!(once, again);
        }
    }
}
