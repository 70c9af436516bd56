//! Feature extraction: log-power spectra, full-dimension MFCC, ideal binary
//! masks, context splicing, and the binary feature container.

pub mod container;
mod extract;
mod ibm;
mod lps;
mod mel;
mod mfcc;
mod splice;

pub use extract::{FeatureExtractor, MelConfig, MixtureFeatures};
pub use ibm::{compute_ibm, IbmConfig};
pub use lps::{lps, lps_to_magnitude};
pub use mel::{hz_to_mel, mel_to_hz, MelBank};
pub use mfcc::{mfcc, Mfcc};
pub use splice::splice;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied to every power value before taking a logarithm.
pub const POWER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Lps,
    Mfcc,
    Ibm,
}

impl FeatureKind {
    pub fn code(self) -> u8 {
        match self {
            FeatureKind::Lps => 0,
            FeatureKind::Mfcc => 1,
            FeatureKind::Ibm => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(FeatureKind::Lps),
            1 => Some(FeatureKind::Mfcc),
            2 => Some(FeatureKind::Ibm),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Lps => "lps",
            FeatureKind::Mfcc => "mfcc",
            FeatureKind::Ibm => "ibm",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lps" => Ok(FeatureKind::Lps),
            "mfcc" => Ok(FeatureKind::Mfcc),
            "ibm" => Ok(FeatureKind::Ibm),
            other => Err(Error::InvalidInput(format!("unknown feature kind '{other}'"))),
        }
    }
}

/// A frames-by-dims matrix tagged with what it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub data: Array2<T>,
    pub kind: FeatureKind,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(data: Array2<T>, kind: FeatureKind) -> Self {
        Self { data, kind }
    }

    pub fn n_frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dims(&self) -> usize {
        self.data.ncols()
    }

    pub fn expect_kind(&self, kind: FeatureKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::KindMismatch {
                expected: kind.to_string(),
                actual: self.kind.to_string(),
            });
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> FeatureMatrix<U> {
        FeatureMatrix {
            data: self.data.mapv(|v| U::lit(v.as_f64())),
            kind: self.kind,
        }
    }
}
