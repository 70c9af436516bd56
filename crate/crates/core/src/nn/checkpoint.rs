//! "SJNN" checkpoint: a trained network plus everything inference needs.
//!
//! Layout (little-endian): magic `SJNN`, version `u32`, variant `u8`, tau
//! `u32`, noise-aware frames `u32`, LPS dims `u32`, MFCC input dims `u32`,
//! input dim `u32`, hidden layer count `u32` and widths `u32...`, head widths
//! (LPS, MFCC, IBM) `3 x u32`, stats count `u32` followed by that many
//! length-prefixed "SJFM" normalization blocks (LPS, MFCC), then for each
//! layer its weights row-major and bias as `f32`.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Architecture, HeadLayout, Layer, Network};
use crate::corpus::{FeatureStats, InputLayout, NormStats, SystemVariant};
use crate::error::{Error, Result};
use crate::features::FeatureKind;
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SJNN";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A network together with its input recipe and normalization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub network: Network<T>,
    pub variant: SystemVariant,
    pub layout: InputLayout,
    pub stats: FeatureStats<T>,
}

fn malformed(reason: impl Into<String>) -> Error {
    Error::Format {
        what: "SJNN checkpoint",
        reason: reason.into(),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| malformed("truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f32s<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| malformed("size overflow"))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| T::lit(f32::from_le_bytes(c.try_into().unwrap()) as f64))
            .collect())
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

impl<T: Scalar> Model<T> {
    pub fn new(network: Network<T>, variant: SystemVariant, layout: InputLayout, stats: FeatureStats<T>) -> Result<Self> {
        let m = Self {
            network,
            variant,
            layout,
            stats,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.network.input_dim() != self.layout.input_dim() {
            return Err(Error::Config(format!(
                "network input {} does not match input layout {}",
                self.network.input_dim(),
                self.layout.input_dim()
            )));
        }
        if self.stats.lps.dims() != self.layout.lps_dims {
            return Err(Error::Config("LPS statistics do not match input layout".into()));
        }
        if self.layout.mfcc_dims != 0 && self.stats.mfcc.dims() != self.layout.mfcc_dims {
            return Err(Error::Config("MFCC statistics do not match input layout".into()));
        }
        if self.variant.mfcc_input() != (self.layout.mfcc_dims > 0) {
            return Err(Error::Config(format!(
                "variant {} inconsistent with MFCC input width {}",
                self.variant, self.layout.mfcc_dims
            )));
        }
        let h = self.network.heads();
        if (h.mfcc > 0) != self.variant.mfcc_output() || (h.ibm > 0) != self.variant.ibm_output() {
            return Err(Error::Config(format!(
                "variant {} inconsistent with head layout {h:?}",
                self.variant
            )));
        }
        Ok(())
    }

    pub fn has_ibm_head(&self) -> bool {
        self.network.heads().ibm > 0
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(self.variant.code());
        put_u32(&mut out, self.layout.tau);
        put_u32(&mut out, self.layout.noise_aware_frames);
        put_u32(&mut out, self.layout.lps_dims);
        put_u32(&mut out, self.layout.mfcc_dims);
        let arch = &self.network.arch;
        put_u32(&mut out, arch.input_dim);
        put_u32(&mut out, arch.hidden.len());
        for &w in &arch.hidden {
            put_u32(&mut out, w);
        }
        put_u32(&mut out, arch.heads.lps);
        put_u32(&mut out, arch.heads.mfcc);
        put_u32(&mut out, arch.heads.ibm);
        put_u32(&mut out, 2);
        for stats in [&self.stats.lps, &self.stats.mfcc] {
            let block = stats.encode();
            put_u32(&mut out, block.len());
            out.extend_from_slice(&block);
        }
        for layer in &self.network.layers {
            for v in layer.weights.iter().chain(layer.bias.iter()) {
                out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(malformed("bad magic"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION as usize {
            return Err(malformed(format!("unsupported version {version}")));
        }
        let code = r.u8()?;
        let variant = SystemVariant::from_code(code).ok_or_else(|| malformed(format!("unknown variant {code}")))?;
        let layout = InputLayout {
            tau: r.u32()?,
            noise_aware_frames: r.u32()?,
            lps_dims: r.u32()?,
            mfcc_dims: r.u32()?,
        };
        let input_dim = r.u32()?;
        let n_hidden = r.u32()?;
        if n_hidden > 64 {
            return Err(malformed(format!("{n_hidden} hidden layers")));
        }
        let hidden = (0..n_hidden).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let heads = HeadLayout {
            lps: r.u32()?,
            mfcc: r.u32()?,
            ibm: r.u32()?,
        };
        let n_stats = r.u32()?;
        if n_stats != 2 {
            return Err(malformed(format!("expected 2 statistics blocks, got {n_stats}")));
        }
        let mut stats = Vec::with_capacity(2);
        for _ in 0..2 {
            let len = r.u32()?;
            stats.push(NormStats::<T>::decode(r.take(len)?)?);
        }
        let mfcc = stats.pop().unwrap();
        let lps = stats.pop().unwrap();
        if lps.kind != FeatureKind::Lps || mfcc.kind != FeatureKind::Mfcc {
            return Err(malformed("statistics blocks out of order"));
        }
        let arch = Architecture {
            input_dim,
            hidden,
            heads,
        };
        arch.validate().map_err(|e| malformed(e.to_string()))?;
        let widths = arch.widths();
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for p in widths.windows(2) {
            let weights = Array2::from_shape_vec((p[1], p[0]), r.f32s(p[0] * p[1])?)
                .map_err(|e| malformed(e.to_string()))?;
            let bias = Array1::from(r.f32s(p[1])?);
            layers.push(Layer { weights, bias });
        }
        if r.pos != bytes.len() {
            return Err(malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let network = Network::from_layers(arch, layers)?;
        Self::new(network, variant, layout, FeatureStats { lps, mfcc })
            .map_err(|e| malformed(e.to_string()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::decode(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}
