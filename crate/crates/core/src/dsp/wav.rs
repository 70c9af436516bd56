//! 16-bit PCM mono RIFF/WAVE reading and writing.
//!
//! Only canonical integer PCM is accepted. Compressed or float encodings,
//! more than one channel, or a sample rate other than the expected one are
//! rejected with [`Error::UnsupportedAudio`].

use std::fs;
use std::path::Path;

use super::Waveform;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;
const FULL_SCALE: f64 = 32768.0;

fn malformed(reason: impl Into<String>) -> Error {
    Error::Format {
        what: "WAV file",
        reason: reason.into(),
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decodes an in-memory WAV file.
pub fn decode<T: Scalar>(bytes: &[u8], expected_rate: u32) -> Result<Waveform<T>> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }
    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| malformed(format!("chunk {:?} overruns file", String::from_utf8_lossy(id))))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(malformed("fmt chunk too short"));
                }
                let mut tag = u16_at(body, 0);
                if tag == FORMAT_EXTENSIBLE {
                    if body.len() < 40 {
                        return Err(malformed("extensible fmt chunk too short"));
                    }
                    tag = u16_at(body, 24);
                }
                format = Some((tag, u16_at(body, 2), u32_at(body, 4), u16_at(body, 14)));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_end + (size & 1);
    }
    let (tag, channels, rate, bits) = format.ok_or_else(|| malformed("no fmt chunk"))?;
    if tag != FORMAT_PCM {
        return Err(Error::UnsupportedAudio(format!(
            "format tag {tag:#x}; only integer PCM is supported"
        )));
    }
    if channels != 1 {
        return Err(Error::UnsupportedAudio(format!(
            "{channels} channels; only mono is supported"
        )));
    }
    if bits != 16 {
        return Err(Error::UnsupportedAudio(format!(
            "{bits}-bit samples; only 16-bit is supported"
        )));
    }
    if rate != expected_rate {
        return Err(Error::UnsupportedAudio(format!(
            "sample rate {rate} Hz, expected {expected_rate} Hz"
        )));
    }
    let data = data.ok_or_else(|| malformed("no data chunk"))?;
    let samples = data
        .chunks_exact(2)
        .map(|c| T::lit(i16::from_le_bytes([c[0], c[1]]) as f64 / FULL_SCALE))
        .collect();
    Waveform::new(samples, rate)
}

/// Encodes as canonical 44-byte-header PCM. Samples outside the 16-bit range
/// are clipped; the number of clipped samples is returned alongside.
pub fn encode<T: Scalar>(wave: &Waveform<T>) -> (Vec<u8>, usize) {
    let data_len = wave.samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&wave.sample_rate.to_le_bytes());
    out.extend_from_slice(&(wave.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    let mut clipped = 0;
    for x in &wave.samples {
        let v = (x.as_f64() * FULL_SCALE).round();
        let q = if v > i16::MAX as f64 {
            clipped += 1;
            i16::MAX
        } else if v < i16::MIN as f64 {
            clipped += 1;
            i16::MIN
        } else {
            v as i16
        };
        out.extend_from_slice(&q.to_le_bytes());
    }
    (out, clipped)
}

pub fn read<T: Scalar>(path: impl AsRef<Path>, expected_rate: u32) -> Result<Waveform<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, expected_rate).map_err(|e| match e {
        Error::UnsupportedAudio(m) => Error::UnsupportedAudio(format!("{}: {m}", path.display())),
        Error::Format { what, reason } => Error::Format {
            what,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    })
}

/// Writes the waveform and returns the clip count.
pub fn write<T: Scalar>(path: impl AsRef<Path>, wave: &Waveform<T>) -> Result<usize> {
    let path = path.as_ref();
    let (bytes, clipped) = encode(wave);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(clipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(tag: u16, channels: u16, rate: u32, bits: u16) -> Vec<u8> {
        let w = Waveform::new(vec![0.0f32; 4], rate).unwrap();
        let (mut b, _) = encode(&w);
        b[20..22].copy_from_slice(&tag.to_le_bytes());
        b[22..24].copy_from_slice(&channels.to_le_bytes());
        b[34..36].copy_from_slice(&bits.to_le_bytes());
        b
    }

    #[test]
    fn canonical_header_layout() {
        let w = Waveform::new(vec![0.5f32, -0.5], 16000).unwrap();
        let (b, clipped) = encode(&w);
        assert_eq!(clipped, 0);
        assert_eq!(b.len(), 48);
        assert_eq!(&b[36..40], b"data");
        assert_eq!(u32_at(&b, 24), 16000);
        assert_eq!(i16::from_le_bytes([b[44], b[45]]), 16384);
        assert_eq!(i16::from_le_bytes([b[46], b[47]]), -16384);
    }

    #[test]
    fn rejects_unsupported() {
        let ok = header(1, 1, 16000, 16);
        assert!(decode::<f32>(&ok, 16000).is_ok());
        for bad in [header(3, 1, 16000, 16), header(1, 2, 16000, 16), header(1, 1, 16000, 8)] {
            assert!(matches!(
                decode::<f32>(&bad, 16000),
                Err(Error::UnsupportedAudio(_))
            ));
        }
        assert!(matches!(
            decode::<f32>(&ok, 8000),
            Err(Error::UnsupportedAudio(_))
        ));
        assert!(matches!(decode::<f32>(b"RIFX....", 16000), Err(Error::Format { .. })));
    }

    #[test]
    fn clipping_counted() {
        let w = Waveform::new(vec![1.5f64, -2.0, 0.0, 0.99], 16000).unwrap();
        let (_, clipped) = encode(&w);
        assert_eq!(clipped, 2);
    }

    #[test]
    fn skips_unknown_chunks() {
        let w = Waveform::new(vec![0.25f32; 3], 16000).unwrap();
        let (b, _) = encode(&w);
        let mut with_list = b[..36].to_vec();
        with_list.extend_from_slice(b"LIST");
        with_list.extend_from_slice(&3u32.to_le_bytes());
        with_list.extend_from_slice(&[1, 2, 3, 0]);
        with_list.extend_from_slice(&b[36..]);
        let back: Waveform<f32> = decode(&with_list, 16000).unwrap();
        assert_eq!(back.samples, vec![0.25; 3]);
    }

    proptest! {
        #[test]
        fn quantized_samples_round_trip(raw in proptest::collection::vec(any::<i16>(), 0..200)) {
            let samples: Vec<f64> = raw.iter().map(|&s| s as f64 / FULL_SCALE).collect();
            let w = Waveform::new(samples, 16000).unwrap();
            let (bytes, clipped) = encode(&w);
            prop_assert_eq!(clipped, 0);
            let back: Waveform<f64> = decode(&bytes, 16000).unwrap();
            prop_assert_eq!(back, w);
        }
    }
}
