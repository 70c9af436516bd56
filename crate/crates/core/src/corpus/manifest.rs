//! Tab-separated corpus manifest:
//! `clean_path<TAB>noise_path<TAB>snr_db<TAB>offset<TAB>split`, one mixture per line.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::MixSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub clean_path: PathBuf,
    pub noise_path: PathBuf,
    pub snr_db: f64,
    pub noise_offset: usize,
    pub split: Split,
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

impl ManifestEntry {
    pub fn mix_spec(&self) -> MixSpec {
        MixSpec {
            clean_id: self.clean_path.display().to_string(),
            noise_id: self.noise_path.display().to_string(),
            snr_db: self.snr_db,
            noise_offset: self.noise_offset,
        }
    }

    /// Condition label used when aggregating metrics: the noise file stem.
    pub fn noise_name(&self) -> String {
        stem(&self.noise_path)
    }

    pub fn clean_name(&self) -> String {
        stem(&self.clean_path)
    }

    /// File-name-safe identifier, unique within a manifest through `index`.
    pub fn utterance_id(&self, index: usize) -> String {
        format!(
            "{index:05}_{}_{}_snr{}",
            self.clean_name(),
            self.noise_name(),
            self.snr_db
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Format {
                what: "manifest",
                reason: format!("line {}: {reason}", lineno + 1),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(bad(format!("expected 5 tab-separated fields, got {}", fields.len())));
            }
            let snr_db: f64 = fields[2]
                .parse()
                .map_err(|_| bad(format!("bad snr_db '{}'", fields[2])))?;
            if !snr_db.is_finite() {
                return Err(bad("snr_db must be finite".into()));
            }
            entries.push(ManifestEntry {
                clean_path: PathBuf::from(fields[0]),
                noise_path: PathBuf::from(fields[1]),
                snr_db,
                noise_offset: fields[3]
                    .parse()
                    .map_err(|_| bad(format!("bad offset '{}'", fields[3])))?,
                split: fields[4].parse().map_err(|e: Error| bad(e.to_string()))?,
            });
        }
        Ok(Self { entries })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.clean_path.display(),
                e.noise_path.display(),
                e.snr_db,
                e.noise_offset,
                e.split
            ));
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Entries of one split with their manifest-wide index.
    pub fn split(&self, split: Split) -> impl Iterator<Item = (usize, &ManifestEntry)> {
        self.entries
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.split == split)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_emit() {
        let text = "a/c1.wav\tn/babble.wav\t-5\t1200\ttrain\nc2.wav\tn.wav\t2.5\t0\ttest\n";
        let m = Manifest::parse(text).unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].snr_db, -5.0);
        assert_eq!(m.entries[0].noise_offset, 1200);
        assert_eq!(m.entries[1].split, Split::Test);
        assert_eq!(m.to_text(), text);
        assert_eq!(m.entries[0].utterance_id(3), "00003_c1_babble_snr-5");
        assert_eq!(m.split(Split::Test).map(|(i, _)| i).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn malformed_lines() {
        assert!(Manifest::parse("a\tb\tc\t0\ttrain").is_err());
        assert!(Manifest::parse("a\tb\t1\t-3\ttrain").is_err());
        assert!(Manifest::parse("a\tb\t1\t0\tdev").is_err());
        assert!(Manifest::parse("a\tb\t1\t0").is_err());
        assert!(Manifest::parse("a\tb\tinf\t0\ttrain").is_err());
    }
}
