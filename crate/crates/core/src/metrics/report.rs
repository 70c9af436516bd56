use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Scores for one enhanced utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceMetrics {
    pub id: String,
    pub noise: String,
    pub snr_db: f64,
    pub ssnr_db: f64,
    pub stoi: f64,
}

/// Means over the utterances of one (noise, SNR) condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub noise: String,
    pub snr_db: f64,
    pub count: usize,
    pub missing: usize,
    pub ssnr_db: f64,
    pub stoi: f64,
}

impl ConditionSummary {
    pub fn is_complete(&self) -> bool {
        self.missing == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub utterances: Vec<UtteranceMetrics>,
    /// Utterances whose enhanced file was absent: (id, noise, snr_db).
    pub missing: Vec<(String, String, f64)>,
}

// SNRs are compared at millibel resolution to build condition keys
fn snr_key(snr: f64) -> i64 {
    (snr * 1000.0).round() as i64
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl MetricReport {
    pub fn push(&mut self, m: UtteranceMetrics) {
        self.utterances.push(m);
    }

    pub fn push_missing(&mut self, id: String, noise: String, snr_db: f64) {
        self.missing.push((id, noise, snr_db));
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    fn sorted(&self) -> Vec<&UtteranceMetrics> {
        let mut v: Vec<_> = self.utterances.iter().collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    /// Per-condition means, ordered by noise name then descending SNR.
    /// Summation runs in utterance-id order, so input order does not matter.
    pub fn conditions(&self) -> Vec<ConditionSummary> {
        let mut groups: BTreeMap<(String, i64), (f64, Vec<f64>, Vec<f64>, usize)> = BTreeMap::new();
        for u in self.sorted() {
            let g = groups
                .entry((u.noise.clone(), -snr_key(u.snr_db)))
                .or_insert((u.snr_db, Vec::new(), Vec::new(), 0));
            g.1.push(u.ssnr_db);
            g.2.push(u.stoi);
        }
        for (_, noise, snr) in &self.missing {
            groups
                .entry((noise.clone(), -snr_key(*snr)))
                .or_insert((*snr, Vec::new(), Vec::new(), 0))
                .3 += 1;
        }
        groups
            .into_iter()
            .map(|((noise, _), (snr_db, ssnr, stoi, missing))| ConditionSummary {
                noise,
                snr_db,
                count: ssnr.len(),
                missing,
                ssnr_db: mean(&ssnr),
                stoi: mean(&stoi),
            })
            .collect()
    }

    /// Means over every scored utterance: (ssnr_db, stoi).
    pub fn overall(&self) -> (f64, f64) {
        let s = self.sorted();
        let ssnr: Vec<f64> = s.iter().map(|u| u.ssnr_db).collect();
        let stoi: Vec<f64> = s.iter().map(|u| u.stoi).collect();
        (mean(&ssnr), mean(&stoi))
    }

    /// `noise,snr_db,metric,value` rows; the overall means use `all` for
    /// both keys, and incomplete conditions carry a `missing` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("noise,snr_db,metric,value\n");
        for c in self.conditions() {
            if c.count > 0 {
                let _ = writeln!(out, "{},{},ssnr_db,{}", c.noise, c.snr_db, c.ssnr_db);
                let _ = writeln!(out, "{},{},stoi,{}", c.noise, c.snr_db, c.stoi);
            }
            if c.missing > 0 {
                let _ = writeln!(out, "{},{},missing,{}", c.noise, c.snr_db, c.missing);
            }
        }
        if !self.utterances.is_empty() {
            let (ssnr, stoi) = self.overall();
            let _ = writeln!(out, "all,all,ssnr_db,{ssnr}");
            let _ = writeln!(out, "all,all,stoi,{stoi}");
        }
        out
    }
}
