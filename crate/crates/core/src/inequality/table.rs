//! Conditional probability tables `P(outcomes | settings)` for n parties with
//! two settings and outcomes ±1 each.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rows must sum to one within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Entries down to this value are clamped to zero; anything lower is rejected.
pub const NEGATIVE_CLAMP: f64 = -1e-12;
/// Largest supported party count (the table is dense in 4^n).
pub const MAX_TABLE_PARTIES: usize = 8;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("party count must be in [1, {MAX_TABLE_PARTIES}], got {0}")]
    PartyCount(usize),
    #[error("expected {expected} {what}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("setting labels of party {0} must be two distinct nonempty strings")]
    SettingLabels(usize),
    #[error("entry {value} for settings `{settings}` is not a probability")]
    BadEntry { settings: String, value: f64 },
    #[error("probabilities for settings `{settings}` sum to {sum}")]
    NotNormalized { settings: String, sum: f64 },
    #[error("unknown setting combination `{0}`")]
    UnknownSettings(String),
    #[error("setting combination `{0}` listed twice")]
    DuplicateSettings(String),
    #[error("setting combination `{0}` missing")]
    MissingSettings(String),
    #[error("bad outcome `{0}` (expected +1, -1, + or -)")]
    BadOutcome(String),
    #[error("table has {got} parties; this operation needs {expected}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Dense table. Setting combinations and outcome combinations are both
/// indexed by bit strings with party 0 as the most significant bit; setting
/// bit 0 selects a party's first label and outcome bit 0 means +1.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    n: usize,
    settings_labels: Vec<[String; 2]>,
    /// `probs[s * 2^n + o]`
    probs: Vec<f64>,
}

/// Outcome combinations in table order: `+++`, `++-`, ... for three parties.
pub fn outcome_pattern(n: usize, o: usize) -> String {
    (0..n)
        .map(|p| if bit(o, p, n) == 0 { '+' } else { '-' })
        .collect()
}

/// Bit of `party` in a combination index over `n` parties.
pub fn bit(index: usize, party: usize, n: usize) -> usize {
    (index >> (n - 1 - party)) & 1
}

pub fn default_settings_labels(n: usize) -> Vec<[String; 2]> {
    const NAMES: [&str; 8] = ["x", "y", "z", "u", "v", "w", "s", "t"];
    (0..n)
        .map(|p| {
            let base = if n <= NAMES.len() {
                NAMES[p].to_string()
            } else {
                format!("s{p}_")
            };
            [format!("{base}1"), format!("{base}2")]
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    n: usize,
    #[serde(default)]
    settings_labels: Option<Vec<[String; 2]>>,
    entries: BTreeMap<String, Vec<f64>>,
}

impl DistributionTable {
    /// Validates and stores a dense table laid out as described on the type.
    pub fn new(
        n: usize,
        settings_labels: Vec<[String; 2]>,
        mut probs: Vec<f64>,
    ) -> Result<Self, TableError> {
        if n == 0 || n > MAX_TABLE_PARTIES {
            return Err(TableError::PartyCount(n));
        }
        if settings_labels.len() != n {
            return Err(TableError::Shape {
                what: "setting label pairs",
                expected: n,
                got: settings_labels.len(),
            });
        }
        for (p, [a, b]) in settings_labels.iter().enumerate() {
            if a.is_empty() || b.is_empty() || a == b || a.contains(',') || b.contains(',') {
                return Err(TableError::SettingLabels(p));
            }
        }
        let m = 1usize << n;
        if probs.len() != m * m {
            return Err(TableError::Shape {
                what: "probabilities",
                expected: m * m,
                got: probs.len(),
            });
        }
        let mut t = Self {
            n,
            settings_labels,
            probs: Vec::new(),
        };
        for s in 0..m {
            let row = &mut probs[s * m..(s + 1) * m];
            for v in row.iter_mut() {
                if !v.is_finite() || *v < NEGATIVE_CLAMP || *v > 1.0 + NORMALIZATION_TOL {
                    return Err(TableError::BadEntry {
                        settings: t.settings_key(s),
                        value: *v,
                    });
                }
                *v = v.max(0.0);
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(TableError::NotNormalized {
                    settings: t.settings_key(s),
                    sum,
                });
            }
        }
        t.probs = probs;
        Ok(t)
    }

    /// Builds a table row by row from `f(settings) -> outcome distribution`.
    pub fn from_fn(
        n: usize,
        settings_labels: Vec<[String; 2]>,
        mut f: impl FnMut(usize) -> Vec<f64>,
    ) -> Result<Self, TableError> {
        let m = 1usize << n.min(MAX_TABLE_PARTIES);
        let mut probs = Vec::with_capacity(m * m);
        for s in 0..m {
            let row = f(s);
            if row.len() != m {
                return Err(TableError::Shape {
                    what: "outcome probabilities per row",
                    expected: m,
                    got: row.len(),
                });
            }
            probs.extend(row);
        }
        Self::new(n, settings_labels, probs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn settings_labels(&self) -> &[[String; 2]] {
        &self.settings_labels
    }

    /// `P(o | s)` for combination indices.
    pub fn prob(&self, s: usize, o: usize) -> f64 {
        self.probs[(s << self.n) + o]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let m = 1 << self.n;
        &self.probs[s * m..(s + 1) * m]
    }

    /// Comma-joined setting labels, e.g. `x1,y2,z1`.
    pub fn settings_key(&self, s: usize) -> String {
        (0..self.n)
            .map(|p| self.settings_labels[p][bit(s, p, self.n)].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    fn parse_settings_key(&self, key: &str) -> Result<usize, TableError> {
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        if parts.len() != self.n {
            return Err(TableError::UnknownSettings(key.to_string()));
        }
        let mut s = 0;
        for (p, part) in parts.iter().enumerate() {
            let b = self.settings_labels[p]
                .iter()
                .position(|l| l == part)
                .ok_or_else(|| TableError::UnknownSettings(key.to_string()))?;
            s = (s << 1) | b;
        }
        Ok(s)
    }

    /// Expectation of the product of all outcomes for setting combination `s`.
    pub fn correlator(&self, s: usize) -> f64 {
        self.row(s)
            .iter()
            .enumerate()
            .map(|(o, p)| if o.count_ones() % 2 == 0 { *p } else { -*p })
            .sum()
    }

    pub fn to_json(&self) -> String {
        let entries = (0..1usize << self.n)
            .map(|s| (self.settings_key(s), self.row(s).to_vec()))
            .collect();
        let j = JsonTable {
            n: self.n,
            settings_labels: Some(self.settings_labels.clone()),
            entries,
        };
        serde_json::to_string_pretty(&j).expect("tables serialize infallibly")
    }

    /// Reads the JSON format; `settings_labels` defaults to x1/x2, y1/y2, ...
    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let j: JsonTable = serde_json::from_str(text)?;
        if j.n == 0 || j.n > MAX_TABLE_PARTIES {
            return Err(TableError::PartyCount(j.n));
        }
        let labels = j
            .settings_labels
            .unwrap_or_else(|| default_settings_labels(j.n));
        let m = 1usize << j.n;
        // Label validation happens in `new`; a shell table resolves keys.
        let shell = Self {
            n: j.n,
            settings_labels: labels.clone(),
            probs: Vec::new(),
        };
        if labels.len() != j.n {
            return Self::new(j.n, labels, Vec::new());
        }
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; m];
        for (key, row) in j.entries {
            let s = shell.parse_settings_key(&key)?;
            if row.len() != m {
                return Err(TableError::Shape {
                    what: "outcome probabilities per row",
                    expected: m,
                    got: row.len(),
                });
            }
            if rows[s].replace(row).is_some() {
                return Err(TableError::DuplicateSettings(key));
            }
        }
        let mut probs = Vec::with_capacity(m * m);
        for (s, row) in rows.into_iter().enumerate() {
            probs.extend(row.ok_or_else(|| TableError::MissingSettings(shell.settings_key(s)))?);
        }
        Self::new(j.n, labels, probs)
    }

    /// CSV with one row per (settings, outcomes): n setting labels, n
    /// outcomes as `+1`/`-1`, then the probability.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..=self.n).map(|p| format!("setting{p}")).collect();
        header.extend((1..=self.n).map(|p| format!("outcome{p}")));
        header.push("probability".into());
        w.write_record(&header).expect("in-memory write");
        let m = 1usize << self.n;
        for s in 0..m {
            for o in 0..m {
                let mut rec: Vec<String> = (0..self.n)
                    .map(|p| self.settings_labels[p][bit(s, p, self.n)].clone())
                    .collect();
                rec.extend(
                    (0..self.n)
                        .map(|p| if bit(o, p, self.n) == 0 { "+1" } else { "-1" }.to_string()),
                );
                rec.push(format!("{:e}", self.prob(s, o)));
                w.write_record(&rec).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }

    /// Reads the CSV format. Setting labels are taken in order of first
    /// appearance per column; omitted rows count as probability zero.
    pub fn from_csv(text: &str) -> Result<Self, TableError> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let cols = r.headers()?.len();
        if cols < 3 || (cols - 1) % 2 != 0 {
            return Err(TableError::Shape {
                what: "CSV columns (2n + 1)",
                expected: 3,
                got: cols,
            });
        }
        let n = (cols - 1) / 2;
        if n > MAX_TABLE_PARTIES {
            return Err(TableError::PartyCount(n));
        }
        let mut labels: Vec<Vec<String>> = vec![Vec::new(); n];
        let mut raw = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut sbits = Vec::with_capacity(n);
            for (p, lab) in labels.iter_mut().enumerate() {
                let l = rec[p].to_string();
                let b = match lab.iter().position(|x| *x == l) {
                    Some(b) => b,
                    None if lab.len() < 2 => {
                        lab.push(l);
                        lab.len() - 1
                    }
                    None => return Err(TableError::SettingLabels(p)),
                };
                sbits.push(b);
            }
            let mut o = 0;
            for p in 0..n {
                let b = match &rec[n + p] {
                    "+1" | "+" | "1" => 0,
                    "-1" | "-" => 1,
                    other => return Err(TableError::BadOutcome(other.to_string())),
                };
                o = (o << 1) | b;
            }
            let v: f64 = rec[2 * n].parse().map_err(|_| TableError::BadEntry {
                settings: sbits
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                value: f64::NAN,
            })?;
            raw.push((sbits, o, v));
        }
        let settings_labels = labels
            .into_iter()
            .enumerate()
            .map(|(p, l)| <[String; 2]>::try_from(l).map_err(|_| TableError::SettingLabels(p)))
            .collect::<Result<Vec<_>, _>>()?;
        let m = 1usize << n;
        let mut probs = vec![0.0; m * m];
        let mut seen = vec![false; m * m];
        for (sbits, o, v) in raw {
            let s = sbits.iter().fold(0, |acc, b| (acc << 1) | b);
            if seen[s * m + o] {
                let shell = Self {
                    n,
                    settings_labels: settings_labels.clone(),
                    probs: Vec::new(),
                };
                return Err(TableError::DuplicateSettings(format!(
                    "{} {}",
                    shell.settings_key(s),
                    outcome_pattern(n, o)
                )));
            }
            seen[s * m + o] = true;
            probs[s * m + o] = v;
        }
        Self::new(n, settings_labels, probs)
    }
}
