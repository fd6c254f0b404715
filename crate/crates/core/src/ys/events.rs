//! Three-photon detection statistics, postselection on one click per party,
//! and the correlator table used for the Svetlichny test.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use super::circuit::{build_circuit, permanent, ModeUnitary, PhaseSettings, YsError, SOURCE_MODES};
use crate::inequality::{default_settings_labels, DistributionTable};

pub const PHOTONS: usize = 3;
const PARTY_NAMES: [char; 3] = ['A', 'B', 'C'];

/// Photon counts `(left, right)` per party; six detectors, three photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetectionEvent {
    counts: [(u8, u8); 3],
}

impl DetectionEvent {
    pub fn new(counts: [(u8, u8); 3]) -> Result<Self, YsError> {
        let total: usize = counts
            .iter()
            .map(|&(l, r)| usize::from(l) + usize::from(r))
            .sum();
        if total != PHOTONS {
            return Err(YsError::PhotonCount(total));
        }
        Ok(Self { counts })
    }

    /// One click per party; `right[p]` selects the right detector.
    pub fn single_clicks(right: [bool; 3]) -> Self {
        let c = |r: bool| if r { (0, 1) } else { (1, 0) };
        Self {
            counts: [c(right[0]), c(right[1]), c(right[2])],
        }
    }

    pub fn counts(&self) -> [(u8, u8); 3] {
        self.counts
    }

    /// Occupation of the six output modes in [`super::circuit`] order.
    pub fn mode_counts(&self) -> [u8; 6] {
        let [a, b, c] = self.counts;
        [a.0, a.1, b.0, b.1, c.0, c.1]
    }

    /// All 56 ways to place three photons in six detectors, in ascending
    /// order of the count tuple.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(56);
        let mut m = [0u8; 6];
        fn rec(k: usize, left: u8, m: &mut [u8; 6], out: &mut Vec<DetectionEvent>) {
            if k == 5 {
                m[5] = left;
                out.push(DetectionEvent {
                    counts: [(m[0], m[1]), (m[2], m[3]), (m[4], m[5])],
                });
                return;
            }
            for c in 0..=left {
                m[k] = c;
                rec(k + 1, left - c, m, out);
            }
        }
        rec(0, PHOTONS as u8, &mut m, &mut out);
        out.sort();
        out
    }

    pub fn class(&self) -> EventClass {
        let totals = self.counts.map(|(l, r)| l + r);
        if totals == [1, 1, 1] {
            let rights = self.counts.iter().filter(|c| c.1 == 1).count();
            return if rights % 2 == 0 {
                EventClass::E
            } else {
                EventClass::O
            };
        }
        let has_empty = totals.contains(&0);
        let single_detector_double = self
            .counts
            .iter()
            .any(|&(l, r)| (l, r) == (2, 0) || (l, r) == (0, 2));
        if has_empty && single_detector_double {
            EventClass::D
        } else {
            EventClass::X
        }
    }

    /// Outcome ±1 per party for single-click events: +1 for a right click.
    pub fn outcomes(&self) -> Option<[i8; 3]> {
        let mut out = [0i8; 3];
        for (o, &(l, r)) in out.iter_mut().zip(&self.counts) {
            *o = match (l, r) {
                (0, 1) => 1,
                (1, 0) => -1,
                _ => return None,
            };
        }
        Some(out)
    }
}

impl fmt::Display for DetectionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, (l, r))) in PARTY_NAMES.iter().zip(self.counts).enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{name}:l^{l} r^{r}")?;
        }
        Ok(())
    }
}

impl FromStr for DetectionEvent {
    type Err = YsError;

    /// Parses `A:l^i r^j;B:l^i r^j;C:l^i r^j`.
    fn from_str(s: &str) -> Result<Self, YsError> {
        let bad = || YsError::BadPattern(s.to_string());
        let parts: Vec<&str> = s.trim().split(';').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut counts = [(0u8, 0u8); 3];
        for ((part, name), slot) in parts.iter().zip(PARTY_NAMES).zip(counts.iter_mut()) {
            let body = part
                .trim()
                .strip_prefix(name)
                .and_then(|r| r.strip_prefix(':'))
                .ok_or_else(bad)?;
            let mut it = body.split_whitespace();
            let num = |tok: Option<&str>, prefix: &str| -> Result<u8, YsError> {
                tok.and_then(|t| t.strip_prefix(prefix))
                    .and_then(|v| v.parse::<u8>().ok())
                    .filter(|&v| usize::from(v) <= PHOTONS)
                    .ok_or_else(bad)
            };
            let l = num(it.next(), "l^")?;
            let r = num(it.next(), "r^")?;
            if it.next().is_some() {
                return Err(bad());
            }
            *slot = (l, r);
        }
        Self::new(counts)
    }
}

impl Serialize for DetectionEvent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// E: one click per party, even number of right clicks. O: odd. D: one party
/// dark and another with both photons in the same detector. X: the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EventClass {
    E,
    O,
    D,
    X,
}

fn factorial(k: u8) -> f64 {
    (1..=u32::from(k)).product::<u32>() as f64
}

/// `|perm(U[outputs, inputs])|^2 / prod n_k!` for one event under a fixed
/// network.
pub fn event_probability_with(u: &ModeUnitary, e: &DetectionEvent) -> f64 {
    let occ = e.mode_counts();
    let rows: Vec<usize> = occ
        .iter()
        .enumerate()
        .flat_map(|(mode, &k)| std::iter::repeat_n(mode, usize::from(k)))
        .collect();
    let m = u.matrix();
    let sub = DMatrix::from_fn(PHOTONS, PHOTONS, |i, j| m[(rows[i], SOURCE_MODES[j])]);
    let norm: f64 = occ.iter().map(|&k| factorial(k)).product();
    (permanent(&sub).norm_sqr() / norm).clamp(0.0, 1.0)
}

pub fn event_probability(p: &PhaseSettings, e: &DetectionEvent) -> f64 {
    event_probability_with(&build_circuit(p), e)
}

/// Probabilities of all 56 detection patterns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub phases: PhaseSettings,
    pub events: BTreeMap<DetectionEvent, f64>,
}

pub fn full_distribution(p: &PhaseSettings) -> Distribution {
    let u = build_circuit(p);
    let events = DetectionEvent::all()
        .into_iter()
        .map(|e| (e, event_probability_with(&u, &e)))
        .collect();
    Distribution { phases: *p, events }
}

impl Distribution {
    pub fn total(&self) -> f64 {
        self.events.values().sum()
    }

    pub fn class_mass(&self, class: EventClass) -> f64 {
        self.events
            .iter()
            .filter(|(e, _)| e.class() == class)
            .map(|(_, p)| p)
            .sum()
    }

    /// `event_pattern,probability` rows in canonical event order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["event_pattern", "probability"])
            .expect("in-memory write");
        for (e, p) in &self.events {
            w.write_record([e.to_string(), format!("{p:e}")])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Row<'a> {
            event_pattern: &'a DetectionEvent,
            class: EventClass,
            probability: f64,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            phases: PhaseSettings,
            events: Vec<Row<'a>>,
        }
        let doc = Doc {
            phases: self.phases,
            events: self
                .events
                .iter()
                .map(|(e, &p)| Row {
                    event_pattern: e,
                    class: e.class(),
                    probability: p,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("distribution serializes infallibly")
    }
}

/// Conditional distribution of the three outcomes given one click per party.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Postselected {
    /// Probability of the single-click events before renormalization.
    pub success_probability: f64,
    /// Indexed like a [`DistributionTable`] row: party A most significant,
    /// bit 0 for outcome +1.
    pub probs: [f64; 8],
}

impl Postselected {
    pub fn correlator(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(o, p)| if o.count_ones() % 2 == 0 { *p } else { -*p })
            .sum()
    }
}

fn outcome_index(o: [i8; 3]) -> usize {
    o.iter().fold(0, |acc, &v| (acc << 1) | usize::from(v < 0))
}

/// Keeps the E and O events (exactly one click per party) and renormalizes.
pub fn postselect_single_click(dist: &Distribution) -> Result<Postselected, YsError> {
    let mut probs = [0.0; 8];
    for (e, p) in &dist.events {
        if let Some(o) = e.outcomes() {
            probs[outcome_index(o)] += p;
        }
    }
    let mass: f64 = probs.iter().sum();
    if mass <= 0.0 {
        return Err(YsError::ZeroPostselectionMass);
    }
    for p in &mut probs {
        *p /= mass;
    }
    Ok(Postselected {
        success_probability: mass,
        probs,
    })
}

/// `<abc>` of the postselected statistics; equals `-cos(phi_a + phi_b +
/// phi_c)` under the conventions of [`super::circuit`].
pub fn correlator(p: &PhaseSettings) -> Result<f64, YsError> {
    Ok(postselect_single_click(&full_distribution(p))?.correlator())
}

/// Phases for each party's two settings: `[party][setting]`.
pub type AngleSet = [[f64; 2]; 3];

/// A: 0, -pi/2; B: pi/4, -pi/4; C: 0, -pi/2.
pub const OPTIMAL_ANGLES: AngleSet = [
    [0.0, -FRAC_PI_2],
    [FRAC_PI_4, -FRAC_PI_4],
    [0.0, -FRAC_PI_2],
];

/// Postselected table over the eight setting combinations of `angles`,
/// labelled x1/x2, y1/y2, z1/z2.
pub fn angle_table(angles: &AngleSet) -> Result<DistributionTable, YsError> {
    let mut rows = Vec::with_capacity(8);
    for s in 0..8usize {
        let pick = |party: usize| angles[party][(s >> (2 - party)) & 1];
        let p = PhaseSettings::new(pick(0), pick(1), pick(2))?;
        rows.push(
            postselect_single_click(&full_distribution(&p))?
                .probs
                .to_vec(),
        );
    }
    let mut rows = rows.into_iter();
    Ok(
        DistributionTable::from_fn(3, default_settings_labels(3), |_| {
            rows.next().expect("eight rows")
        })
        .expect("postselected rows are normalized"),
    )
}
