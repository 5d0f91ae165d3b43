//! Seeded substitution / insertion / deletion channel.
//!
//! The generator is SplitMix64 with its state initialised to the seed:
//!
//! ```text
//! x <- x + 0x9E3779B97F4A7C15
//! z <- (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
//! z <- (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)                      (all mod 2^64)
//! ```
//!
//! A uniform draw is `(out >> 11) * 2^-53`. In rates mode every input
//! position takes one draw `u`: `u < del` deletes it, `u < del + sub`
//! substitutes it, `u < del + sub + ins` inserts a nucleotide before it, and
//! anything else keeps it. A substitution takes a second draw `v` and picks
//! the `floor(3v)`-th of the other three nucleotides in A, C, G, T order; an
//! insertion picks the `floor(4v)`-th of A, C, G, T.

use std::io;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nucleotide::{Nucleotide, NucleotideSequence};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("rates must lie in [0,1] and sum to at most 1")]
    Rates,
    #[error("event position {position} outside a {len}-nt sequence")]
    OutOfBounds { position: usize, len: usize },
    #[error("event at {position} does not match the sequence")]
    Mismatch { position: usize },
    #[error("event log: {0}")]
    Csv(#[from] csv::Error),
    #[error("event log: {0}")]
    Io(#[from] io::Error),
    #[error("event log row {row}: {reason}")]
    BadRow { row: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Insertion,
    Deletion,
    Substitution,
}

/// An applied event. `position` indexes the clean sequence; an insertion
/// goes before that position (or at the end when it equals the length).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub position: usize,
    pub kind: EventKind,
    pub before: Option<Nucleotide>,
    pub after: Option<Nucleotide>,
}

/// A requested event for explicit mode. Without a replacement, a
/// substitution uses the next nucleotide in A, C, G, T order (cyclically)
/// and an insertion uses A.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplicitEvent {
    pub position: usize,
    pub kind: EventKind,
    pub replacement: Option<Nucleotide>,
}

impl ExplicitEvent {
    pub fn deletion(position: usize) -> Self {
        Self {
            position,
            kind: EventKind::Deletion,
            replacement: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Rates {
        sub_rate: f64,
        ins_rate: f64,
        del_rate: f64,
        seed: u64,
    },
    Explicit(Vec<ExplicitEvent>),
}

impl ChannelSpec {
    pub fn clean() -> Self {
        ChannelSpec::Explicit(Vec::new())
    }

    pub fn check(&self) -> Result<(), ChannelError> {
        if let ChannelSpec::Rates {
            sub_rate,
            ins_rate,
            del_rate,
            ..
        } = *self
        {
            let ok = |r: f64| (0.0..=1.0).contains(&r);
            if !(ok(sub_rate)
                && ok(ins_rate)
                && ok(del_rate)
                && sub_rate + ins_rate + del_rate <= 1.0)
            {
                return Err(ChannelError::Rates);
            }
        }
        Ok(())
    }
}

/// Uniform draw in [0, 1) with 53 random bits.
pub fn uniform(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Seed for oligo `index`: the first SplitMix64 output after seeding with
/// `seed ^ (index * 0x9E3779B97F4A7C15)`.
pub fn oligo_seed(seed: u64, index: u64) -> u64 {
    rng(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)).next_u64()
}

fn others(n: Nucleotide) -> [Nucleotide; 3] {
    let mut out = [n; 3];
    let mut k = 0;
    for m in Nucleotide::ALL {
        if m != n {
            out[k] = m;
            k += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    position: usize,
    kind: EventKind,
    before: String,
    after: String,
}

fn nt_field(n: Option<Nucleotide>) -> String {
    n.map(|n| n.as_char().to_string()).unwrap_or_default()
}

fn parse_field(s: &str, row: usize) -> Result<Option<Nucleotide>, ChannelError> {
    let mut chars = s.trim().chars();
    match (chars.next(), chars.next()) {
        (None, _) => Ok(None),
        (Some(c), None) => Nucleotide::from_char(c)
            .map(Some)
            .ok_or_else(|| ChannelError::BadRow {
                row,
                reason: format!("{c:?} is not a nucleotide"),
            }),
        _ => Err(ChannelError::BadRow {
            row,
            reason: format!("{s:?} is not a single nucleotide"),
        }),
    }
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// Re-applies the log to the clean sequence.
    pub fn replay(&self, clean: &[Nucleotide]) -> Result<NucleotideSequence, ChannelError> {
        let mut out = Vec::with_capacity(clean.len() + self.count(EventKind::Insertion));
        let mut next = 0usize;
        for e in &self.events {
            if e.position > clean.len() || e.position < next {
                return Err(ChannelError::OutOfBounds {
                    position: e.position,
                    len: clean.len(),
                });
            }
            out.extend_from_slice(&clean[next..e.position]);
            next = e.position;
            match e.kind {
                EventKind::Insertion => {
                    out.push(e.after.ok_or(ChannelError::Mismatch {
                        position: e.position,
                    })?);
                }
                EventKind::Deletion | EventKind::Substitution => {
                    if clean.get(e.position).copied() != e.before {
                        return Err(ChannelError::Mismatch {
                            position: e.position,
                        });
                    }
                    if let Some(a) = e.after {
                        out.push(a);
                    }
                    next += 1;
                }
            }
        }
        out.extend_from_slice(&clean[next..]);
        Ok(out.into())
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), ChannelError> {
        let mut wr = csv::Writer::from_writer(w);
        for e in &self.events {
            wr.serialize(Row {
                position: e.position,
                kind: e.kind,
                before: nt_field(e.before),
                after: nt_field(e.after),
            })?;
        }
        if self.events.is_empty() {
            wr.write_record(["position", "kind", "before", "after"])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Self, ChannelError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut events = Vec::new();
        for (i, row) in rd.deserialize::<Row>().enumerate() {
            let row_no = i + 2;
            let row = row?;
            events.push(Event {
                position: row.position,
                kind: row.kind,
                before: parse_field(&row.before, row_no)?,
                after: parse_field(&row.after, row_no)?,
            });
        }
        Ok(Self { events })
    }
}

#[derive(Serialize)]
struct TaggedRow<'a> {
    record: &'a str,
    position: usize,
    kind: EventKind,
    before: String,
    after: String,
}

/// Logs of several records in one CSV, with a leading `record` column.
pub fn write_logs_csv<W: io::Write>(logs: &[(&str, &EventLog)], w: W) -> Result<(), ChannelError> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(["record", "position", "kind", "before", "after"])?;
    for (id, log) in logs {
        for e in &log.events {
            wr.serialize(TaggedRow {
                record: id,
                position: e.position,
                kind: e.kind,
                before: nt_field(e.before),
                after: nt_field(e.after),
            })?;
        }
    }
    wr.flush()?;
    Ok(())
}

fn corrupt_rates(
    seq: &[Nucleotide],
    sub: f64,
    ins: f64,
    del: f64,
    seed: u64,
) -> (NucleotideSequence, EventLog) {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(seq.len());
    let mut log = EventLog::default();
    for (i, &n) in seq.iter().enumerate() {
        let u = uniform(&mut rng);
        if u < del {
            log.events.push(Event {
                position: i,
                kind: EventKind::Deletion,
                before: Some(n),
                after: None,
            });
        } else if u < del + sub {
            let m = others(n)[(uniform(&mut rng) * 3.0) as usize];
            out.push(m);
            log.events.push(Event {
                position: i,
                kind: EventKind::Substitution,
                before: Some(n),
                after: Some(m),
            });
        } else if u < del + sub + ins {
            let m = Nucleotide::ALL[(uniform(&mut rng) * 4.0) as usize];
            out.push(m);
            out.push(n);
            log.events.push(Event {
                position: i,
                kind: EventKind::Insertion,
                before: None,
                after: Some(m),
            });
        } else {
            out.push(n);
        }
    }
    (out.into(), log)
}

fn explicit_log(seq: &[Nucleotide], events: &[ExplicitEvent]) -> Result<EventLog, ChannelError> {
    let mut sorted = events.to_vec();
    // insertions at a position go before the event replacing that position
    sorted.sort_by_key(|e| (e.position, e.kind != EventKind::Insertion));
    let mut log = EventLog::default();
    let mut consumed: Option<usize> = None;
    for e in sorted {
        let limit = if e.kind == EventKind::Insertion {
            seq.len() + 1
        } else {
            seq.len()
        };
        if e.position >= limit || (e.kind != EventKind::Insertion && consumed == Some(e.position)) {
            return Err(ChannelError::OutOfBounds {
                position: e.position,
                len: seq.len(),
            });
        }
        let (before, after) = match e.kind {
            EventKind::Insertion => (None, Some(e.replacement.unwrap_or(Nucleotide::A))),
            EventKind::Deletion => (Some(seq[e.position]), None),
            EventKind::Substitution => {
                let b = seq[e.position];
                let a = e.replacement.unwrap_or(Nucleotide::from_rank(b.rank() + 1));
                if a == b {
                    return Err(ChannelError::Mismatch {
                        position: e.position,
                    });
                }
                (Some(b), Some(a))
            }
        };
        if e.kind != EventKind::Insertion {
            consumed = Some(e.position);
        }
        log.events.push(Event {
            position: e.position,
            kind: e.kind,
            before,
            after,
        });
    }
    Ok(log)
}

/// Applies `spec` to `seq`. Deterministic in `(seq, spec)`.
pub fn corrupt(
    seq: &[Nucleotide],
    spec: &ChannelSpec,
) -> Result<(NucleotideSequence, EventLog), ChannelError> {
    spec.check()?;
    match spec {
        &ChannelSpec::Rates {
            sub_rate,
            ins_rate,
            del_rate,
            seed,
        } => Ok(corrupt_rates(seq, sub_rate, ins_rate, del_rate, seed)),
        ChannelSpec::Explicit(events) => {
            let log = explicit_log(seq, events)?;
            Ok((log.replay(seq)?, log))
        }
    }
}

/// Deletes the nucleotide at `floor(u * len)` for the first draw `u` of
/// the seeded generator. Returns the position deleted.
pub fn single_random_deletion(seq: &[Nucleotide], seed: u64) -> (NucleotideSequence, usize) {
    assert!(!seq.is_empty(), "nothing to delete");
    let pos = random_position(seq.len(), seed);
    let mut out = seq.to_vec();
    out.remove(pos);
    (out.into(), pos)
}

/// The position [`single_random_deletion`] would pick in a `len`-nt stream.
pub fn random_position(len: usize, seed: u64) -> usize {
    ((uniform(&mut rng(seed)) * len as f64) as usize).min(len - 1)
}
