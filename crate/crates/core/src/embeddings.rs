//! Utterance-level speaker embeddings and the candidate pool they live in.
//!
//! Two on-disk formats are supported:
//!
//! * `jsonl`: one object per line,
//!   `{"speaker": "...", "utterance": "...", "embedding": [..], "duration": 1.2, "tag": "female"}`
//!   where `duration` and `tag` are optional.
//! * `xvecbin`: magic `XVB1`, little-endian `u32` dimension, `u32` record count, then per
//!   record a `u16`-prefixed UTF-8 speaker id, a `u16`-prefixed UTF-8 utterance id and
//!   `dimension` little-endian `f32` values.
//!
//! Values are held as `f64` in memory. Pools read from `xvecbin` therefore write back
//! bit-identically.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::parallel;
use crate::sum::CompensatedSum;

pub const XVECBIN_MAGIC: &[u8; 4] = b"XVB1";

#[derive(Debug, thiserror::Error)]
pub enum PoolError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("empty pool")]
    Empty,
    #[error("record {record}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        record: usize,
        expected: usize,
        found: usize,
    },
    #[error("record {record}: duplicate key ({speaker}, {utterance})")]
    Duplicate {
        record: usize,
        speaker: String,
        utterance: String,
    },
    #[error("record {record}: malformed: {reason}")]
    Malformed { record: usize, reason: String },
    #[error("unknown speaker {0:?}")]
    UnknownSpeaker(String),
    #[error("unknown utterance {0:?}")]
    UnknownUtterance(String),
    #[error("utterance id {0:?} is shared by several speakers")]
    AmbiguousUtterance(String),
    #[error("embedding has non-finite entries")]
    NonFinite,
    #[error("embedding is empty")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("id longer than 65535 bytes: {0:?}")]
    IdTooLong(String),
}

/// A fixed-dimension speaker embedding with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self, PoolError> {
        if values.is_empty() {
            return Err(PoolError::ZeroDimension);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PoolError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Embedding) -> f64 {
        squared_distance(&self.0, &other.0).sqrt()
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = PoolError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub speaker_id: String,
    pub utterance_id: String,
    pub embedding: Embedding,
    pub duration_seconds: Option<f64>,
    /// Free-form metadata, e.g. a gender label used to group histograms.
    pub tag: Option<String>,
}

impl UtteranceRecord {
    pub fn new(speaker_id: impl Into<String>, utterance_id: impl Into<String>, embedding: Embedding) -> Self {
        Self {
            speaker_id: speaker_id.into(),
            utterance_id: utterance_id.into(),
            embedding,
            duration_seconds: None,
            tag: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolFormat {
    Jsonl,
    Xvecbin,
}

impl PoolFormat {
    /// Guesses the format from the leading bytes of a file.
    pub fn sniff(path: &Path) -> Result<Self, PoolError> {
        let mut head = [0u8; 4];
        let mut f = File::open(path)?;
        let n = f.read(&mut head)?;
        if n == 4 && &head == XVECBIN_MAGIC {
            Ok(Self::Xvecbin)
        } else {
            Ok(Self::Jsonl)
        }
    }
}

/// Per-speaker mean embedding and divergence, computed over all pool utterances.
#[derive(Debug, Clone)]
pub struct SpeakerStats {
    pub mean: Embedding,
    /// RMS Euclidean distance of the speaker's utterances from `mean`.
    pub divergence: f64,
}

/// Immutable collection of utterance records sharing one embedding dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingPool {
    dimension: usize,
    records: Vec<UtteranceRecord>,
    speakers: BTreeMap<String, Vec<usize>>,
}

impl EmbeddingPool {
    /// Validates and indexes `records`. Dimension is taken from the first record.
    pub fn from_records(records: Vec<UtteranceRecord>) -> Result<Self, PoolError> {
        let first = records.first().ok_or(PoolError::Empty)?;
        let dimension = first.embedding.dim();
        let mut seen: HashSet<(&str, &str)> = HashSet::with_capacity(records.len());
        let mut speakers: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            let record = i + 1;
            if r.speaker_id.is_empty() || r.utterance_id.is_empty() {
                return Err(PoolError::Malformed {
                    record,
                    reason: "empty speaker or utterance id".into(),
                });
            }
            if r.embedding.dim() != dimension {
                return Err(PoolError::DimensionMismatch {
                    record,
                    expected: dimension,
                    found: r.embedding.dim(),
                });
            }
            if let Some(d) = r.duration_seconds {
                if !(d.is_finite() && d >= 0.0) {
                    return Err(PoolError::Malformed {
                        record,
                        reason: format!("invalid duration {d}"),
                    });
                }
            }
            if !seen.insert((&r.speaker_id, &r.utterance_id)) {
                return Err(PoolError::Duplicate {
                    record,
                    speaker: r.speaker_id.clone(),
                    utterance: r.utterance_id.clone(),
                });
            }
            speakers.entry(r.speaker_id.clone()).or_default().push(i);
        }
        drop(seen);
        Ok(Self {
            dimension,
            records,
            speakers,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn records(&self) -> &[UtteranceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_speakers(&self) -> usize {
        self.speakers.len()
    }

    /// Speaker ids in ascending order.
    pub fn speaker_ids(&self) -> impl Iterator<Item = &str> {
        self.speakers.keys().map(String::as_str)
    }

    /// Utterance ids of one speaker, in pool order.
    pub fn utterances_of(&self, speaker_id: &str) -> Result<Vec<&str>, PoolError> {
        Ok(self
            .speaker_indices(speaker_id)?
            .iter()
            .map(|&i| self.records[i].utterance_id.as_str())
            .collect())
    }

    fn speaker_indices(&self, speaker_id: &str) -> Result<&[usize], PoolError> {
        self.speakers
            .get(speaker_id)
            .map(Vec::as_slice)
            .ok_or_else(|| PoolError::UnknownSpeaker(speaker_id.to_owned()))
    }

    /// Looks up a record by utterance id alone; fails if the id is shared.
    pub fn find_utterance(&self, utterance_id: &str) -> Result<&UtteranceRecord, PoolError> {
        let mut it = self.records.iter().filter(|r| r.utterance_id == utterance_id);
        let hit = it
            .next()
            .ok_or_else(|| PoolError::UnknownUtterance(utterance_id.to_owned()))?;
        if it.next().is_some() {
            return Err(PoolError::AmbiguousUtterance(utterance_id.to_owned()));
        }
        Ok(hit)
    }

    /// Componentwise mean of the speaker's utterance embeddings.
    pub fn speaker_mean(&self, speaker_id: &str) -> Result<Embedding, PoolError> {
        let idx = self.speaker_indices(speaker_id)?;
        Ok(mean_of(idx.iter().map(|&i| self.records[i].embedding.as_slice()), self.dimension))
    }

    /// `sqrt(mean_i ||x_i - u||^2)` over the speaker's utterances.
    pub fn speaker_divergence(&self, speaker_id: &str) -> Result<f64, PoolError> {
        Ok(self.stats_for(speaker_id)?.divergence)
    }

    fn stats_for(&self, speaker_id: &str) -> Result<SpeakerStats, PoolError> {
        let idx = self.speaker_indices(speaker_id)?;
        let mean = mean_of(idx.iter().map(|&i| self.records[i].embedding.as_slice()), self.dimension);
        let mut acc = CompensatedSum::default();
        for &i in idx {
            acc.add(squared_distance(self.records[i].embedding.as_slice(), mean.as_slice()));
        }
        let divergence = (acc.value().max(0.0) / idx.len() as f64).sqrt();
        Ok(SpeakerStats { mean, divergence })
    }

    /// Statistics for every speaker, keyed by speaker id.
    pub fn all_speaker_stats(&self) -> BTreeMap<String, SpeakerStats> {
        let ids: Vec<&String> = self.speakers.keys().collect();
        let stats = parallel::map_slice(&ids, |id| {
            self.stats_for(id).expect("speaker comes from the index")
        });
        ids.into_iter().cloned().zip(stats).collect()
    }

    /// Writes the pool in `xvecbin` layout. Duration and tag are not stored.
    pub fn write_xvecbin<W: Write>(&self, w: W) -> Result<(), PoolError> {
        let mut w = BufWriter::new(w);
        w.write_all(XVECBIN_MAGIC)?;
        w.write_all(&(self.dimension as u32).to_le_bytes())?;
        w.write_all(&(self.records.len() as u32).to_le_bytes())?;
        for r in &self.records {
            write_id(&mut w, &r.speaker_id)?;
            write_id(&mut w, &r.utterance_id)?;
            for &v in r.embedding.as_slice() {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, w: W) -> Result<(), PoolError> {
        let mut w = BufWriter::new(w);
        for r in &self.records {
            let line = JsonRecord {
                speaker: r.speaker_id.clone(),
                utterance: r.utterance_id.clone(),
                embedding: r.embedding.as_slice().to_vec(),
                duration: r.duration_seconds,
                tag: r.tag.clone(),
            };
            serde_json::to_writer(&mut w, &line).map_err(io::Error::from)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_of<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Embedding {
    let mut acc = vec![CompensatedSum::default(); dim];
    let mut n = 0usize;
    for row in rows {
        for (a, &v) in acc.iter_mut().zip(row) {
            a.add(v);
        }
        n += 1;
    }
    Embedding(acc.iter().map(|a| a.value() / n as f64).collect())
}

/// Mean embedding of the (target) utterances given.
pub fn target_embedding(records: &[UtteranceRecord]) -> Result<Embedding, PoolError> {
    let first = records.first().ok_or(PoolError::Empty)?;
    let dim = first.embedding.dim();
    if let Some(bad) = records.iter().position(|r| r.embedding.dim() != dim) {
        return Err(PoolError::DimensionMismatch {
            record: bad + 1,
            expected: dim,
            found: records[bad].embedding.dim(),
        });
    }
    Ok(mean_of(records.iter().map(|r| r.embedding.as_slice()), dim))
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    speaker: String,
    utterance: String,
    embedding: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
}

pub fn load_pool(path: &Path, format: PoolFormat) -> Result<EmbeddingPool, PoolError> {
    let file = BufReader::new(File::open(path)?);
    match format {
        PoolFormat::Jsonl => read_jsonl(file),
        PoolFormat::Xvecbin => read_xvecbin(file),
    }
}

/// Loads a pool, detecting the format from the file contents.
pub fn load_pool_auto(path: &Path) -> Result<EmbeddingPool, PoolError> {
    load_pool(path, PoolFormat::sniff(path)?)
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<EmbeddingPool, PoolError> {
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = records.len() + 1;
        let parsed: JsonRecord = serde_json::from_str(&line).map_err(|e| PoolError::Malformed {
            record,
            reason: e.to_string(),
        })?;
        let embedding = Embedding::new(parsed.embedding).map_err(|e| PoolError::Malformed {
            record,
            reason: e.to_string(),
        })?;
        records.push(UtteranceRecord {
            speaker_id: parsed.speaker,
            utterance_id: parsed.utterance,
            embedding,
            duration_seconds: parsed.duration,
            tag: parsed.tag,
        });
    }
    EmbeddingPool::from_records(records)
}

pub fn read_xvecbin<R: Read>(mut reader: R) -> Result<EmbeddingPool, PoolError> {
    let header_err = |reason: &str| PoolError::Malformed {
        record: 0,
        reason: reason.to_owned(),
    };
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| header_err("missing header"))?;
    if &magic != XVECBIN_MAGIC {
        return Err(header_err("bad magic bytes"));
    }
    let dim = read_u32(&mut reader).map_err(|_| header_err("truncated header"))? as usize;
    let count = read_u32(&mut reader).map_err(|_| header_err("truncated header"))? as usize;
    if count == 0 {
        return Err(PoolError::Empty);
    }
    if dim == 0 {
        return Err(header_err("zero dimension"));
    }
    let mut records = Vec::with_capacity(count.min(1 << 20));
    let mut buf = vec![0u8; dim * 4];
    for i in 0..count {
        let record = i + 1;
        let trunc = |_| PoolError::Malformed {
            record,
            reason: "truncated record".into(),
        };
        let speaker = read_id(&mut reader, record)?;
        let utterance = read_id(&mut reader, record)?;
        reader.read_exact(&mut buf).map_err(trunc)?;
        let values: Vec<f64> = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let embedding = Embedding::new(values).map_err(|e| PoolError::Malformed {
            record,
            reason: e.to_string(),
        })?;
        records.push(UtteranceRecord::new(speaker, utterance, embedding));
    }
    EmbeddingPool::from_records(records)
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_id<R: Read>(r: &mut R, record: usize) -> Result<String, PoolError> {
    let malformed = |reason: String| PoolError::Malformed { record, reason };
    let mut len = [0u8; 2];
    r.read_exact(&mut len)
        .map_err(|_| malformed("truncated record".into()))?;
    let mut bytes = vec![0u8; u16::from_le_bytes(len) as usize];
    r.read_exact(&mut bytes)
        .map_err(|_| malformed("truncated record".into()))?;
    String::from_utf8(bytes).map_err(|e| malformed(format!("invalid UTF-8 id: {e}")))
}

fn write_id<W: Write>(w: &mut W, id: &str) -> Result<(), PoolError> {
    let len = u16::try_from(id.len()).map_err(|_| PoolError::IdTooLong(id.to_owned()))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(id.as_bytes())?;
    Ok(())
}
