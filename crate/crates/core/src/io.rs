//! Embedding interchange formats.
//!
//! `EMB1` is a little-endian binary layout:
//!
//! ```text
//! 0   magic  b"EMB1"
//! 4   u32    version (1)
//! 8   u64    n
//! 16  u64    d
//! 24  u64    n_classes
//! 32  f32    n*d values, row-major
//!     u32    n labels
//!     u32    json_len
//!     u8     json_len bytes of UTF-8 JSON {"label_names":[..],"ids":[..],"source":".."}
//! ```
//!
//! The CSV form is `label,x0,..,x{d-1}` with one point per line. Labels are
//! either all integers or arbitrary strings interned in first-appearance order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::LabeledEmbeddings;
use crate::error::{Error, Result};

pub const EMB1_MAGIC: &[u8; 4] = b"EMB1";
pub const EMB1_VERSION: u32 = 1;
/// Size of the fixed-width header preceding the vector block.
pub const EMB1_HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Csv,
}

impl Format {
    /// `.csv` selects CSV, anything else the binary format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Metadata {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    label_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    ids: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    source: Option<String>,
}

pub fn load_embeddings(path: impl AsRef<Path>, format: Format) -> Result<LabeledEmbeddings> {
    let bytes = fs::read(path)?;
    match format {
        Format::Binary => decode_emb1(&bytes),
        Format::Csv => {
            let text = std::str::from_utf8(&bytes)
                .map_err(|e| Error::MalformedFile(format!("CSV is not UTF-8: {e}")))?;
            parse_csv(text)
        }
    }
}

pub fn save_embeddings(data: &LabeledEmbeddings, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let bytes = match format {
        Format::Binary => encode_emb1(data),
        Format::Csv => render_csv(data).into_bytes(),
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_emb1(data: &LabeledEmbeddings) -> Vec<u8> {
    let meta = Metadata {
        label_names: data.label_names().map(<[String]>::to_vec),
        ids: data.ids().map(<[String]>::to_vec),
        source: data.source().map(str::to_owned),
    };
    let json = serde_json::to_vec(&meta).expect("metadata is always serializable");
    let (n, d) = (data.len(), data.dim());
    let mut out = Vec::with_capacity(EMB1_HEADER_LEN + 4 * n * d + 4 * n + 4 + json.len());
    out.extend_from_slice(EMB1_MAGIC);
    out.extend_from_slice(&EMB1_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&(data.n_classes() as u64).to_le_bytes());
    for v in data.vectors() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for l in data.labels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out
}

/// Little-endian cursor over a byte slice that reports truncation as
/// [`Error::MalformedFile`].
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::MalformedFile(format!("truncated while reading {what}")))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    /// Reads a u64 count and checks that `count * elem_size` bytes remain.
    pub(crate) fn count(&mut self, elem_size: usize, what: &str) -> Result<usize> {
        let raw = self.u64(what)?;
        let count = usize::try_from(raw)
            .ok()
            .filter(|c| c.checked_mul(elem_size).is_some_and(|b| b <= self.remaining()))
            .ok_or_else(|| Error::MalformedFile(format!("{what} = {raw} exceeds file size")))?;
        Ok(count)
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub fn decode_emb1(bytes: &[u8]) -> Result<LabeledEmbeddings> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic")? != EMB1_MAGIC {
        return Err(Error::MalformedFile("bad magic, expected EMB1".into()));
    }
    let version = r.u32("version")?;
    if version != EMB1_VERSION {
        return Err(Error::MalformedFile(format!("unsupported EMB1 version {version}")));
    }
    let n = r.count(4, "n")?;
    let d = r.count(0, "d")?;
    let n_classes = r.count(0, "class count")?;
    let values = n
        .checked_mul(d)
        .filter(|&v| v.checked_mul(4).is_some_and(|b| b <= r.remaining()))
        .ok_or_else(|| Error::MalformedFile(format!("{n} x {d} vectors exceed file size")))?;
    let vectors: Vec<f32> = r
        .take(values * 4, "vectors")?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let labels: Vec<u32> = r
        .take(n * 4, "labels")?
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let json_len = r.u32("metadata length")? as usize;
    let json = r.take(json_len, "metadata")?;
    if r.remaining() != 0 {
        return Err(Error::MalformedFile(format!("{} trailing bytes", r.remaining())));
    }
    let meta: Metadata = serde_json::from_slice(json)
        .map_err(|e| Error::MalformedFile(format!("metadata JSON: {e}")))?;
    if d == 0 {
        return Err(Error::MalformedFile("zero embedding width".into()));
    }
    let mut data = LabeledEmbeddings::new(vectors, d, labels, n_classes)?;
    if let Some(names) = meta.label_names {
        data = data.with_label_names(names)?;
    }
    if let Some(ids) = meta.ids {
        data = data.with_ids(ids)?;
    }
    if let Some(source) = meta.source {
        data = data.with_source(source);
    }
    Ok(data)
}

pub fn parse_csv(text: &str) -> Result<LabeledEmbeddings> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::MalformedFile(format!("CSV header: {e}")))?
        .clone();
    if header.len() < 2 || &header[0] != "label" {
        return Err(Error::MalformedFile("CSV header must be label,x0,x1,...".into()));
    }
    for (j, name) in header.iter().skip(1).enumerate() {
        if name != format!("x{j}") {
            return Err(Error::MalformedFile(format!("CSV column {} should be x{j}, found {name:?}", j + 1)));
        }
    }
    let d = header.len() - 1;
    let mut raw_labels = Vec::new();
    let mut vectors = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::MalformedFile(format!("CSV row {row}: {e}")))?;
        if record.len() != d + 1 {
            return Err(Error::MalformedFile(format!(
                "CSV row {row} has {} fields, expected {}",
                record.len(),
                d + 1
            )));
        }
        raw_labels.push(record[0].to_owned());
        for (col, field) in record.iter().skip(1).enumerate() {
            let v: f32 = field
                .trim()
                .parse()
                .map_err(|_| Error::MalformedFile(format!("CSV row {row}, x{col}: {field:?} is not a number")))?;
            vectors.push(v);
        }
    }

    let numeric: Option<Vec<u32>> = raw_labels.iter().map(|l| l.trim().parse().ok()).collect();
    match numeric {
        Some(labels) => {
            let n_classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
            LabeledEmbeddings::new(vectors, d, labels, n_classes)
        }
        None => {
            let mut names: Vec<String> = Vec::new();
            let mut index: HashMap<&str, u32> = HashMap::new();
            let mut labels = Vec::with_capacity(raw_labels.len());
            for l in &raw_labels {
                let id = *index.entry(l.as_str()).or_insert_with(|| {
                    names.push(l.clone());
                    (names.len() - 1) as u32
                });
                labels.push(id);
            }
            LabeledEmbeddings::new(vectors, d, labels, names.len())?.with_label_names(names)
        }
    }
}

/// Names are written only when re-interning them reproduces the same class ids.
fn names_round_trip(data: &LabeledEmbeddings) -> Option<&[String]> {
    let names = data.label_names()?;
    if names.iter().all(|n| n.trim().parse::<u32>().is_ok()) {
        return None;
    }
    let mut next = 0u32;
    for &l in data.labels() {
        if l == next {
            next += 1;
        } else if l > next {
            return None;
        }
    }
    let mut seen = std::collections::HashSet::new();
    names.iter().all(|n| seen.insert(n.as_str())).then_some(names)
}

pub fn render_csv(data: &LabeledEmbeddings) -> String {
    let names = names_round_trip(data);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["label".to_owned()];
    header.extend((0..data.dim()).map(|j| format!("x{j}")));
    writer.write_record(&header).expect("in-memory write");
    for i in 0..data.len() {
        let label = data.labels()[i];
        let mut record = vec![match names {
            Some(names) => names[label as usize].clone(),
            None => label.to_string(),
        }];
        // `Display` for f32 prints the shortest string that parses back bit-exactly.
        record.extend(data.row(i).iter().map(|v| v.to_string()));
        writer.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}
