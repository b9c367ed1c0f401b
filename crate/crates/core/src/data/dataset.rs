use std::fmt;

use crate::data::AttributeSchema;
use crate::error::{Error, Result};
use crate::num::fmt9;

/// Where a record's input comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Inline feature vector.
    Features(Vec<f64>),
    /// Four fixed-point latent words for the sprite generator.
    Latent([u32; 4]),
    /// Opaque external reference; never decoded here.
    Path(String),
}

impl Payload {
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(rest) = text.strip_prefix("feat:") {
            if rest.is_empty() {
                return Ok(Payload::Features(Vec::new()));
            }
            let values = rest
                .split(';')
                .map(|v| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::Parse(format!("bad feature value {v:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Payload::Features(values))
        } else if let Some(hex) = text.strip_prefix("latent:") {
            if hex.len() != 32 || !hex.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
                return Err(Error::Parse(format!("bad latent encoding {hex:?}")));
            }
            let mut words = [0u32; 4];
            for (i, w) in words.iter_mut().enumerate() {
                *w = u32::from_str_radix(&hex[i * 8..i * 8 + 8], 16)
                    .map_err(|e| Error::Parse(format!("bad latent encoding: {e}")))?;
            }
            Ok(Payload::Latent(words))
        } else if let Some(path) = text.strip_prefix("path:") {
            Ok(Payload::Path(path.to_string()))
        } else {
            Err(Error::Parse(format!("unknown payload kind in {text:?}")))
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Features(v) => {
                f.write_str("feat:")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    f.write_str(&fmt9(*x))?;
                }
                Ok(())
            }
            Payload::Latent(words) => {
                f.write_str("latent:")?;
                words.iter().try_for_each(|w| write!(f, "{w:08x}"))
            }
            Payload::Path(p) => write!(f, "path:{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleRecord {
    pub sample_id: u64,
    pub attr: Vec<u32>,
    pub payload: Payload,
}

/// Validated records sorted by `sample_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedDataset {
    schema: AttributeSchema,
    records: Vec<ExampleRecord>,
}

impl AttributedDataset {
    pub fn new(schema: AttributeSchema, mut records: Vec<ExampleRecord>) -> Result<Self> {
        schema.validate()?;
        let k = schema.num_attributes();
        for r in &records {
            if r.attr.len() != k {
                return Err(Error::Parse(format!(
                    "sample {} has {} attributes, schema has {k}",
                    r.sample_id,
                    r.attr.len()
                )));
            }
            for (a, &v) in r.attr.iter().enumerate() {
                if v as usize >= schema.cardinality(a) {
                    return Err(Error::Range {
                        id: r.sample_id,
                        attr: a,
                        value: v,
                        size: schema.cardinality(a),
                    });
                }
            }
        }
        records.sort_by_key(|r| r.sample_id);
        if let Some(w) = records.windows(2).find(|w| w[0].sample_id == w[1].sample_id) {
            return Err(Error::DuplicateId(w[0].sample_id));
        }
        Ok(AttributedDataset { schema, records })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn records(&self) -> &[ExampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn position(&self, id: u64) -> Result<usize> {
        self.records
            .binary_search_by_key(&id, |r| r.sample_id)
            .map_err(|_| Error::UnknownId(id))
    }

    pub fn get(&self, id: u64) -> Result<&ExampleRecord> {
        self.position(id).map(|i| &self.records[i])
    }

    pub fn label_of(&self, record: &ExampleRecord) -> u32 {
        record.attr[self.schema.label_index]
    }

    pub fn nuisance_of(&self, record: &ExampleRecord) -> u32 {
        record.attr[self.schema.nuisance_index]
    }

    /// Same records, viewed with different label/nuisance roles.
    pub fn with_roles(&self, label_index: usize, nuisance_index: usize) -> Result<Self> {
        Ok(AttributedDataset {
            schema: self.schema.with_roles(label_index, nuisance_index)?,
            records: self.records.clone(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec!["sample_id".to_string()];
        header.extend((0..self.schema.num_attributes()).map(|k| format!("attr_{k}")));
        header.push("payload".into());
        w.write_record(&header).expect("in-memory write");
        for r in &self.records {
            let mut row = vec![r.sample_id.to_string()];
            row.extend(r.attr.iter().map(|v| v.to_string()));
            row.push(r.payload.to_string());
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Parses a dataset table whose header is `sample_id,attr_0,...,attr_{K-1},payload`.
pub fn load_dataset(schema: &AttributeSchema, text: &str) -> Result<AttributedDataset> {
    schema.validate()?;
    let k = schema.num_attributes();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse(format!("dataset header: {e}")))?
        .clone();
    let mut expected = vec!["sample_id".to_string()];
    expected.extend((0..k).map(|i| format!("attr_{i}")));
    expected.push("payload".into());
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse(format!(
            "dataset header must be {:?}, got {:?}",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("dataset row {}: {e}", line + 1)))?;
        if row.len() != k + 2 {
            return Err(Error::Parse(format!("dataset row {}: wrong field count", line + 1)));
        }
        let sample_id = row[0]
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("dataset row {}: sample_id: {e}", line + 1)))?;
        let attr = (1..=k)
            .map(|i| {
                row[i]
                    .parse::<u32>()
                    .map_err(|e| Error::Parse(format!("dataset row {}: attr_{}: {e}", line + 1, i - 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let payload = Payload::parse(&row[k + 1])?;
        records.push(ExampleRecord {
            sample_id,
            attr,
            payload,
        });
    }
    AttributedDataset::new(schema.clone(), records)
}
