//! Dataset files: line-delimited JSON with the manifest as the first line
//! and one flow record per following line. Payloads are base64 so the
//! format stays binary-safe and human-inspectable.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{
    DatasetError, DatasetManifest, FlowRecord, Label, LabeledDataset, DATASET_FORMAT_VERSION,
};

pub(crate) mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        STANDARD
            .decode(text.as_bytes())
            .map_err(serde::de::Error::custom)
    }
}

pub fn write_dataset(dataset: &LabeledDataset, path: &Path) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset_to(dataset, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset_to<W: Write>(dataset: &LabeledDataset, w: &mut W) -> Result<(), DatasetError> {
    let manifest_line =
        serde_json::to_string(&dataset.manifest).map_err(|e| DatasetError::DatasetFormat {
            line: 1,
            msg: e.to_string(),
        })?;
    writeln!(w, "{manifest_line}")?;
    for (idx, flow) in dataset.flows.iter().enumerate() {
        let line = serde_json::to_string(flow).map_err(|e| DatasetError::DatasetFormat {
            line: idx + 2,
            msg: e.to_string(),
        })?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset, DatasetError> {
    read_dataset_from(&mut BufReader::new(File::open(path)?))
}

pub fn read_dataset_from<R: Read>(r: &mut R) -> Result<LabeledDataset, DatasetError> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();

    let manifest_line = lines
        .next()
        .ok_or_else(|| DatasetError::DatasetFormat {
            line: 1,
            msg: "missing manifest line".to_string(),
        })?
        .map_err(DatasetError::Io)?;
    let manifest: DatasetManifest =
        serde_json::from_str(&manifest_line).map_err(|e| DatasetError::DatasetFormat {
            line: 1,
            msg: e.to_string(),
        })?;
    if manifest.version != DATASET_FORMAT_VERSION {
        return Err(DatasetError::DatasetFormat {
            line: 1,
            msg: format!(
                "unsupported version {} (expected {DATASET_FORMAT_VERSION})",
                manifest.version
            ),
        });
    }

    let mut flows: Vec<FlowRecord> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line.map_err(DatasetError::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let flow: FlowRecord =
            serde_json::from_str(&line).map_err(|e| DatasetError::DatasetFormat {
                line: lineno,
                msg: e.to_string(),
            })?;
        flows.push(flow);
    }

    let benign = flows.iter().filter(|f| f.label == Label::Benign).count();
    let malicious = flows.len() - benign;
    if benign != manifest.benign_count || malicious != manifest.malicious_count {
        return Err(DatasetError::DatasetFormat {
            line: 1,
            msg: format!(
                "manifest counts ({}/{}) disagree with flows ({benign}/{malicious})",
                manifest.benign_count, manifest.malicious_count
            ),
        });
    }

    let benign_hosts = flows
        .iter()
        .filter(|f| f.label == Label::Benign)
        .flat_map(|f| [f.src_host, f.dst_host])
        .collect();
    let malicious_host_pool = flows
        .iter()
        .filter(|f| f.label == Label::Malicious)
        .map(|f| f.src_host)
        .collect();

    Ok(LabeledDataset {
        flows,
        benign_hosts,
        malicious_host_pool,
        manifest,
    })
}
