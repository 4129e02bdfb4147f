//! Codebooks, neighbor tables, representations, retained codings, subsets and
//! traces.

use std::collections::BTreeSet;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use wordprune::domain::ImageCoding;
use wordprune::selection::TraceRow;
use wordprune::{ClassId, Codebook, CodingMatrix, CodingScheme, Metric, NeighborTable, RepresentationMatrix, Word};

use crate::error::{read_file, CliError, CliResult};

fn f64s_to_base64(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn base64_to_f64s(text: &str) -> CliResult<Vec<f64>> {
    let bytes = STANDARD.decode(text).map_err(|e| CliError::data(format!("bad base64 payload: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::data("payload length is not a multiple of 8 bytes"));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

fn read_json<D: serde::de::DeserializeOwned>(path: &Path) -> CliResult<D> {
    serde_json::from_slice(&read_file(path)?).map_err(|e| CliError::from(e).at(path))
}

/// `codebook.json`: header plus base64 little-endian `f64` centroids.
#[derive(Debug, Serialize, Deserialize)]
pub struct CodebookFile {
    pub k: usize,
    pub d: usize,
    pub metric: Metric,
    pub seed: Option<u64>,
    pub encoding: String,
    pub centroids: String,
}

const F64_LE_BASE64: &str = "base64-f64le";

pub fn codebook_file(codebook: &Codebook<f64>, seed: Option<u64>) -> CodebookFile {
    CodebookFile {
        k: codebook.k(),
        d: codebook.dim(),
        metric: codebook.metric(),
        seed,
        encoding: F64_LE_BASE64.into(),
        centroids: f64s_to_base64(codebook.centroids()),
    }
}

pub fn read_codebook(path: &Path) -> CliResult<Codebook<f64>> {
    let file: CodebookFile = read_json(path)?;
    let parse = || -> CliResult<Codebook<f64>> {
        if file.encoding != F64_LE_BASE64 {
            return Err(CliError::data(format!("unsupported centroid encoding {:?}", file.encoding)));
        }
        let data = base64_to_f64s(&file.centroids)?;
        if data.len() != file.k * file.d {
            return Err(CliError::data(format!("expected {} x {} centroid values, found {}", file.k, file.d, data.len())));
        }
        Ok(Codebook::from_flat(file.d, data, file.metric)?)
    };
    parse().map_err(|e| e.at(path))
}

/// `neighbors.json`: `lists[w]` holds 0-based words, nearest first.
#[derive(Debug, Serialize, Deserialize)]
pub struct NeighborFile {
    pub k: usize,
    pub m: usize,
    pub lists: Vec<Vec<usize>>,
}

pub fn neighbor_file(table: &NeighborTable) -> NeighborFile {
    NeighborFile {
        k: table.k(),
        m: table.m(),
        lists: table.lists().iter().map(|l| l.iter().map(|w| w.slot()).collect()).collect(),
    }
}

pub fn read_neighbors(path: &Path) -> CliResult<NeighborTable> {
    let file: NeighborFile = read_json(path)?;
    if file.lists.len() != file.k {
        return Err(CliError::data(format!("{} lists for K = {}", file.lists.len(), file.k)).at(path));
    }
    let lists = file.lists.iter().map(|l| l.iter().map(|&s| Word::from_slot(s)).collect()).collect();
    NeighborTable::new(file.m, lists).map_err(|e| CliError::from(e).at(path))
}

/// Representation CSV: `id,label,w<slot>,...` with one row per image.
pub fn representation_csv(matrix: &RepresentationMatrix<f64>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend(matrix.active_words().iter().map(|w| format!("w{}", w.slot())));
    w.write_record(&header)?;
    for (i, row) in matrix.rows().enumerate() {
        let mut record = vec![matrix.ids()[i].clone(), matrix.classes()[matrix.labels()[i].index()].clone()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.into_inner().map_err(|e| CliError::data(e.to_string()))
}

/// Reads a representation CSV. The class list is the sorted distinct labels.
pub fn read_representation(path: &Path) -> CliResult<RepresentationMatrix<f64>> {
    parse_representation(&read_file(path)?).map_err(|e| e.at(path))
}

fn parse_representation(bytes: &[u8]) -> CliResult<RepresentationMatrix<f64>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(CliError::data("header must be `id,label,w<slot>,...`"));
    }
    let words = header
        .iter()
        .skip(2)
        .map(|h| {
            h.strip_prefix('w')
                .and_then(|s| s.parse::<usize>().ok())
                .map(Word::from_slot)
                .ok_or_else(|| CliError::data(format!("bad word column {h:?}")))
        })
        .collect::<CliResult<Vec<Word>>>()?;
    let (mut ids, mut names, mut data) = (Vec::new(), Vec::new(), Vec::new());
    for (line, record) in r.records().enumerate() {
        let record = record?;
        ids.push(record[0].to_string());
        names.push(record[1].to_string());
        for v in record.iter().skip(2) {
            data.push(v.parse::<f64>().map_err(|_| CliError::data(format!("row {}: bad value {v:?}", line + 1)))?);
        }
    }
    let classes: Vec<String> = names.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = names.iter().map(|n| ClassId(classes.binary_search(n).expect("collected") as u32)).collect();
    Ok(RepresentationMatrix::new(words, data, labels, classes, ids)?)
}

/// `coding.json`: retained per-descriptor coefficients.
#[derive(Debug, Serialize, Deserialize)]
pub struct CodingFile {
    #[serde(flatten)]
    pub scheme: CodingScheme,
    pub metric: Metric,
    pub k: usize,
    pub words: Vec<Word>,
    pub classes: Vec<String>,
    pub images: Vec<CodedImage>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CodedImage {
    pub id: String,
    pub label: String,
    pub rows: usize,
    pub data: String,
}

pub fn coding_file(coding: &CodingMatrix<f64>) -> CodingFile {
    CodingFile {
        scheme: coding.scheme(),
        metric: coding.metric(),
        k: coding.k(),
        words: coding.active_words().to_vec(),
        classes: coding.classes().to_vec(),
        images: coding
            .images()
            .iter()
            .enumerate()
            .map(|(i, img)| CodedImage {
                id: coding.ids()[i].clone(),
                label: coding.classes()[coding.labels()[i].index()].clone(),
                rows: img.rows,
                data: f64s_to_base64(&img.data),
            })
            .collect(),
    }
}

pub fn read_coding(path: &Path) -> CliResult<CodingMatrix<f64>> {
    let file: CodingFile = read_json(path)?;
    let parse = || -> CliResult<CodingMatrix<f64>> {
        let mut images = Vec::with_capacity(file.images.len());
        let mut labels = Vec::with_capacity(file.images.len());
        let mut ids = Vec::with_capacity(file.images.len());
        for img in &file.images {
            let c = file
                .classes
                .iter()
                .position(|c| *c == img.label)
                .ok_or_else(|| CliError::data(format!("image {}: undeclared label {:?}", img.id, img.label)))?;
            labels.push(ClassId(c as u32));
            ids.push(img.id.clone());
            images.push(ImageCoding { rows: img.rows, data: base64_to_f64s(&img.data)? });
        }
        Ok(CodingMatrix::new(file.scheme, file.metric, file.k, file.words.clone(), images, labels, file.classes.clone(), ids)?)
    };
    parse().map_err(|e| e.at(path))
}

/// `subset.json`: the selected words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetFile {
    pub k: usize,
    pub words: Vec<Word>,
    pub energy: f64,
    pub final_words: Vec<Word>,
}

pub fn read_subset(path: &Path) -> CliResult<SubsetFile> {
    read_json(path)
}

/// Trace CSV with one row per iteration.
pub fn trace_csv(trace: &[TraceRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in trace {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| CliError::data(e.to_string()))
}
