//! Descriptor corpora.
//!
//! Text: a directory holding `index.txt` (one image file name per line,
//! relative to the directory; blank lines and `#` comments ignored) and one
//! file per image. An image file starts with the header `d N label id`,
//! followed by `N` rows of `d` whitespace-separated decimals.
//!
//! Binary: a single file starting with `PBW1`, a little-endian `u32` header
//! length, a JSON header and then every descriptor as little-endian `f32`, image
//! after image, row-major.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wordprune::domain::RawImage;
use wordprune::DescriptorCorpus;

use crate::error::{read_file, CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"PBW1";
pub const INDEX: &str = "index.txt";

/// Reads a text corpus directory or a binary container.
pub fn read_corpus(path: &Path) -> CliResult<DescriptorCorpus<f64>> {
    if path.is_dir() {
        return read_text(path);
    }
    let bytes = read_file(path)?;
    if bytes.starts_with(MAGIC) {
        read_binary(&bytes).map_err(|e| e.at(path))
    } else {
        Err(CliError::data(format!("{}: neither a corpus directory nor a PBW1 container", path.display())))
    }
}

fn read_text(dir: &Path) -> CliResult<DescriptorCorpus<f64>> {
    let index_path = dir.join(INDEX);
    let index = String::from_utf8(read_file(&index_path)?).map_err(|e| CliError::data(e.to_string()).at(&index_path))?;
    let mut dim = None;
    let mut raw = Vec::new();
    for name in index.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let path = dir.join(name);
        let text = String::from_utf8(read_file(&path)?).map_err(|e| CliError::data(e.to_string()).at(&path))?;
        let (d, image) = parse_image(&text).map_err(|e| e.at(&path))?;
        match dim {
            None => dim = Some(d),
            Some(d0) if d0 != d => {
                return Err(CliError::data(format!("dimension {d} differs from {d0} in earlier images")).at(&path));
            }
            _ => {}
        }
        raw.push(image);
    }
    let Some(dim) = dim else {
        return Err(CliError::data("index lists no images").at(&index_path));
    };
    Ok(DescriptorCorpus::from_raw(dim, raw)?)
}

fn parse_image(text: &str) -> CliResult<(usize, RawImage<f64>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(CliError::data("empty image file"));
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [d, n, label, id] = fields[..] else {
        return Err(CliError::data(format!("header must be `d N label id`, got {header:?}")));
    };
    let d: usize = d.parse().map_err(|_| CliError::data(format!("bad dimension {d:?}")))?;
    let n: usize = n.parse().map_err(|_| CliError::data(format!("bad descriptor count {n:?}")))?;
    let mut descriptors = Vec::with_capacity(n);
    for (line_no, line) in lines {
        let row = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| CliError::data(format!("line {}: bad value {v:?}", line_no + 1))))
            .collect::<CliResult<Vec<f64>>>()?;
        if row.len() != d {
            return Err(CliError::data(format!("line {}: {} values, expected {d}", line_no + 1, row.len())));
        }
        descriptors.push(row);
    }
    if descriptors.len() != n {
        return Err(CliError::data(format!("header announces {n} descriptors, found {}", descriptors.len())));
    }
    Ok((d, RawImage { id: id.to_string(), label: label.to_string(), descriptors }))
}

/// Writes a text corpus into `dir`, one `imgNNNNNN.txt` file per image.
pub fn write_text(dir: &Path, corpus: &DescriptorCorpus<f64>) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let mut index = String::new();
    for (i, img) in corpus.images().iter().enumerate() {
        let name = format!("img{i:06}.txt");
        let mut text = format!("{} {} {} {}\n", corpus.dim(), img.len(), corpus.classes()[img.label().index()], img.id());
        for x in img.descriptors() {
            let row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        fs::write(dir.join(&name), text)?;
        index.push_str(&name);
        index.push('\n');
    }
    fs::write(dir.join(INDEX), index)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct BinaryHeader {
    dim: usize,
    classes: Vec<String>,
    images: Vec<BinaryImage>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BinaryImage {
    id: String,
    label: String,
    n: usize,
}

fn read_binary(bytes: &[u8]) -> CliResult<DescriptorCorpus<f64>> {
    let truncated = || CliError::data("truncated PBW1 container");
    let len_bytes: [u8; 4] = bytes.get(4..8).ok_or_else(truncated)?.try_into().expect("4 bytes");
    let header_end = 8 + u32::from_le_bytes(len_bytes) as usize;
    let header: BinaryHeader = serde_json::from_slice(bytes.get(8..header_end).ok_or_else(truncated)?)?;
    let mut body = &bytes[header_end..];
    let mut raw = Vec::with_capacity(header.images.len());
    for img in header.images {
        let count = img.n.checked_mul(header.dim).ok_or_else(truncated)?;
        let (chunk, rest) = body.split_at_checked(count * 4).ok_or_else(truncated)?;
        body = rest;
        let values: Vec<f64> =
            chunk.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64).collect();
        let descriptors = values.chunks_exact(header.dim.max(1)).map(<[f64]>::to_vec).collect();
        raw.push(RawImage { id: img.id, label: img.label, descriptors });
    }
    if !body.is_empty() {
        return Err(CliError::data(format!("{} trailing bytes after the last image", body.len())));
    }
    Ok(DescriptorCorpus::validate(header.dim, header.classes, raw)?)
}

/// Encodes `corpus` as a PBW1 container; values are rounded to `f32`.
pub fn to_binary(corpus: &DescriptorCorpus<f64>) -> Vec<u8> {
    let header = BinaryHeader {
        dim: corpus.dim(),
        classes: corpus.classes().to_vec(),
        images: corpus
            .images()
            .iter()
            .map(|img| BinaryImage {
                id: img.id().to_string(),
                label: corpus.classes()[img.label().index()].clone(),
                n: img.len(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len() + corpus.total_descriptors() * corpus.dim() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for img in corpus.images() {
        for v in img.data() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> DescriptorCorpus<f64> {
        let raw = vec![
            RawImage { id: "a".into(), label: "cat".into(), descriptors: vec![vec![0.5, 1.25], vec![-2.0, 3.0]] },
            RawImage { id: "b".into(), label: "dog".into(), descriptors: vec![vec![0.1, 0.2]] },
        ];
        DescriptorCorpus::from_raw(2, raw).unwrap()
    }

    #[test]
    fn text_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        write_text(dir.path(), &corpus()).unwrap();
        assert_eq!(read_corpus(dir.path()).unwrap(), corpus());
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pbw");
        fs::write(&path, to_binary(&corpus())).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back.classes(), corpus().classes());
        assert_eq!(back.images()[0].data(), &[0.5, 1.25, -2.0, 3.0]);
        assert_eq!(back.images()[1].data(), &[0.1f32 as f64, 0.2f32 as f64]);
    }

    #[test]
    fn header_and_rows_are_checked() {
        assert!(parse_image("2 1 cat\n0 1\n").is_err());
        assert!(parse_image("2 2 cat a\n0 1\n").is_err());
        assert!(parse_image("2 1 cat a\n0 1 2\n").is_err());
        assert!(parse_image("2 1 cat a\n0 x\n").is_err());
        let (d, img) = parse_image("2 1 cat a\n\n0 1\n").unwrap();
        assert_eq!((d, img.descriptors), (2, vec![vec![0.0, 1.0]]));
    }

    #[test]
    fn truncated_binary_fails() {
        let bytes = to_binary(&corpus());
        assert!(read_binary(&bytes[..bytes.len() - 1]).is_err());
        assert!(read_binary(&bytes[..6]).is_err());
    }
}
