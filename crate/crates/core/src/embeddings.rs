//! Word-embedding vocabulary with unit-normalized vectors, loaded from
//! word2vec-format files (text or classic binary). Since rows are normalized
//! at load, cosine similarity is a plain dot product.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Word2vecText,
    Word2vecBinary,
}

#[derive(Debug, Clone)]
pub struct EmbeddingTable<S> {
    words: Vec<String>,
    index: HashMap<String, usize>,
    /// Row-major, one unit-normalized row per word.
    vectors: Vec<S>,
    dim: usize,
    duplicates_skipped: usize,
}

impl<S: Scalar> EmbeddingTable<S> {
    /// Build from raw rows. Vectors are unit-normalized; duplicate words keep
    /// their first occurrence (the skip count is retained); zero vectors are
    /// rejected.
    pub fn from_rows(dim: usize, rows: Vec<(String, Vec<S>)>) -> Result<Self> {
        let mut table = EmbeddingTable {
            words: Vec::with_capacity(rows.len()),
            index: HashMap::with_capacity(rows.len()),
            vectors: Vec::with_capacity(rows.len() * dim),
            dim,
            duplicates_skipped: 0,
        };
        for (word, mut vector) in rows {
            if vector.len() != dim {
                return Err(Error::Validation(format!(
                    "vector for {:?} has {} components, expected {}",
                    word,
                    vector.len(),
                    dim
                )));
            }
            if table.index.contains_key(&word) {
                table.duplicates_skipped += 1;
                continue;
            }
            let norm = vector
                .iter()
                .fold(S::zero(), |acc, &v| acc + v * v)
                .sqrt();
            if norm == S::zero() {
                return Err(Error::Validation(format!("zero vector for {:?}", word)));
            }
            for v in &mut vector {
                *v = *v / norm;
            }
            table.index.insert(word.clone(), table.words.len());
            table.words.push(word);
            table.vectors.extend(vector);
        }
        if table.duplicates_skipped > 0 {
            log::warn!(
                "embedding load skipped {} duplicate words",
                table.duplicates_skipped
            );
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<Self> {
        let path = path.as_ref();
        match format {
            EmbeddingFormat::Word2vecText => load_text(path),
            EmbeddingFormat::Word2vecBinary => load_binary(path),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn duplicates_skipped(&self) -> usize {
        self.duplicates_skipped
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    fn row(&self, i: usize) -> &[S] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// The unit-normalized vector for a word, if in the vocabulary.
    pub fn vector(&self, word: &str) -> Option<&[S]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    /// Vocabulary lookup used for snippet tokens: exact spelling first, then
    /// lowercased (sentence-initial capitalization should not lose the word).
    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index
            .get(token)
            .or_else(|| self.index.get(token.to_lowercase().as_str()))
            .copied()
    }

    /// Cosine similarity between two vocabulary words.
    pub fn cosine(&self, a: &str, b: &str) -> Option<S> {
        let (ia, ib) = (self.lookup(a)?, self.lookup(b)?);
        Some(dot(self.row(ia), self.row(ib)))
    }

    /// Up to `k` nearest vocabulary words to `token` by cosine similarity,
    /// excluding the token itself, filtered by `cosine >= floor`, sorted by
    /// similarity descending with lexicographic tie-breaks. Unknown tokens
    /// yield an empty list.
    pub fn neighbors(&self, token: &str, k: usize, floor: S) -> Vec<(String, S)> {
        let Some(origin) = self.lookup(token) else {
            return Vec::new();
        };
        let origin_row = self.row(origin);
        let mut candidates: Vec<(String, S)> = (0..self.words.len())
            .filter(|&i| i != origin)
            .filter(|&i| self.words[i] != token)
            .filter_map(|i| {
                let cos = dot(origin_row, self.row(i));
                (cos >= floor).then(|| (self.words[i].clone(), cos))
            })
            .collect();
        candidates.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        candidates.truncate(k);
        candidates
    }

    /// Write the (normalized) table in the classic word2vec binary layout:
    /// an ASCII `count dim` header line, then per word the word bytes, a
    /// space, and `dim` little-endian f32 values followed by a newline.
    pub fn write_word2vec_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(file);
        let io_err = |e: std::io::Error| Error::io(path, e);
        write!(writer, "{} {}\n", self.words.len(), self.dim).map_err(io_err)?;
        for (i, word) in self.words.iter().enumerate() {
            writer.write_all(word.as_bytes()).map_err(io_err)?;
            writer.write_all(b" ").map_err(io_err)?;
            for &v in self.row(i) {
                let v32 = v.to_f32().expect("scalar fits f32");
                writer.write_all(&v32.to_le_bytes()).map_err(io_err)?;
            }
            writer.write_all(b"\n").map_err(io_err)?;
        }
        writer.flush().map_err(io_err)
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

fn parse_header(line: &str, path: &Path) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let parse = |field: Option<&str>| -> Option<usize> { field.and_then(|s| s.parse().ok()) };
    match (parse(parts.next()), parse(parts.next()), parts.next()) {
        (Some(count), Some(dim), None) if dim > 0 => Ok((count, dim)),
        _ => Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("expected \"count dim\" header, got {:?}", line),
        }),
    }
}

fn load_text<S: Scalar>(path: &Path) -> Result<EmbeddingTable<S>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = raw.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        line: 1,
        message: "empty embedding file".into(),
    })?;
    let (count, dim) = parse_header(header, path)?;

    let mut rows = Vec::with_capacity(count);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-empty line").to_string();
        let values: Vec<S> = parts
            .map(|p| {
                p.parse::<f64>()
                    .ok()
                    .and_then(S::from_f64)
                    .ok_or_else(|| Error::Parse {
                        path: path.display().to_string(),
                        line: i + 1,
                        message: format!("bad float {:?}", p),
                    })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: format!("row has {} values, header says {}", values.len(), dim),
            });
        }
        rows.push((word, values));
    }
    if rows.len() != count {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: rows.len() + 1,
            message: format!("header promises {} rows, found {}", count, rows.len()),
        });
    }
    EmbeddingTable::from_rows(dim, rows)
}

fn load_binary<S: Scalar>(path: &Path) -> Result<EmbeddingTable<S>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let parse_err = |offset: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line: offset,
        message,
    };

    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| parse_err(0, "missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|e| parse_err(0, e.to_string()))?;
    let (count, dim) = parse_header(header, path)?;

    let mut pos = header_end + 1;
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        while pos < bytes.len() && (bytes[pos] == b'\n' || bytes[pos] == b'\r') {
            pos += 1;
        }
        let word_end = bytes[pos..]
            .iter()
            .position(|&b| b == b' ')
            .map(|offset| pos + offset)
            .ok_or_else(|| parse_err(pos, "unterminated word".into()))?;
        let word = std::str::from_utf8(&bytes[pos..word_end])
            .map_err(|e| parse_err(pos, e.to_string()))?
            .to_string();
        pos = word_end + 1;
        let vec_end = pos + dim * 4;
        if vec_end > bytes.len() {
            return Err(parse_err(pos, format!("truncated vector for {:?}", word)));
        }
        let values: Vec<S> = bytes[pos..vec_end]
            .chunks_exact(4)
            .map(|chunk| {
                let v = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
                S::from_f32(v).ok_or_else(|| parse_err(pos, format!("bad float for {:?}", word)))
            })
            .collect::<Result<_>>()?;
        pos = vec_end;
        rows.push((word, values));
    }
    EmbeddingTable::from_rows(dim, rows)
}
