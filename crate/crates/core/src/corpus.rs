//! Persistent document collection with cached sentence segmentation and a
//! BM25 index.
//!
//! On disk a store is a single directory:
//!
//! ```text
//! store/
//!   documents.jsonl   # one CorpusDocument per line, append-only
//!   index.json        # versioned magic header line + serialized index
//! ```
//!
//! The index is rebuilt explicitly ([`CorpusStore::build_index`]), never
//! automatically. Stores opened without an index can ingest and serve
//! documents but not search.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::bm25::{Bm25Index, Bm25Params};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sentence::{segment_sentences, Sentence};

const INDEX_MAGIC: &str = "qa-augment-bm25-index v1";
const DOCUMENTS_FILE: &str = "documents.jsonl";
const INDEX_FILE: &str = "index.json";

/// A retrievable document. The indexed body is `title + " " + abstract`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

impl CorpusDocument {
    pub fn new(
        doc_id: impl Into<String>,
        title: impl Into<String>,
        abstract_text: impl Into<String>,
    ) -> Self {
        CorpusDocument {
            doc_id: doc_id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
        }
    }

    pub fn body(&self) -> String {
        format!("{} {}", self.title, self.abstract_text)
    }
}

pub struct CorpusStore {
    dir: Option<PathBuf>,
    docs: Vec<CorpusDocument>,
    by_id: HashMap<String, usize>,
    index: Option<Bm25Index>,
    sentences: RwLock<HashMap<String, Arc<Vec<Sentence>>>>,
}

impl CorpusStore {
    /// An ephemeral store with no persistence, for tests and one-shot runs.
    pub fn in_memory() -> Self {
        CorpusStore {
            dir: None,
            docs: Vec::new(),
            by_id: HashMap::new(),
            index: None,
            sentences: RwLock::new(HashMap::new()),
        }
    }

    /// Create a new store directory (or open it if it already holds one).
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Self::open(dir)
    }

    /// Open an existing store directory, loading documents and, when
    /// present, the index.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(Error::NotFound {
                what: "corpus store directory",
                key: dir.display().to_string(),
            });
        }
        let mut store = CorpusStore {
            dir: Some(dir.clone()),
            docs: Vec::new(),
            by_id: HashMap::new(),
            index: None,
            sentences: RwLock::new(HashMap::new()),
        };
        let docs_path = dir.join(DOCUMENTS_FILE);
        if docs_path.exists() {
            let file = File::open(&docs_path).map_err(|e| Error::io(&docs_path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(&docs_path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let doc: CorpusDocument =
                    serde_json::from_str(&line).map_err(|e| Error::Parse {
                        path: docs_path.display().to_string(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                store.insert(doc)?;
            }
        }
        let index_path = dir.join(INDEX_FILE);
        if index_path.exists() {
            store.index = Some(load_index(&index_path)?);
        }
        Ok(store)
    }

    fn insert(&mut self, doc: CorpusDocument) -> Result<()> {
        if let Some(&existing) = self.by_id.get(&doc.doc_id) {
            return if self.docs[existing] == doc {
                Ok(()) // identical re-ingest is a no-op
            } else {
                Err(Error::Duplicate {
                    what: "doc_id",
                    key: doc.doc_id,
                })
            };
        }
        self.by_id.insert(doc.doc_id.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    /// Ingest documents. Identical duplicates are skipped (idempotent);
    /// conflicting duplicates are an error naming the id. Returns the number
    /// of newly added documents.
    pub fn ingest<I>(&mut self, records: I) -> Result<usize>
    where
        I: IntoIterator<Item = CorpusDocument>,
    {
        let before = self.docs.len();
        let mut writer = match &self.dir {
            Some(dir) => {
                let path = dir.join(DOCUMENTS_FILE);
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&path)
                    .map_err(|e| Error::io(&path, e))?;
                Some((BufWriter::new(file), path))
            }
            None => None,
        };
        for doc in records {
            let existed = self.by_id.contains_key(&doc.doc_id);
            let line = if writer.is_some() && !existed {
                Some(serde_json::to_string(&doc).map_err(|e| Error::Validation(e.to_string()))?)
            } else {
                None
            };
            self.insert(doc)?;
            if let (Some((w, path)), Some(line)) = (writer.as_mut(), line) {
                w.write_all(line.as_bytes())
                    .and_then(|_| w.write_all(b"\n"))
                    .map_err(|e| Error::io(&*path, e))?;
            }
        }
        if let Some((mut w, path)) = writer {
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        Ok(self.docs.len() - before)
    }

    /// Build (or rebuild) the BM25 index over all ingested documents and,
    /// for persistent stores, write it to disk.
    pub fn build_index(&mut self) -> Result<()> {
        let bodies: Vec<(String, String)> = self
            .docs
            .iter()
            .map(|d| (d.doc_id.clone(), d.body()))
            .collect();
        let index = Bm25Index::build(bodies.iter().map(|(id, body)| (id.as_str(), body.as_str())));
        if let Some(dir) = &self.dir {
            let path = dir.join(INDEX_FILE);
            save_index(&index, &path)?;
        }
        self.index = Some(index);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn documents(&self) -> &[CorpusDocument] {
        &self.docs
    }

    pub fn has_index(&self) -> bool {
        self.index.is_some()
    }

    pub fn get_document(&self, doc_id: &str) -> Result<&CorpusDocument> {
        self.by_id
            .get(doc_id)
            .map(|&i| &self.docs[i])
            .ok_or_else(|| Error::NotFound {
                what: "document",
                key: doc_id.to_string(),
            })
    }

    /// Sentences of the document body, segmented lazily and cached.
    pub fn get_sentences(&self, doc_id: &str) -> Result<Arc<Vec<Sentence>>> {
        if let Some(cached) = self.sentences.read().expect("lock").get(doc_id) {
            return Ok(Arc::clone(cached));
        }
        let doc = self.get_document(doc_id)?;
        let sentences = Arc::new(segment_sentences(&doc.body()));
        self.sentences
            .write()
            .expect("lock")
            .insert(doc_id.to_string(), Arc::clone(&sentences));
        Ok(sentences)
    }

    /// BM25 search with default parameters (k1=1.2, b=0.75).
    pub fn search(&self, query: &str, top_k: usize) -> Result<Vec<(String, f64)>> {
        self.search_with_params(query, top_k, &Bm25Params::default())
    }

    pub fn search_with_params<S: Scalar>(
        &self,
        query: &str,
        top_k: usize,
        params: &Bm25Params<S>,
    ) -> Result<Vec<(String, S)>> {
        let index = self.index.as_ref().ok_or_else(|| {
            Error::Validation("corpus index not built; run build_index first".into())
        })?;
        Ok(index.search(query, top_k, params))
    }
}

fn save_index(index: &Bm25Index, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    writeln!(writer, "{}", INDEX_MAGIC).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer(&mut writer, index).map_err(|e| Error::Validation(e.to_string()))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

fn load_index(path: &Path) -> Result<Bm25Index> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let Some((header, body)) = raw.split_once('\n') else {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "missing index header".into(),
        });
    };
    if header.trim() != INDEX_MAGIC {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("unsupported index version {:?}", header.trim()),
        });
    }
    serde_json::from_str(body).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: 2,
        message: e.to_string(),
    })
}
