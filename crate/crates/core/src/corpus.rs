//! Raw character streams.
//!
//! A [`Document`] is a sequence of Unicode codepoints with line breaks
//! removed. Circle markers (`○`) and space placeholders for lost glyphs stay
//! in the stream; every offset used elsewhere in the crate is a codepoint
//! index into [`Document::chars`].

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Layout marker inserted where the source switched columns or lines.
pub const MARKER: char = '○';

/// Introduces a style name.
pub const ZI: char = '字';

pub fn is_line_break(c: char) -> bool {
    matches!(
        c,
        '\n' | '\r' | '\u{0B}' | '\u{0C}' | '\u{85}' | '\u{2028}' | '\u{2029}'
    )
}

/// True for characters that never take part in a lexicon match.
pub fn is_blocking(c: char) -> bool {
    c == MARKER || c.is_whitespace()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    chars: Vec<char>,
}

impl Document {
    /// Builds a document from text, stripping line breaks.
    pub fn new(id: impl Into<String>, text: &str) -> Self {
        Document {
            id: id.into(),
            chars: text.chars().filter(|&c| !is_line_break(c)).collect(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn text(&self) -> String {
        self.chars.iter().collect()
    }

    /// Substring over `[start, end)`, clamped to the document.
    pub fn slice(&self, start: usize, end: usize) -> String {
        let end = end.min(self.len());
        let start = start.min(end);
        self.chars[start..end].iter().collect()
    }

    /// Whether position `i` holds a circle marker. Spaces are placeholders,
    /// not markers.
    pub fn is_marker(&self, i: usize) -> Result<bool> {
        self.chars.get(i).map(|&c| c == MARKER).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.len(),
        })
    }

    /// First position at or after `i` that is not a circle marker.
    pub fn skip_markers(&self, mut i: usize) -> usize {
        while i < self.len() && self.chars[i] == MARKER {
            i += 1;
        }
        i
    }

    /// Number of non-marker characters in `[start, end)`.
    pub fn count_non_markers(&self, start: usize, end: usize) -> usize {
        let end = end.min(self.len());
        if start >= end {
            return 0;
        }
        self.chars[start..end].iter().filter(|&&c| c != MARKER).count()
    }
}

/// Ordered documents with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    source_manifest: BTreeMap<String, PathBuf>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_documents(documents: Vec<Document>) -> Result<Self> {
        let mut corpus = Corpus::new();
        for doc in documents {
            corpus.push(doc, None)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, doc: Document, source: Option<PathBuf>) -> Result<()> {
        if self.get(doc.id()).is_some() {
            return Err(Error::DuplicateDocument(doc.id().to_string()));
        }
        if let Some(path) = source {
            self.source_manifest.insert(doc.id().to_string(), path);
        }
        self.documents.push(doc);
        Ok(())
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id() == id)
    }

    pub fn source(&self, id: &str) -> Option<&Path> {
        self.source_manifest.get(id).map(PathBuf::as_path)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn total_chars(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    /// Writes one `<id>.txt` per document into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for doc in &self.documents {
            let path = dir.join(format!("{}.txt", doc.id()));
            fs::write(&path, doc.text()).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Loads a corpus from a single file or from every regular file in a
/// directory (sorted by file name). Document ids are file stems.
pub fn load_corpus(root: impl AsRef<Path>) -> Result<Corpus> {
    let root = root.as_ref();
    let meta = fs::metadata(root).map_err(|e| Error::io(root, e))?;
    let mut files = Vec::new();
    if meta.is_dir() {
        for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
            let entry = entry.map_err(|e| Error::io(root, e))?;
            let path = entry.path();
            let is_hidden = path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with('.'));
            if path.is_file() && !is_hidden {
                files.push(path);
            }
        }
        files.sort();
    } else {
        files.push(root.to_path_buf());
    }

    let mut corpus = Corpus::new();
    let mut seen = HashSet::new();
    for path in files {
        let doc = load_document(&path)?;
        if !seen.insert(doc.id().to_string()) {
            return Err(Error::DuplicateDocument(doc.id().to_string()));
        }
        corpus.push(doc, Some(path))?;
    }
    Ok(corpus)
}

pub fn load_document(path: &Path) -> Result<Document> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Document::new(id, &text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marker_position_in_fig4_excerpt() {
        let doc = Document::new("d", "陳瑜○字仲庸");
        assert_eq!(doc.len(), 6);
        assert!(doc.is_marker(2).unwrap());
        assert!(!doc.is_marker(0).unwrap());
    }

    #[test]
    fn space_is_not_a_marker() {
        let doc = Document::new("d", "陳 瑜");
        assert!(!doc.is_marker(1).unwrap());
        assert!(matches!(
            doc.is_marker(3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn line_breaks_are_stripped_not_replaced() {
        let doc = Document::new("d", "陳瑜\n字\r\n仲庸");
        assert_eq!(doc.text(), "陳瑜字仲庸");
    }

    #[test]
    fn loads_directory_and_single_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "陳瑜○字仲庸").unwrap();
        fs::write(dir.path().join("b.txt"), "").unwrap();
        let corpus = load_corpus(dir.path()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.get("a").unwrap().len(), 6);
        assert_eq!(corpus.get("b").unwrap().len(), 0);

        let single = load_corpus(dir.path().join("a.txt")).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        let mut bytes = "陳瑜".as_bytes().to_vec();
        bytes.push(0xff);
        fs::write(&path, bytes).unwrap();
        match load_corpus(&path) {
            Err(Error::InvalidUtf8 { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_path_names_the_path() {
        let err = load_corpus("/nonexistent/gzm-corpus").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/gzm-corpus"));
    }
}
