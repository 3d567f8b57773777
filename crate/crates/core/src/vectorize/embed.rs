use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::VectorizeError;

#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbedding {
    pub vector: Vec<f64>,
    /// The token had no stored vector and `vector` is all zeros.
    pub missing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentEmbedding {
    pub vector: Vec<f64>,
    /// The document had no tokens; `vector` is all zeros.
    pub empty: bool,
    /// Number of tokens without a stored vector.
    pub misses: usize,
}

pub trait TokenEmbedder {
    fn dim(&self) -> usize;
    fn embed_token(&self, word: &str) -> TokenEmbedding;
}

/// Arithmetic mean of the token embeddings.
pub fn embed_document<E, T>(embedder: &E, tokens: &[T]) -> DocumentEmbedding
where
    E: TokenEmbedder + ?Sized,
    T: AsRef<str>,
{
    let mut sum = vec![0.0; embedder.dim()];
    let mut misses = 0;
    for t in tokens {
        let e = embedder.embed_token(t.as_ref());
        misses += usize::from(e.missing);
        for (s, v) in sum.iter_mut().zip(&e.vector) {
            *s += v;
        }
    }
    if !tokens.is_empty() {
        let n = tokens.len() as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    DocumentEmbedding {
        vector: sum,
        empty: tokens.is_empty(),
        misses,
    }
}

/// Static token → vector table, as read from a text vector file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    dim: usize,
    tokens: Vec<String>,
    data: Vec<f64>,
}

impl TryFrom<TableRepr> for EmbeddingTable {
    type Error = VectorizeError;

    fn try_from(r: TableRepr) -> Result<Self, Self::Error> {
        if r.data.len() != r.tokens.len() * r.dim {
            return Err(VectorizeError::DimensionMismatch {
                expected: r.tokens.len() * r.dim,
                found: r.data.len(),
            });
        }
        let mut t = EmbeddingTable::new(r.dim);
        for (tok, v) in r.tokens.into_iter().zip(r.data.chunks(r.dim.max(1))) {
            t.insert(tok, v.to_vec())?;
        }
        Ok(t)
    }
}

impl From<EmbeddingTable> for TableRepr {
    fn from(t: EmbeddingTable) -> Self {
        TableRepr {
            dim: t.dim,
            tokens: t.tokens,
            data: t.data,
        }
    }
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            tokens: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, token: String, vector: Vec<f64>) -> Result<(), VectorizeError> {
        if vector.len() != self.dim {
            return Err(VectorizeError::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if self.index.contains_key(&token) {
            return Err(VectorizeError::DuplicateToken { token, line: None });
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend(vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        let &i = self.index.get(token)?;
        Some(&self.data[i * self.dim..(i + 1) * self.dim])
    }
}

impl TokenEmbedder for EmbeddingTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_token(&self, word: &str) -> TokenEmbedding {
        match self.get(word) {
            Some(v) => TokenEmbedding {
                vector: v.to_vec(),
                missing: false,
            },
            None => TokenEmbedding {
                vector: vec![0.0; self.dim],
                missing: true,
            },
        }
    }
}

/// Reads the text vector format: a `count dimension` header, then one line per
/// token holding the token and `dimension` space-separated reals.
pub fn load_vectors(path: &Path) -> Result<EmbeddingTable, VectorizeError> {
    let io_err = |e: std::io::Error| VectorizeError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(io_err)?
        .ok_or_else(|| VectorizeError::MalformedHeader("empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match fields.as_slice() {
        [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
            (Ok(c), Ok(d)) if d > 0 => (c, d),
            _ => return Err(VectorizeError::MalformedHeader(header.clone())),
        },
        _ => return Err(VectorizeError::MalformedHeader(header.clone())),
    };
    let mut table = EmbeddingTable::new(dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap().to_string();
        let values = parts
            .map(|p| p.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| VectorizeError::MalformedLine {
                line: line_no,
                message: "unparsable component".into(),
            })?;
        if values.len() != dim {
            return Err(VectorizeError::MalformedLine {
                line: line_no,
                message: format!("expected {dim} components, found {}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(VectorizeError::MalformedLine {
                line: line_no,
                message: "non-finite component".into(),
            });
        }
        if table.index.contains_key(&token) {
            return Err(VectorizeError::DuplicateToken {
                token,
                line: Some(line_no),
            });
        }
        table.insert(token, values)?;
    }
    if table.len() != count {
        return Err(VectorizeError::MalformedHeader(format!(
            "header declares {count} vectors, file holds {}",
            table.len()
        )));
    }
    Ok(table)
}

/// Writes the text vector format with shortest round-trip decimal components.
pub fn save_vectors(table: &EmbeddingTable, path: &Path) -> Result<(), VectorizeError> {
    let io_err = |e: std::io::Error| VectorizeError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(w, "{} {}", table.len(), table.dim).map_err(io_err)?;
    for (i, t) in table.tokens.iter().enumerate() {
        write!(w, "{t}").map_err(io_err)?;
        for v in &table.data[i * table.dim..(i + 1) * table.dim] {
            write!(w, " {v}").map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2);
        t.insert("a".into(), vec![1.0, 0.0]).unwrap();
        t.insert("b".into(), vec![0.0, 1.0]).unwrap();
        t
    }

    #[test]
    fn document_mean() {
        let d = embed_document(&table(), &["a", "b"]);
        assert_eq!(d.vector, vec![0.5, 0.5]);
        assert!(!d.empty);
        let single = embed_document(&table(), &["a"]);
        assert_eq!(single.vector, table().embed_token("a").vector);
        let empty = embed_document::<_, &str>(&table(), &[]);
        assert!(empty.empty);
        assert_eq!(empty.vector, vec![0.0, 0.0]);
    }

    #[test]
    fn lookup_and_miss() {
        let t = table();
        assert_eq!(t.embed_token("b").vector, vec![0.0, 1.0]);
        let miss = t.embed_token("zz");
        assert!(miss.missing);
        assert_eq!(miss.vector, vec![0.0, 0.0]);
        let d = embed_document(&t, &["a", "zz"]);
        assert_eq!(d.misses, 1);
        assert_eq!(d.vector, vec![0.5, 0.0]);
    }

    #[test]
    fn load_small_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        std::fs::write(&p, "2 3\nسلام 0.1 0.2 0.3\nدنیا -1 0 1e-3\n").unwrap();
        let t = load_vectors(&p).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 3);
        assert_eq!(t.get("دنیا").unwrap(), &[-1.0, 0.0, 0.001]);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        std::fs::write(&p, "2 3\na 1 2 3\nb 1 2\n").unwrap();
        match load_vectors(&p) {
            Err(VectorizeError::MalformedLine { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        std::fs::write(&p, "two 3\n").unwrap();
        assert!(matches!(load_vectors(&p), Err(VectorizeError::MalformedHeader(_))));
        std::fs::write(&p, "2 1\na 1\na 2\n").unwrap();
        assert!(matches!(
            load_vectors(&p),
            Err(VectorizeError::DuplicateToken { line: Some(3), .. })
        ));
    }
}
