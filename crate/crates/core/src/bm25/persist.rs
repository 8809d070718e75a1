//! On-disk index format.
//!
//! All integers are little-endian. Strings are a `u32` byte length followed by
//! UTF-8 bytes.
//!
//! ```text
//! magic     "REINA-IDX"
//! version   u32
//! k1, b     f64, f64
//! tag       string
//! docs      u32 count, then per doc: id string, length u32, value string
//! postings  u32 term count, then per term (ascending):
//!           term string, u32 posting count, then per posting: doc u32, tf u32
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Bm25Params, DocEntry, InvertedIndex, Posting};
use crate::error::{ReinaError, Result};

pub const INDEX_MAGIC: &[u8; 9] = b"REINA-IDX";
pub const INDEX_VERSION: u32 = 1;

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    let len = u32::try_from(s.len())
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "string too long"))?;
    w.write_u32::<LittleEndian>(len)?;
    w.write_all(s.as_bytes())
}

fn read_str<R: Read>(r: &mut R) -> std::io::Result<String> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(std::io::ErrorKind::UnexpectedEof.into());
    }
    String::from_utf8(buf)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

fn format_err(e: std::io::Error) -> ReinaError {
    ReinaError::IndexFormat(e.to_string())
}

impl InvertedIndex {
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(INDEX_MAGIC)?;
        w.write_u32::<LittleEndian>(INDEX_VERSION)?;
        w.write_f64::<LittleEndian>(self.params.k1)?;
        w.write_f64::<LittleEndian>(self.params.b)?;
        write_str(w, &self.tag)?;
        w.write_u32::<LittleEndian>(self.docs.len() as u32)?;
        for doc in &self.docs {
            write_str(w, &doc.doc_id)?;
            w.write_u32::<LittleEndian>(doc.len)?;
            write_str(w, &doc.value_ref)?;
        }
        w.write_u32::<LittleEndian>(self.postings.len() as u32)?;
        for (term, list) in &self.postings {
            write_str(w, term)?;
            w.write_u32::<LittleEndian>(list.len() as u32)?;
            for p in list {
                w.write_u32::<LittleEndian>(p.doc)?;
                w.write_u32::<LittleEndian>(p.tf)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 9];
        r.read_exact(&mut magic).map_err(format_err)?;
        if &magic != INDEX_MAGIC {
            return Err(ReinaError::IndexFormat("missing REINA-IDX header".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(format_err)?;
        if version != INDEX_VERSION {
            return Err(ReinaError::IndexFormat(format!(
                "unsupported version {version} (expected {INDEX_VERSION})"
            )));
        }
        let k1 = r.read_f64::<LittleEndian>().map_err(format_err)?;
        let b = r.read_f64::<LittleEndian>().map_err(format_err)?;
        let params = Bm25Params::new(k1, b)?;
        let tag = read_str(r).map_err(format_err)?;

        let n_docs = r.read_u32::<LittleEndian>().map_err(format_err)?;
        let mut docs = Vec::new();
        for _ in 0..n_docs {
            let doc_id = read_str(r).map_err(format_err)?;
            let len = r.read_u32::<LittleEndian>().map_err(format_err)?;
            let value_ref = read_str(r).map_err(format_err)?;
            docs.push(DocEntry {
                doc_id,
                len,
                value_ref,
            });
        }

        let n_terms = r.read_u32::<LittleEndian>().map_err(format_err)?;
        let mut postings = BTreeMap::new();
        let mut tf_sums = vec![0u64; docs.len()];
        for _ in 0..n_terms {
            let term = read_str(r).map_err(format_err)?;
            let count = r.read_u32::<LittleEndian>().map_err(format_err)?;
            let mut list: Vec<Posting> = Vec::new();
            for _ in 0..count {
                let doc = r.read_u32::<LittleEndian>().map_err(format_err)?;
                let tf = r.read_u32::<LittleEndian>().map_err(format_err)?;
                if doc as usize >= docs.len() || tf == 0 {
                    return Err(ReinaError::IndexFormat(format!(
                        "bad posting ({doc}, {tf}) for term `{term}`"
                    )));
                }
                if list.last().is_some_and(|prev| prev.doc >= doc) {
                    return Err(ReinaError::IndexFormat(format!(
                        "postings for `{term}` out of order"
                    )));
                }
                tf_sums[doc as usize] += u64::from(tf);
                list.push(Posting { doc, tf });
            }
            if postings.insert(term.clone(), list).is_some() {
                return Err(ReinaError::IndexFormat(format!("term `{term}` repeated")));
            }
        }
        for (doc, sum) in docs.iter().zip(&tf_sums) {
            if u64::from(doc.len) != *sum {
                return Err(ReinaError::IndexFormat(format!(
                    "length of `{}` disagrees with its postings",
                    doc.doc_id
                )));
            }
        }
        InvertedIndex::from_parts(params, tag, docs, postings)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| ReinaError::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| ReinaError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| ReinaError::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bm25::{build_index, retrieve, IndexedDoc};
    use crate::text::tokenize;

    fn sample() -> InvertedIndex {
        let docs = [
            ("d1", "the sun warms the room", "warm"),
            ("d2", "ice cream melts in the sun", "melt"),
            ("d3", "a cold room", "cold"),
        ]
        .into_iter()
        .map(|(id, key, value)| IndexedDoc {
            doc_id: id.into(),
            key_tokens: tokenize(key),
            value_ref: value.into(),
        });
        build_index(docs, Bm25Params::new(0.9, 0.4).unwrap())
            .unwrap()
            .with_tag("summarization")
    }

    #[test]
    fn round_trip_is_exact() {
        let idx = sample();
        let mut bytes = Vec::new();
        idx.write_to(&mut bytes).unwrap();
        assert!(bytes.starts_with(b"REINA-IDX"));

        let back = InvertedIndex::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.tag(), "summarization");
        assert_eq!(back.params(), idx.params());
        assert_eq!(back.n_docs(), 3);
        assert_eq!(back.avgdl(), idx.avgdl());
        assert_eq!(back.value_ref("d2"), Some("melt"));
        let query = tokenize("sun room");
        assert_eq!(
            retrieve(&query, 3, &back, None).unwrap(),
            retrieve(&query, 3, &idx, None).unwrap()
        );

        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn rejects_bad_header_and_version() {
        let err = InvertedIndex::read_from(&mut &b"NOT-AN-INDEX"[..]).unwrap_err();
        assert!(matches!(err, ReinaError::IndexFormat(_)));

        let mut bytes = Vec::new();
        sample().write_to(&mut bytes).unwrap();
        bytes[9] = 99;
        let err = InvertedIndex::read_from(&mut bytes.as_slice()).unwrap_err();
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn rejects_truncated_file() {
        let mut bytes = Vec::new();
        sample().write_to(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(InvertedIndex::read_from(&mut bytes.as_slice()).is_err());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx.bin");
        sample().save(&path).unwrap();
        let back = InvertedIndex::load(&path).unwrap();
        assert_eq!(back.n_docs(), 3);
        let missing = InvertedIndex::load(dir.path().join("nope.bin")).unwrap_err();
        assert!(missing.is_io());
    }
}
