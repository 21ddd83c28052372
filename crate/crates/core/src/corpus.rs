//! Tab-separated corpus files.
//!
//! One token per line: `surface<TAB>pos[<TAB>phrase[<TAB>edu[<TAB>B|I]]]`.
//! A blank line ends a sequence. `# key=value` lines carry metadata; the
//! `doc` key opens a new document. Missing inner columns are written `-`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::types::{EduLabel, EduRole, PhraseLabel, TagAlphabet, TaggedToken};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusToken {
    pub token: TaggedToken,
    pub phrase: Option<PhraseLabel>,
    pub role: Option<EduRole>,
    /// `Some(true)` for `B`, `Some(false)` for `I`.
    pub begin: Option<bool>,
}

impl CorpusToken {
    pub fn edu_label(&self) -> Option<EduLabel> {
        Some(EduLabel::new(self.role?, self.begin?))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sequence {
    pub tokens: Vec<CorpusToken>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tags(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.token.tag.as_str()).collect()
    }

    pub fn tagged(&self) -> Vec<TaggedToken> {
        self.tokens.iter().map(|t| t.token.clone()).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub id: Option<String>,
    pub meta: BTreeMap<String, String>,
    pub sequences: Vec<Sequence>,
}

const MISSING: &str = "-";

fn optional<T: std::str::FromStr<Err = Error>>(field: Option<&str>, line: usize) -> Result<Option<T>> {
    match field {
        None | Some(MISSING) => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|e: Error| Error::parse(line, e.to_string())),
    }
}

pub fn parse_corpus(text: &str, alphabet: &TagAlphabet) -> Result<Vec<Document>> {
    let mut docs: Vec<Document> = Vec::new();
    let mut current = Sequence::default();

    fn flush(docs: &mut Vec<Document>, seq: &mut Sequence) {
        if seq.tokens.is_empty() {
            return;
        }
        if docs.is_empty() {
            docs.push(Document::default());
        }
        docs.last_mut().unwrap().sequences.push(std::mem::take(seq));
    }

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            flush(&mut docs, &mut current);
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let Some((key, value)) = header.trim().split_once('=') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            flush(&mut docs, &mut current);
            if key == "doc" {
                docs.push(Document {
                    id: Some(value.to_string()),
                    ..Document::default()
                });
            } else {
                if docs.is_empty() {
                    docs.push(Document::default());
                }
                docs.last_mut()
                    .unwrap()
                    .meta
                    .insert(key.to_string(), value.to_string());
            }
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if !(2..=5).contains(&cols.len()) {
            return Err(Error::parse(
                line_no,
                format!("expected 2 to 5 tab-separated columns, found {}", cols.len()),
            ));
        }
        if cols[0].is_empty() {
            return Err(Error::parse(line_no, "empty surface"));
        }
        let tag = alphabet.tag(cols[1]).ok_or_else(|| Error::UnknownTag {
            line: line_no,
            tag: cols[1].to_string(),
        })?;
        let phrase = optional::<PhraseLabel>(cols.get(2).copied(), line_no)?;
        let role = optional::<EduRole>(cols.get(3).copied(), line_no)?;
        let begin = match cols.get(4).copied() {
            None | Some(MISSING) => None,
            Some("B") => Some(true),
            Some("I") => Some(false),
            Some(other) => {
                return Err(Error::parse(line_no, format!("boundary column must be B or I, found `{other}`")))
            }
        };
        let index = current.tokens.len();
        current.tokens.push(CorpusToken {
            token: TaggedToken {
                surface: cols[0].to_string(),
                tag,
                index,
            },
            phrase,
            role,
            begin,
        });
    }
    flush(&mut docs, &mut current);
    Ok(docs)
}

pub fn write_corpus(docs: &[Document]) -> String {
    let mut out = String::new();
    for doc in docs {
        if let Some(id) = &doc.id {
            let _ = writeln!(out, "# doc={id}");
        }
        for (k, v) in &doc.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        for seq in &doc.sequences {
            for t in &seq.tokens {
                let mut cols = vec![
                    t.token.surface.clone(),
                    t.token.tag.to_string(),
                    t.phrase.map_or(MISSING.into(), |p| p.to_string()),
                    t.role.map_or(MISSING.into(), |r| r.to_string()),
                    t.begin
                        .map_or(MISSING.into(), |b| if b { "B" } else { "I" }.to_string()),
                ];
                while cols.len() > 2 && cols.last().map(String::as_str) == Some(MISSING) {
                    cols.pop();
                }
                out.push_str(&cols.join("\t"));
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alphabet() -> TagAlphabet {
        TagAlphabet::default()
    }

    #[test]
    fn two_line_file_keeps_phrase_labels() {
        let docs = parse_corpus("เพื่อน\tNCMN\tH\nจะขอ\tXVMM\tAux1\n", &alphabet()).unwrap();
        assert_eq!(docs.len(), 1);
        let seq = &docs[0].sequences[0];
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.tokens[0].phrase, Some(PhraseLabel::Head));
        assert_eq!(seq.tokens[1].phrase, Some(PhraseLabel::PreAuxiliary));
        assert_eq!(seq.tokens[1].token.index, 1);
    }

    #[test]
    fn empty_stream_is_empty() {
        assert!(parse_corpus("", &alphabet()).unwrap().is_empty());
        assert!(parse_corpus("\n\n", &alphabet()).unwrap().is_empty());
    }

    #[test]
    fn column_count_error_names_line() {
        let err = parse_corpus("a\tNCMN\nb\n", &alphabet()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_corpus("a\tNCMN\tH\tS\tB\textra\n", &alphabet()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn unknown_tag_is_named() {
        let err = parse_corpus("a\tNCMN\nb\tWHAT\n", &alphabet()).unwrap_err();
        match err {
            Error::UnknownTag { line, tag } => {
                assert_eq!(line, 2);
                assert_eq!(tag, "WHAT");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn headers_split_documents() {
        let text = "# doc=a\n# genre=law\nx\tNCMN\n\n# doc=b\ny\tVACT\t-\tVt\tB\n";
        let docs = parse_corpus(text, &alphabet()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].meta["genre"], "law");
        assert_eq!(docs[1].sequences[0].tokens[0].phrase, None);
        assert_eq!(
            docs[1].sequences[0].tokens[0].edu_label(),
            Some(EduLabel::new(EduRole::TransitiveVerb, true))
        );
        assert_eq!(write_corpus(&docs), format!("{text}\n"));
    }
}
