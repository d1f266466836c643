use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::KgError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Iri,
    Literal,
    BlankNode,
}

/// An RDF term. Literals carry at most one of a language tag or datatype.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RdfTerm {
    pub kind: TermKind,
    pub lexical: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype_iri: Option<String>,
}

impl RdfTerm {
    pub fn iri(iri: impl Into<String>) -> Result<Self, KgError> {
        let lexical = iri.into();
        if lexical.is_empty() || lexical.chars().any(char::is_whitespace) {
            return Err(KgError::InvalidTerm(format!("bad IRI `{lexical}`")));
        }
        Ok(Self {
            kind: TermKind::Iri,
            lexical,
            language_tag: None,
            datatype_iri: None,
        })
    }

    pub fn blank(label: impl Into<String>) -> Result<Self, KgError> {
        let lexical = label.into();
        if lexical.is_empty() || lexical.chars().any(char::is_whitespace) {
            return Err(KgError::InvalidTerm(format!(
                "bad blank node label `{lexical}`"
            )));
        }
        Ok(Self {
            kind: TermKind::BlankNode,
            lexical,
            language_tag: None,
            datatype_iri: None,
        })
    }

    pub fn literal(lexical: impl Into<String>) -> Self {
        Self {
            kind: TermKind::Literal,
            lexical: lexical.into(),
            language_tag: None,
            datatype_iri: None,
        }
    }

    pub fn lang_literal(lexical: impl Into<String>, tag: impl Into<String>) -> Self {
        Self {
            language_tag: Some(tag.into()),
            ..Self::literal(lexical)
        }
    }

    pub fn typed_literal(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Self {
            datatype_iri: Some(datatype.into()),
            ..Self::literal(lexical)
        }
    }

    pub fn is_iri(&self) -> bool {
        self.kind == TermKind::Iri
    }

    pub fn is_literal(&self) -> bool {
        self.kind == TermKind::Literal
    }

    /// Parses a single N-Triples term such as `<http://x>` or `"a"@en`.
    pub fn parse(s: &str) -> Result<Self, KgError> {
        super::ntriples::parse_term(s.trim())
    }

    /// Short human-oriented label: IRI local name or literal text.
    pub fn short_label(&self) -> &str {
        match self.kind {
            TermKind::Iri => self
                .lexical
                .rsplit(['/', '#'])
                .find(|s| !s.is_empty())
                .unwrap_or(&self.lexical),
            _ => &self.lexical,
        }
    }
}

impl Ord for RdfTerm {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lexical
            .cmp(&other.lexical)
            .then(self.kind.cmp(&other.kind))
            .then_with(|| self.language_tag.cmp(&other.language_tag))
            .then_with(|| self.datatype_iri.cmp(&other.datatype_iri))
    }
}

impl PartialOrd for RdfTerm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// N-Triples serialization of the term.
impl fmt::Display for RdfTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TermKind::Iri => write!(f, "<{}>", escape_iri(&self.lexical)),
            TermKind::BlankNode => write!(f, "_:{}", self.lexical),
            TermKind::Literal => {
                f.write_str("\"")?;
                for c in self.lexical.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if let Some(tag) = &self.language_tag {
                    write!(f, "@{tag}")
                } else if let Some(dt) = &self.datatype_iri {
                    write!(f, "^^<{}>", escape_iri(dt))
                } else {
                    Ok(())
                }
            }
        }
    }
}

fn escape_iri(iri: &str) -> String {
    let mut out = String::with_capacity(iri.len());
    for c in iri.chars() {
        match c {
            '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' | '\u{0}'..='\u{20}' => {
                out.push_str(&format!("\\u{:04X}", c as u32))
            }
            c => out.push(c),
        }
    }
    out
}

/// A ⟨subject, predicate, object⟩ statement with an IRI predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: RdfTerm,
    pub predicate: RdfTerm,
    pub object: RdfTerm,
}

impl Triple {
    pub fn new(subject: RdfTerm, predicate: RdfTerm, object: RdfTerm) -> Result<Self, KgError> {
        if subject.is_literal() {
            return Err(KgError::InvalidTerm("literal subject".into()));
        }
        if !predicate.is_iri() {
            return Err(KgError::InvalidTerm("predicate must be an IRI".into()));
        }
        Ok(Self {
            subject,
            predicate,
            object,
        })
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}
