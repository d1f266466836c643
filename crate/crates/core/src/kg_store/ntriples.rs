//! Line-oriented W3C N-Triples reader and writer.

use std::io::{BufRead, Write};

use super::{KgError, RdfTerm, Triple};

/// Parses every statement in `input`, skipping blank and comment lines.
///
/// Fails on the first malformed line; nothing is silently dropped.
pub fn parse_ntriples<R: BufRead>(input: R) -> Result<Vec<Triple>, KgError> {
    let mut triples = Vec::new();
    for (i, line) in input.split(b'\n').enumerate() {
        let line_no = i + 1;
        let bytes = line.map_err(|e| KgError::Io(e.to_string()))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| KgError::Syntax {
            line: line_no,
            reason: format!("invalid UTF-8: {e}"),
        })?;
        if let Some(t) = parse_line(text).map_err(|reason| KgError::Syntax {
            line: line_no,
            reason,
        })? {
            triples.push(t);
        }
    }
    Ok(triples)
}

pub fn parse_ntriples_str(input: &str) -> Result<Vec<Triple>, KgError> {
    parse_ntriples(input.as_bytes())
}

pub fn write_ntriples<'a, W: Write>(
    out: &mut W,
    triples: impl IntoIterator<Item = &'a Triple>,
) -> std::io::Result<()> {
    for t in triples {
        writeln!(out, "{t}")?;
    }
    Ok(())
}

/// `Ok(None)` for blank/comment lines.
pub fn parse_line(line: &str) -> Result<Option<Triple>, String> {
    let mut cur = Cursor::new(line);
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let subject = match cur.peek() {
        Some('<') => cur.iri()?,
        Some('_') => cur.blank()?,
        other => {
            return Err(format!(
                "expected subject IRI or blank node, found {other:?}"
            ))
        }
    };
    cur.require_ws()?;
    let predicate = match cur.peek() {
        Some('<') => cur.iri()?,
        other => return Err(format!("expected predicate IRI, found {other:?}")),
    };
    cur.require_ws()?;
    let object = cur.term()?;
    cur.skip_ws();
    if cur.bump() != Some('.') {
        return Err("expected `.` at end of statement".into());
    }
    cur.skip_ws();
    if !(cur.at_end() || cur.peek() == Some('#')) {
        return Err("trailing content after `.`".into());
    }
    Triple::new(subject, predicate, object)
        .map(Some)
        .map_err(|e| e.to_string())
}

pub(crate) fn parse_term(s: &str) -> Result<RdfTerm, KgError> {
    let mut cur = Cursor::new(s);
    let t = cur.term().map_err(KgError::InvalidTerm)?;
    if !cur.at_end() {
        return Err(KgError::InvalidTerm(format!(
            "trailing content in term `{s}`"
        )));
    }
    Ok(t)
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str) -> Self {
        let s = s.strip_suffix('\r').unwrap_or(s);
        Self { s, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn require_ws(&mut self) -> Result<(), String> {
        let start = self.pos;
        self.skip_ws();
        // `<a><b>` is legal N-Triples; only demand separation before bare tokens.
        if self.pos == start && !matches!(self.peek(), Some('<' | '"')) {
            return Err("expected whitespace between terms".into());
        }
        Ok(())
    }

    fn term(&mut self) -> Result<RdfTerm, String> {
        match self.peek() {
            Some('<') => self.iri(),
            Some('_') => self.blank(),
            Some('"') => self.literal(),
            other => Err(format!("expected term, found {other:?}")),
        }
    }

    fn iri_body(&mut self) -> Result<String, String> {
        if self.bump() != Some('<') {
            return Err("expected `<`".into());
        }
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated IRI".into()),
                Some('>') => break,
                Some('\\') => out.push(self.unicode_escape()?),
                Some(c)
                    if c.is_whitespace()
                        || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') =>
                {
                    return Err(format!("illegal character {c:?} in IRI"))
                }
                Some(c) => out.push(c),
            }
        }
        if out.is_empty() {
            return Err("empty IRI".into());
        }
        Ok(out)
    }

    fn iri(&mut self) -> Result<RdfTerm, String> {
        let body = self.iri_body()?;
        RdfTerm::iri(body).map_err(|e| e.to_string())
    }

    fn blank(&mut self) -> Result<RdfTerm, String> {
        if self.bump() != Some('_') || self.bump() != Some(':') {
            return Err("expected `_:`".into());
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        // a trailing '.' belongs to the statement terminator
        let mut end = self.pos;
        while end > start && self.s.as_bytes()[end - 1] == b'.' {
            end -= 1;
        }
        self.pos = end;
        if end == start {
            return Err("empty blank node label".into());
        }
        RdfTerm::blank(&self.s[start..end]).map_err(|e| e.to_string())
    }

    fn literal(&mut self) -> Result<RdfTerm, String> {
        self.bump();
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated literal".into()),
                Some('"') => break,
                Some('\\') => match self.peek() {
                    Some('u' | 'U') => lexical.push(self.unicode_escape()?),
                    Some(c) => {
                        self.bump();
                        lexical.push(match c {
                            't' => '\t',
                            'b' => '\u{8}',
                            'n' => '\n',
                            'r' => '\r',
                            'f' => '\u{c}',
                            '"' => '"',
                            '\'' => '\'',
                            '\\' => '\\',
                            other => return Err(format!("unknown escape `\\{other}`")),
                        });
                    }
                    None => return Err("dangling backslash".into()),
                },
                Some('\n') | Some('\r') => return Err("raw line break in literal".into()),
                Some(c) => lexical.push(c),
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.pos += 1;
                }
                let tag = &self.s[start..self.pos];
                if tag.is_empty() || !tag.as_bytes()[0].is_ascii_alphabetic() {
                    return Err("malformed language tag".into());
                }
                Ok(RdfTerm::lang_literal(lexical, tag))
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') {
                    return Err("expected `^^` before datatype".into());
                }
                let dt = self.iri_body()?;
                Ok(RdfTerm::typed_literal(lexical, dt))
            }
            _ => Ok(RdfTerm::literal(lexical)),
        }
    }

    /// Consumes `uXXXX` / `UXXXXXXXX` after a backslash.
    fn unicode_escape(&mut self) -> Result<char, String> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            other => return Err(format!("unsupported escape {other:?}")),
        };
        let end = self.pos + width;
        let hex = self
            .s
            .get(self.pos..end)
            .ok_or("truncated unicode escape")?;
        let code = u32::from_str_radix(hex, 16).map_err(|_| format!("bad hex `{hex}`"))?;
        self.pos = end;
        char::from_u32(code).ok_or_else(|| format!("invalid code point U+{code:X}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg_store::TermKind;
    use proptest::prelude::*;

    #[test]
    fn iri_statement() {
        let ts = parse_ntriples_str(
            "<http://dbpedia.org/resource/Balanites> <http://dbpedia.org/ontology/kingdom> <http://dbpedia.org/resource/Plant> .\n",
        )
        .unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].object.kind, TermKind::Iri);
        assert_eq!(ts[0].object.lexical, "http://dbpedia.org/resource/Plant");
    }

    #[test]
    fn lang_literal_statement() {
        let ts =
            parse_ntriples_str("<http://x/s> <http://xmlns.com/foaf/0.1/name> \"Balanites\"@en .")
                .unwrap();
        assert_eq!(ts[0].object, RdfTerm::lang_literal("Balanites", "en"));
    }

    #[test]
    fn empty_comments_and_blank_lines() {
        assert!(parse_ntriples_str("").unwrap().is_empty());
        let ts = parse_ntriples_str("# header\n\n   \n<a:s> <a:p> _:b1 . # trailing\r\n").unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].object, RdfTerm::blank("b1").unwrap());
    }

    #[test]
    fn escapes() {
        let ts = parse_ntriples_str(
            r#"<a:s> <a:p> "tab\there \"q\" é\U0001F600" .
<a:s> <a:p> "5"^^<http://www.w3.org/2001/XMLSchema#int> .
<a:sA> <a:p> _:x.
"#,
        )
        .unwrap();
        assert_eq!(ts[0].object.lexical, "tab\there \"q\" é😀");
        assert_eq!(
            ts[1].object.datatype_iri.as_deref(),
            Some("http://www.w3.org/2001/XMLSchema#int")
        );
        assert_eq!(ts[2].subject.lexical, "a:sA");
        assert_eq!(ts[2].object.lexical, "x");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("<a:s> <a:p> <a:o>\n", 1),
            ("<a:s> <a:p> <a:o> .\n\"lit\" <a:p> <a:o> .", 2),
            ("<a:s> _:p <a:o> .", 1),
            ("<a:s> <a:p> \"open .", 1),
            ("\n\n<a:s> <a:p> <a:o> . junk", 3),
            ("<a b> <a:p> <a:o> .", 1),
            ("<a:s> <a:p> \"x\"@ .", 1),
        ];
        for (src, line) in cases {
            match parse_ntriples_str(src) {
                Err(KgError::Syntax { line: l, .. }) => assert_eq!(l, line, "{src}"),
                other => panic!("{src:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn invalid_utf8_is_a_syntax_error() {
        let bytes = b"<a:s> <a:p> \"\xff\" .\n";
        assert!(matches!(
            parse_ntriples(&bytes[..]),
            Err(KgError::Syntax { line: 1, .. })
        ));
    }

    fn arb_object() -> impl Strategy<Value = RdfTerm> {
        let text = "[a-zA-Z0-9 \"\\\\\n\r\t'é😀]{0,12}";
        prop_oneof![
            "[a-z]{1,8}".prop_map(|s| RdfTerm::iri(format!("http://ex.org/{s}")).unwrap()),
            "[a-z][a-z0-9]{0,6}".prop_map(|s| RdfTerm::blank(s).unwrap()),
            text.prop_map(RdfTerm::literal),
            (text, "[a-z]{2}(-[A-Z]{2})?").prop_map(|(s, t)| RdfTerm::lang_literal(s, t)),
            text.prop_map(|s| RdfTerm::typed_literal(s, "http://www.w3.org/2001/XMLSchema#string")),
        ]
    }

    proptest! {
        #[test]
        fn serialize_then_parse_round_trips(o in arb_object(), p in "[a-z]{1,6}") {
            let t = Triple::new(
                RdfTerm::iri("http://ex.org/s").unwrap(),
                RdfTerm::iri(format!("http://ex.org/p/{p}")).unwrap(),
                o,
            ).unwrap();
            let mut buf = Vec::new();
            write_ntriples(&mut buf, [&t]).unwrap();
            let back = parse_ntriples(&buf[..]).unwrap();
            prop_assert_eq!(back, vec![t]);
        }
    }
}
