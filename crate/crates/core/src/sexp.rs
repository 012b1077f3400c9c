//! Minimal s-expression reader shared by the feature-structure, spec and
//! record formats. Atoms keep their original spelling; callers decide how
//! to canonicalize them.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct SexpError {
    pub offset: usize,
    pub message: String,
}

impl SexpError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        SexpError {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom { text: String, offset: usize },
    Str { text: String, offset: usize },
    List { items: Vec<Sexp>, offset: usize },
}

impl Sexp {
    pub fn offset(&self) -> usize {
        match self {
            Sexp::Atom { offset, .. } | Sexp::Str { offset, .. } | Sexp::List { offset, .. } => {
                *offset
            }
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            _ => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom { text, .. } => f.write_str(text),
            Sexp::Str { text, .. } => write_quoted(f, text),
            Sexp::List { items, .. } => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, text: &str) -> fmt::Result {
    f.write_char('"')?;
    for ch in text.chars() {
        match ch {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

pub(crate) fn is_atom_char(b: u8) -> bool {
    !(b.is_ascii_whitespace() || b == b'(' || b == b')' || b == b'"' || b == b';')
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    fn skip_trivia(&mut self) {
        let bytes = self.bytes();
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b';' => {
                    while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn read(&mut self) -> Result<Sexp, SexpError> {
        self.skip_trivia();
        let bytes = self.bytes();
        let start = self.pos;
        match bytes.get(start) {
            None => Err(SexpError::new(start, "unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.bytes().get(self.pos) {
                        None => {
                            return Err(SexpError::new(start, "unbalanced parenthesis"));
                        }
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Sexp::List {
                                items,
                                offset: start,
                            });
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(b')') => Err(SexpError::new(start, "unexpected closing parenthesis")),
            Some(b'"') => self.read_string(),
            Some(_) => {
                while self.pos < bytes.len() && is_atom_char(bytes[self.pos]) {
                    self.pos += 1;
                }
                Ok(Sexp::Atom {
                    text: self.src[start..self.pos].to_string(),
                    offset: start,
                })
            }
        }
    }

    fn read_string(&mut self) -> Result<Sexp, SexpError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        while let Some((i, ch)) = chars.next() {
            match ch {
                '"' => {
                    self.pos += i + 1;
                    return Ok(Sexp::Str {
                        text: out,
                        offset: start,
                    });
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, c)) => out.push(c),
                    None => break,
                },
                c => out.push(c),
            }
        }
        Err(SexpError::new(start, "unterminated string"))
    }
}

/// Reads every top-level form in `src`.
pub fn read_all(src: &str) -> Result<Vec<Sexp>, SexpError> {
    let mut reader = Reader { src, pos: 0 };
    let mut out = Vec::new();
    loop {
        reader.skip_trivia();
        if reader.pos >= src.len() {
            return Ok(out);
        }
        out.push(reader.read()?);
    }
}

/// Reads exactly one form; trailing non-comment text is an error.
pub fn read_one(src: &str) -> Result<Sexp, SexpError> {
    let mut reader = Reader { src, pos: 0 };
    let form = reader.read()?;
    reader.skip_trivia();
    if reader.pos < src.len() {
        return Err(SexpError::new(reader.pos, "trailing input after expression"));
    }
    Ok(form)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_comments() {
        let forms = read_all("; header\n((a 1) (b \"x y\")) (c)").unwrap();
        assert_eq!(forms.len(), 2);
        assert_eq!(forms[0].to_string(), "((a 1) (b \"x y\"))");
        assert_eq!(forms[1].offset(), 27);
    }

    #[test]
    fn reports_unbalanced_offset() {
        let err = read_one("  ((a 1)").unwrap_err();
        assert_eq!(err.offset, 2);
        let err = read_one("(a))").unwrap_err();
        assert_eq!(err.offset, 3);
    }

    #[test]
    fn string_escapes_round_trip() {
        let s = read_one(r#""a \"q\" \\ b""#).unwrap();
        assert_eq!(s, Sexp::Str { text: "a \"q\" \\ b".into(), offset: 0 });
        assert_eq!(read_one(&s.to_string()).unwrap(), s);
    }
}
