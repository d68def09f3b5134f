use crate::diagnostics::{Diagnostic, DiagnosticKind, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Floating, character or string literal; kept only to produce a precise
    /// subset diagnostic.
    OtherLit(String),
    Punct(&'static str),
    /// Body of an ACSL comment, with the comment markers blanked so that
    /// re-lexing it from `start` reproduces source positions.
    Annot {
        text: String,
        start: Pos,
    },
    Hash,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCTS: &[&str] = &[
    "==>", "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "(", ")", "{", "}", "[", "]", ";", ",", "+",
    "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^", "?", ":", ".",
];

struct Cursor<'a> {
    src: &'a [u8],
    i: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn peek(&self, k: usize) -> u8 {
        *self.src.get(self.i + k).unwrap_or(&0)
    }

    fn bump(&mut self) -> u8 {
        let c = self.peek(0);
        self.i += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.i..].starts_with(s.as_bytes())
    }
}

/// Tokenizes C source. `start` is the position of the first byte, which
/// lets annotation bodies be re-lexed with their original coordinates.
pub fn lex(src: &str, start: Pos, allow_annotations: bool) -> Result<Vec<Token>, Diagnostic> {
    let mut c = Cursor {
        src: src.as_bytes(),
        i: 0,
        line: start.line,
        col: start.col,
    };
    let mut out: Vec<Token> = Vec::new();
    loop {
        let ch = c.peek(0);
        if ch == 0 {
            break;
        }
        if ch.is_ascii_whitespace() {
            c.bump();
            continue;
        }
        let pos = c.pos();
        if c.starts_with("//@") && allow_annotations {
            let begin = c.i;
            while c.peek(0) != b'\n' && c.peek(0) != 0 {
                c.bump();
            }
            let mut text = blank(&src[begin..c.i], 3);
            // Consecutive `//@` lines form one annotation.
            if let Some(Token {
                tok: Tok::Annot { text: prev, .. },
                ..
            }) = out.last_mut()
            {
                if merges_with_previous(src, begin) {
                    prev.push('\n');
                    prev.push_str(&text);
                    continue;
                }
            }
            text.shrink_to_fit();
            out.push(Token {
                tok: Tok::Annot { text, start: pos },
                pos,
            });
            continue;
        }
        if c.starts_with("/*@") && allow_annotations {
            let begin = c.i;
            c.bump();
            c.bump();
            c.bump();
            loop {
                if c.peek(0) == 0 {
                    return Err(Diagnostic::error(
                        DiagnosticKind::Syntax,
                        pos,
                        "unterminated annotation comment",
                    ));
                }
                if c.starts_with("*/") {
                    c.bump();
                    c.bump();
                    break;
                }
                c.bump();
            }
            let raw = &src[begin..c.i];
            let mut text = blank(raw, 3);
            let n = text.len();
            let tail = if raw.ends_with("@*/") { 3 } else { 2 };
            text.replace_range(n - tail.., &" ".repeat(tail));
            out.push(Token {
                tok: Tok::Annot { text, start: pos },
                pos,
            });
            continue;
        }
        if c.starts_with("//") {
            while c.peek(0) != b'\n' && c.peek(0) != 0 {
                c.bump();
            }
            continue;
        }
        if c.starts_with("/*") {
            c.bump();
            c.bump();
            loop {
                if c.peek(0) == 0 {
                    return Err(Diagnostic::error(
                        DiagnosticKind::Syntax,
                        pos,
                        "unterminated comment",
                    ));
                }
                if c.starts_with("*/") {
                    c.bump();
                    c.bump();
                    break;
                }
                c.bump();
            }
            continue;
        }
        if ch == b'#' {
            c.bump();
            out.push(Token {
                tok: Tok::Hash,
                pos,
            });
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == b'_' || ch == b'\\' {
            let begin = c.i;
            c.bump();
            while c.peek(0).is_ascii_alphanumeric() || c.peek(0) == b'_' {
                c.bump();
            }
            out.push(Token {
                tok: Tok::Ident(src[begin..c.i].to_string()),
                pos,
            });
            continue;
        }
        if ch.is_ascii_digit() {
            let begin = c.i;
            while c.peek(0).is_ascii_alphanumeric() || c.peek(0) == b'.' {
                c.bump();
            }
            let text = &src[begin..c.i];
            let tok = match text.parse::<i64>() {
                Ok(v) => Tok::Int(v),
                Err(_) if text.chars().all(|d| d.is_ascii_digit()) => {
                    return Err(Diagnostic::error(
                        DiagnosticKind::Syntax,
                        pos,
                        format!("integer literal `{text}` out of range"),
                    ))
                }
                Err(_) => Tok::OtherLit(text.to_string()),
            };
            out.push(Token { tok, pos });
            continue;
        }
        if ch == b'\'' || ch == b'"' {
            let begin = c.i;
            c.bump();
            while c.peek(0) != ch && c.peek(0) != 0 && c.peek(0) != b'\n' {
                if c.peek(0) == b'\\' {
                    c.bump();
                }
                c.bump();
            }
            c.bump();
            out.push(Token {
                tok: Tok::OtherLit(src[begin..c.i].to_string()),
                pos,
            });
            continue;
        }
        match PUNCTS.iter().find(|p| c.starts_with(p)) {
            Some(p) => {
                for _ in 0..p.len() {
                    c.bump();
                }
                out.push(Token {
                    tok: Tok::Punct(p),
                    pos,
                });
            }
            None => {
                return Err(Diagnostic::error(
                    DiagnosticKind::Syntax,
                    pos,
                    format!("unexpected character `{}`", ch as char),
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: c.pos(),
    });
    Ok(out)
}

fn blank(raw: &str, prefix: usize) -> String {
    let mut s = String::with_capacity(raw.len());
    s.push_str(&" ".repeat(prefix.min(raw.len())));
    s.push_str(&raw[prefix.min(raw.len())..]);
    s
}

/// True if the `//@` at `begin` is preceded (on earlier lines) only by
/// whitespace back to the end of another `//@` line.
fn merges_with_previous(src: &str, begin: usize) -> bool {
    let before = &src[..begin];
    let trimmed = before.trim_end_matches([' ', '\t']);
    let Some(rest) = trimmed.strip_suffix('\n') else {
        return false;
    };
    let rest = rest.strip_suffix('\r').unwrap_or(rest);
    let line_start = rest.rfind('\n').map_or(0, |i| i + 1);
    rest[line_start..].trim_start().starts_with("//@")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_consecutive_line_annotations() {
        let src = "//@ ABS def Int f(Int n) =\n//@   n;\nint x;";
        let toks = lex(src, Pos::new(1, 1), true).unwrap();
        match &toks[0].tok {
            Tok::Annot { text, .. } => {
                assert!(text.contains("def Int f"));
                assert!(text.contains("n;"));
                assert!(!text.contains("//@"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(toks[1].tok, Tok::Ident("int".into()));
    }

    #[test]
    fn block_annotation_keeps_columns() {
        let src = "/*@ ensures x; @*/";
        let toks = lex(src, Pos::new(1, 1), true).unwrap();
        let Tok::Annot { text, start } = &toks[0].tok else {
            panic!()
        };
        assert_eq!(text.len(), src.len());
        assert_eq!(text.find("ensures"), Some(4));
        assert_eq!(*start, Pos::new(1, 1));
    }

    #[test]
    fn float_literal_is_flagged_not_rejected() {
        let toks = lex("1.5", Pos::new(1, 1), false).unwrap();
        assert_eq!(toks[0].tok, Tok::OtherLit("1.5".into()));
    }
}
