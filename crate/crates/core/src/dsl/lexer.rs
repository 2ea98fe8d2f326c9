use super::ast::Pos;
use super::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Float(f64),
    Punct(char),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Float(x) => format!("`{x}`"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCT: &str = ";:,{}()[]=-";

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), pos });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                i += 1;
                if i < chars.len() && (chars[i] == '-' || chars[i] == '+') {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            col += i - start;
            let text: String = chars[start..i].iter().collect();
            let tok = if let Ok(n) = text.parse::<u64>() {
                Tok::Int(n)
            } else if let Ok(x) = text.parse::<f64>() {
                Tok::Float(x)
            } else {
                return Err(Diagnostic::syntax(pos, format!("malformed number `{text}`")));
            };
            out.push(Token { tok, pos });
        } else if PUNCT.contains(c) {
            i += 1;
            col += 1;
            out.push(Token { tok: Tok::Punct(c), pos });
        } else {
            return Err(Diagnostic::syntax(pos, format!("unexpected character `{c}`")));
        }
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_comments() {
        let toks = lex("topic x : scalar; // note\n  node\n1.5e-3").unwrap();
        assert_eq!(toks[0], Token { tok: Tok::Ident("topic".into()), pos: Pos { line: 1, col: 1 } });
        assert_eq!(toks[4].tok, Tok::Punct(';'));
        assert_eq!(toks[5].pos, Pos { line: 2, col: 3 });
        assert_eq!(toks[6].tok, Tok::Float(1.5e-3));
        assert_eq!(toks[7].tok, Tok::Eof);
    }

    #[test]
    fn bad_character() {
        let d = lex("topic x @").unwrap_err();
        assert_eq!(d.pos, Pos { line: 1, col: 9 });
    }
}
