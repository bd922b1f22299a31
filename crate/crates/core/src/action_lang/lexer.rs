use super::{Location, ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Lowercase-initial identifier (names, symbols, keywords).
    Ident(String),
    /// Uppercase-initial identifier.
    Var(String),
    Int(i64),
    Dot,
    DotDot,
    Comma,
    Colon,
    Eq,
    Plus,
    Minus,
    LBrace,
    RBrace,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Dot => "`.`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub loc: Location,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1u32, 1u32);

    while let Some(&c) = chars.peek() {
        let loc = Location::new(line, col);
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '%' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            col += word.len() as u32;
            let tok = if word.starts_with(|c: char| c.is_ascii_uppercase()) {
                Tok::Var(word)
            } else {
                Tok::Ident(word)
            };
            out.push(Token { tok, loc });
            continue;
        }
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    digits.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            col += digits.len() as u32;
            let value = digits
                .parse::<i64>()
                .map_err(|_| ParseError::new(loc, ParseErrorKind::BadInteger(digits.clone())))?;
            out.push(Token {
                tok: Tok::Int(value),
                loc,
            });
            continue;
        }
        chars.next();
        col += 1;
        let tok = match c {
            '.' => {
                if chars.peek() == Some(&'.') {
                    chars.next();
                    col += 1;
                    Tok::DotDot
                } else {
                    Tok::Dot
                }
            }
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '=' => Tok::Eq,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            other => return Err(ParseError::new(loc, ParseErrorKind::Lexical(other))),
        };
        out.push(Token { tok, loc });
    }
    Ok(out)
}
