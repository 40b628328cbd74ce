//! Tokenizer and value parser for the key-value file format.
//!
//! ```text
//! file      = { line } ;
//! line      = [ statement { ";" statement } ] [ comment ] ;
//! statement = key "=" value ;
//! value     = number | string | array | table ;
//! array     = "[" [ value { "," value } [ "," ] ] "]" ;
//! table     = "{" [ key "=" value { "," key "=" value } [ "," ] ] "}" ;
//! number    = [ "+" | "-" ] ( decimal | "inf" ) ;
//! string    = '"' { char } '"' ;           (* \" and \\ escapes *)
//! comment   = "#" { char } ;
//! ```

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ValueKind {
    /// Raw numeric text, kept so integers wider than 53 bits survive.
    Number(String),
    Str(String),
    Array(Vec<Value>),
    Table(Vec<(Spanned<String>, Value)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned<T> {
    pub line: usize,
    pub column: usize,
    pub item: T,
}

pub type Value = Spanned<ValueKind>;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for SyntaxError {}

impl ValueKind {
    pub fn describe(&self) -> &'static str {
        match self {
            ValueKind::Number(_) => "number",
            ValueKind::Str(_) => "string",
            ValueKind::Array(_) => "array",
            ValueKind::Table(_) => "table",
        }
    }
}

impl Value {
    pub fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    pub fn as_f64(&self) -> Result<f64, SyntaxError> {
        match &self.item {
            ValueKind::Number(raw) => parse_real(raw).ok_or_else(|| self.error(format!("invalid number `{raw}`"))),
            other => Err(self.error(format!("expected a number, found a {}", other.describe()))),
        }
    }

    pub fn as_u64(&self) -> Result<u64, SyntaxError> {
        match &self.item {
            ValueKind::Number(raw) => raw
                .strip_prefix('+')
                .unwrap_or(raw)
                .parse::<u64>()
                .map_err(|_| self.error(format!("expected a nonnegative integer, found `{raw}`"))),
            other => Err(self.error(format!("expected an integer, found a {}", other.describe()))),
        }
    }

    pub fn as_str(&self) -> Result<&str, SyntaxError> {
        match &self.item {
            ValueKind::Str(s) => Ok(s),
            other => Err(self.error(format!("expected a string, found a {}", other.describe()))),
        }
    }

    pub fn as_array(&self) -> Result<&[Value], SyntaxError> {
        match &self.item {
            ValueKind::Array(v) => Ok(v),
            other => Err(self.error(format!("expected an array, found a {}", other.describe()))),
        }
    }

    pub fn as_table(&self) -> Result<&[(Spanned<String>, Value)], SyntaxError> {
        match &self.item {
            ValueKind::Table(v) => Ok(v),
            other => Err(self.error(format!("expected a table, found a {}", other.describe()))),
        }
    }

    pub fn as_f64_array(&self) -> Result<Vec<f64>, SyntaxError> {
        self.as_array()?.iter().map(Value::as_f64).collect()
    }

    pub fn as_pair(&self) -> Result<(f64, f64), SyntaxError> {
        match self.as_array()? {
            [a, b] => Ok((a.as_f64()?, b.as_f64()?)),
            other => Err(self.error(format!("expected a pair, found {} elements", other.len()))),
        }
    }
}

fn parse_real(raw: &str) -> Option<f64> {
    let body = raw.trim_start_matches(['+', '-']);
    if body == "inf" {
        return Some(if raw.starts_with('-') { f64::NEG_INFINITY } else { f64::INFINITY });
    }
    if body.is_empty() || !body.chars().next()?.is_ascii_digit() && !body.starts_with('.') {
        return None;
    }
    raw.parse::<f64>().ok().filter(|x| x.is_finite())
}

pub type Statement = (Spanned<String>, Value);

/// Splits `text` into `key = value` statements.
pub fn parse_statements(text: &str) -> Result<Vec<Statement>, SyntaxError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut p = LineParser {
            chars: line.chars().collect(),
            pos: 0,
            line: i + 1,
        };
        loop {
            p.skip_ws();
            if p.at_end_of_content() {
                break;
            }
            let key = p.key()?;
            p.skip_ws();
            p.expect('=')?;
            let value = p.value()?;
            out.push((key, value));
            p.skip_ws();
            if p.at_end_of_content() {
                break;
            }
            p.expect(';')?;
        }
    }
    Ok(out)
}

struct LineParser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl LineParser {
    fn err(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn at_end_of_content(&self) -> bool {
        matches!(self.peek(), None | Some('#'))
    }

    fn expect(&mut self, c: char) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(self.err(format!("expected `{c}`, found `{x}`"))),
            None => Err(self.err(format!("expected `{c}`, found end of line"))),
        }
    }

    fn key(&mut self) -> Result<Spanned<String>, SyntaxError> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            Some(c) => return Err(self.err(format!("expected a key, found `{c}`"))),
            None => return Err(self.err("expected a key")),
        }
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        Ok(Spanned {
            line: self.line,
            column: start + 1,
            item: self.chars[start..self.pos].iter().collect(),
        })
    }

    fn value(&mut self) -> Result<Value, SyntaxError> {
        self.skip_ws();
        let column = self.pos + 1;
        let item = match self.peek() {
            Some('"') => ValueKind::Str(self.string()?),
            Some('[') => ValueKind::Array(self.array()?),
            Some('{') => ValueKind::Table(self.table()?),
            Some(c) if c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'i') => {
                ValueKind::Number(self.number()?)
            }
            Some(c) => return Err(self.err(format!("expected a value, found `{c}`"))),
            None => return Err(self.err("expected a value, found end of line")),
        };
        Ok(Spanned {
            line: self.line,
            column,
            item,
        })
    }

    fn number(&mut self) -> Result<String, SyntaxError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        {
            self.pos += 1;
        }
        let raw: String = self.chars[start..self.pos].iter().collect();
        if parse_real(&raw).is_none() {
            self.pos = start;
            return Err(self.err(format!("invalid number `{raw}`")));
        }
        Ok(raw)
    }

    fn string(&mut self) -> Result<String, SyntaxError> {
        self.expect('"')?;
        let mut s = String::new();
        loop {
            match self.peek() {
                None => return Err(self.err("unterminated string")),
                Some('"') => {
                    self.pos += 1;
                    return Ok(s);
                }
                Some('\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(c @ ('"' | '\\')) => s.push(c),
                        _ => return Err(self.err("unsupported escape")),
                    }
                    self.pos += 1;
                }
                Some(c) => {
                    s.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn array(&mut self) -> Result<Vec<Value>, SyntaxError> {
        self.expect('[')?;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(']') {
                self.pos += 1;
                return Ok(items);
            }
            items.push(self.value()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(']') => {}
                _ => return Err(self.err("expected `,` or `]`")),
            }
        }
    }

    fn table(&mut self) -> Result<Vec<(Spanned<String>, Value)>, SyntaxError> {
        self.expect('{')?;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some('}') {
                self.pos += 1;
                return Ok(items);
            }
            let key = self.key()?;
            self.skip_ws();
            self.expect('=')?;
            let value = self.value()?;
            items.push((key, value));
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some('}') => {}
                _ => return Err(self.err("expected `,` or `}`")),
            }
        }
    }
}

/// `"..."` with `"` and `\` escaped.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}
