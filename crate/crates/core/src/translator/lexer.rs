//! Line-oriented tokenizer with Python-style indentation.
//!
//! Lines inside open brackets are joined. A more-indented line that does
//! not follow a `:` either continues the previous line (when one of the two
//! is visibly incomplete, as in a bare `condition` followed by its event on
//! the next lines) or is read as a statement of the enclosing block.

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Name(String),
    Num(f64),
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const OPS: [&str; 25] = [
    "**", "==", "!=", "<=", ">=", "<", ">", "~", "=", "+", "-", "*", "/", "(", ")", "[", "]", "{", "}", ",", ":",
    ";", ".", "%", "!",
];

fn err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

/// Tokens of one physical line, with the bracket depth after it.
fn scan_line(text: &str, line: usize, mut depth: i32, out: &mut Vec<Token>) -> Result<i32> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Name(chars[start..i].iter().collect()), line, col });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s.parse().map_err(|_| err(line, col, format!("bad number {s:?}")))?;
            out.push(Token { tok: Tok::Num(v), line, col });
            continue;
        }
        if c == '\'' || c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                let Some(&d) = chars.get(i) else {
                    return Err(err(line, col, "unterminated string"));
                };
                i += 1;
                if d == c {
                    break;
                }
                if d == '\\' {
                    let Some(&e) = chars.get(i) else {
                        return Err(err(line, col, "unterminated string"));
                    };
                    i += 1;
                    s.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        '0' => '\0',
                        other => other,
                    });
                } else {
                    s.push(d);
                }
            }
            out.push(Token { tok: Tok::Str(s), line, col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(op) = OPS.iter().find(|op| rest.starts_with(**op)) else {
            return Err(err(line, col, format!("unexpected character {c:?}")));
        };
        match *op {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth < 0 {
                    return Err(err(line, col, format!("unmatched {op:?}")));
                }
            }
            _ => {}
        }
        out.push(Token { tok: Tok::Op(op), line, col });
        i += op.len();
    }
    Ok(depth)
}

fn indent_of(text: &str) -> usize {
    let mut n = 0;
    for c in text.chars() {
        match c {
            ' ' => n += 1,
            '\t' => n = (n / 8 + 1) * 8,
            _ => break,
        }
    }
    n
}

fn is_binary_start(t: &Tok) -> bool {
    match t {
        Tok::Name(n) => n == "and" || n == "or",
        Tok::Op(op) => matches!(*op, "**" | "==" | "!=" | "<=" | ">=" | "<" | ">" | "+" | "*" | "/"),
        _ => false,
    }
}

fn is_incomplete_end(t: &Tok) -> bool {
    match t {
        Tok::Name(n) => matches!(n.as_str(), "condition" | "constrain" | "and" | "or" | "not" | "in"),
        Tok::Op(op) => !matches!(*op, ")" | "]" | "}" | ":"),
        _ => false,
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out: Vec<Token> = Vec::new();
    let mut stack: Vec<usize> = vec![0];
    let mut depth = 0;
    let mut last_line = 1;
    for (ln, text) in src.lines().enumerate() {
        let line = ln + 1;
        let mut toks = Vec::new();
        let new_depth = scan_line(text, line, depth, &mut toks)?;
        if toks.is_empty() {
            continue;
        }
        last_line = line;
        if depth > 0 {
            out.extend(toks);
            depth = new_depth;
            continue;
        }
        let ind = indent_of(text);
        let prev = out.iter().rev().find(|t| !matches!(t.tok, Tok::Indent | Tok::Dedent)).map(|t| t.tok.clone());
        let top = *stack.last().unwrap();
        let first_line = prev.is_none();
        let after_colon = prev == Some(Tok::Op(":"));
        let continues = !first_line
            && ind > top
            && !after_colon
            && (is_binary_start(&toks[0].tok) || prev.as_ref().is_some_and(is_incomplete_end));
        if continues {
            out.extend(toks);
            depth = new_depth;
            continue;
        }
        if !first_line {
            out.push(Token { tok: Tok::Newline, line: line - 1, col: 0 });
        }
        if ind > top {
            if after_colon {
                stack.push(ind);
                out.push(Token { tok: Tok::Indent, line, col: 1 });
            } else if first_line {
                return Err(err(line, 1, "unexpected indentation"));
            }
        } else if after_colon {
            return Err(err(line, 1, "expected an indented block"));
        } else {
            while ind < *stack.last().unwrap() {
                stack.pop();
                out.push(Token { tok: Tok::Dedent, line, col: 1 });
            }
        }
        out.extend(toks);
        depth = new_depth;
    }
    if depth > 0 {
        return Err(err(last_line, 1, "unclosed bracket at end of input"));
    }
    if !out.is_empty() {
        if out.last().map(|t| &t.tok) == Some(&Tok::Op(":")) {
            return Err(err(last_line, 1, "expected an indented block"));
        }
        out.push(Token { tok: Tok::Newline, line: last_line, col: 0 });
    }
    while stack.len() > 1 {
        stack.pop();
        out.push(Token { tok: Tok::Dedent, line: last_line, col: 1 });
    }
    out.push(Token { tok: Tok::Eof, line: last_line + 1, col: 1 });
    Ok(out)
}
