//! Line-oriented Python lexer.
//!
//! Produces the normalized token view used by the diff layer: comments,
//! whitespace and layout tokens (NEWLINE/INDENT/DEDENT) are never emitted, so
//! two fragments that differ only in formatting lex to equal sequences.
//!
//! The lexer is total. Unterminated strings run to the end of their line (or
//! the end of input for triple-quoted ones) and characters that start no
//! Python token are grouped into a single `Operator` token.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TokenKind {
    Name,
    Keyword,
    Number,
    String,
    Operator,
    Delimiter,
}

impl TokenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenKind::Name => "NAME",
            TokenKind::Keyword => "KEYWORD",
            TokenKind::Number => "NUMBER",
            TokenKind::String => "STRING",
            TokenKind::Operator => "OPERATOR",
            TokenKind::Delimiter => "DELIMITER",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based line.
    pub line: usize,
    /// 0-based column, counted in characters.
    pub column: usize,
}

/// Ordered tokens of a fragment.
///
/// Equality through [`token_eq`] ignores positions; the derived `PartialEq`
/// compares positions too.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<Token>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }

    /// Token texts joined by single spaces.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.text);
        }
        out
    }

    /// Position-free key, suitable for hashing and dedup.
    pub fn normalized(&self) -> Vec<(TokenKind, &str)> {
        self.tokens.iter().map(|t| (t.kind, t.text.as_str())).collect()
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

// Longest first within each length class.
const OPERATORS_3: &[&str] = &["**=", "//=", ">>=", "<<=", "..."];
const OPERATORS_2: &[&str] = &[
    "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "<>", "->", ":=", "+=", "-=", "*=", "/=", "%=",
    "&=", "|=", "^=", "@=",
];
const OPERATORS_1: &str = "+-*/%@&|^~<>=.,:;()[]{}`";

fn classify_op(op: &str) -> TokenKind {
    match op {
        "(" | ")" | "[" | "]" | "{" | "}" | "," | ":" | ";" | "." | "..." | "->" => {
            TokenKind::Delimiter
        }
        _ => TokenKind::Operator,
    }
}

fn is_name_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_name_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

struct Lexer<'s> {
    chars: Vec<char>,
    src: &'s str,
    // byte offset of each char, plus one past the end
    offsets: Vec<usize>,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'s> Lexer<'s> {
    fn new(src: &'s str) -> Self {
        let mut chars = Vec::with_capacity(src.len());
        let mut offsets = Vec::with_capacity(src.len() + 1);
        for (i, c) in src.char_indices() {
            chars.push(c);
            offsets.push(i);
        }
        offsets.push(src.len());
        Lexer {
            chars,
            src,
            offsets,
            pos: 0,
            line: 1,
            col: 0,
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 0;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn slice(&self, start: usize) -> &'s str {
        &self.src[self.offsets[start]..self.offsets[self.pos]]
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(k, c)| self.chars.get(self.pos + k) == Some(&c))
    }

    /// Length of a string prefix (r, b, u, f and two-letter combos) that is
    /// immediately followed by a quote, or `None`.
    fn string_prefix_len(&self) -> Option<usize> {
        let mut n = 0;
        while n < 3 {
            match self.peek(n) {
                Some('\'') | Some('"') => return Some(n),
                Some(c) if n < 2 && matches!(c.to_ascii_lowercase(), 'r' | 'b' | 'u' | 'f') => n += 1,
                _ => return None,
            }
        }
        None
    }

    fn lex_string(&mut self, prefix: usize) {
        for _ in 0..prefix {
            self.bump();
        }
        let quote = self.peek(0).unwrap();
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        if triple {
            self.bump();
            self.bump();
            self.bump();
            loop {
                match self.peek(0) {
                    None => return,
                    Some('\\') => {
                        self.bump();
                        self.bump();
                    }
                    Some(c) if c == quote && self.peek(1) == Some(quote) && self.peek(2) == Some(quote) => {
                        self.bump();
                        self.bump();
                        self.bump();
                        return;
                    }
                    Some(_) => {
                        self.bump();
                    }
                }
            }
        } else {
            self.bump();
            loop {
                match self.peek(0) {
                    None | Some('\n') => return,
                    Some('\\') => {
                        self.bump();
                        // a backslash-newline continues the literal
                        self.bump();
                    }
                    Some(c) if c == quote => {
                        self.bump();
                        return;
                    }
                    Some(_) => {
                        self.bump();
                    }
                }
            }
        }
    }

    fn eat_digits(&mut self, radix: u32) {
        while let Some(c) = self.peek(0) {
            if c == '_' || c.is_digit(radix) {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn lex_number(&mut self) {
        let first = self.peek(0).unwrap();
        if first == '0' {
            if let Some(r) = self.peek(1).map(|c| c.to_ascii_lowercase()) {
                let radix = match r {
                    'x' => Some(16),
                    'o' => Some(8),
                    'b' => Some(2),
                    _ => None,
                };
                if let Some(radix) = radix {
                    self.bump();
                    self.bump();
                    self.eat_digits(radix);
                    if matches!(self.peek(0), Some('l') | Some('L')) {
                        self.bump();
                    }
                    return;
                }
            }
        }
        if first != '.' {
            self.eat_digits(10);
        }
        if self.peek(0) == Some('.') {
            self.bump();
            self.eat_digits(10);
        }
        if matches!(self.peek(0), Some('e') | Some('E')) {
            let signed = matches!(self.peek(1), Some('+') | Some('-'));
            let digit_at = if signed { 2 } else { 1 };
            if self.peek(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                for _ in 0..digit_at {
                    self.bump();
                }
                self.eat_digits(10);
            }
        }
        if matches!(self.peek(0), Some('j') | Some('J') | Some('l') | Some('L')) {
            self.bump();
        }
    }

    fn match_operator(&self) -> Option<&'static str> {
        for op in OPERATORS_3.iter().chain(OPERATORS_2) {
            if self.starts_with(op) {
                return Some(op);
            }
        }
        let c = self.peek(0)?;
        let idx = OPERATORS_1.find(c)?;
        Some(&OPERATORS_1[idx..idx + c.len_utf8()])
    }

    fn starts_token(&self) -> bool {
        let Some(c) = self.peek(0) else { return false };
        c.is_whitespace()
            || c == '#'
            || c == '\\'
            || c == '\''
            || c == '"'
            || is_name_start(c)
            || c.is_ascii_digit()
            || self.match_operator().is_some()
    }

    fn run(mut self) -> TokenSeq {
        let mut tokens = Vec::new();
        while let Some(c) = self.peek(0) {
            let (start, line, column) = (self.pos, self.line, self.col);
            let kind = if c.is_whitespace() {
                self.bump();
                continue;
            } else if c == '#' {
                while !matches!(self.peek(0), None | Some('\n')) {
                    self.bump();
                }
                continue;
            } else if c == '\\' && matches!(self.peek(1), Some('\n')) {
                self.bump();
                self.bump();
                continue;
            } else if c == '\\' && self.peek(1) == Some('\r') && self.peek(2) == Some('\n') {
                self.bump();
                self.bump();
                self.bump();
                continue;
            } else if let Some(prefix) = self.string_prefix_len() {
                self.lex_string(prefix);
                TokenKind::String
            } else if is_name_start(c) {
                while self.peek(0).is_some_and(is_name_continue) {
                    self.bump();
                }
                if is_keyword(self.slice(start)) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Name
                }
            } else if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
                self.lex_number();
                TokenKind::Number
            } else if let Some(op) = self.match_operator() {
                for _ in 0..op.chars().count() {
                    self.bump();
                }
                classify_op(op)
            } else {
                self.bump();
                while self.peek(0).is_some() && !self.starts_token() {
                    self.bump();
                }
                TokenKind::Operator
            };
            tokens.push(Token {
                kind,
                text: self.slice(start).to_string(),
                line,
                column,
            });
        }
        TokenSeq { tokens }
    }
}

/// Lex `source` into normalized tokens.
pub fn tokenize(source: &str) -> TokenSeq {
    Lexer::new(source).run()
}

/// True iff both sequences have the same length and pairwise equal
/// `(kind, text)`.
pub fn token_eq(a: &TokenSeq, b: &TokenSeq) -> bool {
    a.len() == b.len()
        && a.tokens
            .iter()
            .zip(&b.tokens)
            .all(|(x, y)| x.kind == y.kind && x.text == y.text)
}
