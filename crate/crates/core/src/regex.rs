//! Path expressions over edge labels.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! alt     := concat (('+' | '|') concat)*
//! concat  := postfix ('.'? postfix)*
//! postfix := primary ('*' | '?' | '+')*
//! primary := label | '(' alt ')'
//! label   := letter digit* ('_' alnum+)?  |  '<' name '>'
//! ```
//!
//! Juxtaposed letters are separate labels, so `abc*` is `a · b · c*`.
//! Longer label names are written in angle brackets: `<replyOf>*`.
//!
//! `+` is alternation when the next token can start an operand and the
//! one-or-more postfix operator otherwise (`a+b` vs `(ab)+`).

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Regex {
    Label(String),
    Concat(Vec<Regex>),
    Alt(Vec<Regex>),
    Star(Box<Regex>),
    Optional(Box<Regex>),
    Plus(Box<Regex>),
}

impl Regex {
    pub fn label(name: impl Into<String>) -> Self {
        Regex::Label(name.into())
    }

    /// Concatenation with nested concatenations flattened.
    pub fn concat(items: Vec<Regex>) -> Self {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Regex::Concat(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Regex::Concat(flat)
        }
    }

    /// Alternation with nested alternations flattened.
    pub fn alt(items: Vec<Regex>) -> Self {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Regex::Alt(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Regex::Alt(flat)
        }
    }

    pub fn star(inner: Regex) -> Self {
        Regex::Star(Box::new(inner))
    }

    pub fn optional(inner: Regex) -> Self {
        Regex::Optional(Box::new(inner))
    }

    pub fn plus(inner: Regex) -> Self {
        Regex::Plus(Box::new(inner))
    }

    /// Top-level concatenation factors; a non-concatenation is its own single factor.
    pub fn factors(&self) -> Vec<&Regex> {
        match self {
            Regex::Concat(items) => items.iter().collect(),
            other => vec![other],
        }
    }

    pub fn nullable(&self) -> bool {
        match self {
            Regex::Label(_) => false,
            Regex::Concat(items) => items.iter().all(Regex::nullable),
            Regex::Alt(items) => items.iter().any(Regex::nullable),
            Regex::Star(_) | Regex::Optional(_) => true,
            Regex::Plus(inner) => inner.nullable(),
        }
    }

    /// Distinct label names in order of first occurrence.
    pub fn labels(&self) -> Vec<String> {
        fn walk(node: &Regex, out: &mut Vec<String>) {
            match node {
                Regex::Label(name) => {
                    if !out.iter().any(|n| n == name) {
                        out.push(name.clone());
                    }
                }
                Regex::Concat(items) | Regex::Alt(items) => {
                    items.iter().for_each(|i| walk(i, out));
                }
                Regex::Star(inner) | Regex::Optional(inner) | Regex::Plus(inner) => {
                    walk(inner, out)
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Canonical text form; `parse(&r.render())` yields `r` back for any
    /// tree built through the flattening constructors.
    pub fn render(&self) -> String {
        let mut out = String::new();
        render_into(self, Prec::Alt, &mut out);
        out
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Alt,
    Concat,
    Postfix,
}

fn render_into(node: &Regex, ctx: Prec, out: &mut String) {
    match node {
        Regex::Label(name) => out.push_str(&render_label(name)),
        Regex::Alt(items) => {
            let wrap = ctx > Prec::Alt;
            if wrap {
                out.push('(');
            }
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push('+');
                }
                render_into(item, Prec::Concat, out);
            }
            if wrap {
                out.push(')');
            }
        }
        Regex::Concat(items) => {
            let wrap = ctx > Prec::Concat;
            if wrap {
                out.push('(');
            }
            for (i, item) in items.iter().enumerate() {
                let mut part = String::new();
                render_into(item, Prec::Postfix, &mut part);
                if i > 0 && needs_dot(out, &part) {
                    out.push('.');
                }
                out.push_str(&part);
            }
            if wrap {
                out.push(')');
            }
        }
        Regex::Star(inner) => {
            render_operand(inner, out);
            out.push('*');
        }
        Regex::Optional(inner) => {
            render_operand(inner, out);
            out.push('?');
        }
        Regex::Plus(inner) => {
            render_operand(inner, out);
            out.push('+');
        }
    }
}

/// Whether juxtaposing `next` after `prev` would lex differently: a
/// trailing `+` reads as alternation, and an underscored label swallows a
/// following letter.
fn needs_dot(prev: &str, next: &str) -> bool {
    if prev.ends_with('+') {
        return true;
    }
    let word: String = prev
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    word.contains('_') && next.starts_with(|c: char| c.is_ascii_alphanumeric())
}

fn render_operand(inner: &Regex, out: &mut String) {
    match inner {
        Regex::Label(_) | Regex::Star(_) | Regex::Optional(_) | Regex::Plus(_) => {
            render_into(inner, Prec::Postfix, out)
        }
        _ => {
            out.push('(');
            render_into(inner, Prec::Alt, out);
            out.push(')');
        }
    }
}

fn render_label(name: &str) -> String {
    if is_short_label(name) {
        name.to_string()
    } else {
        format!("<{name}>")
    }
}

fn is_short_label(name: &str) -> bool {
    let bytes = name.as_bytes();
    match lex_short_label(bytes, 0) {
        Some(end) => end == bytes.len(),
        None => false,
    }
}

/// End offset of a short label starting at `start`, if one starts there.
fn lex_short_label(bytes: &[u8], start: usize) -> Option<usize> {
    let first = *bytes.get(start)?;
    if !first.is_ascii_alphabetic() {
        return None;
    }
    let mut i = start + 1;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i + 1 < bytes.len() && bytes[i] == b'_' && bytes[i + 1].is_ascii_alphanumeric() {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
            i += 1;
        }
    }
    Some(i)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Label(String),
    LParen,
    RParen,
    Star,
    Question,
    Plus,
    Bar,
    Dot,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'*' => Tok::Star,
            b'?' => Tok::Question,
            b'+' => Tok::Plus,
            b'|' => Tok::Bar,
            b'.' => Tok::Dot,
            b'<' => {
                let close = text[i + 1..]
                    .find('>')
                    .ok_or_else(|| Error::syntax(i, "unterminated `<` label"))?;
                let name = &text[i + 1..i + 1 + close];
                if name.is_empty() || name.contains(['<', '(', ')']) {
                    return Err(Error::syntax(i, "invalid bracketed label"));
                }
                toks.push((i, Tok::Label(name.to_string())));
                i += close + 2;
                continue;
            }
            _ if c.is_ascii_alphabetic() => {
                let end = lex_short_label(bytes, i).unwrap();
                toks.push((i, Tok::Label(text[i..end].to_string())));
                i = end;
                continue;
            }
            _ => {
                let found = text[i..].chars().next().unwrap();
                return Err(Error::UnknownOperator { offset: i, found });
            }
        };
        toks.push((i, tok));
        i += 1;
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.len)
    }

    fn starts_operand(tok: Option<&Tok>) -> bool {
        matches!(tok, Some(Tok::Label(_)) | Some(Tok::LParen))
    }

    fn alt(&mut self) -> Result<Regex> {
        let mut items = vec![self.concat()?];
        loop {
            match self.peek() {
                Some(Tok::Bar) => {
                    self.pos += 1;
                    items.push(self.concat()?);
                }
                Some(Tok::Plus) if Self::starts_operand(self.peek_at(1)) => {
                    self.pos += 1;
                    items.push(self.concat()?);
                }
                _ => break,
            }
        }
        Ok(Regex::alt(items))
    }

    fn concat(&mut self) -> Result<Regex> {
        let mut items = Vec::new();
        loop {
            if Self::starts_operand(self.peek()) {
                items.push(self.postfix()?);
            } else if self.peek() == Some(&Tok::Dot) && !items.is_empty() {
                self.pos += 1;
                if !Self::starts_operand(self.peek()) {
                    return Err(Error::syntax(self.offset(), "expected operand after `.`"));
                }
            } else {
                break;
            }
        }
        if items.is_empty() {
            return Err(Error::syntax(self.offset(), "expected a label or `(`"));
        }
        Ok(Regex::concat(items))
    }

    fn postfix(&mut self) -> Result<Regex> {
        let mut node = self.primary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => node = Regex::star(node),
                Some(Tok::Question) => node = Regex::optional(node),
                Some(Tok::Plus) if !Self::starts_operand(self.peek_at(1)) => {
                    node = Regex::plus(node)
                }
                _ => break,
            }
            self.pos += 1;
        }
        Ok(node)
    }

    fn primary(&mut self) -> Result<Regex> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::Label(name)) => {
                self.pos += 1;
                Ok(Regex::Label(name))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.alt()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(Error::syntax(self.offset(), "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(Error::syntax(offset, "expected a label or `(`")),
        }
    }
}

/// Parse a path expression.
pub fn parse_regex(text: &str) -> Result<Regex> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(Error::syntax(0, "empty expression"));
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        len: text.len(),
    };
    let ast = parser.alt()?;
    if parser.pos != parser.toks.len() {
        let (offset, tok) = &parser.toks[parser.pos];
        return Err(Error::syntax(*offset, format!("unexpected {tok:?}")));
    }
    Ok(ast)
}

impl std::str::FromStr for Regex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_regex(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l(s: &str) -> Regex {
        Regex::label(s)
    }

    #[test]
    fn parses_table_three_shapes() {
        assert_eq!(
            parse_regex("abc*").unwrap(),
            Regex::Concat(vec![l("a"), l("b"), Regex::star(l("c"))])
        );
        assert_eq!(parse_regex("a").unwrap(), l("a"));
        assert_eq!(
            parse_regex("a?b*").unwrap(),
            Regex::Concat(vec![Regex::optional(l("a")), Regex::star(l("b"))])
        );
        assert_eq!(
            parse_regex("(a_1 + a_2 + a_3)b*").unwrap(),
            Regex::Concat(vec![
                Regex::Alt(vec![l("a_1"), l("a_2"), l("a_3")]),
                Regex::star(l("b"))
            ])
        );
        assert_eq!(
            parse_regex("abcd").unwrap(),
            Regex::Concat(vec![l("a"), l("b"), l("c"), l("d")])
        );
    }

    #[test]
    fn plus_is_alternation_or_postfix_by_context() {
        assert_eq!(parse_regex("a+b").unwrap(), Regex::Alt(vec![l("a"), l("b")]));
        assert_eq!(parse_regex("a|b").unwrap(), Regex::Alt(vec![l("a"), l("b")]));
        assert_eq!(parse_regex("a+").unwrap(), Regex::plus(l("a")));
        assert_eq!(
            parse_regex("(ab)+").unwrap(),
            Regex::plus(Regex::Concat(vec![l("a"), l("b")]))
        );
        assert_eq!(
            parse_regex("a+.b").unwrap(),
            Regex::Concat(vec![Regex::plus(l("a")), l("b")])
        );
        assert_eq!(
            parse_regex("a++b").unwrap(),
            Regex::Alt(vec![Regex::plus(l("a")), l("b")])
        );
    }

    #[test]
    fn bracketed_and_indexed_labels() {
        assert_eq!(
            parse_regex("<replyOf>*<hasCreator>").unwrap(),
            Regex::Concat(vec![Regex::star(l("replyOf")), l("hasCreator")])
        );
        assert_eq!(parse_regex("a12").unwrap(), l("a12"));
        assert_eq!(parse_regex("(a)").unwrap(), l("a"));
        assert_eq!(
            parse_regex("((ab)c)").unwrap(),
            Regex::Concat(vec![l("a"), l("b"), l("c")])
        );
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse_regex("ab)") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        match parse_regex("a(b") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
        match parse_regex("a#b") {
            Err(Error::UnknownOperator { offset, found }) => {
                assert_eq!((offset, found), (1, '#'))
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_regex("").is_err());
        assert!(parse_regex("   ").is_err());
        assert!(parse_regex("*a").is_err());
        assert!(parse_regex("a|").is_err());
        assert!(parse_regex("<abc").is_err());
    }

    #[test]
    fn render_examples() {
        for (src, want) in [
            ("abc*", "abc*"),
            ("a+b", "a+b"),
            ("(a+b)*c", "(a+b)*c"),
            ("(ab)*", "(ab)*"),
            ("a+.b", "a+.b"),
            ("<knows>+", "<knows>+"),
            ("a?b*", "a?b*"),
        ] {
            assert_eq!(parse_regex(src).unwrap().render(), want);
        }
    }

    fn arb_regex() -> impl Strategy<Value = Regex> {
        let leaf = prop_oneof![
            Just(l("a")),
            Just(l("b")),
            Just(l("c")),
            Just(l("a_1")),
            Just(l("knows")),
        ];
        leaf.prop_recursive(5, 32, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(Regex::concat),
                prop::collection::vec(inner.clone(), 2..4).prop_map(Regex::alt),
                inner.clone().prop_map(Regex::star),
                inner.clone().prop_map(Regex::optional),
                inner.prop_map(Regex::plus),
            ]
        })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(r in arb_regex()) {
            let text = r.render();
            let back = parse_regex(&text).unwrap();
            prop_assert_eq!(back, r, "rendered as {}", text);
        }
    }
}
