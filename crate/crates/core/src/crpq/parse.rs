//! The query language:
//!
//! ```text
//! CRPQ name {
//!     vertex u2:Post;            // label optional
//!     edge u3 -[ab*]-> u2;
//!     distinct(u2, u4);
//!     bind(u5, "Sports");
//! }
//! ```

use super::{CrpqAtom, CrpqQuery, QueryVertex};
use crate::error::{Error, Result};
use crate::regex::parse_regex;

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with("//") {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                return;
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::syntax(self.pos, message)
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{token}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_alphanumeric() || c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return Err(self.err("expected an identifier"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn string(&mut self) -> Result<&'a str> {
        self.expect("\"")?;
        let rest = self.rest();
        let end = rest.find('"').ok_or_else(|| self.err("unterminated string"))?;
        self.pos += end + 1;
        Ok(&rest[..end])
    }
}

fn vertex_index(q: &CrpqQuery, name: &str) -> Result<usize> {
    q.vertex_index(name)
        .ok_or_else(|| Error::InvalidQuery(format!("undeclared query vertex `{name}`")))
}

pub(super) fn parse(text: &str) -> Result<CrpqQuery> {
    let mut c = Cursor { text, pos: 0 };
    c.expect("CRPQ")?;
    let name = c.ident()?.to_string();
    c.expect("{")?;
    let mut q = CrpqQuery {
        name,
        vertices: Vec::new(),
        atoms: Vec::new(),
        distinct: Vec::new(),
    };
    let mut binds = Vec::new();
    loop {
        if c.eat("}") {
            break;
        }
        let at = c.pos;
        match c.ident()? {
            "vertex" => {
                let name = c.ident()?;
                let label = if c.eat(":") { Some(c.ident()?.to_string()) } else { None };
                if q.vertex_index(name).is_some() {
                    return Err(Error::InvalidQuery(format!("query vertex `{name}` declared twice")));
                }
                q.vertices.push(QueryVertex {
                    name: name.to_string(),
                    label,
                    bind: None,
                });
            }
            "edge" => {
                let from = vertex_index(&q, c.ident()?)?;
                c.expect("-[")?;
                let rest = c.rest();
                let end = rest.find("]->").ok_or_else(|| c.err("expected `]->`"))?;
                let body = rest[..end].trim();
                let regex = parse_regex(body).map_err(|e| match e {
                    Error::Syntax { offset, message } => Error::Syntax {
                        offset: c.pos + offset,
                        message,
                    },
                    other => other,
                })?;
                c.pos += end + 3;
                let to = vertex_index(&q, c.ident()?)?;
                q.atoms.push(CrpqAtom {
                    from,
                    to,
                    text: body.to_string(),
                    regex,
                });
            }
            "distinct" => {
                c.expect("(")?;
                let a = vertex_index(&q, c.ident()?)?;
                c.expect(",")?;
                let b = vertex_index(&q, c.ident()?)?;
                c.expect(")")?;
                q.distinct.push((a, b));
            }
            "bind" => {
                c.expect("(")?;
                let a = vertex_index(&q, c.ident()?)?;
                c.expect(",")?;
                let value = c.string()?.to_string();
                c.expect(")")?;
                binds.push((a, value));
            }
            other => {
                return Err(Error::syntax(at, format!("unknown statement `{other}`")));
            }
        }
        c.expect(";")?;
    }
    c.skip_ws();
    if !c.rest().is_empty() {
        return Err(c.err("trailing input after `}`"));
    }
    for (a, value) in binds {
        q.vertices[a].bind = Some(value);
    }
    if q.vertices.is_empty() {
        return Err(Error::InvalidQuery("query declares no vertices".into()));
    }
    Ok(q)
}
