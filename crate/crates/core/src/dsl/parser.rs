use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{Diagnostic, DiagnosticKind};

/// Parses a program and resolves its cross-references.
pub fn parse(src: &str) -> Result<Program, Diagnostic> {
    let tokens = lex(src)?;
    let program = Parser { tokens, at: 0 }.program()?;
    resolve(&program)?;
    Ok(program)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, Diagnostic> {
        let t = self.peek();
        Err(Diagnostic::syntax(t.pos, format!("expected {expected}, found {}", t.tok.describe())))
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == w)
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek().tok == Tok::Punct(c)
    }

    fn word(&mut self, w: &str) -> Result<Pos, Diagnostic> {
        if self.is_word(w) {
            Ok(self.next().pos)
        } else {
            self.error(&format!("`{w}`"))
        }
    }

    fn punct(&mut self, c: char) -> Result<(), Diagnostic> {
        if self.is_punct(c) {
            self.next();
            Ok(())
        } else {
            self.error(&format!("`{c}`"))
        }
    }

    fn ident(&mut self) -> Result<Ident, Diagnostic> {
        match &self.peek().tok {
            Tok::Ident(s) if !super::KEYWORDS.contains(&s.as_str()) => {
                let t = self.next();
                let Tok::Ident(name) = t.tok else { unreachable!() };
                Ok(Ident { name, pos: t.pos })
            }
            _ => self.error("a name"),
        }
    }

    fn int(&mut self) -> Result<u64, Diagnostic> {
        match self.peek().tok {
            Tok::Int(n) => {
                self.next();
                Ok(n)
            }
            _ => self.error("an integer"),
        }
    }

    fn number(&mut self) -> Result<f64, Diagnostic> {
        let neg = self.is_punct('-');
        if neg {
            self.next();
        }
        let x = match self.peek().tok {
            Tok::Int(n) => n as f64,
            Tok::Float(x) => x,
            _ => return self.error("a number"),
        };
        self.next();
        Ok(if neg { -x } else { x })
    }

    fn idents(&mut self) -> Result<Vec<Ident>, Diagnostic> {
        let mut out = vec![self.ident()?];
        while self.is_punct(',') {
            self.next();
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn program(&mut self) -> Result<Program, Diagnostic> {
        let mut items = Vec::new();
        while self.peek().tok != Tok::Eof {
            items.push(if self.is_word("topic") {
                Item::Topic(self.topic()?)
            } else if self.is_word("node") || self.is_word("plant") {
                Item::Node(self.node()?)
            } else if self.is_word("rta") {
                Item::Rta(self.rta()?)
            } else {
                return self.error("`topic`, `node`, `plant node` or `rta`");
            });
        }
        Ok(Program { items })
    }

    fn topic(&mut self) -> Result<TopicItem, Diagnostic> {
        self.word("topic")?;
        let name = self.ident()?;
        self.punct(':')?;
        let ty = self.type_expr()?;
        let default = if self.is_punct('=') {
            self.next();
            Some(self.literal()?)
        } else {
            None
        };
        self.punct(';')?;
        Ok(TopicItem { name, ty, default })
    }

    fn type_expr(&mut self) -> Result<TypeExpr, Diagnostic> {
        let Tok::Ident(w) = self.peek().tok.clone() else { return self.error("a type") };
        let ty = match w.as_str() {
            "bool" => TypeExpr::Bool,
            "scalar" | "float" => TypeExpr::Scalar,
            "coord" => TypeExpr::Coord,
            "vector" => {
                self.next();
                self.punct('(')?;
                let n = self.int()? as usize;
                if n == 0 {
                    let pos = self.tokens[self.at - 1].pos;
                    return Err(Diagnostic::syntax(pos, "vector dimension must be positive"));
                }
                self.punct(')')?;
                return Ok(TypeExpr::Vector(n));
            }
            "enum" => {
                self.next();
                self.punct('{')?;
                let names = self.idents()?;
                self.punct('}')?;
                return Ok(TypeExpr::Enum(names));
            }
            _ => return self.error("a type (`bool`, `scalar`, `coord`, `vector(N)` or `enum {..}`)"),
        };
        self.next();
        Ok(ty)
    }

    fn literal(&mut self) -> Result<Literal, Diagnostic> {
        if self.is_word("true") || self.is_word("false") {
            return Ok(Literal::Bool(self.next().tok == Tok::Ident("true".into())));
        }
        if self.is_punct('[') {
            self.next();
            let mut xs = Vec::new();
            if !self.is_punct(']') {
                xs.push(self.number()?);
                while self.is_punct(',') {
                    self.next();
                    xs.push(self.number()?);
                }
            }
            self.punct(']')?;
            return Ok(Literal::Vector(xs));
        }
        if matches!(self.peek().tok, Tok::Ident(_)) {
            return Ok(Literal::Symbol(self.ident()?));
        }
        Ok(Literal::Number(self.number()?))
    }

    /// Parses `{ field ...; }` where each field starts with a word; `f`
    /// handles one field and returns false for unknown words.
    fn block(
        &mut self,
        mut f: impl FnMut(&mut Self, &str, Pos) -> Result<bool, Diagnostic>,
    ) -> Result<Pos, Diagnostic> {
        self.punct('{')?;
        let mut seen: BTreeMap<String, Pos> = BTreeMap::new();
        while !self.is_punct('}') {
            let Tok::Ident(w) = self.peek().tok.clone() else { return self.error("a field or `}`") };
            let pos = self.peek().pos;
            if seen.insert(w.clone(), pos).is_some() {
                return Err(Diagnostic::new(DiagnosticKind::DuplicateName, pos, format!("field `{w}` given twice")));
            }
            self.next();
            if !f(self, &w, pos)? {
                return Err(Diagnostic::syntax(pos, format!("unknown field `{w}`")));
            }
            self.punct(';')?;
        }
        let close = self.peek().pos;
        self.next();
        Ok(close)
    }

    fn node(&mut self) -> Result<NodeItem, Diagnostic> {
        let plant = self.is_word("plant");
        if plant {
            self.next();
        }
        self.word("node")?;
        let name = self.ident()?;
        let (mut period, mut phase, mut subscribes, mut publishes, mut body) = (None, None, vec![], vec![], None);
        let close = self.block(|p, w, _| {
            match w {
                "period" => period = Some(p.int()?),
                "phase" => phase = Some(p.int()?),
                "subscribes" => subscribes = p.idents()?,
                "publishes" => publishes = p.idents()?,
                "fun" => body = Some(p.ident()?),
                _ => return Ok(false),
            }
            Ok(true)
        })?;
        let missing = |f: &str| Diagnostic::syntax(close, format!("node `{name}` is missing `{f}`"));
        Ok(NodeItem {
            period: period.ok_or_else(|| missing("period"))?,
            body: body.ok_or_else(|| missing("fun"))?,
            name: name.clone(),
            plant,
            phase,
            subscribes,
            publishes,
        })
    }

    fn rta(&mut self) -> Result<RtaItem, Diagnostic> {
        self.word("rta")?;
        let name = self.ident()?;
        let mut names: BTreeMap<&'static str, Ident> = BTreeMap::new();
        let mut period = None;
        let close = self.block(|p, w, _| {
            let key = match w {
                "period" => {
                    period = Some(p.int()?);
                    return Ok(true);
                }
                "ac" => "ac",
                "sc" => "sc",
                "dm" => "dm",
                "state" => "state",
                "safe" | "safer" | "ttf" | "reach" => {
                    p.word("fun")?;
                    match w {
                        "safe" => "safe",
                        "safer" => "safer",
                        "ttf" => "ttf",
                        _ => "reach",
                    }
                }
                _ => return Ok(false),
            };
            names.insert(key, p.ident()?);
            Ok(true)
        })?;
        let missing = |f: &str| Diagnostic::syntax(close, format!("rta `{name}` is missing `{f}`"));
        let mut take = |f: &'static str| names.remove(f).ok_or_else(|| missing(f));
        Ok(RtaItem {
            ac: take("ac")?,
            sc: take("sc")?,
            state: take("state")?,
            safe: take("safe")?,
            safer: take("safer")?,
            ttf: take("ttf")?,
            dm: take("dm").ok(),
            reach: take("reach").ok(),
            period: period.ok_or_else(|| missing("period"))?,
            name,
        })
    }
}

/// Duplicate names and dangling references.
fn resolve(p: &Program) -> Result<(), Diagnostic> {
    let dup = |i: &Ident| Diagnostic::new(DiagnosticKind::DuplicateName, i.pos, format!("`{i}` is declared twice"));
    let mut topics = BTreeMap::new();
    for t in p.topics() {
        if topics.insert(t.name.name.as_str(), t).is_some() {
            return Err(dup(&t.name));
        }
    }
    let mut procs = BTreeMap::new();
    for n in p.nodes() {
        if procs.insert(n.name.name.as_str(), n).is_some() {
            return Err(dup(&n.name));
        }
    }
    let unresolved = |i: &Ident, what: &str| {
        Diagnostic::new(DiagnosticKind::UnresolvedReference, i.pos, format!("unknown {what} `{i}`"))
    };
    for n in p.nodes() {
        if let Some(t) = n.subscribes.iter().chain(&n.publishes).find(|t| !topics.contains_key(t.name.as_str())) {
            return Err(unresolved(t, "topic"));
        }
    }
    let mut modules = BTreeMap::new();
    for r in p.modules() {
        if modules.insert(r.name.name.as_str(), r).is_some() || procs.contains_key(r.name.name.as_str()) {
            return Err(dup(&r.name));
        }
        for n in [&r.ac, &r.sc] {
            if !procs.contains_key(n.name.as_str()) {
                return Err(unresolved(n, "node"));
            }
        }
        if let Some(dm) = &r.dm {
            if procs.contains_key(dm.name.as_str()) {
                return Err(dup(dm));
            }
        }
        if !topics.contains_key(r.state.name.as_str()) {
            return Err(unresolved(&r.state, "topic"));
        }
    }
    Ok(())
}
