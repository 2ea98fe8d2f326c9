use std::fmt;

/// Line and column, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A name with its source position. Equality ignores the position, so
/// reparsed pretty-printed programs compare equal.
#[derive(Debug, Clone, Eq)]
pub struct Ident {
    pub name: String,
    pub pos: Pos,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), pos: Pos::default() }
    }
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeExpr {
    Bool,
    Scalar,
    /// Shorthand for `vector(3)`.
    Coord,
    Vector(usize),
    Enum(Vec<Ident>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Bool(bool),
    Number(f64),
    Vector(Vec<f64>),
    Symbol(Ident),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicItem {
    pub name: Ident,
    pub ty: TypeExpr,
    pub default: Option<Literal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeItem {
    pub name: Ident,
    /// Plant nodes model the environment and fire last in each instant.
    pub plant: bool,
    pub period: u64,
    pub phase: Option<u64>,
    pub subscribes: Vec<Ident>,
    pub publishes: Vec<Ident>,
    pub body: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtaItem {
    pub name: Ident,
    pub ac: Ident,
    pub sc: Ident,
    pub dm: Option<Ident>,
    /// Δ, the decision module's period.
    pub period: u64,
    pub state: Ident,
    pub safe: Ident,
    pub safer: Ident,
    pub ttf: Ident,
    pub reach: Option<Ident>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Topic(TopicItem),
    Node(NodeItem),
    Rta(RtaItem),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub items: Vec<Item>,
}

impl Program {
    pub fn topics(&self) -> impl Iterator<Item = &TopicItem> {
        self.items.iter().filter_map(|i| match i {
            Item::Topic(t) => Some(t),
            _ => None,
        })
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeItem> {
        self.items.iter().filter_map(|i| match i {
            Item::Node(n) => Some(n),
            _ => None,
        })
    }

    pub fn modules(&self) -> impl Iterator<Item = &RtaItem> {
        self.items.iter().filter_map(|i| match i {
            Item::Rta(r) => Some(r),
            _ => None,
        })
    }
}
