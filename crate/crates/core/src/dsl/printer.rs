use std::fmt::Write;

use super::ast::*;

/// Canonical source text; `parse(&pretty(p)) == p`.
pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    let mut prev: Option<&Item> = None;
    for item in &p.items {
        // blank line between blocks and around runs of topics
        if prev.is_some_and(|q| !matches!((q, item), (Item::Topic(_), Item::Topic(_)))) {
            out.push('\n');
        }
        match item {
            Item::Topic(t) => {
                let _ = write!(out, "topic {} : {}", t.name, ty(&t.ty));
                if let Some(d) = &t.default {
                    let _ = write!(out, " = {}", literal(d));
                }
                out.push_str(";\n");
            }
            Item::Node(n) => {
                let _ = writeln!(out, "{}node {} {{", if n.plant { "plant " } else { "" }, n.name);
                let _ = writeln!(out, "    period {};", n.period);
                if let Some(ph) = n.phase {
                    let _ = writeln!(out, "    phase {ph};");
                }
                if !n.subscribes.is_empty() {
                    let _ = writeln!(out, "    subscribes {};", list(&n.subscribes));
                }
                if !n.publishes.is_empty() {
                    let _ = writeln!(out, "    publishes {};", list(&n.publishes));
                }
                let _ = writeln!(out, "    fun {};\n}}", n.body);
            }
            Item::Rta(r) => {
                let _ = writeln!(out, "rta {} {{", r.name);
                let _ = writeln!(out, "    ac {};\n    sc {};", r.ac, r.sc);
                if let Some(dm) = &r.dm {
                    let _ = writeln!(out, "    dm {dm};");
                }
                let _ = writeln!(out, "    period {};\n    state {};", r.period, r.state);
                let _ = writeln!(out, "    safe fun {};\n    safer fun {};\n    ttf fun {};", r.safe, r.safer, r.ttf);
                if let Some(reach) = &r.reach {
                    let _ = writeln!(out, "    reach fun {reach};");
                }
                out.push_str("}\n");
            }
        }
        prev = Some(item);
    }
    out
}

fn list(xs: &[Ident]) -> String {
    xs.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn ty(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Bool => "bool".into(),
        TypeExpr::Scalar => "scalar".into(),
        TypeExpr::Coord => "coord".into(),
        TypeExpr::Vector(n) => format!("vector({n})"),
        TypeExpr::Enum(names) => format!("enum {{ {} }}", list(names)),
    }
}

fn number(x: f64) -> String {
    format!("{x:?}")
}

fn literal(l: &Literal) -> String {
    match l {
        Literal::Bool(b) => b.to_string(),
        Literal::Number(x) => number(*x),
        Literal::Vector(xs) => format!("[{}]", xs.iter().map(|x| number(*x)).collect::<Vec<_>>().join(", ")),
        Literal::Symbol(s) => s.name.clone(),
    }
}
