//! Line-oriented complex format, its JSON mirror, and DOT export.
//!
//! ```text
//! name torus
//! vertex v
//! edge a v v color=a vh=H
//! edge b v v vh=V
//! square a + b + a - b -
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::complex::{Edge, Side, Sign, Square, SquareComplex, Vertex, Vh};
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses either the text format or, if the document starts with `{`, its JSON mirror.
pub fn parse_complex(text: &str) -> Result<SquareComplex> {
    if text.trim_start().starts_with('{') {
        let doc: ComplexDoc = serde_json::from_str(text)?;
        return doc.into_complex();
    }
    let mut name = String::from("complex");
    let mut vertices = Vec::new();
    let mut vindex = BTreeMap::new();
    let mut edges = Vec::new();
    let mut eindex = BTreeMap::new();
    let mut squares = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "name" => {
                if tokens.len() != 2 {
                    return Err(parse_err(line_no, "expected `name NAME`"));
                }
                name = tokens[1].to_string();
            }
            "vertex" => {
                if tokens.len() < 2 {
                    return Err(parse_err(line_no, "expected `vertex NAME [type=K]`"));
                }
                let mut vtype = None;
                for attr in &tokens[2..] {
                    match attr.split_once('=') {
                        Some(("type", k)) => vtype = Some(k.parse::<u8>().map_err(|_| parse_err(line_no, "bad type"))?),
                        _ => return Err(parse_err(line_no, format!("unknown attribute `{attr}`"))),
                    }
                }
                vindex.insert(tokens[1].to_string(), vertices.len());
                vertices.push(Vertex { name: tokens[1].to_string(), vtype });
            }
            "edge" => {
                if tokens.len() < 4 {
                    return Err(parse_err(line_no, "expected `edge NAME SRC DST`"));
                }
                let lookup = |n: &str| {
                    vindex
                        .get(n)
                        .copied()
                        .ok_or_else(|| Error::Validation(format!("line {line_no}: dangling vertex `{n}`")))
                };
                let (src, dst) = (lookup(tokens[2])?, lookup(tokens[3])?);
                let mut color = None;
                let mut vh = None;
                for attr in &tokens[4..] {
                    match attr.split_once('=') {
                        Some(("color", c)) => color = Some(c.to_string()),
                        Some(("vh", "V")) => vh = Some(Vh::V),
                        Some(("vh", "H")) => vh = Some(Vh::H),
                        _ => return Err(parse_err(line_no, format!("unknown attribute `{attr}`"))),
                    }
                }
                eindex.insert(tokens[1].to_string(), edges.len());
                edges.push(Edge { name: tokens[1].to_string(), src, dst, color, vh });
            }
            "square" => {
                if tokens.len() != 9 {
                    return Err(parse_err(line_no, "expected `square E S E S E S E S`"));
                }
                let mut sides = [Side::new(0, Sign::Plus); 4];
                for (k, side) in sides.iter_mut().enumerate() {
                    let e = tokens[1 + 2 * k];
                    let edge = *eindex
                        .get(e)
                        .ok_or_else(|| Error::Validation(format!("line {line_no}: dangling edge `{e}`")))?;
                    let sign = Sign::parse(tokens[2 + 2 * k])
                        .ok_or_else(|| parse_err(line_no, format!("bad sign `{}`", tokens[2 + 2 * k])))?;
                    *side = Side::new(edge, sign);
                }
                squares.push(Square { sides });
            }
            other => return Err(parse_err(line_no, format!("unknown directive `{other}`"))),
        }
    }
    SquareComplex::new(name, vertices, edges, squares)
}

pub fn write_complex(c: &SquareComplex) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name {}", c.name());
    for v in c.vertices() {
        match v.vtype {
            Some(k) => {
                let _ = writeln!(out, "vertex {} type={k}", v.name);
            }
            None => {
                let _ = writeln!(out, "vertex {}", v.name);
            }
        }
    }
    for e in c.edges() {
        let _ = write!(out, "edge {} {} {}", e.name, c.vertices()[e.src].name, c.vertices()[e.dst].name);
        if let Some(col) = &e.color {
            let _ = write!(out, " color={col}");
        }
        if let Some(vh) = e.vh {
            let _ = write!(out, " vh={}", vh.symbol());
        }
        out.push('\n');
    }
    for sq in c.squares() {
        out.push_str("square");
        for s in &sq.sides {
            let _ = write!(out, " {} {}", c.edges()[s.edge].name, s.sign.symbol());
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexDoc {
    pub name: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub vtype: Option<u8>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub name: String,
    pub src: String,
    pub dst: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vh: Option<Vh>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SideDoc {
    pub edge: String,
    pub sign: Sign,
}

/// JSON mirror of the text format; cells are referenced by name.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexDoc {
    pub name: String,
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
    pub squares: Vec<Vec<SideDoc>>,
}

impl ComplexDoc {
    pub fn from_complex(c: &SquareComplex) -> Self {
        let vname = |v: usize| c.vertices()[v].name.clone();
        ComplexDoc {
            name: c.name().to_string(),
            vertices: c.vertices().iter().map(|v| VertexDoc { name: v.name.clone(), vtype: v.vtype }).collect(),
            edges: c
                .edges()
                .iter()
                .map(|e| EdgeDoc {
                    name: e.name.clone(),
                    src: vname(e.src),
                    dst: vname(e.dst),
                    color: e.color.clone(),
                    vh: e.vh,
                })
                .collect(),
            squares: c
                .squares()
                .iter()
                .map(|sq| {
                    sq.sides.iter().map(|s| SideDoc { edge: c.edges()[s.edge].name.clone(), sign: s.sign }).collect()
                })
                .collect(),
        }
    }

    pub fn into_complex(self) -> Result<SquareComplex> {
        let vindex: BTreeMap<&str, usize> =
            self.vertices.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
        let vid = |n: &str| vindex.get(n).copied().ok_or_else(|| Error::Validation(format!("dangling vertex `{n}`")));
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            edges.push(Edge {
                name: e.name.clone(),
                src: vid(&e.src)?,
                dst: vid(&e.dst)?,
                color: e.color.clone(),
                vh: e.vh,
            });
        }
        let eindex: BTreeMap<&str, usize> = self.edges.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect();
        let mut squares = Vec::with_capacity(self.squares.len());
        for sq in &self.squares {
            if sq.len() != 4 {
                return Err(Error::Validation(format!("square with {} sides", sq.len())));
            }
            let mut sides = [Side::new(0, Sign::Plus); 4];
            for (k, s) in sq.iter().enumerate() {
                let edge = *eindex
                    .get(s.edge.as_str())
                    .ok_or_else(|| Error::Validation(format!("dangling edge `{}`", s.edge)))?;
                sides[k] = Side::new(edge, s.sign);
            }
            squares.push(Square { sides });
        }
        let vertices = self.vertices.into_iter().map(|v| Vertex { name: v.name, vtype: v.vtype }).collect();
        SquareComplex::new(self.name, vertices, edges, squares)
    }
}

pub fn complex_to_json(c: &SquareComplex) -> String {
    serde_json::to_string_pretty(&ComplexDoc::from_complex(c)).expect("complex serializes")
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT export of the 1-skeleton; colors, tags and vertex types become attributes.
pub fn complex_to_dot(c: &SquareComplex) -> String {
    let mut out = format!("digraph \"{}\" {{\n", dot_escape(c.name()));
    for (i, v) in c.vertices().iter().enumerate() {
        let _ = write!(out, "  n{i} [label=\"{}\"", dot_escape(&v.name));
        if let Some(k) = v.vtype {
            let _ = write!(out, " type={k}");
        }
        out.push_str("];\n");
    }
    for e in c.edges() {
        let _ = write!(out, "  n{} -> n{} [label=\"{}\"", e.src, e.dst, dot_escape(&e.name));
        if let Some(col) = &e.color {
            let _ = write!(out, " color_class=\"{}\"", dot_escape(col));
        }
        if let Some(vh) = e.vh {
            let _ = write!(out, " vh={}", vh.symbol());
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_document() {
        let c = parse_complex("vertex v\nedge a v v\nedge b v v\nsquare a + b + a - b -\n").unwrap();
        assert_eq!(c.counts(), (1, 2, 1));
    }

    #[test]
    fn wise_document() {
        let c = parse_complex(include_str!("../../../data/wise_x.sqc")).unwrap();
        assert_eq!(c.counts(), (1, 5, 6));
        assert_eq!(c.name(), "wise_x");
    }

    #[test]
    fn syntax_and_validation_errors() {
        assert!(matches!(parse_complex("vertex v\nedge a v\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_complex("edge a v v\n"), Err(Error::Validation(_))));
        assert!(matches!(parse_complex("vertex v\nedge a v v\nsquare a + a + z - a -"), Err(Error::Validation(_))));
        let open = "vertex p\nvertex q\nedge e p q\nedge f p q\nsquare e + f + e - f -\n";
        assert!(matches!(parse_complex(open), Err(Error::Validation(_))));
        assert!(matches!(parse_complex("bogus\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn text_and_json_round_trip() {
        for src in [
            include_str!("../../../data/wise_x.sqc"),
            include_str!("../../../data/mobius.sqc"),
            include_str!("../../../data/square.sqc"),
        ] {
            let c = parse_complex(src).unwrap();
            assert_eq!(parse_complex(&write_complex(&c)).unwrap(), c);
            assert_eq!(parse_complex(&complex_to_json(&c)).unwrap(), c);
        }
    }

    #[test]
    fn dot_lists_every_edge() {
        let c = parse_complex(include_str!("../../../data/wise_x.sqc")).unwrap();
        let dot = complex_to_dot(&c);
        assert_eq!(dot.matches("->").count(), 5);
    }
}
