//! Finite directed square complexes with loops and multi-edges, their
//! vertex links, and the local checks (NPC, VH, CSC, admissible orientation).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unionfind::{ParityUnionFind, UnionFind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vh {
    V,
    H,
}

impl Vh {
    pub fn symbol(self) -> &'static str {
        match self {
            Vh::V => "V",
            Vh::H => "H",
        }
    }
}

/// Traversal direction of an edge along a square's boundary walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }

    pub fn parse(s: &str) -> Option<Sign> {
        match s {
            "+" => Some(Sign::Plus),
            "-" => Some(Sign::Minus),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum End {
    Source,
    Target,
}

/// One end of an edge; a loop contributes two distinct ends at its vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeEnd {
    pub edge: usize,
    pub end: End,
}

impl EdgeEnd {
    pub fn source(edge: usize) -> Self {
        EdgeEnd { edge, end: End::Source }
    }

    pub fn target(edge: usize) -> Self {
        EdgeEnd { edge, end: End::Target }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub name: String,
    pub vtype: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub name: String,
    pub src: usize,
    pub dst: usize,
    pub color: Option<String>,
    pub vh: Option<Vh>,
}

impl Edge {
    pub fn vertex_at(&self, end: End) -> usize {
        match end {
            End::Source => self.src,
            End::Target => self.dst,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Side {
    pub edge: usize,
    pub sign: Sign,
}

impl Side {
    pub fn new(edge: usize, sign: Sign) -> Self {
        Side { edge, sign }
    }

    /// The edge-end at which the walk enters this side.
    pub fn start_end(self) -> EdgeEnd {
        match self.sign {
            Sign::Plus => EdgeEnd::source(self.edge),
            Sign::Minus => EdgeEnd::target(self.edge),
        }
    }

    /// The edge-end at which the walk leaves this side.
    pub fn finish_end(self) -> EdgeEnd {
        match self.sign {
            Sign::Plus => EdgeEnd::target(self.edge),
            Sign::Minus => EdgeEnd::source(self.edge),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Square {
    pub sides: [Side; 4],
}

/// Corner `index` of a square sits at the start of side `index`, between
/// the finish of side `index - 1` (`a`) and the start of side `index` (`b`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corner {
    pub square: usize,
    pub index: usize,
    pub a: EdgeEnd,
    pub b: EdgeEnd,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareComplex {
    name: String,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    squares: Vec<Square>,
    vertex_index: BTreeMap<String, usize>,
    edge_index: BTreeMap<String, usize>,
    ends: Vec<Vec<EdgeEnd>>,
    corners: Vec<Vec<Corner>>,
}

impl SquareComplex {
    pub fn new(name: impl Into<String>, vertices: Vec<Vertex>, edges: Vec<Edge>, squares: Vec<Square>) -> Result<Self> {
        let mut vertex_index = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.name.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate vertex `{}`", v.name)));
            }
        }
        let mut edge_index = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            if e.src >= vertices.len() || e.dst >= vertices.len() {
                return Err(Error::Validation(format!("edge `{}` has a dangling endpoint", e.name)));
            }
            if edge_index.insert(e.name.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate edge `{}`", e.name)));
            }
        }
        for (q, sq) in squares.iter().enumerate() {
            for s in &sq.sides {
                if s.edge >= edges.len() {
                    return Err(Error::Validation(format!("square {q} references a missing edge")));
                }
            }
            for i in 0..4 {
                let here = sq.sides[i];
                let next = sq.sides[(i + 1) % 4];
                let finish = edges[here.edge].vertex_at(here.finish_end().end);
                let start = edges[next.edge].vertex_at(next.start_end().end);
                if finish != start {
                    return Err(Error::Validation(format!(
                        "square {q} does not close: side {i} ends at `{}`, side {} starts at `{}`",
                        vertices[finish].name,
                        (i + 1) % 4,
                        vertices[start].name
                    )));
                }
            }
        }
        let mut ends = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            ends[e.src].push(EdgeEnd::source(i));
            ends[e.dst].push(EdgeEnd::target(i));
        }
        for list in &mut ends {
            list.sort();
        }
        let mut corners = vec![Vec::new(); vertices.len()];
        for (q, sq) in squares.iter().enumerate() {
            for index in 0..4 {
                let b = sq.sides[index];
                let a = sq.sides[(index + 3) % 4];
                let v = edges[b.edge].vertex_at(b.start_end().end);
                corners[v].push(Corner { square: q, index, a: a.finish_end(), b: b.start_end() });
            }
        }
        Ok(SquareComplex { name: name.into(), vertices, edges, squares, vertex_index, edge_index, ends, corners })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        SquareComplex::new(name, Vec::new(), Vec::new(), Vec::new()).expect("empty complex is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn squares(&self) -> &[Square] {
        &self.squares
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.vertices.len(), self.edges.len(), self.squares.len())
    }

    pub fn vertex_id(&self, name: &str) -> Result<usize> {
        self.vertex_index.get(name).copied().ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn edge_id(&self, name: &str) -> Option<usize> {
        self.edge_index.get(name).copied()
    }

    pub fn vertex_of(&self, end: EdgeEnd) -> usize {
        self.edges[end.edge].vertex_at(end.end)
    }

    pub fn side_start(&self, side: Side) -> usize {
        self.vertex_of(side.start_end())
    }

    pub fn side_finish(&self, side: Side) -> usize {
        self.vertex_of(side.finish_end())
    }

    /// Edge-ends at `v`, sorted.
    pub fn ends_at(&self, v: usize) -> &[EdgeEnd] {
        &self.ends[v]
    }

    /// Square corners at `v`, in square order.
    pub fn corners_at(&self, v: usize) -> &[Corner] {
        &self.corners[v]
    }

    /// Out-edges of `v` (edge-ends of kind `Source` at `v`).
    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.ends[v].iter().filter(|e| e.end == End::Source).map(|e| e.edge)
    }

    pub fn end_label(&self, end: EdgeEnd) -> String {
        let tag = match end.end {
            End::Source => "s",
            End::Target => "t",
        };
        format!("{}.{}", self.edges[end.edge].name, tag)
    }

    pub fn link(&self, v: usize) -> VertexLink {
        let nodes = self.ends[v].clone();
        let link_edges =
            self.corners[v].iter().map(|c| LinkEdge { a: c.a, b: c.b, square: c.square, corner: c.index }).collect();
        VertexLink { vertex: v, nodes, link_edges }
    }

    /// Colors of all edges, sorted and deduplicated.
    pub fn palette(&self) -> BTreeSet<String> {
        self.edges.iter().filter_map(|e| e.color.clone()).collect()
    }
}

/// Incremental construction with name-based duplicates caught at `build`.
#[derive(Clone, Debug, Default)]
pub struct ComplexBuilder {
    name: String,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    squares: Vec<Square>,
}

impl ComplexBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ComplexBuilder { name: name.into(), ..Default::default() }
    }

    pub fn vertex(&mut self, name: impl Into<String>, vtype: Option<u8>) -> usize {
        self.vertices.push(Vertex { name: name.into(), vtype });
        self.vertices.len() - 1
    }

    pub fn edge(
        &mut self,
        name: impl Into<String>,
        src: usize,
        dst: usize,
        color: Option<&str>,
        vh: Option<Vh>,
    ) -> usize {
        self.edges.push(Edge { name: name.into(), src, dst, color: color.map(str::to_string), vh });
        self.edges.len() - 1
    }

    pub fn square(&mut self, sides: [(usize, Sign); 4]) -> usize {
        self.squares.push(Square { sides: sides.map(|(edge, sign)| Side { edge, sign }) });
        self.squares.len() - 1
    }

    pub fn build(self) -> Result<SquareComplex> {
        SquareComplex::new(self.name, self.vertices, self.edges, self.squares)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkEdge {
    pub a: EdgeEnd,
    pub b: EdgeEnd,
    pub square: usize,
    pub corner: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexLink {
    pub vertex: usize,
    pub nodes: Vec<EdgeEnd>,
    pub link_edges: Vec<LinkEdge>,
}

pub fn vertex_link(c: &SquareComplex, v: &str) -> Result<VertexLink> {
    Ok(c.link(c.vertex_id(v)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "witness")]
pub enum Verdict<W> {
    Pass,
    Fail(W),
}

impl<W> Verdict<W> {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Pass => None,
            Verdict::Fail(w) => Some(w),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NpcViolation {
    LinkLoop { vertex: usize, node: EdgeEnd, square: usize },
    MultiEdge { vertex: usize, a: EdgeEnd, b: EdgeEnd, squares: (usize, usize) },
    Triangle { vertex: usize, nodes: [EdgeEnd; 3] },
}

impl NpcViolation {
    pub fn vertex(&self) -> usize {
        match *self {
            NpcViolation::LinkLoop { vertex, .. }
            | NpcViolation::MultiEdge { vertex, .. }
            | NpcViolation::Triangle { vertex, .. } => vertex,
        }
    }

    pub fn describe(&self, c: &SquareComplex) -> String {
        let vname = &c.vertices()[self.vertex()].name;
        match self {
            NpcViolation::LinkLoop { node, square, .. } => {
                format!("link of {vname} has a loop at {} (square {square})", c.end_label(*node))
            }
            NpcViolation::MultiEdge { a, b, squares, .. } => format!(
                "link of {vname} has a double edge {}–{} (squares {} and {})",
                c.end_label(*a),
                c.end_label(*b),
                squares.0,
                squares.1
            ),
            NpcViolation::Triangle { nodes, .. } => format!(
                "link of {vname} has a triangle {} {} {}",
                c.end_label(nodes[0]),
                c.end_label(nodes[1]),
                c.end_label(nodes[2])
            ),
        }
    }
}

/// Flagness of a square-complex link reduces to: simple and triangle-free.
pub fn check_npc(c: &SquareComplex) -> Verdict<NpcViolation> {
    for v in 0..c.vertices().len() {
        if let Some(w) = npc_at(c, v) {
            return Verdict::Fail(w);
        }
    }
    Verdict::Pass
}

fn npc_at(c: &SquareComplex, v: usize) -> Option<NpcViolation> {
    let mut seen: BTreeMap<(EdgeEnd, EdgeEnd), usize> = BTreeMap::new();
    let mut adj: BTreeMap<EdgeEnd, BTreeSet<EdgeEnd>> = BTreeMap::new();
    for corner in c.corners_at(v) {
        if corner.a == corner.b {
            return Some(NpcViolation::LinkLoop { vertex: v, node: corner.a, square: corner.square });
        }
        let key = if corner.a < corner.b { (corner.a, corner.b) } else { (corner.b, corner.a) };
        if let Some(&first) = seen.get(&key) {
            return Some(NpcViolation::MultiEdge { vertex: v, a: key.0, b: key.1, squares: (first, corner.square) });
        }
        seen.insert(key, corner.square);
        adj.entry(key.0).or_default().insert(key.1);
        adj.entry(key.1).or_default().insert(key.0);
    }
    for &(a, b) in seen.keys() {
        let (na, nb) = (&adj[&a], &adj[&b]);
        if let Some(&z) = na.intersection(nb).find(|&&z| z > b) {
            return Some(NpcViolation::Triangle { vertex: v, nodes: [a, b, z] });
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VhViolation {
    pub square: usize,
    pub side: usize,
}

pub fn check_vh(c: &SquareComplex) -> Result<Verdict<VhViolation>> {
    require_tags(c)?;
    for (q, sq) in c.squares().iter().enumerate() {
        for i in 0..4 {
            let here = c.edges()[sq.sides[i].edge].vh;
            let next = c.edges()[sq.sides[(i + 1) % 4].edge].vh;
            if here == next {
                return Ok(Verdict::Fail(VhViolation { square: q, side: i }));
            }
        }
    }
    Ok(Verdict::Pass)
}

fn require_tags(c: &SquareComplex) -> Result<()> {
    match c.edges().iter().find(|e| e.vh.is_none()) {
        Some(e) => Err(Error::MissingTags(e.name.clone())),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerPair {
    pub vertex: usize,
    pub vertical: EdgeEnd,
    pub horizontal: EdgeEnd,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CscReport {
    /// First (vertical end, horizontal end) pair lying in no square corner.
    pub uncovered: Option<CornerPair>,
    /// Every covered pair lies in exactly one corner.
    pub unique: bool,
    pub pairs: usize,
}

impl CscReport {
    pub fn is_pass(&self) -> bool {
        self.uncovered.is_none()
    }
}

pub fn check_csc(c: &SquareComplex) -> Result<CscReport> {
    require_tags(c)?;
    let vh = |e: EdgeEnd| c.edges()[e.edge].vh;
    let mut uncovered = None;
    let mut unique = true;
    let mut pairs = 0;
    for v in 0..c.vertices().len() {
        let mut count: BTreeMap<(EdgeEnd, EdgeEnd), usize> = BTreeMap::new();
        for corner in c.corners_at(v) {
            let key = match (vh(corner.a), vh(corner.b)) {
                (Some(Vh::V), Some(Vh::H)) => (corner.a, corner.b),
                (Some(Vh::H), Some(Vh::V)) => (corner.b, corner.a),
                _ => continue,
            };
            *count.entry(key).or_default() += 1;
        }
        let ends = c.ends_at(v);
        for &ve in ends.iter().filter(|e| vh(**e) == Some(Vh::V)) {
            for &he in ends.iter().filter(|e| vh(**e) == Some(Vh::H)) {
                pairs += 1;
                match count.get(&(ve, he)) {
                    None => {
                        if uncovered.is_none() {
                            uncovered = Some(CornerPair { vertex: v, vertical: ve, horizontal: he });
                        }
                    }
                    Some(&k) if k > 1 => unique = false,
                    Some(_) => {}
                }
            }
        }
    }
    Ok(CscReport { uncovered, unique, pairs })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientationViolation {
    pub square: usize,
    pub sides: (usize, usize),
}

/// Opposite sides point the same way iff the walk traverses them with opposite signs.
pub fn check_admissible_orientation(c: &SquareComplex) -> Verdict<OrientationViolation> {
    for (q, sq) in c.squares().iter().enumerate() {
        for (i, j) in [(0, 2), (1, 3)] {
            if sq.sides[i].sign == sq.sides[j].sign {
                return Verdict::Fail(OrientationViolation { square: q, sides: (i, j) });
            }
        }
    }
    Verdict::Pass
}

/// Closure of elementary parallelism on edges, with relative direction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parallelism {
    /// Dense class id per edge, numbered by least edge.
    pub class: Vec<usize>,
    /// Whether the edge points against its class representative.
    pub flip: Vec<bool>,
    /// Per class: a consistent direction exists.
    pub two_sided: Vec<bool>,
    /// Per class: least square where the direction propagation contradicts itself.
    pub flip_square: Vec<Option<usize>>,
}

impl Parallelism {
    pub fn count(&self) -> usize {
        self.two_sided.len()
    }

    pub fn admissible_orientation_exists(&self) -> bool {
        self.two_sided.iter().all(|&t| t)
    }

    pub fn members(&self, class: usize) -> Vec<usize> {
        (0..self.class.len()).filter(|&e| self.class[e] == class).collect()
    }
}

pub fn parallelism(c: &SquareComplex) -> Parallelism {
    let n = c.edges().len();
    let mut uf = UnionFind::new(n);
    let mut puf = ParityUnionFind::new(n);
    let mut bad = Vec::new();
    for (q, sq) in c.squares().iter().enumerate() {
        for (i, j) in [(0, 2), (1, 3)] {
            let (a, b) = (sq.sides[i], sq.sides[j]);
            uf.union(a.edge, b.edge);
            if !puf.relate(a.edge, b.edge, a.sign == b.sign) {
                bad.push((q, a.edge));
            }
        }
    }
    let (class, k) = uf.classes();
    let flip = (0..n).map(|e| puf.find(e).1).collect();
    let mut two_sided = vec![true; k];
    let mut flip_square = vec![None; k];
    for (q, e) in bad {
        let id = class[e];
        two_sided[id] = false;
        if flip_square[id].is_none() {
            flip_square[id] = Some(q);
        }
    }
    Parallelism { class, flip, two_sided, flip_square }
}

/// Subdivide every square into four; halves inherit color, tag and direction.
pub fn barycentric_subdivision(c: &SquareComplex) -> SquareComplex {
    let mut b = ComplexBuilder::new(format!("beta({})", c.name()));
    let nv = c.vertices().len();
    for v in c.vertices() {
        b.vertex(v.name.clone(), Some(0));
    }
    let mid: Vec<usize> = c.edges().iter().map(|e| b.vertex(format!("m.{}", e.name), Some(1))).collect();
    let center: Vec<usize> = (0..c.squares().len()).map(|q| b.vertex(format!("q.{q}"), Some(2))).collect();
    debug_assert_eq!(mid.first().copied().unwrap_or(nv), nv);
    let mut halves = Vec::with_capacity(c.edges().len());
    for (i, e) in c.edges().iter().enumerate() {
        let col = e.color.as_deref();
        let h0 = b.edge(format!("{}.0", e.name), e.src, mid[i], col, e.vh);
        let h1 = b.edge(format!("{}.1", e.name), mid[i], e.dst, col, e.vh);
        halves.push((h0, h1));
    }
    for (q, sq) in c.squares().iter().enumerate() {
        // Center edge j joins mid(side j) and the center, parallel to sides j±1.
        let mut spokes = [(0usize, Sign::Plus); 4];
        for j in 0..4 {
            let side = sq.sides[j];
            let along = sq.sides[(j + 1) % 4];
            let vh = c.edges()[along.edge].vh;
            let outward = along.sign == Sign::Plus;
            let (s, t) = if outward { (mid[side.edge], center[q]) } else { (center[q], mid[side.edge]) };
            let id = b.edge(format!("q.{q}.{j}"), s, t, None, vh);
            spokes[j] = (id, if outward { Sign::Plus } else { Sign::Minus });
        }
        for j in 0..4 {
            let cur = sq.sides[j];
            let prev = sq.sides[(j + 3) % 4];
            let first = match cur.sign {
                Sign::Plus => (halves[cur.edge].0, Sign::Plus),
                Sign::Minus => (halves[cur.edge].1, Sign::Minus),
            };
            let (sj, dj) = spokes[j];
            let (sp, dp) = spokes[(j + 3) % 4];
            let last = match prev.sign {
                Sign::Plus => (halves[prev.edge].1, Sign::Plus),
                Sign::Minus => (halves[prev.edge].0, Sign::Minus),
            };
            b.square([first, (sj, dj), (sp, dp.flip()), last]);
        }
    }
    b.build().expect("subdivision of a valid complex is valid")
}

/// Attach to every 1-vertex a pendant directed path whose length encodes
/// the color of the subdivided edge.
pub fn attach_tips(c: &SquareComplex, r: &BTreeMap<String, usize>) -> Result<SquareComplex> {
    if let Some(v) = c.vertices().iter().find(|v| !matches!(v.vtype, Some(0..=2))) {
        return Err(Error::NotSubdivided(format!("vertex `{}` has no 0/1/2 type", v.name)));
    }
    let mut root_color = Vec::new();
    for (i, v) in c.vertices().iter().enumerate() {
        if v.vtype != Some(1) {
            continue;
        }
        let color = c
            .ends_at(i)
            .iter()
            .find_map(|e| c.edges()[e.edge].color.clone())
            .ok_or_else(|| Error::NotSubdivided(format!("1-vertex `{}` has no colored half", v.name)))?;
        root_color.push((i, color));
    }
    let colors: BTreeSet<String> = root_color.iter().map(|(_, col)| col.clone()).collect();
    let keys: BTreeSet<String> = r.keys().cloned().collect();
    if keys != colors {
        return Err(Error::NonBijectiveMap(format!("keys {keys:?} differ from colors {colors:?}")));
    }
    let values: BTreeSet<usize> = r.values().copied().collect();
    if values.len() != r.len() || values != (1..=r.len()).collect() {
        return Err(Error::NonBijectiveMap(format!("values {values:?}")));
    }
    let mut b = ComplexBuilder::new(format!("tips({})", c.name()));
    for v in c.vertices() {
        b.vertex(v.name.clone(), v.vtype);
    }
    for e in c.edges() {
        b.edge(e.name.clone(), e.src, e.dst, e.color.as_deref(), e.vh);
    }
    for sq in c.squares() {
        b.square(sq.sides.map(|s| (s.edge, s.sign)));
    }
    for (z, color) in root_color {
        let zname = c.vertices()[z].name.clone();
        let mut prev = z;
        for k in 1..=r[&color] {
            let t = b.vertex(format!("t.{zname}.{k}"), Some(3));
            b.edge(format!("r.{zname}.{k}"), prev, t, None, None);
            prev = t;
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_complex;

    fn torus() -> SquareComplex {
        parse_complex(include_str!("../../../data/torus.sqc")).unwrap()
    }

    fn single_square() -> SquareComplex {
        parse_complex(include_str!("../../../data/square.sqc")).unwrap()
    }

    #[test]
    fn torus_link_has_four_nodes_and_edges() {
        let c = torus();
        let link = vertex_link(&c, "v").unwrap();
        assert_eq!(link.nodes.len(), 4);
        assert_eq!(link.link_edges.len(), 4);
        assert!(matches!(vertex_link(&c, "nope"), Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn isolated_vertex_has_empty_link() {
        let mut b = ComplexBuilder::new("pt");
        b.vertex("p", None);
        let c = b.build().unwrap();
        let link = c.link(0);
        assert!(link.nodes.is_empty() && link.link_edges.is_empty());
    }

    #[test]
    fn open_walk_is_rejected() {
        let mut b = ComplexBuilder::new("open");
        let p = b.vertex("p", None);
        let q = b.vertex("q", None);
        let e = b.edge("e", p, q, None, None);
        let f = b.edge("f", p, q, None, None);
        b.square([(e, Sign::Plus), (f, Sign::Plus), (e, Sign::Minus), (f, Sign::Minus)]);
        assert!(matches!(b.build(), Err(Error::Validation(_))));
    }

    #[test]
    fn npc_on_small_complexes() {
        assert!(check_npc(&torus()).is_pass());
        assert!(check_npc(&single_square()).is_pass());
        let tri = parse_complex(include_str!("../../../data/link_triangle.sqc")).unwrap();
        match check_npc(&tri) {
            Verdict::Fail(NpcViolation::Triangle { vertex, .. }) => assert_eq!(vertex, 0),
            other => panic!("expected a link triangle, got {other:?}"),
        }
    }

    #[test]
    fn npc_reports_double_link_edge() {
        // Two squares on the same boundary share all four corners.
        let mut b = ComplexBuilder::new("pillow");
        let v = b.vertex("v", None);
        let a = b.edge("a", v, v, None, None);
        let c = b.edge("b", v, v, None, None);
        let sides = [(a, Sign::Plus), (c, Sign::Plus), (a, Sign::Minus), (c, Sign::Minus)];
        b.square(sides);
        b.square(sides);
        let cx = b.build().unwrap();
        assert!(matches!(check_npc(&cx), Verdict::Fail(NpcViolation::MultiEdge { .. })));
    }

    #[test]
    fn vh_checks() {
        assert!(check_vh(&torus()).unwrap().is_pass());
        let mut b = ComplexBuilder::new("vv");
        let v = b.vertex("v", None);
        let a = b.edge("a", v, v, None, Some(Vh::V));
        let c = b.edge("b", v, v, None, Some(Vh::V));
        b.square([(a, Sign::Plus), (c, Sign::Plus), (a, Sign::Minus), (c, Sign::Minus)]);
        assert!(!check_vh(&b.build().unwrap()).unwrap().is_pass());
        assert!(check_vh(&SquareComplex::empty("e")).unwrap().is_pass());
        let rose = parse_complex(include_str!("../../../data/rose.sqc")).unwrap();
        assert!(matches!(check_vh(&rose), Err(Error::MissingTags(_))));
    }

    #[test]
    fn csc_needs_squares() {
        let mut b = ComplexBuilder::new("bare");
        let v = b.vertex("v", None);
        b.edge("a", v, v, None, Some(Vh::V));
        b.edge("x", v, v, None, Some(Vh::H));
        let rep = check_csc(&b.build().unwrap()).unwrap();
        assert!(!rep.is_pass());
        let torus = check_csc(&torus()).unwrap();
        assert!(torus.is_pass() && torus.unique);
    }

    #[test]
    fn orientation_and_parallelism() {
        let t = torus();
        assert!(check_admissible_orientation(&t).is_pass());
        let p = parallelism(&t);
        assert_eq!(p.count(), 2);
        assert!(p.admissible_orientation_exists());
        let m = parse_complex(include_str!("../../../data/mobius.sqc")).unwrap();
        assert!(!check_admissible_orientation(&m).is_pass());
        let pm = parallelism(&m);
        let rung = pm.class[m.edge_id("r0").unwrap()];
        assert!(!pm.two_sided[rung]);
        assert_eq!(pm.members(rung).len(), 3);
    }

    #[test]
    fn subdivision_counts() {
        let s = barycentric_subdivision(&single_square());
        assert_eq!(s.counts(), (9, 12, 4));
        assert!(check_npc(&s).is_pass());
        assert!(check_admissible_orientation(&s).is_pass());
        let e = barycentric_subdivision(&SquareComplex::empty("e"));
        assert_eq!(e.counts(), (0, 0, 0));
        let bt = barycentric_subdivision(&torus());
        assert_eq!(bt.counts(), (4, 8, 4));
        assert!(check_npc(&bt).is_pass());
        assert!(check_vh(&bt).unwrap().is_pass());
    }

    #[test]
    fn tips_on_subdivided_torus() {
        let mut b = ComplexBuilder::new("t");
        let v = b.vertex("v", None);
        let a = b.edge("a", v, v, Some("a"), Some(Vh::H));
        let c = b.edge("b", v, v, Some("b"), Some(Vh::V));
        b.square([(a, Sign::Plus), (c, Sign::Plus), (a, Sign::Minus), (c, Sign::Minus)]);
        let bt = barycentric_subdivision(&b.build().unwrap());
        let r: BTreeMap<String, usize> = [("a".to_string(), 1), ("b".to_string(), 2)].into();
        let w = attach_tips(&bt, &r).unwrap();
        assert_eq!(w.counts(), (7, 11, 4));
        assert!(check_npc(&w).is_pass());
        let bad: BTreeMap<String, usize> = [("a".to_string(), 1), ("b".to_string(), 1)].into();
        assert!(matches!(attach_tips(&bt, &bad), Err(Error::NonBijectiveMap(_))));
        assert!(matches!(attach_tips(&torus(), &r), Err(Error::NotSubdivided(_))));
    }

    #[test]
    fn link_edges_total_four_per_square() {
        let c = barycentric_subdivision(&torus());
        let total: usize = (0..c.vertices().len()).map(|v| c.link(v).link_edges.len()).sum();
        assert_eq!(total, 4 * c.squares().len());
    }
}
