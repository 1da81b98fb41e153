//! Directed median-graph fragments: principal filters cut out of cover
//! balls, and the metric checks that are exact on them.
//!
//! A fragment of complete depth `D` holds every vertex reachable from the
//! root by a directed path of length at most `D`, with every out-star below
//! depth `D` complete. Two vertices of depth at most `D/2` have their join,
//! hence their whole interval, inside the fragment, so distances between
//! such interior vertices are distances of the infinite graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complex::{Verdict, Vh};
use crate::cover::{BallKind, CoverBall};
use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

const FAR: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FragEdge {
    pub src: usize,
    pub dst: usize,
    pub color: Option<String>,
    pub vh: Option<Vh>,
    /// Base edge under the covering map, when the fragment comes from a cover.
    pub base_edge: Option<usize>,
}

impl FragEdge {
    pub fn plain(src: usize, dst: usize) -> Self {
        FragEdge { src, dst, color: None, vh: None, base_edge: None }
    }
}

/// A directed 4-cycle `source → left → sink`, `source → right → sink`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FragSquare {
    pub source: usize,
    pub left: usize,
    pub right: usize,
    pub sink: usize,
    /// `source→left`, `source→right`, `left→sink`, `right→sink`.
    pub edges: [usize; 4],
}

#[derive(Clone, Debug)]
pub struct DomainFragment {
    names: Vec<String>,
    vtype: Vec<Option<u8>>,
    edges: Vec<FragEdge>,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    squares: Vec<FragSquare>,
    corners: Vec<Vec<(usize, usize)>>,
    depth: Vec<usize>,
    complete: usize,
    open: Vec<bool>,
    theta: Vec<usize>,
    theta_count: usize,
}

/// Incremental construction of a fragment rooted at vertex 0.
#[derive(Clone, Debug, Default)]
pub struct FragmentBuilder {
    names: Vec<String>,
    vtype: Vec<Option<u8>>,
    edges: Vec<FragEdge>,
    open: Vec<bool>,
}

impl FragmentBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, name: impl Into<String>, vtype: Option<u8>) -> usize {
        self.names.push(name.into());
        self.vtype.push(vtype);
        self.open.push(false);
        self.names.len() - 1
    }

    pub fn edge(&mut self, src: usize, dst: usize) -> usize {
        self.edge_full(FragEdge::plain(src, dst))
    }

    pub fn edge_full(&mut self, e: FragEdge) -> usize {
        self.edges.push(e);
        self.edges.len() - 1
    }

    /// Marks a vertex whose out-star the fragment does not hold completely.
    pub fn mark_open(&mut self, v: usize) {
        self.open[v] = true;
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    /// Vertices deeper than `complete` are marked open as well.
    pub fn build(self, complete: usize) -> Result<DomainFragment> {
        DomainFragment::assemble(self, complete)
    }
}

impl DomainFragment {
    fn assemble(b: FragmentBuilder, complete: usize) -> Result<Self> {
        let n = b.names.len();
        if n == 0 {
            return Err(Error::Validation("fragment has no root".into()));
        }
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        let mut seen_pairs = BTreeSet::new();
        for (i, e) in b.edges.iter().enumerate() {
            if e.src >= n || e.dst >= n {
                return Err(Error::Validation(format!("edge {i} has a dangling endpoint")));
            }
            if e.src == e.dst || !seen_pairs.insert((e.src.min(e.dst), e.src.max(e.dst))) {
                return Err(Error::Validation(format!("edge {i} is a loop or a multi-edge")));
            }
            out[e.src].push(i);
            inn[e.dst].push(i);
        }
        let mut depth = vec![usize::MAX; n];
        depth[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for &e in &out[x] {
                let t = b.edges[e].dst;
                if depth[t] == usize::MAX {
                    depth[t] = depth[x] + 1;
                    queue.push_back(t);
                }
            }
        }
        if let Some(v) = depth.iter().position(|&d| d == usize::MAX) {
            return Err(Error::Validation(format!("vertex `{}` is not reachable from the root", b.names[v])));
        }
        for e in &b.edges {
            if depth[e.dst] != depth[e.src] + 1 {
                return Err(Error::Validation(format!(
                    "edge {} -> {} does not raise the depth by one",
                    b.names[e.src], b.names[e.dst]
                )));
            }
        }
        let open: Vec<bool> = (0..n).map(|v| b.open[v] || depth[v] >= complete).collect();

        let mut squares = Vec::new();
        let mut corners = vec![Vec::new(); n];
        for s in 0..n {
            for (i, &e1) in out[s].iter().enumerate() {
                for &e2 in &out[s][i + 1..] {
                    let (l, r) = (b.edges[e1].dst, b.edges[e2].dst);
                    for &f1 in &out[l] {
                        let t = b.edges[f1].dst;
                        if let Some(&f2) = out[r].iter().find(|&&f| b.edges[f].dst == t) {
                            squares.push(FragSquare { source: s, left: l, right: r, sink: t, edges: [e1, e2, f1, f2] });
                            corners[s].push((e1, e2));
                            corners[l].push((e1, f1));
                            corners[r].push((e2, f2));
                            corners[t].push((f1, f2));
                        }
                    }
                }
            }
        }
        let mut uf = UnionFind::new(b.edges.len());
        for q in &squares {
            uf.union(q.edges[0], q.edges[3]);
            uf.union(q.edges[1], q.edges[2]);
        }
        let (theta, theta_count) = uf.classes();
        Ok(DomainFragment {
            names: b.names,
            vtype: b.vtype,
            edges: b.edges,
            out,
            inn,
            squares,
            corners,
            depth,
            complete,
            open,
            theta,
            theta_count,
        })
    }

    /// Directed `w × h` grid of squares rooted at its lower-left corner.
    pub fn grid(w: usize, h: usize) -> Self {
        let mut b = FragmentBuilder::new();
        let id = |i: usize, j: usize| j * (w + 1) + i;
        for j in 0..=h {
            for i in 0..=w {
                b.vertex(format!("{i},{j}"), None);
            }
        }
        for j in 0..=h {
            for i in 0..=w {
                if i < w {
                    b.edge(id(i, j), id(i + 1, j));
                }
                if j < h {
                    b.edge(id(i, j), id(i, j + 1));
                }
            }
        }
        b.build(w + h).expect("grids are valid fragments")
    }

    /// Complete out-tree with the given branching, truncated at `depth`.
    pub fn out_tree(branching: usize, depth: usize) -> Self {
        let mut b = FragmentBuilder::new();
        b.vertex("", None);
        let mut level = vec![0usize];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &p in &level {
                for k in 0..branching {
                    let name = format!("{}{k}", b.names[p]);
                    let c = b.vertex(name, None);
                    b.edge(p, c);
                    next.push(c);
                }
            }
            level = next;
        }
        b.build(depth).expect("trees are valid fragments")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex_id(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn vtype(&self, v: usize) -> Option<u8> {
        self.vtype[v]
    }

    pub fn edges(&self) -> &[FragEdge] {
        &self.edges
    }

    pub fn squares(&self) -> &[FragSquare] {
        &self.squares
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.inn[v]
    }

    /// Pairs of edges at `v` that span a square of the fragment.
    pub fn corners(&self, v: usize) -> &[(usize, usize)] {
        &self.corners[v]
    }

    /// Directed depth from the root, which is also the graph distance.
    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn complete_depth(&self) -> usize {
        self.complete
    }

    /// The out-star of `v` may be missing edges.
    pub fn is_open(&self, v: usize) -> bool {
        self.open[v]
    }

    /// Distances from an interior vertex to every other interior vertex are exact.
    pub fn is_interior(&self, v: usize) -> bool {
        2 * self.depth[v] <= self.complete && !self.open[v]
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.is_interior(v)).collect()
    }

    pub fn theta(&self, e: usize) -> usize {
        self.theta[e]
    }

    pub fn theta_count(&self) -> usize {
        self.theta_count
    }

    /// The out-neighbor of `v` across an edge of class `class`.
    pub fn step_class(&self, v: usize, class: usize) -> Option<usize> {
        self.out[v].iter().find(|&&e| self.theta[e] == class).map(|&e| self.edges[e].dst)
    }

    pub fn out_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.out[v].iter().map(move |&e| self.edges[e].dst)
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.out[v].iter().map(move |&e| self.edges[e].dst).chain(self.inn[v].iter().map(move |&e| self.edges[e].src))
    }

    /// Undirected breadth-first distances inside the fragment.
    pub fn bfs(&self, s: usize) -> Vec<u32> {
        let mut d = vec![FAR; self.len()];
        d[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for y in self.neighbors(x) {
                if d[y] == FAR {
                    d[y] = d[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        d
    }

    /// Vertices reachable from `s` by directed paths.
    pub fn reach(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for y in self.out_neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    }

    fn require_interior(&self, v: usize) -> Result<()> {
        if self.is_interior(v) {
            Ok(())
        } else {
            Err(Error::BoundaryUnsafe(format!("vertex `{}` is not interior", self.names[v])))
        }
    }

    fn interior_rows(&self) -> (Vec<usize>, Vec<Vec<u32>>) {
        let ids = self.interior();
        let rows = ids.iter().map(|&v| self.bfs(v)).collect();
        (ids, rows)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vertices: Vec<_> = (0..self.len())
            .map(|v| {
                serde_json::json!({
                    "name": self.names[v],
                    "type": self.vtype[v],
                    "depth": self.depth[v],
                    "interior": self.is_interior(v),
                    "open": self.open[v],
                })
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                serde_json::json!({
                    "src": self.names[e.src],
                    "dst": self.names[e.dst],
                    "color": e.color,
                    "vh": e.vh,
                    "base_edge": e.base_edge,
                    "theta": self.theta[i],
                })
            })
            .collect();
        serde_json::json!({
            "complete_depth": self.complete,
            "vertices": vertices,
            "edges": edges,
            "squares": self.squares.len(),
            "theta_classes": self.theta_count,
        })
    }

    /// Inverse of `to_json`; derived fields are recomputed.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct V {
            name: String,
            #[serde(rename = "type")]
            vtype: Option<u8>,
            #[serde(default)]
            open: bool,
        }
        #[derive(Deserialize)]
        struct E {
            src: String,
            dst: String,
            color: Option<String>,
            #[serde(default)]
            vh: Option<Vh>,
            #[serde(default)]
            base_edge: Option<usize>,
        }
        #[derive(Deserialize)]
        struct Doc {
            complete_depth: usize,
            vertices: Vec<V>,
            edges: Vec<E>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        let mut b = FragmentBuilder::new();
        let mut id = BTreeMap::new();
        for v in &doc.vertices {
            let x = b.vertex(v.name.clone(), v.vtype);
            if id.insert(v.name.as_str(), x).is_some() {
                return Err(Error::Validation(format!("duplicate vertex `{}`", v.name)));
            }
            if v.open {
                b.mark_open(x);
            }
        }
        let look = |n: &str| id.get(n).copied().ok_or_else(|| Error::UnknownVertex(n.to_string()));
        for e in doc.edges {
            b.edge_full(FragEdge {
                src: look(&e.src)?,
                dst: look(&e.dst)?,
                color: e.color,
                vh: e.vh,
                base_edge: e.base_edge,
            });
        }
        b.build(doc.complete_depth)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph fragment {\n");
        for v in 0..self.len() {
            let _ = writeln!(out, "  n{v} [label=\"{}\" depth={}];", self.names[v].replace('"', "\\\""), self.depth[v]);
        }
        for (i, e) in self.edges.iter().enumerate() {
            let _ = writeln!(out, "  n{} -> n{} [theta={}];", e.src, e.dst, self.theta[i]);
        }
        out.push_str("}\n");
        out
    }
}

/// The directed principal filter of ball vertex `v`, to the deepest level
/// at which every out-star is complete.
pub fn principal_filter(ball: &CoverBall, v: usize) -> Result<DomainFragment> {
    if v >= ball.vertex_count() || ball.dist(v) >= ball.radius() {
        return Err(Error::BoundaryUnsafe(format!("vertex {v} has no complete out-star in the ball")));
    }
    let complete = ball.radius() - ball.dist(v);
    let cells = ball.cells();
    let mut local = BTreeMap::new();
    let mut order = vec![v];
    let mut depth = vec![0usize];
    local.insert(v, 0usize);
    let mut i = 0;
    while i < order.len() {
        if depth[i] < complete {
            for e in cells.out_edges(order[i]) {
                let t = cells.edges()[e].dst;
                if let std::collections::btree_map::Entry::Vacant(slot) = local.entry(t) {
                    slot.insert(order.len());
                    order.push(t);
                    depth.push(depth[i] + 1);
                }
            }
        }
        i += 1;
    }
    let mut b = FragmentBuilder::new();
    for &x in &order {
        b.vertex(ball.name(x), cells.vertices()[x].vtype);
    }
    for (li, &x) in order.iter().enumerate() {
        if depth[li] >= complete {
            continue;
        }
        for e in cells.out_edges(x) {
            let edge = &cells.edges()[e];
            b.edge_full(FragEdge {
                src: li,
                dst: local[&edge.dst],
                color: edge.color.clone(),
                vh: edge.vh,
                base_edge: Some(ball.rho_edge(e)),
            });
        }
    }
    b.build(complete)
}

/// `I(u, w)` for interior `u`, `w`, sorted.
pub fn interval(frag: &DomainFragment, u: usize, w: usize) -> Result<Vec<usize>> {
    frag.require_interior(u)?;
    frag.require_interior(w)?;
    let (du, dw) = (frag.bfs(u), frag.bfs(w));
    let d = du[w];
    Ok((0..frag.len()).filter(|&x| du[x] != FAR && dw[x] != FAR && du[x] + dw[x] == d).collect())
}

/// `I(x,y) ∩ I(y,z) ∩ I(z,x)` for interior vertices.
pub fn medians(frag: &DomainFragment, x: usize, y: usize, z: usize) -> Result<Vec<usize>> {
    for v in [x, y, z] {
        frag.require_interior(v)?;
    }
    let (dx, dy, dz) = (frag.bfs(x), frag.bfs(y), frag.bfs(z));
    Ok(median_set(&dx, &dy, &dz, y, z))
}

fn median_set(dx: &[u32], dy: &[u32], dz: &[u32], y: usize, z: usize) -> Vec<usize> {
    let (xy, xz, yz) = (dx[y], dx[z], dy[z]);
    (0..dx.len())
        .filter(|&m| {
            dx[m] != FAR
                && dy[m] != FAR
                && dz[m] != FAR
                && dx[m] + dy[m] == xy
                && dx[m] + dz[m] == xz
                && dy[m] + dz[m] == yz
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MedianViolation {
    pub triple: [usize; 3],
    pub medians: Vec<usize>,
}

/// Every triple of interior vertices has exactly one median.
pub fn median_check(frag: &DomainFragment) -> Verdict<MedianViolation> {
    let (ids, rows) = frag.interior_rows();
    for a in 0..ids.len() {
        for b in a..ids.len() {
            for c in b..ids.len() {
                let m = median_set(&rows[a], &rows[b], &rows[c], ids[b], ids[c]);
                if m.len() != 1 {
                    return Verdict::Fail(MedianViolation { triple: [ids[a], ids[b], ids[c]], medians: m });
                }
            }
        }
    }
    Verdict::Pass
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CubeViolation {
    pub vertex: usize,
    pub edges: [usize; 3],
}

fn other_end(frag: &DomainFragment, e: usize, v: usize) -> usize {
    let edge = &frag.edges[e];
    if edge.src == v {
        edge.dst
    } else {
        edge.src
    }
}

/// Three squares pairwise sharing an edge at a common vertex span a 3-cube.
/// Only vertices whose distance-3 neighborhood is held completely are scanned.
pub fn check_three_cube(frag: &DomainFragment) -> Verdict<CubeViolation> {
    for v in 0..frag.len() {
        if frag.depth[v] + 3 > frag.complete || frag.open[v] {
            continue;
        }
        let link: BTreeSet<(usize, usize)> = frag.corners[v].iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        let nodes: BTreeSet<usize> = link.iter().flat_map(|&(a, b)| [a, b]).collect();
        let nodes: Vec<usize> = nodes.into_iter().collect();
        for (i, &e1) in nodes.iter().enumerate() {
            for (j, &e2) in nodes.iter().enumerate().skip(i + 1) {
                if !link.contains(&(e1, e2)) {
                    continue;
                }
                for &e3 in &nodes[j + 1..] {
                    if !link.contains(&(e1, e3)) || !link.contains(&(e2, e3)) {
                        continue;
                    }
                    let far = |a: usize, b: usize| -> Option<usize> {
                        let (p, q) = (other_end(frag, a, v), other_end(frag, b, v));
                        let np: BTreeSet<usize> = frag.neighbors(p).collect();
                        frag.neighbors(q).find(|&w| w != v && np.contains(&w))
                    };
                    let corners = [far(e1, e2), far(e1, e3), far(e2, e3)];
                    let completed = match corners {
                        [Some(a), Some(b), Some(c)] => {
                            let (na, nb): (BTreeSet<usize>, BTreeSet<usize>) =
                                (frag.neighbors(a).collect(), frag.neighbors(b).collect());
                            frag.neighbors(c).any(|w| w != v && na.contains(&w) && nb.contains(&w))
                        }
                        _ => false,
                    };
                    if !completed {
                        return Verdict::Fail(CubeViolation { vertex: v, edges: [e1, e2, e3] });
                    }
                }
            }
        }
    }
    Verdict::Pass
}

/// The split of the interior vertices induced by one Θ class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Halfspace {
    pub class: usize,
    /// Least interior edge of the class; the split is read off its ends.
    pub dual_edge: usize,
    /// Interior vertices closer to the edge's source; holds the root.
    pub tail: Vec<usize>,
    pub head: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThetaReport {
    pub class: Vec<usize>,
    pub count: usize,
    /// The class reaches an open vertex, so it may merge further outside.
    pub possibly_under_merged: Vec<bool>,
    pub halfspaces: Vec<Option<Halfspace>>,
}

fn is_interior_edge(frag: &DomainFragment, e: usize) -> bool {
    frag.is_interior(frag.edges[e].src) && frag.is_interior(frag.edges[e].dst)
}

pub fn theta_classes(frag: &DomainFragment) -> ThetaReport {
    let (ids, rows) = frag.interior_rows();
    let row_of: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut flagged = vec![false; frag.theta_count];
    let mut dual: Vec<Option<usize>> = vec![None; frag.theta_count];
    for (e, edge) in frag.edges.iter().enumerate() {
        let k = frag.theta[e];
        if frag.open[edge.dst] || frag.open[edge.src] {
            flagged[k] = true;
        }
        if dual[k].is_none() && is_interior_edge(frag, e) {
            dual[k] = Some(e);
        }
    }
    let halfspaces = dual
        .iter()
        .enumerate()
        .map(|(k, d)| {
            d.map(|e| {
                let (a, b) = (row_of[&frag.edges[e].src], row_of[&frag.edges[e].dst]);
                let (tail, head) = ids.iter().partition(|&&x| rows[a][x] < rows[b][x]);
                Halfspace { class: k, dual_edge: e, tail, head }
            })
        })
        .collect();
    ThetaReport { class: frag.theta.clone(), count: frag.theta_count, possibly_under_merged: flagged, halfspaces }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ThetaViolation {
    /// Djoković's relation disagrees with the square closure on two interior edges.
    Djokovic { e: usize, f: usize },
    /// Two interior edges of one class split the interior differently.
    Split { class: usize, e: usize, f: usize },
    /// The root lies on the head side of a class.
    Basepoint { class: usize },
}

/// Θ classes agree with Djoković's relation on interior edges, and each
/// class cuts the interior into two sides with the root on the tail side.
pub fn theta_halfspace_check(frag: &DomainFragment) -> Verdict<ThetaViolation> {
    let (ids, rows) = frag.interior_rows();
    let row_of: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let edges: Vec<usize> = (0..frag.edges.len()).filter(|&e| is_interior_edge(frag, e)).collect();
    let ends = |e: usize| (row_of[&frag.edges[e].src], row_of[&frag.edges[e].dst]);
    for (i, &e) in edges.iter().enumerate() {
        let (a, b) = ends(e);
        if frag.is_interior(0) && rows[a][0] > rows[b][0] {
            return Verdict::Fail(ThetaViolation::Basepoint { class: frag.theta[e] });
        }
        for &f in &edges[i + 1..] {
            let (c, d) = ends(f);
            let (x, y) = (frag.edges[f].src, frag.edges[f].dst);
            let related = rows[a][x] + rows[b][y] != rows[a][y] + rows[b][x];
            let same = frag.theta[e] == frag.theta[f];
            if related != same {
                return Verdict::Fail(ThetaViolation::Djokovic { e, f });
            }
            if same {
                let split =
                    |p: usize, q: usize| -> Vec<bool> { ids.iter().map(|&z| rows[p][z] < rows[q][z]).collect() };
                if split(a, b) != split(c, d) {
                    return Verdict::Fail(ThetaViolation::Split { class: frag.theta[e], e, f });
                }
            }
        }
    }
    Verdict::Pass
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderViolation {
    pub x: usize,
    pub y: usize,
    pub directed: bool,
    pub in_interval: bool,
}

/// On interior vertices, a directed path `x ⇝ y` exists iff `x ∈ I(root, y)`.
pub fn order_agreement_check(frag: &DomainFragment) -> Verdict<OrderViolation> {
    let (ids, rows) = frag.interior_rows();
    for (i, &x) in ids.iter().enumerate() {
        let reach = frag.reach(x);
        for &y in &ids {
            let in_interval = frag.depth[x] as u32 + rows[i][y] == frag.depth[y] as u32;
            if reach[y] != in_interval {
                return Verdict::Fail(OrderViolation { x, y, directed: reach[y], in_interval });
            }
        }
    }
    Verdict::Pass
}

fn require_metric_ball(ball: &CoverBall, v: usize) -> Result<usize> {
    if ball.kind() != BallKind::Ball {
        return Err(Error::BoundaryUnsafe("ambient checks need a metric ball".into()));
    }
    let region = ball.radius() / 2;
    if v >= ball.vertex_count() || ball.dist(v) > region {
        return Err(Error::BoundaryUnsafe(format!("vertex {v} lies outside the exact region")));
    }
    Ok(region)
}

fn ball_bfs(ball: &CoverBall, s: usize) -> Vec<u32> {
    let cells = ball.cells();
    let mut d = vec![FAR; ball.vertex_count()];
    d[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(x) = queue.pop_front() {
        for end in cells.ends_at(x) {
            let y = cells.edges()[end.edge].vertex_at(match end.end {
                crate::complex::End::Source => crate::complex::End::Target,
                crate::complex::End::Target => crate::complex::End::Source,
            });
            if d[y] == FAR {
                d[y] = d[x] + 1;
                queue.push_back(y);
            }
        }
    }
    d
}

fn ball_reach(ball: &CoverBall, s: usize) -> Vec<bool> {
    let cells = ball.cells();
    let mut seen = vec![false; ball.vertex_count()];
    seen[s] = true;
    let mut stack = vec![s];
    while let Some(x) = stack.pop() {
        for e in cells.out_edges(x) {
            let y = cells.edges()[e].dst;
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FilterViolation {
    pub vertex: usize,
    pub reachable: bool,
    pub in_halfspaces: bool,
}

/// In a metric ball of radius `R`, for every vertex within `R/2` of the
/// center: reachable from `v` iff every Θ class separating it from `v` has
/// `v` on its tail side. Separating classes are read off the interval.
pub fn filter_halfspace_check(ball: &CoverBall, v: usize) -> Result<Verdict<FilterViolation>> {
    let region = require_metric_ball(ball, v)?;
    let cells = ball.cells();
    let reach = ball_reach(ball, v);
    let dv = ball_bfs(ball, v);
    for x in 0..ball.vertex_count() {
        if ball.dist(x) > region {
            continue;
        }
        let dx = ball_bfs(ball, x);
        let d = dv[x];
        let in_halfspaces = cells.edges().iter().all(|e| {
            let (s, t) = (e.src, e.dst);
            let on_geodesic = |p: usize| dv[p] != FAR && dx[p] != FAR && dv[p] + dx[p] == d;
            if !(on_geodesic(s) && on_geodesic(t)) {
                return true;
            }
            // The class of `e` separates `v` from `x`; `v` must be on the tail side.
            dv[s] < dv[t] && dx[t] < dx[s]
        });
        if in_halfspaces != reach[x] {
            return Ok(Verdict::Fail(FilterViolation { vertex: x, reachable: reach[x], in_halfspaces }));
        }
    }
    Ok(Verdict::Pass)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvexityViolation {
    pub u: usize,
    pub w: usize,
    pub middle: usize,
}

/// The filter of `v` is locally convex: two of its vertices at distance two
/// have all their common neighbors in it. Scanned where membership is exact.
pub fn local_convexity_check(ball: &CoverBall, v: usize) -> Result<Verdict<ConvexityViolation>> {
    let region = require_metric_ball(ball, v)?;
    let cells = ball.cells();
    let reach = ball_reach(ball, v);
    let nbrs = |x: usize| -> Vec<usize> {
        cells
            .ends_at(x)
            .iter()
            .map(|end| {
                let e = &cells.edges()[end.edge];
                if e.src == x {
                    e.dst
                } else {
                    e.src
                }
            })
            .collect()
    };
    for u in 0..ball.vertex_count() {
        if !reach[u] || ball.dist(u) + 2 > region {
            continue;
        }
        let nu = nbrs(u);
        let mut two: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &c in &nu {
            for w in nbrs(c) {
                if w != u && !nu.contains(&w) {
                    two.entry(w).or_default().push(c);
                }
            }
        }
        for (w, mids) in two {
            if !reach[w] {
                continue;
            }
            if let Some(&middle) = mids.iter().find(|&&c| !reach[c]) {
                return Ok(Verdict::Fail(ConvexityViolation { u, w, middle }));
            }
        }
    }
    Ok(Verdict::Pass)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GridReport {
    /// Vertices per side of the largest grid found.
    pub side: usize,
    pub root: usize,
    /// `rows[j][i]` is the grid vertex at column `i`, row `j`.
    pub rows: Vec<Vec<usize>>,
}

fn common_out(frag: &DomainFragment, a: usize, b: usize) -> Option<usize> {
    frag.out_neighbors(a).find(|&t| frag.out_neighbors(b).any(|u| u == t))
}

/// Grows `g` by one row and one column, starting the new column at `col`
/// and the new row at `row`.
fn extend_grid(frag: &DomainFragment, g: &[Vec<usize>], col: usize, row: usize) -> Option<Vec<Vec<usize>>> {
    let k = g.len();
    let mut next: Vec<Vec<usize>> = g.to_vec();
    next[0].push(col);
    for j in 1..k {
        let t = common_out(frag, next[j][k - 1], next[j - 1][k])?;
        next[j].push(t);
    }
    let mut top = vec![row];
    for i in 1..=k {
        top.push(common_out(frag, top[i - 1], next[k - 1][i])?);
    }
    next.push(top);
    let flat: BTreeSet<usize> = next.iter().flatten().copied().collect();
    if flat.len() != (k + 1) * (k + 1) {
        return None;
    }
    // Isometry: the grid's join is inside the fragment, so fragment distances are exact.
    for (j, r) in next.iter().enumerate() {
        for (i, &x) in r.iter().enumerate() {
            let d = frag.bfs(x);
            for (j2, r2) in next.iter().enumerate() {
                for (i2, &y) in r2.iter().enumerate() {
                    if d[y] as usize != i.abs_diff(i2) + j.abs_diff(j2) {
                        return None;
                    }
                }
            }
        }
    }
    Some(next)
}

/// Largest directed square grid found by greedy growth from each root.
pub fn flat_grid_max(frag: &DomainFragment) -> GridReport {
    let mut best = GridReport { side: 1, root: 0, rows: vec![vec![0]] };
    for root in 0..frag.len() {
        if frag.depth[root] + 2 * best.side > frag.complete {
            continue;
        }
        let mut g = vec![vec![root]];
        loop {
            let k = g.len();
            let (corner_col, corner_row) = (g[0][k - 1], g[k - 1][0]);
            let mut grown = None;
            'search: for col in frag.out_neighbors(corner_col) {
                for row in frag.out_neighbors(corner_row) {
                    if let Some(n) = extend_grid(frag, &g, col, row) {
                        grown = Some(n);
                        break 'search;
                    }
                }
            }
            match grown {
                Some(n) => g = n,
                None => break,
            }
        }
        if g.len() > best.side {
            best = GridReport { side: g.len(), root, rows: g };
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaReport {
    /// Twice the four-point δ, which is always an integer.
    pub twice_delta: u32,
    pub exhaustive: bool,
    pub tuples: u64,
    pub witness: Option<[usize; 4]>,
}

impl DeltaReport {
    /// δ as a reduced fraction string.
    pub fn delta(&self) -> String {
        if self.twice_delta.is_multiple_of(2) {
            format!("{}", self.twice_delta / 2)
        } else {
            format!("{}/2", self.twice_delta)
        }
    }
}

fn four_point(rows: &[Vec<u32>], ids: &[usize], t: [usize; 4]) -> u32 {
    let d = |a: usize, b: usize| rows[t[a]][ids[t[b]]];
    let mut s = [d(0, 1) + d(2, 3), d(0, 2) + d(1, 3), d(0, 3) + d(1, 2)];
    s.sort_unstable();
    s[2] - s[1]
}

/// Gromov's four-point δ over interior vertices: exhaustive when there are
/// at most `max_tuples` 4-subsets, otherwise `max_tuples` seeded samples.
pub fn four_point_delta(frag: &DomainFragment, max_tuples: u64, seed: u64) -> DeltaReport {
    let (ids, rows) = frag.interior_rows();
    let n = ids.len() as u64;
    let total = if n < 4 { 0 } else { n * (n - 1) * (n - 2) * (n - 3) / 24 };
    let mut report = DeltaReport { twice_delta: 0, exhaustive: total <= max_tuples, tuples: 0, witness: None };
    let consider = |t: [usize; 4], report: &mut DeltaReport| {
        let v = four_point(&rows, &ids, t);
        report.tuples += 1;
        if v > report.twice_delta || report.witness.is_none() {
            report.twice_delta = report.twice_delta.max(v);
            if v == report.twice_delta {
                report.witness = Some(t.map(|i| ids[i]));
            }
        }
    };
    let m = ids.len();
    if report.exhaustive {
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    for d in c + 1..m {
                        consider([a, b, c, d], &mut report);
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while report.tuples < max_tuples {
            let mut t = [0usize; 4];
            for slot in 0..4 {
                loop {
                    let x = rng.gen_range(0..m);
                    if !t[..slot].contains(&x) {
                        t[slot] = x;
                        break;
                    }
                }
            }
            consider(t, &mut report);
        }
    }
    report
}

/// Out-degrees observed at closed vertices, grouped by vertex type.
pub fn degree_profile(frag: &DomainFragment) -> BTreeMap<Option<u8>, BTreeSet<usize>> {
    let mut m: BTreeMap<Option<u8>, BTreeSet<usize>> = BTreeMap::new();
    for v in 0..frag.len() {
        if !frag.open[v] {
            m.entry(frag.vtype[v]).or_default().insert(frag.out[v].len());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{unfold_ball, unfold_filter};
    use crate::format::parse_complex;
    use crate::SquareComplex;

    fn load(src: &str) -> SquareComplex {
        parse_complex(src).unwrap()
    }

    fn wise_x() -> SquareComplex {
        load(include_str!("../../../data/wise_x.sqc"))
    }

    fn torus() -> SquareComplex {
        load(include_str!("../../../data/torus.sqc"))
    }

    #[test]
    fn grid_intervals_and_medians() {
        let g = DomainFragment::grid(4, 4);
        let v = |i: usize, j: usize| g.vertex_id(&format!("{i},{j}")).unwrap();
        assert_eq!(interval(&g, v(0, 0), v(0, 0)).unwrap(), vec![v(0, 0)]);
        assert_eq!(interval(&g, v(0, 0), v(2, 1)).unwrap().len(), 6);
        assert_eq!(medians(&g, v(0, 0), v(2, 0), v(0, 2)).unwrap(), vec![v(0, 0)]);
        assert_eq!(medians(&g, v(0, 0), v(0, 0), v(1, 1)).unwrap(), vec![v(0, 0)]);
        assert!(matches!(interval(&g, v(0, 0), v(4, 1)), Err(Error::BoundaryUnsafe(_))));
        assert!(median_check(&g).is_pass());
    }

    #[test]
    fn grid_interval_matches_brute_force() {
        let g = DomainFragment::grid(4, 4);
        let v = |i: usize, j: usize| g.vertex_id(&format!("{i},{j}")).unwrap();
        for (a, b) in [((0, 0), (1, 1)), ((0, 1), (2, 0)), ((1, 0), (0, 2))] {
            let got: BTreeSet<usize> = interval(&g, v(a.0, a.1), v(b.0, b.1)).unwrap().into_iter().collect();
            let mut want = BTreeSet::new();
            for i in a.0.min(b.0)..=a.0.max(b.0) {
                for j in a.1.min(b.1)..=a.1.max(b.1) {
                    want.insert(v(i, j));
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn theta_counts() {
        let sq = DomainFragment::grid(1, 1);
        assert_eq!(theta_classes(&sq).count, 2);
        for n in 1..5 {
            let g = DomainFragment::grid(n, n);
            assert_eq!(theta_classes(&g).count, 2 * n);
            assert!(theta_halfspace_check(&g).is_pass());
        }
        let t = DomainFragment::out_tree(2, 3);
        assert_eq!(theta_classes(&t).count, 14);
    }

    #[test]
    fn halfspaces_hold_the_root_on_the_tail_side() {
        let g = DomainFragment::grid(4, 4);
        let rep = theta_classes(&g);
        for h in rep.halfspaces.iter().flatten() {
            assert!(h.tail.contains(&0));
            assert_eq!(h.tail.len() + h.head.len(), g.interior().len());
        }
        assert_eq!(rep.possibly_under_merged.iter().filter(|&&f| f).count(), 2);
    }

    #[test]
    fn three_cube_condition() {
        assert!(check_three_cube(&DomainFragment::grid(1, 1)).is_pass());
        let mut b = FragmentBuilder::new();
        let o = b.vertex("o", None);
        let [x, y, z] = ["x", "y", "z"].map(|n| b.vertex(n, None));
        let [xy, xz, yz] = ["xy", "xz", "yz"].map(|n| b.vertex(n, None));
        for (s, t) in [(o, x), (o, y), (o, z), (x, xy), (y, xy), (x, xz), (z, xz), (y, yz), (z, yz)] {
            b.edge(s, t);
        }
        let open = b.clone().build(3).unwrap();
        match check_three_cube(&open) {
            Verdict::Fail(w) => assert_eq!(w.vertex, o),
            Verdict::Pass => panic!("missing corner must be reported"),
        }
        let top = b.vertex("xyz", None);
        for s in [xy, xz, yz] {
            b.edge(s, top);
        }
        assert!(check_three_cube(&b.build(3).unwrap()).is_pass());
    }

    #[test]
    fn npc_fragments_have_no_cube_triples() {
        let ball = unfold_ball(&wise_x(), "v", 4).unwrap();
        let f = principal_filter(&ball, 0).unwrap();
        assert!(check_three_cube(&f).is_pass());
        assert!(median_check(&f).is_pass());
        assert!(order_agreement_check(&f).is_pass());
        assert!(theta_halfspace_check(&f).is_pass());
    }

    #[test]
    fn torus_filter_is_the_quadrant() {
        let ball = unfold_ball(&torus(), "v", 6).unwrap();
        let f = principal_filter(&ball, 0).unwrap();
        // Lattice points with i, j >= 0 and i + j <= 6.
        assert_eq!(f.len(), 28);
        assert_eq!(theta_classes(&f).count, 12);
        assert!(order_agreement_check(&f).is_pass());
    }

    #[test]
    fn x_filter_is_a_product_of_trees() {
        let ball = unfold_ball(&wise_x(), "v", 4).unwrap();
        let f = principal_filter(&ball, 0).unwrap();
        // Binary out-tree times ternary out-tree, total depth 4.
        let want: usize = (0..=4usize)
            .map(|k| (0..=k).map(|i| 2usize.pow(i as u32) * 3usize.pow((k - i) as u32)).sum::<usize>())
            .sum();
        assert_eq!(f.len(), want);
        let prof = degree_profile(&f);
        assert_eq!(prof[&None], BTreeSet::from([5]));
    }

    #[test]
    fn ambient_filter_checks_on_balls() {
        for (c, r) in [(torus(), 6), (wise_x(), 4)] {
            let ball = unfold_ball(&c, "v", r).unwrap();
            for v in 0..ball.vertex_count() {
                if ball.dist(v) <= r / 2 {
                    assert!(filter_halfspace_check(&ball, v).unwrap().is_pass());
                    assert!(local_convexity_check(&ball, v).unwrap().is_pass());
                }
            }
        }
        let f = unfold_filter(&torus(), "v", 4).unwrap();
        assert!(matches!(filter_halfspace_check(&f, 0), Err(Error::BoundaryUnsafe(_))));
    }

    #[test]
    fn ambient_checks_refuse_far_vertices() {
        let ball = unfold_ball(&torus(), "v", 4).unwrap();
        let far = (0..ball.vertex_count()).find(|&v| ball.dist(v) == 3).unwrap();
        assert!(matches!(local_convexity_check(&ball, far), Err(Error::BoundaryUnsafe(_))));
    }

    #[test]
    fn flat_grids() {
        let t = DomainFragment::out_tree(2, 4);
        assert_eq!(flat_grid_max(&t).side, 1);
        assert_eq!(flat_grid_max(&DomainFragment::grid(1, 1)).side, 2);
        assert_eq!(flat_grid_max(&DomainFragment::grid(3, 3)).side, 4);
        for r in [2usize, 4, 6] {
            let ball = unfold_ball(&torus(), "v", r).unwrap();
            let f = principal_filter(&ball, 0).unwrap();
            assert_eq!(flat_grid_max(&f).side, r / 2 + 1);
        }
    }

    #[test]
    fn x_filter_holds_a_three_by_three_grid() {
        let f = principal_filter(&unfold_filter(&wise_x(), "v", 6).unwrap(), 0).unwrap();
        let g = flat_grid_max(&f);
        assert!(g.side >= 4, "side {}", g.side);
    }

    #[test]
    fn four_point_delta_on_trees_and_grids() {
        let t = DomainFragment::out_tree(2, 4);
        let d = four_point_delta(&t, 1_000_000, 7);
        assert!(d.exhaustive);
        assert_eq!(d.twice_delta, 0);
        let mut last = 0;
        for r in [2usize, 4, 6] {
            let ball = unfold_ball(&torus(), "v", r * 2).unwrap();
            let f = principal_filter(&ball, 0).unwrap();
            let d = four_point_delta(&f, 1_000_000, 7);
            assert!(d.twice_delta >= last);
            last = d.twice_delta;
        }
        assert!(last >= 4);
    }

    #[test]
    fn sampled_delta_is_deterministic() {
        let ball = unfold_ball(&torus(), "v", 12).unwrap();
        let f = principal_filter(&ball, 0).unwrap();
        let a = four_point_delta(&f, 500, 11);
        let b = four_point_delta(&f, 500, 11);
        assert!(!a.exhaustive);
        assert_eq!(a, b);
        assert_eq!(a.tuples, 500);
    }

    #[test]
    fn builder_rejects_bad_fragments() {
        let mut b = FragmentBuilder::new();
        b.vertex("r", None);
        b.vertex("lost", None);
        assert!(matches!(b.build(1), Err(Error::Validation(_))));
        let mut b = FragmentBuilder::new();
        let r = b.vertex("r", None);
        let a = b.vertex("a", None);
        let c = b.vertex("c", None);
        b.edge(r, a);
        b.edge(a, c);
        b.edge(r, c);
        assert!(matches!(b.build(2), Err(Error::Validation(_))));
    }

    #[test]
    fn fragment_json_round_trip() {
        let x = crate::wise::build_x();
        let ball = crate::cover::unfold_filter(&x, "v", 4).unwrap();
        let f = principal_filter(&ball, 0).unwrap();
        let back = DomainFragment::from_json(&f.to_json().to_string()).unwrap();
        assert_eq!(back.to_json(), f.to_json());
        let again = crate::cover::CoverBall::from_json(&ball.to_json().to_string(), 1_000_000).unwrap();
        assert_eq!(again.to_json(), ball.to_json());
    }
}
