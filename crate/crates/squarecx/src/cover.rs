//! Finite balls of universal covers.
//!
//! `unfold_ball` lifts stars and closes squares with congruence-closure
//! folding until a fixpoint; `unfold_filter` does the same with outgoing
//! edges only, giving an exact truncated principal filter; and
//! `unfold_csc_product` builds one-vertex CSC covers as products of trees.
//! All three finish through the same canonical naming pass, so equal covers
//! come out byte-identical.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::complex::{
    check_admissible_orientation, check_csc, check_npc, ComplexBuilder, Edge, EdgeEnd, End, Side, Sign, SquareComplex,
    Verdict,
};
use crate::error::{Error, Result};
use crate::iso::{rooted_iso, LabeledDigraph};
use crate::unionfind::UnionFind;

/// Upper bound on lifted vertices created during one unfolding.
pub const DEFAULT_BUDGET: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BallKind {
    /// Every vertex at distance below the radius has its full edge star.
    Ball,
    /// Directed principal filter truncated at the given depth.
    Filter,
}

#[derive(Clone, Debug)]
pub struct CoverBall {
    base: SquareComplex,
    cells: SquareComplex,
    rho_v: Vec<usize>,
    rho_e: Vec<usize>,
    rho_sq: Vec<usize>,
    radius: usize,
    kind: BallKind,
    dist: Vec<usize>,
    out: Vec<BTreeMap<usize, usize>>,
    inn: Vec<BTreeMap<usize, usize>>,
    square_index: HashMap<(usize, usize), usize>,
}

impl CoverBall {
    pub fn base(&self) -> &SquareComplex {
        &self.base
    }

    /// The lifted cells; vertex names are canonical words from the basepoint.
    pub fn cells(&self) -> &SquareComplex {
        &self.cells
    }

    pub fn basepoint(&self) -> usize {
        0
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn kind(&self) -> BallKind {
        self.kind
    }

    pub fn vertex_count(&self) -> usize {
        self.rho_v.len()
    }

    pub fn rho_vertex(&self, v: usize) -> usize {
        self.rho_v[v]
    }

    pub fn rho_edge(&self, e: usize) -> usize {
        self.rho_e[e]
    }

    pub fn rho_square(&self, q: usize) -> usize {
        self.rho_sq[q]
    }

    /// Graph distance from the basepoint (directed depth for filters).
    pub fn dist(&self, v: usize) -> usize {
        self.dist[v]
    }

    /// The star of `v` (all of it for balls, the outgoing half for filters) is complete.
    pub fn is_interior(&self, v: usize) -> bool {
        self.dist[v] < self.radius
    }

    pub fn name(&self, v: usize) -> &str {
        &self.cells.vertices()[v].name
    }

    pub fn vertex_id(&self, name: &str) -> Result<usize> {
        self.cells.vertex_id(name)
    }

    /// Lifted edge leaving `v` over base edge `e`.
    pub fn out_edge(&self, v: usize, e: usize) -> Option<usize> {
        self.out[v].get(&e).copied()
    }

    /// Lifted edge entering `v` over base edge `e`.
    pub fn in_edge(&self, v: usize, e: usize) -> Option<usize> {
        self.inn[v].get(&e).copied()
    }

    /// Follows `side` forward from `v`, which must sit at the side's start.
    pub fn step(&self, v: usize, side: Side) -> Option<usize> {
        self.follow(v, side.edge, side.start_end().end)
    }

    /// Follows `side` backward from `v`, which must sit at the side's finish.
    pub fn step_back(&self, v: usize, side: Side) -> Option<usize> {
        self.follow(v, side.edge, side.finish_end().end)
    }

    fn follow(&self, v: usize, e: usize, at: End) -> Option<usize> {
        let edges = self.cells.edges();
        match at {
            End::Source => self.out_edge(v, e).map(|le| edges[le].dst),
            End::Target => self.in_edge(v, e).map(|le| edges[le].src),
        }
    }

    /// The lift of base square `q` whose corner 0 is `corner0`.
    pub fn square_at(&self, q: usize, corner0: usize) -> Option<usize> {
        self.square_index.get(&(q, corner0)).copied()
    }

    pub fn interior_count(&self) -> usize {
        (0..self.vertex_count()).filter(|&v| self.is_interior(v)).count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let c = &self.cells;
        let vertices: Vec<_> = (0..self.vertex_count())
            .map(|v| {
                serde_json::json!({
                    "name": self.name(v),
                    "rho": self.base.vertices()[self.rho_v[v]].name,
                    "dist": self.dist[v],
                    "interior": self.is_interior(v),
                    "type": c.vertices()[v].vtype,
                })
            })
            .collect();
        let edges: Vec<_> = c
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                serde_json::json!({
                    "name": e.name,
                    "src": self.name(e.src),
                    "dst": self.name(e.dst),
                    "rho": self.base.edges()[self.rho_e[i]].name,
                    "color": e.color,
                })
            })
            .collect();
        let squares: Vec<_> = c
            .squares()
            .iter()
            .enumerate()
            .map(|(i, sq)| {
                serde_json::json!({
                    "rho": self.rho_sq[i],
                    "corner0": self.name(c.side_start(sq.sides[0])),
                })
            })
            .collect();
        serde_json::json!({
            "base": crate::format::ComplexDoc::from_complex(&self.base),
            "kind": self.kind,
            "radius": self.radius,
            "basepoint": self.name(0),
            "vertices": vertices,
            "edges": edges,
            "squares": squares,
        })
    }
}

impl CoverBall {
    /// Rebuilds a ball from its JSON export by unfolding the recorded base
    /// again with the recorded parameters; unfolding is deterministic.
    pub fn from_json(text: &str, budget: usize) -> Result<CoverBall> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let bad = |what: &str| Error::Validation(format!("ball JSON lacks `{what}`"));
        let base: crate::format::ComplexDoc =
            serde_json::from_value(v.get("base").cloned().ok_or_else(|| bad("base"))?)?;
        let base = base.into_complex()?;
        let radius = v.get("radius").and_then(|r| r.as_u64()).ok_or_else(|| bad("radius"))? as usize;
        let root =
            v.pointer("/vertices/0/rho").and_then(|r| r.as_str()).ok_or_else(|| bad("vertices[0].rho"))?.to_string();
        match v.get("kind").and_then(|k| k.as_str()) {
            Some("Ball") => unfold_ball_with_budget(&base, &root, radius, budget),
            Some("Filter") => unfold_filter_with_budget(&base, &root, radius, budget),
            _ => Err(bad("kind")),
        }
    }
}

/// Mutable unfolding state: lifted vertices under a union-find, with per
/// vertex adjacency keyed by base edge. A covering has at most one lift of
/// each base edge-end at a vertex, so conflicting entries force merges.
struct Unfolder<'a> {
    base: &'a SquareComplex,
    uf: UnionFind,
    rho: Vec<usize>,
    out: Vec<BTreeMap<usize, usize>>,
    inn: Vec<BTreeMap<usize, usize>>,
    budget: usize,
    changed: bool,
}

impl<'a> Unfolder<'a> {
    fn new(base: &'a SquareComplex, budget: usize) -> Self {
        Unfolder {
            base,
            uf: UnionFind::new(0),
            rho: Vec::new(),
            out: Vec::new(),
            inn: Vec::new(),
            budget,
            changed: false,
        }
    }

    fn new_vertex(&mut self, base_v: usize) -> Result<usize> {
        if self.rho.len() >= self.budget {
            return Err(Error::ResourceLimit(self.budget));
        }
        self.uf.push();
        self.rho.push(base_v);
        self.out.push(BTreeMap::new());
        self.inn.push(BTreeMap::new());
        self.changed = true;
        Ok(self.rho.len() - 1)
    }

    fn get(&mut self, v: usize, e: usize, at: End) -> Option<usize> {
        let v = self.uf.find(v);
        let t = match at {
            End::Source => self.out[v].get(&e).copied(),
            End::Target => self.inn[v].get(&e).copied(),
        };
        t.map(|t| self.uf.find(t))
    }

    /// Records that `v` (at end `at` of base edge `e`) is joined to `w`.
    fn link(&mut self, v: usize, e: usize, at: End, w: usize) -> Result<()> {
        if let Some(existing) = self.get(v, e, at) {
            return self.merge(existing, w);
        }
        let (v, w) = (self.uf.find(v), self.uf.find(w));
        let back = match at {
            End::Source => self.inn[w].get(&e).copied(),
            End::Target => self.out[w].get(&e).copied(),
        };
        if let Some(other) = back {
            return self.merge(other, v);
        }
        match at {
            End::Source => {
                self.out[v].insert(e, w);
                self.inn[w].insert(e, v);
            }
            End::Target => {
                self.inn[v].insert(e, w);
                self.out[w].insert(e, v);
            }
        }
        self.changed = true;
        Ok(())
    }

    fn ensure(&mut self, v: usize, e: usize, at: End) -> Result<usize> {
        if let Some(t) = self.get(v, e, at) {
            return Ok(t);
        }
        let edge = &self.base.edges()[e];
        let far = match at {
            End::Source => edge.dst,
            End::Target => edge.src,
        };
        let w = self.new_vertex(far)?;
        self.link(v, e, at, w)?;
        Ok(self.uf.find(w))
    }

    fn merge(&mut self, a: usize, b: usize) -> Result<()> {
        let mut stack = vec![(a, b)];
        while let Some((x, y)) = stack.pop() {
            let (rx, ry) = (self.uf.find(x), self.uf.find(y));
            if rx == ry {
                continue;
            }
            if self.rho[rx] != self.rho[ry] {
                return Err(Error::Validation(format!(
                    "inconsistent fold of lifts of `{}` and `{}`",
                    self.base.vertices()[self.rho[rx]].name,
                    self.base.vertices()[self.rho[ry]].name
                )));
            }
            let root = self.uf.union(rx, ry).expect("distinct roots");
            let other = if root == rx { ry } else { rx };
            self.changed = true;
            for (e, t) in std::mem::take(&mut self.out[other]) {
                match self.out[root].get(&e) {
                    Some(&t2) => stack.push((t, t2)),
                    None => {
                        self.out[root].insert(e, t);
                    }
                }
            }
            for (e, t) in std::mem::take(&mut self.inn[other]) {
                match self.inn[root].get(&e) {
                    Some(&t2) => stack.push((t, t2)),
                    None => {
                        self.inn[root].insert(e, t);
                    }
                }
            }
        }
        Ok(())
    }

    /// Closes the lift at `z` of corner `j` of base square `q`.
    fn close(&mut self, z: usize, q: usize, j: usize) -> Result<()> {
        let sides = self.base.squares()[q].sides;
        let (sj, sprev, snext, sopp) = (sides[j], sides[(j + 3) % 4], sides[(j + 1) % 4], sides[(j + 2) % 4]);
        let u = self.ensure(z, sj.edge, sj.start_end().end)?;
        let w = self.ensure(z, sprev.edge, sprev.finish_end().end)?;
        let x = self.ensure(u, snext.edge, snext.start_end().end)?;
        self.link(w, sopp.edge, sopp.finish_end().end, x)
    }

    /// One breadth-first sweep; returns whether anything changed.
    fn sweep(&mut self, root: usize, radius: usize, kind: BallKind) -> Result<bool> {
        self.changed = false;
        let mut done = vec![false; self.rho.len()];
        let mut queue = VecDeque::from([(root, 0usize)]);
        while let Some((z, d)) = queue.pop_front() {
            let z = self.uf.find(z);
            if done.len() < self.rho.len() {
                done.resize(self.rho.len(), false);
            }
            if done[z] {
                continue;
            }
            done[z] = true;
            let bz = self.rho[z];
            if d < radius {
                for &end in self.base.ends_at(bz) {
                    if kind == BallKind::Ball || end.end == End::Source {
                        self.ensure(z, end.edge, end.end)?;
                    }
                }
            }
            if d + 2 <= radius {
                for c in self.base.corners_at(bz) {
                    let q = &self.base.squares()[c.square];
                    let source_corner =
                        q.sides[c.index].sign == Sign::Plus && q.sides[(c.index + 3) % 4].sign == Sign::Minus;
                    if kind == BallKind::Ball || source_corner {
                        self.close(z, c.square, c.index)?;
                    }
                }
            }
            if d < radius {
                let z = self.uf.find(z);
                let nbrs: Vec<usize> = self.out[z].values().chain(self.inn[z].values()).copied().collect();
                for t in nbrs {
                    let t = self.uf.find(t);
                    if done.get(t).is_none_or(|&x| !x) {
                        queue.push_back((t, d + 1));
                    }
                }
            }
        }
        Ok(self.changed)
    }

    fn run(mut self, base_v: usize, radius: usize, kind: BallKind) -> Result<CoverBall> {
        let root = self.new_vertex(base_v)?;
        while self.sweep(root, radius, kind)? {}
        let n = self.rho.len();
        let mut out = vec![BTreeMap::new(); n];
        let mut inn = vec![BTreeMap::new(); n];
        let mut alive = vec![false; n];
        for v in 0..n {
            let r = self.uf.find(v);
            alive[r] = true;
            for (&e, &t) in &self.out[v] {
                out[r].insert(e, self.uf.find(t));
            }
            for (&e, &t) in &self.inn[v] {
                inn[r].insert(e, self.uf.find(t));
            }
        }
        let root = self.uf.find(root);
        finalize(self.base, &self.rho, &out, &inn, root, radius, kind)
    }
}

/// Canonical naming: a vertex's name is its lexicographically least shortest
/// word from the basepoint; vertices are numbered by (distance, word).
fn finalize(
    base: &SquareComplex,
    rho: &[usize],
    out: &[BTreeMap<usize, usize>],
    inn: &[BTreeMap<usize, usize>],
    root: usize,
    radius: usize,
    kind: BallKind,
) -> Result<CoverBall> {
    // Token order: by base edge name, then forward before backward.
    let mut tokens: Vec<(usize, Sign)> =
        (0..base.edges().len()).flat_map(|e| [(e, Sign::Plus), (e, Sign::Minus)]).collect();
    tokens.sort_by(|a, b| (&base.edges()[a.0].name, a.1).cmp(&(&base.edges()[b.0].name, b.1)));
    let mut tok_rank = vec![[0usize; 2]; base.edges().len()];
    for (i, &(e, s)) in tokens.iter().enumerate() {
        tok_rank[e][(s == Sign::Minus) as usize] = i;
    }

    let n = rho.len();
    let mut new_id = vec![usize::MAX; n];
    let mut names: Vec<String> = Vec::new();
    let mut order: Vec<usize> = Vec::new();
    let mut dist: Vec<usize> = Vec::new();
    new_id[root] = 0;
    order.push(root);
    names.push("^".to_string());
    dist.push(0);
    let mut layer = vec![root];
    let mut depth = 0;
    while !layer.is_empty() {
        // best[(t)] = (rank of predecessor, token rank, predecessor, token)
        let mut best: BTreeMap<usize, (usize, usize, usize, (usize, Sign))> = BTreeMap::new();
        for &p in &layer {
            let prank = new_id[p];
            let steps = out[p]
                .iter()
                .map(|(&e, &t)| (e, Sign::Plus, t))
                .chain(inn[p].iter().map(|(&e, &t)| (e, Sign::Minus, t)));
            for (e, s, t) in steps {
                if new_id[t] != usize::MAX {
                    continue;
                }
                let key = (prank, tok_rank[e][(s == Sign::Minus) as usize], p, (e, s));
                best.entry(t)
                    .and_modify(|b| {
                        if (key.0, key.1) < (b.0, b.1) {
                            *b = key;
                        }
                    })
                    .or_insert(key);
            }
        }
        let mut next: Vec<(usize, usize, usize, usize, (usize, Sign))> =
            best.into_iter().map(|(t, (pr, tr, p, tok))| (pr, tr, t, p, tok)).collect();
        next.sort();
        depth += 1;
        layer = Vec::with_capacity(next.len());
        for (_, _, t, p, (e, s)) in next {
            new_id[t] = order.len();
            let name = format!("{}{}{}", names[new_id[p]], base.edges()[e].name, s.symbol());
            names.push(name);
            order.push(t);
            dist.push(depth);
            layer.push(t);
        }
    }
    if order.len() != (0..n).filter(|&v| !out[v].is_empty() || !inn[v].is_empty() || v == root).count() {
        return Err(Error::Validation("unfolding left unreachable lifts".into()));
    }

    let mut b = ComplexBuilder::new(format!("cover({})", base.name()));
    let mut rho_v = Vec::with_capacity(order.len());
    for (i, &old) in order.iter().enumerate() {
        b.vertex(names[i].clone(), base.vertices()[rho[old]].vtype);
        rho_v.push(rho[old]);
    }
    let m = order.len();
    let mut out_e = vec![BTreeMap::new(); m];
    let mut inn_e = vec![BTreeMap::new(); m];
    let mut rho_e = Vec::new();
    for (i, &old) in order.iter().enumerate() {
        for (&e, &t) in &out[old] {
            let j = new_id[t];
            let be: &Edge = &base.edges()[e];
            let id = b.edge(format!("{}>{}", names[i], be.name), i, j, be.color.as_deref(), be.vh);
            rho_e.push(e);
            out_e[i].insert(e, id);
            inn_e[j].insert(e, id);
        }
    }
    // Squares: walk each base square from every lift of its corner 0.
    let step = |v: usize, side: Side, edges_out: &Vec<BTreeMap<usize, usize>>, dsts: &[(usize, usize)]| match side.sign
    {
        Sign::Plus => edges_out[v].get(&side.edge).map(|&le| dsts[le].1),
        Sign::Minus => inn_e[v].get(&side.edge).map(|&le| dsts[le].0),
    };
    let ends: Vec<(usize, usize)> = {
        let mut v = vec![(0, 0); rho_e.len()];
        for (i, m) in out_e.iter().enumerate() {
            for &le in m.values() {
                v[le].0 = i;
            }
        }
        for (j, m) in inn_e.iter().enumerate() {
            for &le in m.values() {
                v[le].1 = j;
            }
        }
        v
    };
    let mut rho_sq = Vec::new();
    let mut square_index = HashMap::new();
    for z in 0..m {
        for c in base.corners_at(rho_v[z]) {
            if c.index != 0 {
                continue;
            }
            let sides = base.squares()[c.square].sides;
            let mut cur = z;
            let mut lifted = [(0usize, Sign::Plus); 4];
            let mut ok = true;
            for (k, side) in sides.iter().enumerate() {
                let le = match side.sign {
                    Sign::Plus => out_e[cur].get(&side.edge),
                    Sign::Minus => inn_e[cur].get(&side.edge),
                };
                match le {
                    Some(&le) => {
                        lifted[k] = (le, side.sign);
                        cur = step(cur, *side, &out_e, &ends).expect("edge present");
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                if cur != z {
                    return Err(Error::Validation(format!("lifted square {} does not close", c.square)));
                }
                square_index.insert((c.square, z), rho_sq.len());
                rho_sq.push(c.square);
                b.square(lifted);
            }
        }
    }
    let cells = b.build()?;
    Ok(CoverBall {
        base: base.clone(),
        cells,
        rho_v,
        rho_e,
        rho_sq,
        radius,
        kind,
        dist,
        out: out_e,
        inn: inn_e,
        square_index,
    })
}

pub fn unfold_ball(c: &SquareComplex, v: &str, r: usize) -> Result<CoverBall> {
    unfold_ball_with_budget(c, v, r, DEFAULT_BUDGET)
}

pub fn unfold_ball_with_budget(c: &SquareComplex, v: &str, r: usize, budget: usize) -> Result<CoverBall> {
    let vid = c.vertex_id(v)?;
    if let Verdict::Fail(w) = check_npc(c) {
        return Err(Error::NotNpc(c.vertices()[w.vertex()].name.clone()));
    }
    Unfolder::new(c, budget).run(vid, r, BallKind::Ball)
}

/// The principal filter of a lift of `v` for the given admissible
/// orientation, truncated at directed depth `depth`.
pub fn unfold_filter(c: &SquareComplex, v: &str, depth: usize) -> Result<CoverBall> {
    unfold_filter_with_budget(c, v, depth, DEFAULT_BUDGET)
}

pub fn unfold_filter_with_budget(c: &SquareComplex, v: &str, depth: usize, budget: usize) -> Result<CoverBall> {
    let vid = c.vertex_id(v)?;
    if let Verdict::Fail(w) = check_npc(c) {
        return Err(Error::NotNpc(c.vertices()[w.vertex()].name.clone()));
    }
    if let Verdict::Fail(w) = check_admissible_orientation(c) {
        return Err(Error::NotAdmissible(w.square));
    }
    Unfolder::new(c, budget).run(vid, depth, BallKind::Filter)
}

fn opposite(e: EdgeEnd) -> EdgeEnd {
    match e.end {
        End::Source => EdgeEnd::target(e.edge),
        End::Target => EdgeEnd::source(e.edge),
    }
}

/// Word in a free-product tree: a reduced sequence of edge-ends.
type Word = Vec<EdgeEnd>;

fn extend(w: &Word, t: EdgeEnd) -> Option<Word> {
    if w.last().is_some_and(|&l| opposite(l) == t) {
        return None;
    }
    let mut x = w.clone();
    x.push(t);
    Some(x)
}

/// Product-of-trees cover of a one-vertex CSC, truncated at ℓ₁ radius `r`.
pub fn unfold_csc_product(c: &SquareComplex, v: &str, r: usize) -> Result<CoverBall> {
    let vid = c.vertex_id(v)?;
    if c.vertices().len() != 1 {
        return Err(Error::NotOneVertex(c.vertices().len()));
    }
    let csc = check_csc(c)?;
    if let Some(p) = csc.uncovered {
        return Err(Error::NotCsc(format!(
            "corner {} / {} lies in no square",
            c.end_label(p.vertical),
            c.end_label(p.horizontal)
        )));
    }
    if let Verdict::Fail(w) = check_npc(c) {
        return Err(Error::NotNpc(c.vertices()[w.vertex()].name.clone()));
    }
    let vh = |e: EdgeEnd| c.edges()[e.edge].vh;
    let h_ends: Vec<EdgeEnd> =
        c.ends_at(vid).iter().copied().filter(|&e| vh(e) == Some(crate::complex::Vh::H)).collect();
    let v_ends: Vec<EdgeEnd> =
        c.ends_at(vid).iter().copied().filter(|&e| vh(e) == Some(crate::complex::Vh::V)).collect();
    let mut corner: HashMap<(EdgeEnd, EdgeEnd), (usize, usize)> = HashMap::new();
    for cn in c.corners_at(vid) {
        corner.insert((cn.a, cn.b), (cn.square, cn.index));
        corner.insert((cn.b, cn.a), (cn.square, cn.index));
    }
    // Square transport: from the ends (h, v) of a corner, the end of the
    // opposite horizontal edge at the vertical neighbour and the end of the
    // opposite vertical edge at the horizontal neighbour.
    let transport = |h: EdgeEnd, v: EdgeEnd| -> (EdgeEnd, EdgeEnd) {
        let (q, j) = corner[&(h, v)];
        let s = c.squares()[q].sides;
        let far_next = s[(j + 1) % 4].start_end();
        let far_prev = s[(j + 2) % 4].finish_end();
        if s[j].start_end() == h {
            (far_prev, far_next)
        } else {
            (far_next, far_prev)
        }
    };

    let mut h_words: Vec<Vec<Word>> = vec![vec![Vec::new()]];
    let mut v_words: Vec<Vec<Word>> = vec![vec![Vec::new()]];
    for k in 1..=r {
        let grow = |prev: &Vec<Word>, alphabet: &[EdgeEnd]| -> Vec<Word> {
            prev.iter().flat_map(|w| alphabet.iter().filter_map(move |&t| extend(w, t))).collect()
        };
        let nh = grow(&h_words[k - 1], &h_ends);
        let nv = grow(&v_words[k - 1], &v_ends);
        h_words.push(nh);
        v_words.push(nv);
    }
    let mut ids: HashMap<(Word, Word), usize> = HashMap::new();
    let mut pairs: Vec<(Word, Word)> = Vec::new();
    for i in 0..=r {
        for j in 0..=(r - i) {
            for g in &h_words[i] {
                for w in &v_words[j] {
                    ids.insert((g.clone(), w.clone()), pairs.len());
                    pairs.push((g.clone(), w.clone()));
                }
            }
        }
    }
    let mut lh: HashMap<(Word, EdgeEnd, Word), EdgeEnd> = HashMap::new();
    let mut lv: HashMap<(Word, Word, EdgeEnd), EdgeEnd> = HashMap::new();
    // Labels are filled in order of |g|+|w| so both recursions see earlier entries.
    for total in 0..r {
        for i in 0..=total {
            let j = total - i;
            for g in &h_words[i] {
                for w in &v_words[j] {
                    for &t in &h_ends {
                        if extend(g, t).is_none() {
                            continue;
                        }
                        let label = match w.split_last() {
                            None => t,
                            Some((&s, w0)) => {
                                let w0 = w0.to_vec();
                                let h = lh[&(g.clone(), t, w0.clone())];
                                let v = lv[&(g.clone(), w0, s)];
                                transport(h, v).0
                            }
                        };
                        lh.insert((g.clone(), t, w.clone()), label);
                    }
                    for &s in &v_ends {
                        if extend(w, s).is_none() {
                            continue;
                        }
                        let label = match g.split_last() {
                            None => s,
                            Some((&t, g0)) => {
                                let g0 = g0.to_vec();
                                let h = lh[&(g0.clone(), t, w.clone())];
                                let v = lv[&(g0, w.clone(), s)];
                                transport(h, v).1
                            }
                        };
                        lv.insert((g.clone(), w.clone(), s), label);
                    }
                }
            }
        }
    }
    let n = pairs.len();
    let mut out = vec![BTreeMap::new(); n];
    let mut inn = vec![BTreeMap::new(); n];
    let mut add = |from: usize, to: usize, label: EdgeEnd| match label.end {
        End::Source => {
            out[from].insert(label.edge, to);
            inn[to].insert(label.edge, from);
        }
        End::Target => {
            inn[from].insert(label.edge, to);
            out[to].insert(label.edge, from);
        }
    };
    for ((g, t, w), &label) in &lh {
        let from = ids[&(g.clone(), w.clone())];
        let to = ids[&(extend(g, *t).expect("reduced"), w.clone())];
        add(from, to, label);
    }
    for ((g, w, s), &label) in &lv {
        let from = ids[&(g.clone(), w.clone())];
        let to = ids[&(g.clone(), extend(w, *s).expect("reduced"))];
        add(from, to, label);
    }
    let rho = vec![vid; n];
    finalize(c, &rho, &out, &inn, 0, r, BallKind::Ball)
}

/// Basepoint-fixing isomorphism over the identity of the base, found by
/// propagation; returns the vertex map when the two balls agree cell for cell.
pub fn balls_isomorphic(a: &CoverBall, b: &CoverBall) -> Option<Vec<usize>> {
    if a.cells.counts() != b.cells.counts() || a.rho_v[0] != b.rho_v[0] {
        return None;
    }
    let n = a.vertex_count();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    map[0] = 0;
    used[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        let y = map[x];
        if a.rho_v[x] != b.rho_v[y] || a.out[x].len() != b.out[y].len() || a.inn[x].len() != b.inn[y].len() {
            return None;
        }
        let pairs = a.out[x]
            .keys()
            .map(|&e| (a.follow(x, e, End::Source), b.follow(y, e, End::Source)))
            .chain(a.inn[x].keys().map(|&e| (a.follow(x, e, End::Target), b.follow(y, e, End::Target))));
        for (tx, ty) in pairs {
            let (tx, ty) = (tx?, ty?);
            if map[tx] == usize::MAX {
                if used[ty] {
                    return None;
                }
                map[tx] = ty;
                used[ty] = true;
                queue.push_back(tx);
            } else if map[tx] != ty {
                return None;
            }
        }
    }
    for (q, sq) in a.cells.squares().iter().enumerate() {
        let c0 = a.cells.side_start(sq.sides[0]);
        b.square_at(a.rho_sq[q], map[c0])?;
    }
    Some(map)
}

/// Lifts a base walk starting at `start`; returns the visited lifted vertices.
pub fn lift_path(ball: &CoverBall, base_path: &[Side], start: usize) -> Result<Vec<usize>> {
    let mut cur = start;
    let mut walk = vec![start];
    for (i, &side) in base_path.iter().enumerate() {
        if ball.base.side_start(side) != ball.rho_v[cur] {
            return Err(Error::Validation(format!("base walk is not connected at step {i}")));
        }
        cur = ball.step(cur, side).ok_or(Error::LeavesBall(i))?;
        walk.push(cur);
    }
    Ok(walk)
}

/// Parses a walk like `y+ c+ a-` over base edge names.
pub fn parse_walk(base: &SquareComplex, text: &str) -> Result<Vec<Side>> {
    text.split_whitespace()
        .map(|tok| {
            let (name, sign) = tok.split_at(tok.len().saturating_sub(1));
            let sign = Sign::parse(sign).ok_or_else(|| Error::Parse { line: 1, msg: format!("bad step `{tok}`") })?;
            let e = base.edge_id(name).ok_or_else(|| Error::Validation(format!("unknown edge `{name}`")))?;
            Ok(Side::new(e, sign))
        })
        .collect()
}

/// Restriction of the deck transformation taking `u` to `u2` to the largest
/// ball around `u` on which it is certified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeckMap {
    pub radius: usize,
    pub vertices: BTreeMap<usize, usize>,
    pub edges: BTreeMap<usize, usize>,
    pub squares: BTreeMap<usize, usize>,
}

pub fn deck_transport(ball: &CoverBall, u: usize, u2: usize) -> Result<DeckMap> {
    if ball.rho_v[u] != ball.rho_v[u2] {
        return Err(Error::DifferentFibers(ball.name(u).into(), ball.name(u2).into()));
    }
    let cap = ball.radius.saturating_sub(1 + ball.dist[u].max(ball.dist[u2]));
    let n = ball.vertex_count();
    let mut du = vec![usize::MAX; n];
    let mut image = vec![usize::MAX; n];
    du[u] = 0;
    image[u] = u2;
    let mut limit = cap;
    let mut queue = VecDeque::from([u]);
    let edges = ball.cells.edges();
    while let Some(x) = queue.pop_front() {
        if du[x] >= limit {
            continue;
        }
        let steps: Vec<(usize, usize, End)> = ball.out[x]
            .iter()
            .map(|(&e, &le)| (e, edges[le].dst, End::Source))
            .chain(ball.inn[x].iter().map(|(&e, &le)| (e, edges[le].src, End::Target)))
            .collect();
        for (e, t, at) in steps {
            let ty = if image[x] == usize::MAX { None } else { ball.follow(image[x], e, at) };
            if du[t] == usize::MAX {
                du[t] = du[x] + 1;
                match ty {
                    Some(ty) => image[t] = ty,
                    None => limit = limit.min(du[x]),
                }
                queue.push_back(t);
            } else if ty.is_some_and(|ty| image[t] != ty) {
                limit = limit.min(du[t].max(du[x]).saturating_sub(1));
            }
        }
    }
    let radius = limit;
    let inside = |x: usize| du[x] <= radius && image[x] != usize::MAX;
    let mut vertices = BTreeMap::new();
    for x in 0..n {
        if inside(x) {
            vertices.insert(x, image[x]);
        }
    }
    let mut emap = BTreeMap::new();
    for (le, e) in edges.iter().enumerate() {
        if inside(e.src) && inside(e.dst) {
            let img = ball.out_edge(image[e.src], ball.rho_e[le]).ok_or(Error::LeavesBall(du[e.src]))?;
            if edges[img].dst != image[e.dst] {
                return Err(Error::Validation(format!("deck map breaks edge {}", e.name)));
            }
            emap.insert(le, img);
        }
    }
    let mut smap = BTreeMap::new();
    for (q, sq) in ball.cells.squares().iter().enumerate() {
        let corners: Vec<usize> = sq.sides.iter().map(|&s| ball.cells.side_start(s)).collect();
        if corners.iter().all(|&x| inside(x)) {
            let img = ball.square_at(ball.rho_sq[q], image[corners[0]]).ok_or(Error::LeavesBall(radius))?;
            smap.insert(q, img);
        }
    }
    Ok(DeckMap { radius, vertices, edges: emap, squares: smap })
}

/// What a census isomorphism must preserve besides the directed structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CensusMode {
    /// Edge colors and vertex types.
    Colored,
    /// Vertex types only.
    Typed,
    /// Bare directed graph.
    Uncolored,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CensusClass {
    pub representative: usize,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Census {
    pub depth: usize,
    pub candidates: usize,
    pub classes: Vec<CensusClass>,
}

/// Depth-`d` truncated directed filter of `x` as a rooted labeled digraph.
pub fn truncated_filter(ball: &CoverBall, x: usize, d: usize, mode: CensusMode) -> LabeledDigraph {
    let edges = ball.cells.edges();
    let mut local: BTreeMap<usize, usize> = BTreeMap::new();
    let mut order = vec![x];
    local.insert(x, 0);
    let mut depth = vec![0usize];
    let mut i = 0;
    while i < order.len() {
        let y = order[i];
        if depth[i] < d {
            for &le in ball.out[y].values() {
                let t = edges[le].dst;
                if let std::collections::btree_map::Entry::Vacant(slot) = local.entry(t) {
                    slot.insert(order.len());
                    order.push(t);
                    depth.push(depth[i] + 1);
                }
            }
        }
        i += 1;
    }
    let vlabel = |v: usize| -> String {
        match mode {
            CensusMode::Uncolored => String::new(),
            _ => format!("{:?}", ball.cells.vertices()[v].vtype),
        }
    };
    let elabel = |le: usize| -> String {
        match mode {
            CensusMode::Colored => format!("{:?}", edges[le].color),
            _ => String::new(),
        }
    };
    let mut g = LabeledDigraph::new(order.iter().map(|&v| vlabel(v)).collect());
    for (li, &y) in order.iter().enumerate() {
        if depth[li] < d {
            for &le in ball.out[y].values() {
                g.add_edge(li, local[&edges[le].dst], elabel(le));
            }
        }
    }
    g
}

/// Vertices whose depth-`d` truncated filter has every non-leaf vertex interior.
pub fn census_candidates(ball: &CoverBall, d: usize) -> Vec<usize> {
    let edges = ball.cells.edges();
    (0..ball.vertex_count())
        .filter(|&x| {
            let mut frontier = vec![x];
            for _ in 0..d {
                let mut next = Vec::new();
                for y in frontier {
                    if !ball.is_interior(y) {
                        return false;
                    }
                    next.extend(ball.out[y].values().map(|&le| edges[le].dst));
                }
                next.sort_unstable();
                next.dedup();
                frontier = next;
            }
            true
        })
        .collect()
}

pub fn filter_type_census(ball: &CoverBall, d: usize, mode: CensusMode) -> Result<Census> {
    let candidates = census_candidates(ball, d);
    if candidates.is_empty() {
        return Err(Error::DepthExceedsBall { depth: d, available: ball.radius });
    }
    let mut classes: Vec<(LabeledDigraph, u64, CensusClass)> = Vec::new();
    for &x in &candidates {
        let g = truncated_filter(ball, x, d, mode);
        let inv = g.invariant();
        let hit = classes.iter_mut().find(|(h, hinv, _)| *hinv == inv && rooted_iso(&g, h).is_some());
        match hit {
            Some((_, _, class)) => class.members.push(x),
            None => classes.push((g, inv, CensusClass { representative: x, members: vec![x] })),
        }
    }
    Ok(Census { depth: d, candidates: candidates.len(), classes: classes.into_iter().map(|(_, _, c)| c).collect() })
}
