//! Rooted isomorphism of small labeled digraphs: colour refinement followed
//! by backtracking along a breadth-first spanning tree from the root.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::hash::{Hash, Hasher};

/// Digraph with vertex and edge labels, rooted at vertex 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDigraph {
    vlabel: Vec<String>,
    out: Vec<Vec<(usize, String)>>,
    inn: Vec<Vec<(usize, String)>>,
    edges: HashMap<(usize, usize), Vec<String>>,
    edge_count: usize,
}

impl LabeledDigraph {
    pub fn new(vlabel: Vec<String>) -> Self {
        let n = vlabel.len();
        LabeledDigraph {
            vlabel,
            out: vec![Vec::new(); n],
            inn: vec![Vec::new(); n],
            edges: HashMap::new(),
            edge_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.vlabel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vlabel.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn add_edge(&mut self, u: usize, v: usize, label: String) {
        self.out[u].push((v, label.clone()));
        self.inn[v].push((u, label.clone()));
        let slot = self.edges.entry((u, v)).or_default();
        slot.push(label);
        slot.sort();
        self.edge_count += 1;
    }

    pub fn out_edges(&self, u: usize) -> &[(usize, String)] {
        &self.out[u]
    }

    fn between(&self, u: usize, v: usize) -> &[String] {
        self.edges.get(&(u, v)).map_or(&[], Vec::as_slice)
    }

    /// Stable refinement colours; comparable across graphs.
    fn refine(&self) -> Vec<u64> {
        let h = |x: &dyn Fn(&mut DefaultHasher)| {
            let mut s = DefaultHasher::new();
            x(&mut s);
            s.finish()
        };
        let mut color: Vec<u64> = (0..self.len()).map(|v| h(&|s| (v == 0, &self.vlabel[v]).hash(s))).collect();
        let mut classes = distinct(&color);
        loop {
            let next: Vec<u64> = (0..self.len())
                .map(|v| {
                    let mut o: Vec<(&str, u64)> = self.out[v].iter().map(|(t, l)| (l.as_str(), color[*t])).collect();
                    let mut i: Vec<(&str, u64)> = self.inn[v].iter().map(|(t, l)| (l.as_str(), color[*t])).collect();
                    o.sort_unstable();
                    i.sort_unstable();
                    h(&|s| (color[v], &o, &i).hash(s))
                })
                .collect();
            let k = distinct(&next);
            color = next;
            if k == classes {
                return color;
            }
            classes = k;
        }
    }

    /// Isomorphism-invariant fingerprint.
    pub fn invariant(&self) -> u64 {
        let mut c = self.refine();
        c.sort_unstable();
        let mut s = DefaultHasher::new();
        (self.edge_count, c).hash(&mut s);
        s.finish()
    }
}

fn distinct(c: &[u64]) -> usize {
    let mut v = c.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Root-preserving, label-preserving isomorphism `g → h`, if one exists.
/// Every vertex of `g` must be reachable from the root.
pub fn rooted_iso(g: &LabeledDigraph, h: &LabeledDigraph) -> Option<Vec<usize>> {
    if g.len() != h.len() || g.edge_count != h.edge_count || g.is_empty() {
        return if g.is_empty() && h.is_empty() { Some(Vec::new()) } else { None };
    }
    let (cg, ch) = (g.refine(), h.refine());
    let hist = |c: &[u64]| {
        let mut m: BTreeMap<u64, usize> = BTreeMap::new();
        for &x in c {
            *m.entry(x).or_default() += 1;
        }
        m
    };
    if hist(&cg) != hist(&ch) || cg[0] != ch[0] {
        return None;
    }
    // Spanning tree in g: each non-root vertex is reached by an edge from an earlier one.
    let n = g.len();
    let mut order = vec![0usize];
    let mut parent: Vec<Option<(usize, bool, String)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        for (t, l) in &g.out[x] {
            if !seen[*t] {
                seen[*t] = true;
                parent[*t] = Some((x, true, l.clone()));
                order.push(*t);
                queue.push_back(*t);
            }
        }
        for (t, l) in &g.inn[x] {
            if !seen[*t] {
                seen[*t] = true;
                parent[*t] = Some((x, false, l.clone()));
                order.push(*t);
                queue.push_back(*t);
            }
        }
    }
    if order.len() != n {
        return None;
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    map[0] = 0;
    used[0] = true;
    let mut mapped = vec![0usize];
    if extend(g, h, &cg, &ch, &order, &parent, 1, &mut map, &mut used, &mut mapped) {
        Some(map)
    } else {
        None
    }
}

#[allow(clippy::too_many_arguments)]
fn extend(
    g: &LabeledDigraph,
    h: &LabeledDigraph,
    cg: &[u64],
    ch: &[u64],
    order: &[usize],
    parent: &[Option<(usize, bool, String)>],
    i: usize,
    map: &mut [usize],
    used: &mut [bool],
    mapped: &mut Vec<usize>,
) -> bool {
    if i == order.len() {
        return true;
    }
    let x = order[i];
    let (p, forward, label) = parent[x].as_ref().expect("non-root has a parent");
    let fp = map[*p];
    let cands: Vec<usize> = if *forward {
        h.out[fp].iter().filter(|(_, l)| l == label).map(|(t, _)| *t).collect()
    } else {
        h.inn[fp].iter().filter(|(_, l)| l == label).map(|(t, _)| *t).collect()
    };
    for y in cands {
        if used[y] || cg[x] != ch[y] {
            continue;
        }
        let consistent =
            mapped.iter().all(|&z| g.between(x, z) == h.between(y, map[z]) && g.between(z, x) == h.between(map[z], y))
                && g.between(x, x) == h.between(y, y);
        if !consistent {
            continue;
        }
        map[x] = y;
        used[y] = true;
        mapped.push(x);
        if extend(g, h, cg, ch, order, parent, i + 1, map, used, mapped) {
            return true;
        }
        mapped.pop();
        used[y] = false;
        map[x] = usize::MAX;
    }
    false
}
