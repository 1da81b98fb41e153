//! Edge labelings of domain fragments. A labeling assigns one symbol per Θ
//! class, so opposite sides of every square agree by construction and only
//! determinism has to be checked or searched.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complex::{check_admissible_orientation, SquareComplex, Verdict};
use crate::cover::unfold_ball;
use crate::error::{Error, Result};
use crate::events::{events_from_filter, EventFragment};
use crate::iso::{rooted_iso, LabeledDigraph};
use crate::median::{principal_filter, DomainFragment};
use crate::special::{base_hyperplanes, Pathology};
use crate::wise::{tip_lengths, QuadrantFragment};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeLabeling {
    alphabet: Vec<String>,
    /// Alphabet index per Θ class.
    labels: Vec<Option<usize>>,
    /// Symmetric and irreflexive, as alphabet index pairs.
    independence: Option<BTreeSet<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct LabelingDoc {
    alphabet: Vec<String>,
    labels: BTreeMap<usize, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    independence: Option<Vec<(String, String)>>,
}

impl EdgeLabeling {
    pub fn new(alphabet: Vec<String>, labels: Vec<Option<usize>>) -> Result<Self> {
        if let Some(&bad) = labels.iter().flatten().find(|&&l| l >= alphabet.len()) {
            return Err(Error::Validation(format!("label index {bad} outside an alphabet of {}", alphabet.len())));
        }
        Ok(EdgeLabeling { alphabet, labels, independence: None })
    }

    /// Alphabet `0, 1, …, k − 1`.
    pub fn numbered(k: usize, labels: Vec<Option<usize>>) -> Result<Self> {
        Self::new((0..k).map(|i| i.to_string()).collect(), labels)
    }

    /// Symmetric closure of `pairs`; a diagonal pair is rejected.
    pub fn with_independence(mut self, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::Validation(format!(
                    "independence is irreflexive, got ({0}, {0})",
                    self.alphabet[a]
                )));
            }
            if a.max(b) >= self.alphabet.len() {
                return Err(Error::Validation("independence pair outside the alphabet".into()));
            }
            set.insert((a, b));
            set.insert((b, a));
        }
        self.independence = Some(set);
        Ok(self)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, class: usize) -> Option<usize> {
        self.labels.get(class).copied().flatten()
    }

    pub fn symbol(&self, class: usize) -> Option<&str> {
        self.label(class).map(|l| self.alphabet[l].as_str())
    }

    pub fn independence(&self) -> Option<&BTreeSet<(usize, usize)>> {
        self.independence.as_ref()
    }

    pub fn independent(&self, a: usize, b: usize) -> bool {
        self.independence.as_ref().is_some_and(|i| i.contains(&(a, b)))
    }

    fn require(&self, class: usize) -> Result<usize> {
        self.label(class).ok_or(Error::UnlabeledClass(class))
    }

    /// Label of a fragment edge, through its Θ class.
    pub fn edge_label(&self, frag: &DomainFragment, e: usize) -> Result<usize> {
        self.require(frag.theta(e))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = LabelingDoc {
            alphabet: self.alphabet.clone(),
            labels: self
                .labels
                .iter()
                .enumerate()
                .filter_map(|(c, l)| Some((c, self.alphabet[(*l)?].clone())))
                .collect(),
            independence: self.independence.as_ref().map(|i| {
                i.iter()
                    .filter(|(a, b)| a < b)
                    .map(|&(a, b)| (self.alphabet[a].clone(), self.alphabet[b].clone()))
                    .collect()
            }),
        };
        serde_json::to_value(doc).expect("labeling serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LabelingDoc = serde_json::from_str(text)?;
        let index: BTreeMap<&str, usize> = doc.alphabet.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let lookup = |s: &str| {
            index.get(s).copied().ok_or_else(|| Error::Validation(format!("symbol `{s}` is not in the alphabet")))
        };
        let n = doc.labels.keys().next_back().map_or(0, |&c| c + 1);
        let mut labels = vec![None; n];
        for (&c, s) in &doc.labels {
            labels[c] = Some(lookup(s)?);
        }
        let mut l = EdgeLabeling::new(doc.alphabet.clone(), labels)?;
        if let Some(pairs) = &doc.independence {
            let idx: Vec<(usize, usize)> =
                pairs.iter().map(|(a, b)| Ok((lookup(a)?, lookup(b)?))).collect::<Result<_>>()?;
            l = l.with_independence(idx)?;
        }
        Ok(l)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NiceViolation {
    pub vertex: usize,
    pub edges: (usize, usize),
    pub label: String,
}

/// Determinism at every vertex; concurrency holds structurally.
pub fn check_nice(l: &EdgeLabeling, frag: &DomainFragment) -> Result<Verdict<NiceViolation>> {
    for class in 0..frag.theta_count() {
        l.require(class)?;
    }
    for v in 0..frag.len() {
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for &e in frag.out_edges(v) {
            let lab = l.edge_label(frag, e)?;
            if let Some(&f) = seen.get(&lab) {
                return Ok(Verdict::Fail(NiceViolation { vertex: v, edges: (f, e), label: l.alphabet[lab].clone() }));
            }
            seen.insert(lab, e);
        }
    }
    Ok(Verdict::Pass)
}

/// Classes must differ when they leave a common vertex.
struct ContactGraph {
    /// Classes by first appearance from the root.
    order: Vec<usize>,
    /// Per position: earlier positions in contact.
    earlier: Vec<Vec<usize>>,
    /// A vertex with two out-edges in one class; no labeling exists.
    blocked: Option<usize>,
}

impl ContactGraph {
    fn new(frag: &DomainFragment) -> Self {
        let mut verts: Vec<usize> = (0..frag.len()).collect();
        verts.sort_by_key(|&v| (frag.depth(v), v));
        let mut pos = vec![usize::MAX; frag.theta_count()];
        let mut order = Vec::new();
        let mut blocked = None;
        let mut contact: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &v in &verts {
            let cls: Vec<usize> = frag.out_edges(v).iter().map(|&e| frag.theta(e)).collect();
            for &c in &cls {
                if pos[c] == usize::MAX {
                    pos[c] = order.len();
                    order.push(c);
                }
            }
            for (i, &a) in cls.iter().enumerate() {
                for &b in &cls[i + 1..] {
                    if a == b {
                        blocked.get_or_insert(v);
                    } else {
                        let (x, y) = (pos[a].min(pos[b]), pos[a].max(pos[b]));
                        contact.insert((y, x));
                    }
                }
            }
        }
        let mut earlier = vec![Vec::new(); order.len()];
        for (y, x) in contact {
            earlier[y].push(x);
        }
        ContactGraph { order, earlier, blocked }
    }
}

/// Outcome of an exhaustive labeling search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(EdgeLabeling),
    Unsat(UnsatCertificate),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnsatCertificate {
    pub k: usize,
    pub classes: usize,
    /// Search nodes visited before exhaustion.
    pub nodes: u64,
    /// A vertex whose out-edges alone rule out every labeling.
    pub blocked_vertex: Option<usize>,
}

/// Depth-first labeling search over classes in contact order. A class may
/// open at most one new symbol beyond those already in use, so each
/// labeling is produced once up to renaming the alphabet.
struct Search<'a> {
    g: &'a ContactGraph,
    k: usize,
    rng: Option<ChaCha8Rng>,
    nodes: u64,
}

impl Search<'_> {
    fn candidates(&mut self, assign: &[usize]) -> Vec<usize> {
        let i = assign.len();
        let used = assign.iter().copied().max().map_or(0, |m| m + 1);
        let taken: BTreeSet<usize> = self.g.earlier[i].iter().map(|&x| assign[x]).collect();
        let mut c: Vec<usize> = (0..(used + 1).min(self.k)).filter(|l| !taken.contains(l)).collect();
        if let Some(rng) = self.rng.as_mut() {
            c.shuffle(rng);
        }
        c
    }

    /// Calls `visit` on each complete assignment until it returns false.
    fn run(&mut self, mut visit: impl FnMut(&[usize]) -> bool) {
        let n = self.g.order.len();
        if self.g.blocked.is_some() || (n > 0 && self.k == 0) {
            return;
        }
        let mut assign: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<Vec<usize>> = vec![self.candidates(&assign)];
        while let Some(top) = stack.last_mut() {
            let Some(l) = top.pop() else {
                stack.pop();
                assign.pop();
                continue;
            };
            self.nodes += 1;
            if assign.len() == stack.len() {
                assign.pop();
            }
            assign.push(l);
            if assign.len() == n {
                if !visit(&assign) {
                    return;
                }
                continue;
            }
            let next = self.candidates(&assign);
            stack.push(next);
        }
    }
}

fn to_labeling(g: &ContactGraph, k: usize, classes: usize, assign: &[usize]) -> EdgeLabeling {
    let mut labels = vec![None; classes];
    for (p, &c) in g.order.iter().enumerate() {
        labels[c] = Some(assign[p]);
    }
    EdgeLabeling::numbered(k, labels).expect("labels stay below k")
}

pub fn search_nice(frag: &DomainFragment, k: usize) -> SearchOutcome {
    let g = ContactGraph::new(frag);
    let mut s = Search { g: &g, k, rng: None, nodes: 0 };
    let mut found = None;
    s.run(|a| {
        found = Some(to_labeling(&g, k, frag.theta_count(), a));
        false
    });
    match found {
        Some(l) => SearchOutcome::Found(l),
        None => SearchOutcome::Unsat(UnsatCertificate {
            k,
            classes: g.order.len(),
            nodes: s.nodes,
            blocked_vertex: g.blocked,
        }),
    }
}

/// Labelings in search order, at most `limit` of them; the flag says whether
/// the search space was exhausted.
pub fn enumerate_nice(frag: &DomainFragment, k: usize, limit: usize) -> (Vec<EdgeLabeling>, bool) {
    let g = ContactGraph::new(frag);
    let mut s = Search { g: &g, k, rng: None, nodes: 0 };
    let mut out = Vec::new();
    let mut exhausted = true;
    if limit == 0 {
        return (out, false);
    }
    s.run(|a| {
        out.push(to_labeling(&g, k, frag.theta_count(), a));
        if out.len() >= limit {
            exhausted = false;
            return false;
        }
        true
    });
    (out, exhausted)
}

/// First labelings of `count` randomized searches, deduplicated.
pub fn sample_nice(frag: &DomainFragment, k: usize, count: usize, seed: u64) -> Vec<EdgeLabeling> {
    let g = ContactGraph::new(frag);
    let mut out: Vec<EdgeLabeling> = Vec::new();
    for i in 0..count as u64 {
        let mut s = Search { g: &g, k, rng: Some(ChaCha8Rng::seed_from_u64(seed.wrapping_add(i))), nodes: 0 };
        let mut found = None;
        s.run(|a| {
            found = Some(to_labeling(&g, k, frag.theta_count(), a));
            false
        });
        match found {
            Some(l) if !out.contains(&l) => out.push(l),
            Some(_) => {}
            None => break,
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum TraceAxiom {
    Les1,
    Les2,
    Les3,
}

impl TraceAxiom {
    pub fn name(self) -> &'static str {
        match self {
            TraceAxiom::Les1 => "LES1",
            TraceAxiom::Les2 => "LES2",
            TraceAxiom::Les3 => "LES3",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceViolation {
    pub axiom: TraceAxiom,
    pub events: (usize, usize),
    pub labels: (String, String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceReport {
    /// First violation of each axiom.
    pub violations: Vec<TraceViolation>,
    pub counts: BTreeMap<String, usize>,
    pub checked_pairs: usize,
    /// Θ classes of the fragment whose relations were not resolved.
    pub unresolved_classes: usize,
}

impl TraceReport {
    pub fn axioms(&self) -> BTreeSet<TraceAxiom> {
        self.violations.iter().map(|v| v.axiom).collect()
    }

    pub fn verdict(&self) -> Verdict<TraceViolation> {
        match self.violations.first() {
            Some(v) => Verdict::Fail(v.clone()),
            None => Verdict::Pass,
        }
    }
}

/// LES1–3 on every pair of resolved events.
pub fn check_trace(l: &EdgeLabeling, ef: &EventFragment) -> Result<TraceReport> {
    if l.independence.is_none() {
        return Err(Error::MissingIndependence);
    }
    let lab: Vec<usize> = ef.events().iter().map(|e| l.require(e.class)).collect::<Result<_>>()?;
    let mut found: BTreeMap<TraceAxiom, TraceViolation> = BTreeMap::new();
    let mut counts: BTreeMap<TraceAxiom, usize> = BTreeMap::new();
    let mut record = |axiom: TraceAxiom, e: usize, f: usize| {
        *counts.entry(axiom).or_default() += 1;
        found.entry(axiom).or_insert_with(|| TraceViolation {
            axiom,
            events: (e, f),
            labels: (l.alphabet[lab[e]].clone(), l.alphabet[lab[f]].clone()),
        });
    };
    let n = ef.len();
    let mut checked = 0;
    for e in 0..n {
        for f in 0..n {
            if e == f {
                continue;
            }
            checked += 1;
            let dependent = !l.independent(lab[e], lab[f]);
            if e < f && ef.minimal_conflict(e, f) && lab[e] == lab[f] {
                record(TraceAxiom::Les1, e, f);
            }
            if (ef.immediate(e, f) || (e < f && ef.minimal_conflict(e, f))) && !dependent {
                record(TraceAxiom::Les2, e, f);
            }
            if e < f && dependent && ef.concurrent(e, f) {
                record(TraceAxiom::Les3, e, f);
            }
        }
    }
    Ok(TraceReport {
        violations: found.into_values().collect(),
        counts: counts.into_iter().map(|(a, c)| (a.name().to_string(), c)).collect(),
        checked_pairs: checked / 2,
        unresolved_classes: ef.unresolved_classes(),
    })
}

/// Each fragment class is labeled by the base hyperplane of its edges;
/// two hyperplanes are independent when they cross.
pub fn canonical_hyperplane_labeling(base: &SquareComplex, frag: &DomainFragment) -> Result<EdgeLabeling> {
    let h = base_hyperplanes(base);
    let mut labels = vec![None; frag.theta_count()];
    for (e, edge) in frag.edges().iter().enumerate() {
        let b = edge.base_edge.ok_or_else(|| Error::Validation(format!("fragment edge {e} has no base edge")))?;
        let hp = *h.of_edge.get(b).ok_or_else(|| Error::Validation(format!("base edge {b} out of range")))?;
        let slot = &mut labels[frag.theta(e)];
        match *slot {
            None => *slot = Some(hp),
            Some(x) if x == hp => {}
            Some(x) => {
                return Err(Error::Validation(format!(
                    "Θ class {} covers two base hyperplanes ({} and {})",
                    frag.theta(e),
                    h.list[x].name,
                    h.list[hp].name
                )))
            }
        }
    }
    let alphabet = h.list.iter().map(|x| x.name.clone()).collect();
    EdgeLabeling::new(alphabet, labels)?.with_independence(h.intersections.iter().copied())
}

/// Trace axiom that the canonical labeling breaks for each fatal pathology.
/// A one-sided hyperplane admits no orientation, so no event structure
/// exists to check.
pub fn expected_axiom(p: Pathology) -> Option<TraceAxiom> {
    match p {
        Pathology::SelfIntersection => Some(TraceAxiom::Les3),
        Pathology::DirectSelfOsculation => Some(TraceAxiom::Les1),
        Pathology::InterOsculation => Some(TraceAxiom::Les2),
        Pathology::OneSided | Pathology::IndirectSelfOsculation => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BridgeFragment {
    pub vertex: String,
    pub events: usize,
    pub nice: bool,
    pub report: TraceReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BridgeReport {
    pub radius: usize,
    pub fragments: Vec<BridgeFragment>,
    /// Union of violated axioms over all fragments.
    pub axioms: BTreeSet<TraceAxiom>,
}

/// Canonical labeling checked against LES1–3 on the principal filter of a
/// lift of every base vertex, inside the radius-`r` ball around it.
pub fn hyperplane_trace_bridge(c: &SquareComplex, r: usize) -> Result<BridgeReport> {
    if let Verdict::Fail(w) = check_admissible_orientation(c) {
        return Err(Error::NotAdmissible(w.square));
    }
    let mut fragments = Vec::new();
    let mut axioms = BTreeSet::new();
    for v in c.vertices() {
        let ball = unfold_ball(c, &v.name, r)?;
        let frag = principal_filter(&ball, ball.basepoint())?;
        let ef = events_from_filter(&frag)?;
        let l = canonical_hyperplane_labeling(c, &frag)?;
        let report = check_trace(&l, &ef)?;
        axioms.extend(report.axioms());
        fragments.push(BridgeFragment {
            vertex: v.name.clone(),
            events: ef.len(),
            nice: check_nice(&l, &frag)?.is_pass(),
            report,
        });
    }
    Ok(BridgeReport { radius: r, fragments, axioms })
}

fn labeled_cone(frag: &DomainFragment, l: &EdgeLabeling, v: usize, d: usize) -> Result<(LabeledDigraph, Vec<usize>)> {
    let mut local: BTreeMap<usize, usize> = BTreeMap::from([(v, 0)]);
    let mut order = vec![v];
    let mut dist = vec![0usize];
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        if dist[i] < d {
            if frag.is_open(x) {
                return Err(Error::BoundaryUnsafe(format!(
                    "open vertex `{}` at depth {} of a depth-{d} cone",
                    frag.name(x),
                    dist[i]
                )));
            }
            for &e in frag.out_edges(x) {
                let t = frag.edges()[e].dst;
                if let std::collections::btree_map::Entry::Vacant(slot) = local.entry(t) {
                    slot.insert(order.len());
                    order.push(t);
                    dist.push(dist[i] + 1);
                }
            }
        }
        i += 1;
    }
    let mut g = LabeledDigraph::new(order.iter().map(|&x| format!("{:?}", frag.vtype(x))).collect());
    for (li, &x) in order.iter().enumerate() {
        if dist[li] < d {
            for &e in frag.out_edges(x) {
                let lab = l.edge_label(frag, e)?;
                g.add_edge(li, local[&frag.edges()[e].dst], l.alphabet[lab].clone());
            }
        }
    }
    Ok((g, order))
}

/// Directed, label- and type-preserving isomorphism between the depth-`d`
/// cones of `v1` and `v2`, as fragment vertex pairs.
pub fn labeled_filter_iso(
    frag: &DomainFragment,
    l: &EdgeLabeling,
    v1: usize,
    v2: usize,
    d: usize,
) -> Result<Option<Vec<(usize, usize)>>> {
    let (g, o1) = labeled_cone(frag, l, v1, d)?;
    let (h, o2) = labeled_cone(frag, l, v2, d)?;
    Ok(rooted_iso(&g, &h).map(|m| m.iter().enumerate().map(|(a, &b)| (o1[a], o2[b])).collect()))
}

/// Two out-edges of `z_{m,i}` that a label- and type-preserving isomorphism
/// from the filter at height `k` to the one at height `m` would force to
/// carry the same label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObstructionWitness {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub index: usize,
    pub vertex: String,
    /// `z_{m,i} → u_{m,i}`, the image forced by the label.
    pub edge1: (String, String),
    /// `z_{m,i} → ũ`, the image forced by the tip length.
    pub edge2: (String, String),
    pub required_label: String,
    pub edge2_label: String,
    /// Tip lengths at `u_{k,i}`, `u_{m,i}`, `ũ`.
    pub tips: (usize, usize, usize),
    pub word_k: String,
    pub word_m: String,
}

pub fn regular_obstruction_witness(
    q: &QuadrantFragment,
    l: &EdgeLabeling,
    k: usize,
    m: usize,
    n: usize,
) -> Result<ObstructionWitness> {
    let frag = &q.frag;
    if n > q.rect.width || k.max(m) >= q.rect.height {
        return Err(Error::BoundaryUnsafe(format!(
            "rows {k} and {m} of width {n} need a quadrant larger than {}×{}",
            q.rect.width, q.rect.height
        )));
    }
    let (wk, wm) = (&q.rect.rows[k][..n], &q.rect.rows[m][..n]);
    if wk == wm {
        return Err(Error::WordsEqual { n, k, m });
    }
    if let Verdict::Fail(w) = check_nice(l, frag)? {
        return Err(Error::NotNice(frag.name(w.vertex).to_string()));
    }
    let edge_to = |a: usize, b: usize| -> usize {
        *frag.out_edges(a).iter().find(|&&e| frag.edges()[e].dst == b).expect("quadrant edge present")
    };
    let tips = tip_lengths();
    for i in 0..n {
        let (zk, zm) = (q.z[k][i], q.z[m][i]);
        let (uk, um) = (q.u[k][i], q.u[m][i]);
        let (ek, e1) = (edge_to(zk, uk), edge_to(zm, um));
        if frag.theta(ek) != frag.theta(e1) {
            return Err(Error::Validation(format!("column {i} half-edges at heights {k} and {m} are not parallel")));
        }
        let required = l.edge_label(frag, ek)?;
        if wk.as_bytes()[i] == wm.as_bytes()[i] {
            continue;
        }
        let want = &wk[i..i + 1];
        let alt = q
            .midpoint_by_color(zm, want)
            .ok_or_else(|| Error::Validation(format!("no out-edge of color {want} at `{}`", frag.name(zm))))?;
        let e2 = edge_to(zm, alt);
        let name = |e: usize| (frag.name(frag.edges()[e].src).to_string(), frag.name(frag.edges()[e].dst).to_string());
        return Ok(ObstructionWitness {
            k,
            m,
            n,
            index: i,
            vertex: frag.name(zm).to_string(),
            edge1: name(e1),
            edge2: name(e2),
            required_label: l.alphabet[required].clone(),
            edge2_label: l.alphabet[l.edge_label(frag, e2)?].clone(),
            tips: (tips[want], q.tip[&um], q.tip[&alt]),
            word_k: wk.to_string(),
            word_m: wm.to_string(),
        });
    }
    unreachable!("distinct words differ at some index")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::unfold_filter;
    use crate::format::parse_complex;
    use crate::median::FragmentBuilder;
    use crate::special::check_special;
    use crate::wise::quadrant_fragment;
    use proptest::prelude::*;

    fn square() -> DomainFragment {
        DomainFragment::grid(2, 2)
    }

    fn unwrap_found(o: SearchOutcome) -> EdgeLabeling {
        match o {
            SearchOutcome::Found(l) => l,
            SearchOutcome::Unsat(c) => panic!("unexpected UNSAT {c:?}"),
        }
    }

    fn load(name: &str) -> SquareComplex {
        let path = format!("{}/../../data/{name}.sqc", env!("CARGO_MANIFEST_DIR"));
        parse_complex(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn single_square_needs_two_labels() {
        let f = square();
        assert!(matches!(search_nice(&f, 1), SearchOutcome::Unsat(_)));
        let l = unwrap_found(search_nice(&f, 2));
        assert!(check_nice(&l, &f).unwrap().is_pass());
    }

    #[test]
    fn binary_tree_with_equal_child_labels_fails() {
        let f = DomainFragment::out_tree(2, 2);
        let l = EdgeLabeling::numbered(1, vec![Some(0); f.theta_count()]).unwrap();
        let v = check_nice(&l, &f).unwrap();
        assert_eq!(v.witness().unwrap().vertex, 0);
        let partial = EdgeLabeling::numbered(1, vec![None; f.theta_count()]).unwrap();
        assert_eq!(check_nice(&partial, &f), Err(Error::UnlabeledClass(0)));
    }

    #[test]
    fn grid_takes_two_labels() {
        let f = DomainFragment::grid(5, 5);
        let l = unwrap_found(search_nice(&f, 2));
        assert!(check_nice(&l, &f).unwrap().is_pass());
        let (all, exhausted) = enumerate_nice(&f, 2, 100);
        assert!(exhausted);
        // Rows and columns are two classes in contact at every inner vertex.
        assert_eq!(all.len(), 1);
    }

    #[test]
    fn zero_vertex_star_of_w_needs_five_labels() {
        let w = crate::wise::build_w();
        let ball = unfold_filter(&w, "v", 2).unwrap();
        let f = principal_filter(&ball, ball.basepoint()).unwrap();
        assert_eq!(f.out_edges(0).len(), 5);
        assert!(matches!(search_nice(&f, 4), SearchOutcome::Unsat(_)));
        let l = unwrap_found(search_nice(&f, 5));
        assert!(check_nice(&l, &f).unwrap().is_pass());
    }

    #[test]
    fn repeated_class_at_a_vertex_blocks_every_labeling() {
        let mut b = FragmentBuilder::new();
        let r = b.vertex("r", None);
        let x = b.vertex("x", None);
        b.edge(r, x);
        let f = b.build(2).unwrap();
        assert!(matches!(search_nice(&f, 1), SearchOutcome::Found(_)));
        assert!(matches!(search_nice(&f, 0), SearchOutcome::Unsat(_)));
    }

    #[test]
    fn labeling_json_round_trip() {
        let l = EdgeLabeling::new(vec!["p".into(), "q".into()], vec![Some(0), Some(1), None])
            .unwrap()
            .with_independence([(0, 1)])
            .unwrap();
        let back = EdgeLabeling::from_json(&l.to_json().to_string()).unwrap();
        assert_eq!(back.label(1), Some(1));
        assert!(back.independent(1, 0));
        assert!(EdgeLabeling::numbered(2, vec![Some(0)]).unwrap().with_independence([(1, 1)]).is_err());
    }

    fn two_event_fragment() -> (DomainFragment, EventFragment) {
        let f = square();
        let ef = events_from_filter(&f).unwrap();
        (f, ef)
    }

    #[test]
    fn trace_axioms_on_tiny_fragments() {
        let (f, ef) = two_event_fragment();
        let same = EdgeLabeling::numbered(1, vec![Some(0); f.theta_count()]).unwrap().with_independence([]).unwrap();
        assert_eq!(check_trace(&same, &ef).unwrap().axioms(), BTreeSet::from([TraceAxiom::Les3]));
        let bare = EdgeLabeling::numbered(1, vec![Some(0); f.theta_count()]).unwrap();
        assert_eq!(check_trace(&bare, &ef), Err(Error::MissingIndependence));

        let mut b = FragmentBuilder::new();
        let r = b.vertex("r", None);
        let x = b.vertex("x", None);
        let y = b.vertex("y", None);
        b.edge(r, x);
        b.edge(x, y);
        let chain = b.build(4).unwrap();
        let ef = events_from_filter(&chain).unwrap();
        let indep = EdgeLabeling::numbered(2, (0..2).map(Some).collect()).unwrap().with_independence([(0, 1)]).unwrap();
        assert_eq!(check_trace(&indep, &ef).unwrap().axioms(), BTreeSet::from([TraceAxiom::Les2]));
    }

    #[test]
    fn torus_hyperplane_labeling() {
        let c = load("torus");
        let ball = unfold_ball(&c, "v", 4).unwrap();
        let f = principal_filter(&ball, ball.basepoint()).unwrap();
        let l = canonical_hyperplane_labeling(&c, &f).unwrap();
        assert_eq!(l.alphabet(), ["H_a", "H_b"]);
        assert!(l.independent(0, 1));
        assert!(check_nice(&l, &f).unwrap().is_pass());
        let ef = events_from_filter(&f).unwrap();
        assert!(check_trace(&l, &ef).unwrap().verdict().is_pass());
    }

    #[test]
    fn rose_has_no_independence() {
        let c = load("rose");
        let ball = unfold_ball(&c, "v", 3).unwrap();
        let f = principal_filter(&ball, ball.basepoint()).unwrap();
        let l = canonical_hyperplane_labeling(&c, &f).unwrap();
        assert!(l.independence().unwrap().is_empty());
    }

    #[test]
    fn filter_iso_identity_and_refusal() {
        let q = quadrant_fragment(4, 8).unwrap();
        let l = unwrap_found(search_nice(&q.frag, 5));
        let z = q.z[1][0];
        let id = labeled_filter_iso(&q.frag, &l, z, z, 6).unwrap().unwrap();
        assert!(id.iter().all(|&(a, b)| a == b));
        assert!(matches!(labeled_filter_iso(&q.frag, &l, q.z[7][0], q.z[7][0], 6), Err(Error::BoundaryUnsafe(_))));
    }

    #[test]
    fn obstruction_examples() {
        let q = quadrant_fragment(4, 8).unwrap();
        let l = unwrap_found(search_nice(&q.frag, 5));
        let w = regular_obstruction_witness(&q, &l, 0, 1, 1).unwrap();
        assert_eq!(w.index, 0);
        assert_ne!(w.tips.0, w.tips.1);
        assert_eq!(w.tips.0, w.tips.2);
        assert_ne!(w.required_label, w.edge2_label);
        assert!(regular_obstruction_witness(&q, &l, 1, 3, 2).is_ok());
        assert_eq!(regular_obstruction_witness(&q, &l, 2, 2, 2), Err(Error::WordsEqual { n: 2, k: 2, m: 2 }));
        let bad = EdgeLabeling::numbered(1, vec![Some(0); q.frag.theta_count()]).unwrap();
        assert!(matches!(regular_obstruction_witness(&q, &bad, 0, 1, 1), Err(Error::NotNice(_))));
    }

    #[test]
    fn unsat_is_monotone_on_small_trees() {
        for branching in 1..4 {
            let f = DomainFragment::out_tree(branching, 3);
            for k in 1..5 {
                let sat = matches!(search_nice(&f, k), SearchOutcome::Found(_));
                assert_eq!(sat, k >= branching, "branching {branching}, k {k}");
            }
        }
    }

    #[test]
    fn bridge_matches_pathologies_on_fixtures() {
        for name in ["torus", "square", "rose"] {
            let c = load(name);
            assert!(check_special(&c).special, "{name}");
            let b = hyperplane_trace_bridge(&c, 4).unwrap();
            assert!(b.axioms.is_empty(), "{name}: {:?}", b.axioms);
        }
        for name in ["self_intersect", "direct_osculation", "inter_osculation", "wise_x"] {
            let c = load(name);
            let want: BTreeSet<TraceAxiom> =
                check_special(&c).report.fatal_kinds().into_iter().filter_map(expected_axiom).collect();
            assert_eq!(hyperplane_trace_bridge(&c, 4).unwrap().axioms, want, "{name}");
        }
        assert!(matches!(hyperplane_trace_bridge(&load("mobius"), 4), Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn determinism_breaks_under_self_intersection_and_direct_osculation() {
        for name in ["self_intersect", "direct_osculation", "wise_x"] {
            let b = hyperplane_trace_bridge(&load(name), 4).unwrap();
            assert!(b.fragments.iter().any(|f| !f.nice), "{name}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn found_labelings_are_nice(w in 1usize..5, h in 1usize..5, k in 1usize..4, seed in 0u64..100) {
            let f = DomainFragment::grid(w, h);
            for l in sample_nice(&f, k, 4, seed) {
                prop_assert!(check_nice(&l, &f).unwrap().is_pass());
            }
            let (all, _) = enumerate_nice(&f, k, 16);
            for l in all {
                prop_assert!(check_nice(&l, &f).unwrap().is_pass());
            }
        }

        #[test]
        fn filter_iso_is_symmetric_and_composes(a in 0usize..3, b in 0usize..3, c in 0usize..3) {
            let q = quadrant_fragment(3, 8).unwrap();
            let l = match search_nice(&q.frag, 5) { SearchOutcome::Found(l) => l, _ => unreachable!() };
            let z = |j: usize| q.z[j][0];
            let d = 2;
            let ab = labeled_filter_iso(&q.frag, &l, z(a), z(b), d).unwrap();
            let ba = labeled_filter_iso(&q.frag, &l, z(b), z(a), d).unwrap();
            prop_assert_eq!(ab.is_some(), ba.is_some());
            let bc = labeled_filter_iso(&q.frag, &l, z(b), z(c), d).unwrap();
            let ac = labeled_filter_iso(&q.frag, &l, z(a), z(c), d).unwrap();
            if ab.is_some() && bc.is_some() {
                prop_assert!(ac.is_some());
            }
        }
    }
}
