//! Event structures read off principal filters: events are Θ classes,
//! configurations are vertices, and the relations come from whether the
//! union of two causal pasts is again a vertex of the filter.
//!
//! An event is resolved when its gate edge ends at depth at most `D/2` of a
//! fragment of complete depth `D`. For two resolved events the union of
//! their pasts has at most `D` events, so every relation between them is
//! decided inside the fragment.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::complex::Verdict;
use crate::error::{Error, Result};
use crate::median::DomainFragment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Relation {
    Same,
    /// Row event is strictly below column event.
    Before,
    After,
    Conflict,
    Concurrent,
}

impl Relation {
    pub fn symbol(self) -> char {
        match self {
            Relation::Same => '=',
            Relation::Before => '<',
            Relation::After => '>',
            Relation::Conflict => '#',
            Relation::Concurrent => '|',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Event {
    pub class: usize,
    /// The edge of the class closest to the root.
    pub gate: usize,
    /// Number of events in the causal past, this one included.
    pub size: usize,
}

#[derive(Clone, Debug)]
pub struct EventFragment {
    events: Vec<Event>,
    resolution: usize,
    class_event: Vec<Option<usize>>,
    down: Vec<Vec<usize>>,
    rel: Vec<Relation>,
    mu: Vec<bool>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    minimal: Vec<usize>,
    unresolved_classes: usize,
}

/// Events and their relations, up to the fragment's resolution depth.
pub fn events_from_filter(frag: &DomainFragment) -> Result<EventFragment> {
    if frag.is_open(0) {
        return Err(Error::BoundaryUnsafe("the root's out-star is incomplete".into()));
    }
    let g = frag.complete_depth() / 2;
    let mut gate: Vec<Option<usize>> = vec![None; frag.theta_count()];
    for (e, edge) in frag.edges().iter().enumerate() {
        let k = frag.theta(e);
        if gate[k].is_none_or(|old| frag.depth(edge.dst) < frag.depth(frag.edges()[old].dst)) {
            gate[k] = Some(e);
        }
    }
    let mut order: Vec<(usize, usize)> = gate
        .iter()
        .enumerate()
        .filter_map(|(k, e)| e.map(|e| (frag.depth(frag.edges()[e].dst), k)))
        .filter(|&(d, _)| d <= g)
        .collect();
    order.sort_unstable();
    let mut class_event = vec![None; frag.theta_count()];
    let events: Vec<Event> = order
        .iter()
        .enumerate()
        .map(|(i, &(size, k))| {
            class_event[k] = Some(i);
            Event { class: k, gate: gate[k].expect("gated"), size }
        })
        .collect();
    let unresolved_classes = frag.theta_count() - events.len();

    // Configuration of every vertex down to depth g, checked along all in-edges.
    let mut conf: Vec<Option<Vec<usize>>> = vec![None; frag.len()];
    conf[0] = Some(Vec::new());
    let mut by_depth: Vec<usize> = (0..frag.len()).filter(|&v| frag.depth(v) <= g).collect();
    by_depth.sort_by_key(|&v| frag.depth(v));
    for &x in by_depth.iter().skip(1) {
        let mut found: Option<Vec<usize>> = None;
        for &e in frag.in_edges(x) {
            let p = frag.edges()[e].src;
            let ev = class_event[frag.theta(e)]
                .ok_or_else(|| Error::Validation(format!("edge into `{}` has an unresolved class", frag.name(x))))?;
            let mut c = conf[p].clone().expect("parents come first");
            c.push(ev);
            c.sort_unstable();
            match &found {
                None => found = Some(c),
                Some(f) if *f != c => {
                    return Err(Error::Validation(format!("vertex `{}` has two configurations", frag.name(x))));
                }
                _ => {}
            }
        }
        conf[x] = found;
    }
    let down: Vec<Vec<usize>> =
        events.iter().map(|ev| conf[frag.edges()[ev.gate].dst].clone().expect("gate heads are resolved")).collect();

    let n = events.len();
    let mut rel = vec![Relation::Same; n * n];
    for e in 0..n {
        let head = frag.edges()[events[e].gate].dst;
        for f in e + 1..n {
            let r = if down[f].binary_search(&e).is_ok() {
                Relation::Before
            } else if down[e].binary_search(&f).is_ok() {
                Relation::After
            } else {
                let mut x = Some(head);
                for &h in &down[f] {
                    if down[e].binary_search(&h).is_err() {
                        x = x.and_then(|v| frag.step_class(v, events[h].class));
                    }
                }
                if x.is_some() {
                    Relation::Concurrent
                } else {
                    Relation::Conflict
                }
            };
            rel[e * n + f] = r;
            rel[f * n + e] = match r {
                Relation::Before => Relation::After,
                Relation::After => Relation::Before,
                other => other,
            };
        }
    }
    let mut mu = vec![false; n * n];
    for e in 0..n {
        for f in e + 1..n {
            if rel[e * n + f] != Relation::Conflict {
                continue;
            }
            let minimal = down[e].iter().filter(|&&x| x != e).all(|&x| rel[x * n + f] != Relation::Conflict)
                && down[f].iter().filter(|&&y| y != f).all(|&y| rel[e * n + y] != Relation::Conflict);
            mu[e * n + f] = minimal;
            mu[f * n + e] = minimal;
        }
    }
    let mut preds = vec![Vec::new(); n];
    let mut succs = vec![Vec::new(); n];
    for f in 0..n {
        for &e in &down[f] {
            if e == f {
                continue;
            }
            let covered = down[f].iter().any(|&h| h != f && h != e && rel[e * n + h] == Relation::Before);
            if !covered {
                preds[f].push(e);
                succs[e].push(f);
            }
        }
    }
    let minimal = (0..n).filter(|&e| down[e].len() == 1).collect();
    Ok(EventFragment { events, resolution: g, class_event, down, rel, mu, preds, succs, minimal, unresolved_classes })
}

impl EventFragment {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Largest causal-past size among resolved events.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn unresolved_classes(&self) -> usize {
        self.unresolved_classes
    }

    pub fn event_of_class(&self, class: usize) -> Option<usize> {
        self.class_event[class]
    }

    /// `[e]`, sorted; contains `e`.
    pub fn past(&self, e: usize) -> &[usize] {
        &self.down[e]
    }

    pub fn relation(&self, e: usize, f: usize) -> Relation {
        self.rel[e * self.len() + f]
    }

    pub fn leq(&self, e: usize, f: usize) -> bool {
        matches!(self.relation(e, f), Relation::Same | Relation::Before)
    }

    pub fn conflict(&self, e: usize, f: usize) -> bool {
        self.relation(e, f) == Relation::Conflict
    }

    pub fn concurrent(&self, e: usize, f: usize) -> bool {
        self.relation(e, f) == Relation::Concurrent
    }

    pub fn minimal_conflict(&self, e: usize, f: usize) -> bool {
        self.mu[e * self.len() + f]
    }

    /// `e ⋖ f`.
    pub fn immediate(&self, e: usize, f: usize) -> bool {
        self.preds[f].contains(&e)
    }

    pub fn immediate_predecessors(&self, f: usize) -> &[usize] {
        &self.preds[f]
    }

    /// Events enabled at the configuration `c` (sorted, conflict-free, downward closed).
    pub fn enabled(&self, c: &[usize]) -> Vec<usize> {
        let mut cands: BTreeSet<usize> = self.minimal.iter().copied().collect();
        for &x in c {
            cands.extend(self.succs[x].iter().copied());
        }
        cands
            .into_iter()
            .filter(|&e| {
                c.binary_search(&e).is_err()
                    && self.preds[e].iter().all(|p| c.binary_search(p).is_ok())
                    && c.iter().all(|&x| !self.conflict(x, e))
            })
            .collect()
    }

    /// All configurations with at most `s` events, by size then lexicographically.
    pub fn configurations(&self, s: usize) -> Result<Vec<Vec<usize>>> {
        if s > self.resolution {
            return Err(Error::BoundaryUnsafe(format!(
                "configurations of size {s} need events past the resolution {}",
                self.resolution
            )));
        }
        let mut all = vec![Vec::new()];
        let mut level: BTreeSet<Vec<usize>> = BTreeSet::from([Vec::new()]);
        for _ in 0..s {
            let mut next = BTreeSet::new();
            for c in &level {
                for e in self.enabled(c) {
                    let mut d = c.clone();
                    d.push(e);
                    d.sort_unstable();
                    next.insert(d);
                }
            }
            all.extend(next.iter().cloned());
            level = next;
        }
        Ok(all)
    }

    /// The fragment vertex reached from the root by executing `c`.
    pub fn config_vertex(&self, frag: &DomainFragment, c: &[usize]) -> Option<usize> {
        let mut order = c.to_vec();
        order.sort_by_key(|&e| (self.events[e].size, e));
        let mut x = 0;
        for e in order {
            x = frag.step_class(x, self.events[e].class)?;
        }
        Some(x)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let n = self.len();
        let rows: Vec<String> = (0..n).map(|e| (0..n).map(|f| self.relation(e, f).symbol()).collect()).collect();
        let mu: Vec<[usize; 2]> = (0..n)
            .flat_map(|e| (e + 1..n).filter(move |&f| self.minimal_conflict(e, f)).map(move |f| [e, f]))
            .collect();
        serde_json::json!({
            "resolution": self.resolution,
            "unresolved_classes": self.unresolved_classes,
            "events": self.events,
            "relations": rows,
            "minimal_conflict": mu,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum AxiomViolation {
    NotTransitive { e: usize, f: usize, g: usize },
    Asymmetric { e: usize, f: usize },
    ConflictNotInherited { e: usize, f: usize, g: usize },
    PastNotClosed { e: usize },
}

/// `≤` is a partial order, `#` is symmetric and inherited upward, and
/// every causal past is downward closed.
pub fn check_axioms(ef: &EventFragment) -> Verdict<AxiomViolation> {
    let n = ef.len();
    for e in 0..n {
        for f in 0..n {
            let (a, b) = (ef.relation(e, f), ef.relation(f, e));
            let mirrored = match a {
                Relation::Before => b == Relation::After,
                Relation::After => b == Relation::Before,
                Relation::Same => e == f && b == Relation::Same,
                other => b == other,
            };
            if !mirrored || (e == f) != (a == Relation::Same) {
                return Verdict::Fail(AxiomViolation::Asymmetric { e, f });
            }
        }
        for &x in ef.past(e) {
            if !ef.past(x).iter().all(|y| ef.past(e).binary_search(y).is_ok()) {
                return Verdict::Fail(AxiomViolation::PastNotClosed { e });
            }
        }
    }
    for e in 0..n {
        for f in 0..n {
            if ef.relation(e, f) == Relation::Before {
                for g in 0..n {
                    if ef.relation(f, g) == Relation::Before && ef.relation(e, g) != Relation::Before {
                        return Verdict::Fail(AxiomViolation::NotTransitive { e, f, g });
                    }
                }
            }
            if ef.conflict(e, f) {
                for g in 0..n {
                    if ef.relation(f, g) == Relation::Before && !ef.conflict(e, g) {
                        return Verdict::Fail(AxiomViolation::ConflictNotInherited { e, f, g });
                    }
                }
            }
        }
    }
    Verdict::Pass
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RoundTripViolation {
    Unreachable { config: Vec<usize> },
    Collision { vertex: usize },
    Missed { vertex: usize },
    Order { a: usize, b: usize },
}

/// Configurations of size at most `s` correspond one-to-one with vertices
/// of depth at most `s`, and inclusion matches directed reachability.
pub fn domain_round_trip(frag: &DomainFragment, ef: &EventFragment, s: usize) -> Result<Verdict<RoundTripViolation>> {
    let configs = ef.configurations(s)?;
    let mut vertex_of = Vec::with_capacity(configs.len());
    let mut hit = vec![false; frag.len()];
    for c in &configs {
        let Some(x) = ef.config_vertex(frag, c) else {
            return Ok(Verdict::Fail(RoundTripViolation::Unreachable { config: c.clone() }));
        };
        if hit[x] {
            return Ok(Verdict::Fail(RoundTripViolation::Collision { vertex: x }));
        }
        hit[x] = true;
        vertex_of.push(x);
    }
    if let Some(vertex) = (0..frag.len()).find(|&v| frag.depth(v) <= s && !hit[v]) {
        return Ok(Verdict::Fail(RoundTripViolation::Missed { vertex }));
    }
    for (i, ci) in configs.iter().enumerate() {
        let reach = frag.reach(vertex_of[i]);
        for (j, cj) in configs.iter().enumerate() {
            let subset = ci.iter().all(|x| cj.binary_search(x).is_ok());
            if subset != reach[vertex_of[j]] {
                return Ok(Verdict::Fail(RoundTripViolation::Order { a: vertex_of[i], b: vertex_of[j] }));
            }
        }
    }
    Ok(Verdict::Pass)
}

/// Undirected graph on events stored as bit rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventGraph {
    n: usize,
    rows: Vec<Vec<u64>>,
}

impl EventGraph {
    pub fn new(n: usize) -> Self {
        EventGraph { n, rows: vec![vec![0; n.div_ceil(64)]; n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn add(&mut self, a: usize, b: usize) {
        if a != b {
            self.rows[a][b / 64] |= 1 << (b % 64);
            self.rows[b][a / 64] |= 1 << (a % 64);
        }
    }

    pub fn has(&self, a: usize, b: usize) -> bool {
        self.rows[a][b / 64] >> (b % 64) & 1 == 1
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|a| (a + 1..self.n).filter(move |&b| self.has(a, b)).map(move |b| (a, b))).collect()
    }

    pub fn to_dot(&self, ef: &EventFragment) -> String {
        let mut out = String::from("graph natural {\n");
        for (i, ev) in ef.events().iter().enumerate() {
            let _ = writeln!(out, "  e{i} [label=\"{i}\" class={} size={}];", ev.class, ev.size);
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  e{a} -- e{b};");
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NaturalReport {
    pub pairs: usize,
    pub concurrent_pairs: usize,
    pub minimal_conflict_pairs: usize,
    /// Pairs contributed only by the mixed co-initial clause.
    pub mixed_only_pairs: usize,
    pub config_bound: usize,
    pub configurations: usize,
    /// Some configuration at the bound still enables events, so mixed
    /// witnesses may exist on larger configurations.
    pub beyond_bound: bool,
}

/// `♮` on resolved events: concurrency, minimal conflict, and the mixed
/// clause with co-initiality witnessed on configurations of fewer than `s`
/// events at two different configurations.
pub fn natural_relation(ef: &EventFragment, s: usize) -> Result<(EventGraph, NaturalReport)> {
    let n = ef.len();
    let mut g = EventGraph::new(n);
    let (mut conc, mut mu) = (0, 0);
    for e in 0..n {
        for f in e + 1..n {
            if ef.concurrent(e, f) {
                g.add(e, f);
                conc += 1;
            } else if ef.minimal_conflict(e, f) {
                g.add(e, f);
                mu += 1;
            }
        }
    }
    let configs = ef.configurations(s.saturating_sub(1))?;
    // Up to two configurations at which each unordered pair is co-enabled.
    let mut coinit: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut beyond_bound = false;
    for (ci, c) in configs.iter().enumerate() {
        let en = ef.enabled(c);
        if c.len() + 1 == s.max(1) && !en.is_empty() {
            beyond_bound = true;
        }
        for (i, &p) in en.iter().enumerate() {
            for &q in &en[i + 1..] {
                let slot = coinit.entry((p, q)).or_default();
                if slot.len() < 2 {
                    slot.push(ci);
                }
            }
        }
    }
    let at = |a: usize, b: usize| coinit.get(&(a.min(b), a.max(b)));
    let mut mixed = 0;
    for e3 in 0..n {
        let par: Vec<(usize, &Vec<usize>)> =
            (0..n).filter(|&x| ef.concurrent(x, e3)).filter_map(|x| at(x, e3).map(|w| (x, w))).collect();
        let min: Vec<(usize, &Vec<usize>)> =
            (0..n).filter(|&x| ef.minimal_conflict(x, e3)).filter_map(|x| at(x, e3).map(|w| (x, w))).collect();
        for &(e1, w13) in &par {
            for &(e2, w23) in &min {
                if e1 == e2 || g.has(e1, e2) {
                    continue;
                }
                if w13.iter().any(|c1| w23.iter().any(|c2| c1 != c2)) {
                    g.add(e1, e2);
                    mixed += 1;
                }
            }
        }
    }
    let report = NaturalReport {
        pairs: conc + mu + mixed,
        concurrent_pairs: conc,
        minimal_conflict_pairs: mu,
        mixed_only_pairs: mixed,
        config_bound: s,
        configurations: configs.len(),
        beyond_bound,
    };
    Ok((g, report))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CliqueReport {
    pub size: usize,
    pub members: Vec<usize>,
}

/// Maximum clique by branch and bound with greedy-coloring bounds.
pub fn max_clique(g: &EventGraph) -> CliqueReport {
    let words = g.n.div_ceil(64);
    let mut all = vec![0u64; words];
    for v in 0..g.n {
        all[v / 64] |= 1 << (v % 64);
    }
    let mut best = Vec::new();
    let mut cur = Vec::new();
    expand(g, all, &mut cur, &mut best);
    best.sort_unstable();
    CliqueReport { size: best.len(), members: best }
}

fn members(bits: &[u64]) -> impl Iterator<Item = usize> + '_ {
    bits.iter().enumerate().flat_map(|(w, &word)| {
        let mut x = word;
        std::iter::from_fn(move || {
            if x == 0 {
                None
            } else {
                let b = x.trailing_zeros() as usize;
                x &= x - 1;
                Some(w * 64 + b)
            }
        })
    })
}

fn expand(g: &EventGraph, mut cand: Vec<u64>, cur: &mut Vec<usize>, best: &mut Vec<usize>) {
    // Greedy coloring; the color of a vertex bounds the clique it can finish.
    let mut order = Vec::new();
    let mut uncolored = cand.clone();
    let mut color = 0;
    while uncolored.iter().any(|&w| w != 0) {
        color += 1;
        let mut avail = uncolored.clone();
        loop {
            let Some(v) = members(&avail).next() else { break };
            avail[v / 64] &= !(1 << (v % 64));
            uncolored[v / 64] &= !(1 << (v % 64));
            for (a, r) in avail.iter_mut().zip(&g.rows[v]) {
                *a &= !r;
            }
            order.push((v, color));
        }
    }
    for &(v, c) in order.iter().rev() {
        if cur.len() + c <= best.len() {
            return;
        }
        cur.push(v);
        let next: Vec<u64> = cand.iter().zip(&g.rows[v]).map(|(a, b)| a & b).collect();
        if next.iter().all(|&w| w == 0) {
            if cur.len() > best.len() {
                *best = cur.clone();
            }
        } else {
            expand(g, next, cur, best);
        }
        cur.pop();
        cand[v / 64] &= !(1 << (v % 64));
    }
}

/// `♮` clique number of the resolved events.
pub fn natural_clique_max(ef: &EventFragment, s: usize) -> Result<(CliqueReport, NaturalReport)> {
    let (g, report) = natural_relation(ef, s)?;
    Ok((max_clique(&g), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::unfold_filter;
    use crate::format::parse_complex;
    use crate::median::{principal_filter, DomainFragment, FragmentBuilder};
    use proptest::prelude::*;

    fn brute_clique(g: &EventGraph) -> usize {
        let n = g.len();
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let vs: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            if vs.iter().enumerate().all(|(i, &a)| vs[i + 1..].iter().all(|&b| g.has(a, b))) {
                best = best.max(vs.len());
            }
        }
        best
    }

    proptest! {
        #[test]
        fn clique_matches_brute_force(n in 1usize..12, edges in proptest::collection::vec((0usize..12, 0usize..12), 0..50)) {
            let mut g = EventGraph::new(n);
            for (a, b) in edges {
                if a < n && b < n {
                    g.add(a, b);
                }
            }
            let rep = max_clique(&g);
            prop_assert_eq!(rep.size, brute_clique(&g));
            for (i, &a) in rep.members.iter().enumerate() {
                for &b in &rep.members[i + 1..] {
                    prop_assert!(g.has(a, b));
                }
            }
        }
    }

    #[test]
    fn single_square_has_two_concurrent_events() {
        let ef = events_from_filter(&DomainFragment::grid(1, 1)).unwrap();
        assert_eq!(ef.len(), 2);
        assert!(ef.concurrent(0, 1));
        let (clique, rep) = natural_clique_max(&ef, 1).unwrap();
        assert_eq!(clique.size, 2);
        assert_eq!(rep.concurrent_pairs, 1);
    }

    #[test]
    fn binary_tree_events() {
        let t = DomainFragment::out_tree(2, 6);
        let ef = events_from_filter(&t).unwrap();
        assert_eq!(ef.resolution(), 3);
        assert_eq!(ef.len(), 14);
        let id = |name: &str| {
            let v = t.vertex_id(name).unwrap();
            ef.event_of_class(t.theta(t.in_edges(v)[0])).unwrap()
        };
        assert!(ef.minimal_conflict(id("0"), id("1")));
        assert!(ef.minimal_conflict(id("00"), id("01")));
        assert!(ef.conflict(id("00"), id("1")) && !ef.minimal_conflict(id("00"), id("1")));
        assert!(ef.leq(id("0"), id("01")) && ef.immediate(id("0"), id("01")));
        assert!(ef.leq(id("0"), id("010")) && !ef.immediate(id("0"), id("010")));
        assert!(check_axioms(&ef).is_pass());
        assert!(domain_round_trip(&t, &ef, 3).unwrap().is_pass());
    }

    #[test]
    fn grid_events_are_chains_in_two_directions() {
        let g = DomainFragment::grid(4, 4);
        let ef = events_from_filter(&g).unwrap();
        assert!(check_axioms(&ef).is_pass());
        assert!(domain_round_trip(&g, &ef, 4).unwrap().is_pass());
        let n = ef.len();
        let conflicts = (0..n).flat_map(|e| (0..n).map(move |f| (e, f))).filter(|&(e, f)| ef.conflict(e, f)).count();
        assert_eq!(conflicts, 0);
    }

    #[test]
    fn configurations_beyond_resolution_are_refused() {
        let ef = events_from_filter(&DomainFragment::out_tree(2, 4)).unwrap();
        assert!(matches!(ef.configurations(3), Err(Error::BoundaryUnsafe(_))));
    }

    /// Root `r` with `r→a`, `r→b` spanning a square and a dead end `a→d`.
    fn mixed_fragment() -> (DomainFragment, [usize; 3]) {
        let mut b = FragmentBuilder::new();
        let r = b.vertex("r", None);
        let [a, bb, ab, d] = ["a", "b", "ab", "d"].map(|n| b.vertex(n, None));
        for (s, t) in [(r, a), (r, bb), (a, ab), (bb, ab), (a, d)] {
            b.edge(s, t);
        }
        (b.build(4).unwrap(), [a, bb, d])
    }

    #[test]
    fn mixed_clause_adds_an_ordered_pair() {
        let (frag, [a, bb, d]) = mixed_fragment();
        let ef = events_from_filter(&frag).unwrap();
        let ev = |v: usize| ef.event_of_class(frag.theta(frag.in_edges(v)[0])).unwrap();
        let (e1, e3, e2) = (ev(a), ev(bb), ev(d));
        assert!(ef.concurrent(e1, e3));
        assert!(ef.minimal_conflict(e2, e3));
        assert!(ef.immediate(e1, e2));
        let (g, rep) = natural_relation(&ef, 2).unwrap();
        assert!(g.has(e1, e2));
        assert_eq!(rep.mixed_only_pairs, 1);
        // With no room for the second configuration the pair disappears.
        let (g, rep) = natural_relation(&ef, 1).unwrap();
        assert!(!g.has(e1, e2));
        assert_eq!(rep.mixed_only_pairs, 0);
    }

    #[test]
    fn x_filter_round_trip_and_axioms() {
        let x = parse_complex(include_str!("../../../data/wise_x.sqc")).unwrap();
        let frag = principal_filter(&unfold_filter(&x, "v", 8).unwrap(), 0).unwrap();
        let ef = events_from_filter(&frag).unwrap();
        assert!(check_axioms(&ef).is_pass());
        assert!(domain_round_trip(&frag, &ef, 4).unwrap().is_pass());
        // Horizontal and vertical events never conflict.
        for e in 0..ef.len() {
            for f in 0..ef.len() {
                let (ce, cf) = (&frag.edges()[ef.events()[e].gate].vh, &frag.edges()[ef.events()[f].gate].vh);
                if ce != cf && ef.relation(e, f) != Relation::Same {
                    assert!(!ef.conflict(e, f));
                }
            }
        }
        let (clique, _) = natural_clique_max(&ef, 4).unwrap();
        // Two horizontal siblings plus three vertical siblings.
        assert_eq!(clique.size, 5);
    }
}
