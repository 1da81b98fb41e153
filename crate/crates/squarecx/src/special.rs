//! Hyperplanes of a finite square complex and the pathologies that keep it
//! from being special.
//!
//! Osculations are read off vertex links: two distinct edge-ends at `v`
//! osculate when no square has them as consecutive sides at `v`. A
//! two-sided hyperplane orients its dual edges, and `v` is then the source
//! or the sink of each dual end.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::complex::{check_npc, parallelism, EdgeEnd, End, SquareComplex};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BaseHyperplane {
    pub id: usize,
    pub name: String,
    /// Dual edges, ascending.
    pub edges: Vec<usize>,
    pub two_sided: bool,
    /// Per dual edge: whether it points against the hyperplane's orientation.
    /// Meaningful only when two-sided.
    pub against: Vec<bool>,
    /// A square where direction propagation contradicts itself.
    pub flip_square: Option<usize>,
}

impl BaseHyperplane {
    fn position(&self, e: usize) -> Option<usize> {
        self.edges.binary_search(&e).ok()
    }

    /// Whether the end lies at the tail of its edge under the hyperplane orientation.
    pub fn is_source_end(&self, end: EdgeEnd) -> Option<bool> {
        let k = self.position(end.edge)?;
        self.two_sided.then(|| (end.end == End::Source) != self.against[k])
    }
}

/// Hyperplanes with per-edge class lookup.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hyperplanes {
    pub list: Vec<BaseHyperplane>,
    /// Hyperplane of each edge.
    pub of_edge: Vec<usize>,
    /// Unordered pairs `(h1, h2)` with `h1 < h2` crossing in some square.
    pub intersections: BTreeSet<(usize, usize)>,
}

impl Hyperplanes {
    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn intersect(&self, a: usize, b: usize) -> bool {
        self.intersections.contains(&(a.min(b), a.max(b)))
    }
}

pub fn base_hyperplanes(c: &SquareComplex) -> Hyperplanes {
    let p = parallelism(c);
    let mut list: Vec<BaseHyperplane> = (0..p.count())
        .map(|id| {
            let edges = p.members(id);
            BaseHyperplane {
                id,
                name: format!("H_{}", c.edges()[edges[0]].name),
                against: edges.iter().map(|&e| p.flip[e]).collect(),
                edges,
                two_sided: p.two_sided[id],
                flip_square: p.flip_square[id],
            }
        })
        .collect();
    list.sort_by_key(|h| h.id);
    let mut intersections = BTreeSet::new();
    for sq in c.squares() {
        let (a, b) = (p.class[sq.sides[0].edge], p.class[sq.sides[1].edge]);
        if a != b {
            intersections.insert((a.min(b), a.max(b)));
        }
    }
    Hyperplanes { list, of_edge: p.class, intersections }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Pathology {
    SelfIntersection,
    OneSided,
    DirectSelfOsculation,
    IndirectSelfOsculation,
    InterOsculation,
}

impl Pathology {
    pub fn code(self) -> char {
        match self {
            Pathology::SelfIntersection => 'a',
            Pathology::OneSided => 'b',
            Pathology::DirectSelfOsculation => 'c',
            Pathology::IndirectSelfOsculation => 'd',
            Pathology::InterOsculation => 'e',
        }
    }

    /// Every pathology except indirect self-osculation rules out specialness.
    pub fn is_fatal(self) -> bool {
        self != Pathology::IndirectSelfOsculation
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelfIntersection {
    pub hyperplane: usize,
    pub square: usize,
    /// Consecutive side indices.
    pub sides: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OneSided {
    pub hyperplane: usize,
    pub square: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Osculation {
    pub vertex: usize,
    pub ends: (EdgeEnd, EdgeEnd),
    pub hyperplanes: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterOsculation {
    pub hyperplanes: (usize, usize),
    /// A square where the two hyperplanes cross.
    pub square: usize,
    pub osculation: Osculation,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PathologyReport {
    #[serde(rename = "a")]
    pub self_intersections: Vec<SelfIntersection>,
    #[serde(rename = "b")]
    pub one_sided: Vec<OneSided>,
    #[serde(rename = "c")]
    pub direct_self_osculations: Vec<Osculation>,
    #[serde(rename = "d")]
    pub indirect_self_osculations: Vec<Osculation>,
    #[serde(rename = "e")]
    pub inter_osculations: Vec<InterOsculation>,
}

impl PathologyReport {
    /// Kinds present, in report order.
    pub fn kinds(&self) -> BTreeSet<Pathology> {
        let mut k = BTreeSet::new();
        let pairs = [
            (!self.self_intersections.is_empty(), Pathology::SelfIntersection),
            (!self.one_sided.is_empty(), Pathology::OneSided),
            (!self.direct_self_osculations.is_empty(), Pathology::DirectSelfOsculation),
            (!self.indirect_self_osculations.is_empty(), Pathology::IndirectSelfOsculation),
            (!self.inter_osculations.is_empty(), Pathology::InterOsculation),
        ];
        for (present, p) in pairs {
            if present {
                k.insert(p);
            }
        }
        k
    }

    pub fn fatal_kinds(&self) -> BTreeSet<Pathology> {
        self.kinds().into_iter().filter(|p| p.is_fatal()).collect()
    }

    pub fn describe(&self, c: &SquareComplex, h: &Hyperplanes) -> Vec<String> {
        let hn = |i: usize| h.list[i].name.as_str();
        let vn = |v: usize| c.vertices()[v].name.as_str();
        let osc =
            |o: &Osculation| format!("at {}: {} and {}", vn(o.vertex), c.end_label(o.ends.0), c.end_label(o.ends.1));
        let mut out = Vec::new();
        for w in &self.self_intersections {
            out.push(format!(
                "(a) {} crosses itself in square {} (sides {} and {})",
                hn(w.hyperplane),
                w.square,
                w.sides.0,
                w.sides.1
            ));
        }
        for w in &self.one_sided {
            let at = w.square.map_or(String::new(), |q| format!(" (flips in square {q})"));
            out.push(format!("(b) {} is one-sided{at}", hn(w.hyperplane)));
        }
        for w in &self.direct_self_osculations {
            out.push(format!("(c) {} directly self-osculates {}", hn(w.hyperplanes.0), osc(w)));
        }
        for w in &self.indirect_self_osculations {
            out.push(format!("(d) {} indirectly self-osculates {}", hn(w.hyperplanes.0), osc(w)));
        }
        for w in &self.inter_osculations {
            out.push(format!(
                "(e) {} and {} cross in square {} and osculate {}",
                hn(w.hyperplanes.0),
                hn(w.hyperplanes.1),
                w.square,
                osc(&w.osculation)
            ));
        }
        out
    }
}

pub fn detect_pathologies(c: &SquareComplex) -> PathologyReport {
    let h = base_hyperplanes(c);
    detect_with(c, &h)
}

fn detect_with(c: &SquareComplex, h: &Hyperplanes) -> PathologyReport {
    let mut r = PathologyReport::default();
    let mut crossing: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (q, sq) in c.squares().iter().enumerate() {
        for i in 0..4 {
            let j = (i + 1) % 4;
            let (a, b) = (h.of_edge[sq.sides[i].edge], h.of_edge[sq.sides[j].edge]);
            if a == b {
                r.self_intersections.push(SelfIntersection { hyperplane: a, square: q, sides: (i, j) });
            } else {
                crossing.entry((a.min(b), a.max(b))).or_insert(q);
            }
        }
    }
    for hp in &h.list {
        if !hp.two_sided {
            r.one_sided.push(OneSided { hyperplane: hp.id, square: hp.flip_square });
        }
    }
    let mut inter_seen = BTreeSet::new();
    for v in 0..c.vertices().len() {
        let adjacent: BTreeSet<(EdgeEnd, EdgeEnd)> =
            c.corners_at(v).iter().map(|k| (k.a.min(k.b), k.a.max(k.b))).collect();
        let ends = c.ends_at(v);
        for (x, &e1) in ends.iter().enumerate() {
            for &e2 in &ends[x + 1..] {
                let pair = (e1.min(e2), e1.max(e2));
                if adjacent.contains(&pair) {
                    continue;
                }
                let (h1, h2) = (h.of_edge[pair.0.edge], h.of_edge[pair.1.edge]);
                let o = Osculation { vertex: v, ends: pair, hyperplanes: (h1.min(h2), h1.max(h2)) };
                if h1 == h2 {
                    let hp = &h.list[h1];
                    match (hp.is_source_end(pair.0), hp.is_source_end(pair.1)) {
                        (Some(s1), Some(s2)) if s1 == s2 => r.direct_self_osculations.push(o),
                        (Some(_), Some(_)) => r.indirect_self_osculations.push(o),
                        // One-sided hyperplanes are reported under (b).
                        _ => {}
                    }
                } else if let Some(&square) = crossing.get(&o.hyperplanes) {
                    if inter_seen.insert(o.hyperplanes) {
                        r.inter_osculations.push(InterOsculation { hyperplanes: o.hyperplanes, square, osculation: o });
                    }
                }
            }
        }
    }
    r.inter_osculations.sort_by_key(|w| w.hyperplanes);
    r
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecialVerdict {
    pub special: bool,
    pub npc: bool,
    /// Fatal pathology codes present.
    pub failing: Vec<char>,
    pub report: PathologyReport,
}

/// Special means nonpositively curved with no fatal pathology.
pub fn check_special(c: &SquareComplex) -> SpecialVerdict {
    let report = detect_pathologies(c);
    let npc = check_npc(c).is_pass();
    let failing: Vec<char> = report.fatal_kinds().into_iter().map(Pathology::code).collect();
    SpecialVerdict { special: npc && failing.is_empty(), npc, failing, report }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_complex;

    fn load(name: &str) -> SquareComplex {
        let path = format!("{}/../../data/{name}.sqc", env!("CARGO_MANIFEST_DIR"));
        parse_complex(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn kinds(name: &str) -> Vec<char> {
        detect_pathologies(&load(name)).kinds().into_iter().map(Pathology::code).collect()
    }

    #[test]
    fn torus_is_special_with_indirect_osculations() {
        let c = load("torus");
        let h = base_hyperplanes(&c);
        assert_eq!(h.len(), 2);
        assert!(h.list.iter().all(|x| x.two_sided));
        assert!(h.intersect(0, 1));
        let v = check_special(&c);
        assert!(v.special);
        assert_eq!(v.report.indirect_self_osculations.len(), 2);
        let per: BTreeSet<usize> = v.report.indirect_self_osculations.iter().map(|o| o.hyperplanes.0).collect();
        assert_eq!(per.len(), 2);
    }

    #[test]
    fn mobius_middle_hyperplane_is_one_sided() {
        let c = load("mobius");
        let h = base_hyperplanes(&c);
        let r0 = c.edge_id("r0").unwrap();
        let mid = &h.list[h.of_edge[r0]];
        assert!(!mid.two_sided);
        assert_eq!(mid.edges.len(), 3);
        assert_eq!(h.list.iter().filter(|x| !x.two_sided).count(), 1);
        let v = check_special(&c);
        assert!(!v.special);
        assert_eq!(v.failing, vec!['b']);
    }

    #[test]
    fn each_figure_fixture_triggers_exactly_its_pathology() {
        assert_eq!(
            detect_pathologies(&load("self_intersect")).fatal_kinds(),
            BTreeSet::from([Pathology::SelfIntersection])
        );
        assert_eq!(
            detect_pathologies(&load("direct_osculation")).fatal_kinds(),
            BTreeSet::from([Pathology::DirectSelfOsculation])
        );
        assert_eq!(
            detect_pathologies(&load("inter_osculation")).fatal_kinds(),
            BTreeSet::from([Pathology::InterOsculation])
        );
        for name in ["self_intersect", "direct_osculation", "inter_osculation"] {
            assert!(check_npc(&load(name)).is_pass(), "{name}");
        }
    }

    #[test]
    fn self_intersection_witness_is_a_square_with_consecutive_sides() {
        let c = load("self_intersect");
        let r = detect_pathologies(&c);
        let w = &r.self_intersections[0];
        assert_eq!(w.square, 0);
        assert_eq!((w.sides.0 + 1) % 4, w.sides.1);
    }

    #[test]
    fn inter_osculation_witness() {
        let c = load("inter_osculation");
        let r = detect_pathologies(&c);
        assert_eq!(r.inter_osculations.len(), 1);
        let w = &r.inter_osculations[0];
        assert_eq!(c.vertices()[w.osculation.vertex].name, "P");
        assert_eq!(w.square, 0);
    }

    #[test]
    fn small_special_and_non_special_complexes() {
        assert!(check_special(&load("square")).special);
        assert!(check_special(&load("rose")).special);
        assert_eq!(kinds("rose"), vec!['d']);
        let rose = load("rose");
        assert!(base_hyperplanes(&rose).intersections.is_empty());
        let tri = check_special(&load("link_triangle"));
        assert!(!tri.npc && !tri.special);
    }

    #[test]
    fn wise_x_has_two_hyperplanes_and_directly_self_osculates() {
        let c = load("wise_x");
        let h = base_hyperplanes(&c);
        assert_eq!(h.len(), 2);
        assert!(h.list.iter().all(|x| x.two_sided));
        let v = check_special(&c);
        assert_eq!(v.failing, vec!['c']);
    }
}
