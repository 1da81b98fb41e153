//! Acceptance criteria 1–10. Each test writes one PASS/FAIL line straight to
//! stderr, so the lines survive libtest's output capture.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use squarecx::complex::{check_admissible_orientation, check_csc, check_npc, check_vh, SquareComplex};
use squarecx::cover::{
    balls_isomorphic, filter_type_census, unfold_ball, unfold_csc_product, unfold_filter, CensusMode,
};
use squarecx::error::Error;
use squarecx::events::{check_axioms, domain_round_trip, events_from_filter, natural_clique_max};
use squarecx::format::parse_complex;
use squarecx::labeling::{
    enumerate_nice, expected_axiom, hyperplane_trace_bridge, labeled_filter_iso, regular_obstruction_witness,
    sample_nice, search_nice, SearchOutcome,
};
use squarecx::median::{
    check_three_cube, degree_profile, filter_halfspace_check, flat_grid_max, local_convexity_check, median_check,
    order_agreement_check, principal_filter, theta_halfspace_check, DomainFragment,
};
use squarecx::special::{check_special, detect_pathologies, Pathology};
use squarecx::tiles::{check_4way_deterministic, parse_tiles, tile_patch};
use squarecx::wise::{
    build_w, build_x, covering_depth, obstruction_quadrant, period_doubling_check, single_side_mutations, wise_tileset,
};

const FIXTURES: [&str; 9] = [
    "direct_osculation",
    "inter_osculation",
    "link_triangle",
    "mobius",
    "rose",
    "self_intersect",
    "square",
    "torus",
    "wise_x",
];

fn data(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect()
}

fn fixture(name: &str) -> SquareComplex {
    parse_complex(&std::fs::read_to_string(data(&format!("{name}.sqc"))).unwrap()).unwrap()
}

/// Failed sub-checks of one criterion, plus its runtime against the bound.
struct Criterion {
    id: usize,
    title: &'static str,
    bound: Duration,
    start: Instant,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(id: usize, title: &'static str, bound_secs: u64) -> Self {
        Criterion {
            id,
            title,
            bound: Duration::from_secs(bound_secs),
            start: Instant::now(),
            failures: vec![],
            notes: vec![],
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        self.check(
            elapsed < self.bound,
            format!("runtime {:.2} s over {} s", elapsed.as_secs_f64(), self.bound.as_secs()),
        );
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        let mut line = format!(
            "criterion {:>2} {status} {}: {} ({:.2} s < {} s)",
            self.id,
            self.title,
            self.notes.join("; "),
            elapsed.as_secs_f64(),
            self.bound.as_secs()
        );
        if !self.failures.is_empty() {
            line.push_str(&format!(" failures: {}", self.failures.join("; ")));
        }
        let _ = writeln!(std::io::stderr(), "{line}");
        assert!(self.failures.is_empty(), "{line}");
    }
}

#[test]
fn criterion_01_structure_counts() {
    let mut c = Criterion::new(1, "structure counts", 1);
    let (x, w) = (build_x().counts(), build_w().counts());
    c.note(format!("X={x:?} W={w:?}"));
    c.check(x == (1, 5, 6), "X counts");
    c.check(w == (27, 49, 24), "W counts");
    c.finish();
}

#[test]
fn criterion_02_local_checks() {
    let mut c = Criterion::new(2, "local checks", 1);
    let x = fixture("wise_x");
    c.check(check_vh(&x).unwrap().is_pass(), "wise_x vh");
    c.check(check_csc(&x).unwrap().is_pass(), "wise_x csc");
    c.check(check_npc(&x).is_pass(), "wise_x npc");
    c.check(check_admissible_orientation(&x).is_pass(), "wise_x orientation");
    c.check(!check_admissible_orientation(&fixture("mobius")).is_pass(), "mobius orientation");
    for (name, p) in [
        ("self_intersect", Pathology::SelfIntersection),
        ("direct_osculation", Pathology::DirectSelfOsculation),
        ("inter_osculation", Pathology::InterOsculation),
    ] {
        // Indirect self-osculation is not fatal and is left out.
        let kinds = detect_pathologies(&fixture(name)).fatal_kinds();
        c.note(format!("{name} {}", kinds.iter().map(|k| k.code()).collect::<String>()));
        c.check(kinds == BTreeSet::from([p]), format!("{name} fatal pathologies {kinds:?}"));
    }
    c.finish();
}

/// Vertices of an ℓ1 ball of radius `r` in the product of trees of degrees
/// `p` and `q`.
fn tree_product_ball(p: usize, q: usize, r: usize) -> usize {
    let sphere = |d: usize, k: usize| if k == 0 { 1 } else { d * (d - 1).pow(k as u32 - 1) };
    (0..=r).map(|i| (0..=r - i).map(|j| sphere(p, i) * sphere(q, j)).sum::<usize>()).sum()
}

#[test]
fn criterion_03_unfolder_oracles() {
    let mut c = Criterion::new(3, "unfolder oracle equivalence", 30);
    let x = fixture("wise_x");
    // Three vertical loops and two horizontal loops: trees of degree 6 and 4.
    c.check(tree_product_ball(6, 4, 1) == 11 && tree_product_ball(6, 4, 2) == 77, "formula anchors");
    let mut counts = Vec::new();
    for r in 1..=4 {
        let a = unfold_ball(&x, "v", r).unwrap();
        let b = unfold_csc_product(&x, "v", r).unwrap();
        c.check(balls_isomorphic(&a, &b).is_some(), format!("r={r} not isomorphic"));
        c.check(a.vertex_count() == tree_product_ball(6, 4, r), format!("r={r} count {}", a.vertex_count()));
        counts.push(a.vertex_count());
    }
    c.note(format!("counts r=1..4 {counts:?}, isomorphic"));
    c.finish();
}

#[test]
fn criterion_04_period_doubling() {
    let mut c = Criterion::new(4, "period doubling", 10);
    let report = period_doubling_check(12).unwrap();
    c.check(report.is_pass(), format!("failure {:?}", report.failure));
    for level in &report.levels {
        c.check(level.distinct == 1usize << level.n, format!("n={} distinct {}", level.n, level.distinct));
    }
    let top = report.levels.last().map(|l| l.distinct).unwrap_or(0);
    c.note(format!("n<=12 distinct, {top} words at n=12"));
    let mutations = single_side_mutations(&wise_tileset());
    let mut worst = 0;
    for (name, t) in &mutations {
        let r = squarecx::wise::period_doubling_of(t, 4, squarecx::wise::LEFT_COLOR, squarecx::wise::BOTTOM_COLOR);
        match r.failure {
            Some((n, _)) => worst = worst.max(n),
            None => c.check(false, format!("mutation {name} survives n=4")),
        }
    }
    c.note(format!("{} single-square mutations all fail by n={worst}", mutations.len()));
    c.check(worst <= 4, "mutation bound");
    c.finish();
}

#[test]
fn criterion_05_census_bound() {
    let mut c = Criterion::new(5, "census bound", 60);
    let w = build_w();
    let ball = unfold_ball(&w, "v", 6).unwrap();
    let census = filter_type_census(&ball, 2, CensusMode::Colored).unwrap();
    c.note(format!(
        "W ball r=6 depth 2: {} classes of {} candidates (bound {})",
        census.classes.len(),
        census.candidates,
        w.vertices().len()
    ));
    c.check(census.classes.len() <= w.vertices().len(), "W classes");
    let xb = unfold_ball(&fixture("wise_x"), "v", 4).unwrap();
    let u = filter_type_census(&xb, 2, CensusMode::Uncolored).unwrap();
    c.note(format!("uncolored X ball r=4 depth 2: {} class", u.classes.len()));
    c.check(u.classes.len() == 1, "uncolored X classes");
    c.finish();
}

#[test]
fn criterion_06_degree_and_natural_bounds() {
    let mut c = Criterion::new(6, "degree profile and natural clique", 60);
    let filter = unfold_filter(&build_w(), "v", 12).unwrap();
    let frag = principal_filter(&filter, filter.basepoint()).unwrap();
    let prof = degree_profile(&frag);
    let expected: BTreeMap<Option<u8>, BTreeSet<usize>> = [
        (Some(0), BTreeSet::from([5])),
        (Some(1), BTreeSet::from([4, 5])),
        (Some(2), BTreeSet::from([2])),
        (Some(3), BTreeSet::from([0, 1])),
    ]
    .into_iter()
    .collect();
    c.check(prof == expected, format!("profile {prof:?}"));
    let ef = events_from_filter(&frag).unwrap();
    c.check(ef.resolution() >= 6, format!("resolution {}", ef.resolution()));
    let (clique, _) = natural_clique_max(&ef, 6).unwrap();
    c.note(format!("{} vertices, {} events, profile exact, clique {} <= 11 at s=6", frag.len(), ef.len(), clique.size));
    c.check(clique.size <= 11, "clique bound");
    c.finish();
}

#[test]
fn criterion_07_obstruction_suite() {
    let mut c = Criterion::new(7, "obstruction suite", 300);
    let n = 3;
    let q = obstruction_quadrant(n).unwrap();
    let d = covering_depth(n);
    for k in 1..=4 {
        c.check(matches!(search_nice(&q.frag, k), SearchOutcome::Unsat(_)), format!("k={k} not UNSAT"));
    }
    let mut labelings = match search_nice(&q.frag, 5) {
        SearchOutcome::Found(l) => vec![l],
        SearchOutcome::Unsat(_) => {
            c.check(false, "k=5 UNSAT");
            vec![]
        }
    };
    let (listed, exhausted) = enumerate_nice(&q.frag, 5, 8);
    for l in listed.into_iter().chain(sample_nice(&q.frag, 5, 8, 0)) {
        if !labelings.contains(&l) {
            labelings.push(l);
        }
    }
    let top = (1usize << n) - 1;
    let mut witnesses = 0;
    for (id, l) in labelings.iter().enumerate() {
        for k in 0..top {
            for m in k + 1..=top {
                match regular_obstruction_witness(&q, l, k, m, n) {
                    Ok(_) => witnesses += 1,
                    Err(e) => c.check(false, format!("labeling {id} pair ({k},{m}): {e}")),
                }
                let iso = labeled_filter_iso(&q.frag, l, q.z[k][0], q.z[m][0], d).unwrap();
                c.check(iso.is_none(), format!("labeling {id} pair ({k},{m}) isomorphic"));
            }
        }
    }
    c.note(format!(
        "k<=4 UNSAT, k=5 {} labelings (enumeration exhausted: {exhausted}), {witnesses} witnesses, iso NONE at depth {d}",
        labelings.len()
    ));
    c.check(!labelings.is_empty() && witnesses == labelings.len() * top * (top + 1) / 2, "witness count");
    c.finish();
}

#[test]
fn criterion_08_special_trace_bridge() {
    let mut c = Criterion::new(8, "special trace bridge", 60);
    let mut summary = Vec::new();
    for name in FIXTURES {
        let x = fixture(name);
        if !check_npc(&x).is_pass() {
            continue;
        }
        let verdict = check_special(&x);
        let fatal = verdict.report.fatal_kinds();
        if fatal.contains(&Pathology::OneSided) {
            let err = hyperplane_trace_bridge(&x, 4);
            c.check(matches!(err, Err(Error::NotAdmissible(_))), format!("{name} admits an orientation"));
            summary.push(format!("{name} one-sided"));
            continue;
        }
        let expected: BTreeSet<_> = fatal.iter().filter_map(|&p| expected_axiom(p)).collect();
        for r in 1..=4 {
            let report = hyperplane_trace_bridge(&x, r).unwrap();
            if verdict.special || r == 4 {
                c.check(
                    report.axioms == expected,
                    format!("{name} r={r} axioms {:?} want {expected:?}", report.axioms),
                );
            }
        }
        let names: Vec<_> = expected.iter().map(|a| a.name()).collect();
        summary.push(format!("{name} {}", if names.is_empty() { "clean".into() } else { names.join(",") }));
    }
    c.note(summary.join(", "));
    c.finish();
}

/// Every fragment derived from the bundled data: the principal filter at each
/// lift basepoint, plus deep filters of X and W and two synthetic shapes.
fn bundled_fragments() -> Vec<(String, DomainFragment)> {
    let mut out = Vec::new();
    for name in FIXTURES {
        let x = fixture(name);
        if !check_npc(&x).is_pass() || !check_admissible_orientation(&x).is_pass() {
            continue;
        }
        for v in x.vertices() {
            let ball = unfold_ball(&x, &v.name, 4).unwrap();
            out.push((format!("{name}@{}", v.name), principal_filter(&ball, ball.basepoint()).unwrap()));
        }
    }
    for (name, cx, depth) in [("X depth 4", build_x(), 4), ("W depth 8", build_w(), 8)] {
        let f = unfold_filter(&cx, "v", depth).unwrap();
        out.push((name.into(), principal_filter(&f, f.basepoint()).unwrap()));
    }
    out.push(("grid 5x5".into(), DomainFragment::grid(5, 5)));
    out.push(("out tree 3^4".into(), DomainFragment::out_tree(3, 4)));
    out
}

#[test]
fn criterion_09_median_suite() {
    let mut c = Criterion::new(9, "median property suite", 120);
    let frags = bundled_fragments();
    for (name, f) in &frags {
        c.check(median_check(f).is_pass(), format!("{name} median"));
        c.check(check_three_cube(f).is_pass(), format!("{name} 3-cube"));
        c.check(theta_halfspace_check(f).is_pass(), format!("{name} theta"));
        c.check(order_agreement_check(f).is_pass(), format!("{name} order"));
    }
    let mut ambient = 0;
    for name in FIXTURES {
        let x = fixture(name);
        if !check_npc(&x).is_pass() || !check_admissible_orientation(&x).is_pass() {
            continue;
        }
        let ball = unfold_ball(&x, &x.vertices()[0].name, 4).unwrap();
        for v in (0..ball.vertex_count()).filter(|&v| ball.dist(v) <= 2) {
            c.check(filter_halfspace_check(&ball, v).unwrap().is_pass(), format!("{name} filter halfspaces at {v}"));
            c.check(local_convexity_check(&ball, v).unwrap().is_pass(), format!("{name} convexity at {v}"));
            ambient += 1;
        }
    }
    // Events need gate depth at most half the filter depth, so s=5 needs depth 10.
    for (name, cx, depth, s) in [("X", build_x(), 6, 3), ("W", build_w(), 10, 5)] {
        let f = unfold_filter(&cx, "v", depth).unwrap();
        let frag = principal_filter(&f, f.basepoint()).unwrap();
        let ef = events_from_filter(&frag).unwrap();
        c.check(ef.resolution() >= s, format!("{name} resolution {}", ef.resolution()));
        c.check(check_axioms(&ef).is_pass(), format!("{name} event axioms"));
        c.check(domain_round_trip(&frag, &ef, s).unwrap().is_pass(), format!("{name} round trip"));
    }
    c.note(format!(
        "{} fragments, {ambient} ambient centers, round trips exact on X depth 6 at s=3 and W depth 10 at s=5",
        frags.len()
    ));
    c.finish();
}

#[test]
fn criterion_10_tiles_suite() {
    let mut c = Criterion::new(10, "tiles suite", 120);
    let t = parse_tiles(&std::fs::read_to_string(data("wise.tiles")).unwrap()).unwrap();
    c.check(check_4way_deterministic(&t).is_pass(), "4-way determinism");
    for w in 1..=10 {
        for h in 1..=10 {
            match tile_patch(&t, w, h, None) {
                Some(p) => c.check(p.is_valid(&t, false), format!("{w}x{h} invalid")),
                None => c.check(false, format!("{w}x{h} UNSAT")),
            }
        }
    }

    let k = 4;
    let patch = tile_patch(&t, k, k, None).unwrap();
    let tile = |i: usize, j: usize| &t.tiles()[patch.cells[j][i]];
    // Colors of the grid edges leaving point (i, j) eastward and northward.
    let east = |i: usize, j: usize| if j < k { tile(i, j).s.clone() } else { tile(i, k - 1).n.clone() };
    let north = |i: usize, j: usize| if i < k { tile(i, j).w.clone() } else { tile(k - 1, j).e.clone() };
    let f = unfold_filter(&build_x(), "v", 2 * k).unwrap();
    let frag = principal_filter(&f, f.basepoint()).unwrap();
    let step = |v: usize, col: &str| {
        frag.out_edges(v).iter().map(|&e| &frag.edges()[e]).find(|e| e.color.as_deref() == Some(col)).map(|e| e.dst)
    };
    let mut grid = vec![vec![0usize; k + 1]; k + 1];
    let mut lifted = true;
    for j in 0..=k {
        for i in 0..=k {
            let next = match (i, j) {
                (0, 0) => Some(0),
                (0, _) => step(grid[j - 1][0], &north(0, j - 1)),
                _ => step(grid[j][i - 1], &east(i - 1, j)),
            };
            match next {
                Some(v) => grid[j][i] = v,
                None => lifted = false,
            }
        }
    }
    c.check(lifted, "grid leaves the filter");
    for j in 0..k {
        for i in 0..k {
            let other = step(grid[j][i], &north(i, j)).and_then(|v| step(v, &east(i, j + 1)));
            c.check(other == Some(grid[j + 1][i + 1]), format!("cell ({i},{j}) does not close"));
        }
    }
    let points: Vec<(usize, usize, usize)> =
        (0..=k).flat_map(|j| (0..=k).map(move |i| (i, j))).map(|(i, j)| (i, j, grid[j][i])).collect();
    let distinct: BTreeSet<usize> = points.iter().map(|p| p.2).collect();
    c.check(distinct.len() == (k + 1) * (k + 1), format!("{} distinct grid vertices", distinct.len()));
    for &(i, j, v) in &points {
        let dist = frag.bfs(v);
        for &(i2, j2, v2) in &points {
            let l1 = i.abs_diff(i2) + j.abs_diff(j2);
            c.check(dist[v2] as usize == l1, format!("distance ({i},{j})-({i2},{j2}) is {} not {l1}", dist[v2]));
        }
    }
    let flat = flat_grid_max(&frag).side;
    c.check(flat > k, format!("flat grid side {flat}"));
    c.note(format!(
        "deterministic, patches to 10x10, {k}x{k} patch lifts to {} vertices with l1 distances, flat grid side {flat}",
        distinct.len()
    ));
    c.finish();
}
