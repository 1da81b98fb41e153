//! Wise's six tiles, the complex X they glue into, the subdivided complex W
//! with color-coding tips, and the quadrant of X̃ spanned by the rays
//! colored y and c.
//!
//! Quadrant cells are filled bottom-up and left-to-right: each cell is the
//! unique tile whose west and south colors match its neighbors. The row
//! word `M_n(m)` is the sequence of north colors of row `m - 1`, the first
//! `n` of them; `M_n(0)` is `yⁿ`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::complex::{attach_tips, barycentric_subdivision, SquareComplex};
use crate::error::{Error, Result};
use crate::median::{DomainFragment, FragEdge, FragmentBuilder};
use crate::tiles::{check_4way_deterministic, complex_from_tiles, DeterminismViolation, Tile, TileSet};

/// Vertical color of the quadrant's left boundary.
pub const LEFT_COLOR: &str = "c";
/// Horizontal color of the quadrant's bottom boundary.
pub const BOTTOM_COLOR: &str = "y";

pub fn wise_tileset() -> TileSet {
    let tiles = vec![
        Tile::new("t1", "y", "a", "x", "a"),
        Tile::new("t2", "x", "b", "y", "a"),
        Tile::new("t3", "x", "c", "x", "b"),
        Tile::new("t4", "y", "c", "y", "b"),
        Tile::new("t5", "y", "b", "x", "c"),
        Tile::new("t6", "x", "a", "y", "c"),
    ];
    let v = ["a", "b", "c"].map(String::from).to_vec();
    let h = ["x", "y"].map(String::from).to_vec();
    TileSet::new(tiles, v, h).expect("Wise's tiles are well formed")
}

fn renamed(c: SquareComplex, name: &str) -> SquareComplex {
    SquareComplex::new(name, c.vertices().to_vec(), c.edges().to_vec(), c.squares().to_vec())
        .expect("renaming keeps a complex valid")
}

pub fn build_x() -> SquareComplex {
    renamed(complex_from_tiles(&wise_tileset()).expect("palettes are disjoint"), "wise_x")
}

/// Tip length per edge color.
pub fn tip_lengths() -> BTreeMap<String, usize> {
    [("a", 1), ("b", 2), ("c", 3), ("x", 4), ("y", 5)].into_iter().map(|(c, k)| (c.to_string(), k)).collect()
}

pub fn build_w() -> SquareComplex {
    let w = attach_tips(&barycentric_subdivision(&build_x()), &tip_lengths()).expect("every color has a tip length");
    renamed(w, "wise_w")
}

/// The lower-left `n × m` rectangle of the quadrant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuadrantRectangle {
    pub width: usize,
    pub height: usize,
    /// `cells[row][col]` indexes the tile set.
    pub cells: Vec<Vec<usize>>,
    /// `rows[j]` is the horizontal word along height `j`, for `0 ≤ j ≤ height`.
    pub rows: Vec<String>,
    /// `columns[i]` is the vertical word along column line `i`, for `0 ≤ i ≤ width`.
    pub columns: Vec<String>,
}

impl QuadrantRectangle {
    /// Vertical color of the unit edge from `(i, j)` to `(i, j + 1)`.
    pub fn vertical(&self, i: usize, j: usize) -> char {
        self.columns[i].as_bytes()[j] as char
    }

    /// Horizontal color of the unit edge from `(i, j)` to `(i + 1, j)`.
    pub fn horizontal(&self, i: usize, j: usize) -> char {
        self.rows[j].as_bytes()[i] as char
    }
}

/// Fills the rectangle from the given left and bottom colors.
pub fn quadrant_of(t: &TileSet, n: usize, m: usize, left: &str, bottom: &str) -> Result<QuadrantRectangle> {
    let mut cells = vec![vec![0usize; n]; m];
    let mut rows = vec![bottom.repeat(n)];
    let mut columns = vec![String::new(); n + 1];
    for row in 0..m {
        let mut west = left.to_string();
        let mut north = String::with_capacity(n);
        columns[0].push_str(left);
        for col in 0..n {
            let south = &rows[row][col..col + 1];
            let k = t
                .tiles()
                .iter()
                .position(|tile| tile.w == west && tile.s == south)
                .ok_or_else(|| Error::TranscriptionIncomplete { west: west.clone(), south: south.to_string() })?;
            cells[row][col] = k;
            let tile = &t.tiles()[k];
            north.push_str(&tile.n);
            columns[col + 1].push_str(&tile.e);
            west = tile.e.clone();
        }
        rows.push(north);
    }
    Ok(QuadrantRectangle { width: n, height: m, cells, rows, columns })
}

pub fn quadrant(n: usize, m: usize) -> Result<QuadrantRectangle> {
    quadrant_of(&wise_tileset(), n, m, LEFT_COLOR, BOTTOM_COLOR)
}

/// `M_n(m)`.
pub fn row_word(n: usize, m: usize) -> Result<String> {
    Ok(quadrant(n, m)?.rows.swap_remove(m))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum DoublingFailure {
    NotDeterministic(DeterminismViolation),
    Incomplete { west: String, south: String },
    Collision { m1: usize, m2: usize, word: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DoublingLevel {
    pub n: usize,
    pub distinct: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DoublingReport {
    pub n_max: usize,
    pub levels: Vec<DoublingLevel>,
    /// First failing level and its reason.
    pub failure: Option<(usize, DoublingFailure)>,
}

impl DoublingReport {
    pub fn is_pass(&self) -> bool {
        self.failure.is_none()
    }
}

/// For every `n ≤ n_max`, the words `M_n(0), …, M_n(2ⁿ − 1)` of the tile
/// set are pairwise distinct. Tile sets that are not 4-way deterministic
/// fail at level 1, since the cell-by-cell fill would not be forced.
pub fn period_doubling_of(t: &TileSet, n_max: usize, left: &str, bottom: &str) -> DoublingReport {
    let mut report = DoublingReport { n_max, levels: Vec::new(), failure: None };
    if let Some(v) = check_4way_deterministic(t).witness() {
        report.failure = Some((1, DoublingFailure::NotDeterministic(v.clone())));
        return report;
    }
    // Narrower words are prefixes, so one rectangle serves every level.
    let q = match quadrant_of(t, n_max, (1usize << n_max) - 1, left, bottom) {
        Ok(q) => q,
        Err(Error::TranscriptionIncomplete { west, south }) => {
            let n = (1..=n_max).find(|&n| quadrant_of(t, n, (1usize << n) - 1, left, bottom).is_err()).unwrap_or(n_max);
            report.failure = Some((n, DoublingFailure::Incomplete { west, south }));
            return report;
        }
        Err(e) => unreachable!("quadrant fill only fails on missing tiles: {e}"),
    };
    for n in 1..=n_max {
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for m in 0..1usize << n {
            let w = &q.rows[m][..n];
            if let Some(&m1) = seen.get(w) {
                report.failure = Some((n, DoublingFailure::Collision { m1, m2: m, word: w.to_string() }));
                return report;
            }
            seen.insert(w, m);
        }
        report.levels.push(DoublingLevel { n, distinct: seen.len() });
    }
    report
}

pub fn period_doubling_check(n_max: usize) -> Result<DoublingReport> {
    let report = period_doubling_of(&wise_tileset(), n_max, LEFT_COLOR, BOTTOM_COLOR);
    if let Some((_, DoublingFailure::Incomplete { west, south })) = &report.failure {
        return Err(Error::TranscriptionIncomplete { west: west.clone(), south: south.clone() });
    }
    Ok(report)
}

/// Every tile set obtained from `t` by recoloring one side of one tile.
pub fn single_side_mutations(t: &TileSet) -> Vec<(String, TileSet)> {
    let mut out = Vec::new();
    for (k, tile) in t.tiles().iter().enumerate() {
        for side in ["n", "e", "s", "w"] {
            let palette = if side == "n" || side == "s" { t.hcolors() } else { t.vcolors() };
            for c in palette {
                let mut tiles = t.tiles().to_vec();
                let slot = match side {
                    "n" => &mut tiles[k].n,
                    "e" => &mut tiles[k].e,
                    "s" => &mut tiles[k].s,
                    _ => &mut tiles[k].w,
                };
                if slot == c {
                    continue;
                }
                *slot = c.clone();
                let set = TileSet::new(tiles, t.vcolors().to_vec(), t.hcolors().to_vec()).expect("palettes kept");
                out.push((format!("{}.{side}={c}", tile.name), set));
            }
        }
    }
    out
}

/// The subdivided quadrant with tips, and the missing out-edges of every
/// inner 0-vertex as stubs carrying their tips.
#[derive(Clone, Debug)]
pub struct QuadrantFragment {
    pub frag: DomainFragment,
    pub rect: QuadrantRectangle,
    /// `z[j][i]`: the 0-vertex at column `i`, height `j`.
    pub z: Vec<Vec<usize>>,
    /// `u[j][i]`: midpoint of the horizontal edge from `z[j][i]` to `z[j][i+1]`.
    pub u: Vec<Vec<usize>>,
    /// Tip length hanging at each 1-vertex.
    pub tip: BTreeMap<usize, usize>,
    /// Color of the subdivided edge through each 1-vertex.
    pub color: BTreeMap<usize, String>,
}

impl QuadrantFragment {
    /// Out-neighbor of `z` whose subdivided edge has color `col`.
    pub fn midpoint_by_color(&self, z: usize, col: &str) -> Option<usize> {
        self.frag.out_neighbors(z).find(|y| self.color.get(y).map(String::as_str) == Some(col))
    }
}

/// Quadrant fragment of the given width and height, rooted at the corner.
pub fn quadrant_fragment(width: usize, height: usize) -> Result<QuadrantFragment> {
    let rect = quadrant(width, height)?;
    let tips = tip_lengths();
    let all_colors: Vec<String> = tips.keys().cloned().collect();
    let mut b = FragmentBuilder::new();
    let mut z = vec![vec![0usize; width + 1]; height + 1];
    for (j, row) in z.iter_mut().enumerate() {
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = b.vertex(format!("z.{j}.{i}"), Some(0));
        }
    }
    let mut tip = BTreeMap::new();
    let mut color = BTreeMap::new();
    let mut one = |b: &mut FragmentBuilder, name: String, col: char| {
        let v = b.vertex(name, Some(1));
        tip.insert(v, tips[&col.to_string()]);
        color.insert(v, col.to_string());
        v
    };
    let mut u = vec![vec![0usize; width]; height + 1];
    let mut vmid = vec![vec![0usize; width + 1]; height];
    for j in 0..=height {
        for i in 0..width {
            u[j][i] = one(&mut b, format!("h.{j}.{i}"), rect.horizontal(i, j));
        }
    }
    for (j, row) in vmid.iter_mut().enumerate() {
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = one(&mut b, format!("w.{j}.{i}"), rect.vertical(i, j));
        }
    }
    let colored = |src: usize, dst: usize, col: Option<char>| FragEdge {
        src,
        dst,
        color: col.map(|c| c.to_string()),
        vh: None,
        base_edge: None,
    };
    for j in 0..=height {
        for i in 0..width {
            let col = rect.horizontal(i, j);
            b.edge_full(colored(z[j][i], u[j][i], Some(col)));
            b.edge_full(colored(u[j][i], z[j][i + 1], Some(col)));
        }
    }
    for j in 0..height {
        for i in 0..=width {
            let col = rect.vertical(i, j);
            b.edge_full(colored(z[j][i], vmid[j][i], Some(col)));
            b.edge_full(colored(vmid[j][i], z[j + 1][i], Some(col)));
        }
    }
    for j in 0..height {
        for i in 0..width {
            let q = b.vertex(format!("q.{j}.{i}"), Some(2));
            b.edge(u[j][i], q);
            b.edge(vmid[j][i], q);
            b.edge(q, u[j + 1][i]);
            b.edge(q, vmid[j][i + 1]);
        }
    }
    // Inner 0-vertices get the three out-edges the quadrant does not contain.
    for j in 0..height {
        for i in 0..width {
            let present: BTreeSet<String> =
                [rect.horizontal(i, j), rect.vertical(i, j)].iter().map(|c| c.to_string()).collect();
            for col in all_colors.iter().filter(|c| !present.contains(*c)) {
                let c = col.chars().next().expect("one-letter colors");
                let s = one(&mut b, format!("s.{j}.{i}.{col}"), c);
                b.edge_full(colored(z[j][i], s, Some(c)));
            }
        }
    }
    for (&v, &len) in &tip {
        let mut prev = v;
        for k in 1..=len {
            let t = b.vertex(format!("t.{}.{k}", b.name(v)), Some(3));
            b.edge(prev, t);
            prev = t;
        }
    }
    for j in 0..=height {
        b.mark_open(z[j][width]);
    }
    for i in 0..=width {
        b.mark_open(z[height][i]);
    }
    for i in 0..width {
        b.mark_open(u[height][i]);
    }
    for row in &vmid {
        b.mark_open(row[width]);
    }
    let complete = 2 * (width + height) + 8;
    let frag = b.build(complete)?;
    Ok(QuadrantFragment { frag, rect, z, u, tip, color })
}

/// Parameters of the end-to-end counterexample run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DriveConfig {
    /// Radius of the W̃ ball used for the filter-type census.
    pub radius: usize,
    /// Depth of the W̃ principal filter used for degrees and ♮-cliques.
    pub depth: usize,
    /// Largest alphabet tried by the labeling search.
    pub k_max: usize,
    /// Window width of the obstruction suite; rows `0 ≤ k < m < 2ⁿ`.
    pub n: usize,
    pub n_max: usize,
    /// Configuration bound for ♮, capped by the filter's resolution.
    pub config_bound: usize,
    /// Labelings taken from the ordered enumeration, per alphabet size.
    pub labeling_limit: usize,
    /// Additional labelings from randomized searches, per alphabet size.
    pub samples: usize,
    pub seed: u64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig {
            radius: 6,
            depth: 12,
            k_max: 5,
            n: 3,
            n_max: 12,
            config_bound: 6,
            labeling_limit: 8,
            samples: 8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DriveChecks {
    pub npc: bool,
    pub vh: bool,
    pub csc: bool,
    pub orientation: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CensusSummary {
    pub radius: usize,
    pub depth: usize,
    pub candidates: usize,
    pub classes: usize,
    pub bound: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeSummary {
    pub fragment_vertices: usize,
    pub zero_vertex: Vec<usize>,
    pub one_vertex: Vec<usize>,
    pub two_vertex: Vec<usize>,
    pub three_vertex: Vec<usize>,
}

impl DegreeSummary {
    pub fn matches_expected(&self) -> bool {
        self.zero_vertex == [5]
            && self.two_vertex == [2]
            && in_range(&self.one_vertex, 4, 5)
            && in_range(&self.three_vertex, 0, 1)
    }
}

fn in_range(v: &[usize], lo: usize, hi: usize) -> bool {
    !v.is_empty() && v.iter().all(|&d| (lo..=hi).contains(&d))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CliqueSummary {
    pub value: usize,
    pub bound: usize,
    pub config_bound: usize,
    pub events: usize,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DoublingSummary {
    pub n_max: usize,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LabelingSummary {
    pub k: usize,
    pub count: usize,
    /// Per alphabet size tried: `None` for UNSAT, else labelings kept.
    pub per_k: BTreeMap<usize, Option<usize>>,
    /// Whether the ordered enumeration at `k` ran out before its limit.
    pub exhausted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObstructionEntry {
    pub labeling_id: usize,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub index: usize,
    pub vertex: String,
    /// No label- and type-preserving isomorphism at the covering depth.
    pub iso_none: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DriveReport {
    pub config: DriveConfig,
    pub complex_counts: BTreeMap<String, (usize, usize, usize)>,
    pub checks: DriveChecks,
    pub census: CensusSummary,
    pub degree_profile: DegreeSummary,
    pub natural_clique_max: CliqueSummary,
    pub period_doubling: DoublingSummary,
    pub labelings: LabelingSummary,
    pub quadrant: (usize, usize),
    pub covering_depth: usize,
    pub obstructions: Vec<ObstructionEntry>,
    pub witness_count: usize,
    pub pass: bool,
}

/// Quadrant large enough that every cone of depth `2n + 4` from a row start
/// up to height `2ⁿ − 1` stays inside it.
pub fn obstruction_quadrant(n: usize) -> Result<QuadrantFragment> {
    let top = (1usize << n) - 1;
    quadrant_fragment(n + 2, top + n + 3)
}

pub fn covering_depth(n: usize) -> usize {
    2 * n + 4
}

pub fn counterexample_drive(cfg: &DriveConfig) -> Result<DriveReport> {
    use crate::complex::{check_admissible_orientation, check_csc, check_npc, check_vh};
    use crate::cover::{filter_type_census, unfold_ball, unfold_filter, CensusMode};
    use crate::events::{events_from_filter, natural_clique_max};
    use crate::labeling::{
        enumerate_nice, labeled_filter_iso, regular_obstruction_witness, sample_nice, search_nice, SearchOutcome,
    };
    use crate::median::{degree_profile, principal_filter};

    let x = build_x();
    let w = build_w();
    let complex_counts = BTreeMap::from([("X".to_string(), x.counts()), ("W".to_string(), w.counts())]);
    let checks = DriveChecks {
        npc: check_npc(&x).is_pass(),
        vh: check_vh(&x)?.is_pass(),
        csc: check_csc(&x)?.is_pass(),
        orientation: check_admissible_orientation(&x).is_pass(),
    };

    let ball = unfold_ball(&w, "v", cfg.radius)?;
    let census = filter_type_census(&ball, 2, CensusMode::Colored)?;
    let census = CensusSummary {
        radius: cfg.radius,
        depth: 2,
        candidates: census.candidates,
        classes: census.classes.len(),
        bound: w.vertices().len(),
    };

    let filter = unfold_filter(&w, "v", cfg.depth)?;
    let frag = principal_filter(&filter, filter.basepoint())?;
    let prof = degree_profile(&frag);
    let degs = |t: u8| prof.get(&Some(t)).map(|s| s.iter().copied().collect()).unwrap_or_default();
    let degree_profile = DegreeSummary {
        fragment_vertices: frag.len(),
        zero_vertex: degs(0),
        one_vertex: degs(1),
        two_vertex: degs(2),
        three_vertex: degs(3),
    };
    let ef = events_from_filter(&frag)?;
    let s = cfg.config_bound.min(ef.resolution());
    let (clique, _) = natural_clique_max(&ef, s)?;
    let natural_clique_max =
        CliqueSummary { value: clique.size, bound: 11, config_bound: s, events: ef.len(), members: clique.members };

    let pd = period_doubling_check(cfg.n_max)?;
    let period_doubling = DoublingSummary {
        n_max: cfg.n_max,
        status: match &pd.failure {
            None => "PASS".into(),
            Some((n, f)) => format!("FAIL at n={n}: {f:?}"),
        },
    };

    let q = obstruction_quadrant(cfg.n)?;
    let d = covering_depth(cfg.n);
    let mut per_k = BTreeMap::new();
    let mut kept = Vec::new();
    let mut exhausted = false;
    for k in 1..=cfg.k_max {
        match search_nice(&q.frag, k) {
            SearchOutcome::Unsat(_) => {
                per_k.insert(k, None);
            }
            SearchOutcome::Found(first) => {
                let (mut ls, ex) = enumerate_nice(&q.frag, k, cfg.labeling_limit.max(1));
                if !ls.contains(&first) {
                    ls.insert(0, first);
                }
                for l in sample_nice(&q.frag, k, cfg.samples, cfg.seed) {
                    if !ls.contains(&l) {
                        ls.push(l);
                    }
                }
                per_k.insert(k, Some(ls.len()));
                if k == cfg.k_max {
                    exhausted = ex;
                }
                kept.extend(ls.into_iter().map(|l| (k, l)));
            }
        }
    }
    let mut obstructions = Vec::new();
    let top = (1usize << cfg.n) - 1;
    for (id, (_, l)) in kept.iter().enumerate() {
        for k in 0..top {
            for m in k + 1..=top {
                let wit = regular_obstruction_witness(&q, l, k, m, cfg.n)?;
                let iso = labeled_filter_iso(&q.frag, l, q.z[k][0], q.z[m][0], d)?;
                obstructions.push(ObstructionEntry {
                    labeling_id: id,
                    k,
                    m,
                    n: cfg.n,
                    index: wit.index,
                    vertex: wit.vertex,
                    iso_none: iso.is_none(),
                });
            }
        }
    }
    let labelings = LabelingSummary { k: cfg.k_max, count: kept.len(), per_k, exhausted };
    let pairs = top * (top + 1) / 2;
    let pass = checks.npc
        && checks.vh
        && checks.csc
        && checks.orientation
        && census.classes <= census.bound
        && degree_profile.matches_expected()
        && natural_clique_max.value <= natural_clique_max.bound
        && pd.is_pass()
        && !kept.is_empty()
        && obstructions.len() == kept.len() * pairs
        && obstructions.iter().all(|o| o.iso_none);
    Ok(DriveReport {
        config: cfg.clone(),
        complex_counts,
        checks,
        census,
        degree_profile,
        natural_clique_max,
        period_doubling,
        labelings,
        quadrant: (q.rect.width, q.rect.height),
        covering_depth: d,
        witness_count: obstructions.len(),
        obstructions,
        pass,
    })
}
