//! Wang tiles: corner determinism, the one-vertex complex of a tile set,
//! bounded patch and torus searches, and a periodicity probe.
//!
//! Tiles are never rotated or reflected. Grid coordinates are `(x, y)` with
//! `y = 0` the bottom row.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::complex::{ComplexBuilder, Sign, SquareComplex, Verdict, Vh};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tile {
    pub name: String,
    pub n: String,
    pub e: String,
    pub s: String,
    pub w: String,
}

impl Tile {
    pub fn new(name: &str, n: &str, e: &str, s: &str, w: &str) -> Self {
        Tile { name: name.into(), n: n.into(), e: e.into(), s: s.into(), w: w.into() }
    }
}

/// Tiles with vertical colors on west/east sides and horizontal colors on north/south.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TileSet {
    tiles: Vec<Tile>,
    vcolors: Vec<String>,
    hcolors: Vec<String>,
}

impl TileSet {
    pub fn new(tiles: Vec<Tile>, vcolors: Vec<String>, hcolors: Vec<String>) -> Result<Self> {
        if let Some(c) = vcolors.iter().find(|c| hcolors.contains(c)) {
            return Err(Error::PaletteOverlap(c.clone()));
        }
        for t in &tiles {
            for (side, c) in [("w", &t.w), ("e", &t.e)] {
                if !vcolors.contains(c) {
                    return Err(Error::Validation(format!(
                        "tile {} side {side}: `{c}` is not a vertical color",
                        t.name
                    )));
                }
            }
            for (side, c) in [("n", &t.n), ("s", &t.s)] {
                if !hcolors.contains(c) {
                    return Err(Error::Validation(format!(
                        "tile {} side {side}: `{c}` is not a horizontal color",
                        t.name
                    )));
                }
            }
        }
        Ok(TileSet { tiles, vcolors, hcolors })
    }

    /// Palettes inferred from the sides on which colors occur.
    pub fn from_tiles(tiles: Vec<Tile>) -> Result<Self> {
        let mut vcolors: Vec<String> = Vec::new();
        let mut hcolors: Vec<String> = Vec::new();
        for t in &tiles {
            for c in [&t.w, &t.e] {
                if !vcolors.contains(c) {
                    vcolors.push(c.clone());
                }
            }
            for c in [&t.s, &t.n] {
                if !hcolors.contains(c) {
                    hcolors.push(c.clone());
                }
            }
        }
        TileSet::new(tiles, vcolors, hcolors)
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn vcolors(&self) -> &[String] {
        &self.vcolors
    }

    pub fn hcolors(&self) -> &[String] {
        &self.hcolors
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }
}

/// Parses `vcolor`/`hcolor` palette lines and `tile NAME n=C e=C s=C w=C` lines.
pub fn parse_tiles(text: &str) -> Result<TileSet> {
    let mut tiles = Vec::new();
    let mut vcolors: Vec<String> = Vec::new();
    let mut hcolors: Vec<String> = Vec::new();
    let mut declared = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "vcolor" => {
                declared = true;
                vcolors.extend(tokens[1..].iter().map(|s| s.to_string()));
            }
            "hcolor" => {
                declared = true;
                hcolors.extend(tokens[1..].iter().map(|s| s.to_string()));
            }
            "tile" => {
                if tokens.len() != 6 {
                    return Err(Error::Parse { line: line_no, msg: "expected `tile NAME n=C e=C s=C w=C`".into() });
                }
                let mut sides = [None, None, None, None];
                for attr in &tokens[2..] {
                    let (k, v) = attr
                        .split_once('=')
                        .ok_or_else(|| Error::Parse { line: line_no, msg: format!("bad side `{attr}`") })?;
                    let slot = match k {
                        "n" => 0,
                        "e" => 1,
                        "s" => 2,
                        "w" => 3,
                        _ => return Err(Error::Parse { line: line_no, msg: format!("bad side `{k}`") }),
                    };
                    sides[slot] = Some(v.to_string());
                }
                let [Some(n), Some(e), Some(s), Some(w)] = sides else {
                    return Err(Error::Parse { line: line_no, msg: "tile needs n, e, s and w".into() });
                };
                tiles.push(Tile { name: tokens[1].to_string(), n, e, s, w });
            }
            other => return Err(Error::Parse { line: line_no, msg: format!("unknown directive `{other}`") }),
        }
    }
    if declared {
        TileSet::new(tiles, vcolors, hcolors)
    } else {
        TileSet::from_tiles(tiles)
    }
}

pub fn write_tiles(t: &TileSet) -> String {
    let mut out = format!("vcolor {}\nhcolor {}\n", t.vcolors.join(" "), t.hcolors.join(" "));
    for tile in &t.tiles {
        out.push_str(&format!("tile {} n={} e={} s={} w={}\n", tile.name, tile.n, tile.e, tile.s, tile.w));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CornerRole {
    NW,
    NE,
    SW,
    SE,
}

impl CornerRole {
    pub const ALL: [CornerRole; 4] = [CornerRole::NW, CornerRole::NE, CornerRole::SW, CornerRole::SE];

    /// The (vertical, horizontal) colors a tile shows at this corner.
    pub fn colors(self, t: &Tile) -> (&str, &str) {
        match self {
            CornerRole::NW => (&t.w, &t.n),
            CornerRole::NE => (&t.e, &t.n),
            CornerRole::SW => (&t.w, &t.s),
            CornerRole::SE => (&t.e, &t.s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeterminismViolation {
    pub corner: CornerRole,
    pub tiles: (usize, usize),
}

pub fn check_4way_deterministic(t: &TileSet) -> Verdict<DeterminismViolation> {
    for corner in CornerRole::ALL {
        for i in 0..t.tiles.len() {
            for j in i + 1..t.tiles.len() {
                if corner.colors(&t.tiles[i]) == corner.colors(&t.tiles[j]) {
                    return Verdict::Fail(DeterminismViolation { corner, tiles: (i, j) });
                }
            }
        }
    }
    Verdict::Pass
}

/// Every (vertical, horizontal) color pair occurs at every corner role.
pub fn corners_complete(t: &TileSet) -> bool {
    CornerRole::ALL.iter().all(|&corner| {
        let seen: BTreeSet<(&str, &str)> = t.tiles.iter().map(|tile| corner.colors(tile)).collect();
        t.vcolors.iter().all(|v| t.hcolors.iter().all(|h| seen.contains(&(v.as_str(), h.as_str()))))
    })
}

/// One vertex, one loop per color, one square `s+ e+ n- w-` per tile.
pub fn complex_from_tiles(t: &TileSet) -> Result<SquareComplex> {
    if let Some(c) = t.vcolors.iter().find(|c| t.hcolors.contains(c)) {
        return Err(Error::PaletteOverlap(c.clone()));
    }
    let mut b = ComplexBuilder::new("tiles");
    let v = b.vertex("v", None);
    let mut id = std::collections::BTreeMap::new();
    for c in &t.vcolors {
        id.insert(c.clone(), b.edge(c.clone(), v, v, Some(c), Some(Vh::V)));
    }
    for c in &t.hcolors {
        id.insert(c.clone(), b.edge(c.clone(), v, v, Some(c), Some(Vh::H)));
    }
    for tile in &t.tiles {
        b.square([
            (id[&tile.s], Sign::Plus),
            (id[&tile.e], Sign::Plus),
            (id[&tile.n], Sign::Minus),
            (id[&tile.w], Sign::Minus),
        ]);
    }
    b.build()
}

/// Optional color constraints along the four sides of a patch.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Boundary {
    pub south: Vec<Option<String>>,
    pub north: Vec<Option<String>>,
    pub west: Vec<Option<String>>,
    pub east: Vec<Option<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tiling {
    pub width: usize,
    pub height: usize,
    /// `cells[y][x]` is a tile index; row 0 is the bottom row.
    pub cells: Vec<Vec<usize>>,
}

impl Tiling {
    pub fn names<'a>(&self, t: &'a TileSet) -> Vec<Vec<&'a str>> {
        self.cells.iter().map(|row| row.iter().map(|&i| t.tiles[i].name.as_str()).collect()).collect()
    }

    pub fn render(&self, t: &TileSet) -> String {
        let mut out = String::new();
        for row in self.names(t).iter().rev() {
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Adjacent tiles agree on shared edges (with wrap-around when `torus`).
    pub fn is_valid(&self, t: &TileSet, torus: bool) -> bool {
        let (w, h) = (self.width, self.height);
        for y in 0..h {
            for x in 0..w {
                let here = &t.tiles[self.cells[y][x]];
                if (x + 1 < w || torus) && here.e != t.tiles[self.cells[y][(x + 1) % w]].w {
                    return false;
                }
                if (y + 1 < h || torus) && here.n != t.tiles[self.cells[(y + 1) % h][x]].s {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Display for Tiling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.iter().rev() {
            let line: Vec<String> = row.iter().map(|i| i.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

struct Solver<'a> {
    t: &'a TileSet,
    w: usize,
    h: usize,
    torus: bool,
}

impl Solver<'_> {
    fn neighbors(&self, c: usize) -> Vec<(usize, Dir)> {
        let (x, y) = (c % self.w, c / self.w);
        let mut out = Vec::with_capacity(4);
        if x + 1 < self.w || self.torus {
            out.push((y * self.w + (x + 1) % self.w, Dir::E));
        }
        if x > 0 || self.torus {
            out.push((y * self.w + (x + self.w - 1) % self.w, Dir::W));
        }
        if y + 1 < self.h || self.torus {
            out.push((((y + 1) % self.h) * self.w + x, Dir::N));
        }
        if y > 0 || self.torus {
            out.push((((y + self.h - 1) % self.h) * self.w + x, Dir::S));
        }
        out
    }

    fn fits(&self, a: usize, dir: Dir, b: usize) -> bool {
        let (ta, tb) = (&self.t.tiles[a], &self.t.tiles[b]);
        match dir {
            Dir::E => ta.e == tb.w,
            Dir::W => ta.w == tb.e,
            Dir::N => ta.n == tb.s,
            Dir::S => ta.s == tb.n,
        }
    }

    /// Minimum-remaining-values backtracking with forward checking.
    fn search(&self, domains: Vec<Vec<usize>>, assigned: &mut Vec<Option<usize>>) -> bool {
        let pick = (0..domains.len()).filter(|&c| assigned[c].is_none()).min_by_key(|&c| (domains[c].len(), c));
        let Some(c) = pick else { return true };
        for &tile in &domains[c] {
            let mut next = domains.clone();
            next[c] = vec![tile];
            let mut dead = false;
            for (nb, dir) in self.neighbors(c) {
                if nb == c {
                    dead = !self.fits(tile, dir, tile);
                } else if assigned[nb].is_none() {
                    next[nb].retain(|&u| self.fits(tile, dir, u));
                    dead = next[nb].is_empty();
                }
                if dead {
                    dead = true;
                    break;
                }
            }
            if dead {
                continue;
            }
            assigned[c] = Some(tile);
            if self.search(next, assigned) {
                return true;
            }
            assigned[c] = None;
        }
        false
    }

    fn run(&self, boundary: Option<&Boundary>) -> Option<Tiling> {
        let n = self.w * self.h;
        let all: Vec<usize> = (0..self.t.tiles.len()).collect();
        let mut domains = vec![all; n];
        if let Some(b) = boundary {
            let want = |v: &Vec<Option<String>>, i: usize| v.get(i).cloned().flatten();
            for x in 0..self.w {
                if let Some(c) = want(&b.south, x) {
                    domains[x].retain(|&t| self.t.tiles[t].s == c);
                }
                if let Some(c) = want(&b.north, x) {
                    domains[(self.h - 1) * self.w + x].retain(|&t| self.t.tiles[t].n == c);
                }
            }
            for y in 0..self.h {
                if let Some(c) = want(&b.west, y) {
                    domains[y * self.w].retain(|&t| self.t.tiles[t].w == c);
                }
                if let Some(c) = want(&b.east, y) {
                    domains[y * self.w + self.w - 1].retain(|&t| self.t.tiles[t].e == c);
                }
            }
        }
        if domains.iter().any(Vec::is_empty) {
            return None;
        }
        let mut assigned = vec![None; n];
        if !self.search(domains, &mut assigned) {
            return None;
        }
        let cells =
            (0..self.h).map(|y| (0..self.w).map(|x| assigned[y * self.w + x].expect("complete")).collect()).collect();
        Some(Tiling { width: self.w, height: self.h, cells })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    E,
    W,
    N,
    S,
}

/// A valid `w × h` patch, or `None` after exhausting the search.
pub fn tile_patch(t: &TileSet, w: usize, h: usize, boundary: Option<&Boundary>) -> Option<Tiling> {
    assert!(w >= 1 && h >= 1, "patch dimensions must be positive");
    Solver { t, w, h, torus: false }.run(boundary)
}

/// A valid tiling of the `a × b` torus: a doubly periodic tiling with periods (a,0), (0,b).
pub fn tile_torus(t: &TileSet, a: usize, b: usize) -> Option<Tiling> {
    assert!(a >= 1 && b >= 1, "torus dimensions must be positive");
    Solver { t, w: a, h: b, torus: true }.run(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProbeVerdict {
    /// Some square patch within the bound has no tiling.
    DoesNotTile,
    /// A torus tiling exists.
    Periodic,
    /// Every probed patch tiles and no probed torus does.
    AperiodicConsistent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeReport {
    pub max_patch: usize,
    pub max_period: usize,
    pub largest_patch: usize,
    pub tori: Vec<(usize, usize)>,
    pub tori_tried: usize,
    pub verdict: ProbeVerdict,
}

/// Torus sizes in probe order: increasing area, then width.
pub fn torus_order(max_period: usize) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = (1..=max_period).flat_map(|a| (1..=max_period).map(move |b| (a, b))).collect();
    v.sort_by_key(|&(a, b)| (a * b, a, b));
    v
}

pub fn aperiodicity_probe(t: &TileSet, max_patch: usize, max_period: usize) -> ProbeReport {
    let mut largest_patch = 0;
    for n in 1..=max_patch {
        if tile_patch(t, n, n, None).is_none() {
            break;
        }
        largest_patch = n;
    }
    let order = torus_order(max_period);
    let tori: Vec<(usize, usize)> = order.iter().copied().filter(|&(a, b)| tile_torus(t, a, b).is_some()).collect();
    let verdict = if largest_patch < max_patch {
        ProbeVerdict::DoesNotTile
    } else if !tori.is_empty() {
        ProbeVerdict::Periodic
    } else {
        ProbeVerdict::AperiodicConsistent
    };
    ProbeReport { max_patch, max_period, largest_patch, tori, tori_tried: order.len(), verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{check_csc, check_npc, check_vh};
    use crate::format::parse_complex;
    use proptest::prelude::*;

    fn wise() -> TileSet {
        parse_tiles(include_str!("../../../data/wise.tiles")).unwrap()
    }

    fn mismatch() -> TileSet {
        parse_tiles(include_str!("../../../data/mismatch.tiles")).unwrap()
    }

    fn selfmatch() -> TileSet {
        TileSet::from_tiles(vec![Tile::new("s", "h", "v", "h", "v")]).unwrap()
    }

    #[test]
    fn wise_tiles_are_deterministic_and_give_x() {
        let t = wise();
        assert!(check_4way_deterministic(&t).is_pass());
        assert!(corners_complete(&t));
        let c = complex_from_tiles(&t).unwrap();
        let x = parse_complex(include_str!("../../../data/wise_x.sqc")).unwrap();
        assert_eq!(c.edges(), x.edges());
        assert_eq!(c.squares(), x.squares());
        assert!(check_vh(&c).unwrap().is_pass());
        assert!(check_csc(&c).unwrap().is_pass());
    }

    #[test]
    fn duplicate_tile_fails_every_corner() {
        let mut tiles = wise().tiles().to_vec();
        let mut copy = tiles[0].clone();
        copy.name = "dup".into();
        tiles.push(copy);
        let t = TileSet::from_tiles(tiles.clone()).unwrap();
        for corner in CornerRole::ALL {
            let hits = (0..tiles.len()).any(|j| j != 0 && corner.colors(&tiles[0]) == corner.colors(&tiles[j]));
            assert!(hits);
        }
        assert_eq!(
            check_4way_deterministic(&t),
            Verdict::Fail(DeterminismViolation { corner: CornerRole::NW, tiles: (0, 6) })
        );
        assert!(check_4way_deterministic(&selfmatch()).is_pass());
        assert!(!check_npc(&complex_from_tiles(&t).unwrap()).is_pass());
    }

    #[test]
    fn palette_overlap_rejected() {
        let err = TileSet::new(vec![], vec!["a".into()], vec!["a".into()]);
        assert!(matches!(err, Err(Error::PaletteOverlap(_))));
        assert!(matches!(parse_tiles("vcolor a\nhcolor a\n"), Err(Error::PaletteOverlap(_))));
    }

    #[test]
    fn small_complexes_from_tiles() {
        let c = complex_from_tiles(&selfmatch()).unwrap();
        assert_eq!(c.counts(), (1, 2, 1));
        let two =
            TileSet::from_tiles(vec![Tile::new("p", "h", "v", "h", "v"), Tile::new("q", "h", "v", "h", "v")]).unwrap();
        assert_eq!(complex_from_tiles(&two).unwrap().counts(), (1, 2, 2));
    }

    #[test]
    fn patches() {
        let t = wise();
        for n in [1, 5, 12] {
            let p = tile_patch(&t, n, n, None).unwrap();
            assert!(p.is_valid(&t, false));
        }
        let s = selfmatch();
        assert!(tile_patch(&s, 5, 5, None).unwrap().is_valid(&s, false));
        assert!(tile_patch(&mismatch(), 2, 1, None).is_none());
        assert!(tile_patch(&mismatch(), 1, 1, None).is_some());
    }

    #[test]
    fn boundary_constraints_respected() {
        let t = wise();
        let b = Boundary { south: vec![Some("y".into()); 4], west: vec![Some("c".into()); 4], ..Default::default() };
        let p = tile_patch(&t, 4, 4, Some(&b)).unwrap();
        assert!(p.cells[0].iter().all(|&i| t.tiles()[i].s == "y"));
        assert!(p.cells.iter().all(|row| t.tiles()[row[0]].w == "c"));
        let impossible = Boundary { south: vec![Some("zz".into())], ..Default::default() };
        assert!(tile_patch(&t, 1, 1, Some(&impossible)).is_none());
    }

    #[test]
    fn tori() {
        assert!(tile_torus(&selfmatch(), 1, 1).is_some());
        for a in 1..=3 {
            for b in 1..=3 {
                assert!(tile_torus(&mismatch(), a, b).is_none());
            }
        }
        assert_eq!(torus_order(2), vec![(1, 1), (1, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn probes() {
        let s = aperiodicity_probe(&selfmatch(), 3, 2);
        assert_eq!(s.verdict, ProbeVerdict::Periodic);
        assert!(s.tori.contains(&(1, 1)));
        let m = aperiodicity_probe(&mismatch(), 3, 2);
        assert_eq!(m.verdict, ProbeVerdict::DoesNotTile);
        assert_eq!(m.largest_patch, 1);
    }

    #[test]
    fn text_round_trip() {
        let t = wise();
        assert_eq!(parse_tiles(&write_tiles(&t)).unwrap(), t);
    }

    proptest! {
        #[test]
        fn patch_success_is_monotone(w in 1usize..6, h in 1usize..6, dw in 0usize..3, dh in 0usize..3) {
            let t = wise();
            let big = tile_patch(&t, w + dw, h + dh, None).unwrap();
            let sub = Tiling { width: w, height: h, cells: big.cells[..h].iter().map(|r| r[..w].to_vec()).collect() };
            prop_assert!(sub.is_valid(&t, false));
            prop_assert!(tile_patch(&t, w, h, None).is_some());
        }
    }
}
