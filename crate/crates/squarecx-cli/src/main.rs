//! `squarecx`: batch front end. Exit code 0 means PASS or success, 1 means
//! FAIL or UNSAT with a report, 2 means a usage, input or precondition error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use squarecx::complex::{check_admissible_orientation, check_csc, check_npc, check_vh};
use squarecx::cover::{
    unfold_ball_with_budget, unfold_csc_product, unfold_filter_with_budget, CoverBall, DEFAULT_BUDGET,
};
use squarecx::events::{check_axioms, events_from_filter, natural_clique_max};
use squarecx::format::{complex_to_dot, complex_to_json, write_complex};
use squarecx::labeling::{
    check_nice, check_trace, enumerate_nice, hyperplane_trace_bridge, search_nice, EdgeLabeling, SearchOutcome,
};
use squarecx::median::{principal_filter, DomainFragment};
use squarecx::special::{base_hyperplanes, check_special};
use squarecx::tiles::{
    aperiodicity_probe, check_4way_deterministic, corners_complete, parse_tiles, tile_patch, tile_torus, ProbeVerdict,
};
use squarecx::wise::{
    build_w, build_x, counterexample_drive, period_doubling_check, row_word, DoublingFailure, DriveConfig,
};
use squarecx::{parse_complex, Error, SquareComplex, Verdict};

#[derive(Parser)]
#[command(name = "squarecx", version, about = "Directed square complexes, their covers, domains and labelings")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    /// Cell budget for unfolding; the WISE_BUDGET environment variable takes precedence.
    #[arg(long, global = true, value_name = "CELLS")]
    budget: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Local checks on a complex file.
    Check {
        #[arg(value_enum)]
        what: CheckKind,
        file: PathBuf,
    },
    /// Ball of the universal cover around a lift of a vertex.
    Unfold {
        file: PathBuf,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        radius: usize,
        /// Product-of-trees construction for one-vertex complete square complexes.
        #[arg(long, conflicts_with = "filter")]
        csc_fast: bool,
        /// Directed principal filter of the lift instead of the metric ball.
        #[arg(long)]
        filter: bool,
    },
    /// Principal filter of a ball vertex, as a domain fragment.
    Filter {
        ball: PathBuf,
        /// Ball vertex name; defaults to the basepoint.
        #[arg(long)]
        vertex: Option<String>,
    },
    /// Event structure of a domain fragment.
    Events {
        frag: PathBuf,
        /// Also compute the ♮ relation and its largest clique.
        #[arg(long)]
        natural: bool,
        #[arg(long, value_name = "S")]
        config_bound: Option<usize>,
    },
    /// Labeling search and checks.
    Label {
        #[command(subcommand)]
        cmd: LabelCmd,
    },
    /// Wang tile sets.
    Tiles {
        #[command(subcommand)]
        cmd: TilesCmd,
    },
    /// Wise's complex and the counterexample pipeline.
    Wise {
        #[command(subcommand)]
        cmd: WiseCmd,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Npc,
    Vh,
    Csc,
    Orientation,
    Special,
}

#[derive(Subcommand)]
enum LabelCmd {
    /// Exhaustive search for a nice labeling.
    Search {
        frag: PathBuf,
        #[arg(long)]
        alphabet: usize,
        /// Print up to this many labelings instead of one.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Determinism of a labeling on a fragment.
    Check { frag: PathBuf, labeling: PathBuf },
    /// LES1–3 of a labeling with independence on a fragment.
    Trace { frag: PathBuf, labeling: PathBuf },
    /// Canonical hyperplane labeling of a complex against LES1–3.
    Bridge {
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        radius: usize,
    },
}

#[derive(Subcommand)]
enum TilesCmd {
    /// 4-way determinism.
    Check { file: PathBuf },
    /// A w × h patch.
    Patch {
        file: PathBuf,
        #[arg(long)]
        w: usize,
        #[arg(long)]
        h: usize,
    },
    /// A tiling of the a × b torus.
    Torus {
        file: PathBuf,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
    },
    /// Bounded patch and torus probes.
    Probe {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_patch: usize,
        #[arg(long, default_value_t = 4)]
        max_period: usize,
    },
}

#[derive(Subcommand)]
enum WiseCmd {
    BuildX,
    BuildW,
    /// Row word M_n(m).
    Word {
        n: usize,
        m: usize,
    },
    PeriodDoubling {
        n_max: usize,
    },
    /// End-to-end counterexample report.
    Drive {
        #[arg(long, default_value_t = 6)]
        radius: usize,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 5)]
        kmax: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
    },
}

/// A finished command: its report and whether it passed.
struct Outcome {
    pass: bool,
    json: Value,
    text: String,
    dot: Option<String>,
}

impl Outcome {
    fn new(pass: bool, json: Value, text: impl Into<String>) -> Self {
        Outcome { pass, json, text: text.into(), dot: None }
    }

    fn with_dot(mut self, dot: String) -> Self {
        self.dot = Some(dot);
        self
    }
}

fn verdict_text<W: std::fmt::Debug>(name: &str, v: &Verdict<W>) -> String {
    match v {
        Verdict::Pass => format!("{name}: PASS"),
        Verdict::Fail(w) => format!("{name}: FAIL {w:?}"),
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_complex(path: &Path) -> Result<SquareComplex, Error> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        serde_json::from_str::<squarecx::format::ComplexDoc>(&text)?.into_complex()
    } else {
        parse_complex(&text)
    }
}

fn complex_outcome(c: &SquareComplex) -> Outcome {
    let json: Value = serde_json::from_str(&complex_to_json(c)).expect("complex JSON parses");
    Outcome::new(true, json, write_complex(c)).with_dot(complex_to_dot(c))
}

fn budget(cli: &Cli) -> Result<usize, Error> {
    match std::env::var("WISE_BUDGET") {
        Ok(v) => v.trim().parse().map_err(|_| Error::Validation(format!("WISE_BUDGET is not a number: `{v}`"))),
        Err(_) => Ok(cli.budget.unwrap_or(DEFAULT_BUDGET)),
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    match &cli.command {
        Command::Check { what, file } => check(*what, &load_complex(file)?),
        Command::Unfold { file, vertex, radius, csc_fast, filter } => {
            let c = load_complex(file)?;
            let b = budget(cli)?;
            let ball = if *csc_fast {
                unfold_csc_product(&c, vertex, *radius)?
            } else if *filter {
                unfold_filter_with_budget(&c, vertex, *radius, b)?
            } else {
                unfold_ball_with_budget(&c, vertex, *radius, b)?
            };
            let (v, e, s) = ball.cells().counts();
            let text = format!(
                "{:?} of radius {} around a lift of {vertex}: {v} vertices, {e} edges, {s} squares, {} interior",
                ball.kind(),
                ball.radius(),
                ball.interior_count()
            );
            Ok(Outcome::new(true, ball.to_json(), text).with_dot(complex_to_dot(ball.cells())))
        }
        Command::Filter { ball, vertex } => {
            let ball = CoverBall::from_json(&read(ball)?, budget(cli)?)?;
            let v = match vertex {
                Some(name) => ball.vertex_id(name)?,
                None => ball.basepoint(),
            };
            let frag = principal_filter(&ball, v)?;
            let text = format!(
                "filter of {}: {} vertices, {} edges, {} squares, {} Θ classes, complete to depth {}",
                ball.name(v),
                frag.len(),
                frag.edges().len(),
                frag.squares().len(),
                frag.theta_count(),
                frag.complete_depth()
            );
            Ok(Outcome::new(true, frag.to_json(), text).with_dot(frag.to_dot()))
        }
        Command::Events { frag, natural, config_bound } => {
            let frag = DomainFragment::from_json(&read(frag)?)?;
            let ef = events_from_filter(&frag)?;
            let axioms = check_axioms(&ef);
            let mut json = ef.to_json();
            json["axioms"] = serde_json::to_value(&axioms)?;
            let mut text = format!(
                "{} events, resolution {}, {} unresolved classes\n{}",
                ef.len(),
                ef.resolution(),
                ef.unresolved_classes(),
                verdict_text("axioms", &axioms)
            );
            let mut dot = None;
            if *natural {
                let s = config_bound.unwrap_or(ef.resolution());
                let (clique, rep) = natural_clique_max(&ef, s)?;
                json["natural"] = serde_json::to_value(&rep)?;
                json["clique"] = serde_json::to_value(&clique)?;
                let _ = write!(text, "\n♮ pairs {}, largest clique {} at config bound {s}", rep.pairs, clique.size);
                let (g, _) = squarecx::events::natural_relation(&ef, s)?;
                dot = Some(g.to_dot(&ef));
            }
            let mut out = Outcome::new(axioms.is_pass(), json, text);
            out.dot = dot;
            Ok(out)
        }
        Command::Label { cmd } => label(cmd),
        Command::Tiles { cmd } => tiles(cmd),
        Command::Wise { cmd } => wise(cmd),
    }
}

fn check(what: CheckKind, c: &SquareComplex) -> Result<Outcome, Error> {
    Ok(match what {
        CheckKind::Npc => {
            let v = check_npc(c);
            let text = match &v {
                Verdict::Pass => "npc: PASS".to_string(),
                Verdict::Fail(w) => format!("npc: FAIL {}", w.describe(c)),
            };
            Outcome::new(v.is_pass(), serde_json::to_value(&v)?, text)
        }
        CheckKind::Vh => {
            let v = check_vh(c)?;
            Outcome::new(v.is_pass(), serde_json::to_value(&v)?, verdict_text("vh", &v))
        }
        CheckKind::Csc => {
            let r = check_csc(c)?;
            let text = match &r.uncovered {
                None => format!("csc: PASS ({} corner pairs)", r.pairs),
                Some(p) => format!(
                    "csc: FAIL no square at {} between {} and {}",
                    c.vertices()[p.vertex].name,
                    c.end_label(p.vertical),
                    c.end_label(p.horizontal)
                ),
            };
            Outcome::new(r.is_pass(), serde_json::to_value(&r)?, text)
        }
        CheckKind::Orientation => {
            let v = check_admissible_orientation(c);
            Outcome::new(v.is_pass(), serde_json::to_value(&v)?, verdict_text("orientation", &v))
        }
        CheckKind::Special => {
            let v = check_special(c);
            let h = base_hyperplanes(c);
            let mut lines = vec![format!(
                "special: {} ({} hyperplanes, npc {})",
                if v.special { "PASS" } else { "FAIL" },
                h.len(),
                v.npc
            )];
            lines.extend(v.report.describe(c, &h));
            let json = json!({ "verdict": v, "hyperplanes": h });
            Outcome::new(v.special, json, lines.join("\n"))
        }
    })
}

fn label(cmd: &LabelCmd) -> Result<Outcome, Error> {
    match cmd {
        LabelCmd::Search { frag, alphabet, limit } => {
            let frag = DomainFragment::from_json(&read(frag)?)?;
            if let Some(limit) = limit {
                let (all, exhausted) = enumerate_nice(&frag, *alphabet, *limit);
                let json = json!({
                    "labelings": all.iter().map(EdgeLabeling::to_json).collect::<Vec<_>>(),
                    "exhausted": exhausted,
                });
                let text = format!("{} labelings with {alphabet} symbols (search exhausted: {exhausted})", all.len());
                return Ok(Outcome::new(!all.is_empty(), json, text));
            }
            Ok(match search_nice(&frag, *alphabet) {
                SearchOutcome::Found(l) => {
                    let text = format!("FOUND nice labeling with {alphabet} symbols\n{}", l.to_json());
                    Outcome::new(true, l.to_json(), text)
                }
                SearchOutcome::Unsat(cert) => {
                    let text =
                        format!("UNSAT with {alphabet} symbols: {} classes, {} search nodes", cert.classes, cert.nodes);
                    Outcome::new(false, json!({ "unsat": cert }), text)
                }
            })
        }
        LabelCmd::Check { frag, labeling } => {
            let frag = DomainFragment::from_json(&read(frag)?)?;
            let l = EdgeLabeling::from_json(&read(labeling)?)?;
            let v = check_nice(&l, &frag)?;
            let text = match v.witness() {
                None => "nice: PASS".to_string(),
                Some(w) => format!("nice: FAIL two out-edges of {} carry label {}", frag.name(w.vertex), w.label),
            };
            Ok(Outcome::new(v.is_pass(), serde_json::to_value(&v)?, text))
        }
        LabelCmd::Trace { frag, labeling } => {
            let frag = DomainFragment::from_json(&read(frag)?)?;
            let l = EdgeLabeling::from_json(&read(labeling)?)?;
            let ef = events_from_filter(&frag)?;
            let r = check_trace(&l, &ef)?;
            let mut lines = vec![format!(
                "trace: {} ({} pairs, {} unresolved classes)",
                if r.violations.is_empty() { "PASS" } else { "FAIL" },
                r.checked_pairs,
                r.unresolved_classes
            )];
            for v in &r.violations {
                lines.push(format!(
                    "{}: events {} and {} labeled {} and {}",
                    v.axiom.name(),
                    v.events.0,
                    v.events.1,
                    v.labels.0,
                    v.labels.1
                ));
            }
            Ok(Outcome::new(r.violations.is_empty(), serde_json::to_value(&r)?, lines.join("\n")))
        }
        LabelCmd::Bridge { file, radius } => {
            let c = load_complex(file)?;
            let b = hyperplane_trace_bridge(&c, *radius)?;
            let axioms: Vec<&str> = b.axioms.iter().map(|a| a.name()).collect();
            let text = if axioms.is_empty() {
                format!("trace: PASS on {} fragments", b.fragments.len())
            } else {
                format!("trace: FAIL {}", axioms.join(" "))
            };
            Ok(Outcome::new(axioms.is_empty(), serde_json::to_value(&b)?, text))
        }
    }
}

fn tiles(cmd: &TilesCmd) -> Result<Outcome, Error> {
    match cmd {
        TilesCmd::Check { file } => {
            let t = parse_tiles(&read(file)?)?;
            let v = check_4way_deterministic(&t);
            let complete = corners_complete(&t);
            let json = json!({ "deterministic": v, "corners_complete": complete });
            let text = format!("{}\ncorners complete: {complete}", verdict_text("4-way deterministic", &v));
            Ok(Outcome::new(v.is_pass(), json, text))
        }
        TilesCmd::Patch { file, w, h } => {
            let t = parse_tiles(&read(file)?)?;
            if *w == 0 || *h == 0 {
                return Err(Error::Validation("patch dimensions must be positive".into()));
            }
            Ok(match tile_patch(&t, *w, *h, None) {
                Some(p) => Outcome::new(true, json!({ "tiling": p.names(&t) }), p.render(&t)),
                None => Outcome::new(false, json!({ "tiling": null }), format!("UNSAT: no {w}×{h} patch")),
            })
        }
        TilesCmd::Torus { file, a, b } => {
            let t = parse_tiles(&read(file)?)?;
            if *a == 0 || *b == 0 {
                return Err(Error::Validation("torus dimensions must be positive".into()));
            }
            Ok(match tile_torus(&t, *a, *b) {
                Some(p) => Outcome::new(true, json!({ "tiling": p.names(&t) }), p.render(&t)),
                None => {
                    Outcome::new(false, json!({ "tiling": null }), format!("UNSAT: no tiling of the {a}×{b} torus"))
                }
            })
        }
        TilesCmd::Probe { file, max_patch, max_period } => {
            let t = parse_tiles(&read(file)?)?;
            let r = aperiodicity_probe(&t, *max_patch, *max_period);
            let text = format!(
                "{:?}: patches tile up to {}×{}, {} of {} tori tile",
                r.verdict,
                r.largest_patch,
                r.largest_patch,
                r.tori.len(),
                r.tori_tried
            );
            Ok(Outcome::new(r.verdict == ProbeVerdict::AperiodicConsistent, serde_json::to_value(&r)?, text))
        }
    }
}

fn wise(cmd: &WiseCmd) -> Result<Outcome, Error> {
    match cmd {
        WiseCmd::BuildX => Ok(complex_outcome(&build_x())),
        WiseCmd::BuildW => Ok(complex_outcome(&build_w())),
        WiseCmd::Word { n, m } => {
            let w = row_word(*n, *m)?;
            Ok(Outcome::new(true, json!({ "n": n, "m": m, "word": w }), w))
        }
        WiseCmd::PeriodDoubling { n_max } => {
            if *n_max == 0 {
                return Err(Error::Validation("n_max must be at least 1".into()));
            }
            let r = period_doubling_check(*n_max)?;
            let mut lines: Vec<String> =
                r.levels.iter().map(|l| format!("n={} PASS {} distinct words", l.n, l.distinct)).collect();
            if let Some((n, f)) = &r.failure {
                lines.push(match f {
                    DoublingFailure::Collision { m1, m2, word } => format!("n={n} FAIL M({m1}) = M({m2}) = {word}"),
                    other => format!("n={n} FAIL {other:?}"),
                });
            }
            Ok(Outcome::new(r.is_pass(), serde_json::to_value(&r)?, lines.join("\n")))
        }
        WiseCmd::Drive { radius, depth, kmax, n, nmax } => {
            let cfg = DriveConfig {
                radius: *radius,
                depth: *depth,
                k_max: *kmax,
                n: *n,
                n_max: *nmax,
                ..DriveConfig::default()
            };
            let r = counterexample_drive(&cfg)?;
            let text = format!(
                "census: {} classes (bound {})\n\
                 degrees: 0-vertex {:?}, 1-vertex {:?}, 2-vertex {:?}, 3-vertex {:?}\n\
                 ♮-clique: {} (bound {}, config bound {})\n\
                 period doubling to {}: {}\n\
                 labelings: {} kept, per alphabet size {:?}\n\
                 obstructions: {} witnesses, {} with no filter isomorphism\n\
                 {}",
                r.census.classes,
                r.census.bound,
                r.degree_profile.zero_vertex,
                r.degree_profile.one_vertex,
                r.degree_profile.two_vertex,
                r.degree_profile.three_vertex,
                r.natural_clique_max.value,
                r.natural_clique_max.bound,
                r.natural_clique_max.config_bound,
                r.period_doubling.n_max,
                r.period_doubling.status,
                r.labelings.count,
                r.labelings.per_k,
                r.witness_count,
                r.obstructions.iter().filter(|o| o.iso_none).count(),
                if r.pass { "PASS" } else { "FAIL" }
            );
            Ok(Outcome::new(r.pass, serde_json::to_value(&r)?, text))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let body = match cli.format {
                Format::Json => serde_json::to_string_pretty(&out.json).expect("report serializes"),
                Format::Text => out.text,
                Format::Dot => match out.dot {
                    Some(d) => d,
                    None => {
                        eprintln!("error: this command has no dot output");
                        return ExitCode::from(2);
                    }
                },
            };
            // A closed pipe downstream is not an error of ours.
            let _ = writeln!(std::io::stdout().lock(), "{}", body.trim_end());
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
