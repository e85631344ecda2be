//! krforge: exact sl(n) cohomology of matched link diagrams.
//!
//! Exit codes: 0 success, 1 selftest failure; computation errors use the
//! per-category codes listed under `--help`.

use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kr_core::complex::{assemble, ModuleComplex};
use kr_core::diagram::{parse_diagram, parse_mpd, MatchedDiagram};
use kr_core::field::Field;
use kr_core::invariants::{report_from_complex, kr_classify};
use kr_core::parse::{parse_elem, parse_field, parse_potential};
use kr_core::poly::Poly;
use kr_core::potential::{sort_elems, Potential};
use kr_core::spectral::{compute_pages, poincare, PageTable, SpectralReport};
use kr_core::KrError;

const EXIT_CODE_HELP: &str = "Error exit codes:\n  \
    2 ParseError, 3 OddFraction, 4 NotBipartiteCertificate, 5 NotARoot,\n  \
    6 TooLarge, 7 OddDrop, 8 UnexpectedEinf, 9 InconsistentDiagram,\n  \
    10 NoMarkedEdge, 11 Inconsistent, 12 IllegalSite, 13 NotInvertible,\n  \
    14 BoundaryMismatch; 1 is a selftest failure.";

#[derive(Parser)]
#[command(name = "krforge", version, about = "Exact sl(n) link cohomology of matched diagrams", after_help = EXIT_CODE_HELP)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute page tables and invariants for one diagram and one potential
    Compute(ComputeArgs),
    /// Partition a batch of potentials by their page tables over a diagram
    Classify(ClassifyArgs),
    /// Run the built-in calibration suite
    Selftest,
}

#[derive(Args)]
struct DiagramArgs {
    /// Diagram expression: unknot, rational(p,q), pretzel(..),
    /// montesinos(p/q,..), suffix ! for mirror, infix # for connected sum
    #[arg(long)]
    diagram: Option<String>,
    /// Read the diagram from a matched-diagram file instead
    #[arg(long)]
    mpd: Option<PathBuf>,
    /// Refuse diagrams with more than this many slots
    #[arg(long)]
    max_slots: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Unreduced,
    Reduced,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Pages {
    Einf,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct ComputeArgs {
    #[command(flatten)]
    diagram: DiagramArgs,
    /// Defining polynomial of the Frobenius algebra k[x]/w
    #[arg(long, default_value = "x^2")]
    potential: String,
    /// Coefficient field: Q, Q[i], Q[x]/(p), F_p, ...
    #[arg(long, default_value = "Q")]
    field: String,
    /// Root of the potential for the reduced theory
    #[arg(long)]
    root: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Pages::Einf)]
    pages: Pages,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    diagram: DiagramArgs,
    /// Coefficient field
    #[arg(long, default_value = "Q")]
    field: String,
    /// Comma-separated list of potentials
    #[arg(long)]
    potentials: Option<String>,
    /// Generate all monic separable potentials of this degree ...
    #[arg(long)]
    degree: Option<usize>,
    /// ... with integer coefficients bounded by this in absolute value
    #[arg(long, default_value_t = 1)]
    coeff_bound: i64,
    /// Cap on the number of generated potentials
    #[arg(long)]
    limit: Option<usize>,
    /// Worker threads for the batch (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

fn load_diagram(a: &DiagramArgs) -> Result<MatchedDiagram, KrError> {
    let d = match (&a.diagram, &a.mpd) {
        (Some(expr), None) => parse_diagram(expr)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| KrError::Parse(format!("cannot read {}: {e}", path.display())))?;
            parse_mpd(&text)?
        }
        _ => {
            return Err(KrError::Parse(
                "exactly one of --diagram and --mpd is required".into(),
            ))
        }
    };
    if let Some(max) = a.max_slots {
        if d.slots.len() > max {
            return Err(KrError::TooLarge(d.slots.len(), max));
        }
    }
    Ok(d)
}

fn diagram_name(a: &DiagramArgs) -> String {
    match (&a.diagram, &a.mpd) {
        (Some(expr), _) => expr.clone(),
        (_, Some(path)) => path.display().to_string(),
        _ => String::new(),
    }
}

// ---- cache ----

type CachedDiffs = Vec<Vec<(usize, usize, Poly)>>;

fn cache_path(key: &str) -> Option<PathBuf> {
    let dir = std::env::var_os("KRFORGE_CACHE_DIR")?;
    let mut h = std::collections::hash_map::DefaultHasher::new();
    key.hash(&mut h);
    Some(PathBuf::from(dir).join(format!("krforge-{:016x}.json", h.finish())))
}

fn assemble_cached(d: &MatchedDiagram, pot: &Potential) -> Result<ModuleComplex, KrError> {
    let key = format!("{}|{}|{}", d.emit_mpd(), pot.display(), pot.field.name());
    let path = match cache_path(&key) {
        Some(p) => p,
        None => return assemble(d, pot),
    };
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
            if v["key"] == json!(key.clone()) {
                let tmin = v["tmin"].as_i64().unwrap_or(0) as i32;
                let gens: Option<Vec<Vec<i32>>> =
                    serde_json::from_value(v["gens"].clone()).ok();
                let diffs: Option<CachedDiffs> =
                    serde_json::from_value(v["diffs"].clone()).ok();
                if let (Some(gens), Some(diffs)) = (gens, diffs) {
                    log::debug!("cache hit: {}", path.display());
                    return Ok(ModuleComplex { pot: pot.clone(), tmin, gens, diffs });
                }
            }
        }
    }
    let mc = assemble(d, pot)?;
    let v = json!({
        "key": key,
        "tmin": mc.tmin,
        "gens": mc.gens,
        "diffs": serde_json::to_value(&mc.diffs).expect("complex serializes"),
    });
    if let Some(parent) = path.parent() {
        let _ = std::fs::create_dir_all(parent);
    }
    if let Ok(mut f) = std::fs::File::create(&path) {
        let _ = f.write_all(v.to_string().as_bytes());
    }
    Ok(mc)
}

// ---- rendering ----

/// Rows are quantum degrees (descending), columns homological degrees,
/// mirroring the usual printed tables.
fn render_table(p: &PageTable) -> String {
    if p.cells.is_empty() {
        return "  (empty)\n".to_string();
    }
    let ts: Vec<i32> = {
        let lo = p.cells.keys().map(|&(t, _)| t).min().unwrap();
        let hi = p.cells.keys().map(|&(t, _)| t).max().unwrap();
        (lo..=hi).collect()
    };
    let mut qs: Vec<i32> = p.cells.keys().map(|&(_, q)| q).collect();
    qs.sort_unstable();
    qs.dedup();
    qs.reverse();
    let w = ts
        .iter()
        .map(|t| t.to_string().len())
        .chain(p.cells.values().map(|d| d.to_string().len()))
        .max()
        .unwrap()
        .max(2);
    let qw = qs.iter().map(|q| q.to_string().len()).max().unwrap().max(1);
    let mut out = String::new();
    out.push_str(&format!("  {:>qw$} \\ t", "q"));
    for t in &ts {
        out.push_str(&format!(" {:>w$}", t));
    }
    out.push('\n');
    for q in &qs {
        out.push_str(&format!("  {:>qw$}    ", q));
        for t in &ts {
            match p.cells.get(&(*t, *q)) {
                Some(d) => out.push_str(&format!(" {:>w$}", d)),
                None => out.push_str(&format!(" {:>w$}", ".")),
            }
        }
        out.push('\n');
    }
    out
}

fn pages_to_show<'a>(r: &'a SpectralReport, pages: Pages) -> Vec<&'a PageTable> {
    match pages {
        Pages::All => r.pages.iter().collect(),
        Pages::Einf => vec![r.einf()],
    }
}

fn print_report_table(label: &str, r: &SpectralReport, pages: Pages) {
    println!("{label}:");
    for p in pages_to_show(r, pages) {
        let tag = if std::ptr::eq(p, r.einf()) { " (limit)" } else { "" };
        println!("page {}{}:", p.page, tag);
        print!("{}", render_table(p));
    }
    println!("poincare (limit): {}", poincare(r.einf()));
    println!("significant pages: {:?}", r.significant_pages());
}

fn report_json(r: &SpectralReport, pages: Pages) -> serde_json::Value {
    json!({
        "pages": pages_to_show(r, pages).iter().map(|p| p.to_json()).collect::<Vec<_>>(),
        "poincare": poincare(r.einf()),
        "significant_pages": r.significant_pages(),
    })
}

// ---- commands ----

fn cmd_compute(a: &ComputeArgs) -> Result<(), KrError> {
    let field = parse_field(&a.field)?;
    let pot = parse_potential(&a.potential, &field)?;
    let d = load_diagram(&a.diagram)?;
    if a.mode == Mode::Reduced && a.root.is_none() {
        return Err(KrError::Parse("--root is required with --mode reduced".into()));
    }
    let mc = assemble_cached(&d, &pot)?;
    let unreduced = match a.mode {
        Mode::Unreduced | Mode::Both => Some(compute_pages(&mc.unreduced())?),
        Mode::Reduced => None,
    };
    let mut reduced: Vec<(String, SpectralReport)> = Vec::new();
    if a.mode != Mode::Unreduced {
        let roots: Vec<kr_core::field::FElem> = match &a.root {
            Some(text) => vec![parse_elem(text, &field)?],
            None => {
                let mut rs = pot.roots.clone();
                sort_elems(&mut rs);
                rs
            }
        };
        for root in &roots {
            let r = compute_pages(&mc.reduced(root)?)?;
            reduced.push((field.fmt_elem(root), r));
        }
    }
    let invariants = if a.mode != Mode::Reduced {
        report_from_complex(&mc).ok()
    } else {
        None
    };
    match a.format {
        Format::Table => {
            println!("diagram: {}", diagram_name(&a.diagram));
            println!("potential: {}", pot.display());
            println!("field: {}", field.name());
            if let Some(r) = &unreduced {
                println!();
                print_report_table("unreduced", r, a.pages);
            }
            for (root, r) in &reduced {
                println!();
                print_report_table(&format!("reduced at root {root}"), r, a.pages);
            }
            if let Some(inv) = &invariants {
                println!();
                println!("invariants:");
                println!("  j: {:?}", inv.j);
                match &inv.s_n {
                    Some(s) => println!("  s_n: {s}"),
                    None => println!("  s_n: n/a"),
                }
                for (root, s) in &inv.s_tilde {
                    println!("  s_tilde at {root}: {s}");
                }
                println!("  s_quasi: {}", inv.s_quasi);
                println!("  genus bound: {}", inv.genus_bound);
            }
        }
        Format::Json => {
            let mut red = serde_json::Map::new();
            for (root, r) in &reduced {
                red.insert(root.clone(), report_json(r, a.pages));
            }
            let v = json!({
                "diagram": diagram_name(&a.diagram),
                "potential": pot.display(),
                "field": field.name(),
                "unreduced": unreduced.as_ref().map(|r| report_json(r, a.pages)),
                "reduced": red,
                "invariants": invariants.as_ref().map(|i| i.to_json()),
            });
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
        }
    }
    Ok(())
}

fn cmd_classify(a: &ClassifyArgs) -> Result<(), KrError> {
    let field = parse_field(&a.field)?;
    let d = load_diagram(&a.diagram)?;
    if let Some(j) = a.jobs {
        // the pool reads this before first use
        std::env::set_var("RAYON_NUM_THREADS", j.to_string());
    }
    let pots: Vec<Potential> = match (&a.potentials, a.degree) {
        (Some(list), _) => list
            .split(',')
            .map(|w| parse_potential(w.trim(), &field))
            .collect::<Result<_, _>>()?,
        (None, Some(n)) => kr_core::invariants::small_potentials(&field, n, a.coeff_bound, a.limit),
        (None, None) => {
            return Err(KrError::Parse(
                "either --potentials or --degree is required".into(),
            ))
        }
    };
    if pots.is_empty() {
        return Err(KrError::Parse("empty potential batch".into()));
    }
    let classes = kr_classify(&d, &pots)?;
    match a.format {
        Format::Table => {
            println!("diagram: {}", diagram_name(&a.diagram));
            println!("potentials: {}", pots.len());
            println!("classes: {}", classes.len());
            for (i, cl) in classes.iter().enumerate() {
                let members: Vec<String> =
                    cl.iter().map(|&k| pots[k].display()).collect();
                println!("class {}: {} member(s): {}", i + 1, cl.len(), members.join(", "));
            }
        }
        Format::Json => {
            let v = json!({
                "diagram": diagram_name(&a.diagram),
                "n_potentials": pots.len(),
                "classes": classes.iter().map(|cl| json!({
                    "count": cl.len(),
                    "members": cl.iter().map(|&k| pots[k].display()).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
        }
    }
    Ok(())
}

fn cmd_selftest() -> i32 {
    let mut failures = 0;
    let mut check = |name: &str, run: &dyn Fn() -> Result<bool, KrError>| match run() {
        Ok(true) => println!("PASS {name}"),
        Ok(false) => {
            println!("FAIL {name}");
            failures += 1;
        }
        Err(e) => {
            println!("FAIL {name}: {e}");
            failures += 1;
        }
    };
    check("unknot normalization", &|| {
        let d = MatchedDiagram::unknot();
        for w in ["x^2", "x^2-1", "x^3", "x^3-x", "x^5-x"] {
            let pot = parse_potential(w, &Field::Q)?;
            let n = pot.n as i32;
            let mc = assemble(&d, &pot)?;
            let un = compute_pages(&mc.unreduced())?;
            let expect: BTreeMap<(i32, i32), usize> =
                (0..n).map(|j| ((0, 2 * j + 1 - n), 1)).collect();
            if un.einf().cells != expect {
                return Ok(false);
            }
            for root in &pot.roots {
                let red = compute_pages(&mc.reduced(root)?)?;
                if red.einf().cells != BTreeMap::from([((0, 0), 1)]) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    });
    check("trefoil chirality (s_2 = -1)", &|| {
        let d = parse_diagram("rational(3,1)")?;
        let pot = parse_potential("x^2-1", &Field::Q)?;
        let rep = kr_core::invariants::invariant_report(&d, &pot)?;
        Ok(rep.s_n == Some((-1).into()))
    });
    check("dual basis pairing", &|| {
        let pot = parse_potential("x^3-x", &Field::Q)?;
        let f = &pot.field;
        for i in 0..pot.n {
            for j in 0..pot.n {
                let xi = Poly::monomial(f, f.one(), i);
                let tr = pot.trace(&pot.mul_mod(&xi, &pot.dual_basis()[j].clone()));
                let expect = if i == j { f.one() } else { f.zero() };
                if tr != expect {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    });
    check("engine agrees with brute oracle", &|| {
        let d = parse_diagram("rational(3,1)")?;
        let pot = parse_potential("x^2", &Field::Q)?;
        let oracle = kr_core::brute::brute_graded(&d, &pot)?;
        let mc = assemble(&d, &pot)?;
        let engine = compute_pages(&mc.unreduced())?;
        Ok(engine.pages[0].cells == oracle.cells)
    });
    if failures == 0 {
        println!("selftest: all checks passed");
        0
    } else {
        println!("selftest: {failures} check(s) failed");
        1
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Compute(a) => cmd_compute(a),
        Cmd::Classify(a) => cmd_classify(a),
        Cmd::Selftest => std::process::exit(cmd_selftest()),
    };
    if let Err(e) = result {
        eprintln!("error[{}]: {e}", e.category());
        std::process::exit(e.exit_code());
    }
}
