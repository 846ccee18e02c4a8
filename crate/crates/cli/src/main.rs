//! `epistemia` command-line front end.

mod repl;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use epistemia::acyclicity::{check_2acyclic_char, find_coset_cycle};
use epistemia::bisim::{check_covering, coarsest_bisimulation, pair_levels, Mode};
use epistemia::cayley::{build_covering_capped, check_richness, richness_profile, tree_unfold_capped, CayleyStructure, EdgeSet, DEFAULT_GROUP_CAP};
use epistemia::corpus::{gen_corpus, CorpusSpec};
use epistemia::efgame::{fo_ef_game, upgrade_experiment, Gates};
use epistemia::formula::{extension, parse};
use epistemia::freeness::{brute_force_witness, check_mk_free, find_free_witness, FreenessContext};
use epistemia::hypergraph::dual;
use epistemia::io::{read_structure, write_text, HypergraphFile, StructureFile};
use epistemia::kripke::{CKStructure, KripkeError, ValidateOptions, World};
use epistemia::suite::{run_suite, SuiteSpec};
use epistemia::Coalition;
use serde_json::{json, Value};
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "epistemia", version, about = "Epistemic logic with common knowledge over finite S5 structures")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that a structure file describes equivalence relations.
    Validate {
        #[arg(long = "in")]
        input: String,
        /// Require explicit loops for every world.
        #[arg(long)]
        strict: bool,
        /// Close non-transitive input instead of reporting it.
        #[arg(long)]
        close: bool,
    },
    /// Print the classes of every coalition relation.
    Expand {
        #[arg(long = "in")]
        input: String,
        /// Only this coalition (comma-separated agent names, empty for none).
        #[arg(long)]
        coalition: Option<String>,
    },
    /// Model-check a formula.
    Mc {
        #[arg(long = "in")]
        input: String,
        #[arg(long, conflicts_with = "formula_file")]
        formula: Option<String>,
        #[arg(long)]
        formula_file: Option<String>,
        /// Report truth at this world only.
        #[arg(long)]
        world: Option<World>,
    },
    /// Coarsest (or bounded) bisimulation between two structures.
    Bisim {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        /// Number of rounds; unbounded if absent.
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value = "ck")]
        mode: String,
        /// Pointed pair `w,v`.
        #[arg(long)]
        worlds: Option<String>,
    },
    /// Bisimilar covering by a finite Cayley structure.
    Cover {
        #[command(flatten)]
        group: GroupArgs,
    },
    /// Truncated free-group unfolding.
    Unfold {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        depth: usize,
    },
    #[command(subcommand)]
    Analyze(Analyze),
    /// Dual hypergraph of a structure.
    Dual {
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Free witness for a pointed set.
    Witness {
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        v: World,
        /// Comma-separated worlds.
        #[arg(long)]
        zs: String,
        #[arg(long)]
        z0: World,
        /// Target coalition, comma-separated agent names.
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 9)]
        acyclicity_cap: usize,
    },
    /// Upgrade bounded bisimilarity to first-order equivalence.
    Upgrade {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        report: Option<String>,
        #[arg(long, default_value_t = 3)]
        min_acyclicity: usize,
        #[arg(long, default_value_t = 2)]
        min_richness: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustive first-order Ehrenfeucht–Fraïssé game.
    EfOracle {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        q: usize,
    },
    /// Generate a seeded corpus of structure files.
    Gen {
        /// Corpus spec (JSON); built-in default if absent.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the acceptance suite.
    Suite {
        /// Suite spec (JSON); built-in default if absent.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        junit: Option<String>,
        #[arg(long)]
        report: Option<String>,
        /// Comma-separated criterion ids (replaces the list given with --spec).
        #[arg(long)]
        criteria: Option<String>,
    },
    /// Play Spoiler against the engine's Duplicator in the bisimulation game.
    Repl {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        #[arg(long)]
        transcript: Option<String>,
    },
}

#[derive(Subcommand)]
enum Analyze {
    /// Search for coset cycles up to length n.
    Acyclicity {
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        n: usize,
    },
    /// Least multiplicity of a bisimulation type within a class.
    Richness {
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        k: Option<usize>,
        /// Also count classes of the empty coalition.
        #[arg(long)]
        include_empty: bool,
    },
    /// Exhaustive (m,k)-freeness.
    Freeness {
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 9)]
        acyclicity_cap: usize,
    },
}

#[derive(Args)]
struct GroupArgs {
    #[arg(long = "in")]
    input: String,
    #[arg(long, default_value_t = 0)]
    base: World,
    #[arg(long, default_value = "spanning")]
    edges: String,
    #[arg(long, default_value_t = 0)]
    copies: usize,
    #[arg(long, default_value_t = DEFAULT_GROUP_CAP)]
    cap: usize,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    left: String,
    #[arg(long)]
    right: String,
    /// Pointed pair `w,v`.
    #[arg(long, default_value = "0,0")]
    worlds: String,
}

fn load(path: &str) -> Result<CKStructure> {
    read_structure(path)?.to_ck().with_context(|| format!("loading {path}"))
}

fn worlds_list(text: &str) -> Result<Vec<World>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| anyhow!("bad world id '{s}'")))
        .collect()
}

fn pair(text: &str) -> Result<(World, World)> {
    match worlds_list(text)?.as_slice() {
        [w, v] => Ok((*w, *v)),
        _ => bail!("expected two worlds 'w,v', got '{text}'"),
    }
}

pub(crate) fn coalition(ck: &CKStructure, text: &str) -> Result<Coalition> {
    let mut c = Coalition::EMPTY;
    for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let a = ck.base().agent_index(name).ok_or_else(|| anyhow!("unknown agent '{name}'"))?;
        c = c.with(a);
    }
    Ok(c)
}

fn check_world(ck: &CKStructure, w: World) -> Result<()> {
    if w >= ck.n() {
        bail!("world {w} out of range (n = {})", ck.n());
    }
    Ok(())
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("value serialises"));
}

fn emit(out: &Option<String>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(write_text(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn validate(input: &str, strict: bool, close: bool) -> Result<ExitCode> {
    let file = read_structure(input)?;
    match file.to_s5(ValidateOptions { strict, close }) {
        Ok(m) => {
            print_json(&json!({"valid": true, "worlds": m.n(), "agents": m.agents(), "props": m.props()}));
            Ok(ExitCode::SUCCESS)
        }
        Err(epistemia::io::IoError::Kripke(KripkeError::NotEquivalence(rep))) => {
            let v: Vec<String> = rep.violations.iter().map(|v| v.to_string()).collect();
            print_json(&json!({"valid": false, "violations": v}));
            Ok(ExitCode::FAILURE)
        }
        Err(e) => {
            print_json(&json!({"valid": false, "error": e.to_string()}));
            Ok(ExitCode::FAILURE)
        }
    }
}

fn expand(input: &str, only: Option<&str>) -> Result<()> {
    let ck = load(input)?;
    let agents = ck.agents().to_vec();
    let selected: Vec<Coalition> = match only {
        Some(t) => vec![coalition(&ck, t)?],
        None => ck.coalitions().collect(),
    };
    let rows: Vec<Value> = selected
        .iter()
        .map(|&a| json!({"coalition": a.names(&agents), "classes": ck.partition(a).blocks()}))
        .collect();
    print_json(&json!({"worlds": ck.n(), "relations": rows}));
    Ok(())
}

fn mc(input: &str, formula: Option<String>, formula_file: Option<String>, world: Option<World>) -> Result<()> {
    let ck = load(input)?;
    let text = match (formula, formula_file) {
        (Some(t), _) => t,
        (None, Some(p)) => std::fs::read_to_string(&p).with_context(|| format!("reading {p}"))?,
        (None, None) => bail!("give --formula or --formula-file"),
    };
    let f = parse(text.trim(), ck.agents(), ck.base().props())?;
    let ext = extension(&ck, &f);
    let shown = f.display(ck.agents(), ck.base().props()).to_string();
    match world {
        Some(w) => {
            check_world(&ck, w)?;
            print_json(&json!({"formula": shown, "world": w, "holds": ext.binary_search(&w).is_ok()}));
        }
        None => print_json(&json!({"formula": shown, "extension": ext})),
    }
    Ok(())
}

fn bisim(left: &str, right: &str, l: Option<usize>, mode: &str, worlds: Option<String>) -> Result<()> {
    let (m, n) = (load(left)?, load(right)?);
    let mode = match mode {
        "s5" => Mode::S5,
        "ck" => Mode::CK,
        _ => bail!("unknown mode '{mode}' (expected s5 or ck)"),
    };
    let block: Vec<u32> = match l {
        Some(l) => pair_levels(&m, &n, l, mode)?.pop().expect("level 0 is always present"),
        None => coarsest_bisimulation(&m, &n, mode)?.block,
    };
    let depth = l.map_or("unbounded".to_string(), |l| l.to_string());
    if let Some(text) = worlds {
        let (w, v) = pair(&text)?;
        check_world(&m, w)?;
        check_world(&n, v)?;
        let same = block[w] == block[m.n() + v];
        println!("VERDICT {} ({w},{v}) depth {depth}", if same { "bisimilar" } else { "not-bisimilar" });
    } else {
        let cover = (0..m.n()).all(|w| block[m.n()..].contains(&block[w])) && block[m.n()..].iter().all(|b| block[..m.n()].contains(b));
        println!("VERDICT {} depth {depth}", if cover { "every-world-matched" } else { "unmatched-worlds" });
    }
    let nb = block.iter().max().map_or(0, |&b| b as usize + 1);
    println!("block\tleft\tright");
    for b in 0..nb as u32 {
        let side = |lo: usize, hi: usize, off: usize| -> String {
            (lo..hi).filter(|&i| block[i] == b).map(|i| (i - off).to_string()).collect::<Vec<_>>().join(",")
        };
        println!("{b}\t{}\t{}", side(0, m.n(), 0), side(m.n(), block.len(), m.n()));
    }
    Ok(())
}

fn group(g: &GroupArgs, depth: Option<usize>) -> Result<()> {
    let s5 = read_structure(&g.input)?.to_s5(ValidateOptions::default())?;
    let edges: EdgeSet = g.edges.parse().map_err(|e: String| anyhow!(e))?;
    let c: CayleyStructure = match depth {
        None => build_covering_capped(&s5, g.base, edges, g.copies, g.cap)?,
        Some(d) => tree_unfold_capped(&s5, g.base, d, edges, g.copies, g.cap)?,
    };
    if depth.is_none() {
        check_covering(&c.covering).context("covering check")?;
    }
    eprintln!("{} worlds, {} generators", c.n(), c.generators.len());
    emit(&g.out, &StructureFile::from_cayley(&c).to_json())
}

fn analyze(a: Analyze) -> Result<()> {
    match a {
        Analyze::Acyclicity { input, n } => {
            let ck = load(&input)?;
            let agents = ck.agents().to_vec();
            let cycle = find_coset_cycle(&ck, n);
            let witness = cycle.map(|c| c.steps.iter().map(|&(w, a)| json!({"world": w, "coalition": a.names(&agents)})).collect::<Vec<_>>());
            print_json(&json!({"n": n, "acyclic": witness.is_none(), "two_acyclic_identity": check_2acyclic_char(&ck), "witness": witness}));
        }
        Analyze::Richness { input, k, include_empty } => {
            let ck = load(&input)?;
            let agents = ck.agents().to_vec();
            let worst = richness_profile(&ck, include_empty);
            let mut out = json!({
                "least_multiplicity": worst.as_ref().map(|r| r.count),
                "class": worst.as_ref().map(|r| json!({"coalition": r.alpha.names(&agents), "world": r.class_rep, "type": r.bisim_block})),
            });
            if let Some(k) = k {
                out["k"] = json!(k);
                out["k_rich"] = json!(check_richness(&ck, k, include_empty).is_ok());
            }
            print_json(&out);
        }
        Analyze::Freeness { input, m, k, acyclicity_cap } => {
            let ck = load(&input)?;
            let ctx = FreenessContext::new(&ck, acyclicity_cap)?;
            let report = check_mk_free(&ctx, m, k);
            let mut v = serde_json::to_value(&report)?;
            v["acyclicity"] = json!(ctx.acyclicity);
            print_json(&v);
        }
    }
    Ok(())
}

fn witness(input: &str, v: World, zs: &str, z0: World, gamma: &str, m: usize, cap: usize) -> Result<()> {
    let ck = load(input)?;
    let mut zs = worlds_list(zs)?;
    if !zs.contains(&z0) {
        zs.push(z0);
    }
    for &w in zs.iter().chain([&v]) {
        check_world(&ck, w)?;
    }
    let gamma = coalition(&ck, gamma)?;
    let ctx = FreenessContext::new(&ck, cap)?;
    let out = match find_free_witness(&ctx, v, &zs, z0, gamma, m) {
        Ok(w) => json!({"witness": w.v_star, "method": "constructive", "transcript": w}),
        Err(e) => {
            let fb = brute_force_witness(&ctx, v, &zs, z0, gamma, m);
            json!({"witness": fb, "method": "exhaustive", "procedure_error": e.to_string()})
        }
    };
    print_json(&out);
    Ok(())
}

fn upgrade(p: &PairArgs, q: usize, report: Option<String>, gates: Gates) -> Result<()> {
    let (m, n) = (load(&p.left)?, load(&p.right)?);
    let (w, v) = pair(&p.worlds)?;
    let r = upgrade_experiment(&m, w, &n, v, q, &gates)?;
    let full = serde_json::to_value(&r)?;
    if let Some(path) = report {
        let mut text = serde_json::to_string_pretty(&json!({"gates": gates, "report": full}))?;
        text.push('\n');
        write_text(&path, &text)?;
    }
    print_json(&json!({
        "q": q,
        "ell": r.schedules.ell0(),
        "f_hat": r.schedules.f_hat,
        "l_bisimilar": r.l_bisimilar,
        "fo_equivalent": r.oracle,
        "replay": r.replay.as_ref().map(|x| json!({"lines": x.lines, "survived": x.survived, "fallback": x.fallback})),
        "out_of_warranty": r.out_of_warranty,
        "confirmed": r.confirmed(),
        "seed": gates.seed,
    }));
    Ok(())
}

fn ef_oracle(p: &PairArgs, q: usize) -> Result<()> {
    let (m, n) = (load(&p.left)?, load(&p.right)?);
    let (w, v) = pair(&p.worlds)?;
    check_world(&m, w)?;
    check_world(&n, v)?;
    let out = fo_ef_game(&m, w, &n, v, q);
    let mut val = serde_json::to_value(&out)?;
    val["q"] = json!(q);
    print_json(&val);
    Ok(())
}

fn gen(spec: Option<String>, out: PathBuf) -> Result<()> {
    let spec: CorpusSpec = match spec {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(&p).with_context(|| format!("reading {p}"))?).context("corpus spec")?,
        None => CorpusSpec::default(),
    };
    let corpus = gen_corpus(&spec)?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut seen = std::collections::HashSet::new();
    for e in &corpus.entries {
        if !seen.insert(e.name.clone()) {
            bail!("duplicate corpus entry name {}", e.name);
        }
        let path = out.join(format!("{}.json", e.name));
        write_text(&path.to_string_lossy(), &e.to_file().to_json())?;
    }
    print_json(&json!({"seed": spec.seed, "written": corpus.entries.len(), "skipped": corpus.skipped}));
    Ok(())
}

fn suite(spec: Option<String>, junit: Option<String>, report: Option<String>, criteria: Option<String>) -> Result<ExitCode> {
    let mut spec = match spec {
        Some(p) => SuiteSpec::parse(&std::fs::read_to_string(&p).with_context(|| format!("reading {p}"))?)?,
        None => SuiteSpec::default(),
    };
    if let Some(c) = criteria {
        spec.criteria = worlds_list(&c)?;
    }
    let r = run_suite(&spec)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    for c in &r.criteria {
        println!("[{}] C{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.title, c.summary);
    }
    println!("seed {}: {}", r.seed, if r.passed { "all passed" } else { "failures" });
    if let Some(p) = junit {
        write_text(&p, &r.to_junit())?;
    }
    if let Some(p) = report {
        write_text(&p, &r.to_json())?;
    }
    Ok(if r.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn set_threads() -> Result<()> {
    if let Ok(v) = std::env::var("EPISTEMIA_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| anyhow!("EPISTEMIA_THREADS must be a positive integer"))?;
        if n == 0 {
            bail!("EPISTEMIA_THREADS must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    set_threads()?;
    match cli.cmd {
        Cmd::Validate { input, strict, close } => return validate(&input, strict, close),
        Cmd::Expand { input, coalition } => expand(&input, coalition.as_deref())?,
        Cmd::Mc { input, formula, formula_file, world } => mc(&input, formula, formula_file, world)?,
        Cmd::Bisim { left, right, l, mode, worlds } => bisim(&left, &right, l, &mode, worlds)?,
        Cmd::Cover { group: g } => group(&g, None)?,
        Cmd::Unfold { group: g, depth } => group(&g, Some(depth))?,
        Cmd::Analyze(a) => analyze(a)?,
        Cmd::Dual { input, out } => {
            let ck = load(&input)?;
            let d = dual(&ck);
            let mut text = serde_json::to_string(&HypergraphFile::from_dual(&d, &ck))?;
            text.push('\n');
            emit(&out, &text)?;
        }
        Cmd::Witness { input, v, zs, z0, gamma, m, acyclicity_cap } => witness(&input, v, &zs, z0, &gamma, m, acyclicity_cap)?,
        Cmd::Upgrade { pair: p, q, report, min_acyclicity, min_richness, seed } => {
            let gates = Gates {
                min_acyclicity,
                min_richness,
                seed,
                ..Gates::default()
            };
            upgrade(&p, q, report, gates)?
        }
        Cmd::EfOracle { pair: p, q } => ef_oracle(&p, q)?,
        Cmd::Gen { spec, out } => gen(spec, out)?,
        Cmd::Suite { spec, junit, report, criteria } => return suite(spec, junit, report, criteria),
        Cmd::Repl { pair: p, rounds, transcript } => {
            let (m, n) = (load(&p.left)?, load(&p.right)?);
            let (w, v) = pair(&p.worlds)?;
            check_world(&m, w)?;
            check_world(&n, v)?;
            let stdin = io::stdin();
            let mut lines = Vec::new();
            repl::play(&m, &n, w, v, rounds, &mut stdin.lock() as &mut dyn BufRead, &mut io::stdout(), &mut lines)?;
            if let Some(path) = transcript {
                write_text(&path, &lines.iter().map(|l| format!("{l}\n")).collect::<String>())?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e:#}");
            ExitCode::from(2)
        }
    }
}
