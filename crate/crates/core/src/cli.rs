//! Command-line front end. JSON is canonical; text output is rendered from it.

use crate::chevalley::verify_normal;
use crate::crosssection::SliceGroup;
use crate::error::{Error, Result};
use crate::quotient;
use crate::rootsys::{build_root_system, weyl_from_word, Family, RootSystem, SimpleType};
use crate::slicegeom::audit_plan;
use crate::spectral::{build_plan, BlockOrder, SlicePlan};
use crate::subregular::{subregular_data, subregular_plan, verify_subregular};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "slodowy", version, about = "Exact cross-sections N_s Z s^-1 of conjugacy classes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the slice plan of a Weyl group element and dump it.
    Analyze(Common),
    /// Seeded round trips through the conjugation map and its inverse.
    Factorize(Common),
    /// Check the subregular catalog (one type, or every type up to --max-rank).
    VerifySubregular(Common),
    /// Jacobian-rank scan of the characteristic-polynomial map on the A_r subregular slice.
    ProbeQuotient(Common),
    /// Run the invariant suite on every type up to --max-rank.
    Selftest(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Family letter A-G (a rank suffix such as G2 is accepted).
    #[arg(long = "type")]
    pub ty: Option<String>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Comma-separated 1-based indices into the root table, or "subregular".
    #[arg(long)]
    pub word: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Numerator/denominator bound for sampled rational parameters.
    #[arg(long, default_value_t = 3)]
    pub bound: i64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub max_rank: usize,
}

pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

fn parse_type(c: &Common) -> Result<Option<SimpleType>> {
    let Some(t) = &c.ty else {
        return match c.rank {
            Some(_) => Err(Error::Usage("--rank given without --type".into())),
            None => Ok(None),
        };
    };
    let mut chars = t.trim().chars();
    let fam = chars
        .next()
        .and_then(|ch| Family::parse(&ch.to_string()))
        .ok_or_else(|| Error::Usage(format!("unknown type {t:?}")))?;
    let suffix: String = chars.collect();
    let rank = match (suffix.is_empty(), c.rank) {
        (true, Some(r)) => r,
        (true, None) => return Err(Error::Usage("--rank is required".into())),
        (false, r) => {
            let s: usize = suffix.parse().map_err(|_| Error::Usage(format!("bad type {t:?}")))?;
            if r.is_some_and(|r| r != s) {
                return Err(Error::Usage(format!("--type {t} disagrees with --rank")));
            }
            s
        }
    };
    SimpleType::new(fam, rank).map(Some).map_err(|e| Error::Usage(e.to_string()))
}

fn need_type(c: &Common) -> Result<SimpleType> {
    parse_type(c)?.ok_or_else(|| Error::Usage("--type and --rank are required".into()))
}

#[derive(Clone, Debug)]
pub enum WordSpec {
    Subregular,
    /// 0-based root indices.
    Roots(Vec<usize>),
}

pub fn parse_word(spec: &str, rs: &RootSystem) -> Result<WordSpec> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("subregular") {
        return Ok(WordSpec::Subregular);
    }
    if spec.is_empty() || spec == "e" {
        return Ok(WordSpec::Roots(vec![]));
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let k: usize = part.trim().parse().map_err(|_| Error::Usage(format!("bad word entry {part:?}")))?;
        if k == 0 || k > rs.num_roots() {
            return Err(Error::Usage(format!("root index {k} outside 1..{}", rs.num_roots())));
        }
        out.push(k - 1);
    }
    Ok(WordSpec::Roots(out))
}

fn word_label(w: &WordSpec) -> String {
    match w {
        WordSpec::Subregular => "subregular".into(),
        WordSpec::Roots(r) => r.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(","),
    }
}

fn plan_for(ty: SimpleType, w: &WordSpec, seed: u64) -> Result<SlicePlan> {
    match w {
        WordSpec::Subregular => subregular_plan(ty, seed).map(|(_, p)| p),
        WordSpec::Roots(r) => {
            let rs = build_root_system(ty)?;
            build_plan(&rs, &weyl_from_word(&rs, r), &BlockOrder::Default, seed)
        }
    }
}

fn random_word(rng: &mut ChaCha8Rng, rank: usize) -> WordSpec {
    let len = rng.gen_range(0..=2 * rank + 2);
    WordSpec::Roots((0..len).map(|_| rng.gen_range(0..rank)).collect())
}

fn check(suite: &str, ty: SimpleType, word: &str, seed: u64, failures: Vec<String>) -> Value {
    json!({
        "suite": suite, "type": ty.to_string(), "word": word, "seed": seed,
        "pass": failures.is_empty(), "failures": failures,
    })
}

fn analyze(c: &Common) -> Result<Outcome> {
    let ty = need_type(c)?;
    let rs = build_root_system(ty)?;
    let w = parse_word(c.word.as_deref().unwrap_or(""), &rs)?;
    let plan = plan_for(ty, &w, c.seed)?;
    let audit = audit_plan(&plan);
    let mut report = plan.to_json()?;
    report["audit"] = json!(audit);
    Ok(Outcome { report, pass: audit.is_empty() })
}

/// Round trips on one plan; returns per-sample records and failure messages.
fn round_trips(plan: &SlicePlan, seed: u64, samples: usize, bound: i64, keep_results: bool) -> Result<(Vec<Value>, Vec<String>)> {
    let sg = SliceGroup::new(plan)?;
    let mut recs = Vec::new();
    let mut bad = Vec::new();
    let (ok, msgs, _) = sg.decomposition_check();
    if !ok {
        bad.extend(msgs);
    }
    if let Err(e) = verify_normal(&sg.ch, plan, &sg.s) {
        bad.push(e.to_string());
    }
    for i in 0..samples {
        let ps = seed.wrapping_add(i as u64);
        let pt = sg.sample_slice_point(ps, bound)?;
        let n = sg.sample_n(ps, bound);
        let rank = sg.transversality_rank(&pt);
        if rank != sg.dim() {
            bad.push(format!("sample {i}: transversality rank {rank} < {}", sg.dim()));
        }
        let mut rec = json!({"sample": i, "point_seed": ps, "transversality_rank": rank, "dim_g": sg.dim()});
        match sg.factorize(&sg.forward(&n, &pt)) {
            Ok(fr) => {
                let same = fr.n.matrix == n.matrix && fr.ns.matrix == pt.ns.matrix && fr.z.matrix == pt.z.matrix;
                if !same {
                    bad.push(format!("sample {i}: factorization differs from the sampled (n, n_s, z)"));
                }
                rec["round_trip"] = json!(same);
                if keep_results {
                    rec["result"] = serde_json::to_value(fr.to_json()).expect("serializable");
                }
            }
            Err(e) => {
                bad.push(format!("sample {i}: {e}"));
                rec["round_trip"] = json!(false);
                rec["error"] = json!(e.to_string());
            }
        }
        recs.push(rec);
    }
    Ok((recs, bad))
}

fn factorize(c: &Common) -> Result<Outcome> {
    let ty = need_type(c)?;
    let rs = build_root_system(ty)?;
    let w = parse_word(c.word.as_deref().unwrap_or("subregular"), &rs)?;
    let plan = plan_for(ty, &w, c.seed)?;
    let (recs, bad) = round_trips(&plan, c.seed, c.samples.unwrap_or(5), c.bound, true)?;
    let pass = bad.is_empty();
    let report = json!({
        "type": ty.to_string(), "word": word_label(&w), "seed": c.seed,
        "samples": recs, "failures": bad, "pass": pass,
    });
    Ok(Outcome { report, pass })
}

fn catalog_types(max_rank: usize) -> Vec<SimpleType> {
    SimpleType::all_up_to(max_rank).into_iter().filter(|t| subregular_data(*t).is_ok()).collect()
}

fn subregular_cmd(c: &Common) -> Result<Outcome> {
    let types = match parse_type(c)? {
        Some(t) => vec![t],
        None => catalog_types(c.max_rank),
    };
    let mut reports = Vec::new();
    let mut pass = true;
    for t in types {
        let r = verify_subregular(t, c.seed)?;
        pass &= r.pass;
        reports.push(serde_json::to_value(r).expect("serializable"));
    }
    let report = if reports.len() == 1 { reports.pop().unwrap() } else { json!({ "reports": reports, "pass": pass }) };
    Ok(Outcome { report, pass })
}

fn probe_quotient(c: &Common) -> Result<Outcome> {
    let rank = match (&c.ty, c.rank) {
        (None, Some(r)) => r,
        _ => match parse_type(c)? {
            Some(t) if t.family == Family::A => t.rank,
            Some(t) => return Err(Error::Usage(format!("probe-quotient supports type A only, got {t}"))),
            None => return Err(Error::Usage("--rank is required".into())),
        },
    };
    if rank < 2 {
        return Err(Error::Usage("probe-quotient needs rank >= 2".into()));
    }
    let scan = quotient::fiber_rank_scan(rank, c.seed, c.samples.unwrap_or(50), c.bound)?;
    let pass = scan.rank_histogram.keys().all(|&k| k <= rank);
    Ok(Outcome { report: serde_json::to_value(scan).expect("serializable"), pass })
}

/// Forward-conjugation invariance of the characteristic-polynomial coordinates on a type A plan.
pub fn quotient_invariance(plan: &SlicePlan, seed: u64, samples: usize, bound: i64) -> Result<Vec<String>> {
    let sg = SliceGroup::new(plan)?;
    let wl = quotient::WordLift::new(&sg.ch, plan)?;
    let mut bad = Vec::new();
    for i in 0..samples {
        let ps = seed.wrapping_add(i as u64);
        let pt = sg.sample_slice_point(ps, bound)?;
        let n = sg.sample_n(ps, bound);
        let y = wl.lift(&pt.y)?;
        let g = wl.lift(&sg.forward(&n, &pt))?;
        if !wl.rep.intertwines(&pt.y.matrix, &y) {
            bad.push(format!("sample {i}: lift of y does not intertwine"));
        }
        if quotient::delta_values(&g) != quotient::delta_values(&y) {
            bad.push(format!("sample {i}: delta changes under conjugation by n"));
        }
    }
    Ok(bad)
}

fn selftest(c: &Common) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut checks = Vec::new();
    let words_per_type = c.samples.unwrap_or(3);
    for ty in SimpleType::all_up_to(c.max_rank) {
        let rs = build_root_system(ty)?;
        let mut words: Vec<WordSpec> = Vec::new();
        if subregular_data(ty).is_ok() {
            words.push(WordSpec::Subregular);
        }
        words.extend((0..words_per_type).map(|_| random_word(&mut rng, rs.rank())));
        for w in &words {
            let label = word_label(w);
            let ps: u64 = rng.gen();
            let failures = match plan_for(ty, w, ps) {
                Ok(plan) => {
                    let mut f = audit_plan(&plan);
                    match SliceGroup::new(&plan) {
                        Ok(sg) => {
                            if let Err(e) = verify_normal(&sg.ch, &plan, &sg.s) {
                                f.push(e.to_string());
                            }
                        }
                        Err(e) => f.push(e.to_string()),
                    }
                    f
                }
                Err(e) => vec![e.to_string()],
            };
            checks.push(check("partition", ty, &label, ps, failures));
        }
    }
    let small = [(Family::A, 2), (Family::A, 3), (Family::B, 2), (Family::C, 3), (Family::G, 2)];
    for (f, r) in small {
        if r > c.max_rank {
            continue;
        }
        let ty = SimpleType::new(f, r)?;
        for w in [WordSpec::Subregular, random_word(&mut rng, r)] {
            let ps: u64 = rng.gen_range(0..1 << 32);
            let failures = match plan_for(ty, &w, ps) {
                Ok(plan) => match round_trips(&plan, ps, 2, c.bound, false) {
                    Ok((_, bad)) => bad,
                    Err(e) => vec![e.to_string()],
                },
                Err(e) => vec![e.to_string()],
            };
            checks.push(check("round_trip", ty, &word_label(&w), ps, failures));
        }
    }
    for ty in catalog_types(c.max_rank) {
        let failures = match verify_subregular(ty, c.seed) {
            Ok(r) => r.failures,
            Err(e) => vec![e.to_string()],
        };
        checks.push(check("subregular", ty, "subregular", c.seed, failures));
    }
    for r in 2..=c.max_rank.min(3) {
        let ty = SimpleType::new(Family::A, r)?;
        let mut failures = subregular_plan(ty, c.seed)
            .and_then(|(_, plan)| quotient_invariance(&plan, c.seed, 2, c.bound))
            .unwrap_or_else(|e| vec![e.to_string()]);
        match quotient::fiber_rank_scan(r, c.seed, 20, 5) {
            Ok(scan) => {
                if scan.generic_fraction < 0.95 || scan.rank_histogram.keys().any(|&k| k > r) {
                    failures.push(format!("rank histogram {:?}", scan.rank_histogram));
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
        checks.push(check("quotient", ty, "subregular", c.seed, failures));
    }
    let failed = checks.iter().filter(|v| v["pass"] == json!(false)).count();
    let report = json!({
        "max_rank": c.max_rank, "seed": c.seed, "checks": checks,
        "total": checks.len(), "failed": failed, "pass": failed == 0,
    });
    Ok(Outcome { report, pass: failed == 0 })
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Analyze(c) => analyze(c),
        Command::Factorize(c) => factorize(c),
        Command::VerifySubregular(c) => subregular_cmd(c),
        Command::ProbeQuotient(c) => probe_quotient(c),
        Command::Selftest(c) => selftest(c),
    }
}

fn common(cli: &Cli) -> &Common {
    match &cli.command {
        Command::Analyze(c)
        | Command::Factorize(c)
        | Command::VerifySubregular(c)
        | Command::ProbeQuotient(c)
        | Command::Selftest(c) => c,
    }
}

/// Flat "path: value" lines.
pub fn render_text(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&p, x, out);
                }
            }
            Value::Array(a) if a.iter().any(|x| x.is_object()) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), x, out);
                }
            }
            other => {
                out.push_str(prefix);
                out.push_str(": ");
                out.push_str(&other.to_string());
                out.push('\n');
            }
        }
    }
    let mut out = String::new();
    walk("", v, &mut out);
    out
}

pub fn main_with(cli: Cli) -> ExitCode {
    let c = common(&cli).clone();
    match run(&cli) {
        Ok(o) => {
            let text = match c.format {
                Format::Json => serde_json::to_string_pretty(&o.report).expect("serializable") + "\n",
                Format::Text => render_text(&o.report),
            };
            match &c.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Error::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(e) => {
            let word = c.word.as_deref().unwrap_or("-");
            eprintln!("error: {e} (type {:?} rank {:?} word {word} seed {})", c.ty, c.rank, c.seed);
            ExitCode::from(1)
        }
    }
}
