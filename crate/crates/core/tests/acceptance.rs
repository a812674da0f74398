//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slodowy::chevalley::verify_normal;
use slodowy::cli::quotient_invariance;
use slodowy::crosssection::SliceGroup;
use slodowy::error::Error;
use slodowy::quotient::{delta_coords, fiber_rank_scan, finite_difference_gaps, jacobian, sample_params, slice_parametrization_a};
use slodowy::rootsys::{build_root_system, weyl_from_word, Family, SimpleType};
use slodowy::slicegeom::audit_plan;
use slodowy::spectral::{build_plan, BlockOrder, SlicePlan};
use slodowy::subregular::subregular_plan;
use std::process::Command;
use std::time::Instant;

const SEED: u64 = 20240611;
const WORDS_PER_TYPE: usize = 20;
const ROUND_TRIP_WORDS: usize = 5;
const ROUND_TRIP_SAMPLES: usize = 10;
const PARAM_BOUND: i64 = 3;
const FD_STEP_DEN: i64 = 1024;
const FD_TOL: f64 = 1e-6;
const GENERIC_FRACTION: f64 = 0.95;
const RANK_SCAN_POINTS: usize = 50;
const FD_POINTS: usize = 10;

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn t(f: Family, r: usize) -> SimpleType {
    SimpleType::new(f, r).unwrap()
}

fn random_word(rng: &mut ChaCha8Rng, rank: usize) -> Vec<usize> {
    let len = rng.gen_range(0..=3 * rank);
    (0..len).map(|_| rng.gen_range(0..rank)).collect()
}

fn plan_of(ty: SimpleType, word: &[usize], seed: u64) -> Result<SlicePlan, Error> {
    let rs = build_root_system(ty)?;
    build_plan(&rs, &weyl_from_word(&rs, word), &BlockOrder::Default, seed)
}

/// Normal-representative check; Ok(false) when NormalizationFailed fires.
fn normal_ok(plan: &SlicePlan, log: &mut Vec<String>, label: &str) -> Result<bool, String> {
    match SliceGroup::new(plan) {
        Ok(sg) => verify_normal(&sg.ch, plan, &sg.s).map(|_| true).map_err(|e| format!("{label}: {e}")),
        Err(Error::NormalizationFailed(m)) => {
            log.push(format!("{label}: NormalizationFailed {m}"));
            Ok(false)
        }
        Err(e) => Err(format!("{label}: {e}")),
    }
}

struct RoundTripStats {
    trips: usize,
    trip_failures: Vec<String>,
    ranks: usize,
    rank_failures: Vec<String>,
    normal_checked: usize,
    normal_failures: Vec<String>,
    normal_log: Vec<String>,
    invariance_checked: usize,
    invariance_failures: Vec<String>,
}

fn criterion_1(normal: &mut (usize, Vec<String>, Vec<String>)) -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut plans = 0;
    let mut bad = Vec::new();
    for ty in SimpleType::all_up_to(6) {
        for _ in 0..WORDS_PER_TYPE {
            let word = random_word(&mut rng, ty.rank);
            let seed: u64 = rng.gen();
            let label = format!("{ty} word {word:?} seed {seed}");
            match plan_of(ty, &word, seed) {
                Ok(plan) => {
                    plans += 1;
                    for f in audit_plan(&plan) {
                        bad.push(format!("{label}: {f}"));
                    }
                    match normal_ok(&plan, &mut normal.2, &label) {
                        Ok(true) => normal.0 += 1,
                        Ok(false) => {}
                        Err(e) => normal.1.push(e),
                    }
                }
                Err(e) => bad.push(format!("{label}: {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Line {
        id: "1 root partition",
        pass: bad.is_empty(),
        detail: format!("{plans} plans over all types of rank <= 6, {} failures, {secs:.1}s{}", bad.len(), first(&bad)),
    }
}

fn first(v: &[String]) -> String {
    v.first().map(|s| format!("; first: {s}")).unwrap_or_default()
}

fn round_trips() -> RoundTripStats {
    let mut st = RoundTripStats {
        trips: 0,
        trip_failures: vec![],
        ranks: 0,
        rank_failures: vec![],
        normal_checked: 0,
        normal_failures: vec![],
        normal_log: vec![],
        invariance_checked: 0,
        invariance_failures: vec![],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0xA5A5);
    for ty in [t(Family::A, 2), t(Family::A, 3), t(Family::B, 2), t(Family::C, 3), t(Family::G, 2)] {
        let mut plans: Vec<(String, Result<SlicePlan, Error>, bool)> = Vec::new();
        let seed: u64 = rng.gen_range(0..1 << 32);
        plans.push((format!("{ty} subregular seed {seed}"), subregular_plan(ty, seed).map(|x| x.1), true));
        for _ in 0..ROUND_TRIP_WORDS {
            let word = random_word(&mut rng, ty.rank);
            let seed: u64 = rng.gen_range(0..1 << 32);
            plans.push((format!("{ty} word {word:?} seed {seed}"), plan_of(ty, &word, seed), false));
        }
        for (label, plan, lemma_word) in plans {
            let plan = match plan {
                Ok(p) => p,
                Err(e) => {
                    st.trip_failures.push(format!("{label}: {e}"));
                    continue;
                }
            };
            match normal_ok(&plan, &mut st.normal_log, &label) {
                Ok(true) => st.normal_checked += 1,
                Ok(false) if lemma_word => st.normal_failures.push(format!("{label}: NormalizationFailed on a catalog word")),
                Ok(false) => continue,
                Err(e) => st.normal_failures.push(e),
            }
            let sg = SliceGroup::new(&plan).unwrap();
            let base = plan.seed;
            for i in 0..ROUND_TRIP_SAMPLES {
                let ps = base.wrapping_add(i as u64);
                let pt = sg.sample_slice_point(ps, PARAM_BOUND).unwrap();
                let n = sg.sample_n(ps, PARAM_BOUND);
                let rank = sg.transversality_rank(&pt);
                st.ranks += 1;
                if rank != sg.dim() {
                    st.rank_failures.push(format!("{label} sample {i}: rank {rank} of {}", sg.dim()));
                }
                st.trips += 1;
                match sg.factorize(&sg.forward(&n, &pt)) {
                    Ok(fr) if fr.n.matrix == n.matrix && fr.ns.matrix == pt.ns.matrix && fr.z.matrix == pt.z.matrix => {}
                    Ok(_) => st.trip_failures.push(format!("{label} sample {i}: recovered factors differ")),
                    Err(e) => st.trip_failures.push(format!("{label} sample {i}: {e}")),
                }
            }
            if ty.family == Family::A {
                st.invariance_checked += ROUND_TRIP_SAMPLES;
                match quotient_invariance(&plan, base, ROUND_TRIP_SAMPLES, PARAM_BOUND) {
                    Ok(b) => st.invariance_failures.extend(b.into_iter().map(|m| format!("{label}: {m}"))),
                    Err(e) => st.invariance_failures.push(format!("{label}: {e}")),
                }
            }
        }
    }
    st
}

struct Claim {
    ty: SimpleType,
    theta: (u32, u32),
}

fn catalog_claims(extended: bool) -> Vec<Claim> {
    let mut v = Vec::new();
    if !extended {
        for r in 1..=5 {
            v.push(Claim { ty: t(Family::A, r), theta: (1, r as u32) });
        }
        for f in [Family::B, Family::C] {
            for r in 2..=4 {
                v.push(Claim { ty: t(f, r), theta: (1, 2 * (r as u32 - 1)) });
            }
        }
        for r in 4..=5 {
            v.push(Claim { ty: t(Family::D, r), theta: (1, 2 * (r as u32 - 2)) });
        }
        v.push(Claim { ty: t(Family::G, 2), theta: (1, 6) });
        v.push(Claim { ty: t(Family::F, 4), theta: (1, 6) });
    } else {
        v.push(Claim { ty: t(Family::E, 6), theta: (1, 9) });
        v.push(Claim { ty: t(Family::E, 7), theta: (1, 14) });
        v.push(Claim { ty: t(Family::E, 8), theta: (1, 24) });
    }
    v
}

fn criterion_5(extended: bool) -> Line {
    let start = Instant::now();
    let mut bad = Vec::new();
    let claims = catalog_claims(extended);
    for c in &claims {
        let r = c.ty.rank;
        let plan = match subregular_plan(c.ty, SEED) {
            Ok((_, p)) => p,
            Err(e) => {
                bad.push(format!("{}: {e}", c.ty));
                continue;
            }
        };
        let d = &plan.dims;
        let is_a = c.ty.family == Family::A;
        let l_exp = if is_a { r + 1 } else { r + 2 };
        let h0_exp = usize::from(is_a);
        let mut f = Vec::new();
        if d.l != l_exp {
            f.push(format!("l = {} (stated {l_exp})", d.l));
        }
        if d.dim_h0 != h0_exp {
            f.push(format!("dim h0 = {} (stated {h0_exp})", d.dim_h0));
        }
        if d.dim_slice != r + 2 {
            f.push(format!("dim slice = {} (stated {})", d.dim_slice, r + 2));
        }
        if !plan.levi_roots.is_empty() {
            f.push(format!("Delta_i0 has {} roots (stated empty)", plan.levi_roots.len()));
        }
        match plan.theta_min() {
            Some(th) if th == c.theta => {}
            Some(th) => f.push(format!("theta_min = {}/{} of 2pi (stated {}/{})", th.0, th.1, c.theta.0, c.theta.1)),
            None => f.push(format!("no rotation block (stated {}/{})", c.theta.0, c.theta.1)),
        }
        if !f.is_empty() {
            bad.push(format!("{}: {}", c.ty, f.join(", ")));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Line {
        id: if extended { "5x subregular catalog, extended E6-E8" } else { "5 subregular catalog" },
        pass: bad.is_empty(),
        detail: format!("{} types, {} mismatched, {secs:.1}s{}", claims.len(), bad.len(), if bad.is_empty() { String::new() } else { format!(": {}", bad.join("; ")) }),
    }
}

fn criterion_6(st: &RoundTripStats) -> Line {
    let start = Instant::now();
    let mut bad: Vec<String> = st.invariance_failures.clone();
    let h = slodowy::qmath::Q::new(1.into(), FD_STEP_DEN.into());
    let (mut worst_t, mut worst_u) = (0.0f64, 0.0f64);
    let mut fractions = Vec::new();
    for r in [2usize, 3] {
        match fiber_rank_scan(r, SEED, RANK_SCAN_POINTS, 5) {
            Ok(scan) => {
                if scan.generic_fraction < GENERIC_FRACTION || scan.rank_histogram.keys().any(|&k| k > r) {
                    bad.push(format!("A{r}: rank histogram {:?}", scan.rank_histogram));
                }
                fractions.push(format!("A{r} {:.2}", scan.generic_fraction));
            }
            Err(e) => bad.push(format!("A{r}: {e}")),
        }
        let sl = slice_parametrization_a(r, SEED).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + r as u64);
        for _ in 0..FD_POINTS {
            let p = sample_params(&sl, &mut rng, PARAM_BOUND);
            let gaps = finite_difference_gaps(&sl, &p, &h).unwrap();
            let (u, ts) = gaps.split_last().unwrap();
            worst_u = worst_u.max(*u);
            worst_t = ts.iter().copied().fold(worst_t, f64::max);
            let k = jacobian(&delta_coords(&sl.point(&p).unwrap())).rank();
            if k > r {
                bad.push(format!("A{r}: Jacobian rank {k} exceeds r"));
            }
        }
    }
    if worst_t.max(worst_u) >= FD_TOL {
        bad.push(format!("finite-difference gap t {worst_t:.3e}, u {worst_u:.3e} (tolerance {FD_TOL:e})"));
    }
    Line {
        id: "6 quotient probe",
        pass: bad.is_empty(),
        detail: format!(
            "delta invariance on {} samples, generic rank fraction {}, worst jet/FD gap t-directions {worst_t:.2e} u-direction {worst_u:.2e}, {:.1}s{}",
            st.invariance_checked,
            fractions.join(", "),
            start.elapsed().as_secs_f64(),
            first(&bad)
        ),
    }
}

fn criterion_7() -> Line {
    let bin = env!("CARGO_BIN_EXE_slodowy");
    let run = || Command::new(bin).args(["selftest", "--max-rank", "4", "--seed", "7"]).output().expect("binary runs");
    let (a, b) = (run(), run());
    let same = a.stdout == b.stdout && a.status.code() == b.status.code() && !a.stdout.is_empty();
    // usage errors exit 2
    let usage = Command::new(bin).args(["analyze", "--type", "Q", "--rank", "2"]).output().unwrap().status.code() == Some(2);
    let analyze = Command::new(bin).args(["analyze", "--type", "A", "--rank", "2", "--word", "1,2"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&analyze.stdout).unwrap_or_default();
    let three = v["positive"].as_array().map(Vec::len) == Some(3) && analyze.status.code() == Some(0);
    Line {
        id: "7 determinism",
        pass: same,
        detail: format!(
            "two selftest runs: {} bytes, identical = {same}, exit {:?}; usage error exit 2 = {usage}; analyze A2 |positive| = 3: {three}",
            a.stdout.len(),
            a.status.code()
        ),
    }
}

fn main() {
    let mut lines = Vec::new();
    let mut normal = (0usize, Vec::new(), Vec::new());
    lines.push(criterion_1(&mut normal));
    let start = Instant::now();
    let st = round_trips();
    let secs = start.elapsed().as_secs_f64();
    lines.push(Line {
        id: "2 cross-section round trip",
        pass: st.trip_failures.is_empty(),
        detail: format!("{} exact round trips on A2 A3 B2 C3 G2, {} failures, {secs:.1}s{}", st.trips, st.trip_failures.len(), first(&st.trip_failures)),
    });
    lines.push(Line {
        id: "3 transversality",
        pass: st.rank_failures.is_empty(),
        detail: format!("{} points at full rank dim g, {} deficient{}", st.ranks - st.rank_failures.len(), st.rank_failures.len(), first(&st.rank_failures)),
    });
    let mut nfail = normal.1.clone();
    nfail.extend(st.normal_failures.iter().cloned());
    let mut nlog = normal.2.clone();
    nlog.extend(st.normal_log.iter().cloned());
    lines.push(Line {
        id: "4 normal representative",
        pass: nfail.is_empty(),
        detail: format!("{} plans verified, {} NormalizationFailed logged, {} failures{}", normal.0 + st.normal_checked, nlog.len(), nfail.len(), first(&nfail)),
    });
    lines.push(criterion_5(false));
    lines.push(criterion_5(true));
    lines.push(criterion_6(&st));
    lines.push(criterion_7());
    for l in &nlog {
        println!("note: {l}");
    }
    let mut failed = 0;
    for l in &lines {
        println!("criterion {}: {} | {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
        failed += usize::from(!l.pass);
    }
    println!("acceptance: {} of {} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
