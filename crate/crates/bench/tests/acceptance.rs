//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs every criterion by default. Criterion numbers given on the command
//! line (`cargo test --test acceptance -- 3 8`) restrict the run. Failing
//! criteria make the process exit with status 1 only when
//! `ACCEPTANCE_STRICT=1` is set.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use mmrecon::codes::{
    derive_family, read_family_dir, write_alist, read_alist, write_family_dir, CodeFamily,
    WaveLayout,
};
use mmrecon::decoder::{decode, DecodeConfig, DecodeSession, Schedule};
use mmrecon::estimation::{compute_syndromes, odd_error_prob, EstimateMethod};
use mmrecon::gf2::{gf2_rank, systematic_decompose};
use mmrecon::protocol::{leakage_audit, reconciliation_efficiency};
use mmrecon::{BitBlock, ParityCheckMatrix};
use mmrecon_bench::experiment::parse_profile;
use mmrecon_bench::report::write_csv_files;
use mmrecon_bench::{
    child_seed, run_experiment, run_variants, summarize, BuildParams, Experiment, ExperimentSpec,
    FamilySet, FamilySource, MetricsRecord, VariantKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Irregular column-degree profile used for every family of the run.
const PROFILE: &str = "3:0.5,2:0.19,6:0.16,20:0.15";
const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

struct Context {
    /// Irregular family used by the decoding criteria.
    family: Arc<CodeFamily>,
    /// Regular column-degree-3 family used by the estimation criteria.
    estimation_family: Arc<CodeFamily>,
    /// Records of criteria 3 to 7, for the key-equality check of criterion 9.
    reconciled: Vec<MetricsRecord>,
}

impl Context {
    fn source(&self) -> FamilySource {
        FamilySource::Family(self.family.clone())
    }

    fn estimation_source(&self) -> FamilySource {
        FamilySource::Family(self.estimation_family.clone())
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean iterations and its standard error.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0);
    (m, (var / xs.len() as f64).sqrt())
}

fn summary_by_label(records: &[MetricsRecord]) -> BTreeMap<(String, u64), mmrecon_bench::Summary> {
    summarize(records)
        .into_iter()
        .map(|s| ((s.algorithm.clone(), s.qber_injected.to_bits()), s))
        .collect()
}

/// RMSE of sampling, single- and multi-syndrome estimates against the
/// realized rate.
fn estimator_rmse(records: &[MetricsRecord]) -> [f64; 3] {
    [
        EstimateMethod::Sampling,
        EstimateMethod::SingleSyndrome,
        EstimateMethod::MultiSyndrome,
    ]
    .map(|method| {
        let label = method.to_string();
        let errs: Vec<f64> = records
            .iter()
            .filter(|r| r.algorithm == label)
            .map(|r| (r.qber_estimated - r.qber_realized).powi(2))
            .collect();
        mean(&errs).sqrt()
    })
}

fn criterion_1_2(ctx: &mut Context) -> Vec<(usize, Outcome)> {
    let mut spec = ExperimentSpec::preset(Experiment::EstAccuracy);
    spec.qber_list = vec![0.0166];
    spec.trials = 2000;
    let start = Instant::now();
    let records = run_experiment(&spec, &ctx.estimation_source()).expect("estimation run");
    let elapsed = start.elapsed().as_secs_f64();

    let [sampling, single, multi] = estimator_rmse(&records);
    let irregular = run_experiment(&spec, &ctx.source()).expect("estimation run");
    let [i_sampling, i_single, i_multi] = estimator_rmse(&irregular);
    let c1 = Outcome {
        pass: multi < single && single < sampling && elapsed < 300.0,
        detail: format!(
            "regular degree-3 family: RMSE multi {multi:.6} < single {single:.6} < sampling {sampling:.6}; runtime {elapsed:.1}s (< 300s); irregular decoding family for comparison: multi {i_multi:.6}, single {i_single:.6}, sampling {i_sampling:.6}"
        ),
    };

    // Pilot on an independent seed, run before the main data is inspected.
    let tolerance = 0.002;
    let mut pilot = spec.clone();
    pilot.trials = 200;
    pilot.seed = SEED + 1000;
    let multi_only: Vec<_> = pilot
        .variants()
        .into_iter()
        .filter(|v| v.kind == VariantKind::Estimate(EstimateMethod::MultiSyndrome))
        .collect();
    let families =
        FamilySet::prepare_for(&pilot, &multi_only, &ctx.estimation_source()).expect("families");
    let pilot_records = run_variants(&pilot, &multi_only, &families).expect("pilot run");
    let mut pilot_errs: Vec<f64> = pilot_records
        .iter()
        .map(|r| (r.qber_estimated - r.qber_realized).abs())
        .collect();
    pilot_errs.sort_by(f64::total_cmp);
    let pilot_p95 = pilot_errs[(0.95 * pilot_errs.len() as f64).ceil() as usize - 1];

    let label = EstimateMethod::MultiSyndrome.to_string();
    let main: Vec<&MetricsRecord> = records.iter().filter(|r| r.algorithm == label).collect();
    let within = main
        .iter()
        .filter(|r| (r.qber_estimated - r.qber_realized).abs() <= tolerance + 1e-12)
        .count() as f64
        / main.len() as f64;
    let c2 = Outcome {
        pass: within >= 0.95,
        detail: format!(
            "{:.2}% of {} estimates within +-{tolerance} (need >= 95%); pilot 95th percentile |error| {pilot_p95:.5}",
            100.0 * within,
            main.len()
        ),
    };
    vec![(1, c1), (2, c2)]
}

fn criterion_3(ctx: &mut Context) -> Outcome {
    let mut spec = ExperimentSpec::preset(Experiment::IterationsVsQber);
    spec.trials = 100;
    let start = Instant::now();
    let records = run_experiment(&spec, &ctx.source()).expect("iterations run");
    let elapsed = start.elapsed().as_secs_f64();
    let summary = summary_by_label(&records);

    let mut pass = elapsed < 600.0;
    let mut parts = Vec::new();
    for &q in &spec.qber_list {
        for s in Schedule::ALL {
            let single = &summary[&(s.algorithm_name(1), q.to_bits())];
            let multi = &summary[&(s.algorithm_name(spec.u), q.to_bits())];
            let cut = 1.0 - multi.mean_iterations / single.mean_iterations;
            pass &= cut >= 0.30;
            parts.push(format!(
                "q={q} {}->{}: {:.2}->{:.2} ({:.1}%)",
                single.algorithm,
                multi.algorithm,
                single.mean_iterations,
                multi.mean_iterations,
                100.0 * cut
            ));
        }
    }
    ctx.reconciled.extend(records);
    Outcome {
        pass,
        detail: format!(
            "reductions (need >= 30% each): {}; runtime {elapsed:.1}s (< 600s)",
            parts.join(", ")
        ),
    }
}

fn criterion_4(ctx: &mut Context) -> Outcome {
    let spec = ExperimentSpec::preset(Experiment::IterationsVsU);
    let records = run_experiment(&spec, &ctx.source()).expect("iterations-vs-u run");
    let mut pass = true;
    let mut parts = Vec::new();
    for s in Schedule::ALL {
        let stats: Vec<(f64, f64)> = (1..=spec.u)
            .map(|u| {
                let its: Vec<f64> = records
                    .iter()
                    .filter(|r| r.u == u && r.schedule == s.to_string())
                    .map(|r| r.iterations_used as f64)
                    .collect();
                mean_se(&its)
            })
            .collect();
        for w in stats.windows(2) {
            let ((m0, se0), (m1, se1)) = (w[0], w[1]);
            pass &= m1 <= m0 + (se0 * se0 + se1 * se1).sqrt();
        }
        let means: Vec<String> = stats.iter().map(|(m, se)| format!("{m:.2}+-{se:.2}")).collect();
        parts.push(format!("{s}: [{}]", means.join(", ")));
    }
    ctx.reconciled.extend(records);
    Outcome {
        pass,
        detail: format!("mean iterations for u=1..5 at q=0.0246: {}", parts.join("; ")),
    }
}

fn criterion_5(ctx: &mut Context) -> Outcome {
    let spec = ExperimentSpec::preset(Experiment::WaveEffect);
    let records = run_experiment(&spec, &ctx.source()).expect("wave run");
    let summary = summary_by_label(&records);
    let mut all_le = true;
    let mut any_lt = false;
    let mut parts = Vec::new();
    for &q in &spec.qber_list {
        for s in Schedule::ALL {
            let name = s.algorithm_name(spec.u);
            let compact = summary[&(format!("{name}/compact"), q.to_bits())].mean_iterations;
            let separated = summary[&(format!("{name}/separated"), q.to_bits())].mean_iterations;
            all_le &= separated <= compact;
            any_lt |= separated < compact;
            parts.push(format!("q={q} {name}: compact {compact:.2} separated {separated:.2}"));
        }
    }
    ctx.reconciled.extend(records);
    Outcome {
        pass: all_le && any_lt,
        detail: parts.join(", "),
    }
}

fn criterion_6(ctx: &mut Context) -> Outcome {
    let spec = ExperimentSpec::preset(Experiment::SuccessRate);
    let records = run_experiment(&spec, &ctx.source()).expect("success-rate run");
    let summary = summary_by_label(&records);
    let q = spec.qber_list[0].to_bits();
    let rate = |u: usize| {
        mean(
            &Schedule::ALL
                .iter()
                .map(|s| summary[&(s.algorithm_name(u), q)].success_rate)
                .collect::<Vec<_>>(),
        )
    };
    let (single, multi) = (rate(1), rate(spec.u));
    let per: Vec<String> = summary
        .values()
        .map(|s| format!("{} {:.1}%", s.algorithm, 100.0 * s.success_rate))
        .collect();
    ctx.reconciled.extend(records);
    Outcome {
        pass: multi >= 0.85 && single <= 0.65 && multi - single >= 0.25,
        detail: format!(
            "multi {:.2}% (>= 85%), single {:.2}% (<= 65%), gap {:.2} pp (>= 25); {}",
            100.0 * multi,
            100.0 * single,
            100.0 * (multi - single),
            per.join(", ")
        ),
    }
}

fn criterion_7(ctx: &mut Context) -> Outcome {
    let mut spec = ExperimentSpec::preset(Experiment::BerAfterK);
    spec.qber_list = vec![0.0202];
    spec.schedule_list = vec![Schedule::Shuffled];
    let records = run_experiment(&spec, &ctx.source()).expect("ber run");
    let summary = summary_by_label(&records);
    let q = spec.qber_list[0].to_bits();
    let sbp = summary[&(Schedule::Shuffled.algorithm_name(1), q)].ber;
    let msbp = summary[&(Schedule::Shuffled.algorithm_name(spec.u), q)].ber;
    let ratio = if msbp > 0.0 { sbp / msbp } else { f64::INFINITY };
    ctx.reconciled.extend(records);
    Outcome {
        pass: sbp > 0.0 && ratio >= 100.0,
        detail: format!("after 5 iterations: SBP BER {sbp:.3e}, MSBP BER {msbp:.3e}, ratio {ratio:.1} (>= 100)"),
    }
}

fn dense(rows: [[u8; 5]; 4]) -> ParityCheckMatrix {
    ParityCheckMatrix::from_dense(5, &rows).expect("valid rows")
}

fn criterion_8() -> Outcome {
    // Columns 0 and 3 share checks 2 and 3 of the first member, a 4-cycle
    // through both erroneous bits. The two added members have no 4-cycles.
    let h1 = dense([[0, 1, 0, 0, 1], [0, 1, 1, 1, 0], [1, 1, 1, 1, 1], [1, 0, 0, 1, 0]]);
    let h2 = dense([[1, 1, 0, 0, 0], [0, 0, 1, 1, 0], [0, 1, 0, 0, 1], [0, 0, 0, 1, 1]]);
    let h3 = dense([[1, 0, 0, 0, 1], [0, 1, 0, 0, 1], [1, 0, 1, 1, 0], [0, 1, 0, 1, 0]]);
    let (a, b) = (0, 3);
    let e = 0.2;
    let x = BitBlock::from_bits(&[1, 0, 1, 0, 1]);
    let mut y = x.clone();
    y.flip(a);
    y.flip(b);

    let positions = systematic_decompose(&h1).expect("full rank").independent_positions;
    let single = CodeFamily::from_members(vec![h1.clone()], positions.clone(), WaveLayout::Compact, 0)
        .expect("single member");
    let multi = CodeFamily::from_members(vec![h1.clone(), h2.clone(), h3.clone()], positions, WaveLayout::Compact, 0)
        .expect("three members");
    let cycle_free = h2.four_cycle_pairs() == 0 && h3.four_cycle_pairs() == 0;
    let trapped = h1.four_cycle_pairs() > 0;

    let z1 = compute_syndromes(&x, &single).expect("syndromes");
    let mut session = DecodeSession::new(&y, e, &single, &z1, Schedule::Flooding).expect("session");
    let mut opposite = 0;
    let mut first = Vec::new();
    for it in 0..100 {
        session.step();
        let sv = session.soft_values();
        if sv[a] * sv[b] < 0.0 {
            opposite += 1;
        }
        if it < 2 {
            first.push(format!("({:.4}, {:.4})", sv[a], sv[b]));
        }
    }
    let bp = decode(&y, e, &single, &z1, &DecodeConfig::new(Schedule::Flooding, 100), None).expect("bp");

    let z3 = compute_syndromes(&x, &multi).expect("syndromes");
    let mbp = decode(&y, e, &multi, &z3, &DecodeConfig::new(Schedule::Flooding, 100), None).expect("mbp");

    let pass = trapped
        && cycle_free
        && opposite == 100
        && !bp.success
        && bp.iterations_used == 100
        && mbp.success
        && mbp.iterations_used <= 5
        && mbp.corrected_key == x;
    Outcome {
        pass,
        detail: format!(
            "BP: {} after {} iterations, opposite signs on the trapped pair in {opposite}/100 iterations, first soft values {}; MBP (2 cycle-free members added): {} after {} iterations",
            if bp.success { "success" } else { "failure" },
            bp.iterations_used,
            first.join(" "),
            if mbp.success { "success" } else { "failure" },
            mbp.iterations_used
        ),
    }
}

fn random_full_rank(rng: &mut ChaCha8Rng) -> ParityCheckMatrix {
    loop {
        let m = rng.random_range(1..=12);
        let n = rng.random_range(m + 1..=24);
        let rows: Vec<Vec<u8>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(0..2u8)).collect())
            .collect();
        let Ok(h) = ParityCheckMatrix::from_dense(n, &rows) else {
            continue;
        };
        if gf2_rank(&h) == m {
            return h;
        }
    }
}

/// Whether both directories hold the same file names with identical bytes.
fn same_files(a: &std::path::Path, b: &std::path::Path) -> bool {
    let list = |d: &std::path::Path| -> Vec<(std::ffi::OsString, Vec<u8>)> {
        let mut files: Vec<_> = std::fs::read_dir(d)
            .map(|it| {
                it.filter_map(|e| e.ok())
                    .map(|e| (e.file_name(), std::fs::read(e.path()).unwrap_or_default()))
                    .collect()
            })
            .unwrap_or_default();
        files.sort();
        files
    };
    let files = list(a);
    !files.is_empty() && files == list(b)
}

fn criterion_9(ctx: &Context) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let recomposed = (0..500)
        .filter(|_| {
            let h = random_full_rank(&mut rng);
            systematic_decompose(&h).expect("full rank").recompose() == h.to_dense()
        })
        .count();

    let mut odd_mismatch = 0;
    for d in 1..=12usize {
        for step in 0..=10 {
            let e = step as f64 * 0.05;
            let brute: f64 = (0u32..1 << d)
                .filter(|p| p.count_ones() % 2 == 1)
                .map(|p| {
                    let w = p.count_ones() as i32;
                    e.powi(w) * (1.0 - e).powi(d as i32 - w)
                })
                .sum();
            if (brute - odd_error_prob(e, d)).abs() > 1e-12 {
                odd_mismatch += 1;
            }
        }
    }

    let successes: Vec<&MetricsRecord> = ctx.reconciled.iter().filter(|r| r.success).collect();
    let key_ok = successes.iter().filter(|r| r.key_matches == Some(true)).count();

    let dir = tempfile::tempdir().expect("temp dir");
    let (d1, d2) = (dir.path().join("a"), dir.path().join("b"));
    let text = write_alist(ctx.family.code(0));
    let alist_ok = read_alist(&text).map(|h| write_alist(&h) == text).unwrap_or(false)
        && write_family_dir(&ctx.family, &d1).is_ok()
        && read_family_dir(&d1)
            .and_then(|f| write_family_dir(&f, &d2))
            .is_ok()
        && same_files(&d1, &d2);

    let mut spec = ExperimentSpec::preset(Experiment::IterationsVsQber);
    spec.qber_list = vec![0.025];
    spec.trials = 4;
    spec.timing = false;
    let run = |p: &std::path::Path| {
        let records = run_experiment(&spec, &ctx.source()).expect("small run");
        write_csv_files(p, &records).expect("csv written");
    };
    let (p1, p2) = (dir.path().join("r1.csv"), dir.path().join("r2.csv"));
    run(&p1);
    run(&p2);
    let read = |p: std::path::PathBuf| std::fs::read(p).expect("csv readable");
    let csv_ok = read(p1.clone()) == read(p2.clone())
        && read(dir.path().join("r1.iters.csv")) == read(dir.path().join("r2.iters.csv"));

    Outcome {
        pass: recomposed == 500 && odd_mismatch == 0 && key_ok == successes.len() && alist_ok && csv_ok,
        detail: format!(
            "recomposition {recomposed}/500; odd_error_prob mismatches {odd_mismatch}; corrected key equals Alice's discarded key on {key_ok}/{} successes of criteria 3-7; alist round trip {}; CSV determinism {}",
            successes.len(),
            if alist_ok { "identical" } else { "differs" },
            if csv_ok { "identical" } else { "differs" }
        ),
    }
}

fn criterion_10(ctx: &Context) -> Outcome {
    let f = reconciliation_efficiency(2000, 10_000, 0.02, 1.0).expect("efficiency").f;
    let h = ctx.family.code(0).clone();
    let single = ctx.family.truncated(1).expect("u = 1");
    let positions = single.independent_positions().to_vec();
    let dup = CodeFamily::from_members(vec![h.clone(), h.clone(), h], positions, WaveLayout::Compact, 0)
        .expect("duplicate family");
    let (a1, ad) = (leakage_audit(&single).alpha, leakage_audit(&dup).alpha);
    let a5 = leakage_audit(&ctx.family);
    Outcome {
        pass: (f - 1.4140).abs() <= 0.0005 && a1 == 1.0 && ad == 1.0,
        detail: format!(
            "f = {f:.6} (1.4140 +- 0.0005); alpha u=1 {a1}, duplicate members {ad}; measured alpha of the u=5 family {:.4} (stacked rank {})",
            a5.alpha, a5.rank_stacked
        ),
    }
}

fn report(id: usize, name: &str, outcome: &Outcome, failures: &mut usize) {
    if !outcome.pass {
        *failures += 1;
    }
    println!(
        "{} [{id}] {name}: {}",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail
    );
    std::io::stdout().flush().ok();
}

fn main() {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let want = |c: usize| selected.is_empty() || selected.contains(&c);
    let mut failures = 0;

    let start = Instant::now();
    let params = BuildParams {
        n: 10_000,
        rate: 0.8,
        profile: Some(parse_profile(PROFILE).expect("profile")),
        seed: SEED,
        max_attempts: 1,
    };
    let base = params.build_base().expect("base matrix");
    let family = derive_family(&base, 5, WaveLayout::Separated, child_seed(SEED, &[u64::MAX]))
        .expect("family");
    let regular = BuildParams {
        profile: None,
        ..params
    };
    let estimation_family = derive_family(
        &regular.build_base().expect("base matrix"),
        5,
        WaveLayout::Separated,
        child_seed(SEED, &[u64::MAX]),
    )
    .expect("family");
    println!(
        "families: n=10000 m=2000 u=5 separated; decoding profile {PROFILE}, estimation profile regular degree 3; built in {:.1}s",
        start.elapsed().as_secs_f64()
    );
    let mut ctx = Context {
        family: Arc::new(family),
        estimation_family: Arc::new(estimation_family),
        reconciled: Vec::new(),
    };

    let names = [
        "",
        "estimator ordering",
        "estimator consistency",
        "iteration reduction",
        "monotonicity in u",
        "wave effect",
        "success rate",
        "BER separation",
        "cycle trap",
        "exact property suites",
        "efficiency arithmetic",
    ];
    if want(1) || want(2) {
        for (id, outcome) in criterion_1_2(&mut ctx) {
            if want(id) {
                report(id, names[id], &outcome, &mut failures);
            }
        }
    }
    let runners: [(usize, fn(&mut Context) -> Outcome); 5] = [
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
    ];
    for (id, run) in runners {
        if want(id) {
            let t = Instant::now();
            let outcome = run(&mut ctx);
            report(id, names[id], &outcome, &mut failures);
            println!("    ({:.1}s)", t.elapsed().as_secs_f64());
        }
    }
    if want(8) {
        report(8, names[8], &criterion_8(), &mut failures);
    }
    if want(9) {
        report(9, names[9], &criterion_9(&ctx), &mut failures);
    }
    if want(10) {
        report(10, names[10], &criterion_10(&ctx), &mut failures);
    }
    println!(
        "acceptance: {failures} failing criteria, total {:.1}s",
        start.elapsed().as_secs_f64()
    );
    // Test targets run in name order, so a non-zero exit here would stop
    // `cargo test` before the remaining suites; strict mode is opt-in.
    if failures > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
