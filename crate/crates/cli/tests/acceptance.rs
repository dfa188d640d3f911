//! Acceptance gate: one line per criterion, exit status 1 if any fails.
//!
//! Run with `cargo test -p infconv-cli --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use infconv::harness::{CheckRecord, Mode, RecordVerdict};
use infconv::seed::seeded_rng;
use infconv::subdiff::ekeland_point;
use infconv::{
    builtin_corpus, moreau_fast, run_suite, CheckCase, CheckId, CheckReport, CheckSelector,
    ConvCase, ExtReal, FuncSpec, Grid, GridFn,
};
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn random_gridfn(grid: Grid, rng: &mut impl Rng) -> GridFn {
    let mut vals: Vec<ExtReal> = (0..grid.len())
        .map(|_| {
            if rng.random_bool(0.1) {
                ExtReal::PosInf
            } else {
                ExtReal::Finite(rng.random_range(-5.0..5.0))
            }
        })
        .collect();
    vals[grid.len() / 2] = ExtReal::Finite(0.0);
    GridFn::new(grid, vals).unwrap()
}

fn max_abs_diff(a: &GridFn, b: &GridFn) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| match (x, y) {
            (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs(),
            (ExtReal::PosInf, ExtReal::PosInf) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// 50 seeded instances: 25 on a 4096-point line, 25 on a 128×128 square.
fn fast_matches_brute() -> Outcome {
    let alphas = [0.5, 1.0, 4.0];
    let (mut worst, mut slowest) = (0.0f64, Duration::ZERO);
    for k in 0..50 {
        let mut rng = seeded_rng(k, "acceptance:fast-vs-brute");
        let grid = if k < 25 {
            Grid::line(-3.0, 3.0, 4096).unwrap()
        } else {
            Grid::square(-2.0, 2.0, 128).unwrap()
        };
        let f = random_gridfn(grid, &mut rng);
        let alpha = alphas[k as usize % 3];
        let t = Instant::now();
        let fast = moreau_fast(&f, alpha).unwrap();
        if k >= 25 {
            slowest = slowest.max(t.elapsed());
        }
        let brute = ConvCase::from_grid(f, FuncSpec::sq(alpha))
            .unwrap()
            .inf_conv_brute()
            .unwrap();
        worst = worst.max(max_abs_diff(&fast, &brute));
    }
    outcome(
        worst <= 1e-9 && slowest < Duration::from_secs(1),
        format!(
            "max |fast − brute| = {worst:.2e} over 50 instances; slowest 2D fast run {slowest:.2?}"
        ),
    )
}

/// Moreau envelope of |x| through the CLI against Huber values.
fn huber(bin: &Path, dir: &Path) -> Outcome {
    let out = dir.join("env.csv");
    let status = Command::new(bin)
        .args(["moreau", "--f"])
        .arg(workspace_root().join("data/abs.json"))
        .args(["--alpha", "1", "--grid", "-4:4:1601", "--out"])
        .arg(&out)
        .stderr(Stdio::null())
        .status()
        .unwrap();
    if !status.success() {
        return outcome(false, format!("moreau exited with {status}"));
    }
    let env = GridFn::read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    let grid = env.grid().clone();
    let h = grid.h_max();
    // brute-force reference: f sampled on the same grid, exhaustive minimisation
    let brute = ConvCase::from_spec(
        FuncSpec::norm(infconv::NormKind::L1),
        FuncSpec::sq(1.0),
        &grid,
    )
    .unwrap()
    .inf_conv_brute()
    .unwrap();
    let (mut worst, mut worst_brute, mut tested) = (0.0f64, 0.0f64, 0);
    for i in 0..grid.len() {
        let x = grid.point(i)[0];
        if x.abs() > 3.5 + 1e-12 {
            continue;
        }
        tested += 1;
        let hub = if x.abs() <= 0.5 {
            x * x
        } else {
            x.abs() - 0.25
        };
        worst = worst.max((env.value(i).to_f64() - hub).abs());
        worst_brute = worst_brute.max((brute.value(i).to_f64() - hub).abs());
    }
    outcome(
        worst <= 5.0 * h && worst_brute <= 5.0 * h,
        format!("{tested} points: max |env − Huber| = {worst:.2e}, brute {worst_brute:.2e}, tolerance 5h = {:.2e}", 5.0 * h),
    )
}

fn records<'a>(report: &'a CheckReport, id: CheckId, cases: &[&str]) -> Vec<&'a CheckRecord> {
    report
        .records_for(id)
        .filter(|r| cases.is_empty() || cases.contains(&r.case.as_str()))
        .collect()
}

fn all_pass(recs: &[&CheckRecord]) -> bool {
    !recs.is_empty() && recs.iter().all(|r| r.verdict == RecordVerdict::Pass)
}

fn worst_measured(recs: &[&CheckRecord]) -> f64 {
    recs.iter().filter_map(|r| r.measured).fold(0.0, f64::max)
}

fn transfer_and_lipschitz(report: &CheckReport) -> Outcome {
    // F = [−1,1], [−1,2], unit disc, (±1,±3) rectangle
    let cases = [
        "dist_interval_1d",
        "mintime_asym_1d",
        "dist_ball_2d",
        "mintime_polygon_pair_2d",
    ];
    let ineq = records(report, CheckId::TransferInequality, &cases);
    let lip = records(report, CheckId::EnvelopeLipschitz, &cases);
    let worst_lip_gap = lip
        .iter()
        .filter_map(|r| Some(r.measured? - (r.tolerance? - 1e-9)))
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        ineq.len() == 4 && lip.len() == 4 && all_pass(&ineq) && all_pass(&lip),
        format!(
            "4 gauge shapes: max (f⊕φ)(x)−(f⊕φ)(y)−φ(y−x) = {:.2e}; max Lip(f⊕φ) − calmness = {worst_lip_gap:.2e}",
            worst_measured(&ineq)
        ),
    )
}

fn fixed_points(report: &CheckReport, corpus: &[CheckCase]) -> Outcome {
    let gap_cases: Vec<&str> = corpus
        .iter()
        .filter(|c| c.constants.gap().is_some())
        .map(|c| c.id.as_str())
        .collect();
    let fix = records(report, CheckId::FixedPointS0, &gap_cases);
    let dom = records(report, CheckId::DomInS0, &gap_cases);
    outcome(
        fix.len() == gap_cases.len()
            && dom.len() == gap_cases.len()
            && all_pass(&fix)
            && all_pass(&dom),
        format!(
            "{} cases with m > ℓ: |S₀ △ Fix P| ≤ {}, points of dom f outside S₀ ≤ {}",
            gap_cases.len(),
            worst_measured(&fix),
            worst_measured(&dom)
        ),
    )
}

fn set_equalities(report: &CheckReport) -> Outcome {
    let cases = [
        "dist_interval_1d",
        "mintime_asym_1d",
        "dist_square_2d",
        "l1_c2",
        "l1_c3",
    ];
    let mut tested = 0;
    let mut ok = true;
    let mut worst = 0.0f64;
    for id in [CheckId::FrechetFormulaS0, CheckId::LimitingFormulaS0] {
        for case in cases {
            let recs: Vec<_> = records(report, id, &[case])
                .into_iter()
                .filter(|r| r.verdict != RecordVerdict::Skip)
                .collect();
            // every case has at least one point of S₀ among its sample points
            ok &= !recs.is_empty();
            for r in recs {
                tested += 1;
                ok &= r.verdict == RecordVerdict::Pass
                    && r.mode == Mode::EqualityProved
                    && r.tolerance == Some(1e-6);
                worst = worst.max(r.measured.unwrap_or(f64::INFINITY));
            }
        }
    }
    outcome(
        ok,
        format!("{tested} (case, point, formula) records: max Hausdorff = {worst:.2e}; every right-side vertex certified with ε = 0"),
    )
}

fn segment(report: &CheckReport) -> Outcome {
    let corpus = builtin_corpus();
    let gauge_cases: Vec<&str> = corpus
        .iter()
        .filter(|c| matches!(c.phi, FuncSpec::Gauge { .. }))
        .map(|c| c.id.as_str())
        .collect();
    let recs = records(report, CheckId::SegmentIdentity, &gauge_cases);
    let pairs_ok = recs.iter().all(|r| r.note.starts_with("20 (x̄, w̄) pairs"));
    outcome(
        recs.len() == gauge_cases.len() && all_pass(&recs) && pairs_ok,
        format!(
            "{} gauge cases × 20 pairs × t ∈ {{.25,.5,.75,1}}: max error beyond ℓ·snap = {:.2e}",
            recs.len(),
            worst_measured(&recs)
        ),
    )
}

/// Ekeland's three conclusions on 100 seeded instances, plus the corpus transfers.
fn ekeland(report: &CheckReport) -> Outcome {
    let mut broken = 0;
    for k in 0..100u64 {
        let mut rng = seeded_rng(k, "acceptance:ekeland");
        let grid = if k % 2 == 0 {
            Grid::line(-1.0, 1.0, 201).unwrap()
        } else {
            Grid::square(-1.0, 1.0, 31).unwrap()
        };
        let g = random_gridfn(grid.clone(), &mut rng);
        let vals = g.to_f64_vec();
        let min = g.min_value();
        let eta: f64 = rng.random_range(0.05..2.0);
        let lambda: f64 = rng.random_range(0.05..1.0);
        let near: Vec<usize> = (0..grid.len()).filter(|&w| vals[w] <= min + eta).collect();
        let wt = near[rng.random_range(0..near.len())];
        let wb = ekeland_point(&g, wt, eta, lambda).unwrap();
        let slope = eta / lambda;
        let value_drop = vals[wb] <= vals[wt];
        let close = grid.dist(wb, wt) <= lambda;
        let minimal = (0..grid.len())
            .all(|w| !vals[w].is_finite() || vals[wb] <= vals[w] + slope * grid.dist(w, wb));
        broken += usize::from(!(value_drop && close && minimal));
    }
    let phi = records(report, CheckId::EkelandTransferPhi, &[]);
    let f = records(report, CheckId::EkelandTransferF, &[]);
    let tested: Vec<_> = phi
        .iter()
        .chain(&f)
        .filter(|r| r.verdict != RecordVerdict::Skip)
        .copied()
        .collect();
    outcome(
        broken == 0 && all_pass(&tested) && tested.len() >= 8,
        format!("{broken} of 100 Ekeland instances broke a conclusion; {} transfer records over S₀ with η = 0.1 all pass", tested.len()),
    )
}

fn gradients(report: &CheckReport) -> Outcome {
    let recs = records(report, CheckId::GradientFormula, &[]);
    let tested: Vec<_> = recs
        .iter()
        .filter(|r| r.verdict != RecordVerdict::Skip)
        .copied()
        .collect();
    let midpoint = recs
        .iter()
        .find(|r| r.case == "moreau_pair_1d" && r.point == Some(vec![0.0]))
        .is_some_and(|r| r.verdict == RecordVerdict::Skip);
    outcome(
        all_pass(&tested) && midpoint,
        format!(
            "{} singleton points: max |∇ − central difference| = {:.2e}; two-point midpoint reported as skip: {midpoint}",
            tested.len(),
            worst_measured(&tested)
        ),
    )
}

fn equivalence(report: &CheckReport) -> Outcome {
    let recs = records(report, CheckId::DifferentiabilityEquivalence, &[]);
    outcome(
        all_pass(&recs) && worst_measured(&recs) == 0.0,
        format!(
            "{} convex functions swept: {} disagreements outside the logged exclusions",
            recs.len(),
            worst_measured(&recs)
        ),
    )
}

fn determinism(bin: &Path, dir: &Path) -> Outcome {
    let mut outputs = Vec::new();
    let mut slowest = Duration::ZERO;
    for run in 0..2 {
        let out = dir.join(format!("report{run}.json"));
        let t = Instant::now();
        let status = Command::new(bin)
            .args(["check", "--corpus", "builtin", "--seed", "0", "--out"])
            .arg(&out)
            .stderr(Stdio::null())
            .status()
            .unwrap();
        slowest = slowest.max(t.elapsed());
        if !status.success() {
            return outcome(false, format!("check exited with {status}"));
        }
        outputs.push(std::fs::read(&out).unwrap());
    }
    outcome(
        outputs[0] == outputs[1] && slowest < Duration::from_secs(60),
        format!(
            "two runs byte-identical: {}; slowest full suite {slowest:.2?}",
            outputs[0] == outputs[1]
        ),
    )
}

fn main() {
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_infconv"));
    let dir = tempfile::tempdir().unwrap();
    let corpus = builtin_corpus();
    let report = run_suite(&corpus, &CheckSelector::all(), 0);

    let results = [
        ("AC1 fast envelope equals brute force", fast_matches_brute()),
        (
            "AC2 Moreau envelope of |x| is Huber",
            huber(&bin, dir.path()),
        ),
        (
            "AC3 transfer inequality and Lipschitz bound",
            transfer_and_lipschitz(&report),
        ),
        (
            "AC4 S₀ is the fixed-point set and contains dom f",
            fixed_points(&report, &corpus),
        ),
        (
            "AC5 subdifferential set equalities on S₀",
            set_equalities(&report),
        ),
        ("AC6 segment identity", segment(&report)),
        (
            "AC7 Ekeland conclusions and subgradient transfers",
            ekeland(&report),
        ),
        ("AC8 Moreau gradient formula", gradients(&report)),
        (
            "AC9 singleton subdifferential iff strictly differentiable",
            equivalence(&report),
        ),
        (
            "AC10 deterministic reports within the time budget",
            determinism(&bin, dir.path()),
        ),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
