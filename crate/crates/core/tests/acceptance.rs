//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use gaussent::protocol::{
    final_cm, final_via_pipeline, initial_cm, mu_m, mu_m_homodyne_branch, r_e_by_bisection,
    r_m_by_bisection, reduced_pair_cm, shared_cm, shared_via_pipeline, stage_state, threshold_r_e,
    threshold_r_l, threshold_r_m, threshold_report, ProtocolParams, Route, Stage, MODE_A,
    MODE_A_PRIME, MODE_B,
};
use gaussent::separability::{
    localizable_mu, measurement_scan_oracle, sigma_x, two_mode_condition, ScanGrid,
};
use gaussent::{sample_preparation, SeparabilityClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn p(r: f64, e: f64) -> ProtocolParams {
    ProtocolParams::new(r, e).expect("valid parameters")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn unit_grid(n: usize) -> impl Iterator<Item = (f64, f64)> {
    (0..n).flat_map(move |i| {
        (0..n).map(move |j| (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64))
    })
}

fn sigma_closed(r: f64, e: f64) -> f64 {
    8.0 * (e - r).exp() * (e - r).sinh() * r.sinh().powi(2)
}

fn c1() -> Outcome {
    let t = threshold_report(0.1).map_err(|e| e.to_string())?;
    let ok = (t.r_l - 0.079).abs() <= 1e-3
        && (t.r_e - 0.106).abs() <= 1e-3
        && (t.r_m - 0.277).abs() <= 1e-3;
    check(
        ok,
        format!(
            "eps=0.1: r_l={:.6} r_e={:.6} r_m={:.6}",
            t.r_l, t.r_e, t.r_m
        ),
    )
}

fn c2() -> Outcome {
    let gap = threshold_report(10.0).map_err(|e| e.to_string())?.gap;
    let limit = 0.5 * (2.0 * (8.0 * 2f64.sqrt() - 1.0) / 11.0).ln();
    check(
        (gap - limit).abs() < 1e-3,
        format!("gap(10)={gap:.7} limit={limit:.7}"),
    )
}

fn c3() -> Outcome {
    let mut worst = 0.0f64;
    for (r, e) in unit_grid(50) {
        let (shared, _) = shared_cm(p(r, e));
        let s = sigma_x(shared.cm(), MODE_A)
            .map_err(|e| e.to_string())?
            .sigma;
        worst = worst.max((s - sigma_closed(r, e)).abs());
    }
    check(
        worst < 1e-9,
        format!("max |Σ_A - closed form| = {worst:.3e} on 50x50"),
    )
}

fn c4() -> Outcome {
    let mut worst = 0.0f64;
    for (r, e) in unit_grid(50) {
        let params = p(r, e);
        let quarter = sigma_closed(r, e) / 4.0;
        let a_prime = sigma_x(final_cm(params, Route::ViaAPrime).cm(), MODE_A_PRIME)
            .map_err(|e| e.to_string())?;
        let a = sigma_x(final_cm(params, Route::ViaA).cm(), MODE_A).map_err(|e| e.to_string())?;
        worst = worst
            .max((a_prime.sigma - quarter).abs())
            .max((a.sigma - quarter).abs());
    }
    check(
        worst < 1e-9,
        format!("max deviation from Σ_A/4 = {worst:.3e} on 50x50"),
    )
}

fn c5() -> Outcome {
    let mut worst_closed = 0.0f64;
    let mut worst_scan_gain = f64::NEG_INFINITY;
    let grid = ScanGrid::square(64);
    for e in [0.05, 0.1, 0.5] {
        for k in 1..=10 {
            let r = 0.1 * k as f64;
            let (shared, _) = shared_cm(p(r, e));
            let numeric = localizable_mu(shared.cm(), MODE_B).map_err(|e| e.to_string())?;
            let closed = mu_m(p(r, e)).map_err(|e| e.to_string())?;
            worst_closed = worst_closed.max((numeric - closed).abs());
            let scan =
                measurement_scan_oracle(shared.cm(), MODE_B, &grid).map_err(|e| e.to_string())?;
            worst_scan_gain = worst_scan_gain.max(numeric - scan.mu);
        }
    }
    check(
        worst_closed < 1e-9 && worst_scan_gain <= 1e-4,
        format!(
            "max |numeric - closed| = {worst_closed:.3e}, max scan gain = {worst_scan_gain:.3e}"
        ),
    )
}

fn c6() -> Outcome {
    let mut worst_mu = 0.0f64;
    let mut worst_root = 0.0f64;
    for e in [0.0, 0.1, 0.5, 1.0] {
        let r_e = threshold_r_e(e).map_err(|e| e.to_string())?;
        let r_m = threshold_r_m(e).map_err(|e| e.to_string())?;
        let mu_pair = two_mode_condition(&reduced_pair_cm(p(r_e, e)))
            .map_err(|e| e.to_string())?
            .mu;
        let mu_loc = mu_m(p(r_m, e)).map_err(|e| e.to_string())?;
        worst_mu = worst_mu
            .max((mu_pair - 1.0).abs())
            .max((mu_loc - 1.0).abs());
        let b_e = r_e_by_bisection(e).map_err(|e| e.to_string())?;
        let b_m = r_m_by_bisection(e).map_err(|e| e.to_string())?;
        worst_root = worst_root.max((b_e - r_e).abs()).max((b_m - r_m).abs());
    }
    check(
        worst_mu < 1e-6 && worst_root < 1e-8,
        format!("max |mu - 1| = {worst_mu:.3e}, max |bisection - closed| = {worst_root:.3e}"),
    )
}

fn c7() -> Outcome {
    let params = p(0.3, 0.1);
    let initial = stage_state(params, Stage::Initial).map_err(|e| e.to_string())?;
    let initial_pair = two_mode_condition(initial_cm(params).cm()).map_err(|e| e.to_string())?;
    let initial_ok =
        !initial_pair.entangled() && initial.report.pairwise.iter().all(|m| !m.entangled);

    let shared = stage_state(params, Stage::Shared)
        .map_err(|e| e.to_string())?
        .report;
    let shared_ok = shared.class_label == SeparabilityClass::OneModeBiseparable
        && shared.separable_splitting.as_deref() == Some("B|(AA′)")
        && shared.pairwise.iter().all(|m| m.metrics.mu >= 1.0 - 1e-9);

    let finals: Vec<SeparabilityClass> = [Stage::FinalViaAPrime, Stage::FinalViaA]
        .into_iter()
        .map(|s| stage_state(params, s).map(|st| st.report.class_label))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let finals_ok = finals
        .iter()
        .all(|c| *c == SeparabilityClass::FullyInseparable);

    check(
        initial_ok && shared_ok && finals_ok,
        format!(
            "initial mu={:.6}, shared {} sep {:?}, finals {} / {}",
            initial_pair.mu, shared.class_label, shared.separable_splitting, finals[0], finals[1]
        ),
    )
}

fn c8() -> Outcome {
    let params = p(0.3, 0.1);
    let first = sample_preparation(params, 1_000_000, 42).map_err(|e| e.to_string())?;
    let second = sample_preparation(params, 1_000_000, 42).map_err(|e| e.to_string())?;
    let identical = first.to_json() == second.to_json();
    check(
        first.max_abs_dev < 0.01 && identical,
        format!(
            "max_abs_dev={:.5}, rerun byte-identical={identical}",
            first.max_abs_dev
        ),
    )
}

fn c9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let params = p(rng.random_range(0.0..2.0), rng.random_range(0.0..1.5));
        let shared = shared_via_pipeline(params).map_err(|e| e.to_string())?;
        worst = worst.max((shared.cm().matrix() - shared_cm(params).0.cm().matrix()).amax());
        for (route, kept) in [
            (Route::ViaAPrime, [MODE_A, MODE_B]),
            (Route::ViaA, [MODE_A_PRIME, MODE_B]),
        ] {
            let piped = final_via_pipeline(params, route).map_err(|e| e.to_string())?;
            worst = worst.max((piped.cm().matrix() - final_cm(params, route).cm().matrix()).amax());
            let pair = piped.cm().reduce(&kept).map_err(|e| e.to_string())?;
            worst = worst.max((pair.matrix() - reduced_pair_cm(params).matrix()).amax());
        }
    }
    check(
        worst < 1e-12,
        format!("max entrywise deviation = {worst:.3e} over 100 pairs"),
    )
}

fn c10() -> Outcome {
    let mut worst = 0.0f64;
    for e in [0.05, 0.1, 0.5, 1.0] {
        let r_l = threshold_r_l(e).map_err(|e| e.to_string())?;
        worst = worst.max((r_l.exp() - mu_m_homodyne_branch(p(r_l, e))).abs());
    }
    check(
        worst < 1e-6,
        format!("max branch jump at r_l = {worst:.3e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("threshold reproduction", c1),
        ("asymptotic gap", c2),
        ("invariant vs closed-form sigma", c3),
        ("final-state sigma identity", c4),
        ("localizable entanglement oracle", c5),
        ("threshold self-consistency", c6),
        ("stage-class ladder", c7),
        ("monte carlo preparation", c8),
        ("pipeline vs closed form", c9),
        ("branch continuity", c10),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {tag} [{name}] {detail} ({secs:.2}s)",
            k + 1
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
