//! Acceptance suite: one pass/fail line per criterion, exit status 1 if any
//! fails. Run with `cargo test --release -p flatflow --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use flatflow::calibration::Calibration;
use flatflow::config::ExperimentSpec;
use flatflow::experiments::{
    barrier_params, barrier_verify, calibrate, curvature_oracle_error, equivalent_radius, run_preset, tangent_first_steps,
    EnergyTally, Outcome,
};
use flatflow::Result;
use flatflow_core::barrier::InvariantReport;
use flatflow_core::shapes::ball;
use flatflow_core::solver::{mm_step, StepParams};

const DX512: &str = "0.001953125";
const DX256: &str = "0.00390625";
const DX128: &str = "0.0078125";

fn spec(text: &str) -> ExperimentSpec {
    ExperimentSpec::from_text(text).expect("acceptance config is valid")
}

/// Tangent balls of radius 0.25 in the plane under `f ≡ 4`, the largest
/// forcing a ball of that radius resists.
fn barrier_spec() -> ExperimentSpec {
    spec(&format!(
        "[grid]\nn = 2\nspacing = {DX512}\n[step]\nh = 4e-4\n[forcing]\nkind = constant\nvalue = 4\n\
         [experiment]\npreset = barrier_verify\nradius = 0.25\nhs = 4e-4, 1e-4, 2.5e-5\n"
    ))
}

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn from_outcome(out: &Outcome) -> Verdict {
        let detail = out.summary.checks.iter().map(|c| format!("{} = {}", c.name, c.measured)).collect::<Vec<_>>();
        Verdict { passed: out.summary.checks.iter().all(|c| c.passed), detail: detail.join("; ") }
    }
}

#[derive(Default)]
struct Context {
    energy: EnergyTally,
    calibration: Option<Calibration>,
    barrier: Option<Vec<InvariantReport>>,
    delta: Option<f64>,
}

impl Context {
    fn record(&mut self, out: &Outcome) {
        self.energy.merge(&out.summary.energy);
    }

    fn calibration(&mut self) -> Result<Calibration> {
        if self.calibration.is_none() {
            let (cal, tally) = calibrate(&barrier_spec())?;
            self.energy.merge(&tally);
            let (p, reports) = barrier_params(&barrier_spec(), &cal)?;
            self.delta = Some(p.delta);
            self.barrier = Some(reports);
            self.calibration = Some(cal);
        }
        Ok(self.calibration.clone().expect("set above"))
    }
}

fn shrinking_ball(ctx: &mut Context) -> Result<Verdict> {
    let out = run_preset(
        &spec(&format!(
            "[grid]\nn = 2\nspacing = {DX512}\n[step]\nh = 2e-3\nhorizon = 0.04\n[forcing]\nkind = constant\nvalue = 0\n\
             [experiment]\npreset = shrinking_ball\nradius = 0.35\ntol = 0.05\n"
        )),
        None,
    )?;
    ctx.record(&out);
    Ok(Verdict::from_outcome(&out))
}

fn stationary_ball(ctx: &mut Context) -> Result<Verdict> {
    let out = run_preset(
        &spec(&format!(
            "[grid]\nn = 2\nspacing = {DX256}\n[step]\nh = 1e-3\nsteps = 40\n[forcing]\nkind = constant\nvalue = 4\n\
             [experiment]\npreset = stationary_ball\nradius = 0.25\nlambda = 4\ntol = 0.02\n"
        )),
        None,
    )?;
    ctx.record(&out);
    Ok(Verdict::from_outcome(&out))
}

/// `e(h) = |(r_min - r)/h + (n-1)/r|` for one step from a ball of radius
/// 0.3 with `Λ = 0`; halving `h` must shrink it by a quarter up to `2Δx/h`.
fn increment_order(ctx: &mut Context) -> Result<Verdict> {
    let r = 0.3;
    let dx = 1.0 / 512.0;
    let grid = flatflow::config::GridSpec::centered(2, dx, &[2.0 * (r + 8.0 * dx); 2])?;
    let e0 = ball(&grid, [0.0; 3], r);
    let r0 = equivalent_radius(&e0);
    let hs = [4e-3, 2e-3, 1e-3];
    let mut errors = Vec::new();
    for h in hs {
        let p = StepParams::new(h, 0.0);
        let (e1, _) = mm_step(&e0, &p)?;
        ctx.energy.add_step(&e0, &e1, &p)?;
        errors.push(((equivalent_radius(&e1) - r0) / h + 1.0 / r0).abs());
    }
    let mut passed = true;
    let mut detail = Vec::new();
    for j in 0..2 {
        let allowed = 0.75 * errors[j] + 2.0 * dx / hs[j];
        passed &= errors[j + 1] <= allowed;
        detail.push(format!("e({}) = {:.4} <= {:.4}", hs[j + 1], errors[j + 1], allowed));
    }
    Ok(Verdict { passed, detail: format!("e({}) = {:.4}; {}", hs[0], errors[0], detail.join("; ")) })
}

fn fattening(ctx: &mut Context) -> Result<Verdict> {
    ctx.calibration()?;
    let delta = ctx.delta.expect("calibrated");
    let plane = spec(&format!(
        "[grid]\nn = 2\nspacing = {DX512}\n[step]\nh = 4e-4\nhorizon = {delta}\n[forcing]\nkind = constant\nvalue = 0\n\
         [experiment]\npreset = tangent_balls\nradius = 0.25\nhs = 4e-4, 1e-4, 2.5e-5\n"
    ));
    let out = run_preset(&plane, None)?;
    ctx.record(&out);
    let mut v = Verdict::from_outcome(&out);
    // The gap of the primal-dual iteration decays like 1/k; the default
    // per-cell tolerance needs over 20000 sweeps of the 3D band. The
    // iteration starts from the neckless initial set, so stopping earlier
    // can only shrink the measured neck.
    let space = spec(&format!(
        "[grid]\nn = 3\nspacing = {DX128}\n[step]\nh = 4e-3\npd_tol = 1e-6\n[forcing]\nkind = constant\nvalue = 0\n\
         [experiment]\npreset = tangent_balls\nradius = 0.25\nhs = 4e-3\n"
    ));
    let first = tangent_first_steps(&space, &space.params.hs, 0.0)?;
    let fs = &first[0];
    ctx.energy.merge(&fs.energy);
    v.passed &= fs.neck >= 4.0 * fs.dx;
    v.detail.push_str(&format!("; n=3 first-step neck = {:.6} (4dx = {:.6})", fs.neck, 4.0 * fs.dx));
    Ok(v)
}

fn barrier_inclusion(ctx: &mut Context) -> Result<Verdict> {
    let cal = ctx.calibration()?;
    let out = barrier_verify(&barrier_spec(), &cal)?;
    ctx.record(&out);
    Ok(Verdict::from_outcome(&out))
}

fn stationary_union(ctx: &mut Context) -> Result<Verdict> {
    let out = run_preset(
        &spec(&format!(
            "[grid]\nn = 2\nspacing = {DX256}\n[step]\nh = 1e-3\nsteps = 40\n[forcing]\nkind = constant\nvalue = 4\n\
             [experiment]\npreset = stationary_union\nradius = 0.25\ngap = 0.2\nlambda = 4\ntol = 0.02\n"
        )),
        None,
    )?;
    ctx.record(&out);
    Ok(Verdict::from_outcome(&out))
}

fn comparison(ctx: &mut Context) -> Result<Verdict> {
    let out = run_preset(
        &spec(&format!(
            "[grid]\nn = 2\nspacing = {DX128}\n[step]\nh = 4e-3\n[forcing]\nkind = constant\nvalue = 4\n\
             [experiment]\npreset = comparison\ncount = 20\nseed = 2024\n"
        )),
        None,
    )?;
    ctx.record(&out);
    Ok(Verdict::from_outcome(&out))
}

fn symmetry(ctx: &mut Context) -> Result<Verdict> {
    let out = run_preset(
        &spec(&format!(
            "[grid]\nn = 2\nspacing = {DX128}\n[step]\nh = 4e-3\n[forcing]\nkind = constant\nvalue = 4\n\
             [experiment]\npreset = symmetry_check\ncount = 10\nseed = 2024\n"
        )),
        None,
    )?;
    ctx.record(&out);
    Ok(Verdict::from_outcome(&out))
}

fn curvature(ctx: &mut Context) -> Result<Verdict> {
    let e2 = curvature_oracle_error(2)?;
    let e3 = curvature_oracle_error(3)?;
    ctx.calibration()?;
    let reports = ctx.barrier.as_ref().expect("calibrated");
    let margin = reports.iter().map(|r| r.certificate.margin()).fold(f64::INFINITY, f64::min);
    Ok(Verdict {
        passed: e2 <= 1e-10 && e3 <= 1e-10 && margin > 0.0 && !reports.is_empty(),
        detail: format!(
            "oracle error n=2 {e2:.2e}, n=3 {e3:.2e}; min certificate margin {margin:.6} over {} indices",
            reports.len()
        ),
    })
}

fn energy(ctx: &mut Context) -> Result<Verdict> {
    let t = ctx.energy;
    Ok(Verdict {
        passed: t.violations == 0 && t.steps > 0,
        detail: format!("{} violations in {} steps (worst excess {:.3e})", t.violations, t.steps, t.worst_excess),
    })
}

type Criterion = fn(&mut Context) -> Result<Verdict>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("shrinking ball radius law", shrinking_ball),
        ("stationary ball", stationary_ball),
        ("one-step increment order", increment_order),
        ("fattening of tangent balls", fattening),
        ("barrier inclusion", barrier_inclusion),
        ("stationary union", stationary_union),
        ("comparison suite", comparison),
        ("symmetry invariance", symmetry),
        ("curvature oracle and certificate", curvature),
        ("energy decrease", energy),
    ];
    let mut ctx = Context::default();
    let mut failures = 0;
    for (j, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match run(&mut ctx) {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!passed);
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if passed { "PASS" } else { "FAIL" },
            j + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
