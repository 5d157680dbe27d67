//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits nonzero when any criterion fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use hopflab_core::calculus::{dirichlet_energy, hopf_product, jacobian, wirtinger, wirtinger_fd};
use hopflab_core::examples::{ExampleMap, HopfClosedForm};
use hopflab_core::geometry::{DomainSpec, Lattice};
use hopflab_core::grid::MapGrid;
use hopflab_core::harmonic::{dyadic_refine, harmonic_replace, SubdomainMask, SOLVER_TOLERANCE};
use hopflab_core::minimize::{lift_to_map, minimize_radial, nitsche_profile};
use hopflab_core::qdiff::{
    bezier, minimality_test, phi_length, trace_trajectory, PhiFunction, Termination, Trajectory, TrajectoryKind,
};
use hopflab_core::verify::{
    equipartition_check, fourier_outcome, fourier_random_batch, isoperimetric_defect_check, lipschitz_bound_check,
    lipschitz_negative_control, CheckReport, FourierSpectrum,
};
use hopflab_core::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn nitsche_minimizer() -> Outcome {
    let start = Instant::now();
    let p = minimize_radial(0.5, 2.0, 2000).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let max_err = p.rho.iter().zip(&p.h).map(|(&r, &h)| (h - nitsche_profile(r)).abs()).fold(0.0, f64::max);
    let (a, b) = p.coincidence_interval().ok_or("empty coincidence set")?;
    let cell = p.spacing();
    ensure(max_err <= 1e-3, || format!("max error {max_err:.3e}"))?;
    ensure((a - 0.5).abs() <= cell && (b - 1.0).abs() <= cell, || format!("coincidence [{a}, {b}]"))?;
    ensure(secs <= 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("max error {max_err:.2e}, coincidence [{a:.5}, {b:.5}], {secs:.2} s"))
}

fn lifted_hopf_differential() -> Outcome {
    let p = minimize_radial(0.5, 2.0, 2000).map_err(err)?;
    let g = lift_to_map(&p, 256).map_err(err)?;
    let hf = hopf_product(&wirtinger(&g).map_err(err)?);
    let lay = g.layout().map_err(err)?;
    let (n1, _) = lay.dims();
    let mut worst: f64 = 0.0;
    for k in 0..lay.len() {
        let z = lay.node(k);
        let i = lay.coords(k).0;
        if i > 0 && i + 1 < n1 && (z.norm() - 1.0).abs() > 0.05 {
            let want = -0.25 / (z * z);
            worst = worst.max((hf.phi[k] - want).norm() / want.norm());
        }
    }
    ensure(worst <= 0.01, || format!("lifted relative deviation {worst:.3e}"))?;

    let ham = ExampleMap::hammering(0.5, 2.0).map_err(err)?;
    let g = MapGrid::from_example(&ham, Lattice::polar(256, 512).map_err(err)?).map_err(err)?;
    let hf = hopf_product(&wirtinger(&g).map_err(err)?);
    let lay = g.layout().map_err(err)?;
    let analytic = (0..lay.len())
        .map(|k| {
            let z = lay.node(k);
            let want = -0.25 / (z * z);
            (hf.phi[k] - want).norm() / want.norm()
        })
        .fold(0.0, f64::max);
    ensure(analytic <= 1e-10, || format!("analytic relative deviation {analytic:.3e}"))?;
    Ok(format!("lifted {worst:.2e} (<= 1e-2), analytic {analytic:.2e} (<= 1e-10)"))
}

fn away_from_ray(z: C64) -> bool {
    let rho = z.norm();
    let t = z.im.atan2(z.re).rem_euclid(2.0 * PI);
    (0.2..=0.9).contains(&rho) && t > 0.2 && t < 2.0 * PI - 0.2
}

fn printed_identities() -> Outcome {
    let bf = ExampleMap::butterfly();
    let grid = MapGrid::from_example(&bf, Lattice::polar(128, 256).map_err(err)?).map_err(err)?;
    let field = wirtinger(&grid).map_err(err)?;
    let jac = jacobian(&field);
    let mut worst: f64 = 0.0;
    for (k, &j) in jac.iter().enumerate() {
        let pi = bf.printed_identities(field.layout.node(k)).map_err(err)?;
        let e = 2.0 * (field.dz[k].norm_sqr() + field.dzbar[k].norm_sqr());
        let scale = pi.energy_density;
        worst = worst
            .max((e - pi.energy_density).abs() / scale)
            .max((j - pi.jacobian).abs() / scale)
            .max((field.dz[k].norm_sqr() - pi.dz_sq).abs() / scale);
    }
    ensure(worst <= 1e-12, || format!("analytic identities off by {worst:.3e}"))?;

    let errors = |n: usize| -> Result<[f64; 3], String> {
        let grid = MapGrid::from_example(&bf, Lattice::polar(n, 2 * n).map_err(err)?).map_err(err)?;
        let f = wirtinger_fd(&grid).map_err(err)?;
        let jac = jacobian(&f);
        let mut acc = [0.0; 3];
        for k in (0..f.layout.len()).filter(|&k| away_from_ray(f.layout.node(k))) {
            let pi = bf.printed_identities(f.layout.node(k)).map_err(err)?;
            let w = f.layout.cell_area(k);
            let e = 2.0 * (f.dz[k].norm_sqr() + f.dzbar[k].norm_sqr());
            acc[0] += w * (e - pi.energy_density).powi(2);
            acc[1] += w * (jac[k] - pi.jacobian).powi(2);
            acc[2] += w * (f.dz[k].norm_sqr() - pi.dz_sq).powi(2);
        }
        Ok(acc.map(f64::sqrt))
    };
    let e = [errors(128)?, errors(256)?, errors(512)?];
    let mut ratios = vec![];
    for q in 0..3 {
        for w in e.windows(2) {
            ratios.push(w[0][q] / w[1][q]);
        }
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    ensure(lo >= 3.5 && hi <= 4.5, || format!("FD error ratios in [{lo:.3}, {hi:.3}]"))?;
    Ok(format!("analytic {worst:.1e}, FD error ratios in [{lo:.3}, {hi:.3}]"))
}

fn dirichlet_energies() -> Outcome {
    let lattice = Lattice::polar(512, 512).map_err(err)?;
    let id = MapGrid::from_fn(
        DomainSpec::annulus(1.0, 2.0).map_err(err)?,
        lattice,
        |z| z,
        Some(|_: C64| (C64::new(1.0, 0.0), C64::new(0.0, 0.0))),
    )
    .map_err(err)?;
    let butterfly = MapGrid::from_example(&ExampleMap::butterfly(), lattice).map_err(err)?;
    let hammering = MapGrid::from_example(&ExampleMap::hammering(0.5, 2.0).map_err(err)?, lattice).map_err(err)?;
    let mut line = vec![];
    for (name, g, want) in [
        ("identity", id, 6.0 * PI),
        ("butterfly", butterfly, 10.0 * PI),
        ("hammering", hammering, 2.0 * PI * 2f64.ln() + 15.0 * PI / 8.0),
    ] {
        let e = dirichlet_energy(&wirtinger(&g).map_err(err)?);
        let rel = e / want - 1.0;
        ensure(rel.abs() <= 0.01, || format!("{name}: {e} vs {want}"))?;
        line.push(format!("{name} {rel:+.1e}"));
    }
    Ok(format!("relative errors {}", line.join(", ")))
}

fn fourier_lemma() -> Outcome {
    let start = Instant::now();
    let batch = fourier_random_batch(42, 1000);
    let kept = batch.measured["kept"];
    ensure(batch.pass && kept == 1000.0 && batch.measured["failures"] == 0.0, || {
        format!("batch worst ratio {}, kept {kept}", batch.measured_value)
    })?;
    let m = 64;
    let circle: Vec<C64> = (0..m).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)).collect();
    let spec = FourierSpectrum::from_samples(&circle, 8).map_err(err)?;
    let o = fourier_outcome(&spec, &circle);
    ensure((o.ratio - 1.0).abs() <= 1e-12 && !o.hypothesis, || format!("circle ratio {}", o.ratio))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!(
        "1000 filtered polynomials, worst ratio {:.4}; circle ratio {:.3}; {secs:.2} s",
        batch.measured_value, o.ratio
    ))
}

fn lipschitz() -> Outcome {
    let bf = lipschitz_bound_check(&ExampleMap::butterfly(), 512).map_err(err)?;
    let ham = lipschitz_bound_check(&ExampleMap::hammering(0.5, 2.0).map_err(err)?, 512).map_err(err)?;
    ensure(bf.pass && ham.pass, || format!("ratios {} {}", bf.measured_value, ham.measured_value))?;
    let control = lipschitz_negative_control().map_err(err)?;
    let seq: Vec<f64> = control.measured.iter().filter(|(k, _)| k.starts_with("ratio_")).map(|(_, v)| *v).collect();
    let growing = seq.windows(2).all(|w| w[1] > w[0]);
    ensure(!control.pass && control.as_expected() && growing, || {
        format!("control measured {} (growing {growing})", control.measured_value)
    })?;
    Ok(format!(
        "butterfly {:.4}, hammering {:.4} (<= 72); power_log(4) control grows to {:.1} (expected fail)",
        bf.measured_value, ham.measured_value, control.measured_value
    ))
}

fn equipartition() -> Outcome {
    let mut worst: f64 = 0.0;
    for map in [ExampleMap::butterfly(), ExampleMap::hammering(0.5, 2.0).map_err(err)?] {
        let reports = equipartition_check(&map, 16);
        ensure(reports.len() == 16, || format!("{} circles", reports.len()))?;
        for r in &reports {
            ensure(r.pass, || format!("{}: defect {:.3e}", r.id, r.measured_value))?;
            worst = worst.max(r.measured_value);
        }
    }
    Ok(format!("32 circles, worst relative defect {worst:.2e} (<= 1e-3)"))
}

fn harmonic_replacement() -> Outcome {
    let cart = Lattice::cartesian(96, 96).map_err(err)?;
    let grids = [
        MapGrid::from_example(&ExampleMap::butterfly(), cart).map_err(err)?,
        MapGrid::from_example(&ExampleMap::piecewise_linear(), cart).map_err(err)?,
        MapGrid::from_example(&ExampleMap::power_log(3.0).map_err(err)?, cart).map_err(err)?,
        MapGrid::from_example(&ExampleMap::hammering(0.5, 2.0).map_err(err)?, Lattice::polar(96, 192).map_err(err)?)
            .map_err(err)?,
    ];
    let masks: [(C64, f64); 4] = [
        (C64::new(0.0, 0.0), 0.4),
        (C64::new(0.3, 0.2), 0.3),
        (C64::new(-0.4, -0.3), 0.25),
        (C64::new(0.5, 0.0), 0.35),
    ];
    let mut pairs = 0;
    for g in &grids {
        let lay = g.layout().map_err(err)?;
        for &(c, r) in &masks {
            let (c, r) = if lay.is_polar() { (c * 2.0 + C64::new(0.0, 1.0), 0.3) } else { (c, r) };
            let mask = SubdomainMask::from_predicate(&lay, |z| (z - c).norm() < r).map_err(err)?;
            let rep = harmonic_replace(g, &mask).map_err(err)?;
            let tol = SOLVER_TOLERANCE * rep.energy_before.max(1.0);
            ensure(rep.energy_after <= rep.energy_before + tol, || {
                format!("energy rose {} -> {}", rep.energy_before, rep.energy_after)
            })?;
            pairs += 1;
        }
    }
    let bf = MapGrid::from_example(&ExampleMap::butterfly(), Lattice::polar(128, 256).map_err(err)?).map_err(err)?;
    let r = dyadic_refine(&bf, &DomainSpec::disk(3.0).map_err(err)?, 4).map_err(err)?;
    ensure(r.cells > 0 && r.sup_dev <= r.square_diameter && r.energy_delta <= 0.0, || {
        format!("refine: cells {}, sup_dev {}, delta {}", r.cells, r.sup_dev, r.energy_delta)
    })?;
    Ok(format!(
        "{pairs} (grid, mask) pairs non-increasing; level 4: {} cells, sup_dev {:.2e} <= {:.2e}, energy_delta {:.2e}",
        r.cells, r.sup_dev, r.square_diameter, r.energy_delta
    ))
}

fn random_point(rng: &mut ChaCha8Rng, d: &DomainSpec) -> C64 {
    let (x0, x1, y0, y1) = d.bounding_box();
    loop {
        let z = C64::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
        if d.contains_open(z) {
            return z;
        }
    }
}

/// Runs 100 random Bézier competitors joining `ends` against the arc.
fn competitor_batch(
    phi: &PhiFunction,
    t: &Trajectory,
    arc: (C64, C64),
    ends: (C64, C64),
    seed: u64,
) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (t.project(arc.0).0, t.project(arc.1).0);
    let (mut done, mut margin) = (0, f64::INFINITY);
    while done < 100 {
        let c =
            bezier([ends.0, random_point(&mut rng, &phi.domain), random_point(&mut rng, &phi.domain), ends.1], 2000);
        if !c.iter().all(|&z| phi.domain.contains(z)) {
            continue;
        }
        let rec = minimality_test(phi, t, s, &c).map_err(err)?;
        ensure(rec.pass, || format!("competitor {done} shorter: {rec:?}"))?;
        margin = margin.min(rec.competitor_length - rec.arc_length);
        done += 1;
    }
    Ok(margin)
}

fn trajectory_engine() -> Outcome {
    let ham = ExampleMap::hammering(0.5, 2.0).map_err(err)?;
    let phi = PhiFunction::closed(HopfClosedForm::InverseSquare { c: C64::new(-0.25, 0.0) }, ham.domain);
    let mut drift: f64 = 0.0;
    for k in 0..8 {
        let angle = 2.0 * PI * (k as f64 + 0.25) / 8.0;
        let v =
            trace_trajectory(&phi, C64::from_polar(1.2, angle), TrajectoryKind::Vertical, 1e-3, 100.0).map_err(err)?;
        for z in &v.points {
            drift = drift.max((C64::from_polar(1.0, -angle) * z).arg().abs());
        }
        let h = trace_trajectory(
            &phi,
            C64::from_polar(0.6 + 0.15 * k as f64, angle),
            TrajectoryKind::Horizontal,
            1e-3,
            100.0,
        )
        .map_err(err)?;
        let r0 = h.points[0].norm();
        let round = h.points.iter().map(|z| (z.norm() - r0).abs()).fold(0.0, f64::max);
        ensure(h.termination == Termination::ClosedLoop && round < 1e-6, || format!("horizontal {k}: {round:.2e}"))?;
    }
    ensure(drift <= 1e-6, || format!("angular drift {drift:.3e}"))?;
    let ray: Vec<C64> = (0..=2000).map(|k| C64::new(0.5 + 0.5 * k as f64 / 2000.0, 0.0)).collect();
    let len = phi_length(&ray, &phi).map_err(err)?;
    ensure((len - 0.5 * 2f64.ln()).abs() <= 1e-6, || format!("radial phi-length {len}"))?;

    let bf = ExampleMap::butterfly();
    let phi_b = PhiFunction::closed(bf.analytic_hopf(), bf.domain);
    let t = trace_trajectory(&phi_b, C64::new(0.5, 0.0), TrajectoryKind::Vertical, 1e-3, 100.0).map_err(err)?;
    let m1 = competitor_batch(
        &phi_b,
        &t,
        (C64::new(0.1, 0.0), C64::new(0.9, 0.0)),
        (C64::new(0.05, 0.0), C64::new(0.95, 0.0)),
        1,
    )?;

    let t = trace_trajectory(&phi, C64::new(1.0, 0.0), TrajectoryKind::Vertical, 1e-3, 100.0).map_err(err)?;
    let arc = (C64::new(0.7, 0.0), C64::new(1.6, 0.0));
    let s = (t.project(arc.0).0, t.project(arc.1).0);
    for turns in [-2.0, -1.0, 1.0, 2.0, 3.0] {
        let spiral: Vec<C64> = (0..=4000)
            .map(|k| k as f64 / 4000.0)
            .map(|u| C64::from_polar(0.6 * 3f64.powf(u), 2.0 * PI * turns * u))
            .collect();
        let rec = minimality_test(&phi, &t, s, &spiral).map_err(err)?;
        ensure(rec.pass, || format!("spiral {turns}: {rec:?}"))?;
    }
    let m2 = competitor_batch(&phi, &t, arc, (C64::new(0.6, 0.0), C64::new(1.8, 0.0)), 2)?;

    let one = PhiFunction::closed(HopfClosedForm::Constant { c: C64::new(1.0, 0.0) }, DomainSpec::unit_disk());
    let t = trace_trajectory(&one, C64::new(0.0, 0.0), TrajectoryKind::Vertical, 1e-3, 10.0).map_err(err)?;
    let m3 = competitor_batch(
        &one,
        &t,
        (C64::new(0.0, -0.4), C64::new(0.0, 0.4)),
        (C64::new(0.0, -0.5), C64::new(0.0, 0.5)),
        3,
    )?;
    Ok(format!(
        "drift {drift:.1e} rad, circles closed, phi-length error {:.1e}; 3x100 competitors pass (margins {m1:.3}, {m2:.3}, {m3:.3})",
        (len - 0.5 * 2f64.ln()).abs()
    ))
}

fn isoperimetric() -> Outcome {
    let reports: Vec<CheckReport> =
        isoperimetric_defect_check(&ExampleMap::butterfly(), &[0.1, 0.3, 0.5, 0.7, 0.9]).map_err(err)?;
    ensure(reports.len() == 5, || format!("{} radii", reports.len()))?;
    let margins: Vec<String> = reports.iter().map(|r| format!("{:.3e}", r.margin)).collect();
    ensure(reports.iter().all(|r| r.pass && r.margin > 0.0), || format!("margins {margins:?}"))?;
    Ok(format!("margins {}", margins.join(", ")))
}

fn determinism() -> Outcome {
    let run = || -> Result<Vec<u8>, String> {
        let dir = tempfile::tempdir().map_err(err)?;
        let out = Command::new(env!("CARGO_BIN_EXE_hopflab"))
            .current_dir(dir.path())
            .env_remove("HOPFLAB_SEED")
            .args(["verify", "--suite", "all", "--seed", "42", "--report", "report.json"])
            .output()
            .map_err(err)?;
        ensure(out.status.success(), || {
            format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
        })?;
        std::fs::read(dir.path().join("out/report.json")).map_err(err)
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, || "reports differ".into())?;
    Ok(format!("two runs, {} identical bytes", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("Nitsche minimizer", nitsche_minimizer),
        ("lifted Hopf differential", lifted_hopf_differential),
        ("printed identities", printed_identities),
        ("Dirichlet energies", dirichlet_energies),
        ("Fourier lemma", fourier_lemma),
        ("Lipschitz bound", lipschitz),
        ("equipartition", equipartition),
        ("harmonic replacement", harmonic_replacement),
        ("trajectory engine", trajectory_engine),
        ("isoperimetric defect", isoperimetric),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
