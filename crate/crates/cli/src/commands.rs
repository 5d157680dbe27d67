use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hopflab_core::calculus::{hopf_product, wirtinger};
use hopflab_core::examples::{ExampleMap, HopfClosedForm};
use hopflab_core::geometry::{DomainSpec, Lattice, Layout};
use hopflab_core::grid::MapGrid;
use hopflab_core::harmonic::{discrete_energy, dyadic_refine, SOLVER_TOLERANCE};
use hopflab_core::minimize::{lift_to_map, minimize_radial_with, nitsche_profile, radial_energy, MinimizeOptions};
use hopflab_core::qdiff::{trace_trajectory, PhiFunction, TrajectoryKind};
use hopflab_core::verify::{fourier_lemma_check, fourier_random_batch, run_suite, CheckReport, FourierSpectrum};
use hopflab_core::Complex64 as C64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{read_csv_config, Output, RunConfig};
use crate::svg::{domain_outline, render, Panel, Polyline, Stroke};
use crate::{
    Cli, Command, ExampleArgs, FourierArgs, LatticeArg, MapId, MapParams, MinimizeArgs, Outcome, PlotArgs, RefineArgs,
    TraceArgs, VerifyArgs,
};

pub fn run(cli: &Cli) -> Result<Outcome> {
    let (name, parameters, seed) = match &cli.command {
        Command::Example(a) => ("example", serde_json::to_value(a)?, None),
        Command::Trace(a) => ("trace", serde_json::to_value(a)?, None),
        Command::Refine(a) => ("refine", serde_json::to_value(a)?, None),
        Command::Minimize(a) => ("minimize", serde_json::to_value(a)?, None),
        Command::Verify(a) => ("verify", serde_json::to_value(a)?, Some(env_seed(a.seed)?)),
        Command::Fourier(a) => ("fourier", serde_json::to_value(a)?, a.random.map(|_| env_seed(a.seed)).transpose()?),
        Command::Plot(a) => ("plot", serde_json::to_value(a)?, None),
    };
    let config = RunConfig {
        subcommand: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        out_dir: cli.out_dir.display().to_string(),
        threads: cli.threads,
        seed,
        parameters,
    };
    let out = Output::new(cli.out_dir.clone(), config);
    match &cli.command {
        Command::Example(a) => example(a, &out),
        Command::Trace(a) => trace(a, &out),
        Command::Refine(a) => refine(a, &out),
        Command::Minimize(a) => minimize(a, &out),
        Command::Verify(a) => verify(a, seed.unwrap_or(a.seed), &out),
        Command::Fourier(a) => fourier(a, seed, &out),
        Command::Plot(a) => plot(a, &out),
    }
}

fn env_seed(flag: u64) -> Result<u64> {
    match std::env::var("HOPFLAB_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| anyhow!("HOPFLAB_SEED must be an unsigned integer, got {s:?}")),
        Err(_) => Ok(flag),
    }
}

fn example_map(id: MapId, p: &MapParams) -> Result<ExampleMap> {
    Ok(match id {
        MapId::Butterfly => ExampleMap::butterfly(),
        MapId::Hammering => ExampleMap::hammering(p.r, p.big_r)?,
        MapId::PiecewiseLinear => ExampleMap::piecewise_linear(),
        MapId::PowerLog => ExampleMap::power_log(p.p)?,
    })
}

/// Parses `a`, `bi`, `a+bi` and `a-bi`, exponents allowed.
pub fn parse_complex(s: &str) -> Result<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || anyhow!("cannot parse complex number {s:?}");
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split =
        (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(C64::new(body[..k].parse().map_err(|_| bad())?, imag(&body[k..])?)),
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

fn read_grid(out: &Output, p: &Path) -> Result<MapGrid> {
    let path = out.path(p);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: not a MapGrid JSON", path.display()))
}

fn example(a: &ExampleArgs, out: &Output) -> Result<Outcome> {
    let map = example_map(a.id, &a.map)?;
    let lattice = match a.lattice {
        LatticeArg::Polar => Lattice::polar(a.n, a.n_theta.unwrap_or(2 * a.n))?,
        LatticeArg::Cartesian => Lattice::cartesian(a.n, a.n)?,
    };
    let grid = MapGrid::from_example(&map, lattice)?;
    let path = out.write_json(&a.out, &grid)?;
    if let Some(d) = &a.density {
        let field = wirtinger(&grid)?;
        let e = field.energy_density();
        let lay = field.layout;
        let rows = (0..lay.len()).filter(|&k| lay.inside(k)).map(|k| {
            let z = lay.node(k);
            vec![z.re, z.im, e[k]]
        });
        out.write_csv(d, &["x", "y", "value"], rows)?;
    }
    println!("example {}: {} nodes on {} -> {}", map.name(), lattice.len(), map.domain, path.display());
    Ok(Outcome::Ok)
}

enum PhiSource {
    Constant,
    Example(ExampleMap),
    Grid(Box<MapGrid>),
}

fn phi_source(name: &str, params: &MapParams, out: &Output) -> Result<PhiSource> {
    if name.ends_with(".json") {
        return Ok(PhiSource::Grid(Box::new(read_grid(out, Path::new(name))?)));
    }
    if name == "one" {
        return Ok(PhiSource::Constant);
    }
    let id = <MapId as clap::ValueEnum>::from_str(name, true)
        .map_err(|_| anyhow!("unknown phi {name:?}; expected one, an example id or a .json grid"))?;
    Ok(PhiSource::Example(example_map(id, params)?))
}

impl PhiSource {
    fn domain(&self) -> DomainSpec {
        match self {
            PhiSource::Constant => DomainSpec::unit_disk(),
            PhiSource::Example(m) => m.domain,
            PhiSource::Grid(g) => g.domain,
        }
    }

    fn phi(&self) -> Result<PhiFunction> {
        Ok(match self {
            PhiSource::Constant => {
                PhiFunction::closed(HopfClosedForm::Constant { c: C64::new(1.0, 0.0) }, DomainSpec::unit_disk())
            }
            PhiSource::Example(m) => PhiFunction::closed(m.analytic_hopf(), m.domain),
            PhiSource::Grid(g) => PhiFunction::sampled(&hopf_product(&wirtinger(g)?)),
        })
    }

    fn map(&self) -> Option<ExampleMap> {
        match self {
            PhiSource::Example(m) => Some(*m),
            _ => None,
        }
    }
}

fn trace(a: &TraceArgs, out: &Output) -> Result<Outcome> {
    let seed = parse_complex(&a.seed)?;
    let kind: TrajectoryKind = a.kind.parse()?;
    let phi = phi_source(&a.phi, &a.map, out)?.phi()?;
    let t = trace_trajectory(&phi, seed, kind, a.step, a.max_length)?;
    let rows = t.rows().map(|(s, x, y, c)| vec![s, x, y, c]);
    let path = out.write_csv(&a.out, &["t", "x", "y", "cum_phi_length"], rows)?;
    println!(
        "trace {:?} from {seed}: {} points, phi-length {:.9}, ends {:?} -> {}",
        kind,
        t.points.len(),
        t.phi_length,
        t.ends,
        path.display()
    );
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct RefineReport {
    target: String,
    level: u32,
    sup_dev: f64,
    energy_delta: f64,
    energy_before: f64,
    cells: usize,
    squares: usize,
    square_diameter: f64,
    pass: bool,
}

fn refine(a: &RefineArgs, out: &Output) -> Result<Outcome> {
    let grid = read_grid(out, &a.grid)?;
    let target: DomainSpec = a.target.parse()?;
    let r = dyadic_refine(&grid, &target, a.level)?;
    let energy_before = discrete_energy(&grid.layout()?, &grid.values);
    let pass = r.sup_dev <= r.square_diameter && r.energy_delta <= SOLVER_TOLERANCE * energy_before.max(1.0);
    let report = RefineReport {
        target: target.to_string(),
        level: a.level,
        sup_dev: r.sup_dev,
        energy_delta: r.energy_delta,
        energy_before,
        cells: r.cells,
        squares: r.squares,
        square_diameter: r.square_diameter,
        pass,
    };
    let path = out.write_json(&a.report, &report)?;
    if let (Some(p), Some(g)) = (&a.out, &r.refined) {
        out.write_json(p, g)?;
    }
    if r.cells == 0 {
        eprintln!("note: no level-{} square fits in {target} with a one-square margin", a.level);
    }
    println!(
        "refine level {}: {} cells, sup_dev {:.3e} (square diameter {:.3e}), energy_delta {:.3e} -> {}",
        a.level,
        r.cells,
        r.sup_dev,
        r.square_diameter,
        r.energy_delta,
        path.display()
    );
    Ok(if pass { Outcome::Ok } else { Outcome::CheckFailed })
}

#[derive(Serialize)]
struct MinimizeReport {
    energy: f64,
    sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nitsche_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_error_vs_nitsche: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coincidence_interval: Option<[f64; 2]>,
    /// Largest |EL residual| at free (non-coincident) nodes.
    el_residual_free: f64,
    /// Smallest EL residual on the coincidence set; the obstacle pushes outward.
    #[serde(skip_serializing_if = "Option::is_none")]
    el_residual_coincident_min: Option<f64>,
    /// Fitted `c` in `φ ≈ c/z²` on the lifted map.
    phi_constant: f64,
    /// Max relative deviation of the lifted `φ` from `c/z²` away from `|z| = 1`,
    /// with `c = −1/4` in the Nitsche case and the fitted value otherwise.
    phi_deviation: f64,
    /// Spread of `H′` within 0.05 of `ρ = 1`.
    h_prime_modulus: f64,
    sweeps: usize,
    active_set_iterations: usize,
    last_update: f64,
}

fn minimize(a: &MinimizeArgs, out: &Output) -> Result<Outcome> {
    let opts = MinimizeOptions { sigma: a.sigma, ..MinimizeOptions::default() };
    let m = minimize_radial_with(a.r, a.big_r, a.nodes, opts)?;
    let p = &m.profile;
    let nitsche = a.sigma.is_none();
    let res = p.el_residual();
    let free = (0..res.len()).filter(|&i| !p.coincident[i]).map(|i| res[i].abs()).fold(0.0, f64::max);
    let coincident_min = (0..res.len()).filter(|&i| p.coincident[i]).map(|i| res[i]).reduce(f64::min);

    let grid = lift_to_map(p, a.n_theta)?;
    let hf = hopf_product(&wirtinger(&grid)?);
    let lay = grid.layout()?;
    let (n1, _) = lay.dims();
    let probe: Vec<usize> = (0..lay.len())
        .filter(|&k| {
            let i = lay.coords(k).0;
            i > 0 && i + 1 < n1 && (lay.node(k).norm() - 1.0).abs() > 0.05
        })
        .collect();
    let fitted = if probe.is_empty() {
        0.0
    } else {
        probe.iter().map(|&k| (hf.phi[k] * lay.node(k) * lay.node(k)).re).sum::<f64>() / probe.len() as f64
    };
    let c = if nitsche { -0.25 } else { fitted };
    let phi_deviation = probe
        .iter()
        .map(|&k| {
            let z = lay.node(k);
            let want = c / (z * z);
            (hf.phi[k] - want).norm() / want.norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);

    let report = MinimizeReport {
        energy: radial_energy(p),
        sigma: m.sigma,
        nitsche_energy: nitsche.then(|| 2.0 * PI * (1.0 / a.r).ln() + 0.5 * PI * (a.big_r.powi(2) - a.big_r.powi(-2))),
        max_error_vs_nitsche: nitsche
            .then(|| p.rho.iter().zip(&p.h).map(|(&r, &h)| (h - nitsche_profile(r)).abs()).fold(0.0, f64::max)),
        coincidence_interval: p.coincidence_interval().map(|(x, y)| [x, y]),
        el_residual_free: free,
        el_residual_coincident_min: coincident_min,
        phi_constant: fitted,
        phi_deviation,
        h_prime_modulus: p.derivative_modulus(1.0, 0.05),
        sweeps: m.sweeps,
        active_set_iterations: m.active_set_iterations,
        last_update: m.last_update,
    };
    let rows = (0..p.len()).map(|i| vec![p.rho[i], p.h[i], p.coincident[i] as u8 as f64]);
    let csv = out.write_csv(&a.out, &["rho", "H", "coincident"], rows)?;
    let json = out.write_json(&a.report, &report)?;
    let interval = report.coincidence_interval.map_or("none".to_string(), |[x, y]| format!("[{x:.6}, {y:.6}]"));
    println!(
        "minimize r={} R={} n={}: energy {:.9}, coincidence {interval} -> {}, {}",
        a.r,
        a.big_r,
        a.nodes,
        report.energy,
        csv.display(),
        json.display()
    );
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    suite: &'a str,
    seed: u64,
    checks: usize,
    unexpected: Vec<&'a str>,
    reports: &'a [CheckReport],
}

fn verify(a: &VerifyArgs, seed: u64, out: &Output) -> Result<Outcome> {
    let reports = run_suite(&a.suite, seed)?;
    let unexpected: Vec<&str> = reports.iter().filter(|r| !r.as_expected()).map(|r| r.id.as_str()).collect();
    if a.verbose {
        for r in &reports {
            println!(
                "{} {} measured {:.6e} bound {:.6e}{}",
                if r.as_expected() { "ok  " } else { "FAIL" },
                r.id,
                r.measured_value,
                r.bound,
                if r.as_expected() && !r.pass { " (expected fail)" } else { "" }
            );
        }
    }
    let body = VerifyReport {
        suite: &a.suite,
        seed,
        checks: reports.len(),
        unexpected: unexpected.clone(),
        reports: &reports,
    };
    let path = out.write_json(&a.report, &body)?;
    let expected_fail = reports.iter().filter(|r| !r.pass && r.as_expected()).count();
    println!(
        "verify {} seed {seed}: {} checks, {} unexpected, {expected_fail} expected failures -> {}",
        a.suite,
        reports.len(),
        unexpected.len(),
        path.display()
    );
    Ok(if unexpected.is_empty() { Outcome::Ok } else { Outcome::CheckFailed })
}

fn fourier(a: &FourierArgs, seed: Option<u64>, out: &Output) -> Result<Outcome> {
    if let (Some(count), Some(seed)) = (a.random, seed) {
        let report = fourier_random_batch(seed, count);
        let path = out.write_json(&a.out, &json!({ "report": report }))?;
        println!(
            "fourier random batch seed {seed}: {} kept, worst ratio {:.6} -> {}",
            report.measured.get("kept").copied().unwrap_or(0.0),
            report.measured_value,
            path.display()
        );
        return Ok(if report.as_expected() { Outcome::Ok } else { Outcome::CheckFailed });
    }
    let map = example_map(a.map, &a.params)?;
    let samples: Vec<C64> = (0..a.samples)
        .map(|k| {
            let z = C64::from_polar(a.rho, 2.0 * PI * k as f64 / a.samples as f64);
            if !map.domain.contains_open(z) {
                bail!("circle of radius {} leaves the domain {}", a.rho, map.domain);
            }
            Ok(map.value_unchecked(z))
        })
        .collect::<Result<_>>()?;
    let spectrum = FourierSpectrum::from_samples(&samples, a.bandwidth)?;
    let report = fourier_lemma_check(&format!("fourier.{}", map.name()), &spectrum, &samples);
    let coefficients: Vec<Value> = (-(a.bandwidth as isize)..=a.bandwidth as isize)
        .map(|n| {
            let c = spectrum.coefficient(n);
            json!({ "n": n, "c": [c.re, c.im] })
        })
        .collect();
    let body = json!({
        "rho": a.rho,
        "coefficients": coefficients,
        "parseval_defect": spectrum.parseval_defect(&samples),
        "report": report,
    });
    let path = out.write_json(&a.out, &body)?;
    println!(
        "fourier {} on |z|={}: ratio {:.6}{} -> {}",
        map.name(),
        a.rho,
        report.measured.get("ratio").copied().unwrap_or(0.0),
        if report.vacuous { " (hypothesis not met)" } else { "" },
        path.display()
    );
    Ok(if report.as_expected() { Outcome::Ok } else { Outcome::CheckFailed })
}

struct TracedCurve {
    points: Vec<C64>,
    kind: TrajectoryKind,
}

fn read_trajectory(out: &Output, p: &Path) -> Result<(TracedCurve, Option<Value>)> {
    let path = out.path(p);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let config = read_csv_config(&text);
    let kind = config
        .as_ref()
        .and_then(|c| c["parameters"]["kind"].as_str())
        .map(str::parse::<TrajectoryKind>)
        .transpose()?
        .unwrap_or(TrajectoryKind::Vertical);
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| anyhow!("{}: missing column {name}", path.display()))
    };
    let (ix, iy) = (col("x")?, col("y")?);
    let mut points = vec![];
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: record {}", path.display(), n + 1))?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| anyhow!("{}: record {} has a malformed field {}", path.display(), n + 1, i + 1))
        };
        points.push(C64::new(get(ix)?, get(iy)?));
    }
    Ok((TracedCurve { points, kind }, config))
}

fn map_from_trace_config(c: &Value, out: &Output) -> Option<PhiSource> {
    let p = &c["parameters"];
    let params = MapParams {
        p: p["p"].as_f64().unwrap_or(4.0),
        r: p["r"].as_f64().unwrap_or(0.5),
        big_r: p["R"].as_f64().unwrap_or(2.0),
    };
    phi_source(p["phi"].as_str()?, &params, out).ok()
}

/// Lattice lines of a grid: rings and rays, or rows and columns, broken at
/// nodes outside the domain.
fn lattice_lines(lay: &Layout, values: &[C64], lines: usize) -> Vec<Vec<C64>> {
    let (n1, n2) = lay.dims();
    let pick = |n: usize| -> Vec<usize> {
        let m = lines.clamp(1, n);
        (0..m).map(|k| (k * n + n / (2 * m)) / m).collect()
    };
    let mut out = vec![];
    let mut push_run = |idx: &mut dyn Iterator<Item = usize>, closed: bool| {
        let mut cur: Vec<C64> = vec![];
        let mut first = None;
        for k in idx {
            if lay.inside(k) {
                first.get_or_insert(k);
                cur.push(values[k]);
            } else if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        }
        if closed {
            if let Some(k) = first {
                cur.push(values[k]);
            }
        }
        if cur.len() > 1 {
            out.push(cur);
        }
    };
    for i in pick(n1) {
        push_run(&mut (0..n2).map(|j| lay.index(i, j)), lay.is_polar());
    }
    for j in pick(n2) {
        push_run(&mut (0..n1).map(|i| lay.index(i, j)), false);
    }
    out
}

fn plot(a: &PlotArgs, out: &Output) -> Result<Outcome> {
    let mut domain_panel = Panel { title: "domain".into(), ..Panel::default() };
    let mut image_panel = Panel { title: "image".into(), ..Panel::default() };
    let mut map = a.map.map(|id| example_map(id, &a.params)).transpose()?;
    let mut domain = None;
    for input in &a.inputs {
        if input.extension().is_some_and(|e| e == "json") {
            let g = read_grid(out, input)?;
            let lay = g.layout()?;
            let nodes: Vec<C64> = (0..lay.len()).map(|k| lay.node(k)).collect();
            for line in lattice_lines(&lay, &nodes, a.lines) {
                domain_panel.curves.push(Polyline { points: line, stroke: Stroke::Thin, closed: false });
            }
            for line in lattice_lines(&lay, &g.values, a.lines) {
                image_panel.curves.push(Polyline { points: line, stroke: Stroke::Thin, closed: false });
            }
            domain.get_or_insert(g.domain);
        } else {
            let (curve, config) = read_trajectory(out, input)?;
            if let Some(src) = config.as_ref().and_then(|c| map_from_trace_config(c, out)) {
                domain.get_or_insert(src.domain());
                if map.is_none() {
                    map = src.map();
                }
            }
            let stroke = match curve.kind {
                TrajectoryKind::Vertical => Stroke::Solid,
                TrajectoryKind::Horizontal => Stroke::Dashed,
            };
            domain_panel.curves.push(Polyline { points: curve.points, stroke, closed: false });
        }
    }
    if let Some(d) = domain {
        domain_panel.outline = domain_outline(&d);
    }
    if let Some(m) = &map {
        image_panel.title = format!("image under {}", m.name());
        let traced: Vec<Polyline> = domain_panel.curves.iter().filter(|p| p.stroke != Stroke::Thin).cloned().collect();
        for p in traced {
            let points = p.points.iter().map(|&z| m.value_unchecked(z)).collect();
            image_panel.curves.push(Polyline { points, ..p });
        }
    }
    let mut panels = vec![domain_panel];
    if !image_panel.curves.is_empty() {
        panels.push(image_panel);
    }
    let path = out.write_text(&a.out, &render(&panels))?;
    println!("plot: {} inputs, {} panels -> {}", a.inputs.len(), panels.len(), path.display());
    Ok(Outcome::Ok)
}
