//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use plate_lab::carleman::{Poly2, WeightFunction};
use plate_lab::spectral::compute_spectrum;
use plate_lab::{assemble_generator, assemble_hinged, build_mesh, Grid2D, PlateState, C64};
use plate_lab_cli::experiments::{bracket_agreement, lambda_sweep, log_log_slope, resolvent_samples};
use plate_lab_cli::{load_config, parse_config, run_experiment, ExperimentConfig, Subcommand, Summary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Verdict = Result<String, String>;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> ExperimentConfig {
    load_config(&configs_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Runs an experiment in process and fails on any violated check.
fn run(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<Summary, String> {
    let out = run_experiment(cmd, cfg).map_err(|e| e.to_string())?;
    let failed = out.summary.failed_checks();
    if failed.is_empty() {
        Ok(out.summary)
    } else {
        Err(format!("{} failed checks: {}", cmd.name(), failed.join(", ")))
    }
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn num(v: &Value, path: &[&str]) -> f64 {
    let mut cur = v;
    for p in path {
        cur = &cur[*p];
    }
    cur.as_f64().unwrap_or(f64::NAN)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mesh = build_mesh(1.0, 0.5, 1.0, 2.0, 201).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut max_re = f64::NEG_INFINITY;
    for (a, b) in [(1.0, 1.0), (0.5, 2.0)] {
        let gen = assemble_generator(&mesh, a, b).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let mut draw = |n: usize| -> Vec<C64> {
                (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
            };
            let mut u = draw(mesh.n);
            u[0] = C64::new(0.0, 0.0);
            let v = draw(mesh.n);
            let slope = draw(1)[0];
            let z = gen.energy_coords(&PlateState { u, v, slope }).map_err(|e| e.to_string())?;
            let lhs = gen.inner(&gen.apply(&z), &z).re;
            let rhs = -gen.boundary_dissipation(&z);
            worst = worst.max((lhs - rhs).abs() / rhs.abs());
            max_re = max_re.max(lhs);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-8, format!("relative identity defect {worst:e} > 1e-8"))?;
    ensure(max_re <= 0.0, format!("Re<Az, z> = {max_re:e} > 0"))?;
    ensure(secs < 5.0, format!("runtime {secs:.2} s >= 5 s"))?;
    Ok(format!("200 states, max relative defect {worst:.2e}, max Re<Az,z> {max_re:.3e}, {secs:.2} s"))
}

fn criterion_2() -> Verdict {
    let damped = run(Subcommand::Simulate, &config("simulate_damped.json"))?;
    let ledger = num(&damped.results, &["energy_ledger_defect"]);
    let steps = damped.results["steps"].as_u64().unwrap_or(0);
    ensure(steps == 10_000, format!("expected 1e4 steps, ran {steps}"))?;
    ensure(ledger <= 5e-3, format!("ledger defect {ledger:e}"))?;
    let undamped = run(Subcommand::Simulate, &config("simulate_undamped.json"))?;
    let e0 = num(&undamped.results, &["initial_energy"]);
    let et = num(&undamped.results, &["final_energy"]);
    let drift = (et - e0).abs() / e0;
    ensure(drift <= 1e-10, format!("undamped |E(T) - E(0)| / E(0) = {drift:e}"))?;
    Ok(format!("damped ledger defect {ledger:.3e} (<= 5e-3), undamped drift {drift:.2e} (<= 1e-10)"))
}

fn criterion_3() -> Verdict {
    use std::f64::consts::PI;
    let ns = [101, 201, 401];
    let mut errs = Vec::new();
    for n in ns {
        let mesh = build_mesh(1.0, 0.5, 1.0, 1.0, n).map_err(|e| e.to_string())?;
        let rep = compute_spectrum(&assemble_hinged(&mesh)).map_err(|e| e.to_string())?;
        let mut pos: Vec<f64> = rep.eigenvalues.iter().filter(|z| z.im > 0.0).map(|z| z.im).collect();
        pos.sort_by(f64::total_cmp);
        let re_max = rep.eigenvalues.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        ensure(re_max < 1e-8, format!("N = {n}: |Re mu| up to {re_max:e}"))?;
        errs.push((1..=5).map(|k| (pos[k - 1] - (k as f64 * PI).powi(2)).abs()).collect::<Vec<f64>>());
    }
    let mut orders = Vec::new();
    for k in 0..5 {
        for pair in errs.windows(2) {
            orders.push((pair[0][k] / pair[1][k]).log2());
        }
    }
    let lo = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = orders.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ensure(lo >= 1.7 && hi <= 2.3, format!("observed orders in [{lo:.3}, {hi:.3}]"))?;
    Ok(format!("k = 1..5, N in {{101, 201, 401}}: observed order in [{lo:.3}, {hi:.3}]"))
}

fn criterion_4() -> Verdict {
    let spec = run(Subcommand::Spectrum, &config("spectrum_damped.json"))?;
    let abscissa = num(&spec.results, &["spectral_abscissa"]);
    let scan = run(Subcommand::Scan, &config("scan_damped.json"))?;
    let r = &scan.results;
    let (c, cp) = (num(r, &["growth_fit", "c"]), num(r, &["growth_fit", "c_prime"]));
    let (c1, c2, c3) = (
        num(r, &["fitted_region", "c1"]),
        num(r, &["fitted_region", "c2"]),
        num(r, &["fitted_region", "c3"]),
    );
    let inside = r["singular_points_in_region"].as_array().map(Vec::len).unwrap_or(usize::MAX);
    ensure(abscissa < 0.0, format!("spectral abscissa {abscissa}"))?;
    ensure(c.is_finite() && cp.is_finite(), "growth envelope not finite")?;
    ensure(inside == 0, format!("{inside} singular scan points inside the region"))?;
    Ok(format!(
        "abscissa {abscissa:.4}; ln|R| <= {c:.3} + {cp:.3e} |Re l|; region C1 = {c1:.4}, C2 = {c2:.3e}, C3 = {c3}; no singular points inside"
    ))
}

fn criterion_5() -> Verdict {
    let cfg = config("resolvent.json");
    let mesh = cfg.mesh().map_err(|e| e.to_string())?;
    let gen = assemble_generator(&mesh, 1.0, 1.0).map_err(|e| e.to_string())?;
    let samples = resolvent_samples(&cfg, &gen).map_err(|e| e.to_string())?;
    ensure(samples.len() == 20, "expected 20 samples")?;
    ensure(
        samples.iter().all(|(l, _)| (1.0..=50.0).contains(&l.re) && l.im.abs() <= 1e-2),
        "lambda outside Re in [1, 50], |Im| <= 1e-2",
    )?;
    let s = run(Subcommand::FactorizedCheck, &cfg)?;
    let worst = num(&s.results, &["max_relative_difference"]);
    ensure(worst <= 1e-8, format!("max relative difference {worst:e}"))?;
    Ok(format!("20 random (lambda, F, G): max relative difference {worst:.2e}"))
}

fn criterion_6() -> Verdict {
    let s = run(Subcommand::TraceCheck, &config("resolvent.json"))?;
    let max = num(&s.results, &["max_ratio"]);
    let med = num(&s.results, &["median_ratio"]);
    ensure(max.is_finite(), "nonfinite ratio")?;
    ensure(max <= 10.0 * med, format!("max {max:e} > 10 x median {med:e}"))?;
    Ok(format!("constant (max ratio) {max:.4e}, median {med:.4e}, max/median {:.2}", max / med))
}

fn criterion_7() -> Verdict {
    let s = run(Subcommand::Simulate, &config("simulate_long.json"))?;
    let fit = &s.results["decay_fit"];
    let c_log = num(fit, &["c_log"]);
    let worst = s
        .checks
        .iter()
        .find(|c| c.name == "log_bound_worst_sample_ratio")
        .map(|c| c.value)
        .unwrap_or(f64::NAN);
    let steps = s.results["steps"].as_u64().unwrap_or(0);
    ensure(steps == 1_000_000, format!("expected 1e6 steps, ran {steps}"))?;
    ensure(c_log.is_finite(), "C_log not finite")?;
    ensure(worst <= 1.0 + 1e-12, format!("bound exceeded by factor {worst}"))?;
    ensure(
        s.notes.iter().any(|n| n.contains("not reproducible at desk scale")),
        "summary lacks the statement on logarithmic tightness",
    )?;
    Ok(format!(
        "T = 1e3: C_log = {c_log:.4e} (k = 1), bound holds at all {} samples; exp fit C = {:.3e}, omega = {:.3e}, semi-discrete rate {:.3}",
        num(fit, &["samples"]),
        num(fit, &["c_exp"]),
        num(fit, &["omega"]),
        num(&s.results, &["semi_discrete_energy_rate"]),
    ))
}

fn poly(terms: &[(u32, u32, f64)]) -> Poly2 {
    Poly2::from_triples(terms).expect("degree <= 4")
}

fn criterion_8() -> Verdict {
    let grid = Grid2D::unit_square(64).map_err(|e| e.to_string())?;
    let weights = [
        ("x1", poly(&[(1, 0, 1.0)])),
        ("0.6 x1 + 0.8 x2", poly(&[(1, 0, 0.6), (0, 1, 0.8)])),
        (
            "((x1 + 1)^2 + (x2 + 1)^2) / 2",
            poly(&[(2, 0, 0.5), (1, 0, 1.0), (0, 2, 0.5), (0, 1, 1.0), (0, 0, 1.0)]),
        ),
        (
            "x1 + x2 + 0.5 x1^2 - 0.3 x1 x2 + 0.4 x2^2",
            poly(&[(1, 0, 1.0), (0, 1, 1.0), (2, 0, 0.5), (1, 1, -0.3), (0, 2, 0.4)]),
        ),
        (
            "x1 + 0.2 x1^3 + 0.3 x1 x2 + 0.1 x2^4",
            poly(&[(1, 0, 1.0), (3, 0, 0.2), (1, 1, 0.3), (0, 4, 0.1)]),
        ),
    ];
    let mut worst = 0.0f64;
    let mut printed = 0.0f64;
    for (k, (name, psi)) in weights.iter().enumerate() {
        let w = WeightFunction::new(*psi, 2.0).map_err(|e| e.to_string())?;
        let a = bracket_agreement(&w, &grid, 1000, 16, 100 + k as u64);
        ensure(a.samples == 1000, format!("{name}: only {} samples", a.samples))?;
        worst = worst.max(a.max_relative_difference);
        printed = printed.max(a.printed_form_max_relative_discrepancy);
    }
    ensure(worst <= 1e-8, format!("dual-path relative difference {worst:e}"))?;
    let lambdas = [1.0, 2.0, 4.0, 8.0];
    let mins = lambda_sweep(poly(&[(1, 0, 1.0)]), &grid, &lambdas, 16).map_err(|e| e.to_string())?;
    let slope = log_log_slope(&lambdas, &mins);
    ensure((slope - 4.0).abs() <= 0.1, format!("log-log slope {slope}"))?;
    Ok(format!(
        "5 weights x 1000 samples: max relative difference {worst:.2e}; lambda sweep slope {slope:.4}; |grad psi|^2 variant off by up to {printed:.3} (relative)"
    ))
}

fn criterion_9() -> Verdict {
    let lin = run(Subcommand::Subellipticity, &config("subelliptic_linear.json"))?;
    let cvx = run(Subcommand::Subellipticity, &config("subelliptic_convex.json"))?;
    let cfg = config("subelliptic_saddle.json");
    let sad = run(Subcommand::Subellipticity, &cfg)?;
    let witness: Vec<f64> = sad.results["witness"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    let grid = cfg.carleman().and_then(|c| c.grid()).map_err(|e| e.to_string())?;
    ensure(witness.len() == 2, "no witness reported")?;
    let dist = ((witness[0] - 0.45).powi(2) + (witness[1] - 0.4).powi(2)).sqrt();
    ensure(dist <= grid.cell_diagonal(), format!("witness {witness:?} is {dist:e} from the saddle"))?;
    Ok(format!(
        "linear min bracket {:.4e}, convex min bracket {:.4e} (lambda = 4); saddle rejected with witness ({:.4}, {:.4})",
        num(&lin.results, &["min_bracket"]),
        num(&cvx.results, &["min_bracket"]),
        witness[0],
        witness[1]
    ))
}

fn criterion_10() -> Verdict {
    let s = run(Subcommand::Weights, &config("weights_saddle.json"))?;
    let r = &s.results;
    let band = num(r, &["band_max_difference"]);
    let trip = num(r, &["round_trip_max_error"]);
    let lift = r["lift_at_psi1_critical"].as_array().map(Vec::len).unwrap_or(0);
    let drop = r["drop_at_psi2_critical"].as_array().map(Vec::len).unwrap_or(0);
    ensure(lift > 0 && drop > 0, "no critical points examined")?;
    ensure(band <= 1e-12 && trip <= 1e-6, format!("band {band:e}, round trip {trip:e}"))?;
    Ok(format!(
        "(i) lift {}, (ii) drop {}, (iii) band difference {band:.1e}; round trip {trip:.2e}",
        r["lift_at_psi1_critical"], r["drop_at_psi2_critical"]
    ))
}

fn criterion_11() -> Verdict {
    let start = Instant::now();
    let cfg = config("carleman_gaussian.json");
    let s = run(Subcommand::CarlemanCheck, &cfg)?;
    let secs = start.elapsed().as_secs_f64();
    let spread = num(&s.results, &["spread"]);
    let n = cfg.carleman().map(|c| c.region.n).map_err(|e| e.to_string())?;
    ensure(n == [128, 128], format!("grid {n:?}"))?;
    ensure(spread <= 10.0, format!("ratio spread {spread}"))?;
    ensure(secs < 60.0, format!("runtime {secs:.1} s"))?;

    let mut shifted = cfg.clone();
    if let Some(c) = shifted.carleman.as_mut() {
        c.field = plate_lab::carleman::Manufactured::GaussianBump {
            center: [0.85, 0.5],
            width: 0.1,
        };
    }
    let t = run(Subcommand::CarlemanCheck, &shifted)?;
    let ratios: Vec<String> = s.results["rows"]
        .as_array()
        .map(|rows| rows.iter().map(|r| format!("{:.3e}", num(r, &["ratio"]))).collect())
        .unwrap_or_default();
    Ok(format!(
        "ratios [{}], spread {spread:.3} (<= 10), {secs:.1} s on 128x128; bump near the right side: spread {:.3}",
        ratios.join(", "),
        num(&t.results, &["spread"])
    ))
}

/// Small configurations covering every subcommand.
fn determinism_configs() -> Vec<(Subcommand, String)> {
    let mesh = r#""mesh": {"L": 1.0, "x0": 0.5, "c1": 1.0, "c2": 2.0, "N": 41}"#;
    let carleman = r#""carleman": {"psi": [{"i": 1, "j": 0, "c": 1.0}], "lambda_c": 2.0,
        "region": {"bounds": [[0.0, 1.0], [0.0, 1.0]], "n": [32, 32]}, "bracket_samples": 200}"#;
    let flow = r#""carleman": {"psi": [{"i": 0, "j": 2, "c": 1.0}, {"i": 2, "j": 0, "c": -1.0}, {"i": 4, "j": 0, "c": 0.1}, {"i": 0, "j": 4, "c": 0.1}],
        "lambda_c": 1.0, "region": {"bounds": [[-1.0, 1.0], [-1.0, 1.0]], "n": [21, 21]},
        "flow": {"arcs": [{"center": [0.0, 0.0], "direction": [0.0, 0.5]}], "tube_radius": 0.15, "margin": 0.2}}"#;
    let svg = r#""output": {"formats": ["csv", "json", "svg"]}"#;
    vec![
        (Subcommand::Simulate, format!(r#"{{{mesh}, "evolution": {{"dt": 1e-3, "T": 0.5}}, {svg}}}"#)),
        (Subcommand::Spectrum, format!(r#"{{{mesh}, {svg}}}"#)),
        (
            Subcommand::Scan,
            format!(r#"{{{mesh}, "scan": {{"re_range": [-50, 50], "im_range": [-1, 1], "resolution": [41, 5]}}, {svg}}}"#),
        ),
        (Subcommand::FactorizedCheck, format!(r#"{{{mesh}, "resolvent": {{"samples": 5}}, {svg}}}"#)),
        (Subcommand::TraceCheck, format!(r#"{{{mesh}, "resolvent": {{"samples": 5}}, {svg}}}"#)),
        (Subcommand::CarlemanCheck, format!(r#"{{{carleman}, {svg}}}"#)),
        (Subcommand::Subellipticity, format!(r#"{{{carleman}, {svg}}}"#)),
        (Subcommand::Weights, format!(r#"{{{flow}, {svg}}}"#)),
    ]
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default()
}

fn criterion_12() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_plate-lab");
    let mut files = 0;
    for (cmd, text) in determinism_configs() {
        parse_config(&text).map_err(|e| format!("{}: {e}", cmd.name()))?;
        let cfg_path = tmp.path().join(format!("{}.json", cmd.name()));
        fs::write(&cfg_path, &text).map_err(|e| e.to_string())?;
        let out = tmp.path().join(cmd.name());
        let mut runs = Vec::new();
        for _ in 0..2 {
            let _ = fs::remove_dir_all(&out);
            let status = Command::new(bin)
                .arg(cmd.name())
                .arg("--config")
                .arg(&cfg_path)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(
                status.status.code() == Some(0),
                format!("{} exited with {:?}: {}", cmd.name(), status.status.code(), String::from_utf8_lossy(&status.stderr)),
            )?;
            runs.push(snapshot(&out));
        }
        let keys: Vec<&String> = runs[0].keys().filter(|k| k.ends_with(".csv") || k.ends_with(".json")).collect();
        ensure(keys.len() >= 2, format!("{}: expected CSV and JSON outputs", cmd.name()))?;
        for k in keys {
            ensure(runs[0].get(k) == runs[1].get(k), format!("{}: {k} differs between runs", cmd.name()))?;
            files += 1;
        }
    }
    Ok(format!("8 subcommands, {files} CSV/JSON files byte-identical across two runs"))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 12] = [
        (1, "discrete dissipativity", criterion_1),
        (2, "energy identity", criterion_2),
        (3, "hinged mode oracle", criterion_3),
        (4, "spectral-free region and resolvent growth", criterion_4),
        (5, "factorized vs direct resolvent", criterion_5),
        (6, "boundary trace estimate", criterion_6),
        (7, "logarithmic decay bound", criterion_7),
        (8, "bracket dual path", criterion_8),
        (9, "sub-ellipticity certification", criterion_9),
        (10, "weight pair construction", criterion_10),
        (11, "weighted inequality", criterion_11),
        (12, "determinism", criterion_12),
    ];
    let mut failures = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failures += 1;
                println!("criterion {id:>2} FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
