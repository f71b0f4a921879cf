//! One function per subcommand, composing the library checks into an
//! [`Outcome`].

use plate_lab::carleman::flow::flow_deform;
use plate_lab::carleman::inequality::carleman_inequality_check;
use plate_lab::carleman::subellipticity::verify_subellipticity;
use plate_lab::carleman::weight::{characteristic_covectors, closed_form_bracket, closed_form_terms, poisson_bracket, printed_form_bracket};
use plate_lab::carleman::{Poly2, WeightFunction};
use plate_lab::evolution::{default_initial_state, fit_decay, run_trajectory};
use plate_lab::generator::random_smooth_field;
use plate_lab::spectral::{
    compute_spectrum_with_cutoff, direct_resolvent_solve, factorized_resolvent_solve, relative_difference, scan_resolvent,
    trace_estimate_check,
};
use plate_lab::{assemble_generator, GeneratorMatrix, Grid2D, PlateState, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{CarlemanConfig, Expectation, ExperimentConfig};
use crate::error::CliError;
use crate::output::{Check, Outcome, Summary, Table};
use crate::svg::{self, Mark};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Simulate,
    Spectrum,
    Scan,
    FactorizedCheck,
    TraceCheck,
    CarlemanCheck,
    Subellipticity,
    Weights,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::Simulate,
        Subcommand::Spectrum,
        Subcommand::Scan,
        Subcommand::FactorizedCheck,
        Subcommand::TraceCheck,
        Subcommand::CarlemanCheck,
        Subcommand::Subellipticity,
        Subcommand::Weights,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Scan => "scan",
            Subcommand::FactorizedCheck => "factorized-check",
            Subcommand::TraceCheck => "trace-check",
            Subcommand::CarlemanCheck => "carleman-check",
            Subcommand::Subellipticity => "subellipticity",
            Subcommand::Weights => "weights",
        }
    }
}

pub fn run_experiment(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match cmd {
        Subcommand::Simulate => simulate(cfg),
        Subcommand::Spectrum => spectrum(cfg),
        Subcommand::Scan => scan(cfg),
        Subcommand::FactorizedCheck => factorized_check(cfg),
        Subcommand::TraceCheck => trace_check(cfg),
        Subcommand::CarlemanCheck => carleman_check(cfg),
        Subcommand::Subellipticity => subellipticity(cfg),
        Subcommand::Weights => weights(cfg),
    }
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("summary types serialize")
}

fn outcome(cmd: Subcommand, cfg: &ExperimentConfig, checks: Vec<Check>, notes: Vec<String>, results: serde_json::Value) -> Summary {
    Summary {
        subcommand: cmd.name().into(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        notes,
        results,
        config: cfg.clone(),
    }
}

pub const LOG_BOUND_NOTE: &str = "The logarithmic bound E(t) <= C_log / ln(2 + t)^(2k) is an upper bound only; \
     the one-dimensional semi-discrete energy decays exponentially (rate 2 |spectral abscissa|), \
     so logarithmic tightness is not reproducible at desk scale.";

pub const CN_TAIL_NOTE: &str = "The exponential fit uses the tail t >= T/2. Once the energy has dropped by many orders of magnitude, \
     the tail is carried by high-frequency modes that Crank-Nicolson damps only weakly when dt |mu| >> 1, \
     so the fitted omega can be far below the semi-discrete rate.";

/// Largest order for which `simulate` also reports the spectral decay rate.
const RATE_REFERENCE_MAX_ORDER: usize = 1000;

fn simulate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let gen = cfg.generator()?;
    let mesh = &gen.mesh;
    let (dt, horizon) = cfg.time_grid(mesh)?;
    let z0 = default_initial_state(mesh)?;
    let rec = run_trajectory(&gen, &z0, dt, horizon)?;
    let e0 = rec.energies[0];
    let damped = cfg.damping.is_damped();

    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let drift = rec.max_energy_drift();
    let ledger = rec.ledger_defect();
    let worst_step_growth = rec
        .energies
        .windows(2)
        .map(|p| if p[0] > 0.0 { (p[1] - p[0]) / p[0] } else { 0.0 })
        .fold(f64::NEG_INFINITY, f64::max);
    let mut decay = None;
    if damped {
        checks.push(Check::at_most("energy_ledger_defect", ledger, 5e-3));
        checks.push(Check::at_most("max_step_energy_growth", worst_step_growth, 1e-12));
        let t_first = rec.times.get(1).copied().unwrap_or(0.0);
        if t_first > 0.0 && horizon / t_first >= 100.0 {
            let fit = fit_decay(&rec, cfg.evolution.k)?;
            let k2 = 2 * fit.k as i32;
            let worst = rec
                .times
                .iter()
                .zip(&rec.energies)
                .map(|(&t, &e)| e * (2.0 + t).ln().powi(k2) / fit.c_log)
                .fold(0.0, f64::max);
            checks.push(Check::finite("c_log", fit.c_log));
            checks.push(Check::at_most("log_bound_worst_sample_ratio", worst, 1.0 + 1e-12));
            notes.push(LOG_BOUND_NOTE.into());
            notes.push(CN_TAIL_NOTE.into());
            decay = Some(fit);
        } else {
            notes.push("record spans fewer than two decades of time; decay fit skipped".into());
        }
    } else {
        checks.push(Check::at_most("energy_drift", drift, 1e-10));
    }

    let stride = cfg.evolution.csv_stride;
    let mut table = Table::new("trajectory", &["t", "E", "dE_boundary", "u_trace_L", "v_trace_L"]);
    let last = rec.len() - 1;
    for n in (0..rec.len()).filter(|&n| n % stride == 0 || n == last) {
        table.push(vec![
            rec.times[n],
            rec.energies[n],
            rec.boundary_dissipation[n],
            rec.u_trace_l[n],
            rec.v_trace_l[n],
        ]);
    }
    let pts: Vec<(f64, f64)> = svg::thin(
        &rec.times.iter().copied().zip(rec.energies.iter().map(|e| e.max(f64::MIN_POSITIVE).log10())).collect::<Vec<_>>(),
        2000,
    );
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let plot = svg::chart("energy", "t", "log10 E", &xs, &ys, Mark::Line);

    let semi_discrete_rate = if damped && gen.dim() <= RATE_REFERENCE_MAX_ORDER {
        Some(-2.0 * compute_spectrum_with_cutoff(&gen, 1.0)?.spectral_abscissa)
    } else {
        None
    };
    let results = json!({
        "steps": rec.len() - 1,
        "semi_discrete_energy_rate": semi_discrete_rate,
        "dt": rec.dt,
        "T": horizon,
        "damped": damped,
        "bc_map": gen.bc_map,
        "initial_energy": e0,
        "final_energy": rec.energies[last],
        "energy_drift": drift,
        "energy_ledger_defect": ledger,
        "total_boundary_dissipation": rec.total_dissipation(),
        "max_step_energy_growth": worst_step_growth,
        "decay_fit": decay.as_ref().map(to_value),
    });
    Ok(Outcome {
        summary: outcome(Subcommand::Simulate, cfg, checks, notes, results),
        tables: vec![table],
        svgs: vec![("energy".into(), plot)],
    })
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let gen = cfg.generator()?;
    let c3 = cfg.spectrum.c3.unwrap_or(1.0);
    let rep = compute_spectrum_with_cutoff(&gen, c3)?;
    let mut checks = vec![Check::at_most("conjugation_defect", rep.conjugation_defect(), 1e-9)];
    if cfg.damping.is_damped() {
        checks.push(Check::below("spectral_abscissa", rep.spectral_abscissa, 0.0));
        checks.push(Check::at_most("eigenvalues_in_fitted_region", rep.region_violations().len() as f64, 0.0));
    }
    let mut sweep = Vec::new();
    for &ab in &cfg.spectrum.damping_sweep {
        if !(ab.is_finite() && ab > 0.0) {
            return Err(CliError::Config {
                path: "spectrum.damping_sweep".into(),
                message: format!("values must be positive, got {ab}"),
            });
        }
        let g = assemble_generator(&gen.mesh, ab, ab)?;
        let r = compute_spectrum_with_cutoff(&g, c3)?;
        checks.push(Check::below(&format!("spectral_abscissa[a=b={ab}]"), r.spectral_abscissa, 0.0));
        sweep.push(json!({"a": ab, "b": ab, "spectral_abscissa": r.spectral_abscissa}));
    }
    let mut table = Table::new("spectrum", &["re_mu", "im_mu"]);
    for mu in &rep.eigenvalues {
        table.push(vec![mu.re, mu.im]);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rep.eigenvalues.iter().map(|z| (z.re, z.im)).unzip();
    let plot = svg::chart("spectrum of A", "Re mu", "Im mu", &xs, &ys, Mark::Dots);
    let results = json!({
        "order": gen.dim(),
        "spectral_abscissa": rep.spectral_abscissa,
        "conjugation_defect": rep.conjugation_defect(),
        "fitted_region": rep.fitted_region,
        "region_violations": rep.region_violations().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "lowest_modes": rep.mode_table.iter().take(10).collect::<Vec<_>>(),
        "damping_sweep": sweep,
    });
    Ok(Outcome {
        summary: outcome(Subcommand::Spectrum, cfg, checks, vec![], results),
        tables: vec![table],
        svgs: vec![("spectrum".into(), plot)],
    })
}

fn scan(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let gen = cfg.generator()?;
    let spec = cfg.scan_spec()?;
    let c3 = cfg.spectrum.c3.unwrap_or(1.0);
    let rep = compute_spectrum_with_cutoff(&gen, c3)?;
    let s = scan_resolvent(&gen, &spec)?;
    let region = rep.fitted_region;
    let violations = s.region_violations(&region);

    // symmetry lambda -> -conj(lambda), available when the window is symmetric
    let symmetric = spec.re_range[0] == -spec.re_range[1];
    let symmetry_defect = symmetric.then(|| {
        let nr = s.re.len();
        let mut worst = 0.0f64;
        for j in 0..s.im.len() {
            for i in 0..nr {
                let (p, q) = (s.norm_at(i, j), s.norm_at(nr - 1 - i, j));
                if p.is_finite() && q.is_finite() {
                    worst = worst.max((p - q).abs() / p.max(q));
                }
            }
        }
        worst
    });

    let cell = if s.re.len() > 1 { s.re[1] - s.re[0] } else { f64::INFINITY };
    let images = rep.lambda_images();
    let peaks = s.real_axis_peaks();
    let matched = peaks
        .iter()
        .filter(|&&p| images.iter().any(|l| (l.re - p).abs() <= cell && l.im.abs() <= cell))
        .count();

    // real-axis images strictly inside the window, each should sit under a peak
    let (lo, hi) = (spec.re_range[0] + cell, spec.re_range[1] - cell);
    let unmatched_images = images
        .iter()
        .filter(|l| l.im.abs() <= 1e-8 * (1.0 + l.re.abs()) && l.re > lo && l.re < hi)
        .filter(|l| !peaks.iter().any(|&p| (l.re - p).abs() <= cell))
        .count();

    let mut checks = vec![
        Check::finite("growth_c", s.growth_fit.c),
        Check::finite("growth_c_prime", s.growth_fit.c_prime),
    ];
    if let Some(d) = symmetry_defect {
        checks.push(Check::at_most("conjugate_symmetry_defect", d, 1e-8));
    }
    if cfg.damping.is_damped() {
        checks.push(Check::below("spectral_abscissa", rep.spectral_abscissa, 0.0));
        checks.push(Check::at_most("singular_points_in_fitted_region", violations.len() as f64, 0.0));
        checks.push(Check::at_most("eigenvalues_in_fitted_region", rep.region_violations().len() as f64, 0.0));
    } else {
        checks.push(Check::at_most("real_axis_images_without_peak", unmatched_images as f64, 0.0));
    }

    let mut table = Table::new("scan", &["re_lambda", "im_lambda", "resolvent_norm"]);
    for (x, y, n) in s.points() {
        table.push(vec![x, y, n]);
    }
    let logs: Vec<f64> = s.norms.iter().map(|n| n.log10()).collect();
    let plot = svg::heatmap(
        "log10 resolvent norm",
        "Re lambda",
        "Im lambda",
        (spec.re_range[0], spec.re_range[1]),
        (spec.im_range[0], spec.im_range[1]),
        s.re.len(),
        s.im.len(),
        &logs,
    );
    let results = json!({
        "points": s.norms.len(),
        "growth_fit": s.growth_fit,
        "fitted_region": region,
        "spectral_abscissa": rep.spectral_abscissa,
        "singular_points_in_region": violations,
        "conjugate_symmetry_defect": symmetry_defect,
        "real_axis": s.real_axis,
        "real_axis_peaks": peaks,
        "peaks_matching_eigenvalue_images": matched,
        "real_axis_images_without_peak": unmatched_images,
    });
    Ok(Outcome {
        summary: outcome(Subcommand::Scan, cfg, checks, vec![], results),
        tables: vec![table],
        svgs: vec![("scan".into(), plot)],
    })
}

/// Seeded random resolvent problems shared by the factorized and trace checks.
pub fn resolvent_samples(cfg: &ExperimentConfig, gen: &GeneratorMatrix) -> Result<Vec<(C64, PlateState)>, CliError> {
    let r = cfg.resolvent()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..r.samples)
        .map(|_| {
            let re = if r.re_range[1] > r.re_range[0] {
                rng.gen_range(r.re_range[0]..r.re_range[1])
            } else {
                r.re_range[0]
            };
            let im = if r.im_max > 0.0 { rng.gen_range(-r.im_max..r.im_max) } else { 0.0 };
            let f = random_smooth_field(&gen.mesh, &mut rng, r.modes);
            let g = random_smooth_field(&gen.mesh, &mut rng, r.modes);
            Ok((C64::new(re, im), PlateState::new(&gen.mesh, f, g)?))
        })
        .collect()
}

fn factorized_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let gen = cfg.generator()?;
    let mut table = Table::new("factorized", &["re_lambda", "im_lambda", "relative_difference"]);
    let mut worst = 0.0f64;
    for (lambda, data) in resolvent_samples(cfg, &gen)? {
        let fact = factorized_resolvent_solve(&gen, lambda, &data)?;
        let direct = direct_resolvent_solve(&gen, lambda, &data)?;
        let d = relative_difference(&fact, &direct);
        worst = worst.max(d);
        table.push(vec![lambda.re, lambda.im, d]);
    }
    let checks = vec![Check::at_most("max_relative_difference", worst, 1e-8)];
    let results = json!({"samples": table.rows.len(), "max_relative_difference": worst});
    Ok(Outcome {
        summary: outcome(Subcommand::FactorizedCheck, cfg, checks, vec![], results),
        tables: vec![table],
        svgs: vec![],
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

fn trace_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let gen = cfg.generator()?;
    let mut table = Table::new("trace", &["re_lambda", "im_lambda", "lhs", "rhs", "ratio"]);
    let mut ratios = Vec::new();
    for (lambda, data) in resolvent_samples(cfg, &gen)? {
        let t = trace_estimate_check(&gen, lambda, &data)?;
        ratios.push(t.ratio);
        table.push(vec![t.lambda_re, t.lambda_im, t.lhs, t.rhs, t.ratio]);
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let med = median(&ratios);
    let checks = vec![
        Check::finite("max_ratio", max),
        Check::at_most("max_over_median", if med > 0.0 { max / med } else { 0.0 }, 10.0),
    ];
    let (xs, ys): (Vec<f64>, Vec<f64>) = table.rows.iter().map(|r| (r[0], r[4])).unzip();
    let plot = svg::chart("trace estimate ratio", "Re lambda", "lhs / rhs", &xs, &ys, Mark::Dots);
    let results = json!({"samples": ratios.len(), "max_ratio": max, "median_ratio": med, "constant": max});
    Ok(Outcome {
        summary: outcome(Subcommand::TraceCheck, cfg, checks, vec![], results),
        tables: vec![table],
        svgs: vec![("trace".into(), plot)],
    })
}

fn carleman_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.carleman()?;
    let w = c.weight()?;
    let grid = c.grid()?;
    let rep = carleman_inequality_check(&w, &c.field, c.gamma, &grid, &c.h_values)?;
    let checks = vec![
        Check::finite("max_ratio", rep.max_ratio),
        Check::at_most("ratio_spread", rep.spread, 10.0),
    ];
    let mut table = Table::new("carleman", &["h", "lhs", "rhs", "ratio"]);
    for r in &rep.rows {
        table.push(vec![r.h, r.lhs, r.rhs, r.ratio]);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rep.rows.iter().map(|r| (r.h, r.ratio)).unzip();
    let plot = svg::chart("weighted inequality ratio", "h", "lhs / rhs", &xs, &ys, Mark::Line);
    let notes = vec![format!(
        "lhs and rhs carry the common factor exp(-2 max(phi) / h), max(phi) = {}",
        rep.rows.first().map(|r| r.log_scale).unwrap_or(0.0)
    )];
    Ok(Outcome {
        summary: outcome(Subcommand::CarlemanCheck, cfg, checks, notes, to_value(&rep)),
        tables: vec![table],
        svgs: vec![("carleman".into(), plot)],
    })
}

/// General bracket against the closed form on random characteristic samples.
#[derive(Debug, Clone, Serialize)]
pub struct BracketAgreement {
    pub samples: usize,
    /// Largest `|general - closed| / |general|`.
    pub max_relative_difference: f64,
    /// Largest `|general - closed|` over the sum of the closed-form term
    /// magnitudes.
    pub max_scaled_difference: f64,
    /// Largest relative discrepancy of the `|grad psi|^2` variant.
    pub printed_form_max_relative_discrepancy: f64,
}

pub fn bracket_agreement(w: &WeightFunction, grid: &Grid2D, samples: usize, n_xi: usize, seed: u64) -> BracketAgreement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rel, mut scaled, mut printed, mut count) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    let mut attempts = 0;
    while count < samples && attempts < 100 * samples.max(1) {
        attempts += 1;
        let x = [
            rng.gen_range(grid.bounds[0][0]..=grid.bounds[0][1]),
            rng.gen_range(grid.bounds[1][0]..=grid.bounds[1][1]),
        ];
        for xi in characteristic_covectors(w, x, n_xi) {
            if count == samples {
                break;
            }
            let g = poisson_bracket(w, x, xi);
            let c = closed_form_bracket(w, x, xi);
            let scale: f64 = closed_form_terms(w, x, xi).iter().map(|t| t.abs()).sum();
            if g != 0.0 {
                rel = rel.max((g - c).abs() / g.abs());
                printed = printed.max((g - printed_form_bracket(w, x, xi)).abs() / g.abs());
            }
            if scale > 0.0 {
                scaled = scaled.max((g - c).abs() / scale);
            }
            count += 1;
        }
    }
    BracketAgreement {
        samples: count,
        max_relative_difference: rel,
        max_scaled_difference: scaled,
        printed_form_max_relative_discrepancy: printed,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, &y)| y > 0.0).map(|(&x, &y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    sxy / sxx
}

/// Minimum bracket over the region for each `lambda` in the sweep.
pub fn lambda_sweep(psi: Poly2, grid: &Grid2D, lambdas: &[f64], n_xi: usize) -> Result<Vec<f64>, CliError> {
    lambdas
        .iter()
        .map(|&l| {
            let w = WeightFunction::new(psi, l)?;
            Ok(verify_subellipticity(&w, grid, n_xi)?.min_bracket)
        })
        .collect()
}

fn subellipticity(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c: &CarlemanConfig = cfg.carleman()?;
    let w = c.weight()?;
    let grid = c.grid()?;
    let rep = verify_subellipticity(&w, &grid, c.n_xi)?;
    let agreement = bracket_agreement(&w, &grid, c.bracket_samples, c.n_xi, cfg.seed);
    let mut checks = vec![Check::at_most("bracket_dual_path_relative_difference", agreement.max_relative_difference, 1e-8)];
    let mut sweep = None;
    match c.expect {
        Expectation::Certified => {
            checks.push(Check::holds("certified", rep.certified));
            checks.push(Check::above("min_bracket", rep.min_bracket, 0.0));
            if rep.certified {
                c.check_sweep()?;
                let mins = lambda_sweep(c.psi, &grid, &c.lambda_sweep, c.n_xi)?;
                let slope = log_log_slope(&c.lambda_sweep, &mins);
                let increasing = mins.windows(2).all(|p| p[1] > p[0]);
                checks.push(Check::holds("min_bracket_increases_with_lambda", increasing));
                sweep = Some(json!({"lambda": c.lambda_sweep, "min_bracket": mins, "log_log_slope": slope}));
            }
        }
        Expectation::Rejected => {
            checks.push(Check::holds("rejected", !rep.certified));
            let g = c.psi.grad(rep.witness);
            let residual = (g[0] * g[0] + g[1] * g[1]).sqrt();
            checks.push(Check::at_most("witness_gradient_norm", residual, 1e-8));
        }
    }
    let mut table = Table::new("subellipticity", &["x1", "x2", "min_bracket"]);
    for s in &rep.samples {
        table.push(vec![s.x[0], s.x[1], s.min_bracket]);
    }
    let results = json!({
        "certified": rep.certified,
        "min_bracket": rep.min_bracket,
        "witness": rep.witness,
        "critical_points": rep.critical_points,
        "reason": rep.reason,
        "bracket_agreement": agreement,
        "lambda_sweep": sweep,
    });
    let notes = vec![
        "On the characteristic set the bracket equals 4 lambda phi xi'psi''xi + 4 phi^3 lambda^4 |grad psi|^4 + 4 phi^3 lambda^3 grad psi' psi'' grad psi; \
         the variant with |grad psi|^2 in the lambda^4 term is reported as printed_form_max_relative_discrepancy."
            .to_string(),
    ];
    Ok(Outcome {
        summary: outcome(Subcommand::Subellipticity, cfg, checks, notes, results),
        tables: vec![table],
        svgs: vec![],
    })
}

fn weights(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.carleman()?;
    let grid = c.grid()?;
    let spec = c.flow.as_ref().ok_or_else(|| CliError::Config {
        path: "carleman.flow".into(),
        message: "section required by this subcommand".into(),
    })?;
    let rep = flow_deform(&c.psi, spec, &grid)?;
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut checks = vec![
        Check::at_most("band_max_difference", rep.band_max_difference, 1e-12),
        Check::at_most("round_trip_max_error", rep.round_trip_max_error, 1e-6),
    ];
    if !rep.lift_at_psi1_critical.is_empty() {
        checks.push(Check::above("min_lift_at_psi1_critical", min(&rep.lift_at_psi1_critical), 0.0));
    }
    if !rep.drop_at_psi2_critical.is_empty() {
        checks.push(Check::above("min_drop_at_psi2_critical", min(&rep.drop_at_psi2_critical), 0.0));
    }
    if !rep.cross_gradients.is_empty() {
        checks.push(Check::above("min_cross_gradient", min(&rep.cross_gradients), 0.0));
    }
    checks.push(Check::holds("diagnostics_passed", rep.passed));

    let mut table = Table::new("weights", &["x1", "x2", "psi1", "psi2"]);
    let mut diff = Vec::with_capacity(rep.psi1.len());
    for (k, p) in grid.points().iter().enumerate() {
        table.push(vec![p[0], p[1], rep.psi1[k], rep.psi2[k]]);
        diff.push(rep.psi2[k] - rep.psi1[k]);
    }
    let plot = svg::heatmap(
        "psi2 - psi1",
        "x1",
        "x2",
        (grid.bounds[0][0], grid.bounds[0][1]),
        (grid.bounds[1][0], grid.bounds[1][1]),
        grid.nx,
        grid.ny,
        &diff,
    );
    let results = json!({
        "critical_psi1": rep.critical_psi1,
        "critical_psi2": rep.critical_psi2,
        "lift_at_psi1_critical": rep.lift_at_psi1_critical,
        "drop_at_psi2_critical": rep.drop_at_psi2_critical,
        "cross_gradients": rep.cross_gradients,
        "psi2_gradient_residual": rep.psi2_gradient_residual,
        "band_max_difference": rep.band_max_difference,
        "round_trip_max_error": rep.round_trip_max_error,
    });
    Ok(Outcome {
        summary: outcome(Subcommand::Weights, cfg, checks, vec![], results),
        tables: vec![table],
        svgs: vec![("weights".into(), plot)],
    })
}
