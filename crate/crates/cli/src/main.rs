use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polydisc::coloring::{anchored_discrepancy, evaluate_discrepancy, polytope_coloring, tusnady_coloring};
use polydisc::fit::{fit_growth, fit_power, GrowthFit};
use polydisc::fourier::{convergence_gap, discrete_spectrum_of_body, rotated_body, rotation_search, spherical_average};
use polydisc::gamma2::{dyadic_check_exhaustive, dyadic_factorization, gamma2_bracket, trace_norm_lower_bound};
use polydisc::geodisc::{builtin_test_functions, halton_hammersley, qmc_integrate, star_discrepancy, LowDiscrepancy};
use polydisc::geometry::{derive_seed, uniform_points, Polytope};
use polydisc::io::{leading_columns_from_csv, read_polytope, spectrum_to_csv, table_to_csv};
use polydisc::privacy::error_bracket;
use polydisc::rangestruct::{cost_report, random_workload, replay, ObliviousStructure};
use polydisc::setsystems::{anchored_boxes_system, count_anchored_traces, homothet_system, HomothetSampling};
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "polydisc", version, about = "Discrepancy experiments for boxes and polytopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Sizes: `a..b` doubles from a to b, `a,b,c` lists them, `a` is a single size.
    #[arg(long, default_value = "64")]
    n: String,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    trials: usize,
    /// JSON file `{"vertices": [...]}`; defaults to a scalene triangle in the unit square.
    #[arg(long)]
    polytope: Option<PathBuf>,
    /// Directory for `<command>.csv` and `<command>.json`; the table goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tusnády coloring of random points: discrepancy against the certificate.
    Tusnady(Common),
    /// Greedy coloring against a polytope's corner families.
    PolytopeColor(Common),
    /// γ₂ bracket for anchored boxes on random points.
    Bracket(Common),
    /// Best rotated spectral sum S(n).
    Spectrum(Common),
    /// Discrete vs continuous coefficient gap.
    Converge(Common),
    /// Spherical averages of squared coefficients; `--n` lists the radii.
    SphereAvg(Common),
    /// Oblivious range structure: workload replay and costs.
    Rangeds(Common),
    /// Gaussian factorization mechanism error report.
    Privacy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
    },
    /// Star discrepancy and Koksma–Hlawka checks for Halton and Hammersley sets.
    Geodisc(Common),
    /// Fit y ≈ C (log n)^a to a CSV with columns n and y.
    Fit {
        #[command(flatten)]
        common: Common,
        table: PathBuf,
        /// Fit y ≈ C n^a instead.
        #[arg(long)]
        power: bool,
    },
}

fn parse_sizes(spec: &str) -> Result<Vec<usize>> {
    let sizes: Vec<usize> = if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        if a == 0 || a > b {
            bail!("empty size range {spec}");
        }
        std::iter::successors(Some(a), |&k| Some(k * 2)).take_while(|&k| k <= b).collect()
    } else {
        spec.split(',').map(|s| s.trim().parse::<usize>()).collect::<std::result::Result<_, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        bail!("sizes must be positive: {spec}");
    }
    Ok(sizes)
}

fn body(common: &Common) -> Result<Polytope> {
    match &common.polytope {
        Some(path) => read_polytope(path).with_context(|| format!("reading {}", path.display())),
        None => Ok(Polytope::from_vertices(vec![vec![0.1, 0.15], vec![0.8, 0.3], vec![0.35, 0.85]])?),
    }
}

struct Report {
    headers: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    summary: serde_json::Value,
    /// Extra CSV files written next to the table.
    extra: Vec<(String, String)>,
}

fn fmt(x: f64) -> String {
    format!("{x:.6e}")
}

fn fit_json(fit: polydisc::Result<GrowthFit>) -> serde_json::Value {
    match fit {
        Ok(f) => serde_json::to_value(f).unwrap_or_default(),
        Err(e) => json!({ "unavailable": e.to_string() }),
    }
}

fn tusnady(c: &Common) -> Result<Report> {
    let mut rows = Vec::new();
    let (mut ns, mut discs) = (Vec::new(), Vec::new());
    for n in parse_sizes(&c.n)? {
        let seed = derive_seed(c.seed, n as u64);
        let pts = uniform_points(n, c.d, seed);
        let t = tusnady_coloring(&pts)?;
        let (disc, _) = anchored_discrepancy(&pts, &t.coloring)?;
        let m = count_anchored_traces(&pts)? as f64;
        let upper = dyadic_check_exhaustive(&pts).map(|k| k.value).unwrap_or_else(|_| {
            let l = (n as f64).log2().ceil();
            (l * (l + 1.0)).powi(c.d as i32).sqrt()
        });
        let cert = m.ln().sqrt() * upper;
        ns.push(n as f64);
        discs.push(disc.max(1) as f64);
        rows.push(vec![n.to_string(), c.d.to_string(), seed.to_string(), disc.to_string(), fmt(t.achieved), fmt(m), fmt(upper), fmt(cert)]);
    }
    Ok(Report {
        headers: vec!["n", "d", "seed", "disc", "achieved", "traces", "gamma2_upper", "certificate"],
        rows,
        summary: json!({ "fit_log_exponent": fit_json(fit_growth(&ns, &discs)) }),
        extra: Vec::new(),
    })
}

fn polytope_color(c: &Common) -> Result<Report> {
    let b = body(c)?;
    let mut rows = Vec::new();
    for n in parse_sizes(&c.n)? {
        let seed = derive_seed(c.seed, n as u64);
        let pts = uniform_points(n, b.dim(), seed);
        let p = polytope_coloring(&pts, &b)?;
        let sampled = homothet_system(&b, &pts, &HomothetSampling::random(c.trials.max(1) * 32, seed))?;
        let (disc, _) = evaluate_discrepancy(&sampled, &p.coloring)?;
        rows.push(vec![
            n.to_string(),
            seed.to_string(),
            disc.to_string(),
            fmt(p.achieved),
            p.budget.to_string(),
            fmt(p.weighted_budget),
            fmt(p.certificate),
            p.families.to_string(),
        ]);
    }
    Ok(Report {
        headers: vec!["n", "seed", "sampled_disc", "achieved", "budget", "weighted_budget", "certificate", "families"],
        rows,
        summary: json!({}),
        extra: Vec::new(),
    })
}

fn bracket(c: &Common) -> Result<Report> {
    let mut rows = Vec::new();
    for n in parse_sizes(&c.n)? {
        let seed = derive_seed(c.seed, n as u64);
        let s = anchored_boxes_system(&uniform_points(n, c.d, seed))?;
        let b = gamma2_bracket(&s)?;
        let dyadic = b.candidates.iter().find(|(_, m)| m == "dyadic").map(|(v, _)| *v).unwrap_or(f64::NAN);
        rows.push(vec![n.to_string(), c.d.to_string(), seed.to_string(), s.len().to_string(), fmt(b.lower), fmt(b.upper), b.upper_method.clone(), fmt(dyadic)]);
    }
    Ok(Report { headers: vec!["n", "d", "seed", "rows", "lower", "upper", "upper_method", "dyadic"], rows, summary: json!({}), extra: Vec::new() })
}

fn spectrum(c: &Common) -> Result<Report> {
    let b = body(c)?;
    let mut rows = Vec::new();
    let (mut ns, mut sums) = (Vec::new(), Vec::new());
    let mut extra = Vec::new();
    let sizes = parse_sizes(&c.n)?;
    for &n in &sizes {
        let r = rotation_search(&b, n, c.trials, c.seed)?;
        if Some(&n) == sizes.last() {
            let grid = discrete_spectrum_of_body(&rotated_body(&b, &r.best)?, n)?;
            extra.push((format!("spectrum_n{n}.csv"), spectrum_to_csv(&grid)?));
        }
        let l = ((2 * n + 1) as f64).ln();
        ns.push((2 * n + 1) as f64);
        sums.push(r.best_sum);
        rows.push(vec![n.to_string(), fmt(r.best_sum), fmt(r.identity_sum), fmt(r.best_sum / l.powi(b.dim() as i32))]);
    }
    Ok(Report {
        headers: vec!["n", "S", "identity_S", "S_over_log_d"],
        rows,
        summary: json!({ "fit_log_exponent": fit_json(fit_growth(&ns, &sums)) }),
        extra,
    })
}

fn converge(c: &Common) -> Result<Report> {
    let b = body(c)?;
    let mut rows = Vec::new();
    let (mut ns, mut gaps) = (Vec::new(), Vec::new());
    for n in parse_sizes(&c.n)? {
        let (gap, xi) = convergence_gap(&b, n)?;
        ns.push(n as f64);
        gaps.push(gap);
        rows.push(vec![n.to_string(), fmt(gap), format!("{xi:?}")]);
    }
    Ok(Report {
        headers: vec!["n", "gap", "argmax_xi"],
        rows,
        summary: json!({ "fit_power_exponent": fit_json(fit_power(&ns, &gaps)) }),
        extra: Vec::new(),
    })
}

fn sphere_avg(c: &Common) -> Result<Report> {
    let b = body(c)?;
    let mut rows = Vec::new();
    for rho in parse_sizes(&c.n)? {
        let rho_f = rho as f64;
        let s = spherical_average(&b, rho_f, c.trials, c.seed)?;
        rows.push(vec![rho.to_string(), fmt(s.mean), fmt(s.std_error), fmt(s.mean * rho_f * rho_f / rho_f.ln().max(f64::MIN_POSITIVE))]);
    }
    Ok(Report { headers: vec!["rho", "mean", "std_error", "scaled"], rows, summary: json!({}), extra: Vec::new() })
}

fn rangeds(c: &Common) -> Result<Report> {
    let mut rows = Vec::new();
    for n in parse_sizes(&c.n)? {
        let seed = derive_seed(c.seed, n as u64);
        let pts = uniform_points(n, c.d, seed);
        let mut s = ObliviousStructure::build(&dyadic_factorization(&pts)?)?;
        let lower = if n <= 256 { trace_norm_lower_bound(&anchored_boxes_system(&pts)?.incidence())? } else { 0.0 };
        let ops = random_workload(s.points(), s.ranges(), c.trials.max(1) * 100, seed);
        let r = replay(&mut s, &ops)?;
        let cost = cost_report(&s, lower);
        rows.push(vec![
            n.to_string(),
            c.d.to_string(),
            cost.t_u.to_string(),
            cost.t_q.to_string(),
            fmt(cost.geometric_mean),
            fmt(cost.floor),
            r.queries.to_string(),
            r.mismatches.to_string(),
        ]);
    }
    Ok(Report { headers: vec!["n", "d", "t_u", "t_q", "sqrt_tu_tq", "floor", "queries", "mismatches"], rows, summary: json!({}), extra: Vec::new() })
}

fn privacy(c: &Common, epsilon: f64, delta: f64) -> Result<Report> {
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for n in parse_sizes(&c.n)? {
        let seed = derive_seed(c.seed, n as u64);
        let pts = uniform_points(n, c.d, seed);
        let lower = trace_norm_lower_bound(&anchored_boxes_system(&pts)?.incidence())?;
        let r = error_bracket(&dyadic_factorization(&pts)?, lower, epsilon, delta, c.trials, seed)?;
        rows.push(vec![n.to_string(), fmt(r.sigma), fmt(r.empirical), fmt(r.upper), fmt(r.floor), fmt(r.within_upper)]);
        reports.push(json!({
            "n": n, "epsilon": r.epsilon, "delta": r.delta, "sigma": r.sigma,
            "empirical": r.empirical, "upper": r.upper, "floor": r.floor,
        }));
    }
    Ok(Report {
        headers: vec!["n", "sigma", "empirical", "upper", "floor", "within_upper"],
        rows,
        summary: json!({ "reports": reports }),
        extra: Vec::new(),
    })
}

fn geodisc(c: &Common) -> Result<Report> {
    let mut rows = Vec::new();
    for n in parse_sizes(&c.n)? {
        for kind in [LowDiscrepancy::Halton, LowDiscrepancy::Hammersley] {
            let pts = halton_hammersley(n, c.d, kind)?;
            let disc = star_discrepancy(&pts)?;
            let holds = builtin_test_functions(c.d)
                .iter()
                .map(|f| qmc_integrate(f, &pts).map(|r| r.bound_holds()))
                .collect::<polydisc::Result<Vec<bool>>>()?;
            rows.push(vec![
                n.to_string(),
                format!("{kind:?}").to_lowercase(),
                fmt(disc.value),
                format!("{:?}", disc.witness),
                format!("{}/{}", holds.iter().filter(|&&h| h).count(), holds.len()),
            ]);
        }
    }
    Ok(Report { headers: vec!["n", "set", "star_discrepancy", "witness", "koksma_held"], rows, summary: json!({}), extra: Vec::new() })
}

fn fit(table: &PathBuf, power: bool) -> Result<Report> {
    let text = fs::read_to_string(table).with_context(|| format!("reading {}", table.display()))?;
    let rows = leading_columns_from_csv(&text, 2)?;
    let ns: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let f = if power { fit_power(&ns, &ys)? } else { fit_growth(&ns, &ys)? };
    Ok(Report {
        headers: vec!["exponent", "intercept", "residual", "ci_low", "ci_high", "rows"],
        rows: vec![vec![fmt(f.exponent), fmt(f.intercept), fmt(f.residual), fmt(f.ci95.0), fmt(f.ci95.1), f.rows.to_string()]],
        summary: json!({ "model": if power { "n^a" } else { "log^a n" } }),
        extra: Vec::new(),
    })
}

fn validate(c: &Common) -> Result<()> {
    parse_sizes(&c.n)?;
    if c.d == 0 || c.d > 3 {
        bail!("--d must be 1, 2 or 3");
    }
    if c.trials == 0 {
        bail!("--trials must be positive");
    }
    if !(c.tol > 0.0) {
        bail!("--tol must be positive");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Tusnady(c) => ("tusnady", c),
        Command::PolytopeColor(c) => ("polytope-color", c),
        Command::Bracket(c) => ("bracket", c),
        Command::Spectrum(c) => ("spectrum", c),
        Command::Converge(c) => ("converge", c),
        Command::SphereAvg(c) => ("sphere-avg", c),
        Command::Rangeds(c) => ("rangeds", c),
        Command::Privacy { common, .. } => ("privacy", common),
        Command::Geodisc(c) => ("geodisc", c),
        Command::Fit { common, .. } => ("fit", common),
    };
    validate(common)?;
    let report = match &cli.command {
        Command::Tusnady(c) => tusnady(c)?,
        Command::PolytopeColor(c) => polytope_color(c)?,
        Command::Bracket(c) => bracket(c)?,
        Command::Spectrum(c) => spectrum(c)?,
        Command::Converge(c) => converge(c)?,
        Command::SphereAvg(c) => sphere_avg(c)?,
        Command::Rangeds(c) => rangeds(c)?,
        Command::Privacy { common, epsilon, delta } => privacy(common, *epsilon, *delta)?,
        Command::Geodisc(c) => geodisc(c)?,
        Command::Fit { table, power, .. } => fit(table, *power)?,
    };
    let csv = table_to_csv(&report.headers, &report.rows)?;
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(format!("{name}.csv")), &csv)?;
            let summary = json!({ "command": name, "config": common, "summary": report.summary });
            fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&summary)? + "\n")?;
            for (file, body) in &report.extra {
                fs::write(dir.join(file), body)?;
            }
        }
        None => print!("{csv}"),
    }
    Ok(())
}
