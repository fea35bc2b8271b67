//! Subcommand implementations behind the thin clap front end in `main`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use trilevel::doe::{self, level_name, CaseMetrics, CaseResult, Metric};
use trilevel::sweep::EngineKind;
use trilevel::{
    carnot_efficiency, dressed_energies, gkls_evaluate, kinetic_evaluate, run_sweep, BathSpec,
    EngineSpec, GklsReport, ThermoReport, WorkChannelClosure,
};

use crate::config::{OutFormat, RunConfig};
use crate::emit::{self, sig9};

/// Failures split by exit code: a bad invocation or config file (2) versus a
/// run that started and then failed or did not validate (1).
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Run(e) => write!(f, "{e:#}"),
        }
    }
}

fn usage<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Usage(e.into())
}

fn run_err<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Run(e.into())
}

/// Library errors caused by bad inputs, including misaligned case tables,
/// count as config errors; everything else is a genuine run failure.
fn classify(e: trilevel::Error) -> CliError {
    match e {
        trilevel::Error::InvalidInput { .. } | trilevel::Error::Misaligned(_) => usage(e),
        _ => run_err(e),
    }
}

/// Flag values layered over the config file before anything runs, so the
/// config hash reflects what was actually computed.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub engine: Option<EngineKind>,
    pub format: Option<OutFormat>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn load_config(path: Option<&Path>, ov: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        None => RunConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))
                .map_err(usage)?;
            RunConfig::parse(&text)
                .with_context(|| format!("parsing config {}", p.display()))
                .map_err(usage)?
        }
    };
    if let Some(e) = ov.engine {
        cfg.engine = e;
    }
    if let Some(f) = ov.format {
        cfg.format = f;
    }
    if let Some(o) = &ov.out {
        cfg.out_dir = Some(o.display().to_string());
    }
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    PathBuf::from(cfg.out_dir.as_deref().unwrap_or("out"))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_else(|| "none".into())
}

/// Evaluates the configured working point and prints its full steady-state
/// report; with an output directory set, also writes `steady.json`.
pub fn cmd_steady(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.engine_spec.to_spec();
    let baths = cfg.baths.to_spec();
    if baths.beta_c < baths.beta_h {
        return Err(run_err(trilevel::Error::NotAnEngine {
            beta_c: baths.beta_c,
            beta_h: baths.beta_h,
        }));
    }
    let report = match cfg.engine {
        EngineKind::Kinetic => {
            let closure = cfg.closure.to_spec();
            let r = kinetic_evaluate(&spec, &baths, &closure).map_err(classify)?;
            print_kinetic(&spec, &baths, &r);
            serde_json::to_value(r).map_err(run_err)?
        }
        EngineKind::Gkls => {
            let r = gkls_evaluate(&spec, &baths).map_err(classify)?;
            print_gkls(&spec, &baths, &r);
            serde_json::to_value(r).map_err(run_err)?
        }
    };
    if cfg.out_dir.is_some() {
        let path = out_dir(cfg).join("steady.json");
        let doc = json!({
            "version": emit::TOOL_VERSION,
            "engine": cfg.engine.name(),
            "config_hash": emit::config_hash(cfg),
            "report": report,
        });
        emit::write_json(&path, &doc).map_err(run_err)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_header(spec: &EngineSpec, baths: &BathSpec) {
    let frame = dressed_energies(spec);
    println!(
        "omega10 = {}  omega20 = {}  lam = {}",
        sig9(spec.omega10),
        sig9(spec.omega20),
        sig9(spec.lam)
    );
    println!(
        "theta = {}  eps10 = {}  eps20 = {}  eps21 = {}",
        sig9(frame.theta),
        sig9(frame.eps10),
        sig9(frame.eps20),
        sig9(frame.eps21)
    );
    let carnot = carnot_efficiency(baths).map(sig9).unwrap_or_else(|_| "none".into());
    println!(
        "beta_c = {}  beta_h = {}  carnot = {}",
        sig9(baths.beta_c),
        sig9(baths.beta_h),
        carnot
    );
}

fn print_kinetic(spec: &EngineSpec, baths: &BathSpec, r: &ThermoReport) {
    println!("engine: kinetic");
    print_header(spec, baths);
    println!("power = {}", sig9(r.power));
    println!("heat_in = {}", sig9(r.heat_in));
    println!("heat_out = {}", sig9(r.heat_out));
    println!("efficiency = {}", fmt_opt(r.efficiency));
    println!("efficacy = {}", fmt_opt(r.efficacy));
    println!("η^CP = {}", sig9(r.coupling_eff));
    println!(
        "1/η^CP = {:.3} ({})",
        1.0 / r.coupling_eff,
        sig9(1.0 / r.coupling_eff)
    );
    println!("q1 = {}  q2 = {}", sig9(r.q1), sig9(r.q2));
    println!("leak = {}", sig9(r.leak));
    println!("leak/P = {}", fmt_opt(r.leak_ratio));
    println!("sigma_avg = {}", sig9(r.sigma_avg));
    println!(
        "populations = [{}, {}, {}]",
        sig9(r.populations[0]),
        sig9(r.populations[1]),
        sig9(r.populations[2])
    );
    println!("margin = {}", fmt_opt(r.margin));
    println!("engine_ok = {}", r.engine_ok);
    if r.dead_channel {
        println!("note: a bath channel has zero total coupling");
    }
}

fn print_gkls(spec: &EngineSpec, baths: &BathSpec, r: &GklsReport) {
    println!("engine: gkls");
    print_header(spec, baths);
    println!("power = {}", sig9(r.power));
    println!("heat_in = {}", sig9(r.heat_in));
    println!("heat_out = {}", sig9(r.heat_out));
    println!("efficiency = {}", fmt_opt(r.efficiency));
    println!("efficacy = {}", fmt_opt(r.efficacy));
    println!("sigma = {}", sig9(r.sigma));
    println!(
        "populations = [{}, {}, {}]",
        sig9(r.populations[0]),
        sig9(r.populations[1]),
        sig9(r.populations[2])
    );
    println!("Im rho_12 = {}", sig9(r.coherence_im));
    println!(
        "hot current: diag = {}  nondiag = {}",
        sig9(r.q_diag_h),
        sig9(r.q_nondiag_h)
    );
    println!(
        "cold current: diag = {}  nondiag = {}",
        sig9(r.q_diag_c),
        sig9(r.q_nondiag_c)
    );
    println!("1/η^nd = {}", fmt_opt(r.inv_eta_nd));
    match r.mode {
        Some(m) => println!("mode = {m}"),
        None => println!("mode = none"),
    }
    println!("engine_ok = {}", r.engine_ok);
}

/// Scans the coupling box and writes one grid artifact per observable.
pub fn cmd_sweep(cfg: &RunConfig, grid_counts: Option<(usize, usize)>) -> Result<(), CliError> {
    let baths = cfg.baths.to_spec();
    let closure = cfg.closure.to_spec();
    let grid = cfg.grid.to_spec(grid_counts);
    grid.validate().map_err(usage)?;
    baths.validate().map_err(usage)?;
    closure.validate().map_err(usage)?;
    let sweep = run_sweep(cfg.engine, &baths, &closure, &grid).map_err(run_err)?;

    let engine_cells = sweep.cells.iter().filter(|c| c.engine_ok).count();
    println!(
        "engine: {}  grid: {} x {} = {} cells ({} engine-valid)",
        cfg.engine.name(),
        grid.omega20.count,
        grid.lam.count,
        sweep.cells.len(),
        engine_cells
    );
    if let Some((c, p)) = sweep
        .cells
        .iter()
        .filter(|c| c.engine_ok)
        .filter_map(|c| c.power.map(|p| (c, p)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
    {
        println!(
            "max power = {} at omega20 = {}, lam = {}",
            sig9(p),
            sig9(c.omega20),
            sig9(c.lam)
        );
    }
    if let Some(c) = sweep
        .cells
        .iter()
        .filter(|c| c.eta.is_some())
        .max_by(|a, b| a.eta.unwrap().total_cmp(&b.eta.unwrap()))
    {
        println!(
            "max efficiency = {} at omega20 = {}, lam = {}",
            sig9(c.eta.unwrap()),
            sig9(c.omega20),
            sig9(c.lam)
        );
    }

    let dir = out_dir(cfg);
    let hash = emit::config_hash(cfg);
    match cfg.format {
        OutFormat::Csv => {
            for f in emit::write_sweep_csv(&dir, &sweep).map_err(run_err)? {
                println!("wrote {}", f.display());
            }
        }
        OutFormat::Json => {
            let doc = emit::sweep_json(&sweep, &hash).map_err(run_err)?;
            let path = dir.join("sweep.json");
            emit::write_json(&path, &doc).map_err(run_err)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

const TABLE4_FIXTURE: &str = include_str!("../fixtures/table4.csv");
const FIXTURE_HEADER: &str = "case,dbeta,dr,dd,p,eta,peta";

/// Parses a nine-row case-metric table: '#' comments, a fixed header, then
/// one line per case.
pub fn parse_fixture(text: &str) -> anyhow::Result<Vec<CaseMetrics>> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != FIXTURE_HEADER {
                bail!("fixture line {}: expected header {FIXTURE_HEADER}", idx + 1);
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            bail!("fixture line {}: expected 7 fields, got {}", idx + 1, fields.len());
        }
        let int = |s: &str| {
            s.parse::<u8>()
                .map_err(|e| anyhow!("fixture line {}: bad integer {s:?}: {e}", idx + 1))
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| anyhow!("fixture line {}: bad number {s:?}: {e}", idx + 1))
        };
        rows.push(CaseMetrics {
            case_id: int(fields[0])?,
            levels: [int(fields[1])?, int(fields[2])?, int(fields[3])?],
            p: num(fields[4])?,
            eta: num(fields[5])?,
            peta: num(fields[6])?,
        });
    }
    if !saw_header {
        bail!("fixture has no header line");
    }
    Ok(rows)
}

fn load_fixture(src: &str) -> Result<Vec<CaseMetrics>, CliError> {
    let owned;
    let text = if src == "table4" {
        TABLE4_FIXTURE
    } else {
        owned = fs::read_to_string(src)
            .with_context(|| format!("reading fixture {src}"))
            .map_err(usage)?;
        &owned
    };
    parse_fixture(text).map_err(usage)
}

/// Runs the L9 design (or loads a fixture table) and writes the case,
/// range, variance, and best-combination artifacts as CSV and JSON.
pub fn cmd_doe(
    cfg: &RunConfig,
    fixture: Option<&str>,
    grid_counts: Option<(usize, usize)>,
) -> Result<(), CliError> {
    let levels = cfg.levels.to_spec();
    let (metrics, results): (Vec<CaseMetrics>, Option<Vec<CaseResult>>) = match fixture {
        Some(src) => (load_fixture(src)?, None),
        None => {
            let design = doe::build_design(&levels).map_err(classify)?;
            let grid = cfg.grid.to_spec(grid_counts);
            grid.validate().map_err(usage)?;
            let closure = cfg.closure.to_spec();
            closure.validate().map_err(usage)?;
            let out = doe::run_design(&design, &levels, &grid, cfg.engine, &closure)
                .map_err(classify)?;
            let results: Vec<CaseResult> = out.into_iter().map(|(r, _)| r).collect();
            let metrics = results.iter().map(CaseMetrics::from_result).collect();
            (metrics, Some(results))
        }
    };
    let range = doe::range_analysis(&metrics).map_err(classify)?;
    let anova = doe::anova(&metrics).map_err(classify)?;
    let best = doe::select_best(&range, &anova);

    if let Some(results) = &results {
        for r in results {
            println!(
                "case {} [{} {} {}]: max P = {}, max η = {}, max Pη = {}, min σ̇ = {}{}",
                r.case_id,
                r.levels[0],
                r.levels[1],
                r.levels[2],
                sig9(r.max_p),
                sig9(r.max_eta),
                sig9(r.max_peta),
                sig9(r.min_sigma),
                if r.never_engine { " (never an engine)" } else { "" }
            );
        }
    }
    for metric in Metric::ALL {
        let label = metric.label();
        let ranked: Vec<String> = range
            .ranking_for(metric)
            .iter()
            .map(|f| format!("{} (R = {})", f.label(), sig9(range.entry(metric, *f).r)))
            .collect();
        println!("{label}: ranking {}", ranked.join(" > "));
        let bm = best.metric(metric);
        let picks: Vec<String> = bm
            .picks
            .iter()
            .map(|p| match p.level {
                Some(l) => format!("{} = {}", p.factor.label(), level_name(l)),
                None => format!("{} = no preference", p.factor.label()),
            })
            .collect();
        println!(
            "{label}: best {}{}",
            picks.join(", "),
            if bm.rankings_agree { "" } else { " (rankings disagree)" }
        );
        for row in &anova.metric(metric).rows {
            if !row.mark.is_empty() {
                println!(
                    "{label}: {} significant (p = {:.4} {})",
                    row.factor.label(),
                    row.p_value,
                    row.mark
                );
            }
        }
    }

    let dir = out_dir(cfg);
    let hash = emit::config_hash(cfg);
    let write_pair = |name: &str, csv: String, data: Value| -> Result<(), CliError> {
        let csv_path = dir.join(format!("{name}.csv"));
        emit::write_text(&csv_path, &csv).map_err(run_err)?;
        println!("wrote {}", csv_path.display());
        let json_path = dir.join(format!("{name}.json"));
        let doc = json!({
            "version": emit::TOOL_VERSION,
            "config_hash": hash,
            "kind": name,
            "data": data,
        });
        emit::write_json(&json_path, &doc).map_err(run_err)?;
        println!("wrote {}", json_path.display());
        Ok(())
    };
    if let Some(results) = &results {
        write_pair(
            "doe_cases",
            emit::cases_csv(results),
            serde_json::to_value(results).map_err(run_err)?,
        )?;
    }
    write_pair(
        "doe_range",
        emit::range_csv(&range),
        serde_json::to_value(range).map_err(run_err)?,
    )?;
    write_pair(
        "doe_anova",
        emit::anova_csv(&anova),
        serde_json::to_value(anova).map_err(run_err)?,
    )?;
    write_pair(
        "doe_best",
        emit::best_csv(&best),
        serde_json::to_value(best).map_err(run_err)?,
    )?;
    Ok(())
}

struct Checks {
    all_pass: bool,
}

impl Checks {
    fn new() -> Self {
        Checks { all_pass: true }
    }

    fn record(&mut self, pass: bool, line: String) {
        println!("{} {}", line, if pass { "PASS" } else { "FAIL" });
        self.all_pass &= pass;
    }
}

/// Self-checks the implementation against its fixed anchors, then the
/// active configuration against the thermodynamic ground rules.
pub fn cmd_validate(cfg: &RunConfig, grid_counts: Option<(usize, usize)>) -> Result<(), CliError> {
    let mut checks = Checks::new();

    // the configured closure must produce a finite work-channel rate
    let spec = cfg.engine_spec.to_spec();
    let baths = cfg.baths.to_spec();
    let closure = cfg.closure.to_spec();
    match kinetic_evaluate(&spec, &baths, &closure) {
        Ok(r) => checks.record(true, format!("closure probe: power = {}", sig9(r.power))),
        Err(e) => checks.record(false, format!("closure probe: {e}")),
    }

    // the three reference temperature pairs share one Carnot limit
    let pairs = [(5.0, 1.0), (2.5, 0.5), (1.0, 0.2)];
    let mut carnot_dev: f64 = 0.0;
    for (bc, bh) in pairs {
        let b = BathSpec::uniform(bc, bh, 2.0);
        match carnot_efficiency(&b) {
            Ok(eta) => carnot_dev = carnot_dev.max((eta - 0.8).abs()),
            Err(_) => carnot_dev = f64::INFINITY,
        }
    }
    checks.record(
        carnot_dev <= 1e-12,
        format!("carnot anchors: max |η_C − 0.8| = {carnot_dev:.1e} (≤ 1e-12)"),
    );

    // the coupling efficiency at the reference point is temperature-free
    let ref_spec = EngineSpec::bare(2.6, 0.5);
    let ref_frame = dressed_energies(&ref_spec);
    let mut inv_values = Vec::new();
    for (bc, bh) in pairs {
        let b = BathSpec::uniform(bc, bh, 2.0);
        match trilevel::kinetic::coupling_efficiency(&ref_frame, &b) {
            Ok(ce) => inv_values.push(1.0 / ce.eta_cp),
            Err(e) => {
                checks.record(false, format!("1/η^CP probe: {e}"));
                inv_values.clear();
                break;
            }
        }
    }
    if !inv_values.is_empty() {
        let spread = inv_values
            .iter()
            .map(|v| (v - inv_values[0]).abs())
            .fold(0.0, f64::max);
        let inv = inv_values[0];
        let pass = spread <= 1e-12 && (inv - 1.309).abs() <= 2e-3;
        if pass {
            checks.record(true, format!("1/η^CP = {inv:.3}"));
        } else {
            checks.record(
                false,
                format!("1/η^CP = {inv:.3} (expected 1.309 ± 0.002, spread {spread:.1e})"),
            );
        }
    }

    // every design case must respect the second law and the Carnot ceiling
    let levels = cfg.levels.to_spec();
    let grid = cfg.grid.to_spec(grid_counts);
    match (doe::build_design(&levels), grid.validate()) {
        (Ok(design), Ok(())) => {
            let mut max_slack = f64::NEG_INFINITY;
            for case in &design.cases {
                match doe::evaluate_case(case, &levels, &grid, cfg.engine, &closure) {
                    Ok((result, _)) => {
                        let v = result.min_sigma;
                        let shown = if v.abs() <= 1e-9 { 0.0 } else { v };
                        checks.record(
                            v >= -1e-9,
                            format!("case {}: min ⟨σ̇⟩ = {shown:.6} (≥ 0)", case.id),
                        );
                        if let Ok(b) = levels.bath_spec(case.levels) {
                            if let Ok(eta_c) = carnot_efficiency(&b) {
                                max_slack = max_slack.max(result.max_eta - eta_c);
                            }
                        }
                    }
                    Err(e) => checks.record(false, format!("case {}: {e}", case.id)),
                }
            }
            if max_slack.is_finite() {
                checks.record(
                    max_slack <= 1e-9,
                    format!("carnot ceiling: max η − η_C = {max_slack:.2e} (≤ 1e-9)"),
                );
            }
        }
        (Err(e), _) => checks.record(false, format!("design: {e}")),
        (_, Err(e)) => checks.record(false, format!("grid: {e}")),
    }

    // random draws must close the first law to rounding error
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws = 1000;
    let mut max_resid: f64 = 0.0;
    let mut draw_failure = None;
    for i in 0..draws {
        let spec = EngineSpec::bare(
            rng.random_range(1.0..=5.0),
            rng.random_range(0.0..=0.98),
        );
        let b = BathSpec {
            beta_c: rng.random_range(0.2..=5.0),
            beta_h: rng.random_range(0.2..=5.0),
            g_c_res: rng.random_range(0.05..=3.0),
            g_h_res: rng.random_range(0.05..=3.0),
            g_c_det: rng.random_range(0.0..=3.0),
            g_h_det: rng.random_range(0.0..=3.0),
        };
        match kinetic_evaluate(&spec, &b, &WorkChannelClosure::default()) {
            Ok(r) => {
                // both heat currents are measured into the system
                let scale = r.heat_in.abs().max(r.heat_out.abs()).max(1.0);
                max_resid = max_resid.max((r.power - r.heat_in - r.heat_out).abs() / scale);
            }
            Err(e) => {
                draw_failure = Some((i, e));
                break;
            }
        }
    }
    match draw_failure {
        None => checks.record(
            max_resid <= 1e-12,
            format!("first law: max residual = {max_resid:.2e} over {draws} draws (≤ 1e-12)"),
        ),
        Some((i, e)) => checks.record(false, format!("first law: draw {i} failed: {e}")),
    }

    // a handful of master-equation solves must come out physical, with the
    // independently computed diagonal currents cancelling
    let mut gkls_resid: f64 = 0.0;
    let mut gkls_sigma_min: f64 = 0.0;
    let mut gkls_failure = None;
    let spots = 5usize;
    for i in 0..spots {
        let (bc, bh) = pairs[i % pairs.len()];
        let spec = EngineSpec::bare(
            rng.random_range(1.5..=4.0),
            rng.random_range(0.1..=0.9),
        );
        let b = BathSpec {
            beta_c: bc,
            beta_h: bh,
            g_c_res: rng.random_range(0.5..=2.0),
            g_h_res: rng.random_range(0.5..=2.0),
            g_c_det: rng.random_range(0.0..=2.0),
            g_h_det: rng.random_range(0.0..=2.0),
        };
        match gkls_evaluate(&spec, &b) {
            Ok(r) => {
                // the diagonal parts of the two currents are computed
                // independently and must cancel at a stationary state
                gkls_resid = gkls_resid.max((r.q_diag_h + r.q_diag_c).abs());
                gkls_sigma_min = gkls_sigma_min.min(r.sigma);
                for p in r.populations {
                    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
                        gkls_failure = Some((i, anyhow!("population {p} out of range")));
                    }
                }
            }
            Err(e) => {
                gkls_failure = Some((i, e.into()));
                break;
            }
        }
    }
    match gkls_failure {
        None => checks.record(
            gkls_resid <= 1e-9 && gkls_sigma_min >= -1e-9,
            format!(
                "gkls spot check: {spots} solves, max cancellation residual = {gkls_resid:.2e}, \
                 min σ̇ = {gkls_sigma_min:.2e}"
            ),
        ),
        Some((i, e)) => checks.record(false, format!("gkls spot check: solve {i} failed: {e}")),
    }

    // both models must agree on the sign of the power at moderate coupling;
    // at strong coupling with a nearly closed lower gap they truly diverge
    let agree_baths = BathSpec::resonant(5.0, 1.0, 0.5, 0.5);
    let mut compared = 0;
    let mut disagreements = 0;
    let mut agree_failure = None;
    'outer: for i in 0..7 {
        for j in 0..7 {
            let spec = EngineSpec::bare(
                1.4 + 3.3 * f64::from(i) / 6.0,
                0.05 + 0.55 * f64::from(j) / 6.0,
            );
            let kin = match kinetic_evaluate(&spec, &agree_baths, &WorkChannelClosure::default()) {
                Ok(r) => r,
                Err(e) => {
                    agree_failure = Some(e);
                    break 'outer;
                }
            };
            let lind = match gkls_evaluate(&spec, &agree_baths) {
                Ok(r) => r,
                Err(e) => {
                    agree_failure = Some(e);
                    break 'outer;
                }
            };
            // compare only away from both stall lines
            if kin.margin.is_some_and(|m| m.abs() > 0.02) && lind.power.abs() > 1e-9 {
                compared += 1;
                if (kin.power > 0.0) != (lind.power > 0.0) {
                    disagreements += 1;
                }
            }
        }
    }
    match agree_failure {
        None => checks.record(
            disagreements == 0 && compared > 0,
            format!("model agreement: {compared} comparable cells, {disagreements} disagreements"),
        ),
        Some(e) => checks.record(false, format!("model agreement: {e}")),
    }

    if checks.all_pass {
        println!("validation: PASS");
        Ok(())
    } else {
        println!("validation: FAIL");
        Err(run_err(anyhow!("validation failed")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixture_parses() {
        let rows = parse_fixture(TABLE4_FIXTURE).unwrap();
        assert_eq!(rows.len(), 9);
        assert_eq!(rows[0].case_id, 1);
        assert_eq!(rows[5].levels, [2, 3, 1]);
        assert_eq!(rows[5].eta, 0.800);
        assert_eq!(rows[8].p, 0.038);
    }

    #[test]
    fn fixture_parser_rejects_garbage() {
        assert!(parse_fixture("case,dbeta\n1,2\n").is_err());
        assert!(parse_fixture("").is_err());
        let bad_field = format!("{FIXTURE_HEADER}\n1,1,1,1,0.1,0.2\n");
        assert!(parse_fixture(&bad_field).is_err());
        let bad_num = format!("{FIXTURE_HEADER}\n1,1,1,1,x,0.2,0.3\n");
        assert!(parse_fixture(&bad_num).is_err());
    }

    #[test]
    fn overrides_layer_over_defaults() {
        let ov = Overrides {
            engine: Some(EngineKind::Gkls),
            format: Some(OutFormat::Json),
            out: Some(PathBuf::from("artifacts")),
            seed: Some(7),
        };
        let cfg = load_config(None, &ov).unwrap();
        assert_eq!(cfg.engine, EngineKind::Gkls);
        assert_eq!(cfg.format, OutFormat::Json);
        assert_eq!(cfg.out_dir.as_deref(), Some("artifacts"));
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn exit_codes_split_by_kind() {
        assert_eq!(usage(anyhow!("x")).code(), 2);
        assert_eq!(run_err(anyhow!("x")).code(), 1);
    }
}
