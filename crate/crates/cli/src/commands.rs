use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rayon::ThreadPool;
use serde_json::{json, Value};

use dephcap::bounds::{self, bounds_report_with_baseline, entropy_total_asym, entropy_total_exact};
use dephcap::checks::{self, CheckResult, CheckStatus};
use dephcap::dephasing;
use dephcap::phase_encoding::{holevo_lb_from_parts, holevo_phase_encoding};
use dephcap::special_math::thermal_entropy_g;
use dephcap::thermal_loss::{self, capacity_report, ThermalLossChannel};

use crate::cli::{BoundsArgs, CapacityArgs, Command, Fig2Args, Fig3Args, Format, PhaseArgs, VerifyArgs};
use crate::error::{CliError, CliResult};
use crate::output::{emit, format_num, json_text, Cell, Table};

/// Slack allowed on bound orderings, relative to the compared magnitudes.
const ORDER_SLACK: f64 = 1e-9;

pub const THREADS_VAR: &str = "DEPH_NUM_THREADS";

pub fn run(command: Command) -> CliResult<()> {
    let pool = thread_pool()?;
    match command {
        Command::Capacity(a) => capacity(&pool, a),
        Command::Fig2(a) => fig2(&pool, a),
        Command::Fig3(a) => fig3(&pool, a),
        Command::Bounds(a) => bounds_cmd(&pool, a),
        Command::PhaseEncoding(a) => phase_encoding(&pool, a),
        Command::Verify(a) => verify(&pool, a),
    }
}

fn thread_pool() -> CliResult<ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {THREADS_VAR} worker threads: {e}")))
}

/// Parallel map that keeps input order.
fn par_map<T, R, F>(pool: &ThreadPool, items: &[T], f: F) -> CliResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> CliResult<R> + Sync + Send,
{
    pool.install(|| items.par_iter().map(f).collect())
}

/// Validated parameters shared by the sweep commands.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub kappa: f64,
    pub noise: Vec<f64>,
    pub energy: f64,
    pub modes: Vec<u64>,
    pub quantities: Vec<&'static str>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl SweepConfig {
    fn validate(self) -> CliResult<Self> {
        if self.modes.is_empty() || self.noise.is_empty() {
            return Err(CliError::Usage("sweep grids must not be empty".into()));
        }
        for &nb in &self.noise {
            ThermalLossChannel::new(self.kappa, nb)?;
        }
        if !(self.energy.is_finite() && self.energy > 0.0) {
            return Err(CliError::Usage(format!("energy must be positive, got {}", self.energy)));
        }
        Ok(self)
    }

    fn channels(&self) -> CliResult<Vec<ThermalLossChannel>> {
        self.noise
            .iter()
            .map(|&nb| Ok(ThermalLossChannel::new(self.kappa, nb)?))
            .collect()
    }
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Numerical(what()))
    }
}

/// `a <= b` up to a relative slack.
fn at_most(a: f64, b: f64) -> bool {
    a <= b + ORDER_SLACK * a.abs().max(b.abs()).max(1e-300)
}

fn write_table(table: &Table, format: Format, out: Option<&Path>) -> CliResult<()> {
    match format {
        Format::Csv => emit(&table.to_csv(), out),
        Format::Json => emit(&json_text(table.to_json()), out),
    }
}

fn capacity(pool: &ThreadPool, a: CapacityArgs) -> CliResult<()> {
    let format = a.output.format.unwrap_or(Format::Json);
    let out = a.output.out.as_deref();
    if !a.pure_dephasing {
        if a.modes.values() != [1] {
            return Err(CliError::Usage("--modes applies to --pure-dephasing only".into()));
        }
        let energy = a.energy.unwrap_or(0.001);
        let ch = ThermalLossChannel::new(a.kappa, a.nb)?;
        let r = capacity_report(&ch, energy)?;
        ensure(r.hsw_capacity >= 0.0 && at_most(r.hsw_capacity, r.ea_capacity), || {
            format!("EA {} below HSW {}", r.ea_capacity, r.hsw_capacity)
        })?;
        return match format {
            Format::Json => emit(
                &json_text(json!({
                    "inputs": {"channel": "thermal-loss", "kappa": a.kappa, "n_b": a.nb, "energy": energy},
                    "ea": r.ea_capacity,
                    "hsw": r.hsw_capacity,
                    "ratio": r.advantage_ratio,
                    "intermediates": r.intermediate,
                })),
                out,
            ),
            Format::Csv => {
                let s = r.intermediate;
                let mut t = Table::new(vec![
                    "kappa", "n_b", "energy", "ea", "hsw", "ratio", "e_prime", "d", "a_plus", "a_minus",
                ]);
                t.push(vec![
                    a.kappa.into(),
                    a.nb.into(),
                    energy.into(),
                    r.ea_capacity.into(),
                    r.hsw_capacity.into(),
                    r.advantage_ratio.into(),
                    s.e_prime.into(),
                    s.d.into(),
                    s.a_plus.into(),
                    s.a_minus.into(),
                ]);
                write_table(&t, format, out)
            }
        };
    }

    let energy = a.energy.unwrap_or(1.0);
    let g = thermal_entropy_g(energy)?;
    let solutions = par_map(pool, a.modes.values(), |&m| {
        let sol = dephasing::solve(m, energy)?;
        let (lo, hi) = (m as f64 * g, 2.0 * m as f64 * g);
        ensure(at_most(lo, sol.capacity) && at_most(sol.capacity, hi), || {
            format!("capacity {} outside [{lo}, {hi}] at m = {m}", sol.capacity)
        })?;
        Ok(sol)
    })?;
    match format {
        Format::Json => {
            let records: Vec<Value> = solutions
                .iter()
                .map(|s| {
                    json!({
                        "inputs": {"channel": "pure-dephasing", "m": s.m, "energy": energy},
                        "ea_total": s.capacity,
                        "ea": s.per_mode(),
                        "hsw": g,
                        "ratio": s.ratio_to_hsw(),
                        "intermediates": {
                            "lambda1": s.lambda1,
                            "mean_check": s.mean_check,
                            "cutoff": s.dist.cutoff(),
                            "tail_bound": s.dist.tail_bound(),
                        },
                    })
                })
                .collect();
            let v = if records.len() == 1 { records[0].clone() } else { Value::Array(records) };
            emit(&json_text(v), out)
        }
        Format::Csv => {
            let mut t = Table::new(vec!["m", "energy", "ea_total", "ea", "hsw", "ratio", "lambda1"]);
            for s in &solutions {
                t.push(vec![
                    Cell::Int(s.m),
                    energy.into(),
                    s.capacity.into(),
                    s.per_mode().into(),
                    g.into(),
                    s.ratio_to_hsw().into(),
                    s.lambda1.into(),
                ]);
            }
            write_table(&t, format, out)
        }
    }
}

fn fig2(pool: &ThreadPool, a: Fig2Args) -> CliResult<()> {
    let cfg = SweepConfig {
        kappa: 1.0,
        noise: vec![0.0],
        energy: a.energy,
        modes: a.modes.values().to_vec(),
        quantities: vec!["m", "exact_ratio", "lower_bound_ratio", "asym_lower_ratio", "upper_ratio"],
        out: a.output.out,
        format: a.output.format.unwrap_or(Format::Csv),
    }
    .validate()?;
    let e = cfg.energy;
    let g = thermal_entropy_g(e)?;
    let rows = par_map(pool, &cfg.modes, |&m| {
        let mf = m as f64;
        let exact = dephasing::ea_capacity_pure_dephasing(m, e)? / (mf * g);
        let lower = (2.0 * g - entropy_total_exact(m, e)? / mf) / g;
        let asym = entropy_total_asym(m, e)?.value().map(|h| (2.0 * g - h / mf) / g);
        let upper = 2.0;
        ensure(at_most(lower, exact) && at_most(exact, upper) && at_most(1.0, exact), || {
            format!("ordering lower {lower} <= exact {exact} <= 2 violated at m = {m}")
        })?;
        Ok(vec![Cell::Int(m), exact.into(), lower.into(), asym.into(), upper.into()])
    })?;
    for w in rows.windows(2) {
        if let ([Cell::Int(m), Cell::Num(x0), ..], [_, Cell::Num(x1), ..]) = (w[0].as_slice(), w[1].as_slice()) {
            ensure(x1 > x0, || format!("exact ratio not increasing after m = {m}"))?;
        }
    }
    let mut t = Table::new(cfg.quantities.clone());
    rows.into_iter().for_each(|r| t.push(r));
    write_table(&t, cfg.format, cfg.out.as_deref())
}

fn fig3(pool: &ThreadPool, a: Fig3Args) -> CliResult<()> {
    let cfg = SweepConfig {
        kappa: a.kappa,
        noise: a.nb,
        energy: a.energy,
        modes: a.modes.values().to_vec(),
        quantities: vec!["m", "upper_ratio", "lb_ratio", "lb_asym_ratio", "chi_lb_ratio", "chi_lb_asym_ratio"],
        out: a.output.out,
        format: a.output.format.unwrap_or(Format::Csv),
    }
    .validate()?;
    let e = cfg.energy;
    // The photon-number entropies depend on m only, not on the channel.
    let entropies = par_map(pool, &cfg.modes, |&m| {
        Ok((entropy_total_exact(m, e)?, entropy_total_asym(m, e)?.value()))
    })?;
    let mut tables = Vec::new();
    for ch in cfg.channels()? {
        let upper = thermal_loss::ea_capacity(&ch, e)?;
        let hsw = thermal_loss::hsw_capacity(&ch, e)?;
        let chi = holevo_phase_encoding(e, &ch)?;
        ensure(at_most(chi, upper), || format!("Holevo {chi} above EA capacity {upper} at N_B = {}", ch.n_b()))?;
        let mut t = Table::new(cfg.quantities.clone());
        for (&m, &(h, h_asym)) in cfg.modes.iter().zip(&entropies) {
            let mf = m as f64;
            let lb = (upper - h / mf) / hsw;
            let lb_asym = h_asym.map(|h| (upper - h / mf) / hsw);
            let chi_lb = (chi - h / mf) / hsw;
            let chi_lb_asym = h_asym.map(|h| (chi - h / mf) / hsw);
            let up = upper / hsw;
            let asym_ok = match (lb_asym, chi_lb_asym) {
                (Some(l), Some(c)) => at_most(l, up) && at_most(c, l),
                _ => true,
            };
            ensure(at_most(lb, up) && at_most(chi_lb, lb) && asym_ok, || {
                format!("bound ordering violated at m = {m}, N_B = {}", ch.n_b())
            })?;
            t.push(vec![Cell::Int(m), up.into(), lb.into(), lb_asym.into(), chi_lb.into(), chi_lb_asym.into()]);
        }
        tables.push((ch.n_b(), t));
    }

    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    let ext = match cfg.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    for (nb, t) in tables {
        let path = dir.join(format!("fig3_nb{nb}.{ext}"));
        write_table(&t, cfg.format, Some(&path))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn bounds_cmd(pool: &ThreadPool, a: BoundsArgs) -> CliResult<()> {
    let format = a.output.format.unwrap_or(if a.modes.is_single() { Format::Json } else { Format::Csv });
    let cfg = SweepConfig {
        kappa: a.kappa,
        noise: vec![a.nb],
        energy: a.energy,
        modes: a.modes.values().to_vec(),
        quantities: vec![
            "m", "upper", "lower_exact", "lower_asym", "entropy_exact", "entropy_asym", "baseline",
            "upper_ratio", "lower_ratio", "lower_asym_ratio",
        ],
        out: a.output.out,
        format,
    }
    .validate()?;
    let ch = cfg.channels()?[0];
    let baseline = thermal_loss::hsw_capacity(&ch, cfg.energy)?;
    let reports = par_map(pool, &cfg.modes, |&m| {
        let r = bounds_report_with_baseline(m, &ch, cfg.energy, baseline)?;
        ensure(
            at_most(r.lower_exact, r.upper) && r.lower_asym.map_or(true, |l| at_most(l, r.upper)),
            || format!("lower bound above upper bound at m = {m}"),
        )?;
        Ok(r)
    })?;
    if cfg.format == Format::Json && reports.len() == 1 {
        let r = &reports[0];
        return emit(
            &json_text(json!({
                "inputs": {"kappa": cfg.kappa, "n_b": ch.n_b(), "energy": cfg.energy, "m": r.m},
                "bounds": r,
            })),
            cfg.out.as_deref(),
        );
    }
    let mut t = Table::new(cfg.quantities.clone());
    for r in &reports {
        t.push(vec![
            Cell::Int(r.m),
            r.upper.into(),
            r.lower_exact.into(),
            r.lower_asym.into(),
            r.entropy_exact.into(),
            r.entropy_asym.into(),
            r.baseline.into(),
            r.upper_ratio.into(),
            r.lower_ratio.into(),
            r.lower_asym_ratio.into(),
        ]);
    }
    write_table(&t, cfg.format, cfg.out.as_deref())
}

fn phase_encoding(pool: &ThreadPool, a: PhaseArgs) -> CliResult<()> {
    let ch = ThermalLossChannel::new(a.kappa, a.nb)?;
    let e = a.energy;
    let chi = holevo_phase_encoding(e, &ch)?;
    let ea = thermal_loss::ea_capacity(&ch, e)?;
    let hsw = thermal_loss::hsw_capacity(&ch, e)?;
    ensure(chi >= -1e-10 && at_most(chi, ea), || format!("Holevo {chi} outside [0, {ea}]"))?;
    let relative_gap = (e > 0.0).then(|| (ea - chi) / ea);

    let rows = match &a.modes {
        Some(grid) => par_map(pool, grid.values(), |&m| {
            let lb = holevo_lb_from_parts(m, e, chi)?;
            let ea_lb = bounds::ea_lower_bound(m, &ch, e)?;
            ensure(at_most(lb.per_mode, ea_lb), || format!("Holevo bound above EA bound at m = {m}"))?;
            Ok((lb, ea_lb))
        })?,
        None => Vec::new(),
    };
    let format = a.output.format.unwrap_or(if rows.is_empty() { Format::Json } else { Format::Csv });
    let out = a.output.out.as_deref();
    match format {
        Format::Json => {
            let bounds: Vec<Value> = rows
                .iter()
                .map(|(lb, ea_lb)| {
                    json!({"m": lb.m, "chi_lb": lb.per_mode, "chi_lb_asym": lb.per_mode_asym, "ea_lower_bound": ea_lb})
                })
                .collect();
            emit(
                &json_text(json!({
                    "inputs": {"kappa": a.kappa, "n_b": a.nb, "energy": e},
                    "chi": chi,
                    "ea": ea,
                    "hsw": hsw,
                    "relative_gap": relative_gap,
                    "lower_bounds": bounds,
                })),
                out,
            )
        }
        Format::Csv if rows.is_empty() => {
            let mut t = Table::new(vec!["kappa", "n_b", "energy", "chi", "ea", "hsw", "relative_gap"]);
            t.push(vec![a.kappa.into(), a.nb.into(), e.into(), chi.into(), ea.into(), hsw.into(), relative_gap.into()]);
            write_table(&t, format, out)
        }
        Format::Csv => {
            let mut t = Table::new(vec!["m", "chi", "chi_lb", "chi_lb_asym", "ea_lower_bound"]);
            for (lb, ea_lb) in &rows {
                t.push(vec![Cell::Int(lb.m), chi.into(), lb.per_mode.into(), lb.per_mode_asym.into(), (*ea_lb).into()]);
            }
            write_table(&t, format, out)
        }
    }
}

fn verify(pool: &ThreadPool, a: VerifyArgs) -> CliResult<()> {
    let all = checks::all_checks();
    let selected: Vec<_> = if a.checks.is_empty() {
        all
    } else {
        a.checks
            .iter()
            .map(|name| {
                checks::find(name).ok_or_else(|| {
                    let known: Vec<_> = checks::all_checks().iter().map(|c| c.name).collect();
                    CliError::Usage(format!("unknown check '{name}'; known: {}", known.join(", ")))
                })
            })
            .collect::<CliResult<_>>()?
    };
    let results: Vec<CheckResult> = par_map(pool, &selected, |c| Ok(c.run()))?;
    let out = a.output.out.as_deref();
    match a.output.format {
        None => emit(&verify_table(&results), out)?,
        Some(Format::Json) => emit(&json_text(serde_json::to_value(&results).expect("serializable")), out)?,
        Some(Format::Csv) => {
            let mut t = Table::new(vec!["check", "value", "reference", "delta", "tolerance", "status"]);
            for r in &results {
                t.push(vec![
                    Cell::Text(r.name),
                    r.value.into(),
                    r.reference.into(),
                    r.delta.into(),
                    r.tolerance.into(),
                    Cell::Text(status_word(r.status)),
                ]);
            }
            write_table(&t, Format::Csv, out)?;
        }
    }
    for r in results.iter().filter(|r| r.status == CheckStatus::Skipped) {
        eprintln!("warning: {} skipped: {}", r.name, r.note.as_deref().unwrap_or(""));
    }
    let failed: Vec<_> = results.iter().filter(|r| r.status == CheckStatus::Fail).map(|r| r.name).collect();
    ensure(failed.is_empty(), || format!("oracle checks failed: {}", failed.join(", ")))
}

fn status_word(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "FAIL",
        CheckStatus::Skipped => "skipped",
    }
}

fn verify_table(results: &[CheckResult]) -> String {
    let mut s = format!(
        "{:<34} {:>19} {:>19} {:>19} {:>19}  {}\n",
        "check", "value", "reference", "delta", "tolerance", "status"
    );
    for r in results {
        s.push_str(&format!(
            "{:<34} {:>19} {:>19} {:>19} {:>19}  {}\n",
            r.name,
            format_num(r.value),
            format_num(r.reference),
            format_num(r.delta),
            format_num(r.tolerance),
            status_word(r.status)
        ));
        if let Some(note) = &r.note {
            s.push_str(&format!("    {note}\n"));
        }
    }
    s
}
