//! Benchmark and sweep harness: hub-selection timing, incremental-update
//! timing against full recomputation, and recovery success curves over the
//! sparsity and measurement-ratio grid. Everything is keyed by one base seed
//! so any cell can be reproduced bit-for-bit; wall-clock columns are the only
//! non-reproducible outputs and all end in `_ms`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamic::{DynamicEvent, DynamicState, EventKind};
use crate::error::{Error, Result};
use crate::graph::{generate_ba, line_graph, Network};
use crate::hub::{bfs_baseline_hub_within, cds_certify, connect_matching, HubOrigin};
use crate::matching::max_matching;
use crate::measure::{build_plan, effective_system, gen_signal, measure, NoiseModel};
use crate::recover::{assemble, judge, recover_l1, recover_omp, SolverKind};

/// Which hub selector(s) a run exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectorChoice {
    Matching,
    Bfs,
    Both,
}

impl SelectorChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectorChoice::Matching => "matching",
            SelectorChoice::Bfs => "bfs",
            SelectorChoice::Both => "both",
        }
    }

    fn origins(&self) -> Vec<HubOrigin> {
        match self {
            SelectorChoice::Matching => vec![HubOrigin::MatchingBased],
            SelectorChoice::Bfs => vec![HubOrigin::BfsBaseline],
            SelectorChoice::Both => vec![HubOrigin::MatchingBased, HubOrigin::BfsBaseline],
        }
    }
}

/// Flat key=value configuration with flag overrides layered on top.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    pub ratios: Vec<f64>,
    pub r_start: f64,
    pub r_step: f64,
    pub r_stop: f64,
    pub trials: usize,
    pub solver: SolverKind,
    pub selector: SelectorChoice,
    pub noise_eps: f64,
    pub seed: u64,
    pub events: usize,
    pub baseline_timeout_s: u64,
    pub lambda: f64,
    pub max_iter: usize,
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: vec![100],
            d: vec![10],
            ratios: vec![0.3, 0.4, 0.5],
            r_start: 0.05,
            r_step: 0.05,
            r_stop: 0.35,
            trials: 20,
            solver: SolverKind::Omp,
            selector: SelectorChoice::Matching,
            noise_eps: 0.0,
            seed: 1,
            events: 50,
            baseline_timeout_s: 600,
            lambda: 0.01,
            max_iter: 5000,
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.d.is_empty() {
            return Err(Error::InvalidParameter("need at least one n and one d".into()));
        }
        if self.r_start > self.r_stop {
            return Err(Error::InvalidParameter(format!(
                "r_start {} exceeds r_stop {}",
                self.r_start, self.r_stop
            )));
        }
        if self.r_step <= 0.0 {
            return Err(Error::InvalidParameter("r_step must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.ratios.is_empty() || self.ratios.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::InvalidParameter(
                "measurement ratios must lie in (0, 1]".into(),
            ));
        }
        if self.noise_eps < 0.0 {
            return Err(Error::InvalidParameter("noise_eps must be >= 0".into()));
        }
        Ok(())
    }

    /// Sparsity sweep values `r_start, r_start + r_step, ..., <= r_stop`.
    pub fn sparsity_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0usize;
        loop {
            let r = self.r_start + self.r_step * i as f64;
            if r > self.r_stop + 1e-12 {
                break;
            }
            out.push(r);
            i += 1;
        }
        out
    }

    /// Parses the flat `key = value` format; `#` starts a comment.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: "expected key = value".into(),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Parse { line, message: e.to_string() })?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn list<T: std::str::FromStr>(value: &str, what: &str) -> Result<Vec<T>> {
            value
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<T>()
                        .map_err(|_| Error::InvalidParameter(format!("bad {what}: {tok}")))
                })
                .collect()
        }
        fn scalar<T: std::str::FromStr>(value: &str, what: &str) -> Result<T> {
            value
                .trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidParameter(format!("bad {what}: {value}")))
        }
        match key {
            "n" => self.n = list(value, "n")?,
            "d" => self.d = list(value, "d")?,
            "ratios" => self.ratios = list(value, "ratio")?,
            "r_start" => self.r_start = scalar(value, "r_start")?,
            "r_step" => self.r_step = scalar(value, "r_step")?,
            "r_stop" => self.r_stop = scalar(value, "r_stop")?,
            "trials" => self.trials = scalar(value, "trials")?,
            "solver" => {
                self.solver = match value {
                    "omp" => SolverKind::Omp,
                    "ista" | "ista_l1" => SolverKind::IstaL1,
                    other => {
                        return Err(Error::InvalidParameter(format!("unknown solver {other}")))
                    }
                }
            }
            "selector" => {
                self.selector = match value {
                    "matching" => SelectorChoice::Matching,
                    "bfs" | "bfs_baseline" => SelectorChoice::Bfs,
                    "both" => SelectorChoice::Both,
                    other => {
                        return Err(Error::InvalidParameter(format!("unknown selector {other}")))
                    }
                }
            }
            "noise_eps" => self.noise_eps = scalar(value, "noise_eps")?,
            "seed" => self.seed = scalar(value, "seed")?,
            "events" => self.events = scalar(value, "events")?,
            "baseline_timeout_s" => self.baseline_timeout_s = scalar(value, "timeout")?,
            "lambda" => self.lambda = scalar(value, "lambda")?,
            "max_iter" => self.max_iter = scalar(value, "max_iter")?,
            "parallel" => self.parallel = scalar(value, "parallel")?,
            other => return Err(Error::InvalidParameter(format!("unknown config key {other}"))),
        }
        Ok(())
    }

    /// Effective configuration, written next to every run's outputs.
    pub fn snapshot(&self) -> String {
        let join_usize = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let join_f64 = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", join_usize(&self.n));
        let _ = writeln!(s, "d = {}", join_usize(&self.d));
        let _ = writeln!(s, "ratios = {}", join_f64(&self.ratios));
        let _ = writeln!(s, "r_start = {}", self.r_start);
        let _ = writeln!(s, "r_step = {}", self.r_step);
        let _ = writeln!(s, "r_stop = {}", self.r_stop);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "solver = {}", self.solver.as_str());
        let _ = writeln!(s, "selector = {}", self.selector.as_str());
        let _ = writeln!(s, "noise_eps = {}", self.noise_eps);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "events = {}", self.events);
        let _ = writeln!(s, "baseline_timeout_s = {}", self.baseline_timeout_s);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "max_iter = {}", self.max_iter);
        let _ = writeln!(s, "parallel = {}", self.parallel);
        s
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives a stream-specific seed from the base seed and a tag path, so
/// every stochastic step of every cell has its own reproducible stream.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix(base);
    for &t in tags {
        h = splitmix(h ^ t);
    }
    h
}

// Tag constants for the seed derivation paths.
const TAG_NETWORK: u64 = 1;
const TAG_PLAN: u64 = 2;
const TAG_SIGNAL: u64 = 3;
const TAG_EVENTS: u64 = 4;
const TAG_NOISE: u64 = 5;

/// RFC-4180 quoting for one CSV field.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

/// One recovery attempt; a row of `recover_rows.csv`.
#[derive(Clone, Debug)]
pub struct RecoverRow {
    pub selector: HubOrigin,
    pub solver: SolverKind,
    pub n: usize,
    pub d: usize,
    pub trial: usize,
    pub net_seed: u64,
    pub ratio: f64,
    pub r: f64,
    pub k: usize,
    pub total_n: usize,
    pub hub_size: usize,
    pub n_random: i64,
    pub infeasible: bool,
    pub success: bool,
    pub rel_error: Option<f64>,
    pub iterations: usize,
    pub support_size: usize,
    pub hub_ms: String,
    pub plan_ms: String,
    pub solve_ms: String,
}

impl RecoverRow {
    pub const HEADER: &'static str = "selector,solver,n,d,trial,net_seed,ratio,r,k,N,hub_size,n_random,infeasible,success,rel_error,iterations,support_size,hub_ms,plan_ms,solve_ms";

    /// Columns up to and excluding the trailing `_ms` timing columns; the
    /// reproducible part of the row.
    pub fn csv_deterministic(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.4},{:.4},{},{},{},{},{},{},{},{},{}",
            self.selector.as_str(),
            self.solver.as_str(),
            self.n,
            self.d,
            self.trial,
            self.net_seed,
            self.ratio,
            self.r,
            self.k,
            self.total_n,
            self.hub_size,
            self.n_random,
            self.infeasible as u8,
            self.success as u8,
            self.rel_error.map(|e| format!("{e:.9e}")).unwrap_or_default(),
            self.iterations,
            self.support_size,
        )
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{}",
            self.csv_deterministic(),
            self.hub_ms,
            self.plan_ms,
            self.solve_ms
        )
    }
}

/// Per-(selector, n, d, ratio, r) aggregate; a row of `recover_cells.csv`.
#[derive(Clone, Debug)]
pub struct CellSummary {
    pub selector: HubOrigin,
    pub solver: SolverKind,
    pub n: usize,
    pub d: usize,
    pub ratio: f64,
    pub r: f64,
    pub trials: usize,
    pub infeasible_trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

impl CellSummary {
    pub const HEADER: &'static str =
        "selector,solver,n,d,ratio,r,trials,infeasible_trials,successes,success_rate";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{:.4},{:.4},{},{},{},{:.4}",
            self.selector.as_str(),
            self.solver.as_str(),
            self.n,
            self.d,
            self.ratio,
            self.r,
            self.trials,
            self.infeasible_trials,
            self.successes,
            self.success_rate,
        )
    }
}

/// Everything a recovery sweep produced, plus any invariant violations the
/// harness noticed (non-empty means the run must exit nonzero).
#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub rows: Vec<RecoverRow>,
    pub cells: Vec<CellSummary>,
    pub violations: Vec<String>,
    /// `(n, d, trial, edge list text)` for persistence.
    pub networks: Vec<(usize, usize, usize, String)>,
    /// `(n, d, trial, selector, hub text)` for persistence.
    pub hubs: Vec<(usize, usize, usize, HubOrigin, String)>,
}

pub fn rows_csv(rows: &[RecoverRow]) -> String {
    let mut out = String::from(RecoverRow::HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv());
        out.push('\n');
    }
    out
}

pub fn cells_csv(cells: &[CellSummary]) -> String {
    let mut out = String::from(CellSummary::HEADER);
    out.push('\n');
    for cell in cells {
        out.push_str(&cell.csv());
        out.push('\n');
    }
    out
}

struct TrialJob {
    n: usize,
    d: usize,
    trial: usize,
}

/// Runs the full pipeline for every (selector, n, d, ratio, r, trial) cell.
/// One network per (n, d, trial); one plan per (selector, ratio); one signal
/// per r, shared across ratios and selectors.
pub fn run_recover_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let jobs: Vec<TrialJob> = cfg
        .n
        .iter()
        .flat_map(|&n| {
            cfg.d.iter().flat_map(move |&d| {
                (0..cfg.trials).map(move |trial| TrialJob { n, d, trial })
            })
        })
        .collect();

    let run_job = |job: &TrialJob| -> Result<SweepOutput> { run_trial(cfg, job) };
    let partials: Vec<Result<SweepOutput>> = if cfg.parallel {
        jobs.par_iter().map(run_job).collect()
    } else {
        jobs.iter().map(run_job).collect()
    };

    let mut out = SweepOutput::default();
    for partial in partials {
        let p = partial?;
        out.rows.extend(p.rows);
        out.violations.extend(p.violations);
        out.networks.extend(p.networks);
        out.hubs.extend(p.hubs);
    }
    out.rows.sort_by(|a, b| {
        (a.selector.as_str(), a.n, a.d, ord(a.ratio), ord(a.r), a.trial).cmp(&(
            b.selector.as_str(),
            b.n,
            b.d,
            ord(b.ratio),
            ord(b.r),
            b.trial,
        ))
    });
    out.networks.sort_by_key(|&(n, d, t, _)| (n, d, t));
    out.hubs.sort_by(|a, b| (a.0, a.1, a.2, a.3.as_str()).cmp(&(b.0, b.1, b.2, b.3.as_str())));

    out.cells = summarize(&out.rows);
    for row in &out.rows {
        if row.infeasible && row.success {
            out.violations
                .push(format!("infeasible cell reported success: {}", row.csv_deterministic()));
        }
    }
    Ok(out)
}

fn ord(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

fn run_trial(cfg: &ExperimentConfig, job: &TrialJob) -> Result<SweepOutput> {
    let &TrialJob { n, d, trial } = job;
    let mut out = SweepOutput::default();
    let net_seed = derive_seed(cfg.seed, &[TAG_NETWORK, n as u64, d as u64, trial as u64]);
    let g = generate_ba(n, d, net_seed)?;
    let lg = line_graph(&g);
    let m_edges = g.edge_count();
    out.networks.push((n, d, trial, crate::graph::write_edge_list(&g)));

    let sweep = cfg.sparsity_values();
    let signals: Vec<_> = sweep
        .iter()
        .enumerate()
        .map(|(ri, &r)| {
            let sig_seed =
                derive_seed(cfg.seed, &[TAG_SIGNAL, n as u64, d as u64, trial as u64, ri as u64]);
            gen_signal(m_edges, r, sig_seed)
        })
        .collect::<Result<Vec<_>>>()?;

    for (sel_idx, origin) in cfg.selector.origins().into_iter().enumerate() {
        let t0 = Instant::now();
        let hub = match origin {
            HubOrigin::MatchingBased => connect_matching(&g, &max_matching(&g))?,
            HubOrigin::BfsBaseline => bfs_baseline_hub_within(&lg, None)?
                .expect("no deadline was set"),
        };
        let hub_ms = fmt_ms(t0.elapsed());
        out.hubs.push((n, d, trial, origin, hub.to_text()));

        for (ratio_idx, &ratio) in cfg.ratios.iter().enumerate() {
            let total_n = (ratio * m_edges as f64).round() as usize;
            let n_random = total_n as i64 - hub.len() as i64 - 1;

            if n_random <= 0 {
                for &r in sweep.iter() {
                    out.rows.push(RecoverRow {
                        selector: origin,
                        solver: cfg.solver,
                        n,
                        d,
                        trial,
                        net_seed,
                        ratio,
                        r,
                        k: (r * m_edges as f64).round() as usize,
                        total_n,
                        hub_size: hub.len(),
                        n_random,
                        infeasible: true,
                        success: false,
                        rel_error: None,
                        iterations: 0,
                        support_size: 0,
                        hub_ms: hub_ms.clone(),
                        plan_ms: String::new(),
                        solve_ms: String::new(),
                    });
                }
                continue;
            }

            let plan_seed = derive_seed(
                cfg.seed,
                &[TAG_PLAN, n as u64, d as u64, trial as u64, ratio_idx as u64, sel_idx as u64],
            );
            let t0 = Instant::now();
            let plan = build_plan(&g, &lg, &hub, n_random as usize, plan_seed)?;
            let plan_ms = fmt_ms(t0.elapsed());

            for (ri, (&r, sig)) in sweep.iter().zip(&signals).enumerate() {
                let k = (r * m_edges as f64).round() as usize;
                let noise = if cfg.noise_eps > 0.0 {
                    NoiseModel::AdditiveUniform {
                        eps: cfg.noise_eps,
                        seed: derive_seed(
                            cfg.seed,
                            &[
                                TAG_NOISE,
                                n as u64,
                                d as u64,
                                trial as u64,
                                ratio_idx as u64,
                                ri as u64,
                                sel_idx as u64,
                            ],
                        ),
                    }
                } else {
                    NoiseModel::Noiseless
                };
                let y = measure(&plan, sig, noise)?;
                let (a, rhs) = effective_system(&plan, &y)?;

                let t0 = Instant::now();
                let (x_t, iterations) = match cfg.solver {
                    SolverKind::Omp => {
                        let k_max = ((1.5 * k as f64).ceil() as usize).min(plan.non_hub().len());
                        match recover_omp(&a, &rhs, k_max, 1e-9) {
                            Ok(o) => (o.x_t, o.iterations),
                            Err(Error::NoProgress) => {
                                (nalgebra::DVector::zeros(plan.non_hub().len()), 0)
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    SolverKind::IstaL1 => {
                        let o = recover_l1(&a, &rhs, cfg.lambda, cfg.max_iter, 1e-9)?;
                        (o.x_t, o.iterations)
                    }
                };
                let solve_ms = fmt_ms(t0.elapsed());

                let x_hat = assemble(&x_t, &plan, &y)?;
                let verdict = judge(&x_hat, sig, cfg.solver, iterations)?;
                out.rows.push(RecoverRow {
                    selector: origin,
                    solver: cfg.solver,
                    n,
                    d,
                    trial,
                    net_seed,
                    ratio,
                    r,
                    k,
                    total_n,
                    hub_size: hub.len(),
                    n_random,
                    infeasible: false,
                    success: verdict.success,
                    rel_error: Some(verdict.rel_error),
                    iterations,
                    support_size: verdict.recovered_support.len(),
                    hub_ms: hub_ms.clone(),
                    plan_ms: plan_ms.clone(),
                    solve_ms,
                });
            }
        }
    }
    Ok(out)
}

fn summarize(rows: &[RecoverRow]) -> Vec<CellSummary> {
    let mut cells: Vec<CellSummary> = Vec::new();
    for row in rows {
        let key_matches = |c: &CellSummary| {
            c.selector == row.selector
                && c.n == row.n
                && c.d == row.d
                && ord(c.ratio) == ord(row.ratio)
                && ord(c.r) == ord(row.r)
        };
        if let Some(cell) = cells.iter_mut().find(|c| key_matches(c)) {
            cell.trials += 1;
            cell.infeasible_trials += row.infeasible as usize;
            cell.successes += row.success as usize;
        } else {
            cells.push(CellSummary {
                selector: row.selector,
                solver: row.solver,
                n: row.n,
                d: row.d,
                ratio: row.ratio,
                r: row.r,
                trials: 1,
                infeasible_trials: row.infeasible as usize,
                successes: row.success as usize,
                success_rate: 0.0,
            });
        }
    }
    for cell in &mut cells {
        cell.success_rate = cell.successes as f64 / cell.trials as f64;
    }
    cells
}

/// A row of `bench_hub.csv`: one selector timed on one network.
#[derive(Clone, Debug)]
pub struct HubBenchRow {
    pub n: usize,
    pub d: usize,
    pub trial: usize,
    pub net_seed: u64,
    pub selector: HubOrigin,
    pub timeout: bool,
    pub hub_size: usize,
    pub connector_count: usize,
    pub matching_size: Option<usize>,
    pub select_ms: String,
}

impl HubBenchRow {
    pub const HEADER: &'static str =
        "n,d,trial,net_seed,selector,timeout,hub_size,connectors,matching_size,select_ms";

    pub fn csv_deterministic(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.d,
            self.trial,
            self.net_seed,
            self.selector.as_str(),
            self.timeout as u8,
            self.hub_size,
            self.connector_count,
            self.matching_size.map(|m| m.to_string()).unwrap_or_default(),
        )
    }

    pub fn csv(&self) -> String {
        format!("{},{}", self.csv_deterministic(), self.select_ms)
    }
}

#[derive(Clone, Debug, Default)]
pub struct HubBenchOutput {
    pub rows: Vec<HubBenchRow>,
    pub violations: Vec<String>,
}

pub fn hub_bench_csv(rows: &[HubBenchRow]) -> String {
    let mut out = String::from(HubBenchRow::HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv());
        out.push('\n');
    }
    out
}

/// Times hub selection per (n, d, trial) for the configured selector(s).
/// The baseline gets a wall-clock cap; capped runs are marked `timeout`.
pub fn run_bench_hub(cfg: &ExperimentConfig) -> Result<HubBenchOutput> {
    cfg.validate()?;
    let mut out = HubBenchOutput::default();
    for &n in &cfg.n {
        for &d in &cfg.d {
            for trial in 0..cfg.trials {
                let net_seed =
                    derive_seed(cfg.seed, &[TAG_NETWORK, n as u64, d as u64, trial as u64]);
                let g = generate_ba(n, d, net_seed)?;
                let lg = line_graph(&g);
                for origin in cfg.selector.origins() {
                    let row = match origin {
                        HubOrigin::MatchingBased => {
                            let t0 = Instant::now();
                            let m = max_matching(&g);
                            let hub = connect_matching(&g, &m)?;
                            let elapsed = t0.elapsed();
                            if !cds_certify(&hub, &lg).is_ok() {
                                out.violations.push(format!(
                                    "matching hub failed certification at n={n} d={d} trial={trial}"
                                ));
                            }
                            HubBenchRow {
                                n,
                                d,
                                trial,
                                net_seed,
                                selector: origin,
                                timeout: false,
                                hub_size: hub.len(),
                                connector_count: hub.connector_count(),
                                matching_size: Some(m.cardinality()),
                                select_ms: fmt_ms(elapsed),
                            }
                        }
                        HubOrigin::BfsBaseline => {
                            let deadline =
                                Instant::now() + Duration::from_secs(cfg.baseline_timeout_s);
                            let t0 = Instant::now();
                            let hub = bfs_baseline_hub_within(&lg, Some(deadline))?;
                            let elapsed = t0.elapsed();
                            match hub {
                                Some(hub) => {
                                    if !cds_certify(&hub, &lg).is_ok() {
                                        out.violations.push(format!(
                                            "bfs hub failed certification at n={n} d={d} trial={trial}"
                                        ));
                                    }
                                    HubBenchRow {
                                        n,
                                        d,
                                        trial,
                                        net_seed,
                                        selector: origin,
                                        timeout: false,
                                        hub_size: hub.len(),
                                        connector_count: 0,
                                        matching_size: None,
                                        select_ms: fmt_ms(elapsed),
                                    }
                                }
                                None => HubBenchRow {
                                    n,
                                    d,
                                    trial,
                                    net_seed,
                                    selector: origin,
                                    timeout: true,
                                    hub_size: 0,
                                    connector_count: 0,
                                    matching_size: None,
                                    select_ms: fmt_ms(elapsed),
                                },
                            }
                        }
                    };
                    out.rows.push(row);
                }
            }
        }
    }
    Ok(out)
}

/// A row of `bench_dynamic.csv`: one event, its incremental cost, and the
/// recompute-from-scratch cost on the same post-event graph.
#[derive(Clone, Debug)]
pub struct DynamicBenchRow {
    pub n: usize,
    pub d: usize,
    pub trial: usize,
    pub epoch: u64,
    pub kind: EventKind,
    pub i: usize,
    pub j: usize,
    pub oracle_ok: bool,
    pub matching_size: usize,
    pub hub_size: usize,
    pub dynamic_ms: String,
    pub rerun_ms: String,
}

impl DynamicBenchRow {
    pub const HEADER: &'static str =
        "n,d,trial,epoch,kind,i,j,oracle_ok,matching_size,hub_size,dynamic_ms,rerun_ms";

    pub fn csv_deterministic(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.d,
            self.trial,
            self.epoch,
            self.kind.as_str(),
            self.i,
            self.j,
            self.oracle_ok as u8,
            self.matching_size,
            self.hub_size,
        )
    }

    pub fn csv(&self) -> String {
        format!("{},{},{}", self.csv_deterministic(), self.dynamic_ms, self.rerun_ms)
    }
}

#[derive(Clone, Debug, Default)]
pub struct DynamicBenchOutput {
    pub rows: Vec<DynamicBenchRow>,
    pub violations: Vec<String>,
    pub skipped_events: usize,
    /// `(n, d, trial, initial edge list, event log, final hub text)`.
    pub replay_artifacts: Vec<(usize, usize, usize, String, String, String)>,
}

pub fn dynamic_bench_csv(rows: &[DynamicBenchRow]) -> String {
    let mut out = String::from(DynamicBenchRow::HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv());
        out.push('\n');
    }
    out
}

/// Draws a random deletion that keeps the graph connected, if any exists.
pub fn random_safe_deletion(g: &Network, rng: &mut impl Rng) -> Option<(usize, usize)> {
    let m = g.edge_count();
    if m <= 1 {
        return None;
    }
    for _ in 0..4 * m {
        let e = rng.gen_range(0..m);
        if !g.is_bridge(e) {
            let (u, v) = g.endpoints(e);
            return Some((u, v));
        }
    }
    None
}

/// Draws a random non-edge to insert, if the graph is not complete.
pub fn random_insertion(g: &Network, rng: &mut impl Rng) -> Option<(usize, usize)> {
    let n = g.vertex_count();
    if g.edge_count() >= n * (n - 1) / 2 {
        return None;
    }
    loop {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && !g.has_edge(u, v) {
            return Some((u.min(v), u.max(v)));
        }
    }
}

/// Applies `cfg.events` random deletions per (n, d, trial) network, timing
/// each incremental update against a full re-run on the same graph and
/// checking the re-run's matching cardinality as an oracle.
pub fn run_bench_dynamic(cfg: &ExperimentConfig) -> Result<DynamicBenchOutput> {
    cfg.validate()?;
    if cfg.events == 0 {
        return Err(Error::InvalidParameter("events must be at least 1".into()));
    }
    let mut out = DynamicBenchOutput::default();
    for &n in &cfg.n {
        for &d in &cfg.d {
            for trial in 0..cfg.trials {
                let net_seed =
                    derive_seed(cfg.seed, &[TAG_NETWORK, n as u64, d as u64, trial as u64]);
                let g = generate_ba(n, d, net_seed)?;
                let initial_edges = crate::graph::write_edge_list(&g);
                let mut state = DynamicState::new(g)?;
                let ev_seed =
                    derive_seed(cfg.seed, &[TAG_EVENTS, n as u64, d as u64, trial as u64]);
                let mut rng = ChaCha8Rng::seed_from_u64(ev_seed);
                let mut log: Vec<DynamicEvent> = Vec::new();

                for _ in 0..cfg.events {
                    let Some((i, j)) = random_safe_deletion(state.graph(), &mut rng) else {
                        out.skipped_events += 1;
                        continue;
                    };
                    let t0 = Instant::now();
                    state.apply_delete(i, j)?;
                    let dynamic_elapsed = t0.elapsed();

                    let t1 = Instant::now();
                    let rerun = state.rerun_baseline()?;
                    let rerun_elapsed = t1.elapsed();

                    let lg = line_graph(state.graph());
                    let oracle_ok = rerun.matching().cardinality()
                        == state.matching().cardinality()
                        && cds_certify(state.hub(), &lg).is_ok();
                    if !oracle_ok {
                        out.violations.push(format!(
                            "oracle mismatch at n={n} d={d} trial={trial} epoch={}",
                            state.epoch()
                        ));
                    }
                    log.push(DynamicEvent {
                        time: state.epoch(),
                        kind: EventKind::Delete,
                        i,
                        j,
                    });
                    out.rows.push(DynamicBenchRow {
                        n,
                        d,
                        trial,
                        epoch: state.epoch(),
                        kind: EventKind::Delete,
                        i,
                        j,
                        oracle_ok,
                        matching_size: state.matching().cardinality(),
                        hub_size: state.hub().len(),
                        dynamic_ms: fmt_ms(dynamic_elapsed),
                        rerun_ms: fmt_ms(rerun_elapsed),
                    });
                }
                out.replay_artifacts.push((
                    n,
                    d,
                    trial,
                    initial_edges,
                    crate::dynamic::write_event_log(&log),
                    state.hub().to_text(),
                ));
            }
        }
    }
    Ok(out)
}

/// Outcome of replaying a persisted event log against its initial network.
#[derive(Clone, Debug)]
pub struct ReplaySummary {
    pub epoch: u64,
    pub matching_size: usize,
    pub hub_size: usize,
    pub hub_sha256: String,
    /// `Some(true/false)` when a recorded final hub was available to compare.
    pub matches_recorded: Option<bool>,
}

/// Rebuilds the initial state from an edge list, replays the log, and
/// optionally checks the final hub against a recorded serialization.
pub fn run_replay(
    edge_list: &str,
    event_log: &str,
    recorded_hub: Option<&str>,
) -> Result<ReplaySummary> {
    let g = crate::graph::read_edge_list(edge_list)?;
    let mut state = DynamicState::new(g)?;
    let events = crate::dynamic::read_event_log(event_log)?;
    crate::dynamic::replay(&mut state, &events)?;
    let hub_text = state.hub().to_text();
    Ok(ReplaySummary {
        epoch: state.epoch(),
        matching_size: state.matching().cardinality(),
        hub_size: state.hub().len(),
        hub_sha256: sha256_hex(&hub_text),
        matches_recorded: recorded_hub.map(|rec| rec == hub_text),
    })
}

pub fn sha256_hex(text: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Median of timing strings produced by `fmt_ms`; used by summaries.
pub fn median_ms(values: &[&str]) -> f64 {
    let mut parsed: Vec<f64> = values.iter().filter_map(|s| s.parse().ok()).collect();
    parsed.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if parsed.is_empty() {
        return 0.0;
    }
    let mid = parsed.len() / 2;
    if parsed.len() % 2 == 1 {
        parsed[mid]
    } else {
        0.5 * (parsed[mid - 1] + parsed[mid])
    }
}

fn mean_ms(values: &[&str]) -> f64 {
    let parsed: Vec<f64> = values.iter().filter_map(|s| s.parse().ok()).collect();
    if parsed.is_empty() {
        return 0.0;
    }
    parsed.iter().sum::<f64>() / parsed.len() as f64
}

/// Per-(n, d, selector) aggregate of hub-selection timings.
pub fn hub_bench_summary_csv(rows: &[HubBenchRow]) -> String {
    let mut keys: Vec<(usize, usize, HubOrigin)> =
        rows.iter().map(|r| (r.n, r.d, r.selector)).collect();
    keys.sort_by(|a, b| (a.0, a.1, a.2.as_str()).cmp(&(b.0, b.1, b.2.as_str())));
    keys.dedup();
    let mut out =
        String::from("n,d,selector,trials,timeouts,mean_hub_size,mean_ms,median_ms\n");
    for (n, d, selector) in keys {
        let group: Vec<&HubBenchRow> = rows
            .iter()
            .filter(|r| r.n == n && r.d == d && r.selector == selector)
            .collect();
        let timeouts = group.iter().filter(|r| r.timeout).count();
        let finished: Vec<&&HubBenchRow> = group.iter().filter(|r| !r.timeout).collect();
        let mean_hub = if finished.is_empty() {
            0.0
        } else {
            finished.iter().map(|r| r.hub_size as f64).sum::<f64>() / finished.len() as f64
        };
        let times: Vec<&str> = group.iter().map(|r| r.select_ms.as_str()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.2},{:.3},{:.3}",
            n,
            d,
            selector.as_str(),
            group.len(),
            timeouts,
            mean_hub,
            mean_ms(&times),
            median_ms(&times),
        );
    }
    out
}

/// Per-(n, d) aggregate of incremental-vs-rerun timings.
pub fn dynamic_bench_summary_csv(rows: &[DynamicBenchRow]) -> String {
    let mut keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.n, r.d)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut out = String::from(
        "n,d,events,oracle_failures,mean_dynamic_ms,median_dynamic_ms,mean_rerun_ms,median_rerun_ms,median_speedup\n",
    );
    for (n, d) in keys {
        let group: Vec<&DynamicBenchRow> =
            rows.iter().filter(|r| r.n == n && r.d == d).collect();
        let failures = group.iter().filter(|r| !r.oracle_ok).count();
        let dyn_times: Vec<&str> = group.iter().map(|r| r.dynamic_ms.as_str()).collect();
        let rerun_times: Vec<&str> = group.iter().map(|r| r.rerun_ms.as_str()).collect();
        let med_dyn = median_ms(&dyn_times);
        let med_rerun = median_ms(&rerun_times);
        let speedup = if med_dyn > 0.0 { med_rerun / med_dyn } else { f64::INFINITY };
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.2}",
            n,
            d,
            group.len(),
            failures,
            mean_ms(&dyn_times),
            med_dyn,
            mean_ms(&rerun_times),
            med_rerun,
            speedup,
        );
    }
    out
}
