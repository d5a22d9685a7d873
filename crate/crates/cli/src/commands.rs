use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use gtsp_core::oracle::{self, OracleResult, Witness};
use gtsp_core::{
    descend, solve, upperbound, CostMatrix, DescentConfig, DescentTrace, Permutation, SolveConfig, SolveMode, Tour,
};
use serde_json::json;

use crate::report::{AssignmentReport, FwkReport, OracleReport, RunReport, TourReport, UpperboundReport};
use crate::{Cli, CliError, Command, Global, Method, Mode};

struct Clock {
    enabled: bool,
    stages: BTreeMap<&'static str, u128>,
}

impl Clock {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.stages.entry(stage).or_default() += start.elapsed().as_millis();
        out
    }

    fn finish(self, report: &mut RunReport) {
        if self.enabled {
            for (stage, ms) in &self.stages {
                println!("time {stage}: {ms} ms");
            }
            report.timings = Some(self.stages);
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    if g.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.workers)
        .build()
        .map_err(|e| CliError::Invariant(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, &g))
}

/// Reads an instance file, or generates one for `random:N` / `random-sym:N`.
fn load(spec: &str, seed: Option<u64>) -> Result<(String, CostMatrix), CliError> {
    for (prefix, symmetric) in [("random:", false), ("random-sym:", true)] {
        if let Some(n) = spec.strip_prefix(prefix) {
            let n: usize = n.parse().map_err(|_| CliError::Usage(format!("bad vertex count in {spec:?}")))?;
            if n < 3 {
                return Err(CliError::Usage("generated instances need at least 3 vertices".into()));
            }
            let seed = seed.unwrap_or(0);
            return Ok((format!("{spec}@{seed}"), CostMatrix::random(n, symmetric, 100, seed)));
        }
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Instance(format!("{spec}: {e}")))?;
    let m = CostMatrix::parse(&text).map_err(|e| CliError::Instance(format!("{spec}: {e}")))?;
    let name = path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
    Ok((name, m))
}

fn parse_tour(text: &str) -> Result<Tour, CliError> {
    let ids = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| CliError::Instance(format!("bad vertex id {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Tour::from_one_based(&ids).map_err(CliError::from)
}

fn print_tour(label: &str, r: &TourReport) {
    let ids: Vec<String> = r.tour.iter().map(|v| v.to_string()).collect();
    println!("{label}: ({}) value {} aav {}", ids.join(" "), r.value, r.aav);
}

fn run_oracle(m: &CostMatrix, method: Method) -> Result<OracleResult, CliError> {
    Ok(match method {
        Method::Brute => oracle::brute_force_tour(m)?,
        Method::Dp => oracle::held_karp(m)?,
        Method::Hungarian => oracle::assignment_optimal(m)?,
    })
}

fn oracle_report(m: &CostMatrix, r: &OracleResult) -> Result<OracleReport, CliError> {
    if !r.revalidate(m) {
        return Err(CliError::Invariant(format!("{} witness does not revalidate", r.method)));
    }
    let witness = match &r.witness {
        Witness::Tour(t) => canonical(t, m.is_symmetric()).to_string(),
        Witness::Permutation(p) => p.to_string(),
    };
    Ok(OracleReport { method: r.method, value: r.value, witness })
}

/// Tours print from vertex 1; undirected ones in their smaller direction.
fn canonical(t: &Tour, symmetric: bool) -> Tour {
    if symmetric {
        t.canonical_undirected()
    } else {
        Tour::new(t.rotated_to(0)).expect("rotation of a tour")
    }
}

fn dispatch(command: Command, g: &Global) -> Result<(), CliError> {
    let mut clock = Clock { enabled: g.timings, stages: BTreeMap::new() };
    let report = match command {
        Command::Assignment { instance } => {
            let (name, m) = load(&instance, g.seed)?;
            let mut report = RunReport::new("assignment", name, &m, g.seed);
            let d = clock.time("descent", || free_descent(&m))?;
            println!("derangement: {}", d.derangement);
            println!("value: {}", d.value);
            println!("trace length: {}", d.steps.len());
            report.assignment = Some(assignment_report(&d));
            clock.finish(&mut report);
            report
        }
        Command::Upperbound { instance, beam } => {
            let (name, m) = load(&instance, g.seed)?;
            let mut report = RunReport::new("upperbound", name, &m, g.seed);
            report.config.insert("beam", json!(beam));
            let ub = clock.time("upperbound", || upperbound(&m, beam))?;
            let best = TourReport::new(&m, &ub.tour);
            println!("assignment: {} value {}", ub.assignment.derangement, ub.assignment.value);
            print_tour("upperbound", &best);
            report.assignment = Some(assignment_report(&ub.assignment));
            report.upperbound = Some(UpperboundReport { candidates: ub.candidates, best });
            clock.finish(&mut report);
            report
        }
        Command::Solve { instance, mode, k, width, beam, exhaustive, oracle } => {
            let (name, m) = load(&instance, g.seed)?;
            let mut report = RunReport::new("solve", name, &m, g.seed);
            let core_mode = match mode {
                Mode::Matching => SolveMode::Matching,
                Mode::Exact => SolveMode::Exact,
                Mode::H1 => SolveMode::H1,
                Mode::H2 => SolveMode::H2,
            };
            if width == Some(0) {
                return Err(CliError::Usage("--width must be at least 1".into()));
            }
            let cfg = SolveConfig { mode: core_mode, beam, k: (k > 0).then_some(k), width, exhaustive };
            report.config.insert("mode", json!(core_mode));
            report.config.insert("k", json!(cfg.k));
            report.config.insert("width", json!(width));
            report.config.insert("beam", json!(beam));
            report.config.insert("exhaustive", json!(exhaustive));
            report.config.insert("oracle", json!(oracle));
            let sol = clock.time("solve", || solve(&m, &cfg))?;
            let ub = TourReport::new(&m, &sol.upper.tour);
            let best = TourReport::new(&m, &sol.tour);
            println!("assignment: {} value {}", sol.upper.assignment.derangement, sol.upper.assignment.value);
            print_tour("upperbound", &ub);
            for run in &sol.refine_runs {
                let values: Vec<String> = run.steps.iter().map(|s| s.value.to_string()).collect();
                println!("refine from {}: [{}] -> {}", run.start_value, values.join(", "), run.value);
            }
            if core_mode == SolveMode::Exact {
                let h: Vec<String> = sol.bound_history.iter().map(|v| v.to_string()).collect();
                println!("bound history: {}", h.join(" -> "));
            }
            print_tour("tour", &best);
            report.assignment = Some(assignment_report(&sol.upper.assignment));
            report.upperbound = Some(UpperboundReport { candidates: sol.upper.candidates.clone(), best: ub });
            if core_mode == SolveMode::Matching {
                report.refine = Some(sol.refine_runs);
            }
            if core_mode == SolveMode::Exact {
                report.fwk = Some(FwkReport { bound_history: sol.bound_history, rounds: sol.rounds });
            }
            if oracle {
                let r = clock.time("oracle", || run_oracle(&m, Method::Dp))?;
                let o = oracle_report(&m, &r)?;
                if o.value > best.value {
                    return Err(CliError::Invariant(format!("oracle {} above solver tour {}", o.value, best.value)));
                }
                println!("oracle: {} (optimal: {})", o.value, o.value == best.value);
                report.oracle = Some(o);
            }
            report.solution = Some(best);
            clock.finish(&mut report);
            report
        }
        Command::Oracle { instance, method } => {
            let (name, m) = load(&instance, g.seed)?;
            let mut report = RunReport::new("oracle", name, &m, g.seed);
            let r = clock.time("oracle", || run_oracle(&m, method))?;
            let o = oracle_report(&m, &r)?;
            println!("{}: {} {}", o.method, o.value, o.witness);
            report.config.insert("method", json!(o.method));
            report.oracle = Some(o);
            clock.finish(&mut report);
            report
        }
        Command::Verify { instance, tour } => {
            let (name, m) = load(&instance, g.seed)?;
            let mut report = RunReport::new("verify", name, &m, g.seed);
            let t = parse_tour(&tour)?;
            if t.len() != m.n() {
                return Err(CliError::Instance(format!("tour has {} vertices, instance has {}", t.len(), m.n())));
            }
            let r = TourReport::new(&m, &t);
            println!("value: {}", r.value);
            println!("aav: {}", r.aav);
            report.solution = Some(r);
            clock.finish(&mut report);
            report
        }
    };
    if let Some(path) = &g.json {
        write_report(path, &report)?;
    }
    Ok(())
}

fn assignment_report(t: &DescentTrace) -> AssignmentReport {
    AssignmentReport { derangement: t.derangement.to_string(), value: t.value, steps: t.steps.clone() }
}

/// Descent from the rotation `1 -> 2 -> ... -> n -> 1`.
fn free_descent(m: &CostMatrix) -> Result<DescentTrace, CliError> {
    let n = m.n();
    Ok(descend(m, &Permutation::rotation(n), &DescentConfig::new(n))?)
}

fn write_report(path: &Path, report: &RunReport) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Invariant(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Instance(format!("{}: {e}", path.display())))
}
