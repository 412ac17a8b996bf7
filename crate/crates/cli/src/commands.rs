use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use sbmconf::credconf::bounds::{
    confidence_floor, critical_n, plan_strategy, required_level, required_level_raw,
    required_level_without_exp_factor,
};
use sbmconf::credconf::{condition_value, credible_set, enlarge, ConditionExtras, ConditionKind};
use sbmconf::experiments::{
    concentration_experiment, coverage_experiment, early_stopping_study, lr_test_experiment, BoundCheckResult,
    ConcentrationConfig, CoverageConfig, EarlyStopConfig, LrTestConfig, Strategy, Target, TruthSpec,
};
use sbmconf::mcmc::{run_chain_traced, run_chains, tv_distance};
use sbmconf::posterior::{enumerate_posterior_with, ranked_top};
use sbmconf::report::{CsvTable, JsonReport};
use sbmconf::sbm::{parse_labels, sample_graph, PhaseParams};
use sbmconf::{
    Assignment, ChainConfig, ConfidenceReport, Criterion, EngineConfig, Error, Graph, Mode, PosteriorTable, Result,
    SbmParams,
};

use crate::{
    usage_error, Command, ConcentrationArgs, ConditionsArgs, ConfidenceArgs, CoverageArgs, CredibleArgs,
    CriticalArgs, CurveArgs, EarlyStopArgs, EngineArgs, Format, LrTestArgs, McmcArgs, OutputArgs, PosteriorArgs,
    SampleArgs, StrategyArgs, TargetArg, TruthArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample(a) => sample(a),
        Command::Posterior(a) => posterior(a),
        Command::Credible(a) => credible(a),
        Command::Confidence(a) => confidence(a),
        Command::CriticalN(a) => critical(a),
        Command::Curve(a) => curve(a),
        Command::Conditions(a) => conditions(a),
        Command::Coverage(a) => coverage(a),
        Command::Mcmc(a) => mcmc(a),
        Command::EarlyStop(a) => early_stop(a),
        Command::Concentration(a) => concentration(a),
        Command::LrTest(a) => lr_test(a),
    }
}

// ---------------------------------------------------------------------------
// output plumbing

/// Rows shared by both output formats. Columns past `csv_cols` only appear in JSON.
struct Rows {
    header: Vec<&'static str>,
    csv_cols: usize,
    rows: Vec<Vec<Value>>,
}

impl Rows {
    fn new(header: &[&'static str]) -> Self {
        Rows { header: header.to_vec(), csv_cols: header.len(), rows: Vec::new() }
    }

    fn with_json_extras(header: &[&'static str], extras: &[&'static str]) -> Self {
        let mut r = Rows::new(header);
        r.header.extend_from_slice(extras);
        r
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn csv(&self) -> Result<String> {
        let mut t = CsvTable::new(&self.header[..self.csv_cols]);
        for row in &self.rows {
            t.push(row[..self.csv_cols].iter().map(cell).collect())?;
        }
        Ok(t.to_csv_string())
    }

    fn json(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|row| Value::Object(self.header.iter().map(|k| k.to_string()).zip(row.iter().cloned()).collect()))
            .collect()
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    json!(x)
}

fn opt<T: Serialize>(v: Option<T>) -> Value {
    json!(v)
}

/// Argument echo plus computed settings.
fn config_with<A: Serialize>(args: &A, extra: Value) -> Value {
    let mut config = serde_json::to_value(args).unwrap_or(Value::Null);
    if let (Value::Object(c), Value::Object(e)) = (&mut config, extra) {
        c.extend(e);
    }
    config
}

fn emit(name: &str, output: &OutputArgs, config: Value, seed: Option<u64>, rows: &Rows) -> Result<()> {
    let text = match output.format {
        Format::Csv => rows.csv()?,
        Format::Json => JsonReport::new(name, &config, &rows.json(), seed)?.to_json()? + "\n",
    };
    write_out(output.out.as_deref(), &text)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| with_path(e, path)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn with_path(e: io::Error, path: &Path) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| with_path(e, path))
}

fn read_graph(path: &Path) -> Result<Graph> {
    read_text(path)?.parse()
}

fn read_labels(path: &Path) -> Result<Vec<bool>> {
    parse_labels(read_text(path)?.trim())
}

fn check_n(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

fn params(m: &crate::ModelArgs) -> Result<SbmParams> {
    SbmParams::new(m.p, m.q)
}

fn engine(e: &EngineArgs) -> EngineConfig {
    EngineConfig { n_max: e.n_cap, threads: e.threads }
}

fn strategy(s: &StrategyArgs) -> Result<Strategy> {
    if s.plan {
        Ok(Strategy::Plan { a_grid: s.a_grid.clone() })
    } else {
        Ok(Strategy::Fixed { mode: s.mode.resolve()? })
    }
}

fn truth_spec(t: &TruthArgs, n: usize) -> Result<TruthSpec> {
    if t.random_truth {
        return Ok(TruthSpec::RandomSize);
    }
    match &t.truth {
        Some(path) => {
            let assignment = Assignment::canonicalize(&read_labels(path)?)?;
            check_n(n, assignment.n())?;
            Ok(TruthSpec::Fixed { assignment })
        }
        None => Ok(TruthSpec::Balanced),
    }
}

fn assignment_cell(n: usize, index: u64) -> Result<Value> {
    Ok(Value::String(Assignment::from_table_index(n, index)?.to_string()))
}

fn mode_cells(mode: Mode) -> (Value, Value) {
    (json!(mode.label()), opt(mode.fraction()))
}

// ---------------------------------------------------------------------------
// commands

fn sample(a: SampleArgs) -> Result<()> {
    let params = params(&a.model)?;
    let labels = match &a.truth {
        Some(path) => {
            let labels = read_labels(path)?;
            check_n(a.n, labels.len())?;
            labels
        }
        None => Assignment::blocks(a.n, a.m.unwrap_or(a.n / 2))?.labels().to_vec(),
    };
    let graph = sample_graph(&params, &labels, a.seed);
    let text = match a.output.format {
        // the graph text format is the CSV-side output of this command
        Format::Csv => graph.to_string(),
        Format::Json => {
            let edges: Vec<[usize; 2]> = graph.edges().map(|(i, j)| [i + 1, j + 1]).collect();
            let result = json!({ "n": graph.n(), "edges": edges });
            JsonReport::new("sample", &a, &[result], Some(a.seed))?.to_json()? + "\n"
        }
    };
    write_out(a.output.out.as_deref(), &text)
}

fn load_table(graph: &Path, model: &crate::ModelArgs, e: &EngineArgs) -> Result<PosteriorTable> {
    let g = read_graph(graph)?;
    enumerate_posterior_with(&g, &params(model)?, &engine(e))
}

fn posterior(a: PosteriorArgs) -> Result<()> {
    let g = read_graph(&a.graph)?;
    if let Some(n) = a.n {
        check_n(n, g.n())?;
    }
    let table = enumerate_posterior_with(&g, &params(&a.model)?, &engine(&a.engine))?;
    let n = table.n();
    let mut rows = Rows::new(&["index", "assignment", "mass"]);
    match a.top {
        Some(k) => {
            for (i, mass) in ranked_top(&table, k) {
                rows.push(vec![json!(i), assignment_cell(n, i)?, num(mass)]);
            }
        }
        None => {
            for i in 0..table.len() as u64 {
                rows.push(vec![json!(i), assignment_cell(n, i)?, num(table.mass(i))]);
            }
        }
    }
    let map = table.map_estimate().to_string();
    let config = config_with(&a, json!({ "log_norm": table.log_norm(), "map_estimate": map }));
    emit("posterior", &a.output, config, None, &rows)
}

fn credible(a: CredibleArgs) -> Result<()> {
    let table = load_table(&a.graph, &a.model, &a.engine)?;
    let n = table.n();
    let mode = a.mode.resolve()?;
    let level = match (a.level, a.alpha) {
        (Some(level), _) => level,
        (None, Some(alpha)) => required_level(n, a.model.p, a.model.q, alpha, mode)?,
        (None, None) => usage_error("credible needs --level or --alpha"),
    };
    let radius = a.radius.unwrap_or_else(|| mode.radius(n));
    let set = credible_set(&table, level)?;
    let mut extra = json!({
        "credible_level": level,
        "radius": radius,
        "achieved_mass": set.achieved_mass(),
        "credible_size": set.len(),
    });
    let rows = if a.enlarge {
        let enlarged = enlarge(&set, radius, n)?;
        extra["enlarged_size"] = json!(enlarged.len());
        let mut rows = Rows::new(&["index", "assignment"]);
        for &i in enlarged.indices() {
            rows.push(vec![json!(i), assignment_cell(n, i)?]);
        }
        rows
    } else {
        let mut rows = Rows::new(&["rank", "index", "assignment", "mass", "cumulative"]);
        let mut cum = 0.0;
        for (rank, (&i, &m)) in set.indices().iter().zip(set.masses()).enumerate() {
            cum += m;
            rows.push(vec![json!(rank + 1), json!(i), assignment_cell(n, i)?, num(m), num(cum)]);
        }
        rows
    };
    emit("credible", &a.output, config_with(&a, extra), None, &rows)
}

fn confidence(a: ConfidenceArgs) -> Result<()> {
    let (p, q) = (a.model.p, a.model.q);
    let report = if a.strategy.plan {
        plan_strategy(a.n, p, q, a.alpha, &a.strategy.a_grid)?
    } else {
        ConfidenceReport::for_mode(a.n, p, q, a.alpha, a.strategy.mode.resolve()?)?
    };
    let (mode, frac) = mode_cells(report.mode);
    let base = [
        "n",
        "p",
        "q",
        "alpha",
        "mode",
        "a",
        "required_level",
        "confidence_floor",
        "enlargement_radius",
        "critical_n",
        "degenerate",
    ];
    let mut row = vec![
        json!(report.n),
        num(p),
        num(q),
        num(a.alpha),
        mode,
        frac,
        num(report.required_level),
        num(report.confidence_floor),
        json!(report.enlargement_radius),
        opt(report.critical_n),
        json!(report.degenerate),
    ];
    let mut rows = match a.gamma {
        Some(gamma) => {
            row.push(num(gamma));
            row.push(num(confidence_floor(a.n, p, q, gamma, report.mode)?));
            let mut header = base.to_vec();
            header.extend(["gamma", "confidence_floor_at_gamma"]);
            Rows::new(&header)
        }
        None => Rows::new(&base),
    };
    rows.push(row);
    emit("confidence", &a.output, config_with(&a, json!({})), None, &rows)
}

fn critical(a: CriticalArgs) -> Result<()> {
    let mode = a.mode.resolve()?;
    let criterion: Criterion = a.criterion.into();
    let n = critical_n(a.model.p, a.model.q, a.alpha, mode, criterion)?;
    let text = match a.output.format {
        Format::Csv => n.map_or_else(|| "none".to_string(), |n| n.to_string()) + "\n",
        Format::Json => {
            let (mode_tag, frac) = mode_cells(mode);
            let result = json!({ "critical_n": n, "mode": mode_tag, "a": frac, "criterion": a.criterion });
            JsonReport::new("critical-n", &a, &[result], None)?.to_json()? + "\n"
        }
    };
    write_out(a.output.out.as_deref(), &text)
}

fn curve(a: CurveArgs) -> Result<()> {
    if a.n_min == 0 || a.n_min > a.n_max {
        return Err(Error::InvalidInput(format!("empty graph size range {}..={}", a.n_min, a.n_max)));
    }
    let mode = a.mode.resolve()?;
    let (p, q, alpha) = (a.model.p, a.model.q, a.alpha);
    let mut rows = Rows::with_json_extras(
        &["n", "required_level", "mode", "p", "q", "alpha", "a"],
        &["required_level_raw", "required_level_without_exp_factor"],
    );
    for n in a.n_min..=a.n_max {
        let (mode_tag, frac) = mode_cells(mode);
        let without_exp = match mode {
            Mode::Exact => num(required_level_without_exp_factor(n, p, q, alpha)?),
            Mode::Almost { .. } => Value::Null,
        };
        rows.push(vec![
            json!(n),
            num(required_level(n, p, q, alpha, mode)?),
            mode_tag,
            num(p),
            num(q),
            num(alpha),
            frac,
            num(required_level_raw(n, p, q, alpha, mode)?),
            without_exp,
        ]);
    }
    let extra = json!({
        "critical_n_literal": critical_n(p, q, alpha, mode, Criterion::Literal)?,
        "critical_n_half_level": critical_n(p, q, alpha, mode, Criterion::HalfLevel)?,
    });
    emit("curve", &a.output, config_with(&a, extra), None, &rows)
}

fn conditions(a: ConditionsArgs) -> Result<()> {
    let kind: ConditionKind = a.kind.parse()?;
    let coeffs = PhaseParams::new(kind.phase(), a.coef1, a.coef2)?;
    let extras = ConditionExtras { a: a.a, c: a.c };
    let mut rows = Rows::new(&["n", "kind", "value", "p", "q"]);
    for &n in &a.n_values {
        let value = condition_value(kind, &coeffs, n, extras)?;
        let pq = coeffs.at(n)?;
        rows.push(vec![json!(n), json!(kind.name()), num(value), num(pq.p()), num(pq.q())]);
    }
    emit("conditions", &a.output, config_with(&a, json!({})), None, &rows)
}

fn coverage(a: CoverageArgs) -> Result<()> {
    let config = CoverageConfig {
        n: a.n,
        p: a.model.p,
        q: a.model.q,
        alpha: a.alpha,
        strategy: strategy(&a.strategy)?,
        truth: truth_spec(&a.truth, a.n)?,
        replicates: a.reps,
        seed: a.seed,
        n_max: a.engine.n_cap,
        threads: a.engine.threads,
    };
    let r = coverage_experiment(&config)?;
    let text = match a.output.format {
        Format::Csv => {
            let mut rows = Rows::new(&[
                "replicates",
                "hits",
                "empirical_coverage",
                "binomial_3sigma",
                "claimed_floor",
                "required_level",
                "enlargement_radius",
                "trivial",
                "mean_credible_size",
            ]);
            rows.push(vec![
                json!(r.replicates),
                json!(r.hits),
                num(r.empirical_coverage),
                num(r.binomial_3sigma),
                num(r.claimed_floor),
                num(r.required_level),
                json!(r.enlargement_radius),
                json!(r.trivial),
                num(r.mean_credible_size),
            ]);
            rows.csv()?
        }
        Format::Json => JsonReport::new("coverage", &config, &[r], Some(a.seed))?.to_json()? + "\n",
    };
    write_out(a.output.out.as_deref(), &text)
}

fn mcmc(a: McmcArgs) -> Result<()> {
    let g = read_graph(&a.graph)?;
    let params = params(&a.model)?;
    let config = ChainConfig::new(a.steps, a.burn_in.unwrap_or(a.steps / 10), a.thin, a.seed)?;
    if a.trace.is_some() && a.chains != 1 {
        return Err(Error::InvalidInput("--trace needs a single chain".into()));
    }
    let (chain, acceptance) = if a.chains == 1 {
        let (chain, stats) = match &a.trace {
            Some(path) => traced_chain(&g, &params, &config, path)?,
            None => run_chain_traced(&g, &params, &config, |_| {})?,
        };
        (chain, Some(stats.acceptance_rate()))
    } else {
        (run_chains(&g, &params, &config, a.chains)?, None)
    };
    let tv = if a.exact {
        let table = enumerate_posterior_with(&g, &params, &engine(&a.engine))?;
        Some(tv_distance(&chain, &table)?)
    } else {
        None
    };
    let n = chain.n();
    let mut rows = Rows::new(&["index", "assignment", "count", "frequency"]);
    for (&i, &count) in chain.counts() {
        rows.push(vec![json!(i), assignment_cell(n, i)?, json!(count), num(chain.frequency(i))]);
    }
    let extra = json!({ "recorded": chain.total(), "acceptance_rate": acceptance, "tv_to_exact": tv });
    emit("mcmc", &a.output, config_with(&a, extra), Some(a.seed), &rows)
}

fn traced_chain(
    g: &Graph,
    params: &SbmParams,
    config: &ChainConfig,
    path: &PathBuf,
) -> Result<(sbmconf::EmpiricalPosterior, sbmconf::mcmc::ChainStats)> {
    let file = fs::File::create(path).map_err(|e| with_path(e, path))?;
    let mut w = BufWriter::new(file);
    let mut failed: Option<io::Error> = None;
    let header = writeln!(w, "step,index,log_likelihood");
    if let Err(e) = header {
        return Err(with_path(e, path));
    }
    let out = run_chain_traced(g, params, config, |row| {
        if failed.is_none() {
            if let Err(e) = writeln!(w, "{},{},{}", row.step, row.index, row.log_likelihood) {
                failed = Some(e);
            }
        }
    })?;
    if let Some(e) = failed {
        return Err(with_path(e, path));
    }
    w.flush().map_err(|e| with_path(e, path))?;
    Ok(out)
}

fn early_stop(a: EarlyStopArgs) -> Result<()> {
    let config = EarlyStopConfig {
        n: a.n,
        p: a.model.p,
        q: a.model.q,
        alpha: a.alpha,
        strategy: strategy(&a.strategy)?,
        truth: truth_spec(&a.truth, a.n)?,
        chain_lengths: a.lengths.clone(),
        burn_in: a.burn_in,
        thin: a.thin,
        replicates: a.reps,
        seed: a.seed,
        n_max: a.engine.n_cap,
        threads: a.engine.threads,
    };
    let study = early_stopping_study(&config)?;
    let mut rows = Rows::new(&["steps", "replicates", "hits", "coverage", "binomial_3sigma", "mean_tv"]);
    for r in &study.rows {
        rows.push(vec![
            json!(r.steps),
            json!(r.replicates),
            json!(r.hits),
            num(r.coverage),
            num(r.binomial_3sigma),
            opt(r.mean_tv),
        ]);
    }
    let extra = json!({
        "required_level": study.required_level,
        "enlargement_radius": study.enlargement_radius,
        "chosen_mode": study.mode,
        "exact_coverage": study.exact_coverage,
        "coverage_nondecreasing": study.coverage_nondecreasing,
        "tv_nonincreasing": study.tv_nonincreasing,
    });
    emit("early-stop", &a.output, config_with(&config, extra), Some(a.seed), &rows)
}

fn bound_rows(r: &BoundCheckResult) -> Rows {
    let mut rows = Rows::new(&[
        "relation",
        "replicates",
        "lhs_estimate",
        "lhs_stderr",
        "rhs_bound",
        "satisfied_within_3sigma",
    ]);
    rows.push(vec![
        json!(r.relation),
        json!(r.replicates),
        num(r.lhs_estimate),
        num(r.lhs_stderr),
        num(r.rhs_bound),
        json!(r.satisfied_within_3sigma),
    ]);
    rows
}

fn concentration(a: ConcentrationArgs) -> Result<()> {
    let target = match a.target {
        TargetArg::Singleton => Target::Singleton,
        TargetArg::Ball => Target::Ball { a: a.a.unwrap_or_else(|| usage_error("--target ball requires --a")) },
        TargetArg::Sphere => Target::Sphere { k: a.k.unwrap_or_else(|| usage_error("--target sphere requires --k")) },
        TargetArg::SizeGap => Target::SizeGap {
            delta: a.delta.unwrap_or_else(|| usage_error("--target size-gap requires --delta")),
        },
    };
    let truth = match &a.truth {
        Some(path) => Assignment::canonicalize(&read_labels(path)?)?,
        None => Assignment::blocks(a.n, a.n / 2)?,
    };
    check_n(a.n, truth.n())?;
    let config = ConcentrationConfig {
        n: a.n,
        p: a.model.p,
        q: a.model.q,
        target,
        truth,
        replicates: a.reps,
        seed: a.seed,
        n_max: a.engine.n_cap,
        threads: a.engine.threads,
    };
    let r = concentration_experiment(&config)?;
    emit("concentration", &a.output, config_with(&config, json!({})), Some(a.seed), &bound_rows(&r))
}

fn lr_test(a: LrTestArgs) -> Result<()> {
    let config = LrTestConfig {
        theta: a.theta.parse()?,
        eta: a.eta.parse()?,
        p: a.model.p,
        q: a.model.q,
        replicates: a.reps,
        seed: a.seed,
        threads: a.threads,
    };
    let r = lr_test_experiment(&config)?;
    emit("lr-test", &a.output, config_with(&config, json!({})), Some(a.seed), &bound_rows(&r))
}
