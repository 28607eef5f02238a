//! Command-line pipeline over the `homodiff` library. Each subcommand reads
//! plain files, writes its artifacts into `--out`, and leaves a
//! `manifest.json` recording parameters, checksums and timings.

pub mod args;
pub mod error;
pub mod manifest;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use homodiff::diffusion::{read_state_csv, write_state_csv, StateMeta};
use homodiff::evaluation::{write_strata_csv, write_threshold_csv, Bucketing, DEFAULT_TAUS};
use homodiff::graph::{write_edge_list, LoadOptions, LoadStats};
use homodiff::homophily::{communication_matrix_with_axis, surrogate_matrix_with_axis, tally_edges};
use homodiff::labels::write_label_file;
use homodiff::synth::{generate, PairSampling};
use homodiff::{
    argmax_assign, constrained_assign, empirical_distribution, evaluate, init_state,
    load_edge_list, load_ground_truth, run_from, social_effect_matrix, split_train_validation,
    AgeBinning, DiffusionParams, EvalReport, Graph, LabelStore, Node, NodeIdMap, Prediction,
    Split, SynthConfig,
};

pub use args::Cli;
use args::*;
pub use error::{CliError, CliResult};
use manifest::RunManifest;

/// Read log filters from `HOMODIFF_LOG` (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("HOMODIFF_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Run a parsed command line, inside a dedicated thread pool when `--threads` is set.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.threads {
        Some(0) => Err(CliError::Parameter("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Parameter(format!("thread pool: {e}")))?
            .install(|| dispatch(cli.command, cli.threads)),
        None => dispatch(cli.command, None),
    }
}

fn dispatch(command: Command, threads: Option<usize>) -> CliResult<()> {
    match command {
        Command::Synth(a) => cmd_synth(&a).map(|_| ()),
        Command::Homophily(a) => cmd_homophily(&a).map(|_| ()),
        Command::Infer(a) => cmd_infer(&a, threads).map(|_| ()),
        Command::Evaluate(a) => {
            let report = cmd_evaluate(&a)?;
            print_summary(&report, &mut std::io::stdout().lock())?;
            Ok(())
        }
        Command::All(a) => {
            let report = cmd_all(&a, threads)?;
            print_summary(&report, &mut std::io::stdout().lock())?;
            Ok(())
        }
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::file(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::file(path, e))
}

fn out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))
}

fn load_with<T>(path: &Path, f: impl FnOnce(BufReader<File>) -> homodiff::Result<T>) -> CliResult<T> {
    f(open(path)?).map_err(|e| CliError::file(path, e))
}

/// Graph, id map and labels from the shared input flags.
pub struct Inputs {
    pub graph: Graph,
    pub map: NodeIdMap,
    pub labels: LabelStore,
    pub binning: AgeBinning,
    pub load_stats: LoadStats,
}

fn load_inputs(a: &InputArgs, manifest: &mut RunManifest) -> CliResult<Inputs> {
    let binning = AgeBinning::new(a.age_bounds.clone(), None)
        .map_err(|e| match e {
            homodiff::Error::InvalidParameter(m) => CliError::Parameter(format!("--age-bounds: {m}")),
            e => e.into(),
        })?;
    let delim = a.delimiter.into();
    let (graph, map, load_stats) = load_with(&a.edges, |r| {
        load_edge_list(
            r,
            LoadOptions {
                delimiter: delim,
                ..Default::default()
            },
        )
    })?;
    let (labels, label_stats) =
        load_with(&a.labels, |r| load_ground_truth(r, &map, &binning, delim))?;
    log::info!(
        "{} nodes, {} edges, {} labeled ({} label ids not in graph)",
        graph.node_count(),
        graph.edge_count(),
        labels.len(),
        label_stats.unmapped
    );
    manifest.input(&a.edges)?;
    manifest.input(&a.labels)?;
    manifest.stat("edge_list", load_stats);
    manifest.stat("label_file", label_stats);
    manifest.stat("nodes", graph.node_count());
    manifest.stat("edges", graph.edge_count());
    Ok(Inputs {
        graph,
        map,
        labels,
        binning,
        load_stats,
    })
}

pub fn cmd_synth(a: &SynthArgs) -> CliResult<PathBuf> {
    let mut manifest = RunManifest::new("synth", a);
    manifest.stage("generate");
    let mut cfg = SynthConfig::from_mean_degrees(
        a.groups,
        a.group_size,
        a.intra_degree,
        a.inter_degree,
        a.labeled_fraction,
        a.seed,
    )
?;
    cfg.sampling = match a.sampling {
        SamplingArg::PairScan => PairSampling::PairScan,
        SamplingArg::GeometricSkip => PairSampling::GeometricSkip,
    };
    let out = generate(&cfg)?;
    manifest.stat("nodes", out.graph.node_count());
    manifest.stat("edges", out.graph.edge_count());

    manifest.stage("write");
    out_dir(&a.out)?;
    let map = NodeIdMap::identity(out.graph.node_count());
    let delim = a.delimiter.into();
    let edges = a.out.join("edges.csv");
    write_edge_list(&out.graph, &map, delim, create(&edges)?)?;
    let truth = a.out.join("truth.csv");
    write_label_file(&out.truth, &map, delim, create(&truth)?)?;
    let labels = a.out.join("labels.csv");
    write_label_file(&out.observed, &map, delim, create(&labels)?)?;
    for p in [&edges, &truth, &labels] {
        manifest.output(p)?;
    }
    manifest.write(&a.out)
}

/// Per-run homophily products, kept for callers that want the numbers.
pub struct HomophilyOutput {
    pub social_effect: homodiff::homophily::SocialEffect,
    pub manifest: PathBuf,
}

pub fn cmd_homophily(a: &HomophilyArgs) -> CliResult<HomophilyOutput> {
    if !(a.pseudocount >= 0.0 && a.pseudocount.is_finite()) {
        return Err(CliError::Parameter(format!(
            "--pseudocount {} must be a finite value >= 0",
            a.pseudocount
        )));
    }
    let mut manifest = RunManifest::new("homophily", a);
    manifest.stage("load");
    let inp = load_inputs(&a.input, &mut manifest)?;
    if inp.labels.len() < 2 {
        return Err(CliError::Input(format!(
            "only {} labeled node(s) appear in the edge list; need at least 2",
            inp.labels.len()
        )));
    }

    manifest.stage("matrices");
    let (labels, axis) = match a.granularity {
        Granularity::Category => (inp.labels.clone(), inp.binning.names().to_vec()),
        Granularity::Year => inp.labels.by_year()?,
    };
    let tally = tally_edges(&inp.graph, &labels);
    manifest.stat("labeled_edges", tally.labeled);
    manifest.stat("skipped_edges", tally.skipped);
    let c = communication_matrix_with_axis(&inp.graph, &labels, axis.clone());
    let r = surrogate_matrix_with_axis(&inp.graph, &labels, axis)?;
    let s = social_effect_matrix(&c, &r, a.pseudocount)?;
    let (diag, off) = s.diagonal_contrast();
    manifest.stat("social_effect_diagonal_mean", diag);
    manifest.stat("social_effect_off_diagonal_mean", off);

    manifest.stage("write");
    out_dir(&a.out)?;
    let mut files = Vec::new();
    for (name, csv, json) in [
        ("communication", write_to(&c, |m, w| m.write_csv(w)), c.to_json()?),
        ("surrogate", write_to(&r, |m, w| m.write_csv(w)), r.to_json()?),
        ("social_effect", write_to(&s, |m, w| m.write_csv(w)), s.to_json()?),
    ] {
        let p = a.out.join(format!("{name}.csv"));
        fs::write(&p, csv?).map_err(|e| CliError::file(&p, e))?;
        files.push(p);
        let p = a.out.join(format!("{name}.json"));
        fs::write(&p, json + "\n").map_err(|e| CliError::file(&p, e))?;
        files.push(p);
    }
    for p in &files {
        manifest.output(p)?;
    }
    Ok(HomophilyOutput {
        social_effect: s,
        manifest: manifest.write(&a.out)?,
    })
}

fn write_to<T>(value: &T, f: impl Fn(&T, &mut Vec<u8>) -> homodiff::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(value, &mut buf)?;
    Ok(buf)
}

fn check_diffusion(d: &DiffusionArgs, categories: usize) -> CliResult<DiffusionParams> {
    let params = DiffusionParams {
        lambda: d.lambda,
        d: categories,
        max_iterations: d.max_iters,
        convergence_tolerance: d.tol,
        clamp_seeds: d.clamp_seeds,
    };
    params.validate()?;
    Ok(params)
}

fn check_fraction(f: f64) -> CliResult<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(CliError::Parameter(format!("--val-fraction {f} not in (0, 1)")))
    }
}

fn check_taus(taus: &Option<Vec<f64>>) -> CliResult<()> {
    if let Some(t) = taus.iter().flatten().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(CliError::Parameter(format!("--taus value {t} not in [0, 1]")));
    }
    Ok(())
}

fn load_or_draw_split(a: &SplitArgs, inp: &Inputs, manifest: &mut RunManifest) -> CliResult<Split> {
    match &a.split {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
            manifest.input(path)?;
            let split = Split::from_json(&text, &inp.map).map_err(|e| CliError::file(path, e))?;
            if let Some(&x) = split.seeds.iter().find(|&&x| inp.labels.get(x).is_none()) {
                return Err(CliError::Input(format!(
                    "{}: seed {:?} has no label",
                    path.display(),
                    inp.map.external(x)
                )));
            }
            Ok(split)
        }
        None => {
            if inp.labels.is_empty() {
                return Err(CliError::Input(
                    "no labeled node appears in the edge list".into(),
                ));
            }
            Ok(split_train_validation(
                &inp.labels,
                a.val_fraction,
                a.seed,
                a.stratified,
            )?)
        }
    }
}

/// Paths written by [`cmd_infer`].
#[derive(Debug, Clone)]
pub struct InferOutput {
    pub split: PathBuf,
    pub state: PathBuf,
    pub predictions: PathBuf,
    pub manifest: PathBuf,
    pub iterations: usize,
    pub final_delta: f64,
}

pub fn cmd_infer(a: &InferArgs, threads: Option<usize>) -> CliResult<InferOutput> {
    check_fraction(a.split.val_fraction)?;
    let mut manifest = RunManifest::new("infer", a);
    manifest.stat("threads", threads.unwrap_or_else(rayon::current_num_threads));
    manifest.stage("load");
    let inp = load_inputs(&a.input, &mut manifest)?;
    let params = check_diffusion(&a.diffusion, inp.binning.categories())?;

    manifest.stage("split");
    let split = load_or_draw_split(&a.split, &inp, &mut manifest)?;
    manifest.stat("seeds", split.seeds.len());
    manifest.stat("validation", split.validation.len());

    manifest.stage("diffuse");
    let initial = init_state(&inp.graph, &split.seeds, &inp.labels, params.d)?;
    let (current, done) = match &a.resume {
        Some(path) => {
            let (state, meta) = load_with(path, |r| read_state_csv(r, &inp.map))?;
            manifest.input(path)?;
            if meta.d != params.d {
                return Err(CliError::Input(format!(
                    "{}: checkpoint has d = {}, binning has {}",
                    path.display(),
                    meta.d,
                    params.d
                )));
            }
            if meta.lambda != params.lambda {
                log::warn!(
                    "checkpoint was produced with lambda {}, continuing with {}",
                    meta.lambda,
                    params.lambda
                );
            }
            (state, meta.iterations)
        }
        None => (initial.clone(), 0),
    };
    let clamp = params.clamp_seeds.then(|| {
        let mut m = vec![false; inp.graph.node_count()];
        split.seeds.iter().for_each(|&s| m[s as usize] = true);
        m
    });
    let res = run_from(&inp.graph, initial, current, &params, clamp.as_deref())?;
    log::info!(
        "{} iterations, final delta {:e}, converged {}",
        res.iterations,
        res.final_delta,
        res.converged
    );
    manifest.stat("iterations", res.iterations);
    manifest.stat("total_iterations", done + res.iterations);
    manifest.stat("final_delta", res.final_delta);
    manifest.stat("converged", res.converged);
    manifest.stat("renormalized_rows", res.renormalized_rows);

    manifest.stage("assign");
    let argmax = argmax_assign(&res.state);
    let chosen = if a.assign.constrained {
        let seed_set: std::collections::HashSet<Node> = split.seeds.iter().copied().collect();
        let scope: Vec<Node> = (0..inp.graph.node_count() as Node)
            .filter(|x| a.assign.assign_scope == AssignScope::All || !seed_set.contains(x))
            .collect();
        let target = empirical_distribution(&inp.labels)?;
        manifest.stat("target_distribution", target.shares());
        let pred = constrained_assign(&res.state, &target, &scope)?;
        // constrained scope may leave seeds out; they keep their argmax decision
        Some(fill_from(pred, &argmax))
    } else {
        None
    };

    manifest.stage("write");
    out_dir(&a.out)?;
    let split_path = a.out.join("split.json");
    fs::write(&split_path, split.to_json(&inp.map)? + "\n")
        .map_err(|e| CliError::file(&split_path, e))?;
    let state_path = a.out.join("state.csv");
    let meta = StateMeta {
        lambda: params.lambda,
        iterations: done + res.iterations,
        d: params.d,
    };
    write_state_csv(&res.state, &inp.map, &meta, create(&state_path)?)?;
    let pred_path = a.out.join("predictions.csv");
    let mut outputs = vec![split_path.clone(), state_path.clone(), pred_path.clone()];
    match &chosen {
        Some(pred) => {
            pred.write_csv(&inp.map, create(&pred_path)?)?;
            manifest.stat("prediction_histogram", pred.histogram(params.d));
            let p = a.out.join("predictions_argmax.csv");
            argmax.write_csv(&inp.map, create(&p)?)?;
            outputs.push(p);
        }
        None => {
            argmax.write_csv(&inp.map, create(&pred_path)?)?;
            manifest.stat("prediction_histogram", argmax.histogram(params.d));
        }
    }
    for p in &outputs {
        manifest.output(p)?;
    }
    Ok(InferOutput {
        split: split_path,
        state: state_path,
        predictions: pred_path,
        manifest: manifest.write(&a.out)?,
        iterations: res.iterations,
        final_delta: res.final_delta,
    })
}

fn fill_from(mut pred: Prediction, fallback: &Prediction) -> Prediction {
    for (x, a) in fallback.iter() {
        if pred.get(x).is_none() {
            pred.set(x, a);
        }
    }
    pred
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<EvalReport> {
    check_taus(&a.taus)?;
    if a.taus.is_some() && a.state.is_none() {
        return Err(CliError::Parameter(
            "--taus needs --state: the threshold curve reads confidences from the state".into(),
        ));
    }
    let mut manifest = RunManifest::new("evaluate", a);
    manifest.stage("load");
    let inp = load_inputs(&a.input, &mut manifest)?;
    let pred = load_with(&a.predictions, |r| Prediction::read_csv(r, &inp.map))?;
    manifest.input(&a.predictions)?;
    let split_text = fs::read_to_string(&a.split).map_err(|e| CliError::file(&a.split, e))?;
    let split = Split::from_json(&split_text, &inp.map).map_err(|e| CliError::file(&a.split, e))?;
    manifest.input(&a.split)?;
    let state = match &a.state {
        Some(path) => {
            let (s, _) = load_with(path, |r| read_state_csv(r, &inp.map))?;
            manifest.input(path)?;
            Some(s)
        }
        None => None,
    };

    manifest.stage("evaluate");
    let scope: Vec<Node> = match a.scope {
        EvalScope::Validation => split.validation.clone(),
        EvalScope::NonSeed => inp
            .labels
            .nodes()
            .into_iter()
            .filter(|x| split.seeds.binary_search(x).is_err())
            .collect(),
    };
    if scope.is_empty() {
        return Err(CliError::Input("evaluation scope is empty".into()));
    }
    if let Some(&x) = scope.iter().find(|&&x| pred.get(x).is_none()) {
        return Err(CliError::Input(format!(
            "{}: no prediction for {:?}",
            a.predictions.display(),
            inp.map.external(x)
        )));
    }
    if let Some(&x) = scope.iter().find(|&&x| inp.labels.get(x).is_none()) {
        return Err(CliError::Input(format!(
            "{}: no label for validation node {:?}",
            a.input.labels.display(),
            inp.map.external(x)
        )));
    }
    if split.seeds.is_empty() {
        return Err(CliError::Input(format!("{}: no seeds", a.split.display())));
    }
    let taus: Vec<f64> = a.taus.clone().unwrap_or_else(|| DEFAULT_TAUS.to_vec());
    let bucketing = match a.degree_buckets {
        DegreeBuckets::Log => Bucketing::LogDegree,
        DegreeBuckets::Identity => Bucketing::Identity,
    };
    let report = evaluate(
        &inp.graph,
        &split.seeds,
        &pred,
        &inp.labels,
        &scope,
        state.as_ref(),
        &taus,
        bucketing,
    )?;
    manifest.stat("overall_hits", report.overall_hits);
    manifest.stat("scope_size", report.scope_size);

    manifest.stage("write");
    out_dir(&a.out)?;
    let report_path = a.out.join("report.json");
    let text = serde_json::to_string_pretty(&report).map_err(homodiff::Error::from)?;
    fs::write(&report_path, text + "\n").map_err(|e| CliError::file(&report_path, e))?;
    let mut outputs = vec![report_path];
    for (name, curve) in [("sin", &report.sin), ("dts", &report.dts), ("degree", &report.degree)] {
        let p = a.out.join(format!("{name}.csv"));
        write_strata_csv(curve, create(&p)?)?;
        outputs.push(p);
    }
    if state.is_some() {
        let p = a.out.join("threshold.csv");
        write_threshold_csv(&report.threshold, create(&p)?)?;
        outputs.push(p);
    }
    for p in &outputs {
        manifest.output(p)?;
    }
    manifest.write(&a.out)?;
    Ok(report)
}

pub fn cmd_all(a: &AllArgs, threads: Option<usize>) -> CliResult<EvalReport> {
    check_taus(&a.taus)?;
    cmd_homophily(&HomophilyArgs {
        input: a.input.clone(),
        granularity: a.granularity,
        pseudocount: a.pseudocount,
        out: a.out.join("homophily"),
    })?;
    let infer = cmd_infer(
        &InferArgs {
            input: a.input.clone(),
            diffusion: a.diffusion.clone(),
            split: a.split.clone(),
            assign: a.assign.clone(),
            resume: None,
            out: a.out.join("infer"),
        },
        threads,
    )?;
    cmd_evaluate(&EvaluateArgs {
        input: a.input.clone(),
        predictions: infer.predictions,
        state: Some(infer.state),
        split: infer.split,
        taus: a.taus.clone(),
        degree_buckets: a.degree_buckets,
        scope: a.scope,
        out: a.out.join("evaluate"),
    })
}

/// Plain-text table of the report for the terminal.
pub fn print_summary<W: Write>(r: &EvalReport, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "overall hits {:.4} over {} nodes", r.overall_hits, r.scope_size)?;
    for (name, curve) in [("SIN", &r.sin), ("DTS", &r.dts), ("degree", &r.degree)] {
        writeln!(out, "\n{name:<12} {:>8} {:>10}", "hits", "nodes")?;
        for p in curve {
            writeln!(out, "{:<12} {:>8.4} {:>10}", p.stratum.to_string(), p.hits, p.population)?;
        }
    }
    if !r.threshold.is_empty() {
        writeln!(out, "\n{:<12} {:>8} {:>10} {:>10}", "tau", "hits", "retained", "fraction")?;
        for p in &r.threshold {
            let h = p.hits.map_or("-".to_owned(), |h| format!("{h:.4}"));
            writeln!(out, "{:<12} {:>8} {:>10} {:>10.4}", p.tau, h, p.retained, p.retained_fraction)?;
        }
    }
    Ok(())
}
