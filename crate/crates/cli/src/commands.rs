use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use grmlr_core::dataset::{load_dataset_with_stages, read_abundances, save_dataset, MacrofaunaCounts};
use grmlr_core::ecograph::build_graph;
use grmlr_core::eval::grid::Grid;
use grmlr_core::eval::plot::{ranking_svg, sweep_svg};
use grmlr_core::eval::ranking::ranking_csv;
use grmlr_core::eval::studies::{default_alphas, sweep_csv};
use grmlr_core::eval::{ablate, alpha_sweep, coefficient_ranking, grid_search, loocv_with_models, permutation_test};
use grmlr_core::{export_heatmaps, fit, synthesize, Dataset, GrmlrConfig, GrmlrError, GrmlrModel, SynthParams};
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::{Cli, Command, DataArgs, EvalCommand, GlobalOpts, GraphCommand, SynthArgs};

/// How many top taxa the ranking chart shows.
const RANKING_CHART_TAXA: usize = 10;

pub enum Status {
    Ok,
    /// Non-convergence under `--strict`.
    Escalated,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => ExitCode::SUCCESS,
            Status::Escalated => ExitCode::from(2),
        }
    }
}

struct Run<'a> {
    opts: &'a GlobalOpts,
    config: GrmlrConfig,
    manifest: RunManifest,
}

impl<'a> Run<'a> {
    fn start(opts: &'a GlobalOpts, command: &str, config: GrmlrConfig) -> Result<Self> {
        std::fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
        let manifest = RunManifest::new(command, opts.config.as_deref(), &config, &opts.out);
        Ok(Run { opts, config, manifest })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.opts.out.join(name)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.output(name);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_text(name, &serde_json::to_string_pretty(value)?)
    }

    fn workers(&self) -> usize {
        self.opts
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    fn load(&mut self, data: &DataArgs) -> Result<Dataset> {
        self.manifest.input(&data.abundances);
        if let Some(m) = &data.macrofauna {
            self.manifest.input(m);
        }
        self.manifest.input(&data.labels);
        let ds = load_dataset_with_stages(
            &data.abundances,
            data.macrofauna.as_deref(),
            Some(&data.labels),
            &data.stages,
        )?;
        if self.config.alpha > 0.0 && ds.macrofauna.is_none() {
            return Err(GrmlrError::MissingMacrofauna).context("pass --macrofauna or set alpha = 0");
        }
        Ok(ds)
    }

    /// Reports non-converged fits and decides the exit status.
    fn finish(self, non_converged: usize) -> Result<Status> {
        self.manifest.write()?;
        if non_converged == 0 {
            return Ok(Status::Ok);
        }
        eprintln!("warning: {non_converged} fit(s) stopped before converging");
        Ok(if self.opts.strict {
            Status::Escalated
        } else {
            Status::Ok
        })
    }
}

fn load_config(opts: &GlobalOpts) -> Result<GrmlrConfig> {
    let mut config = match &opts.config {
        Some(path) => GrmlrConfig::load(path)?,
        None => GrmlrConfig::default(),
    };
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn load_grid(source: &str) -> Result<Grid> {
    if source == "default" {
        Ok(Grid::default_grid())
    } else {
        Ok(Grid::load(Path::new(source))?)
    }
}

pub fn run(cli: &Cli) -> Result<Status> {
    let opts = &cli.global;
    match &cli.command {
        Command::Fit(data) => cmd_fit(opts, data),
        Command::Predict { abundances, model } => cmd_predict(opts, abundances, model),
        Command::Eval(e) => cmd_eval(opts, e),
        Command::Synth(args) => cmd_synth(opts, args),
        Command::Graph(GraphCommand::Export { abundances, macrofauna }) => {
            cmd_graph_export(opts, abundances, macrofauna.as_deref())
        }
    }
}

fn cmd_fit(opts: &GlobalOpts, data: &DataArgs) -> Result<Status> {
    let mut run = Run::start(opts, "fit", load_config(opts)?)?;
    let ds = run.load(data)?;
    let fitted = fit(&ds, &run.config)?;
    fitted.model.save(&run.path("model.grmlr"))?;
    run.manifest.output("model.grmlr");
    for path in export_heatmaps(&fitted.graph, &opts.out)? {
        run.manifest.output(&path.file_name().unwrap().to_string_lossy());
    }
    run.write_json("fit_report.json", &fitted.report)?;
    println!(
        "fitted {} sites x {} taxa: loss {:.6}, {} iterations, {} graph edges",
        ds.n_sites(),
        ds.n_taxa(),
        fitted.report.final_loss,
        fitted.report.iterations,
        fitted.graph.edge_count()
    );
    run.finish(usize::from(!fitted.report.converged))
}

/// Reads only the abundance table and the model file.
fn cmd_predict(opts: &GlobalOpts, abundances: &Path, model_path: &Path) -> Result<Status> {
    let model = GrmlrModel::load(model_path)?;
    let mut run = Run::start(opts, "predict", model.hyperparams.clone())?;
    run.manifest.config_path = None;
    run.manifest.input(abundances);
    run.manifest.input(model_path);
    let table = read_abundances(abundances)?;
    let (labels, proba) = model.predict_with_proba(&table)?;

    let mut csv = String::from("site_id,stage");
    for l in &model.label_set {
        let _ = write!(csv, ",prob_{l}");
    }
    csv.push('\n');
    for (i, site) in labels.site_ids.iter().enumerate() {
        let _ = write!(csv, "{site},{}", labels.name(i));
        for v in proba.row(i) {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    run.write_text("predictions.csv", &csv)?;
    println!("predicted {} sites", labels.len());
    run.finish(0)
}

fn cmd_eval(opts: &GlobalOpts, command: &EvalCommand) -> Result<Status> {
    match command {
        EvalCommand::Loocv(data) => {
            let mut run = Run::start(opts, "eval loocv", load_config(opts)?)?;
            let ds = run.load(data)?;
            let (report, models) = loocv_with_models(&ds, &run.config)?;
            run.write_json("loocv.json", &report)?;
            let models: Vec<GrmlrModel> = models.into_iter().flatten().collect();
            if !models.is_empty() {
                let ranking = coefficient_ranking(&models)?;
                run.write_text("ranking.csv", &ranking_csv(&ranking))?;
                if opts.svg {
                    run.write_text("ranking.svg", &ranking_svg(&ranking, RANKING_CHART_TAXA))?;
                }
            }
            if !report.skipped_folds.is_empty() {
                eprintln!("warning: skipped folds {}", report.skipped_folds.join(", "));
            }
            println!("accuracy {:.4}, macro-F1 {:.4}", report.accuracy, report.macro_f1);
            run.finish(report.non_converged_folds)
        }
        EvalCommand::Permtest { data, permutations } => {
            let mut run = Run::start(opts, "eval permtest", load_config(opts)?)?;
            let ds = run.load(data)?;
            let report = permutation_test(&ds, &run.config, *permutations, run.config.seed, run.workers())?;
            run.write_json("permtest.json", &report)?;
            println!(
                "observed accuracy {:.4}, p = {:.4} over {} permutations",
                report.observed_accuracy,
                report.p_value,
                report.permuted_accuracies.len()
            );
            run.finish(0)
        }
        EvalCommand::Grid { data, grid } => {
            let mut run = Run::start(opts, "eval grid", load_config(opts)?)?;
            let grid = load_grid(grid)?;
            let ds = run.load(data)?;
            let result = grid_search(&ds, &run.config, &grid, run.workers())?;
            run.write_json("grid.json", &result)?;
            let mut csv = String::from("rank,index");
            for (name, _) in &grid.axes {
                let _ = write!(csv, ",{name}");
            }
            csv.push_str(",accuracy,macro_f1,error\n");
            for (rank, e) in result.entries.iter().enumerate() {
                let _ = write!(csv, "{},{}", rank + 1, e.index);
                let entries = e.config.entries();
                for (name, _) in &grid.axes {
                    let v = entries
                        .iter()
                        .find(|(k, _)| k == name)
                        .map(|(_, v)| v.as_str())
                        .unwrap_or("");
                    let _ = write!(csv, ",{v}");
                }
                let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let err = e.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
                let _ = writeln!(csv, ",{},{},{err}", num(e.accuracy), num(e.macro_f1));
            }
            run.write_text("grid.csv", &csv)?;
            if result.failures() > 0 {
                eprintln!("warning: {} grid entries failed", result.failures());
            }
            match result.best() {
                Some(best) => println!(
                    "{} configurations, best accuracy {:.4} (macro-F1 {:.4}) at entry {}",
                    result.entries.len(),
                    best.accuracy.unwrap_or(0.0),
                    best.macro_f1.unwrap_or(0.0),
                    best.index
                ),
                None => bail!("every grid entry failed"),
            }
            run.finish(0)
        }
        EvalCommand::Ablate(data) => {
            let mut run = Run::start(opts, "eval ablate", load_config(opts)?)?;
            let ds = run.load(data)?;
            let report = ablate(&ds, &run.config)?;
            run.write_json("ablation.json", &report)?;
            let mut csv = String::from("variant,accuracy,macro_f1\n");
            let _ = writeln!(csv, "full,{},{}", report.full.accuracy, report.full.macro_f1);
            let mut non_converged = report.full.non_converged_folds;
            for (which, r) in &report.variants {
                let _ = writeln!(csv, "{},{},{}", which.label(), r.accuracy, r.macro_f1);
                non_converged += r.non_converged_folds;
            }
            run.write_text("ablation.csv", &csv)?;
            print!("{csv}");
            run.finish(non_converged)
        }
        EvalCommand::AlphaSweep { data, grid, alphas } => {
            let mut run = Run::start(opts, "eval alpha-sweep", load_config(opts)?)?;
            let grid = load_grid(grid)?;
            let ds = run.load(data)?;
            let alphas = alphas.clone().unwrap_or_else(default_alphas);
            let points = alpha_sweep(&ds, &run.config, &grid, &alphas, run.workers())?;
            run.write_json("alpha_sweep.json", &points)?;
            run.write_text("alpha_sweep.csv", &sweep_csv(&points))?;
            if opts.svg {
                run.write_text("alpha_sweep.svg", &sweep_svg(&points))?;
            }
            print!("{}", sweep_csv(&points));
            run.finish(0)
        }
    }
}

fn cmd_synth(opts: &GlobalOpts, args: &SynthArgs) -> Result<Status> {
    let mut config = load_config(opts)?;
    config.seed = opts.seed.unwrap_or(config.seed);
    let params = SynthParams {
        n: args.n,
        p: args.p,
        k: args.k,
        n_blocks: args.blocks,
        coupling: args.coupling,
        noise: args.noise,
        seed: config.seed,
        ..SynthParams::default()
    };
    let mut run = Run::start(opts, "synth", config)?;
    let ds = synthesize(&params)?;
    let files = save_dataset(&ds, &opts.out)?;
    for p in [Some(files.abundances), files.macrofauna, files.labels]
        .into_iter()
        .flatten()
    {
        run.manifest.output(&p.file_name().unwrap().to_string_lossy());
    }
    println!("{}", ds.provenance);
    run.finish(0)
}

fn cmd_graph_export(opts: &GlobalOpts, abundances: &Path, macrofauna: Option<&Path>) -> Result<Status> {
    let mut run = Run::start(opts, "graph export", load_config(opts)?)?;
    run.manifest.input(abundances);
    let table = read_abundances(abundances)?;
    let counts: Option<MacrofaunaCounts> = match macrofauna {
        Some(path) => {
            run.manifest.input(path);
            let ds = grmlr_core::load_dataset(abundances, Some(path), None)?;
            ds.macrofauna
        }
        None => None,
    };
    let c = &run.config;
    if c.alpha > 0.0 && counts.is_none() {
        return Err(GrmlrError::MissingMacrofauna).context("pass --macrofauna or set alpha = 0");
    }
    let features = c.transform.apply(&table, c.epsilon);
    let graph = build_graph(&features, counts.as_ref(), None, c.tau, c.gamma, c.alpha)?;
    for path in export_heatmaps(&graph, &opts.out)? {
        run.manifest.output(&path.file_name().unwrap().to_string_lossy());
    }
    println!("{} taxa, {} edges", graph.n_taxa(), graph.edge_count());
    run.finish(0)
}
