use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::ArgMatches;
use rayon::prelude::*;

use qgnn_core::circuits::{PqcTemplate, ReadoutMode};
use qgnn_core::graphbuild::{self, SubGraph};
use qgnn_core::metrics::{self, ModelSummary, SummaryRow};
use qgnn_core::qgnn::{self, Model, ModelConfig};
use qgnn_core::trackdata;
use qgnn_core::trainer::{self, TrainConfig, TrainHistory};
use qgnn_core::{rng, Error};

use crate::config::{self, RunConfig};
use crate::{given, BuildArgs, Cli, Command, DescribeArgs, EvaluateArgs, GenToyArgs, TrainArgs, UsageError};

pub const GRAPH_EXT: &str = "graph";
pub const MANIFEST: &str = "manifest.csv";
pub const EDGE_DISTRIBUTION: &str = "edge_distribution.csv";
pub const HISTORY: &str = "history.csv";
pub const EVALUATION: &str = "evaluation.csv";

pub fn run(cli: Cli, m: &ArgMatches) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(UsageError("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let loaded = config::load(cli.config.as_deref())?;
    let mut cfg = loaded.config;
    match cli.command {
        Command::GenToy(a) => gen_toy(&mut cfg, &a, m),
        Command::BuildGraphs(a) => build_graphs(&mut cfg, &a, m),
        Command::Train(a) => train(&mut cfg, &a, m, loaded.lr_from_file),
        Command::Evaluate(a) => evaluate(&mut cfg, &a, m, cli.config.is_some()),
        Command::Describe(a) => describe(&a),
    }
}

macro_rules! set {
    ($m:expr, $id:literal, $target:expr, $value:expr) => {
        if given($m, $id) {
            $target = $value;
        }
    };
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gen_toy(cfg: &mut RunConfig, a: &GenToyArgs, m: &ArgMatches) -> anyhow::Result<()> {
    set!(m, "out", cfg.paths.data_dir, a.out.clone());
    set!(m, "events", cfg.events, a.events);
    set!(m, "first_event", cfg.first_event, a.first_event);
    set!(m, "particles", cfg.toy.n_particles, a.particles);
    set!(m, "pt_min", cfg.toy.pt_range.0, a.pt_min);
    set!(m, "pt_max", cfg.toy.pt_range.1, a.pt_max);
    set!(m, "radii", cfg.toy.layer_radii, a.radii.clone());
    set!(m, "field", cfg.toy.field_strength, a.field);
    set!(m, "noise", cfg.toy.noise_hits_per_layer, a.noise);
    set!(m, "seed", cfg.toy.seed, a.seed);
    cfg.toy.validate().map_err(|e| UsageError(e.to_string()))?;

    let dir = cfg.paths.data_dir.clone();
    create_dir(&dir)?;
    let ids: Vec<u64> = (0..cfg.events as u64).map(|k| cfg.first_event + k).collect();
    let rows: Vec<String> = ids
        .par_iter()
        .map(|&id| {
            let event = trackdata::generate_toy_event(&cfg.toy, id);
            trackdata::write_trackml_event(&event, &dir)?;
            Ok(format!(
                "{id},{},{},{}",
                rng::derive(cfg.toy.seed, id),
                event.hits.len(),
                event.particles.len()
            ))
        })
        .collect::<qgnn_core::Result<_>>()?;
    let mut manifest = String::from("event_id,seed,n_hits,n_particles\n");
    for r in rows {
        manifest.push_str(&r);
        manifest.push('\n');
    }
    write_text(&dir.join(MANIFEST), &manifest)?;
    config::echo(cfg, &dir)?;
    println!("wrote {} events to {}", ids.len(), dir.display());
    Ok(())
}

pub fn graph_file_name(g: &SubGraph) -> String {
    format!(
        "event{:09}-s{:02}-z{:02}.{GRAPH_EXT}",
        g.meta.event_id, g.meta.phi_index, g.meta.z_index
    )
}

fn graph_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == GRAPH_EXT) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn build_graphs(cfg: &mut RunConfig, a: &BuildArgs, m: &ArgMatches) -> anyhow::Result<()> {
    set!(m, "data", cfg.paths.data_dir, a.data.clone());
    set!(m, "out", cfg.paths.graph_dir, a.out.clone());
    set!(m, "n_phi", cfg.slices.n_phi, a.n_phi);
    set!(m, "n_z", cfg.slices.n_z, a.n_z);
    set!(m, "axis", cfg.slices.axis, a.axis.into());
    set!(m, "pt_min", cfg.cuts.pt_min, a.pt_min);
    set!(m, "dphi_slope_max", cfg.cuts.dphi_slope_max, a.dphi_slope_max);
    set!(m, "z0_max", cfg.cuts.z0_max, a.z0_max);
    cfg.slices.validate().map_err(|e| UsageError(e.to_string()))?;
    cfg.cuts.validate().map_err(|e| UsageError(e.to_string()))?;

    let ids = trackdata::list_events(&cfg.paths.data_dir)?;
    if ids.is_empty() {
        bail!(Error::Schema {
            path: cfg.paths.data_dir.clone(),
            msg: "no event files found".into(),
        });
    }
    let per_event: Vec<Vec<SubGraph>> = ids
        .par_iter()
        .map(|&id| {
            let event = trackdata::load_event(&cfg.paths.data_dir, id)?;
            graphbuild::build_subgraphs(&event, &cfg.cuts, &cfg.slices)
        })
        .collect::<qgnn_core::Result<_>>()?;
    let graphs: Vec<SubGraph> = per_event.into_iter().flatten().collect();

    let dir = cfg.paths.graph_dir.clone();
    create_dir(&dir)?;
    // stale graphs from an earlier build would leak into training
    for old in graph_files(&dir)? {
        fs::remove_file(&old).with_context(|| format!("removing {}", old.display()))?;
    }
    let mut manifest = String::from("file,event_id,phi_index,z_index,n_nodes,n_edges,n_true\n");
    let (mut nodes, mut edges, mut trues) = (0, 0, 0);
    for g in &graphs {
        let name = graph_file_name(g);
        graphbuild::write_graph(g, &dir.join(&name))?;
        manifest.push_str(&format!(
            "{name},{},{},{},{},{},{}\n",
            g.meta.event_id,
            g.meta.phi_index,
            g.meta.z_index,
            g.n_nodes(),
            g.n_edges(),
            g.n_true()
        ));
        nodes += g.n_nodes();
        edges += g.n_edges();
        trues += g.n_true();
    }
    manifest.push_str(&format!("TOTAL,,,,{nodes},{edges},{trues}\n"));
    write_text(&dir.join(MANIFEST), &manifest)?;

    let mut dist = String::from("layer,true_edges,fake_edges\n");
    for (layer, t, f) in graphbuild::edge_distribution(&graphs) {
        dist.push_str(&format!("{layer},{t},{f}\n"));
    }
    write_text(&dir.join(EDGE_DISTRIBUTION), &dist)?;
    config::echo(cfg, &dir)?;
    println!(
        "wrote {} graphs ({nodes} nodes, {edges} edges, {trues} true) to {}",
        graphs.len(),
        dir.display()
    );
    Ok(())
}

pub fn load_graphs(dir: &Path) -> anyhow::Result<Vec<SubGraph>> {
    let files = graph_files(dir)?;
    if files.is_empty() {
        bail!(Error::Schema {
            path: dir.to_path_buf(),
            msg: "no graph files found".into(),
        });
    }
    files
        .par_iter()
        .map(|p| graphbuild::read_graph(p).with_context(|| format!("reading {}", p.display())))
        .collect()
}

fn apply_model_flags(cfg: &mut ModelConfig, a: &crate::ModelArgs, m: &ArgMatches) {
    set!(m, "ansatz", cfg.ansatz, a.ansatz);
    set!(m, "n_hidden", cfg.n_hidden, a.n_hidden);
    set!(m, "n_iterations", cfg.n_iterations, a.n_iterations);
    set!(m, "classical", cfg.classical_baseline, a.classical);
    if let Some(shots) = a.shots {
        let seed = match cfg.mode {
            ReadoutMode::Shots { seed, .. } if !given(m, "shot_seed") => seed,
            _ => a.shot_seed,
        };
        cfg.mode = ReadoutMode::Shots { shots, seed };
    }
}

pub fn model_summary(model: &Model) -> ModelSummary {
    let c = model.config();
    ModelSummary {
        model: c.model_name().into(),
        ansatz: if c.classical_baseline {
            "none".into()
        } else {
            c.ansatz.to_string()
        },
        n_hidden: c.n_hidden,
        n_iterations: c.n_iterations,
        param_count: model.param_count(),
    }
}

pub fn checkpoint_name(run: usize) -> String {
    format!("checkpoint_run{run}.txt")
}

fn train(cfg: &mut RunConfig, a: &TrainArgs, m: &ArgMatches, lr_from_file: bool) -> anyhow::Result<()> {
    set!(m, "graphs", cfg.paths.graph_dir, a.graphs.clone());
    set!(m, "out", cfg.paths.out_dir, a.out.clone());
    apply_model_flags(&mut cfg.model, &a.model, m);
    let t = &mut cfg.train;
    set!(m, "epochs", t.epochs, a.epochs);
    set!(m, "validation_size", t.validation_size, a.validation_size);
    if given(m, "seed") {
        t.shuffle_seed = a.seed;
        t.init_seed = a.seed;
    }
    set!(m, "split_seed", t.split_seed, a.split_seed);
    set!(m, "repeat_runs", t.repeat_runs, a.repeat_runs);
    set!(m, "eval_every", t.eval_every, a.eval_every);
    set!(m, "timing", t.record_time, a.timing);
    match a.lr {
        Some(lr) => t.lr = lr,
        None if !lr_from_file => t.lr = TrainConfig::default_lr(cfg.model.classical_baseline),
        None => {}
    }
    t.validate().map_err(|e| UsageError(e.to_string()))?;
    let model = Model::new(cfg.model.clone())?;

    let graphs = load_graphs(&cfg.paths.graph_dir)?;
    let out = cfg.paths.out_dir.clone();
    create_dir(&out)?;
    config::echo(cfg, &out)?;
    let mut histories: Vec<TrainHistory> = Vec::new();
    for run in 0..cfg.train.repeat_runs {
        let (params, history) = trainer::train(&graphs, &cfg.train.for_run(run), &cfg.model)?;
        qgnn::write_checkpoint(&out.join(checkpoint_name(run)), &cfg.model, &params)?;
        let last = history.final_validation();
        println!(
            "run {run}: {} steps, validation loss {:.4} -> {:.4}, auc {:.4} -> {:.4}",
            history.records.len(),
            history.initial.loss,
            last.loss,
            history.initial.auc,
            last.auc
        );
        histories.push(history);
        trainer::write_history(&out.join(HISTORY), &histories)?;
    }
    let row = metrics::emit_history(&histories, &model_summary(&model), &out)?;
    println!(
        "{} {} n_hidden={} n_iterations={} params={} mean final auc {:.4}",
        row.model, row.ansatz, row.n_hidden, row.n_iterations, row.param_count, row.final_val_auc
    );
    Ok(())
}

fn evaluate(cfg: &mut RunConfig, a: &EvaluateArgs, m: &ArgMatches, have_file: bool) -> anyhow::Result<()> {
    set!(m, "graphs", cfg.paths.graph_dir, a.graphs.clone());
    set!(m, "out", cfg.paths.out_dir, a.out.clone());
    set!(m, "validation_size", cfg.train.validation_size, a.validation_size);
    set!(m, "split_seed", cfg.train.split_seed, a.split_seed);

    let (model_cfg, params) = qgnn::read_checkpoint(&a.checkpoint)
        .with_context(|| format!("reading checkpoint {}", a.checkpoint.display()))?;
    if have_file && cfg.model != model_cfg {
        bail!(Error::Compatibility(format!(
            "checkpoint model {} does not match the configured model {}",
            serde_json::to_string(&model_cfg)?,
            serde_json::to_string(&cfg.model)?
        )));
    }
    cfg.model = model_cfg;
    if let Some(shots) = a.shots {
        cfg.model.mode = ReadoutMode::Shots {
            shots,
            seed: a.shot_seed,
        };
    }
    let model = Model::new(cfg.model.clone())?;
    model
        .check_params(&params)
        .map_err(|e| Error::Compatibility(format!("checkpoint parameters: {e}")))?;

    let graphs = load_graphs(&cfg.paths.graph_dir)?;
    let usable: Vec<&SubGraph> = graphs.iter().filter(|g| g.n_edges() > 0).collect();
    let selected: Vec<&SubGraph> =
        if a.all {
            usable
        } else {
            let (val, _) = trainer::split_indices(usable.len(), cfg.train.validation_size, cfg.train.split_seed)
                .map_err(|e| Error::Schema {
                    path: cfg.paths.graph_dir.clone(),
                    msg: e.to_string(),
                })?;
            val.into_iter().map(|i| usable[i]).collect()
        };
    if selected.is_empty() {
        bail!(Error::Schema {
            path: cfg.paths.graph_dir.clone(),
            msg: "no graphs with edges to evaluate".into(),
        });
    }
    let v = trainer::evaluate(&model, &params, &selected)?;
    let n_edges: usize = selected.iter().map(|g| g.n_edges()).sum();

    let out = cfg.paths.out_dir.clone();
    create_dir(&out)?;
    config::echo(cfg, &out)?;
    let mut text = String::from("checkpoint,n_graphs,n_edges,val_loss,val_auc\n");
    text.push_str(&format!(
        "{},{},{n_edges},{},{}\n",
        a.checkpoint.display(),
        selected.len(),
        v.loss,
        v.auc
    ));
    write_text(&out.join(EVALUATION), &text)?;
    metrics::append_summary(
        &out.join(metrics::SUMMARY_FILE),
        &SummaryRow::new(&model_summary(&model), v.auc),
    )?;
    println!(
        "{} graphs, {n_edges} edges: loss {:.4}, auc {:.4}",
        selected.len(),
        v.loss,
        v.auc
    );
    Ok(())
}

fn describe(a: &DescribeArgs) -> anyhow::Result<()> {
    let t = PqcTemplate::build(a.ansatz, a.qubits, a.readouts)?;
    let mut out = std::io::stdout().lock();
    write!(out, "{}", t.describe())?;
    let pipeline = ModelConfig {
        ansatz: a.ansatz,
        ..Default::default()
    };
    let model = Model::new(pipeline.clone())?;
    writeln!(
        out,
        "pipeline n_hidden=1: edge {} qubits {} params, node {} qubits {} params, input {} params, total {} (published {})",
        pipeline.edge_width(),
        model.edge_block().n_params(),
        pipeline.node_width(),
        model.node_block().n_params(),
        model.param_count() - model.edge_block().n_params() - model.node_block().n_params(),
        model.param_count(),
        a.ansatz.reference_total_params()
    )?;
    Ok(())
}
