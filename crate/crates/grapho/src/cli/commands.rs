use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use grapho_core::{
    encode_coefficients, estimate_oracle, fit, graph_statistics, gw_discrepancy, motif_gaps_with, reconstruct, resample,
    sample_graph, train_joint, Graph, GraphCorpus, JointConfig, StepGraphon,
};

use super::config::{CorpusFormat, RunConfig, DEFAULT_LAMBDA_SWEEP};
use super::{usage, Cli, Command, CorpusArgs, Failure, ModelArgs, OracleArgs};
use crate::formats::{
    fit_history_csv, motif_gaps_csv, read_graphon, read_json, stats_row, train_history_csv, write_graphon, write_json,
    write_matrix_csv, BasesFile, ClassifierFile, STATS_HEADER, TRAIN_HEADER,
};
use crate::io::{parse_tudataset, read_edge_list_corpus, write_edge_list_corpus, write_text, TuOptions};

/// Largest grid the exact cut norm accepts.
const MAX_CUT_SIZE: usize = 25;

type Outcome = Result<(), Failure>;

pub(super) fn execute(cli: Cli) -> Outcome {
    let mut cfg = match &cli.config {
        Some(path) => read_json::<RunConfig>(path).map_err(|e| usage(format!("bad config: {e}")))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    cfg.propagate_seed();

    let run: fn(&RunConfig) -> Outcome = match cli.command {
        Command::Estimate(a) => {
            corpus_flags(&mut cfg, &a.corpus);
            oracle_flags(&mut cfg, &a.oracle);
            estimate
        }
        Command::Sample(a) => {
            set(&mut cfg.graphon, a.graphon.map(Some));
            set(&mut cfg.nodes, a.nodes);
            set(&mut cfg.count, a.count);
            sample
        }
        Command::Fit(a) => {
            corpus_flags(&mut cfg, &a.corpus);
            oracle_flags(&mut cfg, &a.oracle);
            model_flags(&mut cfg, &a.model);
            fit_cmd
        }
        Command::Train(a) => {
            corpus_flags(&mut cfg, &a.corpus);
            oracle_flags(&mut cfg, &a.oracle);
            model_flags(&mut cfg, &a.model);
            set(&mut cfg.lambda, a.lambda);
            if a.lambda_sweep && cfg.lambda_sweep.is_none() {
                cfg.lambda_sweep = Some(DEFAULT_LAMBDA_SWEEP.to_vec());
            }
            if a.lambda.is_some() {
                cfg.lambda_sweep = None;
            }
            train
        }
        Command::Distance(a) => {
            corpus_flags(&mut cfg, &a.corpus);
            oracle_flags(&mut cfg, &a.oracle);
            set(&mut cfg.other, a.other.map(Some));
            distance
        }
        Command::Verify(a) => {
            corpus_flags(&mut cfg, &a.corpus);
            oracle_flags(&mut cfg, &a.oracle_opts);
            set(&mut cfg.oracle_file, a.oracle.map(Some));
            if a.predicted.is_some() {
                cfg.predicted = a.predicted;
                cfg.bases_file = None;
            }
            if a.bases_file.is_some() {
                cfg.bases_file = a.bases_file;
                cfg.predicted = None;
            }
            set(&mut cfg.resolution, a.resolution.map(Some));
            set(&mut cfg.motif_factor, a.motif_factor.map(Into::into));
            verify
        }
        Command::Stats(a) => {
            corpus_flags(&mut cfg, &a);
            stats
        }
    };

    validate(&cfg)?;
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    write_json(&cfg.out.join("resolved_config.json"), &cfg)?;
    run(&cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn corpus_flags(cfg: &mut RunConfig, a: &CorpusArgs) {
    set(&mut cfg.input, a.input.clone().map(Some));
    set(&mut cfg.format, a.format);
    if a.allow_unlabeled {
        cfg.require_labels = false;
    }
}

fn oracle_flags(cfg: &mut RunConfig, a: &OracleArgs) {
    set(&mut cfg.oracle.oracle_size, a.oracle_size);
    set(&mut cfg.oracle.barycenter_iters, a.barycenter_iters);
    set(&mut cfg.oracle.gw.beta, a.beta);
    set(&mut cfg.oracle.gw.outer_iters, a.outer_iters);
}

fn model_flags(cfg: &mut RunConfig, a: &ModelArgs) {
    set(&mut cfg.oracle_file, a.oracle.clone().map(Some));
    set(&mut cfg.bases, a.bases);
    set(&mut cfg.basis_size, a.basis_size);
    set(&mut cfg.fit.epochs, a.epochs);
    set(&mut cfg.fit.learning_rate, a.lr);
    set(&mut cfg.fit.feature_dim, a.feature_dim);
}

fn validate(cfg: &RunConfig) -> Outcome {
    let bad = |e: grapho_core::Error| usage(format!("invalid configuration: {e}"));
    cfg.oracle.validate().map_err(bad)?;
    cfg.fit.validate().map_err(bad)?;
    cfg.gw.validate().map_err(bad)?;
    if cfg.threads == Some(0) {
        return Err(usage("threads must be positive"));
    }
    if cfg.bases == 0 || cfg.basis_size == 0 {
        return Err(usage("bases and basis size must be positive"));
    }
    if !(cfg.lambda >= 0.0) || !cfg.lambda.is_finite() {
        return Err(usage(format!("lambda must be a nonnegative number, got {}", cfg.lambda)));
    }
    if let Some(sweep) = &cfg.lambda_sweep {
        if sweep.is_empty() || sweep.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(usage("lambda sweep must list nonnegative numbers"));
        }
    }
    if cfg.nodes == 0 {
        return Err(usage("nodes must be positive"));
    }
    if cfg.resolution.is_some_and(|r| r == 0 || r > MAX_CUT_SIZE) {
        return Err(usage(format!("resolution must lie in 1..={MAX_CUT_SIZE}")));
    }
    Ok(())
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    value.as_deref().ok_or_else(|| usage(format!("missing required input `--{flag}`")))
}

fn load_corpus(cfg: &RunConfig, path: &Path) -> anyhow::Result<GraphCorpus> {
    let corpus = match cfg.format {
        CorpusFormat::Tudataset => parse_tudataset(path, TuOptions { require_labels: cfg.require_labels })?,
        CorpusFormat::Edgelist => read_edge_list_corpus(path)?,
    };
    log::info!("loaded {} graphs from {}", corpus.len(), path.display());
    Ok(corpus)
}

fn input_corpus(cfg: &RunConfig) -> Result<GraphCorpus, Failure> {
    Ok(load_corpus(cfg, required(&cfg.input, "input")?)?)
}

/// Reads `oracle_file` or estimates from the corpus and saves the estimate.
fn oracle_for(cfg: &RunConfig, corpus: &GraphCorpus) -> Result<StepGraphon, Failure> {
    match &cfg.oracle_file {
        Some(path) => Ok(read_graphon(path)?),
        None => {
            let w = estimate_oracle(corpus, &cfg.oracle)?;
            write_graphon(&cfg.out.join("oracle.json"), &w)?;
            Ok(w)
        }
    }
}

fn estimate(cfg: &RunConfig) -> Outcome {
    let corpus = input_corpus(cfg)?;
    let w = estimate_oracle(&corpus, &cfg.oracle)?;
    write_graphon(&cfg.out.join("oracle.json"), &w)?;
    write_matrix_csv(&cfg.out.join("oracle.csv"), w.values())?;
    println!("oracle: {} blocks from {} graphs", w.size(), corpus.len());
    Ok(())
}

fn sample(cfg: &RunConfig) -> Outcome {
    let w = read_graphon(required(&cfg.graphon, "graphon")?)?;
    let graphs = (0..cfg.count)
        .map(|i| sample_graph(&w, cfg.nodes, cfg.seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let corpus = GraphCorpus::new("sampled", graphs)?;
    write_edge_list_corpus(&corpus, &cfg.out.join("graphs"))?;
    println!("sampled {} graphs with {} nodes", cfg.count, cfg.nodes);
    Ok(())
}

fn fit_cmd(cfg: &RunConfig) -> Outcome {
    let corpus = input_corpus(cfg)?;
    let oracle = oracle_for(cfg, &corpus)?;
    let result = fit(&corpus, &oracle, cfg.bases, cfg.basis_size, &cfg.fit)?;
    write_json(&cfg.out.join("bases.json"), &BasesFile::new(&result.bases, &result.encoder)?)?;
    write_text(&cfg.out.join("fit_history.csv"), &fit_history_csv(&result.history))?;
    if let (Some(first), Some(last)) = (result.history.first(), result.history.last()) {
        println!("reconstruction loss {first} -> {last}");
    }
    Ok(())
}

/// Maps dataset labels (e.g. -1 and 1) to class indices in ascending order.
fn remap_labels(corpus: &GraphCorpus) -> Result<(GraphCorpus, Vec<i64>), Failure> {
    let mut distinct = BTreeSet::new();
    for (i, g) in corpus.iter().enumerate() {
        distinct.insert(g.label().ok_or_else(|| anyhow::anyhow!("graph {i} has no label"))?);
    }
    let labels: Vec<i64> = distinct.into_iter().collect();
    let graphs: Vec<Graph> = corpus
        .iter()
        .map(|g| {
            let k = labels.binary_search(&g.label().unwrap()).unwrap();
            g.clone().with_label(Some(k as i64))
        })
        .collect();
    Ok((GraphCorpus::new(corpus.name(), graphs)?, labels))
}

fn train(cfg: &RunConfig) -> Outcome {
    let corpus = input_corpus(cfg)?;
    let (corpus, labels) = remap_labels(&corpus)?;
    if labels.len() < 2 {
        return Err(anyhow::anyhow!("training needs at least two classes, found {}", labels.len()).into());
    }
    let oracle = oracle_for(cfg, &corpus)?;
    let joint = |lambda: f64| JointConfig {
        lambda,
        fit: cfg.fit,
        classes: labels.len(),
        bases: cfg.bases,
        basis_size: cfg.basis_size,
    };
    match &cfg.lambda_sweep {
        None => {
            let result = train_joint(&corpus, &oracle, &joint(cfg.lambda))?;
            write_text(&cfg.out.join("train_history.csv"), &train_history_csv(&result.history))?;
            write_json(&cfg.out.join("bases.json"), &BasesFile::new(&result.bases, &result.encoder)?)?;
            write_json(&cfg.out.join("classifier.json"), &ClassifierFile { classifier: result.classifier, labels })?;
            if let Some(last) = result.history.last() {
                println!("lambda {}: accuracy {} total loss {}", cfg.lambda, last.train_accuracy, last.total_loss);
            }
        }
        Some(sweep) => {
            let mut summary = format!("lambda,{TRAIN_HEADER}\n");
            for (i, &lambda) in sweep.iter().enumerate() {
                let result = train_joint(&corpus, &oracle, &joint(lambda))?;
                write_text(&cfg.out.join(format!("train_history_{i}.csv")), &train_history_csv(&result.history))?;
                if let Some(r) = result.history.last() {
                    let _ = writeln!(
                        summary,
                        "{lambda},{},{},{},{},{}",
                        r.epoch, r.task_loss, r.recon_loss, r.total_loss, r.train_accuracy
                    );
                    println!("lambda {lambda}: accuracy {} total loss {}", r.train_accuracy, r.total_loss);
                }
            }
            write_text(&cfg.out.join("lambda_sweep.csv"), &summary)?;
        }
    }
    Ok(())
}

fn distance(cfg: &RunConfig) -> Outcome {
    let a = input_corpus(cfg)?;
    let b = load_corpus(cfg, required(&cfg.other, "other")?)?;
    let wa = estimate_oracle(&a, &cfg.oracle)?;
    let wb = estimate_oracle(&b, &cfg.oracle)?;
    let gw = gw_discrepancy(&wa, &wb, &cfg.gw)?;
    let (sa, sb) = (graph_statistics(&a), graph_statistics(&b));
    let header: Vec<String> = STATS_HEADER.split(',').map(|c| format!("delta_{c}")).collect();
    let deltas = [
        sb.graphs as f64 - sa.graphs as f64,
        sb.mean_nodes - sa.mean_nodes,
        sb.mean_edges - sa.mean_edges,
        sb.density - sa.density,
        sb.transitivity - sa.transitivity,
        sb.average_degree - sa.average_degree,
        sb.average_clustering - sa.average_clustering,
    ];
    let row: Vec<String> = deltas.iter().map(|d| d.to_string()).collect();
    let csv = format!("gw_discrepancy,{}\n{gw},{}\n", header.join(","), row.join(","));
    write_text(&cfg.out.join("distance.csv"), &csv)?;
    println!("gw discrepancy {gw}");
    Ok(())
}

fn verify(cfg: &RunConfig) -> Outcome {
    let corpus = match (&cfg.input, &cfg.oracle_file, &cfg.bases_file) {
        (None, None, _) => return Err(usage("verify needs `--oracle` or `--input`")),
        (None, _, Some(_)) => return Err(usage("`--bases` needs `--input` for the coefficients")),
        (Some(_), _, _) => Some(input_corpus(cfg)?),
        (None, Some(_), None) => None,
    };
    let oracle = match (&cfg.oracle_file, &corpus) {
        (Some(path), _) => read_graphon(path)?,
        (None, Some(c)) => oracle_for(cfg, c)?,
        (None, None) => unreachable!(),
    };
    let predicted = match (&cfg.predicted, &cfg.bases_file, &corpus) {
        (Some(path), _, _) => read_graphon(path)?,
        (None, Some(path), Some(c)) => {
            let (bases, encoder) = read_json::<BasesFile>(path)?.into_parts()?;
            let mut mean = vec![0.0; bases.count()];
            for g in c.iter() {
                for (m, a) in mean.iter_mut().zip(encode_coefficients(&encoder, g)?) {
                    *m += a / c.len() as f64;
                }
            }
            reconstruct(&bases, &mean)?
        }
        _ => return Err(usage("verify needs `--predicted` or `--bases`")),
    };
    let (oracle, predicted) = match cfg.resolution {
        Some(r) => (resample(&oracle, r)?, resample(&predicted, r)?),
        None => {
            let size = oracle.size().max(predicted.size());
            if size > MAX_CUT_SIZE {
                return Err(usage(format!(
                    "graphons have {size} blocks; the exact cut norm allows {MAX_CUT_SIZE}, pass `--resolution`"
                )));
            }
            (oracle, predicted)
        }
    };
    let gaps = motif_gaps_with(&oracle, &predicted, cfg.motif_factor)?;
    write_text(&cfg.out.join("verify.csv"), &motif_gaps_csv(&gaps))?;
    for g in &gaps {
        let verdict = if g.check.holds { "holds" } else { "VIOLATED" };
        println!("{}: gap {} bound {} {verdict}", g.motif, g.check.lhs, g.check.rhs);
    }
    Ok(())
}

fn stats(cfg: &RunConfig) -> Outcome {
    let corpus = input_corpus(cfg)?;
    let s = graph_statistics(&corpus);
    let csv = format!("corpus,{STATS_HEADER}\n{},{}\n", corpus.name(), stats_row(&s));
    write_text(&cfg.out.join("stats.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}
