use std::fmt::Write as _;
use std::path::Path;

use lleinc::metrics::{info_nce_loss, EvalReport, MeanStd};
use lleinc::synth::few_shot_indices;
use lleinc::transform::PreparedFit;
use lleinc::{baseline_no_reembed, evaluate_reembedder, InfoNceVariant, LabeledEmbeddings, ReembedConfig, Strategy};
use serde::Serialize;

use crate::commands::{load, to_json, write_file};
use crate::error::{CliError, CliResult};
use crate::{EvalArgs, OutputFormat, SplitOptions, SweepArgs};

/// One training set drawn for a run.
struct Episode {
    seed: Option<u64>,
    train: LabeledEmbeddings,
}

impl Episode {
    fn fail(&self, source: lleinc::Error) -> CliError {
        match self.seed {
            Some(seed) => CliError::Seed { seed, source },
            None => CliError::Core(source),
        }
    }
}

struct Split {
    pool: LabeledEmbeddings,
    test: LabeledEmbeddings,
    episodes: Vec<Episode>,
}

fn load_split(opts: &SplitOptions) -> CliResult<Split> {
    let pool = load(&opts.train)?;
    let test = load(&opts.test)?;
    let episodes = match opts.shots {
        None => vec![Episode {
            seed: None,
            train: pool.clone(),
        }],
        Some(shots) => opts
            .seeds
            .iter()
            .map(|&seed| {
                let idx = few_shot_indices(&pool, shots as usize, seed).map_err(|source| CliError::Seed { seed, source })?;
                let train = pool.select(&idx).map_err(|source| CliError::Seed { seed, source })?;
                Ok(Episode { seed: Some(seed), train })
            })
            .collect::<CliResult<_>>()?,
    };
    Ok(Split { pool, test, episodes })
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct RunJson {
    seed: Option<u64>,
    accuracy: f64,
    macro_f1: f64,
    /// Contrastive loss of the training set in the space the vote runs in.
    info_nce: Option<f64>,
}

#[derive(Debug, Serialize)]
struct StrategyJson {
    strategy: Strategy,
    runs: Vec<RunJson>,
    mean_acc: f64,
    std_acc: f64,
    mean_f1: f64,
    std_f1: f64,
}

#[derive(Debug, Serialize)]
struct InfoNceJson {
    variant: &'static str,
    temperature: f64,
}

#[derive(Debug, Serialize)]
struct EvalJson {
    task: String,
    train: String,
    test: String,
    n_classes: usize,
    n_pool: usize,
    n_test: usize,
    shots: Option<u32>,
    e: u32,
    config: ReembedConfig,
    info_nce: InfoNceJson,
    results: Vec<StrategyJson>,
}

struct InfoNce {
    temperature: f64,
    variant: InfoNceVariant,
}

fn run_episode(
    train: &LabeledEmbeddings,
    test: &LabeledEmbeddings,
    strategy: Strategy,
    config: &ReembedConfig,
    e: usize,
    nce: &InfoNce,
) -> lleinc::Result<(EvalReport, Option<f64>)> {
    let (report, space) = match strategy.mode() {
        None => (baseline_no_reembed(train, &test.to_matrix(), e)?.score(test.labels())?, train.to_matrix()),
        Some(mode) => {
            config.validate(train.len())?;
            let model = PreparedFit::new(train, config, mode)?.reembedder(config.target_dim)?;
            (evaluate_reembedder(&model, test, e)?, model.train_embedded().clone())
        }
    };
    // Undefined for single-member classes or a single class; reported as null.
    let loss = info_nce_loss(&space, train.labels(), nce.temperature, nce.variant).ok();
    Ok((report, loss))
}

fn summarize(strategy: Strategy, runs: Vec<RunJson>) -> CliResult<StrategyJson> {
    let acc = MeanStd::of(&runs.iter().map(|r| r.accuracy).collect::<Vec<_>>())?;
    let f1 = MeanStd::of(&runs.iter().map(|r| r.macro_f1).collect::<Vec<_>>())?;
    Ok(StrategyJson {
        strategy,
        runs,
        mean_acc: acc.mean,
        std_acc: acc.std,
        mean_f1: f1.mean,
        std_f1: f1.std,
    })
}

fn render_table(report: &EvalJson) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "task {}: {} classes, {} train per run, {} test, e={}, dim={}, c={}",
        report.task,
        report.n_classes,
        report.shots.map_or(report.n_pool, |s| s as usize * report.n_classes),
        report.n_test,
        report.e,
        report.config.target_dim,
        report.config.c_neighbors
    );
    let _ = writeln!(out, "{:<9} {:>4}  {:<13} {:<13} {:>10}", "strategy", "runs", "accuracy", "macro F1", "InfoNCE");
    for r in &report.results {
        let losses: Vec<f64> = r.runs.iter().filter_map(|run| run.info_nce).collect();
        let loss = if losses.is_empty() {
            "-".to_string()
        } else {
            format!("{:.4}", losses.iter().sum::<f64>() / losses.len() as f64)
        };
        let pct = |mean: f64, std: f64| MeanStd { mean, std }.as_percent();
        let _ = writeln!(
            out,
            "{:<9} {:>4}  {:<13} {:<13} {:>10}",
            r.strategy.name(),
            r.runs.len(),
            pct(r.mean_acc, r.std_acc),
            pct(r.mean_f1, r.std_f1),
            loss
        );
    }
    out
}

pub fn eval(a: &EvalArgs) -> CliResult<()> {
    if !(a.temperature > 0.0 && a.temperature.is_finite()) {
        return Err(CliError::Core(lleinc::Error::NonPositiveTemperature(a.temperature)));
    }
    let split = load_split(&a.split)?;
    let config = a.fit.config(a.dim as usize);
    let nce = InfoNce {
        temperature: a.temperature,
        variant: if a.infonce_standard { InfoNceVariant::Standard } else { InfoNceVariant::Literal },
    };
    let e = a.split.e as usize;

    let mut results = Vec::new();
    for strategy in a.split.strategy.expand() {
        let mut runs = Vec::with_capacity(split.episodes.len());
        for ep in &split.episodes {
            let (report, info_nce) =
                run_episode(&ep.train, &split.test, strategy, &config, e, &nce).map_err(|err| ep.fail(err))?;
            runs.push(RunJson {
                seed: ep.seed,
                accuracy: report.accuracy.unwrap_or(f64::NAN),
                macro_f1: report.macro_f1.unwrap_or(f64::NAN),
                info_nce,
            });
        }
        results.push(summarize(strategy, runs)?);
    }

    let report = EvalJson {
        task: a.task.clone().unwrap_or_else(|| {
            a.split.train.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        }),
        train: file_name(&a.split.train),
        test: file_name(&a.split.test),
        n_classes: split.pool.n_classes(),
        n_pool: split.pool.len(),
        n_test: split.test.len(),
        shots: a.split.shots,
        e: a.split.e,
        config,
        info_nce: InfoNceJson {
            variant: match nce.variant {
                InfoNceVariant::Literal => "literal",
                InfoNceVariant::Standard => "standard",
            },
            temperature: nce.temperature,
        },
        results,
    };
    let json = to_json(&report);
    if let Some(path) = &a.out {
        write_file(path, json.as_bytes())?;
    }
    match a.format {
        OutputFormat::Json => print!("{json}"),
        OutputFormat::Table => print!("{}", render_table(&report)),
    }
    Ok(())
}

/// Requested dimensions capped at `max`, first occurrences only.
fn clamp_dims(dims: &[u32], max: usize) -> (Vec<usize>, bool) {
    let mut out = Vec::new();
    let mut clamped = false;
    for &d in dims {
        let d = d as usize;
        clamped |= d > max;
        let d = d.min(max);
        if !out.contains(&d) {
            out.push(d);
        }
    }
    (out, clamped)
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let split = load_split(&a.split)?;
    let strategies = a.split.strategy.expand();
    let e = a.split.e as usize;
    let base = a.fit.config(1);
    let n_train = split.episodes[0].train.len();
    let max = base.max_target_dim(n_train);
    if max == 0 {
        return Err(CliError::Core(lleinc::Error::TargetDimTooLarge { requested: 1, max }));
    }
    let (dims, clamped) = clamp_dims(&a.dims, max);
    if clamped {
        eprintln!("note: dimensions above {max} (the maximum for {n_train} training points) were clamped to {max}");
    }

    // scores[strategy][dim] collects (accuracy, macro F1) over episodes.
    let mut scores = vec![vec![Vec::new(); dims.len()]; strategies.len()];
    for ep in &split.episodes {
        for (si, &strategy) in strategies.iter().enumerate() {
            match strategy.mode() {
                None => {
                    let r = baseline_no_reembed(&ep.train, &split.test.to_matrix(), e)
                        .and_then(|r| r.score(split.test.labels()))
                        .map_err(|err| ep.fail(err))?;
                    for cell in scores[si].iter_mut() {
                        cell.push((r.accuracy.unwrap_or(f64::NAN), r.macro_f1.unwrap_or(f64::NAN)));
                    }
                }
                Some(mode) => {
                    let prepared = PreparedFit::new(&ep.train, &base, mode).map_err(|err| ep.fail(err))?;
                    for (di, &dim) in dims.iter().enumerate() {
                        let r = prepared
                            .reembedder(dim)
                            .and_then(|m| evaluate_reembedder(&m, &split.test, e))
                            .map_err(|err| ep.fail(err))?;
                        scores[si][di].push((r.accuracy.unwrap_or(f64::NAN), r.macro_f1.unwrap_or(f64::NAN)));
                    }
                }
            }
        }
    }

    let mut csv = String::from("dim,strategy,accuracy,f1\n");
    for (di, dim) in dims.iter().enumerate() {
        for (si, strategy) in strategies.iter().enumerate() {
            let cell = &scores[si][di];
            let mean = |f: fn(&(f64, f64)) -> f64| cell.iter().map(f).sum::<f64>() / cell.len() as f64;
            let _ = writeln!(csv, "{dim},{strategy},{:.6},{:.6}", mean(|c| c.0), mean(|c| c.1));
        }
    }
    match &a.out {
        Some(path) => {
            write_file(path, csv.as_bytes())?;
            println!("wrote {} ({} rows)", path.display(), dims.len() * strategies.len());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
