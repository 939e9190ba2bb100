use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;

use super::config::{DataFormat, ExperimentConfig};
use super::metrics::{join_list, MetricsRecord};
use crate::dataio::{
    balanced_split_indices, load_cifar10, load_idx_pair, load_raw_container, Fraction, ImageSet,
    SplitSpec,
};
use crate::ensemble::{
    build_diversity_configs, fit_fusion, save_ensemble, stack_member_decisions, train_member,
    DiversityConfig, MemberSettings,
};
use crate::numerics::SvmParams;
use crate::seeds::{self, Purpose};
use crate::ssl::{write_model, Ridge, SslConfig, UnlabeledMode};
use crate::{FfError, Result};

/// Decodes one split according to `format`.
pub fn load_split(format: DataFormat, paths: &[PathBuf]) -> Result<ImageSet> {
    match (format, paths) {
        (DataFormat::Idx, [images, labels]) => load_idx_pair(images, labels),
        (DataFormat::Raw, [path]) => load_raw_container(path),
        (DataFormat::Cifar, batches) if !batches.is_empty() => load_cifar10(batches),
        _ => Err(FfError::config(format!("{} paths do not fit format {format}", paths.len()))),
    }
}

/// `(train, test)` sets named by the config.
pub fn load_data(cfg: &ExperimentConfig) -> Result<(ImageSet, ImageSet)> {
    let train = load_split(cfg.format, &cfg.train).map_err(|e| e.at("loading training set"))?;
    let test = load_split(cfg.format, &cfg.test).map_err(|e| e.at("loading test set"))?;
    if test.labels().is_none() {
        return Err(FfError::MissingLabels.at("loading test set"));
    }
    Ok((train, test))
}

/// Runs `f` over `items` on at most `jobs` threads, keeping input order.
fn bounded_map<T: Sync, R: Send>(jobs: usize, items: &[T], f: impl Fn(usize, &T) -> R + Sync + Send) -> Result<Vec<R>> {
    if jobs <= 1 {
        return Ok(items.iter().enumerate().map(|(i, t)| f(i, t)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| FfError::config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()))
}

pub(crate) fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    100.0 * hits as f64 / truth.len() as f64
}

fn member_configs(cfg: &ExperimentConfig, train: &ImageSet) -> Result<Vec<DiversityConfig>> {
    if cfg.ensemble_types.is_empty() {
        Ok(vec![DiversityConfig::single(cfg.arch, train.tag())?])
    } else {
        build_diversity_configs(&cfg.ensemble_types, train.tag())
    }
}

/// The full protocol on already loaded data: split, fit every member,
/// optionally fuse, and score on all of `test`.
pub fn run_experiment_on(cfg: &ExperimentConfig, train: &ImageSet, test: &ImageSet) -> Result<MetricsRecord> {
    let start = Instant::now();
    cfg.validate()?;
    let labels = train.require_labels().map_err(|e| e.at("splitting"))?;
    let truth = test.require_labels().map_err(|e| e.at("evaluating"))?;
    let split = SplitSpec::new(cfg.fraction, seeds::derive(cfg.seed, Purpose::Split, 0));
    let (labeled, unlabeled) =
        balanced_split_indices(labels, train.num_classes(), &split).map_err(|e| e.at("splitting"))?;
    let configs = member_configs(cfg, train).map_err(|e| e.at("building members"))?;
    let settings = MemberSettings {
        cpca_dim: cfg.cpca_dim,
        patch_cap: cfg.patch_cap,
        ssl: SslConfig {
            stage_widths: cfg.stage_widths.clone(),
            alpha: cfg.alpha,
            keep_fraction: cfg.keep_fraction,
            mode: cfg.unlabeled_mode,
            ridge: Ridge::TraceScaled(cfg.ridge_scale),
            seed: cfg.seed,
        },
    };

    let outcomes = bounded_map(cfg.jobs, &configs, |i, dc| -> Result<_> {
        let stage = format!("member {i} ({dc})");
        let seed = seeds::derive(cfg.seed, Purpose::Member, i as u64);
        let trained = train_member(dc, &settings, train, &labeled, &unlabeled, seed)
            .map_err(|e| e.at(format!("training {stage}")))?;
        let (pred, test_dec) = trained
            .member
            .predict(test)
            .map_err(|e| e.at(format!("evaluating {stage}")))?;
        log::info!("{stage}: {:.2}% test accuracy", accuracy(&pred, truth));
        Ok((trained, accuracy(&pred, truth), test_dec))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let accs: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    let mut record = MetricsRecord::from_config(cfg);
    record.labeled_count = labeled.len();
    record.unlabeled_count = unlabeled.len();
    record.selected_unlabeled = join_list(&outcomes[0].0.selected_counts);
    record.members = join_list(&configs);
    record.member_accuracies = join_list(&accs.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>());
    record.accuracy = Some(accs.iter().sum::<f64>() / accs.len() as f64);

    let mut members = Vec::with_capacity(outcomes.len());
    let mut labeled_blocks = Vec::with_capacity(outcomes.len());
    let mut test_blocks: Vec<Array2<f64>> = Vec::with_capacity(outcomes.len());
    for (trained, _, test_dec) in outcomes {
        labeled_blocks.push(trained.labeled_decisions);
        test_blocks.push(test_dec);
        members.push(trained.member);
    }

    if cfg.ensemble_types.is_empty() {
        if let Some(dir) = &cfg.model_dir {
            std::fs::create_dir_all(dir)?;
            let mut w = BufWriter::new(File::create(dir.join("model.ffm"))?);
            write_model(&mut w, &members[0].model)?;
            w.flush()?;
        }
    } else {
        let y_l: Vec<usize> = labeled.iter().map(|&i| labels[i]).collect();
        let params = SvmParams {
            c: cfg.svm_c,
            gamma: cfg.svm_gamma,
            ..SvmParams::default()
        };
        let fused = stack_member_decisions(&labeled_blocks)?;
        let model = fit_fusion(members, fused.view(), &y_l, cfg.energy_threshold, &params)
            .map_err(|e| e.at("fitting fusion"))?;
        let test_fused = stack_member_decisions(&test_blocks)?;
        let pred = model.fusion.predict(test_fused.view()).map_err(|e| e.at("evaluating fusion"))?;
        record.ensemble_accuracy = Some(accuracy(&pred, truth));
        if let Some(dir) = &cfg.model_dir {
            save_ensemble(&model, dir).map_err(|e| e.at("saving ensemble"))?;
        }
    }
    record.seconds = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Loads the data named by `cfg` and runs the protocol once.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsRecord> {
    let (train, test) = load_data(cfg)?;
    run_experiment_on(cfg, &train, &test)
}

/// Grid of runs sharing one base config.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub fractions: Vec<Fraction>,
    /// Empty means the base config's mode.
    pub modes: Vec<UnlabeledMode>,
    /// Empty means the base config's seed.
    pub seeds: Vec<u64>,
}

impl SweepPlan {
    pub fn fractions(fractions: Vec<Fraction>) -> Self {
        SweepPlan {
            fractions,
            modes: Vec::new(),
            seeds: Vec::new(),
        }
    }

    /// One config per (fraction, mode, seed), in that nesting order.
    pub fn expand(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        let modes = if self.modes.is_empty() { vec![base.unlabeled_mode] } else { self.modes.clone() };
        let seeds = if self.seeds.is_empty() { vec![base.seed] } else { self.seeds.clone() };
        let mut out = Vec::new();
        for &fraction in &self.fractions {
            for &mode in &modes {
                for &seed in &seeds {
                    out.push(ExperimentConfig {
                        fraction,
                        unlabeled_mode: mode,
                        seed,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

/// Runs every grid entry on data loaded once. A failing entry becomes an
/// error row and the sweep continues.
pub fn run_sweep(base: &ExperimentConfig, plan: &SweepPlan) -> Result<Vec<MetricsRecord>> {
    let configs = plan.expand(base);
    if configs.is_empty() {
        return Ok(Vec::new());
    }
    let (train, test) = load_data(base)?;
    // Members inside each entry run sequentially; the pool bounds entries.
    bounded_map(base.jobs, &configs, |_, cfg| {
        let started = Instant::now();
        let single = ExperimentConfig { jobs: 1, ..cfg.clone() };
        run_experiment_on(&single, &train, &test).unwrap_or_else(|e| {
            log::warn!("sweep entry {} seed {} failed: {e}", cfg.fraction, cfg.seed);
            MetricsRecord::failed(cfg, &e, started.elapsed().as_secs_f64())
        })
    })
}
