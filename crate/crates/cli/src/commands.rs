//! Subcommand bodies. Every command reads and writes inside the output
//! directory unless a path key says otherwise.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use demandrec::data::{
    ingest_categories, ingest_purchases, split_train_test, CategoryMap, IdMap, IngestOptions,
    PurchaseLog, RecencyIndex, Triplet,
};
use demandrec::driver::{fit, fit_from, load_model, save_model};
use demandrec::eval::{
    category_prediction_metric, item_prediction_metric, time_prediction_metric, MetricReport,
    Scorer,
};
use demandrec::synth::{
    duration_error, generate, rank_demo as run_rank_demo, read_true_durations, write_instance,
};
use demandrec::{DurationVector, Error, Result};

use crate::config::RunConfig;

pub const MODEL_FILE: &str = "model.bin";
pub const TRAIN_LOG: &str = "train.log";
pub const TEST_LOG: &str = "test.log";
pub const CATEGORIES_DENSE: &str = "categories.dense";
pub const USER_IDS: &str = "users.ids";
pub const ITEM_IDS: &str = "items.ids";
pub const CATEGORY_IDS: &str = "categories.ids";

fn input(path: &Option<PathBuf>, dir: &Path, default: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| dir.join(default))
}

pub fn synth(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let inst = generate(&cfg.synth)?;
    let files = write_instance(&inst, &cfg.synth, dir)?;
    println!(
        "wrote {} purchases for {} users, {} items, {} slots to {}",
        inst.log.nnz(),
        cfg.synth.m,
        cfg.synth.n,
        cfg.synth.l,
        files.purchases.display()
    );
    Ok(())
}

/// Durations from a sidecar, reordered to the ingested category indices.
/// Categories whose id is not a sidecar index make the comparison
/// unavailable.
fn aligned_truth(path: &Path, categories: &IdMap) -> Result<Option<DurationVector>> {
    let truth = read_true_durations(path)?;
    let mut out = Vec::with_capacity(categories.len());
    for id in categories.ids() {
        match id.parse::<usize>().ok().filter(|&c| c < truth.len()) {
            Some(c) => out.push(truth.as_slice()[c]),
            None => return Ok(None),
        }
    }
    Ok(Some(DurationVector::new(out)?))
}

pub fn train(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let opts = IngestOptions {
        time_format: cfg.time_format,
        granularity: cfg.granularity,
    };
    let ingested = ingest_purchases(&input(&cfg.purchases, dir, "purchases.csv"), opts)?;
    let cats = ingest_categories(
        &input(&cfg.categories, dir, "categories.csv"),
        &ingested.items,
    )?;
    let split = split_train_test(&ingested.log, cfg.test_fraction, cfg.solver.seed)?;
    println!(
        "{} users, {} items, {} categories, {} slots; {} training and {} held-out records",
        ingested.log.num_users(),
        ingested.log.num_items(),
        cats.map.num_categories(),
        ingested.log.num_slots(),
        split.train.nnz(),
        split.test.len()
    );

    let (state, report) = if cfg.warm_start {
        let previous = load_model(&dir.join(MODEL_FILE))?;
        fit_from(previous, &split.train, &cats.map, &cfg.solver)?
    } else {
        fit(&split.train, &cats.map, &cfg.solver)?
    };

    let mut summary = String::new();
    let _ = writeln!(summary, "iteration objective seconds");
    let history = &state.objective_history[state.objective_history.len() - report.iterations - 1..];
    let first = state.iteration - report.iterations;
    let _ = writeln!(summary, "{first} {:.10e} 0", history[0]);
    for (it, (obj, time)) in history[1..].iter().zip(&report.timings).enumerate() {
        let _ = writeln!(
            summary,
            "{} {obj:.10e} {:.4}",
            first + it + 1,
            time.as_secs_f64()
        );
    }
    let _ = writeln!(summary, "converged = {}", report.converged);
    let _ = writeln!(summary, "rank = {}", state.x.rank());
    let durations: Vec<String> = state.d.as_slice().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(summary, "durations = {}", durations.join(" "));
    let empty = report.empty_categories.iter().filter(|&&e| e).count();
    if empty > 0 {
        let _ = writeln!(summary, "categories_without_repeats = {empty}");
    }
    let truth_path = cfg.ground_truth.clone().or_else(|| {
        let p = dir.join("ground_truth.txt");
        p.exists().then_some(p)
    });
    if let Some(path) = truth_path {
        match aligned_truth(&path, &cats.categories)? {
            Some(truth) => {
                let _ = writeln!(
                    summary,
                    "duration_error = {}",
                    duration_error(&state.d, &truth)?
                );
            }
            None => log::warn!(
                "category ids do not index {}; skipping duration error",
                path.display()
            ),
        }
    }
    print!("{summary}");
    std::fs::write(dir.join("fit_report.txt"), &summary)?;

    save_model(&state, &dir.join(MODEL_FILE))?;
    split.train.save_exported(&dir.join(TRAIN_LOG))?;
    let test_log = PurchaseLog::new(
        split.train.num_users(),
        split.train.num_items(),
        split.train.num_slots(),
        split.test.clone(),
    )?;
    test_log.save_exported(&dir.join(TEST_LOG))?;
    cats.map.save_dense(&dir.join(CATEGORIES_DENSE))?;
    ingested.users.save(&dir.join(USER_IDS))?;
    ingested.items.save(&dir.join(ITEM_IDS))?;
    cats.categories.save(&dir.join(CATEGORY_IDS))?;
    Ok(())
}

struct Trained {
    model: demandrec::ModelState,
    train: PurchaseLog,
    cats: CategoryMap,
}

fn load_trained(cfg: &RunConfig, dir: &Path) -> Result<Trained> {
    let mut model = load_model(&dir.join(MODEL_FILE))?;
    if cfg.zero_durations {
        model.d = DurationVector::zeros(model.d.len());
    }
    Ok(Trained {
        model,
        train: PurchaseLog::load_exported(&dir.join(TRAIN_LOG))?,
        cats: CategoryMap::load_dense(&dir.join(CATEGORIES_DENSE))?,
    })
}

pub fn evaluate(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let t = load_trained(cfg, dir)?;
    let test: Vec<Triplet> = PurchaseLog::load_exported(&dir.join(TEST_LOG))?
        .triplets()
        .to_vec();
    let rec = RecencyIndex::build(&t.train, &t.cats)?;
    let scorer = Scorer::new(&t.model, &t.cats, &rec)?;
    let n = scorer.num_items();
    let sample = match cfg.item_sample_size {
        0 => n,
        s => s.min(n),
    };
    let report = MetricReport {
        test_records: test.len(),
        category_rank_pct: Some(category_prediction_metric(&scorer, &test)?),
        time_error_pct: Some(time_prediction_metric(&scorer, &test, cfg.solver.tau)?),
        item_rank_pct: Some(item_prediction_metric(
            &scorer,
            &test,
            sample,
            cfg.solver.seed,
        )?),
    };
    let text = report.to_text();
    print!("{text}");
    std::fs::write(dir.join("metrics.txt"), &text)?;
    if cfg.per_record_csv {
        report.write_per_record_csv(&test, &dir.join("metrics_per_record.csv"))?;
    }
    Ok(())
}

pub fn recommend(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let t = load_trained(cfg, dir)?;
    let users = IdMap::load(&dir.join(USER_IDS))?;
    let items = IdMap::load(&dir.join(ITEM_IDS))?;
    let id = cfg
        .user
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("recommend needs the user key".into()))?;
    let user = users
        .get(id)
        .ok_or_else(|| Error::OutOfRange(format!("unknown user id {id:?}")))?;
    let slot = cfg.slot.unwrap_or(t.model.num_slots as u32);
    let rec = RecencyIndex::build(&t.train, &t.cats)?;
    let scorer = Scorer::new(&t.model, &t.cats, &rec)?;
    let top = scorer.recommend_topn(user, slot, cfg.top_n.min(scorer.num_items()))?;
    let mut out = String::from("rank,item,score\n");
    for (pos, (item, score)) in top.iter().enumerate() {
        let _ = writeln!(out, "{},{},{score}", pos + 1, items.id(*item));
    }
    print!("{out}");
    std::fs::write(dir.join("recommendations.csv"), out)?;
    Ok(())
}

pub fn rank_demo(cfg: &RunConfig, dir: &Path) -> Result<()> {
    if cfg.demo_m == 0 || cfg.demo_n == 0 || cfg.demo_rank == 0 {
        return Err(Error::InvalidConfig(
            "rank-demo dimensions must be positive".into(),
        ));
    }
    let demo = run_rank_demo(cfg.demo_m, cfg.demo_n, cfg.demo_rank, cfg.solver.seed);
    let mut out = String::from("index,form_utility,purchase_intention\n");
    for (q, (x, b)) in demo.x_spectrum.iter().zip(&demo.b_spectrum).enumerate() {
        let _ = writeln!(out, "{},{x},{b}", q + 1);
    }
    std::fs::write(dir.join("spectra.csv"), out)?;
    println!(
        "rank above 1e-8 sigma_max: form utility {}, purchase intention {}",
        demandrec::synth::numerical_rank(&demo.x_spectrum, 1e-8),
        demandrec::synth::numerical_rank(&demo.b_spectrum, 1e-8)
    );
    Ok(())
}
