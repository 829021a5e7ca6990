use std::collections::BTreeSet;

use crate::datamodel::{ProcedureRecord, ProcedureType};
use crate::estimator::{train_with_progress, FusionConfig, PredictionPoint};

use super::metrics::{errors_for_procedure, quartile_report};
use super::report::{EvalReport, MethodReport, ProcedureResult, TypeBreakdown, AGGREGATION_NOTE};
use super::{fit_baseline, make_folds, BaselineKind, EvalError, FoldSplit};

/// Training seed for fold `fold` of an evaluation seeded with `seed`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_eval(
    dataset: &[ProcedureRecord],
    configs: &[FusionConfig],
    seed: u64,
) -> Result<EvalReport, EvalError> {
    run_eval_with_log(dataset, configs, seed, &|_| {})
}

/// Leave-one-fold-out evaluation of both baselines and every config.
/// Folds run on separate threads; results are assembled in a fixed order,
/// so the report depends only on the inputs and `seed`.
pub fn run_eval_with_log(
    dataset: &[ProcedureRecord],
    configs: &[FusionConfig],
    seed: u64,
    log: &(dyn Fn(&str) + Sync),
) -> Result<EvalReport, EvalError> {
    let split = make_folds(dataset, seed)?;
    let mut names: Vec<String> = vec![
        BaselineKind::Naive.label().to_string(),
        BaselineKind::PerType.label().to_string(),
    ];
    for c in configs {
        c.validate()?;
        let name = c.name();
        if names.contains(&name) {
            return Err(EvalError::DuplicateMethod(name));
        }
        names.push(name);
    }

    let fold_results: Vec<Result<Vec<Vec<ProcedureResult>>, EvalError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..split.folds.len())
            .map(|k| {
                let split = &split;
                s.spawn(move || evaluate_fold(dataset, split, k, configs, seed, log))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    });

    let mut per_method: Vec<Vec<ProcedureResult>> = vec![Vec::new(); names.len()];
    for fold in fold_results {
        for (m, results) in fold?.into_iter().enumerate() {
            per_method[m].extend(results);
        }
    }

    let methods = names
        .into_iter()
        .zip(per_method)
        .enumerate()
        .map(|(m, (name, mut procedures))| {
            procedures.sort_by(|a, b| a.id.cmp(&b.id));
            let config = m.checked_sub(2).map(|k| {
                let mut c = configs[k].clone();
                c.seed = seed;
                c
            });
            summarize_method(name, config, procedures, split.folds.len())
        })
        .collect();

    Ok(EvalReport {
        seed,
        aggregation: AGGREGATION_NOTE.to_string(),
        folds: split,
        methods,
    })
}

/// Results of every method (baselines first) on held-out fold `k`.
fn evaluate_fold(
    dataset: &[ProcedureRecord],
    split: &FoldSplit,
    k: usize,
    configs: &[FusionConfig],
    seed: u64,
    log: &(dyn Fn(&str) + Sync),
) -> Result<Vec<Vec<ProcedureResult>>, EvalError> {
    let held: BTreeSet<&str> = split.folds[k].iter().map(String::as_str).collect();
    let (test, train): (Vec<ProcedureRecord>, Vec<ProcedureRecord>) =
        dataset.iter().cloned().partition(|r| held.contains(r.id()));
    let score =
        |preds: &[PredictionPoint], r: &ProcedureRecord| -> Result<ProcedureResult, EvalError> {
            let e = errors_for_procedure(preds, r.duration())?;
            Ok(ProcedureResult {
                id: r.id().to_string(),
                ptype: r.ptype().id(),
                n: r.duration(),
                fold: k,
                abs: e.abs,
                rel: e.rel,
            })
        };

    let mut out = Vec::with_capacity(configs.len() + 2);
    for kind in [BaselineKind::Naive, BaselineKind::PerType] {
        let b = fit_baseline(&train, kind)?;
        out.push(
            test.iter()
                .map(|r| score(&b.predict(r.ptype(), r.duration()), r))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    for c in configs {
        let mut cfg = c.clone();
        cfg.seed = fold_seed(seed, k);
        let name = cfg.name();
        let (model, _) = train_with_progress(&train, &cfg, |epoch, loss| {
            log(&format!(
                "fold {} {name} epoch {epoch}/{} loss {loss:.6}",
                k + 1,
                cfg.epochs
            ));
        })?;
        out.push(
            test.iter()
                .map(|r| score(&model.predict_record(r)?, r))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok(out)
}

fn summarize_method(
    name: String,
    config: Option<FusionConfig>,
    procedures: Vec<ProcedureResult>,
    folds: usize,
) -> MethodReport {
    let abs = quartile_report(procedures.iter().map(|p| p.abs.as_slice()));
    let rel = quartile_report(procedures.iter().map(|p| p.rel.as_slice()));
    let proc_mean = |p: &ProcedureResult| p.rel.iter().sum::<f64>() / p.rel.len() as f64;
    let fold_mean_rel = (0..folds)
        .map(|k| {
            let v: Vec<f64> = procedures
                .iter()
                .filter(|p| p.fold == k)
                .map(proc_mean)
                .collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    let per_type = ProcedureType::all()
        .filter_map(|t| {
            let of_type: Vec<&ProcedureResult> =
                procedures.iter().filter(|p| p.ptype == t.id()).collect();
            (!of_type.is_empty()).then(|| TypeBreakdown {
                ptype: t.id(),
                count: of_type.len(),
                abs: quartile_report(of_type.iter().map(|p| p.abs.as_slice())),
                rel: quartile_report(of_type.iter().map(|p| p.rel.as_slice())),
            })
        })
        .collect();
    MethodReport {
        name,
        config,
        abs,
        rel,
        fold_mean_rel,
        per_type,
        procedures,
    }
}
