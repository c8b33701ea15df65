//! One function per subcommand. Each returns a summary value and leaves
//! printing to the caller.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use stormcast::clustering::ClusterLabel;
use stormcast::evaluation::{
    compare_with_baseline, correlate_with_silso, evaluate_scores, format_table, roc_to_csv,
    BaselineComparison, DatedScore, EvaluationReport, SilsoCorrelation,
};
use stormcast::features::{
    assemble_examples, extract_detailed, extract_features, fit_scaler, read_dataset,
    read_feature_store, write_dataset, write_feature_store, AssembledDataset, DailySunspotRecord,
    Extraction, FeatureVector, Scaler,
};
use stormcast::ingest::{
    build_manifest, fetch_sdo, load_image, parse_kp_file, parse_silso, parse_swpc,
    save_png, swpc_storm_calls, write_atomic, FetchOutcome, Transport,
};
use stormcast::learning::{
    classify, fit_model, grid_search, load_model, raw_decision_value, save_model,
    stratified_split, ClassBalance, SplitConfig, SvmModel, TrainSummary,
};
use stormcast::seed::{fingerprint, stage_seed};
use stormcast::synth::{generate_corpus, render_sun, spot_layout, Corpus, CorpusSpec, SunSpec};
use stormcast::StormClass;

use crate::config::{RunConfig, ScalerScope};
use crate::error::{CliError, CliResult};

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Data(stormcast::Error::Io {
        path: path.to_path_buf(),
        source: e,
    }))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

pub fn cmd_fetch(
    cfg: &RunConfig,
    start: NaiveDate,
    end: NaiveDate,
    transport: &dyn Transport,
) -> CliResult<FetchOutcome> {
    Ok(fetch_sdo(start, end, &cfg.fetch_config(), transport)?)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExtractSummary {
    pub already_present: usize,
    pub extracted: usize,
    pub failed: Vec<(NaiveDate, String)>,
    pub total_records: usize,
}

fn dump_debug(dir: &Path, ex: &Extraction) -> CliResult<()> {
    let s = &ex.stages;
    let (w, h) = (s.smoothed.width(), s.smoothed.height());
    let stem = ex.record.date.format("%Y%m%d").to_string();
    let mut regions = vec![0u8; w * h];
    for (p, label) in s.edges.foreground().zip(&ex.labeling.labels) {
        regions[p.1 * w + p.0] = match label {
            ClusterLabel::Noise => 255,
            ClusterLabel::Cluster(id) => 60 + ((id * 47) % 180) as u8,
        };
    }
    let mut contours = vec![0u8; w * h];
    for c in &ex.contours {
        for &(x, y) in &c.points {
            contours[y * w + x] = 255;
        }
    }
    let layers: [(&str, Vec<u8>); 6] = [
        ("smoothed", s.smoothed.to_u8()),
        ("magnitude", s.gradient.magnitude_map().to_u8()),
        ("suppressed", s.suppressed.to_u8()),
        ("edges", s.edges.to_u8()),
        ("contours", contours),
        ("regions", regions),
    ];
    for (name, data) in layers {
        save_png(dir.join(format!("{stem}_{name}.png")), w, h, &data)?;
    }
    Ok(())
}

/// Extracts every manifest date missing from `out`, in chunks, rewriting the
/// CSV atomically after each chunk so an interrupted run can resume.
/// `limit` caps the number of new dates processed in this call.
pub fn cmd_extract(
    cfg: &RunConfig,
    images: &Path,
    out: &Path,
    debug_dir: Option<&Path>,
    limit: Option<usize>,
) -> CliResult<ExtractSummary> {
    let scan = build_manifest(images)?;
    for path in &scan.duplicates {
        warn!("ignoring duplicate image {}", path.display());
    }
    let mut records: BTreeMap<NaiveDate, DailySunspotRecord> = if out.is_file() {
        read_feature_store(read_bytes(out)?.as_slice())?
            .into_iter()
            .map(|r| (r.date, r))
            .collect()
    } else {
        BTreeMap::new()
    };
    let mut summary = ExtractSummary {
        already_present: scan
            .manifest
            .entries
            .keys()
            .filter(|d| records.contains_key(d))
            .count(),
        ..ExtractSummary::default()
    };
    let pending: Vec<(NaiveDate, PathBuf)> = scan
        .manifest
        .entries
        .iter()
        .filter(|(d, _)| !records.contains_key(d))
        .map(|(d, p)| (*d, p.clone()))
        .take(limit.unwrap_or(usize::MAX))
        .collect();
    if let Some(dir) = debug_dir {
        std::fs::create_dir_all(dir).map_err(|e| stormcast::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }

    for chunk in pending.chunks(cfg.extract_chunk) {
        let results: Vec<(NaiveDate, Result<DailySunspotRecord, String>)> = chunk
            .par_iter()
            .map(|(date, path)| {
                let r = load_image(path)
                    .and_then(|img| extract_detailed(*date, &img, &cfg.canny, &cfg.dbscan))
                    .map_err(|e| e.to_string())
                    .and_then(|ex| {
                        if let Some(dir) = debug_dir {
                            dump_debug(dir, &ex).map_err(|e| e.to_string())?;
                        }
                        Ok(ex.record)
                    });
                (*date, r)
            })
            .collect();
        for (date, r) in results {
            match r {
                Ok(rec) => {
                    records.insert(date, rec);
                    summary.extracted += 1;
                }
                Err(msg) => {
                    warn!("{date}: {msg}");
                    summary.failed.push((date, msg));
                }
            }
        }
        let all: Vec<DailySunspotRecord> = records.values().copied().collect();
        let mut buf = Vec::new();
        write_feature_store(&mut buf, &all)?;
        write_atomic(out, &buf)?;
        info!("{} of {} dates extracted", summary.extracted, pending.len());
    }
    if pending.is_empty() && !out.is_file() {
        let mut buf = Vec::new();
        write_feature_store(&mut buf, &[])?;
        write_atomic(out, &buf)?;
    }
    summary.total_records = records.len();
    Ok(summary)
}

pub fn cmd_dataset(features: &Path, kp: &Path, out: &Path) -> CliResult<AssembledDataset> {
    let records = read_feature_store(read_bytes(features)?.as_slice())?;
    let kp = parse_kp_file(kp)?;
    for issue in &kp.issues {
        warn!("Kp line {}: {}", issue.line, issue.message);
    }
    let assembled = assemble_examples(&records, &kp.records);
    let mut buf = Vec::new();
    write_dataset(&mut buf, &assembled.examples)?;
    write_atomic(out, &buf)?;
    Ok(assembled)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainOutcome {
    pub summary: TrainSummary,
    pub train_size: usize,
    pub test_size: usize,
    pub model_path: PathBuf,
    pub dataset_fingerprint: String,
}

fn train_report_path(model: &Path) -> PathBuf {
    let mut name = model.file_name().unwrap_or_default().to_os_string();
    name.push(".train.json");
    model.with_file_name(name)
}

pub fn cmd_train(cfg: &RunConfig, dataset: &Path, model_out: &Path) -> CliResult<TrainOutcome> {
    let bytes = read_bytes(dataset)?;
    let dataset_fingerprint = fingerprint(&bytes);
    let examples = read_dataset(bytes.as_slice())?;
    let split_cfg = cfg.split_config();
    let (train, test) = stratified_split(&examples, &split_cfg)?;
    let scaler: Scaler = match cfg.scaler_scope {
        ScalerScope::Train => fit_scaler(&train)?,
        ScalerScope::Global => fit_scaler(&examples)?,
    };
    let smote_cfg = cfg.smote_config();
    let mut svm_cfg = cfg.svm;
    if cfg.grid_search {
        let grid = grid_search(&train, &scaler, &smote_cfg, &svm_cfg, stage_seed(cfg.seed, "grid"))?;
        for (c, g, auc) in &grid.table {
            info!("grid C={c} gamma={g}: validation AUC {auc:.4}");
        }
        svm_cfg = grid.best;
    }
    let (mut model, summary) = fit_model(&train, scaler, &smote_cfg, &svm_cfg)?;
    model.meta.seed = cfg.seed;
    model.meta.split_seed = split_cfg.seed;
    model.meta.test_fraction = split_cfg.test_fraction;
    model.meta.dataset_fingerprint = dataset_fingerprint.clone();
    save_model(model_out, &model)?;

    let outcome = TrainOutcome {
        summary,
        train_size: train.len(),
        test_size: test.len(),
        model_path: model_out.to_path_buf(),
        dataset_fingerprint,
    };
    write_json(
        &train_report_path(model_out),
        &json!({
            "config": cfg.to_json(),
            "inputs": { "dataset": &outcome.dataset_fingerprint },
            "svm": svm_cfg,
            "train": &outcome,
        }),
    )?;
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateOutcome {
    pub report: EvaluationReport,
    pub comparison: Option<BaselineComparison>,
    pub table: String,
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    model_path: &Path,
    dataset: &Path,
    swpc: Option<&Path>,
    out_dir: &Path,
) -> CliResult<EvaluateOutcome> {
    let model_bytes = read_bytes(model_path)?;
    let model = load_model(model_path)?;
    let bytes = read_bytes(dataset)?;
    let dataset_fingerprint = fingerprint(&bytes);
    if !model.meta.dataset_fingerprint.is_empty() && model.meta.dataset_fingerprint != dataset_fingerprint {
        return Err(CliError::Data(stormcast::Error::InvalidParameter(format!(
            "{} was trained on a different dataset than {}",
            model_path.display(),
            dataset.display()
        ))));
    }
    let examples = read_dataset(bytes.as_slice())?;
    let (_, test) = stratified_split(
        &examples,
        &SplitConfig {
            test_fraction: model.meta.test_fraction,
            seed: model.meta.split_seed,
        },
    )?;
    let scored: Vec<DatedScore> = test
        .iter()
        .map(|e| {
            Ok(DatedScore {
                date: e.date,
                score: raw_decision_value(&model, &e.features)?,
                truth: e.label,
            })
        })
        .collect::<CliResult<_>>()?;
    let scores: Vec<f64> = scored.iter().map(|s| s.score).collect();
    let truth: Vec<StormClass> = scored.iter().map(|s| s.truth).collect();
    let report = evaluate_scores("G-SVM", &scores, &truth, &cfg.fingerprint())?;

    let mut inputs = json!({
        "dataset": dataset_fingerprint,
        "model": fingerprint(&model_bytes),
    });
    let comparison = match swpc {
        Some(path) => {
            let raw = read_bytes(path)?;
            let parsed = parse_swpc(path)?;
            inputs["swpc"] = json!(fingerprint(&raw));
            let calls = swpc_storm_calls(&parsed.records);
            let cmp = compare_with_baseline(&scored, &calls, &cfg.fingerprint())?;
            if !cmp.missing.is_empty() {
                warn!("SWPC covers {} fewer test dates", cmp.missing.len());
            }
            Some(cmp)
        }
        None => None,
    };
    let table = match &comparison {
        Some(c) => format!(
            "{}\nBaseline rows use the {} test dates SWPC covers.\n",
            format_table(&[&c.ours, &c.baseline]),
            c.ours.n_test.no_storm + c.ours.n_test.storm
        ),
        None => format_table(&[&report]),
    };

    std::fs::create_dir_all(out_dir).map_err(|e| stormcast::Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    write_json(
        &out_dir.join("report.json"),
        &json!({
            "config": cfg.to_json(),
            "inputs": inputs,
            "model": { "gamma": model.gamma, "c": model.c, "converged": model.converged },
            "report": &report,
            "baseline_comparison": &comparison,
        }),
    )?;
    write_atomic(out_dir.join("roc.csv"), roc_to_csv(report.roc.as_ref().expect("scored report")).as_bytes())?;
    write_atomic(out_dir.join("table.txt"), table.as_bytes())?;
    Ok(EvaluateOutcome {
        report,
        comparison,
        table,
    })
}

pub fn cmd_correlate(
    cfg: &RunConfig,
    features: &Path,
    silso: &Path,
    out: Option<&Path>,
) -> CliResult<SilsoCorrelation> {
    let fbytes = read_bytes(features)?;
    let records = read_feature_store(fbytes.as_slice())?;
    let sbytes = read_bytes(silso)?;
    let parsed = parse_silso(silso)?;
    let c = correlate_with_silso(&records, &parsed.records)?;
    if let Some(out) = out {
        write_json(
            out,
            &json!({
                "config": cfg.to_json(),
                "inputs": { "features": fingerprint(&fbytes), "silso": fingerprint(&sbytes) },
                "correlation": c,
            }),
        )?;
    }
    Ok(c)
}

#[derive(Debug, Clone, Serialize)]
pub struct Forecast {
    pub class: StormClass,
    pub decision_value: f64,
    pub features: FeatureVector,
}

pub fn cmd_predict(
    cfg: &RunConfig,
    model: &Path,
    today: &Path,
    yesterday: &Path,
    prev_storm: bool,
) -> CliResult<Forecast> {
    let model: SvmModel = load_model(model)?;
    // dates only label log lines here
    let day = NaiveDate::default();
    let prev = extract_features(day, &load_image(yesterday)?, &cfg.canny, &cfg.dbscan)?;
    let cur = extract_features(day, &load_image(today)?, &cfg.canny, &cfg.dbscan)?;
    let features = FeatureVector::new(&prev, prev_storm, &cur);
    let decision_value = raw_decision_value(&model, &features)?;
    Ok(Forecast {
        class: classify(decision_value),
        decision_value,
        features,
    })
}

pub fn cmd_synth(out: &Path, spec: &CorpusSpec) -> CliResult<Corpus> {
    let corpus = generate_corpus(out, spec)?;
    let labels: Vec<_> = corpus
        .days
        .iter()
        .map(|d| json!({ "date": d.date, "spots": d.spots, "groups": d.groups }))
        .collect();
    write_json(&out.join("truth.json"), &json!({ "spec": spec, "days": labels }))?;
    Ok(corpus)
}

/// Renders a single noiseless sun with `spots` spots in `groups` groups.
pub fn cmd_render(out: &Path, spots: usize, groups: usize, seed: u64) -> CliResult<()> {
    let spec = SunSpec {
        noise: 0.0,
        seed,
        ..SunSpec::default()
    };
    let layout = spot_layout(&spec, spots, groups, seed)?;
    let img = render_sun(&spec, &layout);
    Ok(save_png(out, img.width(), img.height(), &img.to_u8())?)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub extract: ExtractSummary,
    pub examples: usize,
    pub train: TrainOutcome,
    pub evaluate: EvaluateOutcome,
}

/// extract → dataset → train → evaluate inside `work`.
pub fn cmd_run(
    cfg: &RunConfig,
    images: &Path,
    kp: &Path,
    swpc: Option<&Path>,
    work: &Path,
) -> CliResult<RunOutcome> {
    let features = work.join("features.csv");
    let dataset = work.join("dataset.csv");
    let model = work.join("model.txt");
    let extract = cmd_extract(cfg, images, &features, None, None)?;
    let assembled = cmd_dataset(&features, kp, &dataset)?;
    let train = cmd_train(cfg, &dataset, &model)?;
    let evaluate = cmd_evaluate(cfg, &model, &dataset, swpc, &work.join("reports"))?;
    Ok(RunOutcome {
        extract,
        examples: assembled.examples.len(),
        train,
        evaluate,
    })
}

pub fn balance_line(label: &str, b: &ClassBalance) -> String {
    let total = (b.no_storm + b.storm).max(1) as f64;
    format!(
        "{label}: {} no_storm ({:.1}%), {} storm ({:.1}%)",
        b.no_storm,
        100.0 * b.no_storm as f64 / total,
        b.storm,
        100.0 * b.storm as f64 / total
    )
}
