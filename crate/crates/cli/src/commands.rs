use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use solarens::dataset::{average_reading_columns, clean_pipeline};
use solarens::eval::write_predictions_csv;
use solarens::features::{kde_estimate, pearson_matrix, prune_correlated, rank_importance, write_kde_csv};
use solarens::physical::{compare_with_actual, rmse_vs_actual, write_comparisons_csv};
use solarens::{
    compare_models, generate_dataset, train_test_split, CompareOptions, Dataset, Error, MetricReport,
    ModelKind, RunConfig, TrainedModel,
};

use crate::Failure;

type CmdResult = Result<(), Failure>;

const CLEANED: &str = "cleaned.csv";
const SELECTED: &str = "selected_features.txt";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Explicit path, then the config file's `input`, then `fallback` inside the output dir.
fn resolve_input(cfg: &RunConfig, flag: Option<PathBuf>, fallback: Option<&str>) -> Result<PathBuf, Error> {
    flag.or_else(|| cfg.input.clone())
        .or_else(|| fallback.map(|f| cfg.output_dir.join(f)))
        .ok_or_else(|| Error::Config("no input file: pass --input or set `input` in the config".into()))
}

fn load(cfg: &RunConfig, path: &Path) -> Result<Dataset, Error> {
    Dataset::load_csv(path, &cfg.target_name)
}

fn read_feature_list(path: &Path) -> Result<Vec<String>, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let names: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    if names.is_empty() {
        return Err(Error::EmptyInput("feature list is empty"));
    }
    Ok(names)
}

fn resolve_features(cfg: &RunConfig, d: &Dataset, flag: Option<PathBuf>) -> Result<Vec<String>, Error> {
    match flag {
        Some(p) => read_feature_list(&p),
        None => {
            let default = cfg.output_dir.join(SELECTED);
            if default.exists() {
                read_feature_list(&default)
            } else {
                Ok(d.feature_names())
            }
        }
    }
}

fn to_json(value: &impl serde::Serialize) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn synth(cfg: &RunConfig, days: Option<usize>) -> CmdResult {
    let mut sc = cfg.synth_config();
    if let Some(d) = days {
        sc.n_days = d;
    }
    let d = generate_dataset(&sc)?;
    let path = cfg.output_dir.join("synthetic.csv");
    ensure_dir(&cfg.output_dir)?;
    d.write_csv(&path)?;
    println!("{}", path.display());
    Ok(())
}

pub fn preprocess(cfg: &RunConfig, input: Option<PathBuf>) -> CmdResult {
    let path = resolve_input(cfg, input, None)?;
    let d = load(cfg, &path)?;
    let keep = average_reading_columns(&d);
    let (clean, report) = clean_pipeline(&d, &keep, cfg.power_threshold_watts)?;
    ensure_dir(&cfg.output_dir)?;
    let out = cfg.output_dir.join(CLEANED);
    clean.write_csv(&out)?;
    write_text(&cfg.output_dir.join("cleaning_report.json"), &to_json(&report)?)?;
    println!(
        "rows {} -> {}, columns {} -> {}, imputed cells {}",
        report.rows_in,
        report.rows_out,
        report.cols_in,
        report.cols_out,
        report.imputed_cells.values().sum::<usize>()
    );
    println!("{}", out.display());
    Ok(())
}

pub fn analyze(cfg: &RunConfig, input: Option<PathBuf>) -> CmdResult {
    let path = resolve_input(cfg, input, Some(CLEANED))?;
    let d = load(cfg, &path)?;
    let features = d.feature_names();
    let importance = rank_importance(&d, &features, &cfg.importance)?;
    let corr = pearson_matrix(&d, &features)?;
    let pruned = prune_correlated(&corr, cfg.correlation_threshold);
    let selected: Vec<String> = importance
        .selected()
        .into_iter()
        .filter(|n| !pruned.contains(n))
        .collect();
    if selected.is_empty() {
        return Err(Error::EmptyInput("no feature survived selection").into());
    }

    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    importance.write_csv(dir.join("importance.csv"))?;
    corr.write_csv(dir.join("correlation.csv"))?;
    write_text(&dir.join("pruned_features.txt"), &lines(&pruned))?;
    for name in &selected {
        let values = d.column(name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
        let est = kde_estimate(values, None, cfg.kde_grid_size).map_err(|e| Failure {
            code: Failure::VALIDATION,
            lines: vec![format!("{e} (column {name})")],
        })?;
        write_kde_csv(&est, create(&dir.join("kde").join(format!("{name}.csv")))?)?;
    }
    write_text(&dir.join(SELECTED), &lines(&selected))?;

    for f in &importance.features {
        println!(
            "{:<12} lasso {:>10.5} enet {:>10.5} {}",
            f.name,
            f.lasso_coef,
            f.enet_coef,
            if f.selected { "kept" } else { "dropped" }
        );
    }
    if !pruned.is_empty() {
        println!("pruned for correlation: {}", pruned.join(", "));
    }
    println!("selected: {}", selected.join(", "));
    Ok(())
}

fn lines(names: &[String]) -> String {
    names.iter().map(|n| format!("{n}\n")).collect()
}

pub fn train(
    cfg: &RunConfig,
    input: Option<PathBuf>,
    kind: ModelKind,
    features: Option<PathBuf>,
    all_rows: bool,
) -> CmdResult {
    let path = resolve_input(cfg, input, Some(CLEANED))?;
    let d = load(cfg, &path)?;
    let features = resolve_features(cfg, &d, features)?;
    let spec = cfg.spec(kind)?;
    let train = if all_rows {
        d.clone()
    } else {
        d.take_rows(&train_test_split(d.n_rows(), cfg.split_ratio, cfg.seed)?.train)?
    };
    let x = train.feature_matrix(&features)?;
    let model = spec.fit(&x, train.target(), &features).map_err(|e| Failure::fit(kind, &e))?;
    let out = cfg.output_dir.join("models").join(format!("{kind}.json"));
    ensure_dir(out.parent().expect("models dir"))?;
    model.save(&out)?;
    println!("trained {kind} on {} rows x {} features", train.n_rows(), features.len());
    println!("{}", out.display());
    Ok(())
}

fn predict_rows(model: &TrainedModel, d: &Dataset) -> Result<Vec<f64>, Error> {
    model.predict(&d.feature_matrix(&model.feature_names)?)
}

pub fn predict(cfg: &RunConfig, input: Option<PathBuf>, model_file: &Path) -> CmdResult {
    let path = resolve_input(cfg, input, Some(CLEANED))?;
    let d = load(cfg, &path)?;
    let model = TrainedModel::load(model_file)?;
    let pred = predict_rows(&model, &d)?;
    let out = cfg
        .output_dir
        .join("predictions")
        .join(format!("{}_all.csv", model.kind()));
    let idx: Vec<usize> = (0..d.n_rows()).collect();
    write_predictions_csv(create(&out)?, &idx, d.target(), &pred)?;
    println!("{} predictions", pred.len());
    println!("{}", out.display());
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, input: Option<PathBuf>, model_file: &Path) -> CmdResult {
    let path = resolve_input(cfg, input, Some(CLEANED))?;
    let d = load(cfg, &path)?;
    let model = TrainedModel::load(model_file)?;
    let split = train_test_split(d.n_rows(), cfg.split_ratio, cfg.seed)?;
    let test = d.take_rows(&split.test)?;
    let pred = predict_rows(&model, &test)?;
    let report = MetricReport::compute(test.target(), &pred)?;
    let kind = model.kind();
    let dir = &cfg.output_dir;
    write_text(&dir.join(format!("evaluation_{kind}.json")), &to_json(&report)?)?;
    write_predictions_csv(
        create(&dir.join("predictions").join(format!("{kind}.csv")))?,
        &split.test,
        test.target(),
        &pred,
    )?;
    println!("{kind}: rmse {:.4} r2 {:.4} on {} test rows", report.rmse, report.r2, report.n);
    Ok(())
}

pub fn compare(
    cfg: &RunConfig,
    input: Option<PathBuf>,
    models: Option<Vec<ModelKind>>,
    repeats: Option<usize>,
    features: Option<PathBuf>,
    single_thread: bool,
) -> CmdResult {
    let path = resolve_input(cfg, input, Some(CLEANED))?;
    let d = load(cfg, &path)?;
    let features = resolve_features(cfg, &d, features)?;
    let kinds = models.unwrap_or_else(|| cfg.models.roster.clone());
    let specs = cfg.roster_specs(&kinds)?;
    let split = train_test_split(d.n_rows(), cfg.split_ratio, cfg.seed)?;
    let opts = CompareOptions {
        repeats: repeats.unwrap_or(cfg.repeats),
        single_thread,
    };
    let table = compare_models(&specs, &d, &features, &split, opts)?;

    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    table.write_csv(create(&dir.join("comparison.csv"))?)?;
    for row in table.rows.iter().filter(|r| r.error.is_none()) {
        write_predictions_csv(
            create(&dir.join("predictions").join(format!("{}.csv", row.model)))?,
            &table.test_indices,
            &table.actual,
            &row.predictions,
        )?;
    }
    print!("{}", table.to_text());

    let failed: Vec<String> = table
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("fit failed for {}: {e}", r.model)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: Failure::FIT,
            lines: failed,
        })
    }
}

pub fn physical(cfg: &RunConfig, input: Option<PathBuf>) -> CmdResult {
    let path = resolve_input(cfg, input, None)?;
    let d = load(cfg, &path)?;
    let (rows, skipped) = compare_with_actual(&cfg.plant, &d, "DirR_Avg", "WS_Avg")?;
    let out = cfg.output_dir.join("physical.csv");
    write_comparisons_csv(&rows, create(&out)?)?;
    println!("rmse {:.4} over {} rows ({} below the irradiance guard skipped)", rmse_vs_actual(&rows)?, rows.len(), skipped);
    println!("{}", out.display());
    Ok(())
}
