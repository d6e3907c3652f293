use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ams_anomaly::bench::{
    evaluate, featurize, generate_dataset, minority_cluster, permutation_accuracy, render_table,
    run_suite, simulate_dataset, write_report_csv, Suite, SuiteReport, REPORT_HEADER,
};
use ams_anomaly::centroid::{refit_with_centroids, select_centroids_nd, CentroidSelection, SigmaSource};
use ams_anomaly::cluster::{self, cluster_stats, ClusterModel};
use ams_anomaly::earlydetect::{latency_report, write_detections_csv};
use ams_anomaly::features::{normalize_dataset, read_dataset_csv, write_dataset_csv, FeatureRow, Label};
use ams_anomaly::inject::{inject_point_periodic, inject_point_random};
use ams_anomaly::model::ModelFile;
use ams_anomaly::waveforms::Waveform;
use ams_anomaly::{Error, Result};
use serde_json::json;

use crate::overlay::{self, FitKeys};
use crate::{Cli, Command, DetectArgs, FitArgs, Global, InjectArgs, InjectPattern, ReportArgs, SelectArgs};

pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate(args) => simulate(g, &overlay::experiment(g.config.as_deref(), g.seed, args)?),
        Command::Inject(args) => inject(g, args),
        Command::Featurize(args) => {
            let cfg = overlay::experiment(g.config.as_deref(), g.seed, args)?;
            let rows = generate_dataset(&cfg)?;
            write_dataset_csv(&rows, create(&g.out, "features.csv")?)?;
            println!("{}", json!({ "rows": rows.len(), "features": cfg.features.to_string() }));
            Ok(())
        }
        Command::Fit(args) => fit(g, args),
        Command::SelectCentroids(args) => select(g, args),
        Command::Detect(args) => detect(g, args),
        Command::Experiment(args) => {
            let cfg = overlay::experiment(g.config.as_deref(), g.seed, args)?;
            write_reports(g, &SuiteReport::from_reports(vec![evaluate(&cfg)?]))
        }
        Command::Suite => {
            let path = g
                .config
                .as_deref()
                .ok_or_else(|| Error::config("config", "suite needs --config <suite.toml>"))?;
            let mut suite = Suite::from_toml(&overlay::read_text(path)?)?;
            if let Some(seed) = g.seed {
                suite.seed = seed;
            }
            write_reports(g, &run_suite(&suite))
        }
        Command::Report(args) => report(g, args),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: impl Into<PathBuf>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_waveform(path: &Path) -> Result<Waveform> {
    let name = path.file_stem().map_or("signal".into(), |s| s.to_string_lossy().into_owned());
    Waveform::read_csv(name, open(path)?)
}

fn simulate(g: &Global, cfg: &ams_anomaly::bench::ExperimentConfig) -> Result<()> {
    let ds = simulate_dataset(cfg)?;
    let mut labels = csv::Writer::from_writer(create(&g.out, "labels.csv")?);
    labels.write_record(["sample_id", "label"])?;
    for s in &ds.samples {
        labels.write_record([s.sample_id.to_string(), s.label.as_u8().to_string()])?;
        for (name, w) in ds.signal_names.iter().zip(&s.signals) {
            let file = format!("waveforms/{name}/{}.csv", s.sample_id);
            let mut out = create(&g.out, &file)?;
            w.write_csv(&mut out)?;
            finish(out, g.out.join(file))?;
        }
    }
    labels.flush().map_err(|e| Error::io(g.out.join("labels.csv"), e))?;
    println!(
        "{}",
        json!({ "samples": ds.samples.len(), "signals": ds.signal_names, "n_samples": ds.n_samples() })
    );
    Ok(())
}

fn inject(g: &Global, args: &InjectArgs) -> Result<()> {
    let w = read_waveform(&args.input)?;
    let (out, record) = match args.pattern {
        InjectPattern::Random => {
            inject_point_random(&w, args.rate, args.amp_low, args.amp_high, g.seed.unwrap_or(0))?
        }
        InjectPattern::Periodic => inject_point_periodic(&w, args.threshold, args.delta)?,
    };
    out.write_csv(create(&g.out, "injected.csv")?)?;
    record.write_csv(create(&g.out, "injections.csv")?)?;
    println!("{}", json!({ "injected": record.len(), "n_samples": w.len() }));
    Ok(())
}

/// Normalized training points with their labels.
struct Training {
    rows: Vec<FeatureRow>,
    points: Vec<Vec<f64>>,
}

impl Training {
    fn new(rows: Vec<FeatureRow>) -> Result<(Self, ams_anomaly::features::NormalizationParams)> {
        let (norm, params) = normalize_dataset(&rows)?;
        let points = norm.iter().map(|r| r.values.clone()).collect();
        Ok((Training { rows, points }, params))
    }

    fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }
}

fn choose_anomalous(explicit: Option<usize>, model: &ClusterModel, points: &[Vec<f64>]) -> Result<usize> {
    match explicit {
        Some(c) => Ok(c),
        None => Ok(minority_cluster(&model.assign_all(points)?)),
    }
}

fn refine(
    model: &ClusterModel,
    points: &[Vec<f64>],
    source: SigmaSource,
) -> Result<(ClusterModel, CentroidSelection)> {
    let stats = cluster_stats(model, points)?;
    let selection = select_centroids_nd(points, &stats, source)?;
    Ok((refit_with_centroids(points, &selection)?, selection))
}

fn fit(g: &Global, args: &FitArgs) -> Result<()> {
    let (keys, rows) = match &args.input {
        Some(path) => {
            let t = overlay::table(g.config.as_deref(), g.seed, &args.experiment)?;
            let keys = FitKeys::from_table(t)?;
            let rows = read_dataset_csv(open(path)?)?;
            if rows.first().map(FeatureRow::dim) != Some(keys.features.len()) {
                return Err(Error::config(
                    "features",
                    format!("{} has rows that do not match the selection {}", path.display(), keys.features),
                ));
            }
            (keys, rows)
        }
        None => {
            let cfg = overlay::experiment(g.config.as_deref(), g.seed, &args.experiment)?;
            let ds = simulate_dataset(&cfg)?;
            let rows = featurize(&ds, &[0], &cfg.features, cfg.window_k)?;
            (FitKeys::from_config(&cfg), rows)
        }
    };
    let (train, normalization) = Training::new(rows)?;
    let mut model = cluster::fit(keys.algorithm, &train.points, &keys.cluster, keys.seed.unwrap_or(0))?;
    let mut selection = None;
    if keys.centroid_select {
        let (refit, sel) = refine(&model, &train.points, keys.sigma_source)?;
        model = refit;
        selection = Some(sel);
    }
    let anomalous = choose_anomalous(args.anomalous_cluster, &model, &train.points)?;
    let mut file = ModelFile::new(model, normalization, keys.features, keys.window_k, anomalous)?;
    file.centroid_selection = selection;
    save_model(g, &file)?;
    let (acc, _, _) = permutation_accuracy(&train.labels(), &file.model.assign_all(&train.points)?)?;
    println!(
        "{}",
        json!({
            "algorithm": file.model.algorithm.as_str(),
            "rows": train.points.len(),
            "anomalous_cluster": anomalous,
            "training_accuracy_pct": acc,
        })
    );
    Ok(())
}

fn save_model(g: &Global, file: &ModelFile) -> Result<()> {
    let mut out = create(&g.out, "model.json")?;
    file.write_json(&mut out)?;
    finish(out, g.out.join("model.json"))
}

fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::read_json(open(path)?)
}

fn select(g: &Global, args: &SelectArgs) -> Result<()> {
    let mut file = load_model(&args.model)?;
    let rows = read_dataset_csv(open(&args.input)?)?;
    let points = rows
        .iter()
        .map(|r| file.normalization.apply(&r.values))
        .collect::<Result<Vec<_>>>()?;
    let (refit, selection) = refine(&file.model, &points, args.sigma_source)?;
    file.anomalous_cluster = choose_anomalous(args.anomalous_cluster, &refit, &points)?;
    if file.anomalous_cluster > 1 {
        return Err(Error::config("anomalous_cluster", "must be 0 or 1"));
    }
    file.model = refit;
    file.centroid_selection = Some(selection.clone());
    save_model(g, &file)?;
    let mut out = create(&g.out, "centroids.json")?;
    serde_json::to_writer_pretty(&mut out, &selection)?;
    finish(out, g.out.join("centroids.json"))?;
    println!(
        "{}",
        json!({ "fallback": selection.any_fallback(), "anomalous_cluster": file.anomalous_cluster })
    );
    Ok(())
}

fn detect(g: &Global, args: &DetectArgs) -> Result<()> {
    let file = load_model(&args.model)?;
    let windows = match (args.windows, file.window_k) {
        (Some(k), Some(trained)) if k != trained => {
            return Err(Error::config(
                "windows",
                format!("model was trained on {trained} windows per signal, got {k}"),
            ))
        }
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => return Err(Error::config("windows", "model has no window count; pass --windows")),
    };
    let results = args
        .input
        .iter()
        .enumerate()
        .map(|(i, path)| Ok((i as u64, file.detect(&read_waveform(path)?, windows, args.early_stop)?)))
        .collect::<Result<Vec<_>>>()?;
    write_detections_csv(create(&g.out, "detections.csv")?, &results)?;
    let plain: Vec<_> = results.iter().map(|(_, r)| r.clone()).collect();
    let summary = latency_report(&plain)?;
    println!(
        "{}",
        json!({
            "signals": plain.len(),
            "detection_rate": summary.detection_rate,
            "mean_latency_s": summary.mean_latency_seconds,
            "mean_speedup": summary.mean_speedup,
        })
    );
    Ok(())
}

fn write_reports(g: &Global, report: &SuiteReport) -> Result<()> {
    let mut csv = create(&g.out, "report.csv")?;
    write_report_csv(report, &mut csv)?;
    finish(csv, g.out.join("report.csv"))?;
    let table = render_table(report);
    let mut txt = create(&g.out, "report.txt")?;
    txt.write_all(table.as_bytes()).map_err(|e| Error::io(g.out.join("report.txt"), e))?;
    finish(txt, g.out.join("report.txt"))?;
    print!("{table}");
    Ok(())
}

#[derive(Default)]
struct Group {
    entries: usize,
    failed: usize,
    accuracy: Vec<f64>,
    speedup: Vec<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.2}"))
}

fn report(g: &Global, args: &ReportArgs) -> Result<()> {
    let column = |name: &str| REPORT_HEADER.iter().position(|h| *h == name).expect("report column");
    let (exp, alg, csel, acc, speed) = (
        column("experiment"),
        column("algorithm"),
        column("centroid_select"),
        column("accuracy_pct"),
        column("mean_speedup"),
    );
    let mut merged = csv::Writer::from_writer(create(&g.out, "report.csv")?);
    merged.write_record(REPORT_HEADER)?;
    let mut groups: BTreeMap<(String, String, String), Group> = BTreeMap::new();
    for path in &args.input {
        let mut reader = csv::Reader::from_reader(open(path)?);
        if reader.headers()?.iter().ne(REPORT_HEADER) {
            return Err(Error::Input(format!("{}: not a report CSV", path.display())));
        }
        for rec in reader.records() {
            let rec = rec?;
            merged.write_record(&rec)?;
            let key = (rec[exp].to_string(), rec[alg].to_string(), rec[csel].to_string());
            let grp = groups.entry(key).or_default();
            grp.entries += 1;
            let parse = |i: usize| rec[i].parse::<f64>().ok();
            match parse(acc) {
                Some(a) => grp.accuracy.push(a),
                None => grp.failed += 1,
            }
            grp.speedup.extend(parse(speed));
        }
    }
    merged.flush().map_err(|e| Error::io(g.out.join("report.csv"), e))?;
    let mut summary = csv::Writer::from_writer(create(&g.out, "summary.csv")?);
    summary.write_record([
        "experiment",
        "algorithm",
        "centroid_select",
        "entries",
        "failed",
        "mean_accuracy_pct",
        "max_accuracy_pct",
        "mean_speedup",
    ])?;
    for ((e, a, c), grp) in &groups {
        let max = grp.accuracy.iter().copied().reduce(f64::max);
        summary.write_record([
            e.clone(),
            a.clone(),
            c.clone(),
            grp.entries.to_string(),
            grp.failed.to_string(),
            cell(mean(&grp.accuracy)),
            cell(max),
            cell(mean(&grp.speedup)),
        ])?;
        println!(
            "{e:<9} {a:<9} csel={c:<5} rows={:<3} mean={:>6} max={:>6}",
            grp.entries,
            cell(mean(&grp.accuracy)),
            cell(max)
        );
    }
    summary.flush().map_err(|e| Error::io(g.out.join("summary.csv"), e))?;
    Ok(())
}
