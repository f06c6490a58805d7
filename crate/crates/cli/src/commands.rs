//! One function per subcommand, all writing into a [`RunDir`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use drive_ep::epa::{aggregate_epa, epa_confidence_intervals};
use drive_ep::eval::{
    coverage_boot, draw_test_subsamples, evaluate_model, write_per_subsample_csv, write_reports_csv, MetricReport,
};
use drive_ep::gbdt::tune_grid;
use drive_ep::ingest::{parse_play_csv, split_by_drives, write_play_csv};
use drive_ep::manifest::{data_hash, sha256_hex};
use drive_ep::model::OutcomeModel;
use drive_ep::summary::{quality_summary, spread_profile, write_summary_csv};
use drive_ep::synth::generate_league;
use drive_ep::trainers::{catalytic_fit, CatalyticConfig};
use drive_ep::uncertainty::{fit_bootstrap_ensemble, BootstrapEnsemble};
use drive_ep::{Error, PlayDataset, ProbVector, Result};
use log::info;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Serialize)]
struct InputRecord {
    path: PathBuf,
    sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    plays: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drives: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: String,
    seed: u64,
    threads: usize,
    versions: BTreeMap<&'static str, &'static str>,
    inputs: &'a BTreeMap<String, InputRecord>,
    outputs: &'a [String],
}

pub struct RunDir {
    dir: PathBuf,
    inputs: BTreeMap<String, InputRecord>,
    outputs: Vec<String>,
}

impl RunDir {
    fn create(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(RunDir {
            dir,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        self.outputs.push(name.to_string());
        Ok(p)
    }

    fn writer(&mut self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name)?)?))
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.path(name)?, contents)?;
        Ok(())
    }

    fn load_plays(&mut self, role: &str, path: &Path, cfg: &RunConfig) -> Result<PlayDataset> {
        let ds = parse_play_csv(path, &cfg.ingest)?;
        info!("loaded {role} path={} plays={} drives={}", path.display(), ds.num_plays(), ds.num_drives());
        self.inputs.insert(
            role.to_string(),
            InputRecord {
                path: path.to_path_buf(),
                sha256: data_hash(&ds)?,
                plays: Some(ds.num_plays()),
                drives: Some(ds.num_drives()),
            },
        );
        Ok(ds)
    }

    fn record_file(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.insert(
            role.to_string(),
            InputRecord {
                path: path.to_path_buf(),
                sha256: sha256_hex(&std::fs::read(path)?),
                plays: None,
                drives: None,
            },
        );
        Ok(())
    }

    fn finish(mut self, command: &str, cfg: &RunConfig) -> Result<()> {
        let toml = cfg.to_toml()?;
        self.write("config.toml", &toml)?;
        self.outputs.push("manifest.json".into());
        let manifest = Manifest {
            command,
            config_sha256: sha256_hex(toml.as_bytes()),
            seed: cfg.seed,
            threads: rayon::current_num_threads(),
            versions: BTreeMap::from([("drive-ep", env!("CARGO_PKG_VERSION"))]),
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        std::fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        info!("run complete command={command} dir={}", self.dir.display());
        Ok(())
    }
}

fn require<'a>(slot: &'a Option<PathBuf>, key: &str, flag: &str) -> Result<&'a Path> {
    slot.as_deref()
        .ok_or_else(|| Error::Config(format!("missing data.{key} (set it in the config or pass --{flag})")))
}

pub fn run(command: &str, cfg: &RunConfig) -> Result<()> {
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("runs/{command}-seed{}", cfg.seed)));
    let mut run = RunDir::create(dir)?;
    match command {
        "ingest" => ingest(&mut run, cfg)?,
        "simulate" => simulate(&mut run, cfg)?,
        "tune" => tune(&mut run, cfg)?,
        "train" => train(&mut run, cfg)?,
        "evaluate" => evaluate(&mut run, cfg)?,
        "bootstrap" => bootstrap(&mut run, cfg)?,
        "catalytic" => catalytic(&mut run, cfg)?,
        "epa" => epa(&mut run, cfg)?,
        "summary" => summary(&mut run, cfg)?,
        other => return Err(Error::Config(format!("unknown command {other}"))),
    }
    run.finish(command, cfg)
}

fn write_plays(run: &mut RunDir, name: &str, ds: &PlayDataset) -> Result<()> {
    let mut w = run.writer(name)?;
    write_play_csv(ds, &mut w)?;
    w.flush()?;
    Ok(())
}

fn write_with_split(run: &mut RunDir, cfg: &RunConfig, ds: &PlayDataset) -> Result<()> {
    write_plays(run, "plays.csv", ds)?;
    if let Some(f) = cfg.data.test_fraction {
        let (train, test) = split_by_drives(ds, f, cfg.seed)?;
        info!("split train_drives={} test_drives={}", train.num_drives(), test.num_drives());
        write_plays(run, "train.csv", &train)?;
        write_plays(run, "test.csv", &test)?;
    }
    Ok(())
}

fn ingest(run: &mut RunDir, cfg: &RunConfig) -> Result<()> {
    let input = require(&cfg.data.input, "input", "input")?;
    let ds = run.load_plays("input", input, cfg)?;
    write_with_split(run, cfg, &ds)
}

fn simulate(run: &mut RunDir, cfg: &RunConfig) -> Result<()> {
    let ds = generate_league(&cfg.synth)?;
    info!("simulated plays={} drives={}", ds.num_plays(), ds.num_drives());
    write_with_split(run, cfg, &ds)
}

fn tune(run: &mut RunDir, cfg: &RunConfig) -> Result<()> {
    let train = run.load_plays("train", require(&cfg.data.train, "train", "train")?, cfg)?;
    let result = tune_grid(&train, &cfg.tune.grid, &cfg.tune.features, cfg.seed)?;
    let mut w = csv::Writer::from_writer(run.writer("tune.csv")?);
    w.write_record([
        "index",
        "num_rounds",
        "max_depth",
        "learning_rate",
        "min_child_weight",
        "row_subsample",
        "col_subsample",
        "l2_leaf_penalty",
        "validation_logloss",
    ])?;
    for r in &result.table {
        let p = &r.params;
        w.write_record([
            r.index.to_string(),
            p.num_rounds.to_string(),
            p.max_depth.to_string(),
            p.learning_rate.to_string(),
            p.min_child_weight.to_string(),
            p.row_subsample.to_string(),
            p.col_subsample.to_string(),
            p.l2_leaf_penalty.to_string(),
            r.validation_logloss.to_string(),
        ])?;
    }
    w.flush()?;
    let best = toml::to_string_pretty(&result.best).map_err(|e| Error::Config(e.to_string()))?;
    run.write("best_params.toml", &best)?;
    info!("tuned grid_points={} best_rounds={}", result.table.len(), result.best.num_rounds);
    Ok(())
}

fn write_predictions(run: &mut RunDir, name: &str, ds: &PlayDataset, probs: &[ProbVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(run.writer(name)?);
    w.write_record(["drive_id", "play_index_in_drive", "p_td", "p_fg", "p_no_score", "p_opp_safety", "p_opp_td", "ep"])?;
    for (p, q) in ds.plays().iter().zip(probs) {
        let mut rec = vec![p.drive_id.clone(), p.play_index_in_drive.to_string()];
        rec.extend(q.as_array().iter().map(|v| v.to_string()));
        rec.push(q.expected_points().to_string());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_metrics(run: &mut RunDir, prefix: &str, reports: &[MetricReport]) -> Result<()> {
    write_reports_csv(reports, run.writer(&format!("{prefix}metrics.csv"))?)?;
    write_per_subsample_csv(reports, run.writer(&format!("{prefix}metrics_per_subsample.csv"))?)?;
    for r in reports {
        info!("metric {}={:.6} se={:?} m_test={}", r.metric, r.value, r.se, r.m_test);
    }
    Ok(())
}

/// Predictions and single-model metrics on the test set, when there is one.
fn score_on_test(run: &mut RunDir, cfg: &RunConfig, prefix: &str, model: &OutcomeModel, test: Option<&PlayDataset>) -> Result<Vec<MetricReport>> {
    let Some(test) = test else {
        return Ok(Vec::new());
    };
    write_predictions(run, &format!("{prefix}predictions.csv"), test, &model.predict_dataset(test)?)?;
    let subs = draw_test_subsamples(test, cfg.eval.m_test, cfg.seed)?;
    let reports = evaluate_model(model, test, &subs, cfg.eval.alpha)?;
    write_metrics(run, prefix, &reports)?;
    Ok(reports)
}

fn load_test(run: &mut RunDir, cfg: &RunConfig) -> Result<Option<PlayDataset>> {
    cfg.data.test.as_deref().map(|p| run.load_plays("test", p, cfg)).transpose()
}

fn train(run: &mut RunDir, cfg: &RunConfig) -> Result<()> {
    let train = run.load_plays("train", require(&cfg.data.train, "train", "train")?, cfg)?;
    let test = load_test(run, cfg)?;
    let model = cfg.trainer.fit(&train, cfg.seed)?;
    model.save(&run.path("model.json")?)?;
    score_on_test(run, cfg, "", &model, test.as_ref())?;
    Ok(())
}

fn load_model(run: &mut RunDir, cfg: &RunConfig) -> Result<OutcomeModel> {
    let path = require(&cfg.data.model, "model", "model")?;
    run.record_file("model", path)?;
    OutcomeModel::load(path)
}

fn load_ensemble(run: &mut RunDir, cfg: &RunConfig) -> Result<Option<BootstrapEnsemble>> {
    let Some(dir) = cfg.data.ensemble.as_deref() else {
        return Ok(None);
    };
    run.record_file("ensemble", &dir.join("manifest.json"))?;
    let (ens, manifest) = BootstrapEnsemble::load(dir)?;
    info!("loaded ensemble b={} data_hash={}", manifest.b, manifest.data_hash);
    Ok(Some(ens))
}

fn evaluate(run: &mut RunDir, cfg: &RunConfig) -> Result<()> {
    let model = load_model(run, cfg)?;
    let test = run.load_plays("test", require(&cfg.data.test, "test", "test")?, cfg)?;
    let ens = load_ensemble(run, cfg)?;
    let subs = draw_test_subsamples(&test, cfg.eval.m_test, cfg.seed)?;
    let mut reports = evaluate_model(&model, &test, &subs, cfg.eval.alpha)?;
    if let Some(ens) = ens {
        reports.push(coverage_boot(&ens, &test, &subs, cfg.eval.alpha, cfg.seed)?);
    }
    write_metrics(run, "", &reports)
}

fn bootstrap(run: &mut RunDir, cfg: &RunConfig) -> Result<()> {
    let train = run.load_plays("train", require(&cfg.data.train, "train", "train")?, cfg)?;
    let test = load_test(run, cfg)?;
    let ens = fit_bootstrap_ensemble(&train, cfg.bootstrap.b, cfg.bootstrap.scheme, &cfg.trainer, cfg.seed)?;
    let dir = run.dir.join("ensemble");
    ens.save(&dir, &train)?;
    run.outputs.push("ensemble/".into());
    if let Some(test) = test {
        let subs = draw_test_subsamples(&test, cfg.eval.m_test, cfg.seed)?;
        let report = coverage_boot(&ens, &test, &subs, cfg.eval.alpha, cfg.seed)?;
        write_metrics(run, "", &[report])?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    phi: f64,
    weight_ratio: f64,
    n_observed: usize,
    n_synthetic: usize,
    rmse: Option<f64>,
    rmse_se: Option<f64>,
    logloss: Option<f64>,
    logloss_se: Option<f64>,
    coverage: Option<f64>,
    coverage_se: Option<f64>,
}

fn catalytic(run: &mut RunDir, cfg: &RunConfig) -> Result<()> {
    let train = run.load_plays("train", require(&cfg.data.train, "train", "train")?, cfg)?;
    let test = load_test(run, cfg)?;
    let c = &cfg.catalytic;
    let mut curve = Vec::new();
    for &phi in &c.phi_grid {
        let fit = catalytic_fit(
            &train,
            &CatalyticConfig {
                m_synth: c.m_synth,
                phi,
                prior: c.prior.clone(),
                target: c.target.clone(),
                weighting: c.weighting,
                drive_shared_outcomes: c.drive_shared_outcomes,
                seed: cfg.seed,
            },
        )?;
        let prefix = format!("phi_{phi}/");
        fit.model.save(&run.path(&format!("{prefix}model.json"))?)?;
        fit.prior.save(&run.path(&format!("{prefix}prior.json"))?)?;
        run.write(&format!("{prefix}report.json"), &serde_json::to_string_pretty(&fit.report)?)?;
        let reports = score_on_test(run, cfg, &prefix, &fit.model, test.as_ref())?;
        let get = |name: &str| reports.iter().find(|r| r.metric == name);
        info!("catalytic phi={phi} weight_ratio={:.6}", fit.report.weight_ratio);
        curve.push(CurveRow {
            phi,
            weight_ratio: fit.report.weight_ratio,
            n_observed: fit.report.n_observed,
            n_synthetic: fit.report.n_synthetic,
            rmse: get("rmse").map(|r| r.value),
            rmse_se: get("rmse").and_then(|r| r.se),
            logloss: get("logloss").map(|r| r.value),
            logloss_se: get("logloss").and_then(|r| r.se),
            coverage: get("coverage").map(|r| r.value),
            coverage_se: get("coverage").and_then(|r| r.se),
        });
    }
    let mut w = csv::Writer::from_writer(run.writer("catalytic.csv")?);
    for row in &curve {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn epa(run: &mut RunDir, cfg: &RunConfig) -> Result<()> {
    let plays = run.load_plays("plays", require(&cfg.data.plays, "plays", "plays")?, cfg)?;
    let model = load_model(run, cfg)?;
    let ens = load_ensemble(run, cfg)?;
    let e = &cfg.epa;
    let table = match &ens {
        Some(ens) => epa_confidence_intervals(&plays, &model, ens, e.entity, e.season, e.min_plays, e.level)?,
        None => aggregate_epa(&plays, &model, e.entity, e.season, e.min_plays)?,
    };
    info!("epa rows={}", table.rows.len());
    table.write_csv(run.writer("epa.csv")?)?;
    run.write("epa.json", &table.to_json()?)?;
    if e.plot_data {
        table.write_plot_data(run.writer("epa_plot.csv")?)?;
    }
    Ok(())
}

fn summary(run: &mut RunDir, cfg: &RunConfig) -> Result<()> {
    let plays = run.load_plays("plays", require(&cfg.data.plays, "plays", "plays")?, cfg)?;
    let quality = quality_summary(&plays);
    write_summary_csv(&quality, run.writer("quality.csv")?)?;
    write_summary_csv(&spread_profile(&plays), run.writer("spread_profile.csv")?)?;
    println!("{:<8} {:>8} {:>10} {:>8} {:>16}", "group", "plays", "play_share", "drives", "points_per_drive");
    for r in &quality {
        println!(
            "{:<8} {:>8} {:>10.3} {:>8} {:>16.3}",
            r.group, r.n_plays, r.play_share, r.n_drives, r.points_per_drive
        );
    }
    Ok(())
}
