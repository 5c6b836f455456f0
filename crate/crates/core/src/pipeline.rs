// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration and the pipeline stages behind the CLI
//! subcommands: gen, check, trainset, train, score and repro.
//!
//! Every stage reads and writes files under `paths.dir`, so stages can be
//! run one at a time or chained by `repro`. Outputs depend only on the
//! config and the input files.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ann::{self, BatchMode, InputScaling, TrainConfig, TrainOutcome};
use crate::context::{self, extract_context, ContextConfig, ContextVector};
use crate::geometry::{parse_layout, write_layout, Layout};
use crate::rulecheck::{self, check_enclosure, EnclosureRule, ViolationDb};
use crate::scoring::{self, bin_scores, emit_report, score_all, CombineMode, Report, ScoreKind};
use crate::synth::{
    self, generate_layout, min_pitch, overlay_labels, proxy_labels, EnclosureProfile, GenParams,
    HotspotMarkerSet, PlantedVia, SynthError, HOTSPOT_CORNER_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl PipelineError {
    /// 1 for usage and config problems, 2 for bad or missing data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            _ => 2,
        }
    }
}

fn config_err(e: impl fmt::Display) -> PipelineError {
    PipelineError::Config(e.to_string())
}

fn data_err(path: &Path, e: impl fmt::Display) -> PipelineError {
    PipelineError::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn invalid(e: impl fmt::Display) -> PipelineError {
    PipelineError::Invalid(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    #[default]
    Normalized,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub target_mse: f64,
    pub seed: u64,
    pub init_range: f64,
    pub batch: BatchMode,
    pub scaling: ScalingMode,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            learning_rate: d.learning_rate,
            max_epochs: d.max_epochs,
            target_mse: d.target_mse,
            seed: d.seed,
            init_range: d.init_range,
            batch: d.batch,
            scaling: ScalingMode::Normalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSection {
    pub seed: u64,
    pub n_vias: usize,
    pub violation_fraction: f64,
    pub hotspot_context_fraction: f64,
    #[serde(default)]
    pub placement_pitch: Option<i64>,
    #[serde(default)]
    pub profile: EnclosureProfile,
}

/// Evaluation design for `repro`; unset fields fall back to `[gen]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub seed: u64,
    #[serde(default)]
    pub n_vias: Option<usize>,
    #[serde(default)]
    pub violation_fraction: Option<f64>,
    #[serde(default)]
    pub hotspot_context_fraction: Option<f64>,
    #[serde(default)]
    pub placement_pitch: Option<i64>,
    #[serde(default)]
    pub profile: Option<EnclosureProfile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Geometric lithography proxy.
    #[default]
    Proxy,
    /// Hotspot marker file at `paths.hotspots`.
    Markers,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub dir: PathBuf,
    pub layout: PathBuf,
    pub truth: PathBuf,
    pub db: PathBuf,
    pub db_json: PathBuf,
    pub hotspots: PathBuf,
    pub trainset: PathBuf,
    pub weights: PathBuf,
    pub loss_log: PathBuf,
    pub scored: PathBuf,
    pub report_json: PathBuf,
    pub report_txt: PathBuf,
    pub plot_conventional: PathBuf,
    pub plot_optimized: PathBuf,
    pub summary: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            layout: "layout.txt".into(),
            truth: "truth.txt".into(),
            db: "violations.txt".into(),
            db_json: "violations.json".into(),
            hotspots: "hotspots.txt".into(),
            trainset: "trainset.txt".into(),
            weights: "weights.txt".into(),
            loss_log: "loss.txt".into(),
            scored: "scored.txt".into(),
            report_json: "report.json".into(),
            report_txt: "report.txt".into(),
            plot_conventional: "plot_conventional.dat".into(),
            plot_optimized: "plot_optimized.dat".into(),
            summary: "summary.json".into(),
        }
    }
}

impl Paths {
    fn files(&self) -> [(&'static str, &PathBuf); 14] {
        [
            ("layout", &self.layout),
            ("truth", &self.truth),
            ("db", &self.db),
            ("db_json", &self.db_json),
            ("hotspots", &self.hotspots),
            ("trainset", &self.trainset),
            ("weights", &self.weights),
            ("loss_log", &self.loss_log),
            ("scored", &self.scored),
            ("report_json", &self.report_json),
            ("report_txt", &self.report_txt),
            ("plot_conventional", &self.plot_conventional),
            ("plot_optimized", &self.plot_optimized),
            ("summary", &self.summary),
        ]
    }

    pub fn get(&self, f: &Path) -> PathBuf {
        self.dir.join(f)
    }
}

fn default_threshold() -> usize {
    HOTSPOT_CORNER_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rule: EnclosureRule,
    #[serde(default)]
    pub combine_mode: CombineMode,
    #[serde(default)]
    pub labels: LabelSource,
    #[serde(default = "default_threshold")]
    pub hotspot_threshold: usize,
    /// Defaults to [`ContextConfig::for_rule`].
    #[serde(default)]
    pub context: Option<ContextConfig>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub gen: Option<GenSection>,
    #[serde(default)]
    pub eval: Option<EvalSection>,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<CombineMode>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(document: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(document).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Config(format!(
            "{}: {source}",
            path.display()
        )))?;
        Self::from_toml(&text)
    }

    pub fn minimal(rule: EnclosureRule) -> Self {
        Self {
            rule,
            combine_mode: CombineMode::default(),
            labels: LabelSource::default(),
            hotspot_threshold: HOTSPOT_CORNER_THRESHOLD,
            context: None,
            train: TrainSection::default(),
            paths: Paths::default(),
            gen: None,
            eval: None,
        }
    }

    /// `seed` goes to the generator for `gen`/`repro` and to the trainer
    /// for `train`; callers pick via `seed_target`.
    pub fn apply(&mut self, o: &Overrides, seed_target: SeedTarget) -> Result<(), PipelineError> {
        if let Some(seed) = o.seed {
            match seed_target {
                SeedTarget::Generator => {
                    self.gen
                        .as_mut()
                        .ok_or_else(|| config_err("--seed needs a [gen] section"))?
                        .seed = seed
                }
                SeedTarget::Trainer => self.train.seed = seed,
                SeedTarget::None => {}
            }
        }
        if let Some(mode) = o.mode {
            self.combine_mode = mode;
        }
        if let Some(out) = &o.out {
            self.paths.dir = out.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.rule.validate().map_err(config_err)?;
        self.context().validate().map_err(config_err)?;
        self.train_config().validate().map_err(config_err)?;
        let mut seen = BTreeSet::new();
        for (name, p) in self.paths.files() {
            if !seen.insert(p) {
                return Err(config_err(format!("paths.{name} duplicates another path")));
            }
        }
        if self.gen.is_some() {
            self.gen_params()?.validate().map_err(config_err)?;
        }
        if self.eval.is_some() {
            self.eval_params()?.validate().map_err(config_err)?;
        }
        Ok(())
    }

    pub fn context(&self) -> ContextConfig {
        self.context
            .clone()
            .unwrap_or_else(|| ContextConfig::for_rule(&self.rule))
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            learning_rate: t.learning_rate,
            max_epochs: t.max_epochs,
            target_mse: t.target_mse,
            seed: t.seed,
            init_range: t.init_range,
            batch: t.batch,
            scaling: match t.scaling {
                ScalingMode::Normalized => InputScaling::Normalized {
                    cap: self.context().cap,
                },
                ScalingMode::Raw => InputScaling::Raw,
            },
        }
    }

    pub fn gen_params(&self) -> Result<GenParams, PipelineError> {
        let g = self
            .gen
            .as_ref()
            .ok_or_else(|| config_err("missing [gen] section"))?;
        Ok(GenParams {
            seed: g.seed,
            n_vias: g.n_vias,
            violation_fraction: g.violation_fraction,
            hotspot_context_fraction: g.hotspot_context_fraction,
            rule: self.rule.clone(),
            placement_pitch: g.placement_pitch.unwrap_or_else(|| default_pitch(&self.rule)),
            profile: g.profile,
        })
    }

    pub fn eval_params(&self) -> Result<GenParams, PipelineError> {
        let base = self.gen_params()?;
        let e = self
            .eval
            .as_ref()
            .ok_or_else(|| config_err("missing [eval] section"))?;
        Ok(GenParams {
            seed: e.seed,
            n_vias: e.n_vias.unwrap_or(base.n_vias),
            violation_fraction: e.violation_fraction.unwrap_or(base.violation_fraction),
            hotspot_context_fraction: e
                .hotspot_context_fraction
                .unwrap_or(base.hotspot_context_fraction),
            placement_pitch: e.placement_pitch.unwrap_or(base.placement_pitch),
            profile: e.profile.unwrap_or(base.profile),
            rule: base.rule,
        })
    }

    fn path(&self, f: &Path) -> PathBuf {
        self.paths.get(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedTarget {
    Generator,
    Trainer,
    None,
}

fn default_pitch(rule: &EnclosureRule) -> i64 {
    min_pitch(rule) + 3 * rule.dfm_rec
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

fn write_truth(planted: &[PlantedVia]) -> String {
    let mut out = String::new();
    for p in planted {
        let [a, b, c, d] = p.via.coords();
        let (side, enc) = match p.failing {
            Some((s, e)) => (s.to_string(), e.to_string()),
            None => ("-".into(), "-".into()),
        };
        let pattern = serde_json::to_value(p.pattern).expect("pattern serializes");
        out.push_str(&format!(
            "planted marker={a},{b},{c},{d} violation={} bad_context={} side={side} enc={enc} pattern={}\n",
            u8::from(p.is_violation),
            u8::from(p.bad_context),
            pattern.as_str().unwrap_or("?"),
        ));
    }
    out
}

fn load_layout(cfg: &ExperimentConfig) -> Result<Layout, PipelineError> {
    let path = cfg.path(&cfg.paths.layout);
    parse_layout(&read(&path)?).map_err(|e| data_err(&path, e))
}

fn load_db(cfg: &ExperimentConfig) -> Result<ViolationDb, PipelineError> {
    let path = cfg.path(&cfg.paths.db);
    let db = rulecheck::load_db(&read(&path)?).map_err(|e| data_err(&path, e))?;
    if db.rule != cfg.rule {
        return Err(data_err(&path, "database was checked with a different rule"));
    }
    Ok(db)
}

/// Hotspot labels per violation: proxy labels are also written out as a
/// marker file, marker labels are read from it.
fn labels(cfg: &ExperimentConfig, layout: &Layout, db: &ViolationDb) -> Result<Vec<(usize, bool)>, PipelineError> {
    let path = cfg.path(&cfg.paths.hotspots);
    match cfg.labels {
        LabelSource::Proxy => {
            let labels = proxy_labels(layout, db, &cfg.context(), cfg.hotspot_threshold).map_err(invalid)?;
            write(&path, &HotspotMarkerSet::from_labels(db, &labels).write())?;
            Ok(labels)
        }
        LabelSource::Markers => {
            let set = HotspotMarkerSet::parse(&read(&path)?).map_err(|e| data_err(&path, e))?;
            Ok(overlay_labels(db, &set))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenSummary {
    pub design: String,
    pub vias: usize,
    pub planted_violations: usize,
    pub planted_hotspots: usize,
}

pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<GenSummary, PipelineError> {
    let params = cfg.gen_params()?;
    let (layout, planted) = generate_layout(&params).map_err(|e| match e {
        SynthError::InvalidParams(_) | SynthError::InfeasiblePitch { .. } => config_err(e),
        other => invalid(other),
    })?;
    write(&cfg.path(&cfg.paths.layout), &write_layout(&layout))?;
    write(&cfg.path(&cfg.paths.truth), &write_truth(&planted))?;
    Ok(GenSummary {
        design: layout.name.clone(),
        vias: planted.len(),
        planted_violations: planted.iter().filter(|p| p.is_violation).count(),
        planted_hotspots: planted.iter().filter(|p| p.bad_context).count(),
    })
}

pub fn cmd_check(cfg: &ExperimentConfig) -> Result<ViolationDb, PipelineError> {
    let layout = load_layout(cfg)?;
    let db = check_enclosure(&layout, &cfg.rule).map_err(|e| data_err(&cfg.path(&cfg.paths.layout), e))?;
    write(&cfg.path(&cfg.paths.db), &rulecheck::save_db(&db))?;
    write(&cfg.path(&cfg.paths.db_json), &rulecheck::db_to_json(&db))?;
    Ok(db)
}

pub fn cmd_trainset(cfg: &ExperimentConfig) -> Result<Vec<ContextVector>, PipelineError> {
    let layout = load_layout(cfg)?;
    let db = load_db(cfg)?;
    let labels = labels(cfg, &layout, &db)?;
    let set = synth::build_training_set(&layout, &db, &labels, &cfg.context()).map_err(invalid)?;
    write(
        &cfg.path(&cfg.paths.trainset),
        &context::write_training_set(&set).map_err(invalid)?,
    )?;
    Ok(set)
}

pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutcome, PipelineError> {
    let path = cfg.path(&cfg.paths.trainset);
    let set = context::parse_training_set(&read(&path)?).map_err(|e| data_err(&path, e))?;
    let outcome = ann::train(&set, &cfg.train_config()).map_err(|e| data_err(&path, e))?;
    write(&cfg.path(&cfg.paths.weights), &ann::save_weights(&outcome.weights))?;
    let log: String = outcome.loss_history.iter().map(|l| format!("{l:?}\n")).collect();
    write(&cfg.path(&cfg.paths.loss_log), &log)?;
    Ok(outcome)
}

pub fn cmd_score(cfg: &ExperimentConfig) -> Result<Report, PipelineError> {
    let layout = load_layout(cfg)?;
    let db = load_db(cfg)?;
    let wpath = cfg.path(&cfg.paths.weights);
    let weights = ann::load_weights(&read(&wpath)?).map_err(|e| data_err(&wpath, e))?;
    let ctx = cfg.context();
    let vectors = db
        .violations
        .iter()
        .map(|v| extract_context(&layout, &v.marker, &ctx))
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    let scored = score_all(&db, &vectors, &weights, cfg.combine_mode).map_err(invalid)?;
    let hot: BTreeSet<usize> = labels(cfg, &layout, &db)?
        .into_iter()
        .filter_map(|(id, h)| h.then_some(id))
        .collect();
    let conv = bin_scores(&scored, ScoreKind::Conventional, &hot).map_err(invalid)?;
    let opt = bin_scores(&scored, ScoreKind::Optimized, &hot).map_err(invalid)?;
    let report = emit_report(&scored, &conv, &opt);

    write(&cfg.path(&cfg.paths.scored), &scoring::save_scored(&db.design_name, &scored))?;
    write(&cfg.path(&cfg.paths.report_json), &report.to_json())?;
    write(&cfg.path(&cfg.paths.report_txt), &report.to_table())?;
    write(
        &cfg.path(&cfg.paths.plot_conventional),
        &report.plot_data(ScoreKind::Conventional),
    )?;
    write(&cfg.path(&cfg.paths.plot_optimized), &report.plot_data(ScoreKind::Optimized))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproSummary {
    pub train_seed: u64,
    pub eval_seed: u64,
    pub train_violations: usize,
    pub train_hotspots: usize,
    pub epochs: usize,
    pub final_mse: f64,
    pub eval_violations: usize,
    pub eval_hotspots: usize,
    pub conventional_hotspot_bin_mass: f64,
    pub optimized_hotspot_bin_mass: f64,
    pub conventional_counts: Vec<usize>,
    pub optimized_counts: Vec<usize>,
}

impl fmt::Display for ReproSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "train design (seed {}): {} violations, {} hotspots; {} epochs, final MSE {:.5}",
            self.train_seed, self.train_violations, self.train_hotspots, self.epochs, self.final_mse
        )?;
        writeln!(
            f,
            "eval design (seed {}): {} violations, {} hotspots",
            self.eval_seed, self.eval_violations, self.eval_hotspots
        )?;
        writeln!(f, "share of violations binned with the hotspots:")?;
        writeln!(
            f,
            "  conventional  {:6.2}%   {:?}",
            100.0 * self.conventional_hotspot_bin_mass,
            self.conventional_counts
        )?;
        write!(
            f,
            "  context-aware {:6.2}%   {:?}",
            100.0 * self.optimized_hotspot_bin_mass,
            self.optimized_counts
        )
    }
}

/// Train on the `[gen]` design, score the `[eval]` design. Outputs go to
/// `<dir>/train`, `<dir>/eval` and `<dir>/<summary>`.
pub fn cmd_repro(cfg: &ExperimentConfig) -> Result<ReproSummary, PipelineError> {
    let train_params = cfg.gen_params()?;
    let eval_params = cfg.eval_params()?;
    if train_params.seed == eval_params.seed {
        return Err(config_err("eval seed must differ from the training seed"));
    }

    let mut train_cfg = cfg.clone();
    train_cfg.paths.dir = cfg.paths.dir.join("train");
    cmd_gen(&train_cfg)?;
    cmd_check(&train_cfg)?;
    let set = cmd_trainset(&train_cfg)?;
    let outcome = cmd_train(&train_cfg)?;

    let mut eval_cfg = cfg.clone();
    eval_cfg.paths.dir = cfg.paths.dir.join("eval");
    let eval = eval_cfg.eval.take().expect("checked by eval_params");
    let gen = eval_cfg.gen.as_mut().expect("checked by gen_params");
    gen.seed = eval.seed;
    gen.n_vias = eval_params.n_vias;
    gen.violation_fraction = eval_params.violation_fraction;
    gen.hotspot_context_fraction = eval_params.hotspot_context_fraction;
    gen.placement_pitch = Some(eval_params.placement_pitch);
    gen.profile = eval_params.profile;
    cmd_gen(&eval_cfg)?;
    cmd_check(&eval_cfg)?;
    let wsrc = train_cfg.path(&train_cfg.paths.weights);
    write(&eval_cfg.path(&eval_cfg.paths.weights), &read(&wsrc)?)?;
    let report = cmd_score(&eval_cfg)?;

    let summary = ReproSummary {
        train_seed: train_params.seed,
        eval_seed: eval_params.seed,
        train_violations: set.len(),
        train_hotspots: set.iter().filter(|v| v.label == Some(true)).count(),
        epochs: outcome.loss_history.len(),
        final_mse: outcome.final_mse(),
        eval_violations: report.violations,
        eval_hotspots: report.hotspots,
        conventional_hotspot_bin_mass: report.conventional.hotspot_bin_mass,
        optimized_hotspot_bin_mass: report.optimized.hotspot_bin_mass,
        conventional_counts: report.conventional.counts.clone(),
        optimized_counts: report.optimized.counts.clone(),
    };
    write(
        &cfg.path(&cfg.paths.summary),
        &serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
combine_mode = "geomean"

[rule]
via_layer = "VIA"
metal_layer = "METAL"
drc_min = 5
dfm_rec = 10

[train]
seed = 3
max_epochs = 2000

[gen]
seed = 1
n_vias = 60
violation_fraction = 1.0
hotspot_context_fraction = 0.3

[eval]
seed = 2
hotspot_context_fraction = 0.1
profile = { kind = "dominant", enc = 8, share = 0.9 }
"#;

    #[test]
    fn config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        assert_eq!(cfg.context().halo, 50);
        assert_eq!(cfg.train_config().max_epochs, 2000);
        assert_eq!(cfg.train_config().scaling, InputScaling::Normalized { cap: 9 });
        let eval = cfg.eval_params().unwrap();
        assert_eq!((eval.seed, eval.n_vias), (2, 60));
        assert_eq!(eval.profile, EnclosureProfile::Dominant { enc: 8, share: 0.9 });
        assert_eq!(eval.placement_pitch, 240);
    }

    #[test]
    fn config_rejects_unknown_and_invalid() {
        let err = ExperimentConfig::from_toml(&format!("{SMALL}\n[extra]\nx = 1\n")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let bad_rule = SMALL.replace("drc_min = 5", "drc_min = 12");
        assert!(ExperimentConfig::from_toml(&bad_rule).is_err());
        let dup = SMALL.replace("[train]", "[paths]\nweights = \"layout.txt\"\n\n[train]");
        assert!(ExperimentConfig::from_toml(&dup).unwrap_err().to_string().contains("duplicates"));
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        let o = Overrides {
            seed: Some(77),
            mode: Some(CombineMode::Min),
            out: Some("elsewhere".into()),
        };
        cfg.apply(&o, SeedTarget::Generator).unwrap();
        assert_eq!(cfg.gen.as_ref().unwrap().seed, 77);
        assert_eq!(cfg.combine_mode, CombineMode::Min);
        assert_eq!(cfg.paths.get(Path::new("x")), PathBuf::from("elsewhere/x"));
        cfg.apply(&o, SeedTarget::Trainer).unwrap();
        assert_eq!(cfg.train.seed, 77);
    }

    #[test]
    fn repro_requires_distinct_seeds() {
        let mut cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        cfg.eval.as_mut().unwrap().seed = 1;
        let err = cmd_repro(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn missing_inputs_are_data_errors() {
        let mut cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        cfg.paths.dir = PathBuf::from("/nonexistent/ctxdfm");
        let err = cmd_check(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(matches!(err, PipelineError::Io { .. }));
    }
}
