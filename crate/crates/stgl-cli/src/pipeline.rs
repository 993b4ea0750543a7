//! Command implementations: each resolves its parameters from flags and
//! the optional config file (flags win), runs the library pipeline, and
//! writes its outputs plus a run manifest under the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use stgl::analysis::{
    classify_topk, compare_methods, mean_graph_contrast, per_class_metrics, regime_contrast,
    score_electrodes, window_dominance, AnalysisError, ClassMetrics, DominanceNormalization,
    ScoreMode,
};
use stgl::baseline::{
    cross_validate, default_window_selection, hvg_features, BaselineConfig, BaselineError,
    FeatureMatrix,
};
use stgl::io::{
    self, load_recording, parse_synth_spec, read_learn_result, read_metrics_csv, save_recording,
    write_contrast_csv, write_dominance_csv, write_edge_list_csv, write_laplacian_csv,
    write_learn_result, write_metrics_csv, write_scores_csv, IoError, KvDocument, RecordingFormat,
};
use stgl::learn::{self, LearnConfig, LearnError, SweepMode};
use stgl::signal::{make_windows, preprocess, Recording, SignalError};
use stgl::synth::{self, SynthError};

use crate::manifest::Manifest;
use crate::{AnalyzeArgs, BaselineArgs, Cli, Command, CompareArgs, LearnArgs, SynthArgs};

// ---------------------------------------------------------------------
// Error classes and exit codes
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// File-system failures: missing, unreadable, or unwritable files.
    Io,
    /// Malformed or inconsistent inputs, parameters, or configuration.
    Validation,
    /// The numerical solver failed on a block subproblem.
    Solver,
    /// A bug: state that should be unreachable.
    Internal,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Io => 3,
            ErrorClass::Validation => 4,
            ErrorClass::Solver => 5,
            ErrorClass::Internal => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Io => "io",
            ErrorClass::Validation => "validation",
            ErrorClass::Solver => "solver",
            ErrorClass::Internal => "internal",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError {
            class: ErrorClass::Validation,
            message: message.into(),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let class = match &e {
            IoError::Io { .. } => ErrorClass::Io,
            _ => ErrorClass::Validation,
        };
        CliError {
            class,
            message: e.to_string(),
        }
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        let class = match &e {
            LearnError::Solver { .. } => ErrorClass::Solver,
            _ => ErrorClass::Validation,
        };
        CliError {
            class,
            message: e.to_string(),
        }
    }
}

macro_rules! validation_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::validation(e.to_string())
            }
        }
    )*};
}

validation_from!(SignalError, SynthError, BaselineError, AnalysisError);

// ---------------------------------------------------------------------
// Parameter resolution: flag beats config file beats default
// ---------------------------------------------------------------------

struct Resolver {
    config: Option<KvDocument>,
}

impl Resolver {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        Ok(Resolver {
            config: path.map(KvDocument::load).transpose()?,
        })
    }

    fn cfg(&self) -> Option<&KvDocument> {
        self.config.as_ref()
    }

    fn opt_f64(&self, flag: Option<f64>, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.cfg() {
            Some(c) => Ok(c.get_f64(section, key)?),
            None => Ok(None),
        }
    }

    fn f64(&self, flag: Option<f64>, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.opt_f64(flag, section, key)?.unwrap_or(default))
    }

    fn opt_usize(
        &self,
        flag: Option<usize>,
        section: &str,
        key: &str,
    ) -> Result<Option<usize>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.cfg() {
            Some(c) => Ok(c.get_usize(section, key)?),
            None => Ok(None),
        }
    }

    fn usize(
        &self,
        flag: Option<usize>,
        section: &str,
        key: &str,
        default: usize,
    ) -> Result<usize, CliError> {
        Ok(self.opt_usize(flag, section, key)?.unwrap_or(default))
    }

    fn bool(
        &self,
        flag: Option<bool>,
        section: &str,
        key: &str,
        default: bool,
    ) -> Result<bool, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.cfg() {
            Some(c) => Ok(c.get_bool(section, key)?.unwrap_or(default)),
            None => Ok(default),
        }
    }

    fn string(&self, flag: Option<&str>, section: &str, key: &str) -> Option<String> {
        flag.map(str::to_owned)
            .or_else(|| self.cfg().and_then(|c| c.get(section, key).map(str::to_owned)))
    }
}

fn parse_enum<T>(value: &str, what: &str) -> Result<T, CliError>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::validation(format!("{what}: {e}")))
}

fn out_dir(cli: &Cli) -> Result<PathBuf, CliError> {
    let dir = cli
        .out
        .clone()
        .ok_or_else(|| CliError::validation("--out <dir> is required for this command"))?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError {
        class: ErrorClass::Io,
        message: format!("{}: {e}", dir.display()),
    })?;
    Ok(dir)
}

/// Data format from an explicit flag/config value, else from the file
/// extension (`.stgl` means binary), else CSV.
fn resolve_format(explicit: Option<&str>, data_path: &Path) -> Result<RecordingFormat, CliError> {
    match explicit {
        Some(value) => parse_enum(value, "--format"),
        None => Ok(
            if data_path.extension().and_then(|e| e.to_str()) == Some("stgl") {
                RecordingFormat::Binary
            } else {
                RecordingFormat::Csv
            },
        ),
    }
}

// ---------------------------------------------------------------------
// Shared input stages
// ---------------------------------------------------------------------

struct InputStage {
    recording: Recording,
    format: RecordingFormat,
    preprocessed: bool,
}

/// Loads the recording and applies the filtering chain when any
/// preprocessing parameter is configured. Preprocessing is all-or-none:
/// once triggered, all four parameters must resolve.
fn load_and_preprocess(
    args_recording: &Path,
    args_format: Option<&str>,
    args_annotations: Option<&Path>,
    notch_flag: Option<f64>,
    band_low_flag: Option<f64>,
    band_high_flag: Option<f64>,
    target_rate_flag: Option<f64>,
    resolver: &Resolver,
) -> Result<InputStage, CliError> {
    let format = resolve_format(args_format, args_recording)?;
    let recording = load_recording(args_recording, format, args_annotations)?;
    eprintln!(
        "input: {} channels x {} samples at {} Hz (onset at sample {})",
        recording.n_channels(),
        recording.n_samples(),
        recording.sample_rate(),
        recording.onset_sample()
    );

    let section = "preprocess";
    let notch = resolver.opt_f64(notch_flag, section, "notch_hz")?;
    let low = resolver.opt_f64(band_low_flag, section, "band_low")?;
    let high = resolver.opt_f64(band_high_flag, section, "band_high")?;
    let target = resolver.opt_f64(target_rate_flag, section, "target_rate")?;
    let any = notch.is_some() || low.is_some() || high.is_some() || target.is_some();
    if !any {
        return Ok(InputStage {
            recording,
            format,
            preprocessed: false,
        });
    }
    let missing: Vec<&str> = [
        ("notch_hz", notch.is_none()),
        ("band_low", low.is_none()),
        ("band_high", high.is_none()),
        ("target_rate", target.is_none()),
    ]
    .iter()
    .filter(|(_, m)| *m)
    .map(|(k, _)| *k)
    .collect();
    if !missing.is_empty() {
        return Err(CliError::validation(format!(
            "preprocessing is partially configured; missing: {}",
            missing.join(", ")
        )));
    }
    let (notch, low, high, target) =
        (notch.unwrap(), low.unwrap(), high.unwrap(), target.unwrap());
    eprintln!(
        "preprocess: notch {notch} Hz, band {low}-{high} Hz, resample to {target} Hz"
    );
    let recording = preprocess(&recording, notch, (low, high), target)?;
    Ok(InputStage {
        recording,
        format,
        preprocessed: true,
    })
}

struct WindowParams {
    window_ms: f64,
    overlap: f64,
    n_pre: usize,
    n_post: usize,
}

fn window_params(
    resolver: &Resolver,
    window_ms: Option<f64>,
    overlap: Option<f64>,
    n_pre: Option<usize>,
    n_post: Option<usize>,
) -> Result<WindowParams, CliError> {
    let s = "windows";
    Ok(WindowParams {
        window_ms: resolver.f64(window_ms, s, "window_ms", 512.0)?,
        overlap: resolver.f64(overlap, s, "overlap", 0.5)?,
        n_pre: resolver.usize(n_pre, s, "n_pre", 3)?,
        n_post: resolver.usize(n_post, s, "n_post", 9)?,
    })
}

// ---------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------

pub fn cmd_synth(cli: &Cli, args: &SynthArgs) -> Result<(), CliError> {
    let out = out_dir(cli)?;
    let mut manifest = Manifest::new("synth");

    let mut doc = match &args.spec {
        Some(path) => {
            manifest.input("spec", path)?;
            KvDocument::load(path)?
        }
        None => KvDocument::new(),
    };
    if let Some(seed) = cli.seed {
        doc.set(io::SYNTH_SECTION, "seed", seed.to_string());
    }
    let spec = parse_synth_spec(&doc)?;
    eprintln!(
        "synth: {} nodes, {} windows of {} samples, {} regimes, seed {}",
        spec.n_nodes,
        spec.m_windows,
        spec.samples_per_window,
        spec.regimes.len(),
        spec.seed
    );
    let output = synth::generate(&spec)?;

    let format = resolve_format(args.format.as_deref(), Path::new("recording.csv"))?;
    let data_name = match format {
        RecordingFormat::Csv => "recording.csv",
        RecordingFormat::Binary => "recording.stgl",
    };
    save_recording(
        &output.recording,
        &out.join(data_name),
        format,
        &out.join("annotations.txt"),
    )?;
    io::write_truth_sidecar(&out, &output)?;
    eprintln!(
        "synth: wrote {data_name}, annotations.txt, and ground truth for {} planted channels",
        output.soz_mask.iter().filter(|&&s| s).count()
    );

    manifest
        .param("seed", spec.seed)
        .param("n_nodes", spec.n_nodes)
        .param("m_windows", spec.m_windows)
        .param("samples_per_window", spec.samples_per_window)
        .param_float("sample_rate", spec.sample_rate)
        .param_float("noise_std", spec.noise_std)
        .param("format", format);
    manifest.write(&out)?;
    Ok(())
}

// ---------------------------------------------------------------------
// learn
// ---------------------------------------------------------------------

fn learn_config(cli: &Cli, args: &LearnArgs, resolver: &Resolver) -> Result<LearnConfig, CliError> {
    let s = "learn";
    let defaults = LearnConfig::default();
    let sweep = match resolver.string(args.sweep.as_deref(), s, "sweep") {
        Some(value) => parse_enum::<SweepMode>(&value, "--sweep")?,
        None => defaults.sweep,
    };
    Ok(LearnConfig {
        beta: resolver.f64(args.beta, s, "beta", defaults.beta)?,
        max_outer_iter: resolver.usize(args.max_outer_iter, s, "max_outer_iter", defaults.max_outer_iter)?,
        outer_rel_tol: resolver.f64(args.outer_rel_tol, s, "outer_rel_tol", defaults.outer_rel_tol)?,
        kkt_tol: resolver.f64(args.kkt_tol, s, "kkt_tol", defaults.kkt_tol)?,
        solver_max_iter: resolver.usize(args.solver_max_iter, s, "solver_max_iter", defaults.solver_max_iter)?,
        sweep,
        normalize_distances: resolver.bool(
            args.normalize_distances,
            s,
            "normalize_distances",
            defaults.normalize_distances,
        )?,
        threads: resolver.usize(cli.threads, s, "threads", defaults.threads)?,
    })
}

pub fn cmd_learn(cli: &Cli, args: &LearnArgs) -> Result<(), CliError> {
    let out = out_dir(cli)?;
    let resolver = Resolver::load(cli.config.as_deref())?;
    let mut manifest = Manifest::new("learn");
    manifest.input("recording", &args.recording)?;
    if let Some(ann) = &args.annotations {
        manifest.input("annotations", ann)?;
    }
    if let Some(cfg) = &cli.config {
        manifest.input("config", cfg)?;
    }

    let stage = load_and_preprocess(
        &args.recording,
        args.format.as_deref(),
        args.annotations.as_deref(),
        args.notch_hz,
        args.band_low,
        args.band_high,
        args.target_rate,
        &resolver,
    )?;
    let wp = window_params(&resolver, args.window_ms, args.overlap, args.n_pre, args.n_post)?;
    let windowed = make_windows(&stage.recording, wp.window_ms, wp.overlap, wp.n_pre, wp.n_post)?;
    eprintln!(
        "windows: {} of {} ms (overlap {}), labels {} pre / 1 onset / {} post",
        windowed.n_windows(),
        wp.window_ms,
        wp.overlap,
        wp.n_pre,
        wp.n_post
    );

    let config = learn_config(cli, args, &resolver)?;
    if config.threads > 1 && config.sweep == SweepMode::GaussSeidel {
        eprintln!("note: --threads only parallelizes the jacobi sweep; gauss-seidel runs single-threaded");
    }
    let result = learn::run(&windowed.windows, &config)?;
    let final_objective = result.objective_trace.last().copied().unwrap_or(f64::NAN);
    eprintln!(
        "learn: {} outer passes, objective {:.6e}, converged = {}",
        result.outer_iterations, final_objective, result.converged
    );

    write_learn_result(
        &out,
        &result,
        &config,
        &windowed.channel_names,
        &windowed.labels,
        &windowed.window_starts,
    )?;
    // The annotation labels travel with the learn output so analyze can
    // run from the directory alone.
    let soz_names: Vec<String> = windowed
        .channel_names
        .iter()
        .zip(&windowed.soz)
        .filter(|(_, &s)| s)
        .map(|(n, _)| n.clone())
        .collect();
    io::Annotations {
        sample_rate: Some(stage.recording.sample_rate()),
        onset_sample: Some(stage.recording.onset_sample()),
        channels: Some(windowed.channel_names.clone()),
        soz: soz_names,
        bad: stage.recording.bad_channels().to_vec(),
    }
    .save(&out.join("annotations.txt"))?;

    manifest
        .param("format", stage.format)
        .param("preprocessed", stage.preprocessed)
        .param_float("window_ms", wp.window_ms)
        .param_float("overlap", wp.overlap)
        .param("n_pre", wp.n_pre)
        .param("n_post", wp.n_post)
        .param_float("beta", config.beta)
        .param("max_outer_iter", config.max_outer_iter)
        .param_float("outer_rel_tol", config.outer_rel_tol)
        .param_float("kkt_tol", config.kkt_tol)
        .param("solver_max_iter", config.solver_max_iter)
        .param("sweep", config.sweep)
        .param("normalize_distances", config.normalize_distances)
        .param("threads", config.threads);
    manifest.write(&out)?;
    Ok(())
}

// ---------------------------------------------------------------------
// baseline
// ---------------------------------------------------------------------

fn parse_selection(value: &str) -> Result<[usize; 3], CliError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::validation(format!(
            "--windows expects three comma-separated indices, got '{value}'"
        )));
    }
    let mut out = [0usize; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| CliError::validation(format!("'{part}' is not a window index")))?;
    }
    Ok(out)
}

fn write_features_csv(
    path: &Path,
    channel_names: &[String],
    features: &FeatureMatrix,
) -> Result<(), IoError> {
    let mut header = String::from("channel,soz");
    for j in 0..features.n_features() {
        let _ = write!(header, ",f{j:05}");
    }
    let mut out = header;
    out.push('\n');
    for (row, name) in channel_names.iter().enumerate() {
        let _ = write!(out, "{name},{}", features.labels[row]);
        for value in features.values.row(row) {
            let _ = write!(out, ",{}", io::format_float(*value));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn cmd_baseline(cli: &Cli, args: &BaselineArgs) -> Result<(), CliError> {
    let out = out_dir(cli)?;
    let resolver = Resolver::load(cli.config.as_deref())?;
    let mut manifest = Manifest::new("baseline");
    manifest.input("recording", &args.recording)?;
    if let Some(ann) = &args.annotations {
        manifest.input("annotations", ann)?;
    }
    if let Some(cfg) = &cli.config {
        manifest.input("config", cfg)?;
    }

    let stage = load_and_preprocess(
        &args.recording,
        args.format.as_deref(),
        args.annotations.as_deref(),
        args.notch_hz,
        args.band_low,
        args.band_high,
        args.target_rate,
        &resolver,
    )?;
    let wp = window_params(&resolver, args.window_ms, args.overlap, args.n_pre, args.n_post)?;
    let windowed = make_windows(&stage.recording, wp.window_ms, wp.overlap, wp.n_pre, wp.n_post)?;

    let selection = match resolver.string(args.windows.as_deref(), "baseline", "windows") {
        Some(value) => parse_selection(&value)?,
        None => default_window_selection(&windowed.labels)?,
    };
    eprintln!(
        "baseline: visibility features from windows {:?} ({} channels)",
        selection,
        windowed.n_channels()
    );
    let features = hvg_features(&windowed, selection)?;

    let s = "baseline";
    let defaults = BaselineConfig::default();
    let config = BaselineConfig {
        n_folds: resolver.usize(args.folds, s, "folds", defaults.n_folds)?,
        n_components: resolver.opt_usize(args.n_components, s, "n_components")?,
        variance_target: resolver.f64(args.variance_target, s, "variance_target", defaults.variance_target)?,
        l2: resolver.f64(args.l2, s, "l2", defaults.l2)?,
        max_iter: resolver.usize(args.max_iter, s, "max_iter", defaults.max_iter)?,
        seed: cli.seed.unwrap_or(defaults.seed),
    };
    let report = cross_validate(&features, &config)?;
    eprintln!(
        "baseline: pooled accuracy {:.3} (class0 {:.3}, class1 {:.3}) over {} folds",
        report.pooled.total_accuracy,
        report.pooled.class0_accuracy,
        report.pooled.class1_accuracy,
        report.fold_metrics.len()
    );

    write_features_csv(&out.join("features.csv"), &windowed.channel_names, &features)?;

    let mut predictions = String::from("row,channel,fold,probability,predicted,truth\n");
    for p in &report.predictions {
        let _ = writeln!(
            predictions,
            "{},{},{},{},{},{}",
            p.row,
            windowed.channel_names[p.row],
            p.fold,
            io::format_float(p.probability),
            p.predicted,
            p.truth
        );
    }
    std::fs::write(out.join("predictions.csv"), predictions).map_err(|source| IoError::Io {
        path: out.join("predictions.csv"),
        source,
    })?;

    let fold_rows: Vec<(String, ClassMetrics)> = report
        .fold_metrics
        .iter()
        .enumerate()
        .map(|(i, m)| (format!("fold-{i}"), m.clone()))
        .collect();
    write_metrics_csv(&out.join("fold_metrics.csv"), &fold_rows)?;

    let id = recording_id(args.id.as_deref(), &args.recording);
    write_metrics_csv(&out.join("metrics.csv"), &[(id, report.pooled.clone())])?;

    let mut models = KvDocument::new();
    for model in &report.fold_models {
        let section = format!("fold_{}", model.fold);
        let coeffs: Vec<String> = model.coefficients.iter().map(|c| io::format_float(*c)).collect();
        models
            .set(&section, "n_components", model.n_components.to_string())
            .set(&section, "intercept", io::format_float(model.intercept))
            .set(&section, "coefficients", coeffs.join(", "))
            .set(&section, "converged", model.converged.to_string())
            .set(&section, "iterations", model.iterations.to_string());
    }
    models.save(&out.join("models.txt"))?;

    manifest
        .param("format", stage.format)
        .param("preprocessed", stage.preprocessed)
        .param_float("window_ms", wp.window_ms)
        .param_float("overlap", wp.overlap)
        .param("n_pre", wp.n_pre)
        .param("n_post", wp.n_post)
        .param("selected_windows", format!("{},{},{}", selection[0], selection[1], selection[2]))
        .param("folds", config.n_folds)
        .param(
            "n_components",
            config
                .n_components
                .map(|k| k.to_string())
                .unwrap_or_else(|| "auto".to_owned()),
        )
        .param_float("variance_target", config.variance_target)
        .param_float("l2", config.l2)
        .param("max_iter", config.max_iter)
        .param("seed", config.seed);
    manifest.write(&out)?;
    Ok(())
}

fn recording_id(explicit: Option<&str>, path: &Path) -> String {
    explicit.map(str::to_owned).unwrap_or_else(|| {
        path.file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("recording")
            .to_owned()
    })
}

// ---------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------

pub fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<(), CliError> {
    let out = out_dir(cli)?;
    let resolver = Resolver::load(cli.config.as_deref())?;
    let mut manifest = Manifest::new("analyze");
    manifest.input("annotations", &args.annotations)?;
    if let Some(cfg) = &cli.config {
        manifest.input("config", cfg)?;
    }

    let stored = read_learn_result(&args.learn_out)?;
    eprintln!(
        "analyze: {} spatial graphs over {} channels",
        stored.spatial.len(),
        stored.channel_names.len()
    );
    let annotations = io::Annotations::load(&args.annotations)?;
    for name in &annotations.soz {
        if !stored.channel_names.contains(name) {
            return Err(IoError::UnknownChannel(name.clone()).into());
        }
    }
    let true_soz: Vec<bool> = stored
        .channel_names
        .iter()
        .map(|n| annotations.soz.contains(n))
        .collect();

    let s = "analyze";
    let mode = match resolver.string(args.mode.as_deref(), s, "mode") {
        Some(value) => parse_enum::<ScoreMode>(&value, "--mode")?,
        None => ScoreMode::WeightedDegree,
    };
    let soz_count = true_soz.iter().filter(|&&t| t).count();
    let k = match resolver.opt_usize(args.k, s, "k")? {
        Some(k) => k,
        None if soz_count > 0 => soz_count,
        None => {
            return Err(CliError::validation(
                "no labeled channels in the annotations; pass --k to choose the positive count",
            ))
        }
    };
    let top_fraction = resolver.f64(args.top_fraction, s, "top_fraction", 0.25)?;
    let normalization = match resolver
        .string(args.dominance_normalization.as_deref(), s, "dominance_normalization")
        .as_deref()
    {
        None | Some("group") => DominanceNormalization::GroupSize,
        Some("top") => DominanceNormalization::TopSize,
        Some(other) => {
            return Err(CliError::validation(format!(
                "--dominance-normalization must be 'group' or 'top', got '{other}'"
            )))
        }
    };

    let scores = score_electrodes(
        &stored.spatial,
        &stored.labels,
        &stored.channel_names,
        &true_soz,
        mode,
    )?;
    let classified = classify_topk(&scores, k)?;
    write_scores_csv(&out.join("scores.csv"), &classified)?;

    let predicted: Vec<bool> = classified.iter().map(|e| e.predicted_soz).collect();
    let truth: Vec<bool> = classified.iter().map(|e| e.true_soz).collect();
    let metrics = per_class_metrics(&predicted, &truth)?;
    eprintln!(
        "analyze: top-{k} by {mode}: class0 {:.3}, class1 {:.3}, total {:.3}",
        metrics.class0_accuracy, metrics.class1_accuracy, metrics.total_accuracy
    );
    let id = args.id.clone().unwrap_or_else(|| {
        args.learn_out
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("run")
            .to_owned()
    });
    write_metrics_csv(&out.join("metrics.csv"), &[(id, metrics)])?;

    let dominance = window_dominance(
        &stored.spatial,
        &stored.channel_names,
        &true_soz,
        top_fraction,
        normalization,
    )?;
    write_dominance_csv(&out.join("dominance.csv"), &stored.labels, &dominance)?;

    match regime_contrast(&stored.temporal, &stored.labels) {
        Ok((within, across)) => {
            eprintln!("analyze: temporal contrast within {within:.4e} vs across {across:.4e}");
            write_contrast_csv(&out.join("contrast.csv"), within, across)?;
        }
        Err(e) => eprintln!("note: skipping temporal contrast ({e})"),
    }

    match mean_graph_contrast(&stored.spatial, &stored.labels) {
        Ok(contrast) => {
            write_laplacian_csv(&out.join("pre_mean.csv"), &contrast.pre_mean, &stored.channel_names)?;
            write_laplacian_csv(&out.join("post_mean.csv"), &contrast.post_mean, &stored.channel_names)?;
            let pre_w = contrast.pre_mean.edge_weights();
            let post_w = contrast.post_mean.edge_weights();
            let diff: Vec<f64> = post_w
                .weights()
                .iter()
                .zip(pre_w.weights())
                .map(|(p, q)| p - q)
                .collect();
            write_edge_list_csv(&out.join("difference.csv"), contrast.pre_mean.n_nodes(), &diff)?;
        }
        Err(e) => eprintln!("note: skipping pre/post mean contrast ({e})"),
    }

    manifest
        .param("learn_out", args.learn_out.display())
        .param("mode", mode)
        .param("k", k)
        .param_float("top_fraction", top_fraction)
        .param(
            "dominance_normalization",
            match normalization {
                DominanceNormalization::GroupSize => "group",
                DominanceNormalization::TopSize => "top",
            },
        );
    manifest.write(&out)?;
    Ok(())
}

// ---------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------

fn metrics_path(input: &Path) -> PathBuf {
    if input.is_dir() {
        input.join("metrics.csv")
    } else {
        input.to_path_buf()
    }
}

pub fn cmd_compare(cli: &Cli, args: &CompareArgs) -> Result<(), CliError> {
    let out = out_dir(cli)?;
    let mut manifest = Manifest::new("compare");
    let path_a = metrics_path(&args.a);
    let path_b = metrics_path(&args.b);
    manifest.input("metrics_a", &path_a)?;
    manifest.input("metrics_b", &path_b)?;

    let rows_a = read_metrics_csv(&path_a)?;
    let rows_b = read_metrics_csv(&path_b)?;
    let mut by_id_b = std::collections::HashMap::new();
    for (id, m) in &rows_b {
        if by_id_b.insert(id.clone(), m.clone()).is_some() {
            return Err(CliError::validation(format!(
                "duplicate recording id '{id}' in {}",
                path_b.display()
            )));
        }
    }
    let mut paired_a = Vec::new();
    let mut paired_b = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (id, m) in &rows_a {
        if !seen.insert(id.clone()) {
            return Err(CliError::validation(format!(
                "duplicate recording id '{id}' in {}",
                path_a.display()
            )));
        }
        if let Some(other) = by_id_b.get(id) {
            paired_a.push(m.clone());
            paired_b.push(other.clone());
        }
    }
    eprintln!(
        "compare: {} paired recordings ({} in A, {} in B)",
        paired_a.len(),
        rows_a.len(),
        rows_b.len()
    );
    let comparison = compare_methods(&paired_a, &paired_b)?;

    let mean = |rows: &[ClassMetrics], pick: fn(&ClassMetrics) -> f64| -> f64 {
        rows.iter().map(pick).sum::<f64>() / rows.len() as f64
    };
    let mut report = KvDocument::new();
    report
        .set("compare", "n_pairs", comparison.n_pairs.to_string())
        .set("compare", "p_class0", io::format_float(comparison.p_class0))
        .set("compare", "p_class1", io::format_float(comparison.p_class1))
        .set("compare", "p_total", io::format_float(comparison.p_total))
        .set("compare", "mean_total_a", io::format_float(mean(&paired_a, |m| m.total_accuracy)))
        .set("compare", "mean_total_b", io::format_float(mean(&paired_b, |m| m.total_accuracy)));
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| out.join("comparison.txt"));
    report.save(&report_path)?;
    eprintln!(
        "compare: p_total = {:.4e} -> {}",
        comparison.p_total,
        report_path.display()
    );

    manifest
        .param("a", args.a.display())
        .param("b", args.b.display())
        .param("n_pairs", comparison.n_pairs);
    manifest.write(&out)?;
    Ok(())
}

// ---------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(args) => cmd_synth(cli, args),
        Command::Learn(args) => cmd_learn(cli, args),
        Command::Baseline(args) => cmd_baseline(cli, args),
        Command::Analyze(args) => cmd_analyze(cli, args),
        Command::Compare(args) => cmd_compare(cli, args),
    }
}
