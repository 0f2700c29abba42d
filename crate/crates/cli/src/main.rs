mod explain;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use sympursuit::gfunc::{meijer_g, meijer_g_contour, Config, ContourConfig, EvalPolicy, GfuncError, MeijerGParams};
use sympursuit::interpret::{fmt_sig, to_expression};
use sympursuit::io::{
    fit_scaling, load_csv, load_model, mse, r2, save_model, write_csv, IoError, ModelFile, RawMatrix,
    ScaledBlackBox, ScalingSpec, SubprocessBlackBox,
};
use sympursuit::pursuit::{predict, symbolic_pursuit, BlackBox, FitConfig, PursuitError, SampleSet};

#[derive(Parser)]
#[command(name = "sympursuit", version, about = "Symbolic surrogates for black-box regressors")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file; the last column holds labels where labels are needed.
    #[arg(long)]
    data: PathBuf,
    /// Treat the first row as a header (auto-detected by default).
    #[arg(long, conflicts_with = "no_header")]
    header: bool,
    #[arg(long)]
    no_header: bool,
}

impl DataArgs {
    fn load(&self) -> Result<RawMatrix, Failure> {
        let flag = match (self.header, self.no_header) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        };
        load_csv(&self.data, flag).map_err(|e| Failure::from(e).at(&self.data))
    }
}

#[derive(Args)]
struct BlackBoxArgs {
    /// Command serving the black box over the line protocol.
    #[arg(long)]
    blackbox: Option<String>,
    /// Seconds to wait for each reply line.
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
}

impl BlackBoxArgs {
    fn spawn(&self) -> Result<Option<SubprocessBlackBox>, Failure> {
        let Some(cmd) = &self.blackbox else {
            return Ok(None);
        };
        if !(self.timeout > 0.0) {
            return Err(Failure::usage("--timeout must be > 0"));
        }
        let bb = SubprocessBlackBox::spawn(cmd, Duration::from_secs_f64(self.timeout))
            .map_err(|e| Failure::new(4, format!("cannot start black box: {e}")))?;
        Ok(Some(bb))
    }
}

#[derive(Args)]
struct GfunArgs {
    /// Orders "m,n,p,q".
    #[arg(long)]
    config: Config,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    b: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    z: f64,
    /// Inner exponent of the argument `s·z^r`.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Inner scale of the argument `s·z^r`.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Print every significant digit.
    #[arg(long)]
    full: bool,
}

impl GfunArgs {
    fn params(&self) -> Result<MeijerGParams, Failure> {
        let g = MeijerGParams::new(self.config, self.a.clone(), self.b.clone())
            .and_then(|g| g.with_transform(self.r, self.s))
            .map_err(|e| Failure::usage(e.to_string()))?;
        Ok(g)
    }

    fn print(&self, v: f64) {
        if self.full {
            println!("{v:e}");
        } else {
            println!("{}", fmt_sig(v, 6));
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a symbolic model to labeled data, optionally enlarged by black-box queries.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        bb: BlackBoxArgs,
        #[arg(long)]
        out: PathBuf,
        /// TOML file with fit settings; unspecified keys keep their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_terms: Option<usize>,
        #[arg(long)]
        loss_tol: Option<f64>,
        #[arg(long)]
        mixup_count: Option<usize>,
        /// Also write in-sample predictions (original label units).
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Predict with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Taylor expansions and feature importance at one point.
    Explain {
        #[arg(long)]
        model: PathBuf,
        /// 1-based data row to expand around (needs --data).
        #[arg(long, conflicts_with = "point", requires = "data")]
        at: Option<usize>,
        /// Point in original feature units, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MSE and R² against labels and, optionally, the black box.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        bb: BlackBoxArgs,
    },
    /// Evaluate a Meijer G-function with the residue series.
    Gfun(GfunArgs),
    /// Evaluate a Meijer G-function by numerical contour integration.
    Oracle(GfunArgs),
}

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure { code, msg: msg.into() }
    }

    fn usage(msg: impl Into<String>) -> Self {
        Failure::new(2, msg)
    }

    fn at(mut self, path: &Path) -> Self {
        self.msg = format!("{}: {}", path.display(), self.msg);
        self
    }
}

fn open_model(path: &Path) -> Result<ModelFile, Failure> {
    load_model(path).map_err(|e| Failure::from(e).at(path))
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = match e {
            IoError::Timeout(_) | IoError::MalformedReply { .. } | IoError::ChildExit(_) => 4,
            _ => 3,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<PursuitError> for Failure {
    fn from(e: PursuitError) -> Self {
        let code = match e {
            PursuitError::InvalidConfig(_) => 2,
            PursuitError::InvalidSamples(_) | PursuitError::DimensionMismatch { .. } | PursuitError::Parse { .. } => 3,
            PursuitError::BlackBox(_) => 4,
            _ => 5,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<GfuncError> for Failure {
    fn from(e: GfuncError) -> Self {
        Failure::new(5, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(3, e.to_string())
    }
}

fn scaled_rows(scaling: &ScalingSpec, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, Failure> {
    rows.iter()
        .map(|r| scaling.apply_features(r).map_err(Failure::from))
        .collect()
}

/// Feature columns of `m` for a model with `n_raw` features: a trailing
/// label column is ignored.
fn feature_rows(m: &RawMatrix, n_raw: usize) -> Result<Vec<Vec<f64>>, Failure> {
    match m.n_cols() {
        c if c == n_raw => Ok(m.rows.clone()),
        c if c == n_raw + 1 => Ok(m.split_labels().0),
        c => Err(Failure::new(3, format!("data has {c} columns, model expects {n_raw} features"))),
    }
}

fn labeled(m: &RawMatrix) -> Result<(Vec<Vec<f64>>, Vec<f64>), Failure> {
    if m.n_cols() < 2 {
        return Err(Failure::new(3, "labeled data needs at least one feature and a label column"));
    }
    Ok(m.split_labels())
}

fn write_predictions(path: &Path, values: &[f64]) -> Result<(), Failure> {
    let rows: Vec<Vec<f64>> = values.iter().map(|v| vec![*v]).collect();
    write_csv(File::create(path)?, Some(&["prediction".to_string()]), &rows)?;
    Ok(())
}

fn load_fit_config(path: Option<&Path>) -> Result<FitConfig, Failure> {
    let Some(p) = path else {
        return Ok(FitConfig::default());
    };
    let text = std::fs::read_to_string(p)?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
}

#[allow(clippy::too_many_arguments)]
fn run_fit(
    data: &DataArgs,
    bb: &BlackBoxArgs,
    out: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
    max_terms: Option<usize>,
    loss_tol: Option<f64>,
    mixup_count: Option<usize>,
    predictions: Option<&Path>,
) -> Result<(), Failure> {
    let mut cfg = load_fit_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(k) = max_terms {
        cfg.max_terms = k;
    }
    if let Some(t) = loss_tol {
        cfg.loss_tol = t;
    }
    if mixup_count.is_some() {
        cfg.mixup_count = mixup_count;
    }
    cfg.validate()?;

    let raw = data.load()?;
    let (x, y) = labeled(&raw)?;
    let mut scaling = fit_scaling(&x, Some(&y))?;
    if let Some(names) = &raw.names {
        scaling.names = scaling.kept.iter().map(|&j| names[j].clone()).collect();
    }
    let points = scaled_rows(&scaling, &x)?;
    let values: Vec<f64> = y.iter().map(|v| scaling.apply_label(*v)).collect();
    let samples = SampleSet::new(points, values)?;

    let mut child = bb.spawn()?;
    let (mut model, report) = match child.as_mut() {
        Some(c) => {
            let mut sb = ScaledBlackBox {
                inner: c,
                scaling: &scaling,
            };
            symbolic_pursuit(&samples, Some(&mut sb as &mut dyn BlackBox), &cfg)?
        }
        None => symbolic_pursuit(&samples, None, &cfg)?,
    };
    drop(child);
    model.feature_scaling = scaling.feature_pairs();

    println!("{:>4}  {:<9}  {:>13}  {:>6}  {:>7}", "term", "config", "loss", "iters", "restart");
    for (k, t) in report.terms.iter().enumerate() {
        println!(
            "{:>4}  {:<9}  {:>13.6e}  {:>6}  {:>7}",
            k + 1,
            t.config.to_string(),
            t.loss,
            t.iterations,
            t.restart
        );
    }
    let final_loss = report.trajectory.last().copied().unwrap_or(0.0);
    println!("terms: {}", model.terms.len());
    println!("final loss: {final_loss:.6e} (samples: {})", report.n_samples);
    println!("stopped: {}", report.stop_reason);
    print!("{}", display_part(&to_expression(&model).plain));

    if let Some(p) = predictions {
        let fitted = predict(&model, &samples.points[..x.len()], cfg.parallel)?;
        let orig: Vec<f64> = fitted.iter().map(|v| scaling.invert_label(*v)).collect();
        write_predictions(p, &orig)?;
    }
    save_model(
        out,
        &ModelFile {
            model,
            scaling,
            config: cfg,
            report: Some(report),
        },
    )?;
    Ok(())
}

/// The human-readable part of a plain expression, without the machine block.
fn display_part(plain: &str) -> &str {
    plain.split("#machine").next().unwrap_or(plain)
}

fn run_predict(model: &Path, data: &DataArgs, out: &Path) -> Result<(), Failure> {
    let mf = open_model(model)?;
    let raw = data.load()?;
    let rows = feature_rows(&raw, mf.scaling.n_raw)?;
    let pts = scaled_rows(&mf.scaling, &rows)?;
    let pred = predict(&mf.model, &pts, mf.config.parallel)?;
    let orig: Vec<f64> = pred.iter().map(|v| mf.scaling.invert_label(*v)).collect();
    write_predictions(out, &orig)?;
    println!("wrote {} predictions to {}", orig.len(), out.display());
    Ok(())
}

fn run_eval(model: &Path, data: &DataArgs, bb: &BlackBoxArgs) -> Result<(), Failure> {
    let mf = open_model(model)?;
    let s = &mf.scaling;
    let raw = data.load()?;
    let (x, y) = labeled(&raw)?;
    if x[0].len() != s.n_raw {
        return Err(Failure::new(3, format!("data has {} features, model expects {}", x[0].len(), s.n_raw)));
    }
    let pts = scaled_rows(s, &x)?;
    let pred = predict(&mf.model, &pts, mf.config.parallel)?;
    let labels: Vec<f64> = y.iter().map(|v| s.apply_label(*v)).collect();
    let pred_orig: Vec<f64> = pred.iter().map(|v| s.invert_label(*v)).collect();
    println!("rows: {}", y.len());
    println!("symbolic vs labels: mse {:.6e}  r2 {:.6}", mse(&pred, &labels), r2(&pred, &labels));
    println!("symbolic vs labels (original units): mse {:.6e}", mse(&pred_orig, &y));
    if let Some(mut child) = bb.spawn()? {
        let bb_raw = child.query(&x)?;
        let bb_scaled: Vec<f64> = bb_raw.iter().map(|v| s.apply_label(*v)).collect();
        println!(
            "black box vs labels: mse {:.6e}  r2 {:.6}",
            mse(&bb_scaled, &labels),
            r2(&bb_scaled, &labels)
        );
        println!(
            "symbolic vs black box: mse {:.6e}  r2 {:.6}",
            mse(&pred, &bb_scaled),
            r2(&pred, &bb_scaled)
        );
    }
    Ok(())
}

fn run_explain(
    model: &Path,
    at: Option<usize>,
    point: Option<&str>,
    data: Option<&Path>,
    order: u8,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let mf = open_model(model)?;
    let raw_point: Vec<f64> = match (at, point) {
        (Some(row), _) => {
            let path = data.expect("clap enforces --data");
            let m = load_csv(path, None).map_err(|e| Failure::from(e).at(path))?;
            let rows = feature_rows(&m, mf.scaling.n_raw)?;
            if row == 0 || row > rows.len() {
                return Err(Failure::usage(format!("--at {row} outside 1..={}", rows.len())));
            }
            rows[row - 1].clone()
        }
        (None, Some(p)) => p
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::usage(format!("--point: {e}")))?,
        (None, None) => return Err(Failure::usage("give --at ROW or --point")),
    };
    if raw_point.len() != mf.scaling.n_raw {
        return Err(Failure::usage(format!(
            "--point has {} values, model expects {}",
            raw_point.len(),
            mf.scaling.n_raw
        )));
    }
    let text = explain::report(&mf, &raw_point, order)?;
    match out {
        Some(p) => {
            File::create(p)?.write_all(text.as_bytes())?;
            println!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run_gfun(args: &GfunArgs, contour: bool) -> Result<(), Failure> {
    let g = args.params()?;
    let v = if contour {
        meijer_g_contour(&g, args.z, &ContourConfig::default())?
    } else {
        meijer_g(&g, args.z, &EvalPolicy::default())?
    };
    args.print(v);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.cmd {
        Cmd::Fit {
            data,
            bb,
            out,
            config,
            seed,
            max_terms,
            loss_tol,
            mixup_count,
            predictions,
        } => run_fit(
            data,
            bb,
            out,
            config.as_deref(),
            *seed,
            *max_terms,
            *loss_tol,
            *mixup_count,
            predictions.as_deref(),
        ),
        Cmd::Predict { model, data, out } => run_predict(model, data, out),
        Cmd::Explain {
            model,
            at,
            point,
            data,
            order,
            out,
        } => run_explain(model, *at, point.as_deref(), data.as_deref(), *order, out.as_deref()),
        Cmd::Eval { model, data, bb } => run_eval(model, data, bb),
        Cmd::Gfun(a) => run_gfun(a, false),
        Cmd::Oracle(a) => run_gfun(a, true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
