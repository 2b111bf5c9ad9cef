//! Subcommand handlers. Each returns the files it wrote; errors carry their
//! exit code via [`PipelineError::exit_code`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use monoblade_core::config::ToolkitConfig;
use monoblade_core::io::{
    manifest_path, read_design, read_json, unix_now, write_design, write_json, write_trajectory_file, DesignFile,
    IoError, RunManifest, TOOLKIT_VERSION,
};
use monoblade_core::optimizer::{evaluate_objective, DesignVariant, VariantTag};
use monoblade_core::planform::ChordPolynomial;

use crate::pipeline::{self, ComparisonReport, PipelineError};
use crate::report;

pub const OUT_DIR_ENV: &str = "MONOBLADE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "monoblade", version, about = "Single-wing autorotating pod: planform design and descent simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimise one variant's chord planform (W4 is the constructed rectangle).
    Design(DesignArgs),
    /// Fly a design file and write its trajectory and steady-state summary.
    Simulate(SimulateArgs),
    /// Design and fly every variant; write the comparison table and plot data.
    Compare(CompareArgs),
    /// Render a comparison report, or a C_p sweep over tip-speed ratio for a design.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub variant: VariantTag,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output design file [default: design_<variant>.json in the output directory]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `optimizer.rng_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip optimisation and describe these six coefficients (a0..a5, metres).
    #[arg(long, value_delimiter = ',', num_args = 6)]
    pub coefficients: Option<Vec<f64>>,
    #[arg(long, env = OUT_DIR_ENV, hide_env_values = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub design: PathBuf,
    /// Config to fly under [default: the config embedded in the design file]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trajectory CSV; the summary goes next to it as `<stem>.summary.json`
    /// [default: trajectory_<variant>.csv in the output directory]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, hide_env_values = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "monoblade_out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run a single variant.
    #[arg(long)]
    pub variant_filter: Option<VariantTag>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A comparison `report.json` or a design file.
    pub input: PathBuf,
    /// Tip-speed ratios for the design-file sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,3,4")]
    pub lambda_max: Vec<f64>,
    /// Also write the rendered text here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ToolkitConfig, PipelineError> {
    let mut cfg = match path {
        Some(p) => ToolkitConfig::load(p)?,
        None => ToolkitConfig::default(),
    };
    if let Some(s) = seed {
        cfg.optimizer.rng_seed = s;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn default_out(dir: Option<&Path>, name: String) -> PathBuf {
    dir.map(|d| d.join(&name)).unwrap_or_else(|| PathBuf::from(name))
}

fn ensure_parent(path: &Path) -> Result<(), IoError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => {
            std::fs::create_dir_all(p).map_err(|source| IoError::Io { path: p.display().to_string(), source })
        }
        _ => Ok(()),
    }
}

fn display(paths: &[&Path]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

struct ManifestDraft<'a> {
    command: &'a str,
    cfg: &'a ToolkitConfig,
    variants: Vec<String>,
    inputs: Vec<String>,
    started: f64,
}

impl ManifestDraft<'_> {
    fn write(self, anchor: &Path, outputs: &[PathBuf]) -> Result<PathBuf, IoError> {
        let manifest = RunManifest {
            toolkit_version: TOOLKIT_VERSION.to_string(),
            command: self.command.to_string(),
            config_hash: self.cfg.hash(),
            variants: self.variants,
            inputs: self.inputs,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            rng_seed: self.cfg.optimizer.rng_seed,
            started_unix: self.started,
            finished_unix: unix_now(),
        };
        let path = manifest_path(anchor);
        write_json(&path, &manifest)?;
        Ok(path)
    }
}

pub fn cmd_design(args: &DesignArgs) -> Result<Vec<PathBuf>, PipelineError> {
    let started = unix_now();
    let cfg = load_config(args.config.as_deref(), args.seed)?;
    let design = match &args.coefficients {
        Some(c) => {
            let coeffs: [f64; 6] =
                c.as_slice().try_into().map_err(|_| PipelineError::Malformed("need six coefficients".into()))?;
            pipeline::describe_design(args.variant, ChordPolynomial::new(coeffs), None, &cfg)
        }
        None => pipeline::build_design(args.variant, &cfg)?,
    };
    let out = args.out.clone().unwrap_or_else(|| default_out(args.out_dir.as_deref(), format!("design_{}.json", args.variant)));
    ensure_parent(&out)?;
    write_design(&out, &design)?;
    let draft = ManifestDraft {
        command: "design",
        cfg: &cfg,
        variants: vec![args.variant.to_string()],
        inputs: args.config.iter().map(|p| p.display().to_string()).collect(),
        started,
    };
    let manifest = draft.write(&out, std::slice::from_ref(&out))?;
    Ok(vec![out, manifest])
}

pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<PathBuf>, PipelineError> {
    let started = unix_now();
    let design: DesignFile = read_design(&args.design)?;
    let cfg = match &args.config {
        Some(p) => ToolkitConfig::load(p)?,
        None => {
            design.config.validate()?;
            design.config
        }
    };
    let run = pipeline::simulate_design(&design, &cfg);
    let csv = args
        .out
        .clone()
        .unwrap_or_else(|| default_out(args.out_dir.as_deref(), format!("trajectory_{}.csv", design.variant)));
    ensure_parent(&csv)?;
    write_trajectory_file(&csv, &run.trajectory)?;
    let summary = summary_path(&csv);
    write_json(&summary, &run.summary)?;
    let mut inputs = display(&[&args.design]);
    inputs.extend(args.config.iter().map(|p| p.display().to_string()));
    let draft = ManifestDraft { command: "simulate", cfg: &cfg, variants: vec![design.variant.to_string()], inputs, started };
    let outputs = vec![csv.clone(), summary];
    let manifest = draft.write(&csv, &outputs)?;
    if let Some(e) = run.summary.error {
        return Err(PipelineError::SimulationAborted(e));
    }
    Ok(outputs.into_iter().chain([manifest]).collect())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Vec<PathBuf>, PipelineError> {
    let started = unix_now();
    let cfg = load_config(args.config.as_deref(), args.seed)?;
    let dir = &args.out;
    std::fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.display().to_string(), source })?;
    let cmp = pipeline::compare(&cfg, args.variant_filter);

    let mut outputs = Vec::new();
    for v in &cmp.report.variants {
        if let Some(d) = &v.design {
            let p = dir.join(format!("design_{}.json", v.tag));
            write_design(&p, d)?;
            outputs.push(p);
        }
    }
    for (tag, traj) in &cmp.trajectories {
        let p = dir.join(format!("trajectory_{tag}.csv"));
        write_trajectory_file(&p, traj)?;
        outputs.push(p);
    }
    outputs.extend(report::write_figures(dir, &cmp)?);
    let json = dir.join("report.json");
    write_json(&json, &cmp.report)?;
    let text = report::render_table(&cmp.report);
    let txt = dir.join("report.txt");
    std::fs::write(&txt, &text).map_err(|source| IoError::Io { path: txt.display().to_string(), source })?;
    print!("{text}");
    outputs.extend([json, txt]);

    let draft = ManifestDraft {
        command: "compare",
        cfg: &cfg,
        variants: cmp.report.variants.iter().map(|v| v.tag.to_string()).collect(),
        inputs: args.config.iter().map(|p| p.display().to_string()).collect(),
        started,
    };
    outputs.push(draft.write(dir, &outputs)?);
    if !cmp.report.variants.iter().any(|v| v.completed()) {
        return Err(PipelineError::AllFailed);
    }
    Ok(outputs)
}

/// `C_p` of a design (own setting, tip loss on) at each tip-speed ratio.
pub fn cp_sweep(design: &DesignFile, lambdas: &[f64]) -> Vec<(f64, Option<f64>, Option<f64>)> {
    lambdas
        .iter()
        .map(|&lam| {
            let mut cfg = design.config;
            cfg.flow.lambda_max = lam;
            let opt = cfg.optimization_config();
            let own = DesignVariant::new(design.variant);
            let tip = DesignVariant { use_tip_loss: true, ..own };
            let eval = |v: &DesignVariant| evaluate_objective(&design.coefficients, v, &opt).ok();
            (lam, eval(&own), eval(&tip))
        })
        .collect()
}

fn render_design(design: &DesignFile, lambdas: &[f64]) -> String {
    let mut out = format!(
        "{}  area {:.6} m^2  mass {:.5} kg  net moment {:.3e} N m\ncoefficients {:?}\n\n{:>10}  {:>12}  {:>12}\n",
        design.variant, design.area, design.mass, design.net_moment, design.coefficients.coeffs, "lambda_max", "C_p(own)", "C_p(tip)"
    );
    let f = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into());
    for (lam, own, tip) in cp_sweep(design, lambdas) {
        out.push_str(&format!("{lam:>10.4}  {:>12}  {:>12}\n", f(own), f(tip)));
    }
    out
}

pub fn cmd_report(args: &ReportArgs) -> Result<Vec<PathBuf>, PipelineError> {
    let text = if let Ok(report) = read_json::<ComparisonReport>(&args.input) {
        report::render_table(&report)
    } else {
        let design = read_design(&args.input)?;
        render_design(&design, &args.lambda_max)
    };
    print!("{text}");
    match &args.out {
        Some(p) => {
            ensure_parent(p)?;
            std::fs::write(p, &text).map_err(|source| IoError::Io { path: p.display().to_string(), source })?;
            Ok(vec![p.clone()])
        }
        None => Ok(Vec::new()),
    }
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, PipelineError> {
    match &cli.command {
        Command::Design(a) => cmd_design(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Report(a) => cmd_report(a),
    }
}
