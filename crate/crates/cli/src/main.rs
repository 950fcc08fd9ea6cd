use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hardedge::asymptotics::{clt_prediction, CltVariant};
use hardedge::fredholm::log_fredholm_det_with;
use hardedge::harness::{
    asymptotic_value, run_compare, run_moments, run_selftest, write_compare, write_moments,
    ConfigLayer, ExperimentConfig, OutputFormat, Route, SelfTestOptions,
};
use hardedge::specfun::BarnesG;
use hardedge::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "hardedge",
    version,
    about = "Bessel point process: Fredholm numerics and large-r asymptotics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate log F_α(r x, s) by Fredholm determinant
    Det(Common),
    /// Evaluate the closed-form expansion with its breakdown
    Asymp(Common),
    /// Sweep r and compare numeric against asymptotic values
    Compare(Common),
    /// Counting statistics, numeric against predicted
    Moments(Common),
    /// Print the predicted CLT centering, scaling and covariance
    Clt {
        #[command(flatten)]
        common: Common,
        /// cumulative, increments or conditional
        #[arg(long, default_value = "cumulative")]
        variant: String,
    },
    /// Run the invariant suite
    Selftest {
        #[arg(long)]
        format: Option<String>,
        #[arg(long, hide = true)]
        perturb_barnes: Option<f64>,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Window thresholds, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    /// Thinning parameters, comma separated
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "u"
    )]
    s: Option<Vec<f64>>,
    /// Log-fugacities, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    u: Option<Vec<f64>>,
    #[arg(long, conflicts_with = "r_grid")]
    r: Option<f64>,
    /// start:stop:count[:geometric|linear]
    #[arg(long)]
    r_grid: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// Cap on quadrature nodes per window
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
    /// TOML file with the same keys; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved configuration and exit
    #[arg(long)]
    show_config: bool,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(p) => ConfigLayer::from_file(p)?,
            None => ConfigLayer::default(),
        };
        let flags = ConfigLayer {
            alpha: self.alpha,
            x: self.x.clone(),
            s: self.s.clone(),
            u: self.u.clone(),
            r: self.r,
            r_grid: self.r_grid.as_deref().map(str::parse).transpose()?,
            tol: self.tol,
            max_nodes: self.max_nodes,
            out: self.out.clone(),
            format: self.format.as_deref().map(str::parse).transpose()?,
            jobs: self.jobs,
        };
        ExperimentConfig::resolve([file, flags])
    }
}

fn sink(cfg: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn json_line(w: &mut dyn Write, v: &impl serde::Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, v).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

fn det(cfg: &ExperimentConfig) -> Result<i32> {
    let spec = cfg.spec()?;
    let s = cfg.thinning()?;
    let mut out = Vec::new();
    for r in cfg.r_grid.points() {
        out.push((r, log_fredholm_det_with(&spec, &s, r, &cfg.det_options())?));
    }
    let mut w = sink(cfg)?;
    match cfg.format {
        OutputFormat::Csv => {
            writeln!(w, "r,log_value,sign,nodes,est_error,precision_bits")?;
            for (r, d) in &out {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{},{},{:.16e},{}",
                    r, d.log_value, d.sign, d.nodes_per_interval, d.est_error, d.precision_bits
                )?;
            }
        }
        OutputFormat::Json => {
            let rows: Vec<_> = out
                .iter()
                .map(|(r, d)| {
                    serde_json::json!({
                        "r": r,
                        "log_value": d.log_value,
                        "sign": d.sign,
                        "nodes": d.nodes_per_interval,
                        "est_error": d.est_error,
                        "precision_bits": d.precision_bits,
                    })
                })
                .collect();
            json_line(&mut *w, &rows)?;
        }
    }
    w.flush()?;
    Ok(0)
}

fn asymp(cfg: &ExperimentConfig) -> Result<i32> {
    let spec = cfg.spec()?;
    let route = Route::select(cfg)?;
    if let Some(msg) = hardedge::asymptotics::separation_warning(&spec) {
        eprintln!("warning: {msg}");
    }
    let mut vals = Vec::new();
    for r in cfg.r_grid.points() {
        vals.push((r, asymptotic_value(&spec, &route, r)?));
    }
    let mut w = sink(cfg)?;
    match cfg.format {
        OutputFormat::Csv => {
            writeln!(
                w,
                "r,route,sqrt_r_term,log_r_term,bilinear_term,barnes_term,alpha_term,total"
            )?;
            for (r, v) in &vals {
                let parts = match &v.breakdown {
                    Some(b) => format!(
                        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                        b.sqrt_r_term, b.log_r_term, b.bilinear_term, b.barnes_term, b.alpha_term
                    ),
                    None => ",,,,".to_string(),
                };
                writeln!(w, "{:.16e},{},{},{:.16e}", r, v.route, parts, v.total)?;
            }
        }
        OutputFormat::Json => {
            let rows: Vec<_> = vals
                .iter()
                .map(|(r, v)| serde_json::json!({ "r": r, "value": v }))
                .collect();
            json_line(&mut *w, &rows)?;
        }
    }
    w.flush()?;
    Ok(0)
}

fn compare(cfg: &ExperimentConfig) -> Result<i32> {
    let report = run_compare(cfg)?;
    let mut w = sink(cfg)?;
    write_compare(&report, cfg.format, &mut *w)?;
    w.flush()?;
    if cfg.format == OutputFormat::Csv {
        match report.exponent {
            Some(e) => eprintln!("route {}: fitted decay exponent {e:.4}", report.route),
            None => eprintln!("route {}: decay exponent not available", report.route),
        }
    }
    Ok(0)
}

fn moments(cfg: &ExperimentConfig) -> Result<i32> {
    let report = run_moments(cfg)?;
    let mut w = sink(cfg)?;
    write_moments(&report, cfg.format, &mut *w)?;
    w.flush()?;
    if cfg.format == OutputFormat::Csv {
        for (j, slope) in report.interval_variance_slope.iter().enumerate() {
            if let Some(s) = slope {
                eprintln!("interval {}: variance slope in log r {s:.5}", j + 2);
            }
        }
    }
    Ok(0)
}

fn clt(cfg: &ExperimentConfig, variant: &str) -> Result<i32> {
    let variant: CltVariant = variant.parse()?;
    let spec = cfg.spec()?;
    let mut preds = Vec::new();
    for r in cfg.r_grid.points() {
        preds.push((r, clt_prediction(&spec, r, variant)?));
    }
    let mut w = sink(cfg)?;
    match cfg.format {
        OutputFormat::Csv => {
            if let Some((_, p)) = preds.first() {
                writeln!(w, "# covariance")?;
                for row in &p.covariance {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                    writeln!(w, "{}", cells.join(","))?;
                }
            }
            writeln!(w, "r,index,centering,scaling")?;
            for (r, p) in &preds {
                for (i, (c, s)) in p.centering.iter().zip(&p.scaling).enumerate() {
                    writeln!(w, "{:.16e},{},{:.16e},{:.16e}", r, i + 1, c, s)?;
                }
            }
        }
        OutputFormat::Json => {
            let rows: Vec<_> = preds
                .iter()
                .map(|(r, p)| serde_json::json!({ "r": r, "prediction": p }))
                .collect();
            json_line(&mut *w, &rows)?;
        }
    }
    w.flush()?;
    Ok(0)
}

fn selftest(format: Option<&str>, perturb: Option<f64>) -> Result<i32> {
    let format: OutputFormat = format.unwrap_or("csv").parse()?;
    let opts = SelfTestOptions {
        barnes: match perturb {
            Some(eps) => BarnesG::with_perturbed_coefficients(eps),
            None => BarnesG::new(),
        },
    };
    let report = run_selftest(&opts);
    let stdout = io::stdout();
    let mut w = stdout.lock();
    match format {
        OutputFormat::Csv => writeln!(w, "{report}")?,
        OutputFormat::Json => json_line(&mut w, &report)?,
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<i32> {
    if let Command::Selftest {
        format,
        perturb_barnes,
    } = &cli.command
    {
        return selftest(format.as_deref(), *perturb_barnes);
    }
    let (common, variant) = match &cli.command {
        Command::Det(c) | Command::Asymp(c) | Command::Compare(c) | Command::Moments(c) => {
            (c, None)
        }
        Command::Clt { common, variant } => (common, Some(variant.as_str())),
        Command::Selftest { .. } => unreachable!(),
    };
    let cfg = common.resolve()?;
    if common.show_config {
        print!("{}", cfg.to_toml());
        return Ok(0);
    }
    match &cli.command {
        Command::Det(_) => det(&cfg),
        Command::Asymp(_) => asymp(&cfg),
        Command::Compare(_) => compare(&cfg),
        Command::Moments(_) => moments(&cfg),
        Command::Clt { .. } => clt(&cfg, variant.unwrap_or("cumulative")),
        Command::Selftest { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
