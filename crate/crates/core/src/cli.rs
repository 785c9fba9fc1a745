//! Command-line front end.
//!
//! Exit status: 0 when every requested certificate passes, 1 on a certificate
//! or construction failure, 2 on invalid input, 3 on I/O errors.

use std::f64::consts::LN_2;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::carpet::{self, box_count, build_ifs, chaos_game, rasterize_with_cap};
use crate::constructor::{synthesize, AlphabetStrategy, Construction, ConstructionOptions};
use crate::entropy::curvature;
use crate::error::CarpetError;
use crate::maximizer::{self, global_maxima, sample_objective, verify_gap_nonpositive};
use crate::report::{self, to_json};

#[derive(Debug, Parser)]
#[command(name = "glcarpet", version, about = "Gatzouras-Lalley carpets with two measures of full dimension")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize carpet parameters from B and report feasibility.
    Construct {
        #[command(flatten)]
        construction: ConstructionArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the gap certificate and the algebraic identities.
    Verify {
        #[command(flatten)]
        construction: ConstructionArgs,
        /// Grid points for the scan of g on [0, 1].
        #[arg(long, default_value_t = 100_000)]
        gap_grid: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Certify the global maxima of the dimension objective.
    Maximize {
        #[command(flatten)]
        construction: ConstructionArgs,
        #[command(flatten)]
        tolerances: ToleranceArgs,
        /// Also write (x, f(x)) samples to this CSV file.
        #[arg(long)]
        samples_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Rasterize the depth-n approximation of the attractor.
    Render {
        #[command(flatten)]
        construction: ConstructionArgs,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 512)]
        height: usize,
        #[arg(long, value_enum, default_value_t = ImageFormat::Pgm)]
        format: ImageFormat,
        /// Maximum number of rectangles to enumerate.
        #[arg(long, default_value_t = carpet::DEFAULT_RECTANGLE_CAP)]
        cap: u64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Sample the attractor by the chaos game; writes x,y CSV.
    Sample {
        #[command(flatten)]
        construction: ConstructionArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Estimate the box-counting dimension of a point cloud.
    Boxdim {
        /// CSV of x,y points; when absent the carpet is sampled instead.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        construction: ConstructionArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = 1)]
        k_min: u32,
        #[arg(long, default_value_t = 10)]
        k_max: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reproduce the worked example and compare with its printed digits.
    Example1 {
        /// Also write the comparison as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyArg {
    #[value(alias = "paper-preset")]
    Paper,
    Minimal,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Pgm,
    Png,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureArg {
    /// Maximizing measure with the smaller row mass.
    Low,
    /// Maximizing measure with the larger row mass.
    High,
    /// Uniform weights on all maps.
    Uniform,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstructionArgs {
    /// Curvature coefficient B > 2; accepts decimals or tokens like `3log2`.
    #[arg(long = "b", value_parser = parse_b, default_value = "3log2")]
    pub b: BValue,
    /// Alphabet choice; `explicit` needs `--ell-a` and `--ell-b`.
    #[arg(long, visible_alias = "preset", value_enum, default_value_t = StrategyArg::Paper)]
    pub strategy: StrategyArg,
    /// Number of symbols in the lower row.
    #[arg(long, requires = "ell_b")]
    pub ell_a: Option<u64>,
    /// Number of symbols in the upper row.
    #[arg(long, requires = "ell_a")]
    pub ell_b: Option<u64>,
    /// Bisection tolerance for the argmax of rho.
    #[arg(long, default_value_t = 1e-12)]
    pub root_tol: f64,
    #[arg(long, default_value_t = 4096)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ToleranceArgs {
    /// Maxima within this much of the best value count as global.
    #[arg(long, default_value_t = maximizer::DEFAULT_VALUE_TOL)]
    pub value_tol: f64,
    /// Maxima closer than this are merged.
    #[arg(long, default_value_t = maximizer::DEFAULT_SEPARATION_TOL)]
    pub sep_tol: f64,
    /// Grid points for the scan of f.
    #[arg(long, default_value_t = maximizer::DEFAULT_GRID_POINTS)]
    pub scan_points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 100_000)]
    pub n_points: usize,
    #[arg(long, default_value_t = 100)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MeasureArg::Low)]
    pub measure: MeasureArg,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// A value of `B` together with the token it was parsed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BValue {
    pub value: f64,
    pub token: String,
}

/// Parses decimals and `c log n` tokens such as `3log2`, `log3` or `2.5ln2`.
pub fn parse_b(token: &str) -> Result<BValue, String> {
    let t = token.trim().to_ascii_lowercase();
    let value = if let Some((coef, arg)) = t.split_once("log").or_else(|| t.split_once("ln")) {
        let coef = match coef.trim().trim_end_matches('*') {
            "" => 1.0,
            c => c.parse::<f64>().map_err(|e| format!("bad coefficient '{c}': {e}"))?,
        };
        let arg = arg.trim().trim_start_matches('(').trim_end_matches(')');
        let arg = arg.parse::<f64>().map_err(|e| format!("bad log argument '{arg}': {e}"))?;
        if !(arg > 0.0) {
            return Err(format!("log argument must be positive, got {arg}"));
        }
        coef * arg.ln()
    } else {
        t.parse::<f64>().map_err(|e| format!("bad number '{token}': {e}"))?
    };
    if !value.is_finite() {
        return Err(format!("B must be finite, got {token}"));
    }
    Ok(BValue {
        value,
        token: token.trim().to_string(),
    })
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Carpet(#[from] CarpetError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Carpet(e) => match e {
                CarpetError::Construction(_)
                | CarpetError::DegenerateDenominator(_)
                | CarpetError::Geometry(_) => 1,
                _ => 2,
            },
            CliError::Io { .. } => 3,
            CliError::Serialize(_) => 3,
        }
    }
}

/// Whether every certificate requested by a run passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
        }
    }
}

impl ConstructionArgs {
    fn options(&self) -> Result<ConstructionOptions, CliError> {
        let alphabet_strategy = match (self.strategy, self.ell_a, self.ell_b) {
            (StrategyArg::Explicit, Some(ell_a), Some(ell_b)) => AlphabetStrategy::Explicit { ell_a, ell_b },
            (StrategyArg::Explicit, _, _) => {
                return Err(CliError::Usage("--strategy explicit requires --ell-a and --ell-b".into()))
            }
            (_, Some(_), _) | (_, _, Some(_)) => {
                return Err(CliError::Usage("--ell-a/--ell-b are only used with --strategy explicit".into()))
            }
            (StrategyArg::Paper, ..) => AlphabetStrategy::PaperPreset,
            (StrategyArg::Minimal, ..) => AlphabetStrategy::Minimal,
        };
        let opts = ConstructionOptions {
            alphabet_strategy,
            root_tolerance: self.root_tol,
            grid_points: self.grid_points,
        };
        opts.validate()?;
        Ok(opts)
    }

    fn construct(&self) -> Result<Construction, CliError> {
        Ok(synthesize(self.b.value, &self.options()?)?)
    }
}

fn write_output(path: Option<&PathBuf>, contents: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(contents).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

fn measure_weights(c: &Construction, measure: MeasureArg) -> Result<Vec<f64>, CliError> {
    let x = match measure {
        MeasureArg::Uniform => c.spec.ell_a as f64 / (c.spec.ell_a + c.spec.ell_b) as f64,
        MeasureArg::Low | MeasureArg::High => {
            let r = maximizer::global_maxima_default(&c.spec)?;
            let pick = match measure {
                MeasureArg::Low => r.maxima.first(),
                _ => r.maxima.last(),
            };
            pick.map(|m| m.x)
                .ok_or_else(|| CliError::Carpet(CarpetError::Construction("no maximum found".into())))?
        }
    };
    Ok(carpet::uniform_conditional_weights(&c.spec, x)?)
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Construct { construction, output } => {
            let c = construction.construct()?;
            let doc = json!({
                "command": "construct",
                "input": construction,
                "spec": c.spec,
                "constants": c.constants,
                "rho_argmax": c.rho_argmax,
                "feasibility": c.feasibility,
            });
            write_output(output.output.as_ref(), to_json(&doc)?.as_bytes())?;
            Ok(Outcome::from_bool(c.feasibility.all_pass))
        }
        Command::Verify {
            construction,
            gap_grid,
            output,
        } => {
            let c = construction.construct()?;
            let gap = verify_gap_nonpositive(&c.constants, *gap_grid)?;
            let residuals = c.constants.identity_residuals();
            let prod = c.constants.product_coefficients();
            let maj = c.constants.majorant_coefficients();
            let poly_residuals: Vec<f64> = prod.iter().zip(&maj).map(|(p, m)| p - m).collect();
            let identities_ok = residuals.iter().chain(&poly_residuals).all(|r| r.abs() <= 1e-12);
            let b = c.constants.b_param;
            let curvature_ok = curvature(-4.0, 0.0) == 4.0 && curvature(-2.0 * b, 0.0) == 2.0 * b && 2.0 * b > 4.0;
            let doc = json!({
                "command": "verify",
                "input": construction,
                "gap_grid": gap_grid,
                "constants": c.constants,
                "gap_certificate": gap,
                "identities": {
                    "uv_minus_b": residuals[0],
                    "mv_minus_u_minus_b": residuals[1],
                    "m_minus_a_plus_b_over_4": residuals[2],
                    "polynomial_coefficient_residuals": poly_residuals,
                    "tolerance": 1e-12,
                    "passed": identities_ok,
                },
                "curvature": {
                    "entropy_at_half": curvature(-4.0, 0.0),
                    "majorant_at_half": curvature(-2.0 * b, 0.0),
                    "majorant_exceeds_entropy": curvature_ok,
                },
                "passed": gap.passed && identities_ok && curvature_ok,
            });
            write_output(output.output.as_ref(), to_json(&doc)?.as_bytes())?;
            Ok(Outcome::from_bool(gap.passed && identities_ok && curvature_ok))
        }
        Command::Maximize {
            construction,
            tolerances,
            samples_csv,
            samples,
            output,
        } => {
            let c = construction.construct()?;
            let r = global_maxima(&c.spec, tolerances.value_tol, tolerances.sep_tol, tolerances.scan_points)?;
            let doc = json!({
                "command": "maximize",
                "input": construction,
                "tolerances": tolerances,
                "spec": c.spec,
                "report": r,
                "expected_value": c.constants.m_param + (c.spec.ell_b as f64).ln() / c.spec.lambda,
            });
            write_output(output.output.as_ref(), to_json(&doc)?.as_bytes())?;
            if let Some(path) = samples_csv {
                let s = sample_objective(&c.spec, *samples)?;
                write_output(Some(path), report::samples_csv(&s).as_bytes())?;
            }
            Ok(Outcome::from_bool(r.is_non_unique()))
        }
        Command::Render {
            construction,
            depth,
            width,
            height,
            format,
            cap,
            output,
        } => {
            let c = construction.construct()?;
            let ifs = build_ifs(&c.spec)?;
            let raster = rasterize_with_cap(&ifs, *depth, *width, *height, *cap)?;
            match format {
                ImageFormat::Pgm => write_output(Some(output), raster.to_pgm().as_bytes())?,
                ImageFormat::Png => raster
                    .to_gray_image()
                    .save_with_format(output, image::ImageFormat::Png)
                    .map_err(|e| CliError::Io {
                        path: output.display().to_string(),
                        source: std::io::Error::other(e),
                    })?,
            }
            Ok(Outcome::Pass)
        }
        Command::Sample {
            construction,
            sampling,
            output,
        } => {
            let c = construction.construct()?;
            let ifs = build_ifs(&c.spec)?;
            let w = measure_weights(&c, sampling.measure)?;
            let pts = chaos_game(&ifs, &w, sampling.n_points, sampling.burn_in, sampling.seed)?;
            write_output(output.output.as_ref(), report::points_csv(&pts).as_bytes())?;
            Ok(Outcome::Pass)
        }
        Command::Boxdim {
            input,
            construction,
            sampling,
            k_min,
            k_max,
            output,
        } => {
            let (pts, source) = match input {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                    let pts = report::parse_points_csv(&text).map_err(CliError::Usage)?;
                    (pts, json!({ "file": path.display().to_string() }))
                }
                None => {
                    let c = construction.construct()?;
                    let ifs = build_ifs(&c.spec)?;
                    let w = measure_weights(&c, sampling.measure)?;
                    let pts = chaos_game(&ifs, &w, sampling.n_points, sampling.burn_in, sampling.seed)?;
                    (pts, json!({ "construction": construction, "sampling": sampling }))
                }
            };
            let r = box_count(&pts, *k_min, *k_max)?;
            let doc = json!({
                "command": "boxdim",
                "input": source,
                "k_min": k_min,
                "k_max": k_max,
                "report": r,
            });
            write_output(output.output.as_ref(), to_json(&doc)?.as_bytes())?;
            Ok(Outcome::Pass)
        }
        Command::Example1 { json } => {
            let (table, rows, ok) = example_one_table()?;
            write_output(None, table.as_bytes())?;
            if let Some(path) = json {
                let doc = json!({ "command": "example1", "rows": rows, "passed": ok });
                write_output(Some(path), to_json(&doc)?.as_bytes())?;
            }
            Ok(Outcome::from_bool(ok))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub computed: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Printed digits of the worked example: `(name, value)`.
pub const EXAMPLE_ONE_PRINTED: [(&str, f64); 5] = [
    ("A", 0.69427643),
    ("U", 0.16182292),
    ("V", 12.8501046),
    ("psi_a", 13.8501046),
    ("lambda", 30.9636922),
];

/// Runs the worked example (`B = 3 log 2`, 150 + 1 maps) and tabulates it.
pub fn example_one_table() -> Result<(String, Vec<ComparisonRow>, bool), CliError> {
    let b = 3.0 * LN_2;
    let c = synthesize(b, &ConstructionOptions::default())?;
    let row = |quantity: &str, computed: f64, reference: f64, tolerance: f64| {
        let abs_error = (computed - reference).abs();
        ComparisonRow {
            quantity: quantity.to_string(),
            computed,
            reference,
            abs_error,
            tolerance,
            passed: abs_error <= tolerance,
        }
    };
    let computed = [
        c.constants.a_param,
        c.constants.u_param,
        c.constants.v_param,
        c.spec.psi_a,
        c.spec.lambda,
    ];
    let mut rows: Vec<ComparisonRow> = EXAMPLE_ONE_PRINTED
        .iter()
        .zip(computed)
        .map(|((name, printed), value)| row(name, value, *printed, 5e-7))
        .collect();
    rows.push(row(
        "A vs log3 - (7/12)log2",
        c.constants.a_param,
        3f64.ln() - 7.0 / 12.0 * LN_2,
        1e-12,
    ));
    rows.push(row("rho argmax", c.rho_argmax, 1.0 / 3.0, 1e-9));

    let m_printed = 0.69427643 - b / 4.0;
    let r = maximizer::global_maxima_default(&c.spec)?;
    rows.push(row("maxima count", r.certified_count as f64, 2.0, 0.0));
    if let [lo, hi] = r.maxima[..] {
        rows.push(row("maximizer 1", lo.x, 1.0 / 3.0, 1e-6));
        rows.push(row("maximizer 2", hi.x, 2.0 / 3.0, 1e-6));
        rows.push(row("f(x1) - f(x2)", lo.value - hi.value, 0.0, 1e-9));
    }
    rows.push(row("max f vs A - B/4", r.global_value, m_printed, 1e-8));
    let gap = verify_gap_nonpositive(&c.constants, 100_000)?;
    rows.push(row("gap certificate roots", gap.roots.len() as f64, 2.0, 0.0));
    rows.push(row("max gap (<= 1e-10)", gap.max_gap.max(0.0), 0.0, 1e-10));
    rows.push(row(
        "feasibility checks passed",
        if c.feasibility.all_pass { 1.0 } else { 0.0 },
        1.0,
        0.0,
    ));

    let ok = rows.iter().all(|r| r.passed);
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:<26} {:>24} {:>24} {:>10} {:>8}  status",
        "quantity", "computed", "reference", "|error|", "tol"
    );
    for r in &rows {
        let _ = writeln!(
            table,
            "{:<26} {:>24.16e} {:>24.16e} {:>10.2e} {:>8.0e}  {}",
            r.quantity,
            r.computed,
            r.reference,
            r.abs_error,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(table, "overall: {}", if ok { "PASS" } else { "FAIL" });
    Ok((table, rows, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_b_tokens() {
        assert_eq!(parse_b("3log2").unwrap().value, 3.0 * LN_2);
        assert_eq!(parse_b("3ln2").unwrap().value, 3.0 * LN_2);
        assert_eq!(parse_b("2.5").unwrap().value, 2.5);
        assert!((parse_b("log(10)").unwrap().value - 10f64.ln()).abs() < 1e-15);
        assert!(parse_b("abc").is_err());
        assert!(parse_b("3log0").is_err());
    }

    #[test]
    fn explicit_strategy_needs_alphabet() {
        let cli = Cli::try_parse_from(["glcarpet", "construct", "--strategy", "explicit"]).unwrap();
        let Command::Construct { construction, .. } = &cli.command else {
            unreachable!()
        };
        assert!(matches!(construction.options(), Err(CliError::Usage(_))));
    }

    #[test]
    fn example_one_table_passes() {
        let (table, rows, ok) = example_one_table().unwrap();
        assert!(ok, "{table}");
        assert!(rows.len() >= 5);
        assert!(table.contains("overall: PASS"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Carpet(CarpetError::CurvatureConditionViolated { b: 1.0 }).exit_code(), 2);
        assert_eq!(CliError::Carpet(CarpetError::Construction("x".into())).exit_code(), 1);
        assert_eq!(
            CliError::Io {
                path: "p".into(),
                source: std::io::Error::other("x")
            }
            .exit_code(),
            3
        );
    }
}
