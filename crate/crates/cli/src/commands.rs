use std::fmt;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};
use rayon::prelude::*;

use mtsfm::design::table1_rho_norm;
use mtsfm::eoa::eoa_closed_form;
use mtsfm::export::{self, Metrics, ResultDocument, Table1Row, Table2Row};
use mtsfm::{
    ambiguity, analyze, eoa_contour, lfm_equivalent_target, max_rho_coefficients, minimize_isl,
    table1_seeds, IslProblem, IslResult, WaveformSpec,
};

use crate::manifest::RunManifest;
use crate::{AfArgs, AnalyzeArgs, Cli, Command, DesignArgs, TablesArgs};

const WAVEFORM_NAMES: [&str; 4] = ["I", "II", "III", "IV"];

#[derive(Debug)]
pub struct CliError {
    code: u8,
    source: anyhow::Error,
}

impl CliError {
    pub fn code(&self) -> u8 {
        self.code
    }

    fn config(source: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 2,
            source: source.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

impl From<mtsfm::Error> for CliError {
    fn from(e: mtsfm::Error) -> Self {
        use mtsfm::Error::*;
        let code = match &e {
            NoMainlobeNull | DegenerateEllipse(_) => 3,
            Domain(_) | InvalidSpec(_) | InfeasibleConstraint(_) | InvalidProblem(_) | Json(_) => 2,
            _ => 1,
        };
        Self {
            code,
            source: e.into(),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(source: anyhow::Error) -> Self {
        Self { code: 1, source }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Output files of one command, recorded relative to the output directory.
struct Outputs<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn path(&mut self, name: &str) -> std::path::PathBuf {
        self.names.push(name.to_owned());
        self.dir.join(name)
    }

    /// Re-reads every declared file through its schema.
    fn validate(&self) -> Result<()> {
        for name in &self.names {
            let path = self.dir.join(name);
            if name.ends_with(".csv") {
                let (header, rows) = export::read_csv(&path)?;
                if header.is_empty() || rows.is_empty() {
                    return Err(anyhow!("{name} has no data rows").into());
                }
            } else {
                export::read_json::<serde_json::Value>(&path)?;
            }
        }
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))
        .map_err(CliError::config)?;
    let mut outputs = Outputs {
        dir: &cli.out,
        names: Vec::new(),
    };
    let (name, rng_seed, status) = match &cli.command {
        Command::Analyze(args) => ("analyze", None, cmd_analyze(cli, args, &mut outputs)),
        Command::Af(args) => ("af", None, cmd_af(cli, args, &mut outputs)),
        Command::Figure1 => ("figure1", None, cmd_figure1(&mut outputs)),
        Command::DesignRho(args) => ("design-rho", None, cmd_design_rho(cli, args, &mut outputs)),
        Command::Optimize => {
            let seed = load_problem(cli).map(|p| p.rng_seed).ok();
            ("optimize", seed, cmd_optimize(cli, &mut outputs))
        }
        Command::Tables(args) => (
            "tables",
            Some(cli.seed.unwrap_or(0)),
            cmd_tables(cli, args, &mut outputs),
        ),
    };
    // analysis failures leave nothing worth recording
    if outputs.names.is_empty() {
        return status;
    }
    outputs.validate()?;
    RunManifest {
        command: name.into(),
        config: cli.config.clone(),
        out: cli.out.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        rng_seed,
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: outputs.names,
    }
    .write(&cli.out)?;
    status
}

fn read_config<T: for<'de> serde::Deserialize<'de>>(cli: &Cli) -> Result<T> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config(anyhow!("--config is required for this command")))?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::config)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(CliError::config)
}

fn with_oversample(cli: &Cli, spec: WaveformSpec) -> Result<WaveformSpec> {
    match cli.oversample {
        Some(o) => Ok(WaveformSpec::with_oversample(
            spec.duration(),
            spec.coeffs().clone(),
            o,
        )?),
        None => Ok(spec),
    }
}

fn load_spec(cli: &Cli) -> Result<WaveformSpec> {
    let spec = read_config(cli)?;
    with_oversample(cli, spec)
}

fn load_problem(cli: &Cli) -> Result<IslProblem> {
    let mut problem: IslProblem = read_config(cli)?;
    problem.seed = with_oversample(cli, problem.seed)?;
    if let Some(seed) = cli.seed {
        problem.rng_seed = seed;
    }
    Ok(problem)
}

fn linspace(span: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n)
            .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs, out: &mut Outputs) -> Result<()> {
    let spec = load_spec(cli)?;
    let w = spec.synthesize();
    let report = analyze(&w)?;
    let eoa = eoa_closed_form(spec.coeffs(), spec.duration());
    let af = args
        .doppler_span
        .map(|span| {
            let n = w.len() as isize;
            let delays: Vec<f64> = (-(n - 1)..n).map(|k| k as f64 * w.dt()).collect();
            ambiguity(&w, &delays, &linspace(span, args.doppler_points))
        })
        .transpose()?;

    export::write_acf_csv(&out.path("acf.csv"), &report)?;
    export::write_json(&out.path("eoa.json"), &eoa)?;
    export::write_json(&out.path("metrics.json"), &Metrics::from_report(&report))?;
    if let Some(grid) = af {
        export::write_af_csv(&out.path("af.csv"), &grid)?;
    }
    Ok(())
}

fn cmd_af(cli: &Cli, args: &AfArgs, out: &mut Outputs) -> Result<()> {
    let spec = load_spec(cli)?;
    let w = spec.synthesize();
    let eoa = eoa_closed_form(spec.coeffs(), spec.duration());
    let contour = eoa_contour(&eoa, args.contour_level, 361)?;
    let delays = linspace(
        args.delay_span.unwrap_or(spec.duration()),
        args.delay_points,
    );
    let span = args
        .doppler_span
        .unwrap_or(0.5 * spec.coeffs().frequency_span().max(1.0 / spec.duration()));
    let grid = ambiguity(&w, &delays, &linspace(span, args.doppler_points))?;

    export::write_af_csv(&out.path("af.csv"), &grid)?;
    export::write_json(&out.path("eoa.json"), &eoa)?;
    export::write_contour_csv(&out.path("contour.csv"), &contour)?;
    Ok(())
}

fn cmd_figure1(out: &mut Outputs) -> Result<()> {
    let paths = export::write_figure1(out.dir, &mtsfm::design::figure1())?;
    for p in paths {
        out.names
            .push(p.file_name().unwrap().to_string_lossy().into_owned());
    }
    Ok(())
}

fn cmd_design_rho(cli: &Cli, args: &DesignArgs, out: &mut Outputs) -> Result<()> {
    let target = lfm_equivalent_target(args.time_bandwidth, args.duration)?
        .with_harmonics(args.harmonics)?;
    let spec = with_oversample(
        cli,
        WaveformSpec::new(target.duration, max_rho_coefficients(&target))?,
    )?;
    let eoa = eoa_closed_form(spec.coeffs(), spec.duration());
    export::write_json(&out.path("spec.json"), &spec)?;
    export::write_json(&out.path("eoa.json"), &eoa)?;
    Ok(())
}

fn budget_check(r: &IslResult) -> Result<()> {
    if r.budget_exhausted && !r.improved {
        return Err(CliError {
            code: 4,
            source: anyhow!(
                "evaluation budget exhausted after {} evaluations without improvement",
                r.evaluations
            ),
        });
    }
    Ok(())
}

fn cmd_optimize(cli: &Cli, out: &mut Outputs) -> Result<()> {
    let problem = load_problem(cli)?;
    let result = minimize_isl(&problem)?;
    export::write_json(&out.path("result.json"), &ResultDocument::from(&result))?;
    export::write_json(&out.path("spec.json"), &result.spec)?;
    export::write_acf_csv(&out.path("acf_initial.csv"), &result.initial)?;
    export::write_acf_csv(&out.path("acf_optimized.csv"), &result.report)?;
    budget_check(&result)
}

fn cmd_tables(cli: &Cli, args: &TablesArgs, out: &mut Outputs) -> Result<()> {
    let target = lfm_equivalent_target(args.time_bandwidth, args.duration)?;
    let seeds = table1_seeds(&target);

    let table1: Vec<Table1Row> = WAVEFORM_NAMES
        .iter()
        .zip(&seeds)
        .map(|(name, c)| {
            let n = target.normalize(c.sine_terms());
            Table1Row {
                waveform: (*name).into(),
                c1: n[0],
                c2: n[1],
                rho_norm: table1_rho_norm(n[0], n[1]),
            }
        })
        .collect();
    export::write_table1(&out.path("table1.csv"), &table1)?;

    let runs: Vec<Result<IslResult>> = seeds
        .par_iter()
        .map(|coeffs| {
            let seed = with_oversample(cli, WaveformSpec::new(target.duration, coeffs.clone())?)?;
            let mut problem = IslProblem::new(seed);
            problem.rng_seed = cli.seed.unwrap_or(0);
            if let Some(n) = args.max_evals {
                problem.max_evals = n;
            }
            let result = minimize_isl(&problem)?;
            budget_check(&result)?;
            Ok(result)
        })
        .collect();

    let mut table2 = Vec::new();
    let mut failure = None;
    for (name, run) in WAVEFORM_NAMES.iter().zip(runs) {
        match run {
            Ok(r) => {
                export::write_json(
                    &out.path(&format!("result_{name}.json")),
                    &ResultDocument::from(&r),
                )?;
                table2.push(Table2Row::from_result(name, &r));
            }
            Err(e) => {
                eprintln!("mtsfm: waveform {name}: {e}");
                failure.get_or_insert(e);
            }
        }
    }
    if !table2.is_empty() {
        export::write_table2(&out.path("table2.csv"), &table2)?;
    }
    failure.map_or(Ok(()), Err)
}
