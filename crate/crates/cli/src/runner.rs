//! File-producing entry points: `run`, `overlaps` and `sweep`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{error, info};
use ndarray::Array1;
use rayon::prelude::*;
use serde_json::json;

use gqas::hybrid::{HybridDensityMatrix, HybridPureState};
use gqas::linalg::{self, C64};
use gqas::overlap::{read_matrix, write_matrix, OverlapSet};

use crate::config::{BackendKind, ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::experiment::{self, InitialState, RunSummary, Table};

type Result<T> = std::result::Result<T, CliError>;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const BASIS_FILE: &str = "basis.txt";
pub const OVERLAP_DIR: &str = "overlaps";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SPECTRUM_FILE: &str = "e_spectrum.txt";
pub const ERRORS_FILE: &str = "overlap_errors.csv";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn csv_string(table: &Table) -> String {
    let mut out = table.header.join(",");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// One `re im` pair per line.
pub fn write_vector(path: &Path, v: &Array1<C64>) -> Result<()> {
    let mut text = String::new();
    for z in v {
        writeln!(text, "{:?} {:?}", z.re, z.im).expect("string write");
    }
    write_text(path, &text)
}

pub fn read_vector(path: &Path) -> Result<Array1<C64>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let parts: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| gqas::Error::Parse(format!("{}:{}: {e}", path.display(), k + 1)))?;
        if parts.len() != 2 {
            return Err(gqas::Error::Parse(format!("{}:{}: expected `re im`", path.display(), k + 1)).into());
        }
        out.push(C64::new(parts[0], parts[1]));
    }
    Ok(Array1::from(out))
}

/// Reads an initial state: a square matrix file for `β`, a vector file for `α`.
pub fn load_initial_state(cfg: &ExperimentConfig, path: &Path, basis_id: u64) -> Result<InitialState> {
    Ok(match cfg.experiment {
        ExperimentKind::OpenIsing | ExperimentKind::Gibbs => {
            InitialState::Density(HybridDensityMatrix::new(read_matrix(path)?, basis_id)?)
        }
        _ => InitialState::Pure(HybridPureState::new(read_vector(path)?, basis_id)),
    })
}

fn save_initial_state(dir: &Path, state: &InitialState) -> Result<PathBuf> {
    Ok(match state {
        InitialState::Density(beta) => {
            let p = dir.join("initial_beta.txt");
            write_matrix(&p, beta.beta())?;
            p
        }
        InitialState::Pure(alpha) => {
            let p = dir.join("initial_alpha.txt");
            write_vector(&p, alpha.alpha())?;
            p
        }
    })
}

fn spectrum_dump(set: &OverlapSet, dir: &Path) {
    let path = dir.join(SPECTRUM_FILE);
    match linalg::eigh(&set.e.view()) {
        Ok((w, _)) => {
            let text: String = w.iter().map(|l| format!("{l:?}\n")).collect();
            if let Err(e) = write_text(&path, &text) {
                error!("could not write the E spectrum: {e}");
            } else {
                error!("E spectrum written to {}", path.display());
            }
        }
        Err(e) => error!("E spectrum unavailable: {e}"),
    }
}

/// Options beyond the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Reuse a stored overlap set instead of measuring.
    pub overlaps: Option<PathBuf>,
    /// Start from a stored initial state.
    pub initial: Option<PathBuf>,
}

/// Everything a run produced, for callers that want to inspect it.
pub struct RunArtifacts {
    pub table: Option<Table>,
    pub summary: Option<RunSummary>,
    pub overlaps: OverlapSet,
}

/// Runs the three steps and writes CSV, basis dump, overlaps and manifest.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunArtifacts> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let prep = experiment::prepare(cfg)?;
    write_text(&dir.join(BASIS_FILE), &prep.basis.dump())?;

    let (set, source, jobs) = match &opts.overlaps {
        Some(src) => {
            let set = experiment::load_overlaps(src)?;
            experiment::check_loaded(cfg, &prep, &set)?;
            info!("reusing overlaps from {}", src.display());
            (set, format!("loaded:{}", src.display()), None)
        }
        None => {
            let mut engine = gqas::overlap::OverlapEngine::new(prep.basis.reference(), experiment::backend(cfg))?;
            let set = experiment::measure_with(cfg, &prep, &mut engine)?;
            (set, "measured".to_string(), Some((engine.distinct_jobs(), engine.naive_jobs())))
        }
    };
    set.save(&dir.join(OVERLAP_DIR))?;

    let mut rms_error = None;
    if cfg.backend == BackendKind::Sampled && cfg.experiment == ExperimentKind::OverlapsOnly {
        let exact_cfg = ExperimentConfig {
            backend: BackendKind::Exact,
            ..cfg.clone()
        };
        let exact = experiment::measure(&exact_cfg, &prep)?;
        let errors = experiment::overlap_errors(&set, &exact);
        let mut text = String::from("matrix,rms_error,max_abs_error\n");
        for (name, rms, max) in &errors {
            writeln!(text, "{name},{rms},{max}").expect("string write");
        }
        write_text(&dir.join(ERRORS_FILE), &text)?;
        rms_error = Some(experiment::pooled_rms(&errors, &experiment::matrix_sizes(&set)));
    }

    let result = (|| -> Result<Option<experiment::Outcome>> {
        let initial = match &opts.initial {
            Some(path) => Some(load_initial_state(cfg, path, prep.basis.id())?),
            None => experiment::default_initial_state(cfg, &prep, &set)?,
        };
        if let Some(state) = &initial {
            save_initial_state(dir, state)?;
        }
        experiment::integrate(cfg, &prep, &set, initial)
    })();
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            if e.exit_code() == 3 {
                spectrum_dump(&set, dir);
            }
            return Err(e);
        }
    };

    let (table, mut summary) = match outcome {
        Some(o) => {
            write_text(&dir.join(TRAJECTORY_FILE), &csv_string(&o.table))?;
            (Some(o.table), Some(o.summary))
        }
        None => (None, None),
    };
    if let Some(rms) = rms_error {
        summary = Some(RunSummary {
            primary: "overlaps".into(),
            end_value: f64::NAN,
            max_value: f64::NAN,
            min_fidelity: None,
            mean_fidelity: None,
            end_fidelity: None,
            rms_error: Some(rms),
        });
    }

    let mut files = vec![BASIS_FILE.to_string(), OVERLAP_DIR.to_string()];
    if table.is_some() {
        files.push(TRAJECTORY_FILE.to_string());
    }
    if rms_error.is_some() {
        files.push(ERRORS_FILE.to_string());
    }
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "seeds": {
            "circuit_seed": cfg.circuit_seed,
            "selection_seed": cfg.selection_seed,
            "shot_seed": cfg.shot_seed,
            "matrix_seed": cfg.matrix_seed,
        },
        "basis": {
            "id": format!("{:#018x}", prep.basis.id()),
            "size": prep.basis.len(),
            "available": prep.available,
        },
        "overlaps": {
            "source": source,
            "distinct_expectations": jobs.map(|j| j.0),
            "naive_sandwiches": jobs.map(|j| j.1),
        },
        "files": files,
        "summary": summary,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_text(&dir.join(MANIFEST_FILE), &(text + "\n"))?;

    Ok(RunArtifacts { table, summary, overlaps: set })
}

/// Measures and stores the overlap set of any experiment without integrating.
pub fn overlaps(cfg: &ExperimentConfig) -> Result<OverlapSet> {
    let prep = experiment::prepare(cfg)?;
    let set = experiment::measure(cfg, &prep)?;
    fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    write_text(&cfg.output_dir.join(BASIS_FILE), &prep.basis.dump())?;
    set.save(&cfg.output_dir.join(OVERLAP_DIR))?;
    Ok(set)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Runs one configuration per value in parallel, each into
/// `output_dir/<key>_<value>`, and writes `output_dir/sweep_<key>.csv`.
pub fn sweep(cfg: &ExperimentConfig, key: &str, values: &[f64]) -> Result<Vec<(f64, RunSummary)>> {
    if values.is_empty() {
        return Err(CliError::Config {
            key: key.into(),
            message: "sweep needs at least one value".into(),
        });
    }
    let runs: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| {
            let mut c = cfg.with_numeric_override(key, v)?;
            c.output_dir = cfg.output_dir.join(format!("{key}_{v}"));
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let results: Vec<(f64, RunSummary)> = runs
        .par_iter()
        .zip(values.par_iter())
        .map(|(c, &v)| {
            let art = run(c, &RunOptions::default())?;
            let summary = art.summary.ok_or_else(|| CliError::Config {
                key: "experiment".into(),
                message: "nothing to summarize; sweep an experiment with output".into(),
            })?;
            Ok((v, summary))
        })
        .collect::<Result<_>>()?;

    let mut text = String::from("value,end_value,max_value,min_fidelity,mean_fidelity,end_fidelity,rms_error\n");
    for (v, s) in &results {
        let (end, max) = if s.end_value.is_nan() && s.rms_error.is_some() {
            (String::new(), String::new())
        } else {
            (format!("{:?}", s.end_value), format!("{:?}", s.max_value))
        };
        writeln!(
            text,
            "{v:?},{end},{max},{},{},{},{}",
            cell(s.min_fidelity),
            cell(s.mean_fidelity),
            cell(s.end_fidelity),
            cell(s.rms_error)
        )
        .expect("string write");
    }
    fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    write_text(&cfg.output_dir.join(format!("sweep_{key}.csv")), &text)?;
    Ok(results)
}
