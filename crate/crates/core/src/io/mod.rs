//! Model and plan files, CSV output, and the resolved run configuration.
//!
//! Model file:
//!
//! ```text
//! M = 1
//! focal = { parts = [[1, 1]], mass = 0.3 }
//! focal = { parts = [[0, 0]], mass = 0.3 }
//! focal = { parts = [[0, 0], [1, 1]], mass = 0.4 }
//! ```
//!
//! Parts inside one focal element that overlap or touch are merged.
//! A plan file holds either `model = "path"` (relative to the plan file) or
//! an inline model, plus any of `run_id`, `n_values`, `reps`, `seed`,
//! `alpha_grid`, `alpha_pairs`, `slack` and repeated
//! `alpha_override = { n = 16, grid = [...], pairs = [[a, b], ...] }`.

mod csv_out;
mod syntax;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::belief::{BeliefModel, FocalElement, InvalidModel};
use crate::montecarlo::{grid_pairs, AlphaSet, SimError, SimPlan};

pub use csv_out::{
    emit_csv, format_float, read_report_csv, read_sim_csv, write_csv, CsvRow, MomentsRow,
    RatePointRow, SimRow, REPORT_SCHEMA, SIM_SCHEMA,
};
pub use syntax::SyntaxError;

use syntax::{parse_statements, quote, Statement, Value};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Parse { path: String, source: SyntaxError },
    #[error("{path}: {source}")]
    Validation { path: String, source: InvalidModel },
    #[error("{path}: invalid plan: {message}")]
    Plan { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|e| IoError::io(path, e))
}

struct ModelBuilder {
    bound: Option<Value>,
    focal: Vec<(FocalElement, f64)>,
}

impl ModelBuilder {
    fn new() -> Self {
        Self {
            bound: None,
            focal: Vec::new(),
        }
    }

    fn is_empty(&self) -> bool {
        self.bound.is_none() && self.focal.is_empty()
    }

    /// Consumes `M` and `focal` statements; returns false for other keys.
    fn accept(&mut self, key: &str, value: &Value) -> Result<bool, SyntaxError> {
        match key {
            "M" => {
                if self.bound.is_some() {
                    return Err(value.error("`M` given twice"));
                }
                value.as_f64()?;
                self.bound = Some(value.clone());
            }
            "focal" => self.focal.push(parse_focal(value)?),
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn finish(self, at_end: (usize, usize)) -> Result<Result<BeliefModel, InvalidModel>, SyntaxError> {
        let Some(bound) = self.bound else {
            return Err(SyntaxError {
                line: at_end.0,
                column: at_end.1,
                message: "missing `M`".into(),
            });
        };
        Ok(BeliefModel::new(bound.as_f64()?, self.focal))
    }
}

fn parse_focal(value: &Value) -> Result<(FocalElement, f64), SyntaxError> {
    let mut parts = None;
    let mut mass = None;
    for (key, v) in value.as_table()? {
        let slot = match key.item.as_str() {
            "parts" => &mut parts,
            "mass" => &mut mass,
            other => {
                return Err(v.error(format!("unknown focal key `{other}` (expected `parts` or `mass`)")))
            }
        };
        if slot.replace(v).is_some() {
            return Err(v.error(format!("`{}` given twice", key.item)));
        }
    }
    let parts = parts.ok_or_else(|| value.error("focal element needs `parts`"))?;
    let mass = mass.ok_or_else(|| value.error("focal element needs `mass`"))?;
    let pairs = parts
        .as_array()?
        .iter()
        .map(Value::as_pair)
        .collect::<Result<Vec<_>, _>>()?;
    let element = FocalElement::new(pairs).map_err(|e| parts.error(format!("invalid focal element: {e}")))?;
    Ok((element, mass.as_f64()?))
}

fn end_position(text: &str) -> (usize, usize) {
    (text.lines().count().max(1), 1)
}

/// Parses a model from text. `origin` names the source in errors.
pub fn parse_model(text: &str, origin: &str) -> Result<BeliefModel, IoError> {
    let parse_err = |source| IoError::Parse {
        path: origin.to_string(),
        source,
    };
    let mut builder = ModelBuilder::new();
    for (key, value) in parse_statements(text).map_err(parse_err)? {
        if !builder.accept(&key.item, &value).map_err(parse_err)? {
            return Err(parse_err(SyntaxError {
                line: key.line,
                column: key.column,
                message: format!("unknown key `{}` (expected `M` or `focal`)", key.item),
            }));
        }
    }
    builder
        .finish(end_position(text))
        .map_err(parse_err)?
        .map_err(|source| IoError::Validation {
            path: origin.to_string(),
            source,
        })
}

pub fn load_model(path: &Path) -> Result<BeliefModel, IoError> {
    parse_model(&read(path)?, &path.display().to_string())
}

fn focal_line(element: &FocalElement, mass: f64) -> String {
    let parts: Vec<String> = element
        .parts()
        .iter()
        .map(|p| format!("[{}, {}]", format_float(p.lo), format_float(p.hi)))
        .collect();
    format!("focal = {{ parts = [{}], mass = {} }}", parts.join(", "), format_float(mass))
}

fn model_lines(model: &BeliefModel) -> Vec<String> {
    let mut lines = vec![format!("M = {}", format_float(model.bound()))];
    lines.extend(model.focal().iter().map(|(k, m)| focal_line(k, *m)));
    lines
}

/// Model in file syntax, one statement per line.
pub fn model_to_string(model: &BeliefModel) -> String {
    model_lines(model).iter().map(|l| format!("{l}\n")).collect()
}

pub fn write_model(model: &BeliefModel, path: &Path) -> Result<(), IoError> {
    write(path, &model_to_string(model))
}

fn alpha_list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| format_float(x)).collect();
    format!("[{}]", items.join(", "))
}

fn pair_list(xs: &[(f64, f64)]) -> String {
    let items: Vec<String> = xs
        .iter()
        .map(|&(a, b)| format!("[{}, {}]", format_float(a), format_float(b)))
        .collect();
    format!("[{}]", items.join(", "))
}

fn plan_lines(plan: &SimPlan) -> Vec<String> {
    let n_values: Vec<String> = plan.n_values.iter().map(u64::to_string).collect();
    let mut lines = vec![
        format!("run_id = {}", quote(&plan.run_id)),
        format!("n_values = [{}]", n_values.join(", ")),
        format!("reps = {}", plan.reps),
        format!("seed = {}", plan.seed),
        format!("slack = {}", format_float(plan.slack)),
        format!("alpha_grid = {}", alpha_list(&plan.alphas.one_sided)),
        format!("alpha_pairs = {}", pair_list(&plan.alphas.pairs)),
    ];
    for (n, set) in &plan.alpha_overrides {
        lines.push(format!(
            "alpha_override = {{ n = {n}, grid = {}, pairs = {} }}",
            alpha_list(&set.one_sided),
            pair_list(&set.pairs)
        ));
    }
    lines.extend(model_lines(&plan.model));
    lines
}

/// Self-contained plan in file syntax with the model inline.
pub fn plan_to_string(plan: &SimPlan) -> String {
    plan_lines(plan).iter().map(|l| format!("{l}\n")).collect()
}

/// The same plan as a single `;`-separated line, loadable as a plan file.
pub fn plan_to_line(plan: &SimPlan) -> String {
    plan_lines(plan).join("; ")
}

pub fn write_plan(plan: &SimPlan, path: &Path) -> Result<(), IoError> {
    write(path, &plan_to_string(plan))
}

fn parse_override(value: &Value) -> Result<(u64, AlphaSet), SyntaxError> {
    let mut n = None;
    let mut grid = None;
    let mut pairs = None;
    for (key, v) in value.as_table()? {
        match key.item.as_str() {
            "n" => n = Some(v.as_u64()?),
            "grid" => grid = Some(v.as_f64_array()?),
            "pairs" => pairs = Some(v.as_array()?.iter().map(Value::as_pair).collect::<Result<Vec<_>, _>>()?),
            other => {
                return Err(v.error(format!(
                    "unknown alpha_override key `{other}` (expected `n`, `grid` or `pairs`)"
                )))
            }
        }
    }
    let n = n.ok_or_else(|| value.error("alpha_override needs `n`"))?;
    let grid = grid.ok_or_else(|| value.error("alpha_override needs `grid`"))?;
    let pairs = pairs.unwrap_or_else(|| grid_pairs(&grid));
    Ok((n, AlphaSet { one_sided: grid, pairs }))
}

/// Parses a plan from text. A `model = "path"` entry is resolved against
/// `base_dir`.
pub fn parse_plan(text: &str, origin: &str, base_dir: &Path) -> Result<SimPlan, IoError> {
    let parse_err = |source| IoError::Parse {
        path: origin.to_string(),
        source,
    };
    let statements: Vec<Statement> = parse_statements(text).map_err(parse_err)?;
    let mut builder = ModelBuilder::new();
    let mut model_path: Option<(PathBuf, Value)> = None;
    let mut run_id = None;
    let mut n_values = None;
    let mut reps = None;
    let mut seed = None;
    let mut slack = None;
    let mut grid = None;
    let mut pairs = None;
    let mut overrides: BTreeMap<u64, AlphaSet> = BTreeMap::new();
    let mut seen: BTreeMap<String, ()> = BTreeMap::new();

    for (key, value) in &statements {
        let k = key.item.as_str();
        if !matches!(k, "focal" | "alpha_override") && seen.insert(k.to_string(), ()).is_some() {
            return Err(parse_err(value.error(format!("`{k}` given twice"))));
        }
        if builder.accept(k, value).map_err(parse_err)? {
            continue;
        }
        let r: Result<(), SyntaxError> = (|| {
            match k {
                "model" => model_path = Some((base_dir.join(value.as_str()?), value.clone())),
                "run_id" => run_id = Some(value.as_str()?.to_string()),
                "n_values" => {
                    n_values = Some(value.as_array()?.iter().map(Value::as_u64).collect::<Result<Vec<_>, _>>()?)
                }
                "reps" => reps = Some(value.as_u64()?),
                "seed" => seed = Some(value.as_u64()?),
                "slack" => slack = Some(value.as_f64()?),
                "alpha_grid" => grid = Some(value.as_f64_array()?),
                "alpha_pairs" => {
                    pairs = Some(value.as_array()?.iter().map(Value::as_pair).collect::<Result<Vec<_>, _>>()?)
                }
                "alpha_override" => {
                    let (n, set) = parse_override(value)?;
                    if overrides.insert(n, set).is_some() {
                        return Err(value.error(format!("second alpha_override for n = {n}")));
                    }
                }
                other => {
                    return Err(SyntaxError {
                        line: key.line,
                        column: key.column,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
            Ok(())
        })();
        r.map_err(parse_err)?;
    }

    let model = match (model_path, builder.is_empty()) {
        (Some((_, v)), false) => {
            return Err(parse_err(v.error("plan has both `model` and an inline model")));
        }
        (Some((path, _)), true) => load_model(&path)?,
        (None, _) => builder
            .finish(end_position(text))
            .map_err(parse_err)?
            .map_err(|source| IoError::Validation {
                path: origin.to_string(),
                source,
            })?,
    };

    let mut plan = SimPlan::new(model);
    if let Some(v) = run_id {
        plan.run_id = v;
    }
    if let Some(v) = n_values {
        plan.n_values = v;
    }
    if let Some(v) = reps {
        plan.reps = v;
    }
    if let Some(v) = seed {
        plan.seed = v;
    }
    if let Some(v) = slack {
        plan.slack = v;
    }
    if let Some(g) = grid {
        plan.alphas = AlphaSet::with_grid_pairs(g);
    }
    if let Some(p) = pairs {
        plan.alphas.pairs = p;
    }
    plan.alpha_overrides = overrides;
    match plan.validate() {
        Ok(warnings) => {
            for w in warnings {
                log::warn!("{origin}: {w}");
            }
            Ok(plan)
        }
        Err(SimError::InvalidPlan(message)) => Err(IoError::Plan {
            path: origin.to_string(),
            message,
        }),
        Err(other) => Err(IoError::Plan {
            path: origin.to_string(),
            message: other.to_string(),
        }),
    }
}

pub fn load_plan(path: &Path) -> Result<SimPlan, IoError> {
    let base = path.parent().unwrap_or(Path::new("."));
    parse_plan(&read(path)?, &path.display().to_string(), base)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Text,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Text => "text",
        })
    }
}

/// Everything a CLI invocation resolved to, after defaults and overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<PathBuf>,
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub verbosity: u8,
    pub workers: usize,
}

impl RunConfig {
    /// Applies the `--seed` and `--reps` overrides to a loaded plan.
    pub fn apply(&self, plan: &mut SimPlan) {
        if let Some(s) = self.seed {
            plan.seed = s;
        }
        if let Some(r) = self.reps {
            plan.reps = r;
        }
    }

    /// Validates paths and numeric ranges.
    pub fn check(&self) -> Result<(), IoError> {
        if let Some(input) = &self.input {
            if !input.is_file() {
                return Err(IoError::io(
                    input,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        if self.reps == Some(0) {
            return Err(IoError::Plan {
                path: "--reps".into(),
                message: "reps must be at least 1".into(),
            });
        }
        if let Some(dir) = &self.out_dir {
            fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
        }
        Ok(())
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        write!(
            f,
            "command={} input={} seed={} reps={} out_dir={} format={} verbosity={} workers={}",
            self.command,
            opt(&self.input),
            self.seed.map_or("plan".into(), |s| s.to_string()),
            self.reps.map_or("plan".into(), |r| r.to_string()),
            opt(&self.out_dir),
            self.format,
            self.verbosity,
            self.workers
        )
    }
}
