//! Fitted projection matrices shared by every reduction method.
//!
//! On disk a projection is a rawf64 matrix block holding `V` (D×d) followed
//! by UTF-8 `key=value` metadata lines.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::l1sc::SolverConfig;
use crate::matrix_io::{read_matrix_block, write_matrix_block};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    L1sc,
    L2sc,
    Lda,
    /// No reduction; the raw features are used.
    None,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::L1sc => "l1sc",
            Method::L2sc => "l2sc",
            Method::Lda => "lda",
            Method::None => "none",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1sc" => Ok(Method::L1sc),
            "l2sc" => Ok(Method::L2sc),
            "lda" => Ok(Method::Lda),
            "none" => Ok(Method::None),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// What the fitting procedure reports for one column of `V`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiagnostics {
    /// L1 ratio on the (deflated) data for L1-SC, generalized eigenvalue otherwise.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the restart whose result was kept.
    pub restart: usize,
    pub perturbations: usize,
    /// Step-size halvings triggered by the objective safeguard.
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    basis: Array2<f64>,
    method: Method,
    columns: Vec<ColumnDiagnostics>,
    solver: Option<SolverConfig>,
    notes: Vec<String>,
}

impl Projection {
    pub fn new(basis: Array2<f64>, method: Method, columns: Vec<ColumnDiagnostics>) -> Self {
        assert_eq!(basis.ncols(), columns.len(), "one diagnostics entry per column");
        Self {
            basis,
            method,
            columns,
            solver: None,
            notes: Vec::new(),
        }
    }

    pub fn with_solver(mut self, cfg: SolverConfig) -> Self {
        self.solver = Some(cfg);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// `V`, one projection vector per column.
    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn columns(&self) -> &[ColumnDiagnostics] {
        &self.columns
    }

    pub fn solver(&self) -> Option<&SolverConfig> {
        self.solver.as_ref()
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// The first `d` columns. Every method here builds `V` column by column,
    /// so a prefix is exactly the projection a fit with target `d` returns.
    pub fn truncated(&self, d: usize) -> Result<Projection> {
        if d == 0 || d > self.output_dim() {
            return Err(Error::DimensionOutOfRange {
                d,
                max: self.output_dim() + 1,
            });
        }
        Ok(Projection {
            basis: self.basis.slice(s![.., ..d]).to_owned(),
            method: self.method,
            columns: self.columns[..d].to_vec(),
            solver: self.solver,
            notes: self.notes.clone(),
        })
    }

    /// `Y = Vᵀ X`, labels unchanged.
    pub fn transform(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        if ds.n_features() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: ds.n_features(),
            });
        }
        ds.with_features(self.basis.t().dot(ds.x()))
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        write_matrix_block(&self.basis, w)?;
        writeln!(w, "method={}", self.method)?;
        writeln!(w, "D={}", self.input_dim())?;
        writeln!(w, "d={}", self.output_dim())?;
        if let Some(cfg) = &self.solver {
            writeln!(w, "gamma={:?}", cfg.gamma)?;
            writeln!(w, "epsilon={:?}", cfg.epsilon)?;
            writeln!(w, "itmax={}", cfg.itmax)?;
            writeln!(w, "perturb_scale={:?}", cfg.perturb_scale)?;
            writeln!(w, "restarts={}", cfg.restarts)?;
            writeln!(w, "seed={}", cfg.seed)?;
        }
        for (j, c) in self.columns.iter().enumerate() {
            writeln!(
                w,
                "column={} objective={:?} iterations={} converged={} restart={} perturbations={} halvings={}",
                j + 1,
                c.objective,
                c.iterations,
                c.converged,
                c.restart,
                c.perturbations,
                c.halvings
            )?;
        }
        for note in &self.notes {
            writeln!(w, "note={note}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(mut r: R) -> Result<Projection> {
        let basis = read_matrix_block(&mut r)?;
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let bad = |line: usize, detail: String| Error::MalformedHeader { line, detail };

        let mut method = None;
        let mut solver = SolverConfig::default();
        let mut has_solver = false;
        let mut columns = Vec::new();
        let mut notes = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(line_no, format!("expected key=value, got {line:?}")))?;
            let num = |v: &str| -> Result<f64> { v.parse().map_err(|_| bad(line_no, format!("bad number {v:?}"))) };
            let int = |v: &str| -> Result<u64> { v.parse().map_err(|_| bad(line_no, format!("bad integer {v:?}"))) };
            match key {
                "method" => method = Some(value.parse::<Method>()?),
                "D" | "d" => {
                    let expected = if key == "D" { basis.nrows() } else { basis.ncols() };
                    if int(value)? as usize != expected {
                        return Err(bad(line_no, format!("{key} does not match matrix block")));
                    }
                }
                "gamma" => (solver.gamma, has_solver) = (num(value)?, true),
                "epsilon" => solver.epsilon = num(value)?,
                "itmax" => solver.itmax = int(value)? as usize,
                "perturb_scale" => solver.perturb_scale = num(value)?,
                "restarts" => solver.restarts = int(value)? as usize,
                "seed" => solver.seed = int(value)?,
                "column" => {
                    let mut c = ColumnDiagnostics::default();
                    for field in line.split_whitespace().skip(1) {
                        let (k, v) = field
                            .split_once('=')
                            .ok_or_else(|| bad(line_no, format!("bad field {field:?}")))?;
                        match k {
                            "objective" => c.objective = num(v)?,
                            "iterations" => c.iterations = int(v)? as usize,
                            "converged" => c.converged = v == "true",
                            "restart" => c.restart = int(v)? as usize,
                            "perturbations" => c.perturbations = int(v)? as usize,
                            "halvings" => c.halvings = int(v)? as usize,
                            _ => return Err(bad(line_no, format!("unknown column field {k:?}"))),
                        }
                    }
                    columns.push(c);
                }
                "note" => notes.push(value.to_string()),
                _ => return Err(bad(line_no, format!("unknown key {key:?}"))),
            }
        }
        let method = method.ok_or_else(|| bad(0, "missing method".into()))?;
        if columns.len() != basis.ncols() {
            return Err(bad(0, "column diagnostics do not match matrix block".into()));
        }
        Ok(Projection {
            basis,
            method,
            columns,
            solver: has_solver.then_some(solver),
            notes,
        })
    }
}
