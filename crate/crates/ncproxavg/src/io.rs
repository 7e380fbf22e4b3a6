//! Problem-definition files (JSON) and the CSV emission formats.

use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::funcspace::{BoxDomain, GridSpec, MaxQuadFunction, QuadraticPiece, SimplexWeight};
use crate::minpath::ArgminPath;
use crate::proxavg::{DeltaSpec, ProxAverageProblem};
use crate::util::fmt_g17;

/// Top-level problem definition. Numbers are plain JSON decimals; NaN and
/// infinity literals are rejected by the parser.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dimension: usize,
    pub functions: Vec<FunctionSpec>,
    pub r: f64,
    pub delta: DeltaSpec,
    pub grid: GridFileSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub pieces: Vec<PieceSpec>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFileSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: Vec<usize>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Materializes the functions described by the file.
    pub fn build_functions(&self) -> Result<Vec<MaxQuadFunction>> {
        self.functions
            .iter()
            .map(|spec| {
                let pieces = spec
                    .pieces
                    .iter()
                    .map(|p| QuadraticPiece::new(p.alpha, p.beta.clone(), p.gamma))
                    .collect::<Result<Vec<_>>>()?;
                let domain = spec
                    .domain
                    .as_ref()
                    .map(|d| BoxDomain::new(d.lower.clone(), d.upper.clone()))
                    .transpose()?;
                MaxQuadFunction::new(self.dimension, pieces, domain)
            })
            .collect()
    }

    pub fn build_grid(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.grid.lower.clone(),
            self.grid.upper.clone(),
            self.grid.points.clone(),
        )
    }

    /// Builds the averaging problem, honoring command-line overrides.
    pub fn build_problem(
        &self,
        r_override: Option<f64>,
        grid_override: Option<GridSpec>,
    ) -> Result<ProxAverageProblem> {
        let grid = match grid_override {
            Some(g) => g,
            None => self.build_grid()?,
        };
        ProxAverageProblem::new(
            self.build_functions()?,
            r_override.unwrap_or(self.r),
            self.delta.clone(),
            grid,
            None,
        )
    }
}

/// Envelope curve: `x,value,grad`, one row per grid point; the gradient cell
/// is left empty where the prox is multivalued.
pub fn write_envelope_csv(
    out: &mut dyn Write,
    rows: &[(f64, f64, Option<f64>)],
) -> std::io::Result<()> {
    writeln!(out, "x,value,grad")?;
    for (x, v, g) in rows {
        match g {
            Some(g) => writeln!(out, "{},{},{}", fmt_g17(*x), fmt_g17(*v), fmt_g17(*g))?,
            None => writeln!(out, "{},{},", fmt_g17(*x), fmt_g17(*v))?,
        }
    }
    Ok(())
}

/// Average surface: `lambda_1,...,lambda_m,x,value` (an `x_d` column per axis
/// for multi-dimensional problems).
pub fn write_pa_csv(
    out: &mut dyn Write,
    m: usize,
    dim: usize,
    rows: &[(Vec<f64>, Vec<f64>, f64)],
) -> std::io::Result<()> {
    let mut header: Vec<String> = (1..=m).map(|i| format!("lambda_{i}")).collect();
    if dim == 1 {
        header.push("x".into());
    } else {
        header.extend((1..=dim).map(|d| format!("x_{d}")));
    }
    header.push("value".into());
    writeln!(out, "{}", header.join(","))?;
    for (lambda, x, v) in rows {
        let mut cells: Vec<String> = lambda.iter().map(|w| fmt_g17(*w)).collect();
        cells.extend(x.iter().map(|c| fmt_g17(*c)));
        cells.push(fmt_g17(*v));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Argmin path records: `t,lambda_1..lambda_m,argmin_count,argmin_1..,min_value`,
/// then one `#jump` comment row per detected event.
pub fn write_argmin_path_csv(out: &mut dyn Write, path: &ArgminPath) -> std::io::Result<()> {
    let m = path
        .records
        .first()
        .map(|rec| rec.lambda.m())
        .unwrap_or_default();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=m).map(|i| format!("lambda_{i}")));
    header.push("argmin_count".into());
    header.push("argmin_1..".into());
    header.push("min_value".into());
    writeln!(out, "{}", header.join(","))?;
    let denom = (path.records.len().max(2) - 1) as f64;
    for (k, rec) in path.records.iter().enumerate() {
        let mut cells = vec![fmt_g17(k as f64 / denom)];
        cells.extend(rec.lambda.weights().iter().map(|w| fmt_g17(*w)));
        cells.push(rec.argmin.len().to_string());
        cells.extend(rec.argmin.iter().map(|p| fmt_g17(*p)));
        cells.push(fmt_g17(rec.min_value));
        writeln!(out, "{}", cells.join(","))?;
    }
    for jump in &path.jumps {
        let mut cells = vec!["#jump".to_string()];
        cells.extend(jump.lambda_star.weights().iter().map(|w| fmt_g17(*w)));
        cells.push(fmt_g17(jump.magnitude));
        cells.extend(jump.left.iter().map(|p| fmt_g17(*p)));
        cells.push("->".into());
        cells.extend(jump.right.iter().map(|p| fmt_g17(*p)));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Named curves in long form: `curve,x,value`.
pub fn write_curves_csv(
    out: &mut dyn Write,
    curves: &[(String, Vec<(f64, f64)>)],
) -> std::io::Result<()> {
    writeln!(out, "curve,x,value")?;
    for (name, points) in curves {
        for (x, v) in points {
            writeln!(out, "{name},{},{}", fmt_g17(*x), fmt_g17(*v))?;
        }
    }
    Ok(())
}

/// Parses a repeatable `lo:hi:n` per-axis grid override.
pub fn parse_grid_spec(specs: &[String]) -> Result<GridSpec> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut points = Vec::new();
    for s in specs {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Invalid(format!("grid spec '{s}' is not lo:hi:n")));
        }
        lower.push(
            parts[0]
                .parse()
                .map_err(|_| Error::Invalid(format!("bad grid bound '{}'", parts[0])))?,
        );
        upper.push(
            parts[1]
                .parse()
                .map_err(|_| Error::Invalid(format!("bad grid bound '{}'", parts[1])))?,
        );
        points.push(
            parts[2]
                .parse()
                .map_err(|_| Error::Invalid(format!("bad grid count '{}'", parts[2])))?,
        );
    }
    GridSpec::new(lower, upper, points)
}

/// Parses a comma-separated weight vector.
pub fn parse_lambda(s: &str) -> Result<SimplexWeight> {
    let weights = s
        .split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("bad weight '{w}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    SimplexWeight::new(weights)
}
