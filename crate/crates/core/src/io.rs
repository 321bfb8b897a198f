//! JSON file formats for potentials, measures, stochastic matrices and
//! constraint families.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::maxent::{AffineGenerator, PotentialFamily};
use crate::measure::{check_column_stochastic, markov_invariant, markov_noninvariant, SuitableMeasure};
use crate::symbolic::FiniteMemoryFunction;

/// `{"alphabet": d, "depth": k, "log_values": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub alphabet: usize,
    pub depth: usize,
    pub log_values: Vec<f64>,
}

impl PotentialFile {
    pub fn into_function(self) -> Result<FiniteMemoryFunction> {
        FiniteMemoryFunction::new(self.alphabet, self.depth, self.log_values)
    }
}

impl From<&FiniteMemoryFunction> for PotentialFile {
    fn from(f: &FiniteMemoryFunction) -> Self {
        PotentialFile {
            alphabet: f.alphabet(),
            depth: f.depth(),
            log_values: f.values().to_vec(),
        }
    }
}

/// `{"alphabet": d, "depth": k, "log_irn": [...], "base": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub alphabet: usize,
    pub depth: usize,
    pub log_irn: Vec<f64>,
    pub base: Vec<f64>,
}

impl MeasureFile {
    pub fn into_measure(self) -> Result<SuitableMeasure> {
        let log_irn = FiniteMemoryFunction::new(self.alphabet, self.depth, self.log_irn)?;
        let expected = crate::symbolic::table_len(self.alphabet, self.depth.saturating_sub(1))?;
        if self.base.len() != expected {
            return Err(Error::InvalidInput(format!(
                "measure base must list {expected} weights (words of length depth - 1 = {}), got {}",
                self.depth.saturating_sub(1),
                self.base.len()
            )));
        }
        SuitableMeasure::new(log_irn, self.base)
    }
}

impl From<&SuitableMeasure> for MeasureFile {
    fn from(m: &SuitableMeasure) -> Self {
        MeasureFile {
            alphabet: m.alphabet(),
            depth: m.depth(),
            log_irn: m.log_irn().values().to_vec(),
            base: m.base().to_vec(),
        }
    }
}

/// `{"matrix": [[...]], "convention": "column"}`, optionally with an
/// `"initial"` law for the non-stationary chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub matrix: Vec<Vec<f64>>,
    pub convention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
}

impl MatrixFile {
    /// Validated column-stochastic matrix.
    pub fn into_matrix(self) -> Result<Vec<Vec<f64>>> {
        if self.convention != "column" {
            return Err(Error::InvalidInput(format!(
                "unsupported matrix convention {:?}; only \"column\" is accepted",
                self.convention
            )));
        }
        check_column_stochastic(&self.matrix)?;
        Ok(self.matrix)
    }

    /// The Markov measure: stationary, or started from `initial` when given.
    pub fn into_measure(self) -> Result<SuitableMeasure> {
        let initial = self.initial.clone();
        let p = self.into_matrix()?;
        match initial {
            Some(z) => markov_noninvariant(&p, &z),
            None => Ok(markov_invariant(&p)?.into_measure()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(PotentialFile),
    Many(Vec<PotentialFile>),
}

impl OneOrMany {
    fn into_functions(self) -> Result<Vec<FiniteMemoryFunction>> {
        match self {
            OneOrMany::One(p) => Ok(vec![p.into_function()?]),
            OneOrMany::Many(v) => v.into_iter().map(PotentialFile::into_function).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorFile {
    kind: String,
    base: OneOrMany,
    direction: OneOrMany,
}

/// `{"alphabet": d, "constraints": [...], "generator": {"kind": "affine", ...}}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    alphabet: usize,
    constraints: Vec<PotentialFile>,
    #[serde(default)]
    generator: Option<GeneratorFile>,
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("malformed JSON in {}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(value: Value, path: &Path, what: &str) -> Result<T> {
    serde_json::from_value(value)
        .map_err(|e| Error::InvalidInput(format!("{} is not a valid {what} file: {e}", path.display())))
}

pub fn load_potential(path: &Path) -> Result<FiniteMemoryFunction> {
    parse::<PotentialFile>(read_json(path)?, path, "potential")?.into_function()
}

/// Reads a measure file; a report carrying a `"measure"` object is also
/// accepted so that outputs can be fed back in.
pub fn load_measure(path: &Path) -> Result<SuitableMeasure> {
    let mut value = read_json(path)?;
    if let Some(inner) = value.get_mut("results").and_then(|r| r.get_mut("measure")) {
        value = inner.take();
    } else if let Some(inner) = value.get_mut("measure") {
        value = inner.take();
    }
    parse::<MeasureFile>(value, path, "measure")?.into_measure()
}

pub fn load_matrix(path: &Path) -> Result<MatrixFile> {
    parse(read_json(path)?, path, "stochastic-matrix")
}

pub fn load_family(path: &Path) -> Result<PotentialFamily> {
    let file: FamilyFile = parse(read_json(path)?, path, "family")?;
    let constraints = file
        .constraints
        .into_iter()
        .map(PotentialFile::into_function)
        .collect::<Result<Vec<_>>>()?;
    if let Some(f) = constraints.iter().find(|f| f.alphabet() != file.alphabet) {
        return Err(Error::AlphabetMismatch(file.alphabet, f.alphabet()));
    }
    let generator = match file.generator {
        None => None,
        Some(g) if g.kind == "affine" => Some(AffineGenerator {
            base: g.base.into_functions()?,
            direction: g.direction.into_functions()?,
        }),
        Some(g) => {
            return Err(Error::InvalidInput(format!(
                "unsupported generator kind {:?}; only \"affine\" is accepted",
                g.kind
            )))
        }
    };
    PotentialFamily::new(constraints, generator)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
