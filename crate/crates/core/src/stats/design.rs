//! Model formulas over [`AnalysisRow`]s and their dummy-coded design matrices.
//!
//! A formula reads `resolution ~ activity*si + gender*si + glasses`.
//! `a*b` expands to `a + b + a:b`; `a:b` is the element-wise product of the
//! two factors' columns. An intercept is always present. Categorical factors
//! are dummy coded against a reference level; a dummy column is named after
//! its level (`walking`, `male`) and dominant-trait dummies are prefixed
//! (`dominant_openness`).

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::linalg::{Matrix, Qr};
use crate::dataset::{Activity, AnalysisRow, Gender, Trait};
use crate::error::{Error, Result};

pub const INTERCEPT: &str = "(intercept)";

/// A single variable that can appear in a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variable {
    Activity,
    /// Ordinal activity code: still 0, walking 1, running 2, in_vehicle 3.
    ActivityOrdinal,
    Si,
    Ti,
    Gender,
    Age,
    Glasses,
    Dominant,
    /// Dominant trait as its position in the fixed trait order (0..=4).
    DominantCode,
    Percentile(Trait),
}

impl Variable {
    fn parse(s: &str) -> Result<Self> {
        let v = match s.trim().to_ascii_lowercase().as_str() {
            "activity" => Variable::Activity,
            "activity_ordinal" => Variable::ActivityOrdinal,
            "si" | "spatial" => Variable::Si,
            "ti" | "temporal" => Variable::Ti,
            "gender" => Variable::Gender,
            "age" => Variable::Age,
            "glasses" => Variable::Glasses,
            "dominant" | "personality" => Variable::Dominant,
            "dominant_code" => Variable::DominantCode,
            other => match other.parse::<Trait>() {
                Ok(t) => Variable::Percentile(t),
                Err(_) => return Err(Error::invalid(format!("unknown formula variable {s:?}"))),
            },
        };
        Ok(v)
    }

    pub fn name(self) -> String {
        match self {
            Variable::Activity => "activity".into(),
            Variable::ActivityOrdinal => "activity_ordinal".into(),
            Variable::Si => "si".into(),
            Variable::Ti => "ti".into(),
            Variable::Gender => "gender".into(),
            Variable::Age => "age".into(),
            Variable::Glasses => "glasses".into(),
            Variable::Dominant => "dominant".into(),
            Variable::DominantCode => "dominant_code".into(),
            Variable::Percentile(t) => t.as_str().into(),
        }
    }

    fn is_categorical(self) -> bool {
        matches!(
            self,
            Variable::Activity | Variable::Gender | Variable::Dominant
        )
    }

    fn needs_traits(self) -> bool {
        matches!(
            self,
            Variable::Dominant | Variable::DominantCode | Variable::Percentile(_)
        )
    }

    fn level_of(self, row: &AnalysisRow) -> Result<String> {
        Ok(match self {
            Variable::Activity => row.activity.as_str().to_string(),
            Variable::Gender => row.gender.as_str().to_string(),
            Variable::Dominant => traits(row)?.dominant.as_str().to_string(),
            _ => unreachable!("numeric variable has no level"),
        })
    }

    fn numeric(self, row: &AnalysisRow) -> Result<f64> {
        Ok(match self {
            Variable::ActivityOrdinal => match row.activity {
                Activity::Still => 0.0,
                Activity::Walking => 1.0,
                Activity::Running => 2.0,
                Activity::InVehicle => 3.0,
            },
            Variable::Si => row.si,
            Variable::Ti => row.ti,
            Variable::Age => f64::from(row.age),
            Variable::Glasses => f64::from(u8::from(row.glasses)),
            Variable::DominantCode => traits(row)?.dominant.index() as f64,
            Variable::Percentile(t) => traits(row)?.percentile(t),
            _ => unreachable!("categorical variable is not numeric"),
        })
    }

    fn canonical_levels(self) -> Vec<String> {
        match self {
            Variable::Activity => Activity::ALL
                .iter()
                .map(|a| a.as_str().to_string())
                .collect(),
            Variable::Gender => [Gender::Female, Gender::Male]
                .iter()
                .map(|g| g.as_str().to_string())
                .collect(),
            Variable::Dominant => Trait::ALL.iter().map(|t| t.as_str().to_string()).collect(),
            _ => Vec::new(),
        }
    }

    fn dummy_name(self, level: &str) -> String {
        match self {
            Variable::Dominant => format!("dominant_{level}"),
            _ => level.to_string(),
        }
    }
}

fn traits(row: &AnalysisRow) -> Result<&crate::dataset::TraitProfile> {
    row.traits.as_ref().ok_or_else(|| {
        Error::invalid(format!(
            "participant {:?} has no personality data",
            row.participant_id
        ))
    })
}

/// One additive term: a product of one or more variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term(pub Vec<Variable>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    pub terms: Vec<Term>,
}

impl Formula {
    /// Parses `resolution ~ a*b + c:d + e` (the response may be omitted).
    pub fn parse(text: &str) -> Result<Self> {
        let rhs = match text.split_once('~') {
            Some((lhs, rhs)) => {
                let lhs = lhs.trim();
                if !matches!(lhs, "resolution" | "final_resolution" | "") {
                    return Err(Error::invalid(format!(
                        "unsupported response {lhs:?}; use resolution"
                    )));
                }
                rhs
            }
            None => text,
        };
        let mut terms: Vec<Term> = Vec::new();
        for chunk in rhs.split('+') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                return Err(Error::invalid(format!("empty term in formula {text:?}")));
            }
            if chunk == "1" {
                continue;
            }
            let crossed: Vec<Vec<Variable>> = chunk
                .split('*')
                .map(|p| {
                    p.split(':')
                        .map(Variable::parse)
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            // every non-empty subset of the crossed operands, in subset order
            for mask in 1u32..(1 << crossed.len()) {
                let mut vars = Vec::new();
                for (i, part) in crossed.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        vars.extend(part.iter().copied());
                    }
                }
                let key: HashSet<Variable> = vars.iter().copied().collect();
                if key.len() != vars.len() {
                    return Err(Error::invalid(format!(
                        "variable repeated within a term in {chunk:?}"
                    )));
                }
                if !terms
                    .iter()
                    .any(|t| t.0.iter().copied().collect::<HashSet<_>>() == key)
                {
                    terms.push(Term(vars));
                }
            }
        }
        terms.sort_by_key(|t| t.0.len());
        for t in terms.iter().filter(|t| t.0.len() > 1) {
            for v in &t.0 {
                if !terms.iter().any(|m| m.0 == [*v]) {
                    return Err(Error::invalid(format!(
                        "interaction {} lacks the main effect {}",
                        term_label(t),
                        v.name()
                    )));
                }
            }
        }
        Ok(Self { terms })
    }

    pub fn variables(&self) -> Vec<Variable> {
        let mut out: Vec<Variable> = Vec::new();
        for t in &self.terms {
            for v in &t.0 {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
        }
        out
    }
}

fn term_label(t: &Term) -> String {
    t.0.iter().map(|v| v.name()).collect::<Vec<_>>().join(":")
}

impl std::fmt::Display for Formula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rhs: Vec<String> = self.terms.iter().map(term_label).collect();
        if rhs.is_empty() {
            write!(f, "resolution ~ 1")
        } else {
            write!(f, "resolution ~ {}", rhs.join(" + "))
        }
    }
}

/// Reference level per categorical variable name (`activity`, `gender`, `dominant`).
pub type References = BTreeMap<String, String>;

/// Frozen encoding: levels and references fixed at build time so new rows
/// can be encoded identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub formula: Formula,
    /// Non-reference levels per categorical variable, in column order.
    pub levels: BTreeMap<String, Vec<String>>,
    pub references: References,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub spec: DesignSpec,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl DesignSpec {
    fn factor_columns(&self, v: Variable, row: &AnalysisRow) -> Result<(Vec<String>, Vec<f64>)> {
        if v.is_categorical() {
            let key = v.name();
            let level = v.level_of(row)?;
            let levels = &self.levels[&key];
            if level != self.references[&key] && !levels.contains(&level) {
                return Err(Error::invalid(format!("unseen level {level:?} for {key}")));
            }
            let names = levels.iter().map(|l| v.dummy_name(l)).collect();
            let vals = levels
                .iter()
                .map(|l| f64::from(u8::from(*l == level)))
                .collect();
            Ok((names, vals))
        } else {
            Ok((vec![v.name()], vec![v.numeric(row)?]))
        }
    }

    /// Column names and one encoded row.
    pub fn encode_row(&self, row: &AnalysisRow) -> Result<(Vec<String>, Vec<f64>)> {
        let mut names = vec![INTERCEPT.to_string()];
        let mut vals = vec![1.0];
        for term in &self.formula.terms {
            let mut tn = vec![String::new()];
            let mut tv = vec![1.0];
            for (i, v) in term.0.iter().enumerate() {
                let (fnames, fvals) = self.factor_columns(*v, row)?;
                let mut nn = Vec::with_capacity(tn.len() * fnames.len());
                let mut nv = Vec::with_capacity(tn.len() * fnames.len());
                for (a, av) in tn.iter().zip(&tv) {
                    for (b, bv) in fnames.iter().zip(&fvals) {
                        nn.push(if i == 0 {
                            b.clone()
                        } else {
                            format!("{a}:{b}")
                        });
                        nv.push(av * bv);
                    }
                }
                tn = nn;
                tv = nv;
            }
            names.extend(tn);
            vals.extend(tv);
        }
        Ok((names, vals))
    }

    /// Encodes rows with this spec; unseen categorical levels are an error.
    pub fn encode(&self, rows: &[AnalysisRow]) -> Result<Matrix> {
        let encoded = rows
            .iter()
            .map(|r| self.encode_row(r).map(|(_, v)| v))
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(&encoded)
    }
}

/// Builds a dummy-coded design matrix. `references` picks the reference level
/// of each categorical variable; unspecified ones default to the first
/// observed level in canonical order.
pub fn build_design(
    rows: &[AnalysisRow],
    formula: &Formula,
    references: &References,
) -> Result<DesignMatrix> {
    if rows.is_empty() {
        return Err(Error::invalid("cannot build a design from zero rows"));
    }
    let vars = formula.variables();
    for v in &vars {
        if v.needs_traits() {
            if let Some(r) = rows.iter().find(|r| r.traits.is_none()) {
                return Err(Error::invalid(format!(
                    "{} needs personality data, missing for participant {:?}",
                    v.name(),
                    r.participant_id
                )));
            }
        }
    }
    let mut levels = BTreeMap::new();
    let mut refs = References::new();
    for v in vars.iter().filter(|v| v.is_categorical()) {
        let key = v.name();
        let observed: HashSet<String> =
            rows.iter().map(|r| v.level_of(r)).collect::<Result<_>>()?;
        let ordered: Vec<String> = v
            .canonical_levels()
            .into_iter()
            .filter(|l| observed.contains(l))
            .collect();
        if ordered.len() < 2 {
            return Err(Error::invalid(format!(
                "{key} needs at least 2 observed levels, found {ordered:?}"
            )));
        }
        let reference = match references.get(&key) {
            Some(r) if ordered.contains(r) => r.clone(),
            Some(r) => {
                return Err(Error::invalid(format!(
                    "reference level {r:?} for {key} is not observed"
                )))
            }
            None => ordered[0].clone(),
        };
        levels.insert(
            key.clone(),
            ordered
                .into_iter()
                .filter(|l| *l != reference)
                .collect::<Vec<_>>(),
        );
        refs.insert(key, reference);
    }
    let spec = DesignSpec {
        formula: formula.clone(),
        levels,
        references: refs,
    };
    let names = spec.encode_row(&rows[0])?.0;
    let x = spec.encode(rows)?;
    let y = rows.iter().map(|r| f64::from(r.final_resolution)).collect();
    let design = DesignMatrix { names, x, y, spec };
    check_rank(&design)?;
    Ok(design)
}

pub(crate) fn check_rank(design: &DesignMatrix) -> Result<()> {
    if design.n() < design.p() {
        return Err(Error::RankDeficient {
            columns: design.names[design.n()..].to_vec(),
        });
    }
    let dependent = Qr::factor(&design.x)?.dependent_columns();
    if !dependent.is_empty() {
        return Err(Error::RankDeficient {
            columns: dependent.iter().map(|&i| design.names[i].clone()).collect(),
        });
    }
    Ok(())
}
