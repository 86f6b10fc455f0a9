//! The versioned parameter grids of the acceptance suite, with the cases
//! expected to fail.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::KrallKind;
use crate::moments::{FamilySpec, LinearPoly};
use crate::report::Tolerances;

const BUILTIN: &str = include_str!("../manifest.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub tolerances: ManifestTolerances,
    pub rank_dichotomy: FamilyGrid,
    pub mh_identity: FamilyGrid,
    pub functional_relation: RelationGrid,
    pub chebyshev: ChebyshevGrid,
    pub counterexample: CounterexampleGrid,
    pub favard: FavardGrid,
    pub adjacent: AdjacentGrid,
    pub moments: MomentGrid,
    pub krall_gates: GateGrid,
    #[serde(default)]
    pub expected: Vec<Expectation>,
    #[serde(default)]
    pub unattainable: Vec<Expectation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestTolerances {
    pub rank: f64,
    pub res: f64,
    /// Tolerance of the exact constructions (counterexample, moments).
    pub tight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyGrid {
    pub max_degree: usize,
    pub families: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationPair {
    pub v: String,
    /// `[a_1, …, a_d, b]` for `λ = a·x + b`.
    pub lambda: Vec<f64>,
}

impl RelationPair {
    pub fn lambda(&self) -> Result<LinearPoly> {
        let (b, a) = self
            .lambda
            .split_last()
            .ok_or_else(|| Error::Parse("empty λ".into()))?;
        Ok(LinearPoly::new(a.to_vec(), *b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationGrid {
    pub max_degree: usize,
    pub pairs: Vec<RelationPair>,
    pub lambda_families: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevGrid {
    pub max_degree: usize,
    pub kinds: Vec<u32>,
    pub rho: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleGrid {
    pub n_min: usize,
    pub n_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FavardGrid {
    pub max_degree: usize,
    pub functionals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacentCase {
    pub family: String,
    pub max_degree: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacentGrid {
    pub cases: Vec<AdjacentCase>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentGrid {
    pub max_degree: usize,
    pub nodes: usize,
    pub simplex: Vec<Vec<f64>>,
    pub disk: Vec<f64>,
    pub laguerre: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateKind {
    pub family: String,
    pub alpha: f64,
    #[serde(default)]
    pub beta: Option<f64>,
}

impl GateKind {
    pub fn kind(&self) -> Result<KrallKind> {
        match (self.family.as_str(), self.beta) {
            ("krall-laguerre", None) => Ok(KrallKind::Laguerre { alpha: self.alpha }),
            ("krall-jacobi", Some(beta)) => Ok(KrallKind::Jacobi {
                alpha: self.alpha,
                beta,
            }),
            (f, _) => Err(Error::Parse(format!("bad gate family `{f}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateGrid {
    pub max_degree: usize,
    pub scan: Scan,
    pub kinds: Vec<GateKind>,
}

/// A case, optionally narrowed to one named check at one degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub case: String,
    #[serde(default)]
    pub check: Option<String>,
    #[serde(default)]
    pub degree: Option<usize>,
    pub reason: String,
}

impl Expectation {
    fn covers(&self, case: &str, check: Option<&str>, degree: Option<usize>) -> bool {
        same_case(&self.case, case)
            && (self.check.is_none() || self.check.as_deref() == check)
            && (self.degree.is_none() || self.degree == degree)
    }
}

/// Equality of family strings after parsing, so parameter order and
/// number formatting do not matter.
fn same_case(a: &str, b: &str) -> bool {
    match (a.parse::<FamilySpec>(), b.parse::<FamilySpec>()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

impl Manifest {
    /// The manifest shipped with the crate.
    pub fn builtin() -> Manifest {
        Manifest::parse(BUILTIN).expect("built-in manifest parses")
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let m: Manifest = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Manifest::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let cases = self
            .rank_dichotomy
            .families
            .iter()
            .chain(&self.mh_identity.families)
            .chain(&self.favard.functionals)
            .chain(&self.functional_relation.lambda_families)
            .chain(self.functional_relation.pairs.iter().map(|p| &p.v))
            .chain(self.adjacent.cases.iter().map(|c| &c.family));
        for c in cases {
            c.parse::<FamilySpec>()?;
        }
        for p in &self.functional_relation.pairs {
            p.lambda()?;
        }
        for g in &self.krall_gates.kinds {
            g.kind()?;
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rank: self.tolerances.rank,
            res: self.tolerances.res,
        }
    }

    /// The entry predicting that `case` (or one of its checks) fails.
    pub fn expected_failure(&self, case: &str, check: Option<&str>, degree: Option<usize>) -> Option<&Expectation> {
        self.expected.iter().find(|e| e.covers(case, check, degree))
    }

    /// The entry recording that `case` fails a check although the claim
    /// says it should pass.
    pub fn unattainable(&self, case: &str, check: Option<&str>) -> Option<&Expectation> {
        self.unattainable.iter().find(|e| e.covers(case, check, None))
    }
}
