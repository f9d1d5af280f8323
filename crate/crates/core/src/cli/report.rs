use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::config::{RunConfig, Tolerances};
use crate::markov::MarkovReport;

/// A float written as a decimal string with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Num17(pub f64);

impl fmt::Display for Num17 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // -0.0 prints as 0
        write!(f, "{:.16e}", self.0 + 0.0)
    }
}

impl From<f64> for Num17 {
    fn from(v: f64) -> Self {
        Num17(v)
    }
}

impl Serialize for Num17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Num17 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num17;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a decimal string")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num17, E> {
                v.trim()
                    .parse()
                    .map(Num17)
                    .map_err(|_| E::custom(format!("bad number {v:?}")))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num17, E> {
                Ok(Num17(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num17, E> {
                Ok(Num17(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num17, E> {
                Ok(Num17(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

/// One asserted bound and the value measured against it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub value: Num17,
    pub relation: Relation,
    pub bound: Num17,
    pub passed: bool,
}

impl Assertion {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, bound: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => value <= bound,
            Relation::AtLeast => value >= bound,
            Relation::Above => value > bound,
        };
        Self {
            name: name.into(),
            value: Num17(value),
            relation,
            bound: Num17(bound),
            passed,
        }
    }

    /// A boolean check reported as `value ≥ 1`.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Relation::AtLeast, 1.0)
    }
}

pub fn all_passed(assertions: &[Assertion]) -> bool {
    assertions.iter().all(|a| a.passed)
}

fn assertions_csv(assertions: &[Assertion]) -> String {
    let mut out = String::from("name,value,relation,bound,passed\n");
    for a in assertions {
        let rel = match a.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
        };
        out += &format!("{},{},{},{},{}\n", a.name, a.value, rel, a.bound, a.passed);
    }
    out
}

/// Common behavior of command reports.
pub trait Report: Serialize {
    fn assertions(&self) -> &[Assertion];

    fn passed(&self) -> bool {
        all_passed(self.assertions())
    }

    fn to_csv(&self) -> String {
        assertions_csv(self.assertions())
    }
}

/// The run configuration as echoed in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    #[serde(rename = "N")]
    pub n: usize,
    pub s: i64,
    pub phi: Vec<u8>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub safe_margin: usize,
    #[serde(rename = "K_weights")]
    pub k_weights: usize,
    pub resolution: usize,
    pub markov_trials: usize,
    pub counterexample_k: Vec<usize>,
    pub tolerances: Tolerances,
    pub seed: u64,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(c: &RunConfig) -> Self {
        Self {
            n: c.n,
            s: c.s,
            phi: c.phi.clone(),
            m: c.m,
            k: c.k,
            safe_margin: c.safe_margin,
            k_weights: c.k_weights,
            resolution: c.resolution,
            markov_trials: c.markov_trials,
            counterexample_k: c.counterexample_k.clone(),
            tolerances: c.tolerances.clone(),
            seed: c.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub n: i64,
    pub a_n: Num17,
    pub running_sum: Num17,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffsReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub resolution: usize,
    pub normalized: bool,
    pub sum: Num17,
    pub max_imaginary: Num17,
    pub max_asymmetry: Num17,
    pub max_resolution_gap: Num17,
    pub rows: Vec<CoefficientRow>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl Report for CoeffsReport {
    fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("n,a_n,running_sum\n");
        for r in &self.rows {
            out += &format!("{},{},{}\n", r.n, r.a_n, r.running_sum);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub operator: String,
    pub max_deviation: Num17,
    pub columns: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructReport {
    pub config_echo: ConfigEcho,
    pub dimension: usize,
    pub grid_dimension: usize,
    pub safe_dimension: usize,
    pub skew_ergodic: bool,
    pub weights: Vec<Num17>,
    pub weight_sum: Num17,
    pub oracle_checks: Vec<OracleCheck>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl Report for ConstructReport {
    fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("operator,max_deviation,columns\n");
        for c in &self.oracle_checks {
            out += &format!("{},{},{}\n", c.operator, c.max_deviation, c.columns);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovSummary {
    pub constants_deviation: Num17,
    pub adjoint_constants_deviation: Num17,
    pub min_image_entry: Num17,
    pub norm: Num17,
    pub norm_is_exact: bool,
    pub trials: usize,
    pub passed: bool,
}

impl From<&MarkovReport> for MarkovSummary {
    fn from(r: &MarkovReport) -> Self {
        Self {
            constants_deviation: r.constants_deviation.into(),
            adjoint_constants_deviation: r.adjoint_constants_deviation.into(),
            min_image_entry: r.min_image_entry.into(),
            norm: r.norm.into(),
            norm_is_exact: r.norm_is_exact,
            trials: r.trials,
            passed: r.passed(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovFlags {
    #[serde(rename = "J")]
    pub j: MarkovSummary,
    #[serde(rename = "J_adjoint")]
    pub j_adjoint: MarkovSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginSummary {
    #[serde(rename = "J")]
    pub j: Num17,
    #[serde(rename = "J_adjoint")]
    pub j_adjoint: Num17,
    pub empty_sector: Num17,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config_echo: ConfigEcho,
    pub safe_dimension: usize,
    pub intertwine_residual: Num17,
    pub intertwine_max_column: Num17,
    pub markov_flags: MarkovFlags,
    pub kernel_margins: MarginSummary,
    pub xi_max_dev: Num17,
    pub zeta_max_dev: Num17,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl Report for VerifyReport {
    fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelScanRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub safe_margin: usize,
    #[serde(rename = "J")]
    pub j: Num17,
    #[serde(rename = "J_adjoint")]
    pub j_adjoint: Num17,
    pub empty_sector: Num17,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelScanReport {
    pub config_echo: ConfigEcho,
    pub rows: Vec<KernelScanRow>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl Report for KernelScanReport {
    fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("K,M,safe_margin,J,J_adjoint,empty_sector\n");
        for r in &self.rows {
            out += &format!(
                "{},{},{},{},{},{}\n",
                r.k, r.m, r.safe_margin, r.j, r.j_adjoint, r.empty_sector
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub g_norm: Num17,
    pub g_kernel_residual: Num17,
    pub f_norm: Num17,
    pub measured: Num17,
    pub bound: Num17,
    pub weight_sum: Num17,
    pub weight_deficit: Num17,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleCommandReport {
    pub config_echo: ConfigEcho,
    pub runs: Vec<CounterexampleRow>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl Report for CounterexampleCommandReport {
    fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("K,M,g_norm,f_norm,measured,bound,weight_sum,weight_deficit\n");
        for r in &self.runs {
            out += &format!(
                "{},{},{},{},{},{},{},{}\n",
                r.k, r.m, r.g_norm, r.f_norm, r.measured, r.bound, r.weight_sum, r.weight_deficit
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSummary {
    /// In turns, `[0, 1)`.
    pub angle: Num17,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub dimension: usize,
    pub lines: Vec<LineSummary>,
    pub max_multiplicity: usize,
    pub certified_multiplicity: usize,
    pub multiplicity_certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub seed: u64,
    pub left: ProfileSummary,
    pub right: ProfileSummary,
    pub equivalent: bool,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl Report for SpectralReport {
    fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("operator,angle,multiplicity\n");
        for (name, p) in [("left", &self.left), ("right", &self.right)] {
            for l in &p.lines {
                out += &format!("{name},{},{}\n", l.angle, l.multiplicity);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JoiningsReport {
    pub left: crate::joinings::SystemSpec,
    pub right: crate::joinings::SystemSpec,
    /// Dimension of the homogeneous solution space; 0 means disjoint.
    pub d: usize,
    pub disjoint: bool,
    /// The product joining, exact when both measures are rational.
    pub particular: Vec<Vec<String>>,
    /// Homogeneous directions as rational strings.
    pub basis: Vec<Vec<Vec<String>>>,
    /// Markov operators `L²(left) → L²(right)` of the product joining and of
    /// a seeded vertex of the joining polytope.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub markov: Option<Vec<Vec<Vec<Num17>>>>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl Report for JoiningsReport {
    fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }
}
