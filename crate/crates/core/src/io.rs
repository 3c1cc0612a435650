//! JSON instance files.
//!
//! Every file is an object with a `"kind"` tag. Numbers may be JSON numbers
//! (read from their literal text, so `0.1` is exactly `1/10`) or strings such
//! as `"1/3"`. Kernels are column-stochastic: `entries[r][c]` is the
//! probability of output `r` given input `c`.
//!
//! Parsing happens in two steps: the file is decoded into a [`Document`]
//! (pure data, round-trippable) and then validated into an [`Instance`].

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::feasible::GrainSet;
use crate::kernel::{Prior, StochasticKernel};
use crate::linalg::Matrix;
use crate::monopoly::MonopolyInstance;
use crate::rational::{serde_q, Q};
use crate::revelation::{AugmentedMechanism, GameInstance};
use crate::self_confirming::{CompetitorFamily, IcNotion, Provenance};

/// An exact rational as it appears in a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rational(#[serde(with = "serde_q")] pub Q);

impl From<Q> for Rational {
    fn from(x: Q) -> Self {
        Rational(x)
    }
}

fn unwrap_all(v: &[Rational]) -> Vec<Q> {
    v.iter().map(|r| r.0.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    pub entries: Vec<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col_labels: Option<Vec<String>>,
}

impl KernelDoc {
    pub fn from_kernel(k: &StochasticKernel) -> Self {
        KernelDoc {
            entries: k.matrix().to_rows().into_iter().map(|r| r.into_iter().map(Rational).collect()).collect(),
            row_labels: Some(k.row_labels().to_vec()),
            col_labels: Some(k.col_labels().to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorDoc {
    pub atoms: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelPairDoc {
    pub g: KernelDoc,
    pub h: KernelDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrainDoc {
    /// One index set per agent.
    pub sets: Vec<Vec<usize>>,
    pub epsilon: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibleDoc {
    pub kernel: KernelDoc,
    pub prior: PriorDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grain: Option<GrainDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub types: Vec<String>,
    pub messages: Vec<String>,
    /// `|messages| x |types|`.
    pub strategy: KernelDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismDoc {
    pub agents: Vec<AgentDoc>,
    pub outcomes: Vec<String>,
    /// `|O| x |joint messages|`, first agent most significant.
    pub outcome_kernel: KernelDoc,
    /// Per agent, `|O| x |joint types|`.
    pub agent_utilities: Vec<Vec<Vec<Rational>>>,
    pub designer_utility: Vec<Vec<Rational>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub provenance: Provenance,
    pub members: Vec<KernelDoc>,
}

/// Game data used to verify that competitors are incentive compatible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcCheckDoc {
    pub notion: IcNotion,
    pub type_spaces: Vec<Vec<String>>,
    pub agent_utilities: Vec<Vec<Vec<Rational>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScDoc {
    pub delta: KernelDoc,
    /// Kernel whose data pin the prior; defaults to `delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_kernel: Option<KernelDoc>,
    pub prior: PriorDoc,
    pub designer_utility: Vec<Vec<Rational>>,
    pub competitors: FamilyDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_grain_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ic_check: Option<IcCheckDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonopolyDoc {
    pub grid: Vec<Rational>,
    pub pi0: Vec<Rational>,
    /// `[price, probability]` pairs.
    pub price_support: Vec<(Rational, Rational)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Rational>,
}

impl MonopolyDoc {
    pub fn from_instance(inst: &MonopolyInstance, epsilon: Option<Q>) -> Self {
        MonopolyDoc {
            grid: inst.grid().iter().cloned().map(Rational).collect(),
            pi0: inst.pi0().atoms().iter().cloned().map(Rational).collect(),
            price_support: inst.price_support().iter().map(|(i, w)| (Rational(inst.grid()[*i].clone()), Rational(w.clone()))).collect(),
            epsilon: epsilon.map(Rational),
        }
    }
}

/// Decoded instance file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Document {
    Kernel(KernelDoc),
    Prior(PriorDoc),
    KernelPair(KernelPairDoc),
    Feasible(FeasibleDoc),
    Mechanism(MechanismDoc),
    Sc(ScDoc),
    Monopoly(MonopolyDoc),
}

const KINDS: &str = "kernel, prior, kernel-pair, feasible, mechanism, sc, monopoly";

fn decode<T: for<'de> Deserialize<'de>>(value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::schema(if path == "." { "$".to_string() } else { format!("$.{path}") }, e.into_inner().to_string())
    })
}

impl Document {
    pub fn from_value(mut value: Value) -> Result<Self> {
        let Value::Object(map) = &mut value else {
            return Err(Error::schema("$", "expected a JSON object"));
        };
        let kind = match map.remove("kind") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(Error::schema("$.kind", "expected a string")),
            None => return Err(Error::schema("$.kind", format!("missing field; one of {KINDS}"))),
        };
        Ok(match kind.as_str() {
            "kernel" => Document::Kernel(decode(value)?),
            "prior" => Document::Prior(decode(value)?),
            "kernel-pair" => Document::KernelPair(decode(value)?),
            "feasible" => Document::Feasible(decode(value)?),
            "mechanism" => Document::Mechanism(decode(value)?),
            "sc" => Document::Sc(decode(value)?),
            "monopoly" => Document::Monopoly(decode(value)?),
            other => return Err(Error::schema("$.kind", format!("unknown kind {other:?}; one of {KINDS}"))),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::schema("$", e.to_string()))?;
        Self::from_value(value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Document::Kernel(_) => "kernel",
            Document::Prior(_) => "prior",
            Document::KernelPair(_) => "kernel-pair",
            Document::Feasible(_) => "feasible",
            Document::Mechanism(_) => "mechanism",
            Document::Sc(_) => "sc",
            Document::Monopoly(_) => "monopoly",
        }
    }
}

/// Self-confirmation query with owned data.
#[derive(Debug, Clone)]
pub struct ScInstance {
    pub delta: StochasticKernel,
    pub base_kernel: StochasticKernel,
    pub prior: Prior,
    pub designer_utility: Matrix,
    pub family: CompetitorFamily,
    pub factors: Option<Vec<usize>>,
    pub schedule: Option<Vec<Q>>,
    pub max_grain_size: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct FeasibleInstance {
    pub kernel: StochasticKernel,
    pub prior: Prior,
    pub factors: Vec<usize>,
    pub grain: Option<GrainSet>,
}

/// Validated instance.
#[derive(Debug, Clone)]
pub enum Instance {
    Kernel(StochasticKernel),
    Prior(Prior),
    KernelPair { g: StochasticKernel, h: StochasticKernel },
    Feasible(FeasibleInstance),
    Mechanism(AugmentedMechanism),
    Sc(ScInstance),
    Monopoly { instance: MonopolyInstance, epsilon: Option<Q> },
}

/// Load-time options.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Renormalize kernel columns instead of rejecting them.
    pub repair: bool,
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn at(path: &str, e: Error) -> Error {
    match e {
        Error::ColumnSum { column, sum } => Error::schema(path, format!("column {column} sums to {sum}, expected 1")),
        Error::Schema { .. } => e,
        other => Error::schema(path, other.to_string()),
    }
}

fn matrix(rows: &[Vec<Rational>], path: &str) -> Result<Matrix> {
    if rows.is_empty() {
        return Err(Error::schema(path, "matrix has no rows"));
    }
    let width = rows[0].len();
    if let Some(r) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::schema(format!("{path}[{r}]"), format!("row has {} entries, expected {width}", rows[r].len())));
    }
    Matrix::from_rows(rows.iter().map(|r| unwrap_all(r)).collect()).map_err(|e| at(path, e))
}

fn kernel(doc: &KernelDoc, path: &str, opts: ParseOptions) -> Result<StochasticKernel> {
    let m = matrix(&doc.entries, &format!("{path}.entries"))?;
    let rows = doc.row_labels.clone().unwrap_or_else(|| default_labels("y", m.rows()));
    let cols = doc.col_labels.clone().unwrap_or_else(|| default_labels("x", m.cols()));
    let built = if opts.repair { StochasticKernel::normalized(m, rows, cols) } else { StochasticKernel::new(m, rows, cols) };
    built.map_err(|e| at(&format!("{path}.entries"), e))
}

fn labelled_kernel(doc: &KernelDoc, path: &str, opts: ParseOptions, rows: Vec<String>, cols: Vec<String>) -> Result<StochasticKernel> {
    let k = kernel(doc, path, opts)?;
    if k.rows() != rows.len() || k.cols() != cols.len() {
        return Err(Error::schema(
            format!("{path}.entries"),
            format!("kernel is {}x{}, expected {}x{}", k.rows(), k.cols(), rows.len(), cols.len()),
        ));
    }
    let rows = doc.row_labels.clone().unwrap_or(rows);
    let cols = doc.col_labels.clone().unwrap_or(cols);
    k.with_labels(rows, cols).map_err(|e| at(path, e))
}

fn prior(doc: &PriorDoc, path: &str) -> Result<Prior> {
    let atoms = unwrap_all(&doc.atoms);
    let labels = doc.labels.clone().unwrap_or_else(|| default_labels("t", atoms.len()));
    Prior::new(atoms, labels).map_err(|e| at(&format!("{path}.atoms"), e))
}

fn same_inputs(k: &StochasticKernel, n: usize, path: &str) -> Result<()> {
    if k.cols() != n {
        return Err(Error::schema(path, format!("kernel has {} inputs, prior has {n} atoms", k.cols())));
    }
    Ok(())
}

fn game_from(
    type_spaces: Vec<Vec<String>>,
    message_spaces: Vec<Vec<String>>,
    outcomes: Vec<String>,
    utilities: &[Vec<Vec<Rational>>],
    designer: Matrix,
    path: &str,
) -> Result<GameInstance> {
    let agent_utilities = utilities
        .iter()
        .enumerate()
        .map(|(i, u)| matrix(u, &format!("{path}.agent_utilities[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    GameInstance::new(type_spaces, message_spaces, outcomes, agent_utilities, designer).map_err(|e| at(path, e))
}

impl Instance {
    pub fn from_document(doc: &Document, opts: ParseOptions) -> Result<Self> {
        Ok(match doc {
            Document::Kernel(k) => Instance::Kernel(kernel(k, "$", opts)?),
            Document::Prior(p) => Instance::Prior(prior(p, "$")?),
            Document::KernelPair(pair) => {
                let g = kernel(&pair.g, "$.g", opts)?;
                let h = kernel(&pair.h, "$.h", opts)?;
                if g.cols() != h.cols() {
                    return Err(Error::schema("$.h", format!("h has {} inputs, g has {}", h.cols(), g.cols())));
                }
                Instance::KernelPair { g, h }
            }
            Document::Feasible(f) => {
                let prior = prior(&f.prior, "$.prior")?;
                let kernel = kernel(&f.kernel, "$.kernel", opts)?;
                same_inputs(&kernel, prior.dim(), "$.kernel")?;
                let rows = kernel.row_labels().to_vec();
                let kernel = kernel.with_labels(rows, prior.labels().to_vec()).map_err(|e| at("$.kernel", e))?;
                let factors = f.factors.clone().unwrap_or_else(|| vec![prior.dim()]);
                if factors.is_empty() || factors.iter().product::<usize>() != prior.dim() {
                    return Err(Error::schema("$.factors", "factor sizes must multiply to the number of atoms"));
                }
                let grain = match &f.grain {
                    Some(g) => {
                        let set = GrainSet::new(g.sets.clone(), g.epsilon.0.clone());
                        set.validate(&prior, &factors).map_err(|e| at("$.grain", e))?;
                        Some(set)
                    }
                    None => None,
                };
                Instance::Feasible(FeasibleInstance { kernel, prior, factors, grain })
            }
            Document::Mechanism(m) => Instance::Mechanism(mechanism(m, opts)?),
            Document::Sc(s) => Instance::Sc(sc(s, opts)?),
            Document::Monopoly(m) => {
                let instance = MonopolyInstance::new(
                    unwrap_all(&m.grid),
                    unwrap_all(&m.pi0),
                    m.price_support.iter().map(|(p, w)| (p.0.clone(), w.0.clone())).collect(),
                )
                .map_err(|e| at("$", e))?;
                Instance::Monopoly { instance, epsilon: m.epsilon.as_ref().map(|e| e.0.clone()) }
            }
        })
    }
}

fn mechanism(m: &MechanismDoc, opts: ParseOptions) -> Result<AugmentedMechanism> {
    if m.agents.is_empty() {
        return Err(Error::schema("$.agents", "at least one agent is required"));
    }
    let types: Vec<Vec<String>> = m.agents.iter().map(|a| a.types.clone()).collect();
    let messages: Vec<Vec<String>> = m.agents.iter().map(|a| a.messages.clone()).collect();
    if m.agent_utilities.len() != m.agents.len() {
        return Err(Error::schema("$.agent_utilities", format!("{} tables for {} agents", m.agent_utilities.len(), m.agents.len())));
    }
    let designer = matrix(&m.designer_utility, "$.designer_utility")?;
    let game = Arc::new(game_from(types.clone(), messages.clone(), m.outcomes.clone(), &m.agent_utilities, designer, "$")?);
    let strategies = m
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| labelled_kernel(&a.strategy, &format!("$.agents[{i}].strategy"), opts, messages[i].clone(), types[i].clone()))
        .collect::<Result<Vec<_>>>()?;
    let omega = labelled_kernel(&m.outcome_kernel, "$.outcome_kernel", opts, m.outcomes.clone(), game.joint_message_labels())?;
    AugmentedMechanism::new(game, omega, strategies).map_err(|e| at("$", e))
}

fn sc(s: &ScDoc, opts: ParseOptions) -> Result<ScInstance> {
    let prior = prior(&s.prior, "$.prior")?;
    let n = prior.dim();
    let delta = kernel(&s.delta, "$.delta", opts)?;
    same_inputs(&delta, n, "$.delta")?;
    let outcomes = delta.row_labels().to_vec();
    let base_kernel = match &s.base_kernel {
        Some(k) => kernel(k, "$.base_kernel", opts)?,
        None => delta.clone(),
    };
    same_inputs(&base_kernel, n, "$.base_kernel")?;
    let u0 = matrix(&s.designer_utility, "$.designer_utility")?;
    if u0.rows() != delta.rows() || u0.cols() != n {
        return Err(Error::schema(
            "$.designer_utility",
            format!("table is {}x{}, expected {}x{n}", u0.rows(), u0.cols(), delta.rows()),
        ));
    }
    let members = s
        .competitors
        .members
        .iter()
        .enumerate()
        .map(|(i, k)| labelled_kernel(k, &format!("$.competitors.members[{i}]"), opts, outcomes.clone(), delta.col_labels().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let family = match &s.ic_check {
        None => CompetitorFamily::unchecked(members, s.competitors.provenance),
        Some(ic) => {
            let game = game_from(ic.type_spaces.clone(), ic.type_spaces.clone(), outcomes.clone(), &ic.agent_utilities, u0.clone(), "$.ic_check")?;
            let joint = game.joint_type_labels();
            if joint.len() != n {
                return Err(Error::schema("$.ic_check.type_spaces", format!("{} joint types for {n} prior atoms", joint.len())));
            }
            let game = Arc::new(game);
            let members = members
                .into_iter()
                .map(|k| k.with_labels(outcomes.clone(), joint.clone()))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| at("$.competitors", e))?;
            CompetitorFamily::checked(&game, members, ic.notion, s.competitors.provenance).map_err(|e| at("$.competitors", e))?
        }
    };
    if let Some(f) = &s.factors {
        if f.is_empty() || f.iter().product::<usize>() != n {
            return Err(Error::schema("$.factors", "factor sizes must multiply to the number of atoms"));
        }
    }
    Ok(ScInstance {
        delta,
        base_kernel,
        prior,
        designer_utility: u0,
        family,
        factors: s.factors.clone(),
        schedule: s.schedule.as_ref().map(|v| unwrap_all(v)),
        max_grain_size: s.max_grain_size,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn load_document(path: &Path) -> Result<Document> {
    Document::from_json(&read_text(path)?)
}

/// Reads, decodes and validates an instance file.
pub fn parse_instance(path: &Path, opts: ParseOptions) -> Result<Instance> {
    Instance::from_document(&load_document(path)?, opts)
}
