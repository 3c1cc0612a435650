//! Subcommand dispatch, report emission, corpus suites and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::feasible::{dimension, feasible_set_factored, restrict_grain, vertices, PolytopeExport, DEFAULT_MAX_AMBIENT, DEFAULT_VERTEX_CAP};
use crate::io::{parse_instance, read_text, FeasibleInstance, Instance, ParseOptions, ScInstance};
use crate::kernel::{blackwell_more_informative, compound, kernel_equivalent, kernel_more_informative, kernel_order_witness, null_space, Prior, StochasticKernel};
use crate::lp::solver_cap;
use crate::monopoly::{check_characterization, oracle_robust_sc, revenue_curve, Characterization, GrainCap, MonopolyInstance, OracleVerdict};
use crate::rational::{format_rational, parse_rational, Q};
use crate::revelation::{
    check_equivalence, is_dominant_strategy_eq, is_ex_post_eq, represent_deterministic, search_strong_representation, synthesize_weak_filter,
    AugmentedMechanism, FilterCase, StrongSearchMode, StrongSearchOutcome, STRONG_SEARCH_MAX_TYPES,
};
use crate::self_confirming::{auto_schedule, is_robustly_self_confirming, GrainBudget, LevelStatus, RobustQuery, RobustVerdict};

/// Strong-search budget when `--cap` is not given.
pub const DEFAULT_STRONG_BUDGET: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Reveal,
    KernelOrder,
    Blackwell,
    Feasible,
    Sc,
    Monopoly,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Reveal => "reveal",
            Command::KernelOrder => "kernel-order",
            Command::Blackwell => "blackwell",
            Command::Feasible => "feasible",
            Command::Sc => "sc",
            Command::Monopoly => "monopoly",
        }
    }

    fn expected_kind(self) -> &'static str {
        match self {
            Command::Reveal => "mechanism",
            Command::KernelOrder | Command::Blackwell => "kernel-pair",
            Command::Feasible => "feasible",
            Command::Sc => "sc",
            Command::Monopoly => "monopoly",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

/// Outcome class of a run, mapped onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT_ERROR: i32 = 3;

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => EXIT_PASS,
            Status::Fail => EXIT_FALSE,
            Status::Inconclusive => EXIT_INCONCLUSIVE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Options {
    pub seed: Option<u64>,
    /// Enumeration / search budget for the command.
    pub cap: Option<usize>,
    pub epsilon: Option<Q>,
    pub repair: bool,
    pub format: Format,
}

fn fmt_vec(v: &[Q]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn fmt_prior(p: &Prior) -> Vec<String> {
    fmt_vec(p.atoms())
}

fn fmt_kernel(k: &StochasticKernel) -> Vec<Vec<String>> {
    k.matrix().to_rows().iter().map(|r| fmt_vec(r)).collect()
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PriorPair {
    pub mu0: Vec<String>,
    pub mu_bar: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelOrderReport {
    pub command: &'static str,
    pub verdict: Status,
    pub g_over_h: bool,
    pub h_over_g: bool,
    pub relation: &'static str,
    pub null_space_g: Vec<Vec<String>>,
    pub null_space_h: Vec<Vec<String>>,
    /// Priors `g` cannot distinguish but `h` can (present when `g ⪰ h` fails).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_against_g_over_h: Option<PriorPair>,
    /// Priors `h` cannot distinguish but `g` can (present when `h ⪰ g` fails).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_against_h_over_g: Option<PriorPair>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlackwellReport {
    pub command: &'static str,
    pub verdict: Status,
    pub g_over_h: bool,
    pub kernel_order: bool,
    /// `S` with `h = S·g`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub garbling: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentFilter {
    pub agent: usize,
    pub case: &'static str,
    pub kernel_equal: bool,
    pub filter: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeterministicReport {
    /// Per agent, the representative type each type is sent to.
    pub selectors: Vec<Vec<usize>>,
    pub delta_preserved: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RevealReport {
    pub command: &'static str,
    pub verdict: Status,
    pub equivalent: bool,
    pub joint_kernel_equal: bool,
    pub dominant_strategy: bool,
    pub ex_post: bool,
    pub agents: Vec<AgentFilter>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<DeterministicReport>,
    pub strong: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrainReport {
    pub epsilon: String,
    pub sets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibleReport {
    pub command: &'static str,
    pub verdict: Status,
    pub ambient: usize,
    pub dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grain: Option<GrainReport>,
    /// Omitted when the ambient dimension is too large to enumerate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<String>>>,
    pub truncated: bool,
    pub polytope: PolytopeExport,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub epsilon: String,
    pub status: &'static str,
    pub sets_checked: usize,
    pub incomplete: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScReport {
    pub command: &'static str,
    pub verdict: RobustVerdict,
    pub level: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_belief: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_grain: Option<GrainReport>,
    pub incomplete: bool,
    pub self_confirming: bool,
    pub competitors: usize,
    pub provenance: crate::self_confirming::Provenance,
    pub ic_checked: Option<crate::self_confirming::IcNotion>,
    pub levels: Vec<LevelReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSection {
    pub verdict: OracleVerdict,
    pub epsilon: String,
    /// Grain set as grid prices, ascending.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_grain: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_belief: Option<Vec<String>>,
    pub sets_checked: usize,
    pub incomplete: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonopolyReport {
    pub command: &'static str,
    pub verdict: OracleVerdict,
    pub characterization: Characterization,
    pub characterization_holds: bool,
    pub oracle: OracleSection,
    pub agree: bool,
    /// `(p, revenue under π₀)`, ascending in `p`.
    pub revenue_curve: Vec<[String; 2]>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    KernelOrder(KernelOrderReport),
    Blackwell(BlackwellReport),
    Reveal(RevealReport),
    Feasible(FeasibleReport),
    Sc(ScReport),
    Monopoly(MonopolyReport),
}

impl Report {
    pub fn status(&self) -> Status {
        let robust = |v: OracleVerdict| match v {
            OracleVerdict::Robust => Status::Pass,
            OracleVerdict::NotRobust => Status::Fail,
            OracleVerdict::Inconclusive => Status::Inconclusive,
        };
        match self {
            Report::KernelOrder(r) => r.verdict,
            Report::Blackwell(r) => r.verdict,
            Report::Reveal(r) => r.verdict,
            Report::Feasible(r) => r.verdict,
            Report::Sc(r) => match r.verdict {
                RobustVerdict::Robust => Status::Pass,
                RobustVerdict::NotRobust => Status::Fail,
                RobustVerdict::Inconclusive => Status::Inconclusive,
            },
            Report::Monopoly(r) => robust(r.verdict),
        }
    }

    /// One short token per verdict, recorded in run manifests.
    pub fn verdicts(&self) -> Vec<String> {
        let s = serde_json::to_value(self.status()).expect("status serializes");
        let mut out = vec![s.as_str().unwrap_or_default().to_string()];
        if let Report::Monopoly(m) = self {
            out.push(format!("characterization={}", m.characterization_holds));
        }
        out
    }

    fn text(&self) -> String {
        let mut s = String::new();
        match self {
            Report::KernelOrder(r) => {
                let _ = writeln!(s, "g over h: {}; h over g: {}", yes(r.g_over_h), yes(r.h_over_g));
                let _ = writeln!(s, "relation: {}", r.relation);
            }
            Report::Blackwell(r) => {
                let _ = writeln!(s, "g Blackwell over h: {} (kernel order: {})", yes(r.g_over_h), yes(r.kernel_order));
            }
            Report::Reveal(r) => {
                let cases: Vec<&str> = r.agents.iter().map(|a| a.case).collect();
                let _ = writeln!(s, "weak representation equivalent: {} (filters: {})", yes(r.equivalent), cases.join(", "));
                let _ = writeln!(s, "dominant strategy: {}; ex post: {}; strong filter: {}", yes(r.dominant_strategy), yes(r.ex_post), r.strong);
            }
            Report::Feasible(r) => {
                let count = r.vertices.as_ref().map(|v| v.len().to_string()).unwrap_or_else(|| "not enumerated".into());
                let _ = writeln!(s, "feasible priors: dimension {} in {} atoms", r.dimension, r.ambient);
                let _ = writeln!(s, "vertices: {count}{}", if r.truncated { " (truncated)" } else { "" });
            }
            Report::Sc(r) => {
                let _ = writeln!(s, "robust self-confirmation: {} at level {}", label(r.verdict), r.level.as_deref().unwrap_or("none"));
                let _ = writeln!(s, "self-confirming without grain: {} against {} competitors", yes(r.self_confirming), r.competitors);
            }
            Report::Monopoly(r) => {
                let c = &r.characterization;
                let _ = writeln!(
                    s,
                    "characterization: {} (equal revenue: {}, local maxima: {})",
                    if r.characterization_holds { "holds" } else { "fails" },
                    yes(c.cond_equal_revenue),
                    yes(c.cond_local_max)
                );
                let failing = r.oracle.failing_grain.as_ref().map(|a| format!(", failing grain {{{}}}", a.join(","))).unwrap_or_default();
                let _ = writeln!(s, "oracle at eps={}: {}{failing}", r.oracle.epsilon, label(r.verdict));
            }
        }
        s
    }

    fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        match self {
            Report::KernelOrder(r) => (
                vec!["relation", "holds"],
                vec![vec!["g_over_h".into(), r.g_over_h.to_string()], vec!["h_over_g".into(), r.h_over_g.to_string()]],
            ),
            Report::Blackwell(r) => (vec!["row", "garbling"], {
                r.garbling.iter().flatten().enumerate().map(|(i, row)| vec![i.to_string(), row.join(" ")]).collect()
            }),
            Report::Reveal(r) => (
                vec!["agent", "case", "kernel_equal"],
                r.agents.iter().map(|a| vec![a.agent.to_string(), a.case.to_string(), a.kernel_equal.to_string()]).collect(),
            ),
            Report::Feasible(r) => (
                vec!["vertex", "atoms"],
                r.vertices.iter().flatten().enumerate().map(|(i, v)| vec![i.to_string(), v.join(" ")]).collect(),
            ),
            Report::Sc(r) => (
                vec!["epsilon", "status", "sets_checked", "incomplete"],
                r.levels
                    .iter()
                    .map(|l| vec![l.epsilon.clone(), l.status.to_string(), l.sets_checked.to_string(), l.incomplete.to_string()])
                    .collect(),
            ),
            Report::Monopoly(r) => (vec!["p", "revenue_pi0"], r.revenue_curve.iter().map(|[p, v]| vec![p.clone(), v.clone()]).collect()),
        }
    }
}

fn label<T: Serialize>(v: T) -> String {
    serde_json::to_value(v).ok().and_then(|x| x.as_str().map(str::to_string)).unwrap_or_default()
}

/// Serializes a report. JSON keeps struct field order; CSV is a single
/// table; text is a short human summary.
pub fn emit_report(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("reports serialize");
            out.push(b'\n');
            out
        }
        Format::Text => report.text().into_bytes(),
        Format::Csv => {
            let (header, rows) = report.table();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).expect("in-memory write");
            for row in rows {
                w.write_record(&row).expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
    }
}

fn wrong_kind(cmd: Command, inst: &Instance) -> Error {
    let got = match inst {
        Instance::Kernel(_) => "kernel",
        Instance::Prior(_) => "prior",
        Instance::KernelPair { .. } => "kernel-pair",
        Instance::Feasible(_) => "feasible",
        Instance::Mechanism(_) => "mechanism",
        Instance::Sc(_) => "sc",
        Instance::Monopoly { .. } => "monopoly",
    };
    Error::schema("$.kind", format!("`{}` expects kind {:?}, got {got:?}", cmd.name(), cmd.expected_kind()))
}

pub fn run_command(cmd: Command, inst: &Instance, opts: &Options) -> Result<Report> {
    match (cmd, inst) {
        (Command::KernelOrder, Instance::KernelPair { g, h }) => kernel_order(g, h).map(Report::KernelOrder),
        (Command::Blackwell, Instance::KernelPair { g, h }) => blackwell(g, h).map(Report::Blackwell),
        (Command::Reveal, Instance::Mechanism(am)) => reveal(am, opts).map(Report::Reveal),
        (Command::Feasible, Instance::Feasible(f)) => feasible(f, opts).map(Report::Feasible),
        (Command::Sc, Instance::Sc(s)) => sc(s, opts).map(Report::Sc),
        (Command::Monopoly, Instance::Monopoly { instance, epsilon }) => {
            monopoly(instance, opts.epsilon.clone().or_else(|| epsilon.clone()), opts).map(Report::Monopoly)
        }
        _ => Err(wrong_kind(cmd, inst)),
    }
}

fn pair((a, b): (Prior, Prior)) -> PriorPair {
    PriorPair { mu0: fmt_prior(&a), mu_bar: fmt_prior(&b) }
}

fn kernel_order(g: &StochasticKernel, h: &StochasticKernel) -> Result<KernelOrderReport> {
    let g_over_h = kernel_more_informative(g, h)?;
    let h_over_g = kernel_more_informative(h, g)?;
    let relation = match (g_over_h, h_over_g) {
        (true, true) => "equivalent",
        (true, false) => "g-strictly-finer",
        (false, true) => "h-strictly-finer",
        (false, false) => "incomparable",
    };
    let basis = |k: &StochasticKernel| null_space(k).basis_vectors.iter().map(|v| fmt_vec(v)).collect();
    Ok(KernelOrderReport {
        command: Command::KernelOrder.name(),
        verdict: if g_over_h { Status::Pass } else { Status::Fail },
        g_over_h,
        h_over_g,
        relation,
        null_space_g: basis(g),
        null_space_h: basis(h),
        witness_against_g_over_h: kernel_order_witness(g, h)?.map(pair),
        witness_against_h_over_g: kernel_order_witness(h, g)?.map(pair),
    })
}

fn blackwell(g: &StochasticKernel, h: &StochasticKernel) -> Result<BlackwellReport> {
    let garbling = blackwell_more_informative(g, h)?;
    Ok(BlackwellReport {
        command: Command::Blackwell.name(),
        verdict: if garbling.is_some() { Status::Pass } else { Status::Fail },
        g_over_h: garbling.is_some(),
        kernel_order: kernel_more_informative(g, h)?,
        garbling: garbling.as_ref().map(fmt_kernel),
    })
}

fn case_name(c: FilterCase) -> &'static str {
    match c {
        FilterCase::EmbedMessages => "embed-messages",
        FilterCase::FullyRevealing => "fully-revealing",
        FilterCase::RowReduction => "row-reduction",
        FilterCase::Deterministic => "deterministic",
        FilterCase::Searched => "searched",
    }
}

fn reveal(am: &AugmentedMechanism, opts: &Options) -> Result<RevealReport> {
    let fd = synthesize_weak_filter(am)?;
    let agents = fd
        .filters
        .iter()
        .zip(&fd.cases)
        .enumerate()
        .map(|(i, (phi, case))| {
            Ok(AgentFilter { agent: i, case: case_name(*case), kernel_equal: kernel_equivalent(phi, &am.strategies()[i])?, filter: fmt_kernel(phi) })
        })
        .collect::<Result<Vec<_>>>()?;
    let joint_kernel_equal = kernel_equivalent(&am.joint_strategy(), &fd.joint_filter())?;
    let equivalent = check_equivalence(am, &fd)?;
    let deterministic = if am.is_deterministic() {
        let det = represent_deterministic(am)?;
        let selectors = det.filters.iter().map(|f| f.deterministic_map().expect("selectors are pure")).collect();
        let delta_preserved = compound(&det.delta, &det.joint_filter())?.matrix() == det.delta.matrix();
        Some(DeterministicReport { selectors, delta_preserved })
    } else {
        None
    };
    let small = (0..am.game().agent_count()).all(|i| am.game().type_space(i).len() <= STRONG_SEARCH_MAX_TYPES);
    let strong = if !small {
        "skipped"
    } else {
        let mode = opts.seed.map_or(StrongSearchMode::Exhaustive, |seed| StrongSearchMode::Randomized { seed });
        match search_strong_representation(am, opts.cap.unwrap_or(DEFAULT_STRONG_BUDGET), mode)? {
            StrongSearchOutcome::Found(_) => "found",
            StrongSearchOutcome::NoneInDeterministicClass => "none-in-deterministic-class",
            StrongSearchOutcome::BudgetExhausted => "budget-exhausted",
        }
    };
    let ok = equivalent && agents.iter().all(|a| a.kernel_equal) && deterministic.as_ref().is_none_or(|d| d.delta_preserved);
    Ok(RevealReport {
        command: Command::Reveal.name(),
        verdict: if ok { Status::Pass } else { Status::Fail },
        equivalent,
        joint_kernel_equal,
        dominant_strategy: is_dominant_strategy_eq(am).holds,
        ex_post: is_ex_post_eq(am).holds,
        agents,
        deterministic,
        strong,
    })
}

fn feasible(f: &FeasibleInstance, opts: &Options) -> Result<FeasibleReport> {
    let mut polytope = feasible_set_factored(&f.kernel, &f.prior, &f.factors)?;
    if let Some(grain) = &f.grain {
        polytope = restrict_grain(&polytope, grain, &f.prior)?;
    }
    let (verts, truncated) = if polytope.ambient() <= DEFAULT_MAX_AMBIENT {
        let v = vertices(&polytope, opts.cap.unwrap_or(DEFAULT_VERTEX_CAP))?;
        (Some(v.vertices.iter().map(fmt_prior).collect()), v.truncated)
    } else {
        (None, true)
    };
    Ok(FeasibleReport {
        command: Command::Feasible.name(),
        verdict: Status::Pass,
        ambient: polytope.ambient(),
        dimension: dimension(&polytope)?,
        grain: f.grain.as_ref().map(|g| GrainReport { epsilon: format_rational(&g.epsilon), sets: g.sets.clone() }),
        vertices: verts,
        truncated,
        polytope: polytope.export(),
    })
}

fn sc(s: &ScInstance, opts: &Options) -> Result<ScReport> {
    let query = RobustQuery {
        delta: &s.delta,
        base_kernel: &s.base_kernel,
        pi0: &s.prior,
        family: &s.family,
        u0: &s.designer_utility,
        factors: s.factors.clone(),
    };
    let schedule = match (&opts.epsilon, &s.schedule) {
        (Some(e), _) => vec![e.clone()],
        (None, Some(v)) => v.clone(),
        (None, None) => auto_schedule(&s.prior),
    };
    let mut budget = GrainBudget { max_size: s.max_grain_size, ..GrainBudget::default() };
    if let Some(cap) = opts.cap {
        budget.max_sets = cap;
    }
    let report = is_robustly_self_confirming(&query, &schedule, budget)?;
    let levels = report
        .levels
        .iter()
        .map(|l| LevelReport {
            epsilon: format_rational(&l.epsilon),
            status: match l.status {
                LevelStatus::Pass => "pass",
                LevelStatus::Fail { .. } => "fail",
                LevelStatus::Inconclusive => "inconclusive",
            },
            sets_checked: l.sets_checked,
            incomplete: l.incomplete,
        })
        .collect();
    Ok(ScReport {
        command: Command::Sc.name(),
        verdict: report.verdict,
        level: report.level.as_ref().map(format_rational),
        witness_belief: report.witness_belief.as_ref().map(fmt_prior),
        failing_grain: report.failing.as_ref().map(|g| GrainReport { epsilon: format_rational(&g.epsilon), sets: g.sets.clone() }),
        incomplete: report.incomplete,
        self_confirming: report.witness_belief.is_some(),
        competitors: s.family.members().len(),
        provenance: s.family.provenance(),
        ic_checked: s.family.ic_checked(),
        levels,
    })
}

/// `2 · max atom of π₀`: at this ε every singleton is a grain set.
pub fn default_monopoly_epsilon(inst: &MonopolyInstance) -> Q {
    let max = inst.pi0().atoms().iter().max().cloned().unwrap_or_else(Q::zero);
    max * Q::from_integer(2.into())
}

fn monopoly(inst: &MonopolyInstance, epsilon: Option<Q>, opts: &Options) -> Result<MonopolyReport> {
    let epsilon = epsilon.unwrap_or_else(|| default_monopoly_epsilon(inst));
    let mut cap = GrainCap::for_epsilon(inst.pi0(), &epsilon);
    if let Some(c) = opts.cap {
        cap.max_sets = c;
    }
    let characterization = check_characterization(inst);
    let oracle = oracle_robust_sc(inst, &epsilon, cap)?;
    let holds = characterization.holds();
    let agree = match oracle.verdict {
        OracleVerdict::Robust => holds,
        OracleVerdict::NotRobust => !holds,
        OracleVerdict::Inconclusive => false,
    };
    let curve = revenue_curve(inst, inst.pi0())?.into_iter().map(|(p, r)| [format_rational(&p), format_rational(&r)]).collect();
    Ok(MonopolyReport {
        command: Command::Monopoly.name(),
        verdict: oracle.verdict,
        characterization_holds: holds,
        characterization,
        oracle: OracleSection {
            verdict: oracle.verdict,
            epsilon: format_rational(&oracle.epsilon),
            failing_grain: oracle.failing_prices(inst).map(|v| fmt_vec(&v)),
            witness_belief: oracle.witness_belief.as_ref().map(fmt_prior),
            sets_checked: oracle.sets_checked,
            incomplete: oracle.incomplete,
        },
        agree,
        revenue_curve: curve,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub cap: Option<usize>,
    pub solver_cap: usize,
}

/// Everything needed to reproduce a run, plus what it produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub caps: Caps,
    pub epsilon: Option<String>,
    pub repair: bool,
    pub format: Format,
    pub wall_time_ms: u64,
    pub verdicts: Vec<String>,
    pub output_sha256: String,
}

impl RunManifest {
    pub fn options(&self) -> Result<Options> {
        Ok(Options {
            seed: self.seed,
            cap: self.caps.cap,
            epsilon: self.epsilon.as_deref().map(parse_rational).transpose()?,
            repair: self.repair,
            format: self.format,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub report: Report,
    pub output: Vec<u8>,
    pub manifest: RunManifest,
}

/// Loads `input`, runs `cmd` and records a manifest.
pub fn execute(cmd: Command, input: &Path, opts: &Options) -> Result<Execution> {
    let start = Instant::now();
    let text = read_text(input)?;
    let inst = parse_instance(input, ParseOptions { repair: opts.repair })?;
    let report = run_command(cmd, &inst, opts)?;
    let output = emit_report(&report, opts.format);
    let manifest = RunManifest {
        command: cmd,
        inputs: vec![InputDigest { path: input.to_path_buf(), sha256: sha256_hex(text.as_bytes()) }],
        seed: opts.seed,
        caps: Caps { cap: opts.cap, solver_cap: solver_cap() },
        epsilon: opts.epsilon.as_ref().map(format_rational),
        repair: opts.repair,
        format: opts.format,
        wall_time_ms: start.elapsed().as_millis() as u64,
        verdicts: report.verdicts(),
        output_sha256: sha256_hex(&output),
    };
    Ok(Execution { report, output, manifest })
}

#[derive(Debug, Clone)]
pub struct Replay {
    pub output: Vec<u8>,
    pub identical: bool,
}

/// Re-runs a manifest. Inputs must still hash to the recorded digests and the
/// solver cap must match.
pub fn replay(manifest: &RunManifest) -> Result<Replay> {
    for input in &manifest.inputs {
        let digest = sha256_hex(read_text(&input.path)?.as_bytes());
        if digest != input.sha256 {
            return Err(Error::Precondition(format!("input {} changed since the manifest was written", input.path.display())));
        }
    }
    if manifest.caps.solver_cap != solver_cap() {
        return Err(Error::Precondition(format!(
            "manifest used solver cap {}, current cap is {}",
            manifest.caps.solver_cap,
            solver_cap()
        )));
    }
    let input = manifest.inputs.first().ok_or_else(|| Error::Precondition("manifest lists no inputs".into()))?;
    let run = execute(manifest.command, &input.path, &manifest.options()?)?;
    let identical = sha256_hex(&run.output) == manifest.output_sha256;
    Ok(Replay { output: run.output, identical })
}

/// File name of a corpus index inside a corpus directory.
pub const SUITE_INDEX: &str = "suite.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteCase {
    pub name: String,
    pub command: Command,
    pub input: PathBuf,
    pub golden: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteIndex {
    pub cases: Vec<SuiteCase>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub passed: usize,
    pub failed: usize,
    pub log: Vec<String>,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.failed == 0 {
            EXIT_PASS
        } else {
            EXIT_FALSE
        }
    }
}

pub fn load_suite(corpus_dir: &Path) -> Result<SuiteIndex> {
    if !corpus_dir.is_dir() {
        return Err(Error::Io {
            path: corpus_dir.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory not found"),
        });
    }
    let index_path = corpus_dir.join(SUITE_INDEX);
    if !index_path.exists() {
        return Err(Error::Precondition(format!("{} has no {SUITE_INDEX}", corpus_dir.display())));
    }
    let index: SuiteIndex = serde_json::from_str(&read_text(&index_path)?)?;
    if index.cases.is_empty() {
        return Err(Error::Precondition(format!("{} lists no cases", index_path.display())));
    }
    Ok(index)
}

fn case_options(case: &SuiteCase) -> Result<Options> {
    Ok(Options {
        seed: case.seed,
        cap: case.cap,
        epsilon: case.epsilon.as_deref().map(parse_rational).transpose()?,
        repair: false,
        format: case.format,
    })
}

/// Runs every case in `corpus_dir/suite.json` and compares the emitted
/// bytes against the golden file. With `bless`, golden files are rewritten.
pub fn run_suite_with(corpus_dir: &Path, bless: bool) -> Result<SuiteReport> {
    let index = load_suite(corpus_dir)?;
    let mut report = SuiteReport { passed: 0, failed: 0, log: Vec::new() };
    for case in &index.cases {
        let outcome = case_options(case).and_then(|opts| execute(case.command, &corpus_dir.join(&case.input), &opts));
        let line = match outcome {
            Err(e) => {
                report.failed += 1;
                format!("FAIL {}: {e}", case.name)
            }
            Ok(run) => {
                let golden_path = corpus_dir.join(&case.golden);
                if bless {
                    std::fs::write(&golden_path, &run.output).map_err(|source| Error::Io { path: golden_path.display().to_string(), source })?;
                }
                match std::fs::read(&golden_path) {
                    Ok(golden) if golden == run.output => {
                        report.passed += 1;
                        format!("PASS {} ({})", case.name, run.manifest.verdicts.join(", "))
                    }
                    Ok(_) => {
                        report.failed += 1;
                        format!("FAIL {}: output differs from {}", case.name, case.golden.display())
                    }
                    Err(e) => {
                        report.failed += 1;
                        format!("FAIL {}: cannot read golden {}: {e}", case.name, case.golden.display())
                    }
                }
            }
        };
        report.log.push(line);
    }
    Ok(report)
}

pub fn run_suite(corpus_dir: &Path) -> Result<SuiteReport> {
    run_suite_with(corpus_dir, false)
}
