//! JSON schemas and conversions. All ids are 1-based on the wire (0-based in
//! the core), rationals are always "p/q" strings, and every document carries
//! a top-level `format: 1`. Maps are BTree-backed so serialization is
//! byte-stable.

use std::collections::BTreeMap;

use catfair_core::arith::Rational;
use catfair_core::model::{Allocation, Category, Instance, NormalizedInstance};
use catfair_core::oracle::OracleReport;
use catfair_core::search::ResultBundle;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("invalid rational {0:?}: expected \"p/q\"")]
    Rational(String),
    #[error("agent id {0} out of range")]
    AgentId(u64),
    #[error("item id {0} out of range")]
    ItemId(u64),
    #[error("allocation misses item {item}")]
    MissingItem { item: u64 },
    #[error("result names {found} agents, instance has {expected}")]
    AgentCount { expected: usize, found: usize },
    #[error(transparent)]
    Model(#[from] catfair_core::model::ModelError),
}

pub fn rational_to_string(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_rational(s: &str) -> Result<Rational, FormatError> {
    let bad = || FormatError::Rational(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = den.parse().map_err(|_| bad())?;
    if d == BigInt::from(0) {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

fn check_version(format: Option<u32>) -> Result<(), FormatError> {
    match format {
        None | Some(FORMAT_VERSION) => Ok(()),
        Some(v) => Err(FormatError::Version(v)),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CategoryFile {
    pub items: Vec<u64>,
    pub capacity: u64,
}

/// Instance schema:
/// `{ "agents": n, "utilities": [[int;m];n], "categories": [{"items": [...], "capacity": s}] }`.
#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<u32>,
    pub agents: u64,
    pub utilities: Vec<Vec<i64>>,
    pub categories: Vec<CategoryFile>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, FormatError> {
        check_version(self.format)?;
        let m = self.utilities.first().map_or(0, |row| row.len());
        if self.utilities.len() as u64 != self.agents {
            return Err(FormatError::AgentCount {
                expected: self.agents as usize,
                found: self.utilities.len(),
            });
        }
        let categories = self
            .categories
            .into_iter()
            .map(|c| {
                let items = c
                    .items
                    .into_iter()
                    .map(|raw| {
                        if raw == 0 || raw as usize > m {
                            Err(FormatError::ItemId(raw))
                        } else {
                            Ok(raw as usize - 1)
                        }
                    })
                    .collect::<Result<Vec<usize>, _>>()?;
                Ok(Category {
                    items,
                    capacity: c.capacity as usize,
                })
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        Ok(Instance::new(self.utilities, categories)?)
    }

    pub fn from_instance(inst: &Instance) -> Self {
        InstanceFile {
            format: Some(FORMAT_VERSION),
            agents: inst.agents() as u64,
            utilities: (0..inst.agents())
                .map(|i| (0..inst.items()).map(|j| inst.utility(i, j)).collect())
                .collect(),
            categories: inst
                .categories()
                .iter()
                .map(|c| CategoryFile {
                    items: c.items.iter().map(|&j| j as u64 + 1).collect(),
                    capacity: c.capacity as u64,
                })
                .collect(),
        }
    }
}

/// Allocation schema: `{ "assignment": { "<item>": <agent>, ... } }`.
#[derive(Debug, Serialize, Deserialize)]
pub struct AllocationFile {
    pub assignment: BTreeMap<u64, u64>,
}

impl AllocationFile {
    pub fn from_allocation(a: &Allocation) -> Self {
        AllocationFile {
            assignment: (0..a.items())
                .map(|j| (j as u64 + 1, a.agent_of(j) as u64 + 1))
                .collect(),
        }
    }

    pub fn into_allocation(self, norm: &NormalizedInstance) -> Result<Allocation, FormatError> {
        let n = norm.agents();
        let mut assignment = vec![usize::MAX; norm.items()];
        for (item, agent) in self.assignment {
            if item == 0 || item as usize > norm.items() {
                return Err(FormatError::ItemId(item));
            }
            if agent == 0 || agent as usize > n {
                return Err(FormatError::AgentId(agent));
            }
            assignment[item as usize - 1] = agent as usize - 1;
        }
        if let Some(j) = assignment.iter().position(|&a| a == usize::MAX) {
            return Err(FormatError::MissingItem { item: j as u64 + 1 });
        }
        Ok(Allocation::new(assignment, n)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReallocBoundFile {
    pub size: u64,
    pub limit: u64,
    pub ok: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CertificatesFile {
    pub pareto_optimal: BTreeMap<u64, Option<bool>>,
    pub envy_free: BTreeMap<u64, bool>,
    pub agree_outside_reallocation: bool,
    pub reallocation_bound: ReallocBoundFile,
}

/// Result bundle schema (the `solve` output).
#[derive(Debug, Serialize, Deserialize)]
pub struct ResultBundleFile {
    pub format: u32,
    pub mode: String,
    pub epsilon: String,
    pub heuristic: bool,
    pub t_star: Vec<String>,
    pub t_prime: Vec<String>,
    pub allocations: BTreeMap<u64, AllocationFile>,
    pub common: BTreeMap<u64, u64>,
    pub reallocation_set: Vec<u64>,
    pub dummies: Vec<u64>,
    pub certificates: CertificatesFile,
}

impl ResultBundleFile {
    pub fn from_bundle(norm: &NormalizedInstance, bundle: &ResultBundle) -> Self {
        let n = norm.agents();
        ResultBundleFile {
            format: FORMAT_VERSION,
            mode: bundle.mode.label().to_string(),
            epsilon: bundle.epsilon.clone(),
            heuristic: bundle.heuristic,
            t_star: bundle.t_star.t().iter().map(rational_to_string).collect(),
            t_prime: bundle
                .t_star
                .t_prime()
                .iter()
                .map(rational_to_string)
                .collect(),
            allocations: (0..n)
                .map(|i| {
                    (
                        i as u64 + 1,
                        AllocationFile::from_allocation(&bundle.per_agent[i]),
                    )
                })
                .collect(),
            common: bundle
                .common
                .iter()
                .map(|(&item, &agent)| (item as u64 + 1, agent as u64 + 1))
                .collect(),
            reallocation_set: bundle.realloc.iter().map(|&j| j as u64 + 1).collect(),
            dummies: norm.dummy_items().map(|j| j as u64 + 1).collect(),
            certificates: CertificatesFile {
                pareto_optimal: (0..n)
                    .map(|i| (i as u64 + 1, bundle.certificates.pareto[i]))
                    .collect(),
                envy_free: (0..n)
                    .map(|i| (i as u64 + 1, bundle.certificates.envy_free[i]))
                    .collect(),
                agree_outside_reallocation: bundle.certificates.agree_outside,
                reallocation_bound: ReallocBoundFile {
                    size: bundle.realloc.len() as u64,
                    limit: (n * (n - 1)) as u64,
                    ok: bundle.certificates.realloc_bound,
                },
            },
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClauseFile {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent: Option<u64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

/// Certificate report emitted by `verify`.
#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyReportFile {
    pub format: u32,
    pub passed: bool,
    pub clauses: Vec<ClauseFile>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WitnessFile {
    pub t_star: Vec<String>,
    pub allocations: BTreeMap<u64, AllocationFile>,
}

/// Oracle report: ground truth plus optional bundle verdicts.
#[derive(Debug, Serialize, Deserialize)]
pub struct OracleReportFile {
    pub format: u32,
    pub feasible_count: String,
    pub pareto_count: u64,
    pub pareto_set: Vec<AllocationFile>,
    pub theorem1_witnesses: Vec<WitnessFile>,
    pub verdicts: Vec<ClauseFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
}

fn clause_to_file(c: &catfair_core::oracle::Clause) -> ClauseFile {
    ClauseFile {
        name: c.name.clone(),
        agent: c.agent.map(|a| a as u64 + 1),
        passed: c.passed,
        detail: c.detail.clone(),
    }
}

impl OracleReportFile {
    pub fn from_report(report: &OracleReport, checked: bool) -> Self {
        OracleReportFile {
            format: FORMAT_VERSION,
            feasible_count: report.feasible_count.to_string(),
            pareto_count: report.pareto_set.len() as u64,
            pareto_set: report
                .pareto_set
                .iter()
                .map(AllocationFile::from_allocation)
                .collect(),
            theorem1_witnesses: report
                .theorem1_witnesses
                .iter()
                .map(|w| WitnessFile {
                    t_star: w.t_star.iter().map(rational_to_string).collect(),
                    allocations: w
                        .per_agent
                        .iter()
                        .enumerate()
                        .map(|(i, a)| (i as u64 + 1, AllocationFile::from_allocation(a)))
                        .collect(),
                })
                .collect(),
            verdicts: report.verdicts.iter().map(clause_to_file).collect(),
            passed: checked.then(|| report.passed()),
        }
    }
}

pub fn verify_report_from_oracle(report: &OracleReport) -> VerifyReportFile {
    VerifyReportFile {
        format: FORMAT_VERSION,
        passed: report.passed(),
        clauses: report.verdicts.iter().map(clause_to_file).collect(),
    }
}
