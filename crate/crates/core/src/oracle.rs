//! Exhaustive ground truth for small instances: feasible-allocation
//! enumeration, the Pareto frontier, and exact checking of a result bundle's
//! guarantees. Intentionally naive — its value is being obviously correct.

use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::One;

use crate::arith::Rational;
use crate::fairness;
use crate::model::{AgentId, Allocation, ItemId, NormalizedInstance};
use crate::search::ResultBundle;

/// Default cap on exhaustive enumeration.
pub const DEFAULT_ENUM_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("feasible-allocation count {count} exceeds enumeration limit {limit}")]
    LimitExceeded { count: BigUint, limit: u64 },
    #[error("allocation does not match the instance: {0}")]
    Model(#[from] crate::model::ModelError),
}

fn multinomial_assignments(total: usize, per_agent: usize, agents: usize) -> BigUint {
    // (n*s)! / (s!)^n with total = n*s
    let mut num = BigUint::one();
    for i in 2..=total {
        num *= BigUint::from(i);
    }
    let mut fact_s = BigUint::one();
    for i in 2..=per_agent {
        fact_s *= BigUint::from(i);
    }
    let mut den = BigUint::one();
    for _ in 0..agents {
        den *= &fact_s;
    }
    num / den
}

/// Closed-form count of feasible allocations: `Π_h (n·s_h)! / (s_h!)^n`.
pub fn feasible_count(norm: &NormalizedInstance) -> BigUint {
    let n = norm.agents();
    norm.padded()
        .categories()
        .iter()
        .map(|c| multinomial_assignments(c.items.len(), c.capacity, n))
        .fold(BigUint::one(), |acc, x| acc * x)
}

/// Streaming enumeration of every feasible allocation exactly once, in a
/// deterministic order (per category, lexicographic by item → agent; first
/// category most significant).
pub struct FeasibleIter {
    agents: usize,
    items: usize,
    cat_items: Vec<Vec<ItemId>>,
    per_cat: Vec<Vec<Vec<AgentId>>>,
    index: Vec<usize>,
    done: bool,
}

impl FeasibleIter {
    fn new(norm: &NormalizedInstance) -> Self {
        let n = norm.agents();
        let mut cat_items = Vec::new();
        let mut per_cat = Vec::new();
        for cat in norm.padded().categories() {
            let mut items = cat.items.clone();
            items.sort_unstable();
            let assignments = category_assignments(items.len(), n, cat.capacity);
            cat_items.push(items);
            per_cat.push(assignments);
        }
        let done = per_cat.iter().any(|v| v.is_empty());
        FeasibleIter {
            agents: n,
            items: norm.items(),
            cat_items,
            index: alloc::vec![0; per_cat.len()],
            per_cat,
            done,
        }
    }
}

/// All ways to hand `count` items to `agents` agents, `capacity` each.
fn category_assignments(count: usize, agents: usize, capacity: usize) -> Vec<Vec<AgentId>> {
    let mut out = Vec::new();
    let mut remaining = alloc::vec![capacity; agents];
    let mut current = alloc::vec![0usize; count];
    fn rec(
        pos: usize,
        count: usize,
        agents: usize,
        remaining: &mut [usize],
        current: &mut [usize],
        out: &mut Vec<Vec<AgentId>>,
    ) {
        if pos == count {
            out.push(current.to_vec());
            return;
        }
        for a in 0..agents {
            if remaining[a] > 0 {
                remaining[a] -= 1;
                current[pos] = a;
                rec(pos + 1, count, agents, remaining, current, out);
                remaining[a] += 1;
            }
        }
    }
    rec(0, count, agents, &mut remaining, &mut current, &mut out);
    out
}

impl Iterator for FeasibleIter {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.done {
            return None;
        }
        let mut assignment = alloc::vec![0; self.items];
        for (h, items) in self.cat_items.iter().enumerate() {
            let choice = &self.per_cat[h][self.index[h]];
            for (pos, &item) in items.iter().enumerate() {
                assignment[item] = choice[pos];
            }
        }
        // odometer: last category fastest
        let mut h = self.cat_items.len();
        loop {
            if h == 0 {
                self.done = true;
                break;
            }
            h -= 1;
            self.index[h] += 1;
            if self.index[h] < self.per_cat[h].len() {
                break;
            }
            self.index[h] = 0;
        }
        if self.cat_items.is_empty() {
            self.done = true;
        }
        Some(Allocation::new(assignment, self.agents).expect("enumeration stays in range"))
    }
}

/// Enumerate feasible allocations, refusing to start beyond `limit`.
pub fn enumerate_feasible(
    norm: &NormalizedInstance,
    limit: u64,
) -> Result<FeasibleIter, OracleError> {
    let count = feasible_count(norm);
    if count > BigUint::from(limit) {
        return Err(OracleError::LimitExceeded { count, limit });
    }
    Ok(FeasibleIter::new(norm))
}

fn utility_profile(norm: &NormalizedInstance, a: &Allocation) -> Vec<i64> {
    (0..norm.agents())
        .map(|i| a.bundle_utility(norm, i))
        .collect()
}

/// `dominator` weakly improves every agent and strictly improves one.
fn dominates(dominator: &[i64], other: &[i64]) -> bool {
    let mut strict = false;
    for (x, y) in dominator.iter().zip(other) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// All feasible allocations not dominated by any other. Dominance only
/// depends on the utility profile, so profiles are deduplicated before the
/// pairwise scan.
pub fn pareto_frontier(
    norm: &NormalizedInstance,
    limit: u64,
) -> Result<Vec<Allocation>, OracleError> {
    let all: Vec<Allocation> = enumerate_feasible(norm, limit)?.collect();
    let profiles: Vec<Vec<i64>> = all.iter().map(|a| utility_profile(norm, a)).collect();
    let mut distinct: Vec<&Vec<i64>> = profiles.iter().collect();
    distinct.sort_unstable();
    distinct.dedup();
    let undominated: alloc::collections::BTreeSet<&Vec<i64>> = distinct
        .iter()
        .filter(|p| !distinct.iter().any(|q| dominates(q, p)))
        .copied()
        .collect();
    Ok(all
        .into_iter()
        .zip(&profiles)
        .filter(|(_, p)| undominated.contains(p))
        .map(|(a, _)| a)
        .collect())
}

/// Exact Pareto-optimality by enumeration. An infeasible allocation is not
/// Pareto-optimal by definition.
pub fn is_pareto_optimal(
    norm: &NormalizedInstance,
    a: &Allocation,
    limit: u64,
) -> Result<bool, OracleError> {
    if !a.is_feasible(norm)? {
        return Ok(false);
    }
    let profile = utility_profile(norm, a);
    for other in enumerate_feasible(norm, limit)? {
        let other_profile = utility_profile(norm, &other);
        if dominates(&other_profile, &profile) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One named pass/fail clause of a certification run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub name: String,
    pub agent: Option<AgentId>,
    pub passed: bool,
    pub detail: String,
}

/// A witness: a weight point and the per-agent envy-free optima found there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub t_star: Vec<Rational>,
    pub per_agent: Vec<Allocation>,
}

/// Ground-truth report; `verdicts` is empty unless a bundle was checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub feasible_count: BigUint,
    pub pareto_set: Vec<Allocation>,
    pub theorem1_witnesses: Vec<Witness>,
    pub verdicts: Vec<Clause>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|c| c.passed)
    }
}

/// Feasible count and Pareto frontier, no bundle check.
pub fn oracle_report(norm: &NormalizedInstance, limit: u64) -> Result<OracleReport, OracleError> {
    Ok(OracleReport {
        feasible_count: feasible_count(norm),
        pareto_set: pareto_frontier(norm, limit)?,
        theorem1_witnesses: Vec::new(),
        verdicts: Vec::new(),
    })
}

/// Verify a result bundle against exhaustive ground truth: every per-agent
/// allocation Pareto-optimal and envy-free for its agent, all agreeing
/// outside the reallocation set, and `|R| <= n(n-1)`.
pub fn check_theorem1(
    norm: &NormalizedInstance,
    bundle: &ResultBundle,
    limit: u64,
) -> Result<OracleReport, OracleError> {
    let n = norm.agents();
    let frontier = pareto_frontier(norm, limit)?;
    let mut verdicts = Vec::new();

    for (i, a) in bundle.per_agent.iter().enumerate() {
        let feasible = a.is_feasible(norm)?;
        verdicts.push(Clause {
            name: String::from("feasible"),
            agent: Some(i),
            passed: feasible,
            detail: if feasible {
                String::new()
            } else {
                String::from("category capacities violated or items missing")
            },
        });

        let in_frontier = frontier.contains(a);
        let detail = if in_frontier {
            String::new()
        } else {
            let profile = utility_profile(norm, a);
            match frontier
                .iter()
                .find(|other| dominates(&utility_profile(norm, other), &profile))
            {
                Some(witness) => alloc::format!("dominated by {:?}", witness.assignment()),
                None => String::from("not feasible, hence not Pareto-optimal"),
            }
        };
        verdicts.push(Clause {
            name: String::from("pareto-optimal"),
            agent: Some(i),
            passed: in_frontier,
            detail,
        });

        let ef = feasible && fairness::is_envy_free_for(norm, a, i);
        let detail = if ef {
            String::new()
        } else {
            match (0..n).find(|&other| {
                other != i && a.bundle_utility_as(norm, i, other) > a.bundle_utility(norm, i)
            }) {
                Some(other) => alloc::format!("agent {} envies agent {}", i + 1, other + 1),
                None => String::from("allocation infeasible"),
            }
        };
        verdicts.push(Clause {
            name: String::from("envy-free-for-agent"),
            agent: Some(i),
            passed: ef,
            detail,
        });
    }

    let mut agree = true;
    let mut agree_detail = String::new();
    'outer: for item in 0..norm.items() {
        if bundle.realloc.contains(&item) {
            continue;
        }
        for pair in bundle.per_agent.windows(2) {
            if pair[0].agent_of(item) != pair[1].agent_of(item) {
                agree = false;
                agree_detail =
                    alloc::format!("item {} differs outside the reallocation set", item + 1);
                break 'outer;
            }
        }
    }
    verdicts.push(Clause {
        name: String::from("common-outside-realloc"),
        agent: None,
        passed: agree,
        detail: agree_detail,
    });

    let bound = n * (n - 1);
    let within = bundle.realloc.len() <= bound;
    verdicts.push(Clause {
        name: String::from("realloc-bound"),
        agent: None,
        passed: within,
        detail: if within {
            String::new()
        } else {
            alloc::format!("|R| = {} > n(n-1) = {}", bundle.realloc.len(), bound)
        },
    });

    let passed = verdicts.iter().all(|c| c.passed);
    let witnesses = if passed {
        alloc::vec![Witness {
            t_star: bundle.t_star.t().to_vec(),
            per_agent: bundle.per_agent.clone(),
        }]
    } else {
        Vec::new()
    };

    Ok(OracleReport {
        feasible_count: feasible_count(norm),
        pareto_set: frontier,
        theorem1_witnesses: witnesses,
        verdicts,
    })
}
