//! The exact objective of the weighted program: the scaling constant K, the
//! simplex shrink t → t′, per-edge costs, and the explicit rational ε of the
//! constructive perturbation.
//!
//! The shrunken weight t′_i = (1 + (K−n)·t_i)/K is strictly positive for
//! every simplex point whenever some utility is nonzero (then K > n). In the
//! degenerate all-zero-utility case K = 1 < n and corner weights map outside
//! the simplex, but there every base cost is zero and t′ never enters any
//! comparison.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{LexCost, Rational};
use crate::model::{NormalizedInstance, SlotGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PerturbError {
    #[error("weights must be nonnegative and sum to 1")]
    OutsideSimplex,
    #[error("weight vector has length {found}, expected {expected}")]
    WeightLength { expected: usize, found: usize },
    #[error("alpha must satisfy 0 < alpha <= {max_alpha} (= 1/(K n^2 m))")]
    AlphaOutOfRange { max_alpha: Rational },
}

/// An exact point `t` of the agent simplex together with its shrunken image
/// `t'_i = (1 + (K-n) t_i) / K`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct WeightPoint {
    t: Vec<Rational>,
    t_prime: Vec<Rational>,
}

impl WeightPoint {
    pub fn t(&self) -> &[Rational] {
        &self.t
    }

    pub fn t_prime(&self) -> &[Rational] {
        &self.t_prime
    }

    pub fn agents(&self) -> usize {
        self.t.len()
    }
}

/// `K = n·Σ_i Σ_j |u_i(j)| + 1`.
pub fn compute_k(norm: &NormalizedInstance) -> BigInt {
    let n = BigInt::from(norm.agents());
    n * BigInt::from(norm.padded().sum_abs_utilities()) + BigInt::one()
}

/// Map a simplex point to its shrunken weight point.
pub fn shrink_weights(t: Vec<Rational>, k: &BigInt, n: usize) -> Result<WeightPoint, PerturbError> {
    if t.len() != n {
        return Err(PerturbError::WeightLength {
            expected: n,
            found: t.len(),
        });
    }
    let mut sum = Rational::zero();
    for ti in &t {
        if ti.is_negative() {
            return Err(PerturbError::OutsideSimplex);
        }
        sum += ti;
    }
    if !sum.is_one() {
        return Err(PerturbError::OutsideSimplex);
    }
    let k_rat = Rational::from_integer(k.clone());
    let shrink = Rational::from_integer(k - BigInt::from(n));
    let t_prime = t
        .iter()
        .map(|ti| (Rational::one() + &shrink * ti) / &k_rat)
        .collect();
    Ok(WeightPoint { t, t_prime })
}

/// The uniform weight point (a fixed point of the shrink map).
pub fn uniform_weights(k: &BigInt, n: usize) -> WeightPoint {
    let w = Rational::new(BigInt::one(), BigInt::from(n));
    shrink_weights(alloc::vec![w; n], k, n).expect("uniform point is in the simplex")
}

/// How the infinitesimal part of edge costs is represented.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum CostMode {
    /// Symbolic ε, compared lexicographically. The production mode.
    Lex,
    /// Explicit rational ε from [`epsilon_explicit`]; cross-validation only.
    Explicit(EpsilonSpec),
}

impl CostMode {
    pub fn label(&self) -> &'static str {
        match self {
            CostMode::Lex => "lex",
            CostMode::Explicit(_) => "explicit",
        }
    }
}

/// Cost of one slot-graph edge at a weight point: base `t'_i · u_i(j)` plus
/// the edge's ε term (symbolic in lex mode, a rational in explicit mode).
pub fn edge_cost(
    norm: &NormalizedInstance,
    graph: &SlotGraph,
    edge: usize,
    w: &WeightPoint,
    mode: &CostMode,
) -> LexCost {
    let e = graph.edge(edge);
    let u = Rational::from_integer(BigInt::from(norm.utility(e.agent, e.item)));
    let base = &w.t_prime()[e.agent] * u;
    match mode {
        CostMode::Lex => LexCost::with_epsilon(base, graph.rank(edge)),
        CostMode::Explicit(spec) => LexCost::from_base(base + &spec.eps[edge]),
    }
}

/// Costs for all edges at a weight point, indexed by edge rank.
pub fn cost_vector(
    norm: &NormalizedInstance,
    graph: &SlotGraph,
    w: &WeightPoint,
    mode: &CostMode,
) -> Vec<LexCost> {
    (0..graph.edge_count())
        .map(|e| edge_cost(norm, graph, e, w, mode))
        .collect()
}

/// Explicit rational perturbation `ε_s = (α/(dθ))^s`, with
/// `θ' = (q+1)!·((r+1)!)^q·‖C‖_∞^q·‖M‖_∞^{rq}` for `q = n−1`,
/// `r = m + n·k` constraint rows, and the 0/1 constraint matrix (`‖M‖_∞ = 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonSpec {
    pub alpha: Rational,
    pub d: usize,
    pub theta: Rational,
    pub theta_prime: Rational,
    /// `eps[rank]` is ε_{rank+1} (s runs over 1..=d).
    pub eps: Vec<Rational>,
}

fn factorial(k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=k {
        acc *= BigInt::from(i);
    }
    acc
}

/// Largest α satisfying the envy lemma precondition strictly:
/// `1 / (K n² m + 1)`.
pub fn default_alpha(norm: &NormalizedInstance) -> Rational {
    let k = compute_k(norm);
    let n = BigInt::from(norm.agents());
    let m = BigInt::from(norm.items());
    Rational::new(BigInt::one(), k * &n * n * m + BigInt::one())
}

pub fn epsilon_explicit(
    norm: &NormalizedInstance,
    alpha: Rational,
) -> Result<EpsilonSpec, PerturbError> {
    let n = norm.agents();
    let m = norm.items();
    let k_const = compute_k(norm);
    // 0 < alpha <= 1/(K n^2 m); with m = 0 only positivity and alpha < 1 apply.
    let max_alpha = if m == 0 {
        Rational::one()
    } else {
        Rational::new(
            BigInt::one(),
            k_const * BigInt::from(n) * BigInt::from(n) * BigInt::from(m),
        )
    };
    if !alpha.is_positive() || alpha > max_alpha || alpha >= Rational::one() {
        return Err(PerturbError::AlphaOutOfRange { max_alpha });
    }

    let q = n - 1;
    let r = m + n * norm.padded().categories().len();
    let c_inf = BigInt::from(norm.padded().max_abs_utility().max(1));
    // ‖M‖_∞ = 1 for the 0/1 constraint matrix, so that factor drops out.
    let theta_prime = Rational::from_integer(
        factorial(q + 1) * factorial(r + 1).pow(q as u32) * c_inf.pow(q as u32),
    );
    let two = Rational::from_integer(BigInt::from(2));
    let theta = if theta_prime < two {
        two
    } else {
        theta_prime.clone()
    };

    let d = n * m;
    let ratio = if d == 0 {
        Rational::zero()
    } else {
        &alpha / (Rational::from_integer(BigInt::from(d)) * &theta)
    };
    let mut eps = Vec::with_capacity(d);
    let mut cur = Rational::one();
    for _ in 0..d {
        cur *= &ratio;
        eps.push(cur.clone());
    }
    Ok(EpsilonSpec {
        alpha,
        d,
        theta,
        theta_prime,
        eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, ratio};
    use crate::model::{normalize, Category, Instance};

    fn norm_2x2(u1: [i64; 2], u2: [i64; 2]) -> NormalizedInstance {
        let inst = Instance::new(
            alloc::vec![u1.to_vec(), u2.to_vec()],
            alloc::vec![Category {
                items: alloc::vec![0, 1],
                capacity: 1,
            }],
        )
        .unwrap();
        normalize(inst)
    }

    #[test]
    fn k_from_definition() {
        let norm = norm_2x2([3, 1], [1, 3]);
        assert_eq!(compute_k(&norm), BigInt::from(17));
    }

    #[test]
    fn k_all_zero_is_one() {
        let norm = norm_2x2([0, 0], [0, 0]);
        assert_eq!(compute_k(&norm), BigInt::from(1));
    }

    #[test]
    fn k_three_agents_single_item() {
        let inst = Instance::new(
            alloc::vec![alloc::vec![-2], alloc::vec![0], alloc::vec![5]],
            alloc::vec![Category {
                items: alloc::vec![0],
                capacity: 1,
            }],
        )
        .unwrap();
        assert_eq!(compute_k(&normalize(inst)), BigInt::from(22));
    }

    #[test]
    fn shrink_corner() {
        let k = BigInt::from(17);
        let w = shrink_weights(alloc::vec![rat(1), rat(0)], &k, 2).unwrap();
        assert_eq!(w.t_prime(), &[ratio(16, 17), ratio(1, 17)]);
    }

    #[test]
    fn shrink_fixes_uniform() {
        let k = BigInt::from(17);
        let w = shrink_weights(alloc::vec![ratio(1, 2), ratio(1, 2)], &k, 2).unwrap();
        assert_eq!(w.t_prime(), &[ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn shrink_three_agents() {
        let k = BigInt::from(22);
        let w = shrink_weights(alloc::vec![rat(0), rat(0), rat(1)], &k, 3).unwrap();
        assert_eq!(w.t_prime(), &[ratio(1, 22), ratio(1, 22), ratio(20, 22)]);
    }

    #[test]
    fn shrink_rejects_outside_simplex() {
        let k = BigInt::from(17);
        assert!(shrink_weights(alloc::vec![rat(1), rat(1)], &k, 2).is_err());
        assert!(shrink_weights(alloc::vec![ratio(3, 2), ratio(-1, 2)], &k, 2).is_err());
    }

    #[test]
    fn edge_cost_lex_and_dummy() {
        let norm = norm_2x2([3, 1], [1, 3]);
        let g = crate::model::build_slot_graph(&norm);
        let k = compute_k(&norm);
        let w = shrink_weights(alloc::vec![ratio(1, 2), ratio(1, 2)], &k, 2).unwrap();
        let c = edge_cost(&norm, &g, 0, &w, &CostMode::Lex);
        assert_eq!(c.base(), &ratio(3, 2));
        assert_eq!(c.pert(), &[(0, rat(1))]);

        // dummy items cost 0 plus their ε
        let padded = normalize(
            Instance::new(
                alloc::vec![alloc::vec![3], alloc::vec![7]],
                alloc::vec![Category {
                    items: alloc::vec![0],
                    capacity: 1,
                }],
            )
            .unwrap(),
        );
        let g2 = crate::model::build_slot_graph(&padded);
        let k2 = compute_k(&padded);
        let w2 = uniform_weights(&k2, 2);
        let dummy_edge = g2.edge_index(0, 1);
        let c2 = edge_cost(&padded, &g2, dummy_edge, &w2, &CostMode::Lex);
        assert!(c2.base().is_zero());
    }

    #[test]
    fn theta_prime_matches_hand_value() {
        // n=2, m=2, k=1: q=1, r=4, ‖C‖=3 → θ' = 2!·(5!)·3 = 720.
        let norm = norm_2x2([3, 1], [1, 3]);
        let spec = epsilon_explicit(&norm, default_alpha(&norm)).unwrap();
        assert_eq!(spec.theta_prime, rat(720));
        assert_eq!(spec.theta, rat(720));
    }

    #[test]
    fn epsilon_strictly_decreasing_positive() {
        let norm = norm_2x2([3, 1], [1, 3]);
        let spec = epsilon_explicit(&norm, default_alpha(&norm)).unwrap();
        assert_eq!(spec.eps.len(), 4);
        for i in 0..spec.eps.len() {
            assert!(spec.eps[i].is_positive());
            assert!(spec.eps[i] < spec.alpha);
            if i > 0 {
                assert!(spec.eps[i] < spec.eps[i - 1]);
            }
        }
    }

    #[test]
    fn epsilon_zero_utilities_uses_c_inf_convention() {
        let norm = norm_2x2([0, 0], [0, 0]);
        let spec = epsilon_explicit(&norm, ratio(1, 9)).unwrap();
        assert!(spec.theta_prime.is_positive());
        assert_eq!(spec.theta_prime, rat(240)); // 2!·5!·1
    }

    #[test]
    fn epsilon_rejects_bad_alpha() {
        let norm = norm_2x2([3, 1], [1, 3]);
        assert!(epsilon_explicit(&norm, rat(0)).is_err());
        assert!(epsilon_explicit(&norm, rat(1)).is_err());
        // larger than 1/(K n^2 m)
        assert!(epsilon_explicit(&norm, ratio(1, 2)).is_err());
    }

    #[test]
    fn explicit_edge_cost_adds_rational_epsilon() {
        // n=1, m=2, zero utilities: θ' = 1, θ = 2, d = 2, so with α = 1/2 the
        // scale is α/(dθ) = 1/8 and the rank-2 edge gets ε_2 = 1/64.
        let inst = Instance::new(
            alloc::vec![alloc::vec![0, 0]],
            alloc::vec![Category {
                items: alloc::vec![0, 1],
                capacity: 2,
            }],
        )
        .unwrap();
        let norm = normalize(inst);
        let spec = epsilon_explicit(&norm, ratio(1, 2)).unwrap();
        assert_eq!(spec.theta, rat(2));
        assert_eq!(spec.eps[1], ratio(1, 64));

        let g = crate::model::build_slot_graph(&norm);
        let k = compute_k(&norm);
        let w = shrink_weights(alloc::vec![rat(1)], &k, 1).unwrap();
        let cost = edge_cost(&norm, &g, 1, &w, &CostMode::Explicit(spec));
        assert_eq!(cost.base(), &ratio(1, 64)); // base 0 + ε
        assert!(cost.pert().is_empty());
    }
}
