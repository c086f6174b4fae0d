//! State spaces, allowed transitions and payment specifications.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time_fn::TimeFunction;

/// Ordered pair `(from, to)` of state indices.
pub type Transition = (usize, usize);

/// Finite state space `{0, ..., J}` with a set of direct transitions.
///
/// Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelGraph {
    labels: Vec<String>,
    transitions: Vec<Transition>,
}

impl ModelGraph {
    pub fn new<S: Into<String>>(labels: Vec<S>, transitions: Vec<Transition>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidModel("state space is empty".into()));
        }
        let mut transitions = transitions;
        for &(j, k) in &transitions {
            if j >= n || k >= n {
                return Err(Error::InvalidModel(format!(
                    "transition {j}->{k} leaves the state space {{0..{}}}",
                    n - 1
                )));
            }
            if j == k {
                return Err(Error::InvalidModel(format!("self-transition {j}->{j}")));
            }
        }
        transitions.sort_unstable();
        transitions.dedup();
        Ok(Self {
            labels,
            transitions,
        })
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, state: usize) -> &str {
        &self.labels[state]
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Direct transitions, sorted lexicographically.
    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn has_transition(&self, from: usize, to: usize) -> bool {
        self.transitions.binary_search(&(from, to)).is_ok()
    }

    pub fn successors(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.transitions
            .iter()
            .filter(move |(j, _)| *j == state)
            .map(|(_, k)| *k)
    }

    pub fn predecessors(&self, state: usize) -> Vec<usize> {
        self.transitions
            .iter()
            .filter(|(_, k)| *k == state)
            .map(|(j, _)| *j)
            .collect()
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        self.successors(state).next().is_none()
    }

    /// All ordered pairs `(j, k)` with `j != k`, row-major.
    pub fn off_diagonal_pairs(&self) -> Vec<Transition> {
        let n = self.num_states();
        (0..n)
            .flat_map(|j| (0..n).filter(move |&k| k != j).map(move |k| (j, k)))
            .collect()
    }

    /// True iff every transition goes to a higher-numbered state in the stored
    /// ordering.
    pub fn is_decrement(&self) -> bool {
        self.transitions.iter().all(|&(j, k)| k > j)
    }

    /// Transitive closure of the edge set, diagonal included.
    pub fn reachability(&self) -> Reachability {
        let n = self.num_states();
        let mut reach = vec![false; n * n];
        for i in 0..n {
            reach[i * n + i] = true;
        }
        for &(j, k) in &self.transitions {
            reach[j * n + k] = true;
        }
        // Warshall
        for via in 0..n {
            for i in 0..n {
                if reach[i * n + via] {
                    for k in 0..n {
                        if reach[via * n + k] {
                            reach[i * n + k] = true;
                        }
                    }
                }
            }
        }
        Reachability { n, reach }
    }

    /// Topological ordering of the states when the graph is acyclic.
    ///
    /// Ties are broken by the smallest state index, so an already sorted
    /// decrement model maps to the identity ordering.
    pub fn check_decrement(&self) -> DecrementCheck {
        let n = self.num_states();
        let mut indegree = vec![0usize; n];
        for &(_, k) in &self.transitions {
            indegree[k] += 1;
        }
        let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
            .filter(|&i| indegree[i] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(j)) = ready.pop() {
            order.push(j);
            for k in self.successors(j) {
                indegree[k] -= 1;
                if indegree[k] == 0 {
                    ready.push(Reverse(k));
                }
            }
        }
        if order.len() == n {
            DecrementCheck {
                is_decrement: true,
                ordering: Some(order),
            }
        } else {
            DecrementCheck {
                is_decrement: false,
                ordering: None,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reachability {
    n: usize,
    reach: Vec<bool>,
}

impl Reachability {
    pub fn get(&self, from: usize, to: usize) -> bool {
        self.reach[from * self.n + to]
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn to_matrix(&self) -> Vec<Vec<bool>> {
        self.reach.chunks(self.n).map(<[bool]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecrementCheck {
    pub is_decrement: bool,
    /// `ordering[p]` is the state placed at position `p`.
    pub ordering: Option<Vec<usize>>,
}

/// Lump sum paid on a transition `from -> to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionPayment {
    pub from: usize,
    pub to: usize,
    pub amount: TimeFunction,
}

/// Sojourn payment rates `b_k(s)` and transition payments `b_kl(s)`.
///
/// Transition payments not listed are zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PaymentSpec {
    sojourn: Vec<TimeFunction>,
    transition: Vec<TransitionPayment>,
}

impl PaymentSpec {
    /// No payments at all on a model with `num_states` states.
    pub fn zero(num_states: usize) -> Self {
        Self {
            sojourn: vec![TimeFunction::zero(); num_states],
            transition: Vec::new(),
        }
    }

    pub fn new(sojourn: Vec<TimeFunction>, transition: Vec<TransitionPayment>) -> Result<Self> {
        let mut spec = Self::zero(sojourn.len());
        spec.sojourn = sojourn;
        for p in transition {
            spec = spec.with_transition(p.from, p.to, p.amount)?;
        }
        for f in &spec.sojourn {
            f.validate()?;
        }
        Ok(spec)
    }

    pub fn num_states(&self) -> usize {
        self.sojourn.len()
    }

    pub fn with_sojourn(mut self, state: usize, rate: TimeFunction) -> Result<Self> {
        rate.validate()?;
        let slot = self.sojourn.get_mut(state).ok_or_else(|| {
            Error::InvalidModel(format!("sojourn payment for unknown state {state}"))
        })?;
        *slot = rate;
        Ok(self)
    }

    /// Set (replacing any existing) payment on `from -> to`.
    pub fn with_transition(mut self, from: usize, to: usize, amount: TimeFunction) -> Result<Self> {
        amount.validate()?;
        let n = self.num_states();
        if from >= n || to >= n || from == to {
            return Err(Error::InvalidModel(format!(
                "transition payment on invalid pair {from}->{to}"
            )));
        }
        self.transition.retain(|p| (p.from, p.to) != (from, to));
        self.transition.push(TransitionPayment { from, to, amount });
        self.transition.sort_by_key(|p| (p.from, p.to));
        Ok(self)
    }

    pub fn sojourn(&self, state: usize) -> &TimeFunction {
        &self.sojourn[state]
    }

    pub fn transition(&self, from: usize, to: usize) -> Option<&TimeFunction> {
        self.transition
            .iter()
            .find(|p| (p.from, p.to) == (from, to))
            .map(|p| &p.amount)
    }

    pub fn transition_payments(&self) -> &[TransitionPayment] {
        &self.transition
    }

    pub fn has_transition_payments(&self) -> bool {
        self.transition.iter().any(|p| !p.amount.is_zero())
    }

    /// Check the state count and that every transition payment sits on an
    /// allowed pair.
    pub fn validate_against(&self, num_states: usize, allowed: &[Transition]) -> Result<()> {
        if self.num_states() != num_states {
            return Err(Error::InvalidModel(format!(
                "payments cover {} states, model has {num_states}",
                self.num_states()
            )));
        }
        for p in &self.transition {
            if !allowed.contains(&(p.from, p.to)) {
                return Err(Error::InvalidModel(format!(
                    "payment on {}->{} which is not a transition of the model",
                    p.from, p.to
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(n: usize, edges: &[Transition]) -> ModelGraph {
        ModelGraph::new((0..n).map(|i| format!("s{i}")).collect(), edges.to_vec()).unwrap()
    }

    #[test]
    fn survival_reachability() {
        let r = graph(2, &[(0, 1)]).reachability();
        assert!(r.get(0, 1) && r.get(0, 0) && r.get(1, 1));
        assert!(!r.get(1, 0));
    }

    #[test]
    fn disability_reaches_dead_directly_and_indirectly() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let r = g.reachability();
        assert!(r.get(0, 2) && r.get(1, 2) && r.get(0, 1));
        assert!(g.has_transition(0, 2));
    }

    #[test]
    fn repaired_disability_reaches_dead_prime_only_via_disabled() {
        let g = graph(4, &[(0, 1), (1, 2), (0, 3)]);
        let r = g.reachability();
        assert!(r.get(0, 2));
        assert!(!g.has_transition(0, 2));
        assert!(!r.get(3, 2) && !r.get(2, 3));
    }

    #[test]
    fn decrement_detection() {
        let d = graph(3, &[(0, 1), (1, 2), (0, 2)]).check_decrement();
        assert!(d.is_decrement);
        assert_eq!(d.ordering, Some(vec![0, 1, 2]));

        let flip = graph(2, &[(0, 1), (1, 0)]).check_decrement();
        assert!(!flip.is_decrement);
        assert_eq!(flip.ordering, None);

        let fp = graph(5, &[(0, 1), (0, 2), (0, 3), (1, 4), (1, 3)]).check_decrement();
        assert!(fp.is_decrement);
        assert_eq!(fp.ordering, Some(vec![0, 1, 2, 3, 4]));
    }

    #[test]
    fn unsorted_acyclic_graph_gets_reordered() {
        // 2 -> 0 -> 1
        let g = graph(3, &[(2, 0), (0, 1)]);
        assert!(!g.is_decrement());
        let d = g.check_decrement();
        assert!(d.is_decrement);
        assert_eq!(d.ordering, Some(vec![2, 0, 1]));
    }

    #[test]
    fn invalid_graphs_rejected() {
        assert!(ModelGraph::new(vec!["a", "b"], vec![(0, 2)]).is_err());
        assert!(ModelGraph::new(vec!["a", "b"], vec![(1, 1)]).is_err());
        assert!(ModelGraph::new(Vec::<String>::new(), vec![]).is_err());
    }

    #[test]
    fn payments_restricted_to_graph_edges() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let p = PaymentSpec::zero(3)
            .with_transition(0, 2, TimeFunction::constant(1.0))
            .unwrap();
        assert!(p.validate_against(3, g.transitions()).is_err());
        let p = PaymentSpec::zero(3)
            .with_transition(1, 2, TimeFunction::constant(1.0))
            .unwrap();
        assert!(p.validate_against(3, g.transitions()).is_ok());
        assert!(p.transition(0, 1).is_none());
    }

    fn boolean_closure_by_squaring(n: usize, edges: &[Transition]) -> Vec<bool> {
        let mut m = vec![false; n * n];
        for i in 0..n {
            m[i * n + i] = true;
        }
        for &(j, k) in edges {
            m[j * n + k] = true;
        }
        // (I + A)^(2^k) stabilizes at the closure after ceil(log2 n) squarings
        for _ in 0..4 {
            let mut next = vec![false; n * n];
            for i in 0..n {
                for k in 0..n {
                    next[i * n + k] = (0..n).any(|l| m[i * n + l] && m[l * n + k]);
                }
            }
            m = next;
        }
        m
    }

    fn arb_graph() -> impl Strategy<Value = (usize, Vec<Transition>)> {
        (2usize..=7).prop_flat_map(|n| {
            let edges = proptest::collection::vec((0..n, 0..n), 0..(n * n))
                .prop_map(|v| v.into_iter().filter(|(a, b)| a != b).collect::<Vec<_>>());
            (Just(n), edges)
        })
    }

    proptest! {
        #[test]
        fn reachability_is_transitive_closure((n, edges) in arb_graph()) {
            let g = graph(n, &edges);
            let r = g.reachability();
            let oracle = boolean_closure_by_squaring(n, &edges);
            for i in 0..n {
                for k in 0..n {
                    prop_assert_eq!(r.get(i, k), oracle[i * n + k]);
                }
            }
        }

        #[test]
        fn decrement_ordering_makes_adjacency_upper_triangular((n, edges) in arb_graph()) {
            let g = graph(n, &edges);
            let d = g.check_decrement();
            if let Some(order) = d.ordering {
                let mut pos = vec![0; n];
                for (p, s) in order.iter().enumerate() {
                    pos[*s] = p;
                }
                for &(j, k) in g.transitions() {
                    prop_assert!(pos[k] > pos[j]);
                }
            } else {
                // a cycle exists: some state reaches a predecessor of itself
                let r = g.reachability();
                prop_assert!(g.transitions().iter().any(|&(j, k)| r.get(k, j)));
            }
        }
    }
}
