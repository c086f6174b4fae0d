//! Splitting absorbing states by route of entry so that transition payments
//! can be valuated with forward equations rates.
//!
//! Forward equations rates reproduce occupancy probabilities but not
//! transition densities. Once every payment is tied to entering a set of
//! states that can only be entered through the paid transition, the expected
//! payment rate equals the rate of change of that set's occupancy, which the
//! rates do reproduce.

use crate::error::{Error, Result};
use crate::model_graph::{ModelGraph, PaymentSpec, Transition};
use crate::rate_scenarios::{AffineSpec, IntensityLaw};
use crate::time_fn::TimeFunction;

/// A model with duplicated absorbing states and payments rewritten onto it.
#[derive(Debug, Clone)]
pub struct RepairedModel {
    pub original: ModelGraph,
    pub augmented: ModelGraph,
    /// Original state of every augmented state.
    pub state_map: Vec<usize>,
    /// Every original transition with its augmented image.
    pub edge_map: Vec<(Transition, Transition)>,
    /// Payments on the augmented model.
    pub payments: PaymentSpec,
}

impl RepairedModel {
    pub fn edge_image(&self, from: usize, to: usize) -> Option<Transition> {
        self.edge_map
            .iter()
            .find(|(o, _)| *o == (from, to))
            .map(|(_, a)| *a)
    }

    /// Move every intensity onto the image of its transition.
    pub fn remap_law(&self, law: &IntensityLaw) -> Result<IntensityLaw> {
        match law {
            IntensityLaw::Mixture { set, weights } => {
                let pairs = set
                    .transitions()
                    .iter()
                    .map(|&(j, k)| Ok(((j, k), self.image_or_err(j, k)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(IntensityLaw::Mixture {
                    set: set.project(&pairs)?,
                    weights: weights.clone(),
                })
            }
            IntensityLaw::Affine(spec) => {
                let mut intensities = spec.intensities.clone();
                for i in &mut intensities {
                    let (a, b) = self.image_or_err(i.from, i.to)?;
                    i.from = a;
                    i.to = b;
                }
                Ok(IntensityLaw::Affine(AffineSpec::new(spec.factors.clone(), intensities)?))
            }
        }
    }

    fn image_or_err(&self, from: usize, to: usize) -> Result<Transition> {
        self.edge_image(from, to).ok_or_else(|| {
            Error::Repair(format!("{from}->{to} is not a transition of the original model"))
        })
    }

    /// A distribution over original states as one over augmented states;
    /// split states keep their original index.
    pub fn lift_distribution(&self, start: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.augmented.num_states()];
        out[..start.len()].copy_from_slice(start);
        out
    }
}

/// Split each state in `split` into one copy per predecessor.
///
/// The largest predecessor keeps the original index; copies for the others
/// are appended in increasing predecessor order. Every transition payment
/// `b_kl` is then paid on each augmented pair `(r, d)` with `d` in the set `D`
/// of states reachable from the image of `l`, `r` outside `D` and `d`
/// reachable from `r`. This requires the image of `k -> l` to be the only
/// transition entering `D`.
pub fn repair_model(graph: &ModelGraph, payments: &PaymentSpec, split: &[usize]) -> Result<RepairedModel> {
    let n = graph.num_states();
    payments
        .validate_against(n, graph.transitions())
        .map_err(|e| Error::Repair(e.to_string()))?;
    let mut labels: Vec<String> = graph.labels().to_vec();
    let mut state_map: Vec<usize> = (0..n).collect();
    let mut edge_map: Vec<(Transition, Transition)> =
        graph.transitions().iter().map(|&e| (e, e)).collect();
    let mut targets = split.to_vec();
    targets.sort_unstable();
    targets.dedup();
    for &d in &targets {
        if d >= n {
            return Err(Error::Repair(format!("state {d} does not exist")));
        }
        if !graph.is_absorbing(d) {
            return Err(Error::Repair(format!(
                "state {d} ({}) is not absorbing",
                graph.label(d)
            )));
        }
        let preds = graph.predecessors(d);
        for &p in preds.iter().take(preds.len().saturating_sub(1)) {
            let copy = labels.len();
            labels.push(format!("{} from {}", graph.label(d), graph.label(p)));
            state_map.push(d);
            for (orig, image) in &mut edge_map {
                if *orig == (p, d) {
                    *image = (p, copy);
                }
            }
        }
    }
    let augmented = ModelGraph::new(labels, edge_map.iter().map(|e| e.1).collect())?;
    let reach = augmented.reachability();
    let m = augmented.num_states();

    let mut rewritten = PaymentSpec::zero(m);
    for a in 0..m {
        rewritten = rewritten.with_sojourn(a, payments.sojourn(state_map[a]).clone())?;
    }
    let mut added: Vec<(Transition, Vec<TimeFunction>)> = Vec::new();
    for p in payments.transition_payments() {
        if p.amount.is_zero() {
            continue;
        }
        let (k, target) = edge_map
            .iter()
            .find(|(o, _)| *o == (p.from, p.to))
            .map(|(_, a)| *a)
            .expect("payment validated against transitions");
        let inside: Vec<bool> = (0..m).map(|d| reach.get(target, d)).collect();
        for &(r, d) in augmented.transitions() {
            if !inside[r] && inside[d] && (r, d) != (k, target) {
                return Err(Error::Repair(format!(
                    "payment on {}->{} cannot be rewritten: {} -> {} also enters the states reachable from {}",
                    graph.label(p.from),
                    graph.label(p.to),
                    augmented.label(r),
                    augmented.label(d),
                    augmented.label(target)
                )));
            }
        }
        for r in (0..m).filter(|&r| !inside[r]) {
            for d in (0..m).filter(|&d| inside[d] && reach.get(r, d)) {
                match added.iter_mut().find(|(e, _)| *e == (r, d)) {
                    Some((_, terms)) => terms.push(p.amount.clone()),
                    None => added.push(((r, d), vec![p.amount.clone()])),
                }
            }
        }
    }
    for ((r, d), mut terms) in added {
        let amount = if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            TimeFunction::sum(terms)
        };
        rewritten = rewritten.with_transition(r, d, amount)?;
    }
    Ok(RepairedModel {
        original: graph.clone(),
        augmented,
        state_map,
        edge_map,
        payments: rewritten,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate_scenarios::ScenarioSet;

    fn c(v: f64) -> TimeFunction {
        TimeFunction::constant(v)
    }

    fn disability() -> (ModelGraph, PaymentSpec) {
        let graph = ModelGraph::new(vec!["active", "disabled", "dead"], vec![(0, 1), (0, 2), (1, 2)]).unwrap();
        let pay = PaymentSpec::zero(3)
            .with_sojourn(0, c(-0.2))
            .unwrap()
            .with_sojourn(1, c(1.0))
            .unwrap()
            .with_transition(0, 1, c(2.0))
            .unwrap()
            .with_transition(0, 2, c(5.0))
            .unwrap()
            .with_transition(1, 2, c(3.0))
            .unwrap();
        (graph, pay)
    }

    #[test]
    fn disability_split_matches_route_structure() {
        let (graph, pay) = disability();
        let r = repair_model(&graph, &pay, &[2]).unwrap();
        assert_eq!(r.augmented.num_states(), 4);
        assert_eq!(r.augmented.transitions(), &[(0, 1), (0, 3), (1, 2)]);
        assert_eq!(r.state_map, vec![0, 1, 2, 2]);
        assert_eq!(r.edge_image(0, 2), Some((0, 3)));
        let p = &r.payments;
        assert_eq!(p.transition(0, 1).unwrap().value(0.0), 2.0);
        assert_eq!(p.transition(0, 2).unwrap().value(0.0), 5.0);
        assert_eq!(p.transition(1, 2).unwrap().value(0.0), 3.0);
        assert_eq!(p.transition(0, 3).unwrap().value(0.0), 5.0);
        assert_eq!(p.sojourn(3).value(0.0), 0.0);
        assert_eq!(p.sojourn(1).value(0.0), 1.0);
    }

    #[test]
    fn disability_benefit_on_both_routes_into_dead_prime() {
        // only the b_12 benefit: it sits on 1->2 and on the induced 0->2
        let (graph, _) = disability();
        let pay = PaymentSpec::zero(3).with_transition(1, 2, c(3.0)).unwrap();
        let r = repair_model(&graph, &pay, &[2]).unwrap();
        assert_eq!(r.payments.transition(1, 2).unwrap().value(0.0), 3.0);
        assert_eq!(r.payments.transition(0, 2).unwrap().value(0.0), 3.0);
        assert!(r.payments.transition(0, 1).is_none());
        assert!(r.payments.transition(0, 3).is_none());
    }

    #[test]
    fn single_predecessor_only_relabels() {
        let graph = ModelGraph::new(vec!["alive", "dead"], vec![(0, 1)]).unwrap();
        let pay = PaymentSpec::zero(2).with_transition(0, 1, c(1.0)).unwrap();
        let r = repair_model(&graph, &pay, &[1]).unwrap();
        assert_eq!(r.augmented, graph);
        assert_eq!(r.payments, pay);
    }

    #[test]
    fn non_absorbing_target_rejected() {
        let (graph, pay) = disability();
        assert!(matches!(repair_model(&graph, &pay, &[1]), Err(Error::Repair(_))));
    }

    #[test]
    fn unrepairable_payment_rejected() {
        // without splitting, dead is entered from both 0 and 1
        let (graph, pay) = disability();
        assert!(matches!(repair_model(&graph, &pay, &[]), Err(Error::Repair(_))));
    }

    #[test]
    fn law_is_remapped() {
        let (graph, pay) = disability();
        let r = repair_model(&graph, &pay, &[2]).unwrap();
        let set = ScenarioSet::deterministic(vec![(0, 1), (0, 2), (1, 2)], vec![c(0.03), c(0.01), c(0.05)]).unwrap();
        let law = r.remap_law(&IntensityLaw::from_prior(set, 0.0)).unwrap();
        let IntensityLaw::Mixture { set, .. } = law else { unreachable!() };
        assert_eq!(set.rate(0, 0, 3, 1.0), 0.01);
        assert_eq!(set.rate(0, 0, 2, 1.0), 0.0);
        assert_eq!(set.rate(0, 1, 2, 1.0), 0.05);
    }
}
