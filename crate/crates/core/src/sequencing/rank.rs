use std::cmp::Ordering;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{Linearization, PopularityStore, SequencingError};
use crate::graph::Dag;

/// Weights of the affine ranking score. Defaults to 1 for each component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingWeights<S> {
    pub time: S,
    pub popularity: S,
    pub coherence: S,
}

impl<S: Float> Default for RankingWeights<S> {
    fn default() -> Self {
        RankingWeights {
            time: S::one(),
            popularity: S::one(),
            coherence: S::one(),
        }
    }
}

impl<S: Float> RankingWeights<S> {
    pub fn new(time: S, popularity: S, coherence: S) -> Result<Self, SequencingError> {
        let w = RankingWeights {
            time,
            popularity,
            coherence,
        };
        let parts = [time, popularity, coherence];
        let well_formed = parts.iter().all(|x| x.is_finite() && *x >= S::zero());
        if !well_formed || parts.iter().all(|x| x.is_zero()) {
            return Err(SequencingError::InvalidWeights);
        }
        Ok(w)
    }

    pub fn scaled(self, k: S) -> Self {
        RankingWeights {
            time: self.time * k,
            popularity: self.popularity * k,
            coherence: self.coherence * k,
        }
    }
}

/// Score of one ordering with its three components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown<S> {
    pub total: S,
    /// `1 / (1 + total minutes)`.
    pub time: S,
    /// Adopted-pair counts over adjacent pairs, per adopted book.
    pub popularity: S,
    /// Share of adjacent pairs that stay within one cluster.
    pub coherence: S,
}

fn cast<S: Float>(x: u64) -> S {
    S::from(x).expect("u64 is representable in a float type")
}

pub fn score_ordering<S: Float>(
    lin: &Linearization,
    dag: &Dag,
    weights: &RankingWeights<S>,
    pop: &PopularityStore,
) -> Result<ScoreBreakdown<S>, SequencingError> {
    let nodes = lin
        .nodes
        .iter()
        .map(|id| dag.node(id.as_str()).ok_or_else(|| SequencingError::UnknownNode(id.clone())))
        .collect::<Result<Vec<_>, _>>()?;

    let minutes: u64 = nodes.iter().map(|n| u64::from(n.duration_minutes)).sum();
    let time = S::one() / (S::one() + cast(minutes));

    let adopted: u64 = lin
        .nodes
        .windows(2)
        .map(|w| pop.pair_count(&w[0], &w[1]))
        .sum();
    let popularity = cast::<S>(adopted) / (S::one() + cast(pop.book_count()));

    let coherence = if nodes.len() < 2 {
        S::zero()
    } else {
        let same = nodes
            .windows(2)
            .filter(|w| w[0].cluster.is_some() && w[0].cluster == w[1].cluster)
            .count() as u64;
        cast::<S>(same) / cast(nodes.len() as u64 - 1)
    };

    Ok(ScoreBreakdown {
        total: weights.time * time + weights.popularity * popularity + weights.coherence * coherence,
        time,
        popularity,
        coherence,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedOrdering<S> {
    pub order: Linearization,
    pub score: ScoreBreakdown<S>,
}

/// Orderings by descending score; equal scores fall back to node-list order.
pub fn rank_orderings<S: Float>(
    lins: Vec<Linearization>,
    dag: &Dag,
    weights: &RankingWeights<S>,
    pop: &PopularityStore,
) -> Result<Vec<RankedOrdering<S>>, SequencingError> {
    let mut ranked = lins
        .into_iter()
        .map(|order| {
            let score = score_ordering(&order, dag, weights, pop)?;
            Ok(RankedOrdering { order, score })
        })
        .collect::<Result<Vec<_>, SequencingError>>()?;
    ranked.sort_by(|a, b| {
        b.score
            .total
            .partial_cmp(&a.score.total)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.order.cmp(&b.order))
    });
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{CurriculumGraph, TopicNode};

    fn clustered() -> Dag {
        let mut g = CurriculumGraph::new("t");
        for (id, cluster) in [("a", "x"), ("b", "x"), ("c", "x"), ("p", "y"), ("q", "y")] {
            g.nodes.push(TopicNode::new(id, id, 10).with_cluster(cluster));
        }
        g.nodes.push(TopicNode::new("solo", "solo", 45));
        Dag::new(g).unwrap()
    }

    #[test]
    fn single_node_boundary() {
        let dag = clustered();
        let s = score_ordering(
            &Linearization::from_iter(["solo"]),
            &dag,
            &RankingWeights::<f64>::default(),
            &PopularityStore::default(),
        )
        .unwrap();
        assert_eq!(s.time, 1.0 / 46.0);
        assert_eq!(s.popularity, 0.0);
        assert_eq!(s.coherence, 0.0);
        assert_eq!(s.total, 1.0 / 46.0);
    }

    #[test]
    fn contiguous_cluster_beats_interleaved() {
        let dag = clustered();
        let w = RankingWeights::<f64>::default();
        let pop = PopularityStore::default();
        let contiguous = Linearization::from_iter(["a", "b", "c", "p", "q"]);
        let interleaved = Linearization::from_iter(["a", "p", "b", "q", "c"]);
        // hand count: contiguous has a-b, b-c, p-q = 3 of 4; interleaved has none
        let c1 = score_ordering(&contiguous, &dag, &w, &pop).unwrap();
        let c2 = score_ordering(&interleaved, &dag, &w, &pop).unwrap();
        assert_eq!(c1.coherence, 0.75);
        assert_eq!(c2.coherence, 0.0);
        assert_eq!(c1.time, c2.time);
    }

    #[test]
    fn empty_store_gives_zero_popularity() {
        let dag = clustered();
        let s = score_ordering(
            &Linearization::from_iter(["q", "a", "p"]),
            &dag,
            &RankingWeights::<f32>::default(),
            &PopularityStore::default(),
        )
        .unwrap();
        assert_eq!(s.popularity, 0.0f32);
    }

    #[test]
    fn ranking_ties_and_adoption() {
        let dag = Dag::new(CurriculumGraph::from_required_edges(
            "t",
            &["a", "b", "c", "d"],
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        ))
        .unwrap();
        let first = Linearization::from_iter(["a", "b", "c", "d"]);
        let second = Linearization::from_iter(["a", "c", "b", "d"]);
        let w = RankingWeights::<f64>::default();
        let mut pop = PopularityStore::default();

        let ranked = rank_orderings(vec![second.clone(), first.clone()], &dag, &w, &pop).unwrap();
        assert_eq!(ranked[0].order, first, "equal scores fall back to lexicographic order");

        pop.record_adoption(&second);
        let ranked = rank_orderings(vec![first.clone(), second.clone()], &dag, &w, &pop).unwrap();
        assert_eq!(ranked[0].order, second);
        assert!(ranked[0].score.popularity > ranked[1].score.popularity);

        assert!(rank_orderings(Vec::new(), &dag, &w, &pop).unwrap().is_empty());
    }

    #[test]
    fn weights_validation() {
        assert!(RankingWeights::new(0.0, 0.0, 0.0).is_err());
        assert!(RankingWeights::new(-1.0, 1.0, 0.0).is_err());
        assert!(RankingWeights::new(f64::NAN, 1.0, 0.0).is_err());
        assert!(RankingWeights::new(0.0, 2.0, 0.0).is_ok());
    }

    #[test]
    fn unknown_node_rejected() {
        let dag = clustered();
        let err = score_ordering(
            &Linearization::from_iter(["zz"]),
            &dag,
            &RankingWeights::<f64>::default(),
            &PopularityStore::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SequencingError::UnknownNode(_)));
    }
}
