//! Stateless next-hop policies for geographic forwarding.
//!
//! Every policy breaks ties by the lowest node id so that selection is a total
//! function of the view (plus the random stream, for random compass).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{angle_offset, distance, projection_advance, signed_angle, Position};
use crate::topology::NodeId;

/// What the forwarder `u` knows when choosing a next hop toward `dest`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateView {
    pub node: NodeId,
    pub pos: Position,
    pub dest: Position,
    pub candidates: Vec<(NodeId, Position)>,
}

impl CandidateView {
    /// Drops candidates that coincide with the forwarder. Selection needs
    /// `dest != pos`; callers guarantee that.
    pub fn new(node: NodeId, pos: Position, dest: Position, candidates: Vec<(NodeId, Position)>) -> Self {
        let candidates = candidates
            .into_iter()
            .filter(|&(id, p)| id != node && distance(p, pos) > crate::geometry::EPS)
            .collect();
        Self {
            node,
            pos,
            dest,
            candidates,
        }
    }

    fn offset(&self, v: Position) -> f64 {
        angle_offset(self.pos, v, self.dest).expect("well-formed view")
    }

    fn signed(&self, v: Position) -> f64 {
        signed_angle(self.pos, v, self.dest).expect("well-formed view")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum PolicyKind {
    Compass,
    RandomCompass,
    Greedy,
    Mfr,
    /// Nearest neighbor inside a cone of half-angle alpha (degrees).
    NearestNeighbor(f64),
    /// Farthest neighbor inside a cone of half-angle alpha (degrees).
    FarthestNeighbor(f64),
    GreedyCompass,
}

impl PolicyKind {
    pub const ALL_FIXED: [PolicyKind; 5] = [
        PolicyKind::Compass,
        PolicyKind::RandomCompass,
        PolicyKind::Greedy,
        PolicyKind::Mfr,
        PolicyKind::GreedyCompass,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Compass => "compass",
            Self::RandomCompass => "random_compass",
            Self::Greedy => "greedy",
            Self::Mfr => "mfr",
            Self::NearestNeighbor(_) => "nearest_neighbor",
            Self::FarthestNeighbor(_) => "farthest_neighbor",
            Self::GreedyCompass => "greedy_compass",
        }
    }
}

/// Lowest key wins, ties to the lowest id.
fn argmin<I>(items: I) -> Option<NodeId>
where
    I: IntoIterator<Item = (f64, NodeId)>,
{
    items
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// The two candidates straddling line u→d: the one with the smallest
/// counterclockwise angle and the one with the smallest clockwise angle.
/// A candidate exactly on the ray counts on the counterclockwise side.
pub fn straddling_pair(view: &CandidateView) -> (Option<NodeId>, Option<NodeId>) {
    let ccw = argmin(
        view.candidates
            .iter()
            .map(|&(id, p)| (view.signed(p), id))
            .filter(|&(a, _)| a >= 0.0),
    );
    let cw = argmin(
        view.candidates
            .iter()
            .map(|&(id, p)| (view.signed(p), id))
            .filter(|&(a, _)| a < 0.0)
            .map(|(a, id)| (-a, id)),
    );
    (ccw, cw)
}

/// The two smallest-offset candidates, for the one-sided greedy compass case.
fn two_tightest(view: &CandidateView) -> Vec<NodeId> {
    let mut v: Vec<(f64, NodeId)> = view
        .candidates
        .iter()
        .map(|&(id, p)| (view.offset(p), id))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    v.into_iter().take(2).map(|(_, id)| id).collect()
}

fn position_of(view: &CandidateView, id: NodeId) -> Position {
    view.candidates
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .expect("id drawn from the view")
}

/// Picks the next hop under `policy`. `None` means the policy's candidate set
/// is empty.
pub fn select_next_hop<R: Rng + ?Sized>(
    view: &CandidateView,
    policy: PolicyKind,
    rng: &mut R,
) -> Option<NodeId> {
    let cands = &view.candidates;
    match policy {
        PolicyKind::Compass => argmin(cands.iter().map(|&(id, p)| (view.offset(p), id))),
        PolicyKind::RandomCompass => match straddling_pair(view) {
            (Some(a), Some(b)) => Some(if rng.gen_bool(0.5) { a } else { b }),
            (a, b) => a.or(b),
        },
        PolicyKind::Greedy => argmin(cands.iter().map(|&(id, p)| (distance(p, view.dest), id))),
        PolicyKind::Mfr => {
            // distance from the projection of v on line ud to d
            let ud = distance(view.pos, view.dest);
            argmin(cands.iter().map(|&(id, p)| {
                let adv = projection_advance(view.pos, p, view.dest).expect("well-formed view");
                ((ud - adv).abs(), id)
            }))
        }
        PolicyKind::NearestNeighbor(alpha) => argmin(
            cands
                .iter()
                .filter(|&&(_, p)| view.offset(p) <= alpha)
                .map(|&(id, p)| (distance(view.pos, p), id)),
        ),
        PolicyKind::FarthestNeighbor(alpha) => argmin(
            cands
                .iter()
                .filter(|&&(_, p)| view.offset(p) <= alpha)
                .map(|&(id, p)| (-distance(view.pos, p), id)),
        ),
        PolicyKind::GreedyCompass => {
            let pair: Vec<NodeId> = match straddling_pair(view) {
                (Some(a), Some(b)) => vec![a, b],
                _ => two_tightest(view),
            };
            argmin(
                pair.into_iter()
                    .map(|id| (distance(position_of(view, id), view.dest), id)),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Position {
        Position::new(x, y)
    }

    fn all_policies() -> Vec<PolicyKind> {
        let mut v = PolicyKind::ALL_FIXED.to_vec();
        v.push(PolicyKind::NearestNeighbor(30.0));
        v.push(PolicyKind::FarthestNeighbor(60.0));
        v
    }

    fn three_view() -> CandidateView {
        CandidateView::new(
            NodeId(0),
            p(0.0, 0.0),
            p(100.0, 0.0),
            vec![(NodeId(1), p(10.0, 1.0)), (NodeId(2), p(10.0, 10.0)), (NodeId(3), p(5.0, -5.0))],
        )
    }

    #[test]
    fn on_segment_candidate_is_unanimous() {
        let view = CandidateView::new(NodeId(0), p(0.0, 0.0), p(100.0, 0.0), vec![(NodeId(4), p(40.0, 0.0))]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for pol in all_policies() {
            assert_eq!(select_next_hop(&view, pol, &mut rng), Some(NodeId(4)), "{pol:?}");
        }
    }

    #[test]
    fn three_candidate_examples() {
        let view = three_view();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_next_hop(&view, PolicyKind::Compass, &mut rng), Some(NodeId(1)));
        assert_eq!(select_next_hop(&view, PolicyKind::Greedy, &mut rng), Some(NodeId(1)));
        assert_eq!(
            select_next_hop(&view, PolicyKind::NearestNeighbor(30.0), &mut rng),
            Some(NodeId(1))
        );
        assert_eq!(
            select_next_hop(&view, PolicyKind::FarthestNeighbor(60.0), &mut rng),
            Some(NodeId(2))
        );
        // straddling pair is v1 (5.7° ccw) and v3 (45° cw); v1 is closer to d
        assert_eq!(straddling_pair(&view), (Some(NodeId(1)), Some(NodeId(3))));
        assert_eq!(select_next_hop(&view, PolicyKind::GreedyCompass, &mut rng), Some(NodeId(1)));
    }

    #[test]
    fn random_compass_is_seeded() {
        let view = three_view();
        for seed in 0..20 {
            let a = select_next_hop(&view, PolicyKind::RandomCompass, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = select_next_hop(&view, PolicyKind::RandomCompass, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(a, b);
            assert!(a == Some(NodeId(1)) || a == Some(NodeId(3)));
        }
    }

    #[test]
    fn empty_views_select_nothing() {
        let view = CandidateView::new(NodeId(0), p(0.0, 0.0), p(100.0, 0.0), vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for pol in all_policies() {
            assert_eq!(select_next_hop(&view, pol, &mut rng), None);
        }
        // nothing inside a narrow cone
        let view = CandidateView::new(NodeId(0), p(0.0, 0.0), p(100.0, 0.0), vec![(NodeId(1), p(0.0, 10.0))]);
        assert_eq!(select_next_hop(&view, PolicyKind::NearestNeighbor(30.0), &mut rng), None);
    }

    #[test]
    fn one_sided_fallbacks() {
        // everything above the line: random compass takes the ccw winner,
        // greedy compass compares the two tightest
        let view = CandidateView::new(
            NodeId(0),
            p(0.0, 0.0),
            p(100.0, 0.0),
            vec![(NodeId(1), p(10.0, 5.0)), (NodeId(2), p(30.0, 20.0)), (NodeId(3), p(1.0, 20.0))],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_next_hop(&view, PolicyKind::RandomCompass, &mut rng), Some(NodeId(1)));
        assert_eq!(select_next_hop(&view, PolicyKind::GreedyCompass, &mut rng), Some(NodeId(2)));
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let view = CandidateView::new(
            NodeId(0),
            p(0.0, 0.0),
            p(100.0, 0.0),
            vec![(NodeId(9), p(10.0, 10.0)), (NodeId(5), p(10.0, -10.0))],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for pol in [PolicyKind::Compass, PolicyKind::Greedy, PolicyKind::Mfr, PolicyKind::GreedyCompass] {
            assert_eq!(select_next_hop(&view, pol, &mut rng), Some(NodeId(5)), "{pol:?}");
        }
    }

    #[test]
    fn mfr_penalizes_overshoot() {
        let view = CandidateView::new(
            NodeId(0),
            p(0.0, 0.0),
            p(100.0, 0.0),
            vec![(NodeId(1), p(120.0, 0.0)), (NodeId(2), p(90.0, 30.0))],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_next_hop(&view, PolicyKind::Mfr, &mut rng), Some(NodeId(2)));
        assert_eq!(select_next_hop(&view, PolicyKind::Greedy, &mut rng), Some(NodeId(1)));
    }
}
