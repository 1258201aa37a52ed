//! The decision loop of an agent and the utility model behind action selection.
//!
//! One pass of the loop is: form beliefs, generate an intention, select an
//! action, then (after the world executed it) appraise the agent's own norm
//! outcomes and the outcomes of the agents it observed.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;

use crate::emotions::{elicit_other_directed, elicit_self_directed, EmotionParams};
use crate::model::{
    Action, AgentId, AgentState, Beliefs, Desire, Emotion, Intention, Location, Norm,
};
use crate::norms::{check_fulfillment, identify_and_instantiate, ActiveNorm, FulfillmentOutcome};
use crate::societies::{choose, SocietyKind, SocietyPolicy};

pub const DEFAULT_INTENTION_THRESHOLD: u32 = 80;

/// Payoffs and rates used by the utility model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionParams {
    pub intention_threshold: u32,
    /// Agents served per step, used to turn a queue position into a wait.
    pub service_rate: usize,
    pub deceased_payoff: f64,
    pub compliance_payoff: f64,
    pub violation_payoff: f64,
    pub goal_reward: f64,
}

impl Default for DecisionParams {
    fn default() -> Self {
        DecisionParams {
            intention_threshold: DEFAULT_INTENTION_THRESHOLD,
            service_rate: 8,
            deceased_payoff: -500.0,
            compliance_payoff: 1.0,
            violation_payoff: -1.0,
            goal_reward: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UtilityEstimate {
    pub action: Action,
    pub extrinsic: f64,
    pub intrinsic: f64,
    pub total: f64,
}

impl UtilityEstimate {
    fn new(action: Action, extrinsic: f64, intrinsic: f64) -> Self {
        UtilityEstimate {
            action,
            extrinsic,
            intrinsic,
            total: extrinsic + intrinsic,
        }
    }

    /// Scales the negative components of a norm-violating action by `m`.
    pub fn amplified(self, m: f64, violating: bool) -> Self {
        if !violating {
            return self;
        }
        let scale = |x: f64| if x < 0.0 { x * m } else { x };
        UtilityEstimate::new(self.action, scale(self.extrinsic), scale(self.intrinsic))
    }
}

/// What an agent can perceive from where it stands.
#[derive(Clone, Debug)]
pub struct WorldView {
    pub location: Location,
    pub queue: Arc<[AgentId]>,
    pub emotions: Arc<[Emotion]>,
    pub ambient_valence: i64,
    pub actions: Arc<[(AgentId, Action)]>,
}

impl WorldView {
    /// An agent with nobody around.
    pub fn alone(location: Location) -> Self {
        WorldView {
            location,
            queue: Arc::from(Vec::new()),
            emotions: Arc::from(Vec::new()),
            ambient_valence: 0,
            actions: Arc::from(Vec::new()),
        }
    }
}

/// Everything shared by the agents deciding in one step.
#[derive(Clone, Copy, Debug)]
pub struct DecisionContext<'a> {
    pub norm_base: &'a [Norm],
    pub params: &'a DecisionParams,
    pub emotions: &'a EmotionParams,
    pub step: u64,
}

pub fn form_beliefs(agent: &AgentState, view: &WorldView) -> Beliefs {
    assert!(!agent.deceased, "deceased agent {} cannot observe", agent.id);
    Beliefs {
        location: view.location,
        queue_snapshot: view.queue.clone(),
        observed_emotions: view.emotions.clone(),
        ambient_valence: view.ambient_valence,
        observed_actions: view.actions.clone(),
        own_vitals: agent.vitals(),
    }
}

pub fn generate_intention(beliefs: &Beliefs, desires: &BTreeSet<Desire>, threshold: u32) -> Intention {
    if desires.contains(&Desire::HaveFood) && beliefs.own_vitals.health < threshold {
        Intention::GetFood
    } else {
        Intention::Wandering
    }
}

pub fn available_actions(beliefs: &Beliefs) -> Vec<Action> {
    let has_food = beliefs.own_vitals.food_packets > 0;
    let mut actions = match beliefs.location {
        Location::Home => vec![Action::GoToStore, Action::Wander],
        Location::InQueue(_) => vec![Action::Stay, Action::Jump],
        Location::InStore => return vec![Action::GoHome],
        Location::Traveling => return vec![Action::Noop],
    };
    if has_food {
        actions.push(Action::ConsumeFood);
    }
    actions.sort();
    actions
}

/// Steps until an agent at 1-based `position` is served.
pub fn expected_wait(position: usize, service_rate: usize) -> usize {
    position.div_ceil(service_rate.max(1))
}

pub fn result_utility(
    beliefs: &Beliefs,
    intention: Intention,
    action: Action,
    active_norms: &[ActiveNorm],
    policy: &SocietyPolicy,
    params: &DecisionParams,
) -> UtilityEstimate {
    assert!(
        available_actions(beliefs).contains(&action),
        "{action:?} is not available at {:?}",
        beliefs.location
    );
    let vitals = beliefs.own_vitals;
    let position_after = match (action, beliefs.location) {
        (Action::Stay, Location::InQueue(p)) => Some(p),
        (Action::Jump, Location::InQueue(_)) => Some(1),
        _ => None,
    };
    let death_risk = position_after
        .map(|p| expected_wait(p, params.service_rate) >= vitals.health as usize)
        .unwrap_or(false);
    let advances_goal = match intention {
        Intention::GetFood => match action {
            Action::GoToStore => vitals.food_packets == 0,
            Action::ConsumeFood | Action::Stay | Action::Jump => true,
            _ => false,
        },
        Intention::Wandering => action == Action::Wander,
    };
    let extrinsic = if death_risk { params.deceased_payoff } else { 0.0 }
        + if advances_goal { params.goal_reward } else { 0.0 };

    let mut intrinsic = 0.0;
    if !active_norms.is_empty() {
        for active in active_norms {
            intrinsic += if active.norm.consequent.holds(action) {
                params.compliance_payoff
            } else {
                params.violation_payoff
            };
        }
        if policy.kind == SocietyKind::Noe {
            intrinsic += policy.experience_of(action).unwrap_or(0.0);
        }
    }
    UtilityEstimate::new(action, extrinsic, intrinsic)
}

/// Overestimation factor for adverse outcomes under negative affect, in [1, 3].
pub fn amplifier(observed_and_self_emotions: &[Emotion]) -> f64 {
    amplifier_from_valence(crate::emotions::aggregate_valence(observed_and_self_emotions))
}

pub fn amplifier_from_valence(valence: i64) -> f64 {
    let negative = valence.min(0).unsigned_abs().min(8);
    1.0 + negative as f64 / 4.0
}

/// First action with the maximal total, scanning in tie-break order.
pub fn argmax_action(utilities: &[UtilityEstimate]) -> Action {
    let mut sorted: Vec<_> = utilities.to_vec();
    sorted.sort_by_key(|u| u.action);
    sorted
        .iter()
        .fold(None::<&UtilityEstimate>, |best, u| match best {
            Some(b) if b.total >= u.total => Some(b),
            _ => Some(u),
        })
        .map(|u| u.action)
        .expect("at least one utility")
}

/// Result of the pre-action half of the loop.
#[derive(Clone, Debug)]
pub struct Decision {
    pub beliefs: Beliefs,
    pub intention: Intention,
    pub active_norms: Vec<ActiveNorm>,
    pub utilities: Vec<UtilityEstimate>,
    pub action: Action,
}

pub fn select_action<R: Rng + ?Sized>(
    id: AgentId,
    beliefs: &Beliefs,
    intention: Intention,
    policy: &SocietyPolicy,
    ctx: &DecisionContext<'_>,
    rng: &mut R,
) -> (Action, Vec<ActiveNorm>, Vec<UtilityEstimate>) {
    let actions = available_actions(beliefs);
    // None of the closed antecedents depend on the candidate action, so the
    // active set is shared by every candidate.
    let active = identify_and_instantiate(id, beliefs, ctx.norm_base, actions[0], ctx.step);
    let utilities: Vec<_> = actions
        .iter()
        .map(|&a| result_utility(beliefs, intention, a, &active, policy, ctx.params))
        .collect();
    let action = choose(policy, beliefs, intention, &active, &utilities, rng);
    (action, active, utilities)
}

/// Observe, deliberate and pick an action.
pub fn decide<R: Rng + ?Sized>(
    agent: &AgentState,
    view: &WorldView,
    ctx: &DecisionContext<'_>,
    rng: &mut R,
) -> Decision {
    let beliefs = form_beliefs(agent, view);
    let intention = generate_intention(&beliefs, &agent.desires, ctx.params.intention_threshold);
    let (action, active_norms, utilities) =
        select_action(agent.id, &beliefs, intention, &agent.policy, ctx, rng);
    Decision {
        beliefs,
        intention,
        active_norms,
        utilities,
        action,
    }
}

#[derive(Clone, Debug)]
pub struct DecisionStep {
    pub action: Action,
    pub outcomes: Vec<FulfillmentOutcome>,
    /// Self-directed emotions followed by emotions aimed at observed agents.
    pub emotions: Vec<Emotion>,
    pub agent: AgentState,
}

/// One full pass of the loop for a single agent, assuming its action is
/// executed as chosen. The world runs the same pieces phase by phase.
pub fn decision_step<R: Rng + ?Sized>(
    agent: &AgentState,
    view: &WorldView,
    ctx: &DecisionContext<'_>,
    rng: &mut R,
) -> DecisionStep {
    let decision = decide(agent, view, ctx, rng);
    let outcomes: Vec<_> = decision
        .active_norms
        .iter()
        .map(|n| check_fulfillment(n, decision.action))
        .collect();

    let mut next = agent.clone();
    next.beliefs = decision.beliefs.clone();
    next.intention = decision.intention;

    let rule = ctx.emotions.line_up_rule();
    let kind = agent.policy.kind;
    let mut emotions = Vec::new();
    if kind.emotions_involved() {
        emotions.extend(elicit_self_directed(
            &next,
            &outcomes,
            &agent.received_emotions,
            &rule,
            ctx.emotions,
        ));
    }
    if kind.sanctions() && view.location.is_in_queue() {
        for &(other, other_action) in view.actions.iter() {
            if other == agent.id {
                continue;
            }
            let witnessed =
                ActiveNorm::new(ctx.norm_base[0].clone(), other, view.queue.iter().copied(), ctx.step);
            let outcome = check_fulfillment(&witnessed, other_action);
            emotions.extend(elicit_other_directed(&next, other, &[outcome], &rule, ctx.emotions));
        }
    }
    next.self_emotions.extend(
        emotions
            .iter()
            .filter(|e| e.target == crate::model::EmotionTarget::SelfDirected),
    );
    DecisionStep {
        action: decision.action,
        outcomes,
        emotions,
        agent: next,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_agent, Vitals};
    use crate::norms::default_norm_base;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn beliefs(location: Location, health: u32, packets: u32, queue_len: u32) -> Beliefs {
        let mut b = Beliefs::at(
            location,
            Vitals {
                health,
                food_packets: packets,
                food_expiry: if packets > 0 { 10 } else { 0 },
            },
        );
        b.queue_snapshot = Arc::from((0..queue_len).map(AgentId).collect::<Vec<_>>());
        b
    }

    fn active(b: &Beliefs) -> Vec<ActiveNorm> {
        identify_and_instantiate(AgentId(999), b, &default_norm_base(), Action::Stay, 0)
    }

    fn desires() -> BTreeSet<Desire> {
        BTreeSet::from([Desire::HaveFood, Desire::Wandering])
    }

    #[test]
    fn intention_threshold_is_strict() {
        let at = |h| generate_intention(&beliefs(Location::Home, h, 0, 0), &desires(), 80);
        assert_eq!(at(79), Intention::GetFood);
        assert_eq!(at(80), Intention::Wandering);
        assert_eq!(at(100), Intention::Wandering);
    }

    #[test]
    fn actions_per_location() {
        assert_eq!(
            available_actions(&beliefs(Location::InQueue(3), 50, 0, 5)),
            vec![Action::Stay, Action::Jump]
        );
        assert_eq!(
            available_actions(&beliefs(Location::Home, 50, 2, 0)),
            vec![Action::GoToStore, Action::ConsumeFood, Action::Wander]
        );
        assert_eq!(available_actions(&beliefs(Location::InStore, 50, 2, 0)), vec![Action::GoHome]);
        assert_eq!(available_actions(&beliefs(Location::Traveling, 50, 0, 0)), vec![Action::Noop]);
    }

    #[test]
    fn survival_pressure_favours_jumping() {
        // ceil(40 / 8) = 5 >= 3 -> staying is fatal; at the head ceil(1/8) = 1 < 3.
        let b = beliefs(Location::InQueue(40), 3, 0, 40);
        let p = SocietyPolicy::new(SocietyKind::Noe);
        let params = DecisionParams::default();
        let n = active(&b);
        let stay = result_utility(&b, Intention::GetFood, Action::Stay, &n, &p, &params);
        let jump = result_utility(&b, Intention::GetFood, Action::Jump, &n, &p, &params);
        assert_eq!(stay.extrinsic, -500.0 + 10.0);
        assert_eq!(stay.intrinsic, 1.0);
        assert_eq!(jump.extrinsic, 10.0);
        assert_eq!(jump.intrinsic, -1.0);
        assert!(jump.total > stay.total);
    }

    #[test]
    fn healthy_agent_prefers_staying() {
        let b = beliefs(Location::InQueue(8), 90, 0, 20);
        let p = SocietyPolicy::new(SocietyKind::Noe);
        let params = DecisionParams::default();
        let n = active(&b);
        let stay = result_utility(&b, Intention::GetFood, Action::Stay, &n, &p, &params);
        let jump = result_utility(&b, Intention::GetFood, Action::Jump, &n, &p, &params);
        assert_eq!((stay.extrinsic, stay.intrinsic), (10.0, 1.0));
        assert_eq!((jump.extrinsic, jump.intrinsic), (10.0, -1.0));
        assert_eq!(argmax_action(&[stay, jump]), Action::Stay);
    }

    #[test]
    fn goal_term_sends_hungry_agents_shopping() {
        let b = beliefs(Location::Home, 60, 0, 0);
        let p = SocietyPolicy::new(SocietyKind::Noe);
        let params = DecisionParams::default();
        let u: Vec<_> = available_actions(&b)
            .into_iter()
            .map(|a| result_utility(&b, Intention::GetFood, a, &[], &p, &params))
            .collect();
        assert_eq!(argmax_action(&u), Action::GoToStore);
    }

    #[test]
    #[should_panic(expected = "not available")]
    fn utility_of_unavailable_action_panics() {
        let b = beliefs(Location::Home, 60, 0, 0);
        result_utility(
            &b,
            Intention::GetFood,
            Action::Jump,
            &[],
            &SocietyPolicy::new(SocietyKind::Noe),
            &DecisionParams::default(),
        );
    }

    #[test]
    fn amplifier_examples() {
        assert_eq!(amplifier_from_valence(0), 1.0);
        assert_eq!(amplifier_from_valence(12), 1.0);
        assert_eq!(amplifier_from_valence(-4), 2.0);
        assert_eq!(amplifier_from_valence(-100), 3.0);
        assert_eq!(amplifier(&[]), 1.0);
    }

    fn ctx_parts() -> (Vec<Norm>, DecisionParams, EmotionParams) {
        (default_norm_base(), DecisionParams::default(), EmotionParams::default())
    }

    fn agent(id: u32, kind: SocietyKind, health: u32) -> AgentState {
        let mut rng = ChaCha8Rng::seed_from_u64(id as u64);
        let mut a = init_agent(AgentId(id), &mut rng, SocietyPolicy::new(kind));
        a.health = health;
        a
    }

    #[test]
    fn beliefs_mirror_the_view() {
        let a = agent(4, SocietyKind::Noe, 70);
        let alone = form_beliefs(&a, &WorldView::alone(Location::Home));
        assert!(alone.observed_emotions.is_empty() && alone.observed_actions.is_empty());

        let queue: Arc<[AgentId]> = Arc::from((0..10).map(AgentId).collect::<Vec<_>>());
        let grumble = Emotion {
            source: AgentId(3),
            target: crate::model::EmotionTarget::Agent(AgentId(9)),
            intensity: -1,
            duration: 1,
            decay: 1,
        };
        let view = WorldView {
            location: Location::InQueue(5),
            queue,
            emotions: Arc::from(vec![grumble]),
            ambient_valence: -1,
            actions: Arc::from(Vec::new()),
        };
        let b = form_beliefs(&a, &view);
        assert_eq!(b.queue_len(), 10);
        assert_eq!(b.location.queue_position(), Some(5));
        assert!(b.observed_emotions.contains(&grumble));
    }

    #[test]
    fn lone_healthy_agent_wanders() {
        let (base, params, emo) = ctx_parts();
        let ctx = DecisionContext { norm_base: &base, params: &params, emotions: &emo, step: 0 };
        let a = agent(1, SocietyKind::Noe, 95);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let step = decision_step(&a, &WorldView::alone(Location::Home), &ctx, &mut rng);
        assert_eq!(step.action, Action::Wander);
        assert!(step.emotions.is_empty());
        assert_eq!(step.agent.intention, Intention::Wandering);
    }

    #[test]
    fn staying_feels_good_and_witnessed_jump_is_sanctioned() {
        let (base, params, emo) = ctx_parts();
        let ctx = DecisionContext { norm_base: &base, params: &params, emotions: &emo, step: 3 };
        let a = agent(2, SocietyKind::Noe, 60);
        let view = WorldView {
            location: Location::InQueue(3),
            queue: Arc::from(vec![AgentId(7), AgentId(5), AgentId(2)]),
            emotions: Arc::from(Vec::new()),
            ambient_valence: 0,
            actions: Arc::from(vec![(AgentId(7), Action::Jump)]),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let step = decision_step(&a, &view, &ctx, &mut rng);
        assert_eq!(step.action, Action::Stay);
        let own: Vec<_> = step
            .emotions
            .iter()
            .filter(|e| e.target == crate::model::EmotionTarget::SelfDirected)
            .map(|e| e.intensity)
            .collect();
        assert_eq!(own, vec![1]);
        let at_violator: Vec<_> = step
            .emotions
            .iter()
            .filter(|e| e.target == crate::model::EmotionTarget::Agent(AgentId(7)))
            .map(|e| e.intensity)
            .collect();
        assert_eq!(at_violator, vec![-1]);
    }

    #[test]
    fn obedient_and_anarchy_choices_in_queue() {
        let (base, params, emo) = ctx_parts();
        let ctx = DecisionContext { norm_base: &base, params: &params, emotions: &emo, step: 0 };
        let view = WorldView {
            location: Location::InQueue(12),
            queue: Arc::from((0..20).map(AgentId).collect::<Vec<_>>()),
            emotions: Arc::from(Vec::new()),
            ambient_valence: -6,
            actions: Arc::from(Vec::new()),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for health in [1, 2, 60] {
            let ob = agent(11, SocietyKind::Obedient, health);
            assert_eq!(decide(&ob, &view, &ctx, &mut rng).action, Action::Stay);
        }
        let an = agent(11, SocietyKind::Anarchy, 60);
        assert_eq!(decide(&an, &view, &ctx, &mut rng).action, Action::Jump);
        let noe = agent(11, SocietyKind::Noe, 60);
        assert_eq!(decide(&noe, &view, &ctx, &mut rng).action, Action::Stay);
    }

    fn arb_estimate() -> impl Strategy<Value = UtilityEstimate> {
        (0usize..7, -600i32..60, -20i32..20).prop_map(|(a, e, i)| {
            UtilityEstimate::new(Action::ALL[a], e as f64, i as f64)
        })
    }

    proptest! {
        #[test]
        fn argmax_is_scale_invariant(us in prop::collection::vec(arb_estimate(), 1..7), c in 0.01f64..100.0) {
            let scaled: Vec<_> = us.iter().map(|u| UtilityEstimate { total: u.total * c, ..*u }).collect();
            prop_assert_eq!(argmax_action(&us), argmax_action(&scaled));
        }

        #[test]
        fn amplifier_stays_in_range(v in -1000i64..1000) {
            let m = amplifier_from_valence(v);
            prop_assert!((1.0..=3.0).contains(&m));
            if v >= 0 { prop_assert_eq!(m, 1.0); }
        }
    }
}
