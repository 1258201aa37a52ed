//! Domain types shared across the engine and the per-step agent tick.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::emotions::decay_emotions;
use crate::societies::SocietyPolicy;

/// Upper bound of the health scale.
pub const MAX_HEALTH: u32 = 100;
/// Upper bound of the packet inventory and of the expiry counter.
pub const MAX_FOOD: u32 = 15;

pub const INITIAL_HEALTH_MEAN: f64 = 70.0;
pub const INITIAL_HEALTH_SD: f64 = 15.0;

/// Identifier of an agent, stable for the whole run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Who an emotion is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EmotionTarget {
    /// Self-directed (guilt, pride and the like).
    SelfDirected,
    Agent(AgentId),
}

/// A felt (and, since felt equals expressed, visible) emotion.
///
/// The sign of `intensity` is the valence, its magnitude the strength.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Emotion {
    pub source: AgentId,
    pub target: EmotionTarget,
    pub intensity: i32,
    pub duration: u32,
    pub decay: u32,
}

impl Emotion {
    pub fn is_negative(&self) -> bool {
        self.intensity < 0
    }

    pub fn is_alive(&self) -> bool {
        self.duration > 0 && self.intensity != 0
    }
}

/// Intensity, lifetime and decay of an emotion before it is bound to a source
/// and a target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmotionTemplate {
    pub intensity: i32,
    pub duration: u32,
    pub decay: u32,
}

impl EmotionTemplate {
    pub fn instantiate(self, source: AgentId, target: EmotionTarget) -> Emotion {
        Emotion {
            source,
            target,
            intensity: self.intensity,
            duration: self.duration,
            decay: self.decay,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormKind {
    Commitment,
    Prohibition,
    Sanction,
}

/// Role-based selector for the subject and object of a norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoleSelector {
    AnyAgent,
    QueueMember,
    /// The other members of the bearer's queue.
    OtherQueueMembers,
    Violator,
    Complier,
    /// Agents co-located with the actor when it acted.
    Observers,
}

impl RoleSelector {
    /// Whether an agent holding `beliefs` can play this role as a decision maker.
    pub fn matches(self, beliefs: &Beliefs) -> bool {
        match self {
            RoleSelector::AnyAgent => true,
            RoleSelector::QueueMember | RoleSelector::OtherQueueMembers => {
                beliefs.location.is_in_queue()
            }
            // Reactive roles are assigned after the fact, never while deciding.
            RoleSelector::Violator | RoleSelector::Complier | RoleSelector::Observers => false,
        }
    }
}

/// Closed set of antecedent predicates over beliefs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Antecedent {
    Always,
    InQueue,
    /// Holds when the ambient valence at the bearer's location is negative.
    NegativeAffectAround,
    /// Holds after the trigger action has been observed.
    Observed(Action),
}

impl Antecedent {
    pub fn holds(self, beliefs: &Beliefs) -> bool {
        match self {
            Antecedent::Always => true,
            Antecedent::InQueue => beliefs.location.is_in_queue(),
            Antecedent::NegativeAffectAround => beliefs.ambient_valence < 0,
            Antecedent::Observed(action) => beliefs
                .observed_actions
                .iter()
                .any(|&(_, observed)| observed == action),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SanctionValence {
    Positive,
    Negative,
}

/// Closed set of consequent predicates over actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Consequent {
    /// The bearer performs the given action.
    Perform(Action),
    /// The bearer refrains from the given action.
    Refrain(Action),
    /// Reaction norm: the object sanctions the subject with the given valence.
    Sanction(SanctionValence),
}

impl Consequent {
    pub fn holds(self, action: Action) -> bool {
        match self {
            Consequent::Perform(expected) => action == expected,
            Consequent::Refrain(forbidden) => action != forbidden,
            Consequent::Sanction(_) => true,
        }
    }
}

/// Normative rule `kind(subject, object, antecedent, consequent)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Norm {
    pub name: &'static str,
    pub kind: NormKind,
    pub subject: RoleSelector,
    pub object: RoleSelector,
    pub antecedent: Antecedent,
    pub consequent: Consequent,
}

impl Norm {
    /// Commitments and prohibitions constrain the bearer's own behavior;
    /// sanction norms only describe reactions to it.
    pub fn is_behavioral(&self) -> bool {
        self.kind != NormKind::Sanction
    }
}

/// Maps the expected behavior under a norm to the emotions elicited by its
/// satisfaction and violation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElicitedEmotionRule {
    pub name: &'static str,
    pub expected_action: Action,
    pub emotion_on_satisfaction: EmotionTemplate,
    pub emotion_on_violation: EmotionTemplate,
}

impl ElicitedEmotionRule {
    pub fn new(
        name: &'static str,
        expected_action: Action,
        emotion_on_satisfaction: EmotionTemplate,
        emotion_on_violation: EmotionTemplate,
    ) -> Self {
        assert!(
            emotion_on_satisfaction.intensity >= 0,
            "satisfaction must not elicit a negative emotion"
        );
        assert!(
            emotion_on_violation.intensity <= 0,
            "violation must not elicit a positive emotion"
        );
        ElicitedEmotionRule {
            name,
            expected_action,
            emotion_on_satisfaction,
            emotion_on_violation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    Home,
    Traveling,
    /// 1-based position, 1 being the head of the line.
    InQueue(usize),
    InStore,
}

impl Location {
    pub fn is_in_queue(self) -> bool {
        matches!(self, Location::InQueue(_))
    }

    pub fn queue_position(self) -> Option<usize> {
        match self {
            Location::InQueue(position) => Some(position),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Location::Home => "home",
            Location::Traveling => "traveling",
            Location::InQueue(_) => "queue",
            Location::InStore => "store",
        }
    }
}

/// Mirror of the agent's own health and food state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Vitals {
    pub health: u32,
    pub food_packets: u32,
    pub food_expiry: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Beliefs {
    pub location: Location,
    pub queue_snapshot: Arc<[AgentId]>,
    /// Emotions expressed by the agents present at the same location.
    pub observed_emotions: Arc<[Emotion]>,
    /// Sum of `observed_emotions` intensities.
    pub ambient_valence: i64,
    /// Actions performed at this location during the previous step.
    pub observed_actions: Arc<[(AgentId, Action)]>,
    pub own_vitals: Vitals,
}

impl Beliefs {
    pub fn at(location: Location, own_vitals: Vitals) -> Self {
        Beliefs {
            location,
            queue_snapshot: Arc::from(Vec::new()),
            observed_emotions: Arc::from(Vec::new()),
            ambient_valence: 0,
            observed_actions: Arc::from(Vec::new()),
            own_vitals,
        }
    }

    pub fn queue_len(&self) -> usize {
        self.queue_snapshot.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Desire {
    HaveFood,
    Wandering,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Intention {
    GetFood,
    Wandering,
}

/// Actions, declared in tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Stay,
    Jump,
    GoToStore,
    GoHome,
    ConsumeFood,
    Wander,
    Noop,
}

impl Action {
    pub const ALL: [Action; 7] = [
        Action::Stay,
        Action::Jump,
        Action::GoToStore,
        Action::GoHome,
        Action::ConsumeFood,
        Action::Wander,
        Action::Noop,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Action::Stay => "stay",
            Action::Jump => "jump",
            Action::GoToStore => "go_to_store",
            Action::GoHome => "go_home",
            Action::ConsumeFood => "consume_food",
            Action::Wander => "wander",
            Action::Noop => "noop",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub health: u32,
    pub deceased: bool,
    pub food_packets: u32,
    pub food_expiry: u32,
    pub beliefs: Beliefs,
    pub desires: BTreeSet<Desire>,
    pub intention: Intention,
    pub self_emotions: Vec<Emotion>,
    pub received_emotions: Vec<Emotion>,
    pub policy: SocietyPolicy,
    /// Step at which the agent joined the queue, while it is waiting.
    pub enqueued_at: Option<u64>,
}

impl AgentState {
    pub fn vitals(&self) -> Vitals {
        Vitals {
            health: self.health,
            food_packets: self.food_packets,
            food_expiry: self.food_expiry,
        }
    }

    pub fn location(&self) -> Location {
        self.beliefs.location
    }

    pub fn set_location(&mut self, location: Location) {
        self.beliefs.location = location;
    }
}

/// Rounds and clamps a raw normal draw onto the initial health scale.
pub fn health_from_draw(draw: f64) -> u32 {
    draw.round().clamp(1.0, MAX_HEALTH as f64) as u32
}

pub fn init_agent<R: Rng + ?Sized>(id: AgentId, rng: &mut R, policy: SocietyPolicy) -> AgentState {
    let normal = Normal::new(INITIAL_HEALTH_MEAN, INITIAL_HEALTH_SD).expect("valid normal");
    let health = health_from_draw(normal.sample(rng));
    let vitals = Vitals {
        health,
        food_packets: 0,
        food_expiry: 0,
    };
    let beliefs = Beliefs::at(Location::Home, vitals);
    let desires = BTreeSet::from([Desire::HaveFood, Desire::Wandering]);
    let intention = crate::decision::generate_intention(
        &beliefs,
        &desires,
        crate::decision::DEFAULT_INTENTION_THRESHOLD,
    );
    AgentState {
        id,
        health,
        deceased: false,
        food_packets: 0,
        food_expiry: 0,
        beliefs,
        desires,
        intention,
        self_emotions: Vec::new(),
        received_emotions: Vec::new(),
        policy,
        enqueued_at: None,
    }
}

/// End-of-step bookkeeping: hunger, food expiry and emotion decay.
pub fn tick_agent(mut state: AgentState) -> AgentState {
    assert!(!state.deceased, "deceased agent {} cannot be ticked", state.id);
    state.health = state.health.saturating_sub(1);
    if state.health == 0 {
        state.deceased = true;
    }
    state.food_expiry = state.food_expiry.saturating_sub(1);
    if state.food_expiry == 0 {
        state.food_packets = 0;
    }
    state.self_emotions = decay_emotions(std::mem::take(&mut state.self_emotions));
    state.received_emotions = decay_emotions(std::mem::take(&mut state.received_emotions));
    state.beliefs.own_vitals = state.vitals();
    state
}
