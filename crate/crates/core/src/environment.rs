//! The line-up world: homes, one queue, one store and the global step.

use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::decision::{decide, generate_intention, DecisionContext, DecisionParams, WorldView};
use crate::emotions::{aggregate_valence, elicit_other_directed, elicit_self_directed, EmotionParams};
use crate::metrics::StepMetrics;
use crate::model::{
    init_agent, tick_agent, Action, AgentId, AgentState, ElicitedEmotionRule, Emotion, Location,
    Norm, MAX_FOOD, MAX_HEALTH,
};
use crate::norms::{check_fulfillment, default_norm_base, Fulfillment, FulfillmentOutcome};
use crate::societies::{SocietyKind, SocietyPolicy};

/// Customers the store can hold (and serve) at one time.
pub const STORE_CAPACITY: usize = 8;

const INIT_STREAM: u64 = 0;
const DECISION_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Payoffs {
    pub deceased: f64,
    pub compliance: f64,
    pub violation: f64,
}

impl Default for Payoffs {
    fn default() -> Self {
        Payoffs {
            deceased: -500.0,
            compliance: 1.0,
            violation: -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FoodParams {
    pub packets_per_service: u32,
    pub restore_per_packet: u32,
    pub max_packets: u32,
    pub expiry: u32,
}

impl Default for FoodParams {
    fn default() -> Self {
        FoodParams {
            packets_per_service: 3,
            restore_per_packet: 20,
            max_packets: MAX_FOOD,
            expiry: MAX_FOOD,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n_agents: usize,
    pub queue_size: usize,
    pub n_steps: u64,
    pub society: SocietyKind,
    pub seed: u64,
    pub payoffs: Payoffs,
    pub emotion: EmotionParams,
    pub food: FoodParams,
    pub intention_threshold: u32,
    pub goal_reward: f64,
    pub record_events: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_agents: 400,
            queue_size: 80,
            n_steps: 3000,
            society: SocietyKind::Noe,
            seed: 0,
            payoffs: Payoffs::default(),
            emotion: EmotionParams::default(),
            food: FoodParams::default(),
            intention_threshold: crate::decision::DEFAULT_INTENTION_THRESHOLD,
            goal_reward: 10.0,
            record_events: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |field, reason: &str| {
            Err(ConfigError::Invalid {
                field,
                reason: reason.to_string(),
            })
        };
        if self.n_agents == 0 {
            return fail("n_agents", "must be positive");
        }
        if self.n_agents > u32::MAX as usize {
            return fail("n_agents", "too many agents");
        }
        if self.queue_size == 0 {
            return fail("queue_size", "must be positive");
        }
        if self.emotion.unit <= 0 {
            return fail("emotion.unit", "must be positive");
        }
        if self.emotion.duration == 0 {
            return fail("emotion.duration", "must be positive");
        }
        if self.emotion.decay == 0 {
            return fail("emotion.decay", "must be positive");
        }
        if self.food.packets_per_service == 0 {
            return fail("food.packets_per_service", "must be positive");
        }
        if self.food.restore_per_packet == 0 {
            return fail("food.restore_per_packet", "must be positive");
        }
        if self.food.max_packets == 0 || self.food.max_packets > MAX_FOOD {
            return fail("food.max_packets", "must be within 1..=15");
        }
        if self.food.expiry == 0 || self.food.expiry > MAX_FOOD {
            return fail("food.expiry", "must be within 1..=15");
        }
        if self.intention_threshold == 0 || self.intention_threshold > MAX_HEALTH {
            return fail("intention_threshold", "must be within 1..=100");
        }
        if !self.payoffs.deceased.is_finite()
            || !self.payoffs.compliance.is_finite()
            || !self.payoffs.violation.is_finite()
        {
            return fail("payoffs", "must be finite");
        }
        if !self.goal_reward.is_finite() {
            return fail("goal_reward", "must be finite");
        }
        Ok(())
    }

    pub fn decision_params(&self) -> DecisionParams {
        DecisionParams {
            intention_threshold: self.intention_threshold,
            service_rate: STORE_CAPACITY,
            deceased_payoff: self.payoffs.deceased,
            compliance_payoff: self.payoffs.compliance,
            violation_payoff: self.payoffs.violation,
            goal_reward: self.goal_reward,
        }
    }
}

/// One agent's step as seen by the event log.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentEvent {
    pub step: u64,
    pub agent: AgentId,
    pub action: Action,
    pub outcome: Option<Fulfillment>,
    /// Summed intensity of the sanctions delivered to the agent this step.
    pub sanctions_received: i64,
    pub health: u32,
    pub location: Location,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WaitRecord {
    pub agent: AgentId,
    pub enqueued_at: u64,
    pub served_at: u64,
}

impl WaitRecord {
    pub fn wait(&self) -> u64 {
        self.served_at - self.enqueued_at
    }
}

pub struct World {
    pub step: u64,
    pub agents: Vec<AgentState>,
    /// Front of the line first.
    pub queue: Vec<AgentId>,
    pub store: Vec<AgentId>,
    pub config: SimConfig,
    pub norm_base: Vec<Norm>,
    pub metrics: Vec<StepMetrics>,
    pub waits: Vec<WaitRecord>,
    pub events: Option<Vec<AgentEvent>>,
    rule: ElicitedEmotionRule,
    decision_params: DecisionParams,
    rng: ChaCha8Rng,
    last_queue_actions: Arc<[(AgentId, Action)]>,
    deceased: usize,
}

impl World {
    pub fn new(config: SimConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        // Initial health comes from its own stream so that every society
        // starts from the same population for a given seed.
        let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
        init_rng.set_stream(INIT_STREAM);
        let agents = (0..config.n_agents as u32)
            .map(|i| {
                let mut agent =
                    init_agent(AgentId(i), &mut init_rng, SocietyPolicy::new(config.society));
                agent.intention =
                    generate_intention(&agent.beliefs, &agent.desires, config.intention_threshold);
                agent
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(DECISION_STREAM);
        Ok(World {
            step: 0,
            agents,
            queue: Vec::with_capacity(config.queue_size),
            store: Vec::with_capacity(STORE_CAPACITY),
            norm_base: default_norm_base(),
            rule: config.emotion.line_up_rule(),
            decision_params: config.decision_params(),
            metrics: Vec::with_capacity(config.n_steps.min(1 << 16) as usize),
            waits: Vec::new(),
            events: config.record_events.then(Vec::new),
            rng,
            last_queue_actions: Arc::from(Vec::new()),
            deceased: 0,
            config,
        })
    }

    pub fn deceased_count(&self) -> usize {
        self.deceased
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.n_steps
    }

    fn agent(&self, id: AgentId) -> &AgentState {
        &self.agents[id.index()]
    }

    /// Emotions expressed by the agents currently standing in line.
    fn queue_emotions(&self) -> Vec<Emotion> {
        let mut in_queue = vec![false; self.agents.len()];
        for id in &self.queue {
            in_queue[id.index()] = true;
        }
        let mut expressed = Vec::new();
        for agent in self.agents.iter().filter(|a| !a.deceased) {
            if in_queue[agent.id.index()] {
                expressed.extend_from_slice(&agent.self_emotions);
            }
            expressed.extend(
                agent
                    .received_emotions
                    .iter()
                    .filter(|e| in_queue[e.source.index()]),
            );
        }
        expressed
    }

    pub fn step_world(&mut self) {
        assert!(!self.is_finished(), "run already has {} steps", self.config.n_steps);
        let step = self.step;
        let kind = self.config.society;
        let n = self.agents.len();

        // (1) + (2): beliefs and action selection, in id order.
        let queue_arc: Arc<[AgentId]> = Arc::from(self.queue.clone());
        let queue_emotions = self.queue_emotions();
        let queue_valence = aggregate_valence(&queue_emotions);
        let queue_emotions: Arc<[Emotion]> = Arc::from(queue_emotions);
        let ctx = DecisionContext {
            norm_base: &self.norm_base,
            params: &self.decision_params,
            emotions: &self.config.emotion,
            step,
        };
        let mut ids = Vec::with_capacity(n);
        let mut decisions = Vec::with_capacity(n);
        for agent in self.agents.iter().filter(|a| !a.deceased) {
            let view = match agent.location() {
                Location::InQueue(position) => WorldView {
                    location: Location::InQueue(position),
                    queue: queue_arc.clone(),
                    emotions: queue_emotions.clone(),
                    ambient_valence: queue_valence,
                    actions: self.last_queue_actions.clone(),
                },
                other => WorldView::alone(other),
            };
            ids.push(agent.id);
            decisions.push(decide(agent, &view, &ctx, &mut self.rng));
        }
        let acted: Vec<(AgentId, Action)> =
            ids.iter().zip(&decisions).map(|(&id, d)| (id, d.action)).collect();
        for (id, d) in ids.iter().zip(&decisions) {
            let agent = &mut self.agents[id.index()];
            agent.beliefs = d.beliefs.clone();
            agent.intention = d.intention;
        }

        // (3) action application. Moves made in the same step are resolved
        // in random order so that no id is favored when several agents
        // barge in or arrive at once.
        let mut order: Vec<(AgentId, Action)> = acted
            .iter()
            .copied()
            .filter(|(_, a)| !matches!(a, Action::Stay | Action::Wander | Action::Noop))
            .collect();
        order.shuffle(&mut self.rng);
        for &(id, action) in &order {
            match action {
                Action::Jump => {
                    let at = self.queue.iter().position(|&q| q == id).expect("jumper is queued");
                    self.queue.remove(at);
                    self.queue.insert(0, id);
                }
                Action::GoToStore => {
                    if self.queue.len() < self.config.queue_size {
                        self.queue.push(id);
                        let agent = &mut self.agents[id.index()];
                        agent.enqueued_at = Some(step);
                        agent.set_location(Location::InQueue(self.queue.len()));
                    }
                }
                Action::GoHome => {
                    self.store.retain(|&s| s != id);
                    self.agents[id.index()].set_location(Location::Home);
                }
                Action::ConsumeFood => {
                    consume_food(&mut self.agents[id.index()], self.config.food.restore_per_packet);
                }
                Action::Stay | Action::Wander | Action::Noop => unreachable!(),
            }
        }
        self.sync_queue_positions();

        // (4) store service.
        let free = STORE_CAPACITY.saturating_sub(self.store.len());
        let served: Vec<AgentId> = self.queue.drain(..free.min(self.queue.len())).collect();
        let mut step_waits = Vec::with_capacity(served.len());
        for &id in &served {
            let record = self.waiting_time_record(id);
            step_waits.push(record.wait());
            self.waits.push(record);
            let food = self.config.food;
            let agent = &mut self.agents[id.index()];
            agent.food_packets = (agent.food_packets + food.packets_per_service).min(food.max_packets);
            agent.food_expiry = food.expiry;
            agent.enqueued_at = None;
            agent.set_location(Location::InStore);
            self.store.push(id);
        }
        self.sync_queue_positions();

        // (5) fulfillment checking.
        let outcomes: Vec<Vec<FulfillmentOutcome>> = decisions
            .iter()
            .map(|d| {
                d.active_norms
                    .iter()
                    .map(|n| check_fulfillment(n, d.action))
                    .collect()
            })
            .collect();
        let satisfied = outcomes.iter().flatten().filter(|o| o.is_satisfied()).count();
        let total_outcomes = outcomes.iter().map(Vec::len).sum::<usize>();
        let jumps = acted.iter().filter(|(_, a)| *a == Action::Jump).count();

        // (6) self-directed elicitation.
        let mut pending_self: Vec<Vec<Emotion>> = vec![Vec::new(); n];
        if kind.emotions_involved() {
            for ((id, _), outs) in acted.iter().zip(&outcomes) {
                let agent = self.agent(*id);
                if outs.is_empty() && !agent.received_emotions.iter().any(Emotion::is_negative) {
                    continue;
                }
                pending_self[id.index()] = elicit_self_directed(
                    agent,
                    outs,
                    &agent.received_emotions,
                    &self.rule,
                    &self.config.emotion,
                );
            }
        }

        // (7) other-directed elicitation among those still in line.
        let mut pending_received: Vec<Vec<Emotion>> = vec![Vec::new(); n];
        if kind.sanctions() && !self.queue.is_empty() {
            let mut in_queue = vec![false; n];
            for id in &self.queue {
                in_queue[id.index()] = true;
            }
            for ((target, _), outs) in acted.iter().zip(&outcomes) {
                if outs.is_empty() || !in_queue[target.index()] {
                    continue;
                }
                for &observer in &self.queue {
                    if observer == *target {
                        continue;
                    }
                    pending_received[target.index()].extend(elicit_other_directed(
                        self.agent(observer),
                        *target,
                        outs,
                        &self.rule,
                        &self.config.emotion,
                    ));
                }
            }
        }

        // (8) experience updates.
        if kind.learns() {
            for ((id, action), outs) in acted.iter().zip(&outcomes) {
                if outs.is_empty() {
                    continue;
                }
                let agent = &self.agents[id.index()];
                let mut reward = (aggregate_valence(&pending_received[id.index()])
                    + aggregate_valence(&pending_self[id.index()])) as f64;
                if agent.health <= 1 {
                    reward += self.config.payoffs.deceased;
                }
                self.agents[id.index()].policy.update_experience(*action, reward);
            }
        }

        // (9) tick; emotions elicited this step start decaying next step.
        let mut died = Vec::new();
        for i in 0..n {
            if self.agents[i].deceased {
                continue;
            }
            let ticked = tick_agent(self.agents[i].clone());
            self.agents[i] = ticked;
            let agent = &mut self.agents[i];
            agent.self_emotions.append(&mut pending_self[i]);
            if agent.deceased {
                agent.received_emotions.clear();
                agent.self_emotions.clear();
                agent.enqueued_at = None;
                died.push(agent.id);
            } else {
                agent.received_emotions.extend_from_slice(&pending_received[i]);
            }
        }
        if !died.is_empty() {
            self.queue.retain(|id| !died.contains(id));
            self.store.retain(|id| !died.contains(id));
            self.deceased += died.len();
            self.sync_queue_positions();
        }

        if let Some(events) = self.events.as_mut() {
            for ((id, action), outs) in acted.iter().zip(&outcomes) {
                let agent = &self.agents[id.index()];
                events.push(AgentEvent {
                    step,
                    agent: *id,
                    action: *action,
                    outcome: outs.first().map(|o| o.fulfillment),
                    sanctions_received: aggregate_valence(&pending_received[id.index()]),
                    health: agent.health,
                    location: agent.location(),
                });
            }
        }

        self.last_queue_actions = acted
            .iter()
            .zip(&decisions)
            .filter(|(_, d)| d.beliefs.location.is_in_queue())
            .map(|(a, _)| *a)
            .collect::<Vec<_>>()
            .into();

        // (10) metrics snapshot.
        let live: Vec<&AgentState> = self.agents.iter().filter(|a| !a.deceased).collect();
        let avg_health = (!live.is_empty())
            .then(|| live.iter().map(|a| a.health as f64).sum::<f64>() / live.len() as f64);
        self.metrics.push(StepMetrics {
            step,
            cohesion: (total_outcomes > 0).then(|| satisfied as f64 / total_outcomes as f64),
            deceased_cum: self.deceased,
            avg_health,
            avg_waiting: (!step_waits.is_empty())
                .then(|| step_waits.iter().sum::<u64>() as f64 / step_waits.len() as f64),
            served: step_waits.len(),
            wait_total: step_waits.iter().sum(),
            queue_len: self.queue.len(),
            jumps,
            outcomes: total_outcomes,
        });
        self.step += 1;
    }

    /// Wait of an agent being served now.
    pub fn waiting_time_record(&self, served: AgentId) -> WaitRecord {
        let enqueued_at = self
            .agent(served)
            .enqueued_at
            .expect("served agent was enqueued");
        WaitRecord {
            agent: served,
            enqueued_at,
            served_at: self.step,
        }
    }

    fn sync_queue_positions(&mut self) {
        for (i, id) in self.queue.iter().enumerate() {
            self.agents[id.index()].set_location(Location::InQueue(i + 1));
        }
    }

    pub fn run_to_end(&mut self) {
        while !self.is_finished() {
            self.step_world();
        }
    }

    /// Panics with a description of the first broken world invariant.
    pub fn check_invariants(&self) {
        assert!(self.queue.len() <= self.config.queue_size, "queue overflow");
        assert!(self.store.len() <= STORE_CAPACITY, "store overflow");
        let mut seen = vec![0u8; self.agents.len()];
        for id in self.queue.iter().chain(&self.store) {
            seen[id.index()] += 1;
            assert!(!self.agent(*id).deceased, "deceased agent {id} still placed");
        }
        for (i, id) in self.queue.iter().enumerate() {
            assert_eq!(self.agent(*id).location(), Location::InQueue(i + 1));
        }
        for a in &self.agents {
            assert!(a.health <= MAX_HEALTH);
            assert!(a.food_packets <= MAX_FOOD && a.food_expiry <= MAX_FOOD);
            assert!(a.food_expiry > 0 || a.food_packets == 0, "expired food kept");
            assert_eq!(a.deceased, a.health == 0);
            if !a.deceased {
                let placed = matches!(a.location(), Location::InQueue(_) | Location::InStore);
                assert_eq!(seen[a.id.index()] as usize, placed as usize, "agent {} misplaced", a.id);
            }
        }
    }

    /// Writes the event log as CSV. Nothing is written unless events were recorded.
    pub fn write_event_log<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "step",
            "agent_id",
            "action",
            "outcome",
            "sanctions_received",
            "health",
            "location",
        ])?;
        for e in self.events.iter().flatten() {
            let outcome = match e.outcome {
                Some(Fulfillment::Satisfied) => "satisfied",
                Some(Fulfillment::Violated) => "violated",
                None => "",
            };
            w.write_record([
                e.step.to_string(),
                e.agent.to_string(),
                e.action.label().to_string(),
                outcome.to_string(),
                e.sanctions_received.to_string(),
                e.health.to_string(),
                e.location.label().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn consume_food(agent: &mut AgentState, restore_per_packet: u32) {
    assert!(
        agent.food_packets >= 1 && agent.food_expiry >= 1,
        "agent {} has no food to consume",
        agent.id
    );
    agent.food_packets -= 1;
    agent.health = (agent.health + restore_per_packet).min(MAX_HEALTH);
    agent.beliefs.own_vitals = agent.vitals();
}
