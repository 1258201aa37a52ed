//! Appraisal of norm outcomes and the lifecycle of the resulting emotions.
//!
//! Emotions are plain signed integers with a lifetime. An agent appraises its
//! own norm outcomes (self-directed emotions) and the outcomes of the agents
//! it observes (other-directed emotions). Other-directed emotions are the only
//! sanctioning channel: they never move health or food.

use std::collections::BTreeSet;

use crate::model::{
    AgentId, AgentState, Beliefs, Desire, ElicitedEmotionRule, Emotion, EmotionTarget,
    EmotionTemplate,
};
use crate::norms::{Fulfillment, FulfillmentOutcome};

/// Magnitude, lifetime and decay of every elicited emotion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmotionParams {
    pub unit: i32,
    pub duration: u32,
    pub decay: u32,
    /// When set, an appraiser whose own valence is negative elicits one unit
    /// more. Off by default.
    pub mood_scaling: bool,
}

impl Default for EmotionParams {
    fn default() -> Self {
        EmotionParams {
            unit: 1,
            duration: 2,
            decay: 1,
            mood_scaling: false,
        }
    }
}

impl EmotionParams {
    /// The rule attached to the line-up norm: staying is expected.
    pub fn line_up_rule(&self) -> ElicitedEmotionRule {
        let template = |intensity| EmotionTemplate {
            intensity,
            duration: self.duration,
            decay: self.decay,
        };
        ElicitedEmotionRule::new(
            crate::norms::LINE_UP,
            crate::model::Action::Stay,
            template(self.unit),
            template(-self.unit),
        )
    }
}

#[derive(Clone, Debug)]
pub struct AppraisalInput<'a> {
    pub appraiser: AgentId,
    pub target: EmotionTarget,
    pub beliefs: &'a Beliefs,
    pub desires: &'a BTreeSet<Desire>,
    pub outcome: &'a FulfillmentOutcome,
    pub rule: &'a ElicitedEmotionRule,
    /// Valence the appraiser currently feels; only read under mood scaling.
    pub own_valence: i64,
    pub mood_scaling: bool,
}

pub fn appraise(input: &AppraisalInput<'_>) -> Emotion {
    let mut template = match input.outcome.fulfillment {
        Fulfillment::Satisfied => input.rule.emotion_on_satisfaction,
        Fulfillment::Violated => input.rule.emotion_on_violation,
    };
    if input.mood_scaling && input.own_valence < 0 && template.intensity != 0 {
        template.intensity += template.intensity.signum();
    }
    template.instantiate(input.appraiser, input.target)
}

/// Emotions an observer directs at an agent whose norm outcomes it witnessed.
///
/// Only outcomes whose counterparties include the observer are appraised: an
/// observer elsewhere saw nothing.
pub fn elicit_other_directed(
    observer: &AgentState,
    observed: AgentId,
    outcomes: &[FulfillmentOutcome],
    rule: &ElicitedEmotionRule,
    params: &EmotionParams,
) -> Vec<Emotion> {
    if observer.deceased || observer.id == observed {
        return Vec::new();
    }
    let own_valence = felt_valence(observer);
    outcomes
        .iter()
        .filter(|o| o.norm.is_counterparty(observer.id))
        .map(|outcome| {
            appraise(&AppraisalInput {
                appraiser: observer.id,
                target: EmotionTarget::Agent(observed),
                beliefs: &observer.beliefs,
                desires: &observer.desires,
                outcome,
                rule,
                own_valence,
                mood_scaling: params.mood_scaling,
            })
        })
        .collect()
}

/// Emotions an actor directs at itself: one per own norm outcome, plus one
/// unit of negative emotion for every negative emotion it received.
pub fn elicit_self_directed(
    actor: &AgentState,
    own_outcomes: &[FulfillmentOutcome],
    received: &[Emotion],
    rule: &ElicitedEmotionRule,
    params: &EmotionParams,
) -> Vec<Emotion> {
    assert!(!actor.deceased, "deceased agent {} cannot appraise", actor.id);
    let own_valence = felt_valence(actor);
    let mut emotions: Vec<Emotion> = own_outcomes
        .iter()
        .map(|outcome| {
            appraise(&AppraisalInput {
                appraiser: actor.id,
                target: EmotionTarget::SelfDirected,
                beliefs: &actor.beliefs,
                desires: &actor.desires,
                outcome,
                rule,
                own_valence,
                mood_scaling: params.mood_scaling,
            })
        })
        .collect();
    let echo = EmotionTemplate {
        intensity: -params.unit,
        duration: params.duration,
        decay: params.decay,
    };
    emotions.extend(
        received
            .iter()
            .filter(|e| e.is_negative())
            .map(|_| echo.instantiate(actor.id, EmotionTarget::SelfDirected)),
    );
    emotions
}

/// One step of decay: duration drops by one and magnitude shrinks toward zero.
pub fn decay_emotions(emotions: Vec<Emotion>) -> Vec<Emotion> {
    emotions
        .into_iter()
        .filter_map(|mut e| {
            e.duration = e.duration.saturating_sub(1);
            let magnitude = e.intensity.unsigned_abs().saturating_sub(e.decay);
            e.intensity = e.intensity.signum() * magnitude as i32;
            e.is_alive().then_some(e)
        })
        .collect()
}

pub fn aggregate_valence(emotions: &[Emotion]) -> i64 {
    emotions
        .iter()
        .filter(|e| e.is_alive())
        .map(|e| e.intensity as i64)
        .sum()
}

/// Valence of everything an agent currently feels.
pub fn felt_valence(agent: &AgentState) -> i64 {
    aggregate_valence(&agent.self_emotions) + aggregate_valence(&agent.received_emotions)
}
