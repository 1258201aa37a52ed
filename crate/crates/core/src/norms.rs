//! Norm base, norm activation and fulfillment checking.

use crate::model::{
    Action, AgentId, Antecedent, Beliefs, Consequent, Norm, NormKind, RoleSelector,
    SanctionValence,
};

pub const LINE_UP: &str = "line-up";
pub const SANCTION_JUMP: &str = "sanction-jump";
pub const SANCTION_STAY: &str = "sanction-stay";

/// A behavioral norm bound to the agent that currently bears it.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveNorm {
    pub norm: Norm,
    pub bearer: AgentId,
    /// Co-located queue members toward whom the bearer is committed, sorted.
    pub counterparties: Vec<AgentId>,
    pub activated_at: u64,
}

impl ActiveNorm {
    pub fn new(
        norm: Norm,
        bearer: AgentId,
        counterparties: impl IntoIterator<Item = AgentId>,
        activated_at: u64,
    ) -> Self {
        let mut counterparties: Vec<AgentId> = counterparties
            .into_iter()
            .filter(|&id| id != bearer)
            .collect();
        counterparties.sort_unstable();
        counterparties.dedup();
        ActiveNorm {
            norm,
            bearer,
            counterparties,
            activated_at,
        }
    }

    pub fn is_counterparty(&self, id: AgentId) -> bool {
        self.counterparties.binary_search(&id).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fulfillment {
    Satisfied,
    Violated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FulfillmentOutcome {
    pub fulfillment: Fulfillment,
    pub norm: ActiveNorm,
    pub action: Action,
}

impl FulfillmentOutcome {
    pub fn is_satisfied(&self) -> bool {
        self.fulfillment == Fulfillment::Satisfied
    }
}

/// The line-up commitment plus the two sanction reactions attached to it.
pub fn default_norm_base() -> Vec<Norm> {
    vec![
        Norm {
            name: LINE_UP,
            kind: NormKind::Commitment,
            subject: RoleSelector::QueueMember,
            object: RoleSelector::OtherQueueMembers,
            antecedent: Antecedent::InQueue,
            consequent: Consequent::Refrain(Action::Jump),
        },
        Norm {
            name: SANCTION_JUMP,
            kind: NormKind::Sanction,
            subject: RoleSelector::Violator,
            object: RoleSelector::Observers,
            antecedent: Antecedent::Observed(Action::Jump),
            consequent: Consequent::Sanction(SanctionValence::Negative),
        },
        Norm {
            name: SANCTION_STAY,
            kind: NormKind::Sanction,
            subject: RoleSelector::Complier,
            object: RoleSelector::Observers,
            antecedent: Antecedent::Observed(Action::Stay),
            consequent: Consequent::Sanction(SanctionValence::Positive),
        },
    ]
}

/// Activates every behavioral norm whose subject matches the agent and whose
/// antecedent holds under `beliefs`.
///
/// The candidate action is accepted for symmetry with action selection; none
/// of the closed antecedents depend on it.
pub fn identify_and_instantiate(
    bearer: AgentId,
    beliefs: &Beliefs,
    norm_base: &[Norm],
    _candidate_action: Action,
    step: u64,
) -> Vec<ActiveNorm> {
    norm_base
        .iter()
        .filter(|norm| norm.is_behavioral())
        .filter(|norm| norm.subject.matches(beliefs) && norm.antecedent.holds(beliefs))
        .map(|norm| {
            ActiveNorm::new(
                norm.clone(),
                bearer,
                beliefs.queue_snapshot.iter().copied(),
                step,
            )
        })
        .collect()
}

pub fn check_fulfillment(active: &ActiveNorm, action: Action) -> FulfillmentOutcome {
    let fulfillment = if active.norm.consequent.holds(action) {
        Fulfillment::Satisfied
    } else {
        Fulfillment::Violated
    };
    FulfillmentOutcome {
        fulfillment,
        norm: active.clone(),
        action,
    }
}

/// Whether `action` satisfies every norm in `active`.
pub fn complies(active: &[ActiveNorm], action: Action) -> bool {
    active.iter().all(|n| n.norm.consequent.holds(action))
}
