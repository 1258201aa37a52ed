//! The four agent societies and the sanction-experience learning used by the
//! two societies that sanction.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::decision::{amplifier_from_valence, argmax_action, UtilityEstimate};
use crate::model::{Action, Beliefs, Intention};
use crate::norms::{complies, ActiveNorm};

pub const LEARNING_RATE: f64 = 0.1;
pub const EXPLORATION: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SocietyKind {
    Obedient,
    Anarchy,
    Sanctioning,
    Noe,
}

impl SocietyKind {
    pub const ALL: [SocietyKind; 4] = [
        SocietyKind::Obedient,
        SocietyKind::Anarchy,
        SocietyKind::Sanctioning,
        SocietyKind::Noe,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SocietyKind::Obedient => "obedient",
            SocietyKind::Anarchy => "anarchy",
            SocietyKind::Sanctioning => "sanctioning",
            SocietyKind::Noe => "noe",
        }
    }

    pub fn violation_allowed(self) -> bool {
        self != SocietyKind::Obedient
    }

    /// Members express emotions toward the agents whose conduct they witness.
    pub fn sanctions(self) -> bool {
        matches!(self, SocietyKind::Sanctioning | SocietyKind::Noe)
    }

    /// Members appraise their own conduct and let emotions shape decisions.
    pub fn emotions_involved(self) -> bool {
        self == SocietyKind::Noe
    }

    pub fn learns(self) -> bool {
        self.sanctions()
    }
}

impl fmt::Display for SocietyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownSociety(pub String);

impl fmt::Display for UnknownSociety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown society `{}` (expected obedient, anarchy, sanctioning or noe)",
            self.0
        )
    }
}

impl std::error::Error for UnknownSociety {}

impl FromStr for SocietyKind {
    type Err = UnknownSociety;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "obedient" => Ok(SocietyKind::Obedient),
            "anarchy" => Ok(SocietyKind::Anarchy),
            "sanctioning" => Ok(SocietyKind::Sanctioning),
            "noe" => Ok(SocietyKind::Noe),
            _ => Err(UnknownSociety(s.to_string())),
        }
    }
}

/// Running value estimates for the two queue actions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Experience {
    pub stay: f64,
    pub jump: f64,
}

impl Experience {
    pub fn value(&self, action: Action) -> Option<f64> {
        match action {
            Action::Stay => Some(self.stay),
            Action::Jump => Some(self.jump),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SocietyPolicy {
    pub kind: SocietyKind,
    pub experience: Option<Experience>,
    pub learning_rate: f64,
    pub exploration: f64,
}

impl SocietyPolicy {
    pub fn new(kind: SocietyKind) -> Self {
        SocietyPolicy {
            kind,
            experience: kind.learns().then(Experience::default),
            learning_rate: LEARNING_RATE,
            exploration: if kind == SocietyKind::Sanctioning {
                EXPLORATION
            } else {
                0.0
            },
        }
    }

    /// Learned value of a queue action, or `None` when the policy does not learn.
    pub fn experience_of(&self, action: Action) -> Option<f64> {
        self.experience.and_then(|e| e.value(action))
    }

    /// Exponential-average update of the value of the action taken.
    pub fn update_experience(&mut self, action_taken: Action, realized_reward: f64) {
        let rate = self.learning_rate;
        let Some(exp) = self.experience.as_mut() else {
            return;
        };
        let q = match action_taken {
            Action::Stay => &mut exp.stay,
            Action::Jump => &mut exp.jump,
            _ => return,
        };
        *q += rate * (realized_reward - *q);
    }
}

/// Picks the action a member of `policy`'s society performs.
///
/// `utilities` holds one estimate per available action, in tie-break order,
/// and `active` the behavioral norms the agent currently bears.
pub fn choose<R: Rng + ?Sized>(
    policy: &SocietyPolicy,
    beliefs: &Beliefs,
    intention: Intention,
    active: &[ActiveNorm],
    utilities: &[UtilityEstimate],
    rng: &mut R,
) -> Action {
    assert!(!utilities.is_empty(), "no available action to choose from");
    if active.is_empty() {
        return argmax_action(utilities);
    }
    match policy.kind {
        SocietyKind::Obedient => {
            let compliant: Vec<_> = utilities
                .iter()
                .filter(|u| complies(active, u.action))
                .copied()
                .collect();
            if compliant.is_empty() {
                argmax_action(utilities)
            } else {
                argmax_action(&compliant)
            }
        }
        SocietyKind::Anarchy => {
            if wants_to_cut(beliefs, intention) && has(utilities, Action::Jump) {
                Action::Jump
            } else {
                argmax_action(utilities)
            }
        }
        SocietyKind::Sanctioning => {
            if rng.random::<f64>() < policy.exploration {
                let pick = rng.random_range(0..utilities.len());
                return utilities[pick].action;
            }
            let exp = policy.experience.unwrap_or_default();
            let can_stay = has(utilities, Action::Stay);
            let can_jump = has(utilities, Action::Jump);
            match (can_stay, can_jump) {
                (true, true) if exp.jump > exp.stay => Action::Jump,
                (true, true) if exp.stay > exp.jump => Action::Stay,
                // Without a learned preference they behave like anarchists.
                (true, true) if wants_to_cut(beliefs, intention) => Action::Jump,
                (true, _) => Action::Stay,
                (false, true) => Action::Jump,
                (false, false) => argmax_action(utilities),
            }
        }
        SocietyKind::Noe => {
            let m = amplifier_from_valence(beliefs.ambient_valence);
            let amplified: Vec<_> = utilities
                .iter()
                .map(|u| u.amplified(m, !complies(active, u.action)))
                .collect();
            argmax_action(&amplified)
        }
    }
}

/// Waiting in line for food, but not at its head.
fn wants_to_cut(beliefs: &Beliefs, intention: Intention) -> bool {
    intention == Intention::GetFood && beliefs.location.queue_position().is_some_and(|p| p > 1)
}

fn has(utilities: &[UtilityEstimate], action: Action) -> bool {
    utilities.iter().any(|u| u.action == action)
}
