//! Society metrics, smoothing and the statistics used to compare societies.

use std::fmt;

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::environment::WaitRecord;
use crate::model::AgentState;
use crate::norms::FulfillmentOutcome;

/// Per-step snapshot. `None` marks a metric without a denominator that step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    pub step: u64,
    pub cohesion: Option<f64>,
    pub deceased_cum: usize,
    pub avg_health: Option<f64>,
    pub avg_waiting: Option<f64>,
    pub served: usize,
    pub wait_total: u64,
    pub queue_len: usize,
    pub jumps: usize,
    pub outcomes: usize,
}

/// Share of fulfillment outcomes that are satisfactions.
pub fn cohesion(outcomes: &[FulfillmentOutcome]) -> Option<f64> {
    if outcomes.is_empty() {
        return None;
    }
    let satisfied = outcomes.iter().filter(|o| o.is_satisfied()).count();
    Some(satisfied as f64 / outcomes.len() as f64)
}

pub fn deceased_count(agents: &[AgentState]) -> usize {
    agents.iter().filter(|a| a.deceased).count()
}

/// Mean health over live agents.
pub fn avg_health(agents: &[AgentState]) -> Option<f64> {
    let live: Vec<f64> = agents
        .iter()
        .filter(|a| !a.deceased)
        .map(|a| a.health as f64)
        .collect();
    mean_of(&live)
}

pub fn avg_waiting(records: &[WaitRecord]) -> Option<f64> {
    let waits: Vec<f64> = records.iter().map(|r| r.wait() as f64).collect();
    mean_of(&waits)
}

fn mean_of(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Trailing mean over the last `window` points; undefined points are skipped.
pub fn moving_average(series: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    assert!(window >= 1, "window must be at least 1");
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut out = Vec::with_capacity(series.len());
    for (i, x) in series.iter().enumerate() {
        if let Some(v) = x {
            sum += v;
            count += 1;
        }
        if i >= window {
            if let Some(old) = series[i - window] {
                sum -= old;
                count -= 1;
            }
        }
        out.push((count > 0).then(|| sum / count as f64));
    }
    out
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("each sample needs at least two points")]
    InsufficientSample,
    #[error("both samples are constant with equal means")]
    DegenerateVariance,
    #[error("control sample has zero variance")]
    ZeroControlVariance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p_value: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (n - 1) sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Two-sided Welch t-test of `a` against `b`.
///
/// Two constant samples with different means give an infinite statistic and a
/// p-value of exactly 0.
pub fn independent_t_test(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::InsufficientSample);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_variance(a) / na, sample_variance(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        if diff == 0.0 {
            return Err(StatsError::DegenerateVariance);
        }
        return Ok(TTest {
            t: diff.signum() * f64::INFINITY,
            df: na + nb - 2.0,
            p_value: 0.0,
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p_value = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, df, p_value })
}

/// Glass's delta: mean difference scaled by the control sample's standard deviation.
pub fn glass_delta(treatment: &[f64], control: &[f64]) -> Result<f64, StatsError> {
    if treatment.is_empty() || control.len() < 2 {
        return Err(StatsError::InsufficientSample);
    }
    let sd = sample_variance(control).sqrt();
    if sd == 0.0 {
        return Err(StatsError::ZeroControlVariance);
    }
    Ok((mean(treatment) - mean(control)) / sd)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EffectLabel {
    Negligible,
    Small,
    Medium,
    Large,
}

impl fmt::Display for EffectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffectLabel::Negligible => "negligible",
            EffectLabel::Small => "small",
            EffectLabel::Medium => "medium",
            EffectLabel::Large => "large",
        })
    }
}

/// Cohen's descriptors for an effect size.
pub fn cohen_label(delta: f64) -> EffectLabel {
    let d = delta.abs();
    if d >= 0.8 {
        EffectLabel::Large
    } else if d >= 0.5 {
        EffectLabel::Medium
    } else if d >= 0.2 {
        EffectLabel::Small
    } else {
        EffectLabel::Negligible
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectSizeReport {
    pub delta: f64,
    pub label: EffectLabel,
    pub t_statistic: f64,
    pub p_value: f64,
}

pub fn effect_size_report(treatment: &[f64], control: &[f64]) -> Result<EffectSizeReport, StatsError> {
    let delta = glass_delta(treatment, control)?;
    let test = independent_t_test(treatment, control)?;
    Ok(EffectSizeReport {
        delta,
        label: cohen_label(delta),
        t_statistic: test.t,
        p_value: test.p_value,
    })
}
