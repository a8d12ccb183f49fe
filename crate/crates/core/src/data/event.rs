use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Team {
    Left,
    Right,
    None,
}

impl Team {
    pub fn other(self) -> Team {
        match self {
            Team::Left => Team::Right,
            Team::Right => Team::Left,
            Team::None => Team::None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Team::Left => "left",
            Team::Right => "right",
            Team::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Outcome {
    Success,
    Failure,
    None,
}

/// One action instance. `fault` is the latent intrinsic error (with its
/// reason) that fails the action when no counter-action does.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Event {
    pub start_frame: usize,
    pub end_frame: usize,
    pub action: String,
    pub team: Team,
    pub outcome: Outcome,
    pub cause_link: Option<usize>,
    pub effect_link: Option<usize>,
    pub outcome_reason: Option<String>,
    pub fault: Option<String>,
}

impl Event {
    pub fn new(start_frame: usize, end_frame: usize, action: &str, team: Team) -> Self {
        Event {
            start_frame,
            end_frame,
            action: action.into(),
            team,
            outcome: Outcome::None,
            cause_link: None,
            effect_link: None,
            outcome_reason: None,
            fault: None,
        }
    }

    pub fn is_active(&self, frame: usize) -> bool {
        self.start_frame <= frame && frame <= self.end_frame
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TeamMode {
    /// Ball games: two teams, outcomes and causal links.
    TwoTeam,
    /// Gymnastics: a single performer, no outcomes, no causal links.
    SinglePerformer,
}

/// `action` by one team fails when the other team performs `counter`
/// within the rule window after it ends.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CounterRule {
    pub action: String,
    pub counter: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SportSpec {
    pub name: String,
    pub mode: TeamMode,
    pub actions: Vec<String>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub rules: Vec<CounterRule>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub fault_reasons: Vec<String>,
}

impl SportSpec {
    pub fn rule_for(&self, action: &str) -> Option<&CounterRule> {
        self.rules.iter().find(|r| r.action == action)
    }

    pub fn validate(&self) -> Result<()> {
        if self.actions.is_empty() {
            return Err(Error::Config(alloc::format!("sport {} has an empty action alphabet", self.name)));
        }
        if self.actions.iter().any(|a| a.is_empty() || a.contains(char::is_whitespace)) {
            return Err(Error::Config(alloc::format!("sport {}: actions must be single words", self.name)));
        }
        for r in &self.rules {
            if !self.actions.contains(&r.action) || !self.actions.contains(&r.counter) {
                return Err(Error::Config(alloc::format!("rule {}->{} uses unknown actions", r.action, r.counter)));
            }
        }
        if self.mode == TeamMode::TwoTeam && self.fault_reasons.is_empty() {
            return Err(Error::Config(alloc::format!("sport {} needs fault reasons", self.name)));
        }
        Ok(())
    }
}

/// Ground-truth record of one synthetic episode.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventLog {
    pub episode_id: u64,
    pub frames: usize,
    pub sport: String,
    /// Rule window the outcomes were evaluated with.
    pub window: usize,
    pub events: Vec<Event>,
}

impl EventLog {
    /// Checks ordering, frame bounds and link consistency.
    pub fn validate(&self) -> Result<()> {
        let window = self.window;
        if self.frames == 0 {
            return Err(Error::Data("episode with zero frames".into()));
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.start_frame > e.end_frame || e.end_frame >= self.frames {
                return Err(Error::Data(alloc::format!("event {i} has invalid frame range")));
            }
            if i > 0 && self.events[i - 1].start_frame > e.start_frame {
                return Err(Error::Data("events not sorted by start frame".into()));
            }
            if let Some(c) = e.cause_link {
                let ce = self.events.get(c).ok_or_else(|| Error::Data(alloc::format!("event {i}: dangling cause")))?;
                if c >= i || ce.effect_link != Some(i) || e.start_frame.saturating_sub(ce.end_frame + 1) > window {
                    return Err(Error::Data(alloc::format!("event {i}: inconsistent cause link")));
                }
            }
            if let Some(x) = e.effect_link {
                let xe = self.events.get(x).ok_or_else(|| Error::Data(alloc::format!("event {i}: dangling effect")))?;
                if x <= i || xe.cause_link != Some(i) {
                    return Err(Error::Data(alloc::format!("event {i}: inconsistent effect link")));
                }
            }
        }
        Ok(())
    }
}

/// Applies the sport's causal-rule table: sets every outcome, reason and
/// cause/effect link from the actions, timings and latent faults alone.
///
/// A rule-bearing action fails when the first qualifying counter-action of the
/// other team starts at most `window` idle frames after it ends. Otherwise an
/// intrinsic fault fails it; otherwise it succeeds. Events not linked by a
/// counter get the next other-team event within the window as their effect.
pub fn evaluate_rules(events: &mut [Event], sport: &SportSpec, window: usize) {
    for e in events.iter_mut() {
        e.outcome = Outcome::None;
        e.outcome_reason = None;
        e.cause_link = None;
        e.effect_link = None;
    }
    if sport.mode == TeamMode::SinglePerformer {
        return;
    }
    let within = |a: &Event, b: &Event| b.start_frame > a.end_frame && b.start_frame - a.end_frame - 1 <= window;
    for i in 0..events.len() {
        let counter = sport.rule_for(&events[i].action).and_then(|rule| {
            (i + 1..events.len())
                .find(|&j| {
                    let (a, b) = (&events[i], &events[j]);
                    b.team == a.team.other() && b.action == rule.counter && within(a, b) && b.cause_link.is_none()
                })
                .map(|j| (j, rule.reason.clone()))
        });
        match counter {
            Some((j, reason)) => {
                events[i].outcome = Outcome::Failure;
                events[i].outcome_reason = Some(reason);
                events[i].effect_link = Some(j);
                events[j].cause_link = Some(i);
            }
            None => match events[i].fault.clone() {
                Some(reason) => {
                    events[i].outcome = Outcome::Failure;
                    events[i].outcome_reason = Some(reason);
                }
                None => events[i].outcome = Outcome::Success,
            },
        }
    }
    for i in 0..events.len().saturating_sub(1) {
        let j = i + 1;
        if events[i].effect_link.is_none()
            && events[j].cause_link.is_none()
            && events[j].team == events[i].team.other()
            && within(&events[i], &events[j])
        {
            events[i].effect_link = Some(j);
            events[j].cause_link = Some(i);
        }
    }
}
