use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::event::{evaluate_rules, EventLog, Outcome, SportSpec, Team};
use super::question::{Question, Relation, TemplateKind};
use crate::{Error, Result};

/// Index of the `ordinal`-th (1-based) event of `team` doing `action`, in
/// start-frame order with list order breaking ties.
pub fn resolve_ordinal(log: &EventLog, team: Team, action: &str, ordinal: usize) -> Option<usize> {
    log.events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.team == team && e.action == action)
        .nth(ordinal.checked_sub(1)?)
        .map(|(i, _)| i)
}

/// Whether event `index` would succeed had the other team never performed
/// `removed`: those events are deleted and the rule table re-evaluated.
pub fn counterfactual_success(log: &EventLog, sport: &SportSpec, index: usize, removed: &str) -> Result<bool> {
    let target = log.events.get(index).ok_or(Error::Index {
        what: "event",
        index,
        bound: log.events.len(),
    })?;
    let other = target.team.other();
    let mut kept = Vec::with_capacity(log.events.len());
    let mut new_index = 0;
    for (i, e) in log.events.iter().enumerate() {
        if i == index {
            new_index = kept.len();
        } else if e.team == other && e.action == removed {
            continue;
        }
        kept.push(e.clone());
    }
    evaluate_rules(&mut kept, sport, log.window);
    Ok(kept[new_index].outcome == Outcome::Success)
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.into()
}

/// Answers `q` by scanning the log. `None` means the question has no answer
/// for this episode (missing ordinal, neighbour, link or outcome).
pub fn oracle_answer(log: &EventLog, sport: &SportSpec, q: &Question) -> Result<Option<String>> {
    let missing = || Error::Data(alloc::format!("{:?} question lacks a slot", q.kind));
    let events = &log.events;
    let count = |team: Option<Team>, action: &str| {
        events
            .iter()
            .filter(|e| team.is_none_or(|t| e.team == t) && e.action == action)
            .count()
    };
    let target = || -> Result<Option<usize>> {
        let a = q.action.as_deref().ok_or_else(missing)?;
        let ord = q.ordinal.ok_or_else(missing)?;
        let team = match q.kind {
            TemplateKind::OtherTeamNeighbour => q.team.other(),
            _ => q.team,
        };
        Ok(resolve_ordinal(log, team, a, ord))
    };
    // nearest event of `team` strictly before or after index i
    let neighbour = |i: usize, team: Team, rel: Relation| -> Option<String> {
        match rel {
            Relation::Before => events[..i].iter().rev().find(|e| e.team == team),
            Relation::After => events[i + 1..].iter().find(|e| e.team == team),
        }
        .map(|e| e.action.clone())
    };

    let answer = match q.kind {
        TemplateKind::CountTeamAction => Some(count(Some(q.team), q.action.as_deref().ok_or_else(missing)?).to_string()),
        TemplateKind::TeamPerforms => Some(yes_no(count(Some(q.team), q.action.as_deref().ok_or_else(missing)?) > 0)),
        TemplateKind::CountAll => Some(events.len().to_string()),
        TemplateKind::CountPlayerAction => Some(count(None, q.action.as_deref().ok_or_else(missing)?).to_string()),
        TemplateKind::CountBefore => {
            let a = q.action.as_deref().ok_or_else(missing)?;
            let b = q.action2.as_deref().ok_or_else(missing)?;
            events.iter().position(|e| e.action == b).map(|first| {
                let start = events[first].start_frame;
                events.iter().filter(|e| e.action == a && e.start_frame < start).count().to_string()
            })
        }
        _ => {
            let Some(i) = target()? else { return Ok(None) };
            let e = &events[i];
            match q.kind {
                TemplateKind::OutcomeSuccess => match e.outcome {
                    Outcome::Success => Some(yes_no(true)),
                    Outcome::Failure => Some(yes_no(false)),
                    Outcome::None => None,
                },
                TemplateKind::SameTeamNeighbour | TemplateKind::PlayerNeighbour | TemplateKind::OtherTeamNeighbour => {
                    neighbour(i, q.team, q.relation.ok_or_else(missing)?)
                }
                TemplateKind::Effect => e.effect_link.map(|x| events[x].action.clone()),
                TemplateKind::Why => e.cause_link.map(|c| events[c].action.clone()),
                TemplateKind::HowFail => match e.outcome {
                    Outcome::Failure => e.outcome_reason.clone(),
                    _ => None,
                },
                TemplateKind::Counterfactual => {
                    let removed = q.action2.as_deref().ok_or_else(missing)?;
                    if e.outcome == Outcome::None {
                        None
                    } else {
                        Some(yes_no(counterfactual_success(log, sport, i, removed)?))
                    }
                }
                _ => unreachable!("counting templates handled above"),
            }
        }
    };
    Ok(answer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CounterRule, Event, TeamMode};
    use alloc::vec;

    fn volleyball() -> SportSpec {
        SportSpec {
            name: "volleyball".into(),
            mode: TeamMode::TwoTeam,
            actions: ["serve", "pass", "set", "spike", "block", "dig"].map(String::from).to_vec(),
            rules: vec![CounterRule {
                action: "spike".into(),
                counter: "block".into(),
                reason: "blocked".into(),
            }],
            fault_reasons: ["out of bounds", "net fault", "foul"].map(String::from).to_vec(),
        }
    }

    fn log(events: Vec<Event>) -> EventLog {
        let mut events = events;
        evaluate_rules(&mut events, &volleyball(), 2);
        EventLog {
            episode_id: 0,
            frames: 40,
            sport: "volleyball".into(),
            window: 2,
            events,
        }
    }

    fn ask(l: &EventLog, text: &str) -> Option<String> {
        oracle_answer(l, &volleyball(), &Question::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn next_same_team_action() {
        let l = log(vec![
            Event::new(0, 4, "serve", Team::Left),
            Event::new(5, 8, "pass", Team::Right),
            Event::new(9, 12, "spike", Team::Left),
        ]);
        assert_eq!(ask(&l, "What does the left team do after their 1st serve?").as_deref(), Some("spike"));
        assert_eq!(ask(&l, "What does the left team do before their first serve?"), None);
    }

    #[test]
    fn effect_follows_the_counter_link() {
        let l = log(vec![Event::new(0, 4, "spike", Team::Left), Event::new(5, 8, "block", Team::Right)]);
        assert_eq!(l.events[0].effect_link, Some(1));
        assert_eq!(ask(&l, "What is the effect of the first spike of the left team?").as_deref(), Some("block"));
        assert_eq!(ask(&l, "Why does the right team do the first block?").as_deref(), Some("spike"));
        assert_eq!(ask(&l, "How does the left team fail to do the first spike?").as_deref(), Some("blocked"));
        assert_eq!(
            ask(&l, "Would the left team succeed in doing the first spike if the other team did not do block?").as_deref(),
            Some("yes")
        );
    }

    #[test]
    fn counterfactual_respects_intrinsic_faults() {
        let mut spike = Event::new(0, 4, "spike", Team::Left);
        spike.fault = Some("net fault".into());
        let l = log(vec![spike, Event::new(6, 8, "block", Team::Right)]);
        assert_eq!(l.events[0].outcome_reason.as_deref(), Some("blocked"));
        assert!(!counterfactual_success(&l, &volleyball(), 0, "block").unwrap());
    }

    #[test]
    fn counts_and_existence() {
        let l = log(vec![
            Event::new(0, 3, "serve", Team::Left),
            Event::new(4, 7, "serve", Team::Left),
            Event::new(8, 11, "serve", Team::Left),
        ]);
        assert_eq!(ask(&l, "How many times does the left team perform serve?").as_deref(), Some("3"));
        assert_eq!(ask(&l, "Does the right team perform block?").as_deref(), Some("no"));
    }

    #[test]
    fn ordinal_beyond_log_is_unresolved() {
        let l = log(vec![Event::new(0, 3, "serve", Team::Left)]);
        assert_eq!(resolve_ordinal(&l, Team::Left, "serve", 2), None);
        assert_eq!(resolve_ordinal(&l, Team::Left, "serve", 0), None);
    }
}
