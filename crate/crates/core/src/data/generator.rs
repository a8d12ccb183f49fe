use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::event::{evaluate_rules, Event, EventLog, Outcome, SportSpec, Team, TeamMode};
use super::features::FeatureBank;
use crate::{rng, Error, Result, Tensor};

/// Timing, noise and feature settings shared by every episode.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EpisodeConfig {
    /// Frames per episode (80 frames is 16 s at 5 FPS).
    pub frames: usize,
    pub min_duration: usize,
    pub max_duration: usize,
    /// Idle frames between consecutive events are uniform in `0..=max_gap`.
    pub max_gap: usize,
    /// Largest idle gap over which a counter-action or reaction is linked.
    pub window: usize,
    /// Chance that a rule-bearing action is answered by its counter-action.
    pub p_counter: f64,
    /// Chance that the next unforced event belongs to the other team.
    pub p_switch: f64,
    /// Chance of an intrinsic fault on a two-team action.
    pub p_fault: f64,
    pub noise: f64,
    pub d_appearance: usize,
    pub d_motion: usize,
    pub feature_seed: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            frames: 80,
            min_duration: 4,
            max_duration: 8,
            max_gap: 2,
            window: 2,
            p_counter: 0.4,
            p_switch: 0.6,
            p_fault: 0.2,
            noise: 0.1,
            d_appearance: 16,
            d_motion: 16,
            feature_seed: 7,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.frames == 0 {
            return bad("episodes need at least one frame");
        }
        if self.min_duration == 0 || self.min_duration > self.max_duration {
            return bad("event durations must satisfy 1 <= min <= max");
        }
        for p in [self.p_counter, self.p_switch, self.p_fault] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if !(self.noise >= 0.0) {
            return bad("noise must be non-negative");
        }
        if self.d_appearance == 0 || self.d_motion == 0 {
            return bad("feature dimensions must be positive");
        }
        Ok(())
    }

    /// Probability that a rule-bearing action followed by another event is
    /// countered: forced counters plus counters drawn by chance. Exact when
    /// `window >= max_gap` and `min_duration + 1 > window`.
    pub fn predicted_counter_rate(&self, sport: &SportSpec) -> f64 {
        let chance = self.p_switch / sport.actions.len() as f64;
        self.p_counter + (1.0 - self.p_counter) * chance
    }
}

/// Frame features of one episode together with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub appearance: Tensor,
    pub motion: Tensor,
    pub log: EventLog,
}

/// Samples an event sequence for `sport` and renders its frame features.
///
/// Appearance at frame `t` is the sum of the active events' action, team
/// and outcome-cue embeddings plus Gaussian noise. Motion is a fixed
/// projection of the clean appearance change from the previous frame, plus
/// noise, so event boundaries carry a directional signal.
pub fn generate_episode(config: &EpisodeConfig, sport: &SportSpec, episode_id: u64, seed: u64) -> Result<Episode> {
    config.validate()?;
    sport.validate()?;
    let mut r = rng::seeded(seed);
    let n = config.frames;
    let two_team = sport.mode == TeamMode::TwoTeam;

    let mut events: Vec<Event> = Vec::new();
    let mut t = r.random_range(0..=config.max_gap);
    while t < n {
        let (team, action) = match events.last() {
            Some(prev) => {
                let forced = sport
                    .rule_for(&prev.action)
                    .filter(|_| two_team && r.random_bool(config.p_counter));
                match forced {
                    Some(rule) => (prev.team.other(), rule.counter.clone()),
                    None => {
                        let team = if two_team && r.random_bool(config.p_switch) {
                            prev.team.other()
                        } else {
                            prev.team
                        };
                        (team, sport.actions.choose(&mut r).expect("non-empty").clone())
                    }
                }
            }
            None => {
                let team = match (two_team, r.random_bool(0.5)) {
                    (false, _) => Team::None,
                    (true, true) => Team::Left,
                    (true, false) => Team::Right,
                };
                (team, sport.actions.choose(&mut r).expect("non-empty").clone())
            }
        };
        let dur = r.random_range(config.min_duration..=config.max_duration);
        let end = (t + dur - 1).min(n - 1);
        let mut e = Event::new(t, end, &action, team);
        if two_team && r.random_bool(config.p_fault) {
            e.fault = Some(sport.fault_reasons.choose(&mut r).expect("validated").clone());
        }
        events.push(e);
        t = end + 1 + r.random_range(0..=config.max_gap);
    }
    evaluate_rules(&mut events, sport, config.window);
    let log = EventLog {
        episode_id,
        frames: n,
        sport: sport.name.clone(),
        window: config.window,
        events,
    };

    let mut bank = FeatureBank::new(config.feature_seed, config.d_appearance, config.d_motion);
    let (appearance, motion) = render_features(&log, &mut bank, config.noise, &mut r)?;
    Ok(Episode { appearance, motion, log })
}

/// Key of the visual cue shown while an event is on screen.
fn cue_key(e: &Event) -> Option<alloc::string::String> {
    match e.outcome {
        Outcome::Success => Some("cue:success".into()),
        Outcome::Failure => Some(format!("cue:{}", e.outcome_reason.as_deref().unwrap_or("failure"))),
        Outcome::None => None,
    }
}

fn render_features(log: &EventLog, bank: &mut FeatureBank, noise: f64, r: &mut rng::Rng) -> Result<(Tensor, Tensor)> {
    let (n, da, dm) = (log.frames, bank.d_appearance(), bank.d_motion());
    let mut clean = vec![0.0; n * da];
    for e in &log.events {
        let mut v = bank.vector(&format!("action:{}", e.action)).to_vec();
        if e.team != Team::None {
            add(&mut v, bank.vector(&format!("team:{}", e.team.name())));
        }
        if let Some(k) = cue_key(e) {
            add(&mut v, bank.vector(&k));
        }
        for f in e.start_frame..=e.end_frame.min(n - 1) {
            add(&mut clean[f * da..(f + 1) * da], &v);
        }
    }
    let mut motion = vec![0.0; n * dm];
    let mut delta = vec![0.0; da];
    for f in 1..n {
        for k in 0..da {
            delta[k] = clean[f * da + k] - clean[(f - 1) * da + k];
        }
        bank.project_motion(&delta, &mut motion[f * dm..(f + 1) * dm]);
    }
    if noise > 0.0 {
        let dist = Normal::new(0.0, noise).map_err(|_| Error::Config("invalid noise level".into()))?;
        clean.iter_mut().for_each(|x| *x += dist.sample(r));
        motion.iter_mut().for_each(|x| *x += dist.sample(r));
    }
    Ok((Tensor::matrix(n, da, clean)?, Tensor::matrix(n, dm, motion)?))
}

fn add(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}
