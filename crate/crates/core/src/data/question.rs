use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::event::{EventLog, SportSpec, Team, TeamMode};
use super::oracle::oracle_answer;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum QuestionType {
    Descriptive,
    Temporal,
    Causal,
    Counterfactual,
}

impl QuestionType {
    pub const ALL: [QuestionType; 4] = [
        QuestionType::Descriptive,
        QuestionType::Temporal,
        QuestionType::Causal,
        QuestionType::Counterfactual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuestionType::Descriptive => "descriptive",
            QuestionType::Temporal => "temporal",
            QuestionType::Causal => "causal",
            QuestionType::Counterfactual => "counterfactual",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        QuestionType::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::Data(alloc::format!("unknown question type {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Before,
    After,
}

impl Relation {
    fn word(self) -> &'static str {
        match self {
            Relation::Before => "before",
            Relation::After => "after",
        }
    }
}

/// Template identity; one variant per question pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemplateKind {
    CountTeamAction,
    TeamPerforms,
    OutcomeSuccess,
    SameTeamNeighbour,
    OtherTeamNeighbour,
    Effect,
    Why,
    HowFail,
    Counterfactual,
    CountAll,
    CountPlayerAction,
    PlayerNeighbour,
    CountBefore,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 13] = [
        TemplateKind::CountTeamAction,
        TemplateKind::TeamPerforms,
        TemplateKind::OutcomeSuccess,
        TemplateKind::SameTeamNeighbour,
        TemplateKind::OtherTeamNeighbour,
        TemplateKind::Effect,
        TemplateKind::Why,
        TemplateKind::HowFail,
        TemplateKind::Counterfactual,
        TemplateKind::CountAll,
        TemplateKind::CountPlayerAction,
        TemplateKind::PlayerNeighbour,
        TemplateKind::CountBefore,
    ];

    /// Word pattern. `{team}` is "the left team"/"the right team", `{ord}`
    /// an ordinal word, `{rel}` before/after, `{act}`/`{act2}` action names.
    pub fn pattern(self) -> &'static str {
        match self {
            TemplateKind::CountTeamAction => "How many times does {team} perform {act}?",
            TemplateKind::TeamPerforms => "Does {team} perform {act}?",
            TemplateKind::OutcomeSuccess => "Does {team} successfully do their {ord} {act}?",
            TemplateKind::SameTeamNeighbour => "What does {team} do {rel} their {ord} {act}?",
            TemplateKind::OtherTeamNeighbour => "What does {team} do {rel} the other team does the {ord} {act}?",
            TemplateKind::Effect => "What is the effect of the {ord} {act} of {team}?",
            TemplateKind::Why => "Why does {team} do the {ord} {act}?",
            TemplateKind::HowFail => "How does {team} fail to do the {ord} {act}?",
            TemplateKind::Counterfactual => {
                "Would {team} succeed in doing the {ord} {act} if the other team did not do {act2}?"
            }
            TemplateKind::CountAll => "How many actions does the player perform?",
            TemplateKind::CountPlayerAction => "How many times does the player perform {act}?",
            TemplateKind::PlayerNeighbour => "What does the player do {rel} their {ord} {act}?",
            TemplateKind::CountBefore => "How many times do the players do {act} before {act2}?",
        }
    }

    pub fn question_type(self) -> QuestionType {
        use TemplateKind::*;
        match self {
            CountTeamAction | TeamPerforms | OutcomeSuccess | CountAll | CountPlayerAction => QuestionType::Descriptive,
            SameTeamNeighbour | OtherTeamNeighbour | PlayerNeighbour | CountBefore => QuestionType::Temporal,
            Effect | Why | HowFail => QuestionType::Causal,
            Counterfactual => QuestionType::Counterfactual,
        }
    }

    pub fn uses_team(self) -> bool {
        self.pattern().contains("{team}")
    }

    /// Counting templates ("How many ...").
    pub fn is_counting(self) -> bool {
        self.pattern().starts_with("How many")
    }
}

/// Set of enabled templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet(BTreeSet<TemplateKind>);

impl TemplateSet {
    pub fn all() -> Self {
        TemplateSet(TemplateKind::ALL.into_iter().collect())
    }

    pub fn of(kinds: &[TemplateKind]) -> Self {
        TemplateSet(kinds.iter().copied().collect())
    }

    pub fn contains(&self, k: TemplateKind) -> bool {
        self.0.contains(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = TemplateKind> + '_ {
        self.0.iter().copied()
    }
}

/// A question as template plus slot values. Ordinals are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Question {
    pub kind: TemplateKind,
    pub team: Team,
    pub relation: Option<Relation>,
    pub ordinal: Option<usize>,
    pub action: Option<String>,
    pub action2: Option<String>,
}

const ORDINALS: [&str; 10] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

/// Ordinal word for a 1-based position (up to ten).
pub fn ordinal_word(i: usize) -> Option<&'static str> {
    i.checked_sub(1).and_then(|k| ORDINALS.get(k).copied())
}

fn ordinal_value(word: &str) -> Option<usize> {
    if let Some(p) = ORDINALS.iter().position(|w| *w == word) {
        return Some(p + 1);
    }
    // numeric forms such as 1st, 2nd, 3rd, 4th
    let digits: String = word.chars().take_while(char::is_ascii_digit).collect();
    let suffix = &word[digits.len()..];
    let n: usize = digits.parse().ok()?;
    let expected = match (n % 100, n % 10) {
        (11..=13, _) => "th",
        (_, 1) => "st",
        (_, 2) => "nd",
        (_, 3) => "rd",
        _ => "th",
    };
    (n >= 1 && suffix == expected).then_some(n)
}

impl Question {
    pub fn new(kind: TemplateKind) -> Self {
        Question {
            kind,
            team: Team::None,
            relation: None,
            ordinal: None,
            action: None,
            action2: None,
        }
    }

    pub fn team(mut self, team: Team) -> Self {
        self.team = team;
        self
    }

    pub fn relation(mut self, r: Relation) -> Self {
        self.relation = Some(r);
        self
    }

    pub fn ordinal(mut self, i: usize) -> Self {
        self.ordinal = Some(i);
        self
    }

    pub fn action(mut self, a: &str) -> Self {
        self.action = Some(a.into());
        self
    }

    pub fn action2(mut self, a: &str) -> Self {
        self.action2 = Some(a.into());
        self
    }

    pub fn question_type(&self) -> QuestionType {
        self.kind.question_type()
    }

    /// Surface text of the question.
    pub fn render(&self) -> Result<String> {
        self.render_with(false)
    }

    /// Meta-question: team replaced by "the team", ordinals removed.
    pub fn meta_key(&self) -> Result<String> {
        self.render_with(true)
    }

    fn render_with(&self, neutral: bool) -> Result<String> {
        let missing = |slot: &str| Error::Data(alloc::format!("{:?} question lacks slot {slot}", self.kind));
        let mut words: Vec<String> = Vec::new();
        for word in self.kind.pattern().split(' ') {
            let (core, q) = match word.strip_suffix('?') {
                Some(c) => (c, "?"),
                None => (word, ""),
            };
            let filled: Option<String> = match core {
                "{team}" => {
                    if neutral {
                        Some("the team".into())
                    } else {
                        match self.team {
                            Team::None => return Err(missing("team")),
                            t => Some(alloc::format!("the {} team", t.name())),
                        }
                    }
                }
                "{ord}" => {
                    let i = self.ordinal.ok_or_else(|| missing("ordinal"))?;
                    let w = ordinal_word(i).ok_or_else(|| Error::Data(alloc::format!("ordinal {i} too large")))?;
                    (!neutral).then(|| w.to_string())
                }
                "{rel}" => Some(self.relation.ok_or_else(|| missing("relation"))?.word().into()),
                "{act}" => Some(self.action.clone().ok_or_else(|| missing("action"))?),
                "{act2}" => Some(self.action2.clone().ok_or_else(|| missing("action2"))?),
                w => Some(w.into()),
            };
            match filled {
                Some(f) => words.push(f + q),
                // a dropped ordinal takes its article with it
                None if core == "{ord}" && words.last().is_some_and(|w| w == "the") => {
                    words.pop();
                }
                None if !q.is_empty() => {
                    if let Some(last) = words.last_mut() {
                        last.push_str(q);
                    }
                }
                None => {}
            }
        }
        Ok(words.join(" "))
    }

    /// Recovers the template and slots from rendered text.
    pub fn parse(text: &str) -> Result<Question> {
        let words: Vec<&str> = text.trim().trim_end_matches('?').split_whitespace().collect();
        TemplateKind::ALL
            .into_iter()
            .find_map(|k| match_pattern(k, &words))
            .ok_or_else(|| Error::UnknownTemplate(text.into()))
    }
}

fn match_pattern(kind: TemplateKind, words: &[&str]) -> Option<Question> {
    let pat: Vec<&str> = kind.pattern().trim_end_matches('?').split(' ').collect();
    let mut q = Question::new(kind);
    let mut i = 0;
    for p in pat {
        match p {
            "{team}" => {
                let w = words.get(i..i + 3)?;
                if w[0] != "the" || w[2] != "team" {
                    return None;
                }
                q.team = match w[1] {
                    "left" => Team::Left,
                    "right" => Team::Right,
                    _ => return None,
                };
                i += 3;
            }
            "{ord}" => {
                q.ordinal = Some(ordinal_value(words.get(i)?)?);
                i += 1;
            }
            "{rel}" => {
                q.relation = Some(match *words.get(i)? {
                    "before" => Relation::Before,
                    "after" => Relation::After,
                    _ => return None,
                });
                i += 1;
            }
            "{act}" => {
                q.action = Some((*words.get(i)?).into());
                i += 1;
            }
            "{act2}" => {
                q.action2 = Some((*words.get(i)?).into());
                i += 1;
            }
            lit => {
                if *words.get(i)? != lit {
                    return None;
                }
                i += 1;
            }
        }
    }
    (i == words.len()).then_some(q)
}

/// One question/answer instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QARecord {
    pub id: u64,
    pub episode_id: u64,
    pub question: Question,
    pub text: String,
    pub question_type: QuestionType,
    pub sport: String,
    pub answer: String,
    pub meta_key: String,
}

impl QARecord {
    pub fn new(id: u64, episode_id: u64, sport: &str, question: Question, answer: String) -> Result<Self> {
        Ok(QARecord {
            id,
            episode_id,
            text: question.render()?,
            question_type: question.question_type(),
            sport: sport.into(),
            meta_key: question.meta_key()?,
            question,
            answer,
        })
    }

    /// Rebuilds a record from its persisted fields, re-deriving the template.
    pub fn from_parts(id: u64, episode_id: u64, text: &str, sport: &str, answer: &str) -> Result<Self> {
        let q = Question::parse(text)?;
        Self::new(id, episode_id, sport, q, answer.into())
    }
}

/// Meta-question key of a record, recomputed from its template.
pub fn meta_question(record: &QARecord) -> Result<String> {
    Question::parse(&record.text)?.meta_key()
}

/// Every answerable instantiation of the enabled templates for `log`.
/// Ordinals count events of the same team and action in start order. Team
/// templates are skipped for single-performer sports, and causal and
/// counterfactual templates only apply to two-team sports.
pub fn generate_qa(log: &EventLog, sport: &SportSpec, templates: &TemplateSet) -> Result<Vec<QARecord>> {
    let mut questions: Vec<Question> = Vec::new();
    let two_team = sport.mode == TeamMode::TwoTeam;
    let ordinals = ordinals(log);
    for kind in templates.iter() {
        if kind.uses_team() != two_team && !matches!(kind, TemplateKind::CountAll) {
            continue;
        }
        if kind == TemplateKind::CountAll && two_team {
            continue;
        }
        match kind {
            TemplateKind::CountTeamAction | TemplateKind::TeamPerforms => {
                for team in [Team::Left, Team::Right] {
                    for a in &sport.actions {
                        questions.push(Question::new(kind).team(team).action(a));
                    }
                }
            }
            TemplateKind::CountPlayerAction => {
                for a in &sport.actions {
                    questions.push(Question::new(kind).action(a));
                }
            }
            TemplateKind::CountAll => questions.push(Question::new(kind)),
            TemplateKind::CountBefore => {
                for a in &sport.actions {
                    for b in &sport.actions {
                        if a != b {
                            questions.push(Question::new(kind).action(a).action2(b));
                        }
                    }
                }
            }
            _ => {
                for (e, &ord) in log.events.iter().zip(&ordinals) {
                    if ordinal_word(ord).is_none() {
                        continue;
                    }
                    let base = Question::new(kind).ordinal(ord).action(&e.action);
                    match kind {
                        TemplateKind::SameTeamNeighbour | TemplateKind::PlayerNeighbour => {
                            for r in [Relation::Before, Relation::After] {
                                questions.push(base.clone().team(e.team).relation(r));
                            }
                        }
                        TemplateKind::OtherTeamNeighbour => {
                            for r in [Relation::Before, Relation::After] {
                                questions.push(base.clone().team(e.team.other()).relation(r));
                            }
                        }
                        TemplateKind::Counterfactual => {
                            if let Some(rule) = sport.rule_for(&e.action) {
                                questions.push(base.team(e.team).action2(&rule.counter));
                            }
                        }
                        _ => questions.push(base.team(e.team)),
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for q in questions {
        if let Some(answer) = oracle_answer(log, sport, &q)? {
            out.push(QARecord::new(out.len() as u64, log.episode_id, &sport.name, q, answer)?);
        }
    }
    Ok(out)
}

/// 1-based rank of every event among events with the same team and action.
fn ordinals(log: &EventLog) -> Vec<usize> {
    log.events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            log.events[..=i]
                .iter()
                .filter(|o| o.team == e.team && o.action == e.action)
                .count()
        })
        .collect()
}
