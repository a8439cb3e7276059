//! Closed-answer questionnaire items and their tallies.

use std::fmt;

use serde::{Serialize, Serializer};

macro_rules! closed_answers {
    ($name:ident { $($variant:ident => $code:literal, $text:literal;)+ }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant,)+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant,)+];

            /// Short code used in CSV files.
            pub fn code(&self) -> &'static str {
                match self {
                    $($name::$variant => $code,)+
                }
            }

            pub fn text(&self) -> &'static str {
                match self {
                    $($name::$variant => $text,)+
                }
            }

            /// Accepts the code or the answer text, ignoring case.
            pub fn parse(s: &str) -> Option<Self> {
                let s = s.trim();
                Self::ALL
                    .iter()
                    .copied()
                    .find(|a| a.code().eq_ignore_ascii_case(s) || a.text().eq_ignore_ascii_case(s))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.text())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.text())
            }
        }
    };
}

closed_answers!(HearingSelfRating {
    Excellent => "excellent", "Excellent";
    Good => "good", "Good";
    Average => "average", "Average";
    Moderate => "moderate", "Moderate";
    Poor => "poor", "Poor";
});

closed_answers!(SpeechProblemFrequency {
    EveryDay => "daily", "Every day";
    Weekly => "weekly", "At least once a week";
    Monthly => "monthly", "At least once a month";
    Never => "never", "Never";
});

/// One participant's answers. `q0` rates their own hearing, `q5` asks how
/// often TV speech is hard to understand; the rest is free text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionnaireResponse {
    pub participant_id: String,
    pub q0: HearingSelfRating,
    pub q1: String,
    pub q2: String,
    pub q3: String,
    pub q4: String,
    pub q5: SpeechProblemFrequency,
    pub q6: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerCount<A> {
    pub answer: A,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionnaireTally {
    pub n: usize,
    /// Every answer option in scale order, including empty ones.
    pub q0: Vec<AnswerCount<HearingSelfRating>>,
    pub q5: Vec<AnswerCount<SpeechProblemFrequency>>,
    /// Share of respondents reporting any problem; `None` without responses.
    pub problem_share: Option<f64>,
}

pub fn questionnaire_tally(responses: &[QuestionnaireResponse]) -> QuestionnaireTally {
    let n = responses.len();
    let q0 = HearingSelfRating::ALL
        .iter()
        .map(|&answer| AnswerCount {
            answer,
            count: responses.iter().filter(|r| r.q0 == answer).count(),
        })
        .collect();
    let q5: Vec<_> = SpeechProblemFrequency::ALL
        .iter()
        .map(|&answer| AnswerCount {
            answer,
            count: responses.iter().filter(|r| r.q5 == answer).count(),
        })
        .collect();
    let never = q5
        .iter()
        .find(|c| c.answer == SpeechProblemFrequency::Never)
        .map_or(0, |c| c.count);
    QuestionnaireTally {
        n,
        q0,
        q5,
        problem_share: (n > 0).then(|| 1.0 - never as f64 / n as f64),
    }
}
