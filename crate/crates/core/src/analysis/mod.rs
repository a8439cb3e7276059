//! Box-plot statistics, grouped aggregates, audiogram and questionnaire
//! summaries, and plot geometry.

mod aggregate;
mod audiogram;
mod boxplot;
mod io;
mod plot;
mod questionnaire;

use thiserror::Error;

pub use aggregate::{
    aggregate, item_key, overall, validity_filter, Aggregate, Group, GroupStats, Grouping, Overall,
    Partition, DEFAULT_MAX_DISCARD_SHARE,
};
pub use audiogram::{audiogram_summary, Audiogram, AudiogramSummary};
pub use boxplot::{box_stats, quantile_sorted, BoxStats, OutlierClass};
pub use io::{
    read_audiograms_csv, read_questionnaire_csv, read_results_csv, write_audiograms_csv,
    write_questionnaire_csv, write_results_csv, CsvError, RowError, AUDIOGRAM_HEADER,
    QUESTIONNAIRE_HEADER, RESULTS_HEADER,
};
pub use plot::{
    audiogram_plot, export_plot_data, method_color, questionnaire_plot, to_svg, Bar, Layout, Line,
    LineRole, Marker, MarkerClass, PlotBox, PlotDocument, PlotExtras, Stroke, Tick, DS_COLOR,
    NEUTRAL_COLOR, OO_COLOR,
};
pub use questionnaire::{
    questionnaire_tally, AnswerCount, HearingSelfRating, QuestionnaireResponse, QuestionnaireTally,
    SpeechProblemFrequency,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no values")]
    EmptyInput,
    #[error("values must be finite")]
    NonFinite,
    #[error("group {0} has no results")]
    EmptyGroup(String),
    #[error("audiogram of {pid} uses a different frequency list")]
    FrequencyMismatch { pid: String },
    #[error("audiogram of {pid}: {reason}")]
    InvalidAudiogram { pid: String, reason: String },
}
