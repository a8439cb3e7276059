//! Reports over a results directory: plot documents and a text summary.

use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use adjustsat_core::analysis::{
    aggregate, audiogram_plot, audiogram_summary, export_plot_data, item_key, questionnaire_plot,
    questionnaire_tally, read_audiograms_csv, read_questionnaire_csv, read_results_csv, to_svg,
    validity_filter, AnalysisError, AudiogramSummary, BoxStats, CsvError, Grouping, Layout, PlotDocument,
    PlotExtras, QuestionnaireTally, DEFAULT_MAX_DISCARD_SHARE,
};
use adjustsat_core::stimulus::{max_achievable_ld, DeMethod, Separation};
use thiserror::Error;

use crate::manifest::{Manifest, Overrides};

pub const RESULTS_FILE: &str = "results.csv";
pub const AUDIOGRAMS_FILE: &str = "audiograms.csv";
pub const QUESTIONNAIRE_FILE: &str = "questionnaire.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("no results at {0}")]
    NoResults(PathBuf),
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: CsvError,
    },
    #[error("{}: {source}", path.display())]
    Audiograms {
        path: PathBuf,
        #[source]
        source: AnalysisError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AnalyzeError {
    /// One line per malformed row, for reporting.
    pub fn details(&self) -> Vec<String> {
        match self {
            AnalyzeError::Csv {
                path,
                source: CsvError::Rows(rows),
            } => rows
                .iter()
                .map(|r| format!("{}:{}: {}", path.display(), r.line, r.message))
                .collect(),
            other => vec![other.to_string()],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    pub svg: bool,
    /// Reachable LD per item key, drawn in the LD figure.
    pub maxima: Vec<(String, f64)>,
    pub max_discard_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub trials: usize,
    pub valid: usize,
    pub discarded_participants: Vec<String>,
    pub ld: Vec<(String, Option<BoxStats>)>,
    pub satisfaction: Vec<(String, Option<BoxStats>)>,
    /// Median chosen LD of OO minus that of DS.
    pub oo_ds_median_gap: Option<f64>,
    pub mean_default_ld: Option<f64>,
    pub audiograms: Option<AudiogramSummary>,
    pub questionnaire: Option<QuestionnaireTally>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub summary: Summary,
    pub documents: Vec<(String, PlotDocument)>,
    pub written: Vec<PathBuf>,
}

fn read_csv<T>(path: &Path, parse: impl Fn(File) -> Result<T, CsvError>) -> Result<Option<T>, AnalyzeError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(source) => return Err(AnalyzeError::Io { path: path.into(), source }),
    };
    parse(file)
        .map(Some)
        .map_err(|source| AnalyzeError::Csv { path: path.into(), source })
}

pub fn analyze(results_dir: &Path, out_dir: &Path, opts: &AnalyzeOptions) -> Result<Report, AnalyzeError> {
    let results_path = results_dir.join(RESULTS_FILE);
    let results = read_csv(&results_path, read_results_csv)?.unwrap_or_default();
    if results.is_empty() {
        return Err(AnalyzeError::NoResults(results_path));
    }
    let audiograms = read_csv(&results_dir.join(AUDIOGRAMS_FILE), read_audiograms_csv)?;
    let questionnaire = read_csv(&results_dir.join(QUESTIONNAIRE_FILE), read_questionnaire_csv)?;

    let part = validity_filter(&results, Some(opts.max_discard_share.unwrap_or(DEFAULT_MAX_DISCARD_SHARE)));
    let all = aggregate(&part.valid, Grouping::All);
    let by_item = aggregate(&part.valid, Grouping::ByItem);
    let by_method = aggregate(&part.valid, Grouping::ByDeMethod);

    let extras = PlotExtras {
        maxima: opts.maxima.clone(),
    };
    let audiogram_summary = match &audiograms {
        Some(a) if !a.is_empty() => Some(audiogram_summary(a).map_err(|source| AnalyzeError::Audiograms {
            path: results_dir.join(AUDIOGRAMS_FILE),
            source,
        })?),
        _ => None,
    };
    let empty_audiogram = AudiogramSummary {
        n: 0,
        frequencies: vec![],
        mean_better_ear: vec![],
        lower_envelope: vec![],
        upper_envelope: vec![],
    };
    let tally = questionnaire.as_ref().map(|q| questionnaire_tally(q));
    let documents = vec![
        ("ld_figure".to_string(), export_plot_data(&by_item, Some(&all), Layout::LdFigure, &extras)),
        (
            "satisfaction_figure".to_string(),
            export_plot_data(&by_item, Some(&all), Layout::SatisfactionFigure, &extras),
        ),
        (
            "audiogram_figure".to_string(),
            audiogram_plot(audiogram_summary.as_ref().unwrap_or(&empty_audiogram)),
        ),
        (
            "questionnaire_figure".to_string(),
            questionnaire_plot(tally.as_ref().unwrap_or(&questionnaire_tally(&[]))),
        ),
    ];

    let stats = |pick: fn(&adjustsat_core::analysis::GroupStats) -> &BoxStats| {
        all.groups
            .iter()
            .chain(&by_method.groups)
            .map(|g| (g.key.clone(), g.stats.as_ref().ok().map(|s| pick(s).clone())))
            .collect::<Vec<_>>()
    };
    let median_of = |m: DeMethod| {
        by_method
            .group(m.code())
            .and_then(|g| g.stats.as_ref().ok())
            .map(|s| s.chosen_ld.median)
    };
    let summary = Summary {
        trials: results.len(),
        valid: part.valid.len(),
        discarded_participants: part.discarded_participants.clone(),
        ld: stats(|s| &s.chosen_ld),
        satisfaction: stats(|s| &s.satisfaction),
        oo_ds_median_gap: median_of(DeMethod::OriginalObjects)
            .zip(median_of(DeMethod::DialogueSeparation))
            .map(|(a, b)| a - b),
        mean_default_ld: all.overall.as_ref().map(|o| o.mean_default_ld),
        audiograms: audiogram_summary,
        questionnaire: tally,
    };

    fs::create_dir_all(out_dir).map_err(|source| AnalyzeError::Io { path: out_dir.into(), source })?;
    let mut written = Vec::new();
    let mut write = |name: String, body: String| -> Result<(), AnalyzeError> {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|source| AnalyzeError::Io { path: path.clone(), source })?;
        written.push(path);
        Ok(())
    };
    for (name, doc) in &documents {
        write(format!("{name}.json"), doc.to_json())?;
        if opts.svg {
            write(format!("{name}.svg"), to_svg(doc))?;
        }
    }
    write(SUMMARY_FILE.to_string(), summary.to_string())?;
    Ok(Report {
        summary,
        documents,
        written,
    })
}

/// Highest LD reachable for every manifest item, keyed like by-item groups.
/// Items whose stems cannot be read are skipped with a warning.
pub fn ld_maxima(manifest: &Manifest, overrides: Overrides) -> Vec<(String, f64)> {
    let defaults = manifest.defaults(overrides);
    let mut out = Vec::new();
    for decl in &manifest.items {
        let result = decl.load(&manifest.base, defaults).and_then(|item| {
            let sep = Separation::new(item.stems, item.spec.leakage_model());
            max_achievable_ld(&sep, &item.spec.grid, item.spec.target_loudness)
        });
        match result {
            Ok(v) => out.push((item_key(&decl.label, decl.de_method), v)),
            Err(e) => tracing::warn!(item = %decl.id, "no LD maximum: {e}"),
        }
    }
    out
}

fn fmt_stats(s: &Option<BoxStats>) -> String {
    match s {
        Some(s) => format!(
            "n {}, median {:.2}, IQR {:.2}, mean {:.2}, outliers {}",
            s.n,
            s.median + 0.0,
            s.iqr + 0.0,
            s.mean + 0.0,
            s.outlier_count()
        ),
        None => "no results".into(),
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "trials: {} ({} valid, {} discarded)", self.trials, self.valid, self.trials - self.valid);
        let _ = writeln!(s, "discarded participants: {}", self.discarded_participants.len());
        for pid in &self.discarded_participants {
            let _ = writeln!(s, "  {pid}");
        }
        let _ = writeln!(s, "chosen LD (LU):");
        for (k, st) in &self.ld {
            let _ = writeln!(s, "  {k}: {}", fmt_stats(st));
        }
        let _ = writeln!(s, "satisfaction (0-30):");
        for (k, st) in &self.satisfaction {
            let _ = writeln!(s, "  {k}: {}", fmt_stats(st));
        }
        match self.oo_ds_median_gap {
            Some(g) => _ = writeln!(s, "OO-DS median gap: {:.2} LU", g + 0.0),
            None => _ = writeln!(s, "OO-DS median gap: n/a"),
        }
        match self.mean_default_ld {
            Some(d) => _ = writeln!(s, "mean default LD {:.1} LU", d + 0.0),
            None => _ = writeln!(s, "mean default LD n/a"),
        }
        if let Some(a) = &self.audiograms {
            let _ = writeln!(s, "audiograms: {} participants", a.n);
            for (i, freq) in a.frequencies.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "  {freq} Hz: better ear mean {:.1} dBHL, range {:.1} to {:.1}",
                    a.mean_better_ear[i], a.lower_envelope[i], a.upper_envelope[i]
                );
            }
        }
        if let Some(q) = &self.questionnaire {
            let _ = writeln!(s, "questionnaire: {} responses", q.n);
            for c in &q.q0 {
                let _ = writeln!(s, "  q0 {}: {}", c.answer, c.count);
            }
            for c in &q.q5 {
                let _ = writeln!(s, "  q5 {}: {}", c.answer, c.count);
            }
            match q.problem_share {
                Some(p) => _ = writeln!(s, "  reporting TV speech problems: {:.1}%", p * 100.0),
                None => _ = writeln!(s, "  reporting TV speech problems: n/a"),
            }
        }
        f.write_str(&s)
    }
}
