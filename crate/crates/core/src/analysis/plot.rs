//! Renderer-independent plot geometry, with an SVG projection.
//!
//! x coordinates are category indices (0, 1, ...); y is in data units.

use std::fmt::Write as _;

use serde::Serialize;

use super::{Aggregate, AudiogramSummary, BoxStats, QuestionnaireTally};
use crate::session::{Locale, SatisfactionLabel, SAME_AS, SCALE_MAX, SCALE_MIN};
use crate::stimulus::DeMethod;

pub const OO_COLOR: &str = "#d62728";
pub const DS_COLOR: &str = "#1f77b4";
pub const NEUTRAL_COLOR: &str = "#000000";
const BOX_WIDTH: f64 = 0.6;

pub fn method_color(m: Option<DeMethod>) -> &'static str {
    match m {
        Some(DeMethod::OriginalObjects) => OO_COLOR,
        Some(DeMethod::DialogueSeparation) => DS_COLOR,
        None => NEUTRAL_COLOR,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    LdFigure,
    SatisfactionFigure,
    AudiogramFigure,
    QuestionnaireFigure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerClass {
    /// Between 1.5 and 3 IQR beyond a quartile.
    Cross,
    /// More than 3 IQR beyond a quartile.
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stroke {
    Solid,
    Dashed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineRole {
    DefaultLd,
    Mean,
    Maximum,
    SameAs,
    BetterEarMean,
    Envelope,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotBox {
    pub group: String,
    pub x: f64,
    pub width: f64,
    pub color: &'static str,
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marker {
    pub group: String,
    pub x: f64,
    pub y: f64,
    pub class: MarkerClass,
    pub color: &'static str,
}

/// A straight segment; horizontal reference lines have `y0 == y1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Line {
    pub role: LineRole,
    pub stroke: Stroke,
    pub color: &'static str,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bar {
    pub series: String,
    pub category: String,
    pub x: f64,
    pub width: f64,
    pub height: f64,
    pub color: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tick {
    pub at: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotDocument {
    pub layout: Layout,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Larger values are drawn lower (audiograms).
    pub y_inverted: bool,
    pub x_ticks: Vec<Tick>,
    pub y_ticks: Vec<Tick>,
    pub boxes: Vec<PlotBox>,
    pub markers: Vec<Marker>,
    pub lines: Vec<Line>,
    pub bars: Vec<Bar>,
}

impl PlotDocument {
    fn new(layout: Layout, title: &str, x_label: &str, y_label: &str) -> Self {
        PlotDocument {
            layout,
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_range: [-0.5, 0.5],
            y_range: [0.0, 1.0],
            y_inverted: false,
            x_ticks: Vec::new(),
            y_ticks: Vec::new(),
            boxes: Vec::new(),
            markers: Vec::new(),
            lines: Vec::new(),
            bars: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plot document serializes");
        s.push('\n');
        s
    }

    fn hline(&mut self, role: LineRole, stroke: Stroke, color: &'static str, y: f64) {
        let [x0, x1] = self.x_range;
        self.lines.push(Line { role, stroke, color, x0, y0: y, x1, y1: y });
    }

    fn fit_y(&mut self, pad: f64, fixed: Option<[f64; 2]>) {
        if let Some(r) = fixed {
            self.y_range = r;
            return;
        }
        let ys = self
            .boxes
            .iter()
            .flat_map(|b| [b.whisker_lo, b.whisker_hi])
            .chain(self.markers.iter().map(|m| m.y))
            .chain(self.lines.iter().flat_map(|l| [l.y0, l.y1]))
            .chain(self.bars.iter().map(|b| b.height));
        let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
        if lo.is_finite() {
            self.y_range = [(lo - pad).floor(), (hi + pad).ceil()];
        }
    }
}

/// Extra reference lines for the LD figure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotExtras {
    /// Largest reachable LD, drawn dashed over the group with this key.
    pub maxima: Vec<(String, f64)>,
}

/// Geometry of the chosen-LD or satisfaction box plots of `stats`.
///
/// Groups that failed (empty) keep their x slot but draw nothing. Mean and
/// default-LD reference lines need the overall block of an `All` aggregate,
/// passed as `overall_from`.
pub fn export_plot_data(
    stats: &Aggregate,
    overall_from: Option<&Aggregate>,
    layout: Layout,
    extras: &PlotExtras,
) -> PlotDocument {
    let satisfaction = layout == Layout::SatisfactionFigure;
    let mut doc = if satisfaction {
        PlotDocument::new(layout, "Satisfaction", "item", "satisfaction")
    } else {
        PlotDocument::new(layout, "Preferred LD", "item", "LD / LU")
    };
    let n = stats.groups.len().max(1);
    doc.x_range = [-0.5, n as f64 - 0.5];

    for (i, g) in stats.groups.iter().enumerate() {
        let x = i as f64;
        doc.x_ticks.push(Tick { at: x, label: g.key.clone() });
        let Ok(gs) = &g.stats else { continue };
        let s: &BoxStats = if satisfaction { &gs.satisfaction } else { &gs.chosen_ld };
        let color = method_color(g.de_method);
        doc.boxes.push(PlotBox {
            group: g.key.clone(),
            x,
            width: BOX_WIDTH,
            color,
            n: s.n,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            whisker_lo: s.whisker_lo,
            whisker_hi: s.whisker_hi,
            mean: s.mean,
        });
        let marks = |vals: &[f64], class| {
            vals.iter()
                .map(|&y| Marker { group: g.key.clone(), x, y, class, color })
                .collect::<Vec<_>>()
        };
        doc.markers.extend(marks(&s.outliers_near, MarkerClass::Cross));
        doc.markers.extend(marks(&s.outliers_far, MarkerClass::Circle));
    }

    let overall = overall_from.or(Some(stats)).and_then(|a| a.overall.as_ref());
    if let Some(o) = overall {
        let by_method = if satisfaction {
            &o.mean_satisfaction_by_method
        } else {
            &o.mean_ld_by_method
        };
        for (&m, &y) in by_method {
            doc.hline(LineRole::Mean, Stroke::Solid, method_color(Some(m)), y);
        }
        if !satisfaction {
            doc.hline(LineRole::DefaultLd, Stroke::Dashed, NEUTRAL_COLOR, o.mean_default_ld);
        }
    }
    if satisfaction {
        doc.hline(LineRole::SameAs, Stroke::Dashed, NEUTRAL_COLOR, SAME_AS as f64);
        doc.y_ticks = SatisfactionLabel::ALL
            .iter()
            .map(|l| Tick { at: l.anchor() as f64, label: l.text(Locale::English).to_string() })
            .collect();
        doc.fit_y(0.0, Some([SCALE_MIN as f64, SCALE_MAX as f64]));
    } else {
        for (key, y) in &extras.maxima {
            if let Some(i) = stats.groups.iter().position(|g| &g.key == key) {
                let color = method_color(stats.groups[i].de_method);
                let x = i as f64;
                doc.lines.push(Line {
                    role: LineRole::Maximum,
                    stroke: Stroke::Dashed,
                    color,
                    x0: x - BOX_WIDTH / 2.0,
                    y0: *y,
                    x1: x + BOX_WIDTH / 2.0,
                    y1: *y,
                });
            }
        }
        doc.fit_y(1.0, None);
        doc.y_ticks = ticks(doc.y_range, 5.0);
    }
    doc
}

fn ticks([lo, hi]: [f64; 2], step: f64) -> Vec<Tick> {
    let mut out = Vec::new();
    let mut v = (lo / step).ceil() * step;
    while v <= hi {
        out.push(Tick { at: v + 0.0, label: format!("{}", v + 0.0) });
        v += step;
    }
    out
}

pub fn audiogram_plot(summary: &AudiogramSummary) -> PlotDocument {
    let mut doc = PlotDocument::new(
        Layout::AudiogramFigure,
        "Better-ear audiogram",
        "frequency / Hz",
        "threshold / dBHL",
    );
    let k = summary.frequencies.len();
    doc.x_range = [-0.5, k.max(1) as f64 - 0.5];
    doc.y_inverted = true;
    doc.x_ticks = summary
        .frequencies
        .iter()
        .enumerate()
        .map(|(i, f)| Tick { at: i as f64, label: format!("{f}") })
        .collect();
    let curves = [
        (&summary.mean_better_ear, LineRole::BetterEarMean, Stroke::Solid),
        (&summary.lower_envelope, LineRole::Envelope, Stroke::Dashed),
        (&summary.upper_envelope, LineRole::Envelope, Stroke::Dashed),
    ];
    for (ys, role, stroke) in curves {
        for i in 1..ys.len() {
            doc.lines.push(Line {
                role,
                stroke,
                color: NEUTRAL_COLOR,
                x0: (i - 1) as f64,
                y0: ys[i - 1],
                x1: i as f64,
                y1: ys[i],
            });
        }
        if ys.len() == 1 {
            doc.markers.push(Marker {
                group: "mean".into(),
                x: 0.0,
                y: ys[0],
                class: MarkerClass::Cross,
                color: NEUTRAL_COLOR,
            });
        }
    }
    let lo = summary.lower_envelope.iter().copied().fold(0.0, f64::min);
    let hi = summary.upper_envelope.iter().copied().fold(0.0, f64::max);
    doc.fit_y(0.0, Some([(lo / 10.0).floor() * 10.0, (hi / 10.0).ceil() * 10.0 + 10.0]));
    doc.y_ticks = ticks(doc.y_range, 10.0);
    doc
}

/// Two bar series: self-rated hearing and how often TV speech is a problem.
pub fn questionnaire_plot(tally: &QuestionnaireTally) -> PlotDocument {
    let mut doc = PlotDocument::new(Layout::QuestionnaireFigure, "Questionnaire", "answer", "participants");
    let q0 = tally.q0.iter().map(|c| ("q0", c.answer.text(), c.count));
    let q5 = tally.q5.iter().map(|c| ("q5", c.answer.text(), c.count));
    for (i, (series, category, count)) in q0.chain(q5).enumerate() {
        doc.x_ticks.push(Tick { at: i as f64, label: category.to_string() });
        doc.bars.push(Bar {
            series: series.to_string(),
            category: category.to_string(),
            x: i as f64,
            width: BOX_WIDTH,
            height: count as f64,
            color: if series == "q0" { OO_COLOR } else { DS_COLOR },
        });
    }
    doc.x_range = [-0.5, doc.bars.len().max(1) as f64 - 0.5];
    doc.fit_y(0.0, Some([0.0, tally.n.max(1) as f64]));
    doc.y_ticks = ticks(doc.y_range, 1.0);
    doc
}

const W: f64 = 800.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 90.0;

/// SVG rendering of a geometry document.
pub fn to_svg(doc: &PlotDocument) -> String {
    let [x0, x1] = doc.x_range;
    let [y0, y1] = doc.y_range;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let sw = |w: f64| w / (x1 - x0) * (W - LEFT - RIGHT);
    let sy = |y: f64| {
        let t = (y - y0) / (y1 - y0);
        let t = if doc.y_inverted { t } else { 1.0 - t };
        TOP + t * (H - TOP - BOTTOM)
    };
    let dash = |s: Stroke| match s {
        Stroke::Solid => "",
        Stroke::Dashed => " stroke-dasharray=\"6 4\"",
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>");
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>", W / 2.0, esc(&doc.title));
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.1}\" transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">{}</text>",
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0,
        esc(&doc.y_label)
    );
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", (LEFT + W - RIGHT) / 2.0, H - 8.0, esc(&doc.x_label));
    let _ = writeln!(
        s,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#000000\"/>",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for t in &doc.y_ticks {
        let y = sy(t.at);
        let _ = writeln!(s, "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{LEFT}\" y2=\"{y:.1}\" stroke=\"#000000\"/>", LEFT - 5.0);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", LEFT - 8.0, y + 4.0, esc(&t.label));
    }
    for t in &doc.x_ticks {
        let x = sx(t.at);
        let y = H - BOTTOM + 14.0;
        let _ = writeln!(
            s,
            "<text x=\"{x:.1}\" y=\"{y:.1}\" transform=\"rotate(-40 {x:.1} {y:.1})\" text-anchor=\"end\">{}</text>",
            esc(&t.label)
        );
    }
    for b in &doc.bars {
        let (top, base) = (sy(b.height), sy(0.0));
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"{}\"/>",
            sx(b.x - b.width / 2.0),
            top.min(base),
            sw(b.width),
            (base - top).abs(),
            b.color
        );
    }
    for b in &doc.boxes {
        let (l, r, c) = (sx(b.x - b.width / 2.0), sx(b.x + b.width / 2.0), sx(b.x));
        let cap = sw(b.width) / 4.0;
        for (from, to) in [(b.q1, b.whisker_lo), (b.q3, b.whisker_hi)] {
            let _ = writeln!(s, "<line x1=\"{c:.1}\" y1=\"{:.1}\" x2=\"{c:.1}\" y2=\"{:.1}\" stroke=\"{}\"/>", sy(from), sy(to), b.color);
            let _ = writeln!(
                s,
                "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{}\"/>",
                c - cap,
                sy(to),
                c + cap,
                sy(to),
                b.color
            );
        }
        let (top, bottom) = (sy(b.q3).min(sy(b.q1)), sy(b.q3).max(sy(b.q1)));
        let _ = writeln!(
            s,
            "<rect x=\"{l:.1}\" y=\"{top:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"{}\"/>",
            r - l,
            bottom - top,
            b.color
        );
        let _ = writeln!(s, "<line x1=\"{l:.1}\" y1=\"{0:.1}\" x2=\"{r:.1}\" y2=\"{0:.1}\" stroke=\"{1}\" stroke-width=\"2\"/>", sy(b.median), b.color);
    }
    for m in &doc.markers {
        let (x, y) = (sx(m.x), sy(m.y));
        match m.class {
            MarkerClass::Circle => {
                let _ = writeln!(s, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"4\" fill=\"none\" stroke=\"{}\"/>", m.color);
            }
            MarkerClass::Cross => {
                let _ = writeln!(
                    s,
                    "<path d=\"M{:.1} {:.1}L{:.1} {:.1}M{:.1} {:.1}L{:.1} {:.1}\" stroke=\"{}\"/>",
                    x - 4.0, y - 4.0, x + 4.0, y + 4.0, x - 4.0, y + 4.0, x + 4.0, y - 4.0, m.color
                );
            }
        }
    }
    for l in &doc.lines {
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{}\"{}/>",
            sx(l.x0),
            sy(l.y0),
            sx(l.x1),
            sy(l.y1),
            l.color,
            dash(l.stroke)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
