//! Report artifacts: score-grid and ranking CSVs, per-machine score tables,
//! and directly emitted SVG charts (no plotting dependency).
//!
//! Chart geometry is fixed and documented in `docs/formats.md`; all numbers
//! are written in shortest round-trip form, so every emitter is
//! byte-deterministic.

use crate::cascade::{EvaluationReport, ModelCandidate};
use crate::selection::BoxplotStats;

fn fmt(value: f64) -> String {
    format!("{value}")
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(fmt).unwrap_or_default()
}

/// Score grid with models as columns and (dataset, metric) pairs as rows,
/// mirroring the layout of the published comparison tables.
pub fn score_grid_csv(candidates: &[ModelCandidate]) -> String {
    let mut out = String::from("dataset,metric");
    for c in candidates {
        out.push(',');
        out.push_str(&c.name);
    }
    out.push('\n');
    let rows: [(&str, &str, fn(&ModelCandidate) -> String); 6] = [
        ("train", "accuracy", |c| fmt(c.train_accuracy)),
        ("train", "s", |c| fmt_opt(c.train_s)),
        ("train", "c", |c| fmt_opt(c.train_c)),
        ("test", "accuracy", |c| fmt(c.test_accuracy)),
        ("test", "s", |c| fmt_opt(c.test_s)),
        ("test", "c", |c| fmt_opt(c.test_c)),
    ];
    for (dataset, metric, get) in rows {
        out.push_str(dataset);
        out.push(',');
        out.push_str(metric);
        for c in candidates {
            out.push(',');
            out.push_str(&get(c));
        }
        out.push('\n');
    }
    out
}

/// Ranked candidate list, best first.
pub fn ranking_csv(candidates: &[ModelCandidate], order: &[usize]) -> String {
    let mut out = String::from(
        "rank,model,kind,test_s,test_c,test_accuracy,train_s,train_c,train_accuracy\n",
    );
    for (rank, index) in order.iter().enumerate() {
        let c = &candidates[*index];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            rank + 1,
            c.name,
            c.kind,
            fmt_opt(c.test_s),
            fmt_opt(c.test_c),
            fmt(c.test_accuracy),
            fmt_opt(c.train_s),
            fmt_opt(c.train_c),
            fmt(c.train_accuracy),
        ));
    }
    out
}

/// Human-readable ranked table.
pub fn ranking_table(candidates: &[ModelCandidate], order: &[usize]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<4} {:<16} {:<8} {:>8} {:>8} {:>9}\n",
        "rank", "model", "kind", "test S", "test C", "test acc"
    ));
    for (rank, index) in order.iter().enumerate() {
        let c = &candidates[*index];
        let show = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<4} {:<16} {:<8} {:>8} {:>8} {:>9.4}\n",
            rank + 1,
            c.name,
            c.kind,
            show(c.test_s),
            show(c.test_c),
            c.test_accuracy,
        ));
    }
    out
}

/// Per-machine evaluation rows for one model.
pub fn per_machine_csv(model_name: &str, report: &EvaluationReport) -> String {
    let mut out = String::from(
        "model,machine_id,rows,faulty,accuracy,s,c,c1,c2,c3,normal_consistency\n",
    );
    for machine in &report.per_machine {
        let opai = machine.opai;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            model_name,
            machine.machine_id,
            machine.rows,
            machine.faulty,
            fmt(machine.accuracy),
            fmt_opt(opai.map(|o| o.s)),
            fmt_opt(opai.map(|o| o.c)),
            fmt_opt(opai.map(|o| o.c1)),
            fmt_opt(opai.map(|o| o.c2)),
            fmt_opt(opai.map(|o| o.c3)),
            fmt_opt(machine.normal_consistency),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// SVG emission. Fixed-size canvases; geometry constants documented in
// docs/formats.md.
// ---------------------------------------------------------------------------

const SVG_WIDTH: f64 = 900.0;
const SVG_HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 90.0;

const CLASS_COLORS: [&str; 3] = ["#4c78a8", "#f58518", "#e45756"];
const CLASS_NAMES: [&str; 3] = ["normal", "risky", "high-risk"];

fn svg_header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{cx}\" y=\"24\" text-anchor=\"middle\" ",
            "font-family=\"sans-serif\" font-size=\"16\">{title}</text>\n"
        ),
        w = SVG_WIDTH,
        h = SVG_HEIGHT,
        cx = SVG_WIDTH / 2.0,
        title = title,
    )
}

/// Boxplots of the given per-feature, per-class statistics. Each feature
/// occupies one group on the x axis, with one box per class; values are
/// min-max normalized per feature so features of different scales share the
/// canvas.
pub fn svg_boxplots(title: &str, stats: &[BoxplotStats]) -> String {
    let mut features: Vec<String> = stats.iter().map(|s| s.feature.clone()).collect();
    features.dedup();
    let mut classes: Vec<u8> = stats.iter().map(|s| s.class).collect();
    classes.sort_unstable();
    classes.dedup();

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let group_w = plot_w / features.len().max(1) as f64;
    let box_w = (group_w * 0.8) / classes.len().max(1) as f64;

    let mut out = svg_header(title);
    out.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        r = SVG_WIDTH - MARGIN_RIGHT,
        b = MARGIN_TOP + plot_h,
    ));

    for (fi, feature) in features.iter().enumerate() {
        let group: Vec<&BoxplotStats> =
            stats.iter().filter(|s| &s.feature == feature).collect();
        let lo = group
            .iter()
            .flat_map(|s| [s.min, s.whisker_low])
            .fold(f64::INFINITY, f64::min);
        let hi = group
            .iter()
            .flat_map(|s| [s.max, s.whisker_high])
            .fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let y_of = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v - lo) / span);

        for s in &group {
            let ci = classes.iter().position(|c| *c == s.class).unwrap();
            let x = MARGIN_LEFT
                + fi as f64 * group_w
                + group_w * 0.1
                + ci as f64 * box_w
                + box_w * 0.1;
            let w = box_w * 0.8;
            let cx = x + w / 2.0;
            let color = CLASS_COLORS[ci % CLASS_COLORS.len()];
            // Whiskers, box, median.
            out.push_str(&format!(
                "<line x1=\"{cx}\" y1=\"{}\" x2=\"{cx}\" y2=\"{}\" stroke=\"{color}\"/>\n",
                fmt(y_of(s.whisker_low)),
                fmt(y_of(s.q1)),
            ));
            out.push_str(&format!(
                "<line x1=\"{cx}\" y1=\"{}\" x2=\"{cx}\" y2=\"{}\" stroke=\"{color}\"/>\n",
                fmt(y_of(s.q3)),
                fmt(y_of(s.whisker_high)),
            ));
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\" fill-opacity=\"0.35\" stroke=\"{color}\"/>\n",
                fmt(x),
                fmt(y_of(s.q3)),
                fmt(w),
                fmt((y_of(s.q1) - y_of(s.q3)).max(0.5)),
            ));
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                fmt(x),
                fmt(y_of(s.median)),
                fmt(x + w),
                fmt(y_of(s.median)),
            ));
            for outlier in &s.outliers {
                out.push_str(&format!(
                    "<circle cx=\"{cx}\" cy=\"{}\" r=\"2\" fill=\"{color}\"/>\n",
                    fmt(y_of(*outlier)),
                ));
            }
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\" transform=\"rotate(-45 {} {})\">{}</text>\n",
            fmt(MARGIN_LEFT + (fi as f64 + 0.5) * group_w),
            fmt(MARGIN_TOP + plot_h + 14.0),
            fmt(MARGIN_LEFT + (fi as f64 + 0.5) * group_w),
            fmt(MARGIN_TOP + plot_h + 14.0),
            feature,
        ));
    }

    for (ci, class) in classes.iter().enumerate() {
        let x = MARGIN_LEFT + ci as f64 * 120.0;
        let label = CLASS_NAMES
            .get(*class as usize)
            .copied()
            .unwrap_or("unknown");
        out.push_str(&format!(
            "<rect x=\"{x}\" y=\"{y}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n<text x=\"{tx}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>\n",
            CLASS_COLORS[ci % CLASS_COLORS.len()],
            x = fmt(x),
            y = fmt(SVG_HEIGHT - 18.0),
            tx = fmt(x + 16.0),
            ty = fmt(SVG_HEIGHT - 8.0),
        ));
    }
    out.push_str("</svg>\n");
    out
}

const SERIES_COLORS: [&str; 3] = ["#4c78a8", "#f58518", "#54a24b"];

/// Grouped bar chart: one group per model, one bar per metric series.
/// The y axis spans `[min(0, smallest value), 1]`.
pub fn svg_grouped_bars(
    title: &str,
    groups: &[(String, Vec<f64>)],
    series_names: &[&str],
) -> String {
    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let lo = groups
        .iter()
        .flat_map(|(_, vs)| vs.iter().cloned())
        .fold(0.0f64, f64::min);
    let hi = 1.0f64;
    let span = hi - lo;
    let y_of = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v - lo) / span);

    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = (group_w * 0.8) / series_names.len().max(1) as f64;

    let mut out = svg_header(title);
    // Axis and reference gridlines at 0.25 steps.
    let mut grid = lo.max(0.0);
    while grid <= hi + 1e-9 {
        out.push_str(&format!(
            "<line x1=\"{l}\" y1=\"{y}\" x2=\"{r}\" y2=\"{y}\" stroke=\"#dddddd\"/>\n<text x=\"{tx}\" y=\"{ty}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{v}</text>\n",
            l = MARGIN_LEFT,
            r = SVG_WIDTH - MARGIN_RIGHT,
            y = fmt(y_of(grid)),
            tx = fmt(MARGIN_LEFT - 6.0),
            ty = fmt(y_of(grid) + 3.0),
            v = fmt(grid),
        ));
        grid += 0.25;
    }

    for (gi, (name, values)) in groups.iter().enumerate() {
        for (si, value) in values.iter().enumerate() {
            let x = MARGIN_LEFT + gi as f64 * group_w + group_w * 0.1 + si as f64 * bar_w;
            let zero = y_of(value.min(0.0).max(lo).max(0.0));
            let top = y_of(*value);
            let (y, h) = if *value >= 0.0 {
                (top, (zero - top).max(0.0))
            } else {
                (y_of(0.0), (y_of(*value) - y_of(0.0)).max(0.0))
            };
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                fmt(x),
                fmt(y),
                fmt(bar_w * 0.9),
                fmt(h),
                SERIES_COLORS[si % SERIES_COLORS.len()],
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\" transform=\"rotate(-45 {} {})\">{}</text>\n",
            fmt(MARGIN_LEFT + (gi as f64 + 0.5) * group_w),
            fmt(MARGIN_TOP + plot_h + 14.0),
            fmt(MARGIN_LEFT + (gi as f64 + 0.5) * group_w),
            fmt(MARGIN_TOP + plot_h + 14.0),
            name,
        ));
    }

    for (si, series) in series_names.iter().enumerate() {
        let x = MARGIN_LEFT + si as f64 * 120.0;
        out.push_str(&format!(
            "<rect x=\"{x}\" y=\"{y}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n<text x=\"{tx}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"12\">{series}</text>\n",
            SERIES_COLORS[si % SERIES_COLORS.len()],
            x = fmt(x),
            y = fmt(SVG_HEIGHT - 18.0),
            tx = fmt(x + 16.0),
            ty = fmt(SVG_HEIGHT - 8.0),
        ));
    }
    out.push_str("</svg>\n");
    out
}
