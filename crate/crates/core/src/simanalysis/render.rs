use std::fmt::Write as _;

use super::SimilaritySummary;

/// One row per labelled summary: `model, intra, inter, gap` plus pair counts.
pub fn summary_tsv(rows: &[(&str, &SimilaritySummary)]) -> String {
    let mut out = String::from("model\tintra\tinter\tgap\tintra_count\tinter_count\n");
    for (label, s) in rows {
        writeln!(
            out,
            "{label}\t{}\t{}\t{}\t{}\t{}",
            s.intra_mean, s.inter_mean, s.gap, s.intra_count, s.inter_count
        )
        .unwrap();
    }
    out
}

pub fn histogram_tsv(s: &SimilaritySummary) -> String {
    let h = &s.intra_histogram;
    let mut out = String::from("bin_left\tbin_right\tintra_count\tinter_count\n");
    for i in 0..h.bin_count() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            h.edge(i),
            h.edge(i + 1),
            h.counts[i],
            s.inter_histogram.counts[i]
        )
        .unwrap();
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn fractions(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect()
}

/// Two normalized frequency curves (intra and inter) on shared axes.
pub fn overlay_svg(s: &SimilaritySummary, title: &str) -> String {
    let h = &s.intra_histogram;
    let n = h.bin_count();
    let intra = fractions(&h.counts);
    let inter = fractions(&s.inter_histogram.counts);
    let y_max = intra.iter().chain(&inter).cloned().fold(0.0f64, f64::max).max(1e-12);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - h.low) / (h.high - h.low) * plot_w;
    let py = |y: f64| HEIGHT - MARGIN - y / y_max * plot_h;

    let polyline = |vals: &[f64], color: &str| {
        let pts: Vec<String> = (0..n)
            .map(|i| {
                let mid = 0.5 * (h.edge(i) + h.edge(i + 1));
                format!("{:.2},{:.2}", px(mid), py(vals[i]))
            })
            .collect();
        format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        )
    };

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    )
    .unwrap();
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    writeln!(
        out,
        "<text x=\"{}\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    writeln!(out, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>").unwrap();
    writeln!(out, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>").unwrap();
    for tick in 0..=4 {
        let x = h.low + (h.high - h.low) * tick as f64 / 4.0;
        writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{x:.1}</text>",
            px(x),
            y0 + 16.0
        )
        .unwrap();
    }
    writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">cosine similarity</text>",
        WIDTH / 2.0,
        HEIGHT - 12.0
    )
    .unwrap();
    out.push_str(&polyline(&intra, "#1f77b4"));
    out.push_str(&polyline(&inter, "#d62728"));
    let legend = [("#1f77b4", "intra-country"), ("#d62728", "inter-country")];
    for (k, (color, label)) in legend.iter().enumerate() {
        let y = MARGIN + 10.0 + 18.0 * k as f64;
        writeln!(
            out,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            x1 - 130.0,
            x1 - 105.0
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>",
            x1 - 100.0,
            y + 4.0
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
