//! Self-contained SVG line charts: training curves and trajectory overlays.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use idmf_nn::trainer::TrainRecord;

use crate::error::EvalError;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 540.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 180.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

/// One named line.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Series {
    pub fn from_ys(label: impl Into<String>, ys: &[f64], x_step: f64) -> Self {
        Self {
            label: label.into(),
            xs: (0..ys.len()).map(|i| i as f64 * x_step).collect(),
            ys: ys.to_vec(),
        }
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

/// Render named series as polylines with axes and a legend.
pub fn render_line_chart(
    series: &[Series],
    title: &str,
    x_label: &str,
    y_label: &str,
    path: impl AsRef<Path>,
) -> Result<(), EvalError> {
    if series.is_empty() || series.iter().any(|s| s.xs.is_empty()) {
        return Err(EvalError::Input("nothing to plot".into()));
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &x in &s.xs {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
        for &y in &s.ys {
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = move |y: f64| MARGIN_T + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        xml_escape(title)
    ));

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_T + plot_h
    ));
    for i in 0..=5 {
        let fx = x_min + (x_max - x_min) * i as f64 / 5.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 5.0;
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
            sx(fx),
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            sx(fx),
            MARGIN_T + plot_h + 20.0,
            fmt_tick(fx)
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{0:.0}\" x2=\"{MARGIN_L}\" y2=\"{1}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0,
            sy(fy)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 9.0,
            sy(fy) + 4.0,
            fmt_tick(fy)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        xml_escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {0})\">{1}</text>\n",
        MARGIN_T + plot_h / 2.0,
        xml_escape(y_label)
    ));

    // One polyline per series plus a legend entry.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .xs
            .iter()
            .zip(&s.ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        let ly = MARGIN_T + 16.0 + i as f64 * 22.0;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            WIDTH - MARGIN_R + 12.0,
            WIDTH - MARGIN_R + 40.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            WIDTH - MARGIN_R + 46.0,
            ly + 4.0,
            xml_escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(svg.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Training and validation loss per epoch.
pub fn render_loss_curves(record: &TrainRecord, path: impl AsRef<Path>) -> Result<(), EvalError> {
    let series = vec![
        Series::from_ys("training loss", &record.train_loss, 1.0),
        Series::from_ys("validation loss", &record.val_loss, 1.0),
    ];
    render_line_chart(&series, "Training curve", "epoch", "loss (m)", path)
}

/// Position-over-time overlay of observed and predicted trajectories.
pub fn render_trajectory_overlay(
    series: &[(String, Vec<f64>)],
    dt: f64,
    path: impl AsRef<Path>,
) -> Result<(), EvalError> {
    let series: Vec<Series> = series
        .iter()
        .map(|(label, ys)| Series::from_ys(label.clone(), ys, dt))
        .collect();
    render_line_chart(&series, "Trajectory comparison", "time (s)", "position (m)", path)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_renders_one_polyline_per_series_and_a_legend() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("overlay.svg");
        let series: Vec<(String, Vec<f64>)> = [
            "leader (truth)",
            "follower (truth)",
            "learning-based",
            "model-based IDM",
            "hybrid",
        ]
        .iter()
        .enumerate()
        .map(|(i, label)| {
            (
                label.to_string(),
                (0..80).map(|k| i as f64 * 3.0 + k as f64 * 0.8).collect(),
            )
        })
        .collect();
        render_trajectory_overlay(&series, 0.1, &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert!(svg.starts_with("<?xml version=\"1.0\""));
        assert_eq!(svg.matches("<polyline").count(), 5);
        for (label, _) in &series {
            assert!(svg.contains(label), "legend misses {label}");
        }
        assert!(svg.trim_end().ends_with("</svg>"));
        // Tags balance, as a cheap well-formedness check.
        assert_eq!(svg.matches("<svg").count(), svg.matches("</svg>").count());
        assert_eq!(svg.matches("<text").count(), svg.matches("</text>").count());
    }

    #[test]
    fn loss_curves_render() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("loss.svg");
        let record = TrainRecord {
            train_loss: vec![5.0, 3.0, 2.2, 1.9],
            val_loss: vec![5.5, 3.4, 2.8, 2.7],
            wall_time_s: vec![0.1; 4],
            best_epoch: 3,
        };
        render_loss_curves(&record, &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn empty_series_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(render_trajectory_overlay(&[], 0.1, dir.path().join("x.svg")).is_err());
    }
}
