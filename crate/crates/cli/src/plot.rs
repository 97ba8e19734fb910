//! Plain SVG rendering of one window's indicator trajectory: four stacked
//! panels (return rate, ac1, cv, skewness) over the window's time axis.

use std::fmt::Write as _;

use ews_core::detector::{PrecursorVerdict, WindowInfo};
use ews_core::indicators::{Indicator, IndicatorSample};

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 130.0;
const GAP: f64 = 28.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn window_svg(info: &WindowInfo, traj: &[IndicatorSample], verdict: &PrecursorVerdict) -> String {
    let height = TOP + 4.0 * PANEL_H + 3.0 * GAP + 40.0;
    let plot_w = WIDTH - LEFT - RIGHT;
    let (t0, t1) = (info.start_t, info.end_t.max(info.start_t + 1e-9));
    let x = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT}" y="22" font-size="14">window {} [{:.1} s, {:.1} s): {}</text>"#,
        info.index,
        info.start_t,
        info.end_t,
        verdict.label
    );

    for (k, ind) in Indicator::ALL.into_iter().enumerate() {
        let top = TOP + k as f64 * (PANEL_H + GAP);
        let points: Vec<Option<(f64, f64)>> =
            traj.iter().map(|s| s.readings()[ind as usize].ok().map(|v| (s.t_mid, v))).collect();
        let (lo, hi) = value_range(points.iter().flatten().map(|p| p.1));
        let y = |v: f64| top + (hi - v) / (hi - lo) * PANEL_H;

        let tau = match verdict.trend.tau.get(ind) {
            Ok(t) => format!("tau {t:+.2}"),
            Err(r) => format!("tau null ({})", r.as_str()),
        };
        let _ = writeln!(
            svg,
            r##"<rect x="{LEFT}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#888"/>"##
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{} ({})</text>"#, LEFT + 4.0, top - 6.0, ind.name(), escape(&tau));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, LEFT - 4.0, top + 10.0, hi);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, LEFT - 4.0, top + PANEL_H, lo);

        // one polyline per run of non-null samples
        for run in points.split(Option::is_none).filter(|r| !r.is_empty()) {
            let coords: Vec<String> =
                run.iter().flatten().map(|&(t, v)| format!("{:.2},{:.2}", x(t), y(v))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                COLORS[k],
                coords.join(" ")
            );
        }
    }
    let axis_y = TOP + 4.0 * PANEL_H + 3.0 * GAP + 14.0;
    let _ = writeln!(svg, r#"<text x="{LEFT}" y="{axis_y}">{t0:.1} s</text>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{axis_y}" text-anchor="end">{t1:.1} s</text>"#, WIDTH - RIGHT);
    let _ = writeln!(svg, r#"<text x="{}" y="{axis_y}" text-anchor="middle">sub-window centre</text>"#, LEFT + plot_w / 2.0);
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use ews_core::detector::{classify_precursor, DetectorConfig};
    use ews_core::indicators::NullReason;

    #[test]
    fn null_samples_split_the_curve() {
        let s = |t: f64, v: Result<f64, NullReason>| IndicatorSample { t_mid: t, return_rate: v, ac1: v, cv: v, skewness: v };
        let traj = vec![s(5.0, Ok(0.1)), s(6.0, Ok(0.2)), s(7.0, Err(NullReason::SigmaZero)), s(8.0, Ok(0.3)), s(9.0, Ok(0.1))];
        let info = WindowInfo { index: 3, start_t: 0.0, end_t: 60.0, partial: false, records: 100 };
        let verdict = classify_precursor(&traj, &DetectorConfig::default(), 3);
        let svg = window_svg(&info, &traj, &verdict);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 8);
        assert!(svg.contains("window 3"));
    }
}
