//! Static SVG plot of log residuals against iteration count.

use std::fmt::Write;

use drfeas::analysis::RESIDUAL_FLOOR;
use drfeas::splitting::IterationTrace;

const W: f64 = 720.0;
const H: f64 = 440.0;
const PAD_L: f64 = 70.0;
const PAD_R: f64 = 150.0;
const PAD_T: f64 = 30.0;
const PAD_B: f64 = 50.0;
pub const GUIDE_COLOR: &str = "magenta";

struct Series {
    name: &'static str,
    color: &'static str,
    points: Vec<(f64, f64)>,
}

fn series(trace: &IterationTrace) -> Vec<Series> {
    let floor = RESIDUAL_FLOOR.log10() - 1.0;
    let log = |v: f64| if v > 0.0 { v.log10().max(floor) } else { floor };
    let mut out = vec![Series {
        name: "|z_k - z_{k-1}|",
        color: "#1f77b4",
        points: trace.records.iter().map(|r| (r.k as f64, log(r.z_step))).collect(),
    }];
    if trace.has_reference() {
        out.push(Series {
            name: "|z_k - z*|",
            color: "#d62728",
            points: trace.records.iter().filter_map(|r| r.z_res.map(|v| (r.k as f64, log(v)))).collect(),
        });
        out.push(Series {
            name: "|x_k - x*|",
            color: "#2ca02c",
            points: trace.records.iter().filter_map(|r| r.x_res.map(|v| (r.k as f64, log(v)))).collect(),
        });
    }
    out
}

/// Plots the trace residuals. With a known rate, a dashed guide line of
/// slope `log10(theoretical)` is drawn across the fit window (or the whole
/// run without one).
pub fn residual_plot(trace: &IterationTrace, window: Option<(usize, usize)>, theoretical: Option<f64>) -> String {
    let all = series(trace);
    let pts = all.iter().flat_map(|s| s.points.iter());
    let (mut kmin, mut kmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(k, y) in pts {
        kmin = kmin.min(k);
        kmax = kmax.max(k);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if kmin > kmax {
        (kmin, kmax, ymin, ymax) = (0.0, 1.0, -1.0, 0.0);
    }
    if kmax == kmin {
        kmax = kmin + 1.0;
    }
    ymin = ymin.floor();
    ymax = ymax.ceil().max(ymin + 1.0);
    let px = |k: f64| PAD_L + (k - kmin) / (kmax - kmin) * (W - PAD_L - PAD_R);
    let py = |y: f64| PAD_T + (ymax - y) / (ymax - ymin) * (H - PAD_T - PAD_B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (px(kmin), px(kmax), py(ymin), py(ymax));
    let _ = writeln!(s, r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    let ystep = ((ymax - ymin) / 8.0).ceil().max(1.0);
    let mut y = ymin;
    while y <= ymax {
        let yy = py(y);
        let _ = writeln!(s, r##"<line x1="{x0:.1}" y1="{yy:.1}" x2="{x1:.1}" y2="{yy:.1}" stroke="#ddd"/>"##);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{y}</text>"#, x0 - 6.0, yy + 4.0);
        y += ystep;
    }
    for i in 0..=5 {
        let k = kmin + (kmax - kmin) * i as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, px(k), y0 + 18.0, k.round());
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">iteration k</text>"#, (x0 + x1) / 2.0, H - 10.0);

    for (i, ser) in all.iter().enumerate() {
        let path: Vec<String> = ser.points.iter().map(|&(k, y)| format!("{:.2},{:.2}", px(k), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            ser.color,
            path.join(" ")
        );
        let ly = PAD_T + 16.0 * i as f64 + 10.0;
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/>"#, x1 + 10.0, x1 + 30.0, ser.color);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x1 + 35.0, ly + 4.0, ser.name);
    }

    if let Some(rate) = theoretical.filter(|r| *r > 0.0) {
        let slope = rate.log10();
        let (ka, kb, anchor) = match window {
            Some((wa, wb)) => {
                let mid = all
                    .iter()
                    .find(|s| s.name == "|z_k - z*|")
                    .or(all.first())
                    .and_then(|ser| ser.points.iter().find(|p| p.0 >= wa as f64))
                    .map_or(ymax, |p| p.1);
                (wa as f64, wb as f64, mid)
            }
            None => (kmin, kmax, all[0].points.first().map_or(ymax, |p| p.1)),
        };
        // clip to the plot box
        let yb = (anchor + slope * (kb - ka)).max(ymin);
        let kb = if slope < 0.0 { ka + (yb - anchor) / slope } else { kb };
        let _ = writeln!(
            s,
            r#"<line class="guide" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{GUIDE_COLOR}" stroke-width="2" stroke-dasharray="8,5"/>"#,
            px(ka),
            py(anchor),
            px(kb),
            py(yb)
        );
        let ly = PAD_T + 16.0 * all.len() as f64 + 10.0;
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{GUIDE_COLOR}" stroke-width="2" stroke-dasharray="8,5"/>"#, x1 + 10.0, x1 + 30.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">rate {rate:.4}</text>"#, x1 + 35.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}
