//! Log-log plot of an estimate table as a standalone SVG.

use std::fmt::Write;

use crate::estimate::EstimateTable;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 60.0;

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, eps: f64) -> f64 {
        PAD + (eps.log10() - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }

    fn py(&self, p: f64) -> f64 {
        H - PAD - (p.log10() - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let (lo, hi) = (lo.log10(), hi.log10());
    let pad = ((hi - lo) * 0.1).max(0.1);
    ((lo - pad).floor(), (hi + pad).ceil())
}

/// Scatter of `p_hat` with Wilson bars, the fitted line and, if given, a
/// reference line of slope `predicted_theta` through the fit's middle point.
pub fn fit_plot(table: &EstimateTable, predicted_theta: Option<f64>, title: &str) -> String {
    let rows: Vec<_> = table.rows.iter().filter(|r| r.p_hat > 0.0).collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    if rows.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">no positive estimates</text>"#, W / 2.0, H / 2.0);
        s.push_str("</svg>\n");
        return s;
    }
    let (emin, emax) = rows.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.eps), b.max(r.eps)));
    let (pmin, pmax) = rows
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.ci_low.max(r.p_hat * 0.1)), b.max(r.ci_high)));
    let ax = Axes {
        x: padded(emin, emax),
        y: padded(pmin, pmax),
    };
    let (x0, x1, y0, y1) = (PAD, W - PAD, PAD, H - PAD);
    let _ = writeln!(s, r#"<path d="M{x0} {y0}V{y1}H{x1}" fill="none" stroke="black"/>"#);
    for d in ax.x.0 as i32..=ax.x.1 as i32 {
        let x = ax.px(10f64.powi(d));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#,
            y1 + 5.0,
            y1 + 20.0
        );
    }
    for d in ax.y.0 as i32..=ax.y.1 as i32 {
        let y = ax.py(10f64.powi(d));
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">eps</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">escape probability</text>"#,
        H / 2.0,
        H / 2.0
    );
    for r in &rows {
        let (x, y) = (ax.px(r.eps), ax.py(r.p_hat));
        let lo = ax.py(r.ci_low.max(10f64.powf(ax.y.0)));
        let hi = ax.py(r.ci_high);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="steelblue"/>"#);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="steelblue"/>"#);
    }
    let clip = |e: f64, p: f64| (ax.px(e), ax.py(p.clamp(10f64.powf(ax.y.0), 10f64.powf(ax.y.1))));
    let mut legend_y = PAD + 10.0;
    let mut line = |s: &mut String, f: &dyn Fn(f64) -> f64, colour: &str, dash: &str, label: String| {
        let (ax0, ay0) = clip(emin, f(emin));
        let (ax1, ay1) = clip(emax, f(emax));
        let _ = writeln!(
            s,
            r#"<line x1="{ax0:.2}" y1="{ay0:.2}" x2="{ax1:.2}" y2="{ay1:.2}" stroke="{colour}" stroke-dasharray="{dash}"/>"#
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{colour}" stroke-dasharray="{dash}"/><text x="{}" y="{}">{}</text>"#,
            x0 + 10.0,
            x0 + 40.0,
            x0 + 45.0,
            legend_y + 4.0,
            escape(&label)
        );
        legend_y += 18.0;
    };
    if let Some(fit) = &table.fit {
        line(&mut s, &|e| fit.predict(e), "firebrick", "none", format!("fit: theta = {:.4}", fit.theta_hat));
        if let Some(theta) = predicted_theta {
            let mid = (emin * emax).sqrt();
            let anchor = fit.predict(mid);
            line(&mut s, &|e| anchor * (e / mid).powf(theta), "gray", "6 4", format!("predicted: theta = {theta:.4}"));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
