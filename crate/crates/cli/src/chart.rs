//! Standalone SVG bar charts of effect sizes.

use std::fmt::Write as _;

use crate::report::Group;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 90.0;
const BAR_FILL: &str = "#4c72b0";

fn n(x: f64) -> String {
    // avoid "-0.000000" in the output
    let s = format!("{x:.6}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0.000000".to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One bar per group, whiskers for groups with a CI, a solid zero line and an
/// optional dashed reference line.
pub fn render_svg(title: &str, groups: &[Group], reference: Option<f64>) -> String {
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 0.0;
    for g in groups {
        let (a, b) = g.ci.map_or((g.effect, g.effect), |[a, b]| (a.min(g.effect), b.max(g.effect)));
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if let Some(r) = reference {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let span = (hi - lo).max(1e-3);
    lo -= 0.1 * span;
    hi += 0.1 * span;

    let plot_h = HEIGHT - TOP - BOTTOM;
    let plot_w = WIDTH - LEFT - RIGHT;
    let y = |v: f64| TOP + (hi - v) / (hi - lo) * plot_h;
    let slot = plot_w / groups.len().max(1) as f64;
    let bar_w = slot * 0.6;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">"#,
        WIDTH, HEIGHT, WIDTH, HEIGHT
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        n(WIDTH / 2.0),
        escape(title)
    );

    // axis and ticks
    let _ = writeln!(
        svg,
        r#"<line x1="{x}" y1="{top}" x2="{x}" y2="{bottom}" stroke="black"/>"#,
        x = n(LEFT),
        top = n(TOP),
        bottom = n(TOP + plot_h)
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{:+.3}</text>"#,
            n(LEFT - 6.0),
            n(y(v) + 4.0),
            v
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" font-size="12" transform="rotate(-90 16 {})" text-anchor="middle">Effect size (ΔP)</text>"#,
        n(TOP + plot_h / 2.0),
        n(TOP + plot_h / 2.0)
    );

    for (i, g) in groups.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let (top, bottom) = if g.effect >= 0.0 {
            (y(g.effect), y(0.0))
        } else {
            (y(0.0), y(g.effect))
        };
        let _ = writeln!(
            svg,
            r#"<rect class="bar" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            n(cx - bar_w / 2.0),
            n(top),
            n(bar_w),
            n(bottom - top),
            BAR_FILL
        );
        if let Some([a, b]) = g.ci {
            let cap = bar_w * 0.2;
            let _ = writeln!(
                svg,
                r#"<g class="whisker" stroke="black"><line x1="{x}" y1="{ya}" x2="{x}" y2="{yb}"/><line x1="{l}" y1="{ya}" x2="{r}" y2="{ya}"/><line x1="{l}" y1="{yb}" x2="{r}" y2="{yb}"/></g>"#,
                x = n(cx),
                ya = n(y(a)),
                yb = n(y(b)),
                l = n(cx - cap),
                r = n(cx + cap)
            );
        }
        let label_y = if g.effect >= 0.0 { top - 6.0 } else { bottom + 14.0 };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{:+.3}</text>"#,
            n(cx),
            n(label_y),
            g.effect
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
            n(cx),
            n(TOP + plot_h + 20.0),
            escape(&g.label)
        );
    }

    let _ = writeln!(
        svg,
        r#"<line class="zero" x1="{}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#,
        n(LEFT),
        n(LEFT + plot_w),
        y0 = n(y(0.0))
    );
    if let Some(r) = reference {
        let _ = writeln!(
            svg,
            r#"<line class="reference" x1="{}" y1="{yr}" x2="{}" y2="{yr}" stroke="crimson" stroke-dasharray="6,4"/>"#,
            n(LEFT),
            n(LEFT + plot_w),
            yr = n(y(r))
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="11" fill="crimson">causal effect {:+.3}</text>"#,
            n(LEFT + plot_w),
            n(y(r) - 4.0),
            r
        );
    }
    svg.push_str("</svg>\n");
    svg
}
