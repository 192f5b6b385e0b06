//! A small hand-rolled SVG line plot of the sweep.

use std::fmt::Write;

use crate::sweep::SweepRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let unit = raw / mag;
    mag * if unit <= 1.0 {
        1.0
    } else if unit <= 2.0 {
        2.0
    } else if unit <= 5.0 {
        5.0
    } else {
        10.0
    }
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let v_min = rows.first().map_or(0.0, |r| r.v).min(0.0);
    let v_max = rows.last().map_or(1.0, |r| r.v).max(v_min + 1e-9);
    let b_max = rows
        .iter()
        .map(|r| r.b_opt_f.max(r.b_opt_b))
        .fold(0.0, f64::max)
        .max(1e-3);
    let y_step = nice_step(b_max);
    let y_top = (b_max / y_step).ceil() * y_step;
    let x_step = nice_step(v_max - v_min);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |v: f64| LEFT + (v - v_min) / (v_max - v_min) * pw;
    let y = |b: f64| TOP + ph - b / y_top * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        l = LEFT,
        t = TOP,
        b = TOP + ph,
        r = LEFT + pw
    );
    let mut k = 0;
    loop {
        let v = (v_min / x_step).ceil() * x_step + k as f64 * x_step;
        if v > v_max + 1e-9 {
            break;
        }
        let px = x(v);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{y1:.2}" stroke="black"/><text x="{px:.2}" y="{ty:.2}" text-anchor="middle">{v}</text>"#,
            y0 = TOP + ph,
            y1 = TOP + ph + 5.0,
            ty = TOP + ph + 20.0
        );
        k += 1;
    }
    let mut k = 0;
    while k as f64 * y_step <= y_top + 1e-12 {
        let b = k as f64 * y_step;
        let py = y(b);
        let _ = writeln!(
            s,
            r#"<line x1="{x0:.2}" y1="{py:.2}" x2="{x1:.2}" y2="{py:.2}" stroke="black"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{b:.prec$}</text>"#,
            x0 = LEFT - 5.0,
            x1 = LEFT,
            tx = LEFT - 8.0,
            ty = py + 4.0,
            prec = decimals(y_step)
        );
        k += 1;
    }
    let _ = writeln!(
        s,
        r#"<text x="{cx:.2}" y="{ly:.2}" text-anchor="middle">V (m/s)</text>"#,
        cx = LEFT + pw / 2.0,
        ly = HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">b_opt</text>"#,
        cy = TOP + ph / 2.0
    );
    for (name, colour, dash, get) in [
        (
            "b_opt,f",
            "#1f77b4",
            "",
            (|r: &SweepRow| r.b_opt_f) as fn(&SweepRow) -> f64,
        ),
        (
            "b_opt,b",
            "#d62728",
            r#" stroke-dasharray="6 4""#,
            |r: &SweepRow| r.b_opt_b,
        ),
    ] {
        let points: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", x(r.v), y(get(r))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"{dash}><title>{name}</title></polyline>"#,
            points.join(" ")
        );
    }
    let lx = LEFT + pw - 120.0;
    let _ = writeln!(
        s,
        r##"<line x1="{lx}" y1="{a}" x2="{lx2}" y2="{a}" stroke="#1f77b4" stroke-width="2"/><text x="{tx}" y="{at}">b_opt,f</text>"##,
        a = TOP + 15.0,
        lx2 = lx + 30.0,
        tx = lx + 36.0,
        at = TOP + 19.0
    );
    let _ = writeln!(
        s,
        r##"<line x1="{lx}" y1="{a}" x2="{lx2}" y2="{a}" stroke="#d62728" stroke-width="2" stroke-dasharray="6 4"/><text x="{tx}" y="{at}">b_opt,b</text>"##,
        a = TOP + 35.0,
        lx2 = lx + 30.0,
        tx = lx + 36.0,
        at = TOP + 39.0
    );
    s.push_str("</svg>\n");
    s
}

fn decimals(step: f64) -> usize {
    (-step.log10().floor()).max(0.0) as usize
}
