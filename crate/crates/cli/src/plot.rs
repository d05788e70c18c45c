//! Plot-ready output from CSV tables: gnuplot data blocks and a static SVG
//! line chart.

use std::fmt::Write;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Table {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let columns = lines
            .next()
            .map(|h| h.split(',').map(|c| c.trim().to_string()).collect())
            .unwrap_or_default();
        let rows = lines
            .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
            .collect();
        Table { columns, rows }
    }

    pub fn read(path: &Path) -> Result<Table, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        Ok(Table::parse(&text))
    }

    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| {
            CliError::usage(format!(
                "column {name:?} not found (have: {})",
                self.columns.join(", ")
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// Value of the group column, empty for an ungrouped table.
    pub key: String,
    pub points: Vec<(f64, f64)>,
}

/// Splits the table into one `(x, y)` series per distinct group value, in
/// order of first appearance. Rows with an empty or non-numeric cell are
/// skipped.
pub fn series(
    table: &Table,
    x: &str,
    y: &str,
    group: Option<&str>,
) -> Result<Vec<Series>, CliError> {
    if table.columns.is_empty() {
        return Ok(Vec::new());
    }
    let xi = table.column(x)?;
    let yi = table.column(y)?;
    let gi = group.map(|g| table.column(g)).transpose()?;
    let mut out: Vec<Series> = Vec::new();
    for row in &table.rows {
        let cell = |i: usize| row.get(i).and_then(|s| s.parse::<f64>().ok());
        let (Some(xv), Some(yv)) = (cell(xi), cell(yi)) else {
            continue;
        };
        let key = gi.and_then(|i| row.get(i).cloned()).unwrap_or_default();
        match out.iter_mut().find(|s| s.key == key) {
            Some(s) => s.points.push((xv, yv)),
            None => out.push(Series {
                key,
                points: vec![(xv, yv)],
            }),
        }
    }
    for s in &mut out {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(out)
}

/// Data blocks separated by two blank lines, addressable with `index`.
pub fn gnuplot_blocks(series: &[Series], x: &str, y: &str, group: Option<&str>) -> String {
    let mut s = String::new();
    for (i, ser) in series.iter().enumerate() {
        if i > 0 {
            s.push_str("\n\n");
        }
        match group {
            Some(g) => writeln!(s, "# {g}={}", ser.key).unwrap(),
            None => writeln!(s, "# series").unwrap(),
        }
        writeln!(s, "# {x} {y}").unwrap();
        for (a, b) in &ser.points {
            writeln!(s, "{a} {b}").unwrap();
        }
    }
    s
}

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Static SVG line chart with one polyline per series and a legend.
pub fn svg_chart(series: &[Series], x: &str, y: &str, group: Option<&str>) -> String {
    let (w, h) = (720.0, 450.0);
    let (left, right, top, bottom) = (70.0, 150.0, 20.0, 50.0);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(a, b) in pts {
        x0 = x0.min(a);
        x1 = x1.max(a);
        y0 = y0.min(b);
        y1 = y1.max(b);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |v: f64| left + (v - x0) / (x1 - x0) * pw;
    let sy = |v: f64| top + ph - (v - y0) / (y1 - y0) * ph;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(fx),
            top + ph + 18.0,
            fmt_tick(fx)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(fy) + 4.0,
            fmt_tick(fy)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 10.0,
        xml_escape(x)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        xml_escape(y)
    )
    .unwrap();
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .map(|&(a, b)| format!("{:.2},{:.2}", sx(a), sy(b)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        )
        .unwrap();
        let label = match group {
            Some(g) => format!("{g}={}", ser.key),
            None => y.to_string(),
        };
        let ly = top + 16.0 * (i as f64 + 1.0);
        writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            w - right + 10.0,
            w - right + 30.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            w - right + 36.0,
            ly + 4.0,
            xml_escape(&label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    if r == 0.0 {
        "0".into()
    } else {
        r.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_and_missing_columns() {
        let t = Table::parse("mu,lambda,rho\n0.3,1,0.5\n0.4,1,0.4\n0.3,0.9,0.2\n0.4,0.9,\n");
        let s = series(&t, "lambda", "rho", Some("mu")).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].key, "0.3");
        assert_eq!(s[0].points, vec![(0.9, 0.2), (1.0, 0.5)]);
        assert_eq!(s[1].points.len(), 1);
        let e = series(&t, "lambda", "nope", None).unwrap_err();
        assert!(e.message.contains("nope"));
    }

    #[test]
    fn empty_table_gives_empty_outputs() {
        let t = Table::parse("");
        let s = series(&t, "x", "y", None).unwrap();
        assert!(s.is_empty());
        assert!(svg_chart(&s, "x", "y", None).contains("</svg>"));
        assert_eq!(gnuplot_blocks(&s, "x", "y", None), "");
    }

    #[test]
    fn blocks_are_separated() {
        let t = Table::parse("g,x,y\na,1,2\nb,1,3\n");
        let s = series(&t, "x", "y", Some("g")).unwrap();
        let g = gnuplot_blocks(&s, "x", "y", Some("g"));
        assert_eq!(g.matches("\n\n\n").count(), 1);
        assert_eq!(
            svg_chart(&s, "x", "y", Some("g"))
                .matches("<polyline")
                .count(),
            2
        );
    }
}
