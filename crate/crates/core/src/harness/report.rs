use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::aggregate::{PercentMatrix, Ranking, Setting, SummaryRow};
use crate::harness::sweep::MetricsTable;
use crate::num::fmt9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!("unknown report format {s:?}"))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Svg => "svg",
            ReportFormat::Json => "json",
        }
    }
}

/// Anything [`emit_report`] can write.
#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    Matrix(&'a PercentMatrix),
    Summary(&'a [SummaryRow]),
    Ranking(&'a Ranking),
    Table(&'a MetricsTable),
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt9(v: Option<f64>) -> String {
    v.map(fmt9).unwrap_or_default()
}

fn json_num(v: Option<f64>) -> String {
    v.map_or("null".to_string(), fmt9)
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).unwrap()
}

/// `method,<shift:N>...`, one row per method, empty for undefined cells.
pub fn matrix_to_csv(m: &PercentMatrix) -> String {
    let mut out = String::from("method");
    for s in &m.settings {
        write!(out, ",{}", csv_field(&s.label())).unwrap();
    }
    out.push('\n');
    for (method, row) in m.methods.iter().zip(&m.values) {
        out.push_str(&csv_field(method));
        for &v in row {
            write!(out, ",{}", opt9(v)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`matrix_to_csv`]; the baseline name is not stored in CSV and is taken from the caller.
pub fn matrix_from_csv(text: &str, baseline: &str) -> Result<PercentMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let bad = |e: csv::Error| Error::Parse(format!("matrix csv: {e}"));
    let header = r.headers().map_err(bad)?.clone();
    if header.get(0) != Some("method") {
        return Err(Error::Format("matrix csv must start with a 'method' column".into()));
    }
    let settings = header
        .iter()
        .skip(1)
        .map(Setting::parse_label)
        .collect::<Result<Vec<_>>>()?;
    let mut methods = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(bad)?;
        methods.push(rec[0].to_string());
        let row = rec
            .iter()
            .skip(1)
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>()
                        .map(Some)
                        .map_err(|_| Error::Parse(format!("matrix csv value {f:?}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    Ok(PercentMatrix {
        baseline: baseline.to_string(),
        methods,
        settings,
        values,
    })
}

pub fn matrix_to_json(m: &PercentMatrix) -> String {
    let settings: Vec<String> = m
        .settings
        .iter()
        .map(|s| format!("{{\"shift\":{},\"n\":{}}}", json_str(&s.shift), s.n))
        .collect();
    let methods: Vec<String> = m.methods.iter().map(|s| json_str(s)).collect();
    let rows: Vec<String> = m
        .values
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|&v| json_num(v)).collect::<Vec<_>>().join(",")))
        .collect();
    format!(
        "{{\"baseline\":{},\"methods\":[{}],\"settings\":[{}],\"percent_change\":[{}]}}\n",
        json_str(&m.baseline),
        methods.join(","),
        settings.join(","),
        rows.join(",")
    )
}

const POSITIVE: (f64, f64, f64) = (33.0, 102.0, 172.0);
const NEGATIVE: (f64, f64, f64) = (178.0, 24.0, 43.0);
pub const UNDEFINED_FILL: &str = "#bdbdbd";

/// Diverging fill: white at 0, blue toward `+scale`, red toward `-scale`.
pub fn heat_color(v: f64, scale: f64) -> String {
    let t = if scale > 0.0 { (v / scale).clamp(-1.0, 1.0) } else { 0.0 };
    let end = if t >= 0.0 { POSITIVE } else { NEGATIVE };
    let a = t.abs();
    let mix = |c: f64| (255.0 + (c - 255.0) * a).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(end.0), mix(end.1), mix(end.2))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Heatmap with a symmetric color scale set by the largest absolute defined cell.
pub fn matrix_to_svg(m: &PercentMatrix) -> String {
    const CELL_W: usize = 72;
    const CELL_H: usize = 28;
    const LEFT: usize = 160;
    const TOP: usize = 40;
    let scale = m.values.iter().flatten().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let width = LEFT + CELL_W * m.settings.len();
    let height = TOP + CELL_H * m.methods.len();
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    writeln!(s, "<title>Percent change over {}</title>", xml_escape(&m.baseline)).unwrap();
    for (j, setting) in m.settings.iter().enumerate() {
        let x = LEFT + j * CELL_W + CELL_W / 2;
        writeln!(
            s,
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            TOP - 12,
            xml_escape(&setting.label())
        )
        .unwrap();
    }
    for (i, (method, row)) in m.methods.iter().zip(&m.values).enumerate() {
        let y = TOP + i * CELL_H;
        writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            LEFT - 8,
            y + CELL_H / 2 + 4,
            xml_escape(method)
        )
        .unwrap();
        for (j, &v) in row.iter().enumerate() {
            let x = LEFT + j * CELL_W;
            let (fill, label) = match v {
                Some(v) => (heat_color(v, scale), format!("{v:.1}")),
                None => (UNDEFINED_FILL.to_string(), "n/a".to_string()),
            };
            writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" fill=\"{fill}\" stroke=\"#ffffff\"/>"
            )
            .unwrap();
            writeln!(
                s,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{label}</text>",
                x + CELL_W / 2,
                y + CELL_H / 2 + 4
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("method,shift,n,mean_test_top1,std_test_top1,seeds\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.method),
            csv_field(&r.setting.shift),
            r.setting.n,
            fmt9(r.mean),
            fmt9(r.std),
            r.seeds
        )
        .unwrap();
    }
    out
}

fn summary_to_json(rows: &[SummaryRow]) -> String {
    let items: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{{\"method\":{},\"shift\":{},\"n\":{},\"mean\":{},\"std\":{},\"seeds\":{}}}",
                json_str(&r.method),
                json_str(&r.setting.shift),
                r.setting.n,
                fmt9(r.mean),
                fmt9(r.std),
                r.seeds
            )
        })
        .collect();
    format!("[{}]\n", items.join(","))
}

/// Median ranks first, then one row per (setting, seed).
pub fn ranking_to_csv(r: &Ranking) -> String {
    let mut out = String::from("shift,n,seed");
    for m in &r.methods {
        write!(out, ",{}", csv_field(m)).unwrap();
    }
    out.push('\n');
    out.push_str("median,,");
    for &v in &r.median {
        write!(out, ",{}", fmt9(v)).unwrap();
    }
    out.push('\n');
    for v in &r.vectors {
        write!(out, "{},{},{}", csv_field(&v.setting.shift), v.setting.n, v.seed).unwrap();
        for &x in &v.ranks {
            write!(out, ",{}", fmt9(x)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn ranking_to_json(r: &Ranking) -> String {
    let nums = |v: &[f64]| v.iter().map(|&x| fmt9(x)).collect::<Vec<_>>().join(",");
    let vectors: Vec<String> = r
        .vectors
        .iter()
        .map(|v| {
            format!(
                "{{\"shift\":{},\"n\":{},\"seed\":{},\"ranks\":[{}]}}",
                json_str(&v.setting.shift),
                v.setting.n,
                v.seed,
                nums(&v.ranks)
            )
        })
        .collect();
    format!(
        "{{\"methods\":[{}],\"median_rank\":[{}],\"per_pair\":[{}]}}\n",
        r.methods.iter().map(|m| json_str(m)).collect::<Vec<_>>().join(","),
        nums(&r.median),
        vectors.join(",")
    )
}

pub fn table_to_csv(t: &MetricsTable) -> String {
    let mut out = String::from("method,shift,n,seed,hyper,val_top1,test_top1,model_digest\n");
    for r in t.rows() {
        let hyper: Vec<String> = r.hyper.iter().map(|(k, v)| format!("{k}={}", fmt9(*v))).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.method),
            csv_field(&r.shift),
            r.n,
            r.seed,
            csv_field(&hyper.join(";")),
            fmt9(r.val_top1),
            fmt9(r.test_top1),
            r.model_digest
        )
        .unwrap();
    }
    out
}

/// Renders a report to text. Only matrices have an SVG form.
pub fn render_report(report: Report<'_>, format: ReportFormat) -> Result<String> {
    Ok(match (report, format) {
        (Report::Matrix(m), ReportFormat::Csv) => matrix_to_csv(m),
        (Report::Matrix(m), ReportFormat::Json) => matrix_to_json(m),
        (Report::Matrix(m), ReportFormat::Svg) => matrix_to_svg(m),
        (Report::Summary(s), ReportFormat::Csv) => summary_to_csv(s),
        (Report::Summary(s), ReportFormat::Json) => summary_to_json(s),
        (Report::Ranking(r), ReportFormat::Csv) => ranking_to_csv(r),
        (Report::Ranking(r), ReportFormat::Json) => ranking_to_json(r),
        (Report::Table(t), ReportFormat::Csv) => table_to_csv(t),
        (Report::Table(t), ReportFormat::Json) => t.to_jsonl(),
        (_, ReportFormat::Svg) => {
            return Err(Error::Config(
                "svg output is only available for percent-change matrices".into(),
            ))
        }
    })
}

pub fn emit_report(report: Report<'_>, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_report(report, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(values: Vec<Vec<Option<f64>>>) -> PercentMatrix {
        PercentMatrix {
            baseline: "base".into(),
            methods: (0..values.len()).map(|i| format!("m{i}")).collect(),
            settings: (0..values[0].len()).map(|j| Setting::new("sc", j)).collect(),
            values,
        }
    }

    fn fills(svg: &str) -> Vec<&str> {
        svg.split("fill=\"").skip(1).map(|s| &s[..7]).collect()
    }

    #[test]
    fn zero_matrix_is_white() {
        let svg = matrix_to_svg(&matrix(vec![vec![Some(0.0); 3]; 2]));
        assert!(fills(&svg).iter().all(|&f| f == "#ffffff"));
        assert!(svg.contains(">0.0<"));
    }

    #[test]
    fn extremes_saturate() {
        let svg = matrix_to_svg(&matrix(vec![vec![Some(20.0), Some(-20.0), Some(10.0), None]]));
        assert_eq!(fills(&svg), vec!["#2166ac", "#b2182b", "#90b3d6", UNDEFINED_FILL]);
        assert!(svg.contains(">20.0<") && svg.contains(">-20.0<") && svg.contains(">n/a<"));
    }

    #[test]
    fn csv_round_trips_at_nine_digits() {
        let m = matrix(vec![
            vec![Some(0.0), Some(12.345678912345), None],
            vec![Some(-1e-7), Some(3.0), Some(-99.99999999)],
        ]);
        let back = matrix_from_csv(&matrix_to_csv(&m), "base").unwrap();
        assert_eq!(back.methods, m.methods);
        assert_eq!(back.settings, m.settings);
        for (a, b) in back.values.iter().flatten().zip(m.values.iter().flatten()) {
            assert_eq!(a.map(fmt9), b.map(fmt9));
        }
        assert_eq!(matrix_to_csv(&back), matrix_to_csv(&m));
    }

    #[test]
    fn svg_only_for_matrices() {
        let t = MetricsTable::default();
        assert!(render_report(Report::Table(&t), ReportFormat::Svg).is_err());
        assert_eq!(ReportFormat::parse("svg").unwrap(), ReportFormat::Svg);
    }
}
