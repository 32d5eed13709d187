//! Learning-curve SVGs from metrics CSVs.
//!
//! Files group by the variant encoded in their names
//! (`metrics_<variant>_seed<N>.csv`); per metric column one SVG is
//! written with a mean line and a mean +- stddev band per variant,
//! aggregated across that variant's seed files at matching steps. Output
//! is a pure function of the input bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 52.0;
const MAX_POINTS: usize = 1500;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// One parsed CSV: column names after `step`, and rows of
/// `[step, columns...]`.
struct SeriesFile {
    variant: String,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

/// The variant a metrics file belongs to, from its name:
/// `metrics_<variant>_seed<N>` and `eval_<variant>_seed<N>` map to
/// `<variant>`; anything else is its own group.
pub fn variant_of_stem(stem: &str) -> String {
    let s = stem
        .strip_prefix("metrics_")
        .or_else(|| stem.strip_prefix("eval_"))
        .unwrap_or(stem);
    match s.rfind("_seed") {
        Some(p)
            if s.len() > p + 5 && s[p + 5..].chars().all(|c| c.is_ascii_digit()) =>
        {
            s[..p].to_string()
        }
        _ => s.to_string(),
    }
}

fn parse_file(path: &Path) -> Result<SeriesFile> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Csv {
        file: file.clone(),
        line: 1,
        msg: "missing header".to_string(),
    })?;
    let names: Vec<&str> = header.split(',').collect();
    if names.first() != Some(&"step") || names.len() < 2 {
        return Err(Error::Csv {
            file,
            line: 1,
            msg: format!("header must be step,<metrics...>, got {header:?}"),
        });
    }
    let columns: Vec<String> = names[1..].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(Error::Csv {
                file,
                line: lineno,
                msg: format!("expected {} fields, got {}", names.len(), fields.len()),
            });
        }
        let mut row = Vec::with_capacity(fields.len());
        for (name, field) in names.iter().zip(&fields) {
            let v: f64 = field.parse().map_err(|_| Error::Csv {
                file: file.clone(),
                line: lineno,
                msg: format!("{name} value {field:?} is not a number"),
            })?;
            row.push(v);
        }
        if !row[0].is_finite() {
            return Err(Error::Csv {
                file,
                line: lineno,
                msg: format!("step {:?} is not finite", fields[0]),
            });
        }
        rows.push(row);
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(SeriesFile {
        variant: variant_of_stem(&stem),
        columns,
        rows,
    })
}

/// Mean and population stddev per step for one variant and column.
fn aggregate(files: &[&SeriesFile], column: &str) -> Vec<(f64, f64, f64)> {
    let mut by_step: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for f in files {
        let Some(ci) = f.columns.iter().position(|c| c == column) else {
            continue;
        };
        for row in &f.rows {
            let v = row[ci + 1];
            if v.is_finite() {
                by_step.entry(row[0].to_bits()).or_default().push(v);
            }
        }
    }
    by_step
        .into_iter()
        .map(|(step, vs)| {
            let n = vs.len() as f64;
            let mean = vs.iter().sum::<f64>() / n;
            let var = vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (f64::from_bits(step), mean, var.sqrt())
        })
        .collect()
}

/// Thin a series to at most `MAX_POINTS` points, keeping the endpoints.
fn downsample<T: Copy>(points: &[T]) -> Vec<T> {
    if points.len() <= MAX_POINTS {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(MAX_POINTS);
    let mut out: Vec<T> = points.iter().copied().step_by(stride).collect();
    if (points.len() - 1) % stride != 0 {
        out.push(points[points.len() - 1]);
    }
    out
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

/// Short deterministic tick label.
fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a >= 1e6 || a < 1e-3 {
        return format!("{v:.1e}");
    }
    if (v.round() - v).abs() < 1e-9 && a < 1e6 {
        return format!("{}", v.round() as i64);
    }
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Scale {
        let (lo, hi) = if lo == hi { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
        Scale { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4).map(|i| self.lo + (self.hi - self.lo) * f64::from(i) / 4.0).collect()
    }
}

fn render_svg(metric: &str, series: &[(String, Vec<(f64, f64, f64)>)]) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (_, pts) in series {
        for &(x, mean, sd) in pts {
            xs.push(x);
            ys.push(mean - sd);
            ys.push(mean + sd);
        }
    }
    let (xmin, xmax) = match (xs.iter().cloned().reduce(f64::min), xs.iter().cloned().reduce(f64::max)) {
        (Some(a), Some(b)) => (a, b),
        _ => (0.0, 1.0),
    };
    let (ymin, ymax) = match (ys.iter().cloned().reduce(f64::min), ys.iter().cloned().reduce(f64::max)) {
        (Some(a), Some(b)) => (a, b),
        _ => (0.0, 1.0),
    };
    let sx = Scale::new(xmin, xmax, MARGIN_L, WIDTH - MARGIN_R);
    let sy = Scale::new(ymin, ymax, HEIGHT - MARGIN_B, MARGIN_T);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{metric}</text>\n",
        fmt_coord(WIDTH / 2.0)
    ));

    for t in sy.ticks() {
        let y = fmt_coord(sy.map(t));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#dddddd\"/>\n",
            fmt_coord(MARGIN_L),
            fmt_coord(WIDTH - MARGIN_R)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>\n",
            fmt_coord(MARGIN_L - 6.0),
            fmt_tick(t)
        ));
    }
    for t in sx.ticks() {
        let x = fmt_coord(sx.map(t));
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt_coord(MARGIN_T),
            fmt_coord(HEIGHT - MARGIN_B)
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fmt_coord(HEIGHT - MARGIN_B + 16.0),
            fmt_tick(t)
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"#000000\"/>\n<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"#000000\"/>\n",
        l = fmt_coord(MARGIN_L),
        r = fmt_coord(WIDTH - MARGIN_R),
        t = fmt_coord(MARGIN_T),
        b = fmt_coord(HEIGHT - MARGIN_B)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">step</text>\n",
        fmt_coord((MARGIN_L + WIDTH - MARGIN_R) / 2.0),
        fmt_coord(HEIGHT - 12.0)
    ));

    for (i, (variant, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let mut band = String::new();
            for &(x, mean, sd) in pts.iter() {
                band.push_str(&format!("{},{} ", fmt_coord(sx.map(x)), fmt_coord(sy.map(mean + sd))));
            }
            for &(x, mean, sd) in pts.iter().rev() {
                band.push_str(&format!("{},{} ", fmt_coord(sx.map(x)), fmt_coord(sy.map(mean - sd))));
            }
            svg.push_str(&format!(
                "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n",
                band.trim_end()
            ));
            let line: Vec<String> = pts
                .iter()
                .map(|&(x, mean, _)| format!("{},{}", fmt_coord(sx.map(x)), fmt_coord(sy.map(mean))))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
                line.join(" ")
            ));
        }
        let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            x0 = fmt_coord(WIDTH - MARGIN_R - 150.0),
            x1 = fmt_coord(WIDTH - MARGIN_R - 126.0),
            y = fmt_coord(ly)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" dominant-baseline=\"middle\">{variant}</text>\n",
            fmt_coord(WIDTH - MARGIN_R - 120.0),
            fmt_coord(ly)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Render one SVG per metric column found in `files`, into `out_dir`.
/// Returns the written paths.
pub fn plot(files: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if files.is_empty() {
        return Err(Error::invalid("plot", "at least one metrics file is required"));
    }
    let parsed: Vec<SeriesFile> = files.iter().map(|p| parse_file(p)).collect::<Result<_>>()?;
    std::fs::create_dir_all(out_dir)?;

    let mut metrics: Vec<String> = parsed.iter().flat_map(|f| f.columns.clone()).collect();
    metrics.sort();
    metrics.dedup();
    let mut variants: Vec<String> = parsed.iter().map(|f| f.variant.clone()).collect();
    variants.sort();
    variants.dedup();

    let mut written = Vec::new();
    for metric in &metrics {
        let mut series = Vec::new();
        for variant in &variants {
            let group: Vec<&SeriesFile> = parsed
                .iter()
                .filter(|f| &f.variant == variant && f.columns.iter().any(|c| c == metric))
                .collect();
            if group.is_empty() {
                continue;
            }
            series.push((variant.clone(), downsample(&aggregate(&group, metric))));
        }
        let path = out_dir.join(format!("plot_{metric}.svg"));
        std::fs::write(&path, render_svg(metric, &series))?;
        written.push(path);
    }
    Ok(written)
}
