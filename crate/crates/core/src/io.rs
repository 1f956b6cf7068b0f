//! CSV and SVG emission. Floats are written with Rust's shortest
//! round-trip formatting, so identical runs produce byte-identical files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::analysis::{BorelScalingReport, CombesThomasReport, ContrastReport};
use crate::eigenfunctions::GrowthProfile;
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::transport::MomentSeries;

fn io_err(e: std::io::Error) -> Error {
    Error::Numeric { what: "file io", details: e.to_string() }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    writeln!(f, "{}", header.join(",")).map_err(io_err)?;
    for row in rows {
        writeln!(f, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// Potential table as CSV with columns n1, …, nd, value.
pub fn write_potential_csv(path: &Path, boxref: &LatticeBox, values: &[f64]) -> Result<()> {
    let d = boxref.dim();
    let mut header: Vec<String> = (1..=d).map(|a| format!("n{a}")).collect();
    header.push("value".to_string());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = (0..boxref.site_count())
        .map(|i| {
            let mut row: Vec<String> =
                boxref.site_at(i).iter().map(|c| c.to_string()).collect();
            row.push(values[i].to_string());
            row
        })
        .collect();
    write_csv(path, &header_refs, &rows)
}

/// Read a potential table written by `write_potential_csv` (or compatible).
pub fn read_potential_csv(path: &Path) -> Result<BTreeMap<Vec<i64>, f64>> {
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::config("empty potential CSV"))?;
    let cols = header.split(',').count();
    if cols < 2 {
        return Err(Error::config("potential CSV needs coordinate columns and a value"));
    }
    let mut out = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::config(format!(
                "line {}: expected {cols} fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let mut site = Vec::with_capacity(cols - 1);
        for f in &fields[..cols - 1] {
            site.push(f.trim().parse::<i64>().map_err(|e| {
                Error::config(format!("line {}: bad coordinate {f:?}: {e}", lineno + 2))
            })?);
        }
        let v = fields[cols - 1].trim().parse::<f64>().map_err(|e| {
            Error::config(format!("line {}: bad value: {e}", lineno + 2))
        })?;
        out.insert(site, v);
    }
    Ok(out)
}

pub fn write_moment_series_csv(path: &Path, series: &MomentSeries) -> Result<()> {
    let rows: Vec<Vec<String>> = series
        .t_grid
        .iter()
        .zip(&series.values)
        .map(|(t, v)| {
            vec![
                t.to_string(),
                v.value.to_string(),
                v.quad_err.to_string(),
                v.model_err.to_string(),
                series.route.name().to_string(),
            ]
        })
        .collect();
    write_csv(path, &["T", "value", "quad_err", "model_err", "route"], &rows)
}

pub fn write_profile_csv(path: &Path, profile: &GrowthProfile) -> Result<()> {
    let rows: Vec<Vec<String>> = profile
        .radii
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let envelope = profile.fitted_a * (*l as f64).powf(profile.fitted_nu);
            vec![
                l.to_string(),
                profile.shell_l1[i].to_string(),
                profile.weighted_box[i].to_string(),
                envelope.to_string(),
            ]
        })
        .collect();
    write_csv(path, &["L", "shell_sum", "weighted_sum", "threshold"], &rows)
}

pub fn write_ct_report_csv(path: &Path, report: &CombesThomasReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .per_distance
        .iter()
        .map(|(s, g, thr)| vec![s.to_string(), g.to_string(), thr.to_string()])
        .collect();
    write_csv(path, &["dist", "max_abs_g", "threshold"], &rows)
}

pub fn write_borel_report_csv(path: &Path, report: &BorelScalingReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.gamma.to_string(),
                r.alpha.to_string(),
                r.eps.to_string(),
                r.window_radius.to_string(),
                r.im_g.to_string(),
                r.lhs_factor.to_string(),
                r.rhs_factor.to_string(),
                r.product_margin.to_string(),
                (r.ok as u8).to_string(),
            ]
        })
        .collect();
    write_csv(
        path,
        &["gamma", "alpha", "eps", "window_radius", "im_g", "lhs_factor", "rhs_factor", "margin", "ok"],
        &rows,
    )
}

pub fn write_contrast_csv(path: &Path, report: &ContrastReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.realization.to_string(),
                r.slope.to_string(),
                r.fit_residual.to_string(),
            ]
        })
        .collect();
    write_csv(path, &["model", "realization", "slope", "fit_residual"], &rows)
}

/// Minimal self-contained SVG line plot. Each series is a named polyline;
/// log axes take the log10 of the data before scaling.
pub struct SvgPlot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

const SVG_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub fn write_svg_plot(path: &Path, plot: &SvgPlot) -> Result<()> {
    let (w, h) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let map = |v: f64, log: bool| if log { v.log10() } else { v };

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (_, pts) in &plot.series {
        for &(x, y) in pts {
            let (x, y) = (map(x, plot.log_x), map(y, plot.log_y));
            if x.is_finite() && y.is_finite() {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::config("svg plot has no finite points"));
    }
    let (x0, x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
        (a.min(v), b.max(v))
    });
    let (y0, y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
        (a.min(v), b.max(v))
    });
    let xspan = (x1 - x0).max(1e-12);
    let yspan = (y1 - y0).max(1e-12);
    let px = |x: f64| ml + (x - x0) / xspan * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / yspan * (h - mt - mb);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        w / 2.0,
        plot.title
    ));
    s.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        w - ml - mr,
        h - mt - mb
    ));
    // axis labels and extreme ticks
    let xlab = |v: f64| if plot.log_x { format!("1e{v:.1}") } else { format!("{v:.3}") };
    let ylab = |v: f64| if plot.log_y { format!("1e{v:.1}") } else { format!("{v:.3}") };
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
        w / 2.0,
        h - 12.0,
        plot.x_label
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\" \
         font-size=\"12\">{}</text>\n",
        h / 2.0,
        h / 2.0,
        plot.y_label
    ));
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-size=\"11\">{}</text>\n",
            px(v),
            h - mb + 16.0,
            xlab(v)
        ));
    }
    for v in [y0, y1] {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
            ml - 6.0,
            py(v) + 4.0,
            ylab(v)
        ));
    }
    for (i, (name, pts)) in plot.series.iter().enumerate() {
        let color = SVG_COLORS[i % SVG_COLORS.len()];
        let path_pts: Vec<String> = pts
            .iter()
            .filter_map(|&(x, y)| {
                let (x, y) = (map(x, plot.log_x), map(y, plot.log_y));
                if x.is_finite() && y.is_finite() {
                    Some(format!("{:.2},{:.2}", px(x), py(y)))
                } else {
                    None
                }
            })
            .collect();
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path_pts.join(" ")
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{name}</text>\n",
            w - mr - 150.0,
            mt + 18.0 * (i as f64 + 1.0)
        ));
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s).map_err(io_err)
}
