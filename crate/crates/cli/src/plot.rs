use std::fs;
use std::path::{Path, PathBuf};

use gossip_est::Error;
use plotters::prelude::*;

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn read(path: &Path) -> gossip_est::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let columns = header
            .split_once("columns=")
            .ok_or_else(|| Error::Config(format!("{}: missing column header", path.display())))?
            .1
            .split(',')
            .map(str::to_owned)
            .collect();
        let rows = lines
            .map(|l| {
                l.split(',')
                    .map(|v| v.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            })
            .collect::<gossip_est::Result<_>>()?;
        Ok(Self { columns, rows })
    }

    fn series(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| (r[0] + 1.0, r[k]))
                .filter(|&(_, v)| v > 0.0 && v.is_finite())
                .collect(),
        )
    }
}

/// Writes one log-log SVG chart per curve family found in `aggregate.csv`.
pub fn plot_results(results: &Path, out: &Path) -> gossip_est::Result<Vec<PathBuf>> {
    let table = Table::read(&results.join("aggregate.csv"))?;
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_owned(),
        source: e,
    })?;
    let charts: [(&str, &str, &[&str]); 3] = [
        ("error", "estimation error", &["median_error", "mean_error", "median_central_error"]),
        ("disagreement", "disagreement", &["median_disagreement", "mean_disagreement"]),
        ("gap", "distributed-centralized gap", &["median_gap"]),
    ];
    let mut written = Vec::new();
    for (file, title, names) in charts {
        let curves: Vec<_> = names
            .iter()
            .filter_map(|n| table.series(n).filter(|s| !s.is_empty()).map(|s| (*n, s)))
            .collect();
        if curves.is_empty() {
            continue;
        }
        let path = out.join(format!("{file}.svg"));
        draw(&path, title, &curves).map_err(|e| Error::Numerical(format!("plotting {}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

fn draw(path: &Path, title: &str, curves: &[(&str, Vec<(f64, f64)>)]) -> Result<(), Box<dyn std::error::Error>> {
    let points = curves.iter().flat_map(|(_, s)| s.iter());
    let (mut x_max, mut y_min, mut y_max) = (1.0f64, f64::INFINITY, 0.0f64);
    for &(x, y) in points {
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d((1.0..x_max).log_scale(), (y_min * 0.9..y_max * 1.1).log_scale())?;
    chart.configure_mesh().x_desc("iteration + 1").draw()?;
    for (k, (name, series)) in curves.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        chart
            .draw_series(LineSeries::new(series.iter().copied(), color.stroke_width(2)))?
            .label(*name)
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()?;
    root.present()?;
    Ok(())
}
