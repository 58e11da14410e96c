//! SVG line plots of CSV tables: first column on the x axis, one series per remaining column.

use std::path::Path;

use acl_core::io::CsvTable;
use plotters::prelude::*;

const PALETTE: [RGBColor; 6] = [BLUE, RED, GREEN, MAGENTA, CYAN, BLACK];

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 0.05 };
    (lo - pad, hi + pad)
}

pub fn line_plot(t: &CsvTable, path: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let xr = range(t.rows.iter().map(|r| r[0]));
    let yr = range(t.rows.iter().flat_map(|r| r[1..].iter().copied()));
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(xr.0..xr.1, yr.0..yr.1)?;
    chart.configure_mesh().x_desc(t.header[0].as_str()).draw()?;
    for (i, name) in t.header.iter().enumerate().skip(1) {
        let color = PALETTE[(i - 1) % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(t.rows.iter().map(|r| (r[0], r[i])), &color))?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    root.present()?;
    Ok(())
}
