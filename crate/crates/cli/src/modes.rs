//! The experiment modes and their artifacts.

use std::path::PathBuf;

use acl_core::diagnostics::{
    epsilon_sweep, landau_zener_experiment, summarize_sweep, ExperimentOptions, ExperimentResult, TransitionReport,
};
use acl_core::inner::{derivative_growth_check, scattering_table};
use acl_core::io::{write_atomic, CsvTable};
use acl_core::semiclassical::SpinorField;

use crate::plot;
use crate::spec::{ExperimentSpec, Failure, Mode};

/// Scattering step; the phase rate reaches S at the endpoints, so `ds ≤ 0.1/S`.
fn lz_step(horizon: f64) -> f64 {
    f64::min(5e-4, 0.1 / horizon)
}

struct Out<'a> {
    spec: &'a ExperimentSpec,
    plots: bool,
    written: Vec<PathBuf>,
}

impl Out<'_> {
    fn table(&mut self, name: &str, t: &CsvTable) -> Result<(), Failure> {
        let path = self.spec.output_dir.join(name);
        write_atomic(&path, t.render().as_bytes())?;
        self.written.push(path.clone());
        if self.plots && t.rows.len() >= 2 {
            let svg = path.with_extension("svg");
            plot::line_plot(t, &svg).map_err(|e| Failure::tolerance(format!("plot: {e}")))?;
            self.written.push(svg);
        }
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), Failure> {
        let path = self.spec.output_dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        self.written.push(path);
        Ok(())
    }

    fn report(&mut self, name: &str, reports: &[&TransitionReport]) -> Result<(), Failure> {
        let mut body = format!("# {}\n{}\n", self.spec.echo(), TransitionReport::csv_header());
        for r in reports {
            body.push_str(&r.csv_row());
            body.push('\n');
        }
        self.text(name, &body)
    }

    fn new_table(&self, header: &[&str]) -> CsvTable {
        CsvTable::new(self.spec.echo(), header)
    }
}

fn check(failures: &mut Vec<String>, ok: bool, what: impl FnOnce() -> String) {
    if !ok {
        failures.push(what());
    }
}

/// Conservation and matching checks shared by the PDE modes.
fn common_checks(spec: &ExperimentSpec, r: &ExperimentResult, failures: &mut Vec<String>) {
    let tol = &spec.num.tolerances;
    let rep = &r.report;
    let eps = rep.params.epsilon();
    check(failures, rep.mass_drift_rate <= tol.mass_drift_per_time, || {
        format!("mass drift {:e}/time above {:e} at epsilon={eps}", rep.mass_drift_rate, tol.mass_drift_per_time)
    });
    check(failures, rep.mass_minus_before < tol.minus_before, || {
        format!("m- at -t_eps {:e} above {:e} at epsilon={eps}", rep.mass_minus_before, tol.minus_before)
    });
}

fn opts(spec: &ExperimentSpec) -> ExperimentOptions {
    ExperimentOptions { keep_snapshots: spec.mode == Mode::Full, ..Default::default() }
}

fn run_one(spec: &ExperimentSpec) -> Result<ExperimentResult, Failure> {
    Ok(landau_zener_experiment(&spec.params, &spec.num, &opts(spec))?)
}

fn snapshot_table(out: &Out, f: &SpinorField) -> CsvTable {
    let mut t = out.new_table(&["x", "re_psi1", "im_psi1", "re_psi2", "im_psi2"]);
    t.extend(f.snapshot_rows());
    t
}

/// Runs the experiment; returns the written files, or a failure after the
/// artifacts have been written.
pub fn run(spec: &ExperimentSpec, plots: bool) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Out { spec, plots, written: Vec::new() };
    let mut failures = Vec::new();
    match spec.mode {
        Mode::Outer => {
            let r = run_one(spec)?;
            let mut t = out.new_table(&["t", "l2", "h1eps", "total"]);
            t.extend(r.outer_series.iter().map(|s| vec![s.t, s.l2, s.h1, s.l2 + s.h1]));
            out.table("outer_errors.csv", &t)?;
            common_checks(spec, &r, &mut failures);
        }
        Mode::Inner => {
            let mut eps = vec![spec.params.epsilon()];
            for &e in spec.sweep.iter().flatten() {
                if !eps.contains(&e) {
                    eps.push(e);
                }
            }
            let results = epsilon_sweep(&spec.params, &spec.num, &opts(spec), &eps)?;
            let r = &results[0];
            let mut t = out.new_table(&["s", "r", "mass_f2", "mass_v2", "minus_fraction"]);
            t.extend(r.inner_series.iter().map(|s| vec![s.s, s.r, s.mass_f2, s.mass_v2, s.minus_fraction]));
            out.table("inner_errors.csv", &t)?;
            let mut d = out.new_table(&["epsilon", "sup_f", "sup_dy_f", "sup_dyy_f"]);
            d.extend(results.iter().map(|r| {
                let [a, b, c] = r.family_derivatives;
                vec![r.report.params.epsilon(), a, b, c]
            }));
            out.table("derivatives.csv", &d)?;
            if results.len() >= 2 {
                let pts: Vec<(f64, [f64; 3])> =
                    results.iter().map(|r| (r.report.params.epsilon(), r.family_derivatives)).collect();
                let g = derivative_growth_check(&pts, spec.params.gamma())?;
                let mut f = out.new_table(&["k", "slope", "expected", "intercept", "residual"]);
                for (i, fit) in g.fits.iter().enumerate() {
                    f.push(vec![(i + 1) as f64, fit.slope, g.expected(i + 1), fit.intercept, fit.residual]);
                }
                out.table("derivative_growth.csv", &f)?;
            }
            let lz_tol = spec.num.tolerances.lz_norm_drift;
            for r in &results {
                let per_s = r.report.family_norm_drift / (2.0 * r.report.params.s_eps());
                check(&mut failures, per_s <= lz_tol, || format!("family norm drift {per_s:e}/s above {lz_tol:e}"));
                common_checks(spec, r, &mut failures);
            }
        }
        Mode::Full => {
            let r = run_one(spec)?;
            out.report("report.csv", &[&r.report])?;
            out.text("report.txt", &format!("# {}\n{}", spec.echo(), r.report.to_key_values()))?;
            for (name, f) in ["snapshot_start.csv", "snapshot_before.csv", "snapshot_after.csv"].iter().zip(&r.snapshots) {
                let t = snapshot_table(&out, f);
                out.table(name, &t)?;
            }
            let tol = &spec.num.tolerances;
            let rep = &r.report;
            check(&mut failures, rep.rel_error <= tol.transition_rel, || {
                format!("transition p_measured={:e} vs p={:e} relative {:e} above {}", rep.p_measured, rep.p_theory, rep.rel_error, tol.transition_rel)
            });
            common_checks(spec, &r, &mut failures);
        }
        Mode::LzTable => {
            let etas = spec.etas.clone().unwrap_or_else(|| vec![spec.params.eta().abs()]);
            let s = spec.num.lz_horizon;
            let rows = scattering_table(&etas, s, lz_step(s))?;
            let mut t = out.new_table(&["eta", "a2", "b2", "numeric_m11", "abs_error"]);
            t.extend(rows.iter().map(|r| r.to_vec()));
            out.table("lz_table.csv", &t)?;
            let tol = spec.num.tolerances.lz_numeric;
            for r in &rows {
                check(&mut failures, r[4] < tol, || format!("lz-table eta={} numeric error {:e} above {tol:e}", r[0], r[4]));
            }
        }
        Mode::Convergence => {
            let eps = spec.sweep.clone().unwrap_or_default();
            let results = epsilon_sweep(&spec.params, &spec.num, &opts(spec), &eps)?;
            let summary = summarize_sweep(&results)?;
            let mut t = out.new_table(&["epsilon", "outer_error", "inner_sup", "p_measured", "rel_error"]);
            t.extend(results.iter().map(|r| {
                let p = &r.report;
                vec![p.params.epsilon(), p.outer_error(), p.inner_sup, p.p_measured, p.rel_error]
            }));
            out.table("convergence.csv", &t)?;
            let mut f = out.new_table(&["outer_slope", "outer_residual", "inner_slope", "inner_residual"]);
            f.push(vec![summary.outer_fit.slope, summary.outer_fit.residual, summary.inner_fit.slope, summary.inner_fit.residual]);
            out.table("slopes.csv", &f)?;
            let reports: Vec<&TransitionReport> = results.iter().map(|r| &r.report).collect();
            out.report("reports.csv", &reports)?;
            let g = spec.params.gamma();
            check(&mut failures, summary.outer_monotone() && summary.outer_fit.slope > g / 2.0, || {
                format!("outer error slope {:.4} (floor {}) or not decreasing", summary.outer_fit.slope, g / 2.0)
            });
            check(&mut failures, summary.inner_monotone() && summary.inner_fit.slope > g / 4.0, || {
                format!("inner error slope {:.4} (floor {}) or not decreasing", summary.inner_fit.slope, g / 4.0)
            });
            for r in &results {
                common_checks(spec, r, &mut failures);
            }
        }
    }
    if failures.is_empty() {
        Ok(out.written)
    } else {
        Err(Failure::tolerance(format!("tolerance: {}", failures.join("; "))))
    }
}
