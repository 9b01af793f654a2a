//! Fixed CSV schemas for traces, certificate logs, comparisons and sweeps.
//!
//! Floats are rendered with Rust's shortest round-trip formatting, so
//! identical runs produce byte-identical files.

use std::fmt::Write as _;

use crate::continuous::SweepRow;
use crate::coordinate::CoordRecord;
use crate::lyapunov::Certificate;
use crate::schemes::IterateRecord;

fn push_float(out: &mut String, v: f64) {
    let _ = write!(out, "{v}");
}

/// `n,f_gap,lyapunov,contraction_ratio,cert_pass`
pub fn render_trace(records: &[IterateRecord]) -> String {
    let mut out = String::from("n,f_gap,lyapunov,contraction_ratio,cert_pass\n");
    for r in records {
        let _ = write!(out, "{},", r.n);
        push_float(&mut out, r.f_gap);
        out.push(',');
        push_float(&mut out, r.lyapunov);
        out.push(',');
        push_float(&mut out, r.contraction_ratio);
        let _ = writeln!(out, ",{}", if r.all_passed() { 1 } else { 0 });
    }
    out
}

/// Deterministic schema plus `coord,realized_decrease,enum_expected_lyapunov`
/// (the optional columns stay empty when not computed).
pub fn render_coord_trace(records: &[CoordRecord]) -> String {
    let mut out =
        String::from("n,f_gap,lyapunov,contraction_ratio,cert_pass,coord,realized_decrease,enum_expected_lyapunov\n");
    for r in records {
        let _ = write!(out, "{},", r.n);
        push_float(&mut out, r.f_gap);
        out.push(',');
        push_float(&mut out, r.lyapunov);
        out.push(',');
        push_float(&mut out, r.contraction_ratio);
        let _ = write!(out, ",{},{},", if r.all_passed() { 1 } else { 0 }, r.coord);
        if let Some(v) = r.realized_decrease {
            push_float(&mut out, v);
        }
        out.push(',');
        if let Some(v) = r.expected_lyapunov {
            push_float(&mut out, v);
        }
        out.push('\n');
    }
    out
}

/// `n,name,z_tag,lhs,rhs,margin,verdict`
pub fn render_certificates(log: &[Certificate]) -> String {
    let mut out = String::from("n,name,z_tag,lhs,rhs,margin,verdict\n");
    for c in log {
        let _ = write!(out, "{},{},{},", c.iteration, c.name, c.z_tag);
        push_float(&mut out, c.lhs);
        out.push(',');
        push_float(&mut out, c.rhs);
        out.push(',');
        push_float(&mut out, c.margin);
        let _ = writeln!(out, ",{}", if c.pass { "pass" } else { "fail" });
    }
    out
}

/// `variant,iterations_to_tol`, with `inf` when the budget ran out.
pub fn render_compare(rows: &[(String, Option<usize>)]) -> String {
    let mut out = String::from("variant,iterations_to_tol\n");
    for (variant, n) in rows {
        match n {
            Some(n) => {
                let _ = writeln!(out, "{variant},{n}");
            }
            None => {
                let _ = writeln!(out, "{variant},inf");
            }
        }
    }
    out
}

/// `gamma,analytic_decay_rate,empirical_decay_rate,regime,diverged`
pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut out = String::from("gamma,analytic_decay_rate,empirical_decay_rate,regime,diverged\n");
    for r in rows {
        push_float(&mut out, r.gamma);
        out.push(',');
        push_float(&mut out, r.analytic_decay_rate);
        out.push(',');
        if let Some(v) = r.empirical_decay_rate {
            push_float(&mut out, v);
        }
        let _ = writeln!(
            out,
            ",{},{}",
            r.regime.as_str(),
            if r.diverged { 1 } else { 0 }
        );
    }
    out
}

/// `t,f_gap,lyapunov,v_norm` rows from
/// [`crate::continuous::trajectory_rows`].
pub fn render_trajectory(rows: &[(f64, f64, f64, f64)]) -> String {
    let mut out = String::from("t,f_gap,lyapunov,v_norm\n");
    for &(t, gap, lyap, v_norm) in rows {
        push_float(&mut out, t);
        out.push(',');
        push_float(&mut out, gap);
        out.push(',');
        push_float(&mut out, lyap);
        out.push(',');
        push_float(&mut out, v_norm);
        out.push('\n');
    }
    out
}

/// Gnuplot-ready two-column data: `index log10(gap)`, clamping the log of a
/// nonpositive gap at -16.
pub fn render_plot_data(points: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for &(t, gap) in points {
        let log_gap = if gap > 0.0 { gap.log10() } else { -16.0 };
        push_float(&mut out, t);
        out.push(' ');
        push_float(&mut out, log_gap);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::Verdict;

    #[test]
    fn trace_rows_are_stable() {
        let records = vec![IterateRecord {
            n: 1,
            f_gap: 0.5,
            lyapunov: 1.0,
            contraction_ratio: 0.25,
            verdicts: vec![Verdict {
                name: "contraction",
                pass: true,
                margin: 0.1,
            }],
        }];
        let text = render_trace(&records);
        assert_eq!(
            text,
            "n,f_gap,lyapunov,contraction_ratio,cert_pass\n1,0.5,1,0.25,1\n"
        );
    }

    #[test]
    fn plot_data_log_scale_and_clamp() {
        let text = render_plot_data(&[(0.0, 1.0), (1.0, 0.1)]);
        assert_eq!(text, "0 0\n1 -1\n");
        let text = render_plot_data(&[(0.0, 0.0), (1.0, -3.0)]);
        assert_eq!(text, "0 -16\n1 -16\n");
        let many: Vec<(f64, f64)> = (0..500).map(|k| (k as f64, 1.0)).collect();
        assert_eq!(render_plot_data(&many).lines().count(), 500);
    }

    #[test]
    fn trajectory_rows_render_with_fixed_header() {
        use crate::continuous::{rk4_trajectory, trajectory_rows, PhaseState};
        use crate::problems::quadratic_from_spectrum;
        use ndarray::array;
        let q = quadratic_from_spectrum(&[1.0], &[0.0], None).unwrap();
        let traj = rk4_trajectory(&q, 2.0, &PhaseState::at_rest(array![1.0]), 0.1, 2).unwrap();
        let rows = trajectory_rows(&q, &traj, &array![0.0], 0.0);
        let text = render_trajectory(&rows);
        assert!(text.starts_with("t,f_gap,lyapunov,v_norm\n"));
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("0,0.5,1,0"));
    }

    #[test]
    fn compare_uses_inf_sentinel() {
        let text = render_compare(&[
            ("nesterov".to_string(), Some(1)),
            ("gradient-descent".to_string(), None),
        ]);
        assert_eq!(
            text,
            "variant,iterations_to_tol\nnesterov,1\ngradient-descent,inf\n"
        );
    }
}
