//! CSV and report formatting. Numbers use Rust's `{:e}` formatting, which is
//! locale independent; CSV values carry 17 significant digits.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use mirrorvis_core::VisibilityCurve;

use crate::{CliError, VERSION};

/// 17 significant digits, enough to round-trip any f64.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Short form for human-facing reports.
pub fn short(x: f64) -> String {
    format!("{x:.6e}")
}

pub fn version_line() -> String {
    format!("# version = mirrorvis {VERSION}")
}

/// Metadata block followed by `t_rad,re_f,im_f,visibility[,stderr]` rows.
/// Keys that do not apply to the method are written as `-`.
pub fn curve_csv(curve: &VisibilityCurve) -> String {
    let mut s = String::new();
    let stochastic = curve.method.is_stochastic();
    let _ = writeln!(s, "{}", version_line());
    let _ = writeln!(s, "# method = {}", curve.method);
    for key in ["kappa", "eta_hat", "n_trunc", "step", "seed"] {
        let v = curve.meta.get(key).map_or("-", String::as_str);
        let _ = writeln!(s, "# {key} = {v}");
    }
    for (k, v) in &curve.meta {
        if !["kappa", "eta_hat", "n_trunc", "step", "seed"].contains(&k.as_str()) {
            let _ = writeln!(s, "# {k} = {v}");
        }
    }
    s.push_str(if stochastic { "t_rad,re_f,im_f,visibility,stderr\n" } else { "t_rad,re_f,im_f,visibility\n" });
    for smp in &curve.samples {
        let _ = write!(s, "{},{},{},{}", full(smp.t), full(smp.f.re), full(smp.f.im), full(smp.nu));
        if stochastic {
            let _ = write!(s, ",{}", full(smp.stderr.unwrap_or(f64::NAN)));
        }
        s.push('\n');
    }
    s
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mirrorvis_core::{Method, Sample};
    use num_complex::Complex64;

    #[test]
    fn full_precision_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = full(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn csv_layout() {
        let mut c = VisibilityCurve::new(Method::Exact).with_meta("kappa", 0.25).with_meta("eta_hat", 0.0);
        c.push(0.0, Complex64::new(1.0, 0.0));
        c.push(1.0, Complex64::new(0.5, -0.5));
        let csv = curve_csv(&c);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# version"));
        assert!(lines.contains(&"# method = exact"));
        assert!(lines.contains(&"# n_trunc = -"));
        let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(lines[header], "t_rad,re_f,im_f,visibility");
        let row: Vec<f64> = lines[header + 2].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![1.0, 0.5, -0.5, 0.5f64.hypot(0.5)]);
    }

    #[test]
    fn stochastic_csv_has_stderr() {
        let mut c = VisibilityCurve::new(Method::UnravelQmupl);
        c.samples.push(Sample { stderr: Some(0.01), ..Sample::new(0.0, Complex64::new(1.0, 0.0)) });
        let csv = curve_csv(&c);
        assert!(csv.contains("t_rad,re_f,im_f,visibility,stderr\n"));
        assert!(csv.trim_end().ends_with(&full(0.01)));
    }
}
