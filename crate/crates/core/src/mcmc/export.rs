//! Chain CSV, summary JSON and the text summary table.

use std::io::Write;

use super::sampler::{ChainSummary, PosteriorChain};
use crate::data::write_comments;
use crate::error::Result;

/// `0.132(38)`-style notation: the uncertainty to two significant digits on
/// the trailing digits of the value. Values far from unity get a shared
/// power of ten, e.g. `2.8(1.2)e-5`.
pub fn format_with_uncertainty(value: f64, sd: f64) -> String {
    if !value.is_finite() || !sd.is_finite() || sd <= 0.0 {
        return format!("{value}");
    }
    let exp = if value != 0.0 { value.abs().log10().floor() as i32 } else { 0 };
    let (v, s, suffix) = if exp <= -3 || exp >= 4 {
        let scale = 10f64.powi(exp);
        (value / scale, sd / scale, format!("e{exp}"))
    } else {
        (value, sd, String::new())
    };
    let decimals = (1 - s.log10().floor() as i32).max(0) as usize;
    let unc = if s >= 1.0 && decimals > 0 {
        format!("{s:.decimals$}")
    } else if s >= 1.0 {
        format!("{}", s.round())
    } else {
        format!("{}", (s * 10f64.powi(decimals as i32)).round())
    };
    format!("{v:.decimals$}({unc}){suffix}")
}

impl ChainSummary {
    /// Text rows `name  mean(sd)  tau*`, one per parameter.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<8}{:>18}{:>10}\n",
            self.model.label(),
            "mean(sd)",
            "tau_int"
        );
        for p in &self.parameters {
            out.push_str(&format!(
                "{:<8}{:>18}{:>9.1}*\n",
                p.name,
                format_with_uncertainty(p.mean, p.sd),
                p.tau_int
            ));
        }
        out.push_str(&format!(
            "acceptance {:.3}   lnL(mean) {:.3}   E[lnL] {:.3}\n",
            self.acceptance_rate, self.log_likelihood_at_mean, self.mean_log_likelihood
        ));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl PosteriorChain {
    /// One row per retained sample, natural-space parameters, preceded by
    /// `# ` comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        write_comments(&mut w, comments)?;
        writeln!(w, "{}", self.model().param_names().join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = self.natural_row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}
