//! AIC and DIC from posterior chains, and pairwise model comparison.

use serde::{Deserialize, Serialize};

use crate::mcmc::PosteriorChain;

/// How AIC is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AicForm {
    /// `−2 ln L(θ̄) + 2k`
    #[default]
    Standard,
    /// `−ln L(θ̄) − 2k`, kept for reproducing the printed expression.
    Literal,
}

pub fn aic(ln_l_at_mean: f64, k: usize) -> f64 {
    -2.0 * ln_l_at_mean + 2.0 * k as f64
}

pub fn aic_literal(ln_l_at_mean: f64, k: usize) -> f64 {
    -ln_l_at_mean - 2.0 * k as f64
}

/// `2 [ln L(θ̄) − 2 E(ln L(θ))]`, i.e. `−2 ln L(θ̄) + 2 p_D` with
/// `p_D = 2 (ln L(θ̄) − E ln L)`.
pub fn dic(ln_l_at_mean: f64, mean_ln_l: f64) -> f64 {
    2.0 * (ln_l_at_mean - 2.0 * mean_ln_l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitScore {
    pub model: String,
    pub aic: f64,
    pub dic: f64,
    pub k: usize,
    pub ln_l_at_mean: f64,
    pub mean_ln_l: f64,
    pub aic_form: AicForm,
}

impl FitScore {
    pub fn new(model: impl Into<String>, k: usize, ln_l_at_mean: f64, mean_ln_l: f64, form: AicForm) -> Self {
        let aic = match form {
            AicForm::Standard => aic(ln_l_at_mean, k),
            AicForm::Literal => aic_literal(ln_l_at_mean, k),
        };
        Self {
            model: model.into(),
            aic,
            dic: dic(ln_l_at_mean, mean_ln_l),
            k,
            ln_l_at_mean,
            mean_ln_l,
            aic_form: form,
        }
    }

    pub fn from_chain(chain: &PosteriorChain, form: AicForm) -> Self {
        let s = chain.summary();
        Self::new(
            chain.model().label(),
            chain.dim(),
            s.log_likelihood_at_mean,
            s.mean_log_likelihood,
            form,
        )
    }

    /// Effective number of parameters `p_D`.
    pub fn effective_parameters(&self) -> f64 {
        2.0 * (self.ln_l_at_mean - self.mean_ln_l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    First,
    Second,
    Tie,
}

fn smaller(a: f64, b: f64) -> Winner {
    if a < b {
        Winner::First
    } else if b < a {
        Winner::Second
    } else {
        Winner::Tie
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub first: FitScore,
    pub second: FitScore,
    pub aic_winner: Winner,
    pub dic_winner: Winner,
    /// The two criteria name different winners.
    pub disagreement: bool,
}

/// Smaller is better for both criteria.
pub fn compare(first: FitScore, second: FitScore) -> Comparison {
    let aic_winner = smaller(first.aic, second.aic);
    let dic_winner = smaller(first.dic, second.dic);
    let disagreement = aic_winner != dic_winner;
    Comparison {
        first,
        second,
        aic_winner,
        dic_winner,
        disagreement,
    }
}

impl Comparison {
    fn winner_name(&self, w: Winner) -> &str {
        match w {
            Winner::First => &self.first.model,
            Winner::Second => &self.second.model,
            Winner::Tie => "tie",
        }
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned text table, one column per model.
    pub fn table(&self) -> String {
        let row = |label: &str, a: String, b: String| format!("{label:<10}{a:>16}{b:>16}\n");
        let mut out = row("", self.first.model.clone(), self.second.model.clone());
        out += &row("k", self.first.k.to_string(), self.second.k.to_string());
        out += &row(
            "lnL(mean)",
            format!("{:.3}", self.first.ln_l_at_mean),
            format!("{:.3}", self.second.ln_l_at_mean),
        );
        out += &row(
            "E[lnL]",
            format!("{:.3}", self.first.mean_ln_l),
            format!("{:.3}", self.second.mean_ln_l),
        );
        out += &row("AIC", format!("{:.2}", self.first.aic), format!("{:.2}", self.second.aic));
        out += &row("DIC", format!("{:.2}", self.first.dic), format!("{:.2}", self.second.dic));
        out += &format!(
            "AIC prefers {}; DIC prefers {}{}\n",
            self.winner_name(self.aic_winner),
            self.winner_name(self.dic_winner),
            if self.disagreement { " (criteria disagree)" } else { "" }
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn aic_values() {
        assert_eq!(aic(0.0, 3), 6.0);
        assert_abs_diff_eq!(aic(2079.645, 4), -4151.29, epsilon = 1e-9);
        assert_eq!(aic(10.0, 5) - aic(10.0, 4), 2.0);
        assert_eq!(aic_literal(10.0, 3), -16.0);
    }

    #[test]
    fn dic_values() {
        assert_eq!(dic(7.5, 7.5), -15.0);
        assert_eq!(dic(2079.0, 2077.0), -4150.0);
        assert_abs_diff_eq!(dic(100.0, 99.0 - 0.25) - dic(100.0, 99.0), 1.0, epsilon = 1e-12);
    }

    fn score(name: &str, aic: f64, dic: f64) -> FitScore {
        FitScore {
            model: name.into(),
            aic,
            dic,
            k: 3,
            ln_l_at_mean: 0.0,
            mean_ln_l: 0.0,
            aic_form: AicForm::Standard,
        }
    }

    #[test]
    fn reported_scores_prefer_the_rational_model() {
        let c = compare(score("garch-re", -4151.29, -4156.30), score("garch-n", -4148.35, -4151.98));
        assert_eq!(c.aic_winner, Winner::First);
        assert_eq!(c.dic_winner, Winner::First);
        assert!(!c.disagreement);
        assert!(c.table().contains("AIC prefers garch-re; DIC prefers garch-re\n"));
    }

    #[test]
    fn ties_have_no_winner() {
        let c = compare(score("a", 1.0, 2.0), score("b", 1.0, 2.0));
        assert_eq!(c.aic_winner, Winner::Tie);
        assert_eq!(c.dic_winner, Winner::Tie);
        assert!(!c.disagreement);
    }

    #[test]
    fn disagreement_flagged() {
        let c = compare(score("a", 1.0, 5.0), score("b", 2.0, 4.0));
        assert_eq!(c.aic_winner, Winner::First);
        assert_eq!(c.dic_winner, Winner::Second);
        assert!(c.disagreement);
        assert!(c.table().contains("(criteria disagree)"));
    }

    #[test]
    fn degenerate_chain_has_no_complexity_penalty() {
        let s = FitScore::new("m", 3, 12.5, 12.5, AicForm::Standard);
        assert_eq!(s.dic, -2.0 * 12.5);
        assert_eq!(s.effective_parameters(), 0.0);
    }

    proptest! {
        #[test]
        fn aic_is_affine(l in -1e4f64..1e4, k in 1usize..20) {
            prop_assert!((aic(l, k + 1) - aic(l, k) - 2.0).abs() < 1e-9);
            prop_assert!((aic(l + 1.0, k) - aic(l, k) + 2.0).abs() < 1e-9);
        }

        #[test]
        fn dic_shift(l in -1e3f64..1e3, m in -1e3f64..1e3, c in -1e3f64..1e3) {
            // shifting every lnL sample and lnL(θ̄) by c moves DIC by −2c
            prop_assert!((dic(l + c, m + c) - dic(l, m) + 2.0 * c).abs() < 1e-9);
        }
    }
}
