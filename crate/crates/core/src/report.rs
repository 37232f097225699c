use serde::{Deserialize, Serialize};

/// Total / aleatoric / epistemic split of predictive uncertainty.
///
/// Units depend on the producer: bits for entropy-based decompositions,
/// variance for the Gaussian-process split. `total - aleatoric - epistemic`
/// evaluates to exactly zero. When the structural breakdown is present,
/// `parametric + structural_delta + structural_g - epistemic` does too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub total: f64,
    pub aleatoric: f64,
    pub epistemic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parametric: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structural_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structural_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl UncertaintyReport {
    /// Builds a report with `epistemic := total - aleatoric`.
    ///
    /// When `aleatoric + epistemic` would round back to a neighbour of
    /// `total` (a rounding tie), `total` is moved by one ulp so that both
    /// `t - a - e == 0` and `a + e == t` hold exactly.
    pub fn from_total_and_aleatoric(total: f64, aleatoric: f64) -> Self {
        let mut total = total;
        for _ in 0..8 {
            let back = aleatoric + (total - aleatoric);
            if back == total || !back.is_finite() {
                break;
            }
            total = nudge(total, back - total);
        }
        UncertaintyReport {
            total,
            aleatoric,
            epistemic: total - aleatoric,
            parametric: None,
            structural_delta: None,
            structural_g: None,
            note: None,
        }
    }

    /// Residual of the first-level identity; zero for every report this crate builds.
    pub fn additivity_residual(&self) -> f64 {
        self.total - self.aleatoric - self.epistemic
    }

    /// Residual of the epistemic breakdown, if present.
    pub fn breakdown_residual(&self) -> Option<f64> {
        match (self.parametric, self.structural_delta, self.structural_g) {
            (Some(p), Some(d), Some(g)) => Some(p + d + g - self.epistemic),
            _ => None,
        }
    }

    /// Attaches the parametric / structural breakdown from the mutual
    /// information of three nested models (`mi_fixed` ⊂ `mi_residual` ⊂
    /// `mi_full`). `self.epistemic` must already equal `mi_full`.
    ///
    /// The last term absorbs the rounding of the partial sum so that the
    /// breakdown residual is exactly zero in floating point.
    pub fn with_breakdown(mut self, mi_fixed: f64, mi_residual: f64) -> Self {
        let parametric = mi_fixed;
        let structural_delta = mi_residual - mi_fixed;
        let partial = parametric + structural_delta;
        let mut structural_g = self.epistemic - partial;
        for _ in 0..8 {
            let err = self.epistemic - (partial + structural_g);
            if err == 0.0 {
                break;
            }
            structural_g = nudge(structural_g, err);
        }
        self.parametric = Some(parametric);
        self.structural_delta = Some(structural_delta);
        self.structural_g = Some(structural_g);
        self
    }
}

fn nudge(x: f64, direction: f64) -> f64 {
    if direction > 0.0 {
        x.next_up()
    } else {
        x.next_down()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakdown_telescopes_exactly() {
        let cases = [
            (0.7, 0.1, 0.3),
            (1e-17, 0.3, 0.30000000000000004),
            (0.1, 0.2, 0.3),
            (0.3, -0.01, 2.5),
            (0.0, 0.0, 0.0),
        ];
        for (a, b, c) in cases {
            let r = UncertaintyReport::from_total_and_aleatoric(c + 1.0, 1.0);
            let mi_full = r.epistemic;
            let r = r.with_breakdown(a, b);
            assert_eq!(r.breakdown_residual(), Some(0.0), "{a} {b} {c}");
            assert_eq!(r.parametric, Some(a));
            assert_eq!(r.epistemic, mi_full);
        }
    }

    #[test]
    fn equal_mutual_information_gives_zero_structure() {
        let r = UncertaintyReport::from_total_and_aleatoric(1.0, 0.75).with_breakdown(0.25, 0.25);
        assert_eq!(r.structural_delta, Some(0.0));
        assert_eq!(r.structural_g, Some(0.0));
    }

    #[test]
    fn first_level_identity() {
        let r = UncertaintyReport::from_total_and_aleatoric(0.9, 0.1);
        assert_eq!(r.additivity_residual(), 0.0);
    }
}
