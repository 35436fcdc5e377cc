//! Loss variance, its gradient, and the linear cuts that replace the
//! variance cap in the MILP reformulation.

mod cutting;

pub use cutting::{cutting_plane_solve, CutLog, CuttingOptions, IterationRecord, LoopStatus, RunReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{EqTag, Family, LinearRow, ModelIR, Sense};
use crate::solver::Solution;

/// Weekly losses per scenario together with the loss indicators.
///
/// `loss` is week-major: entry `w * scenarios + s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub weeks: usize,
    pub scenarios: usize,
    pub loss: Vec<f64>,
    pub delta: Vec<f64>,
    pub iteration: usize,
}

impl LossPoint {
    pub fn new(weeks: usize, scenarios: usize, loss: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if loss.len() != weeks * scenarios {
            return Err(Error::Dimension {
                expected: format!("{} loss values", weeks * scenarios),
                got: loss.len().to_string(),
            });
        }
        if delta.len() != weeks {
            return Err(Error::Dimension {
                expected: format!("{weeks} indicator values"),
                got: delta.len().to_string(),
            });
        }
        if let Some(bad) = loss.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::invalid("loss point", format!("loss must be ≥ 0, got {bad}")));
        }
        Ok(LossPoint {
            weeks,
            scenarios,
            loss,
            delta,
            iteration: 0,
        })
    }

    pub fn zeros(weeks: usize, scenarios: usize) -> Self {
        LossPoint {
            weeks,
            scenarios,
            loss: vec![0.0; weeks * scenarios],
            delta: vec![0.0; weeks],
            iteration: 0,
        }
    }

    pub fn with_iteration(mut self, iteration: usize) -> Self {
        self.iteration = iteration;
        self
    }

    pub fn at(&self, week: usize, scenario: usize) -> f64 {
        self.loss[week * self.scenarios + scenario]
    }

    pub fn week(&self, week: usize) -> &[f64] {
        &self.loss[week * self.scenarios..(week + 1) * self.scenarios]
    }

    pub fn total_loss(&self) -> f64 {
        self.loss.iter().sum()
    }

    /// Reads the `loss` and `delta` values of a solved model.
    pub fn from_solution(sol: &Solution, weeks: usize, scenarios: usize) -> Result<Self> {
        let mut loss = Vec::with_capacity(weeks * scenarios);
        for w in 0..weeks {
            for s in 0..scenarios {
                // solver noise may leave tiny negatives
                loss.push(sol.value_of(Family::Loss, &[w, s])?.max(0.0));
            }
        }
        let delta = (0..weeks)
            .map(|w| sol.value_of(Family::Delta, &[w]))
            .collect::<Result<Vec<_>>>()?;
        LossPoint::new(weeks, scenarios, loss, delta)
    }

    /// A short stable digest of the loss values, for cut logs.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for v in &self.loss {
            h.update(v.to_le_bytes());
        }
        for v in &self.delta {
            h.update(v.to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

fn check_dims(point: &LossPoint, rho: &[f64], weeks: usize) -> Result<()> {
    if point.scenarios != rho.len() {
        return Err(Error::Dimension {
            expected: format!("{} scenarios", rho.len()),
            got: point.scenarios.to_string(),
        });
    }
    if point.weeks != weeks || point.loss.len() != weeks * rho.len() {
        return Err(Error::Dimension {
            expected: format!("{weeks} weeks"),
            got: point.weeks.to_string(),
        });
    }
    if weeks == 0 {
        return Err(Error::Dimension {
            expected: "at least one week".into(),
            got: "0".into(),
        });
    }
    Ok(())
}

/// Per-week contributions `Var_w / |T'|`; they sum to the variance.
fn weekly_terms(point: &LossPoint, rho: &[f64], weeks: usize) -> Vec<f64> {
    let scale = 1.0 / weeks as f64;
    (0..weeks)
        .map(|w| {
            let row = point.week(w);
            // pairwise form Σ_{s<s'} ρ_s ρ_s' (L_s − L_s')²: no cancellation,
            // equal to E[L²] − E[L]² when the probabilities sum to one
            let mut var = 0.0;
            for s in 0..row.len() {
                for s2 in s + 1..row.len() {
                    let d = row[s] - row[s2];
                    var += rho[s] * rho[s2] * d * d;
                }
            }
            scale * var
        })
        .collect()
}

/// Week-averaged variance of loss over scenarios.
pub fn variance_value(point: &LossPoint, rho: &[f64], weeks: usize) -> Result<f64> {
    check_dims(point, rho, weeks)?;
    Ok(weekly_terms(point, rho, weeks).iter().sum())
}

/// Gradient of [`variance_value`] with respect to every `Loss(w, s)`,
/// laid out like `LossPoint::loss`.
pub fn variance_gradient(point: &LossPoint, rho: &[f64], weeks: usize) -> Result<Vec<f64>> {
    check_dims(point, rho, weeks)?;
    let scale = 1.0 / weeks as f64;
    let mut grad = Vec::with_capacity(point.loss.len());
    for w in 0..weeks {
        let row = point.week(w);
        let mean: f64 = row.iter().zip(rho).map(|(l, p)| p * l).sum();
        grad.extend(row.iter().zip(rho).map(|(l, p)| scale * (2.0 * p * l - 2.0 * p * mean)));
    }
    Ok(grad)
}

/// The published gradient expression, whose subtracted mean runs over all
/// weeks at once. Kept only for side-by-side logging; it coincides with
/// [`variance_gradient`] when there is a single week.
pub fn variance_gradient_as_printed(point: &LossPoint, rho: &[f64], weeks: usize) -> Result<Vec<f64>> {
    check_dims(point, rho, weeks)?;
    let scale = 1.0 / weeks as f64;
    let pooled: f64 = (0..weeks)
        .flat_map(|w| point.week(w).iter().zip(rho).map(|(l, p)| p * l))
        .sum();
    let mut grad = Vec::with_capacity(point.loss.len());
    for w in 0..weeks {
        grad.extend(
            point
                .week(w)
                .iter()
                .zip(rho)
                .map(|(l, p)| scale * (2.0 * p * l - 2.0 * p * pooled)),
        );
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutStyle {
    /// Gradient cut with the curvature term carried by the loss indicators.
    Perspective,
    /// Plain gradient (Kelley) cut.
    Plain,
}

/// `Σ loss_coefs·Loss + Σ delta_coefs·δ + constant ≤ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub style: CutStyle,
    /// Same layout as `LossPoint::loss`.
    pub loss_coefs: Vec<f64>,
    pub delta_coefs: Vec<f64>,
    pub constant: f64,
    pub iteration: usize,
    pub point: LossPoint,
}

impl Cut {
    /// Left-hand side at `(loss, delta)`.
    pub fn lhs(&self, loss: &[f64], delta: &[f64]) -> f64 {
        let a: f64 = self.loss_coefs.iter().zip(loss).map(|(c, l)| c * l).sum();
        let b: f64 = self.delta_coefs.iter().zip(delta).map(|(c, d)| c * d).sum();
        a + b + self.constant
    }

    pub fn lhs_at(&self, point: &LossPoint) -> f64 {
        self.lhs(&point.loss, &point.delta)
    }

    /// Violation at the point that generated the cut.
    pub fn violation_at_generation(&self) -> f64 {
        self.lhs_at(&self.point).max(0.0)
    }

    /// The cut as a model row over the `loss` and `delta` variables.
    pub fn to_row(&self, ir: &ModelIR) -> LinearRow {
        let mut terms = Vec::new();
        for w in 0..self.point.weeks {
            for s in 0..self.point.scenarios {
                let c = self.loss_coefs[w * self.point.scenarios + s];
                if c != 0.0 {
                    terms.push((ir.id(Family::Loss, &[w, s]), c));
                }
            }
            let d = self.delta_coefs[w];
            if d != 0.0 {
                terms.push((ir.id(Family::Delta, &[w]), d));
            }
        }
        let tag = match self.style {
            CutStyle::Perspective => EqTag::Eq(25),
            CutStyle::Plain => EqTag::Eq(23),
        };
        LinearRow {
            tag,
            terms,
            sense: Sense::Le,
            rhs: -self.constant,
        }
    }
}

/// Perspective cut of the variance cap at `point`.
///
/// With `g = Var − cap`, the linearization `⟨∇Var(x̄), x⟩ − Var(x̄) − cap ≤ 0`
/// is tight at `x̄`. Because the variance is a sum of homogeneous convex
/// weekly terms `f_w`, each week's share `−f_w(x̄)` of the constant may be
/// switched off with that week's indicator `δ_w`; `−cap` stays a plain
/// constant. With all `δ = 1` this is the plain gradient cut.
pub fn perspective_cut(point: &LossPoint, rho: &[f64], weeks: usize, cap: f64) -> Result<Cut> {
    let terms = weekly_terms(point, rho, weeks);
    let grad = variance_gradient(point, rho, weeks)?;
    Ok(Cut {
        style: CutStyle::Perspective,
        loss_coefs: grad,
        delta_coefs: terms.iter().map(|t| -t).collect(),
        constant: -cap,
        iteration: point.iteration,
        point: point.clone(),
    })
}

/// Unstrengthened gradient cut `Var(x̄) + ⟨∇Var(x̄), x − x̄⟩ ≤ cap`.
pub fn plain_cut(point: &LossPoint, rho: &[f64], weeks: usize, cap: f64) -> Result<Cut> {
    let value = variance_value(point, rho, weeks)?;
    let grad = variance_gradient(point, rho, weeks)?;
    let at_point: f64 = grad.iter().zip(&point.loss).map(|(g, l)| g * l).sum();
    Ok(Cut {
        style: CutStyle::Plain,
        loss_coefs: grad,
        delta_coefs: vec![0.0; weeks],
        constant: value - at_point - cap,
        iteration: point.iteration,
        point: point.clone(),
    })
}

/// Per-week perspective rows `⟨∇_w, x_w⟩ − f_w(x̄)·δ_w − cap ≤ 0`, each
/// valid on its own because every weekly term is bounded by the cap.
pub fn perspective_cuts_per_week(
    point: &LossPoint,
    rho: &[f64],
    weeks: usize,
    cap: f64,
) -> Result<Vec<Cut>> {
    let full = perspective_cut(point, rho, weeks, cap)?;
    Ok((0..weeks)
        .map(|w| {
            let mut loss_coefs = vec![0.0; full.loss_coefs.len()];
            let span = w * point.scenarios..(w + 1) * point.scenarios;
            loss_coefs[span.clone()].copy_from_slice(&full.loss_coefs[span]);
            let mut delta_coefs = vec![0.0; weeks];
            delta_coefs[w] = full.delta_coefs[w];
            Cut {
                loss_coefs,
                delta_coefs,
                ..full.clone()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RHO: [f64; 3] = [0.35, 0.15, 0.5];

    fn pattern_point() -> LossPoint {
        LossPoint::new(2, 3, vec![5.0, 0.0, 5.0, 0.0, 0.0, 0.0], vec![1.0, 0.0]).unwrap()
    }

    fn finite_difference(point: &LossPoint, idx: usize) -> f64 {
        let h = 1e-5 * (1.0 + point.loss[idx].abs());
        let mut up = point.clone();
        let mut down = point.clone();
        up.loss[idx] += h;
        down.loss[idx] -= h;
        // bypass the nonnegativity check in `new`; variance is a polynomial
        let vu = variance_value(&up, &RHO, 2).unwrap();
        let vd = variance_value(&down, &RHO, 2).unwrap();
        (vu - vd) / (2.0 * h)
    }

    #[test]
    fn zero_losses_have_zero_variance_and_gradient() {
        let p = LossPoint::zeros(2, 3);
        assert_eq!(variance_value(&p, &RHO, 2).unwrap(), 0.0);
        assert!(variance_gradient(&p, &RHO, 2).unwrap().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn pattern_variance() {
        let v = variance_value(&pattern_point(), &RHO, 2).unwrap();
        assert_eq!(v, 1.59375);
    }

    #[test]
    fn pattern_gradient_matches_hand_value_and_differences() {
        let p = pattern_point();
        let g = variance_gradient(&p, &RHO, 2).unwrap();
        // ½·(2·0.35·5 − 2·0.35·4.25), E[Loss_1] = 0.35·5 + 0.5·5 = 4.25
        assert!((g[0] - 0.2625).abs() < 1e-12, "{}", g[0]);
        for idx in 0..p.loss.len() {
            let fd = finite_difference(&p, idx);
            assert!((g[idx] - fd).abs() <= 1e-6 * fd.abs().max(1e-6), "idx {idx}: {} vs {fd}", g[idx]);
        }
    }

    #[test]
    fn constant_losses_have_zero_variance() {
        for c in [0.0, 1.0, 7.5, 1e3] {
            let p = LossPoint::new(2, 3, vec![c, c, c, 2.0 * c, 2.0 * c, 2.0 * c], vec![1.0; 2]).unwrap();
            assert!(variance_value(&p, &RHO, 2).unwrap().abs() < 1e-9 * (1.0 + c * c));
            assert!(variance_gradient(&p, &RHO, 2).unwrap().iter().all(|g| g.abs() < 1e-9 * (1.0 + c)));
        }
    }

    #[test]
    fn printed_gradient_differs_only_across_weeks() {
        let single = LossPoint::new(1, 3, vec![5.0, 0.0, 5.0], vec![1.0]).unwrap();
        assert_eq!(
            variance_gradient(&single, &RHO, 1).unwrap(),
            variance_gradient_as_printed(&single, &RHO, 1).unwrap()
        );
        let two = LossPoint::new(2, 3, vec![5.0, 0.0, 5.0, 1.0, 2.0, 3.0], vec![1.0; 2]).unwrap();
        assert_ne!(
            variance_gradient(&two, &RHO, 2).unwrap(),
            variance_gradient_as_printed(&two, &RHO, 2).unwrap()
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = pattern_point();
        assert!(matches!(variance_value(&p, &RHO[..2], 2), Err(Error::Dimension { .. })));
        assert!(matches!(variance_gradient(&p, &RHO, 3), Err(Error::Dimension { .. })));
        assert!(LossPoint::new(2, 3, vec![0.0; 5], vec![0.0; 2]).is_err());
        assert!(LossPoint::new(2, 3, vec![0.0; 6], vec![0.0; 1]).is_err());
    }

    #[test]
    fn cut_at_origin_is_vacuous() {
        let cut = perspective_cut(&LossPoint::zeros(2, 3), &RHO, 2, 25.0).unwrap();
        assert!(cut.loss_coefs.iter().all(|c| *c == 0.0));
        assert!(cut.delta_coefs.iter().all(|c| *c == 0.0));
        assert_eq!(cut.constant, -25.0);
    }

    #[test]
    fn feasible_generating_point_is_not_cut_off() {
        let p = pattern_point();
        for cut in [
            perspective_cut(&p, &RHO, 2, 25.0).unwrap(),
            plain_cut(&p, &RHO, 2, 25.0).unwrap(),
        ] {
            assert!(cut.lhs_at(&p) <= 0.0);
        }
    }

    #[test]
    fn separation_identity() {
        let mut p = pattern_point();
        for l in p.loss.iter_mut() {
            *l *= 10.0;
        }
        p.delta = vec![1.0, 1.0];
        let var = variance_value(&p, &RHO, 2).unwrap();
        let cap = 25.0;
        assert!(var > cap);
        for cut in [
            perspective_cut(&p, &RHO, 2, cap).unwrap(),
            plain_cut(&p, &RHO, 2, cap).unwrap(),
        ] {
            assert!((cut.lhs_at(&p) - (var - cap)).abs() < 1e-9);
        }
    }

    #[test]
    fn per_week_rows_sum_to_full_gradient() {
        let p = LossPoint::new(2, 3, vec![5.0, 0.0, 5.0, 1.0, 9.0, 3.0], vec![1.0; 2]).unwrap();
        let full = perspective_cut(&p, &RHO, 2, 1.0).unwrap();
        let rows = perspective_cuts_per_week(&p, &RHO, 2, 1.0).unwrap();
        for idx in 0..6 {
            let sum: f64 = rows.iter().map(|r| r.loss_coefs[idx]).sum();
            assert_eq!(sum, full.loss_coefs[idx]);
        }
    }
}
