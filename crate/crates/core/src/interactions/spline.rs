//! Spline-distributed actuation couples.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::kinematics::{SectionProperties, Vec3};

/// Local axis a couple acts about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TorqueDirection {
    D1,
    D2,
    D3,
}

impl TorqueDirection {
    pub fn axis(self) -> usize {
        match self {
            TorqueDirection::D1 => 0,
            TorqueDirection::D2 => 1,
            TorqueDirection::D3 => 2,
        }
    }
}

/// Natural cubic spline through `(0, 0)`, `(knots[j], values[j])`, `(length, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second_derivatives: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(knots: &[f64], values: &[f64], length: f64) -> Result<Self, Error> {
        check_knots(knots, length)?;
        if values.len() != knots.len() {
            return Err(Error::Dimension { expected: knots.len(), got: values.len() });
        }
        let mut xs = Vec::with_capacity(knots.len() + 2);
        xs.push(0.0);
        xs.extend_from_slice(knots);
        xs.push(length);
        let mut ys = Vec::with_capacity(knots.len() + 2);
        ys.push(0.0);
        ys.extend_from_slice(values);
        ys.push(0.0);

        // Thomas algorithm on the interior second derivatives; the natural
        // end conditions pin them to zero at both ends.
        let m = knots.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut diag = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let j = i + 1;
            diag[i] = 2.0 * (h[j - 1] + h[j]);
            rhs[i] = 6.0 * ((ys[j + 1] - ys[j]) / h[j] - (ys[j] - ys[j - 1]) / h[j - 1]);
        }
        for i in 1..m {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * h[i];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut second_derivatives = vec![0.0; m + 2];
        for i in (0..m).rev() {
            let upper = if i + 1 < m { h[i + 1] * second_derivatives[i + 2] } else { 0.0 };
            second_derivatives[i + 1] = (rhs[i] - upper) / diag[i];
        }
        Ok(NaturalSpline { xs, ys, second_derivatives })
    }

    pub fn evaluate(&self, s: f64) -> f64 {
        let last = self.xs.len() - 2;
        let seg = self.xs[1..=last].partition_point(|&x| x <= s).min(last);
        let (x0, x1) = (self.xs[seg], self.xs[seg + 1]);
        let (y0, y1) = (self.ys[seg], self.ys[seg + 1]);
        let (m0, m1) = (self.second_derivatives[seg], self.second_derivatives[seg + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - s, s - x0);
        m0 * a.powi(3) / (6.0 * h) + m1 * b.powi(3) / (6.0 * h) + (y0 / h - m0 * h / 6.0) * a + (y1 / h - m1 * h / 6.0) * b
    }
}

fn check_knots(knots: &[f64], length: f64) -> Result<(), Error> {
    if knots.is_empty() {
        return Err(Error::config("knots", "at least one control point is required"));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::config("knots", format!("rod length must be positive, got {length}")));
    }
    for (j, &k) in knots.iter().enumerate() {
        if !(k > 0.0 && k < length) {
            return Err(Error::config(format!("knots[{j}]"), format!("{k} is outside (0, {length})")));
        }
        if j > 0 && k <= knots[j - 1] {
            return Err(Error::config(format!("knots[{j}]"), "knots must be strictly increasing"));
        }
    }
    Ok(())
}

/// Samples the actuation spline at `s_grid`.
pub fn evaluate_spline(control_points: &[f64], knots: &[f64], length: f64, s_grid: &[f64]) -> Result<Vec<f64>, Error> {
    let spline = NaturalSpline::new(knots, control_points, length)?;
    Ok(s_grid.iter().map(|&s| spline.evaluate(s)).collect())
}

/// `knots.len()` equidistant control points strictly inside `(0, length)`.
pub fn equidistant_knots(count: usize, length: f64) -> Vec<f64> {
    (1..=count).map(|j| j as f64 * length / (count + 1) as f64).collect()
}

/// Maps a flat action vector to couple densities on the elements.
///
/// The action is laid out direction-major: all control points of
/// `directions[0]`, then all of `directions[1]`, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineActuation {
    directions: Vec<TorqueDirection>,
    knots: Vec<f64>,
    torque_scale: f64,
    /// Spline of the unit vector on knot `j`, sampled at element midpoints.
    basis: Vec<Vec<f64>>,
}

impl SplineActuation {
    pub fn new(
        directions: &[TorqueDirection],
        knots: &[f64],
        torque_scale: f64,
        props: &SectionProperties,
    ) -> Result<Self, Error> {
        if directions.is_empty() {
            return Err(Error::config("actuation.directions", "at least one direction is required"));
        }
        for (i, d) in directions.iter().enumerate() {
            if directions[..i].contains(d) {
                return Err(Error::config(format!("actuation.directions[{i}]"), "duplicate direction"));
            }
        }
        if !(torque_scale >= 0.0 && torque_scale.is_finite()) {
            return Err(Error::config("actuation.torque_scale", "must be finite and non-negative"));
        }
        let length = props.total_length();
        check_knots(knots, length)?;
        let midpoints = props.element_midpoints();
        let mut unit = vec![0.0; knots.len()];
        let mut basis = Vec::with_capacity(knots.len());
        for j in 0..knots.len() {
            unit.fill(0.0);
            unit[j] = 1.0;
            basis.push(evaluate_spline(&unit, knots, length, &midpoints)?);
        }
        Ok(SplineActuation { directions: directions.to_vec(), knots: knots.to_vec(), torque_scale, basis })
    }

    pub fn action_size(&self) -> usize {
        self.directions.len() * self.knots.len()
    }

    pub fn directions(&self) -> &[TorqueDirection] {
        &self.directions
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Overwrites `couples` (one per element, local frame). Action entries
    /// are clamped to `[-1, 1]`.
    pub fn build_into(&self, action: &[f64], couples: &mut [Vec3]) -> Result<(), Error> {
        if action.len() != self.action_size() {
            return Err(Error::Dimension { expected: self.action_size(), got: action.len() });
        }
        if let Some(index) = action.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFiniteAction { index });
        }
        couples.iter_mut().for_each(|c| *c = Vec3::zeros());
        let n = self.knots.len();
        for (d, dir) in self.directions.iter().enumerate() {
            let axis = dir.axis();
            for (j, basis) in self.basis.iter().enumerate() {
                let value = self.torque_scale * action[d * n + j].clamp(-1.0, 1.0);
                if value == 0.0 {
                    continue;
                }
                for (c, b) in couples.iter_mut().zip(basis) {
                    c[axis] += value * b;
                }
            }
        }
        Ok(())
    }
}

pub fn build_actuation_couples(action: &[f64], actuation: &SplineActuation, elements: usize) -> Result<Vec<Vec3>, Error> {
    let mut couples = vec![Vec3::zeros(); elements];
    actuation.build_into(action, &mut couples)?;
    Ok(couples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_control_points_give_zero_profile() {
        let s: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let p = evaluate_spline(&[0.0; 6], &equidistant_knots(6, 1.0), 1.0, &s).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ends_vanish_exactly() {
        let knots = [0.2, 0.45, 0.9];
        let sp = NaturalSpline::new(&knots, &[0.7, -1.0, 0.3], 2.0).unwrap();
        assert_eq!(sp.evaluate(0.0), 0.0);
        assert_eq!(sp.evaluate(2.0), 0.0);
    }

    #[test]
    fn single_point_interpolates_and_scales_linearly() {
        // By hand: M1 = -12, so S(1/4) = -12 (1/4)^3 / 3 + 3 / 4 = 11/16.
        let sp = NaturalSpline::new(&[0.5], &[1.0], 1.0).unwrap();
        assert!((sp.evaluate(0.5) - 1.0).abs() < 1e-15);
        assert!((sp.evaluate(0.25) - 0.6875).abs() < 1e-15);
        let sp2 = NaturalSpline::new(&[0.5], &[2.0], 1.0).unwrap();
        for s in [0.1, 0.3, 0.77] {
            assert!((sp2.evaluate(s) - 2.0 * sp.evaluate(s)).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_dense_natural_spline_solve() {
        // Independent oracle: assemble the full system for all nodes
        // (including the pinned natural ends) and solve by Gaussian elimination.
        let xs = [0.0, 0.1, 0.35, 0.5, 0.8, 1.0];
        let ys = [0.0, 0.4, -0.2, 0.9, 0.1, 0.0];
        let n = xs.len();
        let mut a = vec![vec![0.0f64; n + 1]; n];
        a[0][0] = 1.0;
        a[n - 1][n - 1] = 1.0;
        for i in 1..n - 1 {
            let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
            a[i][i - 1] = h0 / 6.0;
            a[i][i] = (h0 + h1) / 3.0;
            a[i][i + 1] = h1 / 6.0;
            a[i][n] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            for r in 0..n {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        let m: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
        let sp = NaturalSpline::new(&xs[1..n - 1], &ys[1..n - 1], 1.0).unwrap();
        for &s in &[0.05, 0.2, 0.4, 0.66, 0.95] {
            let i = xs.windows(2).position(|w| s >= w[0] && s <= w[1]).unwrap();
            let h = xs[i + 1] - xs[i];
            let t = (s - xs[i]) / h;
            // Linear interpolant plus the second-derivative correction.
            let expected = (1.0 - t) * ys[i] + t * ys[i + 1]
                - h * h / 6.0 * ((1.0 - t) * (1.0 - (1.0 - t).powi(2)) * m[i] + t * (1.0 - t * t) * m[i + 1]);
            assert!((sp.evaluate(s) - expected).abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(NaturalSpline::new(&[0.5, 0.4], &[1.0, 1.0], 1.0).is_err());
        assert!(NaturalSpline::new(&[0.5, 0.5], &[1.0, 1.0], 1.0).is_err());
        assert!(NaturalSpline::new(&[0.0], &[1.0], 1.0).is_err());
        assert!(NaturalSpline::new(&[1.0], &[1.0], 1.0).is_err());
        assert!(NaturalSpline::new(&[], &[], 1.0).is_err());
    }

    #[test]
    fn action_sizes_follow_directions_times_points() {
        let props = SectionProperties::uniform(50, 1.0, 0.025, 1000.0, 1e7, 0.5).unwrap();
        let knots = equidistant_knots(6, 1.0);
        let two = SplineActuation::new(&[TorqueDirection::D1, TorqueDirection::D2], &knots, 1.0, &props).unwrap();
        let three = SplineActuation::new(
            &[TorqueDirection::D1, TorqueDirection::D2, TorqueDirection::D3],
            &knots,
            1.0,
            &props,
        )
        .unwrap();
        assert_eq!(two.action_size(), 12);
        assert_eq!(three.action_size(), 18);
        assert!(matches!(two.build_into(&[0.0; 11], &mut [Vec3::zeros(); 50]), Err(Error::Dimension { expected: 12, got: 11 })));
    }

    #[test]
    fn couples_lie_along_requested_axis_and_clamp() {
        let props = SectionProperties::uniform(20, 1.0, 0.025, 1000.0, 1e7, 0.5).unwrap();
        let act = SplineActuation::new(&[TorqueDirection::D3], &[0.4, 0.9], 2.0, &props).unwrap();
        let c = build_actuation_couples(&[5.0, 0.0], &act, 20).unwrap();
        let c1 = build_actuation_couples(&[1.0, 0.0], &act, 20).unwrap();
        assert_eq!(c, c1);
        assert!(c.iter().all(|v| v.x == 0.0 && v.y == 0.0));
        let mid = props.element_midpoints();
        let i = mid.iter().position(|&s| (s - 0.425).abs() < 1e-9).unwrap();
        let expected = 2.0 * evaluate_spline(&[1.0, 0.0], &[0.4, 0.9], 1.0, &[mid[i]]).unwrap()[0];
        assert!((c[i].z - expected).abs() < 1e-15);
        assert!(build_actuation_couples(&[f64::NAN, 0.0], &act, 20).is_err());
    }
}
