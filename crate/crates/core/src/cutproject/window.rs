use serde::{Deserialize, Serialize};

use crate::linalg::{dist, norm};
use crate::{Error, Result};

/// A regular window in internal space: a closed axis-aligned box or a
/// closed Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Window {
    Box { center: Vec<f64>, half_widths: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Window {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        let w = Window::Box {
            center: vec![0.5 * (lo + hi)],
            half_widths: vec![0.5 * (hi - lo)],
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Window::Box { center, half_widths } => {
                if center.len() != half_widths.len() || center.is_empty() {
                    return Err(Error::InvalidScheme("box window dimensions disagree".into()));
                }
                if half_widths.iter().any(|h| !(*h > 0.0)) {
                    return Err(Error::InvalidScheme("box window needs positive half widths".into()));
                }
            }
            Window::Ball { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) {
                    return Err(Error::InvalidScheme("ball window needs a positive radius".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Window::Box { center, .. } | Window::Ball { center, .. } => center.len(),
        }
    }

    pub fn center(&self) -> &[f64] {
        match self {
            Window::Box { center, .. } | Window::Ball { center, .. } => center,
        }
    }

    /// Signed Euclidean distance to the boundary: negative inside, positive outside.
    pub fn signed_distance(&self, h: &[f64]) -> f64 {
        match self {
            Window::Ball { center, radius } => dist(h, center) - radius,
            Window::Box { center, half_widths } => {
                let q: Vec<f64> = h
                    .iter()
                    .zip(center)
                    .zip(half_widths)
                    .map(|((x, c), w)| (x - c).abs() - w)
                    .collect();
                let outside: Vec<f64> = q.iter().map(|v| v.max(0.0)).collect();
                let inside = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max).min(0.0);
                norm(&outside) + inside
            }
        }
    }

    pub fn contains(&self, h: &[f64]) -> bool {
        self.signed_distance(h) <= 0.0
    }

    /// Half extents of the axis-aligned bounding box around the center.
    pub fn half_extents(&self) -> Vec<f64> {
        match self {
            Window::Box { half_widths, .. } => half_widths.clone(),
            Window::Ball { center, radius } => vec![*radius; center.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `χ_W ≤ w_ε ≤ χ_{W+εB}`.
    Upper,
    /// `χ_{W-εB} ≤ w_ε ≤ χ_{W°}`.
    Lower,
    Sharp,
}

/// The sharp window `χ_W` or a continuous trapezoid mollification of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowFn {
    pub window: Window,
    pub epsilon: f64,
    pub side: Side,
}

impl WindowFn {
    pub fn sharp(window: Window) -> Self {
        WindowFn { window, epsilon: 0.0, side: Side::Sharp }
    }

    pub fn new(window: Window, epsilon: f64, side: Side) -> Result<Self> {
        window.validate()?;
        match side {
            Side::Sharp if epsilon != 0.0 => {
                Err(Error::InvalidScheme("a sharp window function has epsilon 0".into()))
            }
            Side::Upper | Side::Lower if !(epsilon > 0.0) => {
                Err(Error::InvalidScheme("mollified window functions need epsilon > 0".into()))
            }
            _ => Ok(WindowFn { window, epsilon, side }),
        }
    }

    /// Half extents of the support's bounding box around the window center.
    pub fn support_half_extents(&self) -> Vec<f64> {
        let pad = if self.side == Side::Upper { self.epsilon } else { 0.0 };
        self.window.half_extents().iter().map(|e| e + pad).collect()
    }
}

/// Evaluates a window function; a piecewise-linear ramp in the signed
/// distance to `∂W`.
pub fn eval_window(wf: &WindowFn, h: &[f64]) -> f64 {
    let s = wf.window.signed_distance(h);
    match wf.side {
        Side::Sharp => f64::from(u8::from(s <= 0.0)),
        Side::Upper => {
            if s <= 0.0 {
                1.0
            } else {
                (1.0 - s / wf.epsilon).max(0.0)
            }
        }
        Side::Lower => {
            if s >= 0.0 {
                0.0
            } else {
                (-s / wf.epsilon).min(1.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Window {
        Window::interval(-0.5, 0.4).unwrap()
    }

    #[test]
    fn signed_distances() {
        let w = unit();
        assert!((w.signed_distance(&[0.0]) + 0.4).abs() < 1e-15);
        assert!((w.signed_distance(&[0.6]) - 0.2).abs() < 1e-15);
        let sq = Window::Box { center: vec![0.0, 0.0], half_widths: vec![1.0, 1.0] };
        assert!((sq.signed_distance(&[2.0, 2.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert!((sq.signed_distance(&[0.5, 0.0]) + 0.5).abs() < 1e-15);
        let ball = Window::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        assert!((ball.signed_distance(&[0.0, 3.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn upper_ramp() {
        let wf = WindowFn::new(unit(), 0.1, Side::Upper).unwrap();
        assert_eq!(eval_window(&wf, &[0.0]), 1.0);
        assert!((eval_window(&wf, &[0.45]) - 0.5).abs() < 1e-12);
        assert_eq!(eval_window(&wf, &[0.6]), 0.0);
    }

    #[test]
    fn lower_ramp() {
        let wf = WindowFn::new(unit(), 0.1, Side::Lower).unwrap();
        assert_eq!(eval_window(&wf, &[0.0]), 1.0);
        assert!((eval_window(&wf, &[0.35]) - 0.5).abs() < 1e-12);
        assert_eq!(eval_window(&wf, &[0.4]), 0.0);
        assert_eq!(eval_window(&wf, &[0.45]), 0.0);
    }

    #[test]
    fn mollified_families_decrease_to_sharp() {
        let sharp = WindowFn::sharp(unit());
        for i in 0..=400 {
            let h = [-1.0 + i as f64 * 0.005];
            if unit().signed_distance(&h).abs() < 1e-12 {
                continue;
            }
            let chi = eval_window(&sharp, &h);
            let mut last = f64::INFINITY;
            for eps in [0.2, 0.1, 0.05] {
                let up = eval_window(&WindowFn::new(unit(), eps, Side::Upper).unwrap(), &h);
                let lo = eval_window(&WindowFn::new(unit(), eps, Side::Lower).unwrap(), &h);
                assert!(lo <= chi && chi <= up);
                assert!(up <= last);
                last = up;
            }
            let fine = eval_window(&WindowFn::new(unit(), 1e-6, Side::Upper).unwrap(), &h);
            assert_eq!(fine, chi);
        }
    }

    #[test]
    fn invalid_families() {
        assert!(WindowFn::new(unit(), 0.1, Side::Sharp).is_err());
        assert!(WindowFn::new(unit(), 0.0, Side::Upper).is_err());
        assert!(Window::interval(1.0, 0.0).is_err());
    }
}
