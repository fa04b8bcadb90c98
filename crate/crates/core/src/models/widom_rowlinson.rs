use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, Configuration, MarkedPoint, Window};

/// Rows per radius used when no quadrature step is configured.
pub const DEFAULT_ROWS_PER_RADIUS: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RadiusLaw {
    Fixed {
        radius: f64,
    },
    /// Radii drawn i.i.d. uniform on `[min, max]` and carried as marks.
    Uniform {
        min: f64,
        max: f64,
    },
}

/// Widom-Rowlinson model: the energy of a configuration is the volume of the
/// union of balls centred at its points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidomRowlinsonSpec {
    pub z: f64,
    pub beta: f64,
    pub radii: RadiusLaw,
    /// Row spacing of the area quadrature (d = 2). Defaults to `R_x / 200`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_resolution: Option<f64>,
}

/// Newly covered volume together with a bound on its quadrature error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaDelta {
    pub value: f64,
    pub error_bound: f64,
}

impl WidomRowlinsonSpec {
    pub fn fixed(z: f64, beta: f64, radius: f64) -> Self {
        Self { z, beta, radii: RadiusLaw::Fixed { radius }, quad_resolution: None }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        super::check_activity(self.z, self.beta)?;
        if dim > 2 {
            return Err(Error::invalid("dim", "widom-rowlinson supports d = 1 or d = 2"));
        }
        match self.radii {
            RadiusLaw::Fixed { radius } => {
                if !(radius.is_finite() && radius >= 0.0) {
                    return Err(Error::invalid("radius", format!("must be finite and >= 0, got {radius}")));
                }
            }
            RadiusLaw::Uniform { min, max } => {
                if !(min >= 0.0 && max.is_finite() && min <= max) {
                    return Err(Error::invalid("radii", format!("need 0 <= min <= max < inf, got [{min}, {max}]")));
                }
            }
        }
        if let Some(h) = self.quad_resolution {
            if !(h > 0.0) {
                return Err(Error::invalid("quad_resolution", format!("must be > 0, got {h}")));
            }
        }
        Ok(())
    }

    pub fn is_marked(&self) -> bool {
        matches!(self.radii, RadiusLaw::Uniform { .. })
    }

    pub fn max_radius(&self) -> f64 {
        match self.radii {
            RadiusLaw::Fixed { radius } => radius,
            RadiusLaw::Uniform { max, .. } => max,
        }
    }

    /// Radius of the ball attached to `p`.
    pub fn radius_of(&self, p: &MarkedPoint) -> Result<f64> {
        match self.radii {
            RadiusLaw::Fixed { radius } => Ok(radius),
            RadiusLaw::Uniform { .. } => p.mark.ok_or(Error::MarkMismatch),
        }
    }

    /// Balls must not meet their own periodic images.
    pub fn validate_window(&self, window: &Window) -> Result<()> {
        if window.is_periodic() && !(4.0 * self.max_radius() < window.side()) {
            return Err(Error::invalid(
                "radius",
                format!(
                    "periodic window of side {} needs radii below side/4, got {}",
                    window.side(),
                    self.max_radius()
                ),
            ));
        }
        Ok(())
    }

    /// Volume of `B(x, R_x)` not covered by the balls of `config`.
    ///
    /// In d = 1 this is exact interval arithmetic. In d = 2 the disc is cut
    /// into rows of spacing `quad_resolution`; each row's uncovered chord is
    /// computed exactly and the row sum is rescaled by the same rule applied
    /// to the bare disc, so an empty neighbourhood returns exactly
    /// `|B(0, R_x)|` and full coverage returns exactly `0`.
    pub fn area_delta(&self, x: &MarkedPoint, config: &Configuration) -> Result<AreaDelta> {
        let rx = self.radius_of(x)?;
        let dim = config.window().dim();
        let full = ball_volume(dim, rx)?;
        if rx == 0.0 {
            return Ok(AreaDelta { value: 0.0, error_bound: 0.0 });
        }
        let mut balls = Vec::new();
        let mut err = None;
        config.for_each_within(&x.pos, rx + self.max_radius(), |id, dist, v| {
            match self.radius_of(&config.points()[id]) {
                Ok(ry) if dist < rx + ry => balls.push((v[0], v[1], ry)),
                Ok(_) => {}
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        // deterministic accumulation regardless of grid visiting order
        balls.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

        if dim == 1 {
            let covered = union_length(balls.iter().map(|&(c, _, r)| (c - r, c + r)), -rx, rx);
            return Ok(AreaDelta { value: (full - covered).max(0.0), error_bound: 0.0 });
        }

        let step = self.quad_resolution.unwrap_or(rx / DEFAULT_ROWS_PER_RADIUS);
        let rows = ((2.0 * rx / step).ceil() as usize).max(1);
        let h = 2.0 * rx / rows as f64;
        let mut chords = 0.0;
        let mut uncovered = 0.0;
        let mut intervals = Vec::with_capacity(balls.len());
        for i in 0..rows {
            let yc = -rx + (i as f64 + 0.5) * h;
            let a = (rx * rx - yc * yc).max(0.0).sqrt();
            intervals.clear();
            for &(cx, cy, r) in &balls {
                let dy = yc - cy;
                if dy.abs() < r {
                    let b = (r * r - dy * dy).sqrt();
                    intervals.push((cx - b, cx + b));
                }
            }
            chords += 2.0 * a;
            uncovered += 2.0 * a - union_length(intervals.iter().copied(), -a, a);
        }
        let value = if chords > 0.0 { (full * uncovered / chords).clamp(0.0, full) } else { full };
        let boundary: f64 = rx + balls.iter().map(|b| b.2).sum::<f64>();
        Ok(AreaDelta { value, error_bound: 2.0 * h * boundary })
    }
}

/// Length of `[lo, hi] ∩ (union of intervals)`.
pub(crate) fn union_length(intervals: impl Iterator<Item = (f64, f64)>, lo: f64, hi: f64) -> f64 {
    let mut clipped: Vec<(f64, f64)> = intervals.map(|(a, b)| (a.max(lo), b.min(hi))).filter(|(a, b)| a < b).collect();
    if clipped.is_empty() {
        return 0.0;
    }
    clipped.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let (mut cur_a, mut cur_b) = clipped[0];
    for &(a, b) in &clipped[1..] {
        if a > cur_b {
            total += cur_b - cur_a;
            cur_a = a;
            cur_b = b;
        } else {
            cur_b = cur_b.max(b);
        }
    }
    total + (cur_b - cur_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Position, Window};
    use std::f64::consts::PI;

    fn pt(c: &[f64]) -> MarkedPoint {
        MarkedPoint::unmarked(Position::new(c).unwrap())
    }

    #[test]
    fn empty_config_gives_full_ball() {
        let spec = WidomRowlinsonSpec::fixed(1.0, 1.0, 0.3);
        let c = Configuration::new(Window::periodic(2.0, 2).unwrap(), false, 0.6);
        let a = spec.area_delta(&pt(&[1.0, 1.0]), &c).unwrap();
        assert_eq!(a.value, PI * 0.09);
    }

    #[test]
    fn concentric_larger_ball_covers_everything() {
        let spec = WidomRowlinsonSpec {
            z: 1.0,
            beta: 1.0,
            radii: RadiusLaw::Uniform { min: 0.1, max: 0.4 },
            quad_resolution: None,
        };
        let w = Window::periodic(2.0, 2).unwrap();
        let big = MarkedPoint::new(Position::new(&[1.0, 1.0]).unwrap(), Some(0.4)).unwrap();
        let c = Configuration::from_points(w, true, 0.8, [big]).unwrap();
        // query slightly off-centre to keep positions distinct
        let small = MarkedPoint::new(Position::new(&[1.0, 1.05]).unwrap(), Some(0.2)).unwrap();
        assert_eq!(spec.area_delta(&small, &c).unwrap().value, 0.0);
    }

    #[test]
    fn two_disc_lens_matches_closed_form() {
        let spec = WidomRowlinsonSpec::fixed(1.0, 1.0, 1.0);
        let w = Window::free(10.0, 2).unwrap();
        let c = Configuration::from_points(w, false, 2.0, [pt(&[5.0, 5.0])]).unwrap();
        let a = spec.area_delta(&pt(&[6.0, 5.0]), &c).unwrap();
        // lens of two unit discs at distance 1: 2 acos(1/2) - (1/2) sqrt(4 - 1)
        let lens = 2.0 * (0.5f64).acos() - 0.5 * 3f64.sqrt();
        let exact = PI - lens;
        assert!((a.value - exact).abs() <= a.error_bound, "{} vs {exact}", a.value);
        assert!((a.value - exact).abs() < 1e-3);
    }

    #[test]
    fn one_dimensional_is_exact() {
        let spec = WidomRowlinsonSpec::fixed(1.0, 1.0, 0.5);
        let w = Window::periodic(4.0, 1).unwrap();
        let c = Configuration::from_points(w, false, 1.0, [pt(&[1.0]), pt(&[3.9])]).unwrap();
        // ball [1.2, 2.2] overlaps [0.5, 1.5] on [1.2, 1.5]
        let a = spec.area_delta(&pt(&[1.7]), &c).unwrap();
        assert!((a.value - 0.7).abs() < 1e-12);
        // around 0.1 the ball [-0.4, 0.6] loses [-0.4, 0.3] to the wrapped
        // point at 3.9 and [0.4, 0.6] to the point at 1.0
        let b = spec.area_delta(&pt(&[0.1]), &c).unwrap();
        assert!((b.value - 0.1).abs() < 1e-12, "{}", b.value);
    }

    #[test]
    fn union_length_merges() {
        let l = union_length([(0.0, 1.0), (0.5, 2.0), (3.0, 4.0)].into_iter(), -1.0, 3.5);
        assert!((l - 2.5).abs() < 1e-15);
    }
}
