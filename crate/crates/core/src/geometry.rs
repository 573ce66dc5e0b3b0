//! Inner-product geometry shared by vectors and grid-sampled curves.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Grid, ObservationSet, UnitDirection};

/// `<x, y>`: Euclidean without a grid, trapezoidal `sum w_i x_i y_i` with one.
pub fn dot(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>, grid: Option<&Grid>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    match grid {
        None => Ok(x.dot(&y)),
        Some(g) => {
            if g.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: g.len(),
                    found: x.len(),
                });
            }
            Ok(x.iter()
                .zip(y.iter())
                .zip(g.trapezoid_weights())
                .map(|((a, b), w)| w * a * b)
                .sum())
        }
    }
}

/// Projection `<x, h>` of one observation on a unit direction.
pub fn inner_product(
    x: ArrayView1<'_, f64>,
    h: &UnitDirection,
    grid: Option<&Grid>,
) -> Result<f64> {
    dot(x, h.coords().view(), grid)
}

pub fn norm(x: ArrayView1<'_, f64>, grid: Option<&Grid>) -> Result<f64> {
    Ok(dot(x, x, grid)?.max(0.0).sqrt())
}

pub fn distance(
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
    grid: Option<&Grid>,
) -> Result<f64> {
    let diff = &x - &y;
    norm(diff.view(), grid)
}

/// Projections of the selected rows of `data` on `h`, in the order of `rows`.
pub fn project_rows(data: &ObservationSet, rows: &[usize], h: &UnitDirection) -> Result<Vec<f64>> {
    if h.dim() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            found: h.dim(),
        });
    }
    // Fold the quadrature weights into the direction once.
    let kernel: Array1<f64> = match data.grid() {
        None => h.coords().clone(),
        Some(g) => h.coords() * &ArrayView1::from(g.trapezoid_weights()),
    };
    rows.iter()
        .map(|&i| {
            if i >= data.n() {
                return Err(Error::InvalidInput(format!("row {i} out of range")));
            }
            Ok(data.row(i).dot(&kernel))
        })
        .collect()
}

/// Gaussian law used to draw random directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionLaw {
    /// i.i.d. standard normal coordinates (uniform on the sphere once normalized).
    #[default]
    White,
    /// Random-walk coordinates: cumulative sums of normals scaled by the root
    /// of the local grid spacing (unit spacing without a grid).
    Brownian,
}

impl fmt::Display for DirectionLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::White => "white",
            Self::Brownian => "brownian",
        })
    }
}

impl FromStr for DirectionLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(Self::White),
            "brownian" => Ok(Self::Brownian),
            other => Err(Error::InvalidConfig(format!(
                "unknown direction law '{other}'"
            ))),
        }
    }
}

/// Draws a random unit direction in dimension `d`.
pub fn random_unit_direction<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    law: DirectionLaw,
    grid: Option<&Grid>,
) -> Result<UnitDirection> {
    if d == 0 {
        return Err(Error::InvalidInput(
            "direction dimension must be positive".into(),
        ));
    }
    if let Some(g) = grid {
        if g.len() != d {
            return Err(Error::DimensionMismatch {
                expected: g.len(),
                found: d,
            });
        }
    }
    loop {
        let raw: Array1<f64> = match law {
            DirectionLaw::White => (0..d).map(|_| rng.sample(StandardNormal)).collect(),
            DirectionLaw::Brownian => {
                let steps: Vec<f64> = match grid {
                    Some(g) => {
                        let mut s = g.spacing();
                        // first point gets the width of the first interval
                        s.insert(0, s[0]);
                        s
                    }
                    None => vec![1.0; d],
                };
                let mut acc = 0.0;
                steps
                    .iter()
                    .map(|dt| {
                        let z: f64 = rng.sample(StandardNormal);
                        acc += z * dt.sqrt();
                        acc
                    })
                    .collect()
            }
        };
        // A zero draw has probability zero; redraw rather than fail.
        match UnitDirection::normalize(raw, grid) {
            Ok(h) => return Ok(h),
            Err(Error::InvalidInput(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngStream, DIRECTIONS};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn euclidean_examples() {
        let h = UnitDirection::normalize(array![0.0, 1.0], None).unwrap();
        assert_eq!(
            inner_product(array![1.0, 0.0].view(), &h, None).unwrap(),
            0.0
        );
        let e1 = UnitDirection::normalize(array![1.0, 0.0], None).unwrap();
        assert_eq!(
            inner_product(array![3.0, 4.0].view(), &e1, None).unwrap(),
            3.0
        );
    }

    #[test]
    fn constant_curves_on_unit_grid() {
        let g = Grid::unit_interval();
        let h = UnitDirection::normalize(Array1::from_elem(101, 1.0), Some(&g)).unwrap();
        // the L2-normalized constant is exactly 1
        assert!(h.coords().iter().all(|c| (c - 1.0).abs() < 1e-12));
        let x = Array1::from_elem(101, 2.0);
        assert_abs_diff_eq!(
            inner_product(x.view(), &h, Some(&g)).unwrap(),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn dimension_mismatch_errors() {
        let h = UnitDirection::normalize(array![1.0, 0.0], None).unwrap();
        assert!(inner_product(array![1.0, 0.0, 0.0].view(), &h, None).is_err());
        let g = Grid::uniform(3, 0.0, 1.0).unwrap();
        assert!(inner_product(array![1.0, 0.0].view(), &h, Some(&g)).is_err());
        assert!(random_unit_direction(
            &mut RngStream::new(0, "x").rng(),
            0,
            DirectionLaw::White,
            None
        )
        .is_err());
    }

    #[test]
    fn one_dimensional_directions_are_signs() {
        let mut rng = RngStream::new(1, DIRECTIONS).rng();
        for _ in 0..50 {
            let h = random_unit_direction(&mut rng, 1, DirectionLaw::White, None).unwrap();
            assert_eq!(h.coords()[0].abs(), 1.0);
        }
    }

    #[test]
    fn directions_have_unit_norm_in_both_modes() {
        let g = Grid::unit_interval();
        let mut rng = RngStream::new(2, DIRECTIONS).rng();
        for law in [DirectionLaw::White, DirectionLaw::Brownian] {
            for _ in 0..200 {
                let h = random_unit_direction(&mut rng, 7, law, None).unwrap();
                assert!((norm(h.coords().view(), None).unwrap() - 1.0).abs() < 1e-10);
                let h = random_unit_direction(&mut rng, 101, law, Some(&g)).unwrap();
                assert!((norm(h.coords().view(), Some(&g)).unwrap() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn white_directions_are_centred() {
        // coordinate sd is about 1/sqrt(10); 4 standard errors over 1e4 draws
        let mut rng = RngStream::new(3, DIRECTIONS).rng();
        let draws = 10_000;
        let mut sums = Array1::<f64>::zeros(10);
        for _ in 0..draws {
            sums += random_unit_direction(&mut rng, 10, DirectionLaw::White, None)
                .unwrap()
                .coords();
        }
        for s in sums.iter() {
            assert!((s / draws as f64).abs() < 0.05);
        }
    }

    #[test]
    fn directions_are_reproducible() {
        let s = RngStream::new(9, DIRECTIONS);
        let (mut a, mut b) = (s.rng(), s.rng());
        for _ in 0..10 {
            let ha = random_unit_direction(&mut a, 5, DirectionLaw::Brownian, None).unwrap();
            let hb = random_unit_direction(&mut b, 5, DirectionLaw::Brownian, None).unwrap();
            assert_eq!(ha, hb);
        }
    }

    #[test]
    fn project_rows_matches_inner_product() {
        let g = Grid::uniform(4, 0.0, 3.0).unwrap();
        let data =
            ObservationSet::from_rows(&[vec![1.0, 2.0, 3.0, 4.0], vec![-1.0, 0.5, 0.0, 2.0]])
                .unwrap()
                .with_grid(g.clone())
                .unwrap();
        let h = UnitDirection::normalize(array![1.0, -1.0, 2.0, 0.5], Some(&g)).unwrap();
        let p = project_rows(&data, &[1, 0], &h).unwrap();
        assert_abs_diff_eq!(
            p[0],
            inner_product(data.row(1), &h, Some(&g)).unwrap(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            p[1],
            inner_product(data.row(0), &h, Some(&g)).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn law_parsing() {
        assert_eq!(
            "white".parse::<DirectionLaw>().unwrap(),
            DirectionLaw::White
        );
        assert_eq!(
            "brownian".parse::<DirectionLaw>().unwrap(),
            DirectionLaw::Brownian
        );
        assert!("pink".parse::<DirectionLaw>().is_err());
    }
}
