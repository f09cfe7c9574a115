//! Planar maps of the cooperation energy gain.
//!
//! The MS sits at the origin and the BS at `(D, 0)`. Fading is ignored: every
//! gain is the pathloss gain of the corresponding distance.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::cooperation_gain;
use crate::error::{domain, Error, Result};
use crate::model::{pathloss_gain, Point2, SystemParams, REFERENCE_DISTANCE_M};
use crate::selection::selection_metric;

/// Cell-centred sampling grid, coordinates in m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// `n × n` cells over `[-0.6 D, 1.6 D]²`.
    pub fn around_link(d_ms_bs: f64, n: usize) -> Self {
        Self {
            x_min: -0.6 * d_ms_bs,
            x_max: 1.6 * d_ms_bs,
            y_min: -0.6 * d_ms_bs,
            y_max: 1.6 * d_ms_bs,
            nx: n,
            ny: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Geometry(format!(
                "grid needs at least 2x2 cells, got {}x{}",
                self.nx, self.ny
            )));
        }
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::Geometry(format!(
                "grid extents are empty: x [{}, {}], y [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + (j as f64 + 0.5) * self.dy()
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }
}

/// Energy-saving fractions sampled on a grid. `values` is row-major with `y`
/// as the outer index; cells on top of the MS or BS hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub zeta: f64,
    pub rate_r: f64,
    pub d_ms_bs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalLocation {
    /// `d1 / D`.
    pub d1_norm: f64,
    /// `d2 / D`.
    pub d2_norm: f64,
    pub position: Point2,
    pub e_saving: f64,
    /// Best value seen on the coarse grid before refinement.
    pub coarse_best: f64,
}

/// Exact cooperation energy gain of a relay at `position`.
pub fn energy_saving_at(
    position: Point2,
    d_ms_bs: f64,
    zeta: f64,
    rate_r: f64,
    params: &SystemParams,
) -> Result<f64> {
    if !(d_ms_bs.is_finite() && d_ms_bs > 0.0) {
        return Err(domain(format!("MS-BS distance must be > 0, got {d_ms_bs}")));
    }
    let d1 = position.distance(&Point2::ORIGIN);
    let d2 = position.distance(&Point2::new(d_ms_bs, 0.0));
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::Geometry(format!(
            "relay at ({}, {}) coincides with a terminal",
            position.x, position.y
        )));
    }
    let h1 = pathloss_gain(d1, params)?;
    let h2 = pathloss_gain(d2, params)?;
    let hd = pathloss_gain(d_ms_bs, params)?;
    cooperation_gain(h1, h2, hd, zeta, rate_r, params)
}

/// `H(R) = -2 η N0 ln(5 Pe) (2^(R/η) - 1) / (3 Gc R K)`, the direct-link
/// radiated energy per bit at unit normalized distance.
pub fn h_factor(rate_r: f64, params: &SystemParams) -> f64 {
    let eta = params.code_rate_etac;
    -2.0 * eta * params.noise_n0 * (5.0 * params.target_ber_pe).ln()
        * (2f64.powf(rate_r / eta) - 1.0)
        / (3.0 * params.coding_gain_gc * rate_r * params.k_gain)
}

/// Closed-form energy gain in normalized distances, using
/// `1 + sqrt(1 - Pe) ≈ 2` in the relaying power factor.
pub fn approx_energy_saving_at(
    d1_norm: f64,
    d2_norm: f64,
    zeta: f64,
    rate_r: f64,
    d_ms_bs: f64,
    params: &SystemParams,
) -> Result<f64> {
    if !(d1_norm > 0.0 && d2_norm > 0.0 && d1_norm.is_finite() && d2_norm.is_finite()) {
        return Err(domain(format!(
            "normalized distances must be > 0, got ({d1_norm}, {d2_norm})"
        )));
    }
    if !(d_ms_bs.is_finite() && d_ms_bs > 0.0) {
        return Err(domain(format!("MS-BS distance must be > 0, got {d_ms_bs}")));
    }
    if zeta == 0.0 {
        return Err(domain("energy saving is undefined at zeta = 0"));
    }
    let p = params.pathloss_p;
    let m_norm = selection_metric(d1_norm.powf(-p), d2_norm.powf(-p), 1.0, zeta)?;
    let h = h_factor(rate_r, params);
    let x = 2f64.powf(rate_r / params.code_rate_etac);
    let l0 = -(5.0 * params.target_ber_pe).ln();
    let circuit = params.p_c / (rate_r * params.bandwidth_b)
        * (d_ms_bs / REFERENCE_DISTANCE_M).powf(-p);
    let num = zeta * h
        - h * (0.5 + 2f64.sqrt().ln() / l0) * (x + 1.0) * m_norm
        - (1.0 - zeta) * circuit / 2.0;
    let den = zeta * h + zeta * circuit;
    Ok(num / den)
}

/// Exact energy gain at every cell centre, evaluated in parallel.
pub fn compute_region_grid(
    spec: GridSpec,
    d_ms_bs: f64,
    zeta: f64,
    rate_r: f64,
    params: &SystemParams,
) -> Result<RegionGrid> {
    spec.validate()?;
    // Surface parameter errors once instead of as a grid of NaNs.
    energy_saving_at(Point2::new(0.5 * d_ms_bs, 0.5 * d_ms_bs), d_ms_bs, zeta, rate_r, params)?;
    let values = (0..spec.nx * spec.ny)
        .into_par_iter()
        .map(|k| {
            let pos = Point2::new(spec.x(k % spec.nx), spec.y(k / spec.nx));
            energy_saving_at(pos, d_ms_bs, zeta, rate_r, params).unwrap_or(f64::NAN)
        })
        .collect();
    Ok(RegionGrid {
        spec,
        values,
        zeta,
        rate_r,
        d_ms_bs,
    })
}

impl RegionGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    /// Cells where relaying saves energy.
    pub fn region_cell_count(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    /// Area of the cooperation region, m².
    pub fn region_area(&self) -> f64 {
        self.region_cell_count() as f64 * self.spec.cell_area()
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `x_m,y_m,e_saving` table, one row per cell.
    pub fn to_table(&self) -> String {
        let mut s = String::from("x_m,y_m,e_saving\n");
        for j in 0..self.spec.ny {
            for i in 0..self.spec.nx {
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    self.spec.x(i),
                    self.spec.y(j),
                    self.value(i, j)
                );
            }
        }
        s
    }

    /// Iso-lines of the surface at each level.
    pub fn contours(&self, levels: &[f64]) -> Vec<Contour> {
        levels
            .iter()
            .flat_map(|&level| {
                marching_squares(&self.values, self.spec.nx, self.spec.ny, level)
                    .into_iter()
                    .map(move |pts| Contour {
                        level,
                        points: pts
                            .into_iter()
                            .map(|(gi, gj)| {
                                Point2::new(
                                    self.spec.x_min + (gi + 0.5) * self.spec.dx(),
                                    self.spec.y_min + (gj + 0.5) * self.spec.dy(),
                                )
                            })
                            .collect(),
                    })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub level: f64,
    pub points: Vec<Point2>,
}

/// `level,polyline,x_m,y_m` listing; polylines are numbered from 0.
pub fn contours_to_table(contours: &[Contour]) -> String {
    let mut s = String::from("level,polyline,x_m,y_m\n");
    for (k, c) in contours.iter().enumerate() {
        for p in &c.points {
            let _ = writeln!(s, "{},{},{},{}", c.level, k, p.x, p.y);
        }
    }
    s
}

/// Grid edge between two adjacent nodes: `(horizontal, i, j)` starts at node
/// `(i, j)`.
type EdgeKey = (bool, usize, usize);

/// Marching squares over node values, returning polylines in fractional node
/// coordinates. Cells touching a NaN are skipped; saddles are split using the
/// cell mean.
fn marching_squares(values: &[f64], nx: usize, ny: usize, level: f64) -> Vec<Vec<(f64, f64)>> {
    let at = |i: usize, j: usize| values[j * nx + i];
    let cross = |key: EdgeKey| -> (f64, f64) {
        let (horizontal, i, j) = key;
        let (a, b) = if horizontal {
            (at(i, j), at(i + 1, j))
        } else {
            (at(i, j), at(i, j + 1))
        };
        let t = ((level - a) / (b - a)).clamp(0.0, 1.0);
        if horizontal {
            (i as f64 + t, j as f64)
        } else {
            (i as f64, j as f64 + t)
        }
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let v = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            if v.iter().any(|x| x.is_nan()) {
                continue;
            }
            let case = v
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &x)| acc | (((x > level) as u8) << k));
            let bottom = (true, i, j);
            let right = (false, i + 1, j);
            let top = (true, i, j + 1);
            let left = (false, i, j);
            let centre_above = v.iter().sum::<f64>() / 4.0 > level;
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if centre_above {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if centre_above {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    // Chain segments sharing an edge crossing into polylines.
    let mut by_edge: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(s);
        by_edge.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut keys = std::collections::VecDeque::from([a, b]);
        for forward in [true, false] {
            loop {
                let end = if forward { *keys.back().unwrap() } else { *keys.front().unwrap() };
                let next = by_edge[&end].iter().copied().find(|&s| !used[s]);
                let Some(s) = next else { break };
                used[s] = true;
                let (p, q) = segments[s];
                let other = if p == end { q } else { p };
                if forward {
                    keys.push_back(other);
                } else {
                    keys.push_front(other);
                }
            }
        }
        lines.push(keys.into_iter().map(cross).collect());
    }
    lines
}

/// Maximizer of the exact energy gain: a 101×101 node grid over
/// `x ∈ [-0.6 D, 1.6 D]`, `y ∈ [0, 1.1 D]`, then a shrinking compass search
/// down to a 0.05 m step.
pub fn optimal_relay_location(
    d_ms_bs: f64,
    zeta: f64,
    rate_r: f64,
    params: &SystemParams,
) -> Result<OptimalLocation> {
    energy_saving_at(Point2::new(0.5 * d_ms_bs, 1.0), d_ms_bs, zeta, rate_r, params)?;
    let f = |p: Point2| {
        energy_saving_at(p, d_ms_bs, zeta, rate_r, params).unwrap_or(f64::NEG_INFINITY)
    };
    const N: usize = 101;
    let (x0, x1) = (-0.6 * d_ms_bs, 1.6 * d_ms_bs);
    let (y0, y1) = (0.0, 1.1 * d_ms_bs);
    let dx = (x1 - x0) / (N - 1) as f64;
    let dy = (y1 - y0) / (N - 1) as f64;
    let coarse: Vec<(f64, Point2)> = (0..N * N)
        .into_par_iter()
        .map(|k| {
            let p = Point2::new(x0 + (k % N) as f64 * dx, y0 + (k / N) as f64 * dy);
            (f(p), p)
        })
        .collect();
    let (mut best, mut at) = coarse
        .iter()
        .copied()
        .fold((f64::NEG_INFINITY, Point2::ORIGIN), |acc, c| if c.0 > acc.0 { c } else { acc });
    let coarse_best = best;

    let mut step = dx.max(dy);
    while step >= 0.05 {
        let mut moved = false;
        for (ux, uy) in [
            (1.0, 0.0),
            (-1.0, 0.0),
            (0.0, 1.0),
            (0.0, -1.0),
            (1.0, 1.0),
            (1.0, -1.0),
            (-1.0, 1.0),
            (-1.0, -1.0),
        ] {
            let p = Point2::new(at.x + ux * step, at.y + uy * step);
            let v = f(p);
            if v > best {
                best = v;
                at = p;
                moved = true;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }

    let d1_norm = at.distance(&Point2::ORIGIN) / d_ms_bs;
    let d2_norm = at.distance(&Point2::new(d_ms_bs, 0.0)) / d_ms_bs;
    debug_assert!(d1_norm + d2_norm >= 1.0 - 1e-12);
    Ok(OptimalLocation {
        d1_norm,
        d2_norm,
        position: at,
        e_saving: best,
        coarse_best,
    })
}
