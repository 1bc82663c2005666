//! DC bias coil: two coaxial filament loops with their axis along x.
//!
//! Maps are taken in the x-z plane through the axis, so z plays the role of
//! the (signed) radial coordinate.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Vacuum permeability (H/m).
pub const MU_0: f64 = 4.0e-7 * PI;

/// Points closer than this to a conductor are rejected (m).
pub const ON_WIRE_TOLERANCE: f64 = 1e-9;

/// Below this parameter [`radial_bracket`] switches to its power series.
const RADIAL_SERIES_M: f64 = 0.1;

/// Complete elliptic integrals K(m) and E(m) by the arithmetic-geometric mean.
///
/// Parameter convention: `m = k^2`. K diverges at m = 1, so `m` must lie in [0, 1).
pub fn elliptic_ke(m: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::invalid(
            "elliptic parameter m",
            format!("{m} is outside [0, 1)"),
        ));
    }
    let mut a = 1.0;
    let mut b = (1.0 - m).sqrt();
    let mut c2_sum = 0.5 * m;
    let mut weight = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        weight *= 2.0;
        c2_sum += weight * c * c;
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
        if c.abs() <= 1e-17 * a {
            break;
        }
    }
    let k = FRAC_PI_2 / a;
    Ok((k, k * (1.0 - c2_sum)))
}

/// Complete elliptic integral of the second kind on the closed interval [0, 1].
pub fn elliptic_e(m: f64) -> Result<f64> {
    if m == 1.0 {
        return Ok(1.0);
    }
    elliptic_ke(m).map(|(_, e)| e)
}

/// Field of a circular filament loop of `turns` turns at a point offset
/// `axial_offset` along its axis and `radial_offset` from it.
///
/// Returns `(B_axial, B_radial)` in tesla. A negative `radial_offset` flips
/// the sign of the radial component.
pub fn loop_field(
    radius: f64,
    turns: f64,
    current: f64,
    axial_offset: f64,
    radial_offset: f64,
) -> Result<(f64, f64)> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(
            "loop radius",
            format!("must be > 0, got {radius}"),
        ));
    }
    let a = radius;
    let z = axial_offset;
    let rho = radial_offset.abs();
    let sign = radial_offset.signum();
    if (rho - a).hypot(z) < ON_WIRE_TOLERANCE {
        return Err(Error::OnWireSingularity {
            tolerance: ON_WIRE_TOLERANCE,
        });
    }
    let scale = MU_0 * turns * current;

    if rho == 0.0 {
        let d2 = a * a + z * z;
        return Ok((scale * a * a / (2.0 * d2 * d2.sqrt()), 0.0));
    }

    let alpha2 = (a - rho).powi(2) + z * z;
    let beta2 = (a + rho).powi(2) + z * z;
    let beta = beta2.sqrt();
    let m = 4.0 * a * rho / beta2;
    let (k, e) = elliptic_ke(m)?;
    let c = scale / PI;

    let b_axial = c / (2.0 * alpha2 * beta) * ((a * a - rho * rho - z * z) * e + alpha2 * k);
    let b_radial = c * z * beta / (2.0 * alpha2 * rho) * radial_bracket(m, k, e);
    Ok((b_axial, sign * b_radial))
}

/// G(m) = (1 - m/2) E(m) - (1 - m) K(m), which vanishes like (3 pi / 32) m^2.
///
/// The direct form loses about log10(1/m^2) digits, so small m goes through
/// the series built from the Taylor coefficients of K and E.
fn radial_bracket(m: f64, k: f64, e: f64) -> f64 {
    if m >= RADIAL_SERIES_M {
        return (1.0 - 0.5 * m) * e - (1.0 - m) * k;
    }
    // K = pi/2 sum kappa_n m^n, E = pi/2 sum -kappa_n/(2n-1) m^n.
    let mut kappa_prev = 1.0;
    let mut eps_prev = 1.0;
    let mut power = m;
    let mut acc = 0.0;
    for n in 1..40 {
        let ratio = (2 * n - 1) as f64 / (2 * n) as f64;
        let kappa = kappa_prev * ratio * ratio;
        let eps = -kappa / (2 * n - 1) as f64;
        let g = eps - 0.5 * eps_prev - kappa + kappa_prev;
        let term = g * power;
        acc += term;
        if n > 2 && term.abs() < 1e-18 * acc.abs() {
            break;
        }
        kappa_prev = kappa;
        eps_prev = eps;
        power *= m;
    }
    FRAC_PI_2 * acc
}

/// Brute-force Biot-Savart sum over `segments` arc elements (midpoint rule).
///
/// Independent of the elliptic-integral path; used to cross-check it.
pub fn loop_field_brute_force(
    radius: f64,
    turns: f64,
    current: f64,
    axial_offset: f64,
    radial_offset: f64,
    segments: usize,
) -> (f64, f64) {
    // Loop in the xy plane, observation point at (rho, 0, z).
    let dphi = 2.0 * PI / segments as f64;
    let (mut bx, mut bz) = (0.0, 0.0);
    for i in 0..segments {
        let phi = (i as f64 + 0.5) * dphi;
        let (s, c) = phi.sin_cos();
        let dl = [-radius * s * dphi, radius * c * dphi, 0.0];
        let r = [radial_offset - radius * c, -radius * s, axial_offset];
        let d2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
        let inv3 = 1.0 / (d2 * d2.sqrt());
        // dl x r; the y component integrates to zero.
        bx += (dl[1] * r[2] - dl[2] * r[1]) * inv3;
        bz += (dl[0] * r[1] - dl[1] * r[0]) * inv3;
    }
    let k = MU_0 * turns * current / (4.0 * PI);
    (k * bz, k * bx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilGeometry {
    /// m.
    pub loop_radius: f64,
    /// Center-to-center distance along x (m).
    pub loop_separation: f64,
    pub turns_per_loop: u32,
    /// A.
    pub current: f64,
}

impl CoilGeometry {
    /// Separation equal to the radius.
    pub fn helmholtz(radius: f64, turns_per_loop: u32, current: f64) -> Self {
        Self {
            loop_radius: radius,
            loop_separation: radius,
            turns_per_loop,
            current,
        }
    }

    /// Illustrative coil with about 1.76 mT/A at its center: R = 5 cm, 98 turns per loop.
    pub fn example() -> Self {
        Self::helmholtz(0.05, 98, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.loop_radius.is_finite() && self.loop_radius > 0.0) {
            return Err(Error::invalid("CoilGeometry loop_radius", "must be > 0"));
        }
        if !(self.loop_separation.is_finite() && self.loop_separation > 0.0) {
            return Err(Error::invalid(
                "CoilGeometry loop_separation",
                "must be > 0",
            ));
        }
        if self.turns_per_loop == 0 {
            return Err(Error::invalid(
                "CoilGeometry turns_per_loop",
                "must be >= 1",
            ));
        }
        if !self.current.is_finite() {
            return Err(Error::invalid("CoilGeometry current", "must be finite"));
        }
        Ok(())
    }

    /// Total field (Bx, Bz) at (x, z) from both loops.
    pub fn field_at(&self, x: f64, z: f64) -> Result<(f64, f64)> {
        let half = 0.5 * self.loop_separation;
        let turns = self.turns_per_loop as f64;
        let (a1, r1) = loop_field(self.loop_radius, turns, self.current, x - half, z)?;
        let (a2, r2) = loop_field(self.loop_radius, turns, self.current, x + half, z)?;
        Ok((a1 + a2, r1 + r2))
    }
}

/// Symmetric grid of `(2*half_nodes_x + 1) x (2*half_nodes_z + 1)` nodes
/// centered on the coil center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_nodes_x: usize,
    pub half_nodes_z: usize,
    /// m.
    pub spacing: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::invalid("GridSpec spacing", "must be > 0"));
        }
        Ok(())
    }
}

/// Bx sampled on a rectangular x-z grid, stored row by row (z outer, x inner).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub x_min: f64,
    pub z_min: f64,
    pub spacing: f64,
    pub nx: usize,
    pub nz: usize,
    pub values: Vec<f64>,
}

impl FieldMap {
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.spacing
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// Uniform map, mostly for tests.
    pub fn uniform(grid: &GridSpec, value: f64) -> Self {
        let nx = 2 * grid.half_nodes_x + 1;
        let nz = 2 * grid.half_nodes_z + 1;
        Self {
            x_min: -(grid.half_nodes_x as f64) * grid.spacing,
            z_min: -(grid.half_nodes_z as f64) * grid.spacing,
            spacing: grid.spacing,
            nx,
            nz,
            values: vec![value; nx * nz],
        }
    }

    fn center_node(&self) -> Result<(usize, usize)> {
        let i = (-self.x_min / self.spacing).round();
        let j = (-self.z_min / self.spacing).round();
        let tol = 1e-6 * self.spacing;
        if i < 0.0
            || j < 0.0
            || i as usize >= self.nx
            || j as usize >= self.nz
            || (self.x_min + i * self.spacing).abs() > tol
            || (self.z_min + j * self.spacing).abs() > tol
        {
            return Err(Error::NoCenterNode);
        }
        Ok((i as usize, j as usize))
    }
}

/// Sample Bx of both loops over `grid`, evaluating rows in parallel.
pub fn helmholtz_map(geometry: &CoilGeometry, grid: &GridSpec) -> Result<FieldMap> {
    build_map(geometry, grid, true)
}

/// Serial twin of [`helmholtz_map`]; results are bit-identical.
pub fn helmholtz_map_serial(geometry: &CoilGeometry, grid: &GridSpec) -> Result<FieldMap> {
    build_map(geometry, grid, false)
}

fn build_map(geometry: &CoilGeometry, grid: &GridSpec, parallel: bool) -> Result<FieldMap> {
    geometry.validate()?;
    grid.validate()?;
    let mut map = FieldMap::uniform(grid, 0.0);
    let nx = map.nx;
    let row = |j: usize| -> Result<Vec<f64>> {
        let z = map.z(j);
        (0..nx)
            .map(|i| geometry.field_at(map.x(i), z).map(|(bx, _)| bx))
            .collect()
    };
    let rows: Vec<Vec<f64>> = if parallel {
        (0..map.nz)
            .into_par_iter()
            .map(row)
            .collect::<Result<_>>()?
    } else {
        (0..map.nz).map(row).collect::<Result<_>>()?
    };
    map.values = rows.concat();
    Ok(map)
}

/// Field at the center per ampere of current (T/A).
pub fn center_sensitivity(geometry: &CoilGeometry) -> Result<f64> {
    let unit = CoilGeometry {
        current: 1.0,
        ..*geometry
    };
    unit.validate()?;
    Ok(unit.field_at(0.0, 0.0)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneityRegion {
    /// Full width along the coil axis (m), symmetric about the center.
    pub axial_extent: f64,
    /// Full width across the axis (m), symmetric about the center.
    pub radial_extent: f64,
    pub level: f64,
}

/// Largest centered rectangle whose nodes all stay within `1 - level` of the
/// center value.
///
/// The rectangle grows one node per side at a time, alternating axial and
/// radial, until neither direction can grow.
pub fn homogeneity_region(map: &FieldMap, level: f64) -> Result<HomogeneityRegion> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(
            "homogeneity level",
            format!("{level} is outside (0, 1)"),
        ));
    }
    let (ci, cj) = map.center_node()?;
    let b0 = map.at(ci, cj);
    if b0.abs() < 1e-18 {
        return Err(Error::ZeroCenterField(b0));
    }
    let tol = 1.0 - level;
    let ok = |i: usize, j: usize| ((map.at(i, j) - b0) / b0).abs() <= tol;

    let max_hx = ci.min(map.nx - 1 - ci);
    let max_hz = cj.min(map.nz - 1 - cj);
    let (mut hx, mut hz) = (0usize, 0usize);
    loop {
        let mut grew = false;
        if hx < max_hx {
            let n = hx + 1;
            if (cj - hz..=cj + hz).all(|j| ok(ci - n, j) && ok(ci + n, j)) {
                hx = n;
                grew = true;
            }
        }
        if hz < max_hz {
            let n = hz + 1;
            if (ci - hx..=ci + hx).all(|i| ok(i, cj - n) && ok(i, cj + n)) {
                hz = n;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    Ok(HomogeneityRegion {
        axial_extent: 2.0 * hx as f64 * map.spacing,
        radial_extent: 2.0 * hz as f64 * map.spacing,
        level,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChamberAxis {
    AlongCoilAxis,
    AlongDriveAxis,
}

/// Whether a centered cylinder of the given size fits inside `region`.
pub fn chamber_fit(
    region: &HomogeneityRegion,
    chamber_diameter: f64,
    chamber_length: f64,
    axis: ChamberAxis,
) -> bool {
    let (axial, radial) = match axis {
        ChamberAxis::AlongCoilAxis => (chamber_length, chamber_diameter),
        ChamberAxis::AlongDriveAxis => (chamber_diameter, chamber_length),
    };
    axial <= region.axial_extent && radial <= region.radial_extent
}
