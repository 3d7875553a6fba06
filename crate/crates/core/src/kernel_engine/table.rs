//! Cached `p(s, r)` tables with bilinear interpolation in `(ln s, r)`.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::format::{
    expect_magic, fmt17, parse_f64, parse_usize, read_f64, read_f64s, read_u64, write_f64,
    write_f64s, write_u64,
};
use crate::parallel::par_map;
use crate::stable_core::{levy_constant, sphere_area, StableParams};

use super::density::{stable_density_with, DensityConfig};

const TABLE_MAGIC: &[u8; 8] = b"SLKTAB01";

/// Sampled transition densities with an accuracy bound covering quadrature and
/// interpolation error.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    params: StableParams,
    s_grid: Vec<f64>,
    r_grid: Vec<f64>,
    values: Vec<f64>,
    accuracy: f64,
}

impl KernelTable {
    pub fn build(params: StableParams, s_grid: Vec<f64>, r_grid: Vec<f64>, cfg: &DensityConfig) -> Result<Self> {
        check_grids(&s_grid, &r_grid)?;
        let (ns, nr) = (s_grid.len(), r_grid.len());
        let cells = par_map(ns * nr, |k| {
            stable_density_with(params, s_grid[k / nr], r_grid[k % nr], cfg)
        });
        let mut values = Vec::with_capacity(ns * nr);
        let mut quad_err: f64 = 0.0;
        for c in cells {
            let v = c?;
            quad_err = quad_err.max(v.abs_error);
            values.push(v.value.max(0.0));
        }
        let mut table = Self {
            params,
            s_grid,
            r_grid,
            values,
            accuracy: quad_err,
        };
        table.accuracy = quad_err + table.interpolation_error(cfg)?;
        Ok(table)
    }

    pub fn from_parts(
        params: StableParams,
        s_grid: Vec<f64>,
        r_grid: Vec<f64>,
        values: Vec<f64>,
        accuracy: f64,
    ) -> Result<Self> {
        check_grids(&s_grid, &r_grid)?;
        if values.len() != s_grid.len() * r_grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a {}x{} table",
                values.len(),
                s_grid.len(),
                r_grid.len()
            )));
        }
        Ok(Self {
            params,
            s_grid,
            r_grid,
            values,
            accuracy,
        })
    }

    // compare interpolants against direct evaluation at cell centers (strided for large tables)
    fn interpolation_error(&self, cfg: &DensityConfig) -> Result<f64> {
        let (ns, nr) = (self.s_grid.len(), self.r_grid.len());
        if ns < 2 || nr < 2 {
            return Ok(0.0);
        }
        let stride_s = ((ns - 1) / 16).max(1);
        let stride_r = ((nr - 1) / 16).max(1);
        let mut probes = Vec::new();
        for i in (0..ns - 1).step_by(stride_s) {
            for j in (0..nr - 1).step_by(stride_r) {
                let s = (self.s_grid[i] * self.s_grid[i + 1]).sqrt();
                let r = 0.5 * (self.r_grid[j] + self.r_grid[j + 1]);
                probes.push((s, r));
            }
        }
        let errs = par_map(probes.len(), |k| {
            let (s, r) = probes[k];
            stable_density_with(self.params, s, r, cfg)
                .map(|v| (v.value - self.interpolate(s, r).unwrap_or(v.value)).abs())
        });
        let mut worst: f64 = 0.0;
        for e in errs {
            worst = worst.max(e?);
        }
        Ok(worst)
    }

    pub fn params(&self) -> StableParams {
        self.params
    }
    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }
    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn value(&self, i_s: usize, i_r: usize) -> f64 {
        self.values[i_s * self.r_grid.len() + i_r]
    }

    /// Bilinear interpolation in `(ln s, r)`; `None` outside the table.
    pub fn interpolate(&self, s: f64, r: f64) -> Option<f64> {
        let (is, fs) = bracket_log(&self.s_grid, s)?;
        let (ir, fr) = bracket(&self.r_grid, r)?;
        let nr = self.r_grid.len();
        let at = |i: usize, j: usize| {
            let i = i.min(self.s_grid.len() - 1);
            let j = j.min(nr - 1);
            self.values[i * nr + j]
        };
        let v0 = at(is, ir) * (1.0 - fr) + at(is, ir + 1) * fr;
        let v1 = at(is + 1, ir) * (1.0 - fr) + at(is + 1, ir + 1) * fr;
        Some(v0 * (1.0 - fs) + v1 * fs)
    }

    /// Radial mass `|S^{d-1}| int p r^{d-1} dr` for row `i_s`: trapezoid on the grid plus
    /// the analytic tail `c s |S^{d-1}| R^(-alpha) / alpha` beyond the last radius.
    pub fn radial_mass(&self, i_s: usize) -> f64 {
        let d = self.params.d() as i32;
        let area = sphere_area(self.params.d());
        let nr = self.r_grid.len();
        let row = &self.values[i_s * nr..(i_s + 1) * nr];
        let mut m = 0.0;
        for j in 0..nr - 1 {
            let (r0, r1) = (self.r_grid[j], self.r_grid[j + 1]);
            m += 0.5 * (r1 - r0) * (row[j] * r0.powi(d - 1) + row[j + 1] * r1.powi(d - 1));
        }
        let big_r = self.r_grid[nr - 1];
        let a = self.params.alpha();
        let tail = levy_constant(self.params) * self.s_grid[i_s] * big_r.powf(-a) / a;
        area * (m + tail)
    }

    /// Nonnegativity and radial monotonicity, up to `accuracy`.
    pub fn check_invariants(&self) -> Result<()> {
        let nr = self.r_grid.len();
        for (i, row) in self.values.chunks(nr).enumerate() {
            for j in 0..nr {
                if row[j] < -self.accuracy {
                    return Err(Error::Positivity {
                        min: row[j],
                        floor: -self.accuracy,
                    });
                }
                if j > 0 && row[j] > row[j - 1] + self.accuracy {
                    return Err(Error::Domain(format!(
                        "p(s={}, r) increases between r={} and r={}",
                        self.s_grid[i],
                        self.r_grid[j - 1],
                        self.r_grid[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let join = |v: &[f64]| v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(",");
        writeln!(w, "d,{}", self.params.d())?;
        writeln!(w, "alpha,{}", fmt17(self.params.alpha()))?;
        writeln!(w, "accuracy,{}", fmt17(self.accuracy))?;
        writeln!(w, "s_grid,{}", join(&self.s_grid))?;
        writeln!(w, "r_grid,{}", join(&self.r_grid))?;
        writeln!(w, "s,r,p")?;
        let nr = self.r_grid.len();
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{}", fmt17(self.s_grid[k / nr]), fmt17(self.r_grid[k % nr]), fmt17(*v))?;
        }
        Ok(())
    }

    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let mut field = |key: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing `{key}` line")))??;
            let mut parts = line.trim_end().split(',').map(str::to_string);
            match parts.next() {
                Some(k) if k == key => Ok(parts.collect()),
                other => Err(Error::Format(format!("expected `{key}`, found {other:?}"))),
            }
        };
        let d = parse_usize(&field("d")?.concat())?;
        let alpha = parse_f64(&field("alpha")?.concat())?;
        let accuracy = parse_f64(&field("accuracy")?.concat())?;
        let s_grid = field("s_grid")?.iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>()?;
        let r_grid = field("r_grid")?.iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>()?;
        let header = field("s")?;
        if header != ["r", "p"] {
            return Err(Error::Format("expected header `s,r,p`".into()));
        }
        let mut values = Vec::with_capacity(s_grid.len() * r_grid.len());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let p = line
                .rsplit(',')
                .next()
                .ok_or_else(|| Error::Format("empty row".into()))?;
            values.push(parse_f64(p)?);
        }
        Self::from_parts(StableParams::new(d, alpha)?, s_grid, r_grid, values, accuracy)
    }

    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(TABLE_MAGIC)?;
        write_u64(w, self.params.d() as u64)?;
        write_f64(w, self.params.alpha())?;
        write_f64(w, self.accuracy)?;
        write_u64(w, self.s_grid.len() as u64)?;
        write_u64(w, self.r_grid.len() as u64)?;
        write_f64s(w, &self.s_grid)?;
        write_f64s(w, &self.r_grid)?;
        write_f64s(w, &self.values)
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        expect_magic(r, TABLE_MAGIC)?;
        let d = read_u64(r)? as usize;
        let alpha = read_f64(r)?;
        let accuracy = read_f64(r)?;
        let ns = read_u64(r)? as usize;
        let nr = read_u64(r)? as usize;
        let s_grid = read_f64s(r, ns)?;
        let r_grid = read_f64s(r, nr)?;
        let values = read_f64s(r, ns * nr)?;
        Self::from_parts(StableParams::new(d, alpha)?, s_grid, r_grid, values, accuracy)
    }
}

fn check_grids(s_grid: &[f64], r_grid: &[f64]) -> Result<()> {
    if s_grid.is_empty() || r_grid.is_empty() {
        return Err(Error::Shape("empty table grid".into()));
    }
    if s_grid[0] <= 0.0 || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Shape("s_grid must be positive and strictly increasing".into()));
    }
    if r_grid[0] < 0.0 || r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Shape("r_grid must be nonnegative and strictly increasing".into()));
    }
    Ok(())
}

fn bracket(grid: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = grid.len();
    if n == 1 {
        return (x == grid[0]).then_some((0, 0.0));
    }
    if x < grid[0] || x > grid[n - 1] {
        return None;
    }
    let i = grid.partition_point(|&g| g <= x).saturating_sub(1).min(n - 2);
    Some((i, (x - grid[i]) / (grid[i + 1] - grid[i])))
}

fn bracket_log(grid: &[f64], x: f64) -> Option<(usize, f64)> {
    let (i, _) = bracket(grid, x)?;
    if grid.len() == 1 {
        return Some((0, 0.0));
    }
    Some((i, (x / grid[i]).ln() / (grid[i + 1] / grid[i]).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> KernelTable {
        let p = StableParams::new(1, 1.0).unwrap();
        KernelTable::build(p, vec![0.5, 1.0, 2.0], vec![0.0, 0.5, 1.0, 2.0], &DensityConfig::default()).unwrap()
    }

    #[test]
    fn grid_nodes_reproduce_values() {
        let t = small();
        let v = t.interpolate(1.0, 0.5).unwrap();
        assert!((v - t.value(1, 1)).abs() < 1e-15);
        assert!(t.interpolate(3.0, 0.5).is_none());
        t.check_invariants().unwrap();
        assert!(t.accuracy() > 0.0);
    }

    #[test]
    fn text_and_binary_round_trip() {
        let t = small();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(KernelTable::read_csv(&buf[..]).unwrap(), t);
        let mut bin = Vec::new();
        t.write_binary(&mut bin).unwrap();
        assert_eq!(&bin[..8], TABLE_MAGIC);
        assert_eq!(KernelTable::read_binary(&mut &bin[..]).unwrap(), t);
    }

    #[test]
    fn bad_grids() {
        let p = StableParams::new(1, 1.0).unwrap();
        assert!(KernelTable::build(p, vec![0.0, 1.0], vec![0.0], &DensityConfig::default()).is_err());
        assert!(KernelTable::build(p, vec![1.0], vec![1.0, 0.5], &DensityConfig::default()).is_err());
    }
}
