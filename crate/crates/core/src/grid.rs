//! Uniform lattices carrying sampled functions, optionally stacked over heights.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::format::{
    expect_magic, fmt17, parse_f64, parse_usize, read_f64, read_f64s, read_u64, write_f64,
    write_f64s, write_u64,
};

const GRID_MAGIC: &[u8; 8] = b"SLGRID01";

/// Values at one height `t` over the base lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct TSlice {
    pub t: f64,
    pub values: Vec<f64>,
}

/// A function sampled on `origin + h * i`, `0 <= i < extent`, row-major with the last axis
/// fastest. The base `values` are usually boundary data; `slices` hold the same lattice
/// at increasing heights.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    origin: Vec<f64>,
    spacing: f64,
    extent: Vec<usize>,
    values: Vec<f64>,
    slices: Vec<TSlice>,
}

impl GridFunction {
    pub fn new(origin: Vec<f64>, spacing: f64, extent: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "spacing",
                reason: format!("{spacing} must be positive"),
            });
        }
        if origin.len() != extent.len() || extent.is_empty() {
            return Err(Error::Shape(format!(
                "origin has {} axes, extent has {}",
                origin.len(),
                extent.len()
            )));
        }
        let n: usize = extent.iter().product();
        if n == 0 || values.len() != n {
            return Err(Error::Shape(format!(
                "{} values for a lattice of {} points",
                values.len(),
                n
            )));
        }
        Ok(Self {
            origin,
            spacing,
            extent,
            values,
            slices: Vec::new(),
        })
    }

    pub fn zeros(origin: Vec<f64>, spacing: f64, extent: Vec<usize>) -> Result<Self> {
        let n = extent.iter().product();
        Self::new(origin, spacing, extent, vec![0.0; n])
    }

    pub fn from_fn(
        origin: Vec<f64>,
        spacing: f64,
        extent: Vec<usize>,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let mut g = Self::zeros(origin, spacing, extent)?;
        let mut x = vec![0.0; g.dim()];
        for k in 0..g.len() {
            g.point_into(k, &mut x);
            g.values[k] = f(&x);
        }
        Ok(g)
    }

    /// Symmetric window `[-half_width, half_width)` per axis with `n` points per axis.
    pub fn centered(d: usize, n: usize, half_width: f64) -> Result<Self> {
        let h = 2.0 * half_width / n as f64;
        Self::zeros(vec![-half_width; d], h, vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.extent.len()
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin
    }
    pub fn extent(&self) -> &[usize] {
        &self.extent
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    pub fn slices(&self) -> &[TSlice] {
        &self.slices
    }

    pub fn heights(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.t).collect()
    }

    /// Attach height slices; heights must be strictly increasing and nonnegative.
    pub fn with_slices(mut self, slices: Vec<TSlice>) -> Result<Self> {
        for (k, s) in slices.iter().enumerate() {
            if s.values.len() != self.len() {
                return Err(Error::Shape(format!(
                    "slice {k} has {} values, lattice has {}",
                    s.values.len(),
                    self.len()
                )));
            }
            if k > 0 && !(s.t > slices[k - 1].t) {
                return Err(Error::Shape("slice heights must increase".into()));
            }
        }
        self.slices = slices;
        Ok(self)
    }

    /// Same lattice, new base values, no slices.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.origin.clone(), self.spacing, self.extent.clone(), values)
    }

    pub fn same_lattice(&self, other: &Self) -> bool {
        self.extent == other.extent && self.origin == other.origin && self.spacing == other.spacing
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + self.spacing * i as f64
    }

    /// Flat index of a multi-index.
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut k = 0;
        for (a, &i) in idx.iter().enumerate() {
            k = k * self.extent[a] + i;
        }
        k
    }

    pub fn multi_index(&self, mut k: usize, out: &mut [usize]) {
        for a in (0..self.dim()).rev() {
            out[a] = k % self.extent[a];
            k /= self.extent[a];
        }
    }

    pub fn point_into(&self, k: usize, x: &mut [f64]) {
        let mut k = k;
        for a in (0..self.dim()).rev() {
            let i = k % self.extent[a];
            k /= self.extent[a];
            x[a] = self.origin[a] + self.spacing * i as f64;
        }
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.point_into(k, &mut x);
        x
    }

    /// Nearest lattice multi-index to `x`, if inside the window.
    pub fn nearest_index(&self, x: &[f64]) -> Option<usize> {
        let mut k = 0;
        for a in 0..self.dim() {
            let f = ((x[a] - self.origin[a]) / self.spacing).round();
            if f < 0.0 || f >= self.extent[a] as f64 {
                return None;
            }
            k = k * self.extent[a] + f as usize;
        }
        Some(k)
    }

    /// Multilinear interpolation of `vals` (base or a slice) at `x`; zero outside the window.
    pub fn interpolate_values(&self, vals: &[f64], x: &[f64]) -> f64 {
        let d = self.dim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let f = (x[a] - self.origin[a]) / self.spacing;
            if !(f >= 0.0) || f > (self.extent[a] - 1) as f64 {
                return 0.0;
            }
            let i = (f.floor() as usize).min(self.extent[a].saturating_sub(2));
            base[a] = i;
            frac[a] = f - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut k = 0;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                let i = (base[a] + bit).min(self.extent[a] - 1);
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                k = k * self.extent[a] + i;
            }
            if w != 0.0 {
                acc += w * vals[k];
            }
        }
        acc
    }

    pub fn interpolate(&self, x: &[f64]) -> f64 {
        self.interpolate_values(&self.values, x)
    }

    /// Interpolation in `x` within slices and linearly across heights; zero outside the
    /// covered heights.
    pub fn interpolate_space_time(&self, x: &[f64], t: f64) -> f64 {
        let sl = &self.slices;
        if sl.is_empty() || t < sl[0].t || t > sl[sl.len() - 1].t {
            return 0.0;
        }
        let j = sl.partition_point(|s| s.t <= t).clamp(1, sl.len().max(2) - 1);
        if sl.len() == 1 {
            return self.interpolate_values(&sl[0].values, x);
        }
        let (a, b) = (&sl[j - 1], &sl[j]);
        let w = (t - a.t) / (b.t - a.t);
        (1.0 - w) * self.interpolate_values(&a.values, x) + w * self.interpolate_values(&b.values, x)
    }

    /// Riemann sum `h^d sum f`.
    pub fn integral(&self) -> f64 {
        self.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v = f(*v));
        for s in g.slices.iter_mut() {
            s.values.iter_mut().for_each(|v| *v = f(*v));
        }
        g
    }

    /// Whether each lattice index lies at least `margin` points from every edge.
    pub fn is_interior(&self, k: usize, margin: usize) -> bool {
        let mut k = k;
        for a in (0..self.dim()).rev() {
            let i = k % self.extent[a];
            k /= self.extent[a];
            if i < margin || i + margin >= self.extent[a] {
                return false;
            }
        }
        true
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let join = |v: &[f64]| v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(",");
        writeln!(w, "# spacing={}", fmt17(self.spacing))?;
        writeln!(w, "# origin={}", join(&self.origin))?;
        let ext: Vec<String> = self.extent.iter().map(|n| n.to_string()).collect();
        writeln!(w, "# extent={}", ext.join(","))?;
        if !self.slices.is_empty() {
            writeln!(w, "# t={}", join(&self.heights()))?;
        }
        let mut header = vec!["layer".to_string()];
        header.extend((0..self.dim()).map(|a| format!("i_{a}")));
        header.push("value".into());
        writeln!(w, "{}", header.join(","))?;
        let mut idx = vec![0usize; self.dim()];
        let layers = std::iter::once(&self.values).chain(self.slices.iter().map(|s| &s.values));
        let mut line = String::new();
        for (layer, vals) in layers.enumerate() {
            for (k, v) in vals.iter().enumerate() {
                self.multi_index(k, &mut idx);
                line.clear();
                line.push_str(&layer.to_string());
                for i in &idx {
                    line.push(',');
                    line.push_str(&i.to_string());
                }
                line.push(',');
                line.push_str(&fmt17(*v));
                line.push('\n');
                w.write_all(line.as_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut spacing = None;
        let mut origin = None;
        let mut extent: Option<Vec<usize>> = None;
        let mut heights: Vec<f64> = Vec::new();
        let mut layers: Vec<Vec<f64>> = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix("# ") {
                let (key, val) = meta
                    .split_once('=')
                    .ok_or_else(|| Error::Format(format!("line {}: bad metadata", lineno + 1)))?;
                match key {
                    "spacing" => spacing = Some(parse_f64(val)?),
                    "origin" => {
                        origin = Some(val.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?)
                    }
                    "extent" => {
                        extent =
                            Some(val.split(',').map(parse_usize).collect::<Result<Vec<_>>>()?)
                    }
                    "t" => heights = val.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?,
                    _ => {}
                }
                continue;
            }
            if !header_seen {
                header_seen = true;
                let ext = extent
                    .as_ref()
                    .ok_or_else(|| Error::Format("missing extent metadata".into()))?;
                let n: usize = ext.iter().product();
                layers = vec![vec![f64::NAN; n]; heights.len() + 1];
                continue;
            }
            let ext = extent.as_ref().expect("checked at header");
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != ext.len() + 2 {
                return Err(Error::Format(format!("line {}: wrong field count", lineno + 1)));
            }
            let layer = parse_usize(fields[0])?;
            let mut k = 0;
            for a in 0..ext.len() {
                let i = parse_usize(fields[1 + a])?;
                if i >= ext[a] {
                    return Err(Error::Format(format!("line {}: index out of range", lineno + 1)));
                }
                k = k * ext[a] + i;
            }
            let v = parse_f64(fields[ext.len() + 1])?;
            let slot = layers
                .get_mut(layer)
                .ok_or_else(|| Error::Format(format!("line {}: unknown layer", lineno + 1)))?;
            slot[k] = v;
        }
        let spacing = spacing.ok_or_else(|| Error::Format("missing spacing".into()))?;
        let origin = origin.ok_or_else(|| Error::Format("missing origin".into()))?;
        let extent = extent.ok_or_else(|| Error::Format("missing extent".into()))?;
        if layers.is_empty() || layers.iter().any(|l| l.iter().any(|v| v.is_nan())) {
            return Err(Error::Format("incomplete lattice in CSV".into()));
        }
        let base = layers.remove(0);
        let g = Self::new(origin, spacing, extent, base)?;
        let slices = heights
            .into_iter()
            .zip(layers)
            .map(|(t, values)| TSlice { t, values })
            .collect();
        g.with_slices(slices)
    }

    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(GRID_MAGIC)?;
        write_u64(w, self.dim() as u64)?;
        write_f64(w, self.spacing)?;
        write_f64s(w, &self.origin)?;
        for &n in &self.extent {
            write_u64(w, n as u64)?;
        }
        write_u64(w, self.slices.len() as u64)?;
        write_f64s(w, &self.heights())?;
        write_f64s(w, &self.values)?;
        for s in &self.slices {
            write_f64s(w, &s.values)?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        expect_magic(r, GRID_MAGIC)?;
        let d = read_u64(r)? as usize;
        if d == 0 || d > 16 {
            return Err(Error::Format(format!("implausible dimension {d}")));
        }
        let spacing = read_f64(r)?;
        let origin = read_f64s(r, d)?;
        let mut extent = Vec::with_capacity(d);
        for _ in 0..d {
            extent.push(read_u64(r)? as usize);
        }
        let ns = read_u64(r)? as usize;
        let heights = read_f64s(r, ns)?;
        let n: usize = extent.iter().product();
        let values = read_f64s(r, n)?;
        let mut slices = Vec::with_capacity(ns);
        for t in heights {
            slices.push(TSlice {
                t,
                values: read_f64s(r, n)?,
            });
        }
        Self::new(origin, spacing, extent, values)?.with_slices(slices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridFunction {
        GridFunction::from_fn(vec![-1.0, 0.5], 0.25, vec![3, 4], |x| x[0] * 10.0 + x[1])
            .unwrap()
            .with_slices(vec![
                TSlice { t: 0.5, values: (0..12).map(|i| i as f64 / 7.0).collect() },
                TSlice { t: 1.5, values: vec![1e-300; 12] },
            ])
            .unwrap()
    }

    #[test]
    fn indexing_round_trip() {
        let g = sample();
        let mut idx = [0usize; 2];
        for k in 0..g.len() {
            g.multi_index(k, &mut idx);
            assert_eq!(g.flat_index(&idx), k);
        }
        assert_eq!(g.point(5), vec![-0.75, 0.75]);
    }

    #[test]
    fn space_time_interpolation_is_linear_in_height() {
        let base = GridFunction::centered(1, 5, 1.0).unwrap();
        let g = base
            .with_slices(vec![
                TSlice { t: 1.0, values: vec![1.0; 5] },
                TSlice { t: 2.0, values: vec![3.0; 5] },
                TSlice { t: 3.0, values: vec![0.0; 5] },
            ])
            .unwrap();
        assert!((g.interpolate_space_time(&[0.1], 1.25) - 1.5).abs() < 1e-14);
        assert!((g.interpolate_space_time(&[0.1], 3.0)).abs() < 1e-14);
        assert_eq!(g.interpolate_space_time(&[0.1], 0.5), 0.0);
        assert_eq!(g.interpolate_space_time(&[4.0], 1.5), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let g = sample();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert!(!buf.contains(&b'\r'));
        let back = GridFunction::read_csv(&buf[..]).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn binary_round_trip() {
        let g = sample();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"SLGRID01");
        let back = GridFunction::read_binary(&mut &buf[..]).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut buf = b"NOTAGRID".to_vec();
        buf.extend_from_slice(&[0; 16]);
        assert!(GridFunction::read_binary(&mut &buf[..]).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_affine() {
        let g = GridFunction::from_fn(vec![0.0, 0.0], 0.5, vec![5, 5], |x| 2.0 * x[0] - x[1] + 1.0)
            .unwrap();
        let v = g.interpolate(&[0.8, 1.3]);
        assert!((v - (2.0 * 0.8 - 1.3 + 1.0)).abs() < 1e-14);
        assert_eq!(g.interpolate(&[-0.1, 0.0]), 0.0);
        assert!((g.interpolate(&[2.0, 2.0]) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn integral_of_one_cell() {
        let mut g = GridFunction::zeros(vec![0.0], 0.5, vec![4]).unwrap();
        g.values_mut()[1] = 1.0;
        assert!((g.integral() - 0.5).abs() < 1e-15);
    }
}
