//! Vector and tensor fields sampled on a uniform periodic box `[-L, L)^n`.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Field with `m` components on `N^n` points, component-major, x-fastest.
///
/// Grid point `i` along an axis sits at `-L + i h` with `h = 2L/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct CartesianField {
    dims: usize,
    points: usize,
    half_width: f64,
    components: usize,
    values: Vec<f64>,
}

fn check_geometry(dims: usize, points: usize, half_width: f64) -> Result<()> {
    if dims != 2 && dims != 3 {
        return Err(Error::InvalidGrid(format!("dimension {dims} not in {{2, 3}}")));
    }
    if points < 4 || !points.is_power_of_two() {
        return Err(Error::InvalidGrid(format!("points per axis {points} must be a power of two >= 4")));
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
    }
    Ok(())
}

impl CartesianField {
    pub fn new(dims: usize, points: usize, half_width: f64, components: usize, values: Vec<f64>) -> Result<Self> {
        check_geometry(dims, points, half_width)?;
        let expected = components * points.pow(dims as u32);
        if values.len() != expected {
            return Err(Error::SizeMismatch { expected: expected * 8, found: values.len() * 8 });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at index {bad}")));
        }
        Ok(CartesianField { dims, points, half_width, components, values })
    }

    pub fn zeros(dims: usize, points: usize, half_width: f64, components: usize) -> Result<Self> {
        check_geometry(dims, points, half_width)?;
        let len = components * points.pow(dims as u32);
        Ok(CartesianField { dims, points, half_width, components, values: vec![0.0; len] })
    }

    /// Samples `f(x, out)` at every grid point; `out` has one slot per component.
    pub fn from_fn<F>(dims: usize, points: usize, half_width: f64, components: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        let mut field = Self::zeros(dims, points, half_width, components)?;
        let cells = field.cells();
        let h = field.spacing();
        let mut pointwise = vec![0.0; cells * components];
        pointwise.par_chunks_mut(components).enumerate().for_each(|(idx, out)| {
            let x = point_coords(idx, dims, points, half_width, h);
            f(&x[..dims], out);
        });
        for c in 0..components {
            let dst = &mut field.values[c * cells..(c + 1) * cells];
            for (i, v) in dst.iter_mut().enumerate() {
                *v = pointwise[i * components + c];
            }
        }
        if field.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("sampled function produced a non-finite value".into()));
        }
        Ok(field)
    }

    /// Scalar field from a function of position.
    pub fn scalar_fn<F>(dims: usize, points: usize, half_width: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        Self::from_fn(dims, points, half_width, 1, |x, out| out[0] = f(x))
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Number of grid points, `N^n`.
    pub fn cells(&self) -> usize {
        self.points.pow(self.dims as u32)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let cells = self.cells();
        &self.values[c * cells..(c + 1) * cells]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let cells = self.cells();
        &mut self.values[c * cells..(c + 1) * cells]
    }

    /// Coordinates of grid point `idx` (unused trailing entries are zero).
    pub fn point(&self, idx: usize) -> [f64; 3] {
        point_coords(idx, self.dims, self.points, self.half_width, self.spacing())
    }

    /// Flat index of the grid point at the origin.
    pub fn origin_index(&self) -> usize {
        let half = self.points / 2;
        (0..self.dims).map(|d| half * self.points.pow(d as u32)).sum()
    }

    /// Euclidean magnitude across components at every grid point.
    pub fn magnitude(&self) -> Vec<f64> {
        let cells = self.cells();
        (0..cells)
            .into_par_iter()
            .map(|i| {
                (0..self.components)
                    .map(|c| self.values[c * cells + i].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.dims == other.dims && self.points == other.points && self.half_width == other.half_width
    }

    pub fn with_values(&self, components: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(self.dims, self.points, self.half_width, components, values)
    }

    /// Same samples on a box of a different half width.
    pub fn rebox(&self, half_width: f64) -> Result<Self> {
        check_geometry(self.dims, self.points, half_width)?;
        let mut out = self.clone();
        out.half_width = half_width;
        Ok(out)
    }

    pub fn scale(&mut self, c: f64) {
        self.values.par_iter_mut().for_each(|v| *v *= c);
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// `self - other`, on identical grids.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.par_iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(CartesianField { values, ..self.clone_shape() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.par_iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(CartesianField { values, ..self.clone_shape() })
    }

    /// `h^n sum |f|^2`, the discrete squared L2 norm with Euclidean magnitude.
    pub fn l2_norm_sq(&self) -> f64 {
        let hn = self.spacing().powi(self.dims as i32);
        hn * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if !self.same_grid(other) {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        if self.components != other.components {
            return Err(Error::Components { expected: self.components, got: other.components });
        }
        Ok(())
    }

    fn clone_shape(&self) -> Self {
        CartesianField {
            dims: self.dims,
            points: self.points,
            half_width: self.half_width,
            components: self.components,
            values: Vec::new(),
        }
    }

    /// Writes the `NSRA1` snapshot format: an ASCII header line followed by
    /// little-endian `f64` values.
    pub fn write_nsra1<W: Write>(&self, mut w: W, time: f64) -> Result<()> {
        writeln!(
            w,
            "NSRA1 n={} N={} L={} m={} t={}",
            self.dims, self.points, self.half_width, self.components, time
        )?;
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    /// Reads an `NSRA1` snapshot; returns the field and its time stamp.
    pub fn read_nsra1<R: Read>(mut r: R) -> Result<(Self, f64)> {
        let mut raw = Vec::new();
        r.read_to_end(&mut raw)?;
        let nl = raw.iter().position(|&b| b == b'\n').ok_or(Error::MagicMismatch)?;
        let header = std::str::from_utf8(&raw[..nl]).map_err(|_| Error::MagicMismatch)?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("NSRA1") {
            return Err(Error::MagicMismatch);
        }
        let (mut n, mut np, mut l, mut m, mut t) = (None, None, None, None, None);
        for tok in tokens {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("malformed header token '{tok}'")))?;
            let bad = || Error::Parse(format!("malformed header value '{tok}'"));
            match key {
                "n" => n = Some(val.parse::<usize>().map_err(|_| bad())?),
                "N" => np = Some(val.parse::<usize>().map_err(|_| bad())?),
                "L" => l = Some(val.parse::<f64>().map_err(|_| bad())?),
                "m" => m = Some(val.parse::<usize>().map_err(|_| bad())?),
                "t" => t = Some(val.parse::<f64>().map_err(|_| bad())?),
                _ => return Err(Error::Parse(format!("unknown header key '{key}'"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("header is missing '{k}'"));
        let (n, np, l, m, t) = (
            n.ok_or_else(|| missing("n"))?,
            np.ok_or_else(|| missing("N"))?,
            l.ok_or_else(|| missing("L"))?,
            m.ok_or_else(|| missing("m"))?,
            t.ok_or_else(|| missing("t"))?,
        );
        check_geometry(n, np, l)?;
        let body = &raw[nl + 1..];
        let count = m * np.pow(n as u32);
        if body.len() != count * 8 {
            return Err(Error::SizeMismatch { expected: count * 8, found: body.len() });
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok((Self::new(n, np, l, m, values)?, t))
    }

    pub fn save(&self, path: &Path, time: f64) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_nsra1(std::io::BufWriter::new(file), time)
    }

    pub fn load(path: &Path) -> Result<(Self, f64)> {
        Self::read_nsra1(std::fs::File::open(path)?)
    }
}

fn point_coords(mut idx: usize, dims: usize, points: usize, half_width: f64, h: f64) -> [f64; 3] {
    let mut x = [0.0; 3];
    for xd in x.iter_mut().take(dims) {
        *xd = -half_width + (idx % points) as f64 * h;
        idx /= points;
    }
    x
}

/// Signed integer wavenumber of FFT index `i` on an axis of `points` samples.
pub fn signed_index(i: usize, points: usize) -> i64 {
    if i < points / 2 {
        i as i64
    } else {
        i as i64 - points as i64
    }
}
