//! Flat torus backend: periodic vector fields on `[0, 2pi)^d` stored as
//! Fourier coefficients `u(x) = sum_k u_k e^{i k.x}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::fft_nd;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Uniform grid with `n` points per axis on `[0, 2pi)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    d: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return Err(Error::InvalidGrid(format!("dimension {d} not in {{2, 3}}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("N = {n} must be even and >= 8")));
        }
        Ok(Self { d, n })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest retained wavenumber per axis under the 2/3 rule.
    pub fn cutoff(&self) -> usize {
        self.n / 3
    }

    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.d as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI / self.n as f64).powi(self.d as i32)
    }

    /// Signed wavenumber of FFT index `i` along one axis.
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Wavenumber used for odd derivatives: the Nyquist entry is dropped so
    /// real fields stay real.
    fn deriv_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i) as f64
        }
    }

    /// Wavevector of flat index `idx` (unused trailing entries are zero).
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let mut k = [0i64; 3];
        let mut rem = idx;
        for axis in (0..self.d).rev() {
            k[axis] = self.wavenumber(rem % self.n);
            rem /= self.n;
        }
        k
    }

    fn deriv_mode(&self, idx: usize) -> [f64; 3] {
        let mut k = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.d).rev() {
            k[axis] = self.deriv_wavenumber(rem % self.n);
            rem /= self.n;
        }
        k
    }

    /// Flat index of wavevector `k` (taken modulo `N`).
    pub fn index_of(&self, k: &[i64]) -> usize {
        let n = self.n as i64;
        k.iter()
            .take(self.d)
            .fold(0usize, |acc, &ki| acc * self.n + ki.rem_euclid(n) as usize)
    }

    pub fn k2(&self, idx: usize) -> f64 {
        self.mode(idx).iter().map(|&k| (k * k) as f64).sum()
    }

    /// True when every `|k_i| <= N/3`.
    pub fn in_band(&self, idx: usize) -> bool {
        let c = self.cutoff() as i64;
        self.mode(idx).iter().all(|k| k.abs() <= c)
    }

    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = 2.0 * PI / self.n as f64;
        let mut x = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.d).rev() {
            x[axis] = h * (rem % self.n) as f64;
            rem /= self.n;
        }
        x
    }

    fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Per-index wavenumber data shared by all grids of one shape.
pub(crate) struct Tables {
    pub k2: Vec<f64>,
    /// Derivative wavevector (Nyquist entries zeroed).
    pub dk: Vec<[f64; 3]>,
    /// Flat index of `-k`.
    pub neg: Vec<usize>,
    pub in_band: Vec<bool>,
}

impl TorusGrid {
    pub(crate) fn tables(&self) -> Arc<Tables> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Tables>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        map.entry((self.d, self.n))
            .or_insert_with(|| {
                let neg = (0..self.len())
                    .map(|idx| {
                        let k = self.mode(idx);
                        let nk: Vec<i64> = k.iter().map(|x| -x).collect();
                        self.index_of(&nk)
                    })
                    .collect();
                Arc::new(Tables {
                    k2: (0..self.len()).map(|i| self.k2(i)).collect(),
                    dk: (0..self.len()).map(|i| self.deriv_mode(i)).collect(),
                    neg,
                    in_band: (0..self.len()).map(|i| self.in_band(i)).collect(),
                })
            })
            .clone()
    }

    /// `prod_a f(k_a)` for every flat index.
    fn separable(&self, f: impl Fn(i64) -> f64) -> Vec<f64> {
        let axis: Vec<f64> = (0..self.n).map(|i| f(self.wavenumber(i))).collect();
        let mut out = vec![1.0; self.len()];
        for (idx, v) in out.iter_mut().enumerate() {
            let mut rem = idx;
            for _ in 0..self.d {
                *v *= axis[rem % self.n];
                rem /= self.n;
            }
        }
        out
    }
}

/// Coefficients to grid values (real part of the inverse transform).
pub fn to_physical(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    fft_nd(&mut buf, grid.n, grid.d, true);
    buf.into_iter().map(|c| c.re).collect()
}

/// Grid values to coefficients.
pub fn from_physical(grid: &TorusGrid, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut buf, grid.n, grid.d, false);
    let scale = 1.0 / grid.len() as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// [`to_physical`] for several arrays, two per complex transform.
pub fn to_physical_many(grid: &TorusGrid, arrays: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    if arrays.len() < 2 {
        return arrays.iter().map(|a| to_physical(grid, a)).collect();
    }
    let t = grid.tables();
    let neg = &t.neg;
    let mut out = Vec::with_capacity(arrays.len());
    for pair in arrays.chunks(2) {
        if pair.len() == 1 {
            out.push(to_physical(grid, &pair[0]));
            continue;
        }
        // Hermitian parts give the same real parts and transform to real arrays.
        let (a, b) = (&pair[0], &pair[1]);
        let i = Complex64::i();
        let mut z: Vec<Complex64> = (0..grid.len())
            .map(|k| {
                let ha = (a[k] + a[neg[k]].conj()) * 0.5;
                let hb = (b[k] + b[neg[k]].conj()) * 0.5;
                ha + i * hb
            })
            .collect();
        fft_nd(&mut z, grid.n, grid.d, true);
        out.push(z.iter().map(|c| c.re).collect());
        out.push(z.iter().map(|c| c.im).collect());
    }
    out
}

/// [`from_physical`] for several arrays, two per complex transform.
pub fn from_physical_many(grid: &TorusGrid, arrays: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
    if arrays.len() < 2 {
        return arrays.iter().map(|a| from_physical(grid, a)).collect();
    }
    let t = grid.tables();
    let neg = &t.neg;
    let scale = 1.0 / grid.len() as f64;
    let mut out = Vec::with_capacity(arrays.len());
    for pair in arrays.chunks(2) {
        if pair.len() == 1 {
            out.push(from_physical(grid, &pair[0]));
            continue;
        }
        let mut z: Vec<Complex64> = pair[0].iter().zip(&pair[1]).map(|(&x, &y)| Complex64::new(x, y)).collect();
        fft_nd(&mut z, grid.n, grid.d, false);
        let mut a = Vec::with_capacity(z.len());
        let mut b = Vec::with_capacity(z.len());
        for k in 0..z.len() {
            let c = z[neg[k]].conj();
            a.push((z[k] + c) * (0.5 * scale));
            b.push((z[k] - c) * Complex64::new(0.0, -0.5 * scale));
        }
        out.push(a);
        out.push(b);
    }
    out
}

fn check_band(grid: &TorusGrid, arrays: &[&[Complex64]]) -> Result<()> {
    let max = arrays
        .iter()
        .flat_map(|a| a.iter())
        .fold(0.0f64, |m, c| m.max(c.norm()));
    if max == 0.0 {
        return Ok(());
    }
    let t = grid.tables();
    let mut worst = 0.0f64;
    for a in arrays {
        for (idx, c) in a.iter().enumerate() {
            if !t.in_band[idx] {
                worst = worst.max(c.norm());
            }
        }
    }
    if worst > 1e-12 * max {
        return Err(Error::BandwidthExceeded { cutoff: grid.cutoff(), amplitude: worst });
    }
    Ok(())
}

fn dealias_in_place(grid: &TorusGrid, a: &mut [Complex64]) {
    let t = grid.tables();
    for (idx, c) in a.iter_mut().enumerate() {
        if !t.in_band[idx] {
            *c = ZERO;
        }
    }
}

/// Dealiased pointwise product of two scalar coefficient arrays.
pub fn pointwise_product(
    grid: &TorusGrid,
    a: &[Complex64],
    b: &[Complex64],
) -> Result<Vec<Complex64>> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(Error::GridMismatch("coefficient array length".into()));
    }
    check_band(grid, &[a, b])?;
    let pa = to_physical(grid, a);
    let pb = to_physical(grid, b);
    let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    let mut out = from_physical(grid, &prod);
    dealias_in_place(grid, &mut out);
    Ok(out)
}

fn lp_from_pointwise(grid: &TorusGrid, sq: impl Iterator<Item = f64>, p: f64) -> f64 {
    let sum: f64 = sq.map(|m2| m2.powf(p / 2.0)).sum();
    (sum * grid.cell_volume()).powf(1.0 / p)
}

/// Scalar function on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusScalar {
    pub grid: TorusGrid,
    pub coeffs: Vec<Complex64>,
}

impl TorusScalar {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, coeffs: vec![ZERO; grid.len()] }
    }

    pub fn from_physical(grid: TorusGrid, values: &[f64]) -> Self {
        Self { grid, coeffs: from_physical(&grid, values) }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let vals: Vec<f64> = (0..grid.len()).map(|i| f(&grid.point(i)[..grid.d])).collect();
        Self::from_physical(grid, &vals)
    }

    pub fn to_physical(&self) -> Vec<f64> {
        to_physical(&self.grid, &self.coeffs)
    }

    pub fn gradient(&self) -> TorusField {
        let g = self.grid;
        let t = g.tables();
        let comps = (0..g.d)
            .map(|j| {
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(idx, c)| c * Complex64::new(0.0, t.dk[idx][j]))
                    .collect()
            })
            .collect();
        TorusField { grid: g, comps }
    }

    pub fn laplacian(&self) -> Self {
        let g = self.grid;
        let t = g.tables();
        let coeffs = self.coeffs.iter().zip(&t.k2).map(|(c, k2)| c * -k2).collect();
        Self { grid: g, coeffs }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_from_pointwise(&self.grid, self.to_physical().into_iter().map(|v| v * v), p)
    }

    /// `int f dVol`.
    pub fn integral(&self) -> f64 {
        self.grid.volume() * self.coeffs[0].re
    }
}

/// Real `d`-component vector field on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    pub grid: TorusGrid,
    /// One coefficient array per component, FFT index order.
    pub comps: Vec<Vec<Complex64>>,
}

/// Rank-2 tensor field; entry `(j, l)` is stored at `comps[j * d + l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusTensor {
    pub grid: TorusGrid,
    pub comps: Vec<Vec<Complex64>>,
}

impl TorusField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, comps: vec![vec![ZERO; grid.len()]; grid.d] }
    }

    pub fn from_components(grid: TorusGrid, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.len() != grid.d || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch("component count or length".into()));
        }
        Ok(Self { grid, comps })
    }

    pub fn from_physical(grid: TorusGrid, values: &[Vec<f64>]) -> Self {
        Self { grid, comps: from_physical_many(&grid, values) }
    }

    /// Samples `f(x)` on the grid and transforms.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let mut vals = vec![vec![0.0; grid.len()]; grid.d];
        for i in 0..grid.len() {
            let v = f(&grid.point(i)[..grid.d]);
            for (l, comp) in vals.iter_mut().enumerate() {
                comp[i] = v[l];
            }
        }
        Self::from_physical(grid, &vals)
    }

    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        to_physical_many(&self.grid, &self.comps)
    }

    /// `grad_j u^l`, exact in spectral space.
    pub fn gradient(&self) -> TorusTensor {
        let g = self.grid;
        let d = g.d;
        let t = g.tables();
        let mut comps = vec![vec![ZERO; g.len()]; d * d];
        for idx in 0..g.len() {
            let k = t.dk[idx];
            for j in 0..d {
                for l in 0..d {
                    comps[j * d + l][idx] = self.comps[l][idx] * Complex64::new(0.0, k[j]);
                }
            }
        }
        TorusTensor { grid: g, comps }
    }

    pub fn divergence(&self) -> TorusScalar {
        let g = self.grid;
        let t = g.tables();
        let coeffs = (0..g.len())
            .map(|idx| {
                let k = t.dk[idx];
                (0..g.d).map(|j| self.comps[j][idx] * Complex64::new(0.0, k[j])).sum()
            })
            .collect();
        TorusScalar { grid: g, coeffs }
    }

    /// Flat Hodge Laplacian, componentwise `-|k|^2`.
    pub fn hodge_laplacian_flat(&self) -> Self {
        self.map_multiplier(|k2| -k2)
    }

    /// Exact heat multiplier `e^{-s|k|^2}`; `s` is assumed non-negative.
    pub fn heat(&self, s: f64) -> Self {
        if s == 0.0 {
            return self.clone();
        }
        let mult = self.grid.separable(|k| (-s * (k * k) as f64).exp());
        self.apply_table(&mult)
    }

    fn apply_table(&self, mult: &[f64]) -> Self {
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().zip(mult).map(|(a, m)| a * m).collect())
            .collect();
        Self { grid: self.grid, comps }
    }

    /// Applies a radial multiplier `m(|k|^2)` to every component.
    pub fn map_multiplier(&self, m: impl Fn(f64) -> f64) -> Self {
        let t = self.grid.tables();
        let mult: Vec<f64> = t.k2.iter().map(|&k2| m(k2)).collect();
        self.apply_table(&mult)
    }

    pub fn leray_project(&self) -> Self {
        let g = self.grid;
        let t = g.tables();
        let mut out = self.clone();
        for idx in 1..g.len() {
            let k = t.dk[idx];
            let kk: f64 = k.iter().map(|x| x * x).sum();
            if kk == 0.0 {
                continue;
            }
            let dot: Complex64 = (0..g.d).map(|j| self.comps[j][idx] * k[j]).sum();
            for j in 0..g.d {
                out.comps[j][idx] -= dot * (k[j] / kk);
            }
        }
        out
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let phys = self.to_physical();
        let sq = (0..self.grid.len()).map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>());
        lp_from_pointwise(&self.grid, sq, p)
    }

    /// L^2 norm from the coefficients (Parseval).
    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// `int u . w dVol`.
    pub fn inner(&self, other: &Self) -> f64 {
        let s: f64 = self
            .comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x * y.conj()).re))
            .sum();
        self.grid.volume() * s
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q * a).collect())
            .collect();
        Self { grid: self.grid, comps }
    }

    pub fn scale(&self, a: f64) -> Self {
        let comps = self.comps.iter().map(|x| x.iter().map(|p| p * a).collect()).collect();
        Self { grid: self.grid, comps }
    }

    pub fn check_bandwidth(&self) -> Result<()> {
        let refs: Vec<&[Complex64]> = self.comps.iter().map(|c| c.as_slice()).collect();
        check_band(&self.grid, &refs)
    }

    pub fn dealias(&mut self) {
        for c in &mut self.comps {
            dealias_in_place(&self.grid, c);
        }
    }

    /// Largest deviation from `c(-k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        let mut worst = 0.0f64;
        for c in &self.comps {
            for idx in 0..g.len() {
                let k = g.mode(idx);
                let neg: Vec<i64> = k.iter().map(|x| -x).collect();
                let j = g.index_of(&neg);
                worst = worst.max((c[idx] - c[j].conj()).norm());
            }
        }
        worst
    }

    pub fn grid_check(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)
    }
}

/// Dealiased outer product `u^j w^l`.
pub fn outer_product(u: &TorusField, w: &TorusField) -> Result<TorusTensor> {
    u.grid_check(w)?;
    u.check_bandwidth()?;
    w.check_bandwidth()?;
    let g = u.grid;
    let pu = u.to_physical();
    let pw = w.to_physical();
    let d = g.d;
    let mut comps: Vec<Vec<Complex64>> = Vec::with_capacity(d * d);
    for j in 0..d {
        for l in 0..d {
            if l < j && std::ptr::eq(u, w) {
                let sym: Vec<Complex64> = comps[l * d + j].clone();
                comps.push(sym);
                continue;
            }
            let prod: Vec<f64> = pu[j].iter().zip(&pw[l]).map(|(a, b)| a * b).collect();
            let mut c = from_physical(&g, &prod);
            dealias_in_place(&g, &mut c);
            comps.push(c);
        }
    }
    Ok(TorusTensor { grid: g, comps })
}

impl TorusTensor {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, comps: vec![vec![ZERO; grid.len()]; grid.d * grid.d] }
    }

    pub fn from_physical(grid: TorusGrid, values: &[Vec<f64>]) -> Self {
        Self { grid, comps: from_physical_many(&grid, values) }
    }

    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        to_physical_many(&self.grid, &self.comps)
    }

    pub fn get(&self, j: usize, l: usize) -> &[Complex64] {
        &self.comps[j * self.grid.d + l]
    }

    /// `grad_j T^{jl}`.
    pub fn divergence_first(&self) -> TorusField {
        let g = self.grid;
        let d = g.d;
        let t = g.tables();
        let mut comps = vec![vec![ZERO; g.len()]; d];
        for idx in 0..g.len() {
            let k = t.dk[idx];
            for (l, comp) in comps.iter_mut().enumerate() {
                comp[idx] = (0..d)
                    .map(|j| self.comps[j * d + l][idx] * Complex64::new(0.0, k[j]))
                    .sum();
            }
        }
        TorusField { grid: g, comps }
    }

    /// L^p norm of the pointwise Frobenius norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let phys = self.to_physical();
        let sq = (0..self.grid.len()).map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>());
        lp_from_pointwise(&self.grid, sq, p)
    }

    pub fn dealias(&mut self) {
        for c in &mut self.comps {
            dealias_in_place(&self.grid, c);
        }
    }
}
