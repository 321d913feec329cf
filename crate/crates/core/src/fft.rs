//! Cached FFT plans and n-dimensional transforms over row-major cubes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, inverse: bool) -> Plan {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Unnormalized in-place transform along every axis of an `n^d` cube.
pub fn fft_nd(data: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n.pow(d as u32));
    let p = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); p.get_inplace_scratch_len()];
    // last axis is contiguous
    p.process_with_scratch(data, &mut scratch);
    let mut buf = Vec::new();
    for axis in 0..d - 1 {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        buf.resize(block, Complex64::new(0.0, 0.0));
        for chunk in data.chunks_exact_mut(block) {
            // chunk is an n x stride matrix; transform its columns as rows of the transpose
            transpose(chunk, &mut buf, n, stride);
            p.process_with_scratch(&mut buf, &mut scratch);
            transpose(&buf, chunk, stride, n);
        }
    }
}

/// Tiled transpose of a `rows x cols` row-major matrix.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const T: usize = 32;
    for r0 in (0..rows).step_by(T) {
        for c0 in (0..cols).step_by(T) {
            for r in r0..(r0 + T).min(rows) {
                for c in c0..(c0 + T).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Unnormalized in-place 1-D transforms of consecutive rows of length `n`.
pub fn fft_rows(data: &mut [Complex64], n: usize, inverse: bool) {
    let p = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); p.get_inplace_scratch_len()];
    p.process_with_scratch(data, &mut scratch);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_3d() {
        let n = 8;
        let orig: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut data = orig.clone();
        fft_nd(&mut data, n, 3, false);
        fft_nd(&mut data, n, 3, true);
        let scale = (n * n * n) as f64;
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / scale - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let n = 8;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i0 in 0..n {
            for i1 in 0..n {
                let x = 2.0 * std::f64::consts::PI * (2.0 * i0 as f64 + 3.0 * i1 as f64) / n as f64;
                data[i0 * n + i1] = Complex64::new(x.cos(), x.sin());
            }
        }
        fft_nd(&mut data, n, 2, false);
        for (i, v) in data.iter().enumerate() {
            let expect = if i == 2 * n + 3 { (n * n) as f64 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-9 && v.im.abs() < 1e-9);
        }
    }
}
