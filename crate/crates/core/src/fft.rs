//! Multi-dimensional complex FFTs on cubic grids, x-fastest layout.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanKey = (usize, bool);

fn registry() -> &'static Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>> {
    static REG: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut reg = registry().lock().expect("fft registry poisoned");
    reg.entry((len, forward))
        .or_insert_with(|| {
            let dir = if forward { FftDirection::Forward } else { FftDirection::Inverse };
            FftPlanner::new().plan_fft(len, dir)
        })
        .clone()
}

/// Rows per rayon task when transforming contiguous lines.
const ROWS_PER_TASK: usize = 64;

fn transform_rows(buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>, len: usize) {
    buf.par_chunks_mut(len * ROWS_PER_TASK).for_each(|chunk| {
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

/// Transforms `data` (length `len^dims`) along one axis in place.
fn transform_axis(data: &mut [Complex64], len: usize, dims: usize, axis: usize, forward: bool) {
    let fft = plan(len, forward);
    if axis == 0 {
        transform_rows(data, &fft, len);
        return;
    }
    let stride = len.pow(axis as u32);
    let block = stride * len;
    debug_assert_eq!(data.len(), len.pow(dims as u32));
    let mut buf = vec![Complex64::default(); block];
    for blk in data.chunks_mut(block) {
        // gather: line j holds blk[j + l*stride] for l < len
        {
            let src: &[Complex64] = blk;
            buf.par_chunks_mut(len).enumerate().for_each(|(j, line)| {
                for (l, v) in line.iter_mut().enumerate() {
                    *v = src[j + l * stride];
                }
            });
        }
        transform_rows(&mut buf, &fft, len);
        let lines: &[Complex64] = &buf;
        blk.par_chunks_mut(stride).enumerate().for_each(|(l, plane)| {
            for (j, v) in plane.iter_mut().enumerate() {
                *v = lines[j * len + l];
            }
        });
    }
}

/// Unnormalised forward transform `F_k = sum_j f_j e^{-2 pi i j.k/N}`.
pub fn forward(data: &mut [Complex64], len: usize, dims: usize) {
    for axis in 0..dims {
        transform_axis(data, len, dims, axis, true);
    }
}

/// Inverse transform including the `1/N^dims` factor.
pub fn inverse(data: &mut [Complex64], len: usize, dims: usize) {
    for axis in 0..dims {
        transform_axis(data, len, dims, axis, false);
    }
    let scale = 1.0 / data.len() as f64;
    data.par_iter_mut().for_each(|v| *v *= scale);
}

/// Unnormalised inverse transform `f_j = sum_k F_k e^{+2 pi i j.k/N}`.
pub fn inverse_unnormalized(data: &mut [Complex64], len: usize, dims: usize) {
    for axis in 0..dims {
        transform_axis(data, len, dims, axis, false);
    }
}
