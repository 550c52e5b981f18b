//! Interpolation and resampling primitives shared by preprocessing,
//! augmentation, and registration.
//!
//! All resizes use an endpoint-inclusive (align-corners) grid: output sample
//! `i` maps to source coordinate `i * (n_src - 1) / (n_out - 1)`. Out-of-range
//! taps clamp to the edge sample.

use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Axis};

/// Interpolation method for resampling matrices and resizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InterpMethod {
    Nearest,
    Linear,
    Cubic,
}

/// Catmull-Rom cubic convolution kernel (a = -0.5).
fn cubic_kernel(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (A + 2.0) * t * t * t - (A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        A * t * t * t - 5.0 * A * t * t + 8.0 * A * t - 4.0 * A
    } else {
        0.0
    }
}

/// Taps and weights for sampling a length-`n` signal at coordinate `pos`.
/// Indices are clamped to `[0, n-1]`; weights always sum to 1.
pub fn interp_taps(pos: f64, n: usize, method: InterpMethod) -> Vec<(usize, f64)> {
    assert!(n >= 1);
    let clamp = |i: i64| -> usize { i.clamp(0, (n - 1) as i64) as usize };
    match method {
        InterpMethod::Nearest => {
            let i = (pos + 0.5).floor() as i64;
            vec![(clamp(i), 1.0)]
        }
        InterpMethod::Linear => {
            let i0 = pos.floor() as i64;
            let f = pos - i0 as f64;
            if f == 0.0 {
                vec![(clamp(i0), 1.0)]
            } else {
                vec![(clamp(i0), 1.0 - f), (clamp(i0 + 1), f)]
            }
        }
        InterpMethod::Cubic => {
            let i0 = pos.floor() as i64;
            let f = pos - i0 as f64;
            let ws = [
                cubic_kernel(f + 1.0),
                cubic_kernel(f),
                cubic_kernel(1.0 - f),
                cubic_kernel(2.0 - f),
            ];
            (0..4).map(|k| (clamp(i0 - 1 + k as i64), ws[k])).collect()
        }
    }
}

/// Samples a 1-D signal at a fractional coordinate.
pub fn sample_1d(src: &[f32], pos: f64, method: InterpMethod) -> f32 {
    interp_taps(pos, src.len(), method)
        .iter()
        .map(|&(i, w)| src[i] as f64 * w)
        .sum::<f64>() as f32
}

/// Output coordinate -> source coordinate under the align-corners convention.
pub fn align_corners_pos(i: usize, n_out: usize, n_src: usize) -> f64 {
    if n_out <= 1 {
        (n_src - 1) as f64 / 2.0
    } else {
        i as f64 * (n_src - 1) as f64 / (n_out - 1) as f64
    }
}

/// Resamples one axis of a 3-D array from `src_spacing` to `dst_spacing`
/// with linear interpolation on an endpoint-inclusive grid. The new length
/// is `round(extent / dst_spacing) + 1` where `extent = (n-1) * src_spacing`.
pub fn resample_axis_linear(
    arr: &Array3<f32>,
    axis: usize,
    src_spacing: f64,
    dst_spacing: f64,
) -> Array3<f32> {
    let n = arr.shape()[axis];
    let extent = (n.saturating_sub(1)) as f64 * src_spacing;
    let new_len = ((extent / dst_spacing).round() as usize) + 1;
    let step = dst_spacing / src_spacing;

    let mut shape = [arr.shape()[0], arr.shape()[1], arr.shape()[2]];
    shape[axis] = new_len;
    let mut out = Array3::<f32>::zeros(shape);
    for k in 0..new_len {
        let pos = k as f64 * step;
        let taps = interp_taps(pos, n, InterpMethod::Linear);
        let mut lane = out.index_axis_mut(Axis(axis), k);
        for &(i, w) in &taps {
            let src = arr.index_axis(Axis(axis), i);
            lane.zip_mut_with(&src, |o, &s| *o += (s as f64 * w) as f32);
        }
    }
    out
}

/// Resizes a 2-D image to `(out_h, out_w)`.
pub fn resize2d(img: ArrayView2<f32>, out_h: usize, out_w: usize, method: InterpMethod) -> Array2<f32> {
    let (h, w) = img.dim();
    let row_taps: Vec<_> = (0..out_h)
        .map(|i| interp_taps(align_corners_pos(i, out_h, h), h, method))
        .collect();
    let col_taps: Vec<_> = (0..out_w)
        .map(|j| interp_taps(align_corners_pos(j, out_w, w), w, method))
        .collect();

    // Separable: rows first, then columns.
    let mut tmp = Array2::<f64>::zeros((out_h, w));
    for (i, taps) in row_taps.iter().enumerate() {
        for &(si, wt) in taps {
            for j in 0..w {
                tmp[[i, j]] += img[[si, j]] as f64 * wt;
            }
        }
    }
    let mut out = Array2::<f32>::zeros((out_h, out_w));
    for (j, taps) in col_taps.iter().enumerate() {
        for &(sj, wt) in taps {
            for i in 0..out_h {
                out[[i, j]] += (tmp[[i, sj]] * wt) as f32;
            }
        }
    }
    out
}

/// Resizes a 3-D array to `(out_d, out_h, out_w)`.
pub fn resize3d(
    vol: ArrayView3<f32>,
    out_d: usize,
    out_h: usize,
    out_w: usize,
    method: InterpMethod,
) -> Array3<f32> {
    let (d, h, w) = vol.dim();
    let d_taps: Vec<_> = (0..out_d)
        .map(|i| interp_taps(align_corners_pos(i, out_d, d), d, method))
        .collect();

    // Resample depth into an intermediate volume, then resize each slice.
    let mut out = Array3::<f32>::zeros((out_d, out_h, out_w));
    for (k, taps) in d_taps.iter().enumerate() {
        let mut slab = Array2::<f64>::zeros((h, w));
        for &(si, wt) in taps {
            let slice = vol.index_axis(Axis(0), si);
            slab.zip_mut_with(&slice, |o, &s| *o += s as f64 * wt);
        }
        let slab32 = slab.mapv(|v| v as f32);
        let resized = resize2d(slab32.view(), out_h, out_w, method);
        out.index_axis_mut(Axis(0), k).assign(&resized);
    }
    out
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-0.5 * (x / sigma) * (x / sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

fn blur_axis3(arr: &mut Array3<f32>, axis: usize, kernel: &[f64]) {
    let n = arr.shape()[axis];
    let radius = kernel.len() / 2;
    let src = arr.clone();
    arr.fill(0.0);
    for k in 0..n {
        let mut lane = arr.index_axis_mut(Axis(axis), k);
        for (t, &w) in kernel.iter().enumerate() {
            let i = (k as i64 + t as i64 - radius as i64).clamp(0, (n - 1) as i64) as usize;
            let s = src.index_axis(Axis(axis), i);
            lane.zip_mut_with(&s, |o, &v| *o += (v as f64 * w) as f32);
        }
    }
}

/// Separable Gaussian blur with replicate padding.
pub fn gaussian_blur2d(img: &Array2<f32>, sigma: f64) -> Array2<f32> {
    let (h, w) = img.dim();
    let as3 = img.clone().into_shape_with_order((1, h, w)).unwrap();
    let mut v = as3;
    let kernel = gaussian_kernel(sigma);
    blur_axis3(&mut v, 1, &kernel);
    blur_axis3(&mut v, 2, &kernel);
    v.into_shape_with_order((h, w)).unwrap()
}

/// Separable Gaussian blur with replicate padding.
pub fn gaussian_blur3d(vol: &Array3<f32>, sigma: f64) -> Array3<f32> {
    let mut v = vol.clone();
    let kernel = gaussian_kernel(sigma);
    for axis in 0..3 {
        blur_axis3(&mut v, axis, &kernel);
    }
    v
}

/// Simulated low resolution: downsample by `zoom` with linear interpolation,
/// then upsample back to the original size.
pub fn simulate_low_res2d(img: &Array2<f32>, zoom: f64) -> Array2<f32> {
    let (h, w) = img.dim();
    let dh = ((h as f64 * zoom).round() as usize).max(1);
    let dw = ((w as f64 * zoom).round() as usize).max(1);
    let small = resize2d(img.view(), dh, dw, InterpMethod::Linear);
    resize2d(small.view(), h, w, InterpMethod::Linear)
}

/// Simulated low resolution for volumes.
pub fn simulate_low_res3d(vol: &Array3<f32>, zoom: f64) -> Array3<f32> {
    let (d, h, w) = vol.dim();
    let dd = ((d as f64 * zoom).round() as usize).max(1);
    let dh = ((h as f64 * zoom).round() as usize).max(1);
    let dw = ((w as f64 * zoom).round() as usize).max(1);
    let small = resize3d(vol.view(), dd, dh, dw, InterpMethod::Linear);
    resize3d(small.view(), d, h, w, InterpMethod::Linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn linear_taps_partition_unity() {
        for n in [1usize, 2, 5, 17] {
            for k in 0..40 {
                let pos = k as f64 * 0.37;
                for method in [InterpMethod::Nearest, InterpMethod::Linear, InterpMethod::Cubic] {
                    let s: f64 = interp_taps(pos, n, method).iter().map(|&(_, w)| w).sum();
                    assert!((s - 1.0).abs() < 1e-12, "sum {s} at pos {pos} n {n}");
                }
            }
        }
    }

    #[test]
    fn resize_identity_is_exact() {
        let img = array![[1.0f32, 2.0, 3.0], [4.0, 5.0, 6.0]];
        for method in [InterpMethod::Nearest, InterpMethod::Linear, InterpMethod::Cubic] {
            let out = resize2d(img.view(), 2, 3, method);
            assert_eq!(out, img);
        }
    }

    #[test]
    fn resize_linear_matches_hand_values() {
        let img = array![[0.0f32, 1.0]];
        let out = resize2d(img.view(), 1, 3, InterpMethod::Linear);
        assert_eq!(out, array![[0.0f32, 0.5, 1.0]]);
    }

    #[test]
    fn resample_axis_length_rule() {
        // 64 samples at 3.0 mm: extent 189 mm -> 126 steps of 1.5 mm -> 127 samples.
        let arr = Array3::<f32>::zeros((64, 2, 2));
        let out = resample_axis_linear(&arr, 0, 3.0, 1.5);
        assert_eq!(out.shape()[0], 127);
    }

    #[test]
    fn resample_identity_spacing_is_bitexact() {
        let mut arr = Array3::<f32>::zeros((5, 3, 2));
        arr.iter_mut().enumerate().for_each(|(i, v)| *v = (i as f32).sin());
        let out = resample_axis_linear(&arr, 0, 1.5, 1.5);
        assert_eq!(out, arr);
    }

    #[test]
    fn resample_ramp_matches_analytic_values() {
        // A ramp along the axis is reproduced exactly by linear interpolation.
        let mut arr = Array3::<f32>::zeros((11, 1, 1));
        for i in 0..11 {
            arr[[i, 0, 0]] = i as f32 * 2.0;
        }
        let out = resample_axis_linear(&arr, 0, 2.0, 1.5);
        // extent 20 mm -> round(13.33)+1 = 14 samples; value at k is 1.5*k in mm,
        // ramp value = mm position (2.0 per sample of 2 mm spacing -> 1.0/mm).
        assert_eq!(out.shape()[0], 14);
        for k in 0..14 {
            let expected = 1.5 * k as f64;
            assert!((out[[k, 0, 0]] as f64 - expected).abs() < 1e-5);
        }
    }

    #[test]
    fn blur_preserves_constant() {
        let img = Array2::<f32>::from_elem((8, 8), 3.5);
        let out = gaussian_blur2d(&img, 1.0);
        for v in out.iter() {
            assert!((v - 3.5).abs() < 1e-5);
        }
    }

    #[test]
    fn low_res_round_trip_shape() {
        let img = Array2::<f32>::from_elem((16, 16), 1.0);
        let out = simulate_low_res2d(&img, 0.5);
        assert_eq!(out.dim(), (16, 16));
    }
}
