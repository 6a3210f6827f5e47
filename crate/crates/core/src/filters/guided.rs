use crate::error::{Error, Result};
use crate::filters::half;
use crate::volume::Slice;

/// Sums over every full `(2rx+1)`×`(2ry+1)` window of a `width`×`height`
/// grid. The result has one entry per window centre that fits entirely
/// inside the grid.
fn box_sums(data: &[f64], width: usize, height: usize, rx: usize, ry: usize) -> (Vec<f64>, usize, usize) {
    let (wx, wy) = (2 * rx + 1, 2 * ry + 1);
    let out_w = width - 2 * rx;
    let out_h = height - 2 * ry;
    let mut rows = vec![0.0; out_w * height];
    for y in 0..height {
        let row = &data[y * width..(y + 1) * width];
        let mut acc: f64 = row[..wx].iter().sum();
        rows[y * out_w] = acc;
        for x in 1..out_w {
            acc += row[x + wx - 1] - row[x - 1];
            rows[y * out_w + x] = acc;
        }
    }
    let mut out = vec![0.0; out_w * out_h];
    for x in 0..out_w {
        let mut acc: f64 = (0..wy).map(|y| rows[y * out_w + x]).sum();
        out[x] = acc;
        for y in 1..out_h {
            acc += rows[(y + wy - 1) * out_w + x] - rows[(y - 1) * out_w + x];
            out[y * out_w + x] = acc;
        }
    }
    (out, out_w, out_h)
}

/// Self-guided filter with a square `w`×`w` window and regularizer `eps`
/// (in the slice's own intensity units squared).
///
/// The image is extended by clamp-to-edge padding, and every window that
/// contains an in-image pixel contributes to it, so each pixel is covered
/// by exactly `w*w` full windows. The output is
/// `q_i = mean_{k: i in w_k} (a_k * I_i + b_k)` with
/// `a_k = var_k / (var_k + eps)` and `b_k = (1 - a_k) * mean_k`, which is
/// the closed form of the weighted sum
/// `sum_j (1/|w|^2) sum_k (1 + (I_i - mean_k)(I_j - mean_k) / (var_k + eps)) I_j`.
pub fn guided_filter(s: &Slice, w: usize, eps: f64) -> Result<Slice> {
    if w.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("guided window w={w} must be odd")));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps={eps} must be finite and > 0")));
    }
    if w == 1 {
        // Single-pixel windows have zero variance: a = 0, b = I.
        return Ok(s.clone());
    }
    let r = half(w) as usize;
    let pad = 2 * r;
    let (pw, ph) = (s.nx + 2 * pad, s.ny + 2 * pad);
    let mut padded = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        for x in 0..pw {
            padded.push(s.get_clamped(x as isize - pad as isize, y as isize - pad as isize));
        }
    }
    let squares: Vec<f64> = padded.iter().map(|v| v * v).collect();
    let n = (w * w) as f64;
    let (sum, kw, kh) = box_sums(&padded, pw, ph, r, r);
    let (sum_sq, _, _) = box_sums(&squares, pw, ph, r, r);

    // Coefficients for every window centre in the band [-r, n-1+r].
    let mut coeff_a = Vec::with_capacity(kw * kh);
    let mut coeff_b = Vec::with_capacity(kw * kh);
    for (s1, s2) in sum.iter().zip(&sum_sq) {
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0);
        let a = var / (var + eps);
        coeff_a.push(a);
        coeff_b.push((1.0 - a) * mean);
    }
    let (mean_a, ow, oh) = box_sums(&coeff_a, kw, kh, r, r);
    let (mean_b, _, _) = box_sums(&coeff_b, kw, kh, r, r);
    debug_assert_eq!((ow, oh), (s.nx, s.ny));

    let data = s.data.iter().zip(mean_a.iter().zip(&mean_b)).map(|(i, (a, b))| (a * i + b) / n).collect();
    Ok(Slice { nx: s.nx, ny: s.ny, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_sums_match_direct() {
        let data: Vec<f64> = (0..35).map(|i| (i * 7 % 11) as f64).collect();
        let (out, ow, oh) = box_sums(&data, 7, 5, 1, 2);
        assert_eq!((ow, oh), (5, 1));
        for (x, &got) in out.iter().enumerate().take(ow) {
            let direct: f64 =
                (0..5).flat_map(|y| (x..x + 3).map(move |xx| (xx, y))).map(|(xx, y)| data[y * 7 + xx]).sum();
            assert_eq!(got, direct);
        }
    }

    #[test]
    fn constant_slice_is_fixed() {
        let s = Slice::new(5, 6, vec![0.3; 30]).unwrap();
        let out = guided_filter(&s, 5, 0.01).unwrap();
        for v in out.data {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = Slice::new(3, 3, vec![0.0; 9]).unwrap();
        assert!(guided_filter(&s, 4, 0.1).is_err());
        assert!(guided_filter(&s, 3, 0.0).is_err());
    }
}
