use crate::error::{Error, Result};
use crate::filters::half;
use crate::volume::Slice;

fn check(h: usize, w: usize, sigma_s: f64, sigma_r: f64) -> Result<()> {
    if h.is_multiple_of(2) || w.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("bilateral window {h}x{w} must have odd sides")));
    }
    if !(sigma_s.is_finite() && sigma_s > 0.0 && sigma_r.is_finite() && sigma_r > 0.0) {
        return Err(Error::InvalidParameter(format!("bilateral sigmas ({sigma_s}, {sigma_r}) must be finite and > 0")));
    }
    Ok(())
}

/// Normalized weights of the `h`×`w` window around `(x, y)`, row-major over
/// the window, with the window values they apply to.
///
/// The kernel is `exp(-|dx|^2 / sigma_s^2) * exp(-|dI|^2 / sigma_r^2)`,
/// without the conventional factor of two, and is divided by its sum.
pub fn bilateral_weights(
    s: &Slice,
    x: usize,
    y: usize,
    h: usize,
    w: usize,
    sigma_s: f64,
    sigma_r: f64,
) -> Result<Vec<(f64, f64)>> {
    check(h, w, sigma_s, sigma_r)?;
    let (ry, rx) = (half(h), half(w));
    let (x, y) = (x as isize, y as isize);
    let centre = s.get_clamped(x, y);
    let (inv_s2, inv_r2) = (1.0 / (sigma_s * sigma_s), 1.0 / (sigma_r * sigma_r));
    let mut window = Vec::with_capacity(h * w);
    for dy in -ry..=ry {
        for dx in -rx..=rx {
            let v = s.get_clamped(x + dx, y + dy);
            let d2 = (dx * dx + dy * dy) as f64;
            let diff = v - centre;
            window.push(((-d2 * inv_s2).exp() * (-diff * diff * inv_r2).exp(), v));
        }
    }
    // The centre term is exp(0) * exp(0) = 1, so the sum is never zero.
    let norm: f64 = window.iter().map(|(wt, _)| wt).sum();
    for (wt, _) in &mut window {
        *wt /= norm;
    }
    Ok(window)
}

/// Bilateral filter over an `h`×`w` window. `sigma_r` is in the slice's
/// own intensity units.
pub fn bilateral_filter(s: &Slice, h: usize, w: usize, sigma_s: f64, sigma_r: f64) -> Result<Slice> {
    check(h, w, sigma_s, sigma_r)?;
    let (ry, rx) = (half(h), half(w));
    let inv_r2 = 1.0 / (sigma_r * sigma_r);
    // Spatial kernel is shared by every pixel.
    let spatial: Vec<f64> = (-ry..=ry)
        .flat_map(|dy| (-rx..=rx).map(move |dx| (dx * dx + dy * dy) as f64))
        .map(|d2| (-d2 / (sigma_s * sigma_s)).exp())
        .collect();
    let mut out = Vec::with_capacity(s.data.len());
    for y in 0..s.ny as isize {
        for x in 0..s.nx as isize {
            let centre = s.get(x as usize, y as usize);
            let (mut acc, mut norm) = (0.0, 0.0);
            let mut k = 0;
            for dy in -ry..=ry {
                for dx in -rx..=rx {
                    let v = s.get_clamped(x + dx, y + dy);
                    let diff = v - centre;
                    let wt = spatial[k] * (-diff * diff * inv_r2).exp();
                    acc += wt * v;
                    norm += wt;
                    k += 1;
                }
            }
            out.push(acc / norm);
        }
    }
    Ok(Slice { nx: s.nx, ny: s.ny, data: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(nx: usize, ny: usize) -> Slice {
        let data = (0..nx * ny).map(|i| ((i * 97 + 13) % 256) as f64).collect();
        Slice::new(nx, ny, data).unwrap()
    }

    #[test]
    fn constant_slice_is_fixed() {
        let s = Slice::new(6, 4, vec![99.0; 24]).unwrap();
        let out = bilateral_filter(&s, 3, 5, 1.3, 20.0).unwrap();
        for v in out.data {
            assert!((v - 99.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let s = ramp(7, 5);
        for y in 0..5 {
            for x in 0..7 {
                let wts = bilateral_weights(&s, x, y, 3, 7, 1.3, 40.0).unwrap();
                let sum: f64 = wts.iter().map(|(w, _)| w).sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn filter_matches_weighted_window() {
        let s = ramp(6, 6);
        let out = bilateral_filter(&s, 3, 3, 0.9, 30.0).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                let wts = bilateral_weights(&s, x, y, 3, 3, 0.9, 30.0).unwrap();
                let direct: f64 = wts.iter().map(|(w, v)| w * v).sum();
                assert!((direct - out.get(x, y)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = ramp(3, 3);
        assert!(bilateral_filter(&s, 2, 3, 1.0, 1.0).is_err());
        assert!(bilateral_filter(&s, 3, 3, 0.0, 1.0).is_err());
        assert!(bilateral_filter(&s, 3, 3, 1.0, f64::NAN).is_err());
    }
}
