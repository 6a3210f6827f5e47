use crate::error::{Error, Result};
use crate::volume::Slice;

/// Perona–Malik conduction coefficient `1 / (1 + (x / k)^2)`.
#[inline]
pub fn edge_stopping(grad: f64, k: f64) -> f64 {
    let r = grad / k;
    1.0 / (1.0 + r * r)
}

/// One explicit update: each pixel moves by `lambda` times the sum of the
/// conducted differences toward its four neighbours. Border pixels see a
/// zero difference across the border.
pub fn diffusion_step(s: &Slice, lambda: f64, k: f64) -> Slice {
    let (nx, ny) = (s.nx, s.ny);
    let mut out = Vec::with_capacity(s.data.len());
    for y in 0..ny {
        for x in 0..nx {
            let c = s.get(x, y);
            let north = if y > 0 { s.get(x, y - 1) } else { c } - c;
            let south = if y + 1 < ny { s.get(x, y + 1) } else { c } - c;
            let east = if x + 1 < nx { s.get(x + 1, y) } else { c } - c;
            let west = if x > 0 { s.get(x - 1, y) } else { c } - c;
            let flux = edge_stopping(north.abs(), k) * north
                + edge_stopping(south.abs(), k) * south
                + edge_stopping(east.abs(), k) * east
                + edge_stopping(west.abs(), k) * west;
            out.push(c + lambda * flux);
        }
    }
    Slice { nx, ny, data: out }
}

/// Runs `iterations` diffusion steps.
pub fn anisotropic_diffusion(s: &Slice, iterations: usize, lambda: f64, k: f64) -> Result<Slice> {
    if !(lambda > 0.0 && lambda <= 0.25) {
        return Err(Error::InvalidParameter(format!("lambda={lambda} must lie in (0, 0.25]")));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidParameter(format!("K={k} must be finite and > 0")));
    }
    let mut cur = s.clone();
    for _ in 0..iterations {
        cur = diffusion_step(&cur, lambda, k);
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conduction_coefficient_values() {
        assert_eq!(edge_stopping(0.0, 20.0), 1.0);
        assert_eq!(edge_stopping(20.0, 20.0), 0.5);
        assert_eq!(edge_stopping(7.5, 7.5), 0.5);
    }

    #[test]
    fn constant_slice_is_fixed() {
        let s = Slice::new(5, 4, vec![42.0; 20]).unwrap();
        assert_eq!(anisotropic_diffusion(&s, 25, 0.25, 10.0).unwrap(), s);
    }

    #[test]
    fn rejects_unstable_lambda() {
        let s = Slice::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(anisotropic_diffusion(&s, 1, 0.3, 10.0).is_err());
        assert!(anisotropic_diffusion(&s, 1, 0.0, 10.0).is_err());
        assert!(anisotropic_diffusion(&s, 1, 0.2, 0.0).is_err());
    }

    #[test]
    fn conserves_total_intensity() {
        // Fluxes are antisymmetric and borders are insulating.
        let data: Vec<f64> = (0..30).map(|i| ((i * 53) % 256) as f64).collect();
        let s = Slice::new(6, 5, data).unwrap();
        let out = anisotropic_diffusion(&s, 10, 0.2, 20.0).unwrap();
        let before: f64 = s.data.iter().sum();
        let after: f64 = out.data.iter().sum();
        assert!((before - after).abs() < 1e-9);
    }
}
