use crate::error::{Error, Result};
use crate::filters::half;
use crate::volume::Slice;

/// Median over an `h`×`w` window (height × width) centred on each pixel.
///
/// `h * w` is odd, so the median is always a single window element.
pub fn median_filter(s: &Slice, h: usize, w: usize) -> Result<Slice> {
    if h.is_multiple_of(2) || w.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("median window {h}x{w} must have odd sides")));
    }
    if h == 1 && w == 1 {
        return Ok(s.clone());
    }
    let (ry, rx) = (half(h), half(w));
    let mid = h * w / 2;
    let mut window = Vec::with_capacity(h * w);
    let mut out = Vec::with_capacity(s.data.len());
    for y in 0..s.ny as isize {
        for x in 0..s.nx as isize {
            window.clear();
            for dy in -ry..=ry {
                for dx in -rx..=rx {
                    window.push(s.get_clamped(x + dx, y + dy));
                }
            }
            let (_, m, _) = window.select_nth_unstable_by(mid, f64::total_cmp);
            out.push(*m);
        }
    }
    Ok(Slice { nx: s.nx, ny: s.ny, data: out })
}
