//! Slow, direct reference computations for checking the fast paths in
//! `poreseg`. Nothing here calls into the algorithms under test; only the
//! plain data types are shared.

use std::collections::BTreeSet;

use poreseg::volume::{BinaryVolume, Dims, Slice, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_slice(rng: &mut ChaCha8Rng, nx: usize, ny: usize, scale: f64) -> Slice {
    let data = (0..nx * ny).map(|_| rng.random::<f64>() * scale).collect();
    Slice::new(nx, ny, data).unwrap()
}

pub fn random_volume(rng: &mut ChaCha8Rng, dims: Dims) -> Volume {
    let data = (0..dims.len()).map(|_| rng.random_range(0..=255u8) as f64).collect();
    Volume::new(dims, data).unwrap()
}

pub fn random_binary(rng: &mut ChaCha8Rng, dims: Dims, fill: f64) -> BinaryVolume {
    let labels = (0..dims.len()).map(|_| (rng.random::<f64>() < fill) as u8).collect();
    BinaryVolume::new(dims, labels).unwrap()
}

/// 256-bin counts of random sparsity with at least one occupied bin in
/// each half.
pub fn random_counts(rng: &mut ChaCha8Rng) -> Vec<u64> {
    let density = rng.random_range(0.02..1.0);
    let mut counts: Vec<u64> =
        (0..256).map(|_| if rng.random::<f64>() < density { rng.random_range(0..5000) } else { 0 }).collect();
    counts[rng.random_range(0..128)] += 1;
    counts[rng.random_range(128..256)] += 1;
    counts
}

/// Clamp-to-edge read.
fn at(s: &Slice, x: isize, y: isize) -> f64 {
    let x = x.max(0).min(s.nx as isize - 1) as usize;
    let y = y.max(0).min(s.ny as isize - 1) as usize;
    s.data[y * s.nx + x]
}

/// Sorts the full window and takes the middle element.
pub fn median(s: &Slice, h: usize, w: usize) -> Slice {
    let (ry, rx) = ((h / 2) as isize, (w / 2) as isize);
    let mut out = Vec::new();
    for y in 0..s.ny as isize {
        for x in 0..s.nx as isize {
            let mut win = Vec::new();
            for yy in y - ry..=y + ry {
                for xx in x - rx..=x + rx {
                    win.push(at(s, xx, yy));
                }
            }
            win.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out.push(win[win.len() / 2]);
        }
    }
    Slice::new(s.nx, s.ny, out).unwrap()
}

/// One explicit diffusion update written term by term:
/// `I + lambda * (g(|dN|) dN + g(|dS|) dS + g(|dE|) dE + g(|dW|) dW)`.
pub fn diffusion_step(s: &Slice, lambda: f64, k: f64) -> Slice {
    let g = |d: f64| 1.0 / (1.0 + (d.abs() / k).powi(2));
    let mut out = Vec::new();
    for y in 0..s.ny as isize {
        for x in 0..s.nx as isize {
            let c = at(s, x, y);
            let d_n = at(s, x, y - 1) - c;
            let d_s = at(s, x, y + 1) - c;
            let d_e = at(s, x + 1, y) - c;
            let d_w = at(s, x - 1, y) - c;
            out.push(c + lambda * (g(d_n) * d_n + g(d_s) * d_s + g(d_e) * d_e + g(d_w) * d_w));
        }
    }
    Slice::new(s.nx, s.ny, out).unwrap()
}

/// Normalized spatial Gaussian `exp(-r^2 / sigma^2)` over an `h`×`w` window.
pub fn spatial_gaussian(s: &Slice, h: usize, w: usize, sigma: f64) -> Slice {
    let (ry, rx) = ((h / 2) as isize, (w / 2) as isize);
    let mut out = Vec::new();
    for y in 0..s.ny as isize {
        for x in 0..s.nx as isize {
            let (mut acc, mut norm) = (0.0, 0.0);
            for dy in -ry..=ry {
                for dx in -rx..=rx {
                    let wt = (-((dx * dx + dy * dy) as f64) / (sigma * sigma)).exp();
                    acc += wt * at(s, x + dx, y + dy);
                    norm += wt;
                }
            }
            out.push(acc / norm);
        }
    }
    Slice::new(s.nx, s.ny, out).unwrap()
}

fn window_stats(s: &Slice, kx: isize, ky: isize, r: isize) -> (f64, f64) {
    let mut vals = Vec::new();
    for y in ky - r..=ky + r {
        for x in kx - r..=kx + r {
            vals.push(at(s, x, y));
        }
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Guided-filter output as the explicit triple sum over pixels `j` and
/// windows `k` containing both `i` and `j`:
/// `q_i = sum_j [ (1/|w|^2) sum_k (1 + (I_i - mu_k)(I_j - mu_k) / (var_k + eps)) ] I_j`.
/// Windows may be centred up to `r` pixels outside the image; samples are
/// clamp-to-edge.
pub fn guided_triple_sum(s: &Slice, w: usize, eps: f64) -> Slice {
    let r = (w / 2) as isize;
    let area = (w * w) as f64;
    let mut out = Vec::new();
    for iy in 0..s.ny as isize {
        for ix in 0..s.nx as isize {
            let ii = at(s, ix, iy);
            let mut q = 0.0;
            for jy in iy - 2 * r..=iy + 2 * r {
                for jx in ix - 2 * r..=ix + 2 * r {
                    let ij = at(s, jx, jy);
                    let mut weight = 0.0;
                    for ky in iy - r..=iy + r {
                        for kx in ix - r..=ix + r {
                            if (jx - kx).abs() > r || (jy - ky).abs() > r {
                                continue;
                            }
                            let (mu, var) = window_stats(s, kx, ky, r);
                            weight += 1.0 + (ii - mu) * (ij - mu) / (var + eps);
                        }
                    }
                    q += weight / (area * area) * ij;
                }
            }
            out.push(q);
        }
    }
    Slice::new(s.nx, s.ny, out).unwrap()
}

/// Mean over `w`×`w` windows of the window means (the large-`eps` limit of
/// the guided filter).
pub fn double_box(s: &Slice, w: usize) -> Slice {
    let r = (w / 2) as isize;
    let mut out = Vec::new();
    for iy in 0..s.ny as isize {
        for ix in 0..s.nx as isize {
            let mut acc = 0.0;
            for ky in iy - r..=iy + r {
                for kx in ix - r..=ix + r {
                    acc += window_stats(s, kx, ky, r).0;
                }
            }
            out.push(acc / (w * w) as f64);
        }
    }
    Slice::new(s.nx, s.ny, out).unwrap()
}

pub fn histogram(v: &Volume) -> Vec<u64> {
    let mut counts = vec![0u64; 256];
    for &x in v.data() {
        let mut b = 0usize;
        while b < 255 && x >= b as f64 + 0.5 {
            b += 1;
        }
        counts[b] += 1;
    }
    counts
}

/// Criterion value of a cut, from two-pass class statistics.
pub fn otsu_criterion(counts: &[u64], t: usize) -> Option<f64> {
    let class = |range: std::ops::RangeInclusive<usize>| {
        let n: f64 = range.clone().map(|b| counts[b] as f64).sum();
        if n == 0.0 {
            return (0.0, 0.0);
        }
        let mean = range.clone().map(|b| b as f64 * counts[b] as f64).sum::<f64>() / n;
        let scatter = range.map(|b| counts[b] as f64 * (b as f64 - mean).powi(2)).sum::<f64>();
        (n, scatter)
    };
    let (n0, s0) = class(0..=t);
    let (n1, s1) = class(t + 1..=255);
    if n0 == 0.0 || n1 == 0.0 {
        return None;
    }
    let total = n0 + n1;
    let (w0, w1) = (n0 / total, n1 / total);
    let pooled = (s0 + s1) / total;
    if pooled == 0.0 {
        return Some(f64::INFINITY);
    }
    Some(w0 * w0.ln() + w1 * w1.ln() - 0.5 * pooled.ln())
}

/// Exhaustive sweep over all 255 cuts; first maximum wins.
pub fn otsu_sweep(counts: &[u64]) -> Option<(u8, f64)> {
    let mut best: Option<(u8, f64)> = None;
    for t in 0..255 {
        if let Some(j) = otsu_criterion(counts, t) {
            if best.is_none() || j > best.unwrap().1 {
                best = Some((t as u8, j));
            }
        }
    }
    best
}

fn neighbours(conn: u8) -> Vec<[isize; 3]> {
    let mut out = Vec::new();
    for dz in -1isize..=1 {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let nz = (dx != 0) as u8 + (dy != 0) as u8 + (dz != 0) as u8;
                let keep = match conn {
                    6 => nz == 1,
                    18 => nz == 1 || nz == 2,
                    _ => nz >= 1,
                };
                if keep {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

/// Connected material sets by flood fill, each as a set of linear indices.
pub fn flood_fill_partition(b: &BinaryVolume, conn: u8) -> BTreeSet<BTreeSet<usize>> {
    let d = b.dims();
    let offs = neighbours(conn);
    let mut seen = vec![false; d.len()];
    let mut parts = BTreeSet::new();
    for start in 0..d.len() {
        if seen[start] || b.labels()[start] == 0 {
            continue;
        }
        let mut part = BTreeSet::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            part.insert(i);
            let [x, y, z] = [i % d.nx, (i / d.nx) % d.ny, i / (d.nx * d.ny)];
            for o in &offs {
                let (px, py, pz) = (x as isize + o[0], y as isize + o[1], z as isize + o[2]);
                if px < 0 || py < 0 || pz < 0 || px >= d.nx as isize || py >= d.ny as isize || pz >= d.nz as isize {
                    continue;
                }
                let j = (pz as usize * d.ny + py as usize) * d.nx + px as usize;
                if !seen[j] && b.labels()[j] == 1 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        parts.insert(part);
    }
    parts
}

/// Minimum Euclidean distance over all voxel pairs.
pub fn all_pairs_distance(a: &[[usize; 3]], b: &[[usize; 3]]) -> f64 {
    let mut best = f64::INFINITY;
    for p in a {
        for q in b {
            let d2: f64 = (0..3).map(|k| (p[k] as f64 - q[k] as f64).powi(2)).sum();
            best = best.min(d2.sqrt());
        }
    }
    best
}

pub fn distortion(a: &Volume, b: &Volume) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    acc.sqrt() / a.len() as f64
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
