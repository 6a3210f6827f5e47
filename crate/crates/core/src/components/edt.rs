//! Exact squared Euclidean distance transform (separable lower-envelope
//! algorithm of Felzenszwalb and Huttenlocher).

use crate::volume::Dims;

/// 1D squared distance transform of the sampled function `f` into `out`.
/// `v` and `z` are scratch buffers of length `n` and `n + 1`.
fn transform_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(i) => i,
        None => {
            out.fill(f64::INFINITY);
            return;
        }
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        let qf = q as f64;
        let intersect = |p: usize| {
            let pf = p as f64;
            ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
        };
        let mut s = intersect(v[k]);
        // z[0] is -inf, so this never pops the first parabola.
        while s <= z[k] {
            k -= 1;
            s = intersect(v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance from every voxel to the nearest seed voxel
/// (`+inf` everywhere when there are no seeds).
pub fn squared_distance_transform(dims: Dims, is_seed: impl Fn(usize) -> bool) -> Vec<f64> {
    let n = dims.len();
    let mut grid: Vec<f64> = (0..n).map(|i| if is_seed(i) { 0.0 } else { f64::INFINITY }).collect();
    let longest = dims.nx.max(dims.ny).max(dims.nz);
    let mut f = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0; longest + 1];

    let axes = [(dims.nx, 1usize), (dims.ny, dims.nx), (dims.nz, dims.plane())];
    for (axis, &(len, stride)) in axes.iter().enumerate() {
        for start in 0..n {
            // Visit each line once, from its first voxel along this axis.
            let coord = match axis {
                0 => start % dims.nx,
                1 => (start / dims.nx) % dims.ny,
                _ => start / dims.plane(),
            };
            if coord != 0 {
                continue;
            }
            for i in 0..len {
                f[i] = grid[start + i * stride];
            }
            transform_1d(&f[..len], &mut out[..len], &mut v[..len], &mut z[..len + 1]);
            for i in 0..len {
                grid[start + i * stride] = out[i];
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(dims: Dims, seeds: &[usize]) -> Vec<f64> {
        (0..dims.len())
            .map(|i| {
                let a = dims.coords(i);
                seeds
                    .iter()
                    .map(|&s| {
                        let b = dims.coords(s);
                        (0..3).map(|k| (a[k] as f64 - b[k] as f64).powi(2)).sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn single_seed_matches_brute_force() {
        let dims = Dims::new(5, 4, 3).unwrap();
        let seeds = [dims.index(1, 2, 1)];
        assert_eq!(squared_distance_transform(dims, |i| seeds.contains(&i)), brute(dims, &seeds));
    }

    #[test]
    fn scattered_seeds_match_brute_force() {
        let dims = Dims::new(7, 6, 5).unwrap();
        let seeds: Vec<usize> = (0..dims.len()).filter(|i| (i * 31 + 7) % 23 == 0).collect();
        assert_eq!(squared_distance_transform(dims, |i| seeds.contains(&i)), brute(dims, &seeds));
    }

    #[test]
    fn no_seeds_is_infinite() {
        let dims = Dims::new(3, 3, 3).unwrap();
        assert!(squared_distance_transform(dims, |_| false).iter().all(|d| d.is_infinite()));
    }
}
