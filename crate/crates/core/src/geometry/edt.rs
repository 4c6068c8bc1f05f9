//! Exact squared Euclidean distance transform on a raster.

const INF: i64 = i64::MAX / 4;

fn pass(f: &[i64], d: &mut [i64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let s = |q: usize, p: usize| -> f64 {
        let (fq, fp) = (f[q] as f64, f[p] as f64);
        ((fq + (q * q) as f64) - (fp + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64)
    };
    for q in 1..n {
        if f[q] >= INF {
            continue;
        }
        if f[v[k]] >= INF {
            v[k] = q;
            continue;
        }
        let mut sq = s(q, v[k]);
        while sq <= z[k] {
            k -= 1;
            sq = s(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = sq;
        z[k + 1] = f64::INFINITY;
    }
    if f[v[0]] >= INF {
        d.iter_mut().for_each(|x| *x = INF);
        return;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dx = q as i64 - v[k] as i64;
        *dq = dx * dx + f[v[k]];
    }
}

/// Squared distance (in cells) from every cell center to the nearest marked
/// cell center; `u32::MAX` when nothing is marked.
pub fn squared_distance_transform(marked: &[bool], width: usize, height: usize) -> Vec<u32> {
    assert_eq!(marked.len(), width * height);
    let mut g: Vec<i64> = marked.iter().map(|&m| if m { 0 } else { INF }).collect();
    let n = width.max(height);
    let mut f = vec![0i64; n];
    let mut d = vec![0i64; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    for x in 0..width {
        for y in 0..height {
            f[y] = g[y * width + x];
        }
        pass(&f[..height], &mut d[..height], &mut v, &mut z);
        for y in 0..height {
            g[y * width + x] = d[y];
        }
    }
    for y in 0..height {
        f[..width].copy_from_slice(&g[y * width..(y + 1) * width]);
        pass(&f[..width], &mut d[..width], &mut v, &mut z);
        g[y * width..(y + 1) * width].copy_from_slice(&d[..width]);
    }
    g.into_iter()
        .map(|x| if x >= INF { u32::MAX } else { x.min(u32::MAX as i64 - 1) as u32 })
        .collect()
}

/// Mark every cell within Euclidean distance `radius` cells of a marked
/// cell.
pub fn dilate(marked: &[bool], width: usize, height: usize, radius: f64) -> Vec<bool> {
    let r2 = radius * radius;
    squared_distance_transform(marked, width, height)
        .into_iter()
        .map(|d| d != u32::MAX && (d as f64) <= r2 + 1e-9)
        .collect()
}
