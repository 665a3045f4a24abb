//! Small dense-vector helpers. Everything here is allocation-light and
//! sums in index order so results are bitwise reproducible.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).fold(0.0, |acc, v| acc + v)
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .fold(0.0, |acc, v| acc + v)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn add_scaled_in_place(acc: &mut [f64], s: f64, b: &[f64]) {
    for (a, y) in acc.iter_mut().zip(b) {
        *a += s * y;
    }
}

pub fn mean(vectors: &[Vec<f64>]) -> Vec<f64> {
    let dim = vectors.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; dim];
    for v in vectors {
        add_scaled_in_place(&mut acc, 1.0, v);
    }
    let n = vectors.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

pub fn sum(vectors: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    for v in vectors {
        add_scaled_in_place(&mut acc, 1.0, v);
    }
    acc
}

/// Largest Euclidean distance between any two vectors of the collection.
pub fn max_pairwise_dist(vectors: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i + 1..] {
            worst = worst.max(dist(a, b));
        }
    }
    worst
}
