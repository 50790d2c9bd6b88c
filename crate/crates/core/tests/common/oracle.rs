//! Exact-arithmetic recomputations of the metrics, written independently of
//! the library code.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn int(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn mean(values: &[BigRational]) -> BigRational {
    values.iter().fold(BigRational::zero(), |a, b| a + b) / int(values.len())
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

/// Euclidean distance: the squared sum is exact, only the final root rounds.
pub fn distance(a: &[f64], b: &[f64]) -> BigRational {
    let sq = a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| {
        let d = rat(*x) - rat(*y);
        acc + &d * &d
    });
    rat(to_f64(&sq).sqrt())
}

/// (MPJPE, velocity error, acceleration error) with each trajectory
/// differentiated on its own before comparing.
pub fn tracking(reference: &[Vec<f64>], executed: &[Vec<f64>], fps: f64) -> (f64, f64, f64) {
    let r: Vec<Vec<BigRational>> = reference.iter().map(|f| f.iter().map(|v| rat(*v)).collect()).collect();
    let e: Vec<Vec<BigRational>> = executed.iter().map(|f| f.iter().map(|v| rat(*v)).collect()).collect();
    let fps = rat(fps);
    let t = r.len();
    let vel = |q: &[Vec<BigRational>], i: usize, k: usize| -> BigRational {
        if i == 0 {
            (&q[1][k] - &q[0][k]) * &fps
        } else if i == t - 1 {
            (&q[t - 1][k] - &q[t - 2][k]) * &fps
        } else {
            (&q[i + 1][k] - &q[i - 1][k]) * &fps / int(2)
        }
    };
    let acc = |q: &[Vec<BigRational>], i: usize, k: usize| -> BigRational {
        let c = i.max(1).min(t - 2);
        (&q[c + 1][k] - int(2) * &q[c][k] + &q[c - 1][k]) * &fps * &fps
    };
    let mut pos = vec![];
    let mut v = vec![];
    let mut a = vec![];
    for i in 0..t {
        for k in 0..r[i].len() {
            pos.push((&e[i][k] - &r[i][k]).abs());
            v.push((vel(&e, i, k) - vel(&r, i, k)).abs());
            a.push((acc(&e, i, k) - acc(&r, i, k)).abs());
        }
    }
    (to_f64(&mean(&pos)), to_f64(&mean(&v)), to_f64(&mean(&a)))
}

fn shuffled_pairs(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    (0..count).map(|i| (perm[2 * i], perm[2 * i + 1])).collect()
}

fn mean_pair_distance(rows: &[Vec<f64>], pairs: &[(usize, usize)]) -> BigRational {
    mean(&pairs.iter().map(|&(i, j)| distance(&rows[i], &rows[j])).collect::<Vec<_>>())
}

pub fn diversity(rows: &[Vec<f64>], pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    to_f64(&mean_pair_distance(rows, &shuffled_pairs(rows.len(), pairs, &mut rng)))
}

/// Groups visited in sorted label order, one generator shared across groups.
pub fn multimodality(rows: &[Vec<f64>], labels: &[String], pairs: usize, seed: u64) -> f64 {
    let mut groups: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
    for (r, l) in rows.iter().zip(labels) {
        groups.entry(l).or_default().push(r.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_group: Vec<BigRational> = groups
        .values()
        .map(|g| mean_pair_distance(g, &shuffled_pairs(g.len(), pairs, &mut rng)))
        .collect();
    to_f64(&mean(&per_group))
}

pub fn mm_dist(text: &[Vec<f64>], motion: &[Vec<f64>]) -> f64 {
    to_f64(&mean(&text.iter().zip(motion).map(|(a, b)| distance(a, b)).collect::<Vec<_>>()))
}

/// Exact mean and 1/(n−1) variance of a 1-D sample, then the closed-form
/// 1-D Fréchet distance (μa − μb)² + (σa − σb)².
pub fn fid_1d(a: &[f64], b: &[f64]) -> f64 {
    let moments = |x: &[f64]| {
        let xs: Vec<BigRational> = x.iter().map(|v| rat(*v)).collect();
        let m = mean(&xs);
        let var = xs.iter().fold(BigRational::zero(), |acc, v| acc + (v - &m) * (v - &m)) / int(x.len() - 1);
        (m, var)
    };
    let (ma, va) = moments(a);
    let (mb, vb) = moments(b);
    let gap = &ma - &mb;
    let sd = to_f64(&va).sqrt() - to_f64(&vb).sqrt();
    to_f64(&(&gap * &gap)) + sd * sd
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
