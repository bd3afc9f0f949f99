#![allow(dead_code)]

//! Shared fixtures and reference implementations for the integration tests.
//! The oracles here deliberately use the most direct formula available so
//! they share no code path with the library.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solsent::geolocate::Gazetteer;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn gazetteer() -> Gazetteer {
    Gazetteer::load(data_dir().join("gazetteer")).expect("bundled gazetteer loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

// ---------------------------------------------------------------- linear algebra

pub type Mat = Vec<Vec<f64>>;

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let bt = transpose(b);
    a.iter()
        .map(|r| {
            bt.iter()
                .map(|c| r.iter().zip(c).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect()
}

pub fn matvec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub struct OlsOracle {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub hc1: Vec<f64>,
    pub r2: f64,
}

/// Normal equations plus the explicit sandwich; `xs` excludes the intercept.
pub fn ols_oracle(y: &[f64], xs: &[Vec<f64>]) -> OlsOracle {
    let n = y.len();
    let k = xs.len();
    let x: Mat = (0..n)
        .map(|i| {
            std::iter::once(1.0)
                .chain(xs.iter().map(|c| c[i]))
                .collect()
        })
        .collect();
    let xt = transpose(&x);
    let xtx_inv = invert(&matmul(&xt, &x)).expect("full rank");
    let xty = matvec(&xt, y);
    let beta = matvec(&xtx_inv, &xty);
    let fitted = matvec(&x, &beta);
    let e: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let df = (n - k - 1) as f64;
    let sigma2 = e.iter().map(|v| v * v).sum::<f64>() / df;
    let se = (0..=k).map(|j| (sigma2 * xtx_inv[j][j]).sqrt()).collect();
    let meat: Mat = (0..=k)
        .map(|a| {
            (0..=k)
                .map(|b| (0..n).map(|i| x[i][a] * x[i][b] * e[i] * e[i]).sum())
                .collect()
        })
        .collect();
    let sandwich = matmul(&matmul(&xtx_inv, &meat), &xtx_inv);
    let hc1 = (0..=k)
        .map(|j| (sandwich[j][j] * n as f64 / df).sqrt())
        .collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let ssr: f64 = e.iter().map(|v| v * v).sum();
    OlsOracle {
        beta,
        se,
        hc1,
        r2: 1.0 - ssr / sst,
    }
}

/// A random design with mild correlation between columns and
/// heteroskedastic noise.
pub fn random_design(r: &mut ChaCha8Rng, n: usize, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let base: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let xs: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let scale = 10f64.powi(j as i32 % 3);
            (0..n)
                .map(|i| scale * (0.4 * base[i] + r.random_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    let beta: Vec<f64> = (0..=k).map(|_| r.random_range(-2.0..2.0)).collect();
    let y = (0..n)
        .map(|i| {
            let mut v = beta[0];
            for j in 0..k {
                v += beta[j + 1] * xs[j][i];
            }
            v + r.random_range(-1.0..1.0) * (1.0 + base[i].abs())
        })
        .collect();
    (y, xs)
}

// ---------------------------------------------------------------- statistics

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-pass sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn bartlett_oracle(groups: &[Vec<f64>]) -> f64 {
    let k = groups.len() as f64;
    let n: f64 = groups.iter().map(|g| g.len() as f64).sum();
    let sp2 = groups
        .iter()
        .map(|g| (g.len() as f64 - 1.0) * variance(g))
        .sum::<f64>()
        / (n - k);
    let num = (n - k) * sp2.ln()
        - groups
            .iter()
            .map(|g| (g.len() as f64 - 1.0) * variance(g).ln())
            .sum::<f64>();
    let c = 1.0
        + (groups
            .iter()
            .map(|g| 1.0 / (g.len() as f64 - 1.0))
            .sum::<f64>()
            - 1.0 / (n - k))
            / (3.0 * (k - 1.0));
    num / c
}

// ---------------------------------------------------------------- text fixtures

pub const POSITIVE_WORDS: [&str; 12] = [
    "love",
    "great",
    "amazing",
    "excited",
    "proud",
    "savings",
    "hiring",
    "bright",
    "wonderful",
    "thrilled",
    "win",
    "happy",
];
pub const NEGATIVE_WORDS: [&str; 12] = [
    "hate",
    "scam",
    "ugly",
    "expensive",
    "waste",
    "terrible",
    "fraud",
    "ripoff",
    "awful",
    "disaster",
    "useless",
    "angry",
];
pub const SHARED_WORDS: [&str; 8] = [
    "solar", "panel", "roof", "energy", "the", "my", "new", "power",
];

/// Texts built from disjoint positive and negative vocabularies plus shared
/// filler, alternating labels.
pub fn separable_corpus(n: usize, seed: u64) -> Vec<(String, bool)> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let positive = i % 2 == 0;
            let vocab = if positive {
                &POSITIVE_WORDS
            } else {
                &NEGATIVE_WORDS
            };
            let mut words: Vec<&str> = (0..3)
                .map(|_| vocab[r.random_range(0..vocab.len())])
                .collect();
            words.extend((0..4).map(|_| SHARED_WORDS[r.random_range(0..SHARED_WORDS.len())]));
            for j in (1..words.len()).rev() {
                words.swap(j, r.random_range(0..=j));
            }
            (words.join(" "), positive)
        })
        .collect()
}

pub fn annotations_tsv(rows: &[(String, bool)]) -> String {
    let mut s = String::from("text\tlabel\n");
    for (t, p) in rows {
        s.push_str(t);
        s.push('\t');
        s.push_str(if *p { "positive" } else { "negative" });
        s.push('\n');
    }
    s
}
