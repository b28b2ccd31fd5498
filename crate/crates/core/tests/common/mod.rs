//! Reference implementations that share no code with the crate.

#![allow(dead_code)]

use ol2r::data::{Document, Query};
use rand::Rng;

fn dcg(grades: &[u8], k: usize) -> f64 {
    let mut total = 0.0;
    for (i, &g) in grades.iter().enumerate().take(k) {
        let gain = 2f64.powi(g as i32) - 1.0;
        total += gain * std::f64::consts::LN_2 / ((i + 2) as f64).ln();
    }
    total
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// NDCG with the ideal DCG found by trying every ordering.
pub fn brute_force_ndcg(ranked: &[u8], all: &[u8], k: usize) -> f64 {
    let ideal = permutations(all)
        .iter()
        .map(|p| dcg(p, k))
        .fold(0.0, f64::max);
    if ideal == 0.0 {
        0.0
    } else {
        dcg(ranked, k) / ideal
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    // two passes keep the residual at rounding level
    for _ in 0..2 {
        for b in against {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Orthonormal complement of the row span, by modified Gram-Schmidt.
pub fn gram_schmidt_complement(rows: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let scale = rows
        .iter()
        .map(|r| dot(r, r).sqrt())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut span: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        orthogonalize(&mut v, &span);
        let n = dot(&v, &v).sqrt();
        if n > 1e-8 * scale {
            span.push(v.iter().map(|x| x / n).collect());
        }
    }
    let mut complement: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        if span.len() + complement.len() == dim {
            break;
        }
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        orthogonalize(&mut e, &span);
        orthogonalize(&mut e, &complement);
        let n = dot(&e, &e).sqrt();
        if n > 1e-6 {
            complement.push(e.iter().map(|x| x / n).collect());
        }
    }
    complement
}

/// Distance from `v` to the span of the orthonormal `basis`.
pub fn projection_residual(v: &[f64], basis: &[Vec<f64>]) -> f64 {
    let mut r = v.to_vec();
    for b in basis {
        let c = dot(v, b);
        r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
    dot(&r, &r).sqrt()
}

pub fn random_query<R: Rng>(rng: &mut R, docs: usize, dim: usize) -> Query {
    Query {
        qid: "q".into(),
        documents: (0..docs)
            .map(|i| Document {
                doc_id: format!("d{i}"),
                features: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                relevance: rng.random_range(0..=2),
            })
            .collect(),
    }
}
