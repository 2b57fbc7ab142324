#![allow(dead_code)]

use oqw::linalg::{hermitian_eig, Complex64, ComplexMatrix, HERMITIAN_TOL};
use oqw::state::{BlockState, FullState};
use oqw::walk::{KrausLabel, KrausTerm, OqwMap, StepMode};
use rand::Rng;

/// Standard normal sample via Box–Muller.
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen::<f64>();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = Complex64::new(gaussian(rng), gaussian(rng));
        }
    }
    m
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_matrix(rng, n, n).hermitian_part()
}

/// Hermitian matrix whose eigenvalues are separated by at least `min_gap`.
pub fn random_nondegenerate<R: Rng>(rng: &mut R, n: usize, min_gap: f64) -> ComplexMatrix {
    loop {
        let h = random_hermitian(rng, n);
        let eig = hermitian_eig(&h, HERMITIAN_TOL).unwrap();
        if eig.min_gap() >= min_gap {
            return h;
        }
    }
}

/// Random density matrix `X X† / Tr(X X†)` of full rank.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let x = random_matrix(rng, n, n);
    let rho = &x * &x.adjoint();
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr)
}

pub fn random_block_state<R: Rng>(rng: &mut R, node_count: usize, dim: usize) -> BlockState {
    let weights: Vec<f64> = (0..node_count).map(|_| rng.gen::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    let blocks = weights
        .iter()
        .map(|w| random_density(rng, dim).scale_real(w / total))
        .collect();
    BlockState::new(blocks).unwrap()
}

pub fn random_full_state<R: Rng>(rng: &mut R, node_count: usize, dim: usize) -> FullState {
    FullState::new(node_count, dim, random_density(rng, node_count * dim)).unwrap()
}

/// Normalized Kraus family: every source node gets 1–2 terms per target,
/// `B = G S^{-1/2}` with `S = Σ G†G` over the terms leaving that node.
pub fn random_kraus_terms<R: Rng>(rng: &mut R, node_count: usize, dim: usize) -> Vec<KrausTerm> {
    let mut terms = Vec::new();
    for from in 0..node_count {
        let mut raw = Vec::new();
        for to in 0..node_count {
            for k in 0..rng.gen_range(1..=2) {
                raw.push((to, k, random_matrix(rng, dim, dim)));
            }
        }
        let mut s = ComplexMatrix::zeros(dim, dim);
        for (_, _, g) in &raw {
            s += &g.gram();
        }
        let inv_sqrt = hermitian_eig(&s, HERMITIAN_TOL)
            .unwrap()
            .reconstruct_with(|l| Complex64::new(1.0 / l.sqrt(), 0.0));
        for (to, k, g) in raw {
            terms.push(KrausTerm::new(from, to, KrausLabel::Index(k), &g * &inv_sqrt));
        }
    }
    terms
}

pub fn random_strict_map<R: Rng>(rng: &mut R, node_count: usize, dim: usize) -> OqwMap {
    OqwMap::new(
        node_count,
        dim,
        random_kraus_terms(rng, node_count, dim),
        StepMode::Strict,
    )
    .unwrap()
}
