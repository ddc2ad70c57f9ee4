#![allow(dead_code)]

use ergo_core::{Distribution, Observable, StochasticChain};
use proptest::prelude::*;

pub fn p2() -> StochasticChain {
    StochasticChain::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
}

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Rows with every entry at least `floor`.
fn positive_rows(n: usize, floor: f64) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, n), n).prop_map(move |rows| {
        rows.into_iter()
            .map(|w| {
                let w = normalize(w.into_iter().map(|x| x + 1e-3).collect());
                w.into_iter().map(|x| floor + (1.0 - floor * n as f64) * x).collect()
            })
            .collect()
    })
}

pub fn positive_chain(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = StochasticChain> {
    sizes.prop_flat_map(|n| positive_rows(n, 0.01)).prop_map(|r| StochasticChain::from_rows(&r).unwrap())
}

/// Chains with roughly a third of the entries zero; every row keeps mass.
pub fn sparse_chain(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = StochasticChain> {
    sizes
        .prop_flat_map(|n| {
            prop::collection::vec(
                prop::collection::vec(prop_oneof![1 => Just(0.0), 2 => 0.05..1.0f64], n),
                n,
            )
        })
        .prop_map(|rows| {
            let n = rows.len();
            let rows: Vec<Vec<f64>> = rows
                .into_iter()
                .enumerate()
                .map(|(i, mut w)| {
                    if w.iter().all(|x| *x == 0.0) {
                        w[(i + 1) % n] = 1.0;
                    }
                    normalize(w)
                })
                .collect();
            StochasticChain::from_rows(&rows).unwrap()
        })
}

pub fn distribution(n: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.0..1.0f64, n)
        .prop_map(|w| Distribution::new(normalize(w.into_iter().map(|x| x + 1e-6).collect())).unwrap())
}

pub fn observable(n: usize) -> impl Strategy<Value = Observable> {
    prop::collection::vec(-1.0..1.0f64, n).prop_map(|v| Observable::new(v).unwrap())
}

/// A chain together with an observable of matching length.
pub fn chain_and_observable(
    sizes: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (StochasticChain, Observable)> {
    positive_chain(sizes).prop_flat_map(|c| {
        let n = c.len();
        (Just(c), observable(n))
    })
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
