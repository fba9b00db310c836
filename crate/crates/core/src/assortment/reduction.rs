//! Hard instances from vertex cover.
//!
//! Each vertex becomes a product priced 1 and one extra product is priced 3.
//! Every edge `{i, j}` is a customer type with weight `L = 1/(|E| + |V|/3)`
//! and every vertex `j` a type `{j, |V|+1}` with weight `L/3`. Offering the
//! expensive product plus a vertex cover of size `k` earns
//! `(|E| + |V| − k/3) L`, and no assortment reaches that revenue without such
//! a cover.

use std::collections::BTreeSet;

use super::PriceVector;
use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductUniverse, MAX_PRODUCTS};
use crate::model::StochasticSetModel;
use crate::scalar::Scalar;

/// Simple undirected graph on vertices `1..=vertices`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Rejects self-loops, repeated edges and out-of-range endpoints.
    pub fn new(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if vertices == 0 || vertices >= MAX_PRODUCTS {
            return Err(SsmError::Input(format!("vertex count must be in 1..{MAX_PRODUCTS}, got {vertices}")));
        }
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(SsmError::Input(format!("self-loop at vertex {u}")));
            }
            if !(1..=vertices).contains(&u) || !(1..=vertices).contains(&v) {
                return Err(SsmError::Input(format!("edge ({u}, {v}) leaves vertices 1..={vertices}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(SsmError::Input(format!("edge ({u}, {v}) appears twice")));
            }
        }
        Ok(Self { vertices, edges: seen.into_iter().collect() })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    /// Edges as `(low, high)`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

#[derive(Clone, Debug)]
pub struct VertexCoverInstance<T> {
    pub model: StochasticSetModel<T>,
    pub prices: PriceVector<T>,
    /// `(|E| + |V| − k/3) L`.
    pub threshold: T,
    /// Edge-type weight `L`.
    pub edge_weight: T,
}

pub fn vertex_cover_instance<T: Scalar>(graph: &Graph, k: usize) -> Result<VertexCoverInstance<T>> {
    let v = graph.vertices();
    let e = graph.edges().len();
    let universe = ProductUniverse::new(v + 1)?;
    let hub = v + 1;
    // L = 3 / (3|E| + |V|), kept as a ratio of integers for accuracy
    let denom = T::from_count((3 * e + v) as u64);
    let edge_weight = T::lit(3.0) / denom;
    let vertex_weight = T::one() / denom;
    let mut support: Vec<(ItemSet, T)> =
        graph.edges().iter().map(|&(a, b)| (ItemSet::singleton(a).with(b), edge_weight)).collect();
    support.extend((1..=v).map(|j| (ItemSet::singleton(j).with(hub), vertex_weight)));
    let model = StochasticSetModel::new(universe, support)?;
    let mut prices = vec![T::one(); v];
    prices.push(T::lit(3.0));
    let prices = PriceVector::new(universe, prices)?;
    let numerator = T::from_count((3 * e + 3 * v) as u64) - T::from_count(k as u64);
    Ok(VertexCoverInstance { model, prices, threshold: numerator / denom, edge_weight })
}
