//! Shared helpers for the integration suites: seeded random diagram
//! generation and random trace-preserving channels.
// Not every suite uses every helper.
#![allow(dead_code)]

use propcalc::dsl::{Diagram, Init, LegDecl, Node, PortRef, Wire};
use propcalc::linalg::{self, CMat};
use propcalc::morph::{Direction, Essence};
use propcalc::thickctc::{Channel, TraceMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random well-typed diagram: 2-5 nodes over spaces A (dim 2) and
/// B (dim 3), wired with 1-4 plain wires (self-loops allowed), open
/// legs declared as outputs, every node dense-initialized.
pub fn random_diagram(seed: u64) -> Diagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_nodes = rng.gen_range(2..=5);
    let spaces = vec![("A".to_string(), 2usize), ("B".to_string(), 3usize)];
    let mut legs: Vec<Vec<LegDecl>> = vec![Vec::new(); n_nodes];
    let mut wires = Vec::new();
    let n_wires = rng.gen_range(1..=4);
    for _ in 0..n_wires {
        let from = rng.gen_range(0..n_nodes);
        let to = rng.gen_range(0..n_nodes);
        let (space, dim) = spaces[rng.gen_range(0..spaces.len())].clone();
        let essence = if rng.gen_bool(0.5) { Essence::Physical } else { Essence::Virtual };
        legs[from].push(LegDecl { direction: Direction::Out, essence, space: space.clone(), dim });
        let fp = PortRef { node: from, port: legs[from].len() - 1 };
        legs[to].push(LegDecl { direction: Direction::In, essence, space, dim });
        let tp = PortRef { node: to, port: legs[to].len() - 1 };
        wires.push(Wire { from: fp, to: tp, bend: false, line: 0 });
    }
    let mut outputs = Vec::new();
    for node in 0..n_nodes {
        for _ in 0..rng.gen_range(0..=1) {
            let (space, dim) = spaces[rng.gen_range(0..spaces.len())].clone();
            legs[node].push(LegDecl {
                direction: Direction::Out,
                essence: Essence::Physical,
                space,
                dim,
            });
            outputs.push(PortRef { node, port: legs[node].len() - 1 });
        }
    }
    let nodes = legs
        .into_iter()
        .enumerate()
        .map(|(i, legs)| {
            let total: usize = legs.iter().map(|l| l.dim).product::<usize>().max(1);
            let data = (0..total)
                .map(|_| linalg::c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            Node { name: format!("n{i}"), legs, init: Init::Dense(data) }
        })
        .collect();
    Diagram { spaces, nodes, wires, outputs }
}

/// Random trace-preserving channel on dimension `d` with `k` Kraus
/// operators, built by normalizing random matrices with K^{-1/2}.
pub fn random_tp_channel(d: usize, k: usize, rng: &mut ChaCha8Rng) -> Channel {
    let gs: Vec<CMat> = (0..k).map(|_| linalg::random_complex_matrix(d, d, rng)).collect();
    let mut total = CMat::zeros(d, d);
    for g in &gs {
        total += g.adjoint() * g;
    }
    let (vals, vecs) = linalg::hermitian_eigen(&total);
    let mut inv_sqrt = CMat::zeros(d, d);
    for (lambda, v) in vals.iter().zip(vecs.iter()) {
        inv_sqrt += (v * v.adjoint()).scale(1.0 / lambda.sqrt());
    }
    let kraus: Vec<CMat> = gs.iter().map(|g| g * &inv_sqrt).collect();
    Channel::new(kraus, TraceMode::TracePreserving, 1e-9).expect("normalized")
}
