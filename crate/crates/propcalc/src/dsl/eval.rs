//! Plan execution: build node morphs from their initializers, apply the
//! metadata opposite to bent-wire targets, then run the plan steps and
//! permute the result into declared output order.

use super::{Diagram, DslError, Init, Plan, PortRef, Step};
use crate::linalg::{self, cr, CMat};
use crate::morph::{Direction, Leg, Morph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct EvalResult {
    pub morph: Morph,
    /// Scalar multiply-adds actually performed.
    pub realized_cost: u64,
    /// Largest intermediate tensor, in elements.
    pub peak_elements: usize,
}

/// A live component: its tensor plus which (node, port) each leg is.
struct Live {
    morph: Morph,
    ports: Vec<PortRef>,
}

impl Live {
    fn position(&self, p: PortRef) -> Result<usize, DslError> {
        self.ports
            .iter()
            .position(|&q| q == p)
            .ok_or_else(|| DslError::Eval(format!("port {}.{} not open", p.node, p.port + 1)))
    }
}

/// The shape a builder's natural matrix takes on this node.
fn natural_shape(name: &str, dims: &[usize], out_prod: usize, in_prod: usize) -> (usize, usize) {
    match name {
        "identity" => {
            if out_prod == in_prod && out_prod > 0 && !dims.is_empty() {
                (out_prod, out_prod)
            } else {
                let k = (1..dims.len())
                    .map(|s| dims[..s].iter().product::<usize>())
                    .find(|&pre| {
                        pre == dims.iter().product::<usize>() / pre
                    })
                    .expect("validated at parse");
                (k, k)
            }
        }
        "bell" => (4, 1),
        "pauli" | "hadamard" => (2, 2),
        "cnot" | "swap" => (4, 4),
        "random" => (out_prod.max(1), in_prod.max(1)),
        other => unreachable!("unknown builder '{other}' past parsing"),
    }
}

fn unflatten(flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0usize; dims.len()];
    let mut rem = flat;
    for k in (0..dims.len()).rev() {
        idx[k] = rem % dims[k];
        rem /= dims[k];
    }
    idx
}

fn group_index(idx: &[usize], dims: &[usize], ports: &[usize]) -> usize {
    let mut acc = 0usize;
    for &p in ports {
        acc = acc * dims[p] + idx[p];
    }
    acc
}

fn builder_matrix(name: &str, args: &[String], rows: usize, cols: usize) -> CMat {
    match name {
        "identity" => linalg::identity(rows),
        "bell" => {
            let bits: Vec<u8> = args[0].bytes().map(|b| b - b'0').collect();
            let v = linalg::bell_vector(bits[0], bits[1]);
            CMat::from_fn(4, 1, |i, _| v[i])
        }
        "pauli" => match args[0].as_str() {
            "x" => linalg::pauli_x(),
            "y" => linalg::pauli_y(),
            _ => linalg::pauli_z(),
        },
        "hadamard" => linalg::hadamard(),
        "cnot" => linalg::cnot(),
        "swap" => linalg::swap(),
        "random" => {
            let seed: u64 = args[0].parse().expect("validated at parse");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            linalg::random_complex_matrix(rows, cols, &mut rng)
        }
        other => unreachable!("unknown builder '{other}' past parsing"),
    }
}

/// Materialize one node. Builders are read as matrices from the node's
/// Out legs (rows) to its In legs (columns), both in declaration order;
/// when the declared shape is the transpose of the builder's natural
/// one, the adjoint is used (a state builder on In legs is an effect).
fn node_morph(d: &Diagram, node: usize) -> Result<Morph, DslError> {
    let n = &d.nodes[node];
    let legs: Vec<Leg> = n
        .legs
        .iter()
        .map(|l| Leg::new(l.space.clone(), l.dim, l.direction, l.essence))
        .collect();
    let data = match &n.init {
        Init::Dense(vals) => vals.clone(),
        Init::Builder { name, args } => {
            let dims: Vec<usize> = legs.iter().map(|l| l.dim).collect();
            let out_ports: Vec<usize> = (0..legs.len())
                .filter(|&p| legs[p].direction == Direction::Out)
                .collect();
            let in_ports: Vec<usize> = (0..legs.len())
                .filter(|&p| legs[p].direction == Direction::In)
                .collect();
            let out_prod: usize = out_ports.iter().map(|&p| dims[p]).product();
            let in_prod: usize = in_ports.iter().map(|&p| dims[p]).product();
            let (r, c) = natural_shape(name, &dims, out_prod, in_prod);
            let natural = builder_matrix(name, args, r, c);
            let total: usize = dims.iter().product::<usize>().max(1);
            let mut data = vec![cr(0.0); total];
            if (out_prod, in_prod) == (r, c) || (out_prod, in_prod) == (c, r) {
                // read as a map from In legs to Out legs (adjointed when
                // the declared shape is the transpose: a state builder
                // on In legs is the corresponding effect)
                let m = if (out_prod, in_prod) == (r, c) { natural } else { natural.adjoint() };
                for (flat, slot) in data.iter_mut().enumerate() {
                    let idx = unflatten(flat, &dims);
                    let row = group_index(&idx, &dims, &out_ports);
                    let col = group_index(&idx, &dims, &in_ports);
                    *slot = m[(row, col)];
                }
            } else {
                // row-major over a declaration-order split (cups, caps
                // and other same-direction nodes)
                let split = (0..=dims.len())
                    .find(|&s| {
                        let pre: usize = dims[..s].iter().product();
                        let post: usize = dims[s..].iter().product();
                        (pre, post) == (r, c)
                    })
                    .expect("validated at parse");
                let pre_ports: Vec<usize> = (0..split).collect();
                let post_ports: Vec<usize> = (split..dims.len()).collect();
                for (flat, slot) in data.iter_mut().enumerate() {
                    let idx = unflatten(flat, &dims);
                    let row = group_index(&idx, &dims, &pre_ports);
                    let col = group_index(&idx, &dims, &post_ports);
                    *slot = natural[(row, col)];
                }
            }
            data
        }
    };
    Morph::new(legs, data).map_err(|e| DslError::Eval(format!("node '{}': {e}", n.name)))
}

pub fn evaluate(d: &Diagram, plan: &Plan, element_cap: usize) -> Result<EvalResult, DslError> {
    let mut live: HashMap<usize, Live> = HashMap::new();
    for i in 0..d.nodes.len() {
        let mut m = node_morph(d, i)?;
        // bent wires: opposite the target endpoint so the pair becomes
        // an ordinary Out/In contraction (metadata only, data unchanged)
        for w in &d.wires {
            if w.bend && w.to.node == i {
                m = m
                    .opposite(w.to.port)
                    .map_err(|e| DslError::Eval(format!("bend on {}: {e}", d.port_name(w.to))))?;
            }
        }
        let ports = (0..d.nodes[i].legs.len()).map(|p| PortRef { node: i, port: p }).collect();
        live.insert(i, Live { morph: m, ports });
    }
    let mut cost: u64 = 0;
    let mut peak: usize = live.values().map(|l| l.morph.elements()).max().unwrap_or(1);
    let mut guard = |elements: usize| -> Result<(), DslError> {
        if elements > element_cap {
            return Err(DslError::CapExceeded { needed: elements, cap: element_cap });
        }
        peak = peak.max(elements);
        Ok(())
    };
    let mut last_out = None;
    for step in &plan.steps {
        match step {
            Step::SelfLoop { comp, wire, out } => {
                let c = live
                    .remove(comp)
                    .ok_or_else(|| DslError::Eval(format!("plan references dead component {comp}")))?;
                let (f, t) = (d.wires[*wire].from, d.wires[*wire].to);
                let (pa, pb) = (c.position(f)?, c.position(t)?);
                let dim = c.morph.legs()[pa].dim as u64;
                let m = c
                    .morph
                    .partial_trace(pa, pb)
                    .map_err(|e| DslError::Eval(format!("wire {}: {e}", wire + 1)))?;
                cost += m.elements() as u64 * dim;
                guard(m.elements())?;
                let ports = c
                    .ports
                    .into_iter()
                    .filter(|&p| p != f && p != t)
                    .collect();
                live.insert(*out, Live { morph: m, ports });
                last_out = Some(*out);
            }
            Step::Merge { lhs, rhs, wires, out } => {
                let a = live
                    .remove(lhs)
                    .ok_or_else(|| DslError::Eval(format!("plan references dead component {lhs}")))?;
                let b = live
                    .remove(rhs)
                    .ok_or_else(|| DslError::Eval(format!("plan references dead component {rhs}")))?;
                let mut pairs = Vec::with_capacity(wires.len());
                let mut contracted_dim: u64 = 1;
                let mut consumed_a = Vec::new();
                let mut consumed_b = Vec::new();
                for &w in wires {
                    let (f, t) = (d.wires[w].from, d.wires[w].to);
                    // orient each wire to this (lhs, rhs) split
                    let (pa, pb, fa, fb) = if a.ports.contains(&f) {
                        (a.position(f)?, b.position(t)?, f, t)
                    } else {
                        (a.position(t)?, b.position(f)?, t, f)
                    };
                    contracted_dim *= a.morph.legs()[pa].dim as u64;
                    pairs.push((pa, pb));
                    consumed_a.push(fa);
                    consumed_b.push(fb);
                }
                let m = a
                    .morph
                    .compose(&b.morph, &pairs)
                    .map_err(|e| DslError::Eval(format!("contraction failed: {e}")))?;
                cost += m.elements() as u64 * contracted_dim;
                guard(m.elements())?;
                let mut ports: Vec<PortRef> = a
                    .ports
                    .iter()
                    .filter(|p| !consumed_a.contains(p))
                    .copied()
                    .collect();
                ports.extend(b.ports.iter().filter(|p| !consumed_b.contains(p)).copied());
                live.insert(*out, Live { morph: m, ports });
                last_out = Some(*out);
            }
            Step::Tensor { lhs, rhs, out } => {
                let a = live
                    .remove(lhs)
                    .ok_or_else(|| DslError::Eval(format!("plan references dead component {lhs}")))?;
                let b = live
                    .remove(rhs)
                    .ok_or_else(|| DslError::Eval(format!("plan references dead component {rhs}")))?;
                let m = a.morph.tensor(&b.morph);
                cost += m.elements() as u64;
                guard(m.elements())?;
                let mut ports = a.ports;
                ports.extend(b.ports);
                live.insert(*out, Live { morph: m, ports });
                last_out = Some(*out);
            }
        }
    }
    let final_id = match (live.len(), last_out) {
        (1, _) => *live.keys().next().unwrap(),
        (_, Some(id)) if live.len() == 1 => id,
        _ if live.len() == 1 => unreachable!(),
        _ => {
            return Err(DslError::Eval(format!(
                "plan left {} components instead of one",
                live.len()
            )))
        }
    };
    let c = live.remove(&final_id).unwrap();
    // reorder the surviving legs into declared output order
    let order: Vec<usize> = d
        .outputs
        .iter()
        .map(|&o| c.position(o))
        .collect::<Result<_, _>>()?;
    if order.len() != c.ports.len() {
        return Err(DslError::Eval(format!(
            "{} legs survive but {} outputs are declared",
            c.ports.len(),
            order.len()
        )));
    }
    let morph = if order.is_empty() {
        c.morph
    } else {
        c.morph
            .permute(&order)
            .map_err(|e| DslError::Eval(format!("output reorder: {e}")))?
    };
    Ok(EvalResult { morph, realized_cost: cost, peak_elements: peak })
}
