//! Contraction-order planning. A plan is an ordered list of pairwise
//! steps over "components" (initially one per node); merging two
//! components contracts every remaining wire between them at once.
//! Self-loops (both endpoints on one node) are unary steps taken first.

use super::{Diagram, DslError, PortRef};
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Greedy,
    Exhaustive,
}

#[derive(Debug, Clone, Serialize)]
pub enum Step {
    /// Trace a wire whose endpoints sit on the same component.
    SelfLoop { comp: usize, wire: usize, out: usize },
    /// Contract all listed wires between two components.
    Merge { lhs: usize, rhs: usize, wires: Vec<usize>, out: usize },
    /// Join two wire-disconnected components by tensor product.
    Tensor { lhs: usize, rhs: usize, out: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct Plan {
    /// Component ids 0..n_nodes are the nodes; each step creates `out`.
    pub steps: Vec<Step>,
    /// Total predicted scalar multiply-adds.
    pub predicted_cost: u64,
    /// Largest intermediate tensor, in elements.
    pub peak_elements: usize,
}

/// Planner-side view of a component: which nodes it contains and which
/// ports are still open.
#[derive(Debug, Clone)]
struct Comp {
    id: usize,
    nodes: BTreeSet<usize>,
    open: Vec<(PortRef, usize)>, // port and its dimension
}

impl Comp {
    fn elements(&self) -> usize {
        self.open.iter().map(|&(_, d)| d).product::<usize>().max(1)
    }
}

struct Ctx {
    wires: Vec<(PortRef, PortRef)>,
}

impl Ctx {
    /// Indices of still-uncontracted wires joining the two components.
    fn wires_between(&self, a: &Comp, b: &Comp, done: &[bool]) -> Vec<usize> {
        self.wires
            .iter()
            .enumerate()
            .filter(|&(i, &(f, t))| {
                !done[i]
                    && ((a.nodes.contains(&f.node) && b.nodes.contains(&t.node))
                        || (a.nodes.contains(&t.node) && b.nodes.contains(&f.node)))
            })
            .map(|(i, _)| i)
            .collect()
    }

    fn merge_result(&self, a: &Comp, b: &Comp, wires: &[usize], out_id: usize) -> (Comp, u64) {
        let contracted: BTreeSet<PortRef> = wires
            .iter()
            .flat_map(|&i| [self.wires[i].0, self.wires[i].1])
            .collect();
        let mut open = Vec::new();
        let mut contracted_dim: u64 = 1;
        for &(p, dim) in a.open.iter().chain(b.open.iter()) {
            if contracted.contains(&p) {
                // each wire contributes its dimension once
                continue;
            }
            open.push((p, dim));
        }
        for &i in wires {
            let (f, _) = self.wires[i];
            let d = a
                .open
                .iter()
                .chain(b.open.iter())
                .find(|&&(p, _)| p == f)
                .map(|&(_, d)| d)
                .unwrap_or(1);
            contracted_dim *= d as u64;
        }
        let mut nodes = a.nodes.clone();
        nodes.extend(b.nodes.iter().copied());
        let result = Comp { id: out_id, nodes, open };
        let cost = result.elements() as u64 * contracted_dim;
        (result, cost)
    }
}

/// Initial components plus the forced self-loop steps shared by both
/// strategies.
fn setup(d: &Diagram) -> (Ctx, Vec<Comp>, Vec<bool>, Vec<Step>, u64, usize, usize) {
    let ctx = Ctx { wires: d.wires.iter().map(|w| (w.from, w.to)).collect() };
    let mut comps: Vec<Comp> = d
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| Comp {
            id: i,
            nodes: BTreeSet::from([i]),
            open: n
                .legs
                .iter()
                .enumerate()
                .map(|(p, l)| (PortRef { node: i, port: p }, l.dim))
                .collect(),
        })
        .collect();
    let mut done = vec![false; ctx.wires.len()];
    let mut steps = Vec::new();
    let mut cost: u64 = 0;
    let mut next_id = d.nodes.len();
    let mut peak = comps.iter().map(Comp::elements).max().unwrap_or(1);
    for (i, &(f, t)) in ctx.wires.iter().enumerate() {
        if f.node == t.node {
            done[i] = true;
            let ci = comps.iter().position(|c| c.nodes.contains(&f.node)).unwrap();
            let d_loop = comps[ci]
                .open
                .iter()
                .find(|&&(p, _)| p == f)
                .map(|&(_, d)| d)
                .unwrap_or(1) as u64;
            let old_id = comps[ci].id;
            comps[ci].open.retain(|&(p, _)| p != f && p != t);
            comps[ci].id = next_id;
            steps.push(Step::SelfLoop { comp: old_id, wire: i, out: next_id });
            cost += comps[ci].elements() as u64 * d_loop;
            peak = peak.max(comps[ci].elements());
            next_id += 1;
        }
    }
    (ctx, comps, done, steps, cost, next_id, peak)
}

/// Append the deterministic tensor-join tail for whatever components
/// remain, folding smallest-first so the tail cost does not depend on
/// the merge order that produced the components.
fn finish_with_tensors(
    comps: Vec<Comp>,
    steps: &mut Vec<Step>,
    cost: &mut u64,
    peak: &mut usize,
    next_id: &mut usize,
) {
    let mut comps = comps;
    comps.sort_by_key(|c| (c.elements(), c.nodes.iter().next().copied()));
    while comps.len() > 1 {
        let b = comps.remove(1);
        let a = &mut comps[0];
        steps.push(Step::Tensor { lhs: a.id, rhs: b.id, out: *next_id });
        a.open.extend(b.open);
        a.nodes.extend(b.nodes);
        a.id = *next_id;
        *next_id += 1;
        *cost += a.elements() as u64;
        *peak = (*peak).max(a.elements());
    }
}

pub fn plan(d: &Diagram, strategy: Strategy) -> Result<Plan, DslError> {
    if d.nodes.is_empty() {
        return Err(DslError::Plan("diagram has no nodes".into()));
    }
    match strategy {
        Strategy::Greedy => Ok(plan_greedy(d)),
        Strategy::Exhaustive => {
            if d.nodes.len() > 8 {
                return Err(DslError::Plan(format!(
                    "exhaustive planning is limited to 8 nodes, diagram has {}",
                    d.nodes.len()
                )));
            }
            Ok(plan_exhaustive(d))
        }
    }
}

fn plan_greedy(d: &Diagram) -> Plan {
    let (ctx, mut comps, mut done, mut steps, mut cost, mut next_id, mut peak) = setup(d);
    loop {
        // candidate pairs joined by at least one wire; choose the merge
        // with the smallest resulting tensor, ties by lowest endpoint
        let mut best: Option<(usize, (usize, usize), usize, usize, Vec<usize>)> = None;
        for i in 0..comps.len() {
            for j in (i + 1)..comps.len() {
                let wires = ctx.wires_between(&comps[i], &comps[j], &done);
                if wires.is_empty() {
                    continue;
                }
                let (result, _) = ctx.merge_result(&comps[i], &comps[j], &wires, 0);
                let key = wires
                    .iter()
                    .flat_map(|&w| [ctx.wires[w].0, ctx.wires[w].1])
                    .map(|p| (p.node, p.port))
                    .min()
                    .unwrap();
                let cand = (result.elements(), key, i, j, wires);
                if best
                    .as_ref()
                    .map(|b| (cand.0, cand.1) < (b.0, b.1))
                    .unwrap_or(true)
                {
                    best = Some(cand);
                }
            }
        }
        let Some((_, _, i, j, wires)) = best else { break };
        let (result, step_cost) = ctx.merge_result(&comps[i], &comps[j], &wires, next_id);
        for &w in &wires {
            done[w] = true;
        }
        steps.push(Step::Merge { lhs: comps[i].id, rhs: comps[j].id, wires, out: next_id });
        next_id += 1;
        cost += step_cost;
        peak = peak.max(result.elements());
        comps.remove(j);
        comps[i] = result;
    }
    finish_with_tensors(comps, &mut steps, &mut cost, &mut peak, &mut next_id);
    Plan { steps, predicted_cost: cost, peak_elements: peak }
}

fn plan_exhaustive(d: &Diagram) -> Plan {
    let (ctx, comps, done, prefix, base_cost, next_id, peak) = setup(d);
    let mut best: Option<(u64, Vec<Step>, usize, Vec<Comp>, usize)> = None;
    search(&ctx, comps, done, Vec::new(), base_cost, next_id, peak, &mut best);
    let (cost, tail, mut next_id, remaining, mut peak) =
        best.expect("at least the empty order exists");
    let mut steps = prefix;
    steps.extend(tail);
    let mut cost = cost;
    finish_with_tensors(remaining, &mut steps, &mut cost, &mut peak, &mut next_id);
    Plan { steps, predicted_cost: cost, peak_elements: peak }
}

#[allow(clippy::too_many_arguments)]
fn search(
    ctx: &Ctx,
    comps: Vec<Comp>,
    done: Vec<bool>,
    steps: Vec<Step>,
    cost: u64,
    next_id: usize,
    peak: usize,
    best: &mut Option<(u64, Vec<Step>, usize, Vec<Comp>, usize)>,
) {
    if let Some((bc, ..)) = best {
        if cost >= *bc {
            return; // branch and bound
        }
    }
    let mut extended = false;
    for i in 0..comps.len() {
        for j in (i + 1)..comps.len() {
            let wires = ctx.wires_between(&comps[i], &comps[j], &done);
            if wires.is_empty() {
                continue;
            }
            extended = true;
            let (result, step_cost) = ctx.merge_result(&comps[i], &comps[j], &wires, next_id);
            let mut comps2 = comps.clone();
            comps2.remove(j);
            comps2[i] = result.clone();
            let mut done2 = done.clone();
            for &w in &wires {
                done2[w] = true;
            }
            let mut steps2 = steps.clone();
            steps2.push(Step::Merge {
                lhs: comps[i].id,
                rhs: comps[j].id,
                wires,
                out: next_id,
            });
            search(
                ctx,
                comps2,
                done2,
                steps2,
                cost + step_cost,
                next_id + 1,
                peak.max(result.elements()),
                best,
            );
        }
    }
    if !extended {
        let better = best.as_ref().map(|(bc, ..)| cost < *bc).unwrap_or(true);
        if better {
            *best = Some((cost, steps, next_id, comps, peak));
        }
    }
}
