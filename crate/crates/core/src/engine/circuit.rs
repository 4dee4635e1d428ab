//! Ground formulas as hash-consed boolean circuits over the unknown atoms of
//! one world, plus an exact branch-and-bound search over those circuits.
//!
//! Known atoms are folded away during grounding, so a circuit only contains
//! the parts of a formula that still depend on some unknown atom.

use std::collections::HashMap;

use crate::formula::{Formula, Var};
use crate::world::{AtomState, World};

/// Result of grounding: a constant or a node of the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum G {
    F,
    T,
    N(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    Var(u32),
    Not(u32),
    And(Box<[u32]>),
    Or(Box<[u32]>),
}

const FALSE: u8 = 0;
const TRUE: u8 = 1;
const OPEN: u8 = 2;

#[derive(Debug, Default)]
pub(crate) struct Circuit {
    nodes: Vec<Node>,
    index: HashMap<Node, u32>,
    supports: Vec<Option<Box<[u32]>>>,
}

impl Circuit {
    fn intern(&mut self, node: Node) -> G {
        if let Some(&id) = self.index.get(&node) {
            return G::N(id);
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(node.clone());
        self.supports.push(None);
        self.index.insert(node, id);
        G::N(id)
    }

    pub(crate) fn var(&mut self, k: usize) -> G {
        self.intern(Node::Var(k as u32))
    }

    pub(crate) fn not(&mut self, g: G) -> G {
        match g {
            G::T => G::F,
            G::F => G::T,
            G::N(id) => match self.nodes[id as usize] {
                Node::Not(inner) => G::N(inner),
                _ => self.intern(Node::Not(id)),
            },
        }
    }

    fn junction(&mut self, items: impl IntoIterator<Item = G>, is_and: bool) -> G {
        let (absorbing, neutral) = if is_and { (G::F, G::T) } else { (G::T, G::F) };
        let mut ids = Vec::new();
        for g in items {
            match g {
                G::N(id) => ids.push(id),
                g if g == absorbing => return absorbing,
                _ => {}
            }
        }
        ids.sort_unstable();
        ids.dedup();
        match ids.len() {
            0 => neutral,
            1 => G::N(ids[0]),
            _ => {
                let ids = ids.into_boxed_slice();
                self.intern(if is_and { Node::And(ids) } else { Node::Or(ids) })
            }
        }
    }

    pub(crate) fn and(&mut self, items: impl IntoIterator<Item = G>) -> G {
        self.junction(items, true)
    }

    pub(crate) fn or(&mut self, items: impl IntoIterator<Item = G>) -> G {
        self.junction(items, false)
    }

    /// Ground `f` in `w` under `env`, folding every known atom.
    /// Panics if `f` mentions `Ab` or has a free variable unbound in `env`.
    pub(crate) fn ground(&mut self, w: &World, f: &Formula, env: &mut [usize; 4]) -> G {
        let n = w.domain_size();
        match f {
            Formula::Atom(p, args) => {
                let val = |v: &Var| {
                    let a = env[v.index()];
                    assert!(a < n, "unbound variable {v} during grounding");
                    a
                };
                let off = match args.as_slice() {
                    [v] => val(v),
                    [u, v] => val(u) * n + val(v),
                    _ => unreachable!(),
                };
                match w.state_at(*p, off) {
                    AtomState::True => G::T,
                    AtomState::False => G::F,
                    AtomState::Unknown => self.var(w.unknown_index(*p, off).expect("indexed unknown")),
                }
            }
            Formula::Equal(a, b) => {
                if env[a.index()] == env[b.index()] {
                    G::T
                } else {
                    G::F
                }
            }
            Formula::Not(g) => {
                let g = self.ground(w, g, env);
                self.not(g)
            }
            Formula::And(gs) | Formula::Or(gs) => {
                let is_and = matches!(f, Formula::And(_));
                let absorbing = if is_and { G::F } else { G::T };
                let mut items = Vec::with_capacity(gs.len());
                for g in gs {
                    let r = self.ground(w, g, env);
                    if r == absorbing {
                        return absorbing;
                    }
                    items.push(r);
                }
                self.junction(items, is_and)
            }
            Formula::Implies(a, b) => {
                let a = self.ground(w, a, env);
                if a == G::F {
                    return G::T;
                }
                let na = self.not(a);
                let b = self.ground(w, b, env);
                self.or([na, b])
            }
            Formula::Forall(v, g) | Formula::Exists(v, g) => {
                let is_and = matches!(f, Formula::Forall(..));
                let absorbing = if is_and { G::F } else { G::T };
                let saved = env[v.index()];
                let mut items = Vec::with_capacity(n);
                let mut result = None;
                for a in 0..n {
                    env[v.index()] = a;
                    let r = self.ground(w, g, env);
                    if r == absorbing {
                        result = Some(absorbing);
                        break;
                    }
                    items.push(r);
                }
                env[v.index()] = saved;
                result.unwrap_or_else(|| self.junction(items, is_and))
            }
        }
    }

    /// Sorted unknown-atom indices a node depends on.
    fn support(&mut self, id: u32) -> &[u32] {
        if self.supports[id as usize].is_none() {
            let s: Box<[u32]> = match self.nodes[id as usize].clone() {
                Node::Var(k) => Box::new([k]),
                Node::Not(c) => self.support(c).into(),
                Node::And(cs) | Node::Or(cs) => {
                    let mut all = Vec::new();
                    for c in cs.iter() {
                        all.extend_from_slice(self.support(*c));
                    }
                    all.sort_unstable();
                    all.dedup();
                    all.into_boxed_slice()
                }
            };
            self.supports[id as usize] = Some(s);
        }
        self.supports[id as usize].as_deref().expect("just computed")
    }

    /// Three-valued evaluation under a partial assignment.
    fn eval(&self, id: u32, assign: &[u8]) -> u8 {
        match &self.nodes[id as usize] {
            Node::Var(k) => assign[*k as usize],
            Node::Not(c) => match self.eval(*c, assign) {
                OPEN => OPEN,
                v => 1 - v,
            },
            Node::And(cs) => {
                let mut out = TRUE;
                for c in cs.iter() {
                    match self.eval(*c, assign) {
                        FALSE => return FALSE,
                        OPEN => out = OPEN,
                        _ => {}
                    }
                }
                out
            }
            Node::Or(cs) => {
                let mut out = FALSE;
                for c in cs.iter() {
                    match self.eval(*c, assign) {
                        TRUE => return TRUE,
                        OPEN => out = OPEN,
                        _ => {}
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sense {
    Min,
    Max,
}

/// Best objective value and an assignment achieving it. Atoms the search
/// never needed to fix are set to false.
#[derive(Debug, Clone)]
pub(crate) struct Optimum {
    pub value: usize,
    pub assignment: Vec<bool>,
}

/// Optimise the number of true `objective` roots over all total assignments
/// to `nvars` unknown atoms that make every `constraint` root true.
/// Returns `None` when the constraints are unsatisfiable.
pub(crate) fn optimize(
    c: &mut Circuit,
    nvars: usize,
    constraints: &[G],
    objective: &[G],
    sense: Sense,
) -> Option<Optimum> {
    if constraints.contains(&G::F) {
        return None;
    }
    let base = objective.iter().filter(|g| **g == G::T).count();
    let ids = |gs: &[G]| -> Vec<u32> {
        gs.iter().filter_map(|g| if let G::N(id) = g { Some(*id) } else { None }).collect()
    };
    let cons = ids(constraints);
    let obj = ids(objective);

    // Independent components: roots whose supports share no atom.
    let mut parent: Vec<usize> = (0..nvars).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &r in cons.iter().chain(&obj) {
        let s = c.support(r).to_vec();
        for w in s.windows(2) {
            let (a, b) = (find(&mut parent, w[0] as usize), find(&mut parent, w[1] as usize));
            parent[a] = b;
        }
    }
    let mut groups: Vec<(usize, Vec<u32>, Vec<u32>)> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (is_con, list) in [(true, &cons), (false, &obj)] {
        for &r in list.iter() {
            let first = c.support(r)[0] as usize;
            let root = find(&mut parent, first);
            let k = *slot.entry(root).or_insert_with(|| {
                groups.push((root, Vec::new(), Vec::new()));
                groups.len() - 1
            });
            if is_con {
                groups[k].1.push(r);
            } else {
                groups[k].2.push(r);
            }
        }
    }

    let mut assignment = vec![false; nvars];
    let mut value = base;
    let mut work = vec![OPEN; nvars];
    for (_, gcons, gobj) in groups {
        let supports: HashMap<u32, Box<[u32]>> =
            gcons.iter().chain(&gobj).map(|&r| (r, c.support(r).into())).collect();
        let mut s = Search {
            c: &*c,
            cons: &gcons,
            obj: &gobj,
            supports: &supports,
            sense,
            assign: &mut work,
            best: None,
            best_assign: Vec::new(),
        };
        s.dfs();
        let best = s.best?;
        let best_assign = std::mem::take(&mut s.best_assign);
        value += best;
        for (k, v) in best_assign.iter().enumerate() {
            if *v == TRUE {
                assignment[k] = true;
            }
        }
    }
    Some(Optimum { value, assignment })
}

struct Search<'a> {
    c: &'a Circuit,
    cons: &'a [u32],
    obj: &'a [u32],
    supports: &'a HashMap<u32, Box<[u32]>>,
    sense: Sense,
    assign: &'a mut Vec<u8>,
    best: Option<usize>,
    best_assign: Vec<u8>,
}

impl Search<'_> {
    fn done(&self) -> bool {
        match (self.sense, self.best) {
            (Sense::Min, Some(0)) => true,
            (Sense::Max, Some(b)) => b == self.obj.len(),
            _ => false,
        }
    }

    fn dfs(&mut self) {
        let mut branch_on = None;
        for &r in self.cons {
            match self.c.eval(r, self.assign) {
                FALSE => return,
                OPEN if branch_on.is_none() => branch_on = Some(r),
                _ => {}
            }
        }
        let (mut sure, mut open) = (0, 0);
        for &r in self.obj {
            match self.c.eval(r, self.assign) {
                TRUE => sure += 1,
                OPEN => {
                    open += 1;
                    if branch_on.is_none() {
                        branch_on = Some(r);
                    }
                }
                _ => {}
            }
        }
        if let Some(b) = self.best {
            let hopeless = match self.sense {
                Sense::Min => sure >= b,
                Sense::Max => sure + open <= b,
            };
            if hopeless {
                return;
            }
        }
        let Some(root) = branch_on else {
            self.best = Some(sure);
            self.best_assign = self.assign.clone();
            return;
        };
        let v = self.supports[&root]
            .iter()
            .copied()
            .find(|&v| self.assign[v as usize] == OPEN)
            .expect("an open root has an unassigned atom") as usize;
        let order = match self.sense {
            Sense::Min => [FALSE, TRUE],
            Sense::Max => [TRUE, FALSE],
        };
        for val in order {
            self.assign[v] = val;
            self.dfs();
            self.assign[v] = OPEN;
            if self.done() {
                return;
            }
        }
    }
}
