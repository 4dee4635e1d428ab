//! Finite relational worlds with known and unknown ground atoms.

mod eval;
mod sample;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Pred;

pub use eval::{eval_formula, AbInterp, Env, EvalError};
pub use sample::{sample_world, true_atom_count, DensityRanges, UnknownRates};

/// Observed truth status of one ground atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AtomState {
    #[default]
    False,
    True,
    Unknown,
}

/// A ground atom of an observed predicate. Binary arguments are stored as
/// `(i, j)`; unary atoms use `(i, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub pred: Pred,
    pub args: (usize, usize),
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pred.arity() == 1 {
            write!(f, "{}(a{})", self.pred, self.args.0)
        } else {
            write!(f, "{}(a{}, a{})", self.pred, self.args.0, self.args.1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("domain must contain at least one element")]
    EmptyDomain,
    #[error("{pred} atom argument {arg} outside domain of size {n}")]
    OutOfDomain { pred: Pred, arg: usize, n: usize },
    #[error("Ab has no observed extension")]
    AbAtom,
    #[error("atom {0} listed as both true and unknown")]
    Overlap(GroundAtom),
}

/// A finite world over elements `a0..a(n-1)`.
///
/// Each observed predicate keeps a dense row-major array of atom states.
/// Two worlds compare equal iff they have the same domain size and the same
/// true and unknown extensions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct World {
    n: usize,
    states: [Vec<AtomState>; 4],
    unknown: Vec<GroundAtom>,
    // position of each atom in `unknown`, or u32::MAX
    unknown_pos: [Vec<u32>; 4],
}

const NOT_UNKNOWN: u32 = u32::MAX;

fn width(pred: Pred, n: usize) -> usize {
    if pred.arity() == 1 {
        n
    } else {
        n * n
    }
}

impl World {
    /// A world where every atom is false.
    pub fn new(n: usize) -> Result<World, WorldError> {
        if n == 0 {
            return Err(WorldError::EmptyDomain);
        }
        let states = Pred::OBSERVED.map(|p| vec![AtomState::False; width(p, n)]);
        let unknown_pos = Pred::OBSERVED.map(|p| vec![NOT_UNKNOWN; width(p, n)]);
        Ok(World { n, states, unknown: Vec::new(), unknown_pos })
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    fn offset(&self, pred: Pred, args: &[usize]) -> Result<usize, WorldError> {
        if pred == Pred::Ab {
            return Err(WorldError::AbAtom);
        }
        for &a in args {
            if a >= self.n {
                return Err(WorldError::OutOfDomain { pred, arg: a, n: self.n });
            }
        }
        Ok(match args {
            [i] => *i,
            [i, j] => i * self.n + j,
            _ => unreachable!("arity checked by caller"),
        })
    }

    fn atom_at(&self, pred: Pred, off: usize) -> GroundAtom {
        if pred.arity() == 1 {
            GroundAtom { pred, args: (off, 0) }
        } else {
            GroundAtom { pred, args: (off / self.n, off % self.n) }
        }
    }

    /// Set the observed state of one atom. `args` must match the arity.
    pub fn set(&mut self, pred: Pred, args: &[usize], state: AtomState) -> Result<(), WorldError> {
        assert_eq!(args.len(), pred.arity(), "arity mismatch for {pred}");
        let off = self.offset(pred, args)?;
        self.states[pred.slot()][off] = state;
        self.reindex();
        Ok(())
    }

    /// Bulk variant of [`World::set`] that reindexes once.
    pub fn set_many<'a>(
        &mut self,
        pred: Pred,
        atoms: impl IntoIterator<Item = &'a [usize]>,
        state: AtomState,
    ) -> Result<(), WorldError> {
        for args in atoms {
            assert_eq!(args.len(), pred.arity(), "arity mismatch for {pred}");
            let off = self.offset(pred, args)?;
            self.states[pred.slot()][off] = state;
        }
        self.reindex();
        Ok(())
    }

    pub(crate) fn set_state_raw(&mut self, pred: Pred, off: usize, state: AtomState) {
        self.states[pred.slot()][off] = state;
    }

    pub(crate) fn reindex(&mut self) {
        self.unknown.clear();
        for p in Pred::OBSERVED {
            let s = p.slot();
            for off in 0..self.states[s].len() {
                if self.states[s][off] == AtomState::Unknown {
                    self.unknown_pos[s][off] = self.unknown.len() as u32;
                    self.unknown.push(self.atom_at(p, off));
                } else {
                    self.unknown_pos[s][off] = NOT_UNKNOWN;
                }
            }
        }
    }

    /// State of an atom given as a raw offset (`i` or `i*n+j`).
    #[inline]
    pub fn state_at(&self, pred: Pred, off: usize) -> AtomState {
        self.states[pred.slot()][off]
    }

    pub fn state(&self, pred: Pred, args: &[usize]) -> AtomState {
        let off = self.offset(pred, args).expect("atom outside domain");
        self.state_at(pred, off)
    }

    /// Index of an unknown atom within [`World::unknown_atoms`].
    #[inline]
    pub fn unknown_index(&self, pred: Pred, off: usize) -> Option<usize> {
        let k = self.unknown_pos[pred.slot()][off];
        (k != NOT_UNKNOWN).then_some(k as usize)
    }

    /// Ω, ordered by predicate name and then row-major index.
    pub fn unknown_atoms(&self) -> &[GroundAtom] {
        &self.unknown
    }

    pub fn true_atoms(&self, pred: Pred) -> Vec<GroundAtom> {
        self.atoms_with(pred, AtomState::True)
    }

    pub fn atoms_with(&self, pred: Pred, state: AtomState) -> Vec<GroundAtom> {
        let s = pred.slot();
        (0..self.states[s].len())
            .filter(|&off| self.states[s][off] == state)
            .map(|off| self.atom_at(pred, off))
            .collect()
    }

    pub fn is_closed(&self) -> bool {
        self.unknown.is_empty()
    }

    /// Copy of this world with every unknown atom resolved by `c`.
    pub fn complete(&self, c: &Completion) -> World {
        assert_eq!(c.len(), self.unknown.len(), "completion does not cover Ω");
        let mut w = self.clone();
        for (k, a) in self.unknown.iter().enumerate() {
            let off = if a.pred.arity() == 1 { a.args.0 } else { a.args.0 * self.n + a.args.1 };
            w.states[a.pred.slot()][off] = if c.get(k) { AtomState::True } else { AtomState::False };
        }
        w.reindex();
        w
    }
}

impl fmt::Debug for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "World(n={}", self.n)?;
        for p in Pred::OBSERVED {
            let t: Vec<String> = self.true_atoms(p).iter().map(|a| a.to_string()).collect();
            write!(f, "; {p}: {{{}}}", t.join(", "))?;
        }
        let u: Vec<String> = self.unknown.iter().map(|a| a.to_string()).collect();
        write!(f, "; unknown: {{{}}})", u.join(", "))
    }
}

/// True iff both worlds have the same domain size and the same true and
/// unknown extensions for every predicate.
pub fn worlds_equivalent(a: &World, b: &World) -> bool {
    a == b
}

/// A truth assignment to every atom of Ω, indexed in Ω order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Completion {
    bits: Vec<bool>,
}

impl Completion {
    pub fn all_false(len: usize) -> Self {
        Completion { bits: vec![false; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Completion { bits }
    }

    /// Completion number `k` of the enumeration order: bit `i` of `k` is the
    /// value of the `i`-th unknown atom.
    pub fn from_index(k: u64, len: usize) -> Self {
        Completion { bits: (0..len).map(|i| (k >> i) & 1 == 1).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, k: usize) -> bool {
        self.bits[k]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// Default ceiling on |Ω| for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("world has {size} unknown atoms, above the enumeration cap of {cap}")]
pub struct CapExceeded {
    pub size: usize,
    pub cap: usize,
}

/// All `2^|Ω|` completions in index order (all-false first, all-true last).
pub fn enumerate_completions(
    w: &World,
    cap: usize,
) -> Result<impl Iterator<Item = Completion> + '_, CapExceeded> {
    let len = w.unknown_atoms().len();
    if len > cap || len >= 64 {
        return Err(CapExceeded { size: len, cap });
    }
    Ok((0..1u64 << len).map(move |k| Completion::from_index(k, len)))
}

/// Subset of the domain interpreted as the extension of `Ab`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbnormalSet {
    members: Vec<bool>,
}

impl AbnormalSet {
    pub fn empty(n: usize) -> Self {
        AbnormalSet { members: vec![false; n] }
    }

    pub fn from_members(n: usize, members: &[usize]) -> Result<Self, WorldError> {
        let mut s = AbnormalSet::empty(n);
        for &m in members {
            if m >= n {
                return Err(WorldError::OutOfDomain { pred: Pred::Ab, arg: m, n });
            }
            s.members[m] = true;
        }
        Ok(s)
    }

    /// Subset whose bit `i` of `mask` marks element `i`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        AbnormalSet { members: (0..n).map(|i| (mask >> i) & 1 == 1).collect() }
    }

    #[inline]
    pub fn contains(&self, a: usize) -> bool {
        self.members[a]
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&i| self.members[i]).collect()
    }
}

#[derive(Serialize, Deserialize, Default)]
#[allow(non_snake_case)]
struct AtomListsRepr {
    P: Vec<usize>,
    Q: Vec<usize>,
    R: Vec<[usize; 2]>,
    S: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
struct WorldRepr {
    domain_size: usize,
    #[serde(rename = "true")]
    true_atoms: AtomListsRepr,
    unknown: AtomListsRepr,
}

fn lists(w: &World, state: AtomState) -> AtomListsRepr {
    let unary = |p| w.atoms_with(p, state).iter().map(|a| a.args.0).collect();
    let binary = |p| w.atoms_with(p, state).iter().map(|a| [a.args.0, a.args.1]).collect();
    AtomListsRepr { P: unary(Pred::P), Q: unary(Pred::Q), R: binary(Pred::R), S: binary(Pred::S) }
}

impl TryFrom<WorldRepr> for World {
    type Error = WorldError;

    fn try_from(r: WorldRepr) -> Result<World, WorldError> {
        let mut w = World::new(r.domain_size)?;
        for (lists, state) in [(&r.true_atoms, AtomState::True), (&r.unknown, AtomState::Unknown)] {
            let entries = lists
                .P
                .iter()
                .map(|&i| (Pred::P, vec![i]))
                .chain(lists.Q.iter().map(|&i| (Pred::Q, vec![i])))
                .chain(lists.R.iter().map(|&[i, j]| (Pred::R, vec![i, j])))
                .chain(lists.S.iter().map(|&[i, j]| (Pred::S, vec![i, j])));
            for (p, args) in entries {
                let off = w.offset(p, &args)?;
                if state == AtomState::Unknown && w.state_at(p, off) == AtomState::True {
                    return Err(WorldError::Overlap(w.atom_at(p, off)));
                }
                w.set_state_raw(p, off, state);
            }
        }
        w.reindex();
        Ok(w)
    }
}

impl Serialize for World {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        WorldRepr {
            domain_size: self.n,
            true_atoms: lists(self, AtomState::True),
            unknown: lists(self, AtomState::Unknown),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for World {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = WorldRepr::deserialize(d)?;
        World::try_from(r).map_err(serde::de::Error::custom)
    }
}
