//! Annotation-aware relation storage.
//!
//! Every relation keeps one ordered primary index keyed by the original
//! attributes only. The proof annotation is the payload, so the existence
//! check of an insert ignores annotations and an annotation update never
//! moves an entry. Secondary indexes hold permuted copies of the key and
//! point at the same slot, so they share the payload too.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::Bound;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::ast::{Program, RelId, RuleId};
use crate::symbols::Value;

/// `(rule, height)` proof annotation. Input tuples carry rule 0.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Annotation {
    pub rule: RuleId,
    pub height: u32,
}

impl Annotation {
    pub const EDB: Annotation = Annotation { rule: 0, height: 0 };

    pub fn new(rule: RuleId, height: u32) -> Self {
        Annotation { rule, height }
    }

    fn pack(self) -> u64 {
        (u64::from(self.height) << 32) | u64::from(self.rule)
    }

    fn unpack(bits: u64) -> Self {
        Annotation {
            rule: bits as u32,
            height: (bits >> 32) as u32,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InsertOutcome {
    Inserted,
    /// The stored annotation was replaced; carries the previous one.
    Updated(Annotation),
    Rejected,
}

/// An original tuple together with its current annotation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AnnotatedTuple {
    pub values: Vec<Value>,
    pub annotation: Annotation,
}

/// Handle of an index inside one relation. [`IndexId::PRIMARY`] is the
/// lexicographic index over all attributes in declaration order.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct IndexId(pub usize);

impl IndexId {
    pub const PRIMARY: IndexId = IndexId(0);
}

#[derive(Clone, Debug)]
struct SecondaryIndex {
    /// `order[i]` is the original column stored at key position `i`.
    order: Vec<usize>,
    map: BTreeMap<Box<[Value]>, u32>,
}

#[derive(Clone, Debug)]
pub struct Relation {
    arity: usize,
    provenance: bool,
    primary: BTreeMap<Box<[Value]>, u32>,
    annotations: Vec<Annotation>,
    marks: Vec<u32>,
    secondary: Vec<SecondaryIndex>,
}

/// Completes a partial attribute order with the remaining columns in
/// declaration order.
pub fn complete_order(arity: usize, order: &[usize]) -> Vec<usize> {
    let mut full: Vec<usize> = order.to_vec();
    for c in 0..arity {
        if !full.contains(&c) {
            full.push(c);
        }
    }
    full
}

fn prefix_range<'a: 'p, 'p>(
    map: &'a BTreeMap<Box<[Value]>, u32>,
    prefix: &'p [Value],
) -> impl Iterator<Item = (&'a [Value], u32)> + 'p {
    map.range::<[Value], _>((Bound::Included(prefix), Bound::Unbounded))
        .map(|(k, v)| (&**k, *v))
        .take_while(move |(k, _)| k.starts_with(prefix))
}

impl Relation {
    pub fn new(arity: usize, provenance: bool) -> Self {
        Relation {
            arity,
            provenance,
            primary: BTreeMap::new(),
            annotations: Vec::new(),
            marks: Vec::new(),
            secondary: Vec::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.primary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primary.is_empty()
    }

    pub fn has_provenance(&self) -> bool {
        self.provenance
    }

    fn slot(&self, tuple: &[Value]) -> Option<u32> {
        self.primary.get(tuple).copied()
    }

    pub fn contains(&self, tuple: &[Value]) -> bool {
        self.primary.contains_key(tuple)
    }

    /// Stored annotation; input-style `(0, 0)` when provenance is off.
    pub fn annotation(&self, tuple: &[Value]) -> Option<Annotation> {
        self.slot(tuple).map(|s| self.annotation_at(s))
    }

    pub fn annotation_at(&self, slot: u32) -> Annotation {
        if self.provenance {
            self.annotations[slot as usize]
        } else {
            Annotation::EDB
        }
    }

    /// True when an insert at height `bound` would be redundant: the
    /// original tuple exists with a stored height `<= bound`.
    pub fn contains_with_height_below(&self, tuple: &[Value], bound: u32) -> bool {
        match self.slot(tuple) {
            Some(s) => !self.provenance || self.annotations[s as usize].height <= bound,
            None => false,
        }
    }

    /// Inserts an absent tuple, or lowers the annotation of a present one
    /// when the offered height is strictly smaller.
    pub fn insert_or_minimize(&mut self, tuple: &[Value], annotation: Annotation) -> InsertOutcome {
        self.upsert(tuple, annotation).0
    }

    /// As [`Relation::insert_or_minimize`], also returning the entry's slot.
    pub(crate) fn upsert(&mut self, tuple: &[Value], annotation: Annotation) -> (InsertOutcome, u32) {
        assert_eq!(tuple.len(), self.arity, "tuple arity does not match relation");
        if let Some(slot) = self.slot(tuple) {
            if !self.provenance {
                return (InsertOutcome::Rejected, slot);
            }
            let stored = &mut self.annotations[slot as usize];
            if annotation.height < stored.height {
                let old = core::mem::replace(stored, annotation);
                return (InsertOutcome::Updated(old), slot);
            }
            return (InsertOutcome::Rejected, slot);
        }
        let slot = u32::try_from(self.primary.len()).expect("relation exceeds u32 slots");
        for idx in &mut self.secondary {
            let key: Box<[Value]> = idx.order.iter().map(|&c| tuple[c]).collect();
            idx.map.insert(key, slot);
        }
        self.primary.insert(tuple.into(), slot);
        if self.provenance {
            self.annotations.push(annotation);
        }
        self.marks.push(0);
        (InsertOutcome::Inserted, slot)
    }

    /// All tuples whose leading attributes equal `prefix`, in lexicographic
    /// order, with their current annotations.
    pub fn scan_prefix<'a>(&'a self, prefix: &'a [Value]) -> impl Iterator<Item = AnnotatedTuple> + 'a {
        prefix_range(&self.primary, prefix).map(move |(k, s)| AnnotatedTuple {
            values: k.to_vec(),
            annotation: self.annotation_at(s),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Value], Annotation)> + '_ {
        self.primary.iter().map(move |(k, s)| (&**k, self.annotation_at(*s)))
    }

    /// Returns the handle of an index whose key starts with `order`,
    /// building it on first request. An order that completes to the
    /// declaration order is served by the primary index.
    pub fn build_secondary_index(&mut self, order: &[usize]) -> IndexId {
        let full = complete_order(self.arity, order);
        if let Some(id) = self.find_index(&full) {
            return id;
        }
        let mut map = BTreeMap::new();
        for (k, s) in &self.primary {
            let key: Box<[Value]> = full.iter().map(|&c| k[c]).collect();
            map.insert(key, *s);
        }
        self.secondary.push(SecondaryIndex { order: full, map });
        IndexId(self.secondary.len())
    }

    /// Handle of an existing index with exactly this (complete) order.
    pub fn find_index(&self, full_order: &[usize]) -> Option<IndexId> {
        if full_order.iter().copied().eq(0..self.arity) {
            return Some(IndexId::PRIMARY);
        }
        self.secondary
            .iter()
            .position(|i| i.order == full_order)
            .map(|p| IndexId(p + 1))
    }

    /// Column order of an index's keys.
    pub fn index_order(&self, id: IndexId) -> Vec<usize> {
        match id.0 {
            0 => (0..self.arity).collect(),
            n => self.secondary[n - 1].order.clone(),
        }
    }

    /// Raw range over an index: keys are in the index's column order.
    pub fn index_range<'a: 'p, 'p>(
        &'a self,
        id: IndexId,
        prefix: &'p [Value],
    ) -> impl Iterator<Item = (&'a [Value], u32)> + 'p {
        let map = match id.0 {
            0 => &self.primary,
            n => &self.secondary[n - 1].map,
        };
        prefix_range(map, prefix)
    }

    /// Prefix scan through a secondary index, yielding tuples in original
    /// attribute order.
    pub fn scan_index<'a>(
        &'a self,
        id: IndexId,
        prefix: &'a [Value],
    ) -> impl Iterator<Item = AnnotatedTuple> + 'a {
        let order = self.index_order(id);
        self.index_range(id, prefix).map(move |(k, s)| {
            let mut values = alloc::vec![Value::default(); k.len()];
            for (pos, &col) in order.iter().enumerate() {
                values[col] = k[pos];
            }
            AnnotatedTuple {
                values,
                annotation: self.annotation_at(s),
            }
        })
    }

    pub(crate) fn mark(&mut self, slot: u32, epoch: u32) {
        self.marks[slot as usize] = epoch;
    }

    pub(crate) fn is_marked(&self, slot: u32, epoch: u32) -> bool {
        self.marks[slot as usize] == epoch
    }

    /// Rough heap footprint in bytes, for reporting.
    pub fn approx_bytes(&self) -> usize {
        let entry = 8 * self.arity + 16 + 4 + 16;
        self.primary.len() * entry * (1 + self.secondary.len())
            + self.annotations.len() * core::mem::size_of::<Annotation>()
            + self.marks.len() * 4
    }
}

/// One relation per declared relation of a program.
#[derive(Clone, Debug)]
pub struct AnnotatedStore {
    relations: Vec<Relation>,
}

impl AnnotatedStore {
    pub fn new(program: &Program, provenance: bool) -> Self {
        AnnotatedStore {
            relations: program
                .relations
                .iter()
                .map(|d| Relation::new(d.arity(), provenance))
                .collect(),
        }
    }

    pub fn relation(&self, rel: RelId) -> &Relation {
        &self.relations[rel.0]
    }

    pub fn relation_mut(&mut self, rel: RelId) -> &mut Relation {
        &mut self.relations[rel.0]
    }

    pub fn insert_or_minimize(&mut self, rel: RelId, tuple: &[Value], annotation: Annotation) -> InsertOutcome {
        self.relations[rel.0].insert_or_minimize(tuple, annotation)
    }

    pub fn contains_with_height_below(&self, rel: RelId, tuple: &[Value], bound: u32) -> bool {
        self.relations[rel.0].contains_with_height_below(tuple, bound)
    }

    pub fn scan_prefix<'a>(&'a self, rel: RelId, prefix: &'a [Value]) -> impl Iterator<Item = AnnotatedTuple> + 'a {
        self.relations[rel.0].scan_prefix(prefix)
    }

    pub fn build_secondary_index(&mut self, rel: RelId, order: &[usize]) -> IndexId {
        self.relations[rel.0].build_secondary_index(order)
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn total_tuples(&self) -> usize {
        self.relations.iter().map(Relation::len).sum()
    }

    /// Order-sensitive digest of every tuple and annotation.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for (i, r) in self.relations.iter().enumerate() {
            eat(i as u64);
            for (t, a) in r.iter() {
                for v in t {
                    eat(v.0 as u64);
                }
                eat(a.pack());
            }
        }
        h
    }
}

/// An annotation cell that can be minimized concurrently.
#[derive(Debug)]
pub struct AtomicAnnotation(AtomicU64);

impl AtomicAnnotation {
    pub fn new(a: Annotation) -> Self {
        AtomicAnnotation(AtomicU64::new(a.pack()))
    }

    pub fn load(&self) -> Annotation {
        Annotation::unpack(self.0.load(Ordering::Acquire))
    }

    /// Compare-and-swap loop: replaces the stored annotation while the
    /// offered height is strictly smaller. Equal heights keep the stored
    /// rule.
    pub fn minimize(&self, offered: Annotation) -> InsertOutcome {
        let new = offered.pack();
        let mut cur = self.0.load(Ordering::Acquire);
        loop {
            let stored = Annotation::unpack(cur);
            if offered.height >= stored.height {
                return InsertOutcome::Rejected;
            }
            match self
                .0
                .compare_exchange_weak(cur, new, Ordering::AcqRel, Ordering::Acquire)
            {
                Ok(_) => return InsertOutcome::Updated(stored),
                Err(actual) => cur = actual,
            }
        }
    }
}

#[cfg(feature = "std")]
pub use shared::SharedRelation;

#[cfg(feature = "std")]
mod shared {
    use super::*;
    use std::collections::btree_map::Entry;
    use std::sync::RwLock;

    /// Write-side buffer that many workers fill at once.
    ///
    /// Entries live in hash-sharded ordered maps. Lowering an existing
    /// annotation only takes a shard read lock plus a CAS on the entry;
    /// inserting a new tuple takes the shard write lock.
    #[derive(Debug)]
    pub struct SharedRelation {
        arity: usize,
        shards: Vec<RwLock<BTreeMap<Box<[Value]>, AtomicAnnotation>>>,
    }

    fn shard_of(tuple: &[Value], n: usize) -> usize {
        let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
        for v in tuple {
            h = (h ^ v.0 as u64).wrapping_mul(0xff51_afd7_ed55_8ccd);
            h ^= h >> 29;
        }
        (h % n as u64) as usize
    }

    impl SharedRelation {
        pub fn new(arity: usize, shards: usize) -> Self {
            SharedRelation {
                arity,
                shards: (0..shards.max(1)).map(|_| RwLock::new(BTreeMap::new())).collect(),
            }
        }

        pub fn insert_or_minimize(&self, tuple: &[Value], annotation: Annotation) -> InsertOutcome {
            assert_eq!(tuple.len(), self.arity, "tuple arity does not match relation");
            let shard = &self.shards[shard_of(tuple, self.shards.len())];
            {
                let map = shard.read().expect("shard lock poisoned");
                if let Some(cell) = map.get(tuple) {
                    return cell.minimize(annotation);
                }
            }
            let mut map = shard.write().expect("shard lock poisoned");
            match map.entry(tuple.into()) {
                Entry::Occupied(e) => e.get().minimize(annotation),
                Entry::Vacant(e) => {
                    e.insert(AtomicAnnotation::new(annotation));
                    InsertOutcome::Inserted
                }
            }
        }

        pub fn get(&self, tuple: &[Value]) -> Option<Annotation> {
            let shard = &self.shards[shard_of(tuple, self.shards.len())];
            let map = shard.read().expect("shard lock poisoned");
            map.get(tuple).map(AtomicAnnotation::load)
        }

        pub fn len(&self) -> usize {
            self.shards
                .iter()
                .map(|s| s.read().expect("shard lock poisoned").len())
                .sum()
        }

        pub fn is_empty(&self) -> bool {
            self.len() == 0
        }

        /// Drains all shards into one lexicographically sorted list.
        pub fn into_sorted(self) -> Vec<(Box<[Value]>, Annotation)> {
            let mut out: Vec<_> = self
                .shards
                .into_iter()
                .flat_map(|s| s.into_inner().expect("shard lock poisoned"))
                .map(|(k, a)| (k, a.load()))
                .collect();
            out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            out
        }
    }
}
