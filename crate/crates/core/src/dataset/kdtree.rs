//! Incremental kd-tree over the rows of a flat point array.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    point: u32,
    axis: u32,
    left: u32,
    right: u32,
}

/// A kd-tree whose nodes reference rows of an external, append-only point
/// array. Points are never removed and the tree is never rebalanced; batches
/// are inserted median-first so each batch forms a balanced subtree shape.
#[derive(Debug, Clone, Default)]
pub struct KdTree {
    dim: usize,
    nodes: Vec<Node>,
    root: Option<u32>,
}

/// A candidate neighbour ordered by `(dist_sq, key)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub dist_sq: f64,
    pub key: u64,
    pub index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.key.cmp(&other.key))
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

impl KdTree {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            nodes: Vec::new(),
            root: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn row<'a>(&self, points: &'a [f64], i: usize) -> &'a [f64] {
        &points[i * self.dim..(i + 1) * self.dim]
    }

    /// Inserts rows `first..points.len()/dim` of `points`.
    pub fn extend(&mut self, points: &[f64], first: usize) {
        let end = points.len() / self.dim;
        let mut batch: Vec<usize> = (first..end).collect();
        let mut order = Vec::with_capacity(batch.len());
        self.median_order(points, &mut batch, &mut order);
        for (i, axis) in order {
            self.insert(points, i, axis);
        }
    }

    fn median_order(&self, points: &[f64], batch: &mut [usize], out: &mut Vec<(usize, u32)>) {
        if batch.is_empty() {
            return;
        }
        let mut axis = 0;
        let mut widest = -1.0;
        for j in 0..self.dim {
            let (lo, hi) = batch.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &i| {
                let x = points[i * self.dim + j];
                (l.min(x), h.max(x))
            });
            if hi - lo > widest {
                widest = hi - lo;
                axis = j;
            }
        }
        let mid = batch.len() / 2;
        batch.select_nth_unstable_by(mid, |&a, &b| {
            points[a * self.dim + axis]
                .total_cmp(&points[b * self.dim + axis])
                .then(a.cmp(&b))
        });
        out.push((batch[mid], axis as u32));
        let (left, rest) = batch.split_at_mut(mid);
        self.median_order(points, left, out);
        self.median_order(points, &mut rest[1..], out);
    }

    fn insert(&mut self, points: &[f64], i: usize, axis: u32) {
        let id = self.nodes.len() as u32;
        let p = self.row(points, i);
        let Some(mut cur) = self.root else {
            self.nodes.push(Node {
                point: i as u32,
                axis,
                left: NIL,
                right: NIL,
            });
            self.root = Some(id);
            return;
        };
        loop {
            let node = self.nodes[cur as usize];
            let split = points[node.point as usize * self.dim + node.axis as usize];
            let go_left = p[node.axis as usize] < split;
            let next = if go_left { node.left } else { node.right };
            if next == NIL {
                self.nodes.push(Node {
                    point: i as u32,
                    axis,
                    left: NIL,
                    right: NIL,
                });
                let n = &mut self.nodes[cur as usize];
                if go_left {
                    n.left = id;
                } else {
                    n.right = id;
                }
                return;
            }
            cur = next;
        }
    }

    /// The `m` smallest candidates in `(dist_sq, key)` order, where `key`
    /// assigns each row its tie-break rank.
    pub fn nearest<K: Fn(usize) -> u64>(
        &self,
        points: &[f64],
        query: &[f64],
        m: usize,
        key: K,
    ) -> Vec<Candidate> {
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(m + 1);
        let (Some(root), true) = (self.root, m > 0) else {
            return Vec::new();
        };
        let mut stack: Vec<(u32, f64)> = alloc::vec![(root, 0.0)];
        while let Some((id, bound)) = stack.pop() {
            if heap.len() == m && bound > heap.peek().map_or(f64::INFINITY, |c| c.dist_sq) {
                continue;
            }
            let node = self.nodes[id as usize];
            let i = node.point as usize;
            let cand = Candidate {
                dist_sq: squared_distance(query, self.row(points, i)),
                key: key(i),
                index: i,
            };
            if heap.len() < m {
                heap.push(cand);
            } else if cand < *heap.peek().expect("heap is full") {
                heap.pop();
                heap.push(cand);
            }
            let axis = node.axis as usize;
            let diff = query[axis] - points[i * self.dim + axis];
            let (near, far) = if diff < 0.0 {
                (node.left, node.right)
            } else {
                (node.right, node.left)
            };
            if far != NIL {
                stack.push((far, bound.max(diff * diff)));
            }
            if near != NIL {
                stack.push((near, bound));
            }
        }
        heap.into_sorted_vec()
    }
}
