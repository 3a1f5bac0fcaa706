//! Polygon-with-holes triangulation: holes are bridged into the outer ring,
//! then the resulting weakly simple polygon is ear clipped.
//!
//! Holes are merged in order of decreasing rightmost x. Each hole's
//! rightmost vertex is joined to the nearest vertex of the current outer
//! ring that it can see: the connecting segment must leave both vertices
//! into the material and cross no edge of the outer ring or any hole.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::polygon::{orient, signed_area, P2};
use crate::error::{Error, Result};

fn oriented(coords: &[P2], ring: &[usize], ccw: bool) -> Vec<usize> {
    let pts: Vec<P2> = ring.iter().map(|&i| coords[i]).collect();
    let mut out = ring.to_vec();
    if (signed_area(&pts) > 0.0) != ccw {
        out.reverse();
    }
    out
}

/// Does direction `d` from corner `b` (with ring neighbors `a` before and
/// `c` after, material on the left) point strictly into the material?
fn locally_inside(a: P2, b: P2, c: P2, target: P2) -> bool {
    let convex = orient(a, b, c) > 0.0;
    let left_of_out = orient(b, c, target) > 0.0; // left of b -> c
    let left_of_in = orient(a, b, target) > 0.0; // left of a -> b
    if convex {
        left_of_out && left_of_in
    } else {
        left_of_out || left_of_in
    }
}

fn on_segment(p: P2, a: P2, b: P2) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Whether edge `a`-`b` obstructs the open segment `m`-`v`.
fn blocks(m: P2, v: P2, a: P2, b: P2) -> bool {
    let shares_a = a == m || a == v;
    let shares_b = b == m || b == v;
    if shares_a && shares_b {
        return true;
    }
    let o1 = orient(m, v, a);
    let o2 = orient(m, v, b);
    if shares_a {
        return o2 == 0.0 && on_segment(b, m, v);
    }
    if shares_b {
        return o1 == 0.0 && on_segment(a, m, v);
    }
    let o3 = orient(a, b, m);
    let o4 = orient(a, b, v);
    if o1 != 0.0 && o2 != 0.0 && o3 != 0.0 && o4 != 0.0 {
        return (o1 > 0.0) != (o2 > 0.0) && (o3 > 0.0) != (o4 > 0.0);
    }
    (o1 == 0.0 && on_segment(a, m, v))
        || (o2 == 0.0 && on_segment(b, m, v))
        || (o3 == 0.0 && on_segment(m, a, b))
        || (o4 == 0.0 && on_segment(v, a, b))
}

/// Doubly linked ring node; a coordinate may appear in several nodes once
/// bridges are spliced in.
#[derive(Clone, Copy)]
struct Node {
    pt: P2,
    id: usize,
    prev: usize,
    next: usize,
}

/// Bucket grid over a fixed bounding box, used both for ring vertices and
/// for edges.
struct Buckets {
    min: P2,
    cell: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(min: P2, max: P2, count: usize) -> Self {
        let span = [(max[0] - min[0]).max(1e-300), (max[1] - min[1]).max(1e-300)];
        let cell = (span[0] * span[1] / count.max(1) as f64).sqrt().max(span[0].max(span[1]) / 2048.0);
        let cols = ((span[0] / cell) as usize + 1).min(2049);
        let rows = ((span[1] / cell) as usize + 1).min(2049);
        Self {
            min,
            cell,
            cols,
            rows,
            cells: vec![Vec::new(); cols * rows],
        }
    }

    fn cell_of(&self, p: P2) -> (usize, usize) {
        let fx = ((p[0] - self.min[0]) / self.cell).max(0.0);
        let fy = ((p[1] - self.min[1]) / self.cell).max(0.0);
        ((fx as usize).min(self.cols - 1), (fy as usize).min(self.rows - 1))
    }

    fn insert_point(&mut self, p: P2, item: usize) {
        let (cx, cy) = self.cell_of(p);
        self.cells[cy * self.cols + cx].push(item);
    }

    fn insert_box(&mut self, a: P2, b: P2, item: usize) {
        let (x0, y0) = self.cell_of([a[0].min(b[0]), a[1].min(b[1])]);
        let (x1, y1) = self.cell_of([a[0].max(b[0]), a[1].max(b[1])]);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                self.cells[cy * self.cols + cx].push(item);
            }
        }
    }

    /// Items in the cells at Chebyshev distance exactly `k` from `(cx, cy)`.
    fn ring_items(&self, cx: usize, cy: usize, k: usize, out: &mut Vec<usize>) {
        let (cx, cy, k) = (cx as isize, cy as isize, k as isize);
        for y in cy - k..=cy + k {
            if y < 0 || y >= self.rows as isize {
                continue;
            }
            let on_edge_row = y == cy - k || y == cy + k;
            let step = if on_edge_row || k == 0 { 1 } else { (2 * k) as usize };
            let mut x = cx - k;
            while x <= cx + k {
                if x >= 0 && x < self.cols as isize {
                    out.extend_from_slice(&self.cells[y as usize * self.cols + x as usize]);
                }
                x += step as isize;
            }
        }
    }
}

fn bridge_holes(coords: &[P2], outer: &[usize], holes: &[Vec<usize>]) -> Result<Vec<usize>> {
    let outer = oriented(coords, outer, true);
    let holes: Vec<Vec<usize>> = holes.iter().map(|h| oriented(coords, h, false)).collect();

    let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let mut total = outer.len();
    for &i in outer.iter().chain(holes.iter().flatten()) {
        for a in 0..2 {
            min[a] = min[a].min(coords[i][a]);
            max[a] = max[a].max(coords[i][a]);
        }
    }
    total += holes.iter().map(Vec::len).sum::<usize>();

    let mut nodes: Vec<Node> = Vec::with_capacity(total + 2 * holes.len());
    let add_ring = |nodes: &mut Vec<Node>, ring: &[usize]| -> usize {
        let base = nodes.len();
        let n = ring.len();
        for (k, &i) in ring.iter().enumerate() {
            nodes.push(Node {
                pt: coords[i],
                id: i,
                prev: base + (k + n - 1) % n,
                next: base + (k + 1) % n,
            });
        }
        base
    };
    let outer_base = add_ring(&mut nodes, &outer);
    let hole_bases: Vec<usize> = holes.iter().map(|h| add_ring(&mut nodes, h)).collect();

    let mut segments: Vec<(P2, P2)> = Vec::with_capacity(total + holes.len());
    let mut seg_grid = Buckets::new(min, max, total);
    let mut vert_grid = Buckets::new(min, max, total);
    for i in 0..nodes.len() {
        let (a, b) = (nodes[i].pt, nodes[nodes[i].next].pt);
        seg_grid.insert_box(a, b, segments.len());
        segments.push((a, b));
    }
    for i in outer_base..outer_base + outer.len() {
        vert_grid.insert_point(nodes[i].pt, i);
    }

    // rightmost vertex of each hole, then merge order by decreasing x
    let mut order: Vec<(usize, usize)> = holes
        .iter()
        .zip(&hole_bases)
        .enumerate()
        .map(|(h, (ring, &base))| {
            let m = (0..ring.len())
                .max_by(|&i, &j| {
                    let (p, q) = (coords[ring[i]], coords[ring[j]]);
                    p[0].total_cmp(&q[0]).then(q[1].total_cmp(&p[1])).then(j.cmp(&i))
                })
                .expect("hole rings are non-empty");
            (h, base + m)
        })
        .collect();
    order.sort_by(|&(ha, ma), &(hb, mb)| nodes[mb].pt[0].total_cmp(&nodes[ma].pt[0]).then(ha.cmp(&hb)));

    let mut seen = vec![0usize; segments.len() + holes.len()];
    let mut stamp = 0usize;
    let mut found = Vec::new();
    for &(h, m) in &order {
        let mp = nodes[m].pt;
        let (hm_prev, hm_next) = (nodes[nodes[m].prev].pt, nodes[nodes[m].next].pt);
        let (cx, cy) = vert_grid.cell_of(mp);
        let max_k = vert_grid.cols.max(vert_grid.rows);
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
        let mut chosen = None;
        'search: for k in 0..=max_k {
            found.clear();
            vert_grid.ring_items(cx, cy, k, &mut found);
            for &v in &found {
                let p = nodes[v].pt;
                let d2 = (p[0] - mp[0]).powi(2) + (p[1] - mp[1]).powi(2);
                heap.push(Reverse((d2.to_bits(), v)));
            }
            // anything in later rings is at least this far away
            let bound = if k == max_k { f64::INFINITY } else { k as f64 * vert_grid.cell };
            while let Some(&Reverse((d2, v))) = heap.peek() {
                if f64::from_bits(d2) > bound * bound {
                    break;
                }
                heap.pop();
                let vp = nodes[v].pt;
                if vp == mp {
                    continue;
                }
                if !locally_inside(nodes[nodes[v].prev].pt, vp, nodes[nodes[v].next].pt, mp)
                    || !locally_inside(hm_prev, mp, hm_next, vp)
                {
                    continue;
                }
                stamp += 1;
                let (x0, y0) = seg_grid.cell_of([mp[0].min(vp[0]), mp[1].min(vp[1])]);
                let (x1, y1) = seg_grid.cell_of([mp[0].max(vp[0]), mp[1].max(vp[1])]);
                let mut clear = true;
                'cells: for gy in y0..=y1 {
                    for gx in x0..=x1 {
                        for &s in &seg_grid.cells[gy * seg_grid.cols + gx] {
                            if seen[s] == stamp {
                                continue;
                            }
                            seen[s] = stamp;
                            let (a, b) = segments[s];
                            if blocks(mp, vp, a, b) {
                                clear = false;
                                break 'cells;
                            }
                        }
                    }
                }
                if clear {
                    chosen = Some(v);
                    break 'search;
                }
            }
        }
        let v = chosen.ok_or_else(|| Error::Geometry(format!("no visible bridge for hole {h}")))?;

        // v -> m ... (hole) ... m' -> v' -> old next of v
        let m_prev = nodes[m].prev;
        let v_next = nodes[v].next;
        let m2 = nodes.len();
        let v2 = m2 + 1;
        nodes.push(Node {
            pt: mp,
            id: nodes[m].id,
            prev: m_prev,
            next: v2,
        });
        nodes.push(Node {
            pt: nodes[v].pt,
            id: nodes[v].id,
            prev: m2,
            next: v_next,
        });
        nodes[m_prev].next = m2;
        nodes[v_next].prev = v2;
        nodes[v].next = m;
        nodes[m].prev = v;

        let base = hole_bases[h];
        for i in base..base + holes[h].len() {
            vert_grid.insert_point(nodes[i].pt, i);
        }
        vert_grid.insert_point(mp, m2);
        vert_grid.insert_point(nodes[v].pt, v2);
        seg_grid.insert_box(mp, nodes[v].pt, segments.len());
        segments.push((mp, nodes[v].pt));
    }

    let mut ring = Vec::with_capacity(nodes.len());
    let mut cur = outer_base;
    loop {
        ring.push(nodes[cur].id);
        cur = nodes[cur].next;
        if cur == outer_base {
            break;
        }
    }
    debug_assert_eq!(ring.len(), nodes.len());
    Ok(ring)
}

/// Uniform bucket grid over the polygon's vertices.
struct NodeGrid {
    min: P2,
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl NodeGrid {
    fn new(pts: &[P2]) -> Self {
        let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in pts {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        let span = [(max[0] - min[0]).max(1e-300), (max[1] - min[1]).max(1e-300)];
        let cell = ((span[0] * span[1] / pts.len() as f64).sqrt() * 2.0).max(span[0].max(span[1]) / 1024.0);
        let cols = ((span[0] / cell) as usize + 1).min(4096);
        let rows = ((span[1] / cell) as usize + 1).min(4096);
        let mut grid = Self {
            min,
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        };
        for (i, p) in pts.iter().enumerate() {
            let (cx, cy) = grid.cell_of(*p);
            grid.buckets[cy * cols + cx].push(i);
        }
        grid
    }

    fn cell_of(&self, p: P2) -> (usize, usize) {
        let cx = (((p[0] - self.min[0]) / self.cell) as usize).min(self.cols - 1);
        let cy = (((p[1] - self.min[1]) / self.cell) as usize).min(self.rows - 1);
        (cx, cy)
    }
}

struct EarClipper<'a> {
    pts: Vec<P2>,
    prev: Vec<usize>,
    next: Vec<usize>,
    alive: Vec<bool>,
    grid: NodeGrid,
    ids: &'a [usize],
}

impl EarClipper<'_> {
    /// `strict_only` relaxes the test to reject only points strictly inside.
    fn is_ear(&self, b: usize, strict_only: bool) -> bool {
        let (a, c) = (self.prev[b], self.next[b]);
        let (pa, pb, pc) = (self.pts[a], self.pts[b], self.pts[c]);
        if orient(pa, pb, pc) <= 0.0 {
            return false;
        }
        let lo = [pa[0].min(pb[0]).min(pc[0]), pa[1].min(pb[1]).min(pc[1])];
        let hi = [pa[0].max(pb[0]).max(pc[0]), pa[1].max(pb[1]).max(pc[1])];
        let (x0, y0) = self.grid.cell_of(lo);
        let (x1, y1) = self.grid.cell_of(hi);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                for &q in &self.grid.buckets[cy * self.grid.cols + cx] {
                    if !self.alive[q] || q == a || q == b || q == c {
                        continue;
                    }
                    let pq = self.pts[q];
                    if pq == pa || pq == pb || pq == pc {
                        continue;
                    }
                    if pq[0] < lo[0] || pq[0] > hi[0] || pq[1] < lo[1] || pq[1] > hi[1] {
                        continue;
                    }
                    let (s1, s2, s3) = (orient(pa, pb, pq), orient(pb, pc, pq), orient(pc, pa, pq));
                    let hit = if strict_only {
                        s1 > 0.0 && s2 > 0.0 && s3 > 0.0
                    } else {
                        s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0
                    };
                    if hit {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn clip(mut self) -> Result<Vec<[usize; 3]>> {
        let n = self.pts.len();
        let mut tris = Vec::with_capacity(n.saturating_sub(2));
        let mut remaining = n;
        let mut cur = 0;
        let mut stall = 0;
        let mut relaxed = false;
        while remaining > 3 {
            if self.is_ear(cur, relaxed) {
                let (a, c) = (self.prev[cur], self.next[cur]);
                tris.push([self.ids[a], self.ids[cur], self.ids[c]]);
                self.alive[cur] = false;
                self.next[a] = c;
                self.prev[c] = a;
                remaining -= 1;
                cur = c;
                stall = 0;
                relaxed = false;
            } else {
                cur = self.next[cur];
                stall += 1;
                if stall > remaining {
                    if relaxed {
                        return Err(Error::Geometry(format!("ear clipping stalled with {remaining} vertices left")));
                    }
                    relaxed = true;
                    stall = 0;
                }
            }
        }
        let (a, c) = (self.prev[cur], self.next[cur]);
        if orient(self.pts[a], self.pts[cur], self.pts[c]) <= 0.0 {
            return Err(Error::Geometry("degenerate final triangle".into()));
        }
        tris.push([self.ids[a], self.ids[cur], self.ids[c]]);
        Ok(tris)
    }
}

/// Triangulate the region bounded by `outer` minus `holes` (rings of indices
/// into `coords`). Triangles are counter-clockwise and reference `coords`
/// indices; no vertices are added.
pub fn triangulate(coords: &[P2], outer: &[usize], holes: &[Vec<usize>]) -> Result<Vec<[usize; 3]>> {
    if outer.len() < 3 || holes.iter().any(|h| h.len() < 3) {
        return Err(Error::Geometry("rings need at least three vertices".into()));
    }
    let ring = bridge_holes(coords, outer, holes)?;
    let n = ring.len();
    let pts: Vec<P2> = ring.iter().map(|&i| coords[i]).collect();
    let grid = NodeGrid::new(&pts);
    EarClipper {
        prev: (0..n).map(|i| (i + n - 1) % n).collect(),
        next: (0..n).map(|i| (i + 1) % n).collect(),
        alive: vec![true; n],
        grid,
        pts,
        ids: &ring,
    }
    .clip()
}
