//! Combinatorial map of a fundamental domain: darts, rotation system and
//! face walks, with homology winding per face.
//!
//! Each edge contributes two darts: the even dart runs white to black, the
//! odd dart black to white. The rotation at a vertex orders outgoing darts
//! counterclockwise by planar angle; the face permutation follows a dart's
//! reversal with the clockwise-next dart at the shared vertex, so each face
//! walk keeps its interior on the left and runs counterclockwise around
//! contractible faces.
//! Walks carry the lattice cell of the edge instance they traverse,
//! which yields the face winding and lets geometric checks lift a face
//! consistently to the plane.

use crate::domain::{FundamentalDomain, PlanarPoint};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Dart {
    pub edge: usize,
    /// False: white to black. True: black to white.
    pub rev: bool,
    pub origin: usize,
}

#[derive(Debug, Clone)]
pub struct CombinatorialMap {
    pub darts: Vec<Dart>,
    /// Face walks as (dart id, instance cell relative to the walk start).
    pub walks: Vec<Vec<(usize, (i64, i64))>>,
    /// Net lattice drift when each walk closes; (0,0) iff contractible.
    pub windings: Vec<(i64, i64)>,
    /// For each dart: (face index, instance cell within that face walk).
    pub face_of_dart: Vec<(usize, (i64, i64))>,
    rotation: Vec<usize>,
}

impl CombinatorialMap {
    pub fn build(fd: &FundamentalDomain) -> Result<Self> {
        let nd = 2 * fd.edges.len();
        let mut darts = Vec::with_capacity(nd);
        for e in &fd.edges {
            darts.push(Dart { edge: e.id, rev: false, origin: e.w });
            darts.push(Dart { edge: e.id, rev: true, origin: e.b });
        }

        let mut rotation = vec![0usize; nd];
        for v in 0..fd.vertices.len() {
            let mut out: Vec<(f64, usize)> = (0..nd)
                .filter(|&d| darts[d].origin == v)
                .map(|d| (dart_direction(fd, &darts[d]).angle(), d))
                .collect();
            out.sort_by(|a, b| a.0.total_cmp(&b.0));
            for pair in out.windows(2) {
                if (pair[1].0 - pair[0].0).abs() < 1e-12 {
                    return Err(Error::Structural(format!(
                        "vertex {v}: two incident edges leave in the same direction"
                    )));
                }
            }
            let k = out.len();
            for i in 0..k {
                rotation[out[i].1] = out[(i + 1) % k].1;
            }
        }
        let mut rot_prev = vec![0usize; nd];
        for d in 0..nd {
            rot_prev[rotation[d]] = d;
        }

        let shift_of = |d: usize| fd.edges[darts[d].edge].shift;
        let head_cell = |d: usize, c: (i64, i64)| -> (i64, i64) {
            let s = shift_of(d);
            if !darts[d].rev {
                (c.0 + s.0, c.1 + s.1)
            } else {
                c
            }
        };

        let mut walks: Vec<Vec<(usize, (i64, i64))>> = Vec::new();
        let mut windings = Vec::new();
        let mut face_of_dart = vec![(usize::MAX, (0i64, 0i64)); nd];
        let mut seen = vec![false; nd];
        for start in 0..nd {
            if seen[start] {
                continue;
            }
            let mut walk = Vec::new();
            let mut d = start;
            let mut cell = (0i64, 0i64);
            loop {
                seen[d] = true;
                face_of_dart[d] = (walks.len(), cell);
                walk.push((d, cell));
                let h = head_cell(d, cell);
                let next = rot_prev[d ^ 1];
                let s = shift_of(next);
                cell = if !darts[next].rev { h } else { (h.0 - s.0, h.1 - s.1) };
                d = next;
                if d == start {
                    break;
                }
            }
            walks.push(walk);
            windings.push(cell);
        }
        Ok(CombinatorialMap { darts, walks, windings, face_of_dart, rotation })
    }

    pub fn face_count(&self) -> usize {
        self.walks.len()
    }

    /// Dart ids of one face walk, in traversal order.
    pub fn face_darts(&self, fi: usize) -> impl Iterator<Item = usize> + '_ {
        self.walks[fi].iter().map(|(d, _)| *d)
    }

    /// Lifted origin position of a dart instance at a given cell.
    pub fn lifted_origin(
        &self,
        fd: &FundamentalDomain,
        d: usize,
        cell: (i64, i64),
    ) -> PlanarPoint {
        let dart = &self.darts[d];
        let e = &fd.edges[dart.edge];
        if !dart.rev {
            fd.lifted_pos(e.w, cell)
        } else {
            fd.lifted_pos(e.b, (cell.0 + e.shift.0, cell.1 + e.shift.1))
        }
    }

    /// Circumcenter proposal of the face left of a dart instance: edge
    /// midpoint plus sin(theta) along the left unit normal.
    pub fn center_proposal(
        &self,
        fd: &FundamentalDomain,
        d: usize,
        cell: (i64, i64),
    ) -> PlanarPoint {
        let dart = &self.darts[d];
        let e = &fd.edges[dart.edge];
        let a = self.lifted_origin(fd, d, cell);
        let b = self.lifted_origin(fd, d ^ 1, cell);
        let mid = a.add(b).scale(0.5);
        let dir = b.sub(a);
        let n = PlanarPoint::new(-dir.y, dir.x).scale(1.0 / dir.norm());
        mid.add(n.scale(e.theta.sin()))
    }

    /// All circumcenter proposals of one face, in its walk frame.
    pub fn face_center_proposals(&self, fd: &FundamentalDomain, fi: usize) -> Vec<PlanarPoint> {
        self.walks[fi]
            .iter()
            .map(|&(d, c)| self.center_proposal(fd, d, c))
            .collect()
    }

    /// Faces on the two sides of an edge: (left of white-to-black, right),
    /// plus the planar offset that moves the right face's stored center
    /// into the left face's frame at this edge's reference instance.
    pub fn faces_of_edge(&self, fd: &FundamentalDomain, e: usize) -> (usize, usize, PlanarPoint) {
        let (fl, cl) = self.face_of_dart[2 * e];
        let (fr, cr) = self.face_of_dart[2 * e + 1];
        let offset = fd.basis.displacement(cl.0 - cr.0, cl.1 - cr.1);
        (fl, fr, offset)
    }

    /// Face boundary polygon lifted to the plane, in walk order.
    pub fn face_polygon(&self, fd: &FundamentalDomain, fi: usize) -> Vec<PlanarPoint> {
        self.walks[fi]
            .iter()
            .map(|&(d, c)| self.lifted_origin(fd, d, c))
            .collect()
    }

    /// Whether a point lies in the closed region bounded by a face polygon,
    /// with a distance tolerance for boundary points.
    pub fn point_in_face_closure(
        &self,
        fd: &FundamentalDomain,
        fi: usize,
        p: PlanarPoint,
        tol: f64,
    ) -> bool {
        let poly = self.face_polygon(fd, fi);
        let k = poly.len();
        for i in 0..k {
            if dist_to_segment(p, poly[i], poly[(i + 1) % k]) <= tol {
                return true;
            }
        }
        // Ray crossing parity, horizontal ray to +x.
        let mut inside = false;
        for i in 0..k {
            let a = poly[i];
            let b = poly[(i + 1) % k];
            if (a.y > p.y) != (b.y > p.y) {
                let t = (p.y - a.y) / (b.y - a.y);
                let x = a.x + t * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn rotation_next(&self, d: usize) -> usize {
        self.rotation[d]
    }
}

/// Outgoing planar direction of a dart from its origin.
pub fn dart_direction(fd: &FundamentalDomain, d: &Dart) -> PlanarPoint {
    let v = fd.edge_vector(&fd.edges[d.edge]);
    if d.rev {
        v.scale(-1.0)
    } else {
        v
    }
}

fn dist_to_segment(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.sub(a).norm();
    }
    let t = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2;
    let t = t.clamp(0.0, 1.0);
    p.sub(a.add(ab.scale(t))).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{honeycomb_domain, square_domain};

    #[test]
    fn square_has_two_quadrilateral_faces() {
        let fd = square_domain();
        let m = CombinatorialMap::build(&fd).unwrap();
        assert_eq!(m.face_count(), 2);
        for fi in 0..2 {
            assert_eq!(m.walks[fi].len(), 4);
            assert_eq!(m.windings[fi], (0, 0));
        }
    }

    #[test]
    fn honeycomb_has_one_hexagonal_face() {
        let fd = honeycomb_domain();
        let m = CombinatorialMap::build(&fd).unwrap();
        assert_eq!(m.face_count(), 1);
        assert_eq!(m.walks[0].len(), 6);
        assert_eq!(m.windings[0], (0, 0));
    }

    #[test]
    fn every_dart_lies_in_exactly_one_face_walk() {
        for fd in [square_domain(), honeycomb_domain()] {
            let m = CombinatorialMap::build(&fd).unwrap();
            let total: usize = m.walks.iter().map(|w| w.len()).sum();
            assert_eq!(total, m.darts.len());
            for d in 0..m.darts.len() {
                let (fi, cell) = m.face_of_dart[d];
                assert!(m.walks[fi].contains(&(d, cell)));
            }
        }
    }

    #[test]
    fn face_walks_are_position_consistent() {
        // Along a walk, the head of each dart instance must coincide with
        // the origin of the next dart instance in the plane.
        for fd in [square_domain(), honeycomb_domain()] {
            let m = CombinatorialMap::build(&fd).unwrap();
            for fi in 0..m.face_count() {
                let walk = &m.walks[fi];
                for i in 0..walk.len() {
                    let (d, c) = walk[i];
                    let (dn, cn) = walk[(i + 1) % walk.len()];
                    let head = m.lifted_origin(&fd, d ^ 1, c);
                    let next_origin = m.lifted_origin(&fd, dn, cn);
                    let drift = if (i + 1) % walk.len() == 0 {
                        let w = m.windings[fi];
                        fd.basis.displacement(w.0, w.1)
                    } else {
                        PlanarPoint::new(0.0, 0.0)
                    };
                    let diff = head.sub(next_origin.add(drift)).norm();
                    assert!(diff < 1e-12, "face {fi} step {i}: gap {diff}");
                }
            }
        }
    }

    #[test]
    fn circumcenters_agree_and_sit_inside_faces() {
        for fd in [square_domain(), honeycomb_domain()] {
            let m = CombinatorialMap::build(&fd).unwrap();
            for fi in 0..m.face_count() {
                let props = m.face_center_proposals(&fd, fi);
                for p in &props[1..] {
                    assert!(p.sub(props[0]).norm() < 1e-12);
                }
                assert!(m.point_in_face_closure(&fd, fi, props[0], 1e-9));
            }
        }
    }

    #[test]
    fn circumcenter_proposals_have_unit_circumradius() {
        let fd = square_domain();
        let m = CombinatorialMap::build(&fd).unwrap();
        for fi in 0..m.face_count() {
            let c = m.face_center_proposals(&fd, fi)[0];
            for p in m.face_polygon(&fd, fi) {
                assert!((c.sub(p).norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
