//! Toroidal quotients of a fundamental domain: the n x n block with edge
//! instances carrying signed boundary-crossing counts, perfect matchings,
//! and homology classes of matching pairs.

use crate::domain::FundamentalDomain;
use crate::{Error, Result};

/// One copy of a domain edge inside the n x n block. `cell` locates the
/// white endpoint; the black endpoint sits at `cell + shift` wrapped mod n.
/// `crossings` counts signed wraps of the two cuts: component i is the
/// integer quotient of (cell_i + shift_i) by n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeInstance {
    pub edge: usize,
    pub cell: (i64, i64),
    pub crossings: (i64, i64),
}

impl EdgeInstance {
    /// Whether the instance crosses each cut an odd number of times.
    pub fn crossing_parity(&self) -> (u8, u8) {
        (
            self.crossings.0.rem_euclid(2) as u8,
            self.crossings.1.rem_euclid(2) as u8,
        )
    }
}

/// The quotient of the periodic graph by the sublattice of index n^2.
///
/// Orderings are fixed so matrices and matchings built elsewhere agree:
/// cells are row-major (`a1 * n + a2`), white rows are
/// `cell_index * |W| + white_rank`, black columns use the cell of the black
/// endpoint, and edge instances are `cell_index * |E| + edge_id`.
#[derive(Debug, Clone)]
pub struct TorusGraph {
    pub fd: FundamentalDomain,
    pub n: usize,
    pub instances: Vec<EdgeInstance>,
    w_per_cell: usize,
    b_per_cell: usize,
}

pub fn build_torus(fd: &FundamentalDomain, n: usize) -> Result<TorusGraph> {
    if n == 0 {
        return Err(Error::Domain("torus size n must be at least 1".into()));
    }
    let nn = n as i64;
    let mut instances = Vec::with_capacity(n * n * fd.edges.len());
    for a1 in 0..nn {
        for a2 in 0..nn {
            for e in &fd.edges {
                let crossings = (
                    (a1 + e.shift.0).div_euclid(nn),
                    (a2 + e.shift.1).div_euclid(nn),
                );
                instances.push(EdgeInstance { edge: e.id, cell: (a1, a2), crossings });
            }
        }
    }
    Ok(TorusGraph {
        w_per_cell: fd.white_ids().len(),
        b_per_cell: fd.black_ids().len(),
        fd: fd.clone(),
        n,
        instances,
    })
}

impl TorusGraph {
    pub fn cell_index(&self, cell: (i64, i64)) -> usize {
        let nn = self.n as i64;
        (cell.0.rem_euclid(nn) * nn + cell.1.rem_euclid(nn)) as usize
    }

    pub fn cell_count(&self) -> usize {
        self.n * self.n
    }

    pub fn white_count(&self) -> usize {
        self.cell_count() * self.w_per_cell
    }

    pub fn instance_index(&self, cell: (i64, i64), edge: usize) -> usize {
        self.cell_index(cell) * self.fd.edges.len() + edge
    }

    /// Matrix row of a white vertex instance.
    pub fn white_row(&self, cell: (i64, i64), w: usize) -> usize {
        self.cell_index(cell) * self.w_per_cell + self.fd.color_rank(w)
    }

    /// Matrix column of a black vertex instance.
    pub fn black_col(&self, cell: (i64, i64), b: usize) -> usize {
        self.cell_index(cell) * self.b_per_cell + self.fd.color_rank(b)
    }

    /// Row and column covered by an edge instance.
    pub fn instance_row_col(&self, idx: usize) -> (usize, usize) {
        let inst = &self.instances[idx];
        let e = &self.fd.edges[inst.edge];
        let bc = (inst.cell.0 + e.shift.0, inst.cell.1 + e.shift.1);
        (self.white_row(inst.cell, e.w), self.black_col(bc, e.b))
    }
}

/// A perfect matching, stored as sorted edge instance indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Matching {
    pub instances: Vec<usize>,
}

impl Matching {
    pub fn new(mut instances: Vec<usize>) -> Self {
        instances.sort_unstable();
        Matching { instances }
    }

    pub fn is_perfect(&self, tg: &TorusGraph) -> bool {
        let k = tg.white_count();
        if self.instances.len() != k {
            return false;
        }
        let mut whites = vec![false; k];
        let mut blacks = vec![false; k];
        for &idx in &self.instances {
            if idx >= tg.instances.len() {
                return false;
            }
            let (r, c) = tg.instance_row_col(idx);
            if whites[r] || blacks[c] {
                return false;
            }
            whites[r] = true;
            blacks[c] = true;
        }
        true
    }

    pub fn weight(&self, tg: &TorusGraph) -> f64 {
        self.instances
            .iter()
            .map(|&i| tg.fd.edges[tg.instances[i].edge].weight())
            .product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HomologyClass {
    pub winding: (i64, i64),
    pub parity: (u8, u8),
}

impl HomologyClass {
    pub fn from_winding(winding: (i64, i64)) -> Self {
        HomologyClass {
            winding,
            parity: (winding.0.rem_euclid(2) as u8, winding.1.rem_euclid(2) as u8),
        }
    }

    /// Index into the four-class table: parity bits packed as p1 + 2*p2.
    pub fn class_bits(&self) -> usize {
        self.parity.0 as usize + 2 * self.parity.1 as usize
    }
}

/// Homology class of the cycle system formed by two perfect matchings:
/// per axis, the signed cut crossings of m minus those of m0.
pub fn homology_class(tg: &TorusGraph, m: &Matching, m0: &Matching) -> Result<HomologyClass> {
    for mm in [m, m0] {
        if !mm.is_perfect(tg) {
            return Err(Error::Domain(
                "homology class needs two perfect matchings of this graph".into(),
            ));
        }
    }
    let sum = |mm: &Matching| -> (i64, i64) {
        mm.instances.iter().fold((0, 0), |acc, &i| {
            let c = tg.instances[i].crossings;
            (acc.0 + c.0, acc.1 + c.1)
        })
    };
    let a = sum(m);
    let b = sum(m0);
    Ok(HomologyClass::from_winding((a.0 - b.0, a.1 - b.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{honeycomb_domain, square_domain};

    #[test]
    fn quotient_counts_scale_with_n() {
        let sq = square_domain();
        let t1 = build_torus(&sq, 1).unwrap();
        assert_eq!(t1.white_count() * 2, 2);
        assert_eq!(t1.instances.len(), 4);
        let crossing = t1
            .instances
            .iter()
            .filter(|i| i.crossings != (0, 0))
            .count();
        assert_eq!(crossing, 3);

        let t2 = build_torus(&sq, 2).unwrap();
        assert_eq!(t2.white_count() * 2, 8);
        assert_eq!(t2.instances.len(), 16);

        let hex = honeycomb_domain();
        let t3 = build_torus(&hex, 3).unwrap();
        assert_eq!(t3.white_count() * 2, 18);
        assert_eq!(t3.instances.len(), 27);
    }

    #[test]
    fn zero_size_rejected() {
        assert!(build_torus(&square_domain(), 0).is_err());
    }

    #[test]
    fn instance_ordering_is_row_major_then_edge() {
        let tg = build_torus(&square_domain(), 2).unwrap();
        for (idx, inst) in tg.instances.iter().enumerate() {
            assert_eq!(tg.instance_index(inst.cell, inst.edge), idx);
        }
        assert_eq!(tg.instances[0].cell, (0, 0));
        assert_eq!(tg.instances[4].cell, (0, 1));
        assert_eq!(tg.instances[8].cell, (1, 0));
    }

    #[test]
    fn total_weight_scales_with_cell_count() {
        let fd = honeycomb_domain();
        let per_cell: f64 = fd.edges.iter().map(|e| e.weight()).sum();
        let tg = build_torus(&fd, 3).unwrap();
        let total: f64 = tg
            .instances
            .iter()
            .map(|i| tg.fd.edges[i.edge].weight())
            .sum();
        assert!((total - 9.0 * per_cell).abs() < 1e-12);
    }

    fn all_of_edge(tg: &TorusGraph, edge: usize) -> Matching {
        Matching::new(
            (0..tg.instances.len())
                .filter(|&i| tg.instances[i].edge == edge)
                .collect(),
        )
    }

    #[test]
    fn equal_matchings_have_trivial_class() {
        let tg = build_torus(&square_domain(), 2).unwrap();
        let m = all_of_edge(&tg, 0);
        assert!(m.is_perfect(&tg));
        let h = homology_class(&tg, &m, &m).unwrap();
        assert_eq!(h.winding, (0, 0));
        assert_eq!(h.parity, (0, 0));
    }

    #[test]
    fn horizontal_vs_vertical_classes() {
        // n=2: every vertical instance pairs with another vertical
        // instance across the block, so both axis windings are even.
        let tg = build_torus(&square_domain(), 2).unwrap();
        let horiz = all_of_edge(&tg, 0);
        let vert = all_of_edge(&tg, 1);
        assert!(horiz.is_perfect(&tg) && vert.is_perfect(&tg));
        let h = homology_class(&tg, &vert, &horiz).unwrap();
        assert_eq!(h.winding, (-2, 2));
        assert_eq!(h.parity, (0, 0));

        // n=1: a single vertical loop winds both cuts once.
        let tg1 = build_torus(&square_domain(), 1).unwrap();
        let h1 = homology_class(&tg1, &all_of_edge(&tg1, 1), &all_of_edge(&tg1, 0)).unwrap();
        assert_eq!(h1.winding, (-1, 1));
        assert_eq!(h1.parity, (1, 1));
    }

    #[test]
    fn class_is_antisymmetric_in_winding() {
        let tg = build_torus(&square_domain(), 2).unwrap();
        let a = all_of_edge(&tg, 0);
        let b = all_of_edge(&tg, 3);
        let fwd = homology_class(&tg, &a, &b).unwrap().winding;
        let bwd = homology_class(&tg, &b, &a).unwrap().winding;
        assert_eq!((fwd.0 + bwd.0, fwd.1 + bwd.1), (0, 0));
    }

    #[test]
    fn non_matching_rejected() {
        let tg = build_torus(&square_domain(), 2).unwrap();
        let bad = Matching::new(vec![0, 1, 2, 3]);
        assert!(!bad.is_perfect(&tg));
        let good = all_of_edge(&tg, 0);
        assert!(homology_class(&tg, &bad, &good).is_err());
    }
}
