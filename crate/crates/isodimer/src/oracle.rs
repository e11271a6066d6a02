//! Brute-force ground truth on small tori: exhaustive matching
//! enumeration, the partition function as an explicit weighted sum, and
//! weighted sums split by homology parity class.

use crate::torus::{homology_class, Matching, TorusGraph};
use crate::{Error, Result};

/// Default bound on torus vertex count for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 36;

/// Weighted matching sums per homology parity class relative to a
/// reference matching: (even,even), (odd,even), (even,odd), (odd,odd).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassSums {
    pub c_ee: f64,
    pub c_oe: f64,
    pub c_eo: f64,
    pub c_oo: f64,
}

impl ClassSums {
    pub fn by_bits(&self, bits: usize) -> f64 {
        [self.c_ee, self.c_oe, self.c_eo, self.c_oo][bits]
    }

    pub fn total(&self) -> f64 {
        self.c_ee + self.c_oe + self.c_eo + self.c_oo
    }
}

fn check_cap(tg: &TorusGraph, cap: usize) -> Result<()> {
    let size = 2 * tg.white_count();
    if size > cap || tg.white_count() > 64 {
        return Err(Error::CapExceeded { size, cap });
    }
    Ok(())
}

/// All perfect matchings, in deterministic backtracking order: the
/// lowest-index uncovered white row is matched next, candidates ordered by
/// black column.
pub fn enumerate_matchings(tg: &TorusGraph, cap: usize) -> Result<Vec<Matching>> {
    check_cap(tg, cap)?;
    let k = tg.white_count();
    let blacks = tg.cell_count() * tg.fd.black_ids().len();
    if k != blacks {
        return Ok(Vec::new());
    }
    let mut by_white: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for idx in 0..tg.instances.len() {
        let (r, c) = tg.instance_row_col(idx);
        by_white[r].push((c, idx));
    }
    for cands in &mut by_white {
        cands.sort_unstable();
    }

    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(k);
    let mut used: u64 = 0;
    fn recurse(
        row: usize,
        k: usize,
        by_white: &[Vec<(usize, usize)>],
        used: &mut u64,
        chosen: &mut Vec<usize>,
        out: &mut Vec<Matching>,
    ) {
        if row == k {
            out.push(Matching::new(chosen.clone()));
            return;
        }
        for &(c, idx) in &by_white[row] {
            let bit = 1u64 << c;
            if *used & bit == 0 {
                *used |= bit;
                chosen.push(idx);
                recurse(row + 1, k, by_white, used, chosen, out);
                chosen.pop();
                *used &= !bit;
            }
        }
    }
    recurse(0, k, &by_white, &mut used, &mut chosen, &mut out);
    Ok(out)
}

/// Partition function as an explicit sum over all perfect matchings.
pub fn brute_z(tg: &TorusGraph, cap: usize) -> Result<f64> {
    Ok(enumerate_matchings(tg, cap)?
        .iter()
        .map(|m| m.weight(tg))
        .sum())
}

/// Weighted matching sums per homology parity class relative to m0.
pub fn class_sums(tg: &TorusGraph, m0: &Matching, cap: usize) -> Result<ClassSums> {
    if !m0.is_perfect(tg) {
        return Err(Error::Domain("reference matching is not perfect".into()));
    }
    let mut sums = [0.0f64; 4];
    for m in enumerate_matchings(tg, cap)? {
        let h = homology_class(tg, &m, m0)?;
        sums[h.class_bits()] += m.weight(tg);
    }
    Ok(ClassSums { c_ee: sums[0], c_oe: sums[1], c_eo: sums[2], c_oo: sums[3] })
}

/// Sign of the row-to-column permutation induced by a perfect matching,
/// from the parity of its cycle decomposition.
pub fn matching_det_sign(tg: &TorusGraph, m: &Matching) -> i32 {
    let k = tg.white_count();
    let mut perm = vec![usize::MAX; k];
    for &idx in &m.instances {
        let (r, c) = tg.instance_row_col(idx);
        perm[r] = c;
    }
    let mut seen = vec![false; k];
    let mut transpositions = 0usize;
    for start in 0..k {
        if seen[start] {
            continue;
        }
        let mut len = 0usize;
        let mut at = start;
        while !seen[at] {
            seen[at] = true;
            at = perm[at];
            len += 1;
        }
        transpositions += len - 1;
    }
    if transpositions % 2 == 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{honeycomb_domain, square_domain, Color, FundamentalDomain};
    use crate::torus::build_torus;

    const CAP: usize = DEFAULT_ENUMERATION_CAP;

    #[test]
    fn unit_cell_counts_and_sums() {
        let sq = build_torus(&square_domain(), 1).unwrap();
        let ms = enumerate_matchings(&sq, CAP).unwrap();
        assert_eq!(ms.len(), 4);
        let z = brute_z(&sq, CAP).unwrap();
        assert!((z - 4.0 * 2.0f64.sqrt()).abs() < 1e-12);

        let hex = build_torus(&honeycomb_domain(), 1).unwrap();
        assert_eq!(enumerate_matchings(&hex, CAP).unwrap().len(), 3);
        let zh = brute_z(&hex, CAP).unwrap();
        assert!((zh - 3.0 * 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_partition_sums() {
        let sq = build_torus(&square_domain(), 2).unwrap();
        let ms = enumerate_matchings(&sq, CAP).unwrap();
        assert_eq!(ms.len(), 24);
        assert!((brute_z(&sq, CAP).unwrap() - 96.0).abs() < 1e-10);

        let hex = build_torus(&honeycomb_domain(), 2).unwrap();
        assert_eq!(enumerate_matchings(&hex, CAP).unwrap().len(), 9);
        assert!((brute_z(&hex, CAP).unwrap() - 81.0).abs() < 1e-10);
    }

    #[test]
    fn enumeration_is_deterministic_and_duplicate_free() {
        let tg = build_torus(&square_domain(), 2).unwrap();
        let a = enumerate_matchings(&tg, CAP).unwrap();
        let b = enumerate_matchings(&tg, CAP).unwrap();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), a.len());
        for m in &a {
            assert!(m.is_perfect(&tg));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let tg = build_torus(&square_domain(), 4).unwrap();
        match enumerate_matchings(&tg, 16) {
            Err(Error::CapExceeded { size, cap }) => {
                assert_eq!(size, 32);
                assert_eq!(cap, 16);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn unit_cell_classes_split_one_each() {
        let tg = build_torus(&square_domain(), 1).unwrap();
        let m0 = Matching::new(vec![0]);
        let s = class_sums(&tg, &m0, CAP).unwrap();
        let r2 = 2.0f64.sqrt();
        for bits in 0..4 {
            assert!((s.by_bits(bits) - r2).abs() < 1e-12);
        }
        assert!((s.total() - brute_z(&tg, CAP).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn class_totals_match_partition_sum() {
        for (fd, n) in [
            (square_domain(), 2usize),
            (honeycomb_domain(), 2usize),
        ] {
            let tg = build_torus(&fd, n).unwrap();
            let m0 = enumerate_matchings(&tg, CAP).unwrap().remove(0);
            let s = class_sums(&tg, &m0, CAP).unwrap();
            assert!((s.total() - brute_z(&tg, CAP).unwrap()).abs() < 1e-10);
            for bits in 0..4 {
                assert!(s.by_bits(bits) >= 0.0);
            }
        }
    }

    #[test]
    fn class_partition_shifts_globally_with_reference_choice() {
        let tg = build_torus(&square_domain(), 1).unwrap();
        let ms = enumerate_matchings(&tg, CAP).unwrap();
        let classify = |m0: &Matching| -> Vec<usize> {
            ms.iter()
                .map(|m| homology_class(&tg, m, m0).unwrap().class_bits())
                .collect()
        };
        let base = classify(&ms[0]);
        for m0 in &ms {
            let alt = classify(m0);
            let shift = alt[0] ^ base[0];
            for (a, b) in alt.iter().zip(&base) {
                assert_eq!(a ^ b, shift);
            }
        }
    }

    #[test]
    fn partition_sum_survives_vertex_relabeling() {
        let fd = square_domain();
        let mut swapped = fd.clone();
        swapped.vertices.swap(0, 1);
        for (i, v) in swapped.vertices.iter_mut().enumerate() {
            v.id = i;
        }
        for e in &mut swapped.edges {
            e.w = 1 - e.w;
            e.b = 1 - e.b;
        }
        assert_eq!(swapped.vertices[0].color, Color::Black);
        let relabeled: FundamentalDomain = swapped;
        for n in [1usize, 2] {
            let za = brute_z(&build_torus(&fd, n).unwrap(), CAP).unwrap();
            let zb = brute_z(&build_torus(&relabeled, n).unwrap(), CAP).unwrap();
            assert!((za - zb).abs() < 1e-12);
        }
    }

    #[test]
    fn matching_signs_are_plus_minus_one() {
        let tg = build_torus(&square_domain(), 2).unwrap();
        let ms = enumerate_matchings(&tg, CAP).unwrap();
        let mut signs = std::collections::HashSet::new();
        for m in &ms {
            let s = matching_det_sign(&tg, m);
            assert!(s == 1 || s == -1);
            signs.insert(s);
        }
        assert_eq!(signs.len(), 2);
    }
}
