//! Partition functions of toroidal quotients from the four signed
//! determinants, the three growth-rate estimators (finite size, spectral,
//! closed form), special-function evaluators backing the closed form, and
//! the derivative identities connecting log-determinants to inverse
//! entries.

use serde::Serialize;

use crate::domain::{DomainMode, FundamentalDomain};
use crate::linalg::{factor, integrate_gl, phased_logdet, sector_roots, signed_logdet};
use crate::linalg::{bloch_matrix, SignedLogDet};
use crate::orientation::{build_kasteleyn_set, oriented_kasteleyn, Orientation};
use crate::torus::build_torus;
use crate::{Error, Result};

use std::f64::consts::PI;

/// Angle tolerance for treating an edge as fully degenerate.
const DEGENERATE_ANGLE_TOL: f64 = 1e-9;
/// One-cell determinant magnitude below which a spectral grid cell is
/// treated as singular and refined.
const SPECTRAL_SINGULAR_TOL: f64 = 1e-8;
/// Midpoint subdivision per axis for refined spectral cells.
const SPECTRAL_REFINE: usize = 16;

#[derive(Debug, Clone, Copy)]
pub struct PartitionValue {
    pub log_z: f64,
    /// The plain value when it fits in a double.
    pub z: Option<f64>,
}

impl PartitionValue {
    fn from_log(log_z: f64) -> Self {
        let z = if log_z < 700.0 { Some(log_z.exp()) } else { None };
        PartitionValue { log_z, z }
    }
}

/// Log of 2^(n^2 M / 2) * 2^(n p) for a fully degenerate domain: M counts
/// right-angle edges, p the components they span in the one-cell quotient.
pub fn degenerate_log_partition(fd: &FundamentalDomain, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("torus size n must be at least 1".into()));
    }
    let right_angle: Vec<&crate::domain::EdgeSpec> = fd
        .edges
        .iter()
        .filter(|e| (e.theta - PI / 2.0).abs() <= DEGENERATE_ANGLE_TOL)
        .collect();
    let m = right_angle.len();
    let mut parent: Vec<usize> = (0..fd.vertices.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    let mut touched = vec![false; fd.vertices.len()];
    for e in &right_angle {
        touched[e.w] = true;
        touched[e.b] = true;
        let (a, b) = (find(&mut parent, e.w), find(&mut parent, e.b));
        if a != b {
            parent[a] = b;
        }
    }
    let p = (0..fd.vertices.len())
        .filter(|&v| touched[v] && find(&mut parent, v) == v)
        .count();
    let nf = n as f64;
    Ok((nf * nf * m as f64 / 2.0 + nf * p as f64) * 2.0f64.ln())
}

/// Z as half the calibrated signed combination of the four determinants,
/// assembled in log space with a max-shifted signed exponential sum.
/// Fully degenerate domains take the closed product form instead.
pub fn partition_function(
    fd: &FundamentalDomain,
    o: &Orientation,
    sigma: [i8; 4],
    n: usize,
) -> Result<PartitionValue> {
    if fd.mode == DomainMode::Degenerate {
        return Ok(PartitionValue::from_log(degenerate_log_partition(fd, n)?));
    }
    let tg = build_torus(fd, n)?;
    let ks = build_kasteleyn_set(&tg, o)?;
    let dets: Vec<SignedLogDet> = ks.mats.iter().map(signed_logdet).collect();
    log_z_from_dets(&dets, sigma)
}

fn log_z_from_dets(dets: &[SignedLogDet], sigma: [i8; 4]) -> Result<PartitionValue> {
    let shift = dets
        .iter()
        .filter(|d| d.sign != 0.0)
        .map(|d| d.logabs)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Err(Error::Calibration(
            "all four determinants are singular; no matchings to count".into(),
        ));
    }
    let sum: f64 = dets
        .iter()
        .zip(sigma)
        .map(|(d, s)| s as f64 * d.sign * (d.logabs - shift).exp())
        .sum();
    if sum <= 0.0 {
        return Err(Error::Calibration(format!(
            "signed determinant combination is not positive (shifted sum {sum})"
        )));
    }
    Ok(PartitionValue::from_log(shift + (0.5 * sum).ln()))
}

/// (1/n^2) log Z with orientation and sign vector derived internally.
pub fn growth_rate_finite(fd: &FundamentalDomain, n: usize) -> Result<f64> {
    if fd.mode == DomainMode::Degenerate {
        let nf = n as f64;
        return Ok(degenerate_log_partition(fd, n)? / (nf * nf));
    }
    let (o, sigma) = oriented_kasteleyn(fd)?;
    growth_rate_finite_with(fd, &o, sigma, n)
}

pub fn growth_rate_finite_with(
    fd: &FundamentalDomain,
    o: &Orientation,
    sigma: [i8; 4],
    n: usize,
) -> Result<f64> {
    let nf = n as f64;
    Ok(partition_function(fd, o, sigma, n)?.log_z / (nf * nf))
}

/// Per-edge closed form of the growth rate: sum over one cell of
/// (theta/pi) log(2 sin theta) + L(theta)/pi.
pub fn growth_rate_closed_form(fd: &FundamentalDomain) -> Result<f64> {
    let mut total = 0.0;
    for e in &fd.edges {
        if e.theta <= DEGENERATE_ANGLE_TOL {
            continue;
        }
        total += e.theta / PI * (2.0 * e.theta.sin()).ln() + lobachevsky(e.theta)? / PI;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralEstimate {
    pub value: f64,
    /// Grid pairs whose determinant fell below the singularity threshold
    /// and were replaced by a refined cell average.
    pub refined: usize,
    /// Set when more pairs were refined than isolated spectral zeros can
    /// explain.
    pub warning: bool,
}

/// Riemann sum of log|det B| over the n_grid-th root-of-unity pairs,
/// scaled by 1/n_grid^2. A pair sitting on a spectral zero contributes
/// its cell's midpoint-subgrid average instead, so the removable
/// logarithmic singularity keeps its integral mass.
pub fn growth_rate_spectral(
    fd: &FundamentalDomain,
    o: &Orientation,
    n_grid: usize,
) -> Result<SpectralEstimate> {
    if n_grid == 0 {
        return Err(Error::Domain("spectral grid must have at least one point".into()));
    }
    let roots = sector_roots(n_grid, 1);
    let mut total = 0.0;
    let mut refined = 0usize;
    for (j, z) in roots.iter().enumerate() {
        for (k, w) in roots.iter().enumerate() {
            let d = phased_logdet(&bloch_matrix(fd, &o.indicator, *z, *w)?);
            if d.logabs.exp() >= SPECTRAL_SINGULAR_TOL {
                total += d.logabs;
                continue;
            }
            refined += 1;
            let mut cell = 0.0;
            let mut live = 0usize;
            for u in 0..SPECTRAL_REFINE {
                for v in 0..SPECTRAL_REFINE {
                    let za = 2.0 * PI * (j as f64 + (u as f64 + 0.5) / SPECTRAL_REFINE as f64)
                        / n_grid as f64;
                    let wa = 2.0 * PI * (k as f64 + (v as f64 + 0.5) / SPECTRAL_REFINE as f64)
                        / n_grid as f64;
                    let zz = num_complex::Complex64::from_polar(1.0, za);
                    let ww = num_complex::Complex64::from_polar(1.0, wa);
                    let dd = phased_logdet(&bloch_matrix(fd, &o.indicator, zz, ww)?);
                    if dd.logabs.is_finite() {
                        cell += dd.logabs;
                        live += 1;
                    }
                }
            }
            if live > 0 {
                total += cell / live as f64;
            }
        }
    }
    let nf = n_grid as f64;
    Ok(SpectralEstimate {
        value: total / (nf * nf),
        refined,
        warning: refined > 4,
    })
}

// ---------------------------------------------------------------------------
// Special functions.
// ---------------------------------------------------------------------------

/// L(x) = -integral of log(2 sin t) from 0 to x, for x in [0, pi].
///
/// The log-singularity at 0 is split off analytically: the integral of
/// log(2t) is closed form and the remainder log(sin t / t) is smooth, so
/// fixed-order quadrature reaches full double precision. Above pi/2 the
/// reflection through the substitution t -> pi - t reduces to the first
/// half.
pub fn lobachevsky(x: f64) -> Result<f64> {
    if !(-1e-12..=PI + 1e-12).contains(&x) {
        return Err(Error::Domain(format!("lobachevsky argument {x} outside [0, pi]")));
    }
    let x = x.clamp(0.0, PI);
    if x == 0.0 {
        return Ok(0.0);
    }
    if x > PI / 2.0 {
        return Ok(-lobachevsky(PI - x)?);
    }
    let smooth = integrate_gl(64, 0.0, x, |t| {
        if t.abs() < 1e-30 {
            0.0
        } else {
            (t.sin() / t).ln()
        }
    });
    Ok(-(x * (2.0 * x).ln() - x) - smooth)
}

/// Riemann zeta at even integer arguments, by direct summation with
/// Euler-Maclaurin tail corrections.
fn zeta_even(two_n: u32) -> f64 {
    let s = two_n as f64;
    let n = 32.0f64;
    let mut sum = 0.0;
    for k in 1..=32u32 {
        sum += (k as f64).powf(-s);
    }
    sum += n.powf(1.0 - s) / (s - 1.0) - 0.5 * n.powf(-s);
    sum += s / 12.0 * n.powf(-s - 1.0);
    sum -= s * (s + 1.0) * (s + 2.0) / 720.0 * n.powf(-s - 3.0);
    sum += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * n.powf(-s - 5.0);
    sum
}

/// Independent evaluator of the same integral via the Clausen series
/// L(x) = Cl2(2x) / 2, used to cross-check the quadrature path.
pub fn lobachevsky_series(x: f64) -> Result<f64> {
    if !(-1e-12..=PI + 1e-12).contains(&x) {
        return Err(Error::Domain(format!("lobachevsky argument {x} outside [0, pi]")));
    }
    let x = x.clamp(0.0, PI);
    Ok(0.5 * clausen2(2.0 * x))
}

fn clausen2(theta: f64) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    if theta > PI {
        return -clausen2(2.0 * PI - theta);
    }
    let mut sum = theta - theta * theta.ln();
    let ratio = theta / (2.0 * PI);
    let mut pow = theta;
    for n in 1..60u32 {
        pow *= ratio * ratio;
        let term = zeta_even(2 * n) * pow * theta / (n as f64 * (2 * n + 1) as f64);
        sum += term / theta;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Catalan's constant via a central binomial series plus a closed-form
/// logarithmic term.
pub fn catalan() -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0f64;
    for n in 0..45u32 {
        if n > 0 {
            let nf = n as f64;
            binom *= (2.0 * nf - 1.0) * 2.0 * nf / (nf * nf);
        }
        sum += 1.0 / (binom * (2.0 * n as f64 + 1.0).powi(2));
    }
    3.0 / 8.0 * sum + PI / 8.0 * (2.0 + 3.0f64.sqrt()).ln()
}

// ---------------------------------------------------------------------------
// Derivative identities.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DlogdetReport {
    /// Worst absolute deviation between the finite difference and the
    /// inverse-entry identity over the nonsingular matrices.
    pub residual: f64,
    /// Matrices skipped as singular (0-based).
    pub skipped: Vec<usize>,
}

fn with_edge_angle(fd: &FundamentalDomain, edge: usize, theta: f64) -> FundamentalDomain {
    let mut out = fd.clone();
    out.edges[edge].theta = theta;
    out
}

/// Compare the theta-derivative of each log-determinant, taken by central
/// finite differences, against n^2 * inverse entry * entry derivative.
pub fn dlogdet_identity_check(
    fd: &FundamentalDomain,
    o: &Orientation,
    n: usize,
    edge: usize,
    h: f64,
) -> Result<DlogdetReport> {
    let e = &fd.edges[edge];
    if e.shift != (0, 0) {
        return Err(Error::Domain(
            "derivative check needs an edge that stays inside the cell".into(),
        ));
    }
    let tg = build_torus(fd, n)?;
    let ks = build_kasteleyn_set(&tg, o)?;
    let plus = build_kasteleyn_set(&build_torus(&with_edge_angle(fd, edge, e.theta + h), n)?, o)?;
    let minus = build_kasteleyn_set(&build_torus(&with_edge_angle(fd, edge, e.theta - h), n)?, o)?;

    let dk_dtheta = o.sign(edge) * 2.0 * e.theta.cos();
    let nf = n as f64;
    let mut residual = 0.0f64;
    let mut skipped = Vec::new();
    for ell in 0..4 {
        let lu = factor(&ks.mats[ell]);
        let mut rhs = vec![0.0; ks.mats[ell].n];
        rhs[tg.white_row((0, 0), e.w)] = 1.0;
        let inv_entry = match lu.solve(&rhs) {
            Ok(x) => x[tg.black_col((0, 0), e.b)],
            Err(_) => {
                skipped.push(ell);
                continue;
            }
        };
        let dp = signed_logdet(&plus.mats[ell]);
        let dm = signed_logdet(&minus.mats[ell]);
        let fd_deriv = (dp.logabs - dm.logabs) / (2.0 * h);
        let identity = nf * nf * inv_entry * dk_dtheta;
        residual = residual.max((fd_deriv - identity).abs());
    }
    Ok(DlogdetReport { residual, skipped })
}

/// The four normalized determinant weights sigma_ell det K_ell / (2 Z).
pub fn det_weights(
    fd: &FundamentalDomain,
    o: &Orientation,
    sigma: [i8; 4],
    n: usize,
) -> Result<[f64; 4]> {
    let tg = build_torus(fd, n)?;
    let ks = build_kasteleyn_set(&tg, o)?;
    let dets: Vec<SignedLogDet> = ks.mats.iter().map(signed_logdet).collect();
    let log_z = log_z_from_dets(&dets, sigma)?.log_z;
    Ok(std::array::from_fn(|ell| {
        let d = dets[ell];
        if d.sign == 0.0 {
            0.0
        } else {
            0.5 * sigma[ell] as f64 * d.sign * (d.logabs - log_z).exp()
        }
    }))
}

/// (1/n^2) d(log Z)/d(theta_i) through the weighted inverse-entry
/// identity; approaches (theta/pi) cot(theta) as n grows.
pub fn dlogz_dtheta(
    fd: &FundamentalDomain,
    o: &Orientation,
    sigma: [i8; 4],
    n: usize,
    edge: usize,
) -> Result<f64> {
    let e = &fd.edges[edge];
    if e.shift != (0, 0) {
        return Err(Error::Domain(
            "derivative needs an edge that stays inside the cell".into(),
        ));
    }
    let tg = build_torus(fd, n)?;
    let ks = build_kasteleyn_set(&tg, o)?;
    let dk_dtheta = o.sign(edge) * 2.0 * e.theta.cos();
    let mut dets = Vec::with_capacity(4);
    let mut inv_entries = Vec::with_capacity(4);
    for ell in 0..4 {
        let lu = factor(&ks.mats[ell]);
        let (sign, logabs) = lu.log_det();
        dets.push(SignedLogDet { sign, logabs });
        let mut rhs = vec![0.0; ks.mats[ell].n];
        rhs[tg.white_row((0, 0), e.w)] = 1.0;
        inv_entries.push(match lu.solve(&rhs) {
            Ok(x) => Some(x[tg.black_col((0, 0), e.b)]),
            Err(_) => None,
        });
    }
    let log_z = log_z_from_dets(&dets, sigma)?.log_z;
    let mut deriv = 0.0;
    for ell in 0..4 {
        let d = dets[ell];
        let Some(inv) = inv_entries[ell] else { continue };
        if d.sign == 0.0 {
            continue;
        }
        let weight = 0.5 * sigma[ell] as f64 * d.sign * (d.logabs - log_z).exp();
        deriv += weight * inv * dk_dtheta;
    }
    Ok(deriv)
}

// ---------------------------------------------------------------------------
// Growth-rate report.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRateReport {
    pub closed_form: f64,
    pub finite_n: Vec<(usize, f64)>,
    pub spectral_grid: usize,
    pub spectral: f64,
    pub spectral_refined_pairs: usize,
    pub spectral_warning: bool,
    pub max_discrepancy: f64,
}

pub fn growth_report(
    fd: &FundamentalDomain,
    ns: &[usize],
    n_grid: usize,
) -> Result<GrowthRateReport> {
    let closed = growth_rate_closed_form(fd)?;
    let degenerate = fd.mode == DomainMode::Degenerate;
    let oriented = if degenerate { None } else { Some(oriented_kasteleyn(fd)?) };
    let mut finite = Vec::new();
    for &n in ns {
        let v = match &oriented {
            Some((o, sigma)) => growth_rate_finite_with(fd, o, *sigma, n)?,
            None => growth_rate_finite(fd, n)?,
        };
        finite.push((n, v));
    }
    let spectral = match &oriented {
        Some((o, _)) => growth_rate_spectral(fd, o, n_grid)?,
        None => {
            let (o, _sigma) = derive_orientation_unchecked(fd)?;
            growth_rate_spectral(fd, &o, n_grid)?
        }
    };
    let mut values: Vec<f64> = vec![closed, spectral.value];
    values.extend(finite.iter().map(|(_, v)| *v));
    let mut max_disc = 0.0f64;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            max_disc = max_disc.max((values[i] - values[j]).abs());
        }
    }
    Ok(GrowthRateReport {
        closed_form: closed,
        finite_n: finite,
        spectral_grid: n_grid,
        spectral: spectral.value,
        spectral_refined_pairs: spectral.refined,
        spectral_warning: spectral.warning,
        max_discrepancy: max_disc,
    })
}

/// Orientation for domains where calibration cannot run (degenerate
/// weights make the matching sum collapse): face parity only, first
/// twist representative.
fn derive_orientation_unchecked(fd: &FundamentalDomain) -> Result<(Orientation, [i8; 4])> {
    match oriented_kasteleyn(fd) {
        Ok(pair) => Ok(pair),
        Err(_) => {
            let o = crate::orientation::clockwise_odd_candidate(fd)?;
            Ok((o, [-1, 1, 1, 1]))
        }
    }
}

impl GrowthRateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,finite_n,spectral,closed_form,diff\n");
        for (n, v) in &self.finite_n {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                n,
                v,
                self.spectral,
                self.closed_form,
                (v - self.closed_form).abs()
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{honeycomb_domain, rect_domain, rect_domain_mode, square_domain};
    use crate::oracle::{brute_z, DEFAULT_ENUMERATION_CAP};

    const CATALAN_REF: f64 = 0.915_965_594_177_219;

    #[test]
    fn partition_matches_exhaustive_sums() {
        for fd in [
            square_domain(),
            honeycomb_domain(),
            rect_domain(PI / 6.0).unwrap(),
        ] {
            let (o, sigma) = oriented_kasteleyn(&fd).unwrap();
            for n in [1usize, 2] {
                let tg = build_torus(&fd, n).unwrap();
                let z_brute = brute_z(&tg, DEFAULT_ENUMERATION_CAP).unwrap();
                let z = partition_function(&fd, &o, sigma, n).unwrap();
                let zv = z.z.unwrap();
                assert!(
                    (zv - z_brute).abs() <= 1e-10 * z_brute,
                    "n={n}: {zv} vs {z_brute}"
                );
            }
        }
    }

    #[test]
    fn square_partition_frozen_values() {
        let fd = square_domain();
        let (o, sigma) = oriented_kasteleyn(&fd).unwrap();
        let z1 = partition_function(&fd, &o, sigma, 1).unwrap().z.unwrap();
        assert!((z1 - 4.0 * 2.0f64.sqrt()).abs() < 1e-12);
        let z2 = partition_function(&fd, &o, sigma, 2).unwrap().z.unwrap();
        assert!((z2 - 96.0).abs() < 1e-9);
        let z4 = partition_function(&fd, &o, sigma, 4).unwrap().z.unwrap();
        assert!((z4 - 6_848_512.0).abs() < 1e-4 * 6_848_512.0 * 1e-6);
    }

    #[test]
    fn lobachevsky_pinned_values() {
        assert!(lobachevsky(0.0).unwrap().abs() < 1e-15);
        assert!(lobachevsky(PI / 2.0).unwrap().abs() < 1e-12);
        assert!(lobachevsky(PI).unwrap().abs() < 1e-12);
        let k = catalan();
        assert!((k - CATALAN_REF).abs() < 1e-15);
        assert!((lobachevsky(PI / 4.0).unwrap() - k / 2.0).abs() < 1e-10);
        assert!(lobachevsky(-0.1).is_err());
        assert!(lobachevsky(PI + 0.1).is_err());
    }

    #[test]
    fn lobachevsky_agrees_with_series_oracle() {
        for i in 1..40 {
            let x = PI * i as f64 / 40.0;
            let a = lobachevsky(x).unwrap();
            let b = lobachevsky_series(x).unwrap();
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn closed_form_frozen_values() {
        let c_sq = growth_rate_closed_form(&square_domain()).unwrap();
        let k = catalan();
        assert!((c_sq - (0.5 * 2.0f64.ln() + 2.0 * k / PI)).abs() < 1e-12);
        assert!((c_sq - 0.929_695_398_341_610_2).abs() < 1e-12);
        let c_hex = growth_rate_closed_form(&honeycomb_domain()).unwrap();
        assert!((c_hex - 0.872_372_091_553_505_4).abs() < 1e-12);
        let c_rect = growth_rate_closed_form(&rect_domain(PI / 6.0).unwrap()).unwrap();
        assert!((c_rect - 0.904_647_341_6).abs() < 1e-9);
        let half_angle = rect_domain_mode(PI / 2.0, DomainMode::Degenerate).unwrap();
        let c_deg = growth_rate_closed_form(&half_angle).unwrap();
        assert!((c_deg - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn spectral_estimator_tracks_closed_form() {
        for fd in [square_domain(), honeycomb_domain()] {
            let (o, _) = oriented_kasteleyn(&fd).unwrap();
            let closed = growth_rate_closed_form(&fd).unwrap();
            let est = growth_rate_spectral(&fd, &o, 64).unwrap();
            assert!((est.value - closed).abs() <= 1e-3);
            assert!(!est.warning);
        }
    }

    #[test]
    fn spectral_single_point_grid() {
        let fd = square_domain();
        let (o, _) = oriented_kasteleyn(&fd).unwrap();
        let est = growth_rate_spectral(&fd, &o, 1).unwrap();
        assert!((est.value - (2.0 * 2.0f64.sqrt()).ln()).abs() < 1e-12);
        assert_eq!(est.refined, 0);
    }

    #[test]
    fn finite_size_estimates_approach_closed_form() {
        let fd = square_domain();
        let closed = growth_rate_closed_form(&fd).unwrap();
        let (o, sigma) = oriented_kasteleyn(&fd).unwrap();
        let d8 = (growth_rate_finite_with(&fd, &o, sigma, 8).unwrap() - closed).abs();
        let d16 = (growth_rate_finite_with(&fd, &o, sigma, 16).unwrap() - closed).abs();
        assert!(d8 < 2e-2, "n=8 deviation {d8}");
        assert!(d16 <= 1e-2, "n=16 deviation {d16}");
        assert!(d16 < d8);

        let hex = honeycomb_domain();
        let closed_hex = growth_rate_closed_form(&hex).unwrap();
        let (oh, sh) = oriented_kasteleyn(&hex).unwrap();
        let d16h = (growth_rate_finite_with(&hex, &oh, sh, 16).unwrap() - closed_hex).abs();
        assert!(d16h <= 1e-2, "honeycomb n=16 deviation {d16h}");
    }

    #[test]
    fn degenerate_partition_closed_product() {
        let fd = rect_domain_mode(PI / 2.0, DomainMode::Degenerate).unwrap();
        let (o, sigma) = derive_orientation_unchecked(&fd).unwrap();
        for n in [1usize, 2, 4] {
            let nf = n as f64;
            let expect = (nf * nf + nf) * 2.0f64.ln();
            let got = partition_function(&fd, &o, sigma, n).unwrap().log_z;
            assert!(
                (got - expect).abs() <= 1e-12 * expect.abs(),
                "n={n}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn derivative_identity_small_sizes() {
        for fd in [square_domain(), honeycomb_domain()] {
            let (o, _) = oriented_kasteleyn(&fd).unwrap();
            let rep = dlogdet_identity_check(&fd, &o, 2, 0, 1e-6).unwrap();
            assert!(rep.residual <= 1e-5, "residual {}", rep.residual);
        }
    }

    #[test]
    fn derivative_identity_is_second_order_in_step() {
        let fd = square_domain();
        let (o, _) = oriented_kasteleyn(&fd).unwrap();
        let coarse = dlogdet_identity_check(&fd, &o, 2, 0, 1e-2).unwrap().residual;
        let fine = dlogdet_identity_check(&fd, &o, 2, 0, 1e-3).unwrap().residual;
        let ratio = coarse / fine;
        assert!((20.0..500.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn shifted_edge_rejected_for_derivatives() {
        let fd = square_domain();
        let (o, sigma) = oriented_kasteleyn(&fd).unwrap();
        assert!(dlogdet_identity_check(&fd, &o, 2, 1, 1e-6).is_err());
        assert!(dlogz_dtheta(&fd, &o, sigma, 2, 1).is_err());
    }

    #[test]
    fn determinant_weights_are_bounded_and_sum_to_one() {
        for fd in [square_domain(), honeycomb_domain()] {
            let (o, sigma) = oriented_kasteleyn(&fd).unwrap();
            for n in 1usize..=8 {
                let w = det_weights(&fd, &o, sigma, n).unwrap();
                let sum: f64 = w.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9, "n={n} sum {sum}");
                for v in w {
                    assert!(v.abs() <= 0.5 + 1e-12, "n={n} weight {v}");
                }
            }
        }
    }

    #[test]
    fn one_cell_honeycomb_weight_saturates_the_half_bound() {
        // The all-aligned signed sum equals Z on the one-cell honeycomb,
        // so its weight sits exactly on the boundary of the half interval;
        // every other size tested stays strictly inside.
        let fd = honeycomb_domain();
        let (o, sigma) = oriented_kasteleyn(&fd).unwrap();
        let w1 = det_weights(&fd, &o, sigma, 1).unwrap();
        let max1 = w1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((max1 - 0.5).abs() < 1e-12);
        for n in 2usize..=8 {
            let w = det_weights(&fd, &o, sigma, n).unwrap();
            for v in w {
                assert!(v.abs() < 0.5 - 1e-6, "n={n} weight {v}");
            }
        }
    }

    #[test]
    fn log_z_derivative_approaches_cotangent_limit() {
        let fd = square_domain();
        let (o, sigma) = oriented_kasteleyn(&fd).unwrap();
        let theta = fd.edges[0].theta;
        let limit = theta / PI / theta.tan();
        let got = dlogz_dtheta(&fd, &o, sigma, 16, 0).unwrap();
        assert!((got - limit).abs() < 5e-2, "{got} vs {limit}");
    }

    #[test]
    fn report_serialization_is_deterministic() {
        let fd = square_domain();
        let a = growth_report(&fd, &[2, 4], 8).unwrap();
        let b = growth_report(&fd, &[2, 4], 8).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.to_csv().starts_with("n,finite_n,spectral,closed_form,diff\n"));
        assert!(a.to_json().contains("\"closed_form\""));
    }
}
