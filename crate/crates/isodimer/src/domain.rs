//! Fundamental domains: periodic bipartite isoradial graphs on a torus cell.
//!
//! All lengths are in units of the common circumradius (= 1). Each edge
//! carries its rhombus half-angle theta; the critical weight is
//! nu = 2 sin(theta), the straight edge (chord) has length 2 cos(theta),
//! and the dual edge has length 2 sin(theta).

use crate::map::CombinatorialMap;
use crate::{Error, Result};
use serde::Deserialize;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        PlanarPoint { x, y }
    }

    pub fn add(self, o: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> PlanarPoint {
        PlanarPoint::new(self.x * s, self.y * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn cross(self, o: PlanarPoint) -> f64 {
        self.x * o.y - self.y * o.x
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LatticeBasis {
    pub lambda1: PlanarPoint,
    pub lambda2: PlanarPoint,
}

impl LatticeBasis {
    /// Planar displacement of the lattice vector a1*lambda1 + a2*lambda2.
    pub fn displacement(&self, a1: i64, a2: i64) -> PlanarPoint {
        self.lambda1.scale(a1 as f64).add(self.lambda2.scale(a2 as f64))
    }

    /// Coordinates of a point in the (lambda1, lambda2) basis.
    pub fn lattice_coords(&self, p: PlanarPoint) -> (f64, f64) {
        let det = self.lambda1.cross(self.lambda2);
        let u = p.cross(self.lambda2) / det;
        let v = self.lambda1.cross(p) / det;
        (u, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    White,
    Black,
}

#[derive(Debug, Clone)]
pub struct VertexSpec {
    pub id: usize,
    pub color: Color,
    pub pos: PlanarPoint,
}

#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub id: usize,
    /// White endpoint, in the reference cell.
    pub w: usize,
    /// Black endpoint, in the cell shifted by `shift`.
    pub b: usize,
    pub shift: (i64, i64),
    /// Rhombus half-angle in radians.
    pub theta: f64,
}

impl EdgeSpec {
    pub fn weight(&self) -> f64 {
        critical_weight_unchecked(self.theta)
    }
}

/// Validation strictness. `Degenerate` admits theta in {0, pi/2} and skips
/// the metric (embedding-geometry) checks, which collapse in that limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainMode {
    Strict,
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct FundamentalDomain {
    pub basis: LatticeBasis,
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
    pub mode: DomainMode,
}

/// The critical isoradial weight 2 sin(theta).
pub fn critical_weight(theta: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!(
            "rhombus angle {theta} outside [0, pi/2]"
        )));
    }
    Ok(critical_weight_unchecked(theta))
}

fn critical_weight_unchecked(theta: f64) -> f64 {
    2.0 * theta.sin()
}

impl FundamentalDomain {
    pub fn white_ids(&self) -> Vec<usize> {
        self.vertices
            .iter()
            .filter(|v| v.color == Color::White)
            .map(|v| v.id)
            .collect()
    }

    pub fn black_ids(&self) -> Vec<usize> {
        self.vertices
            .iter()
            .filter(|v| v.color == Color::Black)
            .map(|v| v.id)
            .collect()
    }

    /// Rank of a vertex among those of its own color, in id order.
    pub fn color_rank(&self, id: usize) -> usize {
        let color = self.vertices[id].color;
        self.vertices[..id]
            .iter()
            .filter(|v| v.color == color)
            .count()
    }

    /// Position of a vertex instance lifted to the plane.
    pub fn lifted_pos(&self, id: usize, cell: (i64, i64)) -> PlanarPoint {
        self.vertices[id].pos.add(self.basis.displacement(cell.0, cell.1))
    }

    /// Planar vector from the white end to the black end of an edge.
    pub fn edge_vector(&self, e: &EdgeSpec) -> PlanarPoint {
        self.lifted_pos(e.b, e.shift).sub(self.vertices[e.w].pos)
    }

    pub fn degree(&self, id: usize) -> usize {
        self.edges.iter().filter(|e| e.w == id || e.b == id).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub severity: Severity,
    pub location: String,
    pub message: String,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub entries: Vec<Violation>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.entries.iter().filter(|v| v.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Violation> {
        self.entries.iter().filter(|v| v.severity == Severity::Warning)
    }

    pub fn is_clean(&self) -> bool {
        self.errors().count() == 0
    }

    fn error(&mut self, location: &str, message: String, residual: Option<f64>) {
        self.entries.push(Violation {
            severity: Severity::Error,
            location: location.to_string(),
            message,
            residual,
        });
    }

    fn warning(&mut self, location: &str, message: String, residual: Option<f64>) {
        self.entries.push(Violation {
            severity: Severity::Warning,
            location: location.to_string(),
            message,
            residual,
        });
    }
}

/// Check every structural and geometric invariant of a fundamental domain.
///
/// Returns a report that is clean (no error-severity entries) exactly when
/// the domain is usable downstream. Checked, in order: id density and edge
/// endpoint colors, white/black balance, positive basis orientation,
/// minimum degree 3, rhombus angle range, vertex angle sums (2 theta
/// around each vertex totals 2 pi), face angle sums (pi - 2 theta around
/// each face totals 2 pi), face contractibility, and in strict mode the
/// metric consistency of positions against angles: chord length
/// 2 cos(theta), shared circumcenters per face, dual edge length
/// 2 sin(theta). Circumcenter containment in the face closure is reported
/// at warning severity.
pub fn validate_domain(fd: &FundamentalDomain, tol: f64) -> ValidationReport {
    let mut rep = ValidationReport::default();

    // Structure: ids dense and endpoint colors correct.
    for (i, v) in fd.vertices.iter().enumerate() {
        if v.id != i {
            rep.error(
                &format!("vertex {i}"),
                format!("ids must be dense 0..{}, found {}", fd.vertices.len(), v.id),
                None,
            );
            return rep;
        }
        if !v.pos.x.is_finite() || !v.pos.y.is_finite() {
            rep.error(&format!("vertex {i}"), "non-finite position".to_string(), None);
            return rep;
        }
    }
    for (i, e) in fd.edges.iter().enumerate() {
        if e.id != i {
            rep.error(
                &format!("edge {i}"),
                format!("ids must be dense 0..{}, found {}", fd.edges.len(), e.id),
                None,
            );
            return rep;
        }
        if e.w >= fd.vertices.len() || e.b >= fd.vertices.len() {
            rep.error(&format!("edge {i}"), "endpoint id out of range".to_string(), None);
            return rep;
        }
        if fd.vertices[e.w].color != Color::White || fd.vertices[e.b].color != Color::Black {
            rep.error(
                &format!("edge {i}"),
                "endpoints must be (white, black)".to_string(),
                None,
            );
        }
    }
    let mut triples: Vec<(usize, usize, (i64, i64))> =
        fd.edges.iter().map(|e| (e.w, e.b, e.shift)).collect();
    triples.sort();
    for pair in triples.windows(2) {
        if pair[0] == pair[1] {
            rep.error(
                "edges",
                format!("duplicate (white, black, shift) triple {:?}", pair[0]),
                None,
            );
        }
    }

    let whites = fd.white_ids();
    let blacks = fd.black_ids();
    if whites.len() != blacks.len() {
        rep.error(
            "vertices",
            format!("white/black counts differ: {} vs {}", whites.len(), blacks.len()),
            None,
        );
    }

    if fd.basis.lambda1.cross(fd.basis.lambda2) <= 0.0 {
        rep.error(
            "basis",
            "lattice basis must be positively oriented and nondegenerate".to_string(),
            None,
        );
        return rep;
    }

    // Position canonicalisation: lattice coordinates outside [0,1) are
    // harmless (every check below is translation invariant) but worth a
    // warning because two domains differing by a lattice translation are
    // the same object.
    for v in &fd.vertices {
        let (u, w) = fd.basis.lattice_coords(v.pos);
        if !(0.0..1.0).contains(&u) || !(0.0..1.0).contains(&w) {
            rep.warning(
                &format!("vertex {}", v.id),
                format!("position outside the canonical cell: lattice coords ({u:.6}, {w:.6})"),
                None,
            );
        }
    }

    for v in &fd.vertices {
        let d = fd.degree(v.id);
        if d < 3 {
            rep.error(&format!("vertex {}", v.id), format!("degree {d} < 3"), None);
        }
    }

    let theta_ok = |t: f64| match fd.mode {
        DomainMode::Strict => t > tol && t < std::f64::consts::FRAC_PI_2 - tol,
        DomainMode::Degenerate => (-tol..=std::f64::consts::FRAC_PI_2 + tol).contains(&t),
    };
    for e in &fd.edges {
        if !theta_ok(e.theta) {
            rep.error(
                &format!("edge {}", e.id),
                format!("rhombus angle {} outside the admissible range", e.theta),
                Some(e.theta),
            );
        }
    }
    if !rep.is_clean() {
        return rep;
    }

    // Vertex angle sums: the rhombi around a vertex tile a disc.
    for v in &fd.vertices {
        let sum: f64 = fd
            .edges
            .iter()
            .filter(|e| e.w == v.id || e.b == v.id)
            .map(|e| 2.0 * e.theta)
            .sum();
        let residual = (sum - 2.0 * std::f64::consts::PI).abs();
        if residual > tol {
            rep.error(
                &format!("vertex {}", v.id),
                format!("angle sum {sum} != 2 pi"),
                Some(residual),
            );
        }
    }

    // Face checks need the rotation system.
    let cmap = match CombinatorialMap::build(fd) {
        Ok(m) => m,
        Err(e) => {
            rep.error("embedding", format!("cannot build rotation system: {e}"), None);
            return rep;
        }
    };
    for fi in 0..cmap.face_count() {
        let winding = cmap.windings[fi];
        if winding != (0, 0) {
            rep.error(
                &format!("face {fi}"),
                format!("face walk wraps the torus with winding {winding:?}"),
                None,
            );
            continue;
        }
        let sum: f64 = cmap
            .face_darts(fi)
            .map(|d| std::f64::consts::PI - 2.0 * fd.edges[cmap.darts[d].edge].theta)
            .sum();
        let residual = (sum - 2.0 * std::f64::consts::PI).abs();
        if residual > tol {
            rep.error(
                &format!("face {fi}"),
                format!("face angle sum {sum} != 2 pi"),
                Some(residual),
            );
        }
    }

    if fd.mode == DomainMode::Degenerate || !rep.is_clean() {
        return rep;
    }

    // Metric consistency: chord lengths.
    for e in &fd.edges {
        let chord = fd.edge_vector(e).norm();
        let expect = 2.0 * e.theta.cos();
        let residual = (chord - expect).abs();
        if residual > tol {
            rep.error(
                &format!("edge {}", e.id),
                format!("chord length {chord} != 2 cos(theta) = {expect}"),
                Some(residual),
            );
        }
    }

    // Shared circumcenters: every dart of a face proposes the center as
    // edge midpoint + sin(theta) * (unit left normal); all proposals must
    // agree, and then dual edges automatically connect the two centers
    // adjacent to each edge. The dual length check is still done
    // explicitly against 2 sin(theta).
    let mut centers: Vec<Option<PlanarPoint>> = vec![None; cmap.face_count()];
    for fi in 0..cmap.face_count() {
        let props = cmap.face_center_proposals(fd, fi);
        for c in &props[1..] {
            let residual = props[0].sub(*c).norm();
            if residual > tol {
                rep.error(
                    &format!("face {fi}"),
                    "circumcenter proposals from the face darts disagree".to_string(),
                    Some(residual),
                );
            }
        }
        centers[fi] = props.first().copied();
    }
    if rep.is_clean() {
        for e in &fd.edges {
            let (fl, fr, offset) = cmap.faces_of_edge(fd, e.id);
            let cl = centers[fl].expect("face has a dart");
            let cr = centers[fr].expect("face has a dart").add(offset);
            let dual = cl.sub(cr).norm();
            let expect = 2.0 * e.theta.sin();
            let residual = (dual - expect).abs();
            if residual > tol {
                rep.error(
                    &format!("edge {}", e.id),
                    format!("dual edge length {dual} != 2 sin(theta) = {expect}"),
                    Some(residual),
                );
            }
        }
        for fi in 0..cmap.face_count() {
            let c = centers[fi].expect("face has a dart");
            if !cmap.point_in_face_closure(fd, fi, c, tol) {
                rep.warning(
                    &format!("face {fi}"),
                    "circumcenter lies outside the face closure".to_string(),
                    None,
                );
            }
        }
    }

    rep
}

// ---------------------------------------------------------------------------
// Builtin domains.
// ---------------------------------------------------------------------------

/// Rectangular isoradial family: horizontal edges at angle theta, vertical
/// edges at pi/2 - theta, on a two-vertex cell. theta = pi/4 is the square
/// lattice with uniform weight sqrt(2).
pub fn rect_domain(theta: f64) -> Result<FundamentalDomain> {
    rect_domain_mode(theta, DomainMode::Strict)
}

pub fn rect_domain_mode(theta: f64, mode: DomainMode) -> Result<FundamentalDomain> {
    let eps = 1e-12;
    let range_ok = match mode {
        DomainMode::Strict => theta > eps && theta < std::f64::consts::FRAC_PI_2 - eps,
        DomainMode::Degenerate => (0.0..=std::f64::consts::FRAC_PI_2).contains(&theta),
    };
    if !range_ok {
        return Err(Error::Domain(format!(
            "rectangular family angle {theta} outside the admissible range"
        )));
    }
    // In the degenerate limit the rhombi collapse and the embedding has no
    // metric content; the combinatorial structure is that of the square
    // lattice, so positions are taken from the theta = pi/4 member.
    let geo = match mode {
        DomainMode::Strict => theta,
        DomainMode::Degenerate => std::f64::consts::FRAC_PI_4,
    };
    let w = 2.0 * geo.cos();
    let h = 2.0 * geo.sin();
    let tv = std::f64::consts::FRAC_PI_2 - theta;
    Ok(FundamentalDomain {
        basis: LatticeBasis {
            lambda1: PlanarPoint::new(2.0 * w, 0.0),
            lambda2: PlanarPoint::new(w, h),
        },
        vertices: vec![
            VertexSpec { id: 0, color: Color::White, pos: PlanarPoint::new(0.0, 0.0) },
            VertexSpec { id: 1, color: Color::Black, pos: PlanarPoint::new(w, 0.0) },
        ],
        edges: vec![
            EdgeSpec { id: 0, w: 0, b: 1, shift: (0, 0), theta },
            EdgeSpec { id: 1, w: 0, b: 1, shift: (-1, 1), theta: tv },
            EdgeSpec { id: 2, w: 0, b: 1, shift: (-1, 0), theta },
            EdgeSpec { id: 3, w: 0, b: 1, shift: (0, -1), theta: tv },
        ],
        mode,
    })
}

/// The square lattice: rect_domain(pi/4).
pub fn square_domain() -> FundamentalDomain {
    rect_domain(std::f64::consts::FRAC_PI_4).expect("pi/4 is in range")
}

/// The honeycomb lattice: two vertices, three edges, all angles pi/3.
pub fn honeycomb_domain() -> FundamentalDomain {
    let s3 = 3f64.sqrt();
    let theta = std::f64::consts::FRAC_PI_3;
    FundamentalDomain {
        basis: LatticeBasis {
            lambda1: PlanarPoint::new(1.5, -s3 / 2.0),
            lambda2: PlanarPoint::new(1.5, s3 / 2.0),
        },
        vertices: vec![
            VertexSpec { id: 0, color: Color::White, pos: PlanarPoint::new(0.0, 0.0) },
            VertexSpec { id: 1, color: Color::Black, pos: PlanarPoint::new(1.0, 0.0) },
        ],
        edges: vec![
            EdgeSpec { id: 0, w: 0, b: 1, shift: (0, 0), theta },
            EdgeSpec { id: 1, w: 0, b: 1, shift: (-1, 0), theta },
            EdgeSpec { id: 2, w: 0, b: 1, shift: (0, -1), theta },
        ],
        mode: DomainMode::Strict,
    }
}

// ---------------------------------------------------------------------------
// JSON input.
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDomain {
    basis: JsonBasis,
    vertices: Vec<JsonVertex>,
    edges: Vec<JsonEdge>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonBasis {
    lambda1: [f64; 2],
    lambda2: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonVertex {
    id: usize,
    color: String,
    pos: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonEdge {
    id: usize,
    w: usize,
    b: usize,
    shift: [i64; 2],
    theta: f64,
}

/// Parse a domain from its JSON description. Angles are radians. Unknown
/// fields are rejected.
pub fn domain_from_json(text: &str, mode: DomainMode) -> Result<FundamentalDomain> {
    let raw: JsonDomain =
        serde_json::from_str(text).map_err(|e| Error::Structural(format!("bad domain JSON: {e}")))?;
    let vertices = raw
        .vertices
        .into_iter()
        .map(|v| {
            let color = match v.color.as_str() {
                "W" => Ok(Color::White),
                "B" => Ok(Color::Black),
                other => Err(Error::Structural(format!(
                    "vertex {}: color must be \"W\" or \"B\", found {other:?}",
                    v.id
                ))),
            }?;
            Ok(VertexSpec { id: v.id, color, pos: PlanarPoint::new(v.pos[0], v.pos[1]) })
        })
        .collect::<Result<Vec<_>>>()?;
    let edges = raw
        .edges
        .into_iter()
        .map(|e| EdgeSpec {
            id: e.id,
            w: e.w,
            b: e.b,
            shift: (e.shift[0], e.shift[1]),
            theta: e.theta,
        })
        .collect();
    Ok(FundamentalDomain {
        basis: LatticeBasis {
            lambda1: PlanarPoint::new(raw.basis.lambda1[0], raw.basis.lambda1[1]),
            lambda2: PlanarPoint::new(raw.basis.lambda2[0], raw.basis.lambda2[1]),
        },
        vertices,
        edges,
        mode,
    })
}
