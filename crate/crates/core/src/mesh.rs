//! Conforming tetrahedral meshes with globally oriented edges and
//! boundary classification.
//!
//! Global edge orientation runs from the lower to the higher vertex index,
//! which makes assembly signs independent of element order. Generators for
//! the box, cylinder and torus validation geometries are included, plus a
//! reader for ASCII Gmsh MSH files (versions 2.2 and 4.1).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    /// Position in meters.
    pub pos: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tetrahedron {
    /// Vertex indices, ordered for positive signed volume.
    pub vertices: [u32; 4],
    /// Material region tag.
    pub region: i32,
}

/// Mesh edge, endpoints stored `(low, high)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub endpoints: [u32; 2],
}

/// Local edge numbering of a tetrahedron.
pub const LOCAL_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vertex>,
    pub tets: Vec<Tetrahedron>,
    pub edges: Vec<Edge>,
    /// Per tet: the global edge id and orientation sign for each of the six
    /// local edges. The sign is +1 exactly when the local direction runs
    /// from the lower to the higher global vertex id.
    pub tet_edges: Vec<[(u32, i8); 6]>,
    /// Boundary faces as sorted vertex triples.
    pub boundary_faces: Vec<[u32; 3]>,
    pub boundary_edge_flags: Vec<bool>,
    pub boundary_vertex_flags: Vec<bool>,
    /// Total number of distinct triangular faces.
    pub n_faces: usize,
    /// Length of the longest edge, in meters.
    pub h: f64,
}

#[derive(Debug, Clone)]
pub enum MeshError {
    InvalidParameter(String),
    DegenerateTet { tet: usize, volume: f64 },
    BadVertexIndex { tet: usize, index: u32 },
    DuplicateVertexInTet { tet: usize },
    NonManifold { face: [u32; 3], count: usize },
    Gmsh { line: usize, message: String },
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            MeshError::DegenerateTet { tet, volume } => {
                write!(f, "tet {tet} is degenerate (volume {volume:.3e})")
            }
            MeshError::BadVertexIndex { tet, index } => {
                write!(f, "tet {tet} references missing vertex {index}")
            }
            MeshError::DuplicateVertexInTet { tet } => {
                write!(f, "tet {tet} repeats a vertex")
            }
            MeshError::NonManifold { face, count } => write!(
                f,
                "face ({}, {}, {}) is shared by {count} tets",
                face[0], face[1], face[2]
            ),
            MeshError::Gmsh { line, message } => write!(f, "gmsh parse error, line {line}: {message}"),
        }
    }
}

impl core::error::Error for MeshError {}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = sub3(a, b);
    dot3(d, d).sqrt()
}

/// Signed volume of the tet spanned by four points.
pub fn signed_volume(p: &[[f64; 3]; 4]) -> f64 {
    let a = sub3(p[1], p[0]);
    let b = sub3(p[2], p[0]);
    let c = sub3(p[3], p[0]);
    dot3(a, cross3(b, c)) / 6.0
}

impl Mesh {
    /// Builds a mesh from raw cells: canonicalizes orientation, derives
    /// edges, incidence and boundary sets, and computes `h`.
    pub fn from_cells(vertices: Vec<Vertex>, tets: Vec<Tetrahedron>) -> Result<Mesh, MeshError> {
        let nv = vertices.len() as u32;
        let mut tets = tets;
        // validate and orient
        let mut longest = 0.0f64;
        for (ti, tet) in tets.iter_mut().enumerate() {
            for &v in &tet.vertices {
                if v >= nv {
                    return Err(MeshError::BadVertexIndex { tet: ti, index: v });
                }
            }
            let v = tet.vertices;
            if v[0] == v[1]
                || v[0] == v[2]
                || v[0] == v[3]
                || v[1] == v[2]
                || v[1] == v[3]
                || v[2] == v[3]
            {
                return Err(MeshError::DuplicateVertexInTet { tet: ti });
            }
            let coords = [
                vertices[v[0] as usize].pos,
                vertices[v[1] as usize].pos,
                vertices[v[2] as usize].pos,
                vertices[v[3] as usize].pos,
            ];
            let mut vol = signed_volume(&coords);
            if vol < 0.0 {
                tet.vertices.swap(2, 3);
                vol = -vol;
            }
            let mut edge_max = 0.0f64;
            for (a, b) in LOCAL_EDGES {
                edge_max = edge_max.max(dist3(coords[a], coords[b]));
            }
            longest = longest.max(edge_max);
            if vol <= 1e-14 * edge_max * edge_max * edge_max {
                return Err(MeshError::DegenerateTet { tet: ti, volume: vol });
            }
        }

        // edges, deduplicated in sorted order so ids are mesh-order independent
        let mut edge_ids: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for tet in &tets {
            for (a, b) in LOCAL_EDGES {
                let (ga, gb) = (tet.vertices[a], tet.vertices[b]);
                let key = if ga < gb { (ga, gb) } else { (gb, ga) };
                edge_ids.entry(key).or_insert(0);
            }
        }
        let mut edges = Vec::with_capacity(edge_ids.len());
        for (i, (key, id)) in edge_ids.iter_mut().enumerate() {
            *id = i as u32;
            edges.push(Edge {
                endpoints: [key.0, key.1],
            });
        }
        let mut tet_edges = Vec::with_capacity(tets.len());
        for tet in &tets {
            let mut entry = [(0u32, 0i8); 6];
            for (k, (a, b)) in LOCAL_EDGES.iter().enumerate() {
                let (ga, gb) = (tet.vertices[*a], tet.vertices[*b]);
                let (key, sign) = if ga < gb {
                    ((ga, gb), 1i8)
                } else {
                    ((gb, ga), -1i8)
                };
                entry[k] = (edge_ids[&key], sign);
            }
            tet_edges.push(entry);
        }

        // face census
        let mut faces: BTreeMap<[u32; 3], usize> = BTreeMap::new();
        for tet in &tets {
            let v = tet.vertices;
            for f in [[v[0], v[1], v[2]], [v[0], v[1], v[3]], [v[0], v[2], v[3]], [v[1], v[2], v[3]]]
            {
                let mut f = f;
                f.sort_unstable();
                *faces.entry(f).or_insert(0) += 1;
            }
        }
        let n_faces = faces.len();
        let mut boundary_faces = Vec::new();
        for (face, count) in &faces {
            match count {
                1 => boundary_faces.push(*face),
                2 => {}
                _ => {
                    return Err(MeshError::NonManifold {
                        face: *face,
                        count: *count,
                    })
                }
            }
        }
        let mut boundary_vertex_flags = vec![false; vertices.len()];
        let mut boundary_edge_keys: BTreeMap<(u32, u32), ()> = BTreeMap::new();
        for face in &boundary_faces {
            for &v in face {
                boundary_vertex_flags[v as usize] = true;
            }
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                boundary_edge_keys.insert((face[a], face[b]), ());
            }
        }
        let mut boundary_edge_flags = vec![false; edges.len()];
        for (key, _) in boundary_edge_keys {
            if let Some(&id) = edge_ids.get(&key) {
                boundary_edge_flags[id as usize] = true;
            }
        }

        let mut h = 0.0f64;
        for e in &edges {
            h = h.max(dist3(
                vertices[e.endpoints[0] as usize].pos,
                vertices[e.endpoints[1] as usize].pos,
            ));
        }

        Ok(Mesh {
            vertices,
            tets,
            edges,
            tet_edges,
            boundary_faces,
            boundary_edge_flags,
            boundary_vertex_flags,
            n_faces,
            h,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// `V - E + F - T`; 1 for solid balls, 0 for the solid torus.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.n_faces as i64
            - self.tets.len() as i64
    }

    pub fn tet_coords(&self, t: usize) -> [[f64; 3]; 4] {
        let v = self.tets[t].vertices;
        [
            self.vertices[v[0] as usize].pos,
            self.vertices[v[1] as usize].pos,
            self.vertices[v[2] as usize].pos,
            self.vertices[v[3] as usize].pos,
        ]
    }

    /// Sum of tetrahedron volumes.
    pub fn volume(&self) -> f64 {
        (0..self.tets.len())
            .map(|t| signed_volume(&self.tet_coords(t)))
            .sum()
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.boundary_edge_flags.iter().filter(|&&b| b).count()
    }

    pub fn n_boundary_vertices(&self) -> usize {
        self.boundary_vertex_flags.iter().filter(|&&b| b).count()
    }

    /// Euler characteristic of the boundary surface (2 for a sphere, 0 for
    /// a torus surface).
    pub fn boundary_surface_euler(&self) -> i64 {
        let vb = self.n_boundary_vertices() as i64;
        let eb = self.n_boundary_edges() as i64;
        let fb = self.boundary_faces.len() as i64;
        vb - eb + fb
    }

    /// Structured text dump for debugging.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# mesh dump");
        let _ = writeln!(
            s,
            "counts vertices={} edges={} faces={} tets={}",
            self.n_vertices(),
            self.n_edges(),
            self.n_faces,
            self.n_tets()
        );
        let _ = writeln!(
            s,
            "h={:.17e} euler={} boundary_faces={}",
            self.h,
            self.euler_characteristic(),
            self.boundary_faces.len()
        );
        for v in &self.vertices {
            let _ = writeln!(s, "v {:.17e} {:.17e} {:.17e}", v.pos[0], v.pos[1], v.pos[2]);
        }
        for t in &self.tets {
            let _ = writeln!(
                s,
                "t {} {} {} {} region {}",
                t.vertices[0], t.vertices[1], t.vertices[2], t.vertices[3], t.region
            );
        }
        for e in &self.edges {
            let _ = writeln!(s, "e {} {}", e.endpoints[0], e.endpoints[1]);
        }
        s
    }
}

/// Recomputes boundary classification (and all derived structure) from the
/// mesh cells. Fails on non-manifold input.
pub fn classify_boundary(mesh: Mesh) -> Result<Mesh, MeshError> {
    Mesh::from_cells(mesh.vertices, mesh.tets)
}

/// Structured box mesh: each grid cell is split into six tetrahedra that
/// share the cell's main diagonal, giving a conforming triangulation.
pub fn generate_box_mesh(
    a: f64,
    b: f64,
    c: f64,
    nx: usize,
    ny: usize,
    nz: usize,
) -> Result<Mesh, MeshError> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(MeshError::InvalidParameter(format!(
            "box dimensions must be positive, got {a} x {b} x {c}"
        )));
    }
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(MeshError::InvalidParameter(
            "cell counts must be at least 1".into(),
        ));
    }
    let vid = |i: usize, j: usize, k: usize| ((k * (ny + 1) + j) * (nx + 1) + i) as u32;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Vertex {
                    pos: [
                        a * i as f64 / nx as f64,
                        b * j as f64 / ny as f64,
                        c * k as f64 / nz as f64,
                    ],
                });
            }
        }
    }
    // six tets per cell, one per permutation of the axis steps
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for perm in PERMS {
                    let mut p = [i, j, k];
                    let mut quad = [vid(p[0], p[1], p[2]), 0, 0, 0];
                    for (step, &axis) in perm.iter().enumerate() {
                        p[axis] += 1;
                        quad[step + 1] = vid(p[0], p[1], p[2]);
                    }
                    tets.push(Tetrahedron {
                        vertices: quad,
                        region: 0,
                    });
                }
            }
        }
    }
    Mesh::from_cells(vertices, tets)
}

/// Triangulated unit-parameter disc: ring `k` of `n_rings` holds
/// `k * n_az` vertices at radius `k/n_rings`. Returns 2-D points and
/// counterclockwise triangles.
fn disc_triangulation(n_az: usize, n_rings: usize) -> (Vec<[f64; 2]>, Vec<[u32; 3]>) {
    let mut pts = vec![[0.0f64, 0.0f64]];
    let ring_offset = |k: usize| 1 + n_az * (k * (k - 1) / 2);
    for k in 1..=n_rings {
        let count = k * n_az;
        let r = k as f64 / n_rings as f64;
        for m in 0..count {
            let th = core::f64::consts::TAU * m as f64 / count as f64;
            pts.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut tris: Vec<[u32; 3]> = Vec::new();
    for s in 0..n_az {
        // innermost fan
        let o = |t: usize| (ring_offset(1) + (s + t) % n_az) as u32;
        tris.push([0, o(0), o(1)]);
    }
    for k in 2..=n_rings {
        let outer = |s: usize, t: usize| (ring_offset(k) + (s * k + t) % (k * n_az)) as u32;
        let inner =
            |s: usize, t: usize| (ring_offset(k - 1) + (s * (k - 1) + t) % ((k - 1) * n_az)) as u32;
        for s in 0..n_az {
            // triangle strip between the two rings of this sector
            for t in 0..k - 1 {
                tris.push([outer(s, t), outer(s, t + 1), inner(s, t)]);
                tris.push([inner(s, t), outer(s, t + 1), inner(s, t + 1)]);
            }
            tris.push([outer(s, k - 1), outer(s, k), inner(s, k - 1)]);
        }
    }
    (pts, tris)
}

/// Splits the prism with bottom and top triangles (corresponding columns)
/// into three tetrahedra. Every quad face takes the diagonal incident to
/// its lowest global vertex id, so adjacent prisms agree on shared faces.
fn split_prism(bottom: [u32; 3], top: [u32; 3]) -> [[u32; 4]; 3] {
    let (mut bot, mut tp) = (bottom, top);
    if tp.iter().min() < bot.iter().min() {
        core::mem::swap(&mut bot, &mut tp);
    }
    let p = (0..3).min_by_key(|&i| bot[i]).unwrap();
    let b = [bot[p], bot[(p + 1) % 3], bot[(p + 2) % 3]];
    let t = [tp[p], tp[(p + 1) % 3], tp[(p + 2) % 3]];
    let quad_min = b[1].min(b[2]).min(t[1]).min(t[2]);
    if quad_min == b[1] || quad_min == t[2] {
        [
            [b[0], b[1], b[2], t[2]],
            [b[0], b[1], t[2], t[1]],
            [b[0], t[1], t[2], t[0]],
        ]
    } else {
        [
            [b[0], b[1], b[2], t[1]],
            [b[0], b[2], t[2], t[1]],
            [b[0], t[1], t[2], t[0]],
        ]
    }
}

/// Cylinder of radius `r` and the given height along `z`, meshed by an
/// extruded disc triangulation with rim vertices snapped to the radius.
pub fn generate_cylinder_mesh(
    r: f64,
    height: f64,
    n_az: usize,
    n_rings: usize,
    n_layers: usize,
) -> Result<Mesh, MeshError> {
    if !(r > 0.0 && height > 0.0) {
        return Err(MeshError::InvalidParameter(format!(
            "cylinder radius/height must be positive, got r={r}, height={height}"
        )));
    }
    if n_az < 3 || n_rings == 0 || n_layers == 0 {
        return Err(MeshError::InvalidParameter(
            "cylinder needs n_az >= 3 and positive ring/layer counts".into(),
        ));
    }
    let (pts2, tris) = disc_triangulation(n_az, n_rings);
    let n_disc = pts2.len();
    let mut vertices = Vec::with_capacity(n_disc * (n_layers + 1));
    for l in 0..=n_layers {
        let z = height * l as f64 / n_layers as f64;
        for p in &pts2 {
            vertices.push(Vertex {
                pos: [r * p[0], r * p[1], z],
            });
        }
    }
    let mut tets = Vec::with_capacity(3 * tris.len() * n_layers);
    for l in 0..n_layers {
        let base = (l * n_disc) as u32;
        let upper = ((l + 1) * n_disc) as u32;
        for tri in &tris {
            let bottom = [base + tri[0], base + tri[1], base + tri[2]];
            let top = [upper + tri[0], upper + tri[1], upper + tri[2]];
            for tet in split_prism(bottom, top) {
                tets.push(Tetrahedron {
                    vertices: tet,
                    region: 0,
                });
            }
        }
    }
    Mesh::from_cells(vertices, tets)
}

/// Solid torus with major radius `rho1` and minor radius `rho2`, revolved
/// around the z-axis in `n_major` slabs; the prism split rule keeps the
/// closing seam conforming.
pub fn generate_torus_mesh(
    rho1: f64,
    rho2: f64,
    n_major: usize,
    n_minor_az: usize,
    n_minor_rings: usize,
) -> Result<Mesh, MeshError> {
    if !(rho1 > rho2 && rho2 > 0.0) {
        return Err(MeshError::InvalidParameter(format!(
            "torus needs rho1 > rho2 > 0, got rho1={rho1}, rho2={rho2}"
        )));
    }
    if n_major < 3 || n_minor_az < 3 || n_minor_rings == 0 {
        return Err(MeshError::InvalidParameter(
            "torus needs n_major >= 3, n_minor_az >= 3 and a positive ring count".into(),
        ));
    }
    let (pts2, tris) = disc_triangulation(n_minor_az, n_minor_rings);
    let n_disc = pts2.len();
    let mut vertices = Vec::with_capacity(n_disc * n_major);
    for s in 0..n_major {
        let phi = core::f64::consts::TAU * s as f64 / n_major as f64;
        let (sin_p, cos_p) = phi.sin_cos();
        for p in &pts2 {
            let rad = rho1 + rho2 * p[0];
            vertices.push(Vertex {
                pos: [rad * cos_p, rad * sin_p, rho2 * p[1]],
            });
        }
    }
    let mut tets = Vec::with_capacity(3 * tris.len() * n_major);
    for s in 0..n_major {
        let base = (s * n_disc) as u32;
        let upper = ((s + 1) % n_major * n_disc) as u32;
        for tri in &tris {
            let bottom = [base + tri[0], base + tri[1], base + tri[2]];
            let top = [upper + tri[0], upper + tri[1], upper + tri[2]];
            for tet in split_prism(bottom, top) {
                tets.push(Tetrahedron {
                    vertices: tet,
                    region: 0,
                });
            }
        }
    }
    Mesh::from_cells(vertices, tets)
}

// ---------------------------------------------------------------------------
// Gmsh MSH reader (ASCII, versions 2.2 and 4.1)
// ---------------------------------------------------------------------------

struct Lines<'a> {
    inner: core::str::Lines<'a>,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines(),
            lineno: 0,
        }
    }

    fn next_line(&mut self) -> Option<&'a str> {
        for line in self.inner.by_ref() {
            self.lineno += 1;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                return Some(trimmed);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str, MeshError> {
        self.next_line().ok_or_else(|| MeshError::Gmsh {
            line: self.lineno + 1,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn err(&self, message: String) -> MeshError {
        MeshError::Gmsh {
            line: self.lineno,
            message,
        }
    }
}

fn parse_fields<T: core::str::FromStr>(
    lines: &Lines,
    s: &str,
    count: usize,
    what: &str,
) -> Result<Vec<T>, MeshError> {
    let vals: Result<Vec<T>, _> = s.split_whitespace().take(count).map(str::parse).collect();
    match vals {
        Ok(v) if v.len() == count => Ok(v),
        _ => Err(lines.err(format!("expected {count} {what} in '{s}'"))),
    }
}

/// Gmsh element types that occupy volume but are not 4-node tetrahedra.
fn is_non_tet_volume_element(ty: i64) -> bool {
    matches!(ty, 5 | 6 | 7 | 11 | 12 | 13 | 14 | 17 | 18 | 19 | 29 | 30 | 31)
}

/// Parses an ASCII Gmsh MSH file (format 2.2 or 4.1) holding a tetrahedral
/// volume mesh. Physical region tags are preserved per tet.
pub fn read_gmsh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines::new(text);
    let first = lines.expect("$MeshFormat")?;
    if first != "$MeshFormat" {
        return Err(lines.err("file must start with $MeshFormat".into()));
    }
    let fmt = lines.expect("format line")?;
    let fields: Vec<&str> = fmt.split_whitespace().collect();
    if fields.len() < 3 {
        return Err(lines.err(format!("malformed format line '{fmt}'")));
    }
    if fields[1] != "0" {
        return Err(lines.err("binary MSH files are not supported".into()));
    }
    let version = fields[0];
    let end = lines.expect("$EndMeshFormat")?;
    if end != "$EndMeshFormat" {
        return Err(lines.err(format!("expected $EndMeshFormat, got '{end}'")));
    }
    match version {
        "2.2" => read_gmsh_v2(&mut lines),
        "4.1" => read_gmsh_v4(&mut lines),
        other => Err(lines.err(format!("unsupported MSH version {other} (need 2.2 or 4.1)"))),
    }
}

fn read_gmsh_v2(lines: &mut Lines) -> Result<Mesh, MeshError> {
    let mut node_map: BTreeMap<i64, u32> = BTreeMap::new();
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut tets: Vec<Tetrahedron> = Vec::new();
    let mut seen_nodes = false;
    let mut seen_elements = false;

    while let Some(section) = lines.next_line() {
        match section {
            "$Nodes" => {
                seen_nodes = true;
                let count_line = lines.expect("node count")?;
                let count: usize = count_line
                    .parse()
                    .map_err(|_| lines.err(format!("bad node count '{count_line}'")))?;
                for _ in 0..count {
                    let l = lines.expect("node line")?;
                    let mut it = l.split_whitespace();
                    let id: i64 = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| lines.err(format!("bad node id in '{l}'")))?;
                    let coords: Result<Vec<f64>, _> = it.take(3).map(str::parse).collect();
                    let coords =
                        coords.map_err(|_| lines.err(format!("bad node coordinates in '{l}'")))?;
                    if coords.len() != 3 {
                        return Err(lines.err(format!("node line '{l}' needs 3 coordinates")));
                    }
                    node_map.insert(id, vertices.len() as u32);
                    vertices.push(Vertex {
                        pos: [coords[0], coords[1], coords[2]],
                    });
                }
                let end = lines.expect("$EndNodes")?;
                if end != "$EndNodes" {
                    return Err(lines.err(format!("expected $EndNodes, got '{end}'")));
                }
            }
            "$Elements" => {
                seen_elements = true;
                let count_line = lines.expect("element count")?;
                let count: usize = count_line
                    .parse()
                    .map_err(|_| lines.err(format!("bad element count '{count_line}'")))?;
                for _ in 0..count {
                    let l = lines.expect("element line")?;
                    let fields: Result<Vec<i64>, _> =
                        l.split_whitespace().map(str::parse).collect();
                    let fields =
                        fields.map_err(|_| lines.err(format!("bad element line '{l}'")))?;
                    if fields.len() < 3 {
                        return Err(lines.err(format!("element line '{l}' too short")));
                    }
                    let ty = fields[1];
                    let ntags = fields[2] as usize;
                    if ty == 4 {
                        if fields.len() < 3 + ntags + 4 {
                            return Err(lines.err(format!("tet element line '{l}' truncated")));
                        }
                        let region = if ntags >= 1 { fields[3] as i32 } else { 0 };
                        let mut vs = [0u32; 4];
                        for (k, v) in vs.iter_mut().enumerate() {
                            let tag = fields[3 + ntags + k];
                            *v = *node_map.get(&tag).ok_or_else(|| {
                                lines.err(format!("element references unknown node {tag}"))
                            })?;
                        }
                        tets.push(Tetrahedron {
                            vertices: vs,
                            region,
                        });
                    } else if is_non_tet_volume_element(ty) {
                        return Err(lines.err(format!(
                            "volume element type {ty} is not a 4-node tetrahedron"
                        )));
                    }
                }
                let end = lines.expect("$EndElements")?;
                if end != "$EndElements" {
                    return Err(lines.err(format!("expected $EndElements, got '{end}'")));
                }
            }
            s if s.starts_with('$') && !s.starts_with("$End") => {
                // skip unknown section
                let terminator = format!("$End{}", &s[1..]);
                loop {
                    let l = lines.expect(&terminator)?;
                    if l == terminator {
                        break;
                    }
                }
            }
            other => {
                return Err(lines.err(format!("unexpected content '{other}'")));
            }
        }
    }
    if !seen_nodes || !seen_elements {
        return Err(lines.err("file is missing $Nodes or $Elements".into()));
    }
    if tets.is_empty() {
        return Err(lines.err("no tetrahedral volume elements found".into()));
    }
    Mesh::from_cells(vertices, tets)
}

fn read_gmsh_v4(lines: &mut Lines) -> Result<Mesh, MeshError> {
    let mut volume_physical: BTreeMap<i64, i32> = BTreeMap::new();
    let mut node_map: BTreeMap<i64, u32> = BTreeMap::new();
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut tets: Vec<Tetrahedron> = Vec::new();
    let mut seen_nodes = false;
    let mut seen_elements = false;

    while let Some(section) = lines.next_line() {
        match section {
            "$Entities" => {
                let l = lines.expect("entity counts")?;
                let counts: Vec<i64> = parse_fields(lines, l, 4, "entity counts")?;
                let (np, nc, ns, nv) = (counts[0], counts[1], counts[2], counts[3]);
                for _ in 0..np + nc + ns {
                    lines.expect("entity line")?;
                }
                for _ in 0..nv {
                    let l = lines.expect("volume entity")?;
                    let fields: Result<Vec<f64>, _> =
                        l.split_whitespace().map(str::parse).collect();
                    let fields =
                        fields.map_err(|_| lines.err(format!("bad volume entity '{l}'")))?;
                    if fields.len() < 8 {
                        return Err(lines.err(format!("volume entity '{l}' too short")));
                    }
                    let tag = fields[0] as i64;
                    let num_phys = fields[7] as usize;
                    if num_phys >= 1 && fields.len() >= 9 {
                        volume_physical.insert(tag, fields[8] as i32);
                    }
                }
                let end = lines.expect("$EndEntities")?;
                if end != "$EndEntities" {
                    return Err(lines.err(format!("expected $EndEntities, got '{end}'")));
                }
            }
            "$Nodes" => {
                seen_nodes = true;
                let l = lines.expect("node header")?;
                let hdr: Vec<i64> = parse_fields(lines, l, 4, "node header values")?;
                let num_blocks = hdr[0];
                for _ in 0..num_blocks {
                    let l = lines.expect("node block header")?;
                    let bh: Vec<i64> = parse_fields(lines, l, 4, "node block header values")?;
                    let in_block = bh[3] as usize;
                    let mut tags = Vec::with_capacity(in_block);
                    for _ in 0..in_block {
                        let l = lines.expect("node tag")?;
                        let tag: i64 = l
                            .split_whitespace()
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| lines.err(format!("bad node tag '{l}'")))?;
                        tags.push(tag);
                    }
                    for tag in tags {
                        let l = lines.expect("node coordinates")?;
                        let coords: Vec<f64> = parse_fields(lines, l, 3, "coordinates")?;
                        node_map.insert(tag, vertices.len() as u32);
                        vertices.push(Vertex {
                            pos: [coords[0], coords[1], coords[2]],
                        });
                    }
                }
                let end = lines.expect("$EndNodes")?;
                if end != "$EndNodes" {
                    return Err(lines.err(format!("expected $EndNodes, got '{end}'")));
                }
            }
            "$Elements" => {
                seen_elements = true;
                let l = lines.expect("element header")?;
                let hdr: Vec<i64> = parse_fields(lines, l, 4, "element header values")?;
                let num_blocks = hdr[0];
                for _ in 0..num_blocks {
                    let l = lines.expect("element block header")?;
                    let bh: Vec<i64> = parse_fields(lines, l, 4, "element block header values")?;
                    let (dim, etag, ty, in_block) = (bh[0], bh[1], bh[2], bh[3] as usize);
                    if dim == 3 && ty != 4 && is_non_tet_volume_element(ty) {
                        return Err(lines.err(format!(
                            "volume element type {ty} is not a 4-node tetrahedron"
                        )));
                    }
                    let region = *volume_physical.get(&etag).unwrap_or(&(etag as i32));
                    for _ in 0..in_block {
                        let l = lines.expect("element line")?;
                        if dim == 3 && ty == 4 {
                            let fields: Result<Vec<i64>, _> =
                                l.split_whitespace().map(str::parse).collect();
                            let fields =
                                fields.map_err(|_| lines.err(format!("bad element '{l}'")))?;
                            if fields.len() < 5 {
                                return Err(lines.err(format!("element '{l}' truncated")));
                            }
                            let mut vs = [0u32; 4];
                            for (k, v) in vs.iter_mut().enumerate() {
                                let tag = fields[1 + k];
                                *v = *node_map.get(&tag).ok_or_else(|| {
                                    lines.err(format!("element references unknown node {tag}"))
                                })?;
                            }
                            tets.push(Tetrahedron {
                                vertices: vs,
                                region,
                            });
                        }
                    }
                }
                let end = lines.expect("$EndElements")?;
                if end != "$EndElements" {
                    return Err(lines.err(format!("expected $EndElements, got '{end}'")));
                }
            }
            s if s.starts_with('$') && !s.starts_with("$End") => {
                let terminator = format!("$End{}", &s[1..]);
                loop {
                    let l = lines.expect(&terminator)?;
                    if l == terminator {
                        break;
                    }
                }
            }
            other => {
                return Err(lines.err(format!("unexpected content '{other}'")));
            }
        }
    }
    if !seen_nodes || !seen_elements {
        return Err(lines.err("file is missing $Nodes or $Elements".into()));
    }
    if tets.is_empty() {
        return Err(lines.err("no tetrahedral volume elements found".into()));
    }
    Mesh::from_cells(vertices, tets)
}
