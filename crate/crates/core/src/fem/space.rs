use std::collections::HashMap;

use crate::geometry::{CornerPolygon, Point};
use crate::mesh::{tri_area, TriMesh};

use super::FemError;

/// Local P2 ordering: vertices 0,1,2 then midpoints of edges (0,1), (1,2), (2,0).
pub const LOCAL_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Geometry of one triangle: vertex coordinates, area and barycentric gradients.
#[derive(Debug, Clone, Copy)]
pub struct ElemGeom {
    pub p: [Point; 3],
    pub area: f64,
    pub dl: [Point; 3],
}

impl ElemGeom {
    pub fn new(p: [Point; 3]) -> Self {
        let area = tri_area(p);
        let inv = 0.5 / area;
        let mut dl = [[0.0; 2]; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            dl[i] = [(p[j][1] - p[k][1]) * inv, (p[k][0] - p[j][0]) * inv];
        }
        ElemGeom { p, area, dl }
    }

    pub fn point(&self, l: [f64; 3]) -> Point {
        [
            l[0] * self.p[0][0] + l[1] * self.p[1][0] + l[2] * self.p[2][0],
            l[0] * self.p[0][1] + l[1] * self.p[1][1] + l[2] * self.p[2][1],
        ]
    }

    /// Barycentric coordinates of a physical point.
    pub fn bary(&self, x: Point) -> [f64; 3] {
        let mut l = [0.0; 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            // lambda_i is affine with gradient dl[i] and vanishes at vertex j
            l[i] = self.dl[i][0] * (x[0] - self.p[j][0]) + self.dl[i][1] * (x[1] - self.p[j][1]);
        }
        l
    }

    pub fn p2_values(&self, l: [f64; 3]) -> [f64; 6] {
        [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ]
    }

    pub fn p2_grads(&self, l: [f64; 3]) -> [Point; 6] {
        let d = &self.dl;
        let mut g = [[0.0; 2]; 6];
        for i in 0..3 {
            let s = 4.0 * l[i] - 1.0;
            g[i] = [s * d[i][0], s * d[i][1]];
        }
        for (k, &(i, j)) in LOCAL_EDGES.iter().enumerate() {
            g[3 + k] = [4.0 * (l[i] * d[j][0] + l[j] * d[i][0]), 4.0 * (l[i] * d[j][1] + l[j] * d[i][1])];
        }
        g
    }
}

/// Taylor-Hood degrees of freedom over a mesh.
#[derive(Debug, Clone)]
pub struct FemSpace {
    pub mesh: TriMesh,
    pub polygon: CornerPolygon,
    /// P2 nodes: mesh vertices first, then edge midpoints.
    pub nodes: Vec<Point>,
    pub elem_nodes: Vec<[usize; 6]>,
    pub geom: Vec<ElemGeom>,
    /// Polygon edges each boundary P2 node lies on (one, or two at polygon vertices).
    pub boundary_tags: HashMap<usize, Vec<usize>>,
    /// For each mesh boundary edge: (element, local edge index, midpoint node).
    pub bedge_elems: Vec<(usize, usize, usize)>,
    /// Elements touching the corner vertex.
    pub corner_elems: Vec<usize>,
}

impl FemSpace {
    pub fn new(mesh: TriMesh, polygon: CornerPolygon) -> Result<Self, FemError> {
        if mesh.tris.is_empty() {
            return Err(FemError::EmptyMesh);
        }
        mesh.validate(&polygon)?;
        let mut nodes = mesh.nodes.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut elem_nodes = Vec::with_capacity(mesh.tris.len());
        let mut edge_owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in mesh.tris.iter().enumerate() {
            let mut en = [tri[0], tri[1], tri[2], 0, 0, 0];
            for (k, &(i, j)) in LOCAL_EDGES.iter().enumerate() {
                let (a, b) = (tri[i], tri[j]);
                let key = (a.min(b), a.max(b));
                let id = *mid.entry(key).or_insert_with(|| {
                    let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                    nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    nodes.len() - 1
                });
                en[3 + k] = id;
                edge_owner.insert(key, (t, k));
            }
            elem_nodes.push(en);
        }
        let mut boundary_tags: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut bedge_elems = Vec::with_capacity(mesh.bedges.len());
        for e in &mesh.bedges {
            let key = (e.a.min(e.b), e.a.max(e.b));
            let m = mid[&key];
            let (t, k) = edge_owner[&key];
            bedge_elems.push((t, k, m));
            for n in [e.a, e.b, m] {
                let v = boundary_tags.entry(n).or_default();
                if !v.contains(&e.tag) {
                    v.push(e.tag);
                }
            }
        }
        for v in boundary_tags.values_mut() {
            v.sort_unstable();
        }
        let geom = (0..mesh.tris.len()).map(|t| ElemGeom::new(mesh.tri_points(t))).collect();
        let corner_elems = mesh
            .tris
            .iter()
            .enumerate()
            .filter(|(_, tri)| tri.iter().any(|&k| mesh.nodes[k] == [0.0, 0.0]))
            .map(|(t, _)| t)
            .collect();
        Ok(FemSpace { mesh, polygon, nodes, elem_nodes, geom, boundary_tags, bedge_elems, corner_elems })
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.nodes.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elems(&self) -> usize {
        self.elem_nodes.len()
    }

    /// Element containing `x` (closed), by brute-force search.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for (t, g) in self.geom.iter().enumerate() {
            let l = g.bary(x);
            let m = l[0].min(l[1]).min(l[2]);
            if m >= -1e-12 {
                return Some((t, l));
            }
            if best.map_or(true, |b| m > b.2) {
                best = Some((t, l, m));
            }
        }
        best.filter(|b| b.2 > -1e-9).map(|b| (b.0, b.1))
    }
}
