use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{CornerPolygon, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("parse error at line {line}, column {col}: {msg}")]
    ParseError { line: usize, col: usize, msg: String },
    #[error("mesh is not conforming: {0}")]
    NonConforming(String),
    #[error("triangle {0} has non-positive area {1}")]
    NegativeArea(usize, f64),
    #[error("boundary edge ({0}, {1}) has no tag")]
    UntaggedBoundaryEdge(usize, usize),
    #[error("boundary edge ({0}, {1}) does not lie on polygon edge {2}")]
    BadTag(usize, usize, usize),
    #[error("unsupported polygon: {0}")]
    UnsupportedPolygon(String),
    #[error("mesh has no triangles")]
    EmptyMesh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    /// 0-based polygon edge index.
    pub tag: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub h: f64,
    pub ratio: f64,
    pub levels: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub nodes: Vec<Point>,
    pub tris: Vec<[usize; 3]>,
    pub bedges: Vec<BoundaryEdge>,
    pub grading: Option<Grading>,
}

pub fn tri_area(p: [Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

impl TriMesh {
    pub fn tri_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.tris[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn area(&self) -> f64 {
        (0..self.tris.len()).map(|t| tri_area(self.tri_points(t))).sum()
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let p = self.tri_points(t);
        (0..3)
            .map(|k| {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                (a[0] - b[0]).hypot(a[1] - b[1])
            })
            .fold(0.0, f64::max)
    }

    /// Content hash used to tag reports.
    pub fn id(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x100000001b3);
        };
        for p in &self.nodes {
            eat(p[0].to_bits());
            eat(p[1].to_bits());
        }
        for t in &self.tris {
            for &k in t {
                eat(k as u64);
            }
        }
        format!("{:016x}-{}n{}t", h, self.nodes.len(), self.tris.len())
    }

    /// Checks area signs, conformity and boundary tags against `polygon`.
    pub fn validate(&self, polygon: &CornerPolygon) -> Result<(), MeshError> {
        if self.tris.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let n = self.nodes.len();
        for (t, tri) in self.tris.iter().enumerate() {
            if tri.iter().any(|&k| k >= n) {
                return Err(MeshError::NonConforming(format!("triangle {t} references a missing node")));
            }
            let a = tri_area(self.tri_points(t));
            if !(a > 0.0) {
                return Err(MeshError::NegativeArea(t, a));
            }
        }
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.tris {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if let Some((e, _)) = count.iter().find(|(_, &c)| c > 2) {
            return Err(MeshError::NonConforming(format!("edge {e:?} shared by more than two triangles")));
        }
        let tagged: HashMap<(usize, usize), usize> =
            self.bedges.iter().map(|e| ((e.a.min(e.b), e.a.max(e.b)), e.tag)).collect();
        let mut boundary: Vec<(usize, usize)> = count.iter().filter(|(_, &c)| c == 1).map(|(&e, _)| e).collect();
        boundary.sort_unstable();
        for &(a, b) in &boundary {
            if !tagged.contains_key(&(a, b)) {
                return Err(MeshError::UntaggedBoundaryEdge(a, b));
            }
        }
        let scale = polygon.perimeter();
        let mut tag_len = vec![0.0; polygon.num_edges()];
        for e in &self.bedges {
            let key = (e.a.min(e.b), e.a.max(e.b));
            if count.get(&key) != Some(&1) {
                return Err(MeshError::NonConforming(format!("tagged edge {key:?} is not on the boundary")));
            }
            if e.tag >= polygon.num_edges() {
                return Err(MeshError::BadTag(e.a, e.b, e.tag));
            }
            let pe = polygon.edge(e.tag);
            let (pa, pb) = (self.nodes[e.a], self.nodes[e.b]);
            if pe.distance(pa) > 1e-12 * scale || pe.distance(pb) > 1e-12 * scale {
                return Err(MeshError::BadTag(e.a, e.b, e.tag));
            }
            tag_len[e.tag] += (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
        }
        for (j, len) in tag_len.iter().enumerate() {
            if (len - polygon.edge(j).length).abs() > 1e-12 * scale {
                return Err(MeshError::NonConforming(format!(
                    "tagged length {len} on edge {j} differs from {}",
                    polygon.edge(j).length
                )));
            }
        }
        Ok(())
    }

    /// Plain-text mesh format; tags written 1-based.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        if let Some(g) = self.grading {
            let _ = writeln!(s, "# grading h={:?} ratio={:?} levels={}", g.h, g.ratio, g.levels);
        }
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{:?} {:?}", p[0], p[1]);
        }
        let _ = writeln!(s, "tris {}", self.tris.len());
        for t in &self.tris {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "bedges {}", self.bedges.len());
        for e in &self.bedges {
            let _ = writeln!(s, "{} {} {}", e.a, e.b, e.tag + 1);
        }
        s
    }
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-empty line with comments stripped: (line number, tokens with columns).
    fn next(&mut self) -> Option<(usize, Vec<(usize, &'a str)>)> {
        for (i, raw) in self.it.by_ref() {
            let body = raw.split('#').next().unwrap_or("");
            let mut toks = Vec::new();
            let mut start = None;
            for (c, ch) in body.char_indices() {
                if ch.is_whitespace() {
                    if let Some(s) = start.take() {
                        toks.push((s + 1, &body[s..c]));
                    }
                } else if start.is_none() {
                    start = Some(c);
                }
            }
            if let Some(s) = start {
                toks.push((s + 1, &body[s..]));
            }
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }
}

fn perr(line: usize, col: usize, msg: impl Into<String>) -> MeshError {
    MeshError::ParseError { line, col, msg: msg.into() }
}

fn section(lines: &mut Lines, name: &str, last_line: usize) -> Result<usize, MeshError> {
    let (ln, toks) = lines.next().ok_or_else(|| perr(last_line + 1, 1, format!("expected `{name} <count>`")))?;
    if toks.len() != 2 || toks[0].1 != name {
        return Err(perr(ln, toks[0].0, format!("expected `{name} <count>`")));
    }
    let n = toks[1].1.parse::<usize>().map_err(|_| perr(ln, toks[1].0, "expected a count"))?;
    Ok(n)
}

fn records<T: std::str::FromStr>(
    lines: &mut Lines,
    count: usize,
    width: usize,
    what: &str,
) -> Result<(Vec<Vec<T>>, usize), MeshError> {
    let mut out = Vec::with_capacity(count);
    let mut last = 0;
    for _ in 0..count {
        let (ln, toks) = lines.next().ok_or_else(|| perr(last + 1, 1, format!("missing {what} record")))?;
        if toks.len() != width {
            return Err(perr(ln, toks[0].0, format!("expected {width} fields in {what} record")));
        }
        let mut row = Vec::with_capacity(width);
        for (col, t) in toks {
            row.push(t.parse::<T>().map_err(|_| perr(ln, col, format!("invalid value `{t}`")))?);
        }
        out.push(row);
        last = ln;
    }
    Ok((out, last))
}

/// Parses the text format without geometric validation.
pub fn parse_mesh(text: &str) -> Result<TriMesh, MeshError> {
    let mut lines = Lines { it: text.lines().enumerate() };
    let nn = section(&mut lines, "nodes", 0)?;
    let (nodes, l1) = records::<f64>(&mut lines, nn, 2, "node")?;
    let nt = section(&mut lines, "tris", l1)?;
    let (tris, l2) = records::<usize>(&mut lines, nt, 3, "triangle")?;
    let nb = section(&mut lines, "bedges", l2)?;
    let (bedges, l3) = records::<usize>(&mut lines, nb, 3, "boundary edge")?;
    if let Some((ln, toks)) = lines.next() {
        return Err(perr(ln, toks[0].0, "unexpected trailing content"));
    }
    let _ = l3;
    let mut be = Vec::with_capacity(nb);
    for r in bedges {
        if r[2] == 0 {
            return Err(MeshError::UntaggedBoundaryEdge(r[0], r[1]));
        }
        be.push(BoundaryEdge { a: r[0], b: r[1], tag: r[2] - 1 });
    }
    Ok(TriMesh {
        nodes: nodes.into_iter().map(|r| [r[0], r[1]]).collect(),
        tris: tris.into_iter().map(|r| [r[0], r[1], r[2]]).collect(),
        bedges: be,
        grading: None,
    })
}

/// Parses a mesh file and validates it against `polygon`.
pub fn load_mesh(text: &str, polygon: &CornerPolygon) -> Result<TriMesh, MeshError> {
    let m = parse_mesh(text)?;
    m.validate(polygon)?;
    Ok(m)
}

/// Graded structured triangulation of an axis-aligned polygon whose vertices
/// lie on the grid of spacing `h`. Cells near the corner are refined by
/// quadtree splitting (2:1 balanced) until their size is at most
/// max(h ratio^levels, (1-ratio)/ratio * distance to the corner).
pub fn generate_lshape_mesh(polygon: &CornerPolygon, h: f64, ratio: f64, levels: u32) -> Result<TriMesh, MeshError> {
    if !(h > 0.0) {
        return Err(MeshError::UnsupportedPolygon(format!("mesh size h={h} must be positive")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(MeshError::UnsupportedPolygon(format!("grading ratio {ratio} outside (0,1)")));
    }
    if !polygon.is_axis_aligned() {
        return Err(MeshError::UnsupportedPolygon("edges must be axis-aligned; use load_mesh".into()));
    }
    let scale = 1u64 << levels;
    let mut grid = Vec::new();
    for v in polygon.vertices() {
        let mut g = [0i64; 2];
        for k in 0..2 {
            let q = v[k] / h;
            if (q - q.round()).abs() > 1e-9 {
                return Err(MeshError::UnsupportedPolygon(format!("vertex {v:?} is not on the h={h} grid")));
            }
            g[k] = q.round() as i64;
        }
        grid.push(g);
    }
    let lo = [grid.iter().map(|g| g[0]).min().unwrap(), grid.iter().map(|g| g[1]).min().unwrap()];
    let hi = [grid.iter().map(|g| g[0]).max().unwrap(), grid.iter().map(|g| g[1]).max().unwrap()];
    let fine = h / scale as f64;
    // cells keyed by (level, i, j) where i, j index the lower-left corner in units of h/2^level
    let mut leaves: BTreeMap<(u32, i64, i64), ()> = BTreeMap::new();
    for i in lo[0]..hi[0] {
        for j in lo[1]..hi[1] {
            let c = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
            if polygon.contains(c) {
                leaves.insert((0, i, j), ());
            }
        }
    }
    let size = |l: u32| h / (1u64 << l) as f64;
    let dist = |(l, i, j): (u32, i64, i64)| {
        let sz = size(l);
        let (x0, y0) = (i as f64 * sz, j as f64 * sz);
        let dx = if x0 > 0.0 { x0 } else if x0 + sz < 0.0 { -(x0 + sz) } else { 0.0 };
        let dy = if y0 > 0.0 { y0 } else if y0 + sz < 0.0 { -(y0 + sz) } else { 0.0 };
        dx.hypot(dy)
    };
    let split = |leaves: &mut BTreeMap<(u32, i64, i64), ()>, (l, i, j): (u32, i64, i64)| {
        leaves.remove(&(l, i, j));
        for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            leaves.insert((l + 1, 2 * i + a, 2 * j + b), ());
        }
    };
    if levels > 0 {
        let hmin = h * ratio.powi(levels as i32);
        let slope = (1.0 - ratio) / ratio;
        loop {
            let todo: Vec<_> = leaves
                .keys()
                .copied()
                .filter(|&c| c.0 < levels && size(c.0) > (hmin.max(slope * dist(c))) * (1.0 + 1e-12))
                .collect();
            if todo.is_empty() {
                break;
            }
            for c in todo {
                split(&mut leaves, c);
            }
        }
        // 2:1 balance across edges
        loop {
            let finest: HashMap<(i64, i64), u32> = leaf_fine_cells(&leaves, levels);
            let mut todo = Vec::new();
            for &(l, i, j) in leaves.keys() {
                let w = 1i64 << (levels - l);
                let (x0, y0) = (i * w, j * w);
                let mut worst = l;
                for k in 0..w {
                    for p in [(x0 - 1, y0 + k), (x0 + w, y0 + k), (x0 + k, y0 - 1), (x0 + k, y0 + w)] {
                        if let Some(&nl) = finest.get(&p) {
                            worst = worst.max(nl);
                        }
                    }
                }
                if worst > l + 1 {
                    todo.push((l, i, j));
                }
            }
            if todo.is_empty() {
                break;
            }
            for c in todo {
                split(&mut leaves, c);
            }
        }
    }
    // nodes in units of `fine`
    let mut corner_keys: HashSet<(i64, i64)> = HashSet::new();
    for &(l, i, j) in leaves.keys() {
        let w = 1i64 << (levels - l);
        for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            corner_keys.insert(((i + a) * w, (j + b) * w));
        }
    }
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut nodes: Vec<Point> = Vec::new();
    let mut node = |k: (i64, i64), nodes: &mut Vec<Point>| -> usize {
        *index.entry(k).or_insert_with(|| {
            nodes.push([k.0 as f64 * fine, k.1 as f64 * fine]);
            nodes.len() - 1
        })
    };
    let on_boundary = |k: (i64, i64)| polygon.edge_containing([k.0 as f64 * fine, k.1 as f64 * fine], 1e-12).is_some();
    let mut tris = Vec::new();
    for &(l, i, j) in leaves.keys() {
        let w = 1i64 << (levels - l);
        let (x0, y0) = (i * w, j * w);
        let ll = (x0, y0);
        let lr = (x0 + w, y0);
        let ur = (x0 + w, y0 + w);
        let ul = (x0, y0 + w);
        let half = w / 2;
        let mids = if w > 1 {
            [(x0 + half, y0), (x0 + w, y0 + half), (x0 + half, y0 + w), (x0, y0 + half)]
        } else {
            [ll; 4]
        };
        let hanging: Vec<bool> = mids.iter().map(|m| w > 1 && corner_keys.contains(m)).collect();
        if hanging.iter().any(|&x| x) {
            let center = node((x0 + half, y0 + half), &mut nodes);
            let ring = [ll, mids[0], lr, mids[1], ur, mids[2], ul, mids[3]];
            let keep = [true, hanging[0], true, hanging[1], true, hanging[2], true, hanging[3]];
            let ring: Vec<usize> = ring.iter().zip(keep).filter(|(_, k)| *k).map(|(&p, _)| node(p, &mut nodes)).collect();
            for k in 0..ring.len() {
                tris.push([center, ring[k], ring[(k + 1) % ring.len()]]);
            }
        } else {
            // choose the diagonal so that no triangle has all vertices on the boundary
            let bad_main = (on_boundary(ll) && on_boundary(lr) && on_boundary(ur))
                || (on_boundary(ll) && on_boundary(ur) && on_boundary(ul));
            let [a, b, c, d] = [ll, lr, ur, ul].map(|p| node(p, &mut nodes));
            if bad_main {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            } else {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            }
        }
    }
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut bedges = Vec::new();
    for t in &tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 {
                let m = [0.5 * (nodes[a][0] + nodes[b][0]), 0.5 * (nodes[a][1] + nodes[b][1])];
                let tag = polygon
                    .edge_containing(m, 1e-12)
                    .ok_or_else(|| MeshError::UnsupportedPolygon(format!("boundary edge at {m:?} off the polygon")))?;
                bedges.push(BoundaryEdge { a, b, tag });
            }
        }
    }
    bedges.sort_by(|x, y| (x.tag, x.a, x.b).cmp(&(y.tag, y.a, y.b)));
    let mesh = TriMesh { nodes, tris, bedges, grading: Some(Grading { h, ratio, levels }) };
    mesh.validate(polygon)?;
    Ok(mesh)
}

fn leaf_fine_cells(leaves: &BTreeMap<(u32, i64, i64), ()>, levels: u32) -> HashMap<(i64, i64), u32> {
    // every leaf marks the finest-grid cells along its border with its level
    let mut m = HashMap::new();
    for &(l, i, j) in leaves.keys() {
        let w = 1i64 << (levels - l);
        for k in 0..w {
            for p in [(i * w + k, j * w), (i * w + k, j * w + w - 1), (i * w, j * w + k), (i * w + w - 1, j * w + k)] {
                m.insert(p, l);
            }
        }
    }
    m
}
