//! Marching cubes over a scalar node lattice.
//!
//! The 256-entry case table is constructed once at first use instead of being
//! transcribed: for every corner configuration the per-face isosurface
//! segments are derived by walking runs of inside corners around each face
//! (diagonal inside corners are never connected, which fixes the ambiguous
//! faces consistently between neighboring cells), the segments are chained
//! into cycles, and each cycle is fan-triangulated with outward orientation.

use super::grid::ScalarGrid3;
use super::mesh::TriangleMesh;
use super::vec3::Vec3;
use crate::error::GeometryError;
use once_cell::sync::Lazy;
use std::collections::HashMap;

/// Cube corner `v` sits at offset (v&1, v>>1&1, v>>2&1).
const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Face corners in cyclic boundary order.
const FACES: [[usize; 4]; 6] = [
    [0, 2, 6, 4], // x = 0
    [1, 3, 7, 5], // x = 1
    [0, 1, 5, 4], // y = 0
    [2, 3, 7, 6], // y = 1
    [0, 1, 3, 2], // z = 0
    [4, 5, 7, 6], // z = 1
];

fn edge_id(a: usize, b: usize) -> usize {
    let key = (a.min(b), a.max(b));
    EDGES.iter().position(|&e| e == key).expect("not a cube edge")
}

fn corner_pos(v: usize) -> Vec3 {
    Vec3::new((v & 1) as f64, ((v >> 1) & 1) as f64, ((v >> 2) & 1) as f64)
}

fn edge_midpoint(e: usize) -> Vec3 {
    let (a, b) = EDGES[e];
    (corner_pos(a) + corner_pos(b)) * 0.5
}

/// Per-face segments separating inside from outside corners.
fn face_segments(config: u16, face: &[usize; 4]) -> Vec<(usize, usize)> {
    let inside = |v: usize| config >> v & 1 == 1;
    let s: Vec<bool> = face.iter().map(|&v| inside(v)).collect();
    let mut segs = Vec::new();
    for i in 0..4 {
        // Start of a maximal run of inside corners.
        if s[i] && !s[(i + 3) % 4] {
            let mut j = i;
            while s[(j + 1) % 4] {
                j = (j + 1) % 4;
            }
            let enter = edge_id(face[(i + 3) % 4], face[i]);
            let exit = edge_id(face[j], face[(j + 1) % 4]);
            segs.push((enter, exit));
        }
    }
    segs
}

fn build_case(config: u16) -> Vec<Vec<usize>> {
    let inside = |v: usize| config >> v & 1 == 1;
    // Adjacency over cut edges: every cut edge borders exactly two faces,
    // contributing two neighbors, so the segment graph is a disjoint cycle set.
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for face in &FACES {
        for (a, b) in face_segments(config, face) {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    let mut visited: Vec<usize> = Vec::new();
    let mut cycles = Vec::new();
    let mut keys: Vec<usize> = adj.keys().copied().collect();
    keys.sort_unstable();
    for start in keys {
        if visited.contains(&start) {
            continue;
        }
        let mut cycle = vec![start];
        let mut prev = usize::MAX;
        let mut cur = start;
        loop {
            let next = *adj[&cur].iter().find(|&&n| n != prev).expect("degree-2 cycle");
            if next == start {
                break;
            }
            prev = cur;
            cur = next;
            cycle.push(cur);
        }
        // Handle the two-edge degenerate (cannot happen: faces never emit
        // duplicate segments between the same pair twice except config pairs
        // that form a lens; guard anyway).
        if cycle.len() < 3 {
            visited.extend(cycle);
            continue;
        }
        // Orient so triangle normals point toward the outside corners.
        let centroid = cycle.iter().fold(Vec3::ZERO, |acc, &e| acc + edge_midpoint(e))
            / cycle.len() as f64;
        let mut normal = Vec3::ZERO;
        for i in 0..cycle.len() {
            let a = edge_midpoint(cycle[i]) - centroid;
            let b = edge_midpoint(cycle[(i + 1) % cycle.len()]) - centroid;
            normal += a.cross(b);
        }
        let (ea, eb) = EDGES[cycle[0]];
        let (vin, vout) = if inside(ea) { (ea, eb) } else { (eb, ea) };
        if normal.dot(corner_pos(vout) - corner_pos(vin)) < 0.0 {
            cycle.reverse();
        }
        visited.extend(cycle.iter().copied());
        cycles.push(cycle);
    }
    cycles
}

static CASE_TABLE: Lazy<Vec<Vec<Vec<usize>>>> =
    Lazy::new(|| (0u16..256).map(build_case).collect());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum VertexKey {
    Node(usize),
    Edge(usize, usize),
}

/// Extracts the isosurface {f = iso} as a triangle mesh. Vertices are placed
/// by linear interpolation along cut cell edges and snapped to the lattice
/// node when |f - iso| < 1e-12. Returns an empty mesh when nothing crosses.
pub fn marching_cubes(grid: &ScalarGrid3, iso: f64) -> Result<TriangleMesh, GeometryError> {
    if grid.channels != 1 {
        return Err(GeometryError::ChannelMismatch { expected: 1, got: grid.channels });
    }
    let d = grid.lattice.dims;
    if d[0] < 2 || d[1] < 2 || d[2] < 2 {
        return Err(GeometryError::GridTooSmall { min: 2, dims: d });
    }
    let lat = grid.lattice;
    let mut vertex_ids: HashMap<VertexKey, usize> = HashMap::new();
    let mut mesh = TriangleMesh::default();
    let node = |x: usize, y: usize, z: usize| lat.index(x, y, z);

    for z in 0..d[2] - 1 {
        for y in 0..d[1] - 1 {
            for x in 0..d[0] - 1 {
                let corner_node = |v: usize| {
                    node(x + (v & 1), y + ((v >> 1) & 1), z + ((v >> 2) & 1))
                };
                let mut config = 0u16;
                for v in 0..8 {
                    if grid.values[corner_node(v)] < iso {
                        config |= 1 << v;
                    }
                }
                for cycle in &CASE_TABLE[config as usize] {
                    let ids: Vec<usize> = cycle
                        .iter()
                        .map(|&e| {
                            let (a, b) = EDGES[e];
                            let (na, nb) = (corner_node(a), corner_node(b));
                            let (fa, fb) = (grid.values[na], grid.values[nb]);
                            let key = if (fa - iso).abs() < 1e-12 {
                                VertexKey::Node(na)
                            } else if (fb - iso).abs() < 1e-12 {
                                VertexKey::Node(nb)
                            } else {
                                VertexKey::Edge(na.min(nb), na.max(nb))
                            };
                            *vertex_ids.entry(key).or_insert_with(|| {
                                let p = match key {
                                    VertexKey::Node(n) => node_point(&lat, n),
                                    VertexKey::Edge(_, _) => {
                                        let t = (iso - fa) / (fb - fa);
                                        let pa = node_point(&lat, na);
                                        let pb = node_point(&lat, nb);
                                        pa + (pb - pa) * t
                                    }
                                };
                                mesh.vertices.push(p);
                                mesh.vertices.len() - 1
                            })
                        })
                        .collect();
                    if ids.len() == 3 {
                        mesh.triangles.push([ids[0], ids[1], ids[2]]);
                    } else {
                        // Fanning longer (possibly saddle-shaped) cycles from a
                        // boundary vertex can fold triangles onto a cell face,
                        // duplicating the neighbor's geometry; fan from the
                        // cycle centroid instead, which is interior to the cell.
                        let centroid = ids.iter().fold(Vec3::ZERO, |acc, &i| acc + mesh.vertices[i])
                            / ids.len() as f64;
                        let ci = mesh.vertices.len();
                        mesh.vertices.push(centroid);
                        for i in 0..ids.len() {
                            mesh.triangles.push([ci, ids[i], ids[(i + 1) % ids.len()]]);
                        }
                    }
                }
            }
        }
    }
    Ok(mesh.cleaned())
}

fn node_point(lat: &super::grid::GridLattice, n: usize) -> Vec3 {
    let x = n % lat.dims[0];
    let y = (n / lat.dims[0]) % lat.dims[1];
    let z = n / (lat.dims[0] * lat.dims[1]);
    lat.point(x, y, z)
}
