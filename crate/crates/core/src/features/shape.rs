//! Shape descriptors of the lesion mask (no image intensities involved).
//!
//! Per-slice 2-D descriptors are aggregated as mean and std over the
//! occupied axial slices. 3-D descriptors use voxel-center inertia and a
//! marching-tetrahedra surface of the binary mask.

use crate::linalg::{covariance, sym_eigen};
use crate::model::RoiMask;
use crate::scalar::Real;

/// Per-slice descriptors in dictionary order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceShape<T> {
    pub compactness: T,
    pub radial_distance: T,
    pub roughness: T,
    pub convexity: T,
    pub circular_variance: T,
    pub principal_axes_ratio: T,
    pub elliptic_variance: T,
    pub solidity: T,
    pub area: T,
}

impl<T: Real> SliceShape<T> {
    fn descriptors(&self) -> [T; 8] {
        [
            self.compactness,
            self.radial_distance,
            self.roughness,
            self.convexity,
            self.circular_variance,
            self.principal_axes_ratio,
            self.elliptic_variance,
            self.solidity,
        ]
    }
}

fn cross2<T: Real>(o: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; returns hull vertices counter-clockwise.
pub fn convex_hull<T: Real>(points: &[[T; 2]]) -> Vec<[T; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap()
            .then(a[1].partial_cmp(&b[1]).unwrap())
    });
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[T; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross2(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero() {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross2(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero()
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn polygon_perimeter_area<T: Real>(poly: &[[T; 2]]) -> (T, T) {
    let n = poly.len();
    let (mut per, mut area) = (T::zero(), T::zero());
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        per += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        area += a[0] * b[1] - b[0] * a[1];
    }
    (per, (area / T::of(2.0)).abs())
}

fn mean_var<T: Real>(v: &[T]) -> (T, T) {
    if v.is_empty() {
        return (T::zero(), T::zero());
    }
    let n = T::of_usize(v.len());
    let m = v.iter().copied().sum::<T>() / n;
    let var = v.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / n;
    (m, var)
}

/// 2-D descriptors of one binary slice (`w × h`, x fastest).
pub fn slice_shape<T: Real>(mask: &[bool], w: usize, h: usize, sx: T, sy: T) -> SliceShape<T> {
    let at = |x: isize, y: isize| -> bool {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && mask[y as usize * w + x as usize]
    };
    let mut pixels: Vec<[T; 2]> = Vec::new();
    let mut boundary: Vec<[T; 2]> = Vec::new();
    let mut corners: Vec<[T; 2]> = Vec::new();
    let mut perimeter = T::zero();
    let half = T::of(0.5);
    for y in 0..h {
        for x in 0..w {
            if !mask[y * w + x] {
                continue;
            }
            let (xi, yi) = (x as isize, y as isize);
            let c = [(T::of_usize(x) + half) * sx, (T::of_usize(y) + half) * sy];
            pixels.push(c);
            let exposed = [
                (!at(xi - 1, yi), sy),
                (!at(xi + 1, yi), sy),
                (!at(xi, yi - 1), sx),
                (!at(xi, yi + 1), sx),
            ];
            let mut on_boundary = false;
            for (open, len) in exposed {
                if open {
                    perimeter += len;
                    on_boundary = true;
                }
            }
            if on_boundary {
                boundary.push(c);
                for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    corners.push([T::of_usize(x + dx) * sx, T::of_usize(y + dy) * sy]);
                }
            }
        }
    }
    let area = T::of_usize(pixels.len()) * sx * sy;
    let pi = T::of(std::f64::consts::PI);
    let compactness = T::of(4.0) * pi * area / (perimeter * perimeter);

    let (centroid, cov) = covariance(&pixels);
    let radii: Vec<T> = boundary
        .iter()
        .map(|p| ((p[0] - centroid[0]).powi(2) + (p[1] - centroid[1]).powi(2)).sqrt())
        .collect();
    let (r_mean, r_var) = mean_var(&radii);
    let (roughness, circular_variance) = if r_mean > T::zero() {
        let mad = radii.iter().map(|&r| (r - r_mean).abs()).sum::<T>() / T::of_usize(radii.len());
        (mad / r_mean, r_var / (r_mean * r_mean))
    } else {
        (T::zero(), T::zero())
    };

    let hull = convex_hull(&corners);
    let (hull_per, hull_area) = polygon_perimeter_area(&hull);
    let convexity = hull_per / perimeter;
    let solidity = if hull_area > T::zero() {
        area / hull_area
    } else {
        T::one()
    };

    let (evals, _) = sym_eigen(cov);
    let principal_axes_ratio = if evals[0] > T::zero() {
        (evals[1].max(T::zero()) / evals[0]).sqrt()
    } else {
        T::one()
    };

    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let elliptic_variance = if det > T::epsilon() * (cov[0][0] + cov[1][1]).powi(2) {
        let inv = [
            [cov[1][1] / det, -cov[0][1] / det],
            [-cov[1][0] / det, cov[0][0] / det],
        ];
        let d: Vec<T> = boundary
            .iter()
            .map(|p| {
                let v = [p[0] - centroid[0], p[1] - centroid[1]];
                let q = v[0] * (inv[0][0] * v[0] + inv[0][1] * v[1])
                    + v[1] * (inv[1][0] * v[0] + inv[1][1] * v[1]);
                q.max(T::zero()).sqrt()
            })
            .collect();
        let (dm, dv) = mean_var(&d);
        if dm > T::zero() {
            dv / (dm * dm)
        } else {
            T::zero()
        }
    } else {
        T::zero()
    };

    SliceShape {
        compactness,
        radial_distance: r_mean,
        roughness,
        convexity,
        circular_variance,
        principal_axes_ratio,
        elliptic_variance,
        solidity,
        area,
    }
}

/// Closed triangle surface of a binary mask.
#[derive(Debug, Clone, Default)]
pub struct Mesh<T> {
    pub triangles: Vec<[[T; 3]; 3]>,
}

impl<T: Real> Mesh<T> {
    /// Enclosed volume from the divergence theorem (triangles oriented outward).
    pub fn volume(&self) -> T {
        let mut v = T::zero();
        for [a, b, c] in &self.triangles {
            v += a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]);
        }
        v / T::of(6.0)
    }

    pub fn area(&self) -> T {
        self.triangles
            .iter()
            .map(|[a, b, c]| {
                let u = sub3(*b, *a);
                let w = sub3(*c, *a);
                norm3(cross3(u, w)) / T::of(2.0)
            })
            .sum()
    }
}

fn sub3<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3<T: Real>(a: [T; 3]) -> T {
    dot3(a, a).sqrt()
}

const CUBE_CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Corner cycles of the six cube faces.
const FACES: [[usize; 4]; 6] = [
    [0, 1, 2, 3],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [3, 2, 6, 7],
    [0, 3, 7, 4],
    [1, 2, 6, 5],
];

/// Marching cubes at iso-level ½ on the voxel-center lattice.
///
/// Each cube's polygons are assembled by walking its faces. Ambiguous faces
/// separate the inside corners, a rule that depends on the face alone, so
/// neighbouring cubes agree and the surface is closed.
pub fn mesh<T: Real>(mask: &RoiMask) -> Mesh<T> {
    let sp = mask.spacing();
    let s = [T::of(sp[0]), T::of(sp[1]), T::of(sp[2])];
    let fg = mask.foreground();
    let mut lo = [isize::MAX; 3];
    let mut hi = [isize::MIN; 3];
    for p in &fg {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k] as isize);
            hi[k] = hi[k].max(p[k] as isize);
        }
    }
    let mut out = Mesh {
        triangles: Vec::new(),
    };
    let half = T::of(0.5);
    let edge_key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    for z in (lo[2] - 1)..=hi[2] {
        for y in (lo[1] - 1)..=hi[1] {
            for x in (lo[0] - 1)..=hi[0] {
                let mut inside = [false; 8];
                let mut pos = [[T::zero(); 3]; 8];
                for (i, c) in CUBE_CORNERS.iter().enumerate() {
                    let g = [x + c[0] as isize, y + c[1] as isize, z + c[2] as isize];
                    inside[i] = mask.get_signed(g[0], g[1], g[2]);
                    for k in 0..3 {
                        pos[i][k] = T::of(g[k] as f64) * s[k];
                    }
                }
                let n_in = inside.iter().filter(|&&b| b).count();
                if n_in == 0 || n_in == 8 {
                    continue;
                }
                let mut segments: Vec<((usize, usize), (usize, usize))> = Vec::new();
                for f in FACES {
                    let crossing: Vec<(usize, usize)> = (0..4)
                        .filter(|&i| inside[f[i]] != inside[f[(i + 1) % 4]])
                        .map(|i| edge_key(f[i], f[(i + 1) % 4]))
                        .collect();
                    match crossing.len() {
                        2 => segments.push((crossing[0], crossing[1])),
                        4 => {
                            for i in 0..4 {
                                if inside[f[i]] {
                                    let prev = f[(i + 3) % 4];
                                    let next = f[(i + 1) % 4];
                                    segments.push((edge_key(prev, f[i]), edge_key(f[i], next)));
                                }
                            }
                        }
                        _ => {}
                    }
                }
                while let Some((start, mut cur)) = segments.pop() {
                    let mut ring = vec![start];
                    while cur != start {
                        ring.push(cur);
                        let k = segments
                            .iter()
                            .position(|&(a, b)| a == cur || b == cur)
                            .expect("closed loop");
                        let (a, b) = segments.swap_remove(k);
                        cur = if a == cur { b } else { a };
                    }
                    let pts: Vec<[T; 3]> = ring
                        .iter()
                        .map(|&(a, b)| {
                            [
                                (pos[a][0] + pos[b][0]) * half,
                                (pos[a][1] + pos[b][1]) * half,
                                (pos[a][2] + pos[b][2]) * half,
                            ]
                        })
                        .collect();
                    let mut outward = [T::zero(); 3];
                    for &(a, b) in &ring {
                        let (i, o) = if inside[a] { (a, b) } else { (b, a) };
                        let d = sub3(pos[o], pos[i]);
                        for k in 0..3 {
                            outward[k] += d[k];
                        }
                    }
                    let mut normal = [T::zero(); 3];
                    for i in 1..pts.len() - 1 {
                        let n = cross3(sub3(pts[i], pts[0]), sub3(pts[i + 1], pts[0]));
                        for k in 0..3 {
                            normal[k] += n[k];
                        }
                    }
                    let flip = dot3(normal, outward) < T::zero();
                    for i in 1..pts.len() - 1 {
                        if flip {
                            out.triangles.push([pts[0], pts[i + 1], pts[i]]);
                        } else {
                            out.triangles.push([pts[0], pts[i], pts[i + 1]]);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Surface voxels: foreground with at least one background 6-neighbour.
pub(crate) fn surface_voxels(mask: &RoiMask) -> Vec<[usize; 3]> {
    mask.foreground()
        .into_iter()
        .filter(|&[x, y, z]| {
            let (x, y, z) = (x as isize, y as isize, z as isize);
            [
                (-1, 0, 0),
                (1, 0, 0),
                (0, -1, 0),
                (0, 1, 0),
                (0, 0, -1),
                (0, 0, 1),
            ]
            .iter()
            .any(|&(dx, dy, dz)| !mask.get_signed(x + dx, y + dy, z + dz))
        })
        .collect()
}

fn max_pairwise<T: Real>(points: &[[T; 3]]) -> T {
    let mut best = T::zero();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = dot3(sub3(points[i], points[j]), sub3(points[i], points[j]));
            if d > best {
                best = d;
            }
        }
    }
    best.sqrt()
}

/// Largest in-plane diameter over planes perpendicular to `axis`.
fn max_planar_diameter<T: Real>(voxels: &[[usize; 3]], phys: &[[T; 3]], axis: usize) -> T {
    let mut by_plane: std::collections::BTreeMap<usize, Vec<[T; 3]>> = Default::default();
    for (v, p) in voxels.iter().zip(phys) {
        by_plane.entry(v[axis]).or_default().push(*p);
    }
    by_plane
        .values()
        .map(|pts| max_pairwise(pts))
        .fold(T::zero(), |a, b| a.max(b))
}

/// All 35 shape features in dictionary order.
pub fn shape_features<T: Real>(mask: &RoiMask) -> Vec<T> {
    let dims = mask.dims();
    let sp = mask.spacing();
    let (sx, sy, sz) = (T::of(sp[0]), T::of(sp[1]), T::of(sp[2]));

    let slices: Vec<SliceShape<T>> = mask
        .occupied_slices()
        .into_iter()
        .map(|z| slice_shape(&mask.slice(z), dims[0], dims[1], sx, sy))
        .collect();
    let mut out = Vec::with_capacity(35);
    for k in 0..8 {
        let v: Vec<T> = slices.iter().map(|s| s.descriptors()[k]).collect();
        let (m, var) = mean_var(&v);
        out.push(m);
        out.push(var.sqrt());
    }
    let areas: Vec<T> = slices.iter().map(|s| s.area).collect();
    let (am, av) = mean_var(&areas);
    out.push(am);
    out.push(av.sqrt());
    out.push(areas.iter().copied().fold(T::infinity(), T::min));
    out.push(areas.iter().copied().fold(T::neg_infinity(), T::max));

    let fg = mask.foreground();
    let n = fg.len();
    let voxel_volume = sx * sy * sz;
    let m = mesh::<T>(mask);
    let mesh_volume = m.volume();
    let surface = m.area();
    out.push(T::of_usize(n));
    out.push(mesh_volume);
    out.push(T::of_usize(n) * voxel_volume);

    let phys = |v: &[usize; 3]| {
        [
            T::of_usize(v[0]) * sx,
            T::of_usize(v[1]) * sy,
            T::of_usize(v[2]) * sz,
        ]
    };
    let points: Vec<[T; 3]> = fg.iter().map(phys).collect();
    let (_, cov) = covariance(&points);
    let (ev, _) = sym_eigen(cov);
    let ev = ev.map(|e| e.max(T::zero()));
    // 1 for a line, 0 for an isotropic blob
    let (elongation, flatness) = if ev[0] > T::zero() {
        (
            T::one() - (ev[1] / ev[0]).sqrt(),
            T::one() - (ev[2] / ev[0]).sqrt(),
        )
    } else {
        (T::zero(), T::zero())
    };
    let four = T::of(4.0);
    out.push(elongation);
    out.push(flatness);
    out.push(four * ev[2].sqrt());
    out.push(four * ev[0].sqrt());
    out.push(four * ev[1].sqrt());

    let surf = surface_voxels(mask);
    let surf_phys: Vec<[T; 3]> = surf.iter().map(phys).collect();
    out.push(max_pairwise(&surf_phys));
    out.push(max_planar_diameter(&surf, &surf_phys, 1));
    out.push(max_planar_diameter(&surf, &surf_phys, 0));
    out.push(max_planar_diameter(&surf, &surf_phys, 2));

    let pi = T::of(std::f64::consts::PI);
    let sphericity = if surface > T::zero() {
        pi.cbrt() * (T::of(6.0) * mesh_volume).powf(T::of(2.0 / 3.0)) / surface
    } else {
        T::nan()
    };
    out.push(sphericity);
    out.push(surface);
    out.push(if mesh_volume > T::zero() {
        surface / mesh_volume
    } else {
        T::nan()
    });
    debug_assert_eq!(out.len(), 35);
    out
}
