//! Higher-level structure inference: wall landmarks are projected to the
//! horizontal plane as 2D support lines with segments; opposing wall pairs
//! combine into rooms (two near-perpendicular pairs) or corridors (a lone
//! elongated pair). Decisions use only geometry and classes, so results are
//! stable under landmark id relabeling.

use nalgebra::{Vector2, Vector3};

use crate::camera::UnitVec3;
use crate::geom2d::{convex_polygons_overlap, line_intersection, polygon_area};
use crate::graph::{LandmarkId, PlaneLandmark, SceneGraph};
use crate::scalar::Real;
use crate::semantic::SemanticClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    Room,
    Corridor,
}

impl std::fmt::Display for StructureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StructureKind::Room => "room",
            StructureKind::Corridor => "corridor",
        })
    }
}

/// A room or corridor with its member walls, optional ground and a 2D
/// footprint polygon in the horizontal basis.
#[derive(Debug, Clone)]
pub struct StructureNode<T: Real> {
    pub kind: StructureKind,
    pub wall_ids: Vec<LandmarkId>,
    pub ground_id: Option<LandmarkId>,
    pub footprint: Vec<Vector2<T>>,
}

impl<T: Real> StructureNode<T> {
    pub fn footprint_area(&self) -> T {
        polygon_area(&self.footprint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureConfig<T: Real> {
    /// Maximum deviation from anti-parallel for an opposing wall pair (deg).
    pub pair_angle_tol_deg: T,
    /// Allowed deviation from 90 degrees between the two pairs of a room.
    pub perpendicular_tol_deg: T,
    pub min_separation: T,
    pub max_separation: T,
    /// A lone pair becomes a corridor when overlap >= this multiple of the
    /// separation.
    pub corridor_min_aspect: T,
}

impl<T: Real> Default for StructureConfig<T> {
    fn default() -> Self {
        StructureConfig {
            pair_angle_tol_deg: T::of(10.0),
            perpendicular_tol_deg: T::of(10.0),
            min_separation: T::of(0.5),
            max_separation: T::of(12.0),
            corridor_min_aspect: T::of(2.0),
        }
    }
}

/// Wall landmark projected to the horizontal plane: support line
/// `q . normal2 = offset` plus the projected extent corners.
struct WallFoot<T: Real> {
    id: LandmarkId,
    normal2: Vector2<T>,
    offset: T,
    corners: [Vector2<T>; 4],
    rep: Vector2<T>,
}

impl<T: Real> WallFoot<T> {
    fn interval_along(&self, dir: &Vector2<T>) -> (T, T) {
        let mut lo = self.corners[0].dot(dir);
        let mut hi = lo;
        for c in &self.corners[1..] {
            let t = c.dot(dir);
            lo = lo.minr(t);
            hi = hi.maxr(t);
        }
        (lo, hi)
    }
}

struct OpposingPair<T: Real> {
    walls: (usize, usize),
    /// Canonical in-pair direction (unit, sign-fixed).
    dir: Vector2<T>,
    separation: T,
    overlap: (T, T),
}

impl<T: Real> OpposingPair<T> {
    fn overlap_len(&self) -> T {
        (self.overlap.1 - self.overlap.0).maxr(T::zero())
    }
}

/// Horizontal orthonormal basis perpendicular to `up`.
fn horizontal_basis<T: Real>(up: &UnitVec3<T>) -> (Vector3<T>, Vector3<T>) {
    let seed = if up.x.abs() < T::of(0.9) {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = (seed - up.into_inner() * seed.dot(up))
        .try_normalize(T::of(1e-9))
        .expect("seed not parallel to up");
    let e2 = up.cross(&e1);
    (e1, e2)
}

fn project2<T: Real>(p: &Vector3<T>, e1: &Vector3<T>, e2: &Vector3<T>) -> Vector2<T> {
    Vector2::new(p.dot(e1), p.dot(e2))
}

fn canonical_dir<T: Real>(n2: &Vector2<T>) -> Vector2<T> {
    let dir = Vector2::new(-n2.y, n2.x);
    if dir.x < T::zero() || (dir.x == T::zero() && dir.y < T::zero()) {
        -dir
    } else {
        dir
    }
}

fn wall_footprints<T: Real>(
    graph: &SceneGraph<T>,
    e1: &Vector3<T>,
    e2: &Vector3<T>,
) -> Vec<WallFoot<T>> {
    graph
        .landmarks()
        .filter(|l| l.class == SemanticClass::Wall)
        .filter_map(|l| {
            let n2 = project2(&l.normal, e1, e2);
            let n2 = n2.try_normalize(T::of(0.7))?; // near-vertical walls only
            let corner3 = l.extent.corners();
            let corners = [
                project2(&corner3[0], e1, e2),
                project2(&corner3[1], e1, e2),
                project2(&corner3[2], e1, e2),
                project2(&corner3[3], e1, e2),
            ];
            let mut rep = Vector2::zeros();
            for c in &corners {
                rep += c;
            }
            rep /= T::of(4.0);
            // Plane {p : n . p + d = 0} restricted to the horizontal basis:
            // q . n2_raw = -d - (vertical part). Using the projected corner
            // centroid keeps the line anchored to the observed segment.
            let offset = rep.dot(&n2);
            Some(WallFoot {
                id: l.id,
                normal2: n2,
                offset,
                corners,
                rep,
            })
        })
        .collect()
}

fn opposing_pairs<T: Real>(
    walls: &[WallFoot<T>],
    config: &StructureConfig<T>,
) -> Vec<OpposingPair<T>> {
    let facing_cos = -config.pair_angle_tol_deg.radians().cos();
    let mut pairs = Vec::new();
    for i in 0..walls.len() {
        for j in (i + 1)..walls.len() {
            let (a, b) = (&walls[i], &walls[j]);
            if a.normal2.dot(&b.normal2) > facing_cos {
                continue; // not anti-parallel enough
            }
            // Inward-facing: each wall's normal points toward the other.
            let sep_ab = b.rep.dot(&a.normal2) - a.offset;
            let sep_ba = a.rep.dot(&b.normal2) - b.offset;
            if sep_ab <= T::zero() || sep_ba <= T::zero() {
                continue;
            }
            let separation = (sep_ab + sep_ba) / T::of(2.0);
            if separation < config.min_separation || separation > config.max_separation {
                continue;
            }
            let dir = canonical_dir(&a.normal2);
            let (alo, ahi) = a.interval_along(&dir);
            let (blo, bhi) = b.interval_along(&dir);
            let overlap = (alo.maxr(blo), ahi.minr(bhi));
            if overlap.1 <= overlap.0 {
                continue;
            }
            pairs.push(OpposingPair {
                walls: (i, j),
                dir,
                separation,
                overlap,
            });
        }
    }
    pairs
}

struct RoomCandidate<T: Real> {
    wall_indices: [usize; 4],
    footprint: Vec<Vector2<T>>,
    area: T,
    centroid: Vector2<T>,
}

fn room_candidates<T: Real>(
    walls: &[WallFoot<T>],
    pairs: &[OpposingPair<T>],
    config: &StructureConfig<T>,
) -> Vec<RoomCandidate<T>> {
    let perp_tol = config.perpendicular_tol_deg.radians();
    let quarter = T::frac_pi_2();
    let mut rooms = Vec::new();
    for p in 0..pairs.len() {
        for q in (p + 1)..pairs.len() {
            let (pa, pb) = (&pairs[p], &pairs[q]);
            let set = [pa.walls.0, pa.walls.1, pb.walls.0, pb.walls.1];
            if set[0] == set[2] || set[0] == set[3] || set[1] == set[2] || set[1] == set[3] {
                continue;
            }
            let angle = pa.dir.dot(&pb.dir).abs().clampr(T::zero(), T::one()).acos();
            if (quarter - angle).abs() > perp_tol {
                continue;
            }
            // Quadrilateral of the four support lines, walked so consecutive
            // corners share a line.
            let (a1, a2) = (&walls[pa.walls.0], &walls[pa.walls.1]);
            let (b1, b2) = (&walls[pb.walls.0], &walls[pb.walls.1]);
            let corners = [
                line_intersection(a1.normal2, a1.offset, b1.normal2, b1.offset),
                line_intersection(b1.normal2, b1.offset, a2.normal2, a2.offset),
                line_intersection(a2.normal2, a2.offset, b2.normal2, b2.offset),
                line_intersection(b2.normal2, b2.offset, a1.normal2, a1.offset),
            ];
            if corners.iter().any(|c| c.is_none()) {
                continue;
            }
            let footprint: Vec<Vector2<T>> = corners.into_iter().map(|c| c.unwrap()).collect();

            // Every wall segment must intersect its footprint edge.
            let edges = [
                (a1, footprint[3], footprint[0]),
                (b1, footprint[0], footprint[1]),
                (a2, footprint[1], footprint[2]),
                (b2, footprint[2], footprint[3]),
            ];
            let mut supported = true;
            for (wall, c0, c1) in edges {
                let dir = canonical_dir(&wall.normal2);
                let (wlo, whi) = wall.interval_along(&dir);
                let (e0, e1v) = (c0.dot(&dir), c1.dot(&dir));
                let (elo, ehi) = (e0.minr(e1v), e0.maxr(e1v));
                if whi.minr(ehi) <= wlo.maxr(elo) {
                    supported = false;
                    break;
                }
            }
            if !supported {
                continue;
            }
            let area = polygon_area(&footprint);
            if area <= T::zero() {
                continue;
            }
            let mut centroid = Vector2::zeros();
            for c in &footprint {
                centroid += c;
            }
            centroid /= T::of(4.0);
            rooms.push(RoomCandidate {
                wall_indices: set,
                footprint,
                area,
                centroid,
            });
        }
    }
    rooms
}

/// Infers rooms and corridors from the wall/ground landmark layout with the
/// default thresholds.
pub fn infer_structures<T: Real>(
    graph: &SceneGraph<T>,
    gravity_up: &UnitVec3<T>,
) -> Vec<StructureNode<T>> {
    infer_structures_with(graph, gravity_up, &StructureConfig::default())
}

pub fn infer_structures_with<T: Real>(
    graph: &SceneGraph<T>,
    gravity_up: &UnitVec3<T>,
    config: &StructureConfig<T>,
) -> Vec<StructureNode<T>> {
    let (e1, e2) = horizontal_basis(gravity_up);
    let walls = wall_footprints(graph, &e1, &e2);
    if walls.len() < 2 {
        return Vec::new();
    }
    let pairs = opposing_pairs(&walls, config);

    // Rooms first, smallest footprint wins; each wall joins at most one room.
    let mut rooms = room_candidates(&walls, &pairs, config);
    rooms.sort_by(|a, b| {
        a.area
            .partial_cmp(&b.area)
            .expect("finite areas")
            .then(a.centroid.x.partial_cmp(&b.centroid.x).unwrap())
            .then(a.centroid.y.partial_cmp(&b.centroid.y).unwrap())
    });
    let mut used = vec![false; walls.len()];
    let mut nodes: Vec<StructureNode<T>> = Vec::new();
    for room in rooms {
        if room.wall_indices.iter().any(|&w| used[w]) {
            continue;
        }
        for &w in &room.wall_indices {
            used[w] = true;
        }
        let mut wall_ids: Vec<LandmarkId> =
            room.wall_indices.iter().map(|&w| walls[w].id).collect();
        wall_ids.sort();
        nodes.push(StructureNode {
            kind: StructureKind::Room,
            wall_ids,
            ground_id: None,
            footprint: room.footprint,
        });
    }

    // Corridors from the remaining elongated pairs, longest overlap first.
    let mut corridor_pairs: Vec<&OpposingPair<T>> = pairs
        .iter()
        .filter(|p| p.overlap_len() >= config.corridor_min_aspect * p.separation)
        .collect();
    corridor_pairs.sort_by(|a, b| {
        b.overlap_len()
            .partial_cmp(&a.overlap_len())
            .expect("finite overlaps")
            .then(a.separation.partial_cmp(&b.separation).unwrap())
    });
    for pair in corridor_pairs {
        let (i, j) = pair.walls;
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        let wall = &walls[i];
        let anchor = wall.normal2 * wall.offset;
        let p1 = anchor + pair.dir * pair.overlap.0;
        let p2 = anchor + pair.dir * pair.overlap.1;
        let p3 = p2 - wall.normal2 * pair.separation;
        let p4 = p1 - wall.normal2 * pair.separation;
        let mut wall_ids = vec![walls[i].id, walls[j].id];
        wall_ids.sort();
        nodes.push(StructureNode {
            kind: StructureKind::Corridor,
            wall_ids,
            ground_id: None,
            footprint: vec![p1, p2, p3, p4],
        });
    }

    // Attach the largest overlapping ground landmark to each structure.
    let grounds: Vec<&PlaneLandmark<T>> = graph
        .landmarks()
        .filter(|l| l.class == SemanticClass::Ground)
        .collect();
    for node in &mut nodes {
        let mut best: Option<(T, LandmarkId)> = None;
        for ground in &grounds {
            let quad: Vec<Vector2<T>> = ground
                .extent
                .corners()
                .iter()
                .map(|c| project2(c, &e1, &e2))
                .collect();
            if !convex_polygons_overlap(&node.footprint, &quad) {
                continue;
            }
            let area = ground.extent.area();
            if best.is_none_or(|(a, _)| area > a) {
                best = Some((area, ground.id));
            }
        }
        node.ground_id = best.map(|(_, id)| id);
    }

    nodes
}
