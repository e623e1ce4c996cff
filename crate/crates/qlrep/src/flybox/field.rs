//! Food fields, geometric contexts, and exact conditional sampling.
//!
//! A food field is a normalized density on the unit square or the unit
//! disc. Conditioning on a region is done exactly: the density is cut into
//! weighted pieces clipped to the region, a piece is chosen by cumulative
//! weight, and the position is drawn inside the piece by inverse transform.
//! No rejection loops, so every draw costs the same number of RNG calls.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Shape of the box holding the flies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Unit square `[0, 1] x [0, 1]`.
    Square,
    /// Unit disc centered at the origin.
    Disc,
}

/// Declarative field description as it appears in scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Constant density over the whole geometry.
    Uniform,
    /// Square only: piecewise-constant density on a rectangular grid.
    /// `weights[0]` is the bottom row of cells (y near 0); weights are
    /// normalized internally.
    Grid { weights: Vec<Vec<f64>> },
    /// Disc only: density `sin(theta - reference_angle)` on the half disc
    /// `reference_angle <= theta < reference_angle + pi`, zero elsewhere.
    SectorSine { reference_angle: f64 },
}

/// A validated, normalized field bound to its geometry.
#[derive(Clone, Debug)]
pub enum FoodField {
    SquareGrid(GridField),
    DiscUniform,
    DiscSectorSine { reference_angle: f64 },
}

impl FoodField {
    /// Resolve a declarative spec against a geometry.
    pub fn from_spec(geometry: Geometry, spec: &FieldSpec) -> Result<Self, SimError> {
        match (geometry, spec) {
            (Geometry::Square, FieldSpec::Uniform) => {
                // A uniform layout is resolution independent, so one cell
                // suffices.
                Ok(FoodField::SquareGrid(GridField::uniform(1)))
            }
            (Geometry::Square, FieldSpec::Grid { weights }) => {
                Ok(FoodField::SquareGrid(GridField::new(weights.clone())?))
            }
            (Geometry::Disc, FieldSpec::Uniform) => Ok(FoodField::DiscUniform),
            (Geometry::Disc, FieldSpec::SectorSine { reference_angle }) => {
                if !reference_angle.is_finite() {
                    return Err(SimError::InvalidField(
                        "sector-sine reference angle must be finite".into(),
                    ));
                }
                Ok(FoodField::DiscSectorSine {
                    reference_angle: *reference_angle,
                })
            }
            (Geometry::Square, FieldSpec::SectorSine { .. }) => Err(SimError::InvalidField(
                "sector-sine fields live on the disc, not the square".into(),
            )),
            (Geometry::Disc, FieldSpec::Grid { .. }) => Err(SimError::InvalidField(
                "grid fields live on the square, not the disc".into(),
            )),
        }
    }

    pub fn geometry(&self) -> Geometry {
        match self {
            FoodField::SquareGrid(_) => Geometry::Square,
            FoodField::DiscUniform | FoodField::DiscSectorSine { .. } => Geometry::Disc,
        }
    }
}

/// Piecewise-constant density on a `rows x cols` grid over the unit square.
#[derive(Clone, Debug)]
pub struct GridField {
    rows: usize,
    cols: usize,
    /// Normalized cell masses, row-major with row 0 at the bottom.
    weights: Vec<f64>,
}

impl GridField {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, SimError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(SimError::InvalidField("grid must be non-empty".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(SimError::InvalidField(
                "grid rows must all have the same length".into(),
            ));
        }
        let mut weights = Vec::with_capacity(rows.len() * cols);
        for row in &rows {
            for &w in row {
                if !w.is_finite() || w < 0.0 {
                    return Err(SimError::InvalidField(format!(
                        "grid weights must be finite and nonnegative, got {w}"
                    )));
                }
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(SimError::InvalidField(
                "grid weights must not all be zero".into(),
            ));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            weights,
        })
    }

    /// Equal mass in every cell of a `resolution x resolution` grid.
    pub fn uniform(resolution: usize) -> Self {
        let n = resolution.max(1);
        Self {
            rows: n,
            cols: n,
            weights: vec![1.0 / (n * n) as f64; n * n],
        }
    }

    fn cell_rect(&self, idx: usize) -> (f64, f64, f64, f64) {
        let ix = idx % self.cols;
        let iy = idx / self.cols;
        (
            ix as f64 / self.cols as f64,
            (ix + 1) as f64 / self.cols as f64,
            iy as f64 / self.rows as f64,
            (iy + 1) as f64 / self.rows as f64,
        )
    }
}

/// A region of the geometry with positive area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    /// Axis-aligned rectangle inside the unit square.
    Rect { x: [f64; 2], y: [f64; 2] },
    /// Angular sector of the disc: `start <= theta < start + span`.
    Sector { start: f64, span: f64 },
}

impl Region {
    pub(crate) fn validate(&self, geometry: Geometry) -> Result<(), SimError> {
        match (self, geometry) {
            (Region::Rect { x, y }, Geometry::Square) => {
                for &[lo, hi] in [x, y] {
                    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi && hi <= 1.0) {
                        return Err(SimError::InvalidScenario(format!(
                            "rectangle bounds [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1"
                        )));
                    }
                }
                Ok(())
            }
            (Region::Sector { start, span }, Geometry::Disc) => {
                if !start.is_finite() || !span.is_finite() || *span <= 0.0 || *span > TAU {
                    return Err(SimError::InvalidScenario(format!(
                        "sector span {span} must lie in (0, 2*pi]"
                    )));
                }
                Ok(())
            }
            (Region::Rect { .. }, Geometry::Disc) => Err(SimError::InvalidScenario(
                "rectangular regions do not fit the disc geometry".into(),
            )),
            (Region::Sector { .. }, Geometry::Square) => Err(SimError::InvalidScenario(
                "sector regions do not fit the square geometry".into(),
            )),
        }
    }

    pub fn contains(&self, p: Position) -> bool {
        match self {
            Region::Rect { x, y } => {
                p.x >= x[0] && p.x <= x[1] && p.y >= y[0] && p.y <= y[1]
            }
            Region::Sector { start, span } => (p.angle() - start).rem_euclid(TAU) < *span,
        }
    }
}

/// A sampled fly position in Cartesian coordinates. Square positions lie in
/// `[0, 1]^2`; disc positions lie in the radius-1 disc around the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self {
            x: r * theta.cos(),
            y: r * theta.sin(),
        }
    }

    /// Polar angle in `[0, 2*pi)`.
    pub fn angle(&self) -> f64 {
        self.y.atan2(self.x).rem_euclid(TAU)
    }
}

/// Split a sector into non-wrapping intervals within `[0, 2*pi)`.
fn sector_intervals(start: f64, span: f64) -> Vec<(f64, f64)> {
    let s = start.rem_euclid(TAU);
    let e = s + span;
    if e <= TAU {
        vec![(s, e)]
    } else {
        vec![(s, TAU), (0.0, e - TAU)]
    }
}

fn intervals_overlap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            total += (a1.min(b1) - a0.max(b0)).max(0.0);
        }
    }
    total
}

/// Inverse CDF of the density `sin(x)` restricted to `[x0, x1]` inside
/// `[0, pi]`; `u = 1/2` on the full interval gives `pi / 2`.
fn invert_sine_cdf(x0: f64, x1: f64, u: f64) -> f64 {
    let c0 = x0.cos();
    let c1 = x1.cos();
    (c0 - u * (c0 - c1)).clamp(-1.0, 1.0).acos()
}

#[derive(Clone, Copy, Debug)]
enum PieceShape {
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    UniformArc { start: f64, end: f64 },
    /// Offsets `x0 <= x < x1` (within `[0, pi]`) measured from `origin`;
    /// density `sin(x)`.
    SineArc { origin: f64, x0: f64, x1: f64 },
}

/// Draws i.i.d. positions from a field conditioned on a context region.
#[derive(Clone, Debug)]
pub struct Sampler {
    pieces: Vec<PieceShape>,
    cumulative: Vec<f64>,
}

impl Sampler {
    /// Decompose `field` restricted to `context` into sampling pieces. An
    /// empty context means the whole geometry.
    pub fn new(field: &FoodField, context: &[Region]) -> Result<Self, SimError> {
        for region in context {
            region.validate(field.geometry())?;
        }
        check_disjoint(context)?;

        let mut pieces = Vec::new();
        let mut weights = Vec::new();
        match field {
            FoodField::SquareGrid(grid) => {
                let rects: Vec<(f64, f64, f64, f64)> = if context.is_empty() {
                    vec![(0.0, 1.0, 0.0, 1.0)]
                } else {
                    context
                        .iter()
                        .map(|r| match r {
                            Region::Rect { x, y } => (x[0], x[1], y[0], y[1]),
                            Region::Sector { .. } => unreachable!("validated above"),
                        })
                        .collect()
                };
                for (idx, &w) in grid.weights.iter().enumerate() {
                    if w <= 0.0 {
                        continue;
                    }
                    let (cx0, cx1, cy0, cy1) = grid.cell_rect(idx);
                    let cell_area = (cx1 - cx0) * (cy1 - cy0);
                    for &(rx0, rx1, ry0, ry1) in &rects {
                        let x0 = cx0.max(rx0);
                        let x1 = cx1.min(rx1);
                        let y0 = cy0.max(ry0);
                        let y1 = cy1.min(ry1);
                        if x1 > x0 && y1 > y0 {
                            pieces.push(PieceShape::Rect { x0, x1, y0, y1 });
                            weights.push(w * (x1 - x0) * (y1 - y0) / cell_area);
                        }
                    }
                }
            }
            FoodField::DiscUniform => {
                for (s, e) in context_arcs(context) {
                    if e > s {
                        pieces.push(PieceShape::UniformArc { start: s, end: e });
                        weights.push(e - s);
                    }
                }
            }
            FoodField::DiscSectorSine { reference_angle } => {
                let origin = reference_angle.rem_euclid(TAU);
                // Support arcs with their offsets from the origin angle.
                let support: Vec<(f64, f64, f64)> = if origin + PI <= TAU {
                    vec![(origin, origin + PI, 0.0)]
                } else {
                    vec![(origin, TAU, 0.0), (0.0, origin + PI - TAU, TAU - origin)]
                };
                for (a, b) in context_arcs(context) {
                    for &(sa, sb, base) in &support {
                        let lo = a.max(sa);
                        let hi = b.min(sb);
                        if hi > lo {
                            let x0 = (base + (lo - sa)).min(PI);
                            let x1 = (base + (hi - sa)).min(PI);
                            pieces.push(PieceShape::SineArc { origin, x0, x1 });
                            weights.push((x0.cos() - x1.cos()) / 2.0);
                        }
                    }
                }
            }
        }

        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(SimError::ZeroMeasureContext);
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w / total;
            cumulative.push(acc);
        }
        *cumulative.last_mut().expect("at least one piece") = 1.0;
        Ok(Self { pieces, cumulative })
    }

    /// Draw one position; always consumes exactly three RNG values.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        let u: f64 = rng.gen();
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.pieces.len() - 1);
        match self.pieces[idx] {
            PieceShape::Rect { x0, x1, y0, y1 } => Position {
                x: x0 + (x1 - x0) * rng.gen::<f64>(),
                y: y0 + (y1 - y0) * rng.gen::<f64>(),
            },
            PieceShape::UniformArc { start, end } => {
                let theta = start + (end - start) * rng.gen::<f64>();
                Position::from_polar(rng.gen::<f64>().sqrt(), theta)
            }
            PieceShape::SineArc { origin, x0, x1 } => {
                let theta = origin + invert_sine_cdf(x0, x1, rng.gen());
                Position::from_polar(rng.gen::<f64>().sqrt(), theta)
            }
        }
    }
}

fn context_arcs(context: &[Region]) -> Vec<(f64, f64)> {
    if context.is_empty() {
        return vec![(0.0, TAU)];
    }
    context
        .iter()
        .flat_map(|r| match r {
            Region::Sector { start, span } => sector_intervals(*start, *span),
            Region::Rect { .. } => unreachable!("validated before arc extraction"),
        })
        .collect()
}

fn check_disjoint(context: &[Region]) -> Result<(), SimError> {
    for (i, a) in context.iter().enumerate() {
        for b in context.iter().skip(i + 1) {
            let overlap = match (a, b) {
                (Region::Rect { x: ax, y: ay }, Region::Rect { x: bx, y: by }) => {
                    (ax[1].min(bx[1]) - ax[0].max(bx[0])).max(0.0)
                        * (ay[1].min(by[1]) - ay[0].max(by[0])).max(0.0)
                }
                (
                    Region::Sector { start: s1, span: p1 },
                    Region::Sector { start: s2, span: p2 },
                ) => intervals_overlap(&sector_intervals(*s1, *p1), &sector_intervals(*s2, *p2)),
                _ => 0.0,
            };
            if overlap > 0.0 {
                return Err(SimError::InvalidScenario(
                    "context regions must not overlap".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Draw `n` i.i.d. positions from `field` conditioned on `context`,
/// deterministically in `seed`.
pub fn sample_flies(
    field: &FoodField,
    context: &[Region],
    n: u64,
    seed: u64,
) -> Result<Vec<Position>, SimError> {
    let sampler = Sampler::new(field, context)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
}
