//! Desk-scale parallel-beam tomography: a rasterized head phantom, an exact
//! ray-traced projection matrix, and the per-view block problem.
//!
//! Geometry conventions (fixed so row counts are deterministic):
//!
//! * the image occupies the square `[0, g] x [0, g]` in pixel units, pixel
//!   `(row, col)` of the row-major image being the unit square whose lower
//!   left corner is `(col, g - 1 - row)` — row 0 is the top of the picture;
//! * view `v` of `V` looks along the unit direction `(cos a, sin a)` with
//!   `a = v * pi / V`, so the views sweep half a turn;
//! * the rays of a view are spaced evenly across the circumscribed width
//!   `g * sqrt(2)`, centered on the image center; offsets sit at ray-cell
//!   midpoints, `t_j = ((j + 0.5) / R - 0.5) * g * sqrt(2)`.
//!
//! Matrix entries are exact ray/pixel intersection lengths from a
//! breakpoint-walk traversal, so each row of an axis-aligned view sums to
//! the chord length `g`. Rays that miss the image are dropped. The sinogram
//! is defined as `b = A x_true`, which makes the system consistent by
//! construction.

use std::sync::Arc;

use esam_core::linear::{
    assemble_simultaneous, CsrMatrix, LambdaStrategy, LinearBlockProblem, MatrixStorage,
};
use esam_core::{AveragedOperator, ProblemContext};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Ellipse {
    pub center: (f64, f64),
    pub semi_axes: (f64, f64),
    /// Rotation of the first semi-axis against the x-axis, degrees.
    pub angle_deg: f64,
    /// Added to every pixel whose center the ellipse contains.
    pub intensity: f64,
}

impl Ellipse {
    pub fn contains(&self, u: f64, v: f64) -> bool {
        let (dx, dy) = (u - self.center.0, v - self.center.1);
        let phi = self.angle_deg.to_radians();
        let (sin, cos) = (phi.sin(), phi.cos());
        let xr = dx * cos + dy * sin;
        let yr = -dx * sin + dy * cos;
        let (a, b) = self.semi_axes;
        (xr / a) * (xr / a) + (yr / b) * (yr / b) <= 1.0
    }
}

/// The ten-ellipse "modified Shepp-Logan" head table (Toft's variant with
/// the raised feature contrasts), in normalized `[-1, 1]^2` coordinates.
/// Summed intensities stay inside `[0, 1]`: skull 1.0, brain 0.2,
/// ventricles 0.0, small features 0.3.
pub fn head_phantom() -> Vec<Ellipse> {
    let e = |cx: f64, cy: f64, a: f64, b: f64, deg: f64, add: f64| Ellipse {
        center: (cx, cy),
        semi_axes: (a, b),
        angle_deg: deg,
        intensity: add,
    };
    vec![
        e(0.0, 0.0, 0.69, 0.92, 0.0, 1.0),
        e(0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8),
        e(0.22, 0.0, 0.11, 0.31, -18.0, -0.2),
        e(-0.22, 0.0, 0.16, 0.41, 18.0, -0.2),
        e(0.0, 0.35, 0.21, 0.25, 0.0, 0.1),
        e(0.0, 0.1, 0.046, 0.046, 0.0, 0.1),
        e(0.0, -0.1, 0.046, 0.046, 0.0, 0.1),
        e(-0.08, -0.605, 0.046, 0.023, 0.0, 0.1),
        e(0.0, -0.605, 0.023, 0.023, 0.0, 0.1),
        e(0.06, -0.605, 0.023, 0.046, 0.0, 0.1),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    pub grid: usize,
    pub ellipses: Vec<Ellipse>,
    pub views: usize,
    pub rays_per_view: usize,
}

impl PhantomSpec {
    /// The default experiment: 63x63 head phantom, 16 views, 99 rays each.
    pub fn head_default() -> Self {
        PhantomSpec {
            grid: 63,
            ellipses: head_phantom(),
            views: 16,
            rays_per_view: 99,
        }
    }

    pub fn with_geometry(grid: usize, views: usize, rays_per_view: usize) -> Self {
        PhantomSpec {
            grid,
            ellipses: head_phantom(),
            views,
            rays_per_view,
        }
    }

    /// Projection-problem validity. Rasterization alone accepts any
    /// positive grid (tiny grids are handy in tests); building a projector
    /// insists on a picture-sized one.
    pub fn validate(&self) -> Result<()> {
        if self.grid < 8 {
            return Err(Error::ConfigValue(format!(
                "phantom grid {} is below the minimum of 8",
                self.grid
            )));
        }
        if self.views == 0 || self.rays_per_view == 0 {
            return Err(Error::ConfigValue(
                "phantom needs at least one view and one ray".into(),
            ));
        }
        for (k, e) in self.ellipses.iter().enumerate() {
            let finite = e.center.0.is_finite()
                && e.center.1.is_finite()
                && e.semi_axes.0.is_finite()
                && e.semi_axes.1.is_finite()
                && e.angle_deg.is_finite()
                && e.intensity.is_finite();
            if !finite || e.semi_axes.0 <= 0.0 || e.semi_axes.1 <= 0.0 {
                return Err(Error::ConfigValue(format!(
                    "phantom ellipse {k} has degenerate parameters"
                )));
            }
        }
        Ok(())
    }

    fn is_default_geometry(&self) -> bool {
        self.grid == 63 && self.views == 16 && self.rays_per_view == 99
    }
}

/// Retained-row band asserted for the default geometry; the exact count
/// depends on ray-placement conventions, but it must stay in the same
/// regime as the reference matrix (1376 rows).
pub const DEFAULT_ROW_BAND: (usize, usize) = (1300, 1584);

pub struct RasterizedPhantom {
    /// Row-major `grid * grid` pixel values in `[0, 1]`.
    pub image: Vec<f64>,
    /// Pixels whose ellipse sum left `[0, 1]` by more than accumulation
    /// dust and was clamped. (Cancelling intensities like `1 - 0.8 - 0.2`
    /// land within an ulp of the range ends; those snap silently.)
    pub clamped_pixels: usize,
}

/// Paint the phantom: each pixel takes the sum of the intensities of the
/// ellipses containing its center, clamped to `[0, 1]`.
pub fn rasterize_phantom(spec: &PhantomSpec) -> Result<RasterizedPhantom> {
    const DUST: f64 = 1e-12;
    let g = spec.grid;
    if g == 0 {
        return Err(Error::ConfigValue("phantom grid must be positive".into()));
    }
    let mut image = Vec::with_capacity(g * g);
    let mut clamped_pixels = 0;
    for r in 0..g {
        let v = 1.0 - 2.0 * (r as f64 + 0.5) / g as f64;
        for c in 0..g {
            let u = 2.0 * (c as f64 + 0.5) / g as f64 - 1.0;
            let sum: f64 = spec
                .ellipses
                .iter()
                .filter(|e| e.contains(u, v))
                .map(|e| e.intensity)
                .sum();
            let value = sum.clamp(0.0, 1.0);
            if (value - sum).abs() > DUST {
                clamped_pixels += 1;
            }
            image.push(value);
        }
    }
    Ok(RasterizedPhantom {
        image,
        clamped_pixels,
    })
}

/// A fully assembled scan: image, sparse projector, consistent sinogram,
/// and the view index of every retained row.
#[derive(Debug)]
pub struct TomographyProblem {
    pub grid: usize,
    pub views: usize,
    pub rays_per_view: usize,
    pub angles: Vec<f64>,
    pub x_true: Vec<f64>,
    pub matrix: MatrixStorage<f64>,
    pub rhs: Vec<f64>,
    pub row_views: Vec<usize>,
    pub clamped_pixels: usize,
}

/// Trace every ray of every view through the pixel grid and assemble the
/// sparse system `A x_true = b`. Rows that miss the image are dropped; for
/// the default geometry the retained count is checked against
/// [`DEFAULT_ROW_BAND`].
pub fn build_projection_matrix(spec: &PhantomSpec) -> Result<TomographyProblem> {
    spec.validate()?;
    let raster = rasterize_phantom(spec)?;
    if raster.clamped_pixels > 0 {
        eprintln!(
            "warning: {} phantom pixels fell outside [0, 1] and were clamped",
            raster.clamped_pixels
        );
    }
    let g = spec.grid;
    let span = g as f64 * 2.0f64.sqrt();
    let center = g as f64 / 2.0;

    let angles: Vec<f64> = (0..spec.views)
        .map(|v| v as f64 * std::f64::consts::PI / spec.views as f64)
        .collect();

    let mut indptr = vec![0usize];
    let mut indices = Vec::new();
    let mut data = Vec::new();
    let mut row_views = Vec::new();
    for (view, &angle) in angles.iter().enumerate() {
        let dir = (angle.cos(), angle.sin());
        let perp = (-angle.sin(), angle.cos());
        for j in 0..spec.rays_per_view {
            let t = ((j as f64 + 0.5) / spec.rays_per_view as f64 - 0.5) * span;
            let origin = (center + t * perp.0, center + t * perp.1);
            let mut hits = trace_ray(g, origin, dir);
            if hits.is_empty() {
                continue;
            }
            hits.sort_by_key(|&(pixel, _)| pixel);
            for (pixel, len) in hits {
                indices.push(pixel);
                data.push(len);
            }
            indptr.push(indices.len());
            row_views.push(view);
        }
    }

    let nrows = row_views.len();
    if spec.is_default_geometry() && !(DEFAULT_ROW_BAND.0..=DEFAULT_ROW_BAND.1).contains(&nrows) {
        return Err(Error::RowCountOutOfBand {
            rows: nrows,
            lo: DEFAULT_ROW_BAND.0,
            hi: DEFAULT_ROW_BAND.1,
        });
    }
    let matrix = MatrixStorage::Csr(CsrMatrix::new(nrows, g * g, indptr, indices, data)?);
    let rhs = matrix.matvec(&raster.image);
    Ok(TomographyProblem {
        grid: g,
        views: spec.views,
        rays_per_view: spec.rays_per_view,
        angles,
        x_true: raster.image,
        matrix,
        rhs,
        row_views,
        clamped_pixels: raster.clamped_pixels,
    })
}

/// Intersection lengths of the line `origin + s * dir` (unit `dir`) with
/// the cells of the `g x g` grid, as `(flattened pixel, length)` pairs.
/// Breakpoints are the entry/exit parameters plus every interior grid-line
/// crossing; each surviving segment's midpoint names its pixel.
fn trace_ray(g: usize, origin: (f64, f64), dir: (f64, f64)) -> Vec<(usize, f64)> {
    const EPS: f64 = 1e-12;
    let side = g as f64;
    let mut s_lo = f64::NEG_INFINITY;
    let mut s_hi = f64::INFINITY;
    for (p, d) in [(origin.0, dir.0), (origin.1, dir.1)] {
        if d.abs() > EPS {
            let (a, b) = ((0.0 - p) / d, (side - p) / d);
            s_lo = s_lo.max(a.min(b));
            s_hi = s_hi.min(a.max(b));
        } else if p <= 0.0 || p >= side {
            return Vec::new();
        }
    }
    if s_hi - s_lo <= EPS {
        return Vec::new();
    }

    let mut breaks = vec![s_lo, s_hi];
    for (p, d) in [(origin.0, dir.0), (origin.1, dir.1)] {
        if d.abs() > EPS {
            for k in 1..g {
                let s = (k as f64 - p) / d;
                if s > s_lo + EPS && s < s_hi - EPS {
                    breaks.push(s);
                }
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));

    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        if len <= EPS {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let x = origin.0 + mid * dir.0;
        let y = origin.1 + mid * dir.1;
        let ix = (x.floor() as isize).clamp(0, g as isize - 1) as usize;
        let iy = (y.floor() as isize).clamp(0, g as isize - 1) as usize;
        out.push(((g - 1 - iy) * g + ix, len));
    }
    out
}

/// One block per view, Cimmino weights inside each block, residual-
/// minimizing relaxation, and one length-one string per block with weights
/// `1/views` — the image-reconstruction configuration.
pub struct TomographySetup {
    pub problem: Arc<LinearBlockProblem<f64>>,
    pub operator: AveragedOperator<f64>,
    pub context: ProblemContext<f64>,
    pub x_true: Vec<f64>,
}

pub fn block_by_view(scan: TomographyProblem) -> Result<TomographySetup> {
    let mut blocks = vec![Vec::new(); scan.views];
    for (row, &view) in scan.row_views.iter().enumerate() {
        blocks[view].push(row);
    }
    if let Some(view) = blocks.iter().position(Vec::is_empty) {
        return Err(Error::EmptyView { view });
    }
    let problem = Arc::new(LinearBlockProblem::with_cimmino_weights(
        scan.matrix,
        scan.rhs,
        blocks,
        LambdaStrategy::ResidualMinimizing,
    )?);
    let operator = assemble_simultaneous(&problem)?;
    let for_violation = Arc::clone(&problem);
    let context = ProblemContext::new(move |x: &[f64]| for_violation.relative_residual(x))
        .with_reference(scan.x_true.clone());
    Ok(TomographySetup {
        problem,
        operator,
        context,
        x_true: scan.x_true,
    })
}
