//! Centers, sample points and boundary points on intervals and planar domains.

use std::f64::consts::{PI, TAU};

use crate::error::{invalid, Error, Result};

/// What a set of nodes is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeRole {
    Center,
    InteriorSample,
    BoundarySample,
}

/// A set of points in R^1 or R^2, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    dim: usize,
    coords: Vec<f64>,
    role: NodeRole,
}

impl NodeSet {
    pub fn new(dim: usize, coords: Vec<f64>, role: NodeRole) -> Result<Self> {
        if !matches!(dim, 1 | 2) {
            return Err(invalid(format!("node dimension must be 1 or 2, got {dim}")));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(invalid(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("node coordinates must be finite"));
        }
        Ok(NodeSet { dim, coords, role })
    }

    pub fn from_points_1d(points: Vec<f64>, role: NodeRole) -> Result<Self> {
        NodeSet::new(1, points, role)
    }

    pub fn from_points_2d(points: &[[f64; 2]], role: NodeRole) -> Result<Self> {
        NodeSet::new(2, points.iter().flatten().copied().collect(), role)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self) -> NodeRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn with_role(mut self, role: NodeRole) -> Self {
        self.role = role;
        self
    }

    /// Reorders the points by `perm`, where `perm[i]` is the old index of new point `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(invalid("permutation length does not match the node count"));
        }
        let mut seen = vec![false; perm.len()];
        let mut coords = Vec::with_capacity(self.coords.len());
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(invalid("not a permutation"));
            }
            coords.extend_from_slice(self.point(p));
        }
        Ok(NodeSet { dim: self.dim, coords, role: self.role })
    }
}

/// A one-dimensional domain `[a, b]` together with the extension interval `[-T, T]`
/// that holds the centers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
    extension: f64,
}

impl Interval {
    /// Requires `[a, b] ⊂ (-T, T)`.
    pub fn new(a: f64, b: f64, extension: f64) -> Result<Self> {
        let iv = Interval::with_confined_centers(a, b, extension)?;
        if !(iv.radius() < extension) {
            return Err(invalid(format!(
                "domain [{a}, {b}] must lie strictly inside (-{extension}, {extension})"
            )));
        }
        Ok(iv)
    }

    /// Like [`Interval::new`] but allows `T = B`, i.e. every center inside the domain.
    /// Only useful for demonstrating what goes wrong without exterior centers.
    pub fn with_confined_centers(a: f64, b: f64, extension: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("interval needs a < b, got [{a}, {b}]")));
        }
        if !(extension > 0.0) {
            return Err(invalid(format!("extension half-width must be positive, got {extension}")));
        }
        let iv = Interval { a, b, extension };
        if iv.radius() > extension {
            return Err(invalid(format!(
                "domain [{a}, {b}] does not fit in [-{extension}, {extension}]"
            )));
        }
        Ok(iv)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Extension half-width `T`.
    pub fn extension(&self) -> f64 {
        self.extension
    }

    /// `B = max |x|` over the domain.
    pub fn radius(&self) -> f64 {
        self.a.abs().max(self.b.abs())
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }
}

/// Closed curve `θ ↦ (x(θ), y(θ))` given by truncated Fourier series,
/// `x(θ) = Σ_k x_cos[k] cos kθ + x_sin[k] sin kθ` and likewise for `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCurve {
    x_cos: Vec<f64>,
    x_sin: Vec<f64>,
    y_cos: Vec<f64>,
    y_sin: Vec<f64>,
    outline: Vec<[f64; 2]>,
}

// Resolution of the polygon used for containment tests.
const CURVE_POLYGON: usize = 4096;

impl FourierCurve {
    pub fn new(x_cos: Vec<f64>, x_sin: Vec<f64>, y_cos: Vec<f64>, y_sin: Vec<f64>) -> Result<Self> {
        let all = [&x_cos, &x_sin, &y_cos, &y_sin];
        if all.iter().all(|c| c.is_empty()) {
            return Err(invalid("parametric boundary needs at least one coefficient"));
        }
        if all.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(invalid("parametric boundary coefficients must be finite"));
        }
        let mut curve = FourierCurve { x_cos, x_sin, y_cos, y_sin, outline: Vec::new() };
        curve.outline = curve.polygon(CURVE_POLYGON);
        Ok(curve)
    }

    /// The common symmetric form `x = Σ a_k cos kθ`, `y = Σ b_k sin kθ`.
    pub fn symmetric(x_cos: Vec<f64>, y_sin: Vec<f64>) -> Result<Self> {
        FourierCurve::new(x_cos, Vec::new(), Vec::new(), y_sin)
    }

    /// Star-shaped curve `r(θ) = 1 + amplitude·cos(lobes·θ)`.
    pub fn star(amplitude: f64, lobes: usize) -> Result<Self> {
        if lobes == 0 {
            return Err(invalid("a star needs at least one lobe"));
        }
        // r cos θ = cos θ + (a/2)(cos (k-1)θ + cos (k+1)θ), and similarly for sin.
        let mut x_cos = vec![0.0; lobes + 2];
        let mut y_sin = vec![0.0; lobes + 2];
        x_cos[1] += 1.0;
        y_sin[1] += 1.0;
        x_cos[lobes + 1] += amplitude / 2.0;
        y_sin[lobes + 1] += amplitude / 2.0;
        let k = lobes as isize - 1;
        x_cos[k.unsigned_abs()] += amplitude / 2.0;
        y_sin[k.unsigned_abs()] -= amplitude / 2.0 * k.signum() as f64;
        FourierCurve::symmetric(x_cos, y_sin)
    }

    pub fn x_cos(&self) -> &[f64] {
        &self.x_cos
    }

    pub fn x_sin(&self) -> &[f64] {
        &self.x_sin
    }

    pub fn y_cos(&self) -> &[f64] {
        &self.y_cos
    }

    pub fn y_sin(&self) -> &[f64] {
        &self.y_sin
    }

    fn series(cos: &[f64], sin: &[f64], theta: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut dv = 0.0;
        for (k, c) in cos.iter().enumerate() {
            let kf = k as f64;
            v += c * (kf * theta).cos();
            dv -= c * kf * (kf * theta).sin();
        }
        for (k, s) in sin.iter().enumerate() {
            let kf = k as f64;
            v += s * (kf * theta).sin();
            dv += s * kf * (kf * theta).cos();
        }
        (v, dv)
    }

    pub fn point(&self, theta: f64) -> [f64; 2] {
        let (x, _) = Self::series(&self.x_cos, &self.x_sin, theta);
        let (y, _) = Self::series(&self.y_cos, &self.y_sin, theta);
        [x, y]
    }

    pub fn tangent(&self, theta: f64) -> [f64; 2] {
        let (_, dx) = Self::series(&self.x_cos, &self.x_sin, theta);
        let (_, dy) = Self::series(&self.y_cos, &self.y_sin, theta);
        [dx, dy]
    }

    fn degree(&self) -> usize {
        [&self.x_cos, &self.x_sin, &self.y_cos, &self.y_sin]
            .iter()
            .map(|c| c.len())
            .max()
            .unwrap_or(0)
    }

    fn polygon(&self, n: usize) -> Vec<[f64; 2]> {
        (0..n).map(|i| self.point(TAU * i as f64 / n as f64)).collect()
    }

    /// Signed enclosed area, positive for counter-clockwise curves.
    /// The trapezoidal rule is exact for the trigonometric integrand.
    fn signed_area(&self) -> f64 {
        let n = 4 * self.degree() + 16;
        let h = TAU / n as f64;
        (0..n)
            .map(|i| {
                let t = i as f64 * h;
                let [x, y] = self.point(t);
                let [dx, dy] = self.tangent(t);
                0.5 * (x * dy - y * dx)
            })
            .sum::<f64>()
            * h
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        winding_number(&self.outline, p) != 0
    }

    fn distance(&self, p: [f64; 2]) -> f64 {
        let n = 1024;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            let d = dist2(self.point(t), p);
            if d < best.0 {
                best = (d, t);
            }
        }
        // Newton on g(θ) = (c(θ) - p)·c'(θ); c'' is approximated by a difference.
        let mut t = best.1;
        for _ in 0..30 {
            let c = self.point(t);
            let d1 = self.tangent(t);
            let h = 1e-6;
            let dp = self.tangent(t + h);
            let dm = self.tangent(t - h);
            let d2 = [(dp[0] - dm[0]) / (2.0 * h), (dp[1] - dm[1]) / (2.0 * h)];
            let g = (c[0] - p[0]) * d1[0] + (c[1] - p[1]) * d1[1];
            let dg = d1[0] * d1[0] + d1[1] * d1[1] + (c[0] - p[0]) * d2[0] + (c[1] - p[1]) * d2[1];
            if dg.abs() < f64::MIN_POSITIVE {
                break;
            }
            let step = g / dg;
            t -= step.clamp(-0.1, 0.1);
            if step.abs() < 1e-15 {
                break;
            }
        }
        dist2(self.point(t), p).sqrt().min(best.0.sqrt())
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn winding_number(poly: &[[f64; 2]], p: [f64; 2]) -> i32 {
    let mut wn = 0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && cross > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Planar shape. Used both as a computational domain and as a lattice region.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape2D {
    /// `[-hx, hx] × [-hy, hy]`
    Box { half_widths: [f64; 2] },
    Disk { center: [f64; 2], radius: f64 },
    Parametric(FourierCurve),
}

impl Shape2D {
    pub fn rectangle(hx: f64, hy: f64) -> Self {
        Shape2D::Box { half_widths: [hx, hy] }
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Shape2D::Disk { center, radius }
    }

    /// Axis-aligned extent `[xmin, xmax, ymin, ymax]`.
    pub fn extent(&self) -> [f64; 4] {
        match self {
            Shape2D::Box { half_widths: [hx, hy] } => [-hx, *hx, -hy, *hy],
            Shape2D::Disk { center: [cx, cy], radius } => {
                [cx - radius, cx + radius, cy - radius, cy + radius]
            }
            Shape2D::Parametric(curve) => {
                let mut e = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
                for &[x, y] in &curve.outline {
                    e[0] = e[0].min(x);
                    e[1] = e[1].max(x);
                    e[2] = e[2].min(y);
                    e[3] = e[3].max(y);
                }
                e
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape2D::Box { half_widths: [hx, hy] } => 4.0 * hx * hy,
            Shape2D::Disk { radius, .. } => PI * radius * radius,
            Shape2D::Parametric(curve) => curve.signed_area().abs(),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Shape2D::Box { half_widths: [hx, hy] } => p[0].abs() <= *hx && p[1].abs() <= *hy,
            Shape2D::Disk { center, radius } => dist2(*center, p) <= radius * radius,
            Shape2D::Parametric(curve) => curve.contains(p),
        }
    }

    /// Unsigned distance from `p` to the boundary curve.
    pub fn boundary_distance(&self, p: [f64; 2]) -> f64 {
        match self {
            Shape2D::Box { half_widths: [hx, hy] } => {
                let dx = p[0].abs() - hx;
                let dy = p[1].abs() - hy;
                if dx <= 0.0 && dy <= 0.0 {
                    (-dx).min(-dy)
                } else {
                    (dx.max(0.0).powi(2) + dy.max(0.0).powi(2)).sqrt()
                }
            }
            Shape2D::Disk { center, radius } => (dist2(*center, p).sqrt() - radius).abs(),
            Shape2D::Parametric(curve) => curve.distance(p),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Shape2D::Box { half_widths: [hx, hy] } => {
                if !(*hx > 0.0 && *hy > 0.0) {
                    return Err(invalid("box half-widths must be positive"));
                }
            }
            Shape2D::Disk { center, radius } => {
                if !(*radius > 0.0) || !center.iter().all(|c| c.is_finite()) {
                    return Err(invalid("disk radius must be positive"));
                }
            }
            Shape2D::Parametric(curve) => {
                let start = curve.point(0.0);
                let end = curve.point(TAU);
                if dist2(start, end).sqrt() > 1e-12 {
                    return Err(invalid("parametric boundary is not closed"));
                }
                if !(curve.signed_area().abs() > 0.0) {
                    return Err(invalid("parametric boundary encloses no area"));
                }
            }
        }
        Ok(())
    }
}

/// A planar computational domain inside the bounding box `[-T₁, T₁] × [-T₂, T₂]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain2D {
    shape: Shape2D,
    bounding: [f64; 2],
}

impl Domain2D {
    pub fn new(shape: Shape2D, bounding_half_widths: [f64; 2]) -> Result<Self> {
        shape.validate()?;
        let [tx, ty] = bounding_half_widths;
        let [x0, x1, y0, y1] = shape.extent();
        if !(x0 > -tx && x1 < tx && y0 > -ty && y1 < ty) {
            return Err(invalid(format!(
                "domain extent [{x0}, {x1}] × [{y0}, {y1}] is not strictly inside [-{tx}, {tx}] × [-{ty}, {ty}]"
            )));
        }
        Ok(Domain2D { shape, bounding: bounding_half_widths })
    }

    pub fn shape(&self) -> &Shape2D {
        &self.shape
    }

    pub fn bounding_half_widths(&self) -> [f64; 2] {
        self.bounding
    }

    pub fn bounding_box(&self) -> Shape2D {
        Shape2D::rectangle(self.bounding[0], self.bounding[1])
    }

    pub fn bounding_area(&self) -> f64 {
        4.0 * self.bounding[0] * self.bounding[1]
    }

    pub fn area(&self) -> f64 {
        self.shape.area()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.shape.contains(p)
    }
}

/// The `2N + 1` equispaced centers `kT/N`, `k = -N..=N`.
pub fn centers_1d(n: usize, extension: f64) -> Result<NodeSet> {
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    if !(extension > 0.0) {
        return Err(invalid("extension half-width must be positive"));
    }
    let n_i = n as i64;
    let pts = (-n_i..=n_i).map(|k| k as f64 * extension / n as f64).collect();
    NodeSet::from_points_1d(pts, NodeRole::Center)
}

/// `m` equispaced samples spanning the interval, endpoints included.
pub fn samples_1d(m: usize, interval: &Interval) -> Result<NodeSet> {
    if m < 2 {
        return Err(invalid("at least two samples are needed"));
    }
    let (a, b) = (interval.a(), interval.b());
    let pts = (0..m)
        .map(|i| if i + 1 == m { b } else { a + (b - a) * (i as f64 / (m - 1) as f64) })
        .collect();
    NodeSet::from_points_1d(pts, NodeRole::InteriorSample)
}

/// Sample count `⌈γ(2N + 1)⌉` for the 1D center layout.
pub fn oversample_count(n: usize, gamma: f64) -> Result<usize> {
    oversample_count_total(2 * n + 1, gamma)
}

/// Sample count `⌈γ N_total⌉` for a given total number of centers.
pub fn oversample_count_total(n_total: usize, gamma: f64) -> Result<usize> {
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(invalid(format!("oversampling factor must be at least 1, got {gamma}")));
    }
    // Shave off rounding noise so that e.g. γ = 2 gives exactly 2·N.
    Ok((gamma * n_total as f64 - 1e-9).ceil() as usize)
}

fn lattice(extent: [f64; 4], h: f64, keep: impl Fn([f64; 2]) -> bool) -> Vec<[f64; 2]> {
    let [x0, x1, y0, y1] = extent;
    let (xm, ym) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let (hw, hh) = ((x1 - x0) / 2.0, (y1 - y0) / 2.0);
    let dy = h * 3f64.sqrt() / 2.0;
    let tol = 1e-12 * (1.0 + hw.max(hh));
    let rows = (hh / dy + 1e-9).floor() as i64;
    let mut pts = Vec::new();
    for j in -rows..=rows {
        let y = ym + j as f64 * dy;
        let offset = if j.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
        let cols = ((hw / h) - offset + 1e-9).floor() as i64;
        for i in (-cols - 1)..=cols {
            let x = xm + (i as f64 + offset) * h;
            if (x - xm).abs() > hw + tol {
                continue;
            }
            let p = [x, y];
            if keep(p) {
                pts.push(p);
            }
        }
    }
    pts
}

/// Triangular-lattice points covering `region`, with spacing chosen so that roughly
/// `target_count` points land in the region. With `clip_to`, only points inside that
/// shape are returned; the lattice itself depends on `region` alone.
pub fn hex_grid(region: &Shape2D, target_count: usize, clip_to: Option<&Shape2D>) -> Result<NodeSet> {
    if target_count == 0 {
        return Err(invalid("target count must be at least 1"));
    }
    region.validate()?;
    let extent = region.extent();
    let area = region.area();
    if !(area > 0.0) || !(extent[1] > extent[0] && extent[3] > extent[2]) {
        return Err(invalid("lattice region has zero area"));
    }
    let count = |h: f64| lattice(extent, h, |p| region.contains(p)).len();

    // count(h) is non-increasing up to lattice jitter; bracket and bisect.
    let h0 = (2.0 * area / (3f64.sqrt() * target_count as f64)).sqrt();
    let (mut lo, mut hi) = (h0 / 2.0, h0 * 2.0);
    while count(lo) < target_count {
        lo /= 2.0;
    }
    while count(hi) > target_count {
        hi *= 2.0;
    }
    let mut best = (usize::MAX, h0);
    let mut consider = |h: f64, c: usize| {
        let err = c.abs_diff(target_count);
        if err < best.0 {
            best = (err, h);
        }
    };
    consider(lo, count(lo));
    consider(hi, count(hi));
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let c = count(mid);
        consider(mid, c);
        if c == target_count {
            break;
        }
        if c > target_count {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = best.1;
    let pts = lattice(extent, h, |p| region.contains(p) && clip_to.is_none_or(|c| c.contains(p)));
    let role = if clip_to.is_some() { NodeRole::InteriorSample } else { NodeRole::Center };
    NodeSet::from_points_2d(&pts, role)
}

/// `count` boundary points at equispaced parameter values `θ_m = 2πm/count`.
pub fn boundary_points(shape: &Shape2D, count: usize) -> Result<NodeSet> {
    if count < 3 {
        return Err(invalid("at least three boundary points are needed"));
    }
    let theta = |m: usize| TAU * m as f64 / count as f64;
    let pts: Vec<[f64; 2]> = match shape {
        Shape2D::Disk { center, radius } => (0..count)
            .map(|m| {
                let (s, c) = theta(m).sin_cos();
                [center[0] + radius * c, center[1] + radius * s]
            })
            .collect(),
        Shape2D::Parametric(curve) => (0..count).map(|m| curve.point(theta(m))).collect(),
        Shape2D::Box { .. } => {
            return Err(Error::NotImplemented("boundary sampling of box domains".into()));
        }
    };
    NodeSet::from_points_2d(&pts, NodeRole::BoundarySample)
}
