//! Cubic-spline curve models x(t): [0, 1] → ℝ³ over chord-length parameterized nodes.
//!
//! Four or more nodes get a natural cubic spline, either interpolating or a
//! penalized smoothing spline (Reinsch form) whose penalty is chosen so the
//! residual sum of squares hits a target budget. Two nodes give a line and
//! three a quadratic through all points.
//!
//! Smoothing splines are fitted over the nodes plus padding points on each
//! side (mirror images of the interior nodes across the end normal plane for
//! open curves, wrap-around for closed ones) and evaluated only over the span of the original nodes, so the
//! natural end conditions do not flatten the curve near its ends.

pub type Point = [f64; 3];

#[inline]
fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[inline]
fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// How closely the spline follows the nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    Interpolate,
    /// Target residual Σ‖xᵢ − x(tᵢ)‖² = factor · (m − √(2m)) · h², where m is
    /// the node count and h² the mean squared voxel spacing.
    Residual { factor: f64, spacing_sq: f64 },
}

impl Smoothing {
    fn budget(&self, m: usize) -> f64 {
        match *self {
            Smoothing::Interpolate => 0.0,
            Smoothing::Residual { factor, spacing_sq } => {
                let m = m as f64;
                factor * (m - (2.0 * m).sqrt()).max(0.0) * spacing_sq
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Linear,
    Quadratic,
    /// Fitted values and second derivatives at every knot.
    Cubic { values: Vec<Point>, second: Vec<Point> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveModel {
    knots: Vec<f64>,
    points: Vec<Point>,
    shape: Shape,
    /// Index of the first original node among `points`, and the node count.
    offset: usize,
    nodes: usize,
}

/// Position and first two derivatives with respect to t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub t: f64,
    pub position: Point,
    pub d1: Point,
    pub d2: Point,
}

impl CurveSample {
    /// κ = ‖x′ × x″‖ / ‖x′‖³ (zero where the speed vanishes).
    pub fn curvature(&self) -> f64 {
        let speed = norm(self.d1);
        if speed == 0.0 {
            return 0.0;
        }
        norm(cross(self.d1, self.d2)) / (speed * speed * speed)
    }

    pub fn speed(&self) -> f64 {
        norm(self.d1)
    }
}

/// Normalized cumulative chord length; `None` if all points coincide.
pub fn chord_parameters(points: &[Point]) -> Option<Vec<f64>> {
    let mut t = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    t.push(0.0);
    for w in points.windows(2) {
        acc += norm(sub(w[1], w[0]));
        t.push(acc);
    }
    if acc <= 0.0 {
        return None;
    }
    for v in &mut t {
        *v /= acc;
    }
    *t.last_mut().unwrap() = 1.0;
    Some(t)
}

/// Symmetric positive-definite pentadiagonal solve (LDLᵀ).
/// `d`: diagonal, `e`: first super-diagonal, `f`: second super-diagonal.
struct Pentadiagonal {
    diag: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl Pentadiagonal {
    fn factor(d: &[f64], e: &[f64], f: &[f64]) -> Self {
        let m = d.len();
        let mut diag = vec![0.0; m];
        let mut l1 = vec![0.0; m];
        let mut l2 = vec![0.0; m];
        for j in 0..m {
            let mut dj = d[j];
            if j >= 1 {
                dj -= l1[j - 1] * l1[j - 1] * diag[j - 1];
            }
            if j >= 2 {
                dj -= l2[j - 2] * l2[j - 2] * diag[j - 2];
            }
            diag[j] = dj;
            if j + 1 < m {
                let mut v = e[j];
                if j >= 1 {
                    v -= l2[j - 1] * diag[j - 1] * l1[j - 1];
                }
                l1[j] = v / dj;
            }
            if j + 2 < m {
                l2[j] = f[j] / dj;
            }
        }
        Pentadiagonal { diag, l1, l2 }
    }

    fn solve(&self, b: &mut [f64]) {
        let m = b.len();
        for j in 0..m {
            if j >= 1 {
                b[j] -= self.l1[j - 1] * b[j - 1];
            }
            if j >= 2 {
                b[j] -= self.l2[j - 2] * b[j - 2];
            }
        }
        for j in 0..m {
            b[j] /= self.diag[j];
        }
        for j in (0..m).rev() {
            if j + 1 < m {
                b[j] -= self.l1[j] * b[j + 1];
            }
            if j + 2 < m {
                b[j] -= self.l2[j] * b[j + 2];
            }
        }
    }
}

/// Natural cubic (smoothing) spline through knots `t` for one penalty weight.
struct Reinsch<'a> {
    t: &'a [f64],
    y: &'a [Point],
    /// Non-zeros of each column of Q: (1/h₍ᵢ₋₁₎, −1/h₍ᵢ₋₁₎ − 1/hᵢ, 1/hᵢ).
    q: Vec<[f64; 3]>,
    /// Qᵀy per coordinate.
    qty: [Vec<f64>; 3],
}

impl<'a> Reinsch<'a> {
    fn new(t: &'a [f64], y: &'a [Point]) -> Self {
        let n = t.len();
        let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let q: Vec<[f64; 3]> = (1..n - 1)
            .map(|i| [1.0 / h[i - 1], -1.0 / h[i - 1] - 1.0 / h[i], 1.0 / h[i]])
            .collect();
        let qty = std::array::from_fn(|k| {
            (1..n - 1)
                .map(|i| {
                    let c = q[i - 1];
                    c[0] * y[i - 1][k] + c[1] * y[i][k] + c[2] * y[i + 1][k]
                })
                .collect()
        });
        Reinsch { t, y, q, qty }
    }

    /// Returns fitted values, second derivatives and the residual sum of squares.
    fn fit(&self, lambda: f64) -> (Vec<Point>, Vec<Point>, f64) {
        let n = self.t.len();
        let m = n - 2;
        let h: Vec<f64> = self.t.windows(2).map(|w| w[1] - w[0]).collect();
        let mut d = vec![0.0; m];
        let mut e = vec![0.0; m];
        let mut f = vec![0.0; m];
        for j in 0..m {
            let i = j + 1;
            let c = self.q[j];
            d[j] = (h[i - 1] + h[i]) / 3.0 + lambda * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
            if j + 1 < m {
                let c1 = self.q[j + 1];
                e[j] = h[i] / 6.0 + lambda * (c[1] * c1[0] + c[2] * c1[1]);
            }
            if j + 2 < m {
                f[j] = lambda * c[2] * self.q[j + 2][0];
            }
        }
        let chol = Pentadiagonal::factor(&d, &e, &f);
        let mut gamma = [self.qty[0].clone(), self.qty[1].clone(), self.qty[2].clone()];
        for g in &mut gamma {
            chol.solve(g);
        }
        let mut values = self.y.to_vec();
        let mut rss = 0.0;
        if lambda > 0.0 {
            for (i, value) in values.iter_mut().enumerate() {
                let mut r2 = 0.0;
                for k in 0..3 {
                    // (Qγ)ᵢ gathers the columns i−1, i, i+1 of Q that touch row i.
                    let mut qg = 0.0;
                    if i >= 2 {
                        qg += self.q[i - 2][2] * gamma[k][i - 2];
                    }
                    if i >= 1 && i <= m {
                        qg += self.q[i - 1][1] * gamma[k][i - 1];
                    }
                    if i < m {
                        qg += self.q[i][0] * gamma[k][i];
                    }
                    let delta = lambda * qg;
                    value[k] -= delta;
                    r2 += delta * delta;
                }
                rss += r2;
            }
        }
        let mut second = vec![[0.0; 3]; n];
        for j in 0..m {
            for k in 0..3 {
                second[j + 1][k] = gamma[k][j];
            }
        }
        (values, second, rss)
    }
}

/// Padding points added beyond each end of a smoothed curve.
const END_PADDING: usize = 16;
/// Nodes used to estimate the end point and tangent.
const END_FIT_NODES: usize = 10;

/// Mirror images of `pts[1..=count]` across the plane through the curve end
/// that is normal to the end tangent. `pts` starts at the end and heads
/// inward; the end point and tangent come from a least-squares quadratic over
/// the first few nodes in normalized chord parameter. Nearest image first.
fn mirror(pts: &[Point], count: usize) -> Option<Vec<Point>> {
    let fit = &pts[..pts.len().min(END_FIT_NODES)];
    let s = chord_parameters(fit)?;
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [[0.0f64; 3]; 3];
    for (u, p) in s.iter().zip(fit) {
        let pow = [1.0, *u, u * u];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] += pow[r] * pow[c];
            }
            for k in 0..3 {
                b[r][k] += pow[r] * p[k];
            }
        }
    }
    let coef = solve3(a, b)?;
    let (origin, tangent) = (coef[0], coef[1]);
    let len = norm(tangent);
    if len == 0.0 {
        return None;
    }
    let t = tangent.map(|v| v / len);
    Some(
        pts[1..=count]
            .iter()
            .map(|&p| {
                let d = sub(p, origin);
                let along = 2.0 * (d[0] * t[0] + d[1] * t[1] + d[2] * t[2]);
                [p[0] - along * t[0], p[1] - along * t[1], p[2] - along * t[2]]
            })
            .collect(),
    )
}

/// Gaussian elimination with partial pivoting for three right-hand sides.
fn solve3(mut a: [[f64; 3]; 3], mut b: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            for k in 0..3 {
                b[row][k] -= f * b[col][k];
            }
        }
    }
    let mut x = [[0.0; 3]; 3];
    for row in (0..3).rev() {
        for k in 0..3 {
            let mut v = b[row][k];
            for c in row + 1..3 {
                v -= a[row][c] * x[c][k];
            }
            x[row][k] = v / a[row][row];
        }
    }
    Some(x)
}

const LOG_LAMBDA_RANGE: (f64, f64) = (-46.0, 23.0);
const BISECTION_STEPS: usize = 80;

impl CurveModel {
    /// Fits an open curve through `points` (mm). Returns `None` for fewer
    /// than two points or when every point coincides.
    pub fn fit(points: &[Point], smoothing: Smoothing) -> Option<Self> {
        let n = points.len();
        if n < 4 || smoothing == Smoothing::Interpolate {
            return Self::fit_padded(points.to_vec(), 0, n, smoothing);
        }
        let pad = (n - 1).min(END_PADDING);
        let head: Vec<Point> = points.to_vec();
        let tail: Vec<Point> = points.iter().rev().copied().collect();
        let mut all = mirror(&head, pad)?;
        all.reverse();
        all.extend_from_slice(points);
        all.extend(mirror(&tail, pad)?);
        Self::fit_padded(all, pad, n, smoothing)
    }

    /// Fits a closed curve through `points` (first point not repeated); the
    /// domain runs from the first point around to its repetition.
    pub fn fit_closed(points: &[Point], smoothing: Smoothing) -> Option<Self> {
        let n = points.len();
        if n < 3 {
            return None;
        }
        let pad = n.min(END_PADDING);
        let all: Vec<Point> = (0..n + 1 + 2 * pad).map(|i| points[(i + n - pad) % n]).collect();
        Self::fit_padded(all, pad, n + 1, smoothing)
    }

    fn fit_padded(points: Vec<Point>, offset: usize, nodes: usize, smoothing: Smoothing) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        let knots = chord_parameters(&points)?;
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        let shape = match points.len() {
            2 => Shape::Linear,
            3 => Shape::Quadratic,
            n => {
                let solver = Reinsch::new(&knots, &points);
                let budget = smoothing.budget(n);
                let (values, second) = if budget <= 0.0 {
                    let (v, s, _) = solver.fit(0.0);
                    (v, s)
                } else {
                    let (mut lo, mut hi) = LOG_LAMBDA_RANGE;
                    let (v_hi, s_hi, rss_hi) = solver.fit(hi.exp());
                    if rss_hi <= budget {
                        (v_hi, s_hi)
                    } else {
                        for _ in 0..BISECTION_STEPS {
                            let mid = 0.5 * (lo + hi);
                            let (_, _, rss) = solver.fit(mid.exp());
                            if rss > budget {
                                hi = mid;
                            } else {
                                lo = mid;
                            }
                        }
                        let (v, s, _) = solver.fit(lo.exp());
                        (v, s)
                    }
                };
                Shape::Cubic { values, second }
            }
        };
        Some(CurveModel {
            knots,
            points,
            shape,
            offset,
            nodes,
        })
    }

    /// Parameter interval covered by the original nodes.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.offset], self.knots[self.offset + self.nodes - 1])
    }

    /// Parameters of the original nodes.
    pub fn node_parameters(&self) -> &[f64] {
        &self.knots[self.offset..self.offset + self.nodes]
    }

    /// Index (into the original nodes) of the node closest to `t`.
    pub fn nearest_node(&self, t: f64) -> usize {
        self.nearest_knot(t).saturating_sub(self.offset).min(self.nodes - 1)
    }

    /// `count` evenly spaced samples over [`Self::domain`].
    pub fn sample_domain(&self, count: usize) -> Vec<CurveSample> {
        let (a, b) = self.domain();
        self.sample(a, b, count)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Original nodes (without padding).
    pub fn control_points(&self) -> &[Point] {
        &self.points[self.offset..self.offset + self.nodes]
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.shape, Shape::Linear)
    }

    /// Index of the knot closest to `t`.
    pub fn nearest_knot(&self, t: f64) -> usize {
        let i = self.knots.partition_point(|&k| k < t);
        if i == 0 {
            0
        } else if i == self.knots.len() {
            i - 1
        } else if t - self.knots[i - 1] <= self.knots[i] - t {
            i - 1
        } else {
            i
        }
    }

    pub fn eval(&self, t: f64) -> CurveSample {
        let t = t.clamp(0.0, 1.0);
        match &self.shape {
            Shape::Linear => {
                let d1 = sub(self.points[1], self.points[0]);
                let p0 = self.points[0];
                CurveSample {
                    t,
                    position: [p0[0] + t * d1[0], p0[1] + t * d1[1], p0[2] + t * d1[2]],
                    d1,
                    d2: [0.0; 3],
                }
            }
            Shape::Quadratic => {
                let [t0, t1, t2] = [self.knots[0], self.knots[1], self.knots[2]];
                let [p0, p1, p2] = [self.points[0], self.points[1], self.points[2]];
                let w0 = 1.0 / ((t0 - t1) * (t0 - t2));
                let w1 = 1.0 / ((t1 - t0) * (t1 - t2));
                let w2 = 1.0 / ((t2 - t0) * (t2 - t1));
                let l = [w0 * (t - t1) * (t - t2), w1 * (t - t0) * (t - t2), w2 * (t - t0) * (t - t1)];
                let dl = [
                    w0 * (2.0 * t - t1 - t2),
                    w1 * (2.0 * t - t0 - t2),
                    w2 * (2.0 * t - t0 - t1),
                ];
                let ddl = [2.0 * w0, 2.0 * w1, 2.0 * w2];
                let comb = |c: [f64; 3]| std::array::from_fn(|k| c[0] * p0[k] + c[1] * p1[k] + c[2] * p2[k]);
                CurveSample {
                    t,
                    position: comb(l),
                    d1: comb(dl),
                    d2: comb(ddl),
                }
            }
            Shape::Cubic { values, second } => {
                let n = self.knots.len();
                let i = self.knots.partition_point(|&k| k <= t).clamp(1, n - 1) - 1;
                let (ta, tb) = (self.knots[i], self.knots[i + 1]);
                let h = tb - ta;
                let a = (tb - t) / h;
                let b = (t - ta) / h;
                let (ya, yb, ma, mb) = (values[i], values[i + 1], second[i], second[i + 1]);
                let h2 = h * h / 6.0;
                let position = std::array::from_fn(|k| {
                    a * ya[k] + b * yb[k] + ((a * a * a - a) * ma[k] + (b * b * b - b) * mb[k]) * h2
                });
                let d1 = std::array::from_fn(|k| {
                    (yb[k] - ya[k]) / h - (3.0 * a * a - 1.0) / 6.0 * h * ma[k] + (3.0 * b * b - 1.0) / 6.0 * h * mb[k]
                });
                let d2 = std::array::from_fn(|k| a * ma[k] + b * mb[k]);
                CurveSample { t, position, d1, d2 }
            }
        }
    }

    /// `count` evenly spaced samples over [t0, t1] (inclusive).
    pub fn sample(&self, t0: f64, t1: f64, count: usize) -> Vec<CurveSample> {
        let count = count.max(2);
        (0..count)
            .map(|k| {
                let t = if k + 1 == count {
                    t1
                } else {
                    t0 + (t1 - t0) * k as f64 / (count - 1) as f64
                };
                self.eval(t)
            })
            .collect()
    }
}

/// Polyline length through sample positions.
pub fn sampled_arc_length(samples: &[CurveSample]) -> f64 {
    samples.windows(2).map(|w| norm(sub(w[1].position, w[0].position))).sum()
}
