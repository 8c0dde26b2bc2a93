//! Central-cut ellipsoid method driven by a separation callback.
//!
//! The callback either accepts the query point or returns a cut `(w, rhs)`
//! such that the target set lies in `{y : w·y ≤ rhs}` while the query `x`
//! has `w·x ≥ rhs`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Answer of a separation callback.
#[derive(Debug, Clone, PartialEq)]
pub enum SepResponse {
    Member,
    Cut { w: Vec<f64>, rhs: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipsoidConfig {
    pub outer_radius: f64,
    pub inner_radius: f64,
    /// Hard cap on iterations; hitting it before the volume bound is a budget failure.
    pub cap: usize,
    pub center: Option<Vec<f64>>,
}

impl Default for EllipsoidConfig {
    fn default() -> Self {
        EllipsoidConfig { outer_radius: 1e3, inner_radius: 1e-6, cap: 200_000, center: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EllipsoidStatus {
    Member(Vec<f64>),
    /// The volume bound was reached: the target set holds no ball of the inner radius.
    Infeasible,
    BudgetExhausted,
}

#[derive(Debug, Clone, Serialize)]
pub struct Cut {
    pub point: Vec<f64>,
    pub w: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipsoidRun {
    pub status: EllipsoidStatus,
    pub iterations: usize,
    pub transcript: Vec<Cut>,
}

/// `⌈2(d+1)² ln(R/r)⌉`.
pub fn iteration_budget(dim: usize, outer: f64, inner: f64) -> usize {
    let d = dim as f64 + 1.0;
    (2.0 * d * d * (outer / inner).ln().max(0.0)).ceil() as usize
}

/// `ln` of the volume ratio of one central cut in dimension `d`.
pub fn log_volume_ratio(dim: usize) -> f64 {
    let d = dim as f64;
    if dim == 1 {
        return 0.5f64.ln();
    }
    (d / (d + 1.0)).ln() + (d - 1.0) / 2.0 * (d * d / (d * d - 1.0)).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs the ellipsoid method until the callback accepts a point, the
/// volume bound is reached, or the cap is hit.
pub fn solve_feasibility<F>(dim: usize, cfg: &EllipsoidConfig, mut oracle: F) -> Result<EllipsoidRun>
where
    F: FnMut(&[f64]) -> Result<SepResponse>,
{
    if dim == 0 {
        return Err(Error::Input("ellipsoid needs a positive dimension".into()));
    }
    if !(cfg.outer_radius >= cfg.inner_radius && cfg.inner_radius > 0.0) {
        return Err(Error::Input("radii must satisfy R ≥ r > 0".into()));
    }
    let mut c = cfg.center.clone().unwrap_or_else(|| vec![0.0; dim]);
    if c.len() != dim {
        return Err(Error::Input("center has the wrong dimension".into()));
    }
    // Shape kept as `A = J Jᵀ` so it stays positive definite under rounding.
    let mut jm: Vec<Vec<f64>> =
        (0..dim).map(|i| (0..dim).map(|j| if i == j { cfg.outer_radius } else { 0.0 }).collect()).collect();
    let budget = iteration_budget(dim, cfg.outer_radius, cfg.inner_radius);
    let limit = budget.min(cfg.cap);
    let mut transcript = Vec::new();
    let d = dim as f64;
    let (f, g) = if dim == 1 { (0.25, 0.0) } else { (d * d / (d * d - 1.0), 2.0 / (d + 1.0)) };
    let sf = f.sqrt();
    let s = 1.0 - (1.0 - g).sqrt();
    for it in 0..limit {
        let (w, rhs) = match oracle(&c)? {
            SepResponse::Member => {
                return Ok(EllipsoidRun { status: EllipsoidStatus::Member(c), iterations: it, transcript });
            }
            SepResponse::Cut { w, rhs } => (w, rhs),
        };
        if w.len() != dim {
            return Err(Error::Contract("cut has the wrong dimension".into()));
        }
        let wx = dot(&w, &c);
        let scale = w.iter().map(|v| v.abs()).fold(0.0, f64::max).max(rhs.abs()).max(1.0);
        if wx < rhs - 1e-9 * scale {
            return Err(Error::Contract(format!("cut does not separate the query point: w·x = {wx} < {rhs}")));
        }
        // p = Jᵀw, u = p/|p|, b = J u = A w / sqrt(wᵀAw).
        let p: Vec<f64> = (0..dim).map(|k| (0..dim).map(|i| jm[i][k] * w[i]).sum()).collect();
        let norm = dot(&p, &p).sqrt();
        if !norm.is_finite() {
            return Err(Error::Internal("ellipsoid shape is not finite".into()));
        }
        if norm == 0.0 {
            if w.iter().all(|&v| v == 0.0) {
                return Err(Error::Contract("zero cut direction".into()));
            }
            // The ellipsoid has no width along `w`: it lies in the cut hyperplane.
            return Ok(EllipsoidRun { status: EllipsoidStatus::Infeasible, iterations: it, transcript });
        }
        let u: Vec<f64> = p.iter().map(|v| v / norm).collect();
        let b: Vec<f64> = jm.iter().map(|row| dot(row, &u)).collect();
        let step = if dim == 1 { 0.5 } else { 1.0 / (d + 1.0) };
        for i in 0..dim {
            c[i] -= step * b[i];
        }
        // J' = √f (J − s b uᵀ), so A' = f (A − g b bᵀ).
        for i in 0..dim {
            for k in 0..dim {
                jm[i][k] = sf * (jm[i][k] - s * b[i] * u[k]);
            }
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Internal("ellipsoid center is not finite".into()));
        }
        transcript.push(Cut { point: c.clone(), w, rhs });
    }
    let status = if limit < budget { EllipsoidStatus::BudgetExhausted } else { EllipsoidStatus::Infeasible };
    Ok(EllipsoidRun { status, iterations: limit, transcript })
}

/// Approximately maximizes `obj·x` over the set accepted by `oracle` by
/// bisecting on the objective value within `[lo, hi]`.
///
/// Returns the best accepted point, or `None` when no point is accepted.
pub fn optimize_with_binary_search<F>(
    obj: &[f64],
    cfg: &EllipsoidConfig,
    bounds: (f64, f64),
    eps: f64,
    mut oracle: F,
) -> Result<Option<Vec<f64>>>
where
    F: FnMut(&[f64]) -> Result<SepResponse>,
{
    let dim = obj.len();
    let run_at = |theta: Option<f64>, oracle: &mut F| -> Result<Option<Vec<f64>>> {
        let run = solve_feasibility(dim, cfg, |x| {
            if let Some(t) = theta
                && dot(obj, x) < t
            {
                return Ok(SepResponse::Cut { w: obj.iter().map(|v| -v).collect(), rhs: -t });
            }
            oracle(x)
        })?;
        match run.status {
            EllipsoidStatus::Member(x) => Ok(Some(x)),
            EllipsoidStatus::Infeasible => Ok(None),
            EllipsoidStatus::BudgetExhausted => Err(Error::Budget("ellipsoid iteration cap reached".into())),
        }
    };
    let Some(mut best) = run_at(None, &mut oracle)? else { return Ok(None) };
    let (mut lo, mut hi) = bounds;
    lo = lo.max(dot(obj, &best));
    while hi - lo > eps {
        let mid = 0.5 * (lo + hi);
        match run_at(Some(mid), &mut oracle)? {
            Some(x) => {
                lo = dot(obj, &x).max(mid);
                best = x;
            }
            None => hi = mid,
        }
    }
    Ok(Some(best))
}

/// Separation callback for `{x : A x ≤ b}` returning the most violated row.
pub fn polytope_oracle<'a>(rows: &'a [(Vec<f64>, f64)], tol: f64) -> impl FnMut(&[f64]) -> Result<SepResponse> + 'a {
    move |x: &[f64]| {
        let worst = rows.iter().map(|(a, b)| (dot(a, x) - b, a, b)).max_by(|p, q| p.0.total_cmp(&q.0));
        Ok(match worst {
            Some((viol, a, b)) if viol > tol => SepResponse::Cut { w: a.clone(), rhs: *b },
            _ => SepResponse::Member,
        })
    }
}
