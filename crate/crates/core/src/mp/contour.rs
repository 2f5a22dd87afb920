//! Rectangle contours and Gauss–Legendre quadrature for the CLT moment
//! integrals.
//!
//! The asymptotic mean of a centered linear spectral statistic is
//! `-(1/2 pi i) ∮ f(y z) mu(z) dz` (plus the `mu~` correction for the
//! improved variant) and the variance is the double integral of
//! `f(y z1) f(y z2) sigma(z1, z2)` over two nested rectangles, each
//! enclosing the bulk support of the rescaled-spectrum law and taken
//! counterclockwise. Quadrature is composite 16-point Gauss–Legendre per
//! edge with panel doubling until successive estimates agree.

use num_complex::Complex64;

use super::closed_form::{clt_closed_form, CltMoments, LssFamily, Variant};
use super::integrand::{mu, mu_tilde, sigma};
use super::mp_support;
use super::stieltjes::sbar;
use crate::error::{Error, Result};

/// Rectangle contour `{x ± i v0 : x in [eta_l, eta_r]} ∪ {eta_{l,r} + i v}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    pub eta_l: f64,
    pub eta_r: f64,
    pub v0: f64,
}

impl Contour {
    /// Default contour for the law with aspect parameter y0: tight enough to
    /// keep `log(y z)` analytic inside (the left crossing stays positive
    /// whenever the bulk allows it), wide enough to enclose the bulk.
    pub fn default_for(y0: f64) -> Self {
        let (a, b) = mp_support(y0);
        // The left crossing must separate the bulk edge `a` from the origin:
        // for y0 < 1 the origin carries an atom (a pole of the transform),
        // and for the log statistic the crossing must stay positive. Half
        // the edge balances both; a wider margin is used when there is room.
        let eta_l = if y0 == 1.0 {
            // The bulk touches the origin; only entire f (powers) apply.
            -0.5
        } else if y0 < 1.0 {
            0.5 * a
        } else {
            (a - 0.5).max(0.5 * a)
        };
        Self { eta_l, eta_r: b + 1.0, v0: 1.0 }
    }

    /// Check that the rectangle strictly encloses the bulk support of the
    /// y0-law.
    pub fn validate(&self, y0: f64) -> Result<()> {
        let (a, b) = mp_support(y0);
        if !(self.eta_l < a && self.eta_r > b && self.v0 > 0.0) {
            return Err(Error::Domain(format!(
                "contour [{}, {}] x [-{}, {}] does not enclose the bulk [{a}, {b}]",
                self.eta_l, self.eta_r, self.v0, self.v0
            )));
        }
        Ok(())
    }

    /// Nested inner rectangle at `factor` of this contour's margins around
    /// the bulk, used as the second contour of the variance integral.
    pub fn inner_for(&self, y0: f64, factor: f64) -> Contour {
        let (a, b) = mp_support(y0);
        Contour {
            eta_l: a - factor * (a - self.eta_l),
            eta_r: b + factor * (self.eta_r - b),
            v0: factor * self.v0,
        }
    }
}

/// Convergence controls for the panel-doubling refinement.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Stop when successive refinements differ by less than
    /// `abs_tol + rel_tol * |estimate|`.
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub start_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-8, rel_tol: 1e-10, start_panels: 2, max_panels: 512 }
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

const NODES_PER_PANEL: usize = 16;

/// Quadrature nodes z and complex weights w (Gauss weight times dz) for a
/// counterclockwise traversal of the rectangle.
fn contour_nodes(c: &Contour, panels: usize) -> Vec<(Complex64, Complex64)> {
    let (xs, ws) = gauss_legendre(NODES_PER_PANEL);
    let mut out = Vec::with_capacity(4 * panels * NODES_PER_PANEL);
    // Each edge runs from `start` to `end`; dz = (end - start)/2 per unit
    // parameter on [-1, 1], split into `panels` panels.
    let edges = [
        (Complex64::new(c.eta_l, -c.v0), Complex64::new(c.eta_r, -c.v0)),
        (Complex64::new(c.eta_r, -c.v0), Complex64::new(c.eta_r, c.v0)),
        (Complex64::new(c.eta_r, c.v0), Complex64::new(c.eta_l, c.v0)),
        (Complex64::new(c.eta_l, c.v0), Complex64::new(c.eta_l, -c.v0)),
    ];
    for (start, end) in edges {
        let step = (end - start) / panels as f64;
        for p in 0..panels {
            let a = start + step * p as f64;
            let half = 0.5 * step;
            let mid = a + half;
            for (x, w) in xs.iter().zip(&ws) {
                out.push((mid + half * x, half * w));
            }
        }
    }
    out
}

fn refine<F>(opts: &QuadratureOptions, max_panels: usize, mut eval: F) -> Result<Complex64>
where
    F: FnMut(usize) -> Result<Complex64>,
{
    let mut panels = opts.start_panels.max(1);
    let mut prev = eval(panels)?;
    loop {
        panels *= 2;
        let cur = eval(panels)?;
        let delta = (cur - prev).norm();
        if delta <= opts.abs_tol + opts.rel_tol * cur.norm() {
            return Ok(cur);
        }
        if panels >= max_panels {
            return Err(Error::QuadratureFailure {
                last_delta: delta,
                nodes: panels * NODES_PER_PANEL,
            });
        }
        prev = cur;
    }
}

/// Asymptotic mean of the centered statistic `sum f(lambda_i) - p int f dF`
/// by contour quadrature: `-(1/2 pi i) ∮ f(y z) (mu + [improved] mu~) dz`.
///
/// `f` must be analytic on `y` times a neighborhood of the contour interior.
pub fn lss_mean_contour<F>(
    f: F,
    y: f64,
    variant: Variant,
    contour: &Contour,
    opts: &QuadratureOptions,
) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let y0 = 1.0 / y;
    contour.validate(y0)?;
    let integral = refine(opts, opts.max_panels, |panels| {
        let mut sum = Complex64::new(0.0, 0.0);
        for (z, w) in contour_nodes(contour, panels) {
            let mut kernel = mu(y0, z)?;
            if variant == Variant::Improved {
                kernel += mu_tilde(y0, z)?;
            }
            sum += w * f(y * z) * kernel;
        }
        Ok(sum)
    })?;
    Ok((integral / Complex64::new(0.0, 2.0 * std::f64::consts::PI)).re * -1.0)
}

/// Asymptotic variance by nested-contour quadrature:
/// `-(1/4 pi^2) ∮∮ f(y z1) f(y z2) sigma(z1, z2) dz1 dz2`. The inner
/// contour sits at 60% of the outer margins so the two never touch.
pub fn lss_variance_contour<F>(
    f: F,
    y: f64,
    contour: &Contour,
    opts: &QuadratureOptions,
) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let y0 = 1.0 / y;
    contour.validate(y0)?;
    let inner = contour.inner_for(y0, 0.6);
    inner.validate(y0)?;
    let max_panels = opts.max_panels.min(64);
    let integral = refine(opts, max_panels, |panels| {
        let outer_nodes = contour_nodes(contour, panels);
        let inner_nodes = contour_nodes(&inner, panels);
        // Cache the inner factors once per refinement level.
        let mut cached = Vec::with_capacity(inner_nodes.len());
        for &(z2, w2) in &inner_nodes {
            cached.push((z2, w2 * f(y * z2)));
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for &(z1, w1) in &outer_nodes {
            let f1 = w1 * f(y * z1);
            let mut inner_sum = Complex64::new(0.0, 0.0);
            for &(z2, fw2) in &cached {
                inner_sum += fw2 * sigma(y0, z1, z2)?;
            }
            sum += f1 * inner_sum;
        }
        Ok(sum)
    })?;
    let four_pi_sq = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    Ok((integral / four_pi_sq).re * -1.0)
}

fn family_fn(family: LssFamily) -> impl Fn(Complex64) -> Complex64 + Copy {
    move |w: Complex64| match family {
        LssFamily::Log => w.ln(),
        LssFamily::Power(k) => w.powu(k),
    }
}

/// Asymptotic moments of a log or power statistic by contour quadrature on
/// the default contour. The closed-form route [`clt_closed_form`] must agree
/// with this to quadrature tolerance; keeping both is the crate's guard
/// against branch-selection mistakes.
pub fn lss_asymptotics(family: LssFamily, y: f64, variant: Variant) -> Result<CltMoments> {
    let contour = Contour::default_for(1.0 / y);
    lss_asymptotics_with(family, y, variant, &contour, &QuadratureOptions::default())
}

/// [`lss_asymptotics`] with an explicit contour and tolerance.
pub fn lss_asymptotics_with(
    family: LssFamily,
    y: f64,
    variant: Variant,
    contour: &Contour,
    opts: &QuadratureOptions,
) -> Result<CltMoments> {
    if y <= 0.0 {
        return Err(Error::Domain(format!("aspect ratio must be positive, got {y}")));
    }
    if family == LssFamily::Log {
        if y >= 1.0 {
            return Err(Error::Domain(format!(
                "log-determinant statistics need y in (0,1), got y = {y}"
            )));
        }
        if contour.eta_l <= 0.0 {
            return Err(Error::Domain(
                "log case needs a contour with a positive left crossing".into(),
            ));
        }
    }
    let f = family_fn(family);
    let mean = lss_mean_contour(f, y, variant, contour, opts)?;
    let variance = lss_variance_contour(f, y, contour, opts)?;
    Ok(CltMoments { family, variant, y, mean, variance })
}

/// One closed-form vs quadrature comparison.
#[derive(Debug, Clone, Copy)]
pub struct CheckCase {
    pub family: LssFamily,
    pub y: f64,
    pub variant: Variant,
    pub mean_err: f64,
    pub var_err: f64,
    pub pass: bool,
}

fn rel_err(got: f64, want: f64) -> f64 {
    let scale = want.abs();
    if scale > 1e-8 {
        (got - want).abs() / scale
    } else {
        (got - want).abs()
    }
}

/// Cross-validate the closed forms against contour quadrature over a y grid
/// and power exponents up to `k_max` (k = 1 is checked against the exact
/// degenerate value (0,0)). Log cases are run only where they are defined
/// (y < 1).
///
/// `break_branch` deliberately evaluates the mean kernel on the rejected
/// quadratic root; it exists as a negative control so callers can verify
/// the check fails loudly when the branch logic is wrong.
pub fn contour_check(
    y_grid: &[f64],
    k_max: u32,
    tol: f64,
    break_branch: bool,
) -> Result<Vec<CheckCase>> {
    let mut cases = Vec::new();
    for &y in y_grid {
        let y0 = 1.0 / y;
        let contour = Contour::default_for(y0);
        let opts = QuadratureOptions::default();
        let mut families: Vec<LssFamily> = (1..=k_max).map(LssFamily::Power).collect();
        if y < 1.0 {
            families.push(LssFamily::Log);
        }
        for family in families {
            for variant in [Variant::Classical, Variant::Improved] {
                let closed = clt_closed_form(family, y, variant)?;
                // A wrong branch shows up either as a wrong value or as
                // quadrature that never settles; both count as a failed case.
                let (mean, variance) = if break_branch {
                    let f = family_fn(family);
                    let mean = broken_mean(f, y, variant, &contour, &opts).unwrap_or(f64::INFINITY);
                    let variance =
                        lss_variance_contour(f, y, &contour, &opts).unwrap_or(f64::INFINITY);
                    (mean, variance)
                } else {
                    let m = lss_asymptotics_with(family, y, variant, &contour, &opts)?;
                    (m.mean, m.variance)
                };
                let mean_err = rel_err(mean, closed.mean);
                let var_err = rel_err(variance, closed.variance);
                cases.push(CheckCase {
                    family,
                    y,
                    variant,
                    mean_err,
                    var_err,
                    pass: mean_err <= tol && var_err <= tol,
                });
            }
        }
    }
    Ok(cases)
}

/// Negative-control mean: same integral with the companion (wrong) root.
fn broken_mean<F>(
    f: F,
    y: f64,
    variant: Variant,
    contour: &Contour,
    opts: &QuadratureOptions,
) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let y0 = 1.0 / y;
    contour.validate(y0)?;
    let integral = refine(opts, opts.max_panels, |panels| {
        let mut sum = Complex64::new(0.0, 0.0);
        for (z, w) in contour_nodes(contour, panels) {
            // Swap to the rejected root: s and 1/(z s) solve the same
            // quadratic, so the companion is 1/(z sbar).
            let s = (z * sbar(y0, z)?).inv();
            let one_plus = 1.0 + s;
            let d = one_plus * one_plus - y0 * s * s;
            let s3 = s * s * s;
            let mut kernel = y0 * s3 * one_plus / (d * d) - 2.0 * y0 * s3 / (d * one_plus) + s3 / d;
            if variant == Variant::Improved {
                kernel += s3 * (2.0 + s) / d;
            }
            sum += w * f(y * z) * kernel;
        }
        Ok(sum)
    })?;
    Ok((integral / Complex64::new(0.0, 2.0 * std::f64::consts::PI)).re * -1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (xs, ws) = gauss_legendre(16);
        assert_eq!(xs.len(), 16);
        // Degree-31 polynomials are exact for 16 nodes.
        let integral: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(10)).sum();
        assert_abs_diff_eq!(integral, 2.0 / 11.0, epsilon = 1e-14);
        let total: f64 = ws.iter().sum();
        assert_abs_diff_eq!(total, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_contour_of_analytic_function_vanishes() {
        let c = Contour { eta_l: -1.0, eta_r: 2.0, v0 : 1.0 };
        let sum: Complex64 = contour_nodes(&c, 4).iter().map(|&(z, w)| w * z.exp()).sum();
        assert!(sum.norm() < 1e-12);
    }

    #[test]
    fn winding_integral_counts_the_pole() {
        // ∮ dz/z = 2 pi i counterclockwise around the origin.
        let c = Contour { eta_l: -1.0, eta_r: 1.0, v0: 1.0 };
        let sum: Complex64 = contour_nodes(&c, 8).iter().map(|&(z, w)| w / z).sum();
        let expect = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        assert!((sum - expect).norm() < 1e-10, "{sum} vs {expect}");
    }

    #[test]
    fn default_contours_enclose_bulk() {
        for &y0 in &[0.2, 0.5, 0.99, 1.0, 1.25, 2.0, 5.0] {
            let c = Contour::default_for(y0);
            c.validate(y0).unwrap();
            if y0 > 1.0 {
                assert!(c.eta_l > 0.0);
            }
            let inner = c.inner_for(y0, 0.6);
            inner.validate(y0).unwrap();
            assert!(inner.eta_l > c.eta_l && inner.eta_r < c.eta_r && inner.v0 < c.v0);
        }
    }

    #[test]
    fn branch_is_continuous_along_edges() {
        // Successive sbar values along each edge move by no more than the
        // local derivative allows; a branch flip would produce an O(1) jump.
        for &y0 in &[0.5, 1.25, 2.0] {
            let c = Contour::default_for(y0);
            let nodes = contour_nodes(&c, 8);
            let per_edge = nodes.len() / 4;
            for edge in 0..4 {
                let slice = &nodes[edge * per_edge..(edge + 1) * per_edge];
                let mut max_jump: f64 = 0.0;
                let mut max_spacing_deriv: f64 = 0.0;
                for pair in slice.windows(2) {
                    let (z0, _) = pair[0];
                    let (z1, _) = pair[1];
                    let s0 = sbar(y0, z0).unwrap();
                    let s1 = sbar(y0, z1).unwrap();
                    max_jump = max_jump.max((s1 - s0).norm());
                    let d = super::super::stieltjes::sbar_prime(y0, z0).unwrap().norm();
                    max_spacing_deriv = max_spacing_deriv.max((z1 - z0).norm() * d);
                }
                assert!(
                    max_jump < 10.0 * max_spacing_deriv,
                    "y0={y0} edge={edge}: jump {max_jump} vs {max_spacing_deriv}"
                );
            }
        }
    }

    #[test]
    fn degenerate_linear_statistic() {
        for &y in &[0.5, 2.0] {
            let m = lss_asymptotics(LssFamily::Power(1), y, Variant::Classical).unwrap();
            assert!(m.mean.abs() < 1e-6, "mean {} at y={y}", m.mean);
            assert!(m.variance.abs() < 1e-6, "variance {} at y={y}", m.variance);
        }
    }

    #[test]
    fn log_matches_closed_form_at_half() {
        let m = lss_asymptotics(LssFamily::Log, 0.5, Variant::Classical).unwrap();
        assert_abs_diff_eq!(m.mean, -0.0397207, epsilon = 1e-6);
        assert_abs_diff_eq!(m.variance, 0.3862944, epsilon = 1e-6);
        let i = lss_asymptotics(LssFamily::Log, 0.5, Variant::Improved).unwrap();
        assert_abs_diff_eq!(i.mean, -0.5397207, epsilon = 1e-6);
        assert_abs_diff_eq!(i.variance, m.variance, epsilon = 1e-8);
    }

    #[test]
    fn square_matches_closed_form() {
        for &y in &[0.5, 2.0] {
            let m = lss_asymptotics(LssFamily::Power(2), y, Variant::Classical).unwrap();
            assert_abs_diff_eq!(m.mean, y * y - y, epsilon = 1e-6);
            assert_abs_diff_eq!(m.variance, 4.0 * y * y, epsilon = 4.0 * y * y * 1e-6);
        }
    }

    #[test]
    fn negative_control_fails_the_check() {
        let cases = contour_check(&[0.5], 2, 1e-6, true).unwrap();
        assert!(cases.iter().any(|c| !c.pass), "broken branch must be detected");
    }
}
