//! Adaptive rejection Metropolis sampling.
//!
//! The upper hull on `[x_i, x_{i+1}]` is
//! `max(L_{i,i+1}, min(L_{i−1,i}, L_{i+1,i+2}))` where `L_{a,b}` is the line
//! through two hull points; outside the outermost abscissae the end chords
//! are extended. Draws from the exponentiated hull are accepted with
//! probability `f/h`, rejected points join the abscissae, and a final
//! Metropolis step against the current value corrects for places where the
//! hull falls below the density. For log-concave targets the hull is a true
//! envelope and the Metropolis step always accepts.

use rand::Rng;

use super::{LogDensity, SamplerDiagnostics};
use crate::error::{GptcmError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmsOptions {
    /// Cap on the number of abscissae; once reached, rejected points are no
    /// longer added but sampling continues from the final hull.
    pub max_points: usize,
    /// Cap on outward extensions when an unbounded tail does not decay.
    pub max_tail_extensions: usize,
    /// Cap on rejection rounds per call.
    pub max_rejections: usize,
    /// Move an initial abscissa with non-finite log density halfway towards
    /// the middle abscissa (repeatedly) instead of failing.
    pub shrink_nonfinite: bool,
}

impl Default for ArmsOptions {
    fn default() -> Self {
        Self {
            max_points: 50,
            max_tail_extensions: 30,
            max_rejections: 10_000,
            shrink_nonfinite: false,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Line {
    slope: f64,
    x: f64,
    y: f64,
    // second point on the line; evaluation starts from whichever anchor is
    // nearer, so steep chords reproduce their endpoints exactly
    x1: f64,
    y1: f64,
}

impl Line {
    fn through(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Line {
            slope: (y1 - y0) / (x1 - x0),
            x: x0,
            y: y0,
            x1,
            y1,
        }
    }

    #[inline]
    fn at(&self, x: f64) -> f64 {
        if (x - self.x1).abs() < (x - self.x).abs() {
            self.y1 + self.slope * (x - self.x1)
        } else {
            self.y + self.slope * (x - self.x)
        }
    }

    /// Crossing point of two lines, computed relative to `r` (a point in
    /// the interval of interest) to limit cancellation.
    fn intersect(&self, other: &Line, r: f64) -> Option<f64> {
        let ds = self.slope - other.slope;
        if ds.abs() < 1e-300 {
            return None;
        }
        let x = r + (other.at(r) - self.at(r)) / ds;
        x.is_finite().then_some(x)
    }
}

/// Linear piece of the hull on `[a, b]` (either end may be infinite).
#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    line: Line,
    log_mass: f64,
}

/// `ln ∫_a^b exp(line)`.
fn segment_log_mass(a: f64, b: f64, line: &Line) -> f64 {
    let m = line.slope;
    if a == f64::NEG_INFINITY {
        return if m > 0.0 { line.at(b) - m.ln() } else { f64::INFINITY };
    }
    if b == f64::INFINITY {
        return if m < 0.0 { line.at(a) - (-m).ln() } else { f64::INFINITY };
    }
    let w = b - a;
    if w <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let y = m * w;
    let ha = line.at(a);
    let g = if y.abs() < 1e-10 {
        y / 2.0
    } else if y > 0.0 {
        y + (-(-y).exp_m1()).ln() - y.ln()
    } else {
        (-y.exp_m1()).ln() - (-y).ln()
    };
    ha + w.ln() + g
}

fn sample_segment<R: Rng + ?Sized>(seg: &Segment, rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let m = seg.line.slope;
    let x = if seg.a == f64::NEG_INFINITY {
        seg.b + u.ln() / m
    } else if seg.b == f64::INFINITY {
        seg.a + u.ln() / m
    } else {
        let w = seg.b - seg.a;
        if (m * w).abs() < 1e-10 {
            seg.a + u * w
        } else if m > 0.0 {
            seg.b + (u + (1.0 - u) * (-m * w).exp()).ln() / m
        } else {
            seg.a + (u * (m * w).exp_m1()).ln_1p() / m
        }
    };
    if seg.a.is_finite() && seg.b.is_finite() {
        x.clamp(seg.a, seg.b)
    } else {
        x
    }
}

struct Hull {
    segments: Vec<Segment>,
    log_total: f64,
}

impl Hull {
    /// Builds the hull over sorted points with finite log density.
    fn build(xs: &[f64], ys: &[f64], lower: f64, upper: f64) -> Option<Hull> {
        let n = xs.len();
        let chord = |i: usize| Line::through(xs[i], ys[i], xs[i + 1], ys[i + 1]);
        let mut segments = Vec::with_capacity(3 * n + 2);
        if lower < xs[0] {
            let line = chord(0);
            segments.push(Segment {
                a: lower,
                b: xs[0],
                line,
                log_mass: segment_log_mass(lower, xs[0], &line),
            });
        }
        for i in 0..n - 1 {
            let c = chord(i);
            let left = (i >= 1).then(|| chord(i - 1));
            let right = (i + 2 < n).then(|| chord(i + 1));
            let (a, b) = (xs[i], xs[i + 1]);
            let mut cuts = vec![a, b];
            let lines: Vec<Line> = [Some(c), left, right].into_iter().flatten().collect();
            for p in 0..lines.len() {
                for q in p + 1..lines.len() {
                    if let Some(x) = lines[p].intersect(&lines[q], 0.5 * (a + b)) {
                        if x > a && x < b {
                            cuts.push(x);
                        }
                    }
                }
            }
            cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
            let hull_at = |x: f64| {
                let upper_line = match (left, right) {
                    (Some(l), Some(r)) => l.at(x).min(r.at(x)),
                    (Some(l), None) => l.at(x),
                    (None, Some(r)) => r.at(x),
                    (None, None) => c.at(x),
                };
                c.at(x).max(upper_line)
            };
            for w in cuts.windows(2) {
                let (sa, sb) = (w[0], w[1]);
                if sb <= sa {
                    continue;
                }
                let (ha, hb) = (hull_at(sa), hull_at(sb));
                let line = Line::through(sa, ha, sb, hb);
                segments.push(Segment {
                    a: sa,
                    b: sb,
                    line,
                    log_mass: segment_log_mass(sa, sb, &line),
                });
            }
        }
        if upper > xs[n - 1] {
            let line = chord(n - 2);
            segments.push(Segment {
                a: xs[n - 1],
                b: upper,
                line,
                log_mass: segment_log_mass(xs[n - 1], upper, &line),
            });
        }
        let max = segments.iter().map(|s| s.log_mass).fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return None;
        }
        let log_total = max + segments.iter().map(|s| (s.log_mass - max).exp()).sum::<f64>().ln();
        Some(Hull { segments, log_total })
    }

    fn eval(&self, x: f64) -> f64 {
        // segments are contiguous and sorted
        let idx = self.segments.partition_point(|s| s.b < x);
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        seg.line.at(x)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let target: f64 = rng.random();
        let mut acc = 0.0;
        for seg in &self.segments {
            acc += (seg.log_mass - self.log_total).exp();
            if acc >= target {
                return sample_segment(seg, rng);
            }
        }
        sample_segment(self.segments.last().unwrap(), rng)
    }
}

fn insert_point(xs: &mut Vec<f64>, ys: &mut Vec<f64>, x: f64, y: f64) {
    let pos = xs.partition_point(|&v| v < x);
    if pos < xs.len() && xs[pos] == x {
        return;
    }
    xs.insert(pos, x);
    ys.insert(pos, y);
}

/// Ensures both unbounded tails of the hull decay by adding abscissae
/// further out where needed.
fn fix_tails<F: FnMut(f64) -> f64>(
    ld: &mut LogDensity<F>,
    xs: &mut Vec<f64>,
    ys: &mut Vec<f64>,
    opts: &ArmsOptions,
    diag: &mut SamplerDiagnostics,
) -> Result<()> {
    for it in 0..=opts.max_tail_extensions {
        let n = xs.len();
        let left_ok = ld.lower > f64::NEG_INFINITY || ys[1] > ys[0];
        let right_ok = ld.upper < f64::INFINITY || ys[n - 1] < ys[n - 2];
        if left_ok && right_ok {
            return Ok(());
        }
        if it == opts.max_tail_extensions {
            break;
        }
        let span = (xs[n - 1] - xs[0]).max(1e-8);
        if !left_ok {
            let x = xs[0] - span;
            let y = ld.eval(x);
            diag.evaluations += 1;
            if !y.is_finite() {
                return Err(GptcmError::Sampler(format!("log density not finite at tail abscissa {x}")));
            }
            xs.insert(0, x);
            ys.insert(0, y);
        }
        if !right_ok {
            let x = xs[xs.len() - 1] + span;
            let y = ld.eval(x);
            diag.evaluations += 1;
            if !y.is_finite() {
                return Err(GptcmError::Sampler(format!("log density not finite at tail abscissa {x}")));
            }
            xs.push(x);
            ys.push(y);
        }
    }
    Err(GptcmError::Sampler("hull tails do not decay; density may be improper".into()))
}

/// One ARMS update.
///
/// `current` is the chain's present value; when given, the Metropolis
/// correction step is applied and the returned value is either the new
/// draw or `current`. With `current = None` the call reduces to adaptive
/// rejection sampling, which is exact only for log-concave targets.
pub fn arms_sample<F, R>(
    ld: &mut LogDensity<F>,
    init_abscissae: &[f64],
    current: Option<f64>,
    opts: &ArmsOptions,
    rng: &mut R,
    diag: &mut SamplerDiagnostics,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    R: Rng + ?Sized,
{
    let mut xs: Vec<f64> = init_abscissae.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    xs.dedup();
    if xs.len() < 3 {
        return Err(GptcmError::Contract(format!(
            "ARMS needs at least 3 distinct abscissae, got {}",
            xs.len()
        )));
    }
    if xs.iter().any(|&x| !x.is_finite() || !ld.in_support(x)) {
        return Err(GptcmError::Contract(format!("ARMS abscissae {xs:?} outside the support")));
    }
    let mut ys: Vec<f64> = xs.iter().map(|&x| ld.eval(x)).collect();
    diag.evaluations += xs.len() as u64;
    if opts.shrink_nonfinite {
        let c = xs[xs.len() / 2];
        for (x, y) in xs.iter_mut().zip(ys.iter_mut()) {
            for _ in 0..40 {
                if y.is_finite() {
                    break;
                }
                *x = c + (*x - c) / 2.0;
                *y = ld.eval(*x);
                diag.evaluations += 1;
            }
        }
        let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        pairs.dedup_by(|a, b| a.0 == b.0);
        xs = pairs.iter().map(|p| p.0).collect();
        ys = pairs.iter().map(|p| p.1).collect();
        if xs.len() < 3 {
            return Err(GptcmError::Sampler("ARMS abscissae collapsed while avoiding non-finite density".into()));
        }
    }
    if ys.iter().all(|y| *y == f64::NEG_INFINITY) {
        return Err(GptcmError::Sampler("ARMS envelope degenerate: log density −∞ at every abscissa".into()));
    }
    if let Some(bad) = xs.iter().zip(&ys).find(|(_, y)| !y.is_finite()) {
        return Err(GptcmError::Sampler(format!("log density not finite at abscissa {}", bad.0)));
    }
    fix_tails(ld, &mut xs, &mut ys, opts, diag)?;

    let mut hull = Hull::build(&xs, &ys, ld.lower, ld.upper)
        .ok_or_else(|| GptcmError::Sampler("ARMS hull has no finite mass".into()))?;
    diag.arms_rebuilds += 1;

    let mut accepted = None;
    let mut nonfinite = 0usize;
    for _ in 0..opts.max_rejections {
        let x = hull.sample(rng);
        let hx = hull.eval(x);
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let fx = ld.eval(x);
        diag.evaluations += 1;
        diag.proposals += 1;
        if u.ln() <= fx - hx {
            accepted = Some((x, fx, hx));
            break;
        }
        if !fx.is_finite() {
            nonfinite += 1;
        }
        if xs.len() < opts.max_points && fx.is_finite() {
            insert_point(&mut xs, &mut ys, x, fx);
            if let Some(h) = Hull::build(&xs, &ys, ld.lower, ld.upper) {
                hull = h;
                diag.arms_rebuilds += 1;
            }
        }
    }
    let (xa, fa, ha) = accepted.ok_or_else(|| {
        GptcmError::Sampler(format!(
            "ARMS exceeded the rejection limit ({nonfinite} proposals had non-finite density, hull over [{}, {}])",
            xs[0],
            xs[xs.len() - 1]
        ))
    })?;

    let Some(xc) = current else {
        diag.acceptances += 1;
        return Ok(xa);
    };
    let fc = match xs.iter().position(|&x| x == xc) {
        Some(k) => ys[k],
        None => {
            diag.evaluations += 1;
            ld.eval(xc)
        }
    };
    if !fc.is_finite() {
        // the current point has zero density; any proposal improves on it
        diag.acceptances += 1;
        return Ok(xa);
    }
    let hc = hull.eval(xc);
    let log_ratio = fa + fc.min(hc) - fc - fa.min(ha);
    if log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio {
        diag.acceptances += 1;
        Ok(xa)
    } else {
        Ok(xc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_mass_matches_quadrature() {
        let line = Line::through(0.3, -0.4, 1.3, 1.3);
        let (a, b) = (-0.5, 1.2);
        let m = 200_000;
        let h = (b - a) / m as f64;
        let q: f64 = (0..m).map(|k| line.at(a + (k as f64 + 0.5) * h).exp() * h).sum();
        assert!((segment_log_mass(a, b, &line) - q.ln()).abs() < 1e-8);
        let tail = Line::through(1.0, 0.0, 2.0, -2.0);
        assert!((segment_log_mass(1.0, f64::INFINITY, &tail) - (0.5f64).ln()).abs() < 1e-14);
    }

    #[test]
    fn steep_chords_keep_their_endpoints() {
        let xs = [-77.0, -0.68, -0.34, 0.0, 0.34, 0.68];
        let ys = [-8.1e79, 2.7657, 2.7719, -0.1233, -4.79, -10.7];
        let hull = Hull::build(&xs, &ys, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!(hull.log_total < 10.0, "log total {}", hull.log_total);
        for (x, y) in xs.iter().zip(&ys).skip(1).take(xs.len() - 2) {
            assert!(hull.eval(*x) >= y - 1e-9);
            assert!(hull.eval(*x) < y + 1.0, "{x}: {} vs {y}", hull.eval(*x));
        }
    }

    #[test]
    fn hull_envelopes_concave_density() {
        let xs = [-2.0, -0.5, 0.3, 1.0, 2.5];
        let ys: Vec<f64> = xs.iter().map(|x| -0.5 * x * x).collect();
        let hull = Hull::build(&xs, &ys, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        for k in -400..400 {
            let x = k as f64 * 0.01;
            assert!(hull.eval(x) >= -0.5 * x * x - 1e-12, "x = {x}");
        }
    }
}
