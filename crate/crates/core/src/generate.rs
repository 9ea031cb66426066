//! Seeded random instances used by the test suites and the CLI.

use rand::Rng;

use crate::coupling::Coupling;
use crate::error::Result;
use crate::measures::DiscreteMeasure;
use crate::mot1d::SeparationInterval;
use crate::verify::classify;

/// A separated pair in convex order together with its interval.
#[derive(Clone, Debug)]
pub struct SeparatedInstance {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub interval: SeparationInterval,
}

/// Random probability weights of the given length.
fn weights(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Sends each `mu` atom to the two sides with a random kernel whose
/// barycenter is the atom, which puts the result in convex order above `mu`.
fn martingale_image(
    rng: &mut impl Rng,
    mu: &[(f64, f64)],
    lower: &[f64],
    upper: &[f64],
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(x, m) in mu {
        let wl = weights(rng, lower.len());
        let wu = weights(rng, upper.len());
        let yl: f64 = wl.iter().zip(lower).map(|(w, y)| w * y).sum();
        let yu: f64 = wu.iter().zip(upper).map(|(w, y)| w * y).sum();
        let theta = (yu - x) / (yu - yl);
        out.extend(lower.iter().zip(&wl).map(|(y, w)| (*y, m * theta * w)));
        out.extend(upper.iter().zip(&wu).map(|(y, w)| (*y, m * (1.0 - theta) * w)));
    }
    out
}

fn normalized(atoms: &[(f64, f64)], total: f64) -> Result<DiscreteMeasure> {
    let scaled: Vec<(f64, f64)> = atoms.iter().map(|(x, m)| (*x, m / total)).collect();
    DiscreteMeasure::from_1d(&scaled)
}

/// Random separated instance: `mu` inside `(a, b)` with
/// `a` in `(-1.5, -0.3)` and `b` in `(0.3, 1.5)`, `nu` on `[-3, a]` and
/// `[b, 3]`, at most `max_atoms` atoms per marginal, total mass one.
pub fn random_separated(rng: &mut impl Rng, max_atoms: usize) -> Result<SeparatedInstance> {
    let max_atoms = max_atoms.max(2);
    let a = rng.random_range(-1.5..-0.3);
    let b = rng.random_range(0.3..1.5);
    let margin = 1e-3 * (b - a);

    let n_mu = rng.random_range(1..=max_atoms);
    let mu: Vec<(f64, f64)> = (0..n_mu)
        .map(|_| (rng.random_range(a + margin..b - margin), rng.random_range(0.1..1.0)))
        .collect();
    let n_lower = rng.random_range(1..=max_atoms / 2);
    let n_upper = rng.random_range(1..=max_atoms - n_lower);
    let lower: Vec<f64> = (0..n_lower).map(|_| rng.random_range(-3.0..=a)).collect();
    let upper: Vec<f64> = (0..n_upper).map(|_| rng.random_range(b..=3.0)).collect();

    let nu = martingale_image(rng, &mu, &lower, &upper);
    let total: f64 = mu.iter().map(|(_, m)| m).sum();
    Ok(SeparatedInstance {
        mu: normalized(&mu, total)?,
        nu: normalized(&nu, total)?,
        interval: SeparationInterval::new(a, b)?,
    })
}

/// Random pair in convex order on the half-integer grid of `[-3, 3]`,
/// where every `mu` atom keeps part of its mass in place, so the two
/// marginals share atoms.
pub fn random_overlapping(rng: &mut impl Rng, max_atoms: usize) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let grid = |k: i32| k as f64 * 0.5;
    let n_mu = rng.random_range(1..=max_atoms.max(1));
    let mut mu = Vec::new();
    let mut nu = Vec::new();
    for _ in 0..n_mu {
        let k = rng.random_range(-4..=4);
        let x = grid(k);
        let m = rng.random_range(0.1..1.0);
        let kept = rng.random_range(0.2..0.8);
        let y_minus = grid(rng.random_range(-6..k));
        let y_plus = grid(rng.random_range(k + 1..=6));
        let moving = m * (1.0 - kept);
        let theta = (y_plus - x) / (y_plus - y_minus);
        mu.push((x, m));
        nu.push((x, m * kept));
        nu.push((y_minus, moving * theta));
        nu.push((y_plus, moving * (1.0 - theta)));
    }
    let total: f64 = mu.iter().map(|(_, m)| m).sum();
    Ok((normalized(&mu, total)?, normalized(&nu, total)?))
}

/// Random pair that is not in convex order, cycling through three kinds:
/// a separated pair with its marginals exchanged, a separated pair with
/// `nu` shifted, and a separated pair with `nu` rescaled in mass.
pub fn random_not_in_order(rng: &mut impl Rng, max_atoms: usize, kind: usize) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let inst = random_separated(rng, max_atoms)?;
    match kind % 3 {
        0 => Ok((inst.nu, inst.mu)),
        1 => {
            let shift = rng.random_range(0.05..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let nu = inst.nu.map_points(|p| vec![p[0] + shift])?;
            Ok((inst.mu, nu))
        }
        _ => {
            let factor = rng.random_range(1.05..1.5);
            Ok((inst.mu, inst.nu.scaled(factor)?))
        }
    }
}

/// Moves mass inside a 1-D plan so that it contains a forbidden
/// configuration while keeping both marginals and every row barycenter.
///
/// Row `x1` with targets `y- < y+` gives `t d` at `y-` and `(1 - t) d` at
/// `y+` to row `x2`, and receives `d` at `y'` from it, where
/// `t y- + (1 - t) y+ = y'`. Returns `None` when no such pair of rows exists.
pub fn plant_swap(pi: &Coupling) -> Option<Coupling> {
    let rows = pi.rows();
    for r1 in &rows {
        for (i, (ym, mm)) in r1.targets.iter().enumerate() {
            for (yp, mp) in &r1.targets[i + 1..] {
                for r2 in rows.iter().filter(|r| r.x != r1.x) {
                    for (yq, mq) in &r2.targets {
                        let (y_minus, y_plus, y_prime) = (ym[0], yp[0], yq[0]);
                        if classify(r2.x[0], y_minus, y_plus, r1.x[0], y_prime).is_none() {
                            continue;
                        }
                        let t = (y_plus - y_prime) / (y_plus - y_minus);
                        let d = 0.5 * (mm / t).min(mp / (1.0 - t)).min(*mq);
                        let (x1, x2) = (r1.x[0], r2.x[0]);
                        let moves = [
                            (x1, y_minus, -t * d),
                            (x1, y_plus, -(1.0 - t) * d),
                            (x1, y_prime, d),
                            (x2, y_minus, t * d),
                            (x2, y_plus, (1.0 - t) * d),
                            (x2, y_prime, -d),
                        ];
                        let mut entries: Vec<(f64, f64, f64)> =
                            pi.canonical().entries().iter().map(|e| (e.x[0], e.y[0], e.mass)).collect();
                        for (x, y, dm) in moves {
                            match entries.iter_mut().find(|e| e.0 == x && e.1 == y) {
                                Some(e) => e.2 += dm,
                                None => entries.push((x, y, dm)),
                            }
                        }
                        return Coupling::from_1d(&entries).ok();
                    }
                }
            }
        }
    }
    None
}

/// Random instance of one of the two forbidden patterns, as
/// `(x, y-, y+, x', y', p)` with `p` in `(0, 1]`.
pub fn random_forbidden(rng: &mut impl Rng) -> (f64, f64, f64, f64, f64, f64) {
    let mut ys = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
    ys.sort_by(f64::total_cmp);
    let [y_minus, y_prime, y_plus] = ys;
    let p = 1.0 - rng.random::<f64>();
    if rng.random_bool(0.5) {
        // y- < x' < x <= y'
        let x = y_minus + (y_prime - y_minus) * (1.0 - rng.random::<f64>());
        let x_prime = y_minus + (x - y_minus) * rng.random_range(0.01..0.99);
        (x, y_minus, y_plus, x_prime, y_prime, p)
    } else {
        // y' <= x < x' < y+
        let x = y_prime + (y_plus - y_prime) * rng.random::<f64>();
        let x_prime = x + (y_plus - x) * rng.random_range(0.01..0.99);
        (x, y_minus, y_plus, x_prime, y_prime, p)
    }
}
