use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::matrix::eigen_sorted;
use super::sphere::{direction_from_angles, Direction, SphereSampling};
use crate::error::Result;
use crate::stiffness::{StiffnessField, StiffnessTensor};

/// Eigenvalues and the qP relative gap at one sampled direction.
#[derive(Debug, Clone, Serialize)]
pub struct GapSample {
    pub theta: f64,
    pub phi: Option<f64>,
    pub eigenvalues: Vec<f64>,
    /// `(λ1 − λ2)/λ1`, or 0 where `λ1 ≤ 0`.
    pub rel_gap: f64,
}

fn qp_gap(eigenvalues: &[f64]) -> f64 {
    let l1 = eigenvalues[0];
    if l1 <= 0.0 {
        0.0
    } else {
        ((l1 - eigenvalues[1]) / l1).clamp(0.0, 1.0)
    }
}

/// Smallest adjacent gap relative to the spectral scale, with the index `k`
/// of the pair `(λ_k, λ_{k+1})` (zero-based).
fn min_adjacent_gap(eigenvalues: &[f64]) -> (f64, usize) {
    let scale = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    eigenvalues
        .windows(2)
        .enumerate()
        .map(|(k, w)| ((w[0] - w[1]) / scale, k))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

pub fn gap_sweep(c: &StiffnessTensor<f64>, sampling: SphereSampling) -> Result<Vec<GapSample>> {
    let dirs = sampling.directions(c.dim())?;
    dirs.par_iter()
        .map(|d| {
            let e = eigen_sorted(c, &d.unit)?;
            Ok(GapSample {
                theta: d.theta,
                phi: d.phi,
                rel_gap: qp_gap(&e.eigenvalues),
                eigenvalues: e.eigenvalues,
            })
        })
        .collect()
}

/// CSV with header `theta[,phi],lambda1,..,lambdan,rel_gap`.
pub fn gap_csv(samples: &[GapSample]) -> String {
    let mut out = String::new();
    let Some(first) = samples.first() else {
        return "theta,rel_gap\n".to_string();
    };
    out.push_str("theta");
    if first.phi.is_some() {
        out.push_str(",phi");
    }
    for k in 1..=first.eigenvalues.len() {
        let _ = write!(out, ",lambda{k}");
    }
    out.push_str(",rel_gap\n");
    for s in samples {
        let _ = write!(out, "{}", s.theta);
        if let Some(phi) = s.phi {
            let _ = write!(out, ",{phi}");
        }
        for l in &s.eigenvalues {
            let _ = write!(out, ",{l}");
        }
        let _ = writeln!(out, ",{}", s.rel_gap);
    }
    out
}

/// Minimum sampled qP gap with a Lipschitz-style certification margin.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub min_gap: f64,
    pub argmin: Vec<f64>,
    /// Base point of the minimum for field sweeps.
    pub argmin_point: Option<Vec<f64>>,
    pub samples: usize,
    /// Largest observed slope of the gap between neighbouring directions.
    pub lipschitz_estimate: f64,
    /// Angular covering radius of the sample set.
    pub covering_radius: f64,
    /// `min_gap − lipschitz_estimate · covering_radius`.
    pub margin: f64,
    /// Sampled directions with `λ1 ≤ 0` (non-physical tensor).
    pub nonpositive_directions: usize,
    pub separate: bool,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Indices of the `k` nearest sampled directions of every sample (circle:
/// the two angular neighbours).
pub(crate) fn neighbours(dirs: &[Direction], k: usize) -> Vec<Vec<usize>> {
    let n = dirs.len();
    if dirs.first().is_some_and(|d| d.phi.is_none()) {
        return (0..n).map(|i| vec![(i + n - 1) % n, (i + 1) % n]).collect();
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut ds: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist(&dirs[i].unit, &dirs[j].unit), j)).collect();
            ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ds.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

struct LocalStats {
    min_gap: f64,
    argmin: usize,
    lipschitz: f64,
    nonpositive: usize,
}

fn local_stats(dirs: &[Direction], nbrs: &[Vec<usize>], gaps: &[f64], lambda1: &[f64]) -> LocalStats {
    let mut s = LocalStats {
        min_gap: f64::INFINITY,
        argmin: 0,
        lipschitz: 0.0,
        nonpositive: lambda1.iter().filter(|l| **l <= 0.0).count(),
    };
    for (i, g) in gaps.iter().enumerate() {
        if *g < s.min_gap {
            s.min_gap = *g;
            s.argmin = i;
        }
        for &j in &nbrs[i] {
            let d = dist(&dirs[i].unit, &dirs[j].unit);
            if d > 0.0 {
                s.lipschitz = s.lipschitz.max((gaps[i] - gaps[j]).abs() / d);
            }
        }
    }
    s
}

fn covering_radius(dirs: &[Direction], nbrs: &[Vec<usize>]) -> f64 {
    if dirs.first().is_some_and(|d| d.phi.is_none()) {
        return std::f64::consts::PI / dirs.len() as f64;
    }
    // farthest nearest neighbour bounds the hole size of the lattice
    dirs.iter()
        .zip(nbrs)
        .map(|(d, nb)| dist(&d.unit, &dirs[nb[0]].unit))
        .fold(0.0, f64::max)
}

fn gaps_at(c: &StiffnessTensor<f64>, dirs: &[Direction]) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs: Result<Vec<(f64, f64)>> = dirs
        .par_iter()
        .map(|d| {
            let e = eigen_sorted(c, &d.unit)?;
            Ok((qp_gap(&e.eigenvalues), e.eigenvalues[0]))
        })
        .collect();
    Ok(pairs?.into_iter().unzip())
}

pub fn qp_gap_margin(c: &StiffnessTensor<f64>, sampling: SphereSampling) -> Result<GapReport> {
    let dirs = sampling.directions(c.dim())?;
    let nbrs = neighbours(&dirs, 6);
    let rho = covering_radius(&dirs, &nbrs);
    let (gaps, l1) = gaps_at(c, &dirs)?;
    let s = local_stats(&dirs, &nbrs, &gaps, &l1);
    let margin = s.min_gap - s.lipschitz * rho;
    Ok(GapReport {
        min_gap: s.min_gap,
        argmin: dirs[s.argmin].unit.clone(),
        argmin_point: None,
        samples: dirs.len(),
        lipschitz_estimate: s.lipschitz,
        covering_radius: rho,
        margin,
        nonpositive_directions: s.nonpositive,
        separate: s.nonpositive == 0 && s.min_gap > 0.0 && margin > 0.0,
    })
}

/// Field version: the minimum runs over base points and directions; the
/// margin is the worst per-point margin.
pub fn qp_gap_margin_field(field: &StiffnessField, points: &[Vec<f64>], sampling: SphereSampling) -> Result<GapReport> {
    let dirs = sampling.directions(field.dim())?;
    let nbrs = neighbours(&dirs, 6);
    let rho = covering_radius(&dirs, &nbrs);
    let mut report = GapReport {
        min_gap: f64::INFINITY,
        argmin: dirs[0].unit.clone(),
        argmin_point: None,
        samples: 0,
        lipschitz_estimate: 0.0,
        covering_radius: rho,
        margin: f64::INFINITY,
        nonpositive_directions: 0,
        separate: false,
    };
    for x in points {
        let c = field.tensor_at(x)?;
        let (gaps, l1) = gaps_at(&c, &dirs)?;
        let s = local_stats(&dirs, &nbrs, &gaps, &l1);
        report.samples += dirs.len();
        report.nonpositive_directions += s.nonpositive;
        report.lipschitz_estimate = report.lipschitz_estimate.max(s.lipschitz);
        report.margin = report.margin.min(s.min_gap - s.lipschitz * rho);
        if s.min_gap < report.min_gap {
            report.min_gap = s.min_gap;
            report.argmin = dirs[s.argmin].unit.clone();
            report.argmin_point = Some(x.clone());
        }
    }
    report.separate = !points.is_empty() && report.nonpositive_directions == 0 && report.min_gap > 0.0 && report.margin > 0.0;
    Ok(report)
}

/// A direction where two adjacent eigenvalues (nearly) coincide.
#[derive(Debug, Clone, Serialize)]
pub struct Degeneracy {
    pub unit: Vec<f64>,
    pub theta: f64,
    pub phi: Option<f64>,
    /// Zero-based `k` of the coalescing pair `(λ_k, λ_{k+1})`.
    pub pair: usize,
    pub rel_gap: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn refine(c: &StiffnessTensor<f64>, start: &Direction, width: f64) -> Direction {
    let gap = |d: &Direction| eigen_sorted(c, &d.unit).map(|e| min_adjacent_gap(&e.eigenvalues).0).unwrap_or(f64::INFINITY);
    let (mut theta, mut phi) = (start.theta, start.phi);
    let mut best = gap(start);
    let mut w = width;
    for _ in 0..if phi.is_some() { 24 } else { 1 } {
        let (t, v) = golden_section(|t| gap(&direction_from_angles(t, phi)), theta - w, theta + w, 80);
        if v <= best {
            theta = t;
            best = v;
        }
        if let Some(p) = phi {
            let (q, v) = golden_section(|q| gap(&direction_from_angles(theta, Some(q))), p - w, p + w, 80);
            if v <= best {
                phi = Some(q);
                best = v;
            }
            w *= 0.7;
        }
    }
    direction_from_angles(theta, phi)
}

/// Sampled directions whose smallest adjacent relative gap falls below
/// `tol`, plus local minima of the gap that golden-section refinement drives
/// below `tol`.
pub fn degeneracy_scan(c: &StiffnessTensor<f64>, sampling: SphereSampling, tol: f64) -> Result<Vec<Degeneracy>> {
    if !(tol > 0.0) {
        return Err(crate::Error::InvalidInput("degeneracy tolerance must be positive".into()));
    }
    let dim = c.dim();
    let dirs = sampling.directions(dim)?;
    let nbrs = neighbours(&dirs, 6);
    let gaps: Vec<(f64, usize)> = dirs
        .par_iter()
        .map(|d| eigen_sorted(c, &d.unit).map(|e| min_adjacent_gap(&e.eigenvalues)))
        .collect::<Result<_>>()?;
    let width = sampling.spacing(dim);
    let found: Vec<Option<Degeneracy>> = (0..dirs.len())
        .into_par_iter()
        .map(|i| {
            let (g, pair) = gaps[i];
            if g < tol {
                return Some(Degeneracy {
                    unit: dirs[i].unit.clone(),
                    theta: dirs[i].theta,
                    phi: dirs[i].phi,
                    pair,
                    rel_gap: g.max(0.0),
                });
            }
            let is_local_min = nbrs[i].iter().all(|&j| gaps[j].0 > g || (gaps[j].0 == g && j > i));
            if !is_local_min {
                return None;
            }
            let d = refine(c, &dirs[i], width);
            let (g, pair) = eigen_sorted(c, &d.unit).map(|e| min_adjacent_gap(&e.eigenvalues)).ok()?;
            (g < tol).then(|| Degeneracy {
                unit: d.unit,
                theta: d.theta,
                phi: d.phi,
                pair,
                rel_gap: g.max(0.0),
            })
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stiffness::make_isotropic;

    #[test]
    fn isotropic_gap_is_three_quarters() {
        for dim in [2, 3] {
            let c = make_isotropic(dim, 2.0, 1.0);
            let r = qp_gap_margin(&c, SphereSampling::new(256)).unwrap();
            assert!((r.min_gap - 0.75).abs() < 1e-14, "{}", r.min_gap);
            assert!(r.lipschitz_estimate < 1e-12);
            assert!(r.separate);
        }
    }

    #[test]
    fn degenerate_isotropic_has_zero_gap() {
        let c = make_isotropic(2, -1.0, 1.0);
        let r = qp_gap_margin(&c, SphereSampling::new(64)).unwrap();
        assert!(r.min_gap < 1e-14);
        assert!(!r.separate);
    }

    #[test]
    fn nonphysical_tensor_is_flagged() {
        let c = make_isotropic(2, 0.0, -1.0);
        let r = qp_gap_margin(&c, SphereSampling::new(64)).unwrap();
        assert_eq!(r.nonpositive_directions, 64);
        assert!(!r.separate);
    }

    #[test]
    fn perturbation_moves_gap_proportionally() {
        let base = make_isotropic(3, 2.0, 1.0);
        let mut delta = StiffnessTensor::<f64>::zeros(3);
        delta.set([0, 0, 0, 1], 1.0);
        delta.set([1, 1, 2, 2], -0.5);
        for eps in [1e-3, 1e-2] {
            let c = base.add(&delta.scaled(&eps)).unwrap();
            let r = qp_gap_margin(&c, SphereSampling::new(512)).unwrap();
            assert!((r.min_gap - 0.75).abs() < 3.0 * eps, "eps {eps}: {}", r.min_gap);
            assert!(r.separate);
        }
    }

    #[test]
    fn scan_isotropic() {
        let c3 = make_isotropic(3, 2.0, 1.0);
        let found = degeneracy_scan(&c3, SphereSampling::new(128), 1e-8).unwrap();
        assert_eq!(found.len(), 128);
        assert!(found.iter().all(|d| d.pair == 1));
        let c2 = make_isotropic(2, 2.0, 1.0);
        assert!(degeneracy_scan(&c2, SphereSampling::new(128), 1e-8).unwrap().is_empty());
    }

    #[test]
    fn scan_finds_isolated_axis() {
        // c1111 = c1212 and c1112 = 0 make Γ(±e1) the identity; with an odd
        // sample count only +e1 lies on the grid, -e1 needs refinement
        let c = StiffnessTensor::<f64>::from_components(2, [([0, 0, 0, 0], 1.0), ([1, 1, 1, 1], 3.0), ([0, 1, 0, 1], 1.0), ([0, 0, 1, 1], 0.5)]).unwrap();
        let found = degeneracy_scan(&c, SphereSampling::new(101), 1e-8).unwrap();
        assert_eq!(found.len(), 2, "{found:?}");
        assert!(found.iter().all(|d| d.unit[0].abs() > 1.0 - 1e-12));
        assert!(found.iter().any(|d| d.unit[0] < 0.0));
    }

    #[test]
    fn csv_layout() {
        let c = make_isotropic(3, 2.0, 1.0);
        let s = gap_sweep(&c, SphereSampling::new(16)).unwrap();
        let csv = gap_csv(&s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "theta,phi,lambda1,lambda2,lambda3,rel_gap");
        assert_eq!(lines.len(), 17);
        let c = make_isotropic(2, 2.0, 1.0);
        assert!(gap_csv(&gap_sweep(&c, SphereSampling::new(8)).unwrap()).starts_with("theta,lambda1,lambda2,rel_gap\n"));
    }
}
