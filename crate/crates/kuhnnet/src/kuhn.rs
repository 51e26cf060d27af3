//! Reflected Kuhn triangulation of `[0, n]^d` and the reference interpolant.
//!
//! Coordinates here are in lattice units unless a function says otherwise.
//! Axes and permutations are 0-based.

use crate::error::{Error, Result};
use crate::grid::SampleGrid;

/// One simplex of the triangulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KuhnSimplexRef {
    /// Lower corner of the unit cell.
    pub cell: Vec<usize>,
    /// Axis order of the vertex chain.
    pub perm: Vec<usize>,
    /// `cell[i] % 2`; odd cells are mirrored along that axis.
    pub reflection: Vec<bool>,
}

/// Hat function centred at lattice point `y`, evaluated at `x`.
///
/// `σ(1 - max_{y_i even} |x_i - y_i| - max_{y_i odd} |x_i - y_i|)`, with the
/// max over an empty set taken as 0.
pub fn hat_value(y: &[usize], x: &[f64]) -> f64 {
    let mut even = 0.0f64;
    let mut odd = 0.0f64;
    for (&yi, &xi) in y.iter().zip(x) {
        let gap = (xi - yi as f64).abs();
        if yi % 2 == 0 {
            even = even.max(gap);
        } else {
            odd = odd.max(gap);
        }
    }
    (1.0 - even - odd).max(0.0)
}

/// Finds a simplex containing `x ∈ [0, n]^d`. Ties between equal local
/// coordinates go to the smaller axis.
pub fn locate_simplex(x: &[f64], n: usize) -> Result<KuhnSimplexRef> {
    let (simplex, _) = locate_with_local(x, n)?;
    Ok(simplex)
}

fn locate_with_local(x: &[f64], n: usize) -> Result<(KuhnSimplexRef, Vec<f64>)> {
    if x.is_empty() || n == 0 {
        return Err(Error::input("empty point or zero resolution"));
    }
    let top = n as f64;
    let mut cell = Vec::with_capacity(x.len());
    let mut reflection = Vec::with_capacity(x.len());
    let mut u = Vec::with_capacity(x.len());
    for &xi in x {
        if !(0.0..=top).contains(&xi) {
            return Err(Error::domain(format!("coordinate {xi} outside [0, {n}]")));
        }
        let c = (xi.floor() as usize).min(n - 1);
        let frac = xi - c as f64;
        let odd = c % 2 == 1;
        cell.push(c);
        reflection.push(odd);
        u.push(if odd { 1.0 - frac } else { frac });
    }
    let mut perm: Vec<usize> = (0..x.len()).collect();
    perm.sort_by(|&a, &b| u[b].total_cmp(&u[a]));
    Ok((KuhnSimplexRef { cell, perm, reflection }, u))
}

/// The `d + 1` chain vertices of a simplex, in chain order.
pub fn simplex_vertices(s: &KuhnSimplexRef) -> Vec<Vec<usize>> {
    let d = s.cell.len();
    let mut local = vec![0usize; d];
    let mut out = Vec::with_capacity(d + 1);
    let map = |local: &[usize]| -> Vec<usize> {
        (0..d)
            .map(|i| {
                if s.reflection[i] {
                    s.cell[i] + 1 - local[i]
                } else {
                    s.cell[i] + local[i]
                }
            })
            .collect()
    };
    out.push(map(&local));
    for &axis in &s.perm {
        local[axis] = 1;
        out.push(map(&local));
    }
    out
}

fn check_cube(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::input(format!("point has {} coordinates, grid has d={d}", x.len())));
    }
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::domain(format!("coordinate {v} outside [0, 1]")));
    }
    Ok(())
}

/// Barycentric interpolation of the grid on its Kuhn simplex; `x ∈ [0,1]^d`.
pub fn cpwl_eval(grid: &SampleGrid, x: &[f64]) -> Result<f64> {
    check_cube(x, grid.d())?;
    let n = grid.n();
    let z: Vec<f64> = x.iter().map(|&v| (v * n as f64).min(n as f64)).collect();
    let (s, u) = locate_with_local(&z, n)?;
    let verts = simplex_vertices(&s);
    // λ_0 = 1 - u_{τ1}, λ_k = u_{τk} - u_{τ(k+1)}, λ_d = u_{τd}
    let mut acc = 0.0;
    let mut prev = 1.0;
    for (k, v) in verts.iter().enumerate() {
        let next = if k < s.perm.len() { u[s.perm[k]] } else { 0.0 };
        let lambda = prev - next;
        if lambda != 0.0 {
            acc += lambda * grid.value(v);
        }
        prev = next;
    }
    Ok(acc)
}

/// `Σ_y f(y) T_y(n x)` summed over every lattice point. Slow; used as an
/// independent check on [`cpwl_eval`].
pub fn cpwl_eval_hat(grid: &SampleGrid, x: &[f64]) -> Result<f64> {
    check_cube(x, grid.d())?;
    let n = grid.n() as f64;
    let z: Vec<f64> = x.iter().map(|&v| v * n).collect();
    Ok(grid
        .indices()
        .zip(grid.values())
        .map(|(y, &f)| f * hat_value(&y, &z))
        .sum())
}

/// Largest `n |Δf|` over axis-parallel lattice edges: the exact `l1`
/// Lipschitz constant of the interpolant.
pub fn exact_lipschitz_l1(grid: &SampleGrid) -> f64 {
    let (d, n) = (grid.d(), grid.n());
    let vals = grid.values();
    let mut best = 0.0f64;
    for (flat, idx) in grid.indices().enumerate() {
        let mut stride = 1;
        for axis in (0..d).rev() {
            if idx[axis] < n {
                let gap = (vals[flat + stride] - vals[flat]).abs();
                best = best.max(gap * n as f64);
            }
            stride *= n + 1;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DEFAULT_MAX_LATTICE;

    #[test]
    fn hat_examples() {
        assert_eq!(hat_value(&[3, 4], &[3.0, 4.0]), 1.0);
        assert_eq!(hat_value(&[0, 0], &[0.5, 0.5]), 0.5);
        assert_eq!(hat_value(&[1, 2], &[2.0, 2.0]), 0.0);
    }

    #[test]
    fn locate_examples() {
        let s = locate_simplex(&[0.7, 0.2], 1).unwrap();
        assert_eq!((s.cell.as_slice(), s.perm.as_slice()), (&[0, 0][..], &[0, 1][..]));
        let s = locate_simplex(&[0.5, 0.5], 1).unwrap();
        assert_eq!(s.perm, vec![0, 1]);
        let s = locate_simplex(&[1.2, 0.9, 0.4], 2).unwrap();
        assert_eq!(s.cell, vec![1, 0, 0]);
        assert_eq!(s.reflection, vec![true, false, false]);
        assert_eq!(s.perm, vec![1, 0, 2]);
        assert!(matches!(locate_simplex(&[2.5], 2), Err(Error::Domain(_))));
        assert_eq!(locate_simplex(&[2.0], 2).unwrap().cell, vec![1]);
    }

    #[test]
    fn vertex_examples() {
        let s = KuhnSimplexRef { cell: vec![0, 0], perm: vec![0, 1], reflection: vec![false, false] };
        assert_eq!(simplex_vertices(&s), vec![vec![0, 0], vec![1, 0], vec![1, 1]]);
        let s = KuhnSimplexRef { cell: vec![1, 0], perm: vec![0, 1], reflection: vec![true, false] };
        assert_eq!(simplex_vertices(&s), vec![vec![2, 0], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn saddle_grid_value() {
        let g = SampleGrid::new(2, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((cpwl_eval(&g, &[0.25, 0.5]).unwrap() - 0.25).abs() < 1e-15);
        assert!((cpwl_eval_hat(&g, &[0.25, 0.5]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_of_ridge() {
        let g = SampleGrid::from_fn(2, 2, DEFAULT_MAX_LATTICE, |x| (x[0] - 0.5).abs()).unwrap();
        assert_eq!(exact_lipschitz_l1(&g), 1.0);
        let c = SampleGrid::new(1, 3, vec![2.0; 4]).unwrap();
        assert_eq!(exact_lipschitz_l1(&c), 0.0);
    }
}
