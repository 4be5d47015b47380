use nalgebra::{DMatrix, SymmetricEigen};

use super::{BoundaryCondition, Coefficient, CrossSection, Eigenfunction, Normalization, TransverseSpectrum};
use crate::error::{Error, Result};

/// Discrete spectrum of `-(a u')' = lambda u` on `(0,1)` with a
/// vertex-centered conservative scheme on `m_grid` cells. The coefficient is
/// sampled at cell midpoints and the mass matrix is lumped.
pub fn sturm_liouville_spectrum(
    a: &Coefficient,
    bc: BoundaryCondition,
    m_grid: usize,
    n: usize,
    normalization: Normalization,
) -> Result<TransverseSpectrum> {
    let cs = CrossSection::interval(a.clone())?;
    if m_grid < 16 {
        return Err(Error::domain(format!("grid needs at least 16 cells, got {m_grid}")));
    }
    if n == 0 || n > m_grid - 1 {
        return Err(Error::domain(format!("mode count {n} must lie in 1..={}", m_grid - 1)));
    }
    let h = 1.0 / m_grid as f64;
    let nodes: Vec<f64> = (0..=m_grid).map(|i| i as f64 * h).collect();
    let amid: Vec<f64> = (0..m_grid).map(|e| a.eval((e as f64 + 0.5) * h)).collect();

    // Unknown nodes: all for Neumann, interior for Dirichlet.
    let (first, last) = match bc {
        BoundaryCondition::Neumann => (0, m_grid),
        BoundaryCondition::Dirichlet => (1, m_grid - 1),
    };
    let dim = last - first + 1;
    let weight = |i: usize| if i == 0 || i == m_grid { 0.5 * h } else { h };
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    for e in 0..m_grid {
        let s = amid[e] / h;
        for (i, j, v) in [(e, e, s), (e + 1, e + 1, s), (e, e + 1, -s), (e + 1, e, -s)] {
            if i >= first && i <= last && j >= first && j <= last {
                k[(i - first, j - first)] += v;
            }
        }
    }
    let isw: Vec<f64> = (first..=last).map(|i| 1.0 / weight(i).sqrt()).collect();
    for i in 0..dim {
        for j in 0..dim {
            k[(i, j)] *= isw[i] * isw[j];
        }
    }
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenfunctions = Vec::with_capacity(n);
    for &col in order.iter().take(n) {
        let mut lambda = eig.eigenvalues[col];
        if bc == BoundaryCondition::Neumann && lambda.abs() < 1e-10 {
            lambda = lambda.abs();
        }
        let mut values = vec![0.0; m_grid + 1];
        for i in 0..dim {
            values[i + first] = eig.eigenvectors[(i, col)] * isw[i];
        }
        // Fix the sign so the first significant entry is positive.
        let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if let Some(v) = values.iter().find(|v| v.abs() > 1e-3 * peak) {
            if *v < 0.0 {
                values.iter_mut().for_each(|x| *x = -*x);
            }
        }
        eigenvalues.push(lambda);
        eigenfunctions.push(Eigenfunction::Grid { nodes: nodes.clone(), values });
    }
    let spec = TransverseSpectrum { cross_section: cs, bc, normalization: Normalization::UnitL2, eigenvalues, eigenfunctions };
    spec.with_normalization(normalization)
}
