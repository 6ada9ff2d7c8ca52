#![allow(dead_code)]

use cutnitsche_core::cut::{classify_cells, CellClassification, CutQuadrature, QuadratureOptions};
use cutnitsche_core::levelset::LevelSet;
use cutnitsche_core::mesh::{build_structured_mesh, BoxDomain, Mesh};
use cutnitsche_core::space::{build_space, FeSpace};
use cutnitsche_core::sparse::CsrMatrix;

pub struct Setup {
    pub mesh: Mesh,
    pub cls: CellClassification,
    pub quad: CutQuadrature,
    pub space: FeSpace,
}

pub fn setup(n: usize, domain: BoxDomain, ls: &LevelSet, k: usize) -> Setup {
    let mesh = build_structured_mesh(n, domain).unwrap();
    let cls = classify_cells(&mesh, ls, 1e-12 * mesh.h());
    let quad = CutQuadrature::build(&mesh, &cls, ls, QuadratureOptions::for_degree(k, 2)).unwrap();
    let space = build_space(&mesh, &cls, k).unwrap();
    Setup {
        mesh,
        cls,
        quad,
        space,
    }
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = a.to_dense();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        assert!(m[piv][col].abs() > 0.0, "singular matrix");
        m.swap(col, piv);
        x.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..n {
                    m[r][c] -= f * m[col][c];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (x[r] - s) / m[r][r];
    }
    x
}
