use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Z-scored data with the column moments used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub z: DMatrix<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Column-wise z-scores with the population standard deviation (divisor n).
pub fn standardize(x: &DMatrix<f64>, labels: &[String]) -> Result<Standardized> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::InsufficientData("no rows to standardize".into()));
    }
    let mut z = x.clone();
    let mut means = Vec::with_capacity(x.ncols());
    let mut sds = Vec::with_capacity(x.ncols());
    for (j, mut col) in z.column_iter_mut().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) || !sd.is_finite() {
            let name = labels.get(j).cloned().unwrap_or_else(|| format!("column {j}"));
            return Err(Error::DegenerateColumn(name));
        }
        col.apply(|v| *v = (*v - mean) / sd);
        means.push(mean);
        sds.push(sd);
    }
    Ok(Standardized { z, means, sds })
}

pub fn correlation(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.nrows() as f64;
    let mut c = z.transpose() * z / n;
    for i in 0..c.nrows() {
        c[(i, i)] = 1.0;
    }
    c
}

/// Eigenvalues (descending) and matching unit eigenvectors as columns, each
/// signed so its largest-magnitude entry is positive.
pub fn sorted_eigen(corr: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(corr.clone());
    let p = corr.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(p, p);
    for (dst, &k) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(dst, &v);
    }
    (values, vectors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub labels: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub retained: usize,
    /// p x k, row-major.
    pub loadings: Vec<Vec<f64>>,
    /// k x k, orthogonal.
    pub rotation: Vec<Vec<f64>>,
    /// `loadings * rotation`, p x k.
    pub rotated: Vec<Vec<f64>>,
    pub explained_variance: f64,
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let cols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

/// Kaiser retention on a correlation matrix: components with eigenvalue
/// strictly above 1, at least one.
pub fn pca_from_correlation(corr: &DMatrix<f64>) -> (Vec<f64>, usize, DMatrix<f64>) {
    let (values, vectors) = sorted_eigen(corr);
    let mut k = values.iter().filter(|&&l| l > 1.0).count();
    if k == 0 {
        log::warn!("no eigenvalue exceeds 1; retaining the first component");
        k = 1;
    }
    let mut loadings = DMatrix::zeros(corr.nrows(), k);
    for j in 0..k {
        let s = values[j].max(0.0).sqrt();
        loadings.set_column(j, &(vectors.column(j) * s));
    }
    (values, k, loadings)
}

pub const VARIMAX_TOL: f64 = 1e-12;
pub const VARIMAX_MAX_ITER: usize = 500;

pub fn fit_pca(data: &Standardized, labels: &[String]) -> Result<PcaModel> {
    let (n, p) = data.z.shape();
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} respondents for {p} items; need more respondents than items")));
    }
    let corr = correlation(&data.z);
    let (eigenvalues, retained, loadings) = pca_from_correlation(&corr);
    let (rotated, rotation) = varimax(&loadings, VARIMAX_TOL, VARIMAX_MAX_ITER);
    let explained_variance = eigenvalues[..retained].iter().sum::<f64>() / p as f64;
    Ok(PcaModel {
        labels: labels.to_vec(),
        means: data.means.clone(),
        sds: data.sds.clone(),
        eigenvalues,
        retained,
        loadings: to_rows(&loadings),
        rotation: to_rows(&rotation),
        rotated: to_rows(&rotated),
        explained_variance,
    })
}

/// Raw varimax criterion: sum over columns of the variance of squared entries.
pub fn varimax_criterion(l: &DMatrix<f64>) -> f64 {
    let p = l.nrows() as f64;
    l.column_iter()
        .map(|c| {
            let s2: f64 = c.iter().map(|v| v * v).sum();
            let s4: f64 = c.iter().map(|v| v.powi(4)).sum();
            s4 / p - (s2 / p).powi(2)
        })
        .sum()
}

/// Pairwise planar varimax with Kaiser row normalization. Returns the rotated
/// loadings and the orthogonal rotation `R` with `rotated = loadings * R`.
/// Columns are signed so each has a non-negative sum.
pub fn varimax(loadings: &DMatrix<f64>, tol: f64, max_iter: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (p, k) = loadings.shape();
    let mut r = DMatrix::<f64>::identity(k, k);
    if k < 2 {
        return (loadings.clone(), r);
    }
    let h: Vec<f64> = loadings.row_iter().map(|row| row.norm()).collect();
    let mut x = loadings.clone();
    for (i, &hi) in h.iter().enumerate() {
        if hi > 0.0 {
            x.row_mut(i).scale_mut(1.0 / hi);
        }
    }
    let pf = p as f64;
    let mut crit = varimax_criterion(&x);
    for _ in 0..max_iter {
        for a in 0..k - 1 {
            for b in a + 1..k {
                let (mut sa, mut sb, mut sc, mut sd) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    let u = xa * xa - xb * xb;
                    let v = 2.0 * xa * xb;
                    sa += u;
                    sb += v;
                    sc += u * u - v * v;
                    sd += 2.0 * u * v;
                }
                let num = sd - 2.0 * sa * sb / pf;
                let den = sc - (sa * sa - sb * sb) / pf;
                let phi = 0.25 * num.atan2(den);
                if phi == 0.0 {
                    continue;
                }
                let (s, c) = phi.sin_cos();
                for m in [&mut x, &mut r] {
                    for i in 0..m.nrows() {
                        let (ma, mb) = (m[(i, a)], m[(i, b)]);
                        m[(i, a)] = c * ma + s * mb;
                        m[(i, b)] = -s * ma + c * mb;
                    }
                }
            }
        }
        let next = varimax_criterion(&x);
        let gain = next - crit;
        crit = next;
        if gain < tol {
            break;
        }
    }
    let mut rotated = loadings * &r;
    for j in 0..k {
        if rotated.column(j).sum() < 0.0 {
            rotated.column_mut(j).neg_mut();
            r.column_mut(j).neg_mut();
        }
    }
    (rotated, r)
}

/// Root mean square of off-diagonal residuals between the observed
/// correlations and `rotated * rotated^T`, over the strict lower triangle.
pub fn srmr(observed: &DMatrix<f64>, rotated: &DMatrix<f64>) -> Result<f64> {
    let p = observed.nrows();
    if observed.ncols() != p || rotated.nrows() != p {
        return Err(Error::invalid(format!(
            "correlation is {}x{}, loadings have {} rows",
            p,
            observed.ncols(),
            rotated.nrows()
        )));
    }
    if p < 2 {
        return Ok(0.0);
    }
    let implied = rotated * rotated.transpose();
    let mut sum = 0.0;
    for i in 1..p {
        for j in 0..i {
            sum += (observed[(i, j)] - implied[(i, j)]).powi(2);
        }
    }
    Ok((sum / (p * (p - 1) / 2) as f64).sqrt())
}

impl PcaModel {
    pub fn rotated_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.rotated)
    }

    pub fn rotation_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.rotation)
    }

    /// Least-squares component scores of raw item rows:
    /// `Z L (L^T L)^-1` with `L` the rotated loadings.
    pub fn scores(&self, items: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if items.ncols() != self.means.len() {
            return Err(Error::invalid(format!("{} item columns, model has {}", items.ncols(), self.means.len())));
        }
        let mut z = items.clone();
        for (j, mut col) in z.column_iter_mut().enumerate() {
            let (m, s) = (self.means[j], self.sds[j]);
            col.apply(|v| *v = (*v - m) / s);
        }
        let l = self.rotated_matrix();
        let gram = l.transpose() * &l;
        let inv = gram
            .try_inverse()
            .ok_or_else(|| Error::Numerical("rotated loadings are rank deficient".into()))?;
        Ok(z * l * inv)
    }

    /// Row index of the largest absolute rotated loading in each component.
    pub fn dominant_items(&self) -> Vec<usize> {
        (0..self.retained)
            .map(|j| {
                (0..self.rotated.len())
                    .fold((0, f64::NEG_INFINITY), |best, i| {
                        let v = self.rotated[i][j].abs();
                        if v > best.1 {
                            (i, v)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_example() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let s = standardize(&x, &["a".into()]).unwrap();
        let k = 1.0 / (2.0f64 / 3.0).sqrt();
        for (got, want) in s.z.iter().zip([-k, 0.0, k]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((s.z[(0, 0)] + 1.2247).abs() < 1e-4);
        let again = standardize(&s.z, &["a".into()]).unwrap();
        assert!((again.z - &s.z).abs().max() < 1e-12);
    }

    #[test]
    fn constant_column_names_item() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        match standardize(&x, &["a".into(), "b".into()]) {
            Err(Error::DegenerateColumn(name)) => assert_eq!(name, "b"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_by_two_correlation() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
        let (values, k, loadings) = pca_from_correlation(&c);
        assert!((values[0] - 1.8).abs() < 1e-12 && (values[1] - 0.2).abs() < 1e-12);
        assert_eq!(k, 1);
        assert!((loadings[(0, 0)] - 0.9f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identity_falls_back_to_one() {
        let (_, k, _) = pca_from_correlation(&DMatrix::identity(4, 4));
        assert_eq!(k, 1);
    }

    #[test]
    fn varimax_fixed_points() {
        let l = DMatrix::from_column_slice(3, 1, &[0.5, 0.7, 0.1]);
        let (rot, r) = varimax(&l, 1e-12, 100);
        assert_eq!(rot, l);
        assert_eq!(r, DMatrix::identity(1, 1));

        let simple = DMatrix::from_row_slice(4, 2, &[0.9, 0.0, 0.8, 0.0, 0.0, 0.7, 0.0, 0.6]);
        let (rot, r) = varimax(&simple, 1e-12, 100);
        assert!((r - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-12);
        assert!((rot - simple).abs().max() < 1e-12);
    }

    #[test]
    fn srmr_examples() {
        let obs = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
        let l = DMatrix::from_column_slice(2, 1, &[0.7f64.sqrt(), 0.7f64.sqrt()]);
        assert!((srmr(&obs, &l).unwrap() - 0.1).abs() < 1e-12);
        let l = DMatrix::from_column_slice(2, 1, &[0.8f64.sqrt(), 0.8f64.sqrt()]);
        assert!(srmr(&obs, &l).unwrap() < 1e-12);
    }

    #[test]
    fn too_few_rows() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let s = standardize(&x, &[]).unwrap();
        assert!(matches!(fit_pca(&s, &[]), Err(Error::InsufficientData(_))));
    }
}
