//! Small dense linear algebra: row-major matrices, LU with partial pivoting,
//! and a Golub–Reinsch SVD.

use super::NumericsError;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(NumericsError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if x.len() != self.cols {
            return Err(NumericsError::Dimension(format!("vector of {} for {} columns", x.len(), self.cols)));
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `diag(l) · A · diag(r)`.
    pub fn scaled(&self, l: &[f64], r: &[f64]) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] *= l[i] * r[j];
            }
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization `PA = LU`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &DenseMatrix) -> Result<Self, NumericsError> {
        if a.rows != a.cols {
            return Err(NumericsError::Dimension(format!("LU of a {}x{} matrix", a.rows, a.cols)));
        }
        if !a.is_finite() {
            return Err(NumericsError::NonFinite { what: "matrix entry", x: f64::NAN });
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let (p, pv) = (k..n).map(|i| (i, lu[i * n + k].abs())).fold((k, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            if pv <= f64::EPSILON * scale * 1e-3 || pv == 0.0 {
                return Err(NumericsError::Singular { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    let (top, bot) = lu.split_at_mut(i * n);
                    let rk = &top[k * n + k + 1..k * n + n];
                    let ri = &mut bot[k + 1..n];
                    for (x, y) in ri.iter_mut().zip(rk) {
                        *x -= f * y;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let n = self.n;
        if b.len() != n {
            return Err(NumericsError::Dimension(format!("rhs of {} for order {n}", b.len())));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Thin SVD `A = U diag(s) Vᵀ` of an `m × n` matrix with `m ≥ n`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m × n`, column j is the left singular vector for `s[j]`
    pub u: DenseMatrix,
    /// singular values, descending
    pub s: Vec<f64>,
    /// `n × n`, column j is the right singular vector for `s[j]`
    pub v: DenseMatrix,
}

impl Svd {
    pub fn right_vector(&self, j: usize) -> Vec<f64> {
        (0..self.v.rows).map(|i| self.v[(i, j)]).collect()
    }
}

fn pythag(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Golub–Reinsch: Householder bidiagonalization then implicit-shift QR.
pub fn svd(a: &DenseMatrix) -> Result<Svd, NumericsError> {
    if !a.is_finite() {
        return Err(NumericsError::NonFinite { what: "matrix entry", x: f64::NAN });
    }
    let (m, n) = (a.rows, a.cols);
    if m < n {
        let t = svd(&a.transpose())?;
        return Ok(Svd { u: t.v, s: t.s, v: t.u });
    }
    let mut u = a.clone();
    let mut w = vec![0.0; n];
    let mut v = DenseMatrix::zeros(n, n);
    let mut rv1 = vec![0.0; n];
    let (mut g, mut scale, mut anorm) = (0.0f64, 0.0f64, 0.0f64);
    let mut l = 0;
    for i in 0..n {
        l = i + 1;
        rv1[i] = scale * g;
        g = 0.0;
        scale = 0.0;
        let mut s;
        if i < m {
            for k in i..m {
                scale += u[(k, i)].abs();
            }
            if scale != 0.0 {
                s = 0.0;
                for k in i..m {
                    u[(k, i)] /= scale;
                    s += u[(k, i)] * u[(k, i)];
                }
                let f = u[(i, i)];
                g = -sign(s.sqrt(), f);
                let h = f * g - s;
                u[(i, i)] = f - g;
                for j in l..n {
                    s = 0.0;
                    for k in i..m {
                        s += u[(k, i)] * u[(k, j)];
                    }
                    let f = s / h;
                    for k in i..m {
                        let t = u[(k, i)];
                        u[(k, j)] += f * t;
                    }
                }
                for k in i..m {
                    u[(k, i)] *= scale;
                }
            }
        }
        w[i] = scale * g;
        g = 0.0;
        scale = 0.0;
        if i < m && i + 1 != n {
            for k in l..n {
                scale += u[(i, k)].abs();
            }
            if scale != 0.0 {
                s = 0.0;
                for k in l..n {
                    u[(i, k)] /= scale;
                    s += u[(i, k)] * u[(i, k)];
                }
                let f = u[(i, l)];
                g = -sign(s.sqrt(), f);
                let h = f * g - s;
                u[(i, l)] = f - g;
                for k in l..n {
                    rv1[k] = u[(i, k)] / h;
                }
                for j in l..m {
                    s = 0.0;
                    for k in l..n {
                        s += u[(j, k)] * u[(i, k)];
                    }
                    for k in l..n {
                        u[(j, k)] += s * rv1[k];
                    }
                }
                for k in l..n {
                    u[(i, k)] *= scale;
                }
            }
        }
        anorm = anorm.max(w[i].abs() + rv1[i].abs());
    }
    // accumulate right transforms
    for i in (0..n).rev() {
        if i + 1 < n {
            if g != 0.0 {
                for j in l..n {
                    v[(j, i)] = (u[(i, j)] / u[(i, l)]) / g;
                }
                for j in l..n {
                    let mut s = 0.0;
                    for k in l..n {
                        s += u[(i, k)] * v[(k, j)];
                    }
                    for k in l..n {
                        let t = v[(k, i)];
                        v[(k, j)] += s * t;
                    }
                }
            }
            for j in l..n {
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        }
        v[(i, i)] = 1.0;
        g = rv1[i];
        l = i;
    }
    // accumulate left transforms
    for i in (0..m.min(n)).rev() {
        let l = i + 1;
        let gi = w[i];
        for j in l..n {
            u[(i, j)] = 0.0;
        }
        if gi != 0.0 {
            let gi = 1.0 / gi;
            for j in l..n {
                let mut s = 0.0;
                for k in l..m {
                    s += u[(k, i)] * u[(k, j)];
                }
                let f = (s / u[(i, i)]) * gi;
                for k in i..m {
                    let t = u[(k, i)];
                    u[(k, j)] += f * t;
                }
            }
            for j in i..m {
                u[(j, i)] *= gi;
            }
        } else {
            for j in i..m {
                u[(j, i)] = 0.0;
            }
        }
        u[(i, i)] += 1.0;
    }
    // diagonalize the bidiagonal form
    for k in (0..n).rev() {
        let mut its = 0;
        loop {
            its += 1;
            let mut flag = true;
            let mut l = k;
            let mut nm = 0;
            loop {
                if l == 0 || rv1[l].abs() <= f64::EPSILON * anorm {
                    flag = false;
                    break;
                }
                nm = l - 1;
                if w[nm].abs() <= f64::EPSILON * anorm {
                    break;
                }
                l -= 1;
            }
            if flag {
                let mut c = 0.0;
                let mut s = 1.0;
                for i in l..=k {
                    let f = s * rv1[i];
                    rv1[i] *= c;
                    if f.abs() <= f64::EPSILON * anorm {
                        break;
                    }
                    let g = w[i];
                    let h = pythag(f, g);
                    w[i] = h;
                    let h = 1.0 / h;
                    c = g * h;
                    s = -f * h;
                    for j in 0..m {
                        let y = u[(j, nm)];
                        let z = u[(j, i)];
                        u[(j, nm)] = y * c + z * s;
                        u[(j, i)] = z * c - y * s;
                    }
                }
            }
            let z = w[k];
            if l == k {
                if z < 0.0 {
                    w[k] = -z;
                    for j in 0..n {
                        v[(j, k)] = -v[(j, k)];
                    }
                }
                break;
            }
            if its > 75 {
                return Err(NumericsError::Invalid("SVD did not converge in 75 sweeps".into()));
            }
            let mut x = w[l];
            let nm = k - 1;
            let mut y = w[nm];
            let mut g = rv1[nm];
            let mut h = rv1[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
            g = pythag(f, 1.0);
            f = ((x - z) * (x + z) + h * ((y / (f + sign(g, f))) - h)) / x;
            let mut c = 1.0;
            let mut s = 1.0;
            for j in l..=nm {
                let i = j + 1;
                g = rv1[i];
                y = w[i];
                h = s * g;
                g *= c;
                let mut z = pythag(f, h);
                rv1[j] = z;
                c = f / z;
                s = h / z;
                f = x * c + g * s;
                g = g * c - x * s;
                h = y * s;
                y *= c;
                for jj in 0..n {
                    let xx = v[(jj, j)];
                    let zz = v[(jj, i)];
                    v[(jj, j)] = xx * c + zz * s;
                    v[(jj, i)] = zz * c - xx * s;
                }
                z = pythag(f, h);
                w[j] = z;
                if z != 0.0 {
                    let zi = 1.0 / z;
                    c = f * zi;
                    s = h * zi;
                }
                f = c * g + s * y;
                x = c * y - s * g;
                for jj in 0..m {
                    let yy = u[(jj, j)];
                    let zz = u[(jj, i)];
                    u[(jj, j)] = yy * c + zz * s;
                    u[(jj, i)] = zz * c - yy * s;
                }
            }
            rv1[l] = 0.0;
            rv1[k] = f;
            w[k] = x;
        }
    }
    // sort descending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[j].partial_cmp(&w[i]).unwrap());
    let mut us = DenseMatrix::zeros(m, n);
    let mut vs = DenseMatrix::zeros(n, n);
    let mut s = vec![0.0; n];
    for (c, &o) in order.iter().enumerate() {
        s[c] = w[o];
        for r in 0..m {
            us[(r, c)] = u[(r, o)];
        }
        for r in 0..n {
            vs[(r, c)] = v[(r, o)];
        }
    }
    Ok(Svd { u: us, s, v: vs })
}

/// Smallest singular value and its unit right singular vector.
pub fn smallest_singular_value(a: &DenseMatrix) -> Result<(f64, Vec<f64>), NumericsError> {
    let d = svd(a)?;
    let j = d.s.len() - 1;
    Ok((d.s[j], d.right_vector(j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_row_major(m, n, (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn identity_and_diag() {
        let (s, v) = smallest_singular_value(&DenseMatrix::identity(3)).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
        let (s, v) = smallest_singular_value(&DenseMatrix::from_diag(&[2.0, 1e-8])).unwrap();
        assert!((s - 1e-8).abs() < 1e-18);
        assert!((v[1].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_random_matrix() {
        for (m, n) in [(5, 5), (9, 4), (4, 7), (40, 40)] {
            let a = random(m, n, (m * 31 + n) as u64);
            let d = svd(&a).unwrap();
            for i in 0..m {
                for j in 0..n {
                    let r: f64 = (0..d.s.len()).map(|k| d.u[(i, k)] * d.s[k] * d.v[(j, k)]).sum();
                    assert!((r - a[(i, j)]).abs() < 1e-12);
                }
            }
            assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_null_vector() {
        let mut a = random(6, 6, 7);
        for i in 0..6 {
            a[(i, 5)] = a[(i, 0)] - 2.0 * a[(i, 3)];
        }
        let (s, v) = smallest_singular_value(&a).unwrap();
        assert!(s < 1e-13);
        let r = a.matvec(&v).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn lu_round_trip() {
        let a = random(30, 30, 3);
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let b = a.matvec(&x).unwrap();
        let y = Lu::new(&a).unwrap().solve(&b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-11);
        }
    }

    #[test]
    fn lu_detects_singular() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(Lu::new(&a), Err(NumericsError::Singular { .. })));
    }

    #[test]
    fn nonfinite_rejected() {
        let a = DenseMatrix::from_row_major(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(svd(&a).is_err());
    }
}
