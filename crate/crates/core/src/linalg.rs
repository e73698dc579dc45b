//! Householder QR with limited column pivoting.
//!
//! Columns are processed left to right. A column whose remaining norm,
//! after removing its components along the accepted columns, falls below
//! `tol` times its original norm is aliased and moved to the end. Accepted
//! columns keep their relative order, which is what sequential sums of
//! squares rely on.

/// Default relative threshold for alias detection.
pub const DEFAULT_ALIAS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Qr {
    p: usize,
    /// Householder vectors, one per accepted column; `vs[k]` spans rows `k..n`.
    vs: Vec<Vec<f64>>,
    betas: Vec<f64>,
    /// `r_cols[k]` is column `k` of R, rows `0..=k`.
    r_cols: Vec<Vec<f64>>,
    /// Original column indices: accepted columns first, then aliased ones.
    pivot: Vec<usize>,
    rank: usize,
}

fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow on large entries
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Qr {
    /// Factorizes the `n × p` matrix given as `p` columns of length `n`.
    pub fn new(columns: &[Vec<f64>], n: usize, tol: f64) -> Qr {
        let p = columns.len();
        let mut work: Vec<Vec<f64>> = columns.to_vec();
        let orig_norms: Vec<f64> = work.iter().map(|c| norm(c)).collect();
        let mut vs = Vec::new();
        let mut betas = Vec::new();
        let mut r_cols = Vec::new();
        let mut accepted = Vec::new();
        let mut aliased = Vec::new();

        for j in 0..p {
            let k = accepted.len();
            if k == n {
                aliased.push(j);
                continue;
            }
            let rest = norm(&work[j][k..]);
            if orig_norms[j] == 0.0 || rest <= tol * orig_norms[j] {
                aliased.push(j);
                continue;
            }
            // reflector mapping work[j][k..] onto alpha * e1
            let x0 = work[j][k];
            let alpha = if x0 >= 0.0 { -rest } else { rest };
            let mut v = work[j][k..].to_vec();
            v[0] -= alpha;
            let vtv = dot(&v, &v);
            let beta = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };

            let mut rcol = work[j][..k].to_vec();
            rcol.push(alpha);
            r_cols.push(rcol);

            for col in work.iter_mut().skip(j + 1) {
                let s = beta * dot(&v, &col[k..]);
                if s != 0.0 {
                    for (c, vi) in col[k..].iter_mut().zip(&v) {
                        *c -= s * vi;
                    }
                }
            }
            vs.push(v);
            betas.push(beta);
            accepted.push(j);
        }

        let rank = accepted.len();
        accepted.extend(aliased);
        Qr {
            p,
            vs,
            betas,
            r_cols,
            pivot: accepted,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pivot(&self) -> &[usize] {
        &self.pivot
    }

    /// Original column indices that were aliased.
    #[cfg(test)]
    pub fn aliased(&self) -> &[usize] {
        &self.pivot[self.rank..]
    }

    /// Computes `Qᵀ y`.
    pub fn qty(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        for (k, (v, &beta)) in self.vs.iter().zip(&self.betas).enumerate() {
            let s = beta * dot(v, &out[k..]);
            for (o, vi) in out[k..].iter_mut().zip(v) {
                *o -= s * vi;
            }
        }
        out
    }

    /// Computes `Q z`.
    pub fn qz(&self, z: &[f64]) -> Vec<f64> {
        let mut out = z.to_vec();
        for (k, (v, &beta)) in self.vs.iter().zip(&self.betas).enumerate().rev() {
            let s = beta * dot(v, &out[k..]);
            for (o, vi) in out[k..].iter_mut().zip(v) {
                *o -= s * vi;
            }
        }
        out
    }

    /// Solves `R b = qty[..rank]` and scatters `b` back to original column
    /// positions; aliased columns get `None`.
    pub fn coefficients(&self, qty: &[f64]) -> Vec<Option<f64>> {
        let r = self.rank;
        let mut b = qty[..r].to_vec();
        for k in (0..r).rev() {
            b[k] /= self.r_cols[k][k];
            let bk = b[k];
            for (i, bi) in b.iter_mut().enumerate().take(k) {
                *bi -= self.r_cols[k][i] * bk;
            }
        }
        let mut out = vec![None; self.p];
        for (k, &j) in self.pivot[..r].iter().enumerate() {
            out[j] = Some(b[k]);
        }
        out
    }

    /// Residual of projecting `y` onto the accepted column span.
    pub fn residual(&self, y: &[f64]) -> Vec<f64> {
        let mut e = self.qty(y);
        e[..self.rank].iter_mut().for_each(|v| *v = 0.0);
        self.qz(&e)
    }

    /// Norm of the component of `y` orthogonal to the accepted span.
    pub fn residual_norm(&self, y: &[f64]) -> f64 {
        norm(&self.qty(y)[self.rank..])
    }
}

pub(crate) fn l2_norm(x: &[f64]) -> f64 {
    norm(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_solve() {
        // [[2,1],[1,3]] b = [3,5]  =>  b = [0.8, 1.4]
        let cols = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let qr = Qr::new(&cols, 2, DEFAULT_ALIAS_TOL);
        assert_eq!(qr.rank(), 2);
        let b = qr.coefficients(&qr.qty(&[3.0, 5.0]));
        assert!((b[0].unwrap() - 0.8).abs() < 1e-14);
        assert!((b[1].unwrap() - 1.4).abs() < 1e-14);
    }

    #[test]
    fn q_is_orthogonal() {
        let cols = vec![vec![1.0, 1.0, 1.0, 1.0], vec![0.5, -1.0, 2.0, 3.0]];
        let qr = Qr::new(&cols, 4, DEFAULT_ALIAS_TOL);
        let y = [1.0, -2.0, 0.25, 4.0];
        let back = qr.qz(&qr.qty(&y));
        for (a, b) in back.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((l2_norm(&qr.qty(&y)) - l2_norm(&y)).abs() < 1e-14);
    }

    #[test]
    fn duplicate_and_zero_columns_alias() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let cols = vec![a.clone(), vec![0.0; 4], vec![1.0, 0.0, 1.0, 0.0], a.clone()];
        let qr = Qr::new(&cols, 4, DEFAULT_ALIAS_TOL);
        assert_eq!(qr.rank(), 2);
        assert_eq!(qr.pivot(), &[0, 2, 1, 3]);
        assert_eq!(qr.aliased(), &[1, 3]);
        let b = qr.coefficients(&qr.qty(&[1.0, 1.0, 1.0, 1.0]));
        assert!(b[1].is_none() && b[3].is_none());
    }

    #[test]
    fn more_columns_than_rows() {
        let cols = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let qr = Qr::new(&cols, 2, DEFAULT_ALIAS_TOL);
        assert_eq!(qr.rank(), 2);
        assert_eq!(qr.aliased(), &[2]);
        assert!(qr.residual_norm(&[3.0, -1.0]) < 1e-14);
    }

    #[test]
    fn small_scale_column_not_aliased() {
        let cols = vec![vec![1.0, 1.0, 1.0], vec![1e-13, 0.0, -1e-13]];
        let qr = Qr::new(&cols, 3, DEFAULT_ALIAS_TOL);
        assert_eq!(qr.rank(), 2);
    }
}
