//! Smith normal form over the local ring `Z/l^K`.
//!
//! Every nonzero element is `l^v` times a unit, so pivoting on an entry of
//! least valuation and rescaling it to exactly `l^v` lets every elimination
//! step divide exactly.

pub type Mat = Vec<Vec<u64>>;

/// The ring `Z/l^K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimePowerRing {
    pub l: u64,
    pub k: u32,
    pub modulus: u64,
}

impl PrimePowerRing {
    pub fn new(l: u64, k: u32) -> Self {
        let modulus = l.checked_pow(k).expect("modulus fits in u64");
        assert!(modulus < 1 << 31, "entries must multiply without overflow");
        PrimePowerRing { l, k, modulus }
    }

    /// `l`-adic valuation, `K` for zero.
    pub fn valuation(&self, x: u64) -> u32 {
        let mut x = x % self.modulus;
        if x == 0 {
            return self.k;
        }
        let mut v = 0;
        while x % self.l == 0 {
            x /= self.l;
            v += 1;
        }
        v
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.modulus
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.modulus - b % self.modulus) % self.modulus
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a % self.modulus) * (b % self.modulus) % self.modulus
    }

    pub fn pow_l(&self, v: u32) -> u64 {
        if v >= self.k {
            0
        } else {
            self.l.pow(v)
        }
    }

    /// Inverse of a unit.
    pub fn inverse(&self, u: u64) -> u64 {
        crate::exact_arith::inv_mod(u % self.modulus, self.modulus).expect("inverse of a unit")
    }

    pub fn identity(&self, n: usize) -> Mat {
        (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect()
    }

    pub fn mat_mul(&self, a: &Mat, b: &Mat, inner: usize) -> Mat {
        let cols = b.first().map_or(0, Vec::len);
        a.iter()
            .map(|row| {
                (0..cols)
                    .map(|j| (0..inner).fold(0, |acc, t| self.add(acc, self.mul(row[t], b[t][j]))))
                    .collect()
            })
            .collect()
    }

    pub fn mat_vec(&self, a: &Mat, x: &[u64]) -> Vec<u64> {
        a.iter().map(|row| row.iter().zip(x).fold(0, |acc, (&r, &v)| self.add(acc, self.mul(r, v)))).collect()
    }
}

/// `U A V = D` with `D` diagonal, `D_ii = l^{diag[i]}` (`diag[i] = K` for zero).
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub u: Mat,
    pub u_inv: Mat,
    pub v: Mat,
    pub diag: Vec<u32>,
    pub rows: usize,
    pub cols: usize,
}

pub fn smith_normal_form(ring: &PrimePowerRing, a: &Mat, rows: usize, cols: usize) -> SmithForm {
    let mut a: Mat = a.iter().map(|r| r.iter().map(|x| x % ring.modulus).collect()).collect();
    let mut u = ring.identity(rows);
    let mut u_inv = ring.identity(rows);
    let mut v = ring.identity(cols);
    let steps = rows.min(cols);
    let mut diag = vec![ring.k; steps];
    for t in 0..steps {
        let mut best: Option<(u32, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(t) {
            for (j, &x) in row.iter().enumerate().skip(t) {
                let val = ring.valuation(x);
                if val < ring.k && best.is_none_or(|(bv, _, _)| val < bv) {
                    best = Some((val, i, j));
                }
            }
        }
        let Some((val, pi, pj)) = best else { break };
        a.swap(t, pi);
        u.swap(t, pi);
        for row in u_inv.iter_mut() {
            row.swap(t, pi);
        }
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        for row in v.iter_mut() {
            row.swap(t, pj);
        }
        // Rescale the pivot row so the pivot is exactly l^val.
        let unit = a[t][t] / ring.l.pow(val);
        let s = ring.inverse(unit);
        for x in a[t].iter_mut() {
            *x = ring.mul(*x, s);
        }
        for x in u[t].iter_mut() {
            *x = ring.mul(*x, s);
        }
        for row in u_inv.iter_mut() {
            row[t] = ring.mul(row[t], unit);
        }
        let pivot = ring.l.pow(val);
        for i in 0..rows {
            if i == t || a[i][t] == 0 {
                continue;
            }
            let c = a[i][t] / pivot;
            for j in 0..cols {
                a[i][j] = ring.sub(a[i][j], ring.mul(c, a[t][j]));
            }
            for j in 0..rows {
                u[i][j] = ring.sub(u[i][j], ring.mul(c, u[t][j]));
            }
            for row in u_inv.iter_mut() {
                row[t] = ring.add(row[t], ring.mul(c, row[i]));
            }
        }
        for j in 0..cols {
            if j == t || a[t][j] == 0 {
                continue;
            }
            let c = a[t][j] / pivot;
            for row in a.iter_mut() {
                row[j] = ring.sub(row[j], ring.mul(c, row[t]));
            }
            for row in v.iter_mut() {
                row[j] = ring.sub(row[j], ring.mul(c, row[t]));
            }
        }
        diag[t] = val;
    }
    SmithForm { u, u_inv, v, diag, rows, cols }
}

/// Some `x` with `A x = y`, or `None`.
pub fn solve(ring: &PrimePowerRing, a: &Mat, rows: usize, cols: usize, y: &[u64]) -> Option<Vec<u64>> {
    let snf = smith_normal_form(ring, a, rows, cols);
    let z = ring.mat_vec(&snf.u, y);
    let mut t = vec![0u64; cols];
    for (i, &zi) in z.iter().enumerate() {
        let d = snf.diag.get(i).copied().unwrap_or(ring.k);
        if d >= ring.k {
            if zi != 0 {
                return None;
            }
            continue;
        }
        let p = ring.l.pow(d);
        if zi % p != 0 {
            return None;
        }
        t[i] = zi / p;
    }
    Some(ring.mat_vec(&snf.v, &t))
}

/// Generators of `{x : A x = 0}`.
pub fn kernel_generators(ring: &PrimePowerRing, a: &Mat, rows: usize, cols: usize) -> Vec<Vec<u64>> {
    let snf = smith_normal_form(ring, a, rows, cols);
    let mut gens = Vec::new();
    for i in 0..cols {
        let d = snf.diag.get(i).copied().unwrap_or(ring.k);
        let scale = ring.pow_l(ring.k - d.min(ring.k));
        let scale = if d >= ring.k { 1 } else { scale };
        if scale == 0 {
            continue;
        }
        let col: Vec<u64> = snf.v.iter().map(|row| ring.mul(row[i], scale)).collect();
        if col.iter().any(|&x| x != 0) {
            gens.push(col);
        }
    }
    gens
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_form(ring: &PrimePowerRing, a: &Mat, rows: usize, cols: usize) {
        let snf = smith_normal_form(ring, a, rows, cols);
        let uav = ring.mat_mul(&ring.mat_mul(&snf.u, a, rows), &snf.v, cols);
        for i in 0..rows {
            for j in 0..cols {
                let expected = if i == j && i < snf.diag.len() { ring.pow_l(snf.diag[i]) } else { 0 };
                assert_eq!(uav[i][j], expected, "entry ({i},{j}) of U A V");
            }
        }
        assert_eq!(ring.mat_mul(&snf.u, &snf.u_inv, rows), ring.identity(rows));
        let diag_sorted = snf.diag.windows(2).all(|w| w[0] <= w[1]);
        assert!(diag_sorted, "pivots are found in order of valuation");
    }

    #[test]
    fn small_forms() {
        let ring = PrimePowerRing::new(3, 3);
        check_form(&ring, &vec![vec![3, 9], vec![6, 1]], 2, 2);
        check_form(&ring, &vec![vec![0, 0, 0]], 1, 3);
        check_form(&ring, &vec![vec![9], vec![18], vec![0]], 3, 1);
        check_form(&ring, &vec![], 0, 0);
    }

    #[test]
    fn solve_and_kernel() {
        let ring = PrimePowerRing::new(3, 2);
        let a = vec![vec![3, 0], vec![0, 1]];
        assert_eq!(solve(&ring, &a, 2, 2, &[1, 0]), None);
        let x = solve(&ring, &a, 2, 2, &[6, 4]).unwrap();
        assert_eq!(ring.mat_vec(&a, &x), vec![6, 4]);
        let ker = kernel_generators(&ring, &a, 2, 2);
        assert_eq!(ker.len(), 1);
        assert_eq!(ring.mat_vec(&a, &ker[0]), vec![0, 0]);
        assert_eq!(ring.valuation(ker[0][0]), 1);
    }

    proptest! {
        #[test]
        fn random_forms(seed in any::<u64>(), rows in 0usize..5, cols in 0usize..5, l in prop::sample::select(vec![2u64, 3, 5]), k in 1u32..4) {
            let ring = PrimePowerRing::new(l, k);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Mat = (0..rows).map(|_| (0..cols).map(|_| {
                let v = rng.gen_range(0..=k);
                ring.mul(ring.pow_l(v), rng.gen_range(0..ring.modulus))
            }).collect()).collect();
            check_form(&ring, &a, rows, cols);
            for g in kernel_generators(&ring, &a, rows, cols) {
                prop_assert!(ring.mat_vec(&a, &g).iter().all(|&x| x == 0));
            }
            let x: Vec<u64> = (0..cols).map(|_| rng.gen_range(0..ring.modulus)).collect();
            let y = ring.mat_vec(&a, &x);
            let sol = solve(&ring, &a, rows, cols, &y).expect("y is in the image");
            prop_assert_eq!(ring.mat_vec(&a, &sol), y);
        }
    }
}
