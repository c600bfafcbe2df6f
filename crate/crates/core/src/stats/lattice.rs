//! Step lattice of the walk and the dither used to smooth lattice samples.
//!
//! Starting from `x0`, `X_t` lives on the coset `x0 + t·u_0 + L`, where `L` is
//! the integer lattice spanned by the differences `u_k − u_0` of the support.
//! Adding an independent uniform point of a fundamental cell of `L` turns
//! the lattice law into a continuous one with the same local masses, which
//! is what a KS comparison against a continuous CDF needs.

use crate::dynamics::Dynamics;
use crate::hashing::{domain, KeyHash};
use crate::simulate::Ensemble;

/// Row-echelon integer basis of the lattice generated by `vectors`.
pub fn lattice_basis(vectors: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut rows: Vec<Vec<i64>> = vectors.iter().filter(|v| v.iter().any(|&x| x != 0)).cloned().collect();
    let n = rows.first().map_or(0, Vec::len);
    let mut pivot_row = 0;
    for col in 0..n {
        loop {
            // Euclid on column `col` among the remaining rows.
            let mut best: Option<usize> = None;
            for r in pivot_row..rows.len() {
                if rows[r][col] != 0 && best.is_none_or(|b| rows[r][col].abs() < rows[b][col].abs()) {
                    best = Some(r);
                }
            }
            let Some(b) = best else { break };
            rows.swap(pivot_row, b);
            let mut reduced = true;
            let (head, tail) = rows.split_at_mut(pivot_row + 1);
            let pivot = &head[pivot_row];
            for row in tail {
                let q = row[col] / pivot[col];
                if q != 0 {
                    for (x, p) in row.iter_mut().zip(pivot) {
                        *x -= q * p;
                    }
                }
                if row[col] != 0 {
                    reduced = false;
                }
            }
            if reduced {
                if rows[pivot_row][col] < 0 {
                    rows[pivot_row].iter_mut().for_each(|v| *v = -*v);
                }
                pivot_row += 1;
                break;
            }
        }
        if pivot_row == rows.len() {
            break;
        }
    }
    rows.truncate(pivot_row);
    rows.retain(|r| r.iter().any(|&x| x != 0));
    rows
}

/// Basis of the lattice spanned by the support differences of `dynamics`.
pub fn step_lattice(dynamics: &Dynamics) -> Vec<Vec<i64>> {
    let u0 = dynamics.displacement(0).to_vec();
    let diffs: Vec<Vec<i64>> = (1..dynamics.support_len())
        .map(|k| dynamics.displacement(k).iter().zip(&u0).map(|(a, b)| a - b).collect())
        .collect();
    lattice_basis(&diffs)
}

/// `(Y_T + D_w)/√T` per walker, with `D_w = ∑_i (U_{w,i} − ½)·basis_i` and
/// `U_{w,i}` uniform from a stream keyed by `(seed, w, i)`.
pub fn dithered_scaled_terminal(ensemble: &Ensemble, basis: &[Vec<i64>], seed: u64) -> Vec<Vec<f64>> {
    let scale = 1.0 / (ensemble.horizon as f64).sqrt();
    let stream = KeyHash::new(seed, domain::DITHER);
    (0..ensemble.walkers as usize)
        .map(|w| {
            let mut y = ensemble.terminal_y(w).to_vec();
            let key = stream.absorb(w as u64);
            for (i, b) in basis.iter().enumerate() {
                let u = key.absorb(i as u64).unit() - 0.5;
                for (yj, bj) in y.iter_mut().zip(b) {
                    *yj += u * *bj as f64;
                }
            }
            y.iter().map(|v| v * scale).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn det2(b: &[Vec<i64>]) -> i64 {
        (b[0][0] * b[1][1] - b[0][1] * b[1][0]).abs()
    }

    #[test]
    fn one_dimensional_span_is_gcd() {
        assert_eq!(lattice_basis(&[vec![4], vec![6], vec![10]]), vec![vec![2]]);
        assert_eq!(lattice_basis(&[vec![-3]]), vec![vec![3]]);
        assert!(lattice_basis(&[vec![0]]).is_empty());
    }

    #[test]
    fn checkerboard_lattice_of_simple_walk() {
        let d = Dynamics::new(&zoo::e3()).unwrap();
        let b = step_lattice(&d);
        assert_eq!(b.len(), 2);
        assert_eq!(det2(&b), 2);
    }

    #[test]
    fn nearest_neighbour_with_holding_is_unit_lattice() {
        let d = Dynamics::new(&zoo::e1()).unwrap();
        assert_eq!(step_lattice(&d), vec![vec![1]]);
    }

    #[test]
    fn degenerate_direction_gives_lower_rank() {
        let b = lattice_basis(&[vec![2, 0], vec![4, 0]]);
        assert_eq!(b, vec![vec![2, 0]]);
    }

    #[test]
    fn basis_generates_the_inputs() {
        // Every input must be an integer combination of the basis; for an
        // upper-echelon basis this is checked by back substitution.
        let inputs = vec![vec![3, 5, 1], vec![-2, 4, 7], vec![6, -1, 0], vec![0, 9, 3]];
        let basis = lattice_basis(&inputs);
        for v in &inputs {
            let mut rest = v.clone();
            for b in &basis {
                let col = b.iter().position(|&x| x != 0).unwrap();
                assert_eq!(rest[col] % b[col], 0, "{v:?} not in lattice {basis:?}");
                let q = rest[col] / b[col];
                for (r, bi) in rest.iter_mut().zip(b) {
                    *r -= q * bi;
                }
            }
            assert!(rest.iter().all(|&x| x == 0), "{v:?} leaves {rest:?}");
        }
    }
}
