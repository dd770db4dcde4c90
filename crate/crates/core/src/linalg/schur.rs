//! Real Schur factorization with eigenvalue reordering.
//!
//! The unordered factorization comes from nalgebra. Reordering swaps adjacent
//! diagonal blocks (1×1 or 2×2) with an orthogonal transformation obtained
//! from the solution of a small Sylvester equation, so selected eigenvalues
//! migrate to the leading diagonal positions.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// `M = Q·T·Qᵀ` with `T` quasi upper triangular and the selected eigenvalues
/// occupying the leading `selected × selected` block of `T`.
#[derive(Debug, Clone)]
pub struct OrderedSchur {
    pub q: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub selected: usize,
    /// Eigenvalues in diagonal order of `t`.
    pub eigenvalues: Vec<Complex<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    size: usize,
}

/// Computes a real Schur form of `m` whose leading block holds every
/// eigenvalue for which `select` returns true.
pub fn ordered_real_schur<F>(m: &DMatrix<f64>, select: F) -> Result<OrderedSchur>
where
    F: Fn(Complex<f64>) -> bool,
{
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!(
            "Schur factorization needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok(OrderedSchur {
            q: DMatrix::zeros(0, 0),
            t: DMatrix::zeros(0, 0),
            selected: 0,
            eigenvalues: Vec::new(),
        });
    }

    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 200 * n.max(10))
        .ok_or_else(|| Error::numerical("real Schur iteration did not converge", f64::NAN))?;
    let (mut q, mut t) = schur.unpack();
    let scale = t.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);

    // clear round-off below the first subdiagonal and deflate negligible subdiagonals
    for j in 0..n {
        for i in (j + 2)..n {
            t[(i, j)] = 0.0;
        }
    }
    for i in 0..n - 1 {
        let local = t[(i, i)].abs() + t[(i + 1, i + 1)].abs();
        if t[(i + 1, i)].abs() <= f64::EPSILON * local.max(scale * f64::EPSILON) {
            t[(i + 1, i)] = 0.0;
        }
    }

    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            if split_real_pair(&mut t, &mut q, i) {
                blocks.push(Block { start: i, size: 1 });
                blocks.push(Block {
                    start: i + 1,
                    size: 1,
                });
            } else {
                blocks.push(Block { start: i, size: 2 });
            }
            i += 2;
        } else {
            blocks.push(Block { start: i, size: 1 });
            i += 1;
        }
    }

    // stable bubble: each selected block moves up past the unselected ones before it
    let mut flags: Vec<bool> = blocks
        .iter()
        .map(|b| select(block_eigenvalues(&t, *b)[0]))
        .collect();
    let mut first_free = 0;
    for k in 0..blocks.len() {
        if !flags[k] {
            continue;
        }
        let mut pos = k;
        while pos > first_free {
            let (upper, lower) = (blocks[pos - 1], blocks[pos]);
            swap_blocks(&mut t, &mut q, upper.start, upper.size, lower.size, scale)?;
            blocks[pos - 1] = Block {
                start: upper.start,
                size: lower.size,
            };
            blocks[pos] = Block {
                start: upper.start + lower.size,
                size: upper.size,
            };
            flags.swap(pos - 1, pos);
            pos -= 1;
        }
        first_free += 1;
    }

    let selected = blocks
        .iter()
        .zip(&flags)
        .filter(|(_, f)| **f)
        .map(|(b, _)| b.size)
        .sum();
    let eigenvalues = blocks
        .iter()
        .flat_map(|b| block_eigenvalues(&t, *b))
        .collect();

    Ok(OrderedSchur {
        q,
        t,
        selected,
        eigenvalues,
    })
}

fn block_eigenvalues(t: &DMatrix<f64>, b: Block) -> Vec<Complex<f64>> {
    if b.size == 1 {
        return vec![Complex::new(t[(b.start, b.start)], 0.0)];
    }
    let i = b.start;
    let (a, bb, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
    let half_trace = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + bb * c;
    if disc >= 0.0 {
        let r = disc.sqrt();
        vec![
            Complex::new(half_trace + r, 0.0),
            Complex::new(half_trace - r, 0.0),
        ]
    } else {
        let im = (-disc).sqrt();
        vec![
            Complex::new(half_trace, im),
            Complex::new(half_trace, -im),
        ]
    }
}

/// Triangularizes a 2×2 diagonal block that has real eigenvalues.
fn split_real_pair(t: &mut DMatrix<f64>, q: &mut DMatrix<f64>, i: usize) -> bool {
    let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc < 0.0 {
        return false;
    }
    let half_trace = 0.5 * (a + d);
    let r = disc.sqrt();
    // the root farther from zero is computed without cancellation
    let lambda = if half_trace >= 0.0 {
        half_trace + r
    } else {
        half_trace - r
    };
    // eigenvector candidates (b, λ-a) and (λ-d, c); keep the better scaled one
    let (x1, y1) = (b, lambda - a);
    let (x2, y2) = (lambda - d, c);
    let (x, y) = if x1.hypot(y1) >= x2.hypot(y2) {
        (x1, y1)
    } else {
        (x2, y2)
    };
    let norm = x.hypot(y);
    if norm == 0.0 {
        return false;
    }
    let (cs, sn) = (x / norm, y / norm);
    apply_rotation(t, q, i, cs, sn);
    t[(i + 1, i)] = 0.0;
    true
}

/// Similarity by the plane rotation `G = [[c, -s], [s, c]]` acting on `i, i+1`.
fn apply_rotation(t: &mut DMatrix<f64>, q: &mut DMatrix<f64>, i: usize, c: f64, s: f64) {
    let n = t.nrows();
    for j in 0..n {
        let (x, y) = (t[(i, j)], t[(i + 1, j)]);
        t[(i, j)] = c * x + s * y;
        t[(i + 1, j)] = -s * x + c * y;
    }
    for r in 0..n {
        let (x, y) = (t[(r, i)], t[(r, i + 1)]);
        t[(r, i)] = c * x + s * y;
        t[(r, i + 1)] = -s * x + c * y;
    }
    for r in 0..n {
        let (x, y) = (q[(r, i)], q[(r, i + 1)]);
        q[(r, i)] = c * x + s * y;
        q[(r, i + 1)] = -s * x + c * y;
    }
}

/// Swaps the adjacent diagonal blocks `T11` (`p×p`, starting at `j`) and
/// `T22` (`r×r`, directly below) by an orthogonal similarity.
fn swap_blocks(
    t: &mut DMatrix<f64>,
    q: &mut DMatrix<f64>,
    j: usize,
    p: usize,
    r: usize,
    scale: f64,
) -> Result<()> {
    let n = t.nrows();
    let m = p + r;
    let t11 = t.view((j, j), (p, p)).clone_owned();
    let t12 = t.view((j, j + p), (p, r)).clone_owned();
    let t22 = t.view((j + p, j + p), (r, r)).clone_owned();

    // T11·X − X·T22 = −T12 in Kronecker form (column-major vec)
    let mut sylvester = DMatrix::<f64>::zeros(p * r, p * r);
    for col in 0..r {
        for row in 0..p {
            let eq = col * p + row;
            for k in 0..p {
                sylvester[(eq, col * p + k)] += t11[(row, k)];
            }
            for k in 0..r {
                sylvester[(eq, k * p + row)] -= t22[(k, col)];
            }
        }
    }
    let rhs = -nalgebra::DVector::from_column_slice(t12.as_slice());
    let x = sylvester.clone().lu().solve(&rhs).ok_or_else(|| {
        Error::numerical(
            "adjacent Schur blocks share an eigenvalue and cannot be swapped",
            f64::INFINITY,
        )
    })?;

    // [X; I] spans the invariant subspace of T22's eigenvalues; complete it
    // to an orthogonal basis with a QR of [X, 0; I, 0] + identity columns.
    let mut basis = DMatrix::<f64>::zeros(m, r + m);
    for col in 0..r {
        for row in 0..p {
            basis[(row, col)] = x[col * p + row];
        }
        basis[(p + col, col)] = 1.0;
    }
    for k in 0..m {
        basis[(k, r + k)] = 1.0;
    }
    let z = basis.qr().q();

    // T ← Zᵀ T Z on rows/cols j..j+m; Q ← Q Z
    let rows = t.view((j, 0), (m, n)).clone_owned();
    let updated = z.transpose() * rows;
    t.view_mut((j, 0), (m, n)).copy_from(&updated);
    let cols = t.view((0, j), (n, m)).clone_owned();
    let updated = cols * &z;
    t.view_mut((0, j), (n, m)).copy_from(&updated);
    let qcols = q.view((0, j), (n, m)).clone_owned();
    let updated = qcols * &z;
    q.view_mut((0, j), (n, m)).copy_from(&updated);

    let residual = t
        .view((j + r, j), (p, r))
        .iter()
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    if residual > 1e-10 * scale {
        let cond = sylvester.svd(false, false).singular_values;
        let est = cond.max() / cond.min().max(f64::MIN_POSITIVE);
        return Err(Error::numerical(
            format!("Schur block swap left residual {residual:.3e}"),
            est,
        ));
    }
    t.view_mut((j + r, j), (p, r)).fill(0.0);
    // QR may leave round-off below the new blocks' subdiagonals
    for c in j..j + m {
        for rr in (c + 2)..j + m {
            t[(rr, c)] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn check(m: &DMatrix<f64>, s: &OrderedSchur) {
        let n = m.nrows();
        let recon = &s.q * &s.t * s.q.transpose();
        assert!((recon - m).amax() < 1e-11 * m.amax().max(1.0));
        let ortho = s.q.transpose() * &s.q - DMatrix::<f64>::identity(n, n);
        assert!(ortho.amax() < 1e-13);
        for j in 0..n {
            for i in (j + 2)..n {
                assert_eq!(s.t[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn moves_positive_real_eigenvalues_first() {
        let m = dmatrix![
            -3.0, 1.0, 0.5, 0.0;
            0.0, 2.0, 1.0, 0.3;
            0.0, 0.0, -1.0, 1.0;
            0.0, 0.0, 0.0, 0.5
        ];
        let s = ordered_real_schur(&m, |z| z.re > 0.0).unwrap();
        check(&m, &s);
        assert_eq!(s.selected, 2);
        assert!(s.eigenvalues[..2].iter().all(|z| z.re > 0.0));
        assert!(s.eigenvalues[2..].iter().all(|z| z.re < 0.0));
        assert_eq!(s.t[(2, 0)], 0.0);
        assert_eq!(s.t[(2, 1)], 0.0);
    }

    #[test]
    fn swaps_complex_pairs() {
        // stable complex pair, then an unstable complex pair and a zero eigenvalue
        let m = dmatrix![
            -1.0, 3.0, 0.2, 0.1, 0.4;
            -3.0, -1.0, 0.5, 0.0, 0.3;
            0.0, 0.0, 0.5, 2.0, 0.7;
            0.0, 0.0, -2.0, 0.5, 0.1;
            0.0, 0.0, 0.0, 0.0, 0.0
        ];
        let p = dmatrix![
            1.0, 0.2, 0.0, 0.3, 0.1;
            0.0, 1.0, 0.4, 0.0, 0.0;
            0.2, 0.0, 1.0, 0.1, 0.3;
            0.0, 0.5, 0.0, 1.0, 0.2;
            0.1, 0.0, 0.3, 0.0, 1.0
        ];
        let m = &p * m * p.clone().try_inverse().unwrap();
        let s = ordered_real_schur(&m, |z| z.re > -1e-9).unwrap();
        check(&m, &s);
        assert_eq!(s.selected, 3);
        let lead = s.t.view((0, 0), (3, 3)).clone_owned();
        let trail = s.t.view((3, 3), (2, 2)).clone_owned();
        for z in super::super::eigenvalues(&lead).unwrap() {
            assert!(z.re > -1e-9, "{z}");
        }
        for z in super::super::eigenvalues(&trail).unwrap() {
            assert!((z.re + 1.0).abs() < 1e-9 && (z.im.abs() - 3.0).abs() < 1e-9);
        }
        assert!(s.t.view((3, 0), (2, 3)).amax() == 0.0);
    }

    #[test]
    fn random_matrices_reorder_cleanly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [3usize, 6, 11, 20] {
            for _ in 0..5 {
                let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                let s = ordered_real_schur(&m, |z| z.re > 0.0).unwrap();
                check(&m, &s);
                let expected = super::super::eigenvalues(&m)
                    .unwrap()
                    .iter()
                    .filter(|z| z.re > 0.0)
                    .count();
                assert_eq!(s.selected, expected);
                let lower = s.t.view((s.selected, 0), (n - s.selected, s.selected));
                assert!(lower.iter().all(|x| *x == 0.0));
            }
        }
    }
}
