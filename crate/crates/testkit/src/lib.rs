//! Independent numeric oracles for the npad test suites.
//!
//! Everything in here is deliberately written from first principles and kept
//! apart from the implementations it checks: a projected-gradient solver for
//! box/simplex-constrained quadratic programs, and a Jacobi eigensolver for
//! small symmetric matrices. Slow and simple on purpose.

/// Result of the projected-gradient QP oracle.
#[derive(Debug, Clone)]
pub struct QpSolution {
    /// Maximizer of the dual objective.
    pub alpha: Vec<f64>,
    /// Objective value -1/2 a' Q a at `alpha`.
    pub objective: f64,
    /// Iterations actually performed.
    pub iterations: usize,
}

/// Maximizes W(a) = -1/2 a' Q a over the polytope
///
///   0 <= a_i <= cap_i,
///   sum over group 0 of a_i = group_sum[0],
///   sum over group 1 of a_i = group_sum[1],
///
/// where `group[i]` in {0, 1} assigns each variable to one equality
/// constraint. Accelerated projected gradient (FISTA) with adaptive restart;
/// the projection treats each group independently.
pub fn solve_box_simplex_qp(
    q: &[Vec<f64>],
    group: &[usize],
    group_sum: [f64; 2],
    cap: &[f64],
    max_iters: usize,
) -> QpSolution {
    let n = q.len();
    assert!(group.len() == n && cap.len() == n);

    let lipschitz = max_eigenvalue_upper_bound(q).max(1e-12);
    let step = 1.0 / (1.01 * lipschitz);

    let project = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for g in 0..2 {
            let idx: Vec<usize> = (0..n).filter(|&i| group[i] == g).collect();
            if idx.is_empty() {
                continue;
            }
            let vals: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
            let caps: Vec<f64> = idx.iter().map(|&i| cap[i]).collect();
            let proj = project_capped_simplex(&vals, &caps, group_sum[g]);
            for (k, &i) in idx.iter().enumerate() {
                out[i] = proj[k];
            }
        }
        out
    };

    // Feasible start: spread the group sum uniformly, then project.
    let start: Vec<f64> = (0..n).map(|i| cap[i] * 0.5).collect();
    let mut x = project(&start);
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut t = 1.0f64;

    let objective = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a[i] * q[i][j] * a[j];
            }
        }
        -0.5 * s
    };

    let mut best = objective(&x);
    let mut best_alpha = x.clone();
    let mut stall = 0usize;
    let mut iters = 0usize;

    for k in 0..max_iters {
        iters = k + 1;
        // grad of the minimization objective 1/2 a'Qa is Qa
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += q[i][j] * y[j];
            }
            grad[i] = s;
        }
        let trial: Vec<f64> = (0..n).map(|i| y[i] - step * grad[i]).collect();
        let x_new = project(&trial);

        // Adaptive restart on loss of descent momentum.
        let momentum_dot: f64 = (0..n).map(|i| grad[i] * (x_new[i] - x[i])).sum();
        if momentum_dot > 0.0 {
            t = 1.0;
            y = x_new.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = (0..n).map(|i| x_new[i] + beta * (x_new[i] - x[i])).collect();
            t = t_next;
        }
        x_prev = x;
        x = x_new;

        let obj = objective(&x);
        if obj > best + 1e-16 * (1.0 + best.abs()) {
            best = obj;
            best_alpha = x.clone();
            stall = 0;
        } else {
            stall += 1;
            if stall > 3000 {
                break;
            }
        }
    }
    let _ = x_prev;

    QpSolution {
        alpha: best_alpha,
        objective: best,
        iterations: iters,
    }
}

/// Euclidean projection of `v` onto { 0 <= a_i <= cap_i, sum a_i = target },
/// by bisection on the shift in a_i = clamp(v_i - tau, 0, cap_i).
pub fn project_capped_simplex(v: &[f64], cap: &[f64], target: f64) -> Vec<f64> {
    let n = v.len();
    let total_cap: f64 = cap.iter().sum();
    assert!(
        target >= -1e-12 && target <= total_cap + 1e-9,
        "infeasible projection target {target} vs capacity {total_cap}"
    );
    let sum_at = |tau: f64| -> f64 {
        (0..n)
            .map(|i| (v[i] - tau).clamp(0.0, cap[i]))
            .sum::<f64>()
    };
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min)
        - cap.iter().cloned().fold(0.0f64, f64::max)
        - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    (0..n).map(|i| (v[i] - tau).clamp(0.0, cap[i])).collect()
}

/// Cheap upper bound on the top eigenvalue of a symmetric matrix:
/// power iteration refined estimate, padded by the infinity norm fallback.
fn max_eigenvalue_upper_bound(q: &[Vec<f64>]) -> f64 {
    let n = q.len();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut w = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                w[i] += q[i][j] * v[j];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            break;
        }
        lambda = norm;
        for i in 0..n {
            v[i] = w[i] / norm;
        }
    }
    let inf_norm = q
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    // Power iteration can undershoot slightly; the infinity norm never does.
    (1.05 * lambda).min(inf_norm).max(lambda)
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() < 1e-13 {
            break;
        }
        for p in 0..n {
            for q_i in (p + 1)..n {
                if a[p][q_i].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q_i][q_i] - a[p][p]) / a[p][q_i];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q_i];
                    a[k][p] = c * akp - s * akq;
                    a[k][q_i] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q_i][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q_i][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_hits_target_and_box() {
        let v = vec![0.9, -0.2, 0.4, 0.1];
        let cap = vec![0.5, 0.5, 0.5, 0.5];
        let p = project_capped_simplex(&v, &cap, 1.0);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10, "sum {sum}");
        for (i, &x) in p.iter().enumerate() {
            assert!((-1e-12..=0.5 + 1e-12).contains(&x), "p[{i}] = {x}");
        }
    }

    #[test]
    fn qp_solves_identity_case() {
        // Q = I, groups {0,0,1,1}, sums 0.5 each, caps 1: symmetric optimum
        // is the uniform 0.25 split with objective -1/2 * 4 * 0.0625 = -0.125.
        let q: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let sol = solve_box_simplex_qp(&q, &[0, 0, 1, 1], [0.5, 0.5], &[1.0; 4], 20_000);
        assert!((sol.objective - (-0.125)).abs() < 1e-9, "{}", sol.objective);
        for &a in &sol.alpha {
            assert!((a - 0.25).abs() < 1e-6);
        }
    }

    #[test]
    fn jacobi_finds_known_spectrum() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let mut ev = symmetric_eigenvalues(&m);
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0).abs() < 1e-10);
        assert!((ev[1] - 3.0).abs() < 1e-10);
    }
}
