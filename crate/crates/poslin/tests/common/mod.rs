//! Shared oracles for the integration tests.
//!
//! Everything in here recomputes quantities along routes that are
//! independent of the library implementations: quadrature instead of
//! Lyapunov solves, Kronecker systems instead of Schur back-substitution,
//! bisection instead of breakpoint scans, enumeration instead of simplex
//! pivoting. Frozen tolerances live next to the assertions in the test
//! files.

#![allow(dead_code)]

use poslin::numerics::LpProblem;
use poslin::{Matrix, Vector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix exponential by scaling, Taylor summation to machine precision,
/// and repeated squaring.
pub fn mat_exp(a: &Matrix) -> Matrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let norm = a
        .column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let s = if norm > 0.03125 {
        (norm / 0.03125).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s as i32);
    let mut result = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for k in 1..200 {
        term = (&term * &scaled) / k as f64;
        result += &term;
        if term.norm() < 1e-22 * result.norm().max(1.0) {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Solves `A X + X A^T + Q = 0` through the Kronecker-vectorized linear
/// system, with no Schur decomposition involved.
pub fn lyapunov_kron(a: &Matrix, q: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut big = Matrix::zeros(n * n, n * n);
    // vec(AX) = (I (x) A) vec(X); vec(X A^T) = (A (x) I) vec(X), column-major.
    for col in 0..n {
        for row in 0..n {
            for k in 0..n {
                big[(row + col * n, k + col * n)] += a[(row, k)];
                big[(row + col * n, row + k * n)] += a[(col, k)];
            }
        }
    }
    let mut rhs = Vector::zeros(n * n);
    for col in 0..n {
        for row in 0..n {
            rhs[row + col * n] = -q[(row, col)];
        }
    }
    let sol = big.lu().solve(&rhs).expect("Kronecker Lyapunov system is singular");
    let mut x = Matrix::zeros(n, n);
    for col in 0..n {
        for row in 0..n {
            x[(row, col)] = sol[row + col * n];
        }
    }
    x
}

/// Simpson-rule approximation of `int_0^T exp(At) Q exp(A^T t) dt`.
pub fn lyapunov_quadrature(a: &Matrix, q: &Matrix, t_max: f64, steps: usize) -> Matrix {
    assert!(steps % 2 == 0, "Simpson rule needs an even step count");
    let n = a.nrows();
    let h = t_max / steps as f64;
    let e = mat_exp(&(a * h));
    let mut phi = Matrix::identity(n, n);
    let mut acc = Matrix::zeros(n, n);
    for k in 0..=steps {
        let weight = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += weight * (&phi * q * phi.transpose());
        if k < steps {
            phi = &e * phi;
        }
    }
    acc * (h / 3.0)
}

/// Largest singular value through nalgebra's full SVD.
pub fn sigma_max(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Largest singular value of the transfer matrix `C (jw I - A)^{-1} B`,
/// computed through an equivalent real block system so no complex
/// arithmetic is needed: `(jwI - A)(X + jY) = B` is solved for `X` and
/// `Y`, and for `G = CX + j CY` the largest singular value equals that of
/// the realification `[[G_r, -G_i], [G_i, G_r]]`.
pub fn freq_sigma(a: &Matrix, b: &Matrix, c: &Matrix, omega: f64) -> f64 {
    let n = a.nrows();
    let p = b.ncols();
    // Solve (jwI - A)(X + jY) = B: real part -A X - w Y = B ... arranged as
    // [[-A, -wI], [wI, -A]] [X; Y] = [B; 0].
    let mut big = Matrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(&(-a));
    big.view_mut((n, n), (n, n)).copy_from(&(-a));
    for i in 0..n {
        big[(i, n + i)] = -omega;
        big[(n + i, i)] = omega;
    }
    let mut rhs = Matrix::zeros(2 * n, p);
    rhs.view_mut((0, 0), (n, p)).copy_from(b);
    let sol = big.lu().solve(&rhs).expect("frequency response solve failed");
    let x = sol.view((0, 0), (n, p)).clone_owned();
    let y = sol.view((n, 0), (n, p)).clone_owned();
    let gr = c * x;
    let gi = c * y;
    let q = c.nrows();
    let mut real2 = Matrix::zeros(2 * q, 2 * p);
    real2.view_mut((0, 0), (q, p)).copy_from(&gr);
    real2.view_mut((q, p), (q, p)).copy_from(&gr);
    real2.view_mut((0, p), (q, p)).copy_from(&(-(gi.clone())));
    real2.view_mut((q, 0), (q, p)).copy_from(&gi);
    sigma_max(&real2)
}

/// Logarithmically spaced frequency grid including zero.
pub fn frequency_grid(points: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    for k in 0..points {
        let t = k as f64 / (points - 1) as f64;
        grid.push(10f64.powf(-3.0 + 6.0 * t));
    }
    grid
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&Vector) -> f64, u: &Vector, h: f64) -> Vector {
    let mut g = Vector::zeros(u.len());
    for i in 0..u.len() {
        let mut up = u.clone();
        let mut dn = u.clone();
        let step = h * (1.0 + u[i].abs());
        up[i] += step;
        dn[i] -= step;
        g[i] = (f(&up) - f(&dn)) / (2.0 * step);
    }
    g
}

/// Spectral abscissa of a Metzler matrix by power iteration on the
/// nonnegative shift `A + cI`.
pub fn metzler_abscissa_power(a: &Matrix) -> f64 {
    let n = a.nrows();
    let shift = 1.0
        + (0..n)
            .map(|i| a[(i, i)].abs())
            .fold(0.0_f64, f64::max);
    let m = a + Matrix::identity(n, n) * shift;
    let mut x = Vector::from_element(n, 1.0 / n as f64);
    let mut rho = 0.0;
    for _ in 0..20000 {
        let y = &m * &x;
        let norm = y.amax();
        if norm <= f64::MIN_POSITIVE {
            return -shift;
        }
        let next = y / norm;
        let delta = (&next - &x).amax();
        x = next;
        rho = norm;
        if delta < 1e-15 {
            break;
        }
    }
    rho - shift
}

/// Projection of `y` onto `{ x : 0 <= x_i <= cap, sum x = total }` by
/// bisection on the shift parameter.
pub fn project_box_sum_bisect(y: &Vector, cap: f64, total: f64) -> Vector {
    let clamp_sum = |theta: f64| -> f64 {
        y.iter().map(|&v| (v - theta).clamp(0.0, cap)).sum::<f64>()
    };
    let mut lo = y.min() - cap - 1.0;
    let mut hi = y.max() + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clamp_sum(mid) >= total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    Vector::from_iterator(y.len(), y.iter().map(|&v| (v - theta).clamp(0.0, cap)))
}

/// Projection onto the capped simplex with subset floor constraints by
/// enumerating which floors are active and solving each pattern exactly.
pub fn project_floors_enumerate(
    y: &Vector,
    count: usize,
    cap: f64,
    subsets: &[Vec<usize>],
) -> Vector {
    let n = y.len();
    let total = count as f64 * cap;
    let k = subsets.len();
    let mut best: Option<(f64, Vector)> = None;
    for mask in 0..(1u32 << k) {
        let active: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).collect();
        let bound_mass: f64 = active.len() as f64 * cap;
        if bound_mass > total + 1e-12 {
            continue;
        }
        // Nodes in active subsets get their own mass-kappa group; the rest
        // share the remaining mass.
        let mut in_active = vec![false; n];
        for &j in &active {
            for &i in &subsets[j] {
                in_active[i] = true;
            }
        }
        let rest: Vec<usize> = (0..n).filter(|&i| !in_active[i]).collect();
        let mut x = Vector::zeros(n);
        let mut ok = true;
        for &j in &active {
            let idx = &subsets[j];
            if (idx.len() as f64) * cap < cap {
                ok = false;
                break;
            }
            let sub = Vector::from_iterator(idx.len(), idx.iter().map(|&i| y[i]));
            let proj = project_box_sum_bisect(&sub, cap, cap);
            for (t, &i) in idx.iter().enumerate() {
                x[i] = proj[t];
            }
        }
        if !ok {
            continue;
        }
        let rest_mass = total - bound_mass;
        if rest_mass < -1e-12 || rest_mass > rest.len() as f64 * cap + 1e-12 {
            continue;
        }
        if !rest.is_empty() {
            let sub = Vector::from_iterator(rest.len(), rest.iter().map(|&i| y[i]));
            let proj = project_box_sum_bisect(&sub, cap, rest_mass.max(0.0));
            for (t, &i) in rest.iter().enumerate() {
                x[i] = proj[t];
            }
        } else if rest_mass.abs() > 1e-9 {
            continue;
        }
        // Feasibility of the inactive floors.
        let feasible = subsets.iter().all(|s| {
            s.iter().map(|&i| x[i]).sum::<f64>() >= cap - 1e-9
        });
        if !feasible {
            continue;
        }
        let dist = (&x - y).norm_squared();
        match &best {
            Some((d, _)) if *d <= dist => {}
            _ => best = Some((dist, x)),
        }
    }
    best.expect("floor projection oracle found no feasible pattern").1
}

/// Brute-force LP solve by vertex enumeration. Only valid for bounded
/// problems; returns the best objective and minimizer over all basic
/// feasible points.
pub fn lp_vertex_oracle(p: &LpProblem) -> Option<(f64, Vector)> {
    let n = p.objective.len();
    // Constraint list: (row, rhs, equality?)
    let mut rows: Vec<(Vector, f64, bool)> = Vec::new();
    for i in 0..p.a_eq.nrows() {
        rows.push((p.a_eq.row(i).transpose().clone_owned(), p.b_eq[i], true));
    }
    for i in 0..p.a_ub.nrows() {
        rows.push((p.a_ub.row(i).transpose().clone_owned(), p.b_ub[i], false));
    }
    for j in 0..n {
        if let Some(l) = p.lower[j] {
            let mut r = Vector::zeros(n);
            r[j] = -1.0;
            rows.push((r, -l, false));
        }
    }
    let m = rows.len();
    if m < n {
        return None;
    }
    let n_eq = p.a_eq.nrows();
    let mut best: Option<(f64, Vector)> = None;
    let mut combo: Vec<usize> = (0..n).collect();
    loop {
        // Equality rows must all be active.
        if (0..n_eq).all(|e| combo.contains(&e)) {
            let mut a = Matrix::zeros(n, n);
            let mut b = Vector::zeros(n);
            for (k, &idx) in combo.iter().enumerate() {
                a.row_mut(k).copy_from(&rows[idx].0.transpose());
                b[k] = rows[idx].1;
            }
            if let Some(x) = a.lu().solve(&b) {
                let feasible = rows.iter().all(|(r, rhs, eq)| {
                    let v = r.dot(&x);
                    if *eq {
                        (v - rhs).abs() <= 1e-8
                    } else {
                        v <= rhs + 1e-8
                    }
                });
                if feasible {
                    let obj = p.objective.dot(&x);
                    match &best {
                        Some((bo, _)) if *bo <= obj => {}
                        _ => best = Some((obj, x)),
                    }
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if combo[i] != i + m - n {
                combo[i] += 1;
                for k in i + 1..n {
                    combo[k] = combo[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Projection onto `{ x >= 0, sum x = total }` by enumerating candidate
/// support sets and keeping the closest feasible one.
pub fn project_simplex_enumerate(y: &Vector, total: f64) -> Vector {
    let n = y.len();
    assert!(n <= 16, "support enumeration oracle is exponential in n");
    let mut best: Option<(f64, Vector)> = None;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let theta =
            (support.iter().map(|&i| y[i]).sum::<f64>() - total) / support.len() as f64;
        let mut x = Vector::zeros(n);
        let mut ok = true;
        for &i in &support {
            let v = y[i] - theta;
            if v < -1e-10 {
                ok = false;
                break;
            }
            x[i] = v.max(0.0);
        }
        if !ok {
            continue;
        }
        let dist = (&x - y).norm_squared();
        match &best {
            Some((d, _)) if *d <= dist => {}
            _ => best = Some((dist, x)),
        }
    }
    best.expect("simplex oracle found no feasible support").1
}

/// Projection onto `{ 0 <= x <= cap, sum x = count * cap }` by enumerating
/// which coordinates sit at a bound and keeping the closest feasible
/// candidate.
pub fn project_capped_enumerate(y: &Vector, count: usize, cap: f64) -> Vector {
    let n = y.len();
    assert!(n <= 10, "bound pattern oracle is exponential in n");
    let total = count as f64 * cap;
    let mut best: Option<(f64, Vector)> = None;
    let mut pattern = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 0).collect();
        let uppers = (0..n).filter(|&i| pattern[i] == 2).count();
        let mut x = Vector::zeros(n);
        for i in 0..n {
            if pattern[i] == 2 {
                x[i] = cap;
            }
        }
        let mut ok = true;
        if free.is_empty() {
            ok = (uppers as f64 * cap - total).abs() <= 1e-9;
        } else {
            let theta = (free.iter().map(|&i| y[i]).sum::<f64>() + uppers as f64 * cap
                - total)
                / free.len() as f64;
            for &i in &free {
                let v = y[i] - theta;
                if !(-1e-10..=cap + 1e-10).contains(&v) {
                    ok = false;
                    break;
                }
                x[i] = v.clamp(0.0, cap);
            }
        }
        if ok {
            let dist = (&x - y).norm_squared();
            match &best {
                Some((d, _)) if *d <= dist => {}
                _ => best = Some((dist, x)),
            }
        }
        // Advance the ternary pattern counter.
        let mut carry = 0;
        while carry < n {
            pattern[carry] += 1;
            if pattern[carry] < 3 {
                break;
            }
            pattern[carry] = 0;
            carry += 1;
        }
        if carry == n {
            break;
        }
    }
    best.expect("bound pattern oracle found no feasible candidate").1
}

/// Random Hurwitz Metzler matrix with prescribed size.
pub fn random_stable_metzler(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_range(0.0..1.0) < 0.6 {
                a[(i, j)] = rng.random_range(0.0..1.0);
            }
        }
    }
    // Strict diagonal dominance with margin makes the matrix Hurwitz.
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = -(off + rng.random_range(0.2..1.2));
    }
    a
}

/// Random system satisfying the positivity assumptions, with `D = -I` so
/// larger inputs mean more damping.
pub fn random_damping_system(rng: &mut ChaCha8Rng, n: usize) -> poslin::possys::PositiveSystem {
    let a = random_stable_metzler(rng, n);
    let (b, c) = random_nonneg_bc(rng, n);
    let d = -Matrix::identity(n, n);
    poslin::possys::PositiveSystem::new(a, b, c, d).expect("random system is valid")
}

fn random_nonneg_bc(rng: &mut ChaCha8Rng, n: usize) -> (Matrix, Matrix) {
    let mut b = Matrix::zeros(n, n);
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if rng.random_range(0.0..1.0) < 0.5 {
                b[(i, j)] = rng.random_range(0.0..1.0);
            }
            if rng.random_range(0.0..1.0) < 0.5 {
                c[(i, j)] = rng.random_range(0.0..1.0);
            }
        }
        b[(i, i)] += 0.1;
        c[(i, i)] += 0.1;
    }
    (b, c)
}

/// Threads a directed cycle through `a` while preserving row diagonal
/// dominance, so the state graph becomes weakly connected.
pub fn connect_cycle(a: &mut Matrix) {
    let n = a.nrows();
    if n < 2 {
        return;
    }
    for i in 0..n {
        let j = (i + 1) % n;
        if a[(j, i)] == 0.0 {
            a[(j, i)] = 0.05;
            a[(j, j)] -= 0.05;
        }
    }
}

/// Like [`random_damping_system`] but with a weakly connected state graph.
pub fn random_connected_damping_system(
    rng: &mut ChaCha8Rng,
    n: usize,
) -> poslin::possys::PositiveSystem {
    let mut a = random_stable_metzler(rng, n);
    connect_cycle(&mut a);
    let (b, c) = random_nonneg_bc(rng, n);
    let d = -Matrix::identity(n, n);
    poslin::possys::PositiveSystem::new(a, b, c, d).expect("random system is valid")
}

/// Four-state system made of two identical unstable blocks whose two gain
/// channels mostly damp their own block but leak a small positive amount
/// into the other, so the blockwise norm ties exactly on the diagonal.
pub fn two_block_system() -> poslin::possys::PositiveSystem {
    let a = Matrix::from_row_slice(
        4,
        4,
        &[
            1.0, 1.0, 0.0, 0.0, //
            1.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 1.0, //
            0.0, 0.0, 1.0, 1.0,
        ],
    );
    let d = Matrix::from_row_slice(4, 2, &[-1.0, 0.0, -1.0, 0.1, 0.1, -1.0, 0.0, -1.0]);
    poslin::possys::PositiveSystem::new(a, Matrix::identity(4, 4), Matrix::identity(4, 4), d)
        .expect("two block system is valid")
}

/// Balanced eight-node benchmark network used by the leader selection
/// examples; node indices are zero based.
pub fn eight_node_network() -> poslin::netgraph::DirectedNetwork {
    poslin::netgraph::DirectedNetwork::new(
        8,
        [
            (6, 4, 1.0),
            (3, 4, 1.0),
            (7, 5, 1.0),
            (1, 6, 2.0),
            (0, 1, 1.0),
            (2, 1, 1.0),
            (4, 2, 1.0),
            (4, 7, 1.0),
            (5, 0, 1.0),
            (6, 7, 2.0),
            (7, 6, 1.0),
            (7, 3, 1.0),
        ],
    )
    .expect("benchmark network is valid")
}

/// Balanced random network: a superposition of two to four full cycles
/// over shuffled node orders, each with its own weight, so in-weights
/// equal out-weights at every node.
pub fn random_balanced_network(rng: &mut ChaCha8Rng, n: usize) -> poslin::netgraph::DirectedNetwork {
    use rand::seq::SliceRandom;
    let cycles = 2 + rng.random_range(0..3);
    let mut edges = Vec::new();
    for _ in 0..cycles {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let w = rng.random_range(0.2..1.5);
        for i in 0..n {
            edges.push((order[i], order[(i + 1) % n], w));
        }
    }
    poslin::netgraph::DirectedNetwork::new(n, edges).unwrap()
}

/// Random digraph where each ordered pair carries an edge with the given
/// probability; may be disconnected or even edgeless.
pub fn random_digraph(
    rng: &mut ChaCha8Rng,
    n: usize,
    p_edge: f64,
) -> poslin::netgraph::DirectedNetwork {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_range(0.0..1.0) < p_edge {
                edges.push((i, j, rng.random_range(0.3..1.7)));
            }
        }
    }
    poslin::netgraph::DirectedNetwork::new(n, edges).unwrap()
}

/// Strongly connected random digraph: a full cycle over a shuffled node
/// order plus `extra` random chords.
pub fn random_strongly_connected_net(
    rng: &mut ChaCha8Rng,
    n: usize,
    extra: usize,
) -> poslin::netgraph::DirectedNetwork {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((order[i], order[(i + 1) % n], rng.random_range(0.4..1.6)));
    }
    let mut added = 0;
    while added < extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.push((a, b, rng.random_range(0.4..1.6)));
            added += 1;
        }
    }
    poslin::netgraph::DirectedNetwork::new(n, edges).unwrap()
}

/// Connected undirected network encoded as symmetric edge pairs: a path
/// over a shuffled node order plus `extra` random symmetric chords.
pub fn random_undirected_net(
    rng: &mut ChaCha8Rng,
    n: usize,
    extra: usize,
) -> poslin::netgraph::DirectedNetwork {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n - 1 {
        let w = rng.random_range(0.4..1.6);
        edges.push((order[i], order[i + 1], w));
        edges.push((order[i + 1], order[i], w));
    }
    let mut added = 0;
    while added < extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            let w = rng.random_range(0.4..1.6);
            edges.push((a, b, w));
            edges.push((b, a, w));
            added += 1;
        }
    }
    poslin::netgraph::DirectedNetwork::new(n, edges).unwrap()
}

/// Random system with a rectangular, mixed-sign gain matrix `D` whose
/// damping dominates, so moderate positive inputs keep the loop Hurwitz.
pub fn random_mixed_gain_system(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
) -> poslin::possys::PositiveSystem {
    let mut a = random_stable_metzler(rng, n);
    connect_cycle(&mut a);
    let (b, c) = random_nonneg_bc(rng, n);
    let mut d = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            d[(i, j)] = -rng.random_range(0.1..1.0);
        }
        if rng.random_range(0.0..1.0) < 0.5 {
            let j = rng.random_range(0..m);
            d[(i, j)] = 0.05;
        }
    }
    poslin::possys::PositiveSystem::new(a, b, c, d).expect("random system is valid")
}
