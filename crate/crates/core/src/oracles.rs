//! Closed-form and brute-force reference solutions. Nothing here calls the
//! finite-element code.

/// Terms kept in the slab series. The first neglected term is bounded by
/// `4/((2N+1) pi) exp(-(2N+1)^2 pi^2 D t / (4 L^2))`.
pub const SLAB_TERMS: usize = 200;

/// Slab `0 <= x <= L` initially dry, held at `cs` on `x = 0` and insulated
/// at `x = L`.
pub fn slab_diffusion_oracle(x: f64, t: f64, d: f64, cs: f64, len: f64) -> f64 {
    if x <= 0.0 {
        return cs;
    }
    if t <= 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    let mut sum = 0.0;
    for k in 0..SLAB_TERMS {
        let m = (2 * k + 1) as f64;
        let decay = (-(m * m) * pi * pi * d * t / (4.0 * len * len)).exp();
        if decay == 0.0 {
            break;
        }
        sum += 4.0 / (m * pi) * (m * pi * x / (2.0 * len)).sin() * decay;
    }
    cs * (1.0 - sum)
}

/// Semi-infinite medium with a step to `cs` at `x = 0`.
pub fn erfc_profile(x: f64, t: f64, d: f64, cs: f64) -> f64 {
    if t <= 0.0 {
        return if x <= 0.0 { cs } else { 0.0 };
    }
    cs * libm::erfc(x / (2.0 * (d * t).sqrt()))
}

/// Explicit finite-difference march of the same slab problem on `cells`
/// intervals; used to cross-check the series.
pub fn slab_fd_march(t: f64, d: f64, cs: f64, len: f64, cells: usize) -> Vec<f64> {
    let h = len / cells as f64;
    let stable = 0.4 * h * h / d;
    let steps = (t / stable).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let r = d * dt / (h * h);
    let mut u = vec![0.0; cells + 1];
    u[0] = cs;
    let mut next = u.clone();
    for _ in 0..steps {
        for i in 1..cells {
            next[i] = u[i] + r * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
        }
        // mirror node for the insulated end
        next[cells] = u[cells] + 2.0 * r * (u[cells - 1] - u[cells]);
        next[0] = cs;
        std::mem::swap(&mut u, &mut next);
    }
    u
}

/// `exp(-x / l)`: indicator on a half line with value 1 at the origin.
pub fn screened_poisson_oracle(x: f64, length_scale: f64) -> f64 {
    (-x / length_scale).exp()
}

/// Homogeneous AT2 damage for a constant driving energy.
pub fn at2_homogeneous_oracle(psi: f64, gc: f64, length_scale: f64) -> f64 {
    2.0 * length_scale * psi / (gc + 2.0 * length_scale * psi)
}

/// Free elongation of a homogeneous body.
pub fn free_swelling_oracle(alpha: f64, dc: f64, len: f64) -> f64 {
    alpha * dc * len
}

/// Largest deviation between a central-difference Jacobian of `residual`
/// at `state` and the analytic `jacobian` (dense, row-major), relative to
/// the largest analytic entry.
pub fn fd_jacobian_check<F>(residual: F, jacobian: &[Vec<f64>], state: &[f64], perturbation: f64) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = state.len();
    let scale = jacobian
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    let mut x = state.to_vec();
    for j in 0..n {
        let h = perturbation * state[j].abs().max(1.0);
        x[j] = state[j] + h;
        let rp = residual(&x);
        x[j] = state[j] - h;
        let rm = residual(&x);
        x[j] = state[j];
        for i in 0..rp.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * h);
            worst = worst.max((fd - jacobian[i][j]).abs());
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}
