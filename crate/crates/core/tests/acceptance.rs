//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//! Reference values come from independent brute-force code below: the
//! recursive Möbius function of the index poset, direct marginal sums,
//! explicit ring contraction and closed-form factor expressions.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use manybody::{
    cyclic_set, eta_from_tensor, export_ring_cores, extract_factors, ipf_project, kl_divergence, lbtc,
    m_body_set, project, project_from, random_ring_tensor, recovery_fit, reconstruct_from_factors,
    relative_error, tensor_from_eta, tensor_from_theta, theta_from_tensor, CompletionOptions, CompletionResult,
    DenseTensor, InteractionSet, MaskedTensor, OracleOptions, SolverOptions, SplitPlan,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- helpers

fn rand_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseTensor {
    let n: usize = dims.iter().product();
    let values = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    DenseTensor::new(dims.to_vec(), values).unwrap()
}

fn normalized(t: &DenseTensor) -> DenseTensor {
    t.normalize().unwrap().0
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn all_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &n in dims {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

fn flat(dims: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
}

fn leq(a: &[usize], b: &[usize]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn support(idx: &[usize]) -> Vec<usize> {
    idx.iter().enumerate().filter(|(_, &i)| i > 0).map(|(d, _)| d).collect()
}

/// `η[i] = Σ_{i' >= i} p[i']`, by direct summation.
fn eta_brute(p: &DenseTensor, idx: &[usize]) -> f64 {
    all_indices(p.dims())
        .iter()
        .filter(|j| leq(idx, j))
        .map(|j| p.get(j))
        .sum()
}

fn marginal_brute(p: &DenseTensor, mode: usize) -> Vec<f64> {
    let mut m = vec![0.0; p.dims()[mode]];
    for idx in all_indices(p.dims()) {
        m[idx[mode]] += p.get(&idx);
    }
    m
}

/// Möbius function of the product order, by the defining recursion.
struct Mobius {
    memo: HashMap<(Vec<usize>, Vec<usize>), f64>,
    dims: Vec<usize>,
}

impl Mobius {
    fn new(dims: &[usize]) -> Self {
        Self {
            memo: HashMap::new(),
            dims: dims.to_vec(),
        }
    }

    fn mu(&mut self, s: &[usize], t: &[usize]) -> f64 {
        if !leq(s, t) {
            return 0.0;
        }
        if s == t {
            return 1.0;
        }
        let key = (s.to_vec(), t.to_vec());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let between: Vec<Vec<usize>> = all_indices(&self.dims)
            .into_iter()
            .filter(|u| leq(s, u) && leq(u, t) && u.as_slice() != t)
            .collect();
        let v = -between.iter().map(|u| self.mu(s, u)).sum::<f64>();
        self.memo.insert(key, v);
        v
    }
}

fn basis_indices(s: &InteractionSet, dims: &[usize]) -> Vec<Vec<usize>> {
    all_indices(dims)
        .into_iter()
        .filter(|idx| {
            let sup = support(idx);
            !sup.is_empty() && s.contains(&sup)
        })
        .collect()
}

fn tight() -> SolverOptions {
    SolverOptions {
        tolerance: 1e-11,
        ..Default::default()
    }
}

fn standard_sets(order: usize) -> Vec<(&'static str, InteractionSet)> {
    vec![
        ("one-body", m_body_set(order, 1).unwrap()),
        ("cyclic", cyclic_set(order).unwrap()),
        ("two-body", m_body_set(order, 2).unwrap()),
    ]
}

// ---------------------------------------------------------------- criteria

fn c1_round_trips() -> Outcome {
    let start = Instant::now();
    let shapes: [&[usize]; 5] = [&[2, 2], &[3, 4], &[2, 3, 2], &[3, 3, 3], &[2, 2, 2, 2]];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let p = normalized(&rand_tensor(&mut rng, shapes[k % shapes.len()]));
        let via_theta = tensor_from_theta(&theta_from_tensor(&p).unwrap()).unwrap();
        let via_eta = tensor_from_eta(&eta_from_tensor(&p).unwrap()).unwrap();
        worst = worst
            .max(max_abs_diff(via_theta.values(), p.values()))
            .max(max_abs_diff(via_eta.values(), p.values()));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 1e-12, || format!("max error {worst:.2e}"))?;
    ensure(secs < 5.0, || format!("took {secs:.2}s"))?;
    Ok(format!("200 tensors, max error {worst:.1e}, {secs:.2}s"))
}

fn c2_mobius() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for dims in [vec![2, 2], vec![2, 3, 2]] {
        let p = normalized(&rand_tensor(&mut rng, &dims));
        let idx = all_indices(&dims);
        let mut mob = Mobius::new(&dims);
        let theta = theta_from_tensor(&p).unwrap();
        let eta = eta_from_tensor(&p).unwrap();
        for i in &idx {
            let t: f64 = idx.iter().map(|j| mob.mu(j, i) * p.get(j).ln()).sum();
            let e = eta_brute(&p, i);
            let back: f64 = idx.iter().map(|j| mob.mu(i, j) * eta.values()[flat(&dims, j)]).sum();
            worst = worst
                .max((theta.values()[flat(&dims, i)] - t).abs())
                .max((eta.values()[flat(&dims, i)] - e).abs())
                .max((back - p.get(i)).abs());
        }
        // Direct check of the recursion: μ((0,0),(1,1)) = 1 in two dimensions.
        if dims.len() == 2 {
            ensure(
                (mob.mu(&[0, 0], &[1, 1]) - 1.0).abs() < 1e-15 && (mob.mu(&[0, 0], &[0, 1]) + 1.0).abs() < 1e-15,
                || "recursive Möbius values off".into(),
            )?;
        }
    }
    ensure(worst < 1e-12, || format!("max deviation {worst:.2e}"))?;
    Ok(format!("2x2 and 2x3x2, max deviation {worst:.1e}"))
}

fn c3_uniqueness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = rand_tensor(&mut rng, &[3, 3, 3]);
        for (name, s) in standard_sets(3) {
            let reference = project(&p, &s, &tight()).unwrap();
            ensure(reference.converged, || format!("{name}: zero start did not converge"))?;
            let scale = reference.tensor.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for _ in 0..5 {
                let start: Vec<f64> = (0..reference.basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let r = project_from(&p, &s, &tight(), &start).unwrap();
                ensure(r.converged, || format!("{name}: random start did not converge"))?;
                worst = worst.max(max_abs_diff(r.tensor.values(), reference.tensor.values()) / scale);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 1e-6, || format!("relative spread {worst:.2e}"))?;
    ensure(secs < 30.0, || format!("took {secs:.2}s"))?;
    Ok(format!("20 tensors x 3 sets x 5 starts, relative spread {worst:.1e}, {secs:.2}s"))
}

fn c4_moment_matching() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shapes: [&[usize]; 4] = [&[3, 4], &[2, 3, 2], &[3, 3, 3], &[2, 3, 2, 2]];
    let mut worst = 0.0f64;
    let mut count = 0;
    for dims in shapes {
        for _ in 0..5 {
            let p = rand_tensor(&mut rng, dims);
            let p_hat = normalized(&p);
            let mut sets = standard_sets(dims.len());
            sets.push(("full", InteractionSet::full(dims.len()).unwrap()));
            for (name, s) in sets {
                let r = project(&p, &s, &SolverOptions::default()).unwrap();
                ensure(r.converged, || format!("{name} on {dims:?} did not converge"))?;
                let q_hat = normalized(&r.tensor);
                for idx in basis_indices(&s, dims) {
                    worst = worst.max((eta_brute(&q_hat, &idx) - eta_brute(&p_hat, &idx)).abs());
                }
                count += 1;
            }
        }
    }
    ensure(worst < 1e-4, || format!("max eta mismatch {worst:.2e}"))?;
    Ok(format!("{count} projections, max eta mismatch {worst:.1e}"))
}

/// Largest |2x2 minor| over every matricization (row modes = any proper nonempty subset).
fn max_minor(t: &DenseTensor) -> f64 {
    let dims = t.dims();
    let d = dims.len();
    let mut worst = 0.0f64;
    for mask in 1..(1u32 << d) - 1 {
        let row_modes: Vec<usize> = (0..d).filter(|k| mask & (1 << k) != 0).collect();
        let col_modes: Vec<usize> = (0..d).filter(|k| mask & (1 << k) == 0).collect();
        let rdims: Vec<usize> = row_modes.iter().map(|&k| dims[k]).collect();
        let cdims: Vec<usize> = col_modes.iter().map(|&k| dims[k]).collect();
        let rows = all_indices(&rdims);
        let cols = all_indices(&cdims);
        let entry = |r: &[usize], c: &[usize]| {
            let mut idx = vec![0; d];
            for (k, &m) in row_modes.iter().enumerate() {
                idx[m] = r[k];
            }
            for (k, &m) in col_modes.iter().enumerate() {
                idx[m] = c[k];
            }
            t.get(&idx)
        };
        for a in 0..rows.len() {
            for b in a + 1..rows.len() {
                for x in 0..cols.len() {
                    for y in x + 1..cols.len() {
                        let m = entry(&rows[a], &cols[x]) * entry(&rows[b], &cols[y])
                            - entry(&rows[a], &cols[y]) * entry(&rows[b], &cols[x]);
                        worst = worst.max(m.abs());
                    }
                }
            }
        }
    }
    worst
}

fn c5_mean_field() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shapes: [&[usize]; 5] = [&[3, 4], &[2, 3, 4], &[3, 3, 3], &[2, 2, 2, 2], &[4, 2, 3]];
    let (mut worst_outer, mut worst_minor) = (0.0f64, 0.0f64);
    for k in 0..50 {
        let dims = shapes[k % shapes.len()];
        let p = rand_tensor(&mut rng, dims);
        let r = project(&p, &m_body_set(dims.len(), 1).unwrap(), &tight()).unwrap();
        ensure(r.converged, || format!("instance {k} did not converge"))?;
        let total = p.total_sum();
        let margs: Vec<Vec<f64>> = (0..dims.len()).map(|m| marginal_brute(&p, m)).collect();
        let outer = DenseTensor::from_fn(dims.to_vec(), |idx| {
            total * idx.iter().enumerate().map(|(m, &i)| margs[m][i] / total).product::<f64>()
        })
        .unwrap();
        worst_outer = worst_outer.max(max_abs_diff(r.tensor.values(), outer.values()));
        worst_minor = worst_minor.max(max_minor(&r.tensor));
    }
    ensure(worst_outer < 1e-8, || format!("outer-product mismatch {worst_outer:.2e}"))?;
    ensure(worst_minor < 1e-8, || format!("largest 2x2 minor {worst_minor:.2e}"))?;
    Ok(format!(
        "50 tensors, outer-product mismatch {worst_outer:.1e}, largest minor {worst_minor:.1e}"
    ))
}

fn c6_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let shapes: [&[usize]; 5] = [&[2, 2, 2], &[3, 2, 3], &[3, 3, 3], &[2, 3], &[3, 3]];
    let mut worst = 0.0f64;
    let mut worst_kl = 0.0f64;
    for k in 0..30 {
        let dims = shapes[k % shapes.len()];
        let (name, s) = standard_sets(dims.len()).swap_remove(k % 3);
        let p = normalized(&rand_tensor(&mut rng, dims));
        let r = project(&p, &s, &SolverOptions::default()).unwrap();
        ensure(r.converged, || format!("{name} on {dims:?} did not converge"))?;
        let q = ipf_project(&p, &s, &OracleOptions::default()).unwrap();
        worst = worst.max(max_abs_diff(r.tensor.values(), q.values()));
        worst_kl = worst_kl.max((r.kl - kl_divergence(&p, &q).unwrap()).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 1e-5, || format!("max elementwise difference {worst:.2e}"))?;
    ensure(worst_kl < 1e-6, || format!("max KL difference {worst_kl:.2e}"))?;
    ensure(secs < 60.0, || format!("took {secs:.2}s"))?;
    Ok(format!(
        "30 instances, max difference {worst:.1e}, KL difference {worst_kl:.1e}, {secs:.2}s"
    ))
}

fn c7_kl_nesting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = SolverOptions {
        tolerance: 1e-9,
        ..Default::default()
    };
    let mut gaps = Vec::new();
    for k in 0..5 {
        let p = rand_tensor(&mut rng, &[3, 3, 3, 3]);
        let kl = |s: InteractionSet| {
            let r = project(&p, &s, &opts).unwrap();
            assert!(r.converged);
            r.kl
        };
        let one = kl(m_body_set(4, 1).unwrap());
        let cyc = kl(cyclic_set(4).unwrap());
        let two = kl(m_body_set(4, 2).unwrap());
        let three = kl(m_body_set(4, 3).unwrap());
        ensure(one >= cyc - 1e-9 && cyc >= two - 1e-9 && two >= three - 1e-9, || {
            format!("instance {k}: {one:.3e} {cyc:.3e} {two:.3e} {three:.3e}")
        })?;
        gaps.push(one - three);
    }
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("5 tensors of 3x3x3x3 ordered, smallest one-body minus three-body gap {min_gap:.2e}"))
}

/// `H^S[i] = -Σ θ[i']` over indices `i' <= i` whose support is exactly `S`.
fn energy_brute(theta: &[f64], dims: &[usize], subset: &[usize], idx: &[usize]) -> f64 {
    -all_indices(dims)
        .iter()
        .filter(|j| support(j) == subset && subset.iter().all(|&d| j[d] <= idx[d]))
        .map(|j| theta[flat(dims, j)])
        .sum::<f64>()
}

/// Factor of maximal subset `m` from the closed form with explicit coefficients.
fn closed_form_factor(
    theta: &[f64],
    dims: &[usize],
    m: &[usize],
    coeff: &dyn Fn(&[usize]) -> f64,
    root: f64,
    idx_full: &[usize],
) -> f64 {
    let z = (-theta[0]).exp();
    let mut energy = 0.0;
    for mask in 1u32..(1 << m.len()) {
        let sub: Vec<usize> = (0..m.len()).filter(|k| mask & (1 << k) != 0).map(|k| m[k]).collect();
        energy += coeff(&sub) * energy_brute(theta, dims, &sub, idx_full);
    }
    z.powf(-1.0 / root) * (-energy).exp()
}

fn c8_factors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // Share counts of the printed closed forms.
    let cyc = SplitPlan::new(&cyclic_set(4).unwrap());
    let two = SplitPlan::new(&m_body_set(4, 2).unwrap());
    let three = SplitPlan::new(&m_body_set(4, 3).unwrap());
    ensure(cyc.root() == 4 && (0..4).all(|d| cyc.share_count(&[d]) == Some(2)), || {
        "cyclic: expected Z^(1/4) and 1/2 on singletons".into()
    })?;
    ensure(
        two.root() == 6
            && (0..4).all(|d| two.share_count(&[d]) == Some(3))
            && two.share_count(&[0, 1]) == Some(1),
        || "two-body: expected Z^(1/6) and 1/3 on singletons".into(),
    )?;
    ensure(
        three.root() == 4
            && (0..4).all(|d| three.share_count(&[d]) == Some(3))
            && [[0, 1], [0, 2], [1, 3], [2, 3]].iter().all(|p| three.share_count(p) == Some(2))
            && three.share_count(&[0, 1, 2]) == Some(1),
        || "three-body: expected Z^(1/4), 1/3 on singletons and 1/2 on pairs".into(),
    )?;

    // Printed closed forms, coefficient by subset size.
    let cases: Vec<(&str, Vec<usize>, InteractionSet, Box<dyn Fn(&[usize]) -> f64>, f64)> = vec![
        (
            "cyclic D=4",
            vec![2, 3, 2, 3],
            cyclic_set(4).unwrap(),
            Box::new(|s: &[usize]| if s.len() == 1 { 0.5 } else { 1.0 }),
            4.0,
        ),
        (
            "two-body D=4",
            vec![3, 2, 2, 3],
            m_body_set(4, 2).unwrap(),
            Box::new(|s: &[usize]| if s.len() == 1 { 1.0 / 3.0 } else { 1.0 }),
            6.0,
        ),
        (
            "three-body D=4",
            vec![2, 3, 2, 2],
            m_body_set(4, 3).unwrap(),
            Box::new(|s: &[usize]| match s.len() {
                1 => 1.0 / 3.0,
                2 => 0.5,
                _ => 1.0,
            }),
            4.0,
        ),
    ];
    let mut worst_rec = 0.0f64;
    let mut worst_closed = 0.0f64;
    for (name, dims, s, coeff, root) in &cases {
        let p = rand_tensor(&mut rng, dims).scaled(10.0).unwrap();
        let r = project(&p, s, &tight()).unwrap();
        let f = extract_factors(&r, s).map_err(|e| format!("{name}: {e}"))?;
        let back = reconstruct_from_factors(&f, dims).unwrap();
        worst_rec = worst_rec.max(max_abs_diff(back.values(), r.tensor.values()));
        let theta = theta_from_tensor(&normalized(&r.tensor)).unwrap();
        for factor in f.factors() {
            for sub_idx in all_indices(factor.values.dims()) {
                let mut full = vec![0; dims.len()];
                for (k, &m) in factor.modes.iter().enumerate() {
                    full[m] = sub_idx[k];
                }
                let expected = closed_form_factor(theta.values(), dims, &factor.modes, coeff.as_ref(), *root, &full);
                let got = factor.values.get(&sub_idx);
                worst_closed = worst_closed.max((got - expected).abs() / expected);
            }
        }
    }

    // Tree set on nine binary modes: four factors, P = A B C G.
    let tree = InteractionSet::from_subsets(9, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8], vec![2, 5, 8]]).unwrap();
    let dims = vec![2; 9];
    let p = rand_tensor(&mut rng, &dims);
    let r = project(&p, &tree, &tight()).unwrap();
    let f = extract_factors(&r, &tree).map_err(|e| format!("tree: {e}"))?;
    ensure(f.factors().len() == 4, || format!("tree: {} factors", f.factors().len()))?;
    let back = reconstruct_from_factors(&f, &dims).unwrap();
    worst_rec = worst_rec.max(max_abs_diff(back.values(), r.tensor.values()));

    ensure(worst_rec < 1e-9, || format!("reconstruction error {worst_rec:.2e}"))?;
    ensure(worst_closed < 1e-9, || format!("closed-form mismatch {worst_closed:.2e}"))?;
    Ok(format!(
        "cyclic/two-body/three-body/tree reconstruct to {worst_rec:.1e}, closed forms to {worst_closed:.1e}"
    ))
}

/// `trace(G_1[:, i_1, :] ... G_D[:, i_D, :])` by summing over every bond assignment.
fn ring_entry_brute(cores: &[manybody::RingCore], idx: &[usize]) -> f64 {
    let bonds: Vec<usize> = cores.iter().map(|c| c.right).collect();
    let d = cores.len();
    all_indices(&bonds)
        .iter()
        .map(|r| {
            (0..d)
                .map(|k| cores[k].get(r[(k + d - 1) % d], idx[k], r[k]))
                .product::<f64>()
        })
        .sum()
}

fn c9_ring_export() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for dims in [vec![3, 4, 2], vec![2, 2, 2, 2]] {
        let p = rand_tensor(&mut rng, &dims);
        let s = cyclic_set(dims.len()).unwrap();
        let r = project(&p, &s, &tight()).unwrap();
        let f = extract_factors(&r, &s).map_err(|e| e.to_string())?;
        let cyc = reconstruct_from_factors(&f, &dims).unwrap();
        let rc = export_ring_cores(&f).map_err(|e| e.to_string())?;
        ensure(rc.ranks == dims, || format!("ring rank {:?} for dims {dims:?}", rc.ranks))?;
        for (k, core) in rc.cores.iter().enumerate() {
            let prev = dims[(k + dims.len() - 1) % dims.len()];
            ensure(core.shape() == [prev, dims[k], dims[k]], || format!("core {k} shape {:?}", core.shape()))?;
            ensure(core.nonzero_count() == prev * dims[k], || format!("core {k} is not diagonal"))?;
        }
        for idx in all_indices(&dims) {
            worst = worst.max((ring_entry_brute(&rc.cores, &idx) - cyc.get(&idx)).abs());
        }
    }
    ensure(worst < 1e-12, || format!("contraction mismatch {worst:.2e}"))?;
    Ok(format!("3x4x2 and 2x2x2x2, contraction mismatch {worst:.1e}, ring rank = dims"))
}

fn c10_parameter_count() -> Outcome {
    let hand = cyclic_set(4).unwrap().count_parameters(&[40, 40, 3, 10]).unwrap();
    ensure(hand == 2058, || format!("(40,40,3,10) gave {hand}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let d = rng.random_range(2..=6usize);
        let dims: Vec<usize> = (0..d).map(|_| rng.random_range(1..=5usize)).collect();
        let s = cyclic_set(d).unwrap();
        let got = s.count_parameters(&dims).unwrap();
        // 1 + Σ (I_d - 1) + Σ over distinct neighbouring pairs (I_d - 1)(I_{d+1} - 1).
        let mut pairs: Vec<(usize, usize)> = (0..d).map(|k| (k.min((k + 1) % d), k.max((k + 1) % d))).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let formula = 1
            + dims.iter().map(|i| i - 1).sum::<usize>()
            + pairs.iter().map(|&(a, b)| (dims[a] - 1) * (dims[b] - 1)).sum::<usize>();
        let brute = all_indices(&dims)
            .iter()
            .filter(|idx| {
                let sup = support(idx);
                sup.len() <= 1 || (sup.len() == 2 && pairs.contains(&(sup[0], sup[1])))
            })
            .count();
        ensure(got == formula && got == brute, || {
            format!("dims {dims:?}: got {got}, formula {formula}, enumeration {brute}")
        })?;
    }
    Ok("2058 for (40,40,3,10); 20 random cyclic configurations match".into())
}

fn hide(rng: &mut ChaCha8Rng, t: &DenseTensor, fraction: f64) -> MaskedTensor {
    let n = t.len();
    let hidden = (fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut observed = vec![true; n];
    for &i in &order[..hidden] {
        observed[i] = false;
    }
    MaskedTensor::from_tensor(t, observed).unwrap()
}

fn check_trace(r: &CompletionResult, opts: &CompletionOptions) -> Result<(), String> {
    let tr = &r.residual_trace;
    ensure(tr.iter().all(|v| v.is_finite() && *v >= 0.0), || "non-finite residual".into())?;
    ensure(tr.len() > 2, || format!("stopped after {} iterations", tr.len()))?;
    ensure(r.iterations == tr.len(), || "iteration count differs from trace length".into())?;
    for t in 3..tr.len() {
        ensure((tr[t - 1] - tr[t - 2]).abs() >= opts.epsilon, || format!("should have stopped at t = {t}"))?;
    }
    let last = (tr[tr.len() - 1] - tr[tr.len() - 2]).abs();
    ensure(last < opts.epsilon || tr.len() == opts.max_iterations, || {
        format!("stopped at t = {} without meeting the rule", tr.len())
    })
}

fn c11_completion() -> Outcome {
    let start = Instant::now();
    let popts = SolverOptions::default();
    let copts = CompletionOptions::default();

    // (a) fully observed
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let full = rand_tensor(&mut rng, &[3, 4, 2]);
    let m = MaskedTensor::from_tensor(&full, vec![true; full.len()]).unwrap();
    let ra = lbtc(&m, &cyclic_set(3).unwrap(), &popts, &copts).unwrap();
    ensure(
        ra.tensor.values().iter().zip(full.values()).all(|(a, b)| a.to_bits() == b.to_bits()),
        || "fully observed input changed".into(),
    )?;
    check_trace(&ra, &copts).map_err(|e| format!("(a) {e}"))?;

    // (b) rank one
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let vecs: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let truth = DenseTensor::from_fn(vec![4, 4, 4], |i| vecs[0][i[0]] * vecs[1][i[1]] * vecs[2][i[2]]).unwrap();
    let m = hide(&mut rng, &truth, 0.2);
    let rb = lbtc(&m, &m_body_set(3, 1).unwrap(), &popts, &copts).unwrap();
    let fit_b = recovery_fit(&truth, &rb.tensor, &m.missing()).unwrap();
    check_trace(&rb, &copts).map_err(|e| format!("(b) {e}"))?;
    ensure(fit_b >= 0.95, || format!("(b) rank-1 recovery fit {fit_b:.4}"))?;

    // (c) cyclic model
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let energies: Vec<Vec<f64>> = (0..3).map(|_| (0..16).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let truth = DenseTensor::from_fn(vec![4, 4, 4], |i| {
        (0..3).map(|k| energies[k][i[k] * 4 + i[(k + 1) % 3]]).sum::<f64>().exp()
    })
    .unwrap();
    let m = hide(&mut rng, &truth, 0.25);
    // With epsilon 1e-5 the rule fires near t = 100 while the residual is still
    // ~1e-3 and shrinking; one decade tighter lets em approach its fixed point.
    let default_run = lbtc(&m, &cyclic_set(3).unwrap(), &popts, &copts).unwrap();
    let fit_default = recovery_fit(&truth, &default_run.tensor, &m.missing()).unwrap();
    check_trace(&default_run, &copts).map_err(|e| format!("(c) {e}"))?;
    let copts_c = CompletionOptions {
        epsilon: 1e-6,
        ..CompletionOptions::default()
    };
    let rc = lbtc(&m, &cyclic_set(3).unwrap(), &popts, &copts_c).unwrap();
    let fit_c = recovery_fit(&truth, &rc.tensor, &m.missing()).unwrap();
    check_trace(&rc, &copts_c).map_err(|e| format!("(c) {e}"))?;
    ensure(fit_c >= 0.9, || format!("(c) cyclic recovery fit {fit_c:.4}"))?;

    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.2}s"))?;
    Ok(format!(
        "fixed point ok, rank-1 fit {fit_b:.4} ({} it), cyclic fit {fit_c:.4} ({} it, epsilon 1e-6; {fit_default:.4} after {} it at 1e-5), traces ok, {secs:.2}s",
        rb.iterations, rc.iterations, default_run.iterations
    ))
}

fn c12_ring_ordering() -> Outcome {
    let p = random_ring_tensor(&[6, 6, 6, 6], &[3, 3, 3, 3], 0).unwrap();
    let err = |s: InteractionSet| {
        let r = project(&p, &s, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        relative_error(&p, &r.tensor).unwrap()
    };
    let one = err(m_body_set(4, 1).unwrap());
    let cyc = err(cyclic_set(4).unwrap());
    let two = err(m_body_set(4, 2).unwrap());
    ensure(cyc < one && two <= cyc, || format!("one-body {one:.4e}, cyclic {cyc:.4e}, two-body {two:.4e}"))?;
    Ok(format!("one-body {one:.4e} > cyclic {cyc:.4e} >= two-body {two:.4e}"))
}

fn c13_scale_equivariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let shapes: [&[usize]; 3] = [&[3, 3, 3], &[2, 3, 4], &[2, 2, 2, 2]];
    let mut worst = 0.0f64;
    for k in 0..10 {
        let dims = shapes[k % shapes.len()];
        let (_, s) = standard_sets(dims.len()).swap_remove(k % 3);
        let p = rand_tensor(&mut rng, dims);
        let base = project(&p, &s, &SolverOptions::default()).unwrap();
        for lambda in [0.5, 3.0] {
            let r = project(&p.scaled(lambda).unwrap(), &s, &SolverOptions::default()).unwrap();
            let expected: Vec<f64> = base.tensor.values().iter().map(|v| v * lambda).collect();
            worst = worst.max(max_abs_diff(r.tensor.values(), &expected));
        }
    }
    ensure(worst < 1e-9, || format!("max deviation {worst:.2e}"))?;
    Ok(format!("10 instances, lambda in {{0.5, 3}}, max deviation {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("coordinate round trips", c1_round_trips),
        ("Möbius equivalence", c2_mobius),
        ("uniqueness from random starts", c3_uniqueness),
        ("moment matching", c4_moment_matching),
        ("mean-field equals outer product", c5_mean_field),
        ("IPF oracle equivalence", c6_oracle),
        ("KL nesting", c7_kl_nesting),
        ("factor reconstruction", c8_factors),
        ("ring-core export", c9_ring_export),
        ("parameter counting", c10_parameter_count),
        ("completion properties", c11_completion),
        ("synthetic ring ordering", c12_ring_ordering),
        ("scale equivariance", c13_scale_equivariance),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
