use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{next_index, validate_dims, DenseTensor};
use crate::error::{Error, Result};

/// Order-3 tensor-ring core of shape `(left, size, right)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RingCore {
    pub left: usize,
    pub size: usize,
    pub right: usize,
    pub values: Vec<f64>,
}

impl RingCore {
    pub fn new(left: usize, size: usize, right: usize, values: Vec<f64>) -> Result<Self> {
        if left == 0 || size == 0 || right == 0 {
            return Err(Error::InvalidTensor("ring core with a zero dimension".into()));
        }
        if values.len() != left * size * right {
            return Err(Error::InvalidTensor(format!(
                "ring core ({left},{size},{right}) needs {} values, got {}",
                left * size * right,
                values.len()
            )));
        }
        Ok(Self {
            left,
            size,
            right,
            values,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.left, self.size, self.right]
    }

    pub fn get(&self, a: usize, i: usize, b: usize) -> f64 {
        self.values[(a * self.size + i) * self.right + b]
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }
}

/// Ring contraction `T[i_1..i_D] = trace(G_1[:, i_1, :] ... G_D[:, i_D, :])`.
pub fn ring_contract(cores: &[RingCore]) -> Result<DenseTensor> {
    let d = cores.len();
    if d == 0 {
        return Err(Error::InvalidTensor("empty ring".into()));
    }
    for k in 0..d {
        let next = &cores[(k + 1) % d];
        if cores[k].right != next.left {
            return Err(Error::ShapeMismatch {
                left: cores[k].shape().to_vec(),
                right: next.shape().to_vec(),
            });
        }
    }
    let dims: Vec<usize> = cores.iter().map(|c| c.size).collect();
    let len = validate_dims(&dims)?;
    let mut values = Vec::with_capacity(len);
    let mut index = vec![0; d];
    let mut acc: Vec<f64> = Vec::new();
    let mut tmp: Vec<f64> = Vec::new();
    loop {
        // acc is (r0 x r_k) after absorbing cores 0..=k.
        let r0 = cores[0].left;
        acc.clear();
        let c0 = &cores[0];
        for a in 0..r0 {
            for b in 0..c0.right {
                acc.push(c0.get(a, index[0], b));
            }
        }
        let mut cols = c0.right;
        for k in 1..d {
            let c = &cores[k];
            tmp.clear();
            tmp.resize(r0 * c.right, 0.0);
            for a in 0..r0 {
                for m in 0..cols {
                    let x = acc[a * cols + m];
                    if x == 0.0 {
                        continue;
                    }
                    for b in 0..c.right {
                        tmp[a * c.right + b] += x * c.get(m, index[k], b);
                    }
                }
            }
            std::mem::swap(&mut acc, &mut tmp);
            cols = c.right;
        }
        values.push((0..r0).map(|a| acc[a * cols + a]).sum::<f64>());
        if !next_index(&mut index, &dims) {
            break;
        }
    }
    DenseTensor::new(dims, values)
}

/// Contraction of `D` cores of shape `(R_{d-1}, I_d, R_d)` (with `R_0 = R_D`)
/// whose entries are drawn i.i.d. uniform on (0, 1).
///
/// `ring_ranks[d]` is the bond dimension to the right of mode `d`.
pub fn random_ring_tensor(dims: &[usize], ring_ranks: &[usize], seed: u64) -> Result<DenseTensor> {
    validate_dims(dims)?;
    if ring_ranks.len() != dims.len() {
        return Err(Error::InvalidOption(format!(
            "{} ring ranks for a tensor of order {}",
            ring_ranks.len(),
            dims.len()
        )));
    }
    if ring_ranks.contains(&0) {
        return Err(Error::InvalidOption("ring ranks must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dims.len();
    let cores = (0..d)
        .map(|k| {
            let left = ring_ranks[(k + d - 1) % d];
            let right = ring_ranks[k];
            let values = (0..left * dims[k] * right)
                .map(|_| rng.sample::<f64, _>(Open01))
                .collect();
            RingCore::new(left, dims[k], right, values)
        })
        .collect::<Result<Vec<_>>>()?;
    ring_contract(&cores)
}
