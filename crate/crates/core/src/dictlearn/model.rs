use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{DictConfig, DictError, Nonlinearity};
use crate::numkit::{cross_entropy, NumError};
use crate::params::ParamLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ModelDims {
    pub d: usize,
    pub d_static: usize,
    pub k: usize,
    pub n_pos: usize,
    pub n_dep: usize,
}

const SEED_POOL: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Blocks {
    e_ctx: usize,
    b_ctx: usize,
    e_static: usize,
    b_static: usize,
    dict: usize,
    dict_static: usize,
    w_pos: usize,
    b_pos: usize,
    w_dep: usize,
    b_dep: usize,
}

/// Artifact file stem of every parameter block, in layout order.
pub(super) const BLOCK_NAMES: [&str; 10] = [
    "E_ctx", "b_ctx", "E_static", "b_static", "D", "D_static", "W_pos", "b_pos", "W_dep", "b_dep",
];

fn build_layout(dims: ModelDims) -> (ParamLayout, Blocks) {
    let ModelDims { d, d_static, k, n_pos, n_dep } = dims;
    let mut l = ParamLayout::new();
    let blocks = Blocks {
        e_ctx: l.push(BLOCK_NAMES[0], k, d),
        b_ctx: l.push(BLOCK_NAMES[1], 1, k),
        e_static: l.push(BLOCK_NAMES[2], k, d),
        b_static: l.push(BLOCK_NAMES[3], 1, k),
        dict: l.push(BLOCK_NAMES[4], d, k),
        dict_static: l.push(BLOCK_NAMES[5], d_static, k),
        w_pos: l.push(BLOCK_NAMES[6], n_pos, k),
        b_pos: l.push(BLOCK_NAMES[7], 1, n_pos),
        w_dep: l.push(BLOCK_NAMES[8], n_dep, k),
        b_dep: l.push(BLOCK_NAMES[9], 1, n_dep),
    };
    (l, blocks)
}

/// Per-token sparse code.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    pub z_ctx: Vec<f64>,
    pub z_static: Vec<f64>,
}

impl SparseCode {
    /// The full code `z = z_ctx + z_static`.
    pub fn z(&self) -> Vec<f64> {
        self.z_ctx.iter().zip(&self.z_static).map(|(a, b)| a + b).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub x_hat: Vec<f64>,
    pub w_hat: Vec<f64>,
    pub logits_pos: Vec<f64>,
    pub logits_dep: Vec<f64>,
    pub code: SparseCode,
}

/// Batch means of the raw (unweighted) objective terms plus the weighted total.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub recon_ctx: f64,
    pub recon_static: f64,
    pub ce_pos: f64,
    pub ce_dep: f64,
    /// `l1_ctx·‖z_ctx‖₁ + l1_static·‖z_static‖₁`, before `α_sparse`.
    pub sparsity: f64,
}

impl LossTerms {
    fn first_non_finite(&self) -> Option<&'static str> {
        [
            ("recon_ctx", self.recon_ctx),
            ("recon_static", self.recon_static),
            ("ce_pos", self.ce_pos),
            ("ce_dep", self.ce_dep),
            ("sparsity", self.sparsity),
            ("total", self.total),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(n, _)| n)
    }
}

pub(super) struct Encoded {
    pub pre_ctx: Array2<f64>,
    pub pre_static: Array2<f64>,
    pub z_ctx: Array2<f64>,
    pub z_static: Array2<f64>,
    /// `false` where the top-k projection zeroed an entry.
    pub support: Option<Array2<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictModel {
    params: Vec<f64>,
    layout: ParamLayout,
    blocks: Blocks,
    dims: ModelDims,
    pub nonlinearity: Nonlinearity,
    pub topk: Option<usize>,
    pub encoder_bias: bool,
    pub pos_vocab_hash: String,
    pub dep_vocab_hash: String,
}

impl DictModel {
    /// All-zero parameters.
    pub fn zeros(dims: ModelDims, nonlinearity: Nonlinearity, topk: Option<usize>) -> Self {
        let (layout, blocks) = build_layout(dims);
        Self {
            params: vec![0.0; layout.total()],
            layout,
            blocks,
            dims,
            nonlinearity,
            topk,
            encoder_bias: true,
            pos_vocab_hash: String::new(),
            dep_vocab_hash: String::new(),
        }
    }

    /// Random unit-norm dictionary with a tied encoder (`E_ctx = Dᵀ`), a
    /// small random static encoder and zero heads.
    pub fn init(dims: ModelDims, config: &DictConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut m = Self::zeros(dims, config.nonlinearity, config.topk);
        m.encoder_bias = config.encoder_bias;
        let ModelDims { d, k, .. } = dims;
        {
            let mut dict = m.dictionary_mut();
            for j in 0..k {
                let col: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                for (i, v) in col.iter().enumerate() {
                    dict[[i, j]] = v / norm;
                }
            }
        }
        let dict_t = m.dictionary().t().to_owned();
        m.e_ctx_mut().assign(&dict_t);
        let scale = 0.1 / (d as f64).sqrt();
        for v in m.e_static_mut().iter_mut() {
            *v = scale * rng.sample::<f64, _>(StandardNormal);
        }
        let scale = 1.0 / (k as f64).sqrt();
        for v in m.dict_static_mut().iter_mut() {
            *v = scale * rng.sample::<f64, _>(StandardNormal);
        }
        m
    }

    /// k-means++ style seeding: atoms become normalized rows of `x`, each
    /// drawn with probability proportional to `1 − cos²` against the atoms
    /// chosen so far. The contextual encoder is re-tied to the new atoms.
    /// At most `SEED_POOL` rows are considered.
    pub fn seed_atoms_from_data(&mut self, x: &ArrayView2<f64>, rng: &mut ChaCha8Rng) {
        let mut rows: Vec<usize> = (0..x.nrows())
            .filter(|&r| x.row(r).iter().any(|v| *v != 0.0))
            .collect();
        if rows.len() > SEED_POOL {
            rows = rand::seq::index::sample(rng, rows.len(), SEED_POOL)
                .into_iter()
                .map(|i| rows[i])
                .collect();
            rows.sort_unstable();
        }
        if rows.is_empty() {
            return;
        }
        let unit: Vec<Vec<f64>> = rows
            .iter()
            .map(|&r| {
                let row = x.row(r);
                let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                row.iter().map(|v| v / n).collect()
            })
            .collect();
        let mut dist = vec![1.0f64; unit.len()];
        let k = self.dims.k.min(unit.len());
        for j in 0..k {
            let total: f64 = dist.iter().sum();
            let pick = if total <= 1e-12 {
                rng.random_range(0..unit.len())
            } else {
                let mut target = rng.random_range(0.0..total);
                let mut pick = unit.len() - 1;
                for (i, w) in dist.iter().enumerate() {
                    if target < *w {
                        pick = i;
                        break;
                    }
                    target -= w;
                }
                pick
            };
            let atom = unit[pick].clone();
            self.dictionary_mut().column_mut(j).assign(&Array1::from(atom.clone()));
            for (i, u) in unit.iter().enumerate() {
                let c: f64 = u.iter().zip(&atom).map(|(a, b)| a * b).sum();
                dist[i] = dist[i].min((1.0 - c * c).max(0.0));
            }
        }
        let dict_t = self.dictionary().t().to_owned();
        self.e_ctx_mut().assign(&dict_t);
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn k(&self) -> usize {
        self.dims.k
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<(), DictError> {
        if params.len() != self.params.len() {
            return Err(DictError::Shape(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params = params;
        Ok(())
    }

    pub fn e_ctx(&self) -> ArrayView2<'_, f64> {
        self.layout.view(&self.params, self.blocks.e_ctx)
    }
    pub fn b_ctx(&self) -> ArrayView1<'_, f64> {
        self.layout.view(&self.params, self.blocks.b_ctx).index_axis_move(Axis(0), 0)
    }
    pub fn e_static(&self) -> ArrayView2<'_, f64> {
        self.layout.view(&self.params, self.blocks.e_static)
    }
    pub fn b_static(&self) -> ArrayView1<'_, f64> {
        self.layout.view(&self.params, self.blocks.b_static).index_axis_move(Axis(0), 0)
    }
    /// `d × k`; column `j` is atom `j`.
    pub fn dictionary(&self) -> ArrayView2<'_, f64> {
        self.layout.view(&self.params, self.blocks.dict)
    }
    pub fn dict_static(&self) -> ArrayView2<'_, f64> {
        self.layout.view(&self.params, self.blocks.dict_static)
    }
    pub fn w_pos(&self) -> ArrayView2<'_, f64> {
        self.layout.view(&self.params, self.blocks.w_pos)
    }
    pub fn b_pos(&self) -> ArrayView1<'_, f64> {
        self.layout.view(&self.params, self.blocks.b_pos).index_axis_move(Axis(0), 0)
    }
    pub fn w_dep(&self) -> ArrayView2<'_, f64> {
        self.layout.view(&self.params, self.blocks.w_dep)
    }
    pub fn b_dep(&self) -> ArrayView1<'_, f64> {
        self.layout.view(&self.params, self.blocks.b_dep).index_axis_move(Axis(0), 0)
    }

    pub fn e_ctx_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, self.blocks.e_ctx)
    }
    pub fn b_ctx_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, self.blocks.b_ctx)
    }
    pub fn e_static_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, self.blocks.e_static)
    }
    pub fn b_static_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, self.blocks.b_static)
    }
    pub fn dictionary_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, self.blocks.dict)
    }
    pub fn dict_static_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, self.blocks.dict_static)
    }
    pub fn w_pos_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, self.blocks.w_pos)
    }
    pub fn b_pos_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, self.blocks.b_pos)
    }
    pub fn w_dep_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, self.blocks.w_dep)
    }
    pub fn b_dep_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, self.blocks.b_dep)
    }

    fn check_rows(&self, x: &ArrayView2<f64>) -> Result<(), DictError> {
        if x.ncols() != self.dims.d {
            return Err(DictError::Shape(format!(
                "token embedding has {} dimensions, model expects {}",
                x.ncols(),
                self.dims.d
            )));
        }
        Ok(())
    }

    pub(super) fn encode_rows(&self, x: &ArrayView2<f64>) -> Encoded {
        let sigma = self.nonlinearity;
        let mut pre_ctx = x.dot(&self.e_ctx().t());
        pre_ctx += &self.b_ctx();
        let mut pre_static = x.dot(&self.e_static().t());
        pre_static += &self.b_static();
        let mut z_ctx = pre_ctx.mapv(|v| sigma.apply(v));
        let mut z_static = pre_static.mapv(|v| sigma.apply(v));

        let support = match self.topk {
            Some(t) if t < self.dims.k => {
                let k = self.dims.k;
                let mut mask = Array2::from_elem(z_ctx.dim(), false);
                let mut order: Vec<usize> = (0..k).collect();
                for r in 0..z_ctx.nrows() {
                    let mag: Vec<f64> = (0..k).map(|j| (z_ctx[[r, j]] + z_static[[r, j]]).abs()).collect();
                    order.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]).then(a.cmp(&b)));
                    for &j in &order[..t] {
                        mask[[r, j]] = true;
                    }
                }
                z_ctx.zip_mut_with(&mask, |v, &keep| {
                    if !keep {
                        *v = 0.0
                    }
                });
                z_static.zip_mut_with(&mask, |v, &keep| {
                    if !keep {
                        *v = 0.0
                    }
                });
                Some(mask)
            }
            _ => None,
        };
        Encoded {
            pre_ctx,
            pre_static,
            z_ctx,
            z_static,
            support,
        }
    }

    /// Codes for a batch of rows: `(z_ctx, z_static)`, each `B × k`.
    pub fn encode_batch(&self, x: &ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>), DictError> {
        self.check_rows(x)?;
        let e = self.encode_rows(x);
        Ok((e.z_ctx, e.z_static))
    }

    pub fn encode(&self, x: &[f64]) -> Result<SparseCode, DictError> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let (zc, zs) = self.encode_batch(&view)?;
        Ok(SparseCode {
            z_ctx: zc.row(0).to_vec(),
            z_static: zs.row(0).to_vec(),
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward, DictError> {
        let code = self.encode(x)?;
        let z = Array1::from(code.z());
        let zs = Array1::from(code.z_static.clone());
        Ok(Forward {
            x_hat: self.dictionary().dot(&z).to_vec(),
            w_hat: self.dict_static().dot(&zs).to_vec(),
            logits_pos: (self.w_pos().dot(&z) + self.b_pos()).to_vec(),
            logits_dep: (self.w_dep().dot(&z) + self.b_dep()).to_vec(),
            code,
        })
    }

    /// Full code `z` for every row of `x` (`B × k`).
    pub fn codes(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>, DictError> {
        let (zc, zs) = self.encode_batch(x)?;
        Ok(zc + zs)
    }

    /// Objective terms on a batch and, if requested, the exact gradient of
    /// `total` with respect to every parameter (flat, in layout order).
    ///
    /// The top-k support is held fixed within the call; projected-out
    /// entries receive zero gradient.
    pub fn loss(
        &self,
        x: &ArrayView2<f64>,
        w: &ArrayView2<f64>,
        y_pos: &[usize],
        y_dep: &[usize],
        cfg: &DictConfig,
        want_grad: bool,
    ) -> Result<(LossTerms, Option<Vec<f64>>), DictError> {
        self.check_rows(x)?;
        let b = x.nrows();
        if b == 0 {
            return Err(DictError::Shape("empty batch".into()));
        }
        if w.nrows() != b || w.ncols() != self.dims.d_static || y_pos.len() != b || y_dep.len() != b {
            return Err(DictError::Shape(format!(
                "batch of {b} rows with static {:?} and {} / {} labels",
                w.dim(),
                y_pos.len(),
                y_dep.len()
            )));
        }
        let inv_b = 1.0 / b as f64;
        let enc = self.encode_rows(x);
        let z = &enc.z_ctx + &enc.z_static;

        let resid = z.dot(&self.dictionary().t()) - x;
        let resid_s = enc.z_static.dot(&self.dict_static().t()) - w;
        let mut logits_pos = z.dot(&self.w_pos().t());
        logits_pos += &self.b_pos();
        let mut logits_dep = z.dot(&self.w_dep().t());
        logits_dep += &self.b_dep();

        let mut terms = LossTerms {
            recon_ctx: resid.iter().map(|v| v * v).sum::<f64>() * inv_b,
            recon_static: resid_s.iter().map(|v| v * v).sum::<f64>() * inv_b,
            sparsity: (cfg.l1_ctx * enc.z_ctx.iter().map(|v| v.abs()).sum::<f64>()
                + cfg.l1_static * enc.z_static.iter().map(|v| v.abs()).sum::<f64>())
                * inv_b,
            ..Default::default()
        };
        let mut g_pos = Array2::<f64>::zeros(logits_pos.dim());
        let mut g_dep = Array2::<f64>::zeros(logits_dep.dim());
        for r in 0..b {
            let (l, g) = ce(logits_pos.row(r).as_slice().expect("row"), y_pos[r], "ce_pos")?;
            terms.ce_pos += l * inv_b;
            g_pos.row_mut(r).assign(&Array1::from(g));
            let (l, g) = ce(logits_dep.row(r).as_slice().expect("row"), y_dep[r], "ce_dep")?;
            terms.ce_dep += l * inv_b;
            g_dep.row_mut(r).assign(&Array1::from(g));
        }
        terms.total = terms.recon_ctx
            + cfg.alpha_pos * terms.ce_pos
            + cfg.alpha_dep * terms.ce_dep
            + cfg.alpha_static * terms.recon_static
            + cfg.alpha_sparse * terms.sparsity;
        if let Some(term) = terms.first_non_finite() {
            return Err(DictError::NonFinite { term });
        }
        if !want_grad {
            return Ok((terms, None));
        }

        // upstream gradients, already divided by the batch size
        let g_xhat = resid * (2.0 * inv_b);
        let g_what = resid_s * (2.0 * cfg.alpha_static * inv_b);
        g_pos *= cfg.alpha_pos * inv_b;
        g_dep *= cfg.alpha_dep * inv_b;

        let mut grad = vec![0.0; self.layout.total()];
        let l = &self.layout;
        let bl = self.blocks;

        l.view_mut(&mut grad, bl.dict).assign(&g_xhat.t().dot(&z));
        l.view_mut(&mut grad, bl.dict_static).assign(&g_what.t().dot(&enc.z_static));
        l.view_mut(&mut grad, bl.w_pos).assign(&g_pos.t().dot(&z));
        l.view_mut(&mut grad, bl.w_dep).assign(&g_dep.t().dot(&z));
        l.view_mut(&mut grad, bl.b_pos).row_mut(0).assign(&g_pos.sum_axis(Axis(0)));
        l.view_mut(&mut grad, bl.b_dep).row_mut(0).assign(&g_dep.sum_axis(Axis(0)));

        let g_z = g_xhat.dot(&self.dictionary()) + g_pos.dot(&self.w_pos()) + g_dep.dot(&self.w_dep());
        let l1c = cfg.alpha_sparse * cfg.l1_ctx * inv_b;
        let l1s = cfg.alpha_sparse * cfg.l1_static * inv_b;
        let mut g_zc = g_z.clone();
        g_zc.zip_mut_with(&enc.z_ctx, |g, &v| *g += l1c * sign(v));
        let mut g_zs = g_z + g_what.dot(&self.dict_static());
        g_zs.zip_mut_with(&enc.z_static, |g, &v| *g += l1s * sign(v));
        if let Some(mask) = &enc.support {
            let drop = |g: &mut f64, &keep: &bool| {
                if !keep {
                    *g = 0.0
                }
            };
            g_zc.zip_mut_with(mask, drop);
            g_zs.zip_mut_with(mask, drop);
        }
        let sigma = self.nonlinearity;
        g_zc.zip_mut_with(&enc.pre_ctx, |g, &p| *g *= sigma.derivative(p));
        g_zs.zip_mut_with(&enc.pre_static, |g, &p| *g *= sigma.derivative(p));

        l.view_mut(&mut grad, bl.e_ctx).assign(&g_zc.t().dot(x));
        l.view_mut(&mut grad, bl.e_static).assign(&g_zs.t().dot(x));
        if self.encoder_bias {
            l.view_mut(&mut grad, bl.b_ctx).row_mut(0).assign(&g_zc.sum_axis(Axis(0)));
            l.view_mut(&mut grad, bl.b_static).row_mut(0).assign(&g_zs.sum_axis(Axis(0)));
        }
        Ok((terms, Some(grad)))
    }

    /// Rescales every atom to unit norm and moves the scale into the
    /// encoder rows, biases and code consumers so that `x̂`, `ŵ` and the
    /// logits are unchanged. Atoms with vanishing norm are redrawn.
    pub fn renormalize_atoms(&mut self, rng: &mut ChaCha8Rng) {
        let (d, k) = (self.dims.d, self.dims.k);
        for j in 0..k {
            let norm = self.dictionary().column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-12 {
                let col: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let n = col.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                let mut dict = self.dictionary_mut();
                for (i, v) in col.iter().enumerate() {
                    dict[[i, j]] = v / n;
                }
                self.e_ctx_mut().row_mut(j).fill(0.0);
                self.e_static_mut().row_mut(j).fill(0.0);
                self.b_ctx_mut()[[0, j]] = 0.0;
                self.b_static_mut()[[0, j]] = 0.0;
                continue;
            }
            self.dictionary_mut().column_mut(j).mapv_inplace(|v| v / norm);
            self.e_ctx_mut().row_mut(j).mapv_inplace(|v| v * norm);
            self.e_static_mut().row_mut(j).mapv_inplace(|v| v * norm);
            self.b_ctx_mut()[[0, j]] *= norm;
            self.b_static_mut()[[0, j]] *= norm;
            self.dict_static_mut().column_mut(j).mapv_inplace(|v| v / norm);
            self.w_pos_mut().column_mut(j).mapv_inplace(|v| v / norm);
            self.w_dep_mut().column_mut(j).mapv_inplace(|v| v / norm);
        }
    }

    /// Flat indices of every parameter that reads or writes atom `j`'s code.
    pub fn atom_param_indices(&self, j: usize) -> Vec<usize> {
        let ModelDims { d, d_static, k, n_pos, n_dep } = self.dims;
        let l = &self.layout;
        let bl = self.blocks;
        let mut out = Vec::with_capacity(2 * d + 2 * k + d_static + n_pos + n_dep);
        for block in [bl.e_ctx, bl.e_static] {
            let off = l.block(block).offset + j * d;
            out.extend(off..off + d);
        }
        for block in [bl.b_ctx, bl.b_static] {
            out.push(l.block(block).offset + j);
        }
        for (block, rows) in [(bl.dict, d), (bl.dict_static, d_static), (bl.w_pos, n_pos), (bl.w_dep, n_dep)] {
            let off = l.block(block).offset;
            out.extend((0..rows).map(|r| off + r * k + j));
        }
        out
    }

    /// Points atom `j` along `direction` (normalized), ties its contextual
    /// encoder row to it and clears everything else attached to the atom.
    pub fn reset_atom(&mut self, j: usize, direction: &[f64]) {
        let n = direction.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let unit = Array1::from_iter(direction.iter().map(|v| v / n));
        for idx in self.atom_param_indices(j) {
            self.params[idx] = 0.0;
        }
        self.dictionary_mut().column_mut(j).assign(&unit);
        self.e_ctx_mut().row_mut(j).assign(&unit);
    }

    pub fn atom_norms(&self) -> Vec<f64> {
        self.dictionary()
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }
}

fn ce(logits: &[f64], label: usize, term: &'static str) -> Result<(f64, Vec<f64>), DictError> {
    cross_entropy(logits, label).map_err(|e| match e {
        NumError::NonFinite(_) => DictError::NonFinite { term },
        other => other.into(),
    })
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
