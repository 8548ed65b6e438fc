use ndarray::{concatenate, Array1, Array2, Axis};
use rand::Rng;

use super::{leaky_relu, leaky_relu_grad, one_hot, Activation, AttentionBlock, Dense, DenseNet, NetTape, Params};
use crate::error::{Error, Result};

/// Centralized critics for all agents, sharing one attention block.
///
/// For agent `i`:
///
/// ```text
/// e_j = lrelu(Dense_sa_j([o_j, onehot(a_j)]))     every agent j
/// g_i = lrelu(Dense_s_i(o_i))
/// x_i = Σ_{j≠i} ω_ij lrelu(W_v e_j),  ω_i = softmax_j((W_k e_j)ᵀ W_q g_i)
/// Q_i(o, ·, a_{-i}) = f_i([g_i, x_i])              one value per action of i
/// ```
///
/// The query is built from `g_i`, which does not see `a_i`, so the whole
/// Q vector over agent `i`'s actions comes from one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticSet {
    pub sa_encoders: Vec<Dense>,
    pub s_encoders: Vec<Dense>,
    pub attention: AttentionBlock,
    pub heads: Vec<DenseNet>,
    obs_dims: Vec<usize>,
    action_dims: Vec<usize>,
}

/// Forward values kept for [`CriticSet::backward`].
#[derive(Debug, Clone)]
pub struct CriticTape {
    sa_in: Vec<Array2<f64>>,
    sa_pre: Vec<Array2<f64>>,
    e: Vec<Array2<f64>>,
    obs: Vec<Array2<f64>>,
    s_pre: Vec<Array2<f64>>,
    g: Vec<Array2<f64>>,
    keys: Vec<Array2<f64>>,
    v_pre: Vec<Array2<f64>>,
    values: Vec<Array2<f64>>,
    queries: Vec<Array2<f64>>,
    /// `weights[i]` is `B × J` with a zero column at `i`.
    weights: Vec<Array2<f64>>,
    heads: Vec<NetTape>,
    batch: usize,
}

impl CriticTape {
    pub fn attention_weights(&self, agent: usize) -> &Array2<f64> {
        &self.weights[agent]
    }
}

fn rowdot(a: &Array2<f64>, b: &Array2<f64>) -> Array1<f64> {
    (a * b).sum_axis(Axis(1))
}

fn scale_rows(m: &Array2<f64>, s: &Array1<f64>) -> Array2<f64> {
    m * &s.view().insert_axis(Axis(1))
}

impl CriticSet {
    pub fn new<R: Rng + ?Sized>(
        obs_dims: &[usize],
        action_dims: &[usize],
        hidden: usize,
        attend_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if obs_dims.len() != action_dims.len() {
            return Err(Error::Shape("one observation and one action size per agent".into()));
        }
        if obs_dims.len() < 2 {
            return Err(Error::Shape("attention critics need at least 2 agents".into()));
        }
        if hidden == 0 || attend_dim == 0 || action_dims.contains(&0) || obs_dims.contains(&0) {
            return Err(Error::Shape("critic widths must be positive".into()));
        }
        let sa_encoders = obs_dims
            .iter()
            .zip(action_dims)
            .map(|(o, a)| Dense::new(o + a, hidden, rng))
            .collect();
        let s_encoders = obs_dims.iter().map(|o| Dense::new(*o, hidden, rng)).collect();
        let attention = AttentionBlock::new(hidden, attend_dim, rng);
        let heads = action_dims
            .iter()
            .map(|a| DenseNet::mlp(&[hidden + attend_dim, hidden, *a], Activation::Linear, rng))
            .collect();
        Ok(Self {
            sa_encoders,
            s_encoders,
            attention,
            heads,
            obs_dims: obs_dims.to_vec(),
            action_dims: action_dims.to_vec(),
        })
    }

    pub fn num_agents(&self) -> usize {
        self.obs_dims.len()
    }

    pub fn obs_dims(&self) -> &[usize] {
        &self.obs_dims
    }

    pub fn action_dims(&self) -> &[usize] {
        &self.action_dims
    }

    pub fn hidden(&self) -> usize {
        self.attention.embed_dim()
    }

    pub fn attend_dim(&self) -> usize {
        self.attention.attend_dim()
    }

    fn check(&self, obs: &[Array2<f64>], actions: &[Vec<usize>]) -> Result<usize> {
        let n = self.num_agents();
        if obs.len() != n || actions.len() != n {
            return Err(Error::Shape(format!("critic expects {n} agents")));
        }
        let batch = obs[0].nrows();
        for j in 0..n {
            if obs[j].dim() != (batch, self.obs_dims[j]) {
                return Err(Error::Shape(format!(
                    "agent {j}: observation batch {:?}, expected ({batch}, {})",
                    obs[j].dim(),
                    self.obs_dims[j]
                )));
            }
            if actions[j].len() != batch || actions[j].iter().any(|&a| a >= self.action_dims[j]) {
                return Err(Error::Shape(format!("agent {j}: bad action batch")));
            }
        }
        Ok(batch)
    }

    /// Q vectors, one `B × |A_i|` matrix per agent.
    pub fn forward(&self, obs: &[Array2<f64>], actions: &[Vec<usize>]) -> Result<Vec<Array2<f64>>> {
        Ok(self
            .forward_tape(obs, actions)?
            .heads
            .iter()
            .map(|t| t.output().clone())
            .collect())
    }

    pub fn forward_tape(&self, obs: &[Array2<f64>], actions: &[Vec<usize>]) -> Result<CriticTape> {
        let batch = self.check(obs, actions)?;
        let n = self.num_agents();
        let att = &self.attention;

        let mut sa_in = Vec::with_capacity(n);
        let mut sa_pre = Vec::with_capacity(n);
        let mut e = Vec::with_capacity(n);
        let mut s_pre = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        let mut keys = Vec::with_capacity(n);
        let mut v_pre = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let mut queries = Vec::with_capacity(n);
        for j in 0..n {
            let input = concatenate(
                Axis(1),
                &[obs[j].view(), one_hot(&actions[j], self.action_dims[j]).view()],
            )
            .expect("batch rows agree");
            let z = self.sa_encoders[j].forward(&input);
            let ej = z.mapv(leaky_relu);
            let zs = self.s_encoders[j].forward(&obs[j]);
            let gj = zs.mapv(leaky_relu);
            keys.push(ej.dot(&att.w_key.t()));
            let vp = ej.dot(&att.w_value.t());
            values.push(vp.mapv(leaky_relu));
            v_pre.push(vp);
            queries.push(gj.dot(&att.w_query.t()));
            sa_in.push(input);
            sa_pre.push(z);
            e.push(ej);
            s_pre.push(zs);
            g.push(gj);
        }

        let mut weights = Vec::with_capacity(n);
        let mut heads = Vec::with_capacity(n);
        for i in 0..n {
            let mut scores = Array2::<f64>::zeros((batch, n));
            for j in (0..n).filter(|&j| j != i) {
                scores.column_mut(j).assign(&rowdot(&keys[j], &queries[i]));
            }
            let mut w = Array2::<f64>::zeros((batch, n));
            for b in 0..batch {
                let row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| scores[[b, j]]).collect();
                let p = super::softmax(&row);
                for (k, j) in (0..n).filter(|&j| j != i).enumerate() {
                    w[[b, j]] = p[k];
                }
            }
            let mut x = Array2::<f64>::zeros((batch, att.attend_dim()));
            for j in (0..n).filter(|&j| j != i) {
                x += &scale_rows(&values[j], &w.column(j).to_owned());
            }
            let head_in = concatenate(Axis(1), &[g[i].view(), x.view()]).expect("batch rows agree");
            heads.push(self.heads[i].forward_tape(&head_in)?);
            weights.push(w);
        }

        Ok(CriticTape {
            sa_in,
            sa_pre,
            e,
            obs: obs.to_vec(),
            s_pre,
            g,
            keys,
            v_pre,
            values,
            queries,
            weights,
            heads,
            batch,
        })
    }

    pub fn outputs(tape: &CriticTape) -> Vec<&Array2<f64>> {
        tape.heads.iter().map(|t| t.output()).collect()
    }

    /// Accumulates into `grad` the gradient of `Σ_i sum(dq[i] ⊙ Q_i)`.
    pub fn backward(&self, tape: &CriticTape, dq: &[Array2<f64>], grad: &mut CriticSet) -> Result<()> {
        let n = self.num_agents();
        if tape.heads.len() != n || dq.len() != n {
            return Err(Error::Shape("tape or upstream gradient does not match this critic".into()));
        }
        let h = self.hidden();
        let batch = tape.batch;
        let att = &self.attention;

        let mut de: Vec<Array2<f64>> = (0..n).map(|_| Array2::zeros((batch, h))).collect();
        let mut dg: Vec<Array2<f64>> = de.clone();
        let mut dkeys: Vec<Array2<f64>> = (0..n).map(|_| Array2::zeros((batch, att.attend_dim()))).collect();
        let mut dvalues = dkeys.clone();
        let mut dqueries = dkeys.clone();

        for i in 0..n {
            let d_in = self.heads[i].backward(&tape.heads[i], &dq[i], &mut grad.heads[i])?;
            dg[i] += &d_in.slice(ndarray::s![.., ..h]);
            let dx = d_in.slice(ndarray::s![.., h..]).to_owned();
            let w = &tape.weights[i];
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            // dω_j = dx · v_j ; ds_j = ω_j (dω_j - Σ_k ω_k dω_k)
            let mut domega = Array2::<f64>::zeros((batch, n));
            for &j in &others {
                domega.column_mut(j).assign(&rowdot(&dx, &tape.values[j]));
                dvalues[j] += &scale_rows(&dx, &w.column(j).to_owned());
            }
            let mean = (w * &domega).sum_axis(Axis(1));
            for &j in &others {
                let ds = &w.column(j) * &(&domega.column(j) - &mean);
                dkeys[j] += &scale_rows(&tape.queries[i], &ds);
                dqueries[i] += &scale_rows(&tape.keys[j], &ds);
            }
        }

        for j in 0..n {
            // keys and values come from e_j, queries from g_j
            let mut dvp = dvalues[j].clone();
            dvp.zip_mut_with(&tape.v_pre[j], |d, &z| *d *= leaky_relu_grad(z));
            grad.attention.w_key += &dkeys[j].t().dot(&tape.e[j]);
            grad.attention.w_value += &dvp.t().dot(&tape.e[j]);
            grad.attention.w_query += &dqueries[j].t().dot(&tape.g[j]);
            de[j] += &dkeys[j].dot(&att.w_key);
            de[j] += &dvp.dot(&att.w_value);
            dg[j] += &dqueries[j].dot(&att.w_query);

            let mut dz = de[j].clone();
            dz.zip_mut_with(&tape.sa_pre[j], |d, &z| *d *= leaky_relu_grad(z));
            self.sa_encoders[j].backward_params(&tape.sa_in[j], &dz, &mut grad.sa_encoders[j]);
            let mut dzs = dg[j].clone();
            dzs.zip_mut_with(&tape.s_pre[j], |d, &z| *d *= leaky_relu_grad(z));
            self.s_encoders[j].backward_params(&tape.obs[j], &dzs, &mut grad.s_encoders[j]);
        }
        Ok(())
    }
}

impl Params for CriticSet {
    fn tensors(&self) -> Vec<&Array2<f64>> {
        let mut t = self.sa_encoders.tensors();
        t.extend(self.s_encoders.tensors());
        t.extend(self.attention.tensors());
        t.extend(self.heads.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut t = self.sa_encoders.tensors_mut();
        t.extend(self.s_encoders.tensors_mut());
        t.extend(self.attention.tensors_mut());
        t.extend(self.heads.tensors_mut());
        t
    }
}
