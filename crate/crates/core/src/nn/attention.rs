use ndarray::Array2;
use rand::Rng;

use super::{glorot, leaky_relu, softmax, Params};
use crate::error::{Error, Result};

/// Shared key, query and value transforms, each `attend_dim × embed_dim`,
/// without biases. Values pass through Leaky ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionBlock {
    pub w_key: Array2<f64>,
    pub w_query: Array2<f64>,
    pub w_value: Array2<f64>,
}

impl AttentionBlock {
    pub fn new<R: Rng + ?Sized>(embed_dim: usize, attend_dim: usize, rng: &mut R) -> Self {
        Self {
            w_key: glorot(attend_dim, embed_dim, rng),
            w_query: glorot(attend_dim, embed_dim, rng),
            w_value: glorot(attend_dim, embed_dim, rng),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.w_key.ncols()
    }

    pub fn attend_dim(&self) -> usize {
        self.w_key.nrows()
    }
}

impl Params for AttentionBlock {
    fn tensors(&self) -> Vec<&Array2<f64>> {
        vec![&self.w_key, &self.w_query, &self.w_value]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        vec![&mut self.w_key, &mut self.w_query, &mut self.w_value]
    }
}

/// Result of attending from one query over a set of other embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// Weighted sum of transformed values, `attend_dim` wide.
    pub x: Vec<f64>,
    /// One weight per attended embedding, in input order.
    pub weights: Vec<f64>,
    /// Raw scores before the softmax.
    pub scores: Vec<f64>,
}

fn matvec(m: &Array2<f64>, v: &[f64]) -> Vec<f64> {
    m.rows()
        .into_iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Attends from `query_embed` over `others`. Scores are `(W_k e_j)ᵀ W_q e_q`
/// without scaling.
pub fn attend(query_embed: &[f64], others: &[&[f64]], block: &AttentionBlock) -> Result<Attention> {
    if others.is_empty() {
        return Err(Error::Shape("attention needs at least one other embedding".into()));
    }
    let d = block.embed_dim();
    if query_embed.len() != d || others.iter().any(|e| e.len() != d) {
        return Err(Error::Shape(format!("embeddings must be {d} wide")));
    }
    let q = matvec(&block.w_query, query_embed);
    let scores: Vec<f64> = others
        .iter()
        .map(|e| matvec(&block.w_key, e).iter().zip(&q).map(|(k, q)| k * q).sum())
        .collect();
    let weights = softmax(&scores);
    let mut x = vec![0.0; block.attend_dim()];
    for (e, w) in others.iter().zip(&weights) {
        for (xk, v) in x.iter_mut().zip(matvec(&block.w_value, e)) {
            *xk += w * leaky_relu(v);
        }
    }
    Ok(Attention { x, weights, scores })
}

/// Contribution `x_i` of all agents other than `i`, with `e_i` as the query.
pub fn attention_contribution(embeds: &[Vec<f64>], i: usize, block: &AttentionBlock) -> Result<Attention> {
    if embeds.len() < 2 {
        return Err(Error::Shape(format!(
            "attention needs at least 2 agents, got {}",
            embeds.len()
        )));
    }
    if i >= embeds.len() {
        return Err(Error::Shape(format!("query index {i} out of range")));
    }
    let others: Vec<&[f64]> = embeds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, e)| e.as_slice())
        .collect();
    attend(&embeds[i], &others, block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_embeds(seed: u64, j: usize, d: usize) -> (AttentionBlock, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let block = AttentionBlock::new(d, 6, &mut rng);
        let embeds = (0..j)
            .map(|_| (0..d).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect())
            .collect();
        (block, embeds)
    }

    #[test]
    fn two_agents_give_full_weight() {
        let (block, e) = random_embeds(0, 2, 5);
        let a = attention_contribution(&e, 0, &block).unwrap();
        assert_eq!(a.weights, vec![1.0]);
        assert!(attention_contribution(&e[..1], 0, &block).is_err());
    }

    #[test]
    fn identical_embeddings_are_uniform() {
        let (block, mut e) = random_embeds(1, 5, 4);
        for j in 1..5 {
            e[j] = e[1].clone();
        }
        let a = attention_contribution(&e, 0, &block).unwrap();
        for w in &a.weights {
            assert_eq!(*w, 0.25);
        }
    }

    proptest! {
        #[test]
        fn weights_normalized_and_permutation_invariant(seed in 0u64..500, j in 2usize..7, shift in -5.0f64..5.0) {
            let (block, e) = random_embeds(seed, j, 4);
            for i in 0..j {
                let a = attention_contribution(&e, i, &block).unwrap();
                prop_assert!((a.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(a.weights.iter().all(|w| *w > 0.0));
                let shifted: Vec<f64> = a.scores.iter().map(|s| s + shift).collect();
                for (w, w2) in a.weights.iter().zip(softmax(&shifted)) {
                    prop_assert!((w - w2).abs() <= 1e-12);
                }
            }
            let others: Vec<&[f64]> = e[1..].iter().map(Vec::as_slice).collect();
            let mut reversed = others.clone();
            reversed.reverse();
            let a = attend(&e[0], &others, &block).unwrap();
            let b = attend(&e[0], &reversed, &block).unwrap();
            for (x, y) in a.x.iter().zip(&b.x) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }
}
