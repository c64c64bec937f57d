use std::path::{Path, PathBuf};
use std::sync::Arc;

use tract_onnx::prelude::*;

use super::{EncoderKind, QueryEncoder, QueryVector, Vocab};
use crate::error::{Error, Result};
use crate::model::{normalize, DenseVector, SparseVector};

/// How a dense query vector is pooled from per-token hidden states.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Pooling {
    #[default]
    StartToken,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputHead {
    /// Output `[1, seq, dim]`, pooled and normalized.
    Dense(Pooling),
    /// Output `[1, seq, vocab]` logits. Term weight is `max over seq of ln(1 + relu(x))`;
    /// weights at or below `threshold` are pruned.
    Sparse { threshold: f32 },
}

impl OutputHead {
    pub fn kind(&self) -> EncoderKind {
        match self {
            OutputHead::Dense(_) => EncoderKind::Dense,
            OutputHead::Sparse { .. } => EncoderKind::Sparse,
        }
    }
}

/// Encodes queries at search time by running an ONNX graph.
///
/// Model inputs, in declaration order, are fed `input_ids`, an all-ones attention mask
/// and all-zero token type ids, each shaped `[1, seq]` as i64. The optimized plan is
/// shared; every `encode` call runs with its own execution state, so concurrent calls
/// from several worker threads do not contend on a session lock.
#[derive(Debug, Clone)]
pub struct RuntimeEncoder {
    model_path: PathBuf,
    plan: Arc<TypedRunnableModel>,
    input_count: usize,
    vocab: Vocab,
    head: OutputHead,
}

impl RuntimeEncoder {
    pub fn load(model_path: impl AsRef<Path>, vocab: Vocab, head: OutputHead) -> Result<Self> {
        let model_path = model_path.as_ref().to_path_buf();
        let wrap = |e: TractError| Error::Inference {
            path: model_path.clone(),
            message: format!("{e:#}"),
        };
        let mut model = tract_onnx::onnx().model_for_path(&model_path).map_err(wrap)?;
        let input_count = model.input_outlets().map_err(wrap)?.len();
        if !(1..=3).contains(&input_count) {
            return Err(Error::Inference {
                path: model_path,
                message: format!("expected 1 to 3 model inputs, found {input_count}"),
            });
        }
        let seq = model.symbols.sym("S");
        for i in 0..input_count {
            model = model
                .with_input_fact(
                    i,
                    InferenceFact::dt_shape(i64::datum_type(), tvec!(1.to_dim(), seq.to_dim())),
                )
                .map_err(wrap)?;
        }
        let plan = model
            .into_optimized()
            .and_then(|m| m.into_runnable())
            .map_err(wrap)?;
        Ok(Self {
            model_path,
            plan,
            input_count,
            vocab,
            head,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn infer(&self, ids: &[u32]) -> Result<(Vec<usize>, Vec<f32>)> {
        let wrap = |e: TractError| Error::Inference {
            path: self.model_path.clone(),
            message: format!("{e:#}"),
        };
        let n = ids.len();
        let ids: Vec<i64> = ids.iter().map(|&i| i64::from(i)).collect();
        let mut inputs: TVec<TValue> = tvec![Tensor::from_shape(&[1, n], &ids).map_err(wrap)?.into()];
        if self.input_count >= 2 {
            inputs.push(Tensor::from_shape(&[1, n], &vec![1i64; n]).map_err(wrap)?.into());
        }
        if self.input_count >= 3 {
            inputs.push(Tensor::from_shape(&[1, n], &vec![0i64; n]).map_err(wrap)?.into());
        }
        let outputs = self.plan.run(inputs).map_err(wrap)?;
        let out = outputs[0].cast_to::<f32>().map_err(wrap)?;
        let view = out.to_plain_array_view::<f32>().map_err(wrap)?;
        Ok((view.shape().to_vec(), view.iter().copied().collect()))
    }
}

impl QueryEncoder for RuntimeEncoder {
    fn kind(&self) -> EncoderKind {
        self.head.kind()
    }

    fn encode(&self, query: &str) -> Result<QueryVector> {
        let ids = self.vocab.tokenize(query);
        let (shape, data) = self.infer(&ids)?;
        let bad_shape = || Error::Inference {
            path: self.model_path.clone(),
            message: format!("unexpected output shape {shape:?} for {} tokens", ids.len()),
        };
        // Accept [1, seq, width] or [seq, width].
        let (seq, width) = match shape.as_slice() {
            [1, s, w] | [s, w] => (*s, *w),
            _ => return Err(bad_shape()),
        };
        if seq != ids.len() || width == 0 {
            return Err(bad_shape());
        }
        let row = |i: usize| &data[i * width..(i + 1) * width];
        match self.head {
            OutputHead::Dense(pooling) => {
                let pooled: Vec<f32> = match pooling {
                    Pooling::StartToken => row(0).to_vec(),
                    Pooling::Mean => (0..width)
                        .map(|j| (0..seq).map(|i| f64::from(row(i)[j])).sum::<f64>() / seq as f64)
                        .map(|x| x as f32)
                        .collect(),
                };
                Ok(QueryVector::Dense(normalize(&DenseVector::new(pooled)?)?))
            }
            OutputHead::Sparse { threshold } => {
                if width != self.vocab.len() {
                    return Err(Error::Inference {
                        path: self.model_path.clone(),
                        message: format!(
                            "sparse head width {width} differs from vocabulary size {}",
                            self.vocab.len()
                        ),
                    });
                }
                let mut entries = Vec::new();
                for j in 0..width {
                    let w = (0..seq)
                        .map(|i| row(i)[j].max(0.0).ln_1p())
                        .fold(0.0f32, f32::max);
                    if w > threshold && w > 0.0 {
                        entries.push((self.vocab.token(j as u32).unwrap_or_default(), f64::from(w)));
                    }
                }
                Ok(QueryVector::Sparse(SparseVector::new(entries)?))
            }
        }
    }
}
