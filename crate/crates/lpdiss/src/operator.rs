//! One description for every operator family the crate examines.

use serde::{Deserialize, Serialize};

use crate::coeff::{CoefficientField, DomainBox};
use crate::elasticity::ElasticityParams;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// u ↦ Σₕₖ ∂ₕ(Aʰᵏ(x) ∂ₖ u) in one of the supported shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OperatorSpec {
    /// Scalar unknown; the field is the n×n matrix (aʰᵏ).
    Scalar { field: CoefficientField },
    /// m unknowns, one m×m block per axis and no mixed derivatives.
    Diagonal { blocks: Vec<CoefficientField> },
    /// Two axes, full 2×2 array of m×m blocks indexed `[h][k]`.
    General2d { blocks: Vec<Vec<CoefficientField>> },
    Elasticity { nu: f64 },
}

impl OperatorSpec {
    /// Checks the shape constraints of each family.
    pub fn validate(&self) -> Result<()> {
        match self {
            OperatorSpec::Scalar { field } => {
                if field.matrix_dim() != field.space_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: field.space_dim(),
                        got: field.matrix_dim(),
                    });
                }
            }
            OperatorSpec::Diagonal { blocks } => {
                let first = blocks
                    .first()
                    .ok_or_else(|| Error::InvalidField("a diagonal system needs at least one block".into()))?;
                if blocks.len() != first.space_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: first.space_dim(),
                        got: blocks.len(),
                    });
                }
                for b in blocks {
                    if b.matrix_dim() != first.matrix_dim() || b.space_dim() != first.space_dim() {
                        return Err(Error::DimensionMismatch {
                            expected: first.matrix_dim(),
                            got: b.matrix_dim(),
                        });
                    }
                }
            }
            OperatorSpec::General2d { blocks } => {
                if blocks.len() != 2 || blocks.iter().any(|r| r.len() != 2) {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        got: blocks.len(),
                    });
                }
                let m = blocks[0][0].matrix_dim();
                for b in blocks.iter().flatten() {
                    if b.space_dim() != 2 || b.matrix_dim() != m {
                        return Err(Error::DimensionMismatch {
                            expected: m,
                            got: b.matrix_dim(),
                        });
                    }
                }
            }
            OperatorSpec::Elasticity { nu } => {
                ElasticityParams::new(*nu)?;
            }
        }
        Ok(())
    }

    /// Number of space variables n.
    pub fn space_dim(&self) -> usize {
        match self {
            OperatorSpec::Scalar { field } => field.space_dim(),
            OperatorSpec::Diagonal { blocks } => blocks.len(),
            OperatorSpec::General2d { .. } | OperatorSpec::Elasticity { .. } => 2,
        }
    }

    /// Number of unknown components m.
    pub fn components(&self) -> usize {
        match self {
            OperatorSpec::Scalar { .. } => 1,
            OperatorSpec::Diagonal { blocks } => blocks[0].matrix_dim(),
            OperatorSpec::General2d { blocks } => blocks[0][0].matrix_dim(),
            OperatorSpec::Elasticity { .. } => 2,
        }
    }

    pub(crate) fn fields(&self) -> Vec<&CoefficientField> {
        match self {
            OperatorSpec::Scalar { field } => vec![field],
            OperatorSpec::Diagonal { blocks } => blocks.iter().collect(),
            OperatorSpec::General2d { blocks } => blocks.iter().flatten().collect(),
            OperatorSpec::Elasticity { .. } => Vec::new(),
        }
    }

    /// Common domain of all coefficient fields, `None` when all are constant.
    pub fn domain(&self) -> Result<Option<DomainBox>> {
        let mut out: Option<DomainBox> = None;
        for f in self.fields() {
            if let Some(d) = f.domain() {
                out = Some(match out {
                    None => d.clone(),
                    Some(prev) => prev.intersect(d)?,
                });
            }
        }
        Ok(out)
    }

    /// Coefficient values at x as an n×n array of m×m blocks Aʰᵏ.
    pub fn coeff_blocks(&self, x: &[f64]) -> Result<Vec<Vec<ComplexMatrix>>> {
        let n = self.space_dim();
        let m = self.components();
        match self {
            OperatorSpec::Scalar { field } => {
                let a = field.eval(x)?;
                Ok((0..n)
                    .map(|h| (0..n).map(|k| ComplexMatrix::new(1, vec![a.get(h, k)]).expect("1x1")).collect())
                    .collect())
            }
            OperatorSpec::Diagonal { blocks } => {
                let mut out = vec![vec![ComplexMatrix::zeros(m); n]; n];
                for (h, b) in blocks.iter().enumerate() {
                    out[h][h] = b.eval(x)?;
                }
                Ok(out)
            }
            OperatorSpec::General2d { blocks } => blocks
                .iter()
                .map(|row| row.iter().map(|b| b.eval(x)).collect())
                .collect(),
            OperatorSpec::Elasticity { nu } => {
                let blocks = ElasticityParams::new(*nu)?.blocks();
                Ok(blocks
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|b| {
                                let data = b.entries().iter().map(|v| C64::new(*v, 0.0)).collect();
                                ComplexMatrix::new(2, data).expect("2x2")
                            })
                            .collect()
                    })
                    .collect())
            }
        }
    }

    /// The same operator with every coefficient multiplied by `z`.
    ///
    /// Elasticity is only closed under real positive factors, so it is
    /// turned into a general two-dimensional system first.
    pub fn scaled(&self, z: C64) -> Self {
        match self {
            OperatorSpec::Scalar { field } => OperatorSpec::Scalar { field: field.scaled(z) },
            OperatorSpec::Diagonal { blocks } => OperatorSpec::Diagonal {
                blocks: blocks.iter().map(|b| b.scaled(z)).collect(),
            },
            OperatorSpec::General2d { blocks } => OperatorSpec::General2d {
                blocks: blocks.iter().map(|r| r.iter().map(|b| b.scaled(z)).collect()).collect(),
            },
            OperatorSpec::Elasticity { nu } => {
                let fields = ElasticityParams::new(*nu).expect("validated ratio").block_fields();
                OperatorSpec::General2d {
                    blocks: fields.iter().map(|r| r.iter().map(|b| b.scaled(z)).collect()).collect(),
                }
            }
        }
    }
}
