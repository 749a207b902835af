//! The post-processing methods compared throughout the crate.

use std::fmt;

use crate::baselines::{ledoit_wolf, remove_top_pcs, LwResult};
use crate::embedding::Embedding;
use crate::error::Result;
use crate::shrinkage::{postprocess_beta, BetaGrid, ShrinkageReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Raw vectors; no centering.
    None,
    /// Spectrum repowering with `β*` picked on the grid.
    Beta(BetaGrid),
    /// Remove the top `k` principal components.
    TopPc(usize),
    LedoitWolf,
}

/// A processed embedding plus whatever the method reports about itself.
#[derive(Debug, Clone)]
pub struct Processed {
    pub embedding: Embedding,
    pub beta_report: Option<ShrinkageReport>,
    pub ledoit_wolf: Option<LwResult>,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Beta(_) => "beta",
            Method::TopPc(_) => "top-pc",
            Method::LedoitWolf => "ledoit-wolf",
        }
    }

    pub fn apply(&self, emb: &Embedding) -> Result<Processed> {
        let mut out = Processed {
            embedding: emb.clone(),
            beta_report: None,
            ledoit_wolf: None,
        };
        match *self {
            Method::None => {}
            Method::Beta(grid) => {
                let (e, report) = postprocess_beta(emb, &grid)?;
                out.embedding = e;
                out.beta_report = Some(report);
            }
            Method::TopPc(k) => out.embedding = remove_top_pcs(emb, k)?,
            Method::LedoitWolf => {
                let (e, lw) = ledoit_wolf(emb)?;
                out.embedding = e;
                out.ledoit_wolf = Some(lw);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
