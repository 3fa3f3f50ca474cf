//! Reward functions and benchmark scoring for holistic OCR outputs.
//!
//! Text-centric records (documents, formulas, tables) are scored with edit
//! distance, BLEU and tree-edit similarity. Vision-centric records (charts,
//! web pages, SVG, plots, molecules) are scored by comparing rendered
//! images in an embedding space. The [`grpo`] module holds the policy
//! optimization math and a small simulation that exercises it.

pub mod bench;
pub mod corpus;
pub mod grpo;
pub mod normalize;
#[cfg(feature = "native")]
pub mod pipeline;
pub mod score;
pub mod text;
pub mod treedist;
pub mod vision;
