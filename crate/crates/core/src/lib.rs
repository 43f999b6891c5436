//! Paired shortcut/challenging reading-comprehension datasets, a compact
//! span-extraction learner, and probes of how the learner acquires shortcut
//! tricks during training.

pub mod corpus;
pub mod textproc;
pub mod paraphrase;
pub mod construct;
pub mod model;
pub mod probes;
pub mod cli;
