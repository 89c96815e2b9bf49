use alloc::string::String;
use thiserror::Error;

/// Errors produced by the core pipeline stages.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    /// Corpus parameters cannot produce a valid corpus.
    #[error("corpus sizing: {0}")]
    Sizing(String),

    /// An item id does not belong to the active corpus.
    #[error("item {item_id} not in corpus of {corpus_size} items")]
    CorpusMembership { item_id: u32, corpus_size: usize },

    /// A policy broke the recommendation protocol (e.g. returned an empty slate).
    #[error("policy protocol violation at step {step}: {reason}")]
    PolicyProtocol { step: u32, reason: String },

    /// A simulation failed; carries the index of the offending user.
    #[error("simulation for user {user_index} failed: {source}")]
    Simulation {
        user_index: usize,
        #[source]
        source: alloc::boxed::Box<CoreError>,
    },

    /// An argument was outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Loss or gradient evaluation was asked for an empty batch.
    #[error("batch must not be empty")]
    EmptyBatch,

    /// Loss became non-finite during training.
    #[error("non-finite loss at optimization step {step}")]
    NonFiniteLoss { step: usize },

    /// A gradient entry became non-finite.
    #[error("non-finite gradient in parameter block `{block}`")]
    NonFiniteGradient { block: &'static str },
}

impl CoreError {
    pub(crate) fn for_user(self, user_index: usize) -> CoreError {
        CoreError::Simulation {
            user_index,
            source: alloc::boxed::Box::new(self),
        }
    }
}
