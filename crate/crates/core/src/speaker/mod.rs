//! Speaker embeddings: a small recurrent d-vector encoder trained with the
//! GE2E loss, centroids, and similarity ranking of adult voices against a
//! child centroid.

mod corpus;
mod embedding;
mod encoder;
mod ge2e;

pub use corpus::{toy_corpus, SpeakerClips, ToySpeaker, SENTENCE_BANK};
pub use embedding::{centroid, cosine_similarity, rank_adults, SpeakerEmbedding};
pub use encoder::{
    embedding_separation, partial_clips, segment_partials, train_encoder, EncoderConfig, EncoderModel,
    Separation, TrainingReport, PARTIAL_HOP_S, PARTIAL_WINDOW_S,
};
pub use ge2e::{ge2e_loss, ge2e_loss_and_gradient, EmbeddingBatch, Ge2eGradient, Ge2eParams, MIN_SCALE};
