//! Profiling TV shows from microblog traces.
//!
//! The pipeline retrieves show-relevant microblogs by joint actor-account
//! and topic-keyword matching with repost expansion, then profiles each
//! show from four aspects: its viewers, its content, the social graph of its
//! viewers and cast, and how audiences move between shows.

pub mod error;
pub mod graphkit;
pub mod ingest;
pub mod model;
pub mod profile;
pub mod report;
pub mod retrieval;

pub use error::{Error, Result};
pub use model::{Dataset, Microblog, SentimentLabel, TvShow, UserProfile};
