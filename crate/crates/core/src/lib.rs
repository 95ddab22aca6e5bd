//! Social-aware content caching for vehicular networks.
//!
//! The crate is organized bottom-up:
//!
//! * [`road_net`] road graph, travel-time model and traffic-only shortest paths
//! * [`social_path`] provider-maximizing route planning under a detour budget
//! * [`content_embed`] content graph, skip-gram embeddings and intersection recommendation
//! * [`provider_rl`] content deliverability and the DQN routing policy for providers
//! * [`dissemination`] interest forwarding, content index, caches and RSU fallback
//! * [`sim`] the deterministic fixed-step simulator, metrics and sweeps
//! * [`audit`] an independent re-computation of run metrics from event logs

pub mod audit;
pub mod content_embed;
pub mod cost;
pub mod dissemination;
pub mod provider_rl;
pub mod road_net;
pub mod sim;
pub mod social_path;

pub use cost::CostCounter;
