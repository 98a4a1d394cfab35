//! Cooperative multi-agent bandits through a queue-based reduction to any
//! single-agent policy.
//!
//! A leader elected on the communication graph runs an ordinary bandit
//! policy. Followers imitate the leader's actions with a delay equal to their
//! hop distance and ship their observations back along a shortest-path tree;
//! the leader keeps one FIFO queue per arm (or per ordered pair of arms for
//! duels) and serves queued observations to the policy before playing in the
//! real environment.
//!
//! Modules:
//! - [`graph`]: topologies, shortest-path trees, leader election, gossip matrix
//! - [`envs`]: reward and duelling environments, privacy mechanisms
//! - [`policies`]: single-agent policies behind a propose/feed interface
//! - [`sim`]: the round engine, its invariants and run traces
//! - [`baselines`]: independent agents and gossip UCB
//! - [`experiments`]: configuration, replication, aggregation, bounds, output

pub mod baselines;
pub mod cli;
pub mod envs;
pub mod experiments;
pub mod graph;
pub mod policies;
pub mod rng;
pub mod sim;
