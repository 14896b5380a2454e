//! Knowledge-graph Rooms environment with memory-augmented agents.
//!
//! - [`kg`]: interned symbols and qualified statements
//! - [`env`]: the partially observable Rooms simulator
//! - [`memory`]: short-term, episodic and semantic memory systems
//! - [`nn`]: LSTM/attention Q-networks with hand-written gradients
//! - [`agent`]: dueling double DQN training of the memory and exploration policies
//! - [`cli`]: config ingestion and data export behind the `rooms` binary

pub mod agent;
pub mod cli;
pub mod env;
pub mod kg;
pub mod memory;
pub mod nn;
