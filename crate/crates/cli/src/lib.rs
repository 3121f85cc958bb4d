//! Scene-driven batch front-end for the potkit library.

pub mod output;
pub mod scene;
pub mod tasks;
pub mod verify;
