pub mod assets;
pub mod benchkit;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod layout;
pub mod postfx;
pub mod renderer;
pub mod rng;
pub mod state;
pub mod theory;
