pub mod geometry;
pub mod obstacles;
pub mod social;
pub mod auction;
pub mod sim;
pub mod cli;
