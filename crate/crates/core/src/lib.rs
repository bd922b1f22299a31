pub mod action_lang;
pub mod transition;
pub mod planner;
pub mod rl;
pub mod envs;
pub mod feedback;
pub mod harness;
