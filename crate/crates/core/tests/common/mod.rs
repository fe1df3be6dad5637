#![allow(dead_code)]

pub mod delong;
pub mod texture;
