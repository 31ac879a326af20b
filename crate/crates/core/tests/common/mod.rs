#![allow(dead_code)]

pub mod cart;
pub mod dijkstra;
