pub mod asm;
pub mod bench;
pub mod config;
pub mod cpu;
pub mod image;
pub mod isa;
pub mod mem;
pub mod vector;
