pub mod compress;
pub mod decompress;
pub mod evaluate;
pub mod extract;
pub mod plot;
pub mod sweep;
pub mod synth;
