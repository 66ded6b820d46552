pub mod einstein;
pub mod grassmann;
pub mod scalar;
pub mod singular;
pub mod stage;
pub mod suite;
pub mod supercurve;
pub mod supersheaf;
pub mod symalg;
