pub mod adapt;
pub mod expr;
pub mod fem;
pub mod linsolve;
pub mod majorant;
pub mod mesh;
pub mod parabolic;
