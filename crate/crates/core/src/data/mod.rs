pub mod assets;
pub mod io;
pub mod responses;
pub mod synthetic;
