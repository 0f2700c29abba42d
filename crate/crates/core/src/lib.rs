pub mod gfunc;
pub mod interpret;
pub mod io;
mod par;
pub mod pursuit;

pub use par::parallel_available;
