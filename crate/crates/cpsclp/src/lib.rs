pub mod benders;
pub mod instance;
pub mod lp;
pub mod mip;
pub mod model;
pub mod oracle;
