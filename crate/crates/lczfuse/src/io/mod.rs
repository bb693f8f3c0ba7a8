pub mod matrix;
pub mod model;
pub mod raster;
pub mod report;
pub mod table;
