pub mod api;
pub mod datasets;
pub mod error;
pub mod pipeline;
pub mod store;

pub use api::{router, AppState};
pub use datasets::Datasets;
pub use error::{ApiError, ErrorBody};
pub use store::{InterfaceVersion, VersionStore};
