//! Repository activity: monthly feature rows, fixtures and API collection.

mod collect;
mod fixture;
mod model;

pub use collect::{
    cache_page_path, cache_pull_path, cache_root, collect, collect_with, Backoff, CollectionSpec,
    HttpResponse, ReqwestTransport, Transport, DEFAULT_API_BASE, TOKEN_ENV,
};
pub use fixture::{from_fixture, parse_fixture, write_fixture};
pub use model::{month_end_of, next_month_end, MonthlyActivity, ACTIVITY_FEATURES};
