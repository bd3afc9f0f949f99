pub mod aggregate;
pub mod classify;
pub mod geolocate;
pub mod ingest;
pub mod policyindex;
pub mod report;
pub mod stats;
pub mod textprep;
