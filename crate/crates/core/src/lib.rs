//! Core of artlens: label taxonomy, box geometry and detection metrics,
//! collection ingestion, subset curation and crop extraction, the catalog
//! store, canvas composition and session analytics.

pub mod canvas;
pub mod catalog;
pub mod curation;
pub mod explore;
pub mod geometry;
pub mod ingestion;
pub mod metrics;
pub mod taxonomy;
