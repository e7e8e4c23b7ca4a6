//! Regression test selection and prioritization for product lines whose
//! requirements are use case specifications.
//!
//! The pipeline reads a product-line model ([`model::PLModel`]), configures
//! products from their decisions ([`configurator`]), diffs decisions
//! ([`decision`]), builds scenario graphs ([`scenario`]), links tests to
//! scenarios ([`traceability`]), classifies the tests of earlier products
//! ([`classifier`]), merges the results over the line ([`report`]) and
//! ranks the new suite by predicted failure ([`prioritizer`]).

pub mod classifier;
pub mod cli;
pub mod configurator;
pub mod decision;
pub mod diagram;
pub mod model;
pub mod prioritizer;
pub mod report;
pub mod rucm;
pub mod scenario;
pub mod synthetic;
pub mod traceability;
