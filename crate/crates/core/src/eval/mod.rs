//! Classifier-based metrics: an FCN time-series classifier, a Fréchet
//! distance over its pooled features, and TSTR/TRTS/TRTR accuracies.

mod fcn;
mod fid;
mod protocol;
mod report;

pub use fcn::{fcn_network, softmax, train_fcn, FcnClassifier, FcnConfig, FCN_FEATURES};
pub use fid::{feature_moments, fid_1d, frechet_distance, FidReport, GaussianMoments, MomentSummary, FID_EPS, SYMMETRY_TOL};
pub use protocol::{train_real_classifier, trtr, trtr_with, trts, trts_with, tstr, ClassificationReport, Protocol, SyntheticPool};
pub use report::{load_metrics, render_table, save_metrics, MetricRecord, TableRow, TABLE_COLUMNS};
