//! Comparison algorithms: policy-only PPO and VPG, and a linear SVM
//! classifier fit on stored windows.

mod rl;
mod svm;

pub use rl::{train_rl_baseline, RlBaselineConfig, RlVariant};
pub use svm::{predict_svm, sgd_step, train_svm, SvmConfig, SvmModel, STD_FLOOR};
