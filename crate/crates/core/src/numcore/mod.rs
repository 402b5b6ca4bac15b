//! Dense linear algebra and softmax MLP policies.

pub mod linalg;
pub mod mlp;

pub use linalg::{dot, norm, regularized_solve, regularized_solve_cg, DenseMatrix, Lu, ParamVector};
pub use mlp::{
    log_prob, log_prob_grad, log_prob_hessian, log_prob_hvp, log_softmax, mlp_forward, sample_categorical, softmax,
    Activation, CurvaturePoint, MlpSpec, Policy,
};
