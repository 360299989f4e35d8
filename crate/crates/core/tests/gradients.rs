mod common;

use common::gradcheck;
use common::FD_REL_TOL;

#[test]
fn matmul_gradient_of_sum() {
    let err = gradcheck::matmul();
    assert!(err < 1e-5, "{err}");
}

#[test]
fn matvec_and_transposed_matvec() {
    let err = gradcheck::matvec();
    assert!(err < FD_REL_TOL, "{err}");
}

#[test]
fn masked_softmax_gradient() {
    let err = gradcheck::masked_softmax();
    assert!(err < FD_REL_TOL, "{err}");
}

#[test]
fn layer_norm_gradient_n7() {
    let err = gradcheck::layer_norm();
    assert!(err < FD_REL_TOL, "{err}");
}

#[test]
fn blocked_layer_norm_gradient() {
    let err = gradcheck::blocked_layer_norm();
    assert!(err < FD_REL_TOL, "{err}");
}

#[test]
fn lstm_three_step_rollout_all_params() {
    let err = gradcheck::lstm_rollout();
    assert!(err < FD_REL_TOL, "{err}");
}

#[test]
fn elementwise_and_structural_ops() {
    let err = gradcheck::elementwise_and_structural();
    assert!(err < FD_REL_TOL, "{err}");
}

#[test]
fn dropout_with_fixed_mask_backpropagates_through_kept_units() {
    let err = gradcheck::fixed_mask_dropout();
    assert!(err < FD_REL_TOL, "{err}");
}

#[test]
fn attention_gradient_on_five_positions() {
    let err = gradcheck::attention();
    assert!(err < FD_REL_TOL, "{err}");
}

#[test]
fn full_joint_loss_hidden_8() {
    let c = gradcheck::joint_loss_hidden_8();
    assert!(c.worst < FD_REL_TOL, "{}: {}", c.worst_at, c.worst);
    assert!(c.checked > 1000);
}
