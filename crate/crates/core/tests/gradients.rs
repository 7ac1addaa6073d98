mod common;

use common::{check_network, check_probe_loss};

#[test]
fn dense_relu_mlp() {
    let err = check_network("6", "dense:8 relu dense:5 relu", 4, 5, 1);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn conv_with_padding_and_stride() {
    let err = check_network("2x7x7", "conv:3:3:2:1 relu conv:2:3:1:1", 3, 3, 2);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn max_pool_routing() {
    let err = check_network("1x6x6", "conv:2:3:1:1 maxpool:2 relu flatten dense:4 relu", 3, 3, 3);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn overlapping_pool_windows() {
    let err = check_network("2x5x5", "maxpool:3:1 conv:2:2", 2, 2, 4);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn probe_loss() {
    let err = check_probe_loss(10, 8, 4, 1e-2, 5);
    assert!(err < 1e-4, "{err}");
}
