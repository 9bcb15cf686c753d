"""Complete skinning and CPU splatting for Gaussian avatars."""

from ._gausskin import (
    AnimationClip,
    Camera,
    GaussianCloud,
    Pose,
    PosedCloud,
    Skeleton,
    SkinWeights,
    angular_distance,
    make_fixture_camera,
    make_pose,
    make_test_clip,
    make_test_rig,
    matrix_to_quat,
    psnr,
    quat_average,
    quat_compose,
    quat_to_matrix,
    render,
    rest_pose,
    rotate_sh,
    sh_basis,
    sh_eval_color,
    skin,
    skinning_transforms,
    ssim,
    twist_pose,
)

__all__ = [
    "AnimationClip",
    "Camera",
    "GaussianCloud",
    "Pose",
    "PosedCloud",
    "Skeleton",
    "SkinWeights",
    "angular_distance",
    "make_fixture_camera",
    "make_pose",
    "make_test_clip",
    "make_test_rig",
    "matrix_to_quat",
    "psnr",
    "quat_average",
    "quat_compose",
    "quat_to_matrix",
    "render",
    "rest_pose",
    "rotate_sh",
    "sh_basis",
    "sh_eval_color",
    "skin",
    "skinning_transforms",
    "ssim",
    "twist_pose",
]
