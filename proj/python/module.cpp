#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "gausskin/errors.hpp"
#include "gausskin/fixture.hpp"
#include "gausskin/gaussian_cloud.hpp"
#include "gausskin/image_io.hpp"
#include "gausskin/metrics.hpp"
#include "gausskin/raster.hpp"
#include "gausskin/rig.hpp"
#include "gausskin/sh.hpp"
#include "gausskin/skinning.hpp"
#include "gausskin/validate.hpp"

namespace py = pybind11;
using namespace gausskin;

namespace {

UnitQuaternion quat_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> q) {
    if (q.size() != 4) throw py::value_error("quaternion must have 4 entries (w, x, y, z)");
    const double* d = q.data();
    return UnitQuaternion::normalized(d[0], d[1], d[2], d[3]);
}

py::array_t<double> quat_to_array(const UnitQuaternion& q) {
    auto out = py::array_t<double>(py::array::ShapeContainer{4});
    double* d = out.mutable_data();
    d[0] = q.w;
    d[1] = q.x;
    d[2] = q.y;
    d[3] = q.z;
    return out;
}

Mat3 mat_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> m) {
    if (m.ndim() != 2 || m.shape(0) != 3 || m.shape(1) != 3)
        throw py::value_error("rotation matrix must be 3x3");
    Mat3 out;
    const double* d = m.data();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.m[i][j] = d[3 * i + j];
    return out;
}

py::array_t<double> mat_to_array(const Mat3& m) {
    auto out = py::array_t<double>({3, 3});
    double* d = out.mutable_data();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) d[3 * i + j] = m.m[i][j];
    return out;
}

ShCoefficients coeffs_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> c) {
    if (c.ndim() != 2 || c.shape(0) != 16 || c.shape(1) != 3)
        throw py::value_error("sh coefficients must be 16x3");
    ShCoefficients out;
    const double* d = c.data();
    for (int k = 0; k < 16; ++k)
        for (int ch = 0; ch < 3; ++ch) out.c[k][ch] = d[3 * k + ch];
    return out;
}

py::array_t<double> coeffs_to_array(const ShCoefficients& c) {
    auto out = py::array_t<double>({16, 3});
    double* d = out.mutable_data();
    for (int k = 0; k < 16; ++k)
        for (int ch = 0; ch < 3; ++ch) d[3 * k + ch] = c.c[k][ch];
    return out;
}

Vec3 vec_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> v) {
    if (v.size() != 3) throw py::value_error("expected a 3-vector");
    const double* d = v.data();
    return {d[0], d[1], d[2]};
}

FrameBuffer framebuffer_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> img) {
    if (img.ndim() != 3 || img.shape(2) != 3) throw py::value_error("image must be HxWx3");
    FrameBuffer fb(static_cast<int>(img.shape(1)), static_cast<int>(img.shape(0)));
    std::memcpy(fb.rgb.data(), img.data(), sizeof(double) * fb.rgb.size());
    return fb;
}

Pose pose_from_args(py::array_t<double, py::array::c_style | py::array::forcecast> rotations,
                    py::array_t<double, py::array::c_style | py::array::forcecast> root_translation) {
    if (rotations.ndim() != 2 || rotations.shape(1) != 4)
        throw py::value_error("pose rotations must be Jx4 (w, x, y, z)");
    Pose pose;
    const double* d = rotations.data();
    for (py::ssize_t j = 0; j < rotations.shape(0); ++j)
        pose.rotations.push_back(
            UnitQuaternion::normalized(d[4 * j], d[4 * j + 1], d[4 * j + 2], d[4 * j + 3]));
    pose.root_translation = vec_from_array(root_translation);
    return pose;
}

} // namespace

PYBIND11_MODULE(_gausskin, m) {
    m.doc() = "Complete skinning and CPU splatting for Gaussian avatars";

    py::register_exception<UsageError>(m, "GausskinUsageError", PyExc_ValueError);
    py::register_exception<IoError>(m, "GausskinIoError", PyExc_IOError);
    py::register_exception<DataError>(m, "GausskinDataError", PyExc_ValueError);

    py::class_<GaussianCloud>(m, "GaussianCloud")
        .def(py::init<>())
        .def("__len__", &GaussianCloud::size)
        .def_property_readonly("positions",
                               [](const GaussianCloud& c) {
                                   return py::array_t<float>(
                                       {py::ssize_t(c.size()), py::ssize_t(3)}, c.positions.data());
                               })
        .def_static("load", [](const std::string& path) { return ply_read(path); }, py::arg("path"))
        .def("save", [](const GaussianCloud& c, const std::string& path) { ply_write(c, path); },
             py::arg("path"));

    py::class_<Skeleton>(m, "Skeleton")
        .def_property_readonly("joint_count", &Skeleton::joint_count)
        .def_static("load", &load_rig, py::arg("path"))
        .def("save", [](const Skeleton& s, const std::string& path) { save_rig(s, path); },
             py::arg("path"));

    py::class_<SkinWeights>(m, "SkinWeights")
        .def("__len__", &SkinWeights::size)
        .def_static("load", &load_weights, py::arg("path"))
        .def("save", [](const SkinWeights& w, const std::string& path) { save_weights(w, path); },
             py::arg("path"));

    py::class_<Pose>(m, "Pose")
        .def_property_readonly("rotations",
                               [](const Pose& p) {
                                   auto out = py::array_t<double>(
                                       {py::ssize_t(p.rotations.size()), py::ssize_t(4)});
                                   double* d = out.mutable_data();
                                   for (std::size_t j = 0; j < p.rotations.size(); ++j) {
                                       d[4 * j] = p.rotations[j].w;
                                       d[4 * j + 1] = p.rotations[j].x;
                                       d[4 * j + 2] = p.rotations[j].y;
                                       d[4 * j + 3] = p.rotations[j].z;
                                   }
                                   return out;
                               })
        .def_readonly("time", &Pose::time);

    py::class_<AnimationClip>(m, "AnimationClip")
        .def_readonly("frame_rate", &AnimationClip::frame_rate)
        .def("__len__", [](const AnimationClip& c) { return c.frames.size(); })
        .def("frame", [](const AnimationClip& c, std::size_t i) { return c.frames.at(i); },
             py::arg("index"))
        .def_static("load", &load_clip, py::arg("path"))
        .def("save", [](const AnimationClip& c, const std::string& path) { save_clip(c, path); },
             py::arg("path"));

    py::class_<Camera>(m, "Camera")
        .def_readonly("width", &Camera::width)
        .def_readonly("height", &Camera::height)
        .def_static("load", &load_camera, py::arg("path"))
        .def("save", [](const Camera& c, const std::string& path) { save_camera(c, path); },
             py::arg("path"));

    py::class_<PosedCloud>(m, "PosedCloud")
        .def("__len__", &PosedCloud::size)
        .def_property_readonly("mean_abs_det_minus_one",
                               [](const PosedCloud& p) { return p.mean_abs_det_minus_one; })
        .def_property_readonly("positions",
                               [](const PosedCloud& p) {
                                   auto out = py::array_t<double>(
                                       {py::ssize_t(p.size()), py::ssize_t(3)});
                                   double* d = out.mutable_data();
                                   for (std::size_t i = 0; i < p.size(); ++i) {
                                       d[3 * i] = p.positions[i].x;
                                       d[3 * i + 1] = p.positions[i].y;
                                       d[3 * i + 2] = p.positions[i].z;
                                   }
                                   return out;
                               })
        .def_property_readonly("rotations",
                               [](const PosedCloud& p) {
                                   auto out = py::array_t<double>(
                                       {py::ssize_t(p.size()), py::ssize_t(4)});
                                   double* d = out.mutable_data();
                                   for (std::size_t i = 0; i < p.size(); ++i) {
                                       d[4 * i] = p.rotations[i].w;
                                       d[4 * i + 1] = p.rotations[i].x;
                                       d[4 * i + 2] = p.rotations[i].y;
                                       d[4 * i + 3] = p.rotations[i].z;
                                   }
                                   return out;
                               })
        .def("to_cloud", &posed_to_cloud);

    m.def("quat_to_matrix",
          [](py::array_t<double> q) { return mat_to_array(quat_to_matrix(quat_from_array(q)).m); },
          py::arg("q"));
    m.def("matrix_to_quat",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> r) {
              return quat_to_array(matrix_to_quat(mat_from_array(r)));
          },
          py::arg("r"));
    m.def("quat_compose",
          [](py::array_t<double> a, py::array_t<double> b) {
              return quat_to_array(quat_compose(quat_from_array(a), quat_from_array(b)));
          },
          py::arg("a"), py::arg("b"));
    m.def("angular_distance",
          [](py::array_t<double> a, py::array_t<double> b) {
              return angular_distance(quat_from_array(a), quat_from_array(b));
          },
          py::arg("a"), py::arg("b"));
    m.def("quat_average",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> bones,
             py::array_t<double, py::array::c_style | py::array::forcecast> weights,
             const std::string& solver, int iters) {
              if (bones.ndim() != 2 || bones.shape(1) != 4)
                  throw py::value_error("bones must be Jx4 quaternions");
              if (weights.ndim() != 1 || weights.shape(0) != bones.shape(0))
                  throw py::value_error("weights must match the bone count");
              std::vector<UnitQuaternion> qs;
              const double* d = bones.data();
              for (py::ssize_t j = 0; j < bones.shape(0); ++j)
                  qs.push_back(UnitQuaternion::normalized(d[4 * j], d[4 * j + 1], d[4 * j + 2],
                                                          d[4 * j + 3]));
              const std::span<const double> w{weights.data(), std::size_t(weights.shape(0))};
              const SymMatrix4 a = build_average_matrix(qs, w);
              if (solver == "exact") return quat_to_array(max_eigenvector_exact(a));
              if (solver == "power") {
                  std::size_t max_k = 0;
                  for (std::size_t k = 1; k < w.size(); ++k)
                      if (w[k] > w[max_k]) max_k = k;
                  return quat_to_array(max_eigenvector_power(a, qs[max_k], iters));
              }
              throw py::value_error("solver must be 'exact' or 'power'");
          },
          py::arg("bones"), py::arg("weights"), py::arg("solver") = "exact", py::arg("iters") = 15);

    m.def("sh_basis",
          [](py::array_t<double> dir) {
              const auto b = sh_basis(normalized(vec_from_array(dir)));
              auto out = py::array_t<double>(py::array::ShapeContainer{16});
              std::memcpy(out.mutable_data(), b.data(), 16 * sizeof(double));
              return out;
          },
          py::arg("direction"));
    m.def("sh_eval_color",
          [](py::array_t<double> coeffs, py::array_t<double> dir) {
              const Vec3 c = sh_eval_color(coeffs_from_array(coeffs), normalized(vec_from_array(dir)));
              auto out = py::array_t<double>(py::array::ShapeContainer{3});
              out.mutable_data()[0] = c.x;
              out.mutable_data()[1] = c.y;
              out.mutable_data()[2] = c.z;
              return out;
          },
          py::arg("coeffs"), py::arg("direction"));
    m.def("rotate_sh",
          [](py::array_t<double> coeffs, py::array_t<double> r) {
              return coeffs_to_array(
                  rotate_sh(coeffs_from_array(coeffs), RotationMatrix::checked(mat_from_array(r))));
          },
          py::arg("coeffs"), py::arg("r"));

    m.def("rest_pose", [](const Skeleton& s) { return Pose::rest(s.joint_count()); },
          py::arg("skeleton"));
    m.def("make_pose", &pose_from_args, py::arg("rotations"), py::arg("root_translation"));
    m.def("twist_pose", &make_twist_pose, py::arg("skeleton"), py::arg("degrees"));
    m.def("skinning_transforms",
          [](const Skeleton& s, const Pose& pose) {
              const auto transforms = skinning_transforms(s, pose);
              auto out = py::array_t<double>(
                  {py::ssize_t(transforms.size()), py::ssize_t(3), py::ssize_t(4)});
              double* d = out.mutable_data();
              for (std::size_t j = 0; j < transforms.size(); ++j) {
                  for (int r = 0; r < 3; ++r) {
                      for (int c = 0; c < 3; ++c) d[12 * j + 4 * r + c] = transforms[j].rotation.m[r][c];
                      const double t[3] = {transforms[j].translation.x, transforms[j].translation.y,
                                           transforms[j].translation.z};
                      d[12 * j + 4 * r + 3] = t[r];
                  }
              }
              return out;
          },
          py::arg("skeleton"), py::arg("pose"));

    m.def("skin",
          [](const GaussianCloud& cloud, const SkinWeights& weights, const Skeleton& skeleton,
             const Pose& pose, const std::string& mode, const std::string& solver, int iters,
             int workers) {
              const SolverConfig cfg = solver == "exact" ? SolverConfig::exact()
                                                         : SolverConfig::power(iters);
              return skin_cloud(cloud, weights, skeleton, pose, skinning_mode_from_string(mode),
                                cfg, workers);
          },
          py::arg("cloud"), py::arg("weights"), py::arg("skeleton"), py::arg("pose"),
          py::arg("mode") = "quat-avg", py::arg("solver") = "power", py::arg("iters") = 15,
          py::arg("workers") = 0);

    m.def("render",
          [](const PosedCloud& posed, const Camera& cam, int workers,
             std::array<double, 3> background) {
              const FrameBuffer fb =
                  render(posed, cam, workers, {background[0], background[1], background[2]});
              auto rgb = py::array_t<double>(
                  {py::ssize_t(fb.height), py::ssize_t(fb.width), py::ssize_t(3)}, fb.rgb.data());
              auto alpha = py::array_t<double>({py::ssize_t(fb.height), py::ssize_t(fb.width)},
                                               fb.alpha.data());
              return py::make_tuple(rgb, alpha);
          },
          py::arg("posed"), py::arg("camera"), py::arg("workers") = 0,
          py::arg("background") = std::array<double, 3>{0.0, 0.0, 0.0});

    m.def("psnr",
          [](py::array_t<double> a, py::array_t<double> b) {
              return psnr(framebuffer_from_array(a), framebuffer_from_array(b));
          },
          py::arg("a"), py::arg("b"));
    m.def("ssim",
          [](py::array_t<double> a, py::array_t<double> b) {
              return ssim(framebuffer_from_array(a), framebuffer_from_array(b));
          },
          py::arg("a"), py::arg("b"));

    m.def("make_test_rig",
          [](int bones, int gaussians_per_ring, int rings, std::uint64_t seed) {
              TestFixture fx = make_test_rig(bones, gaussians_per_ring, rings, seed);
              return py::make_tuple(std::move(fx.cloud), std::move(fx.skeleton),
                                    std::move(fx.weights));
          },
          py::arg("bones") = 3, py::arg("gaussians_per_ring") = 32, py::arg("rings") = 32,
          py::arg("seed") = 7);
    m.def("make_test_clip", &make_test_clip, py::arg("skeleton"), py::arg("frame_count") = 30,
          py::arg("frame_rate") = 30.0, py::arg("seed") = 7);
    m.def("make_fixture_camera", &make_fixture_camera, py::arg("skeleton"), py::arg("width") = 512,
          py::arg("height") = 512);
}
