#include "lfsep/cli.hpp"
#include "lfsep/init_flow.hpp"
#include "lfsep/metrics.hpp"
#include "lfsep/prox.hpp"
#include "lfsep/refocus.hpp"
#include "lfsep/solver.hpp"
#include "lfsep/synth.hpp"
#include "lfsep/warp.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace lfsep;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (h, w) or (h, w, c) arrays to planar images and back.
Image to_image(const Array& a) {
  if (a.ndim() == 2) {
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    return Image::from_plane(Eigen::Map<const Matrix>(a.data(), h, w));
  }
  if (a.ndim() != 3) throw InputError("images must be 2-D or 3-D arrays");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  const int c = static_cast<int>(a.shape(2));
  Image img(h, w, c);
  auto v = a.unchecked<3>();
  for (int k = 0; k < c; ++k)
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col) img(r, col, k) = v(r, col, k);
  return img;
}

Array from_image(const Image& img) {
  const int h = img.height(), w = img.width(), c = img.channel_count();
  if (c == 1) {
    Array out({h, w});
    Eigen::Map<Matrix>(out.mutable_data(), h, w) = img.channel(0);
    return out;
  }
  Array out({h, w, c});
  auto v = out.mutable_unchecked<3>();
  for (int k = 0; k < c; ++k)
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col) v(r, col, k) = img(r, col, k);
  return out;
}

// Light fields travel as (N, N, h, w[, c]) arrays.
LightField to_lightfield(const Array& a) {
  if (a.ndim() != 4 && a.ndim() != 5) throw InputError("light field must be an (N, N, h, w[, c]) array");
  if (a.shape(0) != a.shape(1)) throw InputError("light field grid must be square");
  const int n = static_cast<int>(a.shape(0));
  const py::ssize_t view_size = a.size() / (n * n);
  std::vector<Image> views;
  for (int i = 0; i < n * n; ++i) {
    std::vector<py::ssize_t> shape(a.shape() + 2, a.shape() + a.ndim());
    Array v(shape, a.data() + i * view_size);
    views.push_back(to_image(v));
  }
  return LightField(std::move(views), n);
}

Array from_lightfield(const LightField& lf) {
  const int n = lf.grid_size();
  std::vector<py::ssize_t> shape = {n, n, lf.height(), lf.width()};
  if (lf.channel_count() > 1) shape.push_back(lf.channel_count());
  Array out(shape);
  const py::ssize_t view_size = out.size() / (n * n);
  for (int i = 0; i < lf.view_count(); ++i) {
    const Array v = from_image(lf.view(i));
    std::copy(v.data(), v.data() + view_size, out.mutable_data() + i * view_size);
  }
  return out;
}

Matrix to_mask_matrix(const Mask& m) { return m.cast<double>(); }

synth::SyntheticSpec preset(const std::string& scene, double alpha, int size, int channels,
                            std::optional<std::uint64_t> seed) {
  synth::SyntheticSpec spec;
  if (scene == "planar") {
    spec = seed ? synth::planar_preset(alpha, *seed) : synth::planar_preset(alpha);
  } else if (scene == "two_plane") {
    spec = seed ? synth::two_plane_preset(alpha, *seed) : synth::two_plane_preset(alpha);
  } else {
    throw InputError("unknown scene: " + scene);
  }
  spec.height = spec.width = size;
  spec.channels = channels;
  spec.validate();
  return spec;
}

}  // namespace

PYBIND11_MODULE(_lfsep, m) {
  m.doc() = "Light-field layer separation with joint disparity refinement.";
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def("svt", py::overload_cast<const Matrix&, double>(&prox::svt), py::arg("m"), py::arg("tau"));
  m.def("soft_threshold", &prox::soft_threshold, py::arg("x"), py::arg("tau"));
  m.def("weighted_soft_threshold", &prox::weighted_soft_threshold, py::arg("x"), py::arg("tau"), py::arg("w"));
  m.def("project_nonneg", &prox::project_nonneg, py::arg("m"));

  m.def(
      "warp_view",
      [](const Array& view, const Matrix& d, int dcol, int drow) {
        const auto wv = warp_view(to_image(view), DisparityMap(d), GridOffset{dcol, drow});
        return py::make_tuple(from_image(wv.image), to_mask_matrix(wv.valid));
      },
      py::arg("view"), py::arg("d"), py::arg("dcol"), py::arg("drow"),
      "Backward bilinear warp view(p - d(p) * (dcol, drow)); returns (image, valid).");
  m.def("gradient", &gradient, py::arg("x"), py::arg("height"), py::arg("width"));

  m.def(
      "render",
      [](const std::string& scene, double alpha, int size, int channels, std::optional<std::uint64_t> seed) {
        const auto inst = synth::render(preset(scene, alpha, size, channels, seed));
        py::dict out;
        out["views"] = from_lightfield(inst.lf);
        out["T"] = from_image(inst.truth.transmitted);
        out["S"] = from_image(inst.truth.secondary);
        out["d"] = inst.truth.disparity.values();
        out["alpha"] = inst.truth.alpha;
        return out;
      },
      py::arg("scene") = "two_plane", py::arg("alpha") = 0.2, py::arg("size") = 64, py::arg("channels") = 1,
      py::arg("seed") = py::none());

  m.def(
      "load_lightfield", [](const std::string& dir) { return from_lightfield(load_lightfield(dir)); },
      py::arg("directory"));
  m.def(
      "save_lightfield",
      [](const Array& views, const std::string& dir) { save_lightfield(to_lightfield(views), dir); },
      py::arg("views"), py::arg("directory"));

  m.def(
      "initial_disparity",
      [](const Array& views, int radius, double dmin, double dmax) {
        return estimate_initial_disparity(to_lightfield(views), radius, dmin, dmax).values();
      },
      py::arg("views"), py::arg("radius") = 4, py::arg("dmin") = -8.0, py::arg("dmax") = 8.0);

  m.def(
      "default_config", []() { return config_to_json(SolverConfig{}); },
      "Default solver configuration as JSON text.");
  m.def(
      "separate",
      [](const Array& views, const Matrix& d0, const std::string& config_json) {
        const SolverConfig cfg = config_json.empty() ? SolverConfig{} : config_from_json(config_json);
        const LightField lf = to_lightfield(views);
        SeparationResult r;
        {
          py::gil_scoped_release release;
          r = separate(lf, DisparityMap(d0), cfg);
        }
        py::dict out;
        out["T"] = from_image(r.transmitted);
        out["S"] = from_image(r.secondary);
        out["d"] = r.disparity.values();
        out["valid"] = to_mask_matrix(r.valid);
        out["objective_history"] = r.objective_history;
        out["converged"] = r.converged;
        out["stop_reason"] = to_string(r.reason);
        out["outer_iterations"] = r.outer_iterations;
        out["inner_iterations"] = r.inner_iterations;
        out["feasibility"] = r.final_feasibility;
        out["feasibility_bound"] = r.feasibility_bound;
        return out;
      },
      py::arg("views"), py::arg("d0"), py::arg("config_json") = "");

  m.def(
      "evaluate",
      [](const Array& t, const Array& s, const Matrix& d, const Array& t_true, const Array& s_true,
         const Matrix& d_true, std::optional<Matrix> mask) {
        Mask mk;
        if (mask) mk = (mask->array() > 0.5).cast<std::uint8_t>();
        const auto rep = metrics::evaluate(to_image(t), to_image(s), d, to_image(t_true), to_image(s_true), d_true,
                                           mask ? &mk : nullptr);
        py::dict out;
        out["incorrect_pixel_pct_T"] = rep.incorrect_pixel_pct_T;
        out["incorrect_pixel_pct_S"] = rep.incorrect_pixel_pct_S;
        out["psnr_T"] = rep.psnr_T;
        out["psnr_S"] = rep.psnr_S;
        out["bad_pixel_pct_d"] = rep.bad_pixel_pct_d;
        out["mean_abs_err_d"] = rep.mean_abs_err_d;
        out["evaluated_pixels"] = rep.evaluated_pixels;
        return out;
      },
      py::arg("T"), py::arg("S"), py::arg("d"), py::arg("T_true"), py::arg("S_true"), py::arg("d_true"),
      py::arg("mask") = py::none());

  m.def(
      "refocus",
      [](const Array& image, const Matrix& d, double focal, double aperture) {
        return from_image(refocus(to_image(image), DisparityMap(d), {focal, aperture}));
      },
      py::arg("image"), py::arg("d"), py::arg("focal"), py::arg("aperture") = 1.0);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "lfsep");
        py::gil_scoped_release release;
        return cli::run(args);
      },
      py::arg("args"), "Runs the command-line tool in-process and returns its exit code.");
}
