#include "lfsep/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace lfsep::metrics {

namespace {

void check_mask(const Mask* mask, Eigen::Index rows, Eigen::Index cols) {
  if (mask && (mask->rows() != rows || mask->cols() != cols)) throw InputError("metrics: mask size mismatch");
}

bool counted(const Mask* mask, Eigen::Index k) { return !mask || mask->data()[k] != 0; }

// Per-pixel largest absolute channel error.
Plane max_channel_error(const Image& a, const Image& b) {
  if (a.height() != b.height() || a.width() != b.width()) throw InputError("metrics: dimension mismatch");
  if (a.channel_count() != b.channel_count()) return (a.luma() - b.luma()).cwiseAbs();
  Plane err = Plane::Zero(a.height(), a.width());
  for (int c = 0; c < a.channel_count(); ++c) err = err.cwiseMax((a.channel(c) - b.channel(c)).cwiseAbs());
  return err;
}

}  // namespace

double incorrect_pixel_pct(const Image& recovered, const Image& truth, double thresh, const Mask* mask) {
  const Plane err = max_channel_error(recovered, truth);
  check_mask(mask, err.rows(), err.cols());
  Eigen::Index total = 0;
  Eigen::Index bad = 0;
  for (Eigen::Index k = 0; k < err.size(); ++k) {
    if (!counted(mask, k)) continue;
    ++total;
    if (err.data()[k] > thresh) ++bad;
  }
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(bad) / static_cast<double>(total);
}

double bad_pixel_pct(const Plane& d, const Plane& d_true, double delta, const Mask* mask) {
  if (d.rows() != d_true.rows() || d.cols() != d_true.cols()) throw InputError("metrics: disparity size mismatch");
  check_mask(mask, d.rows(), d.cols());
  Eigen::Index total = 0;
  Eigen::Index bad = 0;
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (!counted(mask, k)) continue;
    ++total;
    if (std::abs(d.data()[k] - d_true.data()[k]) > delta) ++bad;
  }
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(bad) / static_cast<double>(total);
}

double mean_abs_error(const Plane& d, const Plane& d_true, const Mask* mask) {
  if (d.rows() != d_true.rows() || d.cols() != d_true.cols()) throw InputError("metrics: disparity size mismatch");
  check_mask(mask, d.rows(), d.cols());
  double sum = 0.0;
  Eigen::Index total = 0;
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (!counted(mask, k)) continue;
    ++total;
    sum += std::abs(d.data()[k] - d_true.data()[k]);
  }
  return total == 0 ? 0.0 : sum / static_cast<double>(total);
}

double psnr(const Image& recovered, const Image& truth, const Mask* mask) {
  if (!recovered.same_shape(truth)) throw InputError("metrics: dimension mismatch");
  check_mask(mask, truth.height(), truth.width());
  double sq = 0.0;
  Eigen::Index total = 0;
  for (int c = 0; c < truth.channel_count(); ++c) {
    const Plane& a = recovered.channel(c);
    const Plane& b = truth.channel(c);
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      if (!counted(mask, k)) continue;
      const double e = a.data()[k] - b.data()[k];
      sq += e * e;
      ++total;
    }
  }
  if (total == 0 || sq == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / (sq / static_cast<double>(total)));
}

EvalReport evaluate(const Image& t, const Image& s, const Plane& d, const Image& t_true, const Image& s_true,
                    const Plane& d_true, const Mask* mask, double thresh, double delta) {
  EvalReport r;
  r.threshold = thresh;
  r.delta_d = delta;
  r.incorrect_pixel_pct_T = incorrect_pixel_pct(t, t_true, thresh, mask);
  r.incorrect_pixel_pct_S = incorrect_pixel_pct(s, s_true, thresh, mask);
  if (t.same_shape(t_true)) r.psnr_T = psnr(t, t_true, mask);
  if (s.same_shape(s_true)) r.psnr_S = psnr(s, s_true, mask);
  r.bad_pixel_pct_d = bad_pixel_pct(d, d_true, delta, mask);
  r.mean_abs_err_d = mean_abs_error(d, d_true, mask);
  r.evaluated_pixels = mask ? static_cast<int>((mask->array() != 0).count()) : static_cast<int>(d.size());
  return r;
}

std::string to_json(const EvalReport& r) {
  auto finite_or_inf = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(v > 0 ? "inf" : "-inf");
  };
  nlohmann::json j = {{"incorrect_pixel_pct_T", r.incorrect_pixel_pct_T},
                      {"incorrect_pixel_pct_S", r.incorrect_pixel_pct_S},
                      {"psnr_T", finite_or_inf(r.psnr_T)},
                      {"psnr_S", finite_or_inf(r.psnr_S)},
                      {"bad_pixel_pct_d", r.bad_pixel_pct_d},
                      {"mean_abs_err_d", r.mean_abs_err_d},
                      {"threshold", r.threshold},
                      {"delta_d", r.delta_d},
                      {"evaluated_pixels", r.evaluated_pixels}};
  return j.dump(2);
}

std::string csv_header() {
  return "incorrect_pct_T,incorrect_pct_S,psnr_T,psnr_S,bad_pixel_pct_d,mean_abs_err_d";
}

std::string csv_row(const EvalReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << r.incorrect_pixel_pct_T << ',' << r.incorrect_pixel_pct_S << ',' << r.psnr_T << ',' << r.psnr_S << ','
      << r.bad_pixel_pct_d << ',' << r.mean_abs_err_d;
  return out.str();
}

}  // namespace lfsep::metrics
