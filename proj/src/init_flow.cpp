#include "lfsep/init_flow.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace lfsep {

namespace {

cv::Mat to_mat(const Plane& p) {
  cv::Mat m(static_cast<int>(p.rows()), static_cast<int>(p.cols()), CV_64F);
  for (int r = 0; r < m.rows; ++r) std::memcpy(m.ptr<double>(r), p.row(r).data(), sizeof(double) * static_cast<std::size_t>(m.cols));
  return m;
}

Plane from_mat(const cv::Mat& m) {
  Plane p(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) std::memcpy(p.row(r).data(), m.ptr<double>(r), sizeof(double) * static_cast<std::size_t>(m.cols));
  return p;
}

std::vector<Plane> pyramid(const Plane& base, int levels) {
  std::vector<Plane> out{base};
  cv::Mat cur = to_mat(base);
  for (int l = 1; l < levels; ++l) {
    if (cur.rows < 8 || cur.cols < 8) break;
    cv::Mat down;
    cv::pyrDown(cur, down);
    out.push_back(from_mat(down));
    cur = down;
  }
  return out;
}

// Zero-mean patch of `img` centred at (r, c), clamped at borders.
struct Patch {
  std::vector<double> values;
  double norm = 0.0;
};

Patch extract(const Plane& img, int r, int c, int radius) {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  Patch p;
  p.values.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
  double mean = 0.0;
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) {
      const double v = img(std::clamp(r + dr, 0, h - 1), std::clamp(c + dc, 0, w - 1));
      p.values.push_back(v);
      mean += v;
    }
  }
  mean /= static_cast<double>(p.values.size());
  for (auto& v : p.values) {
    v -= mean;
    p.norm += v * v;
  }
  p.norm = std::sqrt(p.norm);
  return p;
}

double ncc(const Patch& a, const Patch& b) {
  if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) dot += a.values[k] * b.values[k];
  return dot / (a.norm * b.norm);
}

constexpr double kExactMatch = 1e-12;

double parabola_offset(double minus, double centre, double plus) {
  const double curvature = minus - 2.0 * centre + plus;
  if (curvature <= 1e-12) return 0.0;
  return std::clamp(0.5 * (minus - plus) / curvature, -0.5, 0.5);
}

FlowField match_level(const Plane& src, const Plane& ref, const FlowField& prior, int search,
                      const MatcherOptions& opt) {
  const int h = static_cast<int>(ref.rows());
  const int w = static_cast<int>(ref.cols());
  const double npix = static_cast<double>((2 * opt.patch_radius + 1) * (2 * opt.patch_radius + 1));
  FlowField out = FlowField::zeros(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Patch rp = extract(ref, r, c, opt.patch_radius);
      const double px = prior.wx(r, c);
      const double py = prior.wy(r, c);
      const bool textured = rp.norm / std::sqrt(npix) >= opt.min_patch_std;
      auto cost = [&](int ox, int oy) {
        const double data = textured ? 1.0 - ncc(rp, extract(src, r + oy, c + ox, opt.patch_radius)) : 1.0;
        return data + opt.smoothness * std::hypot(ox - px, oy - py);
      };
      const int cx = static_cast<int>(std::lround(px));
      const int cy = static_cast<int>(std::lround(py));
      int best_x = cx;
      int best_y = cy;
      double best = cost(cx, cy);
      for (int oy = cy - search; oy <= cy + search; ++oy) {
        for (int ox = cx - search; ox <= cx + search; ++ox) {
          const double v = cost(ox, oy);
          if (v < best) {
            best = v;
            best_x = ox;
            best_y = oy;
          }
        }
      }
      double fx = best_x;
      double fy = best_y;
      const double residual = best - opt.smoothness * std::hypot(best_x - px, best_y - py);
      if (textured && residual > kExactMatch) {
        fx += parabola_offset(cost(best_x - 1, best_y), best, cost(best_x + 1, best_y));
        fy += parabola_offset(cost(best_x, best_y - 1), best, cost(best_x, best_y + 1));
      }
      out.wx(r, c) = fx;
      out.wy(r, c) = fy;
    }
  }
  out.wx = median_filter3(out.wx);
  out.wy = median_filter3(out.wy);
  return out;
}

FlowField upsample(const FlowField& f, int height, int width) {
  FlowField out = FlowField::zeros(height, width);
  const double sy = static_cast<double>(f.height()) / height;
  const double sx = static_cast<double>(f.width()) / width;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int rr = std::min(static_cast<int>(r * sy), f.height() - 1);
      const int cc = std::min(static_cast<int>(c * sx), f.width() - 1);
      out.wx(r, c) = f.wx(rr, cc) / sx;
      out.wy(r, c) = f.wy(rr, cc) / sy;
    }
  }
  return out;
}

}  // namespace

Plane median_filter3(const Plane& in) {
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  Plane out(h, w);
  std::array<double, 9> buf{};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      std::size_t k = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) buf[k++] = in(std::clamp(r + dr, 0, h - 1), std::clamp(c + dc, 0, w - 1));
      }
      std::nth_element(buf.begin(), buf.begin() + 4, buf.end());
      out(r, c) = buf[4];
    }
  }
  return out;
}

FlowField dense_correspondence(const Plane& src, const Plane& ref, int radius, const MatcherOptions& options) {
  if (src.rows() != ref.rows() || src.cols() != ref.cols()) throw InputError("dense_correspondence: size mismatch");
  if (radius < 1) throw InputError("dense_correspondence: radius must be >= 1");
  if (radius >= std::min(ref.rows(), ref.cols())) throw InputError("dense_correspondence: radius exceeds image size");
  const auto src_pyr = pyramid(src, std::max(options.levels, 1));
  const auto ref_pyr = pyramid(ref, std::max(options.levels, 1));
  const int top = static_cast<int>(ref_pyr.size()) - 1;
  FlowField flow = FlowField::zeros(static_cast<int>(ref_pyr[static_cast<std::size_t>(top)].rows()),
                                    static_cast<int>(ref_pyr[static_cast<std::size_t>(top)].cols()));
  for (int level = top; level >= 0; --level) {
    const Plane& s = src_pyr[static_cast<std::size_t>(level)];
    const Plane& r = ref_pyr[static_cast<std::size_t>(level)];
    if (flow.height() != r.rows() || flow.width() != r.cols()) {
      flow = upsample(flow, static_cast<int>(r.rows()), static_cast<int>(r.cols()));
    }
    const int search = level == top ? std::max(1, static_cast<int>(std::ceil(radius / std::pow(2.0, level))))
                                    : options.refine_radius;
    flow = match_level(s, r, flow, search, options);
  }
  return flow;
}

DisparityMap initial_disparity(const std::vector<FlowField>& flows, const std::vector<GridOffset>& offsets) {
  if (flows.size() != offsets.size() || flows.empty()) throw InputError("initial_disparity: flows and offsets differ in count");
  if (std::none_of(offsets.begin(), offsets.end(), [](GridOffset o) { return !o.is_zero(); })) {
    throw InputError("initial_disparity: no contributing views");
  }
  const int h = flows.front().height();
  const int w = flows.front().width();
  for (const auto& f : flows) {
    if (f.height() != h || f.width() != w) throw InputError("initial_disparity: flow sizes differ");
  }
  Plane d = Plane::Zero(h, w);
  Mask have = Mask::Zero(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t i = 0; i < flows.size(); ++i) {
        const double wx = flows[i].wx(r, c);
        const double wy = flows[i].wy(r, c);
        const double along = wx * offsets[i].dcol + wy * offsets[i].drow;
        if (std::abs(along) < kDegenerateFlow) continue;
        sum += -(wx * wx + wy * wy) / along;
        ++count;
      }
      if (count > 0) {
        d(r, c) = sum / count;
        have(r, c) = 1;
      }
    }
  }
  // Fill holes from valid neighbours, growing inwards.
  for (int pass = 0; pass < h + w; ++pass) {
    bool changed = false;
    bool missing = false;
    Mask next = have;
    Plane filled = d;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (have(r, c)) continue;
        missing = true;
        std::vector<double> vals;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr;
            const int cc = c + dc;
            if (rr < 0 || cc < 0 || rr >= h || cc >= w || !have(rr, cc)) continue;
            vals.push_back(d(rr, cc));
          }
        }
        if (vals.empty()) continue;
        std::sort(vals.begin(), vals.end());
        const std::size_t m = vals.size();
        filled(r, c) = m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
        next(r, c) = 1;
        changed = true;
      }
    }
    d = filled;
    have = next;
    if (!missing || !changed) break;
  }
  return DisparityMap(d);
}

DisparityMap initial_disparity_from_flows(const std::vector<FlowField>& flows, const LightField& lf, double dmin,
                                          double dmax) {
  DisparityMap d = initial_disparity(flows, lf.offsets());
  d.values() = median_filter3(d.values()).cwiseMax(dmin).cwiseMin(dmax);
  return d;
}

DisparityMap estimate_initial_disparity(const LightField& lf, int radius, double dmin, double dmax) {
  const Plane ref = lf.reference().luma();
  std::vector<FlowField> flows;
  for (int i = 0; i < lf.view_count(); ++i) {
    if (i == lf.ref_index()) {
      flows.push_back(FlowField::zeros(lf.height(), lf.width()));
    } else {
      flows.push_back(dense_correspondence(lf.view(i).luma(), ref, radius));
    }
  }
  return initial_disparity_from_flows(flows, lf, dmin, dmax);
}

namespace {
constexpr float kFloTag = 202021.25f;
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open flow file " + path.string());
  float tag = 0.0f;
  std::int32_t width = 0;
  std::int32_t height = 0;
  in.read(reinterpret_cast<char*>(&tag), 4);
  in.read(reinterpret_cast<char*>(&width), 4);
  in.read(reinterpret_cast<char*>(&height), 4);
  if (!in || tag != kFloTag || width <= 0 || height <= 0) throw InputError("malformed .flo header in " + path.string());
  std::vector<float> raw(static_cast<std::size_t>(width) * height * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!in) throw InputError("truncated .flo file " + path.string());
  FlowField f = FlowField::zeros(height, width);
  std::size_t k = 0;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      f.wx(r, c) = raw[k++];
      f.wy(r, c) = raw[k++];
    }
  }
  return f;
}

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  const std::int32_t width = flow.width();
  const std::int32_t height = flow.height();
  out.write(reinterpret_cast<const char*>(&kFloTag), 4);
  out.write(reinterpret_cast<const char*>(&width), 4);
  out.write(reinterpret_cast<const char*>(&height), 4);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const float v[2] = {static_cast<float>(flow.wx(r, c)), static_cast<float>(flow.wy(r, c))};
      out.write(reinterpret_cast<const char*>(v), 8);
    }
  }
}

std::vector<FlowField> load_flow_dir(const std::filesystem::path& dir, int grid_size, int height, int width) {
  const int ref = (grid_size * grid_size - 1) / 2;
  std::vector<FlowField> flows;
  for (int i = 0; i < grid_size * grid_size; ++i) {
    if (i == ref) {
      flows.push_back(FlowField::zeros(height, width));
      continue;
    }
    const auto path = dir / ("flow_" + std::to_string(i / grid_size) + "_" + std::to_string(i % grid_size) + ".flo");
    if (!std::filesystem::exists(path)) throw InputError("missing flow file: " + path.string());
    FlowField f = read_flo(path);
    if (f.height() != height || f.width() != width) throw InputError("flow size mismatch: " + path.string());
    flows.push_back(std::move(f));
  }
  return flows;
}

}  // namespace lfsep
