#include "lfsep/cli.hpp"

#include "lfsep/init_flow.hpp"
#include "lfsep/metrics.hpp"
#include "lfsep/refocus.hpp"
#include "lfsep/solver.hpp"
#include "lfsep/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <opencv2/core/version.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <spdlog/version.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#ifndef LFSEP_VERSION
#define LFSEP_VERSION "0.0.0"
#endif

namespace lfsep::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::string out_dir;
  std::string flows_dir;
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::shared_ptr<spdlog::logger> make_logger(const std::string& name, const Globals& g,
                                            const std::optional<fs::path>& file = std::nullopt) {
  std::vector<spdlog::sink_ptr> sinks{std::make_shared<spdlog::sinks::stderr_color_sink_mt>()};
  if (file) {
    auto fsink = std::make_shared<spdlog::sinks::basic_file_sink_mt>(file->string(), true);
    fsink->set_pattern("[%l] %v");
    fsink->set_level(spdlog::level::debug);
    sinks.push_back(fsink);
  }
  auto logger = std::make_shared<spdlog::logger>(name, sinks.begin(), sinks.end());
  sinks.front()->set_level(spdlog::level::from_str(g.log_level));
  logger->set_level(spdlog::level::debug);
  return logger;
}

SolverConfig load_config(const Globals& g) {
  return g.config_path.empty() ? SolverConfig{} : load_solver_config(g.config_path);
}

// Hash over every regular file of a directory (non-recursive), in name order.
std::string hash_directory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    all += f.filename().string();
    all.push_back('\0');
    all += sha256_hex(read_file(f));
  }
  return sha256_hex(all);
}

nlohmann::json versions() {
  return {{"lfsep", LFSEP_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"opencv", CV_VERSION},
          {"spdlog", std::to_string(SPDLOG_VER_MAJOR) + "." + std::to_string(SPDLOG_VER_MINOR) + "." +
                         std::to_string(SPDLOG_VER_PATCH)}};
}

void write_run_json(const fs::path& out, const std::string& mode, const std::string& config_text,
                    const std::string& input_hash, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json j = {{"mode", mode},
                      {"config_hash", sha256_hex(config_text)},
                      {"input_hash", input_hash},
                      {"versions", versions()}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_text(out / "run.json", j.dump(2) + "\n");
}

Image mask_image(const Mask& m) {
  return Image::from_plane(m.cast<double>());
}

struct SeparateOptions {
  int radius = 4;
  std::string d0_path;
  std::optional<DisparityMap> warm_start;
};

struct SeparateOutcome {
  SeparationResult result;
  int exit_code = kOk;
};

// Full separation of one light-field directory into `out`.
SeparateOutcome separate_dir(const fs::path& in, const fs::path& out, const Globals& g, const SeparateOptions& o) {
  fs::create_directories(out);
  auto log = make_logger("separate", g, out / "diagnostics.log");
  const SolverConfig config = load_config(g);
  config.validate();
  const LightField lf = load_lightfield(in);
  log->info("loaded {} views of {}x{} ({} channels) from {}", lf.view_count(), lf.height(), lf.width(),
            lf.channel_count(), in.string());

  DisparityMap d0;
  std::string init;
  if (o.warm_start) {
    d0 = *o.warm_start;
    if (d0.height() != lf.height() || d0.width() != lf.width()) throw InputError("warm-start disparity size mismatch");
    d0.values() = d0.values().cwiseMax(config.dmin).cwiseMin(config.dmax);
    init = "warm start";
    log->info("initial disparity: warm start from previous frame");
  } else if (!o.d0_path.empty()) {
    d0 = read_disparity(o.d0_path);
    d0.values() = d0.values().cwiseMax(config.dmin).cwiseMin(config.dmax);
    init = "file " + o.d0_path;
    log->info("initial disparity read from {}", o.d0_path);
  } else if (!g.flows_dir.empty()) {
    const auto flows = load_flow_dir(g.flows_dir, lf.grid_size(), lf.height(), lf.width());
    d0 = initial_disparity_from_flows(flows, lf, config.dmin, config.dmax);
    init = "flows " + g.flows_dir;
    log->info("flows loaded from {}; matcher skipped", g.flows_dir);
  } else {
    d0 = estimate_initial_disparity(lf, o.radius, config.dmin, config.dmax);
    init = "matcher radius " + std::to_string(o.radius);
    log->info("initial disparity from built-in matcher (radius {})", o.radius);
  }

  std::string csv = "outer,inner,objective,feasibility,mu\n";
  SeparateOutcome outcome;
  outcome.result = separate(lf, d0, config, [&](const InnerDiagnostics& d) {
    csv += std::to_string(d.outer) + "," + std::to_string(d.inner) + "," + format_double(d.objective) + "," +
           format_double(d.feasibility) + "," + format_double(d.mu) + "\n";
    log->debug("outer {} inner {} objective {:.6g} feasibility {:.3e} mu {:.3e}", d.outer, d.inner, d.objective,
               d.feasibility, d.mu);
  });
  const SeparationResult& r = outcome.result;
  write_text(out / "objective.csv", csv);
  write_png(r.transmitted, out / "T_ref.png", 16);
  write_png(r.secondary, out / "S_ref.png", 16);
  write_disparity(r.disparity, out / "d.pfm");
  write_png(mask_image(r.valid), out / "valid_mask.png");

  for (std::size_t k = 0; k < r.objective_history.size(); ++k) {
    log->info("outer {} objective {:.9g}", k + 1, r.objective_history[k]);
  }
  log->info("stop: {} after {} outer / {} inner iterations; feasibility {:.3e} (bound {:.3e})", to_string(r.reason),
            r.outer_iterations, r.inner_iterations, r.final_feasibility, r.feasibility_bound);
  outcome.exit_code = r.converged ? kOk : kNotConverged;
  if (!r.converged) log->warn("did not converge ({})", to_string(r.reason));

  const std::string config_text = config_to_json(config) + "\ninit: " + init;
  write_run_json(out, "separate", config_text, hash_directory(in),
                 {{"input", in.string()},
                  {"init", init},
                  {"stop_reason", to_string(r.reason)},
                  {"outer_iterations", r.outer_iterations},
                  {"inner_iterations", r.inner_iterations}});
  log->flush();
  return outcome;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_alphas(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("bad alpha value '" + item + "'");
    }
  }
  return out;
}

synth::SyntheticSpec scene_spec(const std::string& scene, double alpha, const std::optional<std::uint64_t>& seed) {
  synth::SyntheticSpec spec;
  if (scene == "planar") {
    spec = synth::planar_preset(alpha);
  } else if (scene == "two_plane") {
    spec = synth::two_plane_preset(alpha);
  } else {
    throw InputError("unknown scene '" + scene + "' (expected planar or two_plane)");
  }
  if (seed) spec.seed = *seed;
  return spec;
}

// Pure-disparity flows implied by the ground-truth map: w_i = -d phi_i.
void write_true_flows(const DisparityMap& d, int grid_size, const fs::path& dir) {
  fs::create_directories(dir);
  const auto offsets = grid_offsets(grid_size);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (offsets[i].is_zero()) continue;
    const FlowField f{-offsets[i].dcol * d.values(), -offsets[i].drow * d.values()};
    const int n = grid_size;
    write_flo(f, dir / ("flow_" + std::to_string(static_cast<int>(i) / n) + "_" + std::to_string(static_cast<int>(i) % n) + ".flo"));
  }
}

void plot_sweep(const std::vector<double>& alphas, const std::vector<double>& t, const std::vector<double>& s,
                const fs::path& path) {
  const int w = 480, h = 320, left = 50, right = 20, top = 20, bottom = 40;
  cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
  const double amax = std::max(0.5, *std::max_element(alphas.begin(), alphas.end()));
  auto px = [&](double a) { return left + static_cast<int>(std::lround(a / amax * (w - left - right))); };
  auto py = [&](double p) { return h - bottom - static_cast<int>(std::lround(std::clamp(p, 0.0, 100.0) / 100.0 * (h - top - bottom))); };
  const cv::Scalar grey(200, 200, 200), black(0, 0, 0);
  for (int p = 0; p <= 100; p += 20) {
    cv::line(img, {left, py(p)}, {w - right, py(p)}, grey);
    cv::putText(img, std::to_string(p), {5, py(p) + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.35, black);
  }
  for (int k = 0; k <= 5; ++k) {
    const double a = amax * k / 5.0;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", a);
    cv::putText(img, buf, {px(a) - 12, h - bottom + 15}, cv::FONT_HERSHEY_SIMPLEX, 0.35, black);
  }
  cv::line(img, {left, h - bottom}, {w - right, h - bottom}, black);
  cv::line(img, {left, top}, {left, h - bottom}, black);
  cv::putText(img, "alpha", {w / 2 - 15, h - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.4, black);
  cv::putText(img, "incorrect %", {left + 5, top + 10}, cv::FONT_HERSHEY_SIMPLEX, 0.4, black);
  auto series = [&](const std::vector<double>& v, const cv::Scalar& colour) {
    std::optional<cv::Point> prev;
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      if (!std::isfinite(v[k])) {
        prev.reset();
        continue;
      }
      const cv::Point p(px(alphas[k]), py(v[k]));
      cv::circle(img, p, 3, colour, cv::FILLED);
      if (prev) cv::line(img, *prev, p, colour, 2);
      prev = p;
    }
  };
  series(t, cv::Scalar(200, 80, 0));
  series(s, cv::Scalar(0, 80, 200));
  cv::putText(img, "T", {w - right - 40, top + 10}, cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(200, 80, 0));
  cv::putText(img, "S", {w - right - 20, top + 10}, cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(0, 80, 200));
  if (!cv::imwrite(path.string(), img)) throw InputError("cannot write " + path.string());
}

// ---- subcommands ----------------------------------------------------------

struct SynthArgs {
  std::string scene = "two_plane";
  double alpha = 0.2;
  std::string spec_path;
  int size = 64;
  int channels = 1;
  int grid = 3;
  int frames = 0;
  double motion = 2.0;
  bool write_flows = false;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  if (g.out_dir.empty()) throw InputError("synth needs --out");
  auto log = make_logger("synth", g);
  synth::SyntheticSpec spec;
  if (!a.spec_path.empty()) {
    spec = synth::spec_from_json(read_file(a.spec_path));
    if (g.seed) spec.seed = *g.seed;
  } else {
    spec = scene_spec(a.scene, a.alpha, g.seed);
    spec.height = spec.width = a.size;
    spec.channels = a.channels;
    spec.grid_size = a.grid;
  }
  spec.validate();
  const fs::path out = g.out_dir;
  auto emit = [&](const synth::SyntheticSpec& s, const fs::path& dir) {
    const auto inst = synth::render(s);
    synth::write_instance(inst, s, dir);
    if (a.write_flows) write_true_flows(inst.truth.disparity, s.grid_size, dir / "flows");
    write_run_json(dir, "synth", synth::spec_to_json(s), sha256_hex(synth::spec_to_json(s)));
  };
  if (a.frames <= 0) {
    emit(spec, out);
    log->info("wrote {}x{} light field (alpha {}) to {}", spec.height, spec.width, spec.alpha, out.string());
    return kOk;
  }
  for (int k = 0; k < a.frames; ++k) {
    synth::SyntheticSpec s = spec;
    s.secondary_offset_x += a.motion * k;
    emit(s, out / ("frame_" + std::to_string(k)));
  }
  log->info("wrote {} frames to {}", a.frames, out.string());
  return kOk;
}

int cmd_separate(const Globals& g, const std::string& input, const SeparateOptions& o) {
  const fs::path out = g.out_dir.empty() ? fs::path(input) / "out" : fs::path(g.out_dir);
  return separate_dir(input, out, g, o).exit_code;
}

int cmd_eval(const Globals& g, const std::string& result_dir, const std::string& gt_dir, bool csv) {
  const fs::path rd = result_dir;
  const Image t = read_png(rd / "T_ref.png");
  const Image s = read_png(rd / "S_ref.png");
  const DisparityMap d = read_disparity(rd / "d.pfm");
  const synth::GroundTruth gt = synth::read_ground_truth(gt_dir);
  std::optional<Mask> mask;
  if (fs::exists(rd / "valid_mask.png")) {
    mask = (read_png(rd / "valid_mask.png").channel(0).array() > 0.5).cast<std::uint8_t>();
  }
  const auto rep = metrics::evaluate(t, s, d.values(), gt.transmitted, gt.secondary, gt.disparity.values(),
                                     mask ? &*mask : nullptr);
  const std::string js = metrics::to_json(rep);
  std::printf("%s\n", js.c_str());
  const fs::path out = g.out_dir.empty() ? rd : fs::path(g.out_dir);
  fs::create_directories(out);
  write_text(out / "eval.json", js + "\n");
  if (csv) write_text(out / "eval.csv", metrics::csv_header() + "\n" + metrics::csv_row(rep) + "\n");
  return kOk;
}

struct SweepArgs {
  std::string alphas;
  std::string scene = "two_plane";
  int size = 64;
  int radius = 4;
};

int cmd_sweep(const Globals& g, const SweepArgs& a) {
  auto log = make_logger("sweep", g);
  const std::vector<double> alphas = parse_alphas(a.alphas);
  if (alphas.empty()) throw InputError("sweep needs at least one alpha");
  const fs::path out = g.out_dir.empty() ? fs::path("sweep_out") : fs::path(g.out_dir);
  fs::create_directories(out);
  const SolverConfig config = load_config(g);
  config.validate();

  std::string csv = "alpha,incorrect_pct_T,incorrect_pct_S,bad_pixel_pct_d,psnr_T,psnr_S,mean_abs_err_d,stop_reason,status\n";
  std::vector<double> pt, ps;
  int ok = 0;
  for (double alpha : alphas) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
      auto spec = scene_spec(a.scene, alpha, g.seed);
      spec.height = spec.width = a.size;
      const auto inst = synth::render(spec);
      const DisparityMap d0 = estimate_initial_disparity(inst.lf, a.radius, config.dmin, config.dmax);
      const auto r = separate(inst.lf, d0, config);
      const auto rep = metrics::evaluate(r.transmitted, r.secondary, r.disparity.values(), inst.truth.transmitted,
                                         inst.truth.secondary, inst.truth.disparity.values(), &r.valid);
      csv += format_double(alpha) + "," + format_double(rep.incorrect_pixel_pct_T) + "," +
             format_double(rep.incorrect_pixel_pct_S) + "," + format_double(rep.bad_pixel_pct_d) + "," +
             format_double(rep.psnr_T) + "," + format_double(rep.psnr_S) + "," + format_double(rep.mean_abs_err_d) +
             "," + to_string(r.reason) + ",ok\n";
      pt.push_back(rep.incorrect_pixel_pct_T);
      ps.push_back(rep.incorrect_pixel_pct_S);
      ++ok;
      log->info("alpha {}: incorrect T {:.2f}% S {:.2f}%, bad d {:.2f}%", alpha, rep.incorrect_pixel_pct_T,
                rep.incorrect_pixel_pct_S, rep.bad_pixel_pct_d);
    } catch (const std::exception& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      csv += format_double(alpha) + ",nan,nan,nan,nan,nan,nan,none,failed: " + msg + "\n";
      pt.push_back(nan);
      ps.push_back(nan);
      log->warn("alpha {} failed: {}", alpha, e.what());
    }
  }
  write_text(out / "sweep.csv", csv);
  plot_sweep(alphas, pt, ps, out / "sweep.png");
  write_run_json(out, "sweep", config_to_json(config) + "\nscene: " + a.scene + " size " + std::to_string(a.size),
                 sha256_hex(a.alphas), {{"rows_ok", ok}, {"rows", alphas.size()}});
  return ok > 0 ? kOk : kInputError;
}

int cmd_refocus(const Globals& g, const std::string& result_dir, double focal, double aperture) {
  if (!(aperture > 0.0)) throw InputError("--aperture must be positive");
  const fs::path rd = result_dir;
  const Image t = read_png(rd / "T_ref.png");
  const DisparityMap d = read_disparity(rd / "d.pfm");
  if (d.height() != t.height() || d.width() != t.width()) throw InputError("d.pfm does not match T_ref.png");
  const fs::path out = g.out_dir.empty() ? rd : fs::path(g.out_dir);
  fs::create_directories(out);
  write_png(refocus(t, d, {focal, aperture}), out / "refocused.png", 16);
  return kOk;
}

int cmd_video(const Globals& g, const std::string& seq, const SeparateOptions& base, bool cold) {
  auto log = make_logger("video", g);
  const fs::path root = seq;
  if (!fs::is_directory(root)) throw InputError("not a directory: " + root.string());
  std::map<int, fs::path> frames;
  for (const auto& e : fs::directory_iterator(root)) {
    int k = 0;
    char tail = 0;
    if (e.is_directory() && std::sscanf(e.path().filename().string().c_str(), "frame_%d%c", &k, &tail) == 1) {
      frames[k] = e.path();
    }
  }
  if (frames.empty()) throw InputError("no frame_{k} directories in " + root.string());
  const int last = frames.rbegin()->first;
  std::optional<DisparityMap> previous;
  int processed = 0;
  int code = kOk;
  for (int k = frames.begin()->first; k <= last; ++k) {
    if (!frames.count(k)) {
      log->warn("frame {} missing, skipped", k);
      continue;
    }
    SeparateOptions o = base;
    if (!cold) o.warm_start = previous;
    const fs::path out = g.out_dir.empty() ? frames[k] / "out" : fs::path(g.out_dir) / ("frame_" + std::to_string(k));
    Globals fg = g;
    if (!g.flows_dir.empty()) fg.flows_dir = (fs::path(g.flows_dir) / ("frame_" + std::to_string(k))).string();
    try {
      const auto outcome = separate_dir(frames[k], out, fg, o);
      previous = outcome.result.disparity;
      ++processed;
      if (outcome.exit_code != kOk) code = kNotConverged;
      log->info("frame {}: {} outer iterations, {}", k, outcome.result.outer_iterations,
                to_string(outcome.result.reason));
    } catch (const InputError& e) {
      log->warn("frame {} skipped: {}", k, e.what());
    }
  }
  if (processed == 0) throw InputError("no frame could be processed");
  return code;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Light-field layer separation with disparity refinement", "lfsep"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Solver configuration (JSON)");
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--flows", g.flows_dir, "Directory of flow_{row}_{col}.flo files; skips the matcher");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed for synthetic scenes");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, critical or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic light field with ground truth");
  synth_cmd->add_option("--scene", sa.scene, "planar or two_plane")->check(CLI::IsMember({"planar", "two_plane"}));
  synth_cmd->add_option("--alpha", sa.alpha, "Blending weight of the secondary layer");
  synth_cmd->add_option("--spec", sa.spec_path, "Synthetic spec JSON (overrides the preset options)");
  synth_cmd->add_option("--size", sa.size, "Image side in pixels");
  synth_cmd->add_option("--channels", sa.channels, "1 or 3");
  synth_cmd->add_option("--grid", sa.grid, "Views per grid side (odd)");
  synth_cmd->add_option("--frames", sa.frames, "Write a sequence of frame_{k} directories");
  synth_cmd->add_option("--motion", sa.motion, "Secondary-layer motion per frame (pixels)");
  synth_cmd->add_flag("--write-flows", sa.write_flows, "Also write ground-truth flows to flows/");

  std::string input;
  SeparateOptions so;
  auto* sep_cmd = app.add_subcommand("separate", "Separate a light field into transmitted and secondary layers");
  sep_cmd->add_option("input", input, "Light-field directory")->required();
  sep_cmd->add_option("--radius", so.radius, "Matcher search radius (pixels)");
  sep_cmd->add_option("--d0", so.d0_path, "Initial disparity (PFM) instead of the matcher");

  std::string result_dir, gt_dir;
  bool eval_csv = false;
  auto* eval_cmd = app.add_subcommand("eval", "Compare a separation result with ground truth");
  eval_cmd->add_option("result", result_dir, "Directory with T_ref.png, S_ref.png, d.pfm")->required();
  eval_cmd->add_option("gt", gt_dir, "Ground-truth directory (synth writes it as gt/)")->required();
  eval_cmd->add_flag("--csv", eval_csv, "Also write eval.csv");

  SweepArgs wa;
  auto* sweep_cmd = app.add_subcommand("sweep", "Accuracy against blending weight on a synthetic scene");
  sweep_cmd->add_option("--alphas", wa.alphas, "Comma-separated alpha values");
  sweep_cmd->add_option("--scene", wa.scene, "planar or two_plane")->check(CLI::IsMember({"planar", "two_plane"}));
  sweep_cmd->add_option("--size", wa.size, "Image side in pixels");
  sweep_cmd->add_option("--radius", wa.radius, "Matcher search radius (pixels)");

  double focal = 0.0, aperture = 1.0;
  auto* refocus_cmd = app.add_subcommand("refocus", "Depth-guided refocusing of a recovered transmitted layer");
  refocus_cmd->add_option("result", result_dir, "Directory with T_ref.png and d.pfm")->required();
  refocus_cmd->add_option("--focal", focal, "Disparity in focus (pixels)")->required();
  refocus_cmd->add_option("--aperture", aperture, "Blur radius per pixel of disparity deviation");

  std::string seq;
  bool cold = false;
  SeparateOptions vo;
  auto* video_cmd = app.add_subcommand("video", "Separate every frame_{k} of a sequence with warm-started disparity");
  video_cmd->add_option("sequence", seq, "Directory containing frame_{k} subdirectories")->required();
  video_cmd->add_option("--radius", vo.radius, "Matcher search radius (pixels)");
  video_cmd->add_flag("--cold", cold, "Initialize every frame with the matcher");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("lfsep");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*synth_cmd) return cmd_synth(g, sa);
    if (*sep_cmd) return cmd_separate(g, input, so);
    if (*eval_cmd) return cmd_eval(g, result_dir, gt_dir, eval_csv);
    if (*sweep_cmd) return cmd_sweep(g, wa);
    if (*refocus_cmd) return cmd_refocus(g, result_dir, focal, aperture);
    if (*video_cmd) return cmd_video(g, seq, vo, cold);
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  } catch (const DivergenceError& e) {
    spdlog::error("{}", e.what());
    return kNotConverged;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  }
  return kInputError;
}

}  // namespace lfsep::cli
