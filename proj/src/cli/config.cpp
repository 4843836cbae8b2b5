#include "privlens/cli/config.hpp"

#include <set>

#include "privlens/errors.hpp"
#include "privlens/io.hpp"

namespace privlens::cli {
namespace {

using nlohmann::json;

// Reads keys of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& node, std::string where) : node_(node), where_(std::move(where)) {
    if (!node_.is_object()) {
      throw ConfigError(where_ + " must be an object");
    }
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return node_.contains(key);
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) {
      return;
    }
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + " has the wrong type");
    }
  }

  const json& at(const std::string& key) {
    known_.insert(key);
    return node_.at(key);
  }

  std::string path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!known_.count(key)) {
        throw ConfigError("unknown config key '" + path(key) + "'");
      }
    }
  }

 private:
  const json& node_;
  std::string where_;
  std::set<std::string> known_;
};

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) {
    return {};
  }
  const fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

void require_existing(const fs::path& p, const std::string& what) {
  std::error_code ec;
  if (!p.empty() && !fs::exists(p, ec)) {
    throw ConfigError(what + " does not exist: " + p.string());
  }
}

LensSource parse_lens(const json& node, const std::string& where, const fs::path& base) {
  Section s(node, where);
  LensSource lens;
  s.read("name", lens.name);
  s.read("source", lens.source);
  std::string file;
  s.read("coefficients_file", file);
  lens.coefficients_file = resolve(base, file);
  s.read("defocus_um", lens.defocus_um);
  s.read("sensor_size", lens.sensor_size);
  s.finish();

  static const std::set<std::string> kSources{"zero", "hardware", "file", "defocus", "delta",
                                              "lowres"};
  if (!kSources.count(lens.source)) {
    throw ConfigError(where + ".source: unknown lens source '" + lens.source +
                      "' (expected zero, hardware, file, defocus, delta or lowres)");
  }
  if (lens.source == "file") {
    if (lens.coefficients_file.empty()) {
      throw ConfigError(where + ": source \"file\" needs coefficients_file");
    }
    require_existing(lens.coefficients_file, where + ".coefficients_file");
  }
  if (lens.source == "lowres" && lens.sensor_size < 1) {
    throw ConfigError(where + ".sensor_size must be >= 1");
  }
  if (lens.name.empty()) {
    lens.name = lens.source == "lowres" ? "lowres-" + std::to_string(lens.sensor_size)
                                        : lens.source;
  }
  return lens;
}

AttackMethod parse_method(const json& node, const std::string& where) {
  if (node.is_string()) {
    return method_from_name(node.get<std::string>());
  }
  Section s(node, where);
  std::string type;
  s.read("type", type);
  AttackMethod method = method_from_name(type);
  if (auto* w = std::get_if<WienerAttack>(&method)) {
    s.read("nsr", w->nsr);
  } else if (auto* ri = std::get_if<RegularizedInverseAttack>(&method)) {
    s.read("epsilon", ri->epsilon);
  } else if (auto* u = std::get_if<UnsharpBlindAttack>(&method)) {
    s.read("radius_px", u->radius_px);
    s.read("amount", u->amount);
  }
  s.finish();
  validate(method);
  return method;
}

}  // namespace

AttackMethod method_from_name(const std::string& name) {
  if (name == "wiener") {
    return WienerAttack{};
  }
  if (name == "regularized_inverse") {
    return RegularizedInverseAttack{};
  }
  if (name == "unsharp_blind") {
    return UnsharpBlindAttack{};
  }
  throw ConfigError("unknown attack method '" + name +
                    "' (expected wiener, regularized_inverse or unsharp_blind)");
}

fs::path hardware_coefficients_path() {
  return fs::path(PRIVLENS_DATA_DIR) / "hardware_coefficients.json";
}

zernike::ZernikeCoefficients lens_coefficients(const LensSource& lens) {
  if (lens.source == "zero") {
    return zernike::ZernikeCoefficients::zeros(15);
  }
  if (lens.source == "hardware") {
    return io::read_coefficients(hardware_coefficients_path());
  }
  if (lens.source == "file") {
    try {
      return io::read_coefficients(lens.coefficients_file);
    } catch (const IoError& e) {
      throw ConfigError(std::string("coefficient file: ") + e.what());
    }
  }
  if (lens.source == "defocus") {
    auto beta = zernike::ZernikeCoefficients::zeros(15);
    beta.set_noll(4, lens.defocus_um);
    return beta;
  }
  throw ConfigError("lens source '" + lens.source + "' has no Zernike coefficients");
}

LensSpec lens_spec(const LensSource& lens, const OpticsConfig& optics) {
  if (lens.source == "delta") {
    return LensSpec{lens.name, PsfStack::delta(optics.channels(), optics.psf_crop)};
  }
  if (lens.source == "lowres") {
    return LensSpec{lens.name, LowResolutionLens{lens.sensor_size}};
  }
  return LensSpec{lens.name, lens_coefficients(lens)};
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) {
      throw ConfigError("override '" + assignment + "' has an empty key segment");
    }
    if (!node->is_object()) {
      throw ConfigError("override '" + assignment + "' descends into a non-object");
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) {
      *node = json::object();
    }
    start = dot + 1;
  }
}

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  RunConfig cfg;
  Section root(doc, "");
  if (root.has("seed")) {
    try {
      cfg.seed = doc.at("seed").get<std::uint64_t>();
    } catch (const json::exception&) {
      throw ConfigError("seed must be a non-negative integer");
    }
  }

  if (root.has("optics")) {
    Section s(doc.at("optics"), "optics");
    s.read("wavelengths_nm", cfg.optics.wavelengths_nm);
    s.read("aperture_diameter_mm", cfg.optics.aperture_diameter_mm);
    s.read("object_distance_m", cfg.optics.object_distance_m);
    s.read("sensor_distance_m", cfg.optics.sensor_distance_m);
    s.read("pupil_resolution_px", cfg.optics.pupil_resolution);
    s.read("psf_crop_px", cfg.optics.psf_crop);
    s.read("pixel_pitch_um", cfg.optics.pixel_pitch_um);
    s.finish();
  }
  cfg.optics.validate();

  if (root.has("noise")) {
    Section s(doc.at("noise"), "noise");
    s.read("sigma", cfg.noise.sigma);
    s.finish();
  }
  if (!(cfg.noise.sigma >= 0.0)) {
    throw ConfigError("noise.sigma must be >= 0");
  }
  cfg.stage1.noise_sigma = cfg.noise.sigma;

  if (root.has("stage1")) {
    Section s(doc.at("stage1"), "stage1");
    s.read("alpha1", cfg.stage1.alpha1);
    s.read("alpha2", cfg.stage1.alpha2);
    s.read("learning_rate", cfg.stage1.learning_rate);
    s.read("momentum", cfg.stage1.momentum);
    s.read("iterations", cfg.stage1.iterations);
    s.read("fd_step_um", cfg.stage1.fd_step_um);
    s.read("batch_size", cfg.stage1.batch_size);
    s.read("init_jitter_um", cfg.stage1.init_jitter_um);
    s.read("hf_defocus_um", cfg.stage1.regularizer_defocus_um);
    s.read("zernike_terms", cfg.stage1.zernike_terms);
    s.read("heatmap_cutoff", cfg.heatmap_cutoff);
    s.read("landmark_sigma_px", cfg.landmark_sigma_px);
    s.finish();
  }
  cfg.stage1.validate();
  if (!(cfg.heatmap_cutoff > 0.0 && cfg.heatmap_cutoff <= 1.0)) {
    throw ConfigError("stage1.heatmap_cutoff must be in (0, 1]");
  }
  if (!(cfg.landmark_sigma_px > 0.0)) {
    throw ConfigError("stage1.landmark_sigma_px must be > 0");
  }

  if (root.has("weights")) {
    Section s(doc.at("weights"), "weights");
    s.read("sty", cfg.weights.sty);
    s.read("ds", cfg.weights.ds);
    s.read("cyc", cfg.weights.cyc);
    s.read("lpips", cfg.weights.lpips);
    s.read("expr", cfg.weights.expr);
    s.finish();
  }
  if (cfg.weights.sty < 0 || cfg.weights.ds < 0 || cfg.weights.cyc < 0 ||
      cfg.weights.lpips < 0 || cfg.weights.expr < 0) {
    throw ConfigError("weights must all be >= 0");
  }

  if (root.has("lens")) {
    cfg.lens = parse_lens(doc.at("lens"), "lens", base_dir);
  } else {
    cfg.lens.name = "zero";
  }

  cfg.attack.methods = {WienerAttack{}, RegularizedInverseAttack{}, UnsharpBlindAttack{}};
  if (root.has("attack")) {
    Section s(doc.at("attack"), "attack");
    if (s.has("lenses")) {
      const json& lenses = doc.at("attack").at("lenses");
      if (!lenses.is_array()) {
        throw ConfigError("attack.lenses must be an array");
      }
      for (std::size_t i = 0; i < lenses.size(); ++i) {
        cfg.attack.lenses.push_back(
            parse_lens(lenses[i], "attack.lenses[" + std::to_string(i) + "]", base_dir));
      }
    }
    if (s.has("methods")) {
      const json& methods = doc.at("attack").at("methods");
      if (!methods.is_array() || methods.empty()) {
        throw ConfigError("attack.methods must be a non-empty array");
      }
      cfg.attack.methods.clear();
      for (std::size_t i = 0; i < methods.size(); ++i) {
        cfg.attack.methods.push_back(
            parse_method(methods[i], "attack.methods[" + std::to_string(i) + "]"));
      }
    }
    s.read("dump_images", cfg.attack.dump_images);
    s.finish();
  }

  if (root.has("losses")) {
    Section s(doc.at("losses"), "losses");
    s.read("bundle", cfg.losses.bundle);
    if (s.has("mock_seed")) {
      std::uint64_t seed = 0;
      s.read("mock_seed", seed);
      cfg.losses.mock_seed = seed;
    }
    s.read("source_domain", cfg.losses.source_domain);
    s.read("target_domain", cfg.losses.target_domain);
    s.finish();
  }

  if (root.has("paths")) {
    Section s(doc.at("paths"), "paths");
    std::string dataset, landmarks, triples, output;
    s.read("dataset_dir", dataset);
    s.read("landmark_dir", landmarks);
    s.read("triples_dir", triples);
    s.read("output_dir", output);
    s.finish();
    cfg.paths.dataset_dir = resolve(base_dir, dataset);
    cfg.paths.landmark_dir = resolve(base_dir, landmarks);
    cfg.paths.triples_dir = resolve(base_dir, triples);
    if (!output.empty()) {
      cfg.paths.output_dir = resolve(base_dir, output);
    }
  }
  root.finish();

  cfg.canonical = doc.dump();
  return cfg;
}

RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = io::read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  for (const auto& assignment : overrides) {
    apply_override(doc, assignment);
  }
  return parse_config(doc, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

}  // namespace privlens::cli
