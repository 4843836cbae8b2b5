#include "privlens/cli/commands.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "privlens/attacks.hpp"
#include "privlens/cli/config.hpp"
#include "privlens/cli/manifest.hpp"
#include "privlens/errors.hpp"
#include "privlens/heatmap.hpp"
#include "privlens/io.hpp"
#include "privlens/rng.hpp"
#include "privlens/stage1.hpp"
#include "privlens/stage2.hpp"
#include "privlens/stage2_mocks.hpp"

namespace privlens::cli {
namespace {

using nlohmann::ordered_json;
using io::format_double;

// Sub-seeds derived from the master seed, one stream per stage.
constexpr std::uint64_t kCaptureStream = 1;
constexpr std::uint64_t kOptimizeStream = 2;
constexpr std::uint64_t kAttackStream = 3;
constexpr std::uint64_t kLossesStream = 4;
constexpr std::uint64_t kMockStream = 5;

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

struct LoadedImage {
  std::string name;
  Image image;
};

RunConfig load(const CommonOptions& options) {
  std::vector<std::string> overrides = options.overrides;
  if (options.seed) {
    overrides.push_back("seed=" + std::to_string(*options.seed));
  }
  RunConfig cfg = load_config(options.config, overrides);
  if (!options.out.empty()) {
    cfg.paths.output_dir = options.out;
  }
  return cfg;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) {
    return value;
  }
  std::string out = "\"";
  for (char c : value) {
    out += c;
    if (c == '"') {
      out += '"';
    }
  }
  return out + "\"";
}

// nlohmann writes non-finite numbers as null; keep them readable instead.
ordered_json number(double value) {
  if (std::isfinite(value)) {
    return value;
  }
  return format_double(value);
}

Image match_channels(Image image, int channels) {
  if (image.channels() == channels) {
    return image;
  }
  if (image.channels() == 1) {
    Image out(image.height(), image.width(), channels);
    for (int c = 0; c < channels; ++c) {
      out.plane(c) = image.plane(0);
    }
    return out;
  }
  throw IoError("image has " + std::to_string(image.channels()) + " channels, the optics model " +
                std::to_string(channels));
}

std::vector<LoadedImage> load_images(const std::vector<fs::path>& files, int channels,
                                     Manifest* manifest) {
  std::vector<LoadedImage> out;
  for (const auto& path : files) {
    try {
      out.push_back(LoadedImage{path.stem().string(), match_channels(io::read_png(path), channels)});
    } catch (const IoError& e) {
      if (!manifest) {
        throw;
      }
      manifest->warn(std::string("skipping ") + path.filename().string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<fs::path> dataset_files(const RunConfig& cfg) {
  if (cfg.paths.dataset_dir.empty()) {
    throw ConfigError("paths.dataset_dir is required for this command");
  }
  std::vector<fs::path> files;
  try {
    files = io::list_images(cfg.paths.dataset_dir);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  if (files.empty()) {
    throw ConfigError("dataset directory " + cfg.paths.dataset_dir.string() + " has no PNG images");
  }
  return files;
}

std::vector<LoadedImage> require_images(std::vector<LoadedImage> images) {
  if (images.empty()) {
    throw IoError("no readable images in the dataset");
  }
  return images;
}

std::string trace_csv(const OptimizationTrace& trace, int p) {
  std::ostringstream out;
  out << "iteration,total,optics,hmap,mse_mean";
  for (int j = 1; j <= p; ++j) {
    out << ",beta_" << j;
  }
  out << "\n";
  for (const auto& rec : trace.records) {
    out << rec.iteration << "," << format_double(rec.terms.total) << ","
        << format_double(rec.terms.optics) << "," << format_double(rec.terms.hmap) << ","
        << format_double(rec.terms.mse_mean);
    for (int j = 1; j <= p; ++j) {
      out << "," << format_double(j <= rec.beta.size() ? rec.beta.noll(j) : 0.0);
    }
    out << "\n";
  }
  return out.str();
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

int cmd_psf(const RunConfig& cfg, double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 1.0)) {
    throw ConfigError("--cutoff must be in (0, 1)");
  }
  if (cfg.lens.source == "lowres") {
    throw ConfigError("psf: the low-resolution camera has no optical PSF");
  }
  const LensSpec spec = lens_spec(cfg.lens, cfg.optics);
  const PsfStack psf = attacker_psf(spec, cfg.optics, cfg.optics.psf_crop);

  Manifest manifest("psf", cfg.canonical, cfg.seed, cfg.paths.output_dir);
  manifest.write("psf.raw", io::psf_raw_bytes(psf));
  manifest.write("psf.png", io::psf_png_bytes(psf));

  const std::vector<double> ratio = mtf_highfreq_ratio(psf, cutoff);
  ordered_json doc;
  doc["lens"] = cfg.lens.name;
  doc["psf_shape"] = {psf.channels(), psf.size(), psf.size()};
  doc["psf_format"] = "float32 little-endian, channel-major, row-major";
  doc["wavelengths_nm"] = cfg.optics.wavelengths_nm;
  doc["cutoff"] = cutoff;
  doc["mtf_highfreq_ratio"] = ratio;
  doc["mtf_highfreq_ratio_mean"] = mean_of(ratio);
  doc["central_energy_fraction"] = central_energy_fraction(psf);
  doc["crop_energy_loss"] = psf.crop_energy_loss;
  manifest.write("mtf.json", doc.dump(2) + "\n");
  if (const auto* beta = std::get_if<zernike::ZernikeCoefficients>(&spec.model)) {
    manifest.write("coefficients.json", io::coefficients_json(*beta));
  }
  manifest.finish();
  std::cout << "psf: wrote " << (cfg.paths.output_dir / "psf.raw").string()
            << " (mtf_highfreq_ratio " << format_double(mean_of(ratio)) << ")\n";
  return kExitOk;
}

int cmd_capture(const RunConfig& cfg) {
  const LensSpec spec = lens_spec(cfg.lens, cfg.optics);
  const auto files = dataset_files(cfg);
  Manifest manifest("capture", cfg.canonical, cfg.seed, cfg.paths.output_dir);
  const auto images = require_images(load_images(files, cfg.optics.channels(), &manifest));

  const NoiseSpec noise{cfg.noise.sigma, rng::derive(cfg.seed, kCaptureStream)};
  std::map<int, PsfStack> psf_by_height;
  std::ostringstream csv;
  csv << "image,mse,psnr_db\n";
  double mse_sum = 0.0;
  double psnr_sum = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& x = images[i].image;
    auto it = psf_by_height.find(x.height());
    if (it == psf_by_height.end()) {
      it = psf_by_height.emplace(x.height(), attacker_psf(spec, cfg.optics, x.height())).first;
    }
    const Image y = simulate_lens(spec, it->second, x, noise, i);
    manifest.write(fs::path("captures") / (images[i].name + ".png"), io::encode_png(y, 16));
    const double mse = mean_squared_error(x, y);
    const double db = psnr_from_mse(mse);
    mse_sum += mse;
    psnr_sum += db;
    csv << csv_field(images[i].name) << "," << format_double(mse) << "," << format_double(db)
        << "\n";
  }
  manifest.write("captures.csv", csv.str());

  const double n = static_cast<double>(images.size());
  ordered_json summary;
  summary["lens"] = cfg.lens.name;
  summary["count"] = images.size();
  summary["mean_mse"] = number(mse_sum / n);
  summary["mean_psnr_db"] = number(psnr_sum / n);
  manifest.write("capture_summary.json", summary.dump(2) + "\n");
  manifest.finish();
  std::cout << "capture: " << images.size() << " images, mean PSNR "
            << format_double(psnr_sum / n) << " dB\n";
  return kExitOk;
}

int cmd_optimize(const RunConfig& cfg) {
  zernike::ZernikeCoefficients initial = lens_coefficients(cfg.lens);
  const int p = cfg.stage1.zernike_terms;
  if (initial.size() > p) {
    throw ConfigError("initial lens has " + std::to_string(initial.size()) +
                      " coefficients but stage1.zernike_terms is " + std::to_string(p));
  }
  {
    std::vector<double> padded(initial.values().begin(), initial.values().end());
    padded.resize(p, 0.0);
    initial = zernike::ZernikeCoefficients(std::move(padded));
  }
  auto files = dataset_files(cfg);
  Manifest manifest("optimize", cfg.canonical, cfg.seed, cfg.paths.output_dir);
  auto images = require_images(load_images(files, cfg.optics.channels(), &manifest));
  if (static_cast<int>(images.size()) > cfg.stage1.batch_size) {
    images.resize(cfg.stage1.batch_size);
  }

  if (!cfg.paths.landmark_dir.empty() && !fs::is_directory(cfg.paths.landmark_dir)) {
    throw ConfigError("paths.landmark_dir is not a directory: " + cfg.paths.landmark_dir.string());
  }
  std::vector<Stage1Sample> batch;
  for (auto& item : images) {
    if (!item.image.same_shape(images.front().image)) {
      throw ConfigError("optimize: all batch images must share one size");
    }
    Stage1Sample sample{item.image, std::nullopt};
    if (!cfg.paths.landmark_dir.empty()) {
      const fs::path sidecar = cfg.paths.landmark_dir / (item.name + ".json");
      if (fs::exists(sidecar)) {
        sample.landmarks = io::read_landmarks(sidecar);
      }
    }
    batch.push_back(std::move(sample));
  }

  auto extractor = std::make_shared<LowpassHeatmapProxy>(cfg.heatmap_cutoff);
  const Stage1Problem problem(std::move(batch), cfg.optics, cfg.stage1, extractor, extractor,
                              cfg.landmark_sigma_px);
  const LensOptimizationResult result =
      optimize_lens(problem, initial, rng::derive(cfg.seed, kOptimizeStream));

  manifest.write("trace.csv", trace_csv(result.trace, p));
  manifest.write("coefficients.json", io::coefficients_json(result.beta));
  const PsfStack before = problem.psf_model().compute(initial);
  const PsfStack after = problem.psf_model().compute(result.beta);
  manifest.write("psf_before.png", io::psf_png_bytes(before));
  manifest.write("psf_after.png", io::psf_png_bytes(after));

  ordered_json summary;
  summary["iterations_run"] = result.trace.records.size();
  summary["best_iteration"] = result.best_iteration;
  summary["diverged"] = result.diverged;
  if (!result.trace.records.empty()) {
    summary["initial_total"] = number(result.trace.records.front().terms.total);
    summary["best_total"] = number(result.trace.records[result.best_iteration].terms.total);
  }
  summary["mtf_highfreq_ratio_before"] = mean_of(mtf_highfreq_ratio(before, 0.5));
  summary["mtf_highfreq_ratio_after"] = mean_of(mtf_highfreq_ratio(after, 0.5));
  summary["central_energy_fraction_before"] = central_energy_fraction(before);
  summary["central_energy_fraction_after"] = central_energy_fraction(after);
  manifest.write("optimize_summary.json", summary.dump(2) + "\n");
  if (result.diverged) {
    manifest.set_status("diverged");
    manifest.finish();
    std::cerr << "error: optimisation diverged after " << result.trace.records.size()
              << " iterations; trace preserved\n";
    return kExitNumerical;
  }
  manifest.finish();
  std::cout << "optimize: best iteration " << result.best_iteration << " of "
            << result.trace.records.size() << "\n";
  return kExitOk;
}

std::vector<AttackMethod> resolve_methods(const RunConfig& cfg,
                                          const std::vector<std::string>& names,
                                          const std::vector<double>& nsr_sweep) {
  std::vector<AttackMethod> methods = cfg.attack.methods;
  if (!names.empty()) {
    methods.clear();
    for (const auto& name : names) {
      methods.push_back(method_from_name(name));
    }
  }
  if (!nsr_sweep.empty()) {
    std::erase_if(methods, [](const AttackMethod& m) { return std::holds_alternative<WienerAttack>(m); });
    for (double nsr : nsr_sweep) {
      methods.push_back(WienerAttack{nsr});
    }
  }
  for (const auto& m : methods) {
    validate(m);
  }
  return methods;
}

int cmd_attack(const RunConfig& cfg, const std::vector<std::string>& method_names,
               const std::vector<double>& nsr_sweep, bool dump_images) {
  const std::vector<AttackMethod> methods = resolve_methods(cfg, method_names, nsr_sweep);
  std::vector<LensSource> sources = cfg.attack.lenses;
  if (sources.empty()) {
    sources.push_back(cfg.lens);
    LensSource lowres;
    lowres.name = "lowres-16";
    lowres.source = "lowres";
    sources.push_back(lowres);
  }
  std::vector<LensSpec> lenses;
  for (const auto& source : sources) {
    lenses.push_back(lens_spec(source, cfg.optics));
  }
  const auto files = dataset_files(cfg);
  Manifest manifest("attack", cfg.canonical, cfg.seed, cfg.paths.output_dir);
  const auto images = require_images(load_images(files, cfg.optics.channels(), &manifest));
  std::vector<AttackImage> dataset;
  for (const auto& item : images) {
    dataset.push_back(AttackImage{item.name, item.image});
  }

  const NoiseSpec noise{cfg.noise.sigma, rng::derive(cfg.seed, kAttackStream)};
  const AttackReport report = attack_suite(dataset, lenses, methods, noise, cfg.optics);

  std::ostringstream csv;
  csv << "lens,method,image_index,image,ok,status,mse,psnr_db,ssim,capture_psnr_db\n";
  int successes = 0;
  for (const auto& row : report.rows) {
    successes += row.ok ? 1 : 0;
    csv << csv_field(row.lens) << "," << csv_field(row.method) << "," << row.image_index << ","
        << csv_field(row.image_name) << "," << (row.ok ? "1" : "0") << ","
        << csv_field(row.status) << "," << format_double(row.mse) << ","
        << format_double(row.psnr_db) << "," << format_double(row.ssim) << ","
        << format_double(row.capture_psnr_db) << "\n";
    if (!row.ok) {
      manifest.warn(row.lens + "/" + row.method + "/" + row.image_name + ": " + row.status);
    }
  }
  manifest.write("attack_rows.csv", csv.str());

  ordered_json summary = ordered_json::array();
  for (const auto& agg : report.aggregates()) {
    summary.push_back({{"lens", agg.lens},
                       {"method", agg.method},
                       {"count", agg.count},
                       {"failures", agg.failures},
                       {"mean_mse", number(agg.mean_mse)},
                       {"mean_psnr_db", number(agg.mean_psnr_db)},
                       {"mean_ssim", number(agg.mean_ssim)}});
  }
  ordered_json doc;
  doc["noise_sigma"] = cfg.noise.sigma;
  doc["aggregates"] = summary;
  manifest.write("attack_summary.json", doc.dump(2) + "\n");

  if (dump_images || cfg.attack.dump_images) {
    for (std::size_t l = 0; l < lenses.size(); ++l) {
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        const PsfStack psf = attacker_psf(lenses[l], cfg.optics, dataset[i].x.height());
        const Image y = simulate_lens(lenses[l], psf, dataset[i].x, noise, i);
        for (const auto& method : methods) {
          const fs::path rel = fs::path("recovered") / lenses[l].name / method_name(method) /
                               (dataset[i].name + ".png");
          manifest.write(rel, io::encode_png(run_attack(method, y, psf).image, 8));
        }
      }
    }
  }

  if (successes == 0) {
    manifest.set_status("all attacks failed");
    manifest.finish();
    std::cerr << "error: every attack row failed\n";
    return kExitNumerical;
  }
  manifest.finish();
  for (const auto& agg : report.aggregates()) {
    std::cout << agg.lens << "  " << agg.method << "  PSNR " << format_double(agg.mean_psnr_db)
              << " dB  SSIM " << format_double(agg.mean_ssim) << "\n";
  }
  return kExitOk;
}

int cmd_losses(const RunConfig& cfg, const std::string& bundle_override) {
  if (cfg.paths.triples_dir.empty()) {
    throw ConfigError("paths.triples_dir is required for the losses command");
  }
  const fs::path sources_dir = cfg.paths.triples_dir / "sources";
  const fs::path references_dir = cfg.paths.triples_dir / "references";
  const fs::path landmarks_dir = cfg.paths.triples_dir / "landmarks";
  for (const auto& dir : {sources_dir, references_dir, landmarks_dir}) {
    if (!fs::is_directory(dir)) {
      throw ConfigError("triples directory is missing " + dir.filename().string() + "/");
    }
  }
  const auto source_files = io::list_images(sources_dir);
  const auto reference_files = io::list_images(references_dir);
  std::vector<fs::path> landmark_files;
  for (const auto& entry : fs::directory_iterator(landmarks_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      landmark_files.push_back(entry.path());
    }
  }
  std::sort(landmark_files.begin(), landmark_files.end());
  if (source_files.empty() || source_files.size() != reference_files.size() ||
      source_files.size() != landmark_files.size()) {
    throw ConfigError("mismatched triples: " + std::to_string(source_files.size()) +
                      " sources, " + std::to_string(reference_files.size()) + " references, " +
                      std::to_string(landmark_files.size()) + " landmark files");
  }
  const std::string bundle_name = bundle_override.empty() ? cfg.losses.bundle : bundle_override;
  const LensSpec spec = lens_spec(cfg.lens, cfg.optics);

  const int channels = cfg.optics.channels();
  const auto sources = load_images(source_files, channels, nullptr);
  const auto references = load_images(reference_files, channels, nullptr);
  const Image& first = sources.front().image;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (!sources[i].image.same_shape(first) || !references[i].image.same_shape(first)) {
      throw ConfigError("losses: every source and reference must share one size");
    }
  }
  const std::uint64_t mock_seed =
      cfg.losses.mock_seed ? *cfg.losses.mock_seed : rng::derive(cfg.seed, kMockStream);
  const stage2::ModelBundle bundle = stage2::mocks::make_bundle(
      bundle_name, first.height(), first.width(), channels, mock_seed, cfg.heatmap_cutoff);

  const NoiseSpec noise{cfg.noise.sigma, rng::derive(cfg.seed, kLossesStream)};
  const PsfStack psf = attacker_psf(spec, cfg.optics, first.height());
  std::vector<stage2::Stage2Sample> batch;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    stage2::Stage2Sample s;
    s.x = sources[i].image;
    s.y = simulate_lens(spec, psf, s.x, noise, i);
    s.r = references[i].image;
    s.r1 = references[i].image;
    s.r2 = references[(i + 1) % references.size()].image;
    s.omega = stage2::DomainLabel{cfg.losses.source_domain};
    s.omega_tilde = stage2::DomainLabel{cfg.losses.target_domain};
    try {
      s.m_star = landmark_heatmap_oracle(io::read_landmarks(landmark_files[i]), first.height(),
                                         first.width(), cfg.landmark_sigma_px);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(landmark_files[i].filename().string() + ": " + e.what());
    }
    batch.push_back(std::move(s));
  }
  const stage2::LossBreakdown losses = stage2::full_stage2_objective(bundle, batch, cfg.weights);

  Manifest manifest("losses", cfg.canonical, cfg.seed, cfg.paths.output_dir);
  ordered_json doc;
  doc["bundle"] = bundle_name;
  doc["count"] = batch.size();
  doc["components"] = {{"adv", number(losses.adv)},     {"sty", number(losses.sty)},
                       {"ds", number(losses.ds)},       {"cyc", number(losses.cyc)},
                       {"lpips", number(losses.lpips)}, {"expr", number(losses.expr)}};
  doc["weights"] = {{"sty", cfg.weights.sty},     {"ds", cfg.weights.ds},
                    {"cyc", cfg.weights.cyc},     {"lpips", cfg.weights.lpips},
                    {"expr", cfg.weights.expr}};
  doc["total"] = number(losses.total);
  doc["clamped_discriminator_outputs"] = losses.clamped_discriminator_outputs;
  manifest.write("losses.json", doc.dump(2) + "\n");
  manifest.finish();
  std::cout << "losses: total " << format_double(losses.total) << "\n";
  return kExitOk;
}

void add_common(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--config", options.config, "JSON run configuration")->required();
  cmd->add_option("--out", options.out, "output directory (overrides paths.output_dir)");
  cmd->add_option("--seed", options.seed, "master seed (overrides seed)");
  cmd->add_option("--set", options.overrides, "config override, e.g. stage1.iterations=50");
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"privlens: privacy-preserving lens simulation and evaluation"};
  app.require_subcommand(1);
  CommonOptions options;

  auto* psf = app.add_subcommand("psf", "render the PSF of the configured lens");
  add_common(psf, options);
  double cutoff = 0.5;
  psf->add_option("--cutoff", cutoff, "MTF cutoff as a fraction of Nyquist");

  auto* capture = app.add_subcommand("capture", "simulate captures of the dataset");
  add_common(capture, options);

  auto* optimize = app.add_subcommand("optimize", "optimise the Zernike lens on the dataset");
  add_common(optimize, options);

  auto* attack = app.add_subcommand("attack", "run deconvolution attacks against lenses");
  add_common(attack, options);
  std::vector<std::string> method_names;
  std::vector<double> nsr_sweep;
  bool dump_images = false;
  attack->add_option("--methods", method_names, "wiener, regularized_inverse, unsharp_blind")
      ->delimiter(',');
  attack->add_option("--nsr-sweep", nsr_sweep, "Wiener noise-to-signal ratios to try")
      ->delimiter(',');
  attack->add_flag("--dump-images", dump_images, "write recovered images");

  auto* losses = app.add_subcommand("losses", "evaluate the identity-translation losses");
  add_common(losses, options);
  std::string bundle;
  losses->add_option("--bundle", bundle, "mock bundle: identity, linear or constant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const RunConfig cfg = load(options);
    if (psf->parsed()) {
      return cmd_psf(cfg, cutoff);
    }
    if (capture->parsed()) {
      return cmd_capture(cfg);
    }
    if (optimize->parsed()) {
      return cmd_optimize(cfg);
    }
    if (attack->parsed()) {
      return cmd_attack(cfg, method_names, nsr_sweep, dump_images);
    }
    return cmd_losses(cfg, bundle);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n" << app.help();
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace privlens::cli
