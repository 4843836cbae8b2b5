#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "privlens/cli/config.hpp"
#include "privlens/cli/manifest.hpp"
#include "privlens/io.hpp"
#include "support.hpp"

using namespace privlens;
namespace fs = std::filesystem;
using nlohmann::json;
using privlens::testing::scratch_dir;

namespace {

int run_shell(const std::string& command) {
  const int status = std::system((command + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_tool(const std::string& args) { return run_shell(std::string(PRIVLENS_BIN) + " " + args); }

std::string slurp(const fs::path& path) { return io::read_text_file(path); }

json load_json(const fs::path& path) { return json::parse(slurp(path)); }

fs::path write_config(const fs::path& dir, const std::string& name, const json& doc) {
  const fs::path path = dir / name;
  std::ofstream(path) << doc.dump(2);
  return path;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (char ch : line) {
      if (ch == '"') {
        quoted = !quoted;
      } else if (ch == ',' && !quoted) {
        fields.push_back(field);
        field.clear();
      } else {
        field += ch;
      }
    }
    fields.push_back(field);
    rows.push_back(fields);
  }
  return rows;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(scratch_dir("cli"));
    ASSERT_EQ(run_shell(std::string(PRIVLENS_SYNTH_BIN) + " --out " + (*root_ / "data").string() +
                        " --count 3 --size 32 --seed 5"),
              0);
    ASSERT_EQ(run_shell(std::string(PRIVLENS_SYNTH_BIN) + " --out " +
                        (*root_ / "triples").string() + " --count 3 --size 32 --seed 6 --triples"),
              0);
  }
  static void TearDownTestSuite() { delete root_; }

  static fs::path root() { return *root_; }
  static fs::path images() { return *root_ / "data" / "images"; }
  static fs::path landmarks() { return *root_ / "data" / "landmarks"; }

  json base_config() const {
    json doc;
    doc["seed"] = 11;
    doc["paths"]["dataset_dir"] = images().string();
    doc["paths"]["landmark_dir"] = landmarks().string();
    return doc;
  }

  fs::path dir(const std::string& name) const {
    const fs::path d = root() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }

 private:
  static fs::path* root_;
};

fs::path* Cli::root_ = nullptr;

}  // namespace

TEST_F(Cli, PsfWritesArtifactsAndManifest) {
  const fs::path work = dir("psf_zero");
  json cfg = base_config();
  cfg["lens"]["source"] = "zero";
  const auto path = write_config(work, "c.json", cfg);
  const fs::path out = work / "out";
  ASSERT_EQ(run_tool("psf --config " + path.string() + " --out " + out.string()), 0);
  EXPECT_EQ(fs::file_size(out / "psf.raw"), 3u * 64 * 64 * 4);
  EXPECT_TRUE(fs::exists(out / "psf.png"));
  EXPECT_TRUE(fs::exists(out / "coefficients.json"));
  const json mtf = load_json(out / "mtf.json");
  EXPECT_EQ(mtf["psf_shape"], json::array({3, 64, 64}));

  const json manifest = load_json(out / "manifest.json");
  EXPECT_EQ(manifest["command"], "psf");
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["seed"], 11);
  EXPECT_EQ(manifest["run_id"].get<std::string>().size(), 16u);
  ASSERT_EQ(manifest["files"].size(), 4u);
  for (const auto& entry : manifest["files"]) {
    const std::string contents = slurp(out / entry["path"].get<std::string>());
    EXPECT_EQ(entry["sha256"], cli::sha256_hex(contents));
    EXPECT_EQ(entry["bytes"], contents.size());
  }
}

TEST_F(Cli, HardwareLensBlursMoreThanZeroLens) {
  const fs::path work = dir("psf_hw");
  json cfg = base_config();
  cfg["lens"]["source"] = "zero";
  ASSERT_EQ(run_tool("psf --config " + write_config(work, "z.json", cfg).string() + " --out " +
                     (work / "zero").string()),
            0);
  cfg["lens"]["source"] = "hardware";
  ASSERT_EQ(run_tool("psf --config " + write_config(work, "h.json", cfg).string() + " --out " +
                     (work / "hw").string()),
            0);
  const double zero = load_json(work / "zero" / "mtf.json")["mtf_highfreq_ratio_mean"];
  const double hw = load_json(work / "hw" / "mtf.json")["mtf_highfreq_ratio_mean"];
  EXPECT_LT(hw, zero);
  EXPECT_EQ(io::read_coefficients(work / "hw" / "coefficients.json"),
            io::read_coefficients(cli::hardware_coefficients_path()));
}

TEST_F(Cli, MissingCoefficientFileIsConfigErrorWithoutOutputs) {
  const fs::path work = dir("psf_missing");
  json cfg = base_config();
  cfg["lens"]["source"] = "file";
  cfg["lens"]["coefficients_file"] = "nope.json";
  const fs::path out = work / "out";
  EXPECT_EQ(run_tool("psf --config " + write_config(work, "c.json", cfg).string() + " --out " +
                     out.string()),
            2);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, CaptureThroughDeltaLensIsLossless) {
  const fs::path work = dir("capture_delta");
  json cfg = base_config();
  cfg["lens"]["source"] = "delta";
  cfg["noise"]["sigma"] = 0.0;
  ASSERT_EQ(run_tool("capture --config " + write_config(work, "c.json", cfg).string() +
                     " --out " + (work / "out").string()),
            0);
  const auto rows = read_csv(work / "out" / "captures.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"image", "mse", "psnr_db"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(std::stod(rows[i][1]), 1e-20);
    EXPECT_TRUE(rows[i][2] == "inf" || std::stod(rows[i][2]) > 150.0) << rows[i][2];
  }
  EXPECT_EQ(io::read_png(work / "out" / "captures" / "face_0000.png").height(), 32);
}

TEST_F(Cli, CaptureNoiseAndDefocusLowerPsnr) {
  const fs::path work = dir("capture_defocus");
  json cfg = base_config();
  cfg["lens"]["source"] = "delta";
  cfg["noise"]["sigma"] = 0.01;
  ASSERT_EQ(run_tool("capture --config " + write_config(work, "n.json", cfg).string() +
                     " --out " + (work / "noisy").string()),
            0);
  const double noisy = load_json(work / "noisy" / "capture_summary.json")["mean_psnr_db"];
  EXPECT_NEAR(noisy, 40.0, 1.5);

  cfg["lens"]["source"] = "defocus";
  cfg["lens"]["defocus_um"] = 0.5;
  ASSERT_EQ(run_tool("capture --config " + write_config(work, "d.json", cfg).string() +
                     " --out " + (work / "blur").string()),
            0);
  const double blurred = load_json(work / "blur" / "capture_summary.json")["mean_psnr_db"];
  EXPECT_LT(blurred, noisy);
}

TEST_F(Cli, CaptureOfEmptyDatasetIsConfigError) {
  const fs::path work = dir("capture_empty");
  fs::create_directories(work / "empty");
  json cfg = base_config();
  cfg["paths"]["dataset_dir"] = (work / "empty").string();
  EXPECT_EQ(run_tool("capture --config " + write_config(work, "c.json", cfg).string() +
                     " --out " + (work / "out").string()),
            2);
}

TEST_F(Cli, OptimizeWithZeroIterationsReturnsInitialLens) {
  const fs::path work = dir("optimize_zero");
  json cfg = base_config();
  cfg["lens"]["source"] = "hardware";
  cfg["stage1"]["iterations"] = 0;
  cfg["stage1"]["batch_size"] = 2;
  ASSERT_EQ(run_tool("optimize --config " + write_config(work, "c.json", cfg).string() +
                     " --out " + (work / "out").string()),
            0);
  EXPECT_EQ(io::read_coefficients(work / "out" / "coefficients.json"),
            io::read_coefficients(cli::hardware_coefficients_path()));
}

TEST_F(Cli, OptimizeIsDeterministic) {
  const fs::path work = dir("optimize_det");
  json cfg = base_config();
  cfg["stage1"]["iterations"] = 2;
  cfg["stage1"]["batch_size"] = 2;
  const auto path = write_config(work, "c.json", cfg).string();
  ASSERT_EQ(run_tool("optimize --config " + path + " --out " + (work / "a").string()), 0);
  ASSERT_EQ(run_shell("PRIVLENS_THREADS=1 " + std::string(PRIVLENS_BIN) + " optimize --config " +
                      path + " --out " + (work / "b").string()),
            0);
  for (const char* name : {"trace.csv", "coefficients.json", "psf_after.png"}) {
    EXPECT_EQ(slurp(work / "a" / name), slurp(work / "b" / name)) << name;
  }
  const auto trace = read_csv(work / "a" / "trace.csv");
  ASSERT_EQ(trace.size(), 3u);
  EXPECT_EQ(trace[0][0], "iteration");
  EXPECT_EQ(trace[0].size(), 5u + 15u);
  EXPECT_EQ(load_json(work / "a" / "manifest.json")["run_id"],
            load_json(work / "b" / "manifest.json")["run_id"]);

  ASSERT_EQ(run_tool("optimize --config " + path + " --seed 12 --out " + (work / "c").string()),
            0);
  EXPECT_NE(load_json(work / "a" / "manifest.json")["run_id"],
            load_json(work / "c" / "manifest.json")["run_id"]);
}

TEST_F(Cli, AttackIsDeterministicAndRanksLenses) {
  const fs::path work = dir("attack");
  json cfg = base_config();
  cfg["attack"]["lenses"] = json::array({json{{"source", "delta"}}, json{{"source", "hardware"}}});
  cfg["attack"]["methods"] = json::array({"wiener", json{{"type", "unsharp_blind"}}});
  const auto path = write_config(work, "c.json", cfg).string();
  ASSERT_EQ(run_tool("attack --config " + path + " --out " + (work / "a").string()), 0);
  ASSERT_EQ(run_shell("PRIVLENS_THREADS=3 " + std::string(PRIVLENS_BIN) + " attack --config " +
                      path + " --out " + (work / "b").string()),
            0);
  EXPECT_EQ(slurp(work / "a" / "attack_rows.csv"), slurp(work / "b" / "attack_rows.csv"));
  EXPECT_EQ(slurp(work / "a" / "attack_summary.json"), slurp(work / "b" / "attack_summary.json"));

  const auto rows = read_csv(work / "a" / "attack_rows.csv");
  EXPECT_EQ(rows.size(), 1u + 2 * 2 * 3);
  const json summary = load_json(work / "a" / "attack_summary.json");
  double delta_wiener = 0, hw_wiener = 0;
  for (const auto& agg : summary["aggregates"]) {
    if (agg["method"].get<std::string>().rfind("wiener", 0) == 0) {
      (agg["lens"] == "delta" ? delta_wiener : hw_wiener) = agg["mean_psnr_db"].get<double>();
    }
  }
  EXPECT_GT(delta_wiener, hw_wiener);
}

TEST_F(Cli, AttackDumpsRecoveredImagesAndSweepsNsr) {
  const fs::path work = dir("attack_dump");
  json cfg = base_config();
  cfg["attack"]["lenses"] = json::array({json{{"source", "zero"}}});
  const auto path = write_config(work, "c.json", cfg).string();
  ASSERT_EQ(run_tool("attack --config " + path + " --out " + (work / "out").string() +
                     " --methods wiener --nsr-sweep 0.001,0.01 --dump-images"),
            0);
  const auto rows = read_csv(work / "out" / "attack_rows.csv");
  EXPECT_EQ(rows.size(), 1u + 2 * 3);
  int dumped = 0;
  for (const auto& e : fs::recursive_directory_iterator(work / "out" / "recovered")) {
    dumped += e.is_regular_file();
  }
  EXPECT_EQ(dumped, 6);
}

TEST_F(Cli, UnknownAttackMethodIsConfigError) {
  const fs::path work = dir("attack_bad");
  const auto path = write_config(work, "c.json", base_config()).string();
  EXPECT_EQ(run_tool("attack --config " + path + " --out " + (work / "out").string() +
                     " --methods wiener,deblurgan"),
            2);
}

class CliLosses : public Cli {
 protected:
  // Triples whose references are copies of their sources.
  fs::path self_triples() const {
    const fs::path t = dir("self_triples");
    const fs::path src = root() / "triples";
    fs::copy(src / "sources", t / "sources");
    fs::copy(src / "sources", t / "references");
    fs::copy(src / "landmarks", t / "landmarks");
    return t;
  }

  json losses_config(const fs::path& triples) const {
    json cfg = base_config();
    cfg["paths"]["triples_dir"] = triples.string();
    cfg["lens"]["source"] = "delta";
    cfg["noise"]["sigma"] = 0.0;
    return cfg;
  }

  json run_losses(const json& cfg, const std::string& name, const std::string& extra = "") {
    const fs::path work = dir("losses_" + name);
    const int code = run_tool("losses --config " + write_config(work, "c.json", cfg).string() +
                              " --out " + (work / "out").string() + " " + extra);
    EXPECT_EQ(code, 0);
    return code == 0 ? load_json(work / "out" / "losses.json") : json{};
  }
};

TEST_F(CliLosses, IdentityTranslationOfSelfTriplesHasNoStyleOrPerceptualGap) {
  const json out = run_losses(losses_config(self_triples()), "identity", "--bundle identity");
  ASSERT_FALSE(out.is_null());
  EXPECT_EQ(out["bundle"], "identity");
  EXPECT_EQ(out["count"], 3);
  EXPECT_LT(out["components"]["sty"].get<double>(), 1e-9);
  EXPECT_LT(out["components"]["lpips"].get<double>(), 1e-9);
}

TEST_F(CliLosses, WeightsRecombineComponents) {
  json cfg = losses_config(root() / "triples");
  cfg["weights"] = {{"sty", 0}, {"ds", 0}, {"cyc", 0}, {"lpips", 0}, {"expr", 0}};
  const json zero = run_losses(cfg, "zero");
  ASSERT_FALSE(zero.is_null());
  EXPECT_EQ(zero["total"], zero["components"]["adv"]);

  cfg["weights"] = {{"sty", 1}, {"ds", 1}, {"cyc", 0.5}, {"lpips", 1}, {"expr", 1}};
  const json once = run_losses(cfg, "once");
  cfg["weights"]["cyc"] = 1.0;
  const json twice = run_losses(cfg, "twice");
  ASSERT_FALSE(once.is_null());
  ASSERT_FALSE(twice.is_null());
  const double cyc = once["components"]["cyc"];
  EXPECT_EQ(once["components"], twice["components"]);
  EXPECT_NEAR(twice["total"].get<double>() - once["total"].get<double>(), 0.5 * cyc, 1e-12);
}

TEST_F(CliLosses, MismatchedTriplesAreConfigError) {
  const fs::path t = self_triples();
  fs::remove(t / "references" / "face_0002.png");
  const fs::path work = dir("losses_mismatch");
  EXPECT_EQ(run_tool("losses --config " +
                     write_config(work, "c.json", losses_config(t)).string() + " --out " +
                     (work / "out").string()),
            2);
}

TEST_F(Cli, UnknownConfigKeyIsConfigError) {
  const fs::path work = dir("bad_key");
  json cfg = base_config();
  cfg["stage1"]["learning_rte"] = 0.1;
  EXPECT_EQ(run_tool("psf --config " + write_config(work, "c.json", cfg).string()), 2);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_tool(""), 2);
  EXPECT_EQ(run_tool("psf"), 2);
  EXPECT_EQ(run_tool("psf --config " + (root() / "absent.json").string()), 2);
  const fs::path work = dir("bad_override");
  const auto path = write_config(work, "c.json", base_config()).string();
  EXPECT_EQ(run_tool("psf --config " + path + " --set stage1.iterations=-3"), 2);
}

TEST_F(Cli, UnwritableOutputIsIoError) {
  const fs::path work = dir("io_error");
  const auto path = write_config(work, "c.json", base_config()).string();
  std::ofstream(work / "blocker") << "x";
  EXPECT_EQ(run_tool("psf --config " + path + " --out " + (work / "blocker" / "sub").string()), 3);
}

TEST_F(Cli, DefaultConfigRendersPsf) {
  const fs::path work = dir("default_config");
  const fs::path config = fs::path(PRIVLENS_SOURCE_DIR) / "configs" / "default.json";
  ASSERT_EQ(run_tool("psf --config " + config.string() + " --out " + (work / "out").string()), 0);
  const json manifest = load_json(work / "out" / "manifest.json");
  EXPECT_EQ(manifest["seed"], 42);
}
