#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

// End-to-end coverage of the command-line surface through real
// subprocesses: exit codes, artifact layout, rerun determinism.

namespace {

namespace fs = std::filesystem;

std::string cli() {
  const char* env = std::getenv("SPANREID_CLI");
  REQUIRE_MESSAGE(env != nullptr, "SPANREID_CLI must point at the binary");
  return env;
}

int run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "spanreid_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// small, fast configuration shared by the CLI pipeline tests
const char* kTinyConfig = R"({
  "seed": 5,
  "dataset": {"image_size": 32, "num_identities": 6, "num_cameras": 2,
               "samples_per_identity": 6, "occluder_prob": 0.0},
  "span": {"model": {"encoder_widths": [8, 12, 16, 24], "head_widths": [16, 12, 8]},
            "train": {"epochs": 2, "batch_size": 8}},
  "reid": {"model": {"trunk_widths": [8, 12, 16, 24], "branch_width": 16, "feature_dim": 8},
            "train": {"iterations": 12, "batch_p": 3, "batch_k": 2}}
})";

struct Pipeline {
  fs::path base, data, span_out, reid_out;
  fs::path config;
};

const Pipeline& pipeline() {
  static Pipeline p = [] {
    Pipeline pl;
    pl.base = temp_dir("cli_pipeline");
    pl.config = pl.base / "config.json";
    write_file(pl.config, kTinyConfig);
    pl.data = pl.base / "data";
    pl.span_out = pl.base / "span";
    pl.reid_out = pl.base / "reid";
    REQUIRE(std::system((cli() + " gen-data --config " + pl.config.string() + " --out " +
                         pl.data.string() + " >/dev/null 2>&1")
                            .c_str()) == 0);
    return pl;
  }();
  return p;
}

}  // namespace

TEST_CASE("gen-data writes a dataset and exits 0") {
  const Pipeline& p = pipeline();
  CHECK(fs::exists(p.data / "train" / "manifest"));
  CHECK(fs::exists(p.data / "test" / "manifest"));
  CHECK(fs::exists(p.data / "config.json"));
}

TEST_CASE("gen-data reruns byte-identically under the same seed") {
  const Pipeline& p = pipeline();
  const fs::path again = temp_dir("cli_gen_again");
  CHECK(run("gen-data --config " + p.config.string() + " --out " + again.string()) == 0);
  CHECK(slurp(again / "train" / "manifest") == slurp(p.data / "train" / "manifest"));
  CHECK(slurp(again / "test" / "manifest") == slurp(p.data / "test" / "manifest"));
}

TEST_CASE("malformed configs exit 2 naming the key") {
  const fs::path dir = temp_dir("cli_badcfg");
  write_file(dir / "bad.json", R"({"dataset": {"imge_size": 32}})");
  const std::string cmd = cli() + " gen-data --config " + (dir / "bad.json").string() +
                          " --out " + (dir / "out").string() + " 2> " +
                          (dir / "err.txt").string();
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(slurp(dir / "err.txt").find("imge_size") != std::string::npos);
}

TEST_CASE("train-span writes a checkpoint and a per-epoch loss log") {
  const Pipeline& p = pipeline();
  REQUIRE(run("train-span --config " + p.config.string() + " --data " + p.data.string() +
              " --out " + p.span_out.string()) == 0);
  CHECK(fs::exists(p.span_out / "span.ckpt"));
  const std::string log = slurp(p.span_out / "span_loss.csv");
  CHECK(log.rfind("epoch,L_recon,L_area,L_div,L_total", 0) == 0);
  // header + one row per configured epoch
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);
}

TEST_CASE("train-reid refuses to run without the stage-1 checkpoint") {
  const Pipeline& p = pipeline();
  CHECK(run("train-reid --config " + p.config.string() + " --data " + p.data.string() +
            " --out " + (p.base / "reid_nospan").string()) == 2);
}

TEST_CASE("train-reid then evaluate produce the advertised artifacts") {
  const Pipeline& p = pipeline();
  if (!fs::exists(p.span_out / "span.ckpt")) {
    REQUIRE(run("train-span --config " + p.config.string() + " --data " + p.data.string() +
                " --out " + p.span_out.string()) == 0);
  }
  REQUIRE(run("train-reid --config " + p.config.string() + " --data " + p.data.string() +
              " --span-ckpt " + (p.span_out / "span.ckpt").string() + " --out " +
              p.reid_out.string()) == 0);
  CHECK(fs::exists(p.reid_out / "reid.ckpt"));
  const std::string log = slurp(p.reid_out / "reid_loss.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 13);  // header + 12 iterations

  const fs::path eval_dir = p.base / "eval";
  REQUIRE(run("evaluate --reid-ckpt " + (p.reid_out / "reid.ckpt").string() + " --span-ckpt " +
              (p.span_out / "span.ckpt").string() + " --data " + p.data.string() + " --out " +
              eval_dir.string()) == 0);
  CHECK(fs::exists(eval_dir / "metrics.csv"));
  CHECK(fs::exists(eval_dir / "query_features.bin"));
  CHECK(fs::exists(eval_dir / "gallery_features.bin"));
  CHECK(slurp(eval_dir / "metrics.csv").rfind("R-1,R-5,mAP", 0) == 0);
}

TEST_CASE("self-match sanity mode ranks every query first") {
  const Pipeline& p = pipeline();
  REQUIRE(fs::exists(p.reid_out / "reid.ckpt"));
  const fs::path eval_dir = p.base / "eval_sanity";
  REQUIRE(run("evaluate --reid-ckpt " + (p.reid_out / "reid.ckpt").string() + " --span-ckpt " +
              (p.span_out / "span.ckpt").string() + " --data " + p.data.string() + " --out " +
              eval_dir.string() + " --self-match-sanity") == 0);
  const std::string metrics = slurp(eval_dir / "metrics.csv");
  // second line starts with R-1 = 1.000000
  CHECK(metrics.find("\n1.000000,") != std::string::npos);
}

TEST_CASE("export-masks writes the requested number of panels") {
  const Pipeline& p = pipeline();
  REQUIRE(fs::exists(p.span_out / "span.ckpt"));
  const fs::path panels = p.base / "panels";
  REQUIRE(run("export-masks --span-ckpt " + (p.span_out / "span.ckpt").string() + " --data " +
              p.data.string() + " --n 2 --out " + panels.string()) == 0);
  int count = 0;
  for (const auto& e : fs::directory_iterator(panels)) {
    count += e.path().extension() == ".png";
  }
  CHECK(count == 2);

  // n beyond the split size clamps with a warning instead of failing
  const fs::path panels2 = p.base / "panels_all";
  CHECK(run("export-masks --span-ckpt " + (p.span_out / "span.ckpt").string() + " --data " +
            p.data.string() + " --n 99999 --out " + panels2.string()) == 0);
}

TEST_CASE("evaluate rejects mismatched checkpoint/dataset combinations") {
  const Pipeline& p = pipeline();
  const fs::path other = temp_dir("cli_otherdata");
  // same generator but a different image size
  write_file(other / "cfg.json", R"({
    "seed": 5,
    "dataset": {"image_size": 48, "num_identities": 4, "num_cameras": 2,
                 "samples_per_identity": 4, "occluder_prob": 0.0}
  })");
  REQUIRE(run("gen-data --config " + (other / "cfg.json").string() + " --out " +
              (other / "data").string()) == 0);
  CHECK(run("evaluate --reid-ckpt " + (p.reid_out / "reid.ckpt").string() + " --span-ckpt " +
            (p.span_out / "span.ckpt").string() + " --data " + (other / "data").string() +
            " --out " + (other / "eval").string()) == 2);
}

TEST_CASE("deterministic reruns reproduce the final loss rows") {
  const Pipeline& p = pipeline();
  const fs::path run2 = p.base / "span_rerun";
  REQUIRE(run("train-span --config " + p.config.string() + " --data " + p.data.string() +
              " --out " + run2.string() + " --deterministic") == 0);
  const std::string a = slurp(p.span_out / "span_loss.csv");
  const std::string b = slurp(run2 / "span_loss.csv");
  CHECK(a == b);
}
