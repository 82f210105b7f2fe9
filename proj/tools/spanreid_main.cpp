// Command-line front end for the whole pipeline: dataset generation, the
// two training stages, retrieval evaluation, the component ablation and
// mask-panel export. Every command is reproducible from (config, seed);
// exit codes: 0 ok, 2 configuration/usage, 3 I/O, 4 numerical abort.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spanreid/ablation.hpp"
#include "spanreid/checkpoint.hpp"
#include "spanreid/config.hpp"
#include "spanreid/errors.hpp"
#include "spanreid/evaluate.hpp"
#include "spanreid/mask_export.hpp"
#include "spanreid/reid_train.hpp"
#include "spanreid/span_train.hpp"

using namespace spanreid;

namespace {

struct CommonOpts {
  std::string config_path;
  bool has_seed = false;
  uint64_t seed = 0;
  bool deterministic = false;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? parse_config("{}") : load_config(opts.config_path);
  if (opts.has_seed) cfg.seed = opts.seed;
  if (opts.deterministic) cfg.deterministic = true;
  return cfg;
}

std::filesystem::path default_data_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("SPANREID_DATA_ROOT")) return env;
  throw ConfigError("no data directory: pass --data or set SPANREID_DATA_ROOT");
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

int cmd_gen_data(const CommonOpts& opts, const std::string& out_dir) {
  const RunConfig cfg = resolve_config(opts);
  ensure_dir(out_dir);
  const synth::GeneratedDataset ds = synth::generate_dataset(cfg.dataset, cfg.seed, out_dir);
  write_text(std::filesystem::path(out_dir) / "config.json", config_to_json(cfg));
  std::cout << "generated " << ds.train.records.size() << " train / "
            << ds.test.records.size() << " test samples under " << out_dir << "\n";
  return 0;
}

int cmd_train_span(const CommonOpts& opts, const std::string& data_dir,
                   const std::string& out_dir) {
  const RunConfig cfg = resolve_config(opts);
  const auto root = default_data_root(data_dir);
  ensure_dir(out_dir);
  const synth::DatasetSplit train = synth::load_split(root, "train");
  if (train.width != train.height) throw ConfigError("train-span: non-square images");

  span::SpanNet net(cfg.span_model, train.n_views(), train.width, cfg.seed);
  std::ofstream log(std::filesystem::path(out_dir) / "span_loss.csv");
  if (!log) throw IoError("cannot write loss log");
  log << "epoch,L_recon,L_area,L_div,L_total\n";
  const auto t0 = std::chrono::steady_clock::now();
  span::train_span(net, train, cfg.span_train, cfg.seed, [&](const span::EpochLog& e) {
    log << e.epoch << "," << e.recon << "," << e.area << "," << e.div << "," << e.total << "\n";
    log.flush();
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("epoch %3d  recon %.4f  area %.4f  div %.4f  total %.4f  (%.1fs)\n", e.epoch,
                e.recon, e.area, e.div, e.total, dt);
    std::fflush(stdout);
  });
  io::save_checkpoint(std::filesystem::path(out_dir) / "span.ckpt", "span", cfg,
                      {{"n_views", train.n_views()}, {"image_size", train.width}},
                      net.state());
  std::cout << "wrote " << (std::filesystem::path(out_dir) / "span.ckpt").string() << "\n";
  return 0;
}

int cmd_train_reid(const CommonOpts& opts, const std::string& data_dir,
                   const std::string& span_ckpt, const std::string& out_dir) {
  const RunConfig cfg = resolve_config(opts);
  const auto root = default_data_root(data_dir);
  ensure_dir(out_dir);
  if (span_ckpt.empty())
    throw ConfigError("train-reid: a frozen mask-network checkpoint is required (--span-ckpt)");
  const io::Checkpoint span_c = io::load_checkpoint(span_ckpt);
  if (span_c.kind != "span") throw ConfigError("train-reid: --span-ckpt is not a span checkpoint");

  const synth::DatasetSplit train = synth::load_split(root, "train");
  if (span_c.extra.at("image_size") != train.width)
    throw ConfigError("train-reid: checkpoint image size does not match the dataset");
  if (span_c.extra.at("n_views") != 3)
    throw ConfigError("train-reid: re-ID expects a 3-view mask network");

  span::SpanNet span_net(span_c.config.span_model, 3, train.width, 0);
  span_net.load_state(span_c.tensors);
  const std::string span_hash = io::state_hash(span_net.state());

  const int map = train.width / nn::ResEncoder<float>::downsample_factor();
  partnet::SpanOutputs outs;
  const bool needs_masks = !cfg.reid_model.global_only;
  if (needs_masks) {
    outs = partnet::precompute_span_outputs(span_net, train, map);
    if (outs.degenerate_count > 0) {
      std::cerr << "warning: " << outs.degenerate_count
                << " images produced all-zero masks; using uniform area ratios for them\n";
    }
  }

  const int n_ids = static_cast<int>(train.identities().size());
  partnet::ReidNet net(cfg.reid_model, train.width, n_ids, cfg.seed);
  std::ofstream log(std::filesystem::path(out_dir) / "reid_loss.csv");
  if (!log) throw IoError("cannot write loss log");
  log << "iteration,L_trip,L_ID,L_total\n";
  const auto t0 = std::chrono::steady_clock::now();
  partnet::train_reid(net, train, needs_masks ? &outs : nullptr, cfg.reid_train, cfg.seed,
                      [&](const partnet::IterLog& e) {
                        log << e.iteration << "," << e.trip << "," << e.id << "," << e.total
                            << "\n";
                        if (e.iteration % 50 == 0) {
                          const double dt = std::chrono::duration<double>(
                                                std::chrono::steady_clock::now() - t0)
                                                .count();
                          std::printf("iter %5d  trip %.4f  id %.4f  (%.1fs)\n", e.iteration,
                                      e.trip, e.id, dt);
                          std::fflush(stdout);
                        }
                      });

  if (io::state_hash(span_net.state()) != span_hash)
    throw NumericError("train-reid: mask network changed during stage-2 training");
  io::save_checkpoint(std::filesystem::path(out_dir) / "reid.ckpt", "reid", cfg,
                      {{"image_size", train.width},
                       {"n_identities", n_ids},
                       {"feature_dim", cfg.reid_model.feature_dim}},
                      net.state());
  std::cout << "wrote " << (std::filesystem::path(out_dir) / "reid.ckpt").string() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& reid_ckpt, const std::string& span_ckpt,
                 const std::string& data_dir, const std::string& out_dir,
                 bool include_same_camera, bool self_match_sanity) {
  const auto root = default_data_root(data_dir);
  ensure_dir(out_dir);
  const io::Checkpoint reid_c = io::load_checkpoint(reid_ckpt);
  if (reid_c.kind != "reid") throw ConfigError("evaluate: --reid-ckpt is not a reid checkpoint");

  const synth::DatasetSplit test = synth::load_split(root, "test");
  if (reid_c.extra.at("image_size") != test.width)
    throw ConfigError("evaluate: checkpoint image size does not match the dataset");

  const int n_ids = static_cast<int>(reid_c.extra.at("n_identities"));
  partnet::ReidNet net(reid_c.config.reid_model, test.width, n_ids, 0);
  net.load_state(reid_c.tensors);

  partnet::SpanOutputs outs;
  const bool needs_masks = !reid_c.config.reid_model.global_only;
  if (needs_masks) {
    if (span_ckpt.empty()) throw ConfigError("evaluate: --span-ckpt required for part features");
    const io::Checkpoint span_c = io::load_checkpoint(span_ckpt);
    if (span_c.kind != "span") throw ConfigError("evaluate: --span-ckpt is not a span checkpoint");
    if (span_c.extra.at("image_size") != test.width)
      throw ConfigError("evaluate: span checkpoint image size does not match the dataset");
    span::SpanNet span_net(span_c.config.span_model, 3, test.width, 0);
    span_net.load_state(span_c.tensors);
    const int map = test.width / nn::ResEncoder<float>::downsample_factor();
    outs = partnet::precompute_span_outputs(span_net, test, map);
    if (outs.degenerate_count > 0) {
      std::cerr << "warning: " << outs.degenerate_count
                << " images produced all-zero masks; using uniform area ratios for them\n";
    }
  }

  const auto features = partnet::extract_features(net, needs_masks ? &outs : nullptr, test);
  std::vector<partnet::FeatureRecord> q, g;
  if (self_match_sanity) {
    // every image queries the full set, self-matches included
    q = features;
    g = features;
    include_same_camera = true;
  } else {
    std::vector<int> query_idx, gallery_idx;
    evalkit::split_query_gallery(test, &query_idx, &gallery_idx);
    for (int i : query_idx) q.push_back(features[i]);
    for (int i : gallery_idx) g.push_back(features[i]);
  }

  const int dim = net.feature_dim();
  partnet::write_features(std::filesystem::path(out_dir) / "query_features.bin", q, dim);
  partnet::write_features(std::filesystem::path(out_dir) / "gallery_features.bin", g, dim);

  const partnet::DistanceMode mode = reid_c.config.reid_train.distance == "cpdm" && needs_masks
                                         ? partnet::DistanceMode::kCpdm
                                         : partnet::DistanceMode::kEuclidean;
  evalkit::RankingResult ranking;
  const evalkit::ReidMetrics m =
      evalkit::reid_metrics(q, g, dim, mode, !include_same_camera, &ranking);

  char buf[256];
  std::snprintf(buf, sizeof(buf), "R-1,R-5,mAP\n%.6f,%.6f,%.6f\n", m.rank1, m.rank5, m.mean_ap);
  write_text(std::filesystem::path(out_dir) / "metrics.csv", buf);

  std::ostringstream summary;
  summary << "queries " << m.n_query << " (skipped " << m.n_skipped << "), gallery "
          << m.n_gallery << "\n";
  std::snprintf(buf, sizeof(buf), "R-1 %.4f  R-5 %.4f  mAP %.4f\n", m.rank1, m.rank5, m.mean_ap);
  summary << buf;
  write_text(std::filesystem::path(out_dir) / "summary.txt", summary.str());
  std::cout << summary.str();
  return 0;
}

int cmd_export_masks(const std::string& span_ckpt, const std::string& data_dir,
                     const std::string& split, int n, uint64_t seed,
                     const std::string& out_dir) {
  const auto root = default_data_root(data_dir);
  ensure_dir(out_dir);
  const io::Checkpoint span_c = io::load_checkpoint(span_ckpt);
  if (span_c.kind != "span") throw ConfigError("export-masks: not a span checkpoint");
  const synth::DatasetSplit data = synth::load_split(root, split);
  if (span_c.extra.at("image_size") != data.width)
    throw ConfigError("export-masks: checkpoint image size does not match the dataset");
  span::SpanNet net(span_c.config.span_model, static_cast<int>(span_c.extra.at("n_views")),
                    data.width, 0);
  net.load_state(span_c.tensors);
  const int written = evalkit::export_mask_panels(net, data, n, seed, out_dir);
  std::cout << "wrote " << written << " panels under " << out_dir << "\n";
  return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& data_dir,
               const std::string& seeds_csv, const std::string& out_dir) {
  const RunConfig cfg = resolve_config(opts);
  const auto root = default_data_root(data_dir);
  std::vector<uint64_t> seeds;
  std::stringstream ss(seeds_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw ConfigError("ablate: --seeds must list at least one seed");
  const evalkit::AblationReport report = evalkit::run_ablation(cfg, root, seeds, out_dir);
  std::cout << evalkit::ablation_summary(report);
  for (const auto& row : report.rows) {
    if (!row.ok) return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantics-guided part attention + co-occurrence re-ID pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string data_dir, out_dir, span_ckpt, reid_ckpt, seeds_csv = "1,2,3", split = "test";
  int n_panels = 8;
  bool include_same_camera = false;
  bool self_match_sanity = false;
  uint64_t export_seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration");
    cmd->add_option("--seed", opts.seed, "override the config seed")
        ->each([&](const std::string&) { opts.has_seed = true; });
    cmd->add_flag("--deterministic", opts.deterministic, "force deterministic mode");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_common(gen);
  gen->add_option("--out", out_dir, "dataset root directory")->required();

  CLI::App* tspan = app.add_subcommand("train-span", "stage 1: train the mask network");
  add_common(tspan);
  tspan->add_option("--data", data_dir, "dataset root");
  tspan->add_option("--out", out_dir, "output directory")->required();

  CLI::App* treid = app.add_subcommand("train-reid", "stage 2: train the re-ID network");
  add_common(treid);
  treid->add_option("--data", data_dir, "dataset root");
  treid->add_option("--span-ckpt", span_ckpt, "frozen stage-1 checkpoint");
  treid->add_option("--out", out_dir, "output directory")->required();

  CLI::App* ev = app.add_subcommand("evaluate", "retrieval metrics on the test split");
  ev->add_option("--reid-ckpt", reid_ckpt, "stage-2 checkpoint")->required();
  ev->add_option("--span-ckpt", span_ckpt, "stage-1 checkpoint");
  ev->add_option("--data", data_dir, "dataset root");
  ev->add_option("--out", out_dir, "output directory")->required();
  ev->add_flag("--include-same-camera", include_same_camera,
               "keep same-identity same-camera gallery entries");
  ev->add_flag("--self-match-sanity", self_match_sanity,
               "query the full test set against itself (expects R-1 = 1)");

  CLI::App* ex = app.add_subcommand("export-masks", "write mask overlay panels");
  ex->add_option("--span-ckpt", span_ckpt, "stage-1 checkpoint")->required();
  ex->add_option("--data", data_dir, "dataset root");
  ex->add_option("--split", split, "dataset split (default test)");
  ex->add_option("--n", n_panels, "number of panels");
  ex->add_option("--seed", export_seed, "sample selection seed");
  ex->add_option("--out", out_dir, "output directory")->required();

  CLI::App* ab = app.add_subcommand("ablate", "train and score the three variants");
  add_common(ab);
  ab->add_option("--data", data_dir, "dataset root");
  ab->add_option("--seeds", seeds_csv, "comma-separated training seeds");
  ab->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(opts, out_dir);
    if (tspan->parsed()) return cmd_train_span(opts, data_dir, out_dir);
    if (treid->parsed()) return cmd_train_reid(opts, data_dir, span_ckpt, out_dir);
    if (ev->parsed()) return cmd_evaluate(reid_ckpt, span_ckpt, data_dir, out_dir,
                                          include_same_camera, self_match_sanity);
    if (ex->parsed())
      return cmd_export_masks(span_ckpt, data_dir, split, n_panels, export_seed, out_dir);
    if (ab->parsed()) return cmd_ablate(opts, data_dir, seeds_csv, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
