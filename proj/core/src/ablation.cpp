#include "spanreid/ablation.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "spanreid/checkpoint.hpp"
#include "spanreid/errors.hpp"
#include "spanreid/evaluate.hpp"
#include "spanreid/reid_train.hpp"
#include "spanreid/span_train.hpp"

namespace spanreid::evalkit {

namespace {

void write_span_log(const std::filesystem::path& path,
                    const std::vector<span::EpochLog>& log) {
  std::ofstream out(path);
  out << "epoch,L_recon,L_area,L_div,L_total\n";
  for (const auto& e : log) {
    out << e.epoch << "," << e.recon << "," << e.area << "," << e.div << "," << e.total << "\n";
  }
}

void write_reid_log(const std::filesystem::path& path,
                    const std::vector<partnet::IterLog>& log) {
  std::ofstream out(path);
  out << "iteration,L_trip,L_ID,L_total\n";
  for (const auto& e : log) {
    out << e.iteration << "," << e.trip << "," << e.id << "," << e.total << "\n";
  }
}

}  // namespace

std::optional<double> AblationReport::mean_map(const std::string& variant) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.variant == variant && r.ok) {
      sum += r.mean_ap;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

AblationReport run_ablation(const RunConfig& cfg, const std::filesystem::path& data_root,
                            const std::vector<uint64_t>& seeds,
                            const std::filesystem::path& out_dir, const AblationHooks& hooks) {
  if (seeds.empty()) throw ConfigError("run_ablation: need at least one seed");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("run_ablation: cannot create output directory " + out_dir.string());

  const synth::DatasetSplit train = synth::load_split(data_root, "train", /*with_masks=*/true);
  const synth::DatasetSplit test = synth::load_split(data_root, "test", /*with_masks=*/true);
  const int n_ids = static_cast<int>(train.identities().size());

  std::vector<int> query_idx, gallery_idx;
  split_query_gallery(test, &query_idx, &gallery_idx);

  AblationReport report;
  for (uint64_t seed : seeds) {
    const std::filesystem::path seed_dir = out_dir / ("seed" + std::to_string(seed));
    std::filesystem::create_directories(seed_dir, ec);
    if (ec) throw IoError("run_ablation: cannot create " + seed_dir.string());

    // Stage 1 for this seed; shared by the two part-based variants.
    span::SpanNet span_net(cfg.span_model, train.n_views(), train.width, seed);
    std::vector<double> seed_iou;
    std::unique_ptr<partnet::SpanOutputs> train_masks, test_masks;
    std::string span_error;
    try {
      const auto span_log = span::train_span(span_net, train, cfg.span_train, seed);
      write_span_log(seed_dir / "span_loss.csv", span_log.log);
      io::save_checkpoint(seed_dir / "span.ckpt", "span", cfg,
                          {{"n_views", train.n_views()},
                           {"image_size", train.width},
                           {"train_seed", static_cast<int64_t>(seed)}},
                          span_net.state());
      const MaskQualityReport mq = evaluate_masks(span_net, test, cfg.eval.mask_threshold);
      seed_iou = mq.mean_iou;
      const int map = train.width / nn::ResEncoder<float>::downsample_factor();
      train_masks = std::make_unique<partnet::SpanOutputs>(
          partnet::precompute_span_outputs(span_net, train, map));
      test_masks = std::make_unique<partnet::SpanOutputs>(
          partnet::precompute_span_outputs(span_net, test, map));
    } catch (const std::exception& e) {
      span_error = e.what();
    }

    for (int v = 0; v < 3; ++v) {
      const std::string variant = kAblationVariants[v];
      AblationRow row;
      row.variant = variant;
      row.seed = seed;
      row.mean_iou = seed_iou;
      const bool needs_span = variant != "baseline";
      try {
        if (needs_span && !span_error.empty())
          throw NumericError("stage-1 training failed: " + span_error);
        if (hooks.before_variant) hooks.before_variant(variant, seed);

        RunConfig vcfg = cfg;
        vcfg.reid_model.global_only = variant == "baseline";
        vcfg.reid_train.distance = variant == "span_cpdm" ? "cpdm" : "euclidean";

        partnet::ReidNet net(vcfg.reid_model, train.width, n_ids, seed);
        const partnet::SpanOutputs* tr_masks = needs_span ? train_masks.get() : nullptr;
        const auto log = partnet::train_reid(net, train, tr_masks, vcfg.reid_train, seed);
        write_reid_log(seed_dir / ("reid_" + variant + "_loss.csv"), log.log);
        io::save_checkpoint(seed_dir / ("reid_" + variant + ".ckpt"), "reid", vcfg,
                            {{"image_size", train.width},
                             {"n_identities", n_ids},
                             {"train_seed", static_cast<int64_t>(seed)}},
                            net.state());

        const partnet::SpanOutputs* te_masks = needs_span ? test_masks.get() : nullptr;
        const auto features = partnet::extract_features(net, te_masks, test);
        std::vector<partnet::FeatureRecord> q, g;
        for (int i : query_idx) q.push_back(features[i]);
        for (int i : gallery_idx) g.push_back(features[i]);
        const partnet::DistanceMode mode = variant == "span_cpdm"
                                               ? partnet::DistanceMode::kCpdm
                                               : partnet::DistanceMode::kEuclidean;
        const ReidMetrics m = reid_metrics(q, g, net.feature_dim(), mode);
        row.rank1 = m.rank1;
        row.rank5 = m.rank5;
        row.mean_ap = m.mean_ap;
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }

  write_ablation_csv(out_dir / "report.csv", report);
  std::ofstream summary(out_dir / "summary.txt");
  summary << ablation_summary(report);
  return report;
}

void write_ablation_csv(const std::filesystem::path& path, const AblationReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write ablation report: " + path.string());
  out << "variant,seed,status,R-1,R-5,mAP,iou_front,iou_rear,iou_side\n";
  for (const auto& r : report.rows) {
    out << r.variant << "," << r.seed << "," << (r.ok ? "ok" : "failed");
    char buf[64];
    if (r.ok) {
      std::snprintf(buf, sizeof(buf), ",%.4f,%.4f,%.4f", r.rank1, r.rank5, r.mean_ap);
      out << buf;
    } else {
      out << ",,,";
    }
    for (size_t v = 0; v < 3; ++v) {
      if (v < r.mean_iou.size()) {
        std::snprintf(buf, sizeof(buf), ",%.4f", r.mean_iou[v]);
        out << buf;
      } else {
        out << ",";
      }
    }
    out << "\n";
  }
}

std::string ablation_summary(const AblationReport& report) {
  std::ostringstream out;
  out << "ablation summary (mean mAP over seeds)\n";
  for (const char* variant : kAblationVariants) {
    const auto m = report.mean_map(variant);
    out << "  " << variant << ": ";
    if (m) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", *m);
      out << buf;
    } else {
      out << "failed";
    }
    out << "\n";
  }
  for (const auto& r : report.rows) {
    if (!r.ok) {
      out << "  [failed] " << r.variant << " seed " << r.seed << ": " << r.error << "\n";
    }
  }
  const auto a = report.mean_map("baseline"), b = report.mean_map("span_cat"),
             c = report.mean_map("span_cpdm");
  if (a && b && c) {
    out << "ordering: baseline " << (*a < *b ? "<" : ">=") << " span_cat "
        << (*b < *c ? "<" : ">=") << " span_cpdm\n";
  }
  return out.str();
}

}  // namespace spanreid::evalkit
