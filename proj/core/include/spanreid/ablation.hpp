#pragma once

// Component ablation: (a) global feature + euclidean distance,
// (b) part features concatenated + euclidean, (c) part features + the
// co-occurrence-weighted distance. All variants per seed share the same
// data and training seed; the harness persists checkpoints, loss logs
// and a CSV report, and keeps going when a variant fails.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spanreid/config.hpp"
#include "spanreid/mask_eval.hpp"

namespace spanreid::evalkit {

inline constexpr const char* kAblationVariants[3] = {"baseline", "span_cat", "span_cpdm"};

struct AblationRow {
  std::string variant;
  uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double rank1 = 0.0, rank5 = 0.0, mean_ap = 0.0;
  std::vector<double> mean_iou;  // per view (mask network of this seed)
};

struct AblationReport {
  std::vector<AblationRow> rows;

  // Mean over seeds of a variant's successful runs; nullopt when none.
  std::optional<double> mean_map(const std::string& variant) const;
};

struct AblationHooks {
  // Called before each variant's training; tests inject failures here.
  std::function<void(const std::string& variant, uint64_t seed)> before_variant;
};

AblationReport run_ablation(const RunConfig& cfg, const std::filesystem::path& data_root,
                            const std::vector<uint64_t>& seeds,
                            const std::filesystem::path& out_dir,
                            const AblationHooks& hooks = {});

void write_ablation_csv(const std::filesystem::path& path, const AblationReport& report);
std::string ablation_summary(const AblationReport& report);

}  // namespace spanreid::evalkit
