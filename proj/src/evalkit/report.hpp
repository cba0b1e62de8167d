#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "evalkit/metrics.hpp"
#include "evalkit/pcc.hpp"
#include "evalkit/roc.hpp"

namespace hawkeye {

struct MetricsRow {
  std::string attack;  // whitebox, blackbox or distortion
  std::string method;  // fgsm, ifgsm, brightness, ...
  int m = 0;           // perturbation multiplier, 0 when not applicable
  std::string detector_id;
  std::string steps;   // "64" or "64+128"
  double threshold = 0.0;
  Metrics metrics;
};

// attack,method,m,detector_id,s,T,DR,FPR,ASR,ASR_AD,n_clean,n_adv with every
// float at six decimals; DR is left empty when undefined.
std::string metrics_csv(std::span<const MetricsRow> rows);
// detector_id,T,FPR,DR per point, then "<id>,AUC,<auc>," as a summary row.
std::string roc_csv(const std::string& detector_id, const RocCurve& curve);
// s1,s2,mean_pcc,n_valid for every ordered pair.
std::string pcc_csv(const PccMatrix& matrix);

// Writes through a temporary file renamed into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hawkeye
