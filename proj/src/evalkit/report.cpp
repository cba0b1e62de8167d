#include "evalkit/report.hpp"

#include <fstream>

#include <fmt/format.h>

#include "common/error.hpp"

namespace hawkeye {

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = "attack,method,m,detector_id,s,T,DR,FPR,ASR,ASR_AD,n_clean,n_adv\n";
  for (const MetricsRow& r : rows) {
    const Metrics& m = r.metrics;
    out += fmt::format("{},{},{},{},{},{:.6f},{},{:.6f},{:.6f},{:.6f},{},{}\n", r.attack, r.method,
                       r.m, r.detector_id, r.steps, r.threshold,
                       m.dr ? fmt::format("{:.6f}", *m.dr) : std::string(), m.fpr, m.asr,
                       m.asr_ad, m.n_clean, m.n_adv);
  }
  return out;
}

std::string roc_csv(const std::string& detector_id, const RocCurve& curve) {
  std::string out = "detector_id,T,FPR,DR\n";
  for (const RocPoint& p : curve.points) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f}\n", detector_id, p.threshold, p.fpr, p.dr);
  }
  out += fmt::format("{},AUC,{:.6f},\n", detector_id, curve.auc);
  return out;
}

std::string pcc_csv(const PccMatrix& matrix) {
  std::string out = "s1,s2,mean_pcc,n_valid\n";
  for (std::size_t i = 0; i < matrix.steps.size(); ++i) {
    for (std::size_t j = 0; j < matrix.steps.size(); ++j) {
      const std::size_t valid = matrix.valid(i, j);
      out += fmt::format("{},{},{},{}\n", matrix.steps[i], matrix.steps[j],
                         valid ? fmt::format("{:.6f}", matrix.at(i, j)) : std::string(), valid);
    }
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(f), ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    require(static_cast<bool>(f), ErrorCode::io, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorCode::io, "cannot move " + tmp.string() + " to " + path.string());
}

}  // namespace hawkeye
