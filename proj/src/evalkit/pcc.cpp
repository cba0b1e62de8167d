#include "evalkit/pcc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.hpp"

namespace hawkeye {

namespace {

template <typename T>
std::optional<double> pearson_impl(std::span<const T> u, std::span<const T> v) {
  require(u.size() == v.size() && u.size() >= 2, ErrorCode::invalid_argument,
          "pearson needs two vectors of equal length >= 2");
  const double n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double suv = 0.0, suu = 0.0, svv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mu, dv = v[i] - mv;
    suv += du * dv;
    suu += du * du;
    svv += dv * dv;
  }
  if (suu == 0.0 || svv == 0.0) return std::nullopt;
  return std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
}

}  // namespace

std::optional<double> pearson(std::span<const double> u, std::span<const double> v) {
  return pearson_impl(u, v);
}

std::optional<double> pearson(std::span<const float> u, std::span<const float> v) {
  return pearson_impl(u, v);
}

PccMatrix pcc_matrix(std::span<const int> steps, std::span<const nd::Tensor> diffs) {
  require(steps.size() >= 2, ErrorCode::invalid_argument, "PCC needs at least two step sizes");
  require(steps.size() == diffs.size(), ErrorCode::count_mismatch,
          "one difference batch per step size expected");
  for (const auto& d : diffs) {
    require(d.rank() == 2 && d.shape() == diffs.front().shape(), ErrorCode::shape_mismatch,
            "difference batches must share an N x K shape");
  }
  const std::size_t k = steps.size();
  const std::size_t n = static_cast<std::size_t>(diffs.front().dim(0));
  PccMatrix out;
  out.steps.assign(steps.begin(), steps.end());
  out.mean.assign(k * k, 0.0);
  out.n_valid.assign(k * k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double sum = 0.0;
      std::size_t valid = 0;
      for (std::size_t img = 0; img < n; ++img) {
        const auto r = pearson(diffs[i].sample(img), diffs[j].sample(img));
        if (!r) continue;
        sum += *r;
        ++valid;
      }
      const double mean = valid ? sum / static_cast<double>(valid) : 0.0;
      out.mean[i * k + j] = out.mean[j * k + i] = mean;
      out.n_valid[i * k + j] = out.n_valid[j * k + i] = valid;
    }
  }
  return out;
}

}  // namespace hawkeye
