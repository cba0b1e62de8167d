#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hawkeye::testing {

struct PropertyResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

// Autodiff against central differences on every layer kind, >= 10 random
// instances per network family.
PropertyResult gradient_property(int instances = 10);

// Idempotence, lattice membership and reference stability of quantize() on
// `pixels` random k/255 values at random step sizes.
PropertyResult quantization_property(int pixels = 10000);

// FGSM and I-FGSM outputs stay in [0,1] and within eps of the input on
// `images` random images against an untrained classifier.
PropertyResult attack_bounds_property(int images = 1000);

// FPR and DR non-increasing in T, AUC in [0,1], separated scores give 1,
// constant scores give 0.5.
PropertyResult roc_property();

// ASR-AD = ASR * (1 - DR) on random verdict sets.
PropertyResult asr_ad_property(int trials = 200);

// Classifier, AED and corpus survive save/load bit-exactly.
PropertyResult checkpoint_property(const std::filesystem::path& dir);

std::vector<PropertyResult> all_properties(const std::filesystem::path& scratch);

}  // namespace hawkeye::testing
