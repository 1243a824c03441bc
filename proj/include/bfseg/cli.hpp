#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bfseg/data.hpp"

namespace bfseg::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int dispatch(int argc, char** argv);
/// `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat `key=value` text; blank lines and `#` comments are skipped.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Synthetic dataset recipe: scene parameters plus split sizes.
struct SynthDatasetSpec {
  SynthConfig scene;
  int train_samples = 200;
  int val_samples = 50;
  int test_samples = 0;
};

SynthDatasetSpec parse_synth_spec(const std::string& text);
std::string format_synth_spec(const SynthDatasetSpec& spec);

}  // namespace bfseg::cli
