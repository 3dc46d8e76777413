#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace questcnn::cli {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kNumeric = 3 };

// Default output directory when --out-dir is not given.
inline constexpr const char* kOutDirEnv = "QUESTCNN_OUT_DIR";

// Parses and runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace questcnn::cli
