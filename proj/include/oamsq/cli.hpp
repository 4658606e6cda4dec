#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oamsq/error.hpp"

namespace CLI {
class App;
}

namespace oamsq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitCalibration = 5;

int exit_code_for(ErrorKind kind);

struct Options {
  std::vector<std::string> configs;
  std::string out_dir;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  // fit
  std::string image;
  std::string model = "auto";
  double pitch_um = 0.0;
  // oam
  std::string field;
  int max_m = 16;
};

// Builds the command table; exposed so tests can reflect over every flag.
std::unique_ptr<CLI::App> build_app(Options& options);

int run(int argc, char** argv, char** envp, std::ostream& out, std::ostream& err);

}  // namespace oamsq::cli
