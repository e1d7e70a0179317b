#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "iwatsuka.h"

namespace {

const char* kind_name(iw_status s) {
  switch (s) {
    case IW_INVALID_ARGUMENT: return "validation";
    case IW_NUMERICAL_ERROR: return "numerical";
    case IW_SELFTEST_FAILED: return "selftest";
    default: return "internal";
  }
}

// One line, double quotes escaped, so the message survives `cut` and friends.
std::string single_line(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '\n' || c == '\r') {
      out += ' ';
    } else if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band functions, edge currents and inverse problems for Iwatsuka magnetic fields"};
  std::string config;
  std::string out_dir = ".";
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Directory for the artifacts");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  app.add_option("--seed", seed, "Overrides the config seed");
  app.set_version_flag("--version", iw_version());
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error code=1 kind=validation message=\"%s\"\n", single_line(e.what()).c_str());
    return 1;
  }

  iw_set_threads(threads);
  const std::uint64_t seed_value = seed.value_or(0);
  const iw_status status = iw_run_config_file(config.c_str(), out_dir.c_str(), seed ? &seed_value : nullptr);
  std::fputs(iw_last_output(), stdout);
  if (status != IW_OK) {
    std::fprintf(stderr, "error code=%d kind=%s message=\"%s\"\n", static_cast<int>(status), kind_name(status),
                 single_line(iw_last_error()).c_str());
  }
  return static_cast<int>(status);
}
