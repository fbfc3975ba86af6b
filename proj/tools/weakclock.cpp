// Batch front-end: validate a run configuration or execute it.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "weakclock/config.hpp"
#include "weakclock/errors.hpp"
#include "weakclock/experiment.hpp"
#include "weakclock/parallel.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNumeric = 3, kGuard = 4 };

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "weakclock: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential weak-measurement Ramsey simulator"};
  app.set_version_flag("--version", std::string(WEAKCLOCK_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  int workers = weakclock::default_workers();
  std::string out;

  CLI::App* run = app.add_subcommand("run", "Execute a configuration and write its record");
  run->add_option("config", config_path, "YAML run configuration")->required();
  run->add_option("--seed", seed, "Override the configuration seed");
  run->add_option("--workers", workers, "Worker threads (default: WEAKCLOCK_WORKERS or 1)")
      ->check(CLI::Range(1, 4096));
  run->add_option("--out", out, "Output path ('-' for standard output)");

  CLI::App* validate = app.add_subcommand("validate", "Parse and check a configuration");
  validate->add_option("config", config_path, "YAML run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    weakclock::RunConfig config = weakclock::load_config(config_path);
    if (*validate) {
      const auto points = config.points();
      std::cout << "ok: " << weakclock::to_string(config.experiment) << ", " << points.size()
                << " point(s), " << config.modes.size() << " mode(s)\n";
      return kOk;
    }
    if (seed) config.seed = *seed;
    if (!out.empty()) config.out = out;
    weakclock::run_to_path(config, config.out, workers);
    return kOk;
  } catch (const weakclock::ConfigError& e) {
    return report("config error", e, kConfig);
  } catch (const weakclock::DomainError& e) {
    return report("config error", e, kConfig);
  } catch (const weakclock::GuardError& e) {
    return report("refused", e, kGuard);
  } catch (const weakclock::NumericError& e) {
    return report("numeric failure", e, kNumeric);
  } catch (const weakclock::DegenerateError& e) {
    return report("numeric failure", e, kNumeric);
  } catch (const std::exception& e) {
    return report("error", e, kOther);
  }
}
