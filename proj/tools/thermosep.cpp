#include "thermosep/errors.hpp"
#include "thermosep/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
  CLI::App app{"thermosep: separability sweeps for thermal and quasifree states"};
  std::string task;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<int> workers;
  bool raw = false;

  app.add_option("task", task, "gibbs_scan | order_classify | hightemp_report | quasifree_scan | "
                               "continuum_scaling | fluctuation_sweep")
      ->required();
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads (falls back to THERMOSEP_WORKERS)");
  app.add_flag("--raw-paper-forms", raw, "use the literal generator and inequality forms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      throw thermosep::ConfigError("cannot read config file " + config_path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const auto config = thermosep::parse_config(buf.str());
    if (thermosep::task_from_name(task) != config.task) {
      throw thermosep::ConfigError("task '" + task + "' does not match config task '" +
                                   thermosep::to_string(config.task) + "'");
    }
    return thermosep::run(config, {out_dir, workers, raw});
  } catch (const thermosep::ConfigError& e) {
    std::cerr << "thermosep: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "thermosep: " << e.what() << "\n";
    return 2;
  }
}
