#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rcm/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"recurrent chunking over long documents: data, training, evaluation"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path, mode_name;
  std::uint64_t seed = 0;
  bool resume = false;
  std::vector<int> strides = {8, 16, 32};
  std::vector<std::uint64_t> ids;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--config", config_path, "run config file")->required();
  gen->add_option("--out", out_path, "dataset output path")->required();
  gen->add_option("--seed", seed, "generation seed (default: the config seed)");

  CLI::App* train = app.add_subcommand("train", "train a model into a run directory");
  train->add_option("--config", config_path, "run config file")->required();
  train->add_option("--data", data_path, "training dataset")->required();
  train->add_option("--out", out_path, "run directory")->required();
  train->add_option("--mode", mode_name,
                    "rcm-gated (default), rcm-lstm, rcm-no-rl or baseline");
  train->add_option("--seed", seed, "training seed (default: the config seed)");
  train->add_flag("--resume", resume, "continue from the run directory's checkpoint");

  CLI::App* eval = app.add_subcommand(
      "eval", "evaluate a run directory's checkpoint and write metric files");
  eval->add_option("--config", config_path, "run config file")->required();
  eval->add_option("--data", data_path, "evaluation dataset")->required();
  eval->add_option("--out", out_path, "run directory holding checkpoint.bin")->required();

  CLI::App* sweep = app.add_subcommand(
      "sweep", "train/predict stride grid for the fixed-stride baseline");
  sweep->add_option("--config", config_path, "run config file")->required();
  sweep->add_option("--data", data_path, "dataset (split 80/20 internally)")->required();
  sweep->add_option("--out", out_path, "sweep output directory")->required();
  sweep->add_option("--strides", strides, "stride list for both grid axes")
      ->delimiter(',');
  sweep->add_option("--seed", seed, "training seed (default: the config seed)");

  CLI::App* trace = app.add_subcommand(
      "trace", "write per-segment read traces for chosen examples");
  trace->add_option("--config", config_path, "run config file")->required();
  trace->add_option("--data", data_path, "dataset holding the examples")->required();
  trace->add_option("--out", out_path, "run directory holding checkpoint.bin")->required();
  trace->add_option("--ids", ids, "example ids to trace")->delimiter(',')->required();

  CLI11_PARSE(app, argc, argv);

  try {
    rcm::RunConfig cfg = rcm::RunConfig::load(config_path);
    CLI::App* cmd = app.get_subcommands().front();
    auto seeded = [&](CLI::App* c) {
      return c->count("--seed") > 0 ? seed : cfg.train.seed;
    };
    if (cmd == gen) {
      rcm::run_gen_data(cfg, seeded(gen), out_path, std::cout);
    } else if (cmd == train) {
      rcm::run_train(cfg, mode_name, seeded(train), data_path, out_path, resume,
                     std::cout);
    } else if (cmd == eval) {
      rcm::run_eval(cfg, out_path, data_path, std::cout);
    } else if (cmd == sweep) {
      rcm::run_sweep(cfg, seeded(sweep), data_path, strides, strides, out_path,
                     std::cout);
    } else {
      rcm::run_trace(cfg, out_path, data_path, ids, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
