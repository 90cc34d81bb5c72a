#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rcm/chunking.hpp"
#include "rcm/metrics.hpp"
#include "rcm/runner.hpp"
#include "rcm/trainer.hpp"

namespace py = pybind11;

namespace {

rcm::RunConfig load_config(const std::string& path) { return rcm::RunConfig::load(path); }

std::string gen_data(const std::string& config_path, std::uint64_t seed,
                     const std::string& out_path) {
  std::ostringstream log;
  rcm::run_gen_data(load_config(config_path), seed, out_path, log);
  return log.str();
}

std::string train(const std::string& config_path, const std::string& mode,
                  std::uint64_t seed, const std::string& data_path,
                  const std::string& out_dir, bool resume) {
  std::ostringstream log;
  rcm::run_train(load_config(config_path), mode, seed, data_path, out_dir, resume, log);
  return log.str();
}

py::dict evaluate(const std::string& config_path, const std::string& run_dir,
                  const std::string& data_path) {
  std::ostringstream log;
  rcm::EvalSummary s =
      rcm::run_eval(load_config(config_path), run_dir, data_path, log);
  py::dict out;
  out["mean_f1"] = s.mean_f1;
  out["answerable_f1"] = s.answerable_f1;
  out["unanswerable_detection"] = s.unanswerable_detection;
  out["hit_rate"] = s.hit;
  out["n_examples"] = s.n_examples;
  out["n_answerable"] = s.n_answerable;
  out["n_unanswerable"] = s.n_unanswerable;
  return out;
}

std::string trace(const std::string& config_path, const std::string& run_dir,
                  const std::string& data_path, const std::vector<std::uint64_t>& ids) {
  std::ostringstream log;
  rcm::run_trace(load_config(config_path), run_dir, data_path, ids, log);
  return log.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "recurrent chunking over long documents: core operations";

  m.def("word_f1", &rcm::word_f1, py::arg("prediction"), py::arg("references"),
        "Word-level F1 with multiset intersection, max over references.");
  m.def("accumulated_rewards", &rcm::accumulated_rewards, py::arg("q"), py::arg("r"),
        "Backward reward recursion R_c = q_c r_c + (1 - q_c) R_{c+1}.");
  m.def("lr_schedule", &rcm::lr_schedule, py::arg("step"), py::arg("peak"),
        py::arg("warmup"), py::arg("total"),
        "Linear warmup to peak, then linear decay to zero.");
  m.def("spearman", &rcm::spearman, py::arg("a"), py::arg("b"),
        "Spearman rank correlation with average ranks on ties.");
  m.def("gen_data", &gen_data, py::arg("config_path"), py::arg("seed"),
        py::arg("out_path"), "Generate a synthetic dataset; returns the log text.");
  m.def("train", &train, py::arg("config_path"), py::arg("mode"), py::arg("seed"),
        py::arg("data_path"), py::arg("out_dir"), py::arg("resume") = false,
        "Train a model into a run directory; returns the log text.");
  m.def("evaluate", &evaluate, py::arg("config_path"), py::arg("run_dir"),
        py::arg("data_path"),
        "Evaluate a run directory's checkpoint; returns summary metrics.");
  m.def("trace", &trace, py::arg("config_path"), py::arg("run_dir"),
        py::arg("data_path"), py::arg("ids"),
        "Write per-segment read traces for the given example ids.");
}
