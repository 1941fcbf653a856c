// Copyright 2026 The safevisor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings: configuration loading, the synthesis pipeline, Monte-Carlo
// runs, the finite-instance oracle and a few model-level helpers.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <sstream>
#include <string>

#include "safevisor/advisor.hpp"
#include "safevisor/automata.hpp"
#include "safevisor/config.hpp"
#include "safevisor/error.hpp"
#include "safevisor/experiment.hpp"
#include "safevisor/game.hpp"
#include "safevisor/oracle.hpp"
#include "safevisor/runtime.hpp"

namespace py = pybind11;

namespace safevisor {
namespace {

RunMode parse_mode(const std::string& mode) {
  if (mode == "supervised") return RunMode::kSupervised;
  if (mode == "baseline") return RunMode::kBaseline;
  if (mode == "advisor") return RunMode::kAdvisorOnly;
  throw ConfigError("unknown run mode '" + mode + "' (supervised, baseline, advisor)");
}

py::dict summary_dict(const MetricsSummary& s) {
  py::dict d;
  d["episodes"] = s.episodes;
  d["violations"] = s.violations;
  d["satisfaction_rate"] = s.satisfaction_rate;
  d["acceptance_rate"] = s.acceptance_rate;
  d["decisions"] = s.decisions;
  d["accepted"] = s.accepted;
  d["rejected_risk"] = s.rejected_risk;
  d["rejected_relation"] = s.rejected_relation;
  d["malformed_inputs"] = s.malformed_inputs;
  d["relation_violations"] = s.relation_violations;
  d["sink_entries"] = s.sink_entries;
  d["latency_mean_us"] = s.latency_mean_us;
  d["latency_std_us"] = s.latency_std_us;
  d["config_digest"] = s.config_digest;
  return d;
}

// V̄_n as an array of shape (H + 1, Q, cells + 1), SINK last.
py::array_t<double> value_array(const ValueTables& t) {
  py::array_t<double> out({static_cast<py::ssize_t>(t.horizon() + 1),
                           static_cast<py::ssize_t>(t.num_q()),
                           static_cast<py::ssize_t>(t.rows())});
  auto v = out.mutable_unchecked<3>();
  for (int n = 0; n <= t.horizon(); ++n) {
    for (int q = 0; q < t.num_q(); ++q) {
      const auto slice = t.slice(n, q);
      for (std::size_t x = 0; x < slice.size(); ++x) v(n, q, x) = slice[x];
    }
  }
  return out;
}

}  // namespace
}  // namespace safevisor

PYBIND11_MODULE(_safevisor, m) {
  using namespace safevisor;
  m.doc() = "Safety advisor and supervisor synthesis for two-player stochastic games";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<IndexError>(m, "IndexError", error.ptr());
  py::register_exception<RelationInfeasible>(m, "RelationInfeasible", error.ptr());
  py::register_exception<InterfaceInfeasible>(m, "InterfaceInfeasible", error.ptr());
  py::register_exception<HorizonExceeded>(m, "HorizonExceeded", error.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<InfeasibleBudget>(m, "InfeasibleBudget", error.ptr());

  py::class_<LinearGaussianGame>(m, "Game")
      .def_readonly("A", &LinearGaussianGame::A)
      .def_readonly("B", &LinearGaussianGame::B)
      .def_readonly("D", &LinearGaussianGame::D)
      .def_readonly("R", &LinearGaussianGame::R_noise)
      .def("step",
           [](const LinearGaussianGame& g, const Vector& x, const Vector& u, const Vector& w,
              const Vector& noise) { return step_dynamics(g, x, u, w, noise); },
           py::arg("x"), py::arg("u"), py::arg("w"), py::arg("noise"))
      .def("output", [](const LinearGaussianGame& g, const Vector& x) { return output(g, x); });

  py::class_<Dfa>(m, "Dfa")
      .def_property_readonly("num_states", &Dfa::num_states)
      .def_property_readonly("initial", &Dfa::initial)
      .def("is_accepting", &Dfa::is_accepting)
      .def("step", &Dfa::step)
      .def("state_name", &Dfa::state_name)
      .def("label_index", &Dfa::label_index);

  py::class_<DfaFile>(m, "Specification")
      .def_readonly("dfa", &DfaFile::dfa)
      .def("label", [](const DfaFile& f, double y) { return f.labelling.label(y); })
      .def("accepts",
           [](const DfaFile& f, const std::vector<double>& outputs) {
             const SafetySpec spec{f.dfa, f.labelling, static_cast<int>(outputs.size())};
             return trace_accepted(spec, outputs);
           },
           "True iff the output sequence drives the automaton into an accepting state.")
      .def("__str__", [](const DfaFile& f) { return format_dfa(f); });
  m.def("parse_dfa", &parse_dfa, py::arg("text"));
  m.def("load_dfa", &load_dfa, py::arg("path"));

  py::class_<ExperimentConfig>(m, "Config")
      .def_readonly("name", &ExperimentConfig::name)
      .def_readonly("game", &ExperimentConfig::game)
      .def_readwrite("horizon", &ExperimentConfig::horizon)
      .def_readwrite("eta", &ExperimentConfig::eta)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("episodes", &ExperimentConfig::episodes)
      .def_readonly("x0", &ExperimentConfig::x0)
      .def_readonly("digest", &ExperimentConfig::digest);
  m.def("load_config", &load_config, py::arg("path"));

  py::class_<Pipeline, std::unique_ptr<Pipeline>>(m, "Pipeline")
      .def_readonly("config", &Pipeline::config)
      .def_readonly("guarantee", &Pipeline::guarantee)
      .def_readonly("x0_cell", &Pipeline::x0_hat)
      .def_readonly("q0", &Pipeline::q0_bar)
      .def_property_readonly("num_cells", [](const Pipeline& p) { return p.grid.num_cells(); })
      .def_property_readonly("horizon", [](const Pipeline& p) { return p.tables.horizon(); })
      .def_property_readonly("values", [](const Pipeline& p) { return value_array(p.tables); })
      .def("monte_carlo",
           [](const Pipeline& p, std::size_t episodes, const std::string& mode, int workers) {
             MonteCarloOptions o;
             o.mode = parse_mode(mode);
             o.episodes = episodes;
             o.workers = workers;
             if (o.mode == RunMode::kSupervised) require_budget(p.guarantee, p.config.eta);
             MonteCarloResult r;
             {
               py::gil_scoped_release release;
               r = monte_carlo(p, o);
             }
             std::ostringstream csv;
             write_metrics_csv(r, csv);
             py::dict d = summary_dict(r.summary);
             d["metrics_csv"] = csv.str();
             return d;
           },
           py::arg("episodes") = 0, py::arg("mode") = "supervised", py::arg("workers") = 0);
  m.def(
      "build_pipeline",
      [](const ExperimentConfig& c) {
        py::gil_scoped_release release;
        return build_pipeline(c);
      },
      py::arg("config"));

  py::class_<FiniteInstance>(m, "FiniteInstance")
      .def_readonly("name", &FiniteInstance::name)
      .def_readonly("horizon", &FiniteInstance::horizon)
      .def_readonly("x0", &FiniteInstance::x0)
      .def_readwrite("etas", &FiniteInstance::etas)
      .def("value_iteration",
           [](const FiniteInstance& inst) {
             return value_array(value_iteration(inst.model, inst.horizon));
           });
  m.def("load_finite_instance", &load_finite_instance, py::arg("path"));

  py::class_<GateResult>(m, "GateResult")
      .def_readonly("eta", &GateResult::eta)
      .def_readonly("worst_violation", &GateResult::worst_violation)
      .def_readonly("bound_ok", &GateResult::bound_ok)
      .def_readonly("configurations", &GateResult::configurations)
      .def_readonly("accepted_decisions", &GateResult::accepted_decisions)
      .def_readonly("max_tail_excess", &GateResult::max_tail_excess)
      .def_readonly("dominance_ok", &GateResult::dominance_ok)
      .def_readonly("reachable_ok", &GateResult::reachable_ok);

  py::class_<OracleReport>(m, "OracleReport")
      .def_readonly("name", &OracleReport::name)
      .def_readonly("advisor_value", &OracleReport::advisor_value)
      .def_readonly("minimax_value", &OracleReport::minimax_value)
      .def_readonly("minimax_gap", &OracleReport::minimax_gap)
      .def_readonly("gates", &OracleReport::gates)
      .def_property_readonly("passed", &OracleReport::passed)
      .def("__str__", &format_report);
  m.def("oracle_check", &exhaustive_violation_bound_check, py::arg("instance"));
}
