#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kkindex/experiments.hpp"

namespace py = pybind11;
using namespace kkindex;

namespace {

SpectatorCut parse_cut(const std::string& cut) {
  if (cut == "joint") return SpectatorCut::joint;
  if (cut == "independent") return SpectatorCut::independent;
  throw py::value_error("cut must be 'joint' or 'independent'");
}

py::dict row_dict(const ReportRow& r) {
  py::dict d;
  d["quantity"] = r.quantity;
  d["truncation"] = r.truncation;
  d["measured"] = r.measured;
  d["reference"] = r.reference;
  d["tolerance"] = r.tolerance;
  d["margin"] = r.margin();
  d["pass"] = r.pass();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Truncated Fock-space Dirac operators and KK-index comparisons";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UnknownExperiment>(m, "UnknownExperiment", PyExc_KeyError);

  py::class_<SeededRng>(m, "SeededRng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next", &SeededRng::next)
      .def("uniform", &SeededRng::uniform)
      .def("symmetric", &SeededRng::symmetric)
      .def("complex", &SeededRng::complex);

  py::class_<Config>(m, "Config")
      .def(py::init<>())
      .def_readwrite("modes", &Config::modes)
      .def_readwrite("energy_cut", &Config::energy_cut)
      .def_readwrite("hermite_cut", &Config::hermite_cut)
      .def_readwrite("active_modes", &Config::active_modes)
      .def_readwrite("tolerance", &Config::tolerance)
      .def_readwrite("seed", &Config::seed)
      .def_readwrite("experiments", &Config::experiments)
      .def_readwrite("output_dir", &Config::output_dir)
      .def_readwrite("group", &Config::group)
      .def_readwrite("cocycle", &Config::cocycle)
      .def_readwrite("root_order", &Config::root_order)
      .def_property_readonly("sigma", [](const Config& c) { return c.sigma.describe(); });

  m.def("parse_config_text", &parse_config_text, py::arg("text"));
  m.def("experiment_registry", &experiment_registry);
  m.def(
      "run_experiment",
      [](const std::string& name, const Config& cfg) {
        ExperimentReport rep;
        {
          py::gil_scoped_release release;
          rep = run_experiment(name, cfg);
        }
        py::list rows;
        for (const auto& r : rep.rows) rows.append(row_dict(r));
        return rows;
      },
      py::arg("name"), py::arg("config") = Config{}, "Rows of the experiment report as dicts.");
  m.def(
      "experiment_csv", [](const std::string& name, const Config& cfg) { return format_csv(run_experiment(name, cfg)); },
      py::arg("name"), py::arg("config") = Config{});

  m.def(
      "dirac_matrix",
      [](int modes, int energy_cut, const std::string& hand, const std::string& cut) {
        if (hand != "left" && hand != "right") throw py::value_error("hand must be 'left' or 'right'");
        TruncationSpec s{modes, energy_cut};
        DiracOperator d = hand == "left" ? build_dirac_L(s, parse_cut(cut)) : build_dirac_R(s, parse_cut(cut));
        return d.op.orthonormal_matrix();
      },
      py::arg("modes"), py::arg("energy_cut"), py::arg("hand") = "right", py::arg("cut") = "joint",
      "Sparse matrix of the Dirac operator in the orthonormal product basis.");
  m.def(
      "weitzenbock_residual",
      [](int modes, int energy_cut, const std::string& cut) {
        return weitzenbock_residual({modes, energy_cut}, parse_cut(cut));
      },
      py::arg("modes"), py::arg("energy_cut"), py::arg("cut") = "joint");
  m.def(
      "kernel_dimension",
      [](int modes, int energy_cut) { return kernel_suite({modes, energy_cut}).dimension; }, py::arg("modes"),
      py::arg("energy_cut"));
  m.def("partition_counts", &partition_counts, py::arg("max_part"), py::arg("max_weight"), py::arg("distinct") = false);
  m.def(
      "xi_derivative_norm",
      [](double sigma, int hermite_cut) {
        XiDerivativeNorm r = dRz_norm_on_xi(sigma, hermite_cut);
        py::dict d;
        d["closed_form"] = r.closed_form;
        d["position"] = r.position;
        d["momentum"] = r.momentum;
        d["hermite"] = r.hermite;
        return d;
      },
      py::arg("sigma"), py::arg("hermite_cut") = 40);
  m.def(
      "tail_bound", [](int M, const std::string& rule) { return tail_bound(M, SigmaSequence::parse(rule)); },
      py::arg("M"), py::arg("sigma") = "pow2");
  m.def(
      "twisted_blocks",
      [](const std::string& group, const std::string& cocycle, int root_order) {
        return decompose_twisted_algebra(make_group_cocycle({group, cocycle}, root_order));
      },
      py::arg("group"), py::arg("cocycle"), py::arg("root_order") = 0);
}
