#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ldplab/ldp.hpp"
#include "ldplab/spec_file.hpp"

namespace py = pybind11;
using namespace ldplab;

namespace {

std::vector<std::vector<double>> transition_rows(const MarkovMeasure& mu) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(mu.transition.rows()));
  for (Eigen::Index i = 0; i < mu.transition.rows(); ++i) {
    for (Eigen::Index j = 0; j < mu.transition.cols(); ++j) {
      rows[static_cast<std::size_t>(i)].push_back(mu.transition(i, j));
    }
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_ldplab, m) {
  m.doc() = "Large deviations on subshifts of finite type";
  m.attr("__version__") = LDPLAB_VERSION;

  py::register_exception<Error>(m, "LdpError");

  py::class_<SubshiftSpec>(m, "Subshift")
      .def(py::init(&validate_spec), py::arg("transitions"))
      .def_property_readonly("alphabet_size", &SubshiftSpec::alphabet_size)
      .def_property_readonly("primitivity_power", &SubshiftSpec::primitivity_power)
      .def("admissible", &SubshiftSpec::admissible, py::arg("word"))
      .def("words", [](const SubshiftSpec& s, int n) { return admissible_words(s, n); },
           py::arg("length"));

  py::class_<Potential>(m, "Potential")
      .def(py::init<int, std::map<Word, double>>(), py::arg("memory"), py::arg("table"))
      .def_property_readonly("memory", &Potential::memory)
      .def("__call__", [](const Potential& p, const Word& w) { return p(w); })
      .def_static("constant", &Potential::constant)
      .def_static("indicator", &Potential::indicator)
      .def_static("bernoulli", &Potential::bernoulli);

  py::class_<SystemFile>(m, "System")
      .def_readonly("spec", &SystemFile::spec)
      .def_readonly("alphabet", &SystemFile::alphabet)
      .def_property_readonly("potential_names",
                             [](const SystemFile& f) {
                               std::vector<std::string> names;
                               for (const auto& [k, v] : f.potentials) names.push_back(k);
                               return names;
                             })
      .def("potential", &SystemFile::potential, py::return_value_policy::copy)
      .def("parse_word", &SystemFile::parse_word);
  m.def("load_system", &load_spec, py::arg("path"));
  m.def("parse_system", &parse_system, py::arg("text"));

  m.def("pressure", &pressure, py::arg("spec"), py::arg("phi"), py::arg("block") = 0);
  m.def("finite_pressure", &finite_pressure);
  m.def(
      "gibbs",
      [](const SubshiftSpec& s, const Potential& phi) {
        const MarkovMeasure mu = equilibrium_state(s, phi);
        py::dict d;
        d["states"] = mu.chain.states();
        d["transition"] = transition_rows(mu);
        d["stationary"] = std::vector<double>(mu.stationary.data(),
                                              mu.stationary.data() + mu.stationary.size());
        d["entropy"] = entropy(mu);
        d["integral"] = integrate(mu, phi);
        return d;
      },
      py::arg("spec"), py::arg("phi"));

  m.def("q_value", &q_value);
  m.def("q_derivative", &q_derivative);
  m.def(
      "ergodic_range",
      [](const SubshiftSpec& s, const Potential& phi) {
        const ErgodicRange r = ergodic_range(s, phi);
        return py::make_tuple(r.min, r.max);
      });

  py::class_<RateValue>(m, "RateValue")
      .def_readonly("alpha", &RateValue::alpha)
      .def_readonly("rate", &RateValue::rate)
      .def_readonly("tilt", &RateValue::tilt)
      .def_readonly("boundary", &RateValue::boundary);
  m.def(
      "rate", [](const SubshiftSpec& s, const Potential& g, const Potential& phi,
                 double alpha) { return rate_scalar(s, g, phi, alpha); },
      py::arg("spec"), py::arg("G"), py::arg("phi"), py::arg("alpha"));

  py::class_<LeafMeasure>(m, "Leaf")
      .def_readonly("past", &LeafMeasure::past)
      .def_readonly("pressure", &LeafMeasure::pressure)
      .def("cylinder_mass", [](const LeafMeasure& l, const Word& w) { return cylinder_mass(l, w); })
      .def("bowen_ball_mass",
           [](const LeafMeasure& l, const Word& y, int n, int r) {
             return bowen_ball_mass(l, y, n, r);
           })
      .def("sample", [](const LeafMeasure& l, int n, std::uint64_t seed,
                        std::uint64_t index) { return sample_path(l, n, seed, index); },
           py::arg("n"), py::arg("seed"), py::arg("index") = 0);
  m.def(
      "leaf",
      [](const SubshiftSpec& s, const Potential& g, const Word& past) {
        return leaf_measure(s, g, past);
      },
      py::arg("spec"), py::arg("G"), py::arg("past"));
  m.def("growth", &growth_estimate, py::arg("leaf"), py::arg("phi"), py::arg("n"));

  py::class_<DeviationPoint>(m, "DeviationPoint")
      .def_readonly("n", &DeviationPoint::n)
      .def_readonly("mass", &DeviationPoint::mass)
      .def_readonly("mass_lower", &DeviationPoint::mass_lower)
      .def_readonly("mass_upper", &DeviationPoint::mass_upper)
      .def_readonly("log_mass", &DeviationPoint::log_mass)
      .def_readonly("stderr", &DeviationPoint::std_error)
      .def_property_readonly("method",
                             [](const DeviationPoint& p) { return std::string(to_string(p.method)); });

  m.def(
      "deviation_exact",
      [](const LeafMeasure& leaf, const Potential& phi, const std::string& interval,
         int n) { return deviation_mass_exact(leaf, phi, parse_interval(interval), n); },
      py::arg("leaf"), py::arg("phi"), py::arg("interval"), py::arg("n"));
  m.def(
      "deviation_mc",
      [](const LeafMeasure& leaf, const Potential& phi, const std::string& interval,
         int n, std::int64_t samples, std::optional<double> tilt, std::uint64_t seed) {
        McOptions o;
        o.samples = samples;
        o.tilt = tilt;
        o.seed = seed;
        py::gil_scoped_release release;
        return deviation_mass_mc(leaf, phi, parse_interval(interval), n, o);
      },
      py::arg("leaf"), py::arg("phi"), py::arg("interval"), py::arg("n"),
      py::arg("samples") = 100000, py::arg("tilt") = py::none(), py::arg("seed") = 0);

  m.def(
      "rate_fit",
      [](const std::vector<std::pair<int, double>>& masses) {
        DeviationSeries s;
        for (const auto& [n, mass] : masses) {
          DeviationPoint p;
          p.n = n;
          p.mass = mass;
          s.points.push_back(p);
        }
        const RateFit f = rate_fit(s);
        py::dict d;
        d["estimate"] = f.estimate;
        d["log_coefficient"] = f.log_coefficient;
        d["inverse_coefficient"] = f.inverse_coefficient;
        d["residual"] = f.residual;
        d["monotone"] = f.monotone;
        return d;
      },
      py::arg("masses"));

  m.def(
      "axioms_violations",
      [](const SubshiftSpec& s, int samples, std::uint64_t seed) {
        return axioms_check(s, samples, seed).total_violations();
      },
      py::arg("spec"), py::arg("samples") = 200, py::arg("seed") = 0);
}
