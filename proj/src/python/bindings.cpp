#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "amgenc/charge.hpp"
#include "amgenc/egnn.hpp"
#include "amgenc/errors.hpp"
#include "amgenc/io_formats.hpp"
#include "amgenc/projection.hpp"
#include "amgenc/sampler.hpp"
#include "amgenc/structure_analysis.hpp"
#include "amgenc/weights.hpp"

namespace py = pybind11;
using namespace amgenc;
using namespace pybind11::literals;

namespace {

MaterialSample make_sample(const Mat3 &lattice, const Positions &positions,
                           const Assignments &assignments) {
  return MaterialSample(Lattice(lattice), positions, assignments);
}

py::dict trace_step(const TraceStep &s) {
  return py::dict("t"_a = s.t, "charge"_a = s.charge, "projected"_a = s.projected,
                  "vanishing_gradient"_a = s.vanishing_gradient,
                  "gradient_norm_sq"_a = s.gradient_norm_sq,
                  "first_order_residual"_a = s.first_order_residual);
}

} // namespace

PYBIND11_MODULE(_amgenc, m) {
  m.doc() = "Charge-constrained flow-matching generation of amorphous materials";

  auto &base = py::register_exception<Error>(m, "Error");
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<CutoffExceedsCell>(m, "CutoffExceedsCell", base.ptr());
  py::register_exception<WeightMismatch>(m, "WeightMismatch", base.ptr());
  static PyObject *infeasible =
      py::register_exception<InfeasibleRepair>(m, "InfeasibleRepair", base.ptr()).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p)
        std::rethrow_exception(p);
    } catch (const InfeasibleRepair &e) {
      py::object exc = py::reinterpret_borrow<py::object>(infeasible)(e.what());
      exc.attr("nearest_charge") = e.nearest_charge();
      PyErr_SetObject(infeasible, exc.ptr());
    }
  });

  py::class_<ElementTable>(m, "ElementTable")
      .def(py::init<std::vector<std::string>, std::vector<int>, std::vector<double>,
                    std::optional<int>, std::vector<double>>(),
           "names"_a, "charges"_a, "frequencies"_a, "ghost_index"_a = py::none(),
           "covalent_radii"_a = std::vector<double>{})
      .def_property_readonly("names", &ElementTable::names)
      .def_property_readonly("charges", &ElementTable::charges)
      .def_property_readonly("frequencies", &ElementTable::frequencies)
      .def_property_readonly("ghost_index", &ElementTable::ghost_index)
      .def_property_readonly("covalent_radii", &ElementTable::covalent_radii)
      .def("index", &ElementTable::require_index, "symbol"_a)
      .def("__len__", &ElementTable::size);

  py::class_<MaterialSample>(m, "MaterialSample")
      .def(py::init(&make_sample), "lattice"_a, "positions"_a, "assignments"_a)
      .def_property_readonly("lattice", [](const MaterialSample &s) { return s.lattice().rows(); })
      .def_property_readonly("positions", &MaterialSample::positions)
      .def_property_readonly("assignments", &MaterialSample::assignments)
      .def("__len__", &MaterialSample::atom_count);

  m.def("load_charge_table", &load_charge_table, "path"_a);
  m.def("load_extxyz", &load_extxyz, "path"_a, "table"_a);
  m.def("save_extxyz", &save_extxyz, "path"_a, "sample"_a, "table"_a,
        "include_ghosts"_a = false);

  m.def("hard_charge", &hard_charge, "assignments"_a, "table"_a);
  m.def("soft_charge", &soft_charge, "logits"_a, "tau"_a, "table"_a);
  m.def("soft_charge_gradient", &soft_charge_gradient, "logits"_a, "tau"_a, "table"_a);
  m.def(
      "gauss_newton_step",
      [](const Logits &logits, const ElementTable &table, double tau) {
        return gauss_newton_step(logits, table, tau).corrected_logits;
      },
      "logits"_a, "table"_a, "tau"_a = 0.13);
  m.def(
      "discrete_project",
      [](const Logits &logits, const ElementTable &table) {
        const DiscreteRepair r = discrete_project(logits, table);
        py::list swaps;
        for (const Swap &s : r.swaps)
          swaps.append(py::make_tuple(s.atom, s.from, s.to));
        return py::make_tuple(r.assignments, r.total_cost, swaps);
      },
      "logits"_a, "table"_a,
      "Returns (assignments, total_cost, [(atom, from, to), ...]).");
  m.def(
      "charge_metrics",
      [](const std::vector<long> &charges) {
        const ChargeReport r = charge_metrics_from_values(charges);
        return py::dict("p_balanced"_a = r.p_balanced, "mean_abs_charge"_a = r.mean_abs_charge,
                        "std_charge"_a = r.std_charge);
      },
      "charges"_a);

  py::class_<WeightContainer>(m, "WeightContainer")
      .def_property_readonly("names",
                             [](const WeightContainer &w) {
                               std::vector<std::string> out;
                               for (const auto &[name, tensor] : w.entries())
                                 out.push_back(name);
                               return out;
                             })
      .def("__len__", &WeightContainer::size);
  m.def("load_weights", &load_weights, "path"_a);
  m.def("save_weights", &save_weights, "path"_a, "weights"_a);

  py::class_<EgnnConfig>(m, "EgnnConfig")
      .def(py::init<>())
      .def_readwrite("layers", &EgnnConfig::layers)
      .def_readwrite("hidden_dim", &EgnnConfig::hidden_dim)
      .def_readwrite("vector_channels", &EgnnConfig::vector_channels)
      .def_readwrite("attention_dim", &EgnnConfig::attention_dim)
      .def_readwrite("r_cut", &EgnnConfig::r_cut)
      .def_readwrite("n_norm", &EgnnConfig::n_norm)
      .def_readwrite("n_y", &EgnnConfig::n_y)
      .def_readwrite("n_elements", &EgnnConfig::n_elements);
  m.def("init_egnn_weights", &init_egnn_weights, "config"_a, "seed"_a);

  py::class_<VelocityField>(m, "VelocityField");
  py::class_<TeacherField, VelocityField>(m, "TeacherField")
      .def(py::init<MaterialSample, int>(), "target"_a, "n_elements"_a);
  py::class_<EgnnField, VelocityField>(m, "EgnnField")
      .def(py::init([](const EgnnConfig &cfg, const WeightContainer &w) {
             return EgnnField(EgnnModel(cfg, w));
           }),
           "config"_a, "weights"_a)
      .def(
          "forward",
          [](const EgnnField &f, const MaterialSample &s, const Logits &elements,
             std::vector<double> target, double t) {
            const VelocityOutput v =
                f.model().forward(s.lattice(), s.positions(), elements, target, t);
            return py::make_tuple(v.v_pos, v.v_el);
          },
          "sample"_a, "elements"_a, "target"_a, "t"_a,
          "Returns (v_pos, v_el) for the sample's lattice and positions.");
  m.def(
      "random_balanced_target",
      [](const ElementTable &table, const Mat3 &lattice, int n_atoms, std::uint64_t seed) {
        return random_balanced_target(table, Lattice(lattice), n_atoms, seed);
      },
      "table"_a, "lattice"_a, "n_atoms"_a, "seed"_a);

  py::class_<GenerationResult>(m, "GenerationResult")
      .def_readonly("sample", &GenerationResult::sample)
      .def_readonly("final_logits", &GenerationResult::final_logits)
      .def_readonly("full_assignments", &GenerationResult::full_assignments)
      .def_property_readonly("repair_cost",
                             [](const GenerationResult &r) { return r.trace.repair_cost; })
      .def_property_readonly("charge_before_repair",
                             [](const GenerationResult &r) { return r.trace.charge_before_repair; })
      .def_property_readonly("steps", [](const GenerationResult &r) {
        py::list out;
        for (const TraceStep &s : r.trace.steps)
          out.append(trace_step(s));
        return out;
      });

  m.def(
      "generate",
      [](const ElementTable &table, const Mat3 &lattice, const VelocityField &field,
         std::uint64_t seed, int n_atoms, int steps, double sigma, double tau, double r_cut,
         std::vector<double> target) {
        GenerationConfig cfg;
        cfg.steps = steps;
        cfg.sigma = sigma;
        cfg.tau = tau;
        cfg.r_cut = r_cut;
        cfg.target = std::move(target);
        py::gil_scoped_release release;
        return generate(cfg, table, Lattice(lattice), n_atoms, field, seed);
      },
      "table"_a, "lattice"_a, "field"_a, "seed"_a, "n_atoms"_a, "steps"_a = 100,
      "sigma"_a = 0.25, "tau"_a = 0.13, "r_cut"_a = 6.5, "target"_a = std::vector<double>{});

  m.def(
      "ring_statistics",
      [](const MaterialSample &s, const ElementTable &table, const std::string &counted) {
        const RingStatistics r =
            ring_statistics(build_bond_graph(s, table), s.assignments(), table.require_index(counted));
        return py::make_tuple(r.mean_size, r.histogram);
      },
      "sample"_a, "table"_a, "counted"_a = "Si", "Returns (mean ring size or None, histogram).");
  m.def(
      "partial_rdf",
      [](const MaterialSample &s, int a, int b, double r_max, int n_bins) {
        const RadialTable t = partial_rdf(s, a, b, r_max, n_bins);
        return py::make_tuple(t.r, t.value);
      },
      "sample"_a, "species_a"_a, "species_b"_a, "r_max"_a, "n_bins"_a);
  m.def(
      "cumulative_cn",
      [](const MaterialSample &s, int center, int neighbor, double r_max,
         int n_bins) -> py::object {
        const auto t = cumulative_cn(s, center, neighbor, r_max, n_bins);
        if (!t)
          return py::none();
        return py::make_tuple(t->r, t->value);
      },
      "sample"_a, "center"_a, "neighbor"_a, "r_max"_a, "n_bins"_a);
  m.def(
      "regression_metrics",
      [](const std::vector<double> &targets, const std::vector<double> &generated) {
        const RegressionReport r = regression_metrics(targets, generated);
        return py::dict("mae"_a = r.mae, "rmse"_a = r.rmse, "mape"_a = r.mape);
      },
      "targets"_a, "generated"_a);
}
