#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hierflow/api/service.hpp"
#include "hierflow/cut.hpp"
#include "hierflow/error.hpp"
#include "hierflow/fixtures.hpp"
#include "hierflow/layout.hpp"
#include "hierflow/stats.hpp"
#include "hierflow/synthetic.hpp"
#include "hierflow/timeline.hpp"

namespace py = pybind11;
using namespace hierflow;
using api::Json;

namespace {

using Edges = std::vector<std::pair<std::string, std::string>>;  // (code, parent)

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_python(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

TypeHierarchy hierarchy_from(const Edges& edges) {
  std::vector<HierarchyEdge> e;
  for (const auto& [code, parent] : edges) e.push_back({code, parent, ""});
  return build_hierarchy(e);
}

std::vector<double> column(const TypeHierarchy& h, const py::dict& values) {
  std::vector<double> out(h.size(), 0.0);
  for (const auto& [k, v] : values) out[h.id(k.cast<std::string>())] = v.cast<double>();
  return out;
}

std::vector<std::string> codes(const TypeHierarchy& h, const std::vector<NodeId>& nodes) {
  std::vector<std::string> out;
  for (NodeId n : nodes) out.emplace_back(h.code(n));
  return out;
}

DatasetHandle preset_dataset(const std::string& name) {
  if (name == "heart-failure") return fixtures::heart_failure_dataset();
  if (name == "use-case") return fixtures::use_case_dataset();
  if (name == "aggregation-trend") return generate_synthetic(aggregation_trend_spec());
  if (name == "largest-query") return generate_synthetic(largest_query_spec());
  fail(ErrorCode::InvalidArgument, "unknown preset '" + name + "'");
}

QuerySpec preset_query(const std::string& name) {
  if (name == "heart-failure") return fixtures::heart_failure_query();
  if (name == "use-case") return fixtures::use_case_query();
  fail(ErrorCode::InvalidArgument, "unknown query preset '" + name + "'");
}

QuerySpec query_from(const py::object& spec) {
  if (py::isinstance<py::str>(spec)) return preset_query(spec.cast<std::string>());
  return parse_query_spec(from_python(spec).dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cohort event-sequence analytics over hierarchical event types.";

  static py::exception<Error> error_type(m, "HierflowError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error_type;
      py::object instance = exc(std::string(to_string(e.code())), e.what());
      instance.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), instance.ptr());
    }
  });

  m.def(
      "chi_square_yates",
      [](std::uint64_t n00, std::uint64_t n01, std::uint64_t n10, std::uint64_t n11) {
        return chi_square_yates({n00, n01, n10, n11});
      },
      py::arg("n00"), py::arg("n01"), py::arg("n10"), py::arg("n11"));
  m.def(
      "correlation",
      [](std::uint64_t n00, std::uint64_t n01, std::uint64_t n10, std::uint64_t n11) {
        return correlation({n00, n01, n10, n11});
      },
      py::arg("n00"), py::arg("n01"), py::arg("n10"), py::arg("n11"));
  m.def("chi_square_p_value", &chi_square_p_value, py::arg("statistic"));

  m.def(
      "informative_cut",
      [](const Edges& edges, const py::dict& chi2, double r) {
        const auto h = hierarchy_from(edges);
        const auto cut = informative_cut(h, column(h, chi2), {r});
        py::dict out;
        out["pre_filter"] = codes(h, cut.pre_filter);
        out["post_filter"] = codes(h, cut.post_filter);
        return out;
      },
      py::arg("edges"), py::arg("chi2"), py::arg("r"));
  m.def(
      "scent",
      [](const Edges& edges, const py::dict& rho) {
        const auto h = hierarchy_from(edges);
        const auto s = scent(h, column(h, rho));
        py::dict out;
        for (NodeId n = 0; n < h.size(); ++n) out[py::str(std::string(h.code(n)))] = s[n];
        return out;
      },
      py::arg("edges"), py::arg("rho"));

  m.def(
      "kaplan_meier",
      [](const std::vector<std::pair<double, bool>>& observations) {
        std::vector<SurvivalObservation> obs;
        for (const auto& [t, e] : observations) obs.push_back({t, e});
        py::list out;
        for (const auto& p : kaplan_meier(obs).points) {
          py::dict d;
          d["t"] = p.time;
          d["s"] = p.survival;
          d["at_risk"] = p.at_risk;
          d["events"] = p.events;
          d["censored"] = p.censored;
          out.append(d);
        }
        return out;
      },
      py::arg("observations"));

  m.def(
      "optimize_y",
      [](const std::vector<std::tuple<std::string, double, double>>& marks, double diameter,
         double alpha, double y_min, double y_max) {
        std::vector<Mark> ms;
        for (const auto& [code, x, y0] : marks) ms.push_back({code, x, y0});
        OptimizeOptions o;
        o.diameter = diameter;
        o.alpha = alpha;
        o.y_min = y_min;
        o.y_max = y_max;
        const auto r = optimize_y(ms, o);
        py::dict out;
        out["y"] = r.y;
        out["order"] = r.order;
        out["initial_cost"] = r.initial_cost;
        out["cost"] = r.cost;
        out["iterations"] = r.iterations;
        return out;
      },
      py::arg("marks"), py::arg("diameter") = 10.0, py::arg("alpha") = 0.8, py::arg("y_min") = 0.0,
      py::arg("y_max") = 400.0);
  m.def(
      "layout_cost",
      [](const std::vector<std::tuple<std::string, double, double>>& marks, const std::vector<double>& y,
         double diameter, double alpha) {
        std::vector<Mark> ms;
        for (const auto& [code, x, y0] : marks) ms.push_back({code, x, y0});
        return layout_cost(ms, y, diameter, alpha);
      },
      py::arg("marks"), py::arg("y"), py::arg("diameter") = 10.0, py::arg("alpha") = 0.8);

  py::class_<api::Service>(m, "Service")
      .def(py::init([](const std::string& data_dir, std::size_t cache_size) {
             api::ServiceConfig c;
             c.data_dir = data_dir;
             c.cache_size = cache_size;
             return std::make_unique<api::Service>(c);
           }),
           py::arg("data_dir") = "", py::arg("cache_size") = 64)
      .def(
          "add_dataset",
          [](api::Service& s, const py::dict& manifest) { return to_python(s.add_dataset(from_python(manifest))); },
          py::arg("manifest"))
      .def(
          "add_preset",
          [](api::Service& s, const std::string& name) { return s.add_dataset(preset_dataset(name)); },
          py::arg("name"))
      .def(
          "add_synthetic",
          [](api::Service& s, const py::dict& spec) {
            return s.add_dataset(generate_synthetic(parse_synthetic_spec(from_python(spec).dump())));
          },
          py::arg("spec"))
      .def("datasets", [](const api::Service& s) { return to_python(s.datasets()); })
      .def(
          "query",
          [](api::Service& s, const std::string& dataset, const py::object& spec) {
            return to_python(s.query(dataset, query_from(spec)));
          },
          py::arg("dataset_id"), py::arg("spec"))
      .def(
          "filter",
          [](api::Service& s, const std::string& cohort, const py::dict& constraint) {
            return to_python(s.filter(cohort, parse_attribute_constraint(from_python(constraint).dump())));
          },
          py::arg("cohort_id"), py::arg("constraint"))
      .def(
          "timeline",
          [](const api::Service& s, const std::string& c, bool detail) { return to_python(s.timeline(c, detail)); },
          py::arg("cohort_id"), py::arg("detail") = false)
      .def(
          "select",
          [](api::Service& s, const std::string& c, const std::string& sel, std::optional<double> r) {
            return to_python(s.select(c, sel, r));
          },
          py::arg("cohort_id"), py::arg("selection"), py::arg("r") = py::none())
      .def(
          "add_milestone",
          [](api::Service& s, const std::string& c, const std::string& edge, const std::string& code) {
            return to_python(s.add_milestone(c, edge, code));
          },
          py::arg("cohort_id"), py::arg("edge"), py::arg("code"))
      .def(
          "lock",
          [](api::Service& s, const std::string& c, const std::vector<std::string>& codes) {
            return to_python(s.lock(c, codes));
          },
          py::arg("cohort_id"), py::arg("codes"))
      .def(
          "scatter",
          [](const api::Service& s, const std::string& c, std::optional<double> r) {
            return to_python(s.scatter(c, r));
          },
          py::arg("cohort_id"), py::arg("r") = py::none())
      .def(
          "cut",
          [](const api::Service& s, const std::string& c, std::optional<double> r) { return to_python(s.cut(c, r)); },
          py::arg("cohort_id"), py::arg("r") = py::none())
      .def("cut_csv", &api::Service::cut_csv, py::arg("cohort_id"), py::arg("r") = py::none())
      .def(
          "focus",
          [](const api::Service& s, const std::string& c, const std::string& code) {
            return to_python(s.focus(c, code));
          },
          py::arg("cohort_id"), py::arg("code"))
      .def(
          "survival", [](const api::Service& s, const std::string& c) { return to_python(s.survival(c)); },
          py::arg("cohort_id"))
      .def(
          "attributes", [](const api::Service& s, const std::string& c) { return to_python(s.attributes(c)); },
          py::arg("cohort_id"))
      .def(
          "events_table",
          [](const api::Service& s, const std::string& c, const std::string& sort, bool ascending, bool all_nodes) {
            return to_python(s.events_table(c, api::parse_table_sort(sort), ascending, all_nodes));
          },
          py::arg("cohort_id"), py::arg("sort") = "correlation", py::arg("ascending") = false,
          py::arg("all_nodes") = false)
      .def("stats_csv", &api::Service::stats_csv, py::arg("cohort_id"));
}
