#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ensrf/bounds.hpp"
#include "ensrf/convergence.hpp"
#include "ensrf/ensemble.hpp"
#include "ensrf/errors.hpp"
#include "ensrf/kalman.hpp"
#include "ensrf/linalg.hpp"

namespace py = pybind11;
using namespace ensrf;

namespace {

py::dict state_dict(const GaussianState& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["cov"] = s.cov;
  return d;
}

py::object fit_dict(const std::optional<RateFit>& fit) {
  if (!fit) return py::none();
  py::dict d;
  d["slope"] = fit->slope;
  d["intercept"] = fit->intercept;
  d["half_width"] = fit->half_width;
  d["points"] = fit->points;
  return std::move(d);
}

py::dict lln_dict(const LlnReport& r) {
  py::list rows;
  for (const LlnRow& row : r.rows) {
    py::dict d;
    d["N"] = row.n_members;
    d["error"] = row.error;
    d["median"] = row.median;
    rows.append(d);
  }
  py::dict out;
  out["p"] = r.p;
  out["rows"] = rows;
  out["fit"] = fit_dict(r.fit);
  return out;
}

InitMode init_from(const std::string& name) {
  if (name == "sample") return InitMode::Sample;
  if (name == "exact_moment") return InitMode::ExactMoment;
  throw ConfigError("unknown init mode '" + name + "' (sample, exact_moment)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Kalman filter, unbiased square-root ensemble filter, bound checks, convergence lab";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", error.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<InsufficientData>(m, "InsufficientData", error.ptr());
  py::register_exception<ExperimentAborted>(m, "ExperimentAborted", error.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<NotPsdError>(m, "NotPsdError", numerical.ptr());
  py::register_exception<NotSpdError>(m, "NotSpdError", numerical.ptr());
  py::register_exception<TransformDegeneracy>(m, "TransformDegeneracy", numerical.ptr());

  // Linear algebra.
  m.def("spectral_norm", [](const Matrix& a) { return spectral_norm(a); });
  m.def("hs_norm", [](const Matrix& a) { return hs_norm(a); });
  m.def("tensor", [](const Vector& u, const Vector& v) { return tensor(u, v); });
  m.def("sym_sqrt", [](const Matrix& a) { return sym_sqrt(a); });
  m.def("loewner_leq", [](const Matrix& a, const Matrix& b) { return loewner_leq(a, b); });
  m.def("spd_inverse", [](const Matrix& a) { return spd_inverse(a); });

  // Kalman reference.
  py::class_<ObservationSpec>(m, "ObservationSpec")
      .def(py::init([](Matrix H, Matrix R, Vector d) {
             return ObservationSpec{std::move(H), std::move(R), std::move(d)};
           }),
           py::arg("H"), py::arg("R"), py::arg("d"))
      .def_readwrite("H", &ObservationSpec::H)
      .def_readwrite("R", &ObservationSpec::R)
      .def_readwrite("d", &ObservationSpec::d);
  py::class_<LinearModelStep>(m, "LinearModelStep")
      .def(py::init([](Matrix M, Vector b) { return LinearModelStep{std::move(M), std::move(b)}; }),
           py::arg("M"), py::arg("b"))
      .def_readwrite("M", &LinearModelStep::M)
      .def_readwrite("b", &LinearModelStep::b);

  m.def("kalman_gain", [](const Matrix& Q, const ObservationSpec& o) { return kalman_gain(Q, o); },
        py::arg("Q"), py::arg("obs"));
  m.def("analysis_mean",
        [](const Vector& X, const Matrix& Q, const ObservationSpec& o) { return analysis_mean(X, Q, o); },
        py::arg("X"), py::arg("Q"), py::arg("obs"));
  m.def("analysis_cov", [](const Matrix& Q, const ObservationSpec& o) { return analysis_cov(Q, o); },
        py::arg("Q"), py::arg("obs"));
  m.def(
      "kf_run",
      [](const Vector& mean, const Matrix& cov, const std::vector<LinearModelStep>& models,
         const std::vector<ObservationSpec>& obs) {
        py::list out;
        for (const KalmanStep& s : kf_run({mean, cov}, models, obs)) {
          py::dict d;
          d["forecast"] = state_dict(s.forecast);
          d["analysis"] = state_dict(s.analysis);
          out.append(d);
        }
        return out;
      },
      py::arg("mean"), py::arg("cov"), py::arg("models"), py::arg("observations"));

  // Ensembles are passed as n x N arrays, one member per column.
  m.def("ensemble_mean", [](const Matrix& x) { return ensemble_mean(Ensemble(x)); });
  m.def("ensemble_cov", [](const Matrix& x) { return ensemble_cov(Ensemble(x)); });
  m.def(
      "sample_initial_ensemble",
      [](const Vector& mean, const Matrix& factor, Index n_members, std::uint64_t seed) {
        return sample_initial_ensemble({mean, factor}, n_members, seed).members();
      },
      py::arg("mean"), py::arg("factor"), py::arg("n_members"), py::arg("seed"));
  m.def(
      "exact_moment_ensemble",
      [](const Vector& mean, const Matrix& factor, Index copies) {
        return exact_moment_ensemble({mean, factor}, copies).members();
      },
      py::arg("mean"), py::arg("factor"), py::arg("copies") = 1);
  m.def("etkf_transform",
        [](const Matrix& x, const ObservationSpec& o) { return etkf_transform(Ensemble(x), o); },
        py::arg("members"), py::arg("obs"));
  m.def("etkf_analysis",
        [](const Matrix& x, const ObservationSpec& o) { return etkf_analysis(Ensemble(x), o).members(); },
        py::arg("members"), py::arg("obs"));
  m.def(
      "srf_run",
      [](const Matrix& x, const std::vector<LinearModelStep>& models,
         const std::vector<ObservationSpec>& obs) {
        py::list out;
        for (const SrfStep& s : srf_run(Ensemble(x), models, obs)) {
          py::dict d;
          d["forecast"] = state_dict(s.forecast);
          d["analysis"] = state_dict(s.analysis);
          d["ensemble"] = s.ensemble.members();
          out.append(d);
        }
        return out;
      },
      py::arg("members"), py::arg("models"), py::arg("observations"));

  // Bounds.
  py::class_<BoundReport>(m, "BoundReport")
      .def_property_readonly("check", [](const BoundReport& r) { return std::string(to_string(r.check)); })
      .def_readonly("lhs", &BoundReport::lhs)
      .def_readonly("rhs", &BoundReport::rhs)
      .def_readonly("slack", &BoundReport::slack)
      .def_readonly("scale", &BoundReport::scale)
      .def_readonly("sharper_rhs", &BoundReport::sharper_rhs)
      .def("passes", &BoundReport::passes, py::arg("violation_tol") = 1e-10)
      .def("__repr__", [](const BoundReport& r) {
        return "BoundReport(" + std::string(to_string(r.check)) + ", lhs=" + std::to_string(r.lhs) +
               ", rhs=" + std::to_string(r.rhs) + ")";
      });
  m.def("check_gain_continuity",
        [](const Matrix& P, const Matrix& Q, const ObservationSpec& o) { return check_gain_continuity(P, Q, o); },
        py::arg("P"), py::arg("Q"), py::arg("obs"));
  m.def("check_gain_norm", [](const Matrix& Q, const ObservationSpec& o) { return check_gain_norm(Q, o); },
        py::arg("Q"), py::arg("obs"));
  m.def("check_bmean_norm",
        [](const Vector& X, const Matrix& Q, const ObservationSpec& o) { return check_bmean_norm(X, Q, o); },
        py::arg("X"), py::arg("Q"), py::arg("obs"));
  m.def("check_acov_continuity",
        [](const Matrix& P, const Matrix& Q, const ObservationSpec& o) { return check_acov_continuity(P, Q, o); },
        py::arg("P"), py::arg("Q"), py::arg("obs"));
  m.def("check_loewner_sandwich",
        [](const Matrix& Q, const ObservationSpec& o) { return check_loewner_sandwich(Q, o); },
        py::arg("Q"), py::arg("obs"));
  m.def(
      "check_bmean_continuity",
      [](const Vector& X, const Matrix& Q, const Vector& Y, const Matrix& P, const ObservationSpec& o) {
        return check_bmean_continuity(X, Q, Y, P, o);
      },
      py::arg("X"), py::arg("Q"), py::arg("Y"), py::arg("P"), py::arg("obs"));
  m.def(
      "fuzz_all_bounds",
      [](Index n, Index mm, std::size_t trials, std::uint64_t seed, double violation_tol,
         double max_condition, int threads) {
        FuzzOptions opt;
        opt.n = n;
        opt.m = mm;
        opt.trials = trials;
        opt.seed = seed;
        opt.violation_tol = violation_tol;
        opt.max_condition = max_condition;
        opt.threads = threads;
        FuzzSummary sum;
        {
          py::gil_scoped_release release;
          sum = fuzz_all_bounds(opt);
        }
        py::list checks;
        for (const CheckSummary& c : sum.checks) {
          py::dict d;
          d["name"] = std::string(to_string(c.check));
          d["evaluated"] = c.evaluated;
          d["passed"] = c.passed;
          d["worst_slack"] = c.worst_slack;
          d["worst_relative_slack"] = c.worst_relative_slack;
          d["worst_digest"] = c.worst_digest;
          d["sharper_violations"] = c.sharper_violations;
          checks.append(d);
        }
        py::list violations;
        for (const Violation& v : sum.violations) {
          py::dict d;
          d["trial"] = v.trial;
          d["seed"] = v.trial_seed;
          d["check"] = std::string(to_string(v.report.check));
          d["slack"] = v.report.slack;
          violations.append(d);
        }
        py::dict out;
        out["ok"] = sum.ok();
        out["reports_passed"] = sum.reports_passed;
        out["reports_total"] = sum.reports_total;
        out["monotonicity_failures"] = sum.monotonicity_failures;
        out["checks"] = checks;
        out["violations"] = violations;
        return out;
      },
      py::arg("n") = 5, py::arg("m") = 5, py::arg("trials") = 10000, py::arg("seed") = 0,
      py::arg("violation_tol") = 1e-10, py::arg("max_condition") = 1e6, py::arg("threads") = 1);

  // Convergence lab.
  m.def("lp_estimate", [](const std::vector<double>& s, double p) { return lp_estimate(s, p); },
        py::arg("samples"), py::arg("p"));
  m.def("rate_fit",
        [](const std::vector<std::pair<double, double>>& pts) { return fit_dict(rate_fit(pts)); },
        py::arg("points"));
  m.def(
      "make_synthetic_problem",
      [](Index n, Index mm, std::size_t steps, std::uint64_t seed) {
        const FilteringProblem p = make_synthetic_problem(n, mm, steps, seed);
        py::dict d;
        d["mean"] = p.background.mean;
        d["factor"] = p.background.factor;
        d["models"] = p.models;
        d["observations"] = p.observations;
        d["truth"] = p.truth;
        return d;
      },
      py::arg("n"), py::arg("m"), py::arg("steps"), py::arg("seed"));
  m.def(
      "lln_mean_experiment",
      [](const Vector& mean, const Matrix& factor, const std::vector<Index>& sizes,
         std::size_t replicates, double p, std::uint64_t seed, int threads) {
        return lln_dict(lln_mean_experiment({mean, factor}, sizes, replicates, p, seed, threads));
      },
      py::arg("mean"), py::arg("factor"), py::arg("sizes"), py::arg("replicates"), py::arg("p"),
      py::arg("seed"), py::arg("threads") = 1);
  m.def(
      "lln_cov_experiment",
      [](const Vector& mean, const Matrix& factor, const std::vector<Index>& sizes,
         std::size_t replicates, double p, std::uint64_t seed, int threads) {
        return lln_dict(lln_cov_experiment({mean, factor}, sizes, replicates, p, seed, threads));
      },
      py::arg("mean"), py::arg("factor"), py::arg("sizes"), py::arg("replicates"), py::arg("p"),
      py::arg("seed"), py::arg("threads") = 1);
  m.def(
      "srf_vs_kf_experiment",
      [](Index n, Index mm, std::size_t steps, std::uint64_t problem_seed,
         const std::vector<Index>& sizes, std::size_t replicates, const std::vector<double>& p_values,
         std::uint64_t seed, const std::string& init, int threads) {
        ExperimentConfig cfg;
        cfg.problem = make_synthetic_problem(n, mm, steps, problem_seed);
        cfg.ensemble_sizes = sizes;
        cfg.replicates = replicates;
        cfg.p_values = p_values;
        cfg.seed = seed;
        cfg.init = init_from(init);
        cfg.threads = threads;
        ConvergenceReport r;
        {
          py::gil_scoped_release release;
          r = srf_vs_kf_experiment(cfg);
        }
        py::list rows, slopes;
        for (const ConvergenceRow& row : r.rows) {
          py::dict d;
          d["step"] = row.step;
          d["p"] = row.p;
          d["N"] = row.n_members;
          d["mean_err"] = row.mean_err;
          d["cov_err_spec"] = row.cov_err_spec;
          d["cov_err_hs"] = row.cov_err_hs;
          d["replicates"] = row.replicates;
          rows.append(d);
        }
        for (const SlopeRow& s : r.slopes) {
          py::dict d;
          d["step"] = s.step;
          d["p"] = s.p;
          d["mean"] = fit_dict(s.mean);
          d["cov_spec"] = fit_dict(s.cov_spec);
          d["cov_hs"] = fit_dict(s.cov_hs);
          slopes.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["slopes"] = slopes;
        out["failures"] = r.failures.size();
        out["elapsed_seconds"] = r.elapsed_seconds;
        return out;
      },
      py::arg("n"), py::arg("m"), py::arg("steps"), py::arg("problem_seed"), py::arg("sizes"),
      py::arg("replicates") = 200, py::arg("p_values") = std::vector<double>{1.0, 2.0},
      py::arg("seed") = 0, py::arg("init") = "sample", py::arg("threads") = 1);
}
