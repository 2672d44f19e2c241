#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fedhier/comms.hpp"
#include "fedhier/data.hpp"
#include "fedhier/experiment.hpp"
#include "fedhier/inner_solver.hpp"
#include "fedhier/models.hpp"
#include "fedhier/smooth_l1.hpp"
#include "fedhier/theory.hpp"

namespace py = pybind11;
using namespace fedhier;

namespace {

py::dict report_to_dict(const SolveReport& rep) {
  py::dict d;
  d["theta"] = rep.theta.vec();
  d["final_grad_norm_sq"] = rep.final_grad_norm_sq;
  d["iters_used"] = rep.iters_used;
  d["converged"] = rep.converged;
  return d;
}

InnerSolveConfig solver_cfg(int max_iters, double tol_grad_sq, double step_size) {
  InnerSolveConfig c;
  c.max_iters = max_iters;
  c.tol_grad_sq = tol_grad_sq;
  c.step_size = step_size;
  return c;
}

Batch make_py_batch(Eigen::MatrixXd features, std::vector<int> labels) {
  Batch b;
  b.features = std::move(features);
  b.labels = std::move(labels);
  return b;
}

py::dict row_to_dict(const MetricsRecord& r) {
  py::dict d;
  d["round"] = r.round;
  d["global_test_acc"] = r.global_test_acc;
  d["mean_personal_acc"] = r.mean_personal_acc;
  d["objective_est"] = r.objective_est;
  d["grad_norm_sq_est"] = r.grad_norm_sq_est;
  d["sparsity_w"] = r.sparsity_w;
  d["cumulative_bits"] = r.cumulative_bits;
  d["wall_ms"] = r.wall_ms;
  return d;
}

}  // namespace

PYBIND11_MODULE(fedhier, m) {
  m.doc() = "client-edge-cloud personalized federated learning simulator";

  py::register_exception<Error>(m, "FedhierError");

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init<>())
      .def_property(
          "kind", [](const ModelSpec& s) { return s.kind == ModelKind::Mlr ? "mlr" : "mlp"; },
          [](ModelSpec& s, const std::string& k) {
            if (k == "mlr")
              s.kind = ModelKind::Mlr;
            else if (k == "mlp")
              s.kind = ModelKind::Mlp;
            else
              throw InvalidInputError("model kind must be 'mlr' or 'mlp'");
          })
      .def_readwrite("input_dim", &ModelSpec::input_dim)
      .def_readwrite("hidden_dims", &ModelSpec::hidden_dims)
      .def_readwrite("num_classes", &ModelSpec::num_classes)
      .def_readwrite("l2_reg", &ModelSpec::l2_reg);

  m.def("preset_model", &preset_model, py::arg("name"),
        "named model presets: paper-count, paper-text, mlr");
  m.def("param_count", &param_count, py::arg("spec"));
  m.def(
      "init_params",
      [](const ModelSpec& spec, uint64_t seed) { return init_params(spec, seed).vec(); },
      py::arg("spec"), py::arg("seed"));
  m.def(
      "loss_and_grad",
      [](const ModelSpec& spec, const Vec& params, Eigen::MatrixXd features,
         std::vector<int> labels) {
        ParamVector g;
        double loss = loss_and_grad(spec, ParamVector(params),
                                    make_py_batch(std::move(features), std::move(labels)), &g);
        return py::make_tuple(loss, g.vec());
      },
      py::arg("spec"), py::arg("params"), py::arg("features"), py::arg("labels"));
  m.def(
      "accuracy",
      [](const ModelSpec& spec, const Vec& params, Eigen::MatrixXd features,
         std::vector<int> labels) {
        return accuracy(spec, ParamVector(params),
                        make_py_batch(std::move(features), std::move(labels)));
      },
      py::arg("spec"), py::arg("params"), py::arg("features"), py::arg("labels"));

  m.def(
      "log_cosh_penalty",
      [](const Vec& x, double rho) {
        return log_cosh_penalty(ParamVector(x), SmoothL1Config{rho});
      },
      py::arg("x"), py::arg("rho"));
  m.def(
      "log_cosh_grad",
      [](const Vec& x, double rho) {
        return log_cosh_grad(ParamVector(x), SmoothL1Config{rho}).vec();
      },
      py::arg("x"), py::arg("rho"));
  m.def(
      "sparsity_ratio",
      [](const Vec& x, double eps_zero) {
        SparsityReport r = sparsity_ratio(ParamVector(x), eps_zero);
        return py::make_tuple(r.nonzero, r.ratio);
      },
      py::arg("x"), py::arg("eps_zero"), "returns (nonzero_count, nonzero_fraction)");
  m.def(
      "affine_combine",
      [](double a, const Vec& x, double b, const Vec& y) {
        return affine_combine(a, ParamVector(x), b, ParamVector(y)).vec();
      },
      py::arg("a"), py::arg("x"), py::arg("b"), py::arg("y"));
  m.def(
      "threshold_for_transmission",
      [](const Vec& x, double eps_zero) {
        return threshold_for_transmission(ParamVector(x), eps_zero).vec();
      },
      py::arg("x"), py::arg("eps_zero"));

  m.def(
      "solve_personalized_quadratic",
      [](const Vec& center, const Vec& target, double lambda1, double gamma1, double rho,
         int max_iters, double tol_grad_sq, double step_size, const Vec& warm_start) {
        SolveReport rep =
            solve_personalized(ParamVector(center), make_quadratic_loss(target), lambda1, gamma1,
                               rho, solver_cfg(max_iters, tol_grad_sq, step_size),
                               ParamVector(warm_start));
        return report_to_dict(rep);
      },
      py::arg("center"), py::arg("target"), py::arg("lambda1"), py::arg("gamma1"),
      py::arg("rho"), py::arg("max_iters"), py::arg("tol_grad_sq"), py::arg("step_size"),
      py::arg("warm_start"));
  m.def(
      "solve_personalized_batch",
      [](const ModelSpec& spec, const Vec& center, Eigen::MatrixXd features,
         std::vector<int> labels, double lambda1, double gamma1, double rho, int max_iters,
         double tol_grad_sq, double step_size, const Vec& warm_start) {
        SolveReport rep = solve_personalized(
            ParamVector(center),
            make_batch_loss(spec, make_py_batch(std::move(features), std::move(labels))),
            lambda1, gamma1, rho, solver_cfg(max_iters, tol_grad_sq, step_size),
            ParamVector(warm_start));
        return report_to_dict(rep);
      },
      py::arg("spec"), py::arg("center"), py::arg("features"), py::arg("labels"),
      py::arg("lambda1"), py::arg("gamma1"), py::arg("rho"), py::arg("max_iters"),
      py::arg("tol_grad_sq"), py::arg("step_size"), py::arg("warm_start"));
  m.def(
      "closed_form_edge_model",
      [](const Vec& theta, const Vec& w, double lambda1, double lambda2) {
        return closed_form_edge_model(ParamVector(theta), ParamVector(w), lambda1, lambda2).vec();
      },
      py::arg("theta"), py::arg("w"), py::arg("lambda1"), py::arg("lambda2"));

  m.def(
      "smoothness_constants",
      [](double lambda1, double lambda2, double gamma1, double gamma2, double rho, double eta1,
         double beta, int edge_rounds, double mu) {
        HyperParams hp;
        hp.lambda1 = lambda1;
        hp.lambda2 = lambda2;
        hp.gamma1 = gamma1;
        hp.gamma2 = gamma2;
        hp.rho = rho;
        hp.eta1 = eta1;
        hp.beta = beta;
        hp.edge_rounds = edge_rounds;
        TheoryConstants c = smoothness_constants(hp, mu);
        py::dict d;
        d["L_F"] = c.L_F;
        d["mu_F"] = c.mu_F;
        d["lambda_bar"] = c.lambda_bar;
        d["lambda_eff"] = c.lambda_eff;
        d["eta_check"] = c.eta_check;
        return d;
      },
      py::arg("lambda1"), py::arg("lambda2"), py::arg("gamma1"), py::arg("gamma2"),
      py::arg("rho"), py::arg("eta1"), py::arg("beta"), py::arg("edge_rounds"), py::arg("mu"));

  m.def(
      "upload_bits",
      [](Eigen::Index dim, Eigen::Index nonzero, bool sparse_coding) {
        CommsAccount acct;
        return upload_bits(acct, dim, nonzero, sparse_coding);
      },
      py::arg("dim"), py::arg("nonzero"), py::arg("sparse_coding"));

  m.def(
      "load_idx",
      [](const std::string& images, const std::string& labels) {
        LabeledDataset ds = load_idx(images, labels);
        return py::make_tuple(ds.features, ds.labels, ds.num_classes);
      },
      py::arg("images_path"), py::arg("labels_path"),
      "returns (features float32 [n, d], labels, num_classes)");

  m.def("preset_names", &preset_names);
  m.def(
      "preset_config", [](const std::string& name) { return config_to_json(preset_config(name)); },
      py::arg("name"), "preset as a JSON string");
  m.def(
      "canonical_config",
      [](const std::string& text) { return config_to_json(config_from_json(text)); },
      py::arg("config_json"), "parse, validate keys, and re-serialize with defaults filled");
  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        ExperimentConfig cfg = config_from_json(config_json);
        RunArtifacts art;
        {
          py::gil_scoped_release release;
          art = run_experiment(cfg);
        }
        py::list rows;
        for (const auto& r : art.result.log.rows) rows.append(row_to_dict(r));
        py::dict d;
        d["out_dir"] = art.out_dir;
        d["rows"] = rows;
        d["final_w"] = art.result.final_w.vec();
        return d;
      },
      py::arg("config_json"));
  m.def(
      "compare_runs",
      [](const std::vector<std::string>& dirs, const std::string& metric) {
        return compare_runs(dirs, metric).csv;
      },
      py::arg("run_dirs"), py::arg("metric"));
}
