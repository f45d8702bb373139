#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cip/agent/train.hpp"
#include "cip/augment/augment.hpp"
#include "cip/causal/direct_lingam.hpp"
#include "cip/causal/reward_matrices.hpp"
#include "cip/envs/envs.hpp"
#include "cip/envs/sem.hpp"
#include "cip/numkit/error.hpp"
#include "cip/numkit/gaussian_head.hpp"
#include "cip/numkit/mlp.hpp"

namespace py = pybind11;
using namespace cip;

namespace {

py::dict row_dict(const MetricsRow& r) {
  py::dict d;
  d["step"] = r.step;
  d["episode"] = r.episode;
  d["return"] = r.episode_return;
  d["success"] = r.success;
  d["critic_loss"] = r.critic_loss;
  d["policy_loss"] = r.policy_loss;
  d["inverse_nll"] = r.inverse_nll;
  d["empowerment_mean"] = r.empowerment_mean;
  d["synthetic_fraction"] = r.synthetic_fraction;
  d["wallclock_s"] = r.wallclock_s;
  return d;
}

}  // namespace

PYBIND11_MODULE(_cip, m) {
  m.doc() = "Bindings for the cip core library";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());

  // numkit
  py::class_<MlpParams>(m, "MlpParams")
      .def_property_readonly("input_dim", &MlpParams::input_dim)
      .def_property_readonly("output_dim", &MlpParams::output_dim)
      .def("parameter_count", &MlpParams::parameter_count);
  m.def(
      "mlp_init",
      [](Index in, const std::vector<Index>& hidden, Index out, std::uint64_t seed) {
        Rng rng(seed);
        return mlp_init({in, hidden, out}, rng);
      },
      py::arg("input_dim"), py::arg("hidden"), py::arg("output_dim"), py::arg("seed") = 0);
  m.def("mlp_forward", &mlp_forward, py::arg("params"), py::arg("input"));
  m.def("mlp_forward_batch", &mlp_forward_batch, py::arg("params"), py::arg("inputs"));

  py::class_<GaussianHeadOutput>(m, "GaussianHeadOutput")
      .def_readonly("mean", &GaussianHeadOutput::mean)
      .def_readonly("log_std", &GaussianHeadOutput::log_std)
      .def_readonly("raw_sample", &GaussianHeadOutput::raw_sample)
      .def_readonly("action", &GaussianHeadOutput::action)
      .def_readonly("per_dim_log_prob", &GaussianHeadOutput::per_dim_log_prob);
  m.def(
      "gaussian_head_sample",
      [](const Vector& mean, const Vector& log_std, const Vector& noise) {
        return gaussian_head_sample(mean, log_std, noise);
      },
      py::arg("mean"), py::arg("log_std"), py::arg("noise"));

  // envs
  py::class_<EnvSpec>(m, "EnvSpec")
      .def_readonly("name", &EnvSpec::name)
      .def_readonly("d_s", &EnvSpec::d_s)
      .def_readonly("d_a", &EnvSpec::d_a)
      .def_readonly("dt", &EnvSpec::dt)
      .def_readonly("episode_horizon", &EnvSpec::episode_horizon)
      .def_readonly("n_distractors", &EnvSpec::n_distractors)
      .def_readonly("ground_truth_s_mask", &EnvSpec::ground_truth_s_mask)
      .def_readonly("ground_truth_a_mask", &EnvSpec::ground_truth_a_mask);
  m.def("make_env", &make_env, py::arg("name"));
  m.def("env_names", &env_names);
  m.def("env_reset", py::overload_cast<const EnvSpec&, std::uint64_t>(&env_reset), py::arg("spec"),
        py::arg("seed"));
  m.def(
      "env_step",
      [](const EnvSpec& spec, const Vector& state, const Vector& action, int t, std::uint64_t seed) {
        Rng rng(seed);
        const StepResult r = env_step(spec, state, action, t, rng);
        return py::make_tuple(r.next_state, r.reward, r.done);
      },
      py::arg("spec"), py::arg("state"), py::arg("action"), py::arg("t") = 0, py::arg("seed") = 0);
  m.def("reward_of", &reward_of);
  m.def("ground_truth_uncontrollable", &ground_truth_uncontrollable);

  py::class_<Transition>(m, "Transition")
      .def(py::init<>())
      .def_readwrite("s", &Transition::s)
      .def_readwrite("a", &Transition::a)
      .def_readwrite("r", &Transition::r)
      .def_readwrite("s_next", &Transition::s_next)
      .def_readwrite("done", &Transition::done)
      .def_readwrite("synthetic", &Transition::synthetic);
  m.def("collect_random", &collect_random, py::arg("spec"), py::arg("n"), py::arg("seed"));

  m.def(
      "sem_generate",
      [](const Matrix& B, const std::string& noise, double scale, Index n, std::uint64_t seed) {
        return sem_generate(make_sem(B, parse_noise_dist(noise), scale), n, seed);
      },
      py::arg("B"), py::arg("noise") = "uniform", py::arg("scale") = 1.0, py::arg("n") = 10000,
      py::arg("seed") = 0);

  // causal
  m.def(
      "direct_lingam",
      [](const Matrix& data) {
        const LingamResult r = direct_lingam_fit(data);
        return py::make_tuple(r.B, r.order);
      },
      py::arg("data"), "Returns (B, causal order).");

  py::class_<CausalMatrices>(m, "CausalMatrices")
      .def_readonly("m_s_to_r", &CausalMatrices::m_s_to_r)
      .def_readonly("m_a_to_r", &CausalMatrices::m_a_to_r)
      .def_readonly("m_s_to_r_std", &CausalMatrices::m_s_to_r_std)
      .def_readonly("m_a_to_r_std", &CausalMatrices::m_a_to_r_std)
      .def_readonly("fitted_on", &CausalMatrices::fitted_on);
  m.def(
      "fit_reward_matrices",
      [](const std::vector<Transition>& batch, double theta, double w_min) {
        CausalConfig cc;
        cc.theta = theta;
        cc.w_min = w_min;
        cc.causal_sample_size = std::max<Index>(1, static_cast<Index>(batch.size()));
        const CausalMatrices s = fit_state_reward_mask(batch, cc);
        ActionFit a = fit_action_reward_weights(batch, cc);
        a.matrices.m_s_to_r = s.m_s_to_r;
        a.matrices.m_s_to_r_std = s.m_s_to_r_std;
        return py::make_tuple(a.matrices, a.weights.omega);
      },
      py::arg("batch"), py::arg("theta") = 0.05, py::arg("w_min") = 0.05,
      "Returns (CausalMatrices, omega).");
  m.def(
      "uncontrollable_set",
      [](const CausalMatrices& mtx, double theta) { return uncontrollable_set(mtx, theta).indices; },
      py::arg("matrices"), py::arg("theta"));

  // augment
  m.def(
      "counterfactual_swap",
      [](const Transition& t, const Transition& t_hat, const std::vector<Index>& dims) {
        return counterfactual_swap(t, t_hat, dims);
      },
      py::arg("t"), py::arg("t_hat"), py::arg("dims"));

  // agent
  m.def(
      "config_json",
      [](const std::string& text) { return config_to_json(config_from_json(text)); },
      py::arg("text") = "{}", "Validated config with all defaults filled in.");
  m.def(
      "train",
      [](const std::string& env, const std::string& config_text, const std::string& variant,
         const std::function<void(py::dict)>& on_row) {
        const AgentConfig config = variant_config(config_from_json(config_text), variant);
        std::vector<py::dict> rows;
        TrainResult res;
        {
          py::gil_scoped_release release;
          res = train(config, make_env(env));
        }
        for (const auto& r : res.metrics) {
          rows.push_back(row_dict(r));
          if (on_row) on_row(rows.back());
        }
        return rows;
      },
      py::arg("env"), py::arg("config") = "{}", py::arg("variant") = "cip",
      py::arg("on_row") = nullptr, "Train one agent and return its metrics rows.");
}
