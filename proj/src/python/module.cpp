#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bsc/expansion.hpp"
#include "bsc/forms.hpp"
#include "bsc/mintime.hpp"
#include "bsc/moments.hpp"
#include "bsc/oscillatory.hpp"
#include "bsc/simulator.hpp"
#include "bsc/spectral.hpp"
#include "bsc/synthesis.hpp"

namespace py = pybind11;
using namespace bsc;

namespace {

Control make_control(double t0, double dt, Eigen::VectorXd samples) {
    return Control(t0, dt, std::move(samples));
}

} // namespace

PYBIND11_MODULE(_bsc, m) {
    m.doc() = "spectral toolkit for bilinear Schrodinger control on (0,1)";

    m.def("eigenvalue", &eigenvalue, py::arg("k"));
    m.def("transition_frequency", &transition_frequency, py::arg("j"));
    m.def("mode_function", &mode_function, py::arg("k"), py::arg("x"));

    py::class_<GaussLegendre>(m, "GaussLegendre")
        .def(py::init<>())
        .def_readwrite("nodes_per_panel", &GaussLegendre::nodes_per_panel)
        .def_readwrite("panels", &GaussLegendre::panels);

    py::class_<DipoleModel>(m, "DipoleModel")
        .def_static("preset", &DipoleModel::preset, py::arg("name"), py::arg("truncation") = 64)
        .def(py::init<std::vector<double>, std::vector<double>, int, GaussLegendre>(),
             py::arg("poly_coeffs"), py::arg("cos_coeffs"), py::arg("truncation"),
             py::arg("quad") = GaussLegendre{})
        .def("mu", &DipoleModel::mu)
        .def("mu_prime", &DipoleModel::mu_prime)
        .def("mu_second", &DipoleModel::mu_second)
        .def_property_readonly("truncation", &DipoleModel::truncation)
        .def_property_readonly("name", &DipoleModel::name)
        .def("coupling", &DipoleModel::coupling, py::arg("j"), py::arg("k"))
        .def("dipole_matrix", &DipoleModel::dipole_matrix,
             py::return_value_policy::reference_internal);

    m.def("dipole_coefficient", &dipole_coefficient);
    m.def("dipole_coefficient_asymptotic", &dipole_coefficient_asymptotic);
    m.def("second_moment_coefficient",
          [](const DipoleModel& mu, int K) {
              auto r = second_moment_coefficient(mu, K);
              return py::make_tuple(r.value, r.sign, r.degenerate);
          });

    py::class_<SpectralState>(m, "SpectralState")
        .def(py::init([](Eigen::VectorXcd c, double t) {
                 SpectralState s;
                 s.coeffs = std::move(c);
                 s.time_stamp = t;
                 return s;
             }),
             py::arg("coeffs"), py::arg("time_stamp") = 0.0)
        .def_readwrite("coeffs", &SpectralState::coeffs)
        .def_readwrite("time_stamp", &SpectralState::time_stamp)
        .def("norm", &SpectralState::norm);
    m.def("ground_state", &ground_state, py::arg("n_modes"), py::arg("t") = 0.0);
    m.def("eigenstate", &eigenstate, py::arg("k"), py::arg("n_modes"), py::arg("t") = 0.0);
    m.def("sobolev_norm", &sobolev_norm);

    py::class_<LostDirectionSet>(m, "LostDirectionSet")
        .def_readonly("indices", &LostDirectionSet::indices)
        .def_readonly("tolerance", &LostDirectionSet::tolerance)
        .def_readonly("decay_constant", &LostDirectionSet::decay_constant);
    m.def("lost_directions", &lost_directions, py::arg("mu"), py::arg("N"),
          py::arg("tol") = 1e-9);

    py::class_<Control>(m, "Control")
        .def(py::init(&make_control), py::arg("t0"), py::arg("dt"), py::arg("samples"))
        .def_readwrite("t0", &Control::t0)
        .def_readwrite("dt", &Control::dt)
        .def_readwrite("samples", &Control::samples)
        .def("value", &Control::value)
        .def("l2_norm", &Control::l2_norm)
        .def("duration", &Control::duration)
        .def("primitive", &Control::primitive);
    m.def("cosine_pulse", &cosine_pulse, py::arg("segments") = 4096);
    m.def(
        "moment",
        [](const Control& c, double omega) { return moment(std::span(&c, 1), omega); },
        py::arg("control"), py::arg("omega"));

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("norm_drift", &Trajectory::norm_drift)
        .def_property_readonly("final_state",
                               [](const Trajectory& t) { return t.states.back(); })
        .def_property_readonly("states", [](const Trajectory& t) { return t.states; });

    py::class_<PropagateOptions>(m, "PropagateOptions")
        .def(py::init<>())
        .def_readwrite("dt", &PropagateOptions::dt)
        .def_readwrite("store_every", &PropagateOptions::store_every);

    m.def(
        "propagate",
        [](const SpectralState& psi0, const std::vector<Control>& u, const DipoleModel& mu,
           double T, const PropagateOptions& opt) { return propagate(psi0, u, mu, T, opt); },
        py::arg("psi0"), py::arg("controls"), py::arg("mu"), py::arg("T") = -1.0,
        py::arg("options") = PropagateOptions{});
    m.def(
        "propagate_gauge",
        [](const std::vector<Control>& s, const DipoleModel& mu, double T,
           const PropagateOptions& opt) { return propagate_gauge(s, mu, T, opt); },
        py::arg("s"), py::arg("mu"), py::arg("T") = -1.0,
        py::arg("options") = PropagateOptions{});
    m.def("gauge_transform", &gauge_transform);

    m.def(
        "first_order",
        [](const DipoleModel& mu, const std::vector<Control>& v, double T) {
            return first_order(mu, v, T);
        },
        py::arg("mu"), py::arg("v"), py::arg("T"));
    m.def(
        "second_order",
        [](const DipoleModel& mu, const std::vector<Control>& v, const std::vector<Control>& w,
           double T) { return second_order(mu, v, w, T); },
        py::arg("mu"), py::arg("v"), py::arg("w"), py::arg("T"));
    m.def(
        "third_order",
        [](const DipoleModel& mu, const std::vector<Control>& v, const std::vector<Control>& w,
           const std::vector<Control>& nu, double T, int J2) {
            return third_order(mu, v, w, nu, T, J2);
        },
        py::arg("mu"), py::arg("v"), py::arg("w"), py::arg("nu"), py::arg("T"),
        py::arg("J2") = -1);

    auto form_value = [](const FormReport& r) { return r.value; };
    m.def(
        "q2",
        [form_value](const DipoleModel& mu, int K, double T, const std::vector<Control>& v,
                     int J) { return form_value(q2(mu, K, T, v, J)); },
        py::arg("mu"), py::arg("K"), py::arg("T"), py::arg("v"), py::arg("J") = -1);
    m.def(
        "q2_tilde",
        [form_value](const DipoleModel& mu, int K, double T, const std::vector<Control>& v,
                     int J) { return form_value(q2_tilde(mu, K, T, v, J)).real(); },
        py::arg("mu"), py::arg("K"), py::arg("T"), py::arg("v"), py::arg("J") = -1);
    m.def(
        "q_primitive",
        [form_value](const DipoleModel& mu, int K, double T, const Control& S, int J) {
            return form_value(q_primitive(mu, K, T, S, J)).real();
        },
        py::arg("mu"), py::arg("K"), py::arg("T"), py::arg("S"), py::arg("J") = -1);
    m.def(
        "q3",
        [form_value](const DipoleModel& mu, int K, double T, const std::vector<Control>& v,
                     int J, int J2) { return form_value(q3(mu, K, T, v, J, J2)); },
        py::arg("mu"), py::arg("K"), py::arg("T"), py::arg("v"), py::arg("J") = -1,
        py::arg("J2") = -1);
    m.def("t_star", &t_star, py::arg("mu"), py::arg("K"), py::arg("J") = 500);
    m.def("coupling_series_constant", &coupling_series_constant, py::arg("mu"), py::arg("K"),
          py::arg("J") = 500);
    m.def("cosine_pulse_series", &cosine_pulse_series, py::arg("mu"), py::arg("J") = 500);
    py::enum_<RecoveryOrder>(m, "RecoveryOrder")
        .value("order2", RecoveryOrder::order2)
        .value("order3", RecoveryOrder::order3)
        .value("undecided", RecoveryOrder::undecided);
    m.def("classify_order", &classify_order, py::arg("mu"), py::arg("K"), py::arg("J") = -1,
          py::arg("tol") = 1e-9);

    m.def("gram_matrix",
          [](const std::vector<double>& f, double T) { return gram_matrix(f, T); });
    m.def(
        "solve_moments",
        [](const std::vector<double>& freqs, const Eigen::VectorXcd& targets, double T,
           int grid_segments) {
            MomentProblem p;
            p.frequencies = freqs;
            p.targets = targets;
            p.T = T;
            MomentSolveInfo info;
            Control c = solve_moments(p, grid_segments, &info);
            return py::make_tuple(c, info.residual, info.condition);
        },
        py::arg("frequencies"), py::arg("targets"), py::arg("T"),
        py::arg("grid_segments") = 2048);
    m.def(
        "project_vt",
        [](const Control& v, const std::vector<double>& freqs) {
            return project_vt(v, freqs);
        },
        py::arg("v"), py::arg("frequencies"));
    m.def(
        "controlled_frequencies",
        [](const LostDirectionSet& lost, int j_max, bool include_zero) {
            return controlled_frequencies(lost, j_max, include_zero);
        },
        py::arg("lost"), py::arg("j_max"), py::arg("include_zero") = false);
    m.def("ingham_constant",
          [](const std::vector<double>& f, double T, int N) {
              return ingham_constant(f, T, N);
          });

    py::class_<MintimeOptions>(m, "MintimeOptions")
        .def(py::init<>())
        .def_readwrite("grid_n", &MintimeOptions::grid_n)
        .def_readwrite("kernel_j", &MintimeOptions::kernel_j)
        .def_readwrite("freq_j_max", &MintimeOptions::freq_j_max)
        .def_readwrite("sine_modes", &MintimeOptions::sine_modes);
    py::class_<Bracket>(m, "Bracket")
        .def_readonly("lo", &Bracket::lo)
        .def_readonly("hi", &Bracket::hi)
        .def("width", &Bracket::width)
        .def("mid", &Bracket::mid);
    m.def("coercivity_gap", &coercivity_gap, py::arg("mu"), py::arg("T"),
          py::arg("options") = MintimeOptions{});
    m.def(
        "estimate_tmin1",
        [](const DipoleModel& mu, double lo, double hi, double tol, const MintimeOptions& o) {
            return estimate_tmin1(mu, {lo, hi}, tol, o);
        },
        py::arg("mu"), py::arg("lo"), py::arg("hi"), py::arg("tol") = 1e-3,
        py::arg("options") = MintimeOptions{});
    m.def(
        "estimate_tmin2",
        [](const DipoleModel& mu, double lo, double hi, double tol, const MintimeOptions& o) {
            return estimate_tmin2(mu, {lo, hi}, tol, o);
        },
        py::arg("mu"), py::arg("lo"), py::arg("hi"), py::arg("tol") = 1e-3,
        py::arg("options") = MintimeOptions{});

    py::class_<SynthesisOptions>(m, "SynthesisOptions")
        .def(py::init<>())
        .def_readwrite("grid_n", &SynthesisOptions::grid_n)
        .def_readwrite("trials", &SynthesisOptions::trials)
        .def_readwrite("controlled_max", &SynthesisOptions::controlled_max)
        .def_readwrite("freq_j_max", &SynthesisOptions::freq_j_max)
        .def_readwrite("seed", &SynthesisOptions::seed);
    py::class_<PlanCertificates>(m, "PlanCertificates")
        .def_readonly("first_order_norm", &PlanCertificates::first_order_norm)
        .def_readonly("off_target", &PlanCertificates::off_target)
        .def_readonly("target_error", &PlanCertificates::target_error)
        .def_readonly("control_norm", &PlanCertificates::control_norm);
    py::class_<SynthesisPlan>(m, "SynthesisPlan")
        .def_readonly("T", &SynthesisPlan::T)
        .def_readonly("certificates", &SynthesisPlan::certificates)
        .def("all_controls", &SynthesisPlan::all_controls)
        .def("v_controls", &SynthesisPlan::v_controls)
        .def("w_controls", &SynthesisPlan::w_controls);
    m.def("lambda_map", &lambda_map, py::arg("mu"), py::arg("target"), py::arg("T"),
          py::arg("options") = SynthesisOptions{});
    m.def("time_shift", &time_shift, py::arg("v"), py::arg("theta"), py::arg("T_new"));

    py::class_<SteerReport>(m, "SteerReport")
        .def_readonly("outer_residuals", &SteerReport::outer_residuals)
        .def_readonly("outer_iterations", &SteerReport::outer_iterations)
        .def_readonly("final_error", &SteerReport::final_error)
        .def_readonly("z_norm", &SteerReport::z_norm)
        .def_readonly("converged", &SteerReport::converged);
    py::class_<SteerResult>(m, "SteerResult")
        .def_readonly("controls", &SteerResult::controls)
        .def_readonly("report", &SteerResult::report);
    m.def("fixed_point_steer", &fixed_point_steer, py::arg("mu"), py::arg("psi_f"),
          py::arg("T"), py::arg("T1"), py::arg("options") = SynthesisOptions{},
          py::arg("sim") = PropagateOptions{}, py::arg("max_outer") = 10);

    m.attr("__version__") = "0.1.0";
}
