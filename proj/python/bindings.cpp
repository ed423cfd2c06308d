#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "widesense/calibration.hpp"
#include "widesense/eigen_detector.hpp"
#include "widesense/harness.hpp"
#include "widesense/noise_estimation.hpp"
#include "widesense/rmt.hpp"
#include "widesense/wideband.hpp"

namespace py = pybind11;

namespace {

using namespace widesense;

std::vector<Complex> to_series(const py::array_t<Complex, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw DomainError("expected a 1-D complex array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<Complex> to_array(const std::vector<Complex>& v) {
  return py::array_t<Complex>(static_cast<py::ssize_t>(v.size()), v.data());
}

noise::SubbandEnergies make_energies(const std::vector<double>& energies, std::size_t samples) {
  return noise::SubbandEnergies(energies, samples);
}

std::optional<noise::PriorSpec> parse_prior(const std::optional<std::string>& json_text) {
  if (!json_text) return std::nullopt;
  return nlohmann::json::parse(*json_text).get<noise::PriorSpec>();
}

py::dict estimate_to_dict(const noise::NoiseEstimate& e) {
  py::dict d;
  d["sigma2_hat"] = e.sigma2_hat;
  d["m_hat"] = e.m_hat;
  d["occupied_variances"] = e.occupied_variances;
  d["scenario"] = noise::to_string(e.scenario);
  d["subband_count"] = e.subband_count;
  return d;
}

void bind_rmt(py::module_& m) {
  using rmt::MarchenkoPasturLaw;
  m.def("mp_support", &rmt::mp_support, py::arg("sigma2"), py::arg("ratio"));
  py::class_<MarchenkoPasturLaw>(m, "MarchenkoPasturLaw")
      .def(py::init<double, double>(), py::arg("sigma2"), py::arg("ratio"))
      .def_property_readonly("sigma2", &MarchenkoPasturLaw::sigma2)
      .def_property_readonly("ratio", &MarchenkoPasturLaw::ratio)
      .def_property_readonly("a", &MarchenkoPasturLaw::lower_edge)
      .def_property_readonly("b", &MarchenkoPasturLaw::upper_edge)
      .def("density", &MarchenkoPasturLaw::density)
      .def("cdf", &MarchenkoPasturLaw::cdf)
      .def("atom_mass", &MarchenkoPasturLaw::atom_mass)
      .def("quantile", &MarchenkoPasturLaw::quantile);
  m.def("ks_distance", [](const std::vector<double>& eigenvalues, const MarchenkoPasturLaw& law) {
    return rmt::ks_distance(rmt::build_esd(eigenvalues), law);
  });
  m.def("build_esd", [](const std::vector<double>& eigenvalues) {
    const auto esd = rmt::build_esd(eigenvalues);
    return std::vector<double>(esd.values().begin(), esd.values().end());
  });
}

void bind_wideband(py::module_& m) {
  m.def(
      "generate_narrowband_frame",
      [](const std::vector<Complex>& gains, double sigma2, std::size_t n, bool occupied,
         std::uint64_t seed) {
        return generate_narrowband_frame(ReceiverArray(gains, sigma2), n, occupied, seed).entries();
      },
      py::arg("gains"), py::arg("sigma2"), py::arg("n_samples"), py::arg("occupied"), py::arg("seed"));
  m.def(
      "generate_wideband_signal",
      [](const std::string& scene_json, std::size_t n_total, std::uint64_t seed) {
        const auto scene = nlohmann::json::parse(scene_json).get<SpectrumScene>();
        return to_array(generate_wideband_signal(scene, n_total, seed));
      },
      py::arg("scene_json"), py::arg("n_total"), py::arg("seed"));
  m.def(
      "estimate_psd",
      [](const py::array_t<Complex, py::array::c_style | py::array::forcecast>& signal,
         std::size_t segment_length, double overlap) {
        const auto psd = estimate_psd(to_series(signal), segment_length, overlap);
        return py::make_tuple(psd.freqs, psd.power);
      },
      py::arg("signal"), py::arg("segment_length"), py::arg("overlap") = 0.5);
}

void bind_noise(py::module_& m) {
  m.def(
      "subband_energies",
      [](const py::array_t<Complex, py::array::c_style | py::array::forcecast>& signal, std::size_t k) {
        const auto e = noise::subband_energies(to_series(signal), k);
        std::vector<double> raw(e.count());
        for (std::size_t i = 0; i < e.count(); ++i) raw[e.original_index()[i]] = e.ascending()[i];
        return py::make_tuple(raw, e.samples_per_subband());
      },
      py::arg("signal"), py::arg("k"));
  m.def(
      "estimate_m",
      [](const std::vector<double>& energies, std::size_t samples, const std::optional<std::string>& prior) {
        const auto e = make_energies(energies, samples);
        const auto spec = parse_prior(prior);
        return spec ? noise::estimate_m(e, noise::UsagePrior::resolve(*spec, e.count()))
                    : noise::estimate_m_uniform(e);
      },
      py::arg("energies"), py::arg("samples_per_subband") = 1, py::arg("prior_json") = py::none());
  m.def(
      "noise_variance",
      [](const std::vector<double>& energies, std::size_t samples, std::size_t m_hat) {
        return estimate_to_dict(noise::noise_variance(make_energies(energies, samples), m_hat));
      },
      py::arg("energies"), py::arg("samples_per_subband"), py::arg("m_hat"));
  m.def("min_energy_noise",
        [](const std::vector<double>& energies, std::size_t samples) {
          return noise::min_energy_noise(energies, samples);
        },
        py::arg("energies"), py::arg("samples_per_subband") = 1);
  m.def(
      "detect_boundaries",
      [](const std::vector<double>& power, std::size_t n_scales) {
        PsdEstimate psd;
        psd.power = power;
        psd.segment_length = power.size();
        for (std::size_t j = 0; j < power.size(); ++j) {
          psd.freqs.push_back(static_cast<double>(j) / static_cast<double>(power.size()));
        }
        const auto part = noise::detect_boundaries(psd, n_scales);
        return std::vector<double>(part.boundaries().begin(), part.boundaries().end());
      },
      py::arg("psd_power"), py::arg("n_scales") = 2);
  m.def(
      "infer_subband_count",
      [](const std::vector<double>& boundaries, double bandwidth) {
        return noise::infer_subband_count(noise::SubbandPartition(boundaries, bandwidth), bandwidth);
      },
      py::arg("boundaries"), py::arg("total_bandwidth") = 1.0);
  m.def(
      "estimate_noise_scenario3",
      [](const py::array_t<Complex, py::array::c_style | py::array::forcecast>& signal,
         std::size_t segment_length, double overlap, std::size_t n_scales,
         const std::optional<std::string>& prior) {
        noise::PsdParameters params{segment_length, overlap, n_scales};
        return estimate_to_dict(noise::estimate_noise_scenario3(to_series(signal), params, parse_prior(prior)));
      },
      py::arg("signal"), py::arg("segment_length") = 256, py::arg("overlap") = 0.5,
      py::arg("n_scales") = 2, py::arg("prior_json") = py::none());
}

void bind_detect(py::module_& m) {
  m.def(
      "hermitian_eigenvalues",
      [](const Eigen::MatrixXcd& r) { return detect::hermitian_eigenvalues(r).values; },
      py::arg("matrix"));
  m.def(
      "sample_covariance",
      [](const Eigen::MatrixXcd& y) { return detect::sample_covariance(SampleMatrix(y)).matrix(); },
      py::arg("y"));
  m.def(
      "mp_edge_statistic",
      [](std::vector<double> eigenvalues, double sigma2_hat, std::size_t k, std::size_t n) {
        detect::EigenSpectrum s;
        std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
        s.values = std::move(eigenvalues);
        return detect::mp_edge_statistic(s, sigma2_hat, k, n);
      },
      py::arg("eigenvalues"), py::arg("sigma2_hat"), py::arg("K"), py::arg("N"));
  m.def(
      "energy_statistic",
      [](const Eigen::MatrixXcd& y, double sigma2_hat) {
        return detect::energy_statistic(SampleMatrix(y), sigma2_hat);
      },
      py::arg("y"), py::arg("sigma2_hat"));
  m.def(
      "agm_statistic",
      [](std::vector<double> eigenvalues) {
        detect::EigenSpectrum s;
        s.values = std::move(eigenvalues);
        return detect::agm_statistic(s);
      },
      py::arg("eigenvalues"));
  m.def(
      "decide",
      [](double value, double threshold) {
        return detect::decide(value, threshold) == detect::Hypothesis::kH1 ? "H1" : "H0";
      },
      py::arg("value"), py::arg("threshold"));
}

void bind_calibration(py::module_& m) {
  using calibration::CalibrationCurve;
  py::class_<CalibrationCurve>(m, "CalibrationCurve")
      .def_property_readonly("sorted", [](const CalibrationCurve& c) {
        return std::vector<double>(c.sorted().begin(), c.sorted().end());
      })
      .def("pfa_at", [](const CalibrationCurve& c, double alpha) { return calibration::pfa_at(c, alpha); })
      .def("threshold_for", [](const CalibrationCurve& c, double p) {
        return calibration::threshold_for(c, p).alpha;
      })
      .def("save", [](const CalibrationCurve& c, const std::string& path) { calibration::save_curve(c, path); });
  m.def(
      "simulate_h0",
      [](const std::string& detector, std::size_t trials, std::size_t k, std::size_t n, double sigma2,
         std::uint64_t seed) {
        calibration::CalibrationConfig config;
        config.trials = trials;
        config.k = k;
        config.n = n;
        config.sigma2 = sigma2;
        config.master_seed = seed;
        return calibration::simulate_h0(config, detect::detector_from_string(detector));
      },
      py::arg("detector"), py::arg("trials"), py::arg("K") = 7, py::arg("N") = 100,
      py::arg("sigma2") = 1.0, py::arg("seed") = 1);
  m.def("load_curve", [](const std::string& path) { return calibration::load_curve(path); });
}

}  // namespace

PYBIND11_MODULE(_widesense, m) {
  m.doc() = "Blind wideband spectrum sensing: Marchenko-Pastur tools, GLRT noise estimation, "
            "eigenvalue detectors and Monte Carlo calibration";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  bind_rmt(m);
  bind_wideband(m);
  bind_noise(m);
  bind_detect(m);
  bind_calibration(m);

  m.def(
      "run_experiment",
      [](const std::string& experiment, const std::string& config_json) {
        const auto spec = harness::parse_spec(nlohmann::json::parse(config_json),
                                              harness::experiment_from_string(experiment));
        return harness::run_experiment(spec).to_csv();
      },
      py::arg("experiment"), py::arg("config_json") = "{}");
  m.attr("__version__") = harness::version();
}
