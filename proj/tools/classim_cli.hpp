#pragma once

// Command-line front end. run() is the whole program minus process setup so
// tests can drive it with string arguments and capture both streams.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "classim/classim.hpp"

namespace classim::cli {

enum ExitCode { kOk = 0, kInputError = 2, kSolverError = 3, kGuardError = 4 };

struct SetSource {
  std::string input;
  std::string family;
  int d = 2;
  int count = 2;
  bool extend = false;
};

inline void add_set_options(CLI::App* cmd, SetSource& src) {
  cmd->add_option("--input", src.input, "Measurement set JSON file");
  cmd->add_option("--family", src.family, "Built-in set: mub, sic5, sic, trine")
      ->check(CLI::IsMember({"mub", "sic5", "sic", "trine"}));
  cmd->add_option("--d", src.d, "Dimension for --family mub");
  cmd->add_option("--count", src.count, "Number of bases for --family mub");
  cmd->add_flag("--extend", src.extend, "Replace every setting by its direct-sum extension");
}

inline MeasurementSet load_set(const SetSource& src, bool apply_extend = true) {
  if (src.input.empty() == src.family.empty()) throw InvalidArgument("give exactly one of --input and --family");
  MeasurementSet m = [&] {
    if (!src.input.empty()) return measurement_set_from_json(parse_json_text(read_file(src.input), src.input));
    if (src.family == "mub") return mub_set(src.d, src.count);
    if (src.family == "sic5") return sic_five_tetrahedra();
    if (src.family == "sic") return MeasurementSet({qubit_sic()});
    return MeasurementSet({trine()});
  }();
  if (!src.extend || !apply_extend) return m;
  std::vector<Povm> ext;
  for (int x = 0; x < m.settings(); ++x) ext.push_back(extend_direct_sum(m.setting(x)));
  return MeasurementSet(ext);
}

/// Writes a flat report as JSON (default) or as a two-line CSV.
inline void emit(const Json& report, const std::string& format, std::ostream& out) {
  if (format == "csv") {
    std::string header, row;
    for (auto it = report.begin(); it != report.end(); ++it) {
      if (!header.empty()) {
        header += ",";
        row += ",";
      }
      header += it.key();
      const Json& v = it.value();
      if (v.is_array()) {
        std::string joined;
        for (const auto& e : v) joined += (joined.empty() ? "" : ";") + (e.is_string() ? e.get<std::string>() : dump_json(e));
        row += joined;
      } else {
        row += v.is_string() ? v.get<std::string>() : dump_json(v);
      }
    }
    out << header << "\n" << row << "\n";
    return;
  }
  out << dump_json(report, 2) << "\n";
}

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write " + path);
  f << text;
}

inline std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw InvalidArgument("--curve expects lo:hi:step");
  const double lo = parse_double(parts[0]), hi = parse_double(parts[1]), step = parse_double(parts[2]);
  if (!(step > 0.0) || !(hi >= lo)) throw InvalidArgument("--curve needs hi >= lo and step > 0");
  std::vector<double> grid;
  const long n = std::lround(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) grid.push_back(round_sig(lo + static_cast<double>(i) * step, 12));
  return grid;
}

/// Basis whose column a spans M_a; the POVM must be a rank-1 projective
/// measurement with d outcomes.
inline UnitaryMatrix outcome_basis(const Povm& p) {
  const int d = p.dim();
  if (p.outcomes() != d) throw UnsupportedError("--pair-model needs d-outcome basis measurements");
  CMatrix u(d, d);
  for (int a = 0; a < d; ++a) {
    const auto e = eig_hermitian(p[a]);
    if (std::abs(e.values(d - 1) - 1.0) > 1e-9 || (d > 1 && std::abs(e.values(d - 2)) > 1e-9)) {
      throw UnsupportedError("--pair-model needs rank-1 projective settings");
    }
    u.col(a) = e.vectors.col(d - 1);
  }
  return UnitaryMatrix(u);
}

inline std::string verdict(double residual) {
  return residual > kLudersDisturbanceTol ? "Lüders-disturbing" : "Lüders non-disturbing";
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Classical simulability of quantum measurement sets"};
  app.require_subcommand(1);
  std::string format = "json";
  std::string output;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--output", output, "Write the report to this file");
  };

  // threshold
  auto* threshold = app.add_subcommand("threshold", "All-projective classicality threshold and loss curve");
  int th_d = 0;
  std::string curve;
  threshold->add_option("--d", th_d, "Dimension")->required();
  threshold->add_option("--curve", curve, "Loss/noise curve grid lo:hi:step (CSV t,v,eta)");
  add_common(threshold);

  // search
  auto* search = app.add_subcommand("search", "Classical model search over a unitary ensemble");
  SetSource search_src;
  int n_lambda = 0;
  std::optional<std::uint64_t> seed;
  double tol = 1e-9;
  std::string model_out;
  add_set_options(search, search_src);
  search->add_option("--n-lambda", n_lambda, "Haar unitaries added to the eigenbases")->check(CLI::NonNegativeNumber);
  search->add_option("--seed", seed, "Seed for the ensemble stream");
  int max_rounds = SearchOptions{}.max_rounds;
  search->add_option("--tol", tol, "Solver tolerance")->check(CLI::PositiveNumber);
  search->add_option("--max-rounds", max_rounds, "Column-generation round limit")->check(CLI::PositiveNumber);
  search->add_option("--model-out", model_out, "Write the model JSON here");
  add_common(search);

  // witness
  auto* witness = app.add_subcommand("witness", "Witness value, classical bound and critical visibility");
  SetSource witness_src;
  std::string spec_path;
  bool state_discrimination = false;
  double visibility = 1.0;
  witness->add_option("--spec", spec_path, "Witness spec JSON file");
  witness->add_flag("--state-discrimination", state_discrimination, "Use the state-discrimination witness");
  witness->add_option("--visibility", visibility, "Evaluate on the depolarized set at this visibility");
  add_set_options(witness, witness_src);
  add_common(witness);

  // nondisturb
  auto* nondisturb = app.add_subcommand("nondisturb", "Lüders non-disturbance and joint-measurement checks");
  SetSource nd_src;
  std::optional<int> x_a, x_b;
  std::string model_path;
  bool pair_model = false;
  int nd_lambda = 0;
  std::optional<std::uint64_t> nd_seed;
  add_set_options(nondisturb, nd_src);
  nondisturb->add_option("--x-a", x_a, "First setting");
  nondisturb->add_option("--x-b", x_b, "Second setting");
  nondisturb->add_option("--model", model_path, "Classical model JSON file");
  nondisturb->add_flag("--pair-model", pair_model, "Use the two-device v = 1/2 model of the two settings");
  nondisturb->add_option("--n-lambda", nd_lambda, "Haar unitaries for the model search")->check(CLI::NonNegativeNumber);
  nondisturb->add_option("--seed", nd_seed, "Seed for the ensemble stream");
  add_common(nondisturb);

  // mc-check
  auto* mc = app.add_subcommand("mc-check", "Monte-Carlo check of E[max_a |u_a|^2] = H_d/d");
  int mc_d = 0;
  std::size_t samples = 100000;
  std::optional<std::uint64_t> mc_seed;
  mc->add_option("--d", mc_d, "Dimension")->required();
  mc->add_option("--samples", samples, "Number of Haar samples");
  mc->add_option("--seed", mc_seed, "Seed for the monte-carlo stream");
  add_common(mc);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    std::ostringstream buf;
    if (threshold->parsed()) {
      if (!curve.empty()) {
        const auto points = loss_noise_curve(th_d, parse_grid(curve));
        buf << "t,v,eta\n";
        for (const auto& p : points) buf << format_sig(p.t) << "," << format_sig(p.v) << "," << format_sig(p.eta) << "\n";
      } else {
        emit(Json{{"d", th_d}, {"harmonic", number(harmonic(th_d))}, {"v_star", number(classicality_threshold(th_d))}},
             format, buf);
      }
    } else if (search->parsed()) {
      const MeasurementSet m = load_set(search_src);
      if (n_lambda > 0 && !seed) throw InvalidArgument("--seed is required when --n-lambda > 0");
      const auto ensemble = default_ensemble(m, n_lambda, seed.value_or(0));
      SearchOptions opt;
      opt.tol = tol;
      opt.max_rounds = max_rounds;
      const auto res = search_classical_model(m, ensemble, opt);
      if (!model_out.empty()) write_output(model_out, dump_json(model_to_json(res.model), 2) + "\n", out);
      Json report{{"v_star", number(res.v_star)},
                  {"residual", number(res.residual)},
                  {"gap", number(res.gap)},
                  {"ensemble_size", static_cast<long>(ensemble.size())},
                  {"devices_used", res.model.devices()},
                  {"rounds", res.rounds},
                  {"columns", res.columns},
                  {"model", model_out.empty() ? Json(nullptr) : Json(model_out)}};
      emit(report, format, buf);
    } else if (witness->parsed()) {
      const MeasurementSet m = load_set(witness_src);
      if (spec_path.empty() == !state_discrimination) throw InvalidArgument("give exactly one of --spec and --state-discrimination");
      const WitnessSpec spec = spec_path.empty() ? state_discrimination_spec(m)
                                                 : witness_spec_from_json(parse_json_text(read_file(spec_path), spec_path), m);
      const MeasurementSet evaluated = visibility == 1.0 ? m : depolarize(m, visibility);
      const auto bound = beta_upper(score_operators(spec));
      const auto cv = critical_visibility(spec, evaluated, bound.beta);
      Json report{{"W", number(cv.witness)},
                  {"beta", number(bound.beta)},
                  {"beta_method", bound.exact ? "exact-qubit" : "sdp-relaxation"},
                  {"strategies", bound.strategies},
                  {"distinct_evaluated", bound.distinct},
                  {"v_crit", number(cv.v)},
                  {"violated", cv.violated},
                  {"verdict", cv.violated ? "VIOLATED" : "NOT VIOLATED"}};
      if (!cv.violated) report["note"] = "no violation at visibility 1; v_crit set to 1";
      emit(report, format, buf);
    } else if (nondisturb->parsed()) {
      const MeasurementSet m = load_set(nd_src, false);
      const int xa = x_a.value_or(0);
      const int xb = x_b.value_or(m.settings() > 1 ? 1 : xa);
      if (xa < 0 || xa >= m.settings() || xb < 0 || xb >= m.settings()) throw InvalidArgument("setting index out of range");
      if (!model_path.empty() && pair_model) throw InvalidArgument("give --model or --pair-model, not both");
      Json report;
      report["dim"] = m.dim();
      Json verdicts = Json::array();
      if (xa == xb && model_path.empty() && !pair_model) {
        // Same measurement twice, no shared randomness.
        const Povm p = m.setting(xa);
        const double r = luders_nondisturbance_residual({{1.0}, {p}, {p}, p, p});
        report["classical_model_found"] = nullptr;
        report["luders_residual"] = number(r);
        report["jm_marginal_residual"] = nullptr;
        verdicts.push_back("setting " + std::to_string(xa) + " measured twice without shared randomness: " + verdict(r));
      } else {
        if (xa == xb) throw InvalidArgument("--x-a and --x-b must differ when a model is used");
        ClassicalModel model;
        MeasurementSet target = m;
        if (!model_path.empty()) {
          model = model_from_json(parse_json_text(read_file(model_path), model_path));
        } else if (pair_model) {
          target = MeasurementSet({m.setting(xa), m.setting(xb)});
          model = pair_half_noise_model(outcome_basis(m.setting(xa)), outcome_basis(m.setting(xb)));
        } else {
          if (nd_lambda > 0 && !nd_seed) throw InvalidArgument("--seed is required when --n-lambda > 0");
          model = search_classical_model(m, default_ensemble(m, nd_lambda, nd_seed.value_or(0))).model;
        }
        if (model.dim != target.dim() || model.settings != target.settings() || model.outcomes != target.outcomes()) {
          throw StructuralError("model shape does not match the measurement set");
        }
        const int ma = pair_model ? 0 : xa, mb = pair_model ? 1 : xb;
        const double recon = reconstruct(model, target);
        const bool found = recon <= 1e-7;
        const double r = luders_nondisturbance_residual(scenario_from_model(model, ma, mb));
        const auto parent = jm_parent_from_model(model);
        double jm = 0.0;
        for (double v : marginal_residuals(parent, target, model.v)) jm = std::max(jm, v);
        report["classical_model_found"] = found;
        report["v"] = number(model.v);
        report["model_residual"] = number(recon);
        report["luders_residual"] = number(r);
        report["jm_marginal_residual"] = number(jm);
        report["jm_parent_outcomes"] = static_cast<long>(parent.elements.size());
        verdicts.push_back(std::string("classical model ") + (found ? "reproduces" : "does not reproduce") +
                           " the set at v = " + format_sig(model.v, 6));
        verdicts.push_back("settings " + std::to_string(xa) + " then " + std::to_string(xb) + ": " + verdict(r));
        verdicts.push_back(std::string("joint-measurement parent ") + (jm <= 1e-7 ? "reproduces" : "does not reproduce") +
                           " the marginals");
      }
      if (nd_src.extend) {
        double ext = 0.0;
        int ext_dim = 0;
        for (int x = 0; x < m.settings(); ++x) {
          ext = std::max(ext, extended_instrument_residual(m.setting(x)));
          ext_dim = std::max(ext_dim, m.outcomes() + m.dim());
        }
        report["extended_residual"] = number(ext);
        report["extended_dim"] = ext_dim;
        verdicts.push_back("extended POVMs in dimension " + std::to_string(ext_dim) + ": " +
                           (ext <= 1e-12 ? "non-disturbing" : "disturbing") + " under their instrument");
      }
      report["verdicts"] = std::move(verdicts);
      emit(report, format, buf);
    } else if (mc->parsed()) {
      if (!mc_seed) throw InvalidArgument("--seed is required for mc-check");
      const auto r = mc_check(mc_d, samples, *mc_seed);
      emit(Json{{"d", mc_d},
                {"samples", static_cast<long>(samples)},
                {"mean", number(r.sample.mean)},
                {"standard_error", number(r.sample.standard_error)},
                {"expected", number(r.expected)},
                {"z", number(r.z)}},
           format, buf);
    }
    write_output(output, buf.str(), out);
    return kOk;
  } catch (const GuardError& e) {
    err << "error: " << e.what() << "\n";
    return kGuardError;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << "\n";
    return kSolverError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace classim::cli
