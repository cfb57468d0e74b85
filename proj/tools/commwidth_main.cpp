#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "commwidth.h"

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kExitInvalid = 2;

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << text;
  return static_cast<bool>(out);
}

struct CommonFlags {
  double tol = 0.0;
  bool has_tol = false;
  std::vector<double> window;
  std::vector<int> grid;
  int horizon = 0;
  int resolution = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--tol", tol, "verification tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--window", window, "verification window lo hi")->expected(2);
    cmd->add_option("--grid", grid, "verification grid theta_n t_n")->expected(2);
    cmd->add_option("--horizon", horizon, "initial suited horizon (bands each side)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--resolution", resolution, "curve sampling resolution")
        ->check(CLI::PositiveNumber);
    has_tol_opt = cmd->get_option("--tol");
  }

  std::string overrides(const std::vector<long long>& exponents = {}) const {
    ordered_json o = ordered_json::object();
    if (has_tol_opt && has_tol_opt->count() > 0) o["tolerance"] = tol;
    if (window.size() == 2) o["window"] = window;
    if (grid.size() == 2) o["grid"] = grid;
    if (horizon > 0) o["horizon"] = horizon;
    if (resolution > 0) o["resolution"] = resolution;
    if (!exponents.empty()) o["exponents"] = exponents;
    return o.dump();
  }

 private:
  CLI::Option* has_tol_opt = nullptr;
};

void print_report(const std::string& cert_text) {
  try {
    ordered_json doc = ordered_json::parse(cert_text);
    const auto& rep = doc.at("report");
    std::cout << (rep.at("pass").get<bool>() ? "PASS" : "FAIL")
              << "  max_error=" << rep.at("max_error").get<double>()
              << "  tolerance=" << rep.at("tolerance").get<double>() << "\n";
  } catch (const std::exception&) {
    std::cout << "certificate written (report unreadable)\n";
  }
}

int emit_certificate(int status, cw_certificate* cert, const std::string& out_path) {
  if (status != 0 && !cert) {
    std::cerr << "error: " << cw_last_error() << "\n";
    return status;
  }
  char* text = nullptr;
  int jst = cw_cert_to_json(cert, &text);
  if (jst != 0) {
    std::cerr << "error: " << cw_last_error() << "\n";
    cw_cert_free(cert);
    return jst;
  }
  std::string body(text);
  cw_string_free(text);
  cw_cert_free(cert);
  if (!write_file(out_path, body)) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return kExitInvalid;
  }
  print_report(body);
  if (status != 0) std::cerr << "error: " << cw_last_error() << "\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"commutator factorization certificates for line and cylinder homeomorphisms"};
  app.require_subcommand(1);

  std::string spec_path, cert_path, out_path;
  std::string exponents_arg;

  auto* factor = app.add_subcommand("factor", "factor a homeomorphism as one commutator");
  factor->add_option("spec", spec_path, "input spec JSON")->required();
  factor->add_option("-o,--output", out_path, "certificate output path")->required();
  CommonFlags factor_flags;
  factor_flags.attach(factor);

  auto* powers = app.add_subcommand("powers", "decompose as a product of prescribed powers");
  powers->add_option("spec", spec_path, "input spec JSON")->required();
  powers->add_option("-o,--output", out_path, "certificate output path")->required();
  powers->add_option("--exponents", exponents_arg, "comma-separated nonzero exponents");
  CommonFlags powers_flags;
  powers_flags.attach(powers);

  auto* verify = app.add_subcommand("verify", "re-check a certificate's identity claim");
  verify->add_option("cert", cert_path, "certificate JSON")->required();

  auto* plot = app.add_subcommand("plot", "render a certificate as SVG");
  plot->add_option("cert", cert_path, "certificate JSON")->required();
  plot->add_option("-o,--output", out_path, "SVG output path")->required();

  CLI11_PARSE(app, argc, argv);

  if (factor->parsed()) {
    std::string spec;
    if (!read_file(spec_path, spec)) {
      std::cerr << "error: cannot read " << spec_path << "\n";
      return kExitInvalid;
    }
    cw_certificate* cert = nullptr;
    int status = cw_factor(spec.c_str(), factor_flags.overrides().c_str(), &cert);
    return emit_certificate(status, cert, out_path);
  }

  if (powers->parsed()) {
    std::string spec;
    if (!read_file(spec_path, spec)) {
      std::cerr << "error: cannot read " << spec_path << "\n";
      return kExitInvalid;
    }
    std::vector<long long> exps;
    if (!exponents_arg.empty()) {
      std::stringstream ss(exponents_arg);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          exps.push_back(std::stoll(item));
        } catch (const std::exception&) {
          std::cerr << "error: bad exponent '" << item << "'\n";
          return kExitInvalid;
        }
      }
    }
    cw_certificate* cert = nullptr;
    int status = cw_powers(spec.c_str(), powers_flags.overrides(exps).c_str(), &cert);
    return emit_certificate(status, cert, out_path);
  }

  if (verify->parsed()) {
    std::string cert;
    if (!read_file(cert_path, cert)) {
      std::cerr << "error: cannot read " << cert_path << "\n";
      return kExitInvalid;
    }
    char* report = nullptr;
    int status = cw_verify(cert.c_str(), &report);
    if (report) {
      std::cout << report;
      cw_string_free(report);
    }
    if (status != 0) std::cerr << "error: " << cw_last_error() << "\n";
    return status;
  }

  if (plot->parsed()) {
    std::string cert;
    if (!read_file(cert_path, cert)) {
      std::cerr << "error: cannot read " << cert_path << "\n";
      return kExitInvalid;
    }
    char* svg = nullptr;
    int status = cw_plot(cert.c_str(), &svg);
    if (status != 0) {
      std::cerr << "error: " << cw_last_error() << "\n";
      return status;
    }
    std::string body(svg);
    cw_string_free(svg);
    if (!write_file(out_path, body)) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return kExitInvalid;
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
  }

  return kExitInvalid;
}
