// Machine-readable output: profile tables (csv or json) and energy reports
// (json).  Numeric formatting is shortest-round-trip, so identical inputs
// produce byte-identical files and parse(emit(x)) == x.
#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "annulus/bvp.hpp"
#include "annulus/problem.hpp"
#include "annulus/variational.hpp"

namespace annulus {

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Profile table: s, H, Hdot, H - s*Hdot, and the integrand value per node.
inline void write_profile_csv(std::ostream& os, const Profile& prof, const Problem& pb) {
  os << "s,H,Hdot,H_minus_s_Hdot,lagrangian\n";
  for (std::size_t i = 0; i < prof.s.size(); ++i) {
    const EvalPoint p{prof.s[i], prof.H[i], prof.K[i]};
    os << detail::fmt_double(prof.s[i]) << ',' << detail::fmt_double(prof.H[i]) << ','
       << detail::fmt_double(prof.K[i]) << ','
       << detail::fmt_double(prof.H[i] - prof.s[i] * prof.K[i]) << ','
       << detail::fmt_double(lagrangian(p, pb)) << '\n';
  }
}

inline void write_profile_json(std::ostream& os, const Profile& prof, const Problem& pb) {
  nlohmann::json j;
  j["s"] = prof.s;
  j["H"] = prof.H;
  j["Hdot"] = prof.K;
  std::vector<double> d(prof.s.size()), L(prof.s.size());
  for (std::size_t i = 0; i < prof.s.size(); ++i) {
    d[i] = prof.H[i] - prof.s[i] * prof.K[i];
    L[i] = lagrangian({prof.s[i], prof.H[i], prof.K[i]}, pb);
  }
  j["H_minus_s_Hdot"] = d;
  j["lagrangian"] = L;
  os << j.dump(2) << '\n';
}

/// Parsed profile table; Hdot column is optional on input.
struct ProfileTable {
  std::vector<double> s, H;
  std::optional<std::vector<double>> K;
};

inline ProfileTable read_profile_csv(std::istream& is) {
  ProfileTable tab;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_profile_csv: empty input");
  auto columns = [](const std::string& l) {
    std::vector<std::string> cols;
    std::stringstream ss(l);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    return cols;
  };
  const auto header = columns(line);
  if (header.size() < 2 || header[0] != "s" || header[1] != "H")
    throw std::runtime_error("read_profile_csv: expected header starting with s,H");
  const bool has_k = header.size() >= 3 && header[2] == "Hdot";
  if (has_k) tab.K.emplace();
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = columns(line);
    if (cols.size() < header.size())
      throw std::runtime_error("read_profile_csv: short row at line " + std::to_string(lineno));
    auto num = [&](const std::string& c) {
      double v = 0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size())
        throw std::runtime_error("read_profile_csv: bad number '" + c + "' at line " +
                                 std::to_string(lineno));
      return v;
    };
    tab.s.push_back(num(cols[0]));
    tab.H.push_back(num(cols[1]));
    if (has_k) tab.K->push_back(num(cols[2]));
  }
  if (tab.s.size() < 2) throw std::runtime_error("read_profile_csv: need at least 2 rows");
  return tab;
}

/// Fixed-schema energy report document.
inline nlohmann::json report_to_json(const EnergyReport& rep, const Problem& pb) {
  nlohmann::json j;
  j["lambda_star"] = rep.lambda_star ? nlohmann::json(*rep.lambda_star) : nlohmann::json();
  j["energy_total"] = rep.total;
  j["energy_term"] = rep.energy_term;
  j["distortion_term"] = rep.distortion_term;
  j["el_residual"] = rep.el_residual;
  j["case"] = to_string(rep.case_tag.tag);
  j["n"] = pb.n;
  j["r"] = pb.r;
  j["R"] = pb.R;
  j["r_star"] = pb.r_star;
  j["R_star"] = pb.R_star;
  j["alpha"] = pb.alpha;
  return j;
}

struct ParsedReport {
  EnergyReport report;
  int n = 0;
  double r = 0, R = 0, r_star = 0, R_star = 0, alpha = 0;
};

inline ParsedReport report_from_json(const nlohmann::json& j) {
  ParsedReport out;
  if (!j.at("lambda_star").is_null()) out.report.lambda_star = j.at("lambda_star").get<double>();
  out.report.total = j.at("energy_total").get<double>();
  out.report.energy_term = j.at("energy_term").get<double>();
  out.report.distortion_term = j.at("distortion_term").get<double>();
  out.report.el_residual = j.at("el_residual").get<double>();
  const std::string c = j.at("case").get<std::string>();
  out.report.case_tag.tag = c == "linear"        ? ProfileCase::linear
                            : c == "expanding"   ? ProfileCase::expanding
                            : c == "contracting" ? ProfileCase::contracting
                                                 : throw std::runtime_error(
                                                       "report_from_json: unknown case '" + c +
                                                       "'");
  out.n = j.at("n").get<int>();
  out.r = j.at("r").get<double>();
  out.R = j.at("R").get<double>();
  out.r_star = j.at("r_star").get<double>();
  out.R_star = j.at("R_star").get<double>();
  out.alpha = j.at("alpha").get<double>();
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace annulus
