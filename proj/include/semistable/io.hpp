#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"  // vendored nlohmann/json

#include "semistable/analysis.hpp"
#include "semistable/asymptotics.hpp"
#include "semistable/errors.hpp"
#include "semistable/nonlinearity.hpp"
#include "semistable/radial.hpp"
#include "semistable/verdict.hpp"

namespace semistable::io {

using json = nlohmann::ordered_json;

/// Locale-independent shortest-roundtrip-safe text (17 significant digits).
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("invalid number '" + std::string(s) + "'", 0);
  return v;
}

/// JSON has no infinities: they become the strings "inf"/"-inf", NaN becomes null.
inline json number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline json number(const std::optional<double>& x) { return x ? number(*x) : json(nullptr); }

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const ValidationReport& r) {
  json j;
  j["all_passed"] = r.all_passed();
  j["superlinear_ratio_max"] = number(r.superlinear_ratio_max);
  j["evaluable_up_to"] = number(r.evaluable_up_to);
  json checks = json::array();
  for (const auto& c : r.checks) {
    json cj;
    cj["name"] = c.name;
    cj["passed"] = c.passed;
    cj["witness"] = number(c.witness);
    cj["detail"] = c.detail;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  return j;
}

inline json to_json(const AsymptoticProfile& p) {
  json j;
  j["nonlinearity"] = p.nonlinearity;
  j["convex"] = p.convex;
  j["superlinear"] = p.superlinear;
  j["f0_positive"] = p.f0_positive;
  j["tau_minus"] = number(p.tau_minus);
  j["tau_plus"] = number(p.tau_plus);
  j["convex_power_delta"] = number(p.convex_power_delta);
  json c;
  c["1.6"] = p.cond_1_6 ? json(*p.cond_1_6) : json(nullptr);
  c["1.7"] = p.cond_1_7 ? json{{"eps", number(*p.cond_1_7)}} : json(nullptr);
  c["1.25"] = p.cond_1_25 ? json{{"gamma", number(p.cond_1_25->first)}, {"eps", number(p.cond_1_25->second)}}
                          : json(nullptr);
  c["1.26"] = p.cond_1_26 ? json{{"gamma", number(p.cond_1_26->first)}, {"delta", number(p.cond_1_26->second)}}
                          : json(nullptr);
  c["1.29"] = p.cond_1_29 ? json{{"eps", number(*p.cond_1_29)}} : json(nullptr);
  c["1.30"] = p.cond_1_30 ? json{{"eps", number(*p.cond_1_30)}} : json(nullptr);
  c["1.31"] = p.cond_1_31 ? json{{"eps", number(*p.cond_1_31)}} : json(nullptr);
  c["1.32"] = p.cond_1_32 ? json{{"gamma", number(*p.cond_1_32)}} : json(nullptr);
  j["conditions"] = c;
  json conf = json::object();
  for (const auto& [k, v] : p.confidence) conf[k] = confidence_name(v);
  j["confidence"] = conf;
  return j;
}

inline json to_json(const EstimateCertificate& c) {
  return json{{"source", c.name()},
              {"alpha", number(c.alpha)},
              {"sigma", number(c.sigma)},
              {"open_sup", c.open_sup},
              {"parameters", c.parameters}};
}

inline json to_json(const Threshold& t) {
  json j;
  j["n_sup"] = number(t.n_sup);
  json cl = json::array();
  for (const auto& c : t.clauses) cl.push_back(json{{"clause", c.clause}, {"n_sup", number(c.n_sup)}});
  j["clauses"] = cl;
  return j;
}

inline json to_json(const DimensionEntry& e) {
  json j;
  j["n"] = e.n;
  j["guarantee"] = guarantee_name(e.guarantee);
  j["clauses"] = e.clauses;
  j["exponents"] = json{{"u_Lr_sup", number(e.u_lr_sup)}, {"f_Lr_sup", number(e.f_lr_sup)}, {"W1r_sup", number(e.w1r_sup)}};
  return j;
}

inline json to_json(const Verdict& v) {
  json j;
  j["profile"] = to_json(v.profile);
  json certs = json::array();
  for (const auto& c : v.certificates.certificates) certs.push_back(to_json(c));
  j["certificates"] = certs;
  j["all_dimensions_linf"] = v.certificates.all_dimensions_linf ? json(*v.certificates.all_dimensions_linf) : json(nullptr);
  j["h1_all_dimensions"] = v.h1_all_dimensions ? json(*v.h1_all_dimensions) : json(nullptr);
  j["not_fired"] = v.certificates.not_fired;
  j["fprime_integrability"] = number(v.certificates.fprime_integrability);
  j["thresholds"] = json{{"linf", to_json(v.linf)}, {"h10", to_json(v.h10)}};
  j["requested"] = to_json(v.requested);
  json table = json::array();
  for (const auto& e : v.table) table.push_back(to_json(e));
  j["table"] = table;
  return j;
}

inline json to_json(const BoundednessDiagnosis& d) {
  json j;
  j["kind"] = tail_kind_name(d.kind);
  j["limit"] = number(d.limit);
  j["power"] = number(d.power);
  j["empirical_sup"] = number(d.empirical_sup);
  j["lambda_ref"] = number(d.lambda_ref);
  j["tail_points"] = d.values.size();
  j["verdict_consistency"] = d.verdict_consistency;
  json fits = json::array();
  for (const auto& f : d.fits)
    fits.push_back(json{{"model", f.model},
                        {"a", number(f.a)},
                        {"b", number(f.b)},
                        {"exponent", number(f.exponent)},
                        {"rss", number(f.rss)}});
  j["fits"] = fits;
  return j;
}

inline json branch_summary(const Branch& b) {
  json j;
  j["n"] = b.n;
  j["points"] = b.points.size();
  std::size_t failed = 0;
  for (const auto& p : b.points) failed += p.ok() ? 0 : 1;
  j["failed_points"] = failed;
  j["lambda_star"] = number(b.lambda_star);
  j["m_star"] = number(b.m_star);
  j["fold_m"] = number(b.fold_m);
  j["monotone_flag"] = b.monotone_flag;
  j["lambda_sup_estimate"] = number(b.lambda_sup_estimate);
  j["minimal_points"] = b.minimal_indices().size();
  // mu1 sign change: last minimal point and first point past the fold.
  std::optional<double> mu_before, mu_after;
  for (const auto& p : b.points) {
    if (!p.ok() || !p.mu1) continue;
    if (!b.fold_m || p.m <= *b.fold_m) mu_before = p.mu1;
    else if (!mu_after) mu_after = p.mu1;
  }
  j["mu1_last_minimal"] = number(mu_before);
  j["mu1_first_past_fold"] = number(mu_after);
  return j;
}

inline json to_json(const TrackTable& t) {
  json j;
  j["columns"] = t.columns;
  json rows = json::array();
  for (std::size_t i = 0; i < t.m.size(); ++i) {
    json r;
    r["m"] = number(t.m[i]);
    r["lambda"] = number(t.lambda[i]);
    json vals = json::array(), notes = json::array();
    for (std::size_t k = 0; k < t.columns.size(); ++k) {
      vals.push_back(number(t.values[i][k]));
      notes.push_back(t.notes[i][k]);
    }
    r["values"] = vals;
    r["notes"] = notes;
    rows.push_back(r);
  }
  j["rows"] = rows;
  return j;
}

// ---------------------------------------------------------------------------
// Markdown

inline std::string to_markdown(const Verdict& v, int n) {
  std::ostringstream os;
  os << "# Regularity verdict\n\n";
  os << "Nonlinearity: `" << v.profile.nonlinearity << "`\n\n";
  os << "Requested dimension n = " << n << ": **" << guarantee_name(v.requested.guarantee) << "**";
  if (!v.requested.clauses.empty()) {
    os << " (";
    for (std::size_t i = 0; i < v.requested.clauses.size(); ++i) os << (i ? ", " : "") << v.requested.clauses[i];
    os << ")";
  }
  os << "\n\n";
  os << "| tau_minus | tau_plus | Linf for n < | H10 for n < |\n|---|---|---|---|\n";
  os << "| " << (v.profile.tau_minus ? format_double(*v.profile.tau_minus) : "?") << " | "
     << (v.profile.tau_plus ? format_double(*v.profile.tau_plus) : "?") << " | " << format_double(v.linf.n_sup) << " | "
     << format_double(v.h10.n_sup) << " |\n\n";
  os << "## Certificates\n\n| source | alpha | sigma | open | parameters |\n|---|---|---|---|---|\n";
  for (const auto& c : v.certificates.certificates)
    os << "| " << c.name() << " | " << format_double(c.alpha) << " | " << format_double(c.sigma) << " | "
       << (c.open_sup ? "yes" : "no") << " | " << c.parameters << " |\n";
  os << "\n## By dimension\n\n| n | guarantee | clauses | u in L^r, r < | W^{1,r}, r < |\n|---|---|---|---|---|\n";
  for (const auto& e : v.table) {
    os << "| " << e.n << " | " << guarantee_name(e.guarantee) << " | ";
    for (std::size_t i = 0; i < e.clauses.size(); ++i) os << (i ? ", " : "") << e.clauses[i];
    os << " | " << (e.u_lr_sup ? format_double(*e.u_lr_sup) : "") << " | "
       << (e.w1r_sup ? format_double(*e.w1r_sup) : "") << " |\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;  // empty cell -> nullopt
};

inline void write_csv(std::ostream& os, const CsvTable& t) {
  for (std::size_t k = 0; k < t.header.size(); ++k) os << (k ? "," : "") << t.header[k];
  os << "\n";
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw DomainError("csv row width differs from header");
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << (row[k] ? format_double(*row[k]) : "");
    os << "\n";
  }
}

inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = s.find(',', start);
      out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return out;
  };
  if (!std::getline(is, line)) throw ParseError("csv: missing header", 0);
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw ParseError("csv: wrong number of cells on line " + std::to_string(lineno), lineno);
    std::vector<std::optional<double>> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Branch points with optional tracked columns appended.
inline CsvTable branch_csv(const Branch& b, const TrackTable* track = nullptr) {
  CsvTable t;
  t.header = {"m", "R", "lambda", "mu1", "u_inf", "residual"};
  if (track) {
    if (track->m.size() != b.points.size()) throw DomainError("track table does not match the branch");
    t.header.insert(t.header.end(), track->columns.begin(), track->columns.end());
  }
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    const auto& p = b.points[i];
    std::vector<std::optional<double>> row;
    if (p.ok()) {
      row = {p.m, p.R, p.lambda, p.mu1, p.u_inf, p.residual};
    } else {
      row = {p.m, std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
    }
    if (track)
      for (const auto& v : track->values[i]) row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace semistable::io
