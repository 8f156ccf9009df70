#include "speclab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace speclab {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double to_number(const std::string& key, const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') fail("key '" + key + "' expects a number, got '" + s + "'");
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(to_number(key, trim(tok)));
  return out;
}

using Table = std::vector<std::pair<std::string, std::string>>;

Bc parse_bc_token(const std::string& s) {
  if (s == "dirichlet") return Bc::dirichlet;
  if (s == "neumann") return Bc::neumann;
  fail("unknown boundary condition '" + s + "'");
}

DomainSpec parse_domain(const Table& t) {
  std::string kind;
  double a1 = 0, b1 = 1, a2 = 0, b2 = 1;
  int n = 0, d = 3;
  std::array<Bc, 4> bc{Bc::dirichlet, Bc::dirichlet, Bc::dirichlet, Bc::dirichlet};
  for (const auto& [k, v] : t) {
    if (k == "kind") kind = unquote(v);
    else if (k == "a1" || k == "a") a1 = to_number(k, v);
    else if (k == "b1" || k == "b") b1 = to_number(k, v);
    else if (k == "a2") a2 = to_number(k, v);
    else if (k == "b2") b2 = to_number(k, v);
    else if (k == "n") n = static_cast<int>(to_number(k, v));
    else if (k == "d") d = static_cast<int>(to_number(k, v));
    else if (k == "bc") {
      std::stringstream ss(unquote(v));
      std::string tok;
      int i = 0;
      std::vector<Bc> got;
      while (std::getline(ss, tok, ',')) got.push_back(parse_bc_token(trim(tok)));
      if (got.size() == 1) bc = {got[0], got[0], got[0], got[0]};
      else
        for (Bc b : got) {
          if (i >= 4) fail("too many bc entries");
          bc[i++] = b;
        }
      if (got.size() != 1 && got.size() != 2 && got.size() != 4)
        fail("bc expects 1, 2 or 4 comma-separated entries");
      if (got.size() == 2) {
        bc[2] = bc[0];
        bc[3] = bc[1];
      }
    } else {
      fail("unknown key '" + k + "' in [domain]");
    }
  }
  if (n == 0) fail("[domain] requires n");
  DomainSpec spec;
  if (kind == "interval") spec = DomainSpec::interval(a1, b1, n, bc[0], bc[1]);
  else if (kind == "rectangle") {
    spec = DomainSpec::rectangle(a1, b1, a2, b2, n);
    spec.bc = bc;
  } else if (kind == "radial") spec = DomainSpec::radial(a1, b1, d, n, bc[0], bc[1]);
  else fail("unknown domain kind '" + kind + "'");
  return spec;
}

PotentialSpec parse_potential(const Table& t) {
  PotentialSpec p;
  std::string kind;
  for (const auto& [k, v] : t) {
    if (k == "kind") kind = unquote(v);
    else if (k == "depth" || k == "height") p.height = to_number(k, v);
    else if (k == "radius") p.radius = to_number(k, v);
    else if (k == "width") p.width = to_number(k, v);
    else if (k == "order") p.order = static_cast<int>(to_number(k, v));
    else if (k == "center") {
      auto xs = to_list(k, unquote(v));
      p.center[0] = xs.size() > 0 ? xs[0] : 0.0;
      p.center[1] = xs.size() > 1 ? xs[1] : 0.0;
    } else if (k == "coupling") p.coupling = to_number(k, v);
    else if (k == "d") p.hardy_d = static_cast<int>(to_number(k, v));
    else if (k == "seed") p.seed = static_cast<uint64_t>(to_number(k, v));
    else if (k == "distribution") {
      const std::string s = unquote(v);
      if (s == "rademacher") p.dist = RandomDist::rademacher;
      else if (s == "uniform") p.dist = RandomDist::uniform;
      else fail("unknown distribution '" + s + "'");
    } else if (k == "amplitude_decay") p.amplitude_decay = to_number(k, v);
    else if (k == "wavevector") p.wavevector = to_number(k, v);
    else if (k == "envelope_power") p.envelope_power = to_number(k, v);
    else fail("unknown key '" + k + "' in [potential]");
  }
  if (kind == "well") p.kind = PotentialKind::well;
  else if (kind == "smooth_bump") p.kind = PotentialKind::smooth_bump;
  else if (kind == "hardy") p.kind = PotentialKind::hardy;
  else if (kind == "sparse_bumps") p.kind = PotentialKind::sparse_bumps;
  else if (kind == "random_lattice") p.kind = PotentialKind::random_lattice;
  else if (kind == "oscillatory") p.kind = PotentialKind::oscillatory;
  else fail("unknown potential kind '" + kind + "'");
  p.validate();
  return p;
}

}  // namespace

double ExperimentConfig::param(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::vector<double> ExperimentConfig::param_list(const std::string& key,
                                                 const std::vector<double>& fallback) const {
  auto it = sparams.find(key);
  if (it == sparams.end()) {
    auto in = params.find(key);
    if (in != params.end()) return {in->second};
    return fallback;
  }
  return to_list(key, it->second);
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line, section;
  Table top, domain, tolerances;
  std::vector<Table> potentials;
  Table params;
  int lineno = 0;

  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section == "potential") potentials.emplace_back();
      else if (section != "domain" && section != "params" && section != "tolerances")
        fail("unknown section '[" + section + "]'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section.empty()) top.push_back({key, val});
    else if (section == "domain") domain.push_back({key, val});
    else if (section == "potential") potentials.back().push_back({key, val});
    else if (section == "params") params.push_back({key, val});
    else if (section == "tolerances") tolerances.push_back({key, val});
  }

  for (const auto& [k, v] : top) {
    if (k == "experiment") cfg.experiment = unquote(v);
    else if (k == "pipeline") cfg.pipeline = unquote(v);
    else if (k == "seed") cfg.seed = static_cast<uint64_t>(to_number(k, v));
    else fail("unknown top-level key '" + k + "'");
  }
  if (!domain.empty()) {
    cfg.domain = parse_domain(domain);
    cfg.has_domain = true;
  }
  for (const auto& t : potentials) cfg.potentials.push_back(parse_potential(t));
  for (const auto& [k, v] : params) {
    // numeric when it parses; kept as a string list otherwise
    char* end = nullptr;
    const double num = std::strtod(v.c_str(), &end);
    if (end != v.c_str() && *end == '\0') cfg.params[k] = num;
    else cfg.sparams[k] = unquote(v);
  }
  for (const auto& [k, v] : tolerances) {
    if (k == "cover") cfg.tol_cover = to_number(k, v);
    else if (k == "chain_slack") cfg.chain_slack = to_number(k, v);
    else fail("unknown key '" + k + "' in [tolerances]");
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace speclab
