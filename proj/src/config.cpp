#include "omgrid/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>

#include "omgrid/csv.hpp"

namespace omgrid {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  size_t at = 0;
  while (at < s.size()) {
    while (at < s.size() && (s[at] == ' ' || s[at] == '\t')) ++at;
    size_t start = at;
    while (at < s.size() && s[at] != ' ' && s[at] != '\t') ++at;
    if (at > start) out.push_back(s.substr(start, at - start));
  }
  return out;
}

// per-bus overrides before they are merged into a BusSpec
struct BusPatch {
  std::optional<double> lambda, s_min, s_max, u_min, u_max, mu_c, mu_d, s_init;
  std::vector<CostPiece> pieces;
  std::optional<DisturbanceSupport> support;
  std::optional<PriceSchedule> price;
  std::optional<std::pair<double, double>> price_support;
};

struct RawEdge {
  int tail, head;
  double b, fmax;
};

class Parser {
 public:
  explicit Parser(const std::string& path) : path_(path) {}

  ExperimentConfig parse() {
    std::ifstream in(path_);
    if (!in) fail(errc::parse, "cannot open " + path_);
    std::string line;
    while (std::getline(in, line)) {
      ++lineno_;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        enter_section(line);
        continue;
      }
      const size_t eq = line.find('=');
      if (eq == std::string::npos) err("expected key = value");
      dispatch(trim(line.substr(0, eq)), split_ws(trim(line.substr(eq + 1))),
               trim(line.substr(eq + 1)));
    }
    return build();
  }

 private:
  enum class Section { none, grid, bus, params, scenario, run, admm };

  [[noreturn]] void err(const std::string& what) {
    fail(errc::parse, path_ + ":" + std::to_string(lineno_) + ": " + what);
  }

  double num(const std::string& tok, const std::string& keypath) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE)
      err(keypath + ": cannot read number '" + tok + "'");
    return v;
  }

  long count(const std::string& tok, const std::string& keypath) {
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(tok.c_str(), &end, 10);
    if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE)
      err(keypath + ": cannot read integer '" + tok + "'");
    return v;
  }

  void want(const std::vector<std::string>& tok, size_t lo, size_t hi,
            const std::string& keypath) {
    if (tok.size() < lo || tok.size() > hi)
      err(keypath + ": expected " +
          (lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi)) +
          " values, got " + std::to_string(tok.size()));
  }

  void enter_section(const std::string& line) {
    if (line.back() != ']') err("unterminated section header");
    const std::string name = trim(line.substr(1, line.size() - 2));
    bus_patch_ = nullptr;
    if (name == "grid") {
      section_ = Section::grid;
    } else if (name == "params") {
      section_ = Section::params;
    } else if (name == "scenario") {
      section_ = Section::scenario;
    } else if (name == "run") {
      section_ = Section::run;
    } else if (name == "admm") {
      section_ = Section::admm;
    } else if (name.rfind("bus", 0) == 0) {
      section_ = Section::bus;
      const std::string which = trim(name.substr(3));
      if (which == "*") {
        bus_patch_ = &wildcard_;
      } else if (!which.empty()) {
        const long id = count(which, "[bus]");
        if (id < 0) err("bus id must be nonnegative");
        bus_patch_ = &specific_[static_cast<int>(id)];
      } else {
        err("bus section needs '*' or an id");
      }
    } else {
      err("unknown section [" + name + "]");
    }
  }

  void dispatch(const std::string& key, const std::vector<std::string>& tok,
                const std::string& raw) {
    switch (section_) {
      case Section::none: err("key before any [section]");
      case Section::grid: return grid_key(key, tok);
      case Section::bus: return bus_key(key, tok);
      case Section::params: return params_key(key, tok);
      case Section::scenario: return scenario_key(key, tok, raw);
      case Section::run: return run_key(key, tok, raw);
      case Section::admm: return admm_key(key, tok);
    }
  }

  void grid_key(const std::string& key, const std::vector<std::string>& tok) {
    if (key == "nodes") {
      want(tok, 1, 1, "grid.nodes");
      nodes_ = count(tok[0], "grid.nodes");
    } else if (key == "edge") {
      want(tok, 4, 4, "grid.edge");
      RawEdge e;
      e.tail = static_cast<int>(count(tok[0], "grid.edge"));
      e.head = static_cast<int>(count(tok[1], "grid.edge"));
      e.b = num(tok[2], "grid.edge");
      e.fmax = num(tok[3], "grid.edge");
      raw_edges_.push_back(e);
    } else {
      err("unknown key grid." + key);
    }
  }

  void bus_key(const std::string& key, const std::vector<std::string>& tok) {
    BusPatch& p = *bus_patch_;
    const std::string kp = "bus." + key;
    auto scalar = [&](std::optional<double>& slot) {
      want(tok, 1, 1, kp);
      slot = num(tok[0], kp);
    };
    if (key == "lambda") return scalar(p.lambda);
    if (key == "s_min") return scalar(p.s_min);
    if (key == "s_max") return scalar(p.s_max);
    if (key == "u_min") return scalar(p.u_min);
    if (key == "u_max") return scalar(p.u_max);
    if (key == "mu_c") return scalar(p.mu_c);
    if (key == "mu_d") return scalar(p.mu_d);
    if (key == "s_init") return scalar(p.s_init);
    if (key == "cost_piece") {
      want(tok, 3, 3, kp);
      CostPiece piece;
      piece.left = num(tok[0], kp);
      piece.slope = num(tok[1], kp);
      if (tok[2] == "scaled")
        piece.scaled_by_price = true;
      else if (tok[2] == "fixed")
        piece.scaled_by_price = false;
      else
        err(kp + ": third value must be 'scaled' or 'fixed'");
      p.pieces.push_back(piece);
      return;
    }
    if (key == "price") {
      want(tok, 2, 6, kp);
      PriceSchedule ps;
      if (tok[0] == "constant") {
        want(tok, 2, 2, kp);
        ps.kind = PriceSchedule::Kind::constant;
        ps.value = num(tok[1], kp);
      } else if (tok[0] == "day_night") {
        if (tok.size() != 3 && tok.size() != 4 && tok.size() != 6)
          err(kp + ": day_night takes DAY NIGHT [PERIODS [START END]]");
        ps.kind = PriceSchedule::Kind::day_night;
        ps.day_value = num(tok[1], kp);
        ps.night_value = num(tok[2], kp);
        if (tok.size() >= 4) ps.periods_per_day = static_cast<int>(count(tok[3], kp));
        if (tok.size() == 6) {
          ps.day_start = static_cast<int>(count(tok[4], kp));
          ps.day_end = static_cast<int>(count(tok[5], kp));
        }
        if (ps.periods_per_day < 1 || ps.day_start < 0 || ps.day_end >= ps.periods_per_day ||
            ps.day_start > ps.day_end)
          err(kp + ": day window must fit inside the day");
      } else {
        err(kp + ": schedule must be 'constant' or 'day_night'");
      }
      p.price = ps;
      return;
    }
    if (key == "price_support") {
      want(tok, 2, 2, kp);
      p.price_support = {num(tok[0], kp), num(tok[1], kp)};
      return;
    }
    if (key == "delta_support") {
      want(tok, 2, 2, kp);
      p.support = DisturbanceSupport{num(tok[0], kp), num(tok[1], kp)};
      return;
    }
    err("unknown key " + kp);
  }

  void params_key(const std::string& key, const std::vector<std::string>& tok) {
    const std::string kp = "params." + key;
    if (key == "strategy") {
      want(tok, 1, 1, kp);
      if (tok[0] == "maxW")
        cfg_.params.strategy = ParamsSpec::Strategy::max_w;
      else if (tok[0] == "minS")
        cfg_.params.strategy = ParamsSpec::Strategy::min_s;
      else if (tok[0] == "explicit")
        cfg_.params.strategy = ParamsSpec::Strategy::explicit_pairs;
      else
        err(kp + ": must be maxW, minS, or explicit");
    } else if (key == "min_s_tol") {
      want(tok, 1, 1, kp);
      cfg_.params.min_s_tol = num(tok[0], kp);
    } else if (key == "gamma") {
      for (const std::string& t : tok) cfg_.params.gamma.push_back(num(t, kp));
    } else if (key == "w") {
      for (const std::string& t : tok) cfg_.params.w.push_back(num(t, kp));
    } else {
      err("unknown key " + kp);
    }
  }

  void scenario_key(const std::string& key, const std::vector<std::string>& tok,
                    const std::string& raw) {
    const std::string kp = "scenario." + key;
    if (key == "kind") {
      want(tok, 1, 1, kp);
      if (tok[0] == "laplace")
        cfg_.scenario.kind = ScenarioSpec::Kind::laplace;
      else if (tok[0] == "csv")
        cfg_.scenario.kind = ScenarioSpec::Kind::csv;
      else
        err(kp + ": must be laplace or csv");
    } else if (key == "sigma") {
      want(tok, 1, 1, kp);
      cfg_.scenario.sigma = num(tok[0], kp);
    } else if (key == "T") {
      want(tok, 1, 1, kp);
      cfg_.scenario.T = static_cast<int>(count(tok[0], kp));
    } else if (key == "seed") {
      want(tok, 1, 1, kp);
      const long v = count(tok[0], kp);
      if (v < 0) err(kp + ": seed must be nonnegative");
      cfg_.scenario.seed = static_cast<std::uint64_t>(v);
    } else if (key == "path") {
      if (raw.empty()) err(kp + ": empty path");
      cfg_.scenario.path = raw;
    } else {
      err("unknown key " + kp);
    }
  }

  void run_key(const std::string& key, const std::vector<std::string>& tok,
               const std::string& raw) {
    const std::string kp = "run." + key;
    if (key == "policies") {
      if (tok.empty()) err(kp + ": needs at least one policy");
      cfg_.run.policies.clear();
      for (const std::string& t : tok) {
        try {
          cfg_.run.policies.push_back(policy_from_name(t));
        } catch (const error&) {
          err(kp + ": unknown policy '" + t + "'");
        }
      }
    } else if (key == "out") {
      if (raw.empty()) err(kp + ": empty path");
      cfg_.run.out = raw;
    } else {
      err("unknown key " + kp);
    }
  }

  void admm_key(const std::string& key, const std::vector<std::string>& tok) {
    const std::string kp = "admm." + key;
    if (key == "rho") {
      want(tok, 1, 1, kp);
      cfg_.admm.rho = num(tok[0], kp);
    } else if (key == "tol_primal") {
      want(tok, 1, 1, kp);
      cfg_.admm.tol_primal = num(tok[0], kp);
    } else if (key == "tol_obj") {
      want(tok, 1, 1, kp);
      cfg_.admm.tol_obj = num(tok[0], kp);
    } else if (key == "max_iter") {
      want(tok, 1, 1, kp);
      cfg_.admm.max_iter = count(tok[0], kp);
    } else if (key == "clusters") {
      want(tok, 1, 1, kp);
      cfg_.admm.clusters = static_cast<int>(count(tok[0], kp));
    } else if (key == "node_owner") {
      for (const std::string& t : tok)
        cfg_.admm.node_owner.push_back(static_cast<int>(count(t, kp)));
    } else if (key == "edge_owner") {
      for (const std::string& t : tok)
        cfg_.admm.edge_owner.push_back(static_cast<int>(count(t, kp)));
    } else {
      err("unknown key " + kp);
    }
  }

  ExperimentConfig build() {
    if (!nodes_.has_value()) fail(errc::parse, path_ + ": missing [grid] nodes");
    cfg_.grid.n = static_cast<int>(*nodes_);
    for (const RawEdge& e : raw_edges_) {
      cfg_.grid.edges.push_back({e.tail, e.head});
      cfg_.grid.susceptance.push_back(e.b);
      cfg_.grid.flow_limit.push_back(e.fmax);
    }
    validate_grid(cfg_.grid);

    for (const auto& [id, patch] : specific_) {
      (void)patch;
      if (id >= cfg_.grid.n)
        fail(errc::parse, path_ + ": [bus " + std::to_string(id) + "] but the grid has " +
                              std::to_string(cfg_.grid.n) + " buses");
    }
    for (int i = 0; i < cfg_.grid.n; ++i) {
      BusSpec bus;
      apply_patch(bus, wildcard_);
      auto it = specific_.find(i);
      const BusPatch* specific = it != specific_.end() ? &it->second : nullptr;
      if (specific != nullptr) apply_patch(bus, *specific);
      finalize_bus(bus, specific);
      try {
        validate_bus(bus);
      } catch (const error& e) {
        fail(e.code(), path_ + ": bus " + std::to_string(i) + ": " + e.detail());
      }
      cfg_.buses.push_back(std::move(bus));
    }

    const int n = cfg_.grid.n;
    if (cfg_.params.strategy == ParamsSpec::Strategy::explicit_pairs) {
      if (static_cast<int>(cfg_.params.gamma.size()) != n ||
          static_cast<int>(cfg_.params.w.size()) != n)
        fail(errc::parse, path_ + ": explicit strategy needs params.gamma and params.w with " +
                              std::to_string(n) + " values each");
    } else if (!cfg_.params.gamma.empty() || !cfg_.params.w.empty()) {
      fail(errc::parse, path_ + ": params.gamma and params.w are only used with strategy "
                               "explicit");
    }
    if (!(cfg_.params.min_s_tol > 0.0))
      fail(errc::parse, path_ + ": params.min_s_tol must be positive");

    if (cfg_.scenario.kind == ScenarioSpec::Kind::laplace) {
      if (!(cfg_.scenario.sigma > 0.0))
        fail(errc::parse, path_ + ": scenario.sigma must be positive");
      if (cfg_.scenario.T < 1) fail(errc::parse, path_ + ": scenario.T must be positive");
    } else if (cfg_.scenario.path.empty()) {
      fail(errc::parse, path_ + ": scenario.kind csv needs scenario.path");
    }

    if (cfg_.run.policies.empty())
      cfg_.run.policies = {Policy::no_storage, Policy::greedy, Policy::omg, Policy::offline};
    return cfg_;
  }

  static void apply_patch(BusSpec& bus, const BusPatch& p) {
    if (p.lambda) bus.storage.lambda = *p.lambda;
    if (p.s_min) bus.storage.s_min = *p.s_min;
    if (p.s_max) bus.storage.s_max = *p.s_max;
    if (p.u_min) bus.storage.u_min = *p.u_min;
    if (p.u_max) bus.storage.u_max = *p.u_max;
    if (p.mu_c) bus.storage.mu_c = *p.mu_c;
    if (p.mu_d) bus.storage.mu_d = *p.mu_d;
    if (p.s_init) bus.s_init = *p.s_init;
    if (!p.pieces.empty()) bus.cost.pieces = p.pieces;
    if (p.support) bus.support = *p.support;
    if (p.price) bus.price = *p.price;
    if (p.price_support) {
      bus.cost.p_min = p.price_support->first;
      bus.cost.p_max = p.price_support->second;
    }
  }

  void finalize_bus(BusSpec& bus, const BusPatch* specific) const {
    if (bus.cost.pieces.empty()) bus.cost.pieces = CostModel::negative_part().pieces;
    // infer the price support from the schedule unless a patch set it
    const bool has_support =
        wildcard_.price_support.has_value() || (specific && specific->price_support.has_value());
    if (!has_support) {
      if (bus.price.kind == PriceSchedule::Kind::constant) {
        bus.cost.p_min = bus.cost.p_max = bus.price.value;
      } else {
        bus.cost.p_min = std::min(bus.price.day_value, bus.price.night_value);
        bus.cost.p_max = std::max(bus.price.day_value, bus.price.night_value);
      }
    }
    const bool has_s_init =
        wildcard_.s_init.has_value() || (specific && specific->s_init.has_value());
    if (!has_s_init) bus.s_init = bus.storage.s_min;
  }

  std::string path_;
  long lineno_ = 0;
  Section section_ = Section::none;
  BusPatch* bus_patch_ = nullptr;
  BusPatch wildcard_;
  std::map<int, BusPatch> specific_;
  std::optional<long> nodes_;
  std::vector<RawEdge> raw_edges_;
  ExperimentConfig cfg_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& path) { return Parser(path).parse(); }

std::vector<AlgorithmParams> resolve_params(const ExperimentConfig& cfg) {
  std::vector<AlgorithmParams> out;
  for (size_t i = 0; i < cfg.buses.size(); ++i) {
    const BusSpec& bus = cfg.buses[i];
    const SubgradBounds sg = subgradient_bounds(bus.cost, bus.storage);
    AlgorithmParams p;
    switch (cfg.params.strategy) {
      case ParamsSpec::Strategy::max_w: p = select_max_w(bus.storage, sg); break;
      case ParamsSpec::Strategy::min_s:
        p = select_min_s(bus.storage, sg, cfg.params.min_s_tol);
        break;
      case ParamsSpec::Strategy::explicit_pairs:
        p.gamma = cfg.params.gamma[i];
        p.w = cfg.params.w[i];
        p.bound = suboptimality_M(bus.storage, p.gamma) / p.w;
        break;
    }
    try {
      validate_params(p, bus.storage, sg);
    } catch (const error& e) {
      fail(e.code(), "bus " + std::to_string(i) + ": " + e.detail());
    }
    out.push_back(p);
  }
  return out;
}

Scenario resolve_scenario(const ExperimentConfig& cfg) {
  if (cfg.scenario.kind == ScenarioSpec::Kind::csv)
    return load_csv_scenario(cfg.scenario.path, cfg.buses);
  return sample_laplace_scenario(cfg.buses, cfg.scenario.T, cfg.scenario.sigma,
                                 cfg.scenario.seed);
}

ClusterPartition resolve_partition(const ExperimentConfig& cfg) {
  ClusterPartition p;
  p.node_owner = cfg.admm.node_owner;
  p.edge_owner = cfg.admm.edge_owner;
  if (p.node_owner.empty()) p.node_owner.assign(cfg.grid.n, 0);
  if (p.edge_owner.empty()) p.edge_owner.assign(cfg.grid.edges.size(), 0);
  int top = cfg.admm.clusters;
  for (int o : p.node_owner) top = std::max(top, o + 1);
  for (int o : p.edge_owner) top = std::max(top, o + 1);
  p.clusters = top;
  validate_partition(cfg.grid, p);
  return p;
}

}  // namespace omgrid
