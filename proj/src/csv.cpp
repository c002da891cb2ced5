#include "omgrid/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>

namespace omgrid {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

[[noreturn]] void bad_row(const std::string& path, long lineno, const std::string& what) {
  fail(errc::parse, path + ":" + std::to_string(lineno) + ": " + what);
}

double parse_double(const std::string& field, const std::string& path, long lineno,
                    const char* name) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE)
    bad_row(path, lineno, std::string("cannot read ") + name + " from '" + field + "'");
  return v;
}

long parse_count(const std::string& field, const std::string& path, long lineno,
                 const char* name) {
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(field.c_str(), &end, 10);
  if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE || v < 0)
    bad_row(path, lineno, std::string("cannot read ") + name + " from '" + field + "'");
  return v;
}

class RowReader {
 public:
  explicit RowReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) fail(errc::parse, "cannot open " + path);
  }

  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (trim(line).empty()) continue;
      fields = split_fields(line);
      return true;
    }
    return false;
  }

  void expect_header(const char* header) {
    std::vector<std::string> fields;
    if (!next(fields)) fail(errc::parse, path_ + ": empty file");
    std::vector<std::string> want = split_fields(header);
    if (fields != want) bad_row(path_, lineno_, std::string("expected header '") + header + "'");
  }

  const std::string& path() const { return path_; }
  long lineno() const { return lineno_; }

 private:
  std::string path_;
  std::ifstream in_;
  long lineno_ = 0;
};

class RowWriter {
 public:
  explicit RowWriter(const std::string& path) : path_(path), out_(path) {
    if (!out_) fail(errc::parse, "cannot open " + path + " for writing");
  }

  void raw(const std::string& s) { out_ << s; }
  void num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out_ << buf;
  }
  void comma() { out_ << ','; }
  void end_row() { out_ << '\n'; }

  ~RowWriter() { out_.flush(); }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace

Scenario load_csv_scenario(const std::string& path, const std::vector<BusSpec>& buses) {
  const int n = static_cast<int>(buses.size());
  RowReader reader(path);

  std::vector<std::string> fields;
  if (!reader.next(fields)) fail(errc::parse, path + ": empty file");
  bool with_price;
  if (fields == split_fields("t,bus,delta"))
    with_price = false;
  else if (fields == split_fields("t,bus,delta,price"))
    with_price = true;
  else
    bad_row(path, reader.lineno(), "expected header 't,bus,delta' or 't,bus,delta,price'");

  struct Row {
    long t;
    int bus;
    double delta, price;
  };
  std::vector<Row> rows;
  long max_t = -1;
  while (reader.next(fields)) {
    if (fields.size() != (with_price ? 4u : 3u))
      bad_row(path, reader.lineno(),
              "expected " + std::to_string(with_price ? 4 : 3) + " fields, got " +
                  std::to_string(fields.size()));
    Row row;
    row.t = parse_count(fields[0], path, reader.lineno(), "period");
    row.bus = static_cast<int>(parse_count(fields[1], path, reader.lineno(), "bus"));
    if (row.bus >= n)
      bad_row(path, reader.lineno(),
              "bus " + std::to_string(row.bus) + " is outside 0.." + std::to_string(n - 1));
    row.delta = parse_double(fields[2], path, reader.lineno(), "delta");
    row.price = with_price ? parse_double(fields[3], path, reader.lineno(), "price")
                           : buses[row.bus].price.at(row.t);
    max_t = std::max(max_t, row.t);
    rows.push_back(row);
  }
  if (rows.empty()) fail(errc::schema, path + ": no data rows");

  // every (t, bus) exactly once
  std::vector<size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return rows[a].t != rows[b].t ? rows[a].t < rows[b].t : rows[a].bus < rows[b].bus;
  });
  size_t at = 0;
  for (long t = 0; t <= max_t; ++t)
    for (int i = 0; i < n; ++i) {
      if (at < order.size() && rows[order[at]].t == t && rows[order[at]].bus == i) {
        ++at;
        while (at < order.size() && rows[order[at]].t == t && rows[order[at]].bus == i)
          fail(errc::schema, path + ": duplicate entry for period " + std::to_string(t) +
                                 ", bus " + std::to_string(i));
      } else {
        fail(errc::schema, path + ": missing entry for period " + std::to_string(t) + ", bus " +
                               std::to_string(i));
      }
    }

  Scenario sc;
  sc.T = static_cast<int>(max_t + 1);
  sc.n = n;
  sc.seed = 0;
  sc.delta.resize(static_cast<size_t>(sc.T) * n);
  sc.price.resize(static_cast<size_t>(sc.T) * n);
  for (const Row& row : rows) {
    const size_t cell = static_cast<size_t>(row.t) * n + row.bus;
    sc.delta[cell] = row.delta;
    sc.price[cell] = row.price;
  }
  validate_scenario(sc, buses);
  return sc;
}

void write_scenario_csv(const std::string& path, const Scenario& sc) {
  RowWriter out(path);
  out.raw("t,bus,delta,price\n");
  for (int t = 0; t < sc.T; ++t)
    for (int i = 0; i < sc.n; ++i) {
      const size_t cell = static_cast<size_t>(t) * sc.n + i;
      out.raw(std::to_string(t));
      out.comma();
      out.raw(std::to_string(i));
      out.comma();
      out.num(sc.delta[cell]);
      out.comma();
      out.num(sc.price[cell]);
      out.end_row();
    }
}

void write_trajectory_csv(const std::string& path, const RunResult& run) {
  if (static_cast<int>(run.steps.size()) != run.T)
    fail(errc::contract, "run was recorded without per-step data");
  RowWriter out(path);
  out.raw("t,bus,s,u,r,theta\n");
  for (int t = 0; t < run.T; ++t) {
    const StepRecord& rec = run.steps[t];
    for (size_t i = 0; i < rec.s.size(); ++i) {
      out.raw(std::to_string(t));
      out.comma();
      out.raw(std::to_string(i));
      out.comma();
      out.num(rec.s[i]);
      out.comma();
      out.num(rec.sol.u[i]);
      out.comma();
      out.num(rec.sol.r[i]);
      out.comma();
      out.num(rec.sol.theta[i]);
      out.end_row();
    }
  }
}

void write_edges_csv(const std::string& path, const Grid& g, const RunResult& run) {
  if (static_cast<int>(run.steps.size()) != run.T)
    fail(errc::contract, "run was recorded without per-step data");
  RowWriter out(path);
  out.raw("t,edge,f\n");
  for (int t = 0; t < run.T; ++t)
    for (int e = 0; e < g.m(); ++e) {
      out.raw(std::to_string(t));
      out.comma();
      out.raw(std::to_string(e));
      out.comma();
      out.num(run.steps[t].sol.f[e]);
      out.end_row();
    }
}

void write_summary_csv(const std::string& path, const std::vector<PolicySummary>& rows) {
  RowWriter out(path);
  out.raw("policy,total_cost,avg_cost,savings_pct,bound,lower_bound\n");
  for (const PolicySummary& row : rows) {
    out.raw(row.policy);
    out.comma();
    out.num(row.total_cost);
    out.comma();
    out.num(row.avg_cost);
    out.comma();
    out.num(row.savings_pct);
    out.comma();
    out.num(row.bound);
    out.comma();
    out.num(row.lower_bound);
    out.end_row();
  }
}

void write_trace_csv(const std::string& path, const std::vector<AdmmIterationStats>& trace) {
  RowWriter out(path);
  out.raw("iteration,objective,residual,messages,inter_cluster\n");
  for (size_t k = 0; k < trace.size(); ++k) {
    out.raw(std::to_string(k + 1));
    out.comma();
    out.num(trace[k].objective);
    out.comma();
    out.num(trace[k].residual);
    out.comma();
    out.raw(std::to_string(trace[k].messages));
    out.comma();
    out.raw(std::to_string(trace[k].inter_cluster));
    out.end_row();
  }
}

void write_params_csv(const std::string& path, const std::vector<AlgorithmParams>& params) {
  RowWriter out(path);
  out.raw("bus,gamma,w,bound\n");
  for (size_t i = 0; i < params.size(); ++i) {
    out.raw(std::to_string(i));
    out.comma();
    out.num(params[i].gamma);
    out.comma();
    out.num(params[i].w);
    out.comma();
    out.num(params[i].bound);
    out.end_row();
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path) {
  RowReader reader(path);
  reader.expect_header("t,bus,s,u,r,theta");
  std::vector<TrajectoryRow> rows;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() != 6) bad_row(path, reader.lineno(), "expected 6 fields");
    TrajectoryRow row;
    row.t = parse_count(fields[0], path, reader.lineno(), "period");
    row.bus = static_cast<int>(parse_count(fields[1], path, reader.lineno(), "bus"));
    row.s = parse_double(fields[2], path, reader.lineno(), "s");
    row.u = parse_double(fields[3], path, reader.lineno(), "u");
    row.r = parse_double(fields[4], path, reader.lineno(), "r");
    row.theta = parse_double(fields[5], path, reader.lineno(), "theta");
    rows.push_back(row);
  }
  return rows;
}

std::vector<EdgeFlowRow> read_edges_csv(const std::string& path) {
  RowReader reader(path);
  reader.expect_header("t,edge,f");
  std::vector<EdgeFlowRow> rows;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() != 3) bad_row(path, reader.lineno(), "expected 3 fields");
    EdgeFlowRow row;
    row.t = parse_count(fields[0], path, reader.lineno(), "period");
    row.edge = static_cast<int>(parse_count(fields[1], path, reader.lineno(), "edge"));
    row.f = parse_double(fields[2], path, reader.lineno(), "f");
    rows.push_back(row);
  }
  return rows;
}

std::vector<PolicySummary> read_summary_csv(const std::string& path) {
  RowReader reader(path);
  reader.expect_header("policy,total_cost,avg_cost,savings_pct,bound,lower_bound");
  std::vector<PolicySummary> rows;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() != 6) bad_row(path, reader.lineno(), "expected 6 fields");
    PolicySummary row;
    row.policy = fields[0];
    row.total_cost = parse_double(fields[1], path, reader.lineno(), "total_cost");
    row.avg_cost = parse_double(fields[2], path, reader.lineno(), "avg_cost");
    row.savings_pct = parse_double(fields[3], path, reader.lineno(), "savings_pct");
    row.bound = parse_double(fields[4], path, reader.lineno(), "bound");
    row.lower_bound = parse_double(fields[5], path, reader.lineno(), "lower_bound");
    rows.push_back(row);
  }
  return rows;
}

}  // namespace omgrid
