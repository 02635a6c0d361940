#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "cptt/bench.hpp"

namespace cptt {

double regularity_beta(Regularity reg, Index d) {
  const double half = static_cast<double>(d) / 2.0;
  return reg == Regularity::L2 ? half + 0.1 : half + 1.1;
}

void ExperimentConfig::validate() const {
  if (dims.empty()) throw ArgumentError("experiment needs at least one dimension");
  for (Index d : dims) {
    if (d < 2) throw ArgumentError("experiment dimensions must be at least 2");
  }
  if (n_functions < 1) throw ArgumentError("n_functions must be at least 1");
  if (methods.empty()) throw ArgumentError("experiment needs at least one method");
  if (max_rank < 1) throw ArgumentError("max_rank must be at least 1");
  for (Index r : report_ranks) {
    if (r < 1 || r > max_rank) {
      throw ArgumentError("report rank " + std::to_string(r) + " outside [1, max_rank]");
    }
  }
  if (workers < 1) throw ArgumentError("workers must be at least 1");
  solver.validate();
}

std::vector<ResultRow> run_cell(const ExperimentConfig& cfg, Index dim, std::uint64_t seed,
                                Method method) {
  const double beta = regularity_beta(cfg.regularity, dim);
  std::vector<ResultRow> rows;
  rows.reserve(cfg.max_rank);
  ResultRow base;
  base.method = method;
  base.dim = dim;
  base.beta = beta;
  base.seed = seed;
  try {
    RandomFunctionSpec spec{dim, beta, cfg.n_points, cfg.lmax, seed, cfg.term_budget};
    const RandomFunction fn = gen_random_function(spec);
    GreedyConfig gc;
    gc.method = method;
    gc.target_rank = cfg.max_rank;
    gc.solver = cfg.solver;
    gc.solver.rng_seed = seed;
    const GreedyResult res = greedy_decompose(fn.tensor, gc);
    double residual = 1.0;
    bool converged = true;
    std::size_t step = 0;
    for (Index rank = 1; rank <= cfg.max_rank; ++rank) {
      // Ranks past an early stop repeat the last residual.
      while (step < res.trace.steps.size() && res.trace.steps[step].rank() <= rank) {
        residual = res.trace.steps[step].rel_residual;
        converged = res.trace.steps[step].converged;
        ++step;
      }
      ResultRow row = base;
      row.rank = rank;
      row.rel_residual = residual;
      row.converged = converged;
      rows.push_back(row);
    }
  } catch (const std::exception&) {
    rows.clear();
    for (Index rank = 1; rank <= cfg.max_rank; ++rank) {
      ResultRow row = base;
      row.rank = rank;
      row.rel_residual = 1.0;
      row.converged = false;
      row.error = true;
      rows.push_back(row);
    }
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Cell {
    Index dim;
    std::uint64_t seed;
    Method method;
  };
  std::vector<Cell> cells;
  for (Index d : cfg.dims) {
    for (Index i = 0; i < cfg.n_functions; ++i) {
      for (Method m : cfg.methods) cells.push_back({d, cfg.base_seed + i, m});
    }
  }

  std::vector<std::vector<ResultRow>> slots(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      slots[c] = run_cell(cfg, cells[c].dim, cells[c].seed, cells[c].method);
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(cfg.workers, cells.size());
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }

  ExperimentResult out;
  for (auto& s : slots) out.rows.insert(out.rows.end(), s.begin(), s.end());
  std::sort(out.rows.begin(), out.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.method, a.dim, a.beta, a.seed, a.rank) <
           std::tie(b.method, b.dim, b.beta, b.seed, b.rank);
  });

  for (Index d : cfg.dims) {
    for (Index i = 0; i < cfg.n_functions; ++i) {
      RandomFunctionMetadata meta;
      try {
        RandomFunctionSpec spec{d, regularity_beta(cfg.regularity, d), cfg.n_points, cfg.lmax,
                                cfg.base_seed + i, cfg.term_budget};
        meta = gen_random_function(spec).metadata;
      } catch (const std::exception&) {
        meta.seed = cfg.base_seed + i;
      }
      out.metadata.push_back(std::move(meta));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

using Kind = ParseError::Kind;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ParseError(Kind::Schema, where + ": cannot parse '" + text + "'");
  }
  return value;
}

bool parse_flag(const std::string& text, const std::string& where) {
  if (text == "0") return false;
  if (text == "1") return true;
  throw ParseError(Kind::Schema, where + ": expected 0 or 1, got '" + text + "'");
}

}  // namespace

void write_results_csv(std::span<const ResultRow> rows, std::ostream& out) {
  out << kResultsHeader << '\n';
  for (const ResultRow& r : rows) {
    out << to_string(r.method) << ',' << r.dim << ',' << format_real(r.beta) << ',' << r.seed << ','
        << r.rank << ',' << format_real(r.rel_residual) << ',' << (r.converged ? 1 : 0) << ','
        << (r.error ? 1 : 0) << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultsHeader) {
    throw ParseError(Kind::Schema, std::string("line 1: expected header '") + kResultsHeader + "'");
  }
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto f = split(line, ',');
    if (f.size() != 8) {
      throw ParseError(Kind::Schema, where + ": expected 8 fields, found " + std::to_string(f.size()));
    }
    ResultRow r;
    try {
      r.method = parse_method(f[0]);
    } catch (const ArgumentError& e) {
      throw ParseError(Kind::Schema, where + ": " + e.what());
    }
    r.dim = parse_number<Index>(f[1], where + " dim");
    r.beta = parse_number<double>(f[2], where + " beta");
    r.seed = parse_number<std::uint64_t>(f[3], where + " seed");
    r.rank = parse_number<Index>(f[4], where + " rank");
    r.rel_residual = parse_number<double>(f[5], where + " rel_residual");
    r.converged = parse_flag(f[6], where + " converged");
    r.error = parse_flag(f[7], where + " error_flag");
    if (!r.error && !std::isfinite(r.rel_residual)) {
      throw ParseError(Kind::NonFinite, where + ": non-finite rel_residual");
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<SummaryRow> summarize(std::span<const ResultRow> rows,
                                  std::span<const Index> report_ranks) {
  const std::set<Index> wanted(report_ranks.begin(), report_ranks.end());
  struct Acc {
    std::vector<double> values;
    Index excluded = 0;
  };
  std::map<std::tuple<Index, Method, Index>, Acc> groups;
  for (const ResultRow& r : rows) {
    if (!wanted.contains(r.rank)) continue;
    Acc& acc = groups[{r.dim, r.method, r.rank}];
    if (r.error) ++acc.excluded;
    else acc.values.push_back(r.rel_residual);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, acc] : groups) {
    SummaryRow s;
    std::tie(s.dim, s.method, s.rank) = key;
    s.n = acc.values.size();
    s.excluded = acc.excluded;
    if (s.n > 0) {
      double sum = 0.0;
      for (double v : acc.values) sum += v;
      s.mean = sum / static_cast<double>(s.n);
      if (s.n > 1) {
        double ss = 0.0;
        for (double v : acc.values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
      }
    } else {
      s.mean = std::numeric_limits<double>::quiet_NaN();
      s.std = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(s);
  }
  return out;
}

void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out) {
  out << kSummaryHeader << '\n';
  for (const SummaryRow& s : rows) {
    out << s.dim << ',' << to_string(s.method) << ',' << s.rank << ',' << format_real(s.mean) << ','
        << format_real(s.std) << ',' << s.n << ',' << s.excluded << '\n';
  }
}

// ---------------------------------------------------------------------------
// Campaign config

namespace {

std::vector<Index> parse_index_list(const std::string& value, const std::string& key) {
  std::vector<Index> out;
  for (const std::string& item : split(value, ',')) {
    out.push_back(parse_number<Index>(trim(item), key));
  }
  if (out.empty()) throw ParseError(Kind::Schema, key + ": empty list");
  return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError(Kind::Schema, key + ": expected true or false");
}

}  // namespace

BenchConfigFile parse_bench_config(std::istream& in) {
  static const std::set<std::string> required = {"dims",     "regularity", "n_functions",
                                                  "methods",  "max_rank",   "base_seed"};
  static const std::set<std::string> optional = {"report_ranks", "n_points", "lmax",
                                                 "term_budget",  "tol",      "max_iters",
                                                 "relaxed_als",  "output",   "summary",
                                                 "metadata"};
  std::map<std::string, std::pair<std::string, std::size_t>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no);
    if (eq == std::string::npos) throw ParseError(Kind::Syntax, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!required.contains(key) && !optional.contains(key)) {
      throw ParseError(Kind::Schema, where + ": unknown key '" + key + "'");
    }
    if (entries.contains(key)) throw ParseError(Kind::Schema, where + ": duplicate key '" + key + "'");
    entries[key] = {value, line_no};
  }

  std::string missing;
  for (const std::string& key : required) {
    if (!entries.contains(key)) missing += (missing.empty() ? "" : ", ") + key;
  }
  if (!missing.empty()) throw ParseError(Kind::Schema, "missing config keys: " + missing);

  BenchConfigFile out;
  ExperimentConfig& cfg = out.experiment;
  auto value = [&](const std::string& key) -> const std::string& { return entries.at(key).first; };
  auto where = [&](const std::string& key) {
    return "line " + std::to_string(entries.at(key).second) + " " + key;
  };

  cfg.dims = parse_index_list(value("dims"), where("dims"));
  const std::string reg = value("regularity");
  if (reg == "L2" || reg == "l2") cfg.regularity = Regularity::L2;
  else if (reg == "H1" || reg == "h1") cfg.regularity = Regularity::H1;
  else throw ParseError(Kind::Schema, where("regularity") + ": expected L2 or H1");
  cfg.n_functions = parse_number<Index>(value("n_functions"), where("n_functions"));
  cfg.methods.clear();
  for (const std::string& m : split(value("methods"), ',')) {
    try {
      cfg.methods.push_back(parse_method(trim(m)));
    } catch (const ArgumentError& e) {
      throw ParseError(Kind::Schema, where("methods") + ": " + e.what());
    }
  }
  cfg.max_rank = parse_number<Index>(value("max_rank"), where("max_rank"));
  cfg.base_seed = parse_number<std::uint64_t>(value("base_seed"), where("base_seed"));

  if (entries.contains("report_ranks")) {
    cfg.report_ranks = parse_index_list(value("report_ranks"), where("report_ranks"));
  } else {
    std::erase_if(cfg.report_ranks, [&](Index r) { return r > cfg.max_rank; });
    if (cfg.report_ranks.empty()) cfg.report_ranks = {cfg.max_rank};
  }
  if (entries.contains("n_points")) cfg.n_points = parse_number<Index>(value("n_points"), where("n_points"));
  if (entries.contains("lmax")) cfg.lmax = parse_number<Index>(value("lmax"), where("lmax"));
  if (entries.contains("term_budget")) {
    cfg.term_budget = parse_number<Index>(value("term_budget"), where("term_budget"));
  }
  if (entries.contains("tol")) cfg.solver.tol = parse_number<double>(value("tol"), where("tol"));
  if (entries.contains("max_iters")) {
    cfg.solver.max_iters = parse_number<Index>(value("max_iters"), where("max_iters"));
  }
  if (entries.contains("relaxed_als")) {
    cfg.solver.relaxed = parse_bool(value("relaxed_als"), where("relaxed_als"));
  }
  if (entries.contains("output")) out.output = value("output");
  if (entries.contains("summary")) out.summary = value("summary");
  if (entries.contains("metadata")) out.metadata = value("metadata");

  try {
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw ParseError(Kind::Schema, std::string("invalid campaign: ") + e.what());
  }
  return out;
}

}  // namespace cptt
