#include "cptt/greedy.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

namespace cptt {

namespace {

constexpr double kZeroTermRelative = 1e-13;
constexpr double kStableNormSwitch = 1e-3;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string order_string(const std::vector<CpttDiagnostics>& diags) {
  std::string s;
  for (std::size_t b = 0; b < diags.size(); ++b) {
    if (b) s += '|';
    for (std::size_t i = 0; i < diags[b].order.size(); ++i) {
      if (i) s += '-';
      s += std::to_string(diags[b].order[i]);
    }
  }
  return s;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ALS: return "als";
    case Method::ASVD: return "asvd";
    case Method::CPTT: return "cptt";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "als") return Method::ALS;
  if (lower == "asvd") return Method::ASVD;
  if (lower == "cptt" || lower == "cp-tt") return Method::CPTT;
  throw ArgumentError("unknown method '" + std::string(name) + "' (expected als, asvd or cptt)");
}

void GreedyConfig::validate() const {
  if (target_rank < 1) throw ArgumentError("target_rank must be at least 1");
  if (!(rel_tol >= 0.0)) throw ArgumentError("rel_tol must be non-negative");
  if (rank_k_update < 1) throw ArgumentError("rank_k_update must be at least 1");
  if (rank_k_update > 1 && method != Method::CPTT) {
    throw ArgumentError("rank_k_update > 1 requires the CP-TT method");
  }
  if (!(regularization >= 0.0)) throw ArgumentError("regularization must be non-negative");
  if (method != Method::CPTT) solver.validate();
}

std::string format_real(double x) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  (void)ec;
  return std::string(buf.data(), end);
}

std::vector<double> optimize_coefficients(std::span<const PureTensor> terms, const CpTensor& f,
                                          double regularization) {
  const auto k = static_cast<Eigen::Index>(terms.size());
  if (k == 0) return {};
  const std::vector<double> ones(terms.size(), 1.0);
  const CpTensor t = from_terms(f.grid(), terms, ones);

  Matrix gram = Matrix::Ones(k, k);
  Matrix cross = Matrix::Ones(f.weights().size(), k);
  for (Index m = 0; m < f.order(); ++m) {
    gram.array() *= (t.factor(m).transpose() * t.factor(m)).array();
    cross.array() *= (f.factor(m).transpose() * t.factor(m)).array();
  }
  const Vector& w = t.weights();
  gram = w.asDiagonal() * gram * w.asDiagonal();
  gram = 0.5 * (gram + gram.transpose()).eval();
  const Vector b = w.cwiseProduct(cross.transpose() * f.weights());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("coefficient system eigensolver failed");
  const Vector& lambda = eig.eigenvalues();
  const double lambda_max = lambda.size() ? lambda(lambda.size() - 1) : 0.0;
  Vector c = Vector::Zero(k);
  if (lambda_max > 0.0) {
    const double cutoff = regularization * lambda_max;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (lambda(j) > cutoff) {
        const auto v = eig.eigenvectors().col(j);
        c += (v.dot(b) / lambda(j)) * v;
      }
    }
  }
  return {c.data(), c.data() + c.size()};
}

double residual_norm(const CpTensor& r, double reference) {
  const double gram = norm(r);
  if (gram >= kStableNormSwitch * reference) return gram;
  return stable_norm(r);
}

GreedyResult greedy_decompose(const CpTensor& f, const GreedyConfig& cfg) {
  cfg.validate();
  if (f.order() < 2) throw DimensionError("greedy_decompose: tensor order must be at least 2");

  GreedyResult result{CpTensor(f.grid()), {}};
  GreedyTrace& trace = result.trace;
  const double fnorm = norm(f);
  trace.input_norm = fnorm;
  if (f.rank() == 0 || fnorm == 0.0) {
    trace.note = "input is the zero tensor";
    return result;
  }

  CpTensor residual = f;
  std::vector<double> coefficients;
  for (Index iteration = 1; trace.terms.size() < cfg.target_rank; ++iteration) {
    GreedyStep step;
    step.iteration = iteration;
    step.method = cfg.method;

    std::vector<PureTensor> added;
    switch (cfg.method) {
      case Method::ALS:
      case Method::ASVD: {
        FixedPointConfig solver = cfg.solver;
        solver.rng_seed = splitmix64(cfg.solver.rng_seed ^ splitmix64(iteration));
        SolveOutcome out = cfg.method == Method::ALS ? als_rank1(residual, solver)
                                                     : asvd_rank1(residual, solver);
        step.converged = out.converged;
        step.solver_iterations = out.iterations;
        step.solver_eta = out.final_eta;
        added.push_back(std::move(out.term));
        break;
      }
      case Method::CPTT: {
        Index k = std::min(cfg.rank_k_update, cfg.target_rank - trace.terms.size());
        k = std::min(k, residual.rank());
        for (Index n : residual.grid().dims()) k = std::min(k, n);
        if (k <= 1) {
          CpttResult one = cptt_rank1(residual, cfg.pod_path);
          added.push_back(std::move(one.term));
          step.cptt.push_back(std::move(one.diagnostics));
        } else {
          CpttRankKResult many = cptt_rankk(residual, k, cfg.pod_path);
          added = std::move(many.terms);
          step.cptt = std::move(many.branches);
        }
        break;
      }
    }

    std::erase_if(added, [&](const PureTensor& t) { return t.norm() <= kZeroTermRelative * fnorm; });
    if (added.empty()) {
      trace.note = "stopped at iteration " + std::to_string(iteration) +
                   ": solver returned a numerically zero term";
      break;
    }

    trace.terms.insert(trace.terms.end(), added.begin(), added.end());
    coefficients = optimize_coefficients(trace.terms, f, cfg.regularization);
    const CpTensor approx = from_terms(f.grid(), trace.terms, coefficients);
    residual = axpy(-1.0, approx, f);

    step.added = std::move(added);
    step.coefficients = coefficients;
    step.rel_residual = residual_norm(residual, fnorm) / fnorm;
    if (!step.converged) step.note = "inner solver hit max_iters";
    trace.steps.push_back(std::move(step));
    if (trace.steps.back().rel_residual <= cfg.rel_tol) break;
  }

  result.approximation = from_terms(f.grid(), trace.terms, coefficients);
  return result;
}

void write_trace_csv(const GreedyTrace& trace, std::ostream& out) {
  out << "iter,method,rank,rel_residual,converged,order\n";
  for (const GreedyStep& s : trace.steps) {
    out << s.iteration << ',' << to_string(s.method) << ',' << s.rank() << ','
        << format_real(s.rel_residual) << ',' << (s.converged ? 1 : 0) << ','
        << order_string(s.cptt) << '\n';
  }
}

}  // namespace cptt
